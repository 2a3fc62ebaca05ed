//! Lambda-continued-fraction coding of the geodesic flow on Hecke triangle
//! surfaces.
//!
//! The Hecke group `G_q` is generated by `S: z -> -1/z` and
//! `T: z -> z + lambda` with `lambda = 2 cos(pi/q)`. This crate implements
//! the continued fractions with digits in lambda-multiples attached to these
//! groups, their symbolic dynamics (forbidden blocks, rewriting, Markov
//! partitions, natural extension), the reduction theory of geodesics, the
//! cross-section of the geodesic flow with its first-return map in both a
//! symbolic and an independent geometric form, first-return times, closed
//! geodesic lengths, and the invariant measures of the interval maps.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`]
//! (f32 or f64); the `*64` aliases below fix the default double-precision
//! instantiation.

pub mod cfmaps;
pub mod codes;
pub mod context;
pub mod domain;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod lambda_exact;
pub mod measure;
pub mod reduction;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default double-precision instantiations.
pub type Context64 = context::HeckeContext<f64>;
pub type Mobius64 = context::Mobius<f64>;
pub type Partition64 = domain::Partition<f64>;
pub type Geodesic64 = geometry::GeodesicEndpoints<f64>;
pub type Tangent64 = geometry::TangentVector<f64>;
pub type SectionPoint64 = flow::SectionPoint<f64>;
pub type ReturnRecord64 = flow::ReturnRecord<f64>;
pub type Density64 = measure::PiecewiseDensity<f64>;
