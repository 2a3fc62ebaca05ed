//! Upper-half-plane computations: tangent vectors and endpoint coordinates,
//! the g-function, distances along geodesics, and intersections with the
//! fundamental-domain sides.

use num_complex::Complex;

use crate::context::HeckeContext;
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Oriented geodesic by its boundary endpoints: forward xi, backward eta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicEndpoints<F> {
    pub xi: F,
    pub eta: F,
}

impl<F: Real> GeodesicEndpoints<F> {
    pub fn new(xi: F, eta: F) -> Result<Self> {
        if !xi.is_finite() || !eta.is_finite() {
            return Err(Error::VerticalGeodesic("endpoints must be finite".into()));
        }
        if xi == eta {
            return Err(Error::InvalidParameter("endpoints must be distinct".into()));
        }
        Ok(GeodesicEndpoints { xi, eta })
    }

    pub fn neg(&self) -> Self {
        GeodesicEndpoints { xi: -self.xi, eta: -self.eta }
    }

    /// Image under a Moebius map (endpointwise).
    pub fn map(&self, m: &crate::context::Mobius<F>) -> Result<Self> {
        GeodesicEndpoints::new(m.apply_real(self.xi), m.apply_real(self.eta))
    }

    fn center(&self) -> F {
        (self.xi + self.eta) / c::<F>(2.0)
    }

    fn radius(&self) -> F {
        (self.xi - self.eta).abs() / c::<F>(2.0)
    }

    /// True when `z` lies on the semicircle carrying the geodesic.
    pub fn contains(&self, z: Complex<F>, tol: F) -> bool {
        let d = (z - Complex::new(self.center(), F::zero())).norm();
        (d - self.radius()).abs() <= tol * (F::one() + self.radius())
    }
}

/// Unit tangent vector (z, theta) with z = x + iy in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector<F> {
    pub x: F,
    pub y: F,
    /// Angle against the positive real axis, in [-pi, pi).
    pub theta: F,
}

/// Endpoints and arclength parameter of the geodesic through (z, theta):
/// `xi = x + y tan(theta) + y/|cos(theta)|`, `eta` with the minus sign, and
/// `s = ln tan(theta'/2 + pi/4)` with theta' the angle folded into
/// (-pi/2, pi/2) by the reflection symmetry.
pub fn tangent_to_geodesic<F: Real>(
    ctx: &HeckeContext<F>,
    tv: &TangentVector<F>,
) -> Result<(GeodesicEndpoints<F>, F)> {
    if tv.y <= F::zero() {
        return Err(Error::InvalidParameter("base point must be in the upper half plane".into()));
    }
    let cos = tv.theta.cos();
    if cos.abs() <= ctx.eps {
        return Err(Error::VerticalGeodesic(format!(
            "theta = {} gives a vertical geodesic",
            tv.theta
        )));
    }
    let mid = tv.x + tv.y * tv.theta.tan();
    let spread = tv.y / cos.abs();
    let g = GeodesicEndpoints::new(mid + spread, mid - spread)?;
    let pi = F::from_f64(std::f64::consts::PI).unwrap();
    let folded = fold_angle(tv.theta, pi);
    let s = (folded / c::<F>(2.0) + pi / c::<F>(4.0)).tan().ln();
    Ok((g, s))
}

/// Fold theta into (-pi/2, pi/2) by the reflection z -> -conj(z).
fn fold_angle<F: Real>(theta: F, pi: F) -> F {
    let half = pi / c::<F>(2.0);
    if theta > half {
        pi - theta
    } else if theta < -half {
        -pi - theta
    } else {
        theta
    }
}

/// Inverse of [`tangent_to_geodesic`].
pub fn geodesic_to_tangent<F: Real>(
    _ctx: &HeckeContext<F>,
    g: &GeodesicEndpoints<F>,
    s: F,
) -> Result<TangentVector<F>> {
    let pi = F::from_f64(std::f64::consts::PI).unwrap();
    let half = pi / c::<F>(2.0);
    let center = g.center();
    let radius = g.radius();
    // Position angle on the semicircle from s = ln tan(t/2), measured with
    // the rightward-travel convention.
    let t = c::<F>(2.0) * s.exp().atan();
    let rightward = g.eta < g.xi;
    let (pos, theta) = if rightward {
        let pos = t;
        (pos, t - half)
    } else {
        // Mirror of the rightward picture.
        let pos = pi - t;
        let theta = -half - t;
        let theta = if theta < -pi { theta + c::<F>(2.0) * pi } else { theta };
        (pos, theta)
    };
    let z = Complex::new(center, F::zero())
        + Complex::new(radius * pos.cos(), radius * pos.sin());
    Ok(TangentVector { x: z.re, y: z.im, theta })
}

/// `g(z, xi) = |z - xi|^2 / Im z`.
pub fn g_value<F: Real>(z: Complex<F>, xi: F) -> F {
    let d = z - Complex::new(xi, F::zero());
    d.norm_sqr() / z.im
}

/// Hyperbolic distance between two points on the geodesic, measured toward
/// xi: `d = ln g(z1, xi) - ln g(z2, xi)`.
pub fn distance_along<F: Real>(
    ctx: &HeckeContext<F>,
    g: &GeodesicEndpoints<F>,
    z1: Complex<F>,
    z2: Complex<F>,
) -> Result<F> {
    let tol = c::<F>(1e4) * ctx.eps;
    if !g.contains(z1, tol) || !g.contains(z2, tol) {
        return Err(Error::OffGeodesic("point not on the geodesic carrier".into()));
    }
    Ok((g_value(z1, g.xi) / g_value(z2, g.xi)).ln())
}

/// Independent distance oracle: `arccosh(1 + |z1-z2|^2 / (2 y1 y2))`.
pub fn hyperbolic_distance<F: Real>(z1: Complex<F>, z2: Complex<F>) -> F {
    let d2 = (z1 - z2).norm_sqr();
    let arg = F::one() + d2 / (c::<F>(2.0) * z1.im * z2.im);
    (arg + (arg * arg - F::one()).sqrt()).ln()
}

/// Carrier geometry of a fundamental-domain side arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideKind<F> {
    Vertical { a: F },
    Circular { center: F, radius: F },
}

/// One of the seven arcs L_{-3}..L_3 used by the cross-section machinery.
#[derive(Debug, Clone, Copy)]
pub struct SideArc<F> {
    pub id: i32,
    pub kind: SideKind<F>,
}

impl<F: Real> HeckeContext<F> {
    /// Side arc by index: 0 the unit circle, +-1 the verticals at +-lambda/2,
    /// +-2 the circles of radius 1/lambda centered at +-(lambda - 1/lambda),
    /// +-3 the unit-radius circles centered at +-lambda.
    pub fn side(&self, id: i32) -> SideArc<F> {
        let lam = self.lambda;
        match id {
            0 => SideArc { id, kind: SideKind::Circular { center: F::zero(), radius: F::one() } },
            1 | -1 => SideArc {
                id,
                kind: SideKind::Vertical { a: if id > 0 { self.half_lambda() } else { -self.half_lambda() } },
            },
            2 | -2 => {
                let center = lam - lam.recip();
                SideArc {
                    id,
                    kind: SideKind::Circular {
                        center: if id > 0 { center } else { -center },
                        radius: lam.recip(),
                    },
                }
            }
            3 | -3 => SideArc {
                id,
                kind: SideKind::Circular { center: if id > 0 { lam } else { -lam }, radius: F::one() },
            },
            _ => panic!("side index must lie in -3..=3"),
        }
    }

    /// Real interval of the bounded arc carried by the side, used to decide
    /// whether an intersection lies on the arc itself.
    fn arc_range(&self, id: i32) -> (F, F) {
        let lam = self.lambda;
        let half = self.half_lambda();
        match id {
            0 => (-half, half),
            // Vertical walls: the arc is the part above rho (by height).
            1 | -1 => (self.rho.im, F::infinity()),
            2 => (half, lam),
            -2 => (-lam, -half),
            3 => (half, half + lam),
            -3 => (-half - lam, -half),
            _ => unreachable!(),
        }
    }
}

/// Intersection of a geodesic with the full carrier of a side.
#[derive(Debug, Clone, Copy)]
pub struct SideCrossing<F> {
    pub z: Complex<F>,
    pub g_val: F,
    /// Whether the intersection lies on the bounded arc (for verticals: at or
    /// above the corner rho).
    pub on_arc: bool,
}

/// Crossing point and g-value of the geodesic with the side carrier; None
/// when they do not meet.
pub fn intersect_side<F: Real>(
    ctx: &HeckeContext<F>,
    side: &SideArc<F>,
    g: &GeodesicEndpoints<F>,
) -> Option<SideCrossing<F>> {
    let (xi, eta) = (g.xi, g.eta);
    match side.kind {
        SideKind::Vertical { a } => {
            let rad = (xi - a) * (a - eta);
            if rad <= F::zero() {
                return None;
            }
            let z = Complex::new(a, rad.sqrt());
            let g_val = (xi - eta).abs() * ((xi - a) / (a - eta)).abs().sqrt();
            let (lo, _) = ctx.arc_range(side.id);
            Some(SideCrossing { z, g_val, on_arc: z.im >= lo - ctx.eps })
        }
        SideKind::Circular { center, radius } => {
            let p = (xi - center) * (xi - center) - radius * radius;
            let q = radius * radius - (eta - center) * (eta - center);
            let rad = p * q;
            if rad <= F::zero() {
                return None;
            }
            let den = xi + eta - c::<F>(2.0) * center;
            let z = if den.abs() <= ctx.eps {
                // Degenerate: the crossing sits directly above the center.
                Complex::new(center, radius)
            } else {
                let re = (xi * eta + radius * radius - center * center) / den;
                let im = rad.sqrt() / den.abs();
                Complex::new(re, im)
            };
            let g_val = (xi - eta).abs() * (p / q).sqrt();
            let (lo, hi) = ctx.arc_range(side.id);
            let on_arc = z.re >= lo - ctx.eps && z.re <= hi + ctx.eps;
            Some(SideCrossing { z, g_val, on_arc })
        }
    }
}

/// Whether the geodesic crosses the wall arc `T^n L_1` (the vertical above
/// the translated corner): `eta < (n + 1/2) lambda < xi` and `delta_n < 0`,
/// with `delta(xi, eta) = eta - (xi lambda - 2)/(2 xi - lambda)`.
pub fn crosses_l1<F: Real>(ctx: &HeckeContext<F>, g: &GeodesicEndpoints<F>, n: i64) -> (bool, F) {
    let shift = F::from_i64(n).unwrap() * ctx.lambda;
    let (xi, eta) = (g.xi - shift, g.eta - shift);
    let delta = delta_fn(ctx, xi, eta);
    let ordered = eta < ctx.half_lambda() && ctx.half_lambda() < xi;
    (ordered && delta < F::zero(), delta)
}

fn delta_fn<F: Real>(ctx: &HeckeContext<F>, xi: F, eta: F) -> F {
    let den = c::<F>(2.0) * xi - ctx.lambda;
    if den.abs() <= ctx.eps {
        return F::infinity();
    }
    eta - (xi * ctx.lambda - c::<F>(2.0)) / den
}
