//! Hecke triangle group data: the constants derived from `q` and projective
//! 2x2 matrix arithmetic for the generators `S: z -> -1/z`, `T: z -> z + lambda`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{c, ci, Real};

/// Parity of the index `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal<F> {
    Finite(F),
    Infinity,
}

impl<F: Real> ExtReal<F> {
    pub fn finite(self) -> Option<F> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinity => None,
        }
    }
}

impl<F: Real> From<F> for ExtReal<F> {
    fn from(x: F) -> Self {
        ExtReal::Finite(x)
    }
}

/// Generator tokens for group words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gen {
    S,
    /// `T^n` for any integer n (n = 1 is the plain generator).
    T(i64),
}

impl std::fmt::Display for Gen {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Gen::S => write!(f, "S"),
            Gen::T(1) => write!(f, "T"),
            Gen::T(-1) => write!(f, "T^-1"),
            Gen::T(n) => write!(f, "T^{}", n),
        }
    }
}

/// Projective real 2x2 matrix acting on the extended line and the upper
/// half plane. `M` and `-M` compare equal.
#[derive(Debug, Clone, Copy)]
pub struct Mobius<F> {
    pub a: F,
    pub b: F,
    pub c: F,
    pub d: F,
}

impl<F: Real> Mobius<F> {
    pub fn new(a: F, b: F, cc: F, d: F) -> Self {
        Mobius { a, b, c: cc, d }.normalized()
    }

    pub fn identity() -> Self {
        Mobius { a: F::one(), b: F::zero(), c: F::zero(), d: F::one() }
    }

    /// Rescale so |ad - bc| = 1. The overall sign is projectively irrelevant.
    pub fn normalized(self) -> Self {
        let det = self.a * self.d - self.b * self.c;
        let s = det.abs().sqrt();
        if s.is_zero() || !s.is_finite() {
            return self;
        }
        Mobius { a: self.a / s, b: self.b / s, c: self.c / s, d: self.d / s }
    }

    pub fn det(&self) -> F {
        self.a * self.d - self.b * self.c
    }

    /// Trace magnitude of the determinant-one representative.
    pub fn trace_abs(&self) -> F {
        (self.a + self.d).abs()
    }

    pub fn inverse(&self) -> Self {
        Mobius::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Mobius::new(
            self.a * rhs.a + self.b * rhs.c,
            self.a * rhs.b + self.b * rhs.d,
            self.c * rhs.a + self.d * rhs.c,
            self.c * rhs.b + self.d * rhs.d,
        )
    }

    /// Projective equality within `eps` (compares against both signs).
    pub fn approx_eq(&self, rhs: &Self, eps: F) -> bool {
        let close = |s: &Self, o: [F; 4]| {
            (s.a - o[0]).abs() <= eps
                && (s.b - o[1]).abs() <= eps
                && (s.c - o[2]).abs() <= eps
                && (s.d - o[3]).abs() <= eps
        };
        let r = rhs.normalized();
        let l = self.normalized();
        close(&l, [r.a, r.b, r.c, r.d]) || close(&l, [-r.a, -r.b, -r.c, -r.d])
    }

    pub fn is_identity(&self, eps: F) -> bool {
        self.approx_eq(&Mobius::identity(), eps)
    }

    /// Apply to a point of the extended real line.
    pub fn apply(&self, x: ExtReal<F>) -> ExtReal<F> {
        match x {
            ExtReal::Infinity => {
                if self.c.is_zero() {
                    ExtReal::Infinity
                } else {
                    ExtReal::Finite(self.a / self.c)
                }
            }
            ExtReal::Finite(x) => {
                let den = self.c * x + self.d;
                if den.is_zero() {
                    ExtReal::Infinity
                } else {
                    ExtReal::Finite((self.a * x + self.b) / den)
                }
            }
        }
    }

    /// Apply to a finite real point, returning +/- infinity as an IEEE value.
    pub fn apply_real(&self, x: F) -> F {
        (self.a * x + self.b) / (self.c * x + self.d)
    }

    /// Apply to a point of the upper half plane.
    pub fn apply_complex(&self, z: Complex<F>) -> Complex<F> {
        let num = z * self.a + self.b;
        let den = z * self.c + self.d;
        num / den
    }

    /// Derivative `1/(cz+d)^2` at a finite real point.
    pub fn derivative(&self, x: F) -> F {
        let den = self.c * x + self.d;
        let det = self.det();
        det / (den * den)
    }
}

/// Classification of a non-identity group element.
#[derive(Debug, Clone)]
pub enum MobiusClass<F> {
    Elliptic { fixed: Complex<F> },
    Parabolic { fixed: ExtReal<F> },
    Hyperbolic { attracting: ExtReal<F>, repelling: ExtReal<F> },
}

/// All q-dependent constants of the Hecke triangle group `G_q`.
///
/// Immutable after construction; operations on it are pure.
#[derive(Debug, Clone)]
pub struct HeckeContext<F> {
    pub q: u32,
    /// lambda_q = 2 cos(pi/q).
    pub lambda: F,
    /// (q-2)/2 for even q, (q-3)/2 for odd q.
    pub h: u32,
    /// Orbit count parameter: h for even q, 2h+1 = q-2 for odd q.
    pub kappa: u32,
    pub parity: Parity,
    /// Right endpoint of the dual interval I_R = [-R, R].
    pub r_big: F,
    /// r = R - lambda < 0.
    pub r_small: F,
    /// Fundamental domain vertex rho = e^{i pi / q}.
    pub rho: Complex<F>,
    /// Comparison tolerance for order decisions near partition boundaries.
    pub eps: F,
    /// Mantissa bits of the working scalar type.
    pub precision_bits: u32,
}

impl<F: Real> HeckeContext<F> {
    /// Build the context for index `q >= 3` with the default tolerance.
    pub fn new(q: u32) -> Result<Self> {
        Self::with_eps(q, F::default_eps())
    }

    pub fn with_eps(q: u32, eps: F) -> Result<Self> {
        if q < 3 {
            return Err(Error::InvalidParameter(format!("q must be >= 3, got {q}")));
        }
        if !(eps > F::zero()) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        let qf: F = ci(q as i64);
        let pi = F::from_f64(std::f64::consts::PI).unwrap();
        let theta = pi / qf;
        let lambda = c::<F>(2.0) * theta.cos();
        let parity = if q % 2 == 0 { Parity::Even } else { Parity::Odd };
        let h = match parity {
            Parity::Even => (q - 2) / 2,
            Parity::Odd => (q - 3) / 2,
        };
        let kappa = match parity {
            Parity::Even => h,
            Parity::Odd => 2 * h + 1,
        };
        // R = 1 for even q; positive root of R^2 + (2 - lambda) R - 1 = 0 for odd q.
        let r_big = match parity {
            Parity::Even => F::one(),
            Parity::Odd => {
                let p = c::<F>(2.0) - lambda;
                (-p + (p * p + c::<F>(4.0)).sqrt()) / c::<F>(2.0)
            }
        };
        let r_small = r_big - lambda;
        let rho = Complex::new(theta.cos(), theta.sin());
        Ok(HeckeContext {
            q,
            lambda,
            h,
            kappa,
            parity,
            r_big,
            r_small,
            rho,
            eps,
            precision_bits: {
                let eps_f64 = <F as num_traits::Float>::epsilon().to_f64().unwrap_or(f64::EPSILON);
                (-eps_f64.log2()).round() as u32 + 1
            },
        })
    }

    /// Half interval length: I_q = [-lambda/2, lambda/2].
    pub fn half_lambda(&self) -> F {
        self.lambda / c::<F>(2.0)
    }

    pub fn s(&self) -> Mobius<F> {
        Mobius::new(F::zero(), -F::one(), F::one(), F::zero())
    }

    pub fn t_pow(&self, n: i64) -> Mobius<F> {
        Mobius::new(F::one(), ci::<F>(n) * self.lambda, F::zero(), F::one())
    }

    pub fn t(&self) -> Mobius<F> {
        self.t_pow(1)
    }

    /// Compose a word in the generators, leftmost factor acting last.
    pub fn word(&self, word: &[Gen]) -> Mobius<F> {
        let mut m = Mobius::identity();
        for g in word {
            let f = match g {
                Gen::S => self.s(),
                Gen::T(n) => self.t_pow(*n),
            };
            m = m.compose(&f);
        }
        m
    }

    /// `(TS)^n` through the closed form with `B_n = sin(n pi / q)`:
    /// `[[B_{n+1}, -B_n], [B_n, -B_{n-1}]]` rescaled to determinant one.
    pub fn ts_power(&self, n: i64) -> Mobius<F> {
        let pi = F::from_f64(std::f64::consts::PI).unwrap();
        let theta = pi / ci::<F>(self.q as i64);
        let b = |k: i64| (ci::<F>(k) * theta).sin();
        let m = Mobius {
            a: b(n + 1),
            b: -b(n),
            c: b(n),
            d: -b(n - 1),
        };
        if m.det().abs() <= self.eps {
            // n a multiple of q: (TS)^n is the identity projectively.
            return Mobius::identity();
        }
        m.normalized()
    }

    /// The element fixing `r`: `(ST)^{h+1} T (ST)^h T` for odd q,
    /// `(ST)^{h-1} S T^2` for even q.
    pub fn a_r(&self) -> Mobius<F> {
        let st = self.s().compose(&self.t());
        let pow = |k: u32| {
            let mut m = Mobius::identity();
            for _ in 0..k {
                m = m.compose(&st);
            }
            m
        };
        match self.parity {
            Parity::Odd => pow(self.h + 1)
                .compose(&self.t())
                .compose(&pow(self.h))
                .compose(&self.t()),
            Parity::Even => {
                let mut m = if self.h >= 1 { pow(self.h - 1) } else { Mobius::identity() };
                m = m.compose(&self.s());
                m.compose(&self.t_pow(2))
            }
        }
    }

    /// Classify a non-identity element by its trace and return fixed points.
    pub fn classify(&self, m: &Mobius<F>) -> Result<MobiusClass<F>> {
        let m = m.normalized();
        if m.is_identity(self.eps) {
            return Err(Error::InvalidParameter("cannot classify the identity".into()));
        }
        let tr = m.a + m.d;
        let two = c::<F>(2.0);
        if (tr.abs() - two).abs() <= self.eps {
            // Parabolic: the single degenerate fixed point.
            let fixed = if m.c.abs() <= self.eps {
                ExtReal::Infinity
            } else {
                ExtReal::Finite((m.a - m.d) / (two * m.c))
            };
            return Ok(MobiusClass::Parabolic { fixed });
        }
        if tr.abs() < two {
            // Elliptic: fixed point in the upper half plane. An affine map
            // (c = 0) with determinant one cannot have |trace| < 2.
            if m.c.abs() <= self.eps {
                return Err(Error::InternalConsistency(
                    "elliptic element with vanishing lower-left entry".into(),
                ));
            }
            let re = (m.a - m.d) / (two * m.c);
            let im = (two * two - tr * tr).sqrt() / (two * m.c.abs());
            return Ok(MobiusClass::Elliptic { fixed: Complex::new(re, im) });
        }
        // Hyperbolic: two real fixed points; attracting where |M'| < 1.
        if m.c.abs() <= self.eps {
            let finite = ExtReal::Finite(m.b / (m.d - m.a));
            let (attracting, repelling) = if (m.a / m.d).abs() > F::one() {
                (ExtReal::Infinity, finite)
            } else {
                (finite, ExtReal::Infinity)
            };
            return Ok(MobiusClass::Hyperbolic { attracting, repelling });
        }
        let disc = (tr * tr - c::<F>(4.0)).sqrt();
        let z1 = (m.a - m.d + disc) / (two * m.c);
        let z2 = (m.a - m.d - disc) / (two * m.c);
        // |M'(z)| = 1/(cz+d)^2; the attracting point has |cz+d| > 1.
        let (attracting, repelling) = if (m.c * z1 + m.d).abs() > F::one() {
            (z1, z2)
        } else {
            (z2, z1)
        };
        Ok(MobiusClass::Hyperbolic {
            attracting: ExtReal::Finite(attracting),
            repelling: ExtReal::Finite(repelling),
        })
    }
}
