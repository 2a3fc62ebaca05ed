//! Exact arithmetic in Z[lambda] modulo the minimal polynomial of
//! lambda_q = 2 cos(pi/q). Group relations like `(ST)^q = Id` are certified
//! here with integer coefficients instead of floating point residuals.
//! Test support; the numerical path never depends on it.

/// Integer polynomial, little-endian coefficients, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly(pub Vec<i128>);

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly(vec![])
    }

    pub fn constant(n: i128) -> Self {
        if n == 0 {
            Self::zero()
        } else {
            IntPoly(vec![n])
        }
    }

    /// The indeterminate lambda.
    pub fn lambda() -> Self {
        IntPoly(vec![0, 1])
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn trim(mut v: Vec<i128>) -> Self {
        while v.last() == Some(&0) {
            v.pop();
        }
        IntPoly(v)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let n = self.0.len().max(rhs.0.len());
        let mut out = vec![0i128; n];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.0.get(i).copied().unwrap_or(0) + rhs.0.get(i).copied().unwrap_or(0);
        }
        Self::trim(out)
    }

    pub fn neg(&self) -> Self {
        IntPoly(self.0.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut out = vec![0i128; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::trim(out)
    }

    /// Remainder after division by a monic modulus.
    pub fn rem(&self, modulus: &Self) -> Self {
        assert!(modulus.0.last() == Some(&1), "modulus must be monic");
        let deg_m = modulus.0.len() - 1;
        let mut r = self.0.clone();
        while r.len() > deg_m {
            let lead = *r.last().unwrap();
            let shift = r.len() - 1 - deg_m;
            if lead != 0 {
                for (i, c) in modulus.0.iter().enumerate() {
                    r[shift + i] -= lead * c;
                }
            }
            r.pop();
        }
        Self::trim(r)
    }
}

/// Minimal polynomial of 2 cos(pi/q): monic with integer coefficients, built
/// from the conjugate roots 2 cos(k pi / q), gcd(k, 2q) = 1.
pub fn minimal_polynomial(q: u32) -> IntPoly {
    fn gcd(a: u32, b: u32) -> u32 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut coeffs = vec![1.0f64];
    for k in 1..q {
        if gcd(k, 2 * q) != 1 {
            continue;
        }
        let root = 2.0 * (k as f64 * std::f64::consts::PI / q as f64).cos();
        // Multiply by (x - root).
        let mut next = vec![0.0; coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * root;
        }
        coeffs = next;
    }
    let ints: Vec<i128> = coeffs
        .iter()
        .map(|c| {
            let r = c.round();
            assert!(
                (c - r).abs() < 1e-6,
                "minimal polynomial coefficient {c} is not close to an integer"
            );
            r as i128
        })
        .collect();
    IntPoly(ints)
}

/// 2x2 matrix over Z[lambda] / (minimal polynomial).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMobius {
    pub entries: [IntPoly; 4],
    modulus: IntPoly,
}

impl ExactMobius {
    pub fn identity(q: u32) -> Self {
        let m = minimal_polynomial(q);
        ExactMobius {
            entries: [
                IntPoly::constant(1),
                IntPoly::zero(),
                IntPoly::zero(),
                IntPoly::constant(1),
            ],
            modulus: m,
        }
    }

    pub fn s(q: u32) -> Self {
        let m = minimal_polynomial(q);
        ExactMobius {
            entries: [
                IntPoly::zero(),
                IntPoly::constant(-1),
                IntPoly::constant(1),
                IntPoly::zero(),
            ],
            modulus: m,
        }
    }

    pub fn t_pow(q: u32, n: i128) -> Self {
        let m = minimal_polynomial(q);
        let mut lam = IntPoly::lambda();
        lam = lam.mul(&IntPoly::constant(n));
        ExactMobius {
            entries: [IntPoly::constant(1), lam, IntPoly::zero(), IntPoly::constant(1)],
            modulus: m,
        }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.modulus, rhs.modulus);
        let red = |p: IntPoly| p.rem(&self.modulus);
        let [a, b, c, d] = &self.entries;
        let [e, f, g, h] = &rhs.entries;
        ExactMobius {
            entries: [
                red(a.mul(e).add(&b.mul(g))),
                red(a.mul(f).add(&b.mul(h))),
                red(c.mul(e).add(&d.mul(g))),
                red(c.mul(f).add(&d.mul(h))),
            ],
            modulus: self.modulus.clone(),
        }
    }

    /// Projective identity test: equal to +Id or -Id exactly.
    pub fn is_projective_identity(&self) -> bool {
        for sign in [1i128, -1] {
            let [a, b, c, d] = &self.entries;
            if *a == IntPoly::constant(sign)
                && b.is_zero()
                && c.is_zero()
                && *d == IntPoly::constant(sign)
            {
                return true;
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_polynomials_for_small_q() {
        assert_eq!(minimal_polynomial(3).0, vec![-1, 1]); // x - 1
        assert_eq!(minimal_polynomial(4).0, vec![-2, 0, 1]); // x^2 - 2
        assert_eq!(minimal_polynomial(5).0, vec![-1, -1, 1]); // x^2 - x - 1
        assert_eq!(minimal_polynomial(6).0, vec![-3, 0, 1]); // x^2 - 3
    }

    #[test]
    fn group_relations_certified_exactly() {
        for q in 3..=20u32 {
            let s = ExactMobius::s(q);
            let t = ExactMobius::t_pow(q, 1);
            assert!(s.compose(&s).is_projective_identity(), "S^2 != Id at q={q}");
            let st = s.compose(&t);
            let mut acc = ExactMobius::identity(q);
            for _ in 0..q {
                acc = acc.compose(&st);
            }
            assert!(acc.is_projective_identity(), "(ST)^q != Id at q={q}");
            // (TS)^q as well, since TS is conjugate to ST.
            let ts = t.compose(&s);
            let mut acc = ExactMobius::identity(q);
            for _ in 0..q {
                acc = acc.compose(&ts);
            }
            assert!(acc.is_projective_identity(), "(TS)^q != Id at q={q}");
        }
    }
}
