//! Markov partition of `I_q`, the planar domains Omega / Omega* / Omega_s,
//! the natural extension and the first-return exponent data.

use crate::cfmaps::{expand_regular, f_q, f_q_star, nearest};
use crate::context::{HeckeContext, Parity};
use crate::error::{Error, Result};
use crate::scalar::{c, ci, Real};

/// Point of the planar domain (u along I_q, v along I_R).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarPoint<F> {
    pub u: F,
    pub v: F,
}

/// Markov partition data: the F_q-orbit of -lambda/2 (phi) and the
/// F_q*-orbit of -R (rj), both sorted, with interval/height accessors.
#[derive(Debug, Clone)]
pub struct Partition<F> {
    /// -lambda/2 = phi_0 < phi_1 < ... < phi_kappa = 0.
    pub phi: Vec<F>,
    /// r_0 = -R, then 0 > r_1 > r_2 > ... > r_kappa = r.
    pub rj: Vec<F>,
    /// Diagnostics raised during construction (e.g. ordering surprises).
    pub warnings: Vec<String>,
}

impl<F: Real> Partition<F> {
    pub fn kappa(&self) -> usize {
        self.phi.len() - 1
    }

    /// Interval I_j = [phi_{j-1}, phi_j) for j >= 1, mirrored for j <= -1.
    pub fn interval(&self, j: i32) -> (F, F) {
        let k = j.unsigned_abs() as usize;
        assert!(k >= 1 && k <= self.kappa());
        if j > 0 {
            (self.phi[k - 1], self.phi[k])
        } else {
            (-self.phi[k], -self.phi[k - 1])
        }
    }

    /// Height interval R_j = [r_j, R] for j >= 1, mirrored for j <= -1.
    pub fn height(&self, j: i32, r_big: F) -> (F, F) {
        let k = j.unsigned_abs() as usize;
        assert!(k >= 1 && k <= self.kappa());
        if j > 0 {
            (self.rj[k], r_big)
        } else {
            (-r_big, -self.rj[k])
        }
    }
}

/// Build the partition by iterating the generating maps from -lambda/2 and -R.
pub fn build_partition<F: Real>(ctx: &HeckeContext<F>) -> Result<Partition<F>> {
    let kappa = ctx.kappa as usize;
    let mut warnings = Vec::new();

    // Orbit of -lambda/2 under F_q; finite with kappa + 1 points ending at 0.
    let mut phi = vec![-ctx.half_lambda()];
    let mut cur = -ctx.half_lambda();
    for _ in 0..4 * kappa + 8 {
        match f_q(ctx, cur)? {
            None => break,
            Some(step) => {
                cur = step.next;
                phi.push(if cur.abs() <= ctx.eps { F::zero() } else { cur });
            }
        }
    }
    if phi.len() != kappa + 1 {
        return Err(Error::InternalConsistency(format!(
            "orbit of -lambda/2 has {} points, expected {}",
            phi.len(),
            kappa + 1
        )));
    }
    phi.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if (phi[kappa]).abs() > ctx.eps {
        return Err(Error::InternalConsistency("orbit of -lambda/2 does not reach 0".into()));
    }

    // Orbit of -R under F_q* with the r-side tie-break; closes into kappa + 1
    // distinct points.
    let mut orbit = vec![-ctx.r_big];
    let mut cur = -ctx.r_big;
    for _ in 0..4 * kappa + 8 {
        match f_q_star(ctx, cur)? {
            None => {
                return Err(Error::InternalConsistency(
                    "orbit of -R hit the fixed point 0".into(),
                ))
            }
            Some(step) => {
                cur = step.next;
                if orbit.iter().any(|&p| (p - cur).abs() <= c::<F>(100.0) * ctx.eps) {
                    break;
                }
                orbit.push(cur);
            }
        }
    }
    if orbit.len() != kappa + 1 {
        return Err(Error::InternalConsistency(format!(
            "orbit of -R has {} points, expected {}",
            orbit.len(),
            kappa + 1
        )));
    }
    // r_0 = -R stays in front; the rest are sorted descending.
    let mut rest: Vec<F> = orbit[1..].to_vec();
    rest.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if rest.iter().any(|&p| p >= F::zero()) {
        warnings.push("orbit of -R left the negative axis".into());
    }
    if (rest[kappa - 1] - ctx.r_small).abs() > c::<F>(100.0) * ctx.eps {
        warnings.push(format!(
            "smallest orbit point {} differs from r = {}",
            rest[kappa - 1],
            ctx.r_small
        ));
    }
    let mut rj = vec![-ctx.r_big];
    rj.extend(rest);

    // Interlacing check: r_{kappa+1-j} inside I_j.
    for j in 1..=kappa {
        let x = rj[kappa + 1 - j];
        let (a, b) = (phi[j - 1], phi[j]);
        if !(x >= a - ctx.eps && x < b + ctx.eps) {
            warnings.push(format!("interlacing failed for j={j}"));
        }
    }

    Ok(Partition { phi, rj, warnings })
}

/// Index j with u in I_j (half-open), |j| <= kappa; 0 and points outside I_q
/// have no interval.
pub fn locate<F: Real>(ctx: &HeckeContext<F>, part: &Partition<F>, u: F) -> Result<i32> {
    if u.abs() <= ctx.eps || u.abs() > ctx.half_lambda() + ctx.eps {
        return Err(Error::NoInterval(format!("{u} has no partition interval")));
    }
    let kappa = part.kappa();
    let x = if u < F::zero() { u } else { -u };
    // x in [-lambda/2, 0): find j with phi_{j-1} <= x < phi_j.
    let mut j = kappa;
    for k in 1..=kappa {
        if x < part.phi[k] {
            j = k;
            break;
        }
    }
    Ok(if u < F::zero() { j as i32 } else { -(j as i32) })
}

/// Region classification for a planar point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Outside,
    Omega,
    OmegaStrong,
}

#[derive(Debug, Clone, Copy)]
pub struct Membership {
    pub region: Region,
    /// Set when the point sits within eps of the region boundary.
    pub boundary: bool,
}

/// Membership in Omega = union of I_j x R_j, and in the strongly reduced
/// part Omega_s (|u| <= 2/(3 lambda) or u v < 0).
pub fn omega_membership<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    p: PlanarPoint<F>,
) -> Membership {
    let Ok(j) = locate(ctx, part, p.u) else {
        return Membership { region: Region::Outside, boundary: false };
    };
    let (lo, hi) = part.height(j, ctx.r_big);
    if p.v < lo - ctx.eps || p.v > hi + ctx.eps {
        return Membership { region: Region::Outside, boundary: false };
    }
    let (ia, ib) = part.interval(j);
    let boundary = (p.v - lo).abs() <= ctx.eps
        || (p.v - hi).abs() <= ctx.eps
        || (p.u - ia).abs() <= ctx.eps
        || (p.u - ib).abs() <= ctx.eps;
    let strong_cut = c::<F>(2.0) / (c::<F>(3.0) * ctx.lambda);
    let strong = p.u.abs() <= strong_cut + ctx.eps || p.u * p.v < F::zero();
    Membership {
        region: if strong { Region::OmegaStrong } else { Region::Omega },
        boundary,
    }
}

/// Natural extension step: `(u, v) -> (F_q u, -1/(v + a1 lambda))`.
pub fn natural_extension<F: Real>(
    ctx: &HeckeContext<F>,
    p: PlanarPoint<F>,
) -> Result<(PlanarPoint<F>, i64)> {
    if p.u.abs() <= ctx.eps {
        return Err(Error::UndefinedStep("natural extension undefined at u = 0".into()));
    }
    let step = f_q(ctx, p.u)?.expect("u != 0 checked above");
    let den = p.v + ci::<F>(step.digit) * ctx.lambda;
    if den.abs() <= ctx.eps {
        return Err(Error::UndefinedStep("v-side division by zero".into()));
    }
    Ok((PlanarPoint { u: step.next, v: -den.recip() }, step.digit))
}

/// Inverse step: `(u, v) -> (-1/(u + b1 lambda), F_q* v)`.
pub fn natural_extension_inv<F: Real>(
    ctx: &HeckeContext<F>,
    p: PlanarPoint<F>,
) -> Result<(PlanarPoint<F>, i64)> {
    if p.v.abs() <= ctx.eps {
        return Err(Error::UndefinedStep("inverse extension undefined at v = 0".into()));
    }
    let step = f_q_star(ctx, p.v)?.expect("v != 0 checked above");
    let den = p.u + ci::<F>(step.digit) * ctx.lambda;
    if den.abs() <= ctx.eps {
        return Err(Error::UndefinedStep("u-side division by zero".into()));
    }
    Ok((PlanarPoint { u: -den.recip(), v: step.next }, step.digit))
}

/// The pair (K, n): how many generating-map steps the first return takes and
/// which cross-section component it lands on.
///
/// K counts the leading run of digits equal to sign(a0) in the expansion of
/// xi; n refines the published case table by the landing window |F^K xi| <=
/// lambda + 1 that separates the two corner components (validated against the
/// geometric tracer).
pub fn first_return_exponent<F: Real>(ctx: &HeckeContext<F>, xi: F) -> Result<(usize, i32)> {
    if xi.abs() <= ctx.half_lambda() + ctx.eps {
        return Err(Error::OutOfDomain(format!(
            "first-return exponent needs |xi| > lambda/2, got {xi}"
        )));
    }
    let code = expand_regular(ctx, xi, (2 * ctx.q + 8) as usize)?;
    let a0 = code.leading;
    let eps_sign = a0.signum();
    let digits = &code.head;
    if digits.is_empty() {
        return Err(Error::CuspGeodesic(format!("{xi} has a finite expansion")));
    }
    let k = digits
        .iter()
        .position(|&d| d != eps_sign)
        .map(|p| p + 1)
        .ok_or_else(|| {
            Error::InternalConsistency("expansion is a constant run of +/-1".into())
        })?;
    let a_k = digits[k - 1];
    let h = ctx.h as usize;

    // Landing xi after k steps of ST^{-a} (numeric window test).
    let mut land = xi;
    for _ in 0..k {
        let a = nearest(ctx, land)?;
        land = -(land - ci::<F>(a) * ctx.lambda).recip();
    }
    let in_corner_window = land.abs() <= ctx.lambda + F::one() + ctx.eps;

    let n = match ctx.parity {
        Parity::Even => {
            if k == h + 1 {
                eps_sign
            } else if k == h && a_k == 2 * eps_sign && in_corner_window {
                2 * eps_sign
            } else {
                0
            }
        }
        Parity::Odd => {
            if k == h + 1 && eps_sign * a_k >= 2 {
                if ctx.q == 3 || in_corner_window {
                    2 * eps_sign
                } else {
                    3 * eps_sign
                }
            } else {
                0
            }
        }
    };
    Ok((k, n as i32))
}
