//! The generating interval maps `F_q` on `I_q = [-lambda/2, lambda/2]` and
//! `F_q*` on `I_R = [-R, R]`, and the digit-producing expansion algorithms.

use crate::codes::{Code, Flavor};
use crate::context::HeckeContext;
use crate::error::{Error, Result};
use crate::scalar::{c, ci, Real};

/// One expansion step: emitted digit and the next orbit point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigitStep<F> {
    pub digit: i64,
    pub next: F,
}

/// Floor variant used throughout: for x > 0, `n < x <= n+1`; for x <= 0,
/// `n <= x < n+1`. At positive integers it returns one less than usual.
pub fn floor_q<F: Real>(x: F) -> Result<i64> {
    if !x.is_finite() || x.abs() >= c::<F>(1e15) {
        return Err(Error::OutOfDomain(format!("floor argument {x} out of range")));
    }
    let n = if x > F::zero() {
        x.ceil() - F::one()
    } else {
        x.floor()
    };
    <i64 as num_traits::NumCast>::from(n)
        .ok_or_else(|| Error::OutOfDomain("floor result does not fit an integer".into()))
}

/// Nearest lambda-multiple `<x> = floor_q(x/lambda + 1/2)`.
pub fn nearest<F: Real>(ctx: &HeckeContext<F>, x: F) -> Result<i64> {
    floor_q(x / ctx.lambda + c::<F>(0.5))
}

/// Shifted nearest lambda-multiple for the dual map. At arguments where the
/// shifted floor sits exactly on an integer the digit is chosen so the image
/// lands on the r-orbit rather than the R-orbit (this keeps the orbit of -R
/// closed with kappa + 1 points).
pub fn nearest_star<F: Real>(ctx: &HeckeContext<F>, x: F) -> Result<i64> {
    let t = if x > F::zero() {
        x / ctx.lambda - ctx.r_small / ctx.lambda
    } else {
        x / ctx.lambda + ctx.r_big / ctx.lambda
    };
    let rounded = t.round();
    if (t - rounded).abs() <= ctx.eps {
        let n = <i64 as num_traits::NumCast>::from(rounded)
            .ok_or_else(|| Error::OutOfDomain("shifted floor out of range".into()))?;
        // Tie: pick the branch whose image is +/-r (the smaller magnitude).
        return Ok(if x > F::zero() { n } else { n - 1 });
    }
    floor_q(t)
}

/// One step of `F_q`: digit `<-1/x>` and image `-1/x - digit*lambda`.
/// Returns None at the fixed point 0, where the expansion stops.
pub fn f_q<F: Real>(ctx: &HeckeContext<F>, x: F) -> Result<Option<DigitStep<F>>> {
    if x.abs() > ctx.half_lambda() + ctx.eps {
        return Err(Error::OutOfDomain(format!("{x} outside I_q")));
    }
    if x.abs() <= ctx.eps {
        return Ok(None);
    }
    let w = -x.recip();
    let digit = nearest(ctx, w)?;
    if digit == 0 {
        return Err(Error::InternalConsistency(format!(
            "F_q produced digit 0 at x = {x}"
        )));
    }
    Ok(Some(DigitStep { digit, next: w - ci::<F>(digit) * ctx.lambda }))
}

/// One step of the dual map `F_q*` on `I_R`.
pub fn f_q_star<F: Real>(ctx: &HeckeContext<F>, y: F) -> Result<Option<DigitStep<F>>> {
    if y.abs() > ctx.r_big + ctx.eps {
        return Err(Error::OutOfDomain(format!("{y} outside I_R")));
    }
    if y.abs() <= ctx.eps {
        return Ok(None);
    }
    let w = -y.recip();
    let digit = nearest_star(ctx, w)?;
    if digit == 0 {
        return Err(Error::InternalConsistency(format!(
            "F_q* produced digit 0 at y = {y}"
        )));
    }
    Ok(Some(DigitStep { digit, next: w - ci::<F>(digit) * ctx.lambda }))
}

/// Regular expansion: `a0 = <x>`, then digits by iterating `F_q`. Stops early
/// when the orbit hits 0 (finite fraction).
pub fn expand_regular<F: Real>(ctx: &HeckeContext<F>, x: F, max_digits: usize) -> Result<Code> {
    if !x.is_finite() {
        return Err(Error::OutOfDomain("cannot expand a non-finite point".into()));
    }
    let a0 = nearest(ctx, x)?;
    let mut head = Vec::new();
    let mut cur = x - ci::<F>(a0) * ctx.lambda;
    for _ in 0..max_digits {
        match f_q(ctx, cur)? {
            None => break,
            Some(step) => {
                head.push(step.digit);
                cur = step.next;
            }
        }
    }
    Ok(Code::finite(a0, head, Flavor::Regular))
}

/// Dual regular expansion through `F_q*`.
pub fn expand_dual<F: Real>(ctx: &HeckeContext<F>, y: F, max_digits: usize) -> Result<Code> {
    if !y.is_finite() {
        return Err(Error::OutOfDomain("cannot expand a non-finite point".into()));
    }
    let b0 = nearest_star(ctx, y)?;
    let mut head = Vec::new();
    let mut cur = y - ci::<F>(b0) * ctx.lambda;
    for _ in 0..max_digits {
        match f_q_star(ctx, cur)? {
            None => break,
            Some(step) => {
                head.push(step.digit);
                cur = step.next;
            }
        }
    }
    Ok(Code::finite(b0, head, Flavor::Dual))
}

/// True when the expansion terminates within `budget` digits, i.e. the point
/// is G_q-equivalent to the cusp at infinity.
pub fn has_finite_expansion<F: Real>(ctx: &HeckeContext<F>, x: F, budget: usize) -> Result<bool> {
    let code = expand_regular(ctx, x, budget)?;
    Ok(code.head.len() < budget)
}
