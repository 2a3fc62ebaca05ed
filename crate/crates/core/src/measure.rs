//! Invariant measures: the planar density on Omega, the projected piecewise
//! densities for F_q and for the factor of the return map, normalization
//! constants and empirical (Birkhoff) validation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cfmaps::{f_q, nearest};
use crate::context::{HeckeContext, Parity};
use crate::domain::{Partition, PlanarPoint};
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Two-variable invariant density `2 / (1 - uv)^2` on Omega.
pub fn planar_density<F: Real>(p: PlanarPoint<F>) -> Result<F> {
    let den = F::one() - p.u * p.v;
    if den.abs() <= F::epsilon().sqrt() {
        return Err(Error::Singularity(format!("uv = 1 at ({}, {})", p.u, p.v)));
    }
    Ok(c::<F>(2.0) / (den * den))
}

/// One interval piece `u -> 2 (alpha - beta) / ((1 - alpha u)(1 - beta u))`.
#[derive(Debug, Clone, Copy)]
pub struct Piece<F> {
    pub lo: F,
    pub hi: F,
    pub alpha: F,
    pub beta: F,
}

impl<F: Real> Piece<F> {
    pub fn density(&self, u: F) -> F {
        c::<F>(2.0) * (self.alpha - self.beta)
            / ((F::one() - self.alpha * u) * (F::one() - self.beta * u))
    }

    /// Antiderivative `2 ln((1 - beta u) / (1 - alpha u))`.
    fn primitive(&self, u: F) -> F {
        c::<F>(2.0) * ((F::one() - self.beta * u) / (F::one() - self.alpha * u)).ln()
    }

    pub fn mass(&self) -> F {
        self.primitive(self.hi) - self.primitive(self.lo)
    }

    /// Exact integral over the overlap with [a, b].
    pub fn mass_on(&self, a: F, b: F) -> F {
        let lo = self.lo.max(a);
        let hi = self.hi.min(b);
        if lo >= hi {
            F::zero()
        } else {
            self.primitive(hi) - self.primitive(lo)
        }
    }
}

/// Piecewise density on I_q with its total mass.
#[derive(Debug, Clone)]
pub struct PiecewiseDensity<F> {
    pub pieces: Vec<Piece<F>>,
    pub total_mass: F,
}

impl<F: Real> PiecewiseDensity<F> {
    fn from_pieces(pieces: Vec<Piece<F>>) -> Self {
        let total_mass = pieces.iter().fold(F::zero(), |acc, p| acc + p.mass());
        PiecewiseDensity { pieces, total_mass }
    }

    pub fn density(&self, u: F) -> F {
        self.pieces
            .iter()
            .find(|p| u >= p.lo && u <= p.hi)
            .map(|p| p.density(u))
            .unwrap_or(F::zero())
    }

    pub fn mass_on(&self, a: F, b: F) -> F {
        self.pieces.iter().fold(F::zero(), |acc, p| acc + p.mass_on(a, b))
    }
}

/// Mirror of a piece under u -> -u (the density transforms by negating both
/// coefficients and swapping them to keep alpha > beta).
fn mirrored<F: Real>(p: &Piece<F>) -> Piece<F> {
    Piece { lo: -p.hi, hi: -p.lo, alpha: -p.beta, beta: -p.alpha }
}

/// Invariant density of F_q: on I_j the coefficients are (R, r_j), mirrored
/// onto the positive side.
pub fn density_fq<F: Real>(ctx: &HeckeContext<F>, part: &Partition<F>) -> PiecewiseDensity<F> {
    let mut pieces = Vec::with_capacity(2 * part.kappa());
    for j in 1..=part.kappa() {
        let (lo, hi) = part.interval(j as i32);
        pieces.push(Piece { lo, hi, alpha: ctx.r_big, beta: part.rj[j] });
    }
    let mirrors: Vec<Piece<F>> = pieces.iter().map(mirrored).collect();
    pieces.extend(mirrors);
    pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    PiecewiseDensity::from_pieces(pieces)
}

/// Invariant density of the factor of the return map (F_q composed K times),
/// with v-integration windows split at -2/(3 lambda) and, for odd q,
/// -1/(2 lambda).
pub fn density_factor_map<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
) -> PiecewiseDensity<F> {
    let half = ctx.half_lambda();
    let cut23 = c::<F>(2.0) / (c::<F>(3.0) * ctx.lambda);
    let mut pieces = Vec::new();
    match ctx.parity {
        Parity::Odd if ctx.q == 3 => {
            pieces.push(Piece { lo: -half, hi: F::zero(), alpha: ctx.r_big, beta: ctx.r_small });
        }
        Parity::Even => {
            pieces.push(Piece { lo: -half, hi: -cut23, alpha: ctx.r_big, beta: F::zero() });
            pieces.push(Piece { lo: -cut23, hi: F::zero(), alpha: ctx.r_big, beta: ctx.r_small });
        }
        Parity::Odd => {
            let cut12 = F::one() / (c::<F>(2.0) * ctx.lambda);
            let r_prev = part.rj[part.kappa() - 1];
            pieces.push(Piece { lo: -half, hi: -cut23, alpha: ctx.r_big, beta: F::zero() });
            pieces.push(Piece { lo: -cut23, hi: -cut12, alpha: ctx.r_big, beta: r_prev });
            pieces.push(Piece { lo: -cut12, hi: F::zero(), alpha: ctx.r_big, beta: ctx.r_small });
        }
    }
    let mirrors: Vec<Piece<F>> = pieces.iter().map(mirrored).collect();
    pieces.extend(mirrors);
    pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    PiecewiseDensity::from_pieces(pieces)
}

/// Total mass through the closed-form piece integrals, cross-checked by
/// adaptive quadrature, plus the normalization constant 4 / mass.
pub fn total_mass_and_constant<F: Real>(d: &PiecewiseDensity<F>) -> Result<(F, F)> {
    let mut quad = F::zero();
    for p in &d.pieces {
        quad = quad + adaptive_simpson(|u| p.density(u), p.lo, p.hi, c::<F>(1e-11), 24);
    }
    let mass = d.total_mass;
    if ((quad - mass) / mass).abs() > c::<F>(1e-9) {
        return Err(Error::InternalConsistency(format!(
            "quadrature {quad} disagrees with closed form {mass}"
        )));
    }
    Ok((mass, c::<F>(4.0) / mass))
}

/// The closed-form normalization constant `C^{-1}`: the total mass is
/// `4 C^{-1}` (the probability normalization reads 1/c = C/4).
pub fn printed_inverse_constant<F: Real>(ctx: &HeckeContext<F>) -> F {
    match ctx.parity {
        Parity::Even => {
            let pi = F::from_f64(std::f64::consts::PI).unwrap();
            let t = pi / F::from_u32(ctx.q).unwrap();
            ((F::one() + t.cos()) / t.sin()).ln()
        }
        Parity::Odd => (F::one() + ctx.r_big).ln(),
    }
}

fn adaptive_simpson<F: Real>(f: impl Fn(F) -> F + Copy, a: F, b: F, tol: F, depth: u32) -> F {
    fn simpson<F: Real>(f: impl Fn(F) -> F, a: F, b: F) -> F {
        let m = (a + b) / c::<F>(2.0);
        (b - a) / c::<F>(6.0) * (f(a) + c::<F>(4.0) * f(m) + f(b))
    }
    fn rec<F: Real>(f: impl Fn(F) -> F + Copy, a: F, b: F, whole: F, tol: F, depth: u32) -> F {
        let m = (a + b) / c::<F>(2.0);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= c::<F>(15.0) * tol {
            left + right + (left + right - whole) / c::<F>(15.0)
        } else {
            rec(f, a, m, left, tol / c::<F>(2.0), depth - 1)
                + rec(f, m, b, right, tol / c::<F>(2.0), depth - 1)
        }
    }
    rec(f, a, b, simpson(f, a, b), tol, depth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitMap {
    Fq,
    ReturnFactor,
}

/// Empirical occupation report of an orbit against a normalized density.
#[derive(Debug, Clone)]
pub struct BirkhoffReport<F> {
    pub counts: Vec<u64>,
    pub samples: u64,
    /// L1 distance between the empirical and model bin masses.
    pub l1: F,
    /// Times the orbit hit 0 and was restarted with jitter.
    pub jitter_restarts: u32,
}

/// One step of the factor map: F_q applied K(u) times.
pub fn factor_map_step<F: Real>(ctx: &HeckeContext<F>, u: F) -> Result<F> {
    let first = f_q(ctx, u)?
        .ok_or_else(|| Error::UndefinedStep("factor map undefined at 0".into()))?;
    let eps_sign = first.digit.signum();
    let mut cur = first.next;
    loop {
        if cur.abs() <= ctx.eps {
            return Ok(cur);
        }
        let digit = nearest(ctx, -cur.recip())?;
        if digit != eps_sign {
            return Ok(cur);
        }
        match f_q(ctx, cur)? {
            None => return Ok(cur),
            Some(step) => cur = step.next,
        }
    }
}

/// Iterate the chosen map, histogram the orbit over I_q and compare with the
/// matching invariant density.
pub fn birkhoff_histogram<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    x0: F,
    iterations: u64,
    bins: usize,
    map: OrbitMap,
    seed: u64,
) -> Result<BirkhoffReport<F>> {
    if bins < 2 {
        return Err(Error::InvalidParameter("need at least two bins".into()));
    }
    let density = match map {
        OrbitMap::Fq => density_fq(ctx, part),
        OrbitMap::ReturnFactor => density_factor_map(ctx, part),
    };
    let mut counts = vec![0u64; bins];
    if iterations == 0 {
        return Ok(BirkhoffReport { counts, samples: 0, l1: F::one(), jitter_restarts: 0 });
    }
    let half = ctx.half_lambda();
    let width = c::<F>(2.0) * half / F::from_usize(bins).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter_restarts = 0u32;
    let mut x = x0;
    if x.abs() > half {
        // Reduce into I_q first.
        let n = nearest(ctx, x)?;
        x = x - F::from_i64(n).unwrap() * ctx.lambda;
    }
    for _ in 0..iterations {
        if x.abs() <= c::<F>(10.0) * ctx.eps {
            let jit: f64 = rng.gen_range(-1.0..1.0);
            x = c::<F>(1e-6) * c::<F>(jit) + c::<F>(1e-7);
            jitter_restarts += 1;
        }
        x = match map {
            OrbitMap::Fq => match f_q(ctx, x)? {
                Some(step) => step.next,
                None => x,
            },
            OrbitMap::ReturnFactor => factor_map_step(ctx, x)?,
        };
        let idx = ((x + half) / width).floor();
        let idx = <usize as num_traits::NumCast>::from(idx.max(F::zero())).unwrap_or(0);
        counts[idx.min(bins - 1)] += 1;
    }
    let total = d_total(&counts);
    let mut l1 = F::zero();
    for (i, &count) in counts.iter().enumerate() {
        let lo = -half + width * F::from_usize(i).unwrap();
        let hi = lo + width;
        let model = density.mass_on(lo, hi) / density.total_mass;
        let emp = F::from_u64(count).unwrap() / F::from_u64(total).unwrap();
        l1 = l1 + (emp - model).abs();
    }
    Ok(BirkhoffReport { counts, samples: total, l1, jitter_restarts })
}

fn d_total(counts: &[u64]) -> u64 {
    counts.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_partition, locate, natural_extension};

    type Ctx = HeckeContext<f64>;

    fn setup(q: u32) -> (Ctx, Partition<f64>) {
        let ctx = Ctx::new(q).unwrap();
        let part = build_partition(&ctx).unwrap();
        (ctx, part)
    }

    #[test]
    fn planar_density_examples() {
        assert_eq!(planar_density(PlanarPoint { u: 0.0, v: 0.0 }).unwrap(), 2.0);
        let d: f64 = planar_density(PlanarPoint { u: 0.5, v: 0.5 }).unwrap();
        assert!((d - 2.0 / 0.5625).abs() <= 1e-12);
        assert!(planar_density(PlanarPoint { u: 1.0, v: 1.0 }).is_err());
    }

    #[test]
    fn planar_density_is_invariant() {
        // density(image) * |Jacobian| = density(point) under the extension.
        let mut state = 0xc0deu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for q in [3u32, 5, 8] {
            let (ctx, part) = setup(q);
            let mut done = 0;
            let mut worst: f64 = 0.0;
            while done < 2000 {
                let u = (next() - 0.5) * ctx.lambda;
                let Ok(j) = locate(&ctx, &part, u) else { continue };
                let (lo, hi) = part.height(j, ctx.r_big);
                let v = lo + next() * (hi - lo);
                if u.abs() < 1e-3 {
                    continue;
                }
                let p = PlanarPoint { u, v };
                let Ok((img, digit)) = natural_extension(&ctx, p) else { continue };
                // dU/du = 1/u^2, dV/dv = 1/(v + a lambda)^2.
                let den = v + digit as f64 * ctx.lambda;
                let jac = 1.0 / (u * u) / (den * den);
                let lhs = planar_density(img).unwrap() * jac;
                let rhs = planar_density(p).unwrap();
                worst = worst.max(((lhs - rhs) / rhs).abs());
                done += 1;
            }
            assert!(worst <= 1e-9, "invariance residual {worst} at q={q}");
        }
    }

    #[test]
    fn density_fq_example_q4() {
        let (ctx, part) = setup(4);
        let d = density_fq(&ctx, &part);
        let r1 = 1.0 - 2f64.sqrt();
        let expected = 2.0 * (1.0 - r1) / ((1.0 - (-0.3)) * (1.0 - r1 * (-0.3)));
        assert!((d.density(-0.3) - expected).abs() <= 1e-12);
        // Mirror symmetry.
        assert!((d.density(0.3) - d.density(-0.3)).abs() <= 1e-12);
        // Total mass 4 ln(1 + sqrt 2).
        assert!((d.total_mass - 4.0 * (1.0 + 2f64.sqrt()).ln()).abs() <= 1e-12);
    }

    #[test]
    fn masses_match_the_printed_constants() {
        for q in 3..=12u32 {
            let (ctx, part) = setup(q);
            let d = density_fq(&ctx, &part);
            let (mass, c_check) = total_mass_and_constant(&d).unwrap();
            let expect = 4.0 * printed_inverse_constant(&ctx);
            assert!(
                ((mass - expect) / expect).abs() <= 1e-9,
                "mass {mass} vs {expect} at q={q}"
            );
            assert!((c_check - 4.0 / mass).abs() <= 1e-12);
        }
    }

    #[test]
    fn q3_and_q5_mass_values() {
        let (ctx, part) = setup(3);
        let d = density_fq(&ctx, &part);
        assert!((d.total_mass - 4.0 * ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() <= 1e-12);
        let (ctx, part) = setup(5);
        let d = density_fq(&ctx, &part);
        assert!((d.total_mass - 4.0 * (1.0 + ctx.r_big).ln()).abs() <= 1e-12);
    }

    #[test]
    fn pushforward_invariance_on_intervals() {
        // mu(F^{-1}[a,b]) = mu([a,b]): preimages enumerated per digit branch
        // u = -1/(t + n lambda) for |n| <= N, plus the analytic tails (the
        // far branches telescope because R - r = lambda).
        let mut state = 0xf00du64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n_cut = 64i64;
        for q in [3u32, 4, 5, 6, 7, 8] {
            let (ctx, part) = setup(q);
            let d = density_fq(&ctx, &part);
            let half = ctx.half_lambda();
            let lam = ctx.lambda;
            let r = ctx.r_small;
            for _ in 0..34 {
                let mut a = (next() - 0.5) * ctx.lambda * 0.999;
                let mut b = (next() - 0.5) * ctx.lambda * 0.999;
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                if b - a < 1e-3 {
                    continue;
                }
                let direct = d.mass_on(a, b);
                let mut pre = 0.0;
                for n in -n_cut..=n_cut {
                    if n == 0 {
                        continue;
                    }
                    let map = |t: f64| -1.0 / (t + n as f64 * lam);
                    let (mut lo, mut hi) = (map(a), map(b));
                    if lo > hi {
                        std::mem::swap(&mut lo, &mut hi);
                    }
                    let lo = lo.max(-half);
                    let hi = hi.min(half);
                    if lo < hi {
                        pre += d.mass_on(lo, hi);
                    }
                }
                // Tail n > N: branch images sit in the innermost negative
                // piece with coefficients (R, r); the primitive evaluates to
                // 2 ln((x + n lambda + r)/(x + n lambda + R)) and the sum
                // over n telescopes since R = r + lambda.
                let nf = (n_cut + 1) as f64 * lam;
                pre += 2.0 * ((b + nf + r) / (a + nf + r)).ln();
                // Tail n < -N: mirror piece (-r, -R).
                pre += 2.0 * ((-a + nf + r) / (-b + nf + r)).ln();
                assert!(
                    (pre - direct).abs() <= 1e-7 * (1.0 + direct),
                    "pushforward at q={q}: {pre} vs {direct} on [{a}, {b}]"
                );
            }
        }
    }

    #[test]
    fn factor_density_examples() {
        let (ctx, part) = setup(3);
        let d = density_factor_map(&ctx, &part);
        // q=3: proportional to 1/((1-uR)(1-ur)) with the factor-2 convention.
        let u = -0.21;
        let expect = 2.0 * (ctx.r_big - ctx.r_small)
            / ((1.0 - ctx.r_big * u) * (1.0 - ctx.r_small * u));
        assert!((d.density(u) - expect).abs() <= 1e-12);
        // Even q: R/(1-uR) on the outer piece, doubled.
        let (ctx, part) = setup(6);
        let d = density_factor_map(&ctx, &part);
        let u = -0.8;
        assert!((d.density(u) - 2.0 * ctx.r_big / (1.0 - ctx.r_big * u)).abs() <= 1e-12);
    }

    #[test]
    fn factor_density_is_invariant_under_the_factor_map() {
        // mu(f^{-1}[a,b]) = mu([a,b]) for the factor map, by adaptive
        // change-of-variables quadrature over a 10^3-cell base partition
        // with recursive refinement at the branch jumps.
        fn cell_mass(
            ctx: &Ctx,
            d: &PiecewiseDensity<f64>,
            a: f64,
            b: f64,
            lo: f64,
            hi: f64,
            depth: u32,
        ) -> f64 {
            let inside = |u: f64| -> Option<bool> {
                if u.abs() < 1e-12 {
                    return None;
                }
                factor_map_step(ctx, u).ok().map(|img| img > a && img < b)
            };
            let probes = [
                lo + (hi - lo) * 1e-3,
                lo + (hi - lo) * 0.25,
                lo + (hi - lo) * 0.5,
                lo + (hi - lo) * 0.75,
                hi - (hi - lo) * 1e-3,
            ];
            let vals: Vec<Option<bool>> = probes.iter().map(|&u| inside(u)).collect();
            let all_in = vals.iter().all(|v| *v == Some(true));
            let all_out = vals.iter().all(|v| *v == Some(false));
            if all_in {
                return d.mass_on(lo, hi);
            }
            if all_out {
                return 0.0;
            }
            if depth == 0 {
                return if vals[2] == Some(true) { d.mass_on(lo, hi) } else { 0.0 };
            }
            let mid = 0.5 * (lo + hi);
            cell_mass(ctx, d, a, b, lo, mid, depth - 1)
                + cell_mass(ctx, d, a, b, mid, hi, depth - 1)
        }

        for q in [3u32, 4, 5, 6] {
            let (ctx, part) = setup(q);
            let d = density_factor_map(&ctx, &part);
            let half = ctx.half_lambda();
            let targets = [(-half * 0.7, -half * 0.35), (half * 0.1, half * 0.52)];
            for (a, b) in targets {
                let direct = d.mass_on(a, b);
                let cells = 1000;
                let mut pre = 0.0;
                for i in 0..cells {
                    let lo = -half + (i as f64) / cells as f64 * 2.0 * half;
                    let hi = lo + 2.0 * half / cells as f64;
                    pre += cell_mass(&ctx, &d, a, b, lo, hi, 28);
                }
                assert!(
                    (pre - direct).abs() <= 1e-5 * (1.0 + direct),
                    "factor-map invariance at q={q}: {pre} vs {direct} on [{a}, {b}]"
                );
            }
        }
    }

    #[test]
    fn birkhoff_empirical_l1() {
        let (ctx, part) = setup(4);
        let x0 = 1.0 / std::f64::consts::PI;
        let report =
            birkhoff_histogram(&ctx, &part, x0, 200_000, 40, OrbitMap::Fq, 7).unwrap();
        assert!(report.l1 <= 0.05, "L1 = {}", report.l1);
        let empty = birkhoff_histogram(&ctx, &part, x0, 0, 40, OrbitMap::Fq, 7).unwrap();
        assert_eq!(empty.l1, 1.0);
        assert_eq!(empty.samples, 0);
    }

    #[test]
    fn birkhoff_l1_decreases_with_more_iterations() {
        let (ctx, part) = setup(5);
        let x0 = std::f64::consts::E / 7.0;
        let mut short_sum = 0.0;
        let mut long_sum = 0.0;
        for seed in 0..4 {
            let short =
                birkhoff_histogram(&ctx, &part, x0 + seed as f64 * 1e-3, 10_000, 30, OrbitMap::Fq, seed)
                    .unwrap();
            let long =
                birkhoff_histogram(&ctx, &part, x0 + seed as f64 * 1e-3, 80_000, 30, OrbitMap::Fq, seed)
                    .unwrap();
            short_sum += short.l1;
            long_sum += long.l1;
        }
        assert!(long_sum < short_sum, "L1 did not decrease: {short_sum} -> {long_sum}");
    }

    #[test]
    fn birkhoff_return_factor_map() {
        let (ctx, part) = setup(5);
        let report = birkhoff_histogram(
            &ctx,
            &part,
            2f64.sqrt() / 3.0,
            150_000,
            30,
            OrbitMap::ReturnFactor,
            11,
        )
        .unwrap();
        assert!(report.l1 <= 0.08, "L1 = {}", report.l1);
    }
}
