//! The cross-section of the geodesic flow: embedding strongly reduced
//! geodesics as boundary tangent vectors, the first-return map in symbolic
//! and geometric form, first-return times, and closed-geodesic lengths.

use num_complex::Complex;

use crate::cfmaps::expand_regular;
use crate::codes::{Code, Flavor};
use crate::context::{HeckeContext, Parity};
use crate::domain::Partition;
use crate::error::{Error, Result};
use crate::geometry::{distance_along, intersect_side, GeodesicEndpoints, SideCrossing};
use crate::reduction::{
    extension_step, hyperbolic_from_periodic, is_strongly_reduced, normalize_tail,
    validate_cycle, ReducedGeodesic,
};
use crate::scalar::{c, ci, Real};

/// A point of the cross-section: the strongly reduced geodesic, the component
/// label j (-3..3), and the boundary tangent vector (z, theta) representing it.
#[derive(Debug, Clone)]
pub struct SectionPoint<F> {
    pub endpoints: GeodesicEndpoints<F>,
    pub label: i32,
    pub base: Complex<F>,
    pub theta: F,
}

/// One first-return step.
#[derive(Debug, Clone)]
pub struct ReturnRecord<F> {
    pub point: SectionPoint<F>,
    /// Power of the natural extension realizing the return.
    pub k: usize,
    /// Hyperbolic length to this return.
    pub time: F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Symbolic,
    Geometric,
    Both,
}

/// Tangent angle of the geodesic at a point z on its carrier.
fn angle_at<F: Real>(g: &GeodesicEndpoints<F>, z: Complex<F>) -> F {
    let pi = F::from_f64(std::f64::consts::PI).unwrap();
    let half = pi / c::<F>(2.0);
    let center = (g.xi + g.eta) / c::<F>(2.0);
    let t = (z - Complex::new(center, F::zero())).arg();
    if g.eta < g.xi {
        t - half
    } else {
        let theta = t + half;
        if theta >= pi {
            theta - c::<F>(2.0) * pi
        } else {
            theta
        }
    }
}

struct EmbedParts<F> {
    label: i32,
    base: Complex<F>,
    theta: F,
    /// The geodesic actually carrying the base point (gamma_{z,theta}).
    walk: GeodesicEndpoints<F>,
}

/// Case analysis of the bijection between strongly reduced geodesics and the
/// section, for xi > 0: entry through the left wall or the bottom arc, else
/// the corner components via the L_2 / L_3 translates.
fn embed_positive<F: Real>(
    ctx: &HeckeContext<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<EmbedParts<F>> {
    // (a) Left wall, above the corner.
    if g.eta < -ctx.half_lambda() {
        if let Some(crossing) = intersect_side(ctx, &ctx.side(-1), g) {
            if crossing.on_arc {
                return Ok(EmbedParts {
                    label: -1,
                    base: crossing.z,
                    theta: angle_at(g, crossing.z),
                    walk: *g,
                });
            }
        }
    }
    // (b) Bottom arc of the unit circle.
    if let Some(crossing) = intersect_side(ctx, &ctx.side(0), g) {
        if crossing.on_arc {
            return Ok(EmbedParts {
                label: 0,
                base: crossing.z,
                theta: angle_at(g, crossing.z),
                walk: *g,
            });
        }
    }
    // (c) Corner component via L_2 when the forward endpoint is within the
    // window (always for q = 3 and even q at this stage of the analysis).
    let in_window = g.xi <= ctx.lambda + F::one() + ctx.eps;
    if ctx.q == 3 || ctx.parity == Parity::Even || in_window {
        let crossing = intersect_side(ctx, &ctx.side(2), g).ok_or_else(|| {
            Error::InternalConsistency(format!(
                "no L2 crossing for ({}, {})",
                g.xi, g.eta
            ))
        })?;
        let m = ctx.s().compose(&ctx.t_pow(-1));
        let walk = g.map(&m)?;
        let base = m.apply_complex(crossing.z);
        return Ok(EmbedParts { label: 2, base, theta: angle_at(&walk, base), walk });
    }
    // (d) Odd q with xi beyond lambda + 1: corner component via L_3.
    let crossing = intersect_side(ctx, &ctx.side(3), g).ok_or_else(|| {
        Error::InternalConsistency(format!("no L3 crossing for ({}, {})", g.xi, g.eta))
    })?;
    let m = ctx.t_pow(-1);
    let walk = g.map(&m)?;
    let base = m.apply_complex(crossing.z);
    Ok(EmbedParts { label: 3, base, theta: angle_at(&walk, base), walk })
}

fn embed_parts<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<EmbedParts<F>> {
    if !is_strongly_reduced(ctx, part, g) {
        return Err(Error::OutOfDomain(format!(
            "({}, {}) is not strongly reduced",
            g.xi, g.eta
        )));
    }
    if g.xi > F::zero() {
        embed_positive(ctx, g)
    } else {
        let pi = F::from_f64(std::f64::consts::PI).unwrap();
        let parts = embed_positive(ctx, &g.neg())?;
        let theta = pi - parts.theta;
        let theta = if theta >= pi { theta - c::<F>(2.0) * pi } else { theta };
        Ok(EmbedParts {
            label: -parts.label,
            base: Complex::new(-parts.base.re, parts.base.im),
            theta,
            walk: parts.walk.neg(),
        })
    }
}

/// Embed a strongly reduced geodesic as a section point.
pub fn section_embed<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<SectionPoint<F>> {
    let parts = embed_parts(ctx, part, g)?;
    Ok(SectionPoint { endpoints: *g, label: parts.label, base: parts.base, theta: parts.theta })
}

/// Number of extension steps of the first return: one past the leading run
/// of digits carrying the sign of a0.
pub fn return_exponent_k<F: Real>(ctx: &HeckeContext<F>, xi: F) -> Result<usize> {
    let code = expand_regular(ctx, xi, (2 * ctx.q + 8) as usize)?;
    if code.leading == 0 {
        return Err(Error::OutOfDomain(format!("|xi| <= lambda/2 at {xi}")));
    }
    if code.head.is_empty() {
        return Err(Error::CuspGeodesic(format!("{xi} has a finite expansion")));
    }
    let eps_sign = code.leading.signum();
    code.head
        .iter()
        .position(|&d| d != eps_sign)
        .map(|p| p + 1)
        .ok_or_else(|| Error::InternalConsistency("constant unit tail in expansion".into()))
}

/// First-return time from the closed formula
/// `ln g_A(start) - ln g_n(landing) + 2 ln prod |xi_j|`.
pub fn return_time<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<F> {
    if g.xi < F::zero() {
        return return_time(ctx, part, &g.neg());
    }
    let start = embed_parts(ctx, part, g)?;
    let g_a = carrier_g_value(ctx, g, start.label)?;
    let k = return_exponent_k(ctx, g.xi)?;
    let mut cur = *g;
    let mut log_f = F::zero();
    for _ in 0..k {
        let (next, _) = extension_step(ctx, &cur)?;
        cur = next;
        log_f = log_f + cur.xi.abs().ln();
    }
    let landing_label = embed_parts(ctx, part, &cur)?.label;
    let g_n = carrier_g_value(ctx, &cur, landing_label)?;
    let time = g_a.ln() - g_n.ln() + c::<F>(2.0) * log_f;
    if !(time > F::zero()) {
        return Err(Error::InternalConsistency(format!(
            "nonpositive return time {time}"
        )));
    }
    Ok(time)
}

/// g-value of the geodesic at its crossing with the carrier arc of the
/// section component `label`.
fn carrier_g_value<F: Real>(
    ctx: &HeckeContext<F>,
    g: &GeodesicEndpoints<F>,
    label: i32,
) -> Result<F> {
    let crossing = intersect_side(ctx, &ctx.side(label), g).ok_or_else(|| {
        Error::InternalConsistency(format!(
            "no crossing with carrier {label} for ({}, {})",
            g.xi, g.eta
        ))
    })?;
    Ok(crossing.g_val)
}

/// Renormalize a representative sitting on the excluded -r tail boundary.
pub fn normalized_start<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<GeodesicEndpoints<F>> {
    let rg = ReducedGeodesic {
        endpoints: *g,
        word: crate::context::Mobius::identity(),
        word_tokens: vec![],
        bicode: crate::reduction::bicode_of(ctx, g)?,
    };
    Ok(normalize_tail(ctx, part, &rg)?.endpoints)
}

/// Symbolic first return: k extension steps determined by the digits of xi,
/// with the landing labeled by the section case analysis.
pub fn first_return_symbolic<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<ReturnRecord<F>> {
    let time = return_time(ctx, part, g)?;
    let k = return_exponent_k(ctx, g.xi.abs())?;
    let mut cur = *g;
    for _ in 0..k {
        let (next, _) = extension_step(ctx, &cur)?;
        cur = next;
    }
    let point = section_embed(ctx, part, &cur)?;
    Ok(ReturnRecord { point, k, time })
}

/// One boundary crossing seen by the tracer, for transversality checks.
#[derive(Debug, Clone, Copy)]
pub struct CrossingEvent<F> {
    pub z: Complex<F>,
    pub wall: i32,
    /// Tangent angle of the geodesic at the crossing.
    pub geo_angle: F,
    /// Tangent angle of the boundary arc at the crossing.
    pub arc_angle: F,
}

/// Occupancy data collected by the geometric tracer.
#[derive(Debug, Clone)]
pub struct TraceStats<F> {
    pub crossings: usize,
    pub corner_nudges: usize,
    pub events: Vec<CrossingEvent<F>>,
}

impl<F: Real> TraceStats<F> {
    fn new() -> Self {
        TraceStats { crossings: 0, corner_nudges: 0, events: Vec::new() }
    }

    fn record(&mut self, z: Complex<F>, wall: i32, g: &GeodesicEndpoints<F>) {
        let pi = F::from_f64(std::f64::consts::PI).unwrap();
        let arc_angle = match wall {
            1 | -1 => pi / c::<F>(2.0),
            // Tangent direction of the unit circle at z.
            _ => (z * Complex::new(F::zero(), F::one())).arg(),
        };
        self.events.push(CrossingEvent { z, wall, geo_angle: angle_at(g, z), arc_angle });
    }
}

/// Independent geometric tracer: walk the geodesic through copies of the
/// fundamental domain, re-entering through the side pairings, and test the
/// section conditions at every crossing. Returns the first hit.
pub fn trace_first_return<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
    max_crossings: usize,
) -> Result<(ReturnRecord<F>, TraceStats<F>)> {
    let start = embed_parts(ctx, part, g)?;
    let mut stats = TraceStats::new();
    let mut cur = start.walk;
    let mut pos = start.base;
    let mut s_count = 0usize;
    let mut time = F::zero();

    for _ in 0..max_crossings {
        let (wall, exit) = next_exit(ctx, &cur, pos, &mut stats)?;
        stats.crossings += 1;
        stats.record(exit.z, wall, &cur);
        time = time + distance_along(ctx, &cur, pos, exit.z)?;

        // Side pairing back into the fundamental domain.
        let (pairing, entry_wall) = match wall {
            1 => (ctx.t_pow(-1), 1),
            -1 => (ctx.t_pow(1), -1),
            0 => {
                s_count += 1;
                (ctx.s(), 0)
            }
            _ => unreachable!(),
        };
        cur = cur.map(&pairing)?;
        pos = pairing.apply_complex(exit.z);
        // After a T-pairing the entry is through the opposite wall.
        let entry_wall = if entry_wall == 0 { 0 } else { -entry_wall };

        if let Some((landing, label, extra_s)) = test_return(ctx, part, &cur, entry_wall)? {
            let k = s_count + extra_s;
            let point = section_embed(ctx, part, &landing)?;
            debug_assert_eq!(point.label, label);
            return Ok((ReturnRecord { point, k, time }, stats));
        }
    }
    Err(Error::TracerBudget(format!(
        "no return within {max_crossings} crossings"
    )))
}

/// Exit crossing of the current geodesic from the fundamental domain,
/// strictly after `pos` in flow order (g-values decrease toward xi).
fn next_exit<F: Real>(
    ctx: &HeckeContext<F>,
    cur: &GeodesicEndpoints<F>,
    pos: Complex<F>,
    stats: &mut TraceStats<F>,
) -> Result<(i32, SideCrossing<F>)> {
    let g_pos = crate::geometry::g_value(pos, cur.xi);
    let pick = |relax: bool| -> Option<(i32, SideCrossing<F>)> {
        let mut best: Option<(i32, SideCrossing<F>, F)> = None;
        for wall in [-1, 0, 1] {
            let Some(crossing) = intersect_side(ctx, &ctx.side(wall), cur) else { continue };
            let ok_arc = if relax {
                // Perturbation pass for near-corner hits.
                match wall {
                    0 => crossing.z.re.abs() <= ctx.half_lambda() + c::<F>(1e-6),
                    _ => crossing.z.im >= ctx.rho.im - c::<F>(1e-6),
                }
            } else {
                crossing.on_arc
            };
            if !ok_arc {
                continue;
            }
            let gv = crate::geometry::g_value(crossing.z, cur.xi);
            if gv >= g_pos * (F::one() - c::<F>(1e-11)) {
                continue; // not after pos
            }
            match &best {
                Some((_, _, bg)) if *bg >= gv => {}
                _ => best = Some((wall, crossing, gv)),
            }
        }
        best.map(|(w, cr, _)| (w, cr))
    };
    if let Some(hit) = pick(false) {
        return Ok(hit);
    }
    if let Some(hit) = pick(true) {
        stats.corner_nudges += 1;
        return Ok(hit);
    }
    Err(Error::InternalConsistency(format!(
        "geodesic ({}, {}) has no exit from the fundamental domain",
        cur.xi, cur.eta
    )))
}

/// Section membership tests at an inward crossing through `entry_wall`.
/// Returns the landing geodesic, its label, and the extra S-factor count.
fn test_return<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    cur: &GeodesicEndpoints<F>,
    entry_wall: i32,
) -> Result<Option<(GeodesicEndpoints<F>, i32, usize)>> {
    // Direct: the walked geodesic itself is strongly reduced.
    if is_strongly_reduced(ctx, part, cur) {
        return Ok(Some((*cur, entry_wall, 0)));
    }
    let reduced = crate::reduction::in_omega_star(ctx, part, cur);
    match entry_wall {
        1 | -1 => {
            // Corner component: T^{+-1} S gamma strongly reduced within the
            // forward-endpoint window.
            if reduced {
                return Ok(None);
            }
            let sign = entry_wall;
            let m = ctx.t_pow(sign as i64).compose(&ctx.s());
            let cand = cur.map(&m)?;
            if !is_strongly_reduced(ctx, part, &cand) {
                return Ok(None);
            }
            let fwd = cand.xi * ci::<F>(sign as i64); // mirror to positive side
            let window = ctx.q == 3
                || (fwd > c::<F>(1.5) * ctx.lambda - ctx.eps
                    && fwd <= ctx.lambda + F::one() + ctx.eps);
            if window {
                return Ok(Some((cand, 2 * sign, 1)));
            }
            Ok(None)
        }
        0 => {
            if ctx.parity == Parity::Even || ctx.q == 3 || reduced {
                return Ok(None);
            }
            for sign in [1i32, -1] {
                let m = ctx.t_pow(sign as i64);
                let cand = cur.map(&m)?;
                if !is_strongly_reduced(ctx, part, &cand) {
                    continue;
                }
                let fwd = cand.xi * ci::<F>(sign as i64);
                if fwd > ctx.lambda + F::one() - ctx.eps {
                    return Ok(Some((cand, 3 * sign, 0)));
                }
            }
            Ok(None)
        }
        _ => Ok(None),
    }
}

/// Geometric first return (the tracer as an oracle for the symbolic engine).
pub fn first_return_geometric<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
    max_crossings: usize,
) -> Result<ReturnRecord<F>> {
    trace_first_return(ctx, part, g, max_crossings).map(|(rec, _)| rec)
}

/// Run one return step with the selected engine; `Both` asserts agreement.
pub fn first_return<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
    engine: Engine,
    max_crossings: usize,
) -> Result<ReturnRecord<F>> {
    match engine {
        Engine::Symbolic => first_return_symbolic(ctx, part, g),
        Engine::Geometric => first_return_geometric(ctx, part, g, max_crossings),
        Engine::Both => {
            let sym = first_return_symbolic(ctx, part, g)?;
            let geo = first_return_geometric(ctx, part, g, max_crossings)?;
            let tol = c::<F>(1e-8);
            let ok = sym.k == geo.k
                && sym.point.label == geo.point.label
                && (sym.point.endpoints.xi - geo.point.endpoints.xi).abs() <= tol
                && (sym.point.endpoints.eta - geo.point.endpoints.eta).abs() <= tol
                && (sym.time - geo.time).abs() <= c::<F>(1e-7) * (F::one() + sym.time.abs());
            if !ok {
                return Err(Error::EngineMismatch(format!(
                    "symbolic (k={}, n={}, xi={}, t={}) vs geometric (k={}, n={}, xi={}, t={})",
                    sym.k,
                    sym.point.label,
                    sym.point.endpoints.xi,
                    sym.time,
                    geo.k,
                    geo.point.label,
                    geo.point.endpoints.xi,
                    geo.time
                )));
            }
            Ok(sym)
        }
    }
}

/// Successive returns; the landing is tail-normalized before continuing.
pub fn simulate_returns<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
    count: usize,
    engine: Engine,
    max_crossings: usize,
) -> Result<Vec<ReturnRecord<F>>> {
    let mut out = Vec::with_capacity(count);
    let mut cur = normalized_start(ctx, part, g)?;
    for _ in 0..count {
        let rec = first_return(ctx, part, &cur, engine, max_crossings)?;
        cur = normalized_start(ctx, part, &rec.point.endpoints)?;
        out.push(rec);
    }
    Ok(out)
}

/// Hyperbolic length of the closed geodesic of a primitive periodic code:
/// `-2 sum_j ln |value of the j-th cyclic rotation|`, each value exact.
pub fn closed_length<F: Real>(ctx: &HeckeContext<F>, cycle: &[i64]) -> Result<F> {
    validate_cycle(ctx, cycle)?;
    let n = cycle.len();
    let mut total = F::zero();
    for j in 0..n {
        let mut rot: Vec<i64> = Vec::with_capacity(n);
        rot.extend_from_slice(&cycle[j..]);
        rot.extend_from_slice(&cycle[..j]);
        let code = Code::periodic(0, vec![], rot, Flavor::Regular);
        let v = crate::codes::evaluate_unchecked(ctx, &code, 0)?.value;
        total = total - c::<F>(2.0) * v.abs().ln();
    }
    Ok(total)
}

/// Trace-based length oracle: `2 arccosh(|tr| / 2)` of the cycle word.
pub fn closed_length_trace_oracle<F: Real>(ctx: &HeckeContext<F>, cycle: &[i64]) -> Result<F> {
    let (a, _, _) = hyperbolic_from_periodic(ctx, cycle)?;
    let half_tr = a.trace_abs() / c::<F>(2.0);
    Ok(c::<F>(2.0) * (half_tr + (half_tr * half_tr - F::one()).sqrt()).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_partition, first_return_exponent};
    use crate::reduction::closed_geodesic_from_cycle;

    type Ctx = HeckeContext<f64>;

    fn setup(q: u32) -> (Ctx, Partition<f64>) {
        let ctx = Ctx::new(q).unwrap();
        let part = build_partition(&ctx).unwrap();
        (ctx, part)
    }

    #[test]
    fn golden_geodesic_is_a_fixed_point() {
        let (ctx, part) = setup(3);
        let rg = closed_geodesic_from_cycle(&ctx, &part, &[3]).unwrap();
        let g = rg.endpoints;
        let rec = first_return(&ctx, &part, &g, Engine::Both, 300).unwrap();
        assert_eq!(rec.k, 1);
        // Fixed point after tail normalization.
        let back = normalized_start(&ctx, &part, &rec.point.endpoints).unwrap();
        assert!((back.xi - g.xi).abs() <= 1e-9 && (back.eta - g.eta).abs() <= 1e-9);
        let expect = 2.0 * ((3.0 + 5f64.sqrt()) / 2.0).ln();
        assert!((rec.time - expect).abs() <= 1e-10, "time {} vs {}", rec.time, expect);
    }

    #[test]
    fn section_embed_round_trip_and_windows() {
        let (ctx, part) = setup(3);
        // Strong geodesics with |xi| <= 3 lambda/2 and opposite signs embed
        // into the wall or bottom components.
        let g = GeodesicEndpoints::new(1.0 / 0.8, -0.3).unwrap();
        if is_strongly_reduced(&ctx, &part, &g) {
            let p = section_embed(&ctx, &part, &g).unwrap();
            assert!(p.label.abs() <= 1, "unexpected label {}", p.label);
            assert_eq!(p.endpoints, g);
        }
        let err = section_embed(&ctx, &part, &GeodesicEndpoints::new(1.9, 0.35).unwrap());
        // (1.9, 0.35): u = -0.526 outside I_3 -> not strongly reduced.
        assert!(err.is_err());
    }

    #[test]
    fn symbolic_exponent_examples() {
        let (ctx, part) = setup(3);
        let rg = closed_geodesic_from_cycle(&ctx, &part, &[3]).unwrap();
        assert_eq!(return_exponent_k(&ctx, rg.endpoints.xi.abs()).unwrap(), 1);
        let (ctx4, _part4) = setup(4);
        let code = crate::codes::parse_code("2;1,-3,(5)", Flavor::Regular).unwrap();
        let xi = crate::codes::evaluate(&ctx4, &code, 0).unwrap().value;
        assert_eq!(return_exponent_k(&ctx4, xi).unwrap(), 2);
    }

    #[test]
    fn oracle_agreement_spot_checks() {
        let mut state = 0x600du64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for q in [3u32, 5, 6] {
            let (ctx, part) = setup(q);
            let mut done = 0;
            while done < 60 {
                let u = (next() - 0.5) * ctx.lambda;
                let Ok(j) = crate::domain::locate(&ctx, &part, u) else { continue };
                let (lo, hi) = part.height(j, ctx.r_big);
                let v = lo + next() * (hi - lo);
                if u.abs() < 1e-3 || v.abs() < 1e-3 {
                    continue;
                }
                let g = GeodesicEndpoints::new(-1.0 / u, -v).unwrap();
                let Ok(start) = normalized_start(&ctx, &part, &g) else { continue };
                let rg = crate::reduction::ReducedGeodesic {
                    endpoints: start,
                    word: crate::context::Mobius::identity(),
                    word_tokens: vec![],
                    bicode: crate::reduction::bicode_of(&ctx, &start).unwrap(),
                };
                let Ok((strong, _)) = crate::reduction::strongly_reduce(&ctx, &part, &rg) else {
                    continue;
                };
                match first_return(&ctx, &part, &strong.endpoints, Engine::Both, 400) {
                    Ok(_) => done += 1,
                    Err(Error::CuspGeodesic(_)) => continue,
                    Err(e) => panic!("q={q}: {e}"),
                }
            }
        }
    }

    #[test]
    fn exponent_table_matches_landing_labels() {
        // The (K, n) digit table agrees with the label computed by the
        // section case analysis of the landing point.
        let mut state = 0x1eafu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for q in [3u32, 4, 5, 6, 7, 8] {
            let (ctx, part) = setup(q);
            let mut done = 0;
            while done < 120 {
                let u = (next() - 0.5) * ctx.lambda;
                let Ok(j) = crate::domain::locate(&ctx, &part, u) else { continue };
                let (lo, hi) = part.height(j, ctx.r_big);
                let v = lo + next() * (hi - lo);
                if u.abs() < 1e-3 || v.abs() < 1e-3 {
                    continue;
                }
                let g = GeodesicEndpoints::new(-1.0 / u, -v).unwrap();
                let Ok(start) = normalized_start(&ctx, &part, &g) else { continue };
                let rg = crate::reduction::ReducedGeodesic {
                    endpoints: start,
                    word: crate::context::Mobius::identity(),
                    word_tokens: vec![],
                    bicode: crate::reduction::bicode_of(&ctx, &start).unwrap(),
                };
                let Ok((strong, _)) = crate::reduction::strongly_reduce(&ctx, &part, &rg) else {
                    continue;
                };
                let gs = strong.endpoints;
                if gs.xi.abs() <= ctx.half_lambda() + 1e-6 {
                    continue;
                }
                let Ok((k_table, n_table)) = first_return_exponent(&ctx, gs.xi) else { continue };
                let Ok(rec) = first_return_symbolic(&ctx, &part, &gs) else { continue };
                assert_eq!(rec.k, k_table, "K mismatch at q={q}, xi={}", gs.xi);
                assert_eq!(rec.point.label, n_table, "n mismatch at q={q}, xi={}", gs.xi);
                done += 1;
            }
        }
    }

    #[test]
    fn closed_length_examples() {
        let ctx = Ctx::new(3).unwrap();
        let l = closed_length(&ctx, &[3]).unwrap();
        assert!((l - 1.9248473).abs() <= 1e-7);
        let l = closed_length(&ctx, &[2, -2]).unwrap();
        assert!((l - 3.5254943).abs() <= 1e-7);
        // Rotation invariance.
        let ctx5 = Ctx::new(5).unwrap();
        let a = closed_length(&ctx5, &[2, -3, 4]).unwrap();
        let b = closed_length(&ctx5, &[-3, 4, 2]).unwrap();
        assert!((a - b).abs() <= 1e-10);
        // Oracle agreement.
        let o = closed_length_trace_oracle(&ctx, &[2, -2]).unwrap();
        assert!((l - o).abs() <= 1e-9);
    }

    #[test]
    fn telescoping_over_closed_orbits() {
        for (q, cycle) in [(3u32, vec![3i64]), (3, vec![2, -2]), (5, vec![2, -3]), (6, vec![3, -2, 4])] {
            let (ctx, part) = setup(q);
            if validate_cycle(&ctx, &cycle).is_err() {
                continue;
            }
            let Ok(rg) = closed_geodesic_from_cycle(&ctx, &part, &cycle) else { continue };
            let expect = closed_length(&ctx, &cycle).unwrap();
            // Walk until the orbit closes, accumulating return times.
            let start = rg.endpoints;
            let mut cur = start;
            let mut total = 0.0;
            let mut closed = false;
            for _ in 0..(4 * cycle.len() + 8) {
                let rec = first_return(&ctx, &part, &cur, Engine::Both, 400).unwrap();
                total += rec.time;
                cur = normalized_start(&ctx, &part, &rec.point.endpoints).unwrap();
                if (cur.xi - start.xi).abs() <= 1e-9 && (cur.eta - start.eta).abs() <= 1e-9 {
                    closed = true;
                    break;
                }
            }
            assert!(closed, "orbit did not close for {cycle:?} at q={q}");
            assert!(
                (total - expect).abs() <= 1e-8 * (1.0 + expect),
                "telescoping {total} vs {expect} for {cycle:?} at q={q}"
            );
        }
    }

    #[test]
    fn simulate_returns_interface() {
        let (ctx, part) = setup(3);
        let rg = closed_geodesic_from_cycle(&ctx, &part, &[3]).unwrap();
        let recs = simulate_returns(&ctx, &part, &rg.endpoints, 5, Engine::Both, 300).unwrap();
        assert_eq!(recs.len(), 5);
        assert!(recs.iter().all(|r| r.time > 0.0));
        let empty = simulate_returns(&ctx, &part, &rg.endpoints, 0, Engine::Symbolic, 300).unwrap();
        assert!(empty.is_empty());
    }
}
