//! Reduction of arbitrary geodesics into the domain Omega*, normalization of
//! the excluded tail boundary, strong reduction, and the correspondence
//! between periodic codes and hyperbolic group elements.

use crate::cfmaps::{expand_dual, expand_regular, f_q_star, has_finite_expansion, nearest, nearest_star};
use crate::codes::{scan_forbidden, BiCode, Code, Flavor};
use crate::context::{Gen, HeckeContext, Mobius, Parity};
use crate::domain::{omega_membership, Partition, PlanarPoint, Region};
use crate::error::{Error, Result};
use crate::geometry::GeodesicEndpoints;
use crate::scalar::{c, Real};

/// Digit budget used when deciding whether an endpoint is cusp-equivalent.
pub const CUSP_BUDGET: usize = 400;

/// A geodesic with endpoint pair in Omega*, together with the group word that
/// carried the input there and the two-sided code of the pair.
#[derive(Debug, Clone)]
pub struct ReducedGeodesic<F> {
    pub endpoints: GeodesicEndpoints<F>,
    /// Reducing map B with B(input) = endpoints.
    pub word: Mobius<F>,
    /// The same map as a generator word, leftmost factor acting last.
    pub word_tokens: Vec<Gen>,
    pub bicode: BiCode,
}

/// Omega-side coordinates (u, v) = (S xi, -eta) of an endpoint pair.
pub fn omega_coords<F: Real>(g: &GeodesicEndpoints<F>) -> PlanarPoint<F> {
    PlanarPoint { u: -g.xi.recip(), v: -g.eta }
}

/// Membership of the pair in the (closed) domain Omega*.
pub fn in_omega_star<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> bool {
    if g.xi.abs() <= ctx.eps {
        return false;
    }
    omega_membership(ctx, part, omega_coords(g)).region != Region::Outside
}

/// Strong membership: the pair lies in Omega*_s.
pub fn is_strongly_reduced<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> bool {
    if g.xi.abs() <= ctx.eps {
        return false;
    }
    omega_membership(ctx, part, omega_coords(g)).region == Region::OmegaStrong
}

fn word_matrix<F: Real>(ctx: &HeckeContext<F>, tokens: &[Gen]) -> Mobius<F> {
    ctx.word(tokens)
}

/// Reduce an arbitrary geodesic to one with endpoints in Omega*. The dual
/// digits of eta drive the algorithm: first `T^{-b0}`, then steps `T^{-b} S`
/// until the pair lands inside, then the tail is normalized.
pub fn reduce_endpoints<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<ReducedGeodesic<F>> {
    for (name, val) in [("xi", g.xi), ("eta", g.eta)] {
        if has_finite_expansion(ctx, val, CUSP_BUDGET)? {
            return Err(Error::CuspGeodesic(format!(
                "{name} = {val} is equivalent to the cusp at infinity"
            )));
        }
    }
    let mut tokens: Vec<Gen> = Vec::new();
    let mut cur = *g;

    if !in_omega_star(ctx, part, &cur) {
        // Leading translate into I_R.
        let b0 = nearest_star(ctx, cur.eta)?;
        if b0 != 0 {
            let m = ctx.t_pow(-b0);
            cur = cur.map(&m)?;
            tokens.insert(0, Gen::T(-b0));
        }
        let mut steps = 0;
        while !in_omega_star(ctx, part, &cur) {
            if cur.eta.abs() <= ctx.eps {
                return Err(Error::CuspGeodesic("eta orbit hit zero during reduction".into()));
            }
            let b = nearest_star(ctx, -cur.eta.recip())?;
            let m = ctx.t_pow(-b).compose(&ctx.s());
            cur = cur.map(&m)?;
            tokens.insert(0, Gen::S);
            tokens.insert(0, Gen::T(-b));
            steps += 1;
            if steps > 500 {
                return Err(Error::InternalConsistency(
                    "reduction did not reach Omega* within 500 steps".into(),
                ));
            }
        }
    }

    let rg = finish_reduced(ctx, cur, tokens)?;
    normalize_tail(ctx, part, &rg)
}

fn finish_reduced<F: Real>(
    ctx: &HeckeContext<F>,
    endpoints: GeodesicEndpoints<F>,
    tokens: Vec<Gen>,
) -> Result<ReducedGeodesic<F>> {
    let bicode = bicode_of(ctx, &endpoints)?;
    Ok(ReducedGeodesic {
        endpoints,
        word: word_matrix(ctx, &tokens),
        word_tokens: tokens,
        bicode,
    })
}

/// Two-sided code of a pair in Omega*: dual past from -eta, regular future
/// from S xi.
pub fn bicode_of<F: Real>(ctx: &HeckeContext<F>, g: &GeodesicEndpoints<F>) -> Result<BiCode> {
    let depth = 40;
    let past = expand_dual(ctx, -g.eta, depth)?;
    let future = expand_regular(ctx, -g.xi.recip(), depth)?;
    BiCode::new(past, future)
}

/// Values of the periodic part of the F_q*-orbit of r (all negative).
fn r_cycle_values<F: Real>(part: &Partition<F>) -> Vec<F> {
    part.rj[1..].to_vec()
}

/// Does the v-side orbit of this eta hit the r-cycle, i.e. does eta have the
/// dual tail of -r? Horizon: one cycle period plus h + 2 digits.
fn eta_on_excluded_tail<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    eta: F,
) -> Option<usize> {
    let cycle = r_cycle_values(part);
    let tol = detect_tol(ctx);
    let horizon = cycle.len() + ctx.h as usize + 4;
    let mut v = -eta;
    if v.abs() > ctx.r_big + ctx.eps {
        return None;
    }
    for n in 0..=horizon {
        if cycle.iter().any(|&p| (v - p).abs() <= tol) {
            return Some(n);
        }
        match f_q_star(ctx, v) {
            Ok(Some(step)) => v = step.next,
            _ => return None,
        }
    }
    None
}

fn detect_tol<F: Real>(ctx: &HeckeContext<F>) -> F {
    (c::<F>(1e3) * ctx.eps).max(c::<F>(1e-9))
}

/// Candidate maps resolving the excluded-tail boundary, per parity, together
/// with their mirror conjugates.
fn tail_candidates<F: Real>(ctx: &HeckeContext<F>) -> Vec<Vec<Gen>> {
    let swap: Vec<Gen> = match ctx.parity {
        Parity::Even => vec![Gen::T(-1), Gen::S, Gen::T(-1)],
        Parity::Odd => {
            let mut w = vec![Gen::T(-1)];
            for _ in 0..ctx.h {
                w.push(Gen::S);
                w.push(Gen::T(-1));
            }
            w.push(Gen::S);
            w.push(Gen::T(-2));
            w
        }
    };
    let mirror = |w: &[Gen]| -> Vec<Gen> {
        w.iter()
            .map(|g| match g {
                Gen::S => Gen::S,
                Gen::T(n) => Gen::T(-n),
            })
            .collect()
    };
    vec![
        vec![Gen::T(-1)],
        swap.clone(),
        vec![Gen::T(1)],
        mirror(&swap),
    ]
}

/// Replace a representative whose eta carries the tail of -r (where the
/// coding is two-to-one) by the equivalent representative whose eta ends in
/// the tail of r or -R. No-op when the precondition does not hold.
pub fn normalize_tail<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    rg: &ReducedGeodesic<F>,
) -> Result<ReducedGeodesic<F>> {
    let Some(_) = eta_on_excluded_tail(ctx, part, rg.endpoints.eta) else {
        return Ok(rg.clone());
    };
    let tol = detect_tol(ctx);
    let mut cur = rg.endpoints;
    let mut tokens = rg.word_tokens.clone();
    let budget = 2 * (part.kappa() + ctx.h as usize + 4);

    for _ in 0..=budget {
        // Phase: wait until eta = -r itself before applying the case maps.
        if (cur.eta + ctx.r_small).abs() <= tol {
            for cand in tail_candidates(ctx) {
                let m = word_matrix(ctx, &cand);
                let Ok(out) = cur.map(&m) else { continue };
                if !in_omega_star(ctx, part, &out) {
                    continue;
                }
                if eta_on_excluded_tail(ctx, part, out.eta).is_some() {
                    continue;
                }
                let mut new_tokens = cand;
                new_tokens.extend(tokens.iter().copied());
                return finish_reduced(ctx, out, new_tokens);
            }
            return Err(Error::InternalConsistency(
                "no candidate map resolved the -r tail".into(),
            ));
        }
        // Consume one dual digit of eta: the inverse extension step
        // (xi, eta) -> (S xi + b lambda inverted, -F*(-eta)) expressed as the
        // word (T^{-b} S)^{-1} = S T^{b} hmm: we apply S T^{b}? The forward
        // reduction used T^{-b} S; here we step the same way.
        if cur.eta.abs() <= ctx.eps {
            return Err(Error::CuspGeodesic("eta hit zero during tail normalization".into()));
        }
        let b = nearest_star(ctx, -cur.eta.recip())?;
        let m = ctx.t_pow(-b).compose(&ctx.s());
        cur = cur.map(&m)?;
        tokens.insert(0, Gen::S);
        tokens.insert(0, Gen::T(-b));
    }
    Err(Error::InternalConsistency(
        "tail normalization did not reach the -r phase".into(),
    ))
}

/// Apply the natural extension once on Omega*-coordinates:
/// both endpoints move by `S T^{-a0}` with a0 = <xi>.
pub fn extension_step<F: Real>(
    ctx: &HeckeContext<F>,
    g: &GeodesicEndpoints<F>,
) -> Result<(GeodesicEndpoints<F>, i64)> {
    let a0 = nearest(ctx, g.xi)?;
    if a0 == 0 {
        return Err(Error::UndefinedStep("xi inside I_q; extension undefined".into()));
    }
    let m = ctx.s().compose(&ctx.t_pow(-a0));
    Ok((g.map(&m)?, a0))
}

/// Smallest k >= 0 with F^k of the pair strongly reduced.
pub fn strongly_reduce<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    rg: &ReducedGeodesic<F>,
) -> Result<(ReducedGeodesic<F>, usize)> {
    let mut cur = rg.endpoints;
    let mut tokens = rg.word_tokens.clone();
    for k in 0..(2 * ctx.q + 8) as usize {
        if is_strongly_reduced(ctx, part, &cur) {
            let rg = finish_reduced(ctx, cur, tokens)?;
            return Ok((rg, k));
        }
        let (next, a0) = extension_step(ctx, &cur)?;
        tokens.insert(0, Gen::T(-a0));
        tokens.insert(0, Gen::S);
        cur = next;
    }
    Err(Error::InternalConsistency(
        "no strongly reduced image found (constant tail?)".into(),
    ))
}

/// Hyperbolic element, fixed point and conjugate fixed point attached to a
/// primitive periodic regular code.
pub fn hyperbolic_from_periodic<F: Real>(
    ctx: &HeckeContext<F>,
    cycle: &[i64],
) -> Result<(Mobius<F>, F, F)> {
    validate_cycle(ctx, cycle)?;
    let mut word = Vec::with_capacity(2 * cycle.len());
    for &d in cycle {
        word.push(Gen::S);
        word.push(Gen::T(d));
    }
    let a = ctx.word(&word);
    let code = Code::periodic(0, vec![], cycle.to_vec(), Flavor::Regular);
    let xi = crate::codes::evaluate_unchecked(ctx, &code, 0)?.value;
    let mut rev: Vec<i64> = cycle.to_vec();
    rev.reverse();
    let dual = Code::periodic(0, vec![], rev, Flavor::Dual);
    let eta = crate::codes::evaluate_unchecked(ctx, &dual, 0)?.value;
    let xi_conj = eta.recip();
    let tol = c::<F>(1e6) * ctx.eps;
    if (a.apply_real(xi) - xi).abs() > tol || (a.apply_real(xi_conj) - xi_conj).abs() > tol {
        return Err(Error::InternalConsistency(
            "cycle word does not fix the evaluated endpoints".into(),
        ));
    }
    Ok((a, xi, xi_conj))
}

/// Check a cycle: nonzero digits, primitive, forbidden-block-free including
/// the wraparound.
pub fn validate_cycle<F: Real>(ctx: &HeckeContext<F>, cycle: &[i64]) -> Result<()> {
    if cycle.is_empty() {
        return Err(Error::InvalidCode("empty cycle".into()));
    }
    if cycle.iter().any(|&d| d == 0 || d.abs() > crate::codes::DIGIT_CAP) {
        return Err(Error::InvalidCode("cycle digits must be nonzero and bounded".into()));
    }
    let n = cycle.len();
    for p in 1..n {
        if n % p == 0 && (p..n).all(|i| cycle[i] == cycle[i % p]) {
            return Err(Error::InvalidCode("cycle is not primitive".into()));
        }
    }
    let pat = crate::codes::max_pattern_len(ctx);
    let mut unrolled = Vec::with_capacity(3 * n + pat);
    while unrolled.len() < 2 * n + pat {
        unrolled.extend_from_slice(cycle);
    }
    if scan_forbidden(ctx, &unrolled, false).is_some() {
        return Err(Error::InvalidCode("cycle contains a forbidden block".into()));
    }
    Ok(())
}

/// The strongly reduced closed geodesic attached to a periodic cycle:
/// endpoints (S xi, -eta) from the fixed-point data.
pub fn closed_geodesic_from_cycle<F: Real>(
    ctx: &HeckeContext<F>,
    part: &Partition<F>,
    cycle: &[i64],
) -> Result<ReducedGeodesic<F>> {
    let (_, xi, _) = hyperbolic_from_periodic(ctx, cycle)?;
    let code = Code::periodic(0, vec![], cycle.to_vec(), Flavor::Dual);
    // Past tape of the periodic geodesic reads the cycle backwards.
    let mut rev: Vec<i64> = cycle.to_vec();
    rev.reverse();
    let dual = Code { cycle: Some(rev), ..code };
    let eta_dual = crate::codes::evaluate_unchecked(ctx, &dual, 0)?.value;
    let endpoints = GeodesicEndpoints::new(-xi.recip(), -eta_dual)?;
    let rg = finish_reduced(ctx, endpoints, vec![])?;
    let rg = normalize_tail(ctx, part, &rg)?;
    let (rg, _) = strongly_reduce(ctx, part, &rg)?;
    Ok(rg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::build_partition;

    type Ctx = HeckeContext<f64>;

    fn setup(q: u32) -> (Ctx, Partition<f64>) {
        let ctx = Ctx::new(q).unwrap();
        let part = build_partition(&ctx).unwrap();
        (ctx, part)
    }

    #[test]
    fn already_reduced_input_is_fixed() {
        let (ctx, part) = setup(4);
        // u = -0.3, v = 0.5 -> (xi, eta) = (1/0.3, -0.5).
        let g = GeodesicEndpoints::new(1.0 / 0.3, -0.5).unwrap();
        assert!(in_omega_star(&ctx, &part, &g));
        let rg = reduce_endpoints(&ctx, &part, &g).unwrap();
        assert!(rg.word_tokens.is_empty());
        assert!((rg.endpoints.xi - g.xi).abs() <= 1e-12);
    }

    #[test]
    fn reduce_example_q3() {
        let (ctx, part) = setup(3);
        let g = GeodesicEndpoints::new(2f64.sqrt(), -(3f64.sqrt())).unwrap();
        let rg = reduce_endpoints(&ctx, &part, &g).unwrap();
        assert!(in_omega_star(&ctx, &part, &rg.endpoints));
        // Equivariance: the word maps the input to the output.
        let bx = rg.word.apply_real(g.xi);
        let be = rg.word.apply_real(g.eta);
        assert!((bx - rg.endpoints.xi).abs() <= 1e-9);
        assert!((be - rg.endpoints.eta).abs() <= 1e-9);
    }

    #[test]
    fn reduce_random_pairs() {
        let mut state = 0xace1u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for q in 3..=8u32 {
            let (ctx, part) = setup(q);
            let mut done = 0;
            while done < 60 {
                let xi = (next() - 0.5) * 12.0;
                let eta = (next() - 0.5) * 12.0;
                if (xi - eta).abs() < 0.2 {
                    continue;
                }
                let g = GeodesicEndpoints::new(xi, eta).unwrap();
                let rg = match reduce_endpoints(&ctx, &part, &g) {
                    Ok(rg) => rg,
                    Err(Error::CuspGeodesic(_)) => continue,
                    Err(e) => panic!("reduction failed at q={q}: {e}"),
                };
                assert!(in_omega_star(&ctx, &part, &rg.endpoints), "q={q} ({xi},{eta})");
                let bx = rg.word.apply_real(xi);
                let be = rg.word.apply_real(eta);
                assert!(
                    (bx - rg.endpoints.xi).abs() <= 1e-9 && (be - rg.endpoints.eta).abs() <= 1e-9,
                    "equivariance at q={q}"
                );
                assert!(rg.bicode.cut_is_clean(&ctx), "cut not clean at q={q}");
                done += 1;
            }
        }
    }

    #[test]
    fn cusp_endpoints_are_rejected() {
        let (ctx, part) = setup(4);
        // lambda/2 has a finite expansion.
        let g = GeodesicEndpoints::new(ctx.half_lambda(), -3.3333).unwrap();
        assert!(matches!(
            reduce_endpoints(&ctx, &part, &g),
            Err(Error::CuspGeodesic(_))
        ));
    }

    #[test]
    fn normalize_tail_examples() {
        let (ctx, part) = setup(3);
        // The golden closed geodesic sits on the excluded boundary:
        // xi = [3; (3)] = 2.618..., eta = -r exactly.
        let code = crate::codes::parse_code("3;(3)", Flavor::Regular).unwrap();
        let xi = crate::codes::evaluate(&ctx, &code, 0).unwrap().value;
        let g = GeodesicEndpoints::new(xi, -ctx.r_small).unwrap();
        let rg = finish_reduced(&ctx, g, vec![]).unwrap();
        assert!(eta_on_excluded_tail(&ctx, &part, rg.endpoints.eta).is_some());
        let out = normalize_tail(&ctx, &part, &rg).unwrap();
        assert!(in_omega_star(&ctx, &part, &out.endpoints));
        assert!(eta_on_excluded_tail(&ctx, &part, out.endpoints.eta).is_none());
        // Idempotent on clean inputs.
        let again = normalize_tail(&ctx, &part, &out).unwrap();
        assert!((again.endpoints.xi - out.endpoints.xi).abs() <= 1e-12);
    }

    #[test]
    fn normalize_tail_even_q_cases() {
        let (ctx, part) = setup(4);
        // eta = -r exactly, first digit of c(S xi) at least 2:
        // T^{-1} applies and eta moves to -R.
        let g = GeodesicEndpoints::new(2.0 * ctx.lambda + 0.3, -ctx.r_small).unwrap();
        let rg = finish_reduced(&ctx, g, vec![]).unwrap();
        assert!(in_omega_star(&ctx, &part, &g));
        let out = normalize_tail(&ctx, &part, &rg).unwrap();
        assert!(in_omega_star(&ctx, &part, &out.endpoints));
        assert!(
            (out.endpoints.eta + ctx.r_big).abs() <= 1e-9,
            "eta should move to -R, got {}",
            out.endpoints.eta
        );
        assert!((out.endpoints.xi - (g.xi - ctx.lambda)).abs() <= 1e-9, "A should be T^-1");

        // eta = -r, c(S xi) = [1, a2 <= -1, ...]: the swap map applies and
        // eta moves to r.
        let code = crate::codes::parse_code("1;-3,(5)", Flavor::Regular).unwrap();
        let xi = crate::codes::evaluate(&ctx, &code, 0).unwrap().value;
        let g = GeodesicEndpoints::new(xi, -ctx.r_small).unwrap();
        assert!(in_omega_star(&ctx, &part, &g));
        let rg = finish_reduced(&ctx, g, vec![]).unwrap();
        let out = normalize_tail(&ctx, &part, &rg).unwrap();
        assert!(in_omega_star(&ctx, &part, &out.endpoints));
        assert!(
            (out.endpoints.eta - ctx.r_small).abs() <= 1e-9,
            "eta should move to r, got {}",
            out.endpoints.eta
        );
    }

    #[test]
    fn strongly_reduce_digit_criterion() {
        // q = 6 so the tape may start with a short run of ones.
        let (ctx, part) = setup(6);
        // xi-code [1; 1, -2, ...]: first sign change at index 2 -> k = 2.
        // eta > 0 keeps the start outside the strong region.
        let code = crate::codes::parse_code("1;1,-2,(4)", Flavor::Regular).unwrap();
        let xi_val = crate::codes::evaluate(&ctx, &code, 0).unwrap().value;
        let g = GeodesicEndpoints::new(xi_val, 0.2).unwrap();
        assert!(in_omega_star(&ctx, &part, &g));
        assert!(!is_strongly_reduced(&ctx, &part, &g));
        let rg = finish_reduced(&ctx, g, vec![]).unwrap();
        let (out, k) = strongly_reduce(&ctx, &part, &rg).unwrap();
        assert_eq!(k, 2);
        assert!(is_strongly_reduced(&ctx, &part, &out.endpoints));
        // [1; 3, ...]: |a_1| >= 2 -> k = 1.
        let code = crate::codes::parse_code("1;(3)", Flavor::Regular).unwrap();
        let xi_val = crate::codes::evaluate(&ctx, &code, 0).unwrap().value;
        let g = GeodesicEndpoints::new(xi_val, 0.2).unwrap();
        let rg = finish_reduced(&ctx, g, vec![]).unwrap();
        let (_, k) = strongly_reduce(&ctx, &part, &rg).unwrap();
        assert_eq!(k, 1);
        // Already strongly reduced: k = 0.
        let g = GeodesicEndpoints::new(3.0 * ctx.lambda + 0.2, -0.4).unwrap();
        assert!(is_strongly_reduced(&ctx, &part, &g));
        let rg = finish_reduced(&ctx, g, vec![]).unwrap();
        let (_, k) = strongly_reduce(&ctx, &part, &rg).unwrap();
        assert_eq!(k, 0);
    }

    #[test]
    fn hyperbolic_from_periodic_examples() {
        let ctx = Ctx::new(3).unwrap();
        let (a, xi, conj) = hyperbolic_from_periodic(&ctx, &[3]).unwrap();
        assert!((xi - (-3.0 + 5f64.sqrt()) / 2.0).abs() <= 1e-12);
        assert!((conj - (-3.0 - 5f64.sqrt()) / 2.0).abs() <= 1e-12);
        assert!((a.trace_abs() - 3.0).abs() <= 1e-12);
        let (a, xi, _) = hyperbolic_from_periodic(&ctx, &[2, -2]).unwrap();
        assert!((a.trace_abs() - 6.0).abs() <= 1e-12);
        assert!((xi - (1.0 - 2f64.sqrt())).abs() <= 1e-12);
        assert!(matches!(
            hyperbolic_from_periodic(&ctx, &[1]),
            Err(Error::InvalidCode(_))
        ));
        assert!(matches!(
            hyperbolic_from_periodic(&ctx, &[3, 3]),
            Err(Error::InvalidCode(_))
        ));
    }

    #[test]
    fn closed_correspondence_recovers_cycles() {
        // Random primitive cycles: the hyperbolic element is genuinely
        // hyperbolic and the expansion of xi recovers the cycle.
        let mut state = 0xbeadu64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state
        };
        for q in 3..=8u32 {
            let ctx = Ctx::new(q).unwrap();
            let mut done = 0;
            while done < 40 {
                let len = 1 + (next() % 5) as usize;
                let cycle: Vec<i64> = (0..len)
                    .map(|_| {
                        let mag = 2 + (next() % 4) as i64;
                        if next() % 2 == 0 {
                            mag
                        } else {
                            -mag
                        }
                    })
                    .collect();
                if validate_cycle(&ctx, &cycle).is_err() {
                    continue;
                }
                let (a, xi, _) = hyperbolic_from_periodic(&ctx, &cycle).unwrap();
                assert!(a.trace_abs() > 2.0, "not hyperbolic at q={q}");
                let code = expand_regular(&ctx, xi, 3 * len + 6).unwrap();
                // Eventually periodic: digits repeat the cycle cyclically.
                let digits = code.unroll(2 * len);
                let rot_ok = (0..len).any(|r| {
                    digits.iter().enumerate().all(|(i, &d)| d == cycle[(i + r) % len])
                });
                assert!(rot_ok, "expansion does not recover {cycle:?} at q={q}: {digits:?}");
                done += 1;
            }
        }
    }
}
