//! Lambda-fraction digit sequences: shifts, lexicographic order, the Cantor
//! metric, forbidden-block detection and rewriting, dual-regularity tests and
//! evaluation back to real numbers.
//!
//! A code `[a0; a1, a2, ...]` stands for `a0*lambda - 1/(a1*lambda - 1/(...))`.

use std::cmp::Ordering;

use crate::context::{Gen, HeckeContext, Parity};
use crate::error::{Error, Result};
use crate::scalar::{ci, Real};

/// Maximum digit magnitude accepted from text input.
pub const DIGIT_CAP: i64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Regular,
    Dual,
}

/// A lambda-fraction: leading entry, finite head, optional repeating cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Code {
    pub leading: i64,
    pub head: Vec<i64>,
    pub cycle: Option<Vec<i64>>,
    pub flavor: Flavor,
}

impl Code {
    pub fn finite(leading: i64, head: Vec<i64>, flavor: Flavor) -> Self {
        Code { leading, head, cycle: None, flavor }.canonical()
    }

    pub fn periodic(leading: i64, head: Vec<i64>, cycle: Vec<i64>, flavor: Flavor) -> Self {
        Code { leading, head, cycle: Some(cycle), flavor }.canonical()
    }

    pub fn empty(flavor: Flavor) -> Self {
        Code { leading: 0, head: vec![], cycle: None, flavor }
    }

    pub fn is_empty(&self) -> bool {
        self.leading == 0 && self.head.is_empty() && self.cycle.is_none()
    }

    /// Number of tail digits, or None for eventually periodic codes.
    pub fn len(&self) -> Option<usize> {
        match self.cycle {
            Some(_) => None,
            None => Some(self.head.len()),
        }
    }

    /// Tail digit at 1-based index, unrolling the cycle on demand.
    pub fn digit(&self, index: usize) -> Option<i64> {
        assert!(index >= 1, "tail digits are 1-based");
        let i = index - 1;
        if i < self.head.len() {
            return Some(self.head[i]);
        }
        self.cycle.as_ref().map(|cyc| cyc[(i - self.head.len()) % cyc.len()])
    }

    /// First `n` tail digits (fewer if the code is finite and shorter).
    pub fn unroll(&self, n: usize) -> Vec<i64> {
        (1..=n).map_while(|i| self.digit(i)).collect()
    }

    pub fn negate(&self) -> Self {
        Code {
            leading: -self.leading,
            head: self.head.iter().map(|d| -d).collect(),
            cycle: self.cycle.as_ref().map(|c| c.iter().map(|d| -d).collect()),
            flavor: self.flavor,
        }
    }

    /// Canonical form: primitive cycle, minimal head.
    pub fn canonical(mut self) -> Self {
        if let Some(cyc) = self.cycle.take() {
            assert!(!cyc.is_empty(), "cycle must be nonempty");
            let mut cyc = primitive_cycle(cyc);
            // Absorb a head suffix that merely repeats the end of the cycle.
            while let Some(&last) = self.head.last() {
                if last == *cyc.last().unwrap() {
                    self.head.pop();
                    cyc.rotate_right(1);
                } else {
                    break;
                }
            }
            self.cycle = Some(cyc);
        }
        self
    }

    /// Left shift: drop the leading entry and the first `n` tail digits.
    /// Shifting a finite code past its end yields the empty code.
    pub fn shift(&self, n: usize) -> Self {
        assert!(n >= 1);
        if n <= self.head.len() {
            return Code {
                leading: 0,
                head: self.head[n..].to_vec(),
                cycle: self.cycle.clone(),
                flavor: self.flavor,
            }
            .canonical();
        }
        match &self.cycle {
            None => Code::empty(self.flavor),
            Some(cyc) => {
                let off = (n - self.head.len()) % cyc.len();
                let mut rotated = cyc.clone();
                rotated.rotate_left(off);
                Code { leading: 0, head: vec![], cycle: Some(rotated), flavor: self.flavor }
                    .canonical()
            }
        }
    }
}

fn primitive_cycle(cyc: Vec<i64>) -> Vec<i64> {
    let n = cyc.len();
    for p in 1..n {
        if n % p == 0 && (p..n).all(|i| cyc[i] == cyc[i % p]) {
            return cyc[..p].to_vec();
        }
    }
    cyc
}

impl std::fmt::Display for Code {
    /// Text syntax: `a0;a1,a2,(c1,c2)` with parentheses marking the cycle.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{};", self.leading)?;
        let mut first = true;
        for d in &self.head {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        if let Some(cyc) = &self.cycle {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "(")?;
            for (i, d) in cyc.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{d}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Parse the `a0;a1,a2,(c1,c2)` syntax.
pub fn parse_code(text: &str, flavor: Flavor) -> Result<Code> {
    let bad = |msg: &str| Error::InvalidCode(format!("{msg}: {text:?}"));
    let text = text.trim();
    let (lead_str, rest) = text.split_once(';').ok_or_else(|| bad("missing ';'"))?;
    let parse_digit = |s: &str, allow_zero: bool| -> Result<i64> {
        let v: i64 = s.trim().parse().map_err(|_| bad("bad integer"))?;
        if v.abs() > DIGIT_CAP {
            return Err(bad("digit magnitude exceeds cap"));
        }
        if !allow_zero && v == 0 {
            return Err(bad("zero digit in tail"));
        }
        Ok(v)
    };
    let leading = parse_digit(lead_str, true)?;
    let rest = rest.trim();
    let mut head = Vec::new();
    let mut cycle = None;
    if !rest.is_empty() {
        let (head_part, cycle_part) = match rest.find('(') {
            None => (rest, None),
            Some(pos) => {
                let inner = rest[pos..]
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| bad("malformed cycle parentheses"))?;
                let before = rest[..pos].trim_end().trim_end_matches(',');
                (before, Some(inner))
            }
        };
        for tok in head_part.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            head.push(parse_digit(tok, false)?);
        }
        if let Some(inner) = cycle_part {
            let mut cyc = Vec::new();
            for tok in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                cyc.push(parse_digit(tok, false)?);
            }
            if cyc.is_empty() {
                return Err(bad("empty cycle"));
            }
            cycle = Some(cyc);
        }
    }
    Ok(Code { leading, head, cycle, flavor }.canonical())
}

// ---------------------------------------------------------------------------
// Ordering and metric
// ---------------------------------------------------------------------------

/// Rank of a tail digit in the order `[1] < [2] < ... < end < ... < [-2] < [-1]`.
fn digit_rank(d: Option<i64>) -> (u8, i64) {
    match d {
        Some(d) if d > 0 => (0, d),
        None => (1, 0),
        Some(d) => (2, d),
    }
}

fn compare_horizon(c1: &Code, c2: &Code) -> usize {
    let head = c1.head.len().max(c2.head.len());
    let l1 = c1.cycle.as_ref().map_or(1, |c| c.len());
    let l2 = c2.cycle.as_ref().map_or(1, |c| c.len());
    let lcm = l1 / gcd(l1, l2) * l2;
    head + lcm + l1.max(l2) + 2
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Lexicographic order of regular codes, consistent with their real values.
pub fn compare(c1: &Code, c2: &Code) -> Result<Ordering> {
    if c1.flavor != Flavor::Regular || c2.flavor != Flavor::Regular {
        return Err(Error::InvalidParameter(
            "compare requires two regular-flavored codes".into(),
        ));
    }
    match c1.leading.cmp(&c2.leading) {
        Ordering::Equal => {}
        ord => return Ok(ord),
    }
    for i in 1..=compare_horizon(c1, c2) {
        let r1 = digit_rank(c1.digit(i));
        let r2 = digit_rank(c2.digit(i));
        match r1.cmp(&r2) {
            Ordering::Equal => continue,
            ord => return Ok(ord),
        }
    }
    Ok(Ordering::Equal)
}

/// Cantor metric: 1/(1+n) with n the first index of disagreement
/// (the leading entry sits at index 0).
pub fn code_distance<F: Real>(c1: &Code, c2: &Code) -> Result<F> {
    if c1.flavor != c2.flavor {
        return Err(Error::InvalidParameter(
            "code_distance requires codes of the same flavor".into(),
        ));
    }
    if c1.leading != c2.leading {
        return Ok(F::one());
    }
    for i in 1..=compare_horizon(c1, c2) {
        if c1.digit(i) != c2.digit(i) {
            return Ok(F::one() / ci::<F>(1 + i as i64));
        }
    }
    Ok(F::zero())
}

// ---------------------------------------------------------------------------
// Forbidden blocks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForbiddenPattern {
    /// Even q: `(e)^h, e*m`. Odd q: the run `(e)^{h+1}`.
    Run,
    /// Odd q: `(e)^h, e*2, (e)^h, e*m`.
    TwoBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForbiddenHit {
    pub index: usize,
    pub pattern: ForbiddenPattern,
    /// Sign epsilon of the block.
    pub sign: i64,
    /// Magnitude of the final block digit (1 for the odd-q ones run).
    pub m: i64,
    pub len: usize,
}

/// Longest forbidden-block length for this q.
pub fn max_pattern_len<F: Real>(ctx: &HeckeContext<F>) -> usize {
    let h = ctx.h as usize;
    match ctx.parity {
        Parity::Even => h + 1,
        Parity::Odd => 2 * h + 2,
    }
}

fn run_of(digits: &[i64], start: usize, value: i64, len: usize) -> bool {
    digits.len() >= start + len && digits[start..start + len].iter().all(|&d| d == value)
}

fn hit_at<F: Real>(ctx: &HeckeContext<F>, digits: &[i64], i: usize, reversed: bool) -> Option<ForbiddenHit> {
    let h = ctx.h as usize;
    for sign in [1i64, -1] {
        match ctx.parity {
            Parity::Even => {
                // (e)^h, e*m   -- reversed: e*m, (e)^h
                if !reversed {
                    if run_of(digits, i, sign, h)
                        && digits.get(i + h).is_some_and(|&d| d.signum() == sign)
                    {
                        return Some(ForbiddenHit {
                            index: i,
                            pattern: ForbiddenPattern::Run,
                            sign,
                            m: digits[i + h].abs(),
                            len: h + 1,
                        });
                    }
                } else if digits.get(i).is_some_and(|&d| d.signum() == sign)
                    && run_of(digits, i + 1, sign, h)
                {
                    return Some(ForbiddenHit {
                        index: i,
                        pattern: ForbiddenPattern::Run,
                        sign,
                        m: digits[i].abs(),
                        len: h + 1,
                    });
                }
            }
            Parity::Odd => {
                // (e)^{h+1} is its own reversal.
                if run_of(digits, i, sign, h + 1) {
                    return Some(ForbiddenHit {
                        index: i,
                        pattern: ForbiddenPattern::Run,
                        sign,
                        m: 1,
                        len: h + 1,
                    });
                }
                // (e)^h, 2e, (e)^h, m*e  -- reversed: m*e, (e)^h, 2e, (e)^h
                let len = 2 * h + 2;
                if !reversed {
                    if run_of(digits, i, sign, h)
                        && digits.get(i + h) == Some(&(2 * sign))
                        && run_of(digits, i + h + 1, sign, h)
                        && digits.get(i + 2 * h + 1).is_some_and(|&d| d.signum() == sign)
                    {
                        return Some(ForbiddenHit {
                            index: i,
                            pattern: ForbiddenPattern::TwoBlock,
                            sign,
                            m: digits[i + 2 * h + 1].abs(),
                            len,
                        });
                    }
                } else if digits.get(i).is_some_and(|&d| d.signum() == sign)
                    && run_of(digits, i + 1, sign, h)
                    && digits.get(i + h + 1) == Some(&(2 * sign))
                    && run_of(digits, i + h + 2, sign, h)
                {
                    return Some(ForbiddenHit {
                        index: i,
                        pattern: ForbiddenPattern::TwoBlock,
                        sign,
                        m: digits[i].abs(),
                        len,
                    });
                }
            }
        }
    }
    None
}

/// Leftmost forbidden block in a digit slice. With `reversed` set the
/// patterns are matched in reversed order (the dual-regularity test).
pub fn scan_forbidden<F: Real>(
    ctx: &HeckeContext<F>,
    digits: &[i64],
    reversed: bool,
) -> Option<ForbiddenHit> {
    (0..digits.len()).find_map(|i| hit_at(ctx, digits, i, reversed))
}

/// One rewriting step at the leftmost forbidden block, following the exact
/// case tables. The element before the block absorbs the borrow; a block at
/// the start of the slice borrows from an implicit leading 0, lengthening
/// the output on the left. Returns None when no block is present.
pub fn rewrite_forbidden<F: Real>(ctx: &HeckeContext<F>, digits: &[i64]) -> Option<Vec<i64>> {
    let hit = scan_forbidden(ctx, digits, false)?;
    let h = ctx.h as usize;
    let e = hit.sign;
    let i = hit.index;
    let mut out: Vec<i64> = Vec::with_capacity(digits.len() + 2);

    // Prefix up to (not including) the borrowing element.
    if i >= 1 {
        out.extend_from_slice(&digits[..i - 1]);
        out.push(digits[i - 1] - e);
    } else {
        out.push(-e);
    }

    let after = i + hit.len; // first element after the block
    let push_run = |out: &mut Vec<i64>, value: i64, len: usize| {
        out.extend(std::iter::repeat(value).take(len));
    };
    // Merge `-e` into the element after the block; drop it at the sequence end.
    let merge_tail = |out: &mut Vec<i64>| {
        if after < digits.len() {
            out.push(digits[after] - e);
            out.extend_from_slice(&digits[after + 1..]);
        }
    };

    match (ctx.parity, hit.pattern) {
        (Parity::Even, ForbiddenPattern::Run) => {
            if hit.m >= 2 {
                push_run(&mut out, -e, h);
                out.push(e * hit.m - e);
                out.extend_from_slice(&digits[after..]);
            } else {
                push_run(&mut out, -e, h - 1);
                merge_tail(&mut out);
            }
        }
        (Parity::Odd, ForbiddenPattern::Run) => {
            push_run(&mut out, -e, h);
            merge_tail(&mut out);
        }
        (Parity::Odd, ForbiddenPattern::TwoBlock) => {
            if hit.m >= 2 {
                push_run(&mut out, -e, h);
                out.push(-2 * e);
                push_run(&mut out, -e, h);
                out.push(e * hit.m - e);
                out.extend_from_slice(&digits[after..]);
            } else if h == 0 {
                // q = 3 special case: [a, 2e, e] -> [a - e, b - 2e].
                if after < digits.len() {
                    out.push(digits[after] - 2 * e);
                    out.extend_from_slice(&digits[after + 1..]);
                }
            } else {
                push_run(&mut out, -e, h);
                out.push(-2 * e);
                push_run(&mut out, -e, h - 1);
                merge_tail(&mut out);
            }
        }
        (Parity::Even, ForbiddenPattern::TwoBlock) => unreachable!("even q has no two-block"),
    }
    Some(contract_zeros(out))
}

/// Contract interior zero digits: `[x, 0, y] -> [x + y]` (the words `S T^0 S`
/// collapse). Trailing zeros are kept; they mark cusp-bound words.
pub fn contract_zeros(mut digits: Vec<i64>) -> Vec<i64> {
    loop {
        let Some(pos) = (1..digits.len().saturating_sub(1)).find(|&i| digits[i] == 0) else {
            return digits;
        };
        let merged = digits[pos - 1] + digits[pos + 1];
        digits.splice(pos - 1..=pos + 1, [merged]);
    }
}

/// Repeated rewriting until no forbidden block remains.
pub fn rewrite_to_regular<F: Real>(ctx: &HeckeContext<F>, digits: &[i64]) -> Result<(Vec<i64>, usize)> {
    let mut cur = contract_zeros(digits.to_vec());
    for step in 0..10_000 {
        match rewrite_forbidden(ctx, &cur) {
            None => return Ok((cur, step)),
            Some(next) => cur = next,
        }
    }
    Err(Error::InternalConsistency("rewriting did not terminate".into()))
}

/// Dual regularity: no reversed forbidden block in the sequence, with a
/// nonzero leading entry prepended to the digit stream first.
pub fn is_dual_regular<F: Real>(ctx: &HeckeContext<F>, code: &Code) -> bool {
    let window = dual_window(ctx, code);
    scan_forbidden(ctx, &window, true).is_none()
}

fn dual_window<F: Real>(ctx: &HeckeContext<F>, code: &Code) -> Vec<i64> {
    let pat = max_pattern_len(ctx);
    let cyc_len = code.cycle.as_ref().map_or(0, |c| c.len());
    let n = code.head.len() + 2 * cyc_len + 2 * pat + 2;
    let mut window = Vec::with_capacity(n + 1);
    if code.leading != 0 {
        window.push(code.leading);
    }
    window.extend(code.unroll(n));
    window
}

/// Regular validity: no forbidden block among the tail digits.
pub fn is_regular_valid<F: Real>(ctx: &HeckeContext<F>, code: &Code) -> bool {
    let pat = max_pattern_len(ctx);
    let cyc_len = code.cycle.as_ref().map_or(0, |c| c.len());
    let n = code.head.len() + 2 * cyc_len + 2 * pat + 2;
    scan_forbidden(ctx, &code.unroll(n), false).is_none()
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct Evaluation<F> {
    pub value: F,
    /// Upper bound on the truncation error (0 for finite or periodic codes).
    pub residual: F,
}

/// Evaluate a code after checking its validity for the stated flavor.
pub fn evaluate<F: Real>(ctx: &HeckeContext<F>, code: &Code, depth: usize) -> Result<Evaluation<F>> {
    let valid = match code.flavor {
        Flavor::Regular => is_regular_valid(ctx, code),
        Flavor::Dual => is_dual_regular(ctx, code),
    };
    if !valid {
        return Err(Error::NotConvergent(format!(
            "code {code} contains a forbidden block"
        )));
    }
    evaluate_unchecked(ctx, code, depth)
}

/// Evaluate without the validity check (truncated evaluation can be forced).
pub fn evaluate_unchecked<F: Real>(
    ctx: &HeckeContext<F>,
    code: &Code,
    depth: usize,
) -> Result<Evaluation<F>> {
    match &code.cycle {
        Some(cyc) => {
            // Exact value: attracting fixed point of the cycle word applied
            // after the head. No truncation error.
            let mut word = Vec::with_capacity(2 * cyc.len());
            for &d in cyc {
                word.push(Gen::S);
                word.push(Gen::T(d));
            }
            let m = ctx.word(&word);
            let v = attracting_fixed_point(ctx, &m)?;
            let x = apply_head(ctx, code, v)?;
            Ok(Evaluation { value: x, residual: F::zero() })
        }
        None => {
            let n = depth.min(code.head.len());
            let truncated = n < code.head.len();
            let half = match code.flavor {
                Flavor::Regular => ctx.half_lambda(),
                Flavor::Dual => ctx.r_big,
            };
            let v0 = eval_tail(ctx, &code.head[..n], F::zero())?;
            let x0 = ci::<F>(code.leading) * ctx.lambda + v0;
            let residual = if truncated {
                let lo = eval_tail(ctx, &code.head[..n], -half)?;
                let hi = eval_tail(ctx, &code.head[..n], half)?;
                let xl = ci::<F>(code.leading) * ctx.lambda + lo;
                let xh = ci::<F>(code.leading) * ctx.lambda + hi;
                (xl - x0).abs().max((xh - x0).abs())
            } else {
                F::zero()
            };
            Ok(Evaluation { value: x0, residual })
        }
    }
}

/// Value of `[0; digits]` with the innermost tail seeded by `seed`.
fn eval_tail<F: Real>(ctx: &HeckeContext<F>, digits: &[i64], seed: F) -> Result<F> {
    let mut acc = seed;
    for &d in digits.iter().rev() {
        let den = ci::<F>(d) * ctx.lambda + acc;
        if den.abs() <= ctx.eps {
            return Err(Error::NotConvergent("division by zero while evaluating".into()));
        }
        acc = -den.recip();
    }
    Ok(acc)
}

fn apply_head<F: Real>(ctx: &HeckeContext<F>, code: &Code, tail_value: F) -> Result<F> {
    let mut acc = tail_value;
    for &d in code.head.iter().rev() {
        let den = ci::<F>(d) * ctx.lambda + acc;
        if den.abs() <= ctx.eps {
            return Err(Error::NotConvergent("division by zero under the head".into()));
        }
        acc = -den.recip();
    }
    Ok(ci::<F>(code.leading) * ctx.lambda + acc)
}

fn attracting_fixed_point<F: Real>(
    ctx: &HeckeContext<F>,
    m: &crate::context::Mobius<F>,
) -> Result<F> {
    let m = m.normalized();
    let tr = m.a + m.d;
    let two = ci::<F>(2);
    if tr.abs() <= two + ctx.eps {
        return Err(Error::NotConvergent(
            "cycle word is not hyperbolic; the periodic fraction diverges".into(),
        ));
    }
    if m.c.abs() <= ctx.eps {
        return Err(Error::NotConvergent("cycle word fixes infinity".into()));
    }
    let disc = (tr * tr - ci::<F>(4)).sqrt();
    let z1 = (m.a - m.d + disc) / (two * m.c);
    let z2 = (m.a - m.d - disc) / (two * m.c);
    if (m.c * z1 + m.d).abs() > F::one() {
        Ok(z1)
    } else {
        Ok(z2)
    }
}

// ---------------------------------------------------------------------------
// Two-sided codes
// ---------------------------------------------------------------------------

/// Bi-infinite code around a cut: past read outward (dual), future (regular).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiCode {
    pub past: Code,
    pub future: Code,
}

impl BiCode {
    pub fn new(past: Code, future: Code) -> Result<Self> {
        if past.flavor != Flavor::Dual || future.flavor != Flavor::Regular {
            return Err(Error::InvalidParameter(
                "bi-code needs a dual past and a regular future".into(),
            ));
        }
        Ok(BiCode { past, future })
    }

    /// True when no forbidden block spans the cut (both sides being valid for
    /// their own flavor is checked separately).
    pub fn cut_is_clean<F: Real>(&self, ctx: &HeckeContext<F>) -> bool {
        let pat = max_pattern_len(ctx);
        let reach = pat + self.past.cycle.as_ref().map_or(0, |c| c.len());
        let mut tape: Vec<i64> = self.past.unroll(reach);
        tape.reverse();
        let cut = tape.len();
        tape.extend(self.future.unroll(pat + self.future.cycle.as_ref().map_or(0, |c| c.len())));
        for i in 0..cut {
            if let Some(hit) = hit_at(ctx, &tape, i, false) {
                if hit.index + hit.len > cut {
                    return false;
                }
            }
        }
        true
    }
}
