//! Simple functions, measures and the Lebesgue integral.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Interval, IntervalSet};
use crate::expr::{ae_canonicalize, eval_func, instantiate, parse_func, to_simple_parts, Cell, FuncExpr, Node};
use crate::iv::Iv;
use crate::quad::{integrate, pieces, IntegralEnclosure, Mode, QuadOptions, QuadResult};
use crate::rat::{int, pow2, rat, ser_rat, Rat};
use crate::scalar::{Bound, ExtRat};
use crate::step::StepFunction;

/// Tolerance used where a nested integral needs one and none is given.
pub fn default_tol() -> Rat {
    rat(1, 10_000_000_000)
}

/// Bound above which truncated integrals are reported as exceeded.
pub fn default_bound() -> Rat {
    int(1_000_000)
}

fn unit() -> Interval<Rat> {
    Interval::unit()
}

fn unit_set() -> IntervalSet<Rat> {
    IntervalSet::from_interval(unit())
}

/// `sum r_i * indicator(A_i)` over a finite partition of the ambient interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleFunction {
    parts: Vec<(IntervalSet<Rat>, Rat)>,
    ambient: Interval<Rat>,
}

impl SimpleFunction {
    pub fn new(parts: Vec<(IntervalSet<Rat>, Rat)>, ambient: Interval<Rat>) -> Result<Self> {
        let mut union = IntervalSet::empty();
        for (a, _) in &parts {
            if !a.intersect(&union).is_empty() {
                return Err(Error::Precondition("parts of a simple function must be disjoint".into()));
            }
            union = union.union(a);
        }
        if union != IntervalSet::from_interval(ambient.clone()) {
            return Err(Error::Precondition("parts of a simple function must cover the ambient interval".into()));
        }
        let parts = parts.into_iter().filter(|(a, _)| !a.is_empty()).collect();
        Ok(SimpleFunction { parts, ambient })
    }

    pub fn constant(c: Rat, ambient: Interval<Rat>) -> Self {
        SimpleFunction { parts: vec![(IntervalSet::from_interval(ambient.clone()), c)], ambient }
    }

    /// `indicator(E)` on `ambient`.
    pub fn indicator(e: &IntervalSet<Rat>, ambient: Interval<Rat>) -> Self {
        let inside = e.intersect(&IntervalSet::from_interval(ambient.clone()));
        let outside = inside.complement(&ambient);
        let parts = [(inside, Rat::one()), (outside, Rat::zero())].into_iter().filter(|(a, _)| !a.is_empty()).collect();
        SimpleFunction { parts, ambient }
    }

    pub fn parts(&self) -> &[(IntervalSet<Rat>, Rat)] {
        &self.parts
    }

    pub fn ambient(&self) -> &Interval<Rat> {
        &self.ambient
    }

    pub fn value_at(&self, x: &Rat) -> Option<&Rat> {
        self.parts.iter().find(|(a, _)| a.contains(x)).map(|(_, r)| r)
    }

    pub fn map(&self, f: impl Fn(&Rat) -> Rat) -> Self {
        SimpleFunction { parts: self.parts.iter().map(|(a, r)| (a.clone(), f(r))).collect(), ambient: self.ambient.clone() }
    }

    pub fn abs(&self) -> Self {
        self.map(|r| r.abs())
    }

    /// Merges parts carrying the same value.
    pub fn merged(&self) -> Self {
        let mut out: Vec<(IntervalSet<Rat>, Rat)> = Vec::new();
        for (a, r) in &self.parts {
            match out.iter_mut().find(|(_, v)| v == r) {
                Some((b, _)) => *b = b.union(a),
                None => out.push((a.clone(), r.clone())),
            }
        }
        out.sort_by(|x, y| x.1.cmp(&y.1));
        SimpleFunction { parts: out, ambient: self.ambient.clone() }
    }

    /// As an expression `sum r_i * indicator(A_i)`.
    pub fn to_expr(&self) -> FuncExpr {
        let mut acc: Option<FuncExpr> = None;
        for (a, r) in &self.parts {
            if r.is_zero() {
                continue;
            }
            let term = FuncExpr::constant(r.clone()) * FuncExpr::indicator(a);
            acc = Some(match acc {
                Some(e) => e + term,
                None => term,
            });
        }
        acc.unwrap_or_else(|| FuncExpr::int(0))
    }
}

fn combine(s: &SimpleFunction, t: &SimpleFunction, op: impl Fn(&Rat, &Rat) -> Rat) -> Result<SimpleFunction> {
    if s.ambient != t.ambient {
        return Err(Error::Precondition("simple functions live on different intervals".into()));
    }
    let mut parts = Vec::new();
    for (a, r) in &s.parts {
        for (b, q) in &t.parts {
            let c = a.intersect(b);
            if !c.is_empty() {
                parts.push((c, op(r, q)));
            }
        }
    }
    Ok(SimpleFunction { parts, ambient: s.ambient.clone() })
}

/// Sum on the common refinement `A_i & B_j`.
pub fn simple_add(s: &SimpleFunction, t: &SimpleFunction) -> Result<SimpleFunction> {
    combine(s, t, |a, b| a + b)
}

pub fn simple_mul(s: &SimpleFunction, t: &SimpleFunction) -> Result<SimpleFunction> {
    combine(s, t, |a, b| a * b)
}

pub fn simple_scale(c: &Rat, s: &SimpleFunction) -> SimpleFunction {
    s.map(|r| c * r)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Measure {
    Lebesgue,
    /// Point mass at `x0`.
    Dirac(Rat),
    /// `nu(A) = int_A g`, with `g >= 0`.
    Density(FuncExpr),
}

impl Measure {
    /// Density measure after certifying `g >= 0` on the unit interval.
    pub fn density(g: FuncExpr) -> Result<Self> {
        let c = ae_canonicalize(&g, &unit())?;
        let node = Node::<f64>::compile(&c, &unit())?;
        match certify_nonneg(&node, &unit_set(), NONNEG_DEPTH)? {
            Some(true) => Ok(Measure::Density(g)),
            Some(false) => Err(Error::Precondition(format!("density {g} takes negative values"))),
            None => Err(Error::NotCertified(format!("could not certify that {g} is nonnegative"))),
        }
    }

    /// Enclosure of the measure of `a`.
    pub fn measure_of(&self, a: &IntervalSet<Rat>) -> Result<IntegralEnclosure> {
        match self {
            Measure::Lebesgue => Ok(IntegralEnclosure::point(a.measure())),
            Measure::Dirac(x0) => Ok(IntegralEnclosure::point(if a.contains(x0) { int(1) } else { int(0) })),
            Measure::Density(g) => Ok(integrate_over(g, a, &Measure::Lebesgue, &default_tol())?.enclosure),
        }
    }
}

/// `sum r_i m(A_i)`: exact for Lebesgue and Dirac measures.
pub fn simple_integral(s: &SimpleFunction, m: &Measure) -> Result<IntegralEnclosure> {
    match m {
        Measure::Dirac(x0) => match s.value_at(x0) {
            Some(r) => Ok(IntegralEnclosure::point(r.clone())),
            None if !s.ambient.contains(x0) => Ok(IntegralEnclosure::point(int(0))),
            None => Err(Error::Invariant { level: 0, msg: format!("{x0} lies in no part") }),
        },
        _ => {
            let mut acc = IntegralEnclosure::point(int(0));
            for (a, r) in &s.parts {
                if !r.is_zero() {
                    acc = acc.add(&m.measure_of(a)?.scale(r));
                }
            }
            Ok(acc)
        }
    }
}

const NONNEG_DEPTH: u32 = 18;
const NONNEG_CELLS: usize = 200_000;

fn open_cell<B: Bound>(x0: &Rat, x1: &Rat) -> Cell<B> {
    let mut c = Cell::from_interval(&Interval::closed(x0.clone(), x1.clone()));
    c.region = Some(Interval::open(x0.clone(), x1.clone()));
    c
}

/// `Some(true)` if `f >= 0` off piece endpoints of `region`, `Some(false)`
/// if some cell is certainly negative, `None` if bisection ran out.
pub(crate) fn certify_nonneg<B: Bound>(node: &Node<B>, region: &IntervalSet<Rat>, depth: u32) -> Result<Option<bool>> {
    let two = int(2);
    let mut stack: Vec<(Rat, Rat, u32)> = pieces(node, region).into_iter().map(|(a, b)| (a, b, 0)).collect();
    let mut undecided = false;
    let mut cells = 0usize;
    while let Some((a, b, d)) = stack.pop() {
        cells += 1;
        let r = match node.range(&open_cell(&a, &b)) {
            Ok(r) => r,
            Err(_) if d < depth => Iv::entire(),
            Err(e) => return Err(e),
        };
        if !r.lo.is_neg() {
            continue;
        }
        if r.hi.is_neg() {
            return Ok(Some(false));
        }
        if d >= depth || cells >= NONNEG_CELLS {
            undecided = true;
            continue;
        }
        let m = (&a + &b) / &two;
        stack.push((a, m.clone(), d + 1));
        stack.push((m, b, d + 1));
    }
    Ok(if undecided { None } else { Some(true) })
}

/// Hull of the range over the open pieces of `region`.
pub(crate) fn global_range<B: Bound>(node: &Node<B>, region: &IntervalSet<Rat>) -> Result<Option<Iv<B>>> {
    let mut out: Option<Iv<B>> = None;
    for (a, b) in pieces(node, region) {
        let r = node.range(&open_cell(&a, &b))?;
        out = Some(match out {
            Some(o) => o.hull(&r),
            None => r,
        });
    }
    Ok(out)
}

/// Certified integral, possibly wider than requested.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Integral {
    pub enclosure: IntegralEnclosure,
    /// The width reached the requested tolerance.
    pub at_tolerance: bool,
}

impl Integral {
    fn exact(v: Rat) -> Self {
        Integral { enclosure: IntegralEnclosure::point(v), at_tolerance: true }
    }
}

const EXACT_TRY_CELLS: usize = 64;

fn quad_with<B: Bound>(f: &FuncExpr, region: &IntervalSet<Rat>, ambient: &Interval<Rat>, opts: &QuadOptions) -> Result<QuadResult> {
    let node = Node::<B>::compile(f, ambient)?;
    if let Some(r) = global_range(&node, region)? {
        if !r.is_finite() {
            return Err(Error::Unbounded(format!("{f} is not bounded on the region")));
        }
    }
    integrate(&node, region, opts)
}

/// Quadrature of an already canonical expression, exact backend first when possible.
pub(crate) fn quad_canonical(f: &FuncExpr, region: &IntervalSet<Rat>, ambient: &Interval<Rat>, opts: &QuadOptions) -> Result<QuadResult> {
    if f.is_rational() && opts.stop_above.is_none() {
        let mut o = opts.clone();
        o.max_cells = EXACT_TRY_CELLS;
        let q = quad_with::<ExtRat>(f, region, ambient, &o)?;
        if q.converged {
            return Ok(q);
        }
    }
    quad_with::<f64>(f, region, ambient, opts)
}

/// Lebesgue integral of `f` over `region` within `ambient`.
pub fn lebesgue_in(f: &FuncExpr, region: &IntervalSet<Rat>, ambient: &Interval<Rat>, tol: &Rat) -> Result<Integral> {
    let c = ae_canonicalize(f, ambient)?;
    let region = region.intersect(&IntervalSet::from_interval(ambient.clone()));
    if let Some(parts) = to_simple_parts(&c, ambient)? {
        let mut acc = Rat::zero();
        for (p, v) in parts {
            if !v.is_zero() {
                acc += region.intersect(&IntervalSet::from_interval(p)).measure() * v;
            }
        }
        return Ok(Integral::exact(acc));
    }
    let q = quad_canonical(&c, &region, ambient, &QuadOptions::taylor(tol.clone()))?;
    Ok(Integral { enclosure: IntegralEnclosure::from_quad(&q)?, at_tolerance: q.converged })
}

/// Integral of a bounded function against `m` over the unit interval.
pub fn lebesgue_integral_bounded(f: &FuncExpr, m: &Measure, tol: &Rat) -> Result<Integral> {
    integrate_over(f, &unit_set(), m, tol)
}

/// `int_E f dm = int f indicator(E) dm`.
pub fn integrate_over(f: &FuncExpr, e: &IntervalSet<Rat>, m: &Measure, tol: &Rat) -> Result<Integral> {
    match m {
        Measure::Lebesgue => lebesgue_in(f, e, &unit(), tol),
        Measure::Dirac(x0) => {
            if !e.contains(x0) {
                return Ok(Integral::exact(int(0)));
            }
            let v = eval_func(f, x0, &unit())?;
            match v.to_rats() {
                Some((lo, hi)) => Ok(Integral { at_tolerance: &hi - &lo <= *tol, enclosure: IntegralEnclosure::new(lo, hi) }),
                None => Err(Error::Unbounded(format!("{f} is infinite at {x0}"))),
            }
        }
        Measure::Density(g) => lebesgue_in(&(f.clone() * g.clone()), e, &unit(), tol),
    }
}

/// Value and error certificate of a range-partition approximation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangePartition {
    pub simple: SimpleFunction,
    /// Range levels `c_i = a + i eps`.
    pub levels: Vec<Rat>,
    /// `sup |f - f_n| <= eps` off `slack`.
    pub eps: Rat,
    /// Cells where bisection could not separate a level.
    pub slack: IntervalSet<Rat>,
    /// Bound on `|f - f_n|` on `slack`.
    pub slack_error: Rat,
    /// `int f` enclosed by `int f_n` minus the per-cell errors.
    pub integral: IntegralEnclosure,
}

const PREIMAGE_DEPTH: u32 = 40;
const PARTITION_CELLS: usize = 1 << 18;

/// Upper simple approximation `f_n = c_i` on the preimage of `[c_(i-1), c_i)`.
///
/// Preimages are localized by bisecting the domain until each cell's range
/// lies in one level band; cells still straddling a level at depth 40 form the
/// slack set and take the level above their range.
pub fn range_partition(f: &FuncExpr, n: u32) -> Result<RangePartition> {
    if n == 0 {
        return Err(Error::Precondition("need at least one level".into()));
    }
    let amb = unit();
    let c = ae_canonicalize(f, &amb)?;
    let node = Node::<f64>::compile(&c, &amb)?;
    let whole = IntervalSet::from_interval(amb.clone());
    let fin = |v: &f64| v.to_rat().ok_or_else(|| Error::Unbounded(format!("{f} is not bounded")));
    let g = node.range(&Cell::from_interval(&amb))?;
    let (a, b) = (fin(&g.lo)?, fin(&g.hi)?);
    if a == b {
        let simple = SimpleFunction::constant(a.clone(), amb.clone());
        let integral = IntegralEnclosure::point(a.clone() * amb.length());
        return Ok(RangePartition { simple, levels: vec![a], eps: Rat::zero(), slack: IntervalSet::empty(), slack_error: Rat::zero(), integral });
    }
    let eps = (&b - &a) / int(n as i64);
    let levels: Vec<Rat> = (0..=n).map(|i| &a + &eps * int(i as i64)).collect();
    let band = |y: &Rat| -> usize {
        let k = ((y - &a) / &eps).floor().to_integer();
        let k: i64 = k.try_into().unwrap_or(i64::MAX);
        (k + 1).clamp(1, n as i64) as usize
    };

    let mut cells: Vec<(Interval<Rat>, usize, Rat)> = Vec::new();
    let mut slack = Vec::new();
    let mut slack_error = Rat::zero();
    let mut visit = |iv: Interval<Rat>, r: &Iv<f64>, forced: bool, slack_cell: bool| -> Result<bool> {
        let (lo, hi) = (fin(&r.lo)?, fin(&r.hi)?);
        let (bl, bh) = (band(&lo), band(&hi));
        if bl != bh && !forced {
            return Ok(false);
        }
        let err = &levels[bh] - &lo;
        if slack_cell && bl != bh {
            if err > slack_error {
                slack_error = err.clone();
            }
            slack.push(iv.clone());
        }
        cells.push((iv, bh, err));
        Ok(true)
    };
    let two = int(2);
    let mut stack: Vec<(Rat, Rat, u32)> = Vec::new();
    let mut points: Vec<Rat> = vec![amb.lo.clone(), amb.hi.clone()];
    for (p0, p1) in pieces(&node, &whole) {
        points.push(p0.clone());
        points.push(p1.clone());
        stack.push((p0, p1, 0));
    }
    while let Some((x0, x1, d)) = stack.pop() {
        let r = node.range(&open_cell(&x0, &x1))?;
        let deep = d >= PREIMAGE_DEPTH;
        if !visit(Interval::open(x0.clone(), x1.clone()), &r, deep, deep)? {
            let m = (&x0 + &x1) / &two;
            points.push(m.clone());
            stack.push((x0, m.clone(), d + 1));
            stack.push((m, x1, d + 1));
        }
        if stack.len() + points.len() > PARTITION_CELLS {
            return Err(Error::NotCertified("range partition needs too many cells".into()));
        }
    }
    points.sort();
    points.dedup();
    for p in points {
        let r = node.range(&Cell::point(&p))?;
        visit(Interval::point(p), &r, true, false)?;
    }

    let mut groups: Vec<Vec<Interval<Rat>>> = vec![Vec::new(); n as usize + 1];
    let mut approx = Rat::zero();
    let mut loss = Rat::zero();
    for (iv, k, err) in cells {
        let len = iv.length();
        approx += &levels[k] * &len;
        loss += err * len;
        groups[k].push(iv);
    }
    let parts = groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(k, g)| (IntervalSet::normalize(g), levels[k].clone()))
        .collect();
    let simple = SimpleFunction::new(parts, amb)?;
    Ok(RangePartition {
        simple,
        levels,
        eps,
        slack: IntervalSet::normalize(slack),
        slack_error,
        integral: IntegralEnclosure::new(&approx - loss, approx),
    })
}

/// One truncation level `int min(f, n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruncationStep {
    #[serde(serialize_with = "ser_rat")]
    pub n: Rat,
    pub enclosure: IntegralEnclosure,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Truncation {
    /// Limit enclosure: the last level widened by the extrapolated tail.
    Integrable {
        enclosure: IntegralEnclosure,
        #[serde(serialize_with = "ser_rat")]
        tail: Rat,
        steps: Vec<TruncationStep>,
    },
    /// `int min(f, n)` passed the bound; a report, not a proof of divergence.
    Exceeded {
        #[serde(serialize_with = "ser_rat")]
        bound: Rat,
        #[serde(serialize_with = "ser_rat")]
        n: Rat,
        #[serde(serialize_with = "ser_rat")]
        lower: Rat,
        steps: Vec<TruncationStep>,
    },
    /// Neither converged nor exceeded before the level budget ran out.
    NotCertified { steps: Vec<TruncationStep> },
}

impl Truncation {
    pub fn enclosure(&self) -> Option<&IntegralEnclosure> {
        match self {
            Truncation::Integrable { enclosure, .. } => Some(enclosure),
            _ => None,
        }
    }

    pub fn steps(&self) -> &[TruncationStep] {
        match self {
            Truncation::Integrable { steps, .. } | Truncation::Exceeded { steps, .. } | Truncation::NotCertified { steps } => steps,
        }
    }
}

const F64_LEVEL_BITS: u64 = 500;
const MAX_LEVEL_BITS: u64 = 4096;
const BIG_ORDER: usize = 5;

fn bits(n: &Rat) -> u64 {
    n.to_integer().bits()
}

/// `int_region min(f, n)` for canonical nonnegative `f`.
fn truncated_canonical(
    f: &FuncExpr,
    n: &Rat,
    region: &IntervalSet<Rat>,
    amb: &Interval<Rat>,
    tol: &Rat,
    stop_above: Option<&Rat>,
) -> Result<QuadResult> {
    let g = f.clone().min(FuncExpr::constant(n.clone()));
    let b = bits(n);
    if b <= F64_LEVEL_BITS {
        let mut o = QuadOptions::taylor(tol.clone());
        o.stop_above = stop_above.cloned();
        o.max_cells = 1_000_000;
        return quad_canonical(&g, region, amb, &o);
    }
    let node = Node::<ExtRat>::compile(&g, amb)?;
    let mut o = QuadOptions::taylor(crate::rat::max(tol, &rat(1, 16)));
    o.mode = Mode::Taylor(BIG_ORDER);
    o.stop_above = stop_above.cloned();
    o.max_level = (b + 64) as u32;
    o.max_cells = 40_000;
    integrate(&node, region, &o)
}

/// `int min(f, n)` over the unit interval.
pub fn truncated_integral(f: &FuncExpr, n: &Rat, tol: &Rat) -> Result<Integral> {
    let c = ae_canonicalize(f, &unit())?;
    let q = truncated_canonical(&c, n, &unit_set(), &unit(), tol, None)?;
    Ok(Integral { enclosure: IntegralEnclosure::from_quad(&q)?, at_tolerance: q.converged })
}

fn nonneg_checked(f: &FuncExpr, region: &IntervalSet<Rat>, amb: &Interval<Rat>) -> Result<(FuncExpr, Option<Iv<f64>>)> {
    let c = ae_canonicalize(f, amb)?;
    let node = Node::<f64>::compile(&c, amb)?;
    match certify_nonneg(&node, region, NONNEG_DEPTH)? {
        Some(true) => {}
        Some(false) => return Err(Error::Precondition(format!("{f} takes negative values"))),
        None => return Err(Error::NotCertified(format!("could not certify that {f} is nonnegative"))),
    }
    let r = global_range(&node, region)?;
    Ok((c, r))
}

/// Integral of a nonnegative function as the limit of its truncations.
pub fn lebesgue_integral_nonneg(f: &FuncExpr, tol: &Rat, bound: &Rat) -> Result<Truncation> {
    nonneg_over(f, &unit_set(), tol, bound)
}

/// Truncations at `n = 1, 2, 4, ...`, switching to `n -> n^2` when successive
/// gains stop shrinking; the limit is reached once the last gain is below
/// `tol / 2` and the geometric tail extrapolated from the last two gains,
/// doubled for safety, is below `tol / 2` as well. The tail is an
/// extrapolation, not a bound.
pub fn nonneg_over(f: &FuncExpr, region: &IntervalSet<Rat>, tol: &Rat, bound: &Rat) -> Result<Truncation> {
    nonneg_in(f, region, &unit(), tol, bound)
}

/// [`nonneg_over`] within an arbitrary ambient interval.
pub fn nonneg_in(f: &FuncExpr, region: &IntervalSet<Rat>, amb: &Interval<Rat>, tol: &Rat, bound: &Rat) -> Result<Truncation> {
    let region = region.intersect(&IntervalSet::from_interval(amb.clone()));
    let (c, range) = nonneg_checked(f, &region, amb)?;
    let sup = range.as_ref().and_then(|r| r.hi.to_rat());
    let step_tol = tol / int(256);
    let half = tol / int(2);
    let mut steps: Vec<TruncationStep> = Vec::new();
    let mut n = int(1);
    let mut squaring = false;
    let mut prev_gain: Option<(Rat, Rat)> = None;
    loop {
        if sup.as_ref().is_some_and(|s| *s <= n) || range.is_none() {
            let e = lebesgue_in(&c, &region, amb, &step_tol)?.enclosure;
            if e.lo > *bound {
                return Ok(Truncation::Exceeded { bound: bound.clone(), n, lower: e.lo, steps });
            }
            steps.push(TruncationStep { n, enclosure: e.clone() });
            return Ok(Truncation::Integrable { enclosure: e, tail: Rat::zero(), steps });
        }
        let q = truncated_canonical(&c, &n, &region, amb, &step_tol, Some(bound))?;
        let lo = q.lo.to_rat().unwrap_or_else(Rat::zero);
        if q.exceeded || lo > *bound {
            return Ok(Truncation::Exceeded { bound: bound.clone(), n, lower: lo, steps });
        }
        let e = IntegralEnclosure::from_quad(&q)?;
        let gain = steps.last().map(|prev| {
            let hi = &e.hi - &prev.enclosure.lo;
            let lo = crate::rat::max(&(&e.lo - &prev.enclosure.hi), &Rat::zero());
            (lo, hi)
        });
        if let (Some((g_lo, g_hi)), Some((p_lo, p_hi))) = (&gain, &prev_gain) {
            if p_lo.is_positive() {
                let rho = g_hi / p_lo;
                if rho < int(1) {
                    let tail = int(2) * g_hi * &rho / (int(1) - &rho);
                    if *g_hi <= half && tail <= half {
                        let enclosure = IntegralEnclosure::new(e.lo.clone(), &e.hi + &tail);
                        steps.push(TruncationStep { n, enclosure: e });
                        return Ok(Truncation::Integrable { enclosure, tail, steps });
                    }
                }
                squaring |= g_lo / p_hi > rat(9, 10);
            } else if *p_hi <= step_tol && *g_hi <= step_tol {
                // no gain at two consecutive levels: f <= n off a null set
                steps.push(TruncationStep { n, enclosure: e.clone() });
                return Ok(Truncation::Integrable { enclosure: e, tail: Rat::zero(), steps });
            }
        }
        prev_gain = gain;
        steps.push(TruncationStep { n: n.clone(), enclosure: e });
        n = if squaring { &n * &n } else { &n * int(2) };
        if bits(&n) > MAX_LEVEL_BITS {
            return Ok(Truncation::NotCertified { steps });
        }
    }
}

/// `(max(f, 0), max(-f, 0))`.
pub fn split_pos_neg(f: &FuncExpr) -> (FuncExpr, FuncExpr) {
    (f.clone().max(FuncExpr::int(0)), (-f.clone()).max(FuncExpr::int(0)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum General {
    Integrable { enclosure: IntegralEnclosure, positive: Truncation, negative: Truncation },
    /// One half passed the bound or did not settle.
    NotIntegrableAtBound { positive: Truncation, negative: Truncation },
}

impl General {
    pub fn enclosure(&self) -> Option<&IntegralEnclosure> {
        match self {
            General::Integrable { enclosure, .. } => Some(enclosure),
            _ => None,
        }
    }
}

/// `int f = int f+ - int f-`.
pub fn lebesgue_integral_general(f: &FuncExpr, tol: &Rat, bound: &Rat) -> Result<General> {
    general_over(f, &unit_set(), tol, bound)
}

pub fn general_over(f: &FuncExpr, region: &IntervalSet<Rat>, tol: &Rat, bound: &Rat) -> Result<General> {
    general_in(f, region, &unit(), tol, bound)
}

pub fn general_in(f: &FuncExpr, region: &IntervalSet<Rat>, amb: &Interval<Rat>, tol: &Rat, bound: &Rat) -> Result<General> {
    let (p, m) = split_pos_neg(f);
    let half = tol / int(2);
    let positive = nonneg_in(&p, region, amb, &half, bound)?;
    let negative = nonneg_in(&m, region, amb, &half, bound)?;
    match (positive.enclosure(), negative.enclosure()) {
        (Some(a), Some(b)) => Ok(General::Integrable { enclosure: a.sub(b), positive, negative }),
        _ => Ok(General::NotIntegrableAtBound { positive, negative }),
    }
}

/// Bounded path when `f` is bounded on `region`, otherwise the signed
/// truncation path; fails when the latter does not certify.
pub fn integral_auto(f: &FuncExpr, region: &IntervalSet<Rat>, tol: &Rat) -> Result<Integral> {
    integral_in(f, region, &unit(), tol)
}

/// [`integral_auto`] within an arbitrary ambient interval.
pub fn integral_in(f: &FuncExpr, region: &IntervalSet<Rat>, amb: &Interval<Rat>, tol: &Rat) -> Result<Integral> {
    match lebesgue_in(f, region, amb, tol) {
        Err(Error::Unbounded(_)) => {}
        other => return other,
    }
    match general_in(f, region, amb, tol, &default_bound())? {
        General::Integrable { enclosure, .. } => Ok(Integral { at_tolerance: enclosure.width() <= *tol, enclosure }),
        General::NotIntegrableAtBound { .. } => Err(Error::NotCertified(format!("{f} is not integrable at the default bound"))),
    }
}

fn random_set(rng: &mut ChaCha8Rng, total: &Rat) -> IntervalSet<Rat> {
    const DEN: i64 = 1 << 30;
    let k = rng.gen_range(1..=6usize);
    let mut weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=1000)).collect();
    let wsum: i64 = weights.iter().sum();
    // strict: the set must have measure below `total`
    let budget = total * rat(999, 1000);
    let mut comps = Vec::new();
    let anchor_zero = rng.gen_bool(0.5);
    for (i, w) in weights.drain(..).enumerate() {
        let len = &budget * rat(w, wsum);
        let start = if i == 0 && anchor_zero {
            Rat::zero()
        } else {
            let room = Rat::one() - &len;
            room * rat(rng.gen_range(0..DEN), DEN)
        };
        comps.push(Interval::new(start.clone(), &start + &len, rng.gen_bool(0.5), rng.gen_bool(0.5)).unwrap_or_else(|| Interval::point(start)));
    }
    IntervalSet::normalize(comps)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbsContinuityReport {
    /// Level `N` with `int (f - N)+ < eps / 2`.
    #[serde(serialize_with = "ser_rat")]
    pub level: Rat,
    pub excess: IntegralEnclosure,
    /// `eps / (2N)`: every `A` with `m(A) < delta` has `int_A f < eps`.
    #[serde(serialize_with = "ser_rat")]
    pub delta: Rat,
    /// Largest enclosure upper bound of `int_A f` over the trials.
    #[serde(serialize_with = "ser_rat")]
    pub worst: Rat,
    pub trials: usize,
    pub passed: usize,
}

/// Finds `delta` for `eps` and checks it on random sets of measure below `delta`.
pub fn abs_continuity_probe(f: &FuncExpr, eps: &Rat, trials: usize, seed: u64) -> Result<AbsContinuityReport> {
    if !eps.is_positive() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let whole = nonneg_over(f, &unit_set(), &(eps / int(100)), &default_bound())?;
    if whole.enclosure().is_none() {
        return Err(Error::Precondition(format!("integrability of {f} is not certified")));
    }
    let half = eps / int(2);
    let mut level = int(1);
    let excess = loop {
        let g = (f.clone() - FuncExpr::constant(level.clone())).max(FuncExpr::int(0));
        if let Truncation::Integrable { enclosure, .. } = nonneg_over(&g, &unit_set(), &(eps / int(64)), &default_bound())? {
            if enclosure.hi < half {
                break enclosure;
            }
        }
        level *= int(2);
        if bits(&level) > 64 {
            return Err(Error::NotCertified("no truncation level makes the excess small".into()));
        }
    };
    let delta = eps / (int(2) * &level);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Rat::zero();
    let mut passed = 0;
    for _ in 0..trials {
        let a = random_set(&mut rng, &delta);
        debug_assert!(a.measure() < delta);
        let hi = match nonneg_over(f, &a, &(eps / int(1000)), &default_bound())? {
            Truncation::Integrable { enclosure, .. } => enclosure.hi,
            _ => continue,
        };
        if hi < *eps {
            passed += 1;
        }
        if hi > worst {
            worst = hi;
        }
    }
    Ok(AbsContinuityReport { level, excess, delta, worst, trials, passed })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityCheck {
    pub union: IntegralEnclosure,
    pub parts: Vec<IntegralEnclosure>,
    /// Distance between the union enclosure and the summed part enclosures.
    #[serde(serialize_with = "ser_rat")]
    pub residual: Rat,
    /// Sum of all enclosure widths.
    #[serde(serialize_with = "ser_rat")]
    pub widths: Rat,
}

impl DensityCheck {
    pub fn additive(&self) -> bool {
        self.residual <= self.widths
    }
}

fn nu(f: &FuncExpr, a: &IntervalSet<Rat>) -> Result<IntegralEnclosure> {
    if a.measure().is_zero() {
        return Ok(IntegralEnclosure::point(int(0)));
    }
    match nonneg_over(f, a, &default_tol(), &default_bound())? {
        Truncation::Integrable { enclosure, .. } => Ok(enclosure),
        _ => Err(Error::NotCertified(format!("{f} is not integrable at the default bound"))),
    }
}

/// Additivity of `nu_f(A) = int_A f` over disjoint parts.
pub fn density_measure_check(f: &FuncExpr, parts: &[IntervalSet<Rat>]) -> Result<DensityCheck> {
    let mut union = IntervalSet::empty();
    for p in parts {
        if !p.intersect(&union).is_empty() {
            return Err(Error::Precondition("parts must be disjoint".into()));
        }
        union = union.union(p);
    }
    let whole = nu(f, &union)?;
    let each: Vec<IntegralEnclosure> = parts.iter().map(|p| nu(f, p)).collect::<Result<_>>()?;
    let sum = each.iter().fold(IntegralEnclosure::point(int(0)), |a, e| a.add(e));
    let residual = crate::rat::max(&(&sum.lo - &whole.hi), &(&whole.lo - &sum.hi)).max(Rat::zero());
    let widths = each.iter().fold(whole.width(), |a, e| a + e.width());
    Ok(DensityCheck { union: whole, parts: each, residual, widths })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConvergenceMode {
    Bounded,
    Monotone,
    Dominated(FuncExpr),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergenceRow {
    pub n: i64,
    pub integral: IntegralEnclosure,
    /// Certified lower bound on `sup |f_n|`.
    #[serde(serialize_with = "ser_rat")]
    pub sup_lo: Rat,
    /// Certified upper bound on `sup |f_n|`, absent when unbounded.
    pub sup_hi: Option<String>,
    /// `f_(n-1) <= f_n`, or domination by `g`: certified, refuted, or undecided.
    pub hypothesis: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Some `sup |f_n|` certainly exceeds the bound observed for the first term.
    pub uniform_bound_violated: bool,
    /// Some row certainly violates the monotone or dominated hypothesis.
    pub hypothesis_violated: bool,
    pub limit_integral: Option<IntegralEnclosure>,
    /// Whether the last integral meets the integral of the limit.
    pub limit_matches: Option<bool>,
    /// Upper bound on `|f_N - limit|` over the probe points.
    pub probe_residual: Option<f64>,
}

const PROBES: usize = 64;

fn sup_bounds(f: &FuncExpr) -> Result<(Rat, Option<Rat>)> {
    let node = Node::<f64>::compile(f, &unit())?;
    let mut lo = Rat::zero();
    let mut hi = Some(Rat::zero());
    let mut see = |r: &Iv<f64>, attained: bool| {
        let a = r.abs();
        if attained || r.lo == r.hi {
            if let Some(m) = a.lo.to_rat() {
                lo = crate::rat::max(&lo, &m);
            }
        }
        hi = match (hi.take(), a.hi.to_rat()) {
            (Some(h), Some(v)) => Some(crate::rat::max(&h, &v)),
            _ => None,
        };
    };
    for (a, b) in pieces(&node, &unit_set()) {
        let r = node.range(&open_cell(&a, &b))?;
        see(&r, true);
    }
    let mut pts: Vec<Rat> = node.breakpoints().into_iter().filter(|p| unit().contains(p)).collect();
    pts.extend((0..=PROBES).map(|j| rat(j as i64, PROBES as i64)));
    for p in pts {
        if let Ok(r) = node.range(&Cell::point(&p)) {
            see(&r, true);
        }
    }
    Ok((lo, hi))
}

/// `|f_n| <= M` for every `n`: the open-piece range is attained in the sense
/// that its lower magnitude is a value of `|f_n|`.
fn hypothesis_check(prev: Option<&FuncExpr>, cur: &FuncExpr, mode: &ConvergenceMode) -> Result<Option<bool>> {
    let diff = match (mode, prev) {
        (ConvergenceMode::Bounded, _) => return Ok(None),
        (ConvergenceMode::Monotone, None) => return Ok(Some(true)),
        (ConvergenceMode::Monotone, Some(p)) => cur.clone() - p.clone(),
        (ConvergenceMode::Dominated(g), _) => g.clone() - cur.clone().abs(),
    };
    let c = ae_canonicalize(&diff, &unit())?;
    let node = Node::<f64>::compile(&c, &unit())?;
    certify_nonneg(&node, &unit_set(), NONNEG_DEPTH)
}

/// Integrals of `f_n` from a template in `n`, with the mode's hypothesis
/// checked on enclosures and an optional comparison against the limit.
pub fn convergence_run(
    template: &str,
    mode: &ConvergenceMode,
    ns: &[i64],
    limit: Option<&FuncExpr>,
    tol: &Rat,
) -> Result<ConvergenceTable> {
    let mut rows = Vec::with_capacity(ns.len());
    let mut prev: Option<FuncExpr> = None;
    let mut first_hi: Option<Option<Rat>> = None;
    let mut uniform_bound_violated = false;
    let mut hypothesis_violated = false;
    for &n in ns {
        let f = parse_func(&instantiate(template, n))?;
        let integral = integral_auto(&f, &unit_set(), tol)?.enclosure;
        let (sup_lo, sup_hi) = sup_bounds(&f)?;
        match &first_hi {
            None => first_hi = Some(sup_hi.clone()),
            Some(Some(m)) if sup_lo > *m => uniform_bound_violated = true,
            _ => {}
        }
        let hypothesis = hypothesis_check(prev.as_ref(), &f, mode)?;
        hypothesis_violated |= hypothesis == Some(false);
        rows.push(ConvergenceRow { n, integral, sup_lo, sup_hi: sup_hi.map(|h| h.to_string()), hypothesis });
        prev = Some(f);
    }
    let (mut limit_integral, mut limit_matches, mut probe_residual) = (None, None, None);
    if let (Some(l), Some(last)) = (limit, prev.as_ref()) {
        let li = integral_auto(l, &unit_set(), tol)?.enclosure;
        limit_matches = rows.last().map(|r| r.integral.meets(&li, tol));
        limit_integral = Some(li);
        let mut worst = 0.0f64;
        for j in 0..PROBES {
            let x = rat(2 * j as i64 + 1, 2 * PROBES as i64);
            let d = eval_func(&(last.clone() - l.clone()), &x, &unit())?;
            worst = worst.max(d.abs().hi.to_f64());
        }
        probe_residual = Some(worst);
    }
    Ok(ConvergenceTable { rows, uniform_bound_violated, hypothesis_violated, limit_integral, limit_matches, probe_residual })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeriesReport {
    pub partial: IntegralEnclosure,
    pub limit: IntegralEnclosure,
    /// Upper bound on `|sum_(n<=N) int u_n - int f|`.
    #[serde(serialize_with = "ser_rat")]
    pub residual: Rat,
    /// Widths of all enclosures plus the declared tail.
    #[serde(serialize_with = "ser_rat")]
    pub allowance: Rat,
}

impl SeriesReport {
    pub fn consistent(&self) -> bool {
        let gap = crate::rat::max(&(&self.limit.lo - &self.partial.hi), &(&self.partial.lo - &self.limit.hi));
        gap <= self.allowance
    }
}

/// Compares `sum_(n=1..N) int u_n` with `int f_limit`.
pub fn series_integral_check(template: &str, n_terms: i64, f_limit: &FuncExpr, tail: &Rat, tol: &Rat) -> Result<SeriesReport> {
    let each = tol / int(n_terms.max(1) + 1);
    let mut partial = IntegralEnclosure::point(int(0));
    for n in 1..=n_terms {
        let u = parse_func(&instantiate(template, n))?;
        partial = partial.add(&integral_auto(&u, &unit_set(), &each)?.enclosure);
    }
    let limit = integral_auto(f_limit, &unit_set(), &each)?.enclosure;
    let residual = crate::rat::max(&(&limit.hi - &partial.lo), &(&partial.hi - &limit.lo));
    let allowance = partial.width() + limit.width() + tail;
    Ok(SeriesReport { partial, limit, residual, allowance })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepApprox {
    pub g: StepFunction<Rat>,
    /// Exceptional set with `m(A) < eps`.
    pub exceptional: IntervalSet<Rat>,
    /// `|f - g| <= max_error` off `A` and the breakpoints of `g`.
    pub max_error: Rat,
}

const STEP_APPROX_DEPTH: u32 = 30;

/// Step function within `eps` of `f` off a set of measure below `eps`.
///
/// Cells are bisected until the range of `f` is narrower than `eps`; the value
/// is the middle of the range, clamped to the global bound when there is one.
/// Cells that are still too wide at the depth limit form the exceptional set.
pub fn step_approx(f: &FuncExpr, eps: &Rat) -> Result<StepApprox> {
    if !eps.is_positive() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    let amb = unit();
    let c = ae_canonicalize(f, &amb)?;
    let node = Node::<f64>::compile(&c, &amb)?;
    let g = node.range(&Cell::from_interval(&amb)).ok().and_then(|r| r.to_rats());
    let clamp = |v: Rat| match &g {
        Some((lo, hi)) => crate::rat::min(&crate::rat::max(&v, lo), hi),
        None => v,
    };
    let two = int(2);
    let mut leaves: Vec<(Rat, Rat, Option<Rat>)> = Vec::new();
    let mut stack: Vec<(Rat, Rat, u32)> = pieces(&node, &IntervalSet::from_interval(amb.clone())).into_iter().rev().map(|(a, b)| (a, b, 0)).collect();
    let mut max_error = Rat::zero();
    while let Some((a, b, d)) = stack.pop() {
        let r = node.range(&open_cell(&a, &b)).ok().and_then(|r| r.to_rats());
        match r {
            Some((lo, hi)) if &hi - &lo < *eps => {
                let v = clamp((&lo + &hi) / &two);
                let err = crate::rat::max(&(&hi - &v), &(&v - &lo));
                max_error = crate::rat::max(&max_error, &err);
                leaves.push((a, b, Some(v)));
            }
            _ if d >= STEP_APPROX_DEPTH => leaves.push((a, b, None)),
            _ => {
                let m = (&a + &b) / &two;
                stack.push((m.clone(), b, d + 1));
                stack.push((a, m, d + 1));
            }
        }
        if leaves.len() + stack.len() > PARTITION_CELLS {
            return Err(Error::NotCertified("step approximation needs too many cells".into()));
        }
    }
    let exceptional = IntervalSet::normalize(leaves.iter().filter(|l| l.2.is_none()).map(|(a, b, _)| Interval::open(a.clone(), b.clone())).collect());
    if exceptional.measure() >= *eps {
        return Err(Error::NotCertified(format!("exceptional set has measure {}", exceptional.measure())));
    }
    let mut breaks = vec![amb.lo.clone()];
    let mut values = Vec::with_capacity(leaves.len());
    for (_, b, v) in leaves {
        breaks.push(b);
        values.push(v.map(&clamp).unwrap_or_else(|| clamp(Rat::zero())));
    }
    let g = StepFunction::new(breaks, values)?.simplify();
    Ok(StepApprox { g, exceptional, max_error })
}

/// Dyadic powers used as truncation levels in reports.
pub fn dyadic_levels(k: u32) -> Vec<Rat> {
    (0..=k).map(|i| pow2(i as i64)).collect()
}
