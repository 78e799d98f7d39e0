//! Step functions, the regulated integral and the Riemann integral.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Interval, IntervalSet};
use crate::expr::{dirichlet_split, Cell, FuncExpr, Node};
use crate::iv::Iv;
use crate::quad::{integrate, integrate_leaves, pieces, ExactSum, IntegralEnclosure, Piece, QuadOptions, QuadResult};
use crate::rat::{int, Rat};
use crate::scalar::{Bound, ExtRat, Field};

/// Constant on each open interval `(x[i-1], x[i])`; values at breakpoints are
/// left unspecified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFunction<T> {
    breaks: Vec<T>,
    values: Vec<T>,
}

impl<T: Field> StepFunction<T> {
    pub fn new(breaks: Vec<T>, values: Vec<T>) -> Result<Self> {
        if breaks.len() < 2 || values.len() + 1 != breaks.len() {
            return Err(Error::Precondition("need n+1 breakpoints for n values".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("breakpoints must increase strictly".into()));
        }
        Ok(StepFunction { breaks, values })
    }

    pub fn constant(a: T, b: T, c: T) -> Result<Self> {
        StepFunction::new(vec![a, b], vec![c])
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breaks
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn domain(&self) -> (&T, &T) {
        (&self.breaks[0], self.breaks.last().unwrap())
    }

    /// Value on the open cell containing `x`; `None` at breakpoints and outside.
    pub fn value_at(&self, x: &T) -> Option<&T> {
        let i = self.breaks.partition_point(|b| b < x);
        if i == 0 || i == self.breaks.len() || self.breaks[i] == *x {
            return None;
        }
        Some(&self.values[i - 1])
    }

    fn integral_forward(&self, a: &T, b: &T) -> T {
        let mut acc = T::zero();
        for (i, v) in self.values.iter().enumerate() {
            let lo = if self.breaks[i] > *a { &self.breaks[i] } else { a };
            let hi = if self.breaks[i + 1] < *b { &self.breaks[i + 1] } else { b };
            if lo < hi {
                acc = acc + v.clone() * (hi.clone() - lo.clone());
            }
        }
        acc
    }

    /// Same function on a partition that also contains `pts`.
    pub fn refine(&self, pts: &[T]) -> Self {
        let mut breaks: Vec<T> = self.breaks.clone();
        let (a, b) = self.domain();
        breaks.extend(pts.iter().filter(|p| *p > a && *p < b).cloned());
        breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
        breaks.dedup();
        let values = breaks
            .windows(2)
            .map(|w| {
                let i = self.breaks.partition_point(|p| *p <= w[0]);
                self.values[i - 1].clone()
            })
            .collect();
        StepFunction { breaks, values }
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        StepFunction { breaks: self.breaks.clone(), values: self.values.iter().map(f).collect() }
    }

    pub fn abs(&self) -> Self {
        self.map(|v| if *v < T::zero() { T::zero() - v.clone() } else { v.clone() })
    }

    /// Drops breakpoints between equal neighbouring values.
    pub fn simplify(&self) -> Self {
        let mut breaks = vec![self.breaks[0].clone()];
        let mut values: Vec<T> = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            if values.last() == Some(v) {
                *breaks.last_mut().unwrap() = self.breaks[i + 1].clone();
            } else {
                values.push(v.clone());
                breaks.push(self.breaks[i + 1].clone());
            }
        }
        StepFunction { breaks, values }
    }
}

impl<T: Field + fmt::Display> fmt::Display for StepFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "({}, {}) -> {}", self.breaks[i], self.breaks[i + 1], v)?;
        }
        Ok(())
    }
}

/// `int_a^b s`, with `int_b^a = -int_a^b`.
pub fn step_integral<T: Field>(s: &StepFunction<T>, a: &T, b: &T) -> Result<T> {
    let (lo, hi) = s.domain();
    for p in [a, b] {
        if p < lo || p > hi {
            return Err(Error::Domain("integration limit outside the step function's domain".into()));
        }
    }
    if a <= b {
        Ok(s.integral_forward(a, b))
    } else {
        Ok(T::zero() - s.integral_forward(b, a))
    }
}

fn same_domain<T: Field>(s: &StepFunction<T>, t: &StepFunction<T>) -> Result<()> {
    if s.domain() != t.domain() {
        return Err(Error::Precondition("step functions live on different intervals".into()));
    }
    Ok(())
}

/// Both functions on the union of their partitions.
pub fn refine_common<T: Field>(s: &StepFunction<T>, t: &StepFunction<T>) -> Result<(StepFunction<T>, StepFunction<T>)> {
    same_domain(s, t)?;
    Ok((s.refine(&t.breaks), t.refine(&s.breaks)))
}

pub fn step_add<T: Field>(s: &StepFunction<T>, t: &StepFunction<T>) -> Result<StepFunction<T>> {
    let (s, t) = refine_common(s, t)?;
    let values = s.values.iter().zip(&t.values).map(|(a, b)| a.clone() + b.clone()).collect();
    Ok(StepFunction { breaks: s.breaks, values })
}

pub fn step_scale<T: Field>(c: &T, s: &StepFunction<T>) -> StepFunction<T> {
    s.map(|v| c.clone() * v.clone())
}

/// `s <= t` off the breakpoints.
pub fn step_le<T: Field>(s: &StepFunction<T>, t: &StepFunction<T>) -> Result<bool> {
    let (s, t) = refine_common(s, t)?;
    Ok(s.values.iter().zip(&t.values).all(|(a, b)| a <= b))
}

fn unit() -> Interval<Rat> {
    Interval::unit()
}

fn bound_rat<B: Bound>(v: &B) -> Result<Rat> {
    v.to_rat().ok_or_else(|| Error::Unbounded("range enclosure is infinite on a cell".into()))
}

fn open_cell<B: Bound>(x0: &Rat, x1: &Rat) -> Cell<B> {
    let mut c = Cell::from_interval(&Interval::closed(x0.clone(), x1.clone()));
    c.region = Some(Interval::open(x0.clone(), x1.clone()));
    c
}

fn ranges_on<B: Bound>(f: &FuncExpr, p: &[Rat]) -> Result<(Vec<Rat>, Vec<Rat>)> {
    let node = Node::<B>::compile(f, &unit())?;
    let mut us = Vec::with_capacity(p.len());
    let mut vs = Vec::with_capacity(p.len());
    for w in p.windows(2) {
        let r = node.range(&open_cell(&w[0], &w[1]))?;
        us.push(bound_rat(&r.hi)?);
        vs.push(bound_rat(&r.lo)?);
    }
    Ok((us, vs))
}

/// Upper and lower step functions `u >= f >= v` on the partition `p` of `[0, 1]`.
pub fn upper_lower_step(f: &FuncExpr, p: &[Rat]) -> Result<(StepFunction<Rat>, StepFunction<Rat>)> {
    let (us, vs) = if f.is_rational() { ranges_on::<ExtRat>(f, p)? } else { ranges_on::<f64>(f, p)? };
    Ok((StepFunction::new(p.to_vec(), us)?, StepFunction::new(p.to_vec(), vs)?))
}

/// Best lower and upper step integrals found at a given subdivision depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RiemannBounds {
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub lower: Rat,
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub upper: Rat,
    pub depth: u32,
}

impl RiemannBounds {
    pub fn gap(&self) -> Rat {
        &self.upper - &self.lower
    }
}

type Steps = (Vec<Rat>, Vec<Rat>, Vec<Rat>);

fn darboux_on<B: Bound>(f: &FuncExpr, opts: &QuadOptions, keep: bool) -> Result<(QuadResult, Option<Steps>)> {
    let node = Node::<B>::compile(f, &unit())?;
    let region = IntervalSet::from_interval(unit());
    if !keep {
        return Ok((integrate(&node, &region, opts)?, None));
    }
    let (q, leaves) = integrate_leaves(&node, &region, opts)?;
    let mut breaks = vec![leaves[0].x0.clone()];
    let mut us = Vec::with_capacity(leaves.len());
    let mut vs = Vec::with_capacity(leaves.len());
    for l in &leaves {
        breaks.push(l.x1.clone());
        us.push(bound_rat(&l.range.hi)?);
        vs.push(bound_rat(&l.range.lo)?);
    }
    Ok((q, Some((breaks, us, vs))))
}

const EXACT_BUDGET: usize = 1024;

/// Exact backend for rational expressions when it settles within a small
/// budget, `f64` otherwise.
fn darboux(f: &FuncExpr, opts: &QuadOptions, keep: bool) -> Result<(QuadResult, Option<Steps>)> {
    if f.is_rational() {
        let mut o = opts.clone();
        o.max_cells = opts.max_cells.min(EXACT_BUDGET);
        let r = darboux_on::<ExtRat>(f, &o, keep)?;
        if r.0.converged || r.0.cells < EXACT_BUDGET {
            return Ok(r);
        }
    }
    darboux_on::<f64>(f, opts, keep)
}

/// Darboux sums over the adaptive dyadic partition: cells whose range
/// enclosure is not a point are bisected until `depth`.
pub fn riemann_bounds(f: &FuncExpr, depth: u32) -> Result<RiemannBounds> {
    let (q, _) = darboux(f, &QuadOptions::range(depth), false)?;
    let e = IntegralEnclosure::from_quad(&q)?;
    Ok(RiemannBounds { lower: e.lo, upper: e.hi, depth })
}

/// Partition and step functions realizing [`riemann_bounds`].
pub fn riemann_steps(f: &FuncExpr, depth: u32) -> Result<(StepFunction<Rat>, StepFunction<Rat>)> {
    let (_, steps) = darboux(f, &QuadOptions::range(depth), true)?;
    let (breaks, us, vs) = steps.unwrap();
    Ok((StepFunction::new(breaks.clone(), us)?, StepFunction::new(breaks, vs)?))
}

/// Evidence that every upper step function exceeds every lower one by `gap`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NonIntegrableWitness {
    /// Literal function on the rationals.
    pub on_rationals: String,
    /// Literal function on the irrationals.
    pub on_irrationals: String,
    /// Certified lower bound on `int |on_rationals - on_irrationals|`.
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub gap: Rat,
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub lower: Rat,
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub upper: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RiemannVerdict {
    Integrable(IntegralEnclosure),
    NotCertified(RiemannBounds),
    NonIntegrable(NonIntegrableWitness),
}

const WITNESS_DEPTH: u32 = 6;

/// Both literal branches of every `dirichlet` node are dense in each cell, so
/// `sup - inf` on a cell is at least the local distance between them.
fn dirichlet_witness(f: &FuncExpr) -> Result<Option<NonIntegrableWitness>> {
    if !f.has_dirichlet() {
        return Ok(None);
    }
    let (g_rat, g_irr) = dirichlet_split(f);
    let diff = (g_rat.clone() - g_irr.clone()).abs();
    let node = Node::<f64>::compile(&diff, &unit())?;
    let mut opts = QuadOptions::taylor(crate::rat::rat(1, 1_000_000));
    opts.max_cells = 20_000;
    let q = integrate(&node, &IntervalSet::from_interval(unit()), &opts)?;
    let gap = match q.lo.to_rat() {
        Some(g) if g > Rat::from_integer(0.into()) => g,
        _ => return Ok(None),
    };
    let b = riemann_bounds(f, WITNESS_DEPTH)?;
    Ok(Some(NonIntegrableWitness {
        on_rationals: g_rat.to_string(),
        on_irrationals: g_irr.to_string(),
        gap,
        lower: b.lower,
        upper: b.upper,
    }))
}

/// Riemann criterion: integrable once some pair of step functions is `eps` close.
pub fn riemann_integrable(f: &FuncExpr, eps: &Rat, max_depth: u32) -> Result<RiemannVerdict> {
    if let Some(w) = dirichlet_witness(f)? {
        return Ok(RiemannVerdict::NonIntegrable(w));
    }
    let mut opts = QuadOptions::range(max_depth);
    opts.tol = eps.clone();
    opts.max_cells = 4_000_000;
    let (q, _) = darboux(f, &opts, false)?;
    let e = IntegralEnclosure::from_quad(&q)?;
    if q.converged {
        Ok(RiemannVerdict::Integrable(e))
    } else {
        Ok(RiemannVerdict::NotCertified(RiemannBounds { lower: e.lo, upper: e.hi, depth: max_depth }))
    }
}

fn point_value<B: Bound>(node: &Node<B>, x: &Rat) -> Result<Iv<B>> {
    node.range(&Cell::point(x))
}

fn regulated_on<B: Bound>(node: &Node<B>, a: &Rat, b: &Rat, n: u64) -> Result<(StepFunction<Rat>, Rat)> {
    let h = (b - a) / Rat::from_integer(n.into());
    let mut breaks = Vec::with_capacity(n as usize + 1);
    let mut values = Vec::with_capacity(n as usize);
    let mut delta = Rat::from_integer(0.into());
    for i in 0..n {
        let x0 = a + &h * Rat::from_integer(i.into());
        let x1 = if i + 1 == n { b.clone() } else { &x0 + &h };
        let v = bound_rat(&point_value(node, &x0)?.lo)?;
        let mut cell = Cell::from_interval(&Interval::closed(x0.clone(), x1.clone()));
        if node.is_structural() {
            cell.region = Some(Interval::new(x0.clone(), x1.clone(), true, false).unwrap());
        }
        let r = node.range(&cell)?;
        let d = crate::rat::max(&(bound_rat(&r.hi)? - &v), &(&v - bound_rat(&r.lo)?));
        if d > delta {
            delta = d;
        }
        breaks.push(x0);
        values.push(v);
    }
    breaks.push(b.clone());
    Ok((StepFunction::new(breaks, values)?, delta))
}

/// Left-endpoint step approximation on `n` uniform cells of `[0, 1]`, with a
/// certified bound `delta` on `sup |f - f_n|`.
pub fn regulated_from_continuous(f: &FuncExpr, n_cells: u64) -> Result<(StepFunction<Rat>, Rat)> {
    if n_cells == 0 {
        return Err(Error::Precondition("need at least one cell".into()));
    }
    let node = Node::<f64>::compile(f, &unit())?;
    regulated_on(&node, &int(0), &int(1), n_cells).map_err(not_regulated)
}

fn not_regulated(e: Error) -> Error {
    match e {
        Error::Unbounded(_) => Error::Unbounded("function is not continuous-representable".into()),
        other => other,
    }
}

const REGULATED_MAX_LEVEL: u32 = 22;

/// Uniform left-endpoint approximation on `2^level` cells of every piece
/// between breakpoints; a piece opening at a jump samples its first cell at
/// the midpoint. Returns `None` as soon as the uniform error exceeds `limit`.
fn regulated_level<B: Bound>(node: &Node<B>, pcs: &[Piece<B>], level: u32, limit: &B) -> Result<Option<(IntegralEnclosure, Rat)>> {
    let structural = node.is_structural();
    let mut delta = B::zero();
    let mut total = ExtRat::fin(Rat::zero());
    let e = -(level as i64);
    for (i, p) in pcs.iter().enumerate() {
        let mut sum = ExactSum::default();
        for j in 0..1u64 << level {
            let j = BigInt::from(j);
            let sample = if i > 0 && j.is_zero() { p.point_cell(structural, &BigInt::from(1), e - 1) } else { p.point_cell(structural, &j, e) };
            let v = node.range(&sample)?.lo;
            let r = node.range(&p.cell(structural, level, &j))?;
            if !v.is_finite() || !r.is_finite() {
                return Err(Error::Unbounded("function is not continuous-representable".into()));
            }
            let d = r.hi.sub_up(&v).max_of(&v.sub_up(&r.lo));
            if d > delta {
                delta = d;
                if delta > *limit {
                    return Ok(None);
                }
            }
            sum.add(&v, level as i64);
        }
        total = total.add_down(&sum.value(p.len(), false));
    }
    let v = total.to_rat().ok_or_else(|| Error::Unbounded("step integral is not finite".into()))?;
    let delta = delta.to_rat().ok_or_else(|| Error::Unbounded("uniform error is not finite".into()))?;
    Ok(Some((IntegralEnclosure::point(v), delta)))
}

fn regulated_integral_on<B: Bound>(node: &Node<B>, a: &Rat, b: &Rat, eps: &Rat) -> Result<IntegralEnclosure> {
    let region = IntervalSet::from_interval(Interval::closed(a.clone(), b.clone()));
    let pcs: Vec<Piece<B>> = pieces(node, &region).iter().map(|(x, y)| Piece::new(x, y)).collect();
    let len = b - a;
    // 2 delta len <= eps
    let limit = B::from_rat_down(&(eps / (&len * int(2))));
    let mut last = None;
    for level in 0..=REGULATED_MAX_LEVEL {
        if let Some((s, delta)) = regulated_level(node, &pcs, level, &limit)? {
            let spread = &delta * &len;
            if &spread * int(2) <= *eps {
                return Ok(s.widen(&spread));
            }
            last = Some(delta);
        }
    }
    Err(Error::NotCertified(match last {
        Some(d) => format!("uniform error {d} after {} cells", 1u64 << REGULATED_MAX_LEVEL),
        None => format!("uniform error above {} after {} cells", crate::rat::to_f64(eps), 1u64 << REGULATED_MAX_LEVEL),
    }))
}

/// Limit of left-endpoint step integrals, bracketed by the uniform error.
pub fn regulated_integral(f: &FuncExpr, eps: &Rat) -> Result<IntegralEnclosure> {
    let node = Node::<f64>::compile(f, &unit())?;
    regulated_integral_on(&node, &int(0), &int(1), eps)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FtcReport {
    /// Upper bound on `max |(F(x+h) - F(x))/h - f(x)|` over the probes.
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub residual: Rat,
    pub probes_used: usize,
    pub skipped: usize,
}

/// Difference quotients of `F(x) = int_0^x f` against `f` at `x = j / probes`.
pub fn ftc_check(f: &FuncExpr, h: &Rat, probes: usize) -> Result<FtcReport> {
    if *h <= int(0) {
        return Err(Error::Precondition("h must be positive".into()));
    }
    let node = Node::<f64>::compile(f, &unit())?;
    let eps = h * h / int(1000);
    let mut residual = int(0);
    let mut used = 0;
    let mut skipped = 0;
    for j in 0..probes {
        let x = Rat::new((j as i64).into(), (probes as i64).into());
        let xh = &x + h;
        if xh > int(1) {
            skipped += 1;
            continue;
        }
        let e = regulated_integral_on(&node, &x, &xh, &eps)?;
        let fx = point_value(&node, &x)?;
        let (flo, fhi) = (bound_rat(&fx.lo)?, bound_rat(&fx.hi)?);
        let (qlo, qhi) = (&e.lo / h, &e.hi / h);
        let r = crate::rat::max(&(&qhi - &flo), &(&fhi - &qlo));
        if r > residual {
            residual = r;
        }
        used += 1;
    }
    Ok(FtcReport { residual, probes_used: used, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_func;
    use crate::rat::rat;

    fn sf(b: &[(i64, i64)], v: &[i64]) -> StepFunction<Rat> {
        StepFunction::new(b.iter().map(|&(p, q)| rat(p, q)).collect(), v.iter().map(|&x| int(x)).collect()).unwrap()
    }

    #[test]
    fn integrals_and_orientation() {
        let s = sf(&[(0, 1), (1, 2), (1, 1)], &[1, 3]);
        assert_eq!(step_integral(&s, &int(0), &int(1)).unwrap(), int(2));
        assert_eq!(step_integral(&s, &int(1), &int(0)).unwrap(), int(-2));
        assert_eq!(step_integral(&s, &rat(1, 4), &rat(3, 4)).unwrap(), int(1));
        assert!(step_integral(&s, &int(0), &int(2)).is_err());
        let c = StepFunction::constant(int(0), int(1), int(5)).unwrap();
        assert_eq!(step_integral(&c, &int(0), &int(1)).unwrap(), int(5));
    }

    #[test]
    fn common_refinement() {
        let s = sf(&[(0, 1), (1, 2), (1, 1)], &[1, 3]);
        let t = sf(&[(0, 1), (1, 3), (1, 1)], &[2, 4]);
        let (s2, t2) = refine_common(&s, &t).unwrap();
        assert_eq!(s2.breakpoints(), &[int(0), rat(1, 3), rat(1, 2), int(1)]);
        assert_eq!(s2.values(), &[int(1), int(1), int(3)]);
        assert_eq!(t2.values(), &[int(2), int(4), int(4)]);
        assert_eq!(s2.simplify(), s);
        let sum = step_add(&s, &t).unwrap();
        assert_eq!(sum.values(), &[int(3), int(5), int(7)]);
        assert!(step_le(&s, &sum).unwrap());
        assert_eq!(s.value_at(&rat(1, 2)), None);
        assert_eq!(s.value_at(&rat(3, 4)), Some(&int(3)));
    }

    #[test]
    fn darboux_examples() {
        let p: Vec<Rat> = (0..=4).map(|i| rat(i, 4)).collect();
        let (u, v) = upper_lower_step(&parse_func("x^2").unwrap(), &p).unwrap();
        assert_eq!(step_integral(&u, &int(0), &int(1)).unwrap(), rat(15, 32));
        assert_eq!(step_integral(&v, &int(0), &int(1)).unwrap(), rat(7, 32));
        let (u, v) = upper_lower_step(&parse_func("dirichlet(0,1)").unwrap(), &p).unwrap();
        assert_eq!(step_integral(&u, &int(0), &int(1)).unwrap(), int(1));
        assert_eq!(step_integral(&v, &int(0), &int(1)).unwrap(), int(0));
        let b = riemann_bounds(&parse_func("7/3").unwrap(), 0).unwrap();
        assert_eq!((b.lower, b.upper), (rat(7, 3), rat(7, 3)));
    }

    #[test]
    fn regulated_examples() {
        let (s, d) = regulated_from_continuous(&parse_func("x").unwrap(), 4).unwrap();
        assert_eq!(s.values(), &[int(0), rat(1, 4), rat(1, 2), rat(3, 4)]);
        assert_eq!(d, rat(1, 4));
        let e = regulated_integral(&parse_func("x").unwrap(), &rat(1, 10_000)).unwrap();
        assert!(e.contains(&rat(1, 2)) && e.width() <= rat(1, 10_000));
        assert_eq!(regulated_integral(&parse_func("0").unwrap(), &rat(1, 10)).unwrap(), IntegralEnclosure::point(int(0)));
        assert!(regulated_from_continuous(&parse_func("1/x").unwrap(), 4).is_err());
    }
}
