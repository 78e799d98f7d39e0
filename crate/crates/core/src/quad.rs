//! Adaptive certified quadrature over dyadic subdivisions.
//!
//! The region is cut at every set endpoint the expression mentions, so that
//! indicator and piecewise nodes are constant on each open piece. Each piece is
//! bisected adaptively. A cell contributes `width * mean` where the mean is
//! enclosed either by the order-0 range (Darboux style) or by a Taylor model.
//! Contributions are summed exactly in rational arithmetic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::error::{Error, Result};
use crate::exact::{Interval, IntervalSet};
use crate::expr::{Cell, Node};
use crate::iv::Iv;
use crate::rat::{format_rat, pow2, Rat};
use crate::scalar::{Bound, ExtRat};

/// How a cell's mean value is enclosed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Range enclosure only; the sums are lower and upper step integrals.
    Range,
    /// Taylor model of the given order, intersected with the range.
    Taylor(usize),
}

#[derive(Clone, Debug)]
pub struct QuadOptions {
    pub mode: Mode,
    /// Target width of the final enclosure.
    pub tol: Rat,
    /// Maximum number of cell evaluations.
    pub max_cells: usize,
    /// Cells at this bisection depth are never split.
    pub max_level: u32,
    /// Stop early once the certified lower bound exceeds this value.
    pub stop_above: Option<Rat>,
    /// Each piece starts out split into `2^initial_level` equal cells.
    pub initial_level: u32,
}

impl QuadOptions {
    pub fn taylor(tol: Rat) -> Self {
        QuadOptions {
            mode: Mode::Taylor(crate::expr::TAYLOR_ORDER),
            tol,
            max_cells: 400_000,
            max_level: 1000,
            stop_above: None,
            initial_level: 0,
        }
    }

    pub fn range(depth: u32) -> Self {
        QuadOptions {
            mode: Mode::Range,
            tol: Rat::zero(),
            max_cells: usize::MAX,
            max_level: depth,
            stop_above: None,
            initial_level: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadResult {
    pub lo: ExtRat,
    pub hi: ExtRat,
    /// The enclosure width reached the tolerance.
    pub converged: bool,
    /// Stopped because the lower bound passed `stop_above`.
    pub exceeded: bool,
    pub cells: usize,
}

impl QuadResult {
    pub fn exact(v: Rat) -> Self {
        QuadResult { lo: ExtRat::fin(v.clone()), hi: ExtRat::fin(v), converged: true, exceeded: false, cells: 0 }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> Option<Rat> {
        Some(self.hi.to_rat()? - self.lo.to_rat()?)
    }
}

/// Certified rational bounds on an integral.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntegralEnclosure {
    pub lo: Rat,
    pub hi: Rat,
}

impl IntegralEnclosure {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi);
        IntegralEnclosure { lo, hi }
    }

    pub fn point(v: Rat) -> Self {
        IntegralEnclosure { lo: v.clone(), hi: v }
    }

    pub fn from_quad(q: &QuadResult) -> Result<Self> {
        match (q.lo.to_rat(), q.hi.to_rat()) {
            (Some(lo), Some(hi)) => Ok(IntegralEnclosure { lo, hi }),
            _ => Err(Error::Unbounded("integral enclosure is not finite".into())),
        }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: &Rat) -> bool {
        self.lo <= *v && *v <= self.hi
    }

    /// Whether the enclosure contains the double `v` (compared exactly).
    pub fn contains_f64(&self, v: f64) -> bool {
        Rat::from_float(v).is_some_and(|q| self.contains(&q))
    }

    /// Whether some value lies within `slack` of both enclosures.
    pub fn meets(&self, o: &Self, slack: &Rat) -> bool {
        self.lo <= &o.hi + slack && o.lo <= &self.hi + slack
    }

    pub fn add(&self, o: &Self) -> Self {
        IntegralEnclosure { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &Self) -> Self {
        IntegralEnclosure { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        let (a, b) = (&self.lo * c, &self.hi * c);
        if a <= b {
            IntegralEnclosure { lo: a, hi: b }
        } else {
            IntegralEnclosure { lo: b, hi: a }
        }
    }

    pub fn widen(&self, by: &Rat) -> Self {
        IntegralEnclosure { lo: &self.lo - by, hi: &self.hi + by }
    }

    pub fn to_iv<B: Bound>(&self) -> Iv<B> {
        Iv::from_rats(&self.lo, &self.hi)
    }
}

impl fmt::Display for IntegralEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for IntegralEnclosure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(2))?;
        m.serialize_entry("lo", &format_rat(&self.lo))?;
        m.serialize_entry("hi", &format_rat(&self.hi))?;
        m.end()
    }
}

/// A final cell of the subdivision.
#[derive(Clone, Debug)]
pub struct Leaf<B> {
    pub x0: Rat,
    pub x1: Rat,
    pub range: Iv<B>,
    pub mean: Iv<B>,
}

/// Exact accumulator for sums of `v * 2^-shift`.
#[derive(Clone, Debug, Default)]
pub(crate) struct ExactSum {
    m: BigInt,
    e: i64,
    rest: Rat,
    pos_inf: bool,
    neg_inf: bool,
}

impl ExactSum {
    pub(crate) fn add<B: Bound>(&mut self, v: &B, shift: i64) {
        if !v.is_finite() {
            if *v > B::zero() {
                self.pos_inf = true;
            } else {
                self.neg_inf = true;
            }
            return;
        }
        match v.to_dyadic() {
            Some((m, e)) => {
                let e = e - shift;
                if m.is_zero() {
                    return;
                }
                if self.m.is_zero() {
                    self.m = m;
                    self.e = e;
                } else if e >= self.e {
                    self.m += m << ((e - self.e) as usize);
                } else {
                    self.m = std::mem::take(&mut self.m) << ((self.e - e) as usize);
                    self.m += m;
                    self.e = e;
                }
            }
            None => self.rest += v.to_rat().unwrap() * pow2(-shift),
        }
    }

    pub(crate) fn value(&self, scale: &Rat, up: bool) -> ExtRat {
        match (self.pos_inf, self.neg_inf) {
            (true, false) => return ExtRat::PosInf,
            (false, true) => return ExtRat::NegInf,
            (true, true) => return if up { ExtRat::PosInf } else { ExtRat::NegInf },
            _ => {}
        }
        let d = Rat::from_integer(self.m.clone()) * pow2(self.e);
        ExtRat::fin((d + &self.rest) * scale)
    }
}

/// Cell `j` of `2^level` equal cells of a piece.
struct Item<B> {
    err: f64,
    piece: usize,
    level: u32,
    j: BigInt,
    range: Iv<B>,
    mean: Iv<B>,
}

impl<B> PartialEq for Item<B> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<B> Eq for Item<B> {}
impl<B> PartialOrd for Item<B> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<B> Ord for Item<B> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err
            .total_cmp(&o.err)
            .then_with(|| o.piece.cmp(&self.piece))
            .then_with(|| o.level.cmp(&self.level))
            .then_with(|| o.j.cmp(&self.j))
    }
}

pub(crate) struct Piece<B> {
    a: Rat,
    len: Rat,
    open: Interval<Rat>,
    a_iv: Iv<B>,
    len_iv: Iv<B>,
}

impl<B: Bound> Piece<B> {
    pub(crate) fn new(a: &Rat, b: &Rat) -> Self {
        let len = b - a;
        Piece { a_iv: Iv::from_rat(a), len_iv: Iv::from_rat(&len), a: a.clone(), len, open: Interval::open(a.clone(), b.clone()) }
    }

    /// `a + len * m 2^e`.
    fn at(&self, m: &BigInt, e: i64) -> Iv<B> {
        let t = Iv::new(B::from_dyadic(m, e, false), B::from_dyadic(m, e, true));
        self.a_iv.add(&self.len_iv.mul(&t))
    }

    fn exact(&self, m: &BigInt, e: i64) -> Rat {
        &self.a + &self.len * Rat::from_integer(m.clone()) * pow2(e)
    }

    /// Upper bound on the cell width at `level`.
    pub(crate) fn width(&self, level: u32) -> B {
        self.len_iv.hi.mul_up(&B::from_dyadic(&BigInt::from(1), -(level as i64), true))
    }

    /// The point `a + len * m 2^e`.
    pub(crate) fn point_cell(&self, structural: bool, m: &BigInt, e: i64) -> Cell<B> {
        let x = self.at(m, e);
        let region = structural.then(|| Interval::point(self.exact(m, e)));
        Cell { x: x.clone(), c: x, r: Iv::zero(), region }
    }

    pub(crate) fn len(&self) -> &Rat {
        &self.len
    }

    pub(crate) fn cell(&self, structural: bool, level: u32, j: &BigInt) -> Cell<B> {
        let e = -(level as i64);
        let j1 = j + 1u32;
        let x0 = self.at(j, e);
        let x1 = self.at(&j1, e);
        let c = self.at(&(j * 2u32 + 1u32), e - 1);
        let t = B::from_dyadic(&BigInt::from(1), e - 1, false);
        let r = self.len_iv.mul(&Iv::point(t));
        // structural nodes are constant on the open piece, hence on every open cell in it
        let region = structural.then(|| self.open.clone());
        Cell { x: Iv::new(x0.lo, x1.hi), c, r, region }
    }
}

/// Open pieces of `region` between consecutive breakpoints of `node`.
pub fn pieces<B: Bound>(node: &Node<B>, region: &IntervalSet<Rat>) -> Vec<(Rat, Rat)> {
    let breaks = node.breakpoints();
    let mut out = Vec::new();
    for c in region.components() {
        if c.is_degenerate() {
            continue;
        }
        let start = breaks.partition_point(|b| *b <= c.lo);
        let mut lo = c.lo.clone();
        for b in &breaks[start..] {
            if *b >= c.hi {
                break;
            }
            out.push((lo, b.clone()));
            lo = b.clone();
        }
        out.push((lo, c.hi.clone()));
    }
    out
}

fn evaluate<B: Bound>(node: &Node<B>, mode: Mode, cell: &Cell<B>, parent: Option<&Iv<B>>) -> Result<(Iv<B>, Iv<B>)> {
    let (mut range, ser) = match mode {
        Mode::Range => (node.range(cell)?, None),
        Mode::Taylor(k) => {
            let tm = node.tm(cell, k)?;
            (tm.range, tm.ser)
        }
    };
    if let Some(p) = parent {
        range = range.tighten(p);
    }
    let mean = match ser {
        Some(s) => s.mean().tighten(&range),
        None => range.clone(),
    };
    Ok((range, mean))
}

fn cell_err<B: Bound>(mean: &Iv<B>, w: &B) -> f64 {
    if !mean.is_finite() {
        return f64::INFINITY;
    }
    mean.width_up().mul_up(w).to_f64()
}

fn contribution<B: Bound>(mean: &Iv<B>, w: &B) -> (f64, f64) {
    (mean.lo.mul_down(w).to_f64(), mean.hi.mul_up(w).to_f64())
}

struct Totals {
    lo: ExtRat,
    hi: ExtRat,
}

fn exact_totals<'a, B: Bound + 'a>(
    pieces: &[Piece<B>],
    leaves: impl Iterator<Item = (usize, u32, &'a Iv<B>)>,
) -> Totals {
    let mut lo = vec![ExactSum::default(); pieces.len()];
    let mut hi = vec![ExactSum::default(); pieces.len()];
    for (p, level, mean) in leaves {
        lo[p].add(&mean.lo, level as i64);
        hi[p].add(&mean.hi, level as i64);
    }
    let mut tlo = ExtRat::fin(Rat::zero());
    let mut thi = ExtRat::fin(Rat::zero());
    for (i, p) in pieces.iter().enumerate() {
        tlo = tlo.add_down(&lo[i].value(&p.len, false));
        thi = thi.add_up(&hi[i].value(&p.len, true));
    }
    Totals { lo: tlo, hi: thi }
}

fn run<B: Bound>(node: &Node<B>, region: &IntervalSet<Rat>, opts: &QuadOptions) -> Result<(QuadResult, Vec<Item<B>>, Vec<Piece<B>>)> {
    let pcs: Vec<Piece<B>> = pieces(node, region).iter().map(|(a, b)| Piece::new(a, b)).collect();
    let structural = node.is_structural();
    let tol_f = crate::rat::to_f64(&opts.tol);
    let stop_f = opts.stop_above.as_ref().map(crate::rat::to_f64);

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Item<B>> = Vec::new();
    let mut est_lo = 0.0f64;
    let mut est_hi = 0.0f64;
    let mut cells = 0usize;
    let level0 = opts.initial_level.min(opts.max_level);
    for (i, p) in pcs.iter().enumerate() {
        let w = p.width(level0);
        for j in 0..1u64 << level0 {
            let j = BigInt::from(j);
            let (range, mean) = evaluate(node, opts.mode, &p.cell(structural, level0, &j), None)?;
            cells += 1;
            let (l, hc) = contribution(&mean, &w);
            est_lo += l;
            est_hi += hc;
            let item = Item { err: cell_err(&mean, &w), piece: i, level: level0, j, range, mean };
            if item.level >= opts.max_level {
                frozen.push(item);
            } else {
                heap.push(item);
            }
        }
    }

    let mut converged = false;
    let mut exceeded = false;
    let mut checked_at = usize::MAX;
    // exact resync of the f64 estimates on a doubling schedule
    let mut next_sync = cells.max(64) * 2;
    loop {
        let want_check = (est_hi - est_lo <= 0.5 * tol_f) || stop_f.is_some_and(|s| est_lo > s) || cells >= next_sync;
        if heap.peek().map_or(true, |t| t.err == 0.0) || (want_check && checked_at != cells) || cells >= opts.max_cells {
            checked_at = cells;
            next_sync = cells * 2;
            let t = exact_totals(&pcs, heap.iter().chain(frozen.iter()).map(|it| (it.piece, it.level, &it.mean)));
            if let Some(s) = &opts.stop_above {
                if t.lo > ExtRat::fin(s.clone()) {
                    exceeded = true;
                    break;
                }
            }
            let width_ok = match (t.lo.to_rat(), t.hi.to_rat()) {
                (Some(l), Some(h)) => h - l <= opts.tol,
                _ => false,
            };
            if width_ok {
                converged = true;
                break;
            }
            if heap.peek().map_or(true, |t| t.err == 0.0) || cells >= opts.max_cells {
                break;
            }
            est_lo = t.lo.to_f64();
            est_hi = t.hi.to_f64();
        }
        let Some(item) = heap.pop() else { break };
        let p = &pcs[item.piece];
        let (l, h) = contribution(&item.mean, &p.width(item.level));
        est_lo -= l;
        est_hi -= h;
        let level = item.level + 1;
        let w = p.width(level);
        let left = &item.j * 2u32;
        let right = &left + 1u32;
        for j in [left, right] {
            let (r, m) = evaluate(node, opts.mode, &p.cell(structural, level, &j), Some(&item.range))?;
            cells += 1;
            let (l, h) = contribution(&m, &w);
            est_lo += l;
            est_hi += h;
            let child = Item { err: cell_err(&m, &w), piece: item.piece, level, j, range: r, mean: m };
            if child.level >= opts.max_level {
                frozen.push(child);
            } else {
                heap.push(child);
            }
        }
    }

    let all: Vec<Item<B>> = heap.into_iter().chain(frozen).collect();
    let t = exact_totals(&pcs, all.iter().map(|it| (it.piece, it.level, &it.mean)));
    if !exceeded {
        if let Some(s) = &opts.stop_above {
            exceeded = t.lo > ExtRat::fin(s.clone());
        }
    }
    Ok((QuadResult { lo: t.lo, hi: t.hi, converged, exceeded, cells }, all, pcs))
}

/// Integrates `node` over `region`, returning the certified enclosure and the final cells in order.
pub fn integrate_leaves<B: Bound>(
    node: &Node<B>,
    region: &IntervalSet<Rat>,
    opts: &QuadOptions,
) -> Result<(QuadResult, Vec<Leaf<B>>)> {
    let (q, mut all, pcs) = run(node, region, opts)?;
    all.sort_by(|a, b| {
        a.piece.cmp(&b.piece).then_with(|| {
            let m = a.level.max(b.level);
            (&a.j << (m - a.level) as usize).cmp(&(&b.j << (m - b.level) as usize))
        })
    });
    let leaves = all
        .into_iter()
        .map(|it| {
            let p = &pcs[it.piece];
            let e = -(it.level as i64);
            let x1 = p.exact(&(&it.j + 1u32), e);
            Leaf { x0: p.exact(&it.j, e), x1, range: it.range, mean: it.mean }
        })
        .collect();
    Ok((q, leaves))
}

pub fn integrate<B: Bound>(node: &Node<B>, region: &IntervalSet<Rat>, opts: &QuadOptions) -> Result<QuadResult> {
    Ok(run(node, region, opts)?.0)
}

/// Interval enclosing both bounds; convenient for tests and reports.
pub fn as_iv(q: &QuadResult) -> Iv<ExtRat> {
    Iv::new(q.lo.clone(), q.hi.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_func;
    use crate::rat::{int, rat};

    fn unit_set() -> IntervalSet<Rat> {
        IntervalSet::from_interval(Interval::unit())
    }

    fn run(s: &str, opts: &QuadOptions) -> QuadResult {
        let node = Node::<f64>::compile(&parse_func(s).unwrap(), &Interval::unit()).unwrap();
        integrate(&node, &unit_set(), opts).unwrap()
    }

    fn contains(q: &QuadResult, v: f64) -> bool {
        q.lo.to_f64() <= v && v <= q.hi.to_f64()
    }

    #[test]
    fn polynomial_is_tight() {
        let q = run("x^2", &QuadOptions::taylor(rat(1, 1_000_000_000)));
        assert!(q.converged);
        assert!(q.lo <= ExtRat::fin(rat(1, 3)) && ExtRat::fin(rat(1, 3)) <= q.hi);
    }

    #[test]
    fn transcendental() {
        let q = run("sin(x)", &QuadOptions::taylor(rat(1, 1_000_000_000)));
        assert!(q.converged && contains(&q, 1.0 - 1f64.cos()));
        let q = run("cos(40*pi*x)*x", &QuadOptions::taylor(rat(1, 100_000_000)));
        assert!(q.converged && contains(&q, 0.0), "{q:?}");
    }

    #[test]
    fn indicators_are_exact() {
        let q = run("indicator(cantor(4))", &QuadOptions::taylor(Rat::zero()));
        assert_eq!((q.lo.clone(), q.hi.clone()), (ExtRat::fin(rat(16, 81)), ExtRat::fin(rat(16, 81))));
        let q = run("3*indicator([0,1/3]) + x*indicator((1/3,1])", &QuadOptions::taylor(rat(1, 1_000_000)));
        assert!(q.converged && contains(&q, 1.0 + 4.0 / 9.0));
    }

    #[test]
    fn darboux_sums() {
        let q = run("x^2", &QuadOptions::range(2));
        assert_eq!((q.lo, q.hi), (ExtRat::fin(rat(7, 32)), ExtRat::fin(rat(15, 32))));
        let q = run("dirichlet(0,1)", &QuadOptions::range(5));
        assert_eq!((q.lo, q.hi), (ExtRat::fin(Rat::zero()), ExtRat::fin(int(1))));
    }

    #[test]
    fn unbounded_is_flagged() {
        let mut o = QuadOptions::taylor(rat(1, 1000));
        o.max_cells = 2000;
        let q = run("1/sqrt(x)", &o);
        assert!(!q.converged && q.hi == ExtRat::PosInf);
        let q = run("min(1/sqrt(x), 1024)", &QuadOptions::taylor(rat(1, 10_000_000)));
        assert!(q.converged && contains(&q, 2.0 - 1.0 / 1024.0), "{q:?}");
    }
}
