//! Compiled expressions: interval range enclosures and Taylor-mode series.
//!
//! A [`Node`] evaluates over a [`Cell`], which carries an interval enclosure of
//! the variable plus, when the expression has set-valued parts, the exact
//! rational region the cell stands for. Indicator, piecewise and Dirichlet
//! nodes are decided structurally from that region.

use num_traits::ToPrimitive;

use super::FuncExpr;
use crate::error::{Error, Result};
use crate::exact::{Interval, IntervalSet};
use crate::iv::Iv;
use crate::rat::Rat;
use crate::scalar::{Bound, ExtRat};

/// Default Taylor order used by the integration engines.
pub const TAYLOR_ORDER: usize = 16;

#[derive(Clone, Debug)]
enum Op<B> {
    Const(Iv<B>),
    X,
    Add(Box<Node<B>>, Box<Node<B>>),
    Sub(Box<Node<B>>, Box<Node<B>>),
    Mul(Box<Node<B>>, Box<Node<B>>),
    Div(Box<Node<B>>, Box<Node<B>>),
    Neg(Box<Node<B>>),
    Pow(Box<Node<B>>, i64),
    PowRat(Box<Node<B>>, i64, u32, Iv<B>),
    Sin(Box<Node<B>>),
    Cos(Box<Node<B>>),
    Sqrt(Box<Node<B>>),
    Abs(Box<Node<B>>),
    Min(Box<Node<B>>, Box<Node<B>>),
    Max(Box<Node<B>>, Box<Node<B>>),
    Indicator(IntervalSet<Rat>),
    Dirichlet(Iv<B>, Iv<B>),
    Piecewise(Vec<(IntervalSet<Rat>, Node<B>)>, IntervalSet<Rat>),
}

#[derive(Clone, Debug)]
pub struct Node<B> {
    op: Op<B>,
    structural: bool,
}

/// Evaluation context: the variable's enclosure and the exact region it covers.
#[derive(Clone, Debug)]
pub struct Cell<B> {
    /// Enclosure of every point of the cell.
    pub x: Iv<B>,
    /// Enclosure of the midpoint.
    pub c: Iv<B>,
    /// Enclosure of the half-width.
    pub r: Iv<B>,
    /// Exact region, needed only for structural nodes.
    pub region: Option<Interval<Rat>>,
}

pub type Region = Interval<Rat>;

impl<B: Bound> Cell<B> {
    pub fn point(x: &Rat) -> Self {
        let v = Iv::from_rat(x);
        Cell { x: v.clone(), c: v, r: Iv::zero(), region: Some(Interval::point(x.clone())) }
    }

    /// Cell for the interval `iv`; the region is kept exactly.
    pub fn from_interval(iv: &Interval<Rat>) -> Self {
        let two = crate::rat::int(2);
        let c = (&iv.lo + &iv.hi) / &two;
        let r = (&iv.hi - &iv.lo) / &two;
        Cell {
            x: Iv::from_rats(&iv.lo, &iv.hi),
            c: Iv::from_rat(&c),
            r: Iv::from_rat(&r),
            region: Some(iv.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Loc {
    Inside,
    Outside,
    Split,
}

fn locate(set: &IntervalSet<Rat>, region: Option<&Interval<Rat>>) -> Loc {
    let Some(region) = region else {
        return if set.is_empty() { Loc::Outside } else { Loc::Split };
    };
    let comps = set.components();
    let start = comps.partition_point(|c| c.hi < region.lo);
    for c in &comps[start..] {
        if c.lo > region.hi {
            break;
        }
        if c.intersect(region).is_some() {
            return if region.subset_of(c) { Loc::Inside } else { Loc::Split };
        }
    }
    Loc::Outside
}

fn undefined(what: &str) -> Error {
    Error::Eval(format!("{what} is undefined on the whole evaluation region"))
}

fn bx<B>(n: Node<B>) -> Box<Node<B>> {
    Box::new(n)
}

impl<B: Bound> Node<B> {
    fn leaf(op: Op<B>) -> Self {
        let structural = matches!(op, Op::Indicator(_) | Op::Dirichlet(..) | Op::Piecewise(..));
        Node { op, structural }
    }

    fn as_const(&self) -> Option<&Iv<B>> {
        match &self.op {
            Op::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn compile(f: &FuncExpr, ambient: &Interval<Rat>) -> Result<Self> {
        let un = |a: &FuncExpr, mk: fn(Box<Node<B>>) -> Op<B>| -> Result<Node<B>> {
            let a = Node::compile(a, ambient)?;
            let s = a.structural;
            Ok(Node { op: mk(bx(a)), structural: s })
        };
        let bin = |a: &FuncExpr,
                   b: &FuncExpr,
                   mk: fn(Box<Node<B>>, Box<Node<B>>) -> Op<B>|
         -> Result<Node<B>> {
            let a = Node::compile(a, ambient)?;
            let b = Node::compile(b, ambient)?;
            let s = a.structural || b.structural;
            Ok(Node { op: mk(bx(a), bx(b)), structural: s })
        };
        let node = match f {
            FuncExpr::Const(q) => Node::leaf(Op::Const(Iv::from_rat(q))),
            FuncExpr::X => Node::leaf(Op::X),
            FuncExpr::Pi => Node::leaf(Op::Const(Iv::pi())),
            FuncExpr::Add(a, b) => bin(a, b, Op::Add)?,
            FuncExpr::Sub(a, b) => bin(a, b, Op::Sub)?,
            FuncExpr::Mul(a, b) => bin(a, b, Op::Mul)?,
            FuncExpr::Div(a, b) => bin(a, b, Op::Div)?,
            FuncExpr::Min(a, b) => bin(a, b, Op::Min)?,
            FuncExpr::Max(a, b) => bin(a, b, Op::Max)?,
            FuncExpr::Neg(a) => un(a, Op::Neg)?,
            FuncExpr::Sin(a) => un(a, Op::Sin)?,
            FuncExpr::Cos(a) => un(a, Op::Cos)?,
            FuncExpr::Sqrt(a) => un(a, Op::Sqrt)?,
            FuncExpr::Abs(a) => un(a, Op::Abs)?,
            FuncExpr::Pow(a, k) => {
                let a = Node::compile(a, ambient)?;
                let s = a.structural;
                Node { op: Op::Pow(bx(a), *k), structural: s }
            }
            FuncExpr::PowRat(a, q) => {
                let num = q.numer().to_i64().ok_or_else(|| Error::Eval("exponent too large".into()))?;
                let den = q.denom().to_u32().ok_or_else(|| Error::Eval("exponent too large".into()))?;
                let a = Node::compile(a, ambient)?;
                let s = a.structural;
                Node { op: Op::PowRat(bx(a), num, den, Iv::from_rat(q)), structural: s }
            }
            FuncExpr::Indicator(s) => Node::leaf(Op::Indicator(s.eval(ambient)?)),
            FuncExpr::Dirichlet(a, b) => {
                Node::leaf(Op::Dirichlet(Iv::from_rat(a), Iv::from_rat(b)))
            }
            FuncExpr::Piecewise(bs) => {
                let mut branches = Vec::with_capacity(bs.len());
                let mut all = IntervalSet::empty();
                for (s, g) in bs {
                    let set = s.eval(ambient)?;
                    if !all.intersect(&set).is_empty() {
                        return Err(Error::Domain("piecewise branches overlap".into()));
                    }
                    all = all.union(&set);
                    branches.push((set, Node::compile(g, ambient)?));
                }
                Node::leaf(Op::Piecewise(branches, all))
            }
        };
        Ok(node.fold())
    }

    /// Collapses subtrees that do not depend on the variable.
    fn fold(self) -> Self {
        let cell = Cell { x: Iv::zero(), c: Iv::zero(), r: Iv::zero(), region: None };
        let foldable = match &self.op {
            Op::Const(_) | Op::X | Op::Indicator(_) | Op::Dirichlet(..) | Op::Piecewise(..) => false,
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::Min(a, b) | Op::Max(a, b) => {
                a.as_const().is_some() && b.as_const().is_some()
            }
            Op::Neg(a) | Op::Pow(a, _) | Op::PowRat(a, ..) | Op::Sin(a) | Op::Cos(a) | Op::Sqrt(a) | Op::Abs(a) => {
                a.as_const().is_some()
            }
        };
        if foldable {
            if let Ok(v) = self.range(&cell) {
                if v.is_finite() {
                    return Node::leaf(Op::Const(v));
                }
            }
        }
        self
    }

    /// True when evaluation needs the exact region of a cell.
    pub fn is_structural(&self) -> bool {
        self.structural
    }

    /// Endpoints of every set mentioned by the expression.
    pub fn breakpoints(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        self.collect_breaks(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_breaks(&self, out: &mut Vec<Rat>) {
        match &self.op {
            Op::Indicator(s) => out.extend(s.endpoints()),
            Op::Piecewise(bs, _) => {
                for (s, g) in bs {
                    out.extend(s.endpoints());
                    g.collect_breaks(out);
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) | Op::Min(a, b) | Op::Max(a, b) => {
                a.collect_breaks(out);
                b.collect_breaks(out);
            }
            Op::Neg(a) | Op::Pow(a, _) | Op::PowRat(a, ..) | Op::Sin(a) | Op::Cos(a) | Op::Sqrt(a) | Op::Abs(a) => {
                a.collect_breaks(out)
            }
            Op::Const(_) | Op::X | Op::Dirichlet(..) => {}
        }
    }

    /// Natural interval extension over the cell.
    pub fn range(&self, cell: &Cell<B>) -> Result<Iv<B>> {
        Ok(match &self.op {
            Op::Const(v) => v.clone(),
            Op::X => cell.x.clone(),
            Op::Add(a, b) => a.range(cell)?.add(&b.range(cell)?),
            Op::Sub(a, b) => a.range(cell)?.sub(&b.range(cell)?),
            Op::Mul(a, b) => a.range(cell)?.mul(&b.range(cell)?),
            Op::Div(a, b) => a.range(cell)?.div(&b.range(cell)?).map_err(|_| undefined("0/0"))?,
            Op::Neg(a) => a.range(cell)?.neg(),
            Op::Pow(a, k) => a.range(cell)?.powi(*k).map_err(|_| undefined("0^-k"))?,
            Op::PowRat(a, num, den, _) => {
                a.range(cell)?.pow_rat(*num, *den).map_err(|_| undefined("fractional power"))?
            }
            Op::Sin(a) => a.range(cell)?.sin(),
            Op::Cos(a) => a.range(cell)?.cos(),
            Op::Sqrt(a) => a.range(cell)?.sqrt().map_err(|_| undefined("sqrt"))?,
            Op::Abs(a) => a.range(cell)?.abs(),
            Op::Min(a, b) => a.range(cell)?.min(&b.range(cell)?),
            Op::Max(a, b) => a.range(cell)?.max(&b.range(cell)?),
            Op::Indicator(s) => match locate(s, cell.region.as_ref()) {
                Loc::Inside => Iv::one(),
                Loc::Outside => Iv::zero(),
                Loc::Split => Iv::new(B::zero(), B::one()),
            },
            Op::Dirichlet(a, b) => match &cell.region {
                Some(r) if r.is_degenerate() => a.clone(),
                _ => a.hull(b),
            },
            Op::Piecewise(bs, all) => {
                let region = cell.region.as_ref();
                let mut acc: Option<Iv<B>> = None;
                for (s, g) in bs {
                    match locate(s, region) {
                        Loc::Inside => return g.range(cell),
                        Loc::Outside => {}
                        Loc::Split => {
                            let v = g.range(cell)?;
                            acc = Some(acc.map_or(v.clone(), |a| a.hull(&v)));
                        }
                    }
                }
                let zero = Iv::zero();
                let covered = locate(all, region) == Loc::Inside;
                match acc {
                    Some(a) if covered => a,
                    Some(a) => a.hull(&zero),
                    None => zero,
                }
            }
        })
    }

    /// Range together with Taylor coefficients when the expression is smooth on the cell.
    pub fn tm(&self, cell: &Cell<B>, order: usize) -> Result<Tm<B>> {
        let np = order + 1;
        let nx = order + 2;
        let constant = |v: Iv<B>| Tm { range: v.clone(), ser: Some(Ser::constant(v, np, nx)) };
        Ok(match &self.op {
            Op::Const(v) => constant(v.clone()),
            Op::X => {
                let mut p = Ser::constant(cell.c.clone(), np, 0);
                p.p[1] = cell.r.clone();
                p.dp = 1;
                let mut x = vec![Iv::zero(); nx];
                x[0] = cell.x.clone();
                x[1] = cell.r.clone();
                p.x = x;
                p.dx = 1;
                Tm { range: cell.x.clone(), ser: Some(p) }
            }
            Op::Add(a, b) => {
                let (a, b) = (a.tm(cell, order)?, b.tm(cell, order)?);
                let range = a.range.add(&b.range);
                Tm { range, ser: zip(a.ser, b.ser, |u, v| Some(u.add(&v))) }
            }
            Op::Sub(a, b) => {
                let (a, b) = (a.tm(cell, order)?, b.tm(cell, order)?);
                let range = a.range.sub(&b.range);
                Tm { range, ser: zip(a.ser, b.ser, |u, v| Some(u.add(&v.neg()))) }
            }
            Op::Mul(a, b) => {
                let (a, b) = (a.tm(cell, order)?, b.tm(cell, order)?);
                let range = a.range.mul(&b.range);
                Tm { range, ser: zip(a.ser, b.ser, |u, v| Some(u.mul(&v))) }
            }
            Op::Div(a, b) => {
                let (a, b) = (a.tm(cell, order)?, b.tm(cell, order)?);
                let range = a.range.div(&b.range).map_err(|_| undefined("0/0"))?;
                let smooth = !b.range.contains_zero();
                Tm { range, ser: zip(a.ser, b.ser, |u, v| if smooth { u.div(&v) } else { None }) }
            }
            Op::Neg(a) => {
                let a = a.tm(cell, order)?;
                Tm { range: a.range.neg(), ser: a.ser.map(|u| u.neg()) }
            }
            Op::Pow(a, k) => {
                let a = a.tm(cell, order)?;
                let range = a.range.powi(*k).map_err(|_| undefined("0^-k"))?;
                let k = *k;
                let ser = a.ser.and_then(|u| {
                    if k >= 0 {
                        Some(u.powu(k as u32))
                    } else if !a.range.contains_zero() {
                        Ser::constant(Iv::one(), np, nx).div(&u.powu((-k) as u32))
                    } else {
                        None
                    }
                });
                Tm { range, ser }
            }
            Op::PowRat(a, num, den, alpha) => {
                let a = a.tm(cell, order)?;
                let range = a.range.pow_rat(*num, *den).map_err(|_| undefined("fractional power"))?;
                let ser = if a.range.lo.is_pos() {
                    a.ser.and_then(|u| u.pow_general(alpha, |v| v.pow_rat(*num, *den).ok()))
                } else {
                    None
                };
                Tm { range, ser }
            }
            Op::Sqrt(a) => {
                let a = a.tm(cell, order)?;
                let range = a.range.sqrt().map_err(|_| undefined("sqrt"))?;
                let half = Iv::one().div_int(2);
                let ser = if a.range.lo.is_pos() {
                    a.ser.and_then(|u| u.pow_general(&half, |v| v.sqrt().ok()))
                } else {
                    None
                };
                Tm { range, ser }
            }
            Op::Sin(a) | Op::Cos(a) => {
                let is_sin = matches!(self.op, Op::Sin(_));
                let a = a.tm(cell, order)?;
                match a.ser {
                    Some(mut u) => {
                        u.x[0] = u.x[0].tighten(&a.range);
                        let (s, c) = u.sin_cos();
                        let v = if is_sin { s } else { c };
                        Tm { range: v.x[0].clone(), ser: Some(v) }
                    }
                    None => {
                        let range = if is_sin { a.range.sin() } else { a.range.cos() };
                        Tm { range, ser: None }
                    }
                }
            }
            Op::Abs(a) => {
                let mut a = a.tm(cell, order)?;
                if a.range.contains_zero() {
                    if let Some(u) = &a.ser {
                        a.range = a.range.tighten(&u.bound());
                    }
                }
                let range = a.range.abs();
                let ser = if a.range.lo >= B::zero() {
                    a.ser
                } else if a.range.hi <= B::zero() {
                    a.ser.map(|u| u.neg())
                } else {
                    None
                };
                Tm { range, ser }
            }
            Op::Min(a, b) | Op::Max(a, b) => {
                let is_min = matches!(self.op, Op::Min(..));
                let (a, b) = (a.tm(cell, order)?, b.tm(cell, order)?);
                let range = if is_min { a.range.min(&b.range) } else { a.range.max(&b.range) };
                let a_wins = if is_min { a.range.hi <= b.range.lo } else { a.range.lo >= b.range.hi };
                let b_wins = if is_min { b.range.hi <= a.range.lo } else { b.range.lo >= a.range.hi };
                let ser = if a_wins {
                    a.ser
                } else if b_wins {
                    b.ser
                } else {
                    None
                };
                Tm { range, ser }
            }
            Op::Indicator(_) | Op::Dirichlet(..) => {
                let range = self.range(cell)?;
                if range.lo == range.hi {
                    constant(range)
                } else {
                    Tm { range, ser: None }
                }
            }
            Op::Piecewise(bs, all) => {
                let region = cell.region.as_ref();
                for (s, g) in bs {
                    if locate(s, region) == Loc::Inside {
                        return g.tm(cell, order);
                    }
                }
                let range = self.range(cell)?;
                let outside = bs.iter().all(|(s, _)| locate(s, region) == Loc::Outside);
                if outside && locate(all, region) == Loc::Outside {
                    constant(Iv::zero())
                } else {
                    Tm { range, ser: None }
                }
            }
        })
    }
}

fn zip<B: Bound>(
    a: Option<Ser<B>>,
    b: Option<Ser<B>>,
    f: impl FnOnce(Ser<B>, Ser<B>) -> Option<Ser<B>>,
) -> Option<Ser<B>> {
    match (a, b) {
        (Some(u), Some(v)) => f(u, v),
        _ => None,
    }
}

/// Range enclosure plus optional Taylor data.
#[derive(Clone, Debug)]
pub struct Tm<B> {
    pub range: Iv<B>,
    pub ser: Option<Ser<B>>,
}

/// Taylor coefficients in the normalized variable `t in [-1, 1]`, where the
/// point is `c + r t`.
///
/// `p` expands about the midpoint. `x` expands about an arbitrary point of the
/// cell and has one extra coefficient, which bounds the Lagrange remainder.
#[derive(Clone, Debug)]
pub struct Ser<B> {
    pub p: Vec<Iv<B>>,
    pub x: Vec<Iv<B>>,
    /// Highest index that may be nonzero in `p` and `x`.
    dp: usize,
    dx: usize,
}

fn conv<B: Bound>(a: &[Iv<B>], da: usize, b: &[Iv<B>], db: usize) -> (Vec<Iv<B>>, usize) {
    let n = a.len();
    let d = (da + db).min(n - 1);
    let mut out = vec![Iv::zero(); n];
    for (k, slot) in out.iter_mut().enumerate().take(d + 1) {
        let lo = k.saturating_sub(db);
        let hi = k.min(da);
        let mut acc = Iv::zero();
        for j in lo..=hi {
            acc = acc.add(&a[j].mul(&b[k - j]));
        }
        *slot = acc;
    }
    (out, d)
}

fn div_ser<B: Bound>(a: &[Iv<B>], b: &[Iv<B>], db: usize) -> Option<Vec<Iv<B>>> {
    if b[0].contains_zero() {
        return None;
    }
    let n = a.len();
    let mut w: Vec<Iv<B>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = a[k].clone();
        for j in 1..=k.min(db) {
            acc = acc.sub(&b[j].mul(&w[k - j]));
        }
        w.push(acc.div(&b[0]).ok()?);
    }
    Some(w)
}

/// `u^alpha` given `w0 = u0^alpha`, for `u0 > 0`.
fn pow_ser<B: Bound>(u: &[Iv<B>], du: usize, alpha: &Iv<B>, w0: Iv<B>) -> Option<Vec<Iv<B>>> {
    if !u[0].lo.is_pos() {
        return None;
    }
    let n = u.len();
    let mut w = Vec::with_capacity(n);
    w.push(w0);
    let alpha1 = alpha.add(&Iv::one());
    for k in 1..n {
        let mut acc = Iv::zero();
        for j in 1..=k.min(du) {
            let coef = alpha1.scale_int(j as i64).sub(&Iv::int(k as i64));
            acc = acc.add(&coef.mul(&u[j]).mul(&w[k - j]));
        }
        w.push(acc.div(&u[0].scale_int(k as i64)).ok()?);
    }
    Some(w)
}

fn sin_cos_ser<B: Bound>(u: &[Iv<B>], du: usize) -> (Vec<Iv<B>>, Vec<Iv<B>>) {
    let n = u.len();
    let mut s = Vec::with_capacity(n);
    let mut c = Vec::with_capacity(n);
    if u[0].width_f64() > 1.0 {
        let unit = Iv::new(B::from_i64(-1), B::one());
        s.push(unit.clone());
        c.push(unit);
    } else {
        s.push(u[0].sin());
        c.push(u[0].cos());
    }
    for k in 1..n {
        let mut sk = Iv::zero();
        let mut ck = Iv::zero();
        for j in 1..=k.min(du) {
            let ju = u[j].scale_int(j as i64);
            sk = sk.add(&ju.mul(&c[k - j]));
            ck = ck.sub(&ju.mul(&s[k - j]));
        }
        s.push(sk.div_int(k as i64));
        c.push(ck.div_int(k as i64));
    }
    (s, c)
}

impl<B: Bound> Ser<B> {
    fn constant(v: Iv<B>, np: usize, nx: usize) -> Self {
        let mut p = vec![Iv::zero(); np];
        let mut x = vec![Iv::zero(); nx];
        if np > 0 {
            p[0] = v.clone();
        }
        if nx > 0 {
            x[0] = v;
        }
        Ser { p, x, dp: 0, dx: 0 }
    }

    fn add(&self, o: &Self) -> Self {
        let p = self.p.iter().zip(&o.p).map(|(a, b)| a.add(b)).collect();
        let x = self.x.iter().zip(&o.x).map(|(a, b)| a.add(b)).collect();
        Ser { p, x, dp: self.dp.max(o.dp), dx: self.dx.max(o.dx) }
    }

    fn neg(&self) -> Self {
        Ser {
            p: self.p.iter().map(Iv::neg).collect(),
            x: self.x.iter().map(Iv::neg).collect(),
            dp: self.dp,
            dx: self.dx,
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let (p, dp) = conv(&self.p, self.dp, &o.p, o.dp);
        let (x, dx) = conv(&self.x, self.dx, &o.x, o.dx);
        Ser { p, x, dp, dx }
    }

    fn div(&self, o: &Self) -> Option<Self> {
        let p = div_ser(&self.p, &o.p, o.dp)?;
        let x = div_ser(&self.x, &o.x, o.dx)?;
        let (dp, dx) = (p.len() - 1, x.len() - 1);
        Some(Ser { p, x, dp, dx })
    }

    fn powu(&self, k: u32) -> Self {
        let np = self.p.len();
        let nx = self.x.len();
        if k == 0 {
            return Ser::constant(Iv::one(), np, nx);
        }
        if self.dp == 0 && self.dx == 0 {
            return Ser::constant(self.x[0].powu(k), np, nx).with_p0(self.p[0].powu(k));
        }
        let mut result: Option<Ser<B>> = None;
        let mut base = self.clone();
        let mut e = k;
        loop {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul(&base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        let mut r = result.unwrap();
        r.x[0] = self.x[0].powu(k);
        r.p[0] = self.p[0].powu(k);
        r
    }

    fn with_p0(mut self, v: Iv<B>) -> Self {
        self.p[0] = v;
        self
    }

    fn pow_general(&self, alpha: &Iv<B>, root: impl Fn(&Iv<B>) -> Option<Iv<B>>) -> Option<Self> {
        let p = pow_ser(&self.p, self.dp, alpha, root(&self.p[0])?)?;
        let x = pow_ser(&self.x, self.dx, alpha, root(&self.x[0])?)?;
        let (dp, dx) = (p.len() - 1, x.len() - 1);
        Some(Ser { p, x, dp, dx })
    }

    fn sin_cos(&self) -> (Self, Self) {
        let (ps, pc) = sin_cos_ser(&self.p, self.dp);
        let (xs, xc) = sin_cos_ser(&self.x, self.dx);
        let (dp, dx) = if self.dp == 0 && self.dx == 0 {
            (0, 0)
        } else {
            (self.p.len() - 1, self.x.len() - 1)
        };
        (Ser { p: ps, x: xs, dp, dx }, Ser { p: pc, x: xc, dp, dx })
    }

    /// Enclosure of the values over the cell, from the midpoint expansion.
    pub fn bound(&self) -> Iv<B> {
        let order = self.p.len() - 1;
        let sym = Iv::new(B::from_i64(-1), B::one());
        let half = Iv::new(B::zero(), B::one());
        let power = |k: usize| if k % 2 == 0 { &half } else { &sym };
        let mut b = self.p[0].clone();
        for k in 1..=order.min(self.dp) {
            b = b.add(&self.p[k].mul(power(k)));
        }
        let last = order + 1;
        if last <= self.dx {
            b = b.add(&self.x[last].mul(power(last)));
        }
        b
    }

    /// Enclosure of the mean value over the cell.
    pub fn mean(&self) -> Iv<B> {
        let order = self.p.len() - 1;
        let mut m = Iv::zero();
        for k in (0..=order.min(self.dp)).step_by(2) {
            m = m.add(&self.p[k].div_int(k as i64 + 1));
        }
        let last = order + 1;
        if last <= self.dx {
            let g = &self.x[last];
            let rem = if last % 2 == 0 {
                g.div_int(last as i64 + 1).hull(&Iv::zero())
            } else {
                let b = g.mag().div_up(&B::from_i64(last as i64 + 1));
                Iv::new(b.neg(), b)
            };
            m = m.add(&rem);
        }
        m
    }
}

/// Range enclosure with attainment flags; endpoints may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeEnclosure {
    pub lo: ExtRat,
    pub hi: ExtRat,
    pub lo_attained: bool,
    pub hi_attained: bool,
}

/// Encloses `f(J)` over `ambient`.
pub fn range_enclosure(f: &FuncExpr, j: &Interval<Rat>, ambient: &Interval<Rat>) -> Result<RangeEnclosure> {
    let node = Node::<ExtRat>::compile(f, ambient)?;
    let r = node.range(&Cell::from_interval(j))?;
    let mut lo_attained = false;
    let mut hi_attained = false;
    if !j.is_degenerate() && matches!(f, FuncExpr::Dirichlet(..)) {
        lo_attained = true;
        hi_attained = true;
    }
    let mid = (&j.lo + &j.hi) / crate::rat::int(2);
    let mut probes = vec![mid];
    if j.lo_closed {
        probes.push(j.lo.clone());
    }
    if j.hi_closed {
        probes.push(j.hi.clone());
    }
    for p in probes {
        if let Ok(v) = node.range(&Cell::point(&p)) {
            if v.lo == v.hi {
                lo_attained |= v.lo == r.lo;
                hi_attained |= v.hi == r.hi;
            }
        }
    }
    Ok(RangeEnclosure { lo: r.lo, hi: r.hi, lo_attained, hi_attained })
}

/// Value of `f` at a rational point; exact whenever only rational operations occur.
pub fn eval_func(f: &FuncExpr, x: &Rat, ambient: &Interval<Rat>) -> Result<Iv<ExtRat>> {
    if !ambient.contains(x) {
        return Err(Error::Domain(format!("point {x} lies outside the ambient interval")));
    }
    let node = Node::<ExtRat>::compile(f, ambient)?;
    node.range(&Cell::point(x))
}

impl Iv<ExtRat> {
    /// The exact value when the enclosure is a single finite point.
    pub fn exact(&self) -> Option<Rat> {
        if self.lo == self.hi {
            self.lo.to_rat()
        } else {
            None
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_func;
    use crate::rat::{int, rat};

    fn unit() -> Interval<Rat> {
        Interval::unit()
    }

    fn ev(s: &str, x: Rat) -> Result<Iv<ExtRat>> {
        eval_func(&parse_func(s).unwrap(), &x, &unit())
    }

    #[test]
    fn pointwise_values() {
        assert_eq!(ev("dirichlet(3,2)", rat(1, 2)).unwrap().exact(), Some(int(3)));
        assert_eq!(ev("indicator([0,1/2])", rat(3, 4)).unwrap().exact(), Some(int(0)));
        assert_eq!(ev("1/sqrt(x)", int(0)).unwrap().lo, ExtRat::PosInf);
        assert!(ev("sqrt(x - 1)", rat(1, 2)).is_err());
        assert!(ev("0/x", int(0)).is_err());
        assert_eq!(ev("x^2 - 1/3", rat(1, 3)).unwrap().exact(), Some(rat(-2, 9)));
        let s = ev("sin(x)", int(1)).unwrap();
        let w = crate::rat::to_f64(&(s.hi.to_rat().unwrap() - s.lo.to_rat().unwrap()));
        assert!(w < 2f64.powi(-40));
    }

    #[test]
    fn ranges() {
        let r = range_enclosure(&parse_func("x^2").unwrap(), &Interval::closed(int(0), rat(1, 2)), &unit()).unwrap();
        assert_eq!((r.lo, r.hi), (ExtRat::fin(int(0)), ExtRat::fin(rat(1, 4))));
        assert!(r.lo_attained && r.hi_attained);
        let r = range_enclosure(&parse_func("dirichlet(0,1)").unwrap(), &Interval::open(rat(1, 3), rat(1, 2)), &unit()).unwrap();
        assert_eq!((r.lo, r.hi), (ExtRat::fin(int(0)), ExtRat::fin(int(1))));
        assert!(r.lo_attained && r.hi_attained);
        let r = range_enclosure(&parse_func("indicator([0,1/2])").unwrap(), &Interval::open(rat(1, 2), int(1)), &unit()).unwrap();
        assert_eq!(r.hi, ExtRat::fin(int(0)));
    }

    #[test]
    fn taylor_mean_is_tight() {
        let f = parse_func("sin(3*x) + 1/(1 + x^2)").unwrap();
        let node = Node::<f64>::compile(&f, &unit()).unwrap();
        let cell = Cell::<f64>::from_interval(&Interval::closed(rat(1, 4), rat(3, 8)));
        let tm = node.tm(&cell, TAYLOR_ORDER).unwrap();
        let m = tm.ser.unwrap().mean();
        // mean of f over [1/4, 3/8] via the antiderivative -cos(3x)/3 + atan(x)
        let anti = |x: f64| -(3.0 * x).cos() / 3.0 + x.atan();
        let exact = (anti(0.375) - anti(0.25)) / 0.125;
        assert!(m.lo <= exact + 1e-15 && exact - 1e-15 <= m.hi, "{m:?} vs {exact}");
        assert!(m.width_f64() < 1e-13);
    }

    #[test]
    fn taylor_handles_branches() {
        let f = parse_func("min(1/sqrt(x), 4) + abs(x - 1/2)").unwrap();
        let node = Node::<f64>::compile(&f, &unit()).unwrap();
        let near0 = Cell::<f64>::from_interval(&Interval::closed(int(0), rat(1, 32)));
        assert!(node.tm(&near0, 8).unwrap().ser.is_some());
        let mid = Cell::<f64>::from_interval(&Interval::closed(rat(1, 4), rat(3, 4)));
        assert!(node.tm(&mid, 8).unwrap().ser.is_none());
    }
}
