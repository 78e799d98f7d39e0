//! Set and function expressions.
//!
//! Every expression has two readings. The literal one drives the Riemann and
//! regulated machinery, where `dirichlet(a,b)` really is `a` on rationals and
//! `b` elsewhere. The essential one, obtained with [`ae_canonicalize`], is
//! equal to the literal one off a null set and is what the Lebesgue side
//! integrates.

mod canon;
mod node;
mod parse;
mod print;

use std::ops;

use crate::error::Result;
use crate::exact::{cantor_level_rat, Interval, IntervalSet};
use crate::rat::Rat;

pub use canon::{ae_canonicalize, dirichlet_split, to_simple_parts};
pub use node::{eval_func, range_enclosure, Cell, Node, RangeEnclosure, Region, Ser, Tm, TAYLOR_ORDER};
pub use parse::{instantiate, parse_func, parse_func_in, parse_set};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SetExpr {
    Interval(Interval<Rat>),
    Empty,
    /// The ambient interval.
    Whole,
    Cantor(u32),
    Union(Box<SetExpr>, Box<SetExpr>),
    Intersect(Box<SetExpr>, Box<SetExpr>),
    Difference(Box<SetExpr>, Box<SetExpr>),
    Complement(Box<SetExpr>),
    Translate(Box<SetExpr>, Rat),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FuncExpr {
    Const(Rat),
    X,
    Pi,
    Add(Box<FuncExpr>, Box<FuncExpr>),
    Sub(Box<FuncExpr>, Box<FuncExpr>),
    Mul(Box<FuncExpr>, Box<FuncExpr>),
    Div(Box<FuncExpr>, Box<FuncExpr>),
    Neg(Box<FuncExpr>),
    Pow(Box<FuncExpr>, i64),
    /// Non-integer rational power, defined for nonnegative bases.
    PowRat(Box<FuncExpr>, Rat),
    Sin(Box<FuncExpr>),
    Cos(Box<FuncExpr>),
    Sqrt(Box<FuncExpr>),
    Abs(Box<FuncExpr>),
    Min(Box<FuncExpr>, Box<FuncExpr>),
    Max(Box<FuncExpr>, Box<FuncExpr>),
    Indicator(SetExpr),
    /// `a` on rationals, `b` on irrationals.
    Dirichlet(Rat, Rat),
    /// Disjoint branches; zero outside all of them.
    Piecewise(Vec<(SetExpr, FuncExpr)>),
}

impl SetExpr {
    pub fn eval(&self, ambient: &Interval<Rat>) -> Result<IntervalSet<Rat>> {
        Ok(match self {
            SetExpr::Interval(iv) => IntervalSet::canonicalize(vec![iv.clone()], ambient)?,
            SetExpr::Empty => IntervalSet::empty(),
            SetExpr::Whole => IntervalSet::from_interval(ambient.clone()),
            SetExpr::Cantor(n) => {
                IntervalSet::canonicalize(cantor_level_rat(*n).into_components(), ambient)?
            }
            SetExpr::Union(a, b) => a.eval(ambient)?.union(&b.eval(ambient)?),
            SetExpr::Intersect(a, b) => a.eval(ambient)?.intersect(&b.eval(ambient)?),
            SetExpr::Difference(a, b) => a.eval(ambient)?.difference(&b.eval(ambient)?),
            SetExpr::Complement(a) => a.eval(ambient)?.complement(ambient),
            SetExpr::Translate(a, c) => a.eval(ambient)?.translate(c, ambient)?,
        })
    }

    pub fn from_set(s: &IntervalSet<Rat>) -> Self {
        let mut it = s.components().iter().map(|c| SetExpr::Interval(c.clone()));
        match it.next() {
            None => SetExpr::Empty,
            Some(first) => it.fold(first, |acc, c| SetExpr::Union(Box::new(acc), Box::new(c))),
        }
    }
}

/// Evaluates a set over `[0, 1]`.
pub fn eval_set(e: &SetExpr) -> Result<IntervalSet<Rat>> {
    e.eval(&Interval::unit())
}

impl FuncExpr {
    pub fn constant(q: Rat) -> Self {
        FuncExpr::Const(q)
    }

    pub fn int(v: i64) -> Self {
        FuncExpr::Const(crate::rat::int(v))
    }

    pub fn x() -> Self {
        FuncExpr::X
    }

    pub fn sin(self) -> Self {
        FuncExpr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Self {
        FuncExpr::Cos(Box::new(self))
    }

    pub fn sqrt(self) -> Self {
        FuncExpr::Sqrt(Box::new(self))
    }

    pub fn abs(self) -> Self {
        FuncExpr::Abs(Box::new(self))
    }

    pub fn powi(self, k: i64) -> Self {
        FuncExpr::Pow(Box::new(self), k)
    }

    pub fn min(self, o: Self) -> Self {
        FuncExpr::Min(Box::new(self), Box::new(o))
    }

    pub fn max(self, o: Self) -> Self {
        FuncExpr::Max(Box::new(self), Box::new(o))
    }

    pub fn indicator(s: &IntervalSet<Rat>) -> Self {
        FuncExpr::Indicator(SetExpr::from_set(s))
    }

    /// `cos(n pi x)`.
    pub fn cos_mode(n: i64) -> Self {
        (FuncExpr::int(n) * FuncExpr::Pi * FuncExpr::X).cos()
    }

    /// `sin(n pi x)`.
    pub fn sin_mode(n: i64) -> Self {
        (FuncExpr::int(n) * FuncExpr::Pi * FuncExpr::X).sin()
    }

    pub fn as_const(&self) -> Option<&Rat> {
        match self {
            FuncExpr::Const(q) => Some(q),
            _ => None,
        }
    }

    /// Whether the tree contains a `dirichlet` node.
    pub fn has_dirichlet(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, FuncExpr::Dirichlet(..)));
        found
    }

    /// Whether every value is a rational function of `x`, so exact arithmetic
    /// can evaluate it.
    pub fn is_rational(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |e| {
            ok &= !matches!(
                e,
                FuncExpr::Pi | FuncExpr::Sin(_) | FuncExpr::Cos(_) | FuncExpr::Sqrt(_) | FuncExpr::PowRat(..)
            )
        });
        ok
    }

    pub fn visit(&self, f: &mut impl FnMut(&FuncExpr)) {
        f(self);
        match self {
            FuncExpr::Add(a, b)
            | FuncExpr::Sub(a, b)
            | FuncExpr::Mul(a, b)
            | FuncExpr::Div(a, b)
            | FuncExpr::Min(a, b)
            | FuncExpr::Max(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            FuncExpr::Neg(a)
            | FuncExpr::Pow(a, _)
            | FuncExpr::PowRat(a, _)
            | FuncExpr::Sin(a)
            | FuncExpr::Cos(a)
            | FuncExpr::Sqrt(a)
            | FuncExpr::Abs(a) => a.visit(f),
            FuncExpr::Piecewise(bs) => bs.iter().for_each(|(_, g)| g.visit(f)),
            FuncExpr::Const(_)
            | FuncExpr::X
            | FuncExpr::Pi
            | FuncExpr::Indicator(_)
            | FuncExpr::Dirichlet(..) => {}
        }
    }

    /// Rebuilds the tree bottom-up through `f`.
    pub fn map(&self, f: &impl Fn(FuncExpr) -> FuncExpr) -> FuncExpr {
        let b = |e: &FuncExpr| Box::new(e.map(f));
        let out = match self {
            FuncExpr::Add(x, y) => FuncExpr::Add(b(x), b(y)),
            FuncExpr::Sub(x, y) => FuncExpr::Sub(b(x), b(y)),
            FuncExpr::Mul(x, y) => FuncExpr::Mul(b(x), b(y)),
            FuncExpr::Div(x, y) => FuncExpr::Div(b(x), b(y)),
            FuncExpr::Min(x, y) => FuncExpr::Min(b(x), b(y)),
            FuncExpr::Max(x, y) => FuncExpr::Max(b(x), b(y)),
            FuncExpr::Neg(x) => FuncExpr::Neg(b(x)),
            FuncExpr::Pow(x, k) => FuncExpr::Pow(b(x), *k),
            FuncExpr::PowRat(x, q) => FuncExpr::PowRat(b(x), q.clone()),
            FuncExpr::Sin(x) => FuncExpr::Sin(b(x)),
            FuncExpr::Cos(x) => FuncExpr::Cos(b(x)),
            FuncExpr::Sqrt(x) => FuncExpr::Sqrt(b(x)),
            FuncExpr::Abs(x) => FuncExpr::Abs(b(x)),
            FuncExpr::Piecewise(bs) => {
                FuncExpr::Piecewise(bs.iter().map(|(s, g)| (s.clone(), g.map(f))).collect())
            }
            leaf => leaf.clone(),
        };
        f(out)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $v:ident) => {
        impl ops::$tr for FuncExpr {
            type Output = FuncExpr;
            fn $m(self, o: FuncExpr) -> FuncExpr {
                FuncExpr::$v(Box::new(self), Box::new(o))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl ops::Neg for FuncExpr {
    type Output = FuncExpr;
    fn neg(self) -> FuncExpr {
        FuncExpr::Neg(Box::new(self))
    }
}
