//! Almost-everywhere rewriting.

use num_traits::{Signed, Zero};

use super::node::{Cell, Node};
use super::{FuncExpr, SetExpr};
use crate::error::Result;
use crate::exact::Interval;
use crate::rat::{int, Rat};
use crate::scalar::ExtRat;

/// A function equal to `f` off a null subset of `ambient`.
///
/// Dirichlet nodes take their irrational value, indicators of null or full
/// sets become constants, null piecewise branches are dropped, and rational
/// constant subtrees are folded.
pub fn ae_canonicalize(f: &FuncExpr, ambient: &Interval<Rat>) -> Result<FuncExpr> {
    let full = ambient.length();
    let out = match f {
        FuncExpr::Dirichlet(_, b) => FuncExpr::Const(b.clone()),
        FuncExpr::Indicator(s) => {
            let set = s.eval(ambient)?;
            let m = set.measure();
            if m.is_zero() {
                FuncExpr::int(0)
            } else if m == full {
                FuncExpr::int(1)
            } else {
                FuncExpr::Indicator(SetExpr::from_set(&set))
            }
        }
        FuncExpr::Piecewise(bs) => {
            let mut kept = Vec::new();
            for (s, g) in bs {
                let set = s.eval(ambient)?;
                if !set.measure().is_zero() {
                    kept.push((SetExpr::from_set(&set), ae_canonicalize(g, ambient)?));
                }
            }
            match kept.len() {
                0 => FuncExpr::int(0),
                1 if kept[0].0.eval(ambient)?.measure() == full => kept.pop().unwrap().1,
                _ => FuncExpr::Piecewise(kept),
            }
        }
        FuncExpr::Add(a, b) => ae_canonicalize(a, ambient)? + ae_canonicalize(b, ambient)?,
        FuncExpr::Sub(a, b) => ae_canonicalize(a, ambient)? - ae_canonicalize(b, ambient)?,
        FuncExpr::Mul(a, b) => ae_canonicalize(a, ambient)? * ae_canonicalize(b, ambient)?,
        FuncExpr::Div(a, b) => ae_canonicalize(a, ambient)? / ae_canonicalize(b, ambient)?,
        FuncExpr::Min(a, b) => ae_canonicalize(a, ambient)?.min(ae_canonicalize(b, ambient)?),
        FuncExpr::Max(a, b) => ae_canonicalize(a, ambient)?.max(ae_canonicalize(b, ambient)?),
        FuncExpr::Neg(a) => -ae_canonicalize(a, ambient)?,
        FuncExpr::Pow(a, k) => ae_canonicalize(a, ambient)?.powi(*k),
        FuncExpr::PowRat(a, q) => FuncExpr::PowRat(Box::new(ae_canonicalize(a, ambient)?), q.clone()),
        FuncExpr::Sin(a) => ae_canonicalize(a, ambient)?.sin(),
        FuncExpr::Cos(a) => ae_canonicalize(a, ambient)?.cos(),
        FuncExpr::Sqrt(a) => ae_canonicalize(a, ambient)?.sqrt(),
        FuncExpr::Abs(a) => ae_canonicalize(a, ambient)?.abs(),
        FuncExpr::Const(_) | FuncExpr::X | FuncExpr::Pi => f.clone(),
    };
    Ok(fold_rational(out))
}

fn fold_rational(e: FuncExpr) -> FuncExpr {
    use FuncExpr::*;
    let c = |e: &FuncExpr| e.as_const().cloned();
    let folded = match &e {
        Add(a, b) => c(a).zip(c(b)).map(|(x, y)| x + y),
        Sub(a, b) => c(a).zip(c(b)).map(|(x, y)| x - y),
        Mul(a, b) => c(a).zip(c(b)).map(|(x, y)| x * y),
        Div(a, b) => c(a).zip(c(b)).filter(|(_, y)| !y.is_zero()).map(|(x, y)| x / y),
        Neg(a) => c(a).map(|x| -x),
        Abs(a) => c(a).map(|x| x.abs()),
        Min(a, b) => c(a).zip(c(b)).map(|(x, y)| if x <= y { x } else { y }),
        Max(a, b) => c(a).zip(c(b)).map(|(x, y)| if x >= y { x } else { y }),
        Pow(a, k) => c(a).filter(|x| *k >= 0 || !x.is_zero()).map(|x| {
            let p = num_traits::pow(x, k.unsigned_abs() as usize);
            if *k < 0 {
                p.recip()
            } else {
                p
            }
        }),
        _ => None,
    };
    match folded {
        // keep negative results in the same shape the parser produces
        Some(q) if q.is_negative() => Neg(Box::new(Const(-q))),
        Some(q) => Const(q),
        None => e,
    }
}

/// Exact value of a variable-free rational expression.
pub(crate) fn const_value(e: &FuncExpr) -> Option<Rat> {
    let mut free = true;
    e.visit(&mut |n| free &= !matches!(n, FuncExpr::X | FuncExpr::Indicator(_) | FuncExpr::Dirichlet(..) | FuncExpr::Piecewise(_)));
    if !free {
        return None;
    }
    match ae_canonicalize(e, &Interval::unit()).ok()? {
        FuncExpr::Const(q) => Some(q),
        FuncExpr::Neg(a) => a.as_const().map(|q| -q.clone()),
        _ => None,
    }
}

/// The two literal branches of every `dirichlet` node: `(rational, irrational)`.
pub fn dirichlet_split(f: &FuncExpr) -> (FuncExpr, FuncExpr) {
    let on_rat = f.map(&|e| match e {
        FuncExpr::Dirichlet(a, _) => FuncExpr::Const(a),
        other => other,
    });
    let on_irr = f.map(&|e| match e {
        FuncExpr::Dirichlet(_, b) => FuncExpr::Const(b),
        other => other,
    });
    (on_rat, on_irr)
}

/// Exact values of `f` on the elementary pieces cut out by its set endpoints.
///
/// Returns `None` when `f` depends on the variable other than through
/// indicators and piecewise selection, or when some value is not rational.
pub fn to_simple_parts(f: &FuncExpr, ambient: &Interval<Rat>) -> Result<Option<Vec<(Interval<Rat>, Rat)>>> {
    let mut varies = false;
    f.visit(&mut |e| {
        varies |= matches!(e, FuncExpr::X | FuncExpr::Pi | FuncExpr::Dirichlet(..))
    });
    if varies {
        return Ok(None);
    }
    let node = Node::<ExtRat>::compile(f, ambient)?;
    let mut cuts: Vec<Rat> = node
        .breakpoints()
        .into_iter()
        .filter(|q| *q > ambient.lo && *q < ambient.hi)
        .collect();
    cuts.insert(0, ambient.lo.clone());
    cuts.push(ambient.hi.clone());
    let mut pieces = Vec::new();
    for (i, w) in cuts.windows(2).enumerate() {
        if i == 0 && ambient.lo_closed {
            pieces.push(Interval::point(w[0].clone()));
        }
        pieces.push(Interval::open(w[0].clone(), w[1].clone()));
        let last = i + 2 == cuts.len();
        if !last || ambient.hi_closed {
            pieces.push(Interval::point(w[1].clone()));
        }
    }
    let two = int(2);
    let mut out = Vec::with_capacity(pieces.len());
    for p in pieces {
        let probe = (&p.lo + &p.hi) / &two;
        let cell = Cell::<ExtRat> {
            region: Some(p.clone()),
            ..Cell::point(&probe)
        };
        let v = match node.range(&cell) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        match v.exact() {
            Some(q) => out.push((p, q)),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_func;
    use crate::rat::rat;

    fn canon(s: &str) -> FuncExpr {
        ae_canonicalize(&parse_func(s).unwrap(), &Interval::unit()).unwrap()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canon("dirichlet(3,2)"), FuncExpr::int(2));
        assert_eq!(canon("indicator([0,1/2] & [1/2,1])"), FuncExpr::int(0));
        assert_eq!(canon("indicator(~cantor(3))"), canon("indicator(~cantor(3))"));
        assert_eq!(canon("indicator([0,1/2) | [1/2,1])"), FuncExpr::int(1));
        assert_eq!(canon("x^2"), parse_func("x^2").unwrap());
        assert_eq!(canon("x*dirichlet(0,1)"), parse_func("x*1").unwrap());
    }

    #[test]
    fn simple_parts() {
        let f = parse_func("2*indicator([0,1/2]) + indicator([1/4,1])").unwrap();
        let parts = to_simple_parts(&f, &Interval::unit()).unwrap().unwrap();
        let at = |x: Rat| parts.iter().find(|(i, _)| i.contains(&x)).unwrap().1.clone();
        assert_eq!(at(rat(1, 8)), int(2));
        assert_eq!(at(rat(1, 4)), int(3));
        assert_eq!(at(rat(1, 2)), int(3));
        assert_eq!(at(rat(3, 4)), int(1));
        let threes: Rat = parts.iter().filter(|(_, v)| *v == int(3)).map(|(i, _)| i.length()).sum();
        assert_eq!(threes, rat(1, 4));
        assert!(to_simple_parts(&parse_func("x").unwrap(), &Interval::unit()).unwrap().is_none());
    }

    #[test]
    fn split_dirichlet() {
        let (r, i) = dirichlet_split(&parse_func("x + dirichlet(3,2)").unwrap());
        assert_eq!(r, parse_func("x + 3").unwrap());
        assert_eq!(i, parse_func("x + 2").unwrap());
    }
}
