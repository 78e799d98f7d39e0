//! Printing that re-parses to the same tree.

use std::fmt;

use num_traits::Signed;

use super::{FuncExpr, SetExpr};
use crate::rat::Rat;

fn rat_str(q: &Rat) -> String {
    q.to_string()
}

fn set_prec(e: &SetExpr) -> u8 {
    match e {
        SetExpr::Union(..) | SetExpr::Intersect(..) | SetExpr::Difference(..) => 1,
        SetExpr::Complement(_) => 2,
        SetExpr::Translate(..) => 3,
        _ => 4,
    }
}

fn set_str(e: &SetExpr, min: u8) -> String {
    let s = match e {
        SetExpr::Interval(iv) => iv.to_string(),
        SetExpr::Empty => "empty".into(),
        SetExpr::Whole => "I".into(),
        SetExpr::Cantor(n) => format!("cantor({n})"),
        SetExpr::Union(a, b) => format!("{} | {}", set_str(a, 1), set_str(b, 2)),
        SetExpr::Intersect(a, b) => format!("{} & {}", set_str(a, 1), set_str(b, 2)),
        SetExpr::Difference(a, b) => format!("{} \\ {}", set_str(a, 1), set_str(b, 2)),
        SetExpr::Complement(a) => format!("~{}", set_str(a, 2)),
        SetExpr::Translate(a, c) => format!("{} + {}", set_str(a, 3), rat_str(c)),
    };
    if set_prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&set_str(self, 0))
    }
}

fn func_prec(e: &FuncExpr) -> u8 {
    match e {
        FuncExpr::Add(..) | FuncExpr::Sub(..) => 1,
        FuncExpr::Mul(..) | FuncExpr::Div(..) => 2,
        FuncExpr::Neg(_) => 3,
        FuncExpr::Pow(..) | FuncExpr::PowRat(..) => 4,
        FuncExpr::Const(q) if q.is_negative() => 0,
        _ => 5,
    }
}

fn func_str(e: &FuncExpr, min: u8) -> String {
    let s = match e {
        FuncExpr::Const(q) => rat_str(q),
        FuncExpr::X => "x".into(),
        FuncExpr::Pi => "pi".into(),
        FuncExpr::Add(a, b) => format!("{} + {}", func_str(a, 1), func_str(b, 2)),
        FuncExpr::Sub(a, b) => format!("{} - {}", func_str(a, 1), func_str(b, 2)),
        FuncExpr::Mul(a, b) => format!("{}*{}", func_str(a, 2), func_str(b, 3)),
        FuncExpr::Div(a, b) => {
            let l = func_str(a, 2);
            let r = func_str(b, 3);
            // `2/3` would re-lex as a single rational literal
            let l = if l.ends_with(|c: char| c.is_ascii_digit())
                && r.starts_with(|c: char| c.is_ascii_digit())
            {
                format!("({l})")
            } else {
                l
            };
            format!("{l}/{r}")
        }
        FuncExpr::Neg(a) => format!("-{}", func_str(a, 3)),
        FuncExpr::Pow(a, k) => {
            if *k < 0 {
                format!("{}^({k})", func_str(a, 5))
            } else {
                format!("{}^{k}", func_str(a, 5))
            }
        }
        FuncExpr::PowRat(a, q) => format!("{}^({})", func_str(a, 5), rat_str(q)),
        FuncExpr::Sin(a) => format!("sin({})", func_str(a, 0)),
        FuncExpr::Cos(a) => format!("cos({})", func_str(a, 0)),
        FuncExpr::Sqrt(a) => format!("sqrt({})", func_str(a, 0)),
        FuncExpr::Abs(a) => format!("abs({})", func_str(a, 0)),
        FuncExpr::Min(a, b) => format!("min({}, {})", func_str(a, 0), func_str(b, 0)),
        FuncExpr::Max(a, b) => format!("max({}, {})", func_str(a, 0), func_str(b, 0)),
        FuncExpr::Indicator(s) => format!("indicator({s})"),
        FuncExpr::Dirichlet(a, b) => format!("dirichlet({}, {})", rat_str(a), rat_str(b)),
        FuncExpr::Piecewise(bs) => {
            let parts: Vec<String> =
                bs.iter().map(|(s, g)| format!("{s}: {}", func_str(g, 0))).collect();
            format!("piecewise{{{}}}", parts.join(", "))
        }
    };
    if func_prec(e) < min {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&func_str(self, 0))
    }
}
