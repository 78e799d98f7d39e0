//! Recursive-descent parser. Error positions are 1-based character offsets.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use super::{FuncExpr, SetExpr};
use crate::error::{Error, Result};
use crate::exact::Interval;
use crate::rat::{self, Rat};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Dec(Rat),
    Ident(String),
    Sym(char),
    End,
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { pos, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut decimal = false;
            if i < chars.len() && chars[i] == '.' {
                decimal = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    decimal = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            if decimal {
                let q = rat::parse_rat(&s).ok_or_else(|| syntax(pos, format!("malformed number '{s}'")))?;
                out.push((Tok::Dec(q), pos));
            } else {
                out.push((Tok::Int(s.parse().unwrap()), pos));
            }
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if "()[]{},:+-*/^|&\\~".contains(c) {
            out.push((Tok::Sym(c), pos));
            i += 1;
        } else {
            return Err(syntax(pos, format!("unexpected character '{c}'")));
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    ambient: Interval<Rat>,
}

impl Parser {
    fn new(text: &str, ambient: Interval<Rat>) -> Result<Self> {
        Ok(Parser { toks: lex(text)?, at: 0, ambient })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        *self.peek() == Tok::Sym(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.is_sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected '{c}', found {}", self.describe())))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Int(n) => format!("number '{n}'"),
            Tok::Dec(q) => format!("number '{q}'"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::End => "end of input".into(),
        }
    }

    fn finish(&mut self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("unexpected {}", self.describe())))
        }
    }

    fn is_number(&self) -> bool {
        matches!(self.peek(), Tok::Int(_) | Tok::Dec(_))
    }

    /// `INT ('/' INT)? | DECIMAL`, without sign.
    fn unsigned_rat(&mut self) -> Result<Rat> {
        let pos = self.pos();
        if !self.is_number() {
            return Err(syntax(pos, format!("expected a rational number, found {}", self.describe())));
        }
        match self.bump() {
            Tok::Dec(q) => Ok(q),
            Tok::Int(n) => {
                if self.is_sym('/') && matches!(self.peek_at(1), Tok::Int(_)) {
                    self.bump();
                    let dpos = self.pos();
                    let Tok::Int(d) = self.bump() else { unreachable!() };
                    if d.is_zero() {
                        return Err(syntax(dpos, "zero denominator in rational literal"));
                    }
                    Ok(Rat::new(n, d))
                } else {
                    Ok(Rat::from_integer(n))
                }
            }
            _ => unreachable!(),
        }
    }

    fn signed_rat(&mut self) -> Result<Rat> {
        if self.eat('-') {
            Ok(-self.unsigned_rat()?)
        } else {
            self.unsigned_rat()
        }
    }

    /// Constant rational expression such as `-1/3` or `2^(-5)`.
    fn endpoint(&mut self) -> Result<Rat> {
        let pos = self.pos();
        let e = self.func()?;
        super::canon::const_value(&e).ok_or_else(|| syntax(pos, "interval endpoint must be a rational constant"))
    }

    fn ident(&self) -> Option<&str> {
        match self.peek() {
            Tok::Ident(s) => Some(s.as_str()),
            _ => None,
        }
    }

    // ---- sets ----

    fn set(&mut self) -> Result<SetExpr> {
        let mut lhs = self.set_term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym(c @ ('|' | '&' | '\\')) => *c,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = Box::new(self.set_term()?);
            let l = Box::new(lhs);
            lhs = match op {
                '|' => SetExpr::Union(l, rhs),
                '&' => SetExpr::Intersect(l, rhs),
                _ => SetExpr::Difference(l, rhs),
            };
        }
    }

    fn set_term(&mut self) -> Result<SetExpr> {
        let mut t = self.set_primary()?;
        while self.is_sym('+') {
            self.bump();
            let c = self.signed_rat()?;
            t = SetExpr::Translate(Box::new(t), c);
        }
        Ok(t)
    }

    fn set_primary(&mut self) -> Result<SetExpr> {
        let pos = self.pos();
        if self.eat('~') {
            return Ok(SetExpr::Complement(Box::new(self.set_term()?)));
        }
        if self.is_sym('[') || self.is_sym('(') {
            let interval = self.is_sym('[')
                || matches!(self.peek_at(1), Tok::Int(_) | Tok::Dec(_) | Tok::Sym('-'));
            if !interval {
                self.bump();
                let s = self.set()?;
                self.expect(')')?;
                return Ok(s);
            }
            let lo_closed = self.bump() == Tok::Sym('[');
            let lo = self.endpoint()?;
            self.expect(',')?;
            let hi = self.endpoint()?;
            let hi_closed = if self.eat(']') {
                true
            } else if self.eat(')') {
                false
            } else {
                return Err(syntax(self.pos(), format!("expected ']' or ')', found {}", self.describe())));
            };
            if lo > hi {
                return Err(syntax(pos, "interval has lo > hi"));
            }
            return Ok(match Interval::new(lo, hi, lo_closed, hi_closed) {
                Some(iv) => SetExpr::Interval(iv),
                None => SetExpr::Empty,
            });
        }
        match self.ident() {
            Some("empty") => {
                self.bump();
                Ok(SetExpr::Empty)
            }
            Some("I") => {
                self.bump();
                Ok(SetExpr::Whole)
            }
            Some("cantor") => {
                self.bump();
                self.expect('(')?;
                let npos = self.pos();
                let n = match self.bump() {
                    Tok::Int(n) => n.to_u32().filter(|&n| n <= 24),
                    _ => None,
                }
                .ok_or_else(|| syntax(npos, "cantor level must be an integer in 0..=24"))?;
                self.expect(')')?;
                Ok(SetExpr::Cantor(n))
            }
            Some(other) => Err(syntax(pos, format!("unknown set identifier '{other}'"))),
            None => Err(syntax(pos, format!("expected a set, found {}", self.describe()))),
        }
    }

    // ---- functions ----

    fn func(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.prod()?;
        loop {
            if self.eat('+') {
                lhs = FuncExpr::Add(Box::new(lhs), Box::new(self.prod()?));
            } else if self.eat('-') {
                lhs = FuncExpr::Sub(Box::new(lhs), Box::new(self.prod()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn prod(&mut self) -> Result<FuncExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = FuncExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = FuncExpr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<FuncExpr> {
        if self.eat('-') {
            return Ok(FuncExpr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        if self.eat('(') {
            let q = self.signed_rat()?;
            self.expect(')')?;
            if rat::is_integer(&q) {
                let k = q.numer().to_i64().ok_or_else(|| syntax(pos, "exponent too large"))?;
                return Ok(FuncExpr::Pow(Box::new(base), k));
            }
            return Ok(FuncExpr::PowRat(Box::new(base), q));
        }
        match self.peek().clone() {
            Tok::Int(k) => {
                self.bump();
                let k = k.to_i64().ok_or_else(|| syntax(pos, "exponent too large"))?;
                Ok(FuncExpr::Pow(Box::new(base), k))
            }
            _ => Err(syntax(pos, format!("expected an integer exponent, found {}", self.describe()))),
        }
    }

    fn call1(&mut self) -> Result<Box<FuncExpr>> {
        self.expect('(')?;
        let a = self.func()?;
        self.expect(')')?;
        Ok(Box::new(a))
    }

    fn call2(&mut self) -> Result<(Box<FuncExpr>, Box<FuncExpr>)> {
        self.expect('(')?;
        let a = self.func()?;
        self.expect(',')?;
        let b = self.func()?;
        self.expect(')')?;
        Ok((Box::new(a), Box::new(b)))
    }

    fn atom(&mut self) -> Result<FuncExpr> {
        let pos = self.pos();
        if self.is_number() {
            return Ok(FuncExpr::Const(self.unsigned_rat()?));
        }
        if self.eat('(') {
            let f = self.func()?;
            self.expect(')')?;
            return Ok(f);
        }
        let Some(name) = self.ident().map(str::to_owned) else {
            return Err(syntax(pos, format!("expected an expression, found {}", self.describe())));
        };
        self.bump();
        Ok(match name.as_str() {
            "x" => FuncExpr::X,
            "pi" => FuncExpr::Pi,
            "sin" => FuncExpr::Sin(self.call1()?),
            "cos" => FuncExpr::Cos(self.call1()?),
            "sqrt" => FuncExpr::Sqrt(self.call1()?),
            "abs" => FuncExpr::Abs(self.call1()?),
            "min" => {
                let (a, b) = self.call2()?;
                FuncExpr::Min(a, b)
            }
            "max" => {
                let (a, b) = self.call2()?;
                FuncExpr::Max(a, b)
            }
            "indicator" => {
                self.expect('(')?;
                let s = self.set()?;
                self.expect(')')?;
                FuncExpr::Indicator(s)
            }
            "dirichlet" => {
                self.expect('(')?;
                let a = self.signed_rat()?;
                self.expect(',')?;
                let b = self.signed_rat()?;
                self.expect(')')?;
                FuncExpr::Dirichlet(a, b)
            }
            "piecewise" => self.piecewise(pos)?,
            _ => return Err(syntax(pos, format!("unknown identifier '{name}'"))),
        })
    }

    fn piecewise(&mut self, pos: usize) -> Result<FuncExpr> {
        self.expect('{')?;
        let mut branches = Vec::new();
        loop {
            let s = self.set()?;
            self.expect(':')?;
            let f = self.func()?;
            branches.push((s, f));
            if !self.eat(',') {
                break;
            }
        }
        self.expect('}')?;
        let mut seen = crate::exact::IntervalSet::empty();
        for (s, _) in &branches {
            let v = s.eval(&self.ambient).map_err(|e| syntax(pos, e.to_string()))?;
            if !seen.intersect(&v).is_empty() {
                return Err(syntax(pos, format!("piecewise branch '{s}' overlaps an earlier branch")));
            }
            seen = seen.union(&v);
        }
        Ok(FuncExpr::Piecewise(branches))
    }
}

pub fn parse_set(text: &str) -> Result<SetExpr> {
    let mut p = Parser::new(text, Interval::unit())?;
    let s = p.set()?;
    p.finish()?;
    Ok(s)
}

/// Parses a function over `[0, 1]`.
pub fn parse_func(text: &str) -> Result<FuncExpr> {
    parse_func_in(text, &Interval::unit())
}

/// Parses a function whose piecewise branches live in `ambient`.
pub fn parse_func_in(text: &str, ambient: &Interval<Rat>) -> Result<FuncExpr> {
    let mut p = Parser::new(text, ambient.clone())?;
    let f = p.func()?;
    p.finish()?;
    Ok(f)
}

/// Substitutes the integer `n` for every standalone identifier `n` in a template.
pub fn instantiate(template: &str, n: i64) -> String {
    let mut out = String::with_capacity(template.len() + 8);
    let chars: Vec<char> = template.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_alphabetic() || chars[i] == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if word == "n" {
                if n < 0 {
                    out.push_str(&format!("({n})"));
                } else {
                    out.push_str(&n.to_string());
                }
            } else {
                out.push_str(&word);
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{int, rat};

    #[test]
    fn parses_sets() {
        let s = parse_set("[0,1/3] | [2/3,1]").unwrap();
        assert!(matches!(s, SetExpr::Union(..)));
        assert_eq!(super::super::eval_set(&s).unwrap(), crate::exact::cantor_level_rat(1));
        let c = parse_set("~((1/3,2/3))").unwrap();
        assert_eq!(super::super::eval_set(&c).unwrap(), crate::exact::cantor_level_rat(1));
        assert_eq!(
            super::super::eval_set(&parse_set("cantor(2)").unwrap()).unwrap().measure(),
            rat(4, 9)
        );
        assert!(super::super::eval_set(&parse_set("I & empty").unwrap()).unwrap().is_empty());
        let t = parse_set("[0,1/4] + 1/2").unwrap();
        assert_eq!(t.to_string(), "[0,1/4] + 1/2");
    }

    #[test]
    fn parses_functions() {
        assert_eq!(parse_func("dirichlet(0,1)").unwrap(), FuncExpr::Dirichlet(int(0), int(1)));
        assert!(parse_func("x^2 + sin(x)").is_ok());
        match parse_func("x^^2") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_func("foo(x)"), Err(Error::Syntax { pos: 1, .. })));
        assert!(matches!(parse_func("1/0"), Err(Error::Syntax { .. })));
        assert_eq!(parse_func("0.25").unwrap(), FuncExpr::Const(rat(1, 4)));
        assert_eq!(
            parse_func("x^(1/2)").unwrap(),
            FuncExpr::PowRat(Box::new(FuncExpr::X), rat(1, 2))
        );
        assert!(parse_func("piecewise{[0,1/2]: x, [1/2,1]: 1}").is_err());
        assert!(parse_func("piecewise{[0,1/2]: x, (1/2,1]: 1}").is_ok());
    }

    #[test]
    fn template_substitution() {
        assert_eq!(instantiate("n*indicator([1/n,2/n])", 5), "5*indicator([1/5,2/5])");
        assert_eq!(instantiate("min(1/sqrt(x), n)", 8), "min(1/sqrt(x), 8)");
        assert_eq!(instantiate("sin(x)", 3), "sin(x)");
    }
}
