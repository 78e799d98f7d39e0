//! Exact rational helpers: parsing, printing and outward rounding.

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational, always kept in lowest terms.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// `2^e` for any sign of `e`.
pub fn pow2(e: i64) -> Rat {
    if e >= 0 {
        Rat::from_integer(BigInt::one() << (e as usize))
    } else {
        Rat::new(BigInt::one(), BigInt::one() << ((-e) as usize))
    }
}

/// Lower and upper rational bounds on pi, 38 decimals.
pub fn pi_bounds() -> (Rat, Rat) {
    static PI: OnceLock<(Rat, Rat)> = OnceLock::new();
    PI.get_or_init(|| {
        let lo = parse_rat("3.14159265358979323846264338327950288419").unwrap();
        let hi = parse_rat("3.14159265358979323846264338327950288420").unwrap();
        (lo, hi)
    })
    .clone()
}

/// Parses `p`, `p/q`, `-p/q`, decimals (`0.25`) and scientific notation (`1e-6`).
/// Every accepted literal converts exactly.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_decimal(num)?;
        let d = parse_decimal(den)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (whole, frac) = match mantissa.split_once('.') {
        Some((w, f)) => (w, f),
        None => (mantissa, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut q = Rat::from_integer(n);
    if scale >= 0 {
        q *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -q } else { q })
}

/// `p/q`, or `p` for integers.
pub fn format_rat(q: &Rat) -> String {
    q.to_string()
}

/// Serializes a rational as its exact `p/q` string.
pub fn ser_rat<S: serde::Serializer>(q: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rat(q))
}

pub fn to_f64(q: &Rat) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Decimal rendering with `sig` significant digits, in the style of `%g`.
pub fn decimal_string(q: &Rat, sig: usize) -> String {
    format_g(to_f64(q), sig)
}

pub fn format_g(v: f64, sig: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", sig.saturating_sub(1), v);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= sig as i32 {
        let mant = trim_zeros(mant);
        format!("{mant}e{exp}")
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn bits(n: &BigInt) -> u64 {
    n.bits()
}

fn odd_bits(n: &BigInt) -> u64 {
    match n.trailing_zeros() {
        Some(tz) => n.bits() - tz,
        None => 0,
    }
}

/// Size of a rational ignoring powers of two, so dyadic values of any
/// magnitude count as small.
pub fn odd_size(q: &Rat) -> u64 {
    odd_bits(q.numer()) + odd_bits(q.denom())
}

/// Largest `m * 2^e` with at most `prec` mantissa bits that is `<= q`.
pub fn round_down(q: &Rat, prec: u64) -> Rat {
    round_dir(q, prec, false)
}

/// Smallest `m * 2^e` with at most `prec` mantissa bits that is `>= q`.
pub fn round_up(q: &Rat, prec: u64) -> Rat {
    round_dir(q, prec, true)
}

fn round_dir(q: &Rat, prec: u64, up: bool) -> Rat {
    if q.is_zero() {
        return q.clone();
    }
    let n = q.numer();
    let d = q.denom();
    let e = bits(n) as i64 - bits(d) as i64 - prec as i64;
    let (num, den) = if e <= 0 {
        (n << ((-e) as usize), d.clone())
    } else {
        (n.clone(), d << (e as usize))
    };
    let m = if up {
        -((-num).div_floor(&den))
    } else {
        num.div_floor(&den)
    };
    Rat::from_integer(m) * pow2(e)
}

/// Largest power of two `2^-k` (k >= 0 allowed to go negative) with `2^-k <= q`; `q > 0`.
pub fn pow2_floor(q: &Rat) -> Rat {
    assert!(q.is_positive());
    let mut e = bits(q.numer()) as i64 - bits(q.denom()) as i64;
    loop {
        let p = pow2(e);
        if &p <= q {
            return p;
        }
        e -= 1;
    }
}

/// Floor of `sqrt(q)` computed to `prec` fractional bits beyond the magnitude; `q >= 0`.
/// Returns `(lo, hi)` with `lo^2 <= q <= hi^2`.
pub fn sqrt_bounds(q: &Rat, prec: u64) -> (Rat, Rat) {
    nth_root_bounds(q, 2, prec)
}

/// Bounds on the `k`-th root of a nonnegative rational.
pub fn nth_root_bounds(q: &Rat, k: u32, prec: u64) -> (Rat, Rat) {
    assert!(!q.is_negative());
    if q.is_zero() {
        return (Rat::zero(), Rat::zero());
    }
    let n = q.numer();
    let d = q.denom();
    // root(n/d) = root(n * d^(k-1)) / d
    let radicand = n * num_traits::pow(d.clone(), (k - 1) as usize);
    let mag = bits(&radicand) as i64 / k as i64;
    let s = (prec as i64 - mag + bits(d) as i64).max(0) as usize;
    let scaled = radicand << (k as usize * s);
    let r = scaled.nth_root(k);
    let den = d * (BigInt::one() << s);
    let lo = Rat::new(r.clone(), den.clone());
    let exact = num_traits::pow(r.clone(), k as usize) == scaled;
    let hi = if exact { lo.clone() } else { Rat::new(r + 1, den) };
    (lo, hi)
}

pub fn abs(q: &Rat) -> Rat {
    q.abs()
}

pub fn min(a: &Rat, b: &Rat) -> Rat {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn max(a: &Rat, b: &Rat) -> Rat {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn is_integer(q: &Rat) -> bool {
    q.denom().is_one()
}

pub fn sign(q: &Rat) -> Sign {
    q.numer().sign()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(parse_rat("1/3"), Some(rat(1, 3)));
        assert_eq!(parse_rat("-2/4"), Some(rat(-1, 2)));
        assert_eq!(parse_rat("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rat("1e-3"), Some(rat(1, 1000)));
        assert_eq!(parse_rat("2.5e2"), Some(int(250)));
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("abc"), None);
        assert_eq!(parse_rat("."), None);
    }

    #[test]
    fn rounding_brackets_value() {
        let q = rat(1, 3);
        let lo = round_down(&q, 20);
        let hi = round_up(&q, 20);
        assert!(lo < q && q < hi);
        assert!(&hi - &lo <= pow2(-20));
        let neg = -q.clone();
        assert!(round_down(&neg, 20) < neg && neg < round_up(&neg, 20));
        assert_eq!(round_down(&rat(3, 4), 10), rat(3, 4));
    }

    #[test]
    fn roots_bracket() {
        let (lo, hi) = sqrt_bounds(&int(2), 64);
        assert!(&lo * &lo <= int(2) && int(2) <= &hi * &hi);
        assert!(&hi - &lo < pow2(-60));
        assert_eq!(sqrt_bounds(&rat(9, 4), 30), (rat(3, 2), rat(3, 2)));
        let (lo, hi) = nth_root_bounds(&rat(1, 10), 4, 64);
        let four = |x: &Rat| x * x * x * x;
        assert!(four(&lo) <= rat(1, 10) && rat(1, 10) <= four(&hi));
    }

    #[test]
    fn pow2_floor_snaps_down() {
        assert_eq!(pow2_floor(&rat(1, 40)), rat(1, 64));
        assert_eq!(pow2_floor(&rat(1, 64)), rat(1, 64));
        assert_eq!(pow2_floor(&int(3)), int(2));
    }

    #[test]
    fn g_format() {
        assert_eq!(format_g(0.5, 12), "0.5");
        assert_eq!(format_g(2.0 / 3.0, 12), "0.666666666667");
        assert_eq!(format_g(1e-9, 12), "1e-9");
    }
}
