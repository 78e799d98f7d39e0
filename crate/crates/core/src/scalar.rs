//! Scalar types usable as interval endpoints.
//!
//! Two backends implement [`Bound`]: `f64` with exact outward rounding via
//! error-free transformations, and [`ExtRat`], an extended rational that stays
//! exact until operands grow large and then rounds outward to a 128-bit mantissa.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Num, Signed, ToPrimitive, Zero};

use crate::rat::{self, Rat};

/// Ordered field used by the exact set and step-function algebra.
pub trait Field: Num + Clone + PartialOrd + fmt::Debug {
    /// Total order on the values in use; panics on unordered floats.
    fn order(&self, o: &Self) -> Ordering {
        self.partial_cmp(o).expect("unordered scalar")
    }

    /// Sum of `+v` for `true` and `-v` for `false` terms.
    fn signed_sum<'a>(terms: impl Iterator<Item = (&'a Self, bool)>) -> Self
    where
        Self: 'a,
    {
        terms.fold(Self::zero(), |acc, (v, plus)| if plus { acc + v.clone() } else { acc - v.clone() })
    }
}

impl Field for f32 {}
impl Field for f64 {}

macro_rules! machine_ratio {
    ($($t:ty),*) => { $(impl Field for num_rational::Ratio<$t> {})* };
}
machine_ratio!(i32, i64, i128, isize);

impl Field for Rat {
    fn order(&self, o: &Self) -> Ordering {
        let (a, b, c, d) = (self.numer(), self.denom(), o.numer(), o.denom());
        if b == d {
            return if b.is_positive() { a.cmp(c) } else { self.cmp(o) };
        }
        if let (Some(a), Some(b), Some(c), Some(d)) = (a.to_i64(), b.to_i64(), c.to_i64(), d.to_i64()) {
            if b > 0 && d > 0 {
                return (a as i128 * d as i128).cmp(&(c as i128 * b as i128));
            }
        }
        self.cmp(o)
    }

    /// Numerators are accumulated per denominator and the buckets combined
    /// once, avoiding a gcd per term.
    fn signed_sum<'a>(terms: impl Iterator<Item = (&'a Self, bool)>) -> Self {
        let mut buckets: HashMap<BigInt, BigInt> = HashMap::new();
        for (q, plus) in terms {
            if q.is_zero() {
                continue;
            }
            let slot = buckets.entry(q.denom().clone()).or_insert_with(BigInt::zero);
            if plus {
                *slot += q.numer();
            } else {
                *slot -= q.numer();
            }
        }
        buckets.into_iter().fold(Rat::zero(), |acc, (d, n)| acc + Rat::new(n, d))
    }
}

/// Interval endpoint with directed rounding and infinities.
///
/// Every `*_down` result is `<=` the exact value and every `*_up` result is `>=` it.
/// Products use the `0 * inf = 0` convention of interval arithmetic.
pub trait Bound: Clone + PartialOrd + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn pos_inf() -> Self;
    fn neg_inf() -> Self;
    fn is_finite(&self) -> bool;
    fn from_i64(v: i64) -> Self;
    fn from_rat_down(q: &Rat) -> Self;
    fn from_rat_up(q: &Rat) -> Self;
    /// Exact rational value; `None` for infinities.
    fn to_rat(&self) -> Option<Rat>;
    fn to_f64(&self) -> f64;
    fn neg(&self) -> Self;
    fn add_down(&self, o: &Self) -> Self;
    fn add_up(&self, o: &Self) -> Self;
    fn mul_down(&self, o: &Self) -> Self;
    fn mul_up(&self, o: &Self) -> Self;
    /// `o` must be nonzero.
    fn div_down(&self, o: &Self) -> Self;
    fn div_up(&self, o: &Self) -> Self;
    /// Requires `self >= 0`.
    fn sqrt_down(&self) -> Self;
    fn sqrt_up(&self) -> Self;
    /// `k`-th root, requires `self >= 0`.
    fn root_down(&self, k: u32) -> Self;
    fn root_up(&self, k: u32) -> Self;
    /// `(m, e)` with `self = m * 2^e` when the value is a finite dyadic rational.
    fn to_dyadic(&self) -> Option<(BigInt, i64)>;
    /// Lower and upper bounds on pi.
    fn pi_bounds() -> (Self, Self);

    /// `m * 2^e`, rounded down or up.
    fn from_dyadic(m: &BigInt, e: i64, up: bool) -> Self {
        let q = Rat::from_integer(m.clone()) * rat::pow2(e);
        if up {
            Self::from_rat_up(&q)
        } else {
            Self::from_rat_down(&q)
        }
    }

    fn sub_down(&self, o: &Self) -> Self {
        self.add_down(&o.neg())
    }
    fn sub_up(&self, o: &Self) -> Self {
        self.add_up(&o.neg())
    }
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn is_neg(&self) -> bool {
        *self < Self::zero()
    }
    fn is_pos(&self) -> bool {
        *self > Self::zero()
    }
    fn min_of(&self, o: &Self) -> Self {
        if self <= o {
            self.clone()
        } else {
            o.clone()
        }
    }
    fn max_of(&self, o: &Self) -> Self {
        if self >= o {
            self.clone()
        } else {
            o.clone()
        }
    }
    /// `self^k` rounded down, `self >= 0`.
    fn powi_down(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc.mul_down(self);
        }
        acc
    }
    fn powi_up(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc.mul_up(self);
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// f64

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

/// Below this magnitude products and quotients may have lost bits to underflow.
const TINY: f64 = 1e-250;

fn widen(v: f64, err_sign: Ordering, up: bool) -> f64 {
    match (err_sign, up) {
        (Ordering::Equal, _) => v,
        (Ordering::Greater, true) => v.next_up(),
        (Ordering::Greater, false) => v,
        (Ordering::Less, true) => v,
        (Ordering::Less, false) => v.next_down(),
    }
}

fn sign_of(x: f64) -> Ordering {
    x.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

fn overflowed(v: f64, up: bool) -> f64 {
    // v is +-inf produced from finite operands
    if v > 0.0 {
        if up {
            f64::INFINITY
        } else {
            f64::MAX
        }
    } else if up {
        -f64::MAX
    } else {
        f64::NEG_INFINITY
    }
}

fn f64_add(a: f64, b: f64, up: bool) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        let has_neg = a == f64::NEG_INFINITY || b == f64::NEG_INFINITY;
        let has_pos = a == f64::INFINITY || b == f64::INFINITY;
        return match (has_neg, has_pos) {
            (true, true) => {
                if up {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
            (true, false) => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
    }
    let s = a + b;
    if s.is_infinite() {
        return overflowed(s, up);
    }
    widen(s, sign_of(two_sum_err(a, b, s)), up)
}

/// Dekker's error-free product: `a * b = p + e` exactly, barring overflow and underflow.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if a.abs() > 1e290 || b.abs() > 1e290 {
        return (p, a.mul_add(b, -p));
    }
    let split = |x: f64| {
        let c = 134_217_729.0 * x;
        let hi = c - (c - x);
        (hi, x - hi)
    };
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

/// Sign of `a - q * b` for `q * b` close to `a`.
fn residual(a: f64, q: f64, b: f64) -> f64 {
    let (p, e) = two_prod(q, b);
    (a - p) - e
}

/// Numerator and denominator as doubles when both are exactly representable.
fn small_parts(q: &Rat) -> Option<(f64, f64)> {
    const LIMIT: u64 = 53;
    if q.numer().bits() > LIMIT || q.denom().bits() > LIMIT {
        return None;
    }
    Some((q.numer().to_i64()? as f64, q.denom().to_i64()? as f64))
}

fn f64_mul(a: f64, b: f64, up: bool) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    if a.is_infinite() || b.is_infinite() {
        return if (a > 0.0) == (b > 0.0) {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    let p = a * b;
    if p.is_infinite() {
        return overflowed(p, up);
    }
    if p.abs() < TINY {
        return if up { p.next_up() } else { p.next_down() };
    }
    let (_, e) = two_prod(a, b);
    widen(p, sign_of(e), up)
}

fn f64_div(a: f64, b: f64, up: bool) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if b.is_infinite() {
        if a.is_infinite() {
            return if up { f64::INFINITY } else { f64::NEG_INFINITY };
        }
        return 0.0;
    }
    if a.is_infinite() {
        return if (a > 0.0) == (b > 0.0) {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    let q = a / b;
    if q.is_infinite() {
        return overflowed(q, up);
    }
    if q.abs() < TINY || b.abs() < TINY {
        return if up { q.next_up() } else { q.next_down() };
    }
    let r = residual(a, q, b);
    // true quotient = q + r / b
    let dir = if b > 0.0 { sign_of(r) } else { sign_of(r).reverse() };
    widen(q, dir, up)
}

fn f64_sqrt(a: f64, up: bool) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if a.is_infinite() {
        return f64::INFINITY;
    }
    let s = a.sqrt();
    if a < TINY {
        return if up { s.next_up() } else { s.next_down().max(0.0) };
    }
    let r = residual(a, s, s);
    widen(s, sign_of(r), up).max(0.0)
}

impl Bound for f64 {
    fn from_dyadic(m: &BigInt, e: i64, up: bool) -> Self {
        if m.bits() <= 53 && (-960..=960).contains(&e) {
            // both factors and the product are exact doubles
            return m.to_f64().unwrap() * f64::from_bits(((1023 + e) as u64) << 52);
        }
        let q = Rat::from_integer(m.clone()) * rat::pow2(e);
        if up {
            Self::from_rat_up(&q)
        } else {
            Self::from_rat_down(&q)
        }
    }
    fn pi_bounds() -> (Self, Self) {
        // the nearest double lies below pi
        (std::f64::consts::PI, std::f64::consts::PI.next_up())
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn pos_inf() -> Self {
        f64::INFINITY
    }
    fn neg_inf() -> Self {
        f64::NEG_INFINITY
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rat_down(q: &Rat) -> Self {
        if let Some((n, d)) = small_parts(q) {
            return f64_div(n, d, false);
        }
        let mut f = rat::to_f64(q);
        while f.is_finite() && Rat::from_float(f).map_or(false, |r| &r > q) {
            f = f.next_down();
        }
        if f == f64::INFINITY {
            f = f64::MAX;
        }
        f
    }
    fn from_rat_up(q: &Rat) -> Self {
        if let Some((n, d)) = small_parts(q) {
            return f64_div(n, d, true);
        }
        let mut f = rat::to_f64(q);
        while f.is_finite() && Rat::from_float(f).map_or(false, |r| &r < q) {
            f = f.next_up();
        }
        if f == f64::NEG_INFINITY {
            f = -f64::MAX;
        }
        f
    }
    fn to_rat(&self) -> Option<Rat> {
        if self.is_finite() {
            Rat::from_float(*self)
        } else {
            None
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn add_down(&self, o: &Self) -> Self {
        f64_add(*self, *o, false)
    }
    fn add_up(&self, o: &Self) -> Self {
        f64_add(*self, *o, true)
    }
    fn mul_down(&self, o: &Self) -> Self {
        f64_mul(*self, *o, false)
    }
    fn mul_up(&self, o: &Self) -> Self {
        f64_mul(*self, *o, true)
    }
    fn div_down(&self, o: &Self) -> Self {
        f64_div(*self, *o, false)
    }
    fn div_up(&self, o: &Self) -> Self {
        f64_div(*self, *o, true)
    }
    fn sqrt_down(&self) -> Self {
        f64_sqrt(*self, false)
    }
    fn sqrt_up(&self) -> Self {
        f64_sqrt(*self, true)
    }
    fn root_down(&self, k: u32) -> Self {
        let a = *self;
        if a <= 0.0 || a.is_infinite() || k == 1 {
            return a.max(0.0);
        }
        let mut r = a.powf(1.0 / k as f64);
        while r > 0.0 && r.powi_up(k) > a {
            r = r.next_down();
        }
        r
    }
    fn root_up(&self, k: u32) -> Self {
        let a = *self;
        if a <= 0.0 || a.is_infinite() || k == 1 {
            return a.max(0.0);
        }
        let mut r = a.powf(1.0 / k as f64);
        while r.powi_down(k) < a {
            r = r.next_up();
        }
        r
    }
    fn to_dyadic(&self) -> Option<(BigInt, i64)> {
        if !self.is_finite() {
            return None;
        }
        if *self == 0.0 {
            return Some((BigInt::from(0), 0));
        }
        let bits = self.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(m);
        Some((if *self < 0.0 { -m } else { m }, e))
    }
}

// ---------------------------------------------------------------------------
// ExtRat

/// Extended rational: exact arithmetic, rounded outward only when the
/// non-dyadic part of a value exceeds [`ExtRat::SIZE_LIMIT`] bits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtRat {
    NegInf,
    Fin(Rat),
    PosInf,
}

impl fmt::Debug for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::NegInf => write!(f, "-inf"),
            ExtRat::Fin(q) => write!(f, "{q}"),
            ExtRat::PosInf => write!(f, "+inf"),
        }
    }
}

impl ExtRat {
    pub const PRECISION: u64 = 128;
    pub const SIZE_LIMIT: u64 = 256;

    pub fn fin(q: Rat) -> Self {
        ExtRat::Fin(q)
    }

    fn norm(q: Rat, up: bool) -> Self {
        if rat::odd_size(&q) > Self::SIZE_LIMIT {
            let r = if up {
                rat::round_up(&q, Self::PRECISION)
            } else {
                rat::round_down(&q, Self::PRECISION)
            };
            ExtRat::Fin(r)
        } else {
            ExtRat::Fin(q)
        }
    }

    fn inf_sign(&self) -> i8 {
        match self {
            ExtRat::NegInf => -1,
            ExtRat::PosInf => 1,
            ExtRat::Fin(_) => 0,
        }
    }

    fn signum(&self) -> i8 {
        match self {
            ExtRat::NegInf => -1,
            ExtRat::PosInf => 1,
            ExtRat::Fin(q) => {
                if q.is_positive() {
                    1
                } else if q.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    fn inf_with_sign(s: i8) -> Self {
        if s >= 0 {
            ExtRat::PosInf
        } else {
            ExtRat::NegInf
        }
    }

    fn add(&self, o: &Self, up: bool) -> Self {
        match (self, o) {
            (ExtRat::Fin(a), ExtRat::Fin(b)) => Self::norm(a + b, up),
            _ => {
                let s = self.inf_sign();
                let t = o.inf_sign();
                if s != 0 && t != 0 && s != t {
                    if up {
                        ExtRat::PosInf
                    } else {
                        ExtRat::NegInf
                    }
                } else {
                    Self::inf_with_sign(if s != 0 { s } else { t })
                }
            }
        }
    }

    fn mul(&self, o: &Self, up: bool) -> Self {
        let s = self.signum() * o.signum();
        if s == 0 {
            return ExtRat::Fin(Rat::zero());
        }
        match (self, o) {
            (ExtRat::Fin(a), ExtRat::Fin(b)) => Self::norm(a * b, up),
            _ => Self::inf_with_sign(s),
        }
    }

    fn div(&self, o: &Self, up: bool) -> Self {
        if self.signum() == 0 {
            return ExtRat::Fin(Rat::zero());
        }
        match (self, o) {
            (ExtRat::Fin(a), ExtRat::Fin(b)) => Self::norm(a / b, up),
            (ExtRat::Fin(_), _) => ExtRat::Fin(Rat::zero()),
            (_, ExtRat::Fin(_)) => Self::inf_with_sign(self.signum() * o.signum()),
            _ => {
                if up {
                    ExtRat::PosInf
                } else {
                    ExtRat::NegInf
                }
            }
        }
    }

    fn root(&self, k: u32, up: bool) -> Self {
        match self {
            ExtRat::PosInf => ExtRat::PosInf,
            ExtRat::NegInf => ExtRat::Fin(Rat::zero()),
            ExtRat::Fin(q) => {
                if !q.is_positive() {
                    return ExtRat::Fin(Rat::zero());
                }
                let (lo, hi) = rat::nth_root_bounds(q, k, Self::PRECISION + 8);
                Self::norm(if up { hi } else { lo }, up)
            }
        }
    }
}

impl Bound for ExtRat {
    fn pi_bounds() -> (Self, Self) {
        let (lo, hi) = rat::pi_bounds();
        (ExtRat::Fin(lo), ExtRat::Fin(hi))
    }
    fn zero() -> Self {
        ExtRat::Fin(Rat::zero())
    }
    fn one() -> Self {
        ExtRat::Fin(rat::int(1))
    }
    fn pos_inf() -> Self {
        ExtRat::PosInf
    }
    fn neg_inf() -> Self {
        ExtRat::NegInf
    }
    fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Fin(_))
    }
    fn from_i64(v: i64) -> Self {
        ExtRat::Fin(Rat::from_integer(BigInt::from(v)))
    }
    fn from_rat_down(q: &Rat) -> Self {
        Self::norm(q.clone(), false)
    }
    fn from_rat_up(q: &Rat) -> Self {
        Self::norm(q.clone(), true)
    }
    fn to_rat(&self) -> Option<Rat> {
        match self {
            ExtRat::Fin(q) => Some(q.clone()),
            _ => None,
        }
    }
    fn to_f64(&self) -> f64 {
        match self {
            ExtRat::NegInf => f64::NEG_INFINITY,
            ExtRat::PosInf => f64::INFINITY,
            ExtRat::Fin(q) => rat::to_f64(q),
        }
    }
    fn neg(&self) -> Self {
        match self {
            ExtRat::NegInf => ExtRat::PosInf,
            ExtRat::PosInf => ExtRat::NegInf,
            ExtRat::Fin(q) => ExtRat::Fin(-q),
        }
    }
    fn add_down(&self, o: &Self) -> Self {
        self.add(o, false)
    }
    fn add_up(&self, o: &Self) -> Self {
        self.add(o, true)
    }
    fn mul_down(&self, o: &Self) -> Self {
        self.mul(o, false)
    }
    fn mul_up(&self, o: &Self) -> Self {
        self.mul(o, true)
    }
    fn div_down(&self, o: &Self) -> Self {
        self.div(o, false)
    }
    fn div_up(&self, o: &Self) -> Self {
        self.div(o, true)
    }
    fn sqrt_down(&self) -> Self {
        self.root(2, false)
    }
    fn sqrt_up(&self) -> Self {
        self.root(2, true)
    }
    fn root_down(&self, k: u32) -> Self {
        self.root(k, false)
    }
    fn root_up(&self, k: u32) -> Self {
        self.root(k, true)
    }
    fn to_dyadic(&self) -> Option<(BigInt, i64)> {
        let q = self.to_rat()?;
        let d = q.denom();
        let tz = d.trailing_zeros().unwrap_or(0);
        if d.bits() == tz + 1 {
            Some((q.numer().clone(), -(tz as i64)))
        } else {
            None
        }
    }
}
