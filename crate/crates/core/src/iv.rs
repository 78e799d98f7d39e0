//! Closed interval arithmetic over a [`Bound`] backend.
//!
//! Every operation returns an enclosure of the exact image of its arguments.
//! Endpoints may be infinite; an interval is never empty.

use crate::rat::Rat;
use crate::scalar::Bound;

#[derive(Clone, Debug, PartialEq)]
pub struct Iv<B> {
    pub lo: B,
    pub hi: B,
}

/// Raised when an operation is undefined on its entire argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Undefined;

impl<B: Bound> Iv<B> {
    pub fn new(lo: B, hi: B) -> Self {
        debug_assert!(lo <= hi, "inverted interval {lo:?} > {hi:?}");
        Iv { lo, hi }
    }

    pub fn point(v: B) -> Self {
        Iv { lo: v.clone(), hi: v }
    }

    pub fn zero() -> Self {
        Self::point(B::zero())
    }

    pub fn one() -> Self {
        Self::point(B::one())
    }

    pub fn entire() -> Self {
        Iv { lo: B::neg_inf(), hi: B::pos_inf() }
    }

    pub fn int(v: i64) -> Self {
        Self::point(B::from_i64(v))
    }

    pub fn from_rat(q: &Rat) -> Self {
        Iv { lo: B::from_rat_down(q), hi: B::from_rat_up(q) }
    }

    pub fn from_rats(lo: &Rat, hi: &Rat) -> Self {
        Iv { lo: B::from_rat_down(lo), hi: B::from_rat_up(hi) }
    }

    pub fn pi() -> Self {
        let (lo, hi) = B::pi_bounds();
        Iv { lo, hi }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: &B) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&B::zero())
    }

    pub fn subset_of(&self, o: &Self) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }

    pub fn width_f64(&self) -> f64 {
        let w = self.hi.to_f64() - self.lo.to_f64();
        if w.is_nan() {
            f64::INFINITY
        } else {
            w.max(0.0)
        }
    }

    /// Upper bound on `hi - lo`.
    pub fn width_up(&self) -> B {
        self.hi.sub_up(&self.lo)
    }

    /// Largest absolute value.
    pub fn mag(&self) -> B {
        self.lo.neg().max_of(&self.hi)
    }

    /// Smallest absolute value.
    pub fn mig(&self) -> B {
        if self.contains_zero() {
            B::zero()
        } else if self.lo.is_pos() {
            self.lo.clone()
        } else {
            self.hi.neg()
        }
    }

    pub fn hull(&self, o: &Self) -> Self {
        Iv { lo: self.lo.min_of(&o.lo), hi: self.hi.max_of(&o.hi) }
    }

    pub fn intersect(&self, o: &Self) -> Option<Self> {
        let lo = self.lo.max_of(&o.lo);
        let hi = self.hi.min_of(&o.hi);
        if lo <= hi {
            Some(Iv { lo, hi })
        } else {
            None
        }
    }

    /// Intersection, falling back to `self` when rounding made them disjoint.
    pub fn tighten(&self, o: &Self) -> Self {
        self.intersect(o).unwrap_or_else(|| self.clone())
    }

    pub fn neg(&self) -> Self {
        Iv { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    pub fn add(&self, o: &Self) -> Self {
        Iv { lo: self.lo.add_down(&o.lo), hi: self.hi.add_up(&o.hi) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Iv { lo: self.lo.sub_down(&o.hi), hi: self.hi.sub_up(&o.lo) }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (a, b, c, d) = (&self.lo, &self.hi, &o.lo, &o.hi);
        let z = B::zero();
        let (lo, hi) = if *a >= z && *c >= z {
            (a.mul_down(c), b.mul_up(d))
        } else if *b <= z && *d <= z {
            (b.mul_down(d), a.mul_up(c))
        } else if *a >= z && *d <= z {
            (b.mul_down(c), a.mul_up(d))
        } else if *b <= z && *c >= z {
            (a.mul_down(d), b.mul_up(c))
        } else if *a >= z {
            (b.mul_down(c), b.mul_up(d))
        } else if *b <= z {
            (a.mul_down(d), a.mul_up(c))
        } else if *c >= z {
            (a.mul_down(d), b.mul_up(d))
        } else if *d <= z {
            (b.mul_down(c), a.mul_up(c))
        } else {
            (
                a.mul_down(d).min_of(&b.mul_down(c)),
                a.mul_up(c).max_of(&b.mul_up(d)),
            )
        };
        Iv { lo, hi }
    }

    pub fn scale_int(&self, k: i64) -> Self {
        self.mul(&Self::int(k))
    }

    pub fn div_int(&self, k: i64) -> Self {
        let d = B::from_i64(k);
        if k > 0 {
            Iv { lo: self.lo.div_down(&d), hi: self.hi.div_up(&d) }
        } else {
            Iv { lo: self.hi.div_down(&d), hi: self.lo.div_up(&d) }
        }
    }

    /// Extended division: a divisor touching zero yields half-lines or the
    /// whole line, with `c/0 = +-inf` by the sign of `c`.
    pub fn div(&self, o: &Self) -> Result<Self, Undefined> {
        let zero = B::zero();
        if o.lo.is_pos() || o.hi.is_neg() {
            let (a, b, c, d) = (&self.lo, &self.hi, &o.lo, &o.hi);
            let lo = a
                .div_down(c)
                .min_of(&a.div_down(d))
                .min_of(&b.div_down(c))
                .min_of(&b.div_down(d));
            let hi = a
                .div_up(c)
                .max_of(&a.div_up(d))
                .max_of(&b.div_up(c))
                .max_of(&b.div_up(d));
            return Ok(Iv { lo, hi });
        }
        if o.lo == zero && o.hi == zero {
            if self.lo.is_pos() {
                return Ok(Self::point(B::pos_inf()));
            }
            if self.hi.is_neg() {
                return Ok(Self::point(B::neg_inf()));
            }
            if self.lo == zero && self.hi == zero {
                return Err(Undefined);
            }
            return Ok(Self::entire());
        }
        if o.lo == zero {
            // divisor in [0, d], d > 0
            if self.lo >= zero {
                return Ok(Iv { lo: self.lo.div_down(&o.hi), hi: B::pos_inf() });
            }
            if self.hi <= zero {
                return Ok(Iv { lo: B::neg_inf(), hi: self.hi.div_up(&o.hi) });
            }
            return Ok(Self::entire());
        }
        if o.hi == zero {
            // divisor in [c, 0], c < 0
            if self.lo >= zero {
                return Ok(Iv { lo: B::neg_inf(), hi: self.lo.div_up(&o.lo) });
            }
            if self.hi <= zero {
                return Ok(Iv { lo: self.hi.div_down(&o.lo), hi: B::pos_inf() });
            }
            return Ok(Self::entire());
        }
        Ok(Self::entire())
    }

    pub fn abs(&self) -> Self {
        if self.lo >= B::zero() {
            self.clone()
        } else if self.hi <= B::zero() {
            self.neg()
        } else {
            Iv { lo: B::zero(), hi: self.mag() }
        }
    }

    pub fn min(&self, o: &Self) -> Self {
        Iv { lo: self.lo.min_of(&o.lo), hi: self.hi.min_of(&o.hi) }
    }

    pub fn max(&self, o: &Self) -> Self {
        Iv { lo: self.lo.max_of(&o.lo), hi: self.hi.max_of(&o.hi) }
    }

    /// Nonnegative integer power with the exact even-power shape.
    pub fn powu(&self, k: u32) -> Self {
        if k == 0 {
            return Self::one();
        }
        if k % 2 == 0 {
            let mig = self.mig();
            let mag = self.mag();
            Iv { lo: mig.powi_down(k), hi: mag.powi_up(k) }
        } else {
            Iv { lo: signed_pow(&self.lo, k, false), hi: signed_pow(&self.hi, k, true) }
        }
    }

    pub fn powi(&self, k: i64) -> Result<Self, Undefined> {
        if k >= 0 {
            Ok(self.powu(k as u32))
        } else {
            Self::one().div(&self.powu((-k) as u32))
        }
    }

    /// Restriction to the nonnegative half-line, or `Undefined` if disjoint from it.
    pub fn nonneg_part(&self) -> Result<Self, Undefined> {
        if self.hi.is_neg() {
            return Err(Undefined);
        }
        Ok(Iv { lo: self.lo.max_of(&B::zero()), hi: self.hi.clone() })
    }

    pub fn sqrt(&self) -> Result<Self, Undefined> {
        let a = self.nonneg_part()?;
        Ok(Iv { lo: a.lo.sqrt_down(), hi: a.hi.sqrt_up() })
    }

    /// `x^(num/den)` on the nonnegative part of `self`, `den > 1`.
    pub fn pow_rat(&self, num: i64, den: u32) -> Result<Self, Undefined> {
        let a = self.nonneg_part()?;
        let root = Iv { lo: a.lo.root_down(den), hi: a.hi.root_up(den) };
        root.powi(num)
    }

    pub fn sin(&self) -> Self {
        sin_range(self, false)
    }

    pub fn cos(&self) -> Self {
        sin_range(self, true)
    }

    pub fn midpoint(&self) -> B {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            if self.lo.is_finite() {
                return self.lo.clone();
            }
            if self.hi.is_finite() {
                return self.hi.clone();
            }
            return B::zero();
        }
        self.lo.add_down(&self.hi).div_down(&B::from_i64(2))
    }

    pub fn to_rats(&self) -> Option<(Rat, Rat)> {
        Some((self.lo.to_rat()?, self.hi.to_rat()?))
    }
}

fn signed_pow<B: Bound>(x: &B, k: u32, up: bool) -> B {
    if x.is_neg() {
        let m = x.neg();
        if up {
            m.powi_down(k).neg()
        } else {
            m.powi_up(k).neg()
        }
    } else if up {
        x.powi_up(k)
    } else {
        x.powi_down(k)
    }
}

/// Beyond this magnitude argument reduction is not attempted.
const TRIG_REDUCE_LIMIT: f64 = 1e12;

/// Range of `sin` (or `cos` when `shift`) over an interval.
fn sin_range<B: Bound>(x: &Iv<B>, shift: bool) -> Iv<B> {
    let unit = Iv { lo: B::from_i64(-1), hi: B::one() };
    if !x.is_finite() {
        return unit;
    }
    let lo_f = x.lo.to_f64();
    let hi_f = x.hi.to_f64();
    if lo_f.abs() > TRIG_REDUCE_LIMIT || hi_f.abs() > TRIG_REDUCE_LIMIT || hi_f - lo_f > 6.5 {
        return unit;
    }
    let pi = Iv::<B>::pi();
    if x.lo == x.hi {
        return sin_point(x, shift, &pi).intersect(&unit).unwrap_or(unit);
    }
    let at = |v: &B| sin_point(&Iv::point(v.clone()), shift, &pi);
    let mut out = at(&x.lo).hull(&at(&x.hi));
    // extrema: sin peaks at pi/2 + 2k pi, troughs at 3pi/2 + 2k pi; cos shifted by -pi/2
    let base = if shift { 0.0 } else { 0.5 };
    let k_lo = ((lo_f / std::f64::consts::PI) - base).floor() as i64 - 1;
    let k_hi = ((hi_f / std::f64::consts::PI) - base).ceil() as i64 + 1;
    for k in k_lo..=k_hi {
        // critical point (k + base) * pi; a maximum when k is even
        let c = if shift { pi.scale_int(k) } else { pi.scale_int(2 * k + 1).div_int(2) };
        if c.hi < x.lo || c.lo > x.hi {
            continue;
        }
        if k.rem_euclid(2) == 0 {
            out.hi = B::one();
        } else {
            out.lo = B::from_i64(-1);
        }
    }
    out.intersect(&unit).unwrap_or(unit)
}

/// Enclosure of `sin(t)` (or `cos(t)`) for a thin interval `t`.
fn sin_point<B: Bound>(t: &Iv<B>, cos: bool, pi: &Iv<B>) -> Iv<B> {
    let mut r = if cos { t.add(&pi.div_int(2)) } else { t.clone() };
    // reduce to roughly [-pi, pi]
    let k = (r.midpoint().to_f64() / (2.0 * std::f64::consts::PI)).round() as i64;
    if k != 0 {
        r = r.sub(&pi.scale_int(2 * k));
    }
    // fold into [-pi/2, pi/2] using sin(pi - r) = sin(r)
    let m = r.midpoint().to_f64();
    if m > std::f64::consts::FRAC_PI_2 {
        r = pi.sub(&r);
    } else if m < -std::f64::consts::FRAC_PI_2 {
        r = pi.neg().sub(&r);
    }
    sin_taylor(&r)
}

/// Taylor series of `sin` on a narrow interval with `|r| <= ~1.6`, with Lagrange remainder.
fn sin_taylor<B: Bound>(r: &Iv<B>) -> Iv<B> {
    const TERMS: i64 = 13;
    let r2 = r.powu(2);
    let mut term = r.clone();
    let mut sum = r.clone();
    for j in 0..TERMS {
        let d = (2 * j + 2) * (2 * j + 3);
        term = term.mul(&r2).div_int(d).neg();
        sum = sum.add(&term);
    }
    // Lagrange bound via the first omitted term
    let d = (2 * TERMS + 2) * (2 * TERMS + 3);
    let bound = term.mag().mul_up(&r2.mag()).div_up(&B::from_i64(d));
    let rem = Iv { lo: bound.neg(), hi: bound };
    sum.add(&rem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{self, rat};
    use crate::scalar::ExtRat;

    fn q(v: f64) -> Rat {
        Rat::from_float(v).unwrap()
    }

    #[test]
    fn sin_encloses_libm_on_grid() {
        for i in -400..=400 {
            let x = i as f64 * 0.0371;
            let s = Iv::point(x).sin();
            let c = Iv::point(x).cos();
            assert!(s.lo <= x.sin() + 1e-15 && x.sin() - 1e-15 <= s.hi, "sin {x}");
            assert!(c.lo <= x.cos() + 1e-15 && x.cos() - 1e-15 <= c.hi, "cos {x}");
            assert!(s.width_f64() < 1e-14, "width at {x}: {}", s.width_f64());
        }
    }

    #[test]
    fn sin_range_catches_extrema() {
        let r = Iv::new(1.0f64, 2.0).sin();
        assert_eq!(r.hi, 1.0);
        assert!(r.lo <= 1.0f64.sin());
        let r = Iv::new(3.0f64, 3.3).cos();
        assert_eq!(r.lo, -1.0);
        let r = Iv::new(0.0f64, 1.0).sin();
        assert_eq!(r.lo, 0.0);
        assert!((r.hi - 1.0f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn extrat_sin_is_tight() {
        let s = Iv::<ExtRat>::from_rat(&rat(1, 1)).sin();
        let (lo, hi) = s.to_rats().unwrap();
        let w = rat::to_f64(&(&hi - &lo));
        assert!(w < 1e-30, "width {w}");
        let m = rat::to_f64(&lo);
        assert!((m - 1.0f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn division_extended() {
        let one = Iv::<f64>::one();
        let r = one.div(&Iv::new(0.0, 4.0)).unwrap();
        assert_eq!(r, Iv::new(0.25, f64::INFINITY));
        assert_eq!(one.div(&Iv::zero()).unwrap(), Iv::point(f64::INFINITY));
        assert!(Iv::<f64>::zero().div(&Iv::zero()).is_err());
        assert_eq!(one.div(&Iv::new(-1.0, 1.0)).unwrap(), Iv::entire());
    }

    #[test]
    fn even_power_shape() {
        let r = Iv::new(-1.0f64, 2.0).powu(2);
        assert_eq!(r, Iv::new(0.0, 4.0));
        let r = Iv::new(-2.0f64, -1.0).powu(3);
        assert_eq!(r, Iv::new(-8.0, -1.0));
    }

    #[test]
    fn rational_power_encloses() {
        let r = Iv::from_rat(&q(0.5)).pow_rat(-1, 2).unwrap();
        let v = 0.5f64.powf(-0.5);
        assert!(r.lo <= v && v <= r.hi);
        let z = Iv::<f64>::new(0.0, 1.0).pow_rat(-1, 2).unwrap();
        assert_eq!(z.hi, f64::INFINITY);
        assert_eq!(z.lo, 1.0);
    }
}
