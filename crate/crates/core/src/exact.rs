//! Finite unions of intervals with exact Lebesgue measure.
//!
//! Sets are kept in a canonical form: components sorted, pairwise disjoint and
//! never mergeable. Open and closed endpoints are tracked exactly so that
//! complements and differences have correct pointwise semantics, even though
//! endpoints never change a measure.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};

use crate::error::{Error, Result};
use crate::rat::{self, Rat};
use crate::scalar::Field;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

fn cmp<T: Field>(a: &T, b: &T) -> Ordering {
    a.order(b)
}

fn two<T: Field>() -> T {
    T::one() + T::one()
}

impl<T: Field> Interval<T> {
    /// `None` when the described interval is empty.
    pub fn new(lo: T, hi: T, lo_closed: bool, hi_closed: bool) -> Option<Self> {
        match cmp(&lo, &hi) {
            Ordering::Greater => None,
            Ordering::Equal if !(lo_closed && hi_closed) => None,
            _ => Some(Interval { lo, hi, lo_closed, hi_closed }),
        }
    }

    pub fn closed(lo: T, hi: T) -> Self {
        Self::new(lo, hi, true, true).expect("closed interval with lo > hi")
    }

    pub fn open(lo: T, hi: T) -> Self {
        Self::new(lo, hi, false, false).expect("open interval must have lo < hi")
    }

    pub fn point(v: T) -> Self {
        Interval { lo: v.clone(), hi: v, lo_closed: true, hi_closed: true }
    }

    pub fn unit() -> Self {
        Self::closed(T::zero(), T::one())
    }

    /// The closed interval `[-1, 1]`.
    pub fn symmetric() -> Self {
        Self::closed(T::zero() - T::one(), T::one())
    }

    pub fn length(&self) -> T {
        self.hi.clone() - self.lo.clone()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &T) -> bool {
        let above = match cmp(x, &self.lo) {
            Ordering::Greater => true,
            Ordering::Equal => self.lo_closed,
            Ordering::Less => false,
        };
        let below = match cmp(x, &self.hi) {
            Ordering::Less => true,
            Ordering::Equal => self.hi_closed,
            Ordering::Greater => false,
        };
        above && below
    }

    pub fn intersect(&self, o: &Self) -> Option<Self> {
        let (lo, lo_closed) = match cmp(&self.lo, &o.lo) {
            Ordering::Greater => (self.lo.clone(), self.lo_closed),
            Ordering::Less => (o.lo.clone(), o.lo_closed),
            Ordering::Equal => (self.lo.clone(), self.lo_closed && o.lo_closed),
        };
        let (hi, hi_closed) = match cmp(&self.hi, &o.hi) {
            Ordering::Less => (self.hi.clone(), self.hi_closed),
            Ordering::Greater => (o.hi.clone(), o.hi_closed),
            Ordering::Equal => (self.hi.clone(), self.hi_closed && o.hi_closed),
        };
        Self::new(lo, hi, lo_closed, hi_closed)
    }

    pub fn subset_of(&self, o: &Self) -> bool {
        let lo_ok = match cmp(&self.lo, &o.lo) {
            Ordering::Greater => true,
            Ordering::Equal => o.lo_closed || !self.lo_closed,
            Ordering::Less => false,
        };
        let hi_ok = match cmp(&self.hi, &o.hi) {
            Ordering::Less => true,
            Ordering::Equal => o.hi_closed || !self.hi_closed,
            Ordering::Greater => false,
        };
        lo_ok && hi_ok
    }

    pub fn translate(&self, c: &T) -> Self {
        Interval {
            lo: self.lo.clone() + c.clone(),
            hi: self.hi.clone() + c.clone(),
            lo_closed: self.lo_closed,
            hi_closed: self.hi_closed,
        }
    }

    /// The same endpoints with both ends open; `None` for a point.
    pub fn interior(&self) -> Option<Self> {
        Self::new(self.lo.clone(), self.hi.clone(), false, false)
    }

    fn closure(&self) -> Self {
        Self::closed(self.lo.clone(), self.hi.clone())
    }
}

impl<T: fmt::Display> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{},{}{r}", self.lo, self.hi)
    }
}

/// Canonical finite union of intervals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalSet<T> {
    comps: Vec<Interval<T>>,
}

impl<T: Field> Default for IntervalSet<T> {
    fn default() -> Self {
        Self::empty()
    }
}

/// Sorts and merges intervals without any ambient check.
fn merge<T: Field>(mut raw: Vec<Interval<T>>) -> Vec<Interval<T>> {
    raw.sort_by(|a, b| cmp(&a.lo, &b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
    let mut out: Vec<Interval<T>> = Vec::with_capacity(raw.len());
    for iv in raw {
        if let Some(cur) = out.last_mut() {
            let joins = match cmp(&iv.lo, &cur.hi) {
                Ordering::Less => true,
                Ordering::Equal => cur.hi_closed || iv.lo_closed,
                Ordering::Greater => false,
            };
            if joins {
                match cmp(&iv.hi, &cur.hi) {
                    Ordering::Greater => {
                        cur.hi = iv.hi;
                        cur.hi_closed = iv.hi_closed;
                    }
                    Ordering::Equal => cur.hi_closed |= iv.hi_closed,
                    Ordering::Less => {}
                }
                continue;
            }
        }
        out.push(iv);
    }
    out
}

impl<T: Field> IntervalSet<T> {
    pub fn empty() -> Self {
        IntervalSet { comps: Vec::new() }
    }

    pub fn from_interval(iv: Interval<T>) -> Self {
        IntervalSet { comps: vec![iv] }
    }

    /// Canonical form of an arbitrary list of intervals.
    pub fn normalize(raw: Vec<Interval<T>>) -> Self {
        IntervalSet { comps: merge(raw) }
    }

    /// Canonical form, rejecting endpoints outside `ambient`.
    pub fn canonicalize(raw: Vec<Interval<T>>, ambient: &Interval<T>) -> Result<Self> {
        for iv in &raw {
            if iv.lo < ambient.lo || iv.hi > ambient.hi {
                return Err(Error::Domain(format!(
                    "interval endpoints [{:?}, {:?}] leave the ambient interval",
                    iv.lo, iv.hi
                )));
            }
        }
        Ok(Self::normalize(raw))
    }

    pub fn components(&self) -> &[Interval<T>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Interval<T>> {
        self.comps
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn measure(&self) -> T {
        T::signed_sum(self.comps.iter().flat_map(|c| [(&c.hi, true), (&c.lo, false)]))
    }

    pub fn contains(&self, x: &T) -> bool {
        let i = self.comps.partition_point(|c| c.hi < *x);
        self.comps.get(i).is_some_and(|c| c.contains(x))
            || (i > 0 && self.comps[i - 1].contains(x))
    }

    pub fn union(&self, o: &Self) -> Self {
        let mut raw = self.comps.clone();
        raw.extend(o.comps.iter().cloned());
        Self::normalize(raw)
    }

    pub fn intersect(&self, o: &Self) -> Self {
        let (a, b) = (&self.comps, &o.comps);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(iv) = a[i].intersect(&b[j]) {
                out.push(iv);
            }
            let ends = cmp(&a[i].hi, &b[j].hi).then(a[i].hi_closed.cmp(&b[j].hi_closed));
            match ends {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        Self::normalize(out)
    }

    /// Complement relative to the closed interval `ambient`.
    pub fn complement(&self, ambient: &Interval<T>) -> Self {
        let mut out = Vec::with_capacity(self.comps.len() + 1);
        let mut lo = ambient.lo.clone();
        let mut lo_closed = ambient.lo_closed;
        for c in &self.comps {
            if let Some(gap) = Interval::new(lo, c.lo.clone(), lo_closed, !c.lo_closed) {
                out.push(gap);
            }
            lo = c.hi.clone();
            lo_closed = !c.hi_closed;
        }
        if let Some(gap) = Interval::new(lo, ambient.hi.clone(), lo_closed, ambient.hi_closed) {
            out.push(gap);
        }
        Self::normalize(out)
    }

    pub fn difference(&self, o: &Self) -> Self {
        match self.hull() {
            None => Self::empty(),
            Some(h) => {
                let ambient = match o.hull() {
                    Some(g) => Interval::closed(
                        if g.lo < h.lo { g.lo } else { h.lo },
                        if g.hi > h.hi { g.hi } else { h.hi },
                    ),
                    None => return self.clone(),
                };
                self.intersect(&o.complement(&ambient))
            }
        }
    }

    pub fn is_subset(&self, o: &Self) -> bool {
        let mut j = 0;
        for c in &self.comps {
            while j < o.comps.len() {
                let reaches = match cmp(&o.comps[j].hi, &c.lo) {
                    Ordering::Greater => true,
                    Ordering::Equal => o.comps[j].hi_closed && c.lo_closed,
                    Ordering::Less => false,
                };
                if reaches {
                    break;
                }
                j += 1;
            }
            if j == o.comps.len() || !c.subset_of(&o.comps[j]) {
                return false;
            }
        }
        true
    }

    /// Closed interval spanning all components.
    pub fn hull(&self) -> Option<Interval<T>> {
        let first = self.comps.first()?;
        let last = self.comps.last()?;
        Some(Interval::closed(first.lo.clone(), last.hi.clone()))
    }

    pub fn translate(&self, c: &T, ambient: &Interval<T>) -> Result<Self> {
        let raw = self.comps.iter().map(|iv| iv.translate(c)).collect();
        Self::canonicalize(raw, ambient)
    }

    /// Every component endpoint, in order, without duplicates.
    pub fn endpoints(&self) -> Vec<T> {
        let mut out: Vec<T> = Vec::with_capacity(2 * self.comps.len());
        for c in &self.comps {
            for v in [&c.lo, &c.hi] {
                if out.last() != Some(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    /// The closure of every component, merged.
    pub fn closure(&self) -> Self {
        Self::normalize(self.comps.iter().map(|c| c.closure()).collect())
    }
}

impl<T: Field + fmt::Display> fmt::Display for IntervalSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.comps.is_empty() {
            return write!(f, "empty");
        }
        for (i, c) in self.comps.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Serialize for Interval<Rat> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("lo", &rat::format_rat(&self.lo))?;
        m.serialize_entry("hi", &rat::format_rat(&self.hi))?;
        m.serialize_entry("lo_closed", &self.lo_closed)?;
        m.serialize_entry("hi_closed", &self.hi_closed)?;
        m.end()
    }
}

impl Serialize for IntervalSet<Rat> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.comps.len()))?;
        for c in &self.comps {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

/// `J_n`: the `2^n` closed intervals of length `3^-n` left after `n` rounds of
/// middle-third deletion from `[0, 1]`.
pub fn cantor_level<T: Field>(n: u32) -> IntervalSet<T> {
    let three = two::<T>() + T::one();
    let mut comps = vec![Interval::closed(T::zero(), T::one())];
    for _ in 0..n {
        let mut next = Vec::with_capacity(comps.len() * 2);
        for c in comps {
            let third = (c.hi.clone() - c.lo.clone()) / three.clone();
            next.push(Interval::closed(c.lo.clone(), c.lo.clone() + third.clone()));
            next.push(Interval::closed(c.hi.clone() - third, c.hi));
        }
        comps = next;
    }
    IntervalSet { comps }
}

/// Rational specialization of [`cantor_level`] that builds endpoints directly
/// from base-3 digit strings.
pub fn cantor_level_rat(n: u32) -> IntervalSet<Rat> {
    if n > 40 {
        return cantor_level(n);
    }
    let den = 3u64.pow(n);
    let reduce = |mut k: u64| -> Rat {
        let mut d = den;
        if k == 0 {
            return Rat::zero();
        }
        while d > 1 && k % 3 == 0 {
            k /= 3;
            d /= 3;
        }
        Rat::new_raw(BigInt::from(k), BigInt::from(d))
    };
    let mut comps = Vec::with_capacity(1usize << n);
    for i in 0u64..(1u64 << n) {
        let mut k = 0u64;
        for bit in (0..n).rev() {
            k = k * 3 + if (i >> bit) & 1 == 1 { 2 } else { 0 };
        }
        comps.push(Interval { lo: reduce(k), hi: reduce(k + 1), lo_closed: true, hi_closed: true });
    }
    IntervalSet { comps }
}

/// Exact measure of a rational set.
pub fn measure_rat(s: &IntervalSet<Rat>) -> Rat {
    s.measure()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// A sequence of sets given by a level generator.
pub struct NestedFamily<T> {
    generator: Box<dyn Fn(usize) -> IntervalSet<T> + Send + Sync>,
    pub direction: Direction,
}

impl<T: Field> NestedFamily<T> {
    pub fn new(
        direction: Direction,
        generator: impl Fn(usize) -> IntervalSet<T> + Send + Sync + 'static,
    ) -> Self {
        NestedFamily { generator: Box::new(generator), direction }
    }

    pub fn level(&self, n: usize) -> IntervalSet<T> {
        (self.generator)(n)
    }
}

impl NestedFamily<Rat> {
    pub fn cantor() -> Self {
        Self::new(Direction::Decreasing, |n| cantor_level_rat(n as u32))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitReport<T> {
    pub measures: Vec<T>,
    pub direction: Direction,
    /// Strictly monotone at every step.
    pub strict: bool,
    /// The last computed measure: an upper bound on the limit of a decreasing
    /// family and a lower bound for an increasing one.
    pub bound: T,
}

/// Measures of the levels `0..=n_max`, verifying nesting exactly.
pub fn limit_measure<T: Field>(fam: &NestedFamily<T>, n_max: usize) -> Result<LimitReport<T>> {
    let mut prev = fam.level(0);
    let mut measures = vec![prev.measure()];
    let mut strict = true;
    for n in 1..=n_max {
        let cur = fam.level(n);
        let nested = match fam.direction {
            Direction::Increasing => prev.is_subset(&cur),
            Direction::Decreasing => cur.is_subset(&prev),
        };
        if !nested {
            return Err(Error::Invariant {
                level: n - 1,
                msg: format!("levels {} and {} are not nested as {:?}", n - 1, n, fam.direction),
            });
        }
        let m = cur.measure();
        if m == measures[n - 1] {
            strict = false;
        }
        measures.push(m);
        prev = cur;
    }
    let bound = measures.last().cloned().unwrap_or_else(T::zero);
    Ok(LimitReport { measures, direction: fam.direction, strict, bound })
}

/// Finite family of open intervals with its exact total length.
#[derive(Clone, Debug, PartialEq)]
pub struct Cover {
    pub intervals: Vec<Interval<Rat>>,
    pub total_length: Rat,
    /// The family level the cover was built from.
    pub level: usize,
}

impl Cover {
    pub fn new(intervals: Vec<Interval<Rat>>) -> Self {
        assert!(intervals.iter().all(|iv| !iv.lo_closed && !iv.hi_closed));
        let total_length = measure_rat(&IntervalSet { comps: intervals.clone() });
        Cover { intervals, total_length, level: 0 }
    }
}

/// Default number of levels searched by [`null_cover`].
pub const COVER_HORIZON: usize = 64;

/// Open cover of the limit of a decreasing family with total length `< eps`.
///
/// Picks the first level `n` whose measure is below `eps`, then widens each of
/// its `k` components by a dyadic slack `s <= (eps - mu) / 4k` on both sides.
pub fn null_cover(fam: &NestedFamily<Rat>, eps: &Rat, horizon: usize) -> Result<Cover> {
    if *eps <= Rat::zero() {
        return Err(Error::Precondition("eps must be positive".into()));
    }
    if fam.direction != Direction::Decreasing {
        return Err(Error::Precondition("family must be decreasing".into()));
    }
    for n in 0..=horizon {
        let set = fam.level(n);
        let mu = measure_rat(&set);
        if mu >= *eps {
            continue;
        }
        let k = set.len().max(1) as i64;
        let slack = rat::pow2_floor(&((eps - &mu) / rat::int(4 * k)));
        let intervals = set
            .components()
            .iter()
            .map(|c| Interval::open(&c.lo - &slack, &c.hi + &slack))
            .collect::<Vec<_>>();
        let total_length = &mu + &slack * rat::int(2 * set.len() as i64);
        debug_assert!(total_length < *eps);
        return Ok(Cover { intervals, total_length, level: n });
    }
    Err(Error::NotCertified(format!("no level up to {horizon} has measure below eps")))
}

/// Whether the cover contains `a`, and the cover's total length.
pub fn outer_measure_of_cover(cover: &Cover, a: &IntervalSet<Rat>) -> (bool, Rat) {
    let union = IntervalSet::normalize(cover.intervals.clone());
    (a.is_subset(&union), cover.total_length.clone())
}

/// Open interval `U` with `mu(A n U) >= p mu(U)`: the leftmost longest
/// component of `A`, opened.
pub fn density_witness<T: Field>(a: &IntervalSet<T>, p: &T) -> Result<Interval<T>> {
    if *p <= T::zero() || *p >= T::one() {
        return Err(Error::Precondition("p must lie strictly between 0 and 1".into()));
    }
    if a.measure() <= T::zero() {
        return Err(Error::Precondition("set has measure zero".into()));
    }
    let mut best = &a.comps[0];
    for c in &a.comps[1..] {
        if c.length() > best.length() {
            best = c;
        }
    }
    Ok(Interval::open(best.lo.clone(), best.hi.clone()))
}
