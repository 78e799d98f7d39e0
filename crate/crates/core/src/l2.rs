//! Square-integrable functions on `[-1, 1]` and classical Fourier series.

use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Interval, IntervalSet};
use crate::expr::{ae_canonicalize, Cell, FuncExpr, Node};
use crate::lebesgue::{integral_in, quad_canonical};
use crate::quad::{IntegralEnclosure, QuadOptions};
use crate::rat::{format_g, format_rat, int, rat, round_down, round_up, sqrt_bounds, Rat};
use crate::scalar::Bound;

const SQRT_PREC: u64 = 96;
const KEEP_BITS: u64 = 128;

/// The ambient interval `[-1, 1]`.
pub fn ambient() -> Interval<Rat> {
    Interval::symmetric()
}

fn whole() -> IntervalSet<Rat> {
    IntervalSet::from_interval(ambient())
}

/// Outward rounding to a bounded mantissa, keeping sums of many terms small.
fn trim(e: IntegralEnclosure) -> IntegralEnclosure {
    IntegralEnclosure::new(round_down(&e.lo, KEEP_BITS), round_up(&e.hi, KEEP_BITS))
}

fn mul(a: &IntegralEnclosure, b: &IntegralEnclosure) -> IntegralEnclosure {
    let ps = [&a.lo * &b.lo, &a.lo * &b.hi, &a.hi * &b.lo, &a.hi * &b.hi];
    let lo = ps.iter().min().unwrap().clone();
    let hi = ps.iter().max().unwrap().clone();
    trim(IntegralEnclosure::new(lo, hi))
}

fn square(a: &IntegralEnclosure) -> IntegralEnclosure {
    let (l2, h2) = (&a.lo * &a.lo, &a.hi * &a.hi);
    let e = if !a.lo.is_negative() {
        IntegralEnclosure::new(l2, h2)
    } else if !a.hi.is_positive() {
        IntegralEnclosure::new(h2, l2)
    } else {
        IntegralEnclosure::new(Rat::zero(), crate::rat::max(&l2, &h2))
    };
    trim(e)
}

/// Square root of an enclosure of a nonnegative quantity.
pub fn sqrt_enclosure(e: &IntegralEnclosure) -> IntegralEnclosure {
    let lo = sqrt_bounds(&crate::rat::max(&e.lo, &Rat::zero()), SQRT_PREC).0;
    let hi = sqrt_bounds(&crate::rat::max(&e.hi, &Rat::zero()), SQRT_PREC).1;
    trim(IntegralEnclosure::new(lo, hi))
}

fn inv_sqrt2() -> IntegralEnclosure {
    sqrt_enclosure(&IntegralEnclosure::point(rat(1, 2)))
}

fn level_for(freq: i64) -> u32 {
    if freq <= 0 {
        return 0;
    }
    (1.6 * freq as f64).log2().ceil().max(0.0) as u32
}

/// `int_{-1}^{1} g` for an expression already in canonical form, presplit
/// into `2^level` cells per piece.
fn integral_leveled(g: &FuncExpr, level: u32, tol: &Rat) -> Result<IntegralEnclosure> {
    let mut o = QuadOptions::taylor(tol.clone());
    o.initial_level = level;
    o.max_cells = 2_000_000;
    match quad_canonical(g, &whole(), &ambient(), &o) {
        Ok(q) => IntegralEnclosure::from_quad(&q),
        Err(Error::Unbounded(_)) => Ok(integral_in(g, &whole(), &ambient(), tol)?.enclosure),
        Err(e) => Err(e),
    }
}

fn canonical(f: &FuncExpr) -> Result<FuncExpr> {
    ae_canonicalize(f, &ambient())
}

/// Highest `n` in any `sin(n pi x)` or `cos(n pi x)` factor, as a refinement hint.
fn frequency(f: &FuncExpr) -> i64 {
    let mut top = 0i64;
    f.visit(&mut |e| {
        if let FuncExpr::Sin(a) | FuncExpr::Cos(a) = e {
            a.visit(&mut |c| {
                if let Some(q) = c.as_const() {
                    if q.is_integer() {
                        if let Ok(v) = i64::try_from(q.to_integer().abs()) {
                            top = top.max(v);
                        }
                    }
                }
            });
        }
    });
    top
}

/// `int_{-1}^{1} f`.
pub fn integral(f: &FuncExpr, tol: &Rat) -> Result<IntegralEnclosure> {
    let c = canonical(f)?;
    integral_leveled(&c, level_for(frequency(&c)), tol)
}

/// A function on `[-1, 1]` with a certified finite `int f^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L2Element {
    f: FuncExpr,
    norm_sq: IntegralEnclosure,
}

impl L2Element {
    pub fn new(f: &FuncExpr, tol: &Rat) -> Result<Self> {
        let c = canonical(f)?;
        let norm_sq = integral(&(c.clone() * c.clone()), tol)?;
        Ok(L2Element { f: c, norm_sq })
    }

    pub fn expr(&self) -> &FuncExpr {
        &self.f
    }

    pub fn norm_sq(&self) -> &IntegralEnclosure {
        &self.norm_sq
    }

    pub fn norm(&self) -> IntegralEnclosure {
        sqrt_enclosure(&self.norm_sq)
    }
}

/// `<f, g> = int f g`.
pub fn inner(f: &FuncExpr, g: &FuncExpr, tol: &Rat) -> Result<IntegralEnclosure> {
    integral(&(f.clone() * g.clone()), tol)
}

pub fn norm_sq(f: &FuncExpr, tol: &Rat) -> Result<IntegralEnclosure> {
    inner(f, f, tol)
}

/// `||f|| = <f, f>^(1/2)`, rounded outward.
pub fn norm(f: &FuncExpr, tol: &Rat) -> Result<IntegralEnclosure> {
    Ok(sqrt_enclosure(&norm_sq(f, tol)?))
}

/// Comparison of two certified quantities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub lhs: IntegralEnclosure,
    pub rhs: IntegralEnclosure,
    /// `rhs.lo - lhs.hi`.
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub residual: Rat,
    /// `lhs` and `rhs` widths combined.
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub widths: Rat,
    pub pass: bool,
    /// The enclosure of `rhs - lhs` contains zero.
    pub equality_possible: bool,
}

impl Check {
    /// `lhs <= rhs` within widths.
    fn le(lhs: IntegralEnclosure, rhs: IntegralEnclosure) -> Self {
        let residual = &rhs.lo - &lhs.hi;
        let widths = lhs.width() + rhs.width();
        let pass = residual >= -widths.clone();
        let equality_possible = lhs.meets(&rhs, &Rat::zero());
        Check { lhs, rhs, residual, widths, pass, equality_possible }
    }

    /// `lhs == rhs` within widths.
    fn eq(lhs: IntegralEnclosure, rhs: IntegralEnclosure) -> Self {
        let mut c = Check::le(lhs, rhs);
        c.pass = c.equality_possible;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InequalityReport {
    /// `int |f g| <= ||f|| ||g||`.
    pub holder: Check,
    /// `|<f, g>| <= ||f|| ||g||`.
    pub cauchy_schwarz: Check,
    /// `||f + g|| <= ||f|| + ||g||`.
    pub minkowski: Check,
    /// `||f - g||^2 + ||f + g||^2 = 2 ||f||^2 + 2 ||g||^2`.
    pub parallelogram: Check,
    /// `||f + g||^2 = ||f||^2 + ||g||^2`, when `<f, g>` may vanish.
    pub pythagorean: Option<Check>,
}

impl InequalityReport {
    pub fn all_pass(&self) -> bool {
        self.holder.pass
            && self.cauchy_schwarz.pass
            && self.minkowski.pass
            && self.parallelogram.pass
            && self.pythagorean.as_ref().map_or(true, |c| c.pass)
    }
}

fn abs_enclosure(e: &IntegralEnclosure) -> IntegralEnclosure {
    if !e.lo.is_negative() {
        e.clone()
    } else if !e.hi.is_positive() {
        IntegralEnclosure::new(-e.hi.clone(), -e.lo.clone())
    } else {
        IntegralEnclosure::new(Rat::zero(), crate::rat::max(&-e.lo.clone(), &e.hi))
    }
}

pub fn inequality_suite(f: &FuncExpr, g: &FuncExpr, tol: &Rat) -> Result<InequalityReport> {
    let (f, g) = (canonical(f)?, canonical(g)?);
    let ff = norm_sq(&f, tol)?;
    let gg = norm_sq(&g, tol)?;
    let fg = inner(&f, &g, tol)?;
    let sum_sq = norm_sq(&(f.clone() + g.clone()), tol)?;
    let diff_sq = norm_sq(&(f.clone() - g.clone()), tol)?;
    let abs_fg = integral(&(f.clone() * g.clone()).abs(), tol)?;
    let (nf, ng) = (sqrt_enclosure(&ff), sqrt_enclosure(&gg));
    let prod = mul(&nf, &ng);
    let two = int(2);
    Ok(InequalityReport {
        holder: Check::le(abs_fg, prod.clone()),
        cauchy_schwarz: Check::le(abs_enclosure(&fg), prod),
        minkowski: Check::le(sqrt_enclosure(&sum_sq), nf.add(&ng)),
        parallelogram: Check::eq(diff_sq.add(&sum_sq), ff.scale(&two).add(&gg.scale(&two))),
        pythagorean: fg.contains(&Rat::zero()).then(|| Check::eq(sum_sq.clone(), ff.add(&gg))),
    })
}

/// `||x_1 + ... + x_k||^2` against `sum ||x_i||^2`.
pub fn pythagorean(xs: &[FuncExpr], tol: &Rat) -> Result<Check> {
    let mut total: Option<FuncExpr> = None;
    let mut sum = IntegralEnclosure::point(Rat::zero());
    for x in xs {
        sum = sum.add(&norm_sq(x, tol)?);
        total = Some(match total {
            Some(t) => t + x.clone(),
            None => x.clone(),
        });
    }
    let lhs = match total {
        Some(t) => norm_sq(&t, tol)?,
        None => IntegralEnclosure::point(Rat::zero()),
    };
    Ok(Check::eq(lhs, sum))
}

/// Member `i` of `{1/sqrt 2, cos(pi x), sin(pi x), cos(2 pi x), ...}`.
pub fn family_member(i: usize) -> FuncExpr {
    if i == 0 {
        return FuncExpr::constant(rat(1, 2)).sqrt();
    }
    let n = i.div_ceil(2) as i64;
    if i % 2 == 1 {
        FuncExpr::cos_mode(n)
    } else {
        FuncExpr::sin_mode(n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrthoAudit {
    /// Upper bound on `|<u_i, u_j> - delta_ij|` over all audited pairs.
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub max_deviation: Rat,
    pub worst_pair: (usize, usize),
    pub pairs: usize,
}

/// Inner products of all members with frequency at most `max_n`.
pub fn orthonormality_audit(max_n: usize, tol: &Rat) -> Result<OrthoAudit> {
    let k = 2 * max_n + 1;
    let idx: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let devs: Vec<Rat> = idx
        .par_iter()
        .map(|&(i, j)| {
            let e = inner(&family_member(i), &family_member(j), tol)?;
            let d = if i == j { int(1) } else { int(0) };
            Ok(crate::rat::max(&(&e.hi - &d).abs(), &(&e.lo - &d).abs()))
        })
        .collect::<Result<_>>()?;
    let (w, dev) = devs.iter().enumerate().max_by(|a, b| a.1.cmp(b.1)).unwrap();
    Ok(OrthoAudit { max_deviation: dev.clone(), worst_pair: idx[w], pairs: idx.len() })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FourierCoeffs {
    /// `(1/sqrt 2) int f`.
    pub a0: IntegralEnclosure,
    /// `A_n = int f cos(n pi x)`, `n = 1..N`.
    pub a: Vec<IntegralEnclosure>,
    /// `B_n = int f sin(n pi x)`, `n = 1..N`.
    pub b: Vec<IntegralEnclosure>,
    #[serde(serialize_with = "crate::rat::ser_rat")]
    pub tol: Rat,
}

impl FourierCoeffs {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Every coefficient enclosure, `A_0` first.
    pub fn all(&self) -> impl Iterator<Item = &IntegralEnclosure> {
        std::iter::once(&self.a0).chain(self.a.iter()).chain(self.b.iter())
    }

    pub fn max_width(&self) -> Rat {
        self.all().map(|e| e.width()).max().unwrap()
    }
}

/// `A_0, A_1..A_N, B_1..B_N`, each computed to width `tol`.
pub fn fourier_coeffs(f: &FuncExpr, n_max: usize, tol: &Rat) -> Result<FourierCoeffs> {
    let c = canonical(f)?;
    let base = frequency(&c);
    let mean = integral_leveled(&c, level_for(base), &(tol / int(2)))?;
    let a0 = mul(&mean, &inv_sqrt2());
    let jobs: Vec<(i64, bool)> = (1..=n_max as i64).flat_map(|n| [(n, true), (n, false)]).collect();
    let vals: Vec<IntegralEnclosure> = jobs
        .par_iter()
        .map(|&(n, cos)| {
            let mode = if cos { FuncExpr::cos_mode(n) } else { FuncExpr::sin_mode(n) };
            integral_leveled(&(c.clone() * mode), level_for(n + base), tol)
        })
        .collect::<Result<_>>()?;
    let (a, b) = vals.chunks(2).map(|p| (p[0].clone(), p[1].clone())).unzip();
    Ok(FourierCoeffs { a0, a, b, tol: tol.clone() })
}

/// `S_N` with midpoint coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialSum {
    pub expr: FuncExpr,
    /// Bound on `||S_N - S_N(midpoints)||` from the coefficient widths.
    pub perturbation: Rat,
}

fn mid(e: &IntegralEnclosure) -> Rat {
    (&e.lo + &e.hi) / int(2)
}

fn scaled_mode(c: Rat, mode: FuncExpr) -> Option<FuncExpr> {
    if c.is_zero() {
        None
    } else if c.is_negative() {
        Some(-(FuncExpr::constant(-c) * mode))
    } else {
        Some(FuncExpr::constant(c) * mode)
    }
}

fn span_expr(c0: Rat, terms: impl Iterator<Item = (i64, Rat, Rat)>) -> FuncExpr {
    let mut acc = if c0.is_negative() { -FuncExpr::constant(-c0) } else { FuncExpr::constant(c0) };
    for (n, a, b) in terms {
        for t in [scaled_mode(a, FuncExpr::cos_mode(n)), scaled_mode(b, FuncExpr::sin_mode(n))].into_iter().flatten() {
            acc = acc + t;
        }
    }
    acc
}

/// `S_N(x) = (1/sqrt 2) A_0 + sum A_n cos(n pi x) + sum B_n sin(n pi x)`.
pub fn partial_sum(c: &FourierCoeffs, n: usize) -> Result<PartialSum> {
    if n > c.len() {
        return Err(Error::Precondition(format!("only {} coefficients available", c.len())));
    }
    let c0 = mul(&c.a0, &inv_sqrt2());
    // ||const|| = sqrt 2 |const| < (3/2) |const|
    let mut perturbation = c0.width() / int(2) * rat(3, 2);
    for k in 0..n {
        perturbation += (c.a[k].width() + c.b[k].width()) / int(2);
    }
    let expr = span_expr(mid(&c0), (0..n).map(|k| (k as i64 + 1, mid(&c.a[k]), mid(&c.b[k]))));
    Ok(PartialSum { expr, perturbation })
}

fn distance(f: &FuncExpr, s: &FuncExpr, freq: i64, tol: &Rat) -> Result<IntegralEnclosure> {
    let d = f.clone() - s.clone();
    let sq = integral_leveled(&(d.clone() * d), level_for(freq), tol)?;
    Ok(sqrt_enclosure(&sq))
}

/// Enclosure of `||f - S_N||`.
pub fn mean_square_error(f: &FuncExpr, n: usize, tol: &Rat) -> Result<IntegralEnclosure> {
    let c = canonical(f)?;
    let coeffs = fourier_coeffs(&c, n, tol)?;
    let s = partial_sum(&coeffs, n)?;
    let e = distance(&c, &s.expr, n as i64 + frequency(&c), tol)?;
    Ok(IntegralEnclosure::new(crate::rat::max(&(&e.lo - &s.perturbation), &Rat::zero()), &e.hi + &s.perturbation))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BesselParseval {
    /// `sum` of squared coefficients up to `N`.
    pub bessel_sum: IntegralEnclosure,
    /// `||f||^2`.
    pub norm_sq: IntegralEnclosure,
    /// `||f||^2 - bessel_sum`.
    pub gap: IntegralEnclosure,
    pub coeffs: FourierCoeffs,
}

impl BesselParseval {
    /// Bessel's inequality within widths.
    pub fn bessel_holds(&self) -> bool {
        self.gap.hi >= Rat::zero()
    }
}

pub fn bessel_parseval(f: &FuncExpr, n: usize, tol: &Rat) -> Result<BesselParseval> {
    let c = canonical(f)?;
    let coeffs = fourier_coeffs(&c, n, tol)?;
    Ok(bessel_from(&c, coeffs, tol)?)
}

/// [`bessel_parseval`] from coefficients already at hand.
pub fn bessel_from(f: &FuncExpr, coeffs: FourierCoeffs, tol: &Rat) -> Result<BesselParseval> {
    let norm_sq = norm_sq(f, tol)?;
    let bessel_sum = coeffs.all().fold(IntegralEnclosure::point(Rat::zero()), |acc, e| acc.add(&square(e)));
    let gap = norm_sq.sub(&bessel_sum);
    Ok(BesselParseval { bessel_sum, norm_sq, gap, coeffs })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BestApprox {
    /// `||f - S_N||`.
    pub error: IntegralEnclosure,
    /// `||f - v||` for each perturbed `v`, the unperturbed `S_N` first.
    pub trials: Vec<IntegralEnclosure>,
    pub passed: usize,
}

impl BestApprox {
    pub fn all_pass(&self) -> bool {
        self.passed == self.trials.len()
    }
}

/// Compares `S_N` against random elements of the span of the first `2N+1` members.
pub fn best_approx_check(f: &FuncExpr, n: usize, trials: usize, seed: u64, tol: &Rat) -> Result<BestApprox> {
    let c = canonical(f)?;
    let coeffs = fourier_coeffs(&c, n, tol)?;
    let s = partial_sum(&coeffs, n)?;
    let freq = n as i64 + frequency(&c);
    let e = distance(&c, &s.expr, freq, tol)?;
    let error = IntegralEnclosure::new(crate::rat::max(&(&e.lo - &s.perturbation), &Rat::zero()), &e.hi + &s.perturbation);
    let c0 = mid(&mul(&coeffs.a0, &inv_sqrt2()));
    let mids: Vec<(Rat, Rat)> = (0..n).map(|k| (mid(&coeffs.a[k]), mid(&coeffs.b[k]))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = |rng: &mut ChaCha8Rng, on: bool| if on { rat(rng.gen_range(-256..=256), 1024) } else { Rat::zero() };
    let mut out = Vec::with_capacity(trials);
    let mut passed = 0;
    for t in 0..trials {
        let on = t > 0;
        let mut v0 = &c0 + jitter(&mut rng, on);
        let mut terms = Vec::with_capacity(n);
        for (k, (a, b)) in mids.iter().enumerate() {
            terms.push((k as i64 + 1, a + jitter(&mut rng, on), b + jitter(&mut rng, on)));
        }
        if on && v0 == c0 && terms.iter().zip(&mids).all(|(t, m)| t.1 == m.0 && t.2 == m.1) {
            v0 += rat(1, 64);
        }
        let v = span_expr(v0, terms.into_iter());
        let d = if on { distance(&c, &v, freq, tol)? } else { error.clone() };
        if error.hi <= &d.lo + error.width() + d.width() {
            passed += 1;
        }
        out.push(d);
    }
    Ok(BestApprox { error, trials: out, passed })
}

/// `n,A_lo,A_hi,B_lo,B_hi,A,B` with exact bounds and 12-digit midpoints.
pub fn coeffs_csv(c: &FourierCoeffs) -> String {
    let mut s = String::from("n,A_lo,A_hi,B_lo,B_hi,A,B\n");
    let dec = |e: &IntegralEnclosure| format_g(crate::rat::to_f64(&mid(e)), 12);
    let _ = writeln!(s, "0,{},{},,,{},", format_rat(&c.a0.lo), format_rat(&c.a0.hi), dec(&c.a0));
    for (k, (a, b)) in c.a.iter().zip(&c.b).enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            k + 1,
            format_rat(&a.lo),
            format_rat(&a.hi),
            format_rat(&b.lo),
            format_rat(&b.hi),
            dec(a),
            dec(b)
        );
    }
    s
}

fn sample(node: &Node<f64>, x: &Rat) -> String {
    match node.range(&Cell::point(x)) {
        Ok(v) if v.is_finite() => format_g(v.midpoint().to_f64(), 12),
        _ => "nan".into(),
    }
}

/// `x,f,S` on a uniform grid of `grid + 1` points over `[-1, 1]`.
pub fn plot_csv(f: &FuncExpr, s: &PartialSum, grid: usize) -> Result<String> {
    if grid == 0 {
        return Err(Error::Precondition("grid must be positive".into()));
    }
    let fnode = Node::<f64>::compile(f, &ambient())?;
    let snode = Node::<f64>::compile(&s.expr, &ambient())?;
    let mut out = String::from("x,f,S\n");
    for j in 0..=grid {
        let x = rat(2 * j as i64, grid as i64) - int(1);
        let _ = writeln!(out, "{},{},{}", format_g(crate::rat::to_f64(&x), 12), sample(&fnode, &x), sample(&snode, &x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_func_in;

    fn p(s: &str) -> FuncExpr {
        parse_func_in(s, &ambient()).unwrap()
    }

    fn t() -> Rat {
        rat(1, 1_000_000_000)
    }

    #[test]
    fn inner_products() {
        assert!(inner(&FuncExpr::cos_mode(1), &FuncExpr::sin_mode(1), &t()).unwrap().contains(&int(0)));
        assert!(inner(&family_member(0), &family_member(0), &t()).unwrap().contains(&int(1)));
        assert_eq!(inner(&p("x"), &p("x"), &t()).unwrap(), IntegralEnclosure::point(rat(2, 3)));
        assert_eq!(norm(&p("0"), &t()).unwrap(), IntegralEnclosure::point(int(0)));
        assert!(norm(&FuncExpr::cos_mode(5), &t()).unwrap().contains(&int(1)));
    }

    #[test]
    fn inequalities() {
        let r = inequality_suite(&p("x"), &p("x"), &t()).unwrap();
        assert!(r.all_pass() && r.holder.equality_possible);
        let r = inequality_suite(&FuncExpr::cos_mode(1), &FuncExpr::sin_mode(1), &t()).unwrap();
        assert!(r.pythagorean.as_ref().unwrap().pass && r.pythagorean.unwrap().lhs.contains(&int(2)));
        let r = inequality_suite(&p("x"), &p("1"), &t()).unwrap();
        assert!(r.all_pass());
        assert!(r.holder.residual.is_positive() && r.cauchy_schwarz.residual.is_positive() && r.minkowski.residual.is_positive());
    }

    #[test]
    fn cancelling_absolute_values() {
        let e = integral(&p("abs(x^3*(cos(2*pi*x) - cos(2*pi*x)))"), &t()).unwrap();
        assert!(e.contains(&int(0)) && e.hi < rat(1, 1_000_000_000));
        let r = inequality_suite(&p("x^3 - indicator([0,1/2])"), &p("2*cos(2*pi*x) - 2*cos(2*pi*x)"), &t()).unwrap();
        assert!(r.all_pass());
    }

    #[test]
    fn coefficients() {
        let pi = std::f64::consts::PI;
        let c = fourier_coeffs(&p("x"), 4, &t()).unwrap();
        assert!(c.a.iter().all(|e| e.contains(&int(0))));
        assert!(c.b[0].contains_f64(2.0 / pi) || (crate::rat::to_f64(&c.b[0].lo) - 2.0 / pi).abs() < 1e-12);
        assert!(c.max_width() <= t());
        let k = fourier_coeffs(&p("3"), 2, &t()).unwrap();
        assert!((crate::rat::to_f64(&mid(&k.a0)) - 3.0 * 2f64.sqrt()).abs() < 1e-9);
        let s = partial_sum(&k, 0).unwrap();
        let v = crate::expr::eval_func(&s.expr, &int(0), &ambient()).unwrap().to_rats().unwrap();
        assert!((v.0 - int(3)).abs() <= s.perturbation && (v.1 - int(3)).abs() <= s.perturbation);
        let bp = bessel_parseval(&FuncExpr::cos_mode(3), 3, &t()).unwrap();
        assert!(bp.bessel_sum.meets(&IntegralEnclosure::point(int(1)), &rat(1, 10_000_000)));
    }

    #[test]
    fn approximation() {
        let e10 = mean_square_error(&p("x"), 10, &rat(1, 10_000_000)).unwrap();
        let e40 = mean_square_error(&p("x"), 40, &rat(1, 10_000_000)).unwrap();
        assert!(e40.hi < e10.lo);
        let zero = mean_square_error(&FuncExpr::sin_mode(1), 2, &t()).unwrap();
        assert!(zero.lo.is_zero() && zero.hi < rat(1, 1000));
        let b = best_approx_check(&p("x"), 3, 8, 1, &rat(1, 10_000_000)).unwrap();
        assert!(b.all_pass());
        let csv = coeffs_csv(&fourier_coeffs(&p("x"), 2, &t()).unwrap());
        assert_eq!(csv.lines().count(), 4);
    }
}
