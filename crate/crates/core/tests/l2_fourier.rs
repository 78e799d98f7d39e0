use std::f64::consts::PI;

use measura::expr::parse_func_in;
use measura::l2::{
    ambient, bessel_parseval, best_approx_check, coeffs_csv, family_member, fourier_coeffs, inequality_suite, inner, mean_square_error,
    norm_sq, partial_sum, plot_csv, pythagorean,
};
use measura::rat::{rat, to_f64};
use measura::{FuncExpr, IntegralEnclosure, Rat};
use proptest::prelude::*;

fn p(s: &str) -> FuncExpr {
    parse_func_in(s, &ambient()).unwrap()
}

fn tol() -> Rat {
    rat(1, 1_000_000_000)
}

fn near(e: &IntegralEnclosure, v: f64) -> bool {
    to_f64(&e.lo) - 1e-12 <= v && v <= to_f64(&e.hi) + 1e-12
}

fn mid(e: &IntegralEnclosure) -> Rat {
    (&e.lo + &e.hi) / rat(2, 1)
}

fn poly_text(cs: &[i64]) -> String {
    cs.iter().enumerate().map(|(k, c)| format!("({c})*x^{k}")).collect::<Vec<_>>().join(" + ")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bessel_sums_are_monotone_and_bounded(cs in prop::collection::vec(-4i64..=4, 1..4), jump in -3i64..=3) {
        let f = p(&format!("{} + ({jump})*indicator([0,1])", poly_text(&cs)));
        let t = rat(1, 100_000_000);
        let mut prev: Option<IntegralEnclosure> = None;
        for n in [1, 2, 4, 8] {
            let r = bessel_parseval(&f, n, &t).unwrap();
            prop_assert!(r.bessel_sum.lo <= &r.norm_sq.hi + r.norm_sq.width() + r.bessel_sum.width());
            if let Some(q) = &prev {
                prop_assert!(q.lo <= r.bessel_sum.hi);
            }
            prev = Some(r.bessel_sum);
        }
    }

    #[test]
    fn projection_reproduces_coefficients(cs in prop::collection::vec(-4i64..=4, 1..4), n in 1usize..=5) {
        let t = rat(1, 100_000_000);
        let c = fourier_coeffs(&p(&poly_text(&cs)), n, &t).unwrap();
        let s = partial_sum(&c, n).unwrap();
        let again = fourier_coeffs(&s.expr, n, &t).unwrap();
        let slack = (c.max_width() + again.max_width()) * rat(2, 1) + &s.perturbation;
        for (e, f) in again.a.iter().chain(&again.b).chain([&again.a0]).zip(c.a.iter().chain(&c.b).chain([&c.a0])) {
            prop_assert!(e.meets(&IntegralEnclosure::point(mid(f)), &slack));
        }
    }
}

#[test]
fn coefficients_match_closed_forms() {
    let c = fourier_coeffs(&p("x"), 12, &tol()).unwrap();
    assert!(c.a0.contains(&rat(0, 1)));
    for n in 1..=12 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        assert!(near(&c.b[n - 1], sign * 2.0 / (n as f64 * PI)), "b_{n}");
        assert!(c.a[n - 1].contains(&rat(0, 1)), "a_{n}");
    }
    let q = fourier_coeffs(&p("x^2"), 8, &tol()).unwrap();
    assert!(near(&q.a0, (2.0 / 3.0) / 2f64.sqrt()));
    for n in 1..=8 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!(near(&q.a[n - 1], sign * 4.0 / ((n * n) as f64 * PI * PI)), "a_{n}");
    }
    assert!(c.max_width() <= tol() * rat(2, 1));
}

#[test]
fn projection_is_idempotent() {
    let c = fourier_coeffs(&p("abs(x) + x^3"), 6, &tol()).unwrap();
    let s = partial_sum(&c, 6).unwrap();
    let again = fourier_coeffs(&s.expr, 6, &tol()).unwrap();
    let slack = tol() * rat(4, 1);
    for (e, f) in again.a.iter().chain(&again.b).zip(c.a.iter().chain(&c.b)) {
        assert!(e.meets(&IntegralEnclosure::point(mid(f)), &slack));
    }
}

#[test]
fn bessel_sums_grow_toward_the_norm() {
    let f = p("x");
    let mut prev_gap: Option<IntegralEnclosure> = None;
    for n in [2, 8, 32] {
        let r = bessel_parseval(&f, n, &tol()).unwrap();
        assert!(r.bessel_holds());
        assert!(r.norm_sq.contains(&rat(2, 3)));
        if let Some(g) = &prev_gap {
            assert!(r.gap.lo <= g.hi);
        }
        let tail = 4.0 / (PI * PI * n as f64);
        assert!(to_f64(&r.gap.hi) <= tail + 1e-6);
        prev_gap = Some(r.gap);
    }
    let q = bessel_parseval(&p("x^2"), 16, &tol()).unwrap();
    assert!(q.norm_sq.contains(&rat(2, 5)));
    assert!(to_f64(&q.gap.hi) < 1e-4);
}

#[test]
fn partial_sums_are_best_approximations() {
    let r = best_approx_check(&p("abs(x)"), 4, 12, 5, &rat(1, 10_000_000)).unwrap();
    assert!(r.all_pass(), "{r:?}");
    let e4 = mean_square_error(&p("x"), 4, &rat(1, 10_000_000)).unwrap();
    let e16 = mean_square_error(&p("x"), 16, &rat(1, 10_000_000)).unwrap();
    assert!(e16.hi < e4.lo);
}

#[test]
fn family_is_orthonormal_and_pythagorean() {
    for i in 0..5 {
        for j in 0..5 {
            let e = inner(&family_member(i), &family_member(j), &tol()).unwrap();
            assert!(e.contains(&rat(if i == j { 1 } else { 0 }, 1)), "({i}, {j})");
        }
    }
    let members: Vec<FuncExpr> = (0..6).map(family_member).collect();
    assert!(pythagorean(&members, &tol()).unwrap().pass);
    assert!(norm_sq(&p("indicator([0,1])"), &tol()).unwrap().contains(&rat(1, 1)));
}

#[test]
fn inequality_suite_on_fixed_pairs() {
    for (f, g) in [("x", "x^2"), ("sin(pi*x)", "abs(x)"), ("indicator([-1/2,1/2])", "cos(3*pi*x)")] {
        assert!(inequality_suite(&p(f), &p(g), &rat(1, 10_000_000)).unwrap().all_pass(), "{f} {g}");
    }
    let eq = inequality_suite(&p("x"), &p("-2*x"), &rat(1, 10_000_000)).unwrap();
    assert!(eq.holder.equality_possible && eq.cauchy_schwarz.equality_possible);
}

#[test]
fn csv_layouts() {
    let c = fourier_coeffs(&p("x"), 3, &rat(1, 1_000_000)).unwrap();
    let text = coeffs_csv(&c);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,A_lo,A_hi,B_lo,B_hi,A,B");
    assert_eq!(lines.len(), 5);
    let s = partial_sum(&c, 3).unwrap();
    let plot = plot_csv(&p("x"), &s, 8).unwrap();
    assert_eq!(plot.lines().next(), Some("x,f,S"));
    assert_eq!(plot.lines().count(), 10);
}
