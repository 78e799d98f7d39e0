use measura::expr::parse_func;
use measura::rat::{int, rat};
use measura::step::{
    ftc_check, regulated_from_continuous, regulated_integral, riemann_bounds, riemann_integrable, riemann_steps, step_add, step_integral,
    refine_common, step_le, step_scale, upper_lower_step, RiemannVerdict, StepFunction,
};
use measura::{FuncExpr, Rat, RatStep};
use num_traits::Signed;
use proptest::prelude::*;

fn step() -> impl Strategy<Value = RatStep> {
    prop::collection::btree_set(1i64..32, 0..6).prop_flat_map(|cuts| {
        let mut breaks = vec![rat(0, 1)];
        breaks.extend(cuts.iter().map(|&c| rat(c, 32)));
        breaks.push(rat(1, 1));
        let k = breaks.len() - 1;
        prop::collection::vec(-20i64..=20, k).prop_map(move |vs| StepFunction::new(breaks.clone(), vs.into_iter().map(|v| rat(v, 3)).collect()).unwrap())
    })
}

fn poly() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-6i64..=6, 1..5)
}

fn poly_expr(cs: &[i64]) -> FuncExpr {
    parse_func(&cs.iter().enumerate().map(|(k, c)| format!("({c})*x^{k}")).collect::<Vec<_>>().join(" + ")).unwrap()
}

fn poly_integral(cs: &[i64]) -> Rat {
    cs.iter().enumerate().fold(int(0), |acc, (k, &c)| acc + rat(c, k as i64 + 1))
}

fn piecewise() -> impl Strategy<Value = FuncExpr> {
    (prop::collection::btree_set(1i64..12, 0..3), prop::collection::vec(poly(), 3)).prop_map(|(cuts, ps)| {
        let mut ends = vec![rat(0, 1)];
        ends.extend(cuts.iter().map(|&c| rat(c, 12)));
        ends.push(rat(1, 1));
        let arms: Vec<String> = ends
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let close = if i + 2 == ends.len() { "]" } else { ")" };
                let body = ps[i].iter().enumerate().map(|(k, c)| format!("({c})*x^{k}")).collect::<Vec<_>>().join(" + ");
                format!("[{},{}{close}: {body}", w[0], w[1])
            })
            .collect();
        parse_func(&format!("piecewise{{{}}}", arms.join(", "))).unwrap()
    })
}

fn whole(s: &RatStep) -> Rat {
    step_integral(s, &int(0), &int(1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_integral_is_linear(s in step(), t in step(), c in -5i64..=5) {
        let sum = step_add(&s, &t).unwrap();
        prop_assert_eq!(whole(&sum), whole(&s) + whole(&t));
        prop_assert_eq!(whole(&step_scale(&int(c), &s)), int(c) * whole(&s));
    }

    #[test]
    fn step_integral_is_monotone_and_additive(s in step(), t in step(), m in 1i64..32) {
        let hi = step_add(&s, &t.abs()).unwrap();
        prop_assert!(step_le(&s, &hi).unwrap());
        prop_assert!(whole(&s) <= whole(&hi));
        prop_assert!(whole(&s).abs() <= whole(&s.abs()));
        let mid = rat(m, 32);
        prop_assert_eq!(step_integral(&s, &int(0), &mid).unwrap() + step_integral(&s, &mid, &int(1)).unwrap(), whole(&s));
    }

    #[test]
    fn step_integral_ignores_partition(s in step(), t in step()) {
        let (s2, t2) = refine_common(&s, &t).unwrap();
        prop_assert_eq!(s2.breakpoints(), t2.breakpoints());
        prop_assert_eq!(whole(&s2), whole(&s));
        prop_assert_eq!(whole(&t2), whole(&t));
    }

    #[test]
    fn darboux_sums_bracket_polynomials(cs in poly()) {
        let f = poly_expr(&cs);
        let exact = poly_integral(&cs);
        let b = riemann_bounds(&f, 10).unwrap();
        prop_assert!(b.lower <= exact && exact <= b.upper);
        let (u, v) = riemann_steps(&f, 10).unwrap();
        prop_assert!(step_le(&v, &u).unwrap());
        prop_assert_eq!(whole(&u), b.upper);
        prop_assert_eq!(whole(&v), b.lower);
    }

    #[test]
    fn refinement_tightens_step_bounds(cs in poly(), k in 1i64..6) {
        let f = poly_expr(&cs);
        let coarse: Vec<Rat> = (0..=k).map(|j| rat(j, k)).collect();
        let fine: Vec<Rat> = (0..=2 * k).map(|j| rat(j, 2 * k)).collect();
        let (u1, v1) = upper_lower_step(&f, &coarse).unwrap();
        let (u2, v2) = upper_lower_step(&f, &fine).unwrap();
        prop_assert!(whole(&u2) <= whole(&u1) && whole(&v1) <= whole(&v2));
        prop_assert!(whole(&v2) <= poly_integral(&cs) && poly_integral(&cs) <= whole(&u2));
    }

    #[test]
    fn regulated_integral_contains_antiderivative(cs in poly()) {
        let f = poly_expr(&cs);
        let eps = rat(1, 1000);
        let e = regulated_integral(&f, &eps).unwrap();
        prop_assert!(e.contains(&poly_integral(&cs)));
        prop_assert!(e.width() <= eps);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn darboux_bounds_are_monotone_in_depth(f in piecewise()) {
        let mut prev = riemann_bounds(&f, 0).unwrap();
        for d in 1..=14 {
            let b = riemann_bounds(&f, d).unwrap();
            prop_assert!(b.lower <= b.upper);
            prop_assert!(prev.lower <= b.lower && b.upper <= prev.upper, "{f} at depth {d}");
            prev = b;
        }
    }
}

#[test]
fn continuous_functions_are_regulated() {
    let f = parse_func("sin(x)").unwrap();
    let (g, err) = regulated_from_continuous(&f, 64).unwrap();
    let exact = 1.0 - 1f64.cos();
    let approx = measura::rat::to_f64(&whole(&g));
    assert!((approx - exact).abs() <= measura::rat::to_f64(&err) + 1e-12);
}

#[test]
fn riemann_criterion_verdicts() {
    match riemann_integrable(&parse_func("piecewise{[0,1/3): x, [1/3,1]: 2}").unwrap(), &rat(1, 10_000), 20).unwrap() {
        RiemannVerdict::Integrable(e) => assert!(e.contains(&(rat(1, 18) + rat(4, 3)))),
        v => panic!("{v:?}"),
    }
    match riemann_integrable(&parse_func("x*dirichlet(1,0)").unwrap(), &rat(1, 10_000), 20).unwrap() {
        RiemannVerdict::NonIntegrable(w) => assert!(w.gap > int(0) && w.lower < w.upper),
        v => panic!("{v:?}"),
    }
}

#[test]
fn ftc_residual_tracks_derivative_bound() {
    for (text, lip) in [("x", 1), ("x^2", 2), ("sin(x)", 1)] {
        let f = parse_func(text).unwrap();
        for e in [4, 6] {
            let h = rat(1, 1 << e);
            let r = ftc_check(&f, &h, 8).unwrap();
            assert!(r.residual <= int(lip) * &h / int(2) + &h * &h, "{text}: {}", r.residual);
        }
    }
}
