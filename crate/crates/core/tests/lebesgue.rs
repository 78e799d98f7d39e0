use measura::exact::{cantor_level_rat, Interval, IntervalSet};
use measura::expr::{ae_canonicalize, eval_set, parse_func, parse_set};
use measura::lebesgue::{
    convergence_run, density_measure_check, integrate_over, lebesgue_integral_bounded, lebesgue_integral_general, lebesgue_integral_nonneg,
    range_partition, series_integral_check, simple_add, simple_integral, simple_scale, split_pos_neg, step_approx, ConvergenceMode, Measure,
    SimpleFunction, Truncation,
};
use measura::rat::{int, rat};
use measura::{IntegralEnclosure, Rat, RatSet};
use num_traits::Signed;
use proptest::prelude::*;

fn poly_text(cs: &[i64]) -> String {
    cs.iter().enumerate().map(|(k, c)| format!("({c})*x^{k}")).collect::<Vec<_>>().join(" + ")
}

fn family() -> impl Strategy<Value = Vec<RatSet>> {
    (prop::collection::btree_set(1i64..48, 1..6), prop::collection::vec(any::<bool>(), 6)).prop_map(|(cuts, closed)| {
        let mut ends = vec![int(0)];
        ends.extend(cuts.iter().map(|&c| rat(c, 48)));
        ends.push(int(1));
        let mut rest = IntervalSet::from_interval(Interval::unit());
        let mut parts = Vec::new();
        for (i, w) in ends.windows(2).enumerate() {
            let iv = if closed[i] { Interval::closed(w[0].clone(), w[1].clone()) } else { Interval::open(w[0].clone(), w[1].clone()) };
            let piece = IntervalSet::from_interval(iv).intersect(&rest);
            rest = rest.difference(&piece);
            parts.push(piece);
        }
        parts
    })
}

fn tol() -> Rat {
    rat(1, 1_000_000)
}

fn simple() -> impl Strategy<Value = SimpleFunction> {
    prop::collection::vec((0i64..=24, 0i64..=24, -9i64..=9), 1..5).prop_map(|raw| {
        let mut used = IntervalSet::empty();
        let mut parts = Vec::new();
        for (a, b, v) in raw {
            let iv = Interval::closed(rat(a.min(b), 24), rat(a.max(b), 24));
            let piece: RatSet = IntervalSet::from_interval(iv).difference(&used);
            used = used.union(&piece);
            parts.push((piece, int(v)));
        }
        parts.push((used.complement(&Interval::unit()), int(0)));
        SimpleFunction::new(parts, Interval::unit()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simple_integral_is_linear(s in simple(), t in simple(), c in -4i64..=4) {
        let m = Measure::Lebesgue;
        let sum = simple_integral(&simple_add(&s, &t).unwrap(), &m).unwrap();
        prop_assert_eq!(sum, simple_integral(&s, &m).unwrap().add(&simple_integral(&t, &m).unwrap()));
        let scaled = simple_integral(&simple_scale(&int(c), &s), &m).unwrap();
        prop_assert_eq!(scaled, simple_integral(&s, &m).unwrap().scale(&int(c)));
    }

    #[test]
    fn dirac_integrates_by_evaluation(s in simple(), k in 0i64..=24) {
        let x0 = rat(2 * k + 1, 50);
        let want = s.value_at(&x0).cloned().unwrap_or_else(|| int(0));
        prop_assert_eq!(simple_integral(&s, &Measure::Dirac(x0)).unwrap(), IntegralEnclosure::point(want));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simple_integral_is_monotone(s in simple(), t in simple()) {
        let m = Measure::Lebesgue;
        let big = simple_add(&s, &t.abs()).unwrap();
        let a = simple_integral(&s, &m).unwrap();
        prop_assert!(a.hi <= simple_integral(&big, &m).unwrap().lo);
        let abs = simple_integral(&s.abs(), &m).unwrap();
        prop_assert!(a.lo.abs() <= abs.hi && a.hi.abs() <= abs.hi);
    }

    #[test]
    fn null_sets_do_not_change_integrals(cs in prop::collection::vec(-5i64..=5, 1..4), p in 0i64..=30, q in 0i64..=30, c in -9i64..=9) {
        let base = poly_text(&cs);
        let f = parse_func(&format!("{base} + ({c})*indicator([{p}/30,{p}/30] | [{q}/30,{q}/30]) + dirichlet({c},0)")).unwrap();
        let g = parse_func(&base).unwrap();
        let canon = ae_canonicalize(&f, &Interval::unit()).unwrap();
        let m = Measure::Lebesgue;
        let ef = lebesgue_integral_bounded(&f, &m, &tol()).unwrap().enclosure;
        let eg = lebesgue_integral_bounded(&g, &m, &tol()).unwrap().enclosure;
        let ec = lebesgue_integral_bounded(&canon, &m, &tol()).unwrap().enclosure;
        prop_assert!(ef.meets(&eg, &int(0)) && ef.meets(&ec, &int(0)));
        let pts = eval_set(&parse_set(&format!("[{p}/30,{p}/30] | [{q}/30,{q}/30]")).unwrap()).unwrap();
        let z = integrate_over(&f, &pts, &m, &tol()).unwrap().enclosure;
        prop_assert_eq!(z, IntegralEnclosure::point(int(0)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn density_measure_is_additive(parts in family(), a in 0i64..=4, b in 0i64..=4, sing in any::<bool>()) {
        let text = if sing { format!("{a} + x^(-1/2)") } else { format!("{a} + {b}*x^2") };
        let f = parse_func(&text).unwrap();
        let c = density_measure_check(&f, &parts).unwrap();
        prop_assert!(c.additive(), "{text}: residual {} widths {}", c.residual, c.widths);
    }
}

#[test]
fn zero_law() {
    let m = Measure::Lebesgue;
    let z = lebesgue_integral_bounded(&parse_func("dirichlet(9,0)*x").unwrap(), &m, &tol()).unwrap().enclosure;
    assert!(z.contains(&int(0)) && z.width() <= tol());
    let n = integrate_over(&parse_func("x^(-1/2)").unwrap(), &IntervalSet::empty(), &m, &tol()).unwrap().enclosure;
    assert_eq!(n, IntegralEnclosure::point(int(0)));
    let w = lebesgue_integral_bounded(&parse_func("x^2 - x^2").unwrap(), &m, &tol()).unwrap().enclosure;
    assert!(w.contains(&int(0)) && w.width() <= tol());
}

#[test]
fn integrals_over_sets() {
    let f = parse_func("x^2").unwrap();
    let e = integrate_over(&f, &cantor_level_rat(1), &Measure::Lebesgue, &tol()).unwrap().enclosure;
    assert!(e.contains(&rat(20, 81)));
    let g = lebesgue_integral_bounded(&parse_func("x^2*indicator(cantor(1))").unwrap(), &Measure::Lebesgue, &tol()).unwrap().enclosure;
    assert!(g.meets(&e, &tol()));
    let d = lebesgue_integral_bounded(&parse_func("x^2").unwrap(), &Measure::Dirac(rat(1, 3)), &tol()).unwrap().enclosure;
    assert_eq!(d, IntegralEnclosure::point(rat(1, 9)));
}

#[test]
fn almost_everywhere_equal_functions_share_integrals() {
    let a = lebesgue_integral_bounded(&parse_func("x + dirichlet(5,0)").unwrap(), &Measure::Lebesgue, &tol()).unwrap().enclosure;
    assert!(a.contains(&rat(1, 2)) && a.width() <= tol());
    let b = lebesgue_integral_bounded(&parse_func("dirichlet(7,2)").unwrap(), &Measure::Lebesgue, &tol()).unwrap().enclosure;
    assert_eq!(b, IntegralEnclosure::point(int(2)));
}

#[test]
fn range_partition_encloses_integral() {
    for n in [4, 16] {
        let r = range_partition(&parse_func("x^2").unwrap(), n).unwrap();
        assert!(r.integral.contains(&rat(1, 3)));
        assert!(r.simple.parts().iter().all(|(_, v)| r.levels.contains(v)));
    }
}

#[test]
fn positive_and_negative_parts() {
    let f = parse_func("x - 1/3").unwrap();
    let (p, n) = split_pos_neg(&f);
    let ip = lebesgue_integral_bounded(&p, &Measure::Lebesgue, &tol()).unwrap().enclosure;
    let in_ = lebesgue_integral_bounded(&n, &Measure::Lebesgue, &tol()).unwrap().enclosure;
    assert!(ip.contains(&rat(2, 9)) && in_.contains(&rat(1, 18)));
    let g = lebesgue_integral_general(&f, &tol(), &int(1000)).unwrap();
    assert!(g.enclosure().unwrap().contains(&rat(1, 6)));
}

#[test]
fn truncations_increase_to_the_limit() {
    match lebesgue_integral_nonneg(&parse_func("x^(-1/2)").unwrap(), &tol(), &int(1000)).unwrap() {
        Truncation::Integrable { enclosure, steps, .. } => {
            assert!(enclosure.contains(&int(2)));
            for w in steps.windows(2) {
                assert!(w[0].n < w[1].n && w[0].enclosure.lo <= w[1].enclosure.hi);
            }
        }
        t => panic!("{t:?}"),
    }
}

#[test]
fn monotone_and_dominated_runs() {
    let t = convergence_run("min(1/sqrt(x), n)", &ConvergenceMode::Monotone, &[1, 2, 4, 8], None, &tol()).unwrap();
    assert!(!t.hypothesis_violated);
    for (row, n) in t.rows.iter().zip([1i64, 2, 4, 8]) {
        assert!(row.integral.contains(&(int(2) - rat(1, n))));
    }
    let g = parse_func("1").unwrap();
    let limit = parse_func("0").unwrap();
    let d = convergence_run("x^n", &ConvergenceMode::Dominated(g), &[1, 2, 4, 8, 16], Some(&limit), &tol()).unwrap();
    assert!(!d.hypothesis_violated && !d.uniform_bound_violated);
    assert!(d.rows.last().unwrap().integral.contains(&rat(1, 17)));
}

#[test]
fn density_measures_are_additive() {
    let f = parse_func("1/sqrt(x)").unwrap();
    let parts: Vec<RatSet> = ["[0,1/4]", "(1/4,1/2)", "[1/2,1]"].iter().map(|s| eval_set(&parse_set(s).unwrap()).unwrap()).collect();
    let c = density_measure_check(&f, &parts).unwrap();
    assert!(c.additive());
    assert!(c.union.contains(&int(2)));
    let nu = Measure::density(parse_func("2*x").unwrap()).unwrap();
    assert!(nu.measure_of(&eval_set(&parse_set("[0,1/2]").unwrap()).unwrap()).unwrap().contains(&rat(1, 4)));
    assert!(Measure::density(parse_func("x - 1/2").unwrap()).is_err());
}

#[test]
fn termwise_series_integration() {
    let r = series_integral_check("x^n*(1-x)", 20, &parse_func("x").unwrap(), &rat(1, 22), &tol()).unwrap();
    assert!(r.consistent());
}

#[test]
fn step_approximation_off_a_small_set() {
    let eps = rat(1, 100);
    let a = step_approx(&parse_func("sin(3*x) + indicator([0,1/3])").unwrap(), &eps).unwrap();
    assert!(a.max_error <= eps);
    assert!(a.exceptional.measure() < eps);
}
