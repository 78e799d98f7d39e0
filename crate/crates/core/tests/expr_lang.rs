use measura::error::Error;
use measura::exact::Interval;
use measura::expr::{ae_canonicalize, eval_func, eval_set, instantiate, parse_func, parse_set, range_enclosure};
use measura::rat::{int, rat};
use measura::{FuncExpr, Rat};
use proptest::prelude::*;

fn leaf(with_dirichlet: bool) -> impl Strategy<Value = String> {
    let odd = if with_dirichlet { "dirichlet(1,0)" } else { "indicator([1/2,1/2])" };
    prop_oneof![
        Just("x".to_string()),
        Just("pi".to_string()),
        (0i64..50).prop_map(|n| n.to_string()),
        (1i64..9, 1i64..9).prop_map(|(p, q)| format!("{p}/{q}")),
        Just("indicator([0,1/3) | (2/3,1])".to_string()),
        Just(odd.to_string()),
    ]
}

fn expr_with(with_dirichlet: bool) -> impl Strategy<Value = String> {
    leaf(with_dirichlet).prop_recursive(6, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*"])).prop_map(|(a, b, op)| format!("({a}) {op} ({b})")),
            (inner.clone(), 0i64..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner.clone(), prop::sample::select(vec!["sin", "cos", "abs"])).prop_map(|(a, f)| format!("{f}({a})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("min({a}, {b})")),
        ]
    })
}

fn expr() -> impl Strategy<Value = String> {
    expr_with(true)
}

fn cell() -> impl Strategy<Value = (Rat, Rat, Rat)> {
    (0i64..=96, 0i64..=96, 0i64..=96).prop_map(|(a, b, t)| {
        let (a, b) = (a.min(b), a.max(b));
        let (lo, hi) = (rat(a, 96), rat(b, 96));
        let x = &lo + (&hi - &lo) * rat(t, 96);
        (lo, hi, x)
    })
}

proptest! {
    #[test]
    fn printing_round_trips(text in expr()) {
        let f = parse_func(&text).unwrap();
        let again = parse_func(&f.to_string()).unwrap();
        prop_assert_eq!(&again, &f);
        for x in [rat(0, 1), rat(1, 3), rat(5, 7), rat(1, 1)] {
            let (a, b) = (eval_func(&f, &x, &Interval::unit()).unwrap(), eval_func(&again, &x, &Interval::unit()).unwrap());
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn enclosures_contain_point_values(text in expr(), (lo, hi, x) in cell()) {
        let f = parse_func(&text).unwrap();
        let unit = Interval::unit();
        let r = range_enclosure(&f, &Interval::closed(lo, hi), &unit).unwrap();
        if let Ok(v) = eval_func(&f, &x, &unit) {
            let sound = if v.lo == v.hi { r.lo <= v.lo && v.hi <= r.hi } else { r.lo <= v.hi && v.lo <= r.hi };
            prop_assert!(sound, "{} at {}: {:?} against [{:?}, {:?}]", text, x, v, r.lo, r.hi);
        }
    }

    #[test]
    fn splitting_never_widens(text in expr(), (lo, hi, m) in cell()) {
        let f = parse_func(&text).unwrap();
        let unit = Interval::unit();
        let whole = range_enclosure(&f, &Interval::closed(lo.clone(), hi.clone()), &unit).unwrap();
        for part in [Interval::closed(lo, m.clone()), Interval::closed(m, hi)] {
            let r = range_enclosure(&f, &part, &unit).unwrap();
            prop_assert!(whole.lo <= r.lo && r.hi <= whole.hi, "{}", text);
        }
    }

    #[test]
    fn canonical_form_agrees_off_exceptional_points(text in expr_with(false), k in 1i64..997) {
        let unit = Interval::unit();
        let f = parse_func(&text).unwrap();
        let g = ae_canonicalize(&f, &unit).unwrap();
        let x: Rat = rat(k, 997);
        prop_assert_eq!(eval_func(&f, &x, &unit).ok(), eval_func(&g, &x, &unit).ok());
    }
}

#[test]
fn rational_evaluation_is_exact() {
    let f = parse_func("x^3 - 2*x + 1/(x + 1)").unwrap();
    let x = rat(2, 5);
    let want = rat(8, 125) - rat(4, 5) + rat(5, 7);
    assert_eq!(eval_func(&f, &x, &Interval::unit()).unwrap().exact(), Some(want));
    let d = parse_func("dirichlet(3, 2)").unwrap();
    assert_eq!(eval_func(&d, &rat(1, 2), &Interval::unit()).unwrap().exact(), Some(int(3)));
}

#[test]
fn syntax_errors_report_positions() {
    for (text, pos) in [("x + * 2", 5), ("sin(x", 6), ("x $ 1", 3)] {
        match parse_func(text) {
            Err(Error::Syntax { pos: p, .. }) => assert_eq!(p, pos, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
    assert!(parse_set("[0,1").is_err());
    assert!(parse_func("foo(x)").is_err());
}

#[test]
fn set_expressions() {
    assert_eq!(eval_set(&parse_set("cantor(2)").unwrap()).unwrap().measure(), rat(4, 9));
    let s = eval_set(&parse_set("([0,1/2] | [3/4,1]) \\ cantor(1)").unwrap()).unwrap();
    // (1/3, 1/2]: [3/4, 1] lies inside [2/3, 1]
    assert_eq!(s.measure(), rat(1, 2) - rat(1, 3));
    let c = eval_set(&parse_set("[0,1/4] & [1/8,1]").unwrap()).unwrap();
    assert_eq!(c.measure(), rat(1, 8));
}

#[test]
fn templates_substitute_whole_words() {
    assert_eq!(instantiate("n*indicator([1/n,2/n])", 7), "7*indicator([1/7,2/7])");
    assert_eq!(instantiate("min(sin(x), n)", -2), "min(sin(x), (-2))");
    let f: FuncExpr = parse_func(&instantiate("n*x", 4)).unwrap();
    assert_eq!(eval_func(&f, &rat(1, 2), &Interval::unit()).unwrap().exact(), Some(int(2)));
}
