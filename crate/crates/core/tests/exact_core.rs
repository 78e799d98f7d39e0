use measura::exact::{
    cantor_level, cantor_level_rat, density_witness, limit_measure, measure_rat, null_cover, outer_measure_of_cover, Direction, Interval,
    IntervalSet, NestedFamily,
};
use measura::rat::{int, rat};
use measura::scalar::Field;
use measura::{Rat, RatSet};
use num_bigint::BigInt;
use proptest::prelude::*;

fn iv() -> impl Strategy<Value = Interval<Rat>> {
    prop::sample::select(vec![60i64, 49, 64, 81]).prop_flat_map(|d| {
        (0..=d, 0..=d, any::<bool>(), any::<bool>()).prop_map(move |(a, b, lc, hc)| {
            let (a, b) = (a.min(b), a.max(b));
            Interval::new(rat(a, d), rat(b, d), lc, hc).unwrap_or_else(|| Interval::point(rat(a, d)))
        })
    })
}

fn set() -> impl Strategy<Value = RatSet> {
    prop::collection::vec(iv(), 0..6).prop_map(IntervalSet::normalize)
}

fn big_rat() -> impl Strategy<Value = Rat> {
    (any::<i64>(), 1i64..i64::MAX, 0u32..3).prop_map(|(n, d, s)| {
        let scale = BigInt::from(1u64 << 40).pow(s);
        Rat::new(BigInt::from(n) * &scale, BigInt::from(d))
    })
}

proptest! {
    #[test]
    fn subset_agrees_with_difference(a in set(), b in set()) {
        prop_assert_eq!(a.is_subset(&b), a.difference(&b).is_empty());
        let u = a.union(&b);
        prop_assert!(a.is_subset(&u) && b.is_subset(&u));
        prop_assert!(a.intersect(&b).is_subset(&a));
    }

    #[test]
    fn fast_order_agrees_with_ord(p in big_rat(), q in big_rat()) {
        prop_assert_eq!(p.order(&q), p.cmp(&q));
        prop_assert_eq!(p.order(&p), std::cmp::Ordering::Equal);
    }

    #[test]
    fn measure_matches_summed_lengths(a in set()) {
        let naive = a.components().iter().fold(int(0), |acc, c| acc + (&c.hi - &c.lo));
        prop_assert_eq!(a.measure(), naive.clone());
        prop_assert_eq!(measure_rat(&a), naive);
    }

    #[test]
    fn inclusion_exclusion(a in set(), b in set()) {
        prop_assert_eq!(a.union(&b).measure() + a.intersect(&b).measure(), a.measure() + b.measure());
        prop_assert_eq!(a.difference(&b).measure(), a.measure() - a.intersect(&b).measure());
    }

    #[test]
    fn subadditivity(parts in prop::collection::vec(set(), 1..8)) {
        let union = parts.iter().fold(IntervalSet::empty(), |acc, p| acc.union(p));
        let total = parts.iter().fold(int(0), |acc, p| acc + p.measure());
        prop_assert!(union.measure() <= total);
    }

    #[test]
    fn canonical_form_is_idempotent(raw in prop::collection::vec(iv(), 0..8), probes in prop::collection::vec((0i64..=720, 1i64..=720), 128)) {
        let once = IntervalSet::normalize(raw.clone());
        prop_assert_eq!(IntervalSet::normalize(once.components().to_vec()), once.clone());
        for (n, d) in probes {
            let x = rat(n.min(d), d);
            prop_assert_eq!(once.contains(&x), raw.iter().any(|c| c.contains(&x)));
        }
    }

    #[test]
    fn complement_is_involutive(a in set()) {
        let unit = Interval::unit();
        let c = a.complement(&unit);
        prop_assert_eq!(c.measure(), int(1) - a.measure());
        prop_assert_eq!(c.complement(&unit), a.clone());
        prop_assert!(c.intersect(&a).is_empty());
    }

    #[test]
    fn translation_invariance(a in set(), k in -20i64..=20) {
        let ambient = Interval::closed(int(-3), int(4));
        let t = a.translate(&rat(k, 7), &ambient).unwrap();
        prop_assert_eq!(t.measure(), a.measure());
        prop_assert_eq!(t.translate(&rat(-k, 7), &ambient).unwrap(), a);
    }

    #[test]
    fn membership_matches_components(a in set(), n in 0i64..=60) {
        let x = rat(n, 60);
        prop_assert_eq!(a.contains(&x), a.components().iter().any(|c| c.contains(&x)));
    }

    #[test]
    fn density_witness_bound(a in set()) {
        prop_assume!(a.measure() > int(0));
        let p = rat(9, 10);
        let u = density_witness(&a, &p).unwrap();
        let inside = a.intersect(&IntervalSet::from_interval(u.clone())).measure();
        prop_assert!(inside >= p * u.length());
    }
}

#[test]
fn cantor_levels_agree_across_constructions() {
    for n in 0..=8 {
        let fast = cantor_level_rat(n);
        assert_eq!(fast, cantor_level::<Rat>(n));
        let float: IntervalSet<f64> = cantor_level(n);
        assert!((float.measure() - (2.0f64 / 3.0).powi(n as i32)).abs() < 1e-12);
        assert!(cantor_level_rat(n + 1).is_subset(&fast));
    }
}

#[test]
fn cantor_limit_report() {
    let r = limit_measure(&NestedFamily::cantor(), 12).unwrap();
    assert!(r.strict);
    for (n, m) in r.measures.iter().enumerate() {
        assert_eq!(*m, Rat::new(BigInt::from(2).pow(n as u32), BigInt::from(3).pow(n as u32)));
    }
}

#[test]
fn increasing_family_and_nesting_failure() {
    let grow = NestedFamily::new(Direction::Increasing, |n| {
        IntervalSet::from_interval(Interval::closed(int(0), int(1) - rat(1, 1 << n.min(60))))
    });
    let r = limit_measure(&grow, 10).unwrap();
    assert_eq!(r.bound, int(1) - rat(1, 1024));
    let broken = NestedFamily::new(Direction::Decreasing, |n| {
        IntervalSet::from_interval(Interval::closed(rat(n as i64, 10), rat(n as i64 + 1, 10)))
    });
    assert!(limit_measure(&broken, 3).is_err());
}

#[test]
fn null_covers_are_open_and_short() {
    let fam = NestedFamily::cantor();
    for eps in [rat(1, 2), rat(1, 10), rat(1, 100)] {
        let c = null_cover(&fam, &eps, 64).unwrap();
        assert!(c.total_length < eps);
        assert!(c.intervals.iter().all(|iv| !iv.lo_closed && !iv.hi_closed));
        let (covers, total) = outer_measure_of_cover(&c, &fam.level(c.level));
        assert!(covers);
        let merged = IntervalSet::normalize(c.intervals.clone());
        assert!(merged.measure() <= total);
    }
    assert!(null_cover(&fam, &int(0), 64).is_err());
}
