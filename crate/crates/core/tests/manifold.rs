use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use colombeau::embedding::Atom;
use colombeau::manifold::*;
use colombeau::mollifier::{Bump, Mollifier};
use colombeau::nets::{EpsSchedule, Net};
use colombeau::suppleness::{Part, Verdict};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump() -> Arc<dyn Mollifier> {
    Bump::standard()
}

fn delta_fixture() -> ManifoldDecomposition {
    let atlas = make_atlas();
    let u = embed_on_circle(&atlas, &[Atom::delta(0.0)], bump()).unwrap();
    manifold_decompose(&u, &AngleSet::points(vec![0.0]), &AngleSet::points(vec![PI]), 0.1).unwrap()
}

fn mixed_fixture() -> ManifoldDecomposition {
    let atlas = make_atlas();
    let atoms = [
        Atom::delta(1.0),
        Atom { c: 3.0, coef: -2.0, order: 0 },
        Atom { c: 2.0, coef: 1.0, order: 1 },
    ];
    let u = embed_on_circle(&atlas, &atoms, bump()).unwrap();
    let z1 = AngleSet::points(vec![1.0, 2.0]);
    let z2 = AngleSet { angles: vec![2.0], arcs: vec![(2.9, 3.1)] };
    manifold_decompose(&u, &z1, &z2, 0.1).unwrap()
}

#[test]
fn atlas_covers_and_round_trips() {
    let atlas = make_atlas();
    for p in [0.0, PI / 2.0, PI, 3.0 * PI / 2.0] {
        assert!(atlas.charts.iter().any(|c| c.contains(p)), "{p}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let p = rng.gen_range(-PI..PI);
        for c in &atlas.charts {
            if let Some(x) = c.coord(p) {
                assert!(angular_distance(c.angle(x), p) < 1e-14);
            }
        }
    }
}

#[test]
fn transitions_are_angle_shifts() {
    let atlas = make_atlas();
    // Upper overlap (0.4, 2.8): identity; lower overlap (-2.8, -0.4): +2π.
    assert!((atlas.transition(0, 1, 1.0).unwrap() - 1.0).abs() < 1e-15);
    assert!((atlas.transition(0, 1, -1.0).unwrap() - (TAU - 1.0)).abs() < 1e-15);
    assert!((atlas.transition(1, 0, TAU - 1.0).unwrap() + 1.0).abs() < 1e-15);
    assert!(atlas.transition(0, 1, 0.0).is_none());
}

#[test]
fn squared_partition_sums_to_one() {
    let pou = partition_of_unity(&make_atlas()).unwrap();
    let n = 10_000;
    for i in 0..n {
        let p = -PI + TAU * (i as f64 + 0.5) / n as f64;
        assert!((pou.sum_squares(p) - 1.0).abs() <= 1e-10, "{p}");
    }
    // Outside chart 1, and the region only chart 0 covers.
    assert_eq!(pou.chi(1, 0.2), 0.0);
    assert_eq!(pou.chi(0, 0.0), 1.0);
    assert_eq!(pou.chi(1, 0.0), 0.0);
    assert_eq!(pou.chi(0, PI), 0.0);
    assert_eq!(pou.chi(1, PI), 1.0);
}

#[test]
fn reconstruction_identity() {
    let atlas = make_atlas();
    let u = embed_on_circle(&atlas, &[Atom::delta(0.5), Atom { c: 2.7, coef: -1.0, order: 1 }], bump()).unwrap();
    let pou = Arc::new(partition_of_unity(&atlas).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for beta in 0..2 {
        let r = reconstruct(&u, &pou, beta).unwrap();
        let c = &atlas.charts[beta];
        for _ in 0..1000 {
            let e = 2f64.powf(rng.gen_range(-12.0..-2.0));
            let x = rng.gen_range(c.lo + 1e-9..c.hi - 1e-9);
            let want = u.local(beta).eval(e, x, 0).unwrap();
            let got = r.eval(e, x, 0).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "chart {beta} x {x}");
        }
    }
}

#[test]
fn delta_split_on_the_circle() {
    let dec = delta_fixture();
    for k in 5..=14 {
        let e = 2f64.powi(-k);
        for i in 0..=400 {
            let p = -0.5 + i as f64 / 400.0;
            assert_eq!(dec.u2.eval(e, p, 0).unwrap(), 0.0, "eps {e} angle {p}");
        }
    }
}

#[test]
fn zero_splits_into_zeros() {
    let atlas = make_atlas();
    let dec = manifold_decompose(&ManifoldNet::zero(&atlas), &AngleSet::points(vec![0.0]), &AngleSet::points(vec![1.0]), 0.1)
        .unwrap();
    for i in 0..100 {
        let p = -PI + TAU * i as f64 / 100.0;
        assert_eq!(dec.u1.eval(0.01, p, 0).unwrap(), 0.0);
        assert_eq!(dec.u2.eval(0.01, p, 0).unwrap(), 0.0);
    }
}

#[test]
fn additivity_on_both_fixtures() {
    for dec in [delta_fixture(), mixed_fixture()] {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let e = 2f64.powf(rng.gen_range(-20.0..-3.0));
            let p = rng.gen_range(-PI..PI);
            let v = dec.u.eval(e, p, 0).unwrap();
            let s = dec.u1.eval(e, p, 0).unwrap() + dec.u2.eval(e, p, 0).unwrap();
            assert!((s - v).abs() <= 1e-12 * v.abs(), "eps {e} angle {p}: {s} vs {v}");
        }
    }
}

#[test]
fn transformation_law() {
    let atlas = make_atlas();
    let eps: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    let g = ManifoldNet::from_global(&atlas, usize::MAX, "cos", |e, p, n| e * (p + n as f64 * PI / 2.0).cos());
    assert!(check_transformation_law(&g, &eps, 500).unwrap().holds);

    let u = embed_on_circle(&atlas, &[Atom::delta(1.0)], bump()).unwrap();
    let bad = ManifoldNet::new(&atlas, vec![u.local(0).add(&Net::constant(1e-3)).unwrap(), u.local(1).clone()]).unwrap();
    let chk = check_transformation_law(&bad, &eps, 500).unwrap();
    assert!(!chk.holds);
    assert!((chk.max_deviation - 1e-3).abs() < 1e-9);

    for dec in [delta_fixture(), mixed_fixture()] {
        for part in [&dec.u1, &dec.u2] {
            let c = check_transformation_law(part, &eps, 2000).unwrap();
            assert!(c.holds && c.max_deviation <= TRANSFORMATION_TOL, "{c:?}");
        }
    }
}

#[test]
fn circle_certificates() {
    let sched = EpsSchedule::default();
    let probes = |v: &[(f64, Part)]| v.iter().map(|&(angle, part)| CircleProbe { angle, part }).collect::<Vec<_>>();
    let dec = delta_fixture();
    let cert = certify_circle(
        &dec,
        &probes(&[(PI, Part::F1), (2.0, Part::F1), (-1.5, Part::F1), (0.0, Part::F2), (1.0, Part::F2), (-2.0, Part::F2)]),
        &sched,
    )
    .unwrap();
    assert_eq!(cert.failures, 0);
    let dec = mixed_fixture();
    let cert = certify_circle(
        &dec,
        &probes(&[(3.0, Part::F1), (-1.0, Part::F1), (1.5, Part::F1), (1.0, Part::F2), (-2.0, Part::F2), (0.0, Part::F2)]),
        &sched,
    )
    .unwrap();
    assert_eq!(cert.failures, 0);
    assert!(cert.probes.iter().all(|p| p.verdict != Verdict::Fail));
    assert!(certify_circle(&dec, &probes(&[(2.0, Part::F1)]), &sched).is_err());
}

#[test]
fn non_flabby_exponents() {
    let rows = non_flabby_demo(&[1.0, 0.5, 0.2, 0.1], &EpsSchedule::default()).unwrap();
    for r in rows {
        assert!((r.slope_times_c + 1.0).abs() <= 0.1, "{r:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn angle_set_distance_is_geodesic(p in -10.0f64..10.0, a in -PI..PI) {
        let s = AngleSet::points(vec![a]);
        let d = s.dist(p);
        prop_assert!((d - angular_distance(p, a)).abs() < 1e-12);
        prop_assert!(d <= PI + 1e-12);
    }

    #[test]
    fn squares_sum_to_one_anywhere(p in -20.0f64..20.0) {
        let pou = partition_of_unity(&make_atlas()).unwrap();
        prop_assert!((pou.sum_squares(p) - 1.0).abs() <= 1e-10);
    }
}
