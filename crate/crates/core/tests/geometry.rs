use colombeau::geometry::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn family_brute(scale: f64, sign: f64, x: f64, n_max: u64) -> f64 {
    let mut d = x.abs();
    for n in 1..=n_max {
        d = d.min((x - sign * scale / (n * n) as f64).abs());
    }
    d
}

fn example2_sets() -> (ClosedSet, ClosedSet) {
    let z1 = ClosedSet::point(0.0).union(&ClosedSet::family(1.0, 1.0));
    let z2 = ClosedSet::point(0.0).union(&ClosedSet::family(1.0, -1.0));
    (z1, z2)
}

#[test]
fn family_distance_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = ClosedSet::family(1.0, 1.0);
    for _ in 0..1000 {
        // Mostly near the accumulation point, where candidates are dense.
        let x: f64 = if rng.gen_bool(0.5) { rng.gen_range(-0.05..0.05) } else { rng.gen_range(-1.5..1.5) };
        let d = s.distance(x).unwrap();
        let oracle = family_brute(1.0, 1.0, x, 1_000_000);
        // Points beyond n = 10^6 sit within 1e-12 of 0.
        assert!((d - oracle).abs() <= 1e-12, "x {x}: {d} vs {oracle}");
    }
    assert!((s.distance(0.3).unwrap() - family_brute(1.0, 1.0, 0.3, 1_000_000)).abs() < 1e-15);
}

#[test]
fn distance_examples() {
    assert_eq!(ClosedSet::point(0.0).distance(0.3).unwrap(), 0.3);
    assert_eq!(ClosedSet::interval(0.0, 1.0).distance(0.5).unwrap(), 0.0);
    assert!(ClosedSet::empty().distance(0.0).is_err());
}

#[test]
fn enlargement_examples() {
    let p = ClosedSet::point(0.0);
    let inside = p.enlarge(0.1).unwrap();
    assert!(inside(0.05));
    assert!(!inside(0.1));
    let f = ClosedSet::family(1.0, 1.0);
    let near = f.enlarge(0.01).unwrap();
    let brute = family_brute(1.0, 1.0, 0.2, 100_000);
    assert_eq!(near(0.2), brute < 0.01);
}

#[test]
fn tilde_of_separated_points_by_dense_sampling() {
    let t = TildeSet::new(ClosedSet::point(0.0), ClosedSet::point(1.0), 0.25).unwrap();
    let iv = t.intervals(-2.0, 2.0).unwrap();
    assert_eq!(iv.len(), 1);
    assert!((iv[0].0 + 0.25).abs() < 1e-12 && (iv[0].1 - 0.25).abs() < 1e-12);
    let m = 100_000;
    for i in 0..=m {
        let x = -2.0 + 4.0 * i as f64 / m as f64;
        let inside = iv.iter().any(|&(a, b)| x >= a && x <= b);
        assert_eq!(inside, t.contains(x), "x {x}");
    }
}

#[test]
fn tilde_keeps_only_shared_points_of_z2() {
    let z2 = ClosedSet::point(0.0).union(&ClosedSet::point(1.0));
    for delta in [0.05, 0.5, 2.0] {
        let t = TildeSet::new(ClosedSet::point(0.0), z2.clone(), delta).unwrap();
        assert!(t.contains(0.0));
        assert!(!t.contains(1.0));
    }
}

#[test]
fn example2_tilde_boundaries_are_roots() {
    let (z1, z2) = example2_sets();
    for delta in [0.1, 0.02] {
        let t = TildeSet::new(z1.clone(), z2.clone(), delta).unwrap();
        let iv = t.intervals(-1.5, 1.5).unwrap();
        assert!(!iv.is_empty());
        for &(a, b) in &iv {
            for x in [a, b] {
                assert!(t.gap(x).abs() <= 1e-9, "delta {delta}, boundary {x}: g = {}", t.gap(x));
            }
        }
    }
}

#[test]
fn shrinking_delta_shrinks_tilde() {
    let (z1, z2) = example2_sets();
    let mut prev: Option<Vec<(f64, f64)>> = None;
    for delta in [0.2, 0.1, 0.05, 0.025] {
        let iv = TildeSet::new(z1.clone(), z2.clone(), delta).unwrap().intervals(-1.5, 1.5).unwrap();
        if let Some(big) = &prev {
            for &(a, b) in &iv {
                assert!(big.iter().any(|&(p, q)| p <= a + 1e-12 && b <= q + 1e-12), "[{a}, {b}] escapes {big:?}");
            }
        }
        prev = Some(iv);
    }
}

fn assert2_fixtures() -> Vec<(ClosedSet, ClosedSet, f64)> {
    let (e1, e2) = example2_sets();
    vec![
        (ClosedSet::point(0.0), ClosedSet::point(1.0), 0.25),
        (ClosedSet::point(0.0), ClosedSet::point(0.0), 0.2),
        (e1.clone(), e2.clone(), 0.1),
        (e1, e2, 0.02),
        (ClosedSet::interval(-1.0, 0.0), ClosedSet::interval(0.0, 1.0), 0.3),
        (
            ClosedSet::interval(-2.0, -1.0).union(&ClosedSet::point(0.5)),
            ClosedSet::family(0.5, -1.0).union(&ClosedSet::interval(0.4, 0.6)),
            0.15,
        ),
    ]
}

#[test]
fn assertion_two_fixtures() {
    for (i, (z1, z2, delta)) in assert2_fixtures().into_iter().enumerate() {
        let rep = assert2_check(&z1, &z2, delta, 100_000, i as u64).unwrap();
        assert!(rep.holds(), "fixture {i}: {rep:?}");
        assert!(rep.samples >= 100_000);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_one_lipschitz(x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let (z1, z2) = example2_sets();
        let s = z1.union(&z2).union(&ClosedSet::interval(1.5, 2.0));
        prop_assert!((s.dist(x) - s.dist(y)).abs() <= (x - y).abs() + 1e-15);
    }

    #[test]
    fn membership_iff_zero_distance(x in -2.0f64..2.0, n in 1u64..2000) {
        let s = ClosedSet::family(1.0, 1.0).union(&ClosedSet::interval(-1.0, -0.5));
        prop_assert_eq!(s.contains(x), s.dist(x) == 0.0);
        let member = 1.0 / (n * n) as f64;
        prop_assert!(s.contains(member));
    }

    #[test]
    fn tilde_sandwich(x in -1.5f64..1.5, delta in 0.01f64..0.3) {
        let (z1, z2) = example2_sets();
        let t = TildeSet::new(z1.clone(), z2.clone(), delta).unwrap();
        if z1.contains(x) {
            prop_assert!(t.contains(x));
        }
        if t.contains(x) {
            prop_assert!(z1.dist(x) <= delta + 1e-12);
            if z2.contains(x) {
                prop_assert!(z1.contains(x));
            }
        }
    }
}
