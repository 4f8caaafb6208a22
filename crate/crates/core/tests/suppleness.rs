use std::sync::Arc;

use colombeau::embedding::{embed, example2_net, Atom, AtomicDistribution, Example2Family};
use colombeau::geometry::ClosedSet;
use colombeau::mollifier::{smooth_indicator, Bump, Mollifier, WidthFn};
use colombeau::nets::*;
use colombeau::suppleness::*;
use colombeau::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump() -> Arc<dyn Mollifier> {
    Bump::standard()
}

fn example2_sets() -> (ClosedSet, ClosedSet) {
    (
        ClosedSet::point(0.0).union(&ClosedSet::family(1.0, 1.0)),
        ClosedSet::point(0.0).union(&ClosedSet::family(1.0, -1.0)),
    )
}

fn example2_split(delta: f64, lo: f64, hi: f64, mode: WidthMode) -> DecompositionResult {
    let f = example2_net(Example2Family::default(), bump()).unwrap();
    let (z1, z2) = example2_sets();
    let w = CompactBox::for_net(&f, lo, hi).unwrap();
    decompose(&f, &z1, &z2, delta, w, mode).unwrap()
}

fn probe(x: f64, part: Part) -> ProbeSpec {
    ProbeSpec { x, part }
}

#[test]
fn disjoint_supports_leave_f2_empty() {
    let f = embed(&AtomicDistribution::atoms(vec![Atom::delta(0.5)]), bump()).unwrap();
    let w = CompactBox::for_net(&f, -1.5, 1.5).unwrap();
    let res = decompose(&f, &ClosedSet::point(0.5), &ClosedSet::point(-0.5), 0.2, w, WidthMode::Linear).unwrap();
    for k in 4..=12 {
        let e = 2f64.powi(-k);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert_eq!(res.f2.eval(e, x, 0).unwrap(), 0.0, "eps {e} x {x}");
        }
    }
}

#[test]
fn example2_additivity() {
    for delta in [0.1, 0.02] {
        let res = example2_split(delta, -1.5, 1.5, WidthMode::Linear);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let e = 2f64.powf(rng.gen_range(-20.0..-3.0));
            let x = rng.gen_range(-1.5..1.5);
            let f = res.f.eval(e, x, 0).unwrap();
            let s = res.f1.eval(e, x, 0).unwrap() + res.f2.eval(e, x, 0).unwrap();
            assert!((s - f).abs() <= 1e-12 * f.abs(), "eps {e} x {x}: {s} vs {f}");
        }
    }
}

#[test]
fn f1_vanishes_around_a_point_of_z2_only() {
    let res = example2_split(0.1, -1.5, 1.5, WidthMode::Linear);
    let (r, eps0) = probe_plan(&res, probe(-0.5, Part::F1)).unwrap();
    assert!((r - 0.25).abs() < 1e-9);
    assert!(eps0 >= 0.05);
    let sched = EpsSchedule::default();
    for &e in sched.values().iter().filter(|&&e| e < 0.05) {
        for i in 0..=500 {
            let x = -0.75 + 0.5 * i as f64 / 500.0;
            assert_eq!(res.f1.eval(e, x, 0).unwrap(), 0.0);
        }
    }
    let cert = certify_support(&res, &[probe(-0.5, Part::F1)], &sched).unwrap();
    assert_eq!(cert.probes[0].case, ProbeCase::OutsideTilde);
    assert_eq!(cert.probes[0].verdict, Verdict::ExactZero);
}

#[test]
fn far_probe_is_zero_for_both_parts() {
    let res = example2_split(0.1, -4.0, 4.0, WidthMode::Linear);
    let sched = EpsSchedule::default();
    let cert = certify_support(&res, &[probe(3.0, Part::F1), probe(3.0, Part::F2)], &sched).unwrap();
    assert!(cert.holds());
    assert!(cert.probes.iter().all(|p| p.verdict == Verdict::ExactZero));
    assert_eq!(cert.probes[1].case, ProbeCase::OutsideSupport);
}

#[test]
fn point_of_z1_only_certifies_f2() {
    let res = example2_split(0.1, -1.5, 1.5, WidthMode::Linear);
    let sched = EpsSchedule::default();
    let cert = certify_support(&res, &[probe(1.0, Part::F2), probe(0.25, Part::F2)], &sched).unwrap();
    for p in &cert.probes {
        assert_eq!(p.case, ProbeCase::InZ1);
        assert_eq!(p.verdict, Verdict::ExactZero);
        // Radius min(H, delta)/2; the sampled box is a fraction of it.
        let h = res.z2.dist(p.x).min(0.1);
        assert!((p.ball_radius - h / 2.0).abs() < 1e-12, "{p:?}");
        assert!((p.box_hi - p.x - BALL_FRACTION * p.ball_radius).abs() < 1e-12);
    }
}

#[test]
fn probes_inside_target_are_rejected() {
    let res = example2_split(0.1, -1.5, 1.5, WidthMode::Linear);
    let sched = EpsSchedule::default();
    for p in [probe(0.0, Part::F1), probe(0.25, Part::F1), probe(-1.0, Part::F2)] {
        let err = certify_support(&res, &[p], &sched).unwrap_err();
        assert!(matches!(err, Error::ProbeInsideTarget(_)), "{err}");
        assert!(err.to_string().contains("probe inside target set"));
    }
}

#[test]
fn auto_probes_cover_every_case_without_failures() {
    let sched = EpsSchedule::default();
    for delta in [0.1, 0.02] {
        let res = example2_split(delta, -1.5, 1.5, WidthMode::Linear);
        let probes = auto_probes(&res, &sched, 6);
        let cert = certify_support(&res, &probes, &sched).unwrap();
        assert!(cert.probes.len() >= 20);
        assert!(cert.holds(), "{:?}", cert.probes.iter().filter(|p| p.verdict == Verdict::Fail).collect::<Vec<_>>());
        for case in [ProbeCase::InTilde, ProbeCase::OutsideTilde, ProbeCase::InZ1, ProbeCase::OutsideSupport] {
            assert!(cert.probes.iter().any(|p| p.case == case), "{case:?} missing");
        }
    }
}

#[test]
fn plateau_transfer() {
    let res = example2_split(0.1, -1.5, 1.5, WidthMode::Linear);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5000 {
        let e = 2f64.powf(rng.gen_range(-16.0..-3.0));
        let x = rng.gen_range(-1.5..1.5);
        let eta = res.eta.eval(e, x, 0).unwrap();
        if eta == 1.0 {
            assert_eq!(res.f2.eval(e, x, 0).unwrap(), 0.0);
        }
        if eta == 0.0 {
            assert_eq!(res.f1.eval(e, x, 0).unwrap(), 0.0);
        }
    }
}

#[test]
fn halving_delta_shrinks_tilde_intervals() {
    let (z1, z2) = example2_sets();
    let f = example2_net(Example2Family::default(), bump()).unwrap();
    let w = CompactBox::for_net(&f, -1.5, 1.5).unwrap();
    let mut prev: Option<Vec<(f64, f64)>> = None;
    for delta in [0.16, 0.08, 0.04, 0.02] {
        let iv = decompose(&f, &z1, &z2, delta, w, WidthMode::Linear).unwrap().tilde_intervals;
        if let Some(big) = &prev {
            for &(a, b) in &iv {
                assert!(big.iter().any(|&(p, q)| p <= a + 1e-12 && b <= q + 1e-12));
            }
        }
        prev = Some(iv);
    }
}

#[test]
fn window_must_hold_the_enlarged_sets() {
    let f = example2_net(Example2Family::default(), bump()).unwrap();
    let (z1, z2) = example2_sets();
    let w = CompactBox::for_net(&f, -1.1, 1.1).unwrap();
    assert!(matches!(decompose(&f, &z1, &z2, 0.1, w, WidthMode::Linear), Err(Error::WindowTooSmall { .. })));
}

#[test]
fn log_width_values() {
    assert!((WidthFn::Log.width((-4f64).exp()) - 0.25).abs() < 1e-15);
}

#[test]
fn ginf_decomposition_of_the_log_indicator() {
    let f = Net::constant(1.0).mul(&smooth_indicator(vec![(-1.0, 1.0)], WidthFn::Log).unwrap()).unwrap();
    let w = CompactBox::for_net(&f, -3.0, 3.0).unwrap();
    let (res, rep) = ginf_decompose(
        &f,
        &ClosedSet::interval(-2.0, 0.0),
        &ClosedSet::interval(0.0, 2.0),
        0.1,
        w,
        &EpsSchedule::default(),
    )
    .unwrap();
    assert_eq!(res.width_mode, WidthMode::Log);
    // Every part carries the same logarithmic slope -0.147 n per order.
    for c in [&rep.f, &rep.f1, &rep.f2] {
        for of in &c.fits {
            assert!((of.fit.slope + 0.147 * of.order as f64).abs() < 0.01, "{of:?}");
        }
    }
}

#[test]
fn ginf_decomposition_flags_the_delta() {
    let f = embed(&AtomicDistribution::atoms(vec![Atom::delta(0.0)]), bump()).unwrap();
    let w = CompactBox::for_net(&f, -2.0, 2.0).unwrap();
    let (res, rep) = ginf_decompose(
        &f,
        &ClosedSet::interval(-1.0, 0.0),
        &ClosedSet::interval(0.0, 1.0),
        0.1,
        w,
        &EpsSchedule::default(),
    )
    .unwrap();
    assert!(!rep.f.holds);
    for of in &rep.f.fits[..4] {
        assert!((of.fit.slope + 1.0 + of.order as f64).abs() < 0.1, "{of:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let e = 2f64.powf(rng.gen_range(-20.0..-3.0));
        let x = rng.gen_range(-2.0..2.0);
        let v = res.f.eval(e, x, 0).unwrap();
        let s = res.f1.eval(e, x, 0).unwrap() + res.f2.eval(e, x, 0).unwrap();
        assert!((s - v).abs() <= 1e-12 * v.abs());
    }
}

#[test]
fn default_delta_is_positive() {
    let (z1, z2) = example2_sets();
    let d = default_delta(&z1, &z2);
    assert!(d > 0.0 && d.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn additivity_in_both_modes(
        c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, r in 0usize..3, log in any::<bool>(),
        k in 3.0f64..20.0, x in -2.0f64..2.0
    ) {
        let atoms = vec![Atom { c: c1, coef: 1.5, order: r }, Atom::delta(c2)];
        let f = embed(&AtomicDistribution::atoms(atoms), bump()).unwrap();
        let w = CompactBox::for_net(&f, -2.5, 2.5).unwrap();
        let mode = if log { WidthMode::Log } else { WidthMode::Linear };
        let res = decompose(&f, &ClosedSet::point(c1), &ClosedSet::point(c2), 0.1, w, mode).unwrap();
        let e = 2f64.powf(-k);
        let v = res.f.eval(e, x, 0).unwrap();
        let s = res.f1.eval(e, x, 0).unwrap() + res.f2.eval(e, x, 0).unwrap();
        prop_assert!((s - v).abs() <= 1e-12 * v.abs(), "{} vs {}", s, v);
    }
}
