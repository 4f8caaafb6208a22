use std::sync::Arc;

use colombeau::embedding::*;
use colombeau::geometry::PointFamily;
use colombeau::mollifier::{moment_bump, scaled_derivative, Bump, Mollifier};
use colombeau::nets::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump() -> Arc<dyn Mollifier> {
    Bump::standard()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    least_squares(&pts.iter().map(|&(e, v)| (e.ln(), v.ln())).collect::<Vec<_>>()).0
}

fn real(lo: f64, hi: f64) -> CompactBox {
    CompactBox::new(Domain::REAL_LINE, lo, hi).unwrap()
}

#[test]
fn delta_is_the_scaled_bump() {
    let net = embed(&AtomicDistribution::atoms(vec![Atom::delta(0.0)]), bump()).unwrap();
    assert_eq!(net.eval(0.25, 0.0, 0).unwrap(), 4.0 * Bump::standard().value(0.0));
}

#[test]
fn delta_derivative() {
    let d1 = Atom { c: 0.0, coef: 1.0, order: 1 };
    let net = embed(&AtomicDistribution::atoms(vec![d1]), bump()).unwrap();
    let b = Bump::standard();
    for (e, x) in [(0.25, 0.1), (0.1, -0.03), (0.01, 0.004)] {
        assert_eq!(net.eval(e, x, 0).unwrap(), scaled_derivative(b.as_ref(), e, x, 1));
    }
    let fit = fit_order(&net, &real(-1.0, 1.0), 0, &EpsSchedule::default()).unwrap();
    assert!((fit.slope + 2.0).abs() < 0.05, "{}", fit.slope);
}

#[test]
fn moment_kernel_embeds_density_to_third_order() {
    let m: Arc<dyn Mollifier> = Arc::new(moment_bump(2).unwrap());
    let dist = AtomicDistribution::default().with_density(Density::bump(0.0, 1.0, 1.0).unwrap());
    let emb = embed(&dist, m).unwrap();
    let b = Bump::standard();
    let direct = Net::new(Domain::REAL_LINE, 8, "density", move |_, x, n| b.derivative(x, n));
    let err = emb.sub(&direct).unwrap();
    let sched = EpsSchedule::dyadic(2, 8).unwrap();
    let fit = fit_order(&err, &real(-0.5, 0.5), 0, &sched).unwrap();
    assert!(fit.slope >= 2.8, "{fit:?}");
}

#[test]
fn pairing_converges_to_density_integral() {
    let psi = TestFunction::gaussian_window();
    let exact = simpson(|x| Bump::standard().value(x) * psi.value(x), -1.0, 1.0, 20_000);
    let dist = AtomicDistribution::default().with_density(Density::bump(0.0, 1.0, 1.0).unwrap());
    for (kernel, min_slope) in [(bump(), 1.0), (Arc::new(moment_bump(2).unwrap()) as Arc<dyn Mollifier>, 2.8)] {
        let net = embed(&dist, kernel).unwrap();
        let pts: Vec<(f64, f64)> = (1..=5)
            .map(|k| {
                let e = 2f64.powi(-k);
                (e, (pair(&net, &psi, e).unwrap() - exact).abs())
            })
            .collect();
        assert!(slope(&pts) >= min_slope, "{pts:?}");
    }
}

#[test]
fn delta_pairing_approaches_point_value() {
    let psi = TestFunction::gaussian_window();
    for c in [0.0, 0.4, -1.3] {
        let net = embed(&AtomicDistribution::atoms(vec![Atom::delta(c)]), bump()).unwrap();
        let v = pair(&net, &psi, 2f64.powi(-10)).unwrap();
        assert!((v - psi.value(c)).abs() <= 1e-3, "c {c}: {v}");
    }
    assert_eq!(pair(&Net::zero(), &psi, 0.1).unwrap(), 0.0);
}

#[test]
fn pairing_is_linear() {
    let psi = TestFunction::gaussian_window();
    let f = embed(&AtomicDistribution::atoms(vec![Atom::delta(0.3)]), bump()).unwrap();
    let g = embed(&AtomicDistribution::atoms(vec![Atom { c: -0.2, coef: 2.0, order: 1 }]), bump()).unwrap();
    for e in [0.2, 0.05, 0.01] {
        let lhs = pair(&f.add(&g).unwrap(), &psi, e).unwrap();
        let rhs = pair(&f, &psi, e).unwrap() + pair(&g, &psi, e).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

/// Every retained pair summed one by one.
fn example2_brute(eps: f64, x: f64) -> f64 {
    let b = Bump::standard();
    let phi = |y: f64| scaled_derivative(b.as_ref(), eps, y, 0);
    let mut s = phi(x);
    for n in 1..=example2_terms(eps) {
        let a = 1.0 / (n * n) as f64;
        s += phi(x + a) - phi(x - a);
    }
    s
}

#[test]
fn example2_against_brute_force() {
    let net = example2_net(Example2Family::default(), bump()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in [3, 6, 9] {
        let eps = 2f64.powi(-k);
        for _ in 0..200 {
            let x: f64 = if rng.gen_bool(0.5) { rng.gen_range(-0.05..0.05) } else { rng.gen_range(-1.2..1.2) };
            let got = net.eval(eps, x, 0).unwrap();
            let want = example2_brute(eps, x);
            let scale = Bump::standard().value(0.0) / eps;
            assert!((got - want).abs() <= 1e-9 * scale, "eps {eps} x {x}: {got} vs {want}");
        }
    }
}

#[test]
fn example2_spot_values() {
    let net = example2_net(Example2Family::default(), bump()).unwrap();
    let peak = Bump::standard().value(0.0);
    for eps in [0.25, 0.1, 0.01] {
        assert!((net.eval(eps, 1.0, 0).unwrap() + peak / eps).abs() < 1e-12 / eps);
        assert_eq!(net.eval(eps, 5.0, 0).unwrap(), 0.0);
    }
    let bound = net.meta()["truncation_bound_coefficient"];
    assert!((bound - 2.0 * Bump::standard().sup_abs_derivative(1)).abs() < 1e-12);
}

#[test]
fn example2_pile_up_slope() {
    let net = example2_net(Example2Family::default(), bump()).unwrap();
    let m = is_moderate(&net, &real(-0.1, 0.1), &[0], &EpsSchedule::default(), DEFAULT_SLOPE_FLOOR).unwrap();
    assert!(m.holds);
    assert!((m.fits[0].fit.slope + 1.5).abs() < 0.2, "{}", m.fits[0].fit.slope);
}

#[test]
fn partial_sums_diverge() {
    let psi = TestFunction::plateau(-1.0, 1.0, 0.5).unwrap();
    let fam = PointFamily::new(1.0, 1.0).unwrap();
    let ns = [10u64, 1000, 100_000];
    let sums = pairing_partial_sums(&fam, &psi, &ns);
    for &(n, s) in &sums {
        assert_eq!(s, n as f64);
    }
    let doubled = pairing_partial_sums(&fam, &psi, &[20, 2000, 200_000]);
    for (a, b) in sums.iter().zip(&doubled) {
        assert!(b.1 - a.1 >= a.0 as f64 - 1.0);
    }
}

#[test]
fn embeddings_are_moderate() {
    let sched = EpsSchedule::dyadic(3, 14).unwrap();
    let atoms = vec![
        Atom::delta(0.0),
        Atom { c: 0.5, coef: -3.0, order: 1 },
        Atom { c: -0.4, coef: 0.5, order: 2 },
    ];
    let dist = AtomicDistribution::atoms(atoms).with_density(Density::bump(0.2, 0.5, 2.0).unwrap());
    let net = embed(&dist, bump()).unwrap();
    for k in [real(-1.0, 1.0), real(0.4, 0.6), real(-2.0, -1.0)] {
        assert!(is_moderate(&net, &k, &[0, 1, 2, 3], &sched, DEFAULT_SLOPE_FLOOR).unwrap().holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn embedding_is_linear(
        a in -3.0f64..3.0, b in -3.0f64..3.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0,
        r in 0usize..3, e in 1e-4f64..0.5, x in -1.5f64..1.5
    ) {
        let f = vec![Atom { c: c1, coef: 1.0, order: r }];
        let g = vec![Atom { c: c2, coef: 1.0, order: 0 }];
        let combo = vec![Atom { c: c1, coef: a, order: r }, Atom { c: c2, coef: b, order: 0 }];
        let ef = embed(&AtomicDistribution::atoms(f), bump()).unwrap().eval(e, x, 0).unwrap();
        let eg = embed(&AtomicDistribution::atoms(g), bump()).unwrap().eval(e, x, 0).unwrap();
        let ec = embed(&AtomicDistribution::atoms(combo), bump()).unwrap().eval(e, x, 0).unwrap();
        let want = a * ef + b * eg;
        prop_assert!((ec - want).abs() <= 1e-12 * (a.abs() * ef.abs() + b.abs() * eg.abs()).max(1e-300));
    }

    #[test]
    fn embedding_support(c in -1.0f64..1.0, e in 1e-4f64..0.5, off in 0.0f64..2.0, left in any::<bool>(), r in 0usize..3) {
        let net = embed(&AtomicDistribution::atoms(vec![Atom { c, coef: 1.0, order: r }]), bump()).unwrap();
        let x = if left { -1.0 - e - off } else { 1.0 + e + off };
        prop_assert_eq!(net.eval(e, x, 0).unwrap(), 0.0);
    }
}
