//! Distributions embedded as nets by convolution with a scaled mollifier,
//! plus pairings against test functions.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{merge_intervals, PointFamily};
use crate::jet::factorial;
use crate::mollifier::{scaled_derivative, Bump, Mollifier, SmoothIndicator, WidthFn, MAX_DERIVATIVE_ORDER};
use crate::nets::{Domain, Net, Zone};
use crate::quadrature::{gauss_kronrod, Quadrature};

/// `coef · δ^(order)(x - c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub c: f64,
    #[serde(default = "one")]
    pub coef: f64,
    #[serde(default)]
    pub order: usize,
}

fn one() -> f64 {
    1.0
}

impl Atom {
    pub fn delta(c: f64) -> Self {
        Atom { c, coef: 1.0, order: 0 }
    }
}

type DensityFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// A smooth density supported in `[lo, hi]`, evaluated with derivatives.
#[derive(Clone)]
pub struct Density {
    lo: f64,
    hi: f64,
    max_order: usize,
    f: Arc<DensityFn>,
    label: String,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density({} on [{}, {}])", self.label, self.lo, self.hi)
    }
}

impl Density {
    /// `f(x, n)` must vanish with all derivatives outside `[lo, hi]`.
    pub fn new<F>(lo: f64, hi: f64, max_order: usize, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64, usize) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("density support [{lo}, {hi}] is not a proper interval")));
        }
        Ok(Density {
            lo,
            hi,
            max_order,
            f: Arc::new(f),
            label: label.into(),
        })
    }

    /// `mass/radius · φ((x - center)/radius)` with the standard bump.
    pub fn bump(center: f64, radius: f64, mass: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!("density radius must be positive, got {radius}")));
        }
        let b = Bump::standard();
        Density::new(
            center - radius,
            center + radius,
            MAX_DERIVATIVE_ORDER,
            format!("bump(c={center}, r={radius}, m={mass})"),
            move |x, n| mass * scaled_derivative(b.as_ref(), radius, x - center, n),
        )
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn eval(&self, x: f64, n: usize) -> f64 {
        if x <= self.lo || x >= self.hi {
            0.0
        } else {
            (self.f)(x, n)
        }
    }
}

/// Finitely many atoms plus an optional smooth density.
#[derive(Debug, Clone, Default)]
pub struct AtomicDistribution {
    pub atoms: Vec<Atom>,
    pub density: Option<Density>,
}

impl AtomicDistribution {
    pub fn atoms(atoms: Vec<Atom>) -> Self {
        AtomicDistribution { atoms, density: None }
    }

    pub fn with_density(mut self, density: Density) -> Self {
        self.density = Some(density);
        self
    }

    fn validate(&self) -> Result<()> {
        for a in &self.atoms {
            if !(a.c.is_finite() && a.coef.is_finite()) {
                return Err(Error::invalid(format!("atom at {} with coefficient {} is not finite", a.c, a.coef)));
            }
            if a.order > MAX_DERIVATIVE_ORDER {
                return Err(Error::invalid(format!(
                    "atom derivative order {} exceeds {MAX_DERIVATIVE_ORDER}",
                    a.order
                )));
            }
        }
        Ok(())
    }
}

/// `(d * φ_eps)(x) = Σ coef·φ_eps^(r)(x - c) + (density * φ_eps)(x)`.
pub fn embed(d: &AtomicDistribution, kernel: Arc<dyn Mollifier>) -> Result<Net> {
    d.validate()?;
    let mut atoms = d.atoms.clone();
    atoms.sort_by(|a, b| a.c.total_cmp(&b.c));
    let max_r = atoms.iter().map(|a| a.order).max().unwrap_or(0);
    let mut order = MAX_DERIVATIVE_ORDER - max_r;
    if let Some(den) = &d.density {
        order = order.min(den.max_order);
    }
    let density = d.density.clone();
    let zone_atoms: Vec<f64> = atoms.iter().map(|a| a.c).collect();
    let quad = Quadrature::with_tolerances(1e-15, 1e-13);
    let label = format!("embed[{} atoms{}]", atoms.len(), if density.is_some() { " + density" } else { "" });

    let net = Net::new(Domain::REAL_LINE, order, label, move |e, x, n| {
        let start = atoms.partition_point(|a| a.c <= x - e);
        let mut sum: f64 = atoms[start..]
            .iter()
            .take_while(|a| a.c < x + e)
            .map(|a| a.coef * scaled_derivative(kernel.as_ref(), e, x - a.c, a.order + n))
            .fold(0.0, |s, v| s + v);
        if let Some(den) = &density {
            if x > den.lo - e && x < den.hi + e {
                // x - e t stays in the support for t between these values
                let breaks = [(x - den.lo) / e, (x - den.hi) / e];
                let g = |t: f64| den.eval(x - e * t, n) * kernel.value(t);
                // Absolute tolerance relative to the size of the integrand, so
                // cancelling integrals still converge.
                let l1 = gauss_kronrod(&|t: f64| g(t).abs(), -1.0, 1.0).0;
                let q = Quadrature { abs_tol: (1e-14 * l1).max(1e-15), ..quad };
                let v = q.integrate_with_breaks(g, -1.0, 1.0, &breaks).map(|r| r.value).unwrap_or(f64::NAN);
                sum += v;
            }
        }
        sum
    });
    Ok(net.with_zones(move |e| zone_atoms.iter().map(|&c| Zone::around(c, e, e)).collect()))
}

/// `Σ_{n>=1} (δ(x + s/n²) - δ(x - s/n²)) + δ(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example2Family {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "yes")]
    pub center: bool,
}

fn yes() -> bool {
    true
}

impl Default for Example2Family {
    fn default() -> Self {
        Example2Family {
            scale: 1.0,
            center: true,
        }
    }
}

/// Atoms with `s/n² <= TAYLOR_THETA · eps` are summed through an odd Taylor
/// expansion about `x` instead of one by one.
pub const TAYLOR_THETA: f64 = 0.01;
/// Highest odd power kept in the expansion.
pub const TAYLOR_MAX_POWER: usize = 11;

/// Number of retained pairs, `ceil(eps^(-3/2))`.
pub fn example2_terms(eps: f64) -> u64 {
    eps.powf(-1.5).ceil() as u64
}

/// First pair index handled by the Taylor expansion.
fn taylor_start(scale: f64, eps: f64) -> u64 {
    (scale / (TAYLOR_THETA * eps)).sqrt().ceil().max(1.0) as u64
}

/// `Σ_{n=m}^{n_max} n^(-p)` for `p >= 2`: direct summation of the first terms
/// and Euler–Maclaurin for the remainder.
pub fn power_sum(p: u32, m: u64, n_max: u64) -> f64 {
    if m > n_max {
        return 0.0;
    }
    const DIRECT: u64 = 64;
    let direct_end = n_max.min(m.saturating_add(DIRECT - 1));
    let mut sum = 0.0;
    for n in (m..=direct_end).rev() {
        sum += (n as f64).powi(-(p as i32));
    }
    if direct_end == n_max {
        return sum;
    }
    let (a, b) = ((direct_end + 1) as f64, n_max as f64);
    let pf = p as f64;
    let f = |x: f64| x.powf(-pf);
    // j-th derivative of x^-p
    let deriv = |x: f64, j: i32| {
        let coeff: f64 = (0..j).map(|i| -(pf + i as f64)).product();
        coeff * x.powf(-pf - j as f64)
    };
    let integral = (a.powf(1.0 - pf) - b.powf(1.0 - pf)) / (pf - 1.0);
    let bernoulli = [(2, 1.0 / 6.0), (4, -1.0 / 30.0), (6, 1.0 / 42.0), (8, -1.0 / 30.0)];
    let corrections: f64 = bernoulli
        .iter()
        .map(|&(k, bk)| bk / factorial(k as usize) * (deriv(b, k - 1) - deriv(a, k - 1)))
        .sum();
    sum + integral + 0.5 * (f(a) + f(b)) + corrections
}

/// `(Σ_{n<=N(eps)} (δ(x + s/n²) - δ(x - s/n²)) + δ) * φ_eps`.
///
/// Pairs `n >= M = ceil(sqrt(s/(θ eps)))` lie within `θ eps` of the origin
/// and are summed as
/// `2 Σ_{k odd} φ_eps^(m+k)(x) s^k S_k / k!`, `S_k = Σ_{n=M}^{N} n^(-2k)`.
/// Pairs beyond `N(eps)` are dropped; their total is at most
/// `2 s sup|φ'| eps^(-1/2)`, whose coefficient is stored under
/// `truncation_bound_coefficient`.
pub fn example2_net(fam: Example2Family, kernel: Arc<dyn Mollifier>) -> Result<Net> {
    if !(fam.scale > 0.0 && fam.scale.is_finite()) {
        return Err(Error::invalid(format!("example2 scale must be positive, got {}", fam.scale)));
    }
    let bound = 2.0 * fam.scale * kernel.sup_abs_derivative(1);
    let analytic = MAX_DERIVATIVE_ORDER - TAYLOR_MAX_POWER;
    let positive = PointFamily::new(fam.scale, 1.0)?;
    let zone_fam = positive;
    let label = format!("example2(s={}, center={})", fam.scale, fam.center);
    let body = move |e: f64, x: f64, n: usize| example2_eval(&fam, &positive, kernel.as_ref(), e, x, n);
    let net = Net::new(Domain::REAL_LINE, analytic, label, body)
        .with_meta("truncation_bound_coefficient", bound)
        .with_meta("taylor_theta", TAYLOR_THETA)
        .with_zones(move |e| example2_zones(&zone_fam, e));
    Ok(net)
}

fn example2_eval(fam: &Example2Family, pos: &PointFamily, kernel: &dyn Mollifier, e: f64, x: f64, n: usize) -> f64 {
    let s = fam.scale;
    let big_n = example2_terms(e);
    let m = taylor_start(s, e).min(big_n + 1);
    let mut sum = 0.0;
    if fam.center {
        sum += scaled_derivative(kernel, e, x, n);
    }
    // Directly summed pairs n < m. Positive atoms carry -1, mirrored ones +1.
    for (sign, coef) in [(1.0, -1.0), (-1.0, 1.0)] {
        let y = sign * x;
        // atoms s/n² in (y - e, y + e)
        if y + e <= 0.0 {
            continue;
        }
        let n_min = ((s / (y + e)).sqrt().floor() as u64).max(1);
        let n_max = if y - e > 0.0 {
            ((s / (y - e)).sqrt().ceil() as u64).min(m.saturating_sub(1))
        } else {
            m.saturating_sub(1)
        };
        let mut k = n_min;
        while k <= n_max {
            let c = sign * pos.point(k);
            if (x - c).abs() < e {
                sum += coef * scaled_derivative(kernel, e, x - c, n);
            }
            k += 1;
        }
    }
    // The expansion about x is exact up to the k = 13 remainder; for |x| >= e
    // every derivative of φ_eps vanishes at x and the pairs contribute only
    // through that remainder.
    if m <= big_n && x.abs() < e {
        let jet = kernel.jet(x / e, n + TAYLOR_MAX_POWER);
        let mut tail = 0.0;
        for k in (1..=TAYLOR_MAX_POWER).step_by(2) {
            let sk = power_sum(2 * k as u32, m, big_n);
            let d = jet.derivative(n + k) * e.powi(-1 - (n + k) as i32);
            tail += d * s.powi(k as i32) * sk / factorial(k);
        }
        sum += 2.0 * tail;
    }
    sum
}

fn example2_zones(pos: &PointFamily, e: f64) -> Vec<Zone> {
    let s = pos.scale;
    let m = taylor_start(s, e).min(example2_terms(e) + 1);
    let mut iv: Vec<(f64, f64)> = Vec::with_capacity(2 * m as usize + 1);
    for k in 1..m {
        let c = pos.point(k);
        iv.push((c - e, c + e));
        iv.push((-c - e, -c + e));
    }
    let a_m = s / (m as f64 * m as f64);
    iv.push((-e - a_m, e + a_m));
    merge_intervals(iv)
        .into_iter()
        .map(|(lo, hi)| Zone { lo, hi, scale: e })
        .collect()
}

type TestFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A smooth test function supported in `[lo, hi]`.
#[derive(Clone)]
pub struct TestFunction {
    lo: f64,
    hi: f64,
    f: Arc<TestFn>,
    label: String,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({} on [{}, {}])", self.label, self.lo, self.hi)
    }
}

impl TestFunction {
    pub fn new<F>(lo: f64, hi: f64, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("test function support [{lo}, {hi}] is not a proper interval")));
        }
        Ok(TestFunction {
            lo,
            hi,
            f: Arc::new(f),
            label: label.into(),
        })
    }

    /// Equal to 1 on `[a, b]`, 0 outside `[a - margin, b + margin]`.
    pub fn plateau(a: f64, b: f64, margin: f64) -> Result<Self> {
        let ind = SmoothIndicator::new(vec![(a, b)], WidthFn::Fixed(margin))?;
        TestFunction::new(a - margin, b + margin, format!("plateau[{a},{b}]"), move |x| ind.eval(0.5, x, 0))
    }

    /// `exp(-x²)` cut off smoothly between |x| = 2 and |x| = 3.
    pub fn gaussian_window() -> Self {
        let ind = SmoothIndicator::new(vec![(-2.0, 2.0)], WidthFn::Fixed(1.0)).expect("valid window");
        TestFunction::new(-3.0, 3.0, "gaussian_window", move |x| (-x * x).exp() * ind.eval(0.5, x, 0))
            .expect("valid support")
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            (self.f)(x)
        }
    }
}

/// `∫ f_eps(x) ψ(x) dx`, split at the net's zone edges and centres.
pub fn pair(net: &Net, psi: &TestFunction, eps: f64) -> Result<f64> {
    let (lo, hi) = psi.support();
    let dom = net.domain();
    if !(dom.lo < lo && hi < dom.hi) {
        return Err(Error::invalid(format!(
            "test function support [{lo}, {hi}] is not inside the net domain ({}, {})",
            dom.lo, dom.hi
        )));
    }
    net.eval(eps, 0.5 * (lo + hi), 0)?;
    let mut breaks: Vec<f64> = net
        .zones(eps)
        .iter()
        .flat_map(|z| [z.lo, 0.5 * (z.lo + z.hi), z.hi])
        .filter(|&t| t > lo && t < hi)
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let quad = Quadrature {
        abs_tol: 1e-13,
        rel_tol: 1e-8,
        max_intervals: 4000usize.max(4 * breaks.len()),
    };
    let r = quad.integrate_with_breaks(
        |x| {
            let v = psi.value(x);
            if v == 0.0 {
                0.0
            } else {
                v * net.eval(eps, x, 0).unwrap_or(f64::NAN)
            }
        },
        lo,
        hi,
        &breaks,
    )?;
    if !r.value.is_finite() {
        return Err(Error::invalid("pairing integrand is not finite"));
    }
    Ok(r.value)
}

/// `S_N = Σ_{n<=N} ψ(point(n))` for each requested `N`.
pub fn pairing_partial_sums(fam: &PointFamily, psi: &TestFunction, n_list: &[u64]) -> Vec<(u64, f64)> {
    let mut order: Vec<usize> = (0..n_list.len()).collect();
    order.sort_by_key(|&i| n_list[i]);
    let mut out = vec![(0, 0.0); n_list.len()];
    let (mut n, mut sum) = (0u64, 0.0f64);
    for i in order {
        while n < n_list[i] {
            n += 1;
            sum += psi.value(fam.point(n));
        }
        out[i] = (n_list[i], sum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_sum_matches_direct_summation() {
        for p in [2u32, 4, 6] {
            for (m, n) in [(1u64, 10u64), (5, 500), (30, 20_000)] {
                let direct: f64 = (m..=n).rev().map(|k| (k as f64).powi(-(p as i32))).sum();
                let v = power_sum(p, m, n);
                assert!((v - direct).abs() <= 1e-14 * direct, "p={p} m={m} n={n}: {v} vs {direct}");
            }
        }
        assert_eq!(power_sum(2, 10, 9), 0.0);
    }

    #[test]
    fn atoms_vanish_away_from_support() {
        let net = embed(&AtomicDistribution::atoms(vec![Atom::delta(0.0)]), Bump::standard()).unwrap();
        assert_eq!(net.eval(0.1, 0.2, 0).unwrap(), 0.0);
        assert_eq!(net.eval(0.1, 0.1, 0).unwrap(), 0.0);
    }

    #[test]
    fn terms_count() {
        assert_eq!(example2_terms(0.25), 8);
        assert_eq!(example2_terms(2f64.powi(-20)), 1 << 30);
    }

    #[test]
    fn partial_sums_in_requested_order() {
        let psi = TestFunction::plateau(-1.0, 1.0, 0.5).unwrap();
        let fam = PointFamily::new(1.0, 1.0).unwrap();
        let s = pairing_partial_sums(&fam, &psi, &[100, 10]);
        assert_eq!(s, vec![(100, 100.0), (10, 10.0)]);
    }
}
