//! Compactly supported bumps, scaled mollifier families and smoothed
//! indicators.
//!
//! The base profile is `c·exp(-1/(1-t²))` on `(-1, 1)`, normalized to unit
//! mass. Its derivatives come from Taylor arithmetic on the exponent, and its
//! antiderivative is tabulated at 4097 nodes with cubic Hermite interpolation
//! on the exact slopes, which keeps the smoothed indicators in closed form:
//! `1_[p,q] * φ_h (x) = Φ((x-p)/h) - Φ((x-q)/h)`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::merge_intervals;
use crate::jet::{binomial, Jet};
use crate::nets::{Domain, Net, Zone};
use crate::quadrature::{gauss_kronrod, Quadrature};

/// Highest derivative order served analytically by the bumps.
pub const MAX_DERIVATIVE_ORDER: usize = 24;
pub const CDF_INTERVALS: usize = 4096;
pub const MAX_MOMENT_ORDER: usize = 10;
pub const MAX_CONDITION: f64 = 1e12;

/// A unit-mass profile supported in `[-1, 1]`.
pub trait Mollifier: Send + Sync + fmt::Debug {
    /// Derivatives `0..=n` at `t`, as a jet.
    fn jet(&self, t: f64, n: usize) -> Jet;

    fn value(&self, t: f64) -> f64 {
        self.jet(t, 0).value()
    }

    fn derivative(&self, t: f64, n: usize) -> f64 {
        if n == 0 {
            self.value(t)
        } else {
            self.jet(t, n).derivative(n)
        }
    }

    fn name(&self) -> String;

    /// `sup |φ^(k)|` by a dense grid with one refinement step.
    fn sup_abs_derivative(&self, k: usize) -> f64 {
        let grid = 20_000;
        let mut best = (0.0f64, 0.0f64);
        for i in 0..=grid {
            let t = -1.0 + 2.0 * i as f64 / grid as f64;
            let v = self.derivative(t, k).abs();
            if v > best.0 {
                best = (v, t);
            }
        }
        let h = 2.0 / grid as f64;
        for i in 0..=200 {
            let t = best.1 - h + 2.0 * h * i as f64 / 200.0;
            best.0 = best.0.max(self.derivative(t, k).abs());
        }
        best.0
    }
}

fn raw_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / ((1.0 - t) * (1.0 + t))).exp()
    }
}

/// Jet of `exp(-1/(1-t²))` at `t`.
fn raw_bump_jet(t: f64, n: usize) -> Jet {
    let v = raw_bump(t);
    if v == 0.0 {
        return Jet::zero(n);
    }
    let mut u = vec![0.0; n + 1];
    u[0] = (1.0 - t) * (1.0 + t);
    if n >= 1 {
        u[1] = -2.0 * t;
    }
    if n >= 2 {
        u[2] = -1.0;
    }
    let mut g = Jet::from_coeffs(u).recip().scale(-1.0);
    // Use the directly evaluated exponential for the constant term.
    let mut c = g.coeffs().to_vec();
    c[0] = 0.0;
    g = Jet::from_coeffs(c);
    g.exp().scale(v)
}

#[derive(Clone)]
pub struct Bump {
    raw_integral: f64,
    norm: f64,
    cdf: Vec<f64>,
    slopes: Vec<f64>,
}

impl fmt::Debug for Bump {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Bump")
            .field("raw_integral", &self.raw_integral)
            .field("norm", &self.norm)
            .finish()
    }
}

impl Bump {
    /// Builds the normalized bump and its antiderivative table.
    pub fn normalize() -> Result<Bump> {
        let quad = Quadrature::with_tolerances(1e-16, 1e-13);
        let raw_integral = quad.integrate(raw_bump, -1.0, 1.0)?.value;
        let norm = 1.0 / raw_integral;

        let dt = 2.0 / CDF_INTERVALS as f64;
        let node = |i: usize| -1.0 + dt * i as f64;
        let mut cdf = Vec::with_capacity(CDF_INTERVALS + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        cdf.push(0.0);
        for i in 0..CDF_INTERVALS {
            let (piece, _) = gauss_kronrod(&raw_bump, node(i), node(i + 1));
            // Neumaier summation.
            let t = sum + piece;
            comp += if sum.abs() >= piece.abs() {
                (sum - t) + piece
            } else {
                (piece - t) + sum
            };
            sum = t;
            cdf.push(sum + comp);
        }
        let total = *cdf.last().expect("table is nonempty");
        for v in &mut cdf {
            *v /= total;
        }
        // Enforce Φ(-t) = 1 - Φ(t) on the nodes.
        let sym: Vec<f64> = (0..=CDF_INTERVALS)
            .map(|i| 0.5 * (cdf[i] + 1.0 - cdf[CDF_INTERVALS - i]))
            .collect();
        let mut cdf = sym;
        cdf[0] = 0.0;
        cdf[CDF_INTERVALS / 2] = 0.5;
        cdf[CDF_INTERVALS] = 1.0;
        let slopes = (0..=CDF_INTERVALS).map(|i| raw_bump(node(i)) / total).collect();
        Ok(Bump {
            raw_integral,
            norm,
            cdf,
            slopes,
        })
    }

    /// Process-wide shared instance.
    pub fn standard() -> Arc<Bump> {
        static BUMP: OnceLock<Arc<Bump>> = OnceLock::new();
        BUMP.get_or_init(|| Arc::new(Bump::normalize().expect("bump normalization converges")))
            .clone()
    }

    /// `∫ exp(-1/(1-t²)) dt` over `[-1, 1]`.
    pub fn raw_integral(&self) -> f64 {
        self.raw_integral
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `Φ(t) = ∫_{-1}^{t} φ`.
    pub fn cdf(&self, t: f64) -> f64 {
        if t <= -1.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        if t > 0.0 {
            // Evaluating the upper half by reflection keeps rounding monotone.
            return 1.0 - self.cdf(-t);
        }
        let dt = 2.0 / CDF_INTERVALS as f64;
        let pos = (t + 1.0) / dt;
        let i = (pos.floor() as usize).min(CDF_INTERVALS - 1);
        let s = pos - i as f64;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (mut m0, mut m1) = (self.slopes[i] * dt, self.slopes[i + 1] * dt);
        // Fritsch–Carlson limiter.
        let delta = y1 - y0;
        if delta <= 0.0 {
            m0 = 0.0;
            m1 = 0.0;
        } else {
            let (a, b) = (m0 / delta, m1 / delta);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                m0 *= tau;
                m1 *= tau;
            }
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        (h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1).clamp(0.0, 1.0)
    }

    pub fn cdf_table(&self) -> &[f64] {
        &self.cdf
    }
}

impl Mollifier for Bump {
    fn jet(&self, t: f64, n: usize) -> Jet {
        raw_bump_jet(t, n).scale(self.norm)
    }

    fn value(&self, t: f64) -> f64 {
        self.norm * raw_bump(t)
    }

    fn name(&self) -> String {
        "bump".into()
    }
}

/// `p(t)·φ(t)` with `p` of degree `M` chosen so that moments `1..=M` vanish.
#[derive(Debug, Clone)]
pub struct MomentBump {
    base: Arc<Bump>,
    coeffs: Vec<f64>,
    condition: f64,
}

impl MomentBump {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients of `p`, lowest degree first.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn base(&self) -> &Arc<Bump> {
        &self.base
    }

    fn poly_jet(&self, t: f64, n: usize) -> Jet {
        // Taylor coefficients of p(t + s) in s.
        let coeffs = (0..=n)
            .map(|k| {
                self.coeffs
                    .iter()
                    .enumerate()
                    .skip(k)
                    .map(|(j, c)| c * binomial(j, k) * t.powi((j - k) as i32))
                    .sum()
            })
            .collect();
        Jet::from_coeffs(coeffs)
    }

    pub fn poly(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

impl Mollifier for MomentBump {
    fn jet(&self, t: f64, n: usize) -> Jet {
        if t.abs() >= 1.0 {
            return Jet::zero(n);
        }
        &self.poly_jet(t, n) * &self.base.jet(t, n)
    }

    fn value(&self, t: f64) -> f64 {
        self.poly(t) * self.base.value(t)
    }

    fn name(&self) -> String {
        format!("moment_bump(M={})", self.order())
    }
}

/// Solves the moment system `∫ t^m p(t) φ(t) dt = δ_{m0}`, `m = 0..=order`.
pub fn moment_bump(order: usize) -> Result<MomentBump> {
    moment_bump_from(Bump::standard(), order)
}

pub fn moment_bump_from(base: Arc<Bump>, order: usize) -> Result<MomentBump> {
    if order > MAX_MOMENT_ORDER {
        return Err(Error::invalid(format!(
            "moment order {order} exceeds {MAX_MOMENT_ORDER}"
        )));
    }
    let quad = Quadrature::with_tolerances(1e-17, 1e-14);
    let moments: Vec<f64> = (0..=2 * order)
        .map(|j| {
            if j % 2 == 1 {
                // odd moments of a symmetric profile
                Ok(0.0)
            } else {
                quad.integrate(|t: f64| t.powi(j as i32) * base.value(t), -1.0, 1.0)
                    .map(|r| r.value)
            }
        })
        .collect::<Result<_>>()?;
    let size = order + 1;
    let hankel: Vec<Vec<f64>> = (0..size)
        .map(|m| (0..size).map(|j| moments[m + j]).collect())
        .collect();
    let lu = Lu::factor(&hankel);
    let condition = lu.condition_1(&hankel);
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let mut rhs = vec![0.0; size];
    rhs[0] = 1.0;
    let coeffs = lu.solve(&rhs);
    Ok(MomentBump {
        base,
        coeffs,
        condition,
    })
}

/// LU factorization with partial pivoting for small dense systems.
struct Lu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
    singular: bool,
}

impl Lu {
    fn factor(a: &[Vec<f64>]) -> Lu {
        let n = a.len();
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| lu[i][col].abs().total_cmp(&lu[j][col].abs()))
                .expect("nonempty range");
            if lu[pivot][col] == 0.0 {
                singular = true;
                continue;
            }
            lu.swap(col, pivot);
            perm.swap(col, pivot);
            for row in col + 1..n {
                let f = lu[row][col] / lu[col][col];
                lu[row][col] = f;
                for k in col + 1..n {
                    lu[row][k] -= f * lu[col][k];
                }
            }
        }
        Lu { lu, perm, singular }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.lu[i][k] * y[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.lu[i][k] * y[k];
            }
            y[i] /= self.lu[i][i];
        }
        y
    }

    /// `‖A‖₁ ‖A⁻¹‖₁` with the inverse formed column by column.
    fn condition_1(&self, a: &[Vec<f64>]) -> f64 {
        if self.singular {
            return f64::INFINITY;
        }
        let n = a.len();
        let norm = |cols: &dyn Fn(usize) -> Vec<f64>| {
            (0..n)
                .map(|j| cols(j).iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0f64, f64::max)
        };
        let a_norm = norm(&|j| (0..n).map(|i| a[i][j]).collect());
        let inv_norm = norm(&|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.solve(&e)
        });
        a_norm * inv_norm
    }
}

/// `φ_eps^(n)(x) = eps^(-1-n) φ^(n)(x/eps)`.
pub fn scaled_derivative(kernel: &dyn Mollifier, eps: f64, x: f64, n: usize) -> f64 {
    let t = x / eps;
    if t.abs() >= 1.0 {
        return 0.0;
    }
    kernel.derivative(t, n) * eps.powi(-1 - n as i32)
}

/// The family `φ_eps = eps^-1 φ(·/eps)` as a net on the real line.
pub fn scaled(kernel: Arc<dyn Mollifier>) -> Net {
    let label = format!("{}_eps", kernel.name());
    Net::new(Domain::REAL_LINE, MAX_DERIVATIVE_ORDER, label, move |e, x, n| {
        scaled_derivative(kernel.as_ref(), e, x, n)
    })
    .with_zones(|e| vec![Zone::around(0.0, e, e)])
}

/// Width schedule `eps ↦ w(eps)` of a smoothed indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthFn {
    /// `w = eps`.
    Linear,
    /// `w = 1/|ln eps|`, capped at 1 (reached for `eps >= 1/e`).
    Log,
    /// `eps`-independent width.
    Fixed(f64),
}

impl WidthFn {
    pub fn width(&self, eps: f64) -> f64 {
        match *self {
            WidthFn::Linear => eps,
            WidthFn::Log => 1.0 / eps.ln().abs().max(1.0),
            WidthFn::Fixed(w) => w,
        }
    }

    /// Largest `eps` with `w(eps) < target`, or `None` if no `eps ∈ (0, 1)`
    /// qualifies.
    pub fn eps_below_width(&self, target: f64) -> Option<f64> {
        if !(target > 0.0) {
            return None;
        }
        match *self {
            WidthFn::Linear => Some(target.min(1.0)),
            WidthFn::Log => Some(if target > 1.0 { 1.0 } else { (-1.0 / target).exp() }),
            WidthFn::Fixed(w) => (w < target).then_some(1.0),
        }
    }
}

/// `eta_eps = 1_{A^{w/2}} * φ_{w/2}` for a finite union `A` of closed
/// intervals: equal to 1 on `A`, 0 at distance `>= w` from `A`, and between
/// the two everywhere.
#[derive(Debug, Clone)]
pub struct SmoothIndicator {
    intervals: Vec<(f64, f64)>,
    width: WidthFn,
    bump: Arc<Bump>,
}

impl SmoothIndicator {
    pub fn new(intervals: Vec<(f64, f64)>, width: WidthFn) -> Result<Self> {
        SmoothIndicator::with_bump(intervals, width, Bump::standard())
    }

    pub fn with_bump(intervals: Vec<(f64, f64)>, width: WidthFn, bump: Arc<Bump>) -> Result<Self> {
        if intervals.iter().any(|&(a, b)| !(a.is_finite() && b.is_finite() && a <= b)) {
            return Err(Error::invalid("indicator intervals must be finite with a <= b"));
        }
        if let WidthFn::Fixed(w) = width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("fixed width must be positive, got {w}")));
            }
        }
        Ok(SmoothIndicator {
            intervals: merge_intervals(intervals),
            width,
            bump,
        })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn width_fn(&self) -> WidthFn {
        self.width
    }

    /// Enlarged-and-merged intervals meeting `[x - 2h, x + 2h]`; they fully
    /// determine the value at `x`.
    fn local_support(&self, x: f64, h: f64) -> Vec<(f64, f64)> {
        let start = self.intervals.partition_point(|&(_, b)| b < x - 2.0 * h);
        let local: Vec<(f64, f64)> = self.intervals[start..]
            .iter()
            .take_while(|&&(a, _)| a <= x + 2.0 * h)
            .map(|&(a, b)| (a - h, b + h))
            .collect();
        merge_intervals(local)
    }

    pub fn eval(&self, eps: f64, x: f64, n: usize) -> f64 {
        let h = 0.5 * self.width.width(eps);
        let support = self.local_support(x, h);
        if n == 0 {
            return support
                .iter()
                .map(|&(p, q)| self.bump.cdf((x - p) / h) - self.bump.cdf((x - q) / h))
                .fold(0.0, |s, v| s + v);
        }
        let scale = h.powi(-(n as i32));
        support
            .iter()
            .map(|&(p, q)| {
                self.bump.derivative((x - p) / h, n - 1) - self.bump.derivative((x - q) / h, n - 1)
            })
            .fold(0.0, |s, v| s + v)
            * scale
    }

    pub fn zones(&self, eps: f64) -> Vec<Zone> {
        let h = 0.5 * self.width.width(eps);
        let enlarged = merge_intervals(self.intervals.iter().map(|&(a, b)| (a - h, b + h)).collect());
        enlarged
            .iter()
            .flat_map(|&(p, q)| [Zone::around(p, h, h), Zone::around(q, h, h)])
            .collect()
    }

    pub fn into_net(self) -> Net {
        let label = format!("eta[{} intervals, {:?}]", self.intervals.len(), self.width);
        let zones = self.clone();
        Net::new(Domain::REAL_LINE, MAX_DERIVATIVE_ORDER + 1, label, move |e, x, n| self.eval(e, x, n))
            .with_zones(move |e| zones.zones(e))
    }
}

/// Net form of [`SmoothIndicator`]; an empty interval list gives the zero net.
pub fn smooth_indicator(intervals: Vec<(f64, f64)>, width: WidthFn) -> Result<Net> {
    if intervals.is_empty() {
        return Ok(Net::zero());
    }
    Ok(SmoothIndicator::new(intervals, width)?.into_net())
}
