//! Nets of smooth functions indexed by `eps ∈ (0, 1)` and their asymptotic
//! classification.
//!
//! A [`Net`] is a pure evaluator `(eps, x, n) ↦ f_eps^(n)(x)`. Classification
//! works on finite schedules of `eps`: the sup of `|f_eps^(n)|` over a compact
//! box is estimated by a two-stage grid maximum, and a least-squares line
//! through `(ln eps, ln sup)` yields the exponent `a` in `sup ≈ C·eps^a`.
//! The quantifiers over exponents are replaced by finite thresholds.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::binomial;

pub const DEFAULT_GRID_POINTS: usize = 256;
pub const MIN_GRID_POINTS: usize = 64;
pub const DEFAULT_SLOPE_FLOOR: f64 = -50.0;
pub const DEFAULT_SLOPE_THRESHOLD: f64 = 10.0;
pub const DEFAULT_SPREAD_TOL: f64 = 0.5;
pub const MIN_R_SQUARED: f64 = 0.9;
pub const MIN_FIT_POINTS: usize = 4;
pub const MIN_SCHEDULE_LEN: usize = 6;

/// Samples per unit of a zone's feature scale.
const ZONE_DENSITY: f64 = 16.0;
const ZONE_POINT_CAP: usize = 1 << 20;
const REFINE_POINTS: usize = 64;

type Body = dyn Fn(f64, f64, usize) -> f64 + Send + Sync;
type ZoneFn = dyn Fn(f64) -> Vec<Zone> + Send + Sync;

/// Open interval `(lo, hi)`; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub const REAL_LINE: Domain = Domain {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::invalid(format!("empty domain ({lo}, {hi})")));
        }
        Ok(Domain { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn intersect(&self, other: &Domain) -> Result<Domain> {
        Domain::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

/// A region where a net has structure on the length scale `scale` at a given
/// `eps`. Outside its zones a net is either exactly zero or varies on scales
/// resolved by the coarse grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zone {
    pub lo: f64,
    pub hi: f64,
    pub scale: f64,
}

impl Zone {
    pub fn around(center: f64, radius: f64, scale: f64) -> Self {
        Zone {
            lo: center - radius,
            hi: center + radius,
            scale,
        }
    }
}

#[derive(Clone)]
pub struct Net {
    domain: Domain,
    body: Arc<Body>,
    analytic_order: usize,
    zones: Option<Arc<ZoneFn>>,
    label: String,
    meta: BTreeMap<String, f64>,
}

impl fmt::Debug for Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Net")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("analytic_order", &self.analytic_order)
            .finish()
    }
}

impl Net {
    /// `body` is only ever called with `n <= analytic_order`.
    pub fn new<F>(domain: Domain, analytic_order: usize, label: impl Into<String>, body: F) -> Self
    where
        F: Fn(f64, f64, usize) -> f64 + Send + Sync + 'static,
    {
        Net {
            domain,
            body: Arc::new(body),
            analytic_order,
            zones: None,
            label: label.into(),
            meta: BTreeMap::new(),
        }
    }

    pub fn with_zones<Z>(mut self, zones: Z) -> Self
    where
        Z: Fn(f64) -> Vec<Zone> + Send + Sync + 'static,
    {
        self.zones = Some(Arc::new(zones));
        self
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: f64) -> Self {
        self.meta.insert(key.into(), value);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn constant(c: f64) -> Self {
        Net::new(Domain::REAL_LINE, usize::MAX, format!("const({c})"), move |_, _, n| {
            if n == 0 {
                c
            } else {
                0.0
            }
        })
    }

    pub fn zero() -> Self {
        Net::constant(0.0).with_label("zero")
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn analytic_order(&self) -> usize {
        self.analytic_order
    }

    pub fn meta(&self) -> &BTreeMap<String, f64> {
        &self.meta
    }

    pub fn zones(&self, eps: f64) -> Vec<Zone> {
        self.zones.as_ref().map(|z| z(eps)).unwrap_or_default()
    }

    /// `f_eps^(n)(x)`. Orders above the analytic order fall back to central
    /// differences with step `max(1e-6, eps/1000)`, applied recursively.
    pub fn eval(&self, eps: f64, x: f64, n: usize) -> Result<f64> {
        check_eps(eps)?;
        if !self.domain.contains(x) {
            return Err(Error::Domain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        self.eval_inner(eps, x, n)
    }

    fn eval_inner(&self, eps: f64, x: f64, n: usize) -> Result<f64> {
        if n <= self.analytic_order {
            return Ok((self.body)(eps, x, n));
        }
        let h = fd_step(eps);
        let (xm, xp) = (x - h, x + h);
        for t in [xm, xp] {
            if !self.domain.contains(t) {
                return Err(Error::Domain {
                    x: t,
                    lo: self.domain.lo,
                    hi: self.domain.hi,
                });
            }
        }
        Ok((self.eval_inner(eps, xp, n - 1)? - self.eval_inner(eps, xm, n - 1)?) / (2.0 * h))
    }

    pub fn add(&self, other: &Net) -> Result<Net> {
        let domain = self.domain.intersect(&other.domain)?;
        let (f, g) = (self.clone(), other.clone());
        let order = self.analytic_order.min(other.analytic_order);
        let label = format!("({} + {})", self.label, other.label);
        let net = Net::new(domain, order, label, move |e, x, n| {
            (f.body)(e, x, n) + (g.body)(e, x, n)
        });
        Ok(net.with_merged_zones(self, other))
    }

    pub fn sub(&self, other: &Net) -> Result<Net> {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product; derivatives by the Leibniz rule up to the smaller
    /// analytic order of the factors.
    pub fn mul(&self, other: &Net) -> Result<Net> {
        let domain = self.domain.intersect(&other.domain)?;
        let (f, g) = (self.clone(), other.clone());
        let order = self.analytic_order.min(other.analytic_order);
        let label = format!("({} * {})", self.label, other.label);
        let net = Net::new(domain, order, label, move |e, x, n| {
            if n == 0 {
                let a = (f.body)(e, x, 0);
                // Keeps structural zeros exact even against non-finite factors.
                if a == 0.0 {
                    return 0.0;
                }
                return a * (g.body)(e, x, 0);
            }
            (0..=n)
                .map(|k| binomial(n, k) * (f.body)(e, x, k) * (g.body)(e, x, n - k))
                .sum()
        });
        Ok(net.with_merged_zones(self, other))
    }

    pub fn scale(&self, c: f64) -> Net {
        let f = self.clone();
        let mut net = Net::new(self.domain, self.analytic_order, format!("{c}*{}", self.label), move |e, x, n| {
            c * (f.body)(e, x, n)
        });
        net.zones = self.zones.clone();
        net
    }

    /// Narrows the domain; values are untouched.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Net> {
        let domain = self.domain.intersect(&Domain::new(lo, hi)?)?;
        let mut net = self.clone();
        net.domain = domain;
        net.label = format!("{}|({lo},{hi})", self.label);
        Ok(net)
    }

    fn with_merged_zones(mut self, a: &Net, b: &Net) -> Net {
        self.zones = match (a.zones.clone(), b.zones.clone()) {
            (None, None) => None,
            (Some(z), None) | (None, Some(z)) => Some(z),
            (Some(za), Some(zb)) => Some(Arc::new(move |e| {
                let mut v = za(e);
                v.extend(zb(e));
                v
            })),
        };
        self
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsOutOfRange(eps))
    }
}

pub fn fd_step(eps: f64) -> f64 {
    (eps / 1000.0).max(1e-6)
}

/// `K = [lo, hi]`, strictly inside a net's domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactBox {
    pub lo: f64,
    pub hi: f64,
    pub margin: f64,
}

impl CompactBox {
    pub fn new(domain: Domain, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid(format!("bad compact box [{lo}, {hi}]")));
        }
        let margin = (lo - domain.lo).min(domain.hi - hi);
        if margin <= 0.0 {
            return Err(Error::invalid(format!(
                "box [{lo}, {hi}] is not compactly contained in ({}, {})",
                domain.lo, domain.hi
            )));
        }
        Ok(CompactBox { lo, hi, margin })
    }

    pub fn for_net(net: &Net, lo: f64, hi: f64) -> Result<Self> {
        CompactBox::new(net.domain(), lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSchedule {
    values: Vec<f64>,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule::dyadic(3, 20).expect("default schedule is valid")
    }
}

impl EpsSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_SCHEDULE_LEN {
            return Err(Error::invalid(format!(
                "schedule needs at least {MIN_SCHEDULE_LEN} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::invalid("schedule entries must lie in (0, 1)"));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("schedule must be strictly decreasing"));
        }
        Ok(EpsSchedule { values })
    }

    /// `2^-k` for `k = k_min..=k_max`.
    pub fn dyadic(k_min: u32, k_max: u32) -> Result<Self> {
        EpsSchedule::new((k_min..=k_max).map(|k| 0.5f64.powi(k as i32)).collect())
    }

    /// Same range as [`EpsSchedule::dyadic`] with twice the density
    /// (`2^-k` for half-integer `k`).
    pub fn dyadic_refined(k_min: u32, k_max: u32) -> Result<Self> {
        let steps = 2 * (k_max - k_min);
        EpsSchedule::new(
            (0..=steps)
                .map(|j| 2f64.powf(-(k_min as f64 + j as f64 / 2.0)))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries strictly below `eps0`, if enough remain to form a schedule.
    pub fn below(&self, eps0: f64) -> Option<EpsSchedule> {
        let v: Vec<f64> = self.values.iter().copied().filter(|&e| e < eps0).collect();
        EpsSchedule::new(v).ok()
    }

    pub fn count_below(&self, eps0: f64) -> usize {
        self.values.iter().filter(|&&e| e < eps0).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    /// Fitted exponent `a` in `sup ≈ C·eps^a` (NaN when degenerate).
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub sup_values: Vec<(f64, f64)>,
    /// All sups were exactly zero.
    pub degenerate: bool,
}

impl AsymptoticFit {
    /// `max ln sup - min ln sup` over the nonzero sups; 0 when there are none.
    pub fn log_range(&self) -> f64 {
        let logs = self.sup_values.iter().filter(|p| p.1 > 0.0).map(|p| p.1.ln());
        let (lo, hi) = logs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo.is_finite() { hi - lo } else { 0.0 }
    }

    /// Least-squares fit of `ln sup` against `ln eps` over the nonzero sups.
    pub fn from_sups(sup_values: Vec<(f64, f64)>) -> Result<Self> {
        let pts: Vec<(f64, f64)> = sup_values
            .iter()
            .filter(|(_, s)| *s > 0.0)
            .map(|&(e, s)| (e.ln(), s.ln()))
            .collect();
        if pts.is_empty() {
            return Ok(AsymptoticFit {
                slope: f64::NAN,
                intercept: f64::NAN,
                r_squared: 1.0,
                sup_values,
                degenerate: true,
            });
        }
        if pts.len() < MIN_FIT_POINTS {
            return Err(Error::InsufficientData {
                nonzero: pts.len(),
                required: MIN_FIT_POINTS,
            });
        }
        let (slope, intercept, r_squared) = least_squares(&pts);
        Ok(AsymptoticFit {
            slope,
            intercept,
            r_squared,
            sup_values,
            degenerate: false,
        })
    }
}

/// Returns `(slope, intercept, r²)`; r² is 1 when `y` is constant.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r2 = if syy <= 1e-24 * (1.0 + my * my) * n {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

/// Two-stage grid maximum of `|f_eps^(n)|` over `k`.
pub fn sup_on_compact(net: &Net, k: &CompactBox, eps: f64, n: usize, grid_points: usize) -> Result<f64> {
    Ok(sup_with_argmax(net, k, eps, n, grid_points)?.0)
}

/// Stage one samples a uniform grid of `grid_points` nodes plus every zone the
/// net reports at `eps` (at `ZONE_DENSITY` nodes per feature scale); stage two
/// resamples a neighbourhood of the best node.
pub fn sup_with_argmax(
    net: &Net,
    k: &CompactBox,
    eps: f64,
    n: usize,
    grid_points: usize,
) -> Result<(f64, f64)> {
    if grid_points < MIN_GRID_POINTS {
        return Err(Error::invalid(format!(
            "grid_points must be >= {MIN_GRID_POINTS}, got {grid_points}"
        )));
    }
    check_eps(eps)?;
    let best = std::cell::Cell::new((-1.0f64, k.lo, 0.0f64));
    let probe = |x: f64, spacing: f64| -> Result<()> {
        let v = net.eval(eps, x, n)?;
        if !v.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite value {v} at eps={eps}, x={x}, n={n} for {}",
                net.label()
            )));
        }
        if v.abs() > best.get().0 {
            best.set((v.abs(), x, spacing));
        }
        Ok(())
    };

    if k.lo == k.hi {
        probe(k.lo, 0.0)?;
        let (v, x, _) = best.get();
        return Ok((v, x));
    }
    let coarse = (k.hi - k.lo) / (grid_points - 1) as f64;
    for i in 0..grid_points {
        probe(k.lo + coarse * i as f64, coarse)?;
    }
    for zone in net.zones(eps) {
        let lo = zone.lo.max(k.lo);
        let hi = zone.hi.min(k.hi);
        if lo > hi {
            continue;
        }
        let step = zone.scale / ZONE_DENSITY;
        let count = (((hi - lo) / step).ceil() as usize + 1).clamp(2, ZONE_POINT_CAP);
        let spacing = (hi - lo) / (count - 1) as f64;
        for i in 0..count {
            probe(lo + spacing * i as f64, spacing)?;
        }
    }
    let (_, center, spacing) = best.get();
    if spacing > 0.0 {
        let lo = (center - spacing).max(k.lo);
        let hi = (center + spacing).min(k.hi);
        let fine = (hi - lo) / REFINE_POINTS as f64;
        for i in 0..=REFINE_POINTS {
            probe(lo + fine * i as f64, 0.0)?;
        }
    }
    let (v, x, _) = best.get();
    Ok((v, x))
}

fn sups_over_schedule(
    net: &Net,
    k: &CompactBox,
    n: usize,
    sched: &EpsSchedule,
    grid_points: usize,
) -> Result<Vec<(f64, f64)>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        sched
            .values()
            .par_iter()
            .map(|&e| sup_on_compact(net, k, e, n, grid_points).map(|s| (e, s)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        sched
            .values()
            .iter()
            .map(|&e| sup_on_compact(net, k, e, n, grid_points).map(|s| (e, s)))
            .collect()
    }
}

pub fn fit_order(net: &Net, k: &CompactBox, n: usize, sched: &EpsSchedule) -> Result<AsymptoticFit> {
    fit_order_with(net, k, n, sched, DEFAULT_GRID_POINTS)
}

pub fn fit_order_with(
    net: &Net,
    k: &CompactBox,
    n: usize,
    sched: &EpsSchedule,
    grid_points: usize,
) -> Result<AsymptoticFit> {
    AsymptoticFit::from_sups(sups_over_schedule(net, k, n, sched, grid_points)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: usize,
    pub fit: AsymptoticFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub holds: bool,
    pub fits: Vec<OrderFit>,
}

fn fits_for(net: &Net, k: &CompactBox, orders: &[usize], sched: &EpsSchedule) -> Result<Vec<OrderFit>> {
    orders
        .iter()
        .map(|&order| {
            Ok(OrderFit {
                order,
                fit: fit_order(net, k, order, sched)?,
            })
        })
        .collect()
}

/// Every tested order grows no faster than `eps^slope_floor`, with a fit of
/// acceptable quality. Two kinds of fit skip the quality gate: those decaying
/// past the negligibility threshold (super-polynomial decay is never
/// log-linear) and flat ones whose nonzero sups stay within a factor `e` of
/// each other (there is no trend for the line to explain).
pub fn is_moderate(
    net: &Net,
    k: &CompactBox,
    orders: &[usize],
    sched: &EpsSchedule,
    slope_floor: f64,
) -> Result<Classification> {
    let fits = fits_for(net, k, orders, sched)?;
    let holds = fits.iter().all(|of| {
        of.fit.degenerate
            || of.fit.slope >= DEFAULT_SLOPE_THRESHOLD
            || (slope_floor <= 0.0 && of.fit.log_range() <= 1.0)
            || (of.fit.slope >= slope_floor && of.fit.r_squared >= MIN_R_SQUARED)
    });
    Ok(Classification { holds, fits })
}

/// Order-0 test only: exact zero, or decay at least like `eps^slope_threshold`.
pub fn is_negligible(
    net: &Net,
    k: &CompactBox,
    sched: &EpsSchedule,
    slope_threshold: f64,
) -> Result<Classification> {
    let fit = fit_order(net, k, 0, sched)?;
    let holds = fit.degenerate || fit.slope >= slope_threshold;
    Ok(Classification {
        holds,
        fits: vec![OrderFit { order: 0, fit }],
    })
}

/// One exponent serves every tested order: the smallest slope stays within
/// `spread_tol` of the order-0 slope. Identically vanishing derivatives are
/// `O(eps^a)` for every `a` and never break the test.
pub fn is_ginfty(
    net: &Net,
    k: &CompactBox,
    orders: &[usize],
    sched: &EpsSchedule,
    spread_tol: f64,
) -> Result<Classification> {
    if !(0..=4).all(|n| orders.contains(&n)) {
        return Err(Error::invalid("is_ginfty needs orders covering 0..=4"));
    }
    let fits = fits_for(net, k, orders, sched)?;
    let base = fits
        .iter()
        .find(|of| of.order == 0)
        .map(|of| if of.fit.degenerate { f64::INFINITY } else { of.fit.slope })
        .unwrap_or(f64::INFINITY);
    let holds = fits
        .iter()
        .filter(|of| !of.fit.degenerate)
        .all(|of| of.fit.slope.is_finite() && (base.is_infinite() || of.fit.slope >= base - spread_tol));
    Ok(Classification { holds, fits })
}
