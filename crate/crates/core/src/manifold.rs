//! The circle with a two-chart atlas: partition of unity, chart-local
//! decomposition glued by `u_i = Σ_α χ_α f_i^α`, the transformation law, and
//! the `eps^(-1/x)` net on `(0, ∞)`.
//!
//! Points of the circle are angles. Both charts use the angle itself as the
//! coordinate, with different branch cuts: chart 0 takes representatives in
//! `(-π, π]` restricted to `(-2.8, 2.8)`, chart 1 representatives in
//! `[0, 2π)` restricted to `(0.4, 2π - 0.4)`. The overlap has two
//! components; the transition is the identity on one and a shift by `2π` on
//! the other.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::embedding::Atom;
use crate::error::{Error, Result};
use crate::geometry::ClosedSet;
use crate::jet::Jet;
use crate::mollifier::{scaled_derivative, Mollifier, SmoothIndicator, WidthFn, MAX_DERIVATIVE_ORDER};
use crate::nets::{
    fit_order, is_negligible, AsymptoticFit, CompactBox, Domain, EpsSchedule, Net, Zone, DEFAULT_SLOPE_THRESHOLD,
    MIN_SCHEDULE_LEN,
};
use crate::suppleness::{decompose_with, probe_plan, DecompositionResult, Part, Verdict, WidthMode, DEFAULT_EPS_MAX};

/// Representative in `(-π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let r = a - TAU * ((a + PI) / TAU).floor();
    // r is in [-π, π)
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Representative in `[0, 2π)`.
pub fn wrap_tau(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Geodesic distance on the unit circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_pi(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `(-π, π]`
    Centered,
    /// `[0, 2π)`
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub branch: Branch,
}

impl Chart {
    fn representative(&self, angle: f64) -> f64 {
        match self.branch {
            Branch::Centered => wrap_pi(angle),
            Branch::Positive => wrap_tau(angle),
        }
    }

    /// `ψ(p)`, if `p` lies in the chart domain.
    pub fn coord(&self, angle: f64) -> Option<f64> {
        let x = self.representative(angle);
        (x > self.lo && x < self.hi).then_some(x)
    }

    pub fn contains(&self, angle: f64) -> bool {
        self.coord(angle).is_some()
    }

    /// `ψ^{-1}(x)`: the coordinate is itself an angle.
    pub fn angle(&self, x: f64) -> f64 {
        x
    }

    pub fn domain(&self) -> Domain {
        Domain { lo: self.lo, hi: self.hi }
    }

    /// Coordinate range shrunk by `margin` on each side.
    pub fn window(&self, margin: f64) -> CompactBox {
        CompactBox {
            lo: self.lo + margin,
            hi: self.hi - margin,
            margin,
        }
    }

    /// Distance from the coordinate of `p` to the chart boundary (0 outside).
    pub fn depth(&self, angle: f64) -> f64 {
        self.coord(angle).map_or(0.0, |x| (x - self.lo).min(self.hi - x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atlas {
    pub charts: Vec<Chart>,
}

impl Atlas {
    /// `ψ_β ∘ ψ_α^{-1}` at chart-`α` coordinate `x`, if `x` maps into chart `β`.
    pub fn transition(&self, alpha: usize, beta: usize, x: f64) -> Option<f64> {
        self.charts[beta].coord(self.charts[alpha].angle(x))
    }

    /// The chart in which `p` sits deepest; ties go to the lower index.
    pub fn best_chart(&self, angle: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.charts.iter().enumerate() {
            let d = c.depth(angle);
            if d > 0.0 && best.map_or(true, |(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}

pub fn make_atlas() -> Atlas {
    Atlas {
        charts: vec![
            Chart {
                name: "chart0".into(),
                lo: -2.8,
                hi: 2.8,
                branch: Branch::Centered,
            },
            Chart {
                name: "chart1".into(),
                lo: 0.4,
                hi: TAU - 0.4,
                branch: Branch::Positive,
            },
        ],
    }
}

/// Plateaus of the raw bumps, in chart coordinates.
const PLATEAUS: [(f64, f64); 2] = [(-2.3, 2.3), (0.9, TAU - 0.9)];
/// Width of the raw bump transitions.
pub const RAW_WIDTH: f64 = 0.2;
/// Window margin inside each chart for local decompositions.
pub const CHART_MARGIN: f64 = 0.01;
/// Pushed sets keep the part of `Z` within this distance of `supp χ̃_α`.
pub const PUSH_MARGIN: f64 = 0.05;
pub const MIN_DENOMINATOR: f64 = 0.1;

/// `χ_α = χ̃_α / (Σ_β χ̃_β²)^{1/2}`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    atlas: Atlas,
    raw: Vec<SmoothIndicator>,
}

pub fn partition_of_unity(atlas: &Atlas) -> Result<PartitionOfUnity> {
    if atlas.charts.len() != PLATEAUS.len() {
        return Err(Error::invalid("the partition of unity is defined for the two-chart circle atlas"));
    }
    let raw = PLATEAUS
        .iter()
        .map(|&(a, b)| SmoothIndicator::new(vec![(a, b)], WidthFn::Fixed(RAW_WIDTH)))
        .collect::<Result<Vec<_>>>()?;
    let pou = PartitionOfUnity {
        atlas: atlas.clone(),
        raw,
    };
    let grid = 10_000;
    for i in 0..grid {
        let p = -PI + TAU * i as f64 / grid as f64;
        let d = pou.sum_raw_squares(p).sqrt();
        if !(d > MIN_DENOMINATOR) {
            return Err(Error::NotCovered {
                angle: p,
                denominator: d,
            });
        }
    }
    Ok(pou)
}

impl PartitionOfUnity {
    pub fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    /// Support of `χ̃_α` in chart coordinates.
    pub fn raw_support(&self, alpha: usize) -> (f64, f64) {
        let (a, b) = PLATEAUS[alpha];
        (a - RAW_WIDTH, b + RAW_WIDTH)
    }

    /// `χ̃_α^(n)` at the point `p`.
    pub fn raw(&self, alpha: usize, angle: f64, n: usize) -> f64 {
        match self.atlas.charts[alpha].coord(angle) {
            Some(x) => self.raw[alpha].eval(0.5, x, n),
            None => 0.0,
        }
    }

    fn raw_jet(&self, alpha: usize, angle: f64, n: usize) -> Jet {
        let d: Vec<f64> = (0..=n).map(|k| self.raw(alpha, angle, k)).collect();
        Jet::from_derivatives(&d)
    }

    fn sum_raw_squares(&self, angle: f64) -> f64 {
        (0..self.raw.len()).map(|a| self.raw(a, angle, 0).powi(2)).sum()
    }

    /// Jet of `χ_α` in the (common) angle coordinate.
    pub fn chi_jet(&self, alpha: usize, angle: f64, n: usize) -> Jet {
        let own = self.raw_jet(alpha, angle, n);
        if own.coeffs().iter().all(|&c| c == 0.0) {
            return Jet::zero(n);
        }
        let mut s = Jet::zero(n);
        for b in 0..self.raw.len() {
            let j = self.raw_jet(b, angle, n);
            s = &s + &(&j * &j);
        }
        &own * &s.sqrt().recip()
    }

    pub fn chi(&self, alpha: usize, angle: f64) -> f64 {
        let r = self.raw(alpha, angle, 0);
        if r == 0.0 {
            return 0.0;
        }
        r / self.sum_raw_squares(angle).sqrt()
    }

    pub fn sum_squares(&self, angle: f64) -> f64 {
        (0..self.raw.len()).map(|a| self.chi(a, angle).powi(2)).sum()
    }

    /// `χ_α` as a net in chart-`β` coordinates.
    pub fn chi_net(self: &Arc<Self>, alpha: usize, beta: usize) -> Net {
        let pou = self.clone();
        let chart = &self.atlas.charts[beta];
        let (a, b) = PLATEAUS[alpha];
        let zone_pts: Vec<f64> = [a, b]
            .iter()
            .flat_map(|&e| [e - 2.0 * TAU, e - TAU, e, e + TAU])
            .filter(|&x| x > chart.lo && x < chart.hi)
            .collect();
        Net::new(chart.domain(), MAX_DERIVATIVE_ORDER, format!("chi{alpha}@{}", chart.name), move |_, x, n| {
            if n == 0 {
                pou.chi(alpha, x)
            } else {
                pou.chi_jet(alpha, x, n).derivative(n)
            }
        })
        .with_zones(move |_| zone_pts.iter().map(|&c| Zone::around(c, RAW_WIDTH, 0.5 * RAW_WIDTH)).collect())
    }
}

/// Closed subset of the circle: isolated angles and counter-clockwise arcs
/// `[a, b]` from `a` to `b`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AngleSet {
    #[serde(default)]
    pub angles: Vec<f64>,
    #[serde(default)]
    pub arcs: Vec<(f64, f64)>,
}

impl AngleSet {
    pub fn points(angles: Vec<f64>) -> Self {
        AngleSet { angles, arcs: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty() && self.arcs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.angles.iter().chain(self.arcs.iter().flat_map(|(a, b)| [a, b])).any(|v| !v.is_finite()) {
            return Err(Error::invalid("angle set entries must be finite"));
        }
        Ok(())
    }

    /// Geodesic distance; `+∞` for the empty set.
    pub fn dist(&self, p: f64) -> f64 {
        let pts = self.angles.iter().map(|&a| angular_distance(p, a));
        let arcs = self.arcs.iter().map(|&(a, b)| {
            let len = wrap_tau(b - a);
            if wrap_tau(p - a) <= len || (b - a) >= TAU {
                0.0
            } else {
                angular_distance(p, a).min(angular_distance(p, b))
            }
        });
        pts.chain(arcs).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: f64) -> bool {
        self.dist(p) == 0.0
    }

    /// The part of the set inside `[lo, hi]`, in chart coordinates.
    pub fn push(&self, chart: &Chart, lo: f64, hi: f64) -> ClosedSet {
        let mut out = ClosedSet::empty();
        for &a in &self.angles {
            if let Some(x) = chart.coord(a) {
                if x >= lo && x <= hi {
                    out.points.push(x);
                }
            }
        }
        for &(a, b) in &self.arcs {
            let start = chart.representative(a);
            let len = if b - a >= TAU { TAU } else { wrap_tau(b - a) };
            for shift in [-TAU, 0.0, TAU] {
                let (s, e) = ((start + shift).max(lo), (start + shift + len).min(hi));
                if s <= e {
                    out.intervals.push((s, e));
                }
            }
        }
        out
    }
}

/// Chart-local expressions `u_α` on `ψ_α(V_α)`.
#[derive(Debug, Clone)]
pub struct ManifoldNet {
    atlas: Atlas,
    locals: Vec<Net>,
}

impl ManifoldNet {
    pub fn new(atlas: &Atlas, locals: Vec<Net>) -> Result<Self> {
        if locals.len() != atlas.charts.len() {
            return Err(Error::invalid(format!(
                "expected {} local expressions, got {}",
                atlas.charts.len(),
                locals.len()
            )));
        }
        Ok(ManifoldNet {
            atlas: atlas.clone(),
            locals,
        })
    }

    /// Local expressions of a `2π`-periodic function of the angle.
    pub fn from_global<F>(atlas: &Atlas, analytic_order: usize, label: &str, g: F) -> Self
    where
        F: Fn(f64, f64, usize) -> f64 + Send + Sync + 'static,
    {
        let g = Arc::new(g);
        let locals = atlas
            .charts
            .iter()
            .map(|c| {
                let g = g.clone();
                Net::new(c.domain(), analytic_order, format!("{label}@{}", c.name), move |e, x, n| g(e, x, n))
            })
            .collect();
        ManifoldNet {
            atlas: atlas.clone(),
            locals,
        }
    }

    pub fn zero(atlas: &Atlas) -> Self {
        ManifoldNet::from_global(atlas, usize::MAX, "zero", |_, _, _| 0.0)
    }

    pub fn atlas(&self) -> &Atlas {
        &self.atlas
    }

    pub fn local(&self, alpha: usize) -> &Net {
        &self.locals[alpha]
    }

    pub fn locals(&self) -> &[Net] {
        &self.locals
    }

    /// `u^(n)` at the point `p`, read in the chart where `p` sits deepest.
    pub fn eval(&self, eps: f64, angle: f64, n: usize) -> Result<f64> {
        let alpha = self
            .atlas
            .best_chart(angle)
            .ok_or(Error::NotCovered { angle, denominator: 0.0 })?;
        let x = self.atlas.charts[alpha].coord(angle).expect("best chart contains the point");
        self.locals[alpha].eval(eps, x, n)
    }

    pub fn add(&self, other: &ManifoldNet) -> Result<ManifoldNet> {
        let locals = self
            .locals
            .iter()
            .zip(&other.locals)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(ManifoldNet {
            atlas: self.atlas.clone(),
            locals,
        })
    }
}

/// `Σ coef·φ_eps^(r)` of the geodesic offset to each atom angle.
pub fn embed_on_circle(atlas: &Atlas, atoms: &[Atom], kernel: Arc<dyn Mollifier>) -> Result<ManifoldNet> {
    for a in atoms {
        if !(a.c.is_finite() && a.coef.is_finite()) || a.order > MAX_DERIVATIVE_ORDER {
            return Err(Error::invalid(format!("invalid atom {a:?}")));
        }
    }
    let max_r = atoms.iter().map(|a| a.order).max().unwrap_or(0);
    let locals = atlas
        .charts
        .iter()
        .map(|chart| {
            let atoms = atoms.to_vec();
            let kernel = kernel.clone();
            let zone_pts: Vec<f64> = atoms
                .iter()
                .flat_map(|a| [a.c - TAU, a.c, a.c + TAU])
                .filter(|&x| x > chart.lo - 1.0 && x < chart.hi + 1.0)
                .collect();
            Net::new(chart.domain(), MAX_DERIVATIVE_ORDER - max_r, format!("embed[{} atoms]@{}", atoms.len(), chart.name), move |e, x, n| {
                atoms
                    .iter()
                    .map(|a| a.coef * scaled_derivative(kernel.as_ref(), e, wrap_pi(x - a.c), a.order + n))
                    .fold(0.0, |s, v| s + v)
            })
            .with_zones(move |e| zone_pts.iter().map(|&c| Zone::around(c, e, e)).collect())
        })
        .collect();
    Ok(ManifoldNet {
        atlas: atlas.clone(),
        locals,
    })
}

/// `net_α` read in chart-`β` coordinates, zero where the point leaves chart `α`.
fn transport(atlas: &Atlas, net: &Net, alpha: usize, beta: usize) -> Net {
    let a = atlas.charts[alpha].clone();
    let b = atlas.charts[beta].clone();
    let inner = net.clone();
    let zones_inner = net.clone();
    let (blo, bhi) = (b.lo, b.hi);
    Net::new(b.domain(), usize::MAX, format!("{}→{}", net.label(), b.name), move |e, x, n| match a.coord(b.angle(x)) {
        Some(y) => inner.eval(e, y, n).unwrap_or(f64::NAN),
        None => 0.0,
    })
    .with_zones(move |e| {
        zones_inner
            .zones(e)
            .into_iter()
            .flat_map(|z| {
                [-TAU, 0.0, TAU].into_iter().map(move |s| Zone {
                    lo: z.lo + s,
                    hi: z.hi + s,
                    scale: z.scale,
                })
            })
            .filter(|z| z.hi > blo && z.lo < bhi)
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct ManifoldDecomposition {
    pub u: ManifoldNet,
    pub u1: ManifoldNet,
    pub u2: ManifoldNet,
    pub z1: AngleSet,
    pub z2: AngleSet,
    /// Per-chart decompositions of `χ_α u_α`.
    pub local: Vec<DecompositionResult>,
    pou: Arc<PartitionOfUnity>,
}

impl ManifoldDecomposition {
    pub fn partition(&self) -> &PartitionOfUnity {
        &self.pou
    }
}

/// Largest `delta` the chart windows accommodate.
pub const MAX_MANIFOLD_DELTA: f64 = 0.1;

pub fn manifold_decompose(u: &ManifoldNet, z1: &AngleSet, z2: &AngleSet, delta: f64) -> Result<ManifoldDecomposition> {
    if !(delta > 0.0 && delta <= MAX_MANIFOLD_DELTA) {
        return Err(Error::invalid(format!("delta must lie in (0, {MAX_MANIFOLD_DELTA}], got {delta}")));
    }
    z1.validate()?;
    z2.validate()?;
    let atlas = u.atlas.clone();
    let pou = Arc::new(partition_of_unity(&atlas)?);
    let m = atlas.charts.len();

    let mut local = Vec::with_capacity(m);
    for alpha in 0..m {
        let chart = &atlas.charts[alpha];
        let (slo, shi) = pou.raw_support(alpha);
        let (plo, phi) = (slo - PUSH_MARGIN, shi + PUSH_MARGIN);
        let f_alpha = pou.chi_net(alpha, alpha).mul(&u.locals[alpha])?;
        let res = decompose_with(
            &f_alpha,
            &z1.push(chart, plo, phi),
            &z2.push(chart, plo, phi),
            delta,
            chart.window(CHART_MARGIN),
            WidthMode::Linear,
            DEFAULT_EPS_MAX,
        )?;
        local.push(res);
    }

    let glue = |part: fn(&DecompositionResult) -> &Net| -> Result<ManifoldNet> {
        let mut locals = Vec::with_capacity(m);
        for beta in 0..m {
            let mut acc: Option<Net> = None;
            for (alpha, res) in local.iter().enumerate() {
                let term = pou.chi_net(alpha, beta).mul(&transport(&atlas, part(res), alpha, beta))?;
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term)?,
                });
            }
            locals.push(acc.expect("atlas has charts"));
        }
        ManifoldNet::new(&atlas, locals)
    };
    let u1 = glue(|r| &r.f1)?;
    let u2 = glue(|r| &r.f2)?;
    Ok(ManifoldDecomposition {
        u: u.clone(),
        u1,
        u2,
        z1: z1.clone(),
        z2: z2.clone(),
        local,
        pou,
    })
}

/// `Σ_α χ_α·(χ_α u)` read in chart `β`.
pub fn reconstruct(u: &ManifoldNet, pou: &Arc<PartitionOfUnity>, beta: usize) -> Result<Net> {
    let atlas = &u.atlas;
    let mut acc: Option<Net> = None;
    for alpha in 0..atlas.charts.len() {
        let inner = pou.chi_net(alpha, alpha).mul(&u.locals[alpha])?;
        let term = pou.chi_net(alpha, beta).mul(&transport(atlas, &inner, alpha, beta))?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term)?,
        });
    }
    Ok(acc.expect("atlas has charts"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformationCheck {
    pub holds: bool,
    pub max_deviation: f64,
    pub compared: usize,
}

pub const TRANSFORMATION_TOL: f64 = 1e-9;

/// Compares `u_α` with `u_β ∘ ψ_β ∘ ψ_α^{-1}` at `samples` evenly spaced
/// angles (those in an overlap) for every `eps`.
pub fn check_transformation_law(u: &ManifoldNet, eps_list: &[f64], samples: usize) -> Result<TransformationCheck> {
    let atlas = &u.atlas;
    let mut max_dev = 0.0f64;
    let mut compared = 0;
    for &e in eps_list {
        for i in 0..samples {
            let p = -PI + TAU * (i as f64 + 0.5) / samples as f64;
            for alpha in 0..atlas.charts.len() {
                for beta in alpha + 1..atlas.charts.len() {
                    let (Some(xa), Some(xb)) = (atlas.charts[alpha].coord(p), atlas.charts[beta].coord(p)) else {
                        continue;
                    };
                    let va = u.locals[alpha].eval(e, xa, 0)?;
                    let vb = u.locals[beta].eval(e, xb, 0)?;
                    max_dev = max_dev.max((va - vb).abs());
                    compared += 1;
                }
            }
        }
    }
    Ok(TransformationCheck {
        holds: max_dev <= TRANSFORMATION_TOL,
        max_deviation: max_dev,
        compared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleProbe {
    pub angle: f64,
    pub part: Part,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleProbeResult {
    pub angle: f64,
    pub part: Part,
    pub chart: usize,
    pub ball_radius: f64,
    pub eps0: f64,
    pub entries: usize,
    pub fit: Option<AsymptoticFit>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleCertificate {
    pub probes: Vec<CircleProbeResult>,
    pub failures: usize,
}

/// Radius cap keeping probe balls of points outside a chart away from the
/// support of that chart's bump.
const OFF_CHART_RADIUS: f64 = 0.25;

/// Support certificate for the glued parts: `u1` (resp. `u2`) must be
/// negligible on a geodesic ball around each probe outside `Z1` (resp. `Z2`).
/// The radius and `eps0` are the most conservative over the charts whose
/// local decomposition sees the probe.
pub fn certify_circle(dec: &ManifoldDecomposition, probes: &[CircleProbe], sched: &EpsSchedule) -> Result<CircleCertificate> {
    let atlas = dec.u.atlas();
    let mut out = Vec::with_capacity(probes.len());
    for probe in probes {
        let p = probe.angle;
        let target = match probe.part {
            Part::F1 => &dec.z1,
            Part::F2 => &dec.z2,
        };
        let d = target.dist(p);
        if d == 0.0 {
            return Err(Error::ProbeInsideTarget(p));
        }
        let mut radius = (0.5 * d).min(OFF_CHART_RADIUS);
        let mut eps0 = 1.0f64;
        for (alpha, res) in dec.local.iter().enumerate() {
            let Some(x) = atlas.charts[alpha].coord(p) else { continue };
            if x < res.window.lo || x > res.window.hi {
                continue;
            }
            let (r, e0) = probe_plan(res, crate::suppleness::ProbeSpec { x, part: probe.part })?;
            radius = radius.min(r);
            eps0 = eps0.min(e0);
        }
        let chart = atlas
            .best_chart(p)
            .ok_or(Error::NotCovered { angle: p, denominator: 0.0 })?;
        let c = &atlas.charts[chart];
        let x = c.coord(p).expect("best chart contains the point");
        let reach = crate::suppleness::BALL_FRACTION * radius;
        let (lo, hi) = ((x - reach).max(c.lo + CHART_MARGIN), (x + reach).min(c.hi - CHART_MARGIN));
        let sub = sched
            .below(eps0)
            .filter(|s| s.len() >= MIN_SCHEDULE_LEN)
            .ok_or(Error::ProbeTooClose {
                x: p,
                eps0,
                entries: sched.count_below(eps0),
            })?;
        let net = match probe.part {
            Part::F1 => dec.u1.local(chart),
            Part::F2 => dec.u2.local(chart),
        };
        let k = CompactBox::for_net(net, lo, hi)?;
        let (fit, verdict) = match is_negligible(net, &k, &sub, DEFAULT_SLOPE_THRESHOLD) {
            Ok(cl) => {
                let fit = cl.fits.into_iter().next().map(|of| of.fit);
                let verdict = match &fit {
                    Some(f) if f.degenerate => Verdict::ExactZero,
                    Some(f) if f.slope >= DEFAULT_SLOPE_THRESHOLD => Verdict::NegligibleSlope,
                    _ => Verdict::Fail,
                };
                (fit, verdict)
            }
            Err(Error::InsufficientData { .. }) => (None, Verdict::Fail),
            Err(e) => return Err(e),
        };
        out.push(CircleProbeResult {
            angle: p,
            part: probe.part,
            chart,
            ball_radius: radius,
            eps0,
            entries: sub.len(),
            fit,
            verdict,
        });
    }
    let failures = out.iter().filter(|r| r.verdict == Verdict::Fail).count();
    Ok(CircleCertificate { probes: out, failures })
}

/// `eps^(-1/x)` on `(0, ∞)`, with derivatives from Taylor arithmetic on the
/// exponent `-ln(eps)/x`.
pub fn non_flabby_net() -> Net {
    let domain = Domain {
        lo: 0.0,
        hi: f64::INFINITY,
    };
    Net::new(domain, MAX_DERIVATIVE_ORDER, "eps^(-1/x)", |e, x, n| {
        let l = -e.ln();
        if n == 0 {
            return (l / x).exp();
        }
        Jet::variable(x, n).recip().scale(l).exp().derivative(n)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonFlabbyRow {
    pub c: f64,
    pub slope: f64,
    pub slope_times_c: f64,
    pub r_squared: f64,
}

/// Order-0 exponent of `eps^(-1/x)` on `[c, 1]` for each `c`.
pub fn non_flabby_demo(c_list: &[f64], sched: &EpsSchedule) -> Result<Vec<NonFlabbyRow>> {
    let net = non_flabby_net();
    c_list
        .iter()
        .map(|&c| {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::invalid(format!("left endpoint must lie in (0, 1], got {c}")));
            }
            let k = CompactBox::for_net(&net, c, 1.0)?;
            let fit = fit_order(&net, &k, 0, sched)?;
            Ok(NonFlabbyRow {
                c,
                slope: fit.slope,
                slope_times_c: fit.slope * c,
                r_squared: fit.r_squared,
            })
        })
        .collect()
}
