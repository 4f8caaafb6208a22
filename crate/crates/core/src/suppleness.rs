//! Splitting `f` with support in `Z1 ∪ Z2` into `f1 + f2` with
//! `supp f_i ⊆ Z_i`, and sampled certificates of the support inclusions.
//!
//! The cut-off is the smoothed indicator `η` of the nearer-to-`Z1` set `Z̃`;
//! then `f1 = f·η` and `f2 = f·(1 - η)`. The width of `η` is `eps` (linear
//! mode) or `1/|ln eps|` (log mode, which keeps `η` in `G^∞`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_to_intervals, ClosedSet, TildeSet};
use crate::mollifier::{smooth_indicator, WidthFn};
use crate::nets::{
    is_ginfty, is_negligible, AsymptoticFit, Classification, CompactBox, EpsSchedule, Net, DEFAULT_SLOPE_THRESHOLD,
    DEFAULT_SPREAD_TOL, MIN_SCHEDULE_LEN,
};

/// Largest `eps` for which the window must accommodate the cut-off.
pub const DEFAULT_EPS_MAX: f64 = 0.125;
/// Probe balls use this fraction of the case radius.
pub const BALL_FRACTION: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidthMode {
    Linear,
    Log,
}

impl WidthMode {
    pub fn width_fn(self) -> WidthFn {
        match self {
            WidthMode::Linear => WidthFn::Linear,
            WidthMode::Log => WidthFn::Log,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub f: Net,
    pub f1: Net,
    pub f2: Net,
    pub eta: Net,
    pub z1: ClosedSet,
    pub z2: ClosedSet,
    pub tilde: Option<TildeSet>,
    pub tilde_intervals: Vec<(f64, f64)>,
    pub delta: f64,
    pub width_mode: WidthMode,
    pub window: CompactBox,
}

/// Union hull of the two sets.
fn hull2(z1: &ClosedSet, z2: &ClosedSet) -> Option<(f64, f64)> {
    match (z1.hull(), z2.hull()) {
        (Some(a), Some(b)) => Some((a.0.min(b.0), a.1.max(b.1))),
        (a, b) => a.or(b),
    }
}

/// A quarter of the widest gap between neighbouring sampled members of
/// `Z1 ∪ Z2`; 0.1 when all sampled members coincide.
pub fn default_delta(z1: &ClosedSet, z2: &ClosedSet) -> f64 {
    let mut members = z1.sample_members(64);
    members.extend(z2.sample_members(64));
    members.sort_by(f64::total_cmp);
    members.dedup();
    let gap = members.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    if gap > 0.0 {
        0.25 * gap
    } else {
        0.1
    }
}

pub fn decompose(
    f: &Net,
    z1: &ClosedSet,
    z2: &ClosedSet,
    delta: f64,
    window: CompactBox,
    mode: WidthMode,
) -> Result<DecompositionResult> {
    decompose_with(f, z1, z2, delta, window, mode, DEFAULT_EPS_MAX)
}

/// As [`decompose`], with the largest `eps` the window has to accommodate.
pub fn decompose_with(
    f: &Net,
    z1: &ClosedSet,
    z2: &ClosedSet,
    delta: f64,
    window: CompactBox,
    mode: WidthMode,
    eps_max: f64,
) -> Result<DecompositionResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if !(eps_max > 0.0 && eps_max < 1.0) {
        return Err(Error::EpsOutOfRange(eps_max));
    }
    z1.validate()?;
    z2.validate()?;
    if let Some((lo, hi)) = hull2(z1, z2) {
        let pad = delta + mode.width_fn().width(eps_max);
        let (need_lo, need_hi) = (lo - pad, hi + pad);
        if need_lo < window.lo || need_hi > window.hi {
            return Err(Error::WindowTooSmall {
                lo: window.lo,
                hi: window.hi,
                need_lo,
                need_hi,
            });
        }
    }

    let (tilde, tilde_intervals) = if z1.is_empty() {
        (None, Vec::new())
    } else {
        let t = TildeSet::new(z1.clone(), z2.clone(), delta)?;
        let iv = t.intervals(window.lo, window.hi)?;
        (Some(t), iv)
    };
    let eta = smooth_indicator(tilde_intervals.clone(), mode.width_fn())?;
    // 1 + (-1)·η is exactly 0 where η is exactly 1.
    let one_minus = Net::constant(1.0).add(&eta.scale(-1.0))?;
    let f1 = f.mul(&eta)?.with_label(format!("{}·eta", f.label()));
    let f2 = f.mul(&one_minus)?.with_label(format!("{}·(1-eta)", f.label()));
    Ok(DecompositionResult {
        f: f.clone(),
        f1,
        f2,
        eta,
        z1: z1.clone(),
        z2: z2.clone(),
        tilde,
        tilde_intervals,
        delta,
        width_mode: mode,
        window,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinfReport {
    pub f: Classification,
    pub f1: Classification,
    pub f2: Classification,
}

/// Orders tested for `G^∞` regularity.
pub const GINF_ORDERS: [usize; 5] = [0, 1, 2, 3, 4];

/// Log-mode decomposition, with `G^∞` fits of `f`, `f1` and `f2` on the
/// window over the entries of `sched` not above `2^-3`.
pub fn ginf_decompose(
    f: &Net,
    z1: &ClosedSet,
    z2: &ClosedSet,
    delta: f64,
    window: CompactBox,
    sched: &EpsSchedule,
) -> Result<(DecompositionResult, GinfReport)> {
    let res = decompose(f, z1, z2, delta, window, WidthMode::Log)?;
    let sched = sched
        .below(DEFAULT_EPS_MAX * (1.0 + 1e-12))
        .filter(|s| s.len() >= MIN_SCHEDULE_LEN)
        .ok_or_else(|| Error::invalid("schedule has fewer than 6 entries at or below 2^-3"))?;
    let k = window;
    let report = GinfReport {
        f: is_ginfty(&res.f, &k, &GINF_ORDERS, &sched, DEFAULT_SPREAD_TOL)?,
        f1: is_ginfty(&res.f1, &k, &GINF_ORDERS, &sched, DEFAULT_SPREAD_TOL)?,
        f2: is_ginfty(&res.f2, &k, &GINF_ORDERS, &sched, DEFAULT_SPREAD_TOL)?,
    };
    Ok((res, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    F1,
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub x: f64,
    pub part: Part,
}

/// Which radius rule applies to a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeCase {
    /// `f1`, `x ∈ Z̃ \ Z1`: radius `A/2`, `A = d(x, Z)`.
    InTilde,
    /// `f1`, `x ∉ Z̃`: radius `B/2`, `B = d(x, Z̃)`.
    OutsideTilde,
    /// `f2`, `x ∈ Z1 \ Z2`: radius `H'/2`, `H' = min(d(x, Z2), delta)`.
    InZ1,
    /// `f2`, `x ∉ Z`: radius `D/2`, `D = d(x, Z)`.
    OutsideSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ExactZero,
    NegligibleSlope,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub x: f64,
    pub part: Part,
    pub case: ProbeCase,
    /// The case distance `A`, `B`, `H'` or `D`.
    pub distance: f64,
    pub ball_radius: f64,
    /// Schedule entries at or above this value are excluded.
    pub eps0: f64,
    pub box_lo: f64,
    pub box_hi: f64,
    pub entries: usize,
    pub fit: Option<AsymptoticFit>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCertificate {
    pub probes: Vec<ProbeResult>,
    pub failures: usize,
}

impl SupportCertificate {
    pub fn holds(&self) -> bool {
        self.failures == 0
    }
}

struct Plan {
    case: ProbeCase,
    distance: f64,
    radius: f64,
    eps0: f64,
}

/// Case analysis for one probe. The net `f` is assumed to vanish at distance
/// `>= eps` from `Z`, as mollified constructions do.
fn plan(res: &DecompositionResult, probe: ProbeSpec) -> Result<Plan> {
    let x = probe.x;
    if !x.is_finite() {
        return Err(Error::invalid("probe must be finite"));
    }
    let z = res.z1.union(&res.z2);
    let width = res.width_mode.width_fn();
    match probe.part {
        Part::F1 => {
            if res.z1.contains(x) {
                return Err(Error::ProbeInsideTarget(x));
            }
            let in_tilde = res.tilde.as_ref().is_some_and(|t| t.contains(x));
            if in_tilde {
                let a = z.dist(x);
                let r = 0.5 * a;
                Ok(Plan {
                    case: ProbeCase::InTilde,
                    distance: a,
                    radius: r,
                    eps0: a - r,
                })
            } else {
                let b = distance_to_intervals(&res.tilde_intervals, x);
                if b.is_infinite() {
                    // η ≡ 0: f1 vanishes identically.
                    return Ok(Plan {
                        case: ProbeCase::OutsideTilde,
                        distance: b,
                        radius: f64::INFINITY,
                        eps0: 1.0,
                    });
                }
                let r = 0.5 * b;
                Ok(Plan {
                    case: ProbeCase::OutsideTilde,
                    distance: b,
                    radius: r,
                    eps0: width.eps_below_width(b - r).unwrap_or(0.0),
                })
            }
        }
        Part::F2 => {
            if res.z2.contains(x) {
                return Err(Error::ProbeInsideTarget(x));
            }
            if res.z1.contains(x) {
                let h = res.z2.dist(x).min(res.delta);
                Ok(Plan {
                    case: ProbeCase::InZ1,
                    distance: h,
                    radius: 0.5 * h,
                    eps0: 1.0,
                })
            } else {
                let d = z.dist(x);
                let r = 0.5 * d;
                Ok(Plan {
                    case: ProbeCase::OutsideSupport,
                    distance: d,
                    radius: r,
                    eps0: d - r,
                })
            }
        }
    }
}

/// Ball radius and `eps0` the case analysis assigns to a probe.
pub fn probe_plan(res: &DecompositionResult, probe: ProbeSpec) -> Result<(f64, f64)> {
    plan(res, probe).map(|p| (p.radius, p.eps0))
}

fn run_probe(
    res: &DecompositionResult,
    probe: ProbeSpec,
    sched: &EpsSchedule,
    slope_threshold: f64,
) -> Result<ProbeResult> {
    let p = plan(res, probe)?;
    let x = probe.x;
    let w = res.window;
    if !(x >= w.lo && x <= w.hi) {
        return Err(Error::invalid(format!("probe {x} lies outside the window [{}, {}]", w.lo, w.hi)));
    }
    let reach = BALL_FRACTION * p.radius;
    let (lo, hi) = ((x - reach).max(w.lo), (x + reach).min(w.hi));
    let sub = sched
        .below(p.eps0)
        .filter(|s| s.len() >= MIN_SCHEDULE_LEN)
        .ok_or(Error::ProbeTooClose {
            x,
            eps0: p.eps0,
            entries: sched.count_below(p.eps0),
        })?;
    let net = match probe.part {
        Part::F1 => &res.f1,
        Part::F2 => &res.f2,
    };
    let k = CompactBox::for_net(net, lo, hi)?;
    let (fit, verdict) = match is_negligible(net, &k, &sub, slope_threshold) {
        Ok(c) => {
            let fit = c.fits.into_iter().next().map(|of| of.fit);
            let verdict = match &fit {
                Some(f) if f.degenerate => Verdict::ExactZero,
                Some(f) if f.slope >= slope_threshold => Verdict::NegligibleSlope,
                _ => Verdict::Fail,
            };
            (fit, verdict)
        }
        Err(Error::InsufficientData { .. }) => (None, Verdict::Fail),
        Err(e) => return Err(e),
    };
    Ok(ProbeResult {
        x,
        part: probe.part,
        case: p.case,
        distance: p.distance,
        ball_radius: p.radius,
        eps0: p.eps0,
        box_lo: lo,
        box_hi: hi,
        entries: sub.len(),
        fit,
        verdict,
    })
}

/// Checks `f1` (resp. `f2`) is negligible on a ball around each probe
/// outside `Z1` (resp. `Z2`), with radii from the case analysis.
pub fn certify_support(res: &DecompositionResult, probes: &[ProbeSpec], sched: &EpsSchedule) -> Result<SupportCertificate> {
    certify_support_with(res, probes, sched, DEFAULT_SLOPE_THRESHOLD)
}

pub fn certify_support_with(
    res: &DecompositionResult,
    probes: &[ProbeSpec],
    sched: &EpsSchedule,
    slope_threshold: f64,
) -> Result<SupportCertificate> {
    #[cfg(feature = "parallel")]
    let results: Result<Vec<ProbeResult>> = {
        use rayon::prelude::*;
        probes
            .par_iter()
            .map(|&p| run_probe(res, p, sched, slope_threshold))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<ProbeResult>> = probes
        .iter()
        .map(|&p| run_probe(res, p, sched, slope_threshold))
        .collect();
    let probes = results?;
    let failures = probes.iter().filter(|p| p.verdict == Verdict::Fail).count();
    Ok(SupportCertificate { probes, failures })
}

/// Probes covering each case, drawn from members of the sets, points just
/// off them, and the window interior; candidates whose ball leaves fewer
/// than six schedule entries are skipped.
pub fn auto_probes(res: &DecompositionResult, sched: &EpsSchedule, per_case: usize) -> Vec<ProbeSpec> {
    let w = res.window;
    let mut candidates: Vec<f64> = Vec::new();
    let members1 = res.z1.sample_members(12);
    let members2 = res.z2.sample_members(12);
    for &m in members1.iter().chain(&members2) {
        candidates.push(m);
        for off in [0.5, 0.25] {
            candidates.push(m + off * res.delta);
            candidates.push(m - off * res.delta);
        }
    }
    for i in 1..8 {
        candidates.push(w.lo + (w.hi - w.lo) * i as f64 / 8.0);
    }
    candidates.retain(|x| x.is_finite() && *x > w.lo && *x < w.hi);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut eligible: [Vec<ProbeSpec>; 4] = Default::default();
    for part in [Part::F1, Part::F2] {
        for &x in &candidates {
            let probe = ProbeSpec { x, part };
            let Ok(p) = plan(res, probe) else { continue };
            if p.radius > 0.0 && sched.count_below(p.eps0) >= MIN_SCHEDULE_LEN {
                eligible[p.case as usize].push(probe);
            }
        }
    }
    // evenly spaced picks within each case
    let mut out = Vec::new();
    for list in &eligible {
        let take = list.len().min(per_case);
        for i in 0..take {
            let idx = if take == 1 { list.len() / 2 } else { i * (list.len() - 1) / (take - 1) };
            out.push(list[idx]);
        }
    }
    out
}
