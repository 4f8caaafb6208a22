//! JSON scenarios and reports.
//!
//! A scenario names a pipeline (`kind`) and the objects it runs on; [`run`]
//! executes it and returns a [`Report`] whose `results` are deterministic
//! for a given scenario and seed. [`emit_samples`] writes plot tables.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::embedding::{
    embed, example2_net, pairing_partial_sums, Atom, AtomicDistribution, Density, Example2Family, TestFunction,
};
use crate::error::{Error, Result};
use crate::geometry::{assert2_check, ClosedSet, PointFamily};
use crate::manifold::{
    certify_circle, check_transformation_law, embed_on_circle, make_atlas, manifold_decompose, non_flabby_demo,
    non_flabby_net, partition_of_unity, reconstruct, AngleSet, CircleProbe,
};
use crate::mollifier::{moment_bump, smooth_indicator, Bump, Mollifier, WidthFn};
use crate::nets::{
    is_ginfty, is_moderate, is_negligible, CompactBox, Domain, EpsSchedule, Net, DEFAULT_SLOPE_FLOOR,
    DEFAULT_SLOPE_THRESHOLD, DEFAULT_SPREAD_TOL,
};
use crate::suppleness::{
    auto_probes, certify_support, decompose, ginf_decompose, DecompositionResult, ProbeSpec, WidthMode,
};

pub const TOOL: &str = "colombeau";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CSV_HEADER: &str = "eps,x,value";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSpec>,
    #[serde(flatten)]
    pub job: Job,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Dyadic { k_min: u32, k_max: u32 },
    Values { values: Vec<f64> },
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<EpsSchedule> {
        match self {
            ScheduleSpec::Dyadic { k_min, k_max } => EpsSchedule::dyadic(*k_min, *k_max),
            ScheduleSpec::Values { values } => EpsSchedule::new(values.clone()),
        }
    }
}

/// Plot table request: the scenario's net (or `net`) on `points` evenly
/// spaced nodes of `[lo, hi]` for each `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<NetSpec>,
    pub eps: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub out: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Test {
    Moderate,
    Negligible,
    Ginfty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Job {
    Classify {
        net: NetSpec,
        k: (f64, f64),
        tests: Vec<Test>,
        #[serde(default = "default_orders")]
        orders: Vec<usize>,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        expect: BTreeMap<String, bool>,
    },
    Decompose {
        net: NetSpec,
        z1: ClosedSet,
        z2: ClosedSet,
        deltas: Vec<f64>,
        window: (f64, f64),
        #[serde(default = "linear")]
        width_mode: WidthMode,
        #[serde(default)]
        probes: Vec<ProbeSpec>,
        #[serde(default)]
        auto_probes: usize,
        #[serde(default = "default_additivity_samples")]
        additivity_samples: usize,
    },
    GinfDecompose {
        net: NetSpec,
        z1: ClosedSet,
        z2: ClosedSet,
        delta: f64,
        window: (f64, f64),
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        expect: BTreeMap<String, bool>,
    },
    ManifoldDecompose {
        atoms: Vec<Atom>,
        #[serde(default)]
        moments: usize,
        z1: AngleSet,
        z2: AngleSet,
        delta: f64,
        #[serde(default)]
        probes: Vec<CircleProbe>,
        #[serde(default = "default_law_samples")]
        law_samples: usize,
        #[serde(default = "default_additivity_samples")]
        additivity_samples: usize,
    },
    Example2 {
        #[serde(default)]
        family: Example2Family,
        #[serde(default = "default_example2_box")]
        k: (f64, f64),
        #[serde(default = "default_n_list")]
        n_list: Vec<u64>,
    },
    NonFlabby {
        c_list: Vec<f64>,
    },
    Assert2 {
        z1: ClosedSet,
        z2: ClosedSet,
        delta: f64,
        #[serde(default = "default_sample_count")]
        sample_count: usize,
    },
}

fn default_orders() -> Vec<usize> {
    vec![0, 1, 2]
}
fn linear() -> WidthMode {
    WidthMode::Linear
}
fn default_additivity_samples() -> usize {
    1000
}
fn default_law_samples() -> usize {
    2000
}
fn default_example2_box() -> (f64, f64) {
    (-0.1, 0.1)
}
fn default_n_list() -> Vec<u64> {
    vec![10, 1000, 100_000]
}
fn default_sample_count() -> usize {
    100_000
}

/// Net constructions available to scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NetSpec {
    Constant {
        value: f64,
    },
    Zero,
    /// Atoms (and optionally a bump density and the infinite family) mollified
    /// with a kernel having `moments` vanishing moments.
    Distribution {
        #[serde(default)]
        atoms: Vec<Atom>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        example2: Option<Example2Family>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensitySpec>,
        #[serde(default)]
        moments: usize,
    },
    SmoothIndicator {
        intervals: Vec<(f64, f64)>,
        width: WidthFn,
    },
    /// `eps^power · sin x`
    PowerSin {
        power: f64,
    },
    /// `exp(-1/eps) · sin x`
    ExpDecaySin,
    /// `eps^(-1/x)` on `(0, ∞)`
    InversePower,
    Product {
        factors: Vec<NetSpec>,
    },
    Sum {
        terms: Vec<NetSpec>,
    },
}

/// `mass/radius · φ((x - center)/radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub center: f64,
    pub radius: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

fn kernel(moments: usize) -> Result<Arc<dyn Mollifier>> {
    Ok(if moments == 0 {
        Bump::standard()
    } else {
        Arc::new(moment_bump(moments)?)
    })
}

impl NetSpec {
    pub fn build(&self) -> Result<Net> {
        match self {
            NetSpec::Constant { value } => Ok(Net::constant(*value)),
            NetSpec::Zero => Ok(Net::zero()),
            NetSpec::Distribution {
                atoms,
                example2,
                density,
                moments,
            } => {
                let k = kernel(*moments)?;
                let mut d = AtomicDistribution::atoms(atoms.clone());
                if let Some(ds) = density {
                    d = d.with_density(Density::bump(ds.center, ds.radius, ds.mass)?);
                }
                let base = embed(&d, k.clone())?;
                match example2 {
                    Some(fam) => {
                        let e2 = example2_net(*fam, k)?;
                        if atoms.is_empty() && density.is_none() {
                            Ok(e2)
                        } else {
                            e2.add(&base)
                        }
                    }
                    None => Ok(base),
                }
            }
            NetSpec::SmoothIndicator { intervals, width } => smooth_indicator(intervals.clone(), *width),
            NetSpec::PowerSin { power } => {
                let p = *power;
                Ok(Net::new(Domain::REAL_LINE, usize::MAX, format!("eps^{p}·sin"), move |e, x, n| {
                    e.powf(p) * sin_derivative(x, n)
                }))
            }
            NetSpec::ExpDecaySin => Ok(Net::new(Domain::REAL_LINE, usize::MAX, "exp(-1/eps)·sin", |e, x, n| {
                (-1.0 / e).exp() * sin_derivative(x, n)
            })),
            NetSpec::InversePower => Ok(non_flabby_net()),
            NetSpec::Product { factors } => fold(factors, |a, b| a.mul(b)),
            NetSpec::Sum { terms } => fold(terms, |a, b| a.add(b)),
        }
    }
}

fn sin_derivative(x: f64, n: usize) -> f64 {
    match n % 4 {
        0 => x.sin(),
        1 => x.cos(),
        2 => -x.sin(),
        _ => -x.cos(),
    }
}

fn fold(specs: &[NetSpec], op: impl Fn(&Net, &Net) -> Result<Net>) -> Result<Net> {
    let mut it = specs.iter();
    let first = it.next().ok_or_else(|| Error::invalid("empty net list"))?.build()?;
    it.try_fold(first, |acc, s| op(&acc, &s.build()?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub scenario: Scenario,
    pub results: Value,
    pub failures: usize,
    pub wall_clock_ms: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::invalid(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        let check_box = |(lo, hi): (f64, f64), what: &str| {
            if lo.is_finite() && hi.is_finite() && lo <= hi {
                Ok(())
            } else {
                Err(Error::invalid(format!("{what} [{lo}, {hi}] is not a finite interval")))
            }
        };
        match &self.job {
            Job::Classify { k, tests, orders, .. } => {
                check_box(*k, "k")?;
                if tests.is_empty() || orders.is_empty() {
                    return Err(Error::invalid("classify needs at least one test and one order"));
                }
            }
            Job::Decompose { window, deltas, .. } => {
                check_box(*window, "window")?;
                if deltas.is_empty() {
                    return Err(Error::invalid("decompose needs at least one delta"));
                }
            }
            Job::GinfDecompose { window, .. } => check_box(*window, "window")?,
            Job::Example2 { k, .. } => check_box(*k, "k")?,
            Job::ManifoldDecompose { .. } | Job::NonFlabby { .. } | Job::Assert2 { .. } => {}
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<EpsSchedule> {
        match &self.schedule {
            Some(s) => s.build(),
            None => Ok(EpsSchedule::default()),
        }
    }

    /// The net a `samples` section plots by default.
    pub fn primary_net(&self) -> Result<Net> {
        match &self.job {
            Job::Classify { net, .. } | Job::Decompose { net, .. } | Job::GinfDecompose { net, .. } => net.build(),
            Job::Example2 { family, .. } => example2_net(*family, Bump::standard()),
            Job::ManifoldDecompose { atoms, moments, .. } => {
                Ok(embed_on_circle(&make_atlas(), atoms, kernel(*moments)?)?.local(0).clone())
            }
            Job::NonFlabby { .. } => Ok(non_flabby_net()),
            Job::Assert2 { .. } => Err(Error::invalid("assert2 scenarios have no net to sample")),
        }
    }
}

/// Runs the scenario; `results` and `failures` depend only on the scenario.
pub fn run(scenario: &Scenario) -> Result<Report> {
    scenario.validate()?;
    let start = Instant::now();
    let sched = scenario.schedule()?;
    let seed = scenario.seed;
    let (results, failures) = match &scenario.job {
        Job::Classify {
            net,
            k,
            tests,
            orders,
            expect,
        } => run_classify(&net.build()?, *k, tests, orders, expect, &sched)?,
        Job::Decompose {
            net,
            z1,
            z2,
            deltas,
            window,
            width_mode,
            probes,
            auto_probes: per_case,
            additivity_samples,
        } => {
            let f = net.build()?;
            let w = CompactBox::for_net(&f, window.0, window.1)?;
            let mut out = Vec::new();
            let mut failures = 0;
            for &delta in deltas {
                let res = decompose(&f, z1, z2, delta, w, *width_mode)?;
                let mut all = probes.clone();
                all.extend(auto_probes(&res, &sched, *per_case));
                let cert = certify_support(&res, &all, &sched)?;
                let add = additivity_error(&res, *additivity_samples, &sched, seed)?;
                failures += cert.failures;
                out.push(json!({
                    "delta": delta,
                    "tilde_intervals": res.tilde_intervals,
                    "additivity_max_rel_error": add,
                    "certificate": cert,
                }));
            }
            (json!({ "decompositions": out }), failures)
        }
        Job::GinfDecompose {
            net,
            z1,
            z2,
            delta,
            window,
            expect,
        } => {
            let f = net.build()?;
            let w = CompactBox::for_net(&f, window.0, window.1)?;
            let (res, rep) = ginf_decompose(&f, z1, z2, *delta, w, &sched)?;
            let add = additivity_error(&res, default_additivity_samples(), &sched, seed)?;
            let observed = BTreeMap::from([
                ("f_ginfty".to_string(), rep.f.holds),
                ("f1_ginfty".to_string(), rep.f1.holds),
                ("f2_ginfty".to_string(), rep.f2.holds),
            ]);
            let failures = mismatches(expect, &observed)?;
            (
                json!({
                    "tilde_intervals": res.tilde_intervals,
                    "additivity_max_rel_error": add,
                    "ginfty": rep,
                }),
                failures,
            )
        }
        Job::ManifoldDecompose {
            atoms,
            moments,
            z1,
            z2,
            delta,
            probes,
            law_samples,
            additivity_samples,
        } => run_manifold(atoms, *moments, z1, z2, *delta, probes, *law_samples, *additivity_samples, &sched, seed)?,
        Job::Example2 { family, k, n_list } => {
            let net = example2_net(*family, Bump::standard())?;
            let kb = CompactBox::for_net(&net, k.0, k.1)?;
            let moderate = is_moderate(&net, &kb, &[0], &sched, DEFAULT_SLOPE_FLOOR)?;
            let psi = TestFunction::plateau(-1.0, 1.0, 0.5)?;
            let fam = PointFamily::new(family.scale, 1.0)?;
            let sums = pairing_partial_sums(&fam, &psi, n_list);
            (
                json!({
                    "order0_slope": moderate.fits[0].fit.slope,
                    "moderate": moderate,
                    "truncation_bound_coefficient": net.meta().get("truncation_bound_coefficient"),
                    "partial_sums": sums,
                }),
                0,
            )
        }
        Job::NonFlabby { c_list } => (json!({ "rows": non_flabby_demo(c_list, &sched)? }), 0),
        Job::Assert2 {
            z1,
            z2,
            delta,
            sample_count,
        } => {
            let rep = assert2_check(z1, z2, *delta, *sample_count, seed)?;
            (json!({ "assert2": rep, "holds": rep.holds() }), usize::from(!rep.holds()))
        }
    };
    Ok(Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        seed,
        scenario: scenario.clone(),
        results,
        failures,
        wall_clock_ms: start.elapsed().as_millis() as u64,
    })
}

fn mismatches(expect: &BTreeMap<String, bool>, observed: &BTreeMap<String, bool>) -> Result<usize> {
    let mut n = 0;
    for (key, want) in expect {
        let got = observed
            .get(key)
            .ok_or_else(|| Error::invalid(format!("unknown expectation `{key}`; valid: {:?}", observed.keys())))?;
        n += usize::from(got != want);
    }
    Ok(n)
}

fn run_classify(
    net: &Net,
    k: (f64, f64),
    tests: &[Test],
    orders: &[usize],
    expect: &BTreeMap<String, bool>,
    sched: &EpsSchedule,
) -> Result<(Value, usize)> {
    let kb = CompactBox::for_net(net, k.0, k.1)?;
    let mut out = serde_json::Map::new();
    let mut observed = BTreeMap::new();
    for t in tests {
        let (name, c) = match t {
            Test::Moderate => ("moderate", is_moderate(net, &kb, orders, sched, DEFAULT_SLOPE_FLOOR)?),
            Test::Negligible => ("negligible", is_negligible(net, &kb, sched, DEFAULT_SLOPE_THRESHOLD)?),
            Test::Ginfty => ("ginfty", is_ginfty(net, &kb, orders, sched, DEFAULT_SPREAD_TOL)?),
        };
        observed.insert(name.to_string(), c.holds);
        out.insert(name.into(), serde_json::to_value(c).expect("serializable"));
    }
    let failures = mismatches(expect, &observed)?;
    Ok((Value::Object(out), failures))
}

/// `max |f1 + f2 - f| / |f|` (absolute where `f = 0`) at random `(eps, x)`
/// with `eps` log-uniform over the schedule range and `x` in the window.
pub fn additivity_error(res: &DecompositionResult, samples: usize, sched: &EpsSchedule, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = sched.values();
    let (lmax, lmin) = (vals[0].ln(), vals[vals.len() - 1].ln());
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let e = (lmin + (lmax - lmin) * rng.gen::<f64>()).exp();
        let x = res.window.lo + (res.window.hi - res.window.lo) * rng.gen::<f64>();
        let f = res.f.eval(e, x, 0)?;
        let s = res.f1.eval(e, x, 0)? + res.f2.eval(e, x, 0)?;
        let err = if f == 0.0 { s.abs() } else { (s - f).abs() / f.abs() };
        worst = worst.max(err);
    }
    Ok(worst)
}

#[allow(clippy::too_many_arguments)]
fn run_manifold(
    atoms: &[Atom],
    moments: usize,
    z1: &AngleSet,
    z2: &AngleSet,
    delta: f64,
    probes: &[CircleProbe],
    law_samples: usize,
    additivity_samples: usize,
    sched: &EpsSchedule,
    seed: u64,
) -> Result<(Value, usize)> {
    use std::f64::consts::{PI, TAU};
    let atlas = make_atlas();
    let u = embed_on_circle(&atlas, atoms, kernel(moments)?)?;
    let dec = manifold_decompose(&u, z1, z2, delta)?;
    let pou = Arc::new(partition_of_unity(&atlas)?);

    let grid = 10_000;
    let sum_sq_dev = (0..grid)
        .map(|i| (pou.sum_squares(-PI + TAU * (i as f64 + 0.5) / grid as f64) - 1.0).abs())
        .fold(0.0f64, f64::max);

    let law_eps: Vec<f64> = (3..=8).map(|k| 2f64.powi(-k)).collect();
    let law1 = check_transformation_law(&dec.u1, &law_eps, law_samples)?;
    let law2 = check_transformation_law(&dec.u2, &law_eps, law_samples)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals = sched.values();
    let (lmax, lmin) = (vals[0].ln(), vals[vals.len() - 1].ln());
    let recon: Vec<Net> = (0..atlas.charts.len())
        .map(|b| reconstruct(&u, &pou, b))
        .collect::<Result<_>>()?;
    let (mut add_err, mut recon_err) = (0.0f64, 0.0f64);
    for _ in 0..additivity_samples {
        let e = (lmin + (lmax - lmin) * rng.gen::<f64>()).exp();
        let p = -PI + TAU * rng.gen::<f64>();
        let v = u.eval(e, p, 0)?;
        let s = dec.u1.eval(e, p, 0)? + dec.u2.eval(e, p, 0)?;
        let rel = |a: f64| if v == 0.0 { a.abs() } else { (a - v).abs() / v.abs() };
        add_err = add_err.max(rel(s));
        let chart = atlas.best_chart(p).expect("charts cover the circle");
        let x = atlas.charts[chart].coord(p).expect("best chart contains the point");
        recon_err = recon_err.max(rel(recon[chart].eval(e, x, 0)?));
    }
    let cert = certify_circle(&dec, probes, sched)?;
    let failures = cert.failures + usize::from(!law1.holds) + usize::from(!law2.holds);
    Ok((
        json!({
            "sum_squares_max_deviation": sum_sq_dev,
            "reconstruction_max_rel_error": recon_err,
            "additivity_max_rel_error": add_err,
            "transformation_law_u1": law1,
            "transformation_law_u2": law2,
            "certificate": cert,
        }),
        failures,
    ))
}

/// Writes `eps,x,value` rows, row-major by `eps` then `x`; returns the row count.
pub fn emit_samples<W: Write>(net: &Net, eps_list: &[f64], grid: &[f64], out: &mut W) -> Result<usize> {
    let io = |e: std::io::Error| Error::invalid(format!("write failed: {e}"));
    writeln!(out, "{CSV_HEADER}").map_err(io)?;
    let mut rows = 0;
    for &e in eps_list {
        for &x in grid {
            // Adding +0 maps -0 to +0.
            let v = net.eval(e, x, 0)? + 0.0;
            writeln!(out, "{e:e},{x:e},{v:e}").map_err(io)?;
            rows += 1;
        }
    }
    Ok(rows)
}

/// `points` evenly spaced nodes of `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => (0..points)
            .map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 })
            .collect(),
    }
}
