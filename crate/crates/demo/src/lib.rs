//! Browser bindings: smoothed indicators, scaling fits and the pile-up
//! net decomposition, sampled for a canvas.

use colombeau::geometry::{ClosedSet, PointFamily};
use colombeau::mollifier::{smooth_indicator, WidthFn};
use colombeau::nets::{fit_order, CompactBox, EpsSchedule};
use colombeau::scenario::{uniform_grid, NetSpec};
use colombeau::suppleness::{decompose, WidthMode};
use colombeau::embedding::{example2_net, Example2Family};
use colombeau::mollifier::Bump;
use wasm_bindgen::prelude::*;

fn width(mode: &str) -> Result<WidthFn, String> {
    match mode {
        "linear" => Ok(WidthFn::Linear),
        "log" => Ok(WidthFn::Log),
        other => other
            .parse::<f64>()
            .map(WidthFn::Fixed)
            .map_err(|_| format!("width `{other}`: expected linear, log or a number")),
    }
}

/// Indicator of the union of `[bounds[2i], bounds[2i+1]]` at `eps` on a grid.
pub fn indicator_values(bounds: &[f64], mode: &str, eps: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if bounds.len() % 2 != 0 {
        return Err("bounds must come in pairs".into());
    }
    let ivs = bounds.chunks(2).map(|c| (c[0], c[1])).collect();
    let net = smooth_indicator(ivs, width(mode)?).map_err(|e| e.to_string())?;
    uniform_grid(lo, hi, points)
        .into_iter()
        .map(|x| net.eval(eps, x, 0).map_err(|e| e.to_string()))
        .collect()
}

/// JSON `{slope, r_squared, sup_values}` for order `n` of a net given as a
/// scenario net spec, over `[lo, hi]` and `eps = 2^-3 .. 2^-k_max`.
pub fn scaling_fit(net_json: &str, n: usize, lo: f64, hi: f64, k_max: u32) -> Result<String, String> {
    let spec: NetSpec = serde_json::from_str(net_json).map_err(|e| e.to_string())?;
    let net = spec.build().map_err(|e| e.to_string())?;
    let k = CompactBox::for_net(&net, lo, hi).map_err(|e| e.to_string())?;
    let sched = EpsSchedule::dyadic(3, k_max).map_err(|e| e.to_string())?;
    let fit = fit_order(&net, &k, n, &sched).map_err(|e| e.to_string())?;
    Ok(serde_json::json!({
        "slope": fit.slope,
        "r_squared": fit.r_squared,
        "degenerate": fit.degenerate,
        "sup_values": fit.sup_values,
    })
    .to_string())
}

/// Pile-up net split along `{1/n²} ∪ {0}` and `{-1/n²} ∪ {0}`. Returns
/// `points` rows of `[f, f1, f2, eta]`, flattened.
pub fn example2_split(delta: f64, eps: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    let e = |err: colombeau::Error| err.to_string();
    let f = example2_net(Example2Family::default(), Bump::standard()).map_err(e)?;
    let family = |sign| ClosedSet {
        points: vec![0.0],
        families: vec![PointFamily { scale: 1.0, sign }],
        ..ClosedSet::default()
    };
    let window = CompactBox::for_net(&f, -1.5, 1.5).map_err(e)?;
    let res = decompose(&f, &family(1.0), &family(-1.0), delta, window, WidthMode::Linear).map_err(e)?;
    let mut out = Vec::with_capacity(points * 4);
    for x in uniform_grid(lo, hi, points) {
        for net in [&res.f, &res.f1, &res.f2, &res.eta] {
            out.push(net.eval(eps, x, 0).map_err(e)?);
        }
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn indicator_curve(bounds: &[f64], mode: &str, eps: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    indicator_values(bounds, mode, eps, lo, hi, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn scaling_table(net_json: &str, n: usize, lo: f64, hi: f64, k_max: u32) -> Result<String, JsValue> {
    scaling_fit(net_json, n, lo, hi, k_max).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn decomposition_curves(delta: f64, eps: f64, lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    example2_split(delta, eps, lo, hi, points).map_err(|e| JsValue::from_str(&e))
}
