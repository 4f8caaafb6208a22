//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The integration range is first split at the caller's breakpoints; the
//! subinterval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol * |I|)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

impl Quadrature {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            rel_tol,
            ..Quadrature::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, lo: f64, hi: f64) -> Result<QuadResult> {
        self.integrate_with_breaks(f, lo, hi, &[])
    }

    /// Integrates over `[lo, hi]`, forcing panel edges at every breakpoint
    /// that falls strictly inside the range.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        breaks: &[f64],
    ) -> Result<QuadResult> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid("quadrature bounds must be finite"));
        }
        if lo == hi {
            return Ok(QuadResult {
                value: 0.0,
                error: 0.0,
                intervals: 0,
            });
        }
        let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };

        let mut edges: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
        edges.push(a);
        edges.push(b);
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let mut heap = BinaryHeap::new();
        let mut total = 0.0;
        let mut total_err = 0.0;
        for w in edges.windows(2) {
            let (value, error) = gauss_kronrod(&f, w[0], w[1]);
            total += value;
            total_err += error;
            heap.push(Panel {
                lo: w[0],
                hi: w[1],
                value,
                error,
            });
        }

        while !(total_err <= self.abs_tol.max(self.rel_tol * total.abs())) {
            if heap.len() >= self.max_intervals || !total.is_finite() {
                return Err(Error::Quadrature {
                    lo,
                    hi,
                    error: total_err,
                    intervals: heap.len(),
                });
            }
            let worst = heap.pop().expect("heap is never empty");
            let mid = 0.5 * (worst.lo + worst.hi);
            if mid <= worst.lo || mid >= worst.hi {
                // Panel width at machine resolution; nothing left to refine.
                heap.push(worst);
                return Err(Error::Quadrature {
                    lo,
                    hi,
                    error: total_err,
                    intervals: heap.len(),
                });
            }
            let (v1, e1) = gauss_kronrod(&f, worst.lo, mid);
            let (v2, e2) = gauss_kronrod(&f, mid, worst.hi);
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Panel {
                lo: worst.lo,
                hi: mid,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                lo: mid,
                hi: worst.hi,
                value: v2,
                error: e2,
            });
        }

        // Re-sum from panels to shed the drift of incremental updates.
        let mut panels: Vec<Panel> = heap.into_vec();
        panels.sort_by(|p, q| p.lo.total_cmp(&q.lo));
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        Ok(QuadResult {
            value: sign * value,
            error,
            intervals: panels.len(),
        })
    }
}
