//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] of order `n` at a point `x0` stores the normalized Taylor
//! coefficients `c[k] = f^(k)(x0) / k!` for `k = 0..=n`. Products, quotients,
//! square roots and exponentials of jets follow the usual coefficient
//! recurrences, which gives exact-in-arithmetic derivatives of compositions
//! without symbolic differentiation.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Jet::constant(0.0, order)
    }

    /// The identity function `t ↦ t` expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut jet = Jet::constant(x0, order);
        if order >= 1 {
            jet.coeffs[1] = 1.0;
        }
        jet
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Jet { coeffs }
    }

    /// Builds a jet from derivative values `f^(k)(x0)`, `k = 0..`.
    pub fn from_derivatives(derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Jet::from_coeffs(coeffs)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `f^(k)(x0)`.
    pub fn derivative(&self, k: usize) -> f64 {
        if k > self.order() {
            return f64::NAN;
        }
        self.coeffs[k] * factorial(k)
    }

    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order()).map(|k| self.derivative(k)).collect()
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet::from_coeffs(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn recip(&self) -> Jet {
        let n = self.order();
        let a = &self.coeffs;
        let mut r = vec![0.0; n + 1];
        r[0] = 1.0 / a[0];
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| a[j] * r[k - j]).sum();
            r[k] = -s / a[0];
        }
        Jet::from_coeffs(r)
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self * &other.recip()
    }

    pub fn exp(&self) -> Jet {
        let n = self.order();
        let g = &self.coeffs;
        let mut h = vec![0.0; n + 1];
        h[0] = g[0].exp();
        for k in 1..=n {
            let s: f64 = (1..=k).map(|j| j as f64 * g[j] * h[k - j]).sum();
            h[k] = s / k as f64;
        }
        Jet::from_coeffs(h)
    }

    /// Square root; requires a strictly positive value.
    pub fn sqrt(&self) -> Jet {
        let n = self.order();
        let a = &self.coeffs;
        let mut r = vec![0.0; n + 1];
        r[0] = a[0].sqrt();
        for k in 1..=n {
            let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (a[k] - s) / (2.0 * r[0]);
        }
        Jet::from_coeffs(r)
    }

    /// Composition with a shift of the expansion variable by a constant
    /// factor: returns the jet of `t ↦ f(s·t)` given the jet of `f` at `s·x0`.
    pub fn chain_linear(&self, s: f64) -> Jet {
        let mut p = 1.0;
        Jet::from_coeffs(
            self.coeffs
                .iter()
                .map(|c| {
                    let v = c * p;
                    p *= s;
                    v
                })
                .collect(),
        )
    }

    fn zip_with(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let n = self.order().min(other.order());
        Jet::from_coeffs((0..=n).map(|k| f(self.coeffs[k], other.coeffs[k])).collect())
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.order().min(rhs.order());
        let coeffs = (0..=n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum())
            .collect();
        Jet::from_coeffs(coeffs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * j as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}
