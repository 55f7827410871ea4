//! One-dimensional quadrature rules on a finite interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Trapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub lower: f64,
    pub upper: f64,
    pub nodes: usize,
    pub rule: Rule,
}

pub const MIN_NODES: usize = 16;

impl QuadratureSpec {
    pub fn new(lower: f64, upper: f64, nodes: usize, rule: Rule) -> Result<Self> {
        let spec = QuadratureSpec {
            lower,
            upper,
            nodes,
            rule,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gauss_legendre(lower: f64, upper: f64, nodes: usize) -> Result<Self> {
        QuadratureSpec::new(lower, upper, nodes, Rule::GaussLegendre)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::config(
                "quadrature",
                format!("need lower < upper, got [{}, {}]", self.lower, self.upper),
            ));
        }
        if self.nodes < MIN_NODES {
            return Err(Error::config(
                "quadrature.nodes",
                format!("need at least {MIN_NODES} nodes, got {}", self.nodes),
            ));
        }
        Ok(())
    }

    /// Same interval and rule with twice the nodes.
    pub fn doubled(&self) -> Self {
        QuadratureSpec {
            nodes: 2 * self.nodes,
            ..*self
        }
    }

    /// `(x_i, w_i)` pairs with `Σ w_i f(x_i) ≈ ∫_lower^upper f`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let half = 0.5 * (self.upper - self.lower);
        let mid = 0.5 * (self.upper + self.lower);
        match self.rule {
            Rule::GaussLegendre => gauss_legendre_unit(self.nodes)
                .into_iter()
                .map(|(t, w)| (mid + half * t, half * w))
                .collect(),
            Rule::Trapezoid => {
                let h = (self.upper - self.lower) / (self.nodes - 1) as f64;
                (0..self.nodes)
                    .map(|i| {
                        let w = if i == 0 || i == self.nodes - 1 { 0.5 * h } else { h };
                        (self.lower + i as f64 * h, w)
                    })
                    .collect()
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending, by Newton
/// iteration on `P_n` from the Chebyshev-like initial guesses.
pub fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out[i] = (-z, w);
        out[n - 1 - i] = (z, w);
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [16, 17, 64, 512, 1024] {
            let q = QuadratureSpec::gauss_legendre(-2.0, 5.0, n).unwrap();
            let s: f64 = q.nodes().iter().map(|p| p.1).sum();
            assert!((s - 7.0).abs() < 1e-12, "n={n}: {s}");
        }
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        let q = QuadratureSpec::gauss_legendre(0.0, 2.0, 16).unwrap();
        // ∫_0^2 x^31 dx = 2^32 / 32
        let v: f64 = q.nodes().iter().map(|&(x, w)| w * x.powi(31)).sum();
        assert!((v / (2f64.powi(32) / 32.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_integral() {
        let q = QuadratureSpec::gauss_legendre(-10.0, 10.0, 128).unwrap();
        let v: f64 = q.nodes().iter().map(|&(x, w)| w * (-0.5 * x * x).exp()).sum();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-13);
        let t = QuadratureSpec::new(-10.0, 10.0, 201, Rule::Trapezoid).unwrap();
        let v: f64 = t.nodes().iter().map(|&(x, w)| w * (-0.5 * x * x).exp()).sum();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn invalid_specs() {
        assert!(QuadratureSpec::gauss_legendre(1.0, 1.0, 32).is_err());
        assert!(QuadratureSpec::gauss_legendre(0.0, 1.0, 8).is_err());
    }
}
