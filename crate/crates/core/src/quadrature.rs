//! Gauss rules on the reference edge `[0, 1]` and the reference triangle
//! `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}`.
//!
//! Triangle rules are collapsed (Duffy) products of Gauss-Legendre rules, so
//! all weights are positive for every degree.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Triangle,
    Edge,
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub domain: Domain,
    pub degree: usize,
    /// Barycentric coordinates. Triangle points are `(λ0, λ1, λ2)` with
    /// `(ξ, η) = (λ1, λ2)`; edge points use `(1 - t, t, 0)`.
    pub points: Vec<[f64; 3]>,
    /// Weights summing to the reference measure (1/2 or 1).
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reference coordinate `t` of an edge point.
    pub fn edge_parameter(&self, q: usize) -> f64 {
        self.points[q][1]
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

pub fn make_quadrature(domain: Domain, degree: usize) -> Result<QuadratureRule> {
    if degree == 0 || degree > MAX_DEGREE {
        return Err(Error::Argument(format!("quadrature degree {degree} outside 1..={MAX_DEGREE}")));
    }
    Ok(match domain {
        Domain::Edge => {
            let (x, w) = gauss_legendre_unit(degree / 2 + 1);
            QuadratureRule { domain, degree, points: x.iter().map(|&t| [1.0 - t, t, 0.0]).collect(), weights: w }
        }
        Domain::Triangle => {
            // ∫_T f = ∫_0^1 ∫_0^1 f(u, v(1-u)) (1-u) dv du
            let (xu, wu) = gauss_legendre_unit(degree.div_ceil(2) + 1);
            let (xv, wv) = gauss_legendre_unit(degree / 2 + 1);
            let mut points = Vec::with_capacity(xu.len() * xv.len());
            let mut weights = Vec::with_capacity(xu.len() * xv.len());
            for (&u, &a) in xu.iter().zip(&wu) {
                for (&v, &b) in xv.iter().zip(&wv) {
                    let xi = u;
                    let eta = v * (1.0 - u);
                    points.push([1.0 - xi - eta, xi, eta]);
                    weights.push(a * b * (1.0 - u));
                }
            }
            QuadratureRule { domain, degree, points, weights }
        }
    })
}

/// `n`-point Gauss-Legendre rule mapped to `[0, 1]`.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}
