//! Uniform radial grids and quadrature of radial fields over balls and spheres.
//!
//! A radial integrand `f(|x|)` on the ball `B(0, R)` in `R^N` integrates as
//! `ω_{N-1} ∫_0^R f(r) r^{N-1} dr`. Weights are the exact integrals of the
//! piecewise-linear hat functions against `r^{N-1}`, so the rule is second
//! order for smooth `f` and reproduces `|B(0, R)|` to rounding.

use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Surface measure `ω_{N-1} = 2π^{N/2}/Γ(N/2)` of the unit sphere in `R^N`.
pub fn sphere_constant(dim: u32) -> f64 {
    2.0 * PI.powf(f64::from(dim) / 2.0) / half_integer_gamma(dim)
}

/// `Γ(n/2)` for a positive integer `n`, by the recurrence from `Γ(1) = 1` and
/// `Γ(1/2) = √π`.
fn half_integer_gamma(n: u32) -> f64 {
    let (mut value, mut k) = if n.is_multiple_of(2) { (1.0, 2) } else { (PI.sqrt(), 1) };
    while k < n {
        value *= f64::from(k) / 2.0;
        k += 2;
    }
    value
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

/// `(∫_0^len (1 - x/len) (a + x)^m dx, ∫_0^len (x/len) (a + x)^m dx)`.
///
/// Expanded binomially in powers of `len` so no cancellation occurs.
fn hat_moments(a: f64, len: f64, m: u32) -> (f64, f64) {
    let mut left = 0.0;
    let mut right = 0.0;
    for k in 0..=m {
        let term = binomial(m, k) * a.powi((m - k) as i32) * len.powi(k as i32);
        let kf = f64::from(k);
        right += term / (kf + 2.0);
        left += term / ((kf + 1.0) * (kf + 2.0));
    }
    (left * len, right * len)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: u32,
    radius: f64,
    spacing: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    omega: f64,
}

impl RadialGrid {
    /// `n_nodes` equally spaced radii on `[0, radius]`, both ends included.
    pub fn new(dim: u32, n_nodes: usize, radius: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Dimension(dim));
        }
        if n_nodes < 4 {
            return Err(Error::InvalidGrid("at least 4 nodes are required"));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidGrid("radius must be positive and finite"));
        }
        let spacing = radius / (n_nodes - 1) as f64;
        let nodes: Vec<f64> = (0..n_nodes).map(|i| i as f64 * spacing).collect();
        let mut weights = alloc::vec![0.0; n_nodes];
        for i in 0..n_nodes - 1 {
            let (left, right) = hat_moments(nodes[i], spacing, dim - 1);
            weights[i] += left;
            weights[i + 1] += right;
        }
        Ok(Self {
            dim,
            radius,
            spacing,
            nodes,
            weights,
            omega: sphere_constant(dim),
        })
    }

    /// Grid on the closed unit ball, the similarity-variable domain.
    pub fn unit_ball(dim: u32, n_nodes: usize) -> Result<Self> {
        Self::new(dim, n_nodes, 1.0)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Radial weights for `∫_0^R f(r) r^{N-1} dr` (without `ω_{N-1}`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `|B(0, R)| = ω_{N-1} R^N / N`.
    pub fn ball_volume(&self) -> f64 {
        self.omega * self.radius.powi(self.dim as i32) / f64::from(self.dim)
    }

    /// `|∂B(0, R)| = ω_{N-1} R^{N-1}`.
    pub fn sphere_area(&self) -> f64 {
        self.omega * self.radius.powi(self.dim as i32 - 1)
    }

    pub(crate) fn check_len(&self, field: &[f64]) -> Result<()> {
        if field.len() == self.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len(),
                got: field.len(),
            })
        }
    }

    /// `∫_{B(0,R)} field dy` for a radial field sampled on the nodes.
    pub fn integrate_ball(&self, field: &[f64]) -> Result<f64> {
        self.check_len(field)?;
        Ok(self.omega * self.weighted_sum(field))
    }

    pub(crate) fn weighted_sum(&self, field: &[f64]) -> f64 {
        self.weights.iter().zip(field).map(|(w, f)| w * f).sum()
    }

    /// `∫_{B(0,ρ)} field dy` for `0 <= ρ <= R`, integrating the piecewise-linear
    /// interpolant of `field` exactly against `r^{N-1}`.
    pub fn integrate_ball_within(&self, field: &[f64], rho: f64) -> Result<f64> {
        self.check_len(field)?;
        if !(rho >= 0.0) || rho > self.radius * (1.0 + 1e-12) {
            return Err(Error::RadialCoverage {
                needed: rho,
                available: self.radius,
            });
        }
        let m = self.dim - 1;
        let h = self.spacing;
        let cells = ((rho / h).floor() as usize).min(self.len() - 1);
        let mut total = 0.0;
        for i in 0..cells {
            let (left, right) = hat_moments(self.nodes[i], h, m);
            total += left * field[i] + right * field[i + 1];
        }
        let a = self.nodes[cells];
        let partial = rho - a;
        if partial > 0.0 && cells + 1 < self.len() {
            let theta = partial / h;
            let end_value = field[cells] + theta * (field[cells + 1] - field[cells]);
            let (left, right) = hat_moments(a, partial, m);
            total += left * field[cells] + right * end_value;
        }
        Ok(self.omega * total)
    }

    /// `∫_{∂B(0,1)} field dσ = ω_{N-1} field(1)` for a radial field on the unit ball grid.
    pub fn boundary_value(&self, field: &[f64]) -> Result<f64> {
        self.check_len(field)?;
        if (self.radius - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitBall(self.radius));
        }
        Ok(self.omega * field[self.len() - 1])
    }
}

/// Radial derivative by centered differences: zero at the origin (regularity),
/// second-order one-sided at the outer node.
pub fn radial_derivative(field: &[f64], h: f64) -> Vec<f64> {
    let n = field.len();
    let mut out = alloc::vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (field[i + 1] - field[i - 1]) / (2.0 * h);
    }
    out[n - 1] = (3.0 * field[n - 1] - 4.0 * field[n - 2] + field[n - 3]) / (2.0 * h);
    out
}
