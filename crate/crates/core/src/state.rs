//! Field snapshots at one instant.

use alloc::vec;
use alloc::vec::Vec;

/// `(w, ∂s w)` on the unit-ball grid at similarity time `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityState {
    pub s: f64,
    pub w: Vec<f64>,
    pub ws: Vec<f64>,
}

impl SimilarityState {
    pub fn constant(s: f64, value: f64, n_nodes: usize) -> Self {
        Self {
            s,
            w: vec![value; n_nodes],
            ws: vec![0.0; n_nodes],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(&self.ws).all(|v| v.is_finite())
    }

    pub fn amplitude(&self) -> f64 {
        sup_norm(&self.w)
    }
}

/// `(u, ∂t u)` on a radial grid at physical time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalState {
    pub t: f64,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
}

impl PhysicalState {
    pub fn zeros(t: f64, n_nodes: usize) -> Self {
        Self {
            t,
            u: vec![0.0; n_nodes],
            ut: vec![0.0; n_nodes],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.ut).all(|v| v.is_finite())
    }

    pub fn amplitude(&self) -> f64 {
        sup_norm(&self.u)
    }
}

pub(crate) fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Signal that a step produced non-finite values; carries the last finite state.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUp<S> {
    pub last: S,
}
