//! Lyapunov functional in similarity variables and checks of its derivative
//! identities along computed trajectories.
//!
//! For a radial `w` on the unit ball `B`:
//!
//! ```text
//! E0 = ∫_B ½ w_s² + ½(1 - r²) w_r² + (p+1)/(p-1)² w² - |w|^{p+1}/(p+1)
//! I  = -η ∫_B w w_s + (ηN/2) ∫_B w²
//! E  = E0 + I,        F = E e^{-2ηs}
//! dF/ds = -e^{-2ηs} ∫_{∂B} (w_s - ηw)² - η(p-1)/(p+1) e^{-2ηs} ∫_B |w|^{p+1}
//! ```
//!
//! The checks difference the stored snapshots in `s` (centered, second
//! order) and compare with the right-hand sides evaluated by quadrature, so
//! they are independent of the solver's own right-hand side.

use alloc::vec::Vec;

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{radial_derivative, RadialGrid};
use crate::params::Params;
use crate::state::SimilarityState;

/// All functional values at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub s: f64,
    pub e0: f64,
    pub i: f64,
    pub e: f64,
    pub f: f64,
    /// `∫_{∂B} (w_s - ηw)² dσ`
    pub boundary_dissipation: f64,
    /// `η(p-1)/(p+1) ∫_B |w|^{p+1} dy`
    pub bulk_dissipation: f64,
}

impl EnergyReport {
    /// `-1/(p+1) ∫_B |w|^{p+1}`, a lower bound for `E` by Cauchy-Schwarz on `ηw w_s`.
    pub fn energy_floor(&self, params: &Params) -> f64 {
        -self.bulk_dissipation / (params.eta() * (params.p() - 1.0))
    }
}

/// Quadratures shared by the functionals and the identity right-hand sides.
#[derive(Debug, Clone, Copy)]
struct Integrals {
    ws_sq: f64,
    degenerate_grad_sq: f64,
    w_sq: f64,
    w_power: f64,
    w_ws: f64,
    ws_radial_grad: f64,
    boundary_w: f64,
    boundary_ws: f64,
}

fn integrals(state: &SimilarityState, params: &Params, grid: &RadialGrid) -> Result<Integrals> {
    grid.check_len(&state.w)?;
    grid.check_len(&state.ws)?;
    if (grid.radius() - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitBall(grid.radius()));
    }
    let w = &state.w;
    let ws = &state.ws;
    let w_r = radial_derivative(w, grid.spacing());
    let nodes = grid.nodes();
    let weights = grid.weights();
    let omega = grid.omega();
    let p1 = params.p() + 1.0;
    let mut acc = [0.0; 6];
    for i in 0..w.len() {
        let r = nodes[i];
        let wt = weights[i];
        acc[0] += wt * ws[i] * ws[i];
        acc[1] += wt * (1.0 - r * r) * w_r[i] * w_r[i];
        acc[2] += wt * w[i] * w[i];
        acc[3] += wt * w[i].abs().powf(p1);
        acc[4] += wt * w[i] * ws[i];
        acc[5] += wt * ws[i] * r * w_r[i];
    }
    let last = w.len() - 1;
    Ok(Integrals {
        ws_sq: omega * acc[0],
        degenerate_grad_sq: omega * acc[1],
        w_sq: omega * acc[2],
        w_power: omega * acc[3],
        w_ws: omega * acc[4],
        ws_radial_grad: omega * acc[5],
        boundary_w: w[last],
        boundary_ws: ws[last],
    })
}

fn e0_from(ints: &Integrals, params: &Params) -> f64 {
    let p = params.p();
    0.5 * ints.ws_sq + 0.5 * ints.degenerate_grad_sq + (p + 1.0) / ((p - 1.0) * (p - 1.0)) * ints.w_sq
        - ints.w_power / (p + 1.0)
}

fn i_from(ints: &Integrals, params: &Params) -> f64 {
    let eta = params.eta();
    -eta * ints.w_ws + 0.5 * eta * params.dim_f64() * ints.w_sq
}

fn bulk_coefficient(params: &Params) -> f64 {
    let p = params.p();
    params.eta() * (p - 1.0) / (p + 1.0)
}

pub fn energy_e0(state: &SimilarityState, params: &Params, grid: &RadialGrid) -> Result<f64> {
    Ok(e0_from(&integrals(state, params, grid)?, params))
}

pub fn energy_i(state: &SimilarityState, params: &Params, grid: &RadialGrid) -> Result<f64> {
    Ok(i_from(&integrals(state, params, grid)?, params))
}

pub fn lyapunov_f(state: &SimilarityState, params: &Params, grid: &RadialGrid) -> Result<EnergyReport> {
    let ints = integrals(state, params, grid)?;
    Ok(report_from(state.s, &ints, params, grid))
}

fn report_from(s: f64, ints: &Integrals, params: &Params, grid: &RadialGrid) -> EnergyReport {
    let eta = params.eta();
    let e0 = e0_from(ints, params);
    let i = i_from(ints, params);
    let e = e0 + i;
    let flux = ints.boundary_ws - eta * ints.boundary_w;
    let floor = -ints.w_power / (params.p() + 1.0);
    debug_assert!(
        e >= floor - 1e-12 * (1.0 + e.abs() + floor.abs()),
        "E = {e} below -∫|w|^(p+1)/(p+1) = {floor}"
    );
    EnergyReport {
        s,
        e0,
        i,
        e,
        f: e * (-2.0 * eta * s).exp(),
        boundary_dissipation: grid.omega() * flux * flux,
        bulk_dissipation: bulk_coefficient(params) * ints.w_power,
    }
}

/// Reports for every snapshot of a trajectory.
pub fn energy_series(trajectory: &[SimilarityState], params: &Params, grid: &RadialGrid) -> Result<Vec<EnergyReport>> {
    trajectory.iter().map(|s| lyapunov_f(s, params, grid)).collect()
}

/// Pointwise residual of a derivative identity along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    /// Similarity times of the interior snapshots.
    pub s: Vec<f64>,
    /// Centered difference of the functional.
    pub derivative: Vec<f64>,
    /// Right-hand side of the identity.
    pub predicted: Vec<f64>,
    pub residual: Vec<f64>,
    /// `max |residual| / max(max |functional|, 1)`.
    pub max_normalized: f64,
}

fn uniform_spacing(trajectory: &[SimilarityState]) -> Result<f64> {
    if trajectory.len() < 3 {
        return Err(Error::TooShort {
            need: 3,
            got: trajectory.len(),
        });
    }
    let span = trajectory[trajectory.len() - 1].s - trajectory[0].s;
    let step = span / (trajectory.len() - 1) as f64;
    let uniform = trajectory
        .windows(2)
        .all(|pair| ((pair[1].s - pair[0].s) - step).abs() <= 1e-6 * step.abs());
    if uniform && step > 0.0 {
        Ok(step)
    } else {
        Err(Error::NonUniformSpacing)
    }
}

/// Differences `functional` in `s` and compares with `predicted` at each
/// interior snapshot.
fn check_identity(
    trajectory: &[SimilarityState],
    params: &Params,
    grid: &RadialGrid,
    functional: impl Fn(f64, &Integrals) -> f64,
    predicted: impl Fn(f64, &Integrals) -> f64,
) -> Result<ResidualSeries> {
    let step = uniform_spacing(trajectory)?;
    let ints: Vec<Integrals> = trajectory
        .iter()
        .map(|s| integrals(s, params, grid))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = trajectory
        .iter()
        .zip(&ints)
        .map(|(st, i)| functional(st.s, i))
        .collect();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let n = trajectory.len();
    let mut out = ResidualSeries {
        s: Vec::with_capacity(n - 2),
        derivative: Vec::with_capacity(n - 2),
        predicted: Vec::with_capacity(n - 2),
        residual: Vec::with_capacity(n - 2),
        max_normalized: 0.0,
    };
    for k in 1..n - 1 {
        let s = trajectory[k].s;
        let derivative = (values[k + 1] - values[k - 1]) / (2.0 * step);
        let rhs = predicted(s, &ints[k]);
        out.s.push(s);
        out.derivative.push(derivative);
        out.predicted.push(rhs);
        out.residual.push(derivative - rhs);
    }
    out.max_normalized = out.residual.iter().fold(0.0f64, |m, r| m.max(r.abs())) / scale;
    Ok(out)
}

/// `dF/ds + e^{-2ηs}(boundary + bulk dissipation)` along the trajectory.
pub fn check_dissipation_identity(
    trajectory: &[SimilarityState],
    params: &Params,
    grid: &RadialGrid,
) -> Result<ResidualSeries> {
    let eta = params.eta();
    check_identity(
        trajectory,
        params,
        grid,
        |s, ints| report_from(s, ints, params, grid).f,
        |s, ints| {
            let report = report_from(s, ints, params, grid);
            -(-2.0 * eta * s).exp() * (report.boundary_dissipation + report.bulk_dissipation)
        },
    )
}

/// `dE0/ds = -∫_{∂B} w_s² + 2η ∫_B w_s² + 2η ∫_B w_s (y·∇w)`.
pub fn check_e0_derivative(
    trajectory: &[SimilarityState],
    params: &Params,
    grid: &RadialGrid,
) -> Result<ResidualSeries> {
    let eta = params.eta();
    let omega = grid.omega();
    check_identity(
        trajectory,
        params,
        grid,
        |_, ints| e0_from(ints, params),
        |_, ints| {
            -omega * ints.boundary_ws * ints.boundary_ws + 2.0 * eta * ints.ws_sq + 2.0 * eta * ints.ws_radial_grad
        },
    )
}

/// `dI/ds = 2ηE - 2η ∫ w_s² - η(p-1)/(p+1) ∫ |w|^{p+1} - 2η ∫ w_s (y·∇w)
///          - η² ∫_{∂B} w² + 2η ∫_{∂B} w w_s`.
pub fn check_i_derivative(
    trajectory: &[SimilarityState],
    params: &Params,
    grid: &RadialGrid,
) -> Result<ResidualSeries> {
    let eta = params.eta();
    let omega = grid.omega();
    let bulk = bulk_coefficient(params);
    check_identity(
        trajectory,
        params,
        grid,
        |_, ints| i_from(ints, params),
        |_, ints| {
            let e = e0_from(ints, params) + i_from(ints, params);
            2.0 * eta * e
                - 2.0 * eta * ints.ws_sq
                - bulk * ints.w_power
                - 2.0 * eta * ints.ws_radial_grad
                - eta * eta * omega * ints.boundary_w * ints.boundary_w
                + 2.0 * eta * omega * ints.boundary_w * ints.boundary_ws
        },
    )
}

/// `C` in [`monotonicity_tolerance`].
pub const MONOTONICITY_CONSTANT: f64 = 10.0;
/// Relative slack of [`positivity_check`].
pub const POSITIVITY_TOLERANCE: f64 = 1e-6;

/// Tolerance on `F(s + Δs) - F(s)` for the monotonicity check:
/// `C (h² + Δs²) Δs max(1, scale)`.
pub fn monotonicity_tolerance(h: f64, step: f64, scale: f64) -> f64 {
    MONOTONICITY_CONSTANT * (h * h + step * step) * step * scale.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityVerdict {
    /// Largest `F(s_{k+1}) - F(s_k)` observed.
    pub max_increase: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks `F(s_{k+1}) <= F(s_k) + tol` with `tol` from [`monotonicity_tolerance`].
pub fn monotonicity_check(reports: &[EnergyReport], h: f64) -> MonotonicityVerdict {
    let step = if reports.len() > 1 {
        (reports[reports.len() - 1].s - reports[0].s) / (reports.len() - 1) as f64
    } else {
        0.0
    };
    let scale = reports.iter().fold(0.0f64, |m, r| m.max(r.f.abs()));
    let tolerance = monotonicity_tolerance(h, step, scale);
    let max_increase = reports
        .windows(2)
        .map(|pair| pair[1].f - pair[0].f)
        .fold(f64::NEG_INFINITY, f64::max);
    MonotonicityVerdict {
        max_increase,
        tolerance,
        passed: reports.len() < 2 || max_increase <= tolerance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityVerdict {
    pub min_f: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// `min F >= -10⁻⁶ max(1, max F)`.
pub fn positivity_check(reports: &[EnergyReport]) -> PositivityVerdict {
    let min_f = reports.iter().map(|r| r.f).fold(f64::INFINITY, f64::min);
    let max_f = reports.iter().map(|r| r.f).fold(f64::NEG_INFINITY, f64::max);
    let tolerance = POSITIVITY_TOLERANCE * max_f.max(1.0);
    PositivityVerdict {
        min_f,
        tolerance,
        passed: min_f >= -tolerance,
    }
}

/// Closed-form `E(κ0) = |B| κ0² (1/(p-1) + ηN/2)` of the stationary solution.
pub fn stationary_energy(params: &Params) -> f64 {
    let grid_volume = crate::grid::sphere_constant(params.dim()) / params.dim_f64();
    let k2 = params.kappa0() * params.kappa0();
    grid_volume * k2 * (1.0 / (params.p() - 1.0) + 0.5 * params.eta() * params.dim_f64())
}
