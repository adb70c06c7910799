//! The semilinear wave equation in similarity variables, radial reduction on
//! the unit ball:
//!
//! ```text
//! w_ss = (1 - r²) w_rr + (N-1)/r (1 - r²) w_r - 2r w_r + 2η r w_r
//!        - 2(p+1)/(p-1)² w + |w|^{p-1} w - (p+3)/(p-1) w_s - 2r w_sr
//!        + e^{-(a+2)s} f(e^{as} w),                      a = 2/(p-1)
//! ```
//!
//! The principal part has characteristic speeds `r ± 1`; both are
//! non-negative at `r = 1`, so the boundary is outflow and takes no condition.
//! The last node uses one-sided differences. At `r = 0` the regular limit
//! `N w_rr(0)` replaces the singular terms.

use alloc::vec::Vec;

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{radial_derivative, RadialGrid};
use crate::params::Params;
use crate::state::{sup_norm, BlowUp, PhysicalState, SimilarityState};
use crate::transform;

/// Largest characteristic speed of the principal part, attained at `r = 1`.
pub const MAX_CHARACTERISTIC_SPEED: f64 = 2.0;
/// Largest admissible `ds · MAX_CHARACTERISTIC_SPEED / h`.
pub const MAX_CFL: f64 = 0.9;
/// Default `ds / h`.
pub const DEFAULT_STEP_RATIO: f64 = 0.4;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

/// Which terms of the right-hand side are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorTerms {
    #[default]
    Full,
    /// Only `(1 - r²) w_rr - 2r w_sr`.
    PrincipalOnly,
}

/// Treatment of `∂r` at the outer node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryClosure {
    /// Second-order one-sided differences.
    #[default]
    OneSided,
    /// Centered difference against a ghost value extrapolated by a cubic.
    CubicGhost,
}

#[derive(Debug, Clone)]
pub enum SimilarityInitial {
    StationaryKappa0,
    /// `w = κ0 (1 + ε cos(mπr))`, `w_s = 0`.
    PerturbedKappa0 {
        epsilon: f64,
        mode: u32,
    },
    /// Transform of a physical trajectory at `s0` in the frame `frame`.
    FromTransform {
        trajectory: Vec<PhysicalState>,
        grid: RadialGrid,
        frame: f64,
        horizon: f64,
    },
    Samples(SimilarityState),
}

#[derive(Debug, Clone)]
pub struct SimilarityRunConfig {
    pub params: Params,
    pub grid: RadialGrid,
    pub ds: f64,
    pub s0: f64,
    pub s_end: f64,
    pub initial: SimilarityInitial,
    pub snapshot_stride: usize,
    pub terms: OperatorTerms,
    pub closure: BoundaryClosure,
    pub blowup_threshold: f64,
}

impl SimilarityRunConfig {
    pub fn new(params: Params, grid: RadialGrid, s0: f64, s_end: f64, initial: SimilarityInitial) -> Self {
        let ds = DEFAULT_STEP_RATIO * grid.spacing();
        Self {
            params,
            grid,
            ds,
            s0,
            s_end,
            initial,
            snapshot_stride: 1,
            terms: OperatorTerms::Full,
            closure: BoundaryClosure::OneSided,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    /// `ds · 2 / h`.
    pub fn cfl_number(&self) -> f64 {
        self.ds * MAX_CHARACTERISTIC_SPEED / self.grid.spacing()
    }

    /// Number of steps and the step actually taken so that `s_end` is hit exactly.
    pub fn step_plan(&self) -> (usize, f64) {
        let span = self.s_end - self.s0;
        let steps = ((span / self.ds) - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            (0, self.ds)
        } else {
            (steps, span / steps as f64)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.grid.radius() - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitBall(self.grid.radius()));
        }
        if self.grid.dim() != self.params.dim() {
            return Err(Error::Config(alloc::format!(
                "grid dimension {} differs from N = {}",
                self.grid.dim(),
                self.params.dim()
            )));
        }
        let limit = MAX_CFL * self.grid.spacing() / MAX_CHARACTERISTIC_SPEED;
        if !(self.ds > 0.0 && self.ds <= limit) {
            return Err(Error::Cfl { step: self.ds, limit });
        }
        if !(self.s0.is_finite() && self.s_end.is_finite() && self.s_end >= self.s0) {
            return Err(Error::Config(alloc::format!(
                "similarity interval [{}, {}] is invalid",
                self.s0,
                self.s_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot stride must be positive".into()));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> Result<SimilarityState> {
        let n = self.grid.len();
        let kappa0 = self.params.kappa0();
        match &self.initial {
            SimilarityInitial::StationaryKappa0 => Ok(SimilarityState::constant(self.s0, kappa0, n)),
            SimilarityInitial::PerturbedKappa0 { epsilon, mode } => {
                let m = f64::from(*mode) * core::f64::consts::PI;
                Ok(SimilarityState {
                    s: self.s0,
                    w: self
                        .grid
                        .nodes()
                        .iter()
                        .map(|r| kappa0 * (1.0 + epsilon * (m * r).cos()))
                        .collect(),
                    ws: alloc::vec![0.0; n],
                })
            }
            SimilarityInitial::FromTransform {
                trajectory,
                grid,
                frame,
                horizon,
            } => {
                let mut states =
                    transform::to_similarity(trajectory, grid, &self.params, *frame, *horizon, &[self.s0], &self.grid)?;
                Ok(states.remove(0))
            }
            SimilarityInitial::Samples(state) => {
                self.grid.check_len(&state.w)?;
                self.grid.check_len(&state.ws)?;
                Ok(SimilarityState {
                    s: self.s0,
                    ..state.clone()
                })
            }
        }
    }
}

/// Right-hand side of the first-order system `(w, w_s)' = (w_s, L(w, w_s))`.
struct Operator<'a> {
    params: &'a Params,
    terms: OperatorTerms,
    closure: BoundaryClosure,
    h: f64,
    /// coefficient of `w_rr`
    second: Vec<f64>,
    /// coefficient of `w_r`
    first: Vec<f64>,
    /// coefficient of `∂r w_s`
    mixed: Vec<f64>,
}

impl<'a> Operator<'a> {
    fn new(params: &'a Params, grid: &RadialGrid, terms: OperatorTerms, closure: BoundaryClosure) -> Self {
        let dim = params.dim_f64();
        let eta = params.eta();
        let n = grid.len();
        let mut second = Vec::with_capacity(n);
        let mut first = Vec::with_capacity(n);
        let mut mixed = Vec::with_capacity(n);
        for (i, &r) in grid.nodes().iter().enumerate() {
            let degenerate = 1.0 - r * r;
            let (a, b) = match (terms, i) {
                // Regular limit at the origin: w_rr + (N-1)/r w_r -> N w_rr.
                (OperatorTerms::Full, 0) => (dim, 0.0),
                (OperatorTerms::PrincipalOnly, 0) => (1.0, 0.0),
                (OperatorTerms::Full, _) if i == n - 1 => (0.0, -2.0 + 2.0 * eta),
                (OperatorTerms::PrincipalOnly, _) if i == n - 1 => (0.0, 0.0),
                (OperatorTerms::Full, _) => (degenerate, (dim - 1.0) * degenerate / r - 2.0 * r + 2.0 * eta * r),
                (OperatorTerms::PrincipalOnly, _) => (degenerate, 0.0),
            };
            second.push(a);
            first.push(b);
            mixed.push(-2.0 * r);
        }
        Self {
            params,
            terms,
            closure,
            h: grid.spacing(),
            second,
            first,
            mixed,
        }
    }

    fn outer_derivative(&self, f: &[f64]) -> f64 {
        let n = f.len();
        match self.closure {
            BoundaryClosure::OneSided => (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * self.h),
            BoundaryClosure::CubicGhost => {
                let ghost = 4.0 * f[n - 1] - 6.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4];
                (ghost - f[n - 2]) / (2.0 * self.h)
            }
        }
    }

    fn acceleration(&self, s: f64, w: &[f64], ws: &[f64], out: &mut [f64]) {
        let n = w.len();
        let h = self.h;
        let h2 = h * h;
        out[0] = self.second[0] * 2.0 * (w[1] - w[0]) / h2;
        for i in 1..n - 1 {
            let w_rr = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / h2;
            let w_r = (w[i + 1] - w[i - 1]) / (2.0 * h);
            let ws_r = (ws[i + 1] - ws[i - 1]) / (2.0 * h);
            out[i] = self.second[i] * w_rr + self.first[i] * w_r + self.mixed[i] * ws_r;
        }
        out[n - 1] = self.first[n - 1] * self.outer_derivative(w) + self.mixed[n - 1] * self.outer_derivative(ws);
        if self.terms == OperatorTerms::Full {
            let params = self.params;
            let mass = params.mass_coefficient();
            let friction = params.friction_coefficient();
            let perturbation = params.perturbation();
            let a = params.scaling_exponent();
            let (inner, outer) = ((a * s).exp(), (-(a + 2.0) * s).exp());
            for ((o, &wv), &wsv) in out.iter_mut().zip(w).zip(ws) {
                *o += -mass * wv + params.power_term(wv) - friction * wsv;
                if !perturbation.is_none() {
                    *o += outer * perturbation.eval(inner * wv);
                }
            }
        }
    }
}

/// Classical fourth-order Runge-Kutta on `(w, w_s)`.
struct Integrator<'a> {
    op: Operator<'a>,
    k: [Vec<f64>; 8],
    tmp_w: Vec<f64>,
    tmp_ws: Vec<f64>,
}

impl<'a> Integrator<'a> {
    fn new(op: Operator<'a>, n: usize) -> Self {
        let zero = alloc::vec![0.0; n];
        Self {
            op,
            k: core::array::from_fn(|_| zero.clone()),
            tmp_w: zero.clone(),
            tmp_ws: zero,
        }
    }

    fn step(&mut self, state: &SimilarityState, ds: f64) -> SimilarityState {
        let s = state.s;
        let [k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v] = &mut self.k;
        k1w.copy_from_slice(&state.ws);
        self.op.acceleration(s, &state.w, &state.ws, k1v);
        stage(&mut self.tmp_w, &state.w, k1w, 0.5 * ds);
        stage(&mut self.tmp_ws, &state.ws, k1v, 0.5 * ds);
        k2w.copy_from_slice(&self.tmp_ws);
        self.op.acceleration(s + 0.5 * ds, &self.tmp_w, &self.tmp_ws, k2v);
        stage(&mut self.tmp_w, &state.w, k2w, 0.5 * ds);
        stage(&mut self.tmp_ws, &state.ws, k2v, 0.5 * ds);
        k3w.copy_from_slice(&self.tmp_ws);
        self.op.acceleration(s + 0.5 * ds, &self.tmp_w, &self.tmp_ws, k3v);
        stage(&mut self.tmp_w, &state.w, k3w, ds);
        stage(&mut self.tmp_ws, &state.ws, k3v, ds);
        k4w.copy_from_slice(&self.tmp_ws);
        self.op.acceleration(s + ds, &self.tmp_w, &self.tmp_ws, k4v);
        let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..y.len())
                .map(|i| y[i] + ds / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]))
                .collect()
        };
        SimilarityState {
            s: s + ds,
            w: combine(&state.w, k1w, k2w, k3w, k4w),
            ws: combine(&state.ws, k1v, k2v, k3v, k4v),
        }
    }
}

fn stage(out: &mut [f64], base: &[f64], slope: &[f64], factor: f64) {
    for ((o, b), k) in out.iter_mut().zip(base).zip(slope) {
        *o = b + factor * k;
    }
}

/// Advances one step of size `cfg.ds`.
pub fn step_similarity(
    state: &SimilarityState,
    cfg: &SimilarityRunConfig,
) -> core::result::Result<SimilarityState, BlowUp<SimilarityState>> {
    let op = Operator::new(&cfg.params, &cfg.grid, cfg.terms, cfg.closure);
    let next = Integrator::new(op, cfg.grid.len()).step(state, cfg.ds);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(BlowUp { last: state.clone() })
    }
}

#[derive(Debug, Clone)]
pub struct SimilarityRun {
    pub trajectory: Vec<SimilarityState>,
    /// Step actually used (the configured step adjusted to land on `s_end`).
    pub ds: f64,
    /// Similarity time at which `w` left the threshold, if it did.
    pub blowup_at: Option<f64>,
}

pub fn run_similarity(cfg: &SimilarityRunConfig) -> Result<SimilarityRun> {
    cfg.validate()?;
    let mut state = cfg.initial_state()?;
    let (steps, ds) = cfg.step_plan();
    let op = Operator::new(&cfg.params, &cfg.grid, cfg.terms, cfg.closure);
    let mut integrator = Integrator::new(op, cfg.grid.len());
    let mut trajectory = alloc::vec![state.clone()];
    let mut blowup_at = None;
    for k in 1..=steps {
        let mut next = integrator.step(&state, ds);
        if k == steps {
            next.s = cfg.s_end;
        } else {
            next.s = cfg.s0 + k as f64 * ds;
        }
        if !next.is_finite() || sup_norm(&next.w) > cfg.blowup_threshold {
            blowup_at = Some(next.s);
            break;
        }
        state = next;
        if k % cfg.snapshot_stride == 0 || k == steps {
            trajectory.push(state.clone());
        }
    }
    Ok(SimilarityRun {
        trajectory,
        ds,
        blowup_at,
    })
}

/// Spatial part of the right-hand side in divergence form,
/// `r^{1-N} ∂r(r^{N-1}(1 - r²) w_r) + 2η r w_r` plus the zeroth-order terms.
/// The divergence is a finite-volume balance over the shell
/// `[r - h/2, r + h/2]`; at `r = 1`, where the flux vanishes, a one-sided
/// difference of the nodal flux is used instead.
fn divergence_form(w: &[f64], params: &Params, grid: &RadialGrid) -> Vec<f64> {
    let n = w.len();
    let h = grid.spacing();
    let dim = params.dim_f64();
    let m = (params.dim() - 1) as i32;
    let w_r = radial_derivative(w, h);
    let half_flux = |i: usize| {
        let r = grid.nodes()[i] + 0.5 * h;
        r.powi(m) * (1.0 - r * r) * (w[i + 1] - w[i]) / h
    };
    let shell = |r: f64| ((r + 0.5 * h).powi(m + 1) - (r - 0.5 * h).max(0.0).powi(m + 1)) / dim;
    let mut out = alloc::vec![0.0; n];
    out[0] = half_flux(0) / shell(0.0);
    for i in 1..n - 1 {
        let r = grid.nodes()[i];
        out[i] = (half_flux(i) - half_flux(i - 1)) / shell(r) + 2.0 * params.eta() * r * w_r[i];
    }
    let flux = |i: usize| {
        let r = grid.nodes()[i];
        r.powi(m) * (1.0 - r * r) * w_r[i]
    };
    let last = n - 1;
    let r = grid.nodes()[last];
    out[last] = (3.0 * flux(last) - 4.0 * flux(last - 1) + flux(last - 2)) / (2.0 * h) / r.powi(m)
        + 2.0 * params.eta() * r * w_r[last];
    add_reaction(&mut out, w, params);
    out
}

/// Spatial part of the right-hand side in expanded form,
/// `Σ(δ_ij - y_i y_j)∂_ij w - 2(p+1)/(p-1) y·∇w` reduced radially to
/// `(1 - r²) w_rr + (N-1)/r w_r - 2(p+1)/(p-1) r w_r`, plus the zeroth-order terms.
fn expanded_form(w: &[f64], params: &Params, grid: &RadialGrid) -> Vec<f64> {
    let n = w.len();
    let h = grid.spacing();
    let dim = params.dim_f64();
    let p = params.p();
    let drift = 2.0 * (p + 1.0) / (p - 1.0);
    let w_r = radial_derivative(w, h);
    let mut out = alloc::vec![0.0; n];
    out[0] = dim * 2.0 * (w[1] - w[0]) / (h * h);
    for i in 1..n {
        let r = grid.nodes()[i];
        let w_rr = if i < n - 1 {
            (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h)
        } else {
            (2.0 * w[i] - 5.0 * w[i - 1] + 4.0 * w[i - 2] - w[i - 3]) / (h * h)
        };
        out[i] = (1.0 - r * r) * w_rr + (dim - 1.0) / r * w_r[i] - drift * r * w_r[i];
    }
    add_reaction(&mut out, w, params);
    out
}

fn add_reaction(out: &mut [f64], w: &[f64], params: &Params) {
    let mass = params.mass_coefficient();
    for (o, &v) in out.iter_mut().zip(w) {
        *o += -mass * v + params.power_term(v);
    }
}

/// Max-norm discrepancy between the divergence-form and expanded-form spatial
/// operators applied to `state.w`. Both are second-order consistent, so the
/// discrepancy is `O(h²)` for smooth `w`.
pub fn radial_operator_check(state: &SimilarityState, params: &Params, grid: &RadialGrid) -> Result<f64> {
    grid.check_len(&state.w)?;
    if (grid.radius() - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitBall(grid.radius()));
    }
    let div = divergence_form(&state.w, params, grid);
    let exp = expanded_form(&state.w, params, grid);
    Ok(div
        .iter()
        .zip(&exp)
        .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> Params {
        Params::pure_power(3, 4.0).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let grid = RadialGrid::unit_ball(3, 65).unwrap();
        let cfg = SimilarityRunConfig::new(params(), grid, 0.0, 1.0, SimilarityInitial::StationaryKappa0);
        let mut state = SimilarityState::constant(0.0, 0.0, 65);
        for _ in 0..50 {
            state = step_similarity(&state, &cfg).unwrap();
        }
        assert!(state.w.iter().chain(&state.ws).all(|&v| v == 0.0));
    }

    #[test]
    fn constant_operator_forms_agree() {
        let params = params();
        let grid = RadialGrid::unit_ball(3, 33).unwrap();
        let c = 0.7;
        let state = SimilarityState::constant(0.0, c, 33);
        assert!(radial_operator_check(&state, &params, &grid).unwrap() < 1e-13);
        let expected = -params.mass_coefficient() * c + params.power_term(c);
        for v in expanded_form(&state.w, &params, &grid) {
            assert!((v - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn step_plan_lands_on_end() {
        let grid = RadialGrid::unit_ball(3, 33).unwrap();
        let cfg = SimilarityRunConfig::new(params(), grid, 0.5, 1.5, SimilarityInitial::StationaryKappa0);
        let (steps, ds) = cfg.step_plan();
        assert!((steps as f64 * ds - 1.0).abs() < 1e-12);
        assert!(ds <= cfg.ds);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let grid = RadialGrid::unit_ball(3, 33).unwrap();
        let mut cfg = SimilarityRunConfig::new(params(), grid, 0.0, 1.0, SimilarityInitial::StationaryKappa0);
        cfg.ds = cfg.grid.spacing();
        assert!(matches!(cfg.validate(), Err(Error::Cfl { .. })));
        cfg.ds = 0.1 * cfg.grid.spacing();
        cfg.s_end = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.grid = RadialGrid::new(3, 33, 2.0).unwrap();
        cfg.s_end = 1.0;
        assert!(matches!(cfg.validate(), Err(Error::NotUnitBall(_))));
    }
}
