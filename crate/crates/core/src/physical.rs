//! Radial semilinear wave equation in physical coordinates.
//!
//! Solves `u_tt = u_rr + (N-1)/r u_r + |u|^{p-1}u + f(u)` on `[0, R]` with
//! velocity Verlet (leapfrog) in time and second-order flux-form differences in
//! space. At `r = 0` the Laplacian is replaced by its regular limit `N u_rr`;
//! at `r = R` a first-order outgoing condition
//! `u_t + u_r + (N-1)/(2R) u = 0` closes the domain.

use alloc::vec::Vec;

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::analysis::linear_fit;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::params::Params;
use crate::state::{BlowUp, PhysicalState};

/// Cap on `dt / h` (unit wave speed); see [`stability_limit`] for the
/// dimension-dependent bound actually enforced.
pub const MAX_CFL: f64 = 0.9;
pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;
/// Amplitude samples whose local ODE blow-up time `(κ0/A)^{(p-1)/2}` is below
/// this many time steps are considered unresolved and excluded from fits.
pub const RESOLVED_STEPS: f64 = 20.0;
/// Minimum number of amplitude samples in the trailing growth decade.
const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Space-independent ODE blow-up `κ0 (T - t)^{-2/(p-1)}`.
    OdeExact {
        blowup_time: f64,
    },
    /// `u0 = A exp(-((r - offset)/width)^2)`, `u1 = 0`.
    GaussianBump {
        amplitude: f64,
        width: f64,
        offset: f64,
    },
    Samples {
        u: Vec<f64>,
        ut: Vec<f64>,
    },
}

impl InitialData {
    pub fn sample(&self, params: &Params, grid: &RadialGrid) -> Result<PhysicalState> {
        let n = grid.len();
        match self {
            Self::OdeExact { blowup_time } => {
                if !(*blowup_time > 0.0) {
                    return Err(Error::Config(alloc::format!(
                        "ODE blow-up time must be positive, got {blowup_time}"
                    )));
                }
                let (u, ut) = ode_solution(params, *blowup_time, 0.0);
                Ok(PhysicalState {
                    t: 0.0,
                    u: alloc::vec![u; n],
                    ut: alloc::vec![ut; n],
                })
            }
            Self::GaussianBump {
                amplitude,
                width,
                offset,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(alloc::format!(
                        "bump width must be positive, got {width}"
                    )));
                }
                let u = grid
                    .nodes()
                    .iter()
                    .map(|r| amplitude * (-((r - offset) / width).powi(2)).exp())
                    .collect();
                Ok(PhysicalState {
                    t: 0.0,
                    u,
                    ut: alloc::vec![0.0; n],
                })
            }
            Self::Samples { u, ut } => {
                grid.check_len(u)?;
                grid.check_len(ut)?;
                Ok(PhysicalState {
                    t: 0.0,
                    u: u.clone(),
                    ut: ut.clone(),
                })
            }
        }
    }
}

/// `(u, u_t)` of the ODE blow-up solution with blow-up time `blowup_time`.
pub fn ode_solution(params: &Params, blowup_time: f64, t: f64) -> (f64, f64) {
    let a = params.scaling_exponent();
    let tau = blowup_time - t;
    let u = params.kappa0() * tau.powf(-a);
    (u, a * u / tau)
}

#[derive(Debug, Clone)]
pub struct PhysicalRunConfig {
    pub params: Params,
    pub grid: RadialGrid,
    pub dt: f64,
    pub blowup_threshold: f64,
    pub initial: InitialData,
    pub max_steps: usize,
    /// Store every `snapshot_stride`-th step.
    pub snapshot_stride: usize,
    /// `false` drops `|u|^{p-1}u + f(u)`, leaving the free wave equation.
    pub nonlinear: bool,
}

impl PhysicalRunConfig {
    pub fn new(params: Params, grid: RadialGrid, initial: InitialData) -> Self {
        let dt = DEFAULT_CFL.min(stability_limit(grid.dim())) * grid.spacing();
        Self {
            params,
            grid,
            dt,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            initial,
            max_steps: 1_000_000,
            snapshot_stride: 1,
            nonlinear: true,
        }
    }

    pub fn cfl_number(&self) -> f64 {
        self.dt / self.grid.spacing()
    }

    pub fn validate(&self) -> Result<()> {
        let limit = stability_limit(self.grid.dim()) * self.grid.spacing();
        if !(self.dt > 0.0 && self.dt <= limit) {
            return Err(Error::Cfl { step: self.dt, limit });
        }
        if self.grid.dim() != self.params.dim() {
            return Err(Error::Config(alloc::format!(
                "grid dimension {} differs from N = {}",
                self.grid.dim(),
                self.params.dim()
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot stride must be positive".into()));
        }
        let initial = self.initial.sample(&self.params, &self.grid)?;
        if !(self.blowup_threshold > initial.amplitude()) {
            return Err(Error::Config(alloc::format!(
                "blow-up threshold {} does not exceed the initial amplitude {}",
                self.blowup_threshold,
                initial.amplitude()
            )));
        }
        Ok(())
    }
}

/// Radial Laplacian at unit spacing, rows `0..n-1`; the last row is left to
/// the boundary closure. Row `i` is the flux balance over the shell
/// `[i - 1/2, i + 1/2]` divided by its exact volume; at the origin this is
/// the regular limit `2N(u_1 - u_0)`.
#[derive(Debug, Clone)]
struct RadialLaplacian {
    dim: f64,
    upper: Vec<f64>,
    lower: Vec<f64>,
}

impl RadialLaplacian {
    fn new(dim: u32, n: usize) -> Self {
        let m = (dim - 1) as i32;
        let (upper, lower) = (0..n)
            .map(|i| {
                if i == 0 {
                    return (0.0, 0.0);
                }
                let (outer, inner) = (i as f64 + 0.5, i as f64 - 0.5);
                let volume = (outer.powi(m + 1) - inner.powi(m + 1)) / f64::from(dim);
                (outer.powi(m) / volume, inner.powi(m) / volume)
            })
            .unzip();
        Self {
            dim: f64::from(dim),
            upper,
            lower,
        }
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        out[0] = 2.0 * self.dim * (u[1] - u[0]);
        for i in 1..n - 1 {
            out[i] = self.upper[i] * (u[i + 1] - u[i]) - self.lower[i] * (u[i] - u[i - 1]);
        }
    }
}

/// Largest stable `dt / h` of the leapfrog scheme in dimension `dim`:
/// `2 / sqrt(ρ)` for the spectral radius `ρ` of the unit-spacing Laplacian,
/// reduced by 2% and capped at [`MAX_CFL`]. `ρ` grows like `2N`, from the
/// origin row.
pub fn stability_limit(dim: u32) -> f64 {
    const NODES: usize = 256;
    let lap = RadialLaplacian::new(dim, NODES);
    // The closing row mirrors a reflecting end; its eigenvalues stay below 4.
    let mut x: Vec<f64> = (0..NODES).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut y = alloc::vec![0.0; NODES];
    let mut rho = 0.0;
    for _ in 0..400 {
        lap.apply(&x, &mut y);
        y[NODES - 1] = 2.0 * (x[NODES - 2] - x[NODES - 1]);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let prev = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        rho = norm / prev;
        for (a, b) in x.iter_mut().zip(&y) {
            *a = b / norm;
        }
    }
    (0.98 * 2.0 / rho.sqrt()).min(MAX_CFL)
}

/// Spatial operator with precomputed coefficients and scratch space.
struct Stepper<'a> {
    cfg: &'a PhysicalRunConfig,
    h: f64,
    /// Flux form `[(r+h/2)^{N-1}(u_{i+1}-u_i) - (r-h/2)^{N-1}(u_i-u_{i-1})] / (h V_i)`
    /// with `V_i` the shell volume over `ω`.
    laplacian: RadialLaplacian,
    accel: Vec<f64>,
    half_velocity: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a PhysicalRunConfig) -> Self {
        let n = cfg.grid.len();
        Self {
            cfg,
            h: cfg.grid.spacing(),
            laplacian: RadialLaplacian::new(cfg.params.dim(), n),
            accel: alloc::vec![0.0; n],
            half_velocity: alloc::vec![0.0; n],
        }
    }

    fn acceleration(&mut self, u: &[f64], ut: &[f64]) {
        let n = u.len();
        let h2 = self.h * self.h;
        let dim = self.cfg.params.dim_f64();
        let out = &mut self.accel;
        self.laplacian.apply(u, out);
        for a in out.iter_mut() {
            *a /= h2;
        }
        let last = n - 1;
        let radius = self.cfg.grid.radius();
        let ur = -ut[last] - (dim - 1.0) / (2.0 * radius) * u[last];
        let ghost = u[last - 1] + 2.0 * self.h * ur;
        out[last] = (ghost - 2.0 * u[last] + u[last - 1]) / h2 + (dim - 1.0) / radius * ur;
        if self.cfg.nonlinear {
            let params = &self.cfg.params;
            for (a, &v) in out.iter_mut().zip(u) {
                *a += params.source(v);
            }
        }
    }

    fn step(&mut self, state: &PhysicalState) -> PhysicalState {
        let dt = self.cfg.dt;
        self.acceleration(&state.u, &state.ut);
        for ((v, &ut), &a) in self.half_velocity.iter_mut().zip(&state.ut).zip(&self.accel) {
            *v = ut + 0.5 * dt * a;
        }
        let u: Vec<f64> = state
            .u
            .iter()
            .zip(&self.half_velocity)
            .map(|(u, v)| u + dt * v)
            .collect();
        let half = core::mem::take(&mut self.half_velocity);
        self.acceleration(&u, &half);
        let ut = half.iter().zip(&self.accel).map(|(v, a)| v + 0.5 * dt * a).collect();
        self.half_velocity = half;
        PhysicalState { t: state.t + dt, u, ut }
    }
}

/// Advances one time step. Non-finite output is reported as blow-up, carrying
/// the input state as the last finite one.
pub fn step_physical(
    state: &PhysicalState,
    cfg: &PhysicalRunConfig,
) -> core::result::Result<PhysicalState, BlowUp<PhysicalState>> {
    let next = Stepper::new(cfg).step(state);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(BlowUp { last: state.clone() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupEstimate {
    /// Estimated blow-up time `T̂`.
    pub blowup_time: f64,
    /// Fitted growth exponent of `sup|u|` in `(T̂ - t)`; `2/(p-1)` for ODE-type blow-up.
    pub exponent: f64,
    /// RMS residual of the linear fit of `sup|u|^{-(p-1)/2}`, relative to its range.
    pub fit_residual: f64,
    /// Last time whose amplitude is resolved by the time step.
    pub stopped_at: f64,
    /// Time of the last finite state.
    pub final_time: f64,
    pub fit_samples: usize,
}

#[derive(Debug, Clone)]
pub struct PhysicalRun {
    pub trajectory: Vec<PhysicalState>,
    pub estimate: BlowupEstimate,
    /// `(t, sup|u|)` after every step.
    pub amplitude_history: Vec<(f64, f64)>,
}

impl PhysicalRun {
    /// Snapshots up to the last resolved time.
    pub fn resolved_trajectory(&self) -> &[PhysicalState] {
        let end = self.trajectory.partition_point(|s| s.t <= self.estimate.stopped_at);
        &self.trajectory[..end]
    }
}

/// Integrates until `sup|u|` exceeds the threshold (or overflows), then
/// estimates the blow-up time and the growth exponent from the trailing decade
/// of resolved growth.
pub fn run_until_blowup(cfg: &PhysicalRunConfig) -> Result<PhysicalRun> {
    cfg.validate()?;
    let mut state = cfg.initial.sample(&cfg.params, &cfg.grid)?;
    let mut stepper = Stepper::new(cfg);
    let mut trajectory = alloc::vec![state.clone()];
    let mut history = alloc::vec![(state.t, state.amplitude())];
    let mut steps = 0;
    loop {
        if steps == cfg.max_steps {
            return Err(Error::NoBlowup {
                steps,
                amplitude: state.amplitude(),
            });
        }
        let next = stepper.step(&state);
        steps += 1;
        if !next.is_finite() {
            if state.amplitude() < cfg.blowup_threshold.sqrt() {
                return Err(Error::NonFinite(next.t));
            }
            break;
        }
        state = next;
        let amplitude = state.amplitude();
        history.push((state.t, amplitude));
        if amplitude > cfg.blowup_threshold {
            break;
        }
        if steps % cfg.snapshot_stride == 0 {
            trajectory.push(state.clone());
        }
    }
    if trajectory.last().map(|s| s.t) != Some(state.t) {
        trajectory.push(state.clone());
    }
    let estimate = estimate_blowup(&cfg.params, cfg.dt, &history)?;
    Ok(PhysicalRun {
        trajectory,
        estimate,
        amplitude_history: history,
    })
}

/// Fits `A^{-(p-1)/2}` linearly in `t` over the trailing resolved decade of
/// amplitude growth; the zero crossing estimates `T`. The exponent comes from
/// a log-log fit of `A` against `T̂ - t` on the same window.
pub fn estimate_blowup(params: &Params, dt: f64, history: &[(f64, f64)]) -> Result<BlowupEstimate> {
    let half_power = (params.p() - 1.0) / 2.0;
    let scale = params.kappa0().powf(half_power);
    let resolved = |a: f64| a > 0.0 && scale * a.powf(-half_power) >= RESOLVED_STEPS * dt;
    let final_time = history.last().map_or(0.0, |h| h.0);
    let last = history
        .iter()
        .rposition(|&(_, a)| resolved(a))
        .ok_or(Error::TooFewSamples {
            need: MIN_FIT_SAMPLES,
            got: 0,
        })?;
    let top = history[last].1;
    let mut first = last;
    while first > 0 && history[first - 1].1 >= top / 10.0 && history[first - 1].1 <= top {
        first -= 1;
    }
    let window = &history[first..=last];
    if window.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            need: MIN_FIT_SAMPLES,
            got: window.len(),
        });
    }
    let times: Vec<f64> = window.iter().map(|w| w.0).collect();
    let transformed: Vec<f64> = window.iter().map(|w| w.1.powf(-half_power)).collect();
    let line = linear_fit(&times, &transformed);
    if !(line.slope < 0.0) {
        return Err(Error::NoBlowup {
            steps: history.len(),
            amplitude: top,
        });
    }
    let blowup_time = -line.intercept / line.slope;
    let range = transformed.iter().fold(0.0f64, |m, v| m.max(*v)).max(f64::MIN_POSITIVE);
    let rms = (times
        .iter()
        .zip(&transformed)
        .map(|(t, y)| (y - (line.intercept + line.slope * t)).powi(2))
        .sum::<f64>()
        / times.len() as f64)
        .sqrt();
    let log_tau: Vec<f64> = times.iter().map(|t| (blowup_time - t).ln()).collect();
    let log_amp: Vec<f64> = window.iter().map(|w| w.1.ln()).collect();
    let exponent = -linear_fit(&log_tau, &log_amp).slope;
    Ok(BlowupEstimate {
        blowup_time,
        exponent,
        fit_residual: rms / range,
        stopped_at: history[last].0,
        final_time,
        fit_samples: window.len(),
    })
}
