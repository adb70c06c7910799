//! Self-similar change of variables centred at the origin,
//!
//! ```text
//! y = x / (T0 - t),   s = -log(T0 - t),   u(x, t) = (T0 - t)^{-2/(p-1)} w(y, s),
//! ```
//!
//! in both directions, plus the frame shift `T0 -> T0 - δ` expressed directly
//! on `w`. Values between snapshots and nodes are cubic Lagrange interpolants;
//! time derivatives come from the chain rule, never from differencing in time.

use alloc::vec::Vec;

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{radial_derivative, RadialGrid};
use crate::interp::{lagrange4, radial_cubic, stencil_start, Parity};
use crate::params::Params;
use crate::state::{PhysicalState, SimilarityState};

const COVERAGE_SLACK: f64 = 1e-12;

/// Four snapshots and their Lagrange weights for one target time.
struct TimeStencil {
    start: usize,
    weights: [f64; 4],
}

fn time_stencil(times: &[f64], target: f64) -> Result<TimeStencil> {
    let (first, last) = (times[0], times[times.len() - 1]);
    let slack = COVERAGE_SLACK * (1.0 + first.abs().max(last.abs()));
    if target < first - slack || target > last + slack {
        return Err(Error::Coverage {
            time: target,
            first,
            last,
        });
    }
    let start = stencil_start(times, target);
    let knots = [times[start], times[start + 1], times[start + 2], times[start + 3]];
    Ok(TimeStencil {
        start,
        weights: lagrange4(knots, target),
    })
}

/// Nodal fields of one snapshot: value, time derivative, radial derivative.
struct Fields<'a> {
    value: &'a [f64],
    rate: &'a [f64],
    gradient: Vec<f64>,
}

fn interpolate(fields: &[Fields<'_>; 4], weights: &[f64; 4], h: f64, r: f64) -> (f64, f64, f64) {
    let mut out = (0.0, 0.0, 0.0);
    for (f, &wt) in fields.iter().zip(weights) {
        out.0 += wt * radial_cubic(f.value, h, r, Parity::Even);
        out.1 += wt * radial_cubic(f.rate, h, r, Parity::Even);
        out.2 += wt * radial_cubic(&f.gradient, h, r, Parity::Odd);
    }
    out
}

fn require_snapshots(got: usize) -> Result<()> {
    if got < 4 {
        Err(Error::TooShort { need: 4, got })
    } else {
        Ok(())
    }
}

/// Similarity states `w_{0,T0}` at the requested `s` on `sim_grid` (normally
/// the unit ball). `horizon` is the blow-up time estimate; frames beyond it are
/// rejected. Every `s` must map to `t = T0 - e^{-s}` inside the trajectory, and
/// the physical grid must reach `e^{-s}` times the similarity radius.
pub fn to_similarity(
    trajectory: &[PhysicalState],
    physical_grid: &RadialGrid,
    params: &Params,
    frame: f64,
    horizon: f64,
    s_samples: &[f64],
    sim_grid: &RadialGrid,
) -> Result<Vec<SimilarityState>> {
    if frame > horizon * (1.0 + COVERAGE_SLACK) {
        return Err(Error::FrameBeyondBlowup { frame, horizon });
    }
    require_snapshots(trajectory.len())?;
    for state in trajectory {
        physical_grid.check_len(&state.u)?;
        physical_grid.check_len(&state.ut)?;
    }
    let times: Vec<f64> = trajectory.iter().map(|s| s.t).collect();
    let a = params.scaling_exponent();
    let h = physical_grid.spacing();
    s_samples
        .iter()
        .map(|&s| {
            let tau = (-s).exp();
            let t = frame - tau;
            let stencil = time_stencil(&times, t)?;
            let needed = tau * sim_grid.radius();
            if needed > physical_grid.radius() * (1.0 + COVERAGE_SLACK) {
                return Err(Error::RadialCoverage {
                    needed,
                    available: physical_grid.radius(),
                });
            }
            let fields: [Fields<'_>; 4] = core::array::from_fn(|k| {
                let snap = &trajectory[stencil.start + k];
                Fields {
                    value: &snap.u,
                    rate: &snap.ut,
                    gradient: radial_derivative(&snap.u, h),
                }
            });
            let scale = tau.powf(a);
            let mut w = Vec::with_capacity(sim_grid.len());
            let mut ws = Vec::with_capacity(sim_grid.len());
            for &y in sim_grid.nodes() {
                let r = (tau * y).min(physical_grid.radius());
                let (u, ut, ur) = interpolate(&fields, &stencil.weights, h, r);
                w.push(scale * u);
                ws.push(scale * (tau * ut - r * ur - a * u));
            }
            Ok(SimilarityState { s, w, ws })
        })
        .collect()
}

/// Physical states at the requested `t` on `physical_grid`, which must lie in
/// the cone: its radius may not exceed `(T0 - t)` times the similarity radius.
pub fn from_similarity(
    trajectory: &[SimilarityState],
    sim_grid: &RadialGrid,
    params: &Params,
    frame: f64,
    t_samples: &[f64],
    physical_grid: &RadialGrid,
) -> Result<Vec<PhysicalState>> {
    require_snapshots(trajectory.len())?;
    for state in trajectory {
        sim_grid.check_len(&state.w)?;
        sim_grid.check_len(&state.ws)?;
    }
    let times: Vec<f64> = trajectory.iter().map(|s| s.s).collect();
    let a = params.scaling_exponent();
    let h = sim_grid.spacing();
    t_samples
        .iter()
        .map(|&t| {
            let tau = frame - t;
            if !(tau > 0.0) {
                return Err(Error::Coverage {
                    time: t,
                    first: f64::NEG_INFINITY,
                    last: frame,
                });
            }
            let s = -tau.ln();
            let stencil = time_stencil(&times, s)?;
            let needed = physical_grid.radius() / tau;
            if needed > sim_grid.radius() * (1.0 + COVERAGE_SLACK) {
                return Err(Error::RadialCoverage {
                    needed,
                    available: sim_grid.radius(),
                });
            }
            let fields: [Fields<'_>; 4] = core::array::from_fn(|k| {
                let snap = &trajectory[stencil.start + k];
                Fields {
                    value: &snap.w,
                    rate: &snap.ws,
                    gradient: radial_derivative(&snap.w, h),
                }
            });
            let scale = tau.powf(-a);
            let mut u = Vec::with_capacity(physical_grid.len());
            let mut ut = Vec::with_capacity(physical_grid.len());
            for &r in physical_grid.nodes() {
                let y = (r / tau).min(sim_grid.radius());
                let (w, ws, wy) = interpolate(&fields, &stencil.weights, h, y);
                u.push(scale * w);
                ut.push(scale / tau * (a * w + y * wy + ws));
            }
            Ok(PhysicalState { t, u, ut })
        })
        .collect()
}

/// `w̃^δ(y, s) = λ^{-2/(p-1)} w(y/λ, -log(δ + e^{-s}))` with `λ = 1 + δe^s`:
/// the similarity trajectory of the frame `T0 - δ` built from the `T0` frame.
pub fn shift_frame(
    trajectory: &[SimilarityState],
    sim_grid: &RadialGrid,
    params: &Params,
    delta: f64,
    s_samples: &[f64],
) -> Result<Vec<SimilarityState>> {
    if !(delta > 0.0) {
        return Err(Error::Config(alloc::format!(
            "frame shift must be positive, got {delta}"
        )));
    }
    require_snapshots(trajectory.len())?;
    let times: Vec<f64> = trajectory.iter().map(|s| s.s).collect();
    let a = params.scaling_exponent();
    let h = sim_grid.spacing();
    s_samples
        .iter()
        .map(|&s| {
            let lambda = 1.0 + delta * s.exp();
            let source_s = -(delta + (-s).exp()).ln();
            let stencil = time_stencil(&times, source_s)?;
            let fields: [Fields<'_>; 4] = core::array::from_fn(|k| {
                let snap = &trajectory[stencil.start + k];
                Fields {
                    value: &snap.w,
                    rate: &snap.ws,
                    gradient: radial_derivative(&snap.w, h),
                }
            });
            let scale = lambda.powf(-a);
            let mut w = Vec::with_capacity(sim_grid.len());
            let mut ws = Vec::with_capacity(sim_grid.len());
            for &y in sim_grid.nodes() {
                let z = y / lambda;
                let (wv, wsv, wy) = interpolate(&fields, &stencil.weights, h, z);
                w.push(scale * wv);
                ws.push(scale / lambda * (wsv - (lambda - 1.0) * (a * wv + z * wy)));
            }
            Ok(SimilarityState { s, w, ws })
        })
        .collect()
}

/// `(w̃^δ, ∂s w̃^δ)` of the stationary solution `κ0` seen from the frame `T0 - δ`.
pub fn shifted_stationary(params: &Params, delta: f64, s: f64) -> (f64, f64) {
    let a = params.scaling_exponent();
    let lambda = 1.0 + delta * s.exp();
    let w = params.kappa0() * lambda.powf(-a);
    (w, -a * (lambda - 1.0) / lambda * w)
}
