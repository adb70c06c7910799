//! Growth and decay diagnostics along physical and similarity trajectories,
//! with least-squares exponent fits and the verdicts built on them.
//!
//! Physical diagnostics are evaluated in the backward cone of `(0, T)`;
//! similarity diagnostics on the unit ball. A "vanishing" claim is judged by
//! a resolution-aware tail threshold together with a fitted decay exponent.

use alloc::vec::Vec;

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::energy::lyapunov_f;
use crate::error::{Error, Result};
use crate::grid::{radial_derivative, RadialGrid};
use crate::params::Params;
use crate::state::{PhysicalState, SimilarityState};

/// Samples needed in a fit window.
pub const MIN_FIT_SAMPLES: usize = 8;
/// Snapshots required inside every slab.
pub const MIN_SLAB_SAMPLES: usize = 32;
/// Number of slab parameters in a slab series.
pub const SLAB_COUNT: usize = 48;
/// `r²` a vanishing fit must exceed.
pub const MIN_R2: f64 = 0.95;
/// `C` in [`resolution_floor`].
pub const FLOOR_CONSTANT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ intercept + slope x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len().min(y.len()) as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).min(1.0)
    } else {
        1.0
    };
    LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[allow(non_camel_case_types)]
pub enum DiagnosticLabel {
    T1_L2,
    T2_ut_slab,
    T22_grad_slab,
    T4_full_slab,
    LIMENER,
    LOWER_BOUND,
    COR1,
    COR2,
    COR3,
    E03BIS,
    E03,
    E04,
}

impl DiagnosticLabel {
    pub const ALL: [DiagnosticLabel; 12] = [
        Self::T1_L2,
        Self::T2_ut_slab,
        Self::T22_grad_slab,
        Self::T4_full_slab,
        Self::LIMENER,
        Self::LOWER_BOUND,
        Self::COR1,
        Self::COR2,
        Self::COR3,
        Self::E03BIS,
        Self::E03,
        Self::E04,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::T1_L2 => "T1_L2",
            Self::T2_ut_slab => "T2_ut_slab",
            Self::T22_grad_slab => "T22_grad_slab",
            Self::T4_full_slab => "T4_full_slab",
            Self::LIMENER => "LIMENER",
            Self::LOWER_BOUND => "LOWER_BOUND",
            Self::COR1 => "COR1",
            Self::COR2 => "COR2",
            Self::COR3 => "COR3",
            Self::E03BIS => "E03BIS",
            Self::E03 => "E03",
            Self::E04 => "E04",
        }
    }

    /// Whether the series lives in physical time (and carries a horizon).
    pub fn is_physical(self) -> bool {
        matches!(
            self,
            Self::T1_L2
                | Self::T2_ut_slab
                | Self::T22_grad_slab
                | Self::T4_full_slab
                | Self::LIMENER
                | Self::LOWER_BOUND
        )
    }
}

impl core::fmt::Display for DiagnosticLabel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// Slope of `log v` against `log(T - t)`; positive for decay as `t → T`.
    PowerInTMinusT,
    /// Slope of `log v` against `s`; negative for decay. For physical series
    /// `s = -log(T - t)`.
    ExpInS,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    pub label: DiagnosticLabel,
    /// `(time, value)` with strictly increasing times.
    pub samples: Vec<(f64, f64)>,
    pub fitted_exponent: Option<f64>,
    pub r2: Option<f64>,
    /// Time range of the fit behind `fitted_exponent`.
    pub fit_window: (f64, f64),
    /// Blow-up time for physical series.
    pub horizon: Option<f64>,
}

impl DiagnosticSeries {
    /// Unfitted series; `fit_window` spans all samples.
    pub fn new(label: DiagnosticLabel, samples: Vec<(f64, f64)>, horizon: Option<f64>) -> Self {
        let fit_window = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => (a.0, b.0),
            _ => (0.0, 0.0),
        };
        Self {
            label,
            samples,
            fitted_exponent: None,
            r2: None,
            fit_window,
            horizon,
        }
    }

    /// Fills `fitted_exponent`, `r2` and `fit_window` from the default window
    /// when the fit succeeds.
    pub fn with_fit(mut self, model: FitModel) -> Self {
        if let Ok(fit) = fit_exponent(&self, model) {
            self.fitted_exponent = Some(fit.exponent);
            self.r2 = Some(fit.r2);
            self.fit_window = fit.window;
        }
        self
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }

    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn tail(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub r2: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Indices of the default fit window: the last third of the samples.
pub fn default_window(len: usize) -> core::ops::Range<usize> {
    len - len / 3..len
}

/// Fits the default window (last third) of `series`.
pub fn fit_exponent(series: &DiagnosticSeries, model: FitModel) -> Result<ExponentFit> {
    let window = default_window(series.samples.len());
    fit_samples(&series.samples[window], series.horizon, model)
}

/// Fits the given samples; `horizon` is the blow-up time for physical series.
pub fn fit_samples(samples: &[(f64, f64)], horizon: Option<f64>, model: FitModel) -> Result<ExponentFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples {
            need: MIN_FIT_SAMPLES,
            got: samples.len(),
        });
    }
    if let Some(&(time, value)) = samples.iter().find(|s| !(s.1 > 0.0)) {
        return Err(Error::NonPositive { time, value });
    }
    let abscissa = |t: f64| -> Result<f64> {
        match (model, horizon) {
            (FitModel::PowerInTMinusT, Some(h)) | (FitModel::ExpInS, Some(h)) if !(h > t) => Err(Error::Coverage {
                time: t,
                first: samples[0].0,
                last: h,
            }),
            (FitModel::PowerInTMinusT, Some(h)) => Ok((h - t).ln()),
            (FitModel::PowerInTMinusT, None) => Err(Error::Config("power model needs a blow-up time".into())),
            (FitModel::ExpInS, Some(h)) => Ok(-(h - t).ln()),
            (FitModel::ExpInS, None) => Ok(t),
        }
    };
    let x: Vec<f64> = samples.iter().map(|s| abscissa(s.0)).collect::<Result<_>>()?;
    let y: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let line = linear_fit(&x, &y);
    Ok(ExponentFit {
        exponent: line.slope,
        r2: line.r2,
        window: (samples[0].0, samples[samples.len() - 1].0),
        samples: samples.len(),
    })
}

/// Resolution-aware threshold `C h² max(1, scale)` below which a value counts as zero.
pub fn resolution_floor(h: f64, scale: f64) -> f64 {
    FLOOR_CONSTANT * h * h * scale.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingVerdict {
    pub tail: f64,
    pub max_abs: f64,
    pub floor: f64,
    pub exponent: Option<f64>,
    pub r2: Option<f64>,
    pub passed: bool,
}

/// A series vanishes if it is below `floor` everywhere, or if its tail has
/// fallen to at most half its peak and `|v|` fits a decaying exponential in
/// `s` with `r² > 0.95`.
pub fn vanishing_verdict(series: &DiagnosticSeries, floor: f64) -> VanishingVerdict {
    let max_abs = series.max_abs();
    let tail = series.tail().abs();
    if max_abs <= floor {
        return VanishingVerdict {
            tail,
            max_abs,
            floor,
            exponent: None,
            r2: None,
            passed: true,
        };
    }
    let magnitudes: Vec<(f64, f64)> = series.samples.iter().map(|&(t, v)| (t, v.abs())).collect();
    let fit = fit_samples(
        &magnitudes[default_window(magnitudes.len())],
        series.horizon,
        FitModel::ExpInS,
    )
    .ok();
    let decaying = fit.is_some_and(|f| f.exponent < 0.0 && f.r2 > MIN_R2);
    VanishingVerdict {
        tail,
        max_abs,
        floor,
        exponent: fit.map(|f| f.exponent),
        r2: fit.map(|f| f.r2),
        passed: tail <= (0.5 * max_abs).max(floor) && decaying,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedVerdict {
    pub sup: f64,
    pub leading_max: f64,
    pub trailing_max: f64,
    pub passed: bool,
}

/// The trailing half may not exceed twice the leading half (plus `floor`).
pub fn bounded_verdict(series: &DiagnosticSeries, floor: f64) -> BoundedVerdict {
    let half = series.samples.len() / 2;
    let max_of = |part: &[(f64, f64)]| part.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    let leading_max = max_of(&series.samples[..half]);
    let trailing_max = max_of(&series.samples[half..]);
    let finite = series.values().all(f64::is_finite);
    BoundedVerdict {
        sup: leading_max.max(trailing_max),
        leading_max,
        trailing_max,
        passed: finite && !series.samples.is_empty() && trailing_max <= 2.0 * leading_max + floor,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundVerdict {
    pub median: f64,
    pub trailing_inf: f64,
    pub passed: bool,
}

/// Positive median and `inf` over the trailing half at least `10⁻³` of it.
pub fn lower_bound_verdict(series: &DiagnosticSeries) -> LowerBoundVerdict {
    let mut sorted: Vec<f64> = series.values().collect();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.is_empty() {
        0.0
    } else {
        sorted[sorted.len() / 2]
    };
    let half = series.samples.len() / 2;
    let trailing_inf = series.samples[half..].iter().fold(f64::INFINITY, |m, s| m.min(s.1));
    LowerBoundVerdict {
        median,
        trailing_inf,
        passed: median > 0.0 && trailing_inf >= 1e-3 * median,
    }
}

/// `∫_a^b` of the piecewise-linear interpolant through `(times, values)`.
pub fn trapezoid_between(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[i], times[i + 1]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let at = |t: f64| values[i] + (values[i + 1] - values[i]) * (t - t0) / (t1 - t0);
        total += 0.5 * (hi - lo) * (at(lo) + at(hi));
    }
    total
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if times.windows(2).all(|w| w[1] > w[0]) {
        Ok(())
    } else {
        Err(Error::NonUniformSpacing)
    }
}

/// Snapshots strictly before `horizon` whose cone `B(0, T - t)` fits in the grid.
fn cone_snapshots<'a>(trajectory: &'a [PhysicalState], horizon: f64, grid: &RadialGrid) -> Result<&'a [PhysicalState]> {
    let first = trajectory.first().ok_or(Error::TooShort { need: 2, got: 0 })?;
    if horizon - first.t > grid.radius() * (1.0 + 1e-12) {
        return Err(Error::RadialCoverage {
            needed: horizon - first.t,
            available: grid.radius(),
        });
    }
    let end = trajectory
        .iter()
        .position(|s| s.t >= horizon)
        .unwrap_or(trajectory.len());
    if end < 2 {
        return Err(Error::TooShort { need: 2, got: end });
    }
    let cone = &trajectory[..end];
    let times: Vec<f64> = cone.iter().map(|s| s.t).collect();
    check_increasing(&times)?;
    Ok(cone)
}

struct PhysicalIntegrands {
    u_sq: Vec<f64>,
    ut_sq: Vec<f64>,
    ur_sq: Vec<f64>,
    power: Vec<f64>,
    ur: Vec<f64>,
}

impl PhysicalIntegrands {
    fn new(state: &PhysicalState, params: &Params, grid: &RadialGrid) -> Result<Self> {
        grid.check_len(&state.u)?;
        grid.check_len(&state.ut)?;
        let ur = radial_derivative(&state.u, grid.spacing());
        let p1 = params.p() + 1.0;
        Ok(Self {
            u_sq: state.u.iter().map(|v| v * v).collect(),
            ut_sq: state.ut.iter().map(|v| v * v).collect(),
            ur_sq: ur.iter().map(|v| v * v).collect(),
            power: state.u.iter().map(|v| v.abs().powf(p1) / p1).collect(),
            ur,
        })
    }
}

/// Growth and vanishing diagnostics in the backward cone of `(0, T)`:
/// `T1_L2`, the three slab integrals and `LIMENER`.
pub fn theorem1_diagnostics(
    trajectory: &[PhysicalState],
    blowup_time: f64,
    params: &Params,
    grid: &RadialGrid,
) -> Result<Vec<DiagnosticSeries>> {
    let cone = cone_snapshots(trajectory, blowup_time, grid)?;
    let n = params.dim_f64();
    let p = params.p();
    let l2_weight = -(p - 1.0) * n / (p + 3.0);

    let mut t1 = Vec::with_capacity(cone.len());
    let mut limener = Vec::with_capacity(cone.len());
    let mut half_ut = Vec::with_capacity(cone.len());
    let mut half_grad = Vec::with_capacity(cone.len());
    let mut full = Vec::with_capacity(cone.len());
    for state in cone {
        let tau = blowup_time - state.t;
        let ints = PhysicalIntegrands::new(state, params, grid)?;
        t1.push((
            state.t,
            tau.powf(l2_weight) * grid.integrate_ball_within(&ints.u_sq, tau)?,
        ));
        let energy: Vec<f64> = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let q = r / tau;
                (1.0 - q * q) * ints.ur[i] * ints.ur[i] + ints.ut_sq[i] - ints.power[i]
            })
            .collect();
        limener.push((state.t, 0.5 * tau * grid.integrate_ball_within(&energy, tau)?));
        half_ut.push(grid.integrate_ball_within(&ints.ut_sq, 0.5 * tau)?);
        half_grad.push(grid.integrate_ball_within(&ints.ur_sq, 0.5 * tau)?);
        let sum: Vec<f64> = ints.ut_sq.iter().zip(&ints.ur_sq).map(|(a, b)| a + b).collect();
        full.push(grid.integrate_ball_within(&sum, tau)?);
    }

    let times: Vec<f64> = cone.iter().map(|s| s.t).collect();
    let params_d = slab_parameters(&times, blowup_time)?;
    let slab = |values: &[f64]| -> Vec<(f64, f64)> {
        params_d
            .iter()
            .map(|&d| {
                let a = blowup_time - d;
                (a, trapezoid_between(&times, values, a, blowup_time - 0.5 * d))
            })
            .collect()
    };
    let horizon = Some(blowup_time);
    Ok(alloc::vec![
        DiagnosticSeries::new(DiagnosticLabel::T1_L2, t1, horizon).with_fit(FitModel::PowerInTMinusT),
        DiagnosticSeries::new(DiagnosticLabel::T2_ut_slab, slab(&half_ut), horizon).with_fit(FitModel::PowerInTMinusT),
        DiagnosticSeries::new(DiagnosticLabel::T22_grad_slab, slab(&half_grad), horizon)
            .with_fit(FitModel::PowerInTMinusT),
        DiagnosticSeries::new(DiagnosticLabel::T4_full_slab, slab(&full), horizon).with_fit(FitModel::PowerInTMinusT),
        DiagnosticSeries::new(DiagnosticLabel::LIMENER, limener, horizon).with_fit(FitModel::PowerInTMinusT),
    ])
}

/// Geometric sequence of slab widths `d`, decreasing, each slab
/// `[T - d, T - d/2]` inside the sampled range with enough snapshots.
fn slab_parameters(times: &[f64], horizon: f64) -> Result<Vec<f64>> {
    let step = times.windows(2).fold(0.0f64, |m, w| m.max(w[1] - w[0]));
    let d_max = horizon - times[0];
    let d_min = (2.0 * (horizon - times[times.len() - 1])).max(2.0 * MIN_SLAB_SAMPLES as f64 * step);
    if !(d_min < d_max) {
        return Err(Error::TooShort {
            need: times.len() * (d_min / d_max).ceil().max(2.0) as usize,
            got: times.len(),
        });
    }
    let ratio = (d_min / d_max).powf(1.0 / (SLAB_COUNT - 1) as f64);
    Ok((0..SLAB_COUNT).map(|k| d_max * ratio.powi(k as i32)).collect())
}

/// The bracketed lower-bound quantity
/// `τ^{2/(p-1)} ‖u‖/τ^{N/2} + τ^{2/(p-1)+1}(‖u_t‖ + ‖∇u‖)/τ^{N/2}`,
/// norms in `L²(B(0, τ))`, `τ = T - t`.
pub fn remark_lower_bound(
    trajectory: &[PhysicalState],
    blowup_time: f64,
    params: &Params,
    grid: &RadialGrid,
) -> Result<DiagnosticSeries> {
    let cone = cone_snapshots(trajectory, blowup_time, grid)?;
    let a = params.scaling_exponent();
    let half_dim = 0.5 * params.dim_f64();
    let samples = cone
        .iter()
        .map(|state| {
            let tau = blowup_time - state.t;
            let ints = PhysicalIntegrands::new(state, params, grid)?;
            let norm = |f: &[f64]| grid.integrate_ball_within(f, tau).map(|v| v.max(0.0).sqrt());
            let value = tau.powf(a - half_dim) * norm(&ints.u_sq)?
                + tau.powf(a + 1.0 - half_dim) * (norm(&ints.ut_sq)? + norm(&ints.ur_sq)?);
            Ok((state.t, value))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticSeries::new(
        DiagnosticLabel::LOWER_BOUND,
        samples,
        Some(blowup_time),
    ))
}

/// Windowed and pointwise decay diagnostics on a similarity trajectory:
/// `COR1`, `COR2`, `COR3`, `E03BIS`, `E03`, `E04`. Windowed series are
/// sampled at every `s` with `s + 1` inside the trajectory.
pub fn proposition31_diagnostics(
    trajectory: &[SimilarityState],
    params: &Params,
    grid: &RadialGrid,
) -> Result<Vec<DiagnosticSeries>> {
    let times: Vec<f64> = trajectory.iter().map(|s| s.s).collect();
    if times.len() < 2 {
        return Err(Error::TooShort {
            need: 2,
            got: times.len(),
        });
    }
    check_increasing(&times)?;
    let s_end = times[times.len() - 1];
    let windows = times.iter().take_while(|&&s| s + 1.0 <= s_end + 1e-12).count();
    if windows < 2 {
        return Err(Error::TooShort {
            need: times.len() + 1,
            got: times.len(),
        });
    }
    let eta = params.eta();
    let p = params.p();
    let omega = grid.omega();

    let mut ws_sq = Vec::with_capacity(times.len());
    let mut grad_sq = Vec::with_capacity(times.len());
    let mut degenerate_sq = Vec::with_capacity(times.len());
    let mut cor2 = Vec::with_capacity(times.len());
    let mut cor3 = Vec::with_capacity(times.len());
    let mut e04 = Vec::with_capacity(times.len());
    for state in trajectory {
        grid.check_len(&state.w)?;
        grid.check_len(&state.ws)?;
        let wr = radial_derivative(&state.w, grid.spacing());
        let mut acc = [0.0; 5];
        for (i, (&wt, &r)) in grid.weights().iter().zip(grid.nodes()).enumerate() {
            let g = wr[i] * wr[i];
            acc[0] += wt * state.ws[i] * state.ws[i];
            acc[1] += wt * g;
            acc[2] += wt * g * (1.0 - r * r);
            acc[3] += wt * state.w[i].abs().powf(0.5 * (p + 3.0));
            acc[4] += wt * state.w[i] * state.w[i];
        }
        let s = state.s;
        ws_sq.push(omega * acc[0]);
        grad_sq.push(omega * acc[1]);
        degenerate_sq.push(omega * acc[2]);
        cor2.push((s, (-2.0 * eta * s).exp() * omega * acc[3]));
        cor3.push((s, (-8.0 * eta * s / (p + 3.0)).exp() * omega * acc[4]));
        e04.push((s, lyapunov_f(state, params, grid)?.f));
    }

    let windowed = |integrand: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
        let values: Vec<f64> = (0..times.len()).map(integrand).collect();
        times[..windows]
            .iter()
            .map(|&s| {
                (
                    s,
                    (-2.0 * eta * s).exp() * trapezoid_between(&times, &values, s, s + 1.0),
                )
            })
            .collect()
    };
    let cor1 = windowed(&|k| ws_sq[k] + degenerate_sq[k]);
    debug_assert!(cor1.iter().all(|c| c.1 >= 0.0), "negative COR1 window");
    let e03bis = windowed(&|k| ws_sq[k]);
    let e03 = windowed(&|k| grad_sq[k]);
    Ok(alloc::vec![
        DiagnosticSeries::new(DiagnosticLabel::COR1, cor1, None).with_fit(FitModel::ExpInS),
        DiagnosticSeries::new(DiagnosticLabel::COR2, cor2, None).with_fit(FitModel::ExpInS),
        DiagnosticSeries::new(DiagnosticLabel::COR3, cor3, None).with_fit(FitModel::ExpInS),
        DiagnosticSeries::new(DiagnosticLabel::E03BIS, e03bis, None).with_fit(FitModel::ExpInS),
        DiagnosticSeries::new(DiagnosticLabel::E03, e03, None).with_fit(FitModel::ExpInS),
        DiagnosticSeries::new(DiagnosticLabel::E04, e04, None).with_fit(FitModel::ExpInS),
    ])
}

/// Looks up a series by label.
pub fn find(series: &[DiagnosticSeries], label: DiagnosticLabel) -> Option<&DiagnosticSeries> {
    series.iter().find(|s| s.label == label)
}
