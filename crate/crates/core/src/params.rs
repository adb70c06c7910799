//! Problem constants `(N, p)` and the quantities derived from them.

use alloc::sync::Arc;
use core::fmt;

// Unused when a dependency links std.
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// `(N - 1)/2 - 2/(p - 1)`, the distance above the conformal exponent.
///
/// Defined for any `(N, p)`; it vanishes exactly at `p = 1 + 4/(N-1)`.
pub fn eta(dim: u32, p: f64) -> f64 {
    (f64::from(dim) - 1.0) / 2.0 - 2.0 / (p - 1.0)
}

/// Conformal exponent `1 + 4/(N-1)`.
pub fn conformal_exponent(dim: u32) -> f64 {
    1.0 + 4.0 / (f64::from(dim) - 1.0)
}

/// Sobolev exponent `1 + 4/(N-2)`, `+∞` when `N = 2`.
pub fn sobolev_exponent(dim: u32) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        1.0 + 4.0 / (f64::from(dim) - 2.0)
    }
}

/// Lower-order source term `f(u)` added to the pure power nonlinearity.
#[derive(Clone, Default)]
pub enum PerturbationSpec {
    #[default]
    None,
    /// `f(u) = -u`.
    KleinGordon,
    Custom(CustomPerturbation),
}

/// A user-supplied `f` together with the constants of its growth bound
/// `|f(u)| <= M(1 + |u|^q)`.
#[derive(Clone)]
pub struct CustomPerturbation {
    pub exponent: f64,
    pub bound: f64,
    map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomPerturbation {
    pub fn new(exponent: f64, bound: f64, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            exponent,
            bound,
            map: Arc::new(map),
        }
    }
}

impl fmt::Debug for CustomPerturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPerturbation")
            .field("exponent", &self.exponent)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

impl fmt::Debug for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("None"),
            Self::KleinGordon => f.write_str("KleinGordon"),
            Self::Custom(c) => c.fmt(f),
        }
    }
}

impl PerturbationSpec {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Self::None => 0.0,
            Self::KleinGordon => -u,
            Self::Custom(c) => (c.map)(u),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }

    /// `(q, M)` of the growth bound, `None` for the unperturbed equation.
    pub fn growth_bound(&self) -> Option<(f64, f64)> {
        match self {
            Self::None => None,
            Self::KleinGordon => Some((1.0, 1.0)),
            Self::Custom(c) => Some((c.exponent, c.bound)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::KleinGordon => "klein_gordon",
            Self::Custom(_) => "custom_f",
        }
    }
}

/// Lattice of `u` values on which the growth bound is sampled: zero, and
/// `±10^k` for `k` from -6 to 8 in quarter decades.
fn growth_lattice() -> impl Iterator<Item = f64> {
    let magnitudes = (-24..=32).map(|k| 10f64.powf(f64::from(k) / 4.0));
    core::iter::once(0.0).chain(magnitudes.flat_map(|m| [m, -m]))
}

fn check_growth(spec: &PerturbationSpec, p: f64) -> Result<()> {
    let Some((q, bound)) = spec.growth_bound() else {
        return Ok(());
    };
    if !(q < p) {
        return Err(Error::PerturbationExponent { q, p });
    }
    if !(bound > 0.0) {
        return Err(Error::Config(alloc::format!(
            "perturbation bound M = {bound} must be positive"
        )));
    }
    for u in growth_lattice() {
        let value = spec.eval(u);
        let limit = bound * (1.0 + u.abs().powf(q));
        // relative slack for rounding in the user map
        if !value.is_finite() || value.abs() > limit * (1.0 + 1e-12) {
            return Err(Error::PerturbationBound { u });
        }
    }
    Ok(())
}

/// Validated problem parameters.
#[derive(Debug, Clone)]
pub struct Params {
    dim: u32,
    p: f64,
    eta: f64,
    p_conf: f64,
    p_sob: f64,
    kappa0: f64,
    perturbation: PerturbationSpec,
}

impl Params {
    /// Validates `N >= 2`, the open band `p_conf < p < p_sob`, and the growth
    /// bound of the perturbation on a sampling lattice.
    pub fn new(dim: u32, p: f64, perturbation: PerturbationSpec) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Dimension(dim));
        }
        let p_conf = conformal_exponent(dim);
        let p_sob = sobolev_exponent(dim);
        if !(p > p_conf && p < p_sob) {
            return Err(Error::ExponentOutOfBand {
                p,
                lower: p_conf,
                upper: p_sob,
            });
        }
        check_growth(&perturbation, p)?;
        let kappa0 = (2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0))).powf(1.0 / (p - 1.0));
        Ok(Self {
            dim,
            p,
            eta: eta(dim, p),
            p_conf,
            p_sob,
            kappa0,
            perturbation,
        })
    }

    /// Unperturbed equation.
    pub fn pure_power(dim: u32, p: f64) -> Result<Self> {
        Self::new(dim, p, PerturbationSpec::None)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn dim_f64(&self) -> f64 {
        f64::from(self.dim)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn p_conf(&self) -> f64 {
        self.p_conf
    }

    pub fn p_sob(&self) -> f64 {
        self.p_sob
    }

    /// Constant stationary solution of the similarity equation,
    /// `κ0^{p-1} = 2(p+1)/(p-1)^2`.
    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn perturbation(&self) -> &PerturbationSpec {
        &self.perturbation
    }

    /// Self-similar scaling exponent `2/(p-1)`.
    pub fn scaling_exponent(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    /// Coefficient `2(p+1)/(p-1)^2` of the linear term in similarity variables.
    pub fn mass_coefficient(&self) -> f64 {
        2.0 * (self.p + 1.0) / ((self.p - 1.0) * (self.p - 1.0))
    }

    /// Coefficient `(p+3)/(p-1)` of `∂s w` in similarity variables.
    pub fn friction_coefficient(&self) -> f64 {
        (self.p + 3.0) / (self.p - 1.0)
    }

    /// `sign(u)|u|^p`.
    pub fn power_term(&self, u: f64) -> f64 {
        u.abs().powf(self.p).copysign(u)
    }

    /// Full source `|u|^{p-1}u + f(u)` of the physical equation.
    pub fn source(&self, u: f64) -> f64 {
        self.power_term(u) + self.perturbation.eval(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_constants_for_three_four() {
        let params = Params::pure_power(3, 4.0).unwrap();
        assert!((params.eta() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(params.p_conf(), 3.0);
        assert_eq!(params.p_sob(), 5.0);
        let expected = (10.0f64 / 9.0).powf(1.0 / 3.0);
        assert!((params.kappa0() - expected).abs() < 1e-15);
    }

    #[test]
    fn band_edges_are_rejected() {
        assert!(matches!(
            Params::pure_power(3, 3.0),
            Err(Error::ExponentOutOfBand { .. })
        ));
        assert!(matches!(
            Params::pure_power(3, 5.0),
            Err(Error::ExponentOutOfBand { .. })
        ));
        assert_eq!(Params::pure_power(1, 4.0).unwrap_err(), Error::Dimension(1));
        assert!(Params::pure_power(3, f64::NAN).is_err());
    }

    #[test]
    fn eta_vanishes_at_conformal_exponent() {
        assert_eq!(eta(3, conformal_exponent(3)), 0.0);
        assert_eq!(eta(5, conformal_exponent(5)), 0.0);
    }

    #[test]
    fn two_dimensions_have_no_upper_bound() {
        assert!(sobolev_exponent(2).is_infinite());
        let params = Params::pure_power(2, 50.0).unwrap();
        assert!(params.eta() > 0.0);
    }

    #[test]
    fn klein_gordon_is_admissible() {
        let params = Params::new(3, 4.0, PerturbationSpec::KleinGordon).unwrap();
        assert_eq!(params.source(2.0), 16.0 - 2.0);
        assert_eq!(params.perturbation().growth_bound(), Some((1.0, 1.0)));
    }

    #[test]
    fn custom_perturbation_growth_is_checked() {
        let ok = CustomPerturbation::new(2.0, 3.0, |u| 2.0 * u * u.abs() + 1.0);
        assert!(Params::new(3, 4.0, PerturbationSpec::Custom(ok)).is_ok());

        let too_fast = CustomPerturbation::new(2.0, 1.0, |u| u.abs().powi(3));
        assert!(matches!(
            Params::new(3, 4.0, PerturbationSpec::Custom(too_fast)),
            Err(Error::PerturbationBound { .. })
        ));

        let q_too_big = CustomPerturbation::new(4.5, 1.0, |_| 0.0);
        assert!(matches!(
            Params::new(3, 4.0, PerturbationSpec::Custom(q_too_big)),
            Err(Error::PerturbationExponent { .. })
        ));
    }

    #[test]
    fn power_term_is_odd() {
        let params = Params::pure_power(4, 2.5).unwrap();
        assert_eq!(params.power_term(0.0), 0.0);
        let a = params.power_term(1.7);
        assert_eq!(params.power_term(-1.7), -a);
    }
}
