//! Model parameters and the shared tolerance settings.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Parameters of the rate-equation model. Rates are per nanosecond; `alpha`,
/// `delta` and `mu` are dimensionless. The injection coupling efficiency is
/// absorbed into the injected field, so it does not appear here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserParams {
    /// Cavity field decay rate (ns^-1).
    pub kappa: f64,
    /// Linewidth enhancement (Henry) factor.
    pub alpha: f64,
    /// Carrier decay rate (ns^-1).
    pub gamma: f64,
    /// Spin-mixing ratio: spin relaxation rate over carrier decay rate.
    pub delta: f64,
    /// Normalized injection current; `mu = 1` is the lasing threshold.
    pub mu: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParamError {
    #[error("field decay rate kappa must be positive, got {0}")]
    Kappa(f64),
    #[error("carrier decay rate gamma must be positive, got {0}")]
    Gamma(f64),
    #[error("spin-mixing ratio delta must be positive, got {0}")]
    Delta(f64),
    #[error("injection current mu must exceed threshold (mu > 1), got {0}")]
    Mu(f64),
    #[error("parameters must be finite")]
    NonFinite,
}

impl LaserParams {
    pub fn new(kappa: f64, alpha: f64, gamma: f64, delta: f64, mu: f64) -> Result<Self, ParamError> {
        let p = Self { kappa, alpha, gamma, delta, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let all = [self.kappa, self.alpha, self.gamma, self.delta, self.mu];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(ParamError::NonFinite);
        }
        if self.kappa <= 0.0 {
            return Err(ParamError::Kappa(self.kappa));
        }
        if self.gamma <= 0.0 {
            return Err(ParamError::Gamma(self.gamma));
        }
        if self.delta <= 0.0 {
            return Err(ParamError::Delta(self.delta));
        }
        if self.mu <= 1.0 {
            return Err(ParamError::Mu(self.mu));
        }
        Ok(())
    }

    /// `|1 + i alpha|`, the modulus of the complex gain factor.
    pub fn henry_mod(&self) -> f64 {
        (1.0 + self.alpha * self.alpha).sqrt()
    }

    /// `theta = -arg(1 + i alpha)`, the phase shift the gain factor imprints
    /// on every equilibrium field.
    pub fn phase_shift(&self) -> f64 {
        -self.alpha.atan()
    }

    /// Emitted intensity `|E|^2` of the free-running laser.
    pub fn free_running_intensity(&self) -> f64 {
        self.mu - 1.0
    }
}

/// Reference VCSEL parameter set used by the command-line defaults and
/// throughout the test suite.
impl Default for LaserParams {
    fn default() -> Self {
        Self { kappa: 300.0, alpha: 0.0, gamma: 1.0, delta: 1.4, mu: 1.2 }
    }
}

/// Single knob for every tolerance in the pipeline, so runs are reproducible
/// from one value set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    /// Residual below which a reduced-map root is accepted.
    pub root_residual: f64,
    /// Relative error allowed between analytic Jacobians and finite differences.
    pub jacobian_fd: f64,
    /// Relative per-step error of the time integrator.
    pub ode_rel: f64,
    /// Absolute per-step error of the time integrator.
    pub ode_abs: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self { root_residual: 1e-10, jacobian_fd: 1e-6, ode_rel: 1e-9, ode_abs: 1e-12 }
    }
}
