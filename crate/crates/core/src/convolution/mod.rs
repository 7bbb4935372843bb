//! The stochastic convolution M(t) = Σ_k ∫₀ᵗ ψ_k(t−s) dW_k(s) driven by boundary
//! noise: J-integral diagnostics, the well-posedness catalogue, Monte Carlo
//! simulation of M and of the mild and semilinear solutions, and long-time and
//! tail diagnostics.

mod diagnostics;
mod jintegral;
mod predict;
mod propagators;
mod simulate;

pub use diagnostics::{
    gaussian_abs_moment, gaussian_tail_diagnostic, invariant_diagnostics, node_statistics, InvariantReport, NodeStats,
    TailReport, TailVerdict,
};
pub use jintegral::{j_integral, variance_at, variance_field, JLevel, JReport, JVerdict};
pub use predict::{catalog, classify_setup, predict_wellposedness, CatalogEntry, Prediction, PredictedVerdict, Scenario};
pub use simulate::{
    simulate_convolution, simulate_mild, simulate_mild_stepped, simulate_semilinear, Initial, Nonlinearity,
    PathEnsemble, Picard, ProbeGrid, SemilinearEnsemble, SteppedGrid,
};

use crate::error::{param, Error, Result};
use crate::geometry::{Domain, WeightedSpaceParams};
use crate::noise::BoundaryNoiseSpec;

/// How ψ_k is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    /// From the exact Green kernel.
    Exact,
    /// From the Gaussian majorant (C/√t)|∫ g_{ct}(x−b) e_k(b) ds(b)|.
    Majorant { constant: f64, c: f64 },
}

/// Everything that determines 𝒥_{T,α} and the law of M.
#[derive(Debug, Clone)]
pub struct ConvolutionSetup {
    pub domain: Domain,
    pub mode: KernelMode,
    pub noise: BoundaryNoiseSpec,
    pub params: WeightedSpaceParams,
    /// Horizon T; `f64::INFINITY` asks for the long-time integral.
    pub horizon: f64,
    /// Time weight t^{-α} in the J-integral.
    pub alpha: f64,
    /// Resolvent parameter of the Dirichlet map; ψ_k does not depend on it.
    pub lambda: f64,
}

impl ConvolutionSetup {
    /// Exact kernels, T = 1, α = 0, λ = 1.
    pub fn exact(domain: Domain, noise: BoundaryNoiseSpec, params: WeightedSpaceParams) -> Self {
        ConvolutionSetup { domain, mode: KernelMode::Exact, noise, params, horizon: 1.0, alpha: 0.0, lambda: 1.0 }
    }

    /// Majorant kernels with C = 1, c = 2, T = 1, α = 0, λ = 1.
    pub fn majorant(domain: Domain, noise: BoundaryNoiseSpec, params: WeightedSpaceParams) -> Self {
        ConvolutionSetup {
            domain,
            mode: KernelMode::Majorant { constant: 1.0, c: 2.0 },
            noise,
            params,
            horizon: 1.0,
            alpha: 0.0,
            lambda: 1.0,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.params = self.params.with_theta(theta)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || self.horizon.is_nan() {
            return Err(param("horizon", format!("must be positive, got {}", self.horizon)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(param("alpha", format!("must be finite and nonnegative, got {}", self.alpha)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(param("lambda", format!("must be finite and nonnegative, got {}", self.lambda)));
        }
        match (&self.domain, self.mode) {
            (Domain::UnitBall(_), KernelMode::Exact) => {
                Err(Error::Config("the unit ball has no exact kernel; use majorant mode".into()))
            }
            (Domain::GenericSigned(_), KernelMode::Exact) => {
                Err(Error::Config("generic domains have no exact kernel; use majorant mode".into()))
            }
            (_, KernelMode::Majorant { constant, c }) if !(constant > 0.0 && c > 0.0) => {
                Err(param("majorant", "constants C and c must be positive"))
            }
            _ => Ok(()),
        }
    }
}
