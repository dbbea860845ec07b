//! Distributed control law, adaptive estimate updates and the stability
//! diagnostics.
//!
//! Everything here sees only graph-local signals: an agent's own state norm,
//! its synchronization error chain, its in-degree plus pinning gain and its
//! own estimates. The true agent nonlinearity never enters.

mod filter;
mod gain;

pub use filter::{
    companion_matrix, filter_coefficients, is_hurwitz, lyapunov_residual, solve_lyapunov,
    FilterContext,
};
pub use gain::{gain_check, r_bounds, GainCheckInputs, GainReport};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::ppf::ChannelChain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("filter coefficients {coefficients:?} do not give a Hurwitz companion matrix")]
    NotHurwitz { coefficients: Vec<f64> },
    #[error("Lyapunov equation system is singular")]
    SingularLyapunovSystem,
    #[error("Lyapunov residual {residual:e} exceeds tolerance")]
    LyapunovResidual { residual: f64 },
    #[error("input matrix is not invertible")]
    SingularInputMatrix,
    #[error("agent has neither neighbours nor a leader link (d + b = 0)")]
    ZeroDegreePlusPinning,
    #[error("controller parameter `{name}` must be positive and finite (got {value})")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("model does not expose the ground truth needed by the Lyapunov monitor")]
    GroundTruthUnavailable,
    #[error("controller signal dimensions do not match")]
    DimensionMismatch,
}

impl ControllerError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ControllerError::NotHurwitz { .. }
            | ControllerError::SingularLyapunovSystem
            | ControllerError::LyapunovResidual { .. } => ErrorCategory::Filter,
            ControllerError::InvalidParameter { .. } => ErrorCategory::Config,
            ControllerError::ZeroDegreePlusPinning => ErrorCategory::Graph,
            ControllerError::SingularInputMatrix
            | ControllerError::GroundTruthUnavailable
            | ControllerError::DimensionMismatch => ErrorCategory::Model,
        }
    }
}

/// Design gains of the controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Control gain on the metric error.
    pub c: f64,
    /// Leakage gain of the adaptive laws.
    pub k: f64,
    /// Adaptation gain of θ̂, one per agent.
    pub gamma1: Vec<f64>,
    /// Adaptation gain of ω̂, one per agent.
    pub gamma2: Vec<f64>,
    /// Root of the binomial filter `(s + λ)^{M−1}`.
    pub lambda: f64,
    /// Right-hand side constant of the Lyapunov equation.
    pub beta: f64,
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let check = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ControllerError::InvalidParameter { name, value })
            }
        };
        check("c", self.c)?;
        check("k", self.k)?;
        check("beta", self.beta)?;
        if !self.lambda.is_finite() {
            return Err(ControllerError::InvalidParameter { name: "lambda", value: self.lambda });
        }
        self.gamma1.iter().try_for_each(|&g| check("gamma1", g))?;
        self.gamma2.iter().try_for_each(|&g| check("gamma2", g))?;
        Ok(())
    }
}

/// Adaptive estimates of every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub theta_hat: Vec<Vec<f64>>,
    pub omega_hat: Vec<Vec<f64>>,
}

impl AdaptiveState {
    pub fn zeros(agents: usize, channels: usize) -> Self {
        AdaptiveState {
            theta_hat: vec![vec![0.0; channels]; agents],
            omega_hat: vec![vec![0.0; channels]; agents],
        }
    }
}

/// `E = ε^{M} + λ_{M−1}ε^{M−1} + … + λ₁ε¹` for one channel.
pub fn metric_error(eps: &[f64], lambda_bar: &[f64]) -> f64 {
    debug_assert_eq!(eps.len(), lambda_bar.len() + 1);
    let top = eps[eps.len() - 1];
    top + lambda_bar.iter().zip(eps).map(|(l, e)| l * e).sum::<f64>()
}

/// Graph-local signals available to agent `i` when computing its input.
#[derive(Debug, Clone, Copy)]
pub struct LocalControlContext<'a> {
    /// `Eᵢ`, one entry per channel.
    pub metric_error: &'a [f64],
    /// Transformed-error chain per channel; `r` gives the diagonal of Ωᵢ.
    pub chains: &'a [ChannelChain],
    /// `dᵢ + bᵢ`
    pub degree_plus_pinning: f64,
    pub input_matrix: &'a DMatrix<f64>,
    pub theta_hat: &'a [f64],
    pub omega_hat: &'a [f64],
    /// `‖xᵢ‖∞`
    pub state_norm: f64,
}

/// Distributed control input
///
/// `uᵢ = −Gᵢ⁻¹(cEᵢ + θ̂ᵢ‖xᵢ‖∞ + ω̂ᵢ) − Gᵢ⁻¹(dᵢ+bᵢ)⁻¹Ωᵢ⁻¹(λ_{M−1}ε^{M} + … + λ₁ε²)`.
pub fn control_input(
    ctx: &LocalControlContext<'_>,
    c: f64,
    lambda_bar: &[f64],
) -> Result<Vec<f64>, ControllerError> {
    let p = ctx.metric_error.len();
    if ctx.chains.len() != p
        || ctx.theta_hat.len() != p
        || ctx.omega_hat.len() != p
        || ctx.input_matrix.nrows() != p
        || ctx.input_matrix.ncols() != p
    {
        return Err(ControllerError::DimensionMismatch);
    }
    if !(ctx.degree_plus_pinning > 0.0) {
        return Err(ControllerError::ZeroDegreePlusPinning);
    }
    let v = DVector::from_fn(p, |ch, _| {
        let chain = &ctx.chains[ch];
        let filtered: f64 = lambda_bar.iter().zip(chain.phi2()).map(|(l, e)| l * e).sum();
        c * ctx.metric_error[ch]
            + ctx.theta_hat[ch] * ctx.state_norm
            + ctx.omega_hat[ch]
            + filtered / (ctx.degree_plus_pinning * chain.r)
    });
    let solved = ctx
        .input_matrix
        .clone()
        .lu()
        .solve(&v)
        .ok_or(ControllerError::SingularInputMatrix)?;
    if solved.iter().any(|x| !x.is_finite()) {
        return Err(ControllerError::SingularInputMatrix);
    }
    Ok(solved.iter().map(|x| -x).collect())
}

/// Adaptation and leakage gains for one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveGains {
    pub gamma1: f64,
    pub gamma2: f64,
    pub k: f64,
}

/// Graph-local signals entering the adaptive laws of agent `i`.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveSignals<'a> {
    pub metric_error: &'a [f64],
    /// `rᵢᵖ` per channel.
    pub r: &'a [f64],
    /// `mᵢ`
    pub m_weight: f64,
    pub degree_plus_pinning: f64,
    pub state_norm: f64,
    pub theta_hat: &'a [f64],
    pub omega_hat: &'a [f64],
}

/// Time derivatives `(θ̂̇ᵢ, ω̂̇ᵢ)`:
///
/// `θ̂̇ = Γ₁(d+b)·r·m·E·‖x‖∞ − kΓ₁θ̂`, `ω̂̇ = Γ₂(d+b)·r·m·E − kΓ₂ω̂`.
pub fn adaptive_update(gains: AdaptiveGains, s: &AdaptiveSignals<'_>) -> (Vec<f64>, Vec<f64>) {
    let drive: Vec<f64> = s
        .metric_error
        .iter()
        .zip(s.r)
        .map(|(e, r)| s.degree_plus_pinning * r * s.m_weight * e)
        .collect();
    let theta_dot = drive
        .iter()
        .zip(s.theta_hat)
        .map(|(d, th)| gains.gamma1 * d * s.state_norm - gains.k * gains.gamma1 * th)
        .collect();
    let omega_dot = drive
        .iter()
        .zip(s.omega_hat)
        .map(|(d, om)| gains.gamma2 * d - gains.k * gains.gamma2 * om)
        .collect();
    (theta_dot, omega_dot)
}

/// Inputs of the Lyapunov monitor, indexed `[agent][channel]`.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovInputs<'a> {
    pub metric_errors: &'a [Vec<f64>],
    /// `Φ₁` rows: `[ε¹, …, ε^{M−1}]` per agent and channel.
    pub phi1: &'a [Vec<Vec<f64>>],
    pub theta_tilde: &'a [Vec<f64>],
    pub omega_tilde: &'a [Vec<f64>],
    pub m_weights: &'a [f64],
    pub gamma1: &'a [f64],
    pub gamma2: &'a [f64],
    pub lyapunov: &'a DMatrix<f64>,
}

/// The four quadratic pieces of the Lyapunov candidate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LyapunovTerms {
    pub metric: f64,
    pub theta: f64,
    pub omega: f64,
    pub filter: f64,
}

impl LyapunovTerms {
    pub fn total(&self) -> f64 {
        self.metric + self.theta + self.omega + self.filter
    }
}

/// `V = ½Eᵀ𝓜E + ½θ̃ᵀΓ₁⁻¹θ̃ + ½ω̃ᵀΓ₂⁻¹ω̃ + ½Tr{Φ₁MΦ₁ᵀ}`.
pub fn lyapunov_diagnostic(inp: &LyapunovInputs<'_>) -> LyapunovTerms {
    let mut terms = LyapunovTerms::default();
    for (i, e_i) in inp.metric_errors.iter().enumerate() {
        terms.metric += 0.5 * inp.m_weights[i] * e_i.iter().map(|e| e * e).sum::<f64>();
        terms.theta += 0.5 * inp.theta_tilde[i].iter().map(|v| v * v).sum::<f64>() / inp.gamma1[i];
        terms.omega += 0.5 * inp.omega_tilde[i].iter().map(|v| v * v).sum::<f64>() / inp.gamma2[i];
        for row in &inp.phi1[i] {
            let n = row.len();
            let mut quad = 0.0;
            for a in 0..n {
                for b in 0..n {
                    quad += row[a] * inp.lyapunov[(a, b)] * row[b];
                }
            }
            terms.filter += 0.5 * quad;
        }
    }
    terms
}
