//! Prescribed performance funnels and the error transformation.
//!
//! A funnel `ρ(t)` decays exponentially from `rho0` to `rho_inf`. The
//! normalized error `u = e/ρ` must stay in an open interval set by the two
//! shape constants; the log-ratio map sends that interval onto the whole real
//! line so the controller can work with an unconstrained error `ε`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The normalized error reached the edge of its admissible interval.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("funnel violation: e/rho = {ratio} outside ({lower}, {upper})")]
pub struct FunnelViolation {
    pub ratio: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpfParamError {
    #[error("funnel needs rho0 > rho_inf > 0 (got rho0 = {rho0}, rho_inf = {rho_inf})")]
    Radii { rho0: f64, rho_inf: f64 },
    #[error("funnel decay rate must be positive (got {0})")]
    Decay(f64),
    #[error("funnel shape constants must be positive (got upper = {upper}, lower = {lower})")]
    Shape { upper: f64, lower: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpfParams {
    pub rho0: f64,
    pub rho_inf: f64,
    /// Decay rate ℓ in 1/s.
    pub decay: f64,
    pub delta_upper: f64,
    pub delta_lower: f64,
}

impl PpfParams {
    pub fn new(
        rho0: f64,
        rho_inf: f64,
        decay: f64,
        delta_upper: f64,
        delta_lower: f64,
    ) -> Result<Self, PpfParamError> {
        let p = PpfParams { rho0, rho_inf, decay, delta_upper, delta_lower };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PpfParamError> {
        if !(self.rho_inf > 0.0 && self.rho0 > self.rho_inf && self.rho0.is_finite()) {
            return Err(PpfParamError::Radii { rho0: self.rho0, rho_inf: self.rho_inf });
        }
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(PpfParamError::Decay(self.decay));
        }
        let ok = |d: f64| d > 0.0 && d.is_finite();
        if !(ok(self.delta_upper) && ok(self.delta_lower)) {
            return Err(PpfParamError::Shape { upper: self.delta_upper, lower: self.delta_lower });
        }
        Ok(())
    }

    /// `ρ(t) = (ρ₀ − ρ∞)·exp(−ℓt) + ρ∞`
    pub fn value(&self, t: f64) -> f64 {
        (self.rho0 - self.rho_inf) * (-self.decay * t).exp() + self.rho_inf
    }

    /// `ρ̇(t) = −ℓ(ρ₀ − ρ∞)·exp(−ℓt)`
    pub fn derivative(&self, t: f64) -> f64 {
        -self.decay * (self.rho0 - self.rho_inf) * (-self.decay * t).exp()
    }

    /// `(lower, upper)` magnitudes of the admissible normalized-error
    /// interval `(−lower, upper)` on the given branch.
    pub fn interval(&self, branch: SignBranch) -> (f64, f64) {
        match branch {
            SignBranch::Positive => (self.delta_lower, self.delta_upper),
            SignBranch::Negative => (self.delta_upper, self.delta_lower),
        }
    }
}

/// Which side of the funnel the error started on. Fixed at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignBranch {
    Positive,
    Negative,
}

impl SignBranch {
    pub fn from_initial_error(e0: f64) -> Self {
        if e0 >= 0.0 {
            SignBranch::Positive
        } else {
            SignBranch::Negative
        }
    }
}

fn admissible(e: f64, rho: f64, p: &PpfParams, branch: SignBranch) -> Result<(f64, f64, f64), FunnelViolation> {
    let (lower, upper) = p.interval(branch);
    let u = e / rho;
    if u > -lower && u < upper {
        Ok((u, lower, upper))
    } else {
        Err(FunnelViolation { ratio: u, lower: -lower, upper })
    }
}

/// `ε = ½·ln[(δ̲ + e/ρ)/(δ̄ − e/ρ)]` (roles of the shape constants swap on
/// the negative branch).
pub fn transform_error(e: f64, rho: f64, p: &PpfParams, branch: SignBranch) -> Result<f64, FunnelViolation> {
    let (u, lower, upper) = admissible(e, rho, p, branch)?;
    Ok(0.5 * ((lower + u) / (upper - u)).ln())
}

/// The smooth increasing map `F(ε)` back onto the normalized interval.
///
/// Evaluated as `(δ̄−δ̲)/2 + (δ̄+δ̲)/2·tanh(ε)`, which is algebraically the
/// exponential ratio but cannot overflow.
pub fn inverse_transform(eps: f64, p: &PpfParams, branch: SignBranch) -> f64 {
    let (lower, upper) = p.interval(branch);
    0.5 * (upper - lower) + 0.5 * (upper + lower) * eps.tanh()
}

/// `r = (1/(2ρ))·(1/(δ̲ + e/ρ) + 1/(δ̄ − e/ρ))`
pub fn r_factor(e: f64, rho: f64, p: &PpfParams, branch: SignBranch) -> Result<f64, FunnelViolation> {
    let (u, lower, upper) = admissible(e, rho, p, branch)?;
    Ok(r_at_ratio(u, rho, lower, upper))
}

fn r_at_ratio(u: f64, rho: f64, lower: f64, upper: f64) -> f64 {
    (1.0 / (2.0 * rho)) * (1.0 / (lower + u) + 1.0 / (upper - u))
}

/// Signed distance of `e` to the nearer funnel edge; positive inside.
pub fn funnel_margin(e: f64, rho: f64, p: &PpfParams, branch: SignBranch) -> f64 {
    let (lower, upper) = p.interval(branch);
    (upper * rho - e).min(e + lower * rho)
}

/// Transformed-error chain of one output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelChain {
    /// `ε¹ … ε^{M}`.
    pub eps: Vec<f64>,
    pub r: f64,
}

impl ChannelChain {
    /// `[ε¹, …, ε^{M−1}]`
    pub fn phi1(&self) -> &[f64] {
        &self.eps[..self.eps.len() - 1]
    }

    /// `[ε², …, ε^{M}]`
    pub fn phi2(&self) -> &[f64] {
        &self.eps[1..]
    }
}

/// Transformed errors of one channel from its error derivatives
/// `e¹ … e^{M}`.
///
/// `ε¹` is the exact transform. Higher orders use the dominant-term chain
/// `ε^{m+1} = r·(e^{m+1} − e^m·ρ̇/ρ)`; derivatives of `r` and `ρ/ρ̇` beyond
/// the first are dropped. For `m = 1` this is the exact derivative of `ε¹`.
pub fn epsilon_chain(
    e_derivs: &[f64],
    rho: f64,
    rho_dot: f64,
    p: &PpfParams,
    branch: SignBranch,
) -> Result<ChannelChain, FunnelViolation> {
    assert!(!e_derivs.is_empty(), "need at least the zeroth-order error");
    let (u, lower, upper) = admissible(e_derivs[0], rho, p, branch)?;
    let r = r_at_ratio(u, rho, lower, upper);
    let mut eps = Vec::with_capacity(e_derivs.len());
    eps.push(0.5 * ((lower + u) / (upper - u)).ln());
    let decay_ratio = rho_dot / rho;
    for w in e_derivs.windows(2) {
        eps.push(r * (w[1] - w[0] * decay_ratio));
    }
    Ok(ChannelChain { eps, r })
}
