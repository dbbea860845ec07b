//! Sufficient gain condition, Sylvester positivity test of the 4×4 stability
//! matrix `H`, residual-set radius η and the escape-time estimate T₀.
//!
//! The check is advisory. The bound on `c` is sufficient, not necessary, and
//! a scenario may run with gains that violate it.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ControllerParams, FilterContext};
use crate::graph::{GraphQuantities, SigmaBounds};
use crate::linalg;
use crate::ppf::{PpfParams, SignBranch};

/// User-supplied bounds on quantities the controller never measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainCheckInputs {
    /// Bound on `‖x‖∞`.
    pub x_m: f64,
    pub theta_m: f64,
    pub omega_m: f64,
    /// Bound on the leader's top-order dynamics.
    pub f_m: f64,
    /// Bound on σ̄(Δ); zero under the vanishing-Δ treatment.
    pub delta_sigma: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// Bracket `[r_min, r_max]` over the admissible funnel region.
///
/// `r_min` is taken at `e = 0` on the widest funnel (`ρ = ρ₀`); `r_max` at
/// `|e/ρ| = 0.99·min(δ̄, δ̲)` on the narrowest (`ρ = ρ∞`).
pub fn r_bounds(params: &[PpfParams]) -> (f64, f64) {
    let mut r_min = f64::INFINITY;
    let mut r_max = 0.0_f64;
    for p in params {
        let centre = (1.0 / (2.0 * p.rho0)) * (1.0 / p.delta_lower + 1.0 / p.delta_upper);
        r_min = r_min.min(centre);
        let u = 0.99 * p.delta_upper.min(p.delta_lower);
        for branch in [SignBranch::Positive, SignBranch::Negative] {
            let (lower, upper) = p.interval(branch);
            for ratio in [u, -u] {
                let r = (1.0 / (2.0 * p.rho_inf)) * (1.0 / (lower + ratio) + 1.0 / (upper - ratio));
                r_max = r_max.max(r);
            }
        }
    }
    (r_min, r_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainReport {
    pub c_required: f64,
    pub c_given: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub g: f64,
    pub nu: f64,
    pub mu: f64,
    #[serde(rename = "H")]
    pub h: [[f64; 4]; 4],
    pub leading_minors: [f64; 4],
    pub sylvester_ok: bool,
    pub eta: f64,
    /// Absent when the initial Lyapunov value is unknown.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0_estimate: Option<f64>,
    pub feasible: bool,
    pub r_min: f64,
    pub r_max: f64,
    pub sigma_max_adjacency: f64,
    pub sigma_max_m_weights: f64,
    pub sigma_min_degree_plus_pinning: f64,
    pub sigma_min_q: f64,
    pub sigma_max_pinned: f64,
    pub sigma_max_lyapunov: f64,
    pub lambda_bar_norm: f64,
    pub companion_frobenius: f64,
}

/// The stability matrix of the Lyapunov-derivative bound.
pub fn h_matrix(beta: f64, k: f64, g: f64, gamma1: f64, gamma2: f64, mu: f64) -> [[f64; 4]; 4] {
    [
        [0.5 * beta, 0.0, 0.0, g],
        [0.0, k, 0.0, gamma1],
        [0.0, 0.0, k, gamma2],
        [g, gamma1, gamma2, mu],
    ]
}

fn leading_minors(h: &[[f64; 4]; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (size, minor) in out.iter_mut().enumerate() {
        let n = size + 1;
        *minor = DMatrix::from_fn(n, n, |i, j| h[i][j]).determinant();
    }
    out
}

pub fn gain_check(
    gq: &GraphQuantities,
    inputs: &GainCheckInputs,
    params: &ControllerParams,
    filter: &FilterContext,
    initial_lyapunov: Option<f64>,
) -> GainReport {
    let SigmaBounds {
        adjacency_max,
        m_weights_max,
        degree_plus_pinning_min,
        script_q_min,
        pinned_max,
        ..
    } = gq.bounds;
    let lambda_bar_norm = linalg::norm2(&filter.lambda_bar);
    let companion_frobenius = filter.companion.norm();
    let sigma_max_lyapunov = if filter.lyapunov.nrows() > 0 {
        linalg::max_singular_value(&filter.lyapunov)
    } else {
        0.0
    };
    let (beta, k, c) = (params.beta, params.k, params.c);

    // magnitudes; only squares and the cross-term size enter H's minors
    let gamma1 = 0.5 * m_weights_max * inputs.r_max * adjacency_max * inputs.x_m;
    let gamma2 = 0.5 * m_weights_max * inputs.r_max * adjacency_max;
    let coupling = m_weights_max * adjacency_max / degree_plus_pinning_min;
    let g = 0.5 * (sigma_max_lyapunov + coupling * companion_frobenius * lambda_bar_norm);
    let nu = coupling * lambda_bar_norm;
    let mu = c * inputs.r_min * script_q_min - nu;

    let h = h_matrix(beta, k, g, gamma1, gamma2, mu);
    let minors = leading_minors(&h);
    let sylvester_ok = minors.iter().all(|&m| m > 0.0);
    let c_required = ((gamma1 * gamma1 + gamma2 * gamma2) / k + 2.0 * g * g / beta + nu)
        / (script_q_min * inputs.r_min);

    let h_sigma_min = linalg::min_singular_value(&DMatrix::from_fn(4, 4, |i, j| h[i][j]));
    let eta_numerator = k * inputs.theta_m
        + k * inputs.omega_m
        + m_weights_max * (inputs.delta_sigma + inputs.r_max * pinned_max * inputs.f_m);
    let eta = if h_sigma_min > 0.0 { eta_numerator / h_sigma_min } else { f64::INFINITY };

    let t0_estimate = initial_lyapunov.map(|v0| {
        let gamma1_min = params.gamma1.iter().copied().fold(f64::INFINITY, f64::min);
        let gamma2_min = params.gamma2.iter().copied().fold(f64::INFINITY, f64::min);
        let x_upper = [sigma_max_lyapunov, 1.0 / gamma1_min, 1.0 / gamma2_min, m_weights_max]
            .into_iter()
            .fold(0.0, f64::max);
        ((v0 - x_upper * eta * eta) / k).max(0.0)
    });

    GainReport {
        c_required,
        c_given: c,
        gamma1,
        gamma2,
        g,
        nu,
        mu,
        h,
        leading_minors: minors,
        sylvester_ok,
        eta,
        t0_estimate,
        feasible: c > c_required && sylvester_ok,
        r_min: inputs.r_min,
        r_max: inputs.r_max,
        sigma_max_adjacency: adjacency_max,
        sigma_max_m_weights: m_weights_max,
        sigma_min_degree_plus_pinning: degree_plus_pinning_min,
        sigma_min_q: script_q_min,
        sigma_max_pinned: pinned_max,
        sigma_max_lyapunov,
        lambda_bar_norm,
        companion_frobenius,
    }
}
