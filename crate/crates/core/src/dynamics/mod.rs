//! Agent and leader models, the two benchmark suites and the neighbourhood
//! synchronization error.
//!
//! Agent state layout is order-major: entry `(m−1)·P + p` holds `x^m` of
//! channel `p` (both zero-based in code). A second-order two-channel agent
//! is therefore stored as `[pos₁, pos₂, vel₁, vel₂]`.

mod examples;
mod inline;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::ExprError;
use crate::graph::DirectedGraph;

pub use examples::{
    example1_suite, example2_suite, example2_velocities, suite_by_name, Example1Agent, Example2Agent,
    ModelSuite, ScenarioDefaults,
};
pub use inline::{InlineAgentSpec, InlineLeaderSpec, InlineModelSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("agent {agent} has order {order} and {channels} channels; the network needs {expected_order} and {expected_channels}")]
    InconsistentAgents {
        agent: usize,
        order: usize,
        channels: usize,
        expected_order: usize,
        expected_channels: usize,
    },
    #[error("input matrix is singular")]
    SingularInputMatrix,
    #[error("leader trajectory derivative of order {order}, channel {channel} disagrees with finite differences at t = {t} (analytic {analytic}, numeric {numeric})")]
    InconsistentTrajectory { order: usize, channel: usize, t: f64, analytic: f64, numeric: f64 },
    #[error(transparent)]
    Expression(#[from] ExprError),
    #[error("invalid inline model: {0}")]
    InvalidModel(String),
}

/// True parameter values used only by the Lyapunov monitor.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
}

/// Plant of one follower: an integrator chain of length `order` per channel
/// whose top derivative is `f(x, t) + G·u`.
pub trait AgentModel: Send + Sync + fmt::Debug {
    fn order(&self) -> usize;
    fn channels(&self) -> usize;
    /// Top-order drift `f(x, t)`, written into `out` (length `channels`).
    fn drift(&self, x: &[f64], t: f64, out: &mut [f64]);
    fn input_matrix(&self) -> &DMatrix<f64>;

    /// Linear-in-parameters split of the drift for the Lyapunov monitor.
    /// The default takes `θ = 0` and lumps everything into `ω = f(x, t)`.
    fn ground_truth(&self, x: &[f64], t: f64) -> Option<GroundTruth> {
        let mut f = vec![0.0; self.channels()];
        self.drift(x, t, &mut f);
        Some(GroundTruth { theta: vec![0.0; self.channels()], omega: f })
    }

    fn state_len(&self) -> usize {
        self.order() * self.channels()
    }
}

/// A model given by a closure; the monitor has no parameter split for it.
pub struct CustomAgent {
    order: usize,
    channels: usize,
    g: DMatrix<f64>,
    f: Box<dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync>,
}

impl CustomAgent {
    pub fn new<F>(order: usize, channels: usize, g: DMatrix<f64>, f: F) -> Result<Self, DynamicsError>
    where
        F: Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    {
        check_input_matrix(&g, channels)?;
        Ok(CustomAgent { order, channels, g, f: Box::new(f) })
    }
}

impl fmt::Debug for CustomAgent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomAgent")
            .field("order", &self.order)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl AgentModel for CustomAgent {
    fn order(&self) -> usize {
        self.order
    }
    fn channels(&self) -> usize {
        self.channels
    }
    fn drift(&self, x: &[f64], t: f64, out: &mut [f64]) {
        (self.f)(x, t, out)
    }
    fn input_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
    fn ground_truth(&self, _x: &[f64], _t: f64) -> Option<GroundTruth> {
        None
    }
}

pub(crate) fn check_input_matrix(g: &DMatrix<f64>, channels: usize) -> Result<(), DynamicsError> {
    if g.nrows() != channels || g.ncols() != channels {
        return Err(DynamicsError::DimensionMismatch { expected: channels * channels, got: g.len() });
    }
    let det = g.determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(DynamicsError::SingularInputMatrix);
    }
    Ok(())
}

/// Top-order field of a leader given in state-space form.
pub trait LeaderField: Send + Sync + fmt::Debug {
    fn top(&self, x0: &[f64], t: f64, out: &mut [f64]);
}

/// Leader given as an explicit signal. `derivatives` fills orders
/// `0..=order` (order-major, `channels` entries each).
pub trait LeaderTrajectory: Send + Sync + fmt::Debug {
    fn derivatives(&self, t: f64, out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub enum LeaderModel {
    Field { order: usize, channels: usize, field: Arc<dyn LeaderField>, initial: Vec<f64> },
    Trajectory { order: usize, channels: usize, trajectory: Arc<dyn LeaderTrajectory> },
}

impl LeaderModel {
    pub fn order(&self) -> usize {
        match self {
            LeaderModel::Field { order, .. } | LeaderModel::Trajectory { order, .. } => *order,
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            LeaderModel::Field { channels, .. } | LeaderModel::Trajectory { channels, .. } => *channels,
        }
    }

    pub fn is_field(&self) -> bool {
        matches!(self, LeaderModel::Field { .. })
    }

    /// Leader state `[x₀¹ … x₀^M]` at time `t`. For the field form the
    /// integrated state is passed in `integrated`.
    pub fn state(&self, t: f64, integrated: &[f64]) -> Vec<f64> {
        match self {
            LeaderModel::Field { .. } => integrated.to_vec(),
            LeaderModel::Trajectory { order, channels, trajectory } => {
                let mut all = vec![0.0; (order + 1) * channels];
                trajectory.derivatives(t, &mut all);
                all.truncate(order * channels);
                all
            }
        }
    }

    /// State derivative of the field form (chain plus top-order field).
    pub fn field_derivative(&self, x0: &[f64], t: f64, out: &mut [f64]) {
        if let LeaderModel::Field { order, channels, field, .. } = self {
            let p = *channels;
            let n = order * p;
            out[..n - p].copy_from_slice(&x0[p..n]);
            field.top(x0, t, &mut out[n - p..n]);
        }
    }

    /// Highest derivative `x₀^{(M)}` at `t`, used for the `f_M` bound.
    pub fn top_derivative(&self, t: f64, x0: &[f64]) -> Vec<f64> {
        match self {
            LeaderModel::Field { channels, field, .. } => {
                let mut out = vec![0.0; *channels];
                field.top(x0, t, &mut out);
                out
            }
            LeaderModel::Trajectory { order, channels, trajectory } => {
                let mut all = vec![0.0; (order + 1) * channels];
                trajectory.derivatives(t, &mut all);
                all[order * channels..].to_vec()
            }
        }
    }

    /// Compare the trajectory's analytic derivatives with central
    /// differences at `times`; relative tolerance `1e-4`.
    pub fn check_trajectory(&self, times: &[f64]) -> Result<(), DynamicsError> {
        let LeaderModel::Trajectory { order, channels, trajectory } = self else {
            return Ok(());
        };
        let (m, p) = (*order, *channels);
        let h = 1e-5;
        let mut plus = vec![0.0; (m + 1) * p];
        let mut minus = plus.clone();
        let mut centre = plus.clone();
        for &t in times {
            trajectory.derivatives(t + h, &mut plus);
            trajectory.derivatives(t - h, &mut minus);
            trajectory.derivatives(t, &mut centre);
            for k in 0..m {
                for ch in 0..p {
                    let numeric = (plus[k * p + ch] - minus[k * p + ch]) / (2.0 * h);
                    let analytic = centre[(k + 1) * p + ch];
                    if (numeric - analytic).abs() > 1e-4 * analytic.abs().max(1.0) {
                        return Err(DynamicsError::InconsistentTrajectory {
                            order: k + 1,
                            channel: ch + 1,
                            t,
                            analytic,
                            numeric,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// State derivative of one agent: `ẋ^m = x^{m+1}`, `ẋ^M = f(x,t) + G·u`.
pub fn eval_agent_field(
    model: &dyn AgentModel,
    x: &[f64],
    t: f64,
    u: &[f64],
    out: &mut [f64],
) -> Result<(), DynamicsError> {
    let p = model.channels();
    let n = model.state_len();
    for (len, expected) in [(x.len(), n), (out.len(), n), (u.len(), p)] {
        if len != expected {
            return Err(DynamicsError::DimensionMismatch { expected, got: len });
        }
    }
    out[..n - p].copy_from_slice(&x[p..]);
    let top = &mut out[n - p..];
    model.drift(x, t, top);
    let g = model.input_matrix();
    for (row, slot) in top.iter_mut().enumerate() {
        *slot += (0..p).map(|col| g[(row, col)] * u[col]).sum::<f64>();
    }
    Ok(())
}

/// Neighbourhood synchronization errors, same layout as the agent states.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncError {
    pub order: usize,
    pub channels: usize,
    pub e: Vec<Vec<f64>>,
}

impl SyncError {
    /// `e^{m}` for `m = 1..=order` of one channel (zero-based arguments).
    pub fn chain(&self, agent: usize, channel: usize) -> Vec<f64> {
        (0..self.order).map(|m| self.e[agent][m * self.channels + channel]).collect()
    }

    pub fn get(&self, agent: usize, channel: usize, order: usize) -> f64 {
        self.e[agent][order * self.channels + channel]
    }

    /// Euclidean norm of all first-order errors.
    pub fn output_norm(&self) -> f64 {
        self.e
            .iter()
            .flat_map(|ei| ei[..self.channels].iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// `eᵢ = Σⱼ aᵢⱼ(xᵢ − xⱼ) + bᵢ(xᵢ − x₀)` for every order and channel.
pub fn sync_error(
    states: &[Vec<f64>],
    leader: &[f64],
    graph: &DirectedGraph,
    order: usize,
    channels: usize,
) -> Result<SyncError, DynamicsError> {
    let n = graph.len();
    let len = order * channels;
    if states.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: states.len() });
    }
    if leader.len() != len {
        return Err(DynamicsError::DimensionMismatch { expected: len, got: leader.len() });
    }
    if let Some(bad) = states.iter().find(|s| s.len() != len) {
        return Err(DynamicsError::DimensionMismatch { expected: len, got: bad.len() });
    }
    let pinning = graph.pinning();
    let e = (0..n)
        .map(|i| {
            (0..len)
                .map(|k| {
                    let xi = states[i][k];
                    let neighbours: f64 = (0..n).map(|j| graph.weight(i, j) * (xi - states[j][k])).sum();
                    neighbours + pinning[i] * (xi - leader[k])
                })
                .collect()
        })
        .collect();
    let out = SyncError { order, channels, e };
    debug_assert!({
        let global = sync_error_global(states, leader, graph);
        out.e.iter().flatten().zip(global.iter()).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()))
    });
    Ok(out)
}

/// Global form `((L+B) ⊗ I)(x − 1 ⊗ x₀)`, stacked agent by agent.
pub fn sync_error_global(states: &[Vec<f64>], leader: &[f64], graph: &DirectedGraph) -> Vec<f64> {
    let len = leader.len();
    let n = states.len();
    let stacked = DVector::from_iterator(
        n * len,
        states.iter().flat_map(|s| s.iter().zip(leader).map(|(x, x0)| x - x0)),
    );
    let kron = graph.pinned_laplacian().kronecker(&DMatrix::<f64>::identity(len, len));
    (kron * stacked).iter().copied().collect()
}

/// `‖xᵢ‖∞` over the whole agent state.
pub fn state_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Free {
        g: DMatrix<f64>,
    }

    impl AgentModel for Free {
        fn order(&self) -> usize {
            2
        }
        fn channels(&self) -> usize {
            1
        }
        fn drift(&self, _x: &[f64], _t: f64, out: &mut [f64]) {
            out.fill(0.0);
        }
        fn input_matrix(&self) -> &DMatrix<f64> {
            &self.g
        }
    }

    #[test]
    fn pure_chain() {
        let m = Free { g: DMatrix::identity(1, 1) };
        let mut out = [0.0; 2];
        eval_agent_field(&m, &[1.0, 2.0], 0.0, &[0.0], &mut out).unwrap();
        assert_eq!(out, [2.0, 0.0]);
        eval_agent_field(&m, &[1.0, 2.0], 0.0, &[3.0], &mut out).unwrap();
        assert_eq!(out, [2.0, 3.0]);
    }

    #[test]
    fn field_dimension_mismatch() {
        let m = Free { g: DMatrix::identity(1, 1) };
        let mut out = [0.0; 2];
        assert!(matches!(
            eval_agent_field(&m, &[1.0, 2.0, 3.0], 0.0, &[0.0], &mut out),
            Err(DynamicsError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn custom_agent_has_no_ground_truth() {
        let m = CustomAgent::new(1, 1, DMatrix::identity(1, 1), |_, _, out| out[0] = 1.0).unwrap();
        assert!(m.ground_truth(&[0.0], 0.0).is_none());
        assert!(matches!(
            CustomAgent::new(1, 2, DMatrix::zeros(2, 2), |_, _, _| {}),
            Err(DynamicsError::SingularInputMatrix)
        ));
    }

    #[test]
    fn agents_at_leader_have_zero_error() {
        let g = DirectedGraph::default_five_node();
        let x0 = vec![0.3, -0.1, 2.0];
        let states = vec![x0.clone(); 5];
        let e = sync_error(&states, &x0, &g, 3, 1).unwrap();
        assert!(e.e.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pinned_agent() {
        let g = DirectedGraph::new(&[vec![0.0]], &[1.0]).unwrap();
        let e = sync_error(&[vec![1.5, -2.0]], &[0.5, 1.0], &g, 2, 1).unwrap();
        assert_eq!(e.e[0], vec![1.0, -3.0]);
    }

    #[test]
    fn ring_matches_explicit_product() {
        let g = DirectedGraph::default_five_node();
        let states: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, (i * i) as f64 * 0.5]).collect();
        let leader = [0.25, -1.0];
        let e = sync_error(&states, &leader, &g, 1, 2).unwrap();
        let lb = g.pinned_laplacian();
        for i in 0..5 {
            for k in 0..2 {
                let expected: f64 = (0..5).map(|j| lb[(i, j)] * (states[j][k] - leader[k])).sum();
                assert!((e.e[i][k] - expected).abs() <= 1e-12);
            }
        }
        assert_eq!(e.chain(2, 1), vec![e.get(2, 1, 0)]);
    }

    #[test]
    fn wrong_state_count() {
        let g = DirectedGraph::default_five_node();
        assert!(matches!(
            sync_error(&[vec![0.0]], &[0.0], &g, 1, 1),
            Err(DynamicsError::DimensionMismatch { expected: 5, got: 1 })
        ));
    }
}
