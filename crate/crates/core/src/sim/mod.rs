//! Closed-loop assembly, fixed-step integration and run bookkeeping.
//!
//! The integrated vector is flat: all agent states, then the leader state
//! when the leader is given as a vector field, then every `θ̂`, then every
//! `ω̂` (agent-major, channel-minor).

mod integrator;
mod output;
mod trace;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{
    adaptive_update, control_input, gain_check, lyapunov_diagnostic, metric_error, r_bounds,
    AdaptiveGains, AdaptiveSignals, ControllerError, ControllerParams, FilterContext,
    GainCheckInputs, GainReport, LocalControlContext, LyapunovInputs,
};
use crate::dynamics::{
    eval_agent_field, state_norm, sync_error, AgentModel, DynamicsError, LeaderModel, ModelSuite,
    SyncError,
};
use crate::error::ErrorCategory;
use crate::graph::{DirectedGraph, GraphError, GraphQuantities, QRule};
use crate::ppf::{epsilon_chain, funnel_margin, ChannelChain, PpfParamError, PpfParams, SignBranch};

pub use integrator::{rk4_step, rk4_step_from};
pub use output::{format_number, summary_toml, trace_header, write_trace_csv};
pub use trace::{summarize, SummaryReport, Trace, TraceSample, ViolationReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("funnel violated at t = {t} (agent {agent}, channel {channel}{}): e/ρ = {ratio} outside ({lower}, {upper})",
        stage.map(|s| format!(", integrator stage {s}")).unwrap_or_default())]
    FunnelViolation {
        t: f64,
        agent: usize,
        channel: usize,
        stage: Option<usize>,
        ratio: f64,
        lower: f64,
        upper: f64,
    },
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("invalid simulation setting `{name}` = {value}")]
    InvalidSetting { name: &'static str, value: f64 },
    #[error("scenario has {agents} agents, {states} initial states and a {nodes}-node graph")]
    AgentCount { agents: usize, states: usize, nodes: usize },
    #[error("funnel parameters for agent {agent}: {source}")]
    Ppf { agent: usize, source: PpfParamError },
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl SimError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            SimError::FunnelViolation { .. } => ErrorCategory::FunnelViolation,
            SimError::NonFiniteState { .. } | SimError::EmptyTrace => ErrorCategory::Numerical,
            SimError::InvalidSetting { .. } | SimError::AgentCount { .. } | SimError::Ppf { .. } => {
                ErrorCategory::Config
            }
            SimError::Controller(e) => e.category(),
            SimError::Dynamics(_) => ErrorCategory::Model,
            SimError::Graph(_) => ErrorCategory::Graph,
        }
    }

    fn with_stage(self, stage: usize) -> Self {
        match self {
            SimError::FunnelViolation { t, agent, channel, ratio, lower, upper, .. } => {
                SimError::FunnelViolation { t, agent, channel, stage: Some(stage), ratio, lower, upper }
            }
            other => other,
        }
    }
}

/// Bounds on signals the controller never measures; they only feed the
/// advisory gain check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBounds {
    #[serde(rename = "x_M")]
    pub x_m: f64,
    #[serde(rename = "theta_M")]
    pub theta_m: f64,
    #[serde(rename = "omega_M")]
    pub omega_m: f64,
    #[serde(rename = "f_M")]
    pub f_m: f64,
}

impl Default for ModelBounds {
    fn default() -> Self {
        ModelBounds { x_m: 1.0, theta_m: 1.0, omega_m: 10.0, f_m: 10.0 }
    }
}

/// Everything needed to simulate one network.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: DirectedGraph,
    pub q_rule: QRule,
    pub agents: Vec<Arc<dyn AgentModel>>,
    pub leader: LeaderModel,
    pub initial_states: Vec<Vec<f64>>,
    /// Funnel parameters, `[agent][channel]`.
    pub ppf: Vec<Vec<PpfParams>>,
    pub controller: ControllerParams,
    pub bounds: ModelBounds,
    /// Step size in seconds.
    pub h: f64,
    /// Horizon in seconds.
    pub horizon: f64,
    /// Record every `decimate`-th step.
    pub decimate: usize,
    /// Settling band is `ρ∞·(1 + settle_margin)`.
    pub settle_margin: f64,
}

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 20.0;
pub const DEFAULT_SETTLE_MARGIN: f64 = 0.5;
pub const DEFAULT_LAMBDA: f64 = 2.0;
pub const DEFAULT_BETA: f64 = 1.0;

impl Scenario {
    /// A suite on a graph with the suite's own tuning and default settings.
    pub fn from_suite(suite: ModelSuite, graph: DirectedGraph) -> Self {
        let n = suite.agents.len();
        let p = suite.channels();
        let d = &suite.defaults;
        Scenario {
            graph,
            q_rule: QRule::default(),
            ppf: vec![vec![d.ppf; p]; n],
            controller: ControllerParams {
                c: d.c,
                k: d.k,
                gamma1: vec![d.gamma1; n],
                gamma2: vec![d.gamma2; n],
                lambda: DEFAULT_LAMBDA,
                beta: DEFAULT_BETA,
            },
            agents: suite.agents,
            leader: suite.leader,
            initial_states: suite.initial_states,
            bounds: ModelBounds::default(),
            h: DEFAULT_STEP,
            horizon: DEFAULT_HORIZON,
            decimate: 1,
            settle_margin: DEFAULT_SETTLE_MARGIN,
        }
    }

    pub fn order(&self) -> usize {
        self.leader.order()
    }

    pub fn channels(&self) -> usize {
        self.leader.channels()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(SimError::InvalidSetting { name: "h", value: self.h });
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(SimError::InvalidSetting { name: "T", value: self.horizon });
        }
        if self.decimate == 0 {
            return Err(SimError::InvalidSetting { name: "decimate", value: 0.0 });
        }
        if !(self.settle_margin >= 0.0) {
            return Err(SimError::InvalidSetting { name: "settle_margin", value: self.settle_margin });
        }
        let n = self.graph.len();
        if self.agents.len() != n || self.initial_states.len() != n {
            return Err(SimError::AgentCount {
                agents: self.agents.len(),
                states: self.initial_states.len(),
                nodes: n,
            });
        }
        let (order, channels) = (self.order(), self.channels());
        for (i, a) in self.agents.iter().enumerate() {
            if a.order() != order || a.channels() != channels {
                return Err(DynamicsError::InconsistentAgents {
                    agent: i + 1,
                    order: a.order(),
                    channels: a.channels(),
                    expected_order: order,
                    expected_channels: channels,
                }
                .into());
            }
            if self.initial_states[i].len() != order * channels {
                return Err(DynamicsError::DimensionMismatch {
                    expected: order * channels,
                    got: self.initial_states[i].len(),
                }
                .into());
            }
        }
        if let LeaderModel::Field { initial, .. } = &self.leader {
            if initial.len() != order * channels {
                return Err(DynamicsError::DimensionMismatch { expected: order * channels, got: initial.len() }
                    .into());
            }
        }
        if self.ppf.len() != n {
            return Err(DynamicsError::DimensionMismatch { expected: n, got: self.ppf.len() }.into());
        }
        for (i, row) in self.ppf.iter().enumerate() {
            if row.len() != channels {
                return Err(DynamicsError::DimensionMismatch { expected: channels, got: row.len() }.into());
            }
            for p in row {
                p.validate().map_err(|source| SimError::Ppf { agent: i + 1, source })?;
            }
        }
        self.controller.validate()?;
        if self.controller.gamma1.len() != n || self.controller.gamma2.len() != n {
            return Err(ControllerError::DimensionMismatch.into());
        }
        Ok(())
    }

    fn leader_initial(&self) -> Vec<f64> {
        match &self.leader {
            LeaderModel::Field { initial, .. } => initial.clone(),
            LeaderModel::Trajectory { .. } => self.leader.state(0.0, &[]),
        }
    }
}

/// Controller-side signals of every agent at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Signals {
    pub t: f64,
    pub leader: Vec<f64>,
    pub sync: SyncError,
    /// `[agent][channel]`
    pub rho: Vec<Vec<f64>>,
    pub chains: Vec<Vec<ChannelChain>>,
    pub metric: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
}

/// The assembled plant, controller and adaptive laws.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    scenario: Scenario,
    graph: GraphQuantities,
    filter: FilterContext,
    branches: Vec<Vec<SignBranch>>,
    state_len: usize,
    leader_len: usize,
}

/// Validate a scenario and build its vector field.
pub fn assemble_closed_loop(scenario: &Scenario) -> Result<ClosedLoop, SimError> {
    scenario.validate()?;
    let graph = scenario.graph.quantities(scenario.q_rule)?;
    let filter = FilterContext::binomial(scenario.controller.lambda, scenario.order(), scenario.controller.beta)?;
    let (order, channels) = (scenario.order(), scenario.channels());
    let e0 = sync_error(&scenario.initial_states, &scenario.leader_initial(), &scenario.graph, order, channels)?;
    let branches = (0..scenario.graph.len())
        .map(|i| (0..channels).map(|p| SignBranch::from_initial_error(e0.get(i, p, 0))).collect())
        .collect();
    Ok(ClosedLoop {
        scenario: scenario.clone(),
        graph,
        filter,
        branches,
        state_len: order * channels,
        leader_len: if scenario.leader.is_field() { order * channels } else { 0 },
    })
}

impl ClosedLoop {
    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn graph_quantities(&self) -> &GraphQuantities {
        &self.graph
    }

    pub fn filter(&self) -> &FilterContext {
        &self.filter
    }

    pub fn branches(&self) -> &[Vec<SignBranch>] {
        &self.branches
    }

    fn agents(&self) -> usize {
        self.scenario.agents.len()
    }

    fn channels(&self) -> usize {
        self.scenario.channels()
    }

    fn theta_offset(&self) -> usize {
        self.agents() * self.state_len + self.leader_len
    }

    fn omega_offset(&self) -> usize {
        self.theta_offset() + self.agents() * self.channels()
    }

    pub fn dimension(&self) -> usize {
        self.omega_offset() + self.agents() * self.channels()
    }

    /// Flat initial vector with zero estimates.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(self.dimension());
        for x in &self.scenario.initial_states {
            y.extend_from_slice(x);
        }
        if let LeaderModel::Field { initial, .. } = &self.scenario.leader {
            y.extend_from_slice(initial);
        }
        y.resize(self.dimension(), 0.0);
        y
    }

    pub fn agent_state<'a>(&self, y: &'a [f64], i: usize) -> &'a [f64] {
        &y[i * self.state_len..(i + 1) * self.state_len]
    }

    pub fn leader_state(&self, y: &[f64], t: f64) -> Vec<f64> {
        let start = self.agents() * self.state_len;
        self.scenario.leader.state(t, &y[start..start + self.leader_len])
    }

    pub fn theta_hat<'a>(&self, y: &'a [f64], i: usize) -> &'a [f64] {
        let p = self.channels();
        let o = self.theta_offset() + i * p;
        &y[o..o + p]
    }

    pub fn omega_hat<'a>(&self, y: &'a [f64], i: usize) -> &'a [f64] {
        let p = self.channels();
        let o = self.omega_offset() + i * p;
        &y[o..o + p]
    }

    /// Steps 2 through 7: synchronization error, funnels, transformed
    /// errors, metric errors and inputs.
    pub fn signals(&self, t: f64, y: &[f64]) -> Result<Signals, SimError> {
        let sc = &self.scenario;
        let (n, p, order) = (self.agents(), self.channels(), sc.order());
        let states: Vec<Vec<f64>> = (0..n).map(|i| self.agent_state(y, i).to_vec()).collect();
        let leader = self.leader_state(y, t);
        let sync = sync_error(&states, &leader, &sc.graph, order, p)?;
        let mut rho = Vec::with_capacity(n);
        let mut chains = Vec::with_capacity(n);
        let mut metric = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        for i in 0..n {
            let mut rho_i = Vec::with_capacity(p);
            let mut chains_i = Vec::with_capacity(p);
            for ch in 0..p {
                let params = &sc.ppf[i][ch];
                let r = params.value(t);
                let chain = epsilon_chain(&sync.chain(i, ch), r, params.derivative(t), params, self.branches[i][ch])
                    .map_err(|v| SimError::FunnelViolation {
                        t,
                        agent: i + 1,
                        channel: ch + 1,
                        stage: None,
                        ratio: v.ratio,
                        lower: v.lower,
                        upper: v.upper,
                    })?;
                rho_i.push(r);
                chains_i.push(chain);
            }
            let metric_i: Vec<f64> =
                chains_i.iter().map(|c| metric_error(&c.eps, &self.filter.lambda_bar)).collect();
            let ctx = LocalControlContext {
                metric_error: &metric_i,
                chains: &chains_i,
                degree_plus_pinning: self.graph.degree_plus_pinning[i],
                input_matrix: sc.agents[i].input_matrix(),
                theta_hat: self.theta_hat(y, i),
                omega_hat: self.omega_hat(y, i),
                state_norm: state_norm(&states[i]),
            };
            u.push(control_input(&ctx, sc.controller.c, &self.filter.lambda_bar)?);
            rho.push(rho_i);
            chains.push(chains_i);
            metric.push(metric_i);
        }
        Ok(Signals { t, leader, sync, rho, chains, metric, u })
    }

    /// Step 8 and the plant: stack every time derivative.
    pub fn derivative_from(&self, t: f64, y: &[f64], s: &Signals) -> Result<Vec<f64>, SimError> {
        let sc = &self.scenario;
        let (n, p) = (self.agents(), self.channels());
        let mut dy = vec![0.0; self.dimension()];
        for i in 0..n {
            let x = self.agent_state(y, i);
            let slot = &mut dy[i * self.state_len..(i + 1) * self.state_len];
            eval_agent_field(sc.agents[i].as_ref(), x, t, &s.u[i], slot)?;
        }
        if self.leader_len > 0 {
            let start = n * self.state_len;
            sc.leader.field_derivative(&s.leader, t, &mut dy[start..start + self.leader_len]);
        }
        for i in 0..n {
            let r: Vec<f64> = s.chains[i].iter().map(|c| c.r).collect();
            let signals = AdaptiveSignals {
                metric_error: &s.metric[i],
                r: &r,
                m_weight: self.graph.m_weights[i],
                degree_plus_pinning: self.graph.degree_plus_pinning[i],
                state_norm: state_norm(self.agent_state(y, i)),
                theta_hat: self.theta_hat(y, i),
                omega_hat: self.omega_hat(y, i),
            };
            let gains = AdaptiveGains {
                gamma1: sc.controller.gamma1[i],
                gamma2: sc.controller.gamma2[i],
                k: sc.controller.k,
            };
            let (theta_dot, omega_dot) = adaptive_update(gains, &signals);
            let to = self.theta_offset() + i * p;
            let oo = self.omega_offset() + i * p;
            dy[to..to + p].copy_from_slice(&theta_dot);
            dy[oo..oo + p].copy_from_slice(&omega_dot);
        }
        Ok(dy)
    }

    /// Full vector field.
    pub fn derivative(&self, t: f64, y: &[f64]) -> Result<Vec<f64>, SimError> {
        let s = self.signals(t, y)?;
        self.derivative_from(t, y, &s)
    }

    /// Lyapunov candidate value; `None` when a model hides its parameters.
    pub fn lyapunov(&self, t: f64, y: &[f64], s: &Signals) -> Option<f64> {
        let n = self.agents();
        let mut theta_tilde = Vec::with_capacity(n);
        let mut omega_tilde = Vec::with_capacity(n);
        for i in 0..n {
            let truth = self.scenario.agents[i].ground_truth(self.agent_state(y, i), t)?;
            theta_tilde.push(truth.theta.iter().zip(self.theta_hat(y, i)).map(|(a, b)| a - b).collect());
            omega_tilde.push(truth.omega.iter().zip(self.omega_hat(y, i)).map(|(a, b)| a - b).collect());
        }
        let phi1: Vec<Vec<Vec<f64>>> =
            s.chains.iter().map(|ci| ci.iter().map(|c| c.phi1().to_vec()).collect()).collect();
        let terms = lyapunov_diagnostic(&LyapunovInputs {
            metric_errors: &s.metric,
            phi1: &phi1,
            theta_tilde: &theta_tilde,
            omega_tilde: &omega_tilde,
            m_weights: &self.graph.m_weights,
            gamma1: &self.scenario.controller.gamma1,
            gamma2: &self.scenario.controller.gamma2,
            lyapunov: &self.filter.lyapunov,
        });
        Some(terms.total())
    }

    /// One trace row from a state and its already computed signals.
    pub fn sample(&self, t: f64, y: &[f64], s: &Signals) -> TraceSample {
        let sc = &self.scenario;
        let (n, p) = (self.agents(), self.channels());
        let x: Vec<Vec<f64>> = (0..n).map(|i| self.agent_state(y, i).to_vec()).collect();
        let margin = (0..n)
            .map(|i| {
                (0..p)
                    .map(|ch| funnel_margin(s.sync.get(i, ch, 0), s.rho[i][ch], &sc.ppf[i][ch], self.branches[i][ch]))
                    .collect()
            })
            .collect();
        let mut disagreement = 0.0;
        for xi in &x {
            for ch in 0..p {
                disagreement += (xi[ch] - s.leader[ch]).powi(2);
            }
        }
        let bound = s.sync.output_norm() / self.graph.sigma_min_pinned;
        TraceSample {
            t,
            leader: s.leader.clone(),
            x,
            e: s.sync.e.clone(),
            rho: s.rho.clone(),
            eps: s.chains.iter().map(|ci| ci.iter().map(|c| c.eps.clone()).collect()).collect(),
            r: s.chains.iter().map(|ci| ci.iter().map(|c| c.r).collect()).collect(),
            metric: s.metric.clone(),
            u: s.u.clone(),
            theta: (0..n).map(|i| self.theta_hat(y, i).to_vec()).collect(),
            omega: (0..n).map(|i| self.omega_hat(y, i).to_vec()).collect(),
            margin,
            lyapunov: self.lyapunov(t, y, s),
            disagreement: disagreement.sqrt(),
            disagreement_bound: bound,
        }
    }

    /// Advisory gain check with `V(0)` from the initial state when the
    /// models expose their parameters.
    pub fn gain_report(&self) -> GainReport {
        let sc = &self.scenario;
        let flat: Vec<PpfParams> = sc.ppf.iter().flatten().copied().collect();
        let (r_min, r_max) = r_bounds(&flat);
        let inputs = GainCheckInputs {
            x_m: sc.bounds.x_m,
            theta_m: sc.bounds.theta_m,
            omega_m: sc.bounds.omega_m,
            f_m: sc.bounds.f_m,
            delta_sigma: 0.0,
            r_min,
            r_max,
        };
        let y0 = self.initial_state();
        let v0 = self.signals(0.0, &y0).ok().and_then(|s| self.lyapunov(0.0, &y0, &s));
        gain_check(&self.graph, &inputs, &sc.controller, &self.filter, v0)
    }
}

/// Result of a run, possibly cut short by a funnel violation.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub summary: SummaryReport,
    /// The error that ended the run early, if any.
    pub aborted: Option<SimError>,
    /// Flat state at the last completed step.
    pub final_state: Vec<f64>,
}

/// Integrate a scenario over `[0, T]`.
///
/// An abort after the first sample still returns the partial trace; the
/// summary then records the violation.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutput, SimError> {
    let lp = assemble_closed_loop(scenario)?;
    let gain = lp.gain_report();
    let h = scenario.h;
    let steps = (scenario.horizon / h).round() as usize;
    let mut trace = Trace::new(&lp);
    let mut y = lp.initial_state();
    let mut aborted = None;
    for k in 0..=steps {
        let t = k as f64 * h;
        let signals = match lp.signals(t, &y) {
            Ok(s) => s,
            Err(e) if trace.samples.is_empty() => return Err(e),
            Err(e) => {
                aborted = Some(e);
                break;
            }
        };
        if k % scenario.decimate == 0 || k == steps {
            trace.samples.push(lp.sample(t, &y, &signals));
        }
        if k == steps {
            break;
        }
        let k1 = lp.derivative_from(t, &y, &signals)?;
        match rk4_step_from(|tt, yy| lp.derivative(tt, yy), &y, t, h, k1) {
            Ok(next) => y = next,
            Err(e) => {
                log::warn!("run aborted: {e}");
                aborted = Some(e);
                break;
            }
        }
    }
    let mut summary = summarize(&trace, scenario.settle_margin)?;
    summary.gain = Some(gain);
    if let Some(e) = &aborted {
        summary.record_abort(e);
    }
    Ok(RunOutput { trace, summary, aborted, final_state: y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{example1_suite, CustomAgent};
    use nalgebra::DMatrix;

    #[derive(Debug)]
    struct Origin;

    impl crate::dynamics::LeaderField for Origin {
        fn top(&self, _x0: &[f64], _t: f64, out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    fn single_agent(x: Vec<f64>) -> Scenario {
        let agent = CustomAgent::new(2, 1, DMatrix::identity(1, 1), |_, _, out| out.fill(0.0)).unwrap();
        Scenario {
            graph: DirectedGraph::new(&[vec![0.0]], &[1.0]).unwrap(),
            q_rule: QRule::Inverse,
            agents: vec![Arc::new(agent)],
            leader: LeaderModel::Field { order: 2, channels: 1, field: Arc::new(Origin), initial: vec![0.0, 0.0] },
            initial_states: vec![x],
            ppf: vec![vec![PpfParams::new(1.0, 0.1, 1.0, 1.0, 1.0).unwrap()]],
            controller: ControllerParams {
                c: 1.0,
                k: 0.5,
                gamma1: vec![2.0],
                gamma2: vec![3.0],
                lambda: 1.0,
                beta: 1.0,
            },
            bounds: ModelBounds::default(),
            h: 0.01,
            horizon: 0.1,
            decimate: 1,
            settle_margin: 0.5,
        }
    }

    #[test]
    fn equilibrium_has_zero_derivative() {
        let lp = assemble_closed_loop(&single_agent(vec![0.0, 0.0])).unwrap();
        let y = lp.initial_state();
        assert_eq!(y.len(), 2 + 2 + 1 + 1);
        assert!(lp.derivative(0.0, &y).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn estimate_alone_only_leaks() {
        let lp = assemble_closed_loop(&single_agent(vec![0.0, 0.0])).unwrap();
        let mut y = lp.initial_state();
        y[4] = 0.7;
        let dy = lp.derivative(0.0, &y).unwrap();
        // θ̂ enters u only through ‖x‖∞ = 0
        assert_eq!(dy[..4], [0.0; 4]);
        assert!((dy[4] + 0.5 * 2.0 * 0.7).abs() < 1e-15);
        assert_eq!(dy[5], 0.0);
    }

    #[test]
    fn initial_violation_is_an_error() {
        // e(0) = 2 ≥ δ̄·ρ₀ = 1
        let err = run_scenario(&single_agent(vec![2.0, 0.0])).unwrap_err();
        assert!(matches!(err, SimError::FunnelViolation { t, agent: 1, channel: 1, stage: None, .. } if t == 0.0));
    }

    #[test]
    fn zero_horizon_gives_one_sample() {
        let mut sc = single_agent(vec![0.1, 0.0]);
        sc.horizon = 0.0;
        let out = run_scenario(&sc).unwrap();
        assert_eq!(out.trace.samples.len(), 1);
        assert!(out.summary.min_margin > 0.0);
    }

    #[test]
    fn layout_of_example1() {
        let sc = Scenario::from_suite(example1_suite(), DirectedGraph::default_five_node());
        let lp = assemble_closed_loop(&sc).unwrap();
        assert_eq!(lp.dimension(), 15 + 3 + 5 + 5);
        let y = lp.initial_state();
        assert_eq!(lp.leader_state(&y, 0.0), vec![0.3, 0.3, 0.3]);
        assert_eq!(lp.agent_state(&y, 4), &[-0.3281, 0.1618, -0.4160]);
    }

    #[test]
    fn validation_errors() {
        let mut sc = single_agent(vec![0.0, 0.0]);
        sc.h = 0.0;
        assert!(matches!(sc.validate(), Err(SimError::InvalidSetting { name: "h", .. })));
        let mut sc = single_agent(vec![0.0, 0.0]);
        sc.initial_states.push(vec![0.0, 0.0]);
        assert!(matches!(sc.validate(), Err(SimError::AgentCount { .. })));
    }
}
