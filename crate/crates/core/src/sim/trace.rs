//! Recorded samples and the statistics derived from them.

use serde::{Deserialize, Serialize};

use super::{ClosedLoop, SimError};
use crate::controller::GainReport;
use crate::ppf::PpfParams;

/// One recorded instant. Per-agent vectors are indexed `[agent][channel]`
/// unless noted.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    /// Leader state, order-major.
    pub leader: Vec<f64>,
    /// Agent states, order-major.
    pub x: Vec<Vec<f64>>,
    /// Synchronization errors, order-major.
    pub e: Vec<Vec<f64>>,
    pub rho: Vec<Vec<f64>>,
    /// `[agent][channel][order]`
    pub eps: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    pub metric: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub omega: Vec<Vec<f64>>,
    /// Distance to the nearer funnel edge.
    pub margin: Vec<Vec<f64>>,
    pub lyapunov: Option<f64>,
    /// `‖x¹ − 1⊗x₀¹‖`
    pub disagreement: f64,
    /// `‖e¹‖ / σ_min(L+B)`
    pub disagreement_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub agents: usize,
    pub channels: usize,
    pub order: usize,
    /// Funnel parameters `[agent][channel]`.
    pub ppf: Vec<Vec<PpfParams>>,
    pub samples: Vec<TraceSample>,
}

impl Trace {
    pub(crate) fn new(lp: &ClosedLoop) -> Self {
        let sc = lp.scenario();
        Trace {
            agents: sc.agents.len(),
            channels: sc.channels(),
            order: sc.order(),
            ppf: sc.ppf.clone(),
            samples: Vec::new(),
        }
    }

    /// `|e¹|` of one channel at the last sample.
    pub fn terminal_error(&self, agent: usize, channel: usize) -> Option<f64> {
        self.samples.last().map(|s| s.e[agent][channel].abs())
    }
}

/// First funnel violation of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub t: f64,
    pub agent: usize,
    pub channel: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<usize>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub samples: usize,
    pub t_final: f64,
    pub completed: bool,
    pub violation_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<ViolationReport>,
    /// Message of any other error that ended the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    /// `max |e|/ρ` over every sample and channel.
    pub max_occupancy: f64,
    /// Smallest funnel margin seen.
    pub min_margin: f64,
    /// Time after which every `|e|` stays within `ρ∞(1 + margin)`; absent
    /// if the last sample is still outside.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settling_time: Option<f64>,
    pub settle_margin: f64,
    pub max_abs_u: f64,
    pub rms_u: f64,
    pub max_abs_theta: f64,
    pub max_abs_omega: f64,
    /// `|e¹|` at the last sample, `[agent][channel]`.
    pub terminal_abs_error: Vec<Vec<f64>>,
    pub max_terminal_error: f64,
    /// Fraction of samples meeting the disagreement bound.
    pub disagreement_satisfaction: f64,
    pub finite: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainReport>,
}

/// Relative slack on the disagreement bound for rounding only.
pub const DISAGREEMENT_SLACK: f64 = 1e-9;

impl SummaryReport {
    pub(crate) fn record_abort(&mut self, err: &SimError) {
        self.completed = false;
        if let SimError::FunnelViolation { t, agent, channel, stage, ratio, .. } = err {
            self.violation_count += 1;
            self.first_violation =
                Some(ViolationReport { t: *t, agent: *agent, channel: *channel, stage: *stage, ratio: *ratio });
        } else {
            self.abort_reason = Some(err.to_string());
        }
    }

    /// Zero violations and a finite final state.
    pub fn passed(&self) -> bool {
        self.completed && self.violation_count == 0 && self.finite
    }
}

/// Statistics of a finished (or aborted) trace.
pub fn summarize(trace: &Trace, settle_margin: f64) -> Result<SummaryReport, SimError> {
    let last = trace.samples.last().ok_or(SimError::EmptyTrace)?;
    let (n, p) = (trace.agents, trace.channels);
    let mut max_occupancy = 0.0_f64;
    let mut min_margin = f64::INFINITY;
    let mut max_abs_u = 0.0_f64;
    let mut sum_u2 = 0.0;
    let mut count_u = 0usize;
    let mut max_abs_theta = 0.0_f64;
    let mut max_abs_omega = 0.0_f64;
    let mut satisfied = 0usize;
    let mut finite = true;
    // last sample index at which each channel was outside its band
    let mut last_outside: Option<usize> = None;
    for (k, s) in trace.samples.iter().enumerate() {
        for i in 0..n {
            for ch in 0..p {
                let e = s.e[i][ch];
                max_occupancy = max_occupancy.max(e.abs() / s.rho[i][ch]);
                min_margin = min_margin.min(s.margin[i][ch]);
                if e.abs() > trace.ppf[i][ch].rho_inf * (1.0 + settle_margin) {
                    last_outside = Some(k);
                }
                let u = s.u[i][ch];
                max_abs_u = max_abs_u.max(u.abs());
                sum_u2 += u * u;
                count_u += 1;
                max_abs_theta = max_abs_theta.max(s.theta[i][ch].abs());
                max_abs_omega = max_abs_omega.max(s.omega[i][ch].abs());
            }
            finite &= s.x[i].iter().all(|v| v.is_finite());
        }
        if s.disagreement <= s.disagreement_bound * (1.0 + DISAGREEMENT_SLACK) + f64::MIN_POSITIVE {
            satisfied += 1;
        }
    }
    let settling_time = match last_outside {
        None => Some(trace.samples[0].t),
        Some(k) if k + 1 < trace.samples.len() => Some(trace.samples[k + 1].t),
        Some(_) => None,
    };
    let terminal_abs_error: Vec<Vec<f64>> =
        (0..n).map(|i| (0..p).map(|ch| last.e[i][ch].abs()).collect()).collect();
    let max_terminal_error = terminal_abs_error.iter().flatten().fold(0.0_f64, |a, &b| a.max(b));
    Ok(SummaryReport {
        samples: trace.samples.len(),
        t_final: last.t,
        completed: true,
        violation_count: 0,
        first_violation: None,
        abort_reason: None,
        max_occupancy,
        min_margin,
        settling_time,
        settle_margin,
        max_abs_u,
        rms_u: if count_u > 0 { (sum_u2 / count_u as f64).sqrt() } else { 0.0 },
        max_abs_theta,
        max_abs_omega,
        terminal_abs_error,
        max_terminal_error,
        disagreement_satisfaction: satisfied as f64 / trace.samples.len() as f64,
        finite,
        gain: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, e: f64, rho: f64) -> TraceSample {
        TraceSample {
            t,
            leader: vec![0.0],
            x: vec![vec![e]],
            e: vec![vec![e]],
            rho: vec![vec![rho]],
            eps: vec![vec![vec![0.0]]],
            r: vec![vec![1.0]],
            metric: vec![vec![0.0]],
            u: vec![vec![0.0]],
            theta: vec![vec![0.0]],
            omega: vec![vec![0.0]],
            margin: vec![vec![rho - e.abs()]],
            lyapunov: Some(0.0),
            disagreement: e.abs(),
            disagreement_bound: e.abs(),
        }
    }

    fn trace(samples: Vec<TraceSample>) -> Trace {
        Trace {
            agents: 1,
            channels: 1,
            order: 1,
            ppf: vec![vec![PpfParams::new(1.0, 0.1, 1.0, 1.0, 1.0).unwrap()]],
            samples,
        }
    }

    #[test]
    fn empty_trace() {
        assert_eq!(summarize(&trace(vec![]), 0.5), Err(SimError::EmptyTrace));
    }

    #[test]
    fn equilibrium_statistics() {
        let s = summarize(&trace((0..5).map(|k| sample(k as f64, 0.0, 1.0)).collect()), 0.5).unwrap();
        assert_eq!(s.max_occupancy, 0.0);
        assert_eq!(s.max_abs_u, 0.0);
        assert_eq!(s.max_terminal_error, 0.0);
        assert_eq!(s.settling_time, Some(0.0));
        assert_eq!(s.disagreement_satisfaction, 1.0);
        assert!(s.passed());
    }

    #[test]
    fn half_occupancy() {
        let s = summarize(&trace((0..5).map(|k| sample(k as f64, 0.5 * (2.0 + k as f64), 2.0 + k as f64)).collect()), 0.5)
            .unwrap();
        assert!((s.max_occupancy - 0.5).abs() < 1e-15);
    }

    #[test]
    fn settling_time_is_first_sample_after_last_excursion() {
        let errs = [0.5, 0.01, 0.3, 0.01, 0.0];
        let s = summarize(&trace(errs.iter().enumerate().map(|(k, &e)| sample(k as f64, e, 1.0)).collect()), 0.5)
            .unwrap();
        assert_eq!(s.settling_time, Some(3.0));
        let s = summarize(&trace(vec![sample(0.0, 0.0, 1.0), sample(1.0, 0.9, 1.0)]), 0.5).unwrap();
        assert_eq!(s.settling_time, None);
    }
}
