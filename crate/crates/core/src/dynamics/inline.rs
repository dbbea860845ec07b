//! Models written as expressions in a scenario file.
//!
//! Agent drifts and leader fields see the variables `x{m}_{p}` (order `m`,
//! channel `p`, both from 1) and `t`; single-channel models may also write
//! `x{m}`. A trajectory leader lists expressions in `t` for orders
//! `0..=M`, one row per order.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_input_matrix, AgentModel, DynamicsError, LeaderField, LeaderModel, LeaderTrajectory};
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineAgentSpec {
    /// Top-order drift, one expression per channel.
    pub f: Vec<String>,
    /// Input matrix rows; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineLeaderSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineModelSpec {
    pub order: usize,
    pub channels: usize,
    pub agents: Vec<InlineAgentSpec>,
    pub leader: InlineLeaderSpec,
}

/// Compiled agents, leader and initial states.
pub type InlineParts = (Vec<Arc<dyn AgentModel>>, LeaderModel, Vec<Vec<f64>>);

fn state_names(order: usize, channels: usize) -> Vec<String> {
    let mut names = Vec::new();
    for m in 1..=order {
        for p in 1..=channels {
            names.push(format!("x{m}_{p}"));
        }
    }
    if channels == 1 {
        names.extend((1..=order).map(|m| format!("x{m}")));
    }
    names.push("t".to_string());
    names
}

/// Variable slots for the compiled expressions, reused between calls.
fn fill_slots(x: &[f64], t: f64, channels: usize, slots: &mut Vec<f64>) {
    slots.clear();
    slots.extend_from_slice(x);
    if channels == 1 {
        slots.extend_from_slice(x);
    }
    slots.push(t);
}

fn compile_all(sources: &[String], names: &[String]) -> Result<Vec<Expr>, DynamicsError> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    sources.iter().map(|s| Ok(Expr::compile(s, &refs)?)).collect()
}

#[derive(Debug)]
struct InlineAgent {
    order: usize,
    channels: usize,
    g: DMatrix<f64>,
    drift: Vec<Expr>,
}

impl AgentModel for InlineAgent {
    fn order(&self) -> usize {
        self.order
    }
    fn channels(&self) -> usize {
        self.channels
    }
    fn drift(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let mut slots = Vec::with_capacity(2 * x.len() + 1);
        fill_slots(x, t, self.channels, &mut slots);
        for (o, e) in out.iter_mut().zip(&self.drift) {
            *o = e.eval(&slots);
        }
    }
    fn input_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
}

#[derive(Debug)]
struct InlineLeaderField {
    channels: usize,
    top: Vec<Expr>,
}

impl LeaderField for InlineLeaderField {
    fn top(&self, x0: &[f64], t: f64, out: &mut [f64]) {
        let mut slots = Vec::with_capacity(2 * x0.len() + 1);
        fill_slots(x0, t, self.channels, &mut slots);
        for (o, e) in out.iter_mut().zip(&self.top) {
            *o = e.eval(&slots);
        }
    }
}

#[derive(Debug)]
struct InlineTrajectory {
    rows: Vec<Vec<Expr>>,
}

impl LeaderTrajectory for InlineTrajectory {
    fn derivatives(&self, t: f64, out: &mut [f64]) {
        let mut k = 0;
        for row in &self.rows {
            for e in row {
                out[k] = e.eval(&[t]);
                k += 1;
            }
        }
    }
}

impl InlineModelSpec {
    pub fn build(&self) -> Result<InlineParts, DynamicsError> {
        let (order, channels) = (self.order, self.channels);
        if order == 0 || channels == 0 {
            return Err(DynamicsError::InvalidModel("order and channels must be at least 1".into()));
        }
        if self.agents.is_empty() {
            return Err(DynamicsError::InvalidModel("no agents".into()));
        }
        let names = state_names(order, channels);
        let len = order * channels;
        let mut agents: Vec<Arc<dyn AgentModel>> = Vec::new();
        let mut initial = Vec::new();
        for spec in &self.agents {
            if spec.f.len() != channels {
                return Err(DynamicsError::DimensionMismatch { expected: channels, got: spec.f.len() });
            }
            if spec.x0.len() != len {
                return Err(DynamicsError::DimensionMismatch { expected: len, got: spec.x0.len() });
            }
            let g = match &spec.g {
                None => DMatrix::identity(channels, channels),
                Some(rows) => {
                    if rows.len() != channels || rows.iter().any(|r| r.len() != channels) {
                        return Err(DynamicsError::DimensionMismatch {
                            expected: channels * channels,
                            got: rows.iter().map(Vec::len).sum(),
                        });
                    }
                    DMatrix::from_fn(channels, channels, |i, j| rows[i][j])
                }
            };
            check_input_matrix(&g, channels)?;
            agents.push(Arc::new(InlineAgent { order, channels, g, drift: compile_all(&spec.f, &names)? }));
            initial.push(spec.x0.clone());
        }
        let leader = match (&self.leader.field, &self.leader.trajectory) {
            (Some(field), None) => {
                if field.len() != channels {
                    return Err(DynamicsError::DimensionMismatch { expected: channels, got: field.len() });
                }
                let x0 = self
                    .leader
                    .x0
                    .clone()
                    .ok_or_else(|| DynamicsError::InvalidModel("leader field needs x0".into()))?;
                if x0.len() != len {
                    return Err(DynamicsError::DimensionMismatch { expected: len, got: x0.len() });
                }
                LeaderModel::Field {
                    order,
                    channels,
                    field: Arc::new(InlineLeaderField { channels, top: compile_all(field, &names)? }),
                    initial: x0,
                }
            }
            (None, Some(rows)) => {
                if self.leader.x0.is_some() {
                    return Err(DynamicsError::InvalidModel("a trajectory leader takes no x0".into()));
                }
                if rows.len() != order + 1 {
                    return Err(DynamicsError::DimensionMismatch { expected: order + 1, got: rows.len() });
                }
                let t_only = ["t".to_string()];
                let mut compiled = Vec::new();
                for row in rows {
                    if row.len() != channels {
                        return Err(DynamicsError::DimensionMismatch { expected: channels, got: row.len() });
                    }
                    compiled.push(compile_all(row, &t_only)?);
                }
                let leader = LeaderModel::Trajectory {
                    order,
                    channels,
                    trajectory: Arc::new(InlineTrajectory { rows: compiled }),
                };
                let times: Vec<f64> = (0..100).map(|k| 0.05 + 0.2 * k as f64).collect();
                leader.check_trajectory(&times)?;
                leader
            }
            _ => {
                return Err(DynamicsError::InvalidModel(
                    "leader needs exactly one of `field` or `trajectory`".into(),
                ))
            }
        };
        Ok((agents, leader, initial))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(leader: InlineLeaderSpec) -> InlineModelSpec {
        InlineModelSpec {
            order: 2,
            channels: 1,
            agents: vec![InlineAgentSpec { f: vec!["-x1 + x2_1*t".into()], g: None, x0: vec![1.0, 2.0] }],
            leader,
        }
    }

    #[test]
    fn agent_variables() {
        let (agents, _, x0) = spec(InlineLeaderSpec {
            field: Some(vec!["0".into()]),
            x0: Some(vec![0.0, 0.0]),
            trajectory: None,
        })
        .build()
        .unwrap();
        let mut out = [0.0];
        agents[0].drift(&x0[0], 3.0, &mut out);
        assert_eq!(out[0], -1.0 + 2.0 * 3.0);
    }

    #[test]
    fn trajectory_checked_at_load() {
        let good = InlineLeaderSpec {
            field: None,
            x0: None,
            trajectory: Some(vec![vec!["sin(t)".into()], vec!["cos(t)".into()], vec!["-sin(t)".into()]]),
        };
        assert!(spec(good).build().is_ok());
        let bad = InlineLeaderSpec {
            field: None,
            x0: None,
            trajectory: Some(vec![vec!["sin(t)".into()], vec!["2*cos(t)".into()], vec!["-sin(t)".into()]]),
        };
        assert!(matches!(spec(bad).build(), Err(DynamicsError::InconsistentTrajectory { order: 1, .. })));
    }

    #[test]
    fn leader_form_is_exclusive() {
        let both = InlineLeaderSpec {
            field: Some(vec!["0".into()]),
            x0: Some(vec![0.0, 0.0]),
            trajectory: Some(vec![]),
        };
        assert!(matches!(spec(both).build(), Err(DynamicsError::InvalidModel(_))));
    }
}
