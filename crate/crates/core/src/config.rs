//! Scenario documents (TOML).
//!
//! A document has the sections `graph`, `models`, `ppf`, `controller`,
//! `sim`, `bounds` and `output`; only `models` is required. `models` is
//! either a registry name (`"example1"`, `"example2"`) or an inline table
//! (see [`InlineModelSpec`]). Funnel parameters accept a scalar, a list per
//! agent, a list per channel, or an explicit agents × channels table.
//!
//! Parsing yields a [`ScenarioConfig`] with every default and broadcast
//! written out, so serializing it and parsing again is the identity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::controller::{ControllerError, ControllerParams};
use crate::dynamics::{suite_by_name, DynamicsError, InlineModelSpec, ModelSuite};
use crate::error::ErrorCategory;
use crate::graph::{DirectedGraph, GraphError, QRule};
use crate::ppf::PpfParams;
use crate::sim::{ModelBounds, Scenario, DEFAULT_BETA, DEFAULT_HORIZON, DEFAULT_LAMBDA, DEFAULT_SETTLE_MARGIN, DEFAULT_STEP};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{key}` must be {expected}")]
    TypeMismatch { key: String, expected: &'static str },
    #[error("missing required `{0}`")]
    MissingRequired(String),
    #[error("`{key}` is a flat list of length {len} but there are {len} agents and {len} channels; write an explicit table")]
    BroadcastAmbiguity { key: String, len: usize },
    #[error("`{key}`: {detail}")]
    Shape { key: String, detail: String },
    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("malformed override `{0}` (expected section.key=value)")]
    BadOverride(String),
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Model(#[from] DynamicsError),
}

impl ConfigError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ConfigError::Graph(_) => ErrorCategory::Graph,
            ConfigError::Controller(e) => e.category(),
            ConfigError::Model(_) => ErrorCategory::Model,
            _ => ErrorCategory::Config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSection {
    pub adjacency: Vec<Vec<f64>>,
    pub pinning: Vec<f64>,
    pub q_rule: QRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelsSection {
    Registry(String),
    Inline(InlineModelSpec),
}

/// Funnel parameters, each `[agent][channel]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpfSection {
    pub rho0: Vec<Vec<f64>>,
    pub rho_inf: Vec<Vec<f64>>,
    pub ell: Vec<Vec<f64>>,
    pub delta_upper: Vec<Vec<f64>>,
    pub delta_lower: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSection {
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub seed: u64,
    pub decimate: usize,
    pub settle_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    pub trace_path: String,
    pub summary_path: String,
}

/// A fully resolved scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub models: ModelsSection,
    pub graph: GraphSection,
    pub ppf: PpfSection,
    pub controller: ControllerParams,
    pub sim: SimSection,
    pub bounds: ModelBounds,
    pub output: OutputSection,
}

const SECTIONS: &[&str] = &["graph", "models", "ppf", "controller", "sim", "bounds", "output"];
const GRAPH_KEYS: &[&str] = &["adjacency", "pinning", "q_rule"];
const PPF_KEYS: &[&str] = &["rho0", "rho_inf", "ell", "delta_upper", "delta_lower"];
const CONTROLLER_KEYS: &[&str] = &["c", "k", "gamma1", "gamma2", "lambda", "beta"];
const SIM_KEYS: &[&str] = &["h", "T", "seed", "decimate", "settle_margin"];
const BOUNDS_KEYS: &[&str] = &["x_M", "theta_M", "omega_M", "f_M"];
const OUTPUT_KEYS: &[&str] = &["trace_path", "summary_path"];

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRACE_PATH: &str = "trace.csv";
pub const DEFAULT_SUMMARY_PATH: &str = "summary.toml";

fn section<'a>(doc: &'a Table, name: &str, allowed: &[&str]) -> Result<Option<&'a Table>, ConfigError> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => {
            if let Some(bad) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(ConfigError::UnknownKey(format!("{name}.{bad}")));
            }
            Ok(Some(t))
        }
        Some(_) => Err(ConfigError::TypeMismatch { key: name.into(), expected: "a table" }),
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn number(t: Option<&Table>, sec: &str, key: &str) -> Result<Option<f64>, ConfigError> {
    match t.and_then(|t| t.get(key)) {
        None => Ok(None),
        Some(v) => as_f64(v)
            .map(Some)
            .ok_or_else(|| ConfigError::TypeMismatch { key: format!("{sec}.{key}"), expected: "a number" }),
    }
}

fn unsigned(t: Option<&Table>, sec: &str, key: &str) -> Result<Option<u64>, ConfigError> {
    match t.and_then(|t| t.get(key)) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
        Some(_) => Err(ConfigError::TypeMismatch { key: format!("{sec}.{key}"), expected: "a non-negative integer" }),
    }
}

fn string(t: Option<&Table>, sec: &str, key: &str) -> Result<Option<String>, ConfigError> {
    match t.and_then(|t| t.get(key)) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(ConfigError::TypeMismatch { key: format!("{sec}.{key}"), expected: "a string" }),
    }
}

fn number_list(v: &Value, key: &str) -> Result<Vec<f64>, ConfigError> {
    let Value::Array(items) = v else {
        return Err(ConfigError::TypeMismatch { key: key.into(), expected: "a list of numbers" });
    };
    items
        .iter()
        .map(|x| as_f64(x).ok_or_else(|| ConfigError::TypeMismatch { key: key.into(), expected: "a list of numbers" }))
        .collect()
}

fn matrix(v: &Value, key: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    let Value::Array(rows) = v else {
        return Err(ConfigError::TypeMismatch { key: key.into(), expected: "a list of lists of numbers" });
    };
    rows.iter().map(|r| number_list(r, key)).collect()
}

/// Expand a scalar, per-agent list, per-channel list or explicit table into
/// an `agents × channels` table.
fn broadcast(v: &Value, key: &str, agents: usize, channels: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
    if let Some(x) = as_f64(v) {
        log::info!("{key}: scalar {x} broadcast to {agents}×{channels}");
        return Ok(vec![vec![x; channels]; agents]);
    }
    let Value::Array(items) = v else {
        return Err(ConfigError::TypeMismatch { key: key.into(), expected: "a number, list or table" });
    };
    if items.iter().all(|x| matches!(x, Value::Array(_))) && !items.is_empty() {
        let m = matrix(v, key)?;
        if m.len() != agents || m.iter().any(|r| r.len() != channels) {
            return Err(ConfigError::Shape { key: key.into(), detail: format!("expected a {agents}×{channels} table") });
        }
        return Ok(m);
    }
    let list = number_list(v, key)?;
    let n = list.len();
    if n == agents && n == channels && n > 1 {
        return Err(ConfigError::BroadcastAmbiguity { key: key.into(), len: n });
    }
    if n == agents {
        log::info!("{key}: per-agent list broadcast across {channels} channel(s)");
        Ok(list.iter().map(|&x| vec![x; channels]).collect())
    } else if n == channels {
        log::info!("{key}: per-channel list broadcast across {agents} agent(s)");
        Ok(vec![list; agents])
    } else {
        Err(ConfigError::Shape {
            key: key.into(),
            detail: format!("list of length {n} fits neither {agents} agents nor {channels} channels"),
        })
    }
}

fn per_agent(v: Option<&Value>, key: &str, agents: usize, default: Option<f64>) -> Result<Vec<f64>, ConfigError> {
    match v {
        None => default.map(|d| vec![d; agents]).ok_or_else(|| ConfigError::MissingRequired(key.into())),
        Some(v) => {
            if let Some(x) = as_f64(v) {
                log::info!("{key}: scalar {x} broadcast to {agents} agents");
                return Ok(vec![x; agents]);
            }
            let list = number_list(v, key)?;
            if list.len() != agents {
                return Err(ConfigError::Shape { key: key.into(), detail: format!("expected {agents} entries") });
            }
            Ok(list)
        }
    }
}

fn map_serde_error(err: toml::de::Error, key: &str) -> ConfigError {
    let msg = err.message().to_string();
    if msg.contains("unknown field") {
        ConfigError::UnknownKey(format!("{key}: {msg}"))
    } else if msg.contains("missing field") {
        ConfigError::MissingRequired(format!("{key}: {msg}"))
    } else {
        ConfigError::TypeMismatch { key: key.into(), expected: "a valid inline model table" }
    }
}

/// Model source plus the resolved suite (registry) or inline parts.
enum Models {
    Suite(String, ModelSuite),
    Inline(InlineModelSpec, usize, usize),
}

impl Models {
    fn shape(&self) -> (usize, usize) {
        match self {
            Models::Suite(_, s) => (s.agents.len(), s.channels()),
            Models::Inline(_, n, p) => (*n, *p),
        }
    }
}

/// Parse a document into a validated scenario description.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    parse_table(&doc)
}

pub fn parse_table(doc: &Table) -> Result<ScenarioConfig, ConfigError> {
    if let Some(bad) = doc.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(bad.clone()));
    }
    let sim_t = section(doc, "sim", SIM_KEYS)?;
    let seed = unsigned(sim_t, "sim", "seed")?.unwrap_or(DEFAULT_SEED);

    let models = match doc.get("models") {
        None => return Err(ConfigError::MissingRequired("models".into())),
        Some(Value::String(name)) => {
            let suite = suite_by_name(name, seed).ok_or_else(|| ConfigError::UnknownModel(name.clone()))?;
            Models::Suite(name.clone(), suite)
        }
        Some(v @ Value::Table(_)) => {
            let spec: InlineModelSpec = v.clone().try_into().map_err(|e| map_serde_error(e, "models"))?;
            let n = spec.agents.len();
            let p = spec.channels;
            spec.build()?;
            Models::Inline(spec, n, p)
        }
        Some(_) => {
            return Err(ConfigError::TypeMismatch { key: "models".into(), expected: "a registry name or a table" })
        }
    };
    let (n, p) = models.shape();
    let defaults = match &models {
        Models::Suite(_, s) => Some(s.defaults.clone()),
        Models::Inline(..) => None,
    };

    // graph
    let graph_t = section(doc, "graph", GRAPH_KEYS)?;
    // absent graph fields fall back to the default ring when it fits
    let ring = (n == 5).then(DirectedGraph::default_five_node);
    let ring_note = "(the default ring has 5 nodes)";
    let adjacency = match graph_t.and_then(|t| t.get("adjacency")) {
        Some(v) => matrix(v, "graph.adjacency")?,
        None => match &ring {
            Some(g) => {
                log::info!("graph.adjacency: default 5-node directed ring");
                g.adjacency_rows()
            }
            None => return Err(ConfigError::MissingRequired(format!("graph.adjacency {ring_note}"))),
        },
    };
    let pinning = match graph_t.and_then(|t| t.get("pinning")) {
        Some(v) => number_list(v, "graph.pinning")?,
        None => match &ring {
            Some(g) => {
                log::info!("graph.pinning: default, leader pinned to agents 1 and 5");
                g.pinning().to_vec()
            }
            None => return Err(ConfigError::MissingRequired(format!("graph.pinning {ring_note}"))),
        },
    };
    let q_rule = match string(graph_t, "graph", "q_rule")?.as_deref() {
        None | Some("inverse") => QRule::Inverse,
        Some("transpose") => QRule::Transpose,
        Some(other) => {
            return Err(ConfigError::Invalid {
                key: "graph.q_rule".into(),
                reason: format!("`{other}` is neither `inverse` nor `transpose`"),
            })
        }
    };
    let graph = GraphSection { adjacency, pinning, q_rule };
    let g = DirectedGraph::new(&graph.adjacency, &graph.pinning)?;
    if g.len() != n {
        return Err(ConfigError::Shape { key: "graph".into(), detail: format!("{} nodes for {n} agents", g.len()) });
    }

    // ppf
    let ppf_t = section(doc, "ppf", PPF_KEYS)?;
    let ppf_field = |key: &str, default: Option<f64>| -> Result<Vec<Vec<f64>>, ConfigError> {
        let full = format!("ppf.{key}");
        match ppf_t.and_then(|t| t.get(key)) {
            Some(v) => broadcast(v, &full, n, p),
            None => match default {
                Some(d) => Ok(vec![vec![d; p]; n]),
                None => Err(ConfigError::MissingRequired(full)),
            },
        }
    };
    let dp = defaults.as_ref().map(|d| d.ppf);
    let ppf = PpfSection {
        rho0: ppf_field("rho0", dp.map(|d| d.rho0))?,
        rho_inf: ppf_field("rho_inf", dp.map(|d| d.rho_inf))?,
        ell: ppf_field("ell", dp.map(|d| d.decay))?,
        delta_upper: ppf_field("delta_upper", dp.map(|d| d.delta_upper))?,
        delta_lower: ppf_field("delta_lower", dp.map(|d| d.delta_lower))?,
    };
    for i in 0..n {
        for ch in 0..p {
            ppf_params(&ppf, i, ch).validate().map_err(|e| ConfigError::Invalid {
                key: format!("ppf (agent {}, channel {})", i + 1, ch + 1),
                reason: e.to_string(),
            })?;
        }
    }

    // controller
    let ct = section(doc, "controller", CONTROLLER_KEYS)?;
    let required = |v: Option<f64>, key: &str, d: Option<f64>| {
        v.or(d).ok_or_else(|| ConfigError::MissingRequired(format!("controller.{key}")))
    };
    let controller = ControllerParams {
        c: required(number(ct, "controller", "c")?, "c", defaults.as_ref().map(|d| d.c))?,
        k: required(number(ct, "controller", "k")?, "k", defaults.as_ref().map(|d| d.k))?,
        gamma1: per_agent(ct.and_then(|t| t.get("gamma1")), "controller.gamma1", n, defaults.as_ref().map(|d| d.gamma1))?,
        gamma2: per_agent(ct.and_then(|t| t.get("gamma2")), "controller.gamma2", n, defaults.as_ref().map(|d| d.gamma2))?,
        lambda: number(ct, "controller", "lambda")?.unwrap_or(DEFAULT_LAMBDA),
        beta: number(ct, "controller", "beta")?.unwrap_or(DEFAULT_BETA),
    };
    controller.validate()?;

    // sim
    let sim = SimSection {
        h: number(sim_t, "sim", "h")?.unwrap_or(DEFAULT_STEP),
        horizon: number(sim_t, "sim", "T")?.unwrap_or(DEFAULT_HORIZON),
        seed,
        decimate: unsigned(sim_t, "sim", "decimate")?.unwrap_or(1) as usize,
        settle_margin: number(sim_t, "sim", "settle_margin")?.unwrap_or(DEFAULT_SETTLE_MARGIN),
    };
    if !(sim.h > 0.0 && sim.h.is_finite()) {
        return Err(ConfigError::Invalid { key: "sim.h".into(), reason: "must be positive".into() });
    }
    if !(sim.horizon > sim.h && sim.horizon.is_finite()) {
        return Err(ConfigError::Invalid { key: "sim.T".into(), reason: "must exceed sim.h".into() });
    }
    if sim.decimate == 0 {
        return Err(ConfigError::Invalid { key: "sim.decimate".into(), reason: "must be at least 1".into() });
    }
    if !(sim.settle_margin >= 0.0) {
        return Err(ConfigError::Invalid { key: "sim.settle_margin".into(), reason: "must be non-negative".into() });
    }

    // bounds
    let bt = section(doc, "bounds", BOUNDS_KEYS)?;
    let bd = ModelBounds::default();
    let bounds = ModelBounds {
        x_m: number(bt, "bounds", "x_M")?.unwrap_or(bd.x_m),
        theta_m: number(bt, "bounds", "theta_M")?.unwrap_or(bd.theta_m),
        omega_m: number(bt, "bounds", "omega_M")?.unwrap_or(bd.omega_m),
        f_m: number(bt, "bounds", "f_M")?.unwrap_or(bd.f_m),
    };
    for (key, v) in [("x_M", bounds.x_m), ("theta_M", bounds.theta_m), ("omega_M", bounds.omega_m), ("f_M", bounds.f_m)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ConfigError::Invalid { key: format!("bounds.{key}"), reason: "must be non-negative".into() });
        }
    }

    let ot = section(doc, "output", OUTPUT_KEYS)?;
    let output = OutputSection {
        trace_path: string(ot, "output", "trace_path")?.unwrap_or_else(|| DEFAULT_TRACE_PATH.into()),
        summary_path: string(ot, "output", "summary_path")?.unwrap_or_else(|| DEFAULT_SUMMARY_PATH.into()),
    };

    let models = match models {
        Models::Suite(name, _) => ModelsSection::Registry(name),
        Models::Inline(spec, ..) => ModelsSection::Inline(spec),
    };
    Ok(ScenarioConfig { models, graph, ppf, controller, sim, bounds, output })
}

fn ppf_params(ppf: &PpfSection, i: usize, ch: usize) -> PpfParams {
    PpfParams {
        rho0: ppf.rho0[i][ch],
        rho_inf: ppf.rho_inf[i][ch],
        decay: ppf.ell[i][ch],
        delta_upper: ppf.delta_upper[i][ch],
        delta_lower: ppf.delta_lower[i][ch],
    }
}

/// Write a resolved configuration back out as a document.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("configuration is representable")
}

/// Apply `section.key=value` overrides; the value is read as TOML when it
/// parses, otherwise as a bare string. Later overrides win.
pub fn apply_overrides(doc: &mut Table, overrides: &[String]) -> Result<(), ConfigError> {
    for item in overrides {
        let (path, raw) = item.split_once('=').ok_or_else(|| ConfigError::BadOverride(item.clone()))?;
        let path: Vec<&str> = path.trim().split('.').collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(ConfigError::BadOverride(item.clone()));
        }
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.to_string()));
        let mut table = &mut *doc;
        for part in &path[..path.len() - 1] {
            let entry = table.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
            table = match entry {
                Value::Table(t) => t,
                _ => return Err(ConfigError::BadOverride(item.clone())),
            };
        }
        table.insert(path[path.len() - 1].to_string(), value);
    }
    Ok(())
}

/// Parse with overrides applied first.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    let mut doc: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    apply_overrides(&mut doc, overrides)?;
    parse_table(&doc)
}

impl ScenarioConfig {
    pub fn agents(&self) -> usize {
        self.graph.pinning.len()
    }

    /// Minimal document for a built-in suite, with every default filled.
    pub fn builtin(name: &str) -> Result<Self, ConfigError> {
        parse_config(&format!("models = \"{name}\"\n"))
    }

    /// Instantiate the models and assemble a runnable scenario.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let graph = DirectedGraph::new(&self.graph.adjacency, &self.graph.pinning)?;
        let (agents, leader, initial_states) = match &self.models {
            ModelsSection::Registry(name) => {
                let s = suite_by_name(name, self.sim.seed).ok_or_else(|| ConfigError::UnknownModel(name.clone()))?;
                (s.agents, s.leader, s.initial_states)
            }
            ModelsSection::Inline(spec) => spec.build()?,
        };
        let n = agents.len();
        let p = leader.channels();
        let ppf = (0..n).map(|i| (0..p).map(|ch| ppf_params(&self.ppf, i, ch)).collect()).collect();
        Ok(Scenario {
            graph,
            q_rule: self.graph.q_rule,
            agents: agents.into_iter().map(|a| a as Arc<_>).collect(),
            leader,
            initial_states,
            ppf,
            controller: self.controller.clone(),
            bounds: self.bounds,
            h: self.sim.h,
            horizon: self.sim.horizon,
            decimate: self.sim.decimate,
            settle_margin: self.sim.settle_margin,
        })
    }
}
