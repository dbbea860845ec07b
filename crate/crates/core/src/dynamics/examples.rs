//! Built-in benchmark networks: a third-order SISO suite with a nonlinear
//! leader field and a second-order two-channel suite tracking cosines.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{AgentModel, LeaderField, LeaderModel, LeaderTrajectory};
use crate::ppf::PpfParams;

/// Tuning that ships with a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDefaults {
    pub ppf: PpfParams,
    pub c: f64,
    pub k: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// Followers, leader, initial states and default tuning of one network.
#[derive(Debug, Clone)]
pub struct ModelSuite {
    pub agents: Vec<Arc<dyn AgentModel>>,
    pub leader: LeaderModel,
    pub initial_states: Vec<Vec<f64>>,
    pub defaults: ScenarioDefaults,
}

impl ModelSuite {
    pub fn order(&self) -> usize {
        self.leader.order()
    }

    pub fn channels(&self) -> usize {
        self.leader.channels()
    }
}

/// Third-order SISO follower `i ∈ 0..5`.
#[derive(Debug, Clone)]
pub struct Example1Agent {
    index: usize,
    g: DMatrix<f64>,
}

impl Example1Agent {
    pub fn new(index: usize) -> Self {
        assert!(index < 5, "example 1 has five agents");
        Example1Agent { index, g: DMatrix::identity(1, 1) }
    }
}

impl AgentModel for Example1Agent {
    fn order(&self) -> usize {
        3
    }

    fn channels(&self) -> usize {
        1
    }

    fn drift(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        out[0] = match self.index {
            0 => x2 * x1.sin() + x3.cos().powi(2),
            1 => -x1 * x1 * x2 + 0.01 * x1 - 0.01 * x1.powi(3),
            2 => x2 + x3.sin(),
            3 => {
                -3.0 * (x1 + x2 - 1.0).powi(2) * (x1 + x2 + x3 - 1.0) - x3
                    + 0.5 * (2.0 * t).sin()
                    + (2.0 * t).cos()
            }
            _ => x1.cos(),
        };
    }

    fn input_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
}

#[derive(Debug, Clone, Copy)]
struct Example1Leader;

impl LeaderField for Example1Leader {
    fn top(&self, x0: &[f64], t: f64, out: &mut [f64]) {
        let (x1, x2, x3) = (x0[0], x0[1], x0[2]);
        out[0] = -x2 - 2.0 * x3 + 1.0 + 3.0 * (2.0 * t).sin() + 6.0 * (2.0 * t).cos()
            - (1.0 / 3.0) * (x1 + x2 - 1.0) * (x1 + 4.0 * x2 + 3.0 * x3 - 1.0);
    }
}

pub fn example1_suite() -> ModelSuite {
    let agents = (0..5).map(|i| Arc::new(Example1Agent::new(i)) as Arc<dyn AgentModel>).collect();
    ModelSuite {
        agents,
        leader: LeaderModel::Field {
            order: 3,
            channels: 1,
            field: Arc::new(Example1Leader),
            initial: vec![0.3, 0.3, 0.3],
        },
        initial_states: vec![
            vec![-0.2850, -0.0821, -0.2126],
            vec![-0.6044, -0.3964, -0.0775],
            vec![-0.2110, -0.4237, -0.3253],
            vec![-0.1501, -0.3986, -0.0050],
            vec![-0.3281, 0.1618, -0.4160],
        ],
        defaults: ScenarioDefaults {
            ppf: PpfParams { rho0: 5.0, rho_inf: 0.03, decay: 0.6, delta_upper: 4.0, delta_lower: 5.0 },
            c: 30.0,
            k: 0.1,
            gamma1: 1e4,
            gamma2: 1e4,
        },
    }
}

/// Second-order two-channel follower with state-dependent drift, a
/// time-varying linear term `ψ(t)·x¹` and an additive disturbance `D(t)`.
#[derive(Debug, Clone)]
pub struct Example2Agent {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    g: DMatrix<f64>,
}

impl Example2Agent {
    pub fn new(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Self {
        Example2Agent { a, b, c, g: DMatrix::identity(2, 2) }
    }

    pub fn nonlinearity(&self, x: &[f64], t: f64) -> [f64; 2] {
        let [a1, a2] = self.a;
        let (p1, p2, v1, v2) = (x[0], x[1], x[2], x[3]);
        [
            a1 * p2 * p1 * p1 * v2 + 0.2 * (a1 * p1 * v1).sin(),
            -a2 * p1 * p2 * v1 - 0.2 * a2 * (a2 * p2 * t).cos() * p1 * v2,
        ]
    }

    pub fn psi(&self, t: f64) -> [[f64; 2]; 2] {
        let [c1, c2] = self.c;
        [
            [3.0 * c1 * (0.5 * t).sin(), 2.0 * c1 * (0.4 * c1 * t).sin() * (0.3 * t).cos()],
            [0.9 * (0.2 * c2 * t).sin(), 2.5 * (0.3 * c2 * t).sin() + 0.3 * t.cos()],
        ]
    }

    pub fn disturbance(&self, t: f64) -> [f64; 2] {
        let [b1, b2] = self.b;
        [1.0 + b1 * (b1 * t).sin(), 1.2 * (b2 * t).cos()]
    }
}

impl AgentModel for Example2Agent {
    fn order(&self) -> usize {
        2
    }

    fn channels(&self) -> usize {
        2
    }

    fn drift(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let f = self.nonlinearity(x, t);
        let psi = self.psi(t);
        let d = self.disturbance(t);
        for ch in 0..2 {
            out[ch] = f[ch] + psi[ch][0] * x[0] + psi[ch][1] * x[1] + d[ch];
        }
    }

    fn input_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
}

#[derive(Debug, Clone, Copy)]
struct Example2Leader;

impl LeaderTrajectory for Example2Leader {
    fn derivatives(&self, t: f64, out: &mut [f64]) {
        let (s1, c1) = (0.6 * t).sin_cos();
        let (s2, c2) = (0.5 * t).sin_cos();
        out[0] = 0.6 * c1;
        out[1] = 0.8 * c2;
        out[2] = -0.36 * s1;
        out[3] = -0.4 * s2;
        out[4] = -0.216 * c1;
        out[5] = -0.2 * c2;
    }
}

const EXAMPLE2_A: [[f64; 2]; 5] = [[1.5, 0.5], [0.5, 1.4], [0.7, 0.1], [1.3, 1.3], [0.7, 2.4]];
const EXAMPLE2_B: [[f64; 2]; 5] = [[0.5, 0.7], [1.5, 1.2], [1.1, 1.3], [1.6, 0.5], [0.3, 0.3]];
const EXAMPLE2_C: [[f64; 2]; 5] = [[1.5, 0.5], [2.5, 1.7], [0.5, 1.1], [1.7, 0.3], [0.7, 0.4]];
const EXAMPLE2_POSITIONS: [[f64; 2]; 5] =
    [[0.2310, -0.0276], [-0.1362, -0.4615], [-0.2867, -0.1315], [0.5157, 0.3539], [-0.4700, 0.4070]];

/// Initial velocities: standard normal draws from ChaCha8 seeded with
/// `seed`, taken agent by agent, channel by channel.
pub fn example2_velocities(seed: u64) -> [[f64; 2]; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = [[0.0; 2]; 5];
    for v in out.iter_mut().flatten() {
        *v = rng.sample(StandardNormal);
    }
    out
}

pub fn example2_suite(seed: u64) -> ModelSuite {
    let agents = (0..5)
        .map(|i| Arc::new(Example2Agent::new(EXAMPLE2_A[i], EXAMPLE2_B[i], EXAMPLE2_C[i])) as Arc<dyn AgentModel>)
        .collect();
    let velocities = example2_velocities(seed);
    let initial_states = (0..5)
        .map(|i| {
            let [p1, p2] = EXAMPLE2_POSITIONS[i];
            let [v1, v2] = velocities[i];
            vec![p1, p2, v1, v2]
        })
        .collect();
    ModelSuite {
        agents,
        leader: LeaderModel::Trajectory { order: 2, channels: 2, trajectory: Arc::new(Example2Leader) },
        initial_states,
        defaults: ScenarioDefaults {
            ppf: PpfParams { rho0: 7.0, rho_inf: 0.03, decay: 0.6, delta_upper: 7.0, delta_lower: 7.0 },
            c: 30.0,
            k: 0.01,
            gamma1: 100.0,
            gamma2: 100.0,
        },
    }
}

/// Registry lookup for the built-in suites.
pub fn suite_by_name(name: &str, seed: u64) -> Option<ModelSuite> {
    match name {
        "example1" => Some(example1_suite()),
        "example2" => Some(example2_suite(seed)),
        _ => None,
    }
}
