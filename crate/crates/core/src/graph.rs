//! Communication topology and the Laplacian/pinning quantities consumed by
//! the controller and the gain check.
//!
//! Convention: `adjacency[i][j] > 0` means node `i` receives information from
//! node `j` (an edge `j -> i`). The in-degree of `i` is the row sum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("adjacency must be a non-empty square table with one pinning gain per node")]
    NonSquareInput,
    #[error("negative or non-finite weight {value} at ({row}, {col})")]
    NegativeWeight { row: usize, col: usize, value: f64 },
    #[error("negative or non-finite pinning gain {value} at node {node}")]
    NegativePinning { node: usize, value: f64 },
    #[error("self loop at node {0}")]
    SelfLoop(usize),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
    #[error("no node is pinned to the leader")]
    NoPinning,
    #[error("q-rule produced a nonpositive entry q[{index}] = {value}")]
    NonpositiveQ { index: usize, value: f64 },
    #[error("pinned Laplacian L+B is singular")]
    SingularPinnedLaplacian,
}

/// How the positive weight vector `q` is derived from `L+B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QRule {
    /// `q = (L+B)⁻¹ 1`, positive for any nonsingular M-matrix.
    #[default]
    Inverse,
    /// `q = (L+B)ᵀ 1`, the column sums. Zero on balanced graphs.
    Transpose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    adjacency: DMatrix<f64>,
    pinning: Vec<f64>,
}

impl DirectedGraph {
    pub fn new(adjacency: &[Vec<f64>], pinning: &[f64]) -> Result<Self, GraphError> {
        let n = adjacency.len();
        if n == 0 || pinning.len() != n {
            return Err(GraphError::NonSquareInput);
        }
        let adjacency = linalg::from_rows(adjacency).ok_or(GraphError::NonSquareInput)?;
        if adjacency.ncols() != n {
            return Err(GraphError::NonSquareInput);
        }
        for i in 0..n {
            for j in 0..n {
                let value = adjacency[(i, j)];
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(GraphError::NegativeWeight { row: i, col: j, value });
                }
            }
            if adjacency[(i, i)] != 0.0 {
                return Err(GraphError::SelfLoop(i));
            }
        }
        for (node, &value) in pinning.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(GraphError::NegativePinning { node, value });
            }
        }
        Ok(DirectedGraph { adjacency, pinning: pinning.to_vec() })
    }

    /// Directed ring `1 -> 2 -> ... -> n -> 1` with a common edge weight.
    pub fn directed_ring(n: usize, weight: f64, pinning: &[f64]) -> Result<Self, GraphError> {
        let mut rows = vec![vec![0.0; n]; n];
        if n > 1 {
            for i in 0..n {
                rows[(i + 1) % n][i] = weight;
            }
        }
        Self::new(&rows, pinning)
    }

    /// Five agents on a unit-weight directed ring, with the leader attached
    /// to agents 1 and 5.
    pub fn default_five_node() -> Self {
        Self::directed_ring(5, 1.0, &[1.0, 0.0, 0.0, 0.0, 1.0])
            .expect("default topology is valid")
    }

    pub fn len(&self) -> usize {
        self.pinning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pinning.is_empty()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    pub fn pinning(&self) -> &[f64] {
        &self.pinning
    }

    pub fn adjacency_rows(&self) -> Vec<Vec<f64>> {
        linalg::to_rows(&self.adjacency)
    }

    /// True when at least one agent sees the leader.
    pub fn has_pinning(&self) -> bool {
        self.pinning.iter().any(|&b| b > 0.0)
    }

    pub fn in_degree(&self) -> Vec<f64> {
        self.adjacency.row_iter().map(|r| r.sum()).collect()
    }

    pub fn laplacian(&self) -> DMatrix<f64> {
        let degree = DVector::from_vec(self.in_degree());
        DMatrix::from_diagonal(&degree) - &self.adjacency
    }

    /// `L + B`.
    pub fn pinned_laplacian(&self) -> DMatrix<f64> {
        self.laplacian() + DMatrix::from_diagonal(&DVector::from_column_slice(&self.pinning))
    }

    /// True iff every ordered pair of nodes is joined by a directed path.
    ///
    /// Two reachability passes from node 0, one along the edges and one
    /// against them.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.len();
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for w in 0..n {
                    // edge v -> w exists when adjacency[w][v] > 0
                    let edge = if forward { self.adjacency[(w, v)] } else { self.adjacency[(v, w)] };
                    if edge > 0.0 && !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Derive every Laplacian-level quantity the controller needs.
    pub fn quantities(&self, rule: QRule) -> Result<GraphQuantities, GraphError> {
        if !self.has_pinning() {
            return Err(GraphError::NoPinning);
        }
        if !self.is_strongly_connected() {
            return Err(GraphError::NotStronglyConnected);
        }
        let n = self.len();
        let in_degree = self.in_degree();
        let laplacian = self.laplacian();
        let pinned = self.pinned_laplacian();
        let ones = DVector::from_element(n, 1.0);

        let q: DVector<f64> = match rule {
            QRule::Inverse => pinned
                .clone()
                .lu()
                .solve(&ones)
                .ok_or(GraphError::SingularPinnedLaplacian)?,
            QRule::Transpose => pinned.transpose() * &ones,
        };
        if let Some((index, &value)) = q.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(GraphError::NonpositiveQ { index, value });
        }
        let q: Vec<f64> = q.iter().copied().collect();
        let m_weights: Vec<f64> = q.iter().map(|v| 1.0 / v).collect();
        let script_m = DMatrix::from_diagonal(&DVector::from_column_slice(&m_weights));
        let mut script_q = &script_m * &pinned + pinned.transpose() * &script_m;
        // exact symmetry; the two products differ only by rounding
        script_q = (&script_q + script_q.transpose()) * 0.5;

        let degree_plus_pinning: Vec<f64> =
            in_degree.iter().zip(&self.pinning).map(|(d, b)| d + b).collect();

        let sigma_min_pinned = linalg::min_singular_value(&pinned);
        let bounds = SigmaBounds {
            adjacency_max: linalg::max_singular_value(&self.adjacency),
            m_weights_max: m_weights.iter().copied().fold(0.0, f64::max),
            m_weights_min: m_weights.iter().copied().fold(f64::INFINITY, f64::min),
            degree_plus_pinning_min: degree_plus_pinning.iter().copied().fold(f64::INFINITY, f64::min),
            script_q_min: linalg::min_singular_value(&script_q),
            pinned_max: linalg::max_singular_value(&pinned),
        };

        Ok(GraphQuantities {
            in_degree,
            degree_plus_pinning,
            laplacian,
            pinned,
            q,
            m_weights,
            script_q,
            sigma_min_pinned,
            bounds,
        })
    }
}

/// Cached spectral bounds used by the gain check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBounds {
    /// σ̄(A)
    pub adjacency_max: f64,
    /// σ̄(𝓜) = max mᵢ
    pub m_weights_max: f64,
    /// σ̲(𝓜) = min mᵢ
    pub m_weights_min: f64,
    /// σ̲(B+D) = min (dᵢ + bᵢ)
    pub degree_plus_pinning_min: f64,
    /// σ̲(Q)
    pub script_q_min: f64,
    /// σ̄(L+B)
    pub pinned_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphQuantities {
    pub in_degree: Vec<f64>,
    /// `dᵢ + bᵢ`, the per-agent scaling in the control and adaptive laws.
    pub degree_plus_pinning: Vec<f64>,
    pub laplacian: DMatrix<f64>,
    pub pinned: DMatrix<f64>,
    pub q: Vec<f64>,
    /// `mᵢ = 1/qᵢ`, the diagonal of 𝓜.
    pub m_weights: Vec<f64>,
    /// `Q = 𝓜(L+B) + (L+B)ᵀ𝓜`.
    pub script_q: DMatrix<f64>,
    pub sigma_min_pinned: f64,
    pub bounds: SigmaBounds,
}

impl GraphQuantities {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Upper bound `‖e‖ / σ̲(L+B)` on the disagreement `‖x¹ − x̲₀¹‖`.
pub fn disagreement_bound(error_norm: f64, gq: &GraphQuantities) -> Result<f64, GraphError> {
    if !(gq.sigma_min_pinned > 0.0) {
        return Err(GraphError::SingularPinnedLaplacian);
    }
    Ok(error_norm / gq.sigma_min_pinned)
}
