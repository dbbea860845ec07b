//! Small dense linear algebra helpers. Every matrix in this crate is at most
//! a few dozen rows, so the routines favour robustness over speed.

use nalgebra::DMatrix;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// ascending. Only the upper triangle is read.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    assert!(a.is_square(), "symmetric_eigenvalues needs a square matrix");
    let n = a.nrows();
    let mut m = a.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            m[(j, i)] = m[(i, j)];
        }
    }

    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return vec![0.0; n];
    }

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off.sqrt() <= 1e-300_f64.max(f64::EPSILON * 1e-3 * scale) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

/// Singular values (ascending) through the eigenvalues of `MᵀM`.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let gram = m.transpose() * m;
    symmetric_eigenvalues(&gram)
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect()
}

/// Smallest singular value; 0 for a singular input.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Largest singular value (spectral norm).
pub fn max_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Build a matrix from row vectors. Returns `None` when rows are ragged.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Euclidean norm of a slice.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Infinity norm of a slice.
pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_singular_values() {
        let m = DMatrix::<f64>::identity(3, 3);
        assert!((min_singular_value(&m) - 1.0).abs() < 1e-14);
        assert!((max_singular_value(&m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_min_singular_value() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0]));
        assert!((min_singular_value(&m) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_by_two_matches_quadratic_formula() {
        // MᵀM = [[5,-3],[-3,2]]; eigenvalues (7 ± sqrt(45)) / 2.
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0]);
        let trace = 7.0_f64;
        let det = 1.0_f64;
        let lo = (trace - (trace * trace - 4.0 * det).sqrt()) / 2.0;
        let expected = lo.sqrt();
        let got = min_singular_value(&m);
        assert!(((got - expected) / expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // Tridiagonal [-1, 2, -1] of size 4 has eigenvalues 2 - 2cos(kπ/5).
        let n = 4;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let eig = symmetric_eigenvalues(&m);
        for (k, got) in eig.iter().enumerate() {
            let want = 2.0 - 2.0 * (((k + 1) as f64) * std::f64::consts::PI / 5.0).cos();
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix() {
        let m = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(min_singular_value(&m), 0.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_none());
    }
}
