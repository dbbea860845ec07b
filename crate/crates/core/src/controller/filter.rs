//! The linear filter behind the metric error: binomial coefficients of
//! `(s + λ)^{M−1}`, their companion matrix Λ and the Lyapunov pair `M`.

use nalgebra::{DMatrix, DVector};

use super::ControllerError;
use crate::linalg;

/// Coefficients `[λ₁, …, λ_{M−1}]` of `(s + λ)^{M−1}`, lowest power first
/// (the leading coefficient 1 is implied).
pub fn filter_coefficients(lambda: f64, order: usize) -> Vec<f64> {
    let n = order.saturating_sub(1);
    // coefficient of s^j in (s + λ)^n is C(n, j)·λ^{n−j}
    (0..n)
        .map(|j| binomial(n, j) * lambda.powi((n - j) as i32))
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Companion matrix with ones on the superdiagonal and `−λ̄` in the last
/// row. Fails unless every eigenvalue has a negative real part.
pub fn companion_matrix(lambda_bar: &[f64]) -> Result<DMatrix<f64>, ControllerError> {
    let n = lambda_bar.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        m[(i, i + 1)] = 1.0;
    }
    for (j, &l) in lambda_bar.iter().enumerate() {
        m[(n - 1, j)] = -l;
    }
    if n > 0 && !is_hurwitz(&m) {
        return Err(ControllerError::NotHurwitz { coefficients: lambda_bar.to_vec() });
    }
    Ok(m)
}

/// Every eigenvalue strictly in the open left half-plane.
///
/// Eigenvalues come from a bounded Schur iteration. If it does not
/// converge, fall back to the Lyapunov test: `A` is Hurwitz iff
/// `AᵀM + MA = −I` has a symmetric positive definite solution.
pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    if m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    if let Some(schur) = m.clone().try_schur(f64::EPSILON, 10_000) {
        return schur.complex_eigenvalues().iter().all(|z| z.re < 0.0);
    }
    match solve_lyapunov(m, 1.0) {
        Ok(sol) => linalg::symmetric_eigenvalues(&sol).first().is_some_and(|&l| l > 0.0),
        Err(_) => false,
    }
}

/// Solve `ΛᵀM + MΛ = −βI` through the vectorized `n² × n²` system.
pub fn solve_lyapunov(lambda: &DMatrix<f64>, beta: f64) -> Result<DMatrix<f64>, ControllerError> {
    let n = lambda.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let lt = lambda.transpose();
    // column-major vec: vec(ΛᵀM) = (I ⊗ Λᵀ) vec M, vec(MΛ) = (Λᵀ ⊗ I) vec M
    let system = eye.kronecker(&lt) + lt.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, (&eye * -beta).iter().copied());
    let solution = system.lu().solve(&rhs).ok_or(ControllerError::SingularLyapunovSystem)?;
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(ControllerError::SingularLyapunovSystem);
    }
    let m = DMatrix::from_column_slice(n, n, solution.as_slice());
    Ok((&m + m.transpose()) * 0.5)
}

/// `‖ΛᵀM + MΛ + βI‖_F`
pub fn lyapunov_residual(lambda: &DMatrix<f64>, m: &DMatrix<f64>, beta: f64) -> f64 {
    let n = lambda.nrows();
    (lambda.transpose() * m + m * lambda + DMatrix::<f64>::identity(n, n) * beta).norm()
}

/// Filter quantities shared by every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterContext {
    /// `λ̄ = [λ₁, …, λ_{M−1}]`
    pub lambda_bar: Vec<f64>,
    /// Λ
    pub companion: DMatrix<f64>,
    /// Solution of the Lyapunov equation.
    pub lyapunov: DMatrix<f64>,
    pub beta: f64,
}

impl FilterContext {
    pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

    pub fn new(lambda_bar: Vec<f64>, beta: f64) -> Result<Self, ControllerError> {
        if !(beta > 0.0) {
            return Err(ControllerError::InvalidParameter { name: "beta", value: beta });
        }
        let companion = companion_matrix(&lambda_bar)?;
        let lyapunov = solve_lyapunov(&companion, beta)?;
        let residual = lyapunov_residual(&companion, &lyapunov, beta);
        if residual > Self::RESIDUAL_TOLERANCE {
            return Err(ControllerError::LyapunovResidual { residual });
        }
        if lyapunov.nrows() > 0 && linalg::symmetric_eigenvalues(&lyapunov)[0] <= 0.0 {
            return Err(ControllerError::SingularLyapunovSystem);
        }
        Ok(FilterContext { lambda_bar, companion, lyapunov, beta })
    }

    /// Binomial filter `(s + λ)^{order−1}`.
    pub fn binomial(lambda: f64, order: usize, beta: f64) -> Result<Self, ControllerError> {
        if !(lambda.is_finite()) {
            return Err(ControllerError::InvalidParameter { name: "lambda", value: lambda });
        }
        Self::new(filter_coefficients(lambda, order), beta)
    }

    /// Filter length `M − 1`.
    pub fn len(&self) -> usize {
        self.lambda_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_bar.is_empty()
    }

    /// The selector `l = [0, …, 0, 1]ᵀ`.
    pub fn selector(&self) -> Vec<f64> {
        let mut l = vec![0.0; self.len()];
        if let Some(last) = l.last_mut() {
            *last = 1.0;
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_coefficients() {
        assert_eq!(filter_coefficients(2.0, 1), Vec::<f64>::new());
        assert_eq!(filter_coefficients(2.0, 2), vec![2.0]);
        assert_eq!(filter_coefficients(1.0, 3), vec![1.0, 2.0]);
        assert_eq!(filter_coefficients(2.0, 4), vec![8.0, 12.0, 6.0]);
    }

    #[test]
    fn scalar_companion() {
        let m = companion_matrix(&[2.0]).unwrap();
        assert_eq!(m, DMatrix::from_element(1, 1, -2.0));
    }

    #[test]
    fn second_order_companion() {
        let m = companion_matrix(&[1.0, 2.0]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -2.0]));
        // s² + 2s + 1 has a double root at −1
        for z in m.try_schur(f64::EPSILON, 10_000).unwrap().complex_eigenvalues().iter() {
            assert!((z.re + 1.0).abs() < 1e-6 && z.im.abs() < 1e-6);
        }
    }

    #[test]
    fn unstable_coefficients_rejected() {
        assert!(matches!(companion_matrix(&[-1.0]), Err(ControllerError::NotHurwitz { .. })));
        assert!(matches!(FilterContext::binomial(-1.0, 3, 1.0), Err(ControllerError::NotHurwitz { .. })));
    }

    #[test]
    fn scalar_lyapunov() {
        let lambda = DMatrix::from_element(1, 1, -3.0);
        let m = solve_lyapunov(&lambda, 1.5).unwrap();
        assert!((m[(0, 0)] - 1.5 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn second_order_lyapunov_residual() {
        let lambda = companion_matrix(&[1.0, 2.0]).unwrap();
        let m = solve_lyapunov(&lambda, 1.0).unwrap();
        assert!(lyapunov_residual(&lambda, &m, 1.0) <= 1e-10);
        assert!(linalg::symmetric_eigenvalues(&m)[0] > 0.0);
    }

    #[test]
    fn lyapunov_is_linear_in_beta() {
        let lambda = companion_matrix(&[1.0, 2.0]).unwrap();
        let m1 = solve_lyapunov(&lambda, 1.0).unwrap();
        let m2 = solve_lyapunov(&lambda, 2.0).unwrap();
        assert!((m2 - m1 * 2.0).norm() < 1e-12);
    }

    #[test]
    fn empty_filter_for_first_order_agents() {
        let f = FilterContext::binomial(2.0, 1, 1.0).unwrap();
        assert!(f.is_empty());
        assert!(f.selector().is_empty());
    }

    #[test]
    fn selector_picks_last_coordinate() {
        let f = FilterContext::binomial(2.0, 4, 1.0).unwrap();
        assert_eq!(f.selector(), vec![0.0, 0.0, 1.0]);
    }
}
