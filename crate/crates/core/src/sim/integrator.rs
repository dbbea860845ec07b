//! Classical four-stage Runge–Kutta step.

use super::SimError;

/// One step from `(t, y)`. Stage `s` (1-based) failures are tagged with
/// their stage index.
pub fn rk4_step<F>(mut field: F, y: &[f64], t: f64, h: f64) -> Result<Vec<f64>, SimError>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, SimError>,
{
    let k1 = field(t, y).map_err(|e| e.with_stage(1))?;
    rk4_step_from(field, y, t, h, k1)
}

/// Same as [`rk4_step`] with the first stage already evaluated.
pub fn rk4_step_from<F>(mut field: F, y: &[f64], t: f64, h: f64, k1: Vec<f64>) -> Result<Vec<f64>, SimError>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, SimError>,
{
    if !(h > 0.0) {
        return Err(SimError::InvalidSetting { name: "h", value: h });
    }
    let shifted = |k: &[f64], scale: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + scale * b).collect() };
    let k2 = field(t + 0.5 * h, &shifted(&k1, 0.5 * h)).map_err(|e| e.with_stage(2))?;
    let k3 = field(t + 0.5 * h, &shifted(&k2, 0.5 * h)).map_err(|e| e.with_stage(3))?;
    let k4 = field(t + h, &shifted(&k3, h)).map_err(|e| e.with_stage(4))?;
    let next: Vec<f64> = (0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if next.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFiniteState { t: t + h });
    }
    Ok(next)
}
