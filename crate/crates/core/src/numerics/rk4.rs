use crate::error::{Error, Result};

/// One classical Runge-Kutta step for `y' = f(t, y)`.
pub fn rk4_step<F>(mut f: F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    try_rk4_step(|t, y| Ok::<_, Error>(f(t, y)), t, y, h)
}

/// RK4 step with a fallible right-hand side. Errors from `f` are returned
/// unchanged; non-finite stage derivatives become [`Error::NonFiniteDerivative`].
pub fn try_rk4_step<F, E>(mut f: F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    E: From<Error>,
{
    if !(h > 0.0) {
        return Err(Error::invalid("h", "step size must be positive").into());
    }
    let check = |k: Vec<f64>, stage: usize| -> Result<Vec<f64>, E> {
        if k.len() != y.len() {
            return Err(Error::DimensionMismatch {
                what: "derivative length",
                expected: y.len(),
                got: k.len(),
            }
            .into());
        }
        if k.iter().all(|v| v.is_finite()) {
            Ok(k)
        } else {
            Err(Error::NonFiniteDerivative { stage }.into())
        }
    };
    let shifted =
        |k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(yi, ki)| yi + c * ki).collect() };

    let k1 = check(f(t, y)?, 1)?;
    let k2 = check(f(t + 0.5 * h, &shifted(&k1, 0.5 * h))?, 2)?;
    let k3 = check(f(t + 0.5 * h, &shifted(&k2, 0.5 * h))?, 3)?;
    let k4 = check(f(t + h, &shifted(&k3, h))?, 4)?;

    Ok((0..y.len())
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}
