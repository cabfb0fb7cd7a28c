//! Fourth-order central finite differences.

use crate::error::Result;

/// Step `eps^{1/5} * max(1, |x|)`, balancing truncation against rounding for
/// the five-point stencil.
pub fn step_for(x: f64) -> f64 {
    f64::EPSILON.powf(0.2) * x.abs().max(1.0)
}

/// Rounding bound on a [`central4`] derivative of a function of size
/// `magnitude`: `(1 + 8 + 8 + 1) / 12` stencil weight times `ulps` units of
/// roundoff per evaluation, over the step.
pub fn rounding_floor(magnitude: f64, x: f64, ulps: f64) -> f64 {
    1.5 * ulps * f64::EPSILON * magnitude.abs() / step_for(x)
}

/// `[f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)] / (12 h)`, componentwise.
pub fn central4<const K: usize>(
    mut f: impl FnMut(f64) -> Result<[f64; K]>,
    x: f64,
    h: f64,
) -> Result<[f64; K]> {
    let m2 = f(x - 2.0 * h)?;
    let m1 = f(x - h)?;
    let p1 = f(x + h)?;
    let p2 = f(x + 2.0 * h)?;
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] = (m2[k] - 8.0 * m1[k] + 8.0 * p1[k] - p2[k]) / (12.0 * h);
    }
    Ok(out)
}

/// Scalar form of [`central4`] with the default step.
pub fn derivative(mut f: impl FnMut(f64) -> Result<f64>, x: f64) -> Result<f64> {
    central4(|t| f(t).map(|v| [v]), x, step_for(x)).map(|[d]| d)
}
