use crate::error::{Error, Result};

/// Gradient of a scalar loss with respect to every trainable parameter, in the
/// owning model's canonical parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient(pub Vec<f64>);

impl ParamGradient {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// A scalar functional of a flat parameter vector with an analytic gradient.
pub trait Objective {
    fn num_params(&self) -> usize;

    fn value(&self, params: &[f64]) -> Result<f64>;

    fn value_and_gradient(&self, params: &[f64]) -> Result<(f64, ParamGradient)>;

    /// `value(plus) − value(minus)`. Objectives that can evaluate beyond
    /// `f64` precision override this so finite differences keep their digits.
    fn difference(&self, plus: &[f64], minus: &[f64]) -> Result<f64> {
        Ok(self.value(plus)? - self.value(minus)?)
    }
}

/// `∂L/∂θ` at `params`, rejecting non-finite intermediates.
pub fn loss_gradient<O: Objective + ?Sized>(loss: &O, params: &[f64]) -> Result<ParamGradient> {
    if params.len() != loss.num_params() {
        return Err(Error::DimensionMismatch {
            expected: loss.num_params(),
            got: params.len(),
        });
    }
    let (value, grad) = loss.value_and_gradient(params)?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            term: "total".into(),
            index: 0,
        });
    }
    if let Some(i) = grad.0.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            term: "gradient".into(),
            index: i,
        });
    }
    Ok(grad)
}

/// Central-difference gradient of `loss` with step `step`.
pub fn central_difference<O: Objective + ?Sized>(
    loss: &O,
    params: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    let mut up = params.to_vec();
    let mut down = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        up[i] = params[i] + step;
        down[i] = params[i] - step;
        out.push(loss.difference(&up, &down)? / (2.0 * step));
        up[i] = params[i];
        down[i] = params[i];
    }
    Ok(out)
}

/// Per-component discrepancy between an analytic and a numeric gradient.
pub fn relative_discrepancy(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

/// Maximum over parameters of `|g − g_fd| / max(|g|, |g_fd|, 1e-12)`.
pub fn check_gradient_fd<O: Objective + ?Sized>(
    loss: &O,
    params: &[f64],
    step: f64,
) -> Result<f64> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Config(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let analytic = loss_gradient(loss, params)?;
    let numeric = central_difference(loss, params, step)?;
    Ok(analytic
        .0
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_discrepancy(a, n))
        .fold(0.0, f64::max))
}
