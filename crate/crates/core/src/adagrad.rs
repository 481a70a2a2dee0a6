use crate::error::CoreError;
use crate::score::check_len;

/// Step-size settings shared by every parameter row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaGradParams {
    pub learning_rate: f64,
    pub l2: f64,
    pub epsilon: f64,
}

impl Default for AdaGradParams {
    fn default() -> Self {
        Self { learning_rate: 0.1, l2: 0.0, epsilon: 1e-8 }
    }
}

/// AdaGrad update of one parameter row.
///
/// The total gradient is `loss_scale * grad + l2 * theta`; the accumulator
/// gains its square and `theta` moves by `-lr * g / (sqrt(acc) + eps)`.
/// Nothing is written if any component of `g` is non-finite.
pub fn adagrad_step(
    theta: &mut [f64],
    grad: &[f64],
    loss_scale: f64,
    params: &AdaGradParams,
    accum: &mut [f64],
) -> Result<(), CoreError> {
    check_len(theta.len(), grad.len())?;
    check_len(theta.len(), accum.len())?;
    let total = |i: usize| loss_scale * grad[i] + params.l2 * theta[i];
    if !(0..theta.len()).all(|i| total(i).is_finite()) {
        return Err(CoreError::NonFinite);
    }
    for i in 0..theta.len() {
        let g = loss_scale * grad[i] + params.l2 * theta[i];
        accum[i] += g * g;
        theta[i] -= params.learning_rate * g / (libm::sqrt(accum[i]) + params.epsilon);
    }
    Ok(())
}
