use crate::sampler::Label;

/// `-log σ(yφ)`, evaluated as `log(1 + exp(-yφ))` without overflow.
pub fn logistic_loss(phi: f64, label: Label) -> f64 {
    let z = label.sign() * phi;
    if z > 0.0 {
        libm::log1p(libm::exp(-z))
    } else {
        -z + libm::log1p(libm::exp(z))
    }
}

/// Numerically stable logistic sigmoid.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// `dℓ/dφ = -y σ(-yφ)`, the factor applied to `∂φ/∂θ` in the chain rule.
pub fn loss_grad_scale(phi: f64, label: Label) -> f64 {
    let y = label.sign();
    -y * sigmoid(-y * phi)
}
