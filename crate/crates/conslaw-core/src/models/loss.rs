//! Sample losses: value and gradient with respect to the network output.

use alloc::vec::Vec;

use super::LossKind;
use crate::error::Result;
use crate::invalid_input;
use crate::rmath;

/// Returns (ℓ(z, y), ∇_z ℓ(z, y)).
pub(crate) fn loss_and_grad_z(kind: LossKind, z: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    if z.len() != y.len() {
        return Err(invalid_input!("loss: output dim {} vs target dim {}", z.len(), y.len()));
    }
    match kind {
        LossKind::Euclidean => {
            let mut val = 0.0;
            let grad: Vec<f64> = z
                .iter()
                .zip(y)
                .map(|(&zi, &yi)| {
                    let d = zi - yi;
                    val += 0.5 * d * d;
                    d
                })
                .collect();
            Ok((val, grad))
        }
        LossKind::KlCrossEntropy => {
            let mut val = 0.0;
            let mut grad = Vec::with_capacity(z.len());
            for (&zi, &yi) in z.iter().zip(y) {
                if zi <= 0.0 {
                    return Err(invalid_input!(
                        "kl_cross_entropy requires strictly positive outputs, got {zi}"
                    ));
                }
                if yi < 0.0 {
                    return Err(invalid_input!(
                        "kl_cross_entropy requires nonnegative targets, got {yi}"
                    ));
                }
                // y log(y/z) − y + z, with 0·log 0 = 0.
                if yi > 0.0 {
                    val += yi * rmath::ln(yi / zi) - yi + zi;
                } else {
                    val += zi;
                }
                grad.push(1.0 - yi / zi);
            }
            Ok((val, grad))
        }
    }
}
