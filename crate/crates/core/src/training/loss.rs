use crate::encoding::MaskedTarget;
use crate::error::{Error, Result};

/// Probabilities are clipped to `[EPS, 1 - EPS]` before taking logs.
pub const EPS: f64 = 1e-7;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - top).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn check_len(probs: &[f64], target: &MaskedTarget) -> Result<()> {
    if probs.len() != target.len() {
        return Err(Error::LengthMismatch {
            expected: target.len(),
            actual: probs.len(),
        });
    }
    Ok(())
}

/// Binary cross-entropy summed over the masked components.
pub fn masked_bce_loss(probs: &[f64], target: &MaskedTarget) -> Result<f64> {
    check_len(probs, target)?;
    let loss = probs
        .iter()
        .zip(&target.targets)
        .zip(&target.mask)
        .filter(|(_, &m)| m == 1)
        .map(|((&p, &e), _)| {
            let p = p.clamp(EPS, 1.0 - EPS);
            if e == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(loss)
}

/// Gradient of [`masked_bce_loss`] with respect to the logits, given
/// `probs = sigmoid(logits)`: `mask * (p - e)`.
pub fn masked_bce_grad(probs: &[f64], target: &MaskedTarget) -> Result<Vec<f64>> {
    check_len(probs, target)?;
    Ok(probs
        .iter()
        .zip(&target.targets)
        .zip(&target.mask)
        .map(|((&p, &e), &m)| if m == 1 { p - f64::from(e) } else { 0.0 })
        .collect())
}

/// Cross-entropy of a softmax distribution against class `label`.
pub fn softmax_ce_loss(probs: &[f64], label: usize) -> f64 {
    -probs[label].clamp(EPS, 1.0).ln()
}

/// Gradient of the softmax cross-entropy with respect to the logits.
pub fn softmax_ce_grad(probs: &[f64], label: usize) -> Vec<f64> {
    let mut g = probs.to_vec();
    g[label] -= 1.0;
    g
}
