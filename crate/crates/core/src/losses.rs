//! First-stage training objective components as standalone calculators.
//!
//! Everything here follows the minimization sign convention: the composite
//! objective is reconstruction + weighted KL + weighted adversarial terms,
//! all to be driven down.

use crate::error::{Error, Result};
use crate::rangeops::FeatureMap;

/// Diagonal Gaussian posterior over a latent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        if mean.len() != log_var.len() {
            return Err(Error::DimensionMismatch {
                left: mean.len(),
                right: log_var.len(),
            });
        }
        if mean.iter().chain(&log_var).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStats);
        }
        Ok(Self { mean, log_var })
    }

    /// Standard normal of the given dimension.
    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            log_var: vec![0.0; dim],
        }
    }
}

/// Mean absolute difference over all elements.
pub fn l1_reconstruction(x: &FeatureMap, x_hat: &FeatureMap) -> Result<f64> {
    if (x.height, x.width, x.channels) != (x_hat.height, x_hat.width, x_hat.channels) {
        return Err(Error::ShapeMismatch {
            expected: vec![x.height, x.width, x.channels],
            actual: vec![x_hat.height, x_hat.width, x_hat.channels],
        });
    }
    let n = x.data.len().max(1);
    Ok(x.data
        .iter()
        .zip(&x_hat.data)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / n as f64)
}

/// KL divergence from a diagonal Gaussian to the standard normal:
/// `0.5 * sum(exp(log_var) + mean^2 - 1 - log_var)`.
pub fn kl_to_standard_normal(q: &DiagonalGaussian) -> f64 {
    0.5 * q
        .mean
        .iter()
        .zip(&q.log_var)
        .map(|(m, lv)| lv.exp() + m * m - 1.0 - lv)
        .sum::<f64>()
}

/// Hinge discriminator loss:
/// `mean(max(0, 1 - real)) + mean(max(0, 1 + fake))`.
pub fn hinge_d_loss(real_scores: &[f64], fake_scores: &[f64]) -> Result<f64> {
    if real_scores.is_empty() || fake_scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let real = real_scores.iter().map(|s| (1.0 - s).max(0.0)).sum::<f64>()
        / real_scores.len() as f64;
    let fake = fake_scores.iter().map(|s| (1.0 + s).max(0.0)).sum::<f64>()
        / fake_scores.len() as f64;
    Ok(real + fake)
}

/// Hinge generator loss: `-mean(fake_scores)`.
pub fn hinge_g_loss(fake_scores: &[f64]) -> Result<f64> {
    if fake_scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(-fake_scores.iter().sum::<f64>() / fake_scores.len() as f64)
}

/// Composite first-stage objective (minimized):
/// `l1 + lambda1 * kl + lambda2 * hinge_g`.
///
/// The defaults `lambda1 = 1e-6`, `lambda2 = 0.5` are conventional for
/// latent autoencoders, not fitted values.
pub const DEFAULT_KL_WEIGHT: f64 = 1e-6;
pub const DEFAULT_ADVERSARIAL_WEIGHT: f64 = 0.5;

pub fn first_stage_objective(
    x: &FeatureMap,
    x_hat: &FeatureMap,
    q: &DiagonalGaussian,
    fake_scores: &[f64],
    lambda1: f64,
    lambda2: f64,
) -> Result<f64> {
    Ok(l1_reconstruction(x, x_hat)?
        + lambda1 * kl_to_standard_normal(q)
        + lambda2 * hinge_g_loss(fake_scores)?)
}
