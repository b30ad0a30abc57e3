//! Training objective: spectral reconstruction plus latent alignment.
//!
//! The total is `l_spec + lambda * l_join`, computed in exactly that order.
//! `l_spec` is mean squared error over normalized spectral features;
//! `l_join` is a smooth-L1 distance between the two encoder latents,
//! averaged over entries, and contributes only when both latents exist.

use ndarray::Array2;

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.1;
/// Quadratic/linear crossover of the smooth-L1 penalty.
pub const SMOOTH_L1_BETA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l_spec: f64,
    pub l_join: f64,
    pub lambda: f64,
    pub total: f64,
}

pub struct LossGrads {
    pub g_pred: Array2<f64>,
    pub g_s_a: Option<Array2<f64>>,
    pub g_s_e: Option<Array2<f64>>,
}

/// Mean squared error and its gradient with respect to the prediction.
pub fn spectral_loss(pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let n = pred.len() as f64;
    let diff = pred - target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let grad = diff.mapv(|d| 2.0 * d / n);
    Ok((loss, grad))
}

/// Smooth-L1 latent alignment loss and its gradients with respect to both
/// latents (`d = s_a - s_e`).
pub fn latent_loss(
    s_a: &Array2<f64>,
    s_e: &Array2<f64>,
) -> Result<(f64, Array2<f64>, Array2<f64>)> {
    if s_a.dim() != s_e.dim() {
        return Err(Error::Shape(format!(
            "latents disagree: {:?} vs {:?}",
            s_a.dim(),
            s_e.dim()
        )));
    }
    let n = s_a.len() as f64;
    let b = SMOOTH_L1_BETA;
    let mut loss = 0.0;
    let mut g_a = Array2::zeros(s_a.dim());
    for ((la, ga), le) in s_a.iter().zip(g_a.iter_mut()).zip(s_e.iter()) {
        let d = la - le;
        if d.abs() < b {
            loss += 0.5 * d * d / b;
            *ga = d / b / n;
        } else {
            loss += d.abs() - 0.5 * b;
            *ga = d.signum() / n;
        }
    }
    let g_e = g_a.mapv(|g| -g);
    Ok((loss / n, g_a, g_e))
}

/// Full objective. Latent gradients are `None` when `l_join` is inactive.
pub fn compute_loss(
    pred: &Array2<f64>,
    target: &Array2<f64>,
    s_a: Option<&Array2<f64>>,
    s_e: Option<&Array2<f64>>,
    lambda: f64,
) -> Result<(LossBreakdown, LossGrads)> {
    let (l_spec, g_pred) = spectral_loss(pred, target)?;
    let (l_join, g_s_a, g_s_e) = match (s_a, s_e) {
        (Some(a), Some(e)) => {
            let (l, mut ga, mut ge) = latent_loss(a, e)?;
            ga.mapv_inplace(|g| g * lambda);
            ge.mapv_inplace(|g| g * lambda);
            (l, Some(ga), Some(ge))
        }
        _ => (0.0, None, None),
    };
    let total = l_spec + lambda * l_join;
    Ok((
        LossBreakdown {
            l_spec,
            l_join,
            lambda,
            total,
        },
        LossGrads {
            g_pred,
            g_s_a,
            g_s_e,
        },
    ))
}
