//! Numerical verification of the analytic gradients.
//!
//! The full objective (forward graph + loss) is treated as a scalar function
//! of the flat parameter vector; its analytic gradient is compared against
//! central finite differences at a random sample of coordinates.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{backward, forward, ModalityBundle, Params};
use crate::training::loss::compute_loss;

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub n_checked: usize,
    /// Coordinates excluded because the objective is locally non-smooth at
    /// the finite-difference scale (a leaky-ReLU kink between the two
    /// evaluation points), where central differences are not a valid oracle.
    pub n_skipped: usize,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
}

fn objective(
    params: &mut Params,
    flat: &[f64],
    bundle: &ModalityBundle,
    target: &Array2<f64>,
    lambda: f64,
) -> Result<(f64, Vec<bool>)> {
    params.unflatten(flat);
    let (out, cache) = forward(params, bundle)?;
    let (breakdown, _) = compute_loss(
        &out.pred,
        target,
        out.s_a.as_ref(),
        out.s_e.as_ref(),
        lambda,
    )?;
    Ok((breakdown.total, cache.activation_signs()))
}

/// Checks `n_samples` randomly chosen coordinates of the gradient with
/// central differences of width `2 * fd_step`.
///
/// The relative error of a coordinate is its absolute error divided by the
/// largest of the two values and the infinity norm of the analytic gradient,
/// so coordinates whose true gradient is near zero are judged against the
/// gradient's overall scale instead of inflating the ratio.
///
/// Central differences assume the objective is smooth between the two
/// evaluation points. Piecewise-linear activations break that assumption
/// when a perturbation pushes a pre-activation across zero, so coordinates
/// whose two evaluations show different activation sign patterns are skipped
/// and counted in `n_skipped`; sampling continues until `n_samples` smooth
/// coordinates have been verified.
pub fn gradient_check(
    params: &Params,
    bundle: &ModalityBundle,
    target: &Array2<f64>,
    lambda: f64,
    n_samples: usize,
    fd_step: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    if n_samples == 0 {
        return Err(Error::Value("n_samples must be >= 1".into()));
    }
    let (out, cache) = forward(params, bundle)?;
    let (_, grads_at) = compute_loss(
        &out.pred,
        target,
        out.s_a.as_ref(),
        out.s_e.as_ref(),
        lambda,
    )?;
    let mut grads = params.zeros_like();
    backward(
        params,
        &cache,
        &grads_at.g_pred,
        grads_at.g_s_a.as_ref(),
        grads_at.g_s_e.as_ref(),
        &mut grads,
    );
    let analytic = grads.flatten();

    let base = params.flatten();
    let mut scratch = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let scale = analytic
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    let mut flat = base.clone();
    let mut max_rel = 0.0f64;
    let mut sum_rel = 0.0f64;
    let mut n_checked = 0usize;
    let mut n_skipped = 0usize;
    let max_attempts = 8 * n_samples;
    for _ in 0..max_attempts {
        if n_checked >= n_samples {
            break;
        }
        let i = rng.random_range(0..base.len());
        flat[i] = base[i] + fd_step;
        let (up, signs_up) = objective(&mut scratch, &flat, bundle, target, lambda)?;
        flat[i] = base[i] - fd_step;
        let (down, signs_down) = objective(&mut scratch, &flat, bundle, target, lambda)?;
        flat[i] = base[i];
        if signs_up != signs_down {
            n_skipped += 1;
            continue;
        }
        let numeric = (up - down) / (2.0 * fd_step);
        let denom = analytic[i].abs().max(numeric.abs()).max(scale);
        let rel = (analytic[i] - numeric).abs() / denom;
        max_rel = max_rel.max(rel);
        sum_rel += rel;
        n_checked += 1;
    }
    if n_checked == 0 {
        return Err(Error::Value(
            "every sampled coordinate straddled a kink; nothing verified".into(),
        ));
    }
    Ok(GradCheckReport {
        n_checked,
        n_skipped,
        max_rel_err: max_rel,
        mean_rel_err: sum_rel / n_checked as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::BINS;
    use crate::model::{init_params, MissingLatentPolicy, ModelConfig, Variant};
    use crate::signal_io::NUM_ELECTRODES;

    fn check_variant(cfg: &ModelConfig, epg: bool, audio: bool, seed: u64) -> GradCheckReport {
        let params = init_params(cfg, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let t_len = 4;
        let e = epg.then(|| {
            Array2::from_shape_fn((t_len, NUM_ELECTRODES), |_| {
                if rng.random_bool(0.3) {
                    1.0
                } else {
                    0.0
                }
            })
        });
        let a = audio.then(|| Array2::from_shape_fn((t_len, BINS), |_| rng.random_range(-1.0..1.0)));
        let bundle = ModalityBundle::new(e, a).unwrap();
        let target = Array2::from_shape_fn((t_len, BINS), |_| rng.random_range(-1.0..1.0));
        gradient_check(&params, &bundle, &target, 0.1, 60, 1e-3, seed).unwrap()
    }

    #[test]
    fn lf_gradients_match_finite_differences() {
        let cfg = ModelConfig::with_scale(Variant::Lf, 16);
        let r = check_variant(&cfg, true, true, 3);
        assert!(r.n_checked >= 40);
        assert!(r.max_rel_err < 1e-4, "max rel err {}", r.max_rel_err);
    }

    #[test]
    fn ef_gradients_match_finite_differences() {
        let cfg = ModelConfig::with_scale(Variant::Ef, 16);
        let r = check_variant(&cfg, true, true, 5);
        assert!(r.max_rel_err < 1e-4, "max rel err {}", r.max_rel_err);
    }

    #[test]
    fn pure_epg_gradients_match_finite_differences() {
        let cfg = ModelConfig::with_scale(Variant::PureEpg, 16);
        let r = check_variant(&cfg, true, false, 7);
        assert!(r.max_rel_err < 1e-4, "max rel err {}", r.max_rel_err);
    }

    #[test]
    fn substitution_policy_gradients_match_finite_differences() {
        let mut cfg = ModelConfig::with_scale(Variant::Lf, 16);
        cfg.missing_latent = MissingLatentPolicy::Substitute;
        // EPG only: s_E is copied into the audio slot, so its gradient gets
        // contributions from both halves of the decoder input
        let r = check_variant(&cfg, true, false, 11);
        assert!(r.max_rel_err < 1e-4, "max rel err {}", r.max_rel_err);
    }
}


