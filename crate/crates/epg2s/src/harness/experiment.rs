//! Experiment runners: speech generation from pure EPG and speech
//! enhancement under additive noise, both reported as metric tables with
//! Welch significance tests.
//!
//! Statistical conventions: a "within-SNR" test compares the per-utterance
//! STOI samples of two conditions at one SNR level; a "pooled SNRs" test
//! compares the two conditions' samples concatenated over every SNR level.
//! Both are two-sided Welch t-tests.

use std::fs;
use std::path::PathBuf;

use crate::dsp::{
    denormalize_frames, griffin_lim, mix_at_snr, noise_generator, normalize, stft_mag,
    GriffinLimConfig, NoiseKind, NormStats,
};
use crate::error::{Error, Result};
use crate::harness::report::{pairwise_p, ExperimentTable, SignificanceTest};
use crate::metrics::{estoi, mcd, pesq, stoi, PesqOutcome};
use crate::model::{forward, ModalityBundle, Params};
use crate::signal_io::{save_wav, Corpus, Waveform};
use crate::training::prepare_utterances;

/// A named set of trained parameters. Experiment runners look systems up by
/// name: `pure_epg` / `ef` / `lf` for generation, `baseline` (audio-only) /
/// `ef` / `lf` for enhancement.
#[derive(Debug, Clone)]
pub struct TrainedSystem {
    pub name: String,
    pub params: Params,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub seed: u64,
    pub gla: GriffinLimConfig,
    pub pesq_tool: Option<PathBuf>,
    /// Noise used for evaluation mixtures.
    pub noise_kind: NoiseKind,
    /// When set, every generated/enhanced signal is written under
    /// `<dir>/audio/<condition>/<id>.wav` for listening.
    pub audio_out: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            gla: GriffinLimConfig::default(),
            pesq_tool: None,
            noise_kind: NoiseKind::Babble,
            audio_out: None,
        }
    }
}

pub const DEFAULT_EVAL_SNRS: [f64; 5] = [-10.0, -5.0, 0.0, 5.0, 10.0];

fn find_system<'a>(systems: &'a [TrainedSystem], name: &str) -> Result<&'a TrainedSystem> {
    systems
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Config(format!("missing `{name}` checkpoint")))
}

fn eval_noise_seed(base: u64, snr_index: usize, utt_index: usize) -> u64 {
    base ^ (((snr_index as u64) << 32) | utt_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs the model on one bundle and reconstructs a waveform from the
/// predicted spectrogram.
fn synthesize(
    params: &Params,
    bundle: &ModalityBundle,
    stats: &NormStats,
    gla: &GriffinLimConfig,
) -> Result<(Waveform, crate::dsp::Spectrogram)> {
    let (out, _) = forward(params, bundle)?;
    let spec = denormalize_frames(&out.pred, stats)?;
    let wave = griffin_lim(&spec, gla)?;
    Ok((wave, spec))
}

fn write_audio(opts: &EvalOptions, condition: &str, id: &str, wave: &Waveform) -> Result<()> {
    let Some(base) = &opts.audio_out else {
        return Ok(());
    };
    let dir = base.join("audio").join(condition);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    save_wav(wave, dir.join(format!("{id}.wav")))
}

/// Evaluates the three training settings on pure-EPG test inputs and
/// tabulates intelligibility, spectral distortion against both the clean and
/// a 0 dB noisy reference, segmental SNR, and (when an adapter is
/// configured) PESQ.
pub fn run_generation_experiment(
    corpus: &Corpus,
    systems: &[TrainedSystem],
    opts: &EvalOptions,
) -> Result<ExperimentTable> {
    if corpus.test.is_empty() {
        return Err(Error::Config("test split is empty".into()));
    }
    let names = ["pure_epg", "ef", "lf"];
    let chosen: Vec<&TrainedSystem> = names
        .iter()
        .map(|n| find_system(systems, n))
        .collect::<Result<_>>()?;
    let stats = &corpus.norm_stats;
    let test = prepare_utterances(&corpus.test, stats)?;

    let metrics = ["stoi", "estoi", "mcd_clean", "mcd_noisy", "ssnr", "pesq"];
    let mut values =
        vec![vec![Vec::with_capacity(test.len()); metrics.len()]; chosen.len()];
    for (ui, (pair, utt)) in corpus.test.iter().zip(&test).enumerate() {
        let clean_spec = stft_mag(&pair.clean)?;
        let noise = noise_generator(opts.noise_kind, eval_noise_seed(opts.seed, 0, ui), pair.clean.len());
        let (noisy_ref, _) = mix_at_snr(&pair.clean, &noise, 0.0)?;
        let noisy_spec = stft_mag(&noisy_ref)?;
        for (si, system) in chosen.iter().enumerate() {
            let bundle = ModalityBundle::new(Some(utt.epg.clone()), None)?;
            let gla = GriffinLimConfig {
                seed: opts.gla.seed ^ ui as u64,
                ..opts.gla
            };
            let (wave, spec) = synthesize(&system.params, &bundle, stats, &gla)?;
            write_audio(opts, &system.name, &pair.id, &wave)?;
            values[si][0].push(stoi(&pair.clean, &wave)?);
            values[si][1].push(estoi(&pair.clean, &wave)?);
            values[si][2].push(mcd(&clean_spec, &spec)?);
            values[si][3].push(mcd(&noisy_spec, &spec)?);
            values[si][4].push(crate::metrics::ssnr(&pair.clean, &wave)?);
            if opts.pesq_tool.is_some() {
                match pesq(opts.pesq_tool.as_deref(), &pair.clean, &wave)? {
                    PesqOutcome::Score(s) => values[si][5].push(s),
                    PesqOutcome::Unavailable => {}
                }
            }
        }
    }
    ExperimentTable::new(
        "generation from pure EPG",
        names.iter().map(|s| s.to_string()).collect(),
        metrics.iter().map(|s| s.to_string()).collect(),
        values,
        0,
    )
}

struct SnrRows {
    labels: Vec<String>,
    /// `[row][col][utterance]`; last row pools all SNRs.
    values: Vec<Vec<Vec<f64>>>,
}

fn with_average(labels: Vec<String>, per_snr: Vec<Vec<Vec<f64>>>, n_cols: usize) -> SnrRows {
    let mut labels = labels;
    labels.push("average".into());
    let mut pooled = vec![Vec::new(); n_cols];
    for row in &per_snr {
        for (c, cell) in row.iter().enumerate() {
            pooled[c].extend_from_slice(cell);
        }
    }
    let mut values = per_snr;
    values.push(pooled);
    SnrRows { labels, values }
}

/// Evaluates enhancement across SNR levels. Returns the baseline comparison
/// table (unprocessed noisy and audio-only baseline against the late-fusion
/// system) and the fusion comparison table (early against late fusion).
pub fn run_enhancement_experiment(
    corpus: &Corpus,
    systems: &[TrainedSystem],
    snr_list: &[f64],
    opts: &EvalOptions,
) -> Result<(ExperimentTable, ExperimentTable)> {
    if corpus.test.is_empty() {
        return Err(Error::Config("test split is empty".into()));
    }
    if snr_list.is_empty() {
        return Err(Error::Config("SNR list is empty".into()));
    }
    let baseline = find_system(systems, "baseline")?;
    let ef = find_system(systems, "ef")?;
    let lf = find_system(systems, "lf")?;
    let stats = &corpus.norm_stats;
    let test = prepare_utterances(&corpus.test, stats)?;

    // per SNR: noisy/baseline/ef/lf x stoi/estoi
    let mut noisy_v = Vec::new();
    let mut base_v = Vec::new();
    let mut ef_v = Vec::new();
    let mut lf_v = Vec::new();
    for (si, &snr) in snr_list.iter().enumerate() {
        let mut row = [(); 4].map(|_| [Vec::new(), Vec::new()]);
        for (ui, (pair, utt)) in corpus.test.iter().zip(&test).enumerate() {
            let noise = noise_generator(
                opts.noise_kind,
                eval_noise_seed(opts.seed, si + 1, ui),
                pair.clean.len(),
            );
            let (noisy, _) = mix_at_snr(&pair.clean, &noise, snr)?;
            let noisy_feat = normalize(&stft_mag(&noisy)?, stats)?.feat;
            row[0][0].push(stoi(&pair.clean, &noisy)?);
            row[0][1].push(estoi(&pair.clean, &noisy)?);
            for (k, (system, with_epg)) in
                [(baseline, false), (ef, true), (lf, true)].iter().enumerate()
            {
                let epg = with_epg.then(|| utt.epg.clone());
                let bundle = ModalityBundle::new(epg, Some(noisy_feat.clone()))?;
                let gla = GriffinLimConfig {
                    seed: opts.gla.seed ^ eval_noise_seed(1, si, ui),
                    ..opts.gla
                };
                let (wave, _) = synthesize(&system.params, &bundle, stats, &gla)?;
                write_audio(
                    opts,
                    &format!("{}_snr{}", system.name, snr),
                    &pair.id,
                    &wave,
                )?;
                row[k + 1][0].push(stoi(&pair.clean, &wave)?);
                row[k + 1][1].push(estoi(&pair.clean, &wave)?);
            }
        }
        let [n, b, e, l] = row;
        noisy_v.push(n);
        base_v.push(b);
        ef_v.push(e);
        lf_v.push(l);
    }

    let labels: Vec<String> = snr_list.iter().map(|s| format!("{s} dB")).collect();

    // baseline table: unprocessed + audio-only baseline + late fusion
    let per_snr: Vec<Vec<Vec<f64>>> = (0..snr_list.len())
        .map(|i| {
            vec![
                noisy_v[i][0].clone(),
                noisy_v[i][1].clone(),
                base_v[i][0].clone(),
                base_v[i][1].clone(),
                lf_v[i][0].clone(),
                lf_v[i][1].clone(),
            ]
        })
        .collect();
    let rows = with_average(labels.clone(), per_snr, 6);
    let mut baseline_table = ExperimentTable::new(
        "enhancement vs unprocessed and audio-only baseline",
        rows.labels,
        [
            "noisy_stoi",
            "noisy_estoi",
            "baseline_stoi",
            "baseline_estoi",
            "lf_stoi",
            "lf_estoi",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        rows.values,
        4,
    )?;
    for (i, label) in labels.iter().enumerate() {
        baseline_table.tests.push(SignificanceTest {
            label: format!("lf vs noisy stoi @ {label}"),
            p: pairwise_p(&lf_v[i][0], &noisy_v[i][0]),
        });
        baseline_table.tests.push(SignificanceTest {
            label: format!("lf vs baseline stoi @ {label}"),
            p: pairwise_p(&lf_v[i][0], &base_v[i][0]),
        });
    }
    let pool = |v: &[[Vec<f64>; 2]], c: usize| -> Vec<f64> {
        v.iter().flat_map(|r| r[c].iter().copied()).collect()
    };
    baseline_table.tests.push(SignificanceTest {
        label: "lf vs noisy stoi, pooled SNRs".into(),
        p: pairwise_p(&pool(&lf_v, 0), &pool(&noisy_v, 0)),
    });
    baseline_table.tests.push(SignificanceTest {
        label: "lf vs baseline stoi, pooled SNRs".into(),
        p: pairwise_p(&pool(&lf_v, 0), &pool(&base_v, 0)),
    });

    // fusion table: early vs late fusion
    let per_snr: Vec<Vec<Vec<f64>>> = (0..snr_list.len())
        .map(|i| {
            vec![
                ef_v[i][0].clone(),
                ef_v[i][1].clone(),
                lf_v[i][0].clone(),
                lf_v[i][1].clone(),
            ]
        })
        .collect();
    let rows = with_average(labels.clone(), per_snr, 4);
    let mut fusion_table = ExperimentTable::new(
        "early fusion vs late fusion",
        rows.labels,
        ["ef_stoi", "ef_estoi", "lf_stoi", "lf_estoi"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows.values,
        2,
    )?;
    for (i, label) in labels.iter().enumerate() {
        fusion_table.tests.push(SignificanceTest {
            label: format!("lf vs ef stoi @ {label}"),
            p: pairwise_p(&lf_v[i][0], &ef_v[i][0]),
        });
    }
    fusion_table.tests.push(SignificanceTest {
        label: "lf vs ef stoi, pooled SNRs".into(),
        p: pairwise_p(&pool(&lf_v, 0), &pool(&ef_v, 0)),
    });

    Ok((baseline_table, fusion_table))
}

/// Per-utterance STOI/ESTOI of unprocessed noisy mixtures for one fixed
/// utterance across an SNR ladder (used by trend checks and smoke reports).
pub fn unprocessed_ladder(
    clean: &Waveform,
    snr_list: &[f64],
    noise_kind: NoiseKind,
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>> {
    let noise = noise_generator(noise_kind, seed, clean.len());
    snr_list
        .iter()
        .map(|&snr| {
            let (noisy, _) = mix_at_snr(clean, &noise, snr)?;
            Ok((snr, stoi(clean, &noisy)?, estoi(clean, &noisy)?))
        })
        .collect()
}
