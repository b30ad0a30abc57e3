//! Command-line front end: synthetic corpus generation, training the three
//! fusion variants plus an audio-only baseline, running the generation and
//! enhancement experiments, and re-rendering reports from stored
//! per-utterance values.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use epg2s::dsp::GriffinLimConfig;
use epg2s::harness::{
    emit_per_utterance, emit_report, run_enhancement_experiment, run_generation_experiment,
    tables_from_per_utterance, EvalOptions, ExperimentTable, ReportFormat, TrainedSystem,
};
use epg2s::model::{
    init_params, load_checkpoint, save_checkpoint, Dtype, MissingLatentPolicy, ModelConfig,
    Variant,
};
use epg2s::signal_io::{
    build_corpus, save_epg_file, save_wav, synth_corpus, Corpus, SyntheticSpec,
    DEFAULT_SPLIT_RATIOS,
};
use epg2s::training::{prepare_utterances, TrainConfig, Trainer};
use epg2s::{Error, Result};

#[derive(Parser)]
#[command(name = "epg2s", version, about = "EPG-to-speech generation and enhancement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Markdown,
    Delimited,
}

impl Format {
    fn report_format(self) -> ReportFormat {
        match self {
            Format::Markdown => ReportFormat::Markdown,
            Format::Delimited => ReportFormat::Delimited,
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Format::Markdown => "md",
            Format::Delimited => "tsv",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic EPG/speech corpus on disk.
    SynthData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        n_utterances: usize,
        #[arg(long, default_value_t = 1.0)]
        min_duration: f64,
        #[arg(long, default_value_t = 2.0)]
        max_duration: f64,
        #[arg(long, default_value_t = 4)]
        n_states: usize,
        #[arg(long, default_value_t = 100.0)]
        epg_rate: f64,
    },
    /// Train one system and write its checkpoint and trainer state.
    Train {
        /// Corpus manifest (`id,epg_path,wav_path` lines).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional `train.*` / `model.*` key=value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Model variant; overrides the config file.
        #[arg(long)]
        variant: Option<String>,
        /// System name used for output files; defaults to the variant name.
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        size_scale: Option<usize>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        steps_per_epoch: Option<usize>,
        /// Train on noisy audio only (no EPG); used for the enhancement
        /// baseline.
        #[arg(long)]
        audio_only: bool,
        /// Substitute the present latent for a missing one (late fusion).
        #[arg(long)]
        latent_substitution: bool,
        /// Seed for the corpus split shuffle.
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Generate speech from pure EPG with the three trained variants and
    /// report metrics.
    Generate {
        #[arg(long)]
        data: PathBuf,
        /// Directory holding `pure_epg.ckpt`, `ef.ckpt`, `lf.ckpt`.
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        gla_iters: usize,
        #[arg(long)]
        pesq_tool: Option<PathBuf>,
        #[arg(long)]
        latent_substitution: bool,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Enhance noisy speech across SNR levels and report metrics.
    Enhance {
        #[arg(long)]
        data: PathBuf,
        /// Directory holding `baseline.ckpt`, `ef.ckpt`, `lf.ckpt`.
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        gla_iters: usize,
        #[arg(long)]
        pesq_tool: Option<PathBuf>,
        #[arg(long)]
        latent_substitution: bool,
        #[arg(long, value_delimiter = ',', default_values_t = [-10.0, -5.0, 0.0, 5.0, 10.0])]
        snr: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Run both experiments and write one combined report.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        /// Directory holding all four checkpoints.
        #[arg(long)]
        checkpoints: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        gla_iters: usize,
        #[arg(long)]
        pesq_tool: Option<PathBuf>,
        #[arg(long)]
        latent_substitution: bool,
        #[arg(long, value_delimiter = ',', default_values_t = [-10.0, -5.0, 0.0, 5.0, 10.0])]
        snr: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
    },
    /// Re-render a report from a stored per-utterance value file.
    Report {
        #[arg(long)]
        per_utterance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
    },
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn synth_data(
    out: &Path,
    seed: u64,
    n_utterances: usize,
    duration_range_s: (f64, f64),
    n_states: usize,
    epg_rate_hz: f64,
) -> Result<()> {
    let spec = SyntheticSpec {
        seed,
        n_utterances,
        duration_range_s,
        n_states,
        epg_rate_hz,
        ..SyntheticSpec::default()
    };
    let corpus = synth_corpus(&spec)?;
    let epg_dir = out.join("epg");
    let wav_dir = out.join("wav");
    fs::create_dir_all(&epg_dir).map_err(|e| Error::io(&epg_dir, e))?;
    fs::create_dir_all(&wav_dir).map_err(|e| Error::io(&wav_dir, e))?;
    let mut pairs: Vec<_> = corpus
        .train
        .iter()
        .chain(&corpus.validation)
        .chain(&corpus.test)
        .collect();
    pairs.sort_by(|a, b| a.id.cmp(&b.id));
    let mut manifest = String::new();
    for pair in pairs {
        save_epg_file(&pair.epg, epg_dir.join(format!("{}.csv", pair.id)))?;
        save_wav(&pair.clean, wav_dir.join(format!("{}.wav", pair.id)))?;
        manifest.push_str(&format!("{0},epg/{0}.csv,wav/{0}.wav\n", pair.id));
    }
    write_text(&out.join("manifest.csv"), &manifest)?;
    println!("wrote {n_utterances} utterances under {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    data: &Path,
    out: &Path,
    config: Option<&Path>,
    variant: Option<&str>,
    name: Option<&str>,
    seed: Option<u64>,
    size_scale: Option<usize>,
    max_epochs: Option<usize>,
    steps_per_epoch: Option<usize>,
    audio_only: bool,
    latent_substitution: bool,
    split_seed: u64,
) -> Result<()> {
    let text = match config {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        None => String::new(),
    };
    let mut train_cfg = TrainConfig::from_kv(&text)?;
    let mut model_cfg = ModelConfig::from_kv(&text)?;
    if let Some(v) = variant {
        model_cfg.variant = v.parse()?;
    }
    if let Some(s) = size_scale {
        model_cfg.size_scale = s;
    }
    if latent_substitution {
        model_cfg.missing_latent = MissingLatentPolicy::Substitute;
    }
    model_cfg.validate()?;
    if let Some(s) = seed {
        train_cfg.seed = s;
    }
    if let Some(e) = max_epochs {
        train_cfg.max_epochs = e;
    }
    if let Some(s) = steps_per_epoch {
        train_cfg.steps_per_epoch = Some(s);
    }
    if audio_only {
        train_cfg.combo_probs = [0.0, 1.0, 0.0];
    }
    if model_cfg.variant == Variant::PureEpg {
        train_cfg.combo_probs = [1.0, 0.0, 0.0];
    }
    let name = name
        .map(str::to_string)
        .unwrap_or_else(|| {
            if audio_only {
                "baseline".into()
            } else {
                model_cfg.variant.name().into()
            }
        });

    let corpus = build_corpus(data, DEFAULT_SPLIT_RATIOS, split_seed)?;
    let train_set = prepare_utterances(&corpus.train, &corpus.norm_stats)?;
    let val_pairs = if corpus.validation.is_empty() {
        &corpus.train
    } else {
        &corpus.validation
    };
    let val_set = prepare_utterances(val_pairs, &corpus.norm_stats)?;

    let params = init_params(&model_cfg, train_cfg.seed)?;
    let mut trainer = Trainer::new(params, train_cfg, corpus.norm_stats.clone())?;
    let report = trainer.train(&train_set, &val_set)?;

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let best = trainer.best_params()?;
    save_checkpoint(&best, Dtype::F64, out.join(format!("{name}.ckpt")))?;
    trainer.save_state(out.join(format!("{name}.state")))?;
    let mut history = String::from("epoch\ttrain_loss\tval_l_spec\n");
    for h in &report.history {
        history.push_str(&format!(
            "{}\t{:?}\t{:?}\n",
            h.epoch, h.mean_train_loss, h.val_l_spec
        ));
    }
    write_text(&out.join(format!("{name}.history.tsv")), &history)?;
    println!(
        "{name}: best validation l_spec {:.6} at epoch {} ({} epochs{})",
        report.best_val,
        report.best_epoch,
        report.history.len(),
        if report.stopped_early { ", stopped early" } else { "" }
    );
    Ok(())
}

fn load_systems(dir: &Path, names: &[&str], substitution: bool) -> Result<Vec<TrainedSystem>> {
    names
        .iter()
        .map(|name| {
            let path = dir.join(format!("{name}.ckpt"));
            if !path.exists() {
                return Err(Error::Config(format!(
                    "missing `{name}` checkpoint at {}",
                    path.display()
                )));
            }
            let mut params = load_checkpoint(&path)?;
            if substitution {
                params.cfg.missing_latent = MissingLatentPolicy::Substitute;
            }
            Ok(TrainedSystem {
                name: name.to_string(),
                params,
            })
        })
        .collect()
}

fn eval_options(seed: u64, gla_iters: usize, pesq_tool: Option<PathBuf>, out: &Path) -> EvalOptions {
    EvalOptions {
        seed,
        gla: GriffinLimConfig {
            iters: gla_iters,
            seed,
            ..GriffinLimConfig::default()
        },
        pesq_tool,
        audio_out: Some(out.to_path_buf()),
        ..EvalOptions::default()
    }
}

fn write_tables(tables: &[ExperimentTable], out: &Path, format: Format) -> Result<()> {
    let report = emit_report(tables, format.report_format());
    write_text(&out.join(format!("report.{}", format.extension())), &report)?;
    write_text(&out.join("per_utterance.tsv"), &emit_per_utterance(tables))?;
    print!("{report}");
    Ok(())
}

fn load_data(data: &Path, split_seed: u64) -> Result<Corpus> {
    build_corpus(data, DEFAULT_SPLIT_RATIOS, split_seed)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SynthData {
            out,
            seed,
            n_utterances,
            min_duration,
            max_duration,
            n_states,
            epg_rate,
        } => synth_data(
            &out,
            seed,
            n_utterances,
            (min_duration, max_duration),
            n_states,
            epg_rate,
        ),
        Command::Train {
            data,
            out,
            config,
            variant,
            name,
            seed,
            size_scale,
            max_epochs,
            steps_per_epoch,
            audio_only,
            latent_substitution,
            split_seed,
        } => train(
            &data,
            &out,
            config.as_deref(),
            variant.as_deref(),
            name.as_deref(),
            seed,
            size_scale,
            max_epochs,
            steps_per_epoch,
            audio_only,
            latent_substitution,
            split_seed,
        ),
        Command::Generate {
            data,
            checkpoints,
            out,
            seed,
            gla_iters,
            pesq_tool,
            latent_substitution,
            format,
            split_seed,
        } => {
            let corpus = load_data(&data, split_seed)?;
            let systems = load_systems(&checkpoints, &["pure_epg", "ef", "lf"], latent_substitution)?;
            let opts = eval_options(seed, gla_iters, pesq_tool, &out);
            let table = run_generation_experiment(&corpus, &systems, &opts)?;
            write_tables(std::slice::from_ref(&table), &out, format)
        }
        Command::Enhance {
            data,
            checkpoints,
            out,
            seed,
            gla_iters,
            pesq_tool,
            latent_substitution,
            snr,
            format,
            split_seed,
        } => {
            let corpus = load_data(&data, split_seed)?;
            let systems = load_systems(&checkpoints, &["baseline", "ef", "lf"], latent_substitution)?;
            let opts = eval_options(seed, gla_iters, pesq_tool, &out);
            let (base, fusion) = run_enhancement_experiment(&corpus, &systems, &snr, &opts)?;
            write_tables(&[base, fusion], &out, format)
        }
        Command::Evaluate {
            data,
            checkpoints,
            out,
            seed,
            gla_iters,
            pesq_tool,
            latent_substitution,
            snr,
            format,
            split_seed,
        } => {
            let corpus = load_data(&data, split_seed)?;
            let gen_systems =
                load_systems(&checkpoints, &["pure_epg", "ef", "lf"], latent_substitution)?;
            let enh_systems =
                load_systems(&checkpoints, &["baseline", "ef", "lf"], latent_substitution)?;
            let opts = eval_options(seed, gla_iters, pesq_tool, &out);
            let gen_table = run_generation_experiment(&corpus, &gen_systems, &opts)?;
            let (base, fusion) = run_enhancement_experiment(&corpus, &enh_systems, &snr, &opts)?;
            write_tables(&[gen_table, base, fusion], &out, format)
        }
        Command::Report {
            per_utterance,
            out,
            format,
        } => {
            let text =
                fs::read_to_string(&per_utterance).map_err(|e| Error::io(&per_utterance, e))?;
            let tables = tables_from_per_utterance(&text)?;
            let report = emit_report(&tables, format.report_format());
            write_text(&out, &report)?;
            print!("{report}");
            Ok(())
        }
    }
}
