//! Command-line front end: synthetic data generation, bispectral dumps,
//! feature extraction, classification, the full pipeline, statistics, and
//! report re-emission.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array3;

use bispec_core::bispectrum::{estimate_bispectrum, write_matrix_csv, Peak};
use bispec_core::cv::{run_task_suite, SuiteReport};
use bispec_core::dsp::{segment_and_fft, TimeSeries, WindowKind, WindowSpec};
use bispec_core::error::{Error, Result};
use bispec_core::features::{build_feature_tensor, save_tensor};
use bispec_core::io::{
    load_config, load_dataset, read_json, save_dataset, write_json, Provenance, RunConfig,
};
use bispec_core::pipeline::{run_pipeline, stage_comparison_stats, suite_config, tensors_by_condition};
use bispec_core::recording::{EpochedRecording, StageWindow};
use bispec_core::report::{accuracy_table_csv, stats_csv, write_text, ReportBundle};
use bispec_core::synth::{synth_pure_tone, synth_qpc_triplet, synth_dataset, SynthPlan};

#[derive(Parser)]
#[command(
    name = "bispec",
    version,
    about = "Cross-frequency bispectral EEG analysis toolkit"
)]
struct Cli {
    /// Run configuration JSON; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker thread count (must not change numeric results).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SignalKind {
    Pure,
    Scaled,
    Shifted,
    Twotone,
    Qpc,
    Paradigm,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (manifest + raw f64 data).
    Synth {
        #[arg(long, value_enum)]
        signal: SignalKind,
        /// Trials per class (paradigm signal only).
        #[arg(long, default_value_t = 75)]
        trials: usize,
    },
    /// Dump bispectrum matrices and a peak summary for every
    /// (trial, channel, stage).
    Bispec {
        /// Dataset manifest path.
        #[arg(long)]
        data: PathBuf,
        /// Window taper for the dumps (symmetric matches the validation
        /// conventions for short single-segment signals).
        #[arg(long, value_enum, default_value_t = WindowArg::Symmetric)]
        window: WindowArg,
    },
    /// Extract per-stage feature tensors.
    Features {
        #[arg(long)]
        data: PathBuf,
    },
    /// Run the cross-validated classification suite.
    Classify {
        #[arg(long)]
        data: PathBuf,
    },
    /// Full pipeline: features, classification, statistics, report bundle.
    Pipeline {
        #[arg(long)]
        data: PathBuf,
    },
    /// Stage-comparison statistics from a previously saved suite report.
    Stats {
        /// suite.json emitted by `classify`.
        #[arg(long)]
        data: PathBuf,
    },
    /// Re-emit CSV/SVG artifacts from a saved bundle.json.
    Report {
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WindowArg {
    Periodic,
    Symmetric,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut config = load_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;

    match cli.command {
        Command::Synth { signal, trials } => cmd_synth(&config, signal, trials, &cli.out),
        Command::Bispec { data, window } => cmd_bispec(&config, &data, window, &cli.out),
        Command::Features { data } => cmd_features(&config, &data, &cli.out),
        Command::Classify { data } => cmd_classify(&config, &data, &cli.out),
        Command::Pipeline { data } => cmd_pipeline(&config, &data, &cli.out),
        Command::Stats { data } => cmd_stats(&config, &data, &cli.out),
        Command::Report { data } => cmd_report(&data, &cli.out),
    }
}

/// Wrap a single-channel series as a one-trial recording with one "full"
/// stage window.
fn single_trial_recording(x: TimeSeries) -> EpochedRecording {
    let n = x.len();
    EpochedRecording {
        data: Array3::from_shape_vec((1, 1, n), x.samples).expect("shape matches"),
        fs: x.fs,
        channel_names: vec!["SIG".into()],
        labels: vec![0],
        class_set: vec![0],
        stage_windows: vec![StageWindow { name: "full".into(), start: 0, end: n }],
    }
}

fn cmd_synth(config: &RunConfig, signal: SignalKind, trials: usize, out: &Path) -> Result<()> {
    let seed = config.seed;
    let rec = match signal {
        SignalKind::Pure => single_trial_recording(synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0)?),
        SignalKind::Scaled => single_trial_recording(synth_pure_tone(10.0, 2.0, 0.0, 1.0, 256.0)?),
        SignalKind::Shifted => single_trial_recording(synth_pure_tone(
            10.0,
            1.0,
            std::f64::consts::FRAC_PI_4,
            1.0,
            256.0,
        )?),
        SignalKind::Twotone => {
            let a = synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0)?;
            let b = synth_pure_tone(20.0, 1.0, 0.0, 1.0, 256.0)?;
            let sum: Vec<f64> = a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect();
            single_trial_recording(TimeSeries::new(sum, 256.0)?)
        }
        SignalKind::Qpc => {
            let spec = WindowSpec::new(256, 0.0, WindowKind::HannPeriodic)?;
            single_trial_recording(synth_qpc_triplet(6.0, 17.0, true, 32, &spec, 256.0, seed)?)
        }
        SignalKind::Paradigm => {
            if trials == 0 {
                return Err(Error::Config("--trials must be >= 1".into()));
            }
            let plan = SynthPlan::paradigm(trials);
            synth_dataset(&plan, seed)?
        }
    };
    let manifest_path = out.join("dataset.json");
    save_dataset(&rec, &manifest_path, Some(seed), Some(&config.digest()))?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

#[derive(serde::Serialize)]
struct PeakEntry {
    trial: usize,
    channel: String,
    stage: String,
    #[serde(flatten)]
    peak: Peak,
}

fn cmd_bispec(config: &RunConfig, data: &Path, window: WindowArg, out: &Path) -> Result<()> {
    let rec = load_dataset(data)?;
    if rec.n_trials() == 0 {
        return Err(Error::Data("empty dataset".into()));
    }
    let mut spec = config.window;
    spec.window = match window {
        WindowArg::Periodic => WindowKind::HannPeriodic,
        WindowArg::Symmetric => WindowKind::HannSymmetric,
    };
    let mut peaks = Vec::new();
    for stage in &rec.stage_windows {
        for trial in 0..rec.n_trials() {
            for channel in 0..rec.n_channels() {
                let x = rec.stage_series(trial, channel, stage);
                let spectra = segment_and_fft(&x, &spec)?;
                let b = estimate_bispectrum(&spectra, &config.grid)?;
                let path = out.join(format!(
                    "bispec_t{trial}_c{channel}_{}.csv",
                    stage.name
                ));
                let mut buf = Vec::new();
                write_matrix_csv(&mut buf, &b.values, &b.grid)?;
                std::fs::write(&path, buf)?;
                peaks.push(PeakEntry {
                    trial,
                    channel: rec.channel_names[channel].clone(),
                    stage: stage.name.clone(),
                    peak: b.peak(),
                });
            }
        }
    }
    let summary = out.join("peaks.json");
    write_json(
        &summary,
        &serde_json::json!({
            "provenance": Provenance::new(config),
            "peaks": peaks,
        }),
    )?;
    println!("wrote {}", summary.display());
    Ok(())
}

fn cmd_features(config: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    let rec = load_dataset(data)?;
    for stage in &config.stages {
        let tensor = build_feature_tensor(&rec, stage, &config.window, &config.grid)?;
        let data_path = out.join(format!("features_{stage}.f64"));
        let sidecar = out.join(format!("features_{stage}.json"));
        save_tensor(&tensor, &data_path, &sidecar)?;
        println!("wrote {}", sidecar.display());
    }
    Ok(())
}

fn cmd_classify(config: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    let rec = load_dataset(data)?;
    let tensors = tensors_by_condition(&rec, config)?;
    let suite = run_task_suite(&tensors, &config.stages, &suite_config(config))?;
    write_json(&out.join("suite.json"), &suite)?;
    write_text(&out.join("accuracy.csv"), &accuracy_table_csv(&suite.cells))?;
    println!("wrote {}", out.join("suite.json").display());
    Ok(())
}

fn cmd_pipeline(config: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    let rec = load_dataset(data)?;
    let bundle = run_pipeline(&rec, config)?;
    bundle.write_to(out, config.emit_svg)?;
    write_text(&out.join("bundle.digest"), &(bundle.digest() + "\n"))?;
    println!("wrote {}", out.join("bundle.json").display());
    Ok(())
}

fn cmd_stats(config: &RunConfig, data: &Path, out: &Path) -> Result<()> {
    let suite: SuiteReport = read_json(data)?;
    let stats = stage_comparison_stats(&suite, config)?;
    write_text(&out.join("stats.csv"), &stats_csv(&stats))?;
    write_json(&out.join("stats.json"), &stats)?;
    println!("wrote {}", out.join("stats.csv").display());
    Ok(())
}

fn cmd_report(data: &Path, out: &Path) -> Result<()> {
    let bundle: ReportBundle = read_json(data)?;
    bundle.write_to(out, true)?;
    println!("wrote {}", out.join("bundle.json").display());
    Ok(())
}
