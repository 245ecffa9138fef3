//! End-to-end orchestration: recording -> per-condition feature tensors ->
//! classification suite -> stage-comparison statistics -> report bundle.

use std::collections::BTreeMap;

use ndarray::Axis;

use crate::cv::{run_task_suite, SuiteConfig, SuiteReport};
use crate::error::{Error, Result};
use crate::features::{build_feature_tensor, FeatureIndex, FeatureTensor};
use crate::io::{Provenance, RunConfig};
use crate::recording::EpochedRecording;
use crate::report::ReportBundle;
use crate::stats::{paired_comparison_suite, PairedComparison};

/// One recording restricted to the trials of a single class.
fn class_subset(rec: &EpochedRecording, class: usize) -> Result<EpochedRecording> {
    let trials = rec.trials_with_labels(&[class]);
    if trials.is_empty() {
        return Err(Error::Data(format!("no trials with label {class}")));
    }
    Ok(EpochedRecording {
        data: rec.data.select(Axis(0), &trials),
        fs: rec.fs,
        channel_names: rec.channel_names.clone(),
        labels: trials.iter().map(|&i| rec.labels[i]).collect(),
        class_set: rec.class_set.clone(),
        stage_windows: rec.stage_windows.clone(),
    })
}

/// Unstandardized feature tensors keyed (class, stage). Standardization is
/// deferred to the CV folds (or applied globally in paper-global mode).
pub fn tensors_by_condition(
    rec: &EpochedRecording,
    config: &RunConfig,
) -> Result<BTreeMap<(usize, String), FeatureTensor>> {
    config.validate()?;
    rec.validate(config.window.nfft)?;
    let mut map = BTreeMap::new();
    for &class in &rec.class_set {
        let subset = class_subset(rec, class)?;
        for stage in &config.stages {
            let tensor = build_feature_tensor(&subset, stage, &config.window, &config.grid)?;
            map.insert((class, stage.clone()), tensor);
        }
    }
    Ok(map)
}

pub fn suite_config(config: &RunConfig) -> SuiteConfig {
    SuiteConfig {
        tasks: config.tasks(),
        k: config.k_folds,
        hyperparams: config.hyperparams,
        seed: config.seed,
        standardize_mode: config.standardize_mode,
        perm_repeats: config.perm_repeats,
        selection_threshold: config.selection_threshold,
        config_digest: config.digest(),
    }
}

/// Stage-comparison statistics on per-fold training accuracies: for each
/// task and driver band, the fold accuracies of the first stage are paired
/// against the same folds of the second, with FDR applied per task across
/// the five bands.
pub fn stage_comparison_stats(
    suite: &SuiteReport,
    config: &RunConfig,
) -> Result<Vec<PairedComparison>> {
    if config.stages.len() < 2 {
        return Ok(Vec::new());
    }
    let (stage_a, stage_b) = (&config.stages[0], &config.stages[1]);
    let band_labels = ["delta", "theta", "alpha", "beta", "gamma"];
    let tasks: Vec<String> = suite_tasks(suite);

    let mut out = Vec::new();
    for task in &tasks {
        let mut family = Vec::new();
        for band in band_labels {
            let a = fold_train_accs(suite, task, stage_a, band)?;
            let b = fold_train_accs(suite, task, stage_b, band)?;
            family.push((format!("{task}/{band}"), a, b));
        }
        out.extend(paired_comparison_suite(&family)?);
    }
    Ok(out)
}

fn suite_tasks(suite: &SuiteReport) -> Vec<String> {
    let mut tasks: Vec<String> = suite.cells.iter().map(|c| c.task.clone()).collect();
    tasks.dedup();
    let mut seen = Vec::new();
    for t in tasks {
        if !seen.contains(&t) {
            seen.push(t);
        }
    }
    seen
}

fn fold_train_accs(
    suite: &SuiteReport,
    task: &str,
    stage: &str,
    feature_config: &str,
) -> Result<Vec<f64>> {
    suite
        .cells
        .iter()
        .find(|c| c.task == task && c.stage == stage && c.feature_config == feature_config)
        .map(|c| c.folds.iter().map(|f| f.train_acc).collect())
        .ok_or_else(|| {
            Error::Data(format!("missing suite cell {task}/{stage}/{feature_config}"))
        })
}

/// Full pipeline: features, classification suite, statistics, report bundle.
pub fn run_pipeline(rec: &EpochedRecording, config: &RunConfig) -> Result<ReportBundle> {
    let tensors = tensors_by_condition(rec, config)?;
    let index = FeatureIndex { n_channels: rec.n_channels() };
    let suite = run_task_suite(&tensors, &config.stages, &suite_config(config))?;
    let stats = stage_comparison_stats(&suite, config)?;
    ReportBundle::assemble(
        Provenance::new(config),
        suite,
        &index,
        &rec.channel_names,
        stats,
    )
}
