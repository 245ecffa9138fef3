//! Stratified cross-validation, permutation-based feature importance, and
//! the multi-task classification suite.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureIndex, FeatureTensor, StandardizeMode, N_FEATURES};
use crate::forest::{train_forest, ForestHyperparams, ForestModel};
use crate::synth::{derive_seed, seeded_rng};

/// Flattened design matrix with labels and the flat feature index.
#[derive(Debug, Clone)]
pub struct LabeledDesign {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub index: FeatureIndex,
}

impl LabeledDesign {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.x.nrows() != self.y.len() {
            return Err(Error::Data(format!(
                "rows {} != labels {}",
                self.x.nrows(),
                self.y.len()
            )));
        }
        let counts = class_counts(&self.y);
        if counts.len() < 2 {
            return Err(Error::Data("need at least 2 classes".into()));
        }
        for (c, n) in counts {
            if n < k {
                return Err(Error::Stratification(format!("class {c} has {n} < k = {k} members")));
            }
        }
        Ok(())
    }
}

fn class_counts(y: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &c in y {
        *m.entry(c).or_insert(0) += 1;
    }
    m
}

/// Stratified k-fold assignment: per class, shuffle (seeded) and deal
/// round-robin so per-fold class counts deviate from exact proportionality
/// by at most one member.
pub fn stratified_kfold(y: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Stratification(format!("k must be >= 2, got {k}")));
    }
    for (c, n) in class_counts(y) {
        if n < k {
            return Err(Error::Stratification(format!("class {c} has {n} < k = {k} members")));
        }
    }
    let mut assignment = vec![0usize; y.len()];
    for (class_pos, (&class, _)) in class_counts(y).iter().enumerate() {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        let mut rng = seeded_rng(derive_seed(seed, &[0x666f_6c64, class_pos as u64]));
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            assignment[i] = j % k;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub fold_assignment: Vec<usize>,
    pub seed: u64,
    pub config_digest: String,
}

impl CvReport {
    pub fn mean_test_acc(&self) -> f64 {
        self.folds.iter().map(|f| f.test_acc).sum::<f64>() / self.folds.len() as f64
    }

    pub fn mean_train_acc(&self) -> f64 {
        self.folds.iter().map(|f| f.train_acc).sum::<f64>() / self.folds.len() as f64
    }
}

/// Per-feature-type (column index mod 9) z-scoring parameters fitted on a row
/// subset; mirrors the tensor standardizer semantics on the flat matrix.
fn fit_flat_standardizer(x: ArrayView2<f64>, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; N_FEATURES];
    let mut sd = vec![0.0; N_FEATURES];
    let groups: Vec<Vec<usize>> = (0..N_FEATURES)
        .map(|f| (0..x.ncols()).filter(|c| c % N_FEATURES == f).collect())
        .collect();
    for f in 0..N_FEATURES {
        let cols = &groups[f];
        let n = rows.len() * cols.len();
        let mut s = 0.0;
        for &r in rows {
            for &c in cols {
                s += x[[r, c]];
            }
        }
        let m = s / n as f64;
        let mut ss = 0.0;
        for &r in rows {
            for &c in cols {
                ss += (x[[r, c]] - m) * (x[[r, c]] - m);
            }
        }
        mean[f] = m;
        sd[f] = (ss / (n - 1).max(1) as f64).sqrt().max(crate::features::SD_FLOOR);
    }
    (mean, sd)
}

fn apply_flat_standardizer(x: &mut Array2<f64>, mean: &[f64], sd: &[f64]) {
    for ((_, c), v) in x.indexed_iter_mut() {
        let f = c % N_FEATURES;
        *v = (*v - mean[f]) / sd[f];
    }
}

/// One fold's fitted state, kept so importance can be computed on the same
/// training rows the model saw.
pub struct FittedFold {
    pub model: ForestModel,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub x_std: Array2<f64>,
}

pub struct CvOutcome {
    pub report: CvReport,
    pub folds: Vec<FittedFold>,
}

/// Stratified k-fold cross-validation. In train-only standardization mode
/// the per-feature z-scoring is refitted inside every fold on its training
/// rows; in paper-global mode the matrix is taken as already standardized.
pub fn cross_validate(
    design: &LabeledDesign,
    k: usize,
    hp: &ForestHyperparams,
    seed: u64,
    mode: StandardizeMode,
    config_digest: &str,
) -> Result<CvOutcome> {
    design.validate(k)?;
    let assignment = stratified_kfold(&design.y, k, seed)?;
    let n_classes = design.y.iter().max().unwrap() + 1;

    let mut results = Vec::with_capacity(k);
    let mut fitted = Vec::with_capacity(k);
    for fold in 0..k {
        let train_rows: Vec<usize> =
            (0..design.y.len()).filter(|&i| assignment[i] != fold).collect();
        let test_rows: Vec<usize> = (0..design.y.len()).filter(|&i| assignment[i] == fold).collect();

        let mut x_std = design.x.clone();
        if mode == StandardizeMode::TrainOnly {
            let (mean, sd) = fit_flat_standardizer(design.x.view(), &train_rows);
            apply_flat_standardizer(&mut x_std, &mean, &sd);
        }

        let xt = x_std.select(Axis(0), &train_rows);
        let yt: Vec<usize> = train_rows.iter().map(|&i| design.y[i]).collect();
        let model =
            train_forest(xt.view(), &yt, n_classes, hp, derive_seed(seed, &[0x74726e, fold as u64]))?;

        let xs = x_std.select(Axis(0), &test_rows);
        let ys: Vec<usize> = test_rows.iter().map(|&i| design.y[i]).collect();
        results.push(FoldResult {
            train_acc: model.accuracy(xt.view(), &yt),
            test_acc: model.accuracy(xs.view(), &ys),
        });
        fitted.push(FittedFold { model, train_rows, test_rows, x_std });
    }
    Ok(CvOutcome {
        report: CvReport {
            folds: results,
            fold_assignment: assignment,
            seed,
            config_digest: config_digest.to_string(),
        },
        folds: fitted,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PermImportanceReport {
    /// Mean accuracy drop per feature, averaged over folds and repeats.
    pub importance: Vec<f64>,
    pub repeats: usize,
    /// Features with importance strictly above the selection threshold,
    /// ordered by descending importance, ties by flat index.
    pub selected: Vec<usize>,
    /// Set when the strict threshold selected nothing.
    pub empty_selection: bool,
}

/// Mean per-tree accuracy drop when one feature column is shuffled, on the
/// supplied evaluation rows: for each repeat, every tree is scored before
/// and after the permutation and the drops are averaged over all trees
/// (trees that never split on the feature contribute exactly 0). Averaging
/// at the tree level rather than over the ensemble's majority vote keeps
/// the measure sensitive when votes have wide margins, where no single
/// column permutation could flip a majority decision.
/// Features never used by any tree split score exactly 0.
/// Permutations are seeded per (feature, repeat), so results do not depend
/// on evaluation order.
pub fn permutation_importance(
    model: &ForestModel,
    x_eval: ArrayView2<f64>,
    y_eval: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = x_eval.nrows();
    if n != y_eval.len() {
        return Err(Error::Data("row/label mismatch".into()));
    }
    let p = model.n_features;
    let n_trees = model.trees.len();
    let mut importance = vec![0.0; p];

    // Per-tree vote cache for the unpermuted matrix, and each tree's
    // baseline correct count.
    let tree_votes: Vec<Vec<usize>> = model
        .trees
        .iter()
        .map(|t| (0..n).map(|r| t.predict_row(x_eval.row(r).as_slice().unwrap())).collect())
        .collect();
    let base_correct: Vec<usize> = tree_votes
        .iter()
        .map(|votes| votes.iter().zip(y_eval).filter(|(v, t)| v == t).count())
        .collect();

    let trees_by_feature: Vec<Vec<usize>> = {
        let mut map = vec![Vec::new(); p];
        for (t, tree) in model.trees.iter().enumerate() {
            let mut used = vec![false; p];
            let mut tmp = used.clone();
            tree_features(tree, &mut tmp);
            for (f, &u) in tmp.iter().enumerate() {
                if u && !used[f] {
                    map[f].push(t);
                    used[f] = true;
                }
            }
        }
        map
    };

    for f in 0..p {
        let affected = &trees_by_feature[f];
        if affected.is_empty() {
            continue; // identity permutation on the votes: importance 0 exactly
        }
        let mut drop_sum = 0.0;
        for rep in 0..repeats {
            let mut perm: Vec<usize> = (0..n).collect();
            let mut rng = seeded_rng(derive_seed(seed, &[f as u64, rep as u64]));
            perm.shuffle(&mut rng);
            for &t in affected {
                let tree = &model.trees[t];
                let correct = (0..n)
                    .filter(|&r| {
                        predict_with_override(
                            tree,
                            x_eval.row(r).as_slice().unwrap(),
                            f,
                            x_eval[[perm[r], f]],
                        ) == y_eval[r]
                    })
                    .count();
                drop_sum += (base_correct[t] as f64 - correct as f64) / n as f64;
            }
        }
        importance[f] = drop_sum / (repeats * n_trees) as f64;
    }
    Ok(importance)
}

fn tree_features(tree: &crate::forest::Tree, out: &mut Vec<bool>) {
    // Tree internals are private; probe via uses_feature.
    for f in 0..out.len() {
        if tree.uses_feature(f) {
            out[f] = true;
        }
    }
}

fn predict_with_override(tree: &crate::forest::Tree, row: &[f64], f: usize, value: f64) -> usize {
    tree.predict_row_with_override(row, f, value)
}

/// Importance averaged across already-fitted folds, evaluated on each
/// fold's held-out rows (training rows would mask importance entirely:
/// forests grown to purity keep perfect training accuracy under almost
/// any single-feature permutation).
pub fn fold_averaged_importance(
    outcome: &CvOutcome,
    y: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = outcome.folds[0].model.n_features;
    let mut acc = vec![0.0; p];
    for (fold_id, fold) in outcome.folds.iter().enumerate() {
        let xt = fold.x_std.select(Axis(0), &fold.test_rows);
        let yt: Vec<usize> = fold.test_rows.iter().map(|&i| y[i]).collect();
        let imp = permutation_importance(
            &fold.model,
            xt.view(),
            &yt,
            repeats,
            derive_seed(seed, &[0x706d69, fold_id as u64]),
        )?;
        for (a, v) in acc.iter_mut().zip(imp) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= outcome.folds.len() as f64;
    }
    Ok(acc)
}

/// Features with importance strictly above `threshold`, ordered by
/// descending importance, ties by flat index.
pub fn select_top(importance: &[f64], threshold: f64) -> (Vec<usize>, bool) {
    let mut selected: Vec<usize> =
        (0..importance.len()).filter(|&f| importance[f] > threshold).collect();
    selected.sort_by(|&a, &b| {
        importance[b].partial_cmp(&importance[a]).unwrap().then(a.cmp(&b))
    });
    let empty = selected.is_empty();
    (selected, empty)
}

pub fn build_perm_report(importance: Vec<f64>, repeats: usize, threshold: f64) -> PermImportanceReport {
    let (selected, empty_selection) = select_top(&importance, threshold);
    PermImportanceReport { importance, repeats, selected, empty_selection }
}

// --- Task suite ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskDef {
    /// One-vs-one binary task over two class ids.
    Binary(usize, usize),
    /// All declared classes.
    Multiclass(Vec<usize>),
}

impl TaskDef {
    pub fn name(&self) -> String {
        match self {
            TaskDef::Binary(a, b) => format!("{a}v{b}"),
            TaskDef::Multiclass(c) => {
                format!("multi{}", c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(""))
            }
        }
    }

    pub fn classes(&self) -> Vec<usize> {
        match self {
            TaskDef::Binary(a, b) => vec![*a, *b],
            TaskDef::Multiclass(c) => c.clone(),
        }
    }

    pub fn is_multiclass(&self) -> bool {
        matches!(self, TaskDef::Multiclass(_))
    }
}

/// The standard task set: 0v1, 0v2, 2v1, and the three-class task.
pub fn default_tasks() -> Vec<TaskDef> {
    vec![
        TaskDef::Binary(0, 1),
        TaskDef::Binary(0, 2),
        TaskDef::Binary(2, 1),
        TaskDef::Multiclass(vec![0, 1, 2]),
    ]
}

/// One emitted report cell: task x stage x feature configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskCellReport {
    pub task: String,
    pub stage: String,
    pub feature_config: String,
    pub folds: Vec<FoldResult>,
    pub mean_train_acc: f64,
    pub mean_test_acc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_features: Option<Vec<usize>>,
    pub seed: u64,
    pub config_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub cells: Vec<TaskCellReport>,
    /// Whole-band fold-averaged importance per (task, stage), keyed
    /// "task/stage".
    pub importance: BTreeMap<String, PermImportanceReport>,
}

pub struct SuiteConfig {
    pub tasks: Vec<TaskDef>,
    pub k: usize,
    pub hyperparams: ForestHyperparams,
    pub seed: u64,
    pub standardize_mode: StandardizeMode,
    pub perm_repeats: usize,
    pub selection_threshold: f64,
    pub config_digest: String,
}

/// Build the design for one (task, stage) from per-condition tensors,
/// concatenating trials in ascending class order.
fn assemble_design(
    tensors: &BTreeMap<(usize, String), FeatureTensor>,
    classes: &[usize],
    stage: &str,
) -> Result<LabeledDesign> {
    let mut xs = Vec::new();
    let mut y = Vec::new();
    let mut index = None;
    for &class in classes {
        let tensor = tensors.get(&(class, stage.to_string())).ok_or_else(|| {
            Error::Data(format!("missing tensor for class {class}, stage {stage}"))
        })?;
        let (x, idx) = crate::features::flatten(tensor);
        if let Some(prev) = &index {
            if *prev != idx {
                return Err(Error::Data("tensor layouts differ across conditions".into()));
            }
        }
        index = Some(idx);
        y.extend(std::iter::repeat(class).take(x.nrows()));
        xs.push(x);
    }
    let views: Vec<ArrayView2<f64>> = xs.iter().map(|x| x.view()).collect();
    let x = ndarray::concatenate(Axis(0), &views).map_err(|e| Error::Data(e.to_string()))?;
    Ok(LabeledDesign { x, y, index: index.unwrap() })
}

/// Run every task for every stage under the whole-band, per-driver, and
/// top-feature configurations, mirroring the accuracy-table structure of the
/// source pipeline. Multiclass tasks omit the top-feature rerun.
pub fn run_task_suite(
    tensors: &BTreeMap<(usize, String), FeatureTensor>,
    stages: &[String],
    cfg: &SuiteConfig,
) -> Result<SuiteReport> {
    let band_labels = ["delta", "theta", "alpha", "beta", "gamma"];
    let mut cells = Vec::new();
    let mut importance_map = BTreeMap::new();

    for stage in stages {
        for task in &cfg.tasks {
            let design = assemble_design(tensors, &task.classes(), stage)?;
            let task_seed = derive_seed(cfg.seed, &[hash_str(&task.name()), hash_str(stage)]);

            // Whole-band configuration, with importance for the rerun.
            let outcome = cross_validate(
                &design,
                cfg.k,
                &cfg.hyperparams,
                task_seed,
                cfg.standardize_mode,
                &cfg.config_digest,
            )?;
            let importance =
                fold_averaged_importance(&outcome, &design.y, cfg.perm_repeats, task_seed)?;
            let report = build_perm_report(importance, cfg.perm_repeats, cfg.selection_threshold);
            cells.push(cell(task, stage, "whole-band", &outcome, None, task_seed, cfg));

            // Single-driver slices.
            for (d, label) in band_labels.iter().enumerate() {
                let cols = design.index.driver_slice(d);
                let sliced = LabeledDesign {
                    x: design.x.select(Axis(1), &cols),
                    y: design.y.clone(),
                    index: design.index,
                };
                let outcome_d = cross_validate(
                    &sliced,
                    cfg.k,
                    &cfg.hyperparams,
                    derive_seed(task_seed, &[d as u64 + 1]),
                    cfg.standardize_mode,
                    &cfg.config_digest,
                )?;
                cells.push(cell(task, stage, label, &outcome_d, None, task_seed, cfg));
            }

            // Top-feature rerun (binary tasks only, matching the "-" cells).
            if !task.is_multiclass() {
                let selected = if report.empty_selection {
                    (0..design.index.width()).collect::<Vec<_>>()
                } else {
                    let mut s = report.selected.clone();
                    s.sort_unstable();
                    s
                };
                let top = LabeledDesign {
                    x: design.x.select(Axis(1), &selected),
                    y: design.y.clone(),
                    index: design.index,
                };
                let outcome_t = cross_validate(
                    &top,
                    cfg.k,
                    &cfg.hyperparams,
                    derive_seed(task_seed, &[0x746f70]),
                    cfg.standardize_mode,
                    &cfg.config_digest,
                )?;
                cells.push(cell(
                    task,
                    stage,
                    "top",
                    &outcome_t,
                    Some(report.selected.clone()),
                    task_seed,
                    cfg,
                ));
            }
            importance_map.insert(format!("{}/{}", task.name(), stage), report);
        }
    }
    Ok(SuiteReport { cells, importance: importance_map })
}

fn cell(
    task: &TaskDef,
    stage: &str,
    feature_config: &str,
    outcome: &CvOutcome,
    selected: Option<Vec<usize>>,
    seed: u64,
    cfg: &SuiteConfig,
) -> TaskCellReport {
    TaskCellReport {
        task: task.name(),
        stage: stage.to_string(),
        feature_config: feature_config.to_string(),
        folds: outcome.report.folds.clone(),
        mean_train_acc: outcome.report.mean_train_acc(),
        mean_test_acc: outcome.report.mean_test_acc(),
        selected_features: selected,
        seed,
        config_digest: cfg.config_digest.clone(),
    }
}

fn hash_str(s: &str) -> u64 {
    s.bytes().fold(1469598103934665603u64, |h, b| (h ^ b as u64).wrapping_mul(1099511628211))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    #[test]
    fn kfold_balanced() {
        let y: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let folds = stratified_kfold(&y, 5, 3).unwrap();
        for fold in 0..5 {
            let a = (0..100).filter(|&i| folds[i] == fold && y[i] == 0).count();
            let b = (0..100).filter(|&i| folds[i] == fold && y[i] == 1).count();
            assert_eq!((a, b), (10, 10));
        }
    }

    #[test]
    fn kfold_uneven_classes() {
        let y: Vec<usize> = vec![0; 7].into_iter().chain(vec![1; 5]).collect();
        let folds = stratified_kfold(&y, 5, 1).unwrap();
        let mut sizes: Vec<usize> =
            (0..5).map(|f| folds.iter().filter(|&&a| a == f).count()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 2, 3, 3]);
        let mut a_counts: Vec<usize> = (0..5)
            .map(|f| (0..12).filter(|&i| folds[i] == f && y[i] == 0).count())
            .collect();
        a_counts.sort_unstable();
        assert_eq!(a_counts, vec![1, 1, 1, 2, 2]);
    }

    #[test]
    fn kfold_deterministic_and_validated() {
        let y: Vec<usize> = (0..30).map(|i| i % 3).collect();
        assert_eq!(stratified_kfold(&y, 5, 9).unwrap(), stratified_kfold(&y, 5, 9).unwrap());
        let tiny = vec![0, 0, 1];
        assert!(stratified_kfold(&tiny, 5, 0).is_err());
    }

    #[test]
    fn constant_feature_importance_exactly_zero() {
        let mut rng = seeded_rng(8);
        let mut x = Array2::from_shape_fn((60, 6), |_| rng.gen::<f64>());
        for r in 0..60 {
            x[[r, 3]] = 2.5; // constant column
            x[[r, 0]] = if r < 30 { 0.0 } else { 1.0 };
        }
        let y: Vec<usize> = (0..60).map(|i| usize::from(i >= 30)).collect();
        let hp = ForestHyperparams { n_trees: 30, ..Default::default() };
        let model = train_forest(x.view(), &y, 2, &hp, 7).unwrap();
        let imp = permutation_importance(&model, x.view(), &y, 5, 3).unwrap();
        assert_eq!(imp[3], 0.0);
        assert!(imp[0] > 0.3, "separating importance {}", imp[0]);
    }

    #[test]
    fn lone_separator_importance_near_half() {
        let mut rng = seeded_rng(9);
        let mut x = Array2::from_shape_fn((80, 4), |_| rng.gen::<f64>() * 0.01);
        for r in 0..80 {
            x[[r, 1]] = if r < 40 { 0.0 } else { 1.0 };
        }
        let y: Vec<usize> = (0..80).map(|i| usize::from(i >= 40)).collect();
        let hp = ForestHyperparams { n_trees: 50, ..Default::default() };
        let model = train_forest(x.view(), &y, 2, &hp, 2).unwrap();
        let imp = permutation_importance(&model, x.view(), &y, 20, 5).unwrap();
        assert!((imp[1] - 0.5).abs() < 0.1, "importance {}", imp[1]);
    }

    #[test]
    fn duplicated_feature_masks_importance() {
        let mut rng = seeded_rng(10);
        let mut x_lone = Array2::from_shape_fn((80, 5), |_| rng.gen::<f64>() * 0.01);
        let sep: Vec<f64> = (0..80).map(|i| if i < 40 { 0.0 } else { 1.0 }).collect();
        for r in 0..80 {
            x_lone[[r, 0]] = sep[r];
        }
        let mut x_dup = x_lone.clone();
        for r in 0..80 {
            x_dup[[r, 1]] = sep[r];
        }
        let y: Vec<usize> = (0..80).map(|i| usize::from(i >= 40)).collect();
        let hp = ForestHyperparams { n_trees: 60, ..Default::default() };
        let lone = train_forest(x_lone.view(), &y, 2, &hp, 4).unwrap();
        let dup = train_forest(x_dup.view(), &y, 2, &hp, 4).unwrap();
        let imp_lone = permutation_importance(&lone, x_lone.view(), &y, 10, 6).unwrap();
        let imp_dup = permutation_importance(&dup, x_dup.view(), &y, 10, 6).unwrap();
        // A redundant copy masks importance: each of the two identical
        // separators is used by only part of the forest, so permuting one
        // costs strictly less than permuting the lone separator, which
        // carries ~0.5 of per-tree accuracy on its own.
        assert!(imp_lone[0] > 0.4, "lone {}", imp_lone[0]);
        assert!(
            imp_dup[0].max(imp_dup[1]) < imp_lone[0],
            "dup {} {} vs lone {}",
            imp_dup[0],
            imp_dup[1],
            imp_lone[0]
        );
        assert!(imp_dup[0] > 0.0 && imp_dup[1] > 0.0);
    }

    #[test]
    fn select_top_rules() {
        let (sel, empty) = select_top(&[0.1, 0.0, -0.02], 0.0);
        assert_eq!(sel, vec![0]);
        assert!(!empty);
        let (sel, empty) = select_top(&[-0.1, 0.0], 0.0);
        assert!(sel.is_empty());
        assert!(empty);
        let (sel, _) = select_top(&[0.05, 0.2, 0.05], 0.0);
        assert_eq!(sel, vec![1, 0, 2]);
    }
}
