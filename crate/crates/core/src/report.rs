//! Report emission: accuracy tables, band-pair contribution tables,
//! selection-count summaries, stats CSVs, and deterministic SVG heatmaps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bands::BandName;
use crate::cv::{PermImportanceReport, SuiteReport, TaskCellReport};
use crate::error::{Error, Result};
use crate::features::{FeatureIndex, FEATURE_NAMES, N_BAND_PAIRS};
use crate::io::{write_json, Provenance};
use crate::stats::PairedComparison;

/// 5x5 driver x responder contribution table in percent; rows are drivers in
/// canonical band order. Cells sum to 100 unless `degenerate` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionTable {
    pub label: String,
    pub percent: Vec<Vec<f64>>,
    /// True when no band-pair had positive importance mass; cells are then
    /// uniform by convention.
    pub degenerate: bool,
}

/// Collapse a flat importance vector into per-band-pair percentages: negative
/// importances are floored at zero, mass is summed over channels and feature
/// types, then normalized to 100%.
pub fn contribution_table(
    importance: &[f64],
    index: &FeatureIndex,
    label: &str,
) -> Result<ContributionTable> {
    if importance.len() != index.width() {
        return Err(Error::InvalidArgument(format!(
            "importance length {} != feature width {}",
            importance.len(),
            index.width()
        )));
    }
    let mut mass = [0.0f64; N_BAND_PAIRS];
    for (flat, &v) in importance.iter().enumerate() {
        let (_, pair, _) = index.unflatten(flat);
        mass[pair] += v.max(0.0);
    }
    let total: f64 = mass.iter().sum();
    let degenerate = total <= 0.0;
    let percent: Vec<Vec<f64>> = (0..5)
        .map(|d| {
            (0..5)
                .map(|r| {
                    if degenerate {
                        100.0 / N_BAND_PAIRS as f64
                    } else {
                        100.0 * mass[d * 5 + r] / total
                    }
                })
                .collect()
        })
        .collect();
    Ok(ContributionTable { label: label.to_string(), percent, degenerate })
}

impl ContributionTable {
    pub fn sum(&self) -> f64 {
        self.percent.iter().flatten().sum()
    }

    /// Cells ranked by descending percentage as (driver, responder) indices.
    pub fn ranked_cells(&self) -> Vec<(usize, usize)> {
        let mut cells: Vec<(usize, usize)> =
            (0..5).flat_map(|d| (0..5).map(move |r| (d, r))).collect();
        cells.sort_by(|&(da, ra), &(db, rb)| {
            self.percent[db][rb]
                .partial_cmp(&self.percent[da][ra])
                .unwrap()
                .then((da, ra).cmp(&(db, rb)))
        });
        cells
    }

    pub fn to_csv(&self) -> String {
        let bands: Vec<&str> = BandName::ALL.iter().map(|b| b.label()).collect();
        let mut out = format!("driver\\responder,{}\n", bands.join(","));
        for (d, row) in self.percent.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(out, "{},{}", bands[d], cells.join(","));
        }
        out
    }
}

/// Selection-count summary over top-feature lists: how often each channel,
/// band pair, and feature type appears among the selected features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCounts {
    pub by_channel: BTreeMap<String, usize>,
    pub by_band_pair: BTreeMap<String, usize>,
    pub by_feature: BTreeMap<String, usize>,
    pub n_selected: usize,
}

pub fn selection_counts(
    selected_lists: &[&[usize]],
    index: &FeatureIndex,
    channel_names: &[String],
) -> Result<SelectionCounts> {
    if channel_names.len() != index.n_channels {
        return Err(Error::InvalidArgument("channel name count mismatch".into()));
    }
    let pairs = crate::bands::all_band_pairs();
    let mut by_channel = BTreeMap::new();
    let mut by_band_pair = BTreeMap::new();
    let mut by_feature = BTreeMap::new();
    let mut n_selected = 0;
    for list in selected_lists {
        for &flat in *list {
            if flat >= index.width() {
                return Err(Error::InvalidArgument(format!("flat index {flat} out of range")));
            }
            let (ch, pair, feat) = index.unflatten(flat);
            *by_channel.entry(channel_names[ch].clone()).or_insert(0) += 1;
            *by_band_pair.entry(pairs[pair].label()).or_insert(0) += 1;
            *by_feature.entry(FEATURE_NAMES[feat].to_string()).or_insert(0) += 1;
            n_selected += 1;
        }
    }
    Ok(SelectionCounts { by_channel, by_band_pair, by_feature, n_selected })
}

pub fn accuracy_table_csv(cells: &[TaskCellReport]) -> String {
    let mut out = String::from(
        "task,stage,feature_config,mean_train_acc,mean_test_acc,fold_test_accs\n",
    );
    for c in cells {
        let folds: Vec<String> = c.folds.iter().map(|f| format!("{:.6}", f.test_acc)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{}",
            c.task,
            c.stage,
            c.feature_config,
            c.mean_train_acc,
            c.mean_test_acc,
            folds.join(";")
        );
    }
    out
}

pub fn stats_csv(comparisons: &[PairedComparison]) -> String {
    let mut out = String::from("label,shapiro_p,test,statistic,p,p_fdr,effect,cohen_d\n");
    for c in comparisons {
        let test = match c.test {
            crate::stats::PairedTestKind::PairedT => "paired-t",
            crate::stats::PairedTestKind::Wilcoxon => "wilcoxon",
            crate::stats::PairedTestKind::Degenerate => "degenerate",
        };
        let _ = writeln!(
            out,
            "{},{:.6},{},{:.6},{:.6e},{:.6e},{:.6},{:.6}",
            c.label, c.shapiro_p, test, c.statistic, c.p, c.p_adjusted, c.effect, c.cohen_d
        );
    }
    out
}

/// Fixed viridis-like 8-stop color ramp; deterministic SVG output.
pub const VIRIDIS_STOPS: [&str; 8] = [
    "#440154", "#46327e", "#365c8d", "#277f8e", "#1fa187", "#4ac16d", "#a0da39", "#fde725",
];

fn ramp_color(t: f64) -> &'static str {
    let i = (t.clamp(0.0, 1.0) * (VIRIDIS_STOPS.len() - 1) as f64).round() as usize;
    VIRIDIS_STOPS[i]
}

/// 5x5 heatmap of a contribution table. Presentation only: the CSV/JSON hold
/// the authoritative numbers.
pub fn heatmap_svg(table: &ContributionTable) -> String {
    let cell = 60;
    let margin = 70;
    let size = margin + 5 * cell + 20;
    let max = table
        .percent
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b))
        .max(1e-12);
    let bands: Vec<&str> = BandName::ALL.iter().map(|b| b.label()).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" \
         font-family=\"monospace\" font-size=\"11\">\n<title>{}</title>\n",
        table.label
    );
    for (d, row) in table.percent.iter().enumerate() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            margin - 6,
            margin + d * cell + cell / 2 + 4,
            bands[d]
        );
        for (r, &v) in row.iter().enumerate() {
            if d == 0 {
                let _ = writeln!(
                    svg,
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                    margin + r * cell + cell / 2,
                    margin - 8,
                    bands[r]
                );
            }
            let _ = writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{}\"/>\
                 <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"#ffffff\">{v:.1}</text>",
                margin + r * cell,
                margin + d * cell,
                ramp_color(v / max),
                margin + r * cell + cell / 2,
                margin + d * cell + cell / 2 + 4,
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Everything one pipeline run emits, with provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub accuracy_cells: Vec<TaskCellReport>,
    pub contribution_tables: Vec<ContributionTable>,
    pub selection_counts: SelectionCounts,
    pub importance: BTreeMap<String, PermImportanceReport>,
    pub stats: Vec<PairedComparison>,
}

impl ReportBundle {
    pub fn assemble(
        provenance: Provenance,
        suite: SuiteReport,
        index: &FeatureIndex,
        channel_names: &[String],
        stats: Vec<PairedComparison>,
    ) -> Result<ReportBundle> {
        let mut contribution_tables = Vec::new();
        for (key, report) in &suite.importance {
            contribution_tables.push(contribution_table(&report.importance, index, key)?);
        }
        let lists: Vec<&[usize]> = suite
            .cells
            .iter()
            .filter_map(|c| c.selected_features.as_deref())
            .collect();
        let counts = selection_counts(&lists, index, channel_names)?;
        Ok(ReportBundle {
            provenance,
            accuracy_cells: suite.cells,
            contribution_tables,
            selection_counts: counts,
            importance: suite.importance,
            stats,
        })
    }

    /// Write CSV/JSON artifacts (and SVG heatmaps when enabled) into `dir`.
    pub fn write_to(&self, dir: &Path, emit_svg: bool) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        write_json(&dir.join("bundle.json"), self)?;
        write_text(&dir.join("accuracy.csv"), &accuracy_table_csv(&self.accuracy_cells))?;
        write_text(&dir.join("stats.csv"), &stats_csv(&self.stats))?;
        for table in &self.contribution_tables {
            let stem = table.label.replace('/', "_");
            write_text(&dir.join(format!("contribution_{stem}.csv")), &table.to_csv())?;
            if emit_svg {
                write_text(&dir.join(format!("contribution_{stem}.svg")), &heatmap_svg(table))?;
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON rendering of the numeric payload.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("bundle serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        crate::io::hex(&hasher.finalize())
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
