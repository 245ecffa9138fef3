//! Labeled multi-trial, multi-channel recordings.

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::dsp::TimeSeries;
use crate::error::{Error, Result};

/// Default 16-electrode montage, 10-20 system order.
pub const DEFAULT_CHANNELS: [&str; 16] = [
    "Fp1", "Fp2", "F3", "Fz", "F4", "C3", "Cz", "C4", "T7", "T8", "P3", "Pz", "P4", "PO7", "PO8",
    "Oz",
];

/// Half-open sample range naming one trial stage (planning, execution).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageWindow {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

impl StageWindow {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Multi-trial, multi-channel time series with class labels and stage windows.
#[derive(Debug, Clone)]
pub struct EpochedRecording {
    /// Indexed (trial, channel, sample).
    pub data: Array3<f64>,
    pub fs: f64,
    pub channel_names: Vec<String>,
    /// Per-trial class id.
    pub labels: Vec<usize>,
    pub class_set: Vec<usize>,
    pub stage_windows: Vec<StageWindow>,
}

impl EpochedRecording {
    pub fn validate(&self, min_stage_len: usize) -> Result<()> {
        let (n_trials, n_channels, n_samples) = self.data.dim();
        if n_channels != self.channel_names.len() {
            return Err(Error::Data(format!(
                "channel count {n_channels} != channel_names length {}",
                self.channel_names.len()
            )));
        }
        if self.labels.len() != n_trials {
            return Err(Error::Data(format!(
                "label count {} != trial count {n_trials}",
                self.labels.len()
            )));
        }
        for &l in &self.labels {
            if !self.class_set.contains(&l) {
                return Err(Error::Label(format!("label {l} outside declared class set")));
            }
        }
        for w in &self.stage_windows {
            if w.is_empty() || w.end > n_samples {
                return Err(Error::Data(format!(
                    "stage window {} [{}, {}) outside 0..{n_samples}",
                    w.name, w.start, w.end
                )));
            }
            if w.len() < min_stage_len {
                return Err(Error::Data(format!(
                    "stage window {} length {} < nfft {min_stage_len}",
                    w.name,
                    w.len()
                )));
            }
        }
        Ok(())
    }

    pub fn n_trials(&self) -> usize {
        self.data.dim().0
    }

    pub fn n_channels(&self) -> usize {
        self.data.dim().1
    }

    pub fn n_samples(&self) -> usize {
        self.data.dim().2
    }

    pub fn stage(&self, name: &str) -> Result<&StageWindow> {
        self.stage_windows
            .iter()
            .find(|w| w.name == name)
            .ok_or_else(|| Error::Data(format!("unknown stage '{name}'")))
    }

    /// One trial/channel slice restricted to a stage window.
    pub fn stage_series(&self, trial: usize, channel: usize, stage: &StageWindow) -> TimeSeries {
        let samples =
            self.data.slice(ndarray::s![trial, channel, stage.start..stage.end]).to_vec();
        TimeSeries { samples, fs: self.fs }
    }

    /// Trials carrying one of the requested labels, in original order.
    pub fn trials_with_labels(&self, wanted: &[usize]) -> Vec<usize> {
        (0..self.n_trials()).filter(|&t| wanted.contains(&self.labels[t])).collect()
    }
}
