//! Dataset persistence (raw little-endian f64 + JSON manifest), run
//! configuration with a content digest, and provenance stamping.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};

use ndarray::Array3;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bispectrum::FreqGrid;
use crate::dsp::WindowSpec;
use crate::error::{Error, Result};
use crate::features::StandardizeMode;
use crate::forest::ForestHyperparams;
use crate::recording::{EpochedRecording, StageWindow};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub fs: f64,
    pub n_trials: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub channel_names: Vec<String>,
    pub labels: Vec<usize>,
    pub class_set: Vec<usize>,
    /// name -> [start_sample, end_sample)
    pub stage_windows: BTreeMap<String, (usize, usize)>,
    /// Path of the raw data file, relative to the manifest.
    pub data_file: String,
    pub endianness: String,
    pub dtype: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Config(format!("unsupported manifest version {}", self.version)));
        }
        if self.endianness != "little" {
            return Err(Error::Config(format!("unsupported endianness {:?}", self.endianness)));
        }
        if self.dtype != "f64" {
            return Err(Error::Data(format!("unknown dtype {:?}", self.dtype)));
        }
        if self.channel_names.len() != self.n_channels {
            return Err(Error::Config("channel name count != n_channels".into()));
        }
        if self.labels.len() != self.n_trials {
            return Err(Error::Config("label count != n_trials".into()));
        }
        for &l in &self.labels {
            if !self.class_set.contains(&l) {
                return Err(Error::Label(format!("label {l} outside declared class set")));
            }
        }
        for (name, &(start, end)) in &self.stage_windows {
            if start >= end || end > self.n_samples {
                return Err(Error::Config(format!(
                    "stage {name} window [{start}, {end}) outside 0..{}",
                    self.n_samples
                )));
            }
        }
        Ok(())
    }
}

/// Save a recording as manifest JSON plus a raw little-endian f64 file,
/// row-major (trial, channel, sample).
pub fn save_dataset(
    recording: &EpochedRecording,
    manifest_path: &Path,
    generator_seed: Option<u64>,
    config_digest: Option<&str>,
) -> Result<DatasetManifest> {
    let data_file = manifest_path
        .file_stem()
        .map(|s| format!("{}.f64", s.to_string_lossy()))
        .unwrap_or_else(|| "data.f64".to_string());
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        fs: recording.fs,
        n_trials: recording.n_trials(),
        n_channels: recording.n_channels(),
        n_samples: recording.n_samples(),
        channel_names: recording.channel_names.clone(),
        labels: recording.labels.clone(),
        class_set: recording.class_set.clone(),
        stage_windows: recording
            .stage_windows
            .iter()
            .map(|w| (w.name.clone(), (w.start, w.end)))
            .collect(),
        data_file,
        endianness: "little".into(),
        dtype: "f64".into(),
        generator_seed,
        config_digest: config_digest.map(str::to_string),
    };
    manifest.validate()?;

    let data_path = sibling(manifest_path, &manifest.data_file);
    let mut bytes =
        Vec::with_capacity(recording.data.len() * std::mem::size_of::<f64>());
    // standard layout guarantees row-major iteration order
    for &v in recording.data.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(&data_path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::Io(format!("{}: {e}", data_path.display())))?;
    write_json(manifest_path, &manifest)?;
    Ok(manifest)
}

pub fn load_dataset(manifest_path: &Path) -> Result<EpochedRecording> {
    let manifest: DatasetManifest = read_json(manifest_path)?;
    manifest.validate()?;

    let data_path = sibling(manifest_path, &manifest.data_file);
    let mut bytes = Vec::new();
    fs::File::open(&data_path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::Io(format!("{}: {e}", data_path.display())))?;
    let expected =
        manifest.n_trials * manifest.n_channels * manifest.n_samples * std::mem::size_of::<f64>();
    if bytes.len() != expected {
        return Err(Error::Data(format!(
            "{}: byte length {} does not match declared shape ({} expected)",
            data_path.display(),
            bytes.len(),
            expected
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data = Array3::from_shape_vec(
        (manifest.n_trials, manifest.n_channels, manifest.n_samples),
        values,
    )
    .map_err(|e| Error::Data(e.to_string()))?;

    let recording = EpochedRecording {
        data,
        fs: manifest.fs,
        channel_names: manifest.channel_names.clone(),
        labels: manifest.labels.clone(),
        class_set: manifest.class_set.clone(),
        stage_windows: manifest
            .stage_windows
            .iter()
            .map(|(name, &(start, end))| StageWindow { name: name.clone(), start, end })
            .collect(),
    };
    recording.validate(1)?;
    Ok(recording)
}

fn sibling(manifest_path: &Path, file: &str) -> PathBuf {
    manifest_path.parent().unwrap_or_else(|| Path::new(".")).join(file)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Json(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSettings {
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub enabled: bool,
}

impl Default for FilterSettings {
    fn default() -> Self {
        FilterSettings { order: 4, low_hz: 1.0, high_hz: 40.0, enabled: false }
    }
}

/// Everything that determines a pipeline run's numeric output. The content
/// digest over the canonical JSON rendering is stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub window: WindowSpec,
    pub grid: FreqGrid,
    pub filter: FilterSettings,
    pub hyperparams: ForestHyperparams,
    pub k_folds: usize,
    pub seed: u64,
    pub standardize_mode: StandardizeMode,
    /// Binary tasks as [a, b] pairs; the multiclass task is always appended.
    pub binary_tasks: Vec<(usize, usize)>,
    pub stages: Vec<String>,
    pub perm_repeats: usize,
    pub selection_threshold: f64,
    pub trials_per_class: usize,
    pub emit_svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            window: WindowSpec::default(),
            grid: FreqGrid::default_1_to_40(),
            filter: FilterSettings::default(),
            hyperparams: ForestHyperparams::default(),
            k_folds: 5,
            seed: 20260826,
            standardize_mode: StandardizeMode::TrainOnly,
            binary_tasks: vec![(0, 1), (0, 2), (2, 1)],
            stages: vec!["planning".into(), "execution".into()],
            perm_repeats: 10,
            selection_threshold: 0.0,
            trials_per_class: 75,
            emit_svg: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.k_folds < 2 {
            return Err(Error::Config("k_folds must be >= 2".into()));
        }
        if self.stages.is_empty() {
            return Err(Error::Config("at least one stage is required".into()));
        }
        if self.perm_repeats == 0 {
            return Err(Error::Config("perm_repeats must be >= 1".into()));
        }
        if self.trials_per_class < self.k_folds {
            return Err(Error::Config("trials_per_class must be >= k_folds".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON rendering, hex-encoded.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("RunConfig is always serializable");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex(&hasher.finalize())
    }

    pub fn tasks(&self) -> Vec<crate::cv::TaskDef> {
        let mut tasks: Vec<crate::cv::TaskDef> =
            self.binary_tasks.iter().map(|&(a, b)| crate::cv::TaskDef::Binary(a, b)).collect();
        let mut classes: Vec<usize> = self
            .binary_tasks
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() > 2 {
            tasks.push(crate::cv::TaskDef::Multiclass(classes));
        }
        tasks
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex(&hasher.finalize()))
}

/// Provenance header embedded in every emitted JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit_version: String,
    pub config_digest: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config: &RunConfig) -> Self {
        Provenance {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            config_digest: config.digest(),
            seed: config.seed,
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let config = match path {
        Some(p) => read_json::<RunConfig>(p).map_err(|e| match e {
            Error::Json(msg) => Error::Config(msg),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_dataset, SynthPlan};
    use tempfile::tempdir;

    fn tiny_recording() -> EpochedRecording {
        let mut plan = SynthPlan::paradigm(2);
        plan.n_channels = 3;
        for c in &mut plan.classes {
            c.injections.clear();
        }
        synth_dataset(&plan, 7).unwrap()
    }

    #[test]
    fn round_trip_bit_identical() {
        let rec = tiny_recording();
        let dir = tempdir().unwrap();
        let path = dir.path().join("set.json");
        save_dataset(&rec, &path, Some(7), None).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(rec.data, back.data);
        assert_eq!(rec.labels, back.labels);
        assert_eq!(rec.channel_names, back.channel_names);
        assert_eq!(rec.stage_windows.len(), back.stage_windows.len());
    }

    #[test]
    fn byte_length_mismatch_rejected() {
        let rec = tiny_recording();
        let dir = tempdir().unwrap();
        let path = dir.path().join("set.json");
        let manifest = save_dataset(&rec, &path, None, None).unwrap();
        let data_path = dir.path().join(&manifest.data_file);
        let mut bytes = fs::read(&data_path).unwrap();
        bytes.truncate(bytes.len() - 8);
        fs::write(&data_path, bytes).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Data(_))));
    }

    #[test]
    fn label_outside_class_set_rejected() {
        let rec = tiny_recording();
        let dir = tempdir().unwrap();
        let path = dir.path().join("set.json");
        save_dataset(&rec, &path, None, None).unwrap();
        let mut manifest: DatasetManifest = read_json(&path).unwrap();
        manifest.labels[0] = 7;
        write_json(&path, &manifest).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Label(_))));
    }

    #[test]
    fn config_digest_stable_and_sensitive() {
        let a = RunConfig::default();
        let b = RunConfig::default();
        assert_eq!(a.digest(), b.digest());
        let c = RunConfig { seed: 1, ..RunConfig::default() };
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn config_validation() {
        let bad = RunConfig { k_folds: 1, ..RunConfig::default() };
        assert!(bad.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn default_tasks_include_multiclass() {
        let tasks = RunConfig::default().tasks();
        assert_eq!(tasks.len(), 4);
        assert!(tasks.last().unwrap().is_multiclass());
    }
}
