//! Band-pair feature extraction: the nine magnitude/phase descriptors, the
//! (trial, channel, band-pair, feature) tensor, standardization, and the
//! canonical flat feature index.

use std::path::Path;

use ndarray::{Array2, Array4, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::{all_band_pairs, extract_submatrix, BandPair};
use crate::bispectrum::{estimate_bicoherence, FreqGrid};
use crate::dsp::{segment_and_fft, WindowSpec};
use crate::error::{Error, Result};
use crate::recording::EpochedRecording;

pub const N_FEATURES: usize = 9;
pub const N_BAND_PAIRS: usize = 25;
pub const LOG_SUM_GUARD: f64 = 1e-12;
pub const PHASE_BINS: usize = 36;

/// Canonical feature order along the tensor's last axis.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "mean_bicoh",
    "max_bicoh",
    "log_sum_bicoh",
    "mag_entropy",
    "sin_phase",
    "cos_phase",
    "phase_entropy",
    "circ_variance",
    "phase_concentration",
];

/// Raw (pre-expansion) descriptors of one band-pair submatrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawFeatureVector {
    pub mean_bicoh: f64,
    pub max_bicoh: f64,
    pub sum_bicoh: f64,
    pub mag_entropy: f64,
    pub mean_phase: f64,
    pub phase_entropy: f64,
    pub circ_variance: f64,
    pub phase_concentration: f64,
}

/// Magnitude and circular-phase descriptors of a complex submatrix.
///
/// Entropies use the natural log with 0 log 0 := 0; the phase histogram has
/// 36 bins over [-pi, pi). The all-zero submatrix is defined to have zero
/// magnitude entropy.
pub fn compute_raw_features(sub: ArrayView2<Complex64>) -> Result<RawFeatureVector> {
    let n = sub.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty submatrix".into()));
    }
    let nf = n as f64;

    let mut sum = 0.0;
    let mut max = 0.0f64;
    for v in sub.iter() {
        let m = v.norm();
        sum += m;
        max = max.max(m);
    }
    let mean = sum / nf;

    let mut mag_entropy = 0.0;
    if sum > 0.0 {
        for v in sub.iter() {
            let p = v.norm() / sum;
            if p > 0.0 {
                mag_entropy -= p * p.ln();
            }
        }
    }

    // Circular statistics over per-cell phase angles.
    let mut zx = 0.0;
    let mut zy = 0.0;
    let mut hist = [0usize; PHASE_BINS];
    for v in sub.iter() {
        let theta = v.arg();
        zx += theta.cos();
        zy += theta.sin();
        let width = 2.0 * std::f64::consts::PI / PHASE_BINS as f64;
        let k = (((theta + std::f64::consts::PI) / width).floor() as isize)
            .clamp(0, PHASE_BINS as isize - 1) as usize;
        hist[k] += 1;
    }
    let mean_phase = zy.atan2(zx);
    let r = (zx / nf).hypot(zy / nf);
    let phase_concentration = r.min(1.0);
    let circ_variance = 1.0 - phase_concentration;

    let mut phase_entropy = 0.0;
    for &c in &hist {
        if c > 0 {
            let p = c as f64 / nf;
            phase_entropy -= p * p.ln();
        }
    }

    Ok(RawFeatureVector {
        mean_bicoh: mean,
        max_bicoh: max,
        sum_bicoh: sum,
        mag_entropy,
        mean_phase,
        phase_entropy,
        circ_variance,
        phase_concentration,
    })
}

/// Canonical 9-vector: the circular mean phase becomes sine and cosine
/// components and the sum becomes ln(S + 1e-12).
pub fn expand_features(raw: &RawFeatureVector) -> [f64; N_FEATURES] {
    [
        raw.mean_bicoh,
        raw.max_bicoh,
        (raw.sum_bicoh + LOG_SUM_GUARD).ln(),
        raw.mag_entropy,
        raw.mean_phase.sin(),
        raw.mean_phase.cos(),
        raw.phase_entropy,
        raw.circ_variance,
        raw.phase_concentration,
    ]
}

/// How the z-scoring parameters are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeMode {
    /// Fit on training folds only inside the CV pipeline (no leakage).
    #[default]
    TrainOnly,
    /// Fit on the whole tensor before splitting, as the source pipeline
    /// describes; exposed for reproduction only.
    PaperGlobal,
}

/// Per-feature z-scoring parameters: one (mean, sd) per feature type over the
/// flattened (trial, channel, band-pair) population. Sample (n-1) sd with a
/// 1e-12 floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizeParams {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub constant: Vec<bool>,
    pub mode: StandardizeMode,
}

pub const SD_FLOOR: f64 = 1e-12;

fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Standardized (or raw) feature tensor with provenance.
#[derive(Debug, Clone)]
pub struct FeatureTensor {
    /// Indexed (trial, channel, band_pair, feature).
    pub values: Array4<f64>,
    pub channel_names: Vec<String>,
    pub band_pairs: Vec<BandPair>,
    pub standardization: Option<StandardizeParams>,
    pub seed: Option<u64>,
}

impl FeatureTensor {
    pub fn n_trials(&self) -> usize {
        self.values.dim().0
    }

    pub fn n_channels(&self) -> usize {
        self.values.dim().1
    }

    pub fn index(&self) -> FeatureIndex {
        FeatureIndex { n_channels: self.n_channels() }
    }
}

/// Flat index bijection: channel-major, then band-pair (driver-major in
/// canonical band order), then feature. 16 channels -> 3600 flat features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureIndex {
    pub n_channels: usize,
}

impl FeatureIndex {
    pub fn width(&self) -> usize {
        self.n_channels * N_BAND_PAIRS * N_FEATURES
    }

    pub fn flat(&self, channel: usize, band_pair: usize, feature: usize) -> usize {
        (channel * N_BAND_PAIRS + band_pair) * N_FEATURES + feature
    }

    /// (channel, band_pair, feature) of a flat index.
    pub fn unflatten(&self, flat: usize) -> (usize, usize, usize) {
        let feature = flat % N_FEATURES;
        let rest = flat / N_FEATURES;
        (rest / N_BAND_PAIRS, rest % N_BAND_PAIRS, feature)
    }

    /// Flat column indices whose band-pair driver is `driver` (a canonical
    /// band position 0..5). One driver slice of 16 channels is 720 wide.
    pub fn driver_slice(&self, driver: usize) -> Vec<usize> {
        let mut cols = Vec::new();
        for c in 0..self.n_channels {
            for p in 0..N_BAND_PAIRS {
                if p / 5 == driver {
                    for f in 0..N_FEATURES {
                        cols.push(self.flat(c, p, f));
                    }
                }
            }
        }
        cols
    }
}

/// Compute the unstandardized feature tensor for one stage: per (trial,
/// channel), window the stage, estimate bicoherence, and reduce each of the
/// 25 band-pair submatrices to its 9 features.
pub fn build_feature_tensor(
    rec: &EpochedRecording,
    stage: &str,
    spec: &WindowSpec,
    grid: &FreqGrid,
) -> Result<FeatureTensor> {
    let window = rec.stage(stage)?.clone();
    rec.validate(spec.nfft)?;
    let pairs = all_band_pairs();
    let (n_trials, n_channels, _) = rec.data.dim();

    let results: Vec<Result<Vec<[f64; N_FEATURES]>>> = (0..n_trials * n_channels)
        .into_par_iter()
        .map(|idx| {
            let trial = idx / n_channels;
            let channel = idx % n_channels;
            let x = rec.stage_series(trial, channel, &window);
            let spectra = segment_and_fft(&x, spec).map_err(|e| {
                Error::Data(format!("trial {trial} channel {channel}: {e}"))
            })?;
            let bicoh = estimate_bicoherence(&spectra, grid).map_err(|e| {
                Error::Data(format!("trial {trial} channel {channel}: {e}"))
            })?;
            let mut row = Vec::with_capacity(pairs.len());
            for pair in &pairs {
                let sub = extract_submatrix(&bicoh, pair)?;
                let raw = compute_raw_features(sub.view())?;
                row.push(expand_features(&raw));
            }
            Ok(row)
        })
        .collect();

    let mut values = Array4::zeros((n_trials, n_channels, N_BAND_PAIRS, N_FEATURES));
    for (idx, res) in results.into_iter().enumerate() {
        let trial = idx / n_channels;
        let channel = idx % n_channels;
        for (p, feats) in res?.into_iter().enumerate() {
            for (f, v) in feats.into_iter().enumerate() {
                values[[trial, channel, p, f]] = v;
            }
        }
    }
    Ok(FeatureTensor {
        values,
        channel_names: rec.channel_names.clone(),
        band_pairs: pairs,
        standardization: None,
        seed: None,
    })
}

/// Fit per-feature (mean, sd) over the flattened (trial, channel, band-pair)
/// population.
pub fn fit_standardizer(tensor: &FeatureTensor, mode: StandardizeMode) -> Result<StandardizeParams> {
    let (t, c, p, _) = tensor.values.dim();
    let n = t * c * p;
    if n < 2 {
        return Err(Error::Degenerate("need at least 2 samples per feature".into()));
    }
    let mut mean = Vec::with_capacity(N_FEATURES);
    let mut sd = Vec::with_capacity(N_FEATURES);
    let mut constant = Vec::with_capacity(N_FEATURES);
    for f in 0..N_FEATURES {
        let col = tensor.values.slice(ndarray::s![.., .., .., f]);
        let m = kahan_sum(col.iter().copied()) / n as f64;
        let ss = kahan_sum(col.iter().map(|&v| (v - m) * (v - m)));
        let s = (ss / (n - 1) as f64).sqrt();
        constant.push(s < SD_FLOOR);
        mean.push(m);
        sd.push(s.max(SD_FLOOR));
    }
    Ok(StandardizeParams { mean, sd, constant, mode })
}

/// Apply fitted parameters, returning a standardized copy.
pub fn apply_standardizer(tensor: &FeatureTensor, params: &StandardizeParams) -> FeatureTensor {
    let mut values = tensor.values.clone();
    for f in 0..N_FEATURES {
        let m = params.mean[f];
        let s = params.sd[f];
        for v in values.slice_mut(ndarray::s![.., .., .., f]).iter_mut() {
            *v = (*v - m) / s;
        }
    }
    FeatureTensor {
        values,
        channel_names: tensor.channel_names.clone(),
        band_pairs: tensor.band_pairs.clone(),
        standardization: Some(params.clone()),
        seed: tensor.seed,
    }
}

/// Canonical lossless flattening to a (trials x width) design matrix.
pub fn flatten(tensor: &FeatureTensor) -> (Array2<f64>, FeatureIndex) {
    let (t, c, p, f) = tensor.values.dim();
    let index = tensor.index();
    let x = tensor.values.clone().into_shape_with_order((t, c * p * f)).expect("contiguous tensor");
    (x, index)
}

/// Inverse of [`flatten`].
pub fn unflatten(x: &Array2<f64>, index: &FeatureIndex) -> Result<Array4<f64>> {
    let (t, w) = x.dim();
    if w != index.width() {
        return Err(Error::Data(format!("width {w} != expected {}", index.width())));
    }
    Ok(x
        .clone()
        .into_shape_with_order((t, index.n_channels, N_BAND_PAIRS, N_FEATURES))
        .expect("contiguous matrix"))
}

// --- Tensor persistence ----------------------------------------------------

/// JSON sidecar stored next to the raw little-endian f64 payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorSidecar {
    pub shape: [usize; 4],
    pub channel_names: Vec<String>,
    pub band_pair_order: Vec<String>,
    pub feature_order: Vec<String>,
    pub standardization: Option<StandardizeParams>,
    pub seed: Option<u64>,
}

pub fn save_tensor(tensor: &FeatureTensor, data_path: &Path, sidecar_path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(tensor.values.len() * 8);
    for v in tensor.values.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(data_path, bytes)?;
    let (t, c, p, f) = tensor.values.dim();
    let sidecar = TensorSidecar {
        shape: [t, c, p, f],
        channel_names: tensor.channel_names.clone(),
        band_pair_order: tensor.band_pairs.iter().map(|b| b.label()).collect(),
        feature_order: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        standardization: tensor.standardization.clone(),
        seed: tensor.seed,
    };
    std::fs::write(sidecar_path, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok(())
}

pub fn load_tensor(data_path: &Path, sidecar_path: &Path) -> Result<FeatureTensor> {
    let sidecar: TensorSidecar = serde_json::from_slice(&std::fs::read(sidecar_path)?)?;
    let [t, c, p, f] = sidecar.shape;
    let bytes = std::fs::read(data_path)?;
    if bytes.len() != t * c * p * f * 8 {
        return Err(Error::Data(format!(
            "tensor payload {} bytes, sidecar shape implies {}",
            bytes.len(),
            t * c * p * f * 8
        )));
    }
    let values: Vec<f64> =
        bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let values = Array4::from_shape_vec((t, c, p, f), values)
        .map_err(|e| Error::Data(format!("shape error: {e}")))?;
    Ok(FeatureTensor {
        values,
        channel_names: sidecar.channel_names,
        band_pairs: all_band_pairs(),
        standardization: sidecar.standardization,
        seed: sidecar.seed,
    })
}
