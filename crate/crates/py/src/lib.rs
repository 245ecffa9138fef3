//! Python bindings: bispectrum/bicoherence estimation, band-pair features,
//! synthetic data, the classification suite, and the statistics toolbox.
//!
//! Matrices cross the boundary as flat row-major `Vec<f64>` buffers plus a
//! shape tuple, so the module has no binary dependency on a specific Python
//! array library; `bispec.py` helpers on the Python side can wrap them in
//! numpy with zero copies if desired.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use bispec_core::bispectrum::{estimate_bicoherence, estimate_bispectrum, FreqGrid};
use bispec_core::dsp::{segment_and_fft, TimeSeries, WindowKind, WindowSpec};
use bispec_core::error::Error;
use bispec_core::features::{
    build_feature_tensor, flatten, FeatureIndex, FEATURE_NAMES, N_FEATURES,
};
use bispec_core::io::RunConfig;
use bispec_core::pipeline::run_pipeline;
use bispec_core::recording::EpochedRecording;
use bispec_core::stats;
use bispec_core::synth;

fn err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn window_spec(nfft: usize, overlap: f64, symmetric: bool) -> PyResult<WindowSpec> {
    let kind = if symmetric { WindowKind::HannSymmetric } else { WindowKind::HannPeriodic };
    WindowSpec::new(nfft, overlap, kind).map_err(err)
}

/// (magnitude, phase) matrices flattened row-major over the 1..=40 Hz grid,
/// plus the axis frequencies.
#[pyclass(name = "BispectrumResult")]
struct PyBispectrumResult {
    #[pyo3(get)]
    magnitude: Vec<f64>,
    #[pyo3(get)]
    phase: Vec<f64>,
    #[pyo3(get)]
    shape: (usize, usize),
    #[pyo3(get)]
    f1_hz: Vec<f64>,
    #[pyo3(get)]
    f2_hz: Vec<f64>,
    #[pyo3(get)]
    n_segments: usize,
}

#[pymethods]
impl PyBispectrumResult {
    /// (f1, f2, magnitude, phase) of the peak cell.
    fn peak(&self) -> (f64, f64, f64, f64) {
        let cols = self.shape.1;
        let mut best = 0;
        for i in 0..self.magnitude.len() {
            if self.magnitude[i] > self.magnitude[best] {
                best = i;
            }
        }
        (
            self.f1_hz[best / cols],
            self.f2_hz[best % cols],
            self.magnitude[best],
            self.phase[best],
        )
    }
}

fn split_complex(values: &ndarray::Array2<num_complex::Complex<f64>>) -> (Vec<f64>, Vec<f64>) {
    let mag = values.iter().map(|v| v.norm()).collect();
    let phase = values.iter().map(|v| v.arg()).collect();
    (mag, phase)
}

/// Estimate the bispectrum of one signal on the 1..=40 Hz grid.
#[pyfunction]
#[pyo3(signature = (samples, fs, nfft=256, overlap=0.5, symmetric_window=false))]
fn bispectrum(
    samples: Vec<f64>,
    fs: f64,
    nfft: usize,
    overlap: f64,
    symmetric_window: bool,
) -> PyResult<PyBispectrumResult> {
    let x = TimeSeries::new(samples, fs).map_err(err)?;
    let spec = window_spec(nfft, overlap, symmetric_window)?;
    let spectra = segment_and_fft(&x, &spec).map_err(err)?;
    let grid = FreqGrid::default_1_to_40();
    let b = estimate_bispectrum(&spectra, &grid).map_err(err)?;
    let (magnitude, phase) = split_complex(&b.values);
    Ok(PyBispectrumResult {
        magnitude,
        phase,
        shape: (grid.f1_hz.len(), grid.f2_hz.len()),
        f1_hz: grid.f1_hz,
        f2_hz: grid.f2_hz,
        n_segments: b.n_segments,
    })
}

/// Estimate normalized bicoherence (|b| <= 1) on the 1..=40 Hz grid.
#[pyfunction]
#[pyo3(signature = (samples, fs, nfft=256, overlap=0.5, symmetric_window=false))]
fn bicoherence(
    samples: Vec<f64>,
    fs: f64,
    nfft: usize,
    overlap: f64,
    symmetric_window: bool,
) -> PyResult<PyBispectrumResult> {
    let x = TimeSeries::new(samples, fs).map_err(err)?;
    let spec = window_spec(nfft, overlap, symmetric_window)?;
    let spectra = segment_and_fft(&x, &spec).map_err(err)?;
    let grid = FreqGrid::default_1_to_40();
    let b = estimate_bicoherence(&spectra, &grid).map_err(err)?;
    let (magnitude, phase) = split_complex(&b.values);
    Ok(PyBispectrumResult {
        magnitude,
        phase,
        shape: (grid.f1_hz.len(), grid.f2_hz.len()),
        f1_hz: grid.f1_hz,
        f2_hz: grid.f2_hz,
        n_segments: b.n_segments,
    })
}

/// amp * sin(2 pi f0 t + phase), `dur` seconds at `fs` Hz.
#[pyfunction]
#[pyo3(signature = (f0, amp=1.0, phase=0.0, dur=1.0, fs=256.0))]
fn pure_tone(f0: f64, amp: f64, phase: f64, dur: f64, fs: f64) -> PyResult<Vec<f64>> {
    Ok(synth::synth_pure_tone(f0, amp, phase, dur, fs).map_err(err)?.samples)
}

/// Quadratically phase-coupled (or uncoupled) cosine triplet, one phase draw
/// per nfft-sample block.
#[pyfunction]
#[pyo3(signature = (f1, f2, coupled, n_segments, nfft=256, fs=256.0, seed=0))]
fn qpc_triplet(
    f1: f64,
    f2: f64,
    coupled: bool,
    n_segments: usize,
    nfft: usize,
    fs: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let spec = window_spec(nfft, 0.0, false)?;
    Ok(synth::synth_qpc_triplet(f1, f2, coupled, n_segments, &spec, fs, seed)
        .map_err(err)?
        .samples)
}

/// Synthetic three-class paradigm recording.
#[pyclass(name = "Dataset")]
struct PyDataset {
    rec: EpochedRecording,
}

#[pymethods]
impl PyDataset {
    /// Flat row-major (trial, channel, sample) buffer.
    fn data(&self) -> Vec<f64> {
        self.rec.data.iter().copied().collect()
    }

    fn shape(&self) -> (usize, usize, usize) {
        self.rec.data.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<usize> {
        self.rec.labels.clone()
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.rec.fs
    }

    #[getter]
    fn channel_names(&self) -> Vec<String> {
        self.rec.channel_names.clone()
    }

    #[getter]
    fn stages(&self) -> Vec<(String, usize, usize)> {
        self.rec.stage_windows.iter().map(|w| (w.name.clone(), w.start, w.end)).collect()
    }

    /// Unstandardized feature matrix for one stage: rows are trials, columns
    /// the flat (channel, band-pair, feature) index.
    #[pyo3(signature = (stage, nfft=256, overlap=0.5))]
    fn features(&self, stage: &str, nfft: usize, overlap: f64) -> PyResult<(Vec<f64>, (usize, usize))> {
        let spec = window_spec(nfft, overlap, false)?;
        let grid = FreqGrid::default_1_to_40();
        let tensor = build_feature_tensor(&self.rec, stage, &spec, &grid).map_err(err)?;
        let (x, index) = flatten(&tensor);
        let shape = (x.nrows(), index.width());
        Ok((x.into_iter().collect(), shape))
    }

    /// Run the full pipeline with default configuration; returns the report
    /// bundle as a JSON string. `n_trees`, `k_folds`, and `perm_repeats`
    /// override the defaults (handy for quick runs on small datasets).
    #[pyo3(signature = (seed=None, n_trees=None, k_folds=None, perm_repeats=None))]
    fn run_pipeline(
        &self,
        seed: Option<u64>,
        n_trees: Option<usize>,
        k_folds: Option<usize>,
        perm_repeats: Option<usize>,
    ) -> PyResult<String> {
        let mut config = RunConfig::default();
        if let Some(s) = seed {
            config.seed = s;
        }
        if let Some(n) = n_trees {
            config.hyperparams.n_trees = n;
        }
        if let Some(k) = k_folds {
            config.k_folds = k;
        }
        if let Some(r) = perm_repeats {
            config.perm_repeats = r;
        }
        let bundle = run_pipeline(&self.rec, &config).map_err(err)?;
        serde_json::to_string(&bundle).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Generate the synthetic three-class paradigm dataset. With
/// `coupled=True` classes 1 and 2 carry execution-stage cross-frequency
/// coupling injections; otherwise all classes are background noise.
#[pyfunction]
#[pyo3(signature = (trials_per_class=75, seed=0, coupled=true))]
fn paradigm_dataset(trials_per_class: usize, seed: u64, coupled: bool) -> PyResult<PyDataset> {
    let plan = if coupled {
        synth::SynthPlan::paradigm_with_coupling(trials_per_class)
    } else {
        synth::SynthPlan::paradigm(trials_per_class)
    };
    Ok(PyDataset { rec: synth::synth_dataset(&plan, seed).map_err(err)? })
}

/// Map a flat feature column to (channel, band_pair, feature) indices.
#[pyfunction]
fn unflatten_feature(flat: usize, n_channels: usize) -> (usize, usize, usize) {
    FeatureIndex { n_channels }.unflatten(flat)
}

#[pyfunction]
fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

#[pyfunction]
fn band_pair_labels() -> Vec<String> {
    bispec_core::bands::all_band_pairs().iter().map(|p| p.label()).collect()
}

/// Shapiro-Wilk normality test: returns (W, p).
#[pyfunction]
fn shapiro_wilk(x: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = stats::shapiro_wilk(&x).map_err(err)?;
    Ok((r.w, r.p))
}

/// Two-sided Wilcoxon signed-rank test: returns (W+, p, rank_biserial).
#[pyfunction]
fn wilcoxon(a: Vec<f64>, b: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let r = stats::wilcoxon_signed_rank(&a, &b).map_err(err)?;
    Ok((r.w_plus, r.p, r.effect))
}

/// Friedman test over an n x k table: returns (chi2, p, kendall_w).
#[pyfunction]
fn friedman(table: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
    let r = stats::friedman(&table).map_err(err)?;
    Ok((r.chi2, r.p, r.kendall_w))
}

/// Benjamini-Hochberg adjusted p-values in input order.
#[pyfunction]
fn bh_fdr(p: Vec<f64>) -> Vec<f64> {
    stats::bh_fdr(&p)
}

#[pymodule]
fn bispec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("N_FEATURES", N_FEATURES)?;
    m.add_class::<PyBispectrumResult>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(bispectrum, m)?)?;
    m.add_function(wrap_pyfunction!(bicoherence, m)?)?;
    m.add_function(wrap_pyfunction!(pure_tone, m)?)?;
    m.add_function(wrap_pyfunction!(qpc_triplet, m)?)?;
    m.add_function(wrap_pyfunction!(paradigm_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(unflatten_feature, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(band_pair_labels, m)?)?;
    m.add_function(wrap_pyfunction!(shapiro_wilk, m)?)?;
    m.add_function(wrap_pyfunction!(wilcoxon, m)?)?;
    m.add_function(wrap_pyfunction!(friedman, m)?)?;
    m.add_function(wrap_pyfunction!(bh_fdr, m)?)?;
    Ok(())
}
