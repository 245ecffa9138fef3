//! Bispectrum and complex bicoherence estimation on a driver x responder
//! frequency grid.
//!
//! Both estimators average segment products:
//!
//! ```text
//! B(f1, f2) = (1/K) sum_k X_k(f1) X_k(f2) conj(X_k(f1 + f2))
//! b(f1, f2) = B(f1, f2) / sqrt( E[|X(f1) X(f2)|^2] E[|X(f1+f2)|^2] )
//! ```
//!
//! The full directional square is stored; f1 <-> f2 symmetry is an algebraic
//! identity of the cell formula and is exploited in tests, not for storage.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::SegmentSpectra;
use crate::error::{Error, Result};

const DENOM_EPS: f64 = 1e-12;

/// Driver and responder frequency axes, in Hz, on integer multiples of
/// `resolution` = fs/nfft.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqGrid {
    pub f1_hz: Vec<f64>,
    pub f2_hz: Vec<f64>,
    pub resolution: f64,
}

impl FreqGrid {
    pub fn new(f1_hz: Vec<f64>, f2_hz: Vec<f64>, resolution: f64) -> Result<Self> {
        if f1_hz.is_empty() || f2_hz.is_empty() {
            return Err(Error::Grid("empty frequency axis".into()));
        }
        if resolution <= 0.0 {
            return Err(Error::Grid(format!("resolution must be > 0, got {resolution}")));
        }
        for &f in f1_hz.iter().chain(&f2_hz) {
            let k = f / resolution;
            if (k - k.round()).abs() > 1e-9 || f < 0.0 {
                return Err(Error::Grid(format!("frequency {f} Hz is not on the {resolution} Hz grid")));
            }
        }
        Ok(FreqGrid { f1_hz, f2_hz, resolution })
    }

    /// Default analysis grid: 1-40 Hz at 1 Hz on both axes.
    pub fn default_1_to_40() -> Self {
        let axis: Vec<f64> = (1..=40).map(|f| f as f64).collect();
        FreqGrid { f1_hz: axis.clone(), f2_hz: axis, resolution: 1.0 }
    }

    /// Validation grid including the DC bin: 0-40 Hz at 1 Hz.
    pub fn with_dc_0_to_40() -> Self {
        let axis: Vec<f64> = (0..=40).map(|f| f as f64).collect();
        FreqGrid { f1_hz: axis.clone(), f2_hz: axis, resolution: 1.0 }
    }

    fn check_against(&self, spectra: &SegmentSpectra) -> Result<()> {
        if (self.resolution - spectra.resolution()).abs() > 1e-9 {
            return Err(Error::Grid(format!(
                "grid resolution {} Hz != spectral resolution {} Hz",
                self.resolution,
                spectra.resolution()
            )));
        }
        let max1 = self.f1_hz.iter().cloned().fold(0.0, f64::max);
        let max2 = self.f2_hz.iter().cloned().fold(0.0, f64::max);
        if max1 + max2 > spectra.fs / 2.0 + 1e-9 {
            return Err(Error::Grid(format!(
                "sum frequency {} Hz exceeds Nyquist {} Hz",
                max1 + max2,
                spectra.fs / 2.0
            )));
        }
        Ok(())
    }

    fn bins(&self, axis: &[f64]) -> Vec<usize> {
        axis.iter().map(|&f| (f / self.resolution).round() as usize).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BispectrumMatrix {
    /// Indexed (f1 bin, f2 bin).
    pub values: Array2<Complex64>,
    pub grid: FreqGrid,
    pub n_segments: usize,
}

#[derive(Debug, Clone)]
pub struct BicoherenceMatrix {
    pub values: Array2<Complex64>,
    pub grid: FreqGrid,
    pub n_segments: usize,
}

/// Peak cell of a matrix: maximal magnitude, ties broken by smallest
/// (f1, then f2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub f1: f64,
    pub f2: f64,
    pub magnitude: f64,
    pub phase: f64,
}

fn find_peak(values: &Array2<Complex64>, grid: &FreqGrid) -> Peak {
    let mut best = (0usize, 0usize);
    let mut best_mag = -1.0;
    for i in 0..grid.f1_hz.len() {
        for j in 0..grid.f2_hz.len() {
            let m = values[[i, j]].norm();
            if m > best_mag {
                best_mag = m;
                best = (i, j);
            }
        }
    }
    let v = values[best];
    Peak { f1: grid.f1_hz[best.0], f2: grid.f2_hz[best.1], magnitude: v.norm(), phase: v.arg() }
}

impl BispectrumMatrix {
    pub fn peak(&self) -> Peak {
        find_peak(&self.values, &self.grid)
    }
}

impl BicoherenceMatrix {
    pub fn peak(&self) -> Peak {
        find_peak(&self.values, &self.grid)
    }
}

pub fn estimate_bispectrum(spectra: &SegmentSpectra, grid: &FreqGrid) -> Result<BispectrumMatrix> {
    grid.check_against(spectra)?;
    let b1 = grid.bins(&grid.f1_hz);
    let b2 = grid.bins(&grid.f2_hz);
    let k = spectra.n_segments as f64;
    let mut values = Array2::zeros((b1.len(), b2.len()));
    for (i, &k1) in b1.iter().enumerate() {
        for (j, &k2) in b2.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for seg in &spectra.spectra {
                acc += seg[k1] * seg[k2] * seg[k1 + k2].conj();
            }
            values[[i, j]] = acc / k;
        }
    }
    Ok(BispectrumMatrix { values, grid: grid.clone(), n_segments: spectra.n_segments })
}

pub fn estimate_bicoherence(spectra: &SegmentSpectra, grid: &FreqGrid) -> Result<BicoherenceMatrix> {
    grid.check_against(spectra)?;
    if spectra.n_segments == 0 {
        return Err(Error::InvalidArgument("no segments".into()));
    }
    let b1 = grid.bins(&grid.f1_hz);
    let b2 = grid.bins(&grid.f2_hz);
    let k = spectra.n_segments as f64;
    let mut values = Array2::zeros((b1.len(), b2.len()));
    for (i, &k1) in b1.iter().enumerate() {
        for (j, &k2) in b2.iter().enumerate() {
            let mut num = Complex64::new(0.0, 0.0);
            let mut den_pair = 0.0;
            let mut den_sum = 0.0;
            for seg in &spectra.spectra {
                let p = seg[k1] * seg[k2];
                num += p * seg[k1 + k2].conj();
                den_pair += p.norm_sqr();
                den_sum += seg[k1 + k2].norm_sqr();
            }
            let den = ((den_pair / k) * (den_sum / k)).max(DENOM_EPS * DENOM_EPS).sqrt();
            let mut b = (num / k) / den;
            let mag = b.norm();
            if mag > 1.0 + 1e-9 {
                return Err(Error::Normalization(mag));
            }
            if mag > 1.0 {
                b /= mag;
            }
            values[[i, j]] = b;
        }
    }
    Ok(BicoherenceMatrix { values, grid: grid.clone(), n_segments: spectra.n_segments })
}

/// CSV dump: header `f1,f2,re,im`, one row per cell, row-major in f1 then f2.
pub fn write_matrix_csv<W: Write>(
    w: &mut W,
    values: &Array2<Complex64>,
    grid: &FreqGrid,
) -> Result<()> {
    writeln!(w, "f1,f2,re,im")?;
    for (i, &f1) in grid.f1_hz.iter().enumerate() {
        for (j, &f2) in grid.f2_hz.iter().enumerate() {
            let v = values[[i, j]];
            writeln!(w, "{},{},{:e},{:e}", f1, f2, v.re, v.im)?;
        }
    }
    Ok(())
}
