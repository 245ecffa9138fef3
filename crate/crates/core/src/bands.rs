//! Canonical EEG band definitions and band-pair segmentation.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bispectrum::{BicoherenceMatrix, FreqGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
}

impl BandName {
    pub const ALL: [BandName; 5] =
        [BandName::Delta, BandName::Theta, BandName::Alpha, BandName::Beta, BandName::Gamma];

    pub fn label(&self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
        }
    }

    pub fn parse(s: &str) -> Result<BandName> {
        match s.to_ascii_lowercase().as_str() {
            "delta" => Ok(BandName::Delta),
            "theta" => Ok(BandName::Theta),
            "alpha" => Ok(BandName::Alpha),
            "beta" => Ok(BandName::Beta),
            "gamma" => Ok(BandName::Gamma),
            _ => Err(Error::Band(format!("unknown band '{s}'"))),
        }
    }
}

/// One canonical band. Edges are half-open [low, high) except gamma, whose
/// top edge is inclusive so the five bands partition 1-40 Hz exactly at 1 Hz
/// resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandDef {
    pub name: BandName,
    pub low: f64,
    pub high: f64,
}

/// delta [1,4), theta [4,8), alpha [8,13), beta [13,30), gamma [30,40].
pub fn canonical_bands() -> [BandDef; 5] {
    [
        BandDef { name: BandName::Delta, low: 1.0, high: 4.0 },
        BandDef { name: BandName::Theta, low: 4.0, high: 8.0 },
        BandDef { name: BandName::Alpha, low: 8.0, high: 13.0 },
        BandDef { name: BandName::Beta, low: 13.0, high: 30.0 },
        BandDef { name: BandName::Gamma, low: 30.0, high: 40.0 },
    ]
}

pub fn band(name: BandName) -> BandDef {
    canonical_bands()[BandName::ALL.iter().position(|&b| b == name).unwrap()]
}

impl BandDef {
    /// Integer Hz bins of this band: [low, high), gamma [low, high].
    pub fn bins_hz(&self) -> Vec<usize> {
        let lo = self.low.ceil() as usize;
        let hi = if self.name == BandName::Gamma {
            self.high.floor() as usize
        } else {
            self.high.ceil() as usize - 1
        };
        (lo..=hi).collect()
    }

    /// Representative on-bin frequency near the band center.
    pub fn center_bin(&self) -> usize {
        let bins = self.bins_hz();
        bins[bins.len() / 2]
    }
}

/// Grid bin indices for one band. Requires 1 Hz grid resolution.
pub fn band_bins(b: &BandDef, grid: &FreqGrid) -> Result<Vec<usize>> {
    if (grid.resolution - 1.0).abs() > 1e-9 {
        return Err(Error::Band(format!("band segmentation needs 1 Hz resolution, got {}", grid.resolution)));
    }
    let idx: Vec<usize> = b
        .bins_hz()
        .into_iter()
        .filter_map(|hz| grid.f1_hz.iter().position(|&f| (f - hz as f64).abs() < 1e-9))
        .collect();
    if idx.is_empty() {
        return Err(Error::Band(format!("band {} has no bins on the grid", b.name.label())));
    }
    Ok(idx)
}

/// Ordered (driver, responder) pair of canonical bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPair {
    pub driver: BandDef,
    pub responder: BandDef,
}

impl BandPair {
    pub fn label(&self) -> String {
        format!("{}-{}", self.driver.name.label(), self.responder.name.label())
    }
}

/// The 25 ordered band pairs, driver-major in canonical band order.
pub fn all_band_pairs() -> Vec<BandPair> {
    let bands = canonical_bands();
    let mut out = Vec::with_capacity(25);
    for d in bands {
        for r in bands {
            out.push(BandPair { driver: d, responder: r });
        }
    }
    out
}

/// Rows are driver bins, columns responder bins.
pub fn extract_submatrix(m: &BicoherenceMatrix, pair: &BandPair) -> Result<Array2<Complex64>> {
    let rows = band_bins(&pair.driver, &m.grid)?;
    let cols = band_bins(&pair.responder, &m.grid)?;
    let mut sub = Array2::zeros((rows.len(), cols.len()));
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            sub[[i, j]] = m.values[[r, c]];
        }
    }
    Ok(sub)
}
