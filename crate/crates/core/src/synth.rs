//! Seeded synthetic-signal generators: validation tones, QPC triplets, and
//! paradigm-scale datasets with injected cross-frequency coupling.

use ndarray::Array3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bands::{band, BandName};
use crate::dsp::{TimeSeries, WindowSpec};
use crate::error::{Error, Result};
use crate::recording::{EpochedRecording, StageWindow, DEFAULT_CHANNELS};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Splitmix64-style seed mixing; every stochastic work item derives its own
/// stream so results are independent of evaluation order.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut z = master;
    for &t in tags {
        z = z.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(t.wrapping_mul(0xbf58476d1ce4e5b9));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// amp * sin(2 pi f0 t + phase) sampled at t = k/fs.
pub fn synth_pure_tone(f0: f64, amp: f64, phase: f64, dur: f64, fs: f64) -> Result<TimeSeries> {
    if f0 <= 0.0 || f0 >= fs / 2.0 {
        return Err(Error::Aliasing { f0, nyquist: fs / 2.0 });
    }
    let n = (dur * fs).round() as usize;
    if n == 0 {
        return Err(Error::InvalidArgument("zero-length tone".into()));
    }
    let samples = (0..n).map(|k| amp * (TAU * f0 * k as f64 / fs + phase).sin()).collect();
    TimeSeries::new(samples, fs)
}

fn require_on_bin(f: f64, spec: &WindowSpec, fs: f64) -> Result<()> {
    let k = f * spec.nfft as f64 / fs;
    if (k - k.round()).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "frequency {f} Hz is off-bin for nfft {} at fs {fs}",
            spec.nfft
        )));
    }
    Ok(())
}

/// Concatenation of `n_segments` independent blocks of `spec.nfft` samples,
/// each holding the triplet cos(2 pi f1 t + p1) + cos(2 pi f2 t + p2) +
/// cos(2 pi (f1+f2) t + p3). Coupled blocks close the phase (p3 = p1 + p2);
/// uncoupled blocks draw p3 independently.
pub fn synth_qpc_triplet(
    f1: f64,
    f2: f64,
    coupled: bool,
    n_segments: usize,
    spec: &WindowSpec,
    fs: f64,
    rng_seed: u64,
) -> Result<TimeSeries> {
    spec.validate()?;
    for f in [f1, f2, f1 + f2] {
        if f <= 0.0 || f >= fs / 2.0 {
            return Err(Error::Aliasing { f0: f, nyquist: fs / 2.0 });
        }
        require_on_bin(f, spec, fs)?;
    }
    if n_segments == 0 {
        return Err(Error::InvalidArgument("n_segments must be >= 1".into()));
    }
    let mut rng = seeded_rng(rng_seed);
    let mut samples = Vec::with_capacity(n_segments * spec.nfft);
    for _ in 0..n_segments {
        let p1 = rng.gen::<f64>() * TAU;
        let p2 = rng.gen::<f64>() * TAU;
        let p3 = if coupled { p1 + p2 } else { rng.gen::<f64>() * TAU };
        for k in 0..spec.nfft {
            let t = k as f64 / fs;
            samples.push(
                (TAU * f1 * t + p1).cos() + (TAU * f2 * t + p2).cos() + (TAU * (f1 + f2) * t + p3).cos(),
            );
        }
    }
    TimeSeries::new(samples, fs)
}

/// 1/f-shaped Gaussian noise: white spectrum scaled by 1/sqrt(f), bin 0
/// zeroed, inverse transform, normalized to unit standard deviation.
pub fn pink_noise(n: usize, fs: f64, rng: &mut ChaCha8Rng) -> Result<TimeSeries> {
    if n < 2 {
        return Err(Error::InvalidArgument("noise length must be >= 2".into()));
    }
    use num_complex::Complex64;
    use rand_distr::StandardNormal;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    let half = n / 2;
    for k in 1..=half {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let scale = 1.0 / (k as f64).sqrt();
        let v = Complex64::new(re * scale, im * scale);
        spectrum[k] = v;
        if k != half || n % 2 == 1 {
            spectrum[n - k] = v.conj();
        } else {
            spectrum[k] = Complex64::new(re * scale * std::f64::consts::SQRT_2, 0.0);
        }
    }
    let fft = rustfft::FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut spectrum);
    let mut samples: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let sd = (samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if sd > 0.0 {
        for v in &mut samples {
            *v = (*v - mean) / sd;
        }
    }
    TimeSeries::new(samples, fs)
}

/// A coupling injection: QPC triplets placed at on-bin frequencies inside a
/// (driver band, responder band) block on one channel during one stage.
/// With `coupled: false` the same tones are synthesized but the sum-tone
/// phase is drawn independently, so the spectral power structure is
/// identical and only the quadratic phase coupling differs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Injection {
    pub channel: usize,
    pub driver_band: BandName,
    pub responder_band: BandName,
    pub strength: f64,
    pub stage: String,
    pub coupled: bool,
}

/// Per-class trial plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassPlan {
    pub label: usize,
    pub trials: usize,
    pub injections: Vec<Injection>,
}

/// Full synthetic-dataset plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthPlan {
    pub classes: Vec<ClassPlan>,
    pub n_channels: usize,
    pub fs: f64,
    /// Named half-open sample ranges, e.g. planning [0,768), execution [768,1536).
    pub stage_windows: Vec<StageWindow>,
}

impl SynthPlan {
    /// Three-class, two-stage paradigm-scale plan: `trials_per_class` trials,
    /// 16 channels, two 8 s stages at 256 Hz, no injections.
    pub fn paradigm(trials_per_class: usize) -> SynthPlan {
        SynthPlan {
            classes: (0..3)
                .map(|label| ClassPlan { label, trials: trials_per_class, injections: vec![] })
                .collect(),
            n_channels: 16,
            fs: 256.0,
            stage_windows: vec![
                StageWindow { name: "planning".into(), start: 0, end: 2048 },
                StageWindow { name: "execution".into(), start: 2048, end: 4096 },
            ],
        }
    }

    /// Paradigm plan with class-specific execution-stage coupling: class 1
    /// carries theta-beta QPC on channel 4 (C3), class 2 alpha-gamma QPC on
    /// channel 11 (C4). Every class receives the same tone sets, so spectral
    /// power is identical across classes; only the phase coupling of the
    /// class's designated injection is genuine. This keeps the class
    /// differences confined to the injected band-pair blocks instead of
    /// leaking through band-power shifts.
    pub fn paradigm_with_coupling(trials_per_class: usize) -> SynthPlan {
        let mut plan = SynthPlan::paradigm(trials_per_class);
        let theta_beta = |coupled: bool| Injection {
            channel: 4,
            driver_band: BandName::Theta,
            responder_band: BandName::Beta,
            strength: 2.0,
            stage: "execution".into(),
            coupled,
        };
        let alpha_gamma = |coupled: bool| Injection {
            channel: 11,
            driver_band: BandName::Alpha,
            responder_band: BandName::Gamma,
            strength: 2.0,
            stage: "execution".into(),
            coupled,
        };
        for (label, class) in plan.classes.iter_mut().enumerate() {
            class.injections.push(theta_beta(label == 1));
            class.injections.push(alpha_gamma(label == 2));
        }
        plan
    }

    pub fn trial_len(&self) -> usize {
        self.stage_windows.iter().map(|w| w.end).max().unwrap_or(0)
    }
}

/// Deterministic triplet placement for an injection: up to three coupled
/// (driver, responder) cells spread over the two bands, with the sum
/// frequency kept below Nyquist. Candidate offsets are chosen so that no
/// sum of two tones from *different* triplets coincides with a third tone
/// outside the injected (driver, responder) block — such accidental
/// coincidences would phase-lock cells in unrelated band pairs (phases are
/// drawn once per trial, so any tone-sum coincidence is coherent across
/// segments).
pub fn injection_cells(driver: BandName, responder: BandName, fs: f64) -> Vec<(usize, usize)> {
    let d = band(driver);
    let r = band(responder);
    let dbins = d.bins_hz();
    let rbins = r.bins_hz();
    let dc = d.center_bin() as i64;
    let rc = r.center_bin() as i64;
    let candidates = [(dc - 1, rc), (dc + 1, rc - 3), (dc + 2, rc + 7)];
    let mut out: Vec<(usize, usize)> = Vec::new();
    'cand: for (db, rb) in candidates {
        if db < 1 || rb < 1 {
            continue;
        }
        let (db, rb) = (db as usize, rb as usize);
        if !dbins.contains(&db) || !rbins.contains(&rb) || ((db + rb) as f64) >= fs / 2.0 {
            continue;
        }
        // Reject any candidate whose tones would collide with an existing
        // triplet's tones at a sum frequency outside the block.
        let mut tones: Vec<usize> = out.iter().flat_map(|&(a, b)| [a, b, a + b]).collect();
        tones.extend([db, rb, db + rb]);
        tones.sort_unstable();
        tones.dedup();
        for (i, &a) in tones.iter().enumerate() {
            for &b in &tones[i..] {
                if tones.contains(&(a + b))
                    && !(dbins.contains(&a.min(b)) && rbins.contains(&a.max(b)))
                {
                    continue 'cand;
                }
            }
        }
        out.push((db, rb));
    }
    out
}

/// Generate a labeled multi-trial recording: per-trial 1/f background noise
/// on every channel plus the plan's class-specific coupled triplets.
pub fn synth_dataset(plan: &SynthPlan, rng_seed: u64) -> Result<EpochedRecording> {
    if plan.n_channels == 0 || plan.classes.is_empty() {
        return Err(Error::InvalidArgument("plan needs channels and classes".into()));
    }
    let trial_len = plan.trial_len();
    if trial_len == 0 {
        return Err(Error::InvalidArgument("plan has no stage windows".into()));
    }
    for c in &plan.classes {
        for inj in &c.injections {
            if inj.channel >= plan.n_channels {
                return Err(Error::InvalidArgument(format!(
                    "injection channel {} out of range",
                    inj.channel
                )));
            }
            for b in [inj.driver_band, inj.responder_band] {
                let def = band(b);
                if def.low < 1.0 || def.high > 40.0 {
                    return Err(Error::InvalidArgument("injection band outside 1-40 Hz".into()));
                }
            }
            if plan.stage_windows.iter().all(|w| w.name != inj.stage) {
                return Err(Error::InvalidArgument(format!("unknown injection stage '{}'", inj.stage)));
            }
        }
    }

    let n_trials: usize = plan.classes.iter().map(|c| c.trials).sum();
    let mut data = Array3::zeros((n_trials, plan.n_channels, trial_len));
    let mut labels = Vec::with_capacity(n_trials);

    let mut trial_idx = 0;
    for class in &plan.classes {
        for rep in 0..class.trials {
            labels.push(class.label);
            for ch in 0..plan.n_channels {
                let seed = derive_seed(rng_seed, &[class.label as u64, rep as u64, ch as u64]);
                let mut rng = seeded_rng(seed);
                let noise = pink_noise(trial_len, plan.fs, &mut rng)?;
                let mut x = noise.samples;
                for inj in class.injections.iter().filter(|i| i.channel == ch) {
                    let window = plan
                        .stage_windows
                        .iter()
                        .find(|w| w.name == inj.stage)
                        .expect("stage validated");
                    let cells = injection_cells(inj.driver_band, inj.responder_band, plan.fs);
                    // Fresh phases per 256-sample block: coupled triplets
                    // keep p3 = p1 + p2 in every block, uncoupled ones draw
                    // p3 independently, so bicoherence telling them apart
                    // needs genuine cross-segment phase consistency rather
                    // than within-trial tone coherence.
                    const BLOCK: usize = 256;
                    for (f1, f2) in cells {
                        let mut start = window.start;
                        while start < window.end {
                            let end = (start + BLOCK).min(window.end);
                            let p1 = rng.gen::<f64>() * TAU;
                            let p2 = rng.gen::<f64>() * TAU;
                            let p3 = if inj.coupled { p1 + p2 } else { rng.gen::<f64>() * TAU };
                            for s in start..end {
                                let t = (s - start) as f64 / plan.fs;
                                x[s] += inj.strength
                                    * ((TAU * f1 as f64 * t + p1).cos()
                                        + (TAU * f2 as f64 * t + p2).cos()
                                        + (TAU * (f1 + f2) as f64 * t + p3).cos());
                            }
                            start = end;
                        }
                    }
                }
                for (s, v) in x.iter().enumerate() {
                    data[[trial_idx, ch, s]] = *v;
                }
            }
            trial_idx += 1;
        }
    }

    let channel_names: Vec<String> = if plan.n_channels <= DEFAULT_CHANNELS.len() {
        DEFAULT_CHANNELS[..plan.n_channels].iter().map(|s| s.to_string()).collect()
    } else {
        (0..plan.n_channels).map(|i| format!("Ch{i}")).collect()
    };
    let class_set: Vec<usize> = plan.classes.iter().map(|c| c.label).collect();
    let rec = EpochedRecording {
        data,
        fs: plan.fs,
        channel_names,
        labels,
        class_set,
        stage_windows: plan.stage_windows.clone(),
    };
    rec.validate(1)?;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::WindowSpec;

    #[test]
    fn pure_tone_basics() {
        let x = synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0).unwrap();
        assert_eq!(x.len(), 256);
        assert_eq!(x.samples[0], 0.0);
        let x2 = synth_pure_tone(10.0, 2.0, 0.0, 1.0, 256.0).unwrap();
        for (a, b) in x.samples.iter().zip(&x2.samples) {
            assert_eq!(*b, 2.0 * a);
        }
        assert!(synth_pure_tone(128.0, 1.0, 0.0, 1.0, 256.0).is_err());
    }

    #[test]
    fn qpc_deterministic_and_on_bin_checked() {
        let spec = WindowSpec::default();
        let a = synth_qpc_triplet(10.0, 15.0, true, 4, &spec, 256.0, 7).unwrap();
        let b = synth_qpc_triplet(10.0, 15.0, true, 4, &spec, 256.0, 7).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.len(), 4 * 256);
        assert!(synth_qpc_triplet(10.3, 15.0, true, 4, &spec, 256.0, 7).is_err());
    }

    #[test]
    fn dataset_shape_and_determinism() {
        let mut plan = SynthPlan::paradigm(3);
        plan.classes[0].injections.push(Injection {
            channel: 6,
            driver_band: BandName::Theta,
            responder_band: BandName::Beta,
            strength: 1.0,
            stage: "execution".into(),
            coupled: true,
        });
        let a = synth_dataset(&plan, 99).unwrap();
        assert_eq!(a.data.dim(), (9, 16, 4096));
        assert_eq!(a.labels, vec![0, 0, 0, 1, 1, 1, 2, 2, 2]);
        let b = synth_dataset(&plan, 99).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn paradigm_full_shape() {
        let plan = SynthPlan::paradigm(75);
        assert_eq!(plan.trial_len(), 4096);
        let total: usize = plan.classes.iter().map(|c| c.trials).sum();
        assert_eq!(total, 225);
    }

    #[test]
    fn injection_cells_stay_in_block() {
        let cells = injection_cells(BandName::Theta, BandName::Beta, 256.0);
        assert!(!cells.is_empty());
        for (d, r) in cells {
            assert!((4..8).contains(&d));
            assert!((13..30).contains(&r));
        }
    }
}
