//! Acceptance suite: one test per release criterion, each printing a
//! `criterion N: PASS` line (run with `--nocapture` to see them inline).

use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;

use bispec_core::bispectrum::{
    estimate_bicoherence, estimate_bispectrum, BicoherenceMatrix, FreqGrid,
};
use bispec_core::cv::{
    cross_validate, fold_averaged_importance, select_top, CvOutcome, LabeledDesign,
};
use bispec_core::dsp::{segment_and_fft, TimeSeries, WindowKind, WindowSpec};
use bispec_core::bands::extract_submatrix;
use bispec_core::features::{compute_raw_features, expand_features, flatten};
use bispec_core::forest::ForestHyperparams;
use bispec_core::io::RunConfig;
use bispec_core::pipeline::run_pipeline;
use bispec_core::stats;
use bispec_core::synth::{
    seeded_rng, synth_dataset, synth_pure_tone, synth_qpc_triplet, SynthPlan,
};

fn pass(n: usize, what: &str) {
    println!("criterion {n}: PASS - {what}");
}

fn spectra(x: &TimeSeries, kind: WindowKind, overlap: f64) -> bispec_core::dsp::SegmentSpectra {
    let spec = WindowSpec::new(256, overlap, kind).unwrap();
    segment_and_fft(x, &spec).unwrap()
}

#[test]
fn criterion_01_synthetic_peak_structure() {
    let t0 = Instant::now();

    let pure = synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0).unwrap();
    let b = estimate_bispectrum(
        &spectra(&pure, WindowKind::HannSymmetric, 0.5),
        &FreqGrid::default_1_to_40(),
    )
    .unwrap();
    let p = b.peak();
    assert_eq!((p.f1, p.f2), (10.0, 10.0), "pure-tone peak at {:?}", (p.f1, p.f2));

    let shifted = synth_pure_tone(10.0, 1.0, std::f64::consts::FRAC_PI_4, 1.0, 256.0).unwrap();
    let b = estimate_bispectrum(
        &spectra(&shifted, WindowKind::HannSymmetric, 0.5),
        &FreqGrid::with_dc_0_to_40(),
    )
    .unwrap();
    let p = b.peak();
    let at_dc = (p.f1 == 10.0 && p.f2 == 0.0) || (p.f1 == 0.0 && p.f2 == 10.0);
    assert!(at_dc, "shifted-tone peak at {:?}", (p.f1, p.f2));
    assert!(p.phase.abs() <= 0.05, "shifted-tone phase {}", p.phase);

    let t1 = synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0).unwrap();
    let t2 = synth_pure_tone(20.0, 1.0, 0.0, 1.0, 256.0).unwrap();
    let two = TimeSeries::new(
        t1.samples.iter().zip(&t2.samples).map(|(a, b)| a + b).collect(),
        256.0,
    )
    .unwrap();
    let b = estimate_bispectrum(
        &spectra(&two, WindowKind::HannSymmetric, 0.5),
        &FreqGrid::default_1_to_40(),
    )
    .unwrap();
    let phase = b.values[[9, 9]].arg();
    assert!(
        (phase - (-std::f64::consts::FRAC_PI_2)).abs() <= 0.15,
        "two-tone phase {phase}"
    );

    assert!(t0.elapsed().as_secs_f64() < 1.0, "took {:?}", t0.elapsed());
    pass(1, "pure/shifted/two-tone peak locations and phases");
}

#[test]
fn criterion_02_amplitude_cubed_scaling() {
    let grid = FreqGrid::default_1_to_40();
    let a1 = synth_pure_tone(10.0, 1.0, 0.0, 1.0, 256.0).unwrap();
    let a2 = synth_pure_tone(10.0, 2.0, 0.0, 1.0, 256.0).unwrap();
    let b1 = estimate_bispectrum(&spectra(&a1, WindowKind::HannSymmetric, 0.5), &grid).unwrap();
    let b2 = estimate_bispectrum(&spectra(&a2, WindowKind::HannSymmetric, 0.5), &grid).unwrap();
    let mut checked = 0;
    for (v1, v2) in b1.values.iter().zip(b2.values.iter()) {
        if v2.norm() > 1e-9 {
            let ratio = v2.norm() / v1.norm();
            assert!((ratio - 8.0).abs() <= 1e-6, "ratio {ratio}");
            checked += 1;
        }
    }
    assert!(checked > 0, "no cells above the magnitude floor");
    pass(2, "amplitude doubling scales bispectral magnitude by 8.000 +/- 1e-6");
}

#[test]
fn criterion_03_qpc_detection() {
    let t0 = Instant::now();
    let spec = WindowSpec::new(256, 0.0, WindowKind::HannPeriodic).unwrap();
    let grid = FreqGrid::default_1_to_40();
    let cell = (5usize, 16usize); // (6 Hz, 17 Hz) on the 1..=40 axis

    let coupled = synth_qpc_triplet(6.0, 17.0, true, 32, &spec, 256.0, 7).unwrap();
    let b = estimate_bicoherence(&segment_and_fft(&coupled, &spec).unwrap(), &grid).unwrap();
    let mag = b.values[[cell.0, cell.1]].norm();
    assert!(mag >= 0.95, "coupled |b| = {mag}");

    let mut quiet = 0;
    for seed in 0..20 {
        let x = synth_qpc_triplet(6.0, 17.0, false, 64, &spec, 256.0, seed).unwrap();
        let b = estimate_bicoherence(&segment_and_fft(&x, &spec).unwrap(), &grid).unwrap();
        if b.values[[cell.0, cell.1]].norm() < 0.3 {
            quiet += 1;
        }
    }
    assert!(quiet >= 19, "uncoupled below 0.3 in only {quiet}/20 seeds");
    assert!(t0.elapsed().as_secs_f64() < 5.0, "took {:?}", t0.elapsed());
    pass(3, "coupled |b| >= 0.95; uncoupled < 0.3 in >= 19/20 seeds");
}

#[test]
fn criterion_04_estimator_invariants() {
    let grid = FreqGrid::default_1_to_40();
    let spec = WindowSpec::new(256, 0.5, WindowKind::HannPeriodic).unwrap();
    let mut corpus: Vec<TimeSeries> = vec![
        synth_pure_tone(10.0, 1.0, 0.0, 4.0, 256.0).unwrap(),
        synth_qpc_triplet(6.0, 17.0, true, 8, &WindowSpec::new(256, 0.0, WindowKind::HannPeriodic).unwrap(), 256.0, 1)
            .unwrap(),
    ];
    for seed in 0..5 {
        let mut rng = seeded_rng(100 + seed);
        corpus.push(bispec_core::synth::pink_noise(1024, 256.0, &mut rng).unwrap());
    }

    for x in &corpus {
        let s = segment_and_fft(x, &spec).unwrap();
        // Parseval per segment: windowed time energy equals spectrum energy / nfft.
        let taper = spec.taper();
        let hop = spec.hop();
        for (k, seg) in s.spectra.iter().enumerate() {
            let raw = &x.samples[k * hop..k * hop + 256];
            let mean = raw.iter().sum::<f64>() / 256.0;
            let et: f64 = raw.iter().zip(&taper).map(|(&v, &w)| ((v - mean) * w).powi(2)).sum();
            let ef: f64 = seg.iter().map(|c| c.norm_sqr()).sum::<f64>() / 256.0;
            assert!((et - ef).abs() <= 1e-9 * et.max(1e-30), "parseval {et} vs {ef}");
        }

        let b = estimate_bicoherence(&s, &grid).unwrap();
        let n = grid.f1_hz.len();
        for i in 0..n {
            for j in 0..n {
                let d = (b.values[[i, j]] - b.values[[j, i]]).norm();
                assert!(d <= 1e-12, "symmetry violated by {d}");
                assert!(b.values[[i, j]].norm() <= 1.0 + 1e-9);
            }
        }
    }
    pass(4, "f1<->f2 symmetry, |b| bound, Parseval on the synthetic corpus");
}

#[test]
fn criterion_05_feature_formulas() {
    // Uniform magnitudes: H_b = ln N.
    let n = 12usize;
    let uni = Array2::from_elem((3, 4), Complex64::new(0.5, 0.0));
    let raw = compute_raw_features(uni.view()).unwrap();
    assert!((raw.mag_entropy - (n as f64).ln()).abs() < 1e-12);

    // Identical phases: R = 1, V = 0, H_theta = 0, mean phase = theta0.
    let theta0 = 0.7;
    let same = Array2::from_shape_fn((5, 5), |(i, j)| {
        Complex64::from_polar(0.1 + (i + j) as f64, theta0)
    });
    let raw = compute_raw_features(same.view()).unwrap();
    assert!((raw.phase_concentration - 1.0).abs() < 1e-12);
    assert!(raw.circ_variance.abs() < 1e-12);
    assert!(raw.phase_entropy.abs() < 1e-12);
    assert!((raw.mean_phase - theta0).abs() < 1e-12);

    // Magnitudes {0.2, 0.4, 0.6, 0.8}: mean 0.5, max 0.8, sum 2.0.
    let mags =
        Array2::from_shape_vec((2, 2), vec![0.2, 0.4, 0.6, 0.8].into_iter().map(|m| Complex64::new(m, 0.0)).collect())
            .unwrap();
    let raw = compute_raw_features(mags.view()).unwrap();
    assert!((raw.mean_bicoh - 0.5).abs() < 1e-15);
    assert!((raw.max_bicoh - 0.8).abs() < 1e-15);
    assert!((raw.sum_bicoh - 2.0).abs() < 1e-15);
    let f = expand_features(&raw);
    assert!((f[2] - (2.0f64 + 1e-12).ln()).abs() < 1e-15);

    // Expansion of the mean phase.
    for (theta, sin, cos) in [(0.0, 0.0, 1.0), (std::f64::consts::FRAC_PI_2, 1.0, 0.0)] {
        let m = Array2::from_elem((2, 2), Complex64::from_polar(1.0, theta));
        let f = expand_features(&compute_raw_features(m.view()).unwrap());
        assert!((f[4] - sin).abs() < 1e-12 && (f[5] - cos).abs() < 1e-12);
    }

    // V + R = 1 exactly, and mirror-pair equality over random submatrices.
    let grid = FreqGrid::default_1_to_40();
    let pairs = bispec_core::bands::all_band_pairs();
    let mut rng = seeded_rng(42);
    for trial in 0..1000 {
        let n = grid.f1_hz.len();
        let mut values = Array2::from_elem((n, n), Complex64::new(0.0, 0.0));
        for i in 0..n {
            for j in i..n {
                let v = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                values[[i, j]] = v;
                values[[j, i]] = v;
            }
        }
        let b = BicoherenceMatrix { values, grid: grid.clone(), n_segments: 1 };
        let pair = pairs[trial % pairs.len()];
        let mirror = bispec_core::bands::BandPair { driver: pair.responder, responder: pair.driver };
        let fa = expand_features(
            &compute_raw_features(extract_submatrix(&b, &pair).unwrap().view()).unwrap(),
        );
        let fb = expand_features(
            &compute_raw_features(extract_submatrix(&b, &mirror).unwrap().view()).unwrap(),
        );
        for (a, bql) in fa.iter().zip(&fb) {
            assert!((a - bql).abs() <= 1e-12, "mirror mismatch {a} vs {bql}");
        }
        assert_eq!(fa[7] + fa[8], 1.0, "V + R must be exactly 1");
    }
    pass(5, "all nine feature formulas, V+R=1, mirror-pair equality (1000 draws)");
}

/// Shared state for criteria 6 and 7: the end-to-end decoding run.
struct DecodingRun {
    design: LabeledDesign,
    outcome: CvOutcome,
    importance: Vec<f64>,
    elapsed_s: f64,
    const_col: usize,
}

static DECODING: OnceLock<DecodingRun> = OnceLock::new();

fn decoding_run() -> &'static DecodingRun {
    DECODING.get_or_init(|| {
        let t0 = Instant::now();
        let config = RunConfig::default();
        let plan = SynthPlan::paradigm_with_coupling(75);
        let rec = synth_dataset(&plan, config.seed).unwrap();

        // Classes 0 (background) vs 1 (theta-beta coupling), execution stage.
        let trials: Vec<usize> =
            (0..rec.n_trials()).filter(|&i| rec.labels[i] < 2).collect();
        let sub = bispec_core::recording::EpochedRecording {
            data: rec.data.select(Axis(0), &trials),
            fs: rec.fs,
            channel_names: rec.channel_names.clone(),
            labels: trials.iter().map(|&i| rec.labels[i]).collect(),
            class_set: vec![0, 1],
            stage_windows: rec.stage_windows.clone(),
        };
        let tensor =
            bispec_core::features::build_feature_tensor(&sub, "execution", &config.window, &config.grid)
                .unwrap();
        let (mut x, index) = flatten(&tensor);

        // One deliberately constant column (background channel 0) for the
        // exact-zero importance check in criterion 7.
        let const_col = index.flat(0, 0, 0);
        for v in x.column_mut(const_col) {
            *v = 3.25;
        }

        let design = LabeledDesign { x, y: sub.labels.clone(), index };
        let outcome = cross_validate(
            &design,
            5,
            &ForestHyperparams::default(),
            config.seed,
            bispec_core::features::StandardizeMode::TrainOnly,
            "acceptance",
        )
        .unwrap();
        let importance = fold_averaged_importance(&outcome, &design.y, 10, config.seed).unwrap();
        DecodingRun { design, outcome, importance, elapsed_s: t0.elapsed().as_secs_f64(), const_col }
    })
}

#[test]
fn criterion_06_end_to_end_decoding() {
    let run = decoding_run();
    let acc = run.outcome.report.mean_test_acc();
    assert!(acc >= 0.90, "mean held-out accuracy {acc}");
    assert!(run.elapsed_s < 120.0, "decoding run took {:.1} s", run.elapsed_s);

    // Label-shuffled control: mean accuracy inside the 95% binomial null
    // interval around 0.5 for n = 150.
    let mut y = run.design.y.clone();
    use rand::seq::SliceRandom;
    y.shuffle(&mut seeded_rng(987));
    let shuffled = LabeledDesign { x: run.design.x.clone(), y, index: run.design.index };
    let control = cross_validate(
        &shuffled,
        5,
        &ForestHyperparams::default(),
        11,
        bispec_core::features::StandardizeMode::TrainOnly,
        "acceptance-control",
    )
    .unwrap();
    let null_acc = control.report.mean_test_acc();
    let half_width = 1.96 * (0.25f64 / 150.0).sqrt();
    assert!(
        (null_acc - 0.5).abs() <= half_width,
        "shuffled-control accuracy {null_acc} outside 0.5 +/- {half_width:.3}"
    );
    pass(6, "held-out accuracy >= 0.90; shuffled control at chance");
}

#[test]
fn criterion_07_feature_selection_validity() {
    let run = decoding_run();
    assert_eq!(run.importance[run.const_col], 0.0, "constant feature importance must be 0");

    let (ranked, _) = select_top(&run.importance, f64::NEG_INFINITY);
    let top20 = &ranked[..20];
    // Injected block: channel 4, theta-beta pair and its beta-theta mirror.
    let in_block = top20
        .iter()
        .filter(|&&flat| {
            let (ch, pair, _) = run.design.index.unflatten(flat);
            ch == 4 && (pair == 8 || pair == 16)
        })
        .count();
    assert!(in_block * 10 >= 20 * 6, "{in_block}/20 top features in the injected block");
    pass(7, "top-20 importance concentrates in the injected block; constant feature scores 0");
}

#[test]
fn criterion_08_statistics_oracles() {
    // Wilcoxon exact p vs sign-pattern enumeration, 200 random paired samples.
    let mut rng = seeded_rng(88);
    let mut tested = 0;
    while tested < 200 {
        let m = rng.gen_range(3..=12usize);
        let d: Vec<f64> =
            (0..m).map(|_| ((rng.gen::<f64>() - 0.5) * 4.0 * 10.0).round() / 10.0).collect();
        if d.iter().all(|&v| v == 0.0) {
            continue;
        }
        let a: Vec<f64> = d.clone();
        let b = vec![0.0; m];
        let r = stats::wilcoxon_signed_rank(&a, &b).unwrap();

        let nz: Vec<f64> = d.into_iter().filter(|&v| v != 0.0).collect();
        let m = nz.len();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| nz[i].abs().partial_cmp(&nz[j].abs()).unwrap());
        let mut ranks = vec![0.0; m];
        let mut i = 0;
        while i < m {
            let mut j = i;
            while j + 1 < m && nz[order[j + 1]].abs() == nz[order[i]].abs() {
                j += 1;
            }
            let avg = (i + j + 2) as f64 / 2.0;
            for &k in &order[i..=j] {
                ranks[k] = avg;
            }
            i = j + 1;
        }
        let w_obs: f64 = (0..m).filter(|&k| nz[k] > 0.0).map(|k| ranks[k]).sum();
        let (mut le, mut ge) = (0usize, 0usize);
        for mask in 0..(1usize << m) {
            let w: f64 = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
            if w <= w_obs + 1e-9 {
                le += 1;
            }
            if w >= w_obs - 1e-9 {
                ge += 1;
            }
        }
        let p_enum = (2.0 * le.min(ge) as f64 / (1usize << m) as f64).min(1.0);
        assert!((r.p - p_enum).abs() <= 1e-12, "exact {} vs enum {}", r.p, p_enum);
        tested += 1;
    }

    // BH-FDR worked example.
    let adj = stats::bh_fdr(&[0.01, 0.04, 0.03, 0.002]);
    for (a, e) in adj.iter().zip([0.02, 0.04, 0.04, 0.008]) {
        assert!((a - e).abs() < 1e-12);
    }

    // Friedman perfect concordance: W = 1.
    let table: Vec<Vec<f64>> = (0..8).map(|_| vec![1.0, 2.0, 3.0, 4.0, 5.0]).collect();
    let f = stats::friedman(&table).unwrap();
    assert!((f.kendall_w - 1.0).abs() < 1e-12);

    // Shapiro-Wilk against the AS R94 reference corpus.
    #[derive(serde::Deserialize)]
    struct Case {
        x: Vec<f64>,
        w: f64,
    }
    let cases: Vec<Case> =
        serde_json::from_str(include_str!("data/shapiro_reference.json")).unwrap();
    assert_eq!(cases.len(), 100);
    for c in &cases {
        let r = stats::shapiro_wilk(&c.x).unwrap();
        assert!((r.w - c.w).abs() <= 1e-4, "W {} vs reference {}", r.w, c.w);
    }
    pass(8, "Wilcoxon enumeration, BH-FDR example, Kendall W = 1, Shapiro-Wilk corpus");
}

#[test]
fn criterion_09_stage_comparison_suite() {
    use rand_distr::{Distribution, Normal};
    let bands = ["delta", "theta", "alpha", "beta", "gamma"];
    let mut rng = seeded_rng(9);
    let noise = Normal::new(0.0, 0.02).unwrap();

    let mut family = Vec::new();
    let mut planning_all = Vec::new();
    for band in bands {
        let planning: Vec<f64> =
            (0..10).map(|_| 0.7 + noise.sample(&mut rng)).collect();
        let execution: Vec<f64> =
            planning.iter().map(|p| p + 0.1 + noise.sample(&mut rng)).collect();
        family.push((band.to_string(), execution, planning.clone()));
        planning_all.push(planning);
    }
    let out = stats::paired_comparison_suite(&family).unwrap();
    for c in &out {
        assert!(c.p_adjusted < 0.05, "{}: p_fdr = {}", c.label, c.p_adjusted);
        assert!(c.cohen_d > 0.8, "{}: d = {}", c.label, c.cohen_d);
    }

    // Identical-stage control: all differences zero, nothing significant.
    let control: Vec<(String, Vec<f64>, Vec<f64>)> = bands
        .iter()
        .zip(&planning_all)
        .map(|(b, p)| (b.to_string(), p.clone(), p.clone()))
        .collect();
    let out = stats::paired_comparison_suite(&control).unwrap();
    for c in &out {
        assert!(c.p_adjusted >= 0.05, "{}: control p_fdr = {}", c.label, c.p_adjusted);
    }
    pass(9, "constructed stage shift significant in all bands; identical-stage control clean");
}

#[test]
fn criterion_10_determinism_across_thread_counts() {
    let config = RunConfig {
        hyperparams: ForestHyperparams { n_trees: 25, ..Default::default() },
        k_folds: 3,
        perm_repeats: 2,
        trials_per_class: 6,
        emit_svg: false,
        ..RunConfig::default()
    };
    let plan = SynthPlan::paradigm_with_coupling(config.trials_per_class);
    let rec = synth_dataset(&plan, config.seed).unwrap();

    let mut digests = Vec::new();
    for threads in [1usize, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let bundle = pool.install(|| run_pipeline(&rec, &config)).unwrap();
        digests.push((threads, bundle.digest()));
    }
    assert_eq!(digests[0].1, digests[1].1, "1 vs 4 threads differ");
    assert_eq!(digests[0].1, digests[2].1, "1 vs 8 threads differ");
    pass(10, "identical bundle digests for 1, 4, and 8 worker threads");
}
