//! Nonparametric statistics: Shapiro-Wilk normality, paired tests with a
//! normality gate, Friedman with Kendall's W, and Benjamini-Hochberg FDR.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p: f64,
}

/// Shapiro-Wilk normality test, Royston's AS R94 approximation (3 <= n <= 5000).
pub fn shapiro_wilk(x: &[f64]) -> Result<ShapiroWilk> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::InvalidArgument(format!("shapiro_wilk needs 3..=5000 samples, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    let mut xs = x.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if xs[n - 1] - xs[0] <= 0.0 {
        return Err(Error::Degenerate("zero-range sample in shapiro_wilk".into()));
    }

    let normal = Normal::new(0.0, 1.0).unwrap();
    let nf = n as f64;
    // Blom-type expected normal order statistics.
    let m: Vec<f64> =
        (1..=n).map(|i| normal.inverse_cdf((i as f64 - 0.375) / (nf + 0.25))).collect();
    let ssm: f64 = m.iter().map(|v| v * v).sum();
    let rsn = 1.0 / nf.sqrt();

    // Antisymmetric weight vector a, ascending to match the sorted sample;
    // the extreme one or two weights take Royston's polynomial corrections
    // and the interior is rescaled so that sum(a^2) = 1.
    let mut a = vec![0.0; n];
    if n == 3 {
        a[2] = std::f64::consts::FRAC_1_SQRT_2;
        a[0] = -a[2];
    } else {
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let an = m[n - 1] / ssm.sqrt() + poly(&C1, rsn);
        if n > 5 {
            let an1 = m[n - 2] / ssm.sqrt() + poly(&C2, rsn);
            let phi = (ssm - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2])
                / (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
            for i in 2..n - 2 {
                a[i] = m[i] / phi.sqrt();
            }
            a[n - 1] = an;
            a[n - 2] = an1;
            a[0] = -an;
            a[1] = -an1;
        } else {
            let phi = (ssm - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
            for i in 1..n - 1 {
                a[i] = m[i] / phi.sqrt();
            }
            a[n - 1] = an;
            a[0] = -an;
        }
    }

    let mean = xs.iter().sum::<f64>() / nf;
    let ssx: f64 = xs.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = a.iter().zip(&xs).map(|(ai, xi)| ai * xi).sum();
    let w = ((num * num) / ssx).clamp(0.0, 1.0);

    let p = if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = (0.75f64).sqrt().asin();
        (pi6 * (w.sqrt().asin() - stqr)).clamp(0.0, 1.0)
    } else if n <= 11 {
        const C3: [f64; 2] = [-2.273, 0.459];
        const C4: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
        const C5: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
        let gamma = poly(&C3, nf);
        if gamma - (1.0 - w).ln() <= 0.0 {
            // w is at the upper end of the supported range
            1e-99
        } else {
            let y = -(gamma - (1.0 - w).ln()).ln();
            let mu = poly(&C4, nf);
            let sigma = poly(&C5, nf).exp();
            1.0 - normal.cdf((y - mu) / sigma)
        }
    } else {
        const C6: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
        const C7: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
        let ln_n = nf.ln();
        let y = (1.0 - w).ln();
        let mu = poly(&C6, ln_n);
        let sigma = poly(&C7, ln_n).exp();
        1.0 - normal.cdf((y - mu) / sigma)
    };
    Ok(ShapiroWilk { w, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    /// Cohen's d on the differences: mean(d) / sd(d).
    pub effect: f64,
}

pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::InvalidArgument("paired samples must match and have n >= 2".into()));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd <= 0.0 {
        return Err(Error::Degenerate("zero-variance differences in paired t-test".into()));
    }
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(|e| Error::Degenerate(e.to_string()))?;
    let p = (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0);
    Ok(PairedTTest { t, df: n - 1.0, p, effect: mean / sd })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of positive ranks.
    pub w_plus: f64,
    pub p: f64,
    /// Rank-biserial correlation (W+ - W-)/(W+ + W-).
    pub effect: f64,
    pub n_used: usize,
    pub exact: bool,
}

/// Two-sided Wilcoxon signed-rank test. Zero differences are dropped; ties
/// get averaged ranks. Exact distribution (dynamic program over doubled
/// ranks) for m <= 25, normal approximation with continuity and tie
/// correction above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("paired samples must match".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let m = d.len();
    if m == 0 {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }

    // Average ranks of |d|.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| d[i].abs().partial_cmp(&d[j].abs()).unwrap());
    let mut ranks = vec![0.0; m];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && d[order[j + 1]].abs() == d[order[i]].abs() {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }

    let w_plus: f64 = (0..m).filter(|&k| d[k] > 0.0).map(|k| ranks[k]).sum();
    let total = m as f64 * (m as f64 + 1.0) / 2.0;
    let w_minus = total - w_plus;
    let effect = (w_plus - w_minus) / total;

    let (p, exact) = if m <= 25 {
        // All ranks are halves of integers; doubling makes the DP integral.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max_sum: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max_sum + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max_sum).rev() {
                counts[s] += counts[s - r];
            }
        }
        let total_count = 2f64.powi(m as i32);
        let w2 = (2.0 * w_plus).round() as usize;
        let le: f64 = counts[..=w2].iter().sum();
        let ge: f64 = counts[w2..].iter().sum();
        ((2.0 * (le.min(ge)) / total_count).min(1.0), true)
    } else {
        let mf = m as f64;
        let mean = mf * (mf + 1.0) / 4.0;
        let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term / 48.0;
        if var <= 0.0 {
            return Err(Error::Degenerate("zero variance in wilcoxon approximation".into()));
        }
        let z = (w_plus - mean - 0.5 * (w_plus - mean).signum()) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).unwrap();
        ((2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0), false)
    };
    Ok(WilcoxonResult { w_plus, p, effect, n_used: m, exact })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: f64,
    pub p: f64,
    /// Kendall's coefficient of concordance, chi2 / (n (k - 1)).
    pub kendall_w: f64,
    pub rank_sums: Vec<f64>,
}

/// Friedman rank test over an n-subjects x k-treatments table with the
/// standard tie correction.
pub fn friedman(table: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = table.len();
    if n < 2 {
        return Err(Error::InvalidArgument("friedman needs >= 2 subjects".into()));
    }
    let k = table[0].len();
    if k < 3 || table.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidArgument("friedman needs a rectangular table with k >= 3".into()));
    }

    let mut rank_sums = vec![0.0; k];
    let mut tie_term = 0.0;
    for row in table {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| row[i].partial_cmp(&row[j]).unwrap());
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && row[order[j + 1]] == row[order[i]] {
                j += 1;
            }
            let avg = (i + j + 2) as f64 / 2.0;
            for &c in &order[i..=j] {
                rank_sums[c] += avg;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
    }

    let nf = n as f64;
    let kf = k as f64;
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * rank_sums.iter().map(|r| r * r).sum::<f64>()
        - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_term / (nf * kf * (kf * kf - 1.0));
    if correction <= 0.0 {
        return Err(Error::Degenerate("all treatments tied in every row".into()));
    }
    let chi2 = raw / correction;
    let dist = ChiSquared::new(kf - 1.0).unwrap();
    let p = (1.0 - dist.cdf(chi2.max(0.0))).clamp(0.0, 1.0);
    let kendall_w = chi2 / (nf * (kf - 1.0));
    Ok(FriedmanResult { chi2, df: kf - 1.0, p, kendall_w, rank_sums })
}

/// Benjamini-Hochberg step-up adjusted p-values, returned in input order.
pub fn bh_fdr(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p[i].partial_cmp(&p[j]).unwrap());
    let mut adj = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        let q = (p[i] * m as f64 / (rank + 1) as f64).min(1.0);
        running = running.min(q);
        adj[i] = running;
    }
    adj
}

/// Which paired test the normality gate chose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairedTestKind {
    PairedT,
    Wilcoxon,
    /// All paired differences were zero; reported as p = 1, effect 0.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub label: String,
    pub shapiro_p: f64,
    pub test: PairedTestKind,
    pub statistic: f64,
    pub p: f64,
    pub p_adjusted: f64,
    /// Branch-appropriate effect size: Cohen's d for the t branch,
    /// rank-biserial correlation for the Wilcoxon branch.
    pub effect: f64,
    /// Cohen's d on the differences, emitted for every branch for
    /// comparability (0 for degenerate pairs).
    pub cohen_d: f64,
}

/// One family of paired comparisons sharing an FDR correction. Each entry is
/// (label, condition-A values, condition-B values) over the same subjects.
/// The Shapiro-Wilk gate on the differences (p <= 0.05) routes to Wilcoxon,
/// otherwise the paired t-test.
pub fn paired_comparison_suite(
    pairs: &[(String, Vec<f64>, Vec<f64>)],
) -> Result<Vec<PairedComparison>> {
    let mut partial = Vec::with_capacity(pairs.len());
    for (label, a, b) in pairs {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        if d.iter().all(|&v| v == 0.0) {
            partial.push((label.clone(), 0.0, PairedTestKind::Degenerate, 0.0, 1.0, 0.0, 0.0));
            continue;
        }
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let sd =
            (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let cohen_d = if sd > 0.0 { mean / sd } else { 0.0 };
        let sw = shapiro_wilk(&d);
        // A degenerate (constant-difference) pair cannot pass normality.
        let shapiro_p = sw.map(|s| s.p).unwrap_or(0.0);
        let (test, statistic, p, effect) = if shapiro_p <= 0.05 {
            let w = wilcoxon_signed_rank(a, b)?;
            (PairedTestKind::Wilcoxon, w.w_plus, w.p, w.effect)
        } else {
            let t = paired_ttest(a, b)?;
            (PairedTestKind::PairedT, t.t, t.p, t.effect)
        };
        partial.push((label.clone(), shapiro_p, test, statistic, p, effect, cohen_d));
    }
    let adj = bh_fdr(&partial.iter().map(|e| e.4).collect::<Vec<_>>());
    Ok(partial
        .into_iter()
        .zip(adj)
        .map(
            |((label, shapiro_p, test, statistic, p, effect, cohen_d), p_adjusted)| {
                PairedComparison {
                    label,
                    shapiro_p,
                    test,
                    statistic,
                    p,
                    p_adjusted,
                    effect,
                    cohen_d,
                }
            },
        )
        .collect())
}
