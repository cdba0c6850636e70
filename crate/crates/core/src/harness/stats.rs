//! Sample moments, histograms and the comparison against predictions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, Continuous};

use super::config::Bands;
use super::HarnessError;
use crate::theory::{CurveKind, TheoryCurve};

/// Unbiased moments of paired samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub n: usize,
    pub mean0: f64,
    pub mean1: f64,
    pub var0: f64,
    pub var1: f64,
    pub cov: f64,
}

impl SampleMoments {
    pub fn from_pairs(a: &[f64], b: &[f64]) -> Result<Self, HarnessError> {
        let n = a.len();
        if n != b.len() {
            return Err(HarnessError::Stats(format!("sample lengths differ: {n} vs {}", b.len())));
        }
        if n < 2 {
            return Err(HarnessError::Stats(format!("need at least two samples, got {n}")));
        }
        let mean0 = a.iter().sum::<f64>() / n as f64;
        let mean1 = b.iter().sum::<f64>() / n as f64;
        let (mut s00, mut s11, mut s01) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            let (dx, dy) = (x - mean0, y - mean1);
            s00 += dx * dx;
            s11 += dy * dy;
            s01 += dx * dy;
        }
        let d = (n - 1) as f64;
        Ok(Self { n, mean0, mean1, var0: s00 / d, var1: s11 / d, cov: s01 / d })
    }
}

/// Uniform bins on `[lo, hi]` plus counts that fell outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl Histogram {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self, HarnessError> {
        if !(hi > lo) || bins == 0 {
            return Err(HarnessError::Stats(format!("bad histogram range [{lo}, {hi}] with {bins} bins")));
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut counts = vec![0u64; bins];
        let (mut below, mut above) = (0, 0);
        for &x in samples {
            if x < lo {
                below += 1;
            } else if x >= hi {
                above += 1;
            } else {
                counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
            }
        }
        Ok(Self { edges, counts, below, above })
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }
}

/// Number of bins spanning `+-4 sqrt(C(0))`.
pub const HISTOGRAM_BINS: usize = 30;

/// Histogram over `+-4 sd`.
pub fn standard_histogram(samples: &[f64], variance: f64) -> Result<Histogram, HarnessError> {
    let sd = variance.sqrt();
    Histogram::new(samples, -4.0 * sd, 4.0 * sd, HISTOGRAM_BINS)
}

/// `N(0, variance)` density at the bin centres.
pub fn normal_pdf_curve(hist: &Histogram, variance: f64) -> Result<TheoryCurve, HarnessError> {
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| HarnessError::Stats(e.to_string()))?;
    let x = hist.centers();
    let y = x.iter().map(|&v| normal.pdf(v)).collect();
    Ok(TheoryCurve::new(CurveKind::HistogramPdf, x, y)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Merged bins actually used.
    pub bins: usize,
}

/// Smallest expected count per merged bin.
pub const MIN_EXPECTED: f64 = 5.0;
/// Fewest merged bins accepted.
pub const MIN_BINS: usize = 10;

/// Goodness of fit of `hist` against `N(0, variance)`. The outermost bins
/// absorb the tails; neighbours are merged until every expected count
/// reaches [`MIN_EXPECTED`].
pub fn chi_square_normal(hist: &Histogram, variance: f64) -> Result<ChiSquareTest, HarnessError> {
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| HarnessError::Stats(e.to_string()))?;
    let n = hist.total() as f64;
    let bins = hist.counts.len();
    let mut expected = Vec::with_capacity(bins);
    let mut observed = Vec::with_capacity(bins);
    for k in 0..bins {
        let lo = if k == 0 { 0.0 } else { normal.cdf(hist.edges[k]) };
        let hi = if k + 1 == bins { 1.0 } else { normal.cdf(hist.edges[k + 1]) };
        expected.push(n * (hi - lo));
        let mut o = hist.counts[k];
        if k == 0 {
            o += hist.below;
        }
        if k + 1 == bins {
            o += hist.above;
        }
        observed.push(o as f64);
    }
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for (e, o) in expected.iter().zip(&observed) {
        e_acc += e;
        o_acc += o;
        if e_acc >= MIN_EXPECTED {
            groups.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += e_acc;
                last.1 += o_acc;
            }
            None => groups.push((e_acc, o_acc)),
        }
    }
    if groups.len() < MIN_BINS {
        return Err(HarnessError::InsufficientTrials { bins: groups.len(), needed: MIN_BINS });
    }
    let statistic: f64 = groups.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = groups.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| HarnessError::Stats(e.to_string()))?;
    Ok(ChiSquareTest { statistic, dof, p_value: dist.sf(statistic), bins: groups.len() })
}

/// One pass/fail entry of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn within(name: &str, value: f64, lower: f64, upper: f64) -> Self {
        let pass = value.is_finite() && value >= lower && value <= upper;
        Self { name: name.into(), value, lower, upper, pass, note: None }
    }

    pub fn at_most(name: &str, value: f64, upper: f64) -> Self {
        Self::within(name, value, f64::NEG_INFINITY, upper)
    }

    pub fn flag(name: &str, pass: bool, note: impl Into<String>) -> Self {
        let note = note.into();
        Self {
            name: name.into(),
            value: if pass { 1.0 } else { 0.0 },
            lower: 1.0,
            upper: 1.0,
            pass,
            note: (!note.is_empty()).then_some(note),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    !checks.is_empty() && checks.iter().all(|c| c.pass)
}

/// Standard error of an unbiased variance estimate from `n` Gaussian samples.
pub fn variance_se(variance: f64, n: usize) -> f64 {
    variance * (2.0 / (n as f64 - 1.0)).sqrt()
}

/// Standard error of a sample covariance for Gaussian pairs.
pub fn covariance_se(var0: f64, var1: f64, cov: f64, n: usize) -> f64 {
    ((var0 * var1 + cov * cov) / (n as f64 - 1.0)).sqrt()
}

/// Everything the Monte Carlo run measures and predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub trials: usize,
    pub failed_trials: usize,
    pub sample: SampleMoments,
    pub predicted_var: f64,
    pub predicted_cov: f64,
    /// Exact moments of the discrete linear pipeline for untruncated noise,
    /// when the representer strategy provides them.
    pub discrete_var: Option<(f64, f64)>,
    pub discrete_cov: Option<f64>,
    pub histogram_x0: Histogram,
    pub histogram_x1: Histogram,
    pub predicted_pdf: TheoryCurve,
}

/// Verdict of [`compare_theory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub z_var0: f64,
    pub z_var1: f64,
    pub z_cov: f64,
    pub chi_square: Option<ChiSquareTest>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Band checks, z-scores and the chi-square test of the `x0` samples.
pub fn compare_theory(r: &StatsReport, bands: &Bands) -> Comparison {
    let s = &r.sample;
    let c0 = r.predicted_var;
    let c1 = r.predicted_cov;
    let n = s.n;
    let se_var = variance_se(c0, n);
    let se_cov = covariance_se(c0, c0, c1, n);
    let mut checks = Vec::new();
    for (name, v) in [("variance_x0", s.var0), ("variance_x1", s.var1)] {
        if let Some((lo, hi)) = bands.var_abs {
            checks.push(Check::within(name, v, lo, hi));
        }
        if let Some(rel) = bands.var_rel {
            checks.push(Check::within(name, v, c0 * (1.0 - rel), c0 * (1.0 + rel)));
        }
        if v == 0.0 {
            for c in checks.iter_mut().filter(|c| c.name == name) {
                c.pass = false;
                c.note = Some("degenerate samples: zero variance".into());
            }
        }
    }
    if let Some(a) = bands.cov_abs {
        checks.push(Check::within("covariance", s.cov, c1 - a, c1 + a));
    }
    if let Some(rel) = bands.cov_rel {
        let (lo, hi) = (c1 * (1.0 - rel), c1 * (1.0 + rel));
        checks.push(Check::within("covariance", s.cov, lo.min(hi), lo.max(hi)));
    }
    let chi_square = if s.var0 == 0.0 {
        checks.push(Check::flag("chi_square_x0", false, "degenerate samples: zero variance"));
        None
    } else {
        match chi_square_normal(&r.histogram_x0, c0) {
            Ok(t) => {
                checks.push(Check::within("chi_square_x0", t.p_value, bands.chi2_level, 1.0));
                Some(t)
            }
            Err(e) => {
                checks.push(Check::flag("chi_square_x0", false, e.to_string()));
                None
            }
        }
    };
    let pass = all_pass(&checks);
    Comparison {
        z_var0: (s.var0 - c0) / se_var,
        z_var1: (s.var1 - c0) / se_var,
        z_cov: (s.cov - c1) / se_cov,
        chi_square,
        checks,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_are_unbiased() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        let m = SampleMoments::from_pairs(&a, &b).unwrap();
        assert_eq!(m.mean0, 2.5);
        assert!((m.var0 - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.var1 - 20.0 / 3.0).abs() < 1e-14);
        assert!((m.cov - 10.0 / 3.0).abs() < 1e-14);
        assert!(SampleMoments::from_pairs(&a[..1], &b[..1]).is_err());
    }

    #[test]
    fn histogram_counts_everything() {
        let h = Histogram::new(&[-5.0, -1.0, 0.0, 0.5, 0.99, 1.0, 7.0], -1.0, 1.0, 4).unwrap();
        assert_eq!(h.counts, vec![1, 0, 1, 2]);
        assert_eq!((h.below, h.above), (1, 2));
        assert_eq!(h.total(), 7);
    }

    #[test]
    fn reference_numbers_give_small_z() {
        let z = (0.042 - 0.043) / variance_se(0.043, 1500);
        assert!((z.abs() - 0.64).abs() < 0.01, "{z}");
    }

    #[test]
    fn too_few_samples_cannot_be_binned() {
        let h = standard_histogram(&[0.01, -0.02, 0.03], 0.04).unwrap();
        assert!(matches!(chi_square_normal(&h, 0.04), Err(HarnessError::InsufficientTrials { .. })));
    }
}
