//! Two-sample comparisons and distance-decay diagnostics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeIx;
use crate::numeric::{compensated_sum, mean, sample_variance};

/// Default bin width for distance-decay diagnostics.
pub const DEFAULT_DECAY_BIN_WIDTH: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("each sample needs at least two values (got {n_a} and {n_b})")]
    SampleTooSmall { n_a: usize, n_b: usize },
    #[error("pooled standard deviation is zero while means differ ({mean_a} vs {mean_b})")]
    Degenerate { mean_a: f64, mean_b: f64 },
    #[error("bin width {0} outside (0, 1]")]
    InvalidBinWidth(f64),
    #[error("distance decay needs at least two neighbors (got {0})")]
    TooFewNeighbors(usize),
}

/// Welch two-sample test with Cohen's d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    #[serde(with = "crate::stats::nonfinite")]
    pub t_statistic: f64,
    pub p_value: f64,
    #[serde(with = "crate::stats::nonfinite")]
    pub cohens_d: f64,
    #[serde(with = "crate::stats::nonfinite")]
    pub df: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Set when both samples have zero variance but different means.
    pub degenerate: bool,
}

/// Serialises non-finite floats as strings so JSON reports stay parseable.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad float `{other}`"))),
            },
        }
    }
}

fn pooled_sd(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = sample_variance(a).unwrap_or(0.0);
    let vb = sample_variance(b).unwrap_or(0.0);
    (((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0)).sqrt()
}

/// `(mean(a) - mean(b)) / pooled_sd`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::SampleTooSmall { n_a: a.len(), n_b: b.len() });
    }
    let (ma, mb) = (mean(a).unwrap(), mean(b).unwrap());
    let sd = pooled_sd(a, b);
    if sd > 0.0 {
        Ok((ma - mb) / sd)
    } else if ma == mb {
        Ok(0.0)
    } else {
        Err(StatsError::Degenerate { mean_a: ma, mean_b: mb })
    }
}

/// Welch's unequal-variance t-test, two-sided.
pub fn two_sample_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::SampleTooSmall { n_a: a.len(), n_b: b.len() });
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a).unwrap(), mean(b).unwrap());
    let (va, vb) = (sample_variance(a).unwrap(), sample_variance(b).unwrap());
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    let diff = ma - mb;

    let mut result = TestResult {
        t_statistic: 0.0,
        p_value: 1.0,
        cohens_d: 0.0,
        df: na + nb - 2.0,
        n_a: a.len(),
        n_b: b.len(),
        mean_a: ma,
        mean_b: mb,
        degenerate: false,
    };
    if se2 == 0.0 {
        if diff != 0.0 {
            result.t_statistic = diff.signum() * f64::INFINITY;
            result.cohens_d = diff.signum() * f64::INFINITY;
            result.p_value = 0.0;
            result.degenerate = true;
        }
        return Ok(result);
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    result.t_statistic = t;
    result.df = df;
    result.p_value = student_t_two_sided_p(t, df);
    result.cohens_d = diff / pooled_sd(a, b);
    Ok(result)
}

/// Two-sided tail probability `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Lanczos approximation (g = 7, 9 terms) of `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `I_x(a, b)` via the modified Lentz continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Pearson correlation; `None` when either series has zero variance or fewer than two points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x)?, mean(y)?);
    let sxy = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)));
    let sxx = compensated_sum(x.iter().map(|a| (a - mx) * (a - mx)));
    let syy = compensated_sum(y.iter().map(|b| (b - my) * (b - my)));
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayClass {
    /// Nonzero binned counts strictly decrease with distance.
    #[serde(rename = "DD")]
    Dd,
    #[serde(rename = "NDD")]
    Ndd,
    Undefined,
}

impl DecayClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DecayClass::Dd => "DD",
            DecayClass::Ndd => "NDD",
            DecayClass::Undefined => "Undefined",
        }
    }
}

/// Binned neighbor counts by opinion distance for one ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostic {
    pub ego: NodeIx,
    pub bin_width: f64,
    pub bin_counts: Vec<u64>,
    pub pearson_r: Option<f64>,
    pub classification: DecayClass,
}

/// Number of distance bins covering `[0, 1]`.
pub fn decay_bin_count(bin_width: f64) -> Result<usize, StatsError> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(StatsError::InvalidBinWidth(bin_width));
    }
    // 1/0.1 and friends land a hair above the integer
    Ok(((1.0 / bin_width) - 1e-9).ceil().max(1.0) as usize)
}

fn bin_midpoints(bins: usize, bin_width: f64) -> Vec<f64> {
    (0..bins)
        .map(|k| {
            let lo = k as f64 * bin_width;
            let hi = ((k + 1) as f64 * bin_width).min(1.0);
            0.5 * (lo + hi)
        })
        .collect()
}

/// Whether the nonzero entries, in order, strictly decrease (needs two or more).
pub fn strictly_decreasing_nonzero(counts: &[u64]) -> bool {
    let nz: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    nz.len() >= 2 && nz.windows(2).all(|w| w[0] > w[1])
}

impl DecayDiagnostic {
    /// Diagnostic from precomputed counts; missing trailing bins are zero.
    pub fn from_counts(ego: NodeIx, bin_width: f64, counts: &[u64]) -> Result<DecayDiagnostic, StatsError> {
        let bins = decay_bin_count(bin_width)?;
        let mut bin_counts = counts.to_vec();
        bin_counts.resize(bins.max(counts.len()), 0);
        let mids = bin_midpoints(bin_counts.len(), bin_width);
        let ys: Vec<f64> = bin_counts.iter().map(|&c| c as f64).collect();
        let pearson_r = pearson(&mids, &ys);
        let classification = match pearson_r {
            None => DecayClass::Undefined,
            Some(_) if strictly_decreasing_nonzero(&bin_counts) => DecayClass::Dd,
            Some(_) => DecayClass::Ndd,
        };
        Ok(DecayDiagnostic { ego, bin_width, bin_counts, pearson_r, classification })
    }
}

/// Bins `|x_ego - x_j|` and classifies the resulting profile.
pub fn distance_decay(
    ego: NodeIx,
    x_ego: f64,
    neighbors: &[f64],
    bin_width: f64,
) -> Result<DecayDiagnostic, StatsError> {
    let bins = decay_bin_count(bin_width)?;
    if neighbors.len() < 2 {
        return Err(StatsError::TooFewNeighbors(neighbors.len()));
    }
    let mut counts = vec![0u64; bins];
    for &x in neighbors {
        let d = (x_ego - x).abs();
        let k = ((d / bin_width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    DecayDiagnostic::from_counts(ego, bin_width, &counts)
}
