//! Opinion-interval partitions and interval-level aggregates.
//!
//! The partition splits `[0, 1]` into `k` equal intervals; the first is closed
//! (`[0, 1/k]`) and the rest are half-open on the left (`(j/k, (j+1)/k]`).
//! Intervals are numbered from 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{OpinionGraph, Perspective};
use crate::metrics::{check_matching, ego_hits, MetricsError, NeighborProfile, TrialProfiles};
use crate::null_models::NullTrial;
use crate::numeric::mean;

/// Rates of intervals with fewer eligible egos are reported as absent.
pub const MIN_EGOS_PER_INTERVAL: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("opinion {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("partition needs at least two intervals (got {0})")]
    TooFewIntervals(usize),
    #[error("graph has no edges")]
    NoEdges,
    #[error("matrix dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("no null matrices supplied")]
    NoTrials,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalPartition {
    k: usize,
}

impl Default for IntervalPartition {
    fn default() -> Self {
        IntervalPartition { k: 5 }
    }
}

impl IntervalPartition {
    pub fn new(k: usize) -> Result<IntervalPartition, IntervalError> {
        if k < 2 {
            return Err(IntervalError::TooFewIntervals(k));
        }
        Ok(IntervalPartition { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Upper boundary `j / k` of interval `j`.
    pub fn upper(&self, j: usize) -> f64 {
        j as f64 / self.k as f64
    }

    /// 1-based interval index of `x`.
    pub fn assign(&self, x: f64) -> Result<usize, IntervalError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(IntervalError::OutOfRange(x));
        }
        // initial guess, then settle against the exact boundary doubles
        let mut j = ((x * self.k as f64).ceil() as usize).clamp(1, self.k);
        while j > 1 && x <= self.upper(j - 1) {
            j -= 1;
        }
        while j < self.k && x > self.upper(j) {
            j += 1;
        }
        Ok(j)
    }

    fn zero_based(&self, x: f64) -> usize {
        self.assign(x).expect("graph opinions lie in [0, 1]") - 1
    }

    pub fn label(&self, j: usize) -> String {
        let lo = self.upper(j - 1);
        let hi = self.upper(j);
        if j == 1 {
            format!("[{lo},{hi}]")
        } else {
            format!("({lo},{hi}]")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Empirical,
    Null,
    NullMean,
    Residual,
}

/// `k x k` matrix of interaction percentages; rows are source intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    pub k: usize,
    pub kind: MatrixKind,
    /// Number of interactions normalised over (0 for derived forms).
    pub total: u64,
    pub values: Vec<Vec<f64>>,
}

impl InteractionMatrix {
    fn from_counts(kind: MatrixKind, counts: Vec<Vec<u64>>, total: u64) -> InteractionMatrix {
        let values = counts
            .iter()
            .map(|row| row.iter().map(|&c| 100.0 * c as f64 / total as f64).collect())
            .collect();
        InteractionMatrix { k: counts.len(), kind, total, values }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.values.iter().map(|r| r.iter().sum()).collect()
    }

    /// Raw counts recovered from the percentages (only meaningful for
    /// empirical and single-trial matrices).
    pub fn counts(&self) -> Vec<Vec<u64>> {
        self.values
            .iter()
            .map(|r| r.iter().map(|v| (v * self.total as f64 / 100.0).round() as u64).collect())
            .collect()
    }

    /// Square table with a header row and column of interval numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("src\\dst");
        for j in 1..=self.k {
            out.push_str(&format!(",{j}"));
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&(i + 1).to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Long form `src,dst,count` for chord diagrams.
    pub fn to_chord_csv(&self) -> String {
        let mut out = String::from("src,dst,count\n");
        for (i, row) in self.counts().iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", i + 1, j + 1, c));
            }
        }
        out
    }
}

/// Percentage of edges from interval `i` to interval `j`.
pub fn interaction_matrix(
    g: &OpinionGraph,
    partition: &IntervalPartition,
) -> Result<InteractionMatrix, IntervalError> {
    if g.edge_count() == 0 {
        return Err(IntervalError::NoEdges);
    }
    let k = partition.k();
    let bins: Vec<usize> = g.opinions().iter().map(|&x| partition.zero_based(x)).collect();
    let mut counts = vec![vec![0u64; k]; k];
    for (s, d) in g.edges() {
        counts[bins[s as usize]][bins[d as usize]] += 1;
    }
    Ok(InteractionMatrix::from_counts(MatrixKind::Empirical, counts, g.edge_count() as u64))
}

/// Interaction matrix implied by one null trial: each synthetic neighbor
/// stands in for one edge, oriented by the trial's perspective.
pub fn null_interaction_matrix(
    g: &OpinionGraph,
    trial: &NullTrial,
    partition: &IntervalPartition,
) -> Result<InteractionMatrix, IntervalError> {
    let k = partition.k();
    let mut counts = vec![vec![0u64; k]; k];
    let mut total = 0u64;
    for d in &trial.draws {
        let ego_bin = partition.zero_based(g.opinion(d.ego));
        for &x in &d.opinions {
            let other = partition.zero_based(x);
            match trial.perspective {
                Perspective::Follower => counts[ego_bin][other] += 1,
                Perspective::Leader => counts[other][ego_bin] += 1,
            }
            total += 1;
        }
    }
    if total == 0 {
        return Err(IntervalError::NoEdges);
    }
    Ok(InteractionMatrix::from_counts(MatrixKind::Null, counts, total))
}

/// Entrywise mean of several matrices.
pub fn mean_matrix(matrices: &[InteractionMatrix]) -> Result<InteractionMatrix, IntervalError> {
    let first = matrices.first().ok_or(IntervalError::NoTrials)?;
    let k = first.k;
    let mut values = vec![vec![0.0; k]; k];
    for m in matrices {
        if m.k != k {
            return Err(IntervalError::DimensionMismatch(k, m.k));
        }
        for (acc, row) in values.iter_mut().zip(&m.values) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
    }
    let t = matrices.len() as f64;
    values.iter_mut().flatten().for_each(|v| *v /= t);
    Ok(InteractionMatrix { k, kind: MatrixKind::NullMean, total: 0, values })
}

/// Empirical matrix minus the entrywise mean of the null matrices.
pub fn residual_matrix(
    empirical: &InteractionMatrix,
    null_trials: &[InteractionMatrix],
) -> Result<InteractionMatrix, IntervalError> {
    let null_mean = mean_matrix(null_trials)?;
    if null_mean.k != empirical.k {
        return Err(IntervalError::DimensionMismatch(empirical.k, null_mean.k));
    }
    let values = empirical
        .values
        .iter()
        .zip(&null_mean.values)
        .map(|(e, n)| e.iter().zip(n).map(|(a, b)| a - b).collect())
        .collect();
    Ok(InteractionMatrix { k: empirical.k, kind: MatrixKind::Residual, total: 0, values })
}

/// Rates restricted to egos whose own opinion falls in one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRateRow {
    pub interval: usize,
    pub n1: usize,
    pub n3: usize,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub r3: Option<f64>,
    pub r3_null: Option<f64>,
    /// Per-trial satisfaction counts.
    pub hits_r1: Vec<usize>,
    pub hits_r2: Vec<usize>,
    pub hits_r3: usize,
    pub hits_r3_null: Vec<usize>,
}

fn mean_rate(hits: &[usize], n: usize) -> Option<f64> {
    let rates: Vec<f64> = hits.iter().map(|&h| h as f64 / n as f64).collect();
    mean(&rates)
}

/// R1/R2/R3 within each interval, averaged over trials.
pub fn per_interval_rates(
    empirical: &[NeighborProfile],
    trials: &[TrialProfiles],
    partition: &IntervalPartition,
) -> Result<Vec<IntervalRateRow>, IntervalError> {
    let k = partition.k();
    let t = trials.len();
    let mut rows: Vec<IntervalRateRow> = (1..=k)
        .map(|interval| IntervalRateRow {
            interval,
            n1: 0,
            n3: 0,
            r1: None,
            r2: None,
            r3: None,
            r3_null: None,
            hits_r1: vec![0; t],
            hits_r2: vec![0; t],
            hits_r3: 0,
            hits_r3_null: vec![0; t],
        })
        .collect();
    let bins: Vec<usize> = empirical.iter().map(|p| partition.zero_based(p.opinion)).collect();
    for (p, &b) in empirical.iter().zip(&bins) {
        rows[b].n1 += 1;
        if p.has_range() {
            rows[b].n3 += 1;
            rows[b].hits_r3 += usize::from(p.inclusion);
        }
    }
    for (ti, trial) in trials.iter().enumerate() {
        check_matching(empirical, &trial.profiles)?;
        for ((e, n), &b) in empirical.iter().zip(&trial.profiles).zip(&bins) {
            let h = ego_hits(e, n);
            rows[b].hits_r1[ti] += usize::from(h.r1);
            rows[b].hits_r2[ti] += usize::from(h.r2);
            rows[b].hits_r3_null[ti] += usize::from(h.r3_null);
        }
    }
    for row in &mut rows {
        if row.n1 >= MIN_EGOS_PER_INTERVAL {
            row.r1 = mean_rate(&row.hits_r1, row.n1);
            row.r2 = mean_rate(&row.hits_r2, row.n1);
        }
        if row.n3 >= MIN_EGOS_PER_INTERVAL {
            row.r3 = Some(row.hits_r3 as f64 / row.n3 as f64);
            row.r3_null = mean_rate(&row.hits_r3_null, row.n3);
        }
    }
    Ok(rows)
}

/// Offset and asymmetry distributions of the egos in one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalOffsets {
    pub interval: usize,
    pub neg_gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub asymmetry: Vec<f64>,
    /// Egos whose zero-width span leaves the asymmetry undefined.
    pub asymmetry_skipped: usize,
    pub mean_neg_gamma: Option<f64>,
    pub mean_delta: Option<f64>,
    pub mean_asymmetry: Option<f64>,
}

/// `-gamma`, `delta` and asymmetry per interval, over egos with two or more neighbors.
pub fn per_interval_offsets(profiles: &[NeighborProfile], partition: &IntervalPartition) -> Vec<IntervalOffsets> {
    let mut out: Vec<IntervalOffsets> = (1..=partition.k())
        .map(|interval| IntervalOffsets {
            interval,
            neg_gamma: Vec::new(),
            delta: Vec::new(),
            asymmetry: Vec::new(),
            asymmetry_skipped: 0,
            mean_neg_gamma: None,
            mean_delta: None,
            mean_asymmetry: None,
        })
        .collect();
    for p in profiles.iter().filter(|p| p.has_range()) {
        let row = &mut out[partition.zero_based(p.opinion)];
        row.neg_gamma.push(-p.gamma);
        row.delta.push(p.delta);
        match p.asymmetry {
            Some(s) => row.asymmetry.push(s),
            None => row.asymmetry_skipped += 1,
        }
    }
    for row in &mut out {
        row.mean_neg_gamma = mean(&row.neg_gamma);
        row.mean_delta = mean(&row.delta);
        row.mean_asymmetry = mean(&row.asymmetry);
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `interval,R1,R2,R3,n1,n3`.
pub fn interval_rates_csv(rows: &[IntervalRateRow]) -> String {
    let mut out = String::from("interval,R1,R2,R3,n1,n3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.interval,
            fmt_opt(r.r1),
            fmt_opt(r.r2),
            fmt_opt(r.r3),
            r.n1,
            r.n3
        ));
    }
    out
}

/// Same as [`interval_rates_csv`] with the null-span inclusion rate added.
pub fn interval_rates_full_csv(rows: &[IntervalRateRow]) -> String {
    let mut out = String::from("interval,R1,R2,R3,R3_null,n1,n3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.interval,
            fmt_opt(r.r1),
            fmt_opt(r.r2),
            fmt_opt(r.r3),
            fmt_opt(r.r3_null),
            r.n1,
            r.n3
        ));
    }
    out
}

/// Long form `interval,stat,value`.
pub fn interval_offsets_csv(rows: &[IntervalOffsets]) -> String {
    let mut out = String::from("interval,stat,value\n");
    for r in rows {
        for (stat, values) in [("neg_gamma", &r.neg_gamma), ("delta", &r.delta), ("asymmetry", &r.asymmetry)] {
            for v in values {
                out.push_str(&format!("{},{},{}\n", r.interval, stat, v));
            }
        }
    }
    out
}
