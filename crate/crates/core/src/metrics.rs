//! Per-ego interval quantities and population satisfaction rates.
//!
//! For an ego with opinion `x` and neighbor opinions `x_j`:
//!
//! | quantity | definition |
//! |---|---|
//! | gap | `x - mean(x_j)` |
//! | alpha, beta | `min(x_j)`, `max(x_j)` |
//! | range | `beta - alpha` |
//! | mean_dev | `mean(|x - x_j|)` |
//! | max_dev | `max(|x - x_j|)` |
//! | gamma, delta | `x - alpha`, `beta - x` (signed) |
//! | asymmetry | `(delta - gamma) / range`, absent when `range == 0` |
//! | inclusion | `alpha <= x <= beta` |
//!
//! R1 and R2 are the fractions of egos whose empirical mean/max deviation is
//! strictly smaller than under a null trial; R3 is the fraction of egos with at
//! least two neighbors whose opinion lies inside their neighbor span.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeIx, OpinionGraph, Perspective};
use crate::null_models::NullModel;
use crate::numeric::compensated_sum;

/// Minimum neighbor count for range-based quantities to enter R3.
pub const MIN_NEIGHBORS_RANGE: usize = 2;

/// Deviations closer than this are ties and never satisfy R1/R2.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("ego has no neighbors")]
    EmptyNeighborhood,
    #[error("node {0} has no neighbors under the requested perspective")]
    NoNeighbors(NodeIx),
    #[error("empirical and null profiles cover different egos (first mismatch at position {position})")]
    MismatchedEgos { position: usize },
    #[error("neighbor count differs for ego {ego}: empirical {empirical}, null {null}")]
    MismatchedNeighborCount { ego: NodeIx, empirical: usize, null: usize },
    #[error("no eligible egos")]
    EmptyPopulation,
}

fn require_nonempty(neighbors: &[f64]) -> Result<(), MetricsError> {
    if neighbors.is_empty() {
        Err(MetricsError::EmptyNeighborhood)
    } else {
        Ok(())
    }
}

/// Ego opinion minus the mean neighbor opinion.
pub fn opinion_gap(x_ego: f64, neighbors: &[f64]) -> Result<f64, MetricsError> {
    require_nonempty(neighbors)?;
    Ok(x_ego - compensated_sum(neighbors.iter().copied()) / neighbors.len() as f64)
}

/// Returns `(alpha, beta, range)` of the neighbor opinions.
pub fn confidence_interval(neighbors: &[f64]) -> Result<(f64, f64, f64), MetricsError> {
    require_nonempty(neighbors)?;
    let (lo, hi) = neighbors
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok((lo, hi, hi - lo))
}

pub fn mean_deviation(x_ego: f64, neighbors: &[f64]) -> Result<f64, MetricsError> {
    require_nonempty(neighbors)?;
    Ok(compensated_sum(neighbors.iter().map(|v| (x_ego - v).abs())) / neighbors.len() as f64)
}

pub fn max_deviation(x_ego: f64, neighbors: &[f64]) -> Result<f64, MetricsError> {
    require_nonempty(neighbors)?;
    Ok(neighbors.iter().map(|v| (x_ego - v).abs()).fold(0.0, f64::max))
}

pub fn range_inclusion(x_ego: f64, alpha: f64, beta: f64) -> bool {
    alpha <= x_ego && x_ego <= beta
}

/// Signed left and right offsets `(x - alpha, beta - x)`.
pub fn offsets(x_ego: f64, alpha: f64, beta: f64) -> (f64, f64) {
    (x_ego - alpha, beta - x_ego)
}

/// `(delta - gamma) / (delta + gamma)`; `None` for a zero-width span.
pub fn asymmetry_index(gamma: f64, delta: f64) -> Option<f64> {
    let c = gamma + delta;
    if c > 0.0 {
        Some((delta - gamma) / c)
    } else {
        None
    }
}

/// All interval quantities of one ego under one perspective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborProfile {
    pub ego: NodeIx,
    pub perspective: Perspective,
    pub opinion: f64,
    pub n: usize,
    pub mean_neighbor_opinion: f64,
    pub gap: f64,
    pub alpha: f64,
    pub beta: f64,
    pub range: f64,
    pub mean_dev: f64,
    pub max_dev: f64,
    pub gamma: f64,
    pub delta: f64,
    pub asymmetry: Option<f64>,
    pub inclusion: bool,
}

impl NeighborProfile {
    /// Profile of an ego with opinion `x_ego` against an arbitrary neighbor multiset.
    pub fn from_opinions(
        ego: NodeIx,
        perspective: Perspective,
        x_ego: f64,
        neighbors: &[f64],
    ) -> Result<NeighborProfile, MetricsError> {
        require_nonempty(neighbors)?;
        let n = neighbors.len();
        let mean_neighbor_opinion = compensated_sum(neighbors.iter().copied()) / n as f64;
        let (alpha, beta, range) = confidence_interval(neighbors)?;
        let (gamma, delta) = offsets(x_ego, alpha, beta);
        Ok(NeighborProfile {
            ego,
            perspective,
            opinion: x_ego,
            n,
            mean_neighbor_opinion,
            gap: x_ego - mean_neighbor_opinion,
            alpha,
            beta,
            range,
            mean_dev: mean_deviation(x_ego, neighbors)?,
            // max |x - x_j| is attained at one end of the span
            max_dev: gamma.abs().max(delta.abs()),
            gamma,
            delta,
            asymmetry: asymmetry_index(gamma, delta),
            inclusion: range_inclusion(x_ego, alpha, beta),
        })
    }

    /// Whether range-based quantities are meaningful for this ego.
    pub fn has_range(&self) -> bool {
        self.n >= MIN_NEIGHBORS_RANGE
    }
}

/// Neighbor opinions of `i` under `p`, in neighbor-index order.
pub fn neighbor_opinions(g: &OpinionGraph, i: NodeIx, p: Perspective) -> Vec<f64> {
    g.neighbor_slice(i, p).iter().map(|&j| g.opinion(j)).collect()
}

pub fn profile(g: &OpinionGraph, i: NodeIx, p: Perspective) -> Result<NeighborProfile, MetricsError> {
    let neighbors = g.neighbors(i, p).map_err(|_| MetricsError::NoNeighbors(i))?;
    if neighbors.is_empty() {
        return Err(MetricsError::NoNeighbors(i));
    }
    NeighborProfile::from_opinions(i, p, g.opinion(i), &neighbor_opinions(g, i, p))
}

/// Profiles of every ego with at least one neighbor, ordered by node index.
pub fn profiles(g: &OpinionGraph, p: Perspective) -> Vec<NeighborProfile> {
    g.eligible_users(p, 1)
        .into_par_iter()
        .map(|i| profile(g, i, p).expect("eligible ego has neighbors"))
        .collect()
}

/// Null-trial profiles paired with the trial they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialProfiles {
    pub seed: u64,
    pub model: NullModel,
    pub profiles: Vec<NeighborProfile>,
}

/// R1/R2/R3 of one null trial with their eligibility denominators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub trial_seed: u64,
    pub r1: f64,
    pub r2: f64,
    /// Empirical range inclusion rate; absent when no ego has two neighbors.
    pub r3: Option<f64>,
    /// Range inclusion of the empirical opinions inside the null spans.
    pub r3_null: Option<f64>,
    pub n_r1r2: usize,
    pub n_r3: usize,
    pub hits_r1: usize,
    pub hits_r2: usize,
    pub hits_r3: usize,
    pub hits_r3_null: usize,
}

/// Satisfaction counts for one ego against its null counterpart.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct EgoHits {
    pub r1: bool,
    pub r2: bool,
    pub eligible_r3: bool,
    pub r3: bool,
    pub r3_null: bool,
}

pub(crate) fn ego_hits(emp: &NeighborProfile, null: &NeighborProfile) -> EgoHits {
    let eligible_r3 = emp.has_range();
    EgoHits {
        r1: emp.mean_dev < null.mean_dev - TIE_TOLERANCE,
        r2: emp.max_dev < null.max_dev - TIE_TOLERANCE,
        eligible_r3,
        r3: eligible_r3 && emp.inclusion,
        r3_null: eligible_r3 && null.inclusion,
    }
}

pub(crate) fn check_matching(
    empirical: &[NeighborProfile],
    null: &[NeighborProfile],
) -> Result<(), MetricsError> {
    if empirical.len() != null.len() {
        return Err(MetricsError::MismatchedEgos { position: empirical.len().min(null.len()) });
    }
    for (position, (e, n)) in empirical.iter().zip(null).enumerate() {
        if e.ego != n.ego {
            return Err(MetricsError::MismatchedEgos { position });
        }
        if e.n != n.n {
            return Err(MetricsError::MismatchedNeighborCount { ego: e.ego, empirical: e.n, null: n.n });
        }
    }
    Ok(())
}

/// Population rates of `empirical` against one null trial.
///
/// Both slices must list the same egos in the same order with matching
/// neighbor counts. Ties, up to [`TIE_TOLERANCE`], count as non-satisfaction
/// for R1/R2.
pub fn population_rates(
    empirical: &[NeighborProfile],
    null: &TrialProfiles,
) -> Result<RateReport, MetricsError> {
    check_matching(empirical, &null.profiles)?;
    if empirical.is_empty() {
        return Err(MetricsError::EmptyPopulation);
    }
    let mut report = RateReport {
        trial_seed: null.seed,
        r1: 0.0,
        r2: 0.0,
        r3: None,
        r3_null: None,
        n_r1r2: empirical.len(),
        n_r3: 0,
        hits_r1: 0,
        hits_r2: 0,
        hits_r3: 0,
        hits_r3_null: 0,
    };
    for (e, n) in empirical.iter().zip(&null.profiles) {
        let h = ego_hits(e, n);
        report.hits_r1 += usize::from(h.r1);
        report.hits_r2 += usize::from(h.r2);
        report.n_r3 += usize::from(h.eligible_r3);
        report.hits_r3 += usize::from(h.r3);
        report.hits_r3_null += usize::from(h.r3_null);
    }
    report.r1 = report.hits_r1 as f64 / report.n_r1r2 as f64;
    report.r2 = report.hits_r2 as f64 / report.n_r1r2 as f64;
    if report.n_r3 > 0 {
        report.r3 = Some(report.hits_r3 as f64 / report.n_r3 as f64);
        report.r3_null = Some(report.hits_r3_null as f64 / report.n_r3 as f64);
    }
    Ok(report)
}

/// Summary of one rate across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDistribution {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub values: Vec<f64>,
}

impl RateDistribution {
    pub fn from_values(values: Vec<f64>) -> Option<RateDistribution> {
        if values.is_empty() {
            return None;
        }
        Some(RateDistribution {
            mean: compensated_sum(values.iter().copied()) / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            values,
        })
    }
}

/// Per-trial rates summarised as distributions over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub r1: Option<RateDistribution>,
    pub r2: Option<RateDistribution>,
    pub r3_empirical: Option<f64>,
    pub r3_null: Option<RateDistribution>,
}

pub fn summarize_rates(reports: &[RateReport]) -> RateSummary {
    RateSummary {
        r1: RateDistribution::from_values(reports.iter().map(|r| r.r1).collect()),
        r2: RateDistribution::from_values(reports.iter().map(|r| r.r2).collect()),
        r3_empirical: reports.first().and_then(|r| r.r3),
        r3_null: RateDistribution::from_values(reports.iter().filter_map(|r| r.r3_null).collect()),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Profile table with header
/// `node,perspective,n,gap,alpha,beta,range,mean_dev,max_dev,gamma,delta,asymmetry,inclusion`.
pub fn profiles_csv(labels: &[String], profiles: &[NeighborProfile]) -> String {
    let mut out = String::from(
        "node,perspective,n,gap,alpha,beta,range,mean_dev,max_dev,gamma,delta,asymmetry,inclusion\n",
    );
    for p in profiles {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            csv_field(&labels[p.ego as usize]),
            p.perspective,
            p.n,
            p.gap,
            p.alpha,
            p.beta,
            p.range,
            p.mean_dev,
            p.max_dev,
            p.gamma,
            p.delta,
            fmt_opt(p.asymmetry),
            p.inclusion
        ));
    }
    out
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= EPS
    }

    #[test]
    fn near_ties_do_not_satisfy_rates() {
        let emp = NeighborProfile::from_opinions(0, Perspective::Follower, 0.5, &[0.1, 0.3]).unwrap();
        let tied = NeighborProfile::from_opinions(0, Perspective::Follower, 0.5, &[0.2, 0.2]).unwrap();
        let h = ego_hits(&emp, &tied);
        assert!(!h.r1);
        let far = NeighborProfile::from_opinions(0, Perspective::Follower, 0.5, &[0.0, 0.1]).unwrap();
        assert!(ego_hits(&emp, &far).r1);
        assert!(ego_hits(&emp, &far).r2);
    }

    #[test]
    fn gap_examples() {
        assert!(close(opinion_gap(0.5, &[0.2, 0.6, 0.7]).unwrap(), 0.0));
        assert!(close(opinion_gap(0.5, &[0.4]).unwrap(), 0.1));
        assert_eq!(opinion_gap(0.3, &[0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(opinion_gap(0.3, &[]), Err(MetricsError::EmptyNeighborhood));
    }

    #[test]
    fn interval_examples() {
        let (a, b, c) = confidence_interval(&[0.2, 0.6, 0.7]).unwrap();
        assert_eq!((a, b), (0.2, 0.7));
        assert!(close(c, 0.5));
        assert_eq!(confidence_interval(&[0.4, 0.4]).unwrap(), (0.4, 0.4, 0.0));
        assert!(confidence_interval(&[]).is_err());
    }

    #[test]
    fn deviation_examples() {
        assert!(close(mean_deviation(0.5, &[0.2, 0.6, 0.7]).unwrap(), 0.2));
        assert_eq!(mean_deviation(0.5, &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(mean_deviation(0.0, &[1.0]).unwrap(), 1.0);
        assert!(close(max_deviation(0.5, &[0.2, 0.6, 0.7]).unwrap(), 0.3));
        assert_eq!(max_deviation(0.5, &[0.5]).unwrap(), 0.0);
        assert!(mean_deviation(0.5, &[]).is_err());
        assert!(max_deviation(0.5, &[]).is_err());
    }

    #[test]
    fn inclusion_and_offsets() {
        assert!(range_inclusion(0.5, 0.2, 0.7));
        assert!(!range_inclusion(0.1, 0.2, 0.7));
        assert!(range_inclusion(0.4, 0.4, 0.4));
        let (g, d) = offsets(0.5, 0.2, 0.7);
        assert!(close(g, 0.3) && close(d, 0.2));
        let (g, d) = offsets(0.1, 0.2, 0.7);
        assert!(close(g, -0.1) && close(d, 0.6));
        assert_eq!(offsets(0.2, 0.2, 0.7), (0.0, 0.7 - 0.2));
    }

    #[test]
    fn asymmetry_examples() {
        assert!(close(asymmetry_index(0.3, 0.2).unwrap(), -0.2));
        assert_eq!(asymmetry_index(0.25, 0.25), Some(0.0));
        assert_eq!(asymmetry_index(0.0, 0.4), Some(1.0));
        assert_eq!(asymmetry_index(0.0, 0.0), None);
    }

    #[test]
    fn composed_profile() {
        let g = OpinionGraph::from_indexed(vec![0.5, 0.2, 0.6, 0.7], [(0, 1), (0, 2), (0, 3)]).unwrap();
        let p = profile(&g, 0, Perspective::Follower).unwrap();
        assert!(close(p.gap, 0.0));
        assert!(close(p.range, 0.5));
        assert!(close(p.mean_dev, 0.2));
        assert!(close(p.max_dev, 0.3));
        assert!(close(p.gamma, 0.3) && close(p.delta, 0.2));
        assert!(close(p.asymmetry.unwrap(), -0.2));
        assert!(p.inclusion);
        assert_eq!(profile(&g, 0, Perspective::Leader), Err(MetricsError::NoNeighbors(0)));
    }

    #[test]
    fn single_neighbor_profile() {
        let p = NeighborProfile::from_opinions(0, Perspective::Follower, 0.5, &[0.4]).unwrap();
        assert_eq!(p.range, 0.0);
        assert!(!p.inclusion);
        assert_eq!(p.asymmetry, None);
        let q = NeighborProfile::from_opinions(0, Perspective::Follower, 0.4, &[0.4]).unwrap();
        assert!(q.inclusion);
    }

    #[test]
    fn equal_neighbors_profile() {
        let p = NeighborProfile::from_opinions(0, Perspective::Leader, 0.3, &[0.3, 0.3, 0.3]).unwrap();
        assert_eq!((p.mean_dev, p.max_dev, p.gap), (0.0, 0.0, 0.0));
        assert!(p.inclusion);
    }

    fn prof(ego: NodeIx, x: f64, ns: &[f64]) -> NeighborProfile {
        NeighborProfile::from_opinions(ego, Perspective::Follower, x, ns).unwrap()
    }

    #[test]
    fn rates_count_strict_inequality() {
        let emp = vec![prof(0, 0.5, &[0.4, 0.6]), prof(1, 0.5, &[0.5]), prof(2, 0.1, &[0.3, 0.4])];
        let null = TrialProfiles {
            seed: 9,
            model: NullModel::Randomized,
            profiles: vec![prof(0, 0.5, &[0.0, 1.0]), prof(1, 0.5, &[0.5]), prof(2, 0.1, &[0.05, 0.2])],
        };
        let r = population_rates(&emp, &null).unwrap();
        assert_eq!((r.n_r1r2, r.n_r3), (3, 2));
        // ego 1 ties (0 vs 0): not counted
        assert_eq!(r.hits_r1, 1);
        assert!(close(r.r1, 1.0 / 3.0));
        assert_eq!(r.r3, Some(0.5));
        assert_eq!(r.r3_null, Some(1.0));
        assert_eq!(r.trial_seed, 9);
    }

    #[test]
    fn rates_reject_mismatch() {
        let emp = vec![prof(0, 0.5, &[0.4, 0.6])];
        let null = TrialProfiles { seed: 0, model: NullModel::Randomized, profiles: vec![prof(1, 0.5, &[0.4, 0.6])] };
        assert!(matches!(population_rates(&emp, &null), Err(MetricsError::MismatchedEgos { .. })));
        let null = TrialProfiles { seed: 0, model: NullModel::Randomized, profiles: vec![prof(0, 0.5, &[0.4])] };
        assert!(matches!(population_rates(&emp, &null), Err(MetricsError::MismatchedNeighborCount { .. })));
        let none = TrialProfiles { seed: 0, model: NullModel::Randomized, profiles: vec![] };
        assert_eq!(population_rates(&[], &none), Err(MetricsError::EmptyPopulation));
    }

    #[test]
    fn profile_csv_leaves_absent_asymmetry_empty() {
        let labels = vec!["a".to_string()];
        let csv = profiles_csv(&labels, &[prof(0, 0.5, &[0.4])]);
        let row = csv.lines().nth(1).unwrap();
        assert!(row.ends_with(",,false"), "{row}");
    }

    proptest! {
        #[test]
        fn profile_identities(x in 0.0f64..=1.0, ns in proptest::collection::vec(0.0f64..=1.0, 1..20)) {
            let p = prof(0, x, &ns);
            prop_assert!(p.alpha <= p.beta);
            prop_assert!((p.gamma + p.delta - p.range).abs() <= EPS);
            prop_assert!((0.0..=1.0).contains(&p.range));
            prop_assert_eq!(p.max_dev, p.gamma.abs().max(p.delta.abs()));
            prop_assert!(p.mean_dev <= p.max_dev + EPS);
            prop_assert!(p.max_dev <= 1.0);
            prop_assert_eq!(p.inclusion, p.gamma >= 0.0 && p.delta >= 0.0);
            if let Some(s) = p.asymmetry {
                prop_assert_eq!(s.abs() <= 1.0 + EPS, p.inclusion);
            }
        }

        #[test]
        fn permutation_invariance(x in 0.0f64..=1.0, ns in proptest::collection::vec(0.0f64..=1.0, 1..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = ns.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert!((opinion_gap(x, &ns).unwrap() - opinion_gap(x, &shuffled).unwrap()).abs() <= EPS);
            prop_assert!((mean_deviation(x, &ns).unwrap() - mean_deviation(x, &shuffled).unwrap()).abs() <= EPS);
            prop_assert_eq!(max_deviation(x, &ns).unwrap(), max_deviation(x, &shuffled).unwrap());
        }

        #[test]
        fn adding_satisfying_ego_never_lowers_rates(
            base in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 1..15)
        ) {
            let emp: Vec<_> = base.iter().enumerate()
                .map(|(i, &(x, a, b, _))| prof(i as NodeIx, x, &[a, b])).collect();
            let null: Vec<_> = base.iter().enumerate()
                .map(|(i, &(x, _, _, c))| prof(i as NodeIx, x, &[c, 1.0 - c])).collect();
            let trial = TrialProfiles { seed: 0, model: NullModel::Randomized, profiles: null.clone() };
            let before = population_rates(&emp, &trial).unwrap();
            let k = base.len() as NodeIx;
            let mut emp2 = emp.clone();
            emp2.push(prof(k, 0.5, &[0.49, 0.51]));
            let mut null2 = null;
            null2.push(prof(k, 0.5, &[0.0, 1.0]));
            let after = population_rates(&emp2, &TrialProfiles { seed: 0, model: NullModel::Randomized, profiles: null2 }).unwrap();
            prop_assert!(after.r1 >= before.r1);
            prop_assert!(after.r2 >= before.r2);
            prop_assert!(after.r3.unwrap() >= before.r3.unwrap());
        }
    }
}
