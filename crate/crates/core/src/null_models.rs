//! Degree-preserving null neighborhoods.
//!
//! Two models replace every ego's neighbor opinions with a synthetic multiset
//! of the same size:
//!
//! * [`NullModel::Randomized`]: `n` opinions drawn without replacement from the
//!   population, ego excluded.
//! * [`NullModel::RangeBased`]: `n` opinions drawn inside a candidate interval
//!   of width `c` (the ego's empirical confidence range) centred on a random
//!   population opinion and shifted back inside `[0, 1]`. The candidate
//!   set's minimum and maximum are always kept, the rest is sampled from its
//!   interior.
//!
//! Every (trial, ego) pair gets its own ChaCha stream keyed by the trial seed
//! and the ego index, so output does not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeIx, OpinionGraph, Perspective};
use crate::metrics::{confidence_interval, neighbor_opinions, NeighborProfile, TrialProfiles};
use crate::numeric::mix64;

/// Center draws attempted per ego before it is reported as skipped.
pub const DEFAULT_RETRY_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NullModelError {
    #[error("cannot draw {requested} neighbors from a pool of {available} other opinions")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("no feasible candidate interval after {attempts} center draws")]
    RetryCapExceeded { attempts: usize },
    #[error("neighbor count must be at least 1")]
    ZeroNeighbors,
    #[error("confidence range {0} outside [0, 1]")]
    InvalidRange(f64),
    #[error("number of trials must be at least 1")]
    NoTrials,
    #[error("retry cap must be at least 1")]
    ZeroRetryCap,
    #[error("trial record references unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullModel {
    Randomized,
    RangeBased,
}

impl NullModel {
    pub const ALL: [NullModel; 2] = [NullModel::Randomized, NullModel::RangeBased];

    pub fn as_str(self) -> &'static str {
        match self {
            NullModel::Randomized => "randomized",
            NullModel::RangeBased => "range_based",
        }
    }
}

impl fmt::Display for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NullModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "randomized" | "random" => Ok(NullModel::Randomized),
            "range_based" | "range" | "rangebased" => Ok(NullModel::RangeBased),
            other => Err(format!("unknown null model `{other}` (expected randomized or range_based)")),
        }
    }
}

/// The empirical opinion list: one entry per node taking part in an edge.
#[derive(Debug, Clone)]
pub struct OpinionPool {
    nodes: Vec<NodeIx>,
    values: Vec<f64>,
    /// Pool position of each graph node, `u32::MAX` when absent.
    position: Vec<u32>,
    /// Values in ascending order (ties by pool position).
    sorted: Vec<f64>,
    /// Rank of each pool position inside `sorted`.
    rank: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl OpinionPool {
    /// Pool of all nodes with at least one incident edge.
    pub fn from_graph(g: &OpinionGraph) -> OpinionPool {
        let nodes = g.active_nodes();
        let values = nodes.iter().map(|&i| g.opinion(i)).collect();
        Self::new(g.node_count(), nodes, values)
    }

    /// Pool from explicit `(node, opinion)` entries; `universe` bounds the node indices.
    pub fn from_entries(universe: usize, entries: &[(NodeIx, f64)]) -> OpinionPool {
        Self::new(
            universe,
            entries.iter().map(|e| e.0).collect(),
            entries.iter().map(|e| e.1).collect(),
        )
    }

    fn new(universe: usize, nodes: Vec<NodeIx>, values: Vec<f64>) -> OpinionPool {
        let mut position = vec![ABSENT; universe];
        for (pos, &node) in nodes.iter().enumerate() {
            position[node as usize] = pos as u32;
        }
        let mut order: Vec<u32> = (0..values.len() as u32).collect();
        order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]).then(a.cmp(&b)));
        let sorted = order.iter().map(|&p| values[p as usize]).collect();
        let mut rank = vec![0u32; values.len()];
        for (r, &p) in order.iter().enumerate() {
            rank[p as usize] = r as u32;
        }
        OpinionPool { nodes, values, position, sorted, rank }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nodes(&self) -> &[NodeIx] {
        &self.nodes
    }

    fn ego_position(&self, ego: NodeIx) -> Option<usize> {
        self.position
            .get(ego as usize)
            .copied()
            .filter(|&p| p != ABSENT)
            .map(|p| p as usize)
    }

    /// Pool values inside `[a, b]`, the ego's own entry removed. Used by tests
    /// and audits to reconstruct candidate sets.
    pub fn candidates(&self, ego: NodeIx, a: f64, b: f64) -> Vec<f64> {
        let (lo, hi) = self.sorted_window(a, b);
        let skip = self.ego_position(ego).map(|p| self.rank[p] as usize);
        (lo..hi).filter(|&r| Some(r) != skip).map(|r| self.sorted[r]).collect()
    }

    fn sorted_window(&self, a: f64, b: f64) -> (usize, usize) {
        let lo = self.sorted.partition_point(|&v| v < a);
        let hi = self.sorted.partition_point(|&v| v <= b);
        (lo, hi.max(lo))
    }
}

/// One ego's synthetic neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoDraw {
    pub ego: NodeIx,
    pub opinions: Vec<f64>,
    /// Generating interval `[a, b]` of the range-based model (absent for
    /// single-neighbor egos and for the randomized model).
    pub interval: Option<(f64, f64)>,
}

/// `n` opinions drawn uniformly without replacement from the pool, ego excluded.
pub fn randomized_neighbors<R: Rng + ?Sized>(
    pool: &OpinionPool,
    ego: NodeIx,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>, NullModelError> {
    if n == 0 {
        return Err(NullModelError::ZeroNeighbors);
    }
    let ego_pos = pool.ego_position(ego);
    let available = pool.len() - usize::from(ego_pos.is_some());
    if n > available {
        return Err(NullModelError::PoolTooSmall { requested: n, available });
    }
    let picks = index::sample(rng, available, n);
    Ok(picks
        .iter()
        .map(|k| match ego_pos {
            Some(e) if k >= e => pool.values[k + 1],
            _ => pool.values[k],
        })
        .collect())
}

/// Shifts `[x_c - c/2, x_c + c/2]` inside `[0, 1]` keeping its width.
pub fn candidate_interval(center: f64, c: f64) -> (f64, f64) {
    let a = center - c / 2.0;
    let b = center + c / 2.0;
    if a < 0.0 {
        (0.0, c.min(1.0))
    } else if b > 1.0 {
        ((1.0 - c).max(0.0), 1.0)
    } else {
        (a, b)
    }
}

/// Drawn opinions with their generating interval.
pub type RangeDraw = (Vec<f64>, Option<(f64, f64)>);

/// Range-based neighborhood of size `n` and span at most `c`.
///
/// Returns the opinions in ascending order together with the generating
/// interval (absent when `n == 1`).
pub fn range_based_neighbors<R: Rng + ?Sized>(
    pool: &OpinionPool,
    ego: NodeIx,
    n: usize,
    c: f64,
    retry_cap: usize,
    rng: &mut R,
) -> Result<RangeDraw, NullModelError> {
    if n == 0 {
        return Err(NullModelError::ZeroNeighbors);
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(NullModelError::InvalidRange(c));
    }
    if n == 1 {
        return randomized_neighbors(pool, ego, 1, rng).map(|v| (v, None));
    }
    let ego_rank = pool.ego_position(ego).map(|p| pool.rank[p] as usize);
    let available = pool.len() - usize::from(ego_rank.is_some());
    if n > available {
        return Err(NullModelError::PoolTooSmall { requested: n, available });
    }
    let skip = |r: usize| Some(r) == ego_rank;

    for _ in 0..retry_cap {
        let center = pool.values[rng.gen_range(0..pool.len())];
        let (a, b) = candidate_interval(center, c);
        let (lo, hi) = pool.sorted_window(a, b);
        let inside_ego = ego_rank.is_some_and(|r| (lo..hi).contains(&r));
        let size = hi - lo - usize::from(inside_ego);
        if size < n {
            continue;
        }
        let first = if skip(lo) { lo + 1 } else { lo };
        let last = if skip(hi - 1) { hi - 2 } else { hi - 1 };
        // interior ranks: (first, last) minus the ego's rank
        let interior_len = size - 2;
        let mut picks: Vec<usize> = index::sample(rng, interior_len, n - 2).into_vec();
        picks.sort_unstable();
        let mut out = Vec::with_capacity(n);
        out.push(pool.sorted[first]);
        for k in picks {
            let mut r = first + 1 + k;
            if ego_rank.is_some_and(|e| e > first && e < last && r >= e) {
                r += 1;
            }
            out.push(pool.sorted[r]);
        }
        out.push(pool.sorted[last]);
        return Ok((out, Some((a, b))));
    }
    Err(NullModelError::RetryCapExceeded { attempts: retry_cap })
}

/// One seeded randomization of every eligible ego's neighborhood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTrial {
    pub seed: u64,
    pub model: NullModel,
    pub perspective: Perspective,
    pub draws: Vec<EgoDraw>,
    pub skipped: Vec<NodeIx>,
}

impl NullTrial {
    /// Neighbor profiles of the synthetic neighborhoods, in ego order.
    pub fn profiles(&self, g: &OpinionGraph) -> TrialProfiles {
        let profiles = self
            .draws
            .iter()
            .map(|d| {
                NeighborProfile::from_opinions(d.ego, self.perspective, g.opinion(d.ego), &d.opinions)
                    .expect("draws are never empty")
            })
            .collect();
        TrialProfiles { seed: self.seed, model: self.model, profiles }
    }

    /// Compact serialisable form keyed by node label.
    pub fn to_record(&self, g: &OpinionGraph) -> NullTrialRecord {
        NullTrialRecord {
            seed: self.seed,
            model: self.model,
            assignments: self
                .draws
                .iter()
                .map(|d| (g.label(d.ego).to_string(), d.opinions.clone()))
                .collect(),
            skipped: self.skipped.iter().map(|&i| g.label(i).to_string()).collect(),
        }
    }

    /// Rebuilds a trial from its record. Interval metadata is not part of the
    /// record and comes back empty.
    pub fn from_record(
        g: &OpinionGraph,
        perspective: Perspective,
        record: &NullTrialRecord,
    ) -> Result<NullTrial, NullModelError> {
        let index: BTreeMap<&str, NodeIx> =
            g.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i as NodeIx)).collect();
        let lookup = |label: &str| {
            index
                .get(label)
                .copied()
                .ok_or_else(|| NullModelError::UnknownNode(label.to_string()))
        };
        let mut draws = record
            .assignments
            .iter()
            .map(|(label, opinions)| {
                Ok(EgoDraw { ego: lookup(label)?, opinions: opinions.clone(), interval: None })
            })
            .collect::<Result<Vec<_>, NullModelError>>()?;
        draws.sort_by_key(|d| d.ego);
        let mut skipped = record
            .skipped
            .iter()
            .map(|l| lookup(l))
            .collect::<Result<Vec<_>, _>>()?;
        skipped.sort_unstable();
        Ok(NullTrial { seed: record.seed, model: record.model, perspective, draws, skipped })
    }
}

/// JSON form `{seed, model, assignments: {node: [opinions...]}, skipped: [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullTrialRecord {
    pub seed: u64,
    pub model: NullModel,
    pub assignments: BTreeMap<String, Vec<f64>>,
    pub skipped: Vec<String>,
}

/// Seed of trial `t` under `master_seed`.
pub fn trial_seed(master_seed: u64, t: usize) -> u64 {
    mix64(master_seed ^ mix64(t as u64 ^ 0x5bd1_e995))
}

/// Random stream for one ego inside one trial.
pub fn ego_rng(trial_seed: u64, ego: NodeIx) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    rng.set_stream(u64::from(ego));
    rng
}

/// Runs one trial over the egos with at least one neighbor under `p`.
pub fn run_trial(
    g: &OpinionGraph,
    pool: &OpinionPool,
    p: Perspective,
    model: NullModel,
    seed: u64,
    retry_cap: usize,
) -> NullTrial {
    let egos = g.eligible_users(p, 1);
    let results: Vec<(NodeIx, Result<EgoDraw, NullModelError>)> = egos
        .into_par_iter()
        .map(|ego| {
            let n = g.degree(ego, p);
            let mut rng = ego_rng(seed, ego);
            let draw = match model {
                NullModel::Randomized => randomized_neighbors(pool, ego, n, &mut rng)
                    .map(|opinions| EgoDraw { ego, opinions, interval: None }),
                NullModel::RangeBased => {
                    let (_, _, c) = confidence_interval(&neighbor_opinions(g, ego, p))
                        .expect("eligible ego has neighbors");
                    range_based_neighbors(pool, ego, n, c, retry_cap, &mut rng)
                        .map(|(opinions, interval)| EgoDraw { ego, opinions, interval })
                }
            };
            (ego, draw)
        })
        .collect();

    let mut draws = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (ego, r) in results {
        match r {
            Ok(d) => draws.push(d),
            Err(e) => {
                log::warn!("{model} trial {seed:#x}: ego `{}` skipped: {e}", g.label(ego));
                skipped.push(ego);
            }
        }
    }
    NullTrial { seed, model, perspective: p, draws, skipped }
}

/// `trials` independent trials with seeds derived from `master_seed`.
pub fn run_trials(
    g: &OpinionGraph,
    p: Perspective,
    model: NullModel,
    trials: usize,
    master_seed: u64,
    retry_cap: usize,
) -> Result<Vec<NullTrial>, NullModelError> {
    if trials == 0 {
        return Err(NullModelError::NoTrials);
    }
    if retry_cap == 0 {
        return Err(NullModelError::ZeroRetryCap);
    }
    let pool = OpinionPool::from_graph(g);
    Ok((0..trials)
        .into_par_iter()
        .map(|t| run_trial(g, &pool, p, model, trial_seed(master_seed, t), retry_cap))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool_of(values: &[f64]) -> OpinionPool {
        let entries: Vec<(NodeIx, f64)> = values.iter().enumerate().map(|(i, &v)| (i as NodeIx, v)).collect();
        OpinionPool::from_entries(values.len(), &entries)
    }

    #[test]
    fn exhaustive_draw_returns_all_others() {
        let pool = pool_of(&[0.1, 0.2, 0.3, 0.4]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut got = randomized_neighbors(&pool, 2, 3, &mut rng).unwrap();
        got.sort_by(f64::total_cmp);
        assert_eq!(got, vec![0.1, 0.2, 0.4]);
        assert_eq!(
            randomized_neighbors(&pool, 2, 4, &mut rng),
            Err(NullModelError::PoolTooSmall { requested: 4, available: 3 })
        );
    }

    #[test]
    fn ego_never_sampled() {
        let values: Vec<f64> = (0..6).map(|i| i as f64 / 10.0).collect();
        let pool = pool_of(&values);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let v = randomized_neighbors(&pool, 4, 1, &mut rng).unwrap();
            assert_ne!(v[0], 0.4);
        }
    }

    #[test]
    fn single_draw_is_uniform_over_others() {
        // chi-square against uniform over the 9 non-ego entries
        let values: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
        let pool = pool_of(&values);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 90_000;
        let mut counts = [0usize; 10];
        for _ in 0..trials {
            let v = randomized_neighbors(&pool, 0, 1, &mut rng).unwrap()[0];
            counts[(v * 10.0).round() as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = trials as f64 / 9.0;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 8 degrees of freedom, 0.999 quantile is 26.12
        assert!(chi2 < 26.12, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn interval_clamping_keeps_width() {
        assert_eq!(candidate_interval(0.5, 0.2), (0.4, 0.6));
        let (a, b) = candidate_interval(0.05, 0.3);
        assert_eq!(a, 0.0);
        assert!((b - 0.3).abs() < 1e-15);
        let (a, b) = candidate_interval(0.95, 0.3);
        assert_eq!(b, 1.0);
        assert!((a - 0.7).abs() < 1e-15);
        assert_eq!(candidate_interval(0.3, 1.0), (0.0, 1.0));
    }

    #[test]
    fn zero_width_interval_returns_ties() {
        let pool = pool_of(&[0.2, 0.5, 0.5, 0.5, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (v, interval) = range_based_neighbors(&pool, 0, 2, 0.0, 10_000, &mut rng).unwrap();
        assert_eq!(v, vec![0.5, 0.5]);
        assert_eq!(interval, Some((0.5, 0.5)));
    }

    #[test]
    fn infeasible_range_hits_retry_cap() {
        let pool = pool_of(&[0.1, 0.5, 0.9]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(
            range_based_neighbors(&pool, 0, 2, 0.1, 50, &mut rng),
            Err(NullModelError::RetryCapExceeded { attempts: 50 })
        );
    }

    #[test]
    fn range_based_keeps_extremes_and_excludes_ego() {
        let values: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).fract()).collect();
        let pool = pool_of(&values);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for ego in 0..40u32 {
            for n in 2..6 {
                let c = 0.35;
                let (v, interval) = range_based_neighbors(&pool, ego, n, c, 10_000, &mut rng).unwrap();
                let (a, b) = interval.unwrap();
                assert_eq!(v.len(), n);
                assert!((b - a - c).abs() <= 1e-12 && a >= 0.0 && b <= 1.0);
                let cands = pool.candidates(ego, a, b);
                let cmin = cands.iter().copied().fold(f64::INFINITY, f64::min);
                let cmax = cands.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(v[0], cmin);
                assert_eq!(*v.last().unwrap(), cmax);
                assert!(v.windows(2).all(|w| w[0] <= w[1]));
                // every value drawn at most as often as it occurs among candidates
                for x in &v {
                    let used = v.iter().filter(|y| *y == x).count();
                    let avail = cands.iter().filter(|y| *y == x).count();
                    assert!(used <= avail);
                }
            }
        }
    }

    #[test]
    fn full_width_range_includes_pool_extremes() {
        // c = 1 clamps to [0, 1]: candidates are the whole pool minus ego
        let values: Vec<f64> = (0..20).map(|i| 0.05 + 0.9 * (i as f64 * 0.61).fract()).collect();
        let pool = pool_of(&values);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut others: Vec<f64> = values[1..].to_vec();
        others.sort_by(f64::total_cmp);
        for _ in 0..200 {
            let (v, interval) = range_based_neighbors(&pool, 0, 5, 1.0, 10, &mut rng).unwrap();
            assert_eq!(interval, Some((0.0, 1.0)));
            assert_eq!(v[0], others[0]);
            assert_eq!(v[4], *others.last().unwrap());
        }
    }

    #[test]
    fn single_neighbor_range_based_is_plain_draw() {
        let pool = pool_of(&[0.1, 0.2, 0.3]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (v, interval) = range_based_neighbors(&pool, 1, 1, 0.0, 10, &mut rng).unwrap();
        assert_eq!(v.len(), 1);
        assert_ne!(v[0], 0.2);
        assert_eq!(interval, None);
    }

    fn small_graph() -> OpinionGraph {
        OpinionGraph::from_indexed(
            vec![0.1, 0.3, 0.5, 0.7, 0.9, 0.2],
            [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 0), (4, 1), (5, 4), (2, 4)],
        )
        .unwrap()
    }

    #[test]
    fn trials_are_deterministic_and_degree_preserving() {
        let g = small_graph();
        for model in NullModel::ALL {
            let a = run_trials(&g, Perspective::Follower, model, 5, 42, DEFAULT_RETRY_CAP).unwrap();
            let b = run_trials(&g, Perspective::Follower, model, 5, 42, DEFAULT_RETRY_CAP).unwrap();
            assert_eq!(a, b);
            let c = run_trials(&g, Perspective::Follower, model, 5, 43, DEFAULT_RETRY_CAP).unwrap();
            assert_ne!(a, c);
            for t in &a {
                for d in &t.draws {
                    assert_eq!(d.opinions.len(), g.degree(d.ego, Perspective::Follower));
                }
            }
        }
        assert_eq!(
            run_trials(&g, Perspective::Follower, NullModel::Randomized, 0, 1, 10),
            Err(NullModelError::NoTrials)
        );
    }

    #[test]
    fn three_node_single_trial() {
        let g = OpinionGraph::from_indexed(vec![0.1, 0.5, 0.9], [(0, 1), (1, 2), (2, 0), (0, 2)]).unwrap();
        let trials = run_trials(&g, Perspective::Leader, NullModel::Randomized, 1, 0, 10).unwrap();
        assert_eq!(trials.len(), 1);
        assert!(trials[0].skipped.is_empty());
        for d in &trials[0].draws {
            assert_eq!(d.opinions.len(), g.in_degree(d.ego));
        }
    }

    #[test]
    fn record_round_trip() {
        let g = small_graph();
        let t = &run_trials(&g, Perspective::Follower, NullModel::Randomized, 1, 9, 10).unwrap()[0];
        let json = serde_json::to_string(&t.to_record(&g)).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["seed", "model", "assignments", "skipped"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        let back: NullTrialRecord = serde_json::from_str(&json).unwrap();
        let rebuilt = NullTrial::from_record(&g, Perspective::Follower, &back).unwrap();
        assert_eq!(&rebuilt, t);
    }

    #[test]
    fn randomized_mean_converges_to_pool_mean() {
        let values: Vec<f64> = (0..200).map(|i| ((i * 7919) % 200) as f64 / 199.0).collect();
        let pool = pool_of(&values);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let draws = 20_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            sum += randomized_neighbors(&pool, 0, 1, &mut rng).unwrap()[0];
        }
        let others = &values[1..];
        let mu = others.iter().sum::<f64>() / others.len() as f64;
        let var = others.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / others.len() as f64;
        let se = (var / draws as f64).sqrt();
        assert!((sum / draws as f64 - mu).abs() < 3.0 * se);
    }
}
