//! Immutable directed opinion graph.
//!
//! Node ids are opaque strings at the boundary and dense `u32` indices inside.
//! Adjacency is stored twice in compressed sparse row form (out- and
//! in-neighbors), each row sorted, so both perspectives are slice lookups.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index into an [`OpinionGraph`].
pub type NodeIx = u32;

/// Opinions this close outside `[0, 1]` are treated as ingestion noise and clamped.
pub const CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge endpoints without an opinion: {}", .0.join(", "))]
    MissingOpinion(Vec<String>),
    #[error("opinion {value} for node `{node}` lies outside [0, 1]")]
    OpinionOutOfRange { node: String, value: f64 },
    #[error("node `{0}` listed more than once in the opinion table")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid rescale interval [{lo}, {hi}]")]
    InvalidRescaleInterval { lo: f64, hi: f64 },
    #[error("value {value} for node `{node}` lies outside the source interval [{lo}, {hi}]")]
    OutsideSourceInterval { node: String, value: f64, lo: f64, hi: f64 },
}

/// Which side of a directed edge counts as the neighborhood of an ego.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    /// Out-neighbors: the accounts the ego follows or replies to.
    Follower,
    /// In-neighbors: the accounts that follow or reply to the ego.
    Leader,
}

impl Perspective {
    pub const ALL: [Perspective; 2] = [Perspective::Follower, Perspective::Leader];

    pub fn as_str(self) -> &'static str {
        match self {
            Perspective::Follower => "follower",
            Perspective::Leader => "leader",
        }
    }
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Perspective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "follower" | "out" => Ok(Perspective::Follower),
            "leader" | "in" => Ok(Perspective::Leader),
            other => Err(format!("unknown perspective `{other}` (expected follower or leader)")),
        }
    }
}

/// Counts collected while building a graph, for data QA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub input_edges: usize,
    pub duplicate_edges: usize,
    pub self_loops: usize,
    pub clamped_opinions: usize,
}

/// Compressed sparse rows; `targets[offsets[i]..offsets[i + 1]]` is sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeIx>,
}

impl Csr {
    fn from_sorted_pairs(n: usize, pairs: impl Iterator<Item = (NodeIx, NodeIx)>) -> Csr {
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::new();
        for (src, dst) in pairs {
            offsets[src as usize + 1] += 1;
            targets.push(dst);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr { offsets, targets }
    }

    #[inline]
    fn row(&self, i: NodeIx) -> &[NodeIx] {
        let i = i as usize;
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Directed graph with one opinion in `[0, 1]` per node, no self-loops and
/// no duplicate edges.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionGraph {
    labels: Vec<String>,
    opinions: Vec<f64>,
    out_adj: Csr,
    in_adj: Csr,
    stats: BuildStats,
}

fn check_opinion(node: &str, value: f64) -> Result<(f64, bool), GraphError> {
    if (0.0..=1.0).contains(&value) {
        Ok((value, false))
    } else if (-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(&value) {
        Ok((value.clamp(0.0, 1.0), true))
    } else {
        Err(GraphError::OpinionOutOfRange { node: node.to_string(), value })
    }
}

impl OpinionGraph {
    /// Builds a graph from labelled edges and an opinion table.
    ///
    /// Node order follows the opinion table. Duplicate edges collapse and
    /// self-loops are dropped; both are counted in [`BuildStats`].
    pub fn build<S, T>(
        edges: &[(S, S)],
        opinions: impl IntoIterator<Item = (T, f64)>,
    ) -> Result<OpinionGraph, GraphError>
    where
        S: AsRef<str>,
        T: Into<String>,
    {
        let mut labels = Vec::new();
        let mut values = Vec::new();
        let mut index: HashMap<String, NodeIx> = HashMap::new();
        let mut clamped = 0;
        for (node, value) in opinions {
            let node: String = node.into();
            let (value, was_clamped) = check_opinion(&node, value)?;
            clamped += usize::from(was_clamped);
            if index.contains_key(&node) {
                return Err(GraphError::DuplicateNode(node));
            }
            index.insert(node.clone(), labels.len() as NodeIx);
            labels.push(node);
            values.push(value);
        }

        let mut missing: Vec<String> = Vec::new();
        let mut pairs = Vec::with_capacity(edges.len());
        for (src, dst) in edges {
            let (src, dst) = (src.as_ref(), dst.as_ref());
            match (index.get(src), index.get(dst)) {
                (Some(&s), Some(&d)) => pairs.push((s, d)),
                (s, d) => {
                    if s.is_none() {
                        missing.push(src.to_string());
                    }
                    if d.is_none() {
                        missing.push(dst.to_string());
                    }
                }
            }
        }
        if !missing.is_empty() {
            missing.sort();
            missing.dedup();
            return Err(GraphError::MissingOpinion(missing));
        }

        let mut graph = Self::from_index_pairs(labels, values, pairs);
        graph.stats.clamped_opinions = clamped;
        Ok(graph)
    }

    /// Builds a graph over nodes `0..opinions.len()` labelled by their index.
    pub fn from_indexed(
        opinions: Vec<f64>,
        edges: impl IntoIterator<Item = (NodeIx, NodeIx)>,
    ) -> Result<OpinionGraph, GraphError> {
        let labels: Vec<String> = (0..opinions.len()).map(|i| i.to_string()).collect();
        let mut values = Vec::with_capacity(opinions.len());
        let mut clamped = 0;
        for (label, &v) in labels.iter().zip(&opinions) {
            let (v, c) = check_opinion(label, v)?;
            clamped += usize::from(c);
            values.push(v);
        }
        let n = values.len() as NodeIx;
        let mut pairs = Vec::new();
        for (s, d) in edges {
            for x in [s, d] {
                if x >= n {
                    return Err(GraphError::MissingOpinion(vec![x.to_string()]));
                }
            }
            pairs.push((s, d));
        }
        let mut graph = Self::from_index_pairs(labels, values, pairs);
        graph.stats.clamped_opinions = clamped;
        Ok(graph)
    }

    fn from_index_pairs(
        labels: Vec<String>,
        opinions: Vec<f64>,
        mut pairs: Vec<(NodeIx, NodeIx)>,
    ) -> OpinionGraph {
        let input_edges = pairs.len();
        let before = pairs.len();
        pairs.retain(|&(s, d)| s != d);
        let self_loops = before - pairs.len();
        pairs.sort_unstable();
        pairs.dedup();
        let duplicate_edges = before - self_loops - pairs.len();

        let n = labels.len();
        let out_adj = Csr::from_sorted_pairs(n, pairs.iter().copied());
        let mut reversed: Vec<(NodeIx, NodeIx)> = pairs.iter().map(|&(s, d)| (d, s)).collect();
        drop(pairs);
        reversed.sort_unstable();
        let in_adj = Csr::from_sorted_pairs(n, reversed.into_iter());

        OpinionGraph {
            labels,
            opinions,
            out_adj,
            in_adj,
            stats: BuildStats {
                input_edges,
                duplicate_edges,
                self_loops,
                clamped_opinions: 0,
            },
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.targets.len()
    }

    pub fn build_stats(&self) -> BuildStats {
        self.stats
    }

    pub fn label(&self, i: NodeIx) -> &str {
        &self.labels[i as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn opinion(&self, i: NodeIx) -> f64 {
        self.opinions[i as usize]
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    /// Looks up the dense index of a labelled node. Linear scan; callers that
    /// need many lookups should build their own map from [`labels`](Self::labels).
    pub fn node_index(&self, label: &str) -> Result<NodeIx, GraphError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as NodeIx)
            .ok_or_else(|| GraphError::UnknownNode(label.to_string()))
    }

    /// Neighbors of `i` under perspective `p`, sorted by index.
    pub fn neighbors(&self, i: NodeIx, p: Perspective) -> Result<&[NodeIx], GraphError> {
        if (i as usize) < self.node_count() {
            Ok(self.neighbor_slice(i, p))
        } else {
            Err(GraphError::UnknownNode(i.to_string()))
        }
    }

    /// Unchecked variant of [`neighbors`](Self::neighbors); panics on an out-of-range index.
    #[inline]
    pub fn neighbor_slice(&self, i: NodeIx, p: Perspective) -> &[NodeIx] {
        match p {
            Perspective::Follower => self.out_adj.row(i),
            Perspective::Leader => self.in_adj.row(i),
        }
    }

    pub fn out_degree(&self, i: NodeIx) -> usize {
        self.out_adj.row(i).len()
    }

    pub fn in_degree(&self, i: NodeIx) -> usize {
        self.in_adj.row(i).len()
    }

    pub fn degree(&self, i: NodeIx, p: Perspective) -> usize {
        self.neighbor_slice(i, p).len()
    }

    pub fn has_edge(&self, src: NodeIx, dst: NodeIx) -> bool {
        self.out_adj.row(src).binary_search(&dst).is_ok()
    }

    /// All edges in (src, dst) lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeIx, NodeIx)> + '_ {
        (0..self.node_count() as NodeIx)
            .flat_map(move |s| self.out_adj.row(s).iter().map(move |&d| (s, d)))
    }

    /// Nodes taking part in at least one edge, in index order.
    pub fn active_nodes(&self) -> Vec<NodeIx> {
        (0..self.node_count() as NodeIx)
            .filter(|&i| self.out_degree(i) + self.in_degree(i) > 0)
            .collect()
    }

    /// Nodes with at least `min_neighbors` neighbors under `p`.
    pub fn eligible_users(&self, p: Perspective, min_neighbors: usize) -> Vec<NodeIx> {
        let min = min_neighbors.max(1);
        (0..self.node_count() as NodeIx)
            .filter(|&i| self.degree(i, p) >= min)
            .collect()
    }
}

/// Affine map of `values` from `[lo, hi]` onto `[0, 1]`.
pub fn rescale_opinions<S: AsRef<str>>(
    values: &[(S, f64)],
    lo: f64,
    hi: f64,
) -> Result<Vec<(String, f64)>, GraphError> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(GraphError::InvalidRescaleInterval { lo, hi });
    }
    values
        .iter()
        .map(|(node, v)| {
            let v = *v;
            if !(lo..=hi).contains(&v) {
                return Err(GraphError::OutsideSourceInterval {
                    node: node.as_ref().to_string(),
                    value: v,
                    lo,
                    hi,
                });
            }
            Ok((node.as_ref().to_string(), (v - lo) / (hi - lo)))
        })
        .collect()
}
