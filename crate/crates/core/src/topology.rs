//! Structural diagnostics of the interaction graph.
//!
//! Centralities work on the symmetrized simple graph (an undirected edge
//! wherever either direction exists). Directed clustering follows the
//! all-triangle formulation
//!
//! ```text
//! C_i = t_i / (d_tot (d_tot - 1) - 2 d_mutual),   t_i = ((A + Aᵀ)³)_ii / 2
//! ```
//!
//! with `d_tot` the sum of in- and out-degree and `d_mutual` the number of
//! reciprocated neighbors. A directed 3-cycle gives 1/2 at every node; a
//! fully reciprocated triangle gives 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeIx, OpinionGraph};
use crate::intervals::IntervalPartition;
use crate::metrics::csv_field;
use crate::numeric::compensated_sum;

pub const DEFAULT_KATZ_FACTOR: f64 = 0.9;
pub const KATZ_TOLERANCE: f64 = 1e-10;
pub const EIGEN_TOLERANCE: f64 = 1e-11;
pub const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { method: &'static str, iterations: usize, residual: f64 },
    #[error("graph has no edges")]
    NoEdges,
    #[error("Katz attenuation {attenuation} must lie in (0, 1/λ_max = {limit})")]
    InvalidAttenuation { attenuation: f64, limit: f64 },
}

/// Undirected simple adjacency of the symmetrized graph.
#[derive(Debug, Clone)]
pub struct SymmetricAdjacency {
    offsets: Vec<usize>,
    targets: Vec<NodeIx>,
}

impl SymmetricAdjacency {
    pub fn new(g: &OpinionGraph) -> SymmetricAdjacency {
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(2 * g.edge_count());
        offsets.push(0);
        for i in 0..n as NodeIx {
            let (out, inn) = (
                g.neighbor_slice(i, crate::Perspective::Follower),
                g.neighbor_slice(i, crate::Perspective::Leader),
            );
            // merge two sorted rows without duplicates
            let (mut a, mut b) = (0, 0);
            while a < out.len() || b < inn.len() {
                let next = match (out.get(a), inn.get(b)) {
                    (Some(&x), Some(&y)) if x == y => {
                        a += 1;
                        b += 1;
                        x
                    }
                    (Some(&x), Some(&y)) if x < y => {
                        a += 1;
                        x
                    }
                    (Some(_), Some(&y)) => {
                        b += 1;
                        y
                    }
                    (Some(&x), None) => {
                        a += 1;
                        x
                    }
                    (None, Some(&y)) => {
                        b += 1;
                        y
                    }
                    (None, None) => unreachable!(),
                };
                targets.push(next);
            }
            offsets.push(targets.len());
        }
        SymmetricAdjacency { offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: NodeIx) -> &[NodeIx] {
        &self.targets[self.offsets[i as usize]..self.offsets[i as usize + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    fn multiply(&self, x: &[f64], out: &mut [f64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            *o = compensated_sum(self.row(i as NodeIx).iter().map(|&j| x[j as usize]));
        });
    }
}

/// Mean in- and out-degree of the nodes in each interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDegrees {
    pub interval: usize,
    pub nodes: usize,
    pub mean_in_degree: Option<f64>,
    pub mean_out_degree: Option<f64>,
    pub mean_clustering: Option<f64>,
}

pub fn degree_by_interval(g: &OpinionGraph, partition: &IntervalPartition) -> Vec<IntervalDegrees> {
    interval_means(g, partition, None)
}

fn interval_means(g: &OpinionGraph, partition: &IntervalPartition, clustering: Option<&[f64]>) -> Vec<IntervalDegrees> {
    let k = partition.k();
    let mut counts = vec![0usize; k];
    let mut ins = vec![Vec::new(); k];
    let mut outs = vec![Vec::new(); k];
    let mut cls = vec![Vec::new(); k];
    for i in 0..g.node_count() as NodeIx {
        let b = partition.assign(g.opinion(i)).expect("opinions lie in [0, 1]") - 1;
        counts[b] += 1;
        ins[b].push(g.in_degree(i) as f64);
        outs[b].push(g.out_degree(i) as f64);
        if let Some(c) = clustering {
            cls[b].push(c[i as usize]);
        }
    }
    (0..k)
        .map(|b| IntervalDegrees {
            interval: b + 1,
            nodes: counts[b],
            mean_in_degree: crate::numeric::mean(&ins[b]),
            mean_out_degree: crate::numeric::mean(&outs[b]),
            mean_clustering: crate::numeric::mean(&cls[b]),
        })
        .collect()
}

/// Directed local clustering coefficient of every node.
pub fn local_clustering_all(g: &OpinionGraph) -> Vec<f64> {
    let sym = SymmetricAdjacency::new(g);
    (0..g.node_count() as NodeIx)
        .into_par_iter()
        .map_init(
            || vec![0u8; g.node_count()],
            |weight, i| clustering_at(g, &sym, weight, i),
        )
        .collect()
}

/// Directed local clustering coefficient of node `i`.
pub fn local_clustering(g: &OpinionGraph, i: NodeIx) -> f64 {
    let sym = SymmetricAdjacency::new(g);
    let mut weight = vec![0u8; g.node_count()];
    clustering_at(g, &sym, &mut weight, i)
}

/// Weight of the symmetrized pair (i, j): number of directed edges between them.
fn pair_weight(g: &OpinionGraph, i: NodeIx, j: NodeIx) -> u8 {
    u8::from(g.has_edge(i, j)) + u8::from(g.has_edge(j, i))
}

fn clustering_at(g: &OpinionGraph, sym: &SymmetricAdjacency, weight: &mut [u8], i: NodeIx) -> f64 {
    let d_tot = (g.in_degree(i) + g.out_degree(i)) as f64;
    let nbrs = sym.row(i);
    let d_mutual = nbrs.iter().filter(|&&j| pair_weight(g, i, j) == 2).count() as f64;
    let denom = d_tot * (d_tot - 1.0) - 2.0 * d_mutual;
    if denom <= 0.0 {
        return 0.0;
    }
    for &j in nbrs {
        weight[j as usize] = pair_weight(g, i, j);
    }
    // closed walks i -> j -> k -> i in the weighted symmetric matrix
    let mut walks = 0u64;
    for &j in nbrs {
        let wij = u64::from(weight[j as usize]);
        for &k in sym.row(j) {
            let wki = u64::from(weight[k as usize]);
            if wki > 0 {
                walks += wij * u64::from(pair_weight(g, j, k)) * wki;
            }
        }
    }
    for &j in nbrs {
        weight[j as usize] = 0;
    }
    (walks as f64 / 2.0) / denom
}

/// Largest eigenvalue of a symmetric nonnegative adjacency and its
/// eigenvector, by power iteration on `A + I` (the shift removes the
/// oscillation of bipartite components).
fn dominant_eigenpair(
    sym: &SymmetricAdjacency,
    support: &[bool],
    tol: f64,
) -> Result<(f64, Vec<f64>), TopologyError> {
    let n = sym.node_count();
    let mut x: Vec<f64> = support.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect();
    let mut ax = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        sym.multiply(&x, &mut ax);
        let mut next: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a + b).collect();
        let norm = next.iter().copied().fold(0.0, f64::max);
        if norm == 0.0 {
            return Ok((0.0, next));
        }
        next.iter_mut().for_each(|v| *v /= norm);
        residual = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if residual < tol {
            sym.multiply(&x, &mut ax);
            let num = compensated_sum(x.iter().zip(&ax).map(|(a, b)| a * b));
            let den = compensated_sum(x.iter().map(|a| a * a));
            return Ok((num / den, x));
        }
    }
    Err(TopologyError::NoConvergence { method: "power iteration", iterations: MAX_ITERATIONS, residual })
}

/// Largest adjacency eigenvalue of the symmetrized graph.
///
/// Shifted power iteration from the all-ones vector over the whole graph,
/// stopped once the Rayleigh quotient settles; the eigenvalue converges much
/// faster than the eigenvector.
pub fn spectral_radius(g: &OpinionGraph) -> Result<f64, TopologyError> {
    let sym = SymmetricAdjacency::new(g);
    if sym.edge_count() == 0 {
        return Ok(0.0);
    }
    let n = sym.node_count();
    let mut x = vec![1.0; n];
    let mut ax = vec![0.0; n];
    let mut last = f64::INFINITY;
    let mut change = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        sym.multiply(&x, &mut ax);
        let num = compensated_sum(x.iter().zip(&ax).map(|(a, b)| a * b));
        let den = compensated_sum(x.iter().map(|a| a * a));
        let lambda = num / den;
        change = (lambda - last).abs();
        if change <= 1e-13 * lambda {
            return Ok(lambda);
        }
        last = lambda;
        let mut next: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a + b).collect();
        let norm = next.iter().copied().fold(0.0, f64::max);
        next.iter_mut().for_each(|v| *v /= norm);
        x = next;
    }
    Err(TopologyError::NoConvergence { method: "spectral radius", iterations: MAX_ITERATIONS, residual: change })
}

/// Katz centrality solution of `x = αAx + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatzResult {
    pub scores: Vec<f64>,
    pub attenuation: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Katz centrality on the symmetrized graph; default attenuation `0.9/λ_max`.
pub fn katz_centrality(g: &OpinionGraph, attenuation: Option<f64>) -> Result<KatzResult, TopologyError> {
    let sym = SymmetricAdjacency::new(g);
    let n = g.node_count();
    let lambda_max = spectral_radius(g)?;
    if sym.edge_count() == 0 {
        return Ok(KatzResult { scores: vec![1.0; n], attenuation: attenuation.unwrap_or(0.0), lambda_max, iterations: 0, residual: 0.0 });
    }
    let limit = 1.0 / lambda_max;
    let alpha = attenuation.unwrap_or(DEFAULT_KATZ_FACTOR * limit);
    if !(alpha > 0.0 && alpha < limit) {
        return Err(TopologyError::InvalidAttenuation { attenuation: alpha, limit });
    }
    let mut x = vec![1.0; n];
    let mut ax = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        sym.multiply(&x, &mut ax);
        let next: Vec<f64> = ax.iter().map(|a| alpha * a + 1.0).collect();
        residual = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if residual < KATZ_TOLERANCE {
            return Ok(KatzResult { scores: x, attenuation: alpha, lambda_max, iterations: it, residual });
        }
    }
    Err(TopologyError::NoConvergence { method: "Katz iteration", iterations: MAX_ITERATIONS, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvectorResult {
    /// Max-normalised scores; zero outside the largest component.
    pub scores: Vec<f64>,
    pub eigenvalue: f64,
    pub component_size: usize,
}

/// Eigenvector centrality on the largest weakly connected component.
///
/// Ties between equally large components go to the one containing the
/// smallest node index. An edgeless graph yields all zeros.
pub fn eigenvector_centrality(g: &OpinionGraph) -> Result<EigenvectorResult, TopologyError> {
    let sym = SymmetricAdjacency::new(g);
    let n = g.node_count();
    if sym.edge_count() == 0 {
        return Ok(EigenvectorResult { scores: vec![0.0; n], eigenvalue: 0.0, component_size: 0 });
    }
    let (labels, sizes) = component_labels(&sym);
    let largest = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap();
    let support: Vec<bool> = labels.iter().map(|&l| l == largest).collect();
    let (eigenvalue, scores) = dominant_eigenpair(&sym, &support, EIGEN_TOLERANCE)?;
    Ok(EigenvectorResult { scores, eigenvalue, component_size: sizes[largest] })
}

/// Fraction of edges whose reverse edge also exists.
pub fn reciprocity(g: &OpinionGraph) -> Result<f64, TopologyError> {
    if g.edge_count() == 0 {
        return Err(TopologyError::NoEdges);
    }
    let mutual = g.edges().filter(|&(s, d)| g.has_edge(d, s)).count();
    Ok(mutual as f64 / g.edge_count() as f64)
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
    }
}

/// Component label per node (numbered by first appearance) and component sizes.
fn component_labels(sym: &SymmetricAdjacency) -> (Vec<usize>, Vec<usize>) {
    let n = sym.node_count();
    let mut ds = DisjointSet::new(n);
    for i in 0..n as NodeIx {
        for &j in sym.row(i) {
            if j > i {
                ds.union(i, j);
            }
        }
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut labels = vec![0; n];
    let mut sizes = Vec::new();
    for i in 0..n as u32 {
        let r = ds.find(i) as usize;
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = sizes.len();
            sizes.push(0);
        }
        labels[i as usize] = label_of_root[r];
        sizes[label_of_root[r]] += 1;
    }
    (labels, sizes)
}

/// Weak component labels per node, numbered by smallest member.
pub fn weak_component_labels(g: &OpinionGraph) -> Vec<usize> {
    component_labels(&SymmetricAdjacency::new(g)).0
}

/// Weakly connected component sizes, largest first.
pub fn weakly_connected_components(g: &OpinionGraph) -> Vec<usize> {
    let (_, mut sizes) = component_labels(&SymmetricAdjacency::new(g));
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Per-node structural indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTopology {
    pub node: String,
    pub in_degree: usize,
    pub out_degree: usize,
    pub clustering: f64,
    pub katz: f64,
    pub eigenvector: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub reciprocity: Option<f64>,
    pub wcc_sizes: Vec<usize>,
    pub interval_degrees: Vec<IntervalDegrees>,
    pub katz_attenuation: f64,
    pub katz_iterations: usize,
    pub katz_residual: f64,
    pub lambda_max: f64,
    pub eigenvector_eigenvalue: f64,
    pub eigenvector_component_size: usize,
    pub clustering_formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub summary: TopologySummary,
    pub nodes: Vec<NodeTopology>,
}

pub const CLUSTERING_FORMULA: &str =
    "C_i = t_i / (d_tot*(d_tot-1) - 2*d_mutual), t_i = ((A+A^T)^3)_ii / 2";

pub fn topology_report(
    g: &OpinionGraph,
    partition: &IntervalPartition,
    katz_attenuation: Option<f64>,
) -> Result<TopologyReport, TopologyError> {
    let clustering = local_clustering_all(g);
    let katz = katz_centrality(g, katz_attenuation)?;
    let eig = eigenvector_centrality(g)?;
    let nodes = (0..g.node_count() as NodeIx)
        .map(|i| NodeTopology {
            node: g.label(i).to_string(),
            in_degree: g.in_degree(i),
            out_degree: g.out_degree(i),
            clustering: clustering[i as usize],
            katz: katz.scores[i as usize],
            eigenvector: eig.scores[i as usize],
        })
        .collect();
    Ok(TopologyReport {
        summary: TopologySummary {
            reciprocity: reciprocity(g).ok(),
            wcc_sizes: weakly_connected_components(g),
            interval_degrees: interval_means(g, partition, Some(&clustering)),
            katz_attenuation: katz.attenuation,
            katz_iterations: katz.iterations,
            katz_residual: katz.residual,
            lambda_max: katz.lambda_max,
            eigenvector_eigenvalue: eig.eigenvalue,
            eigenvector_component_size: eig.component_size,
            clustering_formula: CLUSTERING_FORMULA.to_string(),
        },
        nodes,
    })
}

/// `node,in_deg,out_deg,clustering,katz,eigenvector`.
pub fn topology_csv(nodes: &[NodeTopology]) -> String {
    let mut out = String::from("node,in_deg,out_deg,clustering,katz,eigenvector\n");
    for n in nodes {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&n.node),
            n.in_degree,
            n.out_degree,
            n.clustering,
            n.katz,
            n.eigenvector
        ));
    }
    out
}
