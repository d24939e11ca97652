//! Seeded synthetic graphs with known homophily structure.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::bc_sim::standard_normal;
use crate::graph::{GraphError, NodeIx, OpinionGraph};

/// Opinions plus a directed edge list over node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub opinions: Vec<f64>,
    pub edges: Vec<(NodeIx, NodeIx)>,
}

impl Fixture {
    pub fn to_graph(&self) -> Result<OpinionGraph, GraphError> {
        OpinionGraph::from_indexed(self.opinions.clone(), self.edges.iter().copied())
    }

    /// `src,dst` edge list.
    pub fn edges_csv(&self) -> String {
        let mut out = String::from("src,dst\n");
        for (s, d) in &self.edges {
            out.push_str(&format!("{s},{d}\n"));
        }
        out
    }

    /// `node,opinion` table.
    pub fn opinions_csv(&self) -> String {
        let mut out = String::from("node,opinion\n");
        for (i, x) in self.opinions.iter().enumerate() {
            out.push_str(&format!("{i},{x}\n"));
        }
        out
    }
}

fn uniform_opinions(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

/// `round(n * mean_degree)` distinct directed edges drawn uniformly, no
/// self-loops, with i.i.d. uniform opinions.
pub fn erdos_renyi(n: usize, mean_degree: f64, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opinions = uniform_opinions(n, &mut rng);
    let possible = n.saturating_mul(n.saturating_sub(1));
    let m = ((n as f64 * mean_degree).round() as usize).min(possible);
    let mut seen = BTreeSet::new();
    while seen.len() < m {
        let s = rng.gen_range(0..n) as NodeIx;
        let d = rng.gen_range(0..n) as NodeIx;
        if s != d {
            seen.insert((s, d));
        }
    }
    Fixture { opinions, edges: seen.into_iter().collect() }
}

/// Every node follows its `k` nearest peers in opinion (ties by index).
pub fn nearest_opinion(n: usize, k: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opinions = uniform_opinions(n, &mut rng);
    let edges = nearest_opinion_edges(&opinions, k);
    Fixture { opinions, edges }
}

pub fn nearest_opinion_edges(opinions: &[f64], k: usize) -> Vec<(NodeIx, NodeIx)> {
    let n = opinions.len();
    let k = k.min(n.saturating_sub(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| opinions[a].total_cmp(&opinions[b]).then(a.cmp(&b)));
    let mut edges = Vec::with_capacity(n * k);
    for (pos, &i) in order.iter().enumerate() {
        let x = opinions[i];
        let (mut lo, mut hi) = (pos, pos + 1);
        for _ in 0..k {
            let left = lo.checked_sub(1).map(|l| x - opinions[order[l]]);
            let right = (hi < n).then(|| opinions[order[hi]] - x);
            match (left, right) {
                (Some(l), Some(r)) if l <= r => lo -= 1,
                (Some(_), None) => lo -= 1,
                _ => hi += 1,
            }
        }
        edges.extend(order[lo..hi].iter().filter(|&&j| j != i).map(|&j| (i as NodeIx, j as NodeIx)));
    }
    edges.sort_unstable();
    edges
}

/// Two narrow opinion camps near the poles; each node follows `degree`
/// random peers, crossing to the other camp with probability `cross_prob`.
pub fn camp_segregated(n: usize, degree: usize, cross_prob: f64, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opinions: Vec<f64> = (0..n)
        .map(|i| {
            let base = if i % 2 == 0 { 0.05 } else { 0.85 };
            base + 0.1 * rng.gen::<f64>()
        })
        .collect();
    let camps: [Vec<usize>; 2] = [(0..n).step_by(2).collect(), (1..n).step_by(2).collect()];
    let mut edges = BTreeSet::new();
    for i in 0..n {
        let own = i % 2;
        let mut targets = BTreeSet::new();
        let mut guard = 0;
        while targets.len() < degree && guard < 100 * degree {
            guard += 1;
            let camp = if rng.gen::<f64>() < cross_prob { 1 - own } else { own };
            let pick = camps[camp][rng.gen_range(0..camps[camp].len())];
            if pick != i {
                targets.insert(pick);
            }
        }
        edges.extend(targets.into_iter().map(|j| (i as NodeIx, j as NodeIx)));
    }
    Fixture { opinions, edges: edges.into_iter().collect() }
}

/// Unimodal opinions around 1/2 plus a share of extremists near both poles.
/// Mainstream nodes follow their nearest peers; extremists follow random
/// nodes from the central band `[0.4, 0.6]`.
pub fn extremists_toward_mode(n: usize, degree: usize, extremist_share: f64, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extremists = ((n as f64) * extremist_share).round() as usize;
    let opinions: Vec<f64> = (0..n)
        .map(|i| {
            if i < extremists {
                let u = 0.1 * rng.gen::<f64>();
                if i % 2 == 0 { u } else { 1.0 - u }
            } else {
                (0.5 + 0.1 * standard_normal(&mut rng)).clamp(0.2, 0.8)
            }
        })
        .collect();
    let central: Vec<usize> = (extremists..n).filter(|&j| (0.4..=0.6).contains(&opinions[j])).collect();
    let mut edges: Vec<(NodeIx, NodeIx)> = nearest_opinion_edges(&opinions, degree)
        .into_iter()
        .filter(|&(s, _)| s as usize >= extremists)
        .collect();
    for i in 0..extremists {
        let picks = sample(&mut rng, central.len(), degree.min(central.len()));
        edges.extend(picks.into_iter().map(|p| (i as NodeIx, central[p] as NodeIx)));
    }
    edges.sort_unstable();
    Fixture { opinions, edges }
}
