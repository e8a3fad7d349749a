//! Pairwise feature influence between nodes.
//!
//! `i1[v][u]` measures how strongly the input features of `u` move the
//! output embedding of `v`. `i2[u][v] = i1[v][u] / Σ_w i1[v][w]` normalizes
//! per target, so every column of `i2` with a nonzero source row sums to one.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Config, InfluenceMode};
use crate::gnn::{forward_trace, GcnModel, ModelError, Propagator, Trace};
use crate::graph::{k_hop_nodes, Graph, Labeled, NodeId};

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTable {
    /// `i1[[v, u]]`: influence of source `u` on target `v`.
    pub i1: Array2<f64>,
    /// `i2[[u, v]]`: share of `v`'s total influence contributed by `u`.
    pub i2: Array2<f64>,
    /// Output-layer node embeddings, one row per node.
    pub embeddings: Array2<f64>,
}

impl InfluenceTable {
    pub fn node_count(&self) -> usize {
        self.i1.nrows()
    }

    fn from_rows(rows: Vec<Vec<f64>>, embeddings: Array2<f64>) -> Self {
        let n = rows.len();
        let mut i1 = Array2::zeros((n, n));
        for (v, row) in rows.iter().enumerate() {
            for (u, &x) in row.iter().enumerate() {
                i1[[v, u]] = x;
            }
        }
        let i2 = normalize(&i1);
        InfluenceTable { i1, i2, embeddings }
    }
}

fn normalize(i1: &Array2<f64>) -> Array2<f64> {
    let n = i1.nrows();
    let mut i2 = Array2::zeros((n, n));
    for v in 0..n {
        let total: f64 = i1.row(v).sum();
        if total > 0.0 {
            for u in 0..n {
                i2[[u, v]] = i1[[v, u]] / total;
            }
        }
    }
    i2
}

/// Random-walk influence estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwMode {
    /// Exact entries of `N^k` by `k` sparse products per row.
    Deterministic,
    /// Monte-Carlo estimate from `walks` lazy walks per target node.
    Sampled { walks: usize, seed: u64 },
}

/// Influence from the Jacobian of the output embeddings with respect to the
/// input features, by forward-mode differentiation. ReLU has derivative 0 at 0.
pub fn influence_exact(m: &GcnModel, g: &Graph) -> Result<InfluenceTable, ModelError> {
    let trace = forward_trace(m, g)?;
    let n = g.node_count();
    let d = m.feature_dim();
    let mut rows = vec![vec![0.0; n]; n];
    for u in 0..n {
        for j in 0..d {
            let mut tangent = Array2::zeros((n, d));
            tangent[[u, j]] = 1.0;
            for (w, z) in m.layers().iter().zip(&trace.pre) {
                tangent = trace.propagator.apply(&tangent).dot(w);
                tangent.zip_mut_with(z, |t, &z| {
                    if z <= 0.0 {
                        *t = 0.0;
                    }
                });
            }
            for (v, row) in rows.iter_mut().enumerate() {
                row[u] += tangent.row(v).iter().map(|x| x.abs()).sum::<f64>();
            }
        }
    }
    Ok(InfluenceTable::from_rows(
        rows,
        trace.result.final_embeddings().clone(),
    ))
}

/// Row `v` of `i1` by reverse-mode differentiation from each output channel of `v`.
fn exact_row(m: &GcnModel, trace: &Trace, v: NodeId) -> Vec<f64> {
    let n = trace.propagator.rows.len();
    let mut row = vec![0.0; n];
    for c in 0..m.embedding_dim() {
        let mut adj = Array2::zeros((n, m.embedding_dim()));
        adj[[v, c]] = 1.0;
        for (w, z) in m.layers().iter().zip(&trace.pre).rev() {
            adj.zip_mut_with(z, |a, &z| {
                if z <= 0.0 {
                    *a = 0.0;
                }
            });
            adj = trace.propagator.apply(&adj.dot(&w.t()));
        }
        for (u, r) in row.iter_mut().enumerate() {
            *r += adj.row(u).iter().map(|x| x.abs()).sum::<f64>();
        }
    }
    row
}

/// Row `v` of `N^k`, accumulated in increasing source order.
fn power_row(p: &Propagator, v: NodeId, k: usize) -> Vec<f64> {
    let n = p.rows.len();
    let mut x = vec![0.0; n];
    x[v] = 1.0;
    for _ in 0..k {
        let mut next = vec![0.0; n];
        for (a, &xa) in x.iter().enumerate() {
            if xa != 0.0 {
                for &(b, c) in &p.rows[a] {
                    next[b] += xa * c;
                }
            }
        }
        x = next;
    }
    x
}

fn node_seed(seed: u64, v: NodeId) -> u64 {
    seed ^ (v as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Row `v` of `N^k` estimated from walks on `D̂^{-1} Â`, using
/// `N^k[v][u] = sqrt(d̂_v / d̂_u) · (D̂^{-1} Â)^k[v][u]`.
fn sampled_row(p: &Propagator, v: NodeId, k: usize, walks: usize, seed: u64) -> Vec<f64> {
    let n = p.rows.len();
    let mut hits = vec![0usize; n];
    let mut rng = ChaCha8Rng::seed_from_u64(node_seed(seed, v));
    for _ in 0..walks {
        let mut at = v;
        for _ in 0..k {
            let row = &p.rows[at];
            at = row[rng.gen_range(0..row.len())].0;
        }
        hits[at] += 1;
    }
    let deg_v = p.rows[v].len() as f64;
    hits.iter()
        .enumerate()
        .map(|(u, &h)| {
            let deg_u = p.rows[u].len() as f64;
            (deg_v / deg_u).sqrt() * h as f64 / walks as f64
        })
        .collect()
}

fn rw_row(p: &Propagator, v: NodeId, k: usize, mode: RwMode) -> Vec<f64> {
    match mode {
        RwMode::Deterministic => power_row(p, v, k),
        RwMode::Sampled { walks, seed } => sampled_row(p, v, k, walks, seed),
    }
}

/// Influence from the ReLU-free propagation power `N^k`, where `k` is the model depth.
pub fn influence_rw(m: &GcnModel, g: &Graph, mode: RwMode) -> Result<InfluenceTable, ModelError> {
    if let RwMode::Sampled { walks, .. } = mode {
        assert!(walks > 0, "random-walk influence needs at least one walk");
    }
    let trace = forward_trace(m, g)?;
    let rows = (0..g.node_count())
        .map(|v| rw_row(&trace.propagator, v, m.depth(), mode))
        .collect();
    Ok(InfluenceTable::from_rows(
        rows,
        trace.result.final_embeddings().clone(),
    ))
}

fn rw_mode(cfg: &Config) -> Option<RwMode> {
    match cfg.influence_mode {
        InfluenceMode::Exact => None,
        InfluenceMode::Rw => Some(RwMode::Deterministic),
        InfluenceMode::RwSampled => Some(RwMode::Sampled {
            walks: cfg.rw_walks,
            seed: cfg.rw_seed,
        }),
    }
}

/// The influence table in the mode selected by `cfg`.
pub fn influence_table(m: &GcnModel, g: &Graph, cfg: &Config) -> Result<InfluenceTable, ModelError> {
    match rw_mode(cfg) {
        None => influence_exact(m, g),
        Some(mode) => influence_rw(m, g, mode),
    }
}

/// Extends `old`, the table of `g` without its last node, to a table for `g`.
///
/// Only targets within `depth + 1` hops of the new node can change; their
/// rows are recomputed and every other row keeps its values, gaining a zero
/// entry for the new source.
pub fn extend_influence(
    old: &InfluenceTable,
    m: &GcnModel,
    g: &Graph,
    cfg: &Config,
) -> Result<InfluenceTable, ModelError> {
    let n = g.node_count();
    assert_eq!(old.node_count() + 1, n, "exactly one node must have arrived");
    let new = n - 1;
    let trace = forward_trace(m, g)?;
    let mode = rw_mode(cfg);
    let mut affected = vec![false; n];
    for v in k_hop_nodes(g, new, m.depth() + 1) {
        affected[v] = true;
    }
    let rows = (0..n)
        .map(|v| {
            if affected[v] {
                match mode {
                    None => exact_row(m, &trace, v),
                    Some(mode) => rw_row(&trace.propagator, v, m.depth(), mode),
                }
            } else {
                let mut row = old.i1.row(v).to_vec();
                row.push(0.0);
                row
            }
        })
        .collect();
    Ok(InfluenceTable::from_rows(
        rows,
        trace.result.final_embeddings().clone(),
    ))
}
