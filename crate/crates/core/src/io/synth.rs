//! Synthetic datasets with planted ground truth.
//!
//! [`synth_motif_dataset`] attaches a house or a cycle motif to a
//! Barabási–Albert tree; [`standin_model`] is a hand-built GCN that labels a
//! graph by the motif key node it contains. [`keyed_instance`] draws small
//! random graphs and models of the same shape for exhaustive comparisons.

use ndarray::{Array1, Array2};
use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gnn::GcnModel;
use crate::graph::{ClassLabel, Graph, GraphDatabase, GraphId, NodeId, TypeId};

pub const BASE_TYPE: TypeId = 0;
pub const HOUSE_KEY_TYPE: TypeId = 1;
pub const HOUSE_TYPE: TypeId = 2;
pub const CYCLE_KEY_TYPE: TypeId = 3;
pub const CYCLE_TYPE: TypeId = 4;
pub const NUM_TYPES: usize = 5;

pub const HOUSE_CLASS: ClassLabel = 0;
pub const CYCLE_CLASS: ClassLabel = 1;
pub const BACKGROUND_CLASS: ClassLabel = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotifKind {
    House,
    Cycle,
}

impl MotifKind {
    pub fn class(self) -> ClassLabel {
        match self {
            MotifKind::House => HOUSE_CLASS,
            MotifKind::Cycle => CYCLE_CLASS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedMotif {
    pub graph: GraphId,
    pub kind: MotifKind,
    pub nodes: Vec<NodeId>,
    pub key: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub db: GraphDatabase,
    pub motifs: Vec<PlantedMotif>,
}

fn one_hot(t: TypeId) -> Vec<f64> {
    let mut f = vec![0.0; NUM_TYPES];
    f[t as usize] = 1.0;
    f
}

/// Preferential-attachment tree on `n` nodes.
fn ba_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(NodeId, NodeId)> {
    let mut edges = vec![(0, 1)];
    let mut ends = vec![0, 1];
    for v in 2..n {
        let u = *ends.choose(rng).expect("non-empty");
        edges.push((u, v));
        ends.extend([u, v]);
    }
    edges
}

/// `n_graphs` graphs, each a `base_nodes`-node preferential-attachment tree
/// with one motif attached by a single bridge edge. Even-numbered graphs get a
/// house (a square with a roof node), odd-numbered ones a 6-cycle; the
/// dataset label is the motif class. Every motif has exactly one key node
/// (the roof, or one cycle node); node features are one-hot node types.
///
/// # Panics
///
/// When `base_nodes < 5`.
pub fn synth_motif_dataset(n_graphs: usize, base_nodes: usize, seed: u64) -> SynthDataset {
    assert!(base_nodes >= 5, "base graphs need at least 5 nodes");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(n_graphs);
    let mut labels = Vec::with_capacity(n_graphs);
    let mut motifs = Vec::with_capacity(n_graphs);
    for id in 0..n_graphs {
        let kind = if id % 2 == 0 { MotifKind::House } else { MotifKind::Cycle };
        let mut g = Graph::new(NUM_TYPES);
        for _ in 0..base_nodes {
            g.add_node(BASE_TYPE, &one_hot(BASE_TYPE)).expect("dimension matches");
        }
        for (u, v) in ba_tree(base_nodes, &mut rng) {
            g.add_edge(u, v, 0).expect("tree edge");
        }
        let (types, edges, key, bridge): (Vec<TypeId>, Vec<(usize, usize)>, usize, usize) = match kind {
            MotifKind::House => (
                vec![HOUSE_TYPE, HOUSE_TYPE, HOUSE_TYPE, HOUSE_TYPE, HOUSE_KEY_TYPE],
                vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4)],
                4,
                2,
            ),
            MotifKind::Cycle => (
                vec![CYCLE_KEY_TYPE, CYCLE_TYPE, CYCLE_TYPE, CYCLE_TYPE, CYCLE_TYPE, CYCLE_TYPE],
                (0..6).map(|i| (i, (i + 1) % 6)).collect(),
                0,
                3,
            ),
        };
        let nodes: Vec<NodeId> = types
            .iter()
            .map(|&t| g.add_node(t, &one_hot(t)).expect("dimension matches"))
            .collect();
        for (a, b) in edges {
            g.add_edge(nodes[a], nodes[b], 0).expect("motif edge");
        }
        let anchor = rng.gen_range(0..base_nodes);
        g.add_edge(nodes[bridge], anchor, 0).expect("bridge edge");
        motifs.push(PlantedMotif {
            graph: id,
            kind,
            key: nodes[key],
            nodes,
        });
        graphs.push(g);
        labels.push(Some(kind.class() as i64));
    }
    SynthDataset {
        db: GraphDatabase::new(graphs, labels),
        motifs,
    }
}

/// Three-layer GCN over one-hot node types with three channels: house key
/// signal, cycle key signal and a constant. The head scores class 0 by the
/// house signal, class 1 by the cycle signal and class 2 by a small multiple
/// of the constant, so a graph is labelled by the key node it contains and
/// falls back to class 2 without one. The empty graph is class 2 as well.
pub fn standin_model() -> GcnModel {
    let alpha = 100.0;
    let beta = 0.01;
    let mut first = Array2::zeros((NUM_TYPES, 3));
    for t in 0..NUM_TYPES {
        first[[t, 2]] = 1.0;
    }
    first[[HOUSE_KEY_TYPE as usize, 0]] = 1.0;
    first[[CYCLE_KEY_TYPE as usize, 1]] = 1.0;
    let head = Array2::from_diag(&Array1::from(vec![alpha, alpha, beta]));
    GcnModel::new(
        vec![first, Array2::eye(3), Array2::eye(3)],
        head,
        Array1::from(vec![0.0, 0.0, 1e-3]),
    )
    .expect("well-formed stand-in model")
}

/// A random connected graph on `n` nodes with exactly one key node (type 1,
/// first feature 1) and a random GCN whose class 0 score follows a dedicated
/// key channel, so the explanation subgraphs for class 0 are exactly the node
/// sets containing the key. The remaining channels carry random weights and
/// shape influence and embeddings.
pub fn keyed_instance(n: usize, seed: u64) -> (Graph, GcnModel) {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = 3;
    let dim = 1 + hidden;
    let key = rng.gen_range(0..n);
    let mut g = Graph::new(dim);
    for v in 0..n {
        let mut f: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
        f[0] = if v == key { 1.0 } else { 0.0 };
        let t = if v == key { 1 } else { 2 * rng.gen_range(0..2) };
        g.add_node(t, &f).expect("dimension matches");
    }
    for v in 1..n {
        g.add_edge(rng.gen_range(0..v), v, 0).expect("tree edge");
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.15) {
                g.add_edge(u, v, 0).expect("same type");
            }
        }
    }
    let layers = (0..3)
        .map(|_| {
            let mut w = Array2::zeros((dim, dim));
            w[[0, 0]] = 1.0;
            for i in 1..dim {
                for j in 1..dim {
                    w[[i, j]] = rng.gen_range(-0.5..1.0);
                }
            }
            w
        })
        .collect();
    let mut head = Array2::zeros((dim, 2));
    head[[0, 0]] = 1e4;
    let m = GcnModel::new(layers, head, Array1::from(vec![0.0, 0.5])).expect("well-formed model");
    (g, m)
}
