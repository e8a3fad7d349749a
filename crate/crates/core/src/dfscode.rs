//! DFS codes, minimum DFS codes and gSpan-style frequent pattern mining.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::{GraphId, Labeled, NodeId, Pattern, TypeId};

/// One edge of a DFS code: discovery indices of its endpoints plus the
/// endpoint and edge types. `from < to` marks a forward (tree) edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DfsEdge {
    pub from: usize,
    pub to: usize,
    pub from_type: TypeId,
    pub edge_type: TypeId,
    pub to_type: TypeId,
}

impl DfsEdge {
    pub fn is_forward(&self) -> bool {
        self.from < self.to
    }

    fn labels(&self) -> (TypeId, TypeId, TypeId) {
        (self.from_type, self.edge_type, self.to_type)
    }
}

impl Ord for DfsEdge {
    /// The DFS lexicographic order on edges: position first, then types.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        let (a, b) = (self, other);
        let by_position = match (a.is_forward(), b.is_forward()) {
            (true, true) => b.to.cmp(&a.to).reverse().then(b.from.cmp(&a.from)),
            (false, false) => a.from.cmp(&b.from).then(a.to.cmp(&b.to)),
            (false, true) => {
                if a.from < b.to {
                    Less
                } else {
                    Greater
                }
            }
            (true, false) => {
                if a.to <= b.from {
                    Less
                } else {
                    Greater
                }
            }
        };
        by_position.then_with(|| a.labels().cmp(&b.labels()))
    }
}

impl PartialOrd for DfsEdge {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical form of a pattern: equal exactly for isomorphic patterns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CanonicalCode {
    Single(TypeId),
    Edges(Vec<DfsEdge>),
}

/// An embedding of a DFS code prefix: `vmap[i]` is the node at discovery index `i`.
#[derive(Debug, Clone)]
struct Embedding {
    graph: usize,
    vmap: Vec<NodeId>,
    used: BTreeSet<(NodeId, NodeId)>,
}

impl Embedding {
    fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.used.contains(&(a.min(b), a.max(b)))
    }

    fn extended(&self, e: &DfsEdge, a: NodeId, b: NodeId) -> Self {
        let mut next = self.clone();
        if e.is_forward() {
            next.vmap.push(b);
        }
        next.used.insert((a.min(b), a.max(b)));
        next
    }
}

/// Indices of the forward edges on the rightmost path, deepest first.
fn rightmost_path(code: &[DfsEdge]) -> Vec<usize> {
    let mut path = Vec::new();
    let mut target: Option<usize> = None;
    for (i, e) in code.iter().enumerate().rev() {
        if e.is_forward() && target.map_or(true, |t| e.to == t) {
            path.push(i);
            target = Some(e.from);
        }
    }
    path
}

fn node_count(code: &[DfsEdge]) -> usize {
    code.iter().map(|e| e.from.max(e.to) + 1).max().unwrap_or(0)
}

/// All rightmost extensions of `code` over `embeddings`, grouped by the new edge.
fn extensions<G: Labeled>(
    graphs: &[G],
    code: &[DfsEdge],
    embeddings: &[Embedding],
    allow_forward: bool,
) -> BTreeMap<DfsEdge, Vec<Embedding>> {
    let path = rightmost_path(code);
    let rightmost = code[path[0]].to;
    let min_type = code[0].from_type;
    let mut out: BTreeMap<DfsEdge, Vec<Embedding>> = BTreeMap::new();
    for emb in embeddings {
        let g = &graphs[emb.graph];
        let rm_node = emb.vmap[rightmost];
        for &i in path.iter().rev() {
            let target = code[i].from;
            let t_node = emb.vmap[target];
            if let Some(et) = g.edge_type(rm_node, t_node) {
                if !emb.has_edge(rm_node, t_node) {
                    let e = DfsEdge {
                        from: rightmost,
                        to: target,
                        from_type: g.node_type(rm_node),
                        edge_type: et,
                        to_type: g.node_type(t_node),
                    };
                    out.entry(e).or_default().push(emb.extended(&e, rm_node, t_node));
                }
            }
        }
        if !allow_forward {
            continue;
        }
        let sources = std::iter::once(rightmost).chain(path.iter().map(|&i| code[i].from));
        for from in sources {
            let f_node = emb.vmap[from];
            for &(w, et) in g.neighbors(f_node) {
                if emb.vmap.contains(&w) || g.node_type(w) < min_type {
                    continue;
                }
                let e = DfsEdge {
                    from,
                    to: rightmost + 1,
                    from_type: g.node_type(f_node),
                    edge_type: et,
                    to_type: g.node_type(w),
                };
                out.entry(e).or_default().push(emb.extended(&e, f_node, w));
            }
        }
    }
    out
}

fn first_edges<G: Labeled>(graphs: &[G]) -> BTreeMap<DfsEdge, Vec<Embedding>> {
    let mut out: BTreeMap<DfsEdge, Vec<Embedding>> = BTreeMap::new();
    for (gi, g) in graphs.iter().enumerate() {
        for u in 0..g.node_count() {
            for &(v, et) in g.neighbors(u) {
                if g.node_type(u) > g.node_type(v) {
                    continue;
                }
                let e = DfsEdge {
                    from: 0,
                    to: 1,
                    from_type: g.node_type(u),
                    edge_type: et,
                    to_type: g.node_type(v),
                };
                out.entry(e).or_default().push(Embedding {
                    graph: gi,
                    vmap: vec![u, v],
                    used: [(u.min(v), u.max(v))].into(),
                });
            }
        }
    }
    out
}

/// The minimum DFS code of a connected graph with at least one edge.
pub fn min_dfs_code<G: Labeled>(g: &G) -> Vec<DfsEdge> {
    let graphs = std::slice::from_ref(g);
    let total_edges = g.edge_count();
    let Some((first, mut embeddings)) = first_edges(graphs).into_iter().next() else {
        return Vec::new();
    };
    let mut code = vec![first];
    while code.len() < total_edges {
        let Some((e, next)) = extensions(graphs, &code, &embeddings, true).into_iter().next() else {
            break;
        };
        code.push(e);
        embeddings = next;
    }
    code
}

fn graph_of(code: &[DfsEdge]) -> Pattern {
    let n = node_count(code);
    let mut types = vec![0; n];
    for e in code {
        types[e.from] = e.from_type;
        types[e.to] = e.to_type;
    }
    Pattern::new(types, code.iter().map(|e| (e.from, e.to, e.edge_type)))
        .expect("a DFS code describes a connected graph")
}

/// Whether `code` is the minimum DFS code of the graph it describes.
pub fn is_min(code: &[DfsEdge]) -> bool {
    min_dfs_code(&graph_of(code)) == code
}

pub fn canonical_code(p: &Pattern) -> CanonicalCode {
    if p.node_count() == 1 {
        CanonicalCode::Single(p.node_type(0))
    } else {
        CanonicalCode::Edges(min_dfs_code(p))
    }
}

pub fn pattern_from_code(code: &CanonicalCode) -> Pattern {
    match code {
        CanonicalCode::Single(t) => Pattern::singleton(*t),
        CanonicalCode::Edges(edges) => graph_of(edges),
    }
}

/// A frequent connected pattern and the input graphs containing it.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedPattern {
    pub code: Vec<DfsEdge>,
    pub pattern: Pattern,
    /// Indices of the input graphs with at least one embedding, ascending.
    pub support: Vec<GraphId>,
}

/// Connected patterns with at least one edge, at most `max_nodes` nodes, and
/// occurring (as edge subgraphs) in at least `min_support` input graphs.
/// Each isomorphism class is reported once, in DFS-code search order.
pub fn mine_frequent<G: Labeled>(graphs: &[G], min_support: usize, max_nodes: usize) -> Vec<MinedPattern> {
    let mut out = Vec::new();
    if max_nodes < 2 {
        return out;
    }
    for (e, embs) in first_edges(graphs) {
        grow(graphs, vec![e], embs, min_support, max_nodes, &mut out);
    }
    out
}

fn support_of(embeddings: &[Embedding]) -> Vec<GraphId> {
    let set: BTreeSet<GraphId> = embeddings.iter().map(|e| e.graph).collect();
    set.into_iter().collect()
}

fn grow<G: Labeled>(
    graphs: &[G],
    code: Vec<DfsEdge>,
    embeddings: Vec<Embedding>,
    min_support: usize,
    max_nodes: usize,
    out: &mut Vec<MinedPattern>,
) {
    let support = support_of(&embeddings);
    if support.len() < min_support || !is_min(&code) {
        return;
    }
    let allow_forward = node_count(&code) < max_nodes;
    let ext = extensions(graphs, &code, &embeddings, allow_forward);
    out.push(MinedPattern {
        pattern: graph_of(&code),
        code: code.clone(),
        support,
    });
    for (e, embs) in ext {
        let mut next = code.clone();
        next.push(e);
        grow(graphs, next, embs, min_support, max_nodes, out);
    }
}
