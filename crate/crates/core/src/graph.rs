//! Typed, attributed, undirected graphs and connected query patterns.
//!
//! Node ids are dense (`0..n`). Adjacency lists are kept sorted by neighbor id
//! so every traversal in the crate visits nodes in a fixed order; floating
//! point reductions downstream depend on that.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NodeId = usize;
pub type TypeId = u32;
pub type GraphId = usize;
pub type ClassLabel = usize;
pub type NodeSet = BTreeSet<NodeId>;

/// Edge type used when a dataset carries no edge labels.
pub const UNTYPED_EDGE: TypeId = 0;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("node {node} out of range (graph has {len} nodes)")]
    NodeOutOfRange { node: NodeId, len: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge ({u}, {v}) already present with type {existing}, refusing type {requested}")]
    ConflictingEdgeType {
        u: NodeId,
        v: NodeId,
        existing: TypeId,
        requested: TypeId,
    },
    #[error("feature vector has dimension {got}, expected {expected}")]
    FeatureDim { expected: usize, got: usize },
    #[error("non-finite feature value on node {0}")]
    NonFiniteFeature(NodeId),
    #[error("pattern must have at least one node")]
    EmptyPattern,
    #[error("pattern is not connected")]
    DisconnectedPattern,
}

/// An undirected edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub edge_type: TypeId,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId, edge_type: TypeId) -> Self {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Edge { u, v, edge_type }
    }

    pub fn endpoints(&self) -> (NodeId, NodeId) {
        (self.u, self.v)
    }
}

/// Read access shared by [`Graph`] and [`Pattern`], used by the matcher.
pub trait Labeled {
    fn node_count(&self) -> usize;
    fn node_type(&self, v: NodeId) -> TypeId;
    /// Sorted `(neighbor, edge_type)` pairs.
    fn neighbors(&self, v: NodeId) -> &[(NodeId, TypeId)];

    fn edge_type(&self, u: NodeId, v: NodeId) -> Option<TypeId> {
        let adj = self.neighbors(u);
        adj.binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| adj[i].1)
    }

    fn degree(&self, v: NodeId) -> usize {
        self.neighbors(v).len()
    }

    fn edge_count(&self) -> usize {
        (0..self.node_count()).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    /// All edges, sorted by `(u, v)`.
    fn edge_list(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.node_count() {
            for &(v, t) in self.neighbors(u) {
                if u < v {
                    out.push(Edge { u, v, edge_type: t });
                }
            }
        }
        out
    }

    fn is_connected(&self) -> bool {
        let n = self.node_count();
        if n == 0 {
            return true;
        }
        component_of(self, 0).len() == n
    }
}

fn component_of<G: Labeled + ?Sized>(g: &G, start: NodeId) -> Vec<NodeId> {
    let mut seen = vec![false; g.node_count()];
    let mut out = vec![start];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &(w, _) in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Connected components of `g`, each sorted, ordered by smallest member.
pub fn connected_components<G: Labeled + ?Sized>(g: &G) -> Vec<Vec<NodeId>> {
    let n = g.node_count();
    let mut assigned = vec![false; n];
    let mut comps = Vec::new();
    for v in 0..n {
        if !assigned[v] {
            let comp = component_of(g, v);
            for &w in &comp {
                assigned[w] = true;
            }
            comps.push(comp);
        }
    }
    comps
}

/// Nodes within `hops` edges of `v` (including `v`), sorted.
pub fn k_hop_nodes<G: Labeled + ?Sized>(g: &G, v: NodeId, hops: usize) -> Vec<NodeId> {
    let mut dist = vec![usize::MAX; g.node_count()];
    dist[v] = 0;
    let mut queue = VecDeque::from([v]);
    let mut out = vec![v];
    while let Some(x) = queue.pop_front() {
        if dist[x] == hops {
            continue;
        }
        for &(w, _) in g.neighbors(x) {
            if dist[w] == usize::MAX {
                dist[w] = dist[x] + 1;
                out.push(w);
                queue.push_back(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// A typed, attributed, undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    feature_dim: usize,
    node_types: Vec<TypeId>,
    features: Vec<f64>,
    adjacency: Vec<Vec<(NodeId, TypeId)>>,
}

impl Graph {
    pub fn new(feature_dim: usize) -> Self {
        Graph {
            feature_dim,
            node_types: Vec::new(),
            features: Vec::new(),
            adjacency: Vec::new(),
        }
    }

    /// Builds a graph in one go. Duplicate edges (in either direction) are
    /// stored once.
    pub fn from_parts(
        feature_dim: usize,
        nodes: impl IntoIterator<Item = (TypeId, Vec<f64>)>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, TypeId)>,
    ) -> Result<Self, GraphError> {
        let mut g = Graph::new(feature_dim);
        for (t, x) in nodes {
            g.add_node(t, &x)?;
        }
        for (u, v, t) in edges {
            g.add_edge(u, v, t)?;
        }
        Ok(g)
    }

    pub fn add_node(&mut self, node_type: TypeId, features: &[f64]) -> Result<NodeId, GraphError> {
        if features.len() != self.feature_dim {
            return Err(GraphError::FeatureDim {
                expected: self.feature_dim,
                got: features.len(),
            });
        }
        let id = self.node_types.len();
        if features.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::NonFiniteFeature(id));
        }
        self.node_types.push(node_type);
        self.features.extend_from_slice(features);
        self.adjacency.push(Vec::new());
        Ok(id)
    }

    /// Adds an undirected edge. Returns `false` when the edge already exists
    /// with the same type.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId, edge_type: TypeId) -> Result<bool, GraphError> {
        let n = self.node_count();
        for x in [u, v] {
            if x >= n {
                return Err(GraphError::NodeOutOfRange { node: x, len: n });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        match self.adjacency[u].binary_search_by_key(&v, |&(w, _)| w) {
            Ok(i) => {
                let existing = self.adjacency[u][i].1;
                if existing == edge_type {
                    Ok(false)
                } else {
                    Err(GraphError::ConflictingEdgeType {
                        u,
                        v,
                        existing,
                        requested: edge_type,
                    })
                }
            }
            Err(i) => {
                self.adjacency[u].insert(i, (v, edge_type));
                let j = self.adjacency[v]
                    .binary_search_by_key(&u, |&(w, _)| w)
                    .unwrap_err();
                self.adjacency[v].insert(j, (u, edge_type));
                Ok(true)
            }
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn is_empty(&self) -> bool {
        self.node_types.is_empty()
    }

    pub fn features(&self, v: NodeId) -> &[f64] {
        &self.features[v * self.feature_dim..(v + 1) * self.feature_dim]
    }

    pub fn node_types(&self) -> &[TypeId] {
        &self.node_types
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count()
    }

    /// Node-induced subgraph on `nodes`; ids are re-densified in ascending
    /// order of the original ids. Ids outside the graph are ignored.
    pub fn induced_subgraph(&self, nodes: &NodeSet) -> InducedSubgraph {
        let original_ids: Vec<NodeId> = nodes
            .iter()
            .copied()
            .filter(|&v| v < self.node_count())
            .collect();
        let mut local = BTreeMap::new();
        let mut g = Graph::new(self.feature_dim);
        for (i, &v) in original_ids.iter().enumerate() {
            local.insert(v, i);
            g.node_types.push(self.node_types[v]);
            g.features.extend_from_slice(self.features(v));
            g.adjacency.push(Vec::new());
        }
        for (i, &v) in original_ids.iter().enumerate() {
            for &(w, t) in &self.adjacency[v] {
                if let Some(&j) = local.get(&w) {
                    // original ids are ascending, so local neighbor lists stay sorted
                    g.adjacency[i].push((j, t));
                }
            }
        }
        InducedSubgraph {
            graph: g,
            original_ids,
        }
    }

    /// The graph left after deleting `nodes` and their incident edges.
    pub fn remove_subgraph(&self, nodes: &NodeSet) -> InducedSubgraph {
        let rest: NodeSet = self.nodes().filter(|v| !nodes.contains(v)).collect();
        self.induced_subgraph(&rest)
    }
}

impl Labeled for Graph {
    fn node_count(&self) -> usize {
        self.node_types.len()
    }

    fn node_type(&self, v: NodeId) -> TypeId {
        self.node_types[v]
    }

    fn neighbors(&self, v: NodeId) -> &[(NodeId, TypeId)] {
        &self.adjacency[v]
    }
}

/// A node-induced subgraph together with the map back to its parent's ids.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedSubgraph {
    pub graph: Graph,
    /// `original_ids[local] = parent id`, ascending.
    pub original_ids: Vec<NodeId>,
}

impl InducedSubgraph {
    pub fn to_original(&self, local: NodeId) -> NodeId {
        self.original_ids[local]
    }

    pub fn to_local(&self, original: NodeId) -> Option<NodeId> {
        self.original_ids.binary_search(&original).ok()
    }
}

impl std::ops::Deref for InducedSubgraph {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        &self.graph
    }
}

/// A connected query graph with typed nodes and edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PatternRecord", into = "PatternRecord")]
pub struct Pattern {
    node_types: Vec<TypeId>,
    adjacency: Vec<Vec<(NodeId, TypeId)>>,
}

#[derive(Serialize, Deserialize)]
struct PatternRecord {
    node_types: Vec<TypeId>,
    edges: Vec<(NodeId, NodeId, TypeId)>,
}

impl TryFrom<PatternRecord> for Pattern {
    type Error = GraphError;

    fn try_from(r: PatternRecord) -> Result<Self, GraphError> {
        Pattern::new(r.node_types, r.edges)
    }
}

impl From<Pattern> for PatternRecord {
    fn from(p: Pattern) -> Self {
        PatternRecord {
            edges: p
                .edge_list()
                .into_iter()
                .map(|e| (e.u, e.v, e.edge_type))
                .collect(),
            node_types: p.node_types,
        }
    }
}

impl Pattern {
    pub fn new(
        node_types: Vec<TypeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, TypeId)>,
    ) -> Result<Self, GraphError> {
        let p = Self::unchecked(node_types, edges)?;
        if p.node_types.is_empty() {
            return Err(GraphError::EmptyPattern);
        }
        if !p.is_connected() {
            return Err(GraphError::DisconnectedPattern);
        }
        Ok(p)
    }

    fn unchecked(
        node_types: Vec<TypeId>,
        edges: impl IntoIterator<Item = (NodeId, NodeId, TypeId)>,
    ) -> Result<Self, GraphError> {
        let n = node_types.len();
        let mut adjacency = vec![Vec::new(); n];
        for (u, v, t) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(GraphError::NodeOutOfRange { node: x, len: n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            match adjacency[u].binary_search_by_key(&v, |&(w, _): &(NodeId, TypeId)| w) {
                Ok(i) => {
                    let existing = adjacency[u][i].1;
                    if existing != t {
                        return Err(GraphError::ConflictingEdgeType {
                            u,
                            v,
                            existing,
                            requested: t,
                        });
                    }
                }
                Err(i) => {
                    adjacency[u].insert(i, (v, t));
                    let j = adjacency[v]
                        .binary_search_by_key(&u, |&(w, _): &(NodeId, TypeId)| w)
                        .unwrap_err();
                    adjacency[v].insert(j, (u, t));
                }
            }
        }
        Ok(Pattern {
            node_types,
            adjacency,
        })
    }

    pub fn singleton(node_type: TypeId) -> Self {
        Pattern {
            node_types: vec![node_type],
            adjacency: vec![Vec::new()],
        }
    }

    /// The structure of `g` (types only) as a pattern; fails if `g` is empty
    /// or disconnected.
    pub fn from_graph<G: Labeled + ?Sized>(g: &G) -> Result<Self, GraphError> {
        let types = (0..g.node_count()).map(|v| g.node_type(v)).collect();
        let edges = g.edge_list().into_iter().map(|e| (e.u, e.v, e.edge_type));
        Pattern::new(types, edges)
    }

    pub fn node_types(&self) -> &[TypeId] {
        &self.node_types
    }

    /// Size in the compression sense: nodes plus edges.
    pub fn size(&self) -> usize {
        self.node_count() + self.edge_count()
    }
}

impl Labeled for Pattern {
    fn node_count(&self) -> usize {
        self.node_types.len()
    }

    fn node_type(&self, v: NodeId) -> TypeId {
        self.node_types[v]
    }

    fn neighbors(&self, v: NodeId) -> &[(NodeId, TypeId)] {
        &self.adjacency[v]
    }
}

/// A set of graphs, plus the class label each one was assigned by a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GraphDatabase {
    pub graphs: Vec<Graph>,
    /// Labels shipped with the dataset (ground truth), if any.
    pub dataset_labels: Vec<Option<i64>>,
    assigned: Vec<Option<ClassLabel>>,
    groups: BTreeMap<ClassLabel, Vec<GraphId>>,
}

impl GraphDatabase {
    pub fn new(graphs: Vec<Graph>, dataset_labels: Vec<Option<i64>>) -> Self {
        assert_eq!(graphs.len(), dataset_labels.len());
        let n = graphs.len();
        GraphDatabase {
            graphs,
            dataset_labels,
            assigned: vec![None; n],
            groups: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graph(&self, id: GraphId) -> &Graph {
        &self.graphs[id]
    }

    pub fn assign_label(&mut self, id: GraphId, label: ClassLabel) {
        if let Some(old) = self.assigned[id].replace(label) {
            if let Some(group) = self.groups.get_mut(&old) {
                group.retain(|&g| g != id);
                if group.is_empty() {
                    self.groups.remove(&old);
                }
            }
        }
        let group = self.groups.entry(label).or_default();
        let pos = group.binary_search(&id).unwrap_or_else(|p| p);
        group.insert(pos, id);
    }

    pub fn assigned_label(&self, id: GraphId) -> Option<ClassLabel> {
        self.assigned[id]
    }

    /// Graph ids assigned `label`, ascending.
    pub fn label_group(&self, label: ClassLabel) -> &[GraphId] {
        self.groups.get(&label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn labels(&self) -> impl Iterator<Item = ClassLabel> + '_ {
        self.groups.keys().copied()
    }
}
