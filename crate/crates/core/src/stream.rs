//! Single-pass maintenance of an explanation subgraph and its patterns while
//! the nodes of a graph arrive one at a time.
//!
//! Each arriving node brings its edges to nodes seen before it. The state
//! keeps a bounded node cache (the explanation nodes), a reservoir of every
//! node seen, and a pattern cache that covers the cached nodes after each step.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{Config, Coverage};
use crate::dfscode::{canonical_code, CanonicalCode};
use crate::explain::ExplanationSubgraph;
use crate::gnn::{forward, is_explanation, GcnModel, ModelError};
use crate::graph::{
    k_hop_nodes, ClassLabel, Graph, GraphDatabase, GraphError, GraphId, Labeled,
    NodeId, NodeSet, Pattern, TypeId,
};
use crate::influence::{extend_influence, influence_table, InfluenceTable};
use crate::matching::covers;
use crate::scoring::{Objective, ScoreState};
use crate::summarize::{edge_weight, ExplanationView};

#[derive(Debug, Error, PartialEq)]
pub enum StreamError {
    #[error("node {0} has already arrived")]
    DuplicateNode(NodeId),
    #[error("node {node} refers to neighbor {neighbor}, which has not arrived yet")]
    UnseenNeighbor { node: NodeId, neighbor: NodeId },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// What a single arrival did to the node cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// Adding the node would not give an explanation subgraph.
    NotExtendable,
    /// The cache had room and the node was added.
    Inserted,
    /// The cache was full and the node is already covered or brings no new pattern.
    Skipped,
    /// The node replaced the cached node with the smallest loss.
    Swapped { evicted: NodeId },
    /// The cache was full and the replacement gain was too small.
    Kept,
}

#[derive(Debug, Clone, PartialEq)]
struct CachedPattern {
    pattern: Pattern,
    code: CanonicalCode,
    weight: f64,
}

/// Streaming state for one graph and one label. Node ids given to and
/// returned from the state are the caller's ids; internally nodes are
/// numbered by arrival.
#[derive(Debug, Clone)]
pub struct StreamState {
    label: ClassLabel,
    prefix: Graph,
    original: Vec<NodeId>,
    local: BTreeMap<NodeId, NodeId>,
    table: Option<InfluenceTable>,
    cache: NodeSet,
    reservoir: NodeSet,
    patterns: Vec<CachedPattern>,
}

/// The anytime result of a stream: explanation nodes plus the patterns covering them.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamView {
    /// Explanation nodes, in the caller's ids.
    pub nodes: NodeSet,
    pub patterns: Vec<Pattern>,
}

impl StreamState {
    pub fn new(feature_dim: usize, label: ClassLabel) -> Self {
        StreamState {
            label,
            prefix: Graph::new(feature_dim),
            original: Vec::new(),
            local: BTreeMap::new(),
            table: None,
            cache: NodeSet::new(),
            reservoir: NodeSet::new(),
            patterns: Vec::new(),
        }
    }

    /// The graph induced by the nodes seen so far, in arrival order.
    pub fn prefix(&self) -> &Graph {
        &self.prefix
    }

    /// Caller id of each prefix node.
    pub fn original_ids(&self) -> &[NodeId] {
        &self.original
    }

    /// Cached explanation nodes, in the caller's ids.
    pub fn cached_nodes(&self) -> NodeSet {
        self.to_original(&self.cache)
    }

    pub fn reservoir(&self) -> NodeSet {
        self.to_original(&self.reservoir)
    }

    pub fn patterns(&self) -> Vec<Pattern> {
        self.patterns.iter().map(|c| c.pattern.clone()).collect()
    }

    pub fn influence(&self) -> Option<&InfluenceTable> {
        self.table.as_ref()
    }

    fn to_original(&self, nodes: &NodeSet) -> NodeSet {
        nodes.iter().map(|&v| self.original[v]).collect()
    }

    /// Processes one arriving node with its edges to already-seen nodes.
    pub fn step(
        &mut self,
        m: &GcnModel,
        cfg: &Config,
        id: NodeId,
        node_type: TypeId,
        features: &[f64],
        edges: &[(NodeId, TypeId)],
    ) -> Result<StepOutcome, StreamError> {
        if self.local.contains_key(&id) {
            return Err(StreamError::DuplicateNode(id));
        }
        let mut local_edges = Vec::with_capacity(edges.len());
        for &(w, t) in edges {
            let &lw = self.local.get(&w).ok_or(StreamError::UnseenNeighbor {
                node: id,
                neighbor: w,
            })?;
            local_edges.push((lw, t));
        }
        let v = self.prefix.add_node(node_type, features)?;
        for (lw, t) in local_edges {
            self.prefix.add_edge(lw, v, t)?;
        }
        self.original.push(id);
        self.local.insert(id, v);
        self.table = Some(match &self.table {
            None => influence_table(m, &self.prefix, cfg)?,
            Some(old) => extend_influence(old, m, &self.prefix, cfg)?,
        });
        self.reservoir.insert(v);

        let mut grown = self.cache.clone();
        grown.insert(v);
        if !is_explanation(m, &self.prefix, &grown, self.label) {
            return Ok(StepOutcome::NotExtendable);
        }
        let outcome = self.update_cache(m, cfg, v);
        if self.cache.contains(&v) {
            self.update_patterns(cfg);
        }
        Ok(outcome)
    }

    fn objective(&self, cfg: &Config) -> Objective {
        Objective::new(self.table.as_ref().expect("a node has arrived"), cfg)
    }

    fn update_cache(&mut self, m: &GcnModel, cfg: &Config, v: NodeId) -> StepOutcome {
        let window = cfg.coverage_for(self.label);
        if self.cache.len() < window.upper {
            self.cache.insert(v);
            return StepOutcome::Inserted;
        }
        if self.covers_node(cfg, v) || !self.brings_new_pattern(cfg, v) {
            return StepOutcome::Skipped;
        }
        let obj = self.objective(cfg);
        let st = obj.state_of(&self.cache);
        let score = |(i, d): (usize, usize)| i as f64 + obj.gamma() * d as f64;
        let mut evictee: Option<(NodeId, f64)> = None;
        for &c in &self.cache {
            let loss = score(st.loss_counts(&obj, c));
            if evictee.map_or(true, |(_, l)| loss < l) {
                evictee = Some((c, loss));
            }
        }
        let Some((out, _)) = evictee else {
            return StepOutcome::Kept;
        };
        let mut rest = st.clone();
        rest.remove(&obj, out);
        let gain_new = score(rest.gain_counts(&obj, v));
        let gain_old = score(rest.gain_counts(&obj, out));
        let mut swapped: NodeSet = rest.members().clone();
        swapped.insert(v);
        if gain_new >= 2.0 * gain_old && is_explanation(m, &self.prefix, &swapped, self.label) {
            self.cache = swapped;
            self.reservoir.insert(out);
            StepOutcome::Swapped { evicted: self.original[out] }
        } else {
            StepOutcome::Kept
        }
    }

    fn neighborhood(&self, cfg: &Config, v: NodeId) -> crate::graph::InducedSubgraph {
        let hood: NodeSet = k_hop_nodes(&self.prefix, v, cfg.stream_hop_radius())
            .into_iter()
            .collect();
        self.prefix.induced_subgraph(&hood)
    }

    /// Whether some cached pattern has a match through `v` in its hop neighborhood.
    fn covers_node(&self, cfg: &Config, v: NodeId) -> bool {
        let hood = self.neighborhood(cfg, v);
        let target: NodeSet = hood.to_local(v).into_iter().collect();
        let patterns: Vec<Pattern> = self.patterns();
        !covers(&patterns, &hood.graph, &target).0.is_empty()
    }

    /// Whether some connected induced subgraph of `v`'s hop neighborhood that
    /// contains `v` and respects the pattern size cap is not yet cached.
    fn brings_new_pattern(&self, cfg: &Config, v: NodeId) -> bool {
        let hood = self.neighborhood(cfg, v);
        let root = hood.to_local(v).expect("v lies in its own neighborhood");
        let known: BTreeSet<&CanonicalCode> = self.patterns.iter().map(|c| &c.code).collect();
        let mut found = false;
        let mut chosen = vec![root];
        let mut banned = BTreeSet::from([root]);
        grow_subsets(&hood.graph, &mut chosen, &mut banned, cfg.pattern_max_nodes, &mut |nodes| {
            let p = Pattern::from_graph(&hood.graph.induced_subgraph(&nodes.iter().copied().collect()).graph)
                .expect("grown subsets are connected");
            if !known.contains(&canonical_code(&p)) {
                found = true;
            }
            found
        });
        found
    }

    /// Keeps the pattern cache covering every cached node: reuses cached
    /// patterns that match inside the explanation subgraph, turns the
    /// uncovered remainder into new connected patterns, refreshes weights and
    /// evicts unused patterns with the largest weight while over capacity.
    fn update_patterns(&mut self, cfg: &Config) {
        let sub = self.prefix.induced_subgraph(&self.cache);
        let all: NodeSet = sub.nodes().collect();
        let mut covered = NodeSet::new();
        let mut used = vec![false; self.patterns.len()];
        for (i, c) in self.patterns.iter().enumerate() {
            let (n, _) = covers(std::slice::from_ref(&c.pattern), &sub.graph, &all);
            if !n.is_empty() {
                used[i] = true;
                covered.extend(n);
            }
        }
        let rest: NodeSet = all.difference(&covered).copied().collect();
        let mut fresh: Vec<CachedPattern> = Vec::new();
        if !rest.is_empty() {
            for piece in connected_pieces(&sub.graph, &rest, cfg.pattern_max_nodes) {
                let p = Pattern::from_graph(&sub.graph.induced_subgraph(&piece).graph)
                    .expect("pieces are connected");
                let code = canonical_code(&p);
                if !fresh.iter().any(|c| c.code == code) {
                    fresh.push(CachedPattern {
                        pattern: p,
                        code,
                        weight: 0.0,
                    });
                }
            }
        }
        used.extend(std::iter::repeat(true).take(fresh.len()));
        self.patterns.extend(fresh);

        let total = sub.edge_count();
        for c in &mut self.patterns {
            let (_, e) = covers(std::slice::from_ref(&c.pattern), &sub.graph, &all);
            c.weight = edge_weight(e.len(), total);
        }
        while self.patterns.len() > cfg.pattern_cache_capacity {
            let victim = (0..self.patterns.len())
                .filter(|&i| !used[i])
                .max_by(|&a, &b| {
                    self.patterns[a]
                        .weight
                        .total_cmp(&self.patterns[b].weight)
                        .then(self.patterns[b].code.cmp(&self.patterns[a].code))
                });
            let Some(i) = victim else { break };
            self.patterns.remove(i);
            used.remove(i);
        }
    }

    /// The current view: completes the node cache to the lower bound from the
    /// reservoir, checks that it is an explanation subgraph, refreshes the
    /// patterns and keeps only those matching the explanation subgraph.
    /// Leaves `self` untouched.
    pub fn view(&self, m: &GcnModel, cfg: &Config) -> Option<StreamView> {
        let mut st = self.clone();
        st.complete(m, cfg)
    }

    /// Consumes the state and returns the final view.
    pub fn finish(mut self, m: &GcnModel, cfg: &Config) -> Option<StreamView> {
        self.complete(m, cfg)
    }

    fn complete(&mut self, m: &GcnModel, cfg: &Config) -> Option<StreamView> {
        self.table.as_ref()?;
        let window: Coverage = cfg.coverage_for(self.label);
        let obj = self.objective(cfg);
        let mut st: ScoreState = obj.state_of(&self.cache);
        while st.members().len() < window.lower {
            let mut best: Option<(NodeId, f64)> = None;
            for &v in &self.reservoir {
                if !crate::explain::can_extend(m, &self.prefix, st.members(), v, self.label, window) {
                    continue;
                }
                let (i, d) = st.gain_counts(&obj, v);
                let gain = i as f64 + obj.gamma() * d as f64;
                if best.map_or(true, |(_, b)| gain > b) {
                    best = Some((v, gain));
                }
            }
            let (v, _) = best?;
            st.insert(&obj, v);
        }
        self.cache = st.members().clone();
        if self.cache.is_empty()
            || self.cache.len() > window.upper
            || !is_explanation(m, &self.prefix, &self.cache, self.label)
        {
            return None;
        }
        self.update_patterns(cfg);
        let sub = self.prefix.induced_subgraph(&self.cache);
        let patterns = self
            .patterns
            .iter()
            .filter(|c| crate::matching::has_match(&c.pattern, &sub.graph))
            .map(|c| c.pattern.clone())
            .collect();
        Some(StreamView {
            nodes: self.to_original(&self.cache),
            patterns,
        })
    }
}

/// Enumerates connected node sets grown from `chosen` by adding neighbors,
/// each set once, up to `cap` nodes. Stops when `visit` returns true.
fn grow_subsets<G: Labeled>(
    g: &G,
    chosen: &mut Vec<NodeId>,
    banned: &mut BTreeSet<NodeId>,
    cap: usize,
    visit: &mut dyn FnMut(&[NodeId]) -> bool,
) -> bool {
    if visit(chosen) {
        return true;
    }
    if chosen.len() >= cap {
        return false;
    }
    let frontier: BTreeSet<NodeId> = chosen
        .iter()
        .flat_map(|&c| g.neighbors(c).iter().map(|&(w, _)| w))
        .filter(|w| !banned.contains(w))
        .collect();
    let mut newly_banned = Vec::new();
    for w in frontier {
        chosen.push(w);
        banned.insert(w);
        let stop = grow_subsets(g, chosen, banned, cap, visit);
        chosen.pop();
        if stop {
            banned.remove(&w);
            for x in newly_banned {
                banned.remove(&x);
            }
            return true;
        }
        // later branches must not contain w, so every set is produced once
        newly_banned.push(w);
    }
    for x in newly_banned {
        banned.remove(&x);
    }
    false
}

/// Connected components of the subgraph of `g` induced by `nodes`.
fn components_within<G: Labeled>(g: &G, nodes: &NodeSet) -> Vec<NodeSet> {
    let mut seen = NodeSet::new();
    let mut out = Vec::new();
    for &s in nodes {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = NodeSet::new();
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            comp.insert(x);
            for &(w, _) in g.neighbors(x) {
                if nodes.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Splits `nodes` into connected pieces of at most `cap` nodes. Oversized
/// components lose a breadth-first piece grown from their smallest node and
/// the rest is split again.
fn connected_pieces<G: Labeled>(g: &G, nodes: &NodeSet, cap: usize) -> Vec<NodeSet> {
    let mut out = Vec::new();
    for comp in components_within(g, nodes) {
        if comp.len() <= cap {
            out.push(comp);
            continue;
        }
        let start = *comp.iter().next().unwrap();
        let mut piece = NodeSet::from([start]);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &(w, _) in g.neighbors(x) {
                if piece.len() < cap && comp.contains(&w) && piece.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        let rest: NodeSet = comp.difference(&piece).copied().collect();
        out.push(piece);
        out.extend(connected_pieces(g, &rest, cap));
    }
    out
}

/// Streams the nodes of `g` in `order` (ascending ids when `None`).
pub fn stream_graph(
    m: &GcnModel,
    g: &Graph,
    cfg: &Config,
    label: ClassLabel,
    order: Option<&[NodeId]>,
) -> Result<Option<StreamView>, StreamError> {
    let default: Vec<NodeId> = g.nodes().collect();
    let order = order.unwrap_or(&default);
    let mut st = StreamState::new(g.feature_dim(), label);
    let mut seen = vec![false; g.node_count()];
    for &v in order {
        let edges: Vec<(NodeId, TypeId)> = g
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&(w, _)| seen[w])
            .collect();
        st.step(m, cfg, v, g.node_type(v), g.features(v), &edges)?;
        seen[v] = true;
    }
    Ok(st.finish(m, cfg))
}

/// A streamed explanation view for one label, plus the graphs left unexplained.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamedView {
    pub view: ExplanationView,
    pub unexplained: Vec<GraphId>,
}

/// Streams every graph of each requested label group in parallel and merges
/// the per-graph patterns, dropping duplicates by canonical code.
pub fn stream_database(
    db: &GraphDatabase,
    m: &GcnModel,
    cfg: &Config,
    labels: &[ClassLabel],
) -> Result<BTreeMap<ClassLabel, StreamedView>, StreamError> {
    let mut out = BTreeMap::new();
    for &label in labels {
        let results: Vec<(GraphId, Option<StreamView>)> = db
            .label_group(label)
            .par_iter()
            .map(|&id| {
                let g = db.graph(id);
                let actual = forward(m, g)?.label;
                if actual != label {
                    return Ok((id, None));
                }
                Ok((id, stream_graph(m, g, cfg, label, None)?))
            })
            .collect::<Result<_, StreamError>>()?;
        let mut subgraphs = Vec::new();
        let mut unexplained = Vec::new();
        let mut patterns: BTreeMap<CanonicalCode, Pattern> = BTreeMap::new();
        let mut order: Vec<CanonicalCode> = Vec::new();
        for (id, result) in results {
            match result {
                Some(sv) => {
                    for p in sv.patterns {
                        let code = canonical_code(&p);
                        if !patterns.contains_key(&code) {
                            order.push(code.clone());
                            patterns.insert(code, p);
                        }
                    }
                    subgraphs.push(ExplanationSubgraph::new(id, label, db.graph(id), sv.nodes));
                }
                None => unexplained.push(id),
            }
        }
        let patterns = order.into_iter().map(|c| patterns.remove(&c).unwrap()).collect();
        out.insert(
            label,
            StreamedView {
                view: ExplanationView::new(label, patterns, subgraphs),
                unexplained,
            },
        );
    }
    Ok(out)
}
