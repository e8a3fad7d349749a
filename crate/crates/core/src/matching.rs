//! Node-induced subgraph isomorphism by VF2-style backtracking.
//!
//! A matching `h` maps every pattern node to a distinct target node such that
//! node types agree and, for every pair of pattern nodes, the target pair is
//! adjacent exactly when the pattern pair is, with equal edge types.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crate::graph::{Edge, Labeled, NodeId, NodeSet};

/// An injective map from pattern nodes to target nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matching {
    /// `map[pattern_node] = target_node`.
    pub map: Vec<NodeId>,
}

impl Matching {
    pub fn image(&self) -> NodeSet {
        self.map.iter().copied().collect()
    }
}

struct Plan {
    order: Vec<NodeId>,
    /// For each position, an already-placed pattern neighbor to seed candidates.
    parent: Vec<Option<NodeId>>,
}

fn plan<P: Labeled + ?Sized>(p: &P) -> Plan {
    let n = p.node_count();
    let mut placed = vec![false; n];
    let mut links = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    let mut parent = Vec::with_capacity(n);
    for _ in 0..n {
        // most links to placed nodes, then highest degree, then lowest id
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by(|&a, &b| {
                (links[a], p.degree(a), std::cmp::Reverse(a))
                    .cmp(&(links[b], p.degree(b), std::cmp::Reverse(b)))
            })
            .expect("unplaced node exists");
        parent.push(
            p.neighbors(next)
                .iter()
                .map(|&(w, _)| w)
                .find(|&w| placed[w]),
        );
        placed[next] = true;
        order.push(next);
        for &(w, _) in p.neighbors(next) {
            links[w] += 1;
        }
    }
    Plan { order, parent }
}

/// Calls `visit` on every node-induced matching of `p` in `g`, in search
/// order, until it returns `Break`.
pub fn for_each_match<P, G, F>(p: &P, g: &G, mut visit: F)
where
    P: Labeled + ?Sized,
    G: Labeled + ?Sized,
    F: FnMut(&[NodeId]) -> ControlFlow<()>,
{
    let k = p.node_count();
    if k == 0 || k > g.node_count() {
        return;
    }
    let plan = plan(p);
    let mut map = vec![usize::MAX; k];
    let mut used = vec![false; g.node_count()];
    let _ = extend(p, g, &plan, 0, &mut map, &mut used, &mut visit);
}

fn extend<P, G, F>(
    p: &P,
    g: &G,
    plan: &Plan,
    depth: usize,
    map: &mut [NodeId],
    used: &mut [bool],
    visit: &mut F,
) -> ControlFlow<()>
where
    P: Labeled + ?Sized,
    G: Labeled + ?Sized,
    F: FnMut(&[NodeId]) -> ControlFlow<()>,
{
    if depth == plan.order.len() {
        return visit(map);
    }
    let pn = plan.order[depth];
    let ptype = p.node_type(pn);
    let pdeg = p.degree(pn);
    let candidates: Box<dyn Iterator<Item = NodeId> + '_> = match plan.parent[depth] {
        Some(q) => Box::new(g.neighbors(map[q]).iter().map(|&(w, _)| w)),
        None => Box::new(0..g.node_count()),
    };
    for c in candidates {
        if used[c] || g.node_type(c) != ptype || g.degree(c) < pdeg {
            continue;
        }
        let consistent = plan.order[..depth]
            .iter()
            .all(|&q| p.edge_type(pn, q) == g.edge_type(c, map[q]));
        if !consistent {
            continue;
        }
        map[pn] = c;
        used[c] = true;
        let flow = extend(p, g, plan, depth + 1, map, used, visit);
        used[c] = false;
        map[pn] = usize::MAX;
        flow?;
    }
    ControlFlow::Continue(())
}

/// All node-induced matchings of `p` in `g`, sorted lexicographically by the
/// mapped node tuple.
pub fn match_pattern<P, G>(p: &P, g: &G) -> Vec<Matching>
where
    P: Labeled + ?Sized,
    G: Labeled + ?Sized,
{
    let mut out = Vec::new();
    for_each_match(p, g, |m| {
        out.push(Matching { map: m.to_vec() });
        ControlFlow::Continue(())
    });
    out.sort();
    out
}

/// True when `p` has at least one node-induced matching in `g`.
pub fn has_match<P, G>(p: &P, g: &G) -> bool
where
    P: Labeled + ?Sized,
    G: Labeled + ?Sized,
{
    let mut found = false;
    for_each_match(p, g, |_| {
        found = true;
        ControlFlow::Break(())
    });
    found
}

/// True when `a` and `b` are isomorphic as typed graphs.
pub fn isomorphic<A, B>(a: &A, b: &B) -> bool
where
    A: Labeled + ?Sized,
    B: Labeled + ?Sized,
{
    a.node_count() == b.node_count() && a.edge_count() == b.edge_count() && has_match(a, b)
}

/// Nodes and edges of `targets` hit by some matching of some pattern in `g`.
/// An edge counts when it is the image of a pattern edge and both endpoints
/// are targets.
pub fn covers<P, G>(patterns: &[P], g: &G, targets: &NodeSet) -> (NodeSet, BTreeSet<Edge>)
where
    P: Labeled,
    G: Labeled + ?Sized,
{
    let mut nodes = NodeSet::new();
    let mut edges = BTreeSet::new();
    for p in patterns {
        let pedges = p.edge_list();
        for_each_match(p, g, |m| {
            nodes.extend(m.iter().copied().filter(|v| targets.contains(v)));
            for e in &pedges {
                let (a, b) = (m[e.u], m[e.v]);
                if targets.contains(&a) && targets.contains(&b) {
                    edges.insert(Edge::new(a, b, e.edge_type));
                }
            }
            ControlFlow::Continue(())
        });
    }
    (nodes, edges)
}
