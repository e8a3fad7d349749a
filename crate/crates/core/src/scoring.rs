//! The explainability objective of a node set.
//!
//! For one graph with `n` nodes, `f(S) = (I(S) + γ·D(S)) / n` where `I(S)`
//! counts nodes influenced above `θ` by some member of `S`, and `D(S)` counts
//! nodes lying within embedding distance `r` of some influenced node.

use crate::config::Config;
use crate::graph::{NodeId, NodeSet};
use crate::influence::InfluenceTable;

/// Precomputed influence sets and embedding balls for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    /// `influence_sets[u]`: nodes `v` with `i2[u][v] ≥ θ`.
    influence_sets: Vec<Vec<NodeId>>,
    /// `balls[v]`: nodes within distance `r` of `v` in normalized embedding space.
    balls: Vec<Vec<NodeId>>,
    gamma: f64,
}

fn normalized_rows(t: &InfluenceTable) -> Vec<Vec<f64>> {
    t.embeddings
        .rows()
        .into_iter()
        .map(|row| {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter().map(|x| x / norm).collect()
            } else {
                vec![0.0; row.len()]
            }
        })
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl Objective {
    pub fn new(t: &InfluenceTable, cfg: &Config) -> Self {
        Self::with_params(t, cfg.theta, cfg.r, cfg.gamma)
    }

    pub fn with_params(t: &InfluenceTable, theta: f64, r: f64, gamma: f64) -> Self {
        let n = t.node_count();
        let influence_sets = (0..n)
            .map(|u| (0..n).filter(|&v| t.i2[[u, v]] >= theta).collect())
            .collect();
        let unit = normalized_rows(t);
        let balls = (0..n)
            .map(|v| (0..n).filter(|&w| distance(&unit[v], &unit[w]) <= r).collect())
            .collect();
        Objective {
            influence_sets,
            balls,
            gamma,
        }
    }

    pub fn node_count(&self) -> usize {
        self.influence_sets.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn influence_set(&self, u: NodeId) -> &[NodeId] {
        &self.influence_sets[u]
    }

    pub fn ball(&self, v: NodeId) -> &[NodeId] {
        &self.balls[v]
    }

    /// Nodes influenced by some member of `nodes`.
    pub fn influenced(&self, nodes: &NodeSet) -> NodeSet {
        nodes
            .iter()
            .flat_map(|&u| self.influence_sets[u].iter().copied())
            .collect()
    }

    /// Union of the balls around nodes influenced by `nodes`.
    pub fn diverse(&self, nodes: &NodeSet) -> NodeSet {
        self.influenced(nodes)
            .iter()
            .flat_map(|&v| self.balls[v].iter().copied())
            .collect()
    }

    /// `I + γ·D` divided by the node count, computed from scratch.
    pub fn value(&self, nodes: &NodeSet) -> f64 {
        self.scaled(self.influenced(nodes).len(), self.diverse(nodes).len())
    }

    fn scaled(&self, influence: usize, diversity: usize) -> f64 {
        let n = self.node_count();
        if n == 0 {
            return 0.0;
        }
        (influence as f64 + self.gamma * diversity as f64) / n as f64
    }

    pub fn state(&self) -> ScoreState {
        ScoreState {
            members: NodeSet::new(),
            inf_count: vec![0; self.node_count()],
            div_count: vec![0; self.node_count()],
            influence: 0,
            diversity: 0,
        }
    }

    pub fn state_of(&self, nodes: &NodeSet) -> ScoreState {
        let mut st = self.state();
        for &u in nodes {
            st.insert(self, u);
        }
        st
    }
}

/// Incrementally maintained influence and diversity counts for a node set.
///
/// `inf_count[v]` is the number of members influencing `v`; `div_count[w]`
/// the number of influenced nodes whose ball contains `w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreState {
    members: NodeSet,
    inf_count: Vec<u32>,
    div_count: Vec<u32>,
    influence: usize,
    diversity: usize,
}

impl ScoreState {
    pub fn members(&self) -> &NodeSet {
        &self.members
    }

    pub fn influence(&self) -> usize {
        self.influence
    }

    pub fn diversity(&self) -> usize {
        self.diversity
    }

    pub fn value(&self, obj: &Objective) -> f64 {
        obj.scaled(self.influence, self.diversity)
    }

    pub fn influenced(&self) -> NodeSet {
        (0..self.inf_count.len())
            .filter(|&v| self.inf_count[v] > 0)
            .collect()
    }

    pub fn diverse(&self) -> NodeSet {
        (0..self.div_count.len())
            .filter(|&v| self.div_count[v] > 0)
            .collect()
    }

    /// Increase of `(I, D)` if `u` were added.
    pub fn gain_counts(&self, obj: &Objective, u: NodeId) -> (usize, usize) {
        if self.members.contains(&u) {
            return (0, 0);
        }
        let fresh: Vec<NodeId> = obj.influence_sets[u]
            .iter()
            .copied()
            .filter(|&v| self.inf_count[v] == 0)
            .collect();
        let mut reached = NodeSet::new();
        for &v in &fresh {
            reached.extend(obj.balls[v].iter().copied().filter(|&w| self.div_count[w] == 0));
        }
        (fresh.len(), reached.len())
    }

    pub fn gain(&self, obj: &Objective, u: NodeId) -> f64 {
        let (i, d) = self.gain_counts(obj, u);
        obj.scaled(self.influence + i, self.diversity + d) - self.value(obj)
    }

    /// Decrease of `(I, D)` if member `u` were removed.
    pub fn loss_counts(&self, obj: &Objective, u: NodeId) -> (usize, usize) {
        if !self.members.contains(&u) {
            return (0, 0);
        }
        let lost: Vec<NodeId> = obj.influence_sets[u]
            .iter()
            .copied()
            .filter(|&v| self.inf_count[v] == 1)
            .collect();
        let mut drop = std::collections::BTreeMap::<NodeId, u32>::new();
        for &v in &lost {
            for &w in &obj.balls[v] {
                *drop.entry(w).or_default() += 1;
            }
        }
        let d = drop
            .into_iter()
            .filter(|&(w, c)| self.div_count[w] == c)
            .count();
        (lost.len(), d)
    }

    pub fn loss(&self, obj: &Objective, u: NodeId) -> f64 {
        let (i, d) = self.loss_counts(obj, u);
        self.value(obj) - obj.scaled(self.influence - i, self.diversity - d)
    }

    pub fn insert(&mut self, obj: &Objective, u: NodeId) -> bool {
        if !self.members.insert(u) {
            return false;
        }
        for &v in &obj.influence_sets[u] {
            self.inf_count[v] += 1;
            if self.inf_count[v] == 1 {
                self.influence += 1;
                for &w in &obj.balls[v] {
                    self.div_count[w] += 1;
                    if self.div_count[w] == 1 {
                        self.diversity += 1;
                    }
                }
            }
        }
        true
    }

    pub fn remove(&mut self, obj: &Objective, u: NodeId) -> bool {
        if !self.members.remove(&u) {
            return false;
        }
        for &v in &obj.influence_sets[u] {
            self.inf_count[v] -= 1;
            if self.inf_count[v] == 0 {
                self.influence -= 1;
                for &w in &obj.balls[v] {
                    self.div_count[w] -= 1;
                    if self.div_count[w] == 0 {
                        self.diversity -= 1;
                    }
                }
            }
        }
        true
    }
}

/// Number of nodes `v` with `i2[u][v] ≥ theta` for some `u` in `nodes`.
pub fn influence_score(t: &InfluenceTable, nodes: &NodeSet, theta: f64) -> usize {
    Objective::with_params(t, theta, 0.0, 0.0)
        .influenced(nodes)
        .len()
}

/// Size of the union of radius-`r` embedding balls around the nodes influenced by `nodes`.
pub fn diversity_score(t: &InfluenceTable, nodes: &NodeSet, theta: f64, r: f64) -> usize {
    Objective::with_params(t, theta, r, 0.0).diverse(nodes).len()
}

/// Sum of the per-graph objective over explanation node sets, each normalized
/// by the node count of its source graph.
pub fn explainability(node_sets: &[NodeSet], tables: &[InfluenceTable], cfg: &Config) -> f64 {
    node_sets
        .iter()
        .zip(tables)
        .map(|(nodes, t)| Objective::new(t, cfg).value(nodes))
        .sum()
}
