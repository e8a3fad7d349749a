//! Run configuration: influence threshold, diversity radius, per-label size
//! windows and the knobs of pattern mining and influence estimation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::ClassLabel;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{0} must lie in [0, 1], got {1}")]
    OutOfUnitRange(&'static str, f64),
    #[error("r must be a finite non-negative number, got {0}")]
    BadRadius(f64),
    #[error("coverage window for {0} has lower bound {1} above upper bound {2}")]
    InvertedWindow(String, usize, usize),
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("label {0} has more than one coverage window")]
    DuplicateLabel(ClassLabel),
    #[error("cannot parse configuration: {0}")]
    Parse(String),
}

/// How feature influence between node pairs is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InfluenceMode {
    /// L1 norms of the realized Jacobian of the output embeddings.
    #[default]
    Exact,
    /// Entries of the k-th power of the normalized adjacency, by sparse products.
    Rw,
    /// The same power estimated from `rw_walks` random walks per node.
    RwSampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    /// Euclidean distance between L2-normalized embeddings.
    #[default]
    NormalizedEuclidean,
}

/// Inclusive node-count window `[lower, upper]` for one explanation subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub lower: usize,
    pub upper: usize,
}

impl Coverage {
    pub fn new(lower: usize, upper: usize) -> Self {
        Coverage { lower, upper }
    }

    pub fn contains(&self, size: usize) -> bool {
        self.lower <= size && size <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCoverage {
    pub label: ClassLabel,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub theta: f64,
    pub r: f64,
    pub gamma: f64,
    /// Window used for labels without an entry in `coverage`.
    pub default_coverage: Coverage,
    pub coverage: Vec<LabelCoverage>,
    pub influence_mode: InfluenceMode,
    pub rw_walks: usize,
    pub rw_seed: u64,
    pub distance: Distance,
    pub pattern_min_support: usize,
    pub pattern_max_nodes: usize,
    /// Upper bound on the streaming pattern cache before unused patterns are evicted.
    pub pattern_cache_capacity: usize,
    /// Hop radius of the neighborhood searched for new patterns while streaming.
    /// Defaults to `max(1, ceil(r))`.
    pub stream_hops: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            theta: 0.08,
            r: 0.25,
            gamma: 0.5,
            default_coverage: Coverage::new(1, 8),
            coverage: Vec::new(),
            influence_mode: InfluenceMode::Exact,
            rw_walks: 1000,
            rw_seed: 0,
            distance: Distance::NormalizedEuclidean,
            pattern_min_support: 2,
            pattern_max_nodes: 6,
            pattern_cache_capacity: 32,
            stream_hops: None,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(ConfigError::OutOfUnitRange("theta", self.theta));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::OutOfUnitRange("gamma", self.gamma));
        }
        if !self.r.is_finite() || self.r < 0.0 {
            return Err(ConfigError::BadRadius(self.r));
        }
        let d = self.default_coverage;
        if d.lower > d.upper {
            return Err(ConfigError::InvertedWindow("the default".into(), d.lower, d.upper));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.coverage {
            if c.lower > c.upper {
                return Err(ConfigError::InvertedWindow(
                    format!("label {}", c.label),
                    c.lower,
                    c.upper,
                ));
            }
            if !seen.insert(c.label) {
                return Err(ConfigError::DuplicateLabel(c.label));
            }
        }
        if self.pattern_max_nodes == 0 {
            return Err(ConfigError::Zero("pattern_max_nodes"));
        }
        if self.pattern_min_support == 0 {
            return Err(ConfigError::Zero("pattern_min_support"));
        }
        if self.rw_walks == 0 {
            return Err(ConfigError::Zero("rw_walks"));
        }
        if self.pattern_cache_capacity == 0 {
            return Err(ConfigError::Zero("pattern_cache_capacity"));
        }
        Ok(())
    }

    pub fn coverage_for(&self, label: ClassLabel) -> Coverage {
        self.coverage
            .iter()
            .find(|c| c.label == label)
            .map(|c| Coverage::new(c.lower, c.upper))
            .unwrap_or(self.default_coverage)
    }

    /// Sets the window for `label`, replacing any previous entry.
    pub fn set_coverage(&mut self, label: ClassLabel, window: Coverage) {
        self.coverage.retain(|c| c.label != label);
        self.coverage.push(LabelCoverage {
            label,
            lower: window.lower,
            upper: window.upper,
        });
        self.coverage.sort_by_key(|c| c.label);
    }

    pub fn stream_hop_radius(&self) -> usize {
        self.stream_hops
            .unwrap_or_else(|| (self.r.ceil() as usize).max(1))
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(s).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }
}
