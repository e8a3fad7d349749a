//! Explanation views for GCN graph classifiers.
//!
//! An explanation view for a class label has two tiers: a small set of
//! connected graph patterns, and for each graph the model assigns that label,
//! an explanation subgraph. Each explanation subgraph keeps the label when
//! taken alone and changes it when removed. The patterns cover every node of
//! every explanation subgraph.
//!
//! The crate computes views in two ways:
//!
//! * [`explain::explain_graph`] greedily grows each explanation subgraph by
//!   marginal gain of the [`scoring::Objective`], then
//!   [`summarize::summarize`] picks covering patterns by weighted set cover;
//! * [`stream::StreamState`] processes the nodes of a graph one at a time and
//!   keeps a bounded explanation and its patterns current after every node.
//!
//! [`verify::verify_view`] re-checks a view from scratch, and
//! [`metrics::evaluate`] scores it by Fidelity+, Fidelity-, Sparsity and
//! Compression.
//!
//! ```
//! use exview::{classify_database, generate_views, Algorithm, Config};
//! use exview::io::synth::{standin_model, synth_motif_dataset};
//!
//! let mut db = synth_motif_dataset(4, 8, 1).db;
//! let model = standin_model();
//! classify_database(&model, &mut db)?;
//! let views = generate_views(&db, &model, &Config::default(), &[0, 1], Algorithm::Approx)?;
//! for v in &views {
//!     assert!(v.view.coverage.fully_covers_nodes());
//! }
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod gnn;
pub mod graph;
pub mod matching;
pub mod config;
pub mod influence;
pub mod scoring;
pub mod explain;
pub mod dfscode;
pub mod summarize;
pub mod stream;
pub mod metrics;
pub mod verify;
pub mod io;
pub mod pipeline;

pub use config::{Config, Coverage};
pub use explain::{explain_graph, ExplanationSubgraph};
pub use gnn::{classify_database, forward, is_explanation, GcnModel};
pub use graph::{ClassLabel, Graph, GraphDatabase, GraphId, Labeled, NodeId, NodeSet, Pattern, TypeId};
pub use matching::match_pattern;
pub use pipeline::{generate_views, Algorithm, GeneratedView};
pub use scoring::Objective;
pub use stream::StreamState;
pub use summarize::ExplanationView;
pub use verify::{verify_view, Constraint, VerifyReport};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/objective.md")]
    mod objective {}
    #[doc = include_str!("../../../book/src/explaining.md")]
    mod explaining {}
    #[doc = include_str!("../../../book/src/views.md")]
    mod views {}
    #[doc = include_str!("../../../book/src/streaming.md")]
    mod streaming {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
