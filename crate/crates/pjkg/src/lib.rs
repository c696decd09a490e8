//! Ontology-driven construction, validation, and evaluation of patient
//! journey knowledge graphs.
//!
//! The crate turns per-encounter transcripts into a property graph:
//! a pluggable LLM backend extracts structured encounter data, a
//! three-stage validator (syntactic, semantic, temporal) gates it, and
//! the graph store enforces the ontology's domain/range constraints on
//! integration. Structural and semantic-accuracy metrics plus a query
//! benchmark harness evaluate the result.

pub mod bench;
pub mod extraction;
pub mod fixtures;
pub mod graph;
pub mod metrics;
pub mod ontology;
pub mod pipeline;
pub mod testkit;
pub mod validation;

pub use graph::{Edge, Node, PropertyGraph, Subgraph};
pub use ontology::OntologySchema;
