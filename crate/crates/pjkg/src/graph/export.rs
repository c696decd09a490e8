//! Graph serialization: canonical JSON, GraphML, and a MERGE statement
//! script for loading into an external graph database.
//!
//! All three formats are deterministic: nodes are emitted in id order and
//! edges in (source, type, target) order, so identical graphs always
//! produce byte-identical output.

use super::{Edge, GraphError, Node, PropertyGraph, Subgraph};
use crate::ontology::OntologySchema;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;
use thiserror::Error;

/// Output formats for [`export`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    GraphMl,
    CypherScript,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "graphml" => Ok(ExportFormat::GraphMl),
            "cypher-script" | "cypher" => Ok(ExportFormat::CypherScript),
            other => Err(format!("unknown export format: {other}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("failed to parse graph document: {0}")]
    ParseFailure(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("io failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

/// The canonical graph JSON document.
#[derive(Debug, Serialize, Deserialize)]
struct GraphDocument {
    schema_version: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
}

impl PropertyGraph {
    /// Renders the graph in the requested format.
    pub fn export(&self, format: ExportFormat) -> String {
        match format {
            ExportFormat::Json => self.to_canonical_json(),
            ExportFormat::GraphMl => self.to_graphml(),
            ExportFormat::CypherScript => self.to_cypher_script(),
        }
    }

    /// Canonical JSON: sorted node/edge arrays, trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let doc = GraphDocument {
            schema_version: self.schema().version.clone(),
            nodes: self.nodes().cloned().collect(),
            edges: self.edges().cloned().collect(),
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("graph serializes");
        text.push('\n');
        text
    }

    /// Parses a canonical JSON document into a graph, re-checking every
    /// schema constraint on the way in.
    pub fn from_canonical_json(
        text: &str,
        schema: Arc<OntologySchema>,
    ) -> Result<PropertyGraph, ExportError> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| ExportError::ParseFailure(e.to_string()))?;
        let mut graph = PropertyGraph::new(schema);
        let sub = Subgraph {
            nodes: doc.nodes,
            edges: doc.edges,
        };
        graph.merge_subgraph(&sub)?;
        Ok(graph)
    }

    /// GraphML with node labels and all properties as data keys.
    pub fn to_graphml(&self) -> String {
        let mut keys: BTreeSet<&str> = BTreeSet::new();
        for node in self.nodes() {
            keys.extend(node.properties.keys().map(String::as_str));
        }
        for edge in self.edges() {
            keys.extend(edge.properties.keys().map(String::as_str));
        }

        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(
            "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n",
        );
        out.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
        out.push_str("  <key id=\"type\" for=\"edge\" attr.name=\"type\" attr.type=\"string\"/>\n");
        for (i, key) in keys.iter().enumerate() {
            let _ = writeln!(
                out,
                "  <key id=\"d{i}\" for=\"all\" attr.name=\"{}\" attr.type=\"string\"/>",
                xml_escape(key)
            );
        }
        let key_id = |name: &str| {
            keys.iter()
                .position(|k| *k == name)
                .map(|i| format!("d{i}"))
                .expect("property key registered")
        };
        out.push_str("  <graph id=\"pjkg\" edgedefault=\"directed\">\n");
        for node in self.nodes() {
            let _ = writeln!(out, "    <node id=\"{}\">", xml_escape(&node.id));
            let _ = writeln!(
                out,
                "      <data key=\"label\">{}</data>",
                xml_escape(&node.label)
            );
            for (name, value) in &node.properties {
                let _ = writeln!(
                    out,
                    "      <data key=\"{}\">{}</data>",
                    key_id(name),
                    xml_escape(value)
                );
            }
            out.push_str("    </node>\n");
        }
        for edge in self.edges() {
            let _ = writeln!(
                out,
                "    <edge source=\"{}\" target=\"{}\">",
                xml_escape(&edge.source_id),
                xml_escape(&edge.target_id)
            );
            let _ = writeln!(
                out,
                "      <data key=\"type\">{}</data>",
                xml_escape(&edge.type_name)
            );
            for (name, value) in &edge.properties {
                let _ = writeln!(
                    out,
                    "      <data key=\"{}\">{}</data>",
                    key_id(name),
                    xml_escape(value)
                );
            }
            out.push_str("    </edge>\n");
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }

    /// Statement script: one MERGE per node, one MERGE per edge,
    /// UTF-8 with LF line endings.
    pub fn to_cypher_script(&self) -> String {
        let mut out = String::new();
        for node in self.nodes() {
            let mut props = format!("id: '{}'", cypher_escape(&node.id));
            for (name, value) in &node.properties {
                let _ = write!(
                    props,
                    ", `{}`: '{}'",
                    name.replace('`', ""),
                    cypher_escape(value)
                );
            }
            let _ = writeln!(out, "MERGE (:`{}` {{{props}}});", node.label);
        }
        for edge in self.edges() {
            let mut props = String::new();
            for (i, (name, value)) in edge.properties.iter().enumerate() {
                let sep = if i == 0 { "" } else { ", " };
                let _ = write!(
                    props,
                    "{sep}`{}`: '{}'",
                    name.replace('`', ""),
                    cypher_escape(value)
                );
            }
            let prop_block = if props.is_empty() {
                String::new()
            } else {
                format!(" {{{props}}}")
            };
            let _ = writeln!(
                out,
                "MATCH (a {{id: '{}'}}), (b {{id: '{}'}}) MERGE (a)-[:`{}`{prop_block}]->(b);",
                cypher_escape(&edge.source_id),
                cypher_escape(&edge.target_id),
                edge.type_name
            );
        }
        out
    }
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn cypher_escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('\'', "\\'")
}
