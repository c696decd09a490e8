//! Embedded labeled property-graph store with schema-checked mutation.
//!
//! Nodes and edges are kept in ordered maps so every traversal and export
//! is deterministic. Mutation goes through [`PropertyGraph::add_node`],
//! [`PropertyGraph::add_edge`], and [`PropertyGraph::merge_subgraph`];
//! the last one is atomic — a constraint violation anywhere in the
//! subgraph leaves the target graph untouched.

pub mod export;

use crate::ontology::{OntologySchema, CHAIN_EDGE_TYPES, HAS_START};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use thiserror::Error;

/// A labeled node with a text property map.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub label: String,
    pub properties: BTreeMap<String, String>,
}

impl Node {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Node {
        Node {
            id: id.into(),
            label: label.into(),
            properties: BTreeMap::new(),
        }
    }

    pub fn with_property(mut self, name: impl Into<String>, value: impl Into<String>) -> Node {
        self.properties.insert(name.into(), value.into());
        self
    }
}

/// A typed edge between two node ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    #[serde(rename = "source")]
    pub source_id: String,
    #[serde(rename = "target")]
    pub target_id: String,
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub properties: BTreeMap<String, String>,
}

impl Edge {
    pub fn new(
        source_id: impl Into<String>,
        type_name: impl Into<String>,
        target_id: impl Into<String>,
    ) -> Edge {
        Edge {
            source_id: source_id.into(),
            target_id: target_id.into(),
            type_name: type_name.into(),
            properties: BTreeMap::new(),
        }
    }

    fn key(&self) -> (String, String, String) {
        (
            self.source_id.clone(),
            self.type_name.clone(),
            self.target_id.clone(),
        )
    }
}

/// A per-encounter subgraph waiting to be merged into a patient's graph.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl Subgraph {
    pub fn push_node(&mut self, node: Node) {
        self.nodes.push(node);
    }

    pub fn push_edge(&mut self, edge: Edge) {
        self.edges.push(edge);
    }
}

/// Counts reported by a merge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MergeStats {
    pub nodes_added: usize,
    pub edges_added: usize,
    /// Nodes/edges already present that matched exactly.
    pub merged: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown class label: {0}")]
    UnknownClass(String),
    #[error("node {0} already exists with different label or properties")]
    DuplicateIdConflict(String),
    #[error("edge endpoint does not exist: {0}")]
    DanglingEndpoint(String),
    #[error("no relationship {type_name} from {source_label} to {target_label} in schema")]
    ConstraintViolation {
        type_name: String,
        source_label: String,
        target_label: String,
    },
    #[error("patient {0} already has a HAS_START edge")]
    StartUniquenessViolation(String),
    #[error("edge ({0}, {1}, {2}) already exists with different properties")]
    EdgeConflict(String, String, String),
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("unknown patient: {0}")]
    UnknownPatient(String),
    #[error("malformed journey for patient {patient}: {reason}")]
    MalformedJourney { patient: String, reason: String },
}

/// Direction for neighbor queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
    Both,
}

/// The in-memory property graph, indexed by node id and by
/// (source, type, target) edge key.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    schema: Arc<OntologySchema>,
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<(String, String, String), Edge>,
}

impl PartialEq for PropertyGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl PropertyGraph {
    pub fn new(schema: Arc<OntologySchema>) -> PropertyGraph {
        PropertyGraph {
            schema,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn schema(&self) -> &OntologySchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<OntologySchema> {
        Arc::clone(&self.schema)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    /// All nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// All edges in (source, type, target) order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    /// Adds a node with merge semantics: re-adding an identical node is a
    /// no-op, a same-id node with different content is a conflict.
    pub fn add_node(&mut self, node: Node) -> Result<String, GraphError> {
        self.schema
            .lookup_class(&node.label)
            .map_err(|_| GraphError::UnknownClass(node.label.clone()))?;
        match self.nodes.get(&node.id) {
            Some(existing) if *existing == node => Ok(node.id),
            Some(_) => Err(GraphError::DuplicateIdConflict(node.id)),
            None => {
                let id = node.id.clone();
                self.nodes.insert(id.clone(), node);
                Ok(id)
            }
        }
    }

    /// Adds an edge after checking referential integrity, the schema's
    /// domain/range constraint, and HAS_START uniqueness per patient.
    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        let source = self
            .nodes
            .get(&edge.source_id)
            .ok_or_else(|| GraphError::DanglingEndpoint(edge.source_id.clone()))?;
        let target = self
            .nodes
            .get(&edge.target_id)
            .ok_or_else(|| GraphError::DanglingEndpoint(edge.target_id.clone()))?;
        if self
            .schema
            .lookup_relationship_triple(&source.label, &edge.type_name, &target.label)
            .is_none()
        {
            return Err(GraphError::ConstraintViolation {
                type_name: edge.type_name.clone(),
                source_label: source.label.clone(),
                target_label: target.label.clone(),
            });
        }
        let key = edge.key();
        if let Some(existing) = self.edges.get(&key) {
            if *existing == edge {
                return Ok(());
            }
            return Err(GraphError::EdgeConflict(key.0, key.1, key.2));
        }
        if edge.type_name == HAS_START {
            let already = self
                .edges
                .range((edge.source_id.clone(), String::new(), String::new())..)
                .take_while(|((s, _, _), _)| *s == edge.source_id)
                .any(|((_, t, _), _)| t == HAS_START);
            if already {
                return Err(GraphError::StartUniquenessViolation(edge.source_id.clone()));
            }
        }
        self.edges.insert(key, edge);
        Ok(())
    }

    /// Merges a subgraph atomically. On any error the graph is unchanged.
    pub fn merge_subgraph(&mut self, sub: &Subgraph) -> Result<MergeStats, GraphError> {
        let mut scratch = self.clone();
        let mut stats = MergeStats::default();
        for node in &sub.nodes {
            let before = scratch.nodes.len();
            scratch.add_node(node.clone())?;
            if scratch.nodes.len() > before {
                stats.nodes_added += 1;
            } else {
                stats.merged += 1;
            }
        }
        for edge in &sub.edges {
            let before = scratch.edges.len();
            scratch.add_edge(edge.clone())?;
            if scratch.edges.len() > before {
                stats.edges_added += 1;
            } else {
                stats.merged += 1;
            }
        }
        *self = scratch;
        Ok(stats)
    }

    /// Walks the patient's journey chain: the HAS_START target first, then
    /// each successor reached through a chain edge. Returns each encounter
    /// node paired with the type of its incoming journey edge.
    pub fn journey(&self, patient_id: &str) -> Result<Vec<(&Node, String)>, GraphError> {
        let patient = self
            .nodes
            .get(patient_id)
            .ok_or_else(|| GraphError::UnknownPatient(patient_id.to_string()))?;
        if patient.label != "Patient" {
            return Err(GraphError::UnknownPatient(patient_id.to_string()));
        }
        let starts: Vec<&Edge> = self
            .outgoing(patient_id)
            .filter(|e| e.type_name == HAS_START)
            .collect();
        let first = match starts.as_slice() {
            [] => return Ok(vec![]),
            [one] => one,
            _ => {
                return Err(GraphError::MalformedJourney {
                    patient: patient_id.to_string(),
                    reason: "multiple HAS_START edges".to_string(),
                })
            }
        };
        let mut ordered = vec![(self.must_node(&first.target_id), HAS_START.to_string())];
        let mut visited: HashSet<&str> = HashSet::new();
        visited.insert(first.target_id.as_str());
        let mut current = first.target_id.as_str();
        loop {
            let next: Vec<&Edge> = self
                .outgoing(current)
                .filter(|e| CHAIN_EDGE_TYPES.contains(&e.type_name.as_str()))
                .collect();
            match next.as_slice() {
                [] => break,
                [edge] => {
                    if !visited.insert(edge.target_id.as_str()) {
                        return Err(GraphError::MalformedJourney {
                            patient: patient_id.to_string(),
                            reason: format!("cycle through {}", edge.target_id),
                        });
                    }
                    ordered.push((self.must_node(&edge.target_id), edge.type_name.clone()));
                    current = edge.target_id.as_str();
                }
                _ => {
                    return Err(GraphError::MalformedJourney {
                        patient: patient_id.to_string(),
                        reason: format!("journey branches at {current}"),
                    })
                }
            }
        }
        Ok(ordered)
    }

    fn must_node(&self, id: &str) -> &Node {
        self.nodes.get(id).expect("edge endpoint resolves")
    }

    fn outgoing<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges
            .range((id.to_string(), String::new(), String::new())..)
            .take_while(move |((s, _, _), _)| s == id)
            .map(|(_, e)| e)
    }

    /// All nodes with a label, optionally filtered on one property value,
    /// in id order.
    pub fn find_nodes(
        &self,
        label: &str,
        filter: Option<(&str, &str)>,
    ) -> Result<Vec<&Node>, GraphError> {
        self.schema
            .lookup_class(label)
            .map_err(|_| GraphError::UnknownClass(label.to_string()))?;
        Ok(self
            .nodes
            .values()
            .filter(|n| n.label == label)
            .filter(|n| match filter {
                Some((key, value)) => n.properties.get(key).map(String::as_str) == Some(value),
                None => true,
            })
            .collect())
    }

    /// Adjacent (edge, node) pairs in stable edge-key order.
    pub fn neighbors(
        &self,
        node_id: &str,
        direction: Direction,
        type_filter: Option<&str>,
    ) -> Result<Vec<(&Edge, &Node)>, GraphError> {
        if !self.nodes.contains_key(node_id) {
            return Err(GraphError::UnknownNode(node_id.to_string()));
        }
        let mut result = Vec::new();
        for edge in self.edges.values() {
            if let Some(wanted) = type_filter {
                if edge.type_name != wanted {
                    continue;
                }
            }
            let outward = edge.source_id == node_id;
            let inward = edge.target_id == node_id;
            let take = match direction {
                Direction::Out => outward,
                Direction::In => inward,
                Direction::Both => outward || inward,
            };
            if take {
                let other = if outward { &edge.target_id } else { &edge.source_id };
                result.push((edge, self.must_node(other)));
            }
        }
        Ok(result)
    }

    /// Verifies the whole-graph invariants: referential integrity, schema
    /// conformance of every edge, HAS_START uniqueness, and a well-formed
    /// chain from every patient reaching every encounter exactly once.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        for node in self.nodes.values() {
            self.schema
                .lookup_class(&node.label)
                .map_err(|_| GraphError::UnknownClass(node.label.clone()))?;
        }
        for edge in self.edges.values() {
            let source = self
                .nodes
                .get(&edge.source_id)
                .ok_or_else(|| GraphError::DanglingEndpoint(edge.source_id.clone()))?;
            let target = self
                .nodes
                .get(&edge.target_id)
                .ok_or_else(|| GraphError::DanglingEndpoint(edge.target_id.clone()))?;
            if self
                .schema
                .lookup_relationship_triple(&source.label, &edge.type_name, &target.label)
                .is_none()
            {
                return Err(GraphError::ConstraintViolation {
                    type_name: edge.type_name.clone(),
                    source_label: source.label.clone(),
                    target_label: target.label.clone(),
                });
            }
        }
        let mut reached: HashSet<&str> = HashSet::new();
        for patient in self.nodes.values().filter(|n| n.label == "Patient") {
            for (enc, _) in self.journey(&patient.id)? {
                if !reached.insert(enc.id.as_str()) {
                    return Err(GraphError::MalformedJourney {
                        patient: patient.id.clone(),
                        reason: format!("encounter {} reachable from two patients", enc.id),
                    });
                }
            }
        }
        for node in self.nodes.values().filter(|n| n.label == "Encounter") {
            if !reached.contains(node.id.as_str()) {
                return Err(GraphError::MalformedJourney {
                    patient: String::new(),
                    reason: format!("encounter {} not reachable from any patient", node.id),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::OntologySchema;

    fn graph() -> PropertyGraph {
        PropertyGraph::new(Arc::new(OntologySchema::default_schema()))
    }

    fn patient(id: &str) -> Node {
        Node::new(id, "Patient").with_property("ID", id)
    }

    fn encounter(id: &str, number: &str) -> Node {
        Node::new(id, "Encounter").with_property("Encounter Number", number)
    }

    #[test]
    fn add_node_is_idempotent() {
        let mut g = graph();
        g.add_node(patient("PA56789")).unwrap();
        g.add_node(patient("PA56789")).unwrap();
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn add_node_rejects_unknown_label_and_conflicts() {
        let mut g = graph();
        assert_eq!(
            g.add_node(Node::new("w1", "Wizard")),
            Err(GraphError::UnknownClass("Wizard".to_string()))
        );
        g.add_node(patient("PA1")).unwrap();
        let conflicting = patient("PA1").with_property("Name", "someone");
        assert_eq!(
            g.add_node(conflicting),
            Err(GraphError::DuplicateIdConflict("PA1".to_string()))
        );
    }

    #[test]
    fn add_edge_checks_domain_range() {
        let mut g = graph();
        g.add_node(encounter("E1", "1")).unwrap();
        g.add_node(Node::new("D1", "Diagnosis").with_property("ICD-10", "I34.0"))
            .unwrap();
        g.add_edge(Edge::new("E1", "HAS_DIAGNOSIS", "D1")).unwrap();
        // reversed domain/range
        let err = g.add_edge(Edge::new("D1", "HAS_DIAGNOSIS", "E1")).unwrap_err();
        assert!(matches!(err, GraphError::ConstraintViolation { .. }));
    }

    #[test]
    fn add_edge_rejects_dangling_endpoint() {
        let mut g = graph();
        g.add_node(encounter("E1", "1")).unwrap();
        assert_eq!(
            g.add_edge(Edge::new("E1", "HAS_DIAGNOSIS", "missing")),
            Err(GraphError::DanglingEndpoint("missing".to_string()))
        );
    }

    #[test]
    fn has_start_unique_per_patient() {
        let mut g = graph();
        g.add_node(patient("PA1")).unwrap();
        g.add_node(encounter("E1", "1")).unwrap();
        g.add_node(encounter("E2", "2")).unwrap();
        g.add_edge(Edge::new("PA1", "HAS_START", "E1")).unwrap();
        assert_eq!(
            g.add_edge(Edge::new("PA1", "HAS_START", "E2")),
            Err(GraphError::StartUniquenessViolation("PA1".to_string()))
        );
    }

    #[test]
    fn merge_is_idempotent_and_atomic() {
        let mut g = graph();
        let mut sub = Subgraph::default();
        sub.push_node(patient("PA1"));
        sub.push_node(encounter("PA1:1", "1"));
        sub.push_edge(Edge::new("PA1", "HAS_START", "PA1:1"));
        let first = g.merge_subgraph(&sub).unwrap();
        assert_eq!(first.nodes_added, 2);
        assert_eq!(first.edges_added, 1);
        let second = g.merge_subgraph(&sub).unwrap();
        assert_eq!(second.nodes_added, 0);
        assert_eq!(second.edges_added, 0);
        assert_eq!(second.merged, 3);

        // a dangling edge aborts the whole merge
        let mut bad = Subgraph::default();
        bad.push_node(encounter("PA1:2", "2"));
        bad.push_edge(Edge::new("PA1:2", "HAS_FOLLOWUP", "nowhere"));
        let before = g.clone();
        assert!(g.merge_subgraph(&bad).is_err());
        assert_eq!(g, before);
    }

    #[test]
    fn merge_order_independent() {
        let mut sub_a = Subgraph::default();
        sub_a.push_node(patient("PA1"));
        sub_a.push_node(encounter("PA1:1", "1"));
        sub_a.push_edge(Edge::new("PA1", "HAS_START", "PA1:1"));
        let mut sub_b = Subgraph::default();
        sub_b.push_node(encounter("PA1:2", "2"));
        sub_b.push_node(patient("PA1"));
        sub_b.push_node(encounter("PA1:1", "1"));
        sub_b.push_edge(Edge::new("PA1:1", "HAS_FOLLOWUP", "PA1:2"));

        let mut g1 = graph();
        g1.merge_subgraph(&sub_a).unwrap();
        g1.merge_subgraph(&sub_b).unwrap();
        let mut g2 = graph();
        g2.merge_subgraph(&sub_b).unwrap();
        g2.merge_subgraph(&sub_a).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn journey_follows_chain() {
        let mut g = graph();
        g.add_node(patient("PA1")).unwrap();
        for i in 1..=3 {
            g.add_node(encounter(&format!("PA1:{i}"), &i.to_string())).unwrap();
        }
        g.add_edge(Edge::new("PA1", "HAS_START", "PA1:1")).unwrap();
        g.add_edge(Edge::new("PA1:1", "HAS_FOLLOWUP", "PA1:2")).unwrap();
        g.add_edge(Edge::new("PA1:2", "CAUSED_BY", "PA1:3")).unwrap();
        let journey = g.journey("PA1").unwrap();
        let types: Vec<&str> = journey.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(types, ["HAS_START", "HAS_FOLLOWUP", "CAUSED_BY"]);
        let ids: Vec<&str> = journey.iter().map(|(n, _)| n.id.as_str()).collect();
        assert_eq!(ids, ["PA1:1", "PA1:2", "PA1:3"]);
    }

    #[test]
    fn journey_edge_cases() {
        let mut g = graph();
        g.add_node(patient("PA1")).unwrap();
        assert!(g.journey("PA1").unwrap().is_empty());
        assert_eq!(
            g.journey("ghost"),
            Err(GraphError::UnknownPatient("ghost".to_string()))
        );

        g.add_node(encounter("E1", "1")).unwrap();
        g.add_node(encounter("E2", "2")).unwrap();
        g.add_edge(Edge::new("PA1", "HAS_START", "E1")).unwrap();
        g.add_edge(Edge::new("E1", "HAS_FOLLOWUP", "E2")).unwrap();
        g.add_edge(Edge::new("E2", "NEXT", "E1")).unwrap();
        assert!(matches!(
            g.journey("PA1"),
            Err(GraphError::MalformedJourney { .. })
        ));
    }

    #[test]
    fn find_nodes_and_neighbors() {
        let mut g = graph();
        g.add_node(encounter("E1", "1")).unwrap();
        g.add_node(
            Node::new("E1:Diagnosis:mvr", "Diagnosis")
                .with_property("Name", "mitral valve regurgitation")
                .with_property("ICD-10", "I34.0"),
        )
        .unwrap();
        g.add_edge(Edge::new("E1", "HAS_DIAGNOSIS", "E1:Diagnosis:mvr")).unwrap();

        let found = g.find_nodes("Diagnosis", Some(("ICD-10", "I34.0"))).unwrap();
        assert_eq!(found.len(), 1);
        assert!(g
            .find_nodes("Medications", Some(("Name", "unobtainium")))
            .unwrap()
            .is_empty());
        assert_eq!(
            g.find_nodes("Spaceship", None),
            Err(GraphError::UnknownClass("Spaceship".to_string()))
        );

        let out = g.neighbors("E1", Direction::Out, Some("HAS_DIAGNOSIS")).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1.id, "E1:Diagnosis:mvr");
        let both = g.neighbors("E1:Diagnosis:mvr", Direction::Both, None).unwrap();
        assert_eq!(both.len(), 1);
        assert_eq!(
            g.neighbors("absent", Direction::Both, None),
            Err(GraphError::UnknownNode("absent".to_string()))
        );
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let mut g = graph();
        g.add_node(encounter("E9", "9")).unwrap();
        assert!(g.neighbors("E9", Direction::Both, None).unwrap().is_empty());
    }
}
