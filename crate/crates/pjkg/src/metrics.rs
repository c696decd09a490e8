//! Structural metrics (instantiated class/property ratios and graph
//! completeness) and semantic-accuracy scoring against a ground-truth
//! graph.
//!
//! Completeness is measured at the type level: distinct labels,
//! relationship types, and (class, property) pairs covered, relative to
//! what the schema defines. A property counts as instantiated only when
//! at least one node carries a non-default value for it.

use crate::extraction::DEFAULT_SENTINEL;
use crate::graph::PropertyGraph;
use crate::ontology::{OntologySchema, SchemaError};
use crate::pipeline::normalize_name;
use serde::Serialize;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

/// Structural metric report.
#[derive(Debug, Clone, Serialize)]
pub struct StructuralReport {
    pub icr: f64,
    pub ipr: f64,
    pub node_completeness: f64,
    pub relationship_completeness: f64,
    pub property_completeness: f64,
    pub per_label_counts: BTreeMap<String, usize>,
}

impl StructuralReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:>10}", "Metric", "Value");
        let _ = writeln!(out, "{:-<28} {:->10}", "", "");
        let _ = writeln!(out, "{:<28} {:>10.2}", "ICR", self.icr);
        let _ = writeln!(out, "{:<28} {:>10.2}", "IPR", self.ipr);
        let _ = writeln!(out, "{:<28} {:>9.2}%", "Node completeness", self.node_completeness);
        let _ = writeln!(
            out,
            "{:<28} {:>9.2}%",
            "Relationship completeness", self.relationship_completeness
        );
        let _ = writeln!(
            out,
            "{:<28} {:>9.2}%",
            "Property completeness", self.property_completeness
        );
        out
    }
}

/// Precision/recall/F1 triple with its confusion counts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Scores {
    /// Zero-denominator convention: precision with tp+fp = 0 and recall
    /// with tp+fn = 0 are 0, not NaN; F1 is 0 when P+R = 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Scores {
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        Scores {
            precision,
            recall,
            f1: f1_score(precision, recall),
            tp,
            fp,
            fn_,
        }
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Entity/relation/combined scores against ground truth.
#[derive(Debug, Clone, Serialize)]
pub struct SemanticReport {
    pub entity: Scores,
    pub relation: Scores,
    pub combined: Scores,
}

impl SemanticReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>10}",
            "Axis", "Precision", "Recall", "F1"
        );
        let _ = writeln!(out, "{:-<10} {:->10} {:->10} {:->10}", "", "", "", "");
        for (name, s) in [
            ("Entity", &self.entity),
            ("Relation", &self.relation),
            ("Combined", &self.combined),
        ] {
            let _ = writeln!(
                out,
                "{name:<10} {:>10.4} {:>10.4} {:>10.4}",
                s.precision, s.recall, s.f1
            );
        }
        out
    }
}

/// Instantiated class ratio: distinct node labels present over the
/// schema's class count.
pub fn compute_icr(graph: &PropertyGraph, schema: &OntologySchema) -> Result<f64, SchemaError> {
    let (class_count, _, _) = schema.required_counts();
    if class_count == 0 {
        return Err(SchemaError::EmptySchema);
    }
    let labels: HashSet<&str> = graph.nodes().map(|n| n.label.as_str()).collect();
    let instantiated = schema
        .classes
        .iter()
        .filter(|c| labels.contains(c.label.as_str()))
        .count();
    Ok(instantiated as f64 / class_count as f64)
}

fn instantiated_property_pairs(graph: &PropertyGraph) -> HashSet<(String, String)> {
    let mut pairs = HashSet::new();
    for node in graph.nodes() {
        for (name, value) in &node.properties {
            if !value.is_empty() && value != DEFAULT_SENTINEL {
                pairs.insert((node.label.clone(), name.clone()));
            }
        }
    }
    pairs
}

/// Instantiated property ratio: schema (class, property) pairs carrying a
/// non-default value on at least one node, over the schema's property
/// count.
pub fn compute_ipr(graph: &PropertyGraph, schema: &OntologySchema) -> Result<f64, SchemaError> {
    let (_, property_count, _) = schema.required_counts();
    if schema.classes.is_empty() {
        return Err(SchemaError::EmptySchema);
    }
    if property_count == 0 {
        return Ok(0.0);
    }
    let pairs = instantiated_property_pairs(graph);
    let instantiated = schema
        .classes
        .iter()
        .flat_map(|c| {
            c.properties
                .iter()
                .map(move |p| (c.label.clone(), p.name.clone()))
        })
        .filter(|pair| pairs.contains(pair))
        .count();
    Ok(instantiated as f64 / property_count as f64)
}

/// Type-level completeness percentages: (node %, relationship %,
/// property %).
pub fn compute_completeness(
    graph: &PropertyGraph,
    schema: &OntologySchema,
) -> Result<(f64, f64, f64), SchemaError> {
    let (class_count, _, relationship_count) = schema.required_counts();
    if class_count == 0 {
        return Err(SchemaError::EmptySchema);
    }
    let node_pct = compute_icr(graph, schema)? * 100.0;
    let property_pct = compute_ipr(graph, schema)? * 100.0;
    let types: HashSet<&str> = graph.edges().map(|e| e.type_name.as_str()).collect();
    let instantiated_rels = schema
        .relationships
        .iter()
        .map(|r| r.type_name.as_str())
        .collect::<HashSet<_>>()
        .into_iter()
        .filter(|t| types.contains(t))
        .count();
    let relationship_pct = if relationship_count == 0 {
        0.0
    } else {
        instantiated_rels as f64 / relationship_count as f64 * 100.0
    };
    Ok((node_pct, relationship_pct, property_pct))
}

/// Full structural report.
pub fn structural_report(
    graph: &PropertyGraph,
    schema: &OntologySchema,
) -> Result<StructuralReport, SchemaError> {
    let icr = compute_icr(graph, schema)?;
    let ipr = compute_ipr(graph, schema)?;
    let (node_completeness, relationship_completeness, property_completeness) =
        compute_completeness(graph, schema)?;
    let mut per_label_counts = BTreeMap::new();
    for node in graph.nodes() {
        *per_label_counts.entry(node.label.clone()).or_insert(0) += 1;
    }
    Ok(StructuralReport {
        icr,
        ipr,
        node_completeness,
        relationship_completeness,
        property_completeness,
        per_label_counts,
    })
}

/// The property whose normalized value identifies an entity of a given
/// class across graphs. Classes without a naming property fall back to
/// the node id, which is deterministic under the id scheme.
fn primary_name(node: &crate::graph::Node) -> String {
    let key = match node.label.as_str() {
        "Diagnosis" | "Symptoms" | "Medications" => "Name",
        "DiagnosticTests" => "Test Name",
        "Assessment" | "CarePlan" => "Text",
        "Patient" => "ID",
        _ => return node.id.clone(),
    };
    let value = node
        .properties
        .get(key)
        .map(String::as_str)
        .unwrap_or_default();
    let normalized = normalize_name(value);
    match node.label.as_str() {
        // long free text blocks match on their 64-char prefix
        "Assessment" | "CarePlan" => normalized.chars().take(64).collect(),
        _ => normalized,
    }
}

fn entity_key(node: &crate::graph::Node) -> (String, String) {
    (node.label.clone(), primary_name(node))
}

fn multiset<T: std::hash::Hash + Eq + Ord>(items: impl Iterator<Item = T>) -> BTreeMap<T, usize> {
    let mut counts = BTreeMap::new();
    for item in items {
        *counts.entry(item).or_insert(0) += 1;
    }
    counts
}

fn confusion<T: std::hash::Hash + Eq + Ord>(
    predicted: BTreeMap<T, usize>,
    truth: BTreeMap<T, usize>,
) -> (usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    for (key, &count) in &predicted {
        let matched = truth.get(key).copied().unwrap_or(0).min(count);
        tp += matched;
        fp += count - matched;
    }
    let mut fn_ = 0;
    for (key, &count) in &truth {
        let matched = predicted.get(key).copied().unwrap_or(0).min(count);
        fn_ += count - matched;
    }
    (tp, fp, fn_)
}

/// Scores a predicted graph against ground truth. Entities match on
/// (label, normalized primary name); relations match when both endpoint
/// entity keys and the type are identical. Combined scores are
/// micro-averaged over the pooled entity and relation counts.
pub fn align_and_score(predicted: &PropertyGraph, truth: &PropertyGraph) -> SemanticReport {
    let pred_entities = multiset(predicted.nodes().map(entity_key));
    let truth_entities = multiset(truth.nodes().map(entity_key));
    let (etp, efp, efn) = confusion(pred_entities, truth_entities);

    let relation_key = |graph: &PropertyGraph| -> Vec<((String, String), String, (String, String))> {
        graph
            .edges()
            .map(|edge| {
                let source = graph.node(&edge.source_id).expect("endpoint resolves");
                let target = graph.node(&edge.target_id).expect("endpoint resolves");
                (entity_key(source), edge.type_name.clone(), entity_key(target))
            })
            .collect()
    };
    let pred_relations = multiset(relation_key(predicted).into_iter());
    let truth_relations = multiset(relation_key(truth).into_iter());
    let (rtp, rfp, rfn) = confusion(pred_relations, truth_relations);

    SemanticReport {
        entity: Scores::from_counts(etp, efp, efn),
        relation: Scores::from_counts(rtp, rfp, rfn),
        combined: Scores::from_counts(etp + rtp, efp + rfp, efn + rfn),
    }
}
