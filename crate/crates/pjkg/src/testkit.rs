//! Seeded generators for schema-valid random graphs. Used by the
//! property tests and the acceptance suite; not part of the stable API.

use crate::graph::{Edge, Node, PropertyGraph};
use crate::ontology::OntologySchema;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const DETAIL: [(&str, &str, &[&str]); 7] = [
    ("Symptoms", "HAS_SYMPTOM", &["Name", "Severity"]),
    ("Diagnosis", "HAS_DIAGNOSIS", &["Name", "ICD-10"]),
    ("Medications", "HAS_MEDICATION", &["Name", "Dosage"]),
    ("DiagnosticTests", "HAS_TEST", &["Test Name", "Results"]),
    ("VitalSigns", "HAS_VITALSIGN", &["Blood Pressure", "Heart Rate", "Weight"]),
    ("CarePlan", "HAS_CAREPLAN", &["Text"]),
    ("Assessment", "HAS_ASSESSMENT", &["Text"]),
];

/// Builds a random schema-valid graph with at most `max_nodes` nodes:
/// one or more patients, each with an intake pair and a journey chain of
/// encounters carrying random detail nodes. Deterministic per seed.
pub fn random_graph(seed: u64, max_nodes: usize) -> PropertyGraph {
    let schema = Arc::new(OntologySchema::default_schema());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = PropertyGraph::new(Arc::clone(&schema));
    let patients = rng.gen_range(1..=3);
    let names = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"];

    'outer: for p in 0..patients {
        let patient_id = format!("P{seed}-{p}");
        if graph.node_count() + 3 > max_nodes {
            break;
        }
        graph
            .add_node(Node::new(&patient_id, "Patient").with_property("ID", &patient_id))
            .expect("valid patient");
        let medical_id = format!("{patient_id}:MedicalHistory");
        graph
            .add_node(
                Node::new(&medical_id, "MedicalHistory")
                    .with_property("Chronic Illnesses", *names.choose(&mut rng).expect("non-empty")),
            )
            .expect("valid node");
        graph
            .add_edge(Edge::new(&patient_id, "HAS_MEDICAL_HISTORY", &medical_id))
            .expect("valid edge");
        let social_id = format!("{patient_id}:SocialHistory");
        graph
            .add_node(
                Node::new(&social_id, "SocialHistory")
                    .with_property("Occupation", *names.choose(&mut rng).expect("non-empty")),
            )
            .expect("valid node");
        graph
            .add_edge(Edge::new(&patient_id, "HAS_SOCIAL_HISTORY", &social_id))
            .expect("valid edge");

        let encounters = rng.gen_range(0..=4);
        let mut prev: Option<String> = None;
        for j in 1..=encounters {
            if graph.node_count() >= max_nodes {
                break 'outer;
            }
            let enc_id = format!("{patient_id}:{j}");
            graph
                .add_node(
                    Node::new(&enc_id, "Encounter")
                        .with_property("Encounter Number", j.to_string())
                        .with_property("Date", format!("2024-{j:02}-10")),
                )
                .expect("valid node");
            match &prev {
                None => graph
                    .add_edge(Edge::new(&patient_id, "HAS_START", &enc_id))
                    .expect("valid edge"),
                Some(prev_id) => {
                    let link = ["HAS_FOLLOWUP", "NEXT", "CAUSED_BY"]
                        .choose(&mut rng)
                        .expect("non-empty");
                    graph
                        .add_edge(Edge::new(prev_id, *link, &enc_id))
                        .expect("valid edge");
                }
            }
            prev = Some(enc_id.clone());

            let details = rng.gen_range(0..=3);
            for d in 0..details {
                if graph.node_count() >= max_nodes {
                    break;
                }
                let (label, edge_type, props) = DETAIL.choose(&mut rng).expect("non-empty");
                let name = names.choose(&mut rng).expect("non-empty");
                let node_id = format!("{enc_id}:{label}:{name}-{d}");
                if graph.node(&node_id).is_some() {
                    continue;
                }
                let mut node = Node::new(&node_id, *label);
                for prop in *props {
                    // leave some values at the sentinel
                    let value = if rng.gen_bool(0.8) {
                        format!("{name} {prop}")
                    } else {
                        "unknown".to_string()
                    };
                    node.properties.insert(prop.to_string(), value);
                }
                graph.add_node(node).expect("valid node");
                graph
                    .add_edge(Edge::new(&enc_id, *edge_type, &node_id))
                    .expect("valid edge");
            }
        }
    }
    graph.check_invariants().expect("generated graph is valid");
    graph
}
