//! End-to-end graph construction: patient profile subgraph, ordered
//! per-encounter extraction → validation → subgraph → union into the
//! patient's graph, and the corpus-level driver.

use crate::extraction::{
    extract, EncounterInput, ExtractError, ExtractionBackend, ExtractionResult, DEFAULT_SENTINEL,
};
use crate::graph::{Edge, GraphError, Node, PropertyGraph, Subgraph};
use crate::ontology::{OntologySchema, HAS_FOLLOWUP, HAS_START};
use crate::validation::{validate_all, ValidationError, ValidationReport};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

/// One patient's full input: intake data plus the ordered encounters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientBundle {
    pub profile: BTreeMap<String, String>,
    pub medical_history: BTreeMap<String, String>,
    pub social_history: BTreeMap<String, String>,
    #[serde(default)]
    pub encounters: Vec<EncounterInput>,
}

impl PatientBundle {
    pub fn patient_id(&self) -> Option<&str> {
        self.profile.get("ID").map(String::as_str).filter(|s| !s.is_empty())
    }
}

/// Result of building one patient's graph.
#[derive(Debug)]
pub struct BuildOutcome {
    pub pjkg: PropertyGraph,
    pub per_encounter_reports: Vec<(String, Option<ValidationReport>)>,
    pub skipped: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("patient bundle has no ID")]
    MissingPatientId,
    #[error("duplicate patient id: {0}")]
    DuplicatePatientId(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("encounter {0} failed validation in strict mode")]
    StrictValidationFailure(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("failed to load bundle: {0}")]
    BundleIo(String),
}

/// Build policy knobs.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Abort the patient on the first validation failure instead of
    /// skip-and-continue.
    pub strict: bool,
    /// Fail syntactic validation on unknown keys.
    pub strict_schema: bool,
    pub max_retries: u32,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            strict: false,
            strict_schema: true,
            max_retries: 2,
        }
    }
}

/// Lowercase, trim, collapse internal whitespace. Used for detail-node
/// ids and entity matching.
pub fn normalize_name(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn props_from_map(
    class_props: &[&str],
    values: &BTreeMap<String, String>,
) -> BTreeMap<String, String> {
    class_props
        .iter()
        .map(|name| {
            let value = values
                .get(*name)
                .filter(|v| !v.is_empty())
                .cloned()
                .unwrap_or_else(|| DEFAULT_SENTINEL.to_string());
            (name.to_string(), value)
        })
        .collect()
}

/// Builds the profile subgraph: the Patient node with its intake fields
/// as properties, plus MedicalHistory and SocialHistory nodes linked via
/// HAS_MEDICAL_HISTORY / HAS_SOCIAL_HISTORY.
pub fn build_patient_profile(bundle: &PatientBundle) -> Result<Subgraph, PipelineError> {
    let patient_id = bundle.patient_id().ok_or(PipelineError::MissingPatientId)?;
    let mut sub = Subgraph::default();

    let patient_props = [
        "ID",
        "Name",
        "DoB",
        "Gender",
        "Race",
        "Contact Info",
        "Insurance Name",
        "Insurance ID",
    ];
    let mut patient = Node::new(patient_id, "Patient");
    patient.properties = props_from_map(&patient_props, &bundle.profile);
    patient.properties.insert("ID".to_string(), patient_id.to_string());
    sub.push_node(patient);

    let medical_props = [
        "Family History",
        "Surgeries",
        "Chronic Illnesses",
        "Allergies",
        "Current Medications",
    ];
    let medical_id = format!("{patient_id}:MedicalHistory");
    let mut medical = Node::new(&medical_id, "MedicalHistory");
    medical.properties = props_from_map(&medical_props, &bundle.medical_history);
    sub.push_node(medical);
    sub.push_edge(Edge::new(patient_id, "HAS_MEDICAL_HISTORY", &medical_id));

    let social_props = [
        "Exercise",
        "Diet",
        "Drinking",
        "Smoking",
        "Occupation",
        "Marital Status",
        "Education Level",
        "Annual Income",
    ];
    let social_id = format!("{patient_id}:SocialHistory");
    let mut social = Node::new(&social_id, "SocialHistory");
    social.properties = props_from_map(&social_props, &bundle.social_history);
    sub.push_node(social);
    sub.push_edge(Edge::new(patient_id, "HAS_SOCIAL_HISTORY", &social_id));

    Ok(sub)
}

/// Deterministic encounter node id: `<patient>:<sequence index>`.
pub fn encounter_node_id(patient_id: &str, j: usize) -> String {
    format!("{patient_id}:{j}")
}

/// Turns a validated extraction into the encounter subgraph: the
/// Encounter node, one detail node per non-default extracted item, and
/// the journey edge. `predecessor` is the node id of the last integrated
/// encounter; the first encounter (j = 1) always links from the patient
/// via HAS_START regardless of what the model proposed.
pub fn encounter_to_subgraph(
    patient_id: &str,
    j: usize,
    result: &ExtractionResult,
    predecessor: Option<&str>,
) -> Subgraph {
    let mut sub = Subgraph::default();
    let enc_id = encounter_node_id(patient_id, j);

    let encounter = Node::new(&enc_id, "Encounter")
        .with_property("Encounter Number", &result.encounter.encounter_number)
        .with_property("Date", &result.encounter.date)
        .with_property("Time", &result.encounter.time);
    sub.push_node(encounter);

    match predecessor {
        None => sub.push_edge(Edge::new(patient_id, HAS_START, &enc_id)),
        Some(prev) => {
            let link_type = match result.journey_link.link_type.as_str() {
                // downgraded HAS_START on a non-first encounter; validation
                // already recorded the warning
                HAS_START => HAS_FOLLOWUP,
                other => other,
            };
            sub.push_edge(Edge::new(prev, link_type, &enc_id));
        }
    }

    let mut named_detail = |label: &str, edge_type: &str, name: &str, props: Vec<(&str, &str)>| {
        let normalized = normalize_name(name);
        if normalized.is_empty() || normalized == DEFAULT_SENTINEL {
            return;
        }
        let id = format!("{enc_id}:{label}:{normalized}");
        let mut node = Node::new(&id, label);
        for (key, value) in props {
            node.properties.insert(key.to_string(), value.to_string());
        }
        sub.push_node(node);
        sub.push_edge(Edge::new(&enc_id, edge_type, &id));
    };

    for item in &result.symptoms {
        named_detail(
            "Symptoms",
            "HAS_SYMPTOM",
            &item.name,
            vec![("Name", &item.name), ("Severity", &item.severity)],
        );
    }
    for item in &result.diagnoses {
        named_detail(
            "Diagnosis",
            "HAS_DIAGNOSIS",
            &item.name,
            vec![("Name", &item.name), ("ICD-10", &item.icd10)],
        );
    }
    for item in &result.medications {
        named_detail(
            "Medications",
            "HAS_MEDICATION",
            &item.name,
            vec![("Name", &item.name), ("Dosage", &item.dosage)],
        );
    }
    for item in &result.diagnostic_tests {
        named_detail(
            "DiagnosticTests",
            "HAS_TEST",
            &item.test_name,
            vec![("Test Name", &item.test_name), ("Results", &item.results)],
        );
    }

    // singleton-per-encounter detail nodes
    let vitals = &result.vital_signs;
    if [&vitals.blood_pressure, &vitals.heart_rate, &vitals.weight]
        .iter()
        .any(|v| v.as_str() != DEFAULT_SENTINEL)
    {
        let id = format!("{enc_id}:VitalSigns");
        let node = Node::new(&id, "VitalSigns")
            .with_property("Blood Pressure", &vitals.blood_pressure)
            .with_property("Heart Rate", &vitals.heart_rate)
            .with_property("Weight", &vitals.weight);
        sub.push_node(node);
        sub.push_edge(Edge::new(&enc_id, "HAS_VITALSIGN", &id));
    }
    let assessment_id = format!("{enc_id}:Assessment");
    sub.push_node(Node::new(&assessment_id, "Assessment").with_property("Text", &result.assessment.text));
    sub.push_edge(Edge::new(&enc_id, "HAS_ASSESSMENT", &assessment_id));
    let careplan_id = format!("{enc_id}:CarePlan");
    sub.push_node(Node::new(&careplan_id, "CarePlan").with_property("Text", &result.care_plan.text));
    sub.push_edge(Edge::new(&enc_id, "HAS_CAREPLAN", &careplan_id));

    sub
}

/// Builds one patient's PJKG: profile first, then every encounter in
/// order. Failing encounters are skipped with a reason and the journey
/// chain continues from the last successfully integrated encounter.
pub fn build_pjkg(
    bundle: &PatientBundle,
    backend: &dyn ExtractionBackend,
    schema: Arc<OntologySchema>,
    options: &BuildOptions,
) -> Result<BuildOutcome, PipelineError> {
    let patient_id = bundle
        .patient_id()
        .ok_or(PipelineError::MissingPatientId)?
        .to_string();
    let mut graph = PropertyGraph::new(Arc::clone(&schema));
    graph.merge_subgraph(&build_patient_profile(bundle)?)?;

    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut integrated_history: Vec<EncounterInput> = Vec::new();
    let mut predecessor: Option<String> = None;

    for (index, enc) in bundle.encounters.iter().enumerate() {
        let j = index + 1;
        let first = predecessor.is_none();
        let skip = |reason: String,
                        report: Option<ValidationReport>,
                        reports: &mut Vec<(String, Option<ValidationReport>)>,
                        skipped: &mut Vec<(String, String)>|
         -> Result<(), PipelineError> {
            if options.strict {
                return Err(PipelineError::StrictValidationFailure(
                    enc.encounter_id.clone(),
                ));
            }
            reports.push((enc.encounter_id.clone(), report));
            skipped.push((enc.encounter_id.clone(), reason));
            Ok(())
        };

        if let Err(e) = enc.check() {
            skip(e.to_string(), None, &mut reports, &mut skipped)?;
            continue;
        }

        let result = match extract(
            enc,
            backend,
            &schema,
            enc_input_id(&integrated_history),
            options.max_retries,
        ) {
            Ok(result) => result,
            Err(ExtractError::BackendUnavailable(msg)) => {
                return Err(PipelineError::BackendUnavailable(msg));
            }
            Err(e) => {
                skip(e.to_string(), None, &mut reports, &mut skipped)?;
                continue;
            }
        };

        // validate the re-serialized result so syntactic checks see the
        // canonical document shape
        let doc = serde_json::to_value(&result).expect("result serializes");
        let mut history = integrated_history.clone();
        history.push(enc.clone());
        let report = match validate_all(&doc, &schema, &history, first, options.strict_schema) {
            Ok(report) => report,
            Err(ValidationError::UnparseableTimestamp { value, .. }) => {
                skip(
                    format!("unparseable timestamp: {value}"),
                    None,
                    &mut reports,
                    &mut skipped,
                )?;
                continue;
            }
        };
        if !report.overall_pass() {
            skip(
                summarize_failure(&report),
                Some(report),
                &mut reports,
                &mut skipped,
            )?;
            continue;
        }

        let sub = encounter_to_subgraph(&patient_id, j, &result, predecessor.as_deref());
        match graph.merge_subgraph(&sub) {
            Ok(_) => {
                reports.push((enc.encounter_id.clone(), Some(report)));
                integrated_history.push(enc.clone());
                predecessor = Some(encounter_node_id(&patient_id, j));
            }
            Err(e) => {
                skip(e.to_string(), Some(report), &mut reports, &mut skipped)?;
            }
        }
    }

    graph.check_invariants()?;
    Ok(BuildOutcome {
        pjkg: graph,
        per_encounter_reports: reports,
        skipped,
    })
}

fn enc_input_id(history: &[EncounterInput]) -> Option<&str> {
    history.last().map(|e| e.encounter_id.as_str())
}

fn summarize_failure(report: &ValidationReport) -> String {
    let mut parts = Vec::new();
    for (name, stage) in [
        ("syntactic", &report.syntactic),
        ("semantic", &report.semantic),
        ("temporal", &report.temporal),
    ] {
        if !stage.passed && !stage.skipped {
            let detail = stage
                .issues
                .first()
                .map(|i| format!("{}: {}", i.location, i.message))
                .unwrap_or_default();
            parts.push(format!("{name} validation failed ({detail})"));
        }
    }
    parts.join("; ")
}

/// Builds every bundle in the corpus. Patient IDs must be distinct;
/// bundles are independent.
pub fn build_corpus(
    bundles: &[PatientBundle],
    backend: &dyn ExtractionBackend,
    schema: Arc<OntologySchema>,
    options: &BuildOptions,
) -> Result<Vec<BuildOutcome>, PipelineError> {
    let mut seen = HashSet::new();
    for bundle in bundles {
        let id = bundle.patient_id().ok_or(PipelineError::MissingPatientId)?;
        if !seen.insert(id.to_string()) {
            return Err(PipelineError::DuplicatePatientId(id.to_string()));
        }
    }
    bundles
        .iter()
        .map(|bundle| build_pjkg(bundle, backend, Arc::clone(&schema), options))
        .collect()
}

/// Merges per-patient graphs into one corpus graph.
pub fn union_graphs(
    outcomes: &[BuildOutcome],
    schema: Arc<OntologySchema>,
) -> Result<PropertyGraph, GraphError> {
    let mut corpus = PropertyGraph::new(schema);
    for outcome in outcomes {
        let sub = Subgraph {
            nodes: outcome.pjkg.nodes().cloned().collect(),
            edges: outcome.pjkg.edges().cloned().collect(),
        };
        corpus.merge_subgraph(&sub)?;
    }
    Ok(corpus)
}

/// Loads a patient bundle from the on-disk layout:
/// `<dir>/patient.json` plus `<dir>/encounters/<j>_<id>.json` in
/// lexicographic order.
pub fn load_bundle(dir: &Path) -> Result<PatientBundle, PipelineError> {
    let io = |e: std::io::Error| PipelineError::BundleIo(format!("{}: {e}", dir.display()));
    let text = std::fs::read_to_string(dir.join("patient.json")).map_err(io)?;
    let mut bundle: PatientBundle = serde_json::from_str(&text)
        .map_err(|e| PipelineError::BundleIo(format!("{}/patient.json: {e}", dir.display())))?;

    let enc_dir = dir.join("encounters");
    if enc_dir.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(&enc_dir)
            .map_err(io)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
            .collect();
        files.sort();
        for file in files {
            let text = std::fs::read_to_string(&file).map_err(io)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| PipelineError::BundleIo(format!("{}: {e}", file.display())))?;
            bundle.encounters.push(EncounterInput {
                encounter_id: value["id"].as_str().unwrap_or_default().to_string(),
                date: value["date"].as_str().unwrap_or_default().to_string(),
                time: value["time"].as_str().unwrap_or_default().to_string(),
                transcript: value["transcript"].as_str().unwrap_or_default().to_string(),
            });
        }
    }
    Ok(bundle)
}

/// Loads every bundle directory under a corpus root, in id order.
pub fn load_corpus(root: &Path) -> Result<Vec<PatientBundle>, PipelineError> {
    let io = |e: std::io::Error| PipelineError::BundleIo(format!("{}: {e}", root.display()));
    let mut dirs: Vec<_> = std::fs::read_dir(root)
        .map_err(io)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("patient.json").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|dir| load_bundle(dir)).collect()
}
