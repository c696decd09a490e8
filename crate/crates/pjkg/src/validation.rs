//! The three-stage quality gate run on every extraction before it is
//! integrated: syntactic (structure of the JSON document), semantic
//! (entities and relationship types against the ontology), and temporal
//! (strictly increasing encounter timestamps).
//!
//! Failures are reported, not thrown; the only hard error is an
//! unparseable timestamp, because ordering is undecidable without it.

use crate::extraction::{EncounterInput, DEFAULT_SENTINEL};
use crate::ontology::{OntologySchema, HAS_START, JOURNEY_EDGE_TYPES};
use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Syntactic,
    Semantic,
    Temporal,
}

/// One located validation problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub stage: Stage,
    /// JSON path or encounter pair, e.g. `diagnoses[0].icd10` or `(1,2)`.
    pub location: String,
    pub message: String,
}

/// Outcome of a single stage. `passed` with empty issues, or failed with
/// at least one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageOutcome {
    pub passed: bool,
    pub issues: Vec<Issue>,
    /// A skipped stage (earlier gate failed) is marked so the report says
    /// why it carries no issues.
    pub skipped: bool,
}

impl StageOutcome {
    fn pass() -> StageOutcome {
        StageOutcome {
            passed: true,
            issues: vec![],
            skipped: false,
        }
    }

    fn from_issues(issues: Vec<Issue>) -> StageOutcome {
        StageOutcome {
            passed: issues.is_empty(),
            issues,
            skipped: false,
        }
    }

    fn skipped() -> StageOutcome {
        StageOutcome {
            passed: false,
            issues: vec![],
            skipped: true,
        }
    }
}

/// Combined report over the three stages plus non-fatal warnings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub syntactic: StageOutcome,
    pub semantic: StageOutcome,
    pub temporal: StageOutcome,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn overall_pass(&self) -> bool {
        self.syntactic.passed && self.semantic.passed && self.temporal.passed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("unparseable timestamp for encounter {encounter_id}: {value}")]
    UnparseableTimestamp { encounter_id: String, value: String },
}

/// Leaf kinds expected by the wire schema.
enum Kind {
    Str,
    Obj(&'static [(&'static str, Kind)]),
    Arr(&'static [(&'static str, Kind)]),
}

const WIRE_SCHEMA: [(&str, Kind); 9] = [
    (
        "encounter",
        Kind::Obj(&[
            ("encounter_number", Kind::Str),
            ("date", Kind::Str),
            ("time", Kind::Str),
        ]),
    ),
    (
        "symptoms",
        Kind::Arr(&[("name", Kind::Str), ("severity", Kind::Str)]),
    ),
    (
        "diagnoses",
        Kind::Arr(&[("name", Kind::Str), ("icd10", Kind::Str)]),
    ),
    (
        "medications",
        Kind::Arr(&[("name", Kind::Str), ("dosage", Kind::Str)]),
    ),
    (
        "diagnostic_tests",
        Kind::Arr(&[("test_name", Kind::Str), ("results", Kind::Str)]),
    ),
    (
        "vital_signs",
        Kind::Obj(&[
            ("blood_pressure", Kind::Str),
            ("heart_rate", Kind::Str),
            ("weight", Kind::Str),
        ]),
    ),
    ("assessment", Kind::Obj(&[("text", Kind::Str)])),
    ("care_plan", Kind::Obj(&[("text", Kind::Str)])),
    ("journey_link", Kind::Obj(&[("type", Kind::Str)])),
];

/// Checks the raw extraction document against the wire schema: required
/// keys present, kinds correct, and in strict mode no unknown keys.
pub fn validate_syntactic(doc: &Value, strict: bool) -> StageOutcome {
    let mut issues = Vec::new();
    let issue = |issues: &mut Vec<Issue>, location: String, message: String| {
        issues.push(Issue {
            stage: Stage::Syntactic,
            location,
            message,
        });
    };

    let Some(root) = doc.as_object() else {
        issue(&mut issues, "$".to_string(), "document is not a JSON object".to_string());
        return StageOutcome::from_issues(issues);
    };

    for (key, kind) in &WIRE_SCHEMA {
        let Some(value) = root.get(*key) else {
            issue(&mut issues, (*key).to_string(), "required key missing".to_string());
            continue;
        };
        check_kind(value, kind, key, strict, &mut issues);
    }
    if strict {
        for key in root.keys() {
            if !WIRE_SCHEMA.iter().any(|(k, _)| k == key) {
                issue(&mut issues, key.clone(), "unknown key".to_string());
            }
        }
    }

    // target_encounter is required for chain links and forbidden on HAS_START
    if let Some(link) = root.get("journey_link").and_then(Value::as_object) {
        let link_type = link.get("type").and_then(Value::as_str).unwrap_or("");
        let has_target = link
            .get("target_encounter")
            .map(|v| !v.is_null())
            .unwrap_or(false);
        if link_type == HAS_START && has_target {
            issue(
                &mut issues,
                "journey_link.target_encounter".to_string(),
                "must be absent when type is HAS_START".to_string(),
            );
        }
        if link_type != HAS_START && JOURNEY_EDGE_TYPES.contains(&link_type) && !has_target {
            issue(
                &mut issues,
                "journey_link.target_encounter".to_string(),
                format!("required when type is {link_type}"),
            );
        }
    }

    StageOutcome::from_issues(issues)
}

fn check_kind(value: &Value, kind: &Kind, path: &str, strict: bool, issues: &mut Vec<Issue>) {
    match kind {
        Kind::Str => {
            if !value.is_string() {
                issues.push(Issue {
                    stage: Stage::Syntactic,
                    location: path.to_string(),
                    message: "expected a string".to_string(),
                });
            }
        }
        Kind::Obj(fields) => {
            let Some(map) = value.as_object() else {
                issues.push(Issue {
                    stage: Stage::Syntactic,
                    location: path.to_string(),
                    message: "expected an object".to_string(),
                });
                return;
            };
            for (name, field_kind) in *fields {
                match map.get(*name) {
                    Some(inner) => {
                        check_kind(inner, field_kind, &format!("{path}.{name}"), strict, issues)
                    }
                    None => issues.push(Issue {
                        stage: Stage::Syntactic,
                        location: format!("{path}.{name}"),
                        message: "required key missing".to_string(),
                    }),
                }
            }
            if strict && path != "journey_link" {
                for name in map.keys() {
                    if !fields.iter().any(|(f, _)| f == name) {
                        issues.push(Issue {
                            stage: Stage::Syntactic,
                            location: format!("{path}.{name}"),
                            message: "unknown key".to_string(),
                        });
                    }
                }
            }
            if strict && path == "journey_link" {
                for name in map.keys() {
                    if name != "type" && name != "target_encounter" {
                        issues.push(Issue {
                            stage: Stage::Syntactic,
                            location: format!("{path}.{name}"),
                            message: "unknown key".to_string(),
                        });
                    }
                }
            }
        }
        Kind::Arr(fields) => {
            let Some(items) = value.as_array() else {
                issues.push(Issue {
                    stage: Stage::Syntactic,
                    location: path.to_string(),
                    message: "expected an array".to_string(),
                });
                return;
            };
            for (i, item) in items.iter().enumerate() {
                check_kind(item, &Kind::Obj(fields), &format!("{path}[{i}]"), strict, issues);
            }
        }
    }
}

/// Shape check for ICD-10 codes: letter, two digits, optional dot suffix.
/// The sentinel value is allowed.
pub fn icd10_shape_ok(code: &str) -> bool {
    if code == DEFAULT_SENTINEL {
        return true;
    }
    let bytes = code.as_bytes();
    if bytes.len() < 3
        || !bytes[0].is_ascii_alphabetic()
        || !bytes[1].is_ascii_digit()
        || !bytes[2].is_ascii_digit()
    {
        return false;
    }
    match &bytes[3..] {
        [] => true,
        [b'.', rest @ ..] => !rest.is_empty() && rest.iter().all(u8::is_ascii_alphanumeric),
        _ => false,
    }
}

/// Checks extracted entities and the journey link against the ontology.
/// A model-asserted HAS_START on a non-first encounter is downgraded to a
/// warning; everything else out of vocabulary fails the stage.
pub fn validate_semantic(
    doc: &Value,
    schema: &OntologySchema,
    first_encounter: bool,
) -> (StageOutcome, Vec<String>) {
    let mut issues = Vec::new();
    let mut warnings = Vec::new();

    // every extracted entity category must map to a schema class
    let category_to_class = [
        ("symptoms", "Symptoms"),
        ("diagnoses", "Diagnosis"),
        ("medications", "Medications"),
        ("diagnostic_tests", "DiagnosticTests"),
        ("vital_signs", "VitalSigns"),
        ("assessment", "Assessment"),
        ("care_plan", "CarePlan"),
        ("encounter", "Encounter"),
    ];
    for (category, label) in category_to_class {
        if doc.get(category).is_some() && schema.lookup_class(label).is_err() {
            issues.push(Issue {
                stage: Stage::Semantic,
                location: category.to_string(),
                message: format!("category maps to no ontology class ({label})"),
            });
        }
    }

    if let Some(items) = doc.get("diagnoses").and_then(Value::as_array) {
        for (i, item) in items.iter().enumerate() {
            if let Some(code) = item.get("icd10").and_then(Value::as_str) {
                if !icd10_shape_ok(code) {
                    issues.push(Issue {
                        stage: Stage::Semantic,
                        location: format!("diagnoses[{i}].icd10"),
                        message: format!("malformed ICD-10 code: {code}"),
                    });
                }
            }
        }
    }

    let link_type = doc
        .pointer("/journey_link/type")
        .and_then(Value::as_str)
        .unwrap_or("");
    if !JOURNEY_EDGE_TYPES.contains(&link_type) {
        issues.push(Issue {
            stage: Stage::Semantic,
            location: "journey_link.type".to_string(),
            message: format!("relationship type {link_type} is not in the ontology"),
        });
    } else if link_type == HAS_START && !first_encounter {
        warnings.push(
            "HAS_START asserted on a non-first encounter; the ontology restricts it to the \
             first encounter"
                .to_string(),
        );
    } else if link_type != HAS_START && first_encounter {
        warnings.push(format!(
            "model proposed {link_type} for the first encounter; HAS_START is forced"
        ));
    }

    (StageOutcome::from_issues(issues), warnings)
}

fn timestamp(enc: &EncounterInput) -> Result<NaiveDateTime, ValidationError> {
    let date = NaiveDate::parse_from_str(&enc.date, "%Y-%m-%d");
    let time = NaiveTime::parse_from_str(&enc.time, "%H:%M");
    match (date, time) {
        (Ok(d), Ok(t)) => Ok(d.and_time(t)),
        _ => Err(ValidationError::UnparseableTimestamp {
            encounter_id: enc.encounter_id.clone(),
            value: format!("{} {}", enc.date, enc.time),
        }),
    }
}

/// Checks that combined date+time timestamps are strictly increasing in
/// index order. Equal timestamps fail.
pub fn validate_temporal(
    encounters: &[EncounterInput],
) -> Result<StageOutcome, ValidationError> {
    let stamps: Vec<NaiveDateTime> = encounters
        .iter()
        .map(timestamp)
        .collect::<Result<_, _>>()?;
    let mut issues = Vec::new();
    for i in 1..stamps.len() {
        if stamps[i] <= stamps[i - 1] {
            issues.push(Issue {
                stage: Stage::Temporal,
                location: format!("({},{})", i, i + 1),
                message: format!(
                    "encounter {} ({}) is not strictly after encounter {} ({})",
                    encounters[i].encounter_id,
                    stamps[i],
                    encounters[i - 1].encounter_id,
                    stamps[i - 1]
                ),
            });
        }
    }
    Ok(StageOutcome::from_issues(issues))
}

/// Runs all three stages over one extraction. Semantic is skipped when
/// syntactic failed; temporal runs over the full per-patient history with
/// the new encounter appended.
pub fn validate_all(
    doc: &Value,
    schema: &OntologySchema,
    encounter_history: &[EncounterInput],
    first_encounter: bool,
    strict: bool,
) -> Result<ValidationReport, ValidationError> {
    let syntactic = validate_syntactic(doc, strict);
    let (semantic, warnings) = if syntactic.passed {
        validate_semantic(doc, schema, first_encounter)
    } else {
        (StageOutcome::skipped(), vec![])
    };
    let temporal = if encounter_history.is_empty() {
        StageOutcome::pass()
    } else {
        validate_temporal(encounter_history)?
    };
    Ok(ValidationReport {
        syntactic,
        semantic,
        temporal,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn valid_doc() -> Value {
        json!({
            "encounter": {"encounter_number": "1", "date": "2024-01-08", "time": "09:30"},
            "symptoms": [{"name": "dizziness", "severity": "mild"}],
            "diagnoses": [{"name": "mitral valve regurgitation", "icd10": "I34.0"}],
            "medications": [{"name": "metoprolol", "dosage": "50mg daily"}],
            "diagnostic_tests": [{"test_name": "chest X-ray", "results": "mild cardiomegaly"}],
            "vital_signs": {"blood_pressure": "142/88", "heart_rate": "78", "weight": "84 kg"},
            "assessment": {"text": "stable"},
            "care_plan": {"text": "follow up"},
            "journey_link": {"type": "HAS_START"}
        })
    }

    fn enc(id: &str, date: &str, time: &str) -> EncounterInput {
        EncounterInput {
            encounter_id: id.to_string(),
            date: date.to_string(),
            time: time.to_string(),
            transcript: String::new(),
        }
    }

    #[test]
    fn valid_document_passes_syntactic() {
        let outcome = validate_syntactic(&valid_doc(), true);
        assert!(outcome.passed, "{:?}", outcome.issues);
    }

    #[test]
    fn missing_nested_key_located() {
        let mut doc = valid_doc();
        doc["diagnoses"][0].as_object_mut().unwrap().remove("icd10");
        let outcome = validate_syntactic(&doc, true);
        assert!(!outcome.passed);
        assert!(outcome
            .issues
            .iter()
            .any(|i| i.location == "diagnoses[0].icd10"));
    }

    #[test]
    fn unknown_top_level_key_fails_strict_only() {
        let mut doc = valid_doc();
        doc.as_object_mut()
            .unwrap()
            .insert("allergies".to_string(), json!([]));
        assert!(!validate_syntactic(&doc, true).passed);
        assert!(validate_syntactic(&doc, false).passed);
    }

    #[test]
    fn has_start_with_target_fails() {
        let mut doc = valid_doc();
        doc["journey_link"]
            .as_object_mut()
            .unwrap()
            .insert("target_encounter".to_string(), json!("E0"));
        assert!(!validate_syntactic(&doc, true).passed);
    }

    #[test]
    fn chain_link_without_target_fails() {
        let mut doc = valid_doc();
        doc["journey_link"] = json!({"type": "HAS_FOLLOWUP"});
        assert!(!validate_syntactic(&doc, true).passed);
    }

    #[test]
    fn semantic_rejects_unknown_relationship_type() {
        let schema = OntologySchema::default_schema();
        let mut doc = valid_doc();
        doc["journey_link"] = json!({"type": "TREATS", "target_encounter": "E0"});
        let (outcome, _) = validate_semantic(&doc, &schema, false);
        assert!(!outcome.passed);
    }

    #[test]
    fn semantic_downgrades_late_has_start_to_warning() {
        let schema = OntologySchema::default_schema();
        let (outcome, warnings) = validate_semantic(&valid_doc(), &schema, false);
        assert!(outcome.passed);
        assert_eq!(warnings.len(), 1);
        let (outcome, warnings) = validate_semantic(&valid_doc(), &schema, true);
        assert!(outcome.passed);
        assert!(warnings.is_empty());
    }

    #[test]
    fn icd10_shapes() {
        assert!(icd10_shape_ok("I34.0"));
        assert!(icd10_shape_ok("J20"));
        assert!(icd10_shape_ok("Z48.812"));
        assert!(icd10_shape_ok("unknown"));
        assert!(!icd10_shape_ok("34.0"));
        assert!(!icd10_shape_ok("I3"));
        assert!(!icd10_shape_ok("I34."));
        assert!(!icd10_shape_ok("I34-0"));
    }

    #[test]
    fn semantic_rejects_malformed_icd10() {
        let schema = OntologySchema::default_schema();
        let mut doc = valid_doc();
        doc["diagnoses"][0]["icd10"] = json!("not-a-code");
        let (outcome, _) = validate_semantic(&doc, &schema, true);
        assert!(!outcome.passed);
    }

    #[test]
    fn temporal_strictly_increasing() {
        let list = vec![
            enc("E1", "2024-01-05", "09:00"),
            enc("E2", "2024-02-10", "09:00"),
            enc("E3", "2024-03-01", "09:00"),
        ];
        assert!(validate_temporal(&list).unwrap().passed);
    }

    #[test]
    fn temporal_rejects_out_of_order_naming_pair() {
        let list = vec![
            enc("E1", "2024-02-10", "09:00"),
            enc("E2", "2024-01-05", "09:00"),
        ];
        let outcome = validate_temporal(&list).unwrap();
        assert!(!outcome.passed);
        assert_eq!(outcome.issues[0].location, "(1,2)");
    }

    #[test]
    fn temporal_rejects_equal_timestamps() {
        let list = vec![
            enc("E1", "2024-01-05", "09:00"),
            enc("E2", "2024-01-05", "09:00"),
        ];
        assert!(!validate_temporal(&list).unwrap().passed);
    }

    #[test]
    fn temporal_hard_errors_on_unparseable() {
        let list = vec![enc("E1", "last Tuesday", "09:00")];
        assert!(matches!(
            validate_temporal(&list),
            Err(ValidationError::UnparseableTimestamp { .. })
        ));
    }

    #[test]
    fn validate_all_gates_semantic_on_syntactic_failure() {
        let schema = OntologySchema::default_schema();
        let report = validate_all(&json!("nonsense"), &schema, &[], true, true).unwrap();
        assert!(!report.syntactic.passed);
        assert!(report.semantic.skipped);
        assert!(!report.overall_pass());
    }

    #[test]
    fn validate_all_fully_valid() {
        let schema = OntologySchema::default_schema();
        let history = vec![enc("E1", "2024-01-08", "09:30")];
        let report = validate_all(&valid_doc(), &schema, &history, true, true).unwrap();
        assert!(report.overall_pass());
        assert!(report.syntactic.issues.is_empty());
        assert!(report.semantic.issues.is_empty());
        assert!(report.temporal.issues.is_empty());
    }

    #[test]
    fn validate_all_flags_only_temporal_on_date_swap() {
        let schema = OntologySchema::default_schema();
        let history = vec![
            enc("E1", "2024-02-10", "09:00"),
            enc("E2", "2024-01-05", "09:00"),
        ];
        let mut doc = valid_doc();
        doc["journey_link"] = json!({"type": "HAS_FOLLOWUP", "target_encounter": "E1"});
        let report = validate_all(&doc, &schema, &history, false, true).unwrap();
        assert!(report.syntactic.passed);
        assert!(report.semantic.passed);
        assert!(!report.temporal.passed);
        assert!(!report.overall_pass());
    }
}
