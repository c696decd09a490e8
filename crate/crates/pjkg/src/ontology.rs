//! The PJKG schema registry: node classes, their properties, and typed
//! relationship definitions with domain/range constraints.
//!
//! The default schema is embedded and is the single source of truth for
//! validation, graph integration, and the structural metrics. Alternate
//! schemas can be loaded from a JSON document with the same shape.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

/// Value kind of a node property. Everything is stored as text; the kind
/// records how the text should parse where validation needs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    Text,
    Date,
    Time,
    NumericAsText,
}

/// A property on a node class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub name: String,
    pub value_kind: ValueKind,
    pub required: bool,
}

impl PropertyDef {
    fn text(name: &str) -> Self {
        PropertyDef {
            name: name.to_string(),
            value_kind: ValueKind::Text,
            required: false,
        }
    }
}

/// A node class: label plus its property inventory. `parent` groups
/// encounter detail classes under `Encounter` and the intake classes
/// under the abstract `IntakeForm`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDef {
    pub label: String,
    pub properties: Vec<PropertyDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

impl ClassDef {
    pub fn property(&self, name: &str) -> Option<&PropertyDef> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// Cardinality of a relationship type from the perspective of the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    One,
    Many,
}

/// A typed relationship with domain/range constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationshipDef {
    pub type_name: String,
    pub source_label: String,
    pub target_label: String,
    pub cardinality: Cardinality,
    pub description: String,
}

/// The full schema: classes, relationships, and a version string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologySchema {
    pub classes: Vec<ClassDef>,
    pub relationships: Vec<RelationshipDef>,
    pub version: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchemaError {
    #[error("unknown class label: {0}")]
    UnknownClass(String),
    #[error("unknown relationship type: {0}")]
    UnknownRelationship(String),
    #[error("schema has no classes")]
    EmptySchema,
    #[error("invalid schema: {0}")]
    Invalid(String),
}

/// Journey edge types, in chain order of preference: patient start, then
/// the inter-encounter links.
pub const JOURNEY_EDGE_TYPES: [&str; 4] = ["HAS_START", "HAS_FOLLOWUP", "NEXT", "CAUSED_BY"];

/// Edge types that continue a journey chain between encounters.
pub const CHAIN_EDGE_TYPES: [&str; 3] = ["HAS_FOLLOWUP", "NEXT", "CAUSED_BY"];

pub const HAS_START: &str = "HAS_START";
pub const HAS_FOLLOWUP: &str = "HAS_FOLLOWUP";
pub const NEXT: &str = "NEXT";
pub const CAUSED_BY: &str = "CAUSED_BY";

impl OntologySchema {
    /// Builds the embedded default PJKG schema: 11 classes, 37 properties,
    /// 13 relationship types.
    pub fn default_schema() -> OntologySchema {
        use ValueKind::*;

        let class = |label: &str, parent: Option<&str>, props: Vec<PropertyDef>| ClassDef {
            label: label.to_string(),
            properties: props,
            parent: parent.map(str::to_string),
        };
        let prop = |name: &str, kind: ValueKind| PropertyDef {
            name: name.to_string(),
            value_kind: kind,
            required: false,
        };

        let classes = vec![
            class(
                "Patient",
                None,
                vec![
                    prop("ID", Text),
                    prop("Name", Text),
                    prop("DoB", Date),
                    prop("Gender", Text),
                    prop("Race", Text),
                    prop("Contact Info", Text),
                    prop("Insurance Name", Text),
                    prop("Insurance ID", Text),
                ],
            ),
            class(
                "SocialHistory",
                Some("IntakeForm"),
                vec![
                    PropertyDef::text("Exercise"),
                    PropertyDef::text("Diet"),
                    PropertyDef::text("Drinking"),
                    PropertyDef::text("Smoking"),
                    PropertyDef::text("Occupation"),
                    PropertyDef::text("Marital Status"),
                    PropertyDef::text("Education Level"),
                    prop("Annual Income", NumericAsText),
                ],
            ),
            class(
                "MedicalHistory",
                Some("IntakeForm"),
                vec![
                    PropertyDef::text("Family History"),
                    PropertyDef::text("Surgeries"),
                    PropertyDef::text("Chronic Illnesses"),
                    PropertyDef::text("Allergies"),
                    PropertyDef::text("Current Medications"),
                ],
            ),
            class(
                "Encounter",
                None,
                vec![
                    prop("Encounter Number", NumericAsText),
                    prop("Date", Date),
                    prop("Time", Time),
                ],
            ),
            class(
                "Diagnosis",
                Some("Encounter"),
                vec![PropertyDef::text("Name"), PropertyDef::text("ICD-10")],
            ),
            class(
                "Symptoms",
                Some("Encounter"),
                vec![PropertyDef::text("Name"), PropertyDef::text("Severity")],
            ),
            class(
                "Medications",
                Some("Encounter"),
                vec![PropertyDef::text("Name"), PropertyDef::text("Dosage")],
            ),
            class(
                "DiagnosticTests",
                Some("Encounter"),
                vec![PropertyDef::text("Test Name"), PropertyDef::text("Results")],
            ),
            class("CarePlan", Some("Encounter"), vec![PropertyDef::text("Text")]),
            class(
                "Assessment",
                Some("Encounter"),
                vec![PropertyDef::text("Text")],
            ),
            class(
                "VitalSigns",
                Some("Encounter"),
                vec![
                    PropertyDef::text("Blood Pressure"),
                    PropertyDef::text("Heart Rate"),
                    PropertyDef::text("Weight"),
                ],
            ),
        ];

        let rel = |type_name: &str,
                   source: &str,
                   target: &str,
                   cardinality: Cardinality,
                   description: &str| RelationshipDef {
            type_name: type_name.to_string(),
            source_label: source.to_string(),
            target_label: target.to_string(),
            cardinality,
            description: description.to_string(),
        };

        let relationships = vec![
            rel(
                HAS_START,
                "Patient",
                "Encounter",
                Cardinality::One,
                "start of the patient journey; only between the Patient and the first Encounter",
            ),
            rel(
                HAS_FOLLOWUP,
                "Encounter",
                "Encounter",
                Cardinality::One,
                "sequential encounter following up on a medical condition",
            ),
            rel(
                NEXT,
                "Encounter",
                "Encounter",
                Cardinality::One,
                "new encounter not related to the previous encounter",
            ),
            rel(
                CAUSED_BY,
                "Encounter",
                "Encounter",
                Cardinality::One,
                "referral caused by the previous encounter",
            ),
            rel(
                "HAS_MEDICAL_HISTORY",
                "Patient",
                "MedicalHistory",
                Cardinality::One,
                "links the patient to their medical history intake record",
            ),
            rel(
                "HAS_SOCIAL_HISTORY",
                "Patient",
                "SocialHistory",
                Cardinality::One,
                "links the patient to their social history intake record",
            ),
            rel(
                "HAS_SYMPTOM",
                "Encounter",
                "Symptoms",
                Cardinality::Many,
                "symptom reported during the encounter",
            ),
            rel(
                "HAS_DIAGNOSIS",
                "Encounter",
                "Diagnosis",
                Cardinality::Many,
                "diagnosis made during the encounter",
            ),
            rel(
                "HAS_MEDICATION",
                "Encounter",
                "Medications",
                Cardinality::Many,
                "medication prescribed or reviewed during the encounter",
            ),
            rel(
                "HAS_TEST",
                "Encounter",
                "DiagnosticTests",
                Cardinality::Many,
                "diagnostic test performed or ordered during the encounter",
            ),
            rel(
                "HAS_VITALSIGN",
                "Encounter",
                "VitalSigns",
                Cardinality::One,
                "vital sign measurements recorded during the encounter",
            ),
            rel(
                "HAS_CAREPLAN",
                "Encounter",
                "CarePlan",
                Cardinality::One,
                "care plan produced by the encounter",
            ),
            rel(
                "HAS_ASSESSMENT",
                "Encounter",
                "Assessment",
                Cardinality::One,
                "provider assessment summarizing the encounter",
            ),
        ];

        OntologySchema {
            classes,
            relationships,
            version: "1.0".to_string(),
        }
    }

    pub fn lookup_class(&self, label: &str) -> Result<&ClassDef, SchemaError> {
        self.classes
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| SchemaError::UnknownClass(label.to_string()))
    }

    pub fn lookup_relationship(&self, type_name: &str) -> Result<&RelationshipDef, SchemaError> {
        self.relationships
            .iter()
            .find(|r| r.type_name == type_name)
            .ok_or_else(|| SchemaError::UnknownRelationship(type_name.to_string()))
    }

    /// Finds the relationship definition matching an exact
    /// (source label, type, target label) triple.
    pub fn lookup_relationship_triple(
        &self,
        source_label: &str,
        type_name: &str,
        target_label: &str,
    ) -> Option<&RelationshipDef> {
        self.relationships.iter().find(|r| {
            r.type_name == type_name
                && r.source_label == source_label
                && r.target_label == target_label
        })
    }

    /// Totals used as the structural-metric denominators:
    /// (class count, property count, relationship type count).
    pub fn required_counts(&self) -> (usize, usize, usize) {
        let property_count = self.classes.iter().map(|c| c.properties.len()).sum();
        (
            self.classes.len(),
            property_count,
            self.relationships.len(),
        )
    }

    /// Checks the schema invariants: unique labels, unique property names
    /// per class, unique relationship triples, resolvable endpoints.
    pub fn check(&self) -> Result<(), SchemaError> {
        let mut labels = HashSet::new();
        for class in &self.classes {
            if !labels.insert(class.label.as_str()) {
                return Err(SchemaError::Invalid(format!(
                    "duplicate class label {}",
                    class.label
                )));
            }
            let mut names = HashSet::new();
            for prop in &class.properties {
                if !names.insert(prop.name.as_str()) {
                    return Err(SchemaError::Invalid(format!(
                        "duplicate property {} on class {}",
                        prop.name, class.label
                    )));
                }
            }
        }
        let mut triples = HashSet::new();
        for rel in &self.relationships {
            if !triples.insert((
                rel.type_name.as_str(),
                rel.source_label.as_str(),
                rel.target_label.as_str(),
            )) {
                return Err(SchemaError::Invalid(format!(
                    "duplicate relationship {}",
                    rel.type_name
                )));
            }
            self.lookup_class(&rel.source_label)?;
            self.lookup_class(&rel.target_label)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<OntologySchema, SchemaError> {
        let schema: OntologySchema =
            serde_json::from_str(text).map_err(|e| SchemaError::Invalid(e.to_string()))?;
        schema.check()?;
        Ok(schema)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schema_counts() {
        let schema = OntologySchema::default_schema();
        assert_eq!(schema.required_counts(), (11, 37, 13));
    }

    #[test]
    fn default_schema_is_deterministic_and_valid() {
        let a = OntologySchema::default_schema();
        let b = OntologySchema::default_schema();
        assert_eq!(a, b);
        a.check().unwrap();
    }

    #[test]
    fn diagnosis_properties_match_inventory() {
        let schema = OntologySchema::default_schema();
        let diagnosis = schema.lookup_class("Diagnosis").unwrap();
        let names: Vec<&str> = diagnosis.properties.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["Name", "ICD-10"]);
    }

    #[test]
    fn vital_signs_properties() {
        let schema = OntologySchema::default_schema();
        let vitals = schema.lookup_class("VitalSigns").unwrap();
        let names: Vec<&str> = vitals.properties.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["Blood Pressure", "Heart Rate", "Weight"]);
    }

    #[test]
    fn patient_has_eight_properties_including_insurance_id() {
        let schema = OntologySchema::default_schema();
        let patient = schema.lookup_class("Patient").unwrap();
        assert_eq!(patient.properties.len(), 8);
        assert!(patient.property("Insurance ID").is_some());
    }

    #[test]
    fn unknown_class_and_relationship() {
        let schema = OntologySchema::default_schema();
        assert_eq!(
            schema.lookup_class("Spaceship"),
            Err(SchemaError::UnknownClass("Spaceship".to_string()))
        );
        assert_eq!(
            schema.lookup_relationship("TREATS"),
            Err(SchemaError::UnknownRelationship("TREATS".to_string()))
        );
    }

    #[test]
    fn has_start_restricted_to_patient_and_first_encounter() {
        let schema = OntologySchema::default_schema();
        let rel = schema.lookup_relationship("HAS_START").unwrap();
        assert_eq!(rel.source_label, "Patient");
        assert_eq!(rel.target_label, "Encounter");
        assert!(rel
            .description
            .contains("only between the Patient and the first Encounter"));
    }

    #[test]
    fn caused_by_and_has_symptom_endpoints() {
        let schema = OntologySchema::default_schema();
        let caused = schema.lookup_relationship("CAUSED_BY").unwrap();
        assert_eq!(caused.source_label, "Encounter");
        assert_eq!(caused.target_label, "Encounter");
        assert!(caused.description.contains("referral caused by the previous encounter"));
        let symptom = schema.lookup_relationship("HAS_SYMPTOM").unwrap();
        assert_eq!(symptom.source_label, "Encounter");
        assert_eq!(symptom.target_label, "Symptoms");
    }

    #[test]
    fn relationship_endpoints_resolve() {
        let schema = OntologySchema::default_schema();
        for rel in &schema.relationships {
            schema.lookup_class(&rel.source_label).unwrap();
            schema.lookup_class(&rel.target_label).unwrap();
        }
    }

    #[test]
    fn relationship_set_partitions() {
        let schema = OntologySchema::default_schema();
        let journey: Vec<&str> = schema
            .relationships
            .iter()
            .filter(|r| JOURNEY_EDGE_TYPES.contains(&r.type_name.as_str()))
            .map(|r| r.type_name.as_str())
            .collect();
        assert_eq!(journey.len(), 4);
        let intake = ["HAS_MEDICAL_HISTORY", "HAS_SOCIAL_HISTORY"];
        let detail: Vec<&RelationshipDef> = schema
            .relationships
            .iter()
            .filter(|r| {
                !JOURNEY_EDGE_TYPES.contains(&r.type_name.as_str())
                    && !intake.contains(&r.type_name.as_str())
            })
            .collect();
        assert_eq!(detail.len(), 7);
        for rel in detail {
            assert_eq!(rel.source_label, "Encounter");
            let target = schema.lookup_class(&rel.target_label).unwrap();
            assert_eq!(target.parent.as_deref(), Some("Encounter"));
        }
    }

    #[test]
    fn json_round_trip() {
        let schema = OntologySchema::default_schema();
        let json = schema.to_json();
        let back = OntologySchema::from_json(&json).unwrap();
        assert_eq!(schema, back);
    }

    #[test]
    fn empty_and_small_schema_counts() {
        let empty = OntologySchema {
            classes: vec![],
            relationships: vec![],
            version: "0".to_string(),
        };
        assert_eq!(empty.required_counts(), (0, 0, 0));
        let small = OntologySchema {
            classes: vec![ClassDef {
                label: "X".to_string(),
                properties: vec![PropertyDef::text("a"), PropertyDef::text("b")],
                parent: None,
            }],
            relationships: vec![],
            version: "0".to_string(),
        };
        assert_eq!(small.required_counts(), (1, 2, 0));
    }
}
