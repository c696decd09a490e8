//! Transcript-to-structure extraction: prompt rendering, a pluggable LLM
//! backend, and parsing of the structured per-encounter output with
//! retry/repair on malformed responses.

use crate::ontology::{OntologySchema, CHAIN_EDGE_TYPES, HAS_START, JOURNEY_EDGE_TYPES};
use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Scalar fields missing from the conversation carry this sentinel so
/// downstream metrics can tell "not mentioned" from "not extracted".
pub const DEFAULT_SENTINEL: &str = "unknown";

fn unknown() -> String {
    DEFAULT_SENTINEL.to_string()
}

/// One encounter's raw input: header metadata plus the transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncounterInput {
    pub encounter_id: String,
    pub date: String,
    pub time: String,
    pub transcript: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InputError {
    #[error("encounter_id is empty")]
    EmptyEncounterId,
    #[error("unparseable date: {0}")]
    BadDate(String),
    #[error("unparseable time: {0}")]
    BadTime(String),
}

impl EncounterInput {
    pub fn check(&self) -> Result<(), InputError> {
        if self.encounter_id.is_empty() {
            return Err(InputError::EmptyEncounterId);
        }
        NaiveDate::parse_from_str(&self.date, "%Y-%m-%d")
            .map_err(|_| InputError::BadDate(self.date.clone()))?;
        NaiveTime::parse_from_str(&self.time, "%H:%M")
            .map_err(|_| InputError::BadTime(self.time.clone()))?;
        Ok(())
    }
}

/// A rendered extraction prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub schema_excerpt: String,
    pub metadata: EncounterInput,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncounterFields {
    #[serde(default = "unknown")]
    pub encounter_number: String,
    #[serde(default = "unknown")]
    pub date: String,
    #[serde(default = "unknown")]
    pub time: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymptomItem {
    #[serde(default = "unknown")]
    pub name: String,
    #[serde(default = "unknown")]
    pub severity: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosisItem {
    #[serde(default = "unknown")]
    pub name: String,
    #[serde(default = "unknown")]
    pub icd10: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MedicationItem {
    #[serde(default = "unknown")]
    pub name: String,
    #[serde(default = "unknown")]
    pub dosage: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticTestItem {
    #[serde(default = "unknown")]
    pub test_name: String,
    #[serde(default = "unknown")]
    pub results: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitalSignsFields {
    #[serde(default = "unknown")]
    pub blood_pressure: String,
    #[serde(default = "unknown")]
    pub heart_rate: String,
    #[serde(default = "unknown")]
    pub weight: String,
}

impl Default for VitalSignsFields {
    fn default() -> Self {
        VitalSignsFields {
            blood_pressure: unknown(),
            heart_rate: unknown(),
            weight: unknown(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextBlock {
    #[serde(default = "unknown")]
    pub text: String,
}

impl Default for TextBlock {
    fn default() -> Self {
        TextBlock { text: unknown() }
    }
}

/// The journey edge proposed by the model for this encounter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JourneyLink {
    #[serde(rename = "type")]
    pub link_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_encounter: Option<String>,
}

impl Default for JourneyLink {
    fn default() -> Self {
        JourneyLink {
            link_type: HAS_START.to_string(),
            target_encounter: None,
        }
    }
}

/// The structured per-encounter extraction output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub encounter: EncounterFields,
    #[serde(default)]
    pub symptoms: Vec<SymptomItem>,
    #[serde(default)]
    pub diagnoses: Vec<DiagnosisItem>,
    #[serde(default)]
    pub medications: Vec<MedicationItem>,
    #[serde(default)]
    pub diagnostic_tests: Vec<DiagnosticTestItem>,
    #[serde(default)]
    pub vital_signs: VitalSignsFields,
    #[serde(default)]
    pub assessment: TextBlock,
    #[serde(default)]
    pub care_plan: TextBlock,
    #[serde(default)]
    pub journey_link: JourneyLink,
}

/// Backend selection and retry policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub model: String,
    #[serde(default)]
    pub api_key_env: String,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_retries() -> u32 {
    2
}

fn default_timeout() -> u64 {
    60
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("retries exhausted after {} attempts; last error: {last_error}", attempts.len())]
    RetryExhausted {
        last_error: String,
        /// Every raw response, for diagnostics.
        attempts: Vec<String>,
    },
    #[error("parse failure at byte {offset} (line {line}, column {column}): {message}")]
    ParseFailure {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
}

/// A text-completion backend. Implementations must be stateless so
/// extraction can run concurrently across patients.
pub trait ExtractionBackend: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Result<String, ExtractError>;
}

/// Deterministic canned-response backend keyed by encounter id.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    responses: BTreeMap<String, String>,
}

impl MockBackend {
    pub fn new(responses: BTreeMap<String, String>) -> MockBackend {
        MockBackend { responses }
    }

    /// Loads the fixture file: a JSON map from encounter id to the canned
    /// response text.
    pub fn from_fixture(text: &str) -> Result<MockBackend, ExtractError> {
        let responses: BTreeMap<String, String> = serde_json::from_str(text)
            .map_err(|e| ExtractError::BackendUnavailable(format!("bad mock fixture: {e}")))?;
        Ok(MockBackend { responses })
    }

    pub fn insert(&mut self, encounter_id: impl Into<String>, response: impl Into<String>) {
        self.responses.insert(encounter_id.into(), response.into());
    }
}

impl ExtractionBackend for MockBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, ExtractError> {
        self.responses
            .get(&prompt.metadata.encounter_id)
            .cloned()
            .ok_or_else(|| {
                ExtractError::BackendUnavailable(format!(
                    "no canned response for encounter {}",
                    prompt.metadata.encounter_id
                ))
            })
    }
}

/// Chat-completion adapter: bearer-auth POST with (model, messages,
/// temperature), reading a single response-text field.
pub struct HttpBackend {
    endpoint: String,
    model: String,
    api_key: String,
    timeout: std::time::Duration,
}

impl HttpBackend {
    pub fn from_config(config: &BackendConfig) -> Result<HttpBackend, ExtractError> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            ExtractError::BackendUnavailable(format!("{} is not set", config.api_key_env))
        })?;
        if config.endpoint.is_empty() {
            return Err(ExtractError::BackendUnavailable(
                "no endpoint configured".to_string(),
            ));
        }
        Ok(HttpBackend {
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            api_key,
            timeout: std::time::Duration::from_secs(config.timeout_secs),
        })
    }
}

impl ExtractionBackend for HttpBackend {
    fn complete(&self, prompt: &Prompt) -> Result<String, ExtractError> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt.text}],
        });
        let client = reqwest::blocking::Client::builder()
            .timeout(self.timeout)
            .build()
            .map_err(|e| ExtractError::BackendUnavailable(e.to_string()))?;
        let response: serde_json::Value = client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| ExtractError::BackendUnavailable(e.to_string()))?
            .error_for_status()
            .map_err(|e| ExtractError::BackendUnavailable(e.to_string()))?
            .json()
            .map_err(|e| ExtractError::BackendUnavailable(e.to_string()))?;
        response["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                ExtractError::BackendUnavailable("response has no message content".to_string())
            })
    }
}

/// Renders the extraction prompt for one encounter: structural
/// requirements, the schema's entity categories, the relationship-type
/// constraint list, and default-value instructions, followed by the
/// encounter header and full transcript.
pub fn render_prompt(
    enc: &EncounterInput,
    schema: &OntologySchema,
    previous_encounter: Option<&str>,
) -> Prompt {
    let schema_excerpt = output_schema_excerpt();
    let mut text = String::new();
    text.push_str(
        "You are a clinical information extraction system. Read the encounter \
         transcript below and produce ONE JSON object and nothing else.\n\n",
    );
    text.push_str("Structural requirements:\n");
    text.push_str("- Output must be strictly valid JSON with exactly this shape:\n");
    for line in schema_excerpt.lines() {
        let _ = writeln!(text, "  {line}");
    }
    text.push_str("- No markdown fences, no commentary, no extra keys.\n\n");

    text.push_str("Entity categories (from the ontology):\n");
    for class in &schema.classes {
        let props: Vec<&str> = class.properties.iter().map(|p| p.name.as_str()).collect();
        let _ = writeln!(text, "- {}: {}", class.label, props.join(", "));
    }

    text.push_str(
        "\nRelationship type constraints (e.g., has_followup, causedby, NEXT): \
         journey_link.type must be one of ",
    );
    text.push_str(&JOURNEY_EDGE_TYPES.join(", "));
    text.push_str(".\n");
    match previous_encounter {
        Some(prev) => {
            let _ = writeln!(
                text,
                "The previous encounter id is {prev}; choose the link type ({}) that \
                 relates this encounter to it and set target_encounter to {prev}.",
                CHAIN_EDGE_TYPES.join(", ")
            );
        }
        None => {
            text.push_str(
                "This is the first encounter: use type HAS_START and omit target_encounter.\n",
            );
        }
    }

    let _ = writeln!(
        text,
        "\nDefault values: use \"{DEFAULT_SENTINEL}\" for any scalar field not \
         mentioned in the transcript, and empty lists for absent items."
    );

    let _ = writeln!(text, "\nencounter_id: {}", enc.encounter_id);
    let _ = writeln!(text, "date: {}", enc.date);
    let _ = writeln!(text, "time: {}", enc.time);
    let _ = writeln!(text, "\ntranscript:\n{}", enc.transcript);

    Prompt {
        text,
        schema_excerpt,
        metadata: enc.clone(),
    }
}

fn output_schema_excerpt() -> String {
    r#"{
  "encounter": {"encounter_number": "...", "date": "YYYY-MM-DD", "time": "HH:MM"},
  "symptoms": [{"name": "...", "severity": "..."}],
  "diagnoses": [{"name": "...", "icd10": "..."}],
  "medications": [{"name": "...", "dosage": "..."}],
  "diagnostic_tests": [{"test_name": "...", "results": "..."}],
  "vital_signs": {"blood_pressure": "...", "heart_rate": "...", "weight": "..."},
  "assessment": {"text": "..."},
  "care_plan": {"text": "..."},
  "journey_link": {"type": "...", "target_encounter": "..."}
}"#
    .to_string()
}

/// Strips markdown code fences and any leading/trailing prose around the
/// outermost JSON object.
pub fn strip_wrapping(raw: &str) -> &str {
    let trimmed = raw.trim();
    let defenced = if let Some(start) = trimmed.find("```") {
        let after = &trimmed[start + 3..];
        let after = after.strip_prefix("json").unwrap_or(after);
        match after.find("```") {
            Some(end) => after[..end].trim(),
            None => after.trim(),
        }
    } else {
        trimmed
    };
    match (defenced.find('{'), defenced.rfind('}')) {
        (Some(open), Some(close)) if close > open => &defenced[open..=close],
        _ => defenced,
    }
}

/// Parses raw model output into an [`ExtractionResult`], locating errors
/// by byte offset.
pub fn parse_extraction(raw: &str) -> Result<ExtractionResult, ExtractError> {
    let body = strip_wrapping(raw);
    serde_json::from_str(body).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        let offset = body
            .lines()
            .take(line.saturating_sub(1))
            .map(|l| l.len() + 1)
            .sum::<usize>()
            + column.saturating_sub(1);
        ExtractError::ParseFailure {
            offset,
            line,
            column,
            message: e.to_string(),
        }
    })
}

/// Runs the full extraction for one encounter: prompt, backend call,
/// parse, and on malformed output a repair re-prompt embedding the parse
/// error, up to `max_retries` additional attempts.
pub fn extract(
    enc: &EncounterInput,
    backend: &dyn ExtractionBackend,
    schema: &OntologySchema,
    previous_encounter: Option<&str>,
    max_retries: u32,
) -> Result<ExtractionResult, ExtractError> {
    let base = render_prompt(enc, schema, previous_encounter);
    let mut prompt = base.clone();
    let mut attempts = Vec::new();
    let mut last_error = String::new();
    for _ in 0..=max_retries {
        let raw = backend.complete(&prompt)?;
        match parse_extraction(&raw) {
            Ok(result) => return Ok(result),
            Err(err) => {
                last_error = err.to_string();
                attempts.push(raw);
                prompt = base.clone();
                let _ = write!(
                    prompt.text,
                    "\nYour previous output failed to parse: {last_error}\n\
                     Emit only the corrected JSON object."
                );
            }
        }
    }
    Err(ExtractError::RetryExhausted {
        last_error,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::OntologySchema;

    fn sample_input() -> EncounterInput {
        EncounterInput {
            encounter_id: "E1".to_string(),
            date: "2024-01-08".to_string(),
            time: "09:30".to_string(),
            transcript: "Patient reports shortness of breath.".to_string(),
        }
    }

    fn valid_payload() -> String {
        serde_json::json!({
            "encounter": {"encounter_number": "1", "date": "2024-01-08", "time": "09:30"},
            "symptoms": [{"name": "shortness of breath", "severity": "moderate"}],
            "diagnoses": [{"name": "mitral valve regurgitation", "icd10": "I34.0"}],
            "medications": [],
            "diagnostic_tests": [],
            "vital_signs": {"blood_pressure": "142/88", "heart_rate": "78", "weight": "84 kg"},
            "assessment": {"text": "stable"},
            "care_plan": {"text": "follow up in four weeks"},
            "journey_link": {"type": "HAS_START"}
        })
        .to_string()
    }

    #[test]
    fn input_invariants() {
        sample_input().check().unwrap();
        let mut bad = sample_input();
        bad.encounter_id.clear();
        assert_eq!(bad.check(), Err(InputError::EmptyEncounterId));
        let mut bad = sample_input();
        bad.date = "Jan 8".to_string();
        assert!(matches!(bad.check(), Err(InputError::BadDate(_))));
        let mut bad = sample_input();
        bad.time = "9:30 am".to_string();
        assert!(matches!(bad.check(), Err(InputError::BadTime(_))));
    }

    #[test]
    fn prompt_is_deterministic_and_complete() {
        let schema = OntologySchema::default_schema();
        let enc = sample_input();
        let a = render_prompt(&enc, &schema, None);
        let b = render_prompt(&enc, &schema, None);
        assert_eq!(a, b);
        assert!(a.text.contains("E1"));
        assert!(a.text.contains("2024-01-08"));
        assert!(a.text.contains("09:30"));
        assert!(a.text.contains(&enc.transcript));
        assert!(a.text.contains("has_followup"));
        assert!(a.text.contains("causedby"));
        assert!(a.text.contains("NEXT"));
        assert!(a.text.contains("unknown"));
    }

    #[test]
    fn prompt_with_empty_transcript_is_valid() {
        let schema = OntologySchema::default_schema();
        let mut enc = sample_input();
        enc.transcript.clear();
        let prompt = render_prompt(&enc, &schema, Some("E0"));
        assert!(prompt.text.contains("previous encounter id is E0"));
    }

    #[test]
    fn parse_round_trips() {
        let result = parse_extraction(&valid_payload()).unwrap();
        let serialized = serde_json::to_string(&result).unwrap();
        assert_eq!(parse_extraction(&serialized).unwrap(), result);
    }

    #[test]
    fn parse_strips_fences_and_prose() {
        let payload = valid_payload();
        let wrapped = format!("Here is the extraction:\n```json\n{payload}\n```\nDone.");
        assert_eq!(
            parse_extraction(&wrapped).unwrap(),
            parse_extraction(&payload).unwrap()
        );
    }

    #[test]
    fn parse_names_missing_encounter_key() {
        let err = parse_extraction("{}").unwrap_err();
        match err {
            ExtractError::ParseFailure { message, .. } => {
                assert!(message.contains("encounter"), "{message}");
            }
            other => panic!("expected ParseFailure, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_missing_scalars() {
        let minimal = r#"{"encounter": {"encounter_number": "1"}}"#;
        let result = parse_extraction(minimal).unwrap();
        assert_eq!(result.encounter.date, DEFAULT_SENTINEL);
        assert!(result.symptoms.is_empty());
        assert_eq!(result.vital_signs.weight, DEFAULT_SENTINEL);
        assert_eq!(result.journey_link.link_type, HAS_START);
    }

    #[test]
    fn mock_backend_is_deterministic() {
        let schema = OntologySchema::default_schema();
        let mut backend = MockBackend::default();
        backend.insert("E1", valid_payload());
        let enc = sample_input();
        let a = extract(&enc, &backend, &schema, None, 2).unwrap();
        let b = extract(&enc, &backend, &schema, None, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.diagnoses[0].icd10, "I34.0");
    }

    #[test]
    fn retry_exhaustion_keeps_all_attempts() {
        let schema = OntologySchema::default_schema();
        let mut backend = MockBackend::default();
        backend.insert("E1", "not json at all");
        let err = extract(&sample_input(), &backend, &schema, None, 2).unwrap_err();
        match err {
            ExtractError::RetryExhausted { attempts, .. } => assert_eq!(attempts.len(), 3),
            other => panic!("expected RetryExhausted, got {other:?}"),
        }
    }

    #[test]
    fn missing_canned_response_is_backend_unavailable() {
        let schema = OntologySchema::default_schema();
        let backend = MockBackend::default();
        let err = extract(&sample_input(), &backend, &schema, None, 0).unwrap_err();
        assert!(matches!(err, ExtractError::BackendUnavailable(_)));
    }
}
