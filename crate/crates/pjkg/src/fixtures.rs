//! Deterministic synthetic fixtures: the two-patient golden corpus used
//! throughout the test suite, and a seeded generator for larger corpora.
//! All clinical content here is invented.

use crate::extraction::{EncounterInput, MockBackend};
use crate::pipeline::PatientBundle;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::Path;

fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn canned(
    number: u32,
    date: &str,
    time: &str,
    link: serde_json::Value,
    symptoms: serde_json::Value,
    diagnoses: serde_json::Value,
    medications: serde_json::Value,
    tests: serde_json::Value,
    vitals: serde_json::Value,
    assessment: &str,
    care_plan: &str,
) -> String {
    json!({
        "encounter": {"encounter_number": number.to_string(), "date": date, "time": time},
        "symptoms": symptoms,
        "diagnoses": diagnoses,
        "medications": medications,
        "diagnostic_tests": tests,
        "vital_signs": vitals,
        "assessment": {"text": assessment},
        "care_plan": {"text": care_plan},
        "journey_link": link
    })
    .to_string()
}

/// The golden corpus: PA56789, a five-encounter mitral-valve journey, and
/// PM82487, a three-encounter cardiology journey whose second visit is an
/// unrelated problem (exercising the NEXT edge). Together the two
/// journeys instantiate every class, property, and relationship type in
/// the default schema.
pub fn golden_bundles() -> Vec<PatientBundle> {
    let pa = PatientBundle {
        profile: map(&[
            ("ID", "PA56789"),
            ("Name", "John Carter"),
            ("DoB", "1960-03-12"),
            ("Gender", "Male"),
            ("Race", "White"),
            ("Contact Info", "555-0142"),
            ("Insurance Name", "Acme Health"),
            ("Insurance ID", "INS-4471"),
        ]),
        medical_history: map(&[
            ("Family History", "father with coronary artery disease"),
            ("Surgeries", "appendectomy (1985)"),
            ("Chronic Illnesses", "controlled hypertension"),
            ("Allergies", "no known drug allergies"),
            ("Current Medications", "metoprolol 50mg daily"),
        ]),
        social_history: map(&[
            ("Exercise", "walks three times weekly"),
            ("Diet", "low sodium"),
            ("Drinking", "occasional"),
            ("Smoking", "former smoker, quit 2010"),
            ("Occupation", "retired teacher"),
            ("Marital Status", "married"),
            ("Education Level", "bachelor's degree"),
            ("Annual Income", "60000"),
        ]),
        encounters: vec![
            enc("PA56789-E1", "2024-01-08", "09:30",
                "Patient reports shortness of breath, dizziness, and reduced exercise \
                 tolerance. Transthoracic echocardiography shows mitral valve regurgitation; \
                 chest X-ray shows mild cardiomegaly."),
            enc("PA56789-E2", "2024-02-05", "10:00",
                "Transesophageal echocardiogram refines the diagnosis to severe mitral \
                 valve regurgitation with preserved ejection fraction. Referrals for \
                 coronary angiography and surgical evaluation."),
            enc("PA56789-E3", "2024-03-04", "08:45",
                "Preoperative visit following the referral. Coronary angiography shows no \
                 significant coronary artery disease; surgical plan established."),
            enc("PA56789-E4", "2024-03-18", "07:30",
                "Postoperative follow-up. Mitral valve repair with annuloplasty ring; \
                 intraoperative echocardiogram shows no residual regurgitation."),
            enc("PA56789-E5", "2024-05-20", "11:15",
                "Recovery visit. Symptoms resolved, sternum stable; long-term care plan \
                 discussed."),
        ],
    };

    let pm = PatientBundle {
        profile: map(&[
            ("ID", "PM82487"),
            ("Name", "Maria Delgado"),
            ("DoB", "1966-09-02"),
            ("Gender", "Female"),
            ("Race", "Hispanic"),
            ("Contact Info", "555-0178"),
            ("Insurance Name", "Blue Ridge Mutual"),
            ("Insurance ID", "INS-9205"),
        ]),
        medical_history: map(&[
            ("Family History", "mother with stroke at 70"),
            ("Surgeries", "cholecystectomy (2011)"),
            ("Chronic Illnesses", "type 2 diabetes"),
            ("Allergies", "penicillin"),
            ("Current Medications", "metformin 500mg twice daily"),
        ]),
        social_history: map(&[
            ("Exercise", "swims weekly"),
            ("Diet", "mediterranean"),
            ("Drinking", "none"),
            ("Smoking", "never"),
            ("Occupation", "accountant"),
            ("Marital Status", "single"),
            ("Education Level", "master's degree"),
            ("Annual Income", "82000"),
        ]),
        encounters: vec![
            enc("PM82487-E1", "2024-01-15", "14:00",
                "Patient reports palpitations and fatigue. ECG confirms atrial \
                 fibrillation; anticoagulation started."),
            enc("PM82487-E2", "2024-02-20", "09:15",
                "Unrelated visit for productive cough and low-grade fever; acute \
                 bronchitis diagnosed."),
            enc("PM82487-E3", "2024-04-10", "10:30",
                "Follow-up on atrial fibrillation; rate controlled on medication, \
                 Holter monitor shows no sustained episodes."),
        ],
    };

    vec![pa, pm]
}

fn enc(id: &str, date: &str, time: &str, transcript: &str) -> EncounterInput {
    EncounterInput {
        encounter_id: id.to_string(),
        date: date.to_string(),
        time: time.to_string(),
        transcript: transcript.to_string(),
    }
}

/// Canned mock-backend responses matching [`golden_bundles`].
pub fn golden_responses() -> BTreeMap<String, String> {
    let mut responses = BTreeMap::new();
    responses.insert(
        "PA56789-E1".to_string(),
        canned(
            1, "2024-01-08", "09:30",
            json!({"type": "HAS_START"}),
            json!([
                {"name": "shortness of breath", "severity": "moderate"},
                {"name": "dizziness", "severity": "mild"},
                {"name": "reduced exercise tolerance", "severity": "moderate"}
            ]),
            json!([{"name": "mitral valve regurgitation", "icd10": "I34.0"}]),
            json!([{"name": "metoprolol", "dosage": "50mg daily"}]),
            json!([
                {"test_name": "transthoracic echocardiography",
                 "results": "moderate mitral valve regurgitation"},
                {"test_name": "chest X-ray", "results": "mild cardiomegaly"}
            ]),
            json!({"blood_pressure": "142/88", "heart_rate": "78 bpm", "weight": "84 kg"}),
            "new mitral valve regurgitation confirmed on imaging",
            "repeat echocardiography in four weeks; continue metoprolol",
        ),
    );
    responses.insert(
        "PA56789-E2".to_string(),
        canned(
            2, "2024-02-05", "10:00",
            json!({"type": "HAS_FOLLOWUP", "target_encounter": "PA56789-E1"}),
            json!([{"name": "shortness of breath", "severity": "moderate"}]),
            json!([{"name": "severe mitral valve regurgitation", "icd10": "I34.0"}]),
            json!([{"name": "metoprolol", "dosage": "50mg daily"}]),
            json!([
                {"test_name": "transesophageal echocardiogram",
                 "results": "severe regurgitation, preserved ejection fraction"}
            ]),
            json!({"blood_pressure": "138/86", "heart_rate": "80 bpm", "weight": "83 kg"}),
            "severe mitral valve regurgitation with preserved ejection fraction",
            "refer for coronary angiography and surgical evaluation",
        ),
    );
    responses.insert(
        "PA56789-E3".to_string(),
        canned(
            3, "2024-03-04", "08:45",
            json!({"type": "CAUSED_BY", "target_encounter": "PA56789-E2"}),
            json!([{"name": "shortness of breath", "severity": "moderate"}]),
            json!([{"name": "severe mitral valve regurgitation", "icd10": "I34.0"}]),
            json!([{"name": "metoprolol", "dosage": "50mg daily"}]),
            json!([
                {"test_name": "coronary angiography",
                 "results": "no significant coronary artery disease"}
            ]),
            json!({"blood_pressure": "136/84", "heart_rate": "76 bpm", "weight": "83 kg"}),
            "surgical candidate; severity confirmed preoperatively",
            "proceed with mitral valve repair",
        ),
    );
    responses.insert(
        "PA56789-E4".to_string(),
        canned(
            4, "2024-03-18", "07:30",
            json!({"type": "HAS_FOLLOWUP", "target_encounter": "PA56789-E3"}),
            json!([{"name": "incisional discomfort", "severity": "mild"}]),
            json!([{"name": "status post mitral valve repair", "icd10": "Z48.812"}]),
            json!([
                {"name": "metoprolol", "dosage": "50mg daily"},
                {"name": "furosemide", "dosage": "20mg daily"}
            ]),
            json!([
                {"test_name": "intraoperative echocardiogram",
                 "results": "annuloplasty ring in place, no residual regurgitation"}
            ]),
            json!({"blood_pressure": "128/78", "heart_rate": "72 bpm", "weight": "81 kg"}),
            "successful repair with annuloplasty ring, no residual regurgitation",
            "wound care, graded activity, follow-up in eight weeks",
        ),
    );
    responses.insert(
        "PA56789-E5".to_string(),
        canned(
            5, "2024-05-20", "11:15",
            json!({"type": "HAS_FOLLOWUP", "target_encounter": "PA56789-E4"}),
            json!([{"name": "residual fatigue", "severity": "mild"}]),
            json!([{"name": "status post mitral valve repair", "icd10": "Z48.812"}]),
            json!([{"name": "metoprolol", "dosage": "25mg daily"}]),
            json!([
                {"test_name": "transthoracic echocardiography",
                 "results": "stable repair, normal function"}
            ]),
            json!({"blood_pressure": "122/76", "heart_rate": "68 bpm", "weight": "80 kg"}),
            "recovery on track; symptoms resolved and sternum stable",
            "annual cardiology review and long-term risk-factor management",
        ),
    );
    responses.insert(
        "PM82487-E1".to_string(),
        canned(
            1, "2024-01-15", "14:00",
            json!({"type": "HAS_START"}),
            json!([
                {"name": "palpitations", "severity": "moderate"},
                {"name": "fatigue", "severity": "mild"}
            ]),
            json!([{"name": "atrial fibrillation", "icd10": "I48.0"}]),
            json!([{"name": "apixaban", "dosage": "5mg twice daily"}]),
            json!([{"test_name": "ECG", "results": "atrial fibrillation with rapid ventricular response"}]),
            json!({"blood_pressure": "132/82", "heart_rate": "112 bpm", "weight": "70 kg"}),
            "new atrial fibrillation; anticoagulation indicated",
            "start anticoagulation and rate control, follow up in four weeks",
        ),
    );
    responses.insert(
        "PM82487-E2".to_string(),
        canned(
            2, "2024-02-20", "09:15",
            json!({"type": "NEXT", "target_encounter": "PM82487-E1"}),
            json!([
                {"name": "productive cough", "severity": "moderate"},
                {"name": "low-grade fever", "severity": "mild"}
            ]),
            json!([{"name": "acute bronchitis", "icd10": "J20.9"}]),
            json!([{"name": "guaifenesin", "dosage": "400mg as needed"}]),
            json!([{"test_name": "chest X-ray", "results": "no consolidation"}]),
            json!({"blood_pressure": "128/80", "heart_rate": "88 bpm", "weight": "70 kg"}),
            "acute bronchitis, no pneumonia",
            "supportive care, fluids, return if symptoms worsen",
        ),
    );
    responses.insert(
        "PM82487-E3".to_string(),
        canned(
            3, "2024-04-10", "10:30",
            json!({"type": "HAS_FOLLOWUP", "target_encounter": "PM82487-E2"}),
            json!([{"name": "palpitations", "severity": "mild"}]),
            json!([{"name": "atrial fibrillation", "icd10": "I48.0"}]),
            json!([
                {"name": "apixaban", "dosage": "5mg twice daily"},
                {"name": "metoprolol", "dosage": "25mg daily"}
            ]),
            json!([{"test_name": "Holter monitor", "results": "no sustained episodes"}]),
            json!({"blood_pressure": "126/78", "heart_rate": "74 bpm", "weight": "69 kg"}),
            "atrial fibrillation rate controlled on current regimen",
            "continue anticoagulation, repeat Holter in six months",
        ),
    );
    responses
}

pub fn golden_backend() -> MockBackend {
    MockBackend::new(golden_responses())
}

/// Seeded synthetic corpus mirroring the target shape: half cardiology,
/// half oncology, five encounters per patient. Same seed, same corpus.
pub fn generate_corpus(patients: usize, seed: u64) -> (Vec<PatientBundle>, BTreeMap<String, String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_names = ["Alex", "Brooke", "Casey", "Dana", "Evan", "Frankie", "Grey", "Harper"];
    let last_names = ["Nguyen", "Okafor", "Silva", "Kim", "Ahmed", "Weber", "Rossi", "Larsen"];
    let occupations = ["nurse", "electrician", "librarian", "chef", "analyst", "farmer"];

    let cardiology: &[(&str, &str, &str)] = &[
        ("hypertension", "I10", "lisinopril"),
        ("atrial fibrillation", "I48.0", "apixaban"),
        ("chronic obstructive pulmonary disease", "J44.9", "tiotropium"),
    ];
    let oncology: &[(&str, &str, &str)] = &[
        ("breast cancer", "C50.9", "tamoxifen"),
        ("breast cancer in remission", "C50.9", "herceptin"),
        ("ductal carcinoma in situ", "D05.1", "tamoxifen"),
    ];

    let mut bundles = Vec::new();
    let mut responses = BTreeMap::new();
    for p in 0..patients {
        let specialty_cardio = p % 2 == 0;
        let (condition, icd, drug) = if specialty_cardio {
            cardiology[p / 2 % cardiology.len()]
        } else {
            oncology[p / 2 % oncology.len()]
        };
        let id = format!("PS{:05}", 10000 + p * 137);
        let name = format!(
            "{} {}",
            first_names.choose(&mut rng).expect("non-empty"),
            last_names.choose(&mut rng).expect("non-empty")
        );
        let birth_year = 1957 + (p * 4 % 24); // ages roughly 45-69 at 2024
        let profile = map(&[
            ("ID", &id),
            ("Name", &name),
            ("DoB", &format!("{birth_year}-06-{:02}", 1 + p % 28)),
            ("Gender", if p % 2 == 0 { "Male" } else { "Female" }),
            ("Race", ["White", "Black", "Asian", "Hispanic"][p % 4]),
            ("Contact Info", &format!("555-02{p:02}")),
            ("Insurance Name", "Harbor Mutual"),
            ("Insurance ID", &format!("INS-{:04}", 3000 + p)),
        ]);
        let medical_history = map(&[
            ("Family History", "no notable family history"),
            ("Surgeries", "none"),
            ("Chronic Illnesses", condition),
            ("Allergies", "no known drug allergies"),
            ("Current Medications", drug),
        ]);
        let social_history = map(&[
            ("Exercise", ["runs regularly", "swims weekly", "limited post-surgical exercise"][p % 3]),
            ("Diet", "balanced"),
            ("Drinking", "occasional"),
            ("Smoking", if p % 2 == 0 { "former smoker" } else { "never" }),
            ("Occupation", occupations[p % occupations.len()]),
            ("Marital Status", if p % 2 == 0 { "married" } else { "single" }),
            ("Education Level", "high school"),
            ("Annual Income", &format!("{}", 40000 + p * 3500)),
        ]);

        let encounters_per_patient = 5;
        let mut encounters = Vec::new();
        for j in 1..=encounters_per_patient {
            let enc_id = format!("{id}-E{j}");
            let date = format!("2024-{:02}-{:02}", j, 3 + (p + j) % 24);
            let time = format!("{:02}:{:02}", 8 + j % 9, (p * 7 + j * 11) % 60);
            let transcript = format!(
                "Visit {j} for {condition}. Review of symptoms and current treatment with {drug}."
            );
            encounters.push(enc(&enc_id, &date, &time, &transcript));

            let link = if j == 1 {
                json!({"type": "HAS_START"})
            } else {
                let link_type = match (p + j) % 5 {
                    0 => "CAUSED_BY",
                    1 => "NEXT",
                    _ => "HAS_FOLLOWUP",
                };
                json!({"type": link_type, "target_encounter": format!("{id}-E{}", j - 1)})
            };
            let severity = ["mild", "moderate", "severe"][(p + j) % 3];
            responses.insert(
                enc_id,
                canned(
                    j as u32,
                    &date,
                    &time,
                    link,
                    json!([{"name": format!("{condition} symptom {j}"), "severity": severity}]),
                    json!([{"name": condition, "icd10": icd}]),
                    json!([{"name": drug, "dosage": "standard dose"}]),
                    json!([{"test_name": if specialty_cardio { "ECG" } else { "imaging panel" },
                            "results": "reviewed with patient"}]),
                    json!({
                        "blood_pressure": format!("{}/{}", 118 + (p + j) % 20, 72 + (p + j) % 12),
                        "heart_rate": format!("{} bpm", 64 + (p * 3 + j) % 30),
                        "weight": format!("{} kg", 60 + (p * 5 + j) % 35)
                    }),
                    &format!("stable visit {j} for {condition}"),
                    &format!("continue {drug}, follow up as scheduled"),
                ),
            );
        }

        bundles.push(PatientBundle {
            profile,
            medical_history,
            social_history,
            encounters,
        });
    }
    (bundles, responses)
}

/// Writes a corpus to the on-disk bundle layout plus the mock fixture
/// file. Output is byte-identical for identical inputs.
pub fn write_corpus(
    dir: &Path,
    bundles: &[PatientBundle],
    responses: &BTreeMap<String, String>,
) -> std::io::Result<()> {
    for bundle in bundles {
        let id = bundle.patient_id().unwrap_or("unknown");
        let patient_dir = dir.join(id);
        let enc_dir = patient_dir.join("encounters");
        std::fs::create_dir_all(&enc_dir)?;
        let patient_doc = json!({
            "profile": bundle.profile,
            "medical_history": bundle.medical_history,
            "social_history": bundle.social_history,
        });
        std::fs::write(
            patient_dir.join("patient.json"),
            format!("{}\n", serde_json::to_string_pretty(&patient_doc).expect("serializes")),
        )?;
        for (j, enc) in bundle.encounters.iter().enumerate() {
            let doc = json!({
                "id": enc.encounter_id,
                "date": enc.date,
                "time": enc.time,
                "transcript": enc.transcript,
            });
            std::fs::write(
                enc_dir.join(format!("{}_{}.json", j + 1, enc.encounter_id)),
                format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializes")),
            )?;
        }
    }
    std::fs::write(
        dir.join("mock_responses.json"),
        format!("{}\n", serde_json::to_string_pretty(responses).expect("serializes")),
    )?;
    Ok(())
}
