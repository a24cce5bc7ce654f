use proptest::prelude::*;

use super::*;
use crate::store::{RecordKind, Store};
use crate::testkit::{self, at};

const SYLLABUS: &str = "\
# Data Structures
COURSE: crs1
CLO c1 [understand]: Explain how hashing distributes keys
CLO c2 [apply]: Implement balanced search trees
CLO c3 [analyze]: Compare the cost of traversal orders
TOPIC: Hash tables
TOPIC: Search trees
ASSESS: Midterm, 40%
ASSESS: Final, 0.6
BOOK: Introduction to Algorithms
";

fn catalogue() -> Store {
    let store = Store::in_memory();
    store
        .write(|tx| {
            testkit::seed_catalogue(tx)?;
            testkit::add_course(tx, "crs1", "d1", "Data Structures")
        })
        .unwrap();
    store
}

fn draft(text: &str) -> DraftSpecification {
    extract_specification(text, &GrammarExtractor).unwrap()
}

#[test]
fn well_formed_syllabus_extracts_three_clos_at_full_confidence() {
    let d = draft(SYLLABUS);
    assert_eq!(d.status, SpecStatus::Draft);
    assert_eq!(d.content.clos.len(), 3);
    assert_eq!(d.content.course.as_ref().unwrap().value, "crs1");
    assert!(d.content.confidence.values().all(|c| *c == 1.0));
    assert_eq!(d.content.clos[1].span, LineSpan::line(4));
    assert_eq!(d.content.clos[2].value.bloom_level, Some(BloomLevel::Analyze));
    let weights: Vec<f64> = d.content.assessment_methods.iter().map(|m| m.value.weight).collect();
    assert_eq!(weights, vec![0.4, 0.6]);
    assert!(validate_draft(&d).is_empty());
}

#[test]
fn empty_topics_warn() {
    let text = SYLLABUS.replace("TOPIC: Hash tables\nTOPIC: Search trees\n", "");
    let d = draft(&text);
    assert!(d.content.topics.is_empty());
    assert_eq!(d.content.confidence["topics"], 0.0);
    assert!(d.content.findings.iter().any(|f| f.field == "topics" && f.severity == Severity::Warn));
}

#[test]
fn duplicate_clo_keeps_first_and_names_the_line() {
    let text = format!("{SYLLABUS}CLO c2 [create]: A second c2\n");
    let d = draft(&text);
    assert_eq!(d.content.clos.len(), 3);
    assert_eq!(d.content.clos[1].value.statement, "Implement balanced search trees");
    let dup = d.content.findings.iter().find(|f| f.field == "clos[c2]").unwrap();
    assert!(dup.message.contains("line 11") && dup.message.contains("first on line 4"), "{}", dup.message);
}

#[test]
fn zero_clos_is_a_warning_not_an_error() {
    let d = draft("COURSE: crs1\nTOPIC: x\n");
    assert!(d.content.clos.is_empty());
    assert!(d.content.findings.iter().any(|f| f.field == "clos"));
}

#[test]
fn empty_document_is_rejected() {
    assert!(matches!(
        extract_specification("  \n", &GrammarExtractor),
        Err(Error::Validation { .. })
    ));
}

struct Broken;

impl ExtractorAdapter for Broken {
    fn id(&self) -> &str {
        "broken"
    }

    fn extract(&self, _: &str) -> std::result::Result<DraftContent, String> {
        Err("model timed out".into())
    }
}

#[test]
fn adapter_failure_carries_diagnostics() {
    let err = extract_specification("COURSE: x", &Broken).unwrap_err();
    assert!(matches!(err, Error::Adapter { adapter, message } if adapter == "broken" && message.contains("timed out")));
}

#[test]
fn validate_draft_examples() {
    let bad = draft(&SYLLABUS.replace("0.6", "0.5"));
    let findings = validate_draft(&bad);
    assert!(findings
        .iter()
        .any(|f| f.severity == Severity::Error && f.field == "assessment_methods"));

    let no_bloom = draft(&SYLLABUS.replace("CLO c1 [understand]:", "CLO c1:"));
    let findings = validate_draft(&no_bloom);
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0].severity, Severity::Warn);
    assert_eq!(findings[0].field, "clos[c1].bloom_level");
}

#[test]
fn confirm_records_spec_and_audit() {
    let store = catalogue();
    let d = draft(SYLLABUS);
    let c = store
        .write(|tx| confirm_draft(tx, &d, testkit::INSTRUCTOR, at(2025, 9, 2, 10, 0, 0)))
        .unwrap();
    assert_eq!(c.revision, 1);
    assert!(c.changes.is_empty());
    let snap = store.snapshot();
    assert_eq!(snap.course_spec("crs1").unwrap().status, SpecStatus::Confirmed);
    let audit = snap.audit_events().find(|a| a.seq == c.audit_seq).unwrap();
    assert_eq!(audit.actor, testkit::INSTRUCTOR);
    assert_eq!(audit.detail["draft_hash"], c.draft_hash);
}

#[test]
fn confirm_rejects_errors_and_unknown_reviewers() {
    let store = catalogue();
    let bad = draft(&SYLLABUS.replace("0.6", "0.5"));
    let err = store
        .write(|tx| confirm_draft(tx, &bad, testkit::INSTRUCTOR, 0))
        .unwrap_err();
    assert!(matches!(&err, Error::Validation { message, .. } if message.contains("weights sum")));
    let err = store.write(|tx| confirm_draft(tx, &draft(SYLLABUS), "e404", 0)).unwrap_err();
    assert!(matches!(err, Error::Integrity(m) if m.contains("employee e404")));
    assert!(store.snapshot().course_spec("crs1").is_none());
}

#[test]
fn second_confirm_bumps_revision_and_reports_diff() {
    let store = catalogue();
    let first = draft(SYLLABUS);
    let second = draft(&SYLLABUS.replace("TOPIC: Search trees\n", "TOPIC: Search trees\nTOPIC: Heaps\n"));
    store.write(|tx| confirm_draft(tx, &first, "e1", 1)).unwrap();
    let c = store.write(|tx| confirm_draft(tx, &second, "e1", 2)).unwrap();
    assert_eq!(c.revision, 2);
    assert_eq!(c.changes.len(), 1);
    assert_eq!(c.changes[0].field, "topics");
    let confirms = store
        .snapshot()
        .audit_events()
        .filter(|a| a.action == "ingest.confirm")
        .count();
    assert_eq!(confirms, 2);
}

#[test]
fn spec_store_rejects_bad_weights_directly() {
    let store = catalogue();
    let mut spec = draft(SYLLABUS).to_specification(SpecStatus::Confirmed).unwrap();
    spec.assessment_methods[0].weight = 0.1;
    let err = store.upsert(crate::store::Record::CourseSpec(spec)).unwrap_err();
    assert_eq!(err.field(), Some("assessment_methods"));
}

fn line() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z0-9]{1,6}".prop_map(|k| format!("COURSE: {k}")),
        ("[a-c][0-9]", "(apply|create|bogus)?", "[A-Za-z ]{0,20}")
            .prop_map(|(id, b, s)| if b.is_empty() { format!("CLO {id}: {s}") } else { format!("CLO {id} [{b}]: {s}") }),
        "[A-Za-z ]{0,12}".prop_map(|t| format!("TOPIC: {t}")),
        ("[A-Za-z]{1,8}", 0u32..120).prop_map(|(n, w)| format!("ASSESS: {n}, {w}%")),
        "[A-Za-z ]{0,12}".prop_map(|t| format!("BOOK: {t}")),
        "[ -~]{0,20}",
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn extractor_is_pure(lines in prop::collection::vec(line(), 1..20)) {
        let text = lines.join("\n") + "\nCOURSE: x";
        let a = extract_specification(&text, &GrammarExtractor).unwrap();
        let b = extract_specification(&text, &GrammarExtractor).unwrap();
        prop_assert_eq!(crate::canonical::to_vec(&a).unwrap(), crate::canonical::to_vec(&b).unwrap());
        for c in a.content.confidence.values() {
            prop_assert!(*c == 0.0 || *c == 1.0);
        }
    }

    #[test]
    fn every_confirmed_spec_has_an_audit_event(lines in prop::collection::vec(line(), 1..20)) {
        let text = format!("COURSE: crs1\n{}", lines.join("\n"));
        let d = extract_specification(&text, &GrammarExtractor).unwrap();
        let eligible = validate_draft(&d).iter().all(|f| f.severity != Severity::Error);
        let store = catalogue();
        let res = store.write(|tx| confirm_draft(tx, &d, "e1", 0));
        prop_assert_eq!(res.is_ok(), eligible && d.content.course.as_ref().unwrap().value == "crs1");
        let snap = store.snapshot();
        let specs = snap.iter(RecordKind::CourseSpec).count();
        let audits = snap.audit_events().filter(|a| a.action == "ingest.confirm").count();
        prop_assert_eq!(specs, audits);
    }
}
