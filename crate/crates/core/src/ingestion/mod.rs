//! Course-document ingestion: an extractor turns syllabus text into a draft
//! specification, drafts are validated, and a named reviewer confirms them
//! into the store.

mod grammar;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use grammar::GrammarExtractor;

use crate::canonical;
use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::store::{check_key, Record, Snapshot, Transaction};

pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BloomLevel {
    Remember,
    Understand,
    Apply,
    Analyze,
    Evaluate,
    Create,
}

impl BloomLevel {
    pub const ALL: [BloomLevel; 6] = [
        BloomLevel::Remember,
        BloomLevel::Understand,
        BloomLevel::Apply,
        BloomLevel::Analyze,
        BloomLevel::Evaluate,
        BloomLevel::Create,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BloomLevel::Remember => "remember",
            BloomLevel::Understand => "understand",
            BloomLevel::Apply => "apply",
            BloomLevel::Analyze => "analyze",
            BloomLevel::Evaluate => "evaluate",
            BloomLevel::Create => "create",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase();
        Self::ALL.into_iter().find(|b| b.as_str() == s)
    }
}

impl fmt::Display for BloomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Course learning outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clo {
    pub clo_id: String,
    pub statement: String,
    #[serde(default)]
    pub bloom_level: Option<BloomLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentMethod {
    pub name: String,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecStatus {
    Draft,
    Confirmed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseSpecification {
    pub course: String,
    pub clos: Vec<Clo>,
    pub topics: Vec<String>,
    pub assessment_methods: Vec<AssessmentMethod>,
    pub textbooks: Vec<String>,
    pub status: SpecStatus,
}

impl CourseSpecification {
    pub fn clo(&self, clo_id: &str) -> Option<&Clo> {
        self.clos.iter().find(|c| c.clo_id == clo_id)
    }

    pub fn weight_sum(&self) -> f64 {
        self.assessment_methods.iter().map(|m| m.weight).sum()
    }

    pub(crate) fn check_invariants(&self) -> Result<()> {
        check_key("course_spec.course", &self.course)?;
        if !self.assessment_methods.is_empty()
            && (self.weight_sum() - 1.0).abs() > WEIGHT_TOLERANCE
        {
            return Err(Error::validation(
                "assessment_methods",
                format!("weights sum to {}, expected 1.0", self.weight_sum()),
            ));
        }
        if self.status == SpecStatus::Confirmed && self.clos.is_empty() {
            return Err(Error::validation(
                "clos",
                "a confirmed specification needs at least one CLO",
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        for clo in &self.clos {
            check_key("clos.clo_id", &clo.clo_id)?;
            if clo.statement.trim().is_empty() {
                return Err(Error::validation(
                    format!("clos[{}].statement", clo.clo_id),
                    "statement must be non-empty",
                ));
            }
            if !seen.insert(clo.clo_id.as_str()) {
                return Err(Error::validation(
                    "clos",
                    format!("duplicate clo_id {}", clo.clo_id),
                ));
            }
        }
        Ok(())
    }
}

/// 1-based inclusive line range in the source document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSpan {
    pub start: u32,
    pub end: u32,
}

impl LineSpan {
    pub fn line(n: u32) -> Self {
        Self { start: n, end: n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extracted<T> {
    pub value: T,
    pub span: LineSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Finding {
    pub fn warn(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warn,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        }
    }
}

/// What an extractor produces from one document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DraftContent {
    pub course: Option<Extracted<String>>,
    pub clos: Vec<Extracted<Clo>>,
    pub topics: Vec<Extracted<String>>,
    pub assessment_methods: Vec<Extracted<AssessmentMethod>>,
    pub textbooks: Vec<Extracted<String>>,
    /// Per-field confidence in `[0, 1]`.
    pub confidence: BTreeMap<String, f64>,
    /// Extraction-time warnings (duplicates, unrecognized lines, ...).
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftSpecification {
    pub draft_id: String,
    pub adapter_id: String,
    pub status: SpecStatus,
    #[serde(flatten)]
    pub content: DraftContent,
}

impl DraftSpecification {
    /// The specification this draft would become once confirmed.
    pub fn to_specification(&self, status: SpecStatus) -> Option<CourseSpecification> {
        let course = self.content.course.as_ref()?.value.clone();
        Some(CourseSpecification {
            course,
            clos: self.content.clos.iter().map(|c| c.value.clone()).collect(),
            topics: self.content.topics.iter().map(|t| t.value.clone()).collect(),
            assessment_methods: self
                .content
                .assessment_methods
                .iter()
                .map(|m| m.value.clone())
                .collect(),
            textbooks: self.content.textbooks.iter().map(|b| b.value.clone()).collect(),
            status,
        })
    }
}

/// Pluggable document extractor. LLM-backed implementations live outside
/// this crate; [`GrammarExtractor`] is the deterministic in-repo one.
pub trait ExtractorAdapter {
    fn id(&self) -> &str;
    fn extract(&self, document_text: &str) -> std::result::Result<DraftContent, String>;
}

/// Run `adapter` over `document_text` and wrap the result as a draft.
/// Nothing is persisted.
pub fn extract_specification(
    document_text: &str,
    adapter: &dyn ExtractorAdapter,
) -> Result<DraftSpecification> {
    if document_text.trim().is_empty() {
        return Err(Error::validation("document_text", "document is empty"));
    }
    let mut content = adapter.extract(document_text).map_err(|message| Error::Adapter {
        adapter: adapter.id().to_string(),
        message,
    })?;
    if content.clos.is_empty() {
        content.findings.push(Finding::warn("clos", "no CLOs found"));
    }
    if content.topics.is_empty() {
        content
            .findings
            .push(Finding::warn("topics", "no topics found"));
    }
    let draft_id = format!(
        "draft-{}",
        &canonical::digest(&(adapter.id(), &content))?[..16]
    );
    Ok(DraftSpecification {
        draft_id,
        adapter_id: adapter.id().to_string(),
        status: SpecStatus::Draft,
        content,
    })
}

/// Content checks on a draft. `Error` findings block confirmation.
pub fn validate_draft(draft: &DraftSpecification) -> Vec<Finding> {
    let c = &draft.content;
    let mut out = Vec::new();
    if c.course.is_none() {
        out.push(Finding::error("course", "course key is missing"));
    }
    if c.clos.is_empty() {
        out.push(Finding::error("clos", "at least one CLO is required"));
    }
    for clo in &c.clos {
        let clo = &clo.value;
        if clo.statement.trim().is_empty() {
            out.push(Finding::error(
                format!("clos[{}].statement", clo.clo_id),
                "statement is empty",
            ));
        }
        if clo.bloom_level.is_none() {
            out.push(Finding::warn(
                format!("clos[{}].bloom_level", clo.clo_id),
                "bloom level is missing",
            ));
        }
    }
    if c.topics.is_empty() {
        out.push(Finding::warn("topics", "no topics listed"));
    }
    if c.assessment_methods.is_empty() {
        out.push(Finding::warn("assessment_methods", "no assessment methods listed"));
    } else {
        for m in &c.assessment_methods {
            if !(0.0..=1.0).contains(&m.value.weight) {
                out.push(Finding::error(
                    "assessment_methods",
                    format!("weight of `{}` is outside [0, 1]", m.value.name),
                ));
            }
        }
        let sum: f64 = c.assessment_methods.iter().map(|m| m.value.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            out.push(Finding::error(
                "assessment_methods",
                format!("weights sum to {sum}, expected 1.0"),
            ));
        }
    }
    if c.textbooks.is_empty() {
        out.push(Finding::warn("textbooks", "no textbooks listed"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldChange {
    pub field: String,
    pub before: serde_json::Value,
    pub after: serde_json::Value,
}

/// Field-level differences between a stored specification and a candidate.
pub fn diff_specifications(
    before: &CourseSpecification,
    after: &CourseSpecification,
) -> Result<Vec<FieldChange>> {
    let b = serde_json::to_value(before)?;
    let a = serde_json::to_value(after)?;
    let mut out = Vec::new();
    for field in ["clos", "topics", "assessment_methods", "textbooks"] {
        if b[field] != a[field] {
            out.push(FieldChange {
                field: field.to_string(),
                before: b[field].clone(),
                after: a[field].clone(),
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confirmation {
    pub specification: CourseSpecification,
    pub revision: u64,
    pub audit_seq: u64,
    pub draft_hash: String,
    /// Differences from the previously confirmed specification, if any.
    pub changes: Vec<FieldChange>,
}

/// Confirm `draft` on behalf of `reviewer`, store the specification and
/// append an audit event.
pub fn confirm_draft(
    tx: &mut Transaction,
    draft: &DraftSpecification,
    reviewer: &str,
    at: Timestamp,
) -> Result<Confirmation> {
    let blocking: Vec<String> = validate_draft(draft)
        .into_iter()
        .filter(|f| f.severity == Severity::Error)
        .map(|f| format!("{}: {}", f.field, f.message))
        .collect();
    if !blocking.is_empty() {
        return Err(Error::validation("draft", blocking.join("; ")));
    }
    if tx.employee(reviewer).is_none() {
        return Err(Error::missing("employee", reviewer));
    }
    let spec = draft
        .to_specification(SpecStatus::Confirmed)
        .expect("course presence validated");
    let changes = match tx.course_spec(&spec.course) {
        Some(existing) => diff_specifications(existing, &spec)?,
        None => Vec::new(),
    };
    let draft_hash = canonical::digest(draft)?;
    let rev = tx.upsert(Record::CourseSpec(spec.clone()))?;
    let audit_seq = tx.append_audit(
        reviewer,
        "ingest.confirm",
        &format!("course_spec {}", spec.course),
        at,
        serde_json::json!({
            "reviewer": reviewer,
            "draft_id": draft.draft_id,
            "draft_hash": draft_hash,
            "revision": rev.revision,
        }),
    )?;
    Ok(Confirmation {
        specification: spec,
        revision: rev.revision,
        audit_seq,
        draft_hash,
        changes,
    })
}

/// Confirmed specification for the course an offering teaches.
pub fn spec_for_offering<'a>(snap: &'a Snapshot, offering: &str) -> Option<&'a CourseSpecification> {
    let offering = snap.offering(offering)?;
    snap.course_spec(&offering.course)
        .filter(|s| s.status == SpecStatus::Confirmed)
}

#[cfg(test)]
mod tests;
