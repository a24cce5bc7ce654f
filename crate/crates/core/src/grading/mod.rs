//! Exams linked to learning outcomes, adapter-suggested grades, and the
//! human-in-the-loop decision state machine.
//!
//! A submission moves `pending -> suggested -> finalized` or directly
//! `pending -> finalized`. Nothing leaves `finalized`. Every finalization
//! appends one immutable [`ProvenanceRow`] recording whether the grade came
//! from the AI alone, a human alone, or both.

mod adapters;
mod mapping;

use serde::{Deserialize, Serialize};

pub use adapters::{
    FailingGrader, GeneratedQuestion, GradeProposal, GradingAdapter, MockGrader,
    QuestionGenerator, TemplateGenerator,
};
pub use mapping::{convert_grade, numeric20, DualGrade, GradeBand, GradeMapping, Letter};

use crate::autonomy::AutonomyLevel;
use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::ingestion::{spec_for_offering, BloomLevel};
use crate::store::{check_key, EnrollmentStatus, Record, RecordKind, Snapshot, Transaction};

const POINTS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Mcq,
    Essay,
    Code,
    Handwritten,
}

impl QuestionKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mcq" => Some(Self::Mcq),
            "essay" => Some(Self::Essay),
            "code" => Some(Self::Code),
            "handwritten" => Some(Self::Handwritten),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricCriterion {
    pub criterion: String,
    pub points: f64,
    #[serde(default)]
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub q_id: String,
    pub kind: QuestionKind,
    pub statement: String,
    pub max_points: f64,
    pub clo_links: Vec<String>,
    pub bloom_level: BloomLevel,
    #[serde(default)]
    pub rubric: Vec<RubricCriterion>,
    #[serde(default)]
    pub answer_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exam {
    pub exam_id: String,
    pub offering: String,
    pub questions: Vec<Question>,
}

impl Exam {
    pub fn question(&self, q_id: &str) -> Option<&Question> {
        self.questions.iter().find(|q| q.q_id == q_id)
    }

    pub(crate) fn check_invariants(&self) -> Result<()> {
        check_key("exam.exam_id", &self.exam_id)?;
        if self.questions.is_empty() {
            return Err(Error::validation("questions", "an exam needs at least one question"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for q in &self.questions {
            let field = |f: &str| format!("questions[{}].{f}", q.q_id);
            check_key("questions.q_id", &q.q_id)?;
            if !seen.insert(q.q_id.as_str()) {
                return Err(Error::validation("questions", format!("duplicate q_id {}", q.q_id)));
            }
            if !(q.max_points > 0.0 && q.max_points.is_finite()) {
                return Err(Error::validation(field("max_points"), "must be positive"));
            }
            if q.clo_links.is_empty() {
                return Err(Error::validation(field("clo_links"), "must link at least one CLO"));
            }
            if !q.rubric.is_empty() {
                let sum: f64 = q.rubric.iter().map(|c| c.points).sum();
                if (sum - q.max_points).abs() > POINTS_TOLERANCE {
                    return Err(Error::validation(
                        field("rubric"),
                        format!("rubric points sum to {sum}, expected {}", q.max_points),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Every CLO an exam references must exist in the offering's confirmed
/// specification.
pub(crate) fn check_exam_links(exam: &Exam, snap: &Snapshot) -> Result<()> {
    let spec = spec_for_offering(snap, &exam.offering).ok_or_else(|| {
        Error::Integrity(format!(
            "offering {} has no confirmed course specification",
            exam.offering
        ))
    })?;
    for q in &exam.questions {
        for clo in &q.clo_links {
            if spec.clo(clo).is_none() {
                return Err(Error::Integrity(format!("{clo} not in specification")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlueprintRow {
    pub kind: QuestionKind,
    pub clo_links: Vec<String>,
    pub bloom_level: BloomLevel,
    pub max_points: f64,
}

/// Build an exam from `blueprint`, one question per row, and store it.
pub fn create_exam(
    tx: &mut Transaction,
    exam_id: &str,
    offering: &str,
    blueprint: &[BlueprintRow],
    generator: &dyn QuestionGenerator,
) -> Result<Exam> {
    if blueprint.is_empty() {
        return Err(Error::validation("blueprint", "blueprint is empty"));
    }
    if tx.offering(offering).is_none() {
        return Err(Error::missing("offering", offering));
    }
    let spec = spec_for_offering(tx, offering).ok_or_else(|| {
        Error::Integrity(format!(
            "offering {offering} has no confirmed course specification"
        ))
    })?;
    let mut questions = Vec::with_capacity(blueprint.len());
    for (i, row) in blueprint.iter().enumerate() {
        let clos = row
            .clo_links
            .iter()
            .map(|id| {
                spec.clo(id)
                    .ok_or_else(|| Error::Integrity(format!("{id} not in specification")))
            })
            .collect::<Result<Vec<_>>>()?;
        let generated = generator
            .generate(i, row, &clos)
            .map_err(|message| Error::Adapter {
                adapter: generator.id().to_string(),
                message,
            })?;
        questions.push(Question {
            q_id: format!("q{}", i + 1),
            kind: row.kind,
            statement: generated.statement,
            max_points: row.max_points,
            clo_links: row.clo_links.clone(),
            bloom_level: row.bloom_level,
            rubric: generated.rubric,
            answer_key: generated.answer_key,
        });
    }
    let exam = Exam {
        exam_id: exam_id.to_string(),
        offering: offering.to_string(),
        questions,
    };
    if tx.exam(exam_id).is_some() {
        return Err(Error::Conflict(format!("exam {exam_id} already exists")));
    }
    tx.upsert(Record::Exam(exam.clone()))?;
    Ok(exam)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubmissionRef {
    pub exam_id: String,
    pub q_id: String,
    pub student: String,
}

impl SubmissionRef {
    pub fn new(exam_id: &str, q_id: &str, student: &str) -> Self {
        Self {
            exam_id: exam_id.into(),
            q_id: q_id.into(),
            student: student.into(),
        }
    }

    pub fn storage_key(&self) -> String {
        format!("{}/{}/{}", self.exam_id, self.q_id, self.student)
    }
}

impl std::fmt::Display for SubmissionRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{} by {}", self.exam_id, self.q_id, self.student)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeState {
    Pending,
    Suggested,
    Finalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionAction {
    Accepted,
    Adjusted,
    Overridden,
    HumanDirect,
    AutoFinalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Ai,
    Human,
    AiHuman,
}

impl Provenance {
    pub fn label(self) -> &'static str {
        match self {
            Provenance::Ai => "AI",
            Provenance::Human => "Human",
            Provenance::AiHuman => "AI+Human",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestedGrade {
    pub submission: SubmissionRef,
    pub points: f64,
    pub feedback: String,
    /// Adapter reasoning, stored verbatim.
    pub reasoning: String,
    pub adapter_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeDecision {
    pub submission: SubmissionRef,
    pub state: GradeState,
    pub action: DecisionAction,
    pub final_points: f64,
    pub final_feedback: String,
    pub provenance: Provenance,
    pub actor: String,
    pub timestamp: Timestamp,
}

/// Stored grading state of one submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradingCell {
    pub submission: SubmissionRef,
    pub answer_text: String,
    pub state: GradeState,
    #[serde(default)]
    pub suggestion: Option<SuggestedGrade>,
    #[serde(default)]
    pub error_note: Option<String>,
    #[serde(default)]
    pub decision: Option<GradeDecision>,
}

/// Append-only audit row written on every finalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRow {
    pub seq: u64,
    pub exam_id: String,
    pub q_id: String,
    pub student: String,
    pub action: DecisionAction,
    pub provenance: Provenance,
    pub final_points: f64,
    pub max_points: f64,
    pub clo_links: Vec<String>,
    pub actor: String,
    pub timestamp: Timestamp,
}

impl ProvenanceRow {
    pub fn storage_key(exam_id: &str, seq: u64) -> String {
        format!("{exam_id}/{seq:012}")
    }
}

/// Human decision on a submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Adjust {
        points: f64,
        #[serde(default)]
        feedback: Option<String>,
    },
    Override {
        points: f64,
        feedback: String,
    },
    HumanDirect {
        points: f64,
        feedback: String,
    },
}

fn lookup_question<'a>(snap: &'a Snapshot, sub: &SubmissionRef) -> Result<&'a Question> {
    let exam = snap
        .exam(&sub.exam_id)
        .ok_or_else(|| Error::NotFound(format!("exam {}", sub.exam_id)))?;
    exam.question(&sub.q_id)
        .ok_or_else(|| Error::NotFound(format!("question {} in exam {}", sub.q_id, sub.exam_id)))
}

fn cell<'a>(snap: &'a Snapshot, sub: &SubmissionRef) -> Result<&'a GradingCell> {
    snap.submission_by_key(&sub.storage_key())
        .ok_or_else(|| Error::NotFound(format!("submission {sub}")))
}

/// Record a student's answer; the submission starts `pending`.
pub fn submit_answer(tx: &mut Transaction, sub: &SubmissionRef, answer_text: &str) -> Result<GradingCell> {
    lookup_question(tx, sub)?;
    let exam = tx.exam(&sub.exam_id).expect("looked up");
    match tx.enrollment(&sub.student, &exam.offering) {
        Some(e) if e.status == EnrollmentStatus::Active => {}
        _ => {
            return Err(Error::Integrity(format!(
                "student {} has no active enrollment in offering {}",
                sub.student, exam.offering
            )))
        }
    }
    if let Some(existing) = tx.submission_by_key(&sub.storage_key()) {
        if existing.state != GradeState::Pending {
            return Err(Error::Conflict(format!(
                "submission {sub} is already {:?}",
                existing.state
            )));
        }
    }
    let cell = GradingCell {
        submission: sub.clone(),
        answer_text: answer_text.to_string(),
        state: GradeState::Pending,
        suggestion: None,
        error_note: None,
        decision: None,
    };
    tx.upsert(Record::Submission(cell.clone()))?;
    Ok(cell)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SuggestOutcome {
    Suggested(SuggestedGrade),
    /// The adapter failed; the submission stays `pending` with this note.
    Failed { adapter_id: String, note: String },
}

impl SuggestOutcome {
    pub fn into_result(self) -> Result<SuggestedGrade> {
        match self {
            SuggestOutcome::Suggested(s) => Ok(s),
            SuggestOutcome::Failed { adapter_id, note } => Err(Error::Adapter {
                adapter: adapter_id,
                message: note,
            }),
        }
    }
}

fn run_grader(
    question: &Question,
    cell: &GradingCell,
    grader: &dyn GradingAdapter,
) -> std::result::Result<SuggestedGrade, String> {
    let proposal = grader.suggest(question, &cell.answer_text)?;
    if !(0.0..=question.max_points).contains(&proposal.points) {
        return Err(format!(
            "suggested {} points outside [0, {}]",
            proposal.points, question.max_points
        ));
    }
    Ok(SuggestedGrade {
        submission: cell.submission.clone(),
        points: proposal.points,
        feedback: proposal.feedback,
        reasoning: proposal.reasoning,
        adapter_id: grader.id().to_string(),
    })
}

/// Ask `grader` for a suggestion. The suggestion is recorded, never final.
pub fn suggest_grade(
    tx: &mut Transaction,
    sub: &SubmissionRef,
    grader: &dyn GradingAdapter,
) -> Result<SuggestOutcome> {
    let question = lookup_question(tx, sub)?.clone();
    let mut cell = cell(tx, sub)?.clone();
    if cell.state != GradeState::Pending {
        return Err(Error::Conflict(format!(
            "submission {sub} is {:?}, suggestions need a pending submission",
            cell.state
        )));
    }
    let outcome = match run_grader(&question, &cell, grader) {
        Ok(s) => {
            cell.state = GradeState::Suggested;
            cell.error_note = None;
            cell.suggestion = Some(s.clone());
            SuggestOutcome::Suggested(s)
        }
        Err(note) => {
            cell.error_note = Some(format!("{}: {note}", grader.id()));
            SuggestOutcome::Failed {
                adapter_id: grader.id().to_string(),
                note,
            }
        }
    };
    tx.upsert(Record::Submission(cell))?;
    Ok(outcome)
}

fn check_points(points: f64, max: f64) -> Result<()> {
    if points.is_finite() && (0.0..=max).contains(&points) {
        Ok(())
    } else {
        Err(Error::validation("points", format!("{points} is outside [0, {max}]")))
    }
}

fn finalize(
    tx: &mut Transaction,
    question: &Question,
    mut cell: GradingCell,
    action: DecisionAction,
    provenance: Provenance,
    points: f64,
    feedback: String,
    actor: &str,
    at: Timestamp,
) -> Result<GradeDecision> {
    let decision = GradeDecision {
        submission: cell.submission.clone(),
        state: GradeState::Finalized,
        action,
        final_points: points,
        final_feedback: feedback,
        provenance,
        actor: actor.to_string(),
        timestamp: at,
    };
    cell.state = GradeState::Finalized;
    cell.decision = Some(decision.clone());
    let sub = cell.submission.clone();
    tx.upsert(Record::Submission(cell))?;
    let seq = tx.next_seq();
    tx.upsert(Record::GradeAudit(ProvenanceRow {
        seq,
        exam_id: sub.exam_id,
        q_id: sub.q_id,
        student: sub.student,
        action,
        provenance,
        final_points: points,
        max_points: question.max_points,
        clo_links: question.clo_links.clone(),
        actor: actor.to_string(),
        timestamp: at,
    }))?;
    Ok(decision)
}

/// Apply a human decision and finalize the submission.
///
/// `accept`/`adjust` keep the AI in the loop (`ai_human`); `override` and
/// `human_direct` take their values from the human alone (`human`).
pub fn decide_grade(
    tx: &mut Transaction,
    sub: &SubmissionRef,
    decision: &Decision,
    actor: &str,
    at: Timestamp,
) -> Result<GradeDecision> {
    let question = lookup_question(tx, sub)?.clone();
    let cell = cell(tx, sub)?.clone();
    if cell.state == GradeState::Finalized {
        return Err(Error::Conflict(format!("submission {sub} is already finalized")));
    }
    let suggestion = || {
        cell.suggestion
            .clone()
            .filter(|_| cell.state == GradeState::Suggested)
            .ok_or_else(|| {
                Error::Conflict(format!("submission {sub} has no suggestion to act on"))
            })
    };
    let (action, provenance, points, feedback) = match decision {
        Decision::Accept => {
            let s = suggestion()?;
            (DecisionAction::Accepted, Provenance::AiHuman, s.points, s.feedback)
        }
        Decision::Adjust { points, feedback } => {
            let s = suggestion()?;
            check_points(*points, question.max_points)?;
            let feedback = feedback.clone().unwrap_or(s.feedback);
            (DecisionAction::Adjusted, Provenance::AiHuman, *points, feedback)
        }
        Decision::Override { points, feedback } => {
            suggestion()?;
            check_points(*points, question.max_points)?;
            (DecisionAction::Overridden, Provenance::Human, *points, feedback.clone())
        }
        Decision::HumanDirect { points, feedback } => {
            check_points(*points, question.max_points)?;
            (DecisionAction::HumanDirect, Provenance::Human, *points, feedback.clone())
        }
    };
    finalize(tx, &question, cell, action, provenance, points, feedback, actor, at)
}

/// Finalize an MCQ without a human, allowed only at autonomy level 3 or
/// above. A pending submission is graded by `grader` on the spot; a
/// suggested one is finalized with its existing suggestion.
pub fn auto_finalize(
    tx: &mut Transaction,
    sub: &SubmissionRef,
    autonomy: AutonomyLevel,
    grader: &dyn GradingAdapter,
    at: Timestamp,
) -> Result<GradeDecision> {
    let question = lookup_question(tx, sub)?.clone();
    let cell = cell(tx, sub)?.clone();
    if question.kind != QuestionKind::Mcq {
        return Err(Error::Forbidden(format!(
            "{:?} questions always require a human decision",
            question.kind
        )));
    }
    if autonomy < AutonomyLevel::CONDITIONAL {
        return Err(Error::Forbidden(format!(
            "auto-finalization needs autonomy level 3 or above, policy is {autonomy}"
        )));
    }
    let suggestion = match cell.state {
        GradeState::Finalized => {
            return Err(Error::Conflict(format!("submission {sub} is already finalized")))
        }
        GradeState::Suggested => cell.suggestion.clone().expect("suggested state has suggestion"),
        GradeState::Pending => run_grader(&question, &cell, grader).map_err(|message| {
            Error::Adapter {
                adapter: grader.id().to_string(),
                message,
            }
        })?,
    };
    let actor = format!("ai:{}", suggestion.adapter_id);
    let mut cell = cell;
    cell.suggestion = Some(suggestion.clone());
    finalize(
        tx,
        &question,
        cell,
        DecisionAction::AutoFinalized,
        Provenance::Ai,
        suggestion.points,
        suggestion.feedback,
        &actor,
        at,
    )
}

/// Provenance rows of `exam_id` ordered by timestamp, then write order.
pub fn audit_trail(snap: &Snapshot, exam_id: &str) -> Result<Vec<ProvenanceRow>> {
    if snap.exam(exam_id).is_none() {
        return Err(Error::NotFound(format!("exam {exam_id}")));
    }
    let prefix = format!("{exam_id}/");
    let mut rows: Vec<ProvenanceRow> = snap
        .iter_prefix(RecordKind::GradeAudit, &prefix)
        .filter_map(|r| match r {
            Record::GradeAudit(row) if row.exam_id == exam_id => Some(row.clone()),
            _ => None,
        })
        .collect();
    rows.sort_by_key(|r| (r.timestamp, r.seq));
    Ok(rows)
}

/// One finalized grade with its CLO links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradebookRow {
    pub student: String,
    pub exam_id: String,
    pub q_id: String,
    pub offering: String,
    pub final_points: f64,
    pub max_points: f64,
    pub provenance: Provenance,
    pub clo_links: Vec<String>,
}

/// Finalized decisions of every exam belonging to `offering`.
pub fn gradebook(snap: &Snapshot, offering: &str) -> Vec<GradebookRow> {
    let mut rows = Vec::new();
    for exam in snap.exams().filter(|e| e.offering == offering) {
        let prefix = format!("{}/", exam.exam_id);
        for record in snap.iter_prefix(RecordKind::Submission, &prefix) {
            let Record::Submission(cell) = record else { continue };
            let (Some(d), Some(q)) = (&cell.decision, exam.question(&cell.submission.q_id)) else {
                continue;
            };
            if cell.state != GradeState::Finalized || cell.submission.exam_id != exam.exam_id {
                continue;
            }
            rows.push(GradebookRow {
                student: cell.submission.student.clone(),
                exam_id: exam.exam_id.clone(),
                q_id: q.q_id.clone(),
                offering: offering.to_string(),
                final_points: d.final_points,
                max_points: q.max_points,
                provenance: d.provenance,
                clo_links: q.clo_links.clone(),
            });
        }
    }
    rows
}

/// Gradebook CSV:
/// `student_id,exam_id,q_id,final_points,max_points,provenance,clo_links`.
pub fn export_gradebook_csv(rows: &[GradebookRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "student_id",
        "exam_id",
        "q_id",
        "final_points",
        "max_points",
        "provenance",
        "clo_links",
    ])?;
    for r in rows {
        let provenance = serde_json::to_value(r.provenance)?;
        w.write_record([
            r.student.as_str(),
            &r.exam_id,
            &r.q_id,
            &r.final_points.to_string(),
            &r.max_points.to_string(),
            provenance.as_str().unwrap_or_default(),
            &r.clo_links.join(";"),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
}
