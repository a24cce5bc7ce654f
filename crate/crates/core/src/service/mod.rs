//! Application facade shared by the HTTP service and the CLI. Every read
//! returns a JSON value so both surfaces emit identical canonical bytes;
//! every mutation checks the actor's role and writes an audit row.

pub mod cli;
pub mod http;

use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agent::{self, Definitions, RunRequest};
use crate::clock::{Clock, SystemClock, Timestamp};
use crate::config::{Role, ServiceConfig};
use crate::error::{Error, Result};
use crate::grading::{
    self, BlueprintRow, Decision, MockGrader, SubmissionRef, TemplateGenerator,
};
use crate::ingestion::{self, DraftSpecification, GrammarExtractor};
use crate::outcomes::{self, ComplianceContext};
use crate::reports::{ArchiveFilter, ReportArchive, ReportType};
use crate::store::{import_csv_in, ImportKind, Record, RecordKind, Store, Transaction};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON error body: `{code, message, field?}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
            field: e.field().map(str::to_string),
        }
    }
}

pub struct App {
    pub store: Store,
    pub archive: ReportArchive,
    pub config: ServiceConfig,
    pub definitions: Definitions,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for App {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("App").field("store", &self.store).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionArgs {
    pub exam_id: String,
    pub q_id: String,
    pub student: String,
}

impl SubmissionArgs {
    fn to_ref(&self) -> SubmissionRef {
        SubmissionRef::new(&self.exam_id, &self.q_id, &self.student)
    }
}

fn to_value<T: Serialize>(v: T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

impl App {
    /// Open the store (and its report archive under `reports/`) named by a
    /// validated config.
    pub fn open(config: ServiceConfig) -> Result<Self> {
        config.validate()?;
        let store = Store::open(&config.store)?;
        let archive = ReportArchive::open(config.store.join("reports"))?;
        let definitions = config.definitions()?;
        Ok(Self {
            store,
            archive,
            config,
            definitions,
            clock: Arc::new(SystemClock),
        })
    }

    pub fn new(store: Store, archive: ReportArchive, config: ServiceConfig, definitions: Definitions) -> Self {
        Self {
            store,
            archive,
            config,
            definitions,
            clock: Arc::new(SystemClock),
        }
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    /// Resolve `actor` to a role of at least `min`.
    pub fn require(&self, actor: Option<&str>, min: Role) -> Result<(String, Role)> {
        let actor = actor
            .filter(|a| !a.is_empty())
            .ok_or_else(|| Error::Forbidden("no actor given".into()))?;
        let role = self
            .config
            .role_of(actor)
            .ok_or_else(|| Error::Forbidden(format!("actor {actor} has no role")))?;
        if role < min {
            return Err(Error::Forbidden(format!(
                "{actor} is {}; {} or above required",
                role.as_str(),
                min.as_str()
            )));
        }
        Ok((actor.to_string(), role))
    }

    /// Instructors may act only on their own offerings.
    fn require_offering(&self, actor: Option<&str>, offering: &str) -> Result<String> {
        let (actor, role) = self.require(actor, Role::Instructor)?;
        if role == Role::Instructor {
            let snap = self.store.snapshot();
            let off = snap
                .offering(offering)
                .ok_or_else(|| Error::NotFound(format!("offering {offering}")))?;
            if off.instructor != actor {
                return Err(Error::Forbidden(format!(
                    "{actor} does not teach offering {offering}"
                )));
            }
        }
        Ok(actor)
    }

    fn offering_of_exam(&self, exam_id: &str) -> Result<String> {
        self.store
            .snapshot()
            .exam(exam_id)
            .map(|e| e.offering.clone())
            .ok_or_else(|| Error::NotFound(format!("exam {exam_id}")))
    }

    fn audited<R: Serialize>(
        &self,
        actor: &str,
        endpoint: &str,
        subject: &str,
        op: impl FnOnce(&mut Transaction) -> Result<R>,
    ) -> Result<Value> {
        let now = self.now();
        self.store.write(|tx| {
            let out = to_value(op(tx)?)?;
            tx.append_audit(actor, endpoint, subject, now, json!({}))?;
            Ok(out)
        })
    }

    // ---- reads ----

    pub fn health(&self) -> Value {
        json!({ "status": "ok", "version": VERSION, "seq": self.store.snapshot().seq() })
    }

    pub fn entities(&self, kind: &str) -> Result<Value> {
        let kind = RecordKind::parse(kind)
            .ok_or_else(|| Error::validation("kind", format!("unknown kind `{kind}`")))?;
        let snap = self.store.snapshot();
        let items: Vec<Value> = snap
            .iter(kind)
            .map(|r| serde_json::to_value(r).map(|v| v["data"].clone()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Value::Array(items))
    }

    pub fn outcomes_clo(&self, offering: &str, clo: &str) -> Result<Value> {
        to_value(outcomes::clo_achievement(
            &self.store.snapshot(),
            offering,
            clo,
            &self.config.outcomes,
        )?)
    }

    pub fn outcomes_plo(&self, program: &str, term: &str) -> Result<Value> {
        to_value(outcomes::plo_achievement(
            &self.store.snapshot(),
            program,
            term,
            &self.config.outcomes,
        )?)
    }

    pub fn outcomes_matrix(&self, program: &str, term: &str) -> Result<Value> {
        to_value(outcomes::build_matrix(
            &self.store.snapshot(),
            program,
            term,
            &self.config.outcomes,
        )?)
    }

    pub fn outcomes_comply(&self, course: &str) -> Result<Value> {
        let snap = self.store.snapshot();
        let ctx = ComplianceContext::for_course(&snap, course)?;
        let spec = snap
            .course_spec(course)
            .ok_or_else(|| Error::NotFound(format!("course specification {course}")))?;
        to_value(outcomes::check_compliance(spec, &ctx, &self.config.compliance))
    }

    pub fn grades_audit(&self, exam_id: &str) -> Result<Value> {
        to_value(grading::audit_trail(&self.store.snapshot(), exam_id)?)
    }

    pub fn wf_pending(&self) -> Result<Value> {
        to_value(agent::list_pending(&self.store.snapshot()))
    }

    pub fn reports(&self, filter: &ArchiveFilter) -> Result<Value> {
        to_value(self.archive.list(filter))
    }

    pub fn report(&self, id: &str) -> Result<Value> {
        to_value(
            self.archive
                .get(id)
                .ok_or_else(|| Error::NotFound(format!("report {id}")))?,
        )
    }

    // ---- mutations ----

    pub fn put_entity(&self, actor: Option<&str>, kind: &str, data: Value) -> Result<Value> {
        let (actor, _) = self.require(actor, Role::Coordinator)?;
        let kind = RecordKind::parse(kind)
            .filter(|k| k.is_plain_data())
            .ok_or_else(|| Error::validation("kind", format!("`{kind}` cannot be written directly")))?;
        let record: Record = serde_json::from_value(json!({ "record": kind.as_str(), "data": data }))
            .map_err(|e| Error::validation("body", e.to_string()))?;
        let subject = record.key().to_string();
        self.audited(&actor, &format!("POST /entities/{}", kind.as_str()), &subject, |tx| {
            tx.upsert(record)
        })
    }

    pub fn import(&self, actor: Option<&str>, kind: &str, csv: &str) -> Result<Value> {
        let (actor, _) = self.require(actor, Role::Coordinator)?;
        let kind = ImportKind::parse(kind)
            .ok_or_else(|| Error::validation("kind", format!("unknown import kind `{kind}`")))?;
        self.audited(&actor, &format!("POST /import/{}", kind.name()), kind.name(), |tx| {
            import_csv_in(tx, kind, csv.as_bytes())
        })
    }

    pub fn ingest_extract(&self, actor: Option<&str>, text: &str) -> Result<Value> {
        let (actor, _) = self.require(actor, Role::Instructor)?;
        let draft = ingestion::extract_specification(text, &GrammarExtractor)?;
        let subject = draft.draft_id.clone();
        self.audited(&actor, "POST /ingest/extract", &subject, |tx| {
            tx.upsert(Record::Draft(draft.clone()))?;
            Ok(draft)
        })
    }

    /// Confirm a stored draft, or an edited copy of it.
    pub fn ingest_confirm(
        &self,
        actor: Option<&str>,
        draft_id: &str,
        edited: Option<DraftSpecification>,
    ) -> Result<Value> {
        let (actor, _) = self.require(actor, Role::Instructor)?;
        let draft = match edited {
            Some(d) if d.draft_id == draft_id => d,
            Some(_) => return Err(Error::validation("draft_id", "edited draft has a different id")),
            None => self
                .store
                .snapshot()
                .draft(draft_id)
                .cloned()
                .ok_or_else(|| Error::NotFound(format!("draft {draft_id}")))?,
        };
        let now = self.now();
        self.audited(&actor, "POST /ingest/confirm", draft_id, |tx| {
            ingestion::confirm_draft(tx, &draft, &actor, now)
        })
    }

    pub fn create_exam(
        &self,
        actor: Option<&str>,
        exam_id: &str,
        offering: &str,
        blueprint: &[BlueprintRow],
    ) -> Result<Value> {
        let actor = self.require_offering(actor, offering)?;
        self.audited(&actor, "POST /exams", exam_id, |tx| {
            grading::create_exam(tx, exam_id, offering, blueprint, &TemplateGenerator)
        })
    }

    pub fn submit(&self, actor: Option<&str>, sub: &SubmissionArgs, answer: &str) -> Result<Value> {
        let offering = self.offering_of_exam(&sub.exam_id)?;
        let actor = self.require_offering(actor, &offering)?;
        self.audited(&actor, "POST /grades/submit", &sub.to_ref().storage_key(), |tx| {
            grading::submit_answer(tx, &sub.to_ref(), answer)
        })
    }

    pub fn suggest(&self, actor: Option<&str>, sub: &SubmissionArgs) -> Result<Value> {
        let offering = self.offering_of_exam(&sub.exam_id)?;
        let actor = self.require_offering(actor, &offering)?;
        self.audited(&actor, "POST /grades/suggest", &sub.to_ref().storage_key(), |tx| {
            grading::suggest_grade(tx, &sub.to_ref(), &MockGrader)
        })
    }

    pub fn decide(&self, actor: Option<&str>, sub: &SubmissionArgs, decision: &Decision) -> Result<Value> {
        let offering = self.offering_of_exam(&sub.exam_id)?;
        let actor = self.require_offering(actor, &offering)?;
        let now = self.now();
        self.audited(&actor, "POST /grades/decide", &sub.to_ref().storage_key(), |tx| {
            grading::decide_grade(tx, &sub.to_ref(), decision, &actor, now)
        })
    }

    pub fn wf_run(
        &self,
        actor: Option<&str>,
        workflow_id: &str,
        date: Option<NaiveDate>,
        student: Option<&str>,
    ) -> Result<Value> {
        let (actor, _) = self.require(actor, Role::Coordinator)?;
        let def = self.definitions.get(workflow_id)?;
        let date = match date {
            Some(d) => d,
            None => crate::clock::date_of(self.now())
                .ok_or_else(|| Error::validation("date", "clock out of range"))?,
        };
        let req = RunRequest {
            date: Some(date),
            student: student.map(str::to_string),
        };
        let outcome = agent::run_workflow(
            &self.store,
            &self.archive,
            def,
            &self.config.env(),
            &req,
            &actor,
        )?;
        let summary = json!({
            "workflow_id": outcome.workflow_id,
            "date": outcome.date,
            "status": outcome.status,
            "report_ids": outcome.report_ids,
            "terminal": outcome.transcript.terminal,
        });
        self.audited(&actor, "POST /wf/run", workflow_id, |_| Ok(()))?;
        Ok(summary)
    }

    pub fn wf_approve(&self, actor: Option<&str>, pending_id: &str) -> Result<Value> {
        let (actor, _) = self.require(actor, Role::Coordinator)?;
        let out = agent::approve(&self.store, &self.archive, pending_id, &actor, self.now())?;
        self.audited(&actor, "POST /wf/approve", pending_id, |_| Ok(()))?;
        to_value(out)
    }

    /// Parse report-list filters as given on the CLI or in a query string.
    pub fn report_filter(
        report_type: Option<&str>,
        from: Option<&str>,
        to: Option<&str>,
    ) -> Result<ArchiveFilter> {
        let day = |name: &str, s: Option<&str>, end: bool| -> Result<Option<Timestamp>> {
            s.map(|s| {
                let d: NaiveDate = s
                    .parse()
                    .map_err(|_| Error::validation(name, format!("bad date `{s}`")))?;
                let t = if end {
                    d.and_hms_opt(23, 59, 59).expect("valid time")
                } else {
                    d.and_hms_opt(0, 0, 0).expect("valid time")
                };
                Ok(crate::clock::timestamp_of(t))
            })
            .transpose()
        };
        Ok(ArchiveFilter {
            report_type: report_type
                .map(|t| {
                    ReportType::parse(t)
                        .ok_or_else(|| Error::validation("type", format!("unknown report type `{t}`")))
                })
                .transpose()?,
            from: day("from", from, false)?,
            to: day("to", to, true)?,
        })
    }
}
