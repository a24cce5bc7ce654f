//! Embedded single source of truth for institutional records.
//!
//! Records live in an in-memory ordered index keyed by `(kind, key)`. A store
//! opened on a directory persists every committed transaction to an append
//! log (`log.jsonl`, one canonical JSON line per put plus a commit marker)
//! and can fold the log into `snapshot.json` with [`Store::compact`].
//!
//! Writes are serialized through a single writer; readers take an
//! `Arc<Snapshot>` and never observe a partially applied transaction.

mod import;
mod log;
pub mod model;
mod query;
mod validate;

use std::collections::BTreeMap;
use std::ops::Deref;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{Error, Result};

pub use import::{format_sessions, import_csv, import_csv_in, ImportKind, ImportSummary, RejectedRow};
pub use model::*;
pub use query::{AttendancePolicy, AttendanceScope, AttendanceTally, DateWindow, ExcusedPolicy, SessionFact};

/// A record plus its per-key revision counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stored {
    pub revision: u64,
    pub record: Record,
}

/// Result of a successful put.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    pub key: RecordKey,
    /// 1 on first write, incremented on every replacement.
    pub revision: u64,
    /// Store-wide sequence number of the write.
    pub seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum IntegrityViolation {
    DanglingReference { from: RecordKey, missing: RecordKey },
    DuplicateKey { key: RecordKey },
}

/// Immutable, consistent view of the store.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    records: BTreeMap<RecordKey, Stored>,
    seq: u64,
    load_violations: Vec<IntegrityViolation>,
}

macro_rules! typed_access {
    ($($get:ident, $all:ident, $variant:ident, $ty:ty;)*) => {
        $(
            pub fn $get(&self, key: &str) -> Option<&$ty> {
                match self.record(RecordKind::$variant, key) {
                    Some(Record::$variant(v)) => Some(v),
                    _ => None,
                }
            }

            pub fn $all(&self) -> impl Iterator<Item = &$ty> + '_ {
                self.iter(RecordKind::$variant).filter_map(|r| match r {
                    Record::$variant(v) => Some(v),
                    _ => None,
                })
            }
        )*
    };
}

impl Snapshot {
    /// Sequence number of the last committed write.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &RecordKey) -> Option<&Stored> {
        self.records.get(key)
    }

    pub fn contains(&self, key: &RecordKey) -> bool {
        self.records.contains_key(key)
    }

    pub fn record(&self, kind: RecordKind, key: &str) -> Option<&Record> {
        // Avoid allocating a RecordKey for lookups on hot paths.
        self.records
            .range(RecordKey::new(kind, key)..)
            .next()
            .filter(|(k, _)| k.kind == kind && k.key == key)
            .map(|(_, s)| &s.record)
    }

    pub fn revision(&self, kind: RecordKind, key: &str) -> Option<u64> {
        self.records
            .get(&RecordKey::new(kind, key))
            .map(|s| s.revision)
    }

    /// All records of one kind in key order.
    pub fn iter(&self, kind: RecordKind) -> impl Iterator<Item = &Record> + '_ {
        self.records
            .range(RecordKey::new(kind, "")..)
            .take_while(move |(k, _)| k.kind == kind)
            .map(|(_, s)| &s.record)
    }

    /// Records of one kind whose key starts with `prefix`.
    pub fn iter_prefix(&self, kind: RecordKind, prefix: &str) -> impl Iterator<Item = &Record> + '_ {
        let prefix = prefix.to_string();
        self.records
            .range(RecordKey::new(kind, prefix.clone())..)
            .take_while(move |(k, _)| k.kind == kind && k.key.starts_with(prefix.as_str()))
            .map(|(_, s)| &s.record)
    }

    pub fn all(&self) -> impl Iterator<Item = (&RecordKey, &Stored)> + '_ {
        self.records.iter()
    }

    typed_access! {
        institution, institutions, Institution, Institution;
        building, buildings, Building, Building;
        classroom, classrooms, Classroom, Classroom;
        college, colleges, College, College;
        department, departments, Department, Department;
        program, programs, Program, Program;
        course, courses, Course, Course;
        offering, offerings, Offering, CourseOffering;
        term, terms, Term, Term;
        student, students, Student, Student;
        employee, employees, Employee, Employee;
        enrollment_by_key, enrollments, Enrollment, Enrollment;
        attendance_by_key, attendance_records, Attendance, AttendanceRecord;
        course_spec, course_specs, CourseSpec, crate::ingestion::CourseSpecification;
        draft, drafts, Draft, crate::ingestion::DraftSpecification;
        plo_by_key, plos, Plo, crate::outcomes::Plo;
        link_by_key, clo_plo_links, CloPloLink, crate::outcomes::CloPloLink;
        exam, exams, Exam, crate::grading::Exam;
        submission_by_key, submissions, Submission, crate::grading::GradingCell;
        grade_audit_by_key, grade_audit_rows, GradeAudit, crate::grading::ProvenanceRow;
        audit_by_key, audit_events, Audit, AuditEvent;
        pending_approval, pending_approvals, PendingApproval, crate::agent::gate::PendingApproval;
        trigger_state, trigger_states, TriggerState, crate::agent::trigger::TriggerState;
    }

    pub fn enrollment(&self, student: &str, offering: &str) -> Option<&Enrollment> {
        self.enrollment_by_key(&Enrollment::storage_key(student, offering))
    }

    /// Every dangling reference and duplicate-key violation. Empty iff the
    /// store is consistent.
    pub fn validate_references(&self) -> Vec<IntegrityViolation> {
        let mut out = self.load_violations.clone();
        for (key, stored) in &self.records {
            for target in stored.record.references() {
                if !self.records.contains_key(&target) {
                    out.push(IntegrityViolation::DanglingReference {
                        from: key.clone(),
                        missing: target,
                    });
                }
            }
        }
        out.sort();
        out
    }

    fn insert(&mut self, record: Record) -> Revision {
        let key = record.key();
        self.seq += 1;
        let revision = self.records.get(&key).map_or(1, |s| s.revision + 1);
        self.records.insert(key.clone(), Stored { revision, record });
        Revision {
            key,
            revision,
            seq: self.seq,
        }
    }
}

/// A write transaction. Reads through `Deref` see the transaction's own
/// uncommitted writes.
pub struct Transaction {
    work: Snapshot,
    log: Vec<log::LogLine>,
}

impl Deref for Transaction {
    type Target = Snapshot;

    fn deref(&self) -> &Snapshot {
        &self.work
    }
}

impl Transaction {
    /// Validate `record` against its invariants and the current state, then
    /// store it. On error nothing is written.
    pub fn upsert(&mut self, record: Record) -> Result<Revision> {
        validate::check(&record, &self.work)?;
        if record.kind().is_append_only() && self.work.contains(&record.key()) {
            return Err(Error::Conflict(format!(
                "{} is append-only",
                record.key()
            )));
        }
        Ok(self.put_unchecked(record))
    }

    /// Store without validation. Used for bulk restores where references may
    /// arrive out of order; `validate_references` reports what is left dangling.
    pub fn put_unchecked(&mut self, record: Record) -> Revision {
        let rev = self.work.insert(record.clone());
        self.log.push(log::LogLine::Put {
            seq: rev.seq,
            revision: rev.revision,
            record,
        });
        rev
    }

    /// Sequence number the next put will receive.
    pub fn next_seq(&self) -> u64 {
        self.work.seq + 1
    }

    /// Append a row to the mutation audit log.
    pub fn append_audit(
        &mut self,
        actor: &str,
        action: &str,
        subject: &str,
        timestamp: Timestamp,
        detail: serde_json::Value,
    ) -> Result<u64> {
        let seq = self.next_seq();
        self.upsert(Record::Audit(AuditEvent {
            seq,
            actor: actor.to_string(),
            action: action.to_string(),
            subject: subject.to_string(),
            timestamp,
            detail,
        }))?;
        Ok(seq)
    }

    pub fn write_count(&self) -> usize {
        self.log.len()
    }
}

pub struct Store {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<Option<log::LogWriter>>,
    dir: Option<PathBuf>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("dir", &self.dir)
            .field("seq", &self.snapshot().seq)
            .finish()
    }
}

impl Default for Store {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl Store {
    pub fn in_memory() -> Self {
        Self {
            current: RwLock::new(Arc::new(Snapshot::default())),
            writer: Mutex::new(None),
            dir: None,
        }
    }

    /// Open (or create) a file-backed store in `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let (snapshot, writer) = log::load(&dir)?;
        Ok(Self {
            current: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(Some(writer)),
            dir: Some(dir),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().clone()
    }

    /// Run `f` as one transaction. Its writes become visible (and durable,
    /// for file-backed stores) only if it returns `Ok`.
    pub fn write<R>(&self, f: impl FnOnce(&mut Transaction) -> Result<R>) -> Result<R> {
        let mut writer = self.writer.lock();
        let base = self.snapshot();
        let mut tx = Transaction {
            work: (*base).clone(),
            log: Vec::new(),
        };
        let out = f(&mut tx)?;
        if tx.log.is_empty() {
            return Ok(out);
        }
        if let Some(w) = writer.as_mut() {
            w.append(&tx.log, tx.work.seq)?;
        }
        *self.current.write() = Arc::new(tx.work);
        Ok(out)
    }

    pub fn upsert(&self, record: Record) -> Result<Revision> {
        self.write(|tx| tx.upsert(record))
    }

    /// Fold the append log into the snapshot file.
    pub fn compact(&self) -> Result<()> {
        let mut writer = self.writer.lock();
        if let Some(w) = writer.as_mut() {
            w.compact(&self.snapshot())?;
        }
        Ok(())
    }
}
