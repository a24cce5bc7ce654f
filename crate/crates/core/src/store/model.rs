use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::agent::gate::PendingApproval;
use crate::agent::trigger::TriggerState;
use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::grading::{Exam, GradingCell, ProvenanceRow};
use crate::ingestion::{CourseSpecification, DraftSpecification};
use crate::outcomes::{CloPloLink, Plo};

/// Kinds of first-class institutional entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Institution,
    Building,
    Classroom,
    College,
    Department,
    Program,
    Course,
    Offering,
    Term,
    Student,
    Employee,
}

impl EntityKind {
    pub const ALL: [EntityKind; 11] = [
        EntityKind::Institution,
        EntityKind::Building,
        EntityKind::Classroom,
        EntityKind::College,
        EntityKind::Department,
        EntityKind::Program,
        EntityKind::Course,
        EntityKind::Offering,
        EntityKind::Term,
        EntityKind::Student,
        EntityKind::Employee,
    ];

    pub fn as_str(self) -> &'static str {
        RecordKind::from(self).as_str()
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every collection the store holds, entities plus relationship and
/// workflow records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Institution,
    Building,
    Classroom,
    College,
    Department,
    Program,
    Course,
    Offering,
    Term,
    Student,
    Employee,
    Enrollment,
    Attendance,
    CourseSpec,
    Draft,
    Plo,
    CloPloLink,
    Exam,
    Submission,
    GradeAudit,
    Audit,
    PendingApproval,
    TriggerState,
}

impl RecordKind {
    pub const ALL: [RecordKind; 23] = [
        RecordKind::Institution,
        RecordKind::Building,
        RecordKind::Classroom,
        RecordKind::College,
        RecordKind::Department,
        RecordKind::Program,
        RecordKind::Course,
        RecordKind::Offering,
        RecordKind::Term,
        RecordKind::Student,
        RecordKind::Employee,
        RecordKind::Enrollment,
        RecordKind::Attendance,
        RecordKind::CourseSpec,
        RecordKind::Draft,
        RecordKind::Plo,
        RecordKind::CloPloLink,
        RecordKind::Exam,
        RecordKind::Submission,
        RecordKind::GradeAudit,
        RecordKind::Audit,
        RecordKind::PendingApproval,
        RecordKind::TriggerState,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds written directly as data rather than through a workflow
    /// (grading, ingestion, agent runs).
    pub fn is_plain_data(self) -> bool {
        matches!(
            self,
            RecordKind::Institution
                | RecordKind::Building
                | RecordKind::Classroom
                | RecordKind::College
                | RecordKind::Department
                | RecordKind::Program
                | RecordKind::Course
                | RecordKind::Offering
                | RecordKind::Term
                | RecordKind::Student
                | RecordKind::Employee
                | RecordKind::Enrollment
                | RecordKind::Attendance
                | RecordKind::Plo
                | RecordKind::CloPloLink
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Institution => "institution",
            RecordKind::Building => "building",
            RecordKind::Classroom => "classroom",
            RecordKind::College => "college",
            RecordKind::Department => "department",
            RecordKind::Program => "program",
            RecordKind::Course => "course",
            RecordKind::Offering => "offering",
            RecordKind::Term => "term",
            RecordKind::Student => "student",
            RecordKind::Employee => "employee",
            RecordKind::Enrollment => "enrollment",
            RecordKind::Attendance => "attendance",
            RecordKind::CourseSpec => "course_spec",
            RecordKind::Draft => "draft",
            RecordKind::Plo => "plo",
            RecordKind::CloPloLink => "clo_plo_link",
            RecordKind::Exam => "exam",
            RecordKind::Submission => "submission",
            RecordKind::GradeAudit => "grade_audit",
            RecordKind::Audit => "audit",
            RecordKind::PendingApproval => "pending_approval",
            RecordKind::TriggerState => "trigger_state",
        }
    }

    /// Append-only collections reject a second write to an existing key.
    pub fn is_append_only(self) -> bool {
        matches!(self, RecordKind::GradeAudit | RecordKind::Audit)
    }
}

impl From<EntityKind> for RecordKind {
    fn from(kind: EntityKind) -> Self {
        match kind {
            EntityKind::Institution => RecordKind::Institution,
            EntityKind::Building => RecordKind::Building,
            EntityKind::Classroom => RecordKind::Classroom,
            EntityKind::College => RecordKind::College,
            EntityKind::Department => RecordKind::Department,
            EntityKind::Program => RecordKind::Program,
            EntityKind::Course => RecordKind::Course,
            EntityKind::Offering => RecordKind::Offering,
            EntityKind::Term => RecordKind::Term,
            EntityKind::Student => RecordKind::Student,
            EntityKind::Employee => RecordKind::Employee,
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identity of an institutional entity: `(kind, key)`, unique in a store.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId {
    pub kind: EntityKind,
    pub key: String,
}

impl EntityId {
    pub fn new(kind: EntityKind, key: impl Into<String>) -> Result<Self> {
        let key = key.into();
        check_key(&format!("{kind}.id"), &key)?;
        Ok(Self { kind, key })
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.key)
    }
}

/// Storage address of any record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecordKey {
    pub kind: RecordKind,
    pub key: String,
}

impl RecordKey {
    pub fn new(kind: impl Into<RecordKind>, key: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            key: key.into(),
        }
    }
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.key)
    }
}

pub(crate) fn check_key(field: &str, key: &str) -> Result<()> {
    if key.trim().is_empty() {
        return Err(Error::validation(field, "key must be non-empty"));
    }
    if key.contains('/') || key.chars().any(char::is_control) {
        return Err(Error::validation(
            field,
            "key must not contain '/' or control characters",
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Institution {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: String,
    pub institution: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classroom {
    pub id: String,
    pub building: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct College {
    pub id: String,
    pub institution: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Department {
    pub id: String,
    pub college: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub id: String,
    pub department: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Course {
    pub id: String,
    pub department: String,
    pub title: String,
    #[serde(default)]
    pub programs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub id: String,
    pub label: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Student {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub program: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Employee {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub department: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Morning,
    Afternoon,
}

impl Slot {
    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Morning => "morning",
            Slot::Afternoon => "afternoon",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "morning" => Some(Slot::Morning),
            "afternoon" => Some(Slot::Afternoon),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduledSession {
    pub session_index: u32,
    pub date: NaiveDate,
    pub slot: Slot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseOffering {
    pub id: String,
    pub course: String,
    pub term: String,
    pub instructor: String,
    pub sessions: Vec<ScheduledSession>,
}

impl CourseOffering {
    pub fn session(&self, index: u32) -> Option<&ScheduledSession> {
        // Contiguity is enforced on write, so the index is a direct offset.
        index
            .checked_sub(1)
            .and_then(|i| self.sessions.get(i as usize))
            .filter(|s| s.session_index == index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrollmentStatus {
    Active,
    Withdrawn,
}

impl EnrollmentStatus {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "active" => Some(Self::Active),
            "withdrawn" => Some(Self::Withdrawn),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enrollment {
    pub student: String,
    pub offering: String,
    pub status: EnrollmentStatus,
}

impl Enrollment {
    pub fn storage_key(student: &str, offering: &str) -> String {
        format!("{offering}/{student}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttendanceStatus {
    Present,
    Late,
    Absent,
    Excused,
}

impl AttendanceStatus {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "present" => Some(Self::Present),
            "late" => Some(Self::Late),
            "absent" => Some(Self::Absent),
            "excused" => Some(Self::Excused),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttendanceRecord {
    pub student: String,
    pub offering: String,
    pub session_index: u32,
    pub status: AttendanceStatus,
}

impl AttendanceRecord {
    pub fn storage_key(student: &str, offering: &str, session_index: u32) -> String {
        format!("{offering}/{student}/{session_index:05}")
    }
}

/// One row of the general mutation audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEvent {
    pub seq: u64,
    pub actor: String,
    pub action: String,
    pub subject: String,
    pub timestamp: Timestamp,
    #[serde(default)]
    pub detail: serde_json::Value,
}

/// Tagged union of everything the store persists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", content = "data", rename_all = "snake_case")]
pub enum Record {
    Institution(Institution),
    Building(Building),
    Classroom(Classroom),
    College(College),
    Department(Department),
    Program(Program),
    Course(Course),
    Offering(CourseOffering),
    Term(Term),
    Student(Student),
    Employee(Employee),
    Enrollment(Enrollment),
    Attendance(AttendanceRecord),
    CourseSpec(CourseSpecification),
    Draft(DraftSpecification),
    Plo(Plo),
    CloPloLink(CloPloLink),
    Exam(Exam),
    Submission(GradingCell),
    GradeAudit(ProvenanceRow),
    Audit(AuditEvent),
    PendingApproval(PendingApproval),
    TriggerState(TriggerState),
}

impl Record {
    pub fn kind(&self) -> RecordKind {
        match self {
            Record::Institution(_) => RecordKind::Institution,
            Record::Building(_) => RecordKind::Building,
            Record::Classroom(_) => RecordKind::Classroom,
            Record::College(_) => RecordKind::College,
            Record::Department(_) => RecordKind::Department,
            Record::Program(_) => RecordKind::Program,
            Record::Course(_) => RecordKind::Course,
            Record::Offering(_) => RecordKind::Offering,
            Record::Term(_) => RecordKind::Term,
            Record::Student(_) => RecordKind::Student,
            Record::Employee(_) => RecordKind::Employee,
            Record::Enrollment(_) => RecordKind::Enrollment,
            Record::Attendance(_) => RecordKind::Attendance,
            Record::CourseSpec(_) => RecordKind::CourseSpec,
            Record::Draft(_) => RecordKind::Draft,
            Record::Plo(_) => RecordKind::Plo,
            Record::CloPloLink(_) => RecordKind::CloPloLink,
            Record::Exam(_) => RecordKind::Exam,
            Record::Submission(_) => RecordKind::Submission,
            Record::GradeAudit(_) => RecordKind::GradeAudit,
            Record::Audit(_) => RecordKind::Audit,
            Record::PendingApproval(_) => RecordKind::PendingApproval,
            Record::TriggerState(_) => RecordKind::TriggerState,
        }
    }

    pub fn key(&self) -> RecordKey {
        let key = match self {
            Record::Institution(r) => r.id.clone(),
            Record::Building(r) => r.id.clone(),
            Record::Classroom(r) => r.id.clone(),
            Record::College(r) => r.id.clone(),
            Record::Department(r) => r.id.clone(),
            Record::Program(r) => r.id.clone(),
            Record::Course(r) => r.id.clone(),
            Record::Offering(r) => r.id.clone(),
            Record::Term(r) => r.id.clone(),
            Record::Student(r) => r.id.clone(),
            Record::Employee(r) => r.id.clone(),
            Record::Enrollment(r) => Enrollment::storage_key(&r.student, &r.offering),
            Record::Attendance(r) => {
                AttendanceRecord::storage_key(&r.student, &r.offering, r.session_index)
            }
            Record::CourseSpec(r) => r.course.clone(),
            Record::Draft(r) => r.draft_id.clone(),
            Record::Plo(r) => Plo::storage_key(&r.program, &r.plo_id),
            Record::CloPloLink(r) => r.storage_key(),
            Record::Exam(r) => r.exam_id.clone(),
            Record::Submission(r) => r.submission.storage_key(),
            Record::GradeAudit(r) => ProvenanceRow::storage_key(&r.exam_id, r.seq),
            Record::Audit(r) => format!("{:012}", r.seq),
            Record::PendingApproval(r) => r.pending_id.clone(),
            Record::TriggerState(r) => r.workflow_id.clone(),
        };
        RecordKey::new(self.kind(), key)
    }

    /// Outgoing references to other records, as `(kind, key)` pairs.
    pub fn references(&self) -> Vec<RecordKey> {
        use RecordKind as K;
        let r = |kind: K, key: &str| RecordKey::new(kind, key);
        match self {
            Record::Institution(_) | Record::Term(_) => vec![],
            Record::Building(b) => vec![r(K::Institution, &b.institution)],
            Record::Classroom(c) => vec![r(K::Building, &c.building)],
            Record::College(c) => vec![r(K::Institution, &c.institution)],
            Record::Department(d) => vec![r(K::College, &d.college)],
            Record::Program(p) => vec![r(K::Department, &p.department)],
            Record::Course(c) => std::iter::once(r(K::Department, &c.department))
                .chain(c.programs.iter().map(|p| r(K::Program, p)))
                .collect(),
            Record::Offering(o) => vec![
                r(K::Course, &o.course),
                r(K::Term, &o.term),
                r(K::Employee, &o.instructor),
            ],
            Record::Student(s) => s.program.iter().map(|p| r(K::Program, p)).collect(),
            Record::Employee(e) => e.department.iter().map(|d| r(K::Department, d)).collect(),
            Record::Enrollment(e) => vec![r(K::Student, &e.student), r(K::Offering, &e.offering)],
            Record::Attendance(a) => vec![
                r(K::Student, &a.student),
                r(K::Offering, &a.offering),
                r(K::Enrollment, &Enrollment::storage_key(&a.student, &a.offering)),
            ],
            Record::CourseSpec(s) => vec![r(K::Course, &s.course)],
            Record::Draft(_) => vec![],
            Record::Plo(p) => vec![r(K::Program, &p.program)],
            Record::CloPloLink(l) => vec![
                r(K::Course, &l.course),
                r(K::Plo, &Plo::storage_key(&l.program, &l.plo_id)),
            ],
            Record::Exam(e) => vec![r(K::Offering, &e.offering)],
            Record::Submission(c) => vec![
                r(K::Exam, &c.submission.exam_id),
                r(K::Student, &c.submission.student),
            ],
            Record::GradeAudit(row) => vec![r(K::Exam, &row.exam_id)],
            Record::Audit(_) | Record::PendingApproval(_) | Record::TriggerState(_) => vec![],
        }
    }
}
