//! Per-row CSV ingestion. Every accepted row is upserted through the normal
//! validation path; rejected rows are reported with their 1-based line
//! number (the header is line 1).

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::model::*;
use super::{Store, Transaction};
use crate::error::{Error, Result};
use crate::outcomes::{CloPloLink, Contribution, Plo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportKind {
    Entity(EntityKind),
    Enrollment,
    Attendance,
    Plo,
    CloPloLink,
}

impl ImportKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "enrollment" => Some(Self::Enrollment),
            "attendance" => Some(Self::Attendance),
            "plo" => Some(Self::Plo),
            "clo_plo_link" => Some(Self::CloPloLink),
            other => EntityKind::parse(other).map(Self::Entity),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Entity(k) => k.as_str(),
            Self::Enrollment => "enrollment",
            Self::Attendance => "attendance",
            Self::Plo => "plo",
            Self::CloPloLink => "clo_plo_link",
        }
    }

    /// The exact, ordered header each file kind must carry.
    pub fn header(self) -> &'static [&'static str] {
        match self {
            Self::Entity(EntityKind::Institution) => &["institution_id", "name"],
            Self::Entity(EntityKind::Building) => &["building_id", "institution_id", "name"],
            Self::Entity(EntityKind::Classroom) => &["classroom_id", "building_id", "name"],
            Self::Entity(EntityKind::College) => &["college_id", "institution_id", "name"],
            Self::Entity(EntityKind::Department) => &["department_id", "college_id", "name"],
            Self::Entity(EntityKind::Program) => &["program_id", "department_id", "name"],
            Self::Entity(EntityKind::Course) => {
                &["course_id", "department_id", "title", "program_ids"]
            }
            Self::Entity(EntityKind::Term) => &["term_id", "label", "start_date", "end_date"],
            Self::Entity(EntityKind::Student) => &["student_id", "name", "program_id"],
            Self::Entity(EntityKind::Employee) => &["employee_id", "name", "department_id"],
            Self::Entity(EntityKind::Offering) => &[
                "offering_id",
                "course_id",
                "term_id",
                "instructor_id",
                "sessions",
            ],
            Self::Enrollment => &["student_id", "offering_id", "status"],
            Self::Attendance => &["student_id", "offering_id", "session_index", "status"],
            Self::Plo => &["program_id", "plo_id", "statement", "abet_criterion"],
            Self::CloPloLink => &["course_id", "clo_id", "program_id", "plo_id", "contribution"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportSummary {
    pub accepted: usize,
    pub rejected: Vec<RejectedRow>,
}

pub fn import_csv(store: &Store, kind: ImportKind, input: impl Read) -> Result<ImportSummary> {
    store.write(|tx| import_csv_in(tx, kind, input))
}

/// Import inside an open transaction. A malformed header fails the whole
/// file; anything else is judged row by row.
pub fn import_csv_in(
    tx: &mut Transaction,
    kind: ImportKind,
    input: impl Read,
) -> Result<ImportSummary> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let expected = kind.header();
    let headers = reader.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::validation(
            "header",
            format!(
                "{} file must start with `{}`, found `{}`",
                kind.name(),
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut summary = ImportSummary::default();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                summary.rejected.push(RejectedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = row.iter().collect();
        let outcome = if fields.len() != expected.len() {
            Err(format!(
                "expected {} fields, found {}",
                expected.len(),
                fields.len()
            ))
        } else {
            parse_row(kind, &fields).and_then(|rec| tx.upsert(rec).map_err(|e| e.to_string()))
        };
        match outcome {
            Ok(_) => summary.accepted += 1,
            Err(reason) => summary.rejected.push(RejectedRow { line, reason }),
        }
    }
    Ok(summary)
}

fn opt(s: &str) -> Option<String> {
    (!s.is_empty()).then(|| s.to_string())
}

fn date(field: &str, s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("invalid {field} `{s}`"))
}

fn parse_row(kind: ImportKind, f: &[&str]) -> Result<Record, String> {
    let s = |i: usize| f[i].to_string();
    Ok(match kind {
        ImportKind::Entity(EntityKind::Institution) => Record::Institution(Institution {
            id: s(0),
            name: s(1),
        }),
        ImportKind::Entity(EntityKind::Building) => Record::Building(Building {
            id: s(0),
            institution: s(1),
            name: s(2),
        }),
        ImportKind::Entity(EntityKind::Classroom) => Record::Classroom(Classroom {
            id: s(0),
            building: s(1),
            name: s(2),
        }),
        ImportKind::Entity(EntityKind::College) => Record::College(College {
            id: s(0),
            institution: s(1),
            name: s(2),
        }),
        ImportKind::Entity(EntityKind::Department) => Record::Department(Department {
            id: s(0),
            college: s(1),
            name: s(2),
        }),
        ImportKind::Entity(EntityKind::Program) => Record::Program(Program {
            id: s(0),
            department: s(1),
            name: s(2),
        }),
        ImportKind::Entity(EntityKind::Course) => Record::Course(Course {
            id: s(0),
            department: s(1),
            title: s(2),
            programs: f[3]
                .split(';')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(String::from)
                .collect(),
        }),
        ImportKind::Entity(EntityKind::Term) => Record::Term(Term {
            id: s(0),
            label: s(1),
            start_date: date("start_date", f[2])?,
            end_date: date("end_date", f[3])?,
        }),
        ImportKind::Entity(EntityKind::Student) => Record::Student(Student {
            id: s(0),
            name: s(1),
            program: opt(f[2]),
        }),
        ImportKind::Entity(EntityKind::Employee) => Record::Employee(Employee {
            id: s(0),
            name: s(1),
            department: opt(f[2]),
        }),
        ImportKind::Entity(EntityKind::Offering) => Record::Offering(CourseOffering {
            id: s(0),
            course: s(1),
            term: s(2),
            instructor: s(3),
            sessions: parse_sessions(f[4])?,
        }),
        ImportKind::Enrollment => Record::Enrollment(Enrollment {
            student: s(0),
            offering: s(1),
            status: EnrollmentStatus::parse(f[2])
                .ok_or_else(|| format!("unknown status `{}`", f[2]))?,
        }),
        ImportKind::Attendance => Record::Attendance(AttendanceRecord {
            student: s(0),
            offering: s(1),
            session_index: f[2]
                .parse()
                .map_err(|_| format!("invalid session_index `{}`", f[2]))?,
            status: AttendanceStatus::parse(f[3])
                .ok_or_else(|| format!("unknown status `{}`", f[3]))?,
        }),
        ImportKind::Plo => Record::Plo(Plo {
            program: s(0),
            plo_id: s(1),
            statement: s(2),
            abet_criterion: opt(f[3]),
        }),
        ImportKind::CloPloLink => Record::CloPloLink(CloPloLink {
            course: s(0),
            clo_id: s(1),
            program: s(2),
            plo_id: s(3),
            contribution: Contribution::parse(f[4])
                .ok_or_else(|| format!("unknown contribution `{}`", f[4]))?,
        }),
    })
}

/// `2025-09-01/morning;2025-09-03/afternoon`; indices are assigned in order.
fn parse_sessions(s: &str) -> Result<Vec<ScheduledSession>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .enumerate()
        .map(|(i, part)| {
            let (d, slot) = part
                .split_once('/')
                .ok_or_else(|| format!("session `{part}` must be `<date>/<slot>`"))?;
            Ok(ScheduledSession {
                session_index: i as u32 + 1,
                date: date("session date", d)?,
                slot: Slot::parse(slot).ok_or_else(|| format!("unknown slot `{slot}`"))?,
            })
        })
        .collect()
}

/// Inverse of [`parse_sessions`], used when exporting offerings.
pub fn format_sessions(sessions: &[ScheduledSession]) -> String {
    sessions
        .iter()
        .map(|s| format!("{}/{}", s.date, s.slot.as_str()))
        .collect::<Vec<_>>()
        .join(";")
}
