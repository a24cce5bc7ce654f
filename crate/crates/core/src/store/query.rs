use std::collections::BTreeSet;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use super::model::*;
use super::Snapshot;
use crate::error::{Error, Result};

/// How `excused` sessions enter an attendance rate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcusedPolicy {
    /// Neither attended nor missed.
    #[default]
    Exclude,
    CountAttended,
    CountAbsent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttendancePolicy {
    #[serde(default)]
    pub excused: ExcusedPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scope", content = "id", rename_all = "snake_case")]
pub enum AttendanceScope {
    Student(String),
    Offering(String),
    Course(String),
    Department(String),
    Institution,
}

/// Inclusive date range; open ends are unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub from: Option<NaiveDate>,
    pub to: Option<NaiveDate>,
}

impl DateWindow {
    pub const ALL: DateWindow = DateWindow {
        from: None,
        to: None,
    };

    pub fn between(from: NaiveDate, to: NaiveDate) -> Self {
        Self {
            from: Some(from),
            to: Some(to),
        }
    }

    /// The `days`-day window ending on (and including) `end`.
    pub fn trailing(end: NaiveDate, days: u32) -> Self {
        let start = end - chrono::Duration::days(i64::from(days.max(1)) - 1);
        Self::between(start, end)
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from.is_none_or(|f| date >= f) && self.to.is_none_or(|t| date <= t)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttendanceTally {
    pub present: u32,
    pub late: u32,
    pub absent: u32,
    pub excused: u32,
}

impl AttendanceTally {
    pub fn add(&mut self, status: AttendanceStatus) {
        match status {
            AttendanceStatus::Present => self.present += 1,
            AttendanceStatus::Late => self.late += 1,
            AttendanceStatus::Absent => self.absent += 1,
            AttendanceStatus::Excused => self.excused += 1,
        }
    }

    pub fn merge(&mut self, other: &AttendanceTally) {
        self.present += other.present;
        self.late += other.late;
        self.absent += other.absent;
        self.excused += other.excused;
    }

    /// `(attended, countable)` under `policy`. `late` counts as attended.
    pub fn counts(&self, policy: AttendancePolicy) -> (u32, u32) {
        let attended = self.present + self.late;
        match policy.excused {
            ExcusedPolicy::Exclude => (attended, attended + self.absent),
            ExcusedPolicy::CountAttended => (
                attended + self.excused,
                attended + self.absent + self.excused,
            ),
            ExcusedPolicy::CountAbsent => (attended, attended + self.absent + self.excused),
        }
    }

    /// Attendance rate in `[0, 1]`, or `None` when nothing is countable.
    pub fn rate(&self, policy: AttendancePolicy) -> Option<f64> {
        let (num, den) = self.counts(policy);
        (den > 0).then(|| f64::from(num) / f64::from(den))
    }
}

/// One attendance record joined with its schedule and course context.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionFact<'a> {
    pub student: &'a str,
    pub offering: &'a CourseOffering,
    pub course: Option<&'a Course>,
    pub session_index: u32,
    pub date: NaiveDate,
    pub slot: Slot,
    pub status: AttendanceStatus,
}

impl SessionFact<'_> {
    pub fn weekday(&self) -> Weekday {
        self.date.weekday()
    }

    pub fn department(&self) -> Option<&str> {
        self.course.map(|c| c.department.as_str())
    }
}

impl Snapshot {
    /// Distinct students holding at least one active enrollment in any
    /// offering of `term`.
    pub fn enrollment_count(&self, term: &str) -> Result<usize> {
        if self.term(term).is_none() {
            return Err(Error::NotFound(format!("term {term}")));
        }
        let students: BTreeSet<&str> = self
            .enrollments()
            .filter(|e| e.status == EnrollmentStatus::Active)
            .filter(|e| self.offering(&e.offering).is_some_and(|o| o.term == term))
            .map(|e| e.student.as_str())
            .collect();
        Ok(students.len())
    }

    /// Attendance records of one student in one offering, by session index.
    pub fn attendance_for(&self, student: &str, offering: &str) -> Vec<&AttendanceRecord> {
        let prefix = format!("{offering}/{student}/");
        let mut rows: Vec<&AttendanceRecord> = self
            .iter_prefix(RecordKind::Attendance, &prefix)
            .filter_map(|r| match r {
                Record::Attendance(a) => Some(a),
                _ => None,
            })
            .collect();
        rows.sort_by_key(|a| a.session_index);
        rows
    }

    /// Length of the trailing run of `absent` sessions. Any other status,
    /// `excused` included, ends the run.
    pub fn absence_streak(&self, student: &str, offering: &str) -> Result<u32> {
        if self.enrollment(student, offering).is_none() {
            return Err(Error::NotFound(format!(
                "enrollment of student {student} in offering {offering}"
            )));
        }
        Ok(self
            .attendance_for(student, offering)
            .iter()
            .rev()
            .take_while(|a| a.status == AttendanceStatus::Absent)
            .count() as u32)
    }

    /// All attendance records joined with their session context.
    pub fn session_facts(&self) -> impl Iterator<Item = SessionFact<'_>> + '_ {
        self.attendance_records().filter_map(|a| {
            let offering = self.offering(&a.offering)?;
            let session = offering.session(a.session_index)?;
            Some(SessionFact {
                student: &a.student,
                offering,
                course: self.course(&offering.course),
                session_index: a.session_index,
                date: session.date,
                slot: session.slot,
                status: a.status,
            })
        })
    }

    fn check_scope(&self, scope: &AttendanceScope) -> Result<()> {
        let missing = match scope {
            AttendanceScope::Student(s) => self.student(s).is_none().then(|| format!("student {s}")),
            AttendanceScope::Offering(o) => {
                self.offering(o).is_none().then(|| format!("offering {o}"))
            }
            AttendanceScope::Course(c) => self.course(c).is_none().then(|| format!("course {c}")),
            AttendanceScope::Department(d) => {
                self.department(d).is_none().then(|| format!("department {d}"))
            }
            AttendanceScope::Institution => None,
        };
        match missing {
            Some(what) => Err(Error::NotFound(what)),
            None => Ok(()),
        }
    }

    pub fn attendance_tally(
        &self,
        scope: &AttendanceScope,
        window: DateWindow,
    ) -> Result<AttendanceTally> {
        self.check_scope(scope)?;
        let mut tally = AttendanceTally::default();
        for fact in self.session_facts() {
            if !window.contains(fact.date) {
                continue;
            }
            let in_scope = match scope {
                AttendanceScope::Student(s) => fact.student == s,
                AttendanceScope::Offering(o) => fact.offering.id == *o,
                AttendanceScope::Course(c) => fact.offering.course == *c,
                AttendanceScope::Department(d) => fact.department() == Some(d.as_str()),
                AttendanceScope::Institution => true,
            };
            if in_scope {
                tally.add(fact.status);
            }
        }
        Ok(tally)
    }

    /// `(present + late) / (present + late + absent)` within `window`;
    /// `Ok(None)` signals that no countable session exists.
    pub fn attendance_rate(
        &self,
        scope: &AttendanceScope,
        window: DateWindow,
        policy: AttendancePolicy,
    ) -> Result<Option<f64>> {
        Ok(self.attendance_tally(scope, window)?.rate(policy))
    }
}
