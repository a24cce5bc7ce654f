use super::model::*;
use super::Snapshot;
use crate::error::{Error, Result};

/// Type invariants first, then references, then cross-record constraints.
pub(super) fn check(record: &Record, snap: &Snapshot) -> Result<()> {
    intrinsic(record)?;
    for target in record.references() {
        if target.kind == RecordKind::Enrollment {
            continue;
        }
        if !snap.contains(&target) {
            return Err(Error::missing(target.kind, &target.key));
        }
    }
    contextual(record, snap)
}

fn intrinsic(record: &Record) -> Result<()> {
    match record {
        Record::Institution(r) => {
            check_key("institution.id", &r.id)?;
            non_empty("institution.name", &r.name)
        }
        Record::Building(r) => {
            check_key("building.id", &r.id)?;
            non_empty("building.name", &r.name)
        }
        Record::Classroom(r) => {
            check_key("classroom.id", &r.id)?;
            non_empty("classroom.name", &r.name)
        }
        Record::College(r) => {
            check_key("college.id", &r.id)?;
            non_empty("college.name", &r.name)
        }
        Record::Department(r) => {
            check_key("department.id", &r.id)?;
            non_empty("department.name", &r.name)
        }
        Record::Program(r) => {
            check_key("program.id", &r.id)?;
            non_empty("program.name", &r.name)
        }
        Record::Course(r) => {
            check_key("course.id", &r.id)?;
            non_empty("course.title", &r.title)
        }
        Record::Term(t) => {
            check_key("term.id", &t.id)?;
            non_empty("term.label", &t.label)?;
            if t.start_date >= t.end_date {
                return Err(Error::validation(
                    "term.start_date",
                    format!(
                        "start_date {} must be before end_date {}",
                        t.start_date, t.end_date
                    ),
                ));
            }
            Ok(())
        }
        Record::Student(r) => {
            check_key("student.id", &r.id)?;
            non_empty("student.name", &r.name)
        }
        Record::Employee(r) => {
            check_key("employee.id", &r.id)?;
            non_empty("employee.name", &r.name)
        }
        Record::Offering(o) => {
            check_key("offering.id", &o.id)?;
            for (i, s) in o.sessions.iter().enumerate() {
                if s.session_index as usize != i + 1 {
                    return Err(Error::validation(
                        "offering.sessions",
                        format!(
                            "session_index values must be contiguous from 1; position {} has {}",
                            i + 1,
                            s.session_index
                        ),
                    ));
                }
            }
            Ok(())
        }
        Record::Enrollment(e) => {
            check_key("enrollment.student", &e.student)?;
            check_key("enrollment.offering", &e.offering)
        }
        Record::Attendance(a) => {
            check_key("attendance.student", &a.student)?;
            check_key("attendance.offering", &a.offering)?;
            if a.session_index == 0 {
                return Err(Error::validation(
                    "attendance.session_index",
                    "session_index starts at 1",
                ));
            }
            Ok(())
        }
        Record::CourseSpec(s) => s.check_invariants(),
        Record::Draft(d) => check_key("draft.draft_id", &d.draft_id),
        Record::Plo(p) => {
            check_key("plo.plo_id", &p.plo_id)?;
            non_empty("plo.statement", &p.statement)
        }
        Record::CloPloLink(l) => {
            check_key("link.clo_id", &l.clo_id)?;
            check_key("link.plo_id", &l.plo_id)
        }
        Record::Exam(e) => e.check_invariants(),
        Record::Submission(_)
        | Record::GradeAudit(_)
        | Record::Audit(_)
        | Record::PendingApproval(_)
        | Record::TriggerState(_) => Ok(()),
    }
}

fn contextual(record: &Record, snap: &Snapshot) -> Result<()> {
    match record {
        Record::Offering(o) => {
            let term = snap.term(&o.term).expect("reference checked");
            if let Some(s) = o
                .sessions
                .iter()
                .find(|s| s.date < term.start_date || s.date > term.end_date)
            {
                return Err(Error::validation(
                    "offering.sessions",
                    format!(
                        "session {} on {} falls outside term {} ({}..{})",
                        s.session_index, s.date, term.id, term.start_date, term.end_date
                    ),
                ));
            }
            Ok(())
        }
        Record::Attendance(a) => {
            let offering = snap.offering(&a.offering).expect("reference checked");
            if offering.session(a.session_index).is_none() {
                return Err(Error::validation(
                    "attendance.session_index",
                    format!(
                        "session {} is not scheduled for offering {}",
                        a.session_index, a.offering
                    ),
                ));
            }
            match snap.enrollment(&a.student, &a.offering) {
                Some(e) if e.status == EnrollmentStatus::Active => Ok(()),
                _ => Err(Error::Integrity(format!(
                    "student {} has no active enrollment in offering {}",
                    a.student, a.offering
                ))),
            }
        }
        Record::Exam(e) => crate::grading::check_exam_links(e, snap),
        _ => Ok(()),
    }
}

fn non_empty(field: &str, value: &str) -> Result<()> {
    if value.trim().is_empty() {
        Err(Error::validation(field, "must be non-empty"))
    } else {
        Ok(())
    }
}
