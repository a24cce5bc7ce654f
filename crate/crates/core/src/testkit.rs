//! Small hand-built stores for tests and examples. Every write goes through
//! the normal validated path, so anything built here is a store the service
//! could have produced.

use chrono::{Datelike, Duration, NaiveDate};

use crate::clock::{timestamp_of, Timestamp};
use crate::error::Result;
use crate::grading::{self, Decision, Exam, Question, QuestionKind, SubmissionRef};
use crate::ingestion::{self, BloomLevel, GrammarExtractor};
use crate::outcomes::{CloPloLink, Contribution, Plo};
use crate::store::*;

pub const PROGRAM: &str = "p1";
pub const TERM: &str = "t1";
pub const INSTRUCTOR: &str = "e1";
pub const COORDINATOR: &str = "e2";

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

pub fn at(y: i32, m: u32, d: u32, h: u32, min: u32, s: u32) -> Timestamp {
    timestamp_of(date(y, m, d).and_hms_opt(h, min, s).expect("valid time"))
}

/// Institution `i1`, college `col1`, department `d1`, program `p1`, term
/// `t1` (2025-09-01 to 2025-12-20), instructor `e1` and coordinator `e2`.
pub fn seed_catalogue(tx: &mut Transaction) -> Result<()> {
    let s = String::from;
    tx.upsert(Record::Institution(Institution { id: s("i1"), name: s("Test Institute") }))?;
    tx.upsert(Record::College(College { id: s("col1"), institution: s("i1"), name: s("Engineering") }))?;
    tx.upsert(Record::Department(Department { id: s("d1"), college: s("col1"), name: s("Computing") }))?;
    tx.upsert(Record::Program(Program { id: s(PROGRAM), department: s("d1"), name: s("BSc Computing") }))?;
    tx.upsert(Record::Term(Term {
        id: s(TERM),
        label: s("Fall"),
        start_date: date(2025, 9, 1),
        end_date: date(2025, 12, 20),
    }))?;
    for (id, name) in [(INSTRUCTOR, "Instructor One"), (COORDINATOR, "Coordinator Two")] {
        tx.upsert(Record::Employee(Employee { id: s(id), name: s(name), department: Some(s("d1")) }))?;
    }
    Ok(())
}

pub fn add_department(tx: &mut Transaction, id: &str, name: &str) -> Result<()> {
    tx.upsert(Record::Department(Department {
        id: id.into(),
        college: "col1".into(),
        name: name.into(),
    }))?;
    Ok(())
}

pub fn add_course(tx: &mut Transaction, id: &str, department: &str, title: &str) -> Result<()> {
    tx.upsert(Record::Course(Course {
        id: id.into(),
        department: department.into(),
        title: title.into(),
        programs: vec![PROGRAM.into()],
    }))?;
    Ok(())
}

/// `n` sessions starting Monday 2025-09-01, one per day on weekdays,
/// alternating morning and afternoon.
pub fn daily_sessions(n: u32) -> Vec<ScheduledSession> {
    let mut out = Vec::new();
    let mut day = date(2025, 9, 1);
    while out.len() < n as usize {
        if day.weekday().num_days_from_monday() < 5 {
            let i = out.len() as u32;
            out.push(ScheduledSession {
                session_index: i + 1,
                date: day,
                slot: if i % 2 == 0 { Slot::Morning } else { Slot::Afternoon },
            });
        }
        day += Duration::days(1);
    }
    out
}

pub fn add_offering(
    tx: &mut Transaction,
    id: &str,
    course: &str,
    sessions: Vec<ScheduledSession>,
) -> Result<()> {
    tx.upsert(Record::Offering(CourseOffering {
        id: id.into(),
        course: course.into(),
        term: TERM.into(),
        instructor: INSTRUCTOR.into(),
        sessions,
    }))?;
    Ok(())
}

/// Create each student (if new) and enroll them actively in `offering`.
pub fn enroll(tx: &mut Transaction, offering: &str, students: &[&str]) -> Result<()> {
    for s in students {
        if tx.student(s).is_none() {
            tx.upsert(Record::Student(Student {
                id: s.to_string(),
                name: format!("Student {s}"),
                program: Some(PROGRAM.into()),
            }))?;
        }
        tx.upsert(Record::Enrollment(Enrollment {
            student: s.to_string(),
            offering: offering.into(),
            status: EnrollmentStatus::Active,
        }))?;
    }
    Ok(())
}

pub fn mark(
    tx: &mut Transaction,
    student: &str,
    offering: &str,
    session_index: u32,
    status: AttendanceStatus,
) -> Result<()> {
    tx.upsert(Record::Attendance(AttendanceRecord {
        student: student.into(),
        offering: offering.into(),
        session_index,
        status,
    }))?;
    Ok(())
}

/// Mark sessions `1..=statuses.len()` in order.
pub fn mark_all(
    tx: &mut Transaction,
    student: &str,
    offering: &str,
    statuses: &[AttendanceStatus],
) -> Result<()> {
    for (i, s) in statuses.iter().enumerate() {
        mark(tx, student, offering, i as u32 + 1, *s)?;
    }
    Ok(())
}

/// Confirm a specification with CLOs `c1..=c{n}` through the extractor.
pub fn confirm_spec(tx: &mut Transaction, course: &str, n_clos: usize) -> Result<()> {
    let mut text = format!("COURSE: {course}\n");
    for i in 1..=n_clos {
        text.push_str(&format!("CLO c{i} [apply]: Outcome {i} of {course}\n"));
    }
    text.push_str("TOPIC: Basics\nASSESS: Final, 100%\nBOOK: Notes\n");
    let draft = ingestion::extract_specification(&text, &GrammarExtractor)?;
    ingestion::confirm_draft(tx, &draft, INSTRUCTOR, at(2025, 9, 1, 8, 0, 0))?;
    Ok(())
}

/// One question of an [`OutcomeCase`].
#[derive(Debug, Clone, PartialEq)]
pub struct CaseQuestion {
    pub max_points: f64,
    /// Indexes into CLOs `c1..c3`.
    pub clos: Vec<usize>,
}

/// A single-offering store reduced to what outcome analytics read:
/// questions, their CLO links, per-student earned points (`None` means not
/// finalized) and CLO-PLO links to PLOs `P1` and `P2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeCase {
    pub questions: Vec<CaseQuestion>,
    /// `points[student][question]`.
    pub points: Vec<Vec<Option<f64>>>,
    /// `(clo index, plo index, contribution)`, at most one per pair.
    pub links: Vec<(usize, usize, Contribution)>,
}

pub const CASE_CLOS: [&str; 3] = ["c1", "c2", "c3"];
pub const CASE_PLOS: [&str; 2] = ["P1", "P2"];
pub const CASE_OFFERING: &str = "off1";
pub const CASE_COURSE: &str = "crs1";

impl OutcomeCase {
    pub fn student_id(i: usize) -> String {
        format!("s{}", i + 1)
    }

    /// Multiply every max and earned point by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for q in &mut out.questions {
            q.max_points *= c;
        }
        for row in &mut out.points {
            for p in row.iter_mut().flatten() {
                *p *= c;
            }
        }
        out
    }

    pub fn build(&self) -> Result<Store> {
        let store = Store::in_memory();
        store.write(|tx| {
            seed_catalogue(tx)?;
            add_course(tx, CASE_COURSE, "d1", "Case Course")?;
            add_offering(tx, CASE_OFFERING, CASE_COURSE, daily_sessions(1))?;
            let students: Vec<String> = (0..self.points.len()).map(Self::student_id).collect();
            let refs: Vec<&str> = students.iter().map(String::as_str).collect();
            enroll(tx, CASE_OFFERING, &refs)?;
            confirm_spec(tx, CASE_COURSE, CASE_CLOS.len())?;
            for plo in CASE_PLOS {
                tx.upsert(Record::Plo(Plo {
                    program: PROGRAM.into(),
                    plo_id: plo.into(),
                    statement: format!("Program outcome {plo}"),
                    abet_criterion: None,
                }))?;
            }
            for (clo, plo, contribution) in &self.links {
                tx.upsert(Record::CloPloLink(CloPloLink {
                    course: CASE_COURSE.into(),
                    clo_id: CASE_CLOS[*clo].into(),
                    program: PROGRAM.into(),
                    plo_id: CASE_PLOS[*plo].into(),
                    contribution: *contribution,
                }))?;
            }
            let questions = self
                .questions
                .iter()
                .enumerate()
                .map(|(i, q)| Question {
                    q_id: format!("q{}", i + 1),
                    kind: QuestionKind::Essay,
                    statement: format!("Question {}", i + 1),
                    max_points: q.max_points,
                    clo_links: q.clos.iter().map(|c| CASE_CLOS[*c].to_string()).collect(),
                    bloom_level: BloomLevel::Apply,
                    rubric: Vec::new(),
                    answer_key: None,
                })
                .collect();
            tx.upsert(Record::Exam(Exam {
                exam_id: "ex1".into(),
                offering: CASE_OFFERING.into(),
                questions,
            }))?;
            for (s, row) in self.points.iter().enumerate() {
                for (q, p) in row.iter().enumerate() {
                    let Some(points) = p else { continue };
                    let sub = SubmissionRef::new("ex1", &format!("q{}", q + 1), &students[s]);
                    grading::submit_answer(tx, &sub, "answer")?;
                    grading::decide_grade(
                        tx,
                        &sub,
                        &Decision::HumanDirect {
                            points: *points,
                            feedback: String::new(),
                        },
                        INSTRUCTOR,
                        at(2025, 12, 1, 9, 0, 0),
                    )?;
                }
            }
            Ok(())
        })?;
        Ok(store)
    }
}
