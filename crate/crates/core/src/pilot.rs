//! The pilot fixture: one term, four courses, ten students. `fixture_files`
//! generates every file; `load_fixture` reads a fixture directory back into
//! a store.
//!
//! Student `s03` is built to reproduce a known at-risk profile: 61 absences
//! and 4 excused sessions per course, leaving 163 of 224 countable sessions
//! attended; the trailing run in the first course is 3; absences peak on
//! Monday mornings and Friday afternoons (27 each); weekly rates over the
//! last four weeks fall 14/16, 12/16, 10/16, 8/16.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::clock::{timestamp_of, Timestamp};
use crate::config::Role;
use crate::error::{Error, Result};
use crate::grading::{self, BlueprintRow, Decision, MockGrader, SubmissionRef, TemplateGenerator};
use crate::ingestion::{self, GrammarExtractor};
use crate::service::App;
use crate::store::{import_csv_in, ImportKind, ScheduledSession, Slot};

pub const TERM: &str = "Fall-2025";
pub const PROGRAM: &str = "p1";
pub const WEEKS: u32 = 15;
pub const RUN_DATE: &str = "2025-12-13";

struct CourseDef {
    id: &'static str,
    offering: &'static str,
    department: &'static str,
    title: &'static str,
    instructor: &'static str,
    /// Slots of the two mid-week sessions (weekday offset from Monday).
    middle: [(i64, Slot); 2],
}

const COURSES: [CourseDef; 4] = [
    CourseDef {
        id: "cs101",
        offering: "off1",
        department: "cs",
        title: "Introduction to Computer Systems",
        instructor: "e01",
        middle: [(1, Slot::Afternoon), (2, Slot::Morning)],
    },
    CourseDef {
        id: "gs110",
        offering: "off2",
        department: "gs",
        title: "Academic English",
        instructor: "e02",
        middle: [(1, Slot::Morning), (3, Slot::Afternoon)],
    },
    CourseDef {
        id: "gs120",
        offering: "off3",
        department: "gs",
        title: "Mathematics I",
        instructor: "e02",
        middle: [(2, Slot::Afternoon), (3, Slot::Morning)],
    },
    CourseDef {
        id: "cs102",
        offering: "off4",
        department: "cs",
        title: "Introduction to Digital Systems",
        instructor: "e01",
        middle: [(1, Slot::Afternoon), (3, Slot::Morning)],
    },
];

const STUDENTS: [(&str, &str, u32); 10] = [
    ("s01", "Omar Farouk", 108),
    ("s02", "Sara Nabil", 84),
    ("s03", "Youssef Adel", 61),
    ("s04", "Mona Hany", 53),
    ("s05", "Karim Samir", 43),
    ("s06", "Nour Tarek", 34),
    ("s07", "Hana Mostafa", 24),
    ("s08", "Ali Hassan", 17),
    ("s09", "Laila Fathy", 10),
    ("s10", "Ziad Magdy", 0),
];

/// Per-student ability (out of 10) driving generated answers.
const ABILITY: [u32; 10] = [4, 5, 6, 7, 7, 8, 8, 9, 9, 10];

fn term_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 9, 1).expect("valid date")
}

fn sessions(c: &CourseDef) -> Vec<ScheduledSession> {
    let mut out = Vec::new();
    for w in 0..WEEKS {
        let monday = term_start() + Duration::weeks(i64::from(w));
        let slots = [
            (0, Slot::Morning),
            c.middle[0],
            c.middle[1],
            (4, Slot::Afternoon),
        ];
        for (k, (day, slot)) in slots.into_iter().enumerate() {
            out.push(ScheduledSession {
                session_index: w * 4 + k as u32 + 1,
                date: monday + Duration::days(day),
                slot,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Absent,
    Excused,
    Late,
}

/// Marks of `s03`, keyed by (course position, 1-based week, k).
fn target_marks() -> BTreeMap<(usize, u32, u32), Mark> {
    let mut m = BTreeMap::new();
    let mut absent = |c: usize, weeks: &[u32], k: u32| {
        for &w in weeks {
            m.insert((c, w, k), Mark::Absent);
        }
    };
    // Weeks 12-15, course by course.
    absent(0, &[15], 1);
    absent(0, &[15], 2);
    absent(0, &[15, 14], 3);
    absent(0, &[14, 13], 0);
    absent(1, &[15, 14], 0);
    absent(1, &[15, 14, 13], 3);
    absent(2, &[15, 14, 12], 0);
    absent(2, &[15, 13], 3);
    absent(3, &[15, 13], 0);
    absent(3, &[14, 12], 3);
    // Weeks 1-11.
    absent(0, &[1, 3, 5, 7], 0);
    absent(0, &[2, 4, 6, 8], 3);
    absent(0, &[9], 1);
    absent(1, &[1, 3, 5, 7, 9], 0);
    absent(1, &[2, 4, 6, 8, 10], 3);
    absent(2, &[2, 4, 6, 8], 0);
    absent(2, &[1, 3, 5, 7], 3);
    absent(2, &[9], 1);
    absent(2, &[10], 2);
    absent(3, &[2, 4, 6, 8, 10], 0);
    absent(3, &[1, 3, 5, 7, 9], 3);
    absent(3, &[11], 1);
    absent(3, &[11], 2);
    for c in 0..4 {
        for w in [1, 3, 5, 7] {
            m.insert((c, w, 2), Mark::Excused);
        }
    }
    m.insert((0, 5, 1), Mark::Late);
    m
}

fn status_of(student_pos: usize, absences: u32, c: usize, idx: u32) -> &'static str {
    if student_pos == 2 {
        let (w, k) = ((idx - 1) / 4 + 1, (idx - 1) % 4);
        return match target_marks().get(&(c, w, k)) {
            Some(Mark::Absent) => "absent",
            Some(Mark::Excused) => "excused",
            Some(Mark::Late) => "late",
            None => "present",
        };
    }
    let flat = c as u32 * 60 + (idx - 1);
    if (flat * 37 + student_pos as u32 * 11) % 240 < absences {
        "absent"
    } else {
        "present"
    }
}

fn csv_of(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn syllabus(c: &CourseDef) -> String {
    let (clos, topics, books): (&[(&str, &str, &str)], &[&str], &[&str]) = match c.id {
        "cs101" => (
            &[
                ("c1", "understand", "Describe the layers of a computer system from gates to operating system"),
                ("c2", "apply", "Trace the execution of a short assembly program"),
                ("c3", "analyze", "Compare memory hierarchy designs by access cost"),
            ],
            &["Data representation", "Machine-level programs", "Memory hierarchy"],
            &["Computer Systems: A Programmer's Perspective"],
        ),
        "gs110" => (
            &[
                ("c1", "apply", "Write a structured academic paragraph with a clear claim"),
                ("c2", "analyze", "Identify the argument structure of a short research article"),
                ("c3", "create", "Produce a referenced essay of 1500 words"),
            ],
            &["Paragraph structure", "Reading for argument", "Referencing"],
            &["Academic Writing for Graduate Students"],
        ),
        "gs120" => (
            &[
                ("c1", "apply", "Differentiate polynomial, exponential and trigonometric functions"),
                ("c2", "apply", "Evaluate definite integrals by substitution"),
                ("c3", "analyze", "Model rates of change in applied problems"),
            ],
            &["Limits", "Derivatives", "Integration"],
            &["Calculus: Early Transcendentals"],
        ),
        _ => (
            &[
                ("c1", "understand", "Explain number systems and Boolean algebra"),
                ("c2", "apply", "Design combinational circuits from truth tables"),
                ("c3", "analyze", "Analyze sequential circuits with state diagrams"),
            ],
            &["Number systems", "Combinational logic", "Sequential logic"],
            &["Digital Design"],
        ),
    };
    let mut s = format!("# {} syllabus\nCOURSE: {}\n", c.title, c.id);
    for (id, bloom, stmt) in clos {
        let _ = writeln!(s, "CLO {id} [{bloom}]: {stmt}");
    }
    for t in topics {
        let _ = writeln!(s, "TOPIC: {t}");
    }
    s.push_str("ASSESS: Midterm exam, 30%\nASSESS: Coursework, 20%\nASSESS: Final exam, 50%\n");
    for b in books {
        let _ = writeln!(s, "BOOK: {b}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamFixture {
    pub exam_id: String,
    pub offering: String,
    pub blueprint: Vec<BlueprintRow>,
}

fn blueprint() -> Value {
    json!([
        { "kind": "mcq", "clo_links": ["c1"], "bloom_level": "remember", "max_points": 5.0 },
        { "kind": "essay", "clo_links": ["c1", "c2"], "bloom_level": "understand", "max_points": 10.0 },
        { "kind": "code", "clo_links": ["c2"], "bloom_level": "apply", "max_points": 10.0 },
        { "kind": "mcq", "clo_links": ["c3"], "bloom_level": "remember", "max_points": 5.0 },
        { "kind": "essay", "clo_links": ["c3"], "bloom_level": "analyze", "max_points": 10.0 }
    ])
}

fn grade_rows() -> Vec<Vec<String>> {
    let kinds = ["mcq", "essay", "code", "mcq", "essay"];
    let maxes = [5.0, 10.0, 10.0, 5.0, 10.0];
    let mut rows = Vec::new();
    let mut r = 0u32;
    for (ci, c) in COURSES.iter().enumerate() {
        for (si, (sid, _, _)) in STUDENTS.iter().enumerate() {
            for (qi, kind) in kinds.iter().enumerate() {
                let roll = (si as u32 * 7 + qi as u32 * 3 + ci as u32 * 5) % 10;
                let ability = ABILITY[si];
                let answer = if *kind == "mcq" {
                    if roll < ability { "A" } else { "C" }
                } else if roll < ability.saturating_sub(2) {
                    "The approach is correct because each step follows from the definition."
                } else if roll < ability {
                    "The approach is correct."
                } else {
                    "Not sure how to start."
                };
                let max: f64 = maxes[qi];
                let (action, points) = if r % 13 == 7 {
                    ("direct", format!("{}", max * 0.9))
                } else if r % 11 == 5 {
                    ("adjust", format!("{}", max * 0.8))
                } else if r % 17 == 3 {
                    ("override", format!("{}", max * 0.6))
                } else {
                    ("accept", String::new())
                };
                rows.push(vec![
                    format!("ex-{}", c.offering),
                    format!("q{}", qi + 1),
                    sid.to_string(),
                    answer.to_string(),
                    action.to_string(),
                    points,
                ]);
                r += 1;
            }
        }
    }
    rows
}

pub const WORKFLOWS_TOML: &str = r#"# Pilot workflow definitions.

[[workflow]]
workflow_id = "daily_health"
autonomy_level = 2
checkpoint_policy = "pause_before_publish"
trigger = { type = "scheduled", spec = "daily 20:00" }

[workflow.task]
kind = "daily_health"
window_days = 28
targets = { institution = 0.85, department = 0.85, course = 0.80 }

[[workflow]]
workflow_id = "at_risk"
autonomy_level = 4
checkpoint_policy = "pause_before_publish"
trigger = { type = "scheduled", spec = "weekly sat 05:23:02" }

[workflow.task]
kind = "at_risk"
course_target = 0.80

[[workflow]]
workflow_id = "at_risk_event"
autonomy_level = 3
checkpoint_policy = "pause_before_publish"
trigger = { type = "event", event = "consecutive_absence", threshold = 3 }

[workflow.task]
kind = "at_risk"

[[workflow]]
workflow_id = "comparative"
autonomy_level = 3
checkpoint_policy = "none"
trigger = { type = "on_demand" }

[workflow.task]
kind = "comparative"
group_a = { label = "Morning sessions", slot = "morning" }
group_b = { label = "Afternoon sessions", slot = "afternoon" }
"#;

pub const CONFIG_TOML: &str = r#"# Pilot service configuration.
store = "store"
listen = "127.0.0.1:8080"
workflows = "workflows.toml"

[roles]
e01 = "instructor"
e02 = "instructor"
e10 = "coordinator"
e99 = "admin"
"#;

/// Every fixture file, by path relative to the fixture directory.
pub fn fixture_files() -> BTreeMap<String, String> {
    let mut f = BTreeMap::new();
    let s = |x: &str| x.to_string();
    f.insert(
        "institutions.csv".into(),
        csv_of(&["institution_id", "name"], [vec![s("inst1"), s("Pilot University")]]),
    );
    f.insert(
        "buildings.csv".into(),
        csv_of(&["building_id", "institution_id", "name"], [vec![s("b1"), s("inst1"), s("Main Building")]]),
    );
    f.insert(
        "classrooms.csv".into(),
        csv_of(
            &["classroom_id", "building_id", "name"],
            [vec![s("r101"), s("b1"), s("Room 101")], vec![s("r102"), s("b1"), s("Room 102")]],
        ),
    );
    f.insert(
        "colleges.csv".into(),
        csv_of(&["college_id", "institution_id", "name"], [vec![s("col1"), s("inst1"), s("College of Computing")]]),
    );
    f.insert(
        "departments.csv".into(),
        csv_of(
            &["department_id", "college_id", "name"],
            [
                vec![s("cs"), s("col1"), s("Computer Science")],
                vec![s("gs"), s("col1"), s("General Studies")],
            ],
        ),
    );
    f.insert(
        "programs.csv".into(),
        csv_of(&["program_id", "department_id", "name"], [vec![s(PROGRAM), s("cs"), s("BSc Computer Science")]]),
    );
    f.insert(
        "courses.csv".into(),
        csv_of(
            &["course_id", "department_id", "title", "program_ids"],
            COURSES
                .iter()
                .map(|c| vec![s(c.id), s(c.department), s(c.title), s(PROGRAM)]),
        ),
    );
    f.insert(
        "terms.csv".into(),
        csv_of(
            &["term_id", "label", "start_date", "end_date"],
            [vec![s(TERM), s("Fall 2025"), s("2025-09-01"), s("2025-12-20")]],
        ),
    );
    f.insert(
        "employees.csv".into(),
        csv_of(
            &["employee_id", "name", "department_id"],
            [
                vec![s("e01"), s("Rana Saleh"), s("cs")],
                vec![s("e02"), s("Tamer Ezz"), s("gs")],
                vec![s("e10"), s("Dina Kamal"), s("cs")],
                vec![s("e99"), s("Registrar Office"), s("cs")],
            ],
        ),
    );
    f.insert(
        "students.csv".into(),
        csv_of(
            &["student_id", "name", "program_id"],
            STUDENTS.iter().map(|(id, name, _)| vec![s(id), s(name), s(PROGRAM)]),
        ),
    );
    f.insert(
        "offerings.csv".into(),
        csv_of(
            &["offering_id", "course_id", "term_id", "instructor_id", "sessions"],
            COURSES.iter().map(|c| {
                vec![
                    s(c.offering),
                    s(c.id),
                    s(TERM),
                    s(c.instructor),
                    crate::store::format_sessions(&sessions(c)),
                ]
            }),
        ),
    );
    f.insert(
        "enrollments.csv".into(),
        csv_of(
            &["student_id", "offering_id", "status"],
            COURSES.iter().flat_map(|c| {
                STUDENTS
                    .iter()
                    .map(move |(id, _, _)| vec![s(id), s(c.offering), s("active")])
            }),
        ),
    );
    let mut attendance = Vec::new();
    for (ci, c) in COURSES.iter().enumerate() {
        for (si, (id, _, absences)) in STUDENTS.iter().enumerate() {
            for idx in 1..=WEEKS * 4 {
                attendance.push(vec![
                    s(id),
                    s(c.offering),
                    idx.to_string(),
                    s(status_of(si, *absences, ci, idx)),
                ]);
            }
        }
    }
    f.insert(
        "attendance.csv".into(),
        csv_of(&["student_id", "offering_id", "session_index", "status"], attendance),
    );
    f.insert(
        "plos.csv".into(),
        csv_of(
            &["program_id", "plo_id", "statement", "abet_criterion"],
            [
                vec![s(PROGRAM), s("plo1"), s("Apply knowledge of computing and mathematics to solve problems"), s("SO1")],
                vec![s(PROGRAM), s("plo2"), s("Analyze complex systems and communicate the results effectively"), s("SO3")],
            ],
        ),
    );
    f.insert(
        "clo_plo_links.csv".into(),
        csv_of(
            &["course_id", "clo_id", "program_id", "plo_id", "contribution"],
            [
                ["cs101", "c1", "plo1", "direct"],
                ["cs101", "c2", "plo1", "supporting"],
                ["cs101", "c3", "plo2", "direct"],
                ["cs102", "c1", "plo1", "indirect"],
                ["cs102", "c2", "plo1", "direct"],
                ["cs102", "c3", "plo2", "supporting"],
                ["gs110", "c1", "plo2", "supporting"],
                ["gs110", "c2", "plo2", "direct"],
                ["gs120", "c1", "plo1", "supporting"],
                ["gs120", "c2", "plo1", "direct"],
            ]
            .into_iter()
            .map(|[c, clo, plo, k]| vec![s(c), s(clo), s(PROGRAM), s(plo), s(k)]),
        ),
    );
    for c in &COURSES {
        f.insert(format!("syllabi/{}.txt", c.id), syllabus(c));
    }
    let exams: Vec<Value> = COURSES
        .iter()
        .map(|c| json!({ "exam_id": format!("ex-{}", c.offering), "offering": c.offering, "blueprint": blueprint() }))
        .collect();
    f.insert(
        "exams.json".into(),
        crate::canonical::to_string_pretty(&exams).expect("json") + "\n",
    );
    f.insert(
        "grades.csv".into(),
        csv_of(&["exam_id", "q_id", "student_id", "answer", "action", "points"], grade_rows()),
    );
    f.insert("workflows.toml".into(), WORKFLOWS_TOML.into());
    f.insert("campusqa.toml".into(), CONFIG_TOML.into());
    f
}

pub fn write_fixture(dir: &Path) -> Result<()> {
    for (rel, contents) in fixture_files() {
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, contents)?;
    }
    Ok(())
}

/// Import order: parents before children.
pub const IMPORT_ORDER: [(&str, &str); 15] = [
    ("institutions.csv", "institution"),
    ("buildings.csv", "building"),
    ("classrooms.csv", "classroom"),
    ("colleges.csv", "college"),
    ("departments.csv", "department"),
    ("programs.csv", "program"),
    ("courses.csv", "course"),
    ("terms.csv", "term"),
    ("employees.csv", "employee"),
    ("students.csv", "student"),
    ("offerings.csv", "offering"),
    ("enrollments.csv", "enrollment"),
    ("attendance.csv", "attendance"),
    ("plos.csv", "plo"),
    ("clo_plo_links.csv", "clo_plo_link"),
];

/// Fixed instant used for every load-time decision so reloads are
/// byte-identical.
pub fn load_time() -> Timestamp {
    timestamp_of(
        NaiveDate::from_ymd_opt(2025, 12, 12)
            .and_then(|d| d.and_hms_opt(12, 0, 0))
            .expect("valid time"),
    )
}

fn read(dir: &Path, rel: &str) -> Result<String> {
    std::fs::read_to_string(dir.join(rel))
        .map_err(|e| Error::validation("fixture", format!("{rel}: {e}")))
}

#[derive(Debug, Deserialize)]
struct GradeRow {
    exam_id: String,
    q_id: String,
    student_id: String,
    answer: String,
    action: String,
    points: Option<f64>,
}

/// Load a fixture directory into `app`'s store in one transaction. Any
/// rejected CSV row fails the load.
pub fn load_fixture(app: &App, dir: &Path, actor: Option<&str>) -> Result<Value> {
    let (actor, _) = app.require(actor, Role::Admin)?;
    let at = load_time();
    let mut imported = BTreeMap::new();
    app.store.write(|tx| {
        for (file, kind) in IMPORT_ORDER {
            let kind = ImportKind::parse(kind).expect("known kind");
            let summary = import_csv_in(tx, kind, read(dir, file)?.as_bytes())?;
            if let Some(r) = summary.rejected.first() {
                return Err(Error::validation(
                    "fixture",
                    format!("{file} line {}: {}", r.line, r.reason),
                ));
            }
            imported.insert(file.to_string(), summary.accepted);
        }
        let mut syllabi = BTreeSet::new();
        for entry in std::fs::read_dir(dir.join("syllabi"))? {
            syllabi.insert(entry?.path());
        }
        for path in &syllabi {
            let text = std::fs::read_to_string(path)?;
            let draft = ingestion::extract_specification(&text, &GrammarExtractor)?;
            let course = draft.content.course.as_ref().map(|c| c.value.clone()).unwrap_or_default();
            let instructor = tx
                .offerings()
                .find(|o| o.course == course)
                .map(|o| o.instructor.clone())
                .unwrap_or_else(|| actor.clone());
            tx.upsert(crate::store::Record::Draft(draft.clone()))?;
            ingestion::confirm_draft(tx, &draft, &instructor, at)?;
        }
        let exams: Vec<ExamFixture> = serde_json::from_str(&read(dir, "exams.json")?)?;
        for e in &exams {
            grading::create_exam(tx, &e.exam_id, &e.offering, &e.blueprint, &TemplateGenerator)?;
        }
        let grades = read(dir, "grades.csv")?;
        let mut rdr = csv::Reader::from_reader(grades.as_bytes());
        let mut decided = 0usize;
        for row in rdr.deserialize::<GradeRow>() {
            let row = row?;
            let sub = SubmissionRef::new(&row.exam_id, &row.q_id, &row.student_id);
            let instructor = tx
                .exam(&row.exam_id)
                .and_then(|e| tx.offering(&e.offering))
                .map(|o| o.instructor.clone())
                .ok_or_else(|| Error::NotFound(format!("exam {}", row.exam_id)))?;
            grading::submit_answer(tx, &sub, &row.answer)?;
            let need = || {
                row.points
                    .ok_or_else(|| Error::validation("points", format!("{} needs points", row.action)))
            };
            let decision = match row.action.as_str() {
                "accept" => Decision::Accept,
                "adjust" => Decision::Adjust {
                    points: need()?,
                    feedback: None,
                },
                "override" => Decision::Override {
                    points: need()?,
                    feedback: "Marked against the departmental rubric.".into(),
                },
                "direct" => Decision::HumanDirect {
                    points: need()?,
                    feedback: "Graded by hand.".into(),
                },
                other => return Err(Error::validation("action", format!("unknown action `{other}`"))),
            };
            if !matches!(decision, Decision::HumanDirect { .. }) {
                grading::suggest_grade(tx, &sub, &MockGrader)?.into_result()?;
            }
            grading::decide_grade(tx, &sub, &decision, &instructor, at)?;
            decided += 1;
        }
        imported.insert("grades.csv".into(), decided);
        tx.append_audit(&actor, "pilot.load", &dir.display().to_string(), at, json!({}))?;
        Ok(())
    })?;
    Ok(json!({ "imported": imported }))
}

/// A store with the pilot fixture loaded, for examples and tests.
pub fn load_pilot_app(config: crate::config::ServiceConfig, dir: &Path) -> Result<App> {
    let mut config = config;
    config.roles.insert("e99".into(), Role::Admin);
    let app = App::open(config)?;
    load_fixture(&app, dir, Some("e99"))?;
    Ok(app)
}
