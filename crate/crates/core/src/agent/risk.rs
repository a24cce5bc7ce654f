use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::reports::{InsightReport, ReportStatus, ReportType, Section};
use crate::rounding::percent_label;
use crate::store::{AttendancePolicy, AttendanceStatus, AttendanceTally, Slot, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskLevel {
    Safe,
    Watch,
    Warning,
    Critical,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 4] = [
        RiskLevel::Safe,
        RiskLevel::Watch,
        RiskLevel::Warning,
        RiskLevel::Critical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskLevel::Safe => "safe",
            RiskLevel::Watch => "watch",
            RiskLevel::Warning => "warning",
            RiskLevel::Critical => "critical",
        }
    }
}

/// Rate and streak cut points. A rate strictly below a cut, or a streak at
/// or above one, selects that level; the most severe match wins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskTable {
    pub critical_rate: f64,
    pub warning_rate: f64,
    pub watch_rate: f64,
    pub critical_streak: u32,
    pub warning_streak: u32,
}

impl Default for RiskTable {
    fn default() -> Self {
        Self {
            critical_rate: 0.60,
            warning_rate: 0.75,
            watch_rate: 0.85,
            critical_streak: 5,
            warning_streak: 3,
        }
    }
}

impl RiskTable {
    pub fn validate(&self) -> Result<()> {
        let ordered = 0.0 <= self.critical_rate
            && self.critical_rate <= self.warning_rate
            && self.warning_rate <= self.watch_rate
            && self.watch_rate <= 1.0;
        if !ordered {
            return Err(Error::Config(
                "risk: expected 0 <= critical_rate <= warning_rate <= watch_rate <= 1".into(),
            ));
        }
        if self.warning_streak == 0 || self.warning_streak > self.critical_streak {
            return Err(Error::Config(
                "risk: expected 1 <= warning_streak <= critical_streak".into(),
            ));
        }
        Ok(())
    }

    /// Total over every input; `None` (no countable sessions) is `watch`.
    pub fn classify(&self, rate: Option<f64>, streak: u32) -> RiskLevel {
        let Some(rate) = rate else {
            return RiskLevel::Watch;
        };
        if rate < self.critical_rate || streak >= self.critical_streak {
            RiskLevel::Critical
        } else if rate < self.warning_rate || streak >= self.warning_streak {
            RiskLevel::Warning
        } else if rate < self.watch_rate {
            RiskLevel::Watch
        } else {
            RiskLevel::Safe
        }
    }
}

/// Classification under the default table.
pub fn classify_risk(rate: Option<f64>, streak: u32) -> RiskLevel {
    RiskTable::default().classify(rate, streak)
}

pub fn recommended_actions(level: RiskLevel) -> Vec<String> {
    let items: &[&str] = match level {
        RiskLevel::Critical => &[
            "Contact the student and academic advisor within 24 hours.",
            "Notify course instructors and the department head of critical risk status.",
            "Refer to student support services and review academic standing.",
        ],
        RiskLevel::Warning => &[
            "Schedule meeting with academic advisor within 48 hours.",
            "Notify course instructors of risk status.",
            "Consider referral to student support services.",
        ],
        RiskLevel::Watch => &[
            "Send the student an attendance reminder.",
            "Review attendance again at the next weekly scan.",
        ],
        RiskLevel::Safe => &[],
    };
    items.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskScope<'a> {
    AllStudents,
    Student(&'a str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    WeeklyBatch,
    ConsecutiveAbsenceEvent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemCourse {
    pub course: String,
    pub title: String,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakCell {
    pub weekday: String,
    pub slot: Slot,
    pub absences: u32,
}

impl PeakCell {
    pub fn label(&self) -> String {
        let day = self.weekday.clone();
        let slot = match self.slot {
            Slot::Morning => "mornings",
            Slot::Afternoon => "afternoons",
        };
        format!("{day} {slot}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Declining,
    Improving,
    Stable,
    InsufficientData,
}

impl Trend {
    pub fn label(self) -> &'static str {
        match self {
            Trend::Declining => "Declining over past 4 weeks",
            Trend::Improving => "Improving over past 4 weeks",
            Trend::Stable => "Stable over past 4 weeks",
            Trend::InsufficientData => "Insufficient data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    pub student: String,
    pub as_of: NaiveDate,
    pub risk_level: RiskLevel,
    /// `None` marks a student with no countable sessions.
    pub overall_rate: Option<f64>,
    pub total_absences: u32,
    pub streak: u32,
    pub problem_courses: Vec<ProblemCourse>,
    pub peak_pattern: Vec<PeakCell>,
    pub cohort_rank: Option<usize>,
    pub cohort_size: usize,
    pub cohort_percentile: Option<f64>,
    pub cohort_bucket: String,
    pub trend: Trend,
    /// Weekly rates of the trailing four ISO weeks, oldest first; weeks
    /// without countable sessions are skipped.
    pub weekly_rates: Vec<f64>,
    pub recommended_actions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEnv {
    pub table: RiskTable,
    pub course_target: f64,
    pub policy: AttendancePolicy,
}

impl Default for RiskEnv {
    fn default() -> Self {
        Self {
            table: RiskTable::default(),
            course_target: 0.80,
            policy: AttendancePolicy::default(),
        }
    }
}

pub fn weekday_name(d: Weekday) -> &'static str {
    match d {
        Weekday::Mon => "Monday",
        Weekday::Tue => "Tuesday",
        Weekday::Wed => "Wednesday",
        Weekday::Thu => "Thursday",
        Weekday::Fri => "Friday",
        Weekday::Sat => "Saturday",
        Weekday::Sun => "Sunday",
    }
}

/// Ascending-rank bucket for `rank` of `n` (rank 1 = lowest rate).
pub fn cohort_bucket(rank: usize, n: usize) -> &'static str {
    if n == 0 {
        "n/a"
    } else if rank * 10 <= n {
        "Bottom 10%"
    } else if rank * 5 <= n {
        "Bottom 20%"
    } else if rank * 10 <= n * 3 {
        "Bottom 30%"
    } else if rank * 2 <= n {
        "Bottom 50%"
    } else {
        "Top 50%"
    }
}

#[derive(Default)]
struct StudentFacts {
    total: AttendanceTally,
    by_offering: BTreeMap<String, AttendanceTally>,
    sequence: BTreeMap<String, Vec<(u32, AttendanceStatus)>>,
    /// Keyed by days from Monday.
    cells: BTreeMap<(u32, Slot), u32>,
    weeks: BTreeMap<(i32, u32), AttendanceTally>,
}

fn collect(snap: &Snapshot, as_of: NaiveDate) -> BTreeMap<String, StudentFacts> {
    let mut out: BTreeMap<String, StudentFacts> = BTreeMap::new();
    // Every student with an active enrollment belongs to the cohort, data or not.
    for e in snap.enrollments() {
        if e.status == crate::store::EnrollmentStatus::Active {
            out.entry(e.student.clone()).or_default();
        }
    }
    for fact in snap.session_facts() {
        if fact.date > as_of {
            continue;
        }
        let f = out.entry(fact.student.to_string()).or_default();
        f.total.add(fact.status);
        f.by_offering
            .entry(fact.offering.id.clone())
            .or_default()
            .add(fact.status);
        f.sequence
            .entry(fact.offering.id.clone())
            .or_default()
            .push((fact.session_index, fact.status));
        if fact.status == AttendanceStatus::Absent {
            *f.cells
                .entry((fact.weekday().num_days_from_monday(), fact.slot))
                .or_default() += 1;
        }
        let w = fact.date.iso_week();
        f.weeks.entry((w.year(), w.week())).or_default().add(fact.status);
    }
    out
}

fn trailing_weeks(as_of: NaiveDate) -> Vec<(i32, u32)> {
    (0..4)
        .rev()
        .map(|k| {
            let w = (as_of - Duration::weeks(k)).iso_week();
            (w.year(), w.week())
        })
        .collect()
}

fn trend_of(rates: &[f64]) -> Trend {
    if rates.len() < 2 {
        Trend::InsufficientData
    } else if rates.windows(2).all(|p| p[1] < p[0]) {
        Trend::Declining
    } else if rates.windows(2).all(|p| p[1] > p[0]) {
        Trend::Improving
    } else {
        Trend::Stable
    }
}

/// Assess every cohort student, or one of them. The batch and event paths
/// share this computation so they agree by construction; the event path
/// only requires a single-student scope.
pub fn detect_at_risk(
    snap: &Snapshot,
    scope: RiskScope<'_>,
    trigger: TriggerKind,
    as_of: NaiveDate,
    env: &RiskEnv,
) -> Result<Vec<RiskAssessment>> {
    if trigger == TriggerKind::ConsecutiveAbsenceEvent && scope == RiskScope::AllStudents {
        return Err(Error::validation(
            "scope",
            "an absence event concerns a single student",
        ));
    }
    if let RiskScope::Student(s) = scope {
        if snap.student(s).is_none() {
            return Err(Error::NotFound(format!("student {s}")));
        }
    }
    let facts = collect(snap, as_of);
    let rates: BTreeMap<&str, Option<f64>> = facts
        .iter()
        .map(|(s, f)| (s.as_str(), f.total.rate(env.policy)))
        .collect();
    let ranked: Vec<f64> = rates.values().flatten().copied().collect();
    let cohort_size = ranked.len();

    let empty = StudentFacts::default();
    let students: Vec<&str> = match scope {
        RiskScope::AllStudents => facts.keys().map(String::as_str).collect(),
        RiskScope::Student(s) => vec![s],
    };
    let mut out = Vec::with_capacity(students.len());
    for student in students {
        let f = facts.get(student).unwrap_or(&empty);
        let overall_rate = f.total.rate(env.policy);
        let streak = f
            .sequence
            .values()
            .map(|seq| {
                let mut seq = seq.clone();
                seq.sort_by_key(|(idx, _)| *idx);
                seq.iter()
                    .rev()
                    .take_while(|(_, s)| *s == AttendanceStatus::Absent)
                    .count() as u32
            })
            .max()
            .unwrap_or(0);

        let mut problem_courses: Vec<ProblemCourse> = f
            .by_offering
            .iter()
            .filter_map(|(off, tally)| {
                let rate = tally.rate(env.policy)?;
                if rate >= env.course_target {
                    return None;
                }
                let course = snap.offering(off).map(|o| o.course.clone())?;
                let title = snap
                    .course(&course)
                    .map_or_else(|| course.clone(), |c| c.title.clone());
                Some(ProblemCourse {
                    course,
                    title,
                    rate,
                })
            })
            .collect();
        problem_courses.sort_by(|a, b| {
            a.rate
                .total_cmp(&b.rate)
                .then_with(|| a.title.cmp(&b.title))
                .then_with(|| a.course.cmp(&b.course))
        });

        let peak = f.cells.values().copied().max().unwrap_or(0);
        let peak_pattern = f
            .cells
            .iter()
            .filter(|(_, n)| peak > 0 && **n == peak)
            .map(|((d, s), n)| PeakCell {
                weekday: weekday_name(Weekday::try_from(*d as u8).expect("0..7")).to_string(),
                slot: *s,
                absences: *n,
            })
            .collect();

        let weekly_rates: Vec<f64> = trailing_weeks(as_of)
            .iter()
            .filter_map(|w| f.weeks.get(w).and_then(|t| t.rate(env.policy)))
            .collect();

        let (cohort_rank, cohort_percentile, cohort_bucket) = match overall_rate {
            Some(r) if cohort_size > 0 => {
                let rank = 1 + ranked.iter().filter(|x| **x < r).count();
                (
                    Some(rank),
                    Some(rank as f64 / cohort_size as f64),
                    cohort_bucket(rank, cohort_size).to_string(),
                )
            }
            _ => (None, None, "n/a".to_string()),
        };

        let risk_level = env.table.classify(overall_rate, streak);
        out.push(RiskAssessment {
            student: student.to_string(),
            as_of,
            risk_level,
            overall_rate,
            total_absences: f.total.absent,
            streak,
            problem_courses,
            peak_pattern,
            cohort_rank,
            cohort_size,
            cohort_percentile,
            cohort_bucket,
            trend: trend_of(&weekly_rates),
            weekly_rates,
            recommended_actions: recommended_actions(risk_level),
        });
    }
    Ok(out)
}

/// Trailing absence run of `student` in `offering` as of `as_of`, the
/// quantity the consecutive-absence event carries.
pub fn absence_streak_as_of(snap: &Snapshot, student: &str, offering: &str, as_of: NaiveDate) -> u32 {
    let Some(off) = snap.offering(offering) else { return 0 };
    snap.attendance_for(student, offering)
        .iter()
        .filter(|a| off.session(a.session_index).is_some_and(|s| s.date <= as_of))
        .rev()
        .take_while(|a| a.status == AttendanceStatus::Absent)
        .count() as u32
}

pub const AT_RISK_ABOUT: &str = "Produced by the at-risk student detection workflow, which runs as a weekly scan over all students and also fires when a student reaches the configured run of consecutive absences. It combines the student's overall attendance, per-course rates, absence timing by weekday and slot, and position within the cohort into a risk level with matching interventions.";

pub fn student_report(
    snap: &Snapshot,
    a: &RiskAssessment,
    report_id: &str,
    generated_at: Timestamp,
) -> Result<InsightReport> {
    let name = snap.student(&a.student).map_or("", |s| s.name.as_str());
    let rate = a.overall_rate.map_or_else(|| "no data".to_string(), percent_label);
    let problem = if a.problem_courses.is_empty() {
        "None".to_string()
    } else {
        a.problem_courses
            .iter()
            .map(|p| p.title.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let peaks = if a.peak_pattern.is_empty() {
        "None".to_string()
    } else {
        a.peak_pattern
            .iter()
            .map(PeakCell::label)
            .collect::<Vec<_>>()
            .join(", ")
    };
    let student = if name.is_empty() {
        a.student.clone()
    } else {
        format!("{name} ({})", a.student)
    };
    Ok(InsightReport {
        report_id: report_id.to_string(),
        generated_at,
        report_type: ReportType::StudentInsight,
        title: "At-Risk Student Report".into(),
        about: AT_RISK_ABOUT.into(),
        sections: vec![
            Section::key_values(
                "Risk Assessment",
                [
                    ("Student", student),
                    ("Risk Level", a.risk_level.as_str().to_uppercase()),
                    ("Cohort Percentile", a.cohort_bucket.clone()),
                ],
            ),
            Section::key_values(
                "Attendance Data",
                [
                    ("Overall Rate", rate),
                    ("Total Absences", a.total_absences.to_string()),
                    ("Current Streak", a.streak.to_string()),
                    ("Problem Courses", problem),
                ],
            ),
            Section::key_values(
                "Behavioral Pattern",
                [("Peak Absences", peaks), ("Trend", a.trend.label().to_string())],
            ),
            Section::actions("Recommended Actions", a.recommended_actions.clone()),
        ],
        status: ReportStatus::Draft,
        data: serde_json::to_value(a)?,
    })
}
