use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::definition::HealthParams;
use crate::clock::Timestamp;
use crate::error::Result;
use crate::reports::{InsightReport, ReportStatus, ReportType, Section};
use crate::rounding::percent_label;
use crate::store::{AttendancePolicy, AttendanceTally, DateWindow, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealthStatus {
    OnTarget,
    BelowTarget,
    NoData,
}

impl HealthStatus {
    pub fn label(self) -> &'static str {
        match self {
            HealthStatus::OnTarget => "on target",
            HealthStatus::BelowTarget => "below target",
            HealthStatus::NoData => "no data",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRate {
    pub id: String,
    pub name: String,
    pub rate: f64,
    pub sessions: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourseDrill {
    pub department: String,
    #[serde(flatten)]
    pub course: UnitRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthCheck {
    pub date: NaiveDate,
    pub window: DateWindow,
    pub params: HealthParams,
    pub status: HealthStatus,
    pub institution_rate: Option<f64>,
    pub sessions: u32,
    /// Departments under the department target, lowest rate first.
    pub departments: Vec<UnitRate>,
    /// Courses under the course target inside those departments, grouped
    /// in department order and lowest rate first within a department.
    pub courses: Vec<CourseDrill>,
    pub recommendations: Vec<String>,
}

fn ascending(a: &UnitRate, b: &UnitRate) -> std::cmp::Ordering {
    a.rate.total_cmp(&b.rate).then_with(|| a.id.cmp(&b.id))
}

pub fn run_daily_health_check(
    snap: &Snapshot,
    date: NaiveDate,
    params: &HealthParams,
    policy: AttendancePolicy,
) -> HealthCheck {
    let window = DateWindow::trailing(date, params.window_days);
    let mut institution = AttendanceTally::default();
    let mut by_dept: BTreeMap<String, AttendanceTally> = BTreeMap::new();
    let mut by_course: BTreeMap<(String, String), AttendanceTally> = BTreeMap::new();
    for fact in snap.session_facts() {
        if !window.contains(fact.date) {
            continue;
        }
        institution.add(fact.status);
        if let Some(course) = fact.course {
            by_dept
                .entry(course.department.clone())
                .or_default()
                .add(fact.status);
            by_course
                .entry((course.department.clone(), course.id.clone()))
                .or_default()
                .add(fact.status);
        }
    }
    let (_, sessions) = institution.counts(policy);
    let institution_rate = institution.rate(policy);
    let targets = params.targets;
    let status = match institution_rate {
        None => HealthStatus::NoData,
        Some(r) if r >= targets.institution => HealthStatus::OnTarget,
        Some(_) => HealthStatus::BelowTarget,
    };

    let mut departments = Vec::new();
    let mut courses = Vec::new();
    let mut recommendations = Vec::new();
    if status == HealthStatus::BelowTarget {
        for (dept, tally) in &by_dept {
            let Some(rate) = tally.rate(policy) else { continue };
            if rate < targets.department {
                departments.push(UnitRate {
                    id: dept.clone(),
                    name: snap.department(dept).map_or_else(|| dept.clone(), |d| d.name.clone()),
                    rate,
                    sessions: tally.counts(policy).1,
                });
            }
        }
        departments.sort_by(ascending);
        for d in &departments {
            let mut mine: Vec<UnitRate> = by_course
                .iter()
                .filter(|((dept, _), _)| *dept == d.id)
                .filter_map(|((_, course), tally)| {
                    let rate = tally.rate(policy)?;
                    (rate < targets.course).then(|| UnitRate {
                        id: course.clone(),
                        name: snap.course(course).map_or_else(|| course.clone(), |c| c.title.clone()),
                        rate,
                        sessions: tally.counts(policy).1,
                    })
                })
                .collect();
            mine.sort_by(ascending);
            if mine.is_empty() {
                recommendations.push(format!(
                    "{}: attendance is {} against a {} target with no single course below {}; review timetabling and engagement across the department.",
                    d.name,
                    percent_label(d.rate),
                    percent_label(targets.department),
                    percent_label(targets.course),
                ));
            } else {
                let names: Vec<&str> = mine.iter().map(|c| c.name.as_str()).collect();
                recommendations.push(format!(
                    "{}: department head to review attendance in {} with the course instructors this week.",
                    d.name,
                    names.join(", "),
                ));
            }
            courses.extend(mine.into_iter().map(|course| CourseDrill {
                department: d.id.clone(),
                course,
            }));
        }
        if departments.is_empty() {
            recommendations.push(
                "Institution is below target although no department is; monitor the trend at the next check."
                    .into(),
            );
        }
    }
    HealthCheck {
        date,
        window,
        params: params.clone(),
        status,
        institution_rate,
        sessions,
        departments,
        courses,
        recommendations,
    }
}

pub const HEALTH_ABOUT: &str = "Produced by the daily health check workflow, which runs every evening over the trailing attendance window for the whole institution. When the institutional rate misses its target the report lists the departments under their target and, inside them, the courses under the course target, with follow-up suggestions for department heads.";

pub fn health_report(check: &HealthCheck, report_id: &str, generated_at: Timestamp) -> Result<InsightReport> {
    let window = match (check.window.from, check.window.to) {
        (Some(f), Some(t)) => format!("{f} to {t}"),
        _ => "all".into(),
    };
    let mut sections = vec![Section::key_values(
        "Summary",
        [
            ("Status", check.status.label().to_string()),
            (
                "Institution Rate",
                check
                    .institution_rate
                    .map_or_else(|| "no data".to_string(), percent_label),
            ),
            ("Target", percent_label(check.params.targets.institution)),
            ("Window", window),
            ("Sessions Counted", check.sessions.to_string()),
        ],
    )];
    if check.status == HealthStatus::BelowTarget {
        sections.push(Section::table(
            "Departments Below Target",
            &["Department", "Rate", "Sessions"],
            check
                .departments
                .iter()
                .map(|d| vec![d.name.clone(), percent_label(d.rate), d.sessions.to_string()])
                .collect(),
        ));
        sections.push(Section::table(
            "Courses Below Target",
            &["Department", "Course", "Rate", "Sessions"],
            check
                .courses
                .iter()
                .map(|c| {
                    vec![
                        c.department.clone(),
                        c.course.name.clone(),
                        percent_label(c.course.rate),
                        c.course.sessions.to_string(),
                    ]
                })
                .collect(),
        ));
        sections.push(Section::actions("Recommendations", check.recommendations.clone()));
    }
    Ok(InsightReport {
        report_id: report_id.to_string(),
        generated_at,
        report_type: ReportType::DailyHealth,
        title: "Daily Health Check".into(),
        about: HEALTH_ABOUT.into(),
        sections,
        status: ReportStatus::Draft,
        data: serde_json::to_value(check)?,
    })
}
