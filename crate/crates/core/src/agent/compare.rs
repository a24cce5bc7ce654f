use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::clock::Timestamp;
use crate::error::Result;
use crate::grading::gradebook;
use crate::outcomes::{active_students, clo_score, meets_threshold, OutcomeConfig};
use crate::reports::{InsightReport, ReportStatus, ReportType, Section};
use crate::rounding::round_half_up;
use crate::store::{AttendancePolicy, AttendanceTally, CourseOffering, Slot, Snapshot};

/// Conjunctive offering filter. `slot` keeps offerings with at least one
/// session in that slot and, for attendance, only those sessions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupFilter {
    pub label: String,
    pub department: Option<String>,
    pub course: Option<String>,
    pub term: Option<String>,
    pub slot: Option<Slot>,
}

impl GroupFilter {
    pub fn display(&self) -> String {
        if !self.label.is_empty() {
            return self.label.clone();
        }
        let mut parts = Vec::new();
        if let Some(d) = &self.department {
            parts.push(format!("department {d}"));
        }
        if let Some(c) = &self.course {
            parts.push(format!("course {c}"));
        }
        if let Some(t) = &self.term {
            parts.push(format!("term {t}"));
        }
        if let Some(s) = self.slot {
            parts.push(format!("{} sessions", s.as_str()));
        }
        if parts.is_empty() {
            "all offerings".into()
        } else {
            parts.join(", ")
        }
    }

    pub fn offerings<'a>(&self, snap: &'a Snapshot) -> Vec<&'a CourseOffering> {
        snap.offerings()
            .filter(|o| {
                let course = snap.course(&o.course);
                self.course.as_ref().is_none_or(|c| *c == o.course)
                    && self.term.as_ref().is_none_or(|t| *t == o.term)
                    && self
                        .department
                        .as_ref()
                        .is_none_or(|d| course.is_some_and(|c| c.department == *d))
                    && self
                        .slot
                        .is_none_or(|s| o.sessions.iter().any(|x| x.slot == s))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AttendanceRate,
    MeanPercentGrade,
    CloAchievement,
}

impl Metric {
    pub fn all() -> Vec<Metric> {
        vec![
            Metric::AttendanceRate,
            Metric::MeanPercentGrade,
            Metric::CloAchievement,
        ]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AttendanceRate => "attendance_rate",
            Metric::MeanPercentGrade => "mean_percent_grade",
            Metric::CloAchievement => "clo_achievement",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::AttendanceRate => "attendance rate",
            Metric::MeanPercentGrade => "mean grade",
            Metric::CloAchievement => "CLO achievement",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Metric::all().into_iter().find(|m| m.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: Metric,
    /// Percent scale.
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `a - b` in percentage points.
    pub difference: Option<f64>,
    pub interpretation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub filter: GroupFilter,
    pub offerings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub group_a: GroupSummary,
    pub group_b: GroupSummary,
    pub as_of: Option<NaiveDate>,
    pub metrics: Vec<MetricRow>,
}

fn attendance_metric(
    snap: &Snapshot,
    filter: &GroupFilter,
    offerings: &[&CourseOffering],
    as_of: Option<NaiveDate>,
    policy: AttendancePolicy,
) -> Option<f64> {
    let ids: Vec<&str> = offerings.iter().map(|o| o.id.as_str()).collect();
    let mut tally = AttendanceTally::default();
    for fact in snap.session_facts() {
        if ids.contains(&fact.offering.id.as_str())
            && filter.slot.is_none_or(|s| s == fact.slot)
            && as_of.is_none_or(|d| fact.date <= d)
        {
            tally.add(fact.status);
        }
    }
    tally.rate(policy).map(|r| r * 100.0)
}

fn grade_metric(snap: &Snapshot, offerings: &[&CourseOffering]) -> Option<f64> {
    let mut percents = Vec::new();
    for o in offerings {
        let mut per_student: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        let rows = gradebook(snap, &o.id);
        for r in &rows {
            let e = per_student.entry(r.student.as_str()).or_default();
            e.0 += r.final_points;
            e.1 += r.max_points;
        }
        percents.extend(
            per_student
                .values()
                .filter(|(_, max)| *max > 0.0)
                .map(|(earned, max)| 100.0 * earned / max),
        );
    }
    (!percents.is_empty()).then(|| percents.iter().sum::<f64>() / percents.len() as f64)
}

fn clo_metric(snap: &Snapshot, offerings: &[&CourseOffering], cfg: &OutcomeConfig) -> Option<f64> {
    let (mut scored, mut meeting) = (0usize, 0usize);
    for o in offerings {
        let Some(spec) = snap.course_spec(&o.course) else { continue };
        let rows = gradebook(snap, &o.id);
        for student in active_students(snap, &o.id) {
            for clo in &spec.clos {
                if let Some(score) = clo_score(student, &clo.clo_id, &rows) {
                    scored += 1;
                    if meets_threshold(score, cfg.score_threshold) {
                        meeting += 1;
                    }
                }
            }
        }
    }
    (scored > 0).then(|| 100.0 * meeting as f64 / scored as f64)
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |p| format!("{:.1}%", round_half_up(p, 1)))
}

fn fmt_diff(d: Option<f64>) -> String {
    match d {
        None => "n/a".into(),
        Some(d) => {
            let r = round_half_up(d, 1);
            if r == 0.0 {
                "0.0".into()
            } else {
                format!("{r:+.1}")
            }
        }
    }
}

/// Compare two groups metric by metric. Swapping the groups negates every
/// difference and swaps the labels.
pub fn compare_groups(
    snap: &Snapshot,
    filter_a: &GroupFilter,
    filter_b: &GroupFilter,
    metrics: &[Metric],
    as_of: Option<NaiveDate>,
    policy: AttendancePolicy,
    cfg: &OutcomeConfig,
) -> Comparison {
    let off_a = filter_a.offerings(snap);
    let off_b = filter_b.offerings(snap);
    let (la, lb) = (filter_a.display(), filter_b.display());
    let value = |m: Metric, f: &GroupFilter, offs: &[&CourseOffering]| match m {
        Metric::AttendanceRate => attendance_metric(snap, f, offs, as_of, policy),
        Metric::MeanPercentGrade => grade_metric(snap, offs),
        Metric::CloAchievement => clo_metric(snap, offs, cfg),
    };
    let rows = metrics
        .iter()
        .map(|&m| {
            let a = value(m, filter_a, &off_a);
            let b = value(m, filter_b, &off_b);
            let difference = a.zip(b).map(|(a, b)| a - b);
            let interpretation = match (a, b, difference) {
                (Some(_), Some(_), Some(d)) => {
                    let r = round_half_up(d, 1);
                    if r == 0.0 {
                        format!("{la} and {lb} have the same {} ({}).", m.label(), fmt_pct(a))
                    } else {
                        let (hi, lo) = if r > 0.0 { (&la, &lb) } else { (&lb, &la) };
                        format!(
                            "{hi} has the higher {} than {lo}, by {:.1} points.",
                            m.label(),
                            r.abs()
                        )
                    }
                }
                (None, None, _) => format!("Insufficient data for {} in both groups.", m.label()),
                (None, _, _) => format!("Insufficient data for {} in {la}.", m.label()),
                _ => format!("Insufficient data for {} in {lb}.", m.label()),
            };
            MetricRow {
                metric: m,
                a,
                b,
                difference,
                interpretation,
            }
        })
        .collect();
    let summary = |label: String, f: &GroupFilter, offs: &[&CourseOffering]| GroupSummary {
        label,
        filter: f.clone(),
        offerings: offs.iter().map(|o| o.id.clone()).collect(),
    };
    Comparison {
        group_a: summary(la.clone(), filter_a, &off_a),
        group_b: summary(lb.clone(), filter_b, &off_b),
        as_of,
        metrics: rows,
    }
}

pub const COMPARE_ABOUT: &str = "Produced by the comparative analysis workflow for two administrator-defined groups of course offerings, such as morning against afternoon sessions or one department against another. Each metric is shown for both groups with the signed difference in percentage points and a one-line reading of the gap.";

pub fn comparison_report(c: &Comparison, report_id: &str, generated_at: Timestamp) -> Result<InsightReport> {
    let (la, lb) = (&c.group_a.label, &c.group_b.label);
    let mut sections = vec![Section::key_values(
        "Groups",
        [
            ("Group A", format!("{la} ({} offerings)", c.group_a.offerings.len())),
            ("Group B", format!("{lb} ({} offerings)", c.group_b.offerings.len())),
        ],
    )];
    let empty: Vec<String> = [&c.group_a, &c.group_b]
        .iter()
        .filter(|g| g.offerings.is_empty())
        .map(|g| format!("{} matches no course offering.", g.label))
        .collect();
    if !empty.is_empty() {
        sections.push(Section::text("Insufficient Data", empty.join("\n")));
    }
    sections.push(Section::table(
        "Comparison",
        &["Metric", la.as_str(), lb.as_str(), "Difference (A - B)"],
        c.metrics
            .iter()
            .map(|m| {
                vec![
                    m.metric.label().to_string(),
                    fmt_pct(m.a),
                    fmt_pct(m.b),
                    fmt_diff(m.difference),
                ]
            })
            .collect(),
    ));
    sections.push(Section::text(
        "Interpretation",
        c.metrics
            .iter()
            .map(|m| m.interpretation.as_str())
            .collect::<Vec<_>>()
            .join("\n"),
    ));
    Ok(InsightReport {
        report_id: report_id.to_string(),
        generated_at,
        report_type: ReportType::Comparative,
        title: format!("Comparative Analysis: {la} vs {lb}"),
        about: COMPARE_ABOUT.into(),
        sections,
        status: ReportStatus::Draft,
        data: serde_json::to_value(c)?,
    })
}
