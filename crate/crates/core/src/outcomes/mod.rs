//! Learning-outcome analytics: per-student CLO scores, per-CLO achievement,
//! contribution-weighted PLO rollups, the CLO-PLO matrix and compliance
//! rules. Everything here is a pure function of a store snapshot.

mod compliance;
mod matrix;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use compliance::{
    check_compliance, ComplianceContext, ComplianceFinding, ProgramContext, RuleId, Ruleset,
};
pub use matrix::{build_matrix, MatrixCell, MatrixDocument, PloRollup};

use crate::error::{Error, Result};
use crate::grading::{gradebook, GradebookRow};
use crate::ingestion::SpecStatus;
use crate::rounding::round_half_up;
use crate::store::{EnrollmentStatus, Snapshot};

/// Scores are compared against thresholds after rounding to this many
/// decimals, so `0.7` computed as `2.1 / 3.0` still meets a 0.70 threshold.
pub const SCORE_DECIMALS: u32 = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plo {
    pub program: String,
    pub plo_id: String,
    pub statement: String,
    #[serde(default)]
    pub abet_criterion: Option<String>,
}

impl Plo {
    pub fn storage_key(program: &str, plo_id: &str) -> String {
        format!("{program}/{plo_id}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contribution {
    Direct,
    Indirect,
    Supporting,
}

impl Contribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Contribution::Direct => "direct",
            Contribution::Indirect => "indirect",
            Contribution::Supporting => "supporting",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(Self::Direct),
            "indirect" => Some(Self::Indirect),
            "supporting" => Some(Self::Supporting),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloPloLink {
    pub course: String,
    pub clo_id: String,
    pub program: String,
    pub plo_id: String,
    pub contribution: Contribution,
}

impl CloPloLink {
    /// One link per `(clo, plo)` pair.
    pub fn storage_key(&self) -> String {
        format!("{}/{}/{}/{}", self.course, self.clo_id, self.program, self.plo_id)
    }

    pub fn clo(&self) -> CloRef {
        CloRef::new(&self.course, &self.clo_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CloRef {
    pub course: String,
    pub clo_id: String,
}

impl CloRef {
    pub fn new(course: &str, clo_id: &str) -> Self {
        Self {
            course: course.into(),
            clo_id: clo_id.into(),
        }
    }
}

impl fmt::Display for CloRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.course, self.clo_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContributionWeights {
    pub direct: f64,
    pub supporting: f64,
    pub indirect: f64,
}

impl Default for ContributionWeights {
    fn default() -> Self {
        Self {
            direct: 1.0,
            supporting: 0.5,
            indirect: 0.25,
        }
    }
}

impl ContributionWeights {
    pub fn weight(&self, c: Contribution) -> f64 {
        match c {
            Contribution::Direct => self.direct,
            Contribution::Supporting => self.supporting,
            Contribution::Indirect => self.indirect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutcomeConfig {
    /// Per-student CLO score a student must reach, as a fraction.
    pub score_threshold: f64,
    /// Share of students that must reach `score_threshold` for a CLO to be
    /// on target, as a fraction.
    pub target_share: f64,
    /// PLO value (percent) below which a PLO is flagged.
    pub plo_threshold: f64,
    pub weights: ContributionWeights,
    /// Additionally weight each CLO by the number of students with data.
    pub enrollment_weighted: bool,
}

impl Default for OutcomeConfig {
    fn default() -> Self {
        Self {
            score_threshold: 0.70,
            target_share: 0.70,
            plo_threshold: 70.0,
            weights: ContributionWeights::default(),
            enrollment_weighted: false,
        }
    }
}

impl OutcomeConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("outcomes.{name} must be in [0, 1], got {v}")))
            }
        };
        unit("score_threshold", self.score_threshold)?;
        unit("target_share", self.target_share)?;
        if !(0.0..=100.0).contains(&self.plo_threshold) {
            return Err(Error::Config(format!(
                "outcomes.plo_threshold must be in [0, 100], got {}",
                self.plo_threshold
            )));
        }
        for (name, w) in [
            ("direct", self.weights.direct),
            ("supporting", self.weights.supporting),
            ("indirect", self.weights.indirect),
        ] {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config(format!("outcomes.weights.{name} must be positive")));
            }
        }
        Ok(())
    }

    fn target_pct(&self) -> f64 {
        round_half_up(self.target_share * 100.0, SCORE_DECIMALS)
    }
}

/// Earned over possible points across every finalized question linked to
/// `clo_id`. A question linked to several CLOs counts fully toward each.
/// `None` when no linked question has been finalized for the student.
pub fn clo_score(student: &str, clo_id: &str, rows: &[GradebookRow]) -> Option<f64> {
    let (earned, possible) = rows
        .iter()
        .filter(|r| r.student == student && r.clo_links.iter().any(|c| c == clo_id))
        .fold((0.0, 0.0), |(e, p), r| (e + r.final_points, p + r.max_points));
    (possible > 0.0).then(|| earned / possible)
}

pub fn meets_threshold(score: f64, threshold: f64) -> bool {
    round_half_up(score, SCORE_DECIMALS) >= round_half_up(threshold, SCORE_DECIMALS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AchievementStat {
    pub clo: CloRef,
    pub offerings: Vec<String>,
    /// Students with a defined score.
    pub n_students: usize,
    pub n_meeting: usize,
    /// `100 * n_meeting / n_students`; `None` when nobody has data.
    pub achievement_pct: Option<f64>,
    pub threshold: f64,
    pub target_share: f64,
    pub below_target: bool,
    /// One-decimal rendering of `achievement_pct`, or `n/a`.
    pub display: String,
}

/// Active students of `offering`, in key order.
pub fn active_students<'a>(snap: &'a Snapshot, offering: &str) -> Vec<&'a str> {
    let prefix = format!("{offering}/");
    snap.iter_prefix(crate::store::RecordKind::Enrollment, &prefix)
        .filter_map(|r| match r {
            crate::store::Record::Enrollment(e)
                if e.offering == offering && e.status == EnrollmentStatus::Active =>
            {
                Some(e.student.as_str())
            }
            _ => None,
        })
        .collect()
}

fn pooled_achievement(
    snap: &Snapshot,
    clo: CloRef,
    offerings: &[&str],
    cfg: &OutcomeConfig,
) -> AchievementStat {
    let mut n_students = 0;
    let mut n_meeting = 0;
    for offering in offerings {
        let rows = gradebook(snap, offering);
        for student in active_students(snap, offering) {
            if let Some(score) = clo_score(student, &clo.clo_id, &rows) {
                n_students += 1;
                if meets_threshold(score, cfg.score_threshold) {
                    n_meeting += 1;
                }
            }
        }
    }
    let achievement_pct =
        (n_students > 0).then(|| 100.0 * n_meeting as f64 / n_students as f64);
    let below_target =
        achievement_pct.is_some_and(|p| round_half_up(p, 1) < cfg.target_pct());
    AchievementStat {
        clo,
        offerings: offerings.iter().map(|s| s.to_string()).collect(),
        n_students,
        n_meeting,
        achievement_pct,
        threshold: cfg.score_threshold,
        target_share: cfg.target_share,
        below_target,
        display: pct_display(achievement_pct),
    }
}

pub(crate) fn pct_display(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |p| format!("{:.1}", round_half_up(p, 1)))
}

/// Share of active students in `offering` whose score on `clo_id` meets
/// the per-student threshold.
pub fn clo_achievement(
    snap: &Snapshot,
    offering: &str,
    clo_id: &str,
    cfg: &OutcomeConfig,
) -> Result<AchievementStat> {
    let off = snap
        .offering(offering)
        .ok_or_else(|| Error::NotFound(format!("offering {offering}")))?;
    Ok(pooled_achievement(
        snap,
        CloRef::new(&off.course, clo_id),
        &[offering],
        cfg,
    ))
}

/// CLO achievement pooled over every offering of the CLO's course in `term`.
pub fn course_clo_achievement(
    snap: &Snapshot,
    clo: &CloRef,
    term: &str,
    cfg: &OutcomeConfig,
) -> AchievementStat {
    let offerings: Vec<&str> = snap
        .offerings()
        .filter(|o| o.course == clo.course && o.term == term)
        .map(|o| o.id.as_str())
        .collect();
    pooled_achievement(snap, clo.clone(), &offerings, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PloContribution {
    pub clo: CloRef,
    pub contribution: Contribution,
    pub weight: f64,
    pub achievement_pct: Option<f64>,
    pub n_students: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PloStat {
    pub program: String,
    pub plo_id: String,
    pub statement: String,
    pub abet_criterion: Option<String>,
    /// Weighted mean of contributing CLO achievement percentages.
    pub value: Option<f64>,
    pub contributions: Vec<PloContribution>,
    pub below_threshold: bool,
    pub insufficient_evidence: bool,
    pub display: String,
}

fn check_program_term(snap: &Snapshot, program: &str, term: &str) -> Result<()> {
    if snap.program(program).is_none() {
        return Err(Error::NotFound(format!("program {program}")));
    }
    if snap.term(term).is_none() {
        return Err(Error::NotFound(format!("term {term}")));
    }
    Ok(())
}

pub fn program_plos<'a>(snap: &'a Snapshot, program: &str) -> Vec<&'a Plo> {
    let prefix = format!("{program}/");
    snap.iter_prefix(crate::store::RecordKind::Plo, &prefix)
        .filter_map(|r| match r {
            crate::store::Record::Plo(p) if p.program == program => Some(p),
            _ => None,
        })
        .collect()
}

pub fn program_links<'a>(snap: &'a Snapshot, program: &str) -> Vec<&'a CloPloLink> {
    snap.clo_plo_links().filter(|l| l.program == program).collect()
}

/// Contribution-weighted PLO values for `program` in `term`.
pub fn plo_achievement(
    snap: &Snapshot,
    program: &str,
    term: &str,
    cfg: &OutcomeConfig,
) -> Result<Vec<PloStat>> {
    check_program_term(snap, program, term)?;
    let links = program_links(snap, program);
    let mut cache: BTreeMap<CloRef, AchievementStat> = BTreeMap::new();
    let mut out = Vec::new();
    for plo in program_plos(snap, program) {
        let mut contributions = Vec::new();
        for link in links.iter().filter(|l| l.plo_id == plo.plo_id) {
            let clo = link.clo();
            let stat = cache
                .entry(clo.clone())
                .or_insert_with(|| course_clo_achievement(snap, &clo, term, cfg));
            let mut weight = cfg.weights.weight(link.contribution);
            if cfg.enrollment_weighted {
                weight *= stat.n_students as f64;
            }
            contributions.push(PloContribution {
                clo,
                contribution: link.contribution,
                weight,
                achievement_pct: stat.achievement_pct,
                n_students: stat.n_students,
            });
        }
        let (num, den) = contributions
            .iter()
            .filter_map(|c| c.achievement_pct.map(|p| (c.weight, p)))
            .filter(|(w, _)| *w > 0.0)
            .fold((0.0, 0.0), |(n, d), (w, p)| (n + w * p, d + w));
        let value = (den > 0.0).then(|| num / den);
        out.push(PloStat {
            program: program.to_string(),
            plo_id: plo.plo_id.clone(),
            statement: plo.statement.clone(),
            abet_criterion: plo.abet_criterion.clone(),
            value,
            contributions,
            below_threshold: value.is_some_and(|v| {
                round_half_up(v, 1) < round_half_up(cfg.plo_threshold, SCORE_DECIMALS)
            }),
            insufficient_evidence: value.is_none(),
            display: value.map_or_else(
                || "insufficient evidence".to_string(),
                |v| format!("{:.1}", round_half_up(v, 1)),
            ),
        });
    }
    Ok(out)
}

/// Courses of `program` that have a confirmed specification.
pub(crate) fn program_courses_with_specs<'a>(
    snap: &'a Snapshot,
    program: &'a str,
) -> impl Iterator<Item = &'a crate::ingestion::CourseSpecification> + 'a {
    snap.courses()
        .filter(move |c| c.programs.iter().any(|p| p == program))
        .filter_map(|c| snap.course_spec(&c.id))
        .filter(|s| s.status == SpecStatus::Confirmed)
}
