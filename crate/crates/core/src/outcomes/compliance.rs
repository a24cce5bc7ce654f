//! Rule-based review of course specifications against accreditation
//! expectations. Rules are identified `R1`..`R5`; a ruleset file selects
//! which run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{program_links, program_plos, CloPloLink, Contribution, Plo};
use crate::error::{Error, Result};
use crate::ingestion::{CourseSpecification, Severity, WEIGHT_TOLERANCE};
use crate::store::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum RuleId {
    /// Specification has at least one CLO.
    R1,
    /// Every CLO carries a Bloom level.
    R2,
    /// Every CLO maps to at least one PLO.
    R3,
    /// Every PLO of the program is covered by a direct link from some course.
    R4,
    /// Assessment weights sum to 1.
    R5,
}

impl RuleId {
    pub const ALL: [RuleId; 5] = [RuleId::R1, RuleId::R2, RuleId::R3, RuleId::R4, RuleId::R5];
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for RuleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RuleId::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown rule id `{s}`")))
    }
}

impl TryFrom<String> for RuleId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RuleId> for String {
    fn from(r: RuleId) -> String {
        r.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ruleset {
    pub enabled: Vec<RuleId>,
    #[serde(default = "default_tolerance")]
    pub weight_tolerance: f64,
}

fn default_tolerance() -> f64 {
    WEIGHT_TOLERANCE
}

impl Default for Ruleset {
    fn default() -> Self {
        Self {
            enabled: RuleId::ALL.to_vec(),
            weight_tolerance: WEIGHT_TOLERANCE,
        }
    }
}

impl Ruleset {
    /// Parse a TOML ruleset, e.g. `enabled = ["R1", "R3"]`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let rs: Ruleset = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        if !(rs.weight_tolerance >= 0.0) {
            return Err(Error::Config("weight_tolerance must be non-negative".into()));
        }
        Ok(rs)
    }

    fn enabled(&self, rule: RuleId) -> bool {
        self.enabled.contains(&rule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceFinding {
    pub rule_id: RuleId,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
    pub remediation: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProgramContext {
    pub program: String,
    pub plos: Vec<Plo>,
    /// Links of every course in the program.
    pub links: Vec<CloPloLink>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplianceContext {
    pub programs: Vec<ProgramContext>,
}

impl ComplianceContext {
    /// Program context for every program the course belongs to.
    pub fn for_course(snap: &Snapshot, course: &str) -> Result<Self> {
        let c = snap
            .course(course)
            .ok_or_else(|| Error::NotFound(format!("course {course}")))?;
        let programs = c
            .programs
            .iter()
            .map(|p| ProgramContext {
                program: p.clone(),
                plos: program_plos(snap, p).into_iter().cloned().collect(),
                links: program_links(snap, p).into_iter().cloned().collect(),
            })
            .collect();
        Ok(Self { programs })
    }
}

/// Run every enabled rule; findings come back ordered by rule, then subject.
pub fn check_compliance(
    spec: &CourseSpecification,
    ctx: &ComplianceContext,
    ruleset: &Ruleset,
) -> Vec<ComplianceFinding> {
    let mut out = Vec::new();
    let mut push = |rule_id, subject: String, message: String, remediation: String| {
        out.push(ComplianceFinding {
            rule_id,
            severity: Severity::Error,
            subject,
            message,
            remediation,
        })
    };

    if ruleset.enabled(RuleId::R1) && spec.clos.is_empty() {
        push(
            RuleId::R1,
            format!("course {}", spec.course),
            "specification has no course learning outcomes".into(),
            format!("Add at least one measurable CLO to the specification of {}.", spec.course),
        );
    }
    if ruleset.enabled(RuleId::R2) {
        for clo in spec.clos.iter().filter(|c| c.bloom_level.is_none()) {
            push(
                RuleId::R2,
                format!("clo {}/{}", spec.course, clo.clo_id),
                format!("CLO {} has no Bloom's taxonomy level", clo.clo_id),
                format!("Assign a Bloom's taxonomy level to CLO {}.", clo.clo_id),
            );
        }
    }
    if ruleset.enabled(RuleId::R3) {
        for clo in &spec.clos {
            let mapped = ctx.programs.iter().flat_map(|p| &p.links).any(|l| {
                l.course == spec.course && l.clo_id == clo.clo_id
            });
            if !mapped {
                push(
                    RuleId::R3,
                    format!("clo {}/{}", spec.course, clo.clo_id),
                    format!("CLO {} is not mapped to any PLO", clo.clo_id),
                    format!(
                        "Map CLO {} to at least one program learning outcome or revise it.",
                        clo.clo_id
                    ),
                );
            }
        }
    }
    if ruleset.enabled(RuleId::R4) {
        for program in &ctx.programs {
            for plo in &program.plos {
                let covered = program
                    .links
                    .iter()
                    .any(|l| l.plo_id == plo.plo_id && l.contribution == Contribution::Direct);
                if !covered {
                    push(
                        RuleId::R4,
                        format!("plo {}/{}", program.program, plo.plo_id),
                        format!(
                            "PLO {} of program {} has no direct contribution from any course",
                            plo.plo_id, program.program
                        ),
                        format!(
                            "Designate at least one course CLO as a direct contributor to PLO {}.",
                            plo.plo_id
                        ),
                    );
                }
            }
        }
    }
    if ruleset.enabled(RuleId::R5) && !spec.assessment_methods.is_empty() {
        let sum = spec.weight_sum();
        if (sum - 1.0).abs() > ruleset.weight_tolerance {
            push(
                RuleId::R5,
                format!("course {}", spec.course),
                format!("assessment weights sum to {sum}, expected 1.0"),
                "Rebalance the assessment weights so they total 100%.".into(),
            );
        }
    }
    out.sort_by(|a, b| (a.rule_id, &a.subject).cmp(&(b.rule_id, &b.subject)));
    out
}
