use super::{BlueprintRow, Question, QuestionKind, RubricCriterion};
use crate::ingestion::Clo;

/// Fills question text, rubric and answer key for one blueprint row.
pub trait QuestionGenerator {
    fn id(&self) -> &str;
    fn generate(
        &self,
        index: usize,
        row: &BlueprintRow,
        clos: &[&Clo],
    ) -> Result<GeneratedQuestion, String>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedQuestion {
    pub statement: String,
    pub rubric: Vec<RubricCriterion>,
    pub answer_key: Option<String>,
}

/// Deterministic template generator. Constructed-response questions get a
/// two-criterion rubric splitting the points evenly; MCQs get answer key `A`.
#[derive(Debug, Default, Clone, Copy)]
pub struct TemplateGenerator;

impl QuestionGenerator for TemplateGenerator {
    fn id(&self) -> &str {
        "template-v1"
    }

    fn generate(
        &self,
        index: usize,
        row: &BlueprintRow,
        clos: &[&Clo],
    ) -> Result<GeneratedQuestion, String> {
        let focus = clos
            .iter()
            .map(|c| c.statement.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        let verb = row.bloom_level.as_str();
        match row.kind {
            QuestionKind::Mcq => Ok(GeneratedQuestion {
                statement: format!("Q{}. ({verb}) Choose the best answer: {focus}", index + 1),
                rubric: Vec::new(),
                answer_key: Some("A".into()),
            }),
            _ => {
                let half = row.max_points / 2.0;
                Ok(GeneratedQuestion {
                    statement: format!("Q{}. ({verb}) Respond in full: {focus}", index + 1),
                    rubric: vec![
                        RubricCriterion {
                            criterion: "Correctness".into(),
                            points: half,
                            keywords: vec!["correct".into()],
                        },
                        RubricCriterion {
                            criterion: "Justification".into(),
                            points: row.max_points - half,
                            keywords: vec!["because".into()],
                        },
                    ],
                    answer_key: None,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradeProposal {
    pub points: f64,
    pub feedback: String,
    pub reasoning: String,
}

/// Proposes a grade for one answer. Never finalizes anything.
pub trait GradingAdapter {
    fn id(&self) -> &str;
    fn suggest(&self, question: &Question, answer_text: &str) -> Result<GradeProposal, String>;
}

/// Deterministic grader: exact match against the answer key for MCQs, and
/// a keyword rubric for everything else (a criterion is met when the answer
/// contains any of its keywords, case-insensitively; with no keywords the
/// criterion name itself is the keyword).
#[derive(Debug, Default, Clone, Copy)]
pub struct MockGrader;

impl GradingAdapter for MockGrader {
    fn id(&self) -> &str {
        "mock-grader-v1"
    }

    fn suggest(&self, question: &Question, answer_text: &str) -> Result<GradeProposal, String> {
        let answer = answer_text.trim().to_lowercase();
        if question.kind == QuestionKind::Mcq {
            let key = question
                .answer_key
                .as_deref()
                .ok_or_else(|| format!("question {} has no answer key", question.q_id))?;
            let correct = answer == key.trim().to_lowercase();
            return Ok(GradeProposal {
                points: if correct { question.max_points } else { 0.0 },
                feedback: if correct {
                    "Correct.".into()
                } else {
                    format!("Incorrect; the expected answer is {key}.")
                },
                reasoning: format!(
                    "Compared the selected option `{}` with the key `{key}`: {}.",
                    answer_text.trim(),
                    if correct { "match" } else { "no match" }
                ),
            });
        }
        if question.rubric.is_empty() {
            return Err(format!("question {} has no rubric", question.q_id));
        }
        let mut points = 0.0;
        let mut steps = Vec::new();
        let mut missed = Vec::new();
        for c in &question.rubric {
            let keywords: Vec<String> = if c.keywords.is_empty() {
                vec![c.criterion.to_lowercase()]
            } else {
                c.keywords.iter().map(|k| k.to_lowercase()).collect()
            };
            let hit = keywords.iter().find(|k| answer.contains(k.as_str()));
            match hit {
                Some(k) => {
                    points += c.points;
                    steps.push(format!("{}: met (found `{k}`), +{}", c.criterion, c.points));
                }
                None => {
                    steps.push(format!("{}: not met, +0", c.criterion));
                    missed.push(c.criterion.clone());
                }
            }
        }
        let feedback = if missed.is_empty() {
            "All rubric criteria addressed.".to_string()
        } else {
            format!("Needs work on: {}.", missed.join(", "))
        };
        Ok(GradeProposal {
            points,
            feedback,
            reasoning: steps.join("\n"),
        })
    }
}

/// Grader that always fails, for exercising the failure path.
#[derive(Debug, Clone)]
pub struct FailingGrader(pub String);

impl GradingAdapter for FailingGrader {
    fn id(&self) -> &str {
        "failing-grader"
    }

    fn suggest(&self, _: &Question, _: &str) -> Result<GradeProposal, String> {
        Err(self.0.clone())
    }
}
