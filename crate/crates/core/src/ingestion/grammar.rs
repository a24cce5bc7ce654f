use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use super::{
    AssessmentMethod, BloomLevel, Clo, DraftContent, Extracted, ExtractorAdapter, Finding,
    LineSpan,
};

/// Deterministic extractor for the line-oriented syllabus format:
///
/// ```text
/// COURSE: cs301
/// CLO c1 [apply]: Implement recursive algorithms
/// TOPIC: Recursion
/// ASSESS: Final exam, 0.5
/// BOOK: Structure and Interpretation of Computer Programs
/// ```
///
/// Blank lines and lines starting with `#` are skipped. The bloom tag is
/// optional. Weights may be fractions (`0.3`) or percentages (`30%`).
#[derive(Debug, Default, Clone, Copy)]
pub struct GrammarExtractor;

impl GrammarExtractor {
    pub const ID: &'static str = "grammar-v1";
}

fn clo_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^CLO\s+([^\s\[:]+)\s*(?:\[([^\]]*)\])?\s*:\s*(.*)$").expect("valid regex")
    })
}

fn parse_weight(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    match raw.strip_suffix('%') {
        Some(p) => p.trim().parse::<f64>().ok().map(|v| v / 100.0),
        None => raw.parse().ok(),
    }
}

impl ExtractorAdapter for GrammarExtractor {
    fn id(&self) -> &str {
        Self::ID
    }

    fn extract(&self, text: &str) -> Result<DraftContent, String> {
        let mut out = DraftContent::default();
        let mut clo_lines: BTreeMap<String, u32> = BTreeMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let n = idx as u32 + 1;
            let span = LineSpan::line(n);
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("COURSE:") {
                let key = rest.trim().to_string();
                match &out.course {
                    None if !key.is_empty() => out.course = Some(Extracted { value: key, span }),
                    None => out.findings.push(Finding::warn(
                        "course",
                        format!("line {n}: empty COURSE value"),
                    )),
                    Some(first) => out.findings.push(Finding::warn(
                        "course",
                        format!(
                            "line {n}: second COURSE ignored (first on line {})",
                            first.span.start
                        ),
                    )),
                }
            } else if let Some(caps) = clo_pattern().captures(line) {
                let clo_id = caps[1].to_string();
                if let Some(first) = clo_lines.get(&clo_id) {
                    out.findings.push(Finding::warn(
                        format!("clos[{clo_id}]"),
                        format!("line {n}: duplicate CLO id {clo_id} ignored (first on line {first})"),
                    ));
                    continue;
                }
                let bloom_level = match caps.get(2).map(|m| m.as_str().trim()) {
                    None | Some("") => None,
                    Some(tag) => {
                        let parsed = BloomLevel::parse(tag);
                        if parsed.is_none() {
                            out.findings.push(Finding::warn(
                                format!("clos[{clo_id}].bloom_level"),
                                format!("line {n}: unknown bloom level `{tag}`"),
                            ));
                        }
                        parsed
                    }
                };
                clo_lines.insert(clo_id.clone(), n);
                out.clos.push(Extracted {
                    value: Clo {
                        clo_id,
                        statement: caps[3].trim().to_string(),
                        bloom_level,
                    },
                    span,
                });
            } else if let Some(rest) = line.strip_prefix("TOPIC:") {
                let topic = rest.trim();
                if !topic.is_empty() {
                    out.topics.push(Extracted {
                        value: topic.to_string(),
                        span,
                    });
                }
            } else if let Some(rest) = line.strip_prefix("ASSESS:") {
                let parsed = rest
                    .rsplit_once(',')
                    .and_then(|(name, w)| Some((name.trim(), parse_weight(w)?)))
                    .filter(|(name, _)| !name.is_empty());
                match parsed {
                    Some((name, weight)) => out.assessment_methods.push(Extracted {
                        value: AssessmentMethod {
                            name: name.to_string(),
                            weight,
                        },
                        span,
                    }),
                    None => out.findings.push(Finding::warn(
                        "assessment_methods",
                        format!("line {n}: expected `ASSESS: <name>, <weight>`"),
                    )),
                }
            } else if let Some(rest) = line.strip_prefix("BOOK:") {
                let book = rest.trim();
                if !book.is_empty() {
                    out.textbooks.push(Extracted {
                        value: book.to_string(),
                        span,
                    });
                }
            } else {
                out.findings
                    .push(Finding::warn("document", format!("line {n}: unrecognized line")));
            }
        }

        let present = |found: bool| if found { 1.0 } else { 0.0 };
        out.confidence = BTreeMap::from([
            ("course".to_string(), present(out.course.is_some())),
            ("clos".to_string(), present(!out.clos.is_empty())),
            ("topics".to_string(), present(!out.topics.is_empty())),
            (
                "assessment_methods".to_string(),
                present(!out.assessment_methods.is_empty()),
            ),
            ("textbooks".to_string(), present(!out.textbooks.is_empty())),
        ]);
        Ok(out)
    }
}
