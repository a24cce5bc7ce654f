//! Structured insight reports: document model, canonical serialization,
//! markdown rendering and a file-backed archive.

mod archive;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use archive::{ArchiveFilter, ReportArchive};

use crate::canonical;
use crate::clock::{format_timestamp, Timestamp};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportType {
    DailyHealth,
    StudentInsight,
    Comparative,
    OnDemand,
}

impl ReportType {
    pub fn as_str(self) -> &'static str {
        match self {
            ReportType::DailyHealth => "daily_health",
            ReportType::StudentInsight => "student_insight",
            ReportType::Comparative => "comparative",
            ReportType::OnDemand => "on_demand",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ReportType::DailyHealth,
            ReportType::StudentInsight,
            ReportType::Comparative,
            ReportType::OnDemand,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Draft,
    PendingApproval,
    Published,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyValue {
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SectionBody {
    KeyValue { rows: Vec<KeyValue> },
    Table { columns: Vec<String>, rows: Vec<Vec<String>> },
    Actions { items: Vec<String> },
    Text { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: String,
    pub body: SectionBody,
}

impl Section {
    pub fn key_values<K: Into<String>, V: Into<String>>(
        heading: &str,
        rows: impl IntoIterator<Item = (K, V)>,
    ) -> Self {
        Self {
            heading: heading.into(),
            body: SectionBody::KeyValue {
                rows: rows
                    .into_iter()
                    .map(|(k, v)| KeyValue {
                        key: k.into(),
                        value: v.into(),
                    })
                    .collect(),
            },
        }
    }

    pub fn table(heading: &str, columns: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self {
            heading: heading.into(),
            body: SectionBody::Table {
                columns: columns.iter().map(|c| c.to_string()).collect(),
                rows,
            },
        }
    }

    pub fn actions(heading: &str, items: Vec<String>) -> Self {
        Self {
            heading: heading.into(),
            body: SectionBody::Actions { items },
        }
    }

    pub fn text(heading: &str, text: impl Into<String>) -> Self {
        Self {
            heading: heading.into(),
            body: SectionBody::Text { text: text.into() },
        }
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        match &self.body {
            SectionBody::KeyValue { rows } => {
                rows.iter().find(|r| r.key == key).map(|r| r.value.as_str())
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightReport {
    pub report_id: String,
    pub generated_at: Timestamp,
    pub report_type: ReportType,
    pub title: String,
    /// Paragraph describing the workflow that produced the report.
    pub about: String,
    pub sections: Vec<Section>,
    pub status: ReportStatus,
    /// Machine-readable payload behind the rendered sections.
    #[serde(default)]
    pub data: serde_json::Value,
}

impl InsightReport {
    pub fn section(&self, heading: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.heading == heading)
    }

    /// Look up a key-value row anywhere in the report.
    pub fn value(&self, key: &str) -> Option<&str> {
        self.sections.iter().find_map(|s| s.value(key))
    }
}

/// Canonical JSON bytes of a report.
pub fn serialize(report: &InsightReport) -> Result<Vec<u8>> {
    canonical::to_vec(report)
}

pub fn parse(bytes: &[u8]) -> Result<InsightReport> {
    canonical::from_slice(bytes)
}

fn escape_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

/// Markdown rendering: title, generated/type line, optional about
/// paragraph, then each section in order.
pub fn render_markdown(report: &InsightReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}", report.title);
    let _ = writeln!(
        out,
        "*Generated: {} | Type: {}*",
        format_timestamp(report.generated_at),
        report.report_type.as_str()
    );
    if !report.about.is_empty() {
        let _ = write!(out, "\n## About This Report\n{}\n", report.about);
    }
    for section in &report.sections {
        let _ = write!(out, "\n## {}\n", section.heading);
        match &section.body {
            SectionBody::KeyValue { rows } => {
                for row in rows {
                    let _ = writeln!(out, "- {}: {}", row.key, row.value);
                }
            }
            SectionBody::Table { columns, rows } => {
                if rows.is_empty() {
                    out.push_str("_None._\n");
                    continue;
                }
                let header: Vec<String> = columns.iter().map(|c| escape_cell(c)).collect();
                let _ = writeln!(out, "| {} |", header.join(" | "));
                let _ = writeln!(out, "|{}|", vec!["---"; columns.len()].join("|"));
                for row in rows {
                    let cells: Vec<String> = row.iter().map(|c| escape_cell(c)).collect();
                    let _ = writeln!(out, "| {} |", cells.join(" | "));
                }
            }
            SectionBody::Actions { items } => {
                if items.is_empty() {
                    out.push_str("_None._\n");
                }
                for (i, item) in items.iter().enumerate() {
                    let _ = writeln!(out, "{}. {}", i + 1, item);
                }
            }
            SectionBody::Text { text } => {
                let _ = writeln!(out, "{text}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
