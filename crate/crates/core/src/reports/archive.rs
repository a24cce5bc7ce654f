use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::{parse, render_markdown, serialize, InsightReport, ReportStatus, ReportType};
use crate::clock::Timestamp;
use crate::error::{Error, Result};
use crate::store::check_key;

/// Conjunctive filter; `None` fields match everything. Dates are inclusive
/// epoch-second bounds on `generated_at`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveFilter {
    pub report_type: Option<ReportType>,
    pub from: Option<Timestamp>,
    pub to: Option<Timestamp>,
}

impl ArchiveFilter {
    fn matches(&self, r: &InsightReport) -> bool {
        self.report_type.is_none_or(|t| r.report_type == t)
            && self.from.is_none_or(|f| r.generated_at >= f)
            && self.to.is_none_or(|t| r.generated_at <= t)
    }
}

/// Report archive: `<report_id>.json` (canonical) and `<report_id>.md` per
/// report. Published reports are immutable; a pending report may be
/// replaced until it is published.
#[derive(Debug, Default)]
pub struct ReportArchive {
    dir: Option<PathBuf>,
    index: RwLock<BTreeMap<String, InsightReport>>,
    writer: Mutex<()>,
}

impl ReportArchive {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir)?;
        let mut index = BTreeMap::new();
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let report = parse(&std::fs::read(&path)?)?;
                index.insert(report.report_id.clone(), report);
            }
        }
        Ok(Self {
            dir: Some(dir),
            index: RwLock::new(index),
            writer: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn put(&self, report: &InsightReport) -> Result<String> {
        check_key("report_id", &report.report_id)?;
        if report.status == ReportStatus::Draft {
            return Err(Error::validation(
                "status",
                "draft reports cannot be archived",
            ));
        }
        let _guard = self.writer.lock();
        if let Some(existing) = self.index.read().get(&report.report_id) {
            if existing.status == ReportStatus::Published {
                if existing == report {
                    return Ok(report.report_id.clone());
                }
                return Err(Error::Conflict(format!(
                    "report {} is published and immutable",
                    report.report_id
                )));
            }
        }
        if let Some(dir) = &self.dir {
            std::fs::write(dir.join(format!("{}.json", report.report_id)), serialize(report)?)?;
            std::fs::write(
                dir.join(format!("{}.md", report.report_id)),
                render_markdown(report),
            )?;
        }
        self.index
            .write()
            .insert(report.report_id.clone(), report.clone());
        Ok(report.report_id.clone())
    }

    /// Move a pending report to `published`. Publishing an already
    /// published report returns it unchanged.
    pub fn publish(&self, report_id: &str) -> Result<InsightReport> {
        let mut report = self
            .get(report_id)
            .ok_or_else(|| Error::NotFound(format!("report {report_id}")))?;
        if report.status == ReportStatus::Published {
            return Ok(report);
        }
        report.status = ReportStatus::Published;
        self.put(&report)?;
        Ok(report)
    }

    pub fn get(&self, report_id: &str) -> Option<InsightReport> {
        self.index.read().get(report_id).cloned()
    }

    /// Matching reports, newest first (ties by id).
    pub fn list(&self, filter: &ArchiveFilter) -> Vec<InsightReport> {
        let mut out: Vec<InsightReport> = self
            .index
            .read()
            .values()
            .filter(|r| filter.matches(r))
            .cloned()
            .collect();
        out.sort_by(|a, b| {
            b.generated_at
                .cmp(&a.generated_at)
                .then_with(|| a.report_id.cmp(&b.report_id))
        });
        out
    }
}
