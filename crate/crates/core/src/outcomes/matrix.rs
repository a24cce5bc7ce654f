use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    check_program_term, course_clo_achievement, pct_display, plo_achievement, program_courses_with_specs,
    program_links, program_plos, CloRef, Contribution, OutcomeConfig,
};
use crate::error::Result;
use crate::store::Snapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub contribution: Contribution,
    /// The CLO's own achievement percentage.
    pub achievement_pct: Option<f64>,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PloRollup {
    pub plo_id: String,
    pub abet_criterion: Option<String>,
    pub value: Option<f64>,
    pub below_threshold: bool,
    pub insufficient_evidence: bool,
    pub display: String,
}

/// CLO rows by PLO columns. A cell exists exactly where a link exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub program: String,
    pub term: String,
    pub rows: Vec<CloRef>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<Option<MatrixCell>>>,
    pub rollup: Vec<PloRollup>,
}

impl MatrixDocument {
    pub fn populated_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }

    /// CSV with one row per CLO, one column per PLO and a trailing rollup
    /// row. Cells read `<contribution>:<pct>`; empty where no link exists.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["clo".to_string()];
        header.extend(self.cols.iter().cloned());
        w.write_record(&header)?;
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            let mut record = vec![row.to_string()];
            record.extend(cells.iter().map(|c| match c {
                Some(c) => format!("{}:{}", c.contribution.as_str(), c.display),
                None => String::new(),
            }));
            w.write_record(&record)?;
        }
        let mut rollup = vec!["PLO rollup".to_string()];
        rollup.extend(self.rollup.iter().map(|r| r.display.clone()));
        w.write_record(&rollup)?;
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
    }
}

pub fn build_matrix(
    snap: &Snapshot,
    program: &str,
    term: &str,
    cfg: &OutcomeConfig,
) -> Result<MatrixDocument> {
    check_program_term(snap, program, term)?;
    let links = program_links(snap, program);
    let cols: Vec<String> = program_plos(snap, program)
        .into_iter()
        .map(|p| p.plo_id.clone())
        .collect();

    let mut rows: BTreeSet<CloRef> = program_courses_with_specs(snap, program)
        .flat_map(|s| s.clos.iter().map(|c| CloRef::new(&s.course, &c.clo_id)))
        .collect();
    rows.extend(links.iter().map(|l| l.clo()));
    let rows: Vec<CloRef> = rows.into_iter().collect();

    let by_pair: BTreeMap<(CloRef, &str), Contribution> = links
        .iter()
        .map(|l| ((l.clo(), l.plo_id.as_str()), l.contribution))
        .collect();

    let mut pct_cache: BTreeMap<&CloRef, Option<f64>> = BTreeMap::new();
    let mut cells = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut line = Vec::with_capacity(cols.len());
        for col in &cols {
            let cell = by_pair.get(&(row.clone(), col.as_str())).map(|&contribution| {
                let pct = *pct_cache
                    .entry(row)
                    .or_insert_with(|| course_clo_achievement(snap, row, term, cfg).achievement_pct);
                MatrixCell {
                    contribution,
                    achievement_pct: pct,
                    display: pct_display(pct),
                }
            });
            line.push(cell);
        }
        cells.push(line);
    }

    let rollup = plo_achievement(snap, program, term, cfg)?
        .into_iter()
        .map(|s| PloRollup {
            plo_id: s.plo_id,
            abet_criterion: s.abet_criterion,
            value: s.value,
            below_threshold: s.below_threshold,
            insufficient_evidence: s.insufficient_evidence,
            display: s.display,
        })
        .collect();

    Ok(MatrixDocument {
        program: program.to_string(),
        term: term.to_string(),
        rows,
        cols,
        cells,
        rollup,
    })
}
