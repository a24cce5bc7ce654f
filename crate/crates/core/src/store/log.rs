use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{IntegrityViolation, Record, Snapshot, Stored};
use crate::canonical;
use crate::error::Result;

const LOG_FILE: &str = "log.jsonl";
const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub(super) enum LogLine {
    Put {
        seq: u64,
        revision: u64,
        record: Record,
    },
    Commit {
        seq: u64,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotFile {
    seq: u64,
    entries: Vec<Stored>,
}

pub(super) struct LogWriter {
    dir: PathBuf,
    file: File,
}

impl LogWriter {
    pub(super) fn append(&mut self, lines: &[LogLine], seq: u64) -> Result<()> {
        let mut buf = Vec::new();
        for line in lines.iter().chain(std::iter::once(&LogLine::Commit { seq })) {
            buf.extend(canonical::to_vec(line)?);
            buf.push(b'\n');
        }
        self.file.write_all(&buf)?;
        self.file.sync_data()?;
        Ok(())
    }

    pub(super) fn compact(&mut self, snapshot: &Snapshot) -> Result<()> {
        let file = SnapshotFile {
            seq: snapshot.seq,
            entries: snapshot.records.values().cloned().collect(),
        };
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        std::fs::write(&tmp, canonical::to_vec(&file)?)?;
        std::fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        self.file = File::create(self.dir.join(LOG_FILE))?;
        self.file.sync_all()?;
        Ok(())
    }
}

/// Rebuild the in-memory snapshot from `snapshot.json` plus every committed
/// transaction in the log. A torn or uncommitted tail is ignored.
pub(super) fn load(dir: &Path) -> Result<(Snapshot, LogWriter)> {
    let mut snapshot = Snapshot::default();
    let snap_path = dir.join(SNAPSHOT_FILE);
    if snap_path.exists() {
        let file: SnapshotFile = canonical::from_slice(&std::fs::read(&snap_path)?)?;
        snapshot.seq = file.seq;
        for stored in file.entries {
            let key = stored.record.key();
            if snapshot.records.insert(key.clone(), stored).is_some() {
                snapshot
                    .load_violations
                    .push(IntegrityViolation::DuplicateKey { key });
            }
        }
    }

    let log_path = dir.join(LOG_FILE);
    let mut valid_len: u64 = 0;
    if log_path.exists() {
        let reader = BufReader::new(File::open(&log_path)?);
        let mut pending: Vec<(u64, u64, Record)> = Vec::new();
        let mut consumed: u64 = 0;
        for line in reader.split(b'\n') {
            let line = line?;
            consumed += line.len() as u64 + 1;
            let Ok(parsed) = serde_json::from_slice::<LogLine>(&line) else {
                break;
            };
            match parsed {
                LogLine::Put {
                    seq,
                    revision,
                    record,
                } => pending.push((seq, revision, record)),
                LogLine::Commit { seq } => {
                    for (put_seq, revision, record) in pending.drain(..) {
                        if put_seq <= snapshot.seq {
                            continue;
                        }
                        snapshot
                            .records
                            .insert(record.key(), Stored { revision, record });
                    }
                    snapshot.seq = snapshot.seq.max(seq);
                    valid_len = consumed;
                }
            }
        }
    }

    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)?;
    // Drop any torn tail so new commits start on a clean line.
    if file.metadata()?.len() != valid_len {
        file.set_len(valid_len)?;
    }
    Ok((
        snapshot,
        LogWriter {
            dir: dir.to_path_buf(),
            file,
        },
    ))
}
