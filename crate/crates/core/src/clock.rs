use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Utc::now().timestamp()
    }
}

/// Deterministic clock that advances by `step` seconds on every read.
#[derive(Debug)]
pub struct ManualClock {
    current: AtomicI64,
    step: i64,
}

impl ManualClock {
    pub fn new(start: Timestamp, step: i64) -> Self {
        Self {
            current: AtomicI64::new(start),
            step,
        }
    }

    pub fn fixed(at: Timestamp) -> Self {
        Self::new(at, 0)
    }

    pub fn set(&self, at: Timestamp) {
        self.current.store(at, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        self.current.fetch_add(self.step, Ordering::SeqCst)
    }
}

/// `YYYY-MM-DD HH:MM:SS` in UTC.
pub fn format_timestamp(ts: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .map(|dt| dt.format("%Y-%m-%d %H:%M:%S").to_string())
        .unwrap_or_else(|| ts.to_string())
}

pub fn timestamp_of(at: NaiveDateTime) -> Timestamp {
    at.and_utc().timestamp()
}

pub fn date_of(ts: Timestamp) -> Option<NaiveDate> {
    DateTime::<Utc>::from_timestamp(ts, 0).map(|dt| dt.date_naive())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_like_the_report_header() {
        let at = NaiveDate::from_ymd_opt(2025, 12, 13)
            .unwrap()
            .and_hms_opt(5, 23, 2)
            .unwrap();
        assert_eq!(format_timestamp(timestamp_of(at)), "2025-12-13 05:23:02");
    }

    #[test]
    fn manual_clock_steps() {
        let c = ManualClock::new(100, 5);
        assert_eq!(c.now(), 100);
        assert_eq!(c.now(), 105);
    }
}
