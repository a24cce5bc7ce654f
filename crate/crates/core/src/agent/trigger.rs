use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use super::definition::{Trigger, WorkflowDefinition};
use crate::clock::{date_of, timestamp_of, Timestamp};
use crate::error::Error;

/// `daily HH:MM[:SS]` or `weekly <mon..sun> HH:MM[:SS]`, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Schedule {
    Daily { at: NaiveTime },
    Weekly { weekday: Weekday, at: NaiveTime },
}

fn parse_time(s: &str) -> Result<NaiveTime, Error> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|_| Error::Config(format!("bad schedule time `{s}`")))
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        match parts.as_slice() {
            ["daily", t] => Ok(Schedule::Daily { at: parse_time(t)? }),
            ["weekly", d, t] => Ok(Schedule::Weekly {
                weekday: d
                    .parse::<Weekday>()
                    .map_err(|_| Error::Config(format!("bad schedule weekday `{d}`")))?,
                at: parse_time(t)?,
            }),
            _ => Err(Error::Config(format!(
                "bad schedule `{s}`: expected `daily HH:MM[:SS]` or `weekly <day> HH:MM[:SS]`"
            ))),
        }
    }
}

impl TryFrom<String> for Schedule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<Schedule> for String {
    fn from(s: Schedule) -> String {
        s.to_string()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Daily { at } => write!(f, "daily {}", at.format("%H:%M:%S")),
            Schedule::Weekly { weekday, at } => write!(
                f,
                "weekly {} {}",
                weekday.to_string().to_lowercase(),
                at.format("%H:%M:%S")
            ),
        }
    }
}

impl Schedule {
    pub fn at(&self) -> NaiveTime {
        match self {
            Schedule::Daily { at } | Schedule::Weekly { at, .. } => *at,
        }
    }

    /// Period label (`2025-12-13` or `2025-W50`) and the instant within it
    /// at which the schedule fires.
    pub fn period_of(&self, date: NaiveDate) -> (String, Timestamp) {
        match self {
            Schedule::Daily { at } => (
                date.format("%Y-%m-%d").to_string(),
                timestamp_of(date.and_time(*at)),
            ),
            Schedule::Weekly { weekday, at } => {
                let week = date.iso_week();
                let day = NaiveDate::from_isoywd_opt(week.year(), week.week(), *weekday)
                    .unwrap_or(date);
                (
                    format!("{}-W{:02}", week.year(), week.week()),
                    timestamp_of(day.and_time(*at)),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ConsecutiveAbsence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub student: String,
    pub offering: String,
    pub streak: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriggerInput {
    Clock(Timestamp),
    Event(Event),
}

/// Last period in which a scheduled workflow fired.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerState {
    pub workflow_id: String,
    pub last_period: Option<String>,
    pub last_fired_at: Option<Timestamp>,
}

impl TriggerState {
    pub fn new(workflow_id: &str) -> Self {
        Self {
            workflow_id: workflow_id.to_string(),
            last_period: None,
            last_fired_at: None,
        }
    }
}

/// Decide whether `def` fires for `input`. Scheduled triggers fire once
/// per period, the first time the clock is at or past the boundary, and
/// record that in `state`. Event triggers are stateless.
pub fn evaluate_trigger(def: &WorkflowDefinition, input: &TriggerInput, state: &mut TriggerState) -> bool {
    match (&def.trigger, input) {
        (Trigger::Scheduled { spec }, TriggerInput::Clock(now)) => {
            let Some(date) = date_of(*now) else { return false };
            let (period, boundary) = spec.period_of(date);
            if *now < boundary || state.last_period.as_deref() == Some(period.as_str()) {
                return false;
            }
            state.last_period = Some(period);
            state.last_fired_at = Some(*now);
            true
        }
        (
            Trigger::Event {
                event,
                threshold,
                refire_at,
            },
            TriggerInput::Event(ev),
        ) => ev.kind == *event && (ev.streak == *threshold || refire_at.contains(&ev.streak)),
        _ => false,
    }
}
