//! Academic quality-assurance engine.
//!
//! One store holds institutional records, course specifications, exams,
//! grades and workflow state. On top of it sit syllabus ingestion,
//! human-in-the-loop grading, CLO/PLO outcome assessment, and autonomous
//! workflows that publish insight reports behind approval checkpoints.
//! [`service`] exposes all of it over HTTP and a command line.

pub mod agent;
pub mod autonomy;
pub mod canonical;
pub mod clock;
pub mod config;
pub mod error;
pub mod grading;
pub mod ingestion;
pub mod outcomes;
pub mod pilot;
pub mod reports;
pub mod rounding;
pub mod service;
pub mod store;
pub mod testkit;

pub use autonomy::AutonomyLevel;
pub use config::{Role, ServiceConfig};
pub use error::{Error, Result};
pub use reports::{InsightReport, ReportArchive};
pub use service::App;
pub use store::{Snapshot, Store};
