//! Extract a course specification from a syllabus, review the draft, and
//! confirm an edited version against the one already on file.
//!
//! `cargo run -p campusqa --example ingestion`

use campusqa::ingestion::{self, GrammarExtractor};
use campusqa::{canonical, pilot, ServiceConfig};

fn main() -> campusqa::Result<()> {
    let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pilot");
    let tmp = tempfile::tempdir()?;
    let app = pilot::load_pilot_app(ServiceConfig::load(fixture.join("campusqa.toml")).map(|mut c| {
        c.store = tmp.path().join("store");
        c
    })?, &fixture)?;

    let text = std::fs::read_to_string(fixture.join("syllabi/cs101.txt"))?;
    let draft = ingestion::extract_specification(&text, &GrammarExtractor)?;
    println!("{}", canonical::to_string_pretty(&draft)?);
    let findings = ingestion::validate_draft(&draft);
    println!("\n{} findings", findings.len());

    // The instructor rewrites one outcome before confirming.
    let edited = text.replace(
        "Trace the execution of a short assembly program",
        "Trace and debug a short assembly program",
    );
    let stored = app.ingest_extract(Some("e01"), &edited)?;
    let id = stored["draft_id"].as_str().unwrap();
    let confirmed = app.ingest_confirm(Some("e01"), id, None)?;
    println!("\nconfirmed {id}, changes against the previous specification:");
    println!("{}", canonical::to_string_pretty(&confirmed["changes"])?);
    Ok(())
}
