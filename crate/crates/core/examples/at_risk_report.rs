//! Run the weekly at-risk scan on the pilot and print one student report.
//!
//! `cargo run -p campusqa --example at_risk_report [student]`

use campusqa::{pilot, reports, ServiceConfig};
use chrono::NaiveDate;

fn main() -> campusqa::Result<()> {
    let student = std::env::args().nth(1).unwrap_or_else(|| "s03".into());
    let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pilot");
    let tmp = tempfile::tempdir()?;
    let mut config = ServiceConfig::load(fixture.join("campusqa.toml"))?;
    config.store = tmp.path().join("store");
    let app = pilot::load_pilot_app(config, &fixture)?;

    let date = NaiveDate::from_ymd_opt(2025, 12, 13).unwrap();
    let out = app.wf_run(Some("e10"), "at_risk", Some(date), None)?;
    println!("{} -> {}\n", out["status"]["status"], out["report_ids"]);
    let id = format!("at_risk-20251213-{student}");
    match app.archive.get(&id) {
        Some(r) => print!("{}", reports::render_markdown(&r)),
        None => println!("{student} is not at risk on {date}"),
    }
    Ok(())
}
