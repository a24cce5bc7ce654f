//! Autonomy levels in practice: a level 2 workflow waits for a coordinator,
//! a level 3 workflow publishes on its own and leaves an override row.
//!
//! `cargo run -p campusqa --example workflow_approval`

use campusqa::{pilot, ServiceConfig};
use chrono::NaiveDate;

fn main() -> campusqa::Result<()> {
    let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pilot");
    let tmp = tempfile::tempdir()?;
    let mut config = ServiceConfig::load(fixture.join("campusqa.toml"))?;
    config.store = tmp.path().join("store");
    let app = pilot::load_pilot_app(config, &fixture)?;
    let date = NaiveDate::from_ymd_opt(2025, 12, 13);

    let health = app.wf_run(Some("e10"), "daily_health", date, None)?;
    println!("daily_health: {}", health["status"]);
    let id = health["report_ids"][0].as_str().unwrap();
    println!("  {id} is {:?}", app.archive.get(id).unwrap().status);

    let pending = app.wf_pending()?;
    let pending_id = pending[0]["pending_id"].as_str().unwrap();
    if let Err(e) = app.wf_approve(Some("e01"), pending_id) {
        println!("  instructor approval refused: {e}");
    }
    let approved = app.wf_approve(Some("e10"), pending_id)?;
    println!("  approved by e10: {}", approved["published"]);
    println!("  {id} is {:?}", app.archive.get(id).unwrap().status);

    let cmp = app.wf_run(Some("e10"), "comparative", date, None)?;
    println!("\ncomparative: {} {}", cmp["status"], cmp["report_ids"]);
    for a in app.store.snapshot().audit_events().filter(|a| a.action == "wf.override") {
        println!("  override by {} on {}", a.actor, a.subject);
    }
    Ok(())
}
