//! CLO attainment, PLO rollups, the CLO x PLO matrix and the compliance
//! check for one program term.
//!
//! `cargo run -p campusqa --example outcomes`

use campusqa::outcomes::{build_matrix, clo_achievement, plo_achievement};
use campusqa::{pilot, ServiceConfig};

fn main() -> campusqa::Result<()> {
    let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pilot");
    let tmp = tempfile::tempdir()?;
    let mut config = ServiceConfig::load(fixture.join("campusqa.toml"))?;
    config.store = tmp.path().join("store");
    let app = pilot::load_pilot_app(config, &fixture)?;
    let snap = app.store.snapshot();
    let cfg = app.config.outcomes;

    for clo in ["c1", "c2", "c3"] {
        let s = clo_achievement(&snap, "off1", clo, &cfg)?;
        println!(
            "cs101/{clo}: {} of {} students at 70%+, {}{}",
            s.n_meeting,
            s.n_students,
            s.display,
            if s.below_target { " (below target)" } else { "" }
        );
    }
    println!();
    for p in plo_achievement(&snap, "p1", "Fall-2025", &cfg)? {
        println!("{} {}: {}", p.plo_id, p.statement, p.display);
    }
    println!("\n{}", build_matrix(&snap, "p1", "Fall-2025", &cfg)?.to_csv()?);
    println!("{}", campusqa::canonical::to_string_pretty(&app.outcomes_comply("gs110")?)?);
    Ok(())
}
