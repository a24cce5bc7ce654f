//! Generate the pilot fixture, load it into a fresh store and summarise
//! what went in.
//!
//! `cargo run -p campusqa --example pilot`

use campusqa::{pilot, App, ServiceConfig};

fn main() -> campusqa::Result<()> {
    let tmp = tempfile::tempdir()?;
    let dir = tmp.path().join("pilot");
    pilot::write_fixture(&dir)?;
    for name in pilot::fixture_files().keys() {
        println!("wrote {name}");
    }

    let mut config = ServiceConfig::load(dir.join("campusqa.toml"))?;
    config.store = tmp.path().join("store");
    let app = App::open(config)?;
    let loaded = pilot::load_fixture(&app, &dir, Some("e99"))?;
    println!("\n{}", campusqa::canonical::to_string_pretty(&loaded)?);
    for kind in ["student", "offering", "course_spec", "exam", "submission"] {
        println!("{kind:<12} {}", app.entities(kind)?.as_array().map_or(0, Vec::len));
    }
    println!("\n{}", app.health());
    Ok(())
}
