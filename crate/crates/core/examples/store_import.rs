//! Build a store from the pilot CSV files and show how bad rows are
//! reported instead of aborting the import.
//!
//! `cargo run -p campusqa --example store_import`

use std::path::Path;

use campusqa::store::{import_csv, ImportKind};
use campusqa::Store;

const ORDER: [(&str, &str); 15] = [
    ("institutions.csv", "institution"),
    ("buildings.csv", "building"),
    ("classrooms.csv", "classroom"),
    ("colleges.csv", "college"),
    ("departments.csv", "department"),
    ("programs.csv", "program"),
    ("terms.csv", "term"),
    ("employees.csv", "employee"),
    ("courses.csv", "course"),
    ("offerings.csv", "offering"),
    ("students.csv", "student"),
    ("enrollments.csv", "enrollment"),
    ("attendance.csv", "attendance"),
    ("plos.csv", "plo"),
    ("clo_plo_links.csv", "clo_plo_link"),
];

fn main() -> campusqa::Result<()> {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pilot");
    let tmp = tempfile::tempdir()?;
    let store = Store::open(tmp.path())?;
    for (file, kind) in ORDER {
        let kind = ImportKind::parse(kind).expect("known kind");
        let summary = import_csv(&store, kind, std::fs::File::open(fixture.join(file))?)?;
        println!("{file:<20} {:>5} accepted", summary.accepted);
    }

    // One good row, one pointing at a program that does not exist.
    let csv = "student_id,name,program_id\ns50,Lina Haddad,p1\ns51,Ghost Student,p9\n";
    let summary = import_csv(&store, ImportKind::parse("student").unwrap(), csv.as_bytes())?;
    println!("\nextra students: {} accepted", summary.accepted);
    for r in &summary.rejected {
        println!("  line {}: {}", r.line, r.reason);
    }

    // The store is durable: reopening replays the log.
    let seq = store.snapshot().seq();
    drop(store);
    println!("\nreopened at seq {} (was {seq})", Store::open(tmp.path())?.snapshot().seq());
    Ok(())
}
