//! Human-in-the-loop grading: the grader only suggests, an instructor
//! decides, and every final grade leaves a provenance row.
//!
//! `cargo run -p campusqa --example grading`

use campusqa::grading::{convert_grade, BlueprintRow, Decision, GradeMapping, QuestionKind};
use campusqa::ingestion::BloomLevel;
use campusqa::service::SubmissionArgs;
use campusqa::{pilot, ServiceConfig};

fn main() -> campusqa::Result<()> {
    let fixture = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pilot");
    let tmp = tempfile::tempdir()?;
    let mut config = ServiceConfig::load(fixture.join("campusqa.toml"))?;
    config.store = tmp.path().join("store");
    let app = pilot::load_pilot_app(config, &fixture)?;

    let blueprint = [
        BlueprintRow {
            kind: QuestionKind::Mcq,
            clo_links: vec!["c1".into()],
            bloom_level: BloomLevel::Remember,
            max_points: 5.0,
        },
        BlueprintRow {
            kind: QuestionKind::Essay,
            clo_links: vec!["c3".into()],
            bloom_level: BloomLevel::Analyze,
            max_points: 10.0,
        },
    ];
    app.create_exam(Some("e01"), "quiz-7", "off1", &blueprint)?;

    let essay = SubmissionArgs {
        exam_id: "quiz-7".into(),
        q_id: "q2".into(),
        student: "s02".into(),
    };
    app.submit(Some("e01"), &essay, "L1 wins because the working set fits and misses cost more below.")?;
    let suggestion = app.suggest(Some("e01"), &essay)?;
    println!("suggested: {} / {}", suggestion["points"], suggestion["feedback"]);

    // The instructor keeps the AI feedback but changes the points.
    let decision = app.decide(Some("e01"), &essay, &Decision::Adjust { points: 8.5, feedback: None })?;
    println!("final: {} ({})", decision["final_points"], decision["provenance"]);

    for row in app.grades_audit("quiz-7")?.as_array().unwrap() {
        println!("audit: {} {} {} by {}", row["q_id"], row["action"], row["final_points"], row["actor"]);
    }

    let mapping = GradeMapping::default();
    for p in [85.0, 72.8, 59.9] {
        let g = convert_grade(p, &mapping)?;
        println!("{p:>5} -> {} / {}", g.letter, g.numeric20_label());
    }
    Ok(())
}
