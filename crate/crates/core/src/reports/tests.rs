use proptest::prelude::*;

use super::*;
use crate::error::Error;

fn report(id: &str, t: ReportType, at: Timestamp, status: ReportStatus) -> InsightReport {
    InsightReport {
        report_id: id.into(),
        generated_at: at,
        report_type: t,
        title: format!("Report {id}"),
        about: "Test report.".into(),
        sections: vec![
            Section::key_values("Summary", [("Rate", "72.8%"), ("Level", "WARNING")]),
            Section::table("Rows", &["a", "b|c"], vec![vec!["1".into(), "x|y".into()]]),
            Section::actions("Actions", vec!["Do one.".into(), "Do two.".into()]),
            Section::text("Notes", "Plain text."),
        ],
        status,
        data: serde_json::json!({"k": 1}),
    }
}

fn published(id: &str, t: ReportType, at: Timestamp) -> InsightReport {
    report(id, t, at, ReportStatus::Published)
}

#[test]
fn put_list_and_filter() {
    let a = ReportArchive::in_memory();
    a.put(&published("h1", ReportType::DailyHealth, 100)).unwrap();
    a.put(&published("s1", ReportType::StudentInsight, 200)).unwrap();
    a.put(&published("c1", ReportType::Comparative, 300)).unwrap();
    let all: Vec<String> = a.list(&ArchiveFilter::default()).into_iter().map(|r| r.report_id).collect();
    assert_eq!(all, ["c1", "s1", "h1"]);
    let only = a.list(&ArchiveFilter { report_type: Some(ReportType::StudentInsight), ..Default::default() });
    assert_eq!(only.len(), 1);
    assert_eq!(only[0].report_id, "s1");
    let window = a.list(&ArchiveFilter { from: Some(150), to: Some(300), ..Default::default() });
    assert_eq!(window.len(), 2);
    assert!(a.get("h1").is_some() && a.get("zz").is_none());
}

#[test]
fn empty_archive_lists_nothing() {
    assert!(ReportArchive::in_memory().list(&ArchiveFilter::default()).is_empty());
}

#[test]
fn published_reports_are_immutable() {
    let a = ReportArchive::in_memory();
    let r = published("r1", ReportType::DailyHealth, 1);
    a.put(&r).unwrap();
    assert_eq!(a.put(&r).unwrap(), "r1");
    let mut changed = r.clone();
    changed.title = "Other".into();
    assert!(matches!(a.put(&changed), Err(Error::Conflict(_))));
    assert_eq!(a.get("r1").unwrap(), r);
}

#[test]
fn pending_reports_can_be_replaced_then_published() {
    let a = ReportArchive::in_memory();
    let mut r = report("p1", ReportType::StudentInsight, 1, ReportStatus::PendingApproval);
    a.put(&r).unwrap();
    r.title = "Revised".into();
    a.put(&r).unwrap();
    let p = a.publish("p1").unwrap();
    assert_eq!((p.status, p.title.as_str()), (ReportStatus::Published, "Revised"));
    assert_eq!(a.publish("p1").unwrap(), p);
    assert!(matches!(a.publish("nope"), Err(Error::NotFound(_))));
}

#[test]
fn drafts_and_bad_ids_are_rejected() {
    let a = ReportArchive::in_memory();
    assert!(matches!(
        a.put(&report("d", ReportType::OnDemand, 1, ReportStatus::Draft)),
        Err(Error::Validation { .. })
    ));
    assert!(a.put(&published("../x", ReportType::OnDemand, 1)).is_err());
}

#[test]
fn disk_archive_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let r = published("r1", ReportType::Comparative, 5);
    ReportArchive::open(dir.path()).unwrap().put(&r).unwrap();
    let md = std::fs::read_to_string(dir.path().join("r1.md")).unwrap();
    assert_eq!(md, render_markdown(&r));
    let json = std::fs::read(dir.path().join("r1.json")).unwrap();
    assert_eq!(json, serialize(&r).unwrap());
    let reopened = ReportArchive::open(dir.path()).unwrap();
    assert_eq!(reopened.get("r1").unwrap(), r);
}

#[test]
fn markdown_layout() {
    let md = render_markdown(&published("r1", ReportType::StudentInsight, 1765603382));
    let expected = "\
# Report r1
*Generated: 2025-12-13 05:23:02 | Type: student_insight*

## About This Report
Test report.

## Summary
- Rate: 72.8%
- Level: WARNING

## Rows
| a | b\\|c |
|---|---|
| 1 | x\\|y |

## Actions
1. Do one.
2. Do two.

## Notes
Plain text.
";
    assert_eq!(md, expected);
}

#[test]
fn empty_bodies_render_none() {
    let mut r = published("r", ReportType::OnDemand, 0);
    r.about.clear();
    r.sections = vec![Section::actions("Recommended Actions", vec![]), Section::table("T", &["a"], vec![])];
    let md = render_markdown(&r);
    assert!(!md.contains("About This Report"));
    assert_eq!(md.matches("_None._").count(), 2);
}

#[test]
fn report_types_parse() {
    for t in [
        ReportType::DailyHealth,
        ReportType::StudentInsight,
        ReportType::Comparative,
        ReportType::OnDemand,
    ] {
        assert_eq!(ReportType::parse(t.as_str()), Some(t));
    }
    assert_eq!(ReportType::parse("weekly"), None);
}

proptest! {
    #[test]
    fn serialization_round_trips(title in "[ -~]{0,40}", at in 0i64..4_000_000_000, rows in prop::collection::vec(("[a-z]{1,8}", "[ -~]{0,12}"), 0..6)) {
        let mut r = published("r", ReportType::OnDemand, at);
        r.title = title;
        r.sections.push(Section::key_values("Extra", rows));
        let bytes = serialize(&r).unwrap();
        prop_assert_eq!(parse(&bytes).unwrap(), r.clone());
        prop_assert_eq!(render_markdown(&r), render_markdown(&parse(&bytes).unwrap()));
    }
}
