use proptest::prelude::*;
use serde_json::{json, Value};

use super::*;
use crate::store::{AttendanceStatus::*, Slot};
use crate::testkit::{self, at, date};

const STUDENTS: [&str; 4] = ["s1", "s2", "s3", "s4"];

/// One offering, 20 weekday sessions from 2025-09-01 to 2025-09-26.
///
/// s1 attends everything. s2 misses the last three (streak 3, rate 0.85).
/// s3 misses every morning (rate 0.50). s4 misses the first four (0.80).
fn store() -> Store {
    let store = Store::in_memory();
    store
        .write(|tx| {
            testkit::seed_catalogue(tx)?;
            testkit::add_course(tx, "crs1", "d1", "Networks")?;
            testkit::add_offering(tx, "off1", "crs1", testkit::daily_sessions(20))?;
            testkit::enroll(tx, "off1", &STUDENTS)?;
            for (s, absent) in [
                ("s1", Box::new(|_| false) as Box<dyn Fn(usize) -> bool>),
                ("s2", Box::new(|i| i >= 17)),
                ("s3", Box::new(|i| i % 2 == 0)),
                ("s4", Box::new(|i| i < 4)),
            ] {
                let marks: Vec<_> = (0..20).map(|i| if absent(i) { Absent } else { Present }).collect();
                testkit::mark_all(tx, s, "off1", &marks)?;
            }
            Ok(())
        })
        .unwrap();
    store
}

const AS_OF: NaiveDate = NaiveDate::from_ymd_opt(2025, 9, 27).unwrap();

fn def(level: u8, policy: CheckpointPolicy, task: Task) -> WorkflowDefinition {
    WorkflowDefinition {
        workflow_id: "wf".into(),
        trigger: Trigger::OnDemand,
        autonomy_level: AutonomyLevel::try_from(level).unwrap(),
        checkpoint_policy: policy,
        task,
    }
}

fn at_risk(level: u8, policy: CheckpointPolicy) -> WorkflowDefinition {
    def(level, policy, Task::AtRisk(AtRiskParams::default()))
}

fn req() -> RunRequest {
    RunRequest { date: Some(AS_OF), student: None }
}

#[test]
fn classify_examples() {
    assert_eq!(classify_risk(Some(0.728), 3), RiskLevel::Warning);
    assert_eq!(classify_risk(Some(0.90), 0), RiskLevel::Safe);
    assert_eq!(classify_risk(Some(0.85), 0), RiskLevel::Safe);
    assert_eq!(classify_risk(Some(0.80), 2), RiskLevel::Watch);
    assert_eq!(classify_risk(Some(0.75), 0), RiskLevel::Watch);
    assert_eq!(classify_risk(Some(0.60), 0), RiskLevel::Warning);
    assert_eq!(classify_risk(Some(0.59), 0), RiskLevel::Critical);
    assert_eq!(classify_risk(Some(0.95), 5), RiskLevel::Critical);
    assert_eq!(classify_risk(None, 0), RiskLevel::Watch);
}

#[test]
fn risk_table_validation() {
    assert!(RiskTable::default().validate().is_ok());
    let bad = RiskTable { warning_rate: 0.9, ..RiskTable::default() };
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    let bad = RiskTable { warning_streak: 6, ..RiskTable::default() };
    assert!(bad.validate().is_err());
}

#[test]
fn cohort_buckets() {
    let b: Vec<_> = (1..=10).map(|r| risk::cohort_bucket(r, 10)).collect();
    assert_eq!(
        b,
        [
            "Bottom 10%", "Bottom 20%", "Bottom 30%", "Bottom 50%", "Bottom 50%",
            "Top 50%", "Top 50%", "Top 50%", "Top 50%", "Top 50%"
        ]
    );
    assert_eq!(risk::cohort_bucket(1, 0), "n/a");
}

#[test]
fn detection_on_small_store() {
    let store = store();
    let got = detect_at_risk(&store.snapshot(), RiskScope::AllStudents, TriggerKind::WeeklyBatch, AS_OF, &RiskEnv::default())
        .unwrap();
    let summary: Vec<_> = got.iter().map(|a| (a.student.as_str(), a.risk_level, a.streak, a.total_absences)).collect();
    assert_eq!(
        summary,
        [
            ("s1", RiskLevel::Safe, 0, 0),
            ("s2", RiskLevel::Warning, 3, 3),
            ("s3", RiskLevel::Critical, 0, 10),
            ("s4", RiskLevel::Watch, 0, 4),
        ]
    );
    let s3 = &got[2];
    assert_eq!(s3.overall_rate, Some(0.5));
    assert_eq!((s3.cohort_rank, s3.cohort_bucket.as_str()), (Some(1), "Bottom 30%"));
    assert_eq!(s3.problem_courses.len(), 1);
    // Mornings fall on Mon/Wed/Fri in week one and Tue/Thu in week two.
    assert!(s3.peak_pattern.iter().all(|p| p.slot == Slot::Morning));
    assert_eq!(s3.recommended_actions.len(), 3);
    assert!(got[0].recommended_actions.is_empty());
}

#[test]
fn event_path_needs_one_student() {
    let store = store();
    let err = detect_at_risk(
        &store.snapshot(),
        RiskScope::AllStudents,
        TriggerKind::ConsecutiveAbsenceEvent,
        AS_OF,
        &RiskEnv::default(),
    );
    assert!(matches!(err, Err(Error::Validation { .. })));
    let err = detect_at_risk(&store.snapshot(), RiskScope::Student("s9"), TriggerKind::WeeklyBatch, AS_OF, &RiskEnv::default());
    assert!(matches!(err, Err(Error::NotFound(_))));
}

#[test]
fn batch_and_event_agree() {
    let store = store();
    let snap = store.snapshot();
    let env = RiskEnv::default();
    let batch = detect_at_risk(&snap, RiskScope::AllStudents, TriggerKind::WeeklyBatch, AS_OF, &env).unwrap();
    for a in &batch {
        let one = detect_at_risk(&snap, RiskScope::Student(&a.student), TriggerKind::ConsecutiveAbsenceEvent, AS_OF, &env)
            .unwrap();
        assert_eq!(&one[0], a);
    }
}

#[test]
fn streak_as_of_ignores_later_sessions() {
    let store = store();
    let snap = store.snapshot();
    assert_eq!(absence_streak_as_of(&snap, "s2", "off1", AS_OF), 3);
    assert_eq!(absence_streak_as_of(&snap, "s2", "off1", date(2025, 9, 24)), 1);
    assert_eq!(absence_streak_as_of(&snap, "s4", "off1", date(2025, 9, 4)), 4);
    assert_eq!(absence_event(&snap, "s2", "off1", AS_OF).streak, 3);
}

fn event_def(refire: Vec<u32>) -> WorkflowDefinition {
    WorkflowDefinition {
        trigger: Trigger::Event {
            event: EventKind::ConsecutiveAbsence,
            threshold: 3,
            refire_at: refire,
        },
        ..at_risk(3, CheckpointPolicy::PauseBeforePublish)
    }
}

fn fires(def: &WorkflowDefinition, streak: u32) -> bool {
    let ev = Event {
        kind: EventKind::ConsecutiveAbsence,
        student: "s1".into(),
        offering: "off1".into(),
        streak,
    };
    evaluate_trigger(def, &TriggerInput::Event(ev), &mut TriggerState::new("wf"))
}

#[test]
fn event_trigger_fires_at_threshold_and_again_at_five() {
    let d = event_def(vec![5]);
    let fired: Vec<u32> = (0..=8).filter(|s| fires(&d, *s)).collect();
    assert_eq!(fired, [3, 5]);
    let d = event_def(vec![]);
    assert_eq!((0..=8).filter(|s| fires(&d, *s)).collect::<Vec<_>>(), [3]);
}

#[test]
fn scheduled_trigger_fires_once_per_period() {
    let d = WorkflowDefinition {
        trigger: Trigger::Scheduled { spec: "weekly sat 05:23:02".parse().unwrap() },
        ..at_risk(4, CheckpointPolicy::None)
    };
    let mut state = TriggerState::new("wf");
    let mut fire = |t| evaluate_trigger(&d, &TriggerInput::Clock(t), &mut state);
    assert!(!fire(at(2025, 12, 13, 5, 23, 1)));
    assert!(fire(at(2025, 12, 13, 5, 23, 2)));
    assert!(!fire(at(2025, 12, 14, 9, 0, 0)));
    assert!(!fire(at(2025, 12, 19, 23, 0, 0)));
    assert!(fire(at(2025, 12, 20, 6, 0, 0)));
    assert_eq!(state.last_period.as_deref(), Some("2025-W51"));
}

#[test]
fn schedule_parsing() {
    let s: Schedule = "daily 20:00".parse().unwrap();
    assert_eq!(s.to_string(), "daily 20:00:00");
    assert!("weekly funday 10:00".parse::<Schedule>().is_err());
    assert!("hourly".parse::<Schedule>().is_err());
}

#[test]
fn gate_matrix() {
    use CheckpointPolicy::*;
    let action = |class| PendingAction {
        workflow_id: "wf".into(),
        tool: "publish_report".into(),
        class,
        subject: "r1".into(),
        payload: Value::Null,
    };
    for level in 0..=4u8 {
        for policy in [None, PauseBeforePublish, PauseBeforeEachAction] {
            let d = at_risk(level, policy);
            let read = gate_checkpoint(&action(ActionClass::Read), &d, &[], 0);
            assert_eq!(read, GateDecision::Proceed { override_log: Option::None });
            for class in [ActionClass::Publish, ActionClass::Mutate] {
                let expect_block = match level {
                    0..=2 => true,
                    3 => policy != None,
                    _ => policy == PauseBeforeEachAction,
                };
                let got = gate_checkpoint(&action(class), &d, &[], 7);
                assert_eq!(got.is_blocked(), expect_block, "level {level} {policy:?} {class:?}");
                if let GateDecision::Proceed { override_log } = &got {
                    let log = override_log.as_ref().expect("autonomous mutation is logged");
                    assert_eq!((log.autonomy_level.get(), log.at), (level, 7));
                }
                let approved = Approval {
                    pending_id: action(class).pending_id(),
                    approver: "e2".into(),
                    at: 1,
                };
                assert_eq!(
                    gate_checkpoint(&action(class), &d, &[approved], 7),
                    GateDecision::Proceed { override_log: Option::None }
                );
            }
        }
    }
}

#[test]
fn pending_ids_are_stable() {
    let a = PendingAction {
        workflow_id: "wf".into(),
        tool: "t".into(),
        class: ActionClass::Publish,
        subject: "x".into(),
        payload: json!({"anything": 1}),
    };
    let mut b = a.clone();
    b.payload = Value::Null;
    assert_eq!(a.pending_id(), b.pending_id());
    b.subject = "y".into();
    assert_ne!(a.pending_id(), b.pending_id());
}

const DEFS: &str = r#"
[[workflow]]
workflow_id = "w"
autonomy_level = LEVEL
checkpoint_policy = "POLICY"
trigger = { type = "on_demand" }
task = { kind = "daily_health" }
"#;

fn load(level: u8, policy: &str) -> Result<Definitions> {
    Definitions::from_toml(&DEFS.replace("LEVEL", &level.to_string()).replace("POLICY", policy))
}

#[test]
fn definition_validation() {
    for level in 0..=2 {
        let err = load(level, "none").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("pause_before_publish")), "{err}");
        assert!(load(level, "pause_before_publish").is_ok());
    }
    assert!(load(3, "none").is_ok());
    assert!(load(4, "none").is_ok());
    let err = load(5, "none").unwrap_err();
    assert!(err.to_string().contains("level 5 not implementable"), "{err}");
    assert!(load(9, "none").is_err());
    assert!(load(3, "sometimes").is_err());
    let twice = format!("{}{}", DEFS, DEFS).replace("LEVEL", "3").replace("POLICY", "none");
    assert!(Definitions::from_toml(&twice).unwrap_err().to_string().contains("twice"));
    let zero = r#"
[[workflow]]
workflow_id = "e"
autonomy_level = 3
checkpoint_policy = "none"
trigger = { type = "event", event = "consecutive_absence", threshold = 0 }
task = { kind = "at_risk" }
"#;
    assert!(Definitions::from_toml(zero).is_err());
    let defs = load(3, "none").unwrap();
    assert!(defs.get("w").is_ok());
    assert!(matches!(defs.get("x"), Err(Error::NotFound(_))));
}

#[test]
fn pilot_definitions_load() {
    let defs = Definitions::from_toml(crate::pilot::WORKFLOWS_TOML).unwrap();
    let ids: Vec<_> = defs.workflows.iter().map(|d| d.workflow_id.as_str()).collect();
    assert_eq!(ids, ["daily_health", "at_risk", "at_risk_event", "comparative"]);
    assert!(matches!(&defs.workflows[2].trigger, Trigger::Event { refire_at, .. } if refire_at == &[5]));
}

/// Replays a fixed list of steps regardless of history.
struct Fixed(Vec<PlannerStep>);

impl Planner for Fixed {
    fn next(&mut self, _goal: &str, history: &[Step]) -> Result<PlannerStep> {
        Ok(self.0.get(history.len()).cloned().unwrap_or(PlannerStep::Finish {
            thought: "done".into(),
            answer: json!("ok"),
        }))
    }
}

struct Looping;

impl Planner for Looping {
    fn next(&mut self, _goal: &str, _history: &[Step]) -> Result<PlannerStep> {
        Ok(PlannerStep::Call {
            thought: "again".into(),
            tool: "query_enrollment".into(),
            args: json!({"term": "t1"}),
        })
    }
}

fn call(tool: &str, args: Value) -> PlannerStep {
    PlannerStep::Call { thought: format!("use {tool}"), tool: tool.into(), args }
}

fn react(
    planner: &mut dyn Planner,
    d: &WorkflowDefinition,
    max_steps: usize,
) -> (Transcript, Option<ReportDraft>, Vec<String>) {
    let store = store();
    let snap = store.snapshot();
    let env = AgentEnv::default();
    let mut ctx = ToolContext::new(&snap, &env, "wf", AS_OF, 0);
    let gate = GateContext { definition: d, approvals: &[], at: 0 };
    let (t, draft) = run_react("goal", &standard_tools(), planner, &mut ctx, &gate, max_steps);
    (t, draft, ctx.published)
}

#[test]
fn react_records_errors_as_observations() {
    let mut p = Fixed(vec![
        call("no_such_tool", json!({})),
        call("query_enrollment", json!({})),
        call("query_enrollment", json!({"term": "t1", "extra": 1})),
        call("query_enrollment", json!({"term": "t1"})),
    ]);
    let (t, draft, _) = react(&mut p, &at_risk(4, CheckpointPolicy::None), 16);
    assert_eq!(t.terminal, Terminal::Completed);
    let errs: Vec<bool> = t.steps.iter().map(Step::is_error).collect();
    assert_eq!(errs, [true, true, true, false]);
    assert!(t.steps[0].observation.contains("not_found"));
    assert_eq!(t.steps[3].observation, r#"{"enrollment_count":4,"term":"t1"}"#);
    for s in &t.steps {
        assert!(!s.thought.is_empty());
    }
    assert_eq!(draft.unwrap().answer, json!("ok"));
}

#[test]
fn react_stops_at_max_steps() {
    let (t, draft, _) = react(&mut Looping, &at_risk(4, CheckpointPolicy::None), 5);
    assert_eq!((t.terminal, t.steps.len(), t.max_steps), (Terminal::MaxSteps, 5, 5));
    assert!(draft.is_none());
}

#[test]
fn blocked_mutation_ends_the_run() {
    let mut p = Fixed(vec![
        call("detect_at_risk", json!({})),
        call("publish_report", json!({})),
        call("query_enrollment", json!({"term": "t1"})),
    ]);
    let (t, draft, published) = react(&mut p, &at_risk(2, CheckpointPolicy::PauseBeforePublish), 16);
    assert_eq!(t.terminal, Terminal::CheckpointPending);
    assert_eq!(t.steps.len(), 1);
    assert!(published.is_empty() && draft.is_none());
    let pending = t.pending.unwrap();
    assert_eq!(pending.action.subject, "wf-20250927-s2,wf-20250927-s3");
    assert!(t.overrides.is_empty());

    let mut p = Fixed(vec![call("detect_at_risk", json!({})), call("publish_report", json!({}))]);
    let (t, _, published) = react(&mut p, &at_risk(4, CheckpointPolicy::PauseBeforePublish), 16);
    assert_eq!(t.terminal, Terminal::Completed);
    assert_eq!(published, ["wf-20250927-s2", "wf-20250927-s3"]);
    assert_eq!(t.overrides.len(), 1);
}

#[test]
fn scripted_planner_retries_once_then_moves_on() {
    let mut p = ScriptedPlanner::new()
        .with(
            "",
            vec![
                PlanStep::new("bad", "attendance_rate", json!({"scope": "student"})),
                PlanStep::new("good", "query_enrollment", json!({"term": "t1"})),
            ],
        )
        .unwrap();
    let (t, draft, _) = react(&mut p, &at_risk(4, CheckpointPolicy::None), 16);
    let thoughts: Vec<&str> = t.steps.iter().map(|s| s.thought.as_str()).collect();
    assert_eq!(thoughts, ["bad", "bad (retry 1)", "good"]);
    assert_eq!(draft.unwrap().answer["enrollment_count"], 4);
}

#[test]
fn standard_goals() {
    let store = store();
    let snap = store.snapshot();
    let env = AgentEnv::default();
    let (t, d) = run_goal(&snap, &env, "attendance rate student s3", AS_OF).unwrap();
    assert_eq!(t.terminal, Terminal::Completed);
    assert_eq!(d.unwrap().answer["rate"], 0.5);
    let (t, d) = run_goal(&snap, &env, "what is the meaning of life", AS_OF).unwrap();
    assert_eq!(t.terminal, Terminal::Failed);
    assert!(d.is_none() && t.failure.unwrap().contains("no registered plan"));
}

#[test]
fn dry_run_is_deterministic_and_side_effect_free() {
    let store = store();
    let d = at_risk(4, CheckpointPolicy::None);
    let before = store.snapshot().audit_events().count();
    let a = dry_run(&store.snapshot(), &d, &AgentEnv::default(), &req()).unwrap();
    let b = dry_run(&store.snapshot(), &d, &AgentEnv::default(), &req()).unwrap();
    assert_eq!(crate::canonical::to_vec(&a).unwrap(), crate::canonical::to_vec(&b).unwrap());
    assert_eq!(a.1.len(), 2);
    assert_eq!(a.0.terminal, Terminal::CheckpointPending);
    assert_eq!(store.snapshot().audit_events().count(), before);
    assert!(dry_run(&store.snapshot(), &d, &AgentEnv::default(), &RunRequest::default()).is_err());
}

#[test]
fn supervised_run_waits_for_approval() {
    let store = store();
    let archive = ReportArchive::in_memory();
    let d = at_risk(2, CheckpointPolicy::PauseBeforePublish);
    let out = run_workflow(&store, &archive, &d, &AgentEnv::default(), &req(), "e2").unwrap();
    let RunStatus::PendingApproval { pending_id } = &out.status else { panic!("{:?}", out.status) };
    assert_eq!(out.report_ids, ["wf-20250927-s2", "wf-20250927-s3"]);
    for id in &out.report_ids {
        assert_eq!(archive.get(id).unwrap().status, ReportStatus::PendingApproval);
    }
    assert_eq!(list_pending(&store.snapshot()).len(), 1);

    let ok = approve(&store, &archive, pending_id, "e2", 100).unwrap();
    assert_eq!(ok.published, out.report_ids);
    for id in &out.report_ids {
        assert_eq!(archive.get(id).unwrap().status, ReportStatus::Published);
    }
    assert!(list_pending(&store.snapshot()).is_empty());
    assert_eq!(approve(&store, &archive, pending_id, "e2", 101).unwrap(), ok);
    assert!(matches!(approve(&store, &archive, "pa-none", "e2", 101), Err(Error::NotFound(_))));

    // The approval now lets a rerun publish directly.
    let again = run_workflow(&store, &archive, &d, &AgentEnv::default(), &req(), "e2").unwrap();
    assert_eq!(again.status, RunStatus::Published);
    let actions: Vec<String> = store.snapshot().audit_events().map(|a| a.action.clone()).collect();
    assert_eq!(actions, ["wf.run", "wf.approve", "wf.run"]);
}

#[test]
fn autonomous_run_publishes_and_logs_the_override() {
    let store = store();
    let archive = ReportArchive::in_memory();
    let d = at_risk(4, CheckpointPolicy::PauseBeforePublish);
    let out = run_workflow(&store, &archive, &d, &AgentEnv::default(), &req(), "e2").unwrap();
    assert_eq!(out.status, RunStatus::Published);
    let snap = store.snapshot();
    let overrides: Vec<_> = snap.audit_events().filter(|a| a.action == "wf.override").collect();
    assert_eq!(overrides.len(), 1);
    assert_eq!(overrides[0].actor, "agent:wf");
    assert_eq!(archive.list(&Default::default()).len(), 2);

    let one = RunRequest { student: Some("s1".into()), ..req() };
    let out = run_workflow(&store, &archive, &d, &AgentEnv::default(), &one, "e2").unwrap();
    assert_eq!(out.report_ids, ["wf-20250927-s1"]);
}

#[test]
fn student_filter_only_applies_to_at_risk() {
    let store = store();
    let d = def(3, CheckpointPolicy::None, Task::DailyHealth(HealthParams::default()));
    let one = RunRequest { student: Some("s1".into()), ..req() };
    let err = run_workflow(&store, &ReportArchive::in_memory(), &d, &AgentEnv::default(), &one, "e2");
    assert!(matches!(err, Err(Error::Validation { .. })));
}

#[test]
fn tick_runs_due_workflows_once() {
    let store = store();
    let archive = ReportArchive::in_memory();
    let defs = Definitions::from_toml(crate::pilot::WORKFLOWS_TOML).unwrap();
    let env = AgentEnv::default();
    let first = tick(&store, &archive, &defs, &env, at(2025, 9, 27, 21, 0, 0)).unwrap();
    let ran: Vec<_> = first.iter().map(|o| o.workflow_id.as_str()).collect();
    assert_eq!(ran, ["daily_health", "at_risk"]);
    assert!(tick(&store, &archive, &defs, &env, at(2025, 9, 27, 22, 0, 0)).unwrap().is_empty());
}

#[test]
fn events_route_to_event_workflows() {
    let store = store();
    let archive = ReportArchive::in_memory();
    let defs = Definitions::from_toml(crate::pilot::WORKFLOWS_TOML).unwrap();
    let ev = absence_event(&store.snapshot(), "s2", "off1", AS_OF);
    let out = on_event(&store, &archive, &defs, &AgentEnv::default(), &ev, AS_OF).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].workflow_id, "at_risk_event");
    assert!(matches!(out[0].status, RunStatus::PendingApproval { .. }));
    assert_eq!(out[0].report_ids, ["at_risk_event-20250927-s2"]);
    let quiet = absence_event(&store.snapshot(), "s1", "off1", AS_OF);
    assert!(on_event(&store, &archive, &defs, &AgentEnv::default(), &quiet, AS_OF).unwrap().is_empty());
}

#[test]
fn health_check_drills_into_low_units() {
    let store = store();
    let p = HealthParams::default();
    let c = run_daily_health_check(&store.snapshot(), AS_OF, &p, Default::default());
    // 80 marks, 17 absent.
    assert_eq!(c.institution_rate, Some(63.0 / 80.0));
    assert_eq!(c.status, HealthStatus::BelowTarget);
    assert_eq!(c.departments.len(), 1);
    assert_eq!(c.courses.len(), 1);
    let r = health_report(&c, "h1", 0).unwrap();
    assert_eq!(r.value("Institution Rate"), Some("78.8%"));
    assert_eq!(r.value("Status"), Some("below target"));
    assert!(r.section("Courses Below Target").is_some());

    let far = run_daily_health_check(&store.snapshot(), date(2025, 12, 1), &p, Default::default());
    assert_eq!((far.status, far.institution_rate), (HealthStatus::NoData, None));
}

fn slot_filter(label: &str, slot: Slot) -> GroupFilter {
    GroupFilter { label: label.into(), slot: Some(slot), ..Default::default() }
}

#[test]
fn comparison_is_antisymmetric() {
    let store = store();
    let snap = store.snapshot();
    let (a, b) = (slot_filter("AM", Slot::Morning), slot_filter("PM", Slot::Afternoon));
    let cfg = crate::outcomes::OutcomeConfig::default();
    let ab = compare_groups(&snap, &a, &b, &Metric::all(), None, Default::default(), &cfg);
    let ba = compare_groups(&snap, &b, &a, &Metric::all(), None, Default::default(), &cfg);
    let att = &ab.metrics[0];
    assert_eq!(att.metric, Metric::AttendanceRate);
    // Mornings: 40 marks, 10 (s3) + 2 (s4) + 1 (s2, session 19) absent.
    assert_eq!(att.a, Some(100.0 * 27.0 / 40.0));
    assert_eq!(att.b, Some(100.0 * 36.0 / 40.0));
    assert!(att.interpretation.starts_with("PM has the higher"));
    for (x, y) in ab.metrics.iter().zip(&ba.metrics) {
        assert_eq!(x.a, y.b);
        assert_eq!(x.difference.map(|d| -d), y.difference);
    }
    assert_eq!(ab.group_a.label, ba.group_b.label);
    let grades = &ab.metrics[1];
    assert_eq!((grades.a, grades.difference), (None, None));
    assert!(grades.interpretation.contains("both groups"));
}

proptest! {
    #[test]
    fn classification_is_monotone(r1 in 0u32..=100, r2 in 0u32..=100, s1 in 0u32..8, s2 in 0u32..8) {
        let (lo_r, hi_r) = (r1.min(r2), r1.max(r2));
        let (lo_s, hi_s) = (s1.min(s2), s1.max(s2));
        let worse = classify_risk(Some(f64::from(lo_r) / 100.0), hi_s);
        let better = classify_risk(Some(f64::from(hi_r) / 100.0), lo_s);
        prop_assert!(worse >= better);
    }

    #[test]
    fn gate_never_lets_review_levels_publish(level in 0u8..=4, p in 0usize..3, approved in any::<bool>()) {
        let policy = [CheckpointPolicy::None, CheckpointPolicy::PauseBeforePublish, CheckpointPolicy::PauseBeforeEachAction][p];
        let d = at_risk(level, policy);
        let action = PendingAction {
            workflow_id: "wf".into(),
            tool: "publish_report".into(),
            class: ActionClass::Publish,
            subject: "r".into(),
            payload: Value::Null,
        };
        let approvals = if approved {
            vec![Approval { pending_id: action.pending_id(), approver: "e2".into(), at: 0 }]
        } else {
            vec![]
        };
        let g = gate_checkpoint(&action, &d, &approvals, 0);
        if level <= 2 && !approved {
            prop_assert!(g.is_blocked());
        }
        if approved {
            prop_assert!(!g.is_blocked());
        }
    }
}
