use serde_json::{json, Value};

use super::compare::{compare_groups, comparison_report, Metric};
use super::definition::{AtRiskParams, CompareParams, HealthParams};
use super::gate::ActionClass;
use super::health::{health_report, run_daily_health_check};
use super::react::{Tool, ToolContext, ToolContract, ToolRegistry};
use super::risk::{detect_at_risk, student_report, RiskScope, TriggerKind};
use crate::error::{Error, Result};
use crate::reports::ReportStatus;
use crate::store::{AttendanceScope, DateWindow};

fn str_arg<'v>(args: &'v Value, name: &str) -> Result<Option<&'v str>> {
    match args.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(Error::validation(name, "expected a string")),
    }
}

fn params<T: serde::de::DeserializeOwned + Default>(args: &Value) -> Result<T> {
    match args.get("params") {
        None | Some(Value::Null) => Ok(T::default()),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::validation("params", e.to_string())),
    }
}

fn date_stamp(ctx: &ToolContext<'_>) -> String {
    ctx.date.format("%Y%m%d").to_string()
}

struct QueryEnrollment(ToolContract);

impl Tool for QueryEnrollment {
    fn contract(&self) -> &ToolContract {
        &self.0
    }

    fn call(&self, ctx: &mut ToolContext<'_>, args: &Value) -> Result<Value> {
        let term = str_arg(args, "term")?.unwrap_or_default();
        let n = ctx.snapshot.enrollment_count(term)?;
        ctx.scratchpad.insert("enrollment_count".into(), json!(n));
        Ok(json!({ "term": term, "enrollment_count": n }))
    }
}

struct AttendanceRate(ToolContract);

impl Tool for AttendanceRate {
    fn contract(&self) -> &ToolContract {
        &self.0
    }

    fn call(&self, ctx: &mut ToolContext<'_>, args: &Value) -> Result<Value> {
        let id = str_arg(args, "id")?.map(str::to_string);
        let need = |id: Option<String>| id.ok_or_else(|| Error::validation("id", "scope needs an id"));
        let scope = match str_arg(args, "scope")?.unwrap_or("institution") {
            "student" => AttendanceScope::Student(need(id)?),
            "offering" => AttendanceScope::Offering(need(id)?),
            "course" => AttendanceScope::Course(need(id)?),
            "department" => AttendanceScope::Department(need(id)?),
            "institution" => AttendanceScope::Institution,
            other => return Err(Error::validation("scope", format!("unknown scope `{other}`"))),
        };
        let parse = |name: &str| -> Result<Option<chrono::NaiveDate>> {
            str_arg(args, name)?
                .map(|s| s.parse().map_err(|_| Error::validation(name, format!("bad date `{s}`"))))
                .transpose()
        };
        let window = DateWindow {
            from: parse("from")?,
            to: parse("to")?.or(Some(ctx.date)),
        };
        let tally = ctx.snapshot.attendance_tally(&scope, window)?;
        let rate = tally.rate(ctx.env.attendance);
        Ok(json!({ "scope": scope, "tally": tally, "rate": rate }))
    }
}

struct DailyHealth(ToolContract);

impl Tool for DailyHealth {
    fn contract(&self) -> &ToolContract {
        &self.0
    }

    fn call(&self, ctx: &mut ToolContext<'_>, args: &Value) -> Result<Value> {
        let p: HealthParams = params(args)?;
        let check = run_daily_health_check(ctx.snapshot, ctx.date, &p, ctx.env.attendance);
        let id = format!("{}-{}", ctx.workflow_id, date_stamp(ctx));
        let report = health_report(&check, &id, ctx.generated_at)?;
        ctx.staged.push(report);
        Ok(json!({
            "report_ids": [id],
            "status": check.status,
            "institution_rate": check.institution_rate,
            "departments_below": check.departments.len(),
            "courses_below": check.courses.len(),
        }))
    }
}

struct DetectAtRisk(ToolContract);

impl Tool for DetectAtRisk {
    fn contract(&self) -> &ToolContract {
        &self.0
    }

    fn call(&self, ctx: &mut ToolContext<'_>, args: &Value) -> Result<Value> {
        let p: AtRiskParams = params(args)?;
        let student = str_arg(args, "student")?;
        let (scope, trigger) = match student {
            Some(s) => (RiskScope::Student(s), TriggerKind::ConsecutiveAbsenceEvent),
            None => (RiskScope::AllStudents, TriggerKind::WeeklyBatch),
        };
        let mut env = ctx.env.risk;
        env.course_target = p.course_target;
        let assessments = detect_at_risk(ctx.snapshot, scope, trigger, ctx.date, &env)?;
        let mut ids = Vec::new();
        let mut summary = Vec::new();
        for a in &assessments {
            summary.push(json!({
                "student": a.student,
                "risk_level": a.risk_level,
                "overall_rate": a.overall_rate,
                "streak": a.streak,
            }));
            // A named student always gets a report; a batch reports only
            // students at or above the configured level.
            if student.is_none() && a.risk_level < p.report_min_level {
                continue;
            }
            let id = format!("{}-{}-{}", ctx.workflow_id, date_stamp(ctx), a.student);
            ctx.staged.push(student_report(ctx.snapshot, a, &id, ctx.generated_at)?);
            ids.push(id);
        }
        Ok(json!({ "report_ids": ids, "assessments": summary }))
    }
}

struct CompareGroups(ToolContract);

impl Tool for CompareGroups {
    fn contract(&self) -> &ToolContract {
        &self.0
    }

    fn call(&self, ctx: &mut ToolContext<'_>, args: &Value) -> Result<Value> {
        let p: CompareParams = match args.get("params") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::validation("params", e.to_string()))?,
            None => return Err(Error::validation("params", "compare_groups requires params")),
        };
        let metrics = if p.metrics.is_empty() { Metric::all() } else { p.metrics.clone() };
        let c = compare_groups(
            ctx.snapshot,
            &p.group_a,
            &p.group_b,
            &metrics,
            Some(ctx.date),
            ctx.env.attendance,
            &ctx.env.outcomes,
        );
        let id = format!("{}-{}", ctx.workflow_id, date_stamp(ctx));
        ctx.staged.push(comparison_report(&c, &id, ctx.generated_at)?);
        Ok(json!({ "report_ids": [id], "metrics": c.metrics }))
    }
}

/// Publishes every report staged so far in the run. Mutating: the gate
/// decides before it runs.
struct PublishReport(ToolContract);

impl Tool for PublishReport {
    fn contract(&self) -> &ToolContract {
        &self.0
    }

    fn subject(&self, ctx: &ToolContext<'_>, _args: &Value) -> (String, Value) {
        let ids: Vec<&str> = ctx.staged.iter().map(|r| r.report_id.as_str()).collect();
        let reports: Vec<_> = ctx
            .staged
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.status = ReportStatus::PendingApproval;
                r
            })
            .collect();
        (ids.join(","), json!({ "reports": reports }))
    }

    fn call(&self, ctx: &mut ToolContext<'_>, _args: &Value) -> Result<Value> {
        if ctx.staged.is_empty() {
            return Err(Error::validation("reports", "nothing staged to publish"));
        }
        for r in &mut ctx.staged {
            r.status = ReportStatus::Published;
            if !ctx.published.contains(&r.report_id) {
                ctx.published.push(r.report_id.clone());
            }
        }
        Ok(json!({ "published": ctx.published }))
    }
}

pub fn standard_tools() -> ToolRegistry {
    let mut reg = ToolRegistry::new();
    let tools: Vec<Box<dyn Tool>> = vec![
        Box::new(QueryEnrollment(ToolContract::read("query_enrollment", &[("term", true)]))),
        Box::new(AttendanceRate(ToolContract::read(
            "attendance_rate",
            &[("scope", false), ("id", false), ("from", false), ("to", false)],
        ))),
        Box::new(DailyHealth(ToolContract::read("daily_health", &[("params", false)]))),
        Box::new(DetectAtRisk(ToolContract::read(
            "detect_at_risk",
            &[("student", false), ("params", false)],
        ))),
        Box::new(CompareGroups(ToolContract::read("compare_groups", &[("params", true)]))),
        Box::new(PublishReport(ToolContract::new("publish_report", &[], ActionClass::Publish))),
    ];
    for t in tools {
        reg.register(t).expect("unique tool names");
    }
    reg
}
