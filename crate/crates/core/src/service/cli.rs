use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use super::{App, ErrorBody, SubmissionArgs};
use crate::canonical;
use crate::config::ServiceConfig;
use crate::error::{Error, Result};
use crate::grading::{BlueprintRow, Decision};
use crate::ingestion::DraftSpecification;
use crate::reports::{render_markdown, InsightReport};

#[derive(Debug, Parser)]
#[command(
    name = "campusqa",
    version,
    about = "Academic records, grading, outcomes and workflow reports",
    disable_help_subcommand = true
)]
struct Cli {
    /// Service config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Store directory, when running without a config file.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Print canonical JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    /// Acting user, resolved through the config's role map.
    #[arg(long, global = true)]
    actor: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    Health,
    #[command(subcommand)]
    Entities(EntitiesCmd),
    Import {
        kind: String,
        file: PathBuf,
    },
    #[command(subcommand)]
    Ingest(IngestCmd),
    #[command(subcommand)]
    Exam(ExamCmd),
    #[command(subcommand)]
    Grades(GradesCmd),
    #[command(subcommand)]
    Outcomes(OutcomesCmd),
    #[command(subcommand)]
    Wf(WfCmd),
    #[command(subcommand)]
    Report(ReportCmd),
    #[command(subcommand)]
    Pilot(PilotCmd),
    /// Run the HTTP service.
    Serve,
}

#[derive(Debug, Subcommand)]
enum EntitiesCmd {
    List { kind: String },
    Put { kind: String, file: PathBuf },
}

#[derive(Debug, Subcommand)]
enum IngestCmd {
    Extract {
        file: PathBuf,
    },
    Confirm {
        draft_id: String,
        /// Edited draft (JSON) to confirm instead of the stored one.
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ExamCmd {
    Create {
        #[arg(long)]
        exam_id: String,
        #[arg(long)]
        offering: String,
        /// JSON array of blueprint rows.
        #[arg(long)]
        blueprint: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SubArgs {
    #[arg(long)]
    exam: String,
    #[arg(long)]
    q: String,
    #[arg(long)]
    student: String,
}

impl SubArgs {
    fn to_args(&self) -> SubmissionArgs {
        SubmissionArgs {
            exam_id: self.exam.clone(),
            q_id: self.q.clone(),
            student: self.student.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum GradesCmd {
    Submit {
        #[command(flatten)]
        sub: SubArgs,
        #[arg(long)]
        answer: String,
    },
    Suggest {
        #[command(flatten)]
        sub: SubArgs,
    },
    Decide {
        #[command(flatten)]
        sub: SubArgs,
        /// accept | adjust | override | direct
        #[arg(long)]
        action: String,
        #[arg(long)]
        points: Option<f64>,
        #[arg(long)]
        feedback: Option<String>,
    },
    Audit {
        #[arg(long)]
        exam: String,
    },
}

#[derive(Debug, Subcommand)]
enum OutcomesCmd {
    Clo {
        #[arg(long)]
        offering: String,
        #[arg(long)]
        clo: String,
    },
    Plo {
        #[arg(long)]
        program: String,
        #[arg(long)]
        term: String,
    },
    Matrix {
        #[arg(long)]
        program: String,
        #[arg(long)]
        term: String,
        /// CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
    Comply {
        #[arg(long)]
        course: String,
    },
}

#[derive(Debug, Subcommand)]
enum WfCmd {
    Run {
        workflow_id: String,
        #[arg(long)]
        date: Option<chrono::NaiveDate>,
        #[arg(long)]
        student: Option<String>,
    },
    Approve {
        pending_id: String,
    },
    ListPending,
}

#[derive(Debug, Subcommand)]
enum ReportCmd {
    Show {
        report_id: String,
        /// Print the rendered markdown.
        #[arg(long)]
        markdown: bool,
    },
    List {
        #[arg(long = "type")]
        report_type: Option<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Write `<id>.json` and `<id>.md` into a directory.
    Export {
        report_id: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum PilotCmd {
    /// Generate the pilot fixture files into a directory.
    Write { dir: PathBuf },
    /// Load a pilot fixture directory into the store.
    Load { dir: PathBuf },
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::validation("file", format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::validation("file", format!("{}: {e}", path.display())))
}

fn decision(action: &str, points: Option<f64>, feedback: Option<String>) -> Result<Decision> {
    let need = || points.ok_or_else(|| Error::validation("points", format!("{action} needs --points")));
    Ok(match action {
        "accept" => Decision::Accept,
        "adjust" => Decision::Adjust {
            points: need()?,
            feedback,
        },
        "override" => Decision::Override {
            points: need()?,
            feedback: feedback.unwrap_or_default(),
        },
        "direct" => Decision::HumanDirect {
            points: need()?,
            feedback: feedback.unwrap_or_default(),
        },
        other => return Err(Error::validation("action", format!("unknown action `{other}`"))),
    })
}

enum Output {
    Value(Value),
    Text(String),
}

fn open_app(cli: &Cli) -> Result<App> {
    let config = match (&cli.config, &cli.store) {
        (Some(path), store) => {
            let mut c = ServiceConfig::load(path)?;
            if let Some(s) = store {
                c.store = s.clone();
            }
            c
        }
        (None, Some(store)) => ServiceConfig::with_store(store),
        (None, None) => {
            return Err(Error::validation("config", "one of --config or --store is required"))
        }
    };
    App::open(config)
}

fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

fn s(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Human rendering for the read verbs that have one; everything else is
/// pretty JSON.
fn human(verb: &str, v: &Value) -> String {
    match verb {
        "outcomes clo" => table(
            &["clo", "students", "meeting", "achievement", "below_target"],
            &[vec![
                format!("{}/{}", s(&v["clo"]["course"]), s(&v["clo"]["clo_id"])),
                s(&v["n_students"]),
                s(&v["n_meeting"]),
                s(&v["display"]),
                s(&v["below_target"]),
            ]],
        ),
        "outcomes plo" => table(
            &["plo", "value", "below_threshold", "contributions"],
            &v.as_array()
                .map(|a| {
                    a.iter()
                        .map(|p| {
                            vec![
                                s(&p["plo_id"]),
                                s(&p["display"]),
                                s(&p["below_threshold"]),
                                p["contributions"].as_array().map_or(0, Vec::len).to_string(),
                            ]
                        })
                        .collect::<Vec<_>>()
                })
                .unwrap_or_default(),
        ),
        "outcomes comply" => {
            let items = v.as_array().cloned().unwrap_or_default();
            if items.is_empty() {
                return "no findings\n".into();
            }
            let mut out = String::new();
            for f in items {
                let _ = writeln!(
                    out,
                    "{} {} {}: {} ({})",
                    s(&f["rule_id"]),
                    s(&f["severity"]),
                    s(&f["subject"]),
                    s(&f["message"]),
                    s(&f["remediation"])
                );
            }
            out
        }
        "wf list-pending" => table(
            &["pending_id", "workflow", "tool", "subject"],
            &v.as_array()
                .map(|a| {
                    a.iter()
                        .map(|p| {
                            vec![
                                s(&p["pending_id"]),
                                s(&p["action"]["workflow_id"]),
                                s(&p["action"]["tool"]),
                                s(&p["action"]["subject"]),
                            ]
                        })
                        .collect::<Vec<_>>()
                })
                .unwrap_or_default(),
        ),
        "wf run" => {
            let ids: Vec<String> = v["report_ids"]
                .as_array()
                .map(|a| a.iter().map(s).collect())
                .unwrap_or_default();
            let mut out = format!("{} {}\n", s(&v["workflow_id"]), s(&v["status"]["status"]));
            if let Some(p) = v["status"].get("pending_id") {
                let _ = writeln!(out, "pending {}", s(p));
            }
            for id in ids {
                let _ = writeln!(out, "{id}");
            }
            out
        }
        "report list" => table(
            &["report_id", "type", "status", "generated_at"],
            &v.as_array()
                .map(|a| {
                    a.iter()
                        .map(|r| {
                            vec![
                                s(&r["report_id"]),
                                s(&r["report_type"]),
                                s(&r["status"]),
                                r["generated_at"]
                                    .as_i64()
                                    .map(crate::clock::format_timestamp)
                                    .unwrap_or_default(),
                            ]
                        })
                        .collect::<Vec<_>>()
                })
                .unwrap_or_default(),
        ),
        _ => canonical::to_string_pretty(v).unwrap_or_default() + "\n",
    }
}

fn run(cli: Cli) -> Result<(String, Output)> {
    if let Cmd::Pilot(PilotCmd::Write { dir }) = &cli.cmd {
        crate::pilot::write_fixture(dir)?;
        return Ok(("pilot write".into(), Output::Text(format!("wrote {}\n", dir.display()))));
    }
    let app = open_app(&cli)?;
    let actor = cli.actor.as_deref();
    let (verb, out) = match cli.cmd {
        Cmd::Health => ("health", Output::Value(app.health())),
        Cmd::Serve => {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()?;
            rt.block_on(super::http::serve(app))?;
            ("serve", Output::Text(String::new()))
        }
        Cmd::Entities(EntitiesCmd::List { kind }) => ("entities list", Output::Value(app.entities(&kind)?)),
        Cmd::Entities(EntitiesCmd::Put { kind, file }) => (
            "entities put",
            Output::Value(app.put_entity(actor, &kind, read_json(&file)?)?),
        ),
        Cmd::Import { kind, file } => ("import", Output::Value(app.import(actor, &kind, &read(&file)?)?)),
        Cmd::Ingest(IngestCmd::Extract { file }) => (
            "ingest extract",
            Output::Value(app.ingest_extract(actor, &read(&file)?)?),
        ),
        Cmd::Ingest(IngestCmd::Confirm { draft_id, file }) => {
            let edited: Option<DraftSpecification> = file.as_ref().map(read_json).transpose()?;
            (
                "ingest confirm",
                Output::Value(app.ingest_confirm(actor, &draft_id, edited)?),
            )
        }
        Cmd::Exam(ExamCmd::Create {
            exam_id,
            offering,
            blueprint,
        }) => {
            let rows: Vec<BlueprintRow> = read_json(&blueprint)?;
            (
                "exam create",
                Output::Value(app.create_exam(actor, &exam_id, &offering, &rows)?),
            )
        }
        Cmd::Grades(GradesCmd::Submit { sub, answer }) => (
            "grades submit",
            Output::Value(app.submit(actor, &sub.to_args(), &answer)?),
        ),
        Cmd::Grades(GradesCmd::Suggest { sub }) => {
            ("grades suggest", Output::Value(app.suggest(actor, &sub.to_args())?))
        }
        Cmd::Grades(GradesCmd::Decide {
            sub,
            action,
            points,
            feedback,
        }) => {
            let d = decision(&action, points, feedback)?;
            ("grades decide", Output::Value(app.decide(actor, &sub.to_args(), &d)?))
        }
        Cmd::Grades(GradesCmd::Audit { exam }) => ("grades audit", Output::Value(app.grades_audit(&exam)?)),
        Cmd::Outcomes(OutcomesCmd::Clo { offering, clo }) => {
            ("outcomes clo", Output::Value(app.outcomes_clo(&offering, &clo)?))
        }
        Cmd::Outcomes(OutcomesCmd::Plo { program, term }) => {
            ("outcomes plo", Output::Value(app.outcomes_plo(&program, &term)?))
        }
        Cmd::Outcomes(OutcomesCmd::Matrix { program, term, csv }) => {
            let v = app.outcomes_matrix(&program, &term)?;
            if csv && !cli.json {
                let doc: crate::outcomes::MatrixDocument = serde_json::from_value(v)?;
                ("outcomes matrix", Output::Text(doc.to_csv()?))
            } else {
                ("outcomes matrix", Output::Value(v))
            }
        }
        Cmd::Outcomes(OutcomesCmd::Comply { course }) => {
            ("outcomes comply", Output::Value(app.outcomes_comply(&course)?))
        }
        Cmd::Wf(WfCmd::Run {
            workflow_id,
            date,
            student,
        }) => (
            "wf run",
            Output::Value(app.wf_run(actor, &workflow_id, date, student.as_deref())?),
        ),
        Cmd::Wf(WfCmd::Approve { pending_id }) => {
            ("wf approve", Output::Value(app.wf_approve(actor, &pending_id)?))
        }
        Cmd::Wf(WfCmd::ListPending) => ("wf list-pending", Output::Value(app.wf_pending()?)),
        Cmd::Report(ReportCmd::Show { report_id, markdown }) => {
            let v = app.report(&report_id)?;
            if markdown && !cli.json {
                let r: InsightReport = serde_json::from_value(v)?;
                ("report show", Output::Text(render_markdown(&r)))
            } else {
                ("report show", Output::Value(v))
            }
        }
        Cmd::Report(ReportCmd::List {
            report_type,
            from,
            to,
        }) => {
            let f = App::report_filter(report_type.as_deref(), from.as_deref(), to.as_deref())?;
            ("report list", Output::Value(app.reports(&f)?))
        }
        Cmd::Report(ReportCmd::Export { report_id, out }) => {
            let r = app
                .archive
                .get(&report_id)
                .ok_or_else(|| Error::NotFound(format!("report {report_id}")))?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join(format!("{report_id}.json")), crate::reports::serialize(&r)?)?;
            std::fs::write(out.join(format!("{report_id}.md")), render_markdown(&r))?;
            (
                "report export",
                Output::Text(format!("{}\n", out.join(format!("{report_id}.json")).display())),
            )
        }
        Cmd::Pilot(PilotCmd::Load { dir }) => (
            "pilot load",
            Output::Value(crate::pilot::load_fixture(&app, &dir, actor)?),
        ),
        Cmd::Pilot(PilotCmd::Write { .. }) => unreachable!("handled above"),
    };
    Ok((verb.to_string(), out))
}

/// Route `argv` (without the program name) to a verb. Returns the exit
/// code and everything meant for stdout: 0 success, 1 usage or validation
/// or permission, 2 integrity, missing or conflicting data, 3 internal.
pub fn dispatch<I, S>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = std::iter::once("campusqa".to_string())
        .chain(argv.into_iter().map(Into::into))
        .collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            return (code, e.render().to_string());
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok((_, Output::Text(t))) => (0, t),
        Ok((_, Output::Value(v))) if json => (0, canonical::to_string(&v).unwrap_or_default() + "\n"),
        Ok((verb, Output::Value(v))) => (0, human(&verb, &v)),
        Err(e) => {
            let text = if json {
                canonical::to_string(&ErrorBody::from(&e)).unwrap_or_default() + "\n"
            } else {
                format!("error[{}]: {e}\n", e.code())
            };
            (e.exit_code(), text)
        }
    }
}
