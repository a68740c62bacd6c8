//! Command implementations behind the `maci` binary. Each command writes a
//! human-readable report and returns its exit code: 0 when everything
//! holds, 1 when the plan or schedule breaks a hard rule, 2 for bad input.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use maci_core::clock::Clock;
use maci_core::planner::{plan, PlanError, PlanOutcome, PlanningProblem};
use maci_core::runtime::{handle_disruption, DisruptionEvent, ReactiveOutcome};
use maci_core::scenario::{check_schedule, metrics, Scenario, ScenarioError, Schedule, ScheduleMetrics, ViolationReport};
use maci_core::tsp::{aco, format_tour, solve, AcoParams, Algorithm, DistanceMatrix, Solution};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "maci", version, about = "Workflow planning, schedule checking and TSP solving")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a workflow for a scenario and schedule it.
    Plan {
        /// `builtin:<name>` or a scenario JSON file.
        #[arg(long, default_value = "builtin:augmented")]
        scenario: String,
        /// Comma-separated knowledge packs; `none` disables them.
        #[arg(long)]
        packs: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a schedule against the scenario rules.
    Check {
        #[arg(long, default_value = "builtin:augmented")]
        scenario: String,
        /// CSV or JSON schedule.
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan, then react to disruption events.
    Disrupt {
        #[arg(long, default_value = "builtin:augmented")]
        scenario: String,
        /// JSON file with one event or an array of events.
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a travelling-salesman instance from city 0.
    Tsp {
        /// Whitespace-separated square matrix, one row per line.
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "hk")]
        algo: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ant colony preset.
        #[arg(long, value_enum, default_value_t = Preset::Large)]
        preset: Preset,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the agent registry HTTP service.
    Serve {
        /// Listen address; falls back to MACI_BIND, then 127.0.0.1:8000.
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Small,
    Large,
}

/// Input problems exit with 2; everything else that fails is reported as 1.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        usage(e.to_string())
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        let code = match e {
            PlanError::Infeasible(_) | PlanError::Unassignable(_) => EXIT_VIOLATIONS,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

type Outcome = Result<(i32, String, Option<Value>), Failure>;

/// Runs one command, writing the report to `out`. `serve` is handled by the
/// binary since it never returns.
pub fn execute(command: &Command, out: &mut dyn Write) -> i32 {
    let result = match command {
        Command::Plan { scenario, packs, .. } => cmd_plan(scenario, packs.as_deref()),
        Command::Check { scenario, schedule, .. } => cmd_check(scenario, schedule),
        Command::Disrupt { scenario, events, .. } => cmd_disrupt(scenario, events),
        Command::Tsp { matrix, algo, seed, preset, .. } => cmd_tsp(matrix, algo, *seed, *preset),
        Command::Serve { .. } => Err(usage("serve is not a batch command")),
    };
    let out_path = match command {
        Command::Plan { out, .. } | Command::Check { out, .. } | Command::Disrupt { out, .. } | Command::Tsp { out, .. } => {
            out.as_deref()
        }
        Command::Serve { .. } => None,
    };
    match result {
        Ok((code, text, machine)) => {
            let _ = out.write_all(text.as_bytes());
            if let (Some(path), Some(value)) = (out_path, machine) {
                let body = serde_json::to_string_pretty(&value).expect("report serializes") + "\n";
                if let Err(e) = std::fs::write(path, body) {
                    let _ = writeln!(out, "error: cannot write {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            }
            code
        }
        Err(f) => {
            let _ = writeln!(out, "error: {}", f.message);
            f.code
        }
    }
}

fn load_scenario(source: &str) -> Result<Scenario, Failure> {
    let scenario = Scenario::load(source)?;
    scenario.validate()?;
    Ok(scenario)
}

fn verdict(report: &ViolationReport) -> i32 {
    if report.is_feasible() {
        EXIT_OK
    } else {
        EXIT_VIOLATIONS
    }
}

fn metrics_table(text: &mut String, m: &ScheduleMetrics) {
    let _ = writeln!(text, "satisfaction  {:.1}%", m.satisfaction_pct);
    let _ = writeln!(text, "total slack   {} min", m.total_slack);
    let _ = writeln!(text, "total idle    {} min", m.total_idle());
    let _ = writeln!(text, "makespan      {} min", m.makespan);
}

fn violations(text: &mut String, report: &ViolationReport) {
    if !report.violations.is_empty() {
        text.push_str(&report.render());
        if !text.ends_with('\n') {
            text.push('\n');
        }
    }
    let _ = writeln!(text, "{} hard violations, {} soft", report.hard_count(), report.soft_count());
}

fn plan_summary(text: &mut String, outcome: &PlanOutcome) {
    text.push_str("role        person\n");
    for (role, person) in outcome.assignment() {
        let _ = writeln!(text, "{role:<11} {person}");
    }
    text.push('\n');
    text.push_str(&outcome.schedule.to_csv());
    text.push('\n');
    violations(text, &outcome.report);
    metrics_table(text, &outcome.metrics);
    if let Some(score) = outcome.workflow.score {
        let _ = writeln!(text, "score         {score:.4}");
    }
}

fn plan_json(outcome: &PlanOutcome) -> Value {
    json!({
        "assignment": outcome.assignment(),
        "workflow": serde_json::from_str::<Value>(&outcome.workflow.to_json()).expect("workflow json"),
        "schedule": outcome.schedule,
        "report": outcome.report,
        "metrics": outcome.metrics,
        "history": outcome.history,
    })
}

pub fn cmd_plan(source: &str, packs: Option<&str>) -> Outcome {
    let scenario = load_scenario(source)?;
    let mut problem = PlanningProblem::from_scenario(&scenario);
    if let Some(packs) = packs {
        problem.knowledge_packs = match packs.trim() {
            "" | "none" => Vec::new(),
            list => list.split(',').map(|p| p.trim().to_string()).collect(),
        };
    }
    let outcome = plan(&problem)?;
    let mut text = String::new();
    plan_summary(&mut text, &outcome);
    Ok((verdict(&outcome.report), text, Some(plan_json(&outcome))))
}

pub fn cmd_check(source: &str, schedule_path: &Path) -> Outcome {
    let scenario = load_scenario(source)?;
    let schedule = Schedule::load(schedule_path, Some(&scenario))?;
    let report = check_schedule(&scenario, &schedule)?;
    let m = metrics(&scenario, &schedule)?;
    let mut text = String::new();
    violations(&mut text, &report);
    metrics_table(&mut text, &m);
    let machine = json!({ "report": report, "metrics": m });
    Ok((verdict(&report), text, Some(machine)))
}

fn read_events(path: &Path) -> Result<Vec<DisruptionEvent>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let events = match value {
        Value::Array(_) => serde_json::from_value(value),
        other => serde_json::from_value(other).map(|e| vec![e]),
    };
    events.map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn reactive_summary(text: &mut String, r: &ReactiveOutcome) {
    let _ = writeln!(text, "[{}] {}", Clock(r.alert.at), r.alert.message);
    match &r.replan {
        Some(replan) => {
            let _ = writeln!(
                text,
                "replan {}..{} affecting {}",
                Clock(replan.window.0),
                Clock(replan.window.1),
                replan.affected.join(", ")
            );
        }
        None => text.push_str("no replan needed\n"),
    }
    for entry in &r.log {
        let _ = writeln!(text, "  {} {}", Clock(entry.at), entry.text);
    }
    text.push('\n');
    plan_summary(text, &r.outcome);
}

pub fn cmd_disrupt(source: &str, events_path: &Path) -> Outcome {
    let scenario = load_scenario(source)?;
    let events = read_events(events_path)?;
    if events.is_empty() {
        return Err(usage("no events given"));
    }
    let mut problem = PlanningProblem::from_scenario(&scenario);
    let mut text = String::new();
    let mut results = Vec::new();
    let mut code = EXIT_OK;
    for event in &events {
        let r = handle_disruption(&problem, event)?;
        reactive_summary(&mut text, &r);
        text.push('\n');
        code = code.max(verdict(&r.outcome.report));
        results.push(json!({
            "event": event,
            "alert": r.alert,
            "replan": r.replan,
            "log": r.log.iter().map(|l| json!({"at": l.at, "text": l.text})).collect::<Vec<_>>(),
            "outcome": plan_json(&r.outcome),
        }));
        // Later events see the earlier delays as known facts.
        let maci_core::runtime::Disruption::FlightDelay { actor, new_time } = &event.disruption;
        problem.scenario.delay_flight(actor, *new_time)?;
    }
    Ok((code, text, Some(Value::Array(results))))
}

fn tsp_report(solution: &Solution, algo: &str) -> String {
    format!(
        "algorithm    {algo}\nlength       {}\ntour         {}\nevaluations  {}\n",
        solution.length,
        format_tour(&solution.tour),
        solution.evaluations
    )
}

pub fn cmd_tsp(path: &Path, algo: &str, seed: u64, preset: Preset) -> Outcome {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let matrix = DistanceMatrix::parse(&text).map_err(|e| usage(e.to_string()))?;
    let algorithm: Algorithm = algo.parse().map_err(|e: maci_core::tsp::TspError| usage(e.to_string()))?;
    let solution = match (algorithm, preset) {
        (Algorithm::Aco, Preset::Small) => aco(&matrix, 0, &AcoParams::small(seed)).map(|r| r.solution),
        _ => solve(&matrix, algorithm, 0, seed),
    }
    .map_err(|e| usage(e.to_string()))?;
    let machine = json!({ "algorithm": algorithm.to_string(), "seed": seed, "solution": solution });
    Ok((EXIT_OK, tsp_report(&solution, &algorithm.to_string()), Some(machine)))
}
