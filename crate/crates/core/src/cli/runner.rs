use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{
    AttainabilityParams, ExperimentConfig, Job, MonotonicityParams, Pr4pcParams, SensitivityParams, SolvePcParams,
    SolvePrParams, Theorem1Params,
};
use super::demo;
use super::export::{fmt_f64, trace_table, ArtifactSet};
use crate::analysis::{
    attainability_halfspaces, check_theorem1, monotonicity_scan, multiplier_interval, multiplier_region_feasible,
    sensitivity_curve, theorem1_conformance, ZERO_DELTA,
};
use crate::error::Error;
use crate::instances::make_instance;
use crate::par;
use crate::problem::{Assignment, Multipliers, Problem, Threshold};
use crate::search::{log_grid_multipliers, pr4pc, LambdaStrategy, SearchStatus};
use crate::solvers::{solve_pc_grid, solve_pr_grid, PcOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub threads: Option<usize>,
    /// Replaces the budget of every grid in the config.
    pub budget: Option<u64>,
    /// Replaces the config's `seed`.
    pub seed: Option<u64>,
    /// Record wall-clock time in the manifest. Off by default because it
    /// breaks byte-identical reruns.
    pub wall_clock: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// The run completed but a feasibility the config asked for was not met.
    FeasibilityUnmet,
}

#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub dir: PathBuf,
    /// Every file written, `manifest.json` last.
    pub files: Vec<PathBuf>,
    pub status: RunStatus,
}

impl RunArtifact {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Ok => EXIT_OK,
            RunStatus::FeasibilityUnmet => EXIT_INFEASIBLE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    ConfigError,
    BudgetExceeded,
    RuntimeError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub kind: FailureKind,
    pub error: Error,
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::ConfigError => EXIT_CONFIG,
            FailureKind::BudgetExceeded => EXIT_BUDGET,
            FailureKind::RuntimeError => EXIT_RUNTIME,
        }
    }

    /// The structured diagnostic printed to stderr and saved as `diagnostic.json`.
    pub fn diagnostic(&self) -> Value {
        json!({
            "status": "error",
            "kind": self.kind,
            "exit_code": self.exit_code(),
            "message": self.error.to_string(),
        })
    }
}

impl From<Error> for RunError {
    fn from(error: Error) -> Self {
        let kind = match &error {
            Error::BudgetExceeded { .. } => FailureKind::BudgetExceeded,
            Error::NonFinite { .. } | Error::Io(_) => FailureKind::RuntimeError,
            _ => FailureKind::ConfigError,
        };
        RunError { kind, error }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for RunError {}

/// Files produced by one command, before they are written.
pub(crate) struct Output {
    pub files: ArtifactSet,
    pub status: RunStatus,
    /// Deterministic amount of work: model evaluations or grid points visited.
    pub work: u64,
}

impl Output {
    fn new() -> Self {
        Output {
            files: ArtifactSet::new(),
            status: RunStatus::Ok,
            work: 0,
        }
    }
}

/// Validate, run and write one experiment.
///
/// Nothing is computed or written until the config, command parameters and
/// instance all validate.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunArtifact, RunError> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let job = config.job(opts.budget)?;
    let problem = config.instance.as_ref().map(make_instance).transpose()?;
    let started = Instant::now();
    let output = par::with_threads(opts.threads, || execute(&job, problem.as_ref(), config.seed))?;
    let elapsed = started.elapsed();

    let mut echo = serde_json::to_value(&config).map_err(|e| Error::Io(e.to_string()))?;
    if let Value::Object(map) = &mut echo {
        map.remove("output_dir");
        if let Some(b) = opts.budget {
            map.insert("budget_override".into(), json!(b));
        }
    }
    let mut timings = json!({ "work_units": output.work });
    if opts.wall_clock {
        timings["wall_clock_seconds"] = json!(elapsed.as_secs_f64());
    }
    let files = output
        .files
        .write(&config.output_dir, config.command.as_str(), echo, timings)?;
    Ok(RunArtifact {
        dir: config.output_dir.clone(),
        files,
        status: output.status,
    })
}

/// Save a failure's diagnostic into `dir` (best effort) and return its text.
pub fn write_diagnostic(dir: Option<&Path>, err: &RunError) -> String {
    let text = serde_json::to_string_pretty(&err.diagnostic()).unwrap_or_default();
    if let Some(dir) = dir {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("diagnostic.json"), format!("{text}\n"));
        }
    }
    text
}

fn execute(job: &Job, problem: Option<&Problem>, seed: u64) -> Result<Output, Error> {
    if let Job::Demo(d) = job {
        return demo::build(d.name, seed);
    }
    let p = problem.ok_or_else(|| Error::Config("missing instance".into()))?;
    match job {
        Job::SolvePr(x) => solve_pr(p, x),
        Job::SolvePc(x) => solve_pc(p, x),
        Job::Pr4pc(x) => run_pr4pc(p, x),
        Job::Theorem1(x) => theorem1(p, x, seed),
        Job::Attainability(x) => attainability(p, x),
        Job::Monotonicity(x) => monotonicity(p, x),
        Job::Sensitivity(x) => sensitivity(p, x),
        Job::Demo(_) => unreachable!(),
    }
}

fn solve_pr(p: &Problem, x: &SolvePrParams) -> Result<Output, Error> {
    let lambda = Multipliers::new(x.lambda.clone())?;
    x.solver.validate(p)?;
    let r = x.solver.solve(p, &lambda)?;
    let mut out = Output::new();
    out.work = r.evaluations;
    out.files.json(
        "result.json",
        &json!({ "instance": p.name(), "lambda": lambda, "result": r }),
    )?;
    Ok(out)
}

fn solve_pc(p: &Problem, x: &SolvePcParams) -> Result<Output, Error> {
    let theta = Threshold::new(x.theta.clone())?;
    let outcome = solve_pc_grid(p, &theta, &x.grid)?;
    let mut out = Output::new();
    out.work = match &outcome {
        PcOutcome::Optimal(r) => r.evaluations,
        PcOutcome::Infeasible { points_checked } => *points_checked,
    };
    if outcome.optimal().is_none() && x.require_feasible {
        out.status = RunStatus::FeasibilityUnmet;
    }
    out.files.json(
        "result.json",
        &json!({ "instance": p.name(), "theta": theta, "outcome": outcome }),
    )?;
    Ok(out)
}

fn run_pr4pc(p: &Problem, x: &Pr4pcParams) -> Result<Output, Error> {
    let theta = Threshold::new(x.theta.clone())?;
    let outcome = pr4pc(p, &theta, &x.strategy, &x.solver)?;
    let conformance = x.conformance.as_ref().map(|g| theorem1_conformance(p, &outcome, g)).transpose()?;
    let mut out = Output::new();
    out.work = outcome.trace.iter().filter_map(|e| e.result.as_ref()).map(|r| r.evaluations).sum();
    if outcome.status == SearchStatus::NoMultiplierFound && x.require_found {
        out.status = RunStatus::FeasibilityUnmet;
    }
    let stored: Vec<usize> = (0..outcome.trace.len()).filter(|&i| outcome.trace[i].stored).collect();
    out.files.json(
        "result.json",
        &json!({
            "instance": p.name(),
            "theta": theta,
            "status": outcome.status,
            "winner": outcome.winner,
            "winner_result": outcome.winner_result(),
            "stored": stored,
            "non_monotone": outcome.non_monotone,
            "final_bracket": outcome.final_bracket,
            "conformance": conformance,
            "trace": outcome.trace,
        }),
    )?;
    let (header, rows) = trace_table(&outcome.trace, p.dim(), p.num_constraints());
    out.files.csv("trace.csv", &header, &rows)?;

    let m = p.num_constraints();
    for k in 0..m {
        let points: Vec<(f64, f64)> = outcome
            .trace
            .iter()
            .filter_map(|e| e.result.as_ref().map(|r| (e.lambda.as_slice()[k], r.violation[k])))
            .collect();
        let name = if m == 1 {
            "curve-violation.dat".to_string()
        } else {
            format!("curve-violation-{k}.dat")
        };
        out.files.curve(&name, [&format!("lambda_{k}"), &format!("c_{k}")], &points);
    }
    if m == 1 {
        let points: Vec<(f64, f64)> = outcome
            .trace
            .iter()
            .filter_map(|e| e.result.as_ref().map(|r| (e.lambda.as_slice()[0], r.loss)))
            .collect();
        out.files.curve("curve-loss.dat", ["lambda_0", "loss"], &points);
    }
    if matches!(x.strategy, LambdaStrategy::DualAscent { .. } | LambdaStrategy::BinarySearch { .. }) {
        let points: Vec<(f64, f64)> = outcome
            .trace
            .iter()
            .enumerate()
            .map(|(i, e)| (i as f64, e.lambda.as_slice()[0]))
            .collect();
        out.files.curve("curve-lambda.dat", ["iter", "lambda_0"], &points);
    }
    Ok(out)
}

fn theorem1(p: &Problem, x: &Theorem1Params, seed: u64) -> Result<Output, Error> {
    let m = p.num_constraints();
    let mut lambdas = x
        .lambdas
        .iter()
        .map(|l| Multipliers::new(l.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    if x.random_count > 0 {
        let [lo, hi] = x.random_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidParam(format!("random_range must satisfy 0 < lo <= hi, got [{lo}, {hi}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..x.random_count {
            let l = (0..m).map(|_| (rng.gen_range(lo.ln()..=hi.ln())).exp()).collect();
            lambdas.push(Multipliers::new(l)?);
        }
    }
    let mut checks = Vec::with_capacity(lambdas.len());
    for l in &lambdas {
        checks.push(check_theorem1(p, l, &x.grid)?);
    }
    let mut out = Output::new();
    out.work = checks.iter().map(|c| c.optimum.evaluations + c.points_checked).sum();
    let all_hold = checks.iter().all(|c| c.holds);
    out.files.json(
        "result.json",
        &json!({ "instance": p.name(), "all_hold": all_hold, "checks": checks }),
    )?;
    let mut header = vec!["iter".to_string()];
    header.extend((0..m).map(|k| format!("lambda_{k}")));
    header.extend((0..p.dim()).map(|k| format!("w_{k}")));
    header.push("loss".into());
    header.extend((0..m).map(|k| format!("c_{k}")));
    header.push("holds".into());
    let rows: Vec<Vec<String>> = checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut row = vec![i.to_string()];
            row.extend(c.lambda.as_slice().iter().map(|&v| fmt_f64(v)));
            row.extend(c.optimum.w.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(c.optimum.loss));
            row.extend(c.optimum.violation.iter().map(|&v| fmt_f64(v)));
            row.push(c.holds.to_string());
            row
        })
        .collect();
    out.files.csv("trace.csv", &header, &rows)?;
    Ok(out)
}

fn attainability(p: &Problem, x: &AttainabilityParams) -> Result<Output, Error> {
    let m = p.num_constraints();
    let mut out = Output::new();
    let w_star = match (&x.w_star, &x.w_star_from_lambda) {
        (Some(w), None) => {
            let w = Assignment::new(w.clone())?;
            if w.len() != p.dim() {
                return Err(Error::DimensionMismatch {
                    what: "w_star",
                    expected: p.dim(),
                    got: w.len(),
                });
            }
            w
        }
        (None, Some(l)) => {
            let r = solve_pr_grid(p, &Multipliers::new(l.clone())?, &x.grid)?;
            out.work += r.evaluations;
            r.w
        }
        _ => return Err(Error::Config("exactly one of `w_star` and `w_star_from_lambda` is required".into())),
    };
    let att = attainability_halfspaces(p, &w_star, &x.grid)?;
    out.work += att.points_checked;
    let interval = multiplier_interval(&att.halfspaces, x.j, &x.lambda_other)?;
    let candidates = region_candidates(x, m)?;
    let region = multiplier_region_feasible(&att.halfspaces, &candidates)?;
    out.files.json(
        "result.json",
        &json!({
            "instance": p.name(),
            "w_star": att.w_star,
            "label": p.label_of(&att.w_star),
            "loss": att.loss,
            "violation": att.violation,
            "points_checked": att.points_checked,
            "halfspace_count": att.halfspaces.len(),
            "not_pc_optimal": att.not_pc_optimal,
            "interval": interval,
            "region": {
                "any": region.any,
                "points_checked": region.points_checked,
                "feasible_points": region.feasible_points,
            },
        }),
    )?;
    if x.write_halfspaces {
        let mut header: Vec<String> = (0..m).map(|k| format!("delta_c_{k}")).collect();
        header.push("delta_l".into());
        header.extend((0..p.dim()).map(|k| format!("w_{k}")));
        header.push("label".into());
        let rows: Vec<Vec<String>> = att
            .halfspaces
            .iter()
            .map(|h| {
                let mut row: Vec<String> = h.delta_c.iter().map(|&v| fmt_f64(v)).collect();
                row.push(fmt_f64(h.delta_l));
                row.extend(h.witness.iter().map(|&v| fmt_f64(v)));
                row.push(h.label.clone().unwrap_or_default());
                row
            })
            .collect();
        out.files.csv("halfspaces.csv", &header, &rows)?;
    }
    if m == 1 {
        // Each witness's bound -ΔL/ΔC against ΔC; bounds blow up as ΔC -> 0.
        let points: Vec<(f64, f64)> = att
            .halfspaces
            .iter()
            .filter(|h| h.delta_c[0].abs() >= ZERO_DELTA)
            .map(|h| (h.delta_c[0], -h.delta_l / h.delta_c[0]))
            .collect();
        out.files.curve("curve-bounds.dat", ["delta_c", "bound"], &points);
    }
    Ok(out)
}

fn region_candidates(x: &AttainabilityParams, m: usize) -> Result<Vec<Multipliers>, Error> {
    let r = x.lambda_grid;
    let total = (r.count as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if total > x.grid.budget as u128 {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: x.grid.budget,
        });
    }
    let mut candidates = vec![Multipliers::zeros(m)];
    candidates.extend(log_grid_multipliers(r.lo, r.hi, r.count, m)?);
    Ok(candidates)
}

fn monotonicity(p: &Problem, x: &MonotonicityParams) -> Result<Output, Error> {
    let lambdas = x
        .lambdas
        .iter()
        .map(|l| Multipliers::new(l.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    x.solver.validate(p)?;
    let report = monotonicity_scan(p, &lambdas, x.j, &x.solver)?;
    let mut out = Output::new();
    out.work = report.rows.len() as u64;
    out.files.json("result.json", &json!({ "instance": p.name(), "report": report }))?;
    let (m, d) = (p.num_constraints(), p.dim());
    let mut header = vec!["iter".to_string()];
    header.extend((0..m).map(|k| format!("lambda_{k}")));
    header.extend((0..d).map(|k| format!("w_{k}")));
    header.push("loss".into());
    header.extend((0..m).map(|k| format!("c_{k}")));
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string()];
            row.extend(r.lambda.as_slice().iter().map(|&v| fmt_f64(v)));
            row.extend(r.w.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(r.loss));
            row.extend(r.violation.iter().map(|&v| fmt_f64(v)));
            row
        })
        .collect();
    out.files.csv("trace.csv", &header, &rows)?;
    let points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.lambda.as_slice()[x.j], r.violation[x.j]))
        .collect();
    out.files.curve(
        "curve-monotonicity.dat",
        [&format!("lambda_{}", x.j), &format!("c_{}", x.j)],
        &points,
    );
    Ok(out)
}

fn sensitivity(p: &Problem, x: &SensitivityParams) -> Result<Output, Error> {
    let curve = sensitivity_curve(p, &x.thetas, x.lambda_range, &x.grid)?;
    let mut out = Output::new();
    out.work = curve.probes.len() as u64;
    out.files.json("result.json", &json!({ "instance": p.name(), "curve": curve }))?;
    let rows: Vec<(f64, f64)> = curve
        .rows
        .iter()
        .filter_map(|r| r.lambda.map(|l| (r.theta, l)))
        .collect();
    out.files.curve("curve-sensitivity.dat", ["theta", "lambda"], &rows);
    out.files.curve("curve-probes.dat", ["lambda", "c"], &curve.probes);
    Ok(out)
}
