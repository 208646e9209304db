//! Pre-wired experiments for the four figure phenomena and the relaxation pitfall.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::export::{trace_table, ArtifactSet};
use super::runner::{Output, RunStatus};
use crate::analysis::{
    attainability_halfspaces, monotonicity_scan, multiplier_interval, sensitivity_curve, LambdaRange,
};
use crate::error::{Error, Result};
use crate::instances::{balanced_classification_dataset, make_instance, BalancedClassification, InstanceName, InstanceSpec};
use crate::problem::{Multipliers, Problem, Threshold};
use crate::search::{dual_ascent, log_spaced, pr4pc, LambdaStrategy, SearchStatus, Solver};
use crate::solvers::{solve_pr_descent, solve_pr_grid, DescentConfig, GridPoints, GridSpec, TieBreak};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoName {
    Fig1a,
    Fig1b,
    Fig2a,
    Fig2b,
    RelaxPitfall,
}

impl DemoName {
    pub const ALL: [DemoName; 5] = [
        DemoName::Fig1a,
        DemoName::Fig1b,
        DemoName::Fig2a,
        DemoName::Fig2b,
        DemoName::RelaxPitfall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DemoName::Fig1a => "fig1a",
            DemoName::Fig1b => "fig1b",
            DemoName::Fig2a => "fig2a",
            DemoName::Fig2b => "fig2b",
            DemoName::RelaxPitfall => "relax_pitfall",
        }
    }

    pub fn expected_signature(self) -> &'static str {
        match self {
            DemoName::Fig1a => {
                "plateau: at lambda=1 the regularized objective is flat on [0,1] (range <= 1e-9); \
                 the PR optimum jumps from w=0 (C=1) at lambda=0.99 to w=1 (C=0) at lambda=1.01"
            }
            DemoName::Fig1b => {
                "two_point_tie: at lambda=1 both a (L=0, C=1) and b (L=1, C=0) reach the regularized \
                 minimum 1, and the tie rule alone decides which one PR returns"
            }
            DemoName::Fig2a => "attainability interval empty AND pr4pc stored set empty",
            DemoName::Fig2b => {
                "vanishing_gradient: the smallest admissible multiplier scales as lambda ~ 1/theta; \
                 multiplier growth unbounded as theta -> 0"
            }
            DemoName::RelaxPitfall => {
                "balanced_classification: relaxed balance penalty <= 1e-6 with every output in [0.45, 0.55]"
            }
        }
    }
}

impl std::fmt::Display for DemoName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DemoName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DemoName::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown demo `{s}`")))
    }
}

struct Report {
    observed: bool,
    facts: Vec<(String, String)>,
    details: Value,
}

impl Report {
    fn new() -> Self {
        Report {
            observed: true,
            facts: Vec::new(),
            details: json!({}),
        }
    }

    fn fact(&mut self, key: &str, value: impl std::fmt::Display) {
        self.facts.push((key.to_string(), value.to_string()));
    }

    /// Record a condition of the signature.
    fn require(&mut self, what: &str, ok: bool) {
        self.observed &= ok;
        self.fact(what, if ok { "yes" } else { "NO" });
    }
}

pub(crate) fn build(name: DemoName, seed: u64) -> Result<Output> {
    let mut files = ArtifactSet::new();
    let mut report = Report::new();
    let work = match name {
        DemoName::Fig1a => fig1a(&mut files, &mut report, seed)?,
        DemoName::Fig1b => fig1b(&mut files, &mut report)?,
        DemoName::Fig2a => fig2a(&mut files, &mut report)?,
        DemoName::Fig2b => fig2b(&mut files, &mut report)?,
        DemoName::RelaxPitfall => relax_pitfall(&mut files, &mut report)?,
    };
    let mut summary = format!(
        "demo: {name}\nseed: {seed}\nexpected signature: {}\nobserved: {}\n\n",
        name.expected_signature(),
        if report.observed { "yes" } else { "no" }
    );
    for (k, v) in &report.facts {
        let _ = writeln!(summary, "{k}: {v}");
    }
    files.json(
        "result.json",
        &json!({
            "demo": name,
            "seed": seed,
            "expected_signature": name.expected_signature(),
            "observed": report.observed,
            "details": report.details,
        }),
    )?;
    files.text("summary.txt", summary);
    Ok(Output {
        files,
        status: RunStatus::Ok,
        work,
    })
}

fn instance(name: InstanceName) -> Result<Problem> {
    make_instance(&InstanceSpec::new(name))
}

fn scalar(l: f64) -> Result<Multipliers> {
    Multipliers::scalar(l)
}

fn fig1a(files: &mut ArtifactSet, report: &mut Report, seed: u64) -> Result<u64> {
    let p = instance(InstanceName::Plateau)?;
    let grid = GridSpec::with_points(2001);
    let points = GridPoints::new(&p, &grid)?;
    let one = scalar(1.0)?;
    let mut objective = Vec::with_capacity(points.len());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..points.len() {
        let w = points.point(i);
        let v = p.evaluate_raw(&w)?.regularized(&one);
        objective.push((w[0], v));
        if w[0] <= 1.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    files.curve("curve-objective.dat", ["w", "regularized_at_lambda_1"], &objective);
    report.fact("objective range on [0,1] at lambda=1", hi - lo);
    report.require("flat to 1e-9", hi - lo <= 1e-9);

    let below = solve_pr_grid(&p, &scalar(0.99)?, &grid)?;
    let above = solve_pr_grid(&p, &scalar(1.01)?, &grid)?;
    report.fact("lambda=0.99 optimum (w, C)", format!("({}, {})", below.w[0], below.violation[0]));
    report.fact("lambda=1.01 optimum (w, C)", format!("({}, {})", above.w[0], above.violation[0]));
    report.require(
        "jump w=0 -> w=1",
        below.w[0] == 0.0 && below.violation[0] == 1.0 && above.w[0] == 1.0 && above.violation[0] == 0.0,
    );

    let solver = Solver::Grid(grid.clone());
    let lambdas: Vec<Multipliers> = log_spaced(0.25, 4.0, 33)?.into_iter().map(scalar).collect::<Result<_>>()?;
    let scan = monotonicity_scan(&p, &lambdas, 0, &solver)?;
    let sweep_curve: Vec<(f64, f64)> = scan.rows.iter().map(|r| (r.lambda.as_slice()[0], r.violation[0])).collect();
    files.curve("curve-violation.dat", ["lambda", "c"], &sweep_curve);
    report.fact("monotonicity pairs checked (grid)", scan.pairs_checked);
    report.require("no monotonicity violations (grid)", scan.violations.is_empty());

    // Local descent on the flat region stops wherever it starts.
    let mut stalls = Vec::new();
    for r in 0..4u64 {
        let config = DescentConfig {
            restarts: 1,
            seed: seed.wrapping_add(r),
            ..DescentConfig::default()
        };
        let s = solve_pr_descent(&p, &one, &config)?;
        stalls.push(json!({ "seed": config.seed, "w": s.w, "violation": s.violation, "converged": s.converged }));
    }
    report.fact(
        "descent end points at lambda=1",
        stalls.iter().map(|s| s["w"][0].to_string()).collect::<Vec<_>>().join(", "),
    );
    report.details = json!({
        "objective_range": hi - lo,
        "optimum_below": below,
        "optimum_above": above,
        "monotonicity": scan,
        "descent_restarts": stalls,
    });
    Ok(points.len() as u64 * 3 + lambdas.len() as u64 * points.len() as u64)
}

fn fig1b(files: &mut ArtifactSet, report: &mut Report) -> Result<u64> {
    let p = instance(InstanceName::TwoPointTie)?;
    let low = GridSpec::default();
    let high = GridSpec {
        tie_break: TieBreak::PreferHighViolation,
        ..GridSpec::default()
    };
    let one = scalar(1.0)?;
    let mut values = Vec::new();
    for (label, w) in [("a", 0.0), ("b", 1.0)] {
        let e = p.evaluate_raw(&[w])?;
        values.push(json!({ "label": label, "loss": e.loss, "violation": e.violation, "regularized": e.regularized(&one) }));
        report.fact(
            &format!("{label}: (L, C, L + C)"),
            format!("({}, {}, {})", e.loss, e.violation[0], e.regularized(&one)),
        );
    }
    let tie = values[0]["regularized"] == values[1]["regularized"];
    report.require("a and b tie at lambda=1", tie);
    let pick_low = solve_pr_grid(&p, &one, &low)?;
    let pick_high = solve_pr_grid(&p, &one, &high)?;
    let (ll, lh) = (pick_low.label.clone().unwrap_or_default(), pick_high.label.clone().unwrap_or_default());
    report.fact("low-violation tie rule returns", &ll);
    report.fact("high-violation tie rule returns", &lh);
    report.require("tie rule decides", ll == "b" && lh == "a");

    let theta = Threshold::scalar(0.0)?;
    let zero = Multipliers::zeros(1);
    let ascent_low = dual_ascent(&p, &theta, &zero, 0.5, 8, &Solver::Grid(low))?;
    let ascent_high = dual_ascent(&p, &theta, &zero, 0.5, 8, &Solver::Grid(high))?;
    let path = |o: &crate::search::Pr4pcOutcome| -> Vec<(f64, f64)> {
        o.trace.iter().enumerate().map(|(i, e)| (i as f64, e.lambda.as_slice()[0])).collect()
    };
    files.curve("curve-dual-ascent.dat", ["iter", "lambda"], &path(&ascent_low));
    files.curve("curve-dual-ascent-high.dat", ["iter", "lambda"], &path(&ascent_high));
    let (header, rows) = trace_table(&ascent_low.trace, 1, 1);
    files.csv("trace.csv", &header, &rows)?;
    let fmt_path = |o: &crate::search::Pr4pcOutcome| {
        o.trace.iter().map(|e| e.lambda.as_slice()[0].to_string()).collect::<Vec<_>>().join(", ")
    };
    report.fact("dual ascent lambdas (low rule)", fmt_path(&ascent_low));
    report.fact("dual ascent lambdas (high rule)", fmt_path(&ascent_high));
    report.details = json!({
        "values_at_lambda_1": values,
        "pick_low_violation": pick_low,
        "pick_high_violation": pick_high,
        "dual_ascent_low": ascent_low,
        "dual_ascent_high": ascent_high,
    });
    Ok(4 + 2 * 2 * 8)
}

fn fig2a(files: &mut ArtifactSet, report: &mut Report) -> Result<u64> {
    let table = make_instance(&InstanceSpec::unattainable_table())?;
    let grid = GridSpec::default();
    let w_star = table
        .space()
        .point_labeled("w*")
        .cloned()
        .ok_or_else(|| Error::Config("table has no w* row".into()))?;
    let att = attainability_halfspaces(&table, &w_star, &grid)?;
    let interval = multiplier_interval(&att.halfspaces, 0, &[])?;
    report.fact("table interval lower", interval.lower);
    report.fact("table interval upper", interval.upper);
    report.require("attainability interval empty", !interval.feasible);

    let theta = Threshold::new(att.violation.clone())?;
    let strategy = LambdaStrategy::LogGrid {
        lo: 1e-3,
        hi: 1e3,
        count: 200,
    };
    let table_search = pr4pc(&table, &theta, &strategy, &Solver::Grid(grid))?;
    let star_stored = table_search.stored().any(|e| e.result.as_ref().is_some_and(|r| r.w == w_star));
    report.fact("table stored entries", table_search.stored().count());
    report.require("table never stores w*", !star_stored);

    let unbounded = instance(InstanceName::LogUnbounded)?;
    let w_max = match unbounded.space() {
        crate::problem::ParamSpace::Box { hi, .. } => hi[0],
        _ => unreachable!("log_unbounded has a box space"),
    };
    let ugrid = GridSpec::with_points(10_001);
    let search = pr4pc(&unbounded, &Threshold::scalar(1.0)?, &strategy, &Solver::Grid(ugrid))?;
    let pinned = search.trace.iter().all(|e| e.result.as_ref().is_some_and(|r| r.w[0] == w_max));
    report.fact("log_unbounded w_max", w_max);
    report.fact("log_unbounded stored entries", search.stored().count());
    report.require("every log_unbounded optimum pinned at w_max", pinned);
    report.require(
        "pr4pc stored set empty",
        search.status == SearchStatus::NoMultiplierFound && search.stored().count() == 0,
    );
    let curve: Vec<(f64, f64)> = search
        .trace
        .iter()
        .filter_map(|e| e.result.as_ref().map(|r| (e.lambda.as_slice()[0], r.w[0])))
        .collect();
    files.curve("curve-log-unbounded.dat", ["lambda", "w_opt"], &curve);
    let (header, rows) = trace_table(&search.trace, 1, 1);
    files.csv("trace.csv", &header, &rows)?;
    report.details = json!({
        "table": {
            "w_star": att.w_star,
            "halfspaces": att.halfspaces,
            "interval": interval,
            "stored": table_search.stored().map(|e| &e.lambda).collect::<Vec<_>>(),
        },
        "log_unbounded": {
            "w_max": w_max,
            "status": search.status,
            "stored_count": search.stored().count(),
        },
    });
    Ok(att.points_checked + 200 * 3 + 200 * 10_001)
}

fn fig2b(files: &mut ArtifactSet, report: &mut Report) -> Result<u64> {
    let p = instance(InstanceName::VanishingGradient)?;
    let thetas = [0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];
    let range = LambdaRange {
        lo: 0.1,
        hi: 1e4,
        count: 101,
    };
    let step = ((range.hi / range.lo).ln() / (range.count - 1) as f64).exp();
    let curve = sensitivity_curve(&p, &thetas, range, &GridSpec::with_points(100_001))?;
    let mut scaled = true;
    let mut previous = 0.0;
    let mut growing = true;
    for r in &curve.rows {
        match r.lambda {
            Some(l) => {
                report.fact(
                    &format!("theta={}", r.theta),
                    format!("lambda={l}, lambda*theta={}", l * r.theta),
                );
                scaled &= (l * r.theta).ln().abs() <= step.ln() + 1e-9;
                growing &= l >= previous;
                previous = l;
            }
            None => {
                report.fact(&format!("theta={}", r.theta), "no multiplier on the grid");
                scaled = false;
            }
        }
    }
    report.fact("log-grid step ratio", step);
    report.require("lambda within one grid step of 1/theta", scaled);
    report.require("multiplier growth unbounded as theta -> 0", scaled && growing);
    let points: Vec<(f64, f64)> = curve.rows.iter().filter_map(|r| r.lambda.map(|l| (r.theta, l))).collect();
    files.curve("curve-sensitivity.dat", ["theta", "lambda"], &points);
    files.curve("curve-probes.dat", ["lambda", "c"], &curve.probes);
    // At the optimum the constraint's slope equals -C = -1/lambda.
    let slopes: Vec<(f64, f64)> = curve.probes.iter().map(|&(l, c)| (l, -c)).collect();
    files.curve("curve-constraint-slope.dat", ["lambda", "dc_dw"], &slopes);
    report.details = json!({ "step_ratio": step, "curve": curve });
    Ok(curve.probes.len() as u64 * 100_001)
}

fn relax_pitfall(files: &mut ArtifactSet, report: &mut Report) -> Result<u64> {
    let p = instance(InstanceName::BalancedClassification)?;
    let model = BalancedClassification {
        data: balanced_classification_dataset(),
    };
    let grid = GridSpec::with_points(401);
    let solver = Solver::Grid(grid.clone());
    let free = solve_pr_grid(&p, &Multipliers::zeros(1), &grid)?;
    let strategy = LambdaStrategy::LogGrid {
        lo: 1e-2,
        hi: 1e2,
        count: 9,
    };
    let search = pr4pc(&p, &Threshold::scalar(1e-6)?, &strategy, &solver)?;
    let win = search
        .winner_result()
        .ok_or_else(|| Error::Unsupported("no multiplier met the balance threshold".into()))?;
    let outputs = model.outputs(&win.w);
    let (lo, hi) = outputs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    let describe = |w: &[f64]| {
        let y = model.outputs(w);
        json!({
            "w": w,
            "loss": p.evaluate_raw(w).map(|e| e.loss).unwrap_or(f64::NAN),
            "balance_penalty": p.evaluate_raw(w).map(|e| e.violation[0]).unwrap_or(f64::NAN),
            "binary_balance": model.binary_balance(w),
            "accuracy": model.accuracy(w),
            "outputs": y,
        })
    };
    report.fact("unconstrained optimum w", format!("({}, {})", free.w[0], free.w[1]));
    report.fact("unconstrained balance penalty", free.violation[0]);
    report.fact("unconstrained accuracy", model.accuracy(&free.w));
    report.fact("pr4pc winner lambda", search.winner_entry().map_or(f64::NAN, |e| e.lambda.as_slice()[0]));
    report.fact("pr4pc winner w", format!("({}, {})", win.w[0], win.w[1]));
    report.fact("balance penalty", win.violation[0]);
    report.fact("output range", format!("[{lo}, {hi}]"));
    report.fact("accuracy", model.accuracy(&win.w));
    report.fact("balance of rounded predictions", model.binary_balance(&win.w));
    report.require("balance penalty <= 1e-6", win.violation[0] <= 1e-6);
    report.require("all outputs within 0.5 +- 0.05", lo >= 0.45 && hi <= 0.55);

    // A confident classifier whose rounded predictions are exactly balanced.
    let confident = [4.0, -2.0];
    let c = p.evaluate_raw(&confident)?;
    report.fact(
        "confident balanced alternative (w, loss, penalty, rounded balance)",
        format!(
            "((4, -2), {}, {}, {})",
            c.loss,
            c.violation[0],
            model.binary_balance(&confident)
        ),
    );
    report.fact("winner loss", win.loss);
    let xs: Vec<f64> = model.data.inputs.iter().map(|x| x[0]).collect();
    let pairs = |y: Vec<f64>| -> Vec<(f64, f64)> { xs.iter().copied().zip(y).collect() };
    files.curve("curve-outputs.dat", ["x", "y"], &pairs(outputs));
    files.curve("curve-outputs-unconstrained.dat", ["x", "y"], &pairs(model.outputs(&free.w)));
    let (header, rows) = trace_table(&search.trace, 2, 1);
    files.csv("trace.csv", &header, &rows)?;
    report.details = json!({
        "unconstrained": describe(&free.w),
        "winner_lambda": search.winner_entry().map(|e| &e.lambda),
        "winner": describe(&win.w),
        "confident_alternative": describe(&confident),
    });
    Ok(10 * 401 * 401)
}
