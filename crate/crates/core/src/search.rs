//! Multiplier search: solve PR(λ) for a sequence of candidate multipliers,
//! store the optima that meet the threshold, and return the stored optimum
//! with the smallest loss.
//!
//! Candidates come from a [`LambdaStrategy`]: an explicit list, a log-spaced
//! grid, bisection on a single multiplier, or projected subgradient ascent
//! `λ ← max(0, λ + η (C(w*) - θ))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::problem::{Multipliers, Problem, SolveResult, Threshold};
use crate::solvers::{solve_pr_descent, solve_pr_grid, DescentConfig, GridPoints, GridSpec};

/// Slack allowed when checking `λ' >= λ'' ⇒ C(w') <= C(w'')`.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Backend used for every PR solve in a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Solver {
    Grid(GridSpec),
    Descent(DescentConfig),
}

impl Solver {
    pub fn solve(&self, problem: &Problem, lambda: &Multipliers) -> Result<SolveResult> {
        match self {
            Solver::Grid(g) => solve_pr_grid(problem, lambda, g),
            Solver::Descent(d) => solve_pr_descent(problem, lambda, d),
        }
    }

    /// Reject configurations that would fail for every λ (budget, space kind).
    pub fn validate(&self, problem: &Problem) -> Result<()> {
        match self {
            Solver::Grid(g) => GridPoints::new(problem, g).map(|_| ()),
            Solver::Descent(_) if problem.space().is_finite() => {
                Err(Error::Unsupported("descent needs a box space".into()))
            }
            Solver::Descent(_) => Ok(()),
        }
    }
}

/// Where the candidate multipliers come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum LambdaStrategy {
    ExplicitList {
        lambdas: Vec<Multipliers>,
    },
    /// `count` log-spaced values in `[lo, hi]` per constraint (product grid when m > 1).
    LogGrid {
        lo: f64,
        hi: f64,
        count: usize,
    },
    BinarySearch {
        lo: f64,
        hi: f64,
        tol: f64,
    },
    DualAscent {
        lambda0: Multipliers,
        eta: f64,
        iters: usize,
    },
}

/// `count` log-spaced values from `lo` to `hi`; both ends are exact.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
        return Err(Error::InvalidParam(format!(
            "log grid needs 0 < lo <= hi and count >= 1, got [{lo}, {hi}] x {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let ratio = (hi / lo).ln();
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                hi
            } else {
                lo * (ratio * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Product of per-dimension log grids, first dimension slowest.
pub fn log_grid_multipliers(lo: f64, hi: f64, count: usize, m: usize) -> Result<Vec<Multipliers>> {
    let axis = log_spaced(lo, hi, count)?;
    let total = count
        .checked_pow(m as u32)
        .filter(|t| *t <= 10_000_000)
        .ok_or_else(|| Error::InvalidParam(format!("log grid of {count}^{m} multipliers is too large")))?;
    (0..total)
        .map(|mut i| {
            let mut lambda = vec![0.0; m];
            for k in (0..m).rev() {
                lambda[k] = axis[i % count];
                i /= count;
            }
            Multipliers::new(lambda)
        })
        .collect()
}

/// One PR solve of a search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub lambda: Multipliers,
    pub result: Option<SolveResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// `C(w*) <= θ`: the entry was stored.
    pub stored: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Found,
    NoMultiplierFound,
}

/// A pair of optima that breaks `λ'_j >= λ''_j ⇒ C_j(w') <= C_j(w'')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneBreak {
    /// Trace index with the larger `λ_j`.
    pub higher: usize,
    /// Trace index with the smaller `λ_j`.
    pub lower: usize,
    pub lambda_higher: f64,
    pub lambda_lower: f64,
    pub c_higher: f64,
    pub c_lower: f64,
}

/// Stored solutions, winner and full trace of a multiplier search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pr4pcOutcome {
    pub theta: Threshold,
    pub trace: Vec<TraceEntry>,
    /// Index into `trace` of the stored entry with the smallest loss.
    pub winner: Option<usize>,
    pub status: SearchStatus,
    /// Monotonicity breaks seen among the probes (bisection only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub non_monotone: Vec<MonotoneBreak>,
    /// Final `[lo, hi]` of a bisection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_bracket: Option<[f64; 2]>,
}

impl Pr4pcOutcome {
    fn from_trace(theta: Threshold, trace: Vec<TraceEntry>) -> Self {
        let mut winner: Option<usize> = None;
        for (i, e) in trace.iter().enumerate() {
            if !e.stored {
                continue;
            }
            let loss = e.result.as_ref().expect("stored entries have results").loss;
            // Strict improvement only: ties go to the earliest entry.
            if winner.is_none_or(|w| loss < trace[w].result.as_ref().unwrap().loss) {
                winner = Some(i);
            }
        }
        let status = if winner.is_some() {
            SearchStatus::Found
        } else {
            SearchStatus::NoMultiplierFound
        };
        Pr4pcOutcome {
            theta,
            trace,
            winner,
            status,
            non_monotone: Vec::new(),
            final_bracket: None,
        }
    }

    pub fn stored(&self) -> impl Iterator<Item = &TraceEntry> {
        self.trace.iter().filter(|e| e.stored)
    }

    pub fn winner_entry(&self) -> Option<&TraceEntry> {
        self.winner.map(|i| &self.trace[i])
    }

    pub fn winner_result(&self) -> Option<&SolveResult> {
        self.winner_entry().and_then(|e| e.result.as_ref())
    }
}

fn entry(lambda: Multipliers, solved: Result<SolveResult>, theta: &Threshold) -> TraceEntry {
    match solved {
        Ok(r) => TraceEntry {
            stored: theta.admits(&r.violation),
            lambda,
            result: Some(r),
            error: None,
        },
        Err(e) => TraceEntry {
            lambda,
            result: None,
            error: Some(e.to_string()),
            stored: false,
        },
    }
}

fn check_inputs(problem: &Problem, theta: &Threshold, solver: &Solver) -> Result<()> {
    problem.check_threshold(theta)?;
    solver.validate(problem)
}

/// Run the multiplier search with the given candidate strategy.
pub fn pr4pc(problem: &Problem, theta: &Threshold, strategy: &LambdaStrategy, solver: &Solver) -> Result<Pr4pcOutcome> {
    match strategy {
        LambdaStrategy::ExplicitList { lambdas } => sweep(problem, theta, lambdas, solver),
        LambdaStrategy::LogGrid { lo, hi, count } => {
            let lambdas = log_grid_multipliers(*lo, *hi, *count, problem.num_constraints())?;
            sweep(problem, theta, &lambdas, solver)
        }
        LambdaStrategy::BinarySearch { lo, hi, tol } => binary_search_multiplier(problem, theta, [*lo, *hi], *tol, solver),
        LambdaStrategy::DualAscent { lambda0, eta, iters } => dual_ascent(problem, theta, lambda0, *eta, *iters, solver),
    }
}

/// Solve PR independently for every candidate, in parallel; the trace keeps candidate order.
pub fn sweep(problem: &Problem, theta: &Threshold, lambdas: &[Multipliers], solver: &Solver) -> Result<Pr4pcOutcome> {
    check_inputs(problem, theta, solver)?;
    for l in lambdas {
        problem.check_multipliers(l)?;
    }
    let trace = par::map_range(lambdas.len(), |i| {
        entry(lambdas[i].clone(), solver.solve(problem, &lambdas[i]), theta)
    });
    Ok(Pr4pcOutcome::from_trace(theta.clone(), trace))
}

/// All pairs of `(λ_j, C_j)` observations violating monotonicity.
pub(crate) fn monotone_breaks(points: &[(usize, f64, f64)]) -> Vec<MonotoneBreak> {
    let mut out = Vec::new();
    for (a, &(ia, la, ca)) in points.iter().enumerate() {
        for &(ib, lb, cb) in &points[a + 1..] {
            let (hi, lo) = if la >= lb {
                ((ia, la, ca), (ib, lb, cb))
            } else {
                ((ib, lb, cb), (ia, la, ca))
            };
            if hi.2 > lo.2 + MONOTONE_TOL {
                out.push(MonotoneBreak {
                    higher: hi.0,
                    lower: lo.0,
                    lambda_higher: hi.1,
                    lambda_lower: lo.1,
                    c_higher: hi.2,
                    c_lower: lo.2,
                });
            }
        }
    }
    out
}

/// Bisection on a single multiplier.
///
/// The bracket must satisfy `C(w*(lo)) >= θ >= C(w*(hi))`. Feasible midpoints
/// move `hi` down, infeasible ones move `lo` up, until `hi - lo <= tol`.
/// Probes that contradict monotonicity are reported in `non_monotone`.
pub fn binary_search_multiplier(
    problem: &Problem,
    theta: &Threshold,
    bracket: [f64; 2],
    tol: f64,
    solver: &Solver,
) -> Result<Pr4pcOutcome> {
    if problem.num_constraints() != 1 {
        return Err(Error::Unsupported(format!(
            "binary search needs a single constraint, problem has {}",
            problem.num_constraints()
        )));
    }
    check_inputs(problem, theta, solver)?;
    let [mut lo, mut hi] = bracket;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) || tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "binary search needs 0 <= lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"
        )));
    }
    let t = theta.as_slice()[0];
    let mut trace = Vec::new();
    let probe = |lambda: f64, trace: &mut Vec<TraceEntry>| -> Result<Option<f64>> {
        let l = Multipliers::scalar(lambda)?;
        let solved = solver.solve(problem, &l);
        let e = entry(l, solved, theta);
        let c = e.result.as_ref().map(|r| r.violation[0]);
        trace.push(e);
        Ok(c)
    };
    let c_lo = probe(lo, &mut trace)?;
    let c_hi = probe(hi, &mut trace)?;
    match (c_lo, c_hi) {
        (Some(c_lo), Some(c_hi)) if c_lo >= t && t >= c_hi => {}
        (Some(c_lo), Some(c_hi)) => {
            return Err(Error::InvalidBracket {
                lo,
                hi,
                c_lo,
                c_hi,
                theta: t,
            })
        }
        _ => {
            let msg = trace.iter().filter_map(|e| e.error.clone()).collect::<Vec<_>>().join("; ");
            return Err(Error::Unsupported(format!("bracket endpoint solve failed: {msg}")));
        }
    }
    // Each halving shrinks the bracket; 2000 iterations covers any finite f64 range.
    let mut iterations = 0;
    while hi - lo > tol && iterations < 2000 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match probe(mid, &mut trace)? {
            Some(c) if c <= t => hi = mid,
            Some(_) => lo = mid,
            None => break,
        }
    }
    let points: Vec<(usize, f64, f64)> = trace
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.result.as_ref().map(|r| (i, e.lambda.as_slice()[0], r.violation[0])))
        .collect();
    let mut outcome = Pr4pcOutcome::from_trace(theta.clone(), trace);
    outcome.non_monotone = monotone_breaks(&points);
    outcome.final_bracket = Some([lo, hi]);
    Ok(outcome)
}

/// Projected subgradient ascent on the multipliers with constant step `eta`.
///
/// A failed solve is recorded and the next iteration reuses the same λ.
pub fn dual_ascent(
    problem: &Problem,
    theta: &Threshold,
    lambda0: &Multipliers,
    eta: f64,
    iters: usize,
    solver: &Solver,
) -> Result<Pr4pcOutcome> {
    check_inputs(problem, theta, solver)?;
    problem.check_multipliers(lambda0)?;
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParam(format!("dual ascent step eta must be > 0, got {eta}")));
    }
    let mut lambda = lambda0.clone();
    let mut trace = Vec::with_capacity(iters);
    for _ in 0..iters {
        let e = entry(lambda.clone(), solver.solve(problem, &lambda), theta);
        if let Some(r) = &e.result {
            let next = lambda
                .as_slice()
                .iter()
                .zip(&r.violation)
                .zip(theta.as_slice())
                .map(|((l, c), t)| (l + eta * (c - t)).max(0.0))
                .collect();
            trace.push(e);
            lambda = Multipliers::new(next)?;
        } else {
            trace.push(e);
        }
    }
    Ok(Pr4pcOutcome::from_trace(theta.clone(), trace))
}
