use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fd::{analytic_gradient, finite_diff_grad};
use super::DescentConfig;
use crate::error::{Error, Result};
use crate::par;
use crate::problem::{Assignment, Evaluation, Multipliers, ParamSpace, Problem, Provenance, SolveResult};

struct RestartOutcome {
    w: Vec<f64>,
    eval: Evaluation,
    reg: f64,
    converged: bool,
    evaluations: u64,
}

fn validate(config: &DescentConfig) -> Result<()> {
    if !(config.step_size > 0.0 && config.step_size.is_finite()) {
        return Err(Error::InvalidParam(format!("step_size must be > 0, got {}", config.step_size)));
    }
    if config.grad_tolerance.is_nan() || config.grad_tolerance <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "grad_tolerance must be > 0, got {}",
            config.grad_tolerance
        )));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidParam("restarts must be >= 1".into()));
    }
    if let Some(h) = config.fd_step {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::InvalidParam(format!("fd_step must be > 0, got {h}")));
        }
    }
    Ok(())
}

fn run_restart(
    problem: &Problem,
    lambda: &Multipliers,
    config: &DescentConfig,
    lo: &[f64],
    hi: &[f64],
    start: Vec<f64>,
) -> Result<RestartOutcome> {
    let d = lo.len();
    let mut w = start;
    let mut evaluations = 0u64;
    let mut converged = false;
    for _ in 0..config.max_iters {
        let grad = match analytic_gradient(problem, lambda, &w).filter(|_| config.analytic_gradients) {
            Some(g) => g,
            None => {
                evaluations += 2 * d as u64;
                finite_diff_grad(problem, lambda, &w, config.fd_step)?
            }
        };
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                instance: problem.name().to_string(),
                what: "gradient",
                w,
            });
        }
        let next: Vec<f64> = (0..d)
            .map(|k| (w[k] - config.step_size * grad[k]).clamp(lo[k], hi[k]))
            .collect();
        let moved = next.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        w = next;
        if moved / config.step_size <= config.grad_tolerance {
            converged = true;
            break;
        }
    }
    let eval = problem.evaluate_raw(&w)?;
    let reg = eval.regularized(lambda);
    Ok(RestartOutcome {
        w,
        eval,
        reg,
        converged,
        evaluations: evaluations + 1,
    })
}

/// Best-of-restarts projected gradient descent on `L + λ·C` over a box.
///
/// Starts are drawn uniformly from the box with a generator seeded by
/// `config.seed`. A restart that hits a non-finite value is dropped and noted
/// in `diagnostics`; the solve fails only if every restart does.
pub fn solve_pr_descent(problem: &Problem, lambda: &Multipliers, config: &DescentConfig) -> Result<SolveResult> {
    problem.check_multipliers(lambda)?;
    validate(config)?;
    let ParamSpace::Box { lo, hi } = problem.space() else {
        return Err(Error::Unsupported("descent needs a box space".into()));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<Vec<f64>> = (0..config.restarts)
        .map(|_| {
            lo.iter()
                .zip(hi)
                .map(|(&l, &h)| if l < h { rng.gen_range(l..=h) } else { l })
                .collect()
        })
        .collect();
    let outcomes = par::map_range(starts.len(), |r| run_restart(problem, lambda, config, lo, hi, starts[r].clone()));

    let mut diagnostics = Vec::new();
    let mut best: Option<RestartOutcome> = None;
    let mut evaluations = 0;
    let mut first_error = None;
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                evaluations += o.evaluations;
                // Strictly smaller objective wins; equal values keep the earlier restart.
                if best.as_ref().is_none_or(|b| o.reg.total_cmp(&b.reg) == Ordering::Less) {
                    best = Some(o);
                }
            }
            Err(e) => {
                diagnostics.push(format!("restart {r} aborted: {e}"));
                first_error.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_error.expect("at least one restart ran"));
    };
    Ok(SolveResult {
        w: Assignment::new(best.w)?,
        label: None,
        loss: best.eval.loss,
        violation: best.eval.violation,
        reg_objective: best.reg,
        provenance: Provenance::DescentLocal,
        converged: best.converged,
        evaluations,
        diagnostics,
    })
}
