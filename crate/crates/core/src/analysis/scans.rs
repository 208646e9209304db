use serde::{Deserialize, Serialize};

use super::OPT_TOL;
use crate::error::{Error, Result};
use crate::par;
use crate::problem::{Multipliers, Problem, Provenance, Threshold};
use crate::search::{log_spaced, monotone_breaks, Pr4pcOutcome, Solver};
use crate::solvers::{solve_pc_grid, solve_pr_grid, GridSpec};

/// One PR solve of a scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub lambda: Multipliers,
    pub w: Vec<f64>,
    pub loss: f64,
    pub violation: Vec<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub lambda_higher: Multipliers,
    pub lambda_lower: Multipliers,
    pub c_higher: f64,
    pub c_lower: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub j: usize,
    pub pairs_checked: u64,
    pub violations: Vec<MonotonicityViolation>,
    pub rows: Vec<ScanRow>,
}

/// Solve PR for every multiplier in `lambdas` (which may differ only in
/// component `j`) and check `λ'_j >= λ''_j ⇒ C_j(w') <= C_j(w'') + 1e-9`
/// over all pairs.
pub fn monotonicity_scan(problem: &Problem, lambdas: &[Multipliers], j: usize, solver: &Solver) -> Result<MonotonicityReport> {
    let m = problem.num_constraints();
    if j >= m {
        return Err(Error::InvalidParam(format!("constraint index {j} out of range for m = {m}")));
    }
    for l in lambdas {
        problem.check_multipliers(l)?;
    }
    if let Some(first) = lambdas.first() {
        let varies_elsewhere = lambdas.iter().any(|l| {
            l.as_slice()
                .iter()
                .zip(first.as_slice())
                .enumerate()
                .any(|(k, (a, b))| k != j && a != b)
        });
        if varies_elsewhere {
            return Err(Error::InvalidParam(format!(
                "monotonicity scan multipliers may only vary in component {j}"
            )));
        }
    }
    solver.validate(problem)?;
    let solved = par::map_range(lambdas.len(), |i| solver.solve(problem, &lambdas[i]));
    let mut rows = Vec::with_capacity(lambdas.len());
    for (lambda, r) in lambdas.iter().zip(solved) {
        let r = r?;
        rows.push(ScanRow {
            lambda: lambda.clone(),
            w: r.w.to_vec(),
            loss: r.loss,
            violation: r.violation,
            provenance: r.provenance,
        });
    }
    let points: Vec<(usize, f64, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.lambda.as_slice()[j], r.violation[j]))
        .collect();
    let violations = monotone_breaks(&points)
        .into_iter()
        .map(|b| MonotonicityViolation {
            lambda_higher: rows[b.higher].lambda.clone(),
            lambda_lower: rows[b.lower].lambda.clone(),
            c_higher: b.c_higher,
            c_lower: b.c_lower,
            provenance: rows[b.higher].provenance,
        })
        .collect();
    let n = rows.len() as u64;
    Ok(MonotonicityReport {
        j,
        pairs_checked: n * n.saturating_sub(1) / 2,
        violations,
        rows,
    })
}

/// A log-spaced multiplier range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub theta: f64,
    /// Smallest grid multiplier whose PR optimum meets `θ`; `None` if none does.
    pub lambda: Option<f64>,
    pub violation: Option<f64>,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCurve {
    pub rows: Vec<SensitivityRow>,
    /// `(λ, C(w*(λ)))` for every multiplier probed.
    pub probes: Vec<(f64, f64)>,
}

/// For each threshold, the smallest multiplier on a log grid whose PR grid
/// optimum satisfies `C(w*) <= θ` (single-constraint problems).
pub fn sensitivity_curve(problem: &Problem, thetas: &[f64], range: LambdaRange, grid: &GridSpec) -> Result<SensitivityCurve> {
    if problem.num_constraints() != 1 {
        return Err(Error::Unsupported("sensitivity curves need a single constraint".into()));
    }
    for &t in thetas {
        Threshold::scalar(t)?;
    }
    let lambdas = log_spaced(range.lo, range.hi, range.count)?;
    solve_pr_grid(problem, &Multipliers::scalar(lambdas[0])?, grid)?;
    let solved = par::map_range(lambdas.len(), |i| -> Result<(f64, f64, f64)> {
        let r = solve_pr_grid(problem, &Multipliers::scalar(lambdas[i])?, grid)?;
        Ok((lambdas[i], r.violation[0], r.loss))
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = thetas
        .iter()
        .map(|&theta| match solved.iter().find(|(_, c, _)| *c <= theta) {
            Some(&(lambda, c, loss)) => SensitivityRow {
                theta,
                lambda: Some(lambda),
                violation: Some(c),
                loss: Some(loss),
            },
            None => SensitivityRow {
                theta,
                lambda: None,
                violation: None,
                loss: None,
            },
        })
        .collect();
    Ok(SensitivityCurve {
        rows,
        probes: solved.iter().map(|&(l, c, _)| (l, c)).collect(),
    })
}

/// PR loss versus PC grid loss at `θ = C(w*)` for one trace entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformanceRow {
    pub index: usize,
    pub pr_loss: f64,
    pub pc_loss: f64,
    pub holds: bool,
}

/// Check every solved trace entry against the PC grid oracle at its own
/// violation level. With a local solver this is a report, not a guarantee.
pub fn theorem1_conformance(problem: &Problem, outcome: &Pr4pcOutcome, grid: &GridSpec) -> Result<Vec<ConformanceRow>> {
    let mut rows = Vec::new();
    for (index, e) in outcome.trace.iter().enumerate() {
        let Some(r) = &e.result else { continue };
        let theta = Threshold::new(r.violation.clone())?;
        let pc = solve_pc_grid(problem, &theta, grid)?;
        let pc_loss = pc.optimal().map_or(f64::INFINITY, |p| p.loss);
        rows.push(ConformanceRow {
            index,
            pr_loss: r.loss,
            pc_loss,
            holds: (pc_loss - r.loss).abs() <= OPT_TOL,
        });
    }
    Ok(rows)
}
