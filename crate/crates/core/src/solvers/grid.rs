//! Exhaustive grid oracle for PR and PC.
//!
//! The minimum is found in two order-independent passes: the exact minimal
//! objective value first, then the best point under the tie-break among all
//! points within `tie_rel_tol · max(1, |min|)` of it.

use std::cmp::Ordering;

use super::{GridSpec, PcOutcome, TieBreak};
use crate::error::{Error, Result};
use crate::par;
use crate::problem::{Assignment, Evaluation, Multipliers, ParamSpace, Problem, Provenance, SolveResult, Threshold};

/// The evaluation points of a problem: a uniform grid over a box, or the
/// points of a finite space.
#[derive(Debug, Clone)]
pub struct GridPoints<'a> {
    kind: Kind<'a>,
    len: usize,
}

#[derive(Debug, Clone)]
enum Kind<'a> {
    Box { lo: &'a [f64], hi: &'a [f64], n: usize },
    Finite(&'a [Assignment]),
}

impl<'a> GridPoints<'a> {
    /// Lay out the grid, refusing it when it exceeds the budget.
    pub fn new(problem: &'a Problem, spec: &GridSpec) -> Result<Self> {
        match problem.space() {
            ParamSpace::Box { lo, hi } => {
                if spec.points_per_dim < 2 {
                    return Err(Error::InvalidParam(format!(
                        "points_per_dim must be >= 2, got {}",
                        spec.points_per_dim
                    )));
                }
                let required = (spec.points_per_dim as u128).checked_pow(lo.len() as u32).unwrap_or(u128::MAX);
                if required > spec.budget as u128 {
                    return Err(Error::BudgetExceeded {
                        required,
                        budget: spec.budget,
                    });
                }
                Ok(GridPoints {
                    kind: Kind::Box {
                        lo,
                        hi,
                        n: spec.points_per_dim,
                    },
                    len: required as usize,
                })
            }
            ParamSpace::Finite { points, .. } => {
                if points.len() as u128 > spec.budget as u128 {
                    return Err(Error::BudgetExceeded {
                        required: points.len() as u128,
                        budget: spec.budget,
                    });
                }
                Ok(GridPoints {
                    kind: Kind::Finite(points),
                    len: points.len(),
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Point `i`. Box grids are laid out with dimension 0 most significant, so
    /// index order is lexicographic order of the coordinates.
    pub fn point(&self, i: usize) -> Vec<f64> {
        match &self.kind {
            Kind::Box { lo, hi, n } => {
                let d = lo.len();
                let mut w = vec![0.0; d];
                let mut rest = i;
                for k in (0..d).rev() {
                    let digit = rest % n;
                    rest /= n;
                    w[k] = if digit + 1 == *n {
                        hi[k]
                    } else {
                        lo[k] + (hi[k] - lo[k]) * digit as f64 / (*n - 1) as f64
                    };
                }
                w
            }
            Kind::Finite(points) => points[i].to_vec(),
        }
    }

    /// Grid spacing along dimension `k` (0 for finite spaces).
    pub fn step(&self, k: usize) -> f64 {
        match &self.kind {
            Kind::Box { lo, hi, n } => (hi[k] - lo[k]) / (*n - 1) as f64,
            Kind::Finite(_) => 0.0,
        }
    }

    pub fn provenance(&self) -> Provenance {
        match self.kind {
            Kind::Box { .. } => Provenance::GridGlobal,
            Kind::Finite(_) => Provenance::FiniteEnumeration,
        }
    }
}

/// Lexicographic comparison under `total_cmp`.
pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

struct Candidate {
    index: usize,
    w: Vec<f64>,
    eval: Evaluation,
}

fn better(a: Candidate, b: Candidate, tie: TieBreak) -> Candidate {
    let by_c = lex_cmp(&a.eval.violation, &b.eval.violation);
    let by_c = match tie {
        TieBreak::PreferLowViolation => by_c,
        TieBreak::PreferHighViolation => by_c.reverse(),
    };
    let ord = by_c.then_with(|| lex_cmp(&a.w, &b.w)).then(a.index.cmp(&b.index));
    if ord.is_le() {
        a
    } else {
        b
    }
}

type Scan = std::result::Result<Option<f64>, (usize, Error)>;

fn merge_min(a: Scan, b: Scan) -> Scan {
    match (a, b) {
        (Err(x), Err(y)) => Err(if x.0 <= y.0 { x } else { y }),
        (Err(x), _) | (_, Err(x)) => Err(x),
        (Ok(Some(x)), Ok(Some(y))) => Ok(Some(x.min(y))),
        (Ok(x), Ok(y)) => Ok(x.or(y)),
    }
}

/// Argmin of `value` over admissible grid points, with the tie-break of `spec`.
pub(crate) fn argmin<V, A>(
    problem: &Problem,
    points: &GridPoints<'_>,
    spec: &GridSpec,
    value: V,
    admissible: A,
) -> Result<Option<(Vec<f64>, Evaluation, f64)>>
where
    V: Fn(&Evaluation) -> f64 + Sync + Send,
    A: Fn(&Evaluation) -> bool + Sync + Send,
{
    let vmin = par::reduce_range(
        points.len(),
        || Ok(None),
        |i| match problem.evaluate_raw(&points.point(i)) {
            Ok(e) if admissible(&e) => Ok(Some(value(&e))),
            Ok(_) => Ok(None),
            Err(e) => Err((i, e)),
        },
        merge_min,
    )
    .map_err(|(_, e)| e)?;
    let Some(vmin) = vmin else {
        return Ok(None);
    };
    let cutoff = vmin + spec.tie_rel_tol * vmin.abs().max(1.0);
    let tie = spec.tie_break;
    let best = par::reduce_range(
        points.len(),
        || None,
        |i| {
            let w = points.point(i);
            let eval = problem.evaluate_raw(&w).ok()?;
            (admissible(&eval) && value(&eval) <= cutoff).then_some(Candidate { index: i, w, eval })
        },
        |a, b| match (a, b) {
            (Some(a), Some(b)) => Some(better(a, b, tie)),
            (a, b) => a.or(b),
        },
    )
    .expect("pass two revisits the minimizer of pass one");
    let v = value(&best.eval);
    Ok(Some((best.w, best.eval, v)))
}

fn to_result(problem: &Problem, w: Vec<f64>, eval: Evaluation, reg: f64, points: &GridPoints<'_>) -> SolveResult {
    SolveResult {
        label: problem.label_of(&w).map(str::to_string),
        w: Assignment::new(w).expect("grid points are finite"),
        loss: eval.loss,
        violation: eval.violation,
        reg_objective: reg,
        provenance: points.provenance(),
        converged: true,
        evaluations: 2 * points.len() as u64,
        diagnostics: Vec::new(),
    }
}

/// Global minimizer of `L + λ·C` over the grid.
pub fn solve_pr_grid(problem: &Problem, lambda: &Multipliers, grid: &GridSpec) -> Result<SolveResult> {
    problem.check_multipliers(lambda)?;
    let points = GridPoints::new(problem, grid)?;
    let (w, eval, reg) = argmin(problem, &points, grid, |e| e.regularized(lambda), |_| true)?
        .expect("grids are non-empty");
    Ok(to_result(problem, w, eval, reg, &points))
}

/// Minimizer of `L` over grid points with `C <= θ`, or [`PcOutcome::Infeasible`].
pub fn solve_pc_grid(problem: &Problem, theta: &Threshold, grid: &GridSpec) -> Result<PcOutcome> {
    problem.check_threshold(theta)?;
    let points = GridPoints::new(problem, grid)?;
    Ok(
        match argmin(problem, &points, grid, |e| e.loss, |e| theta.admits(&e.violation))? {
            Some((w, eval, loss)) => PcOutcome::Optimal(to_result(problem, w, eval, loss, &points)),
            None => PcOutcome::Infeasible {
                points_checked: points.len() as u64,
            },
        },
    )
}
