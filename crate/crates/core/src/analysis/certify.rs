use serde::Serialize;

use super::{inf_as_string, Witness, OPT_TOL, ZERO_DELTA};
use crate::error::{Error, Result};
use crate::par;
use crate::problem::{Assignment, Multipliers, Problem, SolveResult};
use crate::solvers::{solve_pr_grid, GridPoints, GridSpec};

/// Result of checking that a PR grid optimum is also PC-optimal at `θ = C(w*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Check {
    pub holds: bool,
    pub lambda: Multipliers,
    pub optimum: SolveResult,
    /// First grid point with `C <= C(w*)` and `L < L(w*) - tol`, if any.
    pub counterexample: Option<Witness>,
    pub points_checked: u64,
}

/// Solve PR(λ) on the grid, then scan every grid point for a feasible
/// competitor (for `θ = C(w*)`) with strictly lower loss.
pub fn check_theorem1(problem: &Problem, lambda: &Multipliers, grid: &GridSpec) -> Result<Theorem1Check> {
    let optimum = solve_pr_grid(problem, lambda, grid)?;
    let points = GridPoints::new(problem, grid)?;
    let (l_star, c_star) = (optimum.loss, &optimum.violation);
    let hit = par::find_first(points.len(), |i| match problem.evaluate_raw(&points.point(i)) {
        Ok(e) => e.loss < l_star - OPT_TOL && e.violation.iter().zip(c_star).all(|(c, s)| c <= s),
        Err(_) => false,
    });
    let counterexample = match hit {
        Some(i) => Some(Witness::at(problem, points.point(i))?),
        None => None,
    };
    Ok(Theorem1Check {
        holds: counterexample.is_none(),
        lambda: lambda.clone(),
        optimum,
        counterexample,
        points_checked: points.len() as u64,
    })
}

/// One inequality `λ·ΔC + ΔL >= 0` contributed by a witness point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpace {
    /// `C(w) - C(w*)`
    pub delta_c: Vec<f64>,
    /// `L(w) - L(w*)`
    pub delta_l: f64,
    pub witness: Assignment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl HalfSpace {
    /// `λ·ΔC + ΔL`; non-negative when λ satisfies the half-space.
    pub fn slack(&self, lambda: &[f64]) -> f64 {
        lambda.iter().zip(&self.delta_c).map(|(l, d)| l * d).sum::<f64>() + self.delta_l
    }

    pub fn admits(&self, lambda: &[f64], tol: f64) -> bool {
        self.slack(lambda) >= -tol
    }
}

/// A point with the same violation as `w*` but lower loss: `w*` is not PC-optimal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NotOptimalCertificate {
    pub witness: Assignment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub delta_l: f64,
}

/// Every constraint that a multiplier must satisfy for `w*` to solve PR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attainability {
    pub w_star: Assignment,
    pub loss: f64,
    pub violation: Vec<f64>,
    pub halfspaces: Vec<HalfSpace>,
    pub not_pc_optimal: Vec<NotOptimalCertificate>,
    pub points_checked: u64,
}

enum Contribution {
    Half(HalfSpace),
    Cert(NotOptimalCertificate),
}

/// Instantiate `λ·ΔC(w, w*) + ΔL(w, w*) >= 0` for every grid point `w`.
///
/// Points with `ΔC = 0` (all `|ΔC_k| < 1e-12`) constrain nothing and are
/// skipped, unless `ΔL < -1e-9`, in which case they certify that `w*` is
/// not PC-optimal.
pub fn attainability_halfspaces(problem: &Problem, w_star: &Assignment, grid: &GridSpec) -> Result<Attainability> {
    let star = problem.evaluate(w_star)?;
    let points = GridPoints::new(problem, grid)?;
    let contributions = par::map_range(points.len(), |i| -> Result<Option<Contribution>> {
        let w = points.point(i);
        let e = problem.evaluate_raw(&w)?;
        let delta_c: Vec<f64> = e.violation.iter().zip(&star.violation).map(|(c, s)| c - s).collect();
        let delta_l = e.loss - star.loss;
        let label = problem.label_of(&w).map(str::to_string);
        if delta_c.iter().all(|d| d.abs() < ZERO_DELTA) {
            if delta_l < -OPT_TOL {
                return Ok(Some(Contribution::Cert(NotOptimalCertificate {
                    witness: Assignment::new(w)?,
                    label,
                    delta_l,
                })));
            }
            return Ok(None);
        }
        Ok(Some(Contribution::Half(HalfSpace {
            delta_c,
            delta_l,
            witness: Assignment::new(w)?,
            label,
        })))
    });
    let mut halfspaces = Vec::new();
    let mut not_pc_optimal = Vec::new();
    for c in contributions {
        match c? {
            Some(Contribution::Half(h)) => halfspaces.push(h),
            Some(Contribution::Cert(c)) => not_pc_optimal.push(c),
            None => {}
        }
    }
    Ok(Attainability {
        w_star: w_star.clone(),
        loss: star.loss,
        violation: star.violation,
        halfspaces,
        not_pc_optimal,
        points_checked: points.len() as u64,
    })
}

/// Feasible range of `λ_j` with the other multipliers held fixed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierInterval {
    pub j: usize,
    pub lower: f64,
    #[serde(serialize_with = "inf_as_string")]
    pub upper: f64,
    pub feasible: bool,
    /// Witness of the largest positive lower bound.
    pub binding_lower_witness: Option<Assignment>,
    /// Witness of the smallest upper bound.
    pub binding_upper_witness: Option<Assignment>,
    /// Witness of a `ΔC_j = 0` half-space violated for every `λ_j`.
    pub blocking_witness: Option<Assignment>,
}

/// Bounds on `λ_j` implied by the half-spaces.
///
/// With `residual = λ_{-j}·ΔC_{-j} + ΔL` and `R = -residual / ΔC_j`, witnesses
/// with `ΔC_j > 0` give lower bounds `λ_j >= R` and witnesses with `ΔC_j < 0`
/// give upper bounds `λ_j <= R`. `lambda_other` lists the fixed multipliers
/// for every index except `j`, in order (empty when m = 1).
pub fn multiplier_interval(halfspaces: &[HalfSpace], j: usize, lambda_other: &[f64]) -> Result<MultiplierInterval> {
    let mut out = MultiplierInterval {
        j,
        lower: 0.0,
        upper: f64::INFINITY,
        feasible: true,
        binding_lower_witness: None,
        binding_upper_witness: None,
        blocking_witness: None,
    };
    if let Some(bad) = lambda_other.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::InvalidParam(format!("fixed multiplier {bad} must be finite and >= 0")));
    }
    for h in halfspaces {
        let m = h.delta_c.len();
        if j >= m || lambda_other.len() + 1 != m {
            return Err(Error::DimensionMismatch {
                what: "fixed multipliers",
                expected: m.saturating_sub(1),
                got: lambda_other.len(),
            });
        }
        let residual = h
            .delta_c
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .zip(lambda_other)
            .map(|((_, d), l)| l * d)
            .sum::<f64>()
            + h.delta_l;
        let dcj = h.delta_c[j];
        if dcj.abs() < ZERO_DELTA {
            if residual < -OPT_TOL && out.blocking_witness.is_none() {
                out.blocking_witness = Some(h.witness.clone());
            }
            continue;
        }
        let r = -residual / dcj;
        if dcj > 0.0 {
            if r > out.lower {
                out.lower = r;
                out.binding_lower_witness = Some(h.witness.clone());
            }
        } else if r < out.upper {
            out.upper = r;
            out.binding_upper_witness = Some(h.witness.clone());
        }
    }
    out.feasible = out.blocking_witness.is_none() && out.lower <= out.upper;
    Ok(out)
}

/// Grid points of multiplier space lying in every half-space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionScan {
    pub feasible_points: Vec<Multipliers>,
    /// Whether the region is non-empty. For m = 1 this is the exact interval's
    /// verdict; for m > 1 it reports whether any grid multiplier qualified.
    pub any: bool,
    pub points_checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<MultiplierInterval>,
}

/// Test every multiplier of `lambda_grid` against all half-spaces (tolerance 1e-9).
pub fn multiplier_region_feasible(halfspaces: &[HalfSpace], lambda_grid: &[Multipliers]) -> Result<RegionScan> {
    let m = halfspaces
        .first()
        .map(|h| h.delta_c.len())
        .or_else(|| lambda_grid.first().map(|l| l.len()));
    if let Some(m) = m {
        if let Some(bad) = lambda_grid.iter().find(|l| l.len() != m) {
            return Err(Error::DimensionMismatch {
                what: "multiplier grid",
                expected: m,
                got: bad.len(),
            });
        }
    }
    let admitted = par::map_range(lambda_grid.len(), |i| {
        halfspaces.iter().all(|h| h.admits(lambda_grid[i].as_slice(), OPT_TOL))
    });
    let feasible_points: Vec<Multipliers> = lambda_grid
        .iter()
        .zip(admitted)
        .filter(|(_, ok)| *ok).map(|(l, _)| l.clone())
        .collect();
    let interval = if m == Some(1) {
        Some(multiplier_interval(halfspaces, 0, &[])?)
    } else {
        None
    };
    let any = match &interval {
        Some(i) => i.feasible,
        None => !feasible_points.is_empty(),
    };
    Ok(RegionScan {
        feasible_points,
        any,
        points_checked: lambda_grid.len() as u64,
        interval,
    })
}
