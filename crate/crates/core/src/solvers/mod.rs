//! PR and PC backends: an exhaustive grid oracle and projected gradient descent.

mod descent;
mod fd;
mod grid;

use serde::{Deserialize, Serialize};

pub use descent::solve_pr_descent;
pub use fd::{analytic_gradient, finite_diff_grad};
pub use grid::{solve_pc_grid, solve_pr_grid, GridPoints};


use crate::problem::SolveResult;

/// How exact ties in the objective are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Smaller violation vector (lexicographic), then smaller w.
    #[default]
    PreferLowViolation,
    /// Larger violation vector, then smaller w.
    PreferHighViolation,
}

/// Uniform grid resolution and evaluation budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Points per box dimension, including both endpoints. Ignored for finite spaces.
    pub points_per_dim: usize,
    /// Maximum number of grid points.
    pub budget: u64,
    pub tie_break: TieBreak,
    /// Values within `tie_rel_tol · max(1, |min|)` of the minimum count as ties.
    pub tie_rel_tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points_per_dim: 1001,
            budget: 10_000_000,
            tie_break: TieBreak::PreferLowViolation,
            tie_rel_tol: 4.0 * f64::EPSILON,
        }
    }
}

impl GridSpec {
    pub fn with_points(points_per_dim: usize) -> Self {
        GridSpec {
            points_per_dim,
            ..GridSpec::default()
        }
    }
}

/// Projected gradient descent settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentConfig {
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop when the projected step divided by `step_size` falls below this.
    pub grad_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Use instance-supplied gradients when available.
    pub analytic_gradients: bool,
    /// Absolute finite-difference step; `None` means `1e-6·max(1, |w_k|)`.
    pub fd_step: Option<f64>,
}

impl Default for DescentConfig {
    fn default() -> Self {
        DescentConfig {
            step_size: 0.1,
            max_iters: 10_000,
            grad_tolerance: 1e-9,
            restarts: 4,
            seed: 0,
            analytic_gradients: true,
            fd_step: None,
        }
    }
}

/// Result of a constrained (PC) solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PcOutcome {
    Optimal(SolveResult),
    /// No grid point satisfies `C <= θ`.
    Infeasible { points_checked: u64 },
}

impl PcOutcome {
    pub fn optimal(&self) -> Option<&SolveResult> {
        match self {
            PcOutcome::Optimal(r) => Some(r),
            PcOutcome::Infeasible { .. } => None,
        }
    }
}
