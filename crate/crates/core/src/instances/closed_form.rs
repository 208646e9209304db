//! One-dimensional and finite instances with closed-form optima.

use crate::problem::{Lipschitz, Model};

/// `L(w) = w`, `C(w) = max(0, 1 - w)` on `[0, 2]`. At λ = 1 the regularized
/// objective is the constant 1 on `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct Plateau;

impl Model for Plateau {
    fn loss(&self, w: &[f64]) -> f64 {
        w[0]
    }

    fn violation(&self, w: &[f64]) -> Vec<f64> {
        vec![(1.0 - w[0]).max(0.0)]
    }

    fn loss_gradient(&self, _w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0])
    }

    fn violation_jacobian(&self, w: &[f64]) -> Option<Vec<Vec<f64>>> {
        let g = if 1.0 - w[0] > 0.0 { -1.0 } else { 0.0 };
        Some(vec![vec![g]])
    }

    fn lipschitz(&self) -> Option<Lipschitz> {
        Some(Lipschitz {
            loss: 1.0,
            violation: vec![1.0],
        })
    }
}

/// `L(w) = -w`, `C(w) = ln(1 + max(0, w))` on `[0, w_max]`. Every PR(λ) is
/// unbounded in the limit; PC(θ) has the finite optimum `w = e^θ - 1`.
#[derive(Debug, Clone, Copy)]
pub struct LogUnbounded;

impl Model for LogUnbounded {
    fn loss(&self, w: &[f64]) -> f64 {
        -w[0]
    }

    fn violation(&self, w: &[f64]) -> Vec<f64> {
        vec![w[0].max(0.0).ln_1p()]
    }

    fn loss_gradient(&self, _w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![-1.0])
    }

    fn violation_jacobian(&self, w: &[f64]) -> Option<Vec<Vec<f64>>> {
        let g = if w[0] > 0.0 { 1.0 / (1.0 + w[0]) } else { 0.0 };
        Some(vec![vec![g]])
    }

    fn lipschitz(&self) -> Option<Lipschitz> {
        Some(Lipschitz {
            loss: 1.0,
            violation: vec![1.0],
        })
    }
}

/// `L(w) = w`, `C(w) = e^{-w}` on `[0, w_max]`. The PR optimum is `w = ln λ`
/// with `C(w*) = 1/λ`, so small thresholds need huge multipliers.
#[derive(Debug, Clone, Copy)]
pub struct VanishingGradient;

impl Model for VanishingGradient {
    fn loss(&self, w: &[f64]) -> f64 {
        w[0]
    }

    fn violation(&self, w: &[f64]) -> Vec<f64> {
        vec![(-w[0]).exp()]
    }

    fn loss_gradient(&self, _w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0])
    }

    fn violation_jacobian(&self, w: &[f64]) -> Option<Vec<Vec<f64>>> {
        Some(vec![vec![-(-w[0]).exp()]])
    }

    fn lipschitz(&self) -> Option<Lipschitz> {
        Some(Lipschitz {
            loss: 1.0,
            violation: vec![1.0],
        })
    }
}

/// One row of a finite table: L and the violation vector of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub loss: f64,
    pub violation: Vec<f64>,
}

/// Finite space `{0, 1, ..., n-1}` where point `i` takes row `i`'s values.
#[derive(Debug, Clone)]
pub struct FiniteTable {
    rows: Vec<TableRow>,
}

impl FiniteTable {
    pub fn new(rows: Vec<TableRow>) -> Self {
        FiniteTable { rows }
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    fn row(&self, w: &[f64]) -> Option<&TableRow> {
        let i = w[0];
        if i >= 0.0 && i.fract() == 0.0 {
            self.rows.get(i as usize)
        } else {
            None
        }
    }
}

impl Model for FiniteTable {
    fn loss(&self, w: &[f64]) -> f64 {
        self.row(w).map_or(f64::NAN, |r| r.loss)
    }

    fn violation(&self, w: &[f64]) -> Vec<f64> {
        match self.row(w) {
            Some(r) => r.violation.clone(),
            None => vec![f64::NAN; self.rows[0].violation.len()],
        }
    }
}
