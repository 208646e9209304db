//! Tiny linear models with the two ML regularizers embedded in L and C.

use serde::Serialize;

use super::penalties::{balance_penalty, hinge_order_penalty};
use crate::error::{Error, Result};
use crate::problem::Model;

/// A training set: feature vectors and targets (reals or 0/1 labels).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::InvalidParam(format!(
                "dataset has {} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.len() < 2 {
            return Err(Error::InvalidParam("dataset needs at least 2 points".into()));
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Four-point regression set. The least-squares fit is `w = (2, 1)`, which
/// predicts `y_0 = 2 > y_1 = 1` and so violates the ordering constraint.
pub fn ordered_regression_dataset() -> Dataset {
    Dataset {
        inputs: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]],
        targets: vec![2.0, 1.0, 3.0, 1.0],
    }
}

/// Sixteen points, 12 positive and 4 negative, with identical class means of
/// the single feature. Feature values are symmetric around 0.5.
pub fn balanced_classification_dataset() -> Dataset {
    let neg = [0.2, 0.4, 0.6, 0.8];
    let pos = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95, 0.3, 0.7];
    let inputs = neg.iter().chain(pos.iter()).map(|&x| vec![x]).collect();
    let targets = neg.iter().map(|_| 0.0).chain(pos.iter().map(|_| 1.0)).collect();
    Dataset { inputs, targets }
}

/// Linear model `y = w·x`, MSE loss, `C = max(0, y_i - y_j)` on two training outputs.
#[derive(Debug, Clone)]
pub struct OrderedRegression {
    pub data: Dataset,
    pub i: usize,
    pub j: usize,
}

impl OrderedRegression {
    pub fn outputs(&self, w: &[f64]) -> Vec<f64> {
        self.data.inputs.iter().map(|x| dot(w, x)).collect()
    }
}

impl Model for OrderedRegression {
    fn loss(&self, w: &[f64]) -> f64 {
        let n = self.data.len() as f64;
        self.data
            .inputs
            .iter()
            .zip(&self.data.targets)
            .map(|(x, t)| (dot(w, x) - t).powi(2))
            .sum::<f64>()
            / n
    }

    fn violation(&self, w: &[f64]) -> Vec<f64> {
        let y = self.outputs(w);
        vec![hinge_order_penalty(&y, self.i, self.j).unwrap_or(f64::NAN)]
    }

    fn loss_gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        let n = self.data.len() as f64;
        let mut g = vec![0.0; w.len()];
        for (x, t) in self.data.inputs.iter().zip(&self.data.targets) {
            let r = dot(w, x) - t;
            for (gk, xk) in g.iter_mut().zip(x) {
                *gk += 2.0 * r * xk / n;
            }
        }
        Some(g)
    }

    fn violation_jacobian(&self, w: &[f64]) -> Option<Vec<Vec<f64>>> {
        let (xi, xj) = (&self.data.inputs[self.i], &self.data.inputs[self.j]);
        let active = dot(w, xi) - dot(w, xj) > 0.0;
        let row = xi
            .iter()
            .zip(xj)
            .map(|(a, b)| if active { a - b } else { 0.0 })
            .collect();
        Some(vec![row])
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic model `y = σ(w_0·x + w_1)`, mean log loss, relaxed balance
/// penalty `|Σ y - n/2|` on the raw sigmoid outputs.
#[derive(Debug, Clone)]
pub struct BalancedClassification {
    pub data: Dataset,
}

impl BalancedClassification {
    fn logits(&self, w: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let (a, b) = (w[0], w[1]);
        self.data.inputs.iter().map(move |x| a * x[0] + b)
    }

    pub fn outputs(&self, w: &[f64]) -> Vec<f64> {
        self.logits(w).map(sigmoid).collect()
    }

    /// Accuracy of thresholding at 0.5; an output of exactly 0.5 counts as a coin flip.
    pub fn accuracy(&self, w: &[f64]) -> f64 {
        let hits: f64 = self
            .outputs(w)
            .iter()
            .zip(&self.data.targets)
            .map(|(&y, &t)| {
                if y == 0.5 {
                    0.5
                } else if (y > 0.5) == (t > 0.5) {
                    1.0
                } else {
                    0.0
                }
            })
            .sum();
        hits / self.data.len() as f64
    }

    /// Balance penalty of the rounded (binary) predictions; 0.5 rounds up.
    pub fn binary_balance(&self, w: &[f64]) -> f64 {
        let labels: Vec<f64> = self
            .outputs(w)
            .iter()
            .map(|&y| if y >= 0.5 { 1.0 } else { 0.0 })
            .collect();
        balance_penalty(&labels).unwrap_or(f64::NAN)
    }
}

impl Model for BalancedClassification {
    fn loss(&self, w: &[f64]) -> f64 {
        let n = self.data.len() as f64;
        self.logits(w)
            .zip(&self.data.targets)
            .map(|(z, t)| softplus(z) - t * z)
            .sum::<f64>()
            / n
    }

    fn violation(&self, w: &[f64]) -> Vec<f64> {
        vec![balance_penalty(&self.outputs(w)).unwrap_or(f64::NAN)]
    }

    fn loss_gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        let n = self.data.len() as f64;
        let mut g = vec![0.0; 2];
        for ((z, t), x) in self.logits(w).zip(&self.data.targets).zip(&self.data.inputs) {
            let r = (sigmoid(z) - t) / n;
            g[0] += r * x[0];
            g[1] += r;
        }
        Some(g)
    }

    fn violation_jacobian(&self, w: &[f64]) -> Option<Vec<Vec<f64>>> {
        let y = self.outputs(w);
        let s = y.iter().sum::<f64>() - y.len() as f64 / 2.0;
        let sign = if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            0.0
        };
        let mut row = vec![0.0; 2];
        for (yi, x) in y.iter().zip(&self.data.inputs) {
            let d = yi * (1.0 - yi);
            row[0] += sign * d * x[0];
            row[1] += sign * d;
        }
        Some(vec![row])
    }
}
