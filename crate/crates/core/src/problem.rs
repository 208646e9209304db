//! Problem abstraction: a parameter space W with a loss L(w) and a
//! non-negative violation vector C(w), plus the regularized and constrained
//! objectives built from them.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in parameter space. All components are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Assignment(Vec<f64>);

impl Assignment {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidParam("assignment must have dimension >= 1".into()));
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParam(format!("assignment {w:?} has non-finite components")));
        }
        Ok(Assignment(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Assignment {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Assignment {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Assignment::new(v)
    }
}

impl From<Assignment> for Vec<f64> {
    fn from(a: Assignment) -> Vec<f64> {
        a.0
    }
}

/// Non-negative multiplier vector λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Multipliers(Vec<f64>);

impl Multipliers {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        for (index, &value) in lambda.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidMultiplier { index, value });
            }
        }
        Ok(Multipliers(lambda))
    }

    pub fn zeros(m: usize) -> Self {
        Multipliers(vec![0.0; m])
    }

    /// Convenience for the single-constraint case.
    pub fn scalar(lambda: f64) -> Result<Self> {
        Multipliers::new(vec![lambda])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, c: &[f64]) -> f64 {
        self.0.iter().zip(c).map(|(l, c)| l * c).sum()
    }
}

impl TryFrom<Vec<f64>> for Multipliers {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Multipliers::new(v)
    }
}

impl From<Multipliers> for Vec<f64> {
    fn from(m: Multipliers) -> Vec<f64> {
        m.0
    }
}

/// Violation thresholds θ ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Threshold(Vec<f64>);

impl Threshold {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        for (index, &value) in theta.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidThreshold { index, value });
            }
        }
        Ok(Threshold(theta))
    }

    pub fn scalar(theta: f64) -> Result<Self> {
        Threshold::new(vec![theta])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Component-wise `c <= theta`.
    pub fn admits(&self, c: &[f64]) -> bool {
        c.iter().zip(&self.0).all(|(c, t)| c <= t)
    }
}

impl TryFrom<Vec<f64>> for Threshold {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Threshold::new(v)
    }
}

impl From<Threshold> for Vec<f64> {
    fn from(t: Threshold) -> Vec<f64> {
        t.0
    }
}

/// The parameter space W.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ParamSpace {
    /// Axis-aligned box with closed intervals `[lo_k, hi_k]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// An explicit list of points, each with a display label.
    Finite {
        points: Vec<Assignment>,
        labels: Vec<String>,
    },
}

impl ParamSpace {
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidSpace(format!(
                "box bounds must be non-empty and equal length (lo {}, hi {})",
                lo.len(),
                hi.len()
            )));
        }
        for (k, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::InvalidSpace(format!("dimension {k}: need finite lo <= hi, got [{l}, {h}]")));
            }
        }
        Ok(ParamSpace::Box { lo, hi })
    }

    /// A finite space. Missing labels default to `w0`, `w1`, ...
    pub fn finite(points: Vec<Assignment>, labels: Option<Vec<String>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidSpace("finite space must be non-empty".into()));
        };
        let d = first.len();
        if let Some(bad) = points.iter().position(|p| p.len() != d) {
            return Err(Error::InvalidSpace(format!(
                "finite point {bad} has dimension {}, expected {d}",
                points[bad].len()
            )));
        }
        let labels = match labels {
            Some(l) if l.len() == points.len() => l,
            Some(l) => {
                return Err(Error::InvalidSpace(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.len()
                )))
            }
            None => (0..points.len()).map(|i| format!("w{i}")).collect(),
        };
        Ok(ParamSpace::Finite { points, labels })
    }

    pub fn dim(&self) -> usize {
        match self {
            ParamSpace::Box { lo, .. } => lo.len(),
            ParamSpace::Finite { points, .. } => points[0].len(),
        }
    }

    pub fn contains(&self, w: &[f64]) -> bool {
        match self {
            ParamSpace::Box { lo, hi } => {
                w.len() == lo.len() && w.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| l <= x && x <= h)
            }
            ParamSpace::Finite { points, .. } => points.iter().any(|p| p.as_slice() == w),
        }
    }

    /// Label of a finite-space point, if `w` is one.
    pub fn label_of(&self, w: &[f64]) -> Option<&str> {
        match self {
            ParamSpace::Box { .. } => None,
            ParamSpace::Finite { points, labels } => points
                .iter()
                .position(|p| p.as_slice() == w)
                .map(|i| labels[i].as_str()),
        }
    }

    /// The finite-space point carrying `label`.
    pub fn point_labeled(&self, label: &str) -> Option<&Assignment> {
        match self {
            ParamSpace::Box { .. } => None,
            ParamSpace::Finite { points, labels } => labels.iter().position(|l| l == label).map(|i| &points[i]),
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ParamSpace::Finite { .. })
    }
}

/// Lipschitz constants of L and of each C_j over the whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct Lipschitz {
    pub loss: f64,
    pub violation: Vec<f64>,
}

impl Lipschitz {
    /// Lipschitz constant of `L + λ·C`.
    pub fn regularized(&self, lambda: &Multipliers) -> f64 {
        self.loss + lambda.dot(&self.violation)
    }
}

/// Evaluators behind a [`Problem`]. Implementations must be pure.
pub trait Model: Send + Sync + fmt::Debug {
    fn loss(&self, w: &[f64]) -> f64;

    fn violation(&self, w: &[f64]) -> Vec<f64>;

    /// Analytic ∇L, when known.
    fn loss_gradient(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Analytic (sub)gradients of each C_j (one row per constraint), when known.
    /// At kinks the row follows the max-branch active at `w`.
    fn violation_jacobian(&self, _w: &[f64]) -> Option<Vec<Vec<f64>>> {
        None
    }

    fn lipschitz(&self) -> Option<Lipschitz> {
        None
    }
}

/// L and C evaluated at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub violation: Vec<f64>,
}

impl Evaluation {
    pub fn regularized(&self, lambda: &Multipliers) -> f64 {
        self.loss + lambda.dot(&self.violation)
    }
}

/// A constrained training problem: W, L, C and m.
#[derive(Clone)]
pub struct Problem {
    name: String,
    space: ParamSpace,
    num_constraints: usize,
    model: Arc<dyn Model>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("num_constraints", &self.num_constraints)
            .field("space", &self.space)
            .finish()
    }
}

impl Problem {
    pub fn new(name: impl Into<String>, space: ParamSpace, num_constraints: usize, model: Arc<dyn Model>) -> Result<Self> {
        if num_constraints == 0 {
            return Err(Error::InvalidParam("a problem needs at least one constraint".into()));
        }
        Ok(Problem {
            name: name.into(),
            space,
            num_constraints,
            model,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn model(&self) -> &dyn Model {
        self.model.as_ref()
    }

    fn check_point(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "assignment",
                expected: self.dim(),
                got: w.len(),
            });
        }
        if !self.space.contains(w) {
            return Err(Error::OutsideSpace {
                instance: self.name.clone(),
                w: w.to_vec(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_multipliers(&self, lambda: &Multipliers) -> Result<()> {
        if lambda.len() != self.num_constraints {
            return Err(Error::DimensionMismatch {
                what: "multipliers",
                expected: self.num_constraints,
                got: lambda.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_threshold(&self, theta: &Threshold) -> Result<()> {
        if theta.len() != self.num_constraints {
            return Err(Error::DimensionMismatch {
                what: "threshold",
                expected: self.num_constraints,
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Evaluate L and C at `w` without checking space membership.
    ///
    /// Non-finite outputs and negative violations are rejected, never clipped.
    pub fn evaluate_raw(&self, w: &[f64]) -> Result<Evaluation> {
        let loss = self.model.loss(w);
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                instance: self.name.clone(),
                what: "loss",
                w: w.to_vec(),
            });
        }
        let violation = self.model.violation(w);
        if violation.len() != self.num_constraints {
            return Err(Error::DimensionMismatch {
                what: "violation vector",
                expected: self.num_constraints,
                got: violation.len(),
            });
        }
        for (index, &value) in violation.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    instance: self.name.clone(),
                    what: "violation",
                    w: w.to_vec(),
                });
            }
            // -0.0 passes: it compares equal to zero.
            if value < 0.0 {
                return Err(Error::NegativeViolation {
                    instance: self.name.clone(),
                    index,
                    value,
                    w: w.to_vec(),
                });
            }
        }
        Ok(Evaluation { loss, violation })
    }

    pub fn evaluate(&self, w: &Assignment) -> Result<Evaluation> {
        self.check_point(w)?;
        self.evaluate_raw(w)
    }

    pub fn eval_loss(&self, w: &Assignment) -> Result<f64> {
        Ok(self.evaluate(w)?.loss)
    }

    pub fn eval_violation(&self, w: &Assignment) -> Result<Vec<f64>> {
        Ok(self.evaluate(w)?.violation)
    }

    /// `L(w) + λ·C(w)`.
    pub fn eval_regularized(&self, w: &Assignment, lambda: &Multipliers) -> Result<f64> {
        self.check_multipliers(lambda)?;
        Ok(self.evaluate(w)?.regularized(lambda))
    }

    /// `C(w) <= θ` component-wise.
    pub fn is_feasible(&self, w: &Assignment, theta: &Threshold) -> Result<bool> {
        self.check_threshold(theta)?;
        Ok(theta.admits(&self.evaluate(w)?.violation))
    }

    pub fn label_of(&self, w: &[f64]) -> Option<&str> {
        self.space.label_of(w)
    }
}

/// Which backend produced a [`SolveResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GridGlobal,
    DescentLocal,
    FiniteEnumeration,
}

impl Provenance {
    /// True for exhaustive backends whose optima are exact over their point set.
    pub fn is_exact(self) -> bool {
        matches!(self, Provenance::GridGlobal | Provenance::FiniteEnumeration)
    }
}

/// An optimum reported by a solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub w: Assignment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub loss: f64,
    pub violation: Vec<f64>,
    /// `loss + λ·violation` for the multipliers of the solve (λ = 0 for PC solves).
    pub reg_objective: f64,
    pub provenance: Provenance,
    pub converged: bool,
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}
