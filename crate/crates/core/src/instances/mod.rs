//! Canonical problem library.
//!
//! | name                      | W                   | L                  | C                        |
//! |---------------------------|---------------------|--------------------|--------------------------|
//! | `plateau`                 | `[0, 2]`            | `w`                | `max(0, 1 - w)`          |
//! | `two_point_tie`           | `{a, b}`            | `a: 0, b: 1`       | `a: 1, b: 0`             |
//! | `log_unbounded`           | `[0, w_max]`        | `-w`               | `ln(1 + max(0, w))`      |
//! | `vanishing_gradient`      | `[0, w_max]`        | `w`                | `e^{-w}`                 |
//! | `finite_table`            | row indices         | per row            | per row                  |
//! | `ordered_regression`      | `[-1, 3]^2`         | MSE of `w·x`       | `max(0, y_0 - y_1)`      |
//! | `balanced_classification` | `[-4, 4]^2`         | log loss           | `|Σ σ(w_0 x + w_1) - n/2|` |
//!
//! Parameters (all reals, keyed by name):
//! - `log_unbounded`: `w_max` (default `1e6`)
//! - `vanishing_gradient`: `w_max` (default `10`)
//! - `finite_table`: `rows`, optional `m` (default 1), then `l<i>` and either
//!   `c<i>` (when `m = 1`) or `c<i>_<j>`
//!
//! Other instances take no parameters; unknown keys are rejected.

pub mod closed_form;
pub mod ml;
pub mod penalties;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use closed_form::{FiniteTable, LogUnbounded, Plateau, TableRow, VanishingGradient};
pub use ml::{
    balanced_classification_dataset, ordered_regression_dataset, BalancedClassification, Dataset, OrderedRegression,
};
pub use penalties::{balance_penalty, hinge_order_penalty};

use crate::error::{Error, Result};
use crate::problem::{Assignment, ParamSpace, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceName {
    Plateau,
    TwoPointTie,
    LogUnbounded,
    VanishingGradient,
    FiniteTable,
    OrderedRegression,
    BalancedClassification,
}

impl InstanceName {
    pub const ALL: [InstanceName; 7] = [
        InstanceName::Plateau,
        InstanceName::TwoPointTie,
        InstanceName::LogUnbounded,
        InstanceName::VanishingGradient,
        InstanceName::FiniteTable,
        InstanceName::OrderedRegression,
        InstanceName::BalancedClassification,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceName::Plateau => "plateau",
            InstanceName::TwoPointTie => "two_point_tie",
            InstanceName::LogUnbounded => "log_unbounded",
            InstanceName::VanishingGradient => "vanishing_gradient",
            InstanceName::FiniteTable => "finite_table",
            InstanceName::OrderedRegression => "ordered_regression",
            InstanceName::BalancedClassification => "balanced_classification",
        }
    }
}

impl fmt::Display for InstanceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        InstanceName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownInstance(s.to_string()))
    }
}

/// Name plus real-valued parameters; optional labels name finite-table rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub name: InstanceName,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl InstanceSpec {
    pub fn new(name: InstanceName) -> Self {
        InstanceSpec {
            name,
            params: BTreeMap::new(),
            labels: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    /// A single-constraint finite table from `(label, L, C)` rows.
    pub fn table(rows: &[(&str, f64, f64)]) -> Self {
        let mut spec = InstanceSpec::new(InstanceName::FiniteTable).with_param("rows", rows.len() as f64);
        for (i, (_, l, c)) in rows.iter().enumerate() {
            spec.params.insert(format!("l{i}"), *l);
            spec.params.insert(format!("c{i}"), *c);
        }
        spec.labels = Some(rows.iter().map(|(name, _, _)| name.to_string()).collect());
        spec
    }

    /// `{w*: (1, 0.5), a: (0, 1), b: (3, 0)}`: w* is reachable exactly for λ ∈ [2, 4].
    pub fn attainable_table() -> Self {
        InstanceSpec::table(&[("w*", 1.0, 0.5), ("a", 0.0, 1.0), ("b", 3.0, 0.0)])
    }

    /// `{w*: (1, 1), a: (0, 2), b: (1.2, 0.5)}`: w* is PC-optimal at θ = 1 but
    /// needs λ ≥ 1 and λ ≤ 0.4 at once.
    pub fn unattainable_table() -> Self {
        InstanceSpec::table(&[("w*", 1.0, 1.0), ("a", 0.0, 2.0), ("b", 1.2, 0.5)])
    }

    /// One spec per instance name, with default parameters
    /// (`finite_table` uses [`InstanceSpec::attainable_table`]).
    pub fn bundled() -> Vec<InstanceSpec> {
        InstanceName::ALL
            .into_iter()
            .map(|n| match n {
                InstanceName::FiniteTable => InstanceSpec::attainable_table(),
                n => InstanceSpec::new(n),
            })
            .collect()
    }
}

struct Params<'a> {
    spec: &'a InstanceSpec,
    allowed: Vec<String>,
}

impl<'a> Params<'a> {
    fn new(spec: &'a InstanceSpec) -> Self {
        Params { spec, allowed: Vec::new() }
    }

    fn optional(&mut self, key: &str, default: f64) -> f64 {
        self.allowed.push(key.to_string());
        self.spec.params.get(key).copied().unwrap_or(default)
    }

    fn required(&mut self, key: &str) -> Result<f64> {
        self.allowed.push(key.to_string());
        self.spec.params.get(key).copied().ok_or_else(|| Error::MissingParam {
            instance: self.spec.name.to_string(),
            key: key.to_string(),
        })
    }

    fn count(&mut self, key: &str, default: Option<f64>) -> Result<usize> {
        let v = match default {
            Some(d) => self.optional(key, d),
            None => self.required(key)?,
        };
        if !(v >= 1.0 && v.fract() == 0.0 && v <= 1e6) {
            return Err(Error::InvalidParam(format!("{}: `{key}` must be a positive integer, got {v}", self.spec.name)));
        }
        Ok(v as usize)
    }

    fn finish(self) -> Result<()> {
        if let Some(extra) = self.spec.params.keys().find(|k| !self.allowed.contains(k)) {
            return Err(Error::InvalidParam(format!(
                "{}: unknown parameter `{extra}`",
                self.spec.name
            )));
        }
        if self.spec.labels.is_some() && self.spec.name != InstanceName::FiniteTable {
            return Err(Error::InvalidParam(format!("{}: labels only apply to finite_table", self.spec.name)));
        }
        Ok(())
    }
}

fn point(x: f64) -> Assignment {
    Assignment::new(vec![x]).expect("finite literal")
}

/// Build the [`Problem`] described by `spec`.
pub fn make_instance(spec: &InstanceSpec) -> Result<Problem> {
    let mut params = Params::new(spec);
    let name = spec.name.as_str();
    let problem = match spec.name {
        InstanceName::Plateau => Problem::new(name, ParamSpace::boxed(vec![0.0], vec![2.0])?, 1, Arc::new(Plateau))?,
        InstanceName::TwoPointTie => {
            let table = FiniteTable::new(vec![
                TableRow { loss: 0.0, violation: vec![1.0] },
                TableRow { loss: 1.0, violation: vec![0.0] },
            ]);
            let space = ParamSpace::finite(vec![point(0.0), point(1.0)], Some(vec!["a".into(), "b".into()]))?;
            Problem::new(name, space, 1, Arc::new(table))?
        }
        InstanceName::LogUnbounded => {
            let w_max = params.optional("w_max", 1e6);
            if !(w_max > 0.0 && w_max.is_finite()) {
                return Err(Error::InvalidParam(format!("log_unbounded: w_max must be > 0, got {w_max}")));
            }
            Problem::new(name, ParamSpace::boxed(vec![0.0], vec![w_max])?, 1, Arc::new(LogUnbounded))?
        }
        InstanceName::VanishingGradient => {
            let w_max = params.optional("w_max", 10.0);
            if !(w_max > 0.0 && w_max <= 700.0) {
                return Err(Error::InvalidParam(format!(
                    "vanishing_gradient: w_max must be in (0, 700], got {w_max}"
                )));
            }
            Problem::new(name, ParamSpace::boxed(vec![0.0], vec![w_max])?, 1, Arc::new(VanishingGradient))?
        }
        InstanceName::FiniteTable => {
            let n = params.count("rows", None)?;
            let m = params.count("m", Some(1.0))?;
            let mut rows = Vec::with_capacity(n);
            for i in 0..n {
                let loss = params.required(&format!("l{i}"))?;
                let violation = if m == 1 {
                    vec![params.required(&format!("c{i}"))?]
                } else {
                    (0..m)
                        .map(|j| params.required(&format!("c{i}_{j}")))
                        .collect::<Result<Vec<_>>>()?
                };
                rows.push(TableRow { loss, violation });
            }
            let points = (0..n).map(|i| point(i as f64)).collect();
            let space = ParamSpace::finite(points, spec.labels.clone())?;
            let problem = Problem::new(name, space, m, Arc::new(FiniteTable::new(rows)))?;
            // Reject bad rows up front rather than at solve time.
            for i in 0..n {
                problem.evaluate_raw(&[i as f64])?;
            }
            problem
        }
        InstanceName::OrderedRegression => {
            let model = OrderedRegression {
                data: ml::ordered_regression_dataset(),
                i: 0,
                j: 1,
            };
            Problem::new(name, ParamSpace::boxed(vec![-1.0, -1.0], vec![3.0, 3.0])?, 1, Arc::new(model))?
        }
        InstanceName::BalancedClassification => {
            let model = BalancedClassification {
                data: ml::balanced_classification_dataset(),
            };
            Problem::new(name, ParamSpace::boxed(vec![-4.0, -4.0], vec![4.0, 4.0])?, 1, Arc::new(model))?
        }
    };
    params.finish()?;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Multipliers, Threshold};

    fn w(x: &[f64]) -> Assignment {
        Assignment::new(x.to_vec()).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let plateau = make_instance(&InstanceSpec::new(InstanceName::Plateau)).unwrap();
        assert_eq!(plateau.eval_loss(&w(&[0.5])).unwrap(), 0.5);
        assert_eq!(plateau.eval_violation(&w(&[1.0])).unwrap(), vec![0.0]);
        assert_eq!(plateau.eval_violation(&w(&[0.25])).unwrap(), vec![0.75]);
        let one = Multipliers::scalar(1.0).unwrap();
        assert_eq!(plateau.eval_regularized(&w(&[0.5]), &one).unwrap(), 1.0);
        assert_eq!(plateau.eval_regularized(&w(&[0.0]), &one).unwrap(), 1.0);
        assert_eq!(plateau.eval_regularized(&w(&[1.0]), &one).unwrap(), 1.0);
        assert!(plateau.is_feasible(&w(&[1.0]), &Threshold::scalar(0.0).unwrap()).unwrap());
        assert!(!plateau.is_feasible(&w(&[0.25]), &Threshold::scalar(0.5).unwrap()).unwrap());

        let tie = make_instance(&InstanceSpec::new(InstanceName::TwoPointTie)).unwrap();
        let a = w(&[0.0]);
        assert_eq!(tie.label_of(&a), Some("a"));
        assert_eq!(tie.eval_loss(&a).unwrap(), 0.0);
        assert_eq!(tie.eval_regularized(&a, &one).unwrap(), 1.0);
        assert!(tie.eval_loss(&w(&[0.5])).is_err());

        let reg = make_instance(&InstanceSpec::new(InstanceName::OrderedRegression)).unwrap();
        assert_eq!(reg.eval_loss(&w(&[0.0, 0.0])).unwrap(), 3.75);

        let log = make_instance(&InstanceSpec::new(InstanceName::LogUnbounded)).unwrap();
        assert_eq!(log.eval_violation(&w(&[0.0])).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_multipliers_reduce_to_loss() {
        for spec in InstanceSpec::bundled() {
            let p = make_instance(&spec).unwrap();
            let x = match p.space() {
                ParamSpace::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
                ParamSpace::Finite { points, .. } => points[0].to_vec(),
            };
            let x = w(&x);
            let zero = Multipliers::zeros(p.num_constraints());
            assert_eq!(p.eval_regularized(&x, &zero).unwrap(), p.eval_loss(&x).unwrap(), "{}", spec.name);
        }
    }

    #[test]
    fn spec_validation() {
        assert!("nope".parse::<InstanceName>().is_err());
        assert_eq!("log_unbounded".parse::<InstanceName>().unwrap(), InstanceName::LogUnbounded);
        let bad = InstanceSpec::new(InstanceName::Plateau).with_param("w_max", 3.0);
        assert!(matches!(make_instance(&bad), Err(Error::InvalidParam(_))));
        let missing = InstanceSpec::new(InstanceName::FiniteTable).with_param("rows", 2.0).with_param("l0", 1.0);
        assert!(matches!(make_instance(&missing), Err(Error::MissingParam { .. })));
        let negative = InstanceSpec::table(&[("x", 0.0, -1.0)]);
        assert!(matches!(make_instance(&negative), Err(Error::NegativeViolation { .. })));
        let json = r#"{"name": "finite_tabel", "params": {}}"#;
        assert!(serde_json::from_str::<InstanceSpec>(json).is_err());
    }

    #[test]
    fn multi_constraint_table() {
        let spec = InstanceSpec::new(InstanceName::FiniteTable)
            .with_param("rows", 2.0)
            .with_param("m", 2.0)
            .with_param("l0", 0.0)
            .with_param("c0_0", 1.0)
            .with_param("c0_1", 0.5)
            .with_param("l1", 2.0)
            .with_param("c1_0", 0.0)
            .with_param("c1_1", 0.25);
        let p = make_instance(&spec).unwrap();
        assert_eq!(p.num_constraints(), 2);
        assert_eq!(p.eval_violation(&w(&[0.0])).unwrap(), vec![1.0, 0.5]);
        assert_eq!(p.label_of(&[1.0]), Some("w1"));
    }
}
