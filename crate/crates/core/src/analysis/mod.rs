//! Certification tools: the PR ⇒ PC optimality check, attainability
//! half-spaces and multiplier intervals, monotonicity scans and
//! multiplier sensitivity curves.
//!
//! All certificates are relative to the evaluation grid (or finite space).

mod certify;
mod scans;

use serde::{Serialize, Serializer};

pub use certify::{
    attainability_halfspaces, check_theorem1, multiplier_interval, multiplier_region_feasible, Attainability, HalfSpace,
    MultiplierInterval, NotOptimalCertificate, RegionScan, Theorem1Check,
};
pub use scans::{
    monotonicity_scan, sensitivity_curve, theorem1_conformance, ConformanceRow, LambdaRange, MonotonicityReport,
    MonotonicityViolation, ScanRow, SensitivityCurve, SensitivityRow,
};

use crate::error::Result;
use crate::problem::{Assignment, Problem};

/// Absolute tolerance for optimality comparisons.
pub const OPT_TOL: f64 = 1e-9;

/// `|ΔC_j|` below this is treated as zero.
pub const ZERO_DELTA: f64 = 1e-12;

/// A grid point with its loss and violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub w: Assignment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub loss: f64,
    pub violation: Vec<f64>,
}

impl Witness {
    pub(crate) fn at(problem: &Problem, w: Vec<f64>) -> Result<Self> {
        let e = problem.evaluate_raw(&w)?;
        Ok(Witness {
            label: problem.label_of(&w).map(str::to_string),
            w: Assignment::new(w)?,
            loss: e.loss,
            violation: e.violation,
        })
    }
}

/// JSON has no infinities; write them as `"inf"` / `"-inf"`.
pub(crate) fn inf_as_string<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}
