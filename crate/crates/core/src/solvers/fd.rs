use crate::error::{Error, Result};
use crate::problem::{Multipliers, ParamSpace, Problem};

/// Gradient of `L + λ·C` from the instance's analytic derivatives, if it has them.
pub fn analytic_gradient(problem: &Problem, lambda: &Multipliers, w: &[f64]) -> Option<Vec<f64>> {
    let model = problem.model();
    let mut g = model.loss_gradient(w)?;
    let jac = model.violation_jacobian(w)?;
    for (row, l) in jac.iter().zip(lambda.as_slice()) {
        for (gk, dk) in g.iter_mut().zip(row) {
            *gk += l * dk;
        }
    }
    Some(g)
}

/// Finite-difference gradient of `L + λ·C` at `w`.
///
/// Central differences with step `h` (default `1e-6·max(1, |w_k|)`). When a
/// coordinate lies closer than `h` to a box face, a one-sided difference
/// pointing into the box is used instead.
pub fn finite_diff_grad(problem: &Problem, lambda: &Multipliers, w: &[f64], h: Option<f64>) -> Result<Vec<f64>> {
    problem.check_multipliers(lambda)?;
    let ParamSpace::Box { lo, hi } = problem.space() else {
        return Err(Error::Unsupported("finite differences need a box space".into()));
    };
    if w.len() != lo.len() {
        return Err(Error::DimensionMismatch {
            what: "assignment",
            expected: lo.len(),
            got: w.len(),
        });
    }
    if let Some(h) = h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParam(format!("finite-difference step must be > 0, got {h}")));
        }
    }
    let f = |x: &[f64]| -> Result<f64> { Ok(problem.evaluate_raw(x)?.regularized(lambda)) };
    let mut x = w.to_vec();
    let mut grad = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        let hk = h.unwrap_or(1e-6 * w[k].abs().max(1.0));
        let room_up = hi[k] - w[k];
        let room_down = w[k] - lo[k];
        let g = if room_up >= hk && room_down >= hk {
            x[k] = w[k] + hk;
            let up = f(&x)?;
            x[k] = w[k] - hk;
            let down = f(&x)?;
            (up - down) / (2.0 * hk)
        } else if room_up >= room_down {
            let step = hk.min(room_up);
            x[k] = w[k] + step;
            let up = f(&x)?;
            x[k] = w[k];
            (up - f(&x)?) / step
        } else {
            let step = hk.min(room_down);
            x[k] = w[k] - step;
            let down = f(&x)?;
            x[k] = w[k];
            (f(&x)? - down) / step
        };
        x[k] = w[k];
        grad.push(g);
    }
    Ok(grad)
}
