//! Regularizers applied to model outputs y = f(x; w).

use crate::error::{Error, Result};

/// `max(0, y_i - y_j)`: zero iff `y_i <= y_j`.
pub fn hinge_order_penalty(y: &[f64], i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidParam(format!("hinge penalty needs distinct indices, got {i} twice")));
    }
    let n = y.len();
    match (y.get(i), y.get(j)) {
        (Some(&yi), Some(&yj)) => Ok((yi - yj).max(0.0)),
        _ => Err(Error::InvalidParam(format!("hinge indices ({i}, {j}) out of range for {n} outputs"))),
    }
}

/// `|Σ y_i - n/2|` over binary or relaxed outputs in `[0, 1]`.
pub fn balance_penalty(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::InvalidParam("balance penalty needs at least one output".into()));
    }
    if let Some(bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParam(format!("balance penalty output {bad} outside [0, 1]")));
    }
    let sum: f64 = y.iter().sum();
    Ok((sum - y.len() as f64 / 2.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hinge_cases() {
        assert_eq!(hinge_order_penalty(&[1.0, 2.0], 0, 1).unwrap(), 0.0);
        assert_eq!(hinge_order_penalty(&[2.0, 1.0], 0, 1).unwrap(), 1.0);
        for c in [-3.5, 0.0, 7.25] {
            assert_eq!(hinge_order_penalty(&[c, c], 0, 1).unwrap(), 0.0);
        }
        assert!(hinge_order_penalty(&[1.0, 2.0], 0, 2).is_err());
        assert!(hinge_order_penalty(&[1.0, 2.0], 1, 1).is_err());
    }

    #[test]
    fn balance_cases() {
        assert_eq!(balance_penalty(&[1.0, 1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(balance_penalty(&[1.0, 1.0, 1.0, 0.0]).unwrap(), 1.0);
        // The relaxed penalty is satisfied by completely uncertain outputs.
        assert_eq!(balance_penalty(&[0.5; 4]).unwrap(), 0.0);
        assert!(balance_penalty(&[]).is_err());
        assert!(balance_penalty(&[1.2, 0.0]).is_err());
        assert!(balance_penalty(&[-0.1, 0.0]).is_err());
    }
}
