//! Empirical convergence order from a sequence of iteration errors.

use std::path::Path;

use serde::Serialize;

use crate::error::{Result, SchwarzError};

/// Which part of an error sequence counts as asymptotic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderWindow {
    /// Errors at or above this are pre-asymptotic.
    pub upper: f64,
    /// Errors at or below this are treated as roundoff.
    pub lower: f64,
    /// Whether to ignore the last entry (the converged iterate).
    pub drop_last: bool,
}

impl Default for OrderWindow {
    fn default() -> Self {
        Self {
            upper: 0.1,
            lower: 1e-14,
            drop_last: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderEstimate {
    /// Errors inside the window, in iteration order.
    pub errors: Vec<f64>,
    /// `C_k = e_{k+1} / e_k^2` for consecutive window entries.
    pub c_k: Vec<f64>,
    /// Least-squares slope of `ln e_{k+1}` against `ln e_k`.
    pub order: f64,
    /// Geometric mean of `e_{k+1} / e_k`.
    pub factor: f64,
}

/// Estimates the convergence order from errors `e_1, e_2, ...`.
///
/// The longest contiguous run of errors strictly inside `(lower, upper)` is used
/// and must contain at least four values.
pub fn estimate_order(errors: &[f64], window: OrderWindow) -> Result<OrderEstimate> {
    let usable = if window.drop_last && !errors.is_empty() {
        &errors[..errors.len() - 1]
    } else {
        errors
    };
    let inside = |e: f64| e.is_finite() && e > window.lower && e < window.upper;

    let (mut best, mut start) = ((0, 0), None);
    for (i, &e) in usable.iter().enumerate() {
        match (inside(e), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if usable.len() - s > best.1 - best.0 {
            best = (s, usable.len());
        }
    }
    let w = &usable[best.0..best.1];
    if w.len() < 4 {
        return Err(SchwarzError::invalid(format!(
            "need at least 4 errors in ({:e}, {:e}) for an order estimate, found {}",
            window.lower,
            window.upper,
            w.len()
        )));
    }

    let pairs: Vec<(f64, f64)> = w.windows(2).map(|p| (p[0], p[1])).collect();
    let c_k = pairs.iter().map(|(a, b)| b / (a * a)).collect();
    let xs: Vec<f64> = pairs.iter().map(|(a, _)| a.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|(_, b)| b.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SchwarzError::invalid(
            "errors are constant inside the window",
        ));
    }
    let factor = (ys.iter().zip(&xs).map(|(y, x)| y - x).sum::<f64>() / n).exp();
    Ok(OrderEstimate {
        errors: w.to_vec(),
        c_k,
        order: sxy / sxx,
        factor,
    })
}

/// Reads the named column (usually `e_rel` or `e_abs`) of a trace CSV and
/// estimates the order from it.
pub fn order_from_trace(path: &Path, column: &str, window: OrderWindow) -> Result<OrderEstimate> {
    let mut rdr = csv::Reader::from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| SchwarzError::Parse(format!("no column {column} in {}", path.display())))?;
    let mut errors = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("");
        let v: f64 = field
            .parse()
            .map_err(|_| SchwarzError::Parse(format!("bad number {field:?} in column {column}")))?;
        errors.push(v);
    }
    estimate_order(&errors, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn geometric_sequence_is_first_order() {
        let e: Vec<f64> = (0..30).map(|k| 0.5f64.powi(k)).collect();
        let est = estimate_order(&e, OrderWindow::default()).unwrap();
        assert_relative_eq!(est.order, 1.0, epsilon = 1e-12);
        assert_relative_eq!(est.factor, 0.5, epsilon = 1e-12);
        assert!(est.errors.iter().all(|&x| x < 0.1));
    }

    #[test]
    fn squared_sequence_is_second_order() {
        let mut e = vec![0.09];
        while *e.last().unwrap() > 1e-13 {
            let l = *e.last().unwrap();
            e.push(3.0 * l * l);
        }
        e.push(1e-20);
        let w = OrderWindow {
            lower: 1e-300,
            ..OrderWindow::default()
        };
        let est = estimate_order(&e, w).unwrap();
        assert_relative_eq!(est.order, 2.0, epsilon = 1e-10);
        for c in est.c_k {
            assert_relative_eq!(c, 3.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn too_few_points_is_an_error() {
        assert!(estimate_order(&[0.05, 0.01, 0.001], OrderWindow::default()).is_err());
        assert!(estimate_order(&[], OrderWindow::default()).is_err());
    }

    #[test]
    fn longest_contiguous_run_is_used() {
        let e = [0.05, 0.02, 0.5, 0.04, 0.02, 0.01, 0.005, 0.0025, 1.0];
        let est = estimate_order(&e, OrderWindow::default()).unwrap();
        assert_eq!(est.errors, vec![0.04, 0.02, 0.01, 0.005, 0.0025]);
    }
}
