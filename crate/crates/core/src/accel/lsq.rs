//! `min ||F a||` subject to `sum(a) = 1`.
//!
//! The constraint is removed by writing `a = 1/p + Q z`, where the columns of
//! `Q` are an orthonormal basis of `{x : sum(x) = 0}`. The remaining problem
//! `min_z ||F Q z + F 1/p||` is an ordinary least-squares problem whose
//! minimum-norm solution gives the minimum-norm feasible `a` as well, since
//! `1/p` is orthogonal to the range of `Q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SchwarzError};

/// Orthonormal basis of the hyperplane `sum(x) = 0` in `R^p`, as a `p x (p-1)`
/// matrix. Built from the Householder reflector that maps `1/sqrt(p)` to `-e_1`.
fn zero_sum_basis(p: usize) -> DMatrix<f64> {
    let s = 1.0 / (p as f64).sqrt();
    let mut w = DVector::from_element(p, s);
    w[0] += 1.0;
    let wn2 = w.norm_squared();
    let mut h = DMatrix::<f64>::identity(p, p);
    h -= (&w * w.transpose()) * (2.0 / wn2);
    h.columns(1, p - 1).into_owned()
}

/// Minimum-norm least-squares solution of `a z = b`, discarding singular
/// values at or below `tol`.
///
/// Uses one-sided Jacobi rotations. nalgebra's bidiagonal SVD can return a
/// decomposition that does not reproduce the matrix when a singular value is
/// exactly zero, which is the normal case here (duplicated history columns).
fn min_norm_solve(mut a: DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let k = a.ncols();
    let mut v = DMatrix::<f64>::identity(k, k);
    let negligible = (f64::EPSILON * a.norm()).powi(2);
    let mut converged = false;
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..k {
            for j in i + 1..k {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if alpha.min(beta) <= negligible
                    || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut a, &mut v] {
                    for r in 0..m.nrows() {
                        let (x, y) = (m[(r, i)], m[(r, j)]);
                        m[(r, i)] = c * x - s * y;
                        m[(r, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SchwarzError::Accelerator(
            "least-squares solve failed: Jacobi SVD did not converge".into(),
        ));
    }
    // columns of `a` are now sigma_i u_i, orthogonal to each other
    let mut z = DVector::zeros(k);
    for i in 0..k {
        let sigma2 = a.column(i).norm_squared();
        if sigma2.sqrt() > tol {
            z += v.column(i) * (a.column(i).dot(b) / sigma2);
        }
    }
    Ok(z)
}

/// Solves the equality-constrained least-squares problem on the columns of `f`.
///
/// Rank deficiency is resolved by taking the minimum-norm solution, so an
/// all-zero `f` yields uniform weights and duplicated columns share weight equally.
pub fn solve_constrained_ls(f: &DMatrix<f64>) -> Result<DVector<f64>> {
    let p = f.ncols();
    if p == 0 {
        return Err(SchwarzError::Accelerator(
            "least-squares problem with no columns".into(),
        ));
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(SchwarzError::Accelerator(
            "non-finite residual in least-squares problem".into(),
        ));
    }
    if p == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }

    let center = DVector::from_element(p, 1.0 / p as f64);
    let q = zero_sum_basis(p);
    let a = f * &q;
    let b = f * &center;

    // Rank decisions are made relative to F itself: the projected matrix of
    // duplicated columns is rounding noise, not signal.
    let fnorm = f.norm();
    let tol = fnorm * f64::EPSILON * 8.0 * (f.nrows().max(p) as f64);
    let z = if fnorm == 0.0 {
        DVector::zeros(p - 1)
    } else {
        min_norm_solve(a, &(-b), tol)?
    };

    Ok(center + q * z)
}
