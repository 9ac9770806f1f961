//! Small dense linear-algebra helpers shared by the set and learning code.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

/// Numerical rank: singular values above `RANK_TOL * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Right inverse `X^T (X X^T)^{-1}` of a full-row-rank matrix.
pub fn right_inverse(x: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let rows = x.nrows();
    let rank = numerical_rank(x);
    if rank < rows {
        return Err(Error::RankDeficient {
            what,
            rank,
            required: rows,
        });
    }
    let gram = x * x.transpose();
    let inv = gram
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::RankDeficient {
            what,
            rank,
            required: rows,
        })?;
    Ok(x.transpose() * inv)
}

/// Moore-Penrose pseudoinverse through the SVD, truncating singular values
/// below the relative threshold.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.max();
    let tol = RANK_TOL * max;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            out += (vt.row(i).transpose() / s) * u.column(i).transpose();
        }
    }
    out
}

/// Stacks a column vector `T` times side by side (`1_T^T ⊗ c`).
pub fn repeat_column(c: &DVector<f64>, times: usize) -> DMatrix<f64> {
    DMatrix::from_fn(c.len(), times, |i, _| c[i])
}

/// Smallest eigenvalue of the symmetric part of a square matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::INFINITY;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * m.amax().max(1.0)
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn right_inverse_of_identity() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(right_inverse(&i, "I").unwrap(), i, epsilon = 1e-14);
    }

    #[test]
    fn right_inverse_rejects_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            right_inverse(&m, "m"),
            Err(Error::RankDeficient { rank: 1, .. })
        ));
    }

    #[test]
    fn pseudo_inverse_matches_right_inverse_for_wide_matrices() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, -1.0, 0.0, 2.0, 1.0]);
        let a = pseudo_inverse(&m);
        let b = right_inverse(&m, "m").unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn pseudo_inverse_of_zero_is_zero() {
        let z = DMatrix::<f64>::zeros(2, 3);
        assert_eq!(pseudo_inverse(&z), DMatrix::zeros(3, 2));
    }
}
