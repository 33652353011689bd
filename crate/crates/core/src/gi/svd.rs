use nalgebra::{DVector, SVD};

use super::{validate, GiError, Matrix};

/// Thin singular value decomposition `A = U diag(S) Vᵀ`.
///
/// `u` is m×r, `v` is n×r with r = min(m, n); singular values are sorted in
/// descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: Matrix,
    pub s: DVector<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rank_bound(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        &self.u * Matrix::from_diagonal(&self.s) * self.v.transpose()
    }
}

pub fn svd(a: &Matrix) -> Result<SvdFactors, GiError> {
    validate(a)?;
    Ok(svd_unchecked(a))
}

pub(crate) fn svd_unchecked(a: &Matrix) -> SvdFactors {
    let dec = SVD::new(a.clone(), true, true);
    // Both factors were requested above, so they are always present.
    let u = dec.u.expect("left singular vectors");
    let v_t = dec.v_t.expect("right singular vectors");
    SvdFactors {
        u,
        s: dec.singular_values,
        v: v_t.transpose(),
    }
}
