use serde::{Deserialize, Serialize};

use super::mp::pinv;
use super::uc::ucinv;
use super::{validate, GiError, Matrix};

/// Rows and columns of the unit-sensitive block `A_W`.
///
/// After permuting those indices to the top-left, the matrix reads
/// `[[A_W, A_X], [A_Y, A_Z]]`. Either list may be empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub w_rows: Vec<usize>,
    pub w_cols: Vec<usize>,
}

impl PartitionSpec {
    pub fn new(w_rows: Vec<usize>, w_cols: Vec<usize>) -> Self {
        Self { w_rows, w_cols }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Every row and column in `A_W`.
    pub fn whole(rows: usize, cols: usize) -> Self {
        Self::new((0..rows).collect(), (0..cols).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.w_rows.is_empty() && self.w_cols.is_empty()
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<(), GiError> {
        check_indices("row", &self.w_rows, rows)?;
        check_indices("column", &self.w_cols, cols)
    }

    fn covers(&self, rows: usize, cols: usize) -> bool {
        self.w_rows.len() == rows && self.w_cols.len() == cols
    }

    /// Indices not in `w`, ascending.
    fn complement(w: &[usize], len: usize) -> Vec<usize> {
        (0..len).filter(|i| !w.contains(i)).collect()
    }
}

fn check_indices(what: &str, idx: &[usize], len: usize) -> Result<(), GiError> {
    for (k, &i) in idx.iter().enumerate() {
        if i >= len {
            return Err(GiError::Partition(format!(
                "{what} index {i} out of range 0..{len}"
            )));
        }
        if idx[..k].contains(&i) {
            return Err(GiError::Partition(format!("duplicate {what} index {i}")));
        }
    }
    Ok(())
}

fn select(a: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

/// Mixed inverse: UC on the unit-sensitive block, MP on the rest, combined
/// through the block-inverse formula
///
/// ```text
/// B11 = (A_W - A_X A_Z⁻ᴹᴾ A_Y)⁻ᵁᶜ
/// B12 = -A_W⁻ᵁᶜ A_X (A_Z - A_Y A_W⁻ᵁᶜ A_X)⁻ᴹᴾ
/// B21 = -A_Z⁻ᴹᴾ A_Y (A_W - A_X A_Z⁻ᴹᴾ A_Y)⁻ᵁᶜ
/// B22 = (A_Z - A_Y A_W⁻ᵁᶜ A_X)⁻ᴹᴾ
/// ```
///
/// An empty spec gives the MP inverse; a spec covering the whole matrix gives
/// the UC inverse.
pub fn mx_inverse(a: &Matrix, spec: &PartitionSpec) -> Result<Matrix, GiError> {
    validate(a)?;
    let (m, n) = a.shape();
    spec.validate(m, n)?;
    if spec.is_empty() {
        return Ok(pinv(a));
    }
    if spec.covers(m, n) {
        return ucinv(a).map_err(|e| e.in_block("A_W"));
    }

    let wr = &spec.w_rows;
    let wc = &spec.w_cols;
    let zr = PartitionSpec::complement(wr, m);
    let zc = PartitionSpec::complement(wc, n);

    let a_w = select(a, wr, wc);
    let a_x = select(a, wr, &zc);
    let a_y = select(a, &zr, wc);
    let a_z = select(a, &zr, &zc);

    let a_z_mp = pinv(&a_z);
    let a_w_uc = if a_w.is_empty() {
        Matrix::zeros(wc.len(), wr.len())
    } else {
        ucinv(&a_w).map_err(|e| e.in_block("A_W"))?
    };

    let schur_w = &a_w - &a_x * &a_z_mp * &a_y;
    let schur_z = &a_z - &a_y * &a_w_uc * &a_x;
    let b11 = if schur_w.is_empty() {
        Matrix::zeros(wc.len(), wr.len())
    } else {
        ucinv(&schur_w).map_err(|e| e.in_block("B11"))?
    };
    let b22 = pinv(&schur_z);
    let b12 = -(&a_w_uc * &a_x * &b22);
    let b21 = -(&a_z_mp * &a_y * &b11);

    let mut x = Matrix::zeros(n, m);
    for (bi, &col) in wc.iter().enumerate() {
        for (bj, &row) in wr.iter().enumerate() {
            x[(col, row)] = b11[(bi, bj)];
        }
        for (bj, &row) in zr.iter().enumerate() {
            x[(col, row)] = b12[(bi, bj)];
        }
    }
    for (bi, &col) in zc.iter().enumerate() {
        for (bj, &row) in wr.iter().enumerate() {
            x[(col, row)] = b21[(bi, bj)];
        }
        for (bj, &row) in zr.iter().enumerate() {
            x[(col, row)] = b22[(bi, bj)];
        }
    }
    Ok(x)
}
