//! Diagonal scaling decomposition `A = E⁻¹ · S · D⁻¹` where every row and
//! column of the core `S` has unit geometric mean over its nonzero entries.

use nalgebra::DVector;

use super::{validate, GiError, Matrix};

const MAX_SWEEPS: usize = 10_000;
/// Sweeps continue past this until the residual stops shrinking, so the
/// factors settle at rounding level rather than at the tolerance.
const LOG_TOL: f64 = 1e-12;

/// Result of [`scaling_decomposition`]: `core = diag(left) · a · diag(right)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFactors {
    pub left: DVector<f64>,
    pub core: Matrix,
    pub right: DVector<f64>,
    /// Rows with no nonzero entry; their scale is fixed at 1.
    pub zero_rows: Vec<usize>,
    /// Columns with no nonzero entry; their scale is fixed at 1.
    pub zero_cols: Vec<usize>,
    pub sweeps: usize,
}

impl ScalingFactors {
    /// `E⁻¹ · core · D⁻¹`, which should give back the input.
    pub fn reconstruct(&self) -> Matrix {
        Matrix::from_fn(self.core.nrows(), self.core.ncols(), |i, j| {
            self.core[(i, j)] / (self.left[i] * self.right[j])
        })
    }
}

pub fn scaling_decomposition(a: &Matrix) -> Result<ScalingFactors, GiError> {
    validate(a)?;
    scale_unchecked(a)
}

/// Alternating log-domain row/column normalization. Zero entries are left out
/// of every mean.
pub(crate) fn scale_unchecked(a: &Matrix) -> Result<ScalingFactors, GiError> {
    let (m, n) = a.shape();
    let logs = Matrix::from_fn(m, n, |i, j| {
        let v = a[(i, j)].abs();
        if v > 0.0 {
            v.ln()
        } else {
            f64::NAN
        }
    });
    let row_count: Vec<usize> = (0..m)
        .map(|i| (0..n).filter(|&j| !logs[(i, j)].is_nan()).count())
        .collect();
    let col_count: Vec<usize> = (0..n)
        .map(|j| (0..m).filter(|&i| !logs[(i, j)].is_nan()).count())
        .collect();
    if row_count.iter().all(|&c| c == 0) {
        return Err(GiError::Degenerate {
            block: None,
            reason: "matrix has no nonzero entry".into(),
        });
    }

    let mut r = vec![0.0; m];
    let mut c = vec![0.0; n];
    let mut sweeps = 0;
    let mut last_dev = f64::INFINITY;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for i in 0..m {
            if row_count[i] == 0 {
                continue;
            }
            let s: f64 = (0..n)
                .filter(|&j| !logs[(i, j)].is_nan())
                .map(|j| logs[(i, j)] + c[j])
                .sum();
            r[i] = -s / row_count[i] as f64;
        }
        for j in 0..n {
            if col_count[j] == 0 {
                continue;
            }
            let s: f64 = (0..m)
                .filter(|&i| !logs[(i, j)].is_nan())
                .map(|i| logs[(i, j)] + r[i])
                .sum();
            c[j] = -s / col_count[j] as f64;
        }
        // Columns are exact after their update; only rows can drift.
        let dev = (0..m)
            .filter(|&i| row_count[i] > 0)
            .map(|i| {
                let s: f64 = (0..n)
                    .filter(|&j| !logs[(i, j)].is_nan())
                    .map(|j| logs[(i, j)] + r[i] + c[j])
                    .sum();
                (s / row_count[i] as f64).abs()
            })
            .fold(0.0, f64::max);
        if dev == 0.0 || (dev < LOG_TOL && dev >= 0.5 * last_dev) {
            break;
        }
        last_dev = dev;
    }

    // Fix the scalar gauge (E·k, D/k) so that log E and log D have equal mean.
    let active_r: Vec<usize> = (0..m).filter(|&i| row_count[i] > 0).collect();
    let active_c: Vec<usize> = (0..n).filter(|&j| col_count[j] > 0).collect();
    let mean_r = active_r.iter().map(|&i| r[i]).sum::<f64>() / active_r.len() as f64;
    let mean_c = active_c.iter().map(|&j| c[j]).sum::<f64>() / active_c.len() as f64;
    let shift = 0.5 * (mean_r - mean_c);
    for &i in &active_r {
        r[i] -= shift;
    }
    for &j in &active_c {
        c[j] += shift;
    }

    let left = DVector::from_iterator(m, r.iter().map(|v| v.exp()));
    let right = DVector::from_iterator(n, c.iter().map(|v| v.exp()));
    let core = Matrix::from_fn(m, n, |i, j| left[i] * a[(i, j)] * right[j]);
    Ok(ScalingFactors {
        left,
        core,
        right,
        zero_rows: (0..m).filter(|&i| row_count[i] == 0).collect(),
        zero_cols: (0..n).filter(|&j| col_count[j] == 0).collect(),
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gi::testutil::{random_matrix, rel_frob, rng};
    use rand::Rng;

    fn log_mean_abs(vals: impl Iterator<Item = f64>) -> f64 {
        let logs: Vec<f64> = vals.filter(|v| *v != 0.0).map(|v| v.abs().ln()).collect();
        logs.iter().sum::<f64>() / logs.len() as f64
    }

    fn assert_unit_geometric_means(core: &Matrix, tol: f64) {
        for row in core.row_iter() {
            if row.iter().any(|v| *v != 0.0) {
                assert!(log_mean_abs(row.iter().copied()).abs() < tol);
            }
        }
        for col in core.column_iter() {
            if col.iter().any(|v| *v != 0.0) {
                assert!(log_mean_abs(col.iter().copied()).abs() < tol);
            }
        }
    }

    #[test]
    fn diagonal_normalizes_to_unit_magnitude() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 8.0]);
        let f = scaling_decomposition(&a).unwrap();
        assert!((f.core[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((f.core[(1, 1)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(f.core[(0, 1)], 0.0);
    }

    #[test]
    fn all_zero_is_degenerate() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(
            scaling_decomposition(&a),
            Err(GiError::Degenerate { .. })
        ));
    }

    #[test]
    fn zero_rows_and_columns_are_flagged() {
        let a = Matrix::from_row_slice(3, 3, &[1.0, 0.0, 4.0, 0.0, 0.0, 0.0, 2.0, 0.0, 3.0]);
        let f = scaling_decomposition(&a).unwrap();
        assert_eq!(f.zero_rows, vec![1]);
        assert_eq!(f.zero_cols, vec![1]);
        assert_eq!(f.left[1], 1.0);
        assert_eq!(f.right[1], 1.0);
        assert_unit_geometric_means(&f.core, 1e-10);
    }

    #[test]
    fn signs_stay_in_core_and_scales_are_positive() {
        let mut r = rng(3);
        let a = random_matrix(&mut r, 3, 4);
        let f = scaling_decomposition(&a).unwrap();
        assert!(f.left.iter().chain(f.right.iter()).all(|v| *v > 0.0));
        for (x, y) in f.core.iter().zip(a.iter()) {
            assert_eq!(x.signum(), y.signum());
        }
        assert!(rel_frob(&f.reconstruct(), &a) < 1e-13);
    }

    #[test]
    fn core_invariant_under_diagonal_rescaling() {
        let mut r = rng(5);
        for &(m, n) in &[(2, 3), (3, 2), (3, 7), (6, 7), (5, 5)] {
            for _ in 0..50 {
                let a = random_matrix(&mut r, m, n);
                let p: Vec<f64> = (0..m).map(|_| 10f64.powf(r.random_range(-3.0..3.0))).collect();
                let q: Vec<f64> = (0..n).map(|_| 10f64.powf(r.random_range(-3.0..3.0))).collect();
                let b = Matrix::from_fn(m, n, |i, j| p[i] * a[(i, j)] * q[j]);
                let fa = scaling_decomposition(&a).unwrap();
                let fb = scaling_decomposition(&b).unwrap();
                assert_unit_geometric_means(&fa.core, 1e-8);
                assert!((&fa.core - &fb.core).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn sparse_pattern_converges() {
        // ∂Z/∂θ1 style structural zero in an otherwise dense block.
        let a = Matrix::from_row_slice(3, 3, &[0.3, -0.2, 0.7, 0.5, 0.1, -0.4, 0.0, 0.9, 0.2]);
        let f = scaling_decomposition(&a).unwrap();
        assert!(f.sweeps < MAX_SWEEPS);
        assert_unit_geometric_means(&f.core, 1e-10);
    }
}
