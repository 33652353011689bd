use super::mp::pinv;
use super::scaling::scale_unchecked;
use super::{validate, GiError, Matrix};

/// Unit-consistent inverse `diag(D) · core⁺ · diag(E)` built on the scaling
/// decomposition `core = diag(E) · A · diag(D)`.
///
/// For positive diagonal `P`, `Q`: `uc(P A Q) = Q⁻¹ uc(A) P⁻¹`.
pub fn uc_inverse(a: &Matrix) -> Result<Matrix, GiError> {
    validate(a)?;
    ucinv(a)
}

/// Same as [`uc_inverse`] without input validation; empty blocks map to the
/// transposed empty shape.
pub(crate) fn ucinv(a: &Matrix) -> Result<Matrix, GiError> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Matrix::zeros(n, m));
    }
    let f = scale_unchecked(a)?;
    let core_pinv = pinv(&f.core);
    Ok(Matrix::from_fn(n, m, |j, i| {
        f.right[j] * core_pinv[(j, i)] * f.left[i]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gi::testutil::{random_matrix, rel_frob, rng};
    use rand::Rng;

    #[test]
    fn positive_diagonal_inverts_exactly() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let x = uc_inverse(&a).unwrap();
        assert!((x - Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25])).amax() < 1e-15);
    }

    #[test]
    fn all_zero_input_is_degenerate() {
        assert!(matches!(
            uc_inverse(&Matrix::zeros(2, 2)),
            Err(GiError::Degenerate { .. })
        ));
    }

    #[test]
    fn seeded_consistency_with_unit_change_on_first_columns() {
        let mut r = rng(2024);
        let a = random_matrix(&mut r, 2, 3);
        let p = [1.0, 1.0];
        let q = [1000.0, 1000.0, 1.0];
        let scaled = Matrix::from_fn(2, 3, |i, j| p[i] * a[(i, j)] * q[j]);
        let expect = Matrix::from_fn(3, 2, |j, i| uc_inverse(&a).unwrap()[(j, i)] / (q[j] * p[i]));
        assert!(rel_frob(&uc_inverse(&scaled).unwrap(), &expect) < 1e-8);
    }

    #[test]
    fn generalized_inverse_conditions() {
        let mut r = rng(99);
        for &(m, n) in &[(2, 3), (3, 2), (3, 7), (6, 7), (5, 5)] {
            for _ in 0..50 {
                let a = random_matrix(&mut r, m, n);
                let x = uc_inverse(&a).unwrap();
                assert!(rel_frob(&(&a * &x * &a), &a) < 1e-8);
                assert!(rel_frob(&(&x * &a * &x), &x) < 1e-8);
            }
        }
    }

    #[test]
    fn square_nonsingular_matches_true_inverse() {
        let mut r = rng(1);
        let a = random_matrix(&mut r, 4, 4);
        let inv = a.clone().try_inverse().unwrap();
        assert!(rel_frob(&uc_inverse(&a).unwrap(), &inv) < 1e-10);
    }

    #[test]
    fn diagonal_scaling_consistency() {
        let mut r = rng(17);
        for _ in 0..200 {
            let a = random_matrix(&mut r, 3, 5);
            let p: Vec<f64> = (0..3).map(|_| 10f64.powf(r.random_range(-3.0..3.0))).collect();
            let q: Vec<f64> = (0..5).map(|_| 10f64.powf(r.random_range(-3.0..3.0))).collect();
            let b = Matrix::from_fn(3, 5, |i, j| p[i] * a[(i, j)] * q[j]);
            let xa = uc_inverse(&a).unwrap();
            let expect = Matrix::from_fn(5, 3, |j, i| xa[(j, i)] / (q[j] * p[i]));
            assert!(rel_frob(&uc_inverse(&b).unwrap(), &expect) < 1e-8);
        }
    }
}
