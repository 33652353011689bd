use super::svd::svd_unchecked;
use super::{validate, GiError, Matrix};

/// Singular values at or below this are treated as zero.
pub fn rank_tolerance(rows: usize, cols: usize, s_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * s_max
}

/// Moore-Penrose inverse `V S⁺ Uᵀ`.
pub fn mp_inverse(a: &Matrix) -> Result<Matrix, GiError> {
    validate(a)?;
    Ok(pinv(a))
}

/// Pseudo-inverse that also accepts zero-sized blocks (returns the n×m empty
/// or zero matrix). Used by the block formula where partitions may be empty.
pub(crate) fn pinv(a: &Matrix) -> Matrix {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Matrix::zeros(n, m);
    }
    let f = svd_unchecked(a);
    let tol = rank_tolerance(m, n, f.s[0]);
    let mut out = Matrix::zeros(n, m);
    for (k, &s) in f.s.iter().enumerate() {
        if s > tol {
            out += (f.v.column(k) / s) * f.u.column(k).transpose();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gi::testutil::{random_matrix, rel_frob, rng};

    fn penrose_residuals(a: &Matrix, x: &Matrix) -> [f64; 4] {
        let ax = a * x;
        let xa = x * a;
        [
            rel_frob(&(&ax * a), a),
            rel_frob(&(&xa * x), x),
            rel_frob(&ax.transpose(), &ax),
            rel_frob(&xa.transpose(), &xa),
        ]
    }

    #[test]
    fn identity_inverts_to_identity() {
        let x = mp_inverse(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(x, Matrix::identity(3, 3));
    }

    #[test]
    fn rank_deficient_diagonal() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let x = mp_inverse(&a).unwrap();
        assert_eq!(x, Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn matches_normal_equations_on_reference_jacobian() {
        // Full row rank, so A⁺ = Aᵀ (A Aᵀ)⁻¹.
        let a = Matrix::from_row_slice(2, 3, &[-1.80, -1.30, 0.86, 0.80, -0.05, -0.50]);
        let oracle = a.transpose() * (&a * a.transpose()).try_inverse().unwrap();
        let x = mp_inverse(&a).unwrap();
        assert!(rel_frob(&x, &oracle) < 1e-12);
        assert!(penrose_residuals(&a, &x).iter().all(|r| *r < 1e-12));
    }

    #[test]
    fn penrose_conditions_hold_on_random_shapes() {
        let mut r = rng(11);
        for &(m, n) in &[(2, 3), (3, 2), (3, 7), (6, 7), (5, 5)] {
            for _ in 0..100 {
                let a = random_matrix(&mut r, m, n);
                let x = mp_inverse(&a).unwrap();
                for res in penrose_residuals(&a, &x) {
                    assert!(res < 1e-8, "{m}x{n}: residual {res}");
                }
            }
        }
    }

    #[test]
    fn empty_block_pinv_is_transposed_shape() {
        let a = Matrix::zeros(0, 3);
        assert_eq!(pinv(&a).shape(), (3, 0));
    }
}
