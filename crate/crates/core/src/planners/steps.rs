use nalgebra::DVector;

use super::{GainSet, PlanError};
use crate::gi::{GeneralizedInverse, Matrix};

pub type Vector = DVector<f64>;

fn check_rows(j: &Matrix, v: &Vector, what: &str) -> Result<(), PlanError> {
    if j.nrows() != v.len() {
        return Err(PlanError::Shape(format!(
            "{what} has {} entries, Jacobian has {} rows",
            v.len(),
            j.nrows()
        )));
    }
    Ok(())
}

fn check_cols(j: &Matrix, v: &Vector, what: &str) -> Result<(), PlanError> {
    if j.ncols() != v.len() {
        return Err(PlanError::Shape(format!(
            "{what} has {} entries, Jacobian has {} columns",
            v.len(),
            j.ncols()
        )));
    }
    Ok(())
}

/// `Q̇ = J⁻·Ḋ_d`.
pub fn step_mvn(j: &Matrix, rate: &Vector, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
    check_rows(j, rate, "task rate")?;
    Ok(gi.invert(j)? * rate)
}

/// `J_W⁻ = W^{-1/2} · G(J W^{-1/2})`. For the Moore-Penrose inverse and full
/// row rank this is `W⁻¹Jᵀ(JW⁻¹Jᵀ)⁻¹`.
pub fn weighted_inverse(
    j: &Matrix,
    w: &[f64],
    gi: &dyn GeneralizedInverse,
) -> Result<Matrix, PlanError> {
    if w.len() != j.ncols() {
        return Err(PlanError::Shape(format!(
            "weight has {} entries, Jacobian has {} columns",
            w.len(),
            j.ncols()
        )));
    }
    let root: Vec<f64> = w.iter().map(|x| 1.0 / x.sqrt()).collect();
    let jw = Matrix::from_fn(j.nrows(), j.ncols(), |r, c| j[(r, c)] * root[c]);
    let inv = gi.invert(&jw)?;
    Ok(Matrix::from_fn(inv.nrows(), inv.ncols(), |r, c| root[r] * inv[(r, c)]))
}

/// Condition number of a symmetric positive semi-definite matrix after
/// Jacobi equilibration, so diagonal unit changes do not move it.
fn equilibrated_condition(g: &Matrix) -> f64 {
    let d: Vec<f64> = (0..g.nrows()).map(|i| g[(i, i)]).collect();
    if d.iter().any(|x| !(*x > 0.0)) {
        return f64::INFINITY;
    }
    let s = Matrix::from_fn(g.nrows(), g.ncols(), |r, c| g[(r, c)] / (d[r] * d[c]).sqrt());
    let ev = s.symmetric_eigenvalues();
    let (lo, hi) = ev
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

const GRAM_COND_LIMIT: f64 = 1e12;

/// `J M Jᵀ` for diagonal `M`.
fn weighted_gram(j: &Matrix, m: &[f64]) -> Matrix {
    let jm = Matrix::from_fn(j.nrows(), j.ncols(), |r, c| j[(r, c)] * m[c]);
    jm * j.transpose()
}

fn check_gram(g: &Matrix) -> Result<(), PlanError> {
    let cond = equilibrated_condition(g);
    if cond > GRAM_COND_LIMIT {
        return Err(PlanError::NearSingular { condition: cond });
    }
    Ok(())
}

/// Weighted minimum-norm rate.
pub fn step_wmvn(
    j: &Matrix,
    rate: &Vector,
    w: &[f64],
    gi: &dyn GeneralizedInverse,
) -> Result<Vector, PlanError> {
    check_rows(j, rate, "task rate")?;
    let inv_w: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
    if j.nrows() <= j.ncols() {
        check_gram(&weighted_gram(j, &inv_w))?;
    }
    Ok(weighted_inverse(j, w, gi)? * rate)
}

/// `Q̇ = J⁻(Ḋ_d − α e − β ∫e)`, `e = f(Q) − D_d`.
pub fn step_pid_ppp(
    j: &Matrix,
    rate: &Vector,
    error: &Vector,
    integral: &Vector,
    gains: &GainSet,
    gi: &dyn GeneralizedInverse,
) -> Result<Vector, PlanError> {
    check_rows(j, rate, "task rate")?;
    check_rows(j, error, "pose error")?;
    check_rows(j, integral, "error integral")?;
    let v = rate - error * gains.alpha - integral * gains.beta;
    Ok(gi.invert(j)? * v)
}

/// `Q̈ = J⁻(D̈_d − J̇Q̇)`.
pub fn step_man(
    j: &Matrix,
    jdot: &Matrix,
    qdot: &Vector,
    accel: &Vector,
    gi: &dyn GeneralizedInverse,
) -> Result<Vector, PlanError> {
    check_rows(j, accel, "task acceleration")?;
    check_cols(j, qdot, "joint rate")?;
    Ok(gi.invert(j)? * (accel - jdot * qdot))
}

/// Inputs of the feedback-added acceleration scheme.
pub struct FpbmInput<'a> {
    pub j: &'a Matrix,
    pub jdot: &'a Matrix,
    pub qdot: &'a Vector,
    /// `f(Q) − D_d`
    pub error: &'a Vector,
    pub rate: &'a Vector,
    pub accel: &'a Vector,
}

/// ```text
/// Q̈ = (a J_W⁻ + (1 − a) J⁻)(D̈_d − J̇Q̇ + k1(Ḋ_d − JQ̇) − k2 e)
///     + a (I − J_W⁻ J) M J̇ᵀ (J M Jᵀ)⁻ Ḋ_d
/// ```
///
/// `M = W⁻¹` for backends without a joint scale. Backends that supply one
/// (`D`) use `M = diag(D) W⁻¹ diag(D)`, which keeps the null-space term
/// independent of the length unit.
pub fn step_fpbm(
    inp: &FpbmInput<'_>,
    gains: &GainSet,
    gi: &dyn GeneralizedInverse,
) -> Result<Vector, PlanError> {
    let j = inp.j;
    check_rows(j, inp.rate, "task rate")?;
    check_rows(j, inp.accel, "task acceleration")?;
    check_rows(j, inp.error, "pose error")?;
    check_cols(j, inp.qdot, "joint rate")?;
    let n = j.ncols();
    let w = gains.weight(n);
    let a = gains.fpbm_weight;

    let j_w = weighted_inverse(j, &w, gi)?;
    let j_p = gi.invert(j)?;
    let blend = &j_w * a + &j_p * (1.0 - a);
    let task = inp.accel - inp.jdot * inp.qdot + (inp.rate - j * inp.qdot) * gains.k1
        - inp.error * gains.k2;

    let mut metric: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
    if let Some(d) = gi.joint_scale(j)? {
        for (m, dk) in metric.iter_mut().zip(d.iter()) {
            *m *= dk * dk;
        }
    }
    let gram = weighted_gram(j, &metric);
    check_gram(&gram)?;
    let gram_inv = gi.invert_task_gram(&gram)?;
    let mjdt = Matrix::from_fn(n, j.nrows(), |r, c| metric[r] * inp.jdot[(c, r)]);
    let proj = Matrix::identity(n, n) - &j_w * j;
    let null = proj * (mjdt * (gram_inv * inp.rate)) * a;
    Ok(blend * task + null)
}
