//! Serial-arm kinematics on standard DH tables.

mod dh;

pub use dh::{
    rescale_units, DhRow, DhTable, JointEntry, JointKind, RobotFile, TaskSpace, UnitScale,
};

use nalgebra::{DVector, Matrix3, Matrix4, Vector3};
use thiserror::Error;

use crate::gi::{Matrix, PartitionSpec};
use dh::sin_cos_exact;

/// Joint positions: radians for revolute joints, model lengths for prismatic.
pub type JointVector = DVector<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("expected {expected} joint values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("roll-pitch-yaw rate mapping is singular (pitch = {pitch} rad)")]
    RpySingularity { pitch: f64 },
    #[error("invalid robot: {0}")]
    Invalid(String),
    #[error("robot file: {0}")]
    Parse(String),
}

/// End-effector pose. Orientation is fixed-axis x-y-z roll/pitch/yaw, i.e.
/// `R = Rz(yaw) · Ry(pitch) · Rx(roll)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub rpy: Vector3<f64>,
}

fn check_len(dh: &DhTable, q: &JointVector) -> Result<(), KinematicsError> {
    if q.len() != dh.dof() {
        return Err(KinematicsError::LengthMismatch {
            expected: dh.dof(),
            got: q.len(),
        });
    }
    Ok(())
}

fn link_transform(row: &DhRow, qi: f64) -> Matrix4<f64> {
    let (theta, d) = match row.kind {
        JointKind::Revolute => (row.theta_offset + qi, row.d),
        JointKind::Prismatic => (row.theta_offset, row.d + qi),
    };
    let (st, ct) = match row.kind {
        JointKind::Revolute => theta.sin_cos(),
        JointKind::Prismatic => sin_cos_exact(theta),
    };
    let (sa, ca) = sin_cos_exact(row.alpha);
    #[rustfmt::skip]
    let t = Matrix4::new(
        ct, -st * ca,  st * sa, row.a * ct,
        st,  ct * ca, -ct * sa, row.a * st,
        0.0,      sa,       ca, d,
        0.0,     0.0,      0.0, 1.0,
    );
    t
}

/// Base-to-frame transforms `T_0 = I, T_1, …, T_n`.
fn frames(dh: &DhTable, q: &JointVector) -> Vec<Matrix4<f64>> {
    let mut out = Vec::with_capacity(dh.dof() + 1);
    let mut t = Matrix4::identity();
    out.push(t);
    for (row, &qi) in dh.rows.iter().zip(q.iter()) {
        t *= link_transform(row, qi);
        out.push(t);
    }
    out
}

fn origin(t: &Matrix4<f64>) -> Vector3<f64> {
    Vector3::new(t[(0, 3)], t[(1, 3)], t[(2, 3)])
}

fn z_axis(t: &Matrix4<f64>) -> Vector3<f64> {
    Vector3::new(t[(0, 2)], t[(1, 2)], t[(2, 2)])
}

pub fn rotation_to_rpy(r: &Matrix3<f64>) -> Vector3<f64> {
    let pitch = (-r[(2, 0)]).atan2((r[(0, 0)].powi(2) + r[(1, 0)].powi(2)).sqrt());
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    Vector3::new(roll, pitch, yaw)
}

pub fn forward_kinematics(dh: &DhTable, q: &JointVector) -> Result<Pose, KinematicsError> {
    check_len(dh, q)?;
    let t = frames(dh, q).pop().expect("at least the base frame");
    let r = t.fixed_view::<3, 3>(0, 0).into_owned();
    Ok(Pose {
        position: origin(&t),
        rpy: rotation_to_rpy(&r),
    })
}

/// The task vector for this robot: `[x, y]` or `[x, y, z, roll, pitch, yaw]`.
pub fn task_pose(dh: &DhTable, q: &JointVector) -> Result<DVector<f64>, KinematicsError> {
    let p = forward_kinematics(dh, q)?;
    Ok(match dh.task {
        TaskSpace::PlanarXy => DVector::from_vec(vec![p.position.x, p.position.y]),
        TaskSpace::PoseRpy => DVector::from_iterator(
            6,
            p.position.iter().chain(p.rpy.iter()).copied(),
        ),
    })
}

/// Maps roll/pitch/yaw rates to angular velocity: `ω = T(rpy) · rpy_dot`.
pub fn rpy_rate_matrix(rpy: &Vector3<f64>) -> Matrix3<f64> {
    let (sp, cp) = rpy.y.sin_cos();
    let (sy, cy) = rpy.z.sin_cos();
    #[rustfmt::skip]
    let t = Matrix3::new(
        cp * cy, -sy, 0.0,
        cp * sy,  cy, 0.0,
        -sp,     0.0, 1.0,
    );
    t
}

/// Inverse of [`rpy_rate_matrix`]; fails near pitch = ±90°.
pub fn rpy_rate_inverse(rpy: &Vector3<f64>) -> Result<Matrix3<f64>, KinematicsError> {
    let (sp, cp) = rpy.y.sin_cos();
    if cp.abs() < 1e-6 {
        return Err(KinematicsError::RpySingularity { pitch: rpy.y });
    }
    let (sy, cy) = rpy.z.sin_cos();
    #[rustfmt::skip]
    let inv = Matrix3::new(
        cy / cp,      sy / cp,      0.0,
        -sy,          cy,           0.0,
        sp * cy / cp, sp * sy / cp, 1.0,
    );
    Ok(inv)
}

/// Task-space Jacobian. Position rows are `z × (p_e − p)` for revolute joints
/// and `z` for prismatic ones. For `PoseRpy` robots the angular rows are
/// converted to roll/pitch/yaw rates.
pub fn geometric_jacobian(dh: &DhTable, q: &JointVector) -> Result<Matrix, KinematicsError> {
    check_len(dh, q)?;
    let fr = frames(dh, q);
    let n = dh.dof();
    let pe = origin(&fr[n]);
    let mut lin = Matrix::zeros(3, n);
    let mut ang = Matrix::zeros(3, n);
    for (i, row) in dh.rows.iter().enumerate() {
        let z = z_axis(&fr[i]);
        let (v, w) = match row.kind {
            JointKind::Revolute => {
                let o = origin(&fr[i]);
                // Components that are pure rounding residue (an axis through
                // the end effector) are set to exact zeros, relative to the
                // coordinates involved so the cut does not depend on units.
                let floor = 1e-12 * pe.norm().max(o.norm());
                let v = z.cross(&(pe - o)).map(|c| if c.abs() <= floor { 0.0 } else { c });
                (v, z)
            }
            JointKind::Prismatic => (z, Vector3::zeros()),
        };
        lin.column_mut(i).copy_from(&v);
        ang.column_mut(i).copy_from(&w);
    }
    match dh.task {
        TaskSpace::PlanarXy => Ok(lin.rows(0, 2).into_owned()),
        TaskSpace::PoseRpy => {
            let r = fr[n].fixed_view::<3, 3>(0, 0).into_owned();
            let tinv = rpy_rate_inverse(&rotation_to_rpy(&r))?;
            let ang_rpy = Matrix::from_fn(3, n, |i, j| {
                (0..3).map(|k| tinv[(i, k)] * ang[(k, j)]).sum()
            });
            let mut j = Matrix::zeros(6, n);
            j.rows_mut(0, 3).copy_from(&lin);
            j.rows_mut(3, 3).copy_from(&ang_rpy);
            Ok(j)
        }
    }
}

/// Closed-form Jacobian of the planar 2RP arm:
///
/// ```text
/// x = a1 C1 + a2 C12 + d3 S12
/// y = a1 S1 + a2 S12 − d3 C12
/// ```
pub fn analytical_jacobian_3dof(dh: &DhTable, q: &JointVector) -> Result<Matrix, KinematicsError> {
    check_len(dh, q)?;
    let kinds: Vec<JointKind> = dh.kinds().collect();
    if dh.task != TaskSpace::PlanarXy
        || kinds != [JointKind::Revolute, JointKind::Revolute, JointKind::Prismatic]
    {
        return Err(KinematicsError::Invalid(
            "closed-form Jacobian needs the planar 2RP arm".into(),
        ));
    }
    let (a1, a2) = (dh.rows[0].a, dh.rows[1].a);
    let t1 = q[0] + dh.rows[0].theta_offset;
    let t12 = t1 + q[1] + dh.rows[1].theta_offset;
    let d3 = q[2] + dh.rows[2].d;
    let (s1, c1) = t1.sin_cos();
    let (s12, c12) = t12.sin_cos();
    Ok(Matrix::from_row_slice(
        2,
        3,
        &[
            -a1 * s1 - a2 * s12 + d3 * c12,
            -a2 * s12 + d3 * c12,
            s12,
            a1 * c1 + a2 * c12 + d3 * s12,
            a2 * c12 + d3 * s12,
            -c12,
        ],
    ))
}

const JDOT_STEP: f64 = 1e-6;

/// `J̇ ≈ (J(q + q̇h) − J(q − q̇h)) / 2h`.
pub fn jacobian_time_derivative(
    dh: &DhTable,
    q: &JointVector,
    qdot: &JointVector,
) -> Result<Matrix, KinematicsError> {
    check_len(dh, q)?;
    check_len(dh, qdot)?;
    let h = JDOT_STEP;
    let plus = geometric_jacobian(dh, &(q + qdot * h))?;
    let minus = geometric_jacobian(dh, &(q - qdot * h))?;
    Ok((plus - minus) / (2.0 * h))
}

/// Multiplies prismatic entries by the unit factor; revolute entries stay.
pub fn scale_joint_vector(dh: &DhTable, q: &JointVector, scale: UnitScale) -> JointVector {
    JointVector::from_iterator(
        q.len(),
        q.iter().enumerate().map(|(i, v)| {
            if dh.is_prismatic(i) {
                v * scale.factor()
            } else {
                *v
            }
        }),
    )
}

const PARALLEL_TOL: f64 = 1e-9;

/// Configurations at which joint-axis parallelism is tested: the zero
/// configuration plus a few fixed generic ones. An axis pair counts as
/// parallel only if it is parallel at every one of them.
fn probe_configurations(n: usize) -> Vec<JointVector> {
    let mut out = vec![JointVector::zeros(n)];
    for k in 1..=3 {
        out.push(JointVector::from_fn(n, |i, _| {
            0.4 + 0.37 * i as f64 + 0.9 * k as f64
        }));
    }
    out
}

/// Unit-sensitive block for the mixed inverse: every prismatic joint together
/// with the revolute joints before it whose axes are not parallel to it, and
/// the position rows of the task.
pub fn partition_rule(dh: &DhTable) -> PartitionSpec {
    let n = dh.dof();
    let axes: Vec<Vec<Vector3<f64>>> = probe_configurations(n)
        .iter()
        .map(|q| frames(dh, q).iter().take(n).map(z_axis).collect())
        .collect();
    let parallel = |a: usize, b: usize| {
        axes.iter()
            .all(|z| z[a].dot(&z[b]).abs() > 1.0 - PARALLEL_TOL)
    };
    let mut cols = Vec::new();
    for p in (0..n).filter(|&p| dh.is_prismatic(p)) {
        let coupled: Vec<usize> = (0..p)
            .filter(|&r| !dh.is_prismatic(r) && !parallel(r, p))
            .collect();
        if !coupled.is_empty() {
            cols.extend(coupled);
            cols.push(p);
        }
    }
    cols.sort_unstable();
    cols.dedup();
    if cols.is_empty() {
        return PartitionSpec::empty();
    }
    PartitionSpec::new((0..dh.task.position_rows()).collect(), cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_q(dh: &DhTable, rng: &mut ChaCha8Rng) -> JointVector {
        JointVector::from_fn(dh.dof(), |i, _| {
            if dh.is_prismatic(i) {
                rng.random_range(-1.0..1.0)
            } else {
                rng.random_range(-PI..PI)
            }
        })
    }

    fn table_iv_q() -> JointVector {
        JointVector::from_vec(vec![30f64.to_radians(), 30f64.to_radians(), -0.7])
    }

    #[test]
    fn planar_zero_configuration_reaches_full_extension() {
        let p = forward_kinematics(&DhTable::planar_2rp(), &JointVector::zeros(3)).unwrap();
        assert!((p.position - Vector3::new(2.1, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let err = forward_kinematics(&DhTable::planar_2rp(), &JointVector::zeros(2));
        assert_eq!(
            err,
            Err(KinematicsError::LengthMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn homothety_under_unit_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for base in [DhTable::planar_2rp(), DhTable::gp66_2rp4r()] {
            let mm = rescale_units(&base, UnitScale::MM);
            for _ in 0..100 {
                let q = random_q(&base, &mut rng);
                let qm = scale_joint_vector(&base, &q, UnitScale::MM);
                let a = forward_kinematics(&base, &q).unwrap();
                let b = forward_kinematics(&mm, &qm).unwrap();
                let err = (b.position - a.position * 1000.0).norm();
                assert!(err <= 1e-12 * (1.0 + b.position.norm()));
                assert!((a.rpy - b.rpy).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_values_at_printed_configuration() {
        let j = analytical_jacobian_3dof(&DhTable::planar_2rp(), &table_iv_q()).unwrap();
        let s3 = 3f64.sqrt();
        let expect = [
            [-0.5 - 0.55 * s3 - 0.35, -0.55 * s3 - 0.35, s3 / 2.0],
            [0.5 * s3 + 0.55 - 0.35 * s3, 0.55 - 0.35 * s3, -0.5],
        ];
        for i in 0..2 {
            for k in 0..3 {
                assert!((j[(i, k)] - expect[i][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_at_zero() {
        let j = analytical_jacobian_3dof(&DhTable::planar_2rp(), &JointVector::zeros(3)).unwrap();
        let expect = Matrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 2.1, 1.1, -1.0]);
        assert!((j - expect).amax() < 1e-15);
    }

    #[test]
    fn closed_form_matches_geometric() {
        let dh = DhTable::planar_2rp();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let q = random_q(&dh, &mut rng);
            let a = analytical_jacobian_3dof(&dh, &q).unwrap();
            let g = geometric_jacobian(&dh, &q).unwrap();
            assert!((a - g).amax() < 1e-9);
        }
    }

    fn wrap(a: f64) -> f64 {
        let w = (a + PI).rem_euclid(2.0 * PI) - PI;
        if w == -PI {
            PI
        } else {
            w
        }
    }

    #[test]
    fn geometric_matches_finite_differences() {
        let h = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dh in [DhTable::planar_2rp(), DhTable::gp66_2rp4r()] {
            let mut checked = 0;
            while checked < 100 {
                let q = random_q(&dh, &mut rng);
                let pose = forward_kinematics(&dh, &q).unwrap();
                if pose.rpy.y.cos().abs() < 0.05 {
                    continue;
                }
                let j = geometric_jacobian(&dh, &q).unwrap();
                for k in 0..dh.dof() {
                    let mut e = JointVector::zeros(dh.dof());
                    e[k] = h;
                    let d = task_pose(&dh, &(&q + &e)).unwrap() - task_pose(&dh, &(&q - &e)).unwrap();
                    for i in 0..dh.task_dim() {
                        let di = if i >= 3 { wrap(d[i]) } else { d[i] };
                        assert!((di / (2.0 * h) - j[(i, k)]).abs() < 1e-5, "row {i} col {k}");
                    }
                }
                checked += 1;
            }
        }
    }

    #[test]
    fn prismatic_column_has_no_angular_part() {
        let dh = DhTable::gp66_2rp4r();
        let q = JointVector::from_vec(vec![0.2, 1.0, 0.3, 0.4, 0.7, 0.5, 0.1]);
        let j = geometric_jacobian(&dh, &q).unwrap();
        for i in 3..6 {
            assert_eq!(j[(i, 2)], 0.0);
        }
    }

    #[test]
    fn revolute_columns_scale_with_units_and_prismatic_do_not() {
        let base = DhTable::planar_2rp();
        let mm = rescale_units(&base, UnitScale::MM);
        let q = table_iv_q();
        let a = geometric_jacobian(&base, &q).unwrap();
        let b = geometric_jacobian(&mm, &scale_joint_vector(&base, &q, UnitScale::MM)).unwrap();
        for i in 0..2 {
            assert!((b[(i, 0)] - 1000.0 * a[(i, 0)]).abs() < 1e-9);
            assert!((b[(i, 1)] - 1000.0 * a[(i, 1)]).abs() < 1e-9);
            assert!((b[(i, 2)] - a[(i, 2)]).abs() < 1e-12);
        }
    }

    #[test]
    fn jdot_vanishes_for_stationary_joints() {
        let dh = DhTable::gp66_2rp4r();
        let q = JointVector::from_vec(vec![0.2, 1.0, 0.3, 0.4, 0.7, 0.5, 0.1]);
        let jd = jacobian_time_derivative(&dh, &q, &JointVector::zeros(7)).unwrap();
        assert_eq!(jd.amax(), 0.0);
    }

    #[test]
    fn jdot_matches_closed_form_derivative() {
        let dh = DhTable::planar_2rp();
        let q = table_iv_q();
        let qd = JointVector::from_vec(vec![0.3, -0.2, 0.5]);
        let jd = jacobian_time_derivative(&dh, &q, &qd).unwrap();
        let (a1, a2, d3) = (1.0, 1.1, q[2]);
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        let w1 = qd[0];
        let w12 = qd[0] + qd[1];
        let dd = qd[2];
        let expect = Matrix::from_row_slice(
            2,
            3,
            &[
                -a1 * c1 * w1 - a2 * c12 * w12 + dd * c12 - d3 * s12 * w12,
                -a2 * c12 * w12 + dd * c12 - d3 * s12 * w12,
                c12 * w12,
                -a1 * s1 * w1 - a2 * s12 * w12 + dd * s12 + d3 * c12 * w12,
                -a2 * s12 * w12 + dd * s12 + d3 * c12 * w12,
                s12 * w12,
            ],
        );
        assert!((jd - expect).amax() < 1e-4);
    }

    #[test]
    fn jdot_is_linear_in_rate() {
        let dh = DhTable::gp66_2rp4r();
        let q = JointVector::from_vec(vec![0.2, 1.0, 0.3, 0.4, 0.7, 0.5, 0.1]);
        let qd = JointVector::from_vec(vec![0.1, -0.3, 0.2, 0.5, -0.1, 0.4, 0.3]);
        let one = jacobian_time_derivative(&dh, &q, &qd).unwrap();
        let two = jacobian_time_derivative(&dh, &q, &(&qd * 2.0)).unwrap();
        assert!((two - one * 2.0).amax() < 1e-6);
    }

    #[test]
    fn rpy_singularity_is_detected() {
        let rpy = Vector3::new(0.1, PI / 2.0, 0.3);
        assert!(matches!(
            rpy_rate_inverse(&rpy),
            Err(KinematicsError::RpySingularity { .. })
        ));
        let ok = Vector3::new(0.1, 0.4, 0.3);
        let prod = rpy_rate_matrix(&ok) * rpy_rate_inverse(&ok).unwrap();
        assert!((prod - Matrix3::identity()).norm() < 1e-14);
    }

    #[test]
    fn wrist_axes_through_the_tool_give_exact_zeros() {
        let dh = DhTable::gp66_2rp4r();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let q = random_q(&dh, &mut rng);
            for unit in UnitScale::SWEEP {
                let scaled = rescale_units(&dh, unit);
                let j = geometric_jacobian(&scaled, &scale_joint_vector(&dh, &q, unit)).unwrap();
                for c in 4..7 {
                    for r in 0..3 {
                        assert_eq!(j[(r, c)], 0.0, "entry ({r},{c}) at {}", unit.label());
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_planar_arm_is_whole_jacobian() {
        let spec = partition_rule(&DhTable::planar_2rp());
        assert_eq!(spec, PartitionSpec::whole(2, 3));
    }

    #[test]
    fn partition_of_seven_dof_arm() {
        let spec = partition_rule(&DhTable::gp66_2rp4r());
        assert_eq!(spec, PartitionSpec::new(vec![0, 1, 2], vec![0, 1, 2]));
    }

    #[test]
    fn all_revolute_arm_has_empty_partition() {
        let dh = DhTable::new(
            "rr",
            vec![DhRow::revolute(0.0, 0.0, 1.0, 0.0), DhRow::revolute(0.0, 0.0, 1.0, 0.0)],
            TaskSpace::PlanarXy,
        )
        .unwrap();
        assert!(partition_rule(&dh).is_empty());
    }

    #[test]
    fn partition_ignores_offsets_and_is_stable() {
        let dh = DhTable::gp66_2rp4r();
        let first = partition_rule(&dh);
        assert_eq!(partition_rule(&dh), first);
        let mut shifted = dh.clone();
        for row in shifted.rows.iter_mut().filter(|r| r.kind == JointKind::Revolute) {
            row.theta_offset += 0.25;
        }
        assert_eq!(partition_rule(&shifted), first);
        assert_eq!(partition_rule(&rescale_units(&dh, UnitScale::MM)), first);
    }
}
