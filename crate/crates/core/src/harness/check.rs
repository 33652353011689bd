//! Quick invariant suite used by the `check` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gi::{mp_inverse, mx_inverse, uc_inverse, Matrix, PartitionSpec};
use crate::kinematics::{
    analytical_jacobian_3dof, geometric_jacobian, partition_rule, task_pose, DhTable, JointVector,
};
use crate::trajectories::{derivative_check, generate, PathKind, PathSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value next to its limit.
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, worst: f64, limit: f64) -> Self {
        Self {
            name,
            passed: worst.is_finite() && worst <= limit,
            detail: format!("worst {worst:.3e}, limit {limit:.0e}"),
        }
    }
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
}

fn random_q(dh: &DhTable, rng: &mut ChaCha8Rng) -> JointVector {
    JointVector::from_fn(dh.dof(), |i, _| {
        if dh.is_prismatic(i) {
            rng.random_range(0.2..0.8)
        } else {
            rng.random_range(-1.4..1.4)
        }
    })
}

fn penrose(rng: &mut ChaCha8Rng, count: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for k in 0..count {
        let (m, n) = [(3, 3), (2, 5), (5, 2), (4, 4)][k % 4];
        let a = random_matrix(rng, m, n);
        let x = match mp_inverse(&a) {
            Ok(x) => x,
            Err(_) => return CheckResult::new("moore-penrose conditions", f64::INFINITY, 1e-8),
        };
        let ax = &a * &x;
        let xa = &x * &a;
        worst = worst
            .max(rel(&(&ax * &a), &a))
            .max(rel(&(&xa * &x), &x))
            .max(rel(&ax.transpose(), &ax))
            .max(rel(&xa.transpose(), &xa));
    }
    CheckResult::new("moore-penrose conditions", worst, 1e-8)
}

fn uc_scaling(rng: &mut ChaCha8Rng, count: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for k in 0..count {
        let (m, n) = [(3, 3), (2, 4), (4, 2)][k % 3];
        let a = random_matrix(rng, m, n);
        let p: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let q: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
        let scaled = Matrix::from_fn(m, n, |i, j| p[i] * a[(i, j)] * q[j]);
        let (Ok(x), Ok(y)) = (uc_inverse(&a), uc_inverse(&scaled)) else {
            return CheckResult::new("unit-consistent scaling", f64::INFINITY, 1e-8);
        };
        let expect = Matrix::from_fn(n, m, |i, j| x[(i, j)] / (q[i] * p[j]));
        worst = worst.max(rel(&y, &expect));
    }
    CheckResult::new("unit-consistent scaling", worst, 1e-8)
}

fn mx_limits(rng: &mut ChaCha8Rng, count: usize) -> CheckResult {
    let mut worst = 0.0f64;
    for _ in 0..count {
        let a = random_matrix(rng, 3, 4);
        let pairs = [
            (mx_inverse(&a, &PartitionSpec::whole(3, 4)), uc_inverse(&a)),
            (mx_inverse(&a, &PartitionSpec::empty()), mp_inverse(&a)),
        ];
        for pair in pairs {
            match pair {
                (Ok(x), Ok(y)) => worst = worst.max(rel(&x, &y)),
                _ => return CheckResult::new("mixed inverse limits", f64::INFINITY, 1e-10),
            }
        }
    }
    CheckResult::new("mixed inverse limits", worst, 1e-10)
}

fn mx_seven_dof(rng: &mut ChaCha8Rng, count: usize) -> CheckResult {
    let dh = DhTable::gp66_2rp4r();
    let spec = partition_rule(&dh);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let a = random_matrix(rng, 6, 7);
        match mx_inverse(&a, &spec) {
            Ok(x) => worst = worst.max(rel(&(&a * &x * &a), &a)),
            Err(_) => return CheckResult::new("mixed inverse aXa = a (7DoF blocks)", f64::INFINITY, 1e-8),
        }
    }
    CheckResult::new("mixed inverse aXa = a (7DoF blocks)", worst, 1e-8)
}

fn jacobian_closed_form(rng: &mut ChaCha8Rng, count: usize) -> CheckResult {
    let dh = DhTable::planar_2rp();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let q = random_q(&dh, rng);
        match (geometric_jacobian(&dh, &q), analytical_jacobian_3dof(&dh, &q)) {
            (Ok(g), Ok(a)) => worst = worst.max((g - a).amax()),
            _ => return CheckResult::new("3DoF Jacobian vs closed form", f64::INFINITY, 1e-9),
        }
    }
    CheckResult::new("3DoF Jacobian vs closed form", worst, 1e-9)
}

fn jacobian_differences(rng: &mut ChaCha8Rng, count: usize) -> CheckResult {
    let h = 1e-6;
    let mut worst = 0.0f64;
    for dh in [DhTable::planar_2rp(), DhTable::gp66_2rp4r()] {
        for _ in 0..count {
            let q = random_q(&dh, rng);
            let Ok(j) = geometric_jacobian(&dh, &q) else {
                continue;
            };
            for c in 0..dh.dof() {
                let mut hi = q.clone();
                let mut lo = q.clone();
                hi[c] += h;
                lo[c] -= h;
                let (Ok(fh), Ok(fl)) = (task_pose(&dh, &hi), task_pose(&dh, &lo)) else {
                    continue;
                };
                let mut d = (fh - fl) / (2.0 * h);
                for r in dh.task.position_rows()..dh.task_dim() {
                    // orientation differences across the ±π seam
                    let raw = d[r] * 2.0 * h;
                    let wrapped = (raw + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
                        - std::f64::consts::PI;
                    d[r] = wrapped / (2.0 * h);
                }
                worst = worst.max((d - j.column(c)).amax());
            }
        }
    }
    CheckResult::new("Jacobian vs finite differences", worst, 1e-5)
}

fn path_derivatives() -> CheckResult {
    let mut worst = 0.0f64;
    for kind in PathKind::ALL {
        let spec = PathSpec {
            height: 0.05,
            ..PathSpec::new(kind, 0.1)
        };
        let report = match generate(&spec) {
            Ok(series) => derivative_check(&series),
            Err(_) => return CheckResult::new("path derivatives", f64::INFINITY, 1.0),
        };
        worst = worst
            .max(report.max_rate_deviation / report.rate_tolerance)
            .max(report.max_accel_deviation / report.accel_tolerance);
    }
    CheckResult::new("path derivatives (fraction of tolerance)", worst, 1.0)
}

/// Runs every check with matrices drawn from `seed`.
pub fn invariant_suite(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        penrose(&mut rng, 200),
        uc_scaling(&mut rng, 200),
        mx_limits(&mut rng, 50),
        mx_seven_dof(&mut rng, 50),
        jacobian_closed_form(&mut rng, 100),
        jacobian_differences(&mut rng, 50),
        path_derivatives(),
    ]
}
