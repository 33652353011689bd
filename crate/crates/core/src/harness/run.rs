use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DVector, Vector3};

use super::config::{ExperimentConfig, Resolved};
use super::HarnessError;
use crate::gi::{registry, CountingInverse};
use crate::kinematics::{
    forward_kinematics, geometric_jacobian, jacobian_time_derivative, rescale_units,
    scale_joint_vector, task_pose, TaskSpace, UnitScale,
};
use crate::planners::{integrate, schemes, Level, SchemeState, StepContext};

/// Errors above this many millimetres end the run as diverged.
pub const DIVERGENCE_MM: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointRecord {
    pub t: f64,
    /// Desired position in mm.
    pub desired: Vector3<f64>,
    /// Achieved position in mm.
    pub achieved: Vector3<f64>,
    pub err_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Error passed [`DIVERGENCE_MM`] or the state stopped being finite.
    Diverged,
    /// The scheme itself gave up (singular Gram matrix, infeasible limits, …).
    Failed(String),
}

impl RunStatus {
    pub fn as_str(&self) -> &str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Diverged => "diverged",
            RunStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub label: String,
    pub unit: UnitScale,
    pub samples: Vec<WaypointRecord>,
    pub status: RunStatus,
    pub mean_err_mm: f64,
    pub max_err_mm: f64,
    pub gi_calls: usize,
    pub steps: usize,
    pub wall_time_s: f64,
}

impl ExperimentRecord {
    pub fn diverged(&self) -> bool {
        self.status != RunStatus::Completed
    }

    pub fn gi_calls_per_step(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.gi_calls as f64 / self.steps as f64
        }
    }

    fn finish(&mut self) {
        let n = self.samples.len();
        self.mean_err_mm = if n == 0 {
            0.0
        } else {
            self.samples.iter().map(|s| s.err_mm).sum::<f64>() / n as f64
        };
        self.max_err_mm = self.samples.iter().map(|s| s.err_mm).fold(0.0, f64::max);
    }
}

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

fn pad3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], if v.len() > 2 { v[2] } else { 0.0 })
}

/// Runs every unit listed in the config, in order.
pub fn run(cfg: &ExperimentConfig, base_dir: Option<&Path>) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let r = cfg.resolve(base_dir)?;
    r.units.iter().map(|&u| run_resolved(cfg, &r, u)).collect()
}

/// Runs one unit. Planning failures become a [`RunStatus::Failed`] record.
pub fn run_unit(
    cfg: &ExperimentConfig,
    base_dir: Option<&Path>,
    unit: UnitScale,
) -> Result<ExperimentRecord, HarnessError> {
    let r = cfg.resolve(base_dir)?;
    run_resolved(cfg, &r, unit)
}

pub(crate) fn run_resolved(
    cfg: &ExperimentConfig,
    r: &Resolved,
    unit: UnitScale,
) -> Result<ExperimentRecord, HarnessError> {
    let started = Instant::now();
    let k = unit.factor();
    let dh = rescale_units(&r.dh, unit);
    let task = dh.task;
    let m = dh.task_dim();
    let q0 = scale_joint_vector(&r.dh, &r.q0, unit);
    let limits = r.limits.in_units(&r.dh, unit);
    let gains = &cfg.gains;

    let start_pose = forward_kinematics(&r.dh, &r.q0).map_err(|e| HarnessError::Config(e.to_string()))?;
    let base_path = if cfg.anchor_path {
        cfg.path.anchored_at(start_pose.position)
    } else {
        cfg.path.clone()
    };
    let path = base_path.scaled(k);
    let rpy_d = start_pose.rpy;

    let backend = registry()
        .create(cfg.backend.as_str(), &r.partition)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let counter = CountingInverse::new(backend.as_ref());
    let mut scheme = schemes()
        .create(&cfg.scheme)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let level = scheme.level();
    let mut noise = cfg.noise_model(r, unit).sampler();

    let steps = (path.waypoints - 1) * cfg.substeps;
    let dt = path.total_time / steps as f64;

    let desired_at = |t: f64| -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let (p, v, a) = path.eval(t);
        match task {
            TaskSpace::PlanarXy => (
                DVector::from_vec(vec![p.x, p.y]),
                DVector::from_vec(vec![v.x, v.y]),
                DVector::from_vec(vec![a.x, a.y]),
            ),
            TaskSpace::PoseRpy => (
                DVector::from_vec(vec![p.x, p.y, p.z, rpy_d.x, rpy_d.y, rpy_d.z]),
                DVector::from_vec(vec![v.x, v.y, v.z, 0.0, 0.0, 0.0]),
                DVector::from_vec(vec![a.x, a.y, a.z, 0.0, 0.0, 0.0]),
            ),
        }
    };
    let pos_rows = task.position_rows();
    let to_mm = |v: Vector3<f64>| v * (1000.0 / k);

    let mut rec = ExperimentRecord {
        label: cfg.label(),
        unit,
        samples: Vec::with_capacity(path.waypoints),
        status: RunStatus::Completed,
        mean_err_mm: 0.0,
        max_err_mm: 0.0,
        gi_calls: 0,
        steps: 0,
        wall_time_s: 0.0,
    };

    let mut state = SchemeState::at_rest(q0);
    let record = |rec: &mut ExperimentRecord, state: &SchemeState, t: f64| -> Result<bool, HarnessError> {
        let f = task_pose(&dh, &state.q).map_err(|e| HarnessError::Config(e.to_string()))?;
        let (d, _, _) = desired_at(t);
        let achieved = to_mm(pad3(&f.rows(0, pos_rows).into_owned()));
        let desired = to_mm(pad3(&d.rows(0, pos_rows).into_owned()));
        let err_mm = (achieved - desired).norm();
        rec.samples.push(WaypointRecord { t, desired, achieved, err_mm });
        Ok(err_mm.is_finite() && err_mm <= DIVERGENCE_MM)
    };

    if level == Level::Acceleration {
        // start moving with the path instead of from rest
        let j0 = geometric_jacobian(&dh, &state.q).map_err(|e| HarnessError::Config(e.to_string()))?;
        match backend.invert(&j0) {
            Ok(inv) => state.qdot = inv * desired_at(0.0).1,
            Err(e) => rec.status = RunStatus::Failed(e.to_string()),
        }
    }
    if rec.status == RunStatus::Completed && !record(&mut rec, &state, 0.0)? {
        rec.status = RunStatus::Diverged;
    }

    let mut step = 0;
    while rec.status == RunStatus::Completed && step < steps {
        let t = step as f64 * dt;
        let (d, mut rate, mut accel) = desired_at(t);
        let f = match task_pose(&dh, &state.q) {
            Ok(f) => f,
            Err(e) => {
                rec.status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let mut error = &f - &d;
        for i in pos_rows..m {
            error[i] = wrap_angle(error[i]);
        }
        let delta = noise.sample(t);
        match level {
            Level::Velocity => rate += delta,
            Level::Acceleration => accel += delta,
        }
        let jac = geometric_jacobian(&dh, &state.q).and_then(|j| {
            let jd = match level {
                Level::Acceleration => Some(jacobian_time_derivative(&dh, &state.q, &state.qdot)?),
                Level::Velocity => None,
            };
            Ok((j, jd))
        });
        let (j, jd) = match jac {
            Ok(x) => x,
            Err(e) => {
                rec.status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        let ctx = StepContext {
            state: &state,
            j: &j,
            jdot: jd.as_ref(),
            error: &error,
            rate: &rate,
            accel: &accel,
            gains,
            limits: &limits,
            dt,
        };
        let cmd = match scheme.step(&ctx, &counter) {
            Ok(c) => c,
            Err(e) => {
                rec.status = RunStatus::Failed(e.to_string());
                break;
            }
        };
        state = integrate(&state, &cmd, level, dt);
        step += 1;
        if !state.is_finite() {
            rec.status = RunStatus::Diverged;
            break;
        }
        if step % cfg.substeps == 0 {
            let t_next = if step == steps { path.total_time } else { step as f64 * dt };
            if !record(&mut rec, &state, t_next)? {
                rec.status = RunStatus::Diverged;
            }
        }
    }

    rec.steps = step;
    rec.gi_calls = counter.calls();
    rec.finish();
    rec.wall_time_s = started.elapsed().as_secs_f64();
    Ok(rec)
}
