use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::gi::{BackendKind, PartitionSpec};
use crate::kinematics::{partition_rule, DhTable, JointVector, UnitScale};
use crate::noise::{NoiseKind, NoiseLevel, NoiseModel};
use crate::planners::{schemes, GainSet, JointLimits};
use crate::trajectories::{PathKind, PathSpec};

fn default_units() -> Vec<String> {
    ["m", "dm", "cm", "mm"].map(String::from).to_vec()
}
fn default_true() -> bool {
    true
}
fn default_substeps() -> usize {
    1
}
fn default_seed() -> u64 {
    7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default = "zero_kind")]
    pub kind: NoiseKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Amplitudes in metres; defaults depend on the task and scheme level.
    #[serde(default)]
    pub base: Option<Vec<f64>>,
}

fn zero_kind() -> NoiseKind {
    NoiseKind::Zero
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Zero,
            seed: default_seed(),
            base: None,
        }
    }
}

/// One experiment: a robot following a path with one scheme and one inverse,
/// repeated for every length unit in `units`.
///
/// Lengths are given in metres and converted per unit. `initial_q` uses
/// degrees for revolute joints and metres for prismatic ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Preset name or path to a robot file.
    pub robot: String,
    pub path: PathSpec,
    /// Move the path so it starts at the initial end-effector position.
    #[serde(default = "default_true")]
    pub anchor_path: bool,
    pub scheme: String,
    pub backend: BackendKind,
    #[serde(default = "default_units")]
    pub units: Vec<String>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub gains: GainSet,
    #[serde(default)]
    pub limits: Option<JointLimits>,
    pub initial_q: Vec<f64>,
    /// Integration steps per recorded waypoint.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    /// Unit-sensitive block for the mixed inverse; derived from the robot
    /// when absent.
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
}

/// Everything derived from a config that does not depend on the unit.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub dh: DhTable,
    pub q0: JointVector,
    pub units: Vec<UnitScale>,
    pub partition: PartitionSpec,
    pub limits: JointLimits,
    pub level: NoiseLevel,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            format!(
                "{}_{}_{}_{}_{}",
                self.robot_label(),
                self.path.kind,
                self.scheme,
                self.backend,
                self.noise.kind
            )
        })
    }

    pub fn robot_label(&self) -> String {
        Path::new(&self.robot)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.robot.clone())
    }

    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<Resolved, HarnessError> {
        let dh = match DhTable::preset(&self.robot) {
            Ok(dh) => dh,
            Err(_) => {
                let p = match base_dir {
                    Some(d) => d.join(&self.robot),
                    None => PathBuf::from(&self.robot),
                };
                DhTable::load(&p).map_err(|e| HarnessError::Config(e.to_string()))?
            }
        };
        let n = dh.dof();
        if self.initial_q.len() != n {
            return Err(HarnessError::Config(format!(
                "initial_q has {} entries, robot has {n} joints",
                self.initial_q.len()
            )));
        }
        let q0 = JointVector::from_fn(n, |i, _| {
            if dh.is_prismatic(i) {
                self.initial_q[i]
            } else {
                self.initial_q[i].to_radians()
            }
        });
        let units = self
            .units
            .iter()
            .map(|u| UnitScale::from_label(u))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if units.is_empty() {
            return Err(HarnessError::Config("units list is empty".into()));
        }
        if let Some(bad) = units.iter().find(|u| !UnitScale::SWEEP.contains(u)) {
            return Err(HarnessError::Config(format!(
                "unit factor {} is not one of 1, 10, 100, 1000",
                bad.factor()
            )));
        }
        let registry = schemes();
        let scheme = registry
            .create(&self.scheme)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.gains
            .validate(n)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let limits = self.limits.clone().unwrap_or_else(|| JointLimits::unbounded(n));
        limits
            .validate(n)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let partition = self.partition.clone().unwrap_or_else(|| partition_rule(&dh));
        partition
            .validate(dh.task_dim(), n)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.path
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.path.kind.is_spatial() && dh.task.position_rows() < 3 {
            return Err(HarnessError::Config(format!(
                "path '{}' needs a spatial robot",
                self.path.kind
            )));
        }
        if self.substeps == 0 {
            return Err(HarnessError::Config("substeps must be at least 1".into()));
        }
        if let Some(base) = &self.noise.base {
            if base.len() != dh.task_dim() {
                return Err(HarnessError::Config(format!(
                    "noise base has {} entries, task has {}",
                    base.len(),
                    dh.task_dim()
                )));
            }
        }
        Ok(Resolved {
            level: scheme.level(),
            dh,
            q0,
            units,
            partition,
            limits,
        })
    }

    pub(crate) fn noise_model(&self, r: &Resolved, unit: UnitScale) -> NoiseModel {
        let mut m = NoiseModel::standard(
            self.noise.kind,
            r.dh.task,
            r.level,
            unit.factor(),
            self.noise.seed,
        );
        if let Some(base) = &self.noise.base {
            m.base = base.clone();
        }
        m
    }
}

/// A list of experiments plus sweeps that expand a template over schemes,
/// backends and noise kinds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
    #[serde(default)]
    pub sweep: Vec<Sweep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub template: ExperimentConfig,
    #[serde(default)]
    pub schemes: Vec<String>,
    #[serde(default)]
    pub backends: Vec<BackendKind>,
    #[serde(default)]
    pub noises: Vec<NoiseKind>,
}

impl Sweep {
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        let t = &self.template;
        let schemes = if self.schemes.is_empty() { vec![t.scheme.clone()] } else { self.schemes.clone() };
        let backends = if self.backends.is_empty() { vec![t.backend] } else { self.backends.clone() };
        let noises = if self.noises.is_empty() { vec![t.noise.kind] } else { self.noises.clone() };
        let mut out = Vec::new();
        for s in &schemes {
            for b in &backends {
                for k in &noises {
                    let mut c = t.clone();
                    c.name = None;
                    c.scheme = s.clone();
                    c.backend = *b;
                    c.noise.kind = *k;
                    out.push(c);
                }
            }
        }
        out
    }
}

impl MatrixFile {
    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn configs(&self) -> Vec<ExperimentConfig> {
        let mut out = self.experiment.clone();
        for s in &self.sweep {
            out.extend(s.expand());
        }
        out
    }
}

/// Built-in experiment templates. Path constants and starting
/// configurations are not published anywhere, so these are chosen to keep
/// every path inside the workspace and away from singular poses.
pub mod presets {
    use super::*;

    pub const NAMES: [&str; 6] = [
        "3dof-circle",
        "3dof-rhodonea",
        "3dof-tricuspid",
        "7dof-interlaced-circle",
        "7dof-rhodonea",
        "7dof-bent-tricuspid",
    ];

    pub const PLANAR_Q0: [f64; 3] = [30.0, 30.0, -0.7];
    pub const SPATIAL_Q0: [f64; 7] = [30.0, 40.0, 0.6, 10.0, 80.0, 20.0, -10.0];

    fn path(kind: PathKind, scale: f64, height: f64) -> PathSpec {
        PathSpec {
            height,
            waypoints: 700,
            ..PathSpec::new(kind, scale)
        }
    }

    pub fn planar_limits() -> JointLimits {
        JointLimits {
            qdot_max: vec![1.0, 1.0, 0.5],
            qddot_max: vec![5.0, 5.0, 2.5],
        }
    }

    pub fn spatial_limits() -> JointLimits {
        JointLimits {
            qdot_max: vec![1.0, 1.0, 0.5, 2.0, 2.0, 2.0, 2.0],
            qddot_max: vec![5.0, 5.0, 2.5, 10.0, 10.0, 10.0, 10.0],
        }
    }

    pub fn experiment(name: &str) -> Result<ExperimentConfig, HarnessError> {
        let (robot, path, q0, limits): (&str, PathSpec, Vec<f64>, JointLimits) = match name {
            "3dof-circle" => ("planar-2rp", path(PathKind::Circle, 0.6, 0.0), PLANAR_Q0.to_vec(), planar_limits()),
            "3dof-rhodonea" => ("planar-2rp", path(PathKind::Rhodonea, 0.3, 0.0), PLANAR_Q0.to_vec(), planar_limits()),
            "3dof-tricuspid" => ("planar-2rp", path(PathKind::Tricuspid, 0.1, 0.0), PLANAR_Q0.to_vec(), planar_limits()),
            "7dof-interlaced-circle" => ("gp66-2rp4r", path(PathKind::InterlacedCircle, 0.1, 0.05), SPATIAL_Q0.to_vec(), spatial_limits()),
            "7dof-rhodonea" => ("gp66-2rp4r", path(PathKind::Rhodonea3d, 0.1, 0.05), SPATIAL_Q0.to_vec(), spatial_limits()),
            "7dof-bent-tricuspid" => ("gp66-2rp4r", path(PathKind::BentTricuspid, 0.04, 0.05), SPATIAL_Q0.to_vec(), spatial_limits()),
            other => return Err(HarnessError::Config(format!("unknown experiment preset '{other}'"))),
        };
        Ok(ExperimentConfig {
            name: None,
            robot: robot.into(),
            path,
            anchor_path: true,
            scheme: "wmvn".into(),
            backend: BackendKind::Mx,
            units: default_units(),
            noise: NoiseSpec::default(),
            gains: GainSet::default(),
            limits: Some(limits),
            initial_q: q0,
            substeps: 10,
            partition: None,
        })
    }
}
