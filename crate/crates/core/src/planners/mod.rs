//! Velocity- and acceleration-level path-planning schemes behind one trait.

mod sns;
mod steps;

pub use sns::{sns_solve, SnsOutcome};
pub use steps::{
    step_fpbm, step_man, step_mvn, step_pid_ppp, step_wmvn, weighted_inverse, FpbmInput, Vector,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gi::{GeneralizedInverse, GiError, Matrix};
use crate::kinematics::{DhTable, UnitScale};
pub use crate::noise::NoiseLevel as Level;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Gi(#[from] GiError),
    #[error("weighted task Gram matrix is near singular (condition ≈ {condition:.3e})")]
    NearSingular { condition: f64 },
    #[error("no saturation set keeps the task feasible after {rounds} rounds")]
    Infeasible { rounds: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),
    #[error("invalid gains: {0}")]
    Gains(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub t: f64,
    pub q: Vector,
    pub qdot: Vector,
    pub qddot: Vector,
}

impl SchemeState {
    pub fn at_rest(q: Vector) -> Self {
        let n = q.len();
        Self {
            t: 0.0,
            q,
            qdot: Vector::zeros(n),
            qddot: Vector::zeros(n),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q
            .iter()
            .chain(self.qdot.iter())
            .chain(self.qddot.iter())
            .all(|v| v.is_finite())
    }
}

fn default_gain() -> f64 {
    1000.0
}
fn default_weight() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSet {
    #[serde(default = "default_gain")]
    pub alpha: f64,
    #[serde(default = "default_gain")]
    pub beta: f64,
    #[serde(default = "default_gain")]
    pub k1: f64,
    #[serde(default = "default_gain")]
    pub k2: f64,
    #[serde(default = "default_weight")]
    pub fpbm_weight: f64,
    /// Diagonal joint weight. Empty means identity.
    #[serde(default)]
    pub w: Vec<f64>,
}

impl Default for GainSet {
    fn default() -> Self {
        Self {
            alpha: 1000.0,
            beta: 1000.0,
            k1: 1000.0,
            k2: 1000.0,
            fpbm_weight: 0.5,
            w: Vec::new(),
        }
    }
}

impl GainSet {
    pub fn weight(&self, n: usize) -> Vec<f64> {
        if self.w.is_empty() {
            vec![1.0; n]
        } else {
            self.w.clone()
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), PlanError> {
        if !(0.0..=1.0).contains(&self.fpbm_weight) {
            return Err(PlanError::Gains("fpbm_weight must lie in [0, 1]".into()));
        }
        if !self.w.is_empty() && self.w.len() != n {
            return Err(PlanError::Gains(format!(
                "weight has {} entries for {n} joints",
                self.w.len()
            )));
        }
        if self.w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(PlanError::Gains("weights must be positive".into()));
        }
        if [self.alpha, self.beta, self.k1, self.k2]
            .iter()
            .any(|g| !g.is_finite())
        {
            return Err(PlanError::Gains("gains must be finite".into()));
        }
        Ok(())
    }
}

/// Symmetric joint bounds in base units (radians or metres per second and
/// per second squared).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointLimits {
    pub qdot_max: Vec<f64>,
    pub qddot_max: Vec<f64>,
}

impl JointLimits {
    pub fn unbounded(n: usize) -> Self {
        Self {
            qdot_max: vec![f64::INFINITY; n],
            qddot_max: vec![f64::INFINITY; n],
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), PlanError> {
        for v in [&self.qdot_max, &self.qddot_max] {
            if v.len() != n {
                return Err(PlanError::Shape(format!(
                    "joint limits have {} entries for {n} joints",
                    v.len()
                )));
            }
            if v.iter().any(|x| !(*x > 0.0)) {
                return Err(PlanError::Shape("joint limits must be positive".into()));
            }
        }
        Ok(())
    }

    /// Prismatic bounds expressed in the scaled length unit.
    pub fn in_units(&self, dh: &DhTable, scale: UnitScale) -> Self {
        let conv = |v: &Vec<f64>| {
            v.iter()
                .enumerate()
                .map(|(i, x)| if dh.is_prismatic(i) { x * scale.factor() } else { *x })
                .collect()
        };
        Self {
            qdot_max: conv(&self.qdot_max),
            qddot_max: conv(&self.qddot_max),
        }
    }

    pub fn for_level(&self, level: Level) -> &[f64] {
        match level {
            Level::Velocity => &self.qdot_max,
            Level::Acceleration => &self.qddot_max,
        }
    }
}

/// Everything a scheme may read at one control step. Vectors are in model
/// units; `error` is `f(Q) − D_d`. Noise is already folded into `rate`
/// (velocity level) or `accel` (acceleration level).
pub struct StepContext<'a> {
    pub state: &'a SchemeState,
    pub j: &'a Matrix,
    pub jdot: Option<&'a Matrix>,
    pub error: &'a Vector,
    pub rate: &'a Vector,
    pub accel: &'a Vector,
    pub gains: &'a GainSet,
    pub limits: &'a JointLimits,
    pub dt: f64,
}

impl StepContext<'_> {
    fn jdot(&self) -> Result<&Matrix, PlanError> {
        self.jdot
            .ok_or_else(|| PlanError::Shape("acceleration scheme needs J̇".into()))
    }
}

pub trait Scheme: Send {
    fn name(&self) -> &'static str;
    fn level(&self) -> Level;
    /// Joint rate (velocity level) or acceleration (acceleration level).
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse)
        -> Result<Vector, PlanError>;
}

pub struct Mvn;

impl Scheme for Mvn {
    fn name(&self) -> &'static str {
        "mvn"
    }
    fn level(&self) -> Level {
        Level::Velocity
    }
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
        step_mvn(ctx.j, ctx.rate, gi)
    }
}

pub struct Wmvn;

impl Scheme for Wmvn {
    fn name(&self) -> &'static str {
        "wmvn"
    }
    fn level(&self) -> Level {
        Level::Velocity
    }
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
        step_wmvn(ctx.j, ctx.rate, &ctx.gains.weight(ctx.j.ncols()), gi)
    }
}

/// Keeps the running integral of the pose error (rectangle rule).
#[derive(Default)]
pub struct PidPpp {
    integral: Option<Vector>,
}

impl Scheme for PidPpp {
    fn name(&self) -> &'static str {
        "pid_ppp"
    }
    fn level(&self) -> Level {
        Level::Velocity
    }
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
        let integral = self
            .integral
            .get_or_insert_with(|| Vector::zeros(ctx.error.len()));
        let cmd = step_pid_ppp(ctx.j, ctx.rate, ctx.error, integral, ctx.gains, gi)?;
        *integral += ctx.error * ctx.dt;
        Ok(cmd)
    }
}

pub struct SnsV;

impl Scheme for SnsV {
    fn name(&self) -> &'static str {
        "sns_v"
    }
    fn level(&self) -> Level {
        Level::Velocity
    }
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
        Ok(sns_solve(ctx.j, ctx.rate, &ctx.limits.qdot_max, gi)?.command)
    }
}

pub struct Man;

impl Scheme for Man {
    fn name(&self) -> &'static str {
        "man"
    }
    fn level(&self) -> Level {
        Level::Acceleration
    }
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
        step_man(ctx.j, ctx.jdot()?, &ctx.state.qdot, ctx.accel, gi)
    }
}

pub struct Fpbm;

impl Scheme for Fpbm {
    fn name(&self) -> &'static str {
        "fpbm"
    }
    fn level(&self) -> Level {
        Level::Acceleration
    }
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
        let inp = FpbmInput {
            j: ctx.j,
            jdot: ctx.jdot()?,
            qdot: &ctx.state.qdot,
            error: ctx.error,
            rate: ctx.rate,
            accel: ctx.accel,
        };
        step_fpbm(&inp, ctx.gains, gi)
    }
}

pub struct SnsA;

impl Scheme for SnsA {
    fn name(&self) -> &'static str {
        "sns_a"
    }
    fn level(&self) -> Level {
        Level::Acceleration
    }
    fn step(&mut self, ctx: &StepContext<'_>, gi: &dyn GeneralizedInverse) -> Result<Vector, PlanError> {
        let target = ctx.accel - ctx.jdot()? * &ctx.state.qdot;
        Ok(sns_solve(ctx.j, &target, &ctx.limits.qddot_max, gi)?.command)
    }
}

type SchemeFactory = Box<dyn Fn() -> Box<dyn Scheme> + Send + Sync>;

pub struct SchemeRegistry {
    factories: BTreeMap<String, SchemeFactory>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn() -> Box<dyn Scheme> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    /// A fresh scheme instance; stateful schemes start from zero.
    pub fn create(&self, name: &str) -> Result<Box<dyn Scheme>, PlanError> {
        self.factories
            .get(name)
            .map(|f| f())
            .ok_or_else(|| PlanError::UnknownScheme(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

/// The six compared schemes in table order.
pub const TABLE_SCHEMES: [&str; 6] = ["wmvn", "pid_ppp", "sns_v", "man", "fpbm", "sns_a"];

pub fn schemes() -> SchemeRegistry {
    let mut r = SchemeRegistry::empty();
    r.register("mvn", || Box::new(Mvn));
    r.register("wmvn", || Box::new(Wmvn));
    r.register("pid_ppp", || Box::new(PidPpp::default()));
    r.register("sns_v", || Box::new(SnsV));
    r.register("man", || Box::new(Man));
    r.register("fpbm", || Box::new(Fpbm));
    r.register("sns_a", || Box::new(SnsA));
    r
}

/// Explicit Euler for rates, semi-implicit Euler for accelerations.
pub fn integrate(state: &SchemeState, command: &Vector, level: Level, dt: f64) -> SchemeState {
    match level {
        Level::Velocity => SchemeState {
            t: state.t + dt,
            q: &state.q + command * dt,
            qdot: command.clone(),
            qddot: Vector::zeros(command.len()),
        },
        Level::Acceleration => {
            let qdot = &state.qdot + command * dt;
            SchemeState {
                t: state.t + dt,
                q: &state.q + &qdot * dt,
                qdot,
                qddot: command.clone(),
            }
        }
    }
}
