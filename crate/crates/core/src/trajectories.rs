//! Closed parametric task-space paths with analytic derivatives.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("invalid path: {0}")]
    Invalid(String),
    #[error("unknown path kind '{0}'")]
    UnknownKind(String),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Circle,
    Rhodonea,
    Tricuspid,
    InterlacedCircle,
    Rhodonea3d,
    BentTricuspid,
}

impl PathKind {
    pub const ALL: [PathKind; 6] = [
        PathKind::Circle,
        PathKind::Rhodonea,
        PathKind::Tricuspid,
        PathKind::InterlacedCircle,
        PathKind::Rhodonea3d,
        PathKind::BentTricuspid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PathKind::Circle => "circle",
            PathKind::Rhodonea => "rhodonea",
            PathKind::Tricuspid => "tricuspid",
            PathKind::InterlacedCircle => "interlaced_circle",
            PathKind::Rhodonea3d => "rhodonea_3d",
            PathKind::BentTricuspid => "bent_tricuspid",
        }
    }

    pub fn is_spatial(self) -> bool {
        matches!(
            self,
            PathKind::InterlacedCircle | PathKind::Rhodonea3d | PathKind::BentTricuspid
        )
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PathKind {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| PathError::UnknownKind(s.to_string()))
    }
}

fn default_petals() -> u32 {
    3
}
fn default_waypoints() -> usize {
    7000
}
fn default_total_time() -> f64 {
    10.0
}

/// A closed path `center + offset(θ)`, `θ = 2π t / period`. Lengths are in
/// model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub kind: PathKind,
    #[serde(default)]
    pub center: [f64; 3],
    pub scale: f64,
    /// Out-of-plane amplitude for the spatial kinds.
    #[serde(default)]
    pub height: f64,
    #[serde(default = "default_total_time")]
    pub period: f64,
    #[serde(default = "default_petals")]
    pub petal_count: u32,
    #[serde(default = "default_waypoints")]
    pub waypoints: usize,
    #[serde(default = "default_total_time")]
    pub total_time: f64,
}

/// Position, first and second derivative with respect to the curve angle.
type Jet = (Vector3<f64>, Vector3<f64>, Vector3<f64>);

impl PathSpec {
    pub fn new(kind: PathKind, scale: f64) -> Self {
        Self {
            kind,
            center: [0.0; 3],
            scale,
            height: 0.0,
            period: default_total_time(),
            petal_count: default_petals(),
            waypoints: default_waypoints(),
            total_time: default_total_time(),
        }
    }

    pub fn validate(&self) -> Result<(), PathError> {
        let bad = |m: &str| Err(PathError::Invalid(m.to_string()));
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale must be positive");
        }
        if self.waypoints < 2 {
            return bad("need at least 2 waypoints");
        }
        if !(self.total_time.is_finite() && self.total_time > 0.0) {
            return bad("total_time must be positive");
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return bad("period must be positive");
        }
        if !self.height.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return bad("non-finite center or height");
        }
        if matches!(self.kind, PathKind::Rhodonea | PathKind::Rhodonea3d) && self.petal_count == 0 {
            return bad("petal_count must be at least 1");
        }
        Ok(())
    }

    /// Multiplies every length (center, scale, height) by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            center: self.center.map(|c| c * k),
            scale: self.scale * k,
            height: self.height * k,
            ..self.clone()
        }
    }

    /// Moves the center so that the path starts at `start`.
    pub fn anchored_at(&self, start: Vector3<f64>) -> Self {
        let (o, _, _) = self.offset_jet(0.0);
        let c = start - o;
        Self {
            center: [c.x, c.y, c.z],
            ..self.clone()
        }
    }

    fn omega(&self) -> f64 {
        TAU / self.period
    }

    fn offset_jet(&self, th: f64) -> Jet {
        let s = self.scale;
        let planar = match self.kind {
            PathKind::Circle | PathKind::InterlacedCircle => {
                let (sn, cs) = th.sin_cos();
                (
                    Vector3::new(s * cs, s * sn, 0.0),
                    Vector3::new(-s * sn, s * cs, 0.0),
                    Vector3::new(-s * cs, -s * sn, 0.0),
                )
            }
            PathKind::Rhodonea | PathKind::Rhodonea3d => {
                let k = self.petal_count as f64;
                let (sk, ck) = (k * th).sin_cos();
                let (r, r1, r2) = (s * ck, -s * k * sk, -s * k * k * ck);
                let (sn, cs) = th.sin_cos();
                (
                    Vector3::new(r * cs, r * sn, 0.0),
                    Vector3::new(r1 * cs - r * sn, r1 * sn + r * cs, 0.0),
                    Vector3::new(
                        r2 * cs - 2.0 * r1 * sn - r * cs,
                        r2 * sn + 2.0 * r1 * cs - r * sn,
                        0.0,
                    ),
                )
            }
            PathKind::Tricuspid | PathKind::BentTricuspid => {
                let (s1, c1) = th.sin_cos();
                let (s2, c2) = (2.0 * th).sin_cos();
                (
                    Vector3::new(2.0 * s * c1 + s * c2, 2.0 * s * s1 - s * s2, 0.0),
                    Vector3::new(-2.0 * s * s1 - 2.0 * s * s2, 2.0 * s * c1 - 2.0 * s * c2, 0.0),
                    Vector3::new(-2.0 * s * c1 - 4.0 * s * c2, -2.0 * s * s1 + 4.0 * s * s2, 0.0),
                )
            }
        };
        let h = self.height;
        let z = match self.kind {
            PathKind::InterlacedCircle => {
                let (sn, cs) = (2.0 * th).sin_cos();
                (h * sn, 2.0 * h * cs, -4.0 * h * sn)
            }
            PathKind::Rhodonea3d | PathKind::BentTricuspid => {
                let (sn, cs) = th.sin_cos();
                (h * sn, h * cs, -h * sn)
            }
            _ => (0.0, 0.0, 0.0),
        };
        let (mut p, mut v, mut a) = planar;
        p.z = z.0;
        v.z = z.1;
        a.z = z.2;
        (p, v, a)
    }

    /// Desired position, velocity and acceleration at time `t`.
    pub fn eval(&self, t: f64) -> Jet {
        let w = self.omega();
        let (p, dp, ddp) = self.offset_jet(w * t);
        let c = Vector3::from(self.center);
        (c + p, dp * w, ddp * (w * w))
    }

    /// Sample spacing: the series spans `[0, total_time]` inclusive.
    pub fn dt(&self) -> f64 {
        self.total_time / (self.waypoints - 1) as f64
    }

    /// Largest length in the spec, used to scale tolerances.
    fn extent(&self) -> f64 {
        self.scale.max(self.height.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointSeries {
    pub spec: PathSpec,
    pub times: Vec<f64>,
    pub poses: Vec<Vector3<f64>>,
    pub rates: Vec<Vector3<f64>>,
    pub accels: Vec<Vector3<f64>>,
}

impl WaypointSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Writes `t,x,y,z,xd,yd,zd,xdd,ydd,zdd` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PathError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y", "z", "xd", "yd", "zd", "xdd", "ydd", "zdd"])?;
        for i in 0..self.len() {
            let mut rec = vec![self.times[i].to_string()];
            for v in [&self.poses[i], &self.rates[i], &self.accels[i]] {
                rec.extend(v.iter().map(|x| x.to_string()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn generate(spec: &PathSpec) -> Result<WaypointSeries, PathError> {
    spec.validate()?;
    let dt = spec.dt();
    let n = spec.waypoints;
    let mut s = WaypointSeries {
        spec: spec.clone(),
        times: Vec::with_capacity(n),
        poses: Vec::with_capacity(n),
        rates: Vec::with_capacity(n),
        accels: Vec::with_capacity(n),
    };
    for i in 0..n {
        let t = if i + 1 == n { spec.total_time } else { i as f64 * dt };
        let (p, v, a) = spec.eval(t);
        s.times.push(t);
        s.poses.push(p);
        s.rates.push(v);
        s.accels.push(a);
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeReport {
    pub max_rate_deviation: f64,
    pub max_accel_deviation: f64,
    pub rate_tolerance: f64,
    pub accel_tolerance: f64,
    /// Sample index where the rate deviation peaks.
    pub worst_rate_index: usize,
}

impl DerivativeReport {
    pub fn passed(&self) -> bool {
        self.max_rate_deviation <= self.rate_tolerance
            && self.max_accel_deviation <= self.accel_tolerance
    }
}

/// Compares central differences of the stored poses (and rates) with the
/// stored rates (and accelerations) at interior samples.
///
/// Tolerances are `0.1 · L · ω² · dt` for rates and `0.1 · L · ω³ · dt` for
/// accelerations, where `L` is the larger of scale and height.
pub fn derivative_check(series: &WaypointSeries) -> DerivativeReport {
    let spec = &series.spec;
    let w = TAU / spec.period;
    let ext = spec.extent();
    let mut rep = DerivativeReport {
        max_rate_deviation: 0.0,
        max_accel_deviation: 0.0,
        rate_tolerance: 0.1 * ext * w * w * spec.dt(),
        accel_tolerance: 0.1 * ext * w * w * w * spec.dt(),
        worst_rate_index: 0,
    };
    for i in 1..series.len().saturating_sub(1) {
        let h = series.times[i + 1] - series.times[i - 1];
        let fd_v = (series.poses[i + 1] - series.poses[i - 1]) / h;
        let fd_a = (series.rates[i + 1] - series.rates[i - 1]) / h;
        let dv = (fd_v - series.rates[i]).amax();
        let da = (fd_a - series.accels[i]).amax();
        if dv > rep.max_rate_deviation {
            rep.max_rate_deviation = dv;
            rep.worst_rate_index = i;
        }
        rep.max_accel_deviation = rep.max_accel_deviation.max(da);
    }
    rep
}
