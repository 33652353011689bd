use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::KinematicsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// Which end-effector coordinates make up the task vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSpace {
    /// `[x, y]` of a planar arm.
    PlanarXy,
    /// `[x, y, z, roll, pitch, yaw]`.
    PoseRpy,
}

impl TaskSpace {
    pub fn dim(self) -> usize {
        match self {
            TaskSpace::PlanarXy => 2,
            TaskSpace::PoseRpy => 6,
        }
    }

    /// Task rows that carry lengths.
    pub fn position_rows(self) -> usize {
        match self {
            TaskSpace::PlanarXy => 2,
            TaskSpace::PoseRpy => 3,
        }
    }
}

/// One standard (distal) DH row. Lengths are in model units, angles in
/// radians. The joint variable adds to `theta` (revolute) or `d` (prismatic).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub theta_offset: f64,
    pub d: f64,
    pub a: f64,
    pub alpha: f64,
    pub kind: JointKind,
}

impl DhRow {
    pub fn revolute(theta_offset: f64, d: f64, a: f64, alpha: f64) -> Self {
        Self {
            theta_offset,
            d,
            a,
            alpha,
            kind: JointKind::Revolute,
        }
    }

    pub fn prismatic(theta_offset: f64, d: f64, a: f64, alpha: f64) -> Self {
        Self {
            theta_offset,
            d,
            a,
            alpha,
            kind: JointKind::Prismatic,
        }
    }
}

/// Length unit expressed as a multiple of the metre.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitScale(f64);

impl UnitScale {
    pub const M: UnitScale = UnitScale(1.0);
    pub const DM: UnitScale = UnitScale(10.0);
    pub const CM: UnitScale = UnitScale(100.0);
    pub const MM: UnitScale = UnitScale(1000.0);
    pub const SWEEP: [UnitScale; 4] = [Self::M, Self::DM, Self::CM, Self::MM];

    pub fn new(factor: f64) -> Result<Self, KinematicsError> {
        if factor.is_finite() && factor > 0.0 {
            Ok(UnitScale(factor))
        } else {
            Err(KinematicsError::Invalid(format!(
                "unit factor must be positive, got {factor}"
            )))
        }
    }

    pub fn factor(self) -> f64 {
        self.0
    }

    pub fn label(self) -> String {
        match self.0 {
            1.0 => "m".into(),
            10.0 => "dm".into(),
            100.0 => "cm".into(),
            1000.0 => "mm".into(),
            f => format!("x{f}"),
        }
    }

    pub fn from_label(s: &str) -> Result<Self, KinematicsError> {
        match s {
            "m" => Ok(Self::M),
            "dm" => Ok(Self::DM),
            "cm" => Ok(Self::CM),
            "mm" => Ok(Self::MM),
            other => other
                .parse::<f64>()
                .map_err(|_| KinematicsError::Invalid(format!("unknown unit '{other}'")))
                .and_then(Self::new),
        }
    }

    /// Converts a length in these units to millimetres.
    pub fn to_mm(self, length: f64) -> f64 {
        length / self.0 * 1000.0
    }
}

/// A serial arm: DH rows plus the task-space layout. Lengths are expressed
/// in `unit`.
#[derive(Debug, Clone, PartialEq)]
pub struct DhTable {
    pub name: String,
    pub rows: Vec<DhRow>,
    pub task: TaskSpace,
    pub unit: UnitScale,
}

impl DhTable {
    pub fn new(name: &str, rows: Vec<DhRow>, task: TaskSpace) -> Result<Self, KinematicsError> {
        if rows.is_empty() {
            return Err(KinematicsError::Invalid("robot needs at least one joint".into()));
        }
        if rows.iter().any(|r| {
            ![r.theta_offset, r.d, r.a, r.alpha]
                .iter()
                .all(|v| v.is_finite())
        }) {
            return Err(KinematicsError::Invalid("non-finite DH parameter".into()));
        }
        Ok(Self {
            name: name.to_string(),
            rows,
            task,
            unit: UnitScale::M,
        })
    }

    pub fn dof(&self) -> usize {
        self.rows.len()
    }

    pub fn task_dim(&self) -> usize {
        self.task.dim()
    }

    pub fn kinds(&self) -> impl Iterator<Item = JointKind> + '_ {
        self.rows.iter().map(|r| r.kind)
    }

    pub fn is_prismatic(&self, joint: usize) -> bool {
        self.rows[joint].kind == JointKind::Prismatic
    }

    /// The 3-DoF planar 2RP arm (link lengths 1.0 m and 1.1 m, prismatic
    /// tool axis lying in the plane).
    pub fn planar_2rp() -> Self {
        let rows = vec![
            DhRow::revolute(0.0, 0.0, 1.0, 0.0),
            DhRow::revolute(0.0, 0.0, 1.1, FRAC_PI_2),
            DhRow::prismatic(0.0, 0.0, 0.0, 0.0),
        ];
        Self::new("planar-2rp", rows, TaskSpace::PlanarXy).expect("valid preset")
    }

    /// The 7-DoF 2RP4R arm: two revolute joints, a prismatic joint, and a
    /// four-joint revolute wrist.
    pub fn gp66_2rp4r() -> Self {
        let rows = vec![
            DhRow::revolute(0.0, 0.0, 0.0, FRAC_PI_2),
            DhRow::revolute(0.0, 0.0, 0.25, FRAC_PI_2),
            DhRow::prismatic(0.0, 0.0, 0.0, 0.0),
            DhRow::revolute(0.0, 0.0, 0.0, FRAC_PI_2),
            DhRow::revolute(0.0, 0.14, 0.0, FRAC_PI_2),
            DhRow::revolute(0.0, 0.0, 0.0, FRAC_PI_2),
            DhRow::revolute(0.0, 0.0, 0.0, 0.0),
        ];
        Self::new("gp66-2rp4r", rows, TaskSpace::PoseRpy).expect("valid preset")
    }

    pub fn preset(name: &str) -> Result<Self, KinematicsError> {
        match name {
            "planar-2rp" | "3dof" => Ok(Self::planar_2rp()),
            "gp66-2rp4r" | "7dof" => Ok(Self::gp66_2rp4r()),
            other => Err(KinematicsError::Invalid(format!("unknown robot preset '{other}'"))),
        }
    }

    pub const PRESETS: [&'static str; 2] = ["planar-2rp", "gp66-2rp4r"];
}

/// `(sin, cos)` that returns exact zeros and ones at quarter turns, so that
/// structurally zero Jacobian entries stay exactly zero.
pub(crate) fn sin_cos_exact(angle: f64) -> (f64, f64) {
    let quarters = angle / FRAC_PI_2;
    let k = quarters.round();
    if (quarters - k).abs() < 1e-12 {
        match (k as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        angle.sin_cos()
    }
}

/// Multiplies every length (`d`, `a`) by `scale`; angles stay as they are.
pub fn rescale_units(dh: &DhTable, scale: UnitScale) -> DhTable {
    let k = scale.factor();
    DhTable {
        name: dh.name.clone(),
        rows: dh
            .rows
            .iter()
            .map(|r| DhRow {
                d: r.d * k,
                a: r.a * k,
                ..*r
            })
            .collect(),
        task: dh.task,
        unit: UnitScale(dh.unit.factor() * k),
    }
}

/// On-disk robot description. Angles are in degrees, lengths in `unit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotFile {
    pub name: String,
    #[serde(default = "default_unit")]
    pub unit: String,
    pub task: TaskSpace,
    #[serde(rename = "joint")]
    pub joints: Vec<JointEntry>,
}

fn default_unit() -> String {
    "m".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub kind: JointKind,
    #[serde(default)]
    pub theta_deg: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub alpha_deg: f64,
}

impl RobotFile {
    /// Builds the table in metres regardless of the file's unit.
    pub fn into_table(self) -> Result<DhTable, KinematicsError> {
        let unit = UnitScale::from_label(&self.unit)?;
        let to_m = 1.0 / unit.factor();
        let rows = self
            .joints
            .iter()
            .map(|j| DhRow {
                theta_offset: j.theta_deg.to_radians(),
                d: j.d * to_m,
                a: j.a * to_m,
                alpha: j.alpha_deg.to_radians(),
                kind: j.kind,
            })
            .collect();
        DhTable::new(&self.name, rows, self.task)
    }

    pub fn from_table(dh: &DhTable) -> Self {
        let to_m = 1.0 / dh.unit.factor();
        RobotFile {
            name: dh.name.clone(),
            unit: "m".into(),
            task: dh.task,
            joints: dh
                .rows
                .iter()
                .map(|r| JointEntry {
                    kind: r.kind,
                    theta_deg: r.theta_offset.to_degrees(),
                    d: r.d * to_m,
                    a: r.a * to_m,
                    alpha_deg: r.alpha.to_degrees(),
                })
                .collect(),
        }
    }
}

impl DhTable {
    pub fn from_toml_str(s: &str) -> Result<Self, KinematicsError> {
        let file: RobotFile =
            toml::from_str(s).map_err(|e| KinematicsError::Parse(e.to_string()))?;
        file.into_table()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RobotFile::from_table(self)).expect("robot file serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KinematicsError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn millimetre_table_matches_printed_lengths() {
        let mm = rescale_units(&DhTable::planar_2rp(), UnitScale::MM);
        assert_eq!(mm.rows[0].a, 1000.0);
        assert_eq!(mm.rows[1].a, 1100.0);
        assert_eq!(mm.rows[2].d, 0.0);
        assert_eq!(mm.rows[1].alpha, FRAC_PI_2);
        let gp = rescale_units(&DhTable::gp66_2rp4r(), UnitScale::MM);
        assert_eq!(gp.rows[1].a, 250.0);
        assert_eq!(gp.rows[4].d, 140.0);
    }

    #[test]
    fn identity_scale_is_a_no_op() {
        let dh = DhTable::gp66_2rp4r();
        assert_eq!(rescale_units(&dh, UnitScale::M), dh);
    }

    #[test]
    fn scales_compose() {
        let dh = DhTable::planar_2rp();
        let twice = rescale_units(&rescale_units(&dh, UnitScale::DM), UnitScale::DM);
        let once = rescale_units(&dh, UnitScale::CM);
        for (a, b) in twice.rows.iter().zip(&once.rows) {
            assert!((a.a - b.a).abs() < 1e-12 && (a.d - b.d).abs() < 1e-12);
        }
        assert_eq!(twice.unit, once.unit);
    }

    #[test]
    fn robot_file_round_trip_and_unit_conversion() {
        let text = r#"
            name = "planar-mm"
            unit = "mm"
            task = "planar_xy"

            [[joint]]
            kind = "revolute"
            a = 1000.0

            [[joint]]
            kind = "revolute"
            a = 1100.0
            alpha_deg = 90.0

            [[joint]]
            kind = "prismatic"
        "#;
        let dh = DhTable::from_toml_str(text).unwrap();
        let preset = DhTable::planar_2rp();
        for (a, b) in dh.rows.iter().zip(&preset.rows) {
            assert!((a.a - b.a).abs() < 1e-15);
            assert!((a.alpha - b.alpha).abs() < 1e-15);
            assert_eq!(a.kind, b.kind);
        }
        let back = DhTable::from_toml_str(&dh.to_toml_string()).unwrap();
        assert_eq!(back.rows, dh.rows);
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(DhTable::from_toml_str("name = 'x'\ntask = 'planar_xy'\njoint = []").is_err());
        assert!(DhTable::from_toml_str("name = 'x'\ntask = 'bogus'").is_err());
        assert!(UnitScale::new(0.0).is_err());
        assert!(UnitScale::from_label("furlong").is_err());
    }

    #[test]
    fn quarter_turn_trig_is_exact() {
        assert_eq!(sin_cos_exact(FRAC_PI_2), (1.0, 0.0));
        assert_eq!(sin_cos_exact(-FRAC_PI_2), (-1.0, 0.0));
        assert_eq!(sin_cos_exact(std::f64::consts::PI), (0.0, -1.0));
        let (s, c) = sin_cos_exact(0.3);
        assert_eq!((s, c), 0.3f64.sin_cos());
    }
}
