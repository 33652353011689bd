use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::{run_resolved, ExperimentRecord};
use super::HarnessError;
use crate::gi::BackendKind;
use crate::kinematics::UnitScale;
use crate::noise::NoiseKind;
use crate::trajectories::PathKind;

/// Relative tolerance for calling two unit variants equal.
pub const CONSISTENCY_RTOL: f64 = 1e-6;
/// Absolute floor in mm, below which differences are rounding noise.
pub const CONSISTENCY_ATOL_MM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub robot: String,
    pub path: PathKind,
    pub noise: NoiseKind,
    pub scheme: String,
    pub backend: BackendKind,
}

impl CellKey {
    fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            robot: cfg.robot_label(),
            path: cfg.path.kind,
            noise: cfg.noise.kind,
            scheme: cfg.scheme.clone(),
            backend: cfg.backend,
        }
    }

    pub fn file_stem(&self) -> String {
        format!(
            "{}_{}_{}_{}_{}",
            self.robot, self.path, self.scheme, self.backend, self.noise
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Consistent { max_rel_dev: f64 },
    Inconsistent { max_rel_dev: f64, unit: UnitScale },
    /// Only one unit was run.
    Untested,
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::Consistent { .. })
    }
}

#[derive(Debug, Clone)]
pub struct MatrixReport {
    pub records: Vec<(CellKey, ExperimentRecord)>,
    pub verdicts: BTreeMap<CellKey, Verdict>,
}

impl MatrixReport {
    pub fn any_diverged(&self) -> bool {
        self.records.iter().any(|(_, r)| r.diverged())
    }

    pub fn all_consistent(&self) -> bool {
        self.verdicts.values().all(Verdict::is_consistent)
    }

    pub fn records_for<'a>(&'a self, key: &'a CellKey) -> impl Iterator<Item = &'a ExperimentRecord> + 'a {
        self.records
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, r)| r)
    }
}

/// Largest scaled deviation between two error series; `> 1` means they
/// disagree. Different lengths or statuses count as infinitely far apart.
pub fn series_deviation(a: &ExperimentRecord, b: &ExperimentRecord) -> f64 {
    if a.samples.len() != b.samples.len() || a.status.as_str() != b.status.as_str() {
        return f64::INFINITY;
    }
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| {
            let tol = CONSISTENCY_RTOL * x.err_mm.abs().max(y.err_mm.abs()) + CONSISTENCY_ATOL_MM;
            (x.err_mm - y.err_mm).abs() / tol
        })
        .fold(0.0, f64::max)
}

/// Worst relative difference between two error series (for reporting).
/// Errors below the absolute floor are measured against the floor.
fn max_relative(a: &ExperimentRecord, b: &ExperimentRecord) -> f64 {
    let floor = CONSISTENCY_ATOL_MM / CONSISTENCY_RTOL;
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x.err_mm - y.err_mm).abs() / x.err_mm.abs().max(y.err_mm.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn verdict(records: &[&ExperimentRecord]) -> Verdict {
    let Some((first, rest)) = records.split_first() else {
        return Verdict::Untested;
    };
    if rest.is_empty() {
        return Verdict::Untested;
    }
    let mut worst = 0.0f64;
    for r in rest {
        if series_deviation(first, r) > 1.0 {
            let rel = if first.samples.len() == r.samples.len() {
                max_relative(first, r)
            } else {
                f64::INFINITY
            };
            return Verdict::Inconsistent {
                max_rel_dev: rel,
                unit: r.unit,
            };
        }
        worst = worst.max(max_relative(first, r));
    }
    Verdict::Consistent { max_rel_dev: worst }
}

/// Runs every (config, unit) cell, in parallel, and compares unit variants.
pub fn run_matrix(
    configs: &[ExperimentConfig],
    base_dir: Option<&Path>,
) -> Result<MatrixReport, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Config("experiment matrix is empty".into()));
    }
    let resolved = configs
        .iter()
        .map(|c| c.resolve(base_dir))
        .collect::<Result<Vec<_>, _>>()?;
    let cells: Vec<(usize, UnitScale)> = resolved
        .iter()
        .enumerate()
        .flat_map(|(i, r)| r.units.iter().map(move |&u| (i, u)))
        .collect();
    let results: Vec<Result<ExperimentRecord, HarnessError>> = cells
        .par_iter()
        .map(|&(i, u)| run_resolved(&configs[i], &resolved[i], u))
        .collect();

    let mut records = Vec::with_capacity(cells.len());
    for (&(i, _), res) in cells.iter().zip(results) {
        records.push((CellKey::of(&configs[i]), res?));
    }
    let mut groups: BTreeMap<CellKey, Vec<&ExperimentRecord>> = BTreeMap::new();
    for (k, r) in &records {
        groups.entry(k.clone()).or_default().push(r);
    }
    let verdicts = groups.into_iter().map(|(k, rs)| (k, verdict(&rs))).collect();
    Ok(MatrixReport { records, verdicts })
}

/// `t,err_mm,x_d,y_d,z_d,x,y,z` for one run, positions in mm.
pub fn write_run_csv<W: std::io::Write>(rec: &ExperimentRecord, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "err_mm", "x_d", "y_d", "z_d", "x", "y", "z"])?;
    for s in &rec.samples {
        let mut row = vec![s.t.to_string(), s.err_mm.to_string()];
        row.extend(s.desired.iter().chain(s.achieved.iter()).map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_cell(r: &ExperimentRecord) -> String {
    match r.status {
        super::run::RunStatus::Completed => format!("{:.6}", r.mean_err_mm),
        super::run::RunStatus::Diverged => "diverged".into(),
        super::run::RunStatus::Failed(_) => "failed".into(),
    }
}

/// Mean errors with one row per (robot, path, noise, scheme) and one column
/// per (backend, unit), in the order the units were run.
pub fn summary_csv(report: &MatrixReport) -> String {
    let mut units: Vec<UnitScale> = Vec::new();
    let mut backends: Vec<BackendKind> = Vec::new();
    for (k, r) in &report.records {
        if !units.contains(&r.unit) {
            units.push(r.unit);
        }
        if !backends.contains(&k.backend) {
            backends.push(k.backend);
        }
    }
    units.sort_by(|a, b| a.factor().total_cmp(&b.factor()));
    backends.sort();

    type RowKey = (String, PathKind, NoiseKind, String);
    let mut rows: BTreeMap<RowKey, BTreeMap<(BackendKind, String), String>> = BTreeMap::new();
    for (k, r) in &report.records {
        rows.entry((k.robot.clone(), k.path, k.noise, k.scheme.clone()))
            .or_default()
            .insert((k.backend, r.unit.label()), fmt_cell(r));
    }

    let mut out = String::from("robot,path,noise,scheme");
    for b in &backends {
        for u in &units {
            write!(out, ",{}_{}", b, u.label()).unwrap();
        }
    }
    out.push('\n');
    for ((robot, path, noise, scheme), cells) in rows {
        write!(out, "{robot},{path},{noise},{scheme}").unwrap();
        for b in &backends {
            for u in &units {
                let v = cells.get(&(*b, u.label())).map(String::as_str).unwrap_or("");
                write!(out, ",{v}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn consistency_text(report: &MatrixReport) -> String {
    let mut out = String::new();
    for (k, v) in &report.verdicts {
        let (tag, detail) = match v {
            Verdict::Consistent { max_rel_dev } => ("CONSISTENT", format!("max rel dev {max_rel_dev:.3e}")),
            Verdict::Inconsistent { max_rel_dev, unit } => (
                "INCONSISTENT",
                format!("max rel dev {max_rel_dev:.3e} at {}", unit.label()),
            ),
            Verdict::Untested => ("UNTESTED", "single unit".to_string()),
        };
        writeln!(
            out,
            "{tag:<12} {} {} {} {} {}  ({detail})",
            k.robot, k.path, k.scheme, k.backend, k.noise
        )
        .unwrap();
    }
    out
}

/// Writes `runs/*.csv`, `summary.csv`, `consistency.txt` and `timing.txt`.
/// Everything except `timing.txt` is a pure function of the configs.
pub fn write_report(report: &MatrixReport, dir: &Path) -> Result<(), HarnessError> {
    let runs = dir.join("runs");
    fs::create_dir_all(&runs)?;
    let mut timing = String::from("cell unit wall_time_s gi_calls steps status\n");
    for (k, r) in &report.records {
        let name = format!("{}_{}.csv", k.file_stem(), r.unit.label());
        write_run_csv(r, fs::File::create(runs.join(name))?)?;
        writeln!(
            timing,
            "{} {} {:.6} {} {} {}",
            k.file_stem(),
            r.unit.label(),
            r.wall_time_s,
            r.gi_calls,
            r.steps,
            r.status.as_str()
        )
        .unwrap();
    }
    fs::write(dir.join("summary.csv"), summary_csv(report))?;
    fs::write(dir.join("consistency.txt"), consistency_text(report))?;
    fs::write(dir.join("timing.txt"), timing)?;
    Ok(())
}
