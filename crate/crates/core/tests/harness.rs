use std::fs;

use unitpath::gi::BackendKind;
use unitpath::harness::{
    presets, run, run_matrix, summary_csv, write_report, ExperimentConfig, HarnessError, MatrixFile, RunStatus,
};
use unitpath::kinematics::DhTable;
use unitpath::noise::NoiseKind;

fn quick(name: &str, scheme: &str) -> ExperimentConfig {
    let mut c = presets::experiment(name).unwrap();
    c.scheme = scheme.into();
    c.units = vec!["m".into(), "mm".into()];
    c
}

#[test]
fn two_waypoints_start_on_the_path() {
    let mut c = quick("3dof-tricuspid", "wmvn");
    c.path.waypoints = 2;
    c.substeps = 7000;
    for rec in run(&c, None).unwrap() {
        assert_eq!(rec.status, RunStatus::Completed);
        assert_eq!(rec.samples.len(), 2);
        assert!(rec.samples[0].err_mm < 1e-9, "{}", rec.samples[0].err_mm);
    }
}

#[test]
fn summary_statistics_match_the_samples() {
    for rec in run(&quick("7dof-rhodonea", "man"), None).unwrap() {
        let errs: Vec<f64> = rec.samples.iter().map(|s| s.err_mm).collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let max = errs.iter().cloned().fold(0.0, f64::max);
        assert!((rec.mean_err_mm - mean).abs() <= 1e-12 * mean.max(1.0));
        assert_eq!(rec.max_err_mm, max);
        assert_eq!(rec.samples.len(), 700);
    }
}

#[test]
fn empty_matrix_is_a_config_error() {
    assert!(matches!(run_matrix(&[], None), Err(HarnessError::Config(_))));
}

#[test]
fn bad_configs_are_rejected_before_running() {
    let mut c = quick("3dof-circle", "wmvn");
    c.initial_q.pop();
    assert!(matches!(run_matrix(&[c], None), Err(HarnessError::Config(_))));

    let mut c = quick("3dof-circle", "no-such-scheme");
    c.scheme = "no-such-scheme".into();
    assert!(run(&c, None).is_err());

    let mut c = quick("3dof-circle", "wmvn");
    c.units = vec!["inch".into()];
    assert!(run(&c, None).is_err());

    let mut c = quick("3dof-circle", "wmvn");
    c.path.kind = unitpath::trajectories::PathKind::InterlacedCircle;
    assert!(run(&c, None).is_err());
}

#[test]
fn mixed_sweep_is_consistent_and_pseudo_inverse_is_not() {
    let mut cfgs = Vec::new();
    for backend in [BackendKind::Mx, BackendKind::Mp] {
        let mut c = quick("3dof-circle", "mvn");
        c.backend = backend;
        cfgs.push(c);
    }
    let rep = run_matrix(&cfgs, None).unwrap();
    let by_backend: Vec<(BackendKind, bool)> = rep
        .verdicts
        .iter()
        .map(|(k, v)| (k.backend, v.is_consistent()))
        .collect();
    assert!(by_backend.contains(&(BackendKind::Mx, true)));
    assert!(by_backend.contains(&(BackendKind::Mp, false)));
    assert!(!rep.all_consistent());
}

#[test]
fn summary_has_one_row_per_cell_and_one_column_per_unit() {
    let mut cfgs = Vec::new();
    for noise in [NoiseKind::Zero, NoiseKind::Random] {
        let mut c = quick("3dof-rhodonea", "sns_v");
        c.noise.kind = noise;
        cfgs.push(c);
    }
    let rep = run_matrix(&cfgs, None).unwrap();
    let csv = summary_csv(&rep);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "robot,path,noise,scheme,mx_m,mx_mm");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 6));
}

#[test]
fn report_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run_matrix(&[quick("3dof-tricuspid", "fpbm")], None).unwrap();
    write_report(&rep, dir.path()).unwrap();
    let run_csv = fs::read_to_string(dir.path().join("runs/planar-2rp_tricuspid_fpbm_mx_zero_mm.csv")).unwrap();
    assert!(run_csv.starts_with("t,err_mm,"));
    assert_eq!(run_csv.lines().count(), 701);
    let text = fs::read_to_string(dir.path().join("consistency.txt")).unwrap();
    assert!(text.starts_with("CONSISTENT"));
    assert!(dir.path().join("timing.txt").is_file());
}

#[test]
fn robot_file_in_millimetres_matches_the_builtin_arm() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = DhTable::planar_2rp().to_toml_string();
    text = text.replace("unit = \"m\"", "unit = \"mm\"").replace("a = 1.0\n", "a = 1000.0\n").replace("a = 1.1\n", "a = 1100.0\n");
    fs::write(dir.path().join("arm.toml"), &text).unwrap();

    let builtin = quick("3dof-tricuspid", "wmvn");
    let mut from_file = builtin.clone();
    from_file.robot = "arm.toml".into();
    let a = run(&builtin, None).unwrap();
    let b = run(&from_file, Some(dir.path())).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let dev = x
            .samples
            .iter()
            .zip(&y.samples)
            .map(|(p, q)| (p.err_mm - q.err_mm).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9, "{dev}");
    }
}

#[test]
fn matrix_file_sweeps_expand_and_round_trip() {
    let template = quick("3dof-circle", "wmvn");
    let text = format!(
        "[[sweep]]\nschemes = [\"wmvn\", \"man\"]\nbackends = [\"mp\", \"mx\"]\nnoises = [\"zero\", \"random\"]\n\n[sweep.template]\n{}",
        template.to_toml_string().replace("\n[", "\n[sweep.template.")
    );
    let m = MatrixFile::from_toml_str(&text).unwrap();
    let cfgs = m.configs();
    assert_eq!(cfgs.len(), 8);
    assert!(cfgs.iter().all(|c| c.units == template.units));
    let back = ExperimentConfig::from_toml_str(&template.to_toml_string()).unwrap();
    assert_eq!(back, template);
}
