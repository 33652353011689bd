use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unitpath::gi::BackendKind;
use unitpath::harness::{
    consistency_text, invariant_suite, presets, run_matrix, summary_csv, write_report,
    ExperimentConfig, HarnessError, MatrixFile, MatrixReport,
};
use unitpath::noise::NoiseKind;
use unitpath::planners::TABLE_SCHEMES;
use unitpath::trajectories::{generate, PathKind, PathSpec};

#[derive(Parser)]
#[command(name = "unitpath", version, about = "Unit-consistency experiments for redundant-arm path planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment at every configured unit.
    Run(RunArgs),
    /// Run a set of experiments and compare units cell by cell.
    Matrix(MatrixArgs),
    /// Write a sampled path with its derivatives as CSV.
    Paths(PathsArgs),
    /// Run the quick invariant suite.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// List the built-in experiment presets.
    Presets,
}

#[derive(Args, Default)]
struct Overrides {
    /// Comma-separated unit labels (m, dm, cm, mm).
    #[arg(long, value_delimiter = ',')]
    units: Option<Vec<String>>,
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Seed for random noise.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    waypoints: Option<usize>,
    #[arg(long)]
    substeps: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(u) = &self.units {
            cfg.units = u.clone();
        }
        if let Some(b) = self.backend {
            cfg.backend = b;
        }
        if let Some(s) = self.seed {
            cfg.noise.seed = s;
        }
        if let Some(w) = self.waypoints {
            cfg.path.waypoints = w;
        }
        if let Some(s) = self.substeps {
            cfg.substeps = s;
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment TOML file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in experiment (see `unitpath presets`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    noise: Option<NoiseKind>,
    #[command(flatten)]
    overrides: Overrides,
    /// Directory for CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Matrix TOML file, single-experiment TOML, or a directory of either.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    config: Option<PathBuf>,
    /// Every preset × table scheme × noise kind.
    #[arg(long)]
    builtin: bool,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathsArgs {
    /// Path of a built-in experiment.
    #[arg(long, conflicts_with = "kind", required_unless_present = "kind")]
    preset: Option<String>,
    #[arg(long)]
    kind: Option<PathKind>,
    /// Size of the curve in metres.
    #[arg(long, default_value_t = 0.1)]
    scale: f64,
    #[arg(long, default_value_t = 0.0)]
    height: f64,
    #[arg(long)]
    waypoints: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Outcome,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn load_experiments(path: &Path) -> Result<(Vec<ExperimentConfig>, Option<PathBuf>), Failure> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())));
    let parse = |p: &Path| -> Result<Vec<ExperimentConfig>, Failure> {
        let text = read(p)?;
        match MatrixFile::from_toml_str(&text) {
            Ok(m) => Ok(m.configs()),
            Err(matrix_err) => match ExperimentConfig::from_toml_str(&text) {
                Ok(c) => Ok(vec![c]),
                Err(_) => Err(Failure::Config(format!("{}: {matrix_err}", p.display()))),
            },
        }
    };
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        files.sort();
        let mut all = Vec::new();
        for f in &files {
            all.extend(parse(f)?);
        }
        Ok((all, Some(path.to_path_buf())))
    } else {
        Ok((parse(path)?, path.parent().map(Path::to_path_buf)))
    }
}

fn builtin_matrix() -> Result<Vec<ExperimentConfig>, Failure> {
    let mut out = Vec::new();
    for name in presets::NAMES {
        for scheme in TABLE_SCHEMES {
            for noise in NoiseKind::ALL {
                let mut c = presets::experiment(name)?;
                c.scheme = scheme.to_string();
                c.noise.kind = noise;
                out.push(c);
            }
        }
    }
    Ok(out)
}

fn report(rep: &MatrixReport, out: Option<&Path>) -> Result<(), Failure> {
    if let Some(dir) = out {
        write_report(rep, dir)?;
        eprintln!("wrote {}", dir.display());
    }
    print!("{}", summary_csv(rep));
    println!();
    print!("{}", consistency_text(rep));
    if rep.any_diverged() || !rep.all_consistent() {
        return Err(Failure::Outcome);
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let (mut cfg, base) = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let (mut cfgs, base) = load_experiments(path)?;
            if cfgs.len() != 1 {
                return Err(Failure::Config(format!(
                    "{} holds {} experiments; use `matrix` for several",
                    path.display(),
                    cfgs.len()
                )));
            }
            (cfgs.remove(0), base)
        }
        (None, Some(name)) => (presets::experiment(name)?, None),
        (None, None) => unreachable!("clap requires one of --config/--preset"),
    };
    if let Some(s) = &args.scheme {
        cfg.scheme = s.clone();
    }
    if let Some(n) = args.noise {
        cfg.noise.kind = n;
    }
    args.overrides.apply(&mut cfg);
    let rep = run_matrix(std::slice::from_ref(&cfg), base.as_deref())?;
    for (_, r) in &rep.records {
        eprintln!(
            "{:<4} {:<10} mean {:>14.6} mm  max {:>14.6} mm  {:.2} GI calls/step",
            r.unit.label(),
            r.status.as_str(),
            r.mean_err_mm,
            r.max_err_mm,
            r.gi_calls_per_step()
        );
        if let unitpath::harness::RunStatus::Failed(msg) = &r.status {
            eprintln!("     {msg}");
        }
    }
    report(&rep, args.out.as_deref())
}

fn cmd_matrix(args: MatrixArgs) -> Result<(), Failure> {
    let (mut cfgs, base) = match &args.config {
        Some(path) => load_experiments(path)?,
        None => (builtin_matrix()?, None),
    };
    for c in &mut cfgs {
        args.overrides.apply(c);
    }
    let rep = run_matrix(&cfgs, base.as_deref())?;
    report(&rep, args.out.as_deref())
}

fn cmd_paths(args: PathsArgs) -> Result<(), Failure> {
    let mut spec = match (&args.preset, args.kind) {
        (Some(name), _) => presets::experiment(name)?.path,
        (None, Some(kind)) => PathSpec {
            height: args.height,
            ..PathSpec::new(kind, args.scale)
        },
        (None, None) => unreachable!("clap requires one of --preset/--kind"),
    };
    if let Some(w) = args.waypoints {
        spec.waypoints = w;
    }
    let series = generate(&spec).map_err(|e| Failure::Config(e.to_string()))?;
    let written = match &args.out {
        Some(p) => fs::File::create(p)
            .map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
            .and_then(|f| series.write_csv(f).map_err(|e| Failure::Config(e.to_string()))),
        None => series
            .write_csv(std::io::stdout().lock())
            .map_err(|e| Failure::Config(e.to_string())),
    };
    written
}

fn cmd_check(seed: u64) -> Result<(), Failure> {
    let results = invariant_suite(seed);
    for r in &results {
        println!("{} {}  ({})", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(Failure::Outcome)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Paths(a) => cmd_paths(a),
        Command::Check { seed } => cmd_check(seed),
        Command::Presets => {
            for name in presets::NAMES {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Outcome) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
