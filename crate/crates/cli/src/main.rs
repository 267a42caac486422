use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use wavelab::fields::{BerryField, ToralEigenfunction};
use wavelab::lattice::{self, BoundForm, LatticeShell};
use wavelab_cli::config::{Expect, ExperimentConfig, ExperimentKind, FieldSpec};
use wavelab_cli::error::{CliError, Context};
use wavelab_cli::plot::emit_plot_data;
use wavelab_cli::runner::{self, Report};

#[derive(Parser)]
#[command(
    name = "wavelab",
    version,
    about = "Local statistics of planar Laplace eigenfunctions"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "WAVELAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice points on the circle of radius sqrt(E), as JSON.
    Shell {
        #[arg(long = "E")]
        energy: u64,
        /// Also census minimally vanishing subsets up to this length.
        #[arg(long)]
        census: Option<usize>,
        #[arg(long, default_value_t = 0.25)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Toral eigenfunction JSON.
    Eigen {
        #[arg(long = "E")]
        energy: u64,
        #[arg(long, conflicts_with_all = ["coeffs", "random"])]
        flat: bool,
        /// Gaussian coefficients from `--seed`.
        #[arg(long, conflicts_with = "coeffs")]
        random: bool,
        /// JSON array of `[re, im]` pairs ordered like the shell.
        #[arg(long)]
        coeffs: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Berry random wave sample JSON.
    Berry {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        ntrunc: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump local coefficients of windows as CSV.
    LocalStats {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    BerryConformance(ExperimentArgs),
    NodalCensus(ExperimentArgs),
    Cns(ExperimentArgs),
    QueCheck(ExperimentArgs),
    Sandwich(ExperimentArgs),
    /// Rewrite the CSV tables of an existing report.
    Report {
        report: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run whatever experiment a config file names.
    Run {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct ExperimentArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Eigenfunction or Berry sample JSON.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long = "E")]
    energy: Option<u64>,
    #[arg(long, requires = "energy")]
    flat: bool,
    #[arg(long, requires = "energy")]
    random: bool,
    #[arg(long)]
    plane_wave: Option<u64>,
    /// Fresh Berry samples.
    #[arg(long)]
    berry: bool,
    #[arg(long)]
    ntrunc: Option<usize>,
    #[arg(long)]
    windows: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    /// Repeat to sweep.
    #[arg(long = "R")]
    radius: Vec<f64>,
    #[arg(long = "Rp")]
    radius_prime: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    cells: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    rp: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    sectors: Option<usize>,
    /// Region family, `dyadic:k`.
    #[arg(long)]
    rects: Option<String>,
    #[arg(long, value_parser = parse_expect)]
    expect_berry: Option<Expect>,
    #[arg(long, value_parser = parse_expect)]
    expect_plane_wave: Option<Expect>,
    #[arg(long, value_parser = parse_expect)]
    expect_sandwich: Option<Expect>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_expect(s: &str) -> Result<Expect, String> {
    match s {
        "pass" => Ok(Expect::Pass),
        "fail" => Ok(Expect::Fail),
        "any" => Ok(Expect::Any),
        _ => Err(format!("expected pass, fail or any, got {s:?}")),
    }
}

impl ExperimentArgs {
    fn into_config(self, kind: ExperimentKind) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => {
                let c = ExperimentConfig::load(path)?;
                if c.experiment != kind {
                    return Err(CliError::Config(format!(
                        "{} names experiment {}, not {}",
                        path.display(),
                        c.experiment.name(),
                        kind.name()
                    )));
                }
                c
            }
            None => ExperimentConfig::new(kind),
        };
        let field = if let Some(path) = self.field {
            Some(FieldSpec::File { path })
        } else if let Some(n) = self.plane_wave {
            Some(FieldSpec::PlaneWave { n })
        } else if self.berry || self.ntrunc.is_some() {
            Some(FieldSpec::Berry { n_trunc: self.ntrunc })
        } else if let Some(energy) = self.energy {
            Some(if self.random {
                FieldSpec::Random { energy }
            } else {
                FieldSpec::Flat { energy }
            })
        } else {
            None
        };
        if field.is_some() {
            c.field = field;
        }
        let p = &mut c.params;
        macro_rules! set {
            ($slot:expr, $v:expr) => {
                if let Some(v) = $v {
                    $slot = Some(v);
                }
            };
        }
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        set!(p.windows, self.windows);
        set!(p.n, self.n);
        set!(p.grid, self.grid);
        set!(p.radius_prime, self.radius_prime);
        set!(p.samples, self.samples);
        set!(p.cells_per_unit, self.cells);
        set!(p.r, self.r);
        set!(p.r_prime, self.rp);
        set!(p.omega_radius, self.omega);
        set!(p.sectors, self.sectors);
        if !self.radius.is_empty() {
            p.radius = Some(self.radius[0]);
            if kind == ExperimentKind::Cns {
                p.radii = Some(self.radius.clone());
            }
        }
        if let Some(rects) = &self.rects {
            let levels = rects
                .strip_prefix("dyadic:")
                .and_then(|k| k.parse::<u32>().ok())
                .ok_or_else(|| CliError::Config(format!("--rects {rects:?}: expected dyadic:<levels>")))?;
            p.dyadic_levels = Some(levels);
        }
        set!(c.expect.berry, self.expect_berry);
        set!(c.expect.plane_wave, self.expect_plane_wave);
        set!(c.expect.sandwich, self.expect_sandwich);
        if let Some(dir) = self.out_dir {
            c.output.dir = dir;
        }
        Ok(c)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| CliError::io("stdout", e))
        }
    }
}

fn summarize(report: &Report, dir: &Path) {
    for c in &report.checks {
        eprintln!(
            "{}: {} (expected {:?}){}",
            c.name,
            if c.passed { "pass" } else { "fail" },
            c.expected,
            if c.accepted { "" } else { "  <-- unexpected" }
        );
    }
    eprintln!("{} -> {}", report.experiment.name(), dir.display());
}

fn run_experiment(config: ExperimentConfig) -> Result<i32, CliError> {
    let resolved = config.resolve()?;
    let out = runner::execute(&resolved)?;
    runner::write_outputs(&out, &resolved.output.dir)?;
    summarize(&out.report, &resolved.output.dir);
    Ok(out.report.exit_code)
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Shell {
            energy,
            census,
            gamma,
            out,
        } => {
            let shell = LatticeShell::enumerate(energy);
            let text = match census {
                None => shell.to_json(),
                Some(len) => {
                    let report = lattice::check_condition_i(&shell, gamma, len, BoundForm::Power).context("census")?;
                    serde_json::to_string_pretty(&report).expect("report serializes")
                }
            };
            emit(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Eigen {
            energy,
            flat,
            random,
            coeffs,
            seed,
            out,
        } => {
            let shell = LatticeShell::enumerate(energy);
            let f = if let Some(path) = coeffs {
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                let pairs: Vec<[f64; 2]> = serde_json::from_str(&text).map_err(|e| CliError::io(&path, e))?;
                let c = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
                ToralEigenfunction::new(shell, c).context("coefficients")?
            } else if random {
                ToralEigenfunction::random(shell, &mut wavelab::rng::stream(seed, 0)).context("random eigenfunction")?
            } else if flat {
                ToralEigenfunction::flat(shell).context("flat eigenfunction")?
            } else {
                return Err(CliError::Config("eigen needs --flat, --random or --coeffs".into()));
            };
            emit(out.as_deref(), &f.to_json())?;
            Ok(0)
        }
        Command::Berry { seed, ntrunc, out } => {
            let f = BerryField::sample_seeded(ntrunc, seed).context("Berry sample")?;
            emit(out.as_deref(), &f.to_json())?;
            Ok(0)
        }
        Command::LocalStats { exp, out } => {
            let resolved = exp.into_config(ExperimentKind::LocalStats)?.resolve()?;
            let run = runner::execute(&resolved)?;
            let samples = run
                .extra
                .iter()
                .find(|t| t.name == "samples")
                .expect("local-stats emits samples");
            match out {
                Some(path) => std::fs::write(&path, &samples.csv).map_err(|e| CliError::io(&path, e))?,
                None => {
                    runner::write_outputs(&run, &resolved.output.dir)?;
                    summarize(&run.report, &resolved.output.dir);
                }
            }
            Ok(run.report.exit_code)
        }
        Command::BerryConformance(a) => run_experiment(a.into_config(ExperimentKind::BerryConformance)?),
        Command::NodalCensus(a) => run_experiment(a.into_config(ExperimentKind::NodalCensus)?),
        Command::Cns(a) => run_experiment(a.into_config(ExperimentKind::Cns)?),
        Command::QueCheck(a) => run_experiment(a.into_config(ExperimentKind::QueCheck)?),
        Command::Sandwich(a) => run_experiment(a.into_config(ExperimentKind::Sandwich)?),
        Command::Report { report, out_dir } => {
            let text = std::fs::read_to_string(&report).map_err(|e| CliError::io(&report, e))?;
            let parsed: Report = serde_json::from_str(&text).map_err(|e| CliError::io(&report, e))?;
            let dir = out_dir.unwrap_or_else(|| report.parent().map(Path::to_path_buf).unwrap_or_default());
            std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
            for table in emit_plot_data(&parsed)? {
                let path = dir.join(format!("{}.csv", table.name));
                std::fs::write(&path, &table.csv).map_err(|e| CliError::io(&path, e))?;
            }
            Ok(parsed.exit_code)
        }
        Command::Run { config, out_dir } => {
            let mut c = ExperimentConfig::load(&config)?;
            if let Some(dir) = out_dir {
                c.output.dir = dir;
            }
            run_experiment(c)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
