//! Executes a resolved configuration and assembles the report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wavelab::ergodicity::{self, MassReport, SectorMasses};
use wavelab::fields::{truncation_for_radius, BerryField, ToralEigenfunction};
use wavelab::lattice::{self, BoundForm, ConditionReport, LatticeShell};
use wavelab::localscope::{self, EmpiricalLocalMeasure, Geometry, Region, WindowSampling};
use wavelab::nodal::{self, CnsEstimate, FieldGrid, NodalCensus, SandwichReport};
use wavelab::randstats::{self, PlaneWaveReport, StatReport};
use wavelab::{rng, WaveError};

use crate::config::{Expect, ExperimentConfig, ExperimentKind, FieldSpec};
use crate::error::{CliError, Context};
use crate::plot::{emit_plot_data, Table};

/// Stream index reserved for drawing random fields, far from window indices.
const FIELD_STREAM: u64 = 1 << 62;

pub enum Field {
    Toral(ToralEigenfunction),
    Berry(BerryField),
    /// Fresh Berry samples per window or per trial.
    BerrySamples {
        n_trunc: Option<usize>,
    },
}

pub fn load_field(spec: &FieldSpec, seed: u64) -> Result<Field, CliError> {
    Ok(match spec {
        FieldSpec::Flat { energy } => {
            Field::Toral(ToralEigenfunction::flat(LatticeShell::enumerate(*energy)).context("flat eigenfunction")?)
        }
        FieldSpec::Random { energy } => Field::Toral(
            ToralEigenfunction::random(LatticeShell::enumerate(*energy), &mut rng::stream(seed, FIELD_STREAM))
                .context("random eigenfunction")?,
        ),
        FieldSpec::PlaneWave { n } => Field::Toral(ToralEigenfunction::plane_wave_pair(*n).context("plane wave")?),
        FieldSpec::Berry { n_trunc } => Field::BerrySamples { n_trunc: *n_trunc },
        FieldSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
            if value.get("N_trunc").is_some() {
                Field::Berry(BerryField::from_json(&text).context("Berry field file")?)
            } else {
                Field::Toral(ToralEigenfunction::from_json(&text).context("eigenfunction file")?)
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
    pub core_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: Expect,
    pub passed: bool,
    pub accepted: bool,
}

impl Check {
    fn new(name: &str, expected: Option<Expect>, passed: bool) -> Self {
        let expected = expected.unwrap_or_default();
        Self {
            name: name.to_string(),
            expected,
            passed,
            accepted: expected.accepts(passed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub m: i64,
    pub mean_abs2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToralScaling {
    pub energy: u64,
    pub grid: usize,
    pub radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub sample: usize,
    pub report: Option<SandwichReport>,
    pub violation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentResult {
    ShellCensus {
        energy: u64,
        points: Vec<[i64; 2]>,
        discrepancy: Option<f64>,
        condition: ConditionReport,
    },
    LocalStats {
        windows: usize,
        n: usize,
        scale: f64,
        moments: Vec<MomentRow>,
    },
    BerryConformance {
        berry: StatReport,
        plane_wave: Option<PlaneWaveReport>,
    },
    NodalCensus {
        census: NodalCensus,
        local_count: Option<usize>,
    },
    Cns {
        estimates: Vec<CnsEstimate>,
        toral: Option<ToralScaling>,
    },
    QueCheck {
        energy: u64,
        masses: Vec<MassReport>,
        max_mass_deviation: f64,
        sectors: SectorMasses,
        sup_norm: f64,
        sup_grid: usize,
    },
    Sandwich {
        rows: Vec<SandwichRow>,
        violations: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub exit_code: i32,
    pub result: ExperimentResult,
}

pub struct RunOutput {
    pub report: Report,
    /// Tables beyond those derivable from the report.
    pub extra: Vec<Table>,
}

fn toral(field: &Field, what: &str) -> Result<ToralEigenfunction, CliError> {
    match field {
        Field::Toral(f) => Ok(f.clone()),
        _ => Err(CliError::Config(format!("{what} needs a toral eigenfunction field"))),
    }
}

fn window_measure(field: &Field, config: &ExperimentConfig) -> Result<EmpiricalLocalMeasure, CliError> {
    let windows = config.params.windows.expect("resolved");
    let n = config.params.n.expect("resolved");
    let seed = config.seed;
    match field {
        Field::Toral(f) => {
            let sampling = WindowSampling {
                region: Region::unit_torus(),
                windows,
                n,
                seed,
                geometry: Geometry::Torus,
            };
            localscope::empirical_local_measure(f, f.scale(), sampling, format!("toral E={}", f.energy()))
                .context("local windows")
        }
        Field::Berry(f) => {
            let reach = f.max_radius() - localscope::CANDIDATE_RADII[localscope::CANDIDATE_RADII.len() - 1];
            if reach <= 0.0 {
                return Err(CliError::Config(format!(
                    "Berry field with N_trunc={} is too short for local windows",
                    f.n_trunc()
                )));
            }
            let sampling = WindowSampling {
                region: Region::Disk {
                    center: [0.0, 0.0],
                    radius: reach,
                },
                windows,
                n,
                seed,
                geometry: Geometry::Free,
            };
            localscope::empirical_local_measure(f, 1.0, sampling, "Berry sample").context("local windows")
        }
        Field::BerrySamples { .. } => {
            EmpiricalLocalMeasure::from_berry_samples(windows, n, seed).context("Berry samples")
        }
    }
}

fn samples_table(elm: &EmpiricalLocalMeasure) -> Result<Table, CliError> {
    let nn = elm.n as i64;
    let mut header = vec!["window".to_string(), "x".to_string(), "y".to_string()];
    for m in -nn..=nn {
        header.push(format!("re_b{m}"));
        header.push(format!("im_b{m}"));
    }
    let mut rows = Vec::with_capacity(elm.len());
    for (k, (c, s)) in elm.centers.iter().zip(&elm.samples).enumerate() {
        let mut row = vec![k.to_string(), c[0].to_string(), c[1].to_string()];
        for b in &s.b {
            row.push(b.re.to_string());
            row.push(b.im.to_string());
        }
        rows.push(row);
    }
    Table::from_rows("samples", &header, &rows)
}

fn default_torus_grid(f: &ToralEigenfunction) -> usize {
    let g = (16.0 * (f.energy() as f64).sqrt()).ceil() as usize;
    g.max(64).next_multiple_of(2)
}

/// Runs the experiment; `config` must come from [`ExperimentConfig::resolve`].
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut config = config.clone();
    let field = match &config.field {
        Some(spec) => Some(load_field(spec, config.seed)?),
        None => None,
    };
    let p = config.params.clone();
    let mut checks = Vec::new();
    let mut extra = Vec::new();
    let result = match config.experiment {
        ExperimentKind::ShellCensus => {
            let f = toral(field.as_ref().expect("validated"), "shell-census")?;
            let shell = f.shell();
            let total = f.norm_sqr();
            let weights: Vec<f64> = f.weights().iter().map(|w| w / total).collect();
            let discrepancy = lattice::angular_measure(shell, &weights)
                .and_then(|m| lattice::angular_discrepancy(&m))
                .ok();
            let condition = lattice::check_condition_i(
                shell,
                p.gamma.expect("resolved"),
                p.max_len.expect("resolved"),
                BoundForm::Power,
            )
            .context("condition I")?;
            checks.push(Check::new("condition", config.expect.condition, condition.holds));
            ExperimentResult::ShellCensus {
                energy: shell.energy(),
                points: shell.points().to_vec(),
                discrepancy,
                condition,
            }
        }
        ExperimentKind::LocalStats => {
            let elm = window_measure(field.as_ref().expect("validated"), &config)?;
            extra.push(samples_table(&elm)?);
            let nn = elm.n as i64;
            let moments = (-nn..=nn)
                .map(|m| MomentRow {
                    m,
                    mean_abs2: elm.coefficient(m).iter().map(|z| z.norm_sqr()).sum::<f64>() / elm.len() as f64,
                })
                .collect();
            ExperimentResult::LocalStats {
                windows: elm.len(),
                n: elm.n,
                scale: elm.scale,
                moments,
            }
        }
        ExperimentKind::BerryConformance => {
            let elm = window_measure(field.as_ref().expect("validated"), &config)?;
            let berry = randstats::berry_conformance(&elm).context("Berry conformance")?;
            let plane_wave = if elm.n >= 1 {
                Some(randstats::plane_wave_conformance(&elm).context("plane-wave conformance")?)
            } else {
                None
            };
            checks.push(Check::new("berry", config.expect.berry, berry.pass));
            if let Some(pw) = &plane_wave {
                checks.push(Check::new("plane-wave", config.expect.plane_wave, pw.pass));
            }
            ExperimentResult::BerryConformance { berry, plane_wave }
        }
        ExperimentKind::NodalCensus => {
            let census = match field.as_ref().expect("validated") {
                Field::Toral(f) => {
                    let m = *config.params.grid.get_or_insert(default_torus_grid(f));
                    nodal::label_components(&FieldGrid::from_toral(f, m).context("torus grid")?)
                }
                Field::Berry(f) => {
                    let radius = p.radius.expect("resolved");
                    let grid = FieldGrid::sample_disk(f, [0.0, 0.0], radius, p.cells_per_unit.expect("resolved"))
                        .context("disk grid")?;
                    nodal::label_components(&grid)
                }
                Field::BerrySamples { n_trunc } => {
                    let radius = p.radius.expect("resolved");
                    let n = n_trunc.unwrap_or(truncation_for_radius(radius));
                    let f = BerryField::sample(n, &mut rng::stream(config.seed, 0)).context("Berry sample")?;
                    let grid = FieldGrid::sample_disk(&f, [0.0, 0.0], radius, p.cells_per_unit.expect("resolved"))
                        .context("disk grid")?;
                    nodal::label_components(&grid)
                }
            };
            let local_count = match census.geometry {
                nodal::GridGeometry::Disk { .. } => {
                    Some(nodal::count_local(&census, p.radius_prime.unwrap_or(f64::INFINITY)))
                }
                nodal::GridGeometry::Torus => None,
            };
            ExperimentResult::NodalCensus { census, local_count }
        }
        ExperimentKind::Cns => {
            let rp = p.radius_prime.expect("resolved");
            let mut estimates = Vec::new();
            for &r in p.radii.as_ref().expect("resolved") {
                estimates.push(
                    nodal::estimate_cns(
                        config.seed,
                        p.samples.expect("resolved"),
                        r,
                        rp,
                        p.cells_per_unit.expect("resolved"),
                    )
                    .context("c_NS estimate")?,
                );
            }
            let toral = match &field {
                Some(Field::Toral(f)) => {
                    let grid = p.grid.expect("resolved");
                    Some(ToralScaling {
                        energy: f.energy(),
                        grid,
                        radius: rp,
                        value: nodal::toral_nodal_scaling(f, rp, grid).context("toral nodal scaling")?,
                    })
                }
                Some(_) => {
                    return Err(CliError::Config(
                        "cns compares against a toral eigenfunction only".into(),
                    ))
                }
                None => None,
            };
            ExperimentResult::Cns { estimates, toral }
        }
        ExperimentKind::QueCheck => {
            let f = toral(field.as_ref().expect("validated"), "que-check")?;
            let family = ergodicity::dyadic_family(p.dyadic_levels.expect("resolved"));
            let masses: Vec<MassReport> = family.iter().map(|r| ergodicity::mass_in_region(&f, *r)).collect();
            let max_mass_deviation = masses.iter().map(|m| m.deviation).fold(0.0, f64::max);
            let sectors =
                ergodicity::momentum_equidistribution(&f, p.sectors.expect("resolved")).context("momentum sectors")?;
            let sup_grid = *config.params.grid.get_or_insert(ergodicity::default_scan_grid(&f));
            let sup_norm = ergodicity::sup_norm_scan(&f, sup_grid).context("sup-norm scan")?;
            ExperimentResult::QueCheck {
                energy: f.energy(),
                masses,
                max_mass_deviation,
                sectors,
                sup_norm,
                sup_grid,
            }
        }
        ExperimentKind::Sandwich => {
            let (r, rp) = (p.r.expect("resolved"), p.r_prime.expect("resolved"));
            let record = |sample: usize, res: Result<SandwichReport, WaveError>| -> Result<SandwichRow, CliError> {
                match res {
                    Ok(report) => Ok(SandwichRow {
                        sample,
                        report: Some(report),
                        violation: None,
                    }),
                    Err(WaveError::Invariant(msg)) => Ok(SandwichRow {
                        sample,
                        report: None,
                        violation: Some(msg),
                    }),
                    Err(e) => Err(CliError::Wave {
                        context: "sandwich".into(),
                        source: e,
                    }),
                }
            };
            let rows = match &field {
                Some(Field::Toral(f)) => {
                    let h = f.scale();
                    vec![record(
                        0,
                        nodal::sandwich_check(f, r * h, rp * h, p.grid.expect("resolved")),
                    )?]
                }
                Some(Field::Berry(f)) => {
                    vec![record(
                        0,
                        nodal::sandwich_check_berry(
                            f,
                            p.omega_radius.expect("resolved"),
                            r,
                            rp,
                            p.cells_per_unit.expect("resolved"),
                        ),
                    )?]
                }
                Some(Field::BerrySamples { .. }) | None => {
                    let omega = p.omega_radius.expect("resolved");
                    let n = n_trunc_of(&field).unwrap_or(truncation_for_radius(omega));
                    let cells = p.cells_per_unit.expect("resolved");
                    let mut rows = Vec::new();
                    for i in 0..p.samples.expect("resolved") {
                        let f =
                            BerryField::sample(n, &mut rng::stream(config.seed, i as u64)).context("Berry sample")?;
                        rows.push(record(i, nodal::sandwich_check_berry(&f, omega, r, rp, cells))?);
                    }
                    rows
                }
            };
            let violations = rows.iter().filter(|r| r.violation.is_some()).count();
            checks.push(Check::new("sandwich", config.expect.sandwich, violations == 0));
            ExperimentResult::Sandwich { rows, violations }
        }
    };
    let exit_code = if checks.iter().all(|c| c.accepted) { 0 } else { 2 };
    Ok(RunOutput {
        report: Report {
            schema_version: crate::config::SCHEMA_VERSION,
            tool: ToolInfo {
                name: "wavelab".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                core_version: wavelab::VERSION.into(),
            },
            experiment: config.experiment,
            config,
            checks,
            exit_code,
            result,
        },
        extra,
    })
}

fn n_trunc_of(field: &Option<Field>) -> Option<usize> {
    match field {
        Some(Field::BerrySamples { n_trunc }) => *n_trunc,
        _ => None,
    }
}

/// Resolves, executes and writes `report.json` plus every table into the
/// output directory. Returns the exit code and written paths.
pub fn run(config: &ExperimentConfig) -> Result<(i32, Vec<PathBuf>), CliError> {
    let resolved = config.resolve()?;
    let out = execute(&resolved)?;
    let dir = &resolved.output.dir;
    let paths = write_outputs(&out, dir)?;
    Ok((out.report.exit_code, paths))
}

pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    let report_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(&out.report).map_err(|e| CliError::io(&report_path, e))?;
    std::fs::write(&report_path, json + "\n").map_err(|e| CliError::io(&report_path, e))?;
    paths.push(report_path);
    for table in emit_plot_data(&out.report)?.iter().chain(&out.extra) {
        let path = dir.join(format!("{}.csv", table.name));
        std::fs::write(&path, &table.csv).map_err(|e| CliError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
