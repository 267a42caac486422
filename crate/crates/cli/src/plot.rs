//! Tidy CSV tables derived from a report, one row per observation.

use serde::Serialize;
use wavelab::randstats::KsResult;

use crate::error::CliError;
use crate::runner::{ExperimentResult, Report};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

impl Table {
    pub fn from_rows<S: AsRef<str>>(name: &str, header: &[S], rows: &[Vec<String>]) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::io(format!("{name}.csv"), e);
        w.write_record(header.iter().map(|h| h.as_ref())).map_err(fail)?;
        for row in rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(format!("{name}.csv"), e))?;
        Ok(Self {
            name: name.to_string(),
            csv: String::from_utf8(bytes).expect("csv output is utf-8"),
        })
    }
}

fn s(v: impl ToString) -> String {
    v.to_string()
}

fn ks_row(m: i64, test: &str, ks: &KsResult) -> Vec<String> {
    vec![s(m), s(test), s(ks.statistic), s(ks.p_value)]
}

/// Tables for plotting, in a fixed order with fixed columns.
pub fn emit_plot_data(report: &Report) -> Result<Vec<Table>, CliError> {
    let mut tables = Vec::new();
    match &report.result {
        ExperimentResult::ShellCensus { points, condition, .. } => {
            let rows: Vec<_> = points
                .iter()
                .map(|p| vec![s(p[0]), s(p[1]), s(wavelab::lattice::point_angle(p))])
                .collect();
            tables.push(Table::from_rows("shell", &["x", "y", "angle"], &rows)?);
            let rows: Vec<_> = condition
                .entries
                .iter()
                .map(|e| vec![s(e.len), s(e.count), s(e.bound), s(e.holds)])
                .collect();
            tables.push(Table::from_rows(
                "condition",
                &["len", "count", "bound", "holds"],
                &rows,
            )?);
        }
        ExperimentResult::LocalStats { moments, .. } => {
            let rows: Vec<_> = moments.iter().map(|r| vec![s(r.m), s(r.mean_abs2)]).collect();
            tables.push(Table::from_rows("moments", &["m", "mean_abs2"], &rows)?);
        }
        ExperimentResult::BerryConformance { berry, plane_wave } => {
            let mut rows = Vec::new();
            for e in &berry.entries {
                rows.push(ks_row(e.m, "re", &e.re));
                for (name, ks) in [("im", &e.im), ("abs2", &e.abs2), ("phase", &e.phase)] {
                    if let Some(ks) = ks {
                        rows.push(ks_row(e.m, name, ks));
                    }
                }
            }
            if let Some(pw) = plane_wave {
                rows.push(ks_row(0, "plane-wave-phase", &pw.phase_uniformity));
            }
            tables.push(Table::from_rows(
                "conformance",
                &["m", "test", "statistic", "p_value"],
                &rows,
            )?);
            let nn = berry.correlation.len();
            let mut rows = Vec::with_capacity(nn * nn);
            for (i, row) in berry.correlation.iter().enumerate() {
                for (j, c) in row.iter().enumerate() {
                    rows.push(vec![s(i), s(j), s(c.re), s(c.im), s(c.norm())]);
                }
            }
            tables.push(Table::from_rows("correlation", &["m", "k", "re", "im", "abs"], &rows)?);
        }
        ExperimentResult::NodalCensus { census, .. } => tables.push(Table {
            name: "components".into(),
            csv: census.to_csv(),
        }),
        ExperimentResult::Cns { estimates, toral } => {
            let mut rows: Vec<_> = estimates
                .iter()
                .map(|e| {
                    vec![
                        s("berry"),
                        s(e.radius),
                        s(e.radius_prime),
                        s(e.samples()),
                        s(e.mean),
                        s(e.stderr),
                    ]
                })
                .collect();
            if let Some(t) = toral {
                rows.push(vec![
                    format!("toral-E{}", t.energy),
                    s(t.radius),
                    s(t.radius),
                    s(1),
                    s(t.value),
                    String::new(),
                ]);
            }
            tables.push(Table::from_rows(
                "cns",
                &["source", "radius", "radius_prime", "samples", "estimate", "stderr"],
                &rows,
            )?);
        }
        ExperimentResult::QueCheck {
            masses,
            sectors,
            sup_norm,
            sup_grid,
            energy,
            ..
        } => {
            let rows: Vec<_> = masses
                .iter()
                .map(|m| {
                    vec![
                        s(m.region.min[0]),
                        s(m.region.min[1]),
                        s(m.region.max[0]),
                        s(m.region.max[1]),
                        s(m.mass),
                        s(m.target),
                        s(m.deviation),
                    ]
                })
                .collect();
            tables.push(Table::from_rows(
                "masses",
                &["x0", "y0", "x1", "y1", "mass", "target", "deviation"],
                &rows,
            )?);
            let n = sectors.masses.len() as f64;
            let rows: Vec<_> = sectors
                .masses
                .iter()
                .enumerate()
                .map(|(k, m)| vec![s(k), s(std::f64::consts::TAU * k as f64 / n), s(m)])
                .collect();
            tables.push(Table::from_rows("sectors", &["sector", "start_angle", "mass"], &rows)?);
            tables.push(Table::from_rows(
                "sup_norm",
                &["energy", "grid", "sup_norm"],
                &[vec![s(energy), s(sup_grid), s(sup_norm)]],
            )?);
        }
        ExperimentResult::Sandwich { rows: results, .. } => {
            let rows: Vec<_> = results
                .iter()
                .map(|row| match &row.report {
                    Some(r) => vec![
                        s(row.sample),
                        s(r.count),
                        s(r.lower),
                        s(r.integral),
                        s(r.upper),
                        s(r.slack),
                        s(r.holds),
                    ],
                    None => vec![
                        s(row.sample),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        s(false),
                    ],
                })
                .collect();
            tables.push(Table::from_rows(
                "sandwich",
                &["sample", "count", "lower", "integral", "upper", "slack", "holds"],
                &rows,
            )?);
        }
    }
    let rows: Vec<_> = report
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                format!("{:?}", c.expected).to_lowercase(),
                s(c.passed),
                s(c.accepted),
            ]
        })
        .collect();
    tables.push(Table::from_rows(
        "checks",
        &["check", "expected", "passed", "accepted"],
        &rows,
    )?);
    Ok(tables)
}
