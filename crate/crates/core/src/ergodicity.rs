//! Position and momentum equidistribution of toral eigenfunctions, and the
//! sup-norm growth check.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::fields::ToralEigenfunction;
use crate::lattice::point_angle;

/// Axis-aligned rectangle `[min, max]` on the torus; widths at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        for a in 0..2 {
            let w = max[a] - min[a];
            if !(0.0..=1.0).contains(&w) || !min[a].is_finite() {
                return Err(WaveError::Domain(format!(
                    "rectangle side [{}, {}] invalid on the torus",
                    min[a], max[a]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn unit() -> Self {
        Self {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub region: Rect,
    /// `int_U |f|^2`.
    pub mass: f64,
    /// `Vol(U) ||f||^2`.
    pub target: f64,
    /// `|mass - target| / ||f||^2`.
    pub deviation: f64,
}

/// `int_a^b e^{2 i pi k x} dx`.
fn exp_integral(k: i64, a: f64, b: f64) -> Complex64 {
    if k == 0 {
        return Complex64::new(b - a, 0.0);
    }
    let w = TAU * k as f64;
    let phase = |x: f64| Complex64::from_polar(1.0, w * x);
    (phase(b) - phase(a)) / Complex64::new(0.0, w)
}

/// `int_U |f|^2` in closed form: `sum a_xi conj(a_eta) int_U e^{2 i pi x.(xi - eta)}`.
pub fn mass_in_region(f: &ToralEigenfunction, region: Rect) -> MassReport {
    let pts = f.shell().points();
    let a = f.coeffs();
    let mut mass = Complex64::new(0.0, 0.0);
    for (p, ap) in pts.iter().zip(a) {
        for (q, aq) in pts.iter().zip(a) {
            let ix = exp_integral(p[0] - q[0], region.min[0], region.max[0]);
            let iy = exp_integral(p[1] - q[1], region.min[1], region.max[1]);
            mass += ap * aq.conj() * ix * iy;
        }
    }
    let norm = f.norm_sqr();
    let target = region.area() * norm;
    MassReport {
        region,
        mass: mass.re,
        target,
        deviation: (mass.re - target).abs() / norm,
    }
}

/// Dyadic squares of side `2^-l` for `l = 1..=levels`.
pub fn dyadic_family(levels: u32) -> Vec<Rect> {
    let mut out = Vec::new();
    for l in 1..=levels {
        let n = 1usize << l;
        let s = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                out.push(Rect {
                    min: [i as f64 * s, j as f64 * s],
                    max: [(i + 1) as f64 * s, (j + 1) as f64 * s],
                });
            }
        }
    }
    out
}

/// Largest deviation of [`mass_in_region`] over a family of rectangles.
pub fn max_mass_deviation(f: &ToralEigenfunction, family: &[Rect]) -> f64 {
    family
        .iter()
        .map(|r| mass_in_region(f, *r).deviation)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorMasses {
    /// Mass of `[2 pi k / n, 2 pi (k+1) / n)`.
    pub masses: Vec<f64>,
    pub max_deviation: f64,
}

/// Normalized `|a_xi|^2` summed over equal angular arcs starting at angle 0.
pub fn momentum_equidistribution(f: &ToralEigenfunction, sectors: usize) -> Result<SectorMasses> {
    if sectors == 0 {
        return Err(WaveError::Precondition("at least one sector is required".into()));
    }
    let mut masses = vec![0.0; sectors];
    let total = f.norm_sqr();
    for (p, a) in f.shell().points().iter().zip(f.coeffs()) {
        let t = point_angle(p).rem_euclid(TAU);
        let k = ((t / TAU * sectors as f64).floor() as usize).min(sectors - 1);
        masses[k] += a.norm_sqr() / total;
    }
    let uniform = 1.0 / sectors as f64;
    let max_deviation = masses.iter().map(|m| (m - uniform).abs()).fold(0.0, f64::max);
    Ok(SectorMasses { masses, max_deviation })
}

/// `max |f|` over the `m x m` grid; `m = 0` picks four times the Nyquist size.
pub fn sup_norm_scan(f: &ToralEigenfunction, m: usize) -> Result<f64> {
    let m = if m == 0 { default_scan_grid(f) } else { m };
    Ok(f.grid(m)?.iter().fold(0.0, |a: f64, v| a.max(v.abs())))
}

pub fn default_scan_grid(f: &ToralEigenfunction) -> usize {
    (8.0 * (f.energy() as f64).sqrt()).ceil() as usize + 1
}

/// Mean of `|f|^2` over the grid, used as a quadrature oracle.
pub fn grid_mean_square(f: &ToralEigenfunction, m: usize) -> Result<f64> {
    let g = f.grid(m)?;
    Ok(g.iter().map(|v| v * v).sum::<f64>() / g.len() as f64)
}
