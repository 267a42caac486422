//! Rescaled windows of a field and their local Fourier coefficients.
//!
//! A window of `phi` at `x0` and scale `h` is `y -> phi(x0 + h y)`, tapered
//! by a smooth cutoff near a boundary. Any solution of `-Delta u = u` expands
//! as `u(r, t) = sum_m b_m J_m(r) e^{i m t}`, and
//! `J_m(r0) b_m = (1/2pi) int u(r0, t) e^{-i m t} dt` for every `r0 > 0`.
//! The vector `beta_N = (b_-N, ..., b_N)` is the summary used for all
//! comparisons between laws of windows.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j_orders;
use crate::error::{Result, WaveError};
use crate::fields::{BerryField, ComplexField, ScalarField};
use crate::rng::{self, WaveRng};

/// Radii tried for every coefficient; the one maximizing `|J_m|` is used.
pub const CANDIDATE_RADII: [f64; 6] = [1.0, 2.0, 3.0, 5.0, 8.0, 12.0];

/// Coefficients whose best `|J_m(r0)|` falls below this are refused.
pub const CONDITIONING_THRESHOLD: f64 = 0.05;

/// Angular quadrature size for coefficients up to order `n`.
pub fn quadrature_size(n: usize) -> usize {
    256.max(8 * n).next_power_of_two()
}

/// `chi(t)`: 1 on `[0, 1/4]`, 0 on `[1, inf)`, smooth and decreasing between.
pub fn smooth_cutoff(t: f64) -> f64 {
    if t <= 0.25 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let g = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    let s = (t - 0.25) / 0.75;
    let a = g(1.0 - s);
    a / (a + g(s))
}

/// Where windows live.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// Periodic on `[0,1)^2`; no cutoff.
    Torus,
    /// The whole plane; no cutoff, but the field may have a finite
    /// admissible radius.
    Free,
    /// Planar domain; the window is tapered by `chi(h|y| / d(x0, boundary))`.
    Planar { boundary_distance: f64 },
}

/// The rescaled window `y -> phi(x0 + h y) chi(...)` as a field in its own right.
pub struct Window<'a, F: ?Sized> {
    pub field: &'a F,
    pub center: [f64; 2],
    pub scale: f64,
    pub geometry: Geometry,
}

impl<'a, F: ScalarField + ?Sized> Window<'a, F> {
    pub fn new(field: &'a F, center: [f64; 2], scale: f64, geometry: Geometry) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(WaveError::Domain(format!("window scale {scale} must be positive")));
        }
        let center = match geometry {
            Geometry::Torus => [center[0].rem_euclid(1.0), center[1].rem_euclid(1.0)],
            Geometry::Planar { boundary_distance } if !(boundary_distance > 0.0) => {
                return Err(WaveError::Domain(format!(
                    "boundary distance {boundary_distance} must be positive"
                )))
            }
            _ => center,
        };
        Ok(Self {
            field,
            center,
            scale,
            geometry,
        })
    }

    fn taper(&self, radius: f64) -> f64 {
        match self.geometry {
            Geometry::Planar { boundary_distance } => smooth_cutoff(self.scale * radius / boundary_distance),
            _ => 1.0,
        }
    }
}

impl<F: ScalarField + ?Sized> ScalarField for Window<'_, F> {
    fn value(&self, y: [f64; 2]) -> f64 {
        let p = [self.center[0] + self.scale * y[0], self.center[1] + self.scale * y[1]];
        self.field.value(p) * self.taper(y[0].hypot(y[1]))
    }
}

/// Rings `radii[j]` (increasing, positive) times `q` equispaced angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub radii: Vec<f64>,
    pub q: usize,
}

impl PolarGrid {
    pub fn new(radii: Vec<f64>, q: usize) -> Result<Self> {
        if !q.is_power_of_two() || q < 4 {
            return Err(WaveError::Precondition(format!(
                "angular size {q} must be a power of two >= 4"
            )));
        }
        if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WaveError::Precondition("radii must be positive and increasing".into()));
        }
        Ok(Self { radii, q })
    }

    /// The candidate rings, with quadrature for coefficients up to `n`.
    pub fn coefficient_rings(n: usize) -> Self {
        Self {
            radii: CANDIDATE_RADII.to_vec(),
            q: quadrature_size(n),
        }
    }

    /// Rings at `dr, 2 dr, ...` up to and including `r_max`.
    pub fn uniform(r_max: f64, dr: f64, q: usize) -> Result<Self> {
        let count = (r_max / dr + 1e-9).floor() as usize;
        Self::new((1..=count).map(|k| k as f64 * dr).collect(), q)
    }

    pub fn outer_radius(&self) -> f64 {
        *self.radii.last().expect("non-empty")
    }

    pub fn angle(&self, j: usize) -> f64 {
        TAU * j as f64 / self.q as f64
    }

    pub fn point(&self, ring: usize, j: usize) -> [f64; 2] {
        let (s, c) = self.angle(j).sin_cos();
        [self.radii[ring] * c, self.radii[ring] * s]
    }

    fn ring_of(&self, r: f64) -> Option<usize> {
        self.radii.iter().position(|x| (x - r).abs() < 1e-12)
    }
}

/// Samples of a window on a polar grid, plus the value at the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPatch {
    pub center: [f64; 2],
    pub scale: f64,
    pub grid: PolarGrid,
    pub origin: Complex64,
    /// Ring-major: `values[ring * q + j]`.
    pub values: Vec<Complex64>,
    pub real: bool,
    pub cutoff_applied: bool,
}

impl LocalPatch {
    pub fn ring(&self, ring: usize) -> &[Complex64] {
        &self.values[ring * self.grid.q..(ring + 1) * self.grid.q]
    }

    pub fn radius(&self) -> f64 {
        self.grid.outer_radius()
    }
}

fn check_admissible(admissible: Option<f64>, x0: [f64; 2], h: f64, grid: &PolarGrid, geometry: Geometry) -> Result<()> {
    if let (Geometry::Free, Some(max)) = (geometry, admissible) {
        let reach = x0[0].hypot(x0[1]) + h * grid.outer_radius();
        if reach > max + 1e-12 {
            return Err(WaveError::Truncation {
                radius: reach,
                max_radius: max,
                n_trunc: 0,
            });
        }
    }
    Ok(())
}

/// Samples the window of a real field on `grid`.
pub fn rescale<F: ScalarField + ?Sized>(
    field: &F,
    x0: [f64; 2],
    h: f64,
    grid: PolarGrid,
    geometry: Geometry,
) -> Result<LocalPatch> {
    check_admissible(field.admissible_radius(), x0, h, &grid, geometry)?;
    let window = Window::new(field, x0, h, geometry)?;
    let mut values = Vec::with_capacity(grid.radii.len() * grid.q);
    for &r in &grid.radii {
        let taper = window.taper(r);
        if taper == 0.0 {
            values.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), grid.q));
            continue;
        }
        values.extend(
            field
                .ring_values(window.center, h, r, grid.q)
                .into_iter()
                .map(|v| Complex64::new(v * taper, 0.0)),
        );
    }
    Ok(LocalPatch {
        center: window.center,
        scale: h,
        origin: Complex64::new(field.value(window.center), 0.0),
        grid,
        values,
        real: true,
        cutoff_applied: matches!(geometry, Geometry::Planar { .. }),
    })
}

/// Samples the window of a complex field (no cutoff support needed).
pub fn rescale_complex<F: ComplexField + ?Sized>(
    field: &F,
    x0: [f64; 2],
    h: f64,
    grid: PolarGrid,
) -> Result<LocalPatch> {
    if !(h > 0.0) {
        return Err(WaveError::Domain(format!("window scale {h} must be positive")));
    }
    let mut values = Vec::with_capacity(grid.radii.len() * grid.q);
    for ring in 0..grid.radii.len() {
        for j in 0..grid.q {
            let y = grid.point(ring, j);
            values.push(field.complex_value([x0[0] + h * y[0], x0[1] + h * y[1]]));
        }
    }
    Ok(LocalPatch {
        center: x0,
        scale: h,
        origin: field.complex_value(x0),
        grid,
        values,
        real: false,
        cutoff_applied: false,
    })
}

/// `beta_N = (b_-N, ..., b_N)` with the radius used for each coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCoefficients {
    pub n: usize,
    pub b: Vec<Complex64>,
    pub radii_used: Vec<f64>,
}

impl LocalCoefficients {
    pub fn get(&self, m: i64) -> Complex64 {
        self.b[(m + self.n as i64) as usize]
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.b
            .iter()
            .zip(&other.b)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn signed_bessel(table: &[f64], m: i64) -> f64 {
    let v = table[m.unsigned_abs() as usize];
    if m < 0 && m % 2 != 0 {
        -v
    } else {
        v
    }
}

fn ring_spectrum(patch: &LocalPatch, ring: usize) -> Vec<Complex64> {
    let mut buf = patch.ring(ring).to_vec();
    FftPlanner::new().plan_fft_forward(patch.grid.q).process(&mut buf);
    let inv = 1.0 / patch.grid.q as f64;
    buf.iter_mut().for_each(|z| *z *= inv);
    buf
}

/// `b_m` from the angular integral on ring `ring` alone (no conditioning
/// check).
pub fn local_coeff_at(patch: &LocalPatch, m: i64, ring: usize) -> Complex64 {
    let r = patch.grid.radii[ring];
    let q = patch.grid.q as i64;
    let spec = ring_spectrum(patch, ring);
    let table = bessel_j_orders(m.unsigned_abs() as usize, r);
    spec[m.rem_euclid(q) as usize] / signed_bessel(&table, m)
}

/// Local Fourier coefficients `b_-N..=b_N` of a patch.
pub fn local_coeffs(patch: &LocalPatch, n: usize) -> Result<LocalCoefficients> {
    let q = patch.grid.q;
    if q < 8 * n {
        return Err(WaveError::Precondition(format!(
            "angular size {q} below 8N = {}",
            8 * n
        )));
    }
    let mut rings = Vec::with_capacity(CANDIDATE_RADII.len());
    for r in CANDIDATE_RADII {
        let ring = patch
            .grid
            .ring_of(r)
            .ok_or_else(|| WaveError::Precondition(format!("patch grid lacks candidate radius {r}")))?;
        rings.push((r, ring, bessel_j_orders(n, r)));
    }
    let mut spectra: Vec<Option<Vec<Complex64>>> = vec![None; rings.len()];
    let nn = n as i64;
    let mut b = Vec::with_capacity(2 * n + 1);
    let mut radii_used = Vec::with_capacity(2 * n + 1);
    for m in -nn..=nn {
        let (best, jm) = rings
            .iter()
            .enumerate()
            .map(|(i, (_, _, t))| (i, signed_bessel(t, m)))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("candidates");
        if jm.abs() < CONDITIONING_THRESHOLD {
            return Err(WaveError::Conditioning {
                m: m as i32,
                best: jm.abs(),
            });
        }
        let spec = spectra[best].get_or_insert_with(|| ring_spectrum(patch, rings[best].1));
        b.push(spec[m.rem_euclid(q as i64) as usize] / jm);
        radii_used.push(rings[best].0);
    }
    let coeffs = LocalCoefficients { n, b, radii_used };
    if patch.real {
        for m in 1..=nn {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let (neg, pos) = (coeffs.get(-m), coeffs.get(m));
            if (neg - sign * pos.conj()).norm() > 1e-6 * pos.norm().max(1.0) {
                return Err(WaveError::Invariant(format!(
                    "parity b_-m = (-1)^m conj(b_m) fails at m={m}"
                )));
            }
        }
    }
    Ok(coeffs)
}

/// Sampling region for window centres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Region {
    Rect { min: [f64; 2], max: [f64; 2] },
    Disk { center: [f64; 2], radius: f64 },
}

impl Region {
    pub fn unit_torus() -> Self {
        Region::Rect {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Rect { min, max } => (max[0] - min[0]).max(0.0) * (max[1] - min[1]).max(0.0),
            Region::Disk { radius, .. } => std::f64::consts::PI * radius.max(0.0).powi(2),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        match *self {
            Region::Rect { min, max } => p[0] >= min[0] && p[0] < max[0] && p[1] >= min[1] && p[1] < max[1],
            Region::Disk { center, radius } => (p[0] - center[0]).hypot(p[1] - center[1]) < radius,
        }
    }

    /// Uniform point; rejection from the bounding box for disks.
    pub fn sample(&self, rng: &mut WaveRng) -> [f64; 2] {
        use rand::Rng;
        match *self {
            Region::Rect { min, max } => [rng.random_range(min[0]..max[0]), rng.random_range(min[1]..max[1])],
            Region::Disk { center, radius } => loop {
                let p = [
                    center[0] + radius * rng.random_range(-1.0..1.0),
                    center[1] + radius * rng.random_range(-1.0..1.0),
                ];
                if self.contains(p) {
                    return p;
                }
            },
        }
    }
}

/// Monte Carlo atoms of the local measure, pushed forward through `beta_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLocalMeasure {
    pub n: usize,
    pub scale: f64,
    pub region: Option<Region>,
    pub descriptor: String,
    pub seed: Option<u64>,
    pub centers: Vec<[f64; 2]>,
    pub samples: Vec<LocalCoefficients>,
}

impl EmpiricalLocalMeasure {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `b_m` across all samples.
    pub fn coefficient(&self, m: i64) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.get(m)).collect()
    }

    /// Coefficients of independent Berry samples, each read at the origin.
    /// Sample `i` is drawn from stream `i` of `seed`.
    pub fn from_berry_samples(count: usize, n: usize, seed: u64) -> Result<Self> {
        let n_trunc = crate::fields::truncation_for_radius(CANDIDATE_RADII[CANDIDATE_RADII.len() - 1]);
        let samples = par_map(count, |i| {
            let f = BerryField::sample(n_trunc, &mut rng::stream(seed, i as u64))?;
            let patch = rescale(&f, [0.0, 0.0], 1.0, PolarGrid::coefficient_rings(n), Geometry::Free)?;
            local_coeffs(&patch, n)
        })?;
        Ok(Self {
            n,
            scale: 1.0,
            region: None,
            descriptor: format!("berry samples (N_trunc={n_trunc})"),
            seed: Some(seed),
            centers: vec![[0.0, 0.0]; count],
            samples,
        })
    }
}

pub(crate) fn par_map<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Options for [`empirical_local_measure`].
#[derive(Debug, Clone, Copy)]
pub struct WindowSampling {
    pub region: Region,
    pub windows: usize,
    pub n: usize,
    pub seed: u64,
    pub geometry: Geometry,
}

/// Draws `windows` centres uniformly in the region (window `i` from stream
/// `i` of the seed) and computes `beta_N` of each window.
pub fn empirical_local_measure<F: ScalarField + ?Sized>(
    field: &F,
    h: f64,
    sampling: WindowSampling,
    descriptor: impl Into<String>,
) -> Result<EmpiricalLocalMeasure> {
    let WindowSampling {
        region,
        windows,
        n,
        seed,
        geometry,
    } = sampling;
    if !(region.area() > 0.0) {
        return Err(WaveError::Domain(format!("sampling region {region:?} has no area")));
    }
    if windows == 0 {
        return Err(WaveError::Precondition("at least one window is required".into()));
    }
    let results = par_map(windows, |i| {
        let x0 = region.sample(&mut rng::stream(seed, i as u64));
        let patch = rescale(field, x0, h, PolarGrid::coefficient_rings(n), geometry)?;
        Ok((x0, local_coeffs(&patch, n)?))
    })?;
    let (centers, samples) = results.into_iter().unzip();
    Ok(EmpiricalLocalMeasure {
        n,
        scale: h,
        region: Some(region),
        descriptor: descriptor.into(),
        seed: Some(seed),
        centers,
        samples,
    })
}

/// Result of [`d0_proximity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proximity {
    /// `sup { r > 0 : sup_{|y| < r} |f - g| < 1/r }`, possibly infinite.
    pub rho: f64,
    /// `1 / rho`, zero when the patches agree.
    pub distance: f64,
    /// The condition still held at the edge of the patch; `rho` extrapolates
    /// the patch maximum outward.
    pub truncated: bool,
}

/// Proximity of two patches sampled on the same grid.
///
/// The sup over `|y| < r` is piecewise constant between rings, so the
/// supremum of admissible `r` is found interval by interval.
pub fn d0_proximity(f: &LocalPatch, g: &LocalPatch) -> Result<Proximity> {
    if f.grid != g.grid {
        return Err(WaveError::Dimension {
            expected: f.values.len(),
            got: g.values.len(),
        });
    }
    let q = f.grid.q;
    let mut running = (f.origin - g.origin).norm();
    let mut rho = 0.0_f64;
    let mut inner = 0.0;
    let radii = &f.grid.radii;
    for (ring, &outer) in radii.iter().enumerate() {
        // on (inner, outer] the sup over the open ball sees rings < `ring`
        if running == 0.0 || 1.0 / running > inner {
            let reach = if running == 0.0 {
                outer
            } else {
                (1.0 / running).min(outer)
            };
            rho = rho.max(reach);
        }
        let ring_max = (0..q)
            .map(|j| (f.values[ring * q + j] - g.values[ring * q + j]).norm())
            .fold(0.0, f64::max);
        running = running.max(ring_max);
        inner = outer;
    }
    let r_out = f.grid.outer_radius();
    let mut truncated = false;
    if running == 0.0 {
        rho = f64::INFINITY;
        truncated = true;
    } else if 1.0 / running > r_out {
        rho = 1.0 / running;
        truncated = true;
    }
    let distance = if rho.is_infinite() { 0.0 } else { 1.0 / rho };
    Ok(Proximity {
        rho,
        distance,
        truncated,
    })
}
