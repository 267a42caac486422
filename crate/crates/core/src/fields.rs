//! The fields under study: toral eigenfunctions on `T^2 = R^2 / Z^2`,
//! samples of the isotropic monochromatic Gaussian (Berry) field, plane
//! waves, and the sector approximation that links toral windows to Gaussian
//! sums.
//!
//! Berry samples are normalized to unit variance at every point, so their
//! covariance is `J_0(|x - x'|)`. (The spherical-integral form of the
//! covariance carries an extra factor `2pi` in two dimensions.) With this
//! scale a window of a unit-norm toral eigenfunction and a Berry sample have
//! the same pointwise second moment.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bessel::fill_bessel_j;
use crate::error::{Result, WaveError};
use crate::lattice::{point_angle, LatticeShell};
use crate::rng;

/// A real field on the plane (or on the torus, read periodically).
pub trait ScalarField: Sync {
    fn value(&self, p: [f64; 2]) -> f64;

    /// Largest `|p|` at which [`ScalarField::value`] is trustworthy.
    fn admissible_radius(&self) -> Option<f64> {
        None
    }

    /// Samples `p = center + scale * r (cos t_j, sin t_j)` for `t_j = 2pi j / q`.
    fn ring_values(&self, center: [f64; 2], scale: f64, radius: f64, q: usize) -> Vec<f64> {
        (0..q)
            .map(|j| {
                let t = TAU * j as f64 / q as f64;
                self.value([
                    center[0] + scale * radius * t.cos(),
                    center[1] + scale * radius * t.sin(),
                ])
            })
            .collect()
    }
}

/// A complex-valued field, used for complex plane waves.
pub trait ComplexField: Sync {
    fn complex_value(&self, p: [f64; 2]) -> Complex64;
}

impl<F: Fn([f64; 2]) -> f64 + Sync> ScalarField for F {
    fn value(&self, p: [f64; 2]) -> f64 {
        self(p)
    }
}

const REALITY_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;

/// `f(x) = sum_xi a_xi e^{2 i pi x . xi}` on a lattice shell, with
/// `a_{-xi} = conj(a_xi)` so that `f` is real and `-Delta f = 4 pi^2 E f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToralEigenfunction {
    shell: LatticeShell,
    coeffs: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EigenRecord {
    #[serde(rename = "E")]
    energy: u64,
    coeffs: Vec<[f64; 2]>,
}

impl ToralEigenfunction {
    /// Coefficients must satisfy the reality pairing and `sum |a|^2 = 1`.
    pub fn new(shell: LatticeShell, coeffs: Vec<Complex64>) -> Result<Self> {
        let f = Self::unnormalized(shell, coeffs)?;
        let norm = f.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(WaveError::Domain(format!(
                "coefficients have squared norm {norm}, expected 1"
            )));
        }
        Ok(f)
    }

    /// Like [`ToralEigenfunction::new`] but without the normalization check.
    pub fn unnormalized(shell: LatticeShell, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != shell.len() {
            return Err(WaveError::Dimension {
                expected: shell.len(),
                got: coeffs.len(),
            });
        }
        if shell.is_empty() {
            return Err(WaveError::Domain(format!("shell E={} is empty", shell.energy())));
        }
        for (i, j) in shell.antipodes().into_iter().enumerate() {
            if (coeffs[j] - coeffs[i].conj()).norm() > REALITY_TOL {
                return Err(WaveError::Domain(format!(
                    "reality pairing fails at xi={:?}",
                    shell.points()[i]
                )));
            }
        }
        Ok(Self { shell, coeffs })
    }

    /// All coefficients equal to `1/sqrt(N_E)`.
    pub fn flat(shell: LatticeShell) -> Result<Self> {
        if shell.is_empty() {
            return Err(WaveError::Domain(format!("shell E={} is empty", shell.energy())));
        }
        let a = Complex64::new(1.0 / (shell.len() as f64).sqrt(), 0.0);
        let n = shell.len();
        Self::new(shell, vec![a; n])
    }

    /// Gaussian coefficients with the reality pairing, normalized.
    pub fn random<R: Rng + ?Sized>(shell: LatticeShell, rng: &mut R) -> Result<Self> {
        if shell.is_empty() {
            return Err(WaveError::Domain(format!("shell E={} is empty", shell.energy())));
        }
        let anti = shell.antipodes();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); shell.len()];
        for i in 0..shell.len() {
            let j = anti[i];
            if i < j {
                coeffs[i] = rng::complex_normal(rng);
                coeffs[j] = coeffs[i].conj();
            }
        }
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in coeffs.iter_mut() {
            *c /= norm;
        }
        Self::new(shell, coeffs)
    }

    /// `cos(2 pi n x_1)`, amplitude one (squared coefficient norm 1/2).
    pub fn plane_wave_pair(n: u64) -> Result<Self> {
        let shell = LatticeShell::enumerate(n * n);
        let coeffs = shell
            .points()
            .iter()
            .map(|p| {
                if p[1] == 0 {
                    Complex64::new(0.5, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::unnormalized(shell, coeffs)
    }

    pub fn shell(&self) -> &LatticeShell {
        &self.shell
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn energy(&self) -> u64 {
        self.shell.energy()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// The weights `|a_xi|^2` of the angular measure.
    pub fn weights(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Semiclassical scale `h = 1 / (2 pi sqrt(E))`; windows `f(x0 + h y)`
    /// solve `-Delta u = u`.
    pub fn scale(&self) -> f64 {
        1.0 / (TAU * (self.energy() as f64).sqrt())
    }

    pub fn eval_complex(&self, x: [f64; 2]) -> Complex64 {
        self.shell
            .points()
            .iter()
            .zip(&self.coeffs)
            .map(|(p, a)| {
                let t = (x[0] * p[0] as f64 + x[1] * p[1] as f64).rem_euclid(1.0);
                a * Complex64::from_polar(1.0, TAU * t)
            })
            .sum()
    }

    /// Pointwise value; the imaginary part of the sum is checked to vanish.
    pub fn eval(&self, x: [f64; 2]) -> Result<f64> {
        let z = self.eval_complex(x);
        let tol = 1e-10 * (self.shell.len() as f64).sqrt();
        if z.im.abs() > tol {
            return Err(WaveError::Invariant(format!("imaginary part {} at {x:?}", z.im)));
        }
        Ok(z.re)
    }

    /// Values on the `m x m` grid `x = (i/m, j/m)`, row-major in `i`, by an
    /// inverse 2D FFT of the coefficient array.
    pub fn grid(&self, m: usize) -> Result<Vec<f64>> {
        let min = 2.0 * (self.energy() as f64).sqrt();
        if (m as f64) <= min {
            return Err(WaveError::Aliasing { grid: m, min });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m];
        let mi = m as i64;
        for (p, a) in self.shell.points().iter().zip(&self.coeffs) {
            let i = p[0].rem_euclid(mi) as usize;
            let j = p[1].rem_euclid(mi) as usize;
            buf[i * m + j] += a;
        }
        inverse_fft_2d(&mut buf, m);
        let tol = 1e-10 * (self.shell.len() as f64).sqrt();
        if let Some(z) = buf.iter().find(|z| z.im.abs() > tol) {
            return Err(WaveError::Invariant(format!("grid imaginary part {}", z.im)));
        }
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&EigenRecord {
            energy: self.energy(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        })
        .expect("eigenfunction serializes")
    }

    /// Parses `{"E": int, "coeffs": [[re, im], ...]}`; coefficients follow the
    /// angular order of the shell. Normalization is not enforced so that
    /// plane-wave pairs can be stored too.
    pub fn from_json(text: &str) -> Result<Self> {
        let rec: EigenRecord =
            serde_json::from_str(text).map_err(|e| WaveError::Domain(format!("bad eigenfunction JSON: {e}")))?;
        let shell = LatticeShell::enumerate(rec.energy);
        let coeffs = rec.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        Self::unnormalized(shell, coeffs)
    }
}

impl ScalarField for ToralEigenfunction {
    fn value(&self, p: [f64; 2]) -> f64 {
        self.eval_complex(p).re
    }
}

/// In-place unnormalized inverse DFT along both axes of a row-major square.
pub(crate) fn inverse_fft_2d(buf: &mut [Complex64], m: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m);
    fft.process(buf);
    transpose(buf, m);
    fft.process(buf);
    transpose(buf, m);
}

fn transpose(buf: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

/// Largest `r` with `r + 12 r^{1/3} + 20 <= n_trunc`.
pub fn admissible_radius(n_trunc: usize) -> f64 {
    let n = n_trunc as f64;
    if n < 20.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0_f64, n);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid + 12.0 * mid.cbrt() + 20.0 <= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest truncation order admissible at radius `r`.
pub fn truncation_for_radius(r: f64) -> usize {
    (r + 12.0 * r.max(0.0).cbrt() + 20.0).ceil() as usize
}

/// A sample of the Berry field,
/// `F(r, t) = sum_{|n| <= N} C_n J_|n|(r) e^{i n t}` with `C_0` real standard
/// Gaussian, `C_n` standard complex Gaussian for `n > 0` and
/// `C_{-n} = conj(C_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BerryField {
    /// `C_0, ..., C_N`; negative modes follow by conjugation.
    modes: Vec<Complex64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BerryRecord {
    #[serde(rename = "N_trunc")]
    n_trunc: usize,
    seed: Option<u64>,
    /// `C_{-N}, ..., C_N`
    modes: Vec<[f64; 2]>,
}

impl BerryField {
    pub fn sample<R: Rng + ?Sized>(n_trunc: usize, rng: &mut R) -> Result<Self> {
        if n_trunc < 1 {
            return Err(WaveError::Precondition("N_trunc must be at least 1".into()));
        }
        let mut modes = Vec::with_capacity(n_trunc + 1);
        modes.push(Complex64::new(rng::normal(rng), 0.0));
        for _ in 1..=n_trunc {
            modes.push(rng::complex_normal(rng));
        }
        Ok(Self { modes, seed: None })
    }

    /// Sample drawn from stream 0 of `seed`; the seed is recorded.
    pub fn sample_seeded(n_trunc: usize, seed: u64) -> Result<Self> {
        let mut f = Self::sample(n_trunc, &mut rng::stream(seed, 0))?;
        f.seed = Some(seed);
        Ok(f)
    }

    /// Field with prescribed `C_0, ..., C_N` (the imaginary part of `C_0` is
    /// discarded).
    pub fn from_modes(modes: &[Complex64]) -> Result<Self> {
        if modes.len() < 2 {
            return Err(WaveError::Precondition("N_trunc must be at least 1".into()));
        }
        let mut modes = modes.to_vec();
        modes[0].im = 0.0;
        Ok(Self { modes, seed: None })
    }

    pub fn n_trunc(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `C_n` for any `|n| <= N`.
    pub fn mode(&self, n: i64) -> Complex64 {
        let c = self.modes[n.unsigned_abs() as usize];
        if n < 0 {
            c.conj()
        } else {
            c
        }
    }

    pub fn max_radius(&self) -> f64 {
        admissible_radius(self.n_trunc())
    }

    /// Value at polar coordinates, refusing radii where the truncated series
    /// is not accurate.
    pub fn eval(&self, r: f64, theta: f64) -> Result<f64> {
        let max = self.max_radius();
        if r > max {
            return Err(WaveError::Truncation {
                radius: r,
                max_radius: max,
                n_trunc: self.n_trunc(),
            });
        }
        Ok(self.eval_unchecked(r, theta))
    }

    fn eval_unchecked(&self, r: f64, theta: f64) -> f64 {
        let mut j = vec![0.0; self.modes.len()];
        fill_bessel_j(r, &mut j);
        let step = Complex64::from_polar(1.0, theta);
        let mut rot = step;
        let mut acc = 0.0;
        for (c, jn) in self.modes.iter().zip(&j).skip(1) {
            acc += (c * rot).re * jn;
            rot *= step;
        }
        self.modes[0].re * j[0] + 2.0 * acc
    }

    pub fn eval_cartesian(&self, p: [f64; 2]) -> Result<f64> {
        self.eval(p[0].hypot(p[1]), p[1].atan2(p[0]))
    }

    pub fn to_json(&self) -> String {
        let n = self.n_trunc() as i64;
        serde_json::to_string(&BerryRecord {
            n_trunc: self.n_trunc(),
            seed: self.seed,
            modes: (-n..=n).map(|k| self.mode(k)).map(|c| [c.re, c.im]).collect(),
        })
        .expect("berry field serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: BerryRecord =
            serde_json::from_str(text).map_err(|e| WaveError::Domain(format!("bad Berry JSON: {e}")))?;
        let n = rec.n_trunc;
        if rec.modes.len() != 2 * n + 1 {
            return Err(WaveError::Dimension {
                expected: 2 * n + 1,
                got: rec.modes.len(),
            });
        }
        let c = |k: i64| {
            Complex64::new(
                rec.modes[(k + n as i64) as usize][0],
                rec.modes[(k + n as i64) as usize][1],
            )
        };
        for k in 0..=n as i64 {
            if (c(-k) - c(k).conj()).norm() > REALITY_TOL {
                return Err(WaveError::Domain(format!("modes break C_(-n) = conj(C_n) at n={k}")));
            }
        }
        let modes: Vec<Complex64> = (0..=n as i64).map(c).collect();
        let mut f = Self::from_modes(&modes)?;
        f.seed = rec.seed;
        Ok(f)
    }
}

impl ScalarField for BerryField {
    fn value(&self, p: [f64; 2]) -> f64 {
        self.eval_unchecked(p[0].hypot(p[1]), p[1].atan2(p[0]))
    }

    fn admissible_radius(&self) -> Option<f64> {
        Some(self.max_radius())
    }

    fn ring_values(&self, center: [f64; 2], scale: f64, radius: f64, q: usize) -> Vec<f64> {
        if center != [0.0, 0.0] {
            return (0..q)
                .map(|j| {
                    let t = TAU * j as f64 / q as f64;
                    self.value([
                        center[0] + scale * radius * t.cos(),
                        center[1] + scale * radius * t.sin(),
                    ])
                })
                .collect();
        }
        let mut j = vec![0.0; self.modes.len()];
        fill_bessel_j(scale * radius, &mut j);
        let weighted: Vec<Complex64> = self.modes.iter().zip(&j).map(|(c, jn)| c * jn).collect();
        (0..q)
            .map(|k| {
                let step = Complex64::from_polar(1.0, TAU * k as f64 / q as f64);
                let mut rot = step;
                let mut acc = 0.0;
                for w in &weighted[1..] {
                    acc += (w * rot).re;
                    rot *= step;
                }
                weighted[0].re + 2.0 * acc
            })
            .collect()
    }
}

/// `cos(x . e(theta0))` and its complex counterpart `e^{i x . e(theta0)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub theta0: f64,
}

impl PlaneWave {
    pub fn new(theta0: f64) -> Self {
        Self { theta0 }
    }

    fn phase(&self, p: [f64; 2]) -> f64 {
        p[0] * self.theta0.cos() + p[1] * self.theta0.sin()
    }
}

impl ScalarField for PlaneWave {
    fn value(&self, p: [f64; 2]) -> f64 {
        self.phase(p).cos()
    }
}

impl ComplexField for PlaneWave {
    fn complex_value(&self, p: [f64; 2]) -> Complex64 {
        Complex64::from_polar(1.0, self.phase(p))
    }
}

/// Sector `k in (-K, K]` whose arc `(pi (k-1)/K, pi k/K]` contains `angle`
/// (taken in `(-pi, pi]`).
pub fn sector_index(angle: f64, k_half: usize) -> i64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    let mut x = a / PI * k_half as f64;
    let rounded = x.round();
    if (x - rounded).abs() < 1e-9 {
        x = rounded;
    }
    let k = x.ceil() as i64;
    // angle -pi is identified with pi
    if k <= -(k_half as i64) {
        k + 2 * k_half as i64
    } else {
        k
    }
}

/// Direction at the middle of sector `k`.
pub fn sector_center(k: i64, k_half: usize) -> f64 {
    PI * (k as f64 - 0.5) / k_half as f64
}

fn sector_range(k_half: usize) -> impl Iterator<Item = i64> {
    let kk = k_half as i64;
    -kk + 1..=kk
}

/// `psi_{x,E}(y) = (2K+1)^{-1/2} sum_k b_k(x) e^{i zeta_k . y}` where every
/// shell direction has been snapped to the centre of its sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorApproximation {
    k_half: usize,
    /// `b_k(x)` for `k = -K+1, ..., K`.
    pub sector_coeffs: Vec<Complex64>,
    /// Unit vectors `zeta_k`, same indexing.
    pub centers: Vec<[f64; 2]>,
}

pub fn sector_approximation(f: &ToralEigenfunction, k_half: usize, x: [f64; 2]) -> Result<SectorApproximation> {
    if k_half < 1 {
        return Err(WaveError::Precondition("K must be at least 1".into()));
    }
    let scale = ((2 * k_half + 1) as f64).sqrt();
    let mut sector_coeffs = vec![Complex64::new(0.0, 0.0); 2 * k_half];
    for (p, a) in f.shell().points().iter().zip(f.coeffs()) {
        let k = sector_index(point_angle(p), k_half);
        let t = (x[0] * p[0] as f64 + x[1] * p[1] as f64).rem_euclid(1.0);
        sector_coeffs[(k + k_half as i64 - 1) as usize] += scale * a * Complex64::from_polar(1.0, TAU * t);
    }
    let centers = sector_range(k_half)
        .map(|k| {
            let t = sector_center(k, k_half);
            [t.cos(), t.sin()]
        })
        .collect();
    Ok(SectorApproximation {
        k_half,
        sector_coeffs,
        centers,
    })
}

fn sector_sum(coeffs: &[Complex64], centers: &[[f64; 2]], k_half: usize, y: [f64; 2]) -> Complex64 {
    let s: Complex64 = coeffs
        .iter()
        .zip(centers)
        .map(|(c, z)| c * Complex64::from_polar(1.0, z[0] * y[0] + z[1] * y[1]))
        .sum();
    s / ((2 * k_half + 1) as f64).sqrt()
}

impl SectorApproximation {
    pub fn k_half(&self) -> usize {
        self.k_half
    }

    pub fn eval_complex(&self, y: [f64; 2]) -> Complex64 {
        sector_sum(&self.sector_coeffs, &self.centers, self.k_half, y)
    }
}

impl ScalarField for SectorApproximation {
    fn value(&self, y: [f64; 2]) -> f64 {
        self.eval_complex(y).re
    }
}

/// `Psi_K(y) = (2K+1)^{-1/2} sum_k c_k e^{i zeta_k . y}` with `c_1..c_K` iid
/// `N_C(0,1)` and `c_k = conj(c_{k+K})` for `k <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizedSectorField {
    k_half: usize,
    /// `c_k` for `k = -K+1, ..., K`.
    pub gaussians: Vec<Complex64>,
    pub centers: Vec<[f64; 2]>,
    pub seed: Option<u64>,
}

impl RandomizedSectorField {
    pub fn sample<R: Rng + ?Sized>(k_half: usize, rng: &mut R) -> Result<Self> {
        if k_half < 1 {
            return Err(WaveError::Precondition("K must be at least 1".into()));
        }
        let mut gaussians = vec![Complex64::new(0.0, 0.0); 2 * k_half];
        for k in 1..=k_half {
            let c = rng::complex_normal(rng);
            gaussians[k + k_half - 1] = c;
            gaussians[k - 1] = c.conj();
        }
        let centers = sector_range(k_half)
            .map(|k| {
                let t = sector_center(k, k_half);
                [t.cos(), t.sin()]
            })
            .collect();
        Ok(Self {
            k_half,
            gaussians,
            centers,
            seed: None,
        })
    }

    pub fn k_half(&self) -> usize {
        self.k_half
    }

    pub fn eval_complex(&self, y: [f64; 2]) -> Complex64 {
        sector_sum(&self.gaussians, &self.centers, self.k_half, y)
    }
}

impl ScalarField for RandomizedSectorField {
    fn value(&self, y: [f64; 2]) -> f64 {
        self.eval_complex(y).re
    }
}
