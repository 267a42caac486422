//! Goodness-of-fit of empirical local measures against the Gaussian
//! (Berry) prediction and against the plane-wave limit.
//!
//! Under the unit second moment convention the Berry coefficients are
//! independent, `b_0 ~ N(0,1)` real and `b_m ~ N_C(0,1)` for `m >= 1`, so
//! `Re b_m, Im b_m ~ N(0,1/2)`, `|b_m|^2 ~ Exp(1)` and `arg b_m` is uniform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Exp, Normal};

use crate::error::{Result, WaveError};
use crate::fields::{sector_approximation, sector_center, ToralEigenfunction};
use crate::localscope::{local_coeffs, par_map, rescale, EmpiricalLocalMeasure, Geometry, PolarGrid, Region};
use crate::rng;

/// Significance level for every pass/fail aggregate.
pub const ALPHA: f64 = 0.01;

const MIN_KS_SAMPLES: usize = 8;
const MIN_CONFORMANCE_SAMPLES: usize = 500;

/// Continuous reference law for one-sample tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum Reference {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Reference {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Reference::Normal { mean, sd } => Normal::new(mean, sd).expect("valid normal").cdf(x),
            Reference::Exponential { rate } => Exp::new(rate).expect("valid rate").cdf(x),
            Reference::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Reference::Normal { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Reference::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Reference::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && hi > lo,
        };
        if ok {
            Ok(())
        } else {
            Err(WaveError::Domain(format!("invalid reference law {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// `P(K > lambda)` for the Kolmogorov distribution, series cut at `1e-10`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let tol = 1e-10;
    let p = if lambda < 1.18 {
        // theta-function form, fast for small lambda
        let mut sum = 0.0;
        let c = PI * PI / (8.0 * lambda * lambda);
        for k in 1.. {
            let t = (-((2 * k - 1) as f64).powi(2) * c).exp();
            sum += t;
            if t < tol {
                break;
            }
        }
        1.0 - (2.0 * PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        for k in 1.. {
            let t = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
            sum += if k % 2 == 1 { t } else { -t };
            if t < tol {
                break;
            }
        }
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(WaveError::Domain("samples contain NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Exact one-sample Kolmogorov-Smirnov statistic with asymptotic p-value.
pub fn ks_statistic(samples: &[f64], reference: Reference) -> Result<KsResult> {
    if samples.len() < MIN_KS_SAMPLES {
        return Err(WaveError::Precondition(format!(
            "KS test needs at least {MIN_KS_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    reference.validate()?;
    let x = sorted(samples)?;
    let n = x.len() as f64;
    let d = x.iter().enumerate().fold(0.0_f64, |d, (i, &xi)| {
        let f = reference.cdf(xi);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    });
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(n.sqrt() * d),
    })
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.len() < MIN_KS_SAMPLES || b.len() < MIN_KS_SAMPLES {
        return Err(WaveError::Precondition(format!(
            "two-sample KS needs at least {MIN_KS_SAMPLES} samples per side, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (x, y) = (sorted(a)?, sorted(b)?);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0_f64);
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = (n as f64 * m as f64 / (n + m) as f64).sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf(en * d),
    })
}

/// Marginal tests for one coefficient index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub m: i64,
    /// `b_0` against `N(0,1)`, `Re b_m` against `N(0,1/2)` otherwise.
    pub re: KsResult,
    pub im: Option<KsResult>,
    pub abs2: Option<KsResult>,
    pub phase: Option<KsResult>,
    pub mean_abs2: f64,
}

impl CoefficientEntry {
    fn tests(&self) -> impl Iterator<Item = &KsResult> {
        std::iter::once(&self.re)
            .chain(self.im.iter())
            .chain(self.abs2.iter())
            .chain(self.phase.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub samples: usize,
    pub seed: Option<u64>,
    pub n: usize,
    pub alpha: f64,
    /// Per-test level after Bonferroni correction.
    pub per_test_level: f64,
    pub entries: Vec<CoefficientEntry>,
    /// `corr(b_j, b_k)` for `j, k = 0..=N`.
    pub correlation: Vec<Vec<Complex64>>,
    pub max_correlation: f64,
    pub correlation_threshold: f64,
    pub marginals_pass: bool,
    pub correlations_pass: bool,
    pub pass: bool,
}

impl StatReport {
    pub fn min_p_value(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.tests())
            .map(|t| t.p_value)
            .fold(1.0, f64::min)
    }
}

fn hermitian_correlation(columns: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let power: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect();
    let k = columns.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    for j in 0..k {
        for l in 0..k {
            if j == l {
                out[j][l] = Complex64::new(1.0, 0.0);
                continue;
            }
            let s: Complex64 = columns[j].iter().zip(&columns[l]).map(|(a, b)| a * b.conj()).sum();
            let denom = (power[j] * power[l]).sqrt();
            out[j][l] = if denom > 0.0 {
                s / denom
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }
    out
}

/// Tests the empirical law of `b_0..b_N` against the Berry prediction.
///
/// Negative indices are fixed by `b_-m = (-1)^m conj(b_m)` and add no
/// information, so marginals and correlations use `m >= 0` only.
pub fn berry_conformance(elm: &EmpiricalLocalMeasure) -> Result<StatReport> {
    let n_samples = elm.len();
    if n_samples < MIN_CONFORMANCE_SAMPLES {
        return Err(WaveError::Precondition(format!(
            "conformance needs at least {MIN_CONFORMANCE_SAMPLES} samples, got {n_samples}"
        )));
    }
    let half = Reference::Normal {
        mean: 0.0,
        sd: 0.5f64.sqrt(),
    };
    let columns: Vec<Vec<Complex64>> = (0..=elm.n as i64).map(|m| elm.coefficient(m)).collect();
    let mut entries = Vec::with_capacity(columns.len());
    for (m, col) in columns.iter().enumerate() {
        let re: Vec<f64> = col.iter().map(|z| z.re).collect();
        let mean_abs2 = col.iter().map(|z| z.norm_sqr()).sum::<f64>() / n_samples as f64;
        let entry = if m == 0 {
            CoefficientEntry {
                m: 0,
                re: ks_statistic(&re, Reference::Normal { mean: 0.0, sd: 1.0 })?,
                im: None,
                abs2: None,
                phase: None,
                mean_abs2,
            }
        } else {
            let im: Vec<f64> = col.iter().map(|z| z.im).collect();
            let abs2: Vec<f64> = col.iter().map(|z| z.norm_sqr()).collect();
            let phase: Vec<f64> = col.iter().map(|z| z.arg()).collect();
            CoefficientEntry {
                m: m as i64,
                re: ks_statistic(&re, half)?,
                im: Some(ks_statistic(&im, half)?),
                abs2: Some(ks_statistic(&abs2, Reference::Exponential { rate: 1.0 })?),
                phase: Some(ks_statistic(&phase, Reference::Uniform { lo: -PI, hi: PI })?),
                mean_abs2,
            }
        };
        entries.push(entry);
    }
    let tests = entries.iter().map(|e| e.tests().count()).sum::<usize>();
    let per_test_level = ALPHA / tests as f64;
    let marginals_pass = entries
        .iter()
        .flat_map(|e| e.tests())
        .all(|t| t.p_value > per_test_level);
    let correlation = hermitian_correlation(&columns);
    let max_correlation = correlation
        .iter()
        .enumerate()
        .flat_map(|(j, row)| {
            row.iter()
                .enumerate()
                .filter(move |(l, _)| *l != j)
                .map(|(_, z)| z.norm())
        })
        .fold(0.0, f64::max);
    let correlation_threshold = 4.0 / (n_samples as f64).sqrt();
    let correlations_pass = max_correlation < correlation_threshold;
    Ok(StatReport {
        samples: n_samples,
        seed: elm.seed,
        n: elm.n,
        alpha: ALPHA,
        per_test_level,
        entries,
        correlation,
        max_correlation,
        correlation_threshold,
        marginals_pass,
        correlations_pass,
        pass: marginals_pass && correlations_pass,
    })
}

/// Conformance with the plane-wave limit, the law of `cos(theta + y . e)`
/// for `theta` uniform and a fixed direction `e = e(theta0)`.
///
/// For such a window `b_m = e^{-i m theta0} i^m (e^{i theta} + (-1)^m e^{-i theta}) / 2`,
/// so `|b_m|^2 + |b_{m+1}|^2 = 1`, every `b_m e^{i m theta0}` is real and
/// `b_0 - i e^{i theta0} b_1 = e^{i theta}` carries the uniform phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneWaveReport {
    pub samples: usize,
    pub seed: Option<u64>,
    pub tolerance: f64,
    /// Direction of propagation modulo `pi`, estimated from the samples.
    pub theta0: f64,
    pub modulus_deviation: f64,
    pub phase_relation_deviation: f64,
    pub phase_uniformity: KsResult,
    pub modulus_pass: bool,
    pub phase_relation_pass: bool,
    pub uniformity_pass: bool,
    pub pass: bool,
}

pub const PLANE_WAVE_TOLERANCE: f64 = 1e-2;

pub fn plane_wave_conformance(elm: &EmpiricalLocalMeasure) -> Result<PlaneWaveReport> {
    if elm.len() < MIN_CONFORMANCE_SAMPLES {
        return Err(WaveError::Precondition(format!(
            "conformance needs at least {MIN_CONFORMANCE_SAMPLES} samples, got {}",
            elm.len()
        )));
    }
    if elm.n < 1 {
        return Err(WaveError::Precondition("plane-wave conformance needs N >= 1".into()));
    }
    let nn = elm.n as i64;
    let dir: Complex64 = elm.samples.iter().map(|s| (s.get(1) * s.get(0).conj()).powi(2)).sum();
    let theta0 = (-dir.arg() / 2.0).rem_euclid(PI);
    let i = Complex64::new(0.0, 1.0);
    let mut modulus_deviation = 0.0_f64;
    let mut phase_relation_deviation = 0.0_f64;
    let mut phases = Vec::with_capacity(elm.len());
    for s in &elm.samples {
        for m in 0..nn {
            modulus_deviation = modulus_deviation.max((s.get(m).norm_sqr() + s.get(m + 1).norm_sqr() - 1.0).abs());
        }
        for m in -nn..=nn {
            let rotated = s.get(m) * Complex64::from_polar(1.0, m as f64 * theta0);
            phase_relation_deviation = phase_relation_deviation.max(rotated.im.abs());
        }
        phases.push((s.get(0) - i * Complex64::from_polar(1.0, theta0) * s.get(1)).arg());
    }
    let phase_uniformity = ks_statistic(&phases, Reference::Uniform { lo: -PI, hi: PI })?;
    let modulus_pass = modulus_deviation <= PLANE_WAVE_TOLERANCE;
    let phase_relation_pass = phase_relation_deviation <= PLANE_WAVE_TOLERANCE;
    let uniformity_pass = phase_uniformity.p_value > ALPHA;
    Ok(PlaneWaveReport {
        samples: elm.len(),
        seed: elm.seed,
        tolerance: PLANE_WAVE_TOLERANCE,
        theta0,
        modulus_deviation,
        phase_relation_deviation,
        phase_uniformity,
        modulus_pass,
        phase_relation_pass,
        uniformity_pass,
        pass: modulus_pass && phase_relation_pass && uniformity_pass,
    })
}

/// One step of the de-randomization chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerandomizationPoint {
    pub energy: u64,
    pub shell_size: usize,
    pub k_half: usize,
    pub windows: usize,
    pub ks: KsResult,
}

/// Law of `Re b_1(Psi_K)`.
///
/// `b_1(Psi_K) = -2 (2K+1)^{-1/2} sum_{k=1..K} Im(c_k) e^{-i zeta_k}`, so
/// `Re b_1` is centred normal with variance `2/(2K+1) sum_k cos^2(zeta_k)`,
/// which is `K/(2K+1)` for `K >= 2` and zero for `K = 1`.
pub fn randomized_b1_law(k_half: usize) -> Result<Reference> {
    if k_half < 2 {
        return Err(WaveError::Degenerate(format!(
            "Re b_1 of Psi_K vanishes identically for K={k_half}"
        )));
    }
    let sum: f64 = (1..=k_half as i64)
        .map(|k| sector_center(k, k_half).cos().powi(2))
        .sum();
    Ok(Reference::Normal {
        mean: 0.0,
        sd: (2.0 * sum / (2 * k_half + 1) as f64).sqrt(),
    })
}

/// KS distance between the law of `Re b_1` over sector approximations
/// `psi_{x,E}` (x uniform on the torus, window `i` from stream `i`) and the
/// law of `Re b_1(Psi_K)`.
pub fn derandomization_distance(
    f: &ToralEigenfunction,
    k_half: usize,
    windows: usize,
    seed: u64,
) -> Result<DerandomizationPoint> {
    let law = randomized_b1_law(k_half)?;
    let grid = PolarGrid::coefficient_rings(1);
    let region = Region::unit_torus();
    let values = par_map(windows, |i| {
        let x = region.sample(&mut rng::stream(seed, i as u64));
        let psi = sector_approximation(f, k_half, x)?;
        let patch = rescale(&psi, [0.0, 0.0], 1.0, grid.clone(), Geometry::Free)?;
        Ok(local_coeffs(&patch, 1)?.get(1).re)
    })?;
    Ok(DerandomizationPoint {
        energy: f.energy(),
        shell_size: f.shell().len(),
        k_half,
        windows,
        ks: ks_statistic(&values, law)?,
    })
}

/// Whether a sequence of distances decreases in trend: the least-squares
/// slope against the index is negative and the last value is below the first.
pub fn decreasing_trend(values: &[f64]) -> bool {
    let n = values.len();
    if n < 2 {
        return false;
    }
    let mx = (n - 1) as f64 / 2.0;
    let my = values.iter().sum::<f64>() / n as f64;
    let slope: f64 = values.iter().enumerate().map(|(i, y)| (i as f64 - mx) * (y - my)).sum();
    slope < 0.0 && values[n - 1] < values[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BerryField;
    use crate::lattice::LatticeShell;
    use crate::localscope::{empirical_local_measure, WindowSampling};
    use rand::Rng;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| rng::normal(&mut r)).collect()
    }

    #[test]
    fn ks_examples() {
        let n = 50;
        let q: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let r = ks_statistic(&q, Reference::Uniform { lo: 0.0, hi: 1.0 }).unwrap();
        assert!((r.statistic - 0.5 / n as f64).abs() < 1e-15);
        assert!(r.p_value > 0.999);

        let r = ks_statistic(&[0.0; 20], Reference::Normal { mean: 0.0, sd: 1.0 }).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-15);

        let r = ks_statistic(&normals(10_000, 3), Reference::Normal { mean: 0.0, sd: 1.0 }).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");

        assert!(matches!(
            ks_statistic(&[0.1; 7], Reference::Uniform { lo: 0.0, hi: 1.0 }),
            Err(WaveError::Precondition(_))
        ));
        assert!(ks_statistic(&q, Reference::Normal { mean: 0.0, sd: 0.0 }).is_err());
    }

    #[test]
    fn kolmogorov_distribution_values() {
        // tabulated: P(K > 1.36) ~ 0.05, P(K > 1.63) ~ 0.01
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 5e-4);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 2e-4);
        assert!((kolmogorov_sf(0.5) - 0.9639).abs() < 1e-4);
        // both branches agree at the switch
        let lam: f64 = 1.18;
        let theta = 1.0
            - (2.0 * PI).sqrt() / lam
                * (1..50)
                    .map(|k| (-((2 * k - 1) as f64).powi(2) * PI * PI / (8.0 * lam * lam)).exp())
                    .sum::<f64>();
        assert!((kolmogorov_sf(lam) - theta).abs() < 1e-9);
        let mut prev = 1.0;
        for i in 0..300 {
            let p = kolmogorov_sf(i as f64 * 0.01);
            assert!(p <= prev + 1e-12 && (0.0..=1.0).contains(&p));
            prev = p;
        }
    }

    #[test]
    fn ks_p_values_are_calibrated() {
        // uniform p-values under the null: rejection rate near alpha
        let mut rejected = 0;
        for s in 0..400 {
            let r = ks_statistic(&normals(400, 1000 + s), Reference::Normal { mean: 0.0, sd: 1.0 }).unwrap();
            rejected += (r.p_value < 0.1) as usize;
        }
        assert!((20..=65).contains(&rejected), "{rejected}");
    }

    #[test]
    fn two_sample_examples() {
        let a = normals(100, 1);
        assert_eq!(two_sample_ks(&a, &a).unwrap().statistic, 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        assert_eq!(two_sample_ks(&a, &b).unwrap().statistic, 1.0);
        let r = two_sample_ks(&normals(10_000, 7), &normals(10_000, 8)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
        assert!(two_sample_ks(&a[..7], &a).is_err());
    }

    #[test]
    fn two_sample_with_ties() {
        let a = vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let b = vec![0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0];
        // ECDFs: a = (2,4,6,8)/8, b = (1,4,7,8)/8
        assert!((two_sample_ks(&a, &b).unwrap().statistic - 0.125).abs() < 1e-15);
    }

    fn berry_measure(count: usize, n: usize, seed: u64) -> EmpiricalLocalMeasure {
        EmpiricalLocalMeasure::from_berry_samples(count, n, seed).unwrap()
    }

    #[test]
    fn berry_target_passes_itself() {
        let elm = berry_measure(2000, 3, 11);
        let report = berry_conformance(&elm).unwrap();
        assert!(report.pass, "{report:#?}");
        assert_eq!(report.entries.len(), 4);
        for e in &report.entries {
            assert!((e.mean_abs2 - 1.0).abs() < 3.0 / (2000f64).sqrt() * 2.0);
        }
        for (j, row) in report.correlation.iter().enumerate() {
            assert_eq!(row[j], Complex64::new(1.0, 0.0));
            for (l, z) in row.iter().enumerate() {
                assert!((z - report.correlation[l][j].conj()).norm() < 1e-12);
            }
        }
        assert!(!plane_wave_conformance(&elm).unwrap().pass);
    }

    #[test]
    fn berry_modulus_mean() {
        let elm = berry_measure(4000, 4, 5);
        for m in -4i64..=4 {
            let mean = elm.coefficient(m).iter().map(|z| z.norm_sqr()).sum::<f64>() / 4000.0;
            assert!((mean - 1.0).abs() < 3.0 / 4000f64.sqrt(), "m={m} {mean}");
        }
    }

    #[test]
    #[ignore = "slow: 20 x 1000 Berry samples"]
    fn no_bias_across_seeds() {
        for seed in 0..20 {
            let report = berry_conformance(&berry_measure(1000, 3, 500 + seed)).unwrap();
            assert!(
                report.min_p_value() > 0.001 / 13.0,
                "seed {seed}: {}",
                report.min_p_value()
            );
        }
    }

    fn plane_wave_measure(windows: usize) -> EmpiricalLocalMeasure {
        let f = ToralEigenfunction::plane_wave_pair(400).unwrap();
        let sampling = WindowSampling {
            region: Region::unit_torus(),
            windows,
            n: 3,
            seed: 2,
            geometry: Geometry::Torus,
        };
        empirical_local_measure(&f, f.scale(), sampling, "plane wave").unwrap()
    }

    #[test]
    fn plane_wave_limit() {
        let elm = plane_wave_measure(2000);
        let pw = plane_wave_conformance(&elm).unwrap();
        assert!(pw.pass, "{pw:#?}");
        assert!(pw.theta0.min(PI - pw.theta0) < 1e-9);
        assert!(!berry_conformance(&elm).unwrap().pass);
    }

    #[test]
    fn rotated_plane_waves_pass() {
        let mut r = rng::stream(77, 0);
        let theta0: f64 = 1.1;
        let samples = (0..600)
            .map(|_| {
                let shift: f64 = r.random_range(0.0..2.0 * PI);
                let field = move |p: [f64; 2]| (shift + p[0] * theta0.cos() + p[1] * theta0.sin()).cos();
                let patch = rescale(&field, [0.0, 0.0], 1.0, PolarGrid::coefficient_rings(4), Geometry::Free).unwrap();
                local_coeffs(&patch, 4).unwrap()
            })
            .collect();
        let elm = EmpiricalLocalMeasure {
            n: 4,
            scale: 1.0,
            region: None,
            descriptor: "rotated".into(),
            seed: None,
            centers: vec![[0.0, 0.0]; 600],
            samples,
        };
        let pw = plane_wave_conformance(&elm).unwrap();
        assert!(pw.pass, "{pw:#?}");
        assert!((pw.theta0 - theta0).abs() < 1e-9);
    }

    #[test]
    fn conformance_preconditions() {
        let elm = berry_measure(100, 2, 1);
        assert!(matches!(berry_conformance(&elm), Err(WaveError::Precondition(_))));
        assert!(matches!(plane_wave_conformance(&elm), Err(WaveError::Precondition(_))));
    }

    #[test]
    fn direct_berry_series_matches_coefficient_law() {
        // F(0) = C_0 for the series; its sample variance is 1
        let mut r = rng::stream(4, 0);
        let vals: Vec<f64> = (0..4000)
            .map(|_| BerryField::sample(40, &mut r).unwrap().value([0.0, 0.0]))
            .collect();
        let ks = ks_statistic(&vals, Reference::Normal { mean: 0.0, sd: 1.0 }).unwrap();
        assert!(ks.p_value > 0.01);
    }

    #[test]
    fn randomized_sector_law() {
        use crate::fields::RandomizedSectorField;
        assert!(randomized_b1_law(1).is_err());
        let Reference::Normal { sd, .. } = randomized_b1_law(6).unwrap() else {
            panic!()
        };
        assert!((sd * sd - 6.0 / 13.0).abs() < 1e-14);
        for k in [2usize, 3] {
            let vals: Vec<f64> = (0..3000)
                .map(|i| {
                    let psi = RandomizedSectorField::sample(k, &mut rng::stream(8, i)).unwrap();
                    let patch =
                        rescale(&psi, [0.0, 0.0], 1.0, PolarGrid::coefficient_rings(1), Geometry::Free).unwrap();
                    local_coeffs(&patch, 1).unwrap().get(1).re
                })
                .collect();
            let ks = ks_statistic(&vals, randomized_b1_law(k).unwrap()).unwrap();
            assert!(ks.p_value > 0.01, "K={k} {ks:?}");
        }
    }

    #[test]
    fn trend_detection() {
        assert!(decreasing_trend(&[0.1, 0.05, 0.06, 0.02]));
        assert!(!decreasing_trend(&[0.1, 0.12, 0.13, 0.11]));
        assert!(!decreasing_trend(&[0.1]));
    }

    #[test]
    fn derandomization_chain_decreases() {
        let chain: Vec<f64> = [5u64, 25, 1105, 27625]
            .iter()
            .map(|&e| {
                let f = ToralEigenfunction::flat(LatticeShell::enumerate(e)).unwrap();
                derandomization_distance(&f, 8, 8000, 3).unwrap().ks.statistic
            })
            .collect();
        assert!(decreasing_trend(&chain), "{chain:?}");
        assert!(chain[0] > 2.0 * chain[3], "{chain:?}");
    }

    use crate::fields::ScalarField;
}
