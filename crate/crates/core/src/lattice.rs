//! Integer points on circles: the shells `{xi in Z^2 : |xi|^2 = E}` that carry
//! toral eigenfunctions, their angular measures, and the census of
//! minimally vanishing subsets.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};

/// Default cap on the number of search nodes the subset census may visit.
pub const DEFAULT_CENSUS_BUDGET: u128 = 100_000_000;

pub type LatticePoint = [i64; 2];

/// The shell of lattice points on the circle of squared radius `energy`,
/// sorted by angle in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeShell {
    energy: u64,
    points: Vec<LatticePoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ShellRecord {
    #[serde(rename = "E")]
    energy: u64,
    points: Vec<LatticePoint>,
}

fn half_plane(p: &LatticePoint) -> u8 {
    if p[1] > 0 || (p[1] == 0 && p[0] > 0) {
        0
    } else {
        1
    }
}

/// Exact angular order on `Z^2 \ {0}` starting from the positive x axis.
fn angular_cmp(a: &LatticePoint, b: &LatticePoint) -> Ordering {
    half_plane(a).cmp(&half_plane(b)).then_with(|| {
        let cross = a[0] as i128 * b[1] as i128 - a[1] as i128 * b[0] as i128;
        0.cmp(&cross).then_with(|| a.cmp(b))
    })
}

/// Angle of a lattice point in `[0, 2pi)`.
pub fn point_angle(p: &LatticePoint) -> f64 {
    (p[1] as f64).atan2(p[0] as f64).rem_euclid(TAU)
}

impl LatticeShell {
    /// Enumerates the shell exactly in integer arithmetic.
    pub fn enumerate(energy: u64) -> Self {
        let mut points = Vec::new();
        let s = energy.isqrt() as i64;
        for x in -s..=s {
            let rem = energy - (x * x) as u64;
            let y = rem.isqrt();
            if y * y == rem {
                let y = y as i64;
                points.push([x, y]);
                if y != 0 {
                    points.push([x, -y]);
                }
            }
        }
        if energy == 0 {
            points = vec![[0, 0]];
        }
        points.sort_by(angular_cmp);
        Self { energy, points }
    }

    /// Builds a shell from an explicit point list, checking every invariant.
    pub fn from_points(energy: u64, mut points: Vec<LatticePoint>) -> Result<Self> {
        for p in &points {
            if (p[0] * p[0] + p[1] * p[1]) as u64 != energy {
                return Err(WaveError::Domain(format!(
                    "point {p:?} is not on the circle |xi|^2 = {energy}"
                )));
            }
        }
        points.sort_by(angular_cmp);
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(WaveError::Domain("duplicate shell points".into()));
        }
        for p in &points {
            if points.binary_search_by(|q| angular_cmp(q, &[-p[0], -p[1]])).is_err() {
                return Err(WaveError::Domain(format!(
                    "shell is not closed under negation at {p:?}"
                )));
            }
        }
        Ok(Self { energy, points })
    }

    pub fn energy(&self) -> u64 {
        self.energy
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    /// `N_E`, the number of points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Position of a point in the sorted list.
    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.points.binary_search_by(|q| angular_cmp(q, p)).ok()
    }

    /// Index of `-xi` for every `xi`.
    pub fn antipodes(&self) -> Vec<usize> {
        self.points
            .iter()
            .map(|p| self.index_of(&[-p[0], -p[1]]).expect("shell closed under negation"))
            .collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        self.points.iter().map(point_angle).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ShellRecord {
            energy: self.energy,
            points: self.points.clone(),
        })
        .expect("shell serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ShellRecord =
            serde_json::from_str(text).map_err(|e| WaveError::Domain(format!("bad shell JSON: {e}")))?;
        Self::from_points(rec.energy, rec.points)
    }
}

/// `mu_f = sum |a_xi|^2 delta_{xi/sqrt(E)}` on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularMeasure {
    /// `(angle in [0, 2pi), weight)` pairs in angular order.
    pub atoms: Vec<(f64, f64)>,
    pub total: f64,
}

pub fn angular_measure(shell: &LatticeShell, weights: &[f64]) -> Result<AngularMeasure> {
    if weights.len() != shell.len() {
        return Err(WaveError::Dimension {
            expected: shell.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(WaveError::Domain(format!("negative or NaN weight {w}")));
    }
    let atoms: Vec<(f64, f64)> = shell.angles().into_iter().zip(weights.iter().copied()).collect();
    let total = weights.iter().sum();
    Ok(AngularMeasure { atoms, total })
}

/// Kolmogorov distance between the CDF of `m` and the uniform CDF on
/// `[0, 2pi)`.
///
/// The CDF is right-continuous; at each atom both the value and the left
/// limit are compared against the uniform CDF, so a single atom at angle 0
/// has discrepancy 1.
pub fn angular_discrepancy(m: &AngularMeasure) -> Result<f64> {
    if (m.total - 1.0).abs() > 1e-9 {
        return Err(WaveError::Precondition(format!(
            "measure has total mass {} instead of 1",
            m.total
        )));
    }
    let mut atoms = m.atoms.clone();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cdf = 0.0;
    let mut worst = 0.0_f64;
    let mut i = 0;
    while i < atoms.len() {
        let angle = atoms[i].0;
        let uniform = angle / TAU;
        let left = cdf;
        while i < atoms.len() && atoms[i].0 == angle {
            cdf += atoms[i].1;
            i += 1;
        }
        worst = worst.max((left - uniform).abs()).max((cdf - uniform).abs());
    }
    Ok(worst)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Upper bound on the depth-first search nodes the census visits.
pub fn census_budget(n: usize, len: usize) -> u128 {
    (1..len).fold(0u128, |acc, j| acc.saturating_add(binomial(n as u128, j as u128)))
}

/// Number of minimally vanishing `len`-subsets of the shell, with the
/// default search budget.
pub fn count_minimally_vanishing(shell: &LatticeShell, len: usize) -> Result<u64> {
    count_minimally_vanishing_capped(shell, len, DEFAULT_CENSUS_BUDGET)
}

/// Exhaustive census of `len`-element subsets of distinct shell points with
/// zero sum and no vanishing proper sub-sum.
pub fn count_minimally_vanishing_capped(shell: &LatticeShell, len: usize, cap: u128) -> Result<u64> {
    let n = shell.len();
    if len < 2 || len > n {
        return Err(WaveError::Precondition(format!("subset length {len} outside [2, {n}]")));
    }
    let required = census_budget(n, len);
    if required > cap {
        return Err(WaveError::Budget { required, cap });
    }
    let census = Census::new(shell, len);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..n).into_par_iter().map(|first| census.count_from(first)).sum())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..n).map(|first| census.count_from(first)).sum())
    }
}

struct Census<'a> {
    points: &'a [LatticePoint],
    antipode: Vec<usize>,
    lookup: HashMap<LatticePoint, usize>,
    len: usize,
    radius: f64,
}

impl<'a> Census<'a> {
    fn new(shell: &'a LatticeShell, len: usize) -> Self {
        let lookup = shell.points().iter().enumerate().map(|(i, p)| (*p, i)).collect();
        Self {
            points: shell.points(),
            antipode: shell.antipodes(),
            lookup,
            len,
            radius: (shell.energy() as f64).sqrt(),
        }
    }

    fn count_from(&self, first: usize) -> u64 {
        let mut chosen = Vec::with_capacity(self.len);
        chosen.push(first);
        let p = self.points[first];
        self.extend(&mut chosen, p)
    }

    fn extend(&self, chosen: &mut Vec<usize>, sum: LatticePoint) -> u64 {
        let remaining = self.len - chosen.len();
        let last = *chosen.last().expect("non-empty");
        if remaining == 1 {
            let target = [-sum[0], -sum[1]];
            return match self.lookup.get(&target) {
                Some(&idx) if idx > last => {
                    chosen.push(idx);
                    let ok = self.is_minimal(chosen);
                    chosen.pop();
                    u64::from(ok)
                }
                _ => 0,
            };
        }
        let mut total = 0;
        for next in last + 1..self.points.len() {
            if self.len > 2 && chosen.iter().any(|&c| self.antipode[c] == next) {
                continue;
            }
            let q = self.points[next];
            let s = [sum[0] + q[0], sum[1] + q[1]];
            let norm = ((s[0] * s[0] + s[1] * s[1]) as f64).sqrt();
            // what is left must be cancelled by `remaining - 1` more points
            if norm > (remaining - 1) as f64 * self.radius + 1e-9 {
                continue;
            }
            chosen.push(next);
            total += self.extend(chosen, s);
            chosen.pop();
        }
        total
    }

    fn is_minimal(&self, chosen: &[usize]) -> bool {
        let k = chosen.len();
        let full = (1u64 << k) - 1;
        (1..full).all(|mask| {
            let mut s = [0i64, 0i64];
            for (bit, &idx) in chosen.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    s[0] += self.points[idx][0];
                    s[1] += self.points[idx][1];
                }
            }
            s != [0, 0]
        })
    }
}

/// Algebraic form of the bound in condition `I(gamma, B)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundForm {
    /// `N_E^(gamma * l)`
    #[default]
    Power,
    /// `gamma * l * N_E`
    Linear,
}

impl BoundForm {
    pub fn bound(self, n: usize, gamma: f64, len: usize) -> f64 {
        match self {
            BoundForm::Power => (n as f64).powf(gamma * len as f64),
            BoundForm::Linear => gamma * len as f64 * n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub len: usize,
    pub count: u64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub energy: u64,
    pub gamma: f64,
    pub max_len: usize,
    pub form: BoundForm,
    pub entries: Vec<ConditionEntry>,
    pub holds: bool,
}

/// Checks condition `I(gamma, B)`: for every `3 <= l <= B` the number of
/// minimally vanishing `l`-subsets is at most the configured bound.
pub fn check_condition_i(shell: &LatticeShell, gamma: f64, max_len: usize, form: BoundForm) -> Result<ConditionReport> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(WaveError::Precondition(format!("gamma = {gamma} outside (0, 1/2)")));
    }
    if max_len < 3 {
        return Err(WaveError::Precondition(format!("B = {max_len} below 3")));
    }
    let mut entries = Vec::new();
    for len in 3..=max_len {
        let count = if len > shell.len() {
            0
        } else {
            count_minimally_vanishing(shell, len)?
        };
        let bound = form.bound(shell.len(), gamma, len);
        entries.push(ConditionEntry {
            len,
            count,
            bound,
            holds: count as f64 <= bound,
        });
    }
    let holds = entries.iter().all(|e| e.holds);
    Ok(ConditionReport {
        energy: shell.energy(),
        gamma,
        max_len,
        form,
        entries,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(energy: u64) -> Vec<LatticePoint> {
        let s = energy.isqrt() as i64 + 1;
        let mut v = Vec::new();
        for x in -s..=s {
            for y in -s..=s {
                if (x * x + y * y) as u64 == energy {
                    v.push([x, y]);
                }
            }
        }
        v.sort();
        v
    }

    #[test]
    fn small_shells() {
        let unit = LatticeShell::enumerate(1);
        assert_eq!(unit.points(), &[[1, 0], [0, 1], [-1, 0], [0, -1]]);
        assert!(LatticeShell::enumerate(3).is_empty());
        let s25 = LatticeShell::enumerate(25);
        assert_eq!(s25.len(), 12);
        for p in [[5, 0], [3, 4], [4, 3], [0, -5], [-3, -4]] {
            assert!(s25.index_of(&p).is_some());
        }
        let mut sorted = s25.points().to_vec();
        sorted.sort();
        assert_eq!(sorted, brute_force(25));
    }

    #[test]
    fn shell_is_angularly_sorted() {
        let s = LatticeShell::enumerate(1105);
        let a = s.angles();
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a[0] >= 0.0 && *a.last().unwrap() < TAU);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = LatticeShell::enumerate(65);
        let back = LatticeShell::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
        assert!(s.to_json().starts_with("{\"E\":65,"));
        assert!(LatticeShell::from_json(r#"{"E":5,"points":[[1,2]]}"#).is_err());
        assert!(LatticeShell::from_json(r#"{"E":5,"points":[[1,1],[-1,-1]]}"#).is_err());
        assert!(LatticeShell::from_json(r#"{"E":1,"points":[[1,0],[1,0],[-1,0]]}"#).is_err());
    }

    #[test]
    fn measure_and_discrepancy() {
        let s5 = LatticeShell::enumerate(5);
        let m = angular_measure(&s5, &[0.125; 8]).unwrap();
        assert_eq!(m.atoms.len(), 8);
        assert!((m.total - 1.0).abs() < 1e-15);
        assert!(m.atoms.iter().all(|a| a.1 == 0.125));

        let single = AngularMeasure {
            atoms: vec![(0.0, 1.0)],
            total: 1.0,
        };
        assert_eq!(angular_discrepancy(&single).unwrap(), 1.0);

        let unit = LatticeShell::enumerate(1);
        let m4 = angular_measure(&unit, &[0.25; 4]).unwrap();
        assert!((angular_discrepancy(&m4).unwrap() - 0.25).abs() < 1e-15);

        let s = LatticeShell::enumerate(1105);
        let flat = vec![1.0 / s.len() as f64; s.len()];
        let d = angular_discrepancy(&angular_measure(&s, &flat).unwrap()).unwrap();
        assert!(d < 0.15, "{d}");

        assert!(matches!(
            angular_measure(&s5, &[0.5; 3]),
            Err(WaveError::Dimension { .. })
        ));
        let half = angular_measure(&s5, &[0.0625; 8]).unwrap();
        assert!(matches!(angular_discrepancy(&half), Err(WaveError::Precondition(_))));
    }

    #[test]
    fn vanishing_census_examples() {
        assert_eq!(count_minimally_vanishing(&LatticeShell::enumerate(25), 3).unwrap(), 0);
        assert_eq!(count_minimally_vanishing(&LatticeShell::enumerate(5), 4).unwrap(), 0);
        assert_eq!(count_minimally_vanishing(&LatticeShell::enumerate(1), 2).unwrap(), 2);
        assert_eq!(count_minimally_vanishing(&LatticeShell::enumerate(25), 2).unwrap(), 6);
    }

    /// Pruned search against plain enumeration of every subset.
    #[test]
    fn census_agrees_with_subset_brute_force() {
        for energy in [5u64, 25, 65, 325] {
            let s = LatticeShell::enumerate(energy);
            let n = s.len();
            for len in 2..=4.min(n) {
                let mut brute = 0;
                for mask in 0u64..(1 << n) {
                    if mask.count_ones() as usize != len {
                        continue;
                    }
                    let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                    let sum_zero = |sub: u64| {
                        let mut t = [0i64, 0];
                        for (b, &i) in idx.iter().enumerate() {
                            if sub >> b & 1 == 1 {
                                t[0] += s.points()[i][0];
                                t[1] += s.points()[i][1];
                            }
                        }
                        t == [0, 0]
                    };
                    let full = (1u64 << len) - 1;
                    if sum_zero(full) && (1..full).all(|sub| !sum_zero(sub)) {
                        brute += 1;
                    }
                }
                assert_eq!(count_minimally_vanishing(&s, len).unwrap(), brute, "E={energy} l={len}");
            }
        }
    }

    #[test]
    fn census_budget_and_preconditions() {
        let s = LatticeShell::enumerate(1105);
        let err = count_minimally_vanishing_capped(&s, 6, 1000).unwrap_err();
        match err {
            WaveError::Budget { required, cap } => {
                assert_eq!(cap, 1000);
                assert_eq!(required, census_budget(32, 6));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            count_minimally_vanishing(&s, 1),
            Err(WaveError::Precondition(_))
        ));
        assert!(matches!(
            count_minimally_vanishing(&LatticeShell::enumerate(1), 5),
            Err(WaveError::Precondition(_))
        ));
    }

    #[test]
    fn condition_i_examples() {
        let r = check_condition_i(&LatticeShell::enumerate(25), 0.4, 4, BoundForm::Power).unwrap();
        assert!(r.holds);
        assert_eq!(r.entries.iter().map(|e| e.count).collect::<Vec<_>>(), vec![0, 0]);
        let r = check_condition_i(&LatticeShell::enumerate(5), 0.1, 3, BoundForm::Power).unwrap();
        assert!(r.holds && r.entries[0].count == 0);
        let r = check_condition_i(&LatticeShell::enumerate(3), 0.2, 5, BoundForm::Linear).unwrap();
        assert!(r.holds);
        assert!(check_condition_i(&LatticeShell::enumerate(5), 0.5, 3, BoundForm::Power).is_err());
        assert!(check_condition_i(&LatticeShell::enumerate(5), 0.2, 2, BoundForm::Power).is_err());
        assert!((BoundForm::Linear.bound(10, 0.25, 4) - 10.0).abs() < 1e-12);
        assert!((BoundForm::Power.bound(16, 0.25, 2) - 4.0).abs() < 1e-12);
    }
}
