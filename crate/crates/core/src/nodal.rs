//! Nodal-domain census on sampled fields.
//!
//! Same-sign nodes are joined by 4-connectivity. On the torus every node
//! carries its winding relative to the root of its union-find tree, so a
//! component that closes a non-contractible loop is detected and given
//! infinite diameter. Diameters are exact maxima over lifted cell centres.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WaveError};
use crate::fields::{truncation_for_radius, BerryField, ScalarField, ToralEigenfunction};
use crate::localscope::{par_map, LocalPatch};
use crate::rng;

/// Value given to nodes that are exactly zero.
pub const ZERO_DISPLACEMENT: f64 = 1e-30;

/// Default resolution for Berry fields, in cells per unit length.
pub const BERRY_CELLS_PER_UNIT: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridGeometry {
    /// `[0,1)^2` with both axes wrapped.
    Torus,
    /// Nodes outside the closed disk are masked.
    Disk { center: [f64; 2], radius: f64 },
}

/// `m x m` samples; node `(i, j)` sits at `origin + spacing * (i, j)` and
/// is stored at `i * m + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    m: usize,
    spacing: f64,
    origin: [f64; 2],
    geometry: GridGeometry,
    values: Vec<f64>,
    mask: Vec<bool>,
}

fn displace_zeros(values: &mut [f64]) -> Result<()> {
    if values.iter().all(|v| *v == 0.0) {
        return Err(WaveError::Degenerate("field vanishes on every grid node".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(WaveError::Domain(format!("non-finite grid value {v}")));
    }
    for v in values.iter_mut().filter(|v| **v == 0.0) {
        *v = ZERO_DISPLACEMENT;
    }
    Ok(())
}

impl FieldGrid {
    /// Periodic samples at `(i/m, j/m)`.
    pub fn torus(mut values: Vec<f64>, m: usize) -> Result<Self> {
        if m == 0 || values.len() != m * m {
            return Err(WaveError::Dimension {
                expected: m * m,
                got: values.len(),
            });
        }
        displace_zeros(&mut values)?;
        Ok(Self {
            m,
            spacing: 1.0 / m as f64,
            origin: [0.0, 0.0],
            geometry: GridGeometry::Torus,
            values,
            mask: vec![true; m * m],
        })
    }

    pub fn from_toral(f: &ToralEigenfunction, m: usize) -> Result<Self> {
        Self::torus(f.grid(m)?, m)
    }

    /// Samples on the closed disk, `m` odd so that a node sits at the centre.
    pub fn disk_from_values(
        mut values: Vec<f64>,
        m: usize,
        spacing: f64,
        center: [f64; 2],
        radius: f64,
    ) -> Result<Self> {
        if m.is_multiple_of(2) || values.len() != m * m {
            return Err(WaveError::Dimension {
                expected: m * m,
                got: values.len(),
            });
        }
        if !(spacing > 0.0) || !(radius > 0.0) {
            return Err(WaveError::Domain(format!(
                "spacing {spacing} and radius {radius} must be positive"
            )));
        }
        let c = (m / 2) as f64;
        let origin = [center[0] - c * spacing, center[1] - c * spacing];
        let mask: Vec<bool> = (0..m * m)
            .map(|k| {
                let (i, j) = ((k / m) as f64 - c, (k % m) as f64 - c);
                i.hypot(j) * spacing <= radius * (1.0 + 1e-12)
            })
            .collect();
        for (v, inside) in values.iter_mut().zip(&mask) {
            if !inside {
                *v = 0.0;
            }
        }
        displace_zeros(&mut values)?;
        Ok(Self {
            m,
            spacing,
            origin,
            geometry: GridGeometry::Disk { center, radius },
            values,
            mask,
        })
    }

    /// Samples `field` on `B(center, radius)` at `cells_per_unit` nodes per
    /// unit length.
    pub fn sample_disk<F: ScalarField + ?Sized>(
        field: &F,
        center: [f64; 2],
        radius: f64,
        cells_per_unit: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) || !(cells_per_unit > 0.0) {
            return Err(WaveError::Domain(format!(
                "radius {radius} and resolution {cells_per_unit} must be positive"
            )));
        }
        if let Some(max) = field.admissible_radius() {
            let reach = center[0].hypot(center[1]) + radius;
            if reach > max + 1e-12 {
                return Err(WaveError::Truncation {
                    radius: reach,
                    max_radius: max,
                    n_trunc: 0,
                });
            }
        }
        let spacing = 1.0 / cells_per_unit;
        let half = (radius / spacing).floor() as usize;
        let m = 2 * half + 1;
        let c = half as f64;
        let rows = par_map(m, |i| {
            Ok((0..m)
                .map(|j| {
                    let (di, dj) = (i as f64 - c, j as f64 - c);
                    if di.hypot(dj) * spacing <= radius * (1.0 + 1e-12) {
                        field.value([center[0] + di * spacing, center[1] + dj * spacing])
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<f64>>())
        })?;
        Self::disk_from_values(rows.concat(), m, spacing, center, radius)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn geometry(&self) -> GridGeometry {
        self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn in_domain(&self, i: usize, j: usize) -> bool {
        self.mask[i * self.m + j]
    }

    pub fn point(&self, i: f64, j: f64) -> [f64; 2] {
        [self.origin[0] + self.spacing * i, self.origin[1] + self.spacing * j]
    }

    fn origin_node(&self) -> usize {
        match self.geometry {
            GridGeometry::Torus => 0,
            GridGeometry::Disk { .. } => (self.m / 2) * self.m + self.m / 2,
        }
    }

    /// Cyclic shift of a torus grid by `(di, dj)` nodes.
    pub fn shifted(&self, di: usize, dj: usize) -> Result<Self> {
        if self.geometry != GridGeometry::Torus {
            return Err(WaveError::Precondition("only torus grids can be shifted".into()));
        }
        let m = self.m;
        let values = (0..m * m)
            .map(|k| self.values[((k / m + di) % m) * m + (k % m + dj) % m])
            .collect();
        Self::torus(values, m)
    }
}

/// One connected component of the nonzero set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalComponent {
    pub sign: i8,
    pub cells: usize,
    /// `[x_min, y_min, x_max, y_max]` of lifted cell centres.
    pub bbox: [f64; 4],
    /// Maximum distance between cell centres; infinite when wrapping.
    pub diameter: f64,
    pub diameter_exact: bool,
    pub wraps: bool,
    pub touches_boundary: bool,
    pub contains_origin: bool,
    /// Convex hull of the lifted cell centres, counter-clockwise.
    #[serde(skip)]
    pub hull: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalCensus {
    pub geometry: GridGeometry,
    pub m: usize,
    pub spacing: f64,
    pub components: Vec<NodalComponent>,
    /// Component index of every node, `u32::MAX` outside the domain.
    #[serde(skip)]
    pub labels: Vec<u32>,
}

impl NodalCensus {
    pub fn total(&self) -> usize {
        self.components.len()
    }

    /// Non-wrapping components with diameter below `r`.
    pub fn count_below(&self, r: f64) -> usize {
        self.components.iter().filter(|c| c.diameter < r).count()
    }

    /// Tidy rows: sign, cells, diameter, flags.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,sign,cells,diameter,diameter_exact,wraps,touches_boundary,contains_origin\n");
        for (k, c) in self.components.iter().enumerate() {
            out.push_str(&format!(
                "{k},{},{},{},{},{},{},{}\n",
                c.sign, c.cells, c.diameter, c.diameter_exact, c.wraps, c.touches_boundary, c.contains_origin
            ));
        }
        out
    }
}

struct WindingDsu {
    parent: Vec<u32>,
    rank: Vec<u8>,
    /// Winding of a node minus that of its parent.
    offset: Vec<[i32; 2]>,
    wraps: Vec<bool>,
}

impl WindingDsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            offset: vec![[0, 0]; n],
            wraps: vec![false; n],
        }
    }

    /// Root of `x` and the winding of `x` relative to it.
    fn find(&mut self, x: usize) -> (usize, [i32; 2]) {
        let mut path = Vec::new();
        let mut r = x;
        while self.parent[r] as usize != r {
            path.push(r);
            r = self.parent[r] as usize;
        }
        let mut acc = [0, 0];
        for &p in path.iter().rev() {
            acc = [acc[0] + self.offset[p][0], acc[1] + self.offset[p][1]];
            self.offset[p] = acc;
            self.parent[p] = r as u32;
        }
        (r, if path.is_empty() { [0, 0] } else { self.offset[x] })
    }

    /// Records that `w(v) - w(u) = d`.
    fn union(&mut self, u: usize, v: usize, d: [i32; 2]) {
        let (ru, wu) = self.find(u);
        let (rv, wv) = self.find(v);
        if ru == rv {
            if [wv[0] - wu[0], wv[1] - wu[1]] != d {
                self.wraps[ru] = true;
            }
            return;
        }
        // winding of rv relative to ru
        let rel = [wu[0] + d[0] - wv[0], wu[1] + d[1] - wv[1]];
        let wraps = self.wraps[ru] || self.wraps[rv];
        let root = if self.rank[ru] >= self.rank[rv] {
            self.parent[rv] = ru as u32;
            self.offset[rv] = rel;
            if self.rank[ru] == self.rank[rv] {
                self.rank[ru] += 1;
            }
            ru
        } else {
            self.parent[ru] = rv as u32;
            self.offset[ru] = [-rel[0], -rel[1]];
            rv
        };
        self.wraps[root] = wraps;
    }
}

fn cross(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i128 {
    (a[0] - o[0]) as i128 * (b[1] - o[1]) as i128 - (a[1] - o[1]) as i128 * (b[0] - o[0]) as i128
}

/// Convex hull (monotone chain), counter-clockwise, collinear points dropped.
pub(crate) fn convex_hull(mut pts: Vec<[i64; 2]>) -> Vec<[i64; 2]> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<[i64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[i64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn dist2(a: [i64; 2], b: [i64; 2]) -> i128 {
    let (dx, dy) = ((a[0] - b[0]) as i128, (a[1] - b[1]) as i128);
    dx * dx + dy * dy
}

/// Squared diameter of a convex polygon by rotating calipers.
pub(crate) fn hull_diameter2(hull: &[[i64; 2]]) -> i128 {
    let n = hull.len();
    match n {
        0 | 1 => return 0,
        2 => return dist2(hull[0], hull[1]),
        _ => {}
    }
    let area2 = |i: usize, j: usize, k: usize| cross(hull[i % n], hull[j % n], hull[k % n]).abs();
    let mut best = 0;
    let mut j = 1;
    for i in 0..n {
        while area2(i, i + 1, j + 1) > area2(i, i + 1, j) {
            j += 1;
        }
        best = best
            .max(dist2(hull[i], hull[j % n]))
            .max(dist2(hull[(i + 1) % n], hull[j % n]));
    }
    best
}

/// Options for [`label_components_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LabelOptions {
    /// Components above this many cells get the bounding-box diagonal (an
    /// upper bound) instead of the exact diameter. `None` means always exact.
    pub exact_diameter_cap: Option<usize>,
}

pub fn label_components(grid: &FieldGrid) -> NodalCensus {
    label_components_with(grid, LabelOptions::default())
}

pub fn label_components_with(grid: &FieldGrid, options: LabelOptions) -> NodalCensus {
    let m = grid.m;
    let torus = grid.geometry == GridGeometry::Torus;
    let n = m * m;
    let positive = |k: usize| grid.values[k] > 0.0;
    let mut dsu = WindingDsu::new(n);
    for i in 0..m {
        for j in 0..m {
            let u = i * m + j;
            if !grid.mask[u] {
                continue;
            }
            let s = positive(u);
            let down = if i + 1 < m {
                Some(((i + 1) * m + j, [0, 0]))
            } else if torus {
                Some((j, [1, 0]))
            } else {
                None
            };
            let right = if j + 1 < m {
                Some((i * m + j + 1, [0, 0]))
            } else if torus {
                Some((i * m, [0, 1]))
            } else {
                None
            };
            for (v, d) in down.into_iter().chain(right) {
                if grid.mask[v] && positive(v) == s {
                    dsu.union(u, v, d);
                }
            }
        }
    }

    let mut labels = vec![u32::MAX; n];
    let mut windings = vec![[0i32; 2]; n];
    let mut roots: Vec<usize> = Vec::new();
    let mut root_label = vec![u32::MAX; n];
    for k in 0..n {
        if !grid.mask[k] {
            continue;
        }
        let (r, w) = dsu.find(k);
        if root_label[r] == u32::MAX {
            root_label[r] = roots.len() as u32;
            roots.push(r);
        }
        labels[k] = root_label[r];
        windings[k] = w;
    }

    // group nodes by component (counting sort)
    let count = roots.len();
    let mut starts = vec![0usize; count + 1];
    for &l in labels.iter().filter(|l| **l != u32::MAX) {
        starts[l as usize + 1] += 1;
    }
    for c in 0..count {
        starts[c + 1] += starts[c];
    }
    let mut order = vec![0usize; starts[count]];
    let mut fill = starts.clone();
    for (k, &l) in labels.iter().enumerate() {
        if l != u32::MAX {
            order[fill[l as usize]] = k;
            fill[l as usize] += 1;
        }
    }

    let mi = m as i64;
    let origin_node = grid.origin_node();
    let off_domain = |i: usize, j: usize| -> bool {
        if torus {
            return false;
        }
        i == 0 || j == 0 || i + 1 == m || j + 1 == m || {
            let nb = [(i - 1) * m + j, (i + 1) * m + j, i * m + j - 1, i * m + j + 1];
            nb.iter().any(|&v| !grid.mask[v])
        }
    };
    let h = grid.spacing;
    let mut components = Vec::with_capacity(count);
    let mut lifted: Vec<[i64; 2]> = Vec::new();
    for c in 0..count {
        let nodes = &order[starts[c]..starts[c + 1]];
        let wraps = dsu.wraps[roots[c]];
        let mut touches = false;
        let mut contains_origin = false;
        lifted.clear();
        for &k in nodes {
            let (i, j) = (k / m, k % m);
            touches |= off_domain(i, j);
            contains_origin |= k == origin_node;
            let w = windings[k];
            lifted.push([i as i64 + w[0] as i64 * mi, j as i64 + w[1] as i64 * mi]);
        }
        let (mut lo, mut hi) = ([i64::MAX; 2], [i64::MIN; 2]);
        for p in &lifted {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let bbox = [
            grid.origin[0] + h * lo[0] as f64,
            grid.origin[1] + h * lo[1] as f64,
            grid.origin[0] + h * hi[0] as f64,
            grid.origin[1] + h * hi[1] as f64,
        ];
        let exact = options.exact_diameter_cap.is_none_or(|cap| nodes.len() <= cap);
        let (diameter, hull) = if wraps {
            (f64::INFINITY, Vec::new())
        } else if !exact {
            let (dx, dy) = ((hi[0] - lo[0]) as f64, (hi[1] - lo[1]) as f64);
            (h * dx.hypot(dy), Vec::new())
        } else {
            // row extremes carry every hull vertex
            lifted.sort_unstable();
            let mut extremes = Vec::new();
            let mut a = 0;
            while a < lifted.len() {
                let mut b = a;
                while b + 1 < lifted.len() && lifted[b + 1][0] == lifted[a][0] {
                    b += 1;
                }
                extremes.push(lifted[a]);
                if b > a {
                    extremes.push(lifted[b]);
                }
                a = b + 1;
            }
            let hull = convex_hull(extremes);
            let d2 = hull_diameter2(&hull);
            let hull = hull
                .iter()
                .map(|p| [grid.origin[0] + h * p[0] as f64, grid.origin[1] + h * p[1] as f64])
                .collect();
            (h * (d2 as f64).sqrt(), hull)
        };
        components.push(NodalComponent {
            sign: if positive(nodes[0]) { 1 } else { -1 },
            cells: nodes.len(),
            bbox,
            diameter,
            diameter_exact: exact && !wraps,
            wraps,
            touches_boundary: touches,
            contains_origin,
            hull,
        });
    }
    NodalCensus {
        geometry: grid.geometry,
        m,
        spacing: h,
        components,
        labels,
    }
}

/// `N(0, r, r', f)`: components strictly inside the disk with diameter below `r_prime`.
pub fn count_local(census: &NodalCensus, r_prime: f64) -> usize {
    census
        .components
        .iter()
        .filter(|c| !c.touches_boundary && c.diameter < r_prime)
        .count()
}

/// The sandwich estimate
/// `N_{r'} |B(0, r - r')| <= int N(x, r, r') dx <= N_{r'} |B(0, r)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub r: f64,
    pub r_prime: f64,
    /// `N_{r'}`: components of diameter below `r'`.
    pub count: usize,
    pub lower: f64,
    pub integral: f64,
    pub upper: f64,
    /// Riemann-sum allowance on the integral.
    pub slack: f64,
    pub center_spacing: f64,
    pub holds: bool,
}

/// Evaluates the sandwich on a census. The integral over centres is a
/// Riemann sum on the lattice `center_spacing * Z^2`; a component counts for
/// centre `x` iff all its cell centres lie in the open ball `B(x, r)`.
pub fn sandwich_from_census(census: &NodalCensus, r: f64, r_prime: f64, center_spacing: f64) -> Result<SandwichReport> {
    if !(r > r_prime && r_prime > 0.0) {
        return Err(WaveError::Precondition(format!(
            "need r > r' > 0, got r={r}, r'={r_prime}"
        )));
    }
    if !(center_spacing > 0.0) {
        return Err(WaveError::Domain(format!(
            "centre spacing {center_spacing} must be positive"
        )));
    }
    let eligible: Vec<&NodalComponent> = census.components.iter().filter(|c| c.diameter < r_prime).collect();
    if eligible.iter().any(|c| !c.diameter_exact) {
        return Err(WaveError::Precondition(
            "sandwich needs exact hulls for every small component".into(),
        ));
    }
    let r2 = r * r;
    let dc = center_spacing;
    let per_component = par_map(eligible.len(), |k| {
        let c = eligible[k];
        let (x_lo, x_hi) = (c.bbox[2] - r, c.bbox[0] + r);
        let (y_lo, y_hi) = (c.bbox[3] - r, c.bbox[1] + r);
        let mut hits = 0u64;
        let (a0, a1) = ((x_lo / dc).floor() as i64, (x_hi / dc).ceil() as i64);
        let (b0, b1) = ((y_lo / dc).floor() as i64, (y_hi / dc).ceil() as i64);
        for a in a0..=a1 {
            let x = a as f64 * dc;
            for b in b0..=b1 {
                let y = b as f64 * dc;
                if c.hull.iter().all(|p| (p[0] - x).powi(2) + (p[1] - y).powi(2) < r2) {
                    hits += 1;
                }
            }
        }
        Ok(hits)
    })?;
    let count = eligible.len();
    let integral = per_component.iter().sum::<u64>() as f64 * dc * dc;
    let lower = count as f64 * PI * (r - r_prime).powi(2);
    let upper = count as f64 * PI * r2;
    let slack = count as f64 * (2.0 * 2f64.sqrt() * PI * r * dc + PI * dc * dc / 2.0);
    let holds = integral >= lower - slack && integral <= upper + slack;
    Ok(SandwichReport {
        r,
        r_prime,
        count,
        lower,
        integral,
        upper,
        slack,
        center_spacing: dc,
        holds,
    })
}

fn require_holds(report: SandwichReport) -> Result<SandwichReport> {
    if report.holds {
        Ok(report)
    } else {
        Err(WaveError::Invariant(format!(
            "sandwich violated: {} <= {} <= {} (slack {})",
            report.lower, report.integral, report.upper, report.slack
        )))
    }
}

/// Sandwich check for a toral eigenfunction on an `m x m` grid, centres at
/// spacing `1/k` with `k = ceil(16 / r)` so that the lattice of centres is
/// periodic.
pub fn sandwich_check(f: &ToralEigenfunction, r: f64, r_prime: f64, m: usize) -> Result<SandwichReport> {
    if !(r < 0.5) {
        return Err(WaveError::Precondition(format!(
            "ball radius {r} must be below 1/2 on the torus"
        )));
    }
    let census = label_components(&FieldGrid::from_toral(f, m)?);
    let k = (16.0 / r).ceil();
    require_holds(sandwich_from_census(&census, r, r_prime, 1.0 / k)?)
}

/// Sandwich check for a Berry sample restricted to `B(0, omega_radius)`.
/// Every component of diameter below `r'` counts, boundary-touching or not.
pub fn sandwich_check_berry(
    field: &BerryField,
    omega_radius: f64,
    r: f64,
    r_prime: f64,
    cells_per_unit: f64,
) -> Result<SandwichReport> {
    let grid = FieldGrid::sample_disk(field, [0.0, 0.0], omega_radius, cells_per_unit)?;
    let census = label_components(&grid);
    require_holds(sandwich_from_census(&census, r, r_prime, r / 16.0)?)
}

/// Monte Carlo over independent Berry samples of `N(0, R, R', F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnsEstimate {
    pub radius: f64,
    pub radius_prime: f64,
    pub cells_per_unit: f64,
    pub seed: u64,
    pub counts: Vec<usize>,
    /// Mean of `N / |B(0, R)|`.
    pub mean: f64,
    pub stderr: f64,
}

impl CnsEstimate {
    pub fn samples(&self) -> usize {
        self.counts.len()
    }

    pub fn relative_stderr(&self) -> f64 {
        self.stderr / self.mean
    }
}

/// Sample `i` is drawn from stream `i` of `seed`, truncated at the minimal
/// admissible order for radius `R`.
pub fn estimate_cns(
    seed: u64,
    samples: usize,
    radius: f64,
    radius_prime: f64,
    cells_per_unit: f64,
) -> Result<CnsEstimate> {
    if !(radius > 0.0 && radius_prime > 0.0) {
        return Err(WaveError::Precondition(format!(
            "need R, R' > 0, got R={radius}, R'={radius_prime}"
        )));
    }
    if samples < 2 {
        return Err(WaveError::Precondition("at least two samples are needed".into()));
    }
    let n_trunc = truncation_for_radius(radius);
    let counts = par_map(samples, |i| {
        let f = BerryField::sample(n_trunc, &mut rng::stream(seed, i as u64))?;
        let grid = FieldGrid::sample_disk(&f, [0.0, 0.0], radius, cells_per_unit)?;
        Ok(count_local(&label_components(&grid), radius_prime))
    })?;
    let area = PI * radius * radius;
    let vals: Vec<f64> = counts.iter().map(|&c| c as f64 / area).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(CnsEstimate {
        radius,
        radius_prime,
        cells_per_unit,
        seed,
        counts,
        mean,
        stderr: (var / n).sqrt(),
    })
}

/// `h^2 N_{R h}(f)` from an `m x m` torus census; `m` must give at least
/// eight cells per wavelength `1/sqrt(E)`.
pub fn toral_nodal_scaling(f: &ToralEigenfunction, radius: f64, m: usize) -> Result<f64> {
    let needed = 8.0 * (f.energy() as f64).sqrt();
    if (m as f64) < needed {
        return Err(WaveError::Resolution(format!(
            "grid {m} below 8 cells per wavelength ({needed:.1})"
        )));
    }
    let h = f.scale();
    let census = label_components(&FieldGrid::from_toral(f, m)?);
    Ok(h * h * census.count_below(radius * h) as f64)
}

/// Whether the superlevel component of `{f > eta}` through the origin
/// exists and stays inside `B(0, 1/eta)`.
///
/// The patch must be sampled on rings reaching `1/eta`; rings at or beyond
/// that radius form the boundary.
pub fn stable_domain_certificate(patch: &LocalPatch, eta: f64) -> Result<bool> {
    if !(eta > 0.0) {
        return Err(WaveError::Domain(format!("eta {eta} must be positive")));
    }
    let reach = 1.0 / eta;
    if patch.radius() < reach * (1.0 - 1e-9) {
        return Err(WaveError::Precondition(format!(
            "patch radius {} does not cover B(0, {reach})",
            patch.radius()
        )));
    }
    if patch.origin.re <= eta {
        return Ok(false);
    }
    let q = patch.grid.q;
    let boundary = patch
        .grid
        .radii
        .iter()
        .position(|r| *r >= reach * (1.0 - 1e-9))
        .expect("patch covers the ball");
    let above = |ring: usize, j: usize| patch.values[ring * q + j].re > eta;
    let mut seen = vec![false; (boundary + 1) * q];
    let mut queue = VecDeque::new();
    for j in (0..q).filter(|&j| above(0, j)) {
        seen[j] = true;
        queue.push_back((0, j));
    }
    while let Some((ring, j)) = queue.pop_front() {
        if ring == boundary {
            return Ok(false);
        }
        let mut next = vec![(ring + 1, j), (ring, (j + 1) % q), (ring, (j + q - 1) % q)];
        if ring > 0 {
            next.push((ring - 1, j));
        }
        for (a, b) in next {
            if !seen[a * q + b] && above(a, b) {
                seen[a * q + b] = true;
                queue.push_back((a, b));
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_j;
    use crate::fields::PlaneWave;
    use crate::lattice::LatticeShell;
    use crate::localscope::{rescale, Geometry, PolarGrid};
    use rand::Rng;

    const J0_ZEROS: [f64; 3] = [2.404825557695773, 5.520078110286311, 8.653727912911013];

    fn j0_disk(cells: f64) -> NodalCensus {
        let f = |p: [f64; 2]| bessel_j(0, p[0].hypot(p[1]));
        label_components(&FieldGrid::sample_disk(&f, [0.0, 0.0], 10.0, cells).unwrap())
    }

    #[test]
    fn constant_torus_is_one_component() {
        let c = label_components(&FieldGrid::torus(vec![1.0; 64], 8).unwrap());
        assert_eq!(c.total(), 1);
        assert!(c.components[0].wraps && c.components[0].diameter.is_infinite());
        assert!(FieldGrid::torus(vec![0.0; 64], 8).is_err());
        assert!(FieldGrid::torus(vec![1.0; 63], 8).is_err());
    }

    #[test]
    fn cosine_strips() {
        for n in [1u64, 3, 5] {
            let f = ToralEigenfunction::plane_wave_pair(n).unwrap();
            let c = label_components(&FieldGrid::from_toral(&f, 100).unwrap());
            assert_eq!(c.total(), 2 * n as usize, "n={n}");
            assert!(c.components.iter().all(|k| k.wraps));
            assert_eq!(c.count_below(1.0), 0);
        }
    }

    #[test]
    fn wrapping_domains_detected_via_winding() {
        // a diagonal band: each strip wraps along (1,1)
        let m = 40;
        let vals: Vec<f64> = (0..m * m)
            .map(|k| if ((k / m + k % m) / 5) % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let c = label_components(&FieldGrid::torus(vals, m).unwrap());
        assert_eq!(c.total(), 8);
        assert!(c.components.iter().all(|k| k.wraps));

        // an isolated blob across the seam does not wrap
        let mut vals = vec![-1.0; m * m];
        for (i, j) in [(39, 39), (0, 39), (39, 0), (0, 0), (1, 0)] {
            vals[i * m + j] = 1.0;
        }
        let c = label_components(&FieldGrid::torus(vals, m).unwrap());
        assert_eq!(c.total(), 2);
        let blob = c.components.iter().find(|k| k.sign == 1).unwrap();
        assert!(!blob.wraps && blob.cells == 5);
        assert!((blob.diameter - 5f64.sqrt() / m as f64).abs() < 1e-12);
        assert!(blob.contains_origin);
    }

    #[test]
    fn bessel_disk_components() {
        let c = j0_disk(16.0);
        assert_eq!(c.total(), 4);
        assert_eq!(count_local(&c, f64::INFINITY), 3);
        assert_eq!(count_local(&c, 5.0), 1);
        let centre = c.components.iter().find(|k| k.contains_origin).unwrap();
        assert!((centre.diameter - 2.0 * J0_ZEROS[0]).abs() < 2.0 / 16.0);
        let mut inner: Vec<f64> = c
            .components
            .iter()
            .filter(|k| !k.touches_boundary)
            .map(|k| k.diameter)
            .collect();
        inner.sort_by(f64::total_cmp);
        for (d, z) in inner.iter().zip(J0_ZEROS) {
            assert!((d - 2.0 * z).abs() < 2.0 / 16.0, "{d} vs {}", 2.0 * z);
        }
        assert_eq!(c.components.iter().filter(|k| k.touches_boundary).count(), 1);
    }

    #[test]
    fn plane_wave_disk_has_no_small_local_domains() {
        let w = PlaneWave::new(0.4);
        let c = label_components(&FieldGrid::sample_disk(&w, [0.0, 0.0], 10.0, 16.0).unwrap());
        assert_eq!(count_local(&c, 1.0), 0);
        assert_eq!(count_local(&c, f64::INFINITY), 0);
    }

    #[test]
    fn diameter_cap_uses_bounding_box() {
        let f = |p: [f64; 2]| bessel_j(0, p[0].hypot(p[1]));
        let grid = FieldGrid::sample_disk(&f, [0.0, 0.0], 10.0, 8.0).unwrap();
        let capped = label_components_with(
            &grid,
            LabelOptions {
                exact_diameter_cap: Some(100),
            },
        );
        let exact = label_components(&grid);
        for (a, b) in capped.components.iter().zip(&exact.components) {
            assert!(a.diameter >= b.diameter - 1e-12);
            assert_eq!(a.diameter_exact, a.cells <= 100);
        }
    }

    fn naive_labels(signs: &[bool], m: usize) -> Vec<usize> {
        fn visit(i: usize, j: usize, m: usize, signs: &[bool], label: usize, out: &mut [usize]) {
            out[i * m + j] = label;
            let s = signs[i * m + j];
            let nb = [
                ((i + m - 1) % m, j),
                ((i + 1) % m, j),
                (i, (j + m - 1) % m),
                (i, (j + 1) % m),
            ];
            for (a, b) in nb {
                if out[a * m + b] == usize::MAX && signs[a * m + b] == s {
                    visit(a, b, m, signs, label, out);
                }
            }
        }
        let mut out = vec![usize::MAX; m * m];
        let mut next = 0;
        for k in 0..m * m {
            if out[k] == usize::MAX {
                visit(k / m, k % m, m, signs, next, &mut out);
                next += 1;
            }
        }
        out
    }

    #[test]
    fn union_find_matches_recursive_oracle() {
        let m = 64;
        let mut r = rng::stream(31, 0);
        for trial in 0..50 {
            let p: f64 = 0.3 + 0.4 * (trial as f64 / 49.0);
            let signs: Vec<bool> = (0..m * m).map(|_| r.random::<f64>() < p).collect();
            let vals = signs.iter().map(|s| if *s { 1.0 } else { -1.0 }).collect();
            let census = label_components(&FieldGrid::torus(vals, m).unwrap());
            let oracle = naive_labels(&signs, m);
            let mut map = std::collections::HashMap::new();
            for (a, b) in census.labels.iter().zip(&oracle) {
                assert_eq!(*map.entry(*a).or_insert(*b), *b);
            }
            assert_eq!(map.len(), census.total());
            assert_eq!(census.components.iter().map(|c| c.cells).sum::<usize>(), m * m);
        }
    }

    #[test]
    fn census_is_shift_invariant() {
        let f = ToralEigenfunction::random(LatticeShell::enumerate(65), &mut rng::stream(4, 0)).unwrap();
        let grid = FieldGrid::from_toral(&f, 128).unwrap();
        let base = label_components(&grid);
        let sizes = |c: &NodalCensus| {
            let mut s: Vec<(usize, bool)> = c.components.iter().map(|k| (k.cells, k.wraps)).collect();
            s.sort();
            s
        };
        for (di, dj) in [(1, 0), (17, 3), (64, 127)] {
            let shifted = label_components(&grid.shifted(di, dj).unwrap());
            assert_eq!(shifted.total(), base.total());
            assert_eq!(sizes(&shifted), sizes(&base));
            let mut a: Vec<i64> = base
                .components
                .iter()
                .filter(|k| !k.wraps)
                .map(|k| (k.diameter * 1e9) as i64)
                .collect();
            let mut b: Vec<i64> = shifted
                .components
                .iter()
                .filter(|k| !k.wraps)
                .map(|k| (k.diameter * 1e9) as i64)
                .collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hull_and_calipers_against_brute_force() {
        let mut r = rng::stream(12, 0);
        for _ in 0..200 {
            let n = r.random_range(1..40);
            let pts: Vec<[i64; 2]> = (0..n)
                .map(|_| [r.random_range(-20..20), r.random_range(-20..20)])
                .collect();
            let brute = pts
                .iter()
                .flat_map(|a| pts.iter().map(move |b| dist2(*a, *b)))
                .max()
                .unwrap();
            let hull = convex_hull(pts.clone());
            assert_eq!(hull_diameter2(&hull), brute);
            for p in &pts {
                for k in 0..hull.len().max(3) {
                    if hull.len() >= 3 {
                        assert!(cross(hull[k % hull.len()], hull[(k + 1) % hull.len()], *p) >= 0);
                    }
                }
            }
        }
    }

    #[test]
    fn refinement_keeps_resolved_domains() {
        for seed in 0..4 {
            let f = BerryField::sample_seeded(truncation_for_radius(8.0), seed).unwrap();
            let coarse = label_components(&FieldGrid::sample_disk(&f, [0.0, 0.0], 8.0, 8.0).unwrap());
            let fine = label_components(&FieldGrid::sample_disk(&f, [0.0, 0.0], 8.0, 16.0).unwrap());
            let big = |c: &NodalCensus| c.components.iter().filter(|k| k.diameter > 4.0 / 8.0).count();
            assert!(
                big(&fine) >= big(&coarse),
                "seed {seed}: {} < {}",
                big(&fine),
                big(&coarse)
            );
        }
    }

    #[test]
    fn sandwich_on_strips_and_flat_shell() {
        let strips = ToralEigenfunction::plane_wave_pair(4).unwrap();
        let rep = sandwich_check(&strips, 0.05, 0.02, 128).unwrap();
        assert_eq!((rep.count, rep.integral, rep.upper), (0, 0.0, 0.0));

        let flat = ToralEigenfunction::flat(LatticeShell::enumerate(1105)).unwrap();
        let h = flat.scale();
        let rep = sandwich_check(&flat, 8.0 * h, 4.0 * h, 512).unwrap();
        assert!(rep.holds, "{rep:?}");
        let rep = sandwich_check(&flat, 16.0 * h, 8.0 * h, 512).unwrap();
        assert!(rep.count > 0 && rep.holds, "{rep:?}");
        assert!(sandwich_check(&flat, 4.0 * h, 8.0 * h, 512).is_err());
    }

    #[test]
    fn sandwich_on_berry_samples() {
        for seed in 0..3 {
            let f = BerryField::sample_seeded(truncation_for_radius(15.0), seed).unwrap();
            let rep = sandwich_check_berry(&f, 15.0, 10.0, 5.0, 8.0).unwrap();
            assert!(rep.holds && rep.count > 0, "{rep:?}");
        }
    }

    #[test]
    fn sandwich_riemann_sum_is_exact_for_a_point() {
        // one single-cell component: its ball of centres has area pi r^2
        let m = 41;
        let mut vals = vec![-1.0; m * m];
        vals[20 * m + 20] = 1.0;
        let census = label_components(&FieldGrid::torus(vals, m).unwrap());
        let rep = sandwich_from_census(&census, 0.2, 0.1, 1.0 / 400.0).unwrap();
        assert_eq!(rep.count, 1);
        assert!((rep.integral - PI * 0.04).abs() < rep.slack);
        assert!((rep.integral - rep.upper).abs() < 1e-3);
    }

    #[test]
    fn toral_scaling_examples() {
        let strips = ToralEigenfunction::plane_wave_pair(3).unwrap();
        assert_eq!(toral_nodal_scaling(&strips, 10.0, 64).unwrap(), 0.0);
        let flat = ToralEigenfunction::flat(LatticeShell::enumerate(25)).unwrap();
        assert!(matches!(
            toral_nodal_scaling(&flat, 10.0, 39),
            Err(WaveError::Resolution(_))
        ));
        assert!(toral_nodal_scaling(&flat, 10.0, 64).unwrap() > 0.0);
    }

    #[test]
    fn cns_estimate_is_monotone_in_filter() {
        let small = estimate_cns(1, 24, 10.0, 5.0, 8.0).unwrap();
        let large = estimate_cns(1, 24, 10.0, 10.0, 8.0).unwrap();
        assert!(small.counts.iter().zip(&large.counts).all(|(a, b)| a <= b));
        assert!(large.mean > 0.0 && large.stderr > 0.0);
        assert!(estimate_cns(1, 8, 6.0, 0.0, 8.0).is_err());
    }

    fn bessel_patch(eta: f64) -> LocalPatch {
        let f = |p: [f64; 2]| bessel_j(0, p[0].hypot(p[1]));
        rescale(
            &f,
            [0.0, 0.0],
            1.0,
            PolarGrid::uniform(1.0 / eta, 0.05, 256).unwrap(),
            Geometry::Free,
        )
        .unwrap()
    }

    #[test]
    fn stable_domain_examples() {
        assert!(stable_domain_certificate(&bessel_patch(0.2), 0.2).unwrap());
        let grid = PolarGrid::uniform(5.0, 0.05, 256).unwrap();
        let flat = rescale(&|_: [f64; 2]| 0.1, [0.0, 0.0], 1.0, grid.clone(), Geometry::Free).unwrap();
        assert!(!stable_domain_certificate(&flat, 0.2).unwrap());
        let wave = rescale(&PlaneWave::new(0.7), [0.0, 0.0], 1.0, grid, Geometry::Free).unwrap();
        assert!(!stable_domain_certificate(&wave, 0.2).unwrap());
        assert!(matches!(
            stable_domain_certificate(&bessel_patch(0.2), 0.1),
            Err(WaveError::Precondition(_))
        ));
    }
}
