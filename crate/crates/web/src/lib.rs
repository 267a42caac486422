//! WebAssembly bindings for the demo page in `www/`.

use wasm_bindgen::prelude::*;
use wavelab::fields::{truncation_for_radius, BerryField, ToralEigenfunction};
use wavelab::lattice::{self, BoundForm, LatticeShell};
use wavelab::nodal::{self, FieldGrid};
use wavelab::rng;

fn js(e: wavelab::WaveError) -> JsError {
    JsError::new(&e.to_string())
}

/// Blue for negative, red for positive, white at zero.
fn diverging(t: f64) -> [u8; 3] {
    let t = t.clamp(-1.0, 1.0);
    let fade = |c: f64| (255.0 * (1.0 - t.abs()) + c * t.abs()) as u8;
    if t >= 0.0 {
        [fade(178.0), fade(24.0), fade(43.0)]
    } else {
        [fade(33.0), fade(102.0), fade(172.0)]
    }
}

fn hashed_color(label: u32, sign: i8) -> [u8; 3] {
    let mut h = label.wrapping_mul(2654435761);
    h ^= h >> 15;
    let shade = 140 + (h % 100) as u8;
    let accent = 60 + ((h >> 8) % 80) as u8;
    if sign > 0 {
        [shade, accent, accent / 2]
    } else {
        [accent / 2, accent, shade]
    }
}

/// `[x0, y0, x1, y1, ...]` sorted by angle.
#[wasm_bindgen]
pub fn shell_points(energy: u32) -> Vec<i32> {
    LatticeShell::enumerate(energy as u64)
        .points()
        .iter()
        .flat_map(|p| [p[0] as i32, p[1] as i32])
        .collect()
}

fn summary(energy: u32) -> wavelab::Result<serde_json::Value> {
    let shell = LatticeShell::enumerate(energy as u64);
    if shell.is_empty() {
        return Ok(serde_json::json!({ "E": energy, "size": 0 }));
    }
    let weights = vec![1.0 / shell.len() as f64; shell.len()];
    let discrepancy = lattice::angular_discrepancy(&lattice::angular_measure(&shell, &weights)?)?;
    let census = if shell.len() <= 64 {
        Some(lattice::check_condition_i(&shell, 0.25, 4, BoundForm::Power)?)
    } else {
        None
    };
    Ok(serde_json::json!({
        "E": energy,
        "size": shell.len(),
        "discrepancy": discrepancy,
        "condition": census,
    }))
}

/// Shell size, angular discrepancy and the census of minimally vanishing
/// subsets up to length 4, as JSON.
#[wasm_bindgen]
pub fn shell_summary(energy: u32) -> Result<String, JsError> {
    summary(energy).map(|v| v.to_string()).map_err(js)
}

/// RGBA image of a toral eigenfunction on an `size x size` grid, y up.
#[wasm_bindgen]
pub fn render_toral(energy: u32, random: bool, seed: u32, size: usize) -> Result<Vec<u8>, JsError> {
    toral_rgba(energy, random, seed, size).map_err(js)
}

fn toral_rgba(energy: u32, random: bool, seed: u32, size: usize) -> wavelab::Result<Vec<u8>> {
    let shell = LatticeShell::enumerate(energy as u64);
    let f = if random {
        ToralEigenfunction::random(shell, &mut rng::stream(seed as u64, 0))
    } else {
        ToralEigenfunction::flat(shell)
    }?;
    let values = f.grid(size)?;
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut rgba = vec![0u8; size * size * 4];
    for i in 0..size {
        for j in 0..size {
            let [r, g, b] = diverging(values[i * size + j] / peak);
            let k = ((size - 1 - j) * size + i) * 4;
            rgba[k..k + 4].copy_from_slice(&[r, g, b, 255]);
        }
    }
    Ok(rgba)
}

/// A Berry sample on a disk, coloured by nodal domain.
#[wasm_bindgen]
pub struct NodalImage {
    width: usize,
    pixels: Vec<u8>,
    domains: usize,
    interior: usize,
}

#[wasm_bindgen]
impl NodalImage {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> Vec<u8> {
        self.pixels.clone()
    }

    /// Domains meeting the disk.
    #[wasm_bindgen(getter)]
    pub fn domains(&self) -> usize {
        self.domains
    }

    /// Domains not touching the boundary circle.
    #[wasm_bindgen(getter)]
    pub fn interior(&self) -> usize {
        self.interior
    }
}

#[wasm_bindgen]
pub fn render_berry_nodal(seed: u32, radius: f64, cells_per_unit: f64) -> Result<NodalImage, JsError> {
    nodal_image(seed, radius, cells_per_unit).map_err(js)
}

fn nodal_image(seed: u32, radius: f64, cells_per_unit: f64) -> wavelab::Result<NodalImage> {
    if !(radius > 0.0 && radius <= 40.0) {
        return Err(wavelab::WaveError::Precondition(format!(
            "radius {radius} outside (0, 40]"
        )));
    }
    let f = BerryField::sample(truncation_for_radius(radius), &mut rng::stream(seed as u64, 0))?;
    let grid = FieldGrid::sample_disk(&f, [0.0, 0.0], radius, cells_per_unit)?;
    let census = nodal::label_components(&grid);
    let m = grid.m();
    let mut pixels = vec![0u8; m * m * 4];
    for i in 0..m {
        for j in 0..m {
            let label = census.labels[i * m + j];
            if label == u32::MAX {
                continue;
            }
            let [r, g, b] = hashed_color(label, census.components[label as usize].sign);
            let k = ((m - 1 - j) * m + i) * 4;
            pixels[k..k + 4].copy_from_slice(&[r, g, b, 255]);
        }
    }
    Ok(NodalImage {
        width: m,
        pixels,
        domains: census.total(),
        interior: nodal::count_local(&census, f64::INFINITY),
    })
}
