//! Procedural binary masks: blobs, horizon-curve sky regions, and blobs with
//! interior holes. These stand in for segmentation-dataset masks so the full
//! pipeline runs without external data.

use crate::datagen::holes::find_holes;
use crate::raster::Mask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Procedural mask family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskKindTag {
    Object,
    Sky,
    HumanWithHoles,
}

impl std::fmt::Display for MaskKindTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MaskKindTag::Object => write!(f, "object"),
            MaskKindTag::Sky => write!(f, "sky"),
            MaskKindTag::HumanWithHoles => write!(f, "human-with-holes"),
        }
    }
}

/// Star-convex blob: radius profile with angular harmonics around a random
/// center. The harmonic amplitudes keep the boundary irregular enough that
/// small morphological kernels visibly reshape it.
fn blob_bits<R: Rng>(width: usize, height: usize, rng: &mut R) -> Vec<bool> {
    let min_dim = width.min(height) as f64;
    let cx = rng.random_range(0.32..0.68) * width as f64;
    let cy = rng.random_range(0.32..0.68) * height as f64;
    let r0 = rng.random_range(0.18..0.34) * min_dim;
    let mut amps = [0.0f64; 5];
    let mut phases = [0.0f64; 5];
    for m in 0..5 {
        amps[m] = rng.random_range(0.02..0.22) / (m as f64 + 1.0).sqrt();
        phases[m] = rng.random_range(0.0..std::f64::consts::TAU);
    }
    let mut bits = vec![false; width * height];
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let theta = dy.atan2(dx);
            let mut r = 1.0;
            for m in 0..5 {
                r += amps[m] * ((m as f64 + 2.0) * theta + phases[m]).cos();
            }
            bits[y * width + x] = (dx * dx + dy * dy).sqrt() < r0 * r;
        }
    }
    bits
}

fn fill_interior_holes(width: usize, height: usize, bits: &mut [bool]) {
    let m = Mask::from_bits(width, height, bits).expect("sizes match");
    for hole in find_holes(&m).expect("binary by construction") {
        for i in hole.pixels {
            bits[i] = true;
        }
    }
}

fn sky_bits<R: Rng>(width: usize, height: usize, rng: &mut R) -> Vec<bool> {
    let base = rng.random_range(0.22..0.62) * height as f64;
    let mut waves = [(0.0f64, 0.0f64, 0.0f64); 3];
    for (m, wave) in waves.iter_mut().enumerate() {
        *wave = (
            rng.random_range(0.0..0.07) * height as f64,
            (m + 1) as f64,
            rng.random_range(0.0..std::f64::consts::TAU),
        );
    }
    let mut bits = vec![false; width * height];
    for x in 0..width {
        let mut horizon = base;
        for &(amp, freq, phase) in &waves {
            horizon += amp * (std::f64::consts::TAU * freq * x as f64 / width as f64 + phase).sin();
        }
        let h_row = horizon.clamp(1.0, (height - 1) as f64) as usize;
        for y in 0..h_row {
            bits[y * width + x] = true;
        }
    }
    bits
}

fn carve_holes<R: Rng>(width: usize, height: usize, bits: &mut [bool], rng: &mut R) {
    // Erode the blob so carved ellipses stay strictly interior.
    let m = Mask::from_bits(width, height, bits).expect("sizes match");
    let eroded = crate::datagen::morph::erode_mask(&m, 5).expect("odd kernel");
    let interior: Vec<usize> = (0..width * height)
        .filter(|&i| eroded.alpha()[i] == 1.0)
        .collect();
    if interior.is_empty() {
        return;
    }
    let n_holes = rng.random_range(1..=3usize);
    let min_dim = width.min(height) as f64;
    for _ in 0..n_holes {
        let center = interior[rng.random_range(0..interior.len())];
        let (cx, cy) = ((center % width) as f64, (center / width) as f64);
        let rx = rng.random_range(0.015..0.06) * min_dim;
        let ry = rng.random_range(0.015..0.06) * min_dim;
        for y in 0..height {
            for x in 0..width {
                let nx = (x as f64 - cx) / rx.max(1.0);
                let ny = (y as f64 - cy) / ry.max(1.0);
                if nx * nx + ny * ny < 1.0 && eroded.alpha()[y * width + x] == 1.0 {
                    bits[y * width + x] = false;
                }
            }
        }
    }
}

fn coverage(bits: &[bool]) -> f64 {
    bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64
}

/// Synthesizes a procedural binary mask of the requested kind.
///
/// Masks always cover between 5% and 80% of the pixels, and
/// `human-with-holes` masks always contain at least one detectable hole; out
/// of range draws are retried with derived sub-seeds.
pub fn synthesize_mask(kind: MaskKindTag, width: usize, height: usize, seed: u64) -> Mask {
    for attempt in 0..64u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let mut bits = match kind {
            MaskKindTag::Object => {
                let mut b = blob_bits(width, height, &mut rng);
                fill_interior_holes(width, height, &mut b);
                b
            }
            MaskKindTag::Sky => sky_bits(width, height, &mut rng),
            MaskKindTag::HumanWithHoles => {
                let mut b = blob_bits(width, height, &mut rng);
                fill_interior_holes(width, height, &mut b);
                b
            }
        };
        if kind == MaskKindTag::HumanWithHoles {
            carve_holes(width, height, &mut bits, &mut rng);
        }
        let cov = coverage(&bits);
        if !(0.05..=0.8).contains(&cov) {
            continue;
        }
        let m = Mask::from_bits(width, height, &bits).expect("sizes match");
        if kind == MaskKindTag::HumanWithHoles
            && find_holes(&m).expect("binary").is_empty()
        {
            continue;
        }
        return m;
    }
    // Deterministic fallback: centered disc, guaranteed in range.
    let mut bits = vec![false; width * height];
    let r = 0.3 * width.min(height) as f64;
    for y in 0..height {
        for x in 0..width {
            let dx = x as f64 - width as f64 / 2.0;
            let dy = y as f64 - height as f64 / 2.0;
            bits[y * width + x] = (dx * dx + dy * dy).sqrt() < r;
        }
    }
    Mask::from_bits(width, height, &bits).expect("sizes match")
}
