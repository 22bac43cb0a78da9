//! Self-supervised training-sample synthesis.
//!
//! A sample composites two RGB-D sources with an arbitrary binary mask, then
//! perturbs the composite depth to simulate the failure modes of depth
//! estimators: morphological boundary drift, blur, and covered-up holes. The
//! unperturbed composite and both source layers ride along as supervision
//! targets.

pub mod blur;
pub mod crop;
pub mod holes;
pub mod maskgen;
pub mod morph;

pub use blur::{gaussian_blur, gaussian_kernel};
pub use crop::{sample_crop, BBox, CropSpec};
pub use holes::{find_holes, hole_perturb, Hole};
pub use maskgen::{synthesize_mask, MaskKindTag};
pub use morph::{degrade_mask, dilate, dilate_mask, erode, erode_mask, random_morph, DegradeOp};

use crate::compose::{composite_depth, composite_rgb};
use crate::error::{Error, Result};
use crate::raster::{DepthMap, Mask, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

/// Tunables for the three perturbation families.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PerturbConfig {
    /// Inclusive interval for dilation/erosion iteration counts.
    pub morph_iter_range: (usize, usize),
    /// Odd morphology kernel size.
    pub morph_kernel: usize,
    /// Sigma interval for the small-blur branch.
    pub blur_small_sigma: (f64, f64),
    /// Sigma interval for the large-blur branch.
    pub blur_large_sigma: (f64, f64),
    /// Probability of taking the small-blur branch.
    pub blur_small_prob: f64,
    /// Probability of the dilate-first stage order.
    pub order_scheme_prob: f64,
    /// Outer-neighborhood width for hole perturbation, in pixels.
    pub hole_ring_width: usize,
    /// Probability of applying the hole perturbation.
    pub hole_perturb_prob: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            morph_iter_range: (1, 5),
            morph_kernel: 3,
            blur_small_sigma: (0.0, 1.0),
            blur_large_sigma: (1.0, 5.0),
            blur_small_prob: 0.5,
            order_scheme_prob: 0.5,
            hole_ring_width: 10,
            hole_perturb_prob: 0.5,
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        let ok_interval = |(lo, hi): (f64, f64)| lo <= hi && lo >= 0.0;
        let ok_prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.morph_iter_range.0 > self.morph_iter_range.1 {
            return Err(Error::Config("morph_iter_range is empty".into()));
        }
        if self.morph_kernel % 2 == 0 || self.morph_kernel < 3 {
            return Err(Error::Config(format!(
                "morph_kernel must be odd and >= 3, got {}",
                self.morph_kernel
            )));
        }
        if !ok_interval(self.blur_small_sigma) || !ok_interval(self.blur_large_sigma) {
            return Err(Error::Config("blur sigma intervals must be non-empty and non-negative".into()));
        }
        if !ok_prob(self.blur_small_prob)
            || !ok_prob(self.order_scheme_prob)
            || !ok_prob(self.hole_perturb_prob)
        {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Copy with the hole perturbation probability replaced.
    pub fn with_hole_prob(&self, p: f64) -> PerturbConfig {
        PerturbConfig {
            hole_perturb_prob: p,
            ..self.clone()
        }
    }
}

fn draw_interval<R: Rng>((lo, hi): (f64, f64), rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Full perturbation pipeline: random morphology, then Gaussian blur with a
/// sigma drawn from the small or large interval, then (with probability
/// `hole_perturb_prob`) the hole perturbation.
///
/// The rng is consumed in a fixed draw order — morph iteration counts, stage
/// order, blur branch, sigma, hole coin, per-hole fill values — so the
/// pipeline can be replayed stage by stage from the same seed.
pub fn perturb<R: Rng>(
    d: &DepthMap,
    m: &Mask,
    cfg: &PerturbConfig,
    rng: &mut R,
) -> Result<DepthMap> {
    let out = random_morph(d, cfg, rng)?;
    let small = rng.random_bool(cfg.blur_small_prob);
    let sigma = draw_interval(
        if small {
            cfg.blur_small_sigma
        } else {
            cfg.blur_large_sigma
        },
        rng,
    );
    let out = gaussian_blur(&out, sigma)?;
    if cfg.hole_perturb_prob > 0.0 && rng.random_bool(cfg.hole_perturb_prob) {
        hole_perturb(&out, m, cfg.hole_ring_width, rng)
    } else {
        Ok(out)
    }
}

/// One RGB-D source record.
#[derive(Debug, Clone)]
pub struct RgbdRecord {
    pub rgb: RgbImage,
    pub depth: DepthMap,
}

/// Config-gated photometric augmentation hook (contrast, saturation, JPEG
/// artifacts and the like). Currently a pass-through: the gate exists so
/// datasets record whether the pass ran, but no transform is implemented.
pub fn photometric_augment(rgb: &RgbImage, enabled: bool) -> RgbImage {
    let _ = enabled;
    rgb.clone()
}

/// Aligned training bundle emitted by the generator.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub rgb: RgbImage,
    pub depth: DepthMap,
    pub perturbed: DepthMap,
    pub mask: Mask,
    pub layer1: DepthMap,
    pub layer2: DepthMap,
    pub seed: u64,
}

impl TrainingSample {
    /// The construction guarantee: `depth == composite(layer1, layer2, mask)`
    /// bit for bit.
    pub fn recomposition_holds(&self) -> bool {
        match composite_depth(&self.layer1, &self.layer2, &self.mask) {
            Ok(re) => re
                .values()
                .iter()
                .zip(self.depth.values())
                .all(|(a, b)| a.to_bits() == b.to_bits()),
            Err(_) => false,
        }
    }
}

/// Synthesizes one training sample from two sources and a binary mask.
///
/// Sources are resized to `patch` (bilinear), the mask with nearest-neighbor
/// so it stays binary. All randomness comes from `seed`.
pub fn generate_sample(
    source_a: &RgbdRecord,
    source_b: &RgbdRecord,
    m: &Mask,
    cfg: &PerturbConfig,
    patch: usize,
    seed: u64,
) -> Result<TrainingSample> {
    if !m.is_binary() {
        return Err(Error::NonBinaryMask {
            context: "training composition",
        });
    }
    cfg.validate()?;
    let mask = if m.width() == patch && m.height() == patch {
        m.clone()
    } else {
        m.resize_nearest(patch, patch)
    };
    let resize = |r: &RgbdRecord| -> Result<(RgbImage, DepthMap)> {
        let rgb = if r.rgb.width() == patch && r.rgb.height() == patch {
            r.rgb.clone()
        } else {
            r.rgb.resize_bilinear(patch, patch)
        };
        let depth = if r.depth.width() == patch && r.depth.height() == patch {
            r.depth.clone()
        } else {
            r.depth.resize_bilinear(patch, patch)?
        };
        Ok((rgb, depth))
    };
    let (rgb1, layer1) = resize(source_a)?;
    let (rgb2, layer2) = resize(source_b)?;
    let depth = composite_depth(&layer1, &layer2, &mask)?;
    let rgb = composite_rgb(&rgb1, &rgb2, &mask)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturbed = perturb(&depth, &mask, cfg, &mut rng)?;
    Ok(TrainingSample {
        rgb,
        depth,
        perturbed,
        mask,
        layer1,
        layer2,
        seed,
    })
}

/// Per-sample sidecar recorded next to the rasters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub mask_kind: Option<MaskKindTag>,
    pub perturb: PerturbConfig,
}

/// Directory of one emitted sample: `samples/<idx>/`.
pub fn sample_dir(root: &Path, idx: usize) -> PathBuf {
    root.join("samples").join(format!("{idx:06}"))
}

/// Writes the sample directory layout:
/// `{rgb.png, depth.pfm, perturbed.pfm, mask.png, layer1.pfm, layer2.pfm, meta.json}`.
pub fn write_sample(
    root: &Path,
    idx: usize,
    sample: &TrainingSample,
    kind: Option<MaskKindTag>,
    cfg: &PerturbConfig,
) -> Result<()> {
    let dir = sample_dir(root, idx);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    crate::io::save_rgb_png(&sample.rgb, &dir.join("rgb.png"))?;
    crate::io::save_pfm(&sample.depth, &dir.join("depth.pfm"))?;
    crate::io::save_pfm(&sample.perturbed, &dir.join("perturbed.pfm"))?;
    crate::io::save_mask_png(&sample.mask, &dir.join("mask.png"))?;
    crate::io::save_pfm(&sample.layer1, &dir.join("layer1.pfm"))?;
    crate::io::save_pfm(&sample.layer2, &dir.join("layer2.pfm"))?;
    let meta = SampleMeta {
        seed: sample.seed,
        mask_kind: kind,
        perturb: cfg.clone(),
    };
    crate::io::save_json(&meta, &dir.join("meta.json"))
}

/// Loads one emitted sample back.
pub fn read_sample(root: &Path, idx: usize) -> Result<(TrainingSample, SampleMeta)> {
    let dir = sample_dir(root, idx);
    let meta: SampleMeta = crate::io::load_json(&dir.join("meta.json"))?;
    let sample = TrainingSample {
        rgb: crate::io::load_rgb_png(&dir.join("rgb.png"))?,
        depth: crate::io::load_pfm(&dir.join("depth.pfm"))?,
        perturbed: crate::io::load_pfm(&dir.join("perturbed.pfm"))?,
        mask: crate::io::load_mask_png(&dir.join("mask.png"))?,
        layer1: crate::io::load_pfm(&dir.join("layer1.pfm"))?,
        layer2: crate::io::load_pfm(&dir.join("layer2.pfm"))?,
        seed: meta.seed,
    };
    Ok((sample, meta))
}

/// Loads every sample under `root/samples/`, ordered by index.
pub fn load_dataset(root: &Path) -> Result<Vec<TrainingSample>> {
    let samples_dir = root.join("samples");
    let mut indices = Vec::new();
    let entries =
        std::fs::read_dir(&samples_dir).map_err(|e| Error::io(&samples_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&samples_dir, e))?;
        if let Some(name) = entry.file_name().to_str() {
            if let Ok(idx) = name.parse::<usize>() {
                indices.push(idx);
            }
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    indices
        .into_iter()
        .map(|idx| read_sample(root, idx).map(|(s, _)| s))
        .collect()
}
