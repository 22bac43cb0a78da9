//! Compositing and merging arithmetic, depth normalization, and closed-form
//! scale-shift alignment.
//!
//! `composite` and `merge_layers` are the same pixelwise blend
//! `alpha * a + (1 - alpha) * b`; they are kept as separate entry points
//! because they sit at different ends of the pipeline (data synthesis vs.
//! layer merging) with different mask-kind requirements.

use crate::error::{Error, Result};
use crate::raster::{check_dims, DepthMap, Mask, RgbImage};

/// Pixelwise blend of two depth maps: `m*a + (1-m)*b`.
///
/// Inputs must be fully valid and share dimensions. For binary masks the
/// output restricted to either mask region is bit-identical to the
/// corresponding layer.
pub fn composite_depth(a: &DepthMap, b: &DepthMap, m: &Mask) -> Result<DepthMap> {
    check_dims("composite", a.width(), a.height(), b.width(), b.height())?;
    check_dims("composite", a.width(), a.height(), m.width(), m.height())?;
    if !a.fully_valid() || !b.fully_valid() {
        return Err(Error::Numeric(
            "compositing requires fully valid inputs".into(),
        ));
    }
    let values = blend(a.values(), b.values(), m.alpha());
    DepthMap::new(a.width(), a.height(), values)
}

/// Pixelwise blend of two RGB images, per channel.
pub fn composite_rgb(a: &RgbImage, b: &RgbImage, m: &Mask) -> Result<RgbImage> {
    check_dims("composite", a.width(), a.height(), b.width(), b.height())?;
    check_dims("composite", a.width(), a.height(), m.width(), m.height())?;
    let planes = [
        blend(a.plane(0), b.plane(0), m.alpha()),
        blend(a.plane(1), b.plane(1), m.alpha()),
        blend(a.plane(2), b.plane(2), m.alpha()),
    ];
    Ok(RgbImage::from_planes_unchecked(a.width(), a.height(), planes))
}

/// Merges two refined layers with the mask: `m*d1 + (1-m)*d2`.
///
/// Soft masks are allowed here (inference merge); the bit-exactness guarantee
/// applies to binary masks only.
pub fn merge_layers(d1: &DepthMap, d2: &DepthMap, m: &Mask) -> Result<DepthMap> {
    composite_depth(d1, d2, m)
}

fn blend(a: &[f64], b: &[f64], alpha: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(alpha)
        .map(|((&x, &y), &al)| {
            // Exact passthrough on the binary branches so region restriction
            // reproduces the layer bit for bit.
            if al == 1.0 {
                x
            } else if al == 0.0 {
                y
            } else {
                al * x + (1.0 - al) * y
            }
        })
        .collect()
}

/// Result of [`normalize_depth`]: the remapped map plus a degeneracy flag.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub map: DepthMap,
    /// Set when the input was constant and the output was forced to 5.0.
    pub degenerate: bool,
}

/// Working range of normalized inverse depth.
pub const DEPTH_RANGE: f64 = 10.0;

/// Affine min-max remap of the valid pixels onto [0, 10].
///
/// A constant input cannot be stretched; it is returned as all-5.0 with
/// `degenerate` set so batch evaluation never aborts.
pub fn normalize_depth(d: &DepthMap) -> Result<Normalized> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut n = 0usize;
    for (i, &v) in d.values().iter().enumerate() {
        if d.is_valid(i) {
            lo = lo.min(v);
            hi = hi.max(v);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoValidOverlap);
    }
    if lo == hi {
        let values = d
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| if d.is_valid(i) { DEPTH_RANGE / 2.0 } else { v })
            .collect();
        return Ok(Normalized {
            map: d.map_values(values),
            degenerate: true,
        });
    }
    let scale = DEPTH_RANGE / (hi - lo);
    let values = d
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if d.is_valid(i) { (v - lo) * scale } else { v })
        .collect();
    Ok(Normalized {
        map: d.map_values(values),
        degenerate: false,
    })
}

/// Closed-form least-squares fit of `s*pred + t` to `gt`.
#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub scale: f64,
    pub shift: f64,
    pub aligned: DepthMap,
    /// Set when pred was constant over the valid overlap (s forced to 0).
    pub degenerate: bool,
}

/// Solves `argmin_(s,t) sum (s*pred + t - gt)^2` over the valid overlap via
/// the 2x2 normal equations, and applies the fit to every pred pixel.
///
/// A constant pred has no unique scale; the fit degenerates to `s = 0,
/// t = mean(gt)` and is flagged.
pub fn align_scale_shift(pred: &DepthMap, gt: &DepthMap) -> Result<AlignmentResult> {
    check_dims("align", pred.width(), pred.height(), gt.width(), gt.height())?;
    let mut n = 0.0f64;
    let mut sp = 0.0;
    let mut sg = 0.0;
    let mut spp = 0.0;
    let mut spg = 0.0;
    for i in 0..pred.values().len() {
        if pred.is_valid(i) && gt.is_valid(i) {
            let p = pred.values()[i];
            let g = gt.values()[i];
            n += 1.0;
            sp += p;
            sg += g;
            spp += p * p;
            spg += p * g;
        }
    }
    if n < 2.0 {
        return Err(Error::NoValidOverlap);
    }
    let det = n * spp - sp * sp;
    // det == 0 exactly when pred is constant on the overlap.
    let (scale, shift, degenerate) = if det.abs() <= f64::EPSILON * n * spp.max(1.0) {
        (0.0, sg / n, true)
    } else {
        let s = (n * spg - sp * sg) / det;
        let t = (sg - s * sp) / n;
        (s, t, false)
    };
    let values = pred.values().iter().map(|&p| scale * p + shift).collect();
    Ok(AlignmentResult {
        scale,
        shift,
        aligned: pred.map_values(values),
        degenerate,
    })
}
