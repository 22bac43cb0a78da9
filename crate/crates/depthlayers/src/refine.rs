//! The layered refinement engine: run a backend twice with the mask and its
//! inverse, then merge the two completed layers with the mask. Also houses
//! instance-map inference and the classical layered-propagation baseline.

use crate::completion::{propagate_fill, FillRegion};
use crate::compose::merge_layers;
use crate::datagen::morph::{dilate_mask, erode_mask};
use crate::error::{Error, Result};
use crate::raster::{check_dims, DepthMap, InstanceMap, Mask, RgbImage};

/// A mask-guided layer refiner: completes/refines the mask==0 region based on
/// the mask==1 region while correcting values.
///
/// Backends receive the mask alongside both the depth and RGB inputs; running
/// the same backend with the inverse mask produces the other layer.
pub trait RefinerBackend: Sync {
    fn refine_layer(&self, depth: &DepthMap, rgb: &RgbImage, mask: &Mask) -> Result<DepthMap>;

    fn name(&self) -> &'static str {
        "backend"
    }
}

/// Pass-through backend for engine testing.
pub struct IdentityBackend;

impl RefinerBackend for IdentityBackend {
    fn refine_layer(&self, depth: &DepthMap, _rgb: &RgbImage, _mask: &Mask) -> Result<DepthMap> {
        Ok(depth.clone())
    }

    fn name(&self) -> &'static str {
        "identity"
    }
}

/// Propagation backend: fast-marching completion of the mask==0 region from
/// the mask==1 region. The RGB guide is unused.
pub struct PropagationBackend {
    pub radius: usize,
}

impl Default for PropagationBackend {
    fn default() -> Self {
        Self { radius: 5 }
    }
}

impl RefinerBackend for PropagationBackend {
    fn refine_layer(&self, depth: &DepthMap, _rgb: &RgbImage, mask: &Mask) -> Result<DepthMap> {
        let unknown: Vec<bool> = mask.alpha().iter().map(|a| *a < 0.5).collect();
        if unknown.iter().all(|&u| !u) {
            return Ok(depth.clone());
        }
        if unknown.iter().all(|&u| u) {
            // Nothing known to propagate from; leave the layer untouched. The
            // merge never reads it (its mask weight is zero everywhere).
            return Ok(depth.clone());
        }
        let fill = FillRegion::from_bits(depth.width(), depth.height(), &unknown)?;
        propagate_fill(depth, &fill, self.radius)
    }

    fn name(&self) -> &'static str {
        "propagation"
    }
}

/// The two completed layers and their mask merge.
#[derive(Debug, Clone)]
pub struct LayeredResult {
    pub layer1: DepthMap,
    pub layer2: DepthMap,
    pub merged: DepthMap,
}

/// Runs the backend twice — with the mask and with its inverse — and merges
/// the layers with the mask.
///
/// Soft masks are binarized for the backend passes; the final merge uses the
/// original (possibly soft) alpha. For binary masks the merged output
/// restricted to either region is bit-identical to the corresponding layer.
pub fn refine_layered(
    backend: &dyn RefinerBackend,
    d: &DepthMap,
    rgb: &RgbImage,
    m: &Mask,
) -> Result<LayeredResult> {
    check_dims("refine_layered", d.width(), d.height(), m.width(), m.height())?;
    check_dims(
        "refine_layered",
        d.width(),
        d.height(),
        rgb.width(),
        rgb.height(),
    )?;
    let hard = m.binarized();
    let layer1 = backend
        .refine_layer(d, rgb, &hard)
        .map_err(|e| Error::BackendFailure {
            backend: backend.name().to_string(),
            layer: 1,
            source: Box::new(e),
        })?;
    let layer2 = backend
        .refine_layer(d, rgb, &hard.inverse())
        .map_err(|e| Error::BackendFailure {
            backend: backend.name().to_string(),
            layer: 2,
            source: Box::new(e),
        })?;
    let merged = merge_layers(&layer1, &layer2, m)?;
    Ok(LayeredResult {
        layer1,
        layer2,
        merged,
    })
}

/// Single backend pass with the mask as a plain conditioning channel — no
/// layering, no merge.
pub fn direct_refine(
    backend: &dyn RefinerBackend,
    d: &DepthMap,
    rgb: &RgbImage,
    m: &Mask,
) -> Result<DepthMap> {
    backend.refine_layer(d, rgb, &m.binarized())
}

/// Instance-map inference: refine once per qualifying instance mask, then
/// keep, per pixel, the candidate that moved farthest from the initial depth.
///
/// Qualifying instances cover at least `min_frac` of the image (1% by
/// default); ties in the per-pixel selection break toward the lowest
/// instance id. With no qualifying instance the input is returned unchanged.
pub fn refine_instances(
    backend: &dyn RefinerBackend,
    d: &DepthMap,
    rgb: &RgbImage,
    inst: &InstanceMap,
    min_frac: f64,
) -> Result<DepthMap> {
    check_dims(
        "refine_instances",
        d.width(),
        d.height(),
        inst.width(),
        inst.height(),
    )?;
    if inst.instance_ids().is_empty() {
        return Err(Error::EmptyInstanceMap);
    }
    let candidates = inst.qualifying_instances(min_frac);
    if candidates.is_empty() {
        return Ok(d.clone());
    }
    let mut refined = Vec::with_capacity(candidates.len());
    for (_, mask) in &candidates {
        refined.push(refine_layered(backend, d, rgb, mask)?.merged);
    }
    let mut out = vec![0.0f64; d.values().len()];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = select_farthest(d.values()[i], refined.iter().map(|r| r.values()[i]));
    }
    Ok(d.map_values(out))
}

/// Picks the candidate with the largest absolute deviation from `initial`;
/// ties keep the earliest candidate (candidates arrive in ascending
/// instance-id order).
fn select_farthest(initial: f64, candidates: impl Iterator<Item = f64>) -> f64 {
    let mut best = initial;
    let mut best_dev = f64::NEG_INFINITY;
    for v in candidates {
        let dev = (initial - v).abs();
        if dev > best_dev {
            best = v;
            best_dev = dev;
        }
    }
    best
}

/// Classical layered baseline: fast-marching completion run twice with
/// safety margins around the mask boundary.
///
/// The foreground layer outpaints from the eroded mask (everything outside
/// the eroded mask is refilled), the background layer inpaints the dilated
/// mask, and the two are merged with the original mask. Defaults follow the
/// 5x5 dilation/erosion kernels; a mask fully erased by erosion falls back to
/// a 3x3 kernel.
pub fn baseline_layered_propagation(
    d: &DepthMap,
    m: &Mask,
    dilate_k: usize,
    erode_k: usize,
    radius: usize,
) -> Result<DepthMap> {
    if !m.is_binary() {
        return Err(Error::NonBinaryMask {
            context: "layered propagation baseline",
        });
    }
    check_dims("baseline", d.width(), d.height(), m.width(), m.height())?;
    let (w, h) = (d.width(), d.height());

    let mut eroded = erode_mask(m, erode_k)?;
    if eroded.coverage_count() == 0 && m.coverage_count() > 0 {
        // Erosion erased the mask; retry with the smallest kernel.
        eroded = erode_mask(m, 3)?;
        if eroded.coverage_count() == 0 {
            eroded = m.clone();
        }
    }
    let dilated = dilate_mask(m, dilate_k)?;

    // Layer 1 (foreground): outpaint from the eroded core.
    let unknown1: Vec<bool> = eroded.alpha().iter().map(|a| *a < 0.5).collect();
    let layer1 = if unknown1.iter().all(|&u| !u) {
        d.clone()
    } else {
        propagate_fill(d, &FillRegion::from_bits(w, h, &unknown1)?, radius)?
    };

    // Layer 2 (background): inpaint the dilated mask region.
    let unknown2: Vec<bool> = dilated.alpha().iter().map(|a| *a >= 0.5).collect();
    let layer2 = if unknown2.iter().all(|&u| u) || unknown2.iter().all(|&u| !u) {
        // Mask covers everything or nothing: the fill is degenerate, and the
        // merge only reads this layer where its weight is zero.
        d.clone()
    } else {
        propagate_fill(d, &FillRegion::from_bits(w, h, &unknown2)?, radius)?
    };

    merge_layers(&layer1, &layer2, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::composite_depth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_mask(n: usize, x0: usize, y0: usize, side: usize) -> Mask {
        let mut bits = vec![false; n * n];
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                bits[y * n + x] = true;
            }
        }
        Mask::from_bits(n, n, &bits).unwrap()
    }

    fn two_plane_scene(n: usize, m: &Mask) -> (DepthMap, RgbImage) {
        let fg = DepthMap::constant(n, n, 8.0);
        let bg = DepthMap::constant(n, n, 2.0);
        let d = composite_depth(&fg, &bg, m).unwrap();
        (d, RgbImage::constant(n, n, [0.5; 3]))
    }

    #[test]
    fn identity_backend_reproduces_input() {
        let m = square_mask(16, 4, 4, 6);
        let (d, rgb) = two_plane_scene(16, &m);
        let out = refine_layered(&IdentityBackend, &d, &rgb, &m).unwrap();
        assert_eq!(out.merged, d);
        assert_eq!(out.layer1, d);
    }

    #[test]
    fn merged_restricted_to_mask_is_layer1_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20usize;
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = DepthMap::new(n, n, vals).unwrap();
        let rgb = RgbImage::constant(n, n, [0.4; 3]);
        let m = square_mask(n, 5, 6, 8);
        let out = refine_layered(&PropagationBackend::default(), &d, &rgb, &m).unwrap();
        for i in 0..n * n {
            let expect = if m.alpha()[i] == 1.0 {
                out.layer1.values()[i]
            } else {
                out.layer2.values()[i]
            };
            assert_eq!(out.merged.values()[i].to_bits(), expect.to_bits());
        }
    }

    #[test]
    fn propagation_backend_on_clean_composite_keeps_edge_exact() {
        let n = 24;
        let m = square_mask(n, 6, 6, 10);
        let (d, rgb) = two_plane_scene(n, &m);
        let out = refine_layered(&PropagationBackend::default(), &d, &rgb, &m).unwrap();
        // The clean composite's mask region is exactly 8.0 and its complement
        // exactly 2.0, so the merged boundary must coincide with the mask
        // edge: zero transition pixels off the mask.
        for i in 0..n * n {
            let expect = if m.alpha()[i] == 1.0 { 8.0 } else { 2.0 };
            assert_eq!(out.merged.values()[i], expect, "pixel {i}");
        }
    }

    #[test]
    fn constant_input_stays_constant_through_propagation() {
        let n = 16;
        let m = square_mask(n, 4, 4, 7);
        let d = DepthMap::constant(n, n, 5.5);
        let rgb = RgbImage::constant(n, n, [0.5; 3]);
        let out = refine_layered(&PropagationBackend::default(), &d, &rgb, &m).unwrap();
        for &v in out.merged.values() {
            assert!((v - 5.5).abs() < 1e-6);
        }
    }

    #[test]
    fn direct_refine_equals_layer1() {
        let n = 16;
        let m = square_mask(n, 3, 3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = DepthMap::new(n, n, vals).unwrap();
        let rgb = RgbImage::constant(n, n, [0.2; 3]);
        let direct = direct_refine(&PropagationBackend::default(), &d, &rgb, &m).unwrap();
        let layered = refine_layered(&PropagationBackend::default(), &d, &rgb, &m).unwrap();
        assert_eq!(direct, layered.layer1);
    }

    #[test]
    fn instances_single_candidate_everywhere() {
        let n = 16;
        let m = square_mask(n, 4, 4, 6);
        let (d, rgb) = two_plane_scene(n, &m);
        let inst = InstanceMap::from_mask(&m);
        let via_instances =
            refine_instances(&PropagationBackend::default(), &d, &rgb, &inst, 0.01).unwrap();
        let direct = refine_layered(&PropagationBackend::default(), &d, &rgb, &m).unwrap();
        assert_eq!(via_instances, direct.merged);
    }

    #[test]
    fn instances_identity_candidates_return_input() {
        let n = 12;
        let m = square_mask(n, 3, 3, 5);
        let (d, rgb) = two_plane_scene(n, &m);
        let inst = InstanceMap::from_mask(&m);
        let out = refine_instances(&IdentityBackend, &d, &rgb, &inst, 0.01).unwrap();
        assert_eq!(out, d);
    }

    #[test]
    fn selection_rule_picks_largest_deviation() {
        assert_eq!(select_farthest(0.5, [0.6, 0.45].into_iter()), 0.6);
        assert_eq!(select_farthest(0.5, [0.45, 0.6].into_iter()), 0.6);
        // Tie: first candidate wins.
        assert_eq!(select_farthest(5.0, [5.2, 4.8].into_iter()), 5.2);
    }

    /// Backend that shifts the whole map by `covered` when the mask covers
    /// pixel (0,0), by `uncovered` otherwise. With a three-region instance
    /// map this yields distinct candidate maps per instance.
    struct CornerShift {
        covered: f64,
        uncovered: f64,
    }

    impl RefinerBackend for CornerShift {
        fn refine_layer(
            &self,
            depth: &DepthMap,
            _rgb: &RgbImage,
            mask: &Mask,
        ) -> Result<DepthMap> {
            let shift = if mask.get(0, 0) == 1.0 {
                self.covered
            } else {
                self.uncovered
            };
            Ok(depth.map_values(depth.values().iter().map(|v| v + shift).collect()))
        }
    }

    fn thirds_map(n: usize) -> InstanceMap {
        let ids = (0..n * n)
            .map(|i| match (i % n) * 3 / n {
                0 => 1u32,
                1 => 2,
                _ => 0,
            })
            .collect();
        InstanceMap::new(n, n, ids).unwrap()
    }

    #[test]
    fn instances_argmax_picks_larger_deviation() {
        let n = 9;
        let inst = thirds_map(n);
        let d = DepthMap::constant(n, n, 5.0);
        let rgb = RgbImage::constant(n, n, [0.5; 3]);
        // Candidate from instance 1 deviates 0.3 on the left, 0.1 elsewhere;
        // candidate from instance 2 deviates 0.1 in the middle, 0.3 elsewhere.
        let out = refine_instances(
            &CornerShift {
                covered: 0.3,
                uncovered: -0.1,
            },
            &d,
            &rgb,
            &inst,
            0.01,
        )
        .unwrap();
        for i in 0..n * n {
            let third = (i % n) * 3 / n;
            let expect = match third {
                0 => 5.3, // both candidates agree at 5.3
                1 => 4.9, // both agree at 4.9
                _ => 5.3, // |5.3 - 5| = 0.3 beats |4.9 - 5| = 0.1
            };
            assert!((out.values()[i] - expect).abs() < 1e-12, "pixel {i}");
        }
    }

    #[test]
    fn instances_tie_breaks_toward_lowest_id() {
        let n = 9;
        let inst = thirds_map(n);
        let d = DepthMap::constant(n, n, 5.0);
        let rgb = RgbImage::constant(n, n, [0.5; 3]);
        // Symmetric shifts: in the right third the candidates are 4.8 (from
        // instance 1) and 5.2 (from instance 2), both deviating by 0.2. The
        // lowest id must win.
        let out = refine_instances(
            &CornerShift {
                covered: 0.2,
                uncovered: -0.2,
            },
            &d,
            &rgb,
            &inst,
            0.01,
        )
        .unwrap();
        for i in 0..n * n {
            if (i % n) * 3 / n == 2 {
                assert!((out.values()[i] - 4.8).abs() < 1e-12, "pixel {i}");
            }
        }
    }

    #[test]
    fn baseline_two_plane_edge_alignment() {
        let n = 32;
        let m = square_mask(n, 8, 8, 14);
        let (clean, _) = two_plane_scene(n, &m);
        // Perturb: dilate the depth so the fg region bleeds outward.
        let perturbed = crate::datagen::dilate(&clean, 3, 2).unwrap();
        let out = baseline_layered_propagation(&perturbed, &m, 5, 5, 5).unwrap();
        // Count boundary-transition pixels that disagree with the mask edge:
        // pixels where the output is closer to the wrong plane.
        let mut mismatched = 0;
        for i in 0..n * n {
            let expect = if m.alpha()[i] == 1.0 { 8.0 } else { 2.0 };
            if (out.values()[i] - expect).abs() > 3.0 {
                mismatched += 1;
            }
        }
        assert_eq!(mismatched, 0, "merged boundary must follow the mask edge");
        // And the baseline must actually beat the perturbed input.
        let err_out: f64 = out
            .values()
            .iter()
            .zip(clean.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        let err_in: f64 = perturbed
            .values()
            .iter()
            .zip(clean.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(err_out < err_in);
    }

    #[test]
    fn baseline_erosion_fallback() {
        // A 2-pixel-wide mask is erased by a 5x5 erosion; the baseline must
        // fall back instead of failing.
        let n = 16;
        let mut bits = vec![false; n * n];
        for y in 4..12 {
            for x in 7..9 {
                bits[y * n + x] = true;
            }
        }
        let m = Mask::from_bits(n, n, &bits).unwrap();
        let d = DepthMap::constant(n, n, 5.0);
        let out = baseline_layered_propagation(&d, &m, 5, 5, 5).unwrap();
        assert!(out.values().iter().all(|v| (v - 5.0).abs() < 1e-6));
    }

    #[test]
    fn baseline_all_ones_mask_is_layer1_everywhere() {
        let n = 12;
        let m = Mask::full(n, n, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = DepthMap::new(n, n, vals).unwrap();
        let out = baseline_layered_propagation(&d, &m, 5, 5, 5).unwrap();
        // The mask weight is 1 everywhere, so the output is the fg layer:
        // the eroded core keeps original values, the border ring is refilled.
        let eroded = erode_mask(&m, 5).unwrap();
        for i in 0..n * n {
            if eroded.alpha()[i] == 1.0 {
                assert_eq!(out.values()[i], d.values()[i]);
            }
        }
    }
}
