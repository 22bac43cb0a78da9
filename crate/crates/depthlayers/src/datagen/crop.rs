//! Adaptive crop sampling around segmentation instances.
//!
//! Object crops are placed so the whole instance bounding box stays inside
//! the window; the window size adapts to the object size. Stuff-class crops
//! (sky and the like) ignore instance extents and sample a large window at a
//! uniform position.

use crate::error::{Error, Result};
use crate::raster::InstanceMap;
use rand::Rng;

/// A square crop window, later resized to the training patch size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropSpec {
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub resized_to: usize,
}

impl CropSpec {
    pub fn contains(&self, bbox: &BBox) -> bool {
        bbox.x0 >= self.x
            && bbox.y0 >= self.y
            && bbox.x1 < self.x + self.size
            && bbox.y1 < self.y + self.size
    }
}

/// Inclusive pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }
}

fn instance_bbox(inst: &InstanceMap, id: u32) -> Option<BBox> {
    let (w, h) = (inst.width(), inst.height());
    let mut bb: Option<BBox> = None;
    for y in 0..h {
        for x in 0..w {
            if inst.ids()[y * w + x] == id {
                bb = Some(match bb {
                    None => BBox {
                        x0: x,
                        y0: y,
                        x1: x,
                        y1: y,
                    },
                    Some(b) => BBox {
                        x0: b.x0.min(x),
                        y0: b.y0.min(y),
                        x1: b.x1.max(x),
                        y1: b.y1.max(y),
                    },
                });
            }
        }
    }
    bb
}

/// Samples a crop window from an instance map.
///
/// Draws a qualifying instance (at least `min_frac` of all pixels, default
/// 1%), then:
/// - object whose bbox fits in `patch`: window of `patch` pixels placed
///   uniformly among positions fully containing the bbox;
/// - larger object: window of `p ~ U(s, 2s)` pixels with `s = max(bbox
///   dimensions)`, clamped to the image, placed to contain the bbox;
/// - stuff classes: window of `p ~ U(H/2, H)` pixels at a uniform position.
pub fn sample_crop<R: Rng>(
    inst: &InstanceMap,
    patch: usize,
    stuff: bool,
    min_frac: f64,
    rng: &mut R,
) -> Result<CropSpec> {
    let (w, h) = (inst.width(), inst.height());
    if inst.instance_ids().is_empty() {
        return Err(Error::EmptyInstanceMap);
    }
    if stuff {
        let max_size = h.min(w);
        let lo = (h / 2).min(max_size);
        let size = rng.random_range(lo..=max_size).max(1);
        let x = rng.random_range(0..=w - size);
        let y = rng.random_range(0..=h - size);
        return Ok(CropSpec {
            x,
            y,
            size,
            resized_to: patch,
        });
    }

    // Instances whose bounding box cannot fit in any in-image square window
    // do not qualify; callers resample on the distinct error.
    let qualifying: Vec<(u32, BBox)> = inst
        .qualifying_instances(min_frac)
        .into_iter()
        .filter_map(|(id, _)| {
            let bbox = instance_bbox(inst, id).expect("qualifying instance has pixels");
            (bbox.width().max(bbox.height()) <= w.min(h)).then_some((id, bbox))
        })
        .collect();
    if qualifying.is_empty() {
        return Err(Error::NoQualifyingInstance { min_frac });
    }
    let (_, bbox) = qualifying[rng.random_range(0..qualifying.len())];

    let s = bbox.width().max(bbox.height());
    let size = if s <= patch && patch <= w && patch <= h {
        patch
    } else {
        // p ~ U(s, 2s), clamped so the window still fits in the image.
        let hi = (2 * s).min(w).min(h);
        rng.random_range(s..=hi)
    };

    // Uniform among origins keeping the whole bbox inside the window.
    let x_lo = (bbox.x1 + 1).saturating_sub(size);
    let x_hi = bbox.x0.min(w - size);
    let y_lo = (bbox.y1 + 1).saturating_sub(size);
    let y_hi = bbox.y0.min(h - size);
    let x = rng.random_range(x_lo..=x_hi);
    let y = rng.random_range(y_lo..=y_hi);
    Ok(CropSpec {
        x,
        y,
        size,
        resized_to: patch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn map_with_rect(w: usize, h: usize, x0: usize, y0: usize, bw: usize, bh: usize) -> InstanceMap {
        let mut ids = vec![0u32; w * h];
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                ids[y * w + x] = 1;
            }
        }
        InstanceMap::new(w, h, ids).unwrap()
    }

    #[test]
    fn small_object_uses_patch_sized_window_containing_bbox() {
        let inst = map_with_rect(320, 320, 100, 150, 60, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let c = sample_crop(&inst, 320, false, 0.01, &mut rng).unwrap();
            assert_eq!(c.size, 320);
            assert!(c.contains(&BBox {
                x0: 100,
                y0: 150,
                x1: 159,
                y1: 189
            }));
        }
    }

    #[test]
    fn large_object_draws_between_s_and_2s() {
        let inst = map_with_rect(1200, 1100, 50, 60, 400, 500);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = sample_crop(&inst, 320, false, 0.01, &mut rng).unwrap();
            assert!((500..=1000).contains(&c.size), "size {}", c.size);
            assert!(c.contains(&BBox {
                x0: 50,
                y0: 60,
                x1: 449,
                y1: 559
            }));
        }
    }

    #[test]
    fn stuff_crop_draws_half_to_full_height() {
        let inst = map_with_rect(640, 480, 0, 0, 640, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let c = sample_crop(&inst, 320, true, 0.01, &mut rng).unwrap();
            assert!((240..=480).contains(&c.size), "size {}", c.size);
            assert!(c.x + c.size <= 640 && c.y + c.size <= 480);
        }
    }

    #[test]
    fn no_qualifying_instance_is_a_distinct_error() {
        let inst = map_with_rect(100, 100, 4, 4, 2, 2); // 4 px of 10000 < 1%
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(matches!(
            sample_crop(&inst, 64, false, 0.01, &mut rng),
            Err(Error::NoQualifyingInstance { .. })
        ));
        let empty = InstanceMap::new(4, 4, vec![0; 16]).unwrap();
        assert!(matches!(
            sample_crop(&empty, 4, false, 0.01, &mut rng),
            Err(Error::EmptyInstanceMap)
        ));
    }

    #[test]
    fn window_always_contains_bbox() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let (w, h) = (rng.random_range(60..200usize), rng.random_range(60..200usize));
            let limit = w.min(h) / 2;
            let bw = rng.random_range(10..limit);
            let bh = rng.random_range(10..limit);
            let x0 = rng.random_range(0..w - bw);
            let y0 = rng.random_range(0..h - bh);
            let inst = map_with_rect(w, h, x0, y0, bw, bh);
            let c = sample_crop(&inst, 48, false, 0.001, &mut rng).unwrap();
            assert!(c.x + c.size <= w && c.y + c.size <= h);
            assert!(c.contains(&BBox {
                x0,
                y0,
                x1: x0 + bw - 1,
                y1: y0 + bh - 1
            }));
        }
    }

    #[test]
    fn oversized_bbox_is_rejected_not_mangled() {
        // A bbox longer than the image's short side cannot sit inside any
        // square in-image window.
        let inst = map_with_rect(150, 60, 20, 20, 100, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!(matches!(
            sample_crop(&inst, 48, false, 0.001, &mut rng),
            Err(Error::NoQualifyingInstance { .. })
        ));
    }
}
