//! Depth boundary error: truncated chamfer distances between predicted and
//! ground-truth depth-edge sets, with edges from thresholded forward-
//! difference gradient magnitude and distances from the exact Euclidean
//! distance transform.

use crate::edt;
use crate::error::{Error, Result};
use crate::raster::{check_dims, DepthMap};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundaryParams {
    /// Gradient-magnitude threshold in working-range units.
    pub edge_threshold: f64,
    /// Distance truncation in pixels.
    pub cap: f64,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        Self {
            edge_threshold: 0.05,
            cap: 10.0,
        }
    }
}

/// Edge raster: forward-difference gradient magnitude above the threshold.
pub fn depth_edges(d: &DepthMap, threshold: f64) -> Vec<bool> {
    let (w, h) = (d.width(), d.height());
    let v = d.values();
    let mut edges = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let gx = if x + 1 < w {
                v[y * w + x + 1] - v[y * w + x]
            } else {
                0.0
            };
            let gy = if y + 1 < h {
                v[(y + 1) * w + x] - v[y * w + x]
            } else {
                0.0
            };
            edges[y * w + x] = (gx * gx + gy * gy).sqrt() > threshold;
        }
    }
    edges
}

/// Mean truncated distance from each `from` pixel to the nearest `to` pixel.
///
/// Conventions: an empty `from` set yields 0; an empty `to` set puts every
/// `from` pixel at the cap.
fn truncated_chamfer(from: &[bool], to: &[bool], w: usize, h: usize, cap: f64) -> f64 {
    let n_from = from.iter().filter(|&&b| b).count();
    if n_from == 0 {
        return 0.0;
    }
    if to.iter().all(|&b| !b) {
        return cap;
    }
    let d2 = edt::squared_edt(to, w, h);
    let mut sum = 0.0;
    for i in 0..w * h {
        if from[i] {
            sum += d2[i].sqrt().min(cap);
        }
    }
    sum / n_from as f64
}

/// Depth boundary error: (accuracy, completeness).
///
/// Accuracy is the mean truncated distance from predicted-edge pixels to the
/// nearest ground-truth edge; completeness swaps the roles.
pub fn boundary_error(
    pred: &DepthMap,
    gt: &DepthMap,
    params: &BoundaryParams,
) -> Result<(f64, f64)> {
    check_dims(
        "boundary_error",
        pred.width(),
        pred.height(),
        gt.width(),
        gt.height(),
    )?;
    if params.cap <= 0.0 || params.edge_threshold < 0.0 {
        return Err(Error::Config(
            "boundary error needs positive cap and non-negative threshold".into(),
        ));
    }
    let (w, h) = (pred.width(), pred.height());
    let pred_edges = depth_edges(pred, params.edge_threshold);
    let gt_edges = depth_edges(gt, params.edge_threshold);
    let acc = truncated_chamfer(&pred_edges, &gt_edges, w, h, params.cap);
    let comp = truncated_chamfer(&gt_edges, &pred_edges, w, h, params.cap);
    Ok((acc, comp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_map(w: usize, h: usize, col: usize, lo: f64, hi: f64) -> DepthMap {
        let values = (0..w * h)
            .map(|i| if i % w < col { lo } else { hi })
            .collect();
        DepthMap::new(w, h, values).unwrap()
    }

    #[test]
    fn identical_maps_have_zero_error() {
        let d = step_map(16, 16, 8, 2.0, 8.0);
        let (acc, comp) = boundary_error(&d, &d, &BoundaryParams::default()).unwrap();
        assert_eq!((acc, comp), (0.0, 0.0));
    }

    #[test]
    fn shifted_step_edge_measures_the_shift() {
        let gt = step_map(32, 16, 12, 2.0, 8.0);
        let pred = step_map(32, 16, 14, 2.0, 8.0);
        let (acc, comp) = boundary_error(&pred, &gt, &BoundaryParams::default()).unwrap();
        assert!((acc - 2.0).abs() < 1e-9, "acc {acc}");
        assert!((comp - 2.0).abs() < 1e-9, "comp {comp}");
    }

    #[test]
    fn empty_predicted_edges_convention() {
        let gt = step_map(16, 16, 8, 2.0, 8.0);
        let flat = DepthMap::constant(16, 16, 5.0);
        let params = BoundaryParams::default();
        let (acc, comp) = boundary_error(&flat, &gt, &params).unwrap();
        assert_eq!(acc, 0.0);
        assert_eq!(comp, params.cap);
    }

    #[test]
    fn chamfer_matches_brute_force_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for case in 0..30 {
            let (w, h) = (16usize, 16usize);
            let pred = DepthMap::new(
                w,
                h,
                (0..w * h).map(|_| rng.random_range(0.0..10.0)).collect(),
            )
            .unwrap();
            let gt = DepthMap::new(
                w,
                h,
                (0..w * h).map(|_| rng.random_range(0.0..10.0)).collect(),
            )
            .unwrap();
            let params = BoundaryParams::default();
            let (acc, comp) = boundary_error(&pred, &gt, &params).unwrap();

            // Brute-force oracle with the same edge rule.
            let pe = depth_edges(&pred, params.edge_threshold);
            let ge = depth_edges(&gt, params.edge_threshold);
            let brute = |from: &[bool], to: &[bool]| -> f64 {
                let pts: Vec<(f64, f64)> = (0..w * h)
                    .filter(|&i| to[i])
                    .map(|i| ((i % w) as f64, (i / w) as f64))
                    .collect();
                let mut sum = 0.0;
                let mut n = 0usize;
                for i in 0..w * h {
                    if !from[i] {
                        continue;
                    }
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    let d = pts
                        .iter()
                        .map(|&(px, py)| ((x - px).powi(2) + (y - py).powi(2)).sqrt())
                        .fold(f64::INFINITY, f64::min)
                        .min(params.cap);
                    sum += d;
                    n += 1;
                }
                if n == 0 {
                    0.0
                } else {
                    sum / n as f64
                }
            };
            assert!((acc - brute(&pe, &ge)).abs() < 1e-6, "case {case}");
            assert!((comp - brute(&ge, &pe)).abs() < 1e-6, "case {case}");
        }
    }
}
