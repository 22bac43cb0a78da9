//! Evaluation metrics on scale-shift-aligned inverse depth: RMSE, ordinal
//! disagreement (WHDR), depth-boundary chamfer errors, mask boundary error
//! over instance boundary bands, the relative refinement ratio, and
//! improvement maps.

mod boundary;
mod report;

pub use boundary::{boundary_error, depth_edges, BoundaryParams};
pub use report::{aggregate_reports, AggregateReport, MetricsReport, ReportFlags};

use crate::datagen::morph::{dilate_mask, erode_mask};
use crate::error::{Error, Result};
use crate::raster::{check_dims, DepthMap, InstanceMap, Mask};
use rand::Rng;

/// Root mean squared error over the valid overlap.
pub fn rmse(pred: &DepthMap, gt: &DepthMap) -> Result<f64> {
    check_dims("rmse", pred.width(), pred.height(), gt.width(), gt.height())?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..pred.values().len() {
        if pred.is_valid(i) && gt.is_valid(i) {
            let d = pred.values()[i] - gt.values()[i];
            sum += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoValidOverlap);
    }
    Ok((sum / n as f64).sqrt())
}

/// Ordinal label of a pixel pair under ratio threshold `delta`:
/// +1 when a is farther than b by more than the threshold, -1 for the
/// reverse, 0 when the pair is level. Multiplicative comparisons keep zeros
/// well-defined in inverse depth.
fn ordinal_label(a: f64, b: f64, delta: f64) -> i8 {
    if a > (1.0 + delta) * b {
        1
    } else if b > (1.0 + delta) * a {
        -1
    } else {
        0
    }
}

/// Result of a WHDR evaluation.
#[derive(Debug, Clone, Copy)]
pub struct WhdrResult {
    pub rate: f64,
    pub pairs: usize,
    /// Set when the ground truth was constant; the rate is 0 by convention.
    pub degenerate: bool,
}

/// Weighted human disagreement rate on `pairs` uniformly sampled valid pixel
/// pairs (uniform pair weights, ordinal threshold `delta`).
pub fn whdr<R: Rng>(
    pred: &DepthMap,
    gt: &DepthMap,
    pairs: usize,
    delta: f64,
    rng: &mut R,
) -> Result<WhdrResult> {
    check_dims("whdr", pred.width(), pred.height(), gt.width(), gt.height())?;
    let valid: Vec<usize> = (0..pred.values().len())
        .filter(|&i| pred.is_valid(i) && gt.is_valid(i))
        .collect();
    if valid.len() < 2 {
        return Err(Error::NoValidOverlap);
    }
    let gt0 = gt.values()[valid[0]];
    if valid.iter().all(|&i| gt.values()[i] == gt0) {
        return Ok(WhdrResult {
            rate: 0.0,
            pairs: 0,
            degenerate: true,
        });
    }
    let mut disagreements = 0usize;
    for _ in 0..pairs {
        let a = valid[rng.random_range(0..valid.len())];
        let mut b = valid[rng.random_range(0..valid.len())];
        while b == a {
            b = valid[rng.random_range(0..valid.len())];
        }
        let lg = ordinal_label(gt.values()[a], gt.values()[b], delta);
        let lp = ordinal_label(pred.values()[a], pred.values()[b], delta);
        if lg != lp {
            disagreements += 1;
        }
    }
    Ok(WhdrResult {
        rate: disagreements as f64 / pairs.max(1) as f64,
        pairs,
        degenerate: false,
    })
}

/// WHDR over every unordered valid pixel pair; the sampling-free reference.
pub fn whdr_exhaustive(pred: &DepthMap, gt: &DepthMap, delta: f64) -> Result<WhdrResult> {
    check_dims("whdr", pred.width(), pred.height(), gt.width(), gt.height())?;
    let valid: Vec<usize> = (0..pred.values().len())
        .filter(|&i| pred.is_valid(i) && gt.is_valid(i))
        .collect();
    if valid.len() < 2 {
        return Err(Error::NoValidOverlap);
    }
    let gt0 = gt.values()[valid[0]];
    if valid.iter().all(|&i| gt.values()[i] == gt0) {
        return Ok(WhdrResult {
            rate: 0.0,
            pairs: 0,
            degenerate: true,
        });
    }
    let mut disagreements = 0usize;
    let mut pairs = 0usize;
    for (k, &a) in valid.iter().enumerate() {
        for &b in &valid[k + 1..] {
            let lg = ordinal_label(gt.values()[a], gt.values()[b], delta);
            let lp = ordinal_label(pred.values()[a], pred.values()[b], delta);
            if lg != lp {
                disagreements += 1;
            }
            pairs += 1;
        }
    }
    Ok(WhdrResult {
        rate: disagreements as f64 / pairs as f64,
        pairs,
        degenerate: false,
    })
}

/// Boundary band of one instance mask: dilate(mask - eroded mask, 5x5),
/// with a configurable erosion kernel (3x3 single pass by default).
pub fn mask_boundary(m: &Mask, erode_kernel: usize, dilate_kernel: usize) -> Result<Mask> {
    if m.coverage_count() == 0 {
        return Err(Error::Numeric("empty instance mask has no boundary".into()));
    }
    let eroded = erode_mask(m, erode_kernel)?;
    let ring: Vec<f64> = m
        .alpha()
        .iter()
        .zip(eroded.alpha())
        .map(|(a, e)| a - e)
        .collect();
    let ring = Mask::new(m.width(), m.height(), ring)?;
    dilate_mask(&ring, dilate_kernel)
}

/// Per-instance detail of an MBE evaluation.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InstanceBoundaryError {
    pub id: u32,
    pub boundary_pixels: usize,
    pub rmse: f64,
}

/// Mask boundary error: the mean over instances of the RMSE restricted to
/// each instance's boundary band.
pub fn mbe(
    pred: &DepthMap,
    gt: &DepthMap,
    inst: &InstanceMap,
    min_frac: f64,
) -> Result<(f64, Vec<InstanceBoundaryError>)> {
    check_dims("mbe", pred.width(), pred.height(), gt.width(), gt.height())?;
    check_dims("mbe", pred.width(), pred.height(), inst.width(), inst.height())?;
    let instances = inst.qualifying_instances(min_frac);
    if instances.is_empty() {
        return Err(Error::NoQualifyingInstance { min_frac });
    }
    let mut per_instance = Vec::with_capacity(instances.len());
    let mut total = 0.0;
    for (id, mask) in &instances {
        let band = mask_boundary(mask, 3, 5)?;
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, &b) in band.alpha().iter().enumerate() {
            if b == 1.0 && pred.is_valid(i) && gt.is_valid(i) {
                let d = gt.values()[i] - pred.values()[i];
                sum += d * d;
                n += 1;
            }
        }
        if n == 0 {
            continue;
        }
        let inst_rmse = (sum / n as f64).sqrt();
        per_instance.push(InstanceBoundaryError {
            id: *id,
            boundary_pixels: n,
            rmse: inst_rmse,
        });
        total += inst_rmse;
    }
    if per_instance.is_empty() {
        return Err(Error::NoValidOverlap);
    }
    Ok((total / per_instance.len() as f64, per_instance))
}

/// Result of a relative-refinement-ratio evaluation.
#[derive(Debug, Clone, Copy)]
pub struct R3Result {
    pub ratio: f64,
    pub improved: usize,
    pub worsened: usize,
    /// Set when no pixel moved by more than the threshold either way.
    pub no_change: bool,
}

/// Relative refinement ratio: pixels improved by more than `t` over pixels
/// worsened by more than `t`, in absolute error against the ground truth.
pub fn r3(refined: &DepthMap, initial: &DepthMap, gt: &DepthMap, t: f64) -> Result<R3Result> {
    check_dims("r3", refined.width(), refined.height(), gt.width(), gt.height())?;
    check_dims(
        "r3",
        refined.width(),
        refined.height(),
        initial.width(),
        initial.height(),
    )?;
    let mut improved = 0usize;
    let mut worsened = 0usize;
    for i in 0..gt.values().len() {
        if !(refined.is_valid(i) && initial.is_valid(i) && gt.is_valid(i)) {
            continue;
        }
        let e_init = (initial.values()[i] - gt.values()[i]).abs();
        let e_ref = (refined.values()[i] - gt.values()[i]).abs();
        if e_init - e_ref > t {
            improved += 1;
        } else if e_ref - e_init > t {
            worsened += 1;
        }
    }
    if improved == 0 && worsened == 0 {
        return Ok(R3Result {
            ratio: 1.0,
            improved,
            worsened,
            no_change: true,
        });
    }
    Ok(R3Result {
        ratio: improved as f64 / worsened.max(1) as f64,
        improved,
        worsened,
        no_change: false,
    })
}

/// Per-pixel `|initial - gt| - |refined - gt|`; positive where the refinement
/// improved the depth. Pixels outside the valid overlap are zero.
pub fn improvement_map(
    initial: &DepthMap,
    refined: &DepthMap,
    gt: &DepthMap,
) -> Result<DepthMap> {
    check_dims(
        "improvement_map",
        initial.width(),
        initial.height(),
        gt.width(),
        gt.height(),
    )?;
    check_dims(
        "improvement_map",
        initial.width(),
        initial.height(),
        refined.width(),
        refined.height(),
    )?;
    let values = (0..gt.values().len())
        .map(|i| {
            if initial.is_valid(i) && refined.is_valid(i) && gt.is_valid(i) {
                (initial.values()[i] - gt.values()[i]).abs()
                    - (refined.values()[i] - gt.values()[i]).abs()
            } else {
                0.0
            }
        })
        .collect();
    DepthMap::new(gt.width(), gt.height(), values)
}
