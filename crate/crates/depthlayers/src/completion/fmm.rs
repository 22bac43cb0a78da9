//! Propagation-based depth completion: unknown pixels are filled in
//! increasing distance from the known boundary (fast-marching front order),
//! each as a normalized weighted combination of nearby already-known values
//! with direction, distance and level-set weights.
//!
//! Values are only drawn from the boundary band (known pixels adjacent to the
//! unknown region) and from previously filled pixels. Every fill is a convex
//! combination, so filled values can never overshoot the boundary-band
//! min/max.

use crate::error::{Error, Result};
use crate::raster::{check_dims, DepthMap, Mask};
use std::collections::BinaryHeap;

/// The region to fill: mask alpha 1 marks unknown pixels.
#[derive(Debug, Clone)]
pub struct FillRegion {
    mask: Mask,
}

impl FillRegion {
    pub fn new(mask: Mask) -> Result<Self> {
        if !mask.is_binary() {
            return Err(Error::NonBinaryMask {
                context: "fill region",
            });
        }
        Ok(Self { mask })
    }

    pub fn from_bits(width: usize, height: usize, unknown: &[bool]) -> Result<Self> {
        Self::new(Mask::from_bits(width, height, unknown)?)
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn unknown_count(&self) -> usize {
        self.mask.alpha().iter().filter(|a| **a == 1.0).count()
    }

    /// Known pixels 8-adjacent to an unknown pixel.
    pub fn boundary_band(&self) -> Vec<usize> {
        let (w, h) = (self.mask.width(), self.mask.height());
        let unknown = |x: usize, y: usize| self.mask.alpha()[y * w + x] == 1.0;
        let mut band = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if unknown(x, y) {
                    continue;
                }
                let mut adjacent = false;
                'scan: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                        if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                            continue;
                        }
                        if unknown(xx as usize, yy as usize) {
                            adjacent = true;
                            break 'scan;
                        }
                    }
                }
                if adjacent {
                    band.push(y * w + x);
                }
            }
        }
        band
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Known,
    Band,
    Unknown,
}

/// Solves the discrete eikonal update from the smallest known horizontal and
/// vertical neighbor times.
fn eikonal(tx: f64, ty: f64) -> f64 {
    let (a, b) = (tx.min(ty), tx.max(ty));
    if b - a >= 1.0 || !b.is_finite() {
        a + 1.0
    } else {
        let diff = a - b;
        (a + b + (2.0 - diff * diff).sqrt()) / 2.0
    }
}

/// Fills the unknown region of `d` by fast-marching propagation.
///
/// `radius` bounds the neighborhood a fill value is combined from (in
/// pixels); known pixels are never modified. An empty fill region returns the
/// input unchanged; a fill region covering the whole image is rejected.
pub fn propagate_fill(d: &DepthMap, fill: &FillRegion, radius: usize) -> Result<DepthMap> {
    check_dims(
        "propagate_fill",
        d.width(),
        d.height(),
        fill.mask.width(),
        fill.mask.height(),
    )?;
    let (w, h) = (d.width(), d.height());
    let unknown_count = fill.unknown_count();
    if unknown_count == 0 {
        return Ok(d.clone());
    }
    if unknown_count == w * h {
        return Err(Error::AllUnknown);
    }
    let radius = radius.max(1);

    let mut values = d.values().to_vec();
    let mut state = vec![State::Known; w * h];
    let mut t = vec![0.0f64; w * h];
    // Eligible donors: boundary-band pixels now, filled pixels as they land.
    let mut eligible = vec![false; w * h];
    for (i, a) in fill.mask.alpha().iter().enumerate() {
        if *a == 1.0 {
            state[i] = State::Unknown;
            t[i] = f64::INFINITY;
        }
    }
    for &i in &fill.boundary_band() {
        eligible[i] = true;
    }

    let neighbors4 = |i: usize| {
        let (x, y) = (i % w, i / w);
        let mut out = [usize::MAX; 4];
        if x > 0 {
            out[0] = i - 1;
        }
        if x + 1 < w {
            out[1] = i + 1;
        }
        if y > 0 {
            out[2] = i - w;
        }
        if y + 1 < h {
            out[3] = i + w;
        }
        out
    };

    let solve_t = |i: usize, t: &[f64], state: &[State]| -> f64 {
        let (x, y) = (i % w, i / w);
        let fetch = |xx: i64, yy: i64| -> f64 {
            if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                return f64::INFINITY;
            }
            let j = yy as usize * w + xx as usize;
            if state[j] == State::Unknown {
                f64::INFINITY
            } else {
                t[j]
            }
        };
        let tx = fetch(x as i64 - 1, y as i64).min(fetch(x as i64 + 1, y as i64));
        let ty = fetch(x as i64, y as i64 - 1).min(fetch(x as i64, y as i64 + 1));
        eikonal(tx, ty)
    };

    // Heap keyed by (T bits, index): T >= 0 so the bit pattern orders floats,
    // and the index breaks ties deterministically.
    let mut heap: BinaryHeap<std::cmp::Reverse<(u64, usize)>> = BinaryHeap::new();
    for i in 0..w * h {
        if state[i] != State::Unknown {
            continue;
        }
        if neighbors4(i).iter().any(|&j| j != usize::MAX && state[j] == State::Known) {
            let ti = solve_t(i, &t, &state);
            t[i] = ti;
            state[i] = State::Band;
            heap.push(std::cmp::Reverse((ti.to_bits(), i)));
        }
    }

    let r2 = (radius * radius) as f64;
    while let Some(std::cmp::Reverse((tbits, i))) = heap.pop() {
        if state[i] != State::Band || tbits != t[i].to_bits() {
            continue; // stale entry
        }
        state[i] = State::Known;

        // Gradient of T at i from available (non-unknown) neighbors.
        let (x, y) = (i % w, i / w);
        let t_at = |xx: i64, yy: i64| -> Option<f64> {
            if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                return None;
            }
            let j = yy as usize * w + xx as usize;
            (state[j] != State::Unknown).then(|| t[j])
        };
        let grad_component = |m: Option<f64>, p: Option<f64>| match (m, p) {
            (Some(a), Some(b)) => (b - a) / 2.0,
            (None, Some(b)) => b - t[i],
            (Some(a), None) => t[i] - a,
            (None, None) => 0.0,
        };
        let gx = grad_component(t_at(x as i64 - 1, y as i64), t_at(x as i64 + 1, y as i64));
        let gy = grad_component(t_at(x as i64, y as i64 - 1), t_at(x as i64, y as i64 + 1));
        let gnorm = (gx * gx + gy * gy).sqrt();

        let mut weight_sum = 0.0;
        let mut value_sum = 0.0;
        let ir = radius as i64;
        for dy in -ir..=ir {
            for dx in -ir..=ir {
                let (xx, yy) = (x as i64 + dx, y as i64 + dy);
                if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                    continue;
                }
                let j = yy as usize * w + xx as usize;
                if !eligible[j] {
                    continue;
                }
                let len2 = (dx * dx + dy * dy) as f64;
                if len2 == 0.0 || len2 > r2 {
                    continue;
                }
                let len = len2.sqrt();
                let dir = if gnorm > 0.0 {
                    ((gx * dx as f64 + gy * dy as f64) / (gnorm * len)).abs().max(1e-6)
                } else {
                    1.0
                };
                let dst = 1.0 / len2;
                let lev = 1.0 / (1.0 + (t[i] - t[j]).abs());
                let weight = dir * dst * lev;
                weight_sum += weight;
                value_sum += weight * values[j];
            }
        }
        debug_assert!(weight_sum > 0.0, "front pixel always has an eligible donor");
        values[i] = value_sum / weight_sum;
        eligible[i] = true;

        for &j in &neighbors4(i) {
            if j == usize::MAX || state[j] == State::Known {
                continue;
            }
            let tj = solve_t(j, &t, &state);
            if tj < t[j] {
                t[j] = tj;
                state[j] = State::Band;
                heap.push(std::cmp::Reverse((tj.to_bits(), j)));
            }
        }
    }

    DepthMap::new(w, h, values)
}
