//! Hole detection in binary masks and the hole-value perturbation.
//!
//! A hole is a 4-connected component of background (alpha == 0) pixels that
//! cannot reach the image border through background pixels, e.g. the gap
//! between an arm and a torso in a human mask.

use crate::edt;
use crate::error::{Error, Result};
use crate::raster::{DepthMap, Mask};
use rand::Rng;

/// One detected hole: its pixel indices in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hole {
    pub pixels: Vec<usize>,
}

/// Finds all holes of a binary mask.
///
/// Background pixels reachable from the border through background are flood
/// filled first; the remaining background components are the holes. Holes are
/// returned in raster order of their smallest pixel index.
pub fn find_holes(m: &Mask) -> Result<Vec<Hole>> {
    if !m.is_binary() {
        return Err(Error::NonBinaryMask {
            context: "find_holes",
        });
    }
    let (w, h) = (m.width(), m.height());
    let alpha = m.alpha();
    let bg = |i: usize| alpha[i] == 0.0;

    // 0 = foreground, 1 = border-connected background, 2 = unvisited background.
    let mut state = vec![0u8; w * h];
    for (i, s) in state.iter_mut().enumerate() {
        if bg(i) {
            *s = 2;
        }
    }
    let mut stack = Vec::new();
    for x in 0..w {
        for y in [0, h - 1] {
            let i = y * w + x;
            if state[i] == 2 {
                state[i] = 1;
                stack.push(i);
            }
        }
    }
    for y in 0..h {
        for x in [0, w - 1] {
            let i = y * w + x;
            if state[i] == 2 {
                state[i] = 1;
                stack.push(i);
            }
        }
    }
    while let Some(i) = stack.pop() {
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if state[j] == 2 {
                state[j] = 1;
                stack.push(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }

    // Remaining background pixels form holes; label their 4-components.
    let mut holes = Vec::new();
    for start in 0..w * h {
        if state[start] != 2 {
            continue;
        }
        let mut pixels = vec![start];
        state[start] = 3;
        let mut head = 0;
        while head < pixels.len() {
            let i = pixels[head];
            head += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize, pixels: &mut Vec<usize>| {
                if state[j] == 2 {
                    state[j] = 3;
                    pixels.push(j);
                }
            };
            if x > 0 {
                visit(i - 1, &mut pixels);
            }
            if x + 1 < w {
                visit(i + 1, &mut pixels);
            }
            if y > 0 {
                visit(i - w, &mut pixels);
            }
            if y + 1 < h {
                visit(i + w, &mut pixels);
            }
        }
        pixels.sort_unstable();
        holes.push(Hole { pixels });
    }
    holes.sort_by_key(|hole| hole.pixels[0]);
    Ok(holes)
}

/// Mean depth over a hole and over its outer ring of `ring_width` pixels
/// (Euclidean distance to the hole in (0, ring_width]).
pub fn hole_ring_means(
    d: &DepthMap,
    hole: &Hole,
    ring_width: usize,
) -> (f64, f64) {
    let (w, h) = (d.width(), d.height());
    let mut sites = vec![false; w * h];
    for &i in &hole.pixels {
        sites[i] = true;
    }
    let d2 = edt::squared_edt(&sites, w, h);
    let limit = (ring_width * ring_width) as f64;
    let mut inner = (0.0, 0usize);
    let mut outer = (0.0, 0usize);
    for i in 0..w * h {
        if sites[i] {
            inner = (inner.0 + d.values()[i], inner.1 + 1);
        } else if d2[i] <= limit {
            outer = (outer.0 + d.values()[i], outer.1 + 1);
        }
    }
    let mu_in = inner.0 / inner.1 as f64;
    let mu_out = if outer.1 > 0 {
        outer.0 / outer.1 as f64
    } else {
        mu_in
    };
    (mu_in, mu_out)
}

/// Replaces every pixel of each hole with one uniform draw from the interval
/// spanned by the hole's mean depth and its outer-ring mean depth.
///
/// One value is drawn per hole (not per pixel); non-hole pixels are
/// unchanged. A mask with no holes returns the input unchanged.
pub fn hole_perturb<R: Rng>(
    d: &DepthMap,
    m: &Mask,
    ring_width: usize,
    rng: &mut R,
) -> Result<DepthMap> {
    let holes = find_holes(m)?;
    if holes.is_empty() {
        return Ok(d.clone());
    }
    let mut values = d.values().to_vec();
    for hole in &holes {
        let (mu_in, mu_out) = hole_ring_means(d, hole, ring_width);
        let (lo, hi) = (mu_in.min(mu_out), mu_in.max(mu_out));
        let fill = if lo == hi {
            lo
        } else {
            rng.random_range(lo..hi)
        };
        for &i in &hole.pixels {
            values[i] = fill;
        }
    }
    Ok(d.map_values(values))
}
