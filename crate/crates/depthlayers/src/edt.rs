//! Exact squared Euclidean distance transform (Felzenszwalb & Huttenlocher).
//!
//! The two-pass lower-envelope algorithm computes, for every pixel, the exact
//! minimum of `(x-x')^2 + (y-y')^2` over all site pixels. Squared distances
//! between integer grid positions are integers well inside f64 exactness, so
//! the result is bit-for-bit comparable with a brute-force scan.

const INF: f64 = 1e20;

/// Squared Euclidean distance to the nearest `true` pixel.
///
/// Pixels of an all-false raster are all at `INF`-like distance (no site);
/// callers must handle the empty-site case themselves.
pub fn squared_edt(sites: &[bool], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(sites.len(), width * height);
    let mut f = vec![0.0f64; width * height];
    for (i, &s) in sites.iter().enumerate() {
        f[i] = if s { 0.0 } else { INF };
    }
    // Columns, then rows.
    let mut column = vec![0.0f64; height];
    let mut out_col = vec![0.0f64; height];
    for x in 0..width {
        for y in 0..height {
            column[y] = f[y * width + x];
        }
        dt_1d(&column, &mut out_col);
        for y in 0..height {
            f[y * width + x] = out_col[y];
        }
    }
    let mut out_row = vec![0.0f64; width];
    for y in 0..height {
        let row = &f[y * width..(y + 1) * width];
        dt_1d(row, &mut out_row);
        f[y * width..(y + 1) * width].copy_from_slice(&out_row);
    }
    f
}

/// 1-D squared distance transform of a sampled function `f`.
fn dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    if n == 1 {
        out[0] = f[0];
        return;
    }
    // Sentinel beyond any reachable parabola intersection (|s| < ~5e19).
    const BOUND: f64 = 1e30;
    let mut v = vec![0usize; n]; // locations of parabolas in the lower envelope
    let mut z = vec![0.0f64; n + 1]; // boundaries between parabolas
    let mut k = 0usize;
    v[0] = 0;
    z[0] = -BOUND;
    z[1] = BOUND;
    let intersect = |q: usize, p: usize| -> f64 {
        ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64)
    };
    for q in 1..n {
        let mut s = intersect(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = intersect(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = BOUND;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = d * d + f[p];
    }
}

/// True when the raster contains no site at all.
pub fn no_sites(d2: &[f64]) -> bool {
    d2.iter().all(|&v| v >= INF)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(sites: &[bool], w: usize, h: usize) -> Vec<f64> {
        let pts: Vec<(i64, i64)> = (0..w * h)
            .filter(|&i| sites[i])
            .map(|i| ((i % w) as i64, (i / w) as i64))
            .collect();
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                pts.iter()
                    .map(|&(px, py)| ((x - px) * (x - px) + (y - py) * (y - py)) as f64)
                    .fold(INF, f64::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_random_rasters() {
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w, h) = (rng.random_range(2..20usize), rng.random_range(2..20usize));
            let sites: Vec<bool> = (0..w * h).map(|_| rng.random_bool(0.2)).collect();
            if sites.iter().all(|&s| !s) {
                continue;
            }
            let got = squared_edt(&sites, w, h);
            let want = brute_force(&sites, w, h);
            for i in 0..w * h {
                assert_eq!(got[i], want[i], "seed {seed} idx {i}");
            }
        }
    }

    #[test]
    fn single_site_distances() {
        let mut sites = vec![false; 25];
        sites[12] = true; // center of 5x5
        let d2 = squared_edt(&sites, 5, 5);
        assert_eq!(d2[12], 0.0);
        assert_eq!(d2[0], 8.0); // (2,2) away
        assert_eq!(d2[13], 1.0);
    }
}
