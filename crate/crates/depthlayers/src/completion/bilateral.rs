//! Bilateral median filtering: per-pixel weighted median of the window's
//! depth values, weighted by guide-image color affinity.

use crate::error::{Error, Result};
use crate::raster::{check_dims, DepthMap, RgbImage};

/// Weighted median depth filter guided by RGB color affinity.
///
/// Weights are `exp(-||c_q - c_p||^2 / (2 sigma_color^2))`; the weighted
/// median is the smallest window value whose cumulative weight reaches half
/// the total (ties break toward the smaller value). Windows are clipped at
/// the image border. `window == 1` is the identity.
pub fn bilateral_median(
    d: &DepthMap,
    guide: &RgbImage,
    window: usize,
    sigma_color: f64,
) -> Result<DepthMap> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::EvenWindow(window));
    }
    if sigma_color <= 0.0 {
        return Err(Error::NegativeSigma(sigma_color));
    }
    check_dims(
        "bilateral_median",
        d.width(),
        d.height(),
        guide.width(),
        guide.height(),
    )?;
    let (w, h) = (d.width(), d.height());
    let r = (window / 2) as i64;
    let inv_denom = 1.0 / (2.0 * sigma_color * sigma_color);
    let mut out = vec![0.0f64; w * h];
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(window * window);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let center = guide.pixel(x as usize, y as usize);
            samples.clear();
            let mut total = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (xx, yy) = (x + dx, y + dy);
                    if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
                        continue;
                    }
                    let q = guide.pixel(xx as usize, yy as usize);
                    let dist2 = (q[0] - center[0]).powi(2)
                        + (q[1] - center[1]).powi(2)
                        + (q[2] - center[2]).powi(2);
                    let weight = (-dist2 * inv_denom).exp();
                    samples.push((d.get(xx as usize, yy as usize), weight));
                    total += weight;
                }
            }
            samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite depths"));
            let mut cumulative = 0.0;
            let mut median = samples[samples.len() - 1].0;
            for &(value, weight) in &samples {
                cumulative += weight;
                if cumulative >= total / 2.0 {
                    median = value;
                    break;
                }
            }
            out[y as usize * w + x as usize] = median;
        }
    }
    DepthMap::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_depth_unchanged() {
        let d = DepthMap::constant(8, 8, 4.0);
        let g = RgbImage::constant(8, 8, [0.5, 0.5, 0.5]);
        assert_eq!(bilateral_median(&d, &g, 5, 0.1).unwrap(), d);
    }

    #[test]
    fn window_one_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vals: Vec<f64> = (0..36).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = DepthMap::new(6, 6, vals).unwrap();
        let g = RgbImage::constant(6, 6, [0.2, 0.4, 0.6]);
        assert_eq!(bilateral_median(&d, &g, 1, 0.1).unwrap(), d);
    }

    #[test]
    fn even_window_rejected() {
        let d = DepthMap::constant(4, 4, 1.0);
        let g = RgbImage::constant(4, 4, [0.1; 3]);
        assert!(matches!(
            bilateral_median(&d, &g, 4, 0.1),
            Err(Error::EvenWindow(4))
        ));
    }

    // Exhaustive window oracle: recompute the weighted median definition
    // directly from the window multiset.
    fn oracle_pixel(
        d: &DepthMap,
        g: &RgbImage,
        x: i64,
        y: i64,
        r: i64,
        sigma: f64,
    ) -> f64 {
        let (w, h) = (d.width() as i64, d.height() as i64);
        let center = g.pixel(x as usize, y as usize);
        let mut pairs = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let (xx, yy) = (x + dx, y + dy);
                if xx < 0 || yy < 0 || xx >= w || yy >= h {
                    continue;
                }
                let q = g.pixel(xx as usize, yy as usize);
                let dist2: f64 = (0..3).map(|c| (q[c] - center[c]).powi(2)).sum();
                let wt = (-dist2 / (2.0 * sigma * sigma)).exp();
                pairs.push((d.get(xx as usize, yy as usize), wt));
            }
        }
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut acc = 0.0;
        for &(v, wt) in &pairs {
            acc += wt;
            if acc >= total / 2.0 {
                return v;
            }
        }
        pairs.last().unwrap().0
    }

    #[test]
    fn matches_exhaustive_oracle_on_random_cases() {
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 9usize;
            let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..10.0)).collect();
            let planes = [
                (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect(),
                (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect(),
                (0..n * n).map(|_| rng.random_range(0.0..1.0)).collect(),
            ];
            let d = DepthMap::new(n, n, vals).unwrap();
            let g = RgbImage::new(n, n, planes).unwrap();
            let got = bilateral_median(&d, &g, 5, 0.15).unwrap();
            for y in 0..n as i64 {
                for x in 0..n as i64 {
                    let want = oracle_pixel(&d, &g, x, y, 2, 0.15);
                    assert_eq!(got.get(x as usize, y as usize), want, "seed {seed} ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn output_is_member_of_window_multiset() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 11usize;
        let vals: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..10.0)).collect();
        let d = DepthMap::new(n, n, vals.clone()).unwrap();
        let g = RgbImage::constant(n, n, [0.5; 3]);
        let out = bilateral_median(&d, &g, 7, 0.2).unwrap();
        let r = 3i64;
        for y in 0..n as i64 {
            for x in 0..n as i64 {
                let v = out.get(x as usize, y as usize);
                let mut found = false;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (xx, yy) = (x + dx, y + dy);
                        if xx < 0 || yy < 0 || xx >= n as i64 || yy >= n as i64 {
                            continue;
                        }
                        if d.get(xx as usize, yy as usize) == v {
                            found = true;
                        }
                    }
                }
                assert!(found, "({x},{y})");
            }
        }
    }
}
