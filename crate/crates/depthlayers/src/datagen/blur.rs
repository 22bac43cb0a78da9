//! Separable Gaussian blur with replicate border handling.

use crate::error::{Error, Result};
use crate::raster::DepthMap;

/// Normalized 1-D Gaussian taps for radius `ceil(3*sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut taps = Vec::with_capacity(2 * radius + 1);
    let denom = 2.0 * sigma * sigma;
    for i in -(radius as i64)..=(radius as i64) {
        taps.push((-((i * i) as f64) / denom).exp());
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Gaussian convolution of the depth plane; `sigma == 0` is the identity.
pub fn gaussian_blur(d: &DepthMap, sigma: f64) -> Result<DepthMap> {
    if sigma < 0.0 {
        return Err(Error::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(d.clone());
    }
    let taps = gaussian_kernel(sigma);
    let radius = taps.len() / 2;
    let (w, h) = (d.width(), d.height());
    let src = d.values();
    let mut mid = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, tap) in taps.iter().enumerate() {
                let xx = (x as i64 + t as i64 - radius as i64).clamp(0, w as i64 - 1) as usize;
                acc += tap * row[xx];
            }
            mid[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, tap) in taps.iter().enumerate() {
                let yy = (y as i64 + t as i64 - radius as i64).clamp(0, h as i64 - 1) as usize;
                acc += tap * mid[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    Ok(d.map_values(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_zero_is_identity() {
        let d = DepthMap::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(gaussian_blur(&d, 0.0).unwrap(), d);
    }

    #[test]
    fn negative_sigma_rejected() {
        let d = DepthMap::constant(2, 2, 1.0);
        assert!(matches!(
            gaussian_blur(&d, -0.5),
            Err(Error::NegativeSigma(_))
        ));
    }

    #[test]
    fn constant_map_unchanged() {
        let d = DepthMap::constant(9, 9, 6.25);
        for sigma in [0.3, 1.0, 2.5] {
            let out = gaussian_blur(&d, sigma).unwrap();
            for (&a, &b) in out.values().iter().zip(d.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_matches_analytic_oracle() {
        for sigma in [0.5, 1.0, 2.0, 5.0] {
            let taps = gaussian_kernel(sigma);
            let radius = (3.0 * sigma).ceil() as i64;
            assert_eq!(taps.len() as i64, 2 * radius + 1);
            // Analytic oracle: e^{-x^2 / (2 sigma^2)}, normalized.
            let raw: Vec<f64> = (-radius..=radius)
                .map(|x| (-(x as f64).powi(2) / (2.0 * sigma * sigma)).exp())
                .collect();
            let sum: f64 = raw.iter().sum();
            for (i, tap) in taps.iter().enumerate() {
                assert!((tap - raw[i] / sum).abs() < 1e-9, "sigma {sigma} tap {i}");
            }
            assert!((taps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
