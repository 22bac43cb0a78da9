//! Fundamental raster types: inverse-depth maps, RGB images, masks and
//! instance-ID maps.
//!
//! All depth math in this crate operates on inverse depth (larger = closer)
//! inside a [0, 10] working range; loaders normalize on ingest. Values are
//! stored row-major as dense `f64` planes. Every type is immutable in spirit:
//! operations take references and return new rasters, so values can be shared
//! freely across parallel workers.

use crate::error::{Error, Result};

/// Dense single-channel inverse-depth raster with an optional validity raster.
///
/// Pixels without a `valid` raster are all considered valid. Valid pixels are
/// guaranteed finite by the constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    valid: Option<Vec<bool>>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        Self::with_validity(width, height, values, None)
    }

    pub fn with_validity(
        width: usize,
        height: usize,
        values: Vec<f64>,
        valid: Option<Vec<bool>>,
    ) -> Result<Self> {
        if width * height != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} depth map needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        if let Some(v) = &valid {
            if v.len() != values.len() {
                return Err(Error::DimensionMismatch(format!(
                    "validity raster has {} entries, expected {}",
                    v.len(),
                    values.len()
                )));
            }
        }
        let bad = values
            .iter()
            .enumerate()
            .filter(|(i, x)| !x.is_finite() && valid.as_ref().is_none_or(|v| v[*i]))
            .count();
        if bad > 0 {
            return Err(Error::NonFiniteValues(bad));
        }
        Ok(Self {
            width,
            height,
            values,
            valid,
        })
    }

    /// Constant-valued map, fully valid.
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
            valid: None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid.as_ref().is_none_or(|v| v[idx])
    }

    /// `true` when every pixel is valid.
    pub fn fully_valid(&self) -> bool {
        self.valid.as_ref().is_none_or(|v| v.iter().all(|&b| b))
    }

    pub fn validity(&self) -> Option<&[bool]> {
        self.valid.as_deref()
    }

    pub fn valid_count(&self) -> usize {
        match &self.valid {
            None => self.values.len(),
            Some(v) => v.iter().filter(|&&b| b).count(),
        }
    }

    /// Indices of valid pixels, in raster order.
    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.is_valid(i))
            .collect()
    }

    /// Replaces the value plane, keeping dimensions and validity.
    pub(crate) fn map_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            width: self.width,
            height: self.height,
            values,
            valid: self.valid.clone(),
        }
    }

    pub fn same_size(&self, other_w: usize, other_h: usize) -> bool {
        self.width == other_w && self.height == other_h
    }

    /// Bilinear resize of the value plane. Only defined for fully valid maps.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Result<Self> {
        if !self.fully_valid() {
            return Err(Error::Numeric(
                "resize requires a fully valid depth map".into(),
            ));
        }
        let values = resize_bilinear_plane(&self.values, self.width, self.height, width, height);
        DepthMap::new(width, height, values)
    }
}

/// 3-channel image with values in [0, 1], stored as three planes.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
}

impl RgbImage {
    pub fn new(width: usize, height: usize, planes: [Vec<f64>; 3]) -> Result<Self> {
        for p in &planes {
            if p.len() != width * height {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} rgb image needs {} values per plane, got {}",
                    width,
                    height,
                    width * height,
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite() || *x < 0.0 || *x > 1.0) {
                return Err(Error::Numeric("rgb values must lie in [0, 1]".into()));
            }
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn constant(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        Self {
            width,
            height,
            planes: [
                vec![rgb[0]; width * height],
                vec![rgb[1]; width * height],
                vec![rgb[2]; width * height],
            ],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        &self.planes[c]
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    pub(crate) fn from_planes_unchecked(
        width: usize,
        height: usize,
        planes: [Vec<f64>; 3],
    ) -> Self {
        Self {
            width,
            height,
            planes,
        }
    }

    pub fn resize_bilinear(&self, width: usize, height: usize) -> Self {
        let planes = [
            resize_bilinear_plane(&self.planes[0], self.width, self.height, width, height),
            resize_bilinear_plane(&self.planes[1], self.width, self.height, width, height),
            resize_bilinear_plane(&self.planes[2], self.width, self.height, width, height),
        ];
        Self {
            width,
            height,
            planes,
        }
    }
}

/// Whether a mask is strictly binary or carries soft alpha values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum MaskKind {
    Binary,
    Soft,
}

/// Single-channel alpha raster in [0, 1].
///
/// Binary masks (every alpha in {0, 1}) are required for training
/// composition; soft masks are accepted at the inference merge.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: usize,
    height: usize,
    alpha: Vec<f64>,
    kind: MaskKind,
}

impl Mask {
    /// Builds a mask, classifying it as binary when every alpha is exactly 0 or 1.
    pub fn new(width: usize, height: usize, alpha: Vec<f64>) -> Result<Self> {
        if width * height != alpha.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} mask needs {} values, got {}",
                width,
                height,
                width * height,
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite() || *a < 0.0 || *a > 1.0) {
            return Err(Error::Numeric("mask alpha must lie in [0, 1]".into()));
        }
        let kind = if alpha.iter().all(|a| *a == 0.0 || *a == 1.0) {
            MaskKind::Binary
        } else {
            MaskKind::Soft
        };
        Ok(Self {
            width,
            height,
            alpha,
            kind,
        })
    }

    /// Builds a binary mask from booleans.
    pub fn from_bits(width: usize, height: usize, bits: &[bool]) -> Result<Self> {
        Self::new(
            width,
            height,
            bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }

    pub fn full(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("constant in range")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn is_binary(&self) -> bool {
        self.kind == MaskKind::Binary
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.alpha[y * self.width + x]
    }

    /// Pixelwise 1 - alpha.
    pub fn inverse(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            alpha: self.alpha.iter().map(|a| 1.0 - a).collect(),
            kind: self.kind,
        }
    }

    /// Foreground (alpha == 1) pixel count for binary masks; for soft masks,
    /// the number of pixels with alpha >= 0.5.
    pub fn coverage_count(&self) -> usize {
        self.alpha.iter().filter(|a| **a >= 0.5).count()
    }

    pub fn coverage_fraction(&self) -> f64 {
        self.coverage_count() as f64 / self.alpha.len() as f64
    }

    /// Thresholds a soft mask at 0.5; binary masks are returned unchanged.
    pub fn binarized(&self) -> Mask {
        if self.is_binary() {
            return self.clone();
        }
        Mask {
            width: self.width,
            height: self.height,
            alpha: self
                .alpha
                .iter()
                .map(|a| if *a >= 0.5 { 1.0 } else { 0.0 })
                .collect(),
            kind: MaskKind::Binary,
        }
    }

    /// Nearest-neighbor resize; keeps binary masks binary.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Mask {
        let mut alpha = vec![0.0; width * height];
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        for y in 0..height {
            let src_y = (((y as f64 + 0.5) * sy) as usize).min(self.height - 1);
            for x in 0..width {
                let src_x = (((x as f64 + 0.5) * sx) as usize).min(self.width - 1);
                alpha[y * width + x] = self.alpha[src_y * self.width + src_x];
            }
        }
        Mask {
            width,
            height,
            alpha,
            kind: self.kind,
        }
    }
}

/// Integer-ID raster of instance segmentation labels; 0 means unlabeled.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMap {
    width: usize,
    height: usize,
    ids: Vec<u32>,
}

impl InstanceMap {
    pub fn new(width: usize, height: usize, ids: Vec<u32>) -> Result<Self> {
        if width * height != ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} instance map needs {} ids, got {}",
                width,
                height,
                width * height,
                ids.len()
            )));
        }
        Ok(Self { width, height, ids })
    }

    /// Instance map with a single instance (id 1) covering the mask foreground.
    pub fn from_mask(mask: &Mask) -> InstanceMap {
        let ids = mask
            .alpha()
            .iter()
            .map(|a| if *a >= 0.5 { 1 } else { 0 })
            .collect();
        InstanceMap {
            width: mask.width(),
            height: mask.height(),
            ids,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Distinct non-zero ids in ascending order.
    pub fn instance_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.ids.iter().copied().filter(|&i| i != 0).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Binary mask of one instance: the exact preimage of `id`.
    pub fn instance_mask(&self, id: u32) -> Mask {
        let bits: Vec<bool> = self.ids.iter().map(|&i| i == id).collect();
        Mask::from_bits(self.width, self.height, &bits).expect("sizes match")
    }

    /// (id, mask) pairs for instances covering at least `min_frac` of the
    /// image, ascending by id.
    pub fn qualifying_instances(&self, min_frac: f64) -> Vec<(u32, Mask)> {
        let total = self.ids.len() as f64;
        let mut counts = std::collections::BTreeMap::new();
        for &id in &self.ids {
            if id != 0 {
                *counts.entry(id).or_insert(0usize) += 1;
            }
        }
        counts
            .into_iter()
            .filter(|(_, n)| *n as f64 / total >= min_frac)
            .map(|(id, _)| (id, self.instance_mask(id)))
            .collect()
    }
}

/// Checks that two rasters share dimensions, with a caller-supplied label.
pub(crate) fn check_dims(
    what: &str,
    aw: usize,
    ah: usize,
    bw: usize,
    bh: usize,
) -> Result<()> {
    if aw != bw || ah != bh {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {aw}x{ah} vs {bw}x{bh}"
        )));
    }
    Ok(())
}

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub(crate) fn resize_bilinear_plane(
    src: &[f64],
    src_w: usize,
    src_h: usize,
    dst_w: usize,
    dst_h: usize,
) -> Vec<f64> {
    let mut out = vec![0.0; dst_w * dst_h];
    let sx = src_w as f64 / dst_w as f64;
    let sy = src_h as f64 / dst_h as f64;
    for y in 0..dst_h {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (src_h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(src_h - 1);
        let wy = fy - y0 as f64;
        for x in 0..dst_w {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (src_w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(src_w - 1);
            let wx = fx - x0 as f64;
            let top = src[y0 * src_w + x0] * (1.0 - wx) + src[y0 * src_w + x1] * wx;
            let bot = src[y1 * src_w + x0] * (1.0 - wx) + src[y1 * src_w + x1] * wx;
            out[y * dst_w + x] = top * (1.0 - wy) + bot * wy;
        }
    }
    out
}
