//! Inference wrapper exporting trained parameters as a refinement backend.

use crate::error::Result;
use crate::raster::{DepthMap, Mask, RgbImage};
use crate::refine::RefinerBackend;
use crate::toynet::model::{forward, ModelParams};

/// A trained network packaged for the layered engine; immutable after export
/// and safe for concurrent use.
pub struct ToynetBackend {
    params: ModelParams,
}

impl ToynetBackend {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

/// Wraps parameters as a [`RefinerBackend`]; inference only, no tape kept.
pub fn export_backend(params: ModelParams) -> ToynetBackend {
    ToynetBackend { params }
}

impl RefinerBackend for ToynetBackend {
    fn refine_layer(&self, depth: &DepthMap, rgb: &RgbImage, mask: &Mask) -> Result<DepthMap> {
        forward(&self.params, depth, rgb, mask)
    }

    fn name(&self) -> &'static str {
        "toynet"
    }
}
