//! Mask-guided layered depth refinement, end to end:
//!
//! 1. **raster / compose** — inverse-depth rasters, masks, instance maps;
//!    compositing, merging, normalization, and least-squares scale-shift
//!    alignment.
//! 2. **datagen** — self-supervised training-sample synthesis: random
//!    composition of RGB-D pairs under arbitrary binary masks, morphological
//!    and blur perturbations, hole perturbation, adaptive cropping,
//!    procedural masks, and the mask-degradation harness.
//! 3. **completion** — classical backends: fast-marching propagation fill
//!    and guided bilateral median filtering.
//! 4. **refine** — the layered engine: run a backend with the mask and its
//!    inverse, merge with the mask; instance-map inference via per-pixel
//!    argmax; the layered-propagation baseline.
//! 5. **toynet** — a desk-scale learned backend: tape-based reverse-mode
//!    differentiation, a two-branch encoder-decoder with a low-level skip,
//!    the L1+L2+multi-scale-gradient loss, AdamW, and two-stage training.
//! 6. **metrics** — RMSE, WHDR, depth-boundary chamfer errors, mask boundary
//!    error, the relative refinement ratio, and improvement maps.
//! 7. **io / config / commands** — PFM and PNG formats, binary checkpoints,
//!    PLY export, run configuration, and the CLI command layer.
//!
//! Everything is deterministic given the configured seed: dataset
//! generation, training, and evaluation reproduce byte-identical artifacts
//! for any worker count. See the crate examples for runnable tours of each
//! capability.

pub mod commands;
pub mod completion;
pub mod compose;
pub mod config;
pub mod datagen;
pub mod edt;
pub mod error;
pub mod io;
pub mod metrics;
pub mod raster;
pub mod refine;
pub mod seed;
pub mod synth;
pub mod toynet;
pub mod viz;

pub use compose::{
    align_scale_shift, composite_depth, composite_rgb, merge_layers, normalize_depth,
    AlignmentResult, Normalized, DEPTH_RANGE,
};
pub use error::{Error, Result};
pub use raster::{DepthMap, InstanceMap, Mask, MaskKind, RgbImage};
