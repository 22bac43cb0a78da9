//! Classical depth completion and filtering backends.

mod bilateral;
mod fmm;

pub use bilateral::bilateral_median;
pub use fmm::{propagate_fill, FillRegion};
