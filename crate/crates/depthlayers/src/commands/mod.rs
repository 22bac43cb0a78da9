//! Batch-facing commands behind the `depthlayers` CLI. Each command is an
//! ordinary library function so tests and embedding code can drive the same
//! paths the binary does.

mod evaluate;
mod generate;
mod refine_cmd;
mod train_cmd;
mod viz_cmd;

pub use evaluate::{cmd_evaluate, cmd_evaluate_dataset, EvaluateArgs, SweepRow};
pub use generate::{cmd_generate, GenerateSummary};
pub use refine_cmd::{cmd_refine, RefineArgs};
pub use train_cmd::{cmd_train, TrainArgs};
pub use viz_cmd::{cmd_viz, VizArgs};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::refine::{IdentityBackend, PropagationBackend, RefinerBackend};
use crate::toynet::{export_backend, ModelParams};
use std::path::Path;

/// Builds a local worker pool honoring `[run] threads` (0 = all cores).
pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Instantiates the configured refinement backend.
pub fn build_backend(cfg: &RunConfig) -> Result<Box<dyn RefinerBackend>> {
    match cfg.backend.kind.as_str() {
        "identity" => Ok(Box::new(IdentityBackend)),
        "propagation" => Ok(Box::new(PropagationBackend {
            radius: cfg.backend.fmm_radius,
        })),
        "toynet" => {
            let tensors = crate::io::load_named_tensors(&cfg.paths.checkpoint)?;
            let params = ModelParams::from_named_tensors(&tensors, &cfg.paths.checkpoint)?;
            Ok(Box::new(export_backend(params)))
        }
        other => Err(Error::Config(format!("unknown backend '{other}'"))),
    }
}

/// Ingest normalization: inputs already inside the working range pass
/// through untouched; anything else is min-max mapped onto [0, 10].
pub(crate) fn ingest_depth(d: crate::raster::DepthMap) -> Result<(crate::raster::DepthMap, bool)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &v) in d.values().iter().enumerate() {
        if d.is_valid(i) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo >= 0.0 && hi <= crate::compose::DEPTH_RANGE {
        return Ok((d, false));
    }
    let n = crate::compose::normalize_depth(&d)?;
    Ok((n.map, n.degenerate))
}

pub(crate) fn ensure_parent_dir(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}

/// Sorted file listing with one of the given extensions.
pub(crate) fn list_files(dir: &Path, extensions: &[&str]) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if let Some(ext) = path.extension().and_then(|e| e.to_str()) {
            if extensions.contains(&ext.to_ascii_lowercase().as_str()) {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}
