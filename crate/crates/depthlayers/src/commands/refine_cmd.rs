//! Single-image refinement command: mask mode (layered refine-and-merge,
//! optionally emitting the layers) and instance-map mode (argmax merge).

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::raster::RgbImage;
use crate::refine::{refine_instances, refine_layered};
use std::path::PathBuf;

#[derive(Debug, Clone, Default)]
pub struct RefineArgs {
    pub depth: PathBuf,
    pub rgb: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    pub out: PathBuf,
    pub emit_layers: bool,
    /// Run the backend at this square resolution instead of native, resizing
    /// the result back.
    pub infer_size: Option<usize>,
}

/// Refines one depth map and writes the result (PFM or 16-bit PNG by
/// extension).
pub fn cmd_refine(cfg: &RunConfig, args: &RefineArgs) -> Result<()> {
    if args.mask.is_none() && args.instances.is_none() {
        return Err(Error::Usage(
            "refine needs --mask or --instances".into(),
        ));
    }
    let raw = crate::io::load_depth(&args.depth)?;
    let (depth, degenerate) = super::ingest_depth(raw)?;
    if degenerate {
        eprintln!("warning: constant input depth normalized to mid-range");
    }
    let rgb = match &args.rgb {
        Some(path) => crate::io::load_rgb_png(path)?,
        // The propagation and identity backends ignore the guide; a neutral
        // plane keeps the interface uniform.
        None => RgbImage::constant(depth.width(), depth.height(), [0.5; 3]),
    };
    let backend = super::build_backend(cfg)?;
    super::ensure_parent_dir(&args.out)?;

    let native = (depth.width(), depth.height());
    let (depth, rgb) = match args.infer_size {
        Some(s) => (depth.resize_bilinear(s, s)?, rgb.resize_bilinear(s, s)),
        None => (depth, rgb),
    };

    if let Some(mask_path) = &args.mask {
        let mut mask = crate::io::load_mask_png(mask_path)?;
        if let Some(s) = args.infer_size {
            mask = mask.resize_nearest(s, s);
        }
        let mut result = refine_layered(backend.as_ref(), &depth, &rgb, &mask)?;
        if args.infer_size.is_some() {
            result.merged = result.merged.resize_bilinear(native.0, native.1)?;
            result.layer1 = result.layer1.resize_bilinear(native.0, native.1)?;
            result.layer2 = result.layer2.resize_bilinear(native.0, native.1)?;
        }
        crate::io::save_depth(&result.merged, &args.out)?;
        if args.emit_layers {
            let layer_path = |tag: &str| -> PathBuf {
                let stem = args
                    .out
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("refined");
                let ext = args
                    .out
                    .extension()
                    .and_then(|s| s.to_str())
                    .unwrap_or("pfm");
                args.out.with_file_name(format!("{stem}.{tag}.{ext}"))
            };
            crate::io::save_depth(&result.layer1, &layer_path("layer1"))?;
            crate::io::save_depth(&result.layer2, &layer_path("layer2"))?;
        }
        println!(
            "refined {} with backend '{}' -> {}",
            args.depth.display(),
            cfg.backend.kind,
            args.out.display()
        );
        return Ok(());
    }

    let inst_path = args.instances.as_ref().expect("checked above");
    let instances = crate::io::load_instance_png(inst_path)?;
    if args.infer_size.is_some() {
        return Err(Error::Usage(
            "--infer-size applies to mask mode; instance maps run at native resolution".into(),
        ));
    }
    let refined = refine_instances(
        backend.as_ref(),
        &depth,
        &rgb,
        &instances,
        cfg.metrics.min_instance_frac,
    )?;
    crate::io::save_depth(&refined, &args.out)?;
    println!(
        "refined {} over {} instances -> {}",
        args.depth.display(),
        instances.instance_ids().len(),
        args.out.display()
    );
    Ok(())
}
