//! Visualization command: colormapped depth PNGs, improvement maps, and
//! point-cloud export.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::metrics::improvement_map;
use std::path::PathBuf;

#[derive(Debug, Clone, Default)]
pub struct VizArgs {
    /// Depth maps to colormap.
    pub depth: Vec<PathBuf>,
    /// (initial, refined, gt) triple for an improvement map.
    pub improvement: Option<(PathBuf, PathBuf, PathBuf)>,
    /// Depth (+ optional RGB) to back-project into an ASCII PLY cloud.
    pub cloud: Option<(PathBuf, Option<PathBuf>)>,
    pub out_dir: PathBuf,
}

pub fn cmd_viz(cfg: &RunConfig, args: &VizArgs) -> Result<()> {
    if args.depth.is_empty() && args.improvement.is_none() && args.cloud.is_none() {
        return Err(Error::Usage(
            "viz needs --depth, --improvement or --cloud inputs".into(),
        ));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    for path in &args.depth {
        let (d, _) = super::ingest_depth(crate::io::load_depth(path)?)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("depth");
        let out = args.out_dir.join(format!("depth_{stem}.png"));
        crate::viz::save_depth_colormap(&d, &out)?;
        println!("wrote {}", out.display());
    }

    if let Some((initial, refined, gt)) = &args.improvement {
        let (initial, _) = super::ingest_depth(crate::io::load_depth(initial)?)?;
        let (refined, _) = super::ingest_depth(crate::io::load_depth(refined)?)?;
        let (gt, _) = super::ingest_depth(crate::io::load_depth(gt)?)?;
        let map = improvement_map(&initial, &refined, &gt)?;
        let out = args.out_dir.join("improvement.png");
        // Saturate the palette at the 2x the r3 threshold.
        crate::viz::save_improvement_png(&map, 2.0 * cfg.metrics.r3_threshold, &out)?;
        println!("wrote {}", out.display());
    }

    if let Some((depth_path, rgb_path)) = &args.cloud {
        let (d, _) = super::ingest_depth(crate::io::load_depth(depth_path)?)?;
        let rgb = match rgb_path {
            Some(p) => Some(crate::io::load_rgb_png(p)?),
            None => None,
        };
        let out = args.out_dir.join("cloud.ply");
        let n = crate::io::save_point_cloud_ply(&d, rgb.as_ref(), &out)?;
        println!("wrote {} ({n} vertices)", out.display());
    }
    Ok(())
}
