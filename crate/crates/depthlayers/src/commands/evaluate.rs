//! Evaluation command: normalize, scale-shift align, run the metric suite,
//! and aggregate. Two input modes share the metric core: matched prediction /
//! ground-truth file sets, or a generated dataset tree that is refined on the
//! fly (which also powers the mask-degradation sweep).

use crate::compose::align_scale_shift;
use crate::config::RunConfig;
use crate::datagen::{degrade_mask, DegradeOp, TrainingSample};
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate_reports, boundary_error, mbe, r3, rmse, whdr, AggregateReport,
    MetricsReport, ReportFlags,
};
use crate::raster::{DepthMap, InstanceMap};
use crate::refine::{refine_layered, RefinerBackend};
use crate::seed::{derive_seed, tag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default)]
pub struct EvaluateArgs {
    pub pred: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub initial: Option<PathBuf>,
    pub instances: Option<PathBuf>,
    /// Evaluate a generated dataset tree (refining with the configured
    /// backend) instead of matched file sets.
    pub dataset: Option<PathBuf>,
    pub sweep: bool,
    pub out: Option<PathBuf>,
}

/// One row of the mask-degradation table.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub op: DegradeOp,
    pub kernel: usize,
    pub mbe: f64,
    pub rmse: f64,
}

/// Normalizes (full min-max stretch onto the working range) and aligns a
/// prediction to the normalized ground truth, then evaluates the suite.
#[allow(clippy::too_many_arguments)]
fn evaluate_one(
    cfg: &RunConfig,
    name: &str,
    pred: &DepthMap,
    gt: &DepthMap,
    initial: Option<&DepthMap>,
    instances: Option<&InstanceMap>,
    image_index: u64,
) -> Result<MetricsReport> {
    let mut flags = ReportFlags::default();
    let gt_n = crate::compose::normalize_depth(gt)?;
    flags.normalization_degenerate |= gt_n.degenerate;
    let gt = &gt_n.map;

    let align_to_gt = |d: &DepthMap, flags: &mut ReportFlags| -> Result<DepthMap> {
        let n = crate::compose::normalize_depth(d)?;
        flags.normalization_degenerate |= n.degenerate;
        let a = align_scale_shift(&n.map, gt)?;
        flags.alignment_degenerate |= a.degenerate;
        Ok(a.aligned)
    };
    let pred = align_to_gt(pred, &mut flags)?;
    let initial = match initial {
        Some(d) => Some(align_to_gt(d, &mut flags)?),
        None => None,
    };

    let rmse_v = rmse(&pred, gt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.run.seed, tag::EVAL, image_index));
    let whdr_v = whdr(&pred, gt, cfg.metrics.whdr_pairs, cfg.metrics.whdr_delta, &mut rng)?;
    flags.whdr_degenerate = whdr_v.degenerate;
    let (eps_acc, eps_comp) = boundary_error(&pred, gt, &cfg.boundary_params())?;

    let (mbe_v, per_instance) = match instances {
        Some(inst) => {
            let (v, per) = mbe(&pred, gt, inst, cfg.metrics.min_instance_frac)?;
            (Some(v), per)
        }
        None => (None, Vec::new()),
    };
    let (r3_v, improved, worsened) = match &initial {
        Some(init) => {
            let r = r3(&pred, init, gt, cfg.metrics.r3_threshold)?;
            flags.r3_no_change = r.no_change;
            (Some(r.ratio), r.improved, r.worsened)
        }
        None => (None, 0, 0),
    };

    Ok(MetricsReport {
        image: name.to_string(),
        alignment: "normalize-then-align".into(),
        rmse: rmse_v,
        whdr: whdr_v.rate,
        mbe: mbe_v,
        r3: r3_v,
        eps_acc,
        eps_comp,
        pairs_sampled: whdr_v.pairs,
        instance_count: per_instance.len(),
        boundary_pixels: per_instance.iter().map(|p| p.boundary_pixels).sum(),
        improved_pixels: improved,
        worsened_pixels: worsened,
        per_instance,
        flags,
    })
}

/// Matched-file-set evaluation.
pub fn cmd_evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> Result<AggregateReport> {
    if let Some(dataset) = &args.dataset {
        return cmd_evaluate_dataset(cfg, dataset, args);
    }
    let (pred_dir, gt_dir) = match (&args.pred, &args.gt) {
        (Some(p), Some(g)) => (p, g),
        _ => {
            return Err(Error::Usage(
                "evaluate needs --pred and --gt (or --dataset)".into(),
            ))
        }
    };
    let exts: &[&str] = &["pfm", "png"];
    let preds = super::list_files(pred_dir, exts)?;
    let gts = super::list_files(gt_dir, exts)?;
    if preds.len() != gts.len() || preds.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "prediction set has {} files, ground truth {}",
            preds.len(),
            gts.len()
        )));
    }
    let initials = match &args.initial {
        Some(dir) => {
            let list = super::list_files(dir, exts)?;
            if list.len() != preds.len() {
                return Err(Error::DimensionMismatch(format!(
                    "initial set has {} files, predictions {}",
                    list.len(),
                    preds.len()
                )));
            }
            Some(list)
        }
        None => None,
    };
    let instance_files = match &args.instances {
        Some(dir) => {
            let list = super::list_files(dir, &["png"])?;
            if list.len() != preds.len() {
                return Err(Error::DimensionMismatch(format!(
                    "instance set has {} files, predictions {}",
                    list.len(),
                    preds.len()
                )));
            }
            Some(list)
        }
        None => None,
    };

    let pool = super::thread_pool(cfg.run.threads)?;
    let reports: Result<Vec<MetricsReport>> = pool.install(|| {
        (0..preds.len())
            .into_par_iter()
            .map(|i| {
                let pred = crate::io::load_depth(&preds[i])?;
                let gt = crate::io::load_depth(&gts[i])?;
                let initial = match &initials {
                    Some(list) => Some(crate::io::load_depth(&list[i])?),
                    None => None,
                };
                let instances = match &instance_files {
                    Some(list) => Some(crate::io::load_instance_png(&list[i])?),
                    None => None,
                };
                let name = preds[i]
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("image")
                    .to_string();
                evaluate_one(
                    cfg,
                    &name,
                    &pred,
                    &gt,
                    initial.as_ref(),
                    instances.as_ref(),
                    i as u64,
                )
            })
            .collect()
    });
    finish(cfg, reports?, args, None)
}

fn refine_sample(
    backend: &dyn RefinerBackend,
    sample: &TrainingSample,
    degraded: Option<(&DegradeOp, usize)>,
) -> Result<DepthMap> {
    let mask = match degraded {
        Some((op, k)) => degrade_mask(&sample.mask, *op, k)?,
        None => sample.mask.clone(),
    };
    Ok(refine_layered(backend, &sample.perturbed, &sample.rgb, &mask)?.merged)
}

/// Dataset-tree evaluation: refine each sample's perturbed depth with the
/// configured backend, compare against the clean composite, and optionally
/// sweep mask degradations.
pub fn cmd_evaluate_dataset(
    cfg: &RunConfig,
    dataset: &Path,
    args: &EvaluateArgs,
) -> Result<AggregateReport> {
    let samples = crate::datagen::load_dataset(dataset)?;
    let backend = super::build_backend(cfg)?;
    let pool = super::thread_pool(cfg.run.threads)?;

    let reports: Result<Vec<MetricsReport>> = pool.install(|| {
        samples
            .par_iter()
            .enumerate()
            .map(|(i, sample)| {
                let refined = refine_sample(backend.as_ref(), sample, None)?;
                let inst = InstanceMap::from_mask(&sample.mask);
                evaluate_one(
                    cfg,
                    &format!("{i:06}"),
                    &refined,
                    &sample.depth,
                    Some(&sample.perturbed),
                    Some(&inst),
                    i as u64,
                )
            })
            .collect()
    });
    let sweep = if args.sweep {
        Some(run_sweep(cfg, &samples, backend.as_ref(), &pool)?)
    } else {
        None
    };
    finish(cfg, reports?, args, sweep)
}

/// MBE/RMSE versus degradation kernel, per Appendix protocol: the refinement
/// consumes the degraded mask while the metrics keep the original instances.
fn run_sweep(
    cfg: &RunConfig,
    samples: &[TrainingSample],
    backend: &dyn RefinerBackend,
    pool: &rayon::ThreadPool,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for op in [DegradeOp::Opening, DegradeOp::Closing] {
        for &k in &cfg.sweep.kernels {
            let reports: Result<Vec<(f64, f64)>> = pool.install(|| {
                samples
                    .par_iter()
                    .enumerate()
                    .map(|(i, sample)| {
                        let refined = refine_sample(backend, sample, Some((&op, k)))?;
                        let inst = InstanceMap::from_mask(&sample.mask);
                        let report = evaluate_one(
                            cfg,
                            &format!("{i:06}"),
                            &refined,
                            &sample.depth,
                            None,
                            Some(&inst),
                            i as u64,
                        )?;
                        Ok((report.mbe.unwrap_or(f64::NAN), report.rmse))
                    })
                    .collect()
            });
            let pairs = reports?;
            let n = pairs.len().max(1) as f64;
            rows.push(SweepRow {
                op,
                kernel: k,
                mbe: pairs.iter().map(|p| p.0).sum::<f64>() / n,
                rmse: pairs.iter().map(|p| p.1).sum::<f64>() / n,
            });
        }
    }
    Ok(rows)
}


fn finish(
    cfg: &RunConfig,
    reports: Vec<MetricsReport>,
    args: &EvaluateArgs,
    sweep: Option<Vec<SweepRow>>,
) -> Result<AggregateReport> {
    for r in &reports {
        if !r.finite() {
            return Err(Error::Numeric(format!(
                "non-finite metric for image {}",
                r.image
            )));
        }
    }
    let aggregate = aggregate_reports(reports);
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| cfg.paths.output.join("report.json"));
    super::ensure_parent_dir(&out)?;
    crate::io::save_json(&aggregate, &out)?;
    if let Some(rows) = &sweep {
        let sweep_json = out.with_file_name("sweep.json");
        crate::io::save_json(rows, &sweep_json)?;
        let mut csv = String::from("op,kernel,mbe,rmse\n");
        for r in rows {
            csv.push_str(&format!("{},{},{},{}\n", r.op, r.kernel, r.mbe, r.rmse));
        }
        crate::io::atomic_write(&out.with_file_name("sweep.csv"), csv.as_bytes())?;
    }
    println!(
        "evaluated {} images: rmse {:.4} whdr {:.4} mbe {} r3 {} -> {}",
        aggregate.images,
        aggregate.rmse,
        aggregate.whdr,
        aggregate
            .mbe
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".into()),
        aggregate
            .r3
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into()),
        out.display()
    );
    Ok(aggregate)
}
