//! Training command: stage orchestration, checkpointing with optimizer
//! state, loss CSV logs, and bit-exact resume.

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{load_named_tensors, save_named_tensors};
use crate::seed::{derive_seed, tag};
use crate::toynet::train::{restore_train_state, run_stage, train_state_tensors, LossRow};
use crate::toynet::{AdamW, ModelParams};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default)]
pub struct TrainArgs {
    /// Resume from a previously written checkpoint.
    pub resume: Option<PathBuf>,
    /// Allow stage 2 to start from fresh parameters.
    pub from_scratch: bool,
}

fn write_loss_csv(rows: &[LossRow], path: &Path) -> Result<()> {
    let mut text = String::from("iteration,l1,l2,grad,total\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration, r.l1, r.l2, r.grad, r.total
        ));
    }
    crate::io::atomic_write(path, text.as_bytes())
}

fn save_state(
    params: &ModelParams,
    opt: &AdamW,
    stage: u8,
    iteration: usize,
    path: &Path,
) -> Result<()> {
    super::ensure_parent_dir(path)?;
    save_named_tensors(&train_state_tensors(params, opt, stage, iteration), path)
}

/// Runs the configured stages and writes the checkpoint plus loss CSVs.
/// Returns the final parameters.
pub fn cmd_train(cfg: &RunConfig, args: &TrainArgs) -> Result<ModelParams> {
    let tc = cfg.train_config();
    tc.validate()?;
    let dataset = crate::datagen::load_dataset(&cfg.paths.dataset)?;
    std::fs::create_dir_all(&cfg.paths.output).map_err(|e| Error::io(&cfg.paths.output, e))?;

    // Resume path: continue the stage recorded in the checkpoint.
    if let Some(resume_path) = &args.resume {
        let tensors = load_named_tensors(resume_path)?;
        let (params, opt, stage, iteration) = restore_train_state(&tensors, tc.optim, resume_path)?;
        let (outcome, opt) = run_stage(&tc, &dataset, params, opt, stage, iteration, None)?;
        let total = if stage == 1 { tc.iters_stage1 } else { tc.iters_stage2 };
        save_state(&outcome.params, &opt, stage, total, &cfg.paths.checkpoint)?;
        write_loss_csv(
            &outcome.history,
            &cfg.paths.output.join(format!("loss_stage{stage}_resumed.csv")),
        )?;
        let mut params = outcome.params;
        if stage == 1 && cfg.train.stage == "all" {
            params = run_stage2_and_save(cfg, &tc, &dataset, params)?;
        }
        return Ok(params);
    }

    match cfg.train.stage.as_str() {
        "1" => {
            let params = run_stage1_and_save(cfg, &tc, &dataset)?;
            Ok(params)
        }
        "2" => {
            let init = if args.from_scratch {
                ModelParams::init(tc.widths, derive_seed(tc.seed, tag::INIT, 1))
            } else {
                let tensors = load_named_tensors(&cfg.paths.checkpoint).map_err(|_| {
                    Error::Usage(format!(
                        "stage 2 needs a stage-1 checkpoint at {} (or --from-scratch)",
                        cfg.paths.checkpoint.display()
                    ))
                })?;
                ModelParams::from_named_tensors(&tensors, &cfg.paths.checkpoint)?
            };
            run_stage2_and_save(cfg, &tc, &dataset, init)
        }
        "all" => {
            let params = run_stage1_and_save(cfg, &tc, &dataset)?;
            run_stage2_and_save(cfg, &tc, &dataset, params)
        }
        other => Err(Error::Config(format!("unknown stage '{other}'"))),
    }
}

fn run_stage1_and_save(
    cfg: &RunConfig,
    tc: &crate::toynet::TrainConfig,
    dataset: &[crate::datagen::TrainingSample],
) -> Result<ModelParams> {
    let params = ModelParams::init(tc.widths, derive_seed(tc.seed, tag::INIT, 1));
    let opt = AdamW::new(tc.optim, &params);
    let (outcome, opt) = run_stage(tc, dataset, params, opt, 1, 0, None)?;
    save_state(
        &outcome.params,
        &opt,
        1,
        tc.iters_stage1,
        &cfg.paths.checkpoint,
    )?;
    write_loss_csv(&outcome.history, &cfg.paths.output.join("loss_stage1.csv"))?;
    if outcome.skipped_steps > 0 {
        eprintln!("stage 1: skipped {} non-finite steps", outcome.skipped_steps);
    }
    println!(
        "stage 1 done: {} iterations, {} parameters -> {}",
        tc.iters_stage1,
        outcome.params.parameter_count(),
        cfg.paths.checkpoint.display()
    );
    Ok(outcome.params)
}

fn run_stage2_and_save(
    cfg: &RunConfig,
    tc: &crate::toynet::TrainConfig,
    dataset: &[crate::datagen::TrainingSample],
    init: ModelParams,
) -> Result<ModelParams> {
    let opt = AdamW::new(tc.optim, &init);
    let (outcome, opt) = run_stage(tc, dataset, init, opt, 2, 0, None)?;
    save_state(
        &outcome.params,
        &opt,
        2,
        tc.iters_stage2,
        &cfg.paths.checkpoint,
    )?;
    write_loss_csv(&outcome.history, &cfg.paths.output.join("loss_stage2.csv"))?;
    if outcome.skipped_steps > 0 {
        eprintln!("stage 2: skipped {} non-finite steps", outcome.skipped_steps);
    }
    println!(
        "stage 2 done: {} iterations -> {}",
        tc.iters_stage2,
        cfg.paths.checkpoint.display()
    );
    Ok(outcome.params)
}
