//! Thin CLI over the depthlayers library.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use depthlayers::commands::{
    cmd_evaluate, cmd_generate, cmd_refine, cmd_train, cmd_viz, EvaluateArgs, RefineArgs,
    TrainArgs, VizArgs,
};
use depthlayers::config::RunConfig;
use depthlayers::error::{Error, Result};
use std::path::PathBuf;

const USAGE: &str = "usage: depthlayers <command> [--config PATH] [options] [section.key=value ...]

commands:
  generate   synthesize a training dataset tree
  train      run stage 1 / stage 2 training (--resume CKPT, --from-scratch)
  refine     refine one depth map (--depth D [--rgb I] --mask M | --instances S) --out OUT [--emit-layers] [--infer-size N]
  evaluate   metric reports (--pred DIR --gt DIR [--initial DIR] [--instances DIR] | --dataset DIR [--sweep]) [--out PATH]
  viz        visual artifacts (--depth D ... | --improvement INIT REFINED GT | --cloud D [RGB]) --out DIR

every option may also be set through the config file; trailing
section.key=value arguments override configuration values.";

fn run() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let command = args
        .first()
        .cloned()
        .ok_or_else(|| Error::Usage(USAGE.into()))?;

    let mut pos = 1usize;
    let take = |pos: &mut usize, flag: &str| -> Result<String> {
        let v = args
            .get(*pos)
            .cloned()
            .ok_or_else(|| Error::Usage(format!("{flag} needs a value")))?;
        *pos += 1;
        Ok(v)
    };

    let mut cfg_path: Option<PathBuf> = None;
    let mut overrides: Vec<String> = Vec::new();
    let mut train_args = TrainArgs::default();
    let mut refine_args = RefineArgs::default();
    let mut eval_args = EvaluateArgs::default();
    let mut viz_args = VizArgs::default();
    let mut out: Option<PathBuf> = None;

    while pos < args.len() {
        let arg = args[pos].clone();
        pos += 1; // consume the flag itself
        match arg.as_str() {
            "--config" => cfg_path = Some(take(&mut pos, "--config")?.into()),
            "--resume" => train_args.resume = Some(take(&mut pos, "--resume")?.into()),
            "--from-scratch" => train_args.from_scratch = true,
            "--depth" => {
                let v: PathBuf = take(&mut pos, "--depth")?.into();
                refine_args.depth = v.clone();
                viz_args.depth.push(v);
            }
            "--rgb" => refine_args.rgb = Some(take(&mut pos, "--rgb")?.into()),
            "--mask" => refine_args.mask = Some(take(&mut pos, "--mask")?.into()),
            "--instances" => {
                let v: PathBuf = take(&mut pos, "--instances")?.into();
                refine_args.instances = Some(v.clone());
                eval_args.instances = Some(v);
            }
            "--emit-layers" => refine_args.emit_layers = true,
            "--infer-size" => {
                let v = take(&mut pos, "--infer-size")?;
                refine_args.infer_size = Some(v.parse().map_err(|_| {
                    Error::Usage(format!("--infer-size needs a pixel count, got '{v}'"))
                })?);
            }
            "--pred" => eval_args.pred = Some(take(&mut pos, "--pred")?.into()),
            "--gt" => eval_args.gt = Some(take(&mut pos, "--gt")?.into()),
            "--initial" => eval_args.initial = Some(take(&mut pos, "--initial")?.into()),
            "--dataset" => eval_args.dataset = Some(take(&mut pos, "--dataset")?.into()),
            "--sweep" => eval_args.sweep = true,
            "--improvement" => {
                let a: PathBuf = take(&mut pos, "--improvement")?.into();
                let b: PathBuf = take(&mut pos, "--improvement")?.into();
                let c: PathBuf = take(&mut pos, "--improvement")?.into();
                viz_args.improvement = Some((a, b, c));
            }
            "--cloud" => {
                let d: PathBuf = take(&mut pos, "--cloud")?.into();
                // Optional RGB path follows unless the next token is a flag
                // or an override.
                let rgb = match args.get(pos) {
                    Some(next) if !next.starts_with("--") && !next.contains('=') => {
                        pos += 1;
                        Some(PathBuf::from(next.clone()))
                    }
                    _ => None,
                };
                viz_args.cloud = Some((d, rgb));
            }
            "--out" => out = Some(take(&mut pos, "--out")?.into()),
            other if other.contains('=') && !other.starts_with("--") => {
                overrides.push(other.to_string());
            }
            other => {
                return Err(Error::Usage(format!("unknown argument '{other}'\n\n{USAGE}")))
            }
        }
    }

    let mut cfg = match cfg_path {
        Some(path) => RunConfig::load(&path)?,
        None => RunConfig::default(),
    };
    for assignment in &overrides {
        cfg.apply_override(assignment)?;
    }

    match command.as_str() {
        "generate" => {
            cmd_generate(&cfg)?;
        }
        "train" => {
            cmd_train(&cfg, &train_args)?;
        }
        "refine" => {
            refine_args.out = out.ok_or_else(|| Error::Usage("refine needs --out".into()))?;
            cmd_refine(&cfg, &refine_args)?;
        }
        "evaluate" => {
            eval_args.out = out;
            cmd_evaluate(&cfg, &eval_args)?;
        }
        "viz" => {
            viz_args.out_dir = out.ok_or_else(|| Error::Usage("viz needs --out".into()))?;
            cmd_viz(&cfg, &viz_args)?;
        }
        other => return Err(Error::Usage(format!("unknown command '{other}'\n\n{USAGE}"))),
    }
    Ok(())
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err}");
        let mut source = std::error::Error::source(&err);
        while let Some(cause) = source {
            eprintln!("  caused by: {cause}");
            source = cause.source();
        }
        std::process::exit(err.exit_code());
    }
}
