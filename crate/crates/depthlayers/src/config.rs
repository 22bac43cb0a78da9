//! Run configuration: a flat key-value text format with sections, chosen so
//! experiment records stay reproducible and diffable. `parse(to_text(cfg))`
//! is lossless.
//!
//! ```text
//! [run]
//! seed = 7
//! threads = 0
//! ```
//!
//! Overrides take the form `section.key=value` on the command line.

use crate::datagen::PerturbConfig;
use crate::error::{Error, Result};
use crate::metrics::BoundaryParams;
use crate::toynet::{NetWidths, OptimConfig, TrainConfig};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub seed: u64,
    /// Worker threads for parallel sections; 0 uses all cores.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathsSection {
    pub dataset: PathBuf,
    pub holdout: PathBuf,
    pub checkpoint: PathBuf,
    pub output: PathBuf,
    /// Optional directory of user-supplied mask PNGs for generation.
    pub mask_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSection {
    pub count: usize,
    pub patch: usize,
    /// Synthetic source scenes are rendered at this size, then cropped.
    pub source_size: usize,
    pub object_frac: f64,
    pub sky_frac: f64,
    pub human_frac: f64,
    /// Fraction of human masks that carry holes.
    pub human_hole_frac: f64,
    /// Gate for the photometric-augmentation pass (currently a pass-through).
    pub photometric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub patch: usize,
    pub batch: usize,
    pub iters_stage1: usize,
    pub iters_stage2: usize,
    pub lr: f64,
    pub decay1: f64,
    pub decay2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// "1", "2", or "all".
    pub stage: String,
    pub enc0: usize,
    pub enc1: usize,
    pub enc2: usize,
    pub low_width: usize,
    pub head_width: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSection {
    pub r3_threshold: f64,
    pub whdr_delta: f64,
    pub whdr_pairs: usize,
    pub edge_threshold: f64,
    pub chamfer_cap: f64,
    pub min_instance_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendSection {
    /// "toynet", "propagation", or "identity".
    pub kind: String,
    pub fmm_radius: usize,
    pub baseline_dilate: usize,
    pub baseline_erode: usize,
    pub bmf_window: usize,
    pub bmf_sigma_color: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub kernels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run: RunSection,
    pub paths: PathsSection,
    pub generate: GenerateSection,
    pub perturb: PerturbConfig,
    pub train: TrainSection,
    pub metrics: MetricsSection,
    pub backend: BackendSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run: RunSection { seed: 0, threads: 0 },
            paths: PathsSection {
                dataset: PathBuf::from("data/train"),
                holdout: PathBuf::from("data/holdout"),
                checkpoint: PathBuf::from("out/model.dlyr"),
                output: PathBuf::from("out"),
                mask_dir: None,
            },
            generate: GenerateSection {
                count: 500,
                patch: 64,
                source_size: 96,
                object_frac: 0.5,
                sky_frac: 0.2,
                human_frac: 0.3,
                human_hole_frac: 0.5,
                photometric: false,
            },
            perturb: PerturbConfig::default(),
            train: TrainSection {
                patch: 64,
                batch: 1,
                iters_stage1: 2000,
                iters_stage2: 2000,
                lr: 1e-4,
                decay1: 0.6,
                decay2: 0.8,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                weight_decay: 0.01,
                stage: "all".into(),
                enc0: 16,
                enc1: 32,
                enc2: 64,
                low_width: 8,
                head_width: 8,
            },
            metrics: MetricsSection {
                r3_threshold: 0.05,
                whdr_delta: 0.1,
                whdr_pairs: 10_000,
                edge_threshold: 0.05,
                chamfer_cap: 10.0,
                min_instance_frac: 0.01,
            },
            backend: BackendSection {
                kind: "toynet".into(),
                fmm_radius: 5,
                baseline_dilate: 5,
                baseline_erode: 5,
                bmf_window: 7,
                bmf_sigma_color: 0.1,
            },
            sweep: SweepSection {
                kernels: vec![0, 3, 5, 7, 9],
            },
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(&section, key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("override '{assignment}' is not key=value")))?;
        let (section, key) = path.trim().split_once('.').ok_or_else(|| {
            Error::Usage(format!("override key '{path}' must be section.key"))
        })?;
        self.set(section, key, value.trim())
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        fn p<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| {
                Error::Config(format!("[{section}] {key}: cannot parse '{value}'"))
            })
        }
        match (section, key) {
            ("run", "seed") => self.run.seed = p(section, key, value)?,
            ("run", "threads") => self.run.threads = p(section, key, value)?,
            ("paths", "dataset") => self.paths.dataset = PathBuf::from(value),
            ("paths", "holdout") => self.paths.holdout = PathBuf::from(value),
            ("paths", "checkpoint") => self.paths.checkpoint = PathBuf::from(value),
            ("paths", "output") => self.paths.output = PathBuf::from(value),
            ("paths", "mask_dir") => {
                self.paths.mask_dir = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            ("generate", "count") => self.generate.count = p(section, key, value)?,
            ("generate", "patch") => self.generate.patch = p(section, key, value)?,
            ("generate", "source_size") => self.generate.source_size = p(section, key, value)?,
            ("generate", "object_frac") => self.generate.object_frac = p(section, key, value)?,
            ("generate", "sky_frac") => self.generate.sky_frac = p(section, key, value)?,
            ("generate", "human_frac") => self.generate.human_frac = p(section, key, value)?,
            ("generate", "human_hole_frac") => {
                self.generate.human_hole_frac = p(section, key, value)?
            }
            ("generate", "photometric") => self.generate.photometric = p(section, key, value)?,
            ("perturb", "morph_iter_min") => {
                self.perturb.morph_iter_range.0 = p(section, key, value)?
            }
            ("perturb", "morph_iter_max") => {
                self.perturb.morph_iter_range.1 = p(section, key, value)?
            }
            ("perturb", "morph_kernel") => self.perturb.morph_kernel = p(section, key, value)?,
            ("perturb", "blur_small_min") => {
                self.perturb.blur_small_sigma.0 = p(section, key, value)?
            }
            ("perturb", "blur_small_max") => {
                self.perturb.blur_small_sigma.1 = p(section, key, value)?
            }
            ("perturb", "blur_large_min") => {
                self.perturb.blur_large_sigma.0 = p(section, key, value)?
            }
            ("perturb", "blur_large_max") => {
                self.perturb.blur_large_sigma.1 = p(section, key, value)?
            }
            ("perturb", "blur_small_prob") => {
                self.perturb.blur_small_prob = p(section, key, value)?
            }
            ("perturb", "order_scheme_prob") => {
                self.perturb.order_scheme_prob = p(section, key, value)?
            }
            ("perturb", "hole_ring_width") => {
                self.perturb.hole_ring_width = p(section, key, value)?
            }
            ("perturb", "hole_perturb_prob") => {
                self.perturb.hole_perturb_prob = p(section, key, value)?
            }
            ("train", "patch") => self.train.patch = p(section, key, value)?,
            ("train", "batch") => self.train.batch = p(section, key, value)?,
            ("train", "iters_stage1") => self.train.iters_stage1 = p(section, key, value)?,
            ("train", "iters_stage2") => self.train.iters_stage2 = p(section, key, value)?,
            ("train", "lr") => self.train.lr = p(section, key, value)?,
            ("train", "decay1") => self.train.decay1 = p(section, key, value)?,
            ("train", "decay2") => self.train.decay2 = p(section, key, value)?,
            ("train", "beta1") => self.train.beta1 = p(section, key, value)?,
            ("train", "beta2") => self.train.beta2 = p(section, key, value)?,
            ("train", "eps") => self.train.eps = p(section, key, value)?,
            ("train", "weight_decay") => self.train.weight_decay = p(section, key, value)?,
            ("train", "stage") => {
                if !matches!(value, "1" | "2" | "all") {
                    return Err(Error::Config(format!(
                        "[train] stage must be 1, 2 or all, got '{value}'"
                    )));
                }
                self.train.stage = value.to_string();
            }
            ("train", "enc0") => self.train.enc0 = p(section, key, value)?,
            ("train", "enc1") => self.train.enc1 = p(section, key, value)?,
            ("train", "enc2") => self.train.enc2 = p(section, key, value)?,
            ("train", "low_width") => self.train.low_width = p(section, key, value)?,
            ("train", "head_width") => self.train.head_width = p(section, key, value)?,
            ("metrics", "r3_threshold") => self.metrics.r3_threshold = p(section, key, value)?,
            ("metrics", "whdr_delta") => self.metrics.whdr_delta = p(section, key, value)?,
            ("metrics", "whdr_pairs") => self.metrics.whdr_pairs = p(section, key, value)?,
            ("metrics", "edge_threshold") => {
                self.metrics.edge_threshold = p(section, key, value)?
            }
            ("metrics", "chamfer_cap") => self.metrics.chamfer_cap = p(section, key, value)?,
            ("metrics", "min_instance_frac") => {
                self.metrics.min_instance_frac = p(section, key, value)?
            }
            ("backend", "kind") => {
                if !matches!(value, "toynet" | "propagation" | "identity") {
                    return Err(Error::Config(format!(
                        "[backend] kind must be toynet, propagation or identity, got '{value}'"
                    )));
                }
                self.backend.kind = value.to_string();
            }
            ("backend", "fmm_radius") => self.backend.fmm_radius = p(section, key, value)?,
            ("backend", "baseline_dilate") => {
                self.backend.baseline_dilate = p(section, key, value)?
            }
            ("backend", "baseline_erode") => {
                self.backend.baseline_erode = p(section, key, value)?
            }
            ("backend", "bmf_window") => self.backend.bmf_window = p(section, key, value)?,
            ("backend", "bmf_sigma_color") => {
                self.backend.bmf_sigma_color = p(section, key, value)?
            }
            ("sweep", "kernels") => {
                let mut kernels = Vec::new();
                for item in value.split(',') {
                    kernels.push(p(section, key, item.trim())?);
                }
                self.sweep.kernels = kernels;
            }
            _ => {
                return Err(Error::Config(format!(
                    "unknown configuration key [{section}] {key}"
                )))
            }
        }
        Ok(())
    }

    /// Canonical serialization; `parse` of the result reproduces `self`.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "seed = {}", self.run.seed);
        let _ = writeln!(s, "threads = {}", self.run.threads);
        let _ = writeln!(s, "\n[paths]");
        let _ = writeln!(s, "dataset = {}", self.paths.dataset.display());
        let _ = writeln!(s, "holdout = {}", self.paths.holdout.display());
        let _ = writeln!(s, "checkpoint = {}", self.paths.checkpoint.display());
        let _ = writeln!(s, "output = {}", self.paths.output.display());
        if let Some(dir) = &self.paths.mask_dir {
            let _ = writeln!(s, "mask_dir = {}", dir.display());
        }
        let _ = writeln!(s, "\n[generate]");
        let g = &self.generate;
        let _ = writeln!(s, "count = {}", g.count);
        let _ = writeln!(s, "patch = {}", g.patch);
        let _ = writeln!(s, "source_size = {}", g.source_size);
        let _ = writeln!(s, "object_frac = {}", g.object_frac);
        let _ = writeln!(s, "sky_frac = {}", g.sky_frac);
        let _ = writeln!(s, "human_frac = {}", g.human_frac);
        let _ = writeln!(s, "human_hole_frac = {}", g.human_hole_frac);
        let _ = writeln!(s, "photometric = {}", g.photometric);
        let _ = writeln!(s, "\n[perturb]");
        let p = &self.perturb;
        let _ = writeln!(s, "morph_iter_min = {}", p.morph_iter_range.0);
        let _ = writeln!(s, "morph_iter_max = {}", p.morph_iter_range.1);
        let _ = writeln!(s, "morph_kernel = {}", p.morph_kernel);
        let _ = writeln!(s, "blur_small_min = {}", p.blur_small_sigma.0);
        let _ = writeln!(s, "blur_small_max = {}", p.blur_small_sigma.1);
        let _ = writeln!(s, "blur_large_min = {}", p.blur_large_sigma.0);
        let _ = writeln!(s, "blur_large_max = {}", p.blur_large_sigma.1);
        let _ = writeln!(s, "blur_small_prob = {}", p.blur_small_prob);
        let _ = writeln!(s, "order_scheme_prob = {}", p.order_scheme_prob);
        let _ = writeln!(s, "hole_ring_width = {}", p.hole_ring_width);
        let _ = writeln!(s, "hole_perturb_prob = {}", p.hole_perturb_prob);
        let _ = writeln!(s, "\n[train]");
        let t = &self.train;
        let _ = writeln!(s, "patch = {}", t.patch);
        let _ = writeln!(s, "batch = {}", t.batch);
        let _ = writeln!(s, "iters_stage1 = {}", t.iters_stage1);
        let _ = writeln!(s, "iters_stage2 = {}", t.iters_stage2);
        let _ = writeln!(s, "lr = {}", t.lr);
        let _ = writeln!(s, "decay1 = {}", t.decay1);
        let _ = writeln!(s, "decay2 = {}", t.decay2);
        let _ = writeln!(s, "beta1 = {}", t.beta1);
        let _ = writeln!(s, "beta2 = {}", t.beta2);
        let _ = writeln!(s, "eps = {}", t.eps);
        let _ = writeln!(s, "weight_decay = {}", t.weight_decay);
        let _ = writeln!(s, "stage = {}", t.stage);
        let _ = writeln!(s, "enc0 = {}", t.enc0);
        let _ = writeln!(s, "enc1 = {}", t.enc1);
        let _ = writeln!(s, "enc2 = {}", t.enc2);
        let _ = writeln!(s, "low_width = {}", t.low_width);
        let _ = writeln!(s, "head_width = {}", t.head_width);
        let _ = writeln!(s, "\n[metrics]");
        let m = &self.metrics;
        let _ = writeln!(s, "r3_threshold = {}", m.r3_threshold);
        let _ = writeln!(s, "whdr_delta = {}", m.whdr_delta);
        let _ = writeln!(s, "whdr_pairs = {}", m.whdr_pairs);
        let _ = writeln!(s, "edge_threshold = {}", m.edge_threshold);
        let _ = writeln!(s, "chamfer_cap = {}", m.chamfer_cap);
        let _ = writeln!(s, "min_instance_frac = {}", m.min_instance_frac);
        let _ = writeln!(s, "\n[backend]");
        let b = &self.backend;
        let _ = writeln!(s, "kind = {}", b.kind);
        let _ = writeln!(s, "fmm_radius = {}", b.fmm_radius);
        let _ = writeln!(s, "baseline_dilate = {}", b.baseline_dilate);
        let _ = writeln!(s, "baseline_erode = {}", b.baseline_erode);
        let _ = writeln!(s, "bmf_window = {}", b.bmf_window);
        let _ = writeln!(s, "bmf_sigma_color = {}", b.bmf_sigma_color);
        let _ = writeln!(s, "\n[sweep]");
        let kernels: Vec<String> = self.sweep.kernels.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "kernels = {}", kernels.join(","));
        s
    }

    /// Typed trainer configuration assembled from the train section.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            patch: self.train.patch,
            batch: self.train.batch,
            iters_stage1: self.train.iters_stage1,
            iters_stage2: self.train.iters_stage2,
            optim: OptimConfig {
                lr: self.train.lr,
                beta1: self.train.beta1,
                beta2: self.train.beta2,
                eps: self.train.eps,
                weight_decay: self.train.weight_decay,
                milestones: (self.train.decay1, self.train.decay2),
            },
            widths: NetWidths {
                encoder: [self.train.enc0, self.train.enc1, self.train.enc2],
                low_level: self.train.low_width,
                head: self.train.head_width,
            },
            seed: self.run.seed,
        }
    }

    pub fn boundary_params(&self) -> BoundaryParams {
        BoundaryParams {
            edge_threshold: self.metrics.edge_threshold,
            cap: self.metrics.chamfer_cap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip_is_lossless() {
        let mut cfg = RunConfig::default();
        cfg.run.seed = 99;
        cfg.train.lr = 0.000125;
        cfg.sweep.kernels = vec![0, 3, 9];
        cfg.paths.mask_dir = Some(PathBuf::from("masks"));
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("train.iters_stage1=123").unwrap();
        cfg.apply_override("backend.kind=identity").unwrap();
        assert_eq!(cfg.train.iters_stage1, 123);
        assert_eq!(cfg.backend.kind, "identity");
        assert!(cfg.apply_override("nonsense").is_err());
        assert!(cfg.apply_override("no.such=key").is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let text = "# heading\n[run]\nseed = 4  # trailing\n\n[train]\nbatch = 2\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.run.seed, 4);
        assert_eq!(cfg.train.batch, 2);
    }

    #[test]
    fn bad_stage_rejected() {
        assert!(RunConfig::parse("[train]\nstage = 3\n").is_err());
    }
}
