//! Two-stage training of the toy network on an in-memory synthetic dataset,
//! small enough to finish in about a minute.
//!
//! Stage 1 learns depth completion on clean composites; stage 2 adds
//! perturbations, runs the network with the mask and its inverse, and
//! supervises both layers plus their merge.
//!
//! ```bash
//! cargo run --release -p depthlayers --example train_toynet
//! ```

use depthlayers::datagen::{generate_sample, synthesize_mask, MaskKindTag, PerturbConfig};
use depthlayers::io::save_named_tensors;
use depthlayers::seed::{derive_seed, tag};
use depthlayers::synth::make_scene;
use depthlayers::toynet::{train_stage1, train_stage2, NetWidths, TrainConfig};
use std::path::Path;

fn main() -> depthlayers::Result<()> {
    let out = Path::new("target/examples-out/train");
    std::fs::create_dir_all(out).ok();
    let patch = 32;
    let data: Vec<_> = (0..64u64)
        .map(|i| {
            let a = make_scene(derive_seed(3, tag::SCENE_A, i), patch, patch);
            let b = make_scene(derive_seed(3, tag::SCENE_B, i), patch, patch);
            let m = synthesize_mask(MaskKindTag::Object, patch, patch, derive_seed(3, tag::MASK, i));
            generate_sample(
                &a,
                &b,
                &m,
                &PerturbConfig::default().with_hole_prob(0.0),
                patch,
                derive_seed(3, tag::SAMPLE, i),
            )
            .unwrap()
        })
        .collect();

    let cfg = TrainConfig {
        patch,
        iters_stage1: 300,
        iters_stage2: 300,
        widths: NetWidths {
            encoder: [8, 12, 16],
            low_level: 4,
            head: 4,
        },
        seed: 3,
        ..TrainConfig::default()
    };

    let s1 = train_stage1(&cfg, &data)?;
    println!(
        "stage 1: loss {:.4} -> {:.4} over {} iterations",
        s1.history.first().unwrap().total,
        s1.history.last().unwrap().total,
        s1.history.len()
    );
    let s2 = train_stage2(&cfg, &data, s1.params)?;
    println!(
        "stage 2: loss {:.4} -> {:.4} over {} iterations",
        s2.history.first().unwrap().total,
        s2.history.last().unwrap().total,
        s2.history.len()
    );

    let ckpt = out.join("model.dlyr");
    save_named_tensors(&s2.params.to_named_tensors(), &ckpt)?;
    println!(
        "checkpoint with {} parameters -> {}",
        s2.params.parameter_count(),
        ckpt.display()
    );
    Ok(())
}
