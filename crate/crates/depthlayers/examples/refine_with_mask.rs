//! Layered refinement of a perturbed depth map under mask guidance with the
//! classical propagation backend: run the backend with the mask and its
//! inverse, then merge the two layers with the mask.
//!
//! ```bash
//! cargo run --release -p depthlayers --example refine_with_mask
//! ```

use depthlayers::compose::composite_depth;
use depthlayers::datagen::{perturb, synthesize_mask, MaskKindTag, PerturbConfig};
use depthlayers::metrics::rmse;
use depthlayers::refine::{refine_layered, PropagationBackend};
use depthlayers::synth::make_scene;
use depthlayers::viz::save_depth_colormap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn main() -> depthlayers::Result<()> {
    let out = Path::new("target/examples-out/refine");
    std::fs::create_dir_all(out).ok();
    let size = 96;

    let a = make_scene(21, size, size);
    let b = make_scene(22, size, size);
    let mask = synthesize_mask(MaskKindTag::Object, size, size, 23);
    let clean = composite_depth(&a.depth, &b.depth, &mask)?;
    let rgb = depthlayers::compose::composite_rgb(&a.rgb, &b.rgb, &mask)?;
    let perturbed = perturb(
        &clean,
        &mask,
        &PerturbConfig::default().with_hole_prob(0.0),
        &mut ChaCha8Rng::seed_from_u64(5),
    )?;

    let backend = PropagationBackend::default();
    let result = refine_layered(&backend, &perturbed, &rgb, &mask)?;

    save_depth_colormap(&clean, &out.join("ground_truth.png"))?;
    save_depth_colormap(&perturbed, &out.join("perturbed.png"))?;
    save_depth_colormap(&result.layer1, &out.join("layer1.png"))?;
    save_depth_colormap(&result.layer2, &out.join("layer2.png"))?;
    save_depth_colormap(&result.merged, &out.join("merged.png"))?;

    println!(
        "rmse vs ground truth: perturbed {:.4} -> merged {:.4}",
        rmse(&perturbed, &clean)?,
        rmse(&result.merged, &clean)?
    );
    println!("layers and merge written to {}", out.display());
    Ok(())
}
