//! The classical layered-propagation baseline: fast-marching completion run
//! twice with safety margins (outpaint from the eroded mask, inpaint the
//! dilated mask), merged with the original mask.
//!
//! ```bash
//! cargo run --release -p depthlayers --example propagation_baseline
//! ```

use depthlayers::compose::composite_depth;
use depthlayers::datagen::{perturb, synthesize_mask, MaskKindTag, PerturbConfig};
use depthlayers::metrics::{mbe, rmse};
use depthlayers::raster::InstanceMap;
use depthlayers::refine::baseline_layered_propagation;
use depthlayers::synth::make_scene;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> depthlayers::Result<()> {
    let size = 96;
    let a = make_scene(51, size, size);
    let b = make_scene(52, size, size);
    let mask = synthesize_mask(MaskKindTag::Object, size, size, 53);
    let clean = composite_depth(&a.depth, &b.depth, &mask)?;
    let perturbed = perturb(
        &clean,
        &mask,
        &PerturbConfig::default().with_hole_prob(0.0),
        &mut ChaCha8Rng::seed_from_u64(54),
    )?;

    // 5x5 dilation and erosion kernels around the mask boundary.
    let merged = baseline_layered_propagation(&perturbed, &mask, 5, 5, 5)?;

    let inst = InstanceMap::from_mask(&mask);
    println!(
        "rmse: perturbed {:.4} -> baseline {:.4}",
        rmse(&perturbed, &clean)?,
        rmse(&merged, &clean)?
    );
    println!(
        "mask boundary error: perturbed {:.4} -> baseline {:.4}",
        mbe(&perturbed, &clean, &inst, 0.01)?.0,
        mbe(&merged, &clean, &inst, 0.01)?.0
    );
    Ok(())
}
