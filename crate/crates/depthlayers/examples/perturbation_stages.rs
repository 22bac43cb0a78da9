//! Walk through the three perturbation families stage by stage on one
//! composite scene, writing a colormapped PNG after each stage.
//!
//! ```bash
//! cargo run --release -p depthlayers --example perturbation_stages
//! ```

use depthlayers::compose::composite_depth;
use depthlayers::datagen::{
    find_holes, gaussian_blur, hole_perturb, random_morph, synthesize_mask, MaskKindTag,
    PerturbConfig,
};
use depthlayers::synth::make_scene;
use depthlayers::viz::save_depth_colormap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn main() -> depthlayers::Result<()> {
    let out = Path::new("target/examples-out/perturb");
    std::fs::create_dir_all(out).ok();
    let size = 128;

    let a = make_scene(11, size, size);
    let b = make_scene(12, size, size);
    let mask = synthesize_mask(MaskKindTag::HumanWithHoles, size, size, 13);
    let composite = composite_depth(&a.depth, &b.depth, &mask)?;
    save_depth_colormap(&composite, &out.join("0_composite.png"))?;

    let cfg = PerturbConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let morphed = random_morph(&composite, &cfg, &mut rng)?;
    save_depth_colormap(&morphed, &out.join("1_morphed.png"))?;

    let blurred = gaussian_blur(&morphed, 2.0)?;
    save_depth_colormap(&blurred, &out.join("2_blurred.png"))?;

    let holes = find_holes(&mask)?;
    let holed = hole_perturb(&blurred, &mask, cfg.hole_ring_width, &mut rng)?;
    save_depth_colormap(&holed, &out.join("3_hole_perturbed.png"))?;

    println!(
        "mask has {} hole(s); stages written to {}",
        holes.len(),
        out.display()
    );
    Ok(())
}
