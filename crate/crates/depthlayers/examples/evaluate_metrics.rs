//! The full evaluation protocol on one synthetic pair: normalize to the
//! working range, scale-shift align, then RMSE, WHDR, boundary chamfer
//! errors, mask boundary error, and the relative refinement ratio.
//!
//! ```bash
//! cargo run --release -p depthlayers --example evaluate_metrics
//! ```

use depthlayers::compose::{align_scale_shift, composite_depth, normalize_depth};
use depthlayers::datagen::{perturb, synthesize_mask, MaskKindTag, PerturbConfig};
use depthlayers::metrics::{boundary_error, mbe, r3, rmse, whdr, BoundaryParams};
use depthlayers::raster::InstanceMap;
use depthlayers::refine::{baseline_layered_propagation, refine_layered, PropagationBackend};
use depthlayers::synth::make_scene;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> depthlayers::Result<()> {
    let size = 96;
    let a = make_scene(71, size, size);
    let b = make_scene(72, size, size);
    let mask = synthesize_mask(MaskKindTag::Object, size, size, 73);
    let clean = composite_depth(&a.depth, &b.depth, &mask)?;
    let rgb = depthlayers::compose::composite_rgb(&a.rgb, &b.rgb, &mask)?;
    let initial = perturb(
        &clean,
        &mask,
        &PerturbConfig::default().with_hole_prob(0.0),
        &mut ChaCha8Rng::seed_from_u64(74),
    )?;
    let refined = refine_layered(&PropagationBackend::default(), &initial, &rgb, &mask)?.merged;
    let _ = baseline_layered_propagation(&initial, &mask, 5, 5, 5)?;

    // Protocol: normalize both sides, then least-squares align to the gt.
    let gt = normalize_depth(&clean)?.map;
    let align = |d: &depthlayers::DepthMap| -> depthlayers::Result<depthlayers::DepthMap> {
        let n = normalize_depth(d)?.map;
        Ok(align_scale_shift(&n, &gt)?.aligned)
    };
    let initial_a = align(&initial)?;
    let refined_a = align(&refined)?;

    let inst = InstanceMap::from_mask(&mask);
    let mut rng = ChaCha8Rng::seed_from_u64(75);
    println!("rmse      {:.4}", rmse(&refined_a, &gt)?);
    println!("whdr      {:.4} (10k pairs)", whdr(&refined_a, &gt, 10_000, 0.1, &mut rng)?.rate);
    let (acc, comp) = boundary_error(&refined_a, &gt, &BoundaryParams::default())?;
    println!("eps_acc   {acc:.4} px");
    println!("eps_comp  {comp:.4} px");
    println!("mbe       {:.4}", mbe(&refined_a, &gt, &inst, 0.01)?.0);
    let r = r3(&refined_a, &initial_a, &gt, 0.05)?;
    println!("r3        {:.2} (improved {}, worsened {})", r.ratio, r.improved, r.worsened);
    Ok(())
}
