//! Guided bilateral median filtering: each output pixel is the weighted
//! median of its window, weighted by RGB color affinity.
//!
//! ```bash
//! cargo run --release -p depthlayers --example bilateral_median
//! ```

use depthlayers::completion::bilateral_median;
use depthlayers::metrics::rmse;
use depthlayers::synth::make_scene;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> depthlayers::Result<()> {
    let size = 96;
    let scene = make_scene(61, size, size);

    // Salt the depth with impulse noise; the median is built for this.
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let noisy: Vec<f64> = scene
        .depth
        .values()
        .iter()
        .map(|&v| {
            if rng.random_bool(0.08) {
                rng.random_range(0.0..10.0)
            } else {
                v
            }
        })
        .collect();
    let noisy = depthlayers::raster::DepthMap::new(size, size, noisy)?;

    let filtered = bilateral_median(&noisy, &scene.rgb, 7, 0.1)?;
    println!(
        "rmse vs clean: noisy {:.4} -> filtered {:.4} (window 7, sigma_color 0.1)",
        rmse(&noisy, &scene.depth)?,
        rmse(&filtered, &scene.depth)?
    );
    Ok(())
}
