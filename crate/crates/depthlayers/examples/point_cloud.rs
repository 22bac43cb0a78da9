//! Back-project a depth map into an ASCII PLY point cloud with a fixed
//! 60-degree-FOV pinhole model.
//!
//! ```bash
//! cargo run --release -p depthlayers --example point_cloud
//! ```

use depthlayers::io::save_point_cloud_ply;
use depthlayers::synth::make_scene;
use std::path::Path;

fn main() -> depthlayers::Result<()> {
    let out = Path::new("target/examples-out/cloud");
    std::fs::create_dir_all(out).ok();
    let scene = make_scene(91, 128, 96);
    let path = out.join("scene.ply");
    let vertices = save_point_cloud_ply(&scene.depth, Some(&scene.rgb), &path)?;
    assert_eq!(vertices, scene.depth.valid_count());
    println!("{vertices} vertices -> {}", path.display());
    Ok(())
}
