//! End-to-end checks of the `depthlayers` binary: subcommand wiring, exit
//! codes, and artifact formats.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_depthlayers"))
}

fn fresh_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("depthlayers-cli-{tag}-{}", std::process::id()));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn no_arguments_is_usage_error() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_command_is_usage_error() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("usage"));
}

#[test]
fn missing_input_file_is_data_error() {
    let dir = fresh_dir("missing");
    let out = bin()
        .args([
            "refine",
            "--depth",
            "/nonexistent/depth.pfm",
            "--mask",
            "/nonexistent/mask.png",
            "--out",
        ])
        .arg(dir.join("out.pfm"))
        .arg("backend.kind=identity")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_override_is_usage_error() {
    let out = bin().args(["generate", "no_such.key=1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

/// Two-plane composite whose values stay inside the working range, so the
/// ingest normalization passes it through untouched.
fn write_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    use depthlayers::compose::composite_depth;
    use depthlayers::datagen::{synthesize_mask, MaskKindTag};
    use depthlayers::raster::DepthMap;

    let size = 32;
    let mask = synthesize_mask(MaskKindTag::Object, size, size, 5);
    let fg = DepthMap::constant(size, size, 8.0);
    let bg = DepthMap::constant(size, size, 2.0);
    let depth = composite_depth(&fg, &bg, &mask).unwrap();
    let depth_path = dir.join("depth.pfm");
    let mask_path = dir.join("mask.png");
    depthlayers::io::save_pfm(&depth, &depth_path).unwrap();
    depthlayers::io::save_mask_png(&mask, &mask_path).unwrap();
    (depth_path, mask_path)
}

#[test]
fn identity_refine_round_trips_pfm_bit_exactly() {
    let dir = fresh_dir("identity");
    let (depth_path, mask_path) = write_fixture(&dir);
    let out_path = dir.join("refined.pfm");
    let out = bin()
        .args(["refine", "--depth"])
        .arg(&depth_path)
        .arg("--mask")
        .arg(&mask_path)
        .arg("--out")
        .arg(&out_path)
        .arg("backend.kind=identity")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(&depth_path).unwrap(),
        std::fs::read(&out_path).unwrap(),
        "identity backend must reproduce the input PFM byte for byte"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn emitted_layers_satisfy_the_merge_identity() {
    use depthlayers::compose::merge_layers;

    let dir = fresh_dir("layers");
    let (depth_path, mask_path) = write_fixture(&dir);
    let out_path = dir.join("refined.pfm");
    let out = bin()
        .args(["refine", "--depth"])
        .arg(&depth_path)
        .arg("--mask")
        .arg(&mask_path)
        .arg("--out")
        .arg(&out_path)
        .arg("--emit-layers")
        .arg("backend.kind=propagation")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let merged = depthlayers::io::load_pfm(&out_path).unwrap();
    let layer1 = depthlayers::io::load_pfm(&dir.join("refined.layer1.pfm")).unwrap();
    let layer2 = depthlayers::io::load_pfm(&dir.join("refined.layer2.pfm")).unwrap();
    let mask = depthlayers::io::load_mask_png(&mask_path).unwrap();
    let re = merge_layers(&layer1, &layer2, &mask).unwrap();
    for (a, b) in re.values().iter().zip(merged.values()) {
        assert_eq!((*a as f32).to_bits(), (*b as f32).to_bits());
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn viz_writes_colormap_improvement_and_cloud() {
    let dir = fresh_dir("viz");
    let (depth_path, _) = write_fixture(&dir);
    let out_dir = dir.join("viz");
    let out = bin()
        .args(["viz", "--depth"])
        .arg(&depth_path)
        .args(["--improvement"])
        .arg(&depth_path)
        .arg(&depth_path)
        .arg(&depth_path)
        .arg("--cloud")
        .arg(&depth_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("depth_depth.png").exists());
    assert!(out_dir.join("improvement.png").exists());
    let ply = std::fs::read_to_string(out_dir.join("cloud.ply")).unwrap();
    assert!(ply.starts_with("ply\nformat ascii 1.0\n"));
    assert!(ply.contains(&format!("element vertex {}", 32 * 32)));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn generate_and_evaluate_via_binary() {
    let dir = fresh_dir("pipeline");
    let data = dir.join("data");
    let gen = bin()
        .args(["generate", "run.seed=9", "generate.count=6", "generate.patch=32"])
        .arg(format!("paths.dataset={}", data.display()))
        .output()
        .unwrap();
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    assert!(data.join("samples/000000/meta.json").exists());

    let report_path = dir.join("report.json");
    let eval = bin()
        .args(["evaluate", "--dataset"])
        .arg(&data)
        .arg("--out")
        .arg(&report_path)
        .args(["backend.kind=propagation", "metrics.whdr_pairs=500", "run.seed=9"])
        .output()
        .unwrap();
    assert_eq!(eval.status.code(), Some(0), "{}", String::from_utf8_lossy(&eval.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["images"], 6);
    assert!(report["rmse"].as_f64().unwrap().is_finite());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn stage2_without_checkpoint_refuses_to_start() {
    let dir = fresh_dir("stage2");
    let data = dir.join("data");
    let gen = bin()
        .args(["generate", "run.seed=3", "generate.count=4", "generate.patch=16"])
        .arg(format!("paths.dataset={}", data.display()))
        .output()
        .unwrap();
    assert_eq!(gen.status.code(), Some(0));

    let train = bin()
        .args(["train", "train.stage=2", "train.patch=16", "train.iters_stage2=1"])
        .arg(format!("paths.dataset={}", data.display()))
        .arg(format!("paths.checkpoint={}", dir.join("none.dlyr").display()))
        .arg(format!("paths.output={}", dir.join("out").display()))
        .output()
        .unwrap();
    assert_eq!(train.status.code(), Some(1), "{}", String::from_utf8_lossy(&train.stderr));
    let stderr = String::from_utf8_lossy(&train.stderr);
    assert!(stderr.contains("stage-1 checkpoint"));
    std::fs::remove_dir_all(&dir).ok();
}
