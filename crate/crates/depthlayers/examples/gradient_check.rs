//! Verify the tape's analytic gradients against central finite differences,
//! op by op and through the full network loss.
//!
//! ```bash
//! cargo run --release -p depthlayers --example gradient_check
//! ```

use depthlayers::toynet::gradcheck::check_all;
use depthlayers::toynet::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sample = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(0.2..1.4);
                if rng.random_bool(0.5) {
                    v
                } else {
                    -v
                }
            })
            .collect()
    };

    let conv_leaves = vec![sample(2 * 8 * 8), sample(4 * 2 * 3 * 3), sample(4)];
    let report = check_all(
        &|g: &mut Graph, l| {
            let x = g.leaf(vec![2, 8, 8], l[0].clone());
            let w = g.leaf(vec![4, 2, 3, 3], l[1].clone());
            let b = g.leaf(vec![4], l[2].clone());
            let c = g.conv2d(x, w, b, 2, 1).unwrap();
            g.mean_sq(c)
        },
        &conv_leaves,
        1e-3,
    );
    println!(
        "conv2d: {} elements, worst abs diff {:.2e}, ok = {}",
        report.checked,
        report.worst_abs,
        report.ok()
    );

    let loss_leaves = vec![sample(256), sample(256)];
    let report = check_all(
        &|g: &mut Graph, l| {
            let p = g.leaf(vec![1, 16, 16], l[0].clone());
            let t = g.leaf(vec![1, 16, 16], l[1].clone());
            depthlayers::toynet::composite_loss(g, p, t).unwrap().0
        },
        &loss_leaves,
        1e-4,
    );
    println!(
        "composite loss: {} elements, worst abs diff {:.2e}, ok = {}",
        report.checked,
        report.worst_abs,
        report.ok()
    );
}
