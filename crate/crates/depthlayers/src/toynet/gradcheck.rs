//! Central-finite-difference verification of tape gradients.

use crate::toynet::graph::{Graph, NodeId};

/// Outcome of one finite-difference comparison sweep.
#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub worst_abs: f64,
    pub worst_rel: f64,
    pub failures: Vec<String>,
}

impl GradCheckReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Compares analytic gradients of the scalar built by `build` against central
/// finite differences with step `h`, for the listed `(leaf, element)` pairs.
///
/// `build` must reconstruct the same graph from the leaf data each call, with
/// the leaves as the first nodes in order. Agreement passes when the absolute
/// difference is below `1e-7` or the relative error is below `1e-4`.
pub fn check_elements(
    build: &dyn Fn(&mut Graph, &[Vec<f64>]) -> NodeId,
    leaves: &[Vec<f64>],
    elements: &[(usize, usize)],
    h: f64,
) -> GradCheckReport {
    let mut g = Graph::new();
    let loss = build(&mut g, leaves);
    g.backward(loss).expect("scalar loss");
    let analytic: Vec<Vec<f64>> = (0..leaves.len())
        .map(|i| g.grad(NodeId(i)).to_vec())
        .collect();

    let mut report = GradCheckReport::default();
    for &(li, ei) in elements {
        let mut plus = leaves.to_vec();
        plus[li][ei] += h;
        let mut minus = leaves.to_vec();
        minus[li][ei] -= h;
        let mut gp = Graph::new();
        let lp = build(&mut gp, &plus);
        let mut gm = Graph::new();
        let lm = build(&mut gm, &minus);
        let fd = (gp.value(lp)[0] - gm.value(lm)[0]) / (2.0 * h);
        let a = analytic[li][ei];
        let abs = (a - fd).abs();
        let rel = abs / a.abs().max(fd.abs()).max(1e-6);
        report.checked += 1;
        report.worst_abs = report.worst_abs.max(abs);
        if abs >= 1e-7 {
            report.worst_rel = report.worst_rel.max(rel);
        }
        if abs >= 1e-7 && rel >= 1e-4 {
            report
                .failures
                .push(format!("leaf {li} elem {ei}: analytic {a} vs fd {fd}"));
        }
    }
    report
}

/// Checks every element of every leaf; intended for small graphs.
pub fn check_all(
    build: &dyn Fn(&mut Graph, &[Vec<f64>]) -> NodeId,
    leaves: &[Vec<f64>],
    h: f64,
) -> GradCheckReport {
    let elements: Vec<(usize, usize)> = leaves
        .iter()
        .enumerate()
        .flat_map(|(li, l)| (0..l.len()).map(move |ei| (li, ei)))
        .collect();
    check_elements(build, leaves, &elements, h)
}

/// Panics with the failure list unless the whole sweep agrees.
pub fn assert_gradients(
    build: &dyn Fn(&mut Graph, &[Vec<f64>]) -> NodeId,
    leaves: &[Vec<f64>],
    h: f64,
) {
    let report = check_all(build, leaves, h);
    assert!(report.ok(), "gradient check failed: {:?}", report.failures);
}
