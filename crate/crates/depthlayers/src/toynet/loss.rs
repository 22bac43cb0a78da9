//! Composite training loss: L1 + L2 + a four-level multi-scale gradient term
//! on the residual, all summed with unit scale.

use crate::error::Result;
use crate::toynet::graph::{Graph, NodeId};

/// Component values of one loss evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossParts {
    pub l1: f64,
    pub l2: f64,
    pub grad: f64,
    pub total: f64,
}

pub const GRADIENT_SCALE_LEVELS: usize = 4;

/// Builds `mean|r| + mean(r^2) + sum_k grad_l1(avg_pool2^k(r))` for
/// `k = 0..4` on the tape, where `r = pred - target`.
pub fn composite_loss(
    g: &mut Graph,
    pred: NodeId,
    target: NodeId,
) -> Result<(NodeId, LossParts)> {
    let residual = g.sub(pred, target)?;
    let l1 = g.mean_abs(residual);
    let l2 = g.mean_sq(residual);
    let mut terms = vec![l1, l2];
    let mut level = residual;
    let mut grad_total = 0.0;
    for k in 0..GRADIENT_SCALE_LEVELS {
        if k > 0 {
            level = g.avg_pool2(level);
        }
        let term = g.grad_l1(level);
        grad_total += g.value(term)[0];
        terms.push(term);
    }
    let total = g.sum_scalars(&terms)?;
    let parts = LossParts {
        l1: g.value(l1)[0],
        l2: g.value(l2)[0],
        grad: grad_total,
        total: g.value(total)[0],
    };
    Ok((total, parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(pred: Vec<f64>, target: Vec<f64>, c: usize, h: usize, w: usize) -> LossParts {
        let mut g = Graph::new();
        let p = g.leaf(vec![c, h, w], pred);
        let t = g.leaf(vec![c, h, w], target);
        composite_loss(&mut g, p, t).unwrap().1
    }

    #[test]
    fn zero_when_equal() {
        let v: Vec<f64> = (0..64).map(|i| i as f64 * 0.1).collect();
        let parts = eval(v.clone(), v, 1, 8, 8);
        assert_eq!(parts.total, 0.0);
    }

    #[test]
    fn single_pixel_residual_contributions() {
        let n = 16 * 16;
        let mut pred = vec![0.0; n];
        pred[35] = 1.0;
        let parts = eval(pred, vec![0.0; n], 1, 16, 16);
        assert!((parts.l1 - 1.0 / n as f64).abs() < 1e-15);
        assert!((parts.l2 - 1.0 / n as f64).abs() < 1e-15);
        assert!(parts.grad > 0.0);
    }

    #[test]
    fn constant_residual_has_zero_gradient_term() {
        let c = 0.75;
        let parts = eval(vec![c; 64], vec![0.0; 64], 1, 8, 8);
        assert_eq!(parts.grad, 0.0);
        assert!((parts.total - (c + c * c)).abs() < 1e-12);
    }

    #[test]
    fn loss_is_nonnegative_and_zero_iff_equal() {
        let pred: Vec<f64> = (0..64).map(|i| (i % 7) as f64).collect();
        let target: Vec<f64> = (0..64).map(|i| (i % 5) as f64).collect();
        let parts = eval(pred.clone(), target, 1, 8, 8);
        assert!(parts.total > 0.0);
        let same = eval(pred.clone(), pred, 1, 8, 8);
        assert_eq!(same.total, 0.0);
    }

    #[test]
    fn full_composite_loss_gradcheck() {
        use crate::toynet::gradcheck::assert_gradients;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pred: Vec<f64> = (0..64).map(|_| rng.random_range(-2.0..2.0)).collect();
        let target: Vec<f64> = (0..64).map(|_| rng.random_range(-2.0..2.0)).collect();
        assert_gradients(
            &|g, l| {
                let p = g.leaf(vec![1, 8, 8], l[0].clone());
                let t = g.leaf(vec![1, 8, 8], l[1].clone());
                composite_loss(g, p, t).unwrap().0
            },
            &[pred, target],
            1e-4,
        );
    }
}
