//! Minimal reverse-mode differentiation over dense (channels, height, width)
//! arrays at double precision.
//!
//! A `Graph` is a tape of nodes built forward; `backward` walks it in reverse
//! and accumulates exact gradients. The op set is exactly what the
//! encoder-decoder needs: convolution, leaky rectifier, add, channel concat,
//! nearest-neighbor upsampling, 2x average pooling, the mask merge, and the
//! scalar loss reductions.

use crate::error::{Error, Result};

/// Index of a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv2d {
        input: NodeId,
        weight: NodeId,
        bias: NodeId,
        stride: usize,
        pad: usize,
    },
    LeakyRelu {
        input: NodeId,
        slope: f64,
    },
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    ConcatC(NodeId, NodeId),
    UpsampleNearest2(NodeId),
    AvgPool2(NodeId),
    /// `mask*a + (1-mask)*b` with a constant mask plane.
    MaskMerge {
        a: NodeId,
        b: NodeId,
        mask: std::rc::Rc<Vec<f64>>,
    },
    MeanAbs(NodeId),
    MeanSq(NodeId),
    /// Mean |forward x-difference| + mean |forward y-difference|.
    GradL1(NodeId),
    SumScalars(Vec<NodeId>),
}

struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
}

/// Dynamic compute tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn chw(shape: &[usize]) -> (usize, usize, usize) {
    debug_assert_eq!(shape.len(), 3, "expected a (c, h, w) node");
    (shape[0], shape[1], shape[2])
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].grad
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op) -> NodeId {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        let grad = vec![0.0; value.len()];
        self.nodes.push(Node {
            shape,
            value,
            grad,
            op,
        });
        NodeId(self.nodes.len() - 1)
    }

    /// Adds an input or parameter node.
    pub fn leaf(&mut self, shape: Vec<usize>, value: Vec<f64>) -> NodeId {
        self.push(shape, value, Op::Leaf)
    }

    pub fn conv2d(
        &mut self,
        input: NodeId,
        weight: NodeId,
        bias: NodeId,
        stride: usize,
        pad: usize,
    ) -> Result<NodeId> {
        let (ci, h, w) = chw(self.shape(input));
        let ws = self.shape(weight);
        if ws.len() != 4 || ws[1] != ci {
            return Err(Error::DimensionMismatch(format!(
                "conv weight {ws:?} does not match input channels {ci}"
            )));
        }
        let (co, kh, kw) = (ws[0], ws[2], ws[3]);
        if self.shape(bias) != [co] {
            return Err(Error::DimensionMismatch("conv bias shape".into()));
        }
        if h + 2 * pad < kh || w + 2 * pad < kw {
            return Err(Error::DimensionMismatch(format!(
                "conv input {h}x{w} smaller than kernel {kh}x{kw}"
            )));
        }
        let ho = (h + 2 * pad - kh) / stride + 1;
        let wo = (w + 2 * pad - kw) / stride + 1;
        let mut out = vec![0.0f64; co * ho * wo];
        {
            let input_v = &self.nodes[input.0].value;
            let weight_v = &self.nodes[weight.0].value;
            let bias_v = &self.nodes[bias.0].value;
            for oc in 0..co {
                let b = bias_v[oc];
                let out_plane = &mut out[oc * ho * wo..(oc + 1) * ho * wo];
                for v in out_plane.iter_mut() {
                    *v = b;
                }
                for ic in 0..ci {
                    let in_plane = &input_v[ic * h * w..(ic + 1) * h * w];
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let wv = weight_v[((oc * ci + ic) * kh + ky) * kw + kx];
                            if wv == 0.0 {
                                continue;
                            }
                            conv_accumulate(
                                out_plane, in_plane, wv, h, w, ho, wo, stride, pad, ky, kx,
                            );
                        }
                    }
                }
            }
        }
        Ok(self.push(
            vec![co, ho, wo],
            out,
            Op::Conv2d {
                input,
                weight,
                bias,
                stride,
                pad,
            },
        ))
    }

    pub fn leaky_relu(&mut self, input: NodeId, slope: f64) -> NodeId {
        let value: Vec<f64> = self.nodes[input.0]
            .value
            .iter()
            .map(|&x| if x >= 0.0 { x } else { slope * x })
            .collect();
        let shape = self.nodes[input.0].shape.clone();
        self.push(shape, value, Op::LeakyRelu { input, slope })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::DimensionMismatch("add shapes differ".into()));
        }
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(shape, value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::DimensionMismatch("sub shapes differ".into()));
        }
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x - y)
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(shape, value, Op::Sub(a, b)))
    }

    pub fn concat_c(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ca, ha, wa) = chw(self.shape(a));
        let (cb, hb, wb) = chw(self.shape(b));
        if (ha, wa) != (hb, wb) {
            return Err(Error::DimensionMismatch("concat spatial dims differ".into()));
        }
        let mut value = Vec::with_capacity((ca + cb) * ha * wa);
        value.extend_from_slice(&self.nodes[a.0].value);
        value.extend_from_slice(&self.nodes[b.0].value);
        Ok(self.push(vec![ca + cb, ha, wa], value, Op::ConcatC(a, b)))
    }

    pub fn upsample_nearest2(&mut self, input: NodeId) -> NodeId {
        let (c, h, w) = chw(self.shape(input));
        let (ho, wo) = (h * 2, w * 2);
        let src = &self.nodes[input.0].value;
        let mut value = vec![0.0f64; c * ho * wo];
        for ch in 0..c {
            for y in 0..ho {
                for x in 0..wo {
                    value[(ch * ho + y) * wo + x] = src[(ch * h + y / 2) * w + x / 2];
                }
            }
        }
        self.push(vec![c, ho, wo], value, Op::UpsampleNearest2(input))
    }

    /// 2x average pooling; odd trailing rows/columns are dropped.
    pub fn avg_pool2(&mut self, input: NodeId) -> NodeId {
        let (c, h, w) = chw(self.shape(input));
        let (ho, wo) = (h / 2, w / 2);
        let src = &self.nodes[input.0].value;
        let mut value = vec![0.0f64; c * ho * wo];
        for ch in 0..c {
            for y in 0..ho {
                for x in 0..wo {
                    let base = (ch * h + 2 * y) * w + 2 * x;
                    value[(ch * ho + y) * wo + x] =
                        0.25 * (src[base] + src[base + 1] + src[base + w] + src[base + w + 1]);
                }
            }
        }
        self.push(vec![c, ho, wo], value, Op::AvgPool2(input))
    }

    /// `mask*a + (1-mask)*b`, one mask value per spatial position, applied to
    /// every channel.
    pub fn mask_merge(&mut self, a: NodeId, b: NodeId, mask: std::rc::Rc<Vec<f64>>) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::DimensionMismatch("mask_merge shapes differ".into()));
        }
        let (c, h, w) = chw(self.shape(a));
        if mask.len() != h * w {
            return Err(Error::DimensionMismatch("mask plane size".into()));
        }
        let mut value = vec![0.0f64; c * h * w];
        for ch in 0..c {
            for i in 0..h * w {
                let al = mask[i];
                value[ch * h * w + i] = al * self.nodes[a.0].value[ch * h * w + i]
                    + (1.0 - al) * self.nodes[b.0].value[ch * h * w + i];
            }
        }
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(shape, value, Op::MaskMerge { a, b, mask }))
    }

    pub fn mean_abs(&mut self, input: NodeId) -> NodeId {
        let v = &self.nodes[input.0].value;
        let mean = v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64;
        self.push(vec![1], vec![mean], Op::MeanAbs(input))
    }

    pub fn mean_sq(&mut self, input: NodeId) -> NodeId {
        let v = &self.nodes[input.0].value;
        let mean = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        self.push(vec![1], vec![mean], Op::MeanSq(input))
    }

    /// Mean absolute forward difference along x plus the same along y.
    pub fn grad_l1(&mut self, input: NodeId) -> NodeId {
        let (c, h, w) = chw(self.shape(input));
        let v = &self.nodes[input.0].value;
        let ndx = c * h * w.saturating_sub(1);
        let ndy = c * h.saturating_sub(1) * w;
        let mut sum_dx = 0.0;
        let mut sum_dy = 0.0;
        for ch in 0..c {
            let plane = &v[ch * h * w..(ch + 1) * h * w];
            for y in 0..h {
                for x in 0..w.saturating_sub(1) {
                    sum_dx += (plane[y * w + x + 1] - plane[y * w + x]).abs();
                }
            }
            for y in 0..h.saturating_sub(1) {
                for x in 0..w {
                    sum_dy += (plane[(y + 1) * w + x] - plane[y * w + x]).abs();
                }
            }
        }
        let mut total = 0.0;
        if ndx > 0 {
            total += sum_dx / ndx as f64;
        }
        if ndy > 0 {
            total += sum_dy / ndy as f64;
        }
        self.push(vec![1], vec![total], Op::GradL1(input))
    }

    pub fn sum_scalars(&mut self, terms: &[NodeId]) -> Result<NodeId> {
        let mut total = 0.0;
        for &t in terms {
            if self.shape(t) != [1] {
                return Err(Error::DimensionMismatch("sum_scalars needs scalars".into()));
            }
            total += self.nodes[t.0].value[0];
        }
        Ok(self.push(vec![1], vec![total], Op::SumScalars(terms.to_vec())))
    }

    /// Reverse pass from a scalar node; gradients accumulate into every node.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.shape(loss) != [1] {
            return Err(Error::DimensionMismatch("backward needs a scalar loss".into()));
        }
        for node in &mut self.nodes {
            for g in &mut node.grad {
                *g = 0.0;
            }
        }
        self.nodes[loss.0].grad[0] = 1.0;
        for idx in (0..=loss.0).rev() {
            let op = self.nodes[idx].op.clone();
            match op {
                Op::Leaf => {}
                Op::Conv2d {
                    input,
                    weight,
                    bias,
                    stride,
                    pad,
                } => self.backward_conv(idx, input, weight, bias, stride, pad),
                Op::LeakyRelu { input, slope } => {
                    let (a, out) = split_pair(&mut self.nodes, input.0, idx);
                    for i in 0..out.grad.len() {
                        let d = if a.value[i] >= 0.0 { 1.0 } else { slope };
                        a.grad[i] += d * out.grad[i];
                    }
                }
                Op::Add(na, nb) => {
                    let g = self.nodes[idx].grad.clone();
                    for (i, &gv) in g.iter().enumerate() {
                        self.nodes[na.0].grad[i] += gv;
                    }
                    for (i, &gv) in g.iter().enumerate() {
                        self.nodes[nb.0].grad[i] += gv;
                    }
                }
                Op::Sub(na, nb) => {
                    let g = self.nodes[idx].grad.clone();
                    for (i, &gv) in g.iter().enumerate() {
                        self.nodes[na.0].grad[i] += gv;
                    }
                    for (i, &gv) in g.iter().enumerate() {
                        self.nodes[nb.0].grad[i] -= gv;
                    }
                }
                Op::ConcatC(na, nb) => {
                    let na_len = self.nodes[na.0].grad.len();
                    let g = self.nodes[idx].grad.clone();
                    for i in 0..na_len {
                        self.nodes[na.0].grad[i] += g[i];
                    }
                    for i in na_len..g.len() {
                        self.nodes[nb.0].grad[i - na_len] += g[i];
                    }
                }
                Op::UpsampleNearest2(input) => {
                    let (c, ho, wo) = chw(&self.nodes[idx].shape);
                    let (h, w) = (ho / 2, wo / 2);
                    let (a, out) = split_pair(&mut self.nodes, input.0, idx);
                    for ch in 0..c {
                        for y in 0..ho {
                            for x in 0..wo {
                                a.grad[(ch * h + y / 2) * w + x / 2] +=
                                    out.grad[(ch * ho + y) * wo + x];
                            }
                        }
                    }
                }
                Op::AvgPool2(input) => {
                    let (c, ho, wo) = chw(&self.nodes[idx].shape);
                    let in_shape = self.nodes[input.0].shape.clone();
                    let (h, w) = (in_shape[1], in_shape[2]);
                    let (a, out) = split_pair(&mut self.nodes, input.0, idx);
                    for ch in 0..c {
                        for y in 0..ho {
                            for x in 0..wo {
                                let g = 0.25 * out.grad[(ch * ho + y) * wo + x];
                                let base = (ch * h + 2 * y) * w + 2 * x;
                                a.grad[base] += g;
                                a.grad[base + 1] += g;
                                a.grad[base + w] += g;
                                a.grad[base + w + 1] += g;
                            }
                        }
                    }
                }
                Op::MaskMerge { a, b, mask } => {
                    let (c, h, w) = chw(&self.nodes[idx].shape);
                    let g = self.nodes[idx].grad.clone();
                    for ch in 0..c {
                        for i in 0..h * w {
                            let gv = g[ch * h * w + i];
                            self.nodes[a.0].grad[ch * h * w + i] += mask[i] * gv;
                            self.nodes[b.0].grad[ch * h * w + i] += (1.0 - mask[i]) * gv;
                        }
                    }
                }
                Op::MeanAbs(input) => {
                    let g = self.nodes[idx].grad[0];
                    let (a, _) = split_pair(&mut self.nodes, input.0, idx);
                    let n = a.value.len() as f64;
                    for i in 0..a.value.len() {
                        a.grad[i] += g * a.value[i].signum_zero() / n;
                    }
                }
                Op::MeanSq(input) => {
                    let g = self.nodes[idx].grad[0];
                    let (a, _) = split_pair(&mut self.nodes, input.0, idx);
                    let n = a.value.len() as f64;
                    for i in 0..a.value.len() {
                        a.grad[i] += g * 2.0 * a.value[i] / n;
                    }
                }
                Op::GradL1(input) => {
                    let g = self.nodes[idx].grad[0];
                    let (c, h, w) = chw(self.shape(input));
                    let ndx = c * h * w.saturating_sub(1);
                    let ndy = c * h.saturating_sub(1) * w;
                    let (a, _) = split_pair(&mut self.nodes, input.0, idx);
                    for ch in 0..c {
                        let base = ch * h * w;
                        if ndx > 0 {
                            let scale = g / ndx as f64;
                            for y in 0..h {
                                for x in 0..w - 1 {
                                    let i = base + y * w + x;
                                    let s = (a.value[i + 1] - a.value[i]).signum_zero();
                                    a.grad[i + 1] += scale * s;
                                    a.grad[i] -= scale * s;
                                }
                            }
                        }
                        if ndy > 0 {
                            let scale = g / ndy as f64;
                            for y in 0..h - 1 {
                                for x in 0..w {
                                    let i = base + y * w + x;
                                    let s = (a.value[i + w] - a.value[i]).signum_zero();
                                    a.grad[i + w] += scale * s;
                                    a.grad[i] -= scale * s;
                                }
                            }
                        }
                    }
                }
                Op::SumScalars(terms) => {
                    let g = self.nodes[idx].grad[0];
                    for t in terms {
                        self.nodes[t.0].grad[0] += g;
                    }
                }
            }
        }
        Ok(())
    }

    fn backward_conv(
        &mut self,
        out_idx: usize,
        input: NodeId,
        weight: NodeId,
        bias: NodeId,
        stride: usize,
        pad: usize,
    ) {
        let (co, ho, wo) = chw(&self.nodes[out_idx].shape);
        let (ci, h, w) = chw(&self.nodes[input.0].shape);
        let ws = self.nodes[weight.0].shape.clone();
        let (kh, kw) = (ws[2], ws[3]);

        let gout = self.nodes[out_idx].grad.clone();
        // Bias gradient.
        for oc in 0..co {
            let sum: f64 = gout[oc * ho * wo..(oc + 1) * ho * wo].iter().sum();
            self.nodes[bias.0].grad[oc] += sum;
        }
        // Weight and input gradients in one sweep.
        let input_v = self.nodes[input.0].value.clone();
        let weight_v = self.nodes[weight.0].value.clone();
        let mut gin = vec![0.0f64; input_v.len()];
        let gweight = &mut self.nodes[weight.0].grad;
        for oc in 0..co {
            let gout_plane = &gout[oc * ho * wo..(oc + 1) * ho * wo];
            for ic in 0..ci {
                let in_plane = &input_v[ic * h * w..(ic + 1) * h * w];
                let gin_plane = &mut gin[ic * h * w..(ic + 1) * h * w];
                for ky in 0..kh {
                    for kx in 0..kw {
                        let widx = ((oc * ci + ic) * kh + ky) * kw + kx;
                        let wv = weight_v[widx];
                        let mut gw = 0.0;
                        for oy in 0..ho {
                            let iy = (oy * stride + ky) as i64 - pad as i64;
                            if iy < 0 || iy >= h as i64 {
                                continue;
                            }
                            let iy = iy as usize;
                            for ox in 0..wo {
                                let ix = (ox * stride + kx) as i64 - pad as i64;
                                if ix < 0 || ix >= w as i64 {
                                    continue;
                                }
                                let g = gout_plane[oy * wo + ox];
                                gw += g * in_plane[iy * w + ix as usize];
                                gin_plane[iy * w + ix as usize] += wv * g;
                            }
                        }
                        gweight[widx] += gw;
                    }
                }
            }
        }
        for (i, g) in gin.into_iter().enumerate() {
            self.nodes[input.0].grad[i] += g;
        }
    }
}

/// Inner accumulation of one kernel tap over the whole output plane.
#[allow(clippy::too_many_arguments)]
fn conv_accumulate(
    out_plane: &mut [f64],
    in_plane: &[f64],
    weight: f64,
    h: usize,
    w: usize,
    ho: usize,
    wo: usize,
    stride: usize,
    pad: usize,
    ky: usize,
    kx: usize,
) {
    for oy in 0..ho {
        let iy = (oy * stride + ky) as i64 - pad as i64;
        if iy < 0 || iy >= h as i64 {
            continue;
        }
        let in_row = &in_plane[iy as usize * w..(iy as usize + 1) * w];
        let out_row = &mut out_plane[oy * wo..(oy + 1) * wo];
        // Valid ox range: 0 <= ox*stride + kx - pad < w.
        let ox_lo = if kx >= pad {
            0
        } else {
            (pad - kx).div_ceil(stride)
        };
        let hi = w as i64 + pad as i64 - kx as i64 - 1;
        if hi < 0 {
            continue;
        }
        let ox_hi = ((hi as usize) / stride).min(wo.saturating_sub(1));
        if ox_lo > ox_hi {
            continue;
        }
        for (ox, o) in out_row[ox_lo..=ox_hi].iter_mut().enumerate() {
            let ix = (ox + ox_lo) * stride + kx - pad;
            *o += weight * in_row[ix];
        }
    }
}

/// Splits two distinct node indices into simultaneous mutable references.
fn split_pair(nodes: &mut [Node], a: usize, b: usize) -> (&mut Node, &mut Node) {
    debug_assert!(a < b);
    let (left, right) = nodes.split_at_mut(b);
    (&mut left[a], &mut right[0])
}

trait SignumZero {
    fn signum_zero(self) -> f64;
}

impl SignumZero for f64 {
    /// Subgradient convention: sign(0) = 0.
    fn signum_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toynet::gradcheck::assert_gradients as fd_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        // Bounded away from the |.| kink at zero.
        (0..n)
            .map(|_| {
                let v: f64 = rng.random_range(0.2..1.5);
                if rng.random_bool(0.5) {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }

    #[test]
    fn mean_gradient_is_uniform() {
        let mut g = Graph::new();
        let x = g.leaf(vec![1, 2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let loss = g.mean_sq(x);
        g.backward(loss).unwrap();
        for (i, &v) in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0].iter().enumerate() {
            assert!((g.grad(x)[i] - 2.0 * v / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_twice_is_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let data = random_vec(2 * 6 * 6, &mut rng);
        let wdat = random_vec(3 * 2 * 3 * 3, &mut rng);
        let bdat = random_vec(3, &mut rng);
        let mut g = Graph::new();
        let x = g.leaf(vec![2, 6, 6], data);
        let w = g.leaf(vec![3, 2, 3, 3], wdat);
        let b = g.leaf(vec![3], bdat);
        let c = g.conv2d(x, w, b, 1, 1).unwrap();
        let loss = g.mean_sq(c);
        g.backward(loss).unwrap();
        let first = g.grad(w).to_vec();
        g.backward(loss).unwrap();
        assert_eq!(first, g.grad(w));
    }

    #[test]
    fn conv_stride1_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let leaves = vec![
            random_vec(2 * 5 * 5, &mut rng),
            random_vec(3 * 2 * 3 * 3, &mut rng),
            random_vec(3, &mut rng),
        ];
        fd_check(
            &|g, l| {
                let x = g.leaf(vec![2, 5, 5], l[0].clone());
                let w = g.leaf(vec![3, 2, 3, 3], l[1].clone());
                let b = g.leaf(vec![3], l[2].clone());
                let c = g.conv2d(x, w, b, 1, 1).unwrap();
                g.mean_sq(c)
            },
            &leaves,
            1e-3,
        );
    }

    #[test]
    fn conv_stride2_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let leaves = vec![
            random_vec(6 * 6, &mut rng),
            random_vec(2 * 1 * 3 * 3, &mut rng),
            random_vec(2, &mut rng),
        ];
        fd_check(
            &|g, l| {
                let x = g.leaf(vec![1, 6, 6], l[0].clone());
                let w = g.leaf(vec![2, 1, 3, 3], l[1].clone());
                let b = g.leaf(vec![2], l[2].clone());
                let c = g.conv2d(x, w, b, 2, 1).unwrap();
                g.mean_sq(c)
            },
            &leaves,
            1e-3,
        );
    }

    #[test]
    fn elementwise_ops_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let leaves = vec![random_vec(2 * 4 * 4, &mut rng), random_vec(2 * 4 * 4, &mut rng)];
        fd_check(
            &|g, l| {
                let a = g.leaf(vec![2, 4, 4], l[0].clone());
                let b = g.leaf(vec![2, 4, 4], l[1].clone());
                let s = g.add(a, b).unwrap();
                let r = g.leaky_relu(s, 0.01);
                let d = g.sub(r, b).unwrap();
                let c = g.concat_c(d, a).unwrap();
                g.mean_abs(c)
            },
            &leaves,
            1e-4,
        );
    }

    #[test]
    fn resample_ops_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let leaves = vec![random_vec(2 * 4 * 4, &mut rng)];
        fd_check(
            &|g, l| {
                let a = g.leaf(vec![2, 4, 4], l[0].clone());
                let up = g.upsample_nearest2(a);
                let down = g.avg_pool2(up);
                let down2 = g.avg_pool2(down);
                g.mean_sq(down2)
            },
            &leaves,
            1e-4,
        );
    }

    #[test]
    fn mask_merge_and_gradl1_gradcheck() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask: Vec<f64> = (0..16).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let leaves = vec![random_vec(16, &mut rng), random_vec(16, &mut rng)];
        let mask = std::rc::Rc::new(mask);
        fd_check(
            &|g, l| {
                let a = g.leaf(vec![1, 4, 4], l[0].clone());
                let b = g.leaf(vec![1, 4, 4], l[1].clone());
                let m = g.mask_merge(a, b, mask.clone()).unwrap();
                let t1 = g.grad_l1(m);
                let t2 = g.mean_sq(m);
                g.sum_scalars(&[t1, t2]).unwrap()
            },
            &leaves,
            1e-4,
        );
    }

    #[test]
    fn zero_weight_conv_outputs_bias() {
        let mut g = Graph::new();
        let x = g.leaf(vec![1, 4, 4], (0..16).map(|i| i as f64).collect());
        let w = g.leaf(vec![2, 1, 3, 3], vec![0.0; 18]);
        let b = g.leaf(vec![2], vec![0.7, -0.3]);
        let c = g.conv2d(x, w, b, 1, 1).unwrap();
        assert!(g.value(c)[..16].iter().all(|&v| v == 0.7));
        assert!(g.value(c)[16..].iter().all(|&v| v == -0.3));
    }
}
