//! The two-branch encoder-decoder.
//!
//! Depth and mask enter the main branch, RGB and mask enter the auxiliary
//! branch; the two stems are summed after the first block. Three stride-2
//! encoder levels feed a mirrored decoder with skip fusion, a stride-1
//! low-level encoder taps the raw depth, and its features are concatenated
//! with the decoder output ahead of the prediction head.

use crate::error::{Error, Result};
use crate::io::NamedTensor;
use crate::raster::{DepthMap, Mask, RgbImage};
use crate::toynet::graph::{Graph, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::rc::Rc;

pub const LEAKY_SLOPE: f64 = 0.01;
/// Three stride-2 stages.
pub const DOWNSAMPLE_FACTOR: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub out_ch: usize,
    pub in_ch: usize,
    pub kernel: usize,
}

impl ConvParams {
    fn init(out_ch: usize, in_ch: usize, kernel: usize, rng: &mut ChaCha8Rng) -> Self {
        // Fan-in-scaled uniform.
        let fan_in = (in_ch * kernel * kernel) as f64;
        let bound = (1.0 / fan_in).sqrt();
        let weight = (0..out_ch * in_ch * kernel * kernel)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Self {
            weight,
            bias: vec![0.0; out_ch],
            out_ch,
            in_ch,
            kernel,
        }
    }

    pub fn zeros(out_ch: usize, in_ch: usize, kernel: usize) -> Self {
        Self {
            weight: vec![0.0; out_ch * in_ch * kernel * kernel],
            bias: vec![0.0; out_ch],
            out_ch,
            in_ch,
            kernel,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// Width configuration of the toy network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NetWidths {
    pub encoder: [usize; 3],
    pub low_level: usize,
    pub head: usize,
}

impl Default for NetWidths {
    fn default() -> Self {
        Self {
            encoder: [16, 32, 64],
            low_level: 8,
            head: 8,
        }
    }
}

/// All learnable tensors, in a fixed canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub widths: NetWidths,
    pub stem_main: ConvParams,
    pub stem_aux: ConvParams,
    pub enc2: ConvParams,
    pub enc3: ConvParams,
    pub dec2_pre: ConvParams,
    pub dec2_post: ConvParams,
    pub dec1_pre: ConvParams,
    pub dec1_post: ConvParams,
    pub dec0: ConvParams,
    pub lowlevel: ConvParams,
    pub head_pre: ConvParams,
    pub head_out: ConvParams,
}

impl ModelParams {
    /// Seed-controlled fan-in-scaled uniform initialization for every conv.
    pub fn init(widths: NetWidths, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [w0, w1, w2] = widths.encoder;
        let lw = widths.low_level;
        let hw = widths.head;
        Self {
            widths,
            stem_main: ConvParams::init(w0, 2, 3, &mut rng),
            stem_aux: ConvParams::init(w0, 4, 3, &mut rng),
            enc2: ConvParams::init(w1, w0, 3, &mut rng),
            enc3: ConvParams::init(w2, w1, 3, &mut rng),
            dec2_pre: ConvParams::init(w1, w2, 3, &mut rng),
            dec2_post: ConvParams::init(w1, w1, 3, &mut rng),
            dec1_pre: ConvParams::init(w0, w1, 3, &mut rng),
            dec1_post: ConvParams::init(w0, w0, 3, &mut rng),
            dec0: ConvParams::init(w0, w0, 3, &mut rng),
            lowlevel: ConvParams::init(lw, 1, 3, &mut rng),
            // The low-level path hands the head its conv features plus the
            // raw depth plane, so initial values stay directly readable.
            head_pre: ConvParams::init(hw, w0 + lw + 1, 3, &mut rng),
            head_out: ConvParams::init(1, hw, 3, &mut rng),
        }
    }

    pub fn tensor_names() -> [&'static str; 12] {
        [
            "stem_main", "stem_aux", "enc2", "enc3", "dec2_pre", "dec2_post", "dec1_pre",
            "dec1_post", "dec0", "lowlevel", "head_pre", "head_out",
        ]
    }

    pub fn tensors(&self) -> Vec<(&'static str, &ConvParams)> {
        vec![
            ("stem_main", &self.stem_main),
            ("stem_aux", &self.stem_aux),
            ("enc2", &self.enc2),
            ("enc3", &self.enc3),
            ("dec2_pre", &self.dec2_pre),
            ("dec2_post", &self.dec2_post),
            ("dec1_pre", &self.dec1_pre),
            ("dec1_post", &self.dec1_post),
            ("dec0", &self.dec0),
            ("lowlevel", &self.lowlevel),
            ("head_pre", &self.head_pre),
            ("head_out", &self.head_out),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut ConvParams)> {
        vec![
            ("stem_main", &mut self.stem_main),
            ("stem_aux", &mut self.stem_aux),
            ("enc2", &mut self.enc2),
            ("enc3", &mut self.enc3),
            ("dec2_pre", &mut self.dec2_pre),
            ("dec2_post", &mut self.dec2_post),
            ("dec1_pre", &mut self.dec1_pre),
            ("dec1_post", &mut self.dec1_post),
            ("dec0", &mut self.dec0),
            ("lowlevel", &mut self.lowlevel),
            ("head_pre", &mut self.head_pre),
            ("head_out", &mut self.head_out),
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.parameter_count()).sum()
    }

    /// Serializes to the named-tensor checkpoint format (bit-exact).
    pub fn to_named_tensors(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        for (name, t) in self.tensors() {
            out.push(NamedTensor {
                name: format!("param/{name}/weight"),
                shape: vec![
                    t.out_ch as u32,
                    t.in_ch as u32,
                    t.kernel as u32,
                    t.kernel as u32,
                ],
                data: t.weight.clone(),
            });
            out.push(NamedTensor {
                name: format!("param/{name}/bias"),
                shape: vec![t.out_ch as u32],
                data: t.bias.clone(),
            });
        }
        out
    }

    pub fn from_named_tensors(tensors: &[NamedTensor], path: &Path) -> Result<Self> {
        let fetch = |name: &str| -> Result<&NamedTensor> {
            tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::Checkpoint {
                    path: path.to_path_buf(),
                    detail: format!("missing tensor '{name}'"),
                })
        };
        let conv = |name: &str| -> Result<ConvParams> {
            let w = fetch(&format!("param/{name}/weight"))?;
            let b = fetch(&format!("param/{name}/bias"))?;
            if w.shape.len() != 4 || w.shape[2] != w.shape[3] {
                return Err(Error::Checkpoint {
                    path: path.to_path_buf(),
                    detail: format!("tensor '{name}' has shape {:?}", w.shape),
                });
            }
            Ok(ConvParams {
                weight: w.data.clone(),
                bias: b.data.clone(),
                out_ch: w.shape[0] as usize,
                in_ch: w.shape[1] as usize,
                kernel: w.shape[2] as usize,
            })
        };
        let stem_main = conv("stem_main")?;
        let enc2 = conv("enc2")?;
        let enc3 = conv("enc3")?;
        let lowlevel = conv("lowlevel")?;
        let head_pre = conv("head_pre")?;
        let widths = NetWidths {
            encoder: [stem_main.out_ch, enc2.out_ch, enc3.out_ch],
            low_level: lowlevel.out_ch,
            head: head_pre.out_ch,
        };
        Ok(Self {
            widths,
            stem_main,
            stem_aux: conv("stem_aux")?,
            enc2,
            enc3,
            dec2_pre: conv("dec2_pre")?,
            dec2_post: conv("dec2_post")?,
            dec1_pre: conv("dec1_pre")?,
            dec1_post: conv("dec1_post")?,
            dec0: conv("dec0")?,
            lowlevel,
            head_pre,
            head_out: conv("head_out")?,
        })
    }
}

/// Graph-resident parameter leaves, in canonical tensor order.
pub struct ParamNodes {
    pub leaves: Vec<(&'static str, NodeId, NodeId)>, // (name, weight, bias)
}

impl ParamNodes {
    pub fn load(g: &mut Graph, params: &ModelParams) -> ParamNodes {
        let mut leaves = Vec::with_capacity(12);
        for (name, t) in params.tensors() {
            let w = g.leaf(
                vec![t.out_ch, t.in_ch, t.kernel, t.kernel],
                t.weight.clone(),
            );
            let b = g.leaf(vec![t.out_ch], t.bias.clone());
            leaves.push((name, w, b));
        }
        ParamNodes { leaves }
    }

    fn get(&self, name: &str) -> (NodeId, NodeId) {
        let (_, w, b) = self
            .leaves
            .iter()
            .find(|(n, _, _)| *n == name)
            .expect("canonical tensor name");
        (*w, *b)
    }
}

/// Raw network inputs as dense planes at a padded resolution.
pub struct NetInputs {
    pub depth: Vec<f64>,
    pub rgb: [Vec<f64>; 3],
    pub mask: Vec<f64>,
    pub height: usize,
    pub width: usize,
}

/// Builds the forward pass on the tape and returns the prediction node
/// (1 x height x width).
pub fn forward_graph(
    g: &mut Graph,
    p: &ParamNodes,
    inputs: &NetInputs,
) -> Result<NodeId> {
    let (h, w) = (inputs.height, inputs.width);
    if h % DOWNSAMPLE_FACTOR != 0 || w % DOWNSAMPLE_FACTOR != 0 {
        return Err(Error::DimensionMismatch(format!(
            "network input {h}x{w} must be divisible by {DOWNSAMPLE_FACTOR}"
        )));
    }
    let mut main_data = Vec::with_capacity(2 * h * w);
    main_data.extend_from_slice(&inputs.depth);
    main_data.extend_from_slice(&inputs.mask);
    let main_in = g.leaf(vec![2, h, w], main_data);

    let mut aux_data = Vec::with_capacity(4 * h * w);
    for plane in &inputs.rgb {
        aux_data.extend_from_slice(plane);
    }
    aux_data.extend_from_slice(&inputs.mask);
    let aux_in = g.leaf(vec![4, h, w], aux_data);

    let low_in = g.leaf(vec![1, h, w], inputs.depth.clone());

    let conv = |g: &mut Graph, x: NodeId, name: &str, stride: usize| -> Result<NodeId> {
        let (weight, bias) = p.get(name);
        g.conv2d(x, weight, bias, stride, 1)
    };

    // Two stems, summed after the first block.
    let b_main = conv(g, main_in, "stem_main", 2)?;
    let b_main = g.leaky_relu(b_main, LEAKY_SLOPE);
    let b_aux = conv(g, aux_in, "stem_aux", 2)?;
    let b_aux = g.leaky_relu(b_aux, LEAKY_SLOPE);
    let e1 = g.add(b_main, b_aux)?;

    let e2 = conv(g, e1, "enc2", 2)?;
    let e2 = g.leaky_relu(e2, LEAKY_SLOPE);
    let e3 = conv(g, e2, "enc3", 2)?;
    let e3 = g.leaky_relu(e3, LEAKY_SLOPE);

    // Decoder fusion: upsample, project, add the skip, convolve.
    let u2 = g.upsample_nearest2(e3);
    let t2 = conv(g, u2, "dec2_pre", 1)?;
    let f2 = g.add(t2, e2)?;
    let d2 = conv(g, f2, "dec2_post", 1)?;
    let d2 = g.leaky_relu(d2, LEAKY_SLOPE);

    let u1 = g.upsample_nearest2(d2);
    let t1 = conv(g, u1, "dec1_pre", 1)?;
    let f1 = g.add(t1, e1)?;
    let d1 = conv(g, f1, "dec1_post", 1)?;
    let d1 = g.leaky_relu(d1, LEAKY_SLOPE);

    let u0 = g.upsample_nearest2(d1);
    let d0 = conv(g, u0, "dec0", 1)?;
    let d0 = g.leaky_relu(d0, LEAKY_SLOPE);

    // Low-level path keeps full-resolution depth values alive: learned
    // features plus the raw input plane.
    let low = conv(g, low_in, "lowlevel", 1)?;
    let low = g.leaky_relu(low, LEAKY_SLOPE);
    let low = g.concat_c(low, low_in)?;

    let cat = g.concat_c(d0, low)?;
    let hf = conv(g, cat, "head_pre", 1)?;
    let hf = g.leaky_relu(hf, LEAKY_SLOPE);
    conv(g, hf, "head_out", 1)
}

/// Replicate-pads the planes to the next multiple of the downsampling factor.
pub fn pack_inputs(depth: &DepthMap, rgb: &RgbImage, mask: &Mask) -> NetInputs {
    let (h, w) = (depth.height(), depth.width());
    let ph = h.div_ceil(DOWNSAMPLE_FACTOR) * DOWNSAMPLE_FACTOR;
    let pw = w.div_ceil(DOWNSAMPLE_FACTOR) * DOWNSAMPLE_FACTOR;
    let pad_plane = |src: &[f64]| -> Vec<f64> {
        if ph == h && pw == w {
            return src.to_vec();
        }
        let mut out = vec![0.0f64; ph * pw];
        for y in 0..ph {
            let sy = y.min(h - 1);
            for x in 0..pw {
                out[y * pw + x] = src[sy * w + x.min(w - 1)];
            }
        }
        out
    };
    NetInputs {
        depth: pad_plane(depth.values()),
        rgb: [
            pad_plane(rgb.plane(0)),
            pad_plane(rgb.plane(1)),
            pad_plane(rgb.plane(2)),
        ],
        mask: pad_plane(mask.alpha()),
        height: ph,
        width: pw,
    }
}

/// Inference forward pass: pads, runs the tape, crops back.
pub fn forward(
    params: &ModelParams,
    depth: &DepthMap,
    rgb: &RgbImage,
    mask: &Mask,
) -> Result<DepthMap> {
    crate::raster::check_dims(
        "forward",
        depth.width(),
        depth.height(),
        rgb.width(),
        rgb.height(),
    )?;
    crate::raster::check_dims(
        "forward",
        depth.width(),
        depth.height(),
        mask.width(),
        mask.height(),
    )?;
    let inputs = pack_inputs(depth, rgb, mask);
    let mut g = Graph::new();
    let p = ParamNodes::load(&mut g, params);
    let out = forward_graph(&mut g, &p, &inputs)?;
    let (h, w) = (depth.height(), depth.width());
    let full = g.value(out);
    let mut values = vec![0.0f64; h * w];
    for y in 0..h {
        values[y * w..(y + 1) * w]
            .copy_from_slice(&full[y * inputs.width..y * inputs.width + w]);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("network produced non-finite output".into()));
    }
    DepthMap::new(w, h, values)
}

/// The mask plane shared between the tape and the merge op.
pub fn mask_plane(inputs: &NetInputs) -> Rc<Vec<f64>> {
    Rc::new(inputs.mask.clone())
}
