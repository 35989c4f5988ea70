//! Int8 inference for dilated temporal convolutional networks.
//!
//! A network has 3 blocks of 3 conv layers each (9 layers total); within a
//! block two layers are dilated and one is strided by 2. The head averages
//! the last feature map over time and applies an affine regression to one
//! scalar, the heart rate in BPM.
//!
//! Quantization is per-tensor affine: every weight and activation tensor
//! carries a scale and zero point. Convolutions accumulate in int32 and
//! requantize to int8 with round-half-away-from-zero and saturation. The
//! head dequantizes directly to BPM without an intermediate int8 step, so
//! one int8 quantum never costs multiple BPM.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::reference::FloatTcn;
use super::{clamp_bpm, HrEstimate, PredictError};
use crate::signal::{SampleWindow, WINDOW_LEN};

/// Container format version written by [`TcnContainer::save_json`].
pub const TCN_FORMAT_VERSION: u32 = 1;

/// Input channels fed to the network: ppg plus three accel axes.
pub const TCN_INPUT_CHANNELS: usize = 4;

// ---------------------------------------------------------------------------
// Architecture
// ---------------------------------------------------------------------------

/// Output length of a 1-D convolution:
/// floor((L + 2*pad - dilation*(k-1) - 1) / stride) + 1.
pub fn conv_out_len(len: usize, kernel: usize, pad: usize, dilation: usize, stride: usize) -> usize {
    let span = dilation * (kernel - 1) + 1;
    (len + 2 * pad).saturating_sub(span) / stride + 1
}

/// Descriptor of one conv layer (no weights).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayerSpec {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub dilation: usize,
    pub stride: usize,
    pub pad: usize,
    pub relu: bool,
}

impl ConvLayerSpec {
    pub fn out_len(&self, len: usize) -> usize {
        conv_out_len(len, self.kernel, self.pad, self.dilation, self.stride)
    }

    pub fn weight_count(&self) -> usize {
        self.c_out * self.c_in * self.kernel
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcnBlock {
    pub layers: [ConvLayerSpec; 3],
}

/// Structural description of a network: 3 blocks x 3 layers plus the head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TcnArch {
    pub input_channels: usize,
    pub input_len: usize,
    pub blocks: [TcnBlock; 3],
}

impl TcnArch {
    pub fn layers(&self) -> impl Iterator<Item = &ConvLayerSpec> {
        self.blocks.iter().flat_map(|b| b.layers.iter())
    }

    /// Output length after each of the 9 layers.
    pub fn out_lens(&self) -> Vec<usize> {
        let mut lens = Vec::with_capacity(9);
        let mut len = self.input_len;
        for layer in self.layers() {
            len = layer.out_len(len);
            lens.push(len);
        }
        lens
    }

    /// Channels entering the head (c_out of the last layer).
    pub fn head_channels(&self) -> usize {
        self.blocks[2].layers[2].c_out
    }

    /// Sequence length entering the head.
    pub fn head_len(&self) -> usize {
        *self.out_lens().last().unwrap()
    }

    pub fn validate(&self) -> Result<(), PredictError> {
        if self.input_channels != TCN_INPUT_CHANNELS {
            return Err(PredictError::ShapeMismatch(format!(
                "input_channels {} != {TCN_INPUT_CHANNELS}",
                self.input_channels
            )));
        }
        if self.input_len != WINDOW_LEN {
            return Err(PredictError::ShapeMismatch(format!(
                "input_len {} != {WINDOW_LEN}",
                self.input_len
            )));
        }
        let mut c_prev = self.input_channels;
        let mut len = self.input_len;
        for (bi, block) in self.blocks.iter().enumerate() {
            let dilated = block.layers.iter().filter(|l| l.dilation > 1 && l.stride == 1).count();
            let strided = block.layers.iter().filter(|l| l.stride == 2 && l.dilation == 1).count();
            if dilated != 2 || strided != 1 {
                return Err(PredictError::ShapeMismatch(format!(
                    "block {bi}: need 2 dilated layers and 1 stride-2 layer, got {dilated} and {strided}"
                )));
            }
            for (li, layer) in block.layers.iter().enumerate() {
                if layer.c_in != c_prev {
                    return Err(PredictError::ShapeMismatch(format!(
                        "block {bi} layer {li}: c_in {} != previous c_out {c_prev}",
                        layer.c_in
                    )));
                }
                if layer.kernel == 0 || layer.dilation == 0 || !(1..=2).contains(&layer.stride) {
                    return Err(PredictError::ShapeMismatch(format!(
                        "block {bi} layer {li}: invalid kernel/dilation/stride"
                    )));
                }
                len = layer.out_len(len);
                if len == 0 {
                    return Err(PredictError::ShapeMismatch(format!(
                        "block {bi} layer {li}: output length collapsed to 0"
                    )));
                }
                c_prev = layer.c_out;
            }
        }
        Ok(())
    }

    pub fn count_ops(&self) -> OpCount {
        let mut total = OpCount { params: 0, macs: 0 };
        for ops in self.layer_ops() {
            total.params += ops.params;
            total.macs += ops.macs;
        }
        total
    }

    /// Per-layer counts (9 conv layers, then the head) so totals stay
    /// checkable as a plain sum.
    pub fn layer_ops(&self) -> Vec<OpCount> {
        let mut out = Vec::with_capacity(10);
        let mut len = self.input_len;
        for layer in self.layers() {
            len = layer.out_len(len);
            out.push(OpCount {
                params: (layer.weight_count() + layer.c_out) as u64,
                macs: (layer.c_out * len * layer.c_in * layer.kernel) as u64,
            });
        }
        let c = self.head_channels();
        out.push(OpCount {
            params: (c + 1) as u64,
            macs: c as u64,
        });
        out
    }

    /// The small network shape: narrow early layers, most parameters in the
    /// last block where the sequence is short.
    pub fn timeppg_small() -> TcnArch {
        fn strided(c_in: usize, c_out: usize) -> ConvLayerSpec {
            ConvLayerSpec { c_in, c_out, kernel: 3, dilation: 1, stride: 2, pad: 1, relu: true }
        }
        fn dilated(c_in: usize, c_out: usize, dilation: usize) -> ConvLayerSpec {
            ConvLayerSpec { c_in, c_out, kernel: 3, dilation, stride: 1, pad: 0, relu: true }
        }
        TcnArch {
            input_channels: 4,
            input_len: WINDOW_LEN,
            blocks: [
                TcnBlock { layers: [strided(4, 2), dilated(2, 2, 2), dilated(2, 2, 4)] },
                TcnBlock { layers: [strided(2, 4), dilated(4, 4, 2), dilated(4, 6, 4)] },
                TcnBlock { layers: [strided(6, 16), dilated(16, 32, 2), dilated(32, 32, 4)] },
            ],
        }
    }

    /// The big network shape: wide layers throughout, dilated layers padded
    /// to keep the sequence length.
    pub fn timeppg_big() -> TcnArch {
        fn strided(c_in: usize, c_out: usize) -> ConvLayerSpec {
            ConvLayerSpec { c_in, c_out, kernel: 3, dilation: 1, stride: 2, pad: 1, relu: true }
        }
        fn dilated(c_in: usize, c_out: usize, dilation: usize) -> ConvLayerSpec {
            ConvLayerSpec { c_in, c_out, kernel: 3, dilation, stride: 1, pad: dilation, relu: true }
        }
        TcnArch {
            input_channels: 4,
            input_len: WINDOW_LEN,
            blocks: [
                TcnBlock { layers: [strided(4, 64), dilated(64, 64, 2), dilated(64, 64, 4)] },
                TcnBlock { layers: [strided(64, 96), dilated(96, 96, 2), dilated(96, 96, 4)] },
                TcnBlock { layers: [strided(96, 128), dilated(128, 128, 2), dilated(128, 128, 4)] },
            ],
        }
    }
}

/// Parameter and multiply-accumulate totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub params: u64,
    pub macs: u64,
}

/// Count parameters and MACs of a network.
pub fn count_ops(spec: &TcnSpec) -> OpCount {
    spec.arch.count_ops()
}

// ---------------------------------------------------------------------------
// Quantization parameters
// ---------------------------------------------------------------------------

/// Per-tensor affine quantization: real = (q - zero_point) * scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    #[serde(default)]
    pub scale: f64,
    #[serde(default)]
    pub zero_point: i32,
}

impl QuantParams {
    fn validate(&self, tensor: &str) -> Result<(), PredictError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(PredictError::UncalibratedQuantization(tensor.to_string()));
        }
        Ok(())
    }

    pub fn quantize(&self, x: f64) -> i8 {
        let q = (x / self.scale).round() + self.zero_point as f64;
        q.clamp(i8::MIN as f64, i8::MAX as f64) as i8
    }

    pub fn dequantize(&self, q: i8) -> f64 {
        (q as i32 - self.zero_point) as f64 * self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerQuant {
    pub weight: QuantParams,
    pub output: QuantParams,
}

/// Quantization parameters for every tensor in the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnQuant {
    pub input: QuantParams,
    pub layers: Vec<LayerQuant>,
    pub head_weight: QuantParams,
}

/// Architecture plus quantization: everything but the weight values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnSpec {
    pub arch: TcnArch,
    pub quant: TcnQuant,
}

impl TcnSpec {
    pub fn validate(&self) -> Result<(), PredictError> {
        self.arch.validate()?;
        if self.quant.layers.len() != 9 {
            return Err(PredictError::ShapeMismatch(format!(
                "quant has {} layer entries, need 9",
                self.quant.layers.len()
            )));
        }
        self.quant.input.validate("input")?;
        for (i, lq) in self.quant.layers.iter().enumerate() {
            lq.weight.validate(&format!("layer {i} weight"))?;
            lq.output.validate(&format!("layer {i} output"))?;
        }
        self.quant.head_weight.validate("head weight")?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

mod b64_i8 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[i8], s: S) -> Result<S::Ok, S::Error> {
        let bytes: Vec<u8> = v.iter().map(|&x| x as u8).collect();
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<i8>, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = STANDARD.decode(text).map_err(serde::de::Error::custom)?;
        Ok(bytes.into_iter().map(|b| b as i8).collect())
    }
}

mod b64_i32_le {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[i32], s: S) -> Result<S::Ok, S::Error> {
        let mut bytes = Vec::with_capacity(v.len() * 4);
        for x in v {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<i32>, D::Error> {
        let text = String::deserialize(d)?;
        let bytes = STANDARD.decode(text).map_err(serde::de::Error::custom)?;
        if bytes.len() % 4 != 0 {
            return Err(serde::de::Error::custom("int32 array length not a multiple of 4 bytes"));
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

/// One layer's int8 weights (row-major [c_out][c_in][k]) and int32 biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerWeights {
    #[serde(with = "b64_i8")]
    pub weights: Vec<i8>,
    #[serde(with = "b64_i32_le")]
    pub bias: Vec<i32>,
}

/// Head regression: int8 weights over the pooled channels, float bias in BPM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadWeights {
    #[serde(with = "b64_i8")]
    pub weights: Vec<i8>,
    pub bias_bpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnWeights {
    pub layers: Vec<LayerWeights>,
    pub head: HeadWeights,
}

impl TcnWeights {
    fn validate(&self, arch: &TcnArch) -> Result<(), PredictError> {
        if self.layers.len() != 9 {
            return Err(PredictError::ShapeMismatch(format!(
                "{} weight layers, need 9",
                self.layers.len()
            )));
        }
        for (i, (spec, lw)) in arch.layers().zip(self.layers.iter()).enumerate() {
            if lw.weights.len() != spec.weight_count() {
                return Err(PredictError::ShapeMismatch(format!(
                    "layer {i}: {} weights, need {}",
                    lw.weights.len(),
                    spec.weight_count()
                )));
            }
            if lw.bias.len() != spec.c_out {
                return Err(PredictError::ShapeMismatch(format!(
                    "layer {i}: {} biases, need {}",
                    lw.bias.len(),
                    spec.c_out
                )));
            }
        }
        if self.head.weights.len() != arch.head_channels() {
            return Err(PredictError::ShapeMismatch(format!(
                "head: {} weights, need {}",
                self.head.weights.len(),
                arch.head_channels()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Tensors and convolution
// ---------------------------------------------------------------------------

/// Int8 tensor of shape channels x len, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QTensor {
    pub channels: usize,
    pub len: usize,
    pub data: Vec<i8>,
}

impl QTensor {
    pub fn new(channels: usize, len: usize, data: Vec<i8>) -> Result<Self, PredictError> {
        if data.len() != channels * len {
            return Err(PredictError::ShapeMismatch(format!(
                "tensor data {} != {channels}x{len}",
                data.len()
            )));
        }
        Ok(QTensor { channels, len, data })
    }

    #[inline]
    pub fn row(&self, c: usize) -> &[i8] {
        &self.data[c * self.len..(c + 1) * self.len]
    }
}

/// A conv layer bound to its weights and quantization parameters.
#[derive(Debug, Clone, Copy)]
pub struct ConvLayer<'a> {
    pub spec: &'a ConvLayerSpec,
    pub weights: &'a [i8],
    pub bias: &'a [i32],
    pub q_in: QuantParams,
    pub q_w: QuantParams,
    pub q_out: QuantParams,
}

impl<'a> ConvLayer<'a> {
    /// Int32 accumulators before requantization: bias plus the dilated
    /// cross-correlation of zero-point-shifted operands. Positions off the
    /// edge read as the input zero point, i.e. real zero.
    pub fn accumulate(&self, input: &QTensor) -> Result<(Vec<i32>, usize), PredictError> {
        let spec = self.spec;
        if input.channels != spec.c_in {
            return Err(PredictError::ShapeMismatch(format!(
                "conv input has {} channels, layer wants {}",
                input.channels, spec.c_in
            )));
        }
        if self.weights.len() != spec.weight_count() || self.bias.len() != spec.c_out {
            return Err(PredictError::ShapeMismatch("conv weights/bias size".into()));
        }
        let l_in = input.len;
        let l_out = spec.out_len(l_in);
        if l_out == 0 {
            return Err(PredictError::ShapeMismatch("conv output length is 0".into()));
        }
        let zp_in = self.q_in.zero_point;
        let zp_w = self.q_w.zero_point;

        // Shift the whole input once so the hot loop is a plain i32
        // multiply-accumulate over contiguous slices.
        let shifted: Vec<i32> = input.data.iter().map(|&q| q as i32 - zp_in).collect();

        let mut acc = vec![0i32; spec.c_out * l_out];
        for co in 0..spec.c_out {
            let out_row = &mut acc[co * l_out..(co + 1) * l_out];
            out_row.fill(self.bias[co]);
            for ci in 0..spec.c_in {
                let x = &shifted[ci * l_in..(ci + 1) * l_in];
                let w_base = (co * spec.c_in + ci) * spec.kernel;
                for j in 0..spec.kernel {
                    let w = self.weights[w_base + j] as i32 - zp_w;
                    if w == 0 {
                        continue;
                    }
                    // input position for output t: t*stride + j*dilation - pad
                    let offset = j as isize * spec.dilation as isize - spec.pad as isize;
                    let t_lo = if offset < 0 {
                        ((-offset) as usize).div_ceil(spec.stride)
                    } else {
                        0
                    };
                    let t_hi = {
                        // t*stride + offset <= l_in - 1
                        let max_pos = l_in as isize - 1 - offset;
                        if max_pos < 0 {
                            0
                        } else {
                            (max_pos as usize / spec.stride + 1).min(l_out)
                        }
                    };
                    if t_hi <= t_lo {
                        continue;
                    }
                    let x_start = (t_lo as isize * spec.stride as isize + offset) as usize;
                    if spec.stride == 1 {
                        let xs = &x[x_start..x_start + (t_hi - t_lo)];
                        for (o, &xv) in out_row[t_lo..t_hi].iter_mut().zip(xs) {
                            *o += w * xv;
                        }
                    } else {
                        let xs = x[x_start..].iter().step_by(spec.stride);
                        for (o, &xv) in out_row[t_lo..t_hi].iter_mut().zip(xs) {
                            *o += w * xv;
                        }
                    }
                }
            }
        }
        Ok((acc, l_out))
    }
}

/// Quantized 1-D convolution: int32 accumulation, then requantization to the
/// layer's output scale/zero-point with round-half-away-from-zero and
/// saturation, then optional ReLU (clamp at the output zero point).
pub fn conv1d(input: &QTensor, layer: &ConvLayer) -> Result<QTensor, PredictError> {
    layer.q_in.validate("conv input")?;
    layer.q_w.validate("conv weight")?;
    layer.q_out.validate("conv output")?;
    let (acc, l_out) = layer.accumulate(input)?;
    let m = layer.q_in.scale * layer.q_w.scale / layer.q_out.scale;
    let zp_out = layer.q_out.zero_point;
    let data: Vec<i8> = acc
        .iter()
        .map(|&a| {
            // f64::round is round-half-away-from-zero
            let q = (a as f64 * m).round() as i64 + zp_out as i64;
            let q = q.clamp(i8::MIN as i64, i8::MAX as i64) as i8;
            if layer.spec.relu {
                q.max(zp_out.clamp(i8::MIN as i32, i8::MAX as i32) as i8)
            } else {
                q
            }
        })
        .collect();
    QTensor::new(layer.spec.c_out, l_out, data)
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

/// Normalized inputs are clipped to this many standard deviations, which
/// fixes the input quantization range.
pub(crate) const INPUT_CLIP: f64 = 4.0;

/// Standardize the 4 input channels (ppg, ax, ay, az) to zero mean and unit
/// variance per channel, clipped to [-4, 4]. Shared by the int8 path and
/// the float reference.
pub(crate) fn normalize_window(window: &SampleWindow) -> [Vec<f64>; 4] {
    let channels: [&[f64]; 4] = [
        window.ppg(),
        &window.accel()[0],
        &window.accel()[1],
        &window.accel()[2],
    ];
    channels.map(|ch| {
        let n = ch.len() as f64;
        let mean = ch.iter().sum::<f64>() / n;
        let var = ch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt() + 1e-6;
        ch.iter()
            .map(|x| ((x - mean) / std).clamp(-INPUT_CLIP, INPUT_CLIP))
            .collect()
    })
}

fn infer_validated(spec: &TcnSpec, weights: &TcnWeights, window: &SampleWindow) -> HrEstimate {
    let normalized = normalize_window(window);
    let q_in = spec.quant.input;
    let mut data = Vec::with_capacity(4 * WINDOW_LEN);
    for ch in &normalized {
        data.extend(ch.iter().map(|&x| q_in.quantize(x)));
    }
    let mut tensor = QTensor::new(4, WINDOW_LEN, data).expect("input tensor shape");

    let mut q_prev = q_in;
    for (i, layer_spec) in spec.arch.layers().enumerate() {
        let lq = &spec.quant.layers[i];
        let layer = ConvLayer {
            spec: layer_spec,
            weights: &weights.layers[i].weights,
            bias: &weights.layers[i].bias,
            q_in: q_prev,
            q_w: lq.weight,
            q_out: lq.output,
        };
        tensor = conv1d(&tensor, &layer).expect("validated layer shapes");
        q_prev = lq.output;
    }

    // Head: average pool over time, then affine to BPM. Computed exactly in
    // integers from channel sums, dequantized once at the end.
    let len = tensor.len as i64;
    let zp_in = q_prev.zero_point as i64;
    let zp_w = spec.quant.head_weight.zero_point as i64;
    let mut acc: i64 = 0;
    for (c, &w) in weights.head.weights.iter().enumerate() {
        let sum: i64 = tensor.row(c).iter().map(|&q| q as i64).sum();
        acc += (w as i64 - zp_w) * (sum - len * zp_in);
    }
    let bpm = q_prev.scale * spec.quant.head_weight.scale * acc as f64 / len as f64
        + weights.head.bias_bpm;
    HrEstimate {
        bpm: clamp_bpm(bpm),
    }
}

/// Run the int8 pipeline on a window: normalize, quantize, 9 conv layers,
/// pooled affine head, clamp to (20, 300) BPM.
pub fn tcn_infer(
    spec: &TcnSpec,
    weights: &TcnWeights,
    window: &SampleWindow,
) -> Result<HrEstimate, PredictError> {
    spec.validate()?;
    weights.validate(&spec.arch)?;
    Ok(infer_validated(spec, weights, window))
}

/// A validated (spec, weights) pair ready for repeated inference.
#[derive(Debug, Clone, PartialEq)]
pub struct TcnModel {
    spec: TcnSpec,
    weights: TcnWeights,
}

impl TcnModel {
    pub fn new(spec: TcnSpec, weights: TcnWeights) -> Result<Self, PredictError> {
        spec.validate()?;
        weights.validate(&spec.arch)?;
        Ok(TcnModel { spec, weights })
    }

    pub fn spec(&self) -> &TcnSpec {
        &self.spec
    }

    pub fn weights(&self) -> &TcnWeights {
        &self.weights
    }

    pub fn infer(&self, window: &SampleWindow) -> Result<HrEstimate, PredictError> {
        if window.ppg().len() != WINDOW_LEN {
            return Err(PredictError::ShapeMismatch("window length".into()));
        }
        Ok(infer_validated(&self.spec, &self.weights, window))
    }
}

// ---------------------------------------------------------------------------
// Serialization container
// ---------------------------------------------------------------------------

/// Single-file container for a network: spec plus weights, versioned.
///
/// Int8 arrays are base64-encoded raw bytes; int32 arrays are base64-encoded
/// little-endian 4-byte words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnContainer {
    pub format_version: u32,
    pub spec: TcnSpec,
    pub weights: TcnWeights,
}

impl TcnContainer {
    pub fn from_model(model: &TcnModel) -> Self {
        TcnContainer {
            format_version: TCN_FORMAT_VERSION,
            spec: model.spec.clone(),
            weights: model.weights.clone(),
        }
    }

    pub fn into_model(self) -> Result<TcnModel, PredictError> {
        TcnModel::new(self.spec, self.weights)
    }

    pub fn save_json(&self, path: &Path) -> Result<(), std::io::Error> {
        std::fs::write(path, serde_json::to_string(self).expect("container serializes"))
    }

    pub fn load_json(path: &Path) -> Result<Self, PredictError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PredictError::ShapeMismatch(format!("read {}: {e}", path.display())))?;
        let container: TcnContainer = serde_json::from_str(&text)
            .map_err(|e| PredictError::ShapeMismatch(format!("parse {}: {e}", path.display())))?;
        if container.format_version != TCN_FORMAT_VERSION {
            return Err(PredictError::ShapeMismatch(format!(
                "container format version {} unsupported (expected {TCN_FORMAT_VERSION})",
                container.format_version
            )));
        }
        Ok(container)
    }
}

/// Load a model from a container file.
pub fn load_model(path: &Path) -> Result<TcnModel, PredictError> {
    TcnContainer::load_json(path)?.into_model()
}

// ---------------------------------------------------------------------------
// Random models with post-training-style calibration
// ---------------------------------------------------------------------------

/// Heart rates covered by the calibration set, spanning the band where
/// estimates are expected to live.
const CALIB_HRS: [f64; 3] = [50.0, 110.0, 185.0];
/// Headroom multiplier on observed activation ranges.
const CALIB_MARGIN: f64 = 1.15;
/// Raw head outputs are renormalized to roughly this distribution (BPM).
/// The spread is kept moderate: the head magnifies activation quantization
/// noise together with the signal, so a wild output range would cost BPM
/// fidelity against the float reference.
const HEAD_TARGET_MEAN: f64 = 90.0;
const HEAD_TARGET_STD: f64 = 12.0;

fn calibration_windows(seed: u64) -> Vec<SampleWindow> {
    let mut out = Vec::new();
    for a in crate::signal::ActivityId::all() {
        for (i, hr) in CALIB_HRS.iter().enumerate() {
            let w = crate::signal::synth_window(*hr, a, seed ^ ((a.get() as u64) << 8) ^ i as u64)
                .expect("calibration window");
            out.push(w);
        }
    }
    out
}

fn symmetric_quant(values: &[f64]) -> QuantParams {
    let max_abs = values.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    QuantParams {
        scale: if max_abs > 0.0 { max_abs / 127.0 } else { 1.0 },
        zero_point: 0,
    }
}

fn range_quant(min: f64, max: f64) -> QuantParams {
    let lo = (min * CALIB_MARGIN).min(0.0);
    let hi = (max * CALIB_MARGIN).max(lo + 1e-6);
    let scale = (hi - lo) / 255.0;
    let zero_point = (-128.0 - lo / scale).round().clamp(-128.0, 127.0) as i32;
    QuantParams { scale, zero_point }
}

fn quantize_vec(values: &[f64], q: QuantParams) -> Vec<i8> {
    values.iter().map(|&v| q.quantize(v)).collect()
}

/// Build an int8 model from a float network by calibrating activation
/// ranges on synthetic windows, quantizing weights symmetrically, and
/// quantizing each bias at its layer's input*weight scale.
pub fn quantize_float_tcn(float: &FloatTcn, calib: &[SampleWindow]) -> TcnModel {
    assert!(!calib.is_empty(), "calibration set must be non-empty");
    // Merge per-tensor (min, max) over the calibration set: entry 0 is the
    // normalized input, entries 1..=9 are the layer outputs.
    let mut ranges: Vec<(f64, f64)> = vec![(f64::INFINITY, f64::NEG_INFINITY); 10];
    for w in calib {
        let stats = float.forward_stats(w);
        for (r, s) in ranges.iter_mut().zip(stats.tensor_ranges.iter()) {
            r.0 = r.0.min(s.0);
            r.1 = r.1.max(s.1);
        }
    }

    // The input is clipped to +-INPUT_CLIP by normalization, so its range
    // is known exactly; +-127 maps to the clip bounds.
    let input_q = QuantParams {
        scale: INPUT_CLIP / 127.0,
        zero_point: 0,
    };
    let mut layer_quants = Vec::with_capacity(9);
    let mut layer_weights = Vec::with_capacity(9);
    let mut q_prev = input_q;
    for (i, fl) in float.layers.iter().enumerate() {
        let w_q = symmetric_quant(&fl.weights);
        let out_q = range_quant(ranges[i + 1].0, ranges[i + 1].1);
        let bias_scale = q_prev.scale * w_q.scale;
        let bias: Vec<i32> = fl
            .bias
            .iter()
            .map(|&b| (b / bias_scale).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32)
            .collect();
        layer_weights.push(LayerWeights {
            weights: quantize_vec(&fl.weights, w_q),
            bias,
        });
        layer_quants.push(LayerQuant {
            weight: w_q,
            output: out_q,
        });
        q_prev = out_q;
    }

    let head_q = symmetric_quant(&float.head_weights);
    let weights = TcnWeights {
        layers: layer_weights,
        head: HeadWeights {
            weights: quantize_vec(&float.head_weights, head_q),
            bias_bpm: float.head_bias_bpm,
        },
    };
    let spec = TcnSpec {
        arch: float.arch.clone(),
        quant: TcnQuant {
            input: input_q,
            layers: layer_quants,
            head_weight: head_q,
        },
    };
    TcnModel::new(spec, weights).expect("calibrated model is consistent")
}

/// Generate a seeded random float network for an architecture, with the head
/// renormalized so raw outputs land in a physiological range.
pub fn random_float_tcn(arch: &TcnArch, seed: u64) -> FloatTcn {
    arch.validate().expect("architecture must be valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(9);
    for spec in arch.layers() {
        let fan_in = (spec.c_in * spec.kernel) as f64;
        let gain = 1.5 / fan_in.sqrt();
        let weights: Vec<f64> = (0..spec.weight_count())
            .map(|_| rng.random_range(-1.0..1.0) * gain)
            .collect();
        let bias: Vec<f64> = (0..spec.c_out).map(|_| rng.random_range(-0.05..0.05)).collect();
        layers.push(super::reference::FloatConvLayer { weights, bias });
    }
    let c = arch.head_channels();
    let head_weights: Vec<f64> = (0..c)
        .map(|_| rng.random_range(-1.0..1.0) / (c as f64).sqrt())
        .collect();
    let mut float = FloatTcn {
        arch: arch.clone(),
        layers,
        head_weights,
        head_bias_bpm: HEAD_TARGET_MEAN,
    };

    // Renormalize the head so raw outputs over the calibration windows have
    // a sane mean and spread instead of collapsing or exploding.
    let calib = calibration_windows(seed ^ 0xc0ff_ee00);
    let outs: Vec<f64> = calib.iter().map(|w| float.forward_stats(w).raw_bpm).collect();
    let n = outs.len() as f64;
    let mean = outs.iter().sum::<f64>() / n;
    let std = (outs.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std > 1e-9 {
        let f = HEAD_TARGET_STD / std;
        for w in &mut float.head_weights {
            *w *= f;
        }
        float.head_bias_bpm = HEAD_TARGET_MEAN + (float.head_bias_bpm - mean) * f;
    } else {
        float.head_bias_bpm = HEAD_TARGET_MEAN;
    }
    float
}

/// Largest int8-vs-float gap tolerated on the calibration windows before
/// the head gets shrunk, BPM.
const QAT_GAP_BPM: f64 = 0.75;

/// Swap in a requantized head for an updated float head; conv layers and
/// their calibrated ranges are untouched.
fn requantize_head(model: &TcnModel, float: &FloatTcn) -> TcnModel {
    let head_q = symmetric_quant(&float.head_weights);
    let mut spec = model.spec().clone();
    let mut weights = model.weights().clone();
    spec.quant.head_weight = head_q;
    weights.head = HeadWeights {
        weights: quantize_vec(&float.head_weights, head_q),
        bias_bpm: float.head_bias_bpm,
    };
    TcnModel::new(spec, weights).expect("head requantization keeps shapes")
}

/// Seeded random int8 model: random float weights, calibrated and quantized.
///
/// Mirrors what quantization-aware training delivers for real networks: if
/// the quantized model drifts from its float original on the calibration
/// windows, the head's output swing is shrunk until the drift is small, so
/// shipped models are quantization-friendly by construction.
pub fn random_model(arch: &TcnArch, seed: u64) -> TcnModel {
    let mut float = random_float_tcn(arch, seed);
    let calib = calibration_windows(seed ^ 0xc0ff_ee00);
    let mut model = quantize_float_tcn(&float, &calib);
    for _ in 0..4 {
        let gap = calib
            .iter()
            .map(|w| {
                let q = model.infer(w).expect("calibration window is valid").bpm;
                let f = float.infer(w).expect("calibration window is valid");
                (q - f).abs()
            })
            .fold(0.0f64, f64::max);
        if gap <= QAT_GAP_BPM {
            break;
        }
        let shrink = (QAT_GAP_BPM * 0.9 / gap).max(0.2);
        for w in &mut float.head_weights {
            *w *= shrink;
        }
        float.head_bias_bpm = HEAD_TARGET_MEAN + (float.head_bias_bpm - HEAD_TARGET_MEAN) * shrink;
        model = requantize_head(&model, &float);
    }
    model
}

/// Least-squares refit of the head on (window, target BPM) pairs, then
/// requantization. Desk-scale training for the regression layer only.
pub fn fit_head(float: &mut FloatTcn, windows: &[SampleWindow], targets: &[f64]) {
    assert_eq!(windows.len(), targets.len());
    let c = float.arch.head_channels();
    let n = windows.len();
    if n == 0 {
        return;
    }
    // Ridge regression on pooled features with an intercept.
    let dim = c + 1;
    let mut xtx = vec![0.0f64; dim * dim];
    let mut xty = vec![0.0f64; dim];
    for (w, &y) in windows.iter().zip(targets) {
        let mut feat = float.forward_stats(w).pooled;
        feat.push(1.0);
        for i in 0..dim {
            xty[i] += feat[i] * y;
            for j in 0..dim {
                xtx[i * dim + j] += feat[i] * feat[j];
            }
        }
    }
    let lambda = 1e-3;
    for i in 0..dim {
        xtx[i * dim + i] += lambda;
    }
    if let Some(sol) = solve_linear(&mut xtx, &mut xty, dim) {
        float.head_weights = sol[..c].to_vec();
        float.head_bias_bpm = sol[c];
    }
}

/// Gaussian elimination with partial pivoting; None if singular.
fn solve_linear(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&r1, &r2| a[r1 * n + col].abs().total_cmp(&a[r2 * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in (row + 1)..n {
            s -= a[row * n + k] * x[k];
        }
        x[row] = s / a[row * n + row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synth_window, ActivityId};

    fn q(scale: f64, zero_point: i32) -> QuantParams {
        QuantParams { scale, zero_point }
    }

    #[test]
    fn out_len_formula() {
        // k=3, dilation=2, L=8, same padding, stride 1 -> 8
        assert_eq!(conv_out_len(8, 3, 2, 2, 1), 8);
        assert_eq!(conv_out_len(256, 3, 1, 1, 2), 128);
        assert_eq!(conv_out_len(128, 3, 0, 2, 1), 124);
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        let spec = ConvLayerSpec {
            c_in: 1,
            c_out: 1,
            kernel: 1,
            dilation: 1,
            stride: 1,
            pad: 0,
            relu: false,
        };
        let input = QTensor::new(1, 6, vec![-120, -3, 0, 1, 55, 127]).unwrap();
        let layer = ConvLayer {
            spec: &spec,
            weights: &[1],
            bias: &[0],
            q_in: q(1.0, 0),
            q_w: q(1.0, 0),
            q_out: q(1.0, 0),
        };
        let out = conv1d(&input, &layer).unwrap();
        assert_eq!(out.data, input.data);
    }

    /// Independent triple-loop float conv used as the small-tensor oracle.
    #[allow(clippy::needless_range_loop)]
    fn brute_force_float_conv(
        input: &[Vec<f64>],
        weights: &[f64],
        bias: &[f64],
        spec: &ConvLayerSpec,
    ) -> Vec<Vec<f64>> {
        let l_in = input[0].len();
        let l_out = spec.out_len(l_in);
        let mut out = vec![vec![0.0; l_out]; spec.c_out];
        for co in 0..spec.c_out {
            for t in 0..l_out {
                let mut s = bias[co];
                for ci in 0..spec.c_in {
                    for j in 0..spec.kernel {
                        let pos = (t * spec.stride + j * spec.dilation) as isize - spec.pad as isize;
                        if pos >= 0 && (pos as usize) < l_in {
                            s += weights[(co * spec.c_in + ci) * spec.kernel + j]
                                * input[ci][pos as usize];
                        }
                    }
                }
                if spec.relu {
                    s = s.max(0.0);
                }
                out[co][t] = s;
            }
        }
        out
    }

    #[test]
    fn random_layer_matches_float_oracle_within_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..50 {
            let spec = ConvLayerSpec {
                c_in: rng.random_range(1..4),
                c_out: rng.random_range(1..4),
                kernel: rng.random_range(1..4),
                dilation: rng.random_range(1..3),
                stride: rng.random_range(1..3),
                pad: rng.random_range(0..3),
                relu: case % 2 == 0,
            };
            let l_in = rng.random_range(8..20);
            if spec.out_len(l_in) == 0 {
                continue;
            }
            let q_in = q(0.05, rng.random_range(-10..10));
            let q_w = q(0.02, 0);
            let data: Vec<i8> = (0..spec.c_in * l_in).map(|_| rng.random_range(-100..100)).collect();
            let input = QTensor::new(spec.c_in, l_in, data).unwrap();
            let weights: Vec<i8> = (0..spec.weight_count()).map(|_| rng.random_range(-100..100)).collect();
            let bias: Vec<i32> = (0..spec.c_out).map(|_| rng.random_range(-50..50)).collect();

            // Float oracle on the dequantized operands.
            let f_input: Vec<Vec<f64>> = (0..spec.c_in)
                .map(|c| input.row(c).iter().map(|&v| q_in.dequantize(v)).collect())
                .collect();
            let f_weights: Vec<f64> = weights.iter().map(|&v| q_w.dequantize(v)).collect();
            let f_bias: Vec<f64> = bias.iter().map(|&b| b as f64 * q_in.scale * q_w.scale).collect();
            let expected = brute_force_float_conv(&f_input, &f_weights, &f_bias, &spec);

            // Output scale sized to the observed range so nothing saturates.
            let max_abs = expected
                .iter()
                .flatten()
                .fold(0.0f64, |m, &v| m.max(v.abs()))
                .max(1e-6);
            let q_out = q(max_abs / 126.0, 0);

            let layer = ConvLayer {
                spec: &spec,
                weights: &weights,
                bias: &bias,
                q_in,
                q_w,
                q_out,
            };
            let got = conv1d(&input, &layer).unwrap();
            for (co, expected_row) in expected.iter().enumerate() {
                for (t, &e) in expected_row.iter().enumerate() {
                    let g = q_out.dequantize(got.row(co)[t]);
                    assert!(
                        (g - e).abs() <= q_out.scale / 2.0 + 1e-12,
                        "case {case} co={co} t={t}: got {g}, expected {e}, step {}",
                        q_out.scale
                    );
                }
            }
        }
    }

    #[test]
    fn accumulator_is_linear_before_requantization() {
        let spec = ConvLayerSpec {
            c_in: 2,
            c_out: 2,
            kernel: 3,
            dilation: 2,
            stride: 1,
            pad: 2,
            relu: false,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let weights: Vec<i8> = (0..spec.weight_count()).map(|_| rng.random_range(-60..60)).collect();
        let zero_bias = vec![0i32; 2];
        let layer = ConvLayer {
            spec: &spec,
            weights: &weights,
            bias: &zero_bias,
            q_in: q(1.0, 0),
            q_w: q(1.0, 0),
            q_out: q(1.0, 0),
        };
        let a: Vec<i8> = (0..2 * 10).map(|_| rng.random_range(-50..50)).collect();
        let b: Vec<i8> = (0..2 * 10).map(|_| rng.random_range(-50..50)).collect();
        let sum: Vec<i8> = a.iter().zip(&b).map(|(&x, &y)| x + y).collect();
        let (acc_a, _) = layer.accumulate(&QTensor::new(2, 10, a).unwrap()).unwrap();
        let (acc_b, _) = layer.accumulate(&QTensor::new(2, 10, b).unwrap()).unwrap();
        let (acc_sum, _) = layer.accumulate(&QTensor::new(2, 10, sum).unwrap()).unwrap();
        for i in 0..acc_sum.len() {
            assert_eq!(acc_sum[i], acc_a[i] + acc_b[i]);
        }
    }

    #[test]
    fn shipped_arch_op_counts_land_in_tolerance() {
        let small = TcnArch::timeppg_small();
        small.validate().unwrap();
        let ops = small.count_ops();
        assert!((ops.params as f64 - 5_090.0).abs() <= 0.05 * 5_090.0, "small params {}", ops.params);
        assert!((ops.macs as f64 - 77_630.0).abs() <= 0.10 * 77_630.0, "small macs {}", ops.macs);

        let big = TcnArch::timeppg_big();
        big.validate().unwrap();
        let ops = big.count_ops();
        assert!(
            (ops.params as f64 - 232_600.0).abs() <= 0.05 * 232_600.0,
            "big params {}",
            ops.params
        );
        assert!(
            (ops.macs as f64 - 12_270_000.0).abs() <= 0.10 * 12_270_000.0,
            "big macs {}",
            ops.macs
        );
    }

    #[test]
    fn single_layer_hand_count() {
        // C_in=1, C_out=1, k=3, L'=10 -> 30 MACs, 4 params
        let spec = ConvLayerSpec {
            c_in: 1,
            c_out: 1,
            kernel: 3,
            dilation: 1,
            stride: 1,
            pad: 0,
            relu: true,
        };
        let l_out = spec.out_len(12);
        assert_eq!(l_out, 10);
        assert_eq!(spec.weight_count() + spec.c_out, 4);
        assert_eq!(spec.c_out * l_out * spec.c_in * spec.kernel, 30);
    }

    #[test]
    fn count_ops_is_additive_over_layers() {
        for arch in [TcnArch::timeppg_small(), TcnArch::timeppg_big()] {
            let per_layer = arch.layer_ops();
            let total = arch.count_ops();
            assert_eq!(total.params, per_layer.iter().map(|o| o.params).sum::<u64>());
            assert_eq!(total.macs, per_layer.iter().map(|o| o.macs).sum::<u64>());
        }
    }

    fn constant_model(arch: &TcnArch, bias_bpm: f64) -> TcnModel {
        let layers = arch
            .layers()
            .map(|l| LayerWeights {
                weights: vec![0; l.weight_count()],
                bias: vec![0; l.c_out],
            })
            .collect();
        let quant_layers = arch
            .layers()
            .map(|_| LayerQuant {
                weight: q(1.0, 0),
                output: q(1.0, 0),
            })
            .collect();
        let spec = TcnSpec {
            arch: arch.clone(),
            quant: TcnQuant {
                input: q(0.05, 0),
                layers: quant_layers,
                head_weight: q(1.0, 0),
            },
        };
        let weights = TcnWeights {
            layers,
            head: HeadWeights {
                weights: vec![0; arch.head_channels()],
                bias_bpm,
            },
        };
        TcnModel::new(spec, weights).unwrap()
    }

    #[test]
    fn all_zero_weights_output_head_bias() {
        let arch = TcnArch::timeppg_small();
        let model = constant_model(&arch, 77.5);
        for seed in 0..3 {
            let w = synth_window(100.0, ActivityId::new(5).unwrap(), seed).unwrap();
            assert_eq!(model.infer(&w).unwrap().bpm, 77.5);
        }
        // Out-of-range bias clamps.
        let model = constant_model(&arch, 500.0);
        let w = synth_window(100.0, ActivityId::new(5).unwrap(), 0).unwrap();
        let bpm = model.infer(&w).unwrap().bpm;
        assert!(bpm < 300.0 && bpm > 20.0);
    }

    #[test]
    fn inference_is_deterministic() {
        let model = random_model(&TcnArch::timeppg_small(), 99);
        let w = synth_window(88.0, ActivityId::new(4).unwrap(), 17).unwrap();
        assert_eq!(model.infer(&w).unwrap(), model.infer(&w).unwrap());
    }

    #[test]
    fn int8_tracks_float_reference() {
        for seed in 0..20 {
            let model = random_model(&TcnArch::timeppg_small(), seed);
            let float = FloatTcn::from_model(&model);
            for (a, hr) in [(1u8, 70.0), (5, 120.0), (9, 180.0)] {
                let w = synth_window(hr, ActivityId::new(a).unwrap(), seed ^ 0xabc).unwrap();
                let got = model.infer(&w).unwrap().bpm;
                let expect = float.infer(&w).unwrap();
                assert!(
                    (got - expect).abs() <= 2.0,
                    "seed {seed} a {a}: int8 {got} vs float {expect}"
                );
            }
        }
    }

    #[test]
    fn output_always_in_physiological_range() {
        let model = random_model(&TcnArch::timeppg_small(), 5);
        for seed in 0..10 {
            let w = synth_window(40.0 + 20.0 * seed as f64 % 250.0, ActivityId::new(9).unwrap(), seed).unwrap();
            let bpm = model.infer(&w).unwrap().bpm;
            assert!(bpm > 20.0 && bpm < 300.0);
        }
    }

    #[test]
    fn container_round_trip() {
        let model = random_model(&TcnArch::timeppg_small(), 21);
        let dir = std::env::temp_dir().join("chris-tcn-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        TcnContainer::from_model(&model).save_json(&path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(&model, &loaded);
        let w = synth_window(90.0, ActivityId::new(2).unwrap(), 3).unwrap();
        assert_eq!(model.infer(&w).unwrap(), loaded.infer(&w).unwrap());
    }

    #[test]
    fn missing_scale_is_uncalibrated() {
        let model = random_model(&TcnArch::timeppg_small(), 2);
        let mut spec = model.spec().clone();
        spec.quant.layers[4].output.scale = 0.0;
        match TcnModel::new(spec, model.weights().clone()) {
            Err(PredictError::UncalibratedQuantization(t)) => assert!(t.contains("layer 4")),
            other => panic!("expected UncalibratedQuantization, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_weights_are_rejected() {
        let model = random_model(&TcnArch::timeppg_small(), 2);
        let mut weights = model.weights().clone();
        weights.layers[0].weights.pop();
        assert!(matches!(
            TcnModel::new(model.spec().clone(), weights),
            Err(PredictError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn head_fit_reduces_error_on_training_windows() {
        let arch = TcnArch::timeppg_small();
        let mut float = random_float_tcn(&arch, 7);
        let mut windows = Vec::new();
        let mut targets = Vec::new();
        for seed in 0..40u64 {
            let hr = 60.0 + (seed as f64 * 3.7) % 120.0;
            let a = ActivityId::new(1 + (seed % 9) as u8).unwrap();
            windows.push(synth_window(hr, a, seed).unwrap());
            targets.push(hr);
        }
        let err = |f: &FloatTcn| -> f64 {
            windows
                .iter()
                .zip(&targets)
                .map(|(w, &t)| (f.infer(w).unwrap() - t).abs())
                .sum::<f64>()
                / windows.len() as f64
        };
        let before = err(&float);
        fit_head(&mut float, &windows, &targets);
        let after = err(&float);
        assert!(after <= before, "fit made things worse: {before} -> {after}");
    }
}
