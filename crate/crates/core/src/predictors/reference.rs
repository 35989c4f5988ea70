//! Float reference pipeline for the quantized TCN.
//!
//! Runs the same network in f64 on dequantized weights, with no activation
//! quantization. It is the validation oracle for the int8 path and the
//! forward pass used to calibrate activation ranges, so it deliberately
//! shares no convolution code with `tcn`.

use super::tcn::{TcnArch, TcnModel};
use super::{clamp_bpm, PredictError};
use crate::signal::SampleWindow;

/// One layer's float weights, row-major [c_out][c_in][k], plus float biases.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatConvLayer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Float network: architecture, per-layer weights, and the affine head.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatTcn {
    pub arch: TcnArch,
    pub layers: Vec<FloatConvLayer>,
    pub head_weights: Vec<f64>,
    pub head_bias_bpm: f64,
}

/// Everything one forward pass exposes: per-tensor value ranges (input plus
/// each layer output), the pooled feature vector, and the raw head output.
#[derive(Debug, Clone)]
pub struct ForwardStats {
    pub tensor_ranges: Vec<(f64, f64)>,
    pub pooled: Vec<f64>,
    pub raw_bpm: f64,
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

impl FloatTcn {
    /// Dequantize an int8 model into its float counterpart.
    pub fn from_model(model: &TcnModel) -> FloatTcn {
        let spec = model.spec();
        let weights = model.weights();
        let mut layers = Vec::with_capacity(9);
        let mut q_prev = spec.quant.input;
        for (i, _) in spec.arch.layers().enumerate() {
            let lq = &spec.quant.layers[i];
            let lw = &weights.layers[i];
            let bias_scale = q_prev.scale * lq.weight.scale;
            layers.push(FloatConvLayer {
                weights: lw.weights.iter().map(|&w| lq.weight.dequantize(w)).collect(),
                bias: lw.bias.iter().map(|&b| b as f64 * bias_scale).collect(),
            });
            q_prev = lq.output;
        }
        FloatTcn {
            arch: spec.arch.clone(),
            layers,
            head_weights: weights
                .head
                .weights
                .iter()
                .map(|&w| spec.quant.head_weight.dequantize(w))
                .collect(),
            head_bias_bpm: weights.head.bias_bpm,
        }
    }

    fn conv(&self, input: &[Vec<f64>], layer_idx: usize) -> Vec<Vec<f64>> {
        let spec = self.arch.layers().nth(layer_idx).expect("layer index");
        let fl = &self.layers[layer_idx];
        let l_in = input[0].len();
        let l_out = spec.out_len(l_in);
        let mut out = vec![vec![0.0f64; l_out]; spec.c_out];
        for (co, row) in out.iter_mut().enumerate() {
            row.fill(fl.bias[co]);
            for (ci, x) in input.iter().enumerate() {
                let w_base = (co * spec.c_in + ci) * spec.kernel;
                for j in 0..spec.kernel {
                    let w = fl.weights[w_base + j];
                    if w == 0.0 {
                        continue;
                    }
                    let offset = j as isize * spec.dilation as isize - spec.pad as isize;
                    let t_lo = if offset < 0 {
                        ((-offset) as usize).div_ceil(spec.stride)
                    } else {
                        0
                    };
                    let t_hi = {
                        let max_pos = l_in as isize - 1 - offset;
                        if max_pos < 0 {
                            0
                        } else {
                            (max_pos as usize / spec.stride + 1).min(l_out)
                        }
                    };
                    let x_start = (t_lo as isize * spec.stride as isize + offset) as usize;
                    if spec.stride == 1 {
                        let xs = &x[x_start..x_start + (t_hi - t_lo)];
                        for (o, &xv) in row[t_lo..t_hi].iter_mut().zip(xs) {
                            *o += w * xv;
                        }
                    } else {
                        let xs = x[x_start..].iter().step_by(spec.stride);
                        for (o, &xv) in row[t_lo..t_hi].iter_mut().zip(xs) {
                            *o += w * xv;
                        }
                    }
                }
            }
            if spec.relu {
                for v in row.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
        out
    }

    /// Full forward pass with range collection.
    pub fn forward_stats(&self, window: &SampleWindow) -> ForwardStats {
        let normalized = super::tcn::normalize_window(window);
        let mut x: Vec<Vec<f64>> = normalized.to_vec();
        let mut tensor_ranges = Vec::with_capacity(10);
        tensor_ranges.push(min_max(x.iter().flatten().copied()));
        for i in 0..self.layers.len() {
            x = self.conv(&x, i);
            tensor_ranges.push(min_max(x.iter().flatten().copied()));
        }
        let pooled: Vec<f64> = x
            .iter()
            .map(|row| row.iter().sum::<f64>() / row.len() as f64)
            .collect();
        let raw_bpm = pooled
            .iter()
            .zip(&self.head_weights)
            .map(|(p, w)| p * w)
            .sum::<f64>()
            + self.head_bias_bpm;
        ForwardStats {
            tensor_ranges,
            pooled,
            raw_bpm,
        }
    }

    /// Float estimate for a window, clamped like the int8 path.
    pub fn infer(&self, window: &SampleWindow) -> Result<f64, PredictError> {
        if window.ppg().len() != self.arch.input_len {
            return Err(PredictError::ShapeMismatch("window length".into()));
        }
        Ok(clamp_bpm(self.forward_stats(window).raw_bpm))
    }
}
