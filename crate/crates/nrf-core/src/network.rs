//! The complex-valued coordinate network.
//!
//! A normalized 2D coordinate is positionally encoded into sinusoids at
//! dyadic frequencies, fed through a sin-activated MLP with one mid-network
//! skip concatenation of the encoded input, and the two output channels are
//! read as the real and imaginary parts of the field value. Gradients are
//! hand-derived for exactly this architecture family; there is no generic
//! autodiff here.
//!
//! Batches run as dense matrix products (one row per point) so training is
//! GEMM-bound rather than call-bound.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{NrfError, Result};
use crate::fastmath::sincos_in_place;
use crate::rng::derive_rng;

/// Positional-encoding order. `L` dyadic frequency levels per coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeConfig {
    pub l_order: usize,
}

impl Default for PeConfig {
    fn default() -> Self {
        PeConfig { l_order: 20 }
    }
}

impl PeConfig {
    pub fn new(l_order: usize) -> Self {
        PeConfig { l_order }
    }

    /// Network input length: the raw pair plus `2L` sinusoids per coordinate.
    pub fn encoded_len(&self) -> usize {
        2 + 4 * self.l_order
    }
}

/// Encodes a normalized coordinate pair as
/// `[v1, v2, PE(v1), PE(v2)]` with
/// `PE(u) = [cos(2^0 pi u), sin(2^0 pi u), ..., cos(2^(L-1) pi u), sin(2^(L-1) pi u)]`.
pub fn encode(v: [f64; 2], cfg: &PeConfig) -> Vec<f64> {
    let mut out = vec![0.0; cfg.encoded_len()];
    encode_into(v, cfg, &mut out);
    out
}

pub fn encode_into(v: [f64; 2], cfg: &PeConfig, out: &mut [f64]) {
    debug_assert_eq!(out.len(), cfg.encoded_len());
    out[0] = v[0];
    out[1] = v[1];
    let l = cfg.l_order;
    for (c, &u) in v.iter().enumerate() {
        let base = 2 + c * 2 * l;
        let mut freq = std::f64::consts::PI;
        for level in 0..l {
            let (s, co) = (freq * u).sin_cos();
            out[base + 2 * level] = co;
            out[base + 2 * level + 1] = s;
            freq *= 2.0;
        }
    }
}

/// One dense layer, weights row-major `[rows x cols]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn uniform_init(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseLayer {
        // +-sqrt(6/fan_in) keeps sin pre-activations away from saturation
        let bound = (6.0 / cols as f64).sqrt();
        let weights = (0..rows * cols).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound).collect();
        DenseLayer { rows, cols, weights, bias: vec![0.0; rows] }
    }
}

/// All parameters of the coordinate network.
///
/// `layers` chain from the encoded input down to the 2-channel output; sin
/// activations apply to every layer except the last. When `skip_at` is set,
/// that layer's input is the encoded input concatenated with the previous
/// activation.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
    pub skip_at: Option<usize>,
    pub l_order: usize,
}

impl MlpParams {
    /// The standard architecture: hidden width 256, four sin layers before
    /// the skip concatenation, three after it, and the linear 2-channel
    /// head. For the default `L = 20` the input is 82-dimensional and the
    /// concatenated input 338-dimensional.
    pub fn standard(pe: &PeConfig, seed: u64) -> MlpParams {
        Self::with_shape(pe, 256, 4, 3, seed)
    }

    /// Small variant with the same topology, for gradient checks and tests.
    pub fn toy(pe: &PeConfig, hidden: usize, seed: u64) -> MlpParams {
        Self::with_shape(pe, hidden, 2, 2, seed)
    }

    /// `pre` sin layers, the skip concatenation, `post - 1` sin layers and
    /// the linear 2-channel head.
    pub fn with_shape(pe: &PeConfig, hidden: usize, pre: usize, post: usize, seed: u64) -> MlpParams {
        assert!(pre >= 1 && post >= 1);
        let d_in = pe.encoded_len();
        let mut rng = derive_rng(seed, "init", 0);
        let mut layers = Vec::new();
        layers.push(DenseLayer::uniform_init(hidden, d_in, &mut rng));
        for _ in 1..pre {
            layers.push(DenseLayer::uniform_init(hidden, hidden, &mut rng));
        }
        layers.push(DenseLayer::uniform_init(hidden, d_in + hidden, &mut rng));
        for _ in 1..post {
            layers.push(DenseLayer::uniform_init(hidden, hidden, &mut rng));
        }
        layers.push(DenseLayer::uniform_init(2, hidden, &mut rng));
        MlpParams { layers, skip_at: Some(pre), l_order: pe.l_order }
    }

    /// Minimal stack without a skip connection, e.g. `dims = [2, 1, 2]`.
    pub fn chain(dims: &[usize], l_order: usize, seed: u64) -> MlpParams {
        assert!(dims.len() >= 2);
        let mut rng = derive_rng(seed, "init", 0);
        let layers = dims
            .windows(2)
            .map(|w| DenseLayer::uniform_init(w[1], w[0], &mut rng))
            .collect();
        MlpParams { layers, skip_at: None, l_order }
    }

    pub fn pe_config(&self) -> PeConfig {
        PeConfig { l_order: self.l_order }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checks the dimension chain, the skip placement and finiteness.
    pub fn validate(&self) -> Result<()> {
        let d_in = self.pe_config().encoded_len();
        if self.layers.is_empty() {
            return Err(NrfError::config("network has no layers"));
        }
        let mut prev = d_in;
        for (i, layer) in self.layers.iter().enumerate() {
            let expect = if self.skip_at == Some(i) && i > 0 { prev + d_in } else { prev };
            if layer.cols != expect {
                return Err(NrfError::config(format!(
                    "layer {i}: input dim {} does not chain (expected {expect})",
                    layer.cols
                )));
            }
            if layer.weights.len() != layer.rows * layer.cols || layer.bias.len() != layer.rows {
                return Err(NrfError::config(format!("layer {i}: malformed parameter buffers")));
            }
            if layer.weights.iter().chain(&layer.bias).any(|x| !x.is_finite()) {
                return Err(NrfError::config(format!("layer {i}: non-finite parameters")));
            }
            prev = layer.rows;
        }
        if prev != 2 {
            return Err(NrfError::config(format!("final layer must have 2 outputs, has {prev}")));
        }
        Ok(())
    }
}

/// Gradient with the same shapes as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ParamGrad {
    pub fn zeros_like(params: &MlpParams) -> ParamGrad {
        ParamGrad {
            layers: params
                .layers
                .iter()
                .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]))
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrad) {
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (a, b) in dst.0.iter_mut().zip(&src.0) {
                *a += b;
            }
            for (a, b) in dst.1.iter_mut().zip(&src.1) {
                *a += b;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in self.layers.iter_mut() {
            for a in l.0.iter_mut() {
                *a *= factor;
            }
            for a in l.1.iter_mut() {
                *a *= factor;
            }
        }
    }

    pub fn norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.0.iter().chain(&l.1))
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

/// Encoded point batch, row-major `rows x dim`.
#[derive(Debug, Clone)]
pub struct EncodedBatch {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl EncodedBatch {
    pub fn from_points(points: &[[f64; 2]], cfg: &PeConfig) -> EncodedBatch {
        let dim = cfg.encoded_len();
        let mut data = vec![0.0; points.len() * dim];
        for (i, p) in points.iter().enumerate() {
            encode_into(*p, cfg, &mut data[i * dim..(i + 1) * dim]);
        }
        EncodedBatch { rows: points.len(), dim, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Copies selected rows into a new batch.
    pub fn gather(&self, rows: &[usize]) -> EncodedBatch {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        EncodedBatch { rows: rows.len(), dim: self.dim, data }
    }
}

/// Reusable buffers for batched passes over up to `cap_rows` points.
///
/// Allocated once and reused across chunks and steps; fresh allocation per
/// chunk page-faults hundreds of megabytes per training step.
pub struct BatchWorkspace {
    cap_rows: usize,
    /// Post-activation (sin) per hidden layer, raw output for the last.
    acts: Vec<Vec<f64>>,
    /// cos of the pre-activation per hidden layer.
    coss: Vec<Vec<f64>>,
    /// Concatenated `[encoded | previous]` input of the skip layer.
    concat: Vec<f64>,
    g: Vec<f64>,
    gin: Vec<f64>,
    /// Rows of the current chunk (set by `forward_into`).
    rows: usize,
}

impl BatchWorkspace {
    pub fn new(params: &MlpParams, cap_rows: usize) -> BatchWorkspace {
        let acts = params.layers.iter().map(|l| vec![0.0; cap_rows * l.rows]).collect();
        let coss = params
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| if i + 1 < params.layers.len() { vec![0.0; cap_rows * l.rows] } else { Vec::new() })
            .collect();
        let max_cols = params.layers.iter().map(|l| l.cols).max().unwrap_or(0);
        let max_rows = params.layers.iter().map(|l| l.rows).max().unwrap_or(0);
        BatchWorkspace {
            cap_rows,
            acts,
            coss,
            concat: vec![0.0; cap_rows * max_cols],
            g: vec![0.0; cap_rows * max_rows],
            gin: vec![0.0; cap_rows * max_cols],
            rows: 0,
        }
    }

    pub fn outputs(&self, out: &mut Vec<Complex64>) {
        let last = &self.acts[self.acts.len() - 1];
        out.clear();
        out.extend((0..self.rows).map(|r| Complex64::new(last[2 * r], last[2 * r + 1])));
    }
}

fn layer_input<'a>(
    params: &MlpParams,
    enc_data: &'a [f64],
    enc_dim: usize,
    ws_acts: &'a [Vec<f64>],
    ws_concat: &'a [f64],
    l: usize,
) -> (&'a [f64], usize) {
    if l == 0 {
        (enc_data, enc_dim)
    } else if params.skip_at == Some(l) {
        (ws_concat, enc_dim + params.layers[l - 1].rows)
    } else {
        (&ws_acts[l - 1], params.layers[l - 1].rows)
    }
}

/// Forward pass over `m` encoded rows into the workspace.
pub fn forward_into(params: &MlpParams, enc_data: &[f64], m: usize, enc_dim: usize, ws: &mut BatchWorkspace) {
    assert!(m <= ws.cap_rows, "chunk of {m} rows exceeds workspace capacity {}", ws.cap_rows);
    assert_eq!(enc_data.len(), m * enc_dim);
    ws.rows = m;
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        if params.skip_at == Some(l) && l > 0 {
            let pdim = params.layers[l - 1].rows;
            let cdim = enc_dim + pdim;
            let prev = &ws.acts[l - 1];
            let concat = &mut ws.concat;
            for r in 0..m {
                concat[r * cdim..r * cdim + enc_dim]
                    .copy_from_slice(&enc_data[r * enc_dim..(r + 1) * enc_dim]);
                concat[r * cdim + enc_dim..(r + 1) * cdim]
                    .copy_from_slice(&prev[r * pdim..(r + 1) * pdim]);
            }
        }
        let (input, idim) = layer_input(params, enc_data, enc_dim, &ws.acts, &ws.concat, l);
        debug_assert_eq!(idim, layer.cols);
        let input_ptr = input.as_ptr();
        let z = &mut ws.acts[l][..m * layer.rows];
        unsafe {
            matrixmultiply::dgemm(
                m,
                layer.cols,
                layer.rows,
                1.0,
                input_ptr,
                idim as isize,
                1,
                layer.weights.as_ptr(),
                1,
                layer.cols as isize,
                0.0,
                z.as_mut_ptr(),
                layer.rows as isize,
                1,
            );
        }
        for r in 0..m {
            let row = &mut z[r * layer.rows..(r + 1) * layer.rows];
            for (x, b) in row.iter_mut().zip(&layer.bias) {
                *x += b;
            }
        }
        if l < last {
            let cos = &mut ws.coss[l][..m * layer.rows];
            sincos_in_place(z, cos);
        }
    }
}

/// Reverse pass for the pairing functional
/// `L = sum_i Re(conj(cot_i) chi(v_i))`, accumulating into `grad`.
/// Uses the activations left in the workspace by [`forward_into`].
pub fn backward_accum(
    params: &MlpParams,
    enc_data: &[f64],
    enc_dim: usize,
    ws: &mut BatchWorkspace,
    cotangents: &[Complex64],
    grad: &mut ParamGrad,
) {
    let m = ws.rows;
    assert_eq!(cotangents.len(), m);
    // gradient flowing into the current layer's outputs, row-major m x rows
    for (r, c) in cotangents.iter().enumerate() {
        ws.g[2 * r] = c.re;
        ws.g[2 * r + 1] = c.im;
    }
    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let rows = layer.rows;
        let (input, idim) = layer_input(params, enc_data, enc_dim, &ws.acts, &ws.concat, l);

        // dW += G^T . input, db += column sums of G
        let (dw, db) = &mut grad.layers[l];
        unsafe {
            matrixmultiply::dgemm(
                rows,
                m,
                layer.cols,
                1.0,
                ws.g.as_ptr(),
                1,
                rows as isize,
                input.as_ptr(),
                idim as isize,
                1,
                1.0,
                dw.as_mut_ptr(),
                layer.cols as isize,
                1,
            );
        }
        for r in 0..m {
            for (j, b) in db.iter_mut().enumerate() {
                *b += ws.g[r * rows + j];
            }
        }
        if l == 0 {
            break;
        }

        // g_in = G . W, then peel off the skip block and the sin derivative
        let gin = &mut ws.gin[..m * layer.cols];
        unsafe {
            matrixmultiply::dgemm(
                m,
                rows,
                layer.cols,
                1.0,
                ws.g.as_ptr(),
                rows as isize,
                1,
                layer.weights.as_ptr(),
                layer.cols as isize,
                1,
                0.0,
                gin.as_mut_ptr(),
                layer.cols as isize,
                1,
            );
        }
        let pdim = params.layers[l - 1].rows;
        let g = &mut ws.g;
        if params.skip_at == Some(l) {
            // the encoded-input block carries no trainable upstream state
            for r in 0..m {
                let src = r * layer.cols + enc_dim;
                for j in 0..pdim {
                    g[r * pdim + j] = gin[src + j];
                }
            }
        } else {
            g[..m * pdim].copy_from_slice(&gin[..m * pdim]);
        }
        let cos = &ws.coss[l - 1][..m * pdim];
        for (gp, c) in g[..m * pdim].iter_mut().zip(cos) {
            *gp *= c;
        }
    }
}

/// Convenience cache-owning forward pass (tests and one-shot callers).
pub fn forward_batch(params: &MlpParams, enc: &EncodedBatch) -> (Vec<Complex64>, BatchWorkspace) {
    let mut ws = BatchWorkspace::new(params, enc.rows.max(1));
    forward_into(params, &enc.data, enc.rows, enc.dim, &mut ws);
    let mut out = Vec::new();
    ws.outputs(&mut out);
    (out, ws)
}

/// Forward pass without retaining the workspace (inference path).
pub fn forward_batch_outputs(params: &MlpParams, enc: &EncodedBatch) -> Vec<Complex64> {
    forward_batch(params, enc).0
}

/// Single-point evaluation; identical arithmetic to a batch of one.
pub fn forward(params: &MlpParams, cfg: &PeConfig, v: [f64; 2]) -> Complex64 {
    let enc = EncodedBatch::from_points(&[v], cfg);
    forward_batch_outputs(params, &enc)[0]
}

/// One-shot reverse pass (tests and spec-level callers).
pub fn backward_batch(
    params: &MlpParams,
    enc: &EncodedBatch,
    ws: &mut BatchWorkspace,
    cotangents: &[Complex64],
) -> ParamGrad {
    let mut grad = ParamGrad::zeros_like(params);
    backward_accum(params, &enc.data, enc.dim, ws, cotangents, &mut grad);
    grad
}

/// Spec-level op: encode, forward, backward in one call.
pub fn backward(
    params: &MlpParams,
    cfg: &PeConfig,
    batch: &[[f64; 2]],
    cotangents: &[Complex64],
) -> Result<ParamGrad> {
    if batch.len() != cotangents.len() {
        return Err(NrfError::config(format!(
            "batch length {} does not match cotangent length {}",
            batch.len(),
            cotangents.len()
        )));
    }
    params.validate()?;
    let enc = EncodedBatch::from_points(batch, cfg);
    let (_, mut ws) = forward_batch(params, &enc);
    Ok(backward_batch(params, &enc, &mut ws, cotangents))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_zero_and_lengths() {
        let cfg = PeConfig::new(20);
        let e = encode([0.0, 0.0], &cfg);
        assert_eq!(e.len(), 82);
        assert_eq!(e[0], 0.0);
        assert_eq!(e[1], 0.0);
        for l in 0..20 {
            assert_eq!(e[2 + 2 * l], 1.0); // cos
            assert_eq!(e[2 + 2 * l + 1], 0.0); // sin
        }
    }

    #[test]
    fn encode_half_at_l2() {
        let cfg = PeConfig::new(2);
        let e = encode([0.5, 0.5], &cfg);
        // per coordinate: [cos(pi/2), sin(pi/2), cos(pi), sin(pi)]
        for base in [2usize, 6] {
            assert!(e[base].abs() < 1e-15);
            assert!((e[base + 1] - 1.0).abs() < 1e-15);
            assert!((e[base + 2] + 1.0).abs() < 1e-15);
            assert!(e[base + 3].abs() < 1e-14);
        }
    }

    #[test]
    fn encode_pairs_on_unit_circle() {
        let cfg = PeConfig::new(20);
        for &u in &[0.1234, 0.777, 0.999, 0.31] {
            let e = encode([u, 1.0 - u], &cfg);
            for l in 0..2 * cfg.l_order {
                let c = e[2 + 2 * l];
                let s = e[2 + 2 * l + 1];
                assert!((c * c + s * s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        let cfg = PeConfig::new(3);
        let mut p = MlpParams::toy(&cfg, 8, 1);
        for l in p.layers.iter_mut() {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
            l.bias.iter_mut().for_each(|b| *b = 0.0);
        }
        let out = forward(&p, &cfg, [0.3, 0.8]);
        assert_eq!(out, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hand_computed_micro_chain() {
        // dims 2 -> 1 -> 2 with L = 0: chi = W2 sin(W1 v + b1) + b2
        let cfg = PeConfig::new(0);
        let mut p = MlpParams::chain(&[2, 1, 2], 0, 0);
        p.layers[0].weights = vec![0.3, -0.2];
        p.layers[0].bias = vec![0.1];
        p.layers[1].weights = vec![1.5, -0.7];
        p.layers[1].bias = vec![0.05, 0.02];
        p.validate().unwrap();
        let out = forward(&p, &cfg, [0.5, 0.25]);
        // z = 0.3*0.5 - 0.2*0.25 + 0.1 = 0.2; s = sin(0.2)
        let s = 0.2f64.sin();
        assert!((out.re - (0.05 + 1.5 * s)).abs() < 1e-13);
        assert!((out.im - (0.02 - 0.7 * s)).abs() < 1e-13);
    }

    #[test]
    fn standard_shape_matches_the_table() {
        let cfg = PeConfig::default();
        let p = MlpParams::standard(&cfg, 0);
        p.validate().unwrap();
        let dims: Vec<(usize, usize)> = p.layers.iter().map(|l| (l.cols, l.rows)).collect();
        assert_eq!(
            dims,
            vec![
                (82, 256),
                (256, 256),
                (256, 256),
                (256, 256),
                (338, 256),
                (256, 256),
                (256, 256),
                (256, 2)
            ]
        );
        assert_eq!(p.skip_at, Some(4));
    }

    #[test]
    fn batch_equals_single_calls_bitwise() {
        let cfg = PeConfig::new(4);
        let p = MlpParams::toy(&cfg, 16, 3);
        let pts: Vec<[f64; 2]> = (0..37)
            .map(|i| [0.01 + 0.021 * i as f64 % 1.0, (0.97 - 0.017 * i as f64).abs() % 1.0])
            .collect();
        let enc = EncodedBatch::from_points(&pts, &cfg);
        let batch = forward_batch_outputs(&p, &enc);
        for (i, &pt) in pts.iter().enumerate() {
            let single = forward(&p, &cfg, pt);
            assert_eq!(batch[i], single, "point {i}");
        }
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let cfg = PeConfig::new(6);
        let p = MlpParams::toy(&cfg, 24, 9);
        let pts: Vec<[f64; 2]> = (0..64).map(|i| [i as f64 / 64.0, (i * 7 % 64) as f64 / 64.0]).collect();
        let enc = EncodedBatch::from_points(&pts, &cfg);
        let a = forward_batch_outputs(&p, &enc);
        let b = forward_batch_outputs(&p, &enc);
        assert_eq!(a, b);
    }

    #[test]
    fn zero_cotangents_give_zero_gradient() {
        let cfg = PeConfig::new(2);
        let p = MlpParams::toy(&cfg, 8, 5);
        let pts = [[0.2, 0.4], [0.6, 0.1]];
        let g = backward(&p, &cfg, &pts, &[Complex64::new(0.0, 0.0); 2]).unwrap();
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn gradient_additive_over_batches() {
        let cfg = PeConfig::new(2);
        let p = MlpParams::toy(&cfg, 8, 5);
        let a = [[0.2, 0.4], [0.6, 0.1]];
        let b = [[0.9, 0.3]];
        let ca = [Complex64::new(1.0, -0.5), Complex64::new(0.2, 0.8)];
        let cb = [Complex64::new(-0.3, 0.1)];
        let mut joint_pts = a.to_vec();
        joint_pts.extend_from_slice(&b);
        let mut joint_cots = ca.to_vec();
        joint_cots.extend_from_slice(&cb);
        let g_joint = backward(&p, &cfg, &joint_pts, &joint_cots).unwrap();
        let mut g_sum = backward(&p, &cfg, &a, &ca).unwrap();
        g_sum.add_assign(&backward(&p, &cfg, &b, &cb).unwrap());
        for (x, y) in g_joint.layers.iter().zip(&g_sum.layers) {
            for (u, v) in x.0.iter().zip(&y.0) {
                assert!((u - v).abs() < 1e-12);
            }
            for (u, v) in x.1.iter().zip(&y.1) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    /// Central finite differences of the pairing functional against the
    /// hand-derived reverse pass.
    #[test]
    fn gradient_matches_finite_differences() {
        use rand::Rng;
        for seed in 0..5u64 {
            let cfg = PeConfig::new(2);
            let p = MlpParams::toy(&cfg, 8, seed);
            let mut rng = derive_rng(seed, "fd-test", 1);
            let pts: Vec<[f64; 2]> = (0..6).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let cots: Vec<Complex64> = (0..6)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let pairing = |params: &MlpParams| -> f64 {
                let enc = EncodedBatch::from_points(&pts, &cfg);
                let out = forward_batch_outputs(params, &enc);
                out.iter().zip(&cots).map(|(o, c)| (c.conj() * o).re).sum()
            };
            let grad = backward(&p, &cfg, &pts, &cots).unwrap();
            let h = 1e-5;
            for _ in 0..20 {
                let l = rng.gen_range(0..p.layers.len());
                let wlen = p.layers[l].weights.len();
                let idx = rng.gen_range(0..wlen + p.layers[l].bias.len());
                let mut plus = p.clone();
                let mut minus = p.clone();
                let analytic = if idx < wlen {
                    plus.layers[l].weights[idx] += h;
                    minus.layers[l].weights[idx] -= h;
                    grad.layers[l].0[idx]
                } else {
                    plus.layers[l].bias[idx - wlen] += h;
                    minus.layers[l].bias[idx - wlen] -= h;
                    grad.layers[l].1[idx - wlen]
                };
                let fd = (pairing(&plus) - pairing(&minus)) / (2.0 * h);
                let denom = analytic.abs().max(fd.abs()).max(1e-8);
                assert!(
                    (fd - analytic).abs() / denom < 1e-4,
                    "seed {seed} layer {l} idx {idx}: fd {fd} vs analytic {analytic}"
                );
            }
        }
    }

    #[test]
    fn validate_catches_dimension_breaks() {
        let cfg = PeConfig::new(2);
        let mut p = MlpParams::toy(&cfg, 8, 0);
        p.layers[1].cols = 9;
        assert!(p.validate().is_err());
        let mut q = MlpParams::toy(&cfg, 8, 0);
        q.layers[0].weights[3] = f64::NAN;
        assert!(q.validate().is_err());
    }
}
