//! Adam and the grouped rendering-loss engine.
//!
//! A "group" is one rendered measurement: a weighted sum of network outputs
//! over a contiguous row range of an encoded batch (a ray's quadrature
//! samples, or a single k-space point for the interpolation baseline). The
//! loss is the mean squared complex residual over the selected groups.
//!
//! Parallel gradient accumulation runs over `GRAD_SLOTS` fixed logical
//! slots with strided chunk assignment and an ordered final fold, so the
//! result is bitwise reproducible for any worker count. Each slot owns its
//! buffers for the whole run; nothing is allocated in the step loop.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::network::{backward_accum, forward_into, BatchWorkspace, EncodedBatch, MlpParams, ParamGrad};

const GRAD_SLOTS: usize = 4;
const CHUNK_ROWS: usize = 2048;

/// Group structure over an encoded batch: group `g` spans rows
/// `offsets[g]..offsets[g+1]`, each row weighted by its coefficient.
#[derive(Debug, Clone)]
pub struct RenderGroups {
    pub offsets: Vec<usize>,
    pub coeffs: Vec<f64>,
}

impl RenderGroups {
    pub fn n_groups(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Uniform-coefficient groups from per-group row counts.
    pub fn from_counts(counts: &[usize], coeff: f64) -> RenderGroups {
        let mut offsets = Vec::with_capacity(counts.len() + 1);
        offsets.push(0);
        let mut total = 0;
        for &c in counts {
            total += c;
            offsets.push(total);
        }
        RenderGroups { offsets, coeffs: vec![coeff; total] }
    }

    /// One group per row, unit coefficients (plain regression targets).
    pub fn singleton(rows: usize) -> RenderGroups {
        RenderGroups { offsets: (0..=rows).collect(), coeffs: vec![1.0; rows] }
    }
}

/// Chunks of whole groups, each covering at most ~`CHUNK_ROWS` rows.
fn chunk_ranges(groups: &RenderGroups, selected: &[usize]) -> Vec<(usize, usize)> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut rows = 0;
    for (i, &g) in selected.iter().enumerate() {
        rows += groups.offsets[g + 1] - groups.offsets[g];
        if rows >= CHUNK_ROWS {
            chunks.push((start, i + 1));
            start = i + 1;
            rows = 0;
        }
    }
    if start < selected.len() {
        chunks.push((start, selected.len()));
    }
    chunks
}

struct Slot {
    index: usize,
    ws: BatchWorkspace,
    grad: ParamGrad,
    encbuf: Vec<f64>,
    cots: Vec<Complex64>,
    outputs: Vec<Complex64>,
    loss: f64,
}

/// Persistent engine for repeated loss/gradient evaluations against one
/// parameter shape.
pub struct GradEngine {
    slots: Vec<Slot>,
    total: ParamGrad,
}

impl GradEngine {
    pub fn new(params: &MlpParams, enc_dim: usize, groups: &RenderGroups) -> GradEngine {
        let max_group_rows = (0..groups.n_groups())
            .map(|g| groups.offsets[g + 1] - groups.offsets[g])
            .max()
            .unwrap_or(0);
        // a chunk holds whole groups and closes once it reaches CHUNK_ROWS,
        // so it can exceed it by one group's rows
        let cap = CHUNK_ROWS + max_group_rows;
        let slots = (0..GRAD_SLOTS)
            .map(|index| Slot {
                index,
                ws: BatchWorkspace::new(params, cap),
                grad: ParamGrad::zeros_like(params),
                encbuf: vec![0.0; cap * enc_dim],
                cots: vec![Complex64::new(0.0, 0.0); cap],
                outputs: Vec::with_capacity(cap),
                loss: 0.0,
            })
            .collect();
        GradEngine { slots, total: ParamGrad::zeros_like(params) }
    }

    /// Mean squared residual over the selected groups and its gradient.
    pub fn loss_and_grad(
        &mut self,
        params: &MlpParams,
        enc: &EncodedBatch,
        groups: &RenderGroups,
        targets: &[Complex64],
        selected: &[usize],
    ) -> (f64, &ParamGrad) {
        assert_eq!(targets.len(), groups.n_groups());
        assert_eq!(*groups.offsets.last().unwrap(), enc.rows);
        self.total.scale(0.0);
        if selected.is_empty() {
            return (0.0, &self.total);
        }
        crate::threads::ensure_pool();
        let inv_m = 1.0 / selected.len() as f64;
        let chunks = chunk_ranges(groups, selected);
        self.slots.par_iter_mut().for_each(|slot| {
            slot.loss = 0.0;
            slot.grad.scale(0.0);
            let mut ci = slot.index;
            while ci < chunks.len() {
                let (lo, hi) = chunks[ci];
                slot.loss += process_chunk(params, enc, groups, targets, &selected[lo..hi], inv_m, slot);
                ci += GRAD_SLOTS;
            }
        });
        let mut loss = 0.0;
        for slot in &self.slots {
            loss += slot.loss;
            self.total.add_assign(&slot.grad);
        }
        (loss, &self.total)
    }
}

fn process_chunk(
    params: &MlpParams,
    enc: &EncodedBatch,
    groups: &RenderGroups,
    targets: &[Complex64],
    selected: &[usize],
    inv_m: f64,
    slot: &mut Slot,
) -> f64 {
    // gather the chunk's rows
    let dim = enc.dim;
    let mut m = 0;
    for &g in selected {
        for r in groups.offsets[g]..groups.offsets[g + 1] {
            slot.encbuf[m * dim..(m + 1) * dim].copy_from_slice(enc.row(r));
            m += 1;
        }
    }
    if m == 0 {
        // all-empty groups still charge their targets to the loss
        return selected.iter().map(|&g| targets[g].norm_sqr() * inv_m).sum();
    }
    forward_into(params, &slot.encbuf[..m * dim], m, dim, &mut slot.ws);
    slot.ws.outputs(&mut slot.outputs);

    let mut loss = 0.0;
    let mut cursor = 0;
    for &g in selected {
        let count = groups.offsets[g + 1] - groups.offsets[g];
        let mut render = Complex64::new(0.0, 0.0);
        for j in 0..count {
            render += groups.coeffs[groups.offsets[g] + j] * slot.outputs[cursor + j];
        }
        let e = targets[g] - render;
        loss += e.norm_sqr() * inv_m;
        let base = -2.0 * inv_m;
        for j in 0..count {
            slot.cots[cursor + j] = base * groups.coeffs[groups.offsets[g] + j] * e;
        }
        cursor += count;
    }
    backward_accum(params, &slot.encbuf[..m * dim], dim, &mut slot.ws, &slot.cots[..m], &mut slot.grad);
    loss
}

/// One-shot wrapper around [`GradEngine`].
pub fn grouped_loss_and_grad(
    params: &MlpParams,
    enc: &EncodedBatch,
    groups: &RenderGroups,
    targets: &[Complex64],
    selected: &[usize],
) -> (f64, ParamGrad) {
    let mut engine = GradEngine::new(params, enc.dim, groups);
    let (loss, grad) = engine.loss_and_grad(params, enc, groups, targets, selected);
    (loss, grad.clone())
}

/// Renders every group (no gradient).
pub fn render_all_groups(
    params: &MlpParams,
    enc: &EncodedBatch,
    groups: &RenderGroups,
) -> Vec<Complex64> {
    crate::threads::ensure_pool();
    let n = groups.n_groups();
    let all: Vec<usize> = (0..n).collect();
    let chunks = chunk_ranges(groups, &all);
    let parts: Vec<(usize, Vec<Complex64>)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let rows: Vec<usize> = (lo..hi)
                .flat_map(|g| groups.offsets[g]..groups.offsets[g + 1])
                .collect();
            let sub = enc.gather(&rows);
            let mut ws = BatchWorkspace::new(params, sub.rows.max(1));
            forward_into(params, &sub.data, sub.rows, sub.dim, &mut ws);
            let mut outputs = Vec::new();
            ws.outputs(&mut outputs);
            let mut renders = Vec::with_capacity(hi - lo);
            let mut cursor = 0;
            for g in lo..hi {
                let count = groups.offsets[g + 1] - groups.offsets[g];
                let mut render = Complex64::new(0.0, 0.0);
                for j in 0..count {
                    render += groups.coeffs[groups.offsets[g] + j] * outputs[cursor + j];
                }
                renders.push(render);
                cursor += count;
            }
            (lo, renders)
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (lo, renders) in parts {
        out[lo..lo + renders.len()].copy_from_slice(&renders);
    }
    out
}

/// Adam with bias-corrected moments.
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: ParamGrad,
    v: ParamGrad,
    t: u32,
}

impl Adam {
    pub fn new(params: &MlpParams, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Adam {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            m: ParamGrad::zeros_like(params),
            v: ParamGrad::zeros_like(params),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut MlpParams, grad: &ParamGrad) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (li, layer) in params.layers.iter_mut().enumerate() {
            let (gw, gb) = (&grad.layers[li].0, &grad.layers[li].1);
            let m = &mut self.m.layers[li];
            let v = &mut self.v.layers[li];
            update_slice(&mut layer.weights, gw, &mut m.0, &mut v.0, self.lr, self.beta1, self.beta2, self.eps, bc1, bc2);
            update_slice(&mut layer.bias, gb, &mut m.1, &mut v.1, self.lr, self.beta1, self.beta2, self.eps, bc1, bc2);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    b1: f64,
    b2: f64,
    eps: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..p.len() {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        let mhat = m[i] / bc1;
        let vhat = v[i] / bc2;
        p[i] -= lr * mhat / (vhat.sqrt() + eps);
    }
}
