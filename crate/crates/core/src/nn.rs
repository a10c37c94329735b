//! Time-conditioned MLP backbone with exact reverse-mode gradients.
//!
//! The network consumes `[x ; embed(t)]` in its first layer, applies SiLU on
//! hidden layers and identity on the output layer. Gradients are computed by
//! hand so training has no autodiff dependency; a finite-difference oracle in
//! the tests keeps the backward pass honest.

use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Shape hyperparameters of the backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub in_dim: usize,
    pub out_dim: usize,
    pub width: usize,
    pub depth: usize,
    pub t_embed_dim: usize,
}

impl MlpConfig {
    pub fn new(in_dim: usize, out_dim: usize, width: usize, depth: usize, t_embed_dim: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Shape("depth must be >= 1".into()));
        }
        if t_embed_dim % 2 != 0 {
            return Err(Error::Shape("t_embed_dim must be even".into()));
        }
        if in_dim == 0 || out_dim == 0 || width == 0 {
            return Err(Error::Shape("in_dim, out_dim and width must be positive".into()));
        }
        Ok(Self { in_dim, out_dim, width, depth, t_embed_dim })
    }

    /// Layer input/output sizes: first layer sees data plus time embedding.
    fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.depth);
        let mut cur = self.in_dim + self.t_embed_dim;
        for l in 0..self.depth {
            let out = if l + 1 == self.depth { self.out_dim } else { self.width };
            dims.push((cur, out));
            cur = out;
        }
        dims
    }
}

/// One dense layer: row-vector convention, `y = x W + b` with `W: in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// All parameters of the backbone.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    config: MlpConfig,
    pub layers: Vec<Dense>,
}

/// Gradients shaped exactly like [`MlpParams`].
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<Dense>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        let layers = params
            .layers
            .iter()
            .map(|l| Dense { w: Array2::zeros(l.w.dim()), b: Array1::zeros(l.b.len()) })
            .collect();
        Self { layers }
    }

    /// Accumulate `other` scaled by `c`.
    pub fn add_scaled(&mut self, other: &MlpGrads, c: f64) {
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            a.w.scaled_add(c, &b.w);
            a.b.scaled_add(c, &b.b);
        }
    }
}

impl MlpParams {
    /// Kaiming-uniform fan-in init for weights, zero biases. Deterministic
    /// given `seed`.
    pub fn init(config: MlpConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = config
            .layer_dims()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let bound = (6.0 / fan_in as f64).sqrt();
                let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
                    rng.random_range(-bound..bound)
                });
                Dense { w, b: Array1::zeros(fan_out) }
            })
            .collect();
        Self { config, layers }
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    /// Total scalar parameter count, `sum(rows*cols + rows_out)`.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flatten parameters into one vector (weights row-major, then bias, per
    /// layer in order). Matches [`MlpParams::from_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out
    }

    pub fn from_flat(config: MlpConfig, flat: &[f64]) -> Result<Self> {
        let mut layers = Vec::with_capacity(config.depth);
        let mut off = 0;
        for (fan_in, fan_out) in config.layer_dims() {
            let wlen = fan_in * fan_out;
            if off + wlen + fan_out > flat.len() {
                return Err(Error::Shape("flat parameter blob too short".into()));
            }
            let w = Array2::from_shape_vec((fan_in, fan_out), flat[off..off + wlen].to_vec())
                .expect("shape matches length");
            off += wlen;
            let b = Array1::from_vec(flat[off..off + fan_out].to_vec());
            off += fan_out;
            layers.push(Dense { w, b });
        }
        if off != flat.len() {
            return Err(Error::Shape("flat parameter blob too long".into()));
        }
        Ok(Self { config, layers })
    }
}

/// Sinusoidal embedding of `t` into `dim` entries: interleaved
/// `sin(f_j t), cos(f_j t)` pairs at geometrically spaced frequencies from
/// `EMBED_F_MIN` up to `EMBED_F_MAX`.
pub const EMBED_F_MIN: f64 = 1.0;
pub const EMBED_F_MAX: f64 = 1000.0;

pub fn time_embedding(t: f64, dim: usize) -> Result<Array1<f64>> {
    if dim == 0 || dim % 2 != 0 {
        return Err(Error::Shape(format!("embedding dim must be positive even, got {dim}")));
    }
    let half = dim / 2;
    let mut out = Array1::zeros(dim);
    for j in 0..half {
        let f = if half == 1 {
            EMBED_F_MIN
        } else {
            EMBED_F_MIN * (EMBED_F_MAX / EMBED_F_MIN).powf(j as f64 / (half - 1) as f64)
        };
        out[2 * j] = (f * t).sin();
        out[2 * j + 1] = (f * t).cos();
    }
    Ok(out)
}

fn silu(z: f64) -> f64 {
    z / (1.0 + (-z).exp())
}

fn silu_grad(z: f64) -> f64 {
    let s = 1.0 / (1.0 + (-z).exp());
    s * (1.0 + z * (1.0 - s))
}

/// Activations recorded during a batched forward pass.
pub struct Cache {
    /// Input to each layer (post-activation of the previous one); index 0 is
    /// the concatenated `[x ; embed(t)]` batch.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer (exclusive of the output layer).
    pre_acts: Vec<Array2<f64>>,
}

/// Forward pass over a batch with per-row times. Returns outputs and the
/// cache required for [`mlp_backward_batch`].
pub fn mlp_forward_batch(
    params: &MlpParams,
    x: ArrayView2<f64>,
    t: ArrayView1<f64>,
) -> Result<(Array2<f64>, Cache)> {
    let cfg = params.config;
    if x.ncols() != cfg.in_dim {
        return Err(Error::Shape(format!(
            "input has {} columns, expected {}",
            x.ncols(),
            cfg.in_dim
        )));
    }
    if t.len() != x.nrows() {
        return Err(Error::Shape("one time per batch row required".into()));
    }
    let mut emb = Array2::zeros((x.nrows(), cfg.t_embed_dim));
    for (i, &ti) in t.iter().enumerate() {
        emb.row_mut(i).assign(&time_embedding(ti, cfg.t_embed_dim)?);
    }
    let mut inputs = Vec::with_capacity(cfg.depth);
    let mut pre_acts = Vec::with_capacity(cfg.depth.saturating_sub(1));
    inputs.push(concatenate(Axis(1), &[x, emb.view()]).expect("row counts match"));

    for (l, layer) in params.layers.iter().enumerate() {
        let cur = inputs.last().expect("at least the concatenated input");
        if cur.ncols() != layer.w.nrows() {
            return Err(Error::Shape(format!(
                "layer {l}: input width {} vs weight rows {}",
                cur.ncols(),
                layer.w.nrows()
            )));
        }
        let mut z = cur.dot(&layer.w);
        z += &layer.b;
        if l + 1 == params.layers.len() {
            return Ok((z, Cache { inputs, pre_acts }));
        }
        let a = z.mapv(silu);
        pre_acts.push(z);
        inputs.push(a);
    }
    unreachable!("depth >= 1 guarantees the loop returns");
}

/// Single-sample forward pass.
pub fn mlp_forward(params: &MlpParams, x: ArrayView1<f64>, t: f64) -> Result<(Array1<f64>, Cache)> {
    let xb = x.insert_axis(Axis(0));
    let tb = Array1::from_vec(vec![t]);
    let (y, cache) = mlp_forward_batch(params, xb, tb.view())?;
    Ok((y.row(0).to_owned(), cache))
}

/// Exact gradients of `sum_i grad_out_i . y_i` with respect to every
/// parameter, given the cache of the matching forward pass.
pub fn mlp_backward_batch(
    params: &MlpParams,
    cache: &Cache,
    grad_out: ArrayView2<f64>,
) -> Result<MlpGrads> {
    let depth = params.layers.len();
    let last_in = &cache.inputs[depth - 1];
    if grad_out.nrows() != last_in.nrows() || grad_out.ncols() != params.config.out_dim {
        return Err(Error::Shape("grad_out shape does not match cached forward".into()));
    }
    let mut grads = MlpGrads::zeros_like(params);
    let mut delta = grad_out.to_owned();
    for l in (0..depth).rev() {
        let input = &cache.inputs[l];
        if input.nrows() != delta.nrows() {
            return Err(Error::Shape("stale cache: batch size mismatch".into()));
        }
        grads.layers[l].w = input.t().dot(&delta);
        grads.layers[l].b = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut up = delta.dot(&params.layers[l].w.t());
            up.zip_mut_with(&cache.pre_acts[l - 1], |g, &z| *g *= silu_grad(z));
            delta = up;
        }
    }
    Ok(grads)
}

/// Single-sample backward wrapper.
pub fn mlp_backward(
    params: &MlpParams,
    cache: &Cache,
    grad_out: ArrayView1<f64>,
) -> Result<MlpGrads> {
    mlp_backward_batch(params, cache, grad_out.insert_axis(Axis(0)))
}

/// AdamW hyperparameters and moment accumulators.
#[derive(Debug, Clone)]
pub struct AdamWState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub step: u64,
    m: Vec<Dense>,
    v: Vec<Dense>,
}

impl AdamWState {
    pub fn new(params: &MlpParams, weight_decay: f64) -> Self {
        let zeros = || {
            params
                .layers
                .iter()
                .map(|l| Dense { w: Array2::zeros(l.w.dim()), b: Array1::zeros(l.b.len()) })
                .collect::<Vec<_>>()
        };
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }
}

/// One AdamW update: decoupled multiplicative weight decay, then the
/// bias-corrected Adam step. Errors if any gradient entry is non-finite,
/// reporting the offending layer.
pub fn adamw_step(
    state: &mut AdamWState,
    params: &mut MlpParams,
    grads: &MlpGrads,
    lr: f64,
) -> Result<()> {
    for (l, g) in grads.layers.iter().enumerate() {
        if g.w.iter().any(|x| !x.is_finite()) || g.b.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGrad { layer: l });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let decay = 1.0 - lr * state.weight_decay;
    for (l, g) in grads.layers.iter().enumerate() {
        let m = &mut state.m[l];
        let v = &mut state.v[l];
        update_tensor(&mut params.layers[l].w, &mut m.w, &mut v.w, &g.w, state.beta1, state.beta2, state.eps, lr, decay, bc1, bc2);
        update_tensor_1d(&mut params.layers[l].b, &mut m.b, &mut v.b, &g.b, state.beta1, state.beta2, state.eps, lr, decay, bc1, bc2);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn update_tensor(
    p: &mut Array2<f64>,
    m: &mut Array2<f64>,
    v: &mut Array2<f64>,
    g: &Array2<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    decay: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let mhat = *m / bc1;
        let vhat = *v / bc2;
        *p = *p * decay - lr * mhat / (vhat.sqrt() + eps);
    });
}

#[allow(clippy::too_many_arguments)]
fn update_tensor_1d(
    p: &mut Array1<f64>,
    m: &mut Array1<f64>,
    v: &mut Array1<f64>,
    g: &Array1<f64>,
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    decay: f64,
    bc1: f64,
    bc2: f64,
) {
    ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let mhat = *m / bc1;
        let vhat = *v / bc2;
        *p = *p * decay - lr * mhat / (vhat.sqrt() + eps);
    });
}

/// Cosine learning-rate schedule without warmup:
/// `lr0 * 0.5 * (1 + cos(pi * step / total_steps))`.
pub fn cosine_lr(step: u64, total_steps: u64, lr0: f64) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::Schedule("total_steps must be positive".into()));
    }
    if step > total_steps {
        return Err(Error::Schedule(format!("step {step} exceeds total_steps {total_steps}")));
    }
    let frac = step as f64 / total_steps as f64;
    Ok(lr0 * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos()))
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    config: MlpConfig,
    config_hash: String,
    step: u64,
    param_count: usize,
}

/// Writes a checkpoint: one JSON header line, then the parameters as a flat
/// little-endian f64 blob.
pub fn save_checkpoint(
    params: &MlpParams,
    config_hash: &str,
    step: u64,
    path: &Path,
) -> Result<()> {
    let header = CheckpointHeader {
        config: params.config,
        config_hash: config_hash.to_string(),
        step,
        param_count: params.param_count(),
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut file, &header)?;
    file.write_all(b"\n")?;
    for x in params.to_flat() {
        file.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(MlpParams, String, u64)> {
    let bytes = std::fs::read(path)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Data("checkpoint missing header line".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl])?;
    let blob = &bytes[nl + 1..];
    if blob.len() != header.param_count * 8 {
        return Err(Error::Data(format!(
            "checkpoint blob has {} bytes, expected {}",
            blob.len(),
            header.param_count * 8
        )));
    }
    let mut flat = Vec::with_capacity(header.param_count);
    let mut rdr = blob;
    let mut buf = [0u8; 8];
    while rdr.read_exact(&mut buf).is_ok() {
        flat.push(f64::from_le_bytes(buf));
    }
    let params = MlpParams::from_flat(header.config, &flat)?;
    Ok((params, header.config_hash, header.step))
}
