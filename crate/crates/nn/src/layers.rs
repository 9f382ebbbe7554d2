//! Parameterized building blocks.
//!
//! Each block comes as a `declare_*` function that adds its parameters to a
//! [`ParamStore`] under a path prefix, and a forward function that reads
//! them back from [`BoundParams`] by the same prefix. Dropout is active only
//! when an [`Rng`] is passed.

use crate::error::{NnError, Result};
use crate::graph::{Graph, Var};
use crate::init;
use crate::params::{BoundParams, ParamStore};
use crate::rng::Rng;
use crate::tensor::Tensor;

pub const LAYER_NORM_EPS: f64 = 1e-9;

fn path(prefix: &str, leaf: &str) -> String {
    format!("{prefix}/{leaf}")
}

pub fn declare_linear(store: &mut ParamStore, rng: &mut Rng, name: &str, fan_in: usize, fan_out: usize) -> Result<()> {
    store.insert(path(name, "w"), init::xavier_uniform(rng, &[fan_in, fan_out], fan_in, fan_out))?;
    store.insert(path(name, "b"), init::zeros(&[fan_out]))
}

/// `x · W + b` for `x` of shape `[n, fan_in]`.
pub fn linear(g: &mut Graph, p: &BoundParams, name: &str, x: Var) -> Result<Var> {
    let w = p.get(&path(name, "w"))?;
    let b = p.get(&path(name, "b"))?;
    let xw = g.matmul(x, w)?;
    g.add_row(xw, b)
}

pub fn declare_layer_norm(store: &mut ParamStore, name: &str, width: usize) -> Result<()> {
    store.insert(path(name, "gamma"), init::ones(&[width]))?;
    store.insert(path(name, "beta"), init::zeros(&[width]))
}

pub fn layer_norm(g: &mut Graph, p: &BoundParams, name: &str, x: Var) -> Result<Var> {
    let gamma = p.get(&path(name, "gamma"))?;
    let beta = p.get(&path(name, "beta"))?;
    g.layer_norm(x, gamma, beta, LAYER_NORM_EPS)
}

pub fn declare_embedding(store: &mut ParamStore, rng: &mut Rng, name: &str, vocab: usize, dim: usize) -> Result<()> {
    store.insert(path(name, "table"), init::normal(rng, &[vocab, dim], 1.0 / (dim as f64).sqrt()))
}

pub fn embedding(g: &mut Graph, p: &BoundParams, name: &str, indices: &[usize]) -> Result<Var> {
    let table = p.get(&path(name, "table"))?;
    g.embedding(table, indices)
}

/// Fixed sinusoidal position codes, `[len, dim]`.
pub fn sinusoidal_positions(len: usize, dim: usize) -> Tensor {
    let mut data = vec![0.0; len * dim];
    for pos in 0..len {
        for i in 0..dim {
            let rate = 1.0 / 10000f64.powf((2 * (i / 2)) as f64 / dim as f64);
            let angle = pos as f64 * rate;
            data[pos * dim + i] = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        }
    }
    Tensor::from_parts(vec![len, dim], data)
}

pub fn declare_mha(store: &mut ParamStore, rng: &mut Rng, name: &str, d_model: usize) -> Result<()> {
    for proj in ["q", "k", "v", "o"] {
        declare_linear(store, rng, &path(name, proj), d_model, d_model)?;
    }
    Ok(())
}

pub struct Attention {
    /// `[batch, seq, d_model]`
    pub output: Var,
    /// `[batch*heads, seq, seq]`, rows sum to one over unmasked keys.
    pub weights: Var,
}

fn split_heads(g: &mut Graph, x: Var, b: usize, l: usize, heads: usize, dh: usize) -> Result<Var> {
    let x = g.reshape(x, &[b, l, heads, dh])?;
    let x = g.permute(x, &[0, 2, 1, 3])?;
    g.reshape(x, &[b * heads, l, dh])
}

/// Scaled dot-product self-attention over `x: [batch, seq, d_model]`.
///
/// `key_mask` (length `batch*seq`, `true` = real position) removes padded
/// keys from every softmax.
pub fn multi_head_attention(
    g: &mut Graph,
    p: &BoundParams,
    name: &str,
    x: Var,
    heads: usize,
    key_mask: Option<&[bool]>,
) -> Result<Attention> {
    let shape = g.shape(x).to_vec();
    if shape.len() != 3 {
        return Err(NnError::ShapeMismatch {
            op: "multi_head_attention",
            got: shape,
            expected: vec![0, 0, 0],
        });
    }
    let (b, l, d) = (shape[0], shape[1], shape[2]);
    if heads == 0 || d % heads != 0 {
        return Err(NnError::IndivisibleHeads { d_model: d, heads });
    }
    let dh = d / heads;
    let flat = g.reshape(x, &[b * l, d])?;
    let q = linear(g, p, &path(name, "q"), flat)?;
    let k = linear(g, p, &path(name, "k"), flat)?;
    let v = linear(g, p, &path(name, "v"), flat)?;
    let q = split_heads(g, q, b, l, heads, dh)?;
    let k = split_heads(g, k, b, l, heads, dh)?;
    let v = split_heads(g, v, b, l, heads, dh)?;
    let scores = g.batch_matmul(q, k, true)?;
    let scores = g.scale(scores, 1.0 / (dh as f64).sqrt());
    let expanded: Vec<bool> = match key_mask {
        Some(m) => {
            if m.len() != b * l {
                return Err(NnError::ShapeMismatch {
                    op: "multi_head_attention",
                    got: vec![m.len()],
                    expected: vec![b * l],
                });
            }
            (0..b).flat_map(|bi| (0..heads).flat_map(move |_| m[bi * l..(bi + 1) * l].iter().copied())).collect()
        }
        None => vec![true; b * heads * l],
    };
    let weights = g.masked_softmax(scores, &expanded)?;
    let ctx = g.batch_matmul(weights, v, false)?;
    let ctx = g.reshape(ctx, &[b, heads, l, dh])?;
    let ctx = g.permute(ctx, &[0, 2, 1, 3])?;
    let ctx = g.reshape(ctx, &[b * l, d])?;
    let out = linear(g, p, &path(name, "o"), ctx)?;
    let output = g.reshape(out, &[b, l, d])?;
    Ok(Attention { output, weights })
}

pub fn declare_encoder_layer(store: &mut ParamStore, rng: &mut Rng, name: &str, d_model: usize, ff_dim: usize) -> Result<()> {
    declare_mha(store, rng, &path(name, "mha"), d_model)?;
    declare_layer_norm(store, &path(name, "ln1"), d_model)?;
    declare_linear(store, rng, &path(name, "ff1"), d_model, ff_dim)?;
    declare_linear(store, rng, &path(name, "ff2"), ff_dim, d_model)?;
    declare_layer_norm(store, &path(name, "ln2"), d_model)
}

/// Post-norm Transformer encoder block:
/// `h = LN(x + drop(MHA(x)))`, `out = LN(h + drop(FF(h)))`.
pub fn encoder_layer(
    g: &mut Graph,
    p: &BoundParams,
    name: &str,
    x: Var,
    heads: usize,
    key_mask: Option<&[bool]>,
    dropout: f64,
    mut rng: Option<&mut Rng>,
) -> Result<Var> {
    let shape = g.shape(x).to_vec();
    let (b, l, d) = (shape[0], shape[1], shape[2]);
    let att = multi_head_attention(g, p, &path(name, "mha"), x, heads, key_mask)?;
    let att = g.dropout(att.output, dropout, rng.as_deref_mut());
    let res = g.add(x, att)?;
    let h = layer_norm(g, p, &path(name, "ln1"), res)?;
    let flat = g.reshape(h, &[b * l, d])?;
    let ff = linear(g, p, &path(name, "ff1"), flat)?;
    let ff = g.relu(ff);
    let ff = linear(g, p, &path(name, "ff2"), ff)?;
    let ff = g.reshape(ff, &[b, l, d])?;
    let ff = g.dropout(ff, dropout, rng);
    let res = g.add(h, ff)?;
    layer_norm(g, p, &path(name, "ln2"), res)
}

pub fn declare_lstm(store: &mut ParamStore, rng: &mut Rng, name: &str, input: usize, hidden: usize) -> Result<()> {
    store.insert(path(name, "w_ih"), init::xavier_uniform(rng, &[input, 4 * hidden], input, 4 * hidden))?;
    store.insert(path(name, "w_hh"), init::xavier_uniform(rng, &[hidden, 4 * hidden], hidden, 4 * hidden))?;
    store.insert(path(name, "b"), init::zeros(&[4 * hidden]))
}

pub struct LstmOutput {
    /// `[batch, seq, hidden]`
    pub sequence: Var,
    /// `[batch, hidden]`
    pub last: Var,
}

/// Single-layer LSTM over `x: [batch, seq, input]` with zero initial state.
/// Gate layout inside the fused weights is (input, forget, cell, output).
pub fn lstm_layer(g: &mut Graph, p: &BoundParams, name: &str, x: Var) -> Result<LstmOutput> {
    let shape = g.shape(x).to_vec();
    if shape.len() != 3 || shape[1] == 0 {
        return Err(NnError::ShapeMismatch {
            op: "lstm_layer",
            got: shape,
            expected: vec![0, 1, 0],
        });
    }
    let (b, l, d_in) = (shape[0], shape[1], shape[2]);
    let w_ih = p.get(&path(name, "w_ih"))?;
    let w_hh = p.get(&path(name, "w_hh"))?;
    let bias = p.get(&path(name, "b"))?;
    let hidden = g.shape(w_hh)[0];
    let flat = g.reshape(x, &[b * l, d_in])?;
    let projected = g.matmul(flat, w_ih)?;
    let projected = g.add_row(projected, bias)?;
    let projected = g.reshape(projected, &[b, l, 4 * hidden])?;

    let mut h: Option<Var> = None;
    let mut c: Option<Var> = None;
    let mut outputs = Vec::with_capacity(l);
    for t in 0..l {
        let step = g.narrow(projected, 1, t, 1)?;
        let mut z = g.reshape(step, &[b, 4 * hidden])?;
        if let Some(h_prev) = h {
            let rec = g.matmul(h_prev, w_hh)?;
            z = g.add(z, rec)?;
        }
        let i = g.narrow(z, 1, 0, hidden)?;
        let f = g.narrow(z, 1, hidden, hidden)?;
        let cand = g.narrow(z, 1, 2 * hidden, hidden)?;
        let o = g.narrow(z, 1, 3 * hidden, hidden)?;
        let i = g.sigmoid(i);
        let f = g.sigmoid(f);
        let cand = g.tanh(cand);
        let o = g.sigmoid(o);
        let ic = g.mul(i, cand)?;
        let c_new = match c {
            Some(c_prev) => {
                let fc = g.mul(f, c_prev)?;
                g.add(fc, ic)?
            }
            None => ic,
        };
        let tc = g.tanh(c_new);
        let h_new = g.mul(o, tc)?;
        outputs.push(g.reshape(h_new, &[b, 1, hidden])?);
        h = Some(h_new);
        c = Some(c_new);
    }
    let sequence = g.concat(&outputs, 1)?;
    let last = h.expect("seq length checked above");
    Ok(LstmOutput { sequence, last })
}
