//! Per-sequence forward and backward passes.
//!
//! One sequence at a time, post-norm layers:
//!
//! ```text
//! x0 = LN_emb(tok_emb[ids] + pos_emb[0..n])
//! r1 = x + Attn(x)          y = LN1(r1)
//! r2 = y + FFN(y)           x' = LN2(r2)
//! ```
//!
//! Attention masks out padding keys additively before the row softmax, so
//! logits at non-pad positions are invariant to pad content. Dropout (when
//! enabled) applies at the embedding output, the attention projection, and
//! the feed-forward output, with seeded masks kept in the cache so the
//! backward pass sees the same pattern.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{LayerParams, Lin, Params};

pub(crate) const LN_EPS: f64 = 1e-5;
const NEG_INF: f64 = -1e30;

pub(crate) struct LnCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
}

struct DropoutMask {
    mask: Array2<f64>,
}

pub(crate) struct LayerCache {
    x_in: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    concat: Array2<f64>,
    attn_drop: Option<DropoutMask>,
    ln1: LnCache,
    y: Array2<f64>,
    ff_pre: Array2<f64>,
    ff_act: Array2<f64>,
    ff_drop: Option<DropoutMask>,
    ln2: LnCache,
}

pub(crate) struct ForwardCache {
    pub ids: Vec<u32>,
    emb_ln: LnCache,
    emb_drop: Option<DropoutMask>,
    layers: Vec<LayerCache>,
    pub hidden: Array2<f64>,
}

/// Dropout configuration for a training-mode forward pass.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DropoutPlan {
    pub prob: f64,
    pub seed: u64,
}

fn sample_dropout(
    shape: (usize, usize),
    prob: f64,
    rng: &mut ChaCha8Rng,
) -> DropoutMask {
    let keep = 1.0 - prob;
    let mask = Array2::from_shape_fn(shape, |_| {
        if rng.gen::<f64>() < keep {
            1.0 / keep
        } else {
            0.0
        }
    });
    DropoutMask { mask }
}

pub(crate) fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Row-wise softmax Jacobian application: `da = a * (dout - sum(dout * a))`.
fn softmax_rows_backward(a: &Array2<f64>, dout: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(a.raw_dim());
    for i in 0..a.nrows() {
        let arow = a.row(i);
        let drow = dout.row(i);
        let dot: f64 = arow.iter().zip(drow.iter()).map(|(x, y)| x * y).sum();
        for j in 0..a.ncols() {
            out[[i, j]] = arow[j] * (drow[j] - dot);
        }
    }
    out
}

fn layernorm_forward(x: &Array2<f64>, ln: &super::params::Ln) -> (Array2<f64>, LnCache) {
    let n = x.nrows();
    let d = x.ncols() as f64;
    let mut x_hat = Array2::zeros(x.raw_dim());
    let mut inv_std = Array1::zeros(n);
    for i in 0..n {
        let row = x.row(i);
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let istd = 1.0 / (var + LN_EPS).sqrt();
        inv_std[i] = istd;
        for j in 0..x.ncols() {
            x_hat[[i, j]] = (x[[i, j]] - mean) * istd;
        }
    }
    let out = &x_hat * &ln.g + &ln.b;
    (out, LnCache { x_hat, inv_std })
}

/// Returns `dx` and accumulates `dg`/`db` into the gradient buffers.
fn layernorm_backward(
    cache: &LnCache,
    ln: &super::params::Ln,
    dout: &Array2<f64>,
    dg: &mut Array1<f64>,
    db: &mut Array1<f64>,
) -> Array2<f64> {
    let n = cache.x_hat.nrows();
    let d = cache.x_hat.ncols();
    let df = d as f64;
    *dg += &(dout * &cache.x_hat).sum_axis(Axis(0));
    *db += &dout.sum_axis(Axis(0));
    let dxhat = dout * &ln.g;
    let mut dx = Array2::zeros(cache.x_hat.raw_dim());
    for i in 0..n {
        let mean_dxhat = dxhat.row(i).sum() / df;
        let mean_dxhat_xhat: f64 = dxhat
            .row(i)
            .iter()
            .zip(cache.x_hat.row(i).iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / df;
        for j in 0..d {
            dx[[i, j]] = cache.inv_std[i]
                * (dxhat[[i, j]] - mean_dxhat - cache.x_hat[[i, j]] * mean_dxhat_xhat);
        }
    }
    dx
}

const GELU_C: f64 = 0.7978845608028654; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + GELU_A * u * u * u)).tanh())
}

fn gelu_grad(u: f64) -> f64 {
    let w = GELU_C * (u + GELU_A * u * u * u);
    let t = w.tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * u * u)
}

fn linear(x: &Array2<f64>, lin: &Lin) -> Array2<f64> {
    x.dot(&lin.w) + &lin.b
}

/// `dx`; accumulates `dw`/`db`.
fn linear_backward(
    x: &Array2<f64>,
    lin: &Lin,
    dout: &Array2<f64>,
    dw: &mut Array2<f64>,
    db: &mut Array1<f64>,
) -> Array2<f64> {
    *dw += &x.t().dot(dout);
    *db += &dout.sum_axis(Axis(0));
    dout.dot(&lin.w.t())
}

struct AttnOut {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    concat: Array2<f64>,
}

fn attention_forward(
    x: &Array2<f64>,
    layer: &LayerParams,
    attn_mask: &[bool],
    num_heads: usize,
) -> AttnOut {
    let n = x.nrows();
    let d = x.ncols();
    let dh = d / num_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let q = linear(x, &layer.wq);
    let k = linear(x, &layer.wk);
    let v = linear(x, &layer.wv);
    let mut concat = Array2::zeros((n, d));
    let mut attn = Vec::with_capacity(num_heads);
    for h in 0..num_heads {
        let cols = h * dh..(h + 1) * dh;
        let qh = q.slice(ndarray::s![.., cols.clone()]);
        let kh = k.slice(ndarray::s![.., cols.clone()]);
        let vh = v.slice(ndarray::s![.., cols.clone()]);
        let mut scores = qh.dot(&kh.t()) * scale;
        for (j, &keep) in attn_mask.iter().enumerate() {
            if !keep {
                scores.column_mut(j).fill(NEG_INF);
            }
        }
        let a = softmax_rows(&scores);
        let oh = a.dot(&vh);
        concat.slice_mut(ndarray::s![.., cols]).assign(&oh);
        attn.push(a);
    }
    AttnOut { q, k, v, attn, concat }
}

/// Accumulates attention parameter grads; returns `dx`.
#[allow(clippy::too_many_arguments)]
fn attention_backward(
    cache: &LayerCache,
    layer: &LayerParams,
    grads: &mut LayerParams,
    d_attn_out: &Array2<f64>,
    num_heads: usize,
) -> Array2<f64> {
    let n = cache.x_in.nrows();
    let d = cache.x_in.ncols();
    let dh = d / num_heads;
    let scale = 1.0 / (dh as f64).sqrt();

    let dconcat = linear_backward(
        &cache.concat,
        &layer.wo,
        d_attn_out,
        &mut grads.wo.w,
        &mut grads.wo.b,
    );

    let mut dq = Array2::zeros((n, d));
    let mut dk = Array2::zeros((n, d));
    let mut dv = Array2::zeros((n, d));
    for h in 0..num_heads {
        let cols = h * dh..(h + 1) * dh;
        let a = &cache.attn[h];
        let doh = dconcat.slice(ndarray::s![.., cols.clone()]);
        let vh = cache.v.slice(ndarray::s![.., cols.clone()]);
        let qh = cache.q.slice(ndarray::s![.., cols.clone()]);
        let kh = cache.k.slice(ndarray::s![.., cols.clone()]);

        let da = doh.dot(&vh.t());
        let dvh = a.t().dot(&doh);
        let dscores = softmax_rows_backward(a, &da);
        let dqh = dscores.dot(&kh) * scale;
        let dkh = dscores.t().dot(&qh) * scale;

        dq.slice_mut(ndarray::s![.., cols.clone()]).assign(&dqh);
        dk.slice_mut(ndarray::s![.., cols.clone()]).assign(&dkh);
        dv.slice_mut(ndarray::s![.., cols]).assign(&dvh);
    }

    let mut dx =
        linear_backward(&cache.x_in, &layer.wq, &dq, &mut grads.wq.w, &mut grads.wq.b);
    dx += &linear_backward(&cache.x_in, &layer.wk, &dk, &mut grads.wk.w, &mut grads.wk.b);
    dx += &linear_backward(&cache.x_in, &layer.wv, &dv, &mut grads.wv.w, &mut grads.wv.b);
    dx
}

/// Forward through embeddings and all layers; the cache holds everything the
/// backward pass needs.
pub(crate) fn forward_sequence(
    params: &Params,
    num_heads: usize,
    ids: &[u32],
    attn_mask: &[bool],
    dropout: Option<DropoutPlan>,
) -> ForwardCache {
    let n = ids.len();
    let d = params.tok_emb.ncols();
    let mut emb = Array2::zeros((n, d));
    for (i, &id) in ids.iter().enumerate() {
        let row = params.tok_emb.row(id as usize);
        let pos = params.pos_emb.row(i);
        for j in 0..d {
            emb[[i, j]] = row[j] + pos[j];
        }
    }
    let mut drop_rng = dropout.map(|p| ChaCha8Rng::seed_from_u64(p.seed));
    let mut take_mask = |shape: (usize, usize)| -> Option<DropoutMask> {
        match (&mut drop_rng, dropout) {
            (Some(rng), Some(plan)) if plan.prob > 0.0 => {
                Some(sample_dropout(shape, plan.prob, rng))
            }
            _ => None,
        }
    };

    let (mut x, emb_ln) = layernorm_forward(&emb, &params.emb_ln);
    let emb_drop = take_mask((n, d));
    if let Some(m) = &emb_drop {
        x = &x * &m.mask;
    }

    let mut layer_caches = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let AttnOut { q, k, v, attn, concat } =
            attention_forward(&x, layer, attn_mask, num_heads);
        let mut attn_out = linear(&concat, &layer.wo);
        let attn_drop = take_mask((n, d));
        if let Some(m) = &attn_drop {
            attn_out = &attn_out * &m.mask;
        }
        let r1 = &x + &attn_out;
        let (y, ln1) = layernorm_forward(&r1, &layer.ln1);
        let ff_pre = linear(&y, &layer.ff1);
        let ff_act = ff_pre.mapv(gelu);
        let mut ff_out = linear(&ff_act, &layer.ff2);
        let ff_drop = take_mask((n, d));
        if let Some(m) = &ff_drop {
            ff_out = &ff_out * &m.mask;
        }
        let r2 = &y + &ff_out;
        let (x_next, ln2) = layernorm_forward(&r2, &layer.ln2);
        layer_caches.push(LayerCache {
            x_in: x,
            q,
            k,
            v,
            attn,
            concat,
            attn_drop,
            ln1,
            y,
            ff_pre,
            ff_act,
            ff_drop,
            ln2,
        });
        x = x_next;
    }

    ForwardCache {
        ids: ids.to_vec(),
        emb_ln,
        emb_drop,
        layers: layer_caches,
        hidden: x,
    }
}

/// Backpropagate `d_hidden` through all layers and the embeddings,
/// accumulating into `grads`.
pub(crate) fn backward_sequence(
    params: &Params,
    num_heads: usize,
    cache: &ForwardCache,
    d_hidden: Array2<f64>,
    grads: &mut Params,
) {
    let mut dx = d_hidden;
    for (li, layer_cache) in cache.layers.iter().enumerate().rev() {
        let layer = &params.layers[li];
        let g = &mut grads.layers[li];

        let d_r2 =
            layernorm_backward(&layer_cache.ln2, &layer.ln2, &dx, &mut g.ln2.g, &mut g.ln2.b);
        let mut d_ffout = d_r2.clone();
        if let Some(m) = &layer_cache.ff_drop {
            d_ffout = &d_ffout * &m.mask;
        }
        let d_act = linear_backward(
            &layer_cache.ff_act,
            &layer.ff2,
            &d_ffout,
            &mut g.ff2.w,
            &mut g.ff2.b,
        );
        let d_pre = &d_act * &layer_cache.ff_pre.mapv(gelu_grad);
        let mut d_y =
            linear_backward(&layer_cache.y, &layer.ff1, &d_pre, &mut g.ff1.w, &mut g.ff1.b);
        d_y += &d_r2;

        let d_r1 =
            layernorm_backward(&layer_cache.ln1, &layer.ln1, &d_y, &mut g.ln1.g, &mut g.ln1.b);
        let mut d_attn_out = d_r1.clone();
        if let Some(m) = &layer_cache.attn_drop {
            d_attn_out = &d_attn_out * &m.mask;
        }
        let d_from_attn =
            attention_backward(layer_cache, layer, g, &d_attn_out, num_heads);
        dx = d_r1 + d_from_attn;
    }

    let mut d_x0 = dx;
    if let Some(m) = &cache.emb_drop {
        d_x0 = &d_x0 * &m.mask;
    }
    let d_emb = layernorm_backward(
        &cache.emb_ln,
        &params.emb_ln,
        &d_x0,
        &mut grads.emb_ln.g,
        &mut grads.emb_ln.b,
    );
    for (i, &id) in cache.ids.iter().enumerate() {
        let g_row = d_emb.row(i);
        let mut tok_row = grads.tok_emb.row_mut(id as usize);
        tok_row += &g_row;
        let mut pos_row = grads.pos_emb.row_mut(i);
        pos_row += &g_row;
    }
}

/// Vocabulary logits from hidden states (tied or untied output projection).
pub(crate) fn output_logits(params: &Params, hidden: &Array2<f64>) -> Array2<f64> {
    match &params.out_w {
        Some(w) => hidden.dot(w) + &params.out_b,
        None => hidden.dot(&params.tok_emb.t()) + &params.out_b,
    }
}

/// Backward through the output projection: accumulates projection grads and
/// returns `d_hidden`.
pub(crate) fn output_logits_backward(
    params: &Params,
    hidden: &Array2<f64>,
    dlogits: &Array2<f64>,
    grads: &mut Params,
) -> Array2<f64> {
    grads.out_b += &dlogits.sum_axis(Axis(0));
    match &params.out_w {
        Some(w) => {
            grads.out_w.as_mut().expect("untied grads").scaled_add(1.0, &hidden.t().dot(dlogits));
            dlogits.dot(&w.t())
        }
        None => {
            grads.tok_emb += &dlogits.t().dot(hidden);
            dlogits.dot(&params.tok_emb)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;

    fn tiny() -> (EncoderConfig, Params) {
        let cfg = EncoderConfig::new(13).with_dims(2, 2, 8, 16).with_max_seq_len(8);
        let params = Params::init(&cfg, 42);
        (cfg, params)
    }

    #[test]
    fn attention_softmax_rows_sum_to_one() {
        let (cfg, params) = tiny();
        let ids = vec![1, 5, 7, 2, 9];
        let mask = vec![true, true, true, true, false];
        let cache = forward_sequence(&params, cfg.num_heads, &ids, &mask, None);
        for layer in &cache.layers {
            for a in &layer.attn {
                for row in a.rows() {
                    let s: f64 = row.sum();
                    assert!((s - 1.0).abs() < 1e-6, "attention row sum {s}");
                }
            }
        }
    }

    #[test]
    fn output_softmax_rows_sum_to_one() {
        let (cfg, params) = tiny();
        let ids = vec![1, 5, 7];
        let mask = vec![true; 3];
        let cache = forward_sequence(&params, cfg.num_heads, &ids, &mask, None);
        let logits = output_logits(&params, &cache.hidden);
        let probs = softmax_rows(&logits);
        for row in probs.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn pad_content_does_not_leak_into_real_positions() {
        let (cfg, params) = tiny();
        let mask = vec![true, true, true, false, false];
        let a = forward_sequence(&params, cfg.num_heads, &[1, 2, 3, 4, 5], &mask, None);
        let b = forward_sequence(&params, cfg.num_heads, &[1, 2, 3, 5, 4], &mask, None);
        let la = output_logits(&params, &a.hidden);
        let lb = output_logits(&params, &b.hidden);
        for i in 0..3 {
            for j in 0..13 {
                assert_eq!(la[[i, j]], lb[[i, j]], "pad permutation changed logits");
            }
        }
    }

    #[test]
    fn dropout_zero_matches_eval_mode() {
        let (cfg, params) = tiny();
        let ids = vec![1, 2, 3];
        let mask = vec![true; 3];
        let a = forward_sequence(&params, cfg.num_heads, &ids, &mask, None);
        let plan = DropoutPlan { prob: 0.0, seed: 9 };
        let b = forward_sequence(&params, cfg.num_heads, &ids, &mask, Some(plan));
        assert_eq!(a.hidden, b.hidden);
    }

    #[test]
    fn dropout_masks_change_activations() {
        let (cfg, params) = tiny();
        let ids = vec![1, 2, 3];
        let mask = vec![true; 3];
        let a = forward_sequence(&params, cfg.num_heads, &ids, &mask, None);
        let plan = DropoutPlan { prob: 0.5, seed: 9 };
        let b = forward_sequence(&params, cfg.num_heads, &ids, &mask, Some(plan));
        assert_ne!(a.hidden, b.hidden);
    }
}
