//! Encoder parameter tensors: layout, initialization, and flat iteration.
//!
//! All tensors are f64 in memory (training and gradient checks need the
//! headroom); the checkpoint format stores little-endian f32 arrays, so a
//! loaded model holds exactly f32-representable values and save/load/save
//! round-trips are bit-exact.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::EncoderConfig;

/// A linear map: `y = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Lin {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Lin {
    fn zeros(rows: usize, cols: usize) -> Lin {
        Lin { w: Array2::zeros((rows, cols)), b: Array1::zeros(cols) }
    }

    fn init<R: Rng>(rows: usize, cols: usize, rng: &mut R, std: f64) -> Lin {
        let normal = Normal::new(0.0, std).expect("valid std");
        let w = Array2::from_shape_fn((rows, cols), |_| normal.sample(rng));
        Lin { w, b: Array1::zeros(cols) }
    }
}

/// Layer-norm scale and bias.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Ln {
    pub g: Array1<f64>,
    pub b: Array1<f64>,
}

impl Ln {
    fn ones(dim: usize) -> Ln {
        Ln { g: Array1::ones(dim), b: Array1::zeros(dim) }
    }

    fn zeros(dim: usize) -> Ln {
        Ln { g: Array1::zeros(dim), b: Array1::zeros(dim) }
    }
}

/// One transformer layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LayerParams {
    pub wq: Lin,
    pub wk: Lin,
    pub wv: Lin,
    pub wo: Lin,
    pub ln1: Ln,
    pub ff1: Lin,
    pub ff2: Lin,
    pub ln2: Ln,
}

/// All encoder parameters. The output projection is tied to the token
/// embedding unless `out_w` is present.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Params {
    pub tok_emb: Array2<f64>,
    pub pos_emb: Array2<f64>,
    pub emb_ln: Ln,
    pub layers: Vec<LayerParams>,
    pub out_w: Option<Array2<f64>>,
    pub out_b: Array1<f64>,
}

impl Params {
    pub fn init(config: &EncoderConfig, seed: u64) -> Params {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = config.init_std;
        let d = config.model_dim;
        let normal = Normal::new(0.0, std).expect("valid std");
        let tok_emb =
            Array2::from_shape_fn((config.vocab_size, d), |_| normal.sample(&mut rng));
        let pos_emb =
            Array2::from_shape_fn((config.max_seq_len, d), |_| normal.sample(&mut rng));
        let layers = (0..config.num_layers)
            .map(|_| LayerParams {
                wq: Lin::init(d, d, &mut rng, std),
                wk: Lin::init(d, d, &mut rng, std),
                wv: Lin::init(d, d, &mut rng, std),
                wo: Lin::init(d, d, &mut rng, std),
                ln1: Ln::ones(d),
                ff1: Lin::init(d, config.ffn_dim, &mut rng, std),
                ff2: Lin::init(config.ffn_dim, d, &mut rng, std),
                ln2: Ln::ones(d),
            })
            .collect();
        let out_w = if config.tie_output {
            None
        } else {
            Some(Array2::from_shape_fn((d, config.vocab_size), |_| normal.sample(&mut rng)))
        };
        Params {
            tok_emb,
            pos_emb,
            emb_ln: Ln::ones(d),
            layers,
            out_w,
            out_b: Array1::zeros(config.vocab_size),
        }
    }

    /// Zero tensors with the same shapes (gradient / optimizer-state buffer).
    pub fn zeros_like(&self) -> Params {
        Params {
            tok_emb: Array2::zeros(self.tok_emb.raw_dim()),
            pos_emb: Array2::zeros(self.pos_emb.raw_dim()),
            emb_ln: Ln::zeros(self.emb_ln.g.len()),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    wq: Lin::zeros(l.wq.w.nrows(), l.wq.w.ncols()),
                    wk: Lin::zeros(l.wk.w.nrows(), l.wk.w.ncols()),
                    wv: Lin::zeros(l.wv.w.nrows(), l.wv.w.ncols()),
                    wo: Lin::zeros(l.wo.w.nrows(), l.wo.w.ncols()),
                    ln1: Ln::zeros(l.ln1.g.len()),
                    ff1: Lin::zeros(l.ff1.w.nrows(), l.ff1.w.ncols()),
                    ff2: Lin::zeros(l.ff2.w.nrows(), l.ff2.w.ncols()),
                    ln2: Ln::zeros(l.ln2.g.len()),
                })
                .collect(),
            out_w: self.out_w.as_ref().map(|w| Array2::zeros(w.raw_dim())),
            out_b: Array1::zeros(self.out_b.len()),
        }
    }

    /// Named tensors in a fixed traversal order (checkpoint + flat order).
    pub fn tensor_entries(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        self.visit(|name, shape, data| out.push((name, shape, data.to_vec())));
        out
    }

    fn visit(&self, mut f: impl FnMut(String, Vec<usize>, &[f64])) {
        f(
            "tok_emb".into(),
            vec![self.tok_emb.nrows(), self.tok_emb.ncols()],
            self.tok_emb.as_slice().expect("contiguous"),
        );
        f(
            "pos_emb".into(),
            vec![self.pos_emb.nrows(), self.pos_emb.ncols()],
            self.pos_emb.as_slice().expect("contiguous"),
        );
        f("emb_ln.g".into(), vec![self.emb_ln.g.len()], self.emb_ln.g.as_slice().unwrap());
        f("emb_ln.b".into(), vec![self.emb_ln.b.len()], self.emb_ln.b.as_slice().unwrap());
        for (i, l) in self.layers.iter().enumerate() {
            let mut lin = |tag: &str, lin: &Lin| {
                f(
                    format!("layers.{i}.{tag}.w"),
                    vec![lin.w.nrows(), lin.w.ncols()],
                    lin.w.as_slice().unwrap(),
                );
                f(format!("layers.{i}.{tag}.b"), vec![lin.b.len()], lin.b.as_slice().unwrap());
            };
            lin("wq", &l.wq);
            lin("wk", &l.wk);
            lin("wv", &l.wv);
            lin("wo", &l.wo);
            f(format!("layers.{i}.ln1.g"), vec![l.ln1.g.len()], l.ln1.g.as_slice().unwrap());
            f(format!("layers.{i}.ln1.b"), vec![l.ln1.b.len()], l.ln1.b.as_slice().unwrap());
            let mut lin = |tag: &str, lin: &Lin| {
                f(
                    format!("layers.{i}.{tag}.w"),
                    vec![lin.w.nrows(), lin.w.ncols()],
                    lin.w.as_slice().unwrap(),
                );
                f(format!("layers.{i}.{tag}.b"), vec![lin.b.len()], lin.b.as_slice().unwrap());
            };
            lin("ff1", &l.ff1);
            lin("ff2", &l.ff2);
            f(format!("layers.{i}.ln2.g"), vec![l.ln2.g.len()], l.ln2.g.as_slice().unwrap());
            f(format!("layers.{i}.ln2.b"), vec![l.ln2.b.len()], l.ln2.b.as_slice().unwrap());
        }
        if let Some(w) = &self.out_w {
            f("out_w".into(), vec![w.nrows(), w.ncols()], w.as_slice().unwrap());
        }
        f("out_b".into(), vec![self.out_b.len()], self.out_b.as_slice().unwrap());
    }

    /// Mutable references to every scalar, in `tensor_entries` order.
    pub fn flat_mut(&mut self) -> Vec<&mut f64> {
        let mut out: Vec<&mut f64> = Vec::new();
        macro_rules! push2 {
            ($a:expr) => {
                out.extend($a.as_slice_mut().expect("contiguous").iter_mut())
            };
        }
        push2!(self.tok_emb);
        push2!(self.pos_emb);
        push2!(self.emb_ln.g);
        push2!(self.emb_ln.b);
        for l in &mut self.layers {
            push2!(l.wq.w);
            push2!(l.wq.b);
            push2!(l.wk.w);
            push2!(l.wk.b);
            push2!(l.wv.w);
            push2!(l.wv.b);
            push2!(l.wo.w);
            push2!(l.wo.b);
            push2!(l.ln1.g);
            push2!(l.ln1.b);
            push2!(l.ff1.w);
            push2!(l.ff1.b);
            push2!(l.ff2.w);
            push2!(l.ff2.b);
            push2!(l.ln2.g);
            push2!(l.ln2.b);
        }
        if let Some(w) = &mut self.out_w {
            push2!(*w);
        }
        push2!(self.out_b);
        out
    }

    /// All scalar values, in the same order as [`Params::flat_mut`].
    pub fn flat_vals(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(|_, _, data| out.extend_from_slice(data));
        out
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit(|_, _, data| n += data.len());
        n
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit(|_, _, data| ok &= data.iter().all(|x| x.is_finite()));
        ok
    }

    /// Round every value to f32 precision (matches what a checkpoint
    /// round-trip would produce).
    #[cfg(test)]
    pub fn quantize_f32(&mut self) {
        for v in self.flat_mut() {
            *v = *v as f32 as f64;
        }
    }
}
