use std::collections::BTreeMap;

use rand::Rng;

use super::embedding::{normalize_backward, Embedding};
use super::params::{round_to_storage, Gradients, Parameters, TensorRef};
use crate::anchoring::{TokenSequence, PAD};
use crate::error::{Error, Result};

/// Bag-of-tokens text encoder: pad-masked mean of token embeddings followed by
/// two residual tanh layers and L2 normalization,
///
/// ```text
/// x  = mean(E[tokens])
/// h1 = x  + tanh(W1 x  + b1)
/// h2 = h1 + tanh(W2 h1 + b2)
/// y  = h2 / ‖h2‖
/// ```
///
/// With zero layer weights both layers are the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct TextEncoder {
    vocab_size: usize,
    dim: usize,
    pub(crate) token_embedding: Vec<f64>,
    pub(crate) w1: Vec<f64>,
    pub(crate) b1: Vec<f64>,
    pub(crate) w2: Vec<f64>,
    pub(crate) b2: Vec<f64>,
}

/// Intermediate values kept for the backward pass.
#[derive(Clone, Debug)]
pub struct EncoderTrace {
    tokens: Vec<(u32, f64)>,
    x: Vec<f64>,
    t1: Vec<f64>,
    h1: Vec<f64>,
    t2: Vec<f64>,
    norm: f64,
    output: Embedding,
}

impl EncoderTrace {
    pub fn output(&self) -> &Embedding {
        &self.output
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, n: usize, bound: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    round_to_storage(&mut v);
    v
}

fn matvec(w: &[f64], x: &[f64], b: &[f64]) -> Vec<f64> {
    let d = x.len();
    (0..b.len())
        .map(|i| b[i] + w[i * d..(i + 1) * d].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

impl TextEncoder {
    /// Token table uniform in ±0.1, layers uniform in ±1/√d.
    pub fn init<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        TextEncoder {
            vocab_size,
            dim,
            token_embedding: uniform(rng, vocab_size * dim, 0.1),
            w1: uniform(rng, dim * dim, bound),
            b1: uniform(rng, dim, bound),
            w2: uniform(rng, dim * dim, bound),
            b2: uniform(rng, dim, bound),
        }
    }

    /// Identity layers over a given token table (row-major `vocab_size × dim`).
    pub fn with_identity_layers(vocab_size: usize, dim: usize, token_embedding: Vec<f64>) -> Self {
        assert_eq!(token_embedding.len(), vocab_size * dim);
        TextEncoder {
            vocab_size,
            dim,
            token_embedding,
            w1: vec![0.0; dim * dim],
            b1: vec![0.0; dim],
            w2: vec![0.0; dim * dim],
            b2: vec![0.0; dim],
        }
    }

    pub(crate) fn from_parts(vocab_size: usize, dim: usize, parts: [Vec<f64>; 5]) -> Result<Self> {
        let [token_embedding, w1, b1, w2, b2] = parts;
        if token_embedding.len() != vocab_size * dim
            || w1.len() != dim * dim
            || w2.len() != dim * dim
            || b1.len() != dim
            || b2.len() != dim
        {
            return Err(Error::Data("text encoder tensor shapes do not match dims".into()));
        }
        Ok(TextEncoder {
            vocab_size,
            dim,
            token_embedding,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn encode(&self, seq: &TokenSequence) -> Result<Embedding> {
        Ok(self.forward(seq)?.output)
    }

    pub fn forward(&self, seq: &TokenSequence) -> Result<EncoderTrace> {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &t in &seq.ids {
            if t == PAD {
                continue;
            }
            if t as usize >= self.vocab_size {
                return Err(Error::Data(format!("token id {t} outside vocabulary of {}", self.vocab_size)));
            }
            *counts.entry(t).or_default() += 1;
        }
        let n: usize = counts.values().sum();
        if n == 0 {
            return Err(Error::Data("cannot encode an empty or all-padding sequence".into()));
        }
        let d = self.dim;
        let tokens: Vec<(u32, f64)> = counts.into_iter().map(|(t, c)| (t, c as f64 / n as f64)).collect();
        let mut x = vec![0.0; d];
        for &(t, w) in &tokens {
            let row = &self.token_embedding[t as usize * d..(t as usize + 1) * d];
            for (xi, r) in x.iter_mut().zip(row) {
                *xi += w * r;
            }
        }
        let t1: Vec<f64> = matvec(&self.w1, &x, &self.b1).into_iter().map(f64::tanh).collect();
        let h1: Vec<f64> = x.iter().zip(&t1).map(|(a, b)| a + b).collect();
        let t2: Vec<f64> = matvec(&self.w2, &h1, &self.b2).into_iter().map(f64::tanh).collect();
        let h2: Vec<f64> = h1.iter().zip(&t2).map(|(a, b)| a + b).collect();
        let norm = h2.iter().map(|v| v * v).sum::<f64>().sqrt();
        let output = Embedding::normalized(h2)?;
        Ok(EncoderTrace {
            tokens,
            x,
            t1,
            h1,
            t2,
            norm,
            output,
        })
    }

    /// Accumulates `dL/dθ` into `grads` given `dL/dy` for the traced forward pass.
    #[allow(clippy::needless_range_loop)]
    pub fn backward(&self, trace: &EncoderTrace, grad_output: &[f64], grads: &mut TextEncoderGrads) {
        let d = self.dim;
        let g_h2 = normalize_backward(trace.output.values(), trace.norm, grad_output);

        let g_a2: Vec<f64> = g_h2.iter().zip(&trace.t2).map(|(g, t)| g * (1.0 - t * t)).collect();
        let mut g_h1 = g_h2;
        for i in 0..d {
            let ga = g_a2[i];
            if ga == 0.0 {
                continue;
            }
            grads.b2[i] += ga;
            let row = &self.w2[i * d..(i + 1) * d];
            let grow = &mut grads.w2[i * d..(i + 1) * d];
            for j in 0..d {
                grow[j] += ga * trace.h1[j];
                g_h1[j] += row[j] * ga;
            }
        }

        let g_a1: Vec<f64> = g_h1.iter().zip(&trace.t1).map(|(g, t)| g * (1.0 - t * t)).collect();
        let mut g_x = g_h1;
        for i in 0..d {
            let ga = g_a1[i];
            if ga == 0.0 {
                continue;
            }
            grads.b1[i] += ga;
            let row = &self.w1[i * d..(i + 1) * d];
            let grow = &mut grads.w1[i * d..(i + 1) * d];
            for j in 0..d {
                grow[j] += ga * trace.x[j];
                g_x[j] += row[j] * ga;
            }
        }

        for &(t, w) in &trace.tokens {
            let row = grads.token_rows.entry(t).or_insert_with(|| vec![0.0; d]);
            for (r, g) in row.iter_mut().zip(&g_x) {
                *r += w * g;
            }
        }
    }

    fn tensor_refs(&self, prefix: &str) -> Vec<TensorRef<'_>> {
        let (v, d) = (self.vocab_size, self.dim);
        vec![
            TensorRef { name: format!("{prefix}.token_embedding"), shape: vec![v, d], data: &self.token_embedding },
            TensorRef { name: format!("{prefix}.w1"), shape: vec![d, d], data: &self.w1 },
            TensorRef { name: format!("{prefix}.b1"), shape: vec![d], data: &self.b1 },
            TensorRef { name: format!("{prefix}.w2"), shape: vec![d, d], data: &self.w2 },
            TensorRef { name: format!("{prefix}.b2"), shape: vec![d], data: &self.b2 },
        ]
    }

    fn tensor_muts(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.token_embedding,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
        ]
    }
}

/// Gradients of one [`TextEncoder`]; token rows are kept sparse and ordered.
#[derive(Clone, Debug, PartialEq)]
pub struct TextEncoderGrads {
    pub token_rows: BTreeMap<u32, Vec<f64>>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl TextEncoderGrads {
    pub fn zeros(dim: usize) -> Self {
        TextEncoderGrads {
            token_rows: BTreeMap::new(),
            w1: vec![0.0; dim * dim],
            b1: vec![0.0; dim],
            w2: vec![0.0; dim * dim],
            b2: vec![0.0; dim],
        }
    }

    pub fn add_assign(&mut self, other: &TextEncoderGrads) {
        for (t, row) in &other.token_rows {
            let dst = self.token_rows.entry(*t).or_insert_with(|| vec![0.0; row.len()]);
            for (a, b) in dst.iter_mut().zip(row) {
                *a += b;
            }
        }
        for (dst, src) in [
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
        ] {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += b;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for row in self.token_rows.values_mut() {
            row.iter_mut().for_each(|v| *v *= s);
        }
        for v in self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2).chain(&mut self.b2) {
            *v *= s;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.token_rows.values().flatten().chain(&self.w1).chain(&self.b1).chain(&self.w2).chain(&self.b2)
            .all(|&v| v == 0.0)
    }

    fn densify(&self, vocab_size: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut table = vec![0.0; vocab_size * dim];
        for (&t, row) in &self.token_rows {
            table[t as usize * dim..(t as usize + 1) * dim].copy_from_slice(row);
        }
        vec![table, self.w1.clone(), self.b1.clone(), self.w2.clone(), self.b2.clone()]
    }
}

/// The query encoder `g1`, the candidate encoder `g2` (parameter-disjoint) and the
/// learnable temperature, stored as `ln τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiEncoder {
    pub query: TextEncoder,
    pub candidate: TextEncoder,
    pub log_tau: f64,
}

impl BiEncoder {
    pub fn init<R: Rng + ?Sized>(vocab_size: usize, dim: usize, tau: f64, query_rng: &mut R, candidate_rng: &mut R) -> Self {
        BiEncoder {
            query: TextEncoder::init(vocab_size, dim, query_rng),
            candidate: TextEncoder::init(vocab_size, dim, candidate_rng),
            log_tau: f64::from(tau.ln() as f32),
        }
    }

    pub fn tau(&self) -> f64 {
        self.log_tau.exp()
    }

    pub fn dim(&self) -> usize {
        self.query.dim
    }

    /// Dense gradients in [`Parameters::tensors`] order.
    pub fn dense_gradients(&self, query: &TextEncoderGrads, candidate: &TextEncoderGrads, log_tau: f64) -> Gradients {
        let mut out = query.densify(self.query.vocab_size, self.query.dim);
        out.extend(candidate.densify(self.candidate.vocab_size, self.candidate.dim));
        out.push(vec![log_tau]);
        Gradients(out)
    }
}

impl Parameters for BiEncoder {
    fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = self.query.tensor_refs("query");
        out.extend(self.candidate.tensor_refs("candidate"));
        out.push(TensorRef {
            name: "log_tau".into(),
            shape: vec![1],
            data: std::slice::from_ref(&self.log_tau),
        });
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.query.tensor_muts();
        out.extend(self.candidate.tensor_muts());
        out.push(std::slice::from_mut(&mut self.log_tau));
        out
    }
}
