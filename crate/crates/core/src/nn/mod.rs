//! Small dense feedforward approximators with hand-written reverse mode.
//!
//! Parameters live in one flat buffer. Layer `l` stores its weight matrix
//! row-major with shape `(fan_in, fan_out)` followed by its `fan_out`
//! biases; optimizers, soft updates and the weight file all work on the
//! flat buffer directly.

mod io;
mod optim;

pub use io::{decode, encode, load_weights, save_weights, WEIGHT_MAGIC, WEIGHT_VERSION};
pub use optim::{Algorithm, OptimizerState};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Linear,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet<T> {
    dims: Vec<usize>,
    head: Head,
    params: Vec<T>,
}

/// Gradient of a scalar loss with respect to every parameter, laid out
/// like [`DenseNet::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T>(pub Vec<T>);

impl<T: Real> Gradients<T> {
    pub fn zeros(len: usize) -> Self {
        Gradients(vec![T::zero(); len])
    }

    pub fn scale(&mut self, s: T) {
        for g in &mut self.0 {
            *g *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|g| *g == T::zero())
    }
}

/// Rows processed per parallel task in batched forward passes.
const BATCH_CHUNK: usize = 512;

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl<T: Real> DenseNet<T> {
    /// Zero-initialised network.
    pub fn zeros(dims: &[usize], head: Head) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "layer dimensions {dims:?} need at least an input and an output layer, all non-empty"
            )));
        }
        Ok(Self {
            dims: dims.to_vec(),
            head,
            params: vec![T::zero(); param_count(dims)],
        })
    }

    /// Uniform fan-in initialisation, `U(−1/√fan_in, 1/√fan_in)`, from a
    /// seeded generator.
    pub fn new(dims: &[usize], head: Head, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(dims, head)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut off = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for p in &mut net.params[off..off + w[0] * w[1] + w[1]] {
                *p = T::lit(rng.random_range(-bound..bound));
            }
            off += w[0] * w[1] + w[1];
        }
        Ok(net)
    }

    pub fn from_parts(dims: &[usize], head: Head, params: Vec<T>) -> Result<Self> {
        let mut net = Self::zeros(dims, head)?;
        if params.len() != net.params.len() {
            return Err(Error::DimensionMismatch {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn same_architecture(&self, other: &Self) -> bool {
        self.dims == other.dims && self.head == other.head
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, &[T], &[T])> {
        let mut off = 0;
        self.dims.windows(2).map(move |w| {
            let (fi, fo) = (w[0], w[1]);
            let weights = &self.params[off..off + fi * fo];
            let bias = &self.params[off + fi * fo..off + fi * fo + fo];
            off += fi * fo + fo;
            (fi, fo, weights, bias)
        })
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        self.check_input(input.len())?;
        Ok(self.forward_rows(input, 1))
    }

    /// Forward pass over `inputs.len() / input_dim` rows stored row-major.
    /// Rows are independent, so chunks run in parallel; results are
    /// identical to row-by-row evaluation.
    pub fn forward_batch(&self, inputs: &[T]) -> Result<Vec<T>> {
        let d = self.input_dim();
        if !inputs.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: inputs.len() % d,
            });
        }
        let out_dim = self.output_dim();
        let mut out = vec![T::zero(); inputs.len() / d * out_dim];
        inputs
            .par_chunks(BATCH_CHUNK * d)
            .zip(out.par_chunks_mut(BATCH_CHUNK * out_dim))
            .for_each(|(x, y)| {
                let rows = x.len() / d;
                y.copy_from_slice(&self.forward_rows(x, rows));
            });
        Ok(out)
    }

    fn forward_rows(&self, input: &[T], rows: usize) -> Vec<T> {
        let n_layers = self.dims.len() - 1;
        let mut act = input.to_vec();
        for (l, (fi, fo, w, b)) in self.layers().enumerate() {
            let mut next = Vec::with_capacity(rows * fo);
            for r in 0..rows {
                next.extend_from_slice(b);
                let y = &mut next[r * fo..(r + 1) * fo];
                affine_acc(&act[r * fi..(r + 1) * fi], w, y);
                if l + 1 < n_layers {
                    relu(y);
                }
            }
            act = next;
        }
        if self.head == Head::Softmax {
            let fo = self.output_dim();
            for r in 0..rows {
                softmax_in_place(&mut act[r * fo..(r + 1) * fo]);
            }
        }
        act
    }

    /// Forward pass keeping every layer's output for a backward pass.
    pub fn trace(&self, input: &[T]) -> Result<Trace<T>> {
        self.check_input(input.len())?;
        let n_layers = self.dims.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        for (l, (fi, _fo, w, b)) in self.layers().enumerate() {
            let mut y = b.to_vec();
            affine_acc(&acts[l][..fi], w, &mut y);
            if l + 1 < n_layers {
                relu(&mut y);
            }
            acts.push(y);
        }
        let output = match self.head {
            Head::Linear => acts.last().unwrap().clone(),
            Head::Softmax => {
                let mut p = acts.last().unwrap().clone();
                softmax_in_place(&mut p);
                p
            }
        };
        Ok(Trace { acts, output })
    }

    /// Exact gradient of `⟨output_gradient, f(input)⟩` with respect to the
    /// parameters.
    pub fn backward(&self, input: &[T], output_gradient: &[T]) -> Result<Gradients<T>> {
        let trace = self.trace(input)?;
        let mut grads = Gradients::zeros(self.num_params());
        self.backward_into(&trace, output_gradient, &mut grads)?;
        Ok(grads)
    }

    /// Accumulates (adds) the parameter gradient for one traced sample.
    pub fn backward_into(
        &self,
        trace: &Trace<T>,
        output_gradient: &[T],
        grads: &mut Gradients<T>,
    ) -> Result<()> {
        if output_gradient.len() != self.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.output_dim(),
                got: output_gradient.len(),
            });
        }
        if grads.0.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                got: grads.0.len(),
            });
        }
        let mut delta: Vec<T> = match self.head {
            Head::Linear => output_gradient.to_vec(),
            Head::Softmax => {
                let p = &trace.output;
                let dot: T = p.iter().zip(output_gradient).map(|(&a, &b)| a * b).sum();
                p.iter()
                    .zip(output_gradient)
                    .map(|(&pi, &gi)| pi * (gi - dot))
                    .collect()
            }
        };

        let n_layers = self.dims.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.dims.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        for l in (0..n_layers).rev() {
            let (fi, fo) = (self.dims[l], self.dims[l + 1]);
            let off = offsets[l];
            let x = &trace.acts[l];
            {
                let gw = &mut grads.0[off..off + fi * fo];
                for i in 0..fi {
                    let xi = x[i];
                    if xi != T::zero() {
                        for (g, &d) in gw[i * fo..(i + 1) * fo].iter_mut().zip(&delta) {
                            *g += xi * d;
                        }
                    }
                }
            }
            for (g, &d) in grads.0[off + fi * fo..off + fi * fo + fo].iter_mut().zip(&delta) {
                *g += d;
            }
            if l > 0 {
                let w = &self.params[off..off + fi * fo];
                let mut prev = vec![T::zero(); fi];
                for i in 0..fi {
                    // ReLU gate: the stored activation is the rectified value.
                    if x[i] > T::zero() {
                        let row = &w[i * fo..(i + 1) * fo];
                        prev[i] = row.iter().zip(&delta).map(|(&a, &b)| a * b).sum();
                    }
                }
                delta = prev;
            }
        }
        Ok(())
    }
}

/// Per-layer outputs from [`DenseNet::trace`]; `acts[0]` is the input and
/// `acts[l]` the rectified output of hidden layer `l`. The last entry holds
/// the logits before any softmax.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub acts: Vec<Vec<T>>,
    pub output: Vec<T>,
}

#[inline]
fn affine_acc<T: Real>(x: &[T], w: &[T], y: &mut [T]) {
    let fo = y.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        for (yo, &wo) in y.iter_mut().zip(&w[i * fo..(i + 1) * fo]) {
            *yo += xi * wo;
        }
    }
}

#[inline]
fn relu<T: Real>(y: &mut [T]) {
    for v in y {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

pub fn softmax_in_place<T: Real>(z: &mut [T]) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// `target ← τ·online + (1−τ)·target`, elementwise.
pub fn soft_update<T: Real>(target: &mut DenseNet<T>, online: &DenseNet<T>, tau: T) -> Result<()> {
    if !target.same_architecture(online) {
        return Err(Error::ArchitectureMismatch);
    }
    if !(tau > T::zero() && tau <= T::one()) {
        return Err(Error::InvalidConfig(format!("soft update rate {tau} outside (0, 1]")));
    }
    if tau == T::one() {
        target.params.copy_from_slice(&online.params);
        return Ok(());
    }
    let keep = T::one() - tau;
    for (t, &o) in target.params.iter_mut().zip(&online.params) {
        *t = tau * o + keep * *t;
    }
    Ok(())
}
