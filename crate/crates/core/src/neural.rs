//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Parameters of a network live in one flat vector, layer by layer, each
//! layer storing an `inputs x outputs` row-major weight block followed by
//! its bias. Gradients, Adam moments and checkpoints share that layout, so
//! optimizer steps and soft updates are plain elementwise loops.
//!
//! Batches are row-major `batch x features` buffers.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
            Activation::Linear => {}
        }
    }

    /// Multiplies `delta` by the derivative, given post-activation values.
    fn backprop(self, out: &[f64], delta: &mut [f64]) {
        match self {
            Activation::Relu => delta.iter_mut().zip(out).for_each(|(d, &a)| {
                if a <= 0.0 {
                    *d = 0.0
                }
            }),
            Activation::Tanh => delta.iter_mut().zip(out).for_each(|(d, &a)| *d *= 1.0 - a * a),
            Activation::Linear => {}
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Layer widths plus one activation per non-input layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub sizes: Vec<usize>,
    pub activations: Vec<Activation>,
}

impl Architecture {
    pub fn new(sizes: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(invalid("architecture", "need n+1 widths for n activations, n >= 1"));
        }
        if sizes.contains(&0) {
            return Err(invalid("architecture", "zero-width layer"));
        }
        Ok(Architecture { sizes, activations })
    }

    /// `input -> hidden... -> output` with one activation for every hidden
    /// layer and another for the output.
    pub fn mlp(input: usize, hidden: &[usize], output: usize, hidden_act: Activation, out_act: Activation) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let mut activations = vec![hidden_act; hidden.len()];
        activations.push(out_act);
        Architecture { sizes, activations }
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn layers(&self) -> usize {
        self.activations.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: Architecture,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// Activations of every layer for one batch, input included.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    values: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.values.last().expect("cache holds at least the input")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// Result of a backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Same layout as [`Mlp::params`].
    pub params: Vec<f64>,
    /// `batch x input` gradient with respect to the network input.
    pub input: Vec<f64>,
}

impl Mlp {
    pub fn zeros(arch: Architecture) -> Self {
        let n = arch.param_count();
        Self::from_params(arch, vec![0.0; n]).expect("length matches by construction")
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        let arch = Architecture::new(arch.sizes, arch.activations)?;
        if params.len() != arch.param_count() {
            return Err(Error::LengthMismatch {
                what: "network parameters",
                expected: arch.param_count(),
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("network parameters", "non-finite value"));
        }
        let mut offsets = Vec::with_capacity(arch.layers() + 1);
        let mut at = 0;
        for w in arch.sizes.windows(2) {
            offsets.push(at);
            at += w[0] * w[1] + w[1];
        }
        offsets.push(at);
        Ok(Mlp { arch, offsets, params })
    }

    /// Weights i.i.d. uniform on `+-1/sqrt(fan_in)`, biases zero.
    pub fn init_uniform<R: Rng + ?Sized>(rng: &mut R, arch: Architecture) -> Self {
        let mut net = Self::zeros(arch);
        for l in 0..net.arch.layers() {
            let bound = 1.0 / (net.arch.sizes[l] as f64).sqrt();
            let (w, _) = net.layer_mut(l);
            for v in w {
                *v = rng.random_range(-bound..=bound);
            }
        }
        net
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.arch.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.arch.sizes.last().expect("validated architecture")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// `(weights, bias)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (fan_in, fan_out) = (self.arch.sizes[l], self.arch.sizes[l + 1]);
        let block = &self.params[self.offsets[l]..self.offsets[l + 1]];
        block.split_at(fan_in * fan_out)
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (fan_in, fan_out) = (self.arch.sizes[l], self.arch.sizes[l + 1]);
        let block = &mut self.params[self.offsets[l]..self.offsets[l + 1]];
        block.split_at_mut(fan_in * fan_out)
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = self.forward_batch(x, 1)?;
        Ok(cache.values.pop().expect("cache holds the output"))
    }

    pub fn forward_batch(&self, x: &[f64], batch: usize) -> Result<ForwardCache> {
        if x.len() != batch * self.input_dim() {
            return Err(Error::LengthMismatch {
                what: "network input",
                expected: batch * self.input_dim(),
                found: x.len(),
            });
        }
        let mut values = Vec::with_capacity(self.arch.layers() + 1);
        values.push(x.to_vec());
        for l in 0..self.arch.layers() {
            let (fan_in, fan_out) = (self.arch.sizes[l], self.arch.sizes[l + 1]);
            let (w, b) = self.layer(l);
            let mut z = Vec::with_capacity(batch * fan_out);
            for _ in 0..batch {
                z.extend_from_slice(b);
            }
            let prev = values.last().expect("nonempty");
            gemm(batch, fan_in, fan_out, Operand::Plain(prev), Operand::Plain(w), &mut z, 1.0);
            self.arch.activations[l].apply(&mut z);
            values.push(z);
        }
        Ok(ForwardCache { batch, values })
    }

    /// Gradients of `sum(upstream . output)` with respect to every
    /// parameter and to the input.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Gradients> {
        let mut params = vec![0.0; self.param_count()];
        let input = self.backward_into(cache, upstream, Some(&mut params), true)?;
        Ok(Gradients {
            params,
            input: input.expect("input gradient requested"),
        })
    }

    /// Like [`Mlp::backward`] but skips whichever half is not needed.
    /// Parameter gradients are added into `param_grads`.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        upstream: &[f64],
        mut param_grads: Option<&mut [f64]>,
        want_input: bool,
    ) -> Result<Option<Vec<f64>>> {
        let batch = cache.batch;
        if cache.values.len() != self.arch.layers() + 1 || cache.values[0].len() != batch * self.input_dim() {
            return Err(Error::ArchitectureMismatch);
        }
        if upstream.len() != batch * self.output_dim() {
            return Err(Error::LengthMismatch {
                what: "upstream gradient",
                expected: batch * self.output_dim(),
                found: upstream.len(),
            });
        }
        if let Some(g) = &param_grads {
            if g.len() != self.param_count() {
                return Err(Error::LengthMismatch {
                    what: "gradient buffer",
                    expected: self.param_count(),
                    found: g.len(),
                });
            }
        }
        let mut delta = upstream.to_vec();
        for l in (0..self.arch.layers()).rev() {
            let (fan_in, fan_out) = (self.arch.sizes[l], self.arch.sizes[l + 1]);
            self.arch.activations[l].backprop(&cache.values[l + 1], &mut delta);
            let prev = &cache.values[l];
            if let Some(g) = param_grads.as_deref_mut() {
                let block = &mut g[self.offsets[l]..self.offsets[l + 1]];
                let (gw, gb) = block.split_at_mut(fan_in * fan_out);
                gemm(
                    fan_in,
                    batch,
                    fan_out,
                    Operand::Transposed(prev),
                    Operand::Plain(&delta),
                    gw,
                    1.0,
                );
                for row in delta.chunks_exact(fan_out) {
                    gb.iter_mut().zip(row).for_each(|(b, d)| *b += d);
                }
            }
            if l == 0 && !want_input {
                return Ok(None);
            }
            let (w, _) = self.layer(l);
            let mut next = vec![0.0; batch * fan_in];
            gemm(batch, fan_out, fan_in, Operand::Plain(&delta), Operand::Transposed(w), &mut next, 0.0);
            delta = next;
        }
        Ok(Some(delta))
    }
}

/// A row-major operand, optionally read transposed.
#[derive(Clone, Copy)]
enum Operand<'a> {
    Plain(&'a [f64]),
    Transposed(&'a [f64]),
}

/// `c = a b + beta c` with `a` logically `m x k`, `b` logically `k x n`
/// and `c` row-major `m x n`.
fn gemm(m: usize, k: usize, n: usize, a: Operand<'_>, b: Operand<'_>, c: &mut [f64], beta: f64) {
    let (a, rsa, csa) = match a {
        Operand::Plain(s) => (s, k as isize, 1),
        Operand::Transposed(s) => (s, 1, m as isize),
    };
    let (b, rsb, csb) = match b {
        Operand::Plain(s) => (s, n as isize, 1),
        Operand::Transposed(s) => (s, 1, k as isize),
    };
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above bound every index the kernel touches for
    // the given dimensions and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Adam moments for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam descent step.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::LengthMismatch {
            what: "adam step",
            expected: params.len(),
            found: grads.len(),
        });
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

/// `target <- beta online + (1 - beta) target`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, beta: f64) -> Result<()> {
    if target.arch != online.arch {
        return Err(Error::ArchitectureMismatch);
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid("soft update rate", beta));
    }
    if beta == 1.0 {
        target.params.copy_from_slice(&online.params);
        return Ok(());
    }
    for (t, &o) in target.params.iter_mut().zip(&online.params) {
        *t = beta * o + (1.0 - beta) * *t;
    }
    Ok(())
}
