//! Dense tanh network with batched forward/backward passes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::rng::StreamRng;

/// `C = alpha·A·B + beta·C` over strided row/column layouts.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    let last = |rows: usize, cols: usize, rs: usize, cs: usize| (rows - 1) * rs + (cols - 1) * cs;
    assert!(c.len() > last(m, n, rsc, csc));
    if k > 0 {
        assert!(a.len() > last(m, k, rsa, csa));
        assert!(b.len() > last(k, n, rsb, csb));
    }
    // SAFETY: every index the kernel touches lies within the asserted bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    weights: usize,
    bias: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Fully connected network. Hidden layers use tanh, the head is linear.
///
/// Parameters are stored flat, layer by layer: the `fan_in × fan_out`
/// weight matrix (row-major, so a batch forward is `X·W`) followed by the
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    layers: Vec<Layer>,
    pub params: Vec<f64>,
}

/// Per-layer activations of the last batch forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    batch: usize,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    back: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

fn layout(widths: &[usize]) -> (Vec<Layer>, usize) {
    let mut layers = Vec::with_capacity(widths.len().saturating_sub(1));
    let mut at = 0;
    for w in widths.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        layers.push(Layer {
            weights: at,
            bias: at + fan_in * fan_out,
            fan_in,
            fan_out,
        });
        at += fan_in * fan_out + fan_out;
    }
    (layers, at)
}

impl Mlp {
    /// All-zero network.
    pub fn zeros(widths: &[usize]) -> Result<Mlp> {
        if widths.len() < 2 || widths.iter().any(|w| *w == 0) {
            return Err(Error::InvalidConfig("network needs at least two non-zero widths".into()));
        }
        let (layers, count) = layout(widths);
        Ok(Mlp {
            widths: widths.to_vec(),
            layers,
            params: vec![0.0; count],
        })
    }

    /// Gaussian weights with variance `1 / fan_in` (head scaled by
    /// `head_gain`), zero biases.
    pub fn init(widths: &[usize], head_gain: f64, rng: &mut StreamRng) -> Result<Mlp> {
        let mut net = Mlp::zeros(widths)?;
        let last = net.layers.len() - 1;
        for (i, l) in net.layers.clone().into_iter().enumerate() {
            let gain = if i == last { head_gain } else { 1.0 };
            let scale = gain / math::sqrt(l.fan_in as f64);
            for w in &mut net.params[l.weights..l.bias] {
                *w = scale * rng.normal();
            }
        }
        Ok(net)
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Result<Mlp> {
        let mut net = Mlp::zeros(widths)?;
        if params.len() != net.params.len() {
            return Err(Error::DimensionMismatch {
                what: "network parameters",
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Weight and bias slices of layer `i`.
    pub fn layer(&self, i: usize) -> (&[f64], &[f64]) {
        let l = self.layers[i];
        (
            &self.params[l.weights..l.bias],
            &self.params[l.bias..l.bias + l.fan_out],
        )
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut cache = ForwardCache::default();
        self.forward_batch(x, 1, &mut cache)?;
        Ok(cache.output().to_vec())
    }

    /// Forward pass over `batch` row-major inputs; the result is
    /// `cache.output()` (`batch × output_dim`).
    pub fn forward_batch(&self, x: &[f64], batch: usize, cache: &mut ForwardCache) -> Result<()> {
        if x.len() != batch * self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "network input",
                expected: batch * self.input_dim(),
                got: x.len(),
            });
        }
        cache.batch = batch;
        cache.acts.resize_with(self.widths.len(), Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let (before, after) = cache.acts.split_at_mut(i + 1);
            let input = &before[i];
            let out = &mut after[0];
            out.resize(batch * l.fan_out, 0.0);
            let bias = &self.params[l.bias..l.bias + l.fan_out];
            for row in out.chunks_exact_mut(l.fan_out) {
                row.copy_from_slice(bias);
            }
            gemm(
                batch,
                l.fan_in,
                l.fan_out,
                1.0,
                input,
                (l.fan_in, 1),
                &self.params[l.weights..l.bias],
                (l.fan_out, 1),
                1.0,
                out,
                (l.fan_out, 1),
            );
            if i != last {
                for v in out.iter_mut() {
                    *v = math::tanh(*v);
                }
            }
        }
        Ok(())
    }

    /// Accumulates `∂L/∂params` into `grad` given `∂L/∂output` for the batch
    /// held in `cache`.
    pub fn backward_batch(&self, cache: &mut ForwardCache, d_out: &[f64], grad: &mut [f64]) -> Result<()> {
        let batch = cache.batch;
        if d_out.len() != batch * self.output_dim() {
            return Err(Error::DimensionMismatch {
                what: "output gradient",
                expected: batch * self.output_dim(),
                got: d_out.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                what: "gradient buffer",
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let mut delta = core::mem::take(&mut cache.delta);
        let mut back = core::mem::take(&mut cache.back);
        delta.clear();
        delta.extend_from_slice(d_out);
        for (i, l) in self.layers.iter().enumerate().rev() {
            let input = &cache.acts[i];
            // dW += Xᵀ·Δ
            gemm(
                l.fan_in,
                batch,
                l.fan_out,
                1.0,
                input,
                (1, l.fan_in),
                &delta,
                (l.fan_out, 1),
                1.0,
                &mut grad[l.weights..l.bias],
                (l.fan_out, 1),
            );
            let db = &mut grad[l.bias..l.bias + l.fan_out];
            for row in delta.chunks_exact(l.fan_out) {
                for (g, d) in db.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if i == 0 {
                break;
            }
            // Δ_prev = (Δ·Wᵀ) ⊙ (1 − h²)
            back.clear();
            back.resize(batch * l.fan_in, 0.0);
            gemm(
                batch,
                l.fan_out,
                l.fan_in,
                1.0,
                &delta,
                (l.fan_out, 1),
                &self.params[l.weights..l.bias],
                (1, l.fan_out),
                0.0,
                &mut back,
                (l.fan_in, 1),
            );
            for (b, h) in back.iter_mut().zip(input) {
                *b *= 1.0 - h * h;
            }
            core::mem::swap(&mut delta, &mut back);
        }
        cache.delta = delta;
        cache.back = back;
        Ok(())
    }
}
