//! Small fully connected ReLU network trained with Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

// A near-zero, near-linear starting function: with a few hundred training
// points, full-scale He init leaves a random out-of-sample component that
// training never removes, costing a lot of holdout R².
const HIDDEN_INIT_GAIN: f64 = 0.5;
const OUTPUT_INIT_GAIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

impl Mlp {
    /// Down-scaled He-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: &[usize], output: usize, rng: &mut R) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        let n_params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let mut params = Vec::with_capacity(n_params);
        let n_layers = sizes.len() - 1;
        for (layer, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let gain = if layer + 1 == n_layers { OUTPUT_INIT_GAIN } else { HIDDEN_INIT_GAIN };
            let limit = gain * (6.0 / fan_in.max(1) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self { sizes, params }
    }

    #[cfg(test)]
    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    #[cfg(test)]
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (offset, fan_in, fan_out)
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let start = offset;
            offset += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    /// Forward pass storing every layer's post-activation in `acts`.
    fn forward_cached(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.clear();
        acts.push(x.to_vec());
        let n_layers = self.sizes.len() - 1;
        for (l, (off, fan_in, fan_out)) in self.layers().enumerate() {
            let input = &acts[l];
            let weights = &self.params[off..off + fan_in * fan_out];
            let bias = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            let mut out = Vec::with_capacity(fan_out);
            for o in 0..fan_out {
                let row = &weights[o * fan_in..(o + 1) * fan_in];
                let mut z = bias[o];
                for (w, a) in row.iter().zip(input) {
                    z += w * a;
                }
                out.push(if l + 1 < n_layers { z.max(0.0) } else { z });
            }
            acts.push(out);
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = Vec::with_capacity(self.sizes.len());
        self.forward_cached(x, &mut acts);
        acts.pop().unwrap()
    }

    /// Accumulates parameter gradients for one sample into `grads`.
    fn backward(&self, acts: &[Vec<f64>], grad_out: &[f64], grads: &mut [f64]) {
        let layers: Vec<_> = self.layers().collect();
        let mut delta = grad_out.to_vec();
        for (l, &(off, fan_in, fan_out)) in layers.iter().enumerate().rev() {
            let input = &acts[l];
            let w_end = off + fan_in * fan_out;
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let g_row = &mut grads[off + o * fan_in..off + (o + 1) * fan_in];
                for (g, a) in g_row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grads[w_end + o] += d;
            }
            if l > 0 {
                let weights = &self.params[off..w_end];
                let mut prev = vec![0.0; fan_in];
                for o in 0..fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                        *p += w * d;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Gradient of `loss` w.r.t. all parameters for a single sample.
    #[cfg(test)]
    pub fn gradient<L>(&self, x: &[f64], loss: L) -> (f64, Vec<f64>)
    where
        L: Fn(&[f64]) -> (f64, Vec<f64>),
    {
        let mut acts = Vec::new();
        self.forward_cached(x, &mut acts);
        let (value, grad_out) = loss(acts.last().unwrap());
        let mut grads = vec![0.0; self.params.len()];
        self.backward(&acts, &grad_out, &mut grads);
        (value, grads)
    }

    /// Minibatch Adam over the rows listed in `sample` (repeats allowed).
    ///
    /// `loss` maps `(output, target)` to `(value, d value / d output)`.
    /// Returns the mean training loss of each epoch.
    pub fn train<R, L>(
        &mut self,
        xs: &[Vec<f64>],
        ys: &[f64],
        sample: &[usize],
        opts: &TrainOptions,
        rng: &mut R,
        loss: L,
    ) -> Vec<f64>
    where
        R: Rng + ?Sized,
        L: Fn(&[f64], f64) -> (f64, Vec<f64>),
    {
        let mut adam = Adam::new(self.params.len(), opts.learning_rate, opts.weight_decay);
        let mut order = sample.to_vec();
        let mut grads = vec![0.0; self.params.len()];
        let mut acts = Vec::with_capacity(self.sizes.len());
        let mut history = Vec::with_capacity(opts.epochs);
        let batch = opts.batch_size.max(1);

        for _ in 0..opts.epochs {
            order.shuffle(rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(batch) {
                grads.iter_mut().for_each(|g| *g = 0.0);
                for &i in chunk {
                    self.forward_cached(&xs[i], &mut acts);
                    let (value, grad_out) = loss(acts.last().unwrap(), ys[i]);
                    epoch_loss += value;
                    self.backward(&acts, &grad_out, &mut grads);
                }
                let scale = 1.0 / chunk.len() as f64;
                grads.iter_mut().for_each(|g| *g *= scale);
                adam.step(&mut self.params, &grads);
            }
            history.push(epoch_loss / order.len().max(1) as f64);
        }
        history
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Decoupled (AdamW-style) shrinkage applied to every parameter per step.
    pub weight_decay: f64,
}

struct Adam {
    lr: f64,
    decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(n: usize, lr: f64, decay: f64) -> Self {
        Self { lr, decay, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.decay * *p);
        }
    }
}
