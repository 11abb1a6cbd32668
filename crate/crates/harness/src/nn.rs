//! A small fully connected network with manual backpropagation and Adam.
//!
//! Parameters live in one flat vector. Layer `l` stores its weights as an
//! `in × out` block followed by `out` biases, so the forward pass is a
//! sequence of contiguous axpy updates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use rotgrad_core::Real;

use crate::error::{HarnessError, Result};

pub const LEAKY_SLOPE: f64 = 0.01;
pub const CHECKPOINT_FORMAT: &str = "rotgrad-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    sizes: Vec<usize>,
    params: Vec<T>,
}

/// Activations kept by [`Mlp::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct Cache<T> {
    batch: usize,
    /// `inputs[l]` is the input to layer `l`, batch-major.
    inputs: Vec<Vec<T>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Vec<T>>,
}

fn layer_len(n_in: usize, n_out: usize) -> usize {
    n_in * n_out + n_out
}

impl<T: Real> Mlp<T> {
    /// All-zero network.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(HarnessError::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| layer_len(w[0], w[1])).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![T::zero(); n],
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let mut off = 0;
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for p in &mut net.params[off..off + n_in * n_out] {
                *p = T::c(rng.random_range(-limit..limit));
            }
            off += layer_len(n_in, n_out);
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], params: Vec<T>) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(HarnessError::Shape(format!(
                "expected {} parameters for sizes {sizes:?}, got {}",
                net.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(HarnessError::Numeric("non-finite parameter".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two sizes")
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn check_input(&self, input: &[T], batch: usize) -> Result<()> {
        if batch == 0 || input.len() != batch * self.input_dim() {
            return Err(HarnessError::Shape(format!(
                "input of length {} is not {batch} x {}",
                input.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn affine(&self, off: usize, n_in: usize, n_out: usize, a: &[T], batch: usize) -> Vec<T> {
        let w = &self.params[off..off + n_in * n_out];
        let b = &self.params[off + n_in * n_out..off + layer_len(n_in, n_out)];
        let mut z = Vec::with_capacity(batch * n_out);
        for s in 0..batch {
            z.extend_from_slice(b);
            let row = &mut z[s * n_out..];
            for (i, &xi) in a[s * n_in..(s + 1) * n_in].iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                for (zj, &wij) in row.iter_mut().zip(&w[i * n_out..(i + 1) * n_out]) {
                    *zj += xi * wij;
                }
            }
        }
        z
    }

    /// Forward pass over a batch-major input; returns the outputs and a cache.
    pub fn forward(&self, input: &[T], batch: usize) -> Result<(Vec<T>, Cache<T>)> {
        self.check_input(input, batch)?;
        let slope = T::c(LEAKY_SLOPE);
        let mut inputs = vec![input.to_vec()];
        let mut pre = Vec::with_capacity(self.n_layers() - 1);
        let mut off = 0;
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let z = self.affine(off, n_in, n_out, &inputs[l], batch);
            off += layer_len(n_in, n_out);
            if l + 1 == self.n_layers() {
                return Ok((z, Cache { batch, inputs, pre }));
            }
            inputs.push(z.iter().map(|&v| if v > T::zero() { v } else { v * slope }).collect());
            pre.push(z);
        }
        unreachable!("loop returns at the output layer")
    }

    /// Forward pass without keeping activations.
    pub fn predict(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        self.check_input(input, batch)?;
        let slope = T::c(LEAKY_SLOPE);
        let mut a = input.to_vec();
        let mut off = 0;
        for l in 0..self.n_layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            a = self.affine(off, n_in, n_out, &a, batch);
            off += layer_len(n_in, n_out);
            if l + 1 < self.n_layers() {
                a.iter_mut().for_each(|v| {
                    if *v <= T::zero() {
                        *v *= slope
                    }
                });
            }
        }
        Ok(a)
    }

    /// Parameter gradient of `Σ_s ⟨out_grad_s, output_s⟩`.
    ///
    /// The sum runs over the batch; callers wanting a batch mean scale
    /// `out_grad` by `1/batch` first.
    pub fn backward(&self, cache: &Cache<T>, out_grad: &[T]) -> Result<Vec<T>> {
        let batch = cache.batch;
        if out_grad.len() != batch * self.output_dim() || cache.inputs.len() != self.n_layers() {
            return Err(HarnessError::Shape("output gradient does not match cache".into()));
        }
        let slope = T::c(LEAKY_SLOPE);
        let mut grads = vec![T::zero(); self.params.len()];
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |acc, w| {
                let o = *acc;
                *acc += layer_len(w[0], w[1]);
                Some(o)
            })
            .collect();
        let mut dz = out_grad.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a = &cache.inputs[l];
            let w = &self.params[off..off + n_in * n_out];
            {
                let (gw, gb) = grads[off..off + layer_len(n_in, n_out)].split_at_mut(n_in * n_out);
                for s in 0..batch {
                    let dzs = &dz[s * n_out..(s + 1) * n_out];
                    for (gbj, &d) in gb.iter_mut().zip(dzs) {
                        *gbj += d;
                    }
                    for (i, &ai) in a[s * n_in..(s + 1) * n_in].iter().enumerate() {
                        if ai == T::zero() {
                            continue;
                        }
                        for (g, &d) in gw[i * n_out..(i + 1) * n_out].iter_mut().zip(dzs) {
                            *g += ai * d;
                        }
                    }
                }
            }
            if l == 0 {
                break;
            }
            let pre = &cache.pre[l - 1];
            let mut da = vec![T::zero(); batch * n_in];
            for s in 0..batch {
                let dzs = &dz[s * n_out..(s + 1) * n_out];
                for i in 0..n_in {
                    let wi = &w[i * n_out..(i + 1) * n_out];
                    let mut acc = T::zero();
                    for (&wij, &d) in wi.iter().zip(dzs) {
                        acc += wij * d;
                    }
                    let p = pre[s * n_in + i];
                    da[s * n_in + i] = if p > T::zero() { acc } else { acc * slope };
                }
            }
            dz = da;
        }
        Ok(grads)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            sizes: self.sizes.clone(),
            params: self.params.iter().map(|p| p.to_f64_lossy()).collect(),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(HarnessError::Config(format!(
                "unsupported checkpoint {} v{}",
                c.format, c.version
            )));
        }
        Self::from_params(&c.sizes, c.params.iter().map(|&p| T::c(p)).collect())
    }
}

/// JSON checkpoint: a shape header followed by the flat parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: u32,
}

impl<T: Real> Adam<T> {
    pub fn new(n_params: usize, lr: T) -> Self {
        Self {
            lr,
            beta1: T::c(0.9),
            beta2: T::c(0.999),
            eps: T::c(1e-8),
            m: vec![T::zero(); n_params],
            v: vec![T::zero(); n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(HarnessError::Shape("adam state does not match parameters".into()));
        }
        self.t += 1;
        let one = T::one();
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        let step = self.lr / bc1;
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (one - self.beta1) * g;
            *v = self.beta2 * *v + (one - self.beta2) * g * g;
            *p -= step * *m / ((*v / bc2).sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::<f64>::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(net.predict(&[1.0, 2.0, 3.0], 1).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_layer_identity_slice() {
        // Weights are in × out: pick out inputs 0 and 2.
        let params = vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        let net = Mlp::from_params(&[3, 2], params).unwrap();
        assert_eq!(net.predict(&[5.0, 6.0, 7.0], 1).unwrap(), vec![5.0, 7.0]);
    }

    #[test]
    fn linear_gradient_closed_form() {
        let mut g = stream(0, Stream::Init);
        let net = Mlp::<f64>::glorot(&[3, 2], &mut g).unwrap();
        let x = [1.0, -2.0, 0.5];
        let (_, cache) = net.forward(&x, 1).unwrap();
        let dy = [0.3, -1.0];
        let grads = net.backward(&cache, &dy).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(grads[i * 2 + j], x[i] * dy[j]);
            }
        }
        assert_eq!(&grads[6..], &dy);
        let zero = net.backward(&cache, &[0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn forward_and_predict_agree() {
        let mut g = stream(1, Stream::Init);
        let net = Mlp::<f64>::glorot(&[5, 7, 6, 3], &mut g).unwrap();
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        assert_eq!(net.forward(&x, 2).unwrap().0, net.predict(&x, 2).unwrap());
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::<f64>::zeros(&[3, 2]).unwrap();
        assert!(net.predict(&[1.0, 2.0], 1).is_err());
        assert!(Mlp::<f64>::zeros(&[3]).is_err());
        assert!(Mlp::<f64>::from_params(&[3, 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn adam_hand_trace() {
        let mut p = [1.0f64];
        let mut adam = Adam::new(1, 0.1);
        adam.step(&mut p, &[2.0]).unwrap();
        // m̂ = 2, v̂ = 4: step = lr·2/(2 + ε)
        assert!((p[0] - (1.0 - 0.1 * 2.0 / (2.0 + 1e-8))).abs() < 1e-15);
        let p1 = p[0];
        adam.step(&mut p, &[-1.0]).unwrap();
        let m = 0.9 * 0.2 + 0.1 * -1.0;
        let v = 0.999 * 0.004 + 0.001 * 1.0;
        let mhat = m / (1.0 - 0.81);
        let vhat = v / (1.0 - 0.999f64.powi(2));
        assert!((p[0] - (p1 - 0.1 * mhat / (vhat.sqrt() + 1e-8))).abs() < 1e-14);
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut p = [0.5f64, -0.25];
        let mut adam = Adam::new(2, 1e-3);
        adam.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, [0.5, -0.25]);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn adam_constant_gradient_step_tends_to_lr() {
        let mut p = [0.0f64];
        let mut adam = Adam::new(1, 1e-3);
        let mut last = 0.0;
        for _ in 0..5000 {
            let before = p[0];
            adam.step(&mut p, &[-3.0]).unwrap();
            last = p[0] - before;
        }
        assert!((last - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut g = stream(2, Stream::Init);
        let net = Mlp::<f64>::glorot(&[4, 3, 2], &mut g).unwrap();
        let json = serde_json::to_string(&net.to_checkpoint()).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(Mlp::<f64>::from_checkpoint(&back).unwrap(), net);
        let mut bad = back.clone();
        bad.version = 99;
        assert!(Mlp::<f64>::from_checkpoint(&bad).is_err());
    }
}
