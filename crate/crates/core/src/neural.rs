//! From-scratch fully-connected network for the WF-to-optimal precoder map.
//!
//! A precoder is fed to the network as `[vec(Re G); vec(Im G)]` with
//! column-major `vec`, so input and output layers have size `2 M^2`. Every
//! layer, including the output, applies `tanh`; training is plain mini-batch
//! SGD on the squared-norm loss with exact reverse-mode gradients. Because
//! `tanh` bounds raw outputs in (-1, 1) while optimal precoder entries reach
//! `sqrt(M)`, training targets are scaled by `1/sqrt(M)`; inference undoes the
//! scale and rescales the reshaped matrix to full power, which also makes any
//! fixed positive target scaling transparent to the final precoder.
//!
//! Training is single-threaded and deterministic: a seeded shuffle per epoch,
//! batches in order, fixed accumulation order.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::mimo::{normalize_matrix_power, wf_precoder, ChannelMatrix, Precoder};

/// Activation applied at every layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation value.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Self::Tanh => 1.0 - a * a,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tanh => f.write_str("tanh"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Self::Tanh),
            other => Err(Error::ModelFormat(format!("unknown activation `{other}`"))),
        }
    }
}

/// Layer sizes `L_0, ..., L_{P+1}` plus the activation tag.
///
/// Input and output sizes must match (both hold a vectorized precoder) and at
/// least one hidden layer is required.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    sizes: Vec<usize>,
    activation: Activation,
}

impl LayerSpec {
    pub fn new(sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if sizes.len() < 3 {
            return Err(Error::InvalidConfig("need at least one hidden layer"));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidConfig("layer sizes must be positive"));
        }
        if sizes.first() != sizes.last() {
            return Err(Error::InvalidConfig("input and output sizes must match"));
        }
        Ok(Self { sizes, activation })
    }

    /// The architecture used for the precoder map at transmit dimension `m`:
    /// input/output `2 m^2`, two hidden layers of twice that size.
    pub fn for_precoder(m: usize) -> Self {
        let io = 2 * m * m;
        Self {
            sizes: vec![io, 2 * io, 2 * io, io],
            activation: Activation::Tanh,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Number of weighted layers (`P + 1`).
    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }
}

/// Weights `W_p` (shape `L_{p-1} x L_p`, row-major) and biases `b_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    spec: LayerSpec,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Xavier-uniform initialization: `W_p ~ U(+-sqrt(6 / (L_{p-1} + L_p)))`,
/// biases zero. Deterministic for a given seed.
pub fn init_xavier(spec: &LayerSpec, seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(spec.layer_count());
    let mut biases = Vec::with_capacity(spec.layer_count());
    for p in 0..spec.layer_count() {
        let (fan_in, fan_out) = (spec.sizes[p], spec.sizes[p + 1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        weights.push(w);
        biases.push(vec![0.0; fan_out]);
    }
    MlpModel {
        spec: spec.clone(),
        weights,
        biases,
    }
}

impl MlpModel {
    /// Builds a model from explicit parameters, validating shapes against the
    /// spec.
    pub fn from_parameters(
        spec: &LayerSpec,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if weights.len() != spec.layer_count() || biases.len() != spec.layer_count() {
            return Err(Error::DimensionMismatch("parameter count vs layer count"));
        }
        for p in 0..spec.layer_count() {
            if weights[p].len() != spec.sizes[p] * spec.sizes[p + 1] {
                return Err(Error::BadVectorLength {
                    expected: spec.sizes[p] * spec.sizes[p + 1],
                    got: weights[p].len(),
                });
            }
            if biases[p].len() != spec.sizes[p + 1] {
                return Err(Error::BadVectorLength {
                    expected: spec.sizes[p + 1],
                    got: biases[p].len(),
                });
            }
            if weights[p].iter().chain(&biases[p]).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("model parameters"));
            }
        }
        Ok(Self {
            spec: spec.clone(),
            weights,
            biases,
        })
    }

    pub fn layer_spec(&self) -> &LayerSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    /// Exact reverse-mode gradient of `||forward(input) - target||^2` with
    /// respect to every weight and bias.
    pub fn loss_gradient(
        &self,
        input: &[f64],
        target: &[f64],
    ) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        self.check_input(input)?;
        if target.len() != self.spec.output_len() {
            return Err(Error::BadVectorLength {
                expected: self.spec.output_len(),
                got: target.len(),
            });
        }
        let mut grad_w: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut grad_b: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        self.accumulate_gradient(input, target, &mut grad_w, &mut grad_b);
        Ok((grad_w, grad_b))
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.spec.input_len() {
            return Err(Error::BadVectorLength {
                expected: self.spec.input_len(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Single forward pass: `a_p = tanh(W_p^T a_{p-1} + b_p)`.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.activations(input).pop().unwrap())
    }

    /// Activations of every layer, `a_0` through `a_{P+1}`.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.spec.layer_count() + 1);
        acts.push(input.to_vec());
        for p in 0..self.spec.layer_count() {
            let (fan_in, fan_out) = (self.spec.sizes[p], self.spec.sizes[p + 1]);
            let w = &self.weights[p];
            let prev = &acts[p];
            let mut next = self.biases[p].clone();
            for i in 0..fan_in {
                let a = prev[i];
                if a == 0.0 {
                    continue;
                }
                let row = &w[i * fan_out..(i + 1) * fan_out];
                for (n, wij) in next.iter_mut().zip(row) {
                    *n += a * wij;
                }
            }
            for n in next.iter_mut() {
                *n = self.spec.activation.apply(*n);
            }
            acts.push(next);
        }
        acts
    }

    /// Accumulates the gradient of `||forward(input) - target||^2` into
    /// `grad_w`/`grad_b` (same shapes as the parameters). Returns the loss.
    fn accumulate_gradient(
        &self,
        input: &[f64],
        target: &[f64],
        grad_w: &mut [Vec<f64>],
        grad_b: &mut [Vec<f64>],
    ) -> f64 {
        let acts = self.activations(input);
        let output = acts.last().unwrap();
        let loss: f64 = output
            .iter()
            .zip(target)
            .map(|(o, t)| (o - t) * (o - t))
            .sum();

        // delta at the output: 2 (o - t) .* act'(o)
        let mut delta: Vec<f64> = output
            .iter()
            .zip(target)
            .map(|(o, t)| 2.0 * (o - t) * self.spec.activation.derivative_from_output(*o))
            .collect();

        for p in (0..self.spec.layer_count()).rev() {
            let (fan_in, fan_out) = (self.spec.sizes[p], self.spec.sizes[p + 1]);
            let prev = &acts[p];
            let gw = &mut grad_w[p];
            for i in 0..fan_in {
                let a = prev[i];
                let row = &mut gw[i * fan_out..(i + 1) * fan_out];
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g += a * d;
                }
            }
            for (g, d) in grad_b[p].iter_mut().zip(&delta) {
                *g += d;
            }
            if p > 0 {
                let w = &self.weights[p];
                let mut prev_delta = vec![0.0; fan_in];
                for i in 0..fan_in {
                    let row = &w[i * fan_out..(i + 1) * fan_out];
                    let mut acc = 0.0;
                    for (wij, d) in row.iter().zip(&delta) {
                        acc += wij * d;
                    }
                    prev_delta[i] = acc * self.spec.activation.derivative_from_output(prev[i]);
                }
                delta = prev_delta;
            }
        }
        loss
    }

    /// Writes the versioned text format; round-trips bit-exactly.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("FAPRE-MLP v1\n");
        let sizes: Vec<String> = self.spec.sizes.iter().map(|s| s.to_string()).collect();
        out.push_str(&sizes.join(" "));
        out.push('\n');
        out.push_str(&self.spec.activation.to_string());
        out.push('\n');
        for p in 0..self.spec.layer_count() {
            let (fan_in, fan_out) = (self.spec.sizes[p], self.spec.sizes[p + 1]);
            for i in 0..fan_in {
                let row: Vec<String> = (0..fan_out)
                    .map(|j| format_f64(self.weights[p][i * fan_out + j]))
                    .collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
            let bias: Vec<String> = self.biases[p].iter().map(|b| format_f64(*b)).collect();
            out.push_str(&bias.join(" "));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let magic = lines
            .next()
            .ok_or_else(|| Error::ModelFormat("empty file".into()))?;
        if magic.trim() != "FAPRE-MLP v1" {
            return Err(Error::ModelFormat(format!("bad magic line `{magic}`")));
        }
        let sizes: Vec<usize> = lines
            .next()
            .ok_or_else(|| Error::ModelFormat("missing layer sizes".into()))?
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::ModelFormat(format!("layer size `{t}`: {e}")))
            })
            .collect::<Result<_>>()?;
        let activation: Activation = lines
            .next()
            .ok_or_else(|| Error::ModelFormat("missing activation".into()))?
            .trim()
            .parse()?;
        let spec = LayerSpec::new(sizes, activation)?;

        let mut parse_row = |expected: usize, what: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::ModelFormat(format!("missing {what}")))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::ModelFormat(format!("value `{t}`: {e}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != expected {
                return Err(Error::ModelFormat(format!(
                    "{what}: expected {expected} values, got {}",
                    row.len()
                )));
            }
            Ok(row)
        };

        let mut weights = Vec::with_capacity(spec.layer_count());
        let mut biases = Vec::with_capacity(spec.layer_count());
        for p in 0..spec.layer_count() {
            let (fan_in, fan_out) = (spec.sizes[p], spec.sizes[p + 1]);
            let mut w = Vec::with_capacity(fan_in * fan_out);
            for i in 0..fan_in {
                w.extend(parse_row(fan_out, &format!("weight row {i} of layer {p}"))?);
            }
            weights.push(w);
            biases.push(parse_row(fan_out, &format!("bias of layer {p}"))?);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(Error::ModelFormat("trailing content".into()));
        }
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }
}

/// 17 significant digits; enough to round-trip any f64 exactly.
fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Fraction of the dataset used for training when splitting.
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 10,
            learning_rate: 0.005,
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("train fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Mini-batch SGD on the squared-norm loss.
///
/// Initializes with Xavier from `cfg.seed`, reshuffles each epoch with the
/// same seeded stream, and applies the mean gradient of each batch (the last
/// short batch is kept). Returns the model and the per-epoch mean sample loss.
pub fn train_sgd(
    data: &[(Vec<f64>, Vec<f64>)],
    spec: &LayerSpec,
    cfg: &TrainConfig,
) -> Result<(MlpModel, Vec<f64>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for (input, target) in data {
        if input.len() != spec.input_len() {
            return Err(Error::BadVectorLength {
                expected: spec.input_len(),
                got: input.len(),
            });
        }
        if target.len() != spec.output_len() {
            return Err(Error::BadVectorLength {
                expected: spec.output_len(),
                got: target.len(),
            });
        }
    }

    let mut model = init_xavier(spec, cfg.seed);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(crate::rng::derive_seed(cfg.seed, 1));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    let mut grad_w: Vec<Vec<f64>> = model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut grad_b: Vec<Vec<f64>> = model.biases.iter().map(|b| vec![0.0; b.len()]).collect();

    for _ in 0..cfg.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            for g in grad_w.iter_mut().chain(grad_b.iter_mut()) {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            for &idx in batch {
                let (input, target) = &data[idx];
                epoch_loss += model.accumulate_gradient(input, target, &mut grad_w, &mut grad_b);
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for p in 0..model.weights.len() {
                for (w, g) in model.weights[p].iter_mut().zip(&grad_w[p]) {
                    *w -= scale * g;
                }
                for (b, g) in model.biases[p].iter_mut().zip(&grad_b[p]) {
                    *b -= scale * g;
                }
            }
        }
        history.push(epoch_loss / data.len() as f64);
    }
    Ok((model, history))
}

/// `[vec(Re G); vec(Im G)]` with column-major `vec`, length `2 M^2`.
pub fn vectorize_precoder(g: &Precoder) -> Vec<f64> {
    let entries = g.matrix().vec_column_major();
    let mut out = Vec::with_capacity(2 * entries.len());
    out.extend(entries.iter().map(|z| z.re));
    out.extend(entries.iter().map(|z| z.im));
    out
}

/// Exact inverse of [`vectorize_precoder`]. The reshaped matrix must satisfy
/// the power budget; raw network outputs go through
/// [`devectorize_raw`] + [`normalize_matrix_power`] instead.
pub fn devectorize_precoder(v: &[f64], m: usize) -> Result<Precoder> {
    Precoder::new(devectorize_raw(v, m)?)
}

/// Reshapes a real vector of length `2 M^2` into a complex matrix without any
/// feasibility check.
pub fn devectorize_raw(v: &[f64], m: usize) -> Result<ComplexMatrix> {
    let half = m * m;
    if v.len() != 2 * half {
        return Err(Error::BadVectorLength {
            expected: 2 * half,
            got: v.len(),
        });
    }
    let entries: Vec<Complex64> = (0..half)
        .map(|i| Complex64::new(v[i], v[half + i]))
        .collect();
    ComplexMatrix::from_vec_column_major(m, m, &entries)
}

/// Maps a channel to a finite-alphabet precoder with one forward pass:
/// water-fill, vectorize, propagate, reshape, rescale to full power.
pub fn infer_precoder(model: &MlpModel, h: &ChannelMatrix) -> Result<Precoder> {
    let m = h.transmit_dim();
    if model.spec.input_len() != 2 * m * m {
        return Err(Error::BadVectorLength {
            expected: model.spec.input_len(),
            got: 2 * m * m,
        });
    }
    let g_wf = wf_precoder(h)?;
    let input = vectorize_precoder(&g_wf);
    let output = model.forward(&input)?;
    let unscaled: Vec<f64> = output.iter().map(|o| o * (m as f64).sqrt()).collect();
    let raw = devectorize_raw(&unscaled, m)?;
    normalize_matrix_power(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn toy_spec() -> LayerSpec {
        LayerSpec::new(vec![4, 3, 4], Activation::Tanh).unwrap()
    }

    #[test]
    fn vectorize_ordering_example() {
        // G = [[1, 3i], [2, 4]] -> (1, 2, 0, 4, 0, 0, 3, 0)
        let g = Precoder::new(
            ComplexMatrix::new(
                2,
                2,
                vec![c(1.0, 0.0), c(0.0, 3.0), c(2.0, 0.0), c(4.0, 0.0)],
            )
            .unwrap()
            .scale(0.2), // scale into the power budget; ordering is unaffected
        )
        .unwrap();
        let v = vectorize_precoder(&g);
        let expected = [1.0, 2.0, 0.0, 4.0, 0.0, 0.0, 3.0, 0.0].map(|x| x * 0.2);
        assert_eq!(v, expected);
    }

    #[test]
    fn vectorize_scalar_example() {
        let g = Precoder::new(ComplexMatrix::new(1, 1, vec![c(0.6, 0.8)]).unwrap()).unwrap();
        assert_eq!(vectorize_precoder(&g), vec![0.6, 0.8]);
    }

    #[test]
    fn devectorize_rejects_wrong_length() {
        assert!(matches!(
            devectorize_precoder(&[0.0; 7], 2),
            Err(Error::BadVectorLength { .. })
        ));
    }

    proptest! {
        #[test]
        fn vectorize_round_trip(entries in proptest::collection::vec(-0.5f64..0.5, 8)) {
            let raw = devectorize_raw(&entries, 2).unwrap();
            let g = Precoder::new(raw).unwrap();
            let v = vectorize_precoder(&g);
            let back = devectorize_precoder(&v, 2).unwrap();
            prop_assert_eq!(back.matrix(), g.matrix());
        }
    }

    #[test]
    fn xavier_is_seeded_and_bounded() {
        let spec = LayerSpec::for_precoder(2);
        let a = init_xavier(&spec, 9);
        let b = init_xavier(&spec, 9);
        assert_eq!(a, b);
        for (p, w) in a.weights().iter().enumerate() {
            let bound = (6.0 / (spec.sizes()[p] + spec.sizes()[p + 1]) as f64).sqrt();
            assert!(w.iter().all(|x| x.abs() <= bound));
        }
        assert!(a.biases().iter().all(|b| b.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn xavier_variance_matches_uniform_law() {
        // var of U(-a, a) is a^2/3 = 2 / (fan_in + fan_out)
        let spec = LayerSpec::new(vec![100, 120, 100], Activation::Tanh).unwrap();
        let model = init_xavier(&spec, 4);
        let w = &model.weights()[0];
        let mean: f64 = w.iter().sum::<f64>() / w.len() as f64;
        let var: f64 = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / w.len() as f64;
        let expected = 2.0 / (100.0 + 120.0);
        assert!(
            (var - expected).abs() / expected < 0.1,
            "var {var} vs {expected}"
        );
        assert!(w.len() >= 10_000);
    }

    #[test]
    fn forward_closed_forms() {
        let spec = toy_spec();
        let mut model = init_xavier(&spec, 0);
        for w in model.weights.iter_mut().chain(model.biases.iter_mut()) {
            w.iter_mut().for_each(|x| *x = 0.0);
        }
        let out = model.forward(&[0.3, -0.1, 0.9, 0.0]).unwrap();
        assert!(out.iter().all(|&x| x == 0.0));

        // 1-1 network: single weight 1, bias 0 -> tanh(0.5)
        let spec = LayerSpec::new(vec![1, 1, 1], Activation::Tanh).unwrap();
        let mut model = init_xavier(&spec, 0);
        model.weights[0][0] = 1.0;
        model.weights[1][0] = 1.0;
        let out = model.forward(&[0.5]).unwrap();
        assert!((out[0] - 0.5_f64.tanh().tanh()).abs() < 1e-15);

        assert!(matches!(
            model.forward(&[0.5, 0.5]),
            Err(Error::BadVectorLength { .. })
        ));
    }

    #[test]
    fn outputs_stay_in_the_open_unit_interval() {
        let spec = LayerSpec::for_precoder(2);
        let model = init_xavier(&spec, 33);
        let big: Vec<f64> = (0..8).map(|i| (i as f64 - 4.0) * 100.0).collect();
        let out = model.forward(&big).unwrap();
        assert!(out.iter().all(|&x| x > -1.0 && x < 1.0));
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let spec = toy_spec();
        let model = init_xavier(&spec, 42);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let input: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let target: Vec<f64> = (0..4).map(|_| rng.random_range(-0.8..0.8)).collect();

            let mut grad_w: Vec<Vec<f64>> =
                model.weights.iter().map(|w| vec![0.0; w.len()]).collect();
            let mut grad_b: Vec<Vec<f64>> =
                model.biases.iter().map(|b| vec![0.0; b.len()]).collect();
            model.accumulate_gradient(&input, &target, &mut grad_w, &mut grad_b);

            let loss_of = |m: &MlpModel| -> f64 {
                let out = m.forward(&input).unwrap();
                out.iter().zip(&target).map(|(o, t)| (o - t) * (o - t)).sum()
            };
            let h = 1e-5;
            let mut num = 0.0;
            let mut den = 0.0;
            for p in 0..model.weights.len() {
                for i in 0..model.weights[p].len() {
                    let mut plus = model.clone();
                    plus.weights[p][i] += h;
                    let mut minus = model.clone();
                    minus.weights[p][i] -= h;
                    let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                    num += (fd - grad_w[p][i]).powi(2);
                    den += grad_w[p][i].powi(2);
                }
                for i in 0..model.biases[p].len() {
                    let mut plus = model.clone();
                    plus.biases[p][i] += h;
                    let mut minus = model.clone();
                    minus.biases[p][i] -= h;
                    let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                    num += (fd - grad_b[p][i]).powi(2);
                    den += grad_b[p][i].powi(2);
                }
            }
            let rel = (num / den.max(1e-300)).sqrt();
            assert!(rel <= 1e-6, "relative gradient error {rel}");
        }
    }

    #[test]
    fn training_overfits_a_toy_set() {
        // 10 samples of a smooth map through a wide hidden layer; 2000 epochs
        // must drive the fit below 1e-3 (threshold pinned from a reference run).
        let spec = LayerSpec::new(vec![4, 16, 4], Activation::Tanh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mix: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
            .map(|_| {
                let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..4)
                    .map(|j| {
                        let z: f64 = (0..4).map(|i| mix[j * 4 + i] * x[i]).sum();
                        (0.8 * z).tanh() * 0.7
                    })
                    .collect();
                (x, y)
            })
            .collect();
        let cfg = TrainConfig {
            epochs: 2000,
            batch_size: 10,
            learning_rate: 0.05,
            seed: 7,
            ..TrainConfig::default()
        };
        let (_, history) = train_sgd(&data, &spec, &cfg).unwrap();
        let final_loss = *history.last().unwrap();
        assert!(final_loss <= 1e-3, "final loss {final_loss}");
    }

    #[test]
    fn training_is_deterministic() {
        let spec = toy_spec();
        let data = vec![
            (vec![0.1, 0.2, -0.3, 0.4], vec![0.0, 0.1, 0.0, -0.1]),
            (vec![-0.5, 0.25, 0.3, -0.4], vec![0.2, 0.0, -0.2, 0.0]),
            (vec![0.7, -0.2, 0.1, 0.0], vec![0.1, 0.1, 0.0, 0.0]),
        ];
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 2,
            learning_rate: 0.01,
            seed: 11,
            ..TrainConfig::default()
        };
        let (a, ha) = train_sgd(&data, &spec, &cfg).unwrap();
        let (b, hb) = train_sgd(&data, &spec, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert!(matches!(
            train_sgd(&[], &spec, &cfg),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn model_file_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let spec = LayerSpec::for_precoder(2);
        let model = init_xavier(&spec, 123);
        model.save(&path).unwrap();
        let loaded = MlpModel::load(&path).unwrap();
        assert_eq!(model, loaded);

        let garbled = dir.path().join("bad.txt");
        std::fs::write(&garbled, "NOT-A-MODEL\n").unwrap();
        assert!(matches!(MlpModel::load(&garbled), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn inference_returns_full_power_and_is_pure() {
        let spec = LayerSpec::for_precoder(2);
        let model = init_xavier(&spec, 3);
        let h = ChannelMatrix::from_matrix(
            ComplexMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 1.0]).unwrap(),
        )
        .unwrap();
        let a = infer_precoder(&model, &h).unwrap();
        let b = infer_precoder(&model, &h).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!((a.power() - 2.0).abs() <= 2.0 * crate::mimo::POWER_TOL);

        let h1 = ChannelMatrix::from_matrix(ComplexMatrix::identity(1)).unwrap();
        assert!(matches!(
            infer_precoder(&model, &h1),
            Err(Error::BadVectorLength { .. })
        ));
    }

    #[test]
    fn layer_spec_validation() {
        assert!(LayerSpec::new(vec![4, 4], Activation::Tanh).is_err());
        assert!(LayerSpec::new(vec![4, 0, 4], Activation::Tanh).is_err());
        assert!(LayerSpec::new(vec![4, 3, 5], Activation::Tanh).is_err());
        let spec = LayerSpec::for_precoder(2);
        assert_eq!(spec.sizes(), &[8, 16, 16, 8]);
    }
}
