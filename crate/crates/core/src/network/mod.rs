//! Residual convolutional network with a policy head and two identical value
//! heads producing the sigmoid parameters `alpha` and `beta*`, where
//! `beta = c_beta * exp(beta*)`.
//!
//! Everything runs in `f64` on the CPU. Backpropagation is hand-written and
//! checked against central finite differences in the tests.

mod features;
mod io;
mod records;

use nalgebra::{DMatrixView, DMatrixViewMut};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::goban::Symmetry;
use crate::sigmoid::{logistic, KomiContext};

pub use features::InputPlanes;
pub use io::{load_weights, save_weights, WEIGHTS_VERSION};
pub use records::{read_records, write_records, RecordReader, RecordWriter, TrainingRecord};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network configuration: {0}")]
    Config(String),
    #[error("empty training batch")]
    EmptyBatch,
    #[error("non-finite loss (policy {policy}, value {value}, regularization {regularization})")]
    NonFiniteLoss { policy: f64, value: f64, regularization: f64 },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub board_size: usize,
    pub blocks: usize,
    pub filters: usize,
    pub input_planes: usize,
    /// Width of the hidden dense layer in each value head.
    pub value_hidden: usize,
    /// `alpha` is this times the raw head output, so that the head learns
    /// in points rather than hundredths of a point.
    pub c_alpha: f64,
    pub c_beta: f64,
    pub l2_coeff: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            board_size: 7,
            blocks: 3,
            filters: 128,
            input_planes: 17,
            value_hidden: 32,
            c_alpha: 10.0,
            c_beta: 0.1,
            l2_coeff: 1e-4,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |m: &str| Err(NetworkError::Config(m.to_string()));
        if !(crate::goban::MIN_SIZE..=crate::goban::MAX_SIZE).contains(&self.board_size) {
            return bad("board size out of range");
        }
        if self.blocks < 1 || self.filters < 1 || self.value_hidden < 1 {
            return bad("blocks, filters and value_hidden must be at least 1");
        }
        if self.input_planes != 17 && self.input_planes != 18 {
            return bad("input planes must be 17 or 18");
        }
        if !(self.c_alpha > 0.0) || !(self.c_beta > 0.0) || !(self.l2_coeff >= 0.0) {
            return bad("c_alpha and c_beta must be positive and l2_coeff nonnegative");
        }
        Ok(())
    }

    pub fn policy_size(&self) -> usize {
        self.board_size * self.board_size + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub inputs: usize,
    pub outputs: usize,
    pub kernel: usize,
    /// `[outputs][inputs][kernel][kernel]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `[outputs][inputs]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueHead {
    pub conv: Conv,
    pub hidden: Dense,
    pub out: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub input: Conv,
    pub blocks: Vec<[Conv; 2]>,
    pub policy_conv: Conv,
    pub policy_fc: Dense,
    pub alpha_head: ValueHead,
    pub beta_head: ValueHead,
}

impl Conv {
    fn zeros(inputs: usize, outputs: usize, kernel: usize) -> Conv {
        Conv { inputs, outputs, kernel, weight: vec![0.0; outputs * inputs * kernel * kernel], bias: vec![0.0; outputs] }
    }
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Dense {
        Dense { inputs, outputs, weight: vec![0.0; outputs * inputs], bias: vec![0.0; outputs] }
    }
}

impl ValueHead {
    fn zeros(cfg: &NetworkConfig) -> ValueHead {
        let area = cfg.board_size * cfg.board_size;
        ValueHead {
            conv: Conv::zeros(cfg.filters, 1, 1),
            hidden: Dense::zeros(area, cfg.value_hidden),
            out: Dense::zeros(cfg.value_hidden, 1),
        }
    }
}

impl Weights {
    pub fn zeros(cfg: &NetworkConfig) -> Weights {
        let area = cfg.board_size * cfg.board_size;
        Weights {
            input: Conv::zeros(cfg.input_planes, cfg.filters, 3),
            blocks: (0..cfg.blocks)
                .map(|_| [Conv::zeros(cfg.filters, cfg.filters, 3), Conv::zeros(cfg.filters, cfg.filters, 3)])
                .collect(),
            policy_conv: Conv::zeros(cfg.filters, 2, 1),
            policy_fc: Dense::zeros(2 * area, cfg.policy_size()),
            alpha_head: ValueHead::zeros(cfg),
            beta_head: ValueHead::zeros(cfg),
        }
    }

    /// He-style Gaussian initialisation with zero biases. The final layers of
    /// the value heads start small so that `alpha ≈ 0` and `beta ≈ c_beta`.
    pub fn random(cfg: &NetworkConfig, seed: u64) -> Weights {
        let mut w = Weights::zeros(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |v: &mut [f64], fan_in: usize, gain: f64| {
            let normal = Normal::new(0.0, gain * (2.0 / fan_in as f64).sqrt()).expect("valid std");
            v.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
        };
        fill(&mut w.input.weight, cfg.input_planes * 9, 1.0);
        for [a, b] in &mut w.blocks {
            fill(&mut a.weight, cfg.filters * 9, 1.0);
            fill(&mut b.weight, cfg.filters * 9, 0.5);
        }
        let area = cfg.board_size * cfg.board_size;
        fill(&mut w.policy_conv.weight, cfg.filters, 1.0);
        fill(&mut w.policy_fc.weight, 2 * area, 0.1);
        for head in [&mut w.alpha_head, &mut w.beta_head] {
            fill(&mut head.conv.weight, cfg.filters, 1.0);
            fill(&mut head.hidden.weight, area, 1.0);
            fill(&mut head.out.weight, cfg.value_hidden, 0.05);
        }
        w
    }

    /// All parameter tensors in a fixed order (weights before biases, layer by layer).
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = vec![&self.input.weight, &self.input.bias];
        for [a, b] in &self.blocks {
            out.extend([&a.weight, &a.bias, &b.weight, &b.bias]);
        }
        out.extend([&self.policy_conv.weight, &self.policy_conv.bias, &self.policy_fc.weight, &self.policy_fc.bias]);
        for h in [&self.alpha_head, &self.beta_head] {
            out.extend([&h.conv.weight, &h.conv.bias, &h.hidden.weight, &h.hidden.bias, &h.out.weight, &h.out.bias]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = vec![&mut self.input.weight, &mut self.input.bias];
        for [a, b] in &mut self.blocks {
            out.extend([&mut a.weight, &mut a.bias, &mut b.weight, &mut b.bias]);
        }
        out.extend([
            &mut self.policy_conv.weight,
            &mut self.policy_conv.bias,
            &mut self.policy_fc.weight,
            &mut self.policy_fc.bias,
        ]);
        for h in [&mut self.alpha_head, &mut self.beta_head] {
            out.extend([
                &mut h.conv.weight,
                &mut h.conv.bias,
                &mut h.hidden.weight,
                &mut h.hidden.bias,
                &mut h.out.weight,
                &mut h.out.bias,
            ]);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn squared_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|x| x * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkOutput {
    pub policy: Vec<f64>,
    pub alpha: f64,
    pub beta_star: f64,
    pub beta: f64,
}

/// Activations kept for backpropagation. All stored values are post-ReLU
/// where a ReLU follows.
#[derive(Debug, Clone)]
struct Trace {
    input: Vec<f64>,
    stem: Vec<f64>,
    blocks: Vec<(Vec<f64>, Vec<f64>)>,
    policy_conv: Vec<f64>,
    policy: Vec<f64>,
    alpha: HeadTrace,
    beta: HeadTrace,
}

#[derive(Debug, Clone)]
struct HeadTrace {
    conv: Vec<f64>,
    hidden: Vec<f64>,
    out: f64,
}

fn relu(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.max(0.0));
}

fn relu_backward(grad: &mut [f64], activation: &[f64]) {
    for (g, a) in grad.iter_mut().zip(activation) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Unrolls same-padded `k×k` patches: row `(c, ky, kx)`, column = output
/// point, row-major.
fn im2col(input: &[f64], channels: usize, n: usize, k: usize) -> Vec<f64> {
    let area = n * n;
    let half = (k / 2) as isize;
    let mut cols = vec![0.0; channels * k * k * area];
    for c in 0..channels {
        let src = &input[c * area..(c + 1) * area];
        for ky in 0..k {
            let dy = ky as isize - half;
            for kx in 0..k {
                let dx = kx as isize - half;
                let row = &mut cols[((c * k + ky) * k + kx) * area..][..area];
                for y in 0..n {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= n as isize {
                        continue;
                    }
                    for x in 0..n {
                        let sx = x as isize + dx;
                        if sx >= 0 && sx < n as isize {
                            row[y * n + x] = src[sy as usize * n + sx as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Inverse scatter of [`im2col`], accumulating into `out`.
fn col2im(cols: &[f64], channels: usize, n: usize, k: usize, out: &mut [f64]) {
    let area = n * n;
    let half = (k / 2) as isize;
    for c in 0..channels {
        for ky in 0..k {
            let dy = ky as isize - half;
            for kx in 0..k {
                let dx = kx as isize - half;
                let row = &cols[((c * k + ky) * k + kx) * area..][..area];
                for y in 0..n {
                    let sy = y as isize + dy;
                    if sy < 0 || sy >= n as isize {
                        continue;
                    }
                    for x in 0..n {
                        let sx = x as isize + dx;
                        if sx >= 0 && sx < n as isize {
                            out[c * area + sy as usize * n + sx as usize] += row[y * n + x];
                        }
                    }
                }
            }
        }
    }
}

// Row-major buffers are read as their column-major transposes:
// weights (outputs × ik) as ik × outputs, patches (ik × area) as area × ik,
// maps (outputs × area) as area × outputs.

/// Same-padded convolution over `n×n` maps laid out channel-major.
fn conv_forward(conv: &Conv, input: &[f64], n: usize) -> Vec<f64> {
    let area = n * n;
    let ik = conv.inputs * conv.kernel * conv.kernel;
    let mut out: Vec<f64> = conv.bias.iter().flat_map(|&b| std::iter::repeat_n(b, area)).collect();
    let patches = im2col(input, conv.inputs, n, conv.kernel);
    let pt = DMatrixView::from_slice(&patches, area, ik);
    let wt = DMatrixView::from_slice(&conv.weight, ik, conv.outputs);
    DMatrixViewMut::from_slice(&mut out, area, conv.outputs).gemm(1.0, &pt, &wt, 1.0);
    out
}

/// Accumulates parameter gradients into `grad` and, when requested, the
/// input gradient into `d_input`.
fn conv_backward(conv: &Conv, input: &[f64], d_out: &[f64], n: usize, grad: &mut Conv, d_input: Option<&mut [f64]>) {
    let area = n * n;
    let ik = conv.inputs * conv.kernel * conv.kernel;
    for (b, d_o) in grad.bias.iter_mut().zip(d_out.chunks_exact(area)) {
        *b += d_o.iter().sum::<f64>();
    }
    let patches = im2col(input, conv.inputs, n, conv.kernel);
    let pt = DMatrixView::from_slice(&patches, area, ik);
    let dt = DMatrixView::from_slice(d_out, area, conv.outputs);
    DMatrixViewMut::from_slice(&mut grad.weight, ik, conv.outputs).gemm_tr(1.0, &pt, &dt, 1.0);
    if let Some(d_in) = d_input {
        let wt = DMatrixView::from_slice(&conv.weight, ik, conv.outputs);
        let mut d_cols = vec![0.0; ik * area];
        DMatrixViewMut::from_slice(&mut d_cols, area, ik).gemm(1.0, &dt, &wt.transpose(), 0.0);
        col2im(&d_cols, conv.inputs, n, conv.kernel, d_in);
    }
}

fn dense_forward(layer: &Dense, input: &[f64]) -> Vec<f64> {
    (0..layer.outputs)
        .map(|o| {
            let row = &layer.weight[o * layer.inputs..(o + 1) * layer.inputs];
            layer.bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        })
        .collect()
}

fn dense_backward(layer: &Dense, input: &[f64], d_out: &[f64], grad: &mut Dense) -> Vec<f64> {
    let mut d_in = vec![0.0; layer.inputs];
    for (o, &g) in d_out.iter().enumerate() {
        grad.bias[o] += g;
        let row = &layer.weight[o * layer.inputs..(o + 1) * layer.inputs];
        let grow = &mut grad.weight[o * layer.inputs..(o + 1) * layer.inputs];
        for ((gw, x), (w, di)) in grow.iter_mut().zip(input).zip(row.iter().zip(d_in.iter_mut())) {
            *gw += g * x;
            *di += g * w;
        }
    }
    d_in
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub policy: f64,
    pub value: f64,
    pub regularization: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    weights: Weights,
}

impl Network {
    pub fn new(config: NetworkConfig, weights: Weights) -> Result<Network, NetworkError> {
        config.validate()?;
        let expected = Weights::zeros(&config);
        let shapes_match = expected.tensors().iter().zip(weights.tensors()).all(|(a, b)| a.len() == b.len())
            && expected.blocks.len() == weights.blocks.len();
        if !shapes_match {
            return Err(NetworkError::Shape("weights do not match the configuration".into()));
        }
        Ok(Network { config, weights })
    }

    pub fn random(config: NetworkConfig, seed: u64) -> Result<Network, NetworkError> {
        config.validate()?;
        let weights = Weights::random(&config, seed);
        Ok(Network { config, weights })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Weights {
        &mut self.weights
    }

    fn check_planes(&self, planes: &InputPlanes) -> Result<(), NetworkError> {
        let n = self.config.board_size;
        if planes.planes != self.config.input_planes || planes.size != n || planes.bits.len() != planes.planes * n * n {
            return Err(NetworkError::Shape(format!(
                "got {} planes of {}x{}, expected {} planes of {n}x{n}",
                planes.planes, planes.size, planes.size, self.config.input_planes
            )));
        }
        Ok(())
    }

    fn head_forward(&self, head: &ValueHead, features: &[f64]) -> HeadTrace {
        let mut conv = conv_forward(&head.conv, features, self.config.board_size);
        relu(&mut conv);
        let mut hidden = dense_forward(&head.hidden, &conv);
        relu(&mut hidden);
        let out = dense_forward(&head.out, &hidden)[0];
        HeadTrace { conv, hidden, out }
    }

    fn trace(&self, input: Vec<f64>) -> Trace {
        let n = self.config.board_size;
        let w = &self.weights;
        let mut stem = conv_forward(&w.input, &input, n);
        relu(&mut stem);
        let mut blocks = Vec::with_capacity(w.blocks.len());
        let mut current = stem.clone();
        for [a, b] in &w.blocks {
            let mut mid = conv_forward(a, &current, n);
            relu(&mut mid);
            let mut out = conv_forward(b, &mid, n);
            for (o, skip) in out.iter_mut().zip(&current) {
                *o += skip;
            }
            relu(&mut out);
            current = out.clone();
            blocks.push((mid, out));
        }
        let mut policy_conv = conv_forward(&w.policy_conv, &current, n);
        relu(&mut policy_conv);
        let logits = dense_forward(&w.policy_fc, &policy_conv);
        let policy = softmax(&logits);
        let alpha = self.head_forward(&w.alpha_head, &current);
        let beta = self.head_forward(&w.beta_head, &current);
        Trace { input, stem, blocks, policy_conv, policy, alpha, beta }
    }

    fn output(&self, trace: &Trace) -> NetworkOutput {
        NetworkOutput {
            policy: trace.policy.clone(),
            alpha: self.config.c_alpha * trace.alpha.out,
            beta_star: trace.beta.out,
            beta: self.config.c_beta * trace.beta.out.exp(),
        }
    }

    pub fn forward(&self, planes: &InputPlanes) -> Result<NetworkOutput, NetworkError> {
        self.check_planes(planes)?;
        Ok(self.output(&self.trace(planes.to_f64())))
    }

    /// Forward pass on the board transformed by `sym`, with the policy
    /// mapped back to the original orientation.
    pub fn forward_with_symmetry(&self, planes: &InputPlanes, sym: Symmetry) -> Result<NetworkOutput, NetworkError> {
        self.check_planes(planes)?;
        let n = self.config.board_size;
        let mut out = self.output(&self.trace(planes.transformed(sym).to_f64()));
        out.policy = (0..out.policy.len()).map(|j| out.policy[sym.apply_index(j, n)]).collect();
        Ok(out)
    }

    /// Mean over the eight board symmetries: policy mapped back to the
    /// original orientation, `alpha` and `beta*` averaged.
    pub fn forward_symmetrized(&self, planes: &InputPlanes) -> Result<NetworkOutput, NetworkError> {
        self.check_planes(planes)?;
        let n = self.config.board_size;
        let mut policy = vec![0.0; self.config.policy_size()];
        let (mut alpha, mut beta_star) = (0.0, 0.0);
        for sym in Symmetry::all() {
            let out = self.output(&self.trace(planes.transformed(sym).to_f64()));
            for (j, p) in policy.iter_mut().enumerate() {
                *p += out.policy[sym.apply_index(j, n)] / 8.0;
            }
            alpha += out.alpha / 8.0;
            beta_star += out.beta_star / 8.0;
        }
        Ok(NetworkOutput { policy, alpha, beta_star, beta: self.config.c_beta * beta_star.exp() })
    }

    fn head_backward(&self, head: &ValueHead, t: &HeadTrace, features: &[f64], d_out: f64, grad: &mut ValueHead, d_features: &mut [f64]) {
        let n = self.config.board_size;
        let mut d_hidden = dense_backward(&head.out, &t.hidden, &[d_out], &mut grad.out);
        relu_backward(&mut d_hidden, &t.hidden);
        let mut d_conv = dense_backward(&head.hidden, &t.conv, &d_hidden, &mut grad.hidden);
        relu_backward(&mut d_conv, &t.conv);
        conv_backward(&head.conv, features, &d_conv, n, &mut grad.conv, Some(d_features));
    }

    fn backward(&self, t: &Trace, d_logits: &[f64], d_alpha: f64, d_beta_star: f64, grad: &mut Weights) {
        let n = self.config.board_size;
        let w = &self.weights;
        let tower = t.blocks.last().map_or(&t.stem, |(_, out)| out);
        let mut d_tower = vec![0.0; tower.len()];

        let mut d_pconv = dense_backward(&w.policy_fc, &t.policy_conv, d_logits, &mut grad.policy_fc);
        relu_backward(&mut d_pconv, &t.policy_conv);
        conv_backward(&w.policy_conv, tower, &d_pconv, n, &mut grad.policy_conv, Some(&mut d_tower));
        self.head_backward(&w.alpha_head, &t.alpha, tower, d_alpha, &mut grad.alpha_head, &mut d_tower);
        self.head_backward(&w.beta_head, &t.beta, tower, d_beta_star, &mut grad.beta_head, &mut d_tower);

        for b in (0..w.blocks.len()).rev() {
            let block_in = if b == 0 { &t.stem } else { &t.blocks[b - 1].1 };
            let (mid, out) = &t.blocks[b];
            relu_backward(&mut d_tower, out);
            // The skip connection passes the gradient straight through.
            let mut d_in = d_tower.clone();
            let mut d_mid = vec![0.0; mid.len()];
            let [ga, gb] = &mut grad.blocks[b];
            conv_backward(&w.blocks[b][1], mid, &d_tower, n, gb, Some(&mut d_mid));
            relu_backward(&mut d_mid, mid);
            conv_backward(&w.blocks[b][0], block_in, &d_mid, n, ga, Some(&mut d_in));
            d_tower = d_in;
        }
        relu_backward(&mut d_tower, &t.stem);
        conv_backward(&w.input, &t.input, &d_tower, n, &mut grad.input, None);
    }

    /// Mean data loss over `records` plus the L2 term, with its gradient.
    ///
    /// Per record: cross-entropy against the visit distribution plus
    /// `(z - rho(0))²`, where `rho(0) = logistic(beta * (alpha + k̄))` uses the
    /// record's komi seen from its side to move.
    pub fn loss_and_gradient(&self, records: &[TrainingRecord]) -> Result<(LossBreakdown, Weights), NetworkError> {
        if records.is_empty() {
            return Err(NetworkError::EmptyBatch);
        }
        let mut grad = Weights::zeros(&self.config);
        let mut breakdown = LossBreakdown::default();
        let scale = 1.0 / records.len() as f64;
        for record in records {
            self.check_planes(&record.planes)?;
            let target = record.policy_target(self.config.policy_size());
            let trace = self.trace(record.planes.to_f64());
            let policy_loss: f64 = target
                .iter()
                .zip(&trace.policy)
                .filter(|(t, _)| **t > 0.0)
                .map(|(t, p)| -t * p.ln())
                .sum();
            let d_logits: Vec<f64> = trace.policy.iter().zip(&target).map(|(p, t)| scale * (p - t)).collect();

            let kbar = KomiContext::new(record.komi, record.to_move).signed_komi();
            let alpha = self.config.c_alpha * trace.alpha.out;
            let beta = self.config.c_beta * trace.beta.out.exp();
            let shift = alpha + kbar;
            let rho = logistic(beta * shift);
            let z = f64::from(record.z);
            let value_loss = (z - rho) * (z - rho);
            let d_rho = scale * 2.0 * (rho - z);
            let slope = rho * (1.0 - rho);
            let d_alpha = d_rho * slope * beta * self.config.c_alpha;
            let d_beta_star = d_rho * slope * shift * beta;

            self.backward(&trace, &d_logits, d_alpha, d_beta_star, &mut grad);
            breakdown.policy += scale * policy_loss;
            breakdown.value += scale * value_loss;
        }
        let l2 = self.config.l2_coeff;
        breakdown.regularization = l2 * self.weights.squared_norm();
        for (g, w) in grad.tensors_mut().into_iter().zip(self.weights.tensors()) {
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi += 2.0 * l2 * wi;
            }
        }
        breakdown.total = breakdown.policy + breakdown.value + breakdown.regularization;
        if !breakdown.total.is_finite() {
            return Err(NetworkError::NonFiniteLoss {
                policy: breakdown.policy,
                value: breakdown.value,
                regularization: breakdown.regularization,
            });
        }
        Ok((breakdown, grad))
    }

    /// Loss without the gradient pass.
    pub fn loss(&self, records: &[TrainingRecord]) -> Result<LossBreakdown, NetworkError> {
        Ok(self.loss_and_gradient(records)?.0)
    }
}

/// SGD with momentum on the mean batch loss. The gradient is rescaled to
/// at most `clip_norm` in L2 norm before the update; a large `beta` makes the
/// value loss very steep and unclipped steps tend to saturate it for good.
#[derive(Debug, Clone)]
pub struct Trainer {
    velocity: Weights,
    pub momentum: f64,
    pub clip_norm: f64,
}

impl Trainer {
    pub const DEFAULT_CLIP_NORM: f64 = 1.0;

    pub fn new(config: &NetworkConfig, momentum: f64) -> Trainer {
        Trainer { velocity: Weights::zeros(config), momentum, clip_norm: Self::DEFAULT_CLIP_NORM }
    }

    pub fn step(&mut self, net: &mut Network, batch: &[TrainingRecord], lr: f64) -> Result<LossBreakdown, NetworkError> {
        let (loss, grad) = net.loss_and_gradient(batch)?;
        let momentum = self.momentum;
        let norm = grad.squared_norm().sqrt();
        let scale = if norm > self.clip_norm { self.clip_norm / norm } else { 1.0 };
        for ((w, v), g) in net.weights.tensors_mut().into_iter().zip(self.velocity.tensors_mut()).zip(grad.tensors()) {
            for ((wi, vi), gi) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                *vi = momentum * *vi - lr * scale * gi;
                *wi += *vi;
            }
        }
        Ok(loss)
    }
}
