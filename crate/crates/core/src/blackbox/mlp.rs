//! Small feed-forward network: rectifier hidden layers, logistic output,
//! trained on binary cross-entropy with Adam.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{rule_label, Dataset, FeatureVector, Label, Oracle};
use crate::error::{Error, Result};

/// Layer widths, input first.
pub const ARCHITECTURE: [usize; 4] = [4, 11, 11, 1];

const LAYERS: usize = ARCHITECTURE.len() - 1;

/// All parameters live in one flat buffer: per layer, the `out x in`
/// weight matrix (row-major) followed by the `out` biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    params: Vec<f64>,
}

/// Gradient of the loss with respect to every parameter, same layout as
/// [`Mlp::params`].
pub type Gradients = Vec<f64>;

fn layer_offset(layer: usize) -> usize {
    (0..layer)
        .map(|l| ARCHITECTURE[l + 1] * (ARCHITECTURE[l] + 1))
        .sum()
}

fn param_count() -> usize {
    layer_offset(LAYERS)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln s(z) + (1-y) ln(1-s(z))]` without forming `s(z)`.
fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

struct Activations {
    /// Post-activation output of every layer, input included.
    values: [Vec<f64>; LAYERS + 1],
    logit: f64,
}

impl Mlp {
    /// He-initialised weights, zero biases.
    pub fn new_random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; param_count()];
        for l in 0..LAYERS {
            let (fan_in, fan_out) = (ARCHITECTURE[l], ARCHITECTURE[l + 1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let off = layer_offset(l);
            for w in &mut params[off..off + fan_in * fan_out] {
                *w = rng.gen_range(-limit..limit);
            }
        }
        Mlp { params }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, found {}",
                param_count(),
                params.len()
            )));
        }
        Ok(Mlp { params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weights(&self, l: usize) -> &[f64] {
        let off = layer_offset(l);
        &self.params[off..off + ARCHITECTURE[l] * ARCHITECTURE[l + 1]]
    }

    fn biases(&self, l: usize) -> &[f64] {
        let off = layer_offset(l) + ARCHITECTURE[l] * ARCHITECTURE[l + 1];
        &self.params[off..off + ARCHITECTURE[l + 1]]
    }

    fn forward(&self, input: [f64; 4]) -> Activations {
        let mut values: [Vec<f64>; LAYERS + 1] = Default::default();
        values[0] = input.to_vec();
        let mut logit = 0.0;
        for l in 0..LAYERS {
            let (n_in, n_out) = (ARCHITECTURE[l], ARCHITECTURE[l + 1]);
            let w = self.weights(l);
            let b = self.biases(l);
            let mut out = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let z = b[j]
                    + w[j * n_in..(j + 1) * n_in]
                        .iter()
                        .zip(&values[l])
                        .map(|(w, x)| w * x)
                        .sum::<f64>();
                if l + 1 == LAYERS {
                    logit = z;
                    out.push(sigmoid(z));
                } else {
                    out.push(z.max(0.0));
                }
            }
            values[l + 1] = out;
        }
        Activations { values, logit }
    }

    pub fn predict_raw(&self, f: &FeatureVector) -> f64 {
        self.forward(f.to_array()).values[LAYERS][0]
    }

    /// Mean cross-entropy over `batch` and its gradient.
    pub fn loss_and_gradient(&self, batch: &[(FeatureVector, Label)]) -> (f64, Gradients) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        for (f, label) in batch {
            let y = label.value();
            let acts = self.forward(f.to_array());
            loss += bce_with_logit(acts.logit, y);
            // delta holds dLoss/dz for the current layer
            let mut delta = vec![(acts.values[LAYERS][0] - y) * scale];
            for l in (0..LAYERS).rev() {
                let (n_in, n_out) = (ARCHITECTURE[l], ARCHITECTURE[l + 1]);
                let off = layer_offset(l);
                let input = &acts.values[l];
                for j in 0..n_out {
                    for i in 0..n_in {
                        grad[off + j * n_in + i] += delta[j] * input[i];
                    }
                    grad[off + n_in * n_out + j] += delta[j];
                }
                if l > 0 {
                    let w = self.weights(l);
                    delta = (0..n_in)
                        .map(|i| {
                            if input[i] > 0.0 {
                                (0..n_out).map(|j| w[j * n_in + i] * delta[j]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        (loss * scale, grad)
    }

    /// Plain-text weight file; values use the shortest round-trip decimal.
    pub fn to_text(&self) -> String {
        let mut out = String::from("mlp");
        for n in ARCHITECTURE {
            let _ = write!(out, " {n}");
        }
        out.push('\n');
        for l in 0..LAYERS {
            let (n_in, n_out) = (ARCHITECTURE[l], ARCHITECTURE[l + 1]);
            let _ = writeln!(out, "layer {l} {n_out} {n_in}");
            for row in self.weights(l).chunks(n_in) {
                out.push_str(&join(row));
                out.push('\n');
            }
            let _ = writeln!(out, "bias {l} {n_out}");
            out.push_str(&join(self.biases(l)));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected {what}")))
        };

        let (line_no, header) = next("header")?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("mlp") {
            return Err(Error::parse(line_no, "expected `mlp` header"));
        }
        let dims = parse_usizes(fields, line_no)?;
        if dims != ARCHITECTURE {
            return Err(Error::Shape(format!(
                "weight file has layers {dims:?}, expected {ARCHITECTURE:?}"
            )));
        }

        let mut params = Vec::with_capacity(param_count());
        for l in 0..LAYERS {
            let (n_in, n_out) = (ARCHITECTURE[l], ARCHITECTURE[l + 1]);
            let (line_no, head) = next("layer header")?;
            expect_header(head, "layer", l, &[n_out, n_in], line_no)?;
            for _ in 0..n_out {
                let (line_no, row) = next("weight row")?;
                params.extend(parse_row(row, n_in, line_no)?);
            }
            let (line_no, head) = next("bias header")?;
            expect_header(head, "bias", l, &[n_out], line_no)?;
            let (line_no, row) = next("bias values")?;
            params.extend(parse_row(row, n_out, line_no)?);
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::parse(line_no, "trailing content after last layer"));
        }
        Mlp::from_params(params)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

impl Oracle for Mlp {
    fn predict(&self, f: &FeatureVector) -> Result<f64> {
        Ok(self.predict_raw(f))
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_usizes<'a>(fields: impl Iterator<Item = &'a str>, line_no: usize) -> Result<Vec<usize>> {
    fields
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(line_no, format!("invalid integer `{s}`")))
        })
        .collect()
}

fn expect_header(
    line: &str,
    kind: &str,
    layer: usize,
    dims: &[usize],
    line_no: usize,
) -> Result<()> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(kind) {
        return Err(Error::parse(line_no, format!("expected `{kind}` line")));
    }
    let nums = parse_usizes(fields, line_no)?;
    if nums.first() != Some(&layer) {
        return Err(Error::parse(line_no, format!("expected {kind} {layer}")));
    }
    if nums[1..] != *dims {
        return Err(Error::Shape(format!(
            "{kind} {layer} has dimensions {:?}, expected {dims:?}",
            &nums[1..]
        )));
    }
    Ok(())
}

fn parse_row(line: &str, len: usize, line_no: usize) -> Result<Vec<f64>> {
    let values = line
        .split_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("invalid number `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != len {
        return Err(Error::parse(
            line_no,
            format!("expected {len} values, found {}", values.len()),
        ));
    }
    Ok(values)
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    /// Fraction of rows used for training; the rest is held out.
    pub split: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            split: 0.9,
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.005,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: Mlp,
    /// Held-out accuracy against the dataset labels (noise included).
    pub test_accuracy: f64,
    /// Held-out accuracy against the noise-free rule.
    pub clean_test_accuracy: f64,
    pub final_loss: f64,
    pub train_rows: usize,
    pub test_rows: usize,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if !(cfg.split > 0.0 && cfg.split < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split {} outside (0, 1)",
            cfg.split
        )));
    }
    if data.is_empty() || cfg.batch_size == 0 {
        return Err(Error::InvalidArgument(
            "empty dataset or zero batch size".into(),
        ));
    }
    let n_train = ((data.len() as f64) * cfg.split).round() as usize;
    let n_train = n_train.clamp(1, data.len());
    let (train_rows, test_rows) = data.rows.split_at(n_train);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Mlp::new_random(rng.gen());
    let mut m = vec![0.0; model.params.len()];
    let mut v = vec![0.0; model.params.len()];
    let mut step = 0i32;
    let mut order: Vec<usize> = (0..train_rows.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut final_loss = f64::NAN;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| train_rows[i]));
            let (loss, grad) = model.loss_and_gradient(&batch);
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss at epoch {epoch}, step {step}"
                )));
            }
            epoch_loss += loss * batch.len() as f64;
            step += 1;
            let bias1 = 1.0 - ADAM_BETA1.powi(step);
            let bias2 = 1.0 - ADAM_BETA2.powi(step);
            for k in 0..grad.len() {
                m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * grad[k];
                v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * grad[k] * grad[k];
                model.params[k] -=
                    cfg.learning_rate * (m[k] / bias1) / ((v[k] / bias2).sqrt() + ADAM_EPS);
            }
        }
        final_loss = epoch_loss / train_rows.len() as f64;
    }

    let (test_accuracy, clean_test_accuracy) = if test_rows.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mut hits = 0usize;
        let mut clean_hits = 0usize;
        for (f, label) in test_rows {
            let action = model.predict_raw(f).round_ties_even();
            hits += usize::from(action == label.value());
            let truth = rule_label(f).map_or(label.value(), Label::value);
            clean_hits += usize::from(action == truth);
        }
        let n = test_rows.len() as f64;
        (hits as f64 / n, clean_hits as f64 / n)
    };

    Ok(TrainReport {
        model,
        test_accuracy,
        clean_test_accuracy,
        final_loss,
        train_rows: train_rows.len(),
        test_rows: test_rows.len(),
    })
}
