//! Dense ReLU regressor trained with Adam on mean squared error plus an L1 weight penalty.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_units: Vec<usize>,
    pub learning_rate: f64,
    pub l1_alpha: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables early stopping.
    pub patience: usize,
    /// Chronological tail of the training rows held out for early stopping.
    pub val_fraction: f64,
    /// Fit the loss on a standardised target and undo the scaling on output.
    pub standardize_target: bool,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_units: Vec<usize>) -> Self {
        MlpSpec {
            input_dim,
            hidden_units,
            learning_rate: 1e-3,
            l1_alpha: 0.0,
            epochs: 100,
            batch_size: 32,
            seed: 0,
            patience: 10,
            val_fraction: 0.1,
            standardize_target: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_units.contains(&0) {
            return Err(Error::InvalidSpec("layer widths must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.l1_alpha >= 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidSpec("learning rate must be > 0, alpha >= 0, batch size >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::InvalidSpec(format!("val_fraction {} not in [0, 1)", self.val_fraction)));
        }
        Ok(())
    }
}

/// One affine layer; `weights` is `fan_in × fan_out`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "DenseFile", into = "DenseFile")]
pub struct Dense {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DenseFile {
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

impl From<DenseFile> for Dense {
    fn from(f: DenseFile) -> Self {
        Dense {
            fan_in: f.weights.len(),
            fan_out: f.biases.len(),
            weights: f.weights.into_iter().flatten().collect(),
            biases: f.biases,
        }
    }
}

impl From<Dense> for DenseFile {
    fn from(d: Dense) -> Self {
        DenseFile {
            weights: d.weights.chunks(d.fan_out).map(<[f64]>::to_vec).collect(),
            biases: d.biases,
        }
    }
}

impl Dense {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.fan_out + j]
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) {
        self.weights[i * self.fan_out + j] = w;
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, xi) in x.iter().enumerate() {
            let row = &self.weights[i * self.fan_out..(i + 1) * self.fan_out];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

/// Per-layer gradient, same layout as [`Dense`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
}

impl Gradients {
    fn zeros_like(layers: &[Dense]) -> Self {
        Gradients {
            layers: layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    /// Weights then biases, layer by layer; matches [`Mlp::params`].
    pub fn flatten(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean squared error on the fitting rows (standardised target units) after each epoch.
    pub train_loss: Vec<f64>,
    /// Validation RMSE in target units after each epoch.
    #[serde(with = "nullable_vec")]
    pub val_rmse: Vec<f64>,
    pub best_epoch: Option<usize>,
}

/// Network with its input (and optional target) standardiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub layers: Vec<Dense>,
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
    #[serde(with = "nullable")]
    pub best_val_rmse: f64,
    #[serde(default)]
    pub history: TrainHistory,
}

struct Cache {
    /// Input to each layer (standardised input first, then hidden activations).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Vec<f64>>,
    scratch: Vec<f64>,
}

impl Cache {
    fn new(n_layers: usize) -> Self {
        Cache {
            inputs: vec![Vec::new(); n_layers],
            pre: vec![Vec::new(); n_layers.saturating_sub(1)],
            scratch: Vec::new(),
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Mlp {
    /// Glorot-uniform weights from the spec's seed, zero biases, identity standardisers.
    pub fn init(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut dims = vec![spec.input_dim];
        dims.extend(&spec.hidden_units);
        dims.push(1);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Dense {
                    fan_in,
                    fan_out,
                    weights: (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Ok(Mlp {
            input_mean: vec![0.0; spec.input_dim],
            input_scale: vec![1.0; spec.input_dim],
            target_mean: 0.0,
            target_scale: 1.0,
            best_val_rmse: f64::INFINITY,
            history: TrainHistory::default(),
            layers,
            spec,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn set_params(&mut self, params: &[f64]) {
        let mut it = params.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().expect("parameter vector too short");
            }
        }
    }

    fn standardize_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            x.iter()
                .zip(self.input_mean.iter().zip(&self.input_scale))
                .map(|(v, (m, s))| (v - m) / s),
        );
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Network output for an already standardised input, in standardised target units.
    fn forward_cached(&self, xs: &[f64], cache: &mut Cache) -> f64 {
        let last = self.layers.len() - 1;
        cache.inputs[0].clear();
        cache.inputs[0].extend_from_slice(xs);
        for (li, layer) in self.layers.iter().enumerate() {
            let (head, tail) = cache.inputs.split_at_mut(li + 1);
            if li == last {
                layer.affine(&head[li], &mut cache.scratch);
                return cache.scratch[0];
            }
            layer.affine(&head[li], &mut cache.pre[li]);
            let act = &mut tail[0];
            act.clear();
            act.extend(cache.pre[li].iter().map(|z| z.max(0.0)));
        }
        unreachable!("network has an output layer")
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut cache = Cache::new(self.layers.len());
        let mut xs = Vec::with_capacity(x.len());
        self.standardize_into(x, &mut xs);
        let out = self.forward_cached(&xs, &mut cache);
        Ok(self.target_mean + self.target_scale * out)
    }

    /// Hidden pre-activations for one input, for kink screening in gradient checks.
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_dim(x)?;
        let mut cache = Cache::new(self.layers.len());
        let mut xs = Vec::new();
        self.standardize_into(x, &mut xs);
        self.forward_cached(&xs, &mut cache);
        Ok(cache.pre)
    }

    /// Batch loss: mean squared error in standardised target units plus `alpha * sum |w|`.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[f64]) -> Result<f64> {
        let mut cache = Cache::new(self.layers.len());
        let mut buf = Vec::new();
        let mut sse = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            self.check_dim(x)?;
            self.standardize_into(x, &mut buf);
            let out = self.forward_cached(&buf, &mut cache);
            sse += (out - (y - self.target_mean) / self.target_scale).powi(2);
        }
        Ok(sse / ys.len() as f64 + self.l1_penalty())
    }

    fn l1_penalty(&self) -> f64 {
        self.spec.l1_alpha * self.layers.iter().flat_map(|l| &l.weights).map(|w| w.abs()).sum::<f64>()
    }

    /// Exact gradient of [`Mlp::loss`]; the L1 subgradient is 0 at w = 0.
    pub fn grad(&self, xs: &[Vec<f64>], ys: &[f64]) -> Result<Gradients> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::LengthMismatch(xs.len(), ys.len()));
        }
        let mut buf = Vec::new();
        let rows: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| {
                self.check_dim(x)?;
                self.standardize_into(x, &mut buf);
                Ok(buf.clone())
            })
            .collect::<Result<_>>()?;
        let targets: Vec<f64> = ys.iter().map(|y| (y - self.target_mean) / self.target_scale).collect();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let mut g = Gradients::zeros_like(&self.layers);
        let mut cache = Cache::new(self.layers.len());
        self.accumulate_grad(&refs, &targets, &mut g, &mut cache);
        Ok(g)
    }

    /// Gradient over standardised rows into `g` (overwritten).
    fn accumulate_grad(&self, rows: &[&[f64]], targets: &[f64], g: &mut Gradients, cache: &mut Cache) {
        for lg in &mut g.layers {
            lg.weights.iter_mut().for_each(|v| *v = 0.0);
            lg.biases.iter_mut().for_each(|v| *v = 0.0);
        }
        let scale = 2.0 / rows.len() as f64;
        let n_layers = self.layers.len();
        let mut delta: Vec<f64> = Vec::new();
        let mut next: Vec<f64> = Vec::new();
        for (x, t) in rows.iter().zip(targets) {
            let out = self.forward_cached(x, cache);
            delta.clear();
            delta.push(scale * (out - t));
            for li in (0..n_layers).rev() {
                let layer = &self.layers[li];
                let input = &cache.inputs[li];
                let lg = &mut g.layers[li];
                for (b, d) in lg.biases.iter_mut().zip(&delta) {
                    *b += d;
                }
                for (i, xi) in input.iter().enumerate() {
                    if *xi == 0.0 {
                        continue;
                    }
                    let row = &mut lg.weights[i * layer.fan_out..(i + 1) * layer.fan_out];
                    for (w, d) in row.iter_mut().zip(&delta) {
                        *w += xi * d;
                    }
                }
                if li == 0 {
                    break;
                }
                next.clear();
                let pre = &cache.pre[li - 1];
                for i in 0..layer.fan_in {
                    if pre[i] <= 0.0 {
                        next.push(0.0);
                        continue;
                    }
                    let row = &layer.weights[i * layer.fan_out..(i + 1) * layer.fan_out];
                    next.push(row.iter().zip(&delta).map(|(w, d)| w * d).sum());
                }
                std::mem::swap(&mut delta, &mut next);
            }
        }
        let alpha = self.spec.l1_alpha;
        if alpha > 0.0 {
            for (layer, lg) in self.layers.iter().zip(&mut g.layers) {
                for (gw, w) in lg.weights.iter_mut().zip(&layer.weights) {
                    if *w > 0.0 {
                        *gw += alpha;
                    } else if *w < 0.0 {
                        *gw -= alpha;
                    }
                }
            }
        }
    }

    fn adam_step(&mut self, g: &Gradients, state: &mut Adam) {
        state.t += 1;
        let lr = self.spec.learning_rate;
        let bc1 = 1.0 - ADAM_BETA1.powi(state.t);
        let bc2 = 1.0 - ADAM_BETA2.powi(state.t);
        let params = self
            .layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()));
        let grads = g.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases));
        for (((p, gi), m), v) in params.zip(grads).zip(&mut state.m).zip(&mut state.v) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * gi;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * gi * gi;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }

    /// One Adam update on a raw batch; exposed for inspecting the optimiser.
    pub fn adam_single_step(&mut self, xs: &[Vec<f64>], ys: &[f64]) -> Result<()> {
        let g = self.grad(xs, ys)?;
        let n = self.params().len();
        let mut state = Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        };
        self.adam_step(&g, &mut state);
        Ok(())
    }

    /// Trains on rows `x` (chronological) with targets `y`, returning the weights of the
    /// epoch with the best validation RMSE.
    pub fn train(mut self, x: &[Vec<f64>], y: &[f64]) -> Result<Mlp> {
        const MIN_SAMPLES: usize = 10;
        let n = x.len();
        if n != y.len() {
            return Err(Error::LengthMismatch(n, y.len()));
        }
        if n <= MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: MIN_SAMPLES,
                got: n,
            });
        }
        for row in x {
            self.check_dim(row)?;
        }
        if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let n_val = if self.spec.val_fraction > 0.0 {
            ((n as f64 * self.spec.val_fraction).round() as usize).clamp(1, n - 1)
        } else {
            0
        };
        let n_fit = n - n_val;
        self.fit_standardizer(&x[..n_fit], &y[..n_fit]);

        let mut buf = Vec::new();
        let rows: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                self.standardize_into(r, &mut buf);
                buf.clone()
            })
            .collect();
        let targets: Vec<f64> = y.iter().map(|v| (v - self.target_mean) / self.target_scale).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(crate::seed::mix(self.spec.seed ^ 0x5eed_5eed));
        let mut order: Vec<usize> = (0..n_fit).collect();
        let n_params = self.params().len();
        let mut adam = Adam {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        };
        let mut g = Gradients::zeros_like(&self.layers);
        let mut cache = Cache::new(self.layers.len());

        let mut best_layers = self.layers.clone();
        let mut best_val = if n_val > 0 {
            self.rmse_on(&rows[n_fit..], &y[n_fit..], &mut cache)
        } else {
            f64::INFINITY
        };
        let mut best_epoch = None;
        let mut since_best = 0;
        let mut history = TrainHistory::default();
        let mut batch_rows: Vec<&[f64]> = Vec::with_capacity(self.spec.batch_size);
        let mut batch_targets: Vec<f64> = Vec::with_capacity(self.spec.batch_size);

        for epoch in 0..self.spec.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(self.spec.batch_size) {
                batch_rows.clear();
                batch_targets.clear();
                for &i in chunk {
                    batch_rows.push(&rows[i]);
                    batch_targets.push(targets[i]);
                }
                self.accumulate_grad(&batch_rows, &batch_targets, &mut g, &mut cache);
                self.adam_step(&g, &mut adam);
            }
            let mut sse = 0.0;
            for (r, t) in rows[..n_fit].iter().zip(&targets[..n_fit]) {
                sse += (self.forward_cached(r, &mut cache) - t).powi(2);
            }
            history.train_loss.push(sse / n_fit as f64);

            let score = if n_val > 0 {
                self.rmse_on(&rows[n_fit..], &y[n_fit..], &mut cache)
            } else {
                (history.train_loss[epoch]).sqrt() * self.target_scale
            };
            history.val_rmse.push(score);
            if score < best_val || (n_val == 0) {
                best_val = score;
                best_layers.clone_from(&self.layers);
                best_epoch = Some(epoch);
                since_best = 0;
            } else {
                since_best += 1;
                if self.spec.patience > 0 && since_best >= self.spec.patience {
                    break;
                }
            }
        }
        self.layers = best_layers;
        self.best_val_rmse = best_val;
        history.best_epoch = best_epoch;
        self.history = history;
        Ok(self)
    }

    fn rmse_on(&self, rows: &[Vec<f64>], y: &[f64], cache: &mut Cache) -> f64 {
        let mut sse = 0.0;
        for (r, t) in rows.iter().zip(y) {
            let out = self.target_mean + self.target_scale * self.forward_cached(r, cache);
            sse += (out - t).powi(2);
        }
        let rmse = (sse / y.len() as f64).sqrt();
        if rmse.is_finite() {
            rmse
        } else {
            f64::INFINITY
        }
    }

    fn fit_standardizer(&mut self, x: &[Vec<f64>], y: &[f64]) {
        let n = x.len() as f64;
        let p = self.spec.input_dim;
        let (mean, scale) = mean_scale(p, x.iter().map(Vec::as_slice), n);
        self.input_mean = mean;
        self.input_scale = scale;
        if self.spec.standardize_target {
            let m = y.iter().sum::<f64>() / n;
            let s = (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            self.target_mean = m;
            self.target_scale = if s > 0.0 { s } else { 1.0 };
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// JSON has no infinity; a diverged score is written as null and read back as +inf.
mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

mod nullable_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| x.is_finite().then_some(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect())
    }
}

fn mean_scale<'a>(p: usize, rows: impl Iterator<Item = &'a [f64]> + Clone, n: f64) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; p];
    for r in rows.clone() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for r in rows {
        for j in 0..p {
            var[j] += (r[j] - mean[j]).powi(2);
        }
    }
    let scale = var
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(input: usize, hidden: Vec<usize>) -> MlpSpec {
        MlpSpec {
            seed: 42,
            ..MlpSpec::new(input, hidden)
        }
    }

    #[test]
    fn init_is_deterministic_with_expected_shapes() {
        let a = Mlp::init(spec(10, vec![8, 4])).unwrap();
        let b = Mlp::init(spec(10, vec![8, 4])).unwrap();
        assert_eq!(a, b);
        let shapes: Vec<_> = a.layers.iter().map(|l| (l.fan_in, l.fan_out)).collect();
        assert_eq!(shapes, vec![(10, 8), (8, 4), (4, 1)]);
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|b| *b == 0.0)));
        for l in &a.layers {
            let limit = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= limit));
        }
        let c = Mlp::init(MlpSpec { seed: 43, ..spec(10, vec![8, 4]) }).unwrap();
        assert_ne!(a.layers, c.layers);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(Mlp::init(spec(0, vec![2])).is_err());
        assert!(Mlp::init(spec(3, vec![0])).is_err());
        assert!(Mlp::init(MlpSpec { learning_rate: 0.0, ..spec(3, vec![2]) }).is_err());
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut net = Mlp::init(spec(3, vec![4, 2])).unwrap();
        let n = net.params().len();
        net.set_params(&vec![0.0; n]);
        net.layers.last_mut().unwrap().biases[0] = 2.5;
        assert_eq!(net.forward(&[1.0, -7.0, 3.0]).unwrap(), 2.5);
        assert_eq!(net.forward(&[0.0, 0.0, 0.0]).unwrap(), 2.5);
        assert!(matches!(net.forward(&[1.0]), Err(Error::DimensionMismatch { expected: 3, got: 1 })));
    }

    #[test]
    fn hand_computed_two_two_one() {
        let mut net = Mlp::init(spec(2, vec![2])).unwrap();
        // h1 = relu(1*x1 + 2*x2 + 0.5), h2 = relu(-1*x1 + 1*x2 - 1); y = 3 h1 - 2 h2 + 0.25
        net.layers[0].weights = vec![1.0, -1.0, 2.0, 1.0];
        net.layers[0].biases = vec![0.5, -1.0];
        net.layers[1].weights = vec![3.0, -2.0];
        net.layers[1].biases = vec![0.25];
        // x = (1, 2): h1 = 5.5, h2 = relu(0) = 0 -> y = 16.75
        assert_eq!(net.forward(&[1.0, 2.0]).unwrap(), 16.75);
        // x = (0, 3): h1 = 6.5, h2 = 2 -> y = 19.5 - 4 + 0.25
        assert_eq!(net.forward(&[0.0, 3.0]).unwrap(), 15.75);
        // x = (2, -1): h1 = 0.5, h2 relu(-4) = 0 -> gate blocks the second unit
        assert_eq!(net.forward(&[2.0, -1.0]).unwrap(), 1.75);
    }

    fn finite_diff(net: &Mlp, xs: &[Vec<f64>], ys: &[f64], h: f64) -> Vec<f64> {
        let base = net.params();
        (0..base.len())
            .map(|i| {
                let mut p = base.clone();
                p[i] += h;
                let mut a = net.clone();
                a.set_params(&p);
                p[i] -= 2.0 * h;
                let mut b = net.clone();
                b.set_params(&p);
                (a.loss(xs, ys).unwrap() - b.loss(xs, ys).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = Mlp::init(spec(3, vec![5, 4])).unwrap();
        let xs = vec![vec![0.3, -1.2, 0.8], vec![1.5, 0.1, -0.4], vec![-0.7, 0.9, 2.0]];
        let ys = vec![0.5, -1.0, 2.0];
        let g = net.grad(&xs, &ys).unwrap().flatten();
        let fd = finite_diff(&net, &xs, &ys, 1e-5);
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(fd.iter().map(|a| a * a).sum::<f64>().sqrt());
        assert!(num / den < 1e-4, "relative error {}", num / den);
    }

    #[test]
    fn perfect_fit_has_zero_gradient() {
        let net = Mlp::init(spec(2, vec![3])).unwrap();
        let xs = vec![vec![1.0, 2.0], vec![-1.0, 0.5]];
        let ys: Vec<f64> = xs.iter().map(|x| net.forward(x).unwrap()).collect();
        assert_eq!(net.grad(&xs, &ys).unwrap().norm(), 0.0);
    }

    #[test]
    fn l1_subgradient_component() {
        let mut net = Mlp::init(MlpSpec { l1_alpha: 0.01, ..spec(2, vec![3]) }).unwrap();
        // zero data gradient: target equals output
        net.layers[0].weights[0] = 0.7;
        let xs = vec![vec![0.2, 0.1]];
        let ys = vec![net.forward(&xs[0]).unwrap()];
        let g = net.grad(&xs, &ys).unwrap();
        assert!((g.layers[0].weights[0] - 0.01).abs() < 1e-15);
        assert_eq!(g.layers[0].biases[0], 0.0);
    }

    #[test]
    fn first_adam_step_is_scaled_sign() {
        let net = Mlp::init(spec(2, vec![3])).unwrap();
        let xs = vec![vec![0.5, -0.3], vec![1.0, 2.0]];
        let ys = vec![3.0, -2.0];
        let g = net.grad(&xs, &ys).unwrap().flatten();
        let before = net.params();
        let mut stepped = net.clone();
        stepped.adam_single_step(&xs, &ys).unwrap();
        let lr = net.spec.learning_rate;
        for ((b, a), gi) in before.iter().zip(stepped.params()).zip(g) {
            let expected = -lr * gi / (gi.abs() + ADAM_EPS);
            assert!(((a - b) - expected).abs() < 1e-8 * lr.max(1.0));
        }
    }

    fn linear_data(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 / n as f64) * 4.0 - 2.0]).collect();
        let y = x.iter().map(|r| 2.0 * r[0]).collect();
        (x, y)
    }

    #[test]
    fn zero_epochs_keeps_initial_weights() {
        let (x, y) = linear_data(50);
        let net = Mlp::init(MlpSpec { epochs: 0, ..spec(1, vec![4]) }).unwrap();
        let trained = net.clone().train(&x, &y).unwrap();
        assert_eq!(trained.layers, net.layers);
    }

    #[test]
    fn too_few_samples() {
        let (x, y) = linear_data(10);
        let net = Mlp::init(spec(1, vec![4])).unwrap();
        assert!(matches!(net.train(&x, &y), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn learns_a_line() {
        // the validation tail is an extrapolation, so keep all rows for fitting here
        let (x, y) = linear_data(200);
        let net = Mlp::init(MlpSpec {
            epochs: 500,
            learning_rate: 2e-3,
            batch_size: 200,
            val_fraction: 0.0,
            ..spec(1, vec![8, 8])
        })
        .unwrap();
        let trained = net.train(&x, &y).unwrap();
        let rmse = (x.iter().zip(&y).map(|(r, t)| (trained.forward(r).unwrap() - t).powi(2)).sum::<f64>()
            / y.len() as f64)
            .sqrt();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
        assert!(rmse < 0.05 * sd, "rmse {rmse} vs sd {sd}");
        let h = &trained.history.train_loss;
        let down = h.windows(2).filter(|w| w[1] <= w[0]).count();
        assert!(down as f64 >= 0.9 * (h.len() - 1) as f64, "{down} of {}", h.len() - 1);
    }

    #[test]
    fn training_is_deterministic_and_best_epoch_kept() {
        let x: Vec<Vec<f64>> = (0..120).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 3.0 - r[1] + 0.3 * (r[0] * r[1])).collect();
        let s = MlpSpec { epochs: 60, learning_rate: 1e-2, ..spec(2, vec![6, 4]) };
        let a = Mlp::init(s.clone()).unwrap().train(&x, &y).unwrap();
        let b = Mlp::init(s).unwrap().train(&x, &y).unwrap();
        assert_eq!(a, b);
        let last = *a.history.val_rmse.last().unwrap();
        assert!(a.best_val_rmse <= last);
    }

    #[test]
    fn json_round_trip() {
        let net = Mlp::init(spec(3, vec![2, 2])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        net.write_json(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"weights\":[["));
        let back = Mlp::read_json(&path).unwrap();
        assert_eq!(back.layers, net.layers);
    }
}
