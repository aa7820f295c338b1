//! Binary classifier for the paired task.
//!
//! The network sees the sample bits and the midpoint `lambda0` but never
//! `dlambda`; its output `l` enters the log odds only as `dlambda . l`, so the
//! classifier is exactly indifferent at `dlambda = 0` and `l` itself is what
//! the estimator averages.

mod mlp;
mod optim;

use std::io::{BufRead, Write};

use serde::Deserialize;

pub use mlp::{ForwardCache, Mlp};
pub use optim::{Adam, OneCycle};

use crate::bits;
use crate::dataset::{pair_permutation, Dataset, PairedDataset};
use crate::error::{Error, Result};
use crate::manifold::{format_f64, softplus};
use crate::rng::{derive_seed, SeededRng};

pub const MODEL_VERSION: u32 = 1;

/// Anything that produces log odds for the paired task and a `dlambda = 0`
/// output vector for the estimator.
pub trait LogOddsModel {
    fn param_dim(&self) -> usize;

    /// The vector `l` at `dlambda = 0`.
    fn output(&self, lambda0: &[f64], x: &[u64]) -> Result<Vec<f64>>;

    /// `ln P(y = + | lambda0, dlambda, x) - ln P(y = - | lambda0, dlambda, x)`.
    fn log_odds(&self, lambda0: &[f64], dlambda: &[f64], x: &[u64]) -> Result<f64>;
}

/// Cross-entropy of a classifier with log odds `z` against label `y`.
#[inline]
pub fn binary_cross_entropy(z: f64, label: u8) -> f64 {
    if label == 1 {
        softplus(-z)
    } else {
        softplus(z)
    }
}

/// `P(y = + | lambda0, dlambda, x) = 1 / (1 + exp(-dlambda . l))`.
pub fn plus_probability(dlambda: &[f64], l: &[f64]) -> f64 {
    crate::manifold::sigmoid(dot(dlambda, l))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Coefficient of `sum(W^2) / 2` over weights; biases are not penalized.
    pub l2: f64,
    pub max_lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 256,
            l2: 1e-4,
            max_lr: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0) {
            return Err(Error::InvalidArgument("l2 must be non-negative".into()));
        }
        if !(self.max_lr > 0.0) {
            return Err(Error::InvalidArgument("max_lr must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::InvalidArgument("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// The trained classifier: an MLP on `bits(x) ++ lambda0` with `param_dim`
/// outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BcModel {
    n_bits: usize,
    param_dim: usize,
    hidden: Vec<usize>,
    net: Mlp,
}

impl BcModel {
    pub fn new(n_bits: usize, param_dim: usize, hidden: &[usize], seed: u64) -> Self {
        let widths = Self::widths(n_bits, param_dim, hidden);
        Self {
            n_bits,
            param_dim,
            hidden: hidden.to_vec(),
            net: Mlp::new(&widths, &mut SeededRng::stream(seed, u64::MAX)),
        }
    }

    fn widths(n_bits: usize, param_dim: usize, hidden: &[usize]) -> Vec<usize> {
        let mut widths = vec![n_bits + param_dim];
        widths.extend_from_slice(hidden);
        widths.push(param_dim);
        widths
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn features(&self, lambda0: &[f64], x: &[u64], out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..self.n_bits).map(|j| if bits::bit(x, j) { 1.0 } else { 0.0 }));
        out.extend_from_slice(lambda0);
    }

    /// `l = M(lambda0, x)`.
    pub fn forward(&self, lambda0: &[f64], x: &[u64]) -> Vec<f64> {
        let mut features = Vec::with_capacity(self.net.input_dim());
        self.features(lambda0, x, &mut features);
        let mut cache = ForwardCache::default();
        self.net.forward(&features, &mut cache);
        cache.output().to_vec()
    }

    fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.n_bits() != self.n_bits || ds.param_dim() != self.param_dim {
            return Err(Error::Mismatch(format!(
                "model expects {} bits and {} parameters, dataset has {} and {}",
                self.n_bits,
                self.param_dim,
                ds.n_bits(),
                ds.param_dim()
            )));
        }
        Ok(())
    }

    /// JSON model file; floats carry 17 significant digits.
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|&x| format_f64(x))
                .collect::<Vec<_>>()
                .join(",")
        };
        let arch: Vec<String> = self.hidden.iter().map(|h| h.to_string()).collect();
        write!(
            out,
            "{{\"version\":{MODEL_VERSION},\"arch\":[{}],\"param_dim\":{},\"n_bits\":{},\"layers\":[",
            arch.join(","),
            self.param_dim,
            self.n_bits
        )?;
        let widths = self.net.widths();
        for k in 0..self.net.num_layers() {
            let (wr, br) = self.net.layer_ranges(k);
            let w = &self.net.params()[wr];
            let rows: Vec<String> = w
                .chunks(widths[k])
                .map(|row| format!("[{}]", list(row)))
                .collect();
            if k > 0 {
                write!(out, ",")?;
            }
            write!(
                out,
                "{{\"W\":[{}],\"b\":[{}]}}",
                rows.join(","),
                list(&self.net.params()[br])
            )?;
        }
        writeln!(out, "]}}")?;
        Ok(())
    }

    pub fn read_json<R: BufRead>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct LayerRecord {
            #[serde(rename = "W")]
            w: Vec<Vec<f64>>,
            b: Vec<f64>,
        }
        #[derive(Deserialize)]
        struct ModelRecord {
            version: u32,
            arch: Vec<usize>,
            param_dim: usize,
            n_bits: usize,
            layers: Vec<LayerRecord>,
        }
        let rec: ModelRecord = serde_json::from_reader(input)?;
        if rec.version != MODEL_VERSION {
            return Err(Error::Parse(format!("unsupported model version {}", rec.version)));
        }
        let widths = Self::widths(rec.n_bits, rec.param_dim, &rec.arch);
        if rec.layers.len() != widths.len() - 1 {
            return Err(Error::Parse("layer count does not match arch".into()));
        }
        let mut params = Vec::new();
        for (k, layer) in rec.layers.iter().enumerate() {
            if layer.w.len() != widths[k + 1]
                || layer.w.iter().any(|row| row.len() != widths[k])
                || layer.b.len() != widths[k + 1]
            {
                return Err(Error::Parse(format!("layer {k} has the wrong shape")));
            }
            params.extend(layer.w.iter().flatten());
            params.extend(&layer.b);
        }
        let net = Mlp::from_params(&widths, params).expect("shape checked");
        Ok(Self {
            n_bits: rec.n_bits,
            param_dim: rec.param_dim,
            hidden: rec.arch,
            net,
        })
    }
}

impl LogOddsModel for BcModel {
    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn output(&self, lambda0: &[f64], x: &[u64]) -> Result<Vec<f64>> {
        Ok(self.forward(lambda0, x))
    }

    fn log_odds(&self, lambda0: &[f64], dlambda: &[f64], x: &[u64]) -> Result<f64> {
        Ok(dot(dlambda, &self.forward(lambda0, x)))
    }
}

/// Scratch buffers reused across rows.
#[derive(Default)]
struct Workspace {
    features: Vec<f64>,
    cache: ForwardCache,
    d_out: Vec<f64>,
}

/// Mean cross-entropy over `rows` of `batch`, and optionally its gradient
/// (without the L2 term).
fn cross_entropy_and_grad(
    model: &BcModel,
    ds: &Dataset,
    batch: &PairedDataset,
    rows: &[usize],
    mut grad: Option<&mut [f64]>,
    ws: &mut Workspace,
) -> f64 {
    let scale = 1.0 / rows.len() as f64;
    let mut total = 0.0;
    for &i in rows {
        let row = batch.row(i);
        model.features(row.lambda0, ds.sample(row.source_row), &mut ws.features);
        model.net.forward(&ws.features, &mut ws.cache);
        let z = dot(row.dlambda, ws.cache.output());
        total += binary_cross_entropy(z, row.label);
        if let Some(g) = grad.as_deref_mut() {
            // d CE / dz = sigmoid(z) - y, and dz / dl = dlambda
            let dz = (crate::manifold::sigmoid(z) - row.label as f64) * scale;
            ws.d_out.clear();
            ws.d_out.extend(row.dlambda.iter().map(|d| d * dz));
            model.net.backward(&ws.cache, &ws.d_out, g);
        }
    }
    total * scale
}

fn check_batch(model: &BcModel, ds: &Dataset, batch: &PairedDataset) -> Result<()> {
    model.check_dataset(ds)?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if batch.param_dim() != model.param_dim {
        return Err(Error::Mismatch("batch parameter dimension differs from model".into()));
    }
    Ok(())
}

/// Mean binary cross-entropy over the batch plus `l2 * sum(W^2) / 2`.
pub fn loss(model: &BcModel, ds: &Dataset, batch: &PairedDataset, l2: f64) -> Result<f64> {
    check_batch(model, ds, batch)?;
    let rows: Vec<usize> = (0..batch.len()).collect();
    let ce = cross_entropy_and_grad(model, ds, batch, &rows, None, &mut Workspace::default());
    Ok(ce + 0.5 * l2 * model.net.weight_norm_sq())
}

/// Exact gradient of [`loss`] with respect to the flat parameter vector.
pub fn gradient(model: &BcModel, ds: &Dataset, batch: &PairedDataset, l2: f64) -> Result<Vec<f64>> {
    check_batch(model, ds, batch)?;
    let rows: Vec<usize> = (0..batch.len()).collect();
    let mut grad = vec![0.0; model.net.params().len()];
    cross_entropy_and_grad(model, ds, batch, &rows, Some(&mut grad), &mut Workspace::default());
    add_l2_gradient(&model.net, l2, &mut grad);
    Ok(grad)
}

fn add_l2_gradient(net: &Mlp, l2: f64, grad: &mut [f64]) {
    if l2 == 0.0 {
        return;
    }
    for k in 0..net.num_layers() {
        let (wr, _) = net.layer_ranges(k);
        for i in wr {
            grad[i] += l2 * net.params()[i];
        }
    }
}

/// Training outcome with the per-epoch mean batch cross-entropy.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: BcModel,
    /// Cross-entropy of the initial model on the first epoch's pairs.
    pub initial_ce: f64,
    pub epoch_ce: Vec<f64>,
}

/// Seed of the pairing drawn for `epoch`.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    derive_seed(seed, epoch as u64)
}

/// Trains a classifier on `ds_train` with hidden layer widths `hidden`.
///
/// Every epoch draws a fresh permutation pairing, shuffles it into batches
/// and takes one Adam step per batch. The one-cycle schedule is driven by
/// the fraction of training completed, because the number of surviving
/// pairs (and thus of batches) varies slightly between epochs.
pub fn train(ds_train: &Dataset, cfg: &TrainConfig, hidden: &[usize]) -> Result<BcModel> {
    train_with_history(ds_train, cfg, hidden, |_, _| {}).map(|r| r.model)
}

/// [`train`] with a callback invoked after every epoch as `(epoch, mean_ce)`.
pub fn train_with_history(
    ds_train: &Dataset,
    cfg: &TrainConfig,
    hidden: &[usize],
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainReport> {
    cfg.validate()?;
    let mut model = BcModel::new(ds_train.n_bits(), ds_train.param_dim(), hidden, cfg.seed);
    let mut ws = Workspace::default();
    let first = pair_permutation(ds_train, epoch_seed(cfg.seed, 0));
    let initial_ce = if first.is_empty() {
        std::f64::consts::LN_2
    } else {
        let rows: Vec<usize> = (0..first.len()).collect();
        cross_entropy_and_grad(&model, ds_train, &first, &rows, None, &mut ws)
    };
    let schedule = OneCycle::new(cfg.max_lr);
    let n_params = model.net.params().len();
    let mut adam = Adam::new(n_params, cfg.beta1, cfg.beta2, cfg.adam_eps);
    let mut grad = vec![0.0; n_params];
    let mut epoch_ce = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let pairs = if epoch == 0 {
            first.clone()
        } else {
            pair_permutation(ds_train, epoch_seed(cfg.seed, epoch))
        };
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(
                "dataset yields no pairs of distinct grid points".into(),
            ));
        }
        let order = SeededRng::stream(epoch_seed(cfg.seed, epoch), 2).permutation(pairs.len());
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        let mut sum_ce = 0.0;
        for (step, rows) in batches.iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let ce = cross_entropy_and_grad(&model, ds_train, &pairs, rows, Some(&mut grad), &mut ws);
            if !ce.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            add_l2_gradient(&model.net, cfg.l2, &mut grad);
            let progress = (epoch as f64 + step as f64 / batches.len() as f64) / cfg.epochs as f64;
            adam.step(model.net.params_mut(), &grad, schedule.lr_at(progress));
            sum_ce += ce * rows.len() as f64;
        }
        let mean = sum_ce / pairs.len() as f64;
        on_epoch(epoch, mean);
        epoch_ce.push(mean);
    }
    Ok(TrainReport {
        model,
        initial_ce,
        epoch_ce,
    })
}

/// Mean cross-entropy of `model` on a permutation pairing of `ds`.
pub fn test_cross_entropy<M: LogOddsModel + ?Sized>(model: &M, ds: &Dataset, seed: u64) -> Result<f64> {
    if model.param_dim() != ds.param_dim() {
        return Err(Error::Mismatch("model and dataset parameter dimensions differ".into()));
    }
    let pairs = pair_permutation(ds, seed);
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("test set yields no pairs".into()));
    }
    let mut total = 0.0;
    for row in pairs.rows() {
        let z = model.log_odds(row.lambda0, row.dlambda, ds.sample(row.source_row))?;
        total += binary_cross_entropy(z, row.label);
    }
    Ok(total / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::sample_dataset;
    use crate::manifold::{GridSpec, StatisticalManifold};
    use std::f64::consts::LN_2;

    fn small_setup() -> (Dataset, PairedDataset) {
        let sm = StatisticalManifold::bernoulli1d(2);
        let ds = sample_dataset(&sm, &GridSpec::line(4), 6, 3).unwrap();
        let pairs = pair_permutation(&ds, 1);
        (ds, pairs)
    }

    fn randomized(model: &mut BcModel, seed: u64, scale: f64) {
        let mut rng = SeededRng::new(seed);
        for p in model.net_mut().params_mut() {
            *p = rng.uniform(-scale, scale);
        }
    }

    #[test]
    fn zero_head_gives_even_odds() {
        let model = BcModel::new(4, 2, &[8], 1);
        let l = model.forward(&[0.3, 0.6], &[0b1011]);
        assert_eq!(l, vec![0.0, 0.0]);
        assert_eq!(plus_probability(&[0.1, -0.2], &l), 0.5);
    }

    #[test]
    fn flipping_dlambda_complements_probability() {
        let l = [0.7, -1.2];
        let p = plus_probability(&[0.2, 0.1], &l);
        let q = plus_probability(&[-0.2, -0.1], &l);
        assert!((p + q - 1.0).abs() < 1e-15);
        assert_eq!(plus_probability(&[0.0, 0.0], &l), 0.5);
    }

    #[test]
    fn constant_model_loss_is_ln2() {
        let (ds, pairs) = small_setup();
        let model = BcModel::new(2, 1, &[3], 0);
        assert!((loss(&model, &ds, &pairs, 0.0).unwrap() - LN_2).abs() < 1e-15);
        let l2 = 0.3;
        let expected = LN_2 + l2 * model.net().weight_norm_sq() / 2.0;
        assert!((loss(&model, &ds, &pairs, l2).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_predictions_have_vanishing_loss() {
        // A linear model with l = c * (2 x - 1) on one-bit samples drawn from
        // disjoint supports separates the classes perfectly as c grows.
        let ds = Dataset::from_parts("t", GridSpec::line(2), 1, "", vec![0, 1], vec![0, 1]).unwrap();
        let pairs = pair_rejection_helper(&ds);
        let mut model = BcModel::new(1, 1, &[], 0);
        let (wr, br) = model.net().layer_ranges(0);
        for c in [1.0, 10.0, 100.0, 1000.0] {
            let p = model.net_mut().params_mut();
            p[wr.start] = 2.0 * c;
            p[br.start] = -c;
            let value = loss(&model, &ds, &pairs, 0.0).unwrap();
            if c == 1000.0 {
                assert!(value < 1e-100, "{value}");
            }
        }
    }

    fn pair_rejection_helper(ds: &Dataset) -> PairedDataset {
        crate::dataset::pair_rejection(ds, 10, 0).unwrap()
    }

    #[test]
    fn l2_gradient_is_l2_times_weights() {
        let (ds, pairs) = small_setup();
        let mut model = BcModel::new(2, 1, &[3], 0);
        randomized(&mut model, 4, 0.5);
        let g0 = gradient(&model, &ds, &pairs, 0.0).unwrap();
        let g1 = gradient(&model, &ds, &pairs, 0.25).unwrap();
        let mask = model.net().weight_mask();
        for i in 0..g0.len() {
            let expected = if mask[i] { 0.25 * model.net().params()[i] } else { 0.0 };
            assert!((g1[i] - g0[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_batch_has_zero_output_bias_gradient() {
        // Single (lambda0, dlambda) with the same sample under both labels.
        let ds = Dataset::from_parts("t", GridSpec::line(2), 3, "", vec![0, 1], vec![5, 5]).unwrap();
        let pairs = crate::dataset::pair_rejection(&ds, 2, 0).unwrap();
        let model = BcModel::new(3, 1, &[4], 2);
        let g = gradient(&model, &ds, &pairs, 0.0).unwrap();
        let (_, br) = model.net().layer_ranges(1);
        assert_eq!(g[br.start], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sm = StatisticalManifold::bernoulli2d(2);
        let ds = sample_dataset(&sm, &GridSpec::square(2, 2), 4, 1).unwrap();
        let pairs = pair_permutation(&ds, 5);
        let mut model = BcModel::new(2, 2, &[4], 0);
        randomized(&mut model, 8, 1.0);
        let g = gradient(&model, &ds, &pairs, 0.1).unwrap();
        let h = 1e-5;
        for i in 0..g.len() {
            let mut up = model.clone();
            up.net_mut().params_mut()[i] += h;
            let mut down = model.clone();
            down.net_mut().params_mut()[i] -= h;
            let fd = (loss(&up, &ds, &pairs, 0.1).unwrap() - loss(&down, &ds, &pairs, 0.1).unwrap()) / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3);
            assert!(rel < 1e-4, "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn loss_is_invariant_under_row_permutation() {
        let (ds, pairs) = small_setup();
        let mut model = BcModel::new(2, 1, &[3], 0);
        randomized(&mut model, 2, 0.8);
        let rows: Vec<usize> = (0..pairs.len()).collect();
        let mut rev = rows.clone();
        rev.reverse();
        let mut ws = Workspace::default();
        let a = cross_entropy_and_grad(&model, &ds, &pairs, &rows, None, &mut ws);
        let b = cross_entropy_and_grad(&model, &ds, &pairs, &rev, None, &mut ws);
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (ds, _) = small_setup();
        let cfg = TrainConfig { epochs: 0, seed: 3, ..Default::default() };
        let model = train(&ds, &cfg, &[5]).unwrap();
        assert_eq!(model, BcModel::new(2, 1, &[5], 3));
    }

    #[test]
    fn training_is_deterministic_and_reduces_loss() {
        let sm = StatisticalManifold::bernoulli1d(4);
        let ds = sample_dataset(&sm, &GridSpec::line(8), 20, 2).unwrap();
        let cfg = TrainConfig { epochs: 10, batch_size: 32, l2: 0.0, max_lr: 0.02, seed: 11, ..Default::default() };
        let a = train_with_history(&ds, &cfg, &[], |_, _| {}).unwrap();
        let b = train(&ds, &cfg, &[]).unwrap();
        assert_eq!(a.model, b);
        assert!((a.initial_ce - LN_2).abs() < 1e-12);
        assert!(a.epoch_ce.last().unwrap() < &a.initial_ce);
    }

    #[test]
    fn trained_bernoulli_classifier_approaches_bayes_loss() {
        let sm = StatisticalManifold::bernoulli1d(8);
        let grid = GridSpec::line(32);
        let ds = sample_dataset(&sm, &grid, 100, 5).unwrap();
        let cfg = TrainConfig { epochs: 100, seed: 1, ..Default::default() };
        let report = train_with_history(&ds, &cfg, &[32], |_, _| {}).unwrap();
        let final_ce = *report.epoch_ce.last().unwrap();
        let best = crate::estimator::best_expected_cross_entropy(&sm, &grid).unwrap();
        assert!(final_ce < LN_2 - 0.05, "{final_ce}");
        assert!((final_ce - best).abs() < 0.05, "{final_ce} vs {best}");
    }

    #[test]
    fn rejects_bad_config_and_mismatched_data() {
        let (ds, pairs) = small_setup();
        let cfg = TrainConfig { max_lr: 0.0, ..Default::default() };
        assert!(train(&ds, &cfg, &[]).is_err());
        let cfg = TrainConfig { l2: -1.0, ..Default::default() };
        assert!(train(&ds, &cfg, &[]).is_err());
        let model = BcModel::new(3, 1, &[], 0);
        assert!(loss(&model, &ds, &pairs, 0.0).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let mut model = BcModel::new(3, 2, &[4, 2], 0);
        randomized(&mut model, 5, 1.0);
        let mut buf = Vec::new();
        model.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["arch"], serde_json::json!([4, 2]));
        assert_eq!(v["layers"][0]["W"].as_array().unwrap().len(), 4);
        assert_eq!(BcModel::read_json(&buf[..]).unwrap(), model);
    }
}
