use crate::classifier::{binary_cross_entropy, Adam, ForwardCache, Mlp, OneCycle, TrainConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::manifold::sigmoid;
use crate::peaks::{fill_guesses, find_peaks, slope_cap, Slice};
use crate::rng::{derive_seed, SeededRng};

/// How the `L - 1` cutoff classifiers of a slice are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeadMode {
    /// One network whose hidden layers feed all logistic heads.
    #[default]
    SharedTrunk,
    /// A separate network per cutoff.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModwConfig {
    pub train: TrainConfig,
    pub hidden: Vec<usize>,
    pub heads: HeadMode,
}

impl Default for ModwConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig { epochs: 50, batch_size: 64, ..TrainConfig::default() },
            hidden: vec![32],
            heads: HeadMode::SharedTrunk,
        }
    }
}

/// Rows of one slice as bit features with their position along the slice.
struct SliceRows {
    features: Vec<Vec<f64>>,
    positions: Vec<usize>,
}

impl SliceRows {
    fn subset(&self, idx: &[usize]) -> SliceRows {
        SliceRows {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            positions: idx.iter().map(|&i| self.positions[i]).collect(),
        }
    }
}

/// Validation accuracy of the confusion classifiers along one slice.
///
/// The slice's rows are shuffled and split in half. For every cutoff `j`
/// between neighbors `j` and `j + 1` a logistic classifier on the sample
/// bits learns whether a row lies beyond the cutoff; the returned slice
/// holds its accuracy on the held-out half, at the cutoff coordinates.
pub fn modw_train_slice(ds: &Dataset, axis: usize, fixed: usize, cfg: &ModwConfig) -> Result<Slice> {
    cfg.train.validate()?;
    let grid = ds.grid();
    if axis >= grid.param_dim() || fixed >= grid.num_lines(axis) {
        return Err(Error::InvalidArgument(format!("no slice {fixed} along axis {axis}")));
    }
    let line = grid.line_indices(axis, fixed);
    let l = line.len();
    if l < 2 {
        return Err(Error::InvalidArgument("a slice needs at least two grid points".into()));
    }
    let mut position_of = vec![usize::MAX; grid.len()];
    for (k, &p) in line.iter().enumerate() {
        position_of[p] = k;
    }
    let mut all = SliceRows { features: Vec::new(), positions: Vec::new() };
    for r in 0..ds.len() {
        let k = position_of[ds.point(r)];
        if k != usize::MAX {
            let x = ds.sample(r);
            all.features.push((0..ds.n_bits()).map(|j| if crate::bits::bit(x, j) { 1.0 } else { 0.0 }).collect());
            all.positions.push(k);
        }
    }
    let order = SeededRng::stream(cfg.train.seed, 0).permutation(all.positions.len());
    let half = order.len() / 2;
    if half == 0 {
        return Err(Error::InvalidArgument("slice has too few rows to split".into()));
    }
    let train = all.subset(&order[..half]);
    let valid = all.subset(&order[half..]);

    let heads = l - 1;
    let accuracy: Vec<f64> = match cfg.heads {
        HeadMode::SharedTrunk => {
            let net = train_heads(&train, 0, heads, ds.n_bits(), cfg, cfg.train.seed)?;
            (0..heads).map(|j| accuracy(&net, &valid, j, j)).collect()
        }
        HeadMode::Independent => (0..heads)
            .map(|j| {
                let net = train_heads(&train, j, 1, ds.n_bits(), cfg, cfg.train.seed)?;
                Ok(accuracy(&net, &valid, 0, j))
            })
            .collect::<Result<_>>()?,
    };
    let coords: Vec<f64> = (0..heads)
        .map(|j| 0.5 * (grid.axis_coordinate(axis, j) + grid.axis_coordinate(axis, j + 1)))
        .collect();
    Slice::new(axis, fixed, coords, accuracy, (0.0, 1.0))
}

/// Trains `count` heads for cutoffs `first..first + count`, minimizing the
/// batch mean of the summed per-head cross-entropy.
fn train_heads(rows: &SliceRows, first: usize, count: usize, n_bits: usize, cfg: &ModwConfig, seed: u64) -> Result<Mlp> {
    let tc = &cfg.train;
    let mut widths = vec![n_bits];
    widths.extend_from_slice(&cfg.hidden);
    widths.push(count);
    let mut net = Mlp::new(&widths, &mut SeededRng::stream(seed, u64::MAX));
    let n_params = net.params().len();
    let mask = net.weight_mask();
    let schedule = OneCycle::new(tc.max_lr);
    let mut adam = Adam::new(n_params, tc.beta1, tc.beta2, tc.adam_eps);
    let mut grad = vec![0.0; n_params];
    let mut cache = ForwardCache::default();
    let mut d_out = vec![0.0; count];
    for epoch in 0..tc.epochs {
        let order = SeededRng::stream(derive_seed(seed, epoch as u64), 1).permutation(rows.positions.len());
        let batches: Vec<&[usize]> = order.chunks(tc.batch_size).collect();
        for (step, batch) in batches.iter().enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for &i in batch.iter() {
                net.forward(&rows.features[i], &mut cache);
                for h in 0..count {
                    let z = cache.output()[h];
                    let y = u8::from(rows.positions[i] > first + h);
                    loss += binary_cross_entropy(z, y);
                    d_out[h] = (sigmoid(z) - y as f64) * scale;
                }
                net.backward(&cache, &d_out, &mut grad);
            }
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            for (g, (p, &w)) in grad.iter_mut().zip(net.params().iter().zip(&mask)) {
                if w {
                    *g += tc.l2 * p;
                }
            }
            let progress = (epoch as f64 + step as f64 / batches.len() as f64) / tc.epochs as f64;
            adam.step(net.params_mut(), &grad, schedule.lr_at(progress));
        }
    }
    Ok(net)
}

/// Fraction of `rows` where output `head` of `net` classifies cutoff
/// `cutoff` correctly; a zero logit counts as "not beyond".
fn accuracy(net: &Mlp, rows: &SliceRows, head: usize, cutoff: usize) -> f64 {
    let mut cache = ForwardCache::default();
    let correct = rows
        .features
        .iter()
        .zip(&rows.positions)
        .filter(|(x, &k)| {
            net.forward(x, &mut cache);
            (cache.output()[head] > 0.0) == (k > cutoff)
        })
        .count();
    correct as f64 / rows.positions.len() as f64
}

/// Guesses from an accuracy curve: slope capping, the `n_s` most prominent
/// peaks, then gap splitting up to `n_s`.
pub fn modw_peaks(acc: &Slice, n_s: usize, spacing: f64) -> Result<Vec<f64>> {
    let capped = slope_cap(acc, spacing)?;
    Ok(fill_guesses(&find_peaks(&capped, n_s), n_s, acc.bounds))
}
