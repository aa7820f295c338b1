//! Datasets of `(lambda, x)` rows, sampling, splitting and the pairing
//! transforms that turn them into a binary-classification task.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bits;
use crate::error::{Error, Result};
use crate::manifold::{check_grid, format_f64, GridSpec, ManifoldKind, StatisticalManifold};
use crate::rng::SeededRng;

pub const FORMAT_VERSION: u32 = 1;

/// Consecutive rejections tolerated per requested row in [`pair_rejection`].
pub const REJECTION_CAP_PER_ROW: usize = 1000;

/// Samples on a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    sm_name: String,
    shape_params: BTreeMap<String, f64>,
    grid: GridSpec,
    n_bits: usize,
    description: String,
    points: Vec<usize>,
    samples: Vec<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    sm: String,
    n_bits: usize,
    param_dim: usize,
    grid_sizes: Vec<usize>,
    description: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    shape_params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
struct RowRecord {
    lambda: Vec<f64>,
    x: String,
}

impl Dataset {
    /// Assembles a dataset from per-row grid indices and flat sample words
    /// (`words_for(n_bits)` words per row).
    pub fn from_parts(
        sm_name: impl Into<String>,
        grid: GridSpec,
        n_bits: usize,
        description: impl Into<String>,
        points: Vec<usize>,
        samples: Vec<u64>,
    ) -> Result<Self> {
        let ds = Self {
            sm_name: sm_name.into(),
            shape_params: BTreeMap::new(),
            grid,
            n_bits,
            description: description.into(),
            points,
            samples,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_shape_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.shape_params = params;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n_bits == 0 {
            return Err(Error::InvalidArgument("n_bits must be at least 1".into()));
        }
        let w = self.words_per_sample();
        if self.samples.len() != self.points.len() * w {
            return Err(Error::Mismatch(format!(
                "{} rows need {} sample words, got {}",
                self.points.len(),
                self.points.len() * w,
                self.samples.len()
            )));
        }
        if let Some(&p) = self.points.iter().find(|&&p| p >= self.grid.len()) {
            return Err(Error::InvalidArgument(format!("row refers to grid point {p}")));
        }
        for i in 0..self.len() {
            if !bits::fits(self.sample(i), self.n_bits) {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: sample exceeds {} bits",
                    self.n_bits
                )));
            }
        }
        let counts = self.counts();
        if let Some(p) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyGridPoint(p));
        }
        Ok(())
    }

    pub fn sm_name(&self) -> &str {
        &self.sm_name
    }

    pub fn shape_params(&self) -> &BTreeMap<String, f64> {
        &self.shape_params
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn param_dim(&self) -> usize {
        self.grid.param_dim()
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn words_per_sample(&self) -> usize {
        bits::words_for(self.n_bits)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Grid index of row `i`.
    pub fn point(&self, i: usize) -> usize {
        self.points[i]
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lambda(&self, i: usize) -> Vec<f64> {
        self.grid.point(self.points[i])
    }

    pub fn sample(&self, i: usize) -> &[u64] {
        let w = self.words_per_sample();
        &self.samples[i * w..(i + 1) * w]
    }

    /// Number of rows at each grid point.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.grid.len()];
        for &p in &self.points {
            counts[p] += 1;
        }
        counts
    }

    /// Row indices grouped by grid point, each group in row order.
    pub fn rows_by_point(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.grid.len()];
        for (i, &p) in self.points.iter().enumerate() {
            groups[p].push(i);
        }
        groups
    }

    /// Dataset made of the given rows, in the given order, on a new grid.
    ///
    /// `remap` translates old grid indices to indices of `grid`.
    pub fn select(
        &self,
        rows: &[usize],
        grid: GridSpec,
        remap: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let mut points = Vec::with_capacity(rows.len());
        let mut samples = Vec::with_capacity(rows.len() * self.words_per_sample());
        for &r in rows {
            points.push(remap(self.points[r]));
            samples.extend_from_slice(self.sample(r));
        }
        Ok(Self::from_parts(
            self.sm_name.clone(),
            grid,
            self.n_bits,
            self.description.clone(),
            points,
            samples,
        )?
        .with_shape_params(self.shape_params.clone()))
    }

    fn subset(&self, rows: &[usize]) -> Result<Self> {
        self.select(rows, self.grid.clone(), |p| p)
    }

    /// Writes the JSON Lines format: a header object, then one object per row.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            version: FORMAT_VERSION,
            sm: self.sm_name.clone(),
            n_bits: self.n_bits,
            param_dim: self.param_dim(),
            grid_sizes: self.grid.sizes().to_vec(),
            description: self.description.clone(),
            shape_params: self.shape_params.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        writeln!(out)?;
        for i in 0..self.len() {
            let lambda: Vec<String> = self.lambda(i).into_iter().map(format_f64).collect();
            writeln!(
                out,
                "{{\"lambda\":[{}],\"x\":\"{}\"}}",
                lambda.join(","),
                bits::to_hex(self.sample(i))
            )?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Parse("empty dataset file".into()))??;
        let header: Header = serde_json::from_str(&first)?;
        if header.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported version {}", header.version)));
        }
        let grid = GridSpec::new(header.grid_sizes)?;
        if grid.param_dim() != header.param_dim {
            return Err(Error::Parse("param_dim does not match grid_sizes".into()));
        }
        let words = bits::words_for(header.n_bits);
        let mut points = Vec::new();
        let mut samples = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: RowRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            let p = grid.locate(&row.lambda).ok_or_else(|| {
                Error::Parse(format!("line {}: {:?} is not a grid point", lineno + 2, row.lambda))
            })?;
            points.push(p);
            samples.extend(bits::from_hex(&row.x, words)?);
        }
        Ok(Self::from_parts(
            header.sm,
            grid,
            header.n_bits,
            header.description,
            points,
            samples,
        )?
        .with_shape_params(header.shape_params))
    }
}

fn default_description(sm: &StatisticalManifold) -> String {
    format!(
        "Each sample x is an integer in [0, 2^{n}) representing a {n}-bit string; \
         bit j of x is floor(x / 2^j) mod 2. Samples come from the {name} family \
         with {dim} parameter(s) on a regular grid of cell centers in [0, 1]^{dim}.",
        n = sm.n_bits(),
        name = sm.name(),
        dim = sm.param_dim()
    )
}

/// Draws `samples_per_point` iid samples at every grid point.
///
/// Enumerable manifolds are sampled by inverse CDF over the sample space;
/// larger iid-bit families fall back to drawing each bit independently.
/// Grid point `i` uses stream `i` of `seed`.
pub fn sample_dataset(
    sm: &StatisticalManifold,
    grid: &GridSpec,
    samples_per_point: usize,
    seed: u64,
) -> Result<Dataset> {
    if samples_per_point == 0 {
        return Err(Error::InvalidArgument("samples_per_point must be at least 1".into()));
    }
    check_grid(sm, grid)?;
    if !sm.is_enumerable() && sm.kind() == ManifoldKind::IsingChain1d {
        return Err(Error::TooManyBits {
            n_bits: sm.n_bits(),
            limit: crate::manifold::ENUMERATION_LIMIT,
        });
    }
    let words = bits::words_for(sm.n_bits());
    let mut points = Vec::with_capacity(grid.len() * samples_per_point);
    let mut samples = Vec::with_capacity(grid.len() * samples_per_point * words);
    for i in 0..grid.len() {
        let lambda = grid.point(i);
        let mut rng = SeededRng::stream(seed, i as u64);
        if sm.is_enumerable() {
            let cdf = cumulative(&sm.distribution(&lambda)?);
            for _ in 0..samples_per_point {
                let u = rng.next_f64() * cdf[cdf.len() - 1];
                let x = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                points.push(i);
                samples.push(x as u64);
            }
        } else {
            let probs = iid_bit_probabilities(sm, &lambda);
            for _ in 0..samples_per_point {
                let mut x = vec![0u64; words];
                for (j, &p) in probs.iter().enumerate() {
                    if rng.next_f64() < p {
                        x[j / 64] |= 1 << (j % 64);
                    }
                }
                points.push(i);
                samples.extend(x);
            }
        }
    }
    Ok(Dataset::from_parts(
        sm.name(),
        grid.clone(),
        sm.n_bits(),
        default_description(sm),
        points,
        samples,
    )?
    .with_shape_params(sm.shape_params()))
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Per-bit success probabilities, recovered from single-bit-set samples.
fn iid_bit_probabilities(sm: &StatisticalManifold, lambda: &[f64]) -> Vec<f64> {
    let words = bits::words_for(sm.n_bits());
    let zero = vec![0u64; words];
    let base = sm.log_prob(lambda, &zero);
    (0..sm.n_bits())
        .map(|j| {
            let mut x = zero.clone();
            x[j / 64] |= 1 << (j % 64);
            // odds = P(bit=1) / P(bit=0) with all other bits fixed
            let odds = (sm.log_prob(lambda, &x) - base).exp();
            odds / (1.0 + odds)
        })
        .collect()
}

/// Stratified split: at every grid point `ceil(test_fraction * count)` rows
/// (at most `count - 1`) go to the test set. Returns `(train, test)`, each
/// keeping the original row order.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument("test_fraction must lie in (0, 1)".into()));
    }
    let mut is_test = vec![false; ds.len()];
    for (p, mut rows) in ds.rows_by_point().into_iter().enumerate() {
        if rows.len() < 2 {
            return Err(Error::TooFewRows {
                point: p,
                rows: rows.len(),
                needed: 2,
            });
        }
        // The small offset keeps products like 0.1 * 140 from rounding up.
        let n_test = ((test_fraction * rows.len() as f64 - 1e-9).ceil() as usize)
            .clamp(1, rows.len() - 1);
        SeededRng::stream(seed, p as u64).shuffle(&mut rows);
        for &r in &rows[..n_test] {
            is_test[r] = true;
        }
    }
    let train: Vec<usize> = (0..ds.len()).filter(|&i| !is_test[i]).collect();
    let test: Vec<usize> = (0..ds.len()).filter(|&i| is_test[i]).collect();
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

/// Rows of the auxiliary binary-classification task.
///
/// Row `i` pairs `lambda_+ = lambda0 + dlambda / 2` with
/// `lambda_- = lambda0 - dlambda / 2`; its sample is source row
/// `source_row(i)`, drawn at `lambda_+` when the label is 1 and at
/// `lambda_-` when it is 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairedDataset {
    param_dim: usize,
    lambda0: Vec<f64>,
    dlambda: Vec<f64>,
    source_rows: Vec<usize>,
    labels: Vec<u8>,
    plus_points: Vec<usize>,
    minus_points: Vec<usize>,
}

/// Borrowed view of one paired row.
#[derive(Debug, Clone, Copy)]
pub struct PairedRow<'a> {
    pub lambda0: &'a [f64],
    pub dlambda: &'a [f64],
    pub source_row: usize,
    pub label: u8,
}

impl PairedDataset {
    fn new(param_dim: usize) -> Self {
        Self {
            param_dim,
            ..Default::default()
        }
    }

    fn push_pair(&mut self, ds: &Dataset, plus_row: usize, minus_row: usize) {
        let (pp, pm) = (ds.point(plus_row), ds.point(minus_row));
        let (lp, lm) = (ds.grid().point(pp), ds.grid().point(pm));
        for (row, label) in [(minus_row, 0u8), (plus_row, 1u8)] {
            for mu in 0..self.param_dim {
                self.lambda0.push((lp[mu] + lm[mu]) / 2.0);
                self.dlambda.push(lp[mu] - lm[mu]);
            }
            self.source_rows.push(row);
            self.labels.push(label);
            self.plus_points.push(pp);
            self.minus_points.push(pm);
        }
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> PairedRow<'_> {
        let n = self.param_dim;
        PairedRow {
            lambda0: &self.lambda0[i * n..(i + 1) * n],
            dlambda: &self.dlambda[i * n..(i + 1) * n],
            source_row: self.source_rows[i],
            label: self.labels[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = PairedRow<'_>> {
        (0..self.len()).map(|i| self.row(i))
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Grid indices `(lambda_+, lambda_-)` of row `i`.
    pub fn endpoints(&self, i: usize) -> (usize, usize) {
        (self.plus_points[i], self.minus_points[i])
    }
}

/// Rejection sampling of pairs: draw two rows iid, reject equal parameters,
/// emit both rows of the pair, until `n_bc` rows exist.
pub fn pair_rejection(ds: &Dataset, n_bc: usize, seed: u64) -> Result<PairedDataset> {
    if n_bc == 0 || n_bc % 2 != 0 {
        return Err(Error::InvalidArgument("n_bc must be a positive even number".into()));
    }
    let cap = REJECTION_CAP_PER_ROW.saturating_mul(n_bc);
    let mut rng = SeededRng::new(seed);
    let mut out = PairedDataset::new(ds.param_dim());
    let mut rejections = 0usize;
    while out.len() < n_bc {
        let plus = rng.below(ds.len());
        let minus = rng.below(ds.len());
        if ds.point(plus) == ds.point(minus) {
            rejections += 1;
            if rejections >= cap {
                return Err(Error::RejectionCap(rejections));
            }
            continue;
        }
        rejections = 0;
        out.push_pair(ds, plus, minus);
    }
    Ok(out)
}

/// Permutation pairing: align two independent uniform permutations of the
/// rows and keep every position whose two rows sit at different grid points.
/// Meant to be called once per epoch with a fresh seed.
pub fn pair_permutation(ds: &Dataset, seed: u64) -> PairedDataset {
    let plus = SeededRng::stream(seed, 0).permutation(ds.len());
    let minus = SeededRng::stream(seed, 1).permutation(ds.len());
    let mut out = PairedDataset::new(ds.param_dim());
    for (&p, &m) in plus.iter().zip(&minus) {
        if ds.point(p) != ds.point(m) {
            out.push_pair(ds, p, m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_dataset() -> Dataset {
        // rows at lambda = 0.25 (x = 1, 2) and lambda = 0.75 (x = 3)
        Dataset::from_parts("test", GridSpec::line(2), 2, "", vec![0, 0, 1], vec![1, 2, 3]).unwrap()
    }

    #[test]
    fn bernoulli_sampling_frequency() {
        let sm = StatisticalManifold::bernoulli1d(1);
        let grid = GridSpec::line(1);
        let ds = sample_dataset(&sm, &grid, 10_000, 11).unwrap();
        let ones = (0..ds.len()).filter(|&i| ds.sample(i)[0] == 1).count();
        let frac = ones as f64 / ds.len() as f64;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
    }

    #[test]
    fn sampling_row_count_and_determinism() {
        let sm = StatisticalManifold::bernoulli1d(4);
        let grid = GridSpec::line(64);
        let a = sample_dataset(&sm, &grid, 140, 5).unwrap();
        assert_eq!(a.len(), 8960);
        assert_eq!(a, sample_dataset(&sm, &grid, 140, 5).unwrap());
        assert_ne!(a, sample_dataset(&sm, &grid, 140, 6).unwrap());
        assert!(sample_dataset(&sm, &grid, 0, 5).is_err());
    }

    #[test]
    fn wide_iid_sampling_uses_per_bit_draws() {
        let sm = StatisticalManifold::bernoulli1d(100);
        let ds = sample_dataset(&sm, &GridSpec::line(2), 200, 3).unwrap();
        assert_eq!(ds.words_per_sample(), 2);
        // lambda = 0.75 gives phi = 0.7
        let mut ones = 0;
        let mut total = 0;
        for i in 0..ds.len() {
            if ds.point(i) == 1 {
                ones += bits::popcount_prefix(ds.sample(i), 100);
                total += 100;
            }
        }
        let frac = ones as f64 / total as f64;
        assert!((frac - 0.7).abs() < 0.015, "{frac}");
    }

    #[test]
    fn split_counts() {
        let sm = StatisticalManifold::bernoulli1d(3);
        let ds = sample_dataset(&sm, &GridSpec::line(4), 140, 1).unwrap();
        let (train, test) = split(&ds, 0.1, 9).unwrap();
        assert!(train.counts().iter().all(|&c| c == 126));
        assert!(test.counts().iter().all(|&c| c == 14));

        let ds2 = sample_dataset(&sm, &GridSpec::line(3), 2, 1).unwrap();
        let (train, test) = split(&ds2, 0.5, 9).unwrap();
        assert_eq!(train.counts(), vec![1, 1, 1]);
        assert_eq!(test.counts(), vec![1, 1, 1]);
    }

    #[test]
    fn split_is_a_partition() {
        let sm = StatisticalManifold::bernoulli1d(6);
        let ds = sample_dataset(&sm, &GridSpec::line(5), 17, 2).unwrap();
        let (train, test) = split(&ds, 0.3, 4).unwrap();
        let key = |d: &Dataset, i: usize| (d.point(i), d.sample(i)[0]);
        let mut all: Vec<_> = (0..train.len()).map(|i| key(&train, i)).collect();
        all.extend((0..test.len()).map(|i| key(&test, i)));
        let mut orig: Vec<_> = (0..ds.len()).map(|i| key(&ds, i)).collect();
        all.sort_unstable();
        orig.sort_unstable();
        assert_eq!(all, orig);
        assert_eq!(split(&ds, 0.3, 4).unwrap().0, train);
    }

    #[test]
    fn split_rejects_single_row_points() {
        let ds = two_point_dataset();
        assert!(matches!(split(&ds, 0.5, 0), Err(Error::TooFewRows { point: 1, .. })));
        assert!(split(&ds, 1.0, 0).is_err());
    }

    #[test]
    fn rejection_pairs_single_admissible_pair() {
        let ds = Dataset::from_parts("t", GridSpec::line(2), 2, "", vec![0, 1], vec![1, 3]).unwrap();
        let bc = pair_rejection(&ds, 2, 7).unwrap();
        assert_eq!(bc.len(), 2);
        let labels: Vec<u8> = bc.rows().map(|r| r.label).collect();
        assert_eq!(labels, vec![0, 1]);
        for r in bc.rows() {
            assert_eq!(r.lambda0, &[0.5]);
            assert_eq!(r.dlambda[0].abs(), 0.5);
        }
    }

    #[test]
    fn rejection_pairs_respect_invariants() {
        let sm = StatisticalManifold::bernoulli2d(4);
        let ds = sample_dataset(&sm, &GridSpec::square(3, 3), 5, 1).unwrap();
        let bc = pair_rejection(&ds, 200, 3).unwrap();
        assert_eq!(bc.len(), 200);
        assert_eq!(bc.labels().iter().filter(|&&y| y == 1).count(), 100);
        check_pair_invariants(&ds, &bc);
        assert!(pair_rejection(&ds, 3, 0).is_err());
    }

    #[test]
    fn rejection_cap_reports_stuck_input() {
        let ds = Dataset::from_parts("t", GridSpec::line(1), 1, "", vec![0, 0], vec![0, 1]).unwrap();
        assert!(matches!(pair_rejection(&ds, 2, 0), Err(Error::RejectionCap(2000))));
    }

    fn check_pair_invariants(ds: &Dataset, bc: &PairedDataset) {
        for i in 0..bc.len() {
            let r = bc.row(i);
            assert!(r.dlambda.iter().any(|&d| d != 0.0));
            let plus: Vec<f64> = r.lambda0.iter().zip(r.dlambda).map(|(a, d)| a + d / 2.0).collect();
            let minus: Vec<f64> = r.lambda0.iter().zip(r.dlambda).map(|(a, d)| a - d / 2.0).collect();
            let (pp, pm) = bc.endpoints(i);
            assert_eq!(ds.grid().locate(&plus), Some(pp));
            assert_eq!(ds.grid().locate(&minus), Some(pm));
            let expected = if r.label == 1 { pp } else { pm };
            assert_eq!(ds.point(r.source_row), expected);
        }
    }

    #[test]
    fn permutation_pairs_respect_invariants() {
        let sm = StatisticalManifold::bernoulli1d(4);
        let ds = sample_dataset(&sm, &GridSpec::line(8), 10, 1).unwrap();
        let bc = pair_permutation(&ds, 17);
        assert!(bc.len() <= 2 * ds.len());
        assert_eq!(bc.len() % 2, 0);
        check_pair_invariants(&ds, &bc);
        assert_eq!(bc, pair_permutation(&ds, 17));
    }

    #[test]
    fn permutation_survival_fraction() {
        // Two uniform permutations collide at a position with probability
        // 1/|grid| when every point holds the same number of rows.
        let sm = StatisticalManifold::bernoulli1d(2);
        let ds = sample_dataset(&sm, &GridSpec::line(4), 50, 1).unwrap();
        let seeds = 400;
        let kept: usize = (0..seeds).map(|s| pair_permutation(&ds, s).len() / 2).sum();
        let frac = kept as f64 / (seeds as usize * ds.len()) as f64;
        assert!((frac - 0.75).abs() < 0.01, "{frac}");
    }

    #[test]
    fn pairing_algorithms_agree_in_distribution() {
        // Chi-squared homogeneity test over ordered (plus, minus) pairs on a
        // 4-point grid with 10^5 pairs from each algorithm.
        let sm = StatisticalManifold::bernoulli1d(2);
        let ds = sample_dataset(&sm, &GridSpec::line(4), 25, 1).unwrap();
        let mut a = [[0f64; 4]; 4];
        let mut b = [[0f64; 4]; 4];
        let bc = pair_rejection(&ds, 200_000, 5).unwrap();
        for i in (0..bc.len()).step_by(2) {
            let (p, m) = bc.endpoints(i);
            a[p][m] += 1.0;
        }
        let mut total_b = 0usize;
        let mut seed = 0;
        while total_b < 100_000 {
            let bc = pair_permutation(&ds, seed);
            seed += 1;
            for i in (0..bc.len()).step_by(2) {
                if total_b == 100_000 {
                    break;
                }
                let (p, m) = bc.endpoints(i);
                b[p][m] += 1.0;
                total_b += 1;
            }
        }
        let mut chi2 = 0.0;
        for p in 0..4 {
            for m in 0..4 {
                if p == m {
                    continue;
                }
                let expected = (a[p][m] + b[p][m]) / 2.0;
                chi2 += (a[p][m] - expected).powi(2) / expected + (b[p][m] - expected).powi(2) / expected;
            }
        }
        // 11 degrees of freedom; chi2 quantile at p = 0.001 is 31.26.
        assert!(chi2 < 31.26, "chi2 = {chi2}");
    }

    #[test]
    fn jsonl_round_trip() {
        let sm = StatisticalManifold::sigmoid_step1d(70, 20.0);
        let ds = sample_dataset(&sm, &GridSpec::line(3), 4, 8).unwrap();
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(header["version"], 1);
        assert_eq!(header["sm"], "sigmoid_step1d");
        assert_eq!(header["grid_sizes"], serde_json::json!([3]));
        assert!(lines.next().unwrap().starts_with("{\"lambda\":[0.16666666666666666],\"x\":\""));
        let back = Dataset::read_jsonl(&buf[..]).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn read_rejects_off_grid_rows() {
        let text = "{\"version\":1,\"sm\":\"t\",\"n_bits\":2,\"param_dim\":1,\"grid_sizes\":[2],\"description\":\"\"}\n{\"lambda\":[0.3],\"x\":\"1\"}\n";
        assert!(Dataset::read_jsonl(text.as_bytes()).is_err());
    }

    #[test]
    fn validation() {
        assert!(matches!(
            Dataset::from_parts("t", GridSpec::line(2), 2, "", vec![0], vec![1]),
            Err(Error::EmptyGridPoint(1))
        ));
        assert!(Dataset::from_parts("t", GridSpec::line(1), 2, "", vec![0], vec![4]).is_err());
    }
}
