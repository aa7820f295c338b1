//! Comparison methods: constant and exact metrics, the naive fidelity
//! estimator, kernel PCA on bitstrings (SPCA) and per-slice confusion
//! classifiers (W).

mod modw;
mod spca;

use std::collections::HashMap;

pub use modw::{modw_peaks, modw_train_slice, HeadMode, ModwConfig};
pub use spca::{
    contiguous_labels, kernel_pca, kmeans, spca_kernel, spca_kernel_reference, spca_peaks, KMeansResult, KernelMatrix,
    SpcaEmbedding, SpcaPeaksConfig, DEFAULT_GAMMA, DEFAULT_TAU,
};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::manifold::{exact_fim, FimField, GridSpec, StatisticalManifold};

/// `g = alpha I` at every grid point.
pub fn fim_const(grid: &GridSpec, alpha: f64) -> Result<FimField> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let n = grid.param_dim();
    Ok(FimField::from_fn(grid.clone(), |_, _| {
        let mut v = Vec::new();
        for mu in 0..n {
            for nu in mu..n {
                v.push(if mu == nu { alpha } else { 0.0 });
            }
        }
        v
    }))
}

/// The exact FIM, as the "best possible" method.
pub fn fim_best(sm: &StatisticalManifold, grid: &GridSpec) -> Result<FimField> {
    exact_fim(sm, grid)
}

/// Estimates between adjacent grid points from empirical fidelities.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveEstimate {
    /// Midpoints between neighboring grid points.
    pub midpoints: Vec<f64>,
    pub values: Vec<f64>,
    /// Samples per point used after trimming.
    pub samples_per_point: usize,
}

/// `(8 / delta^2) (1 - sum_x sqrt(N_{x,-} N_{x,+}) / N)` for every pair of
/// neighbors on a line grid, where `N_{x,+-}` count identical bitstrings
/// among the first `N` rows of each point and `N` is the smallest count.
pub fn fim_naive(ds: &Dataset, axis: usize) -> Result<NaiveEstimate> {
    let grid = ds.grid();
    if grid.param_dim() != 1 || axis != 0 {
        return Err(Error::InvalidArgument(
            "the naive estimator is defined on one-dimensional grids only".into(),
        ));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    let rows = ds.rows_by_point();
    let n = rows.iter().map(Vec::len).min().unwrap_or(0);
    if n == 0 {
        return Err(Error::EmptyGridPoint(rows.iter().position(Vec::is_empty).unwrap_or(0)));
    }
    let tallies: Vec<HashMap<&[u64], usize>> = rows
        .iter()
        .map(|r| {
            let mut t = HashMap::new();
            for &i in &r[..n] {
                *t.entry(ds.sample(i)).or_insert(0) += 1;
            }
            t
        })
        .collect();
    let delta = grid.spacing(0);
    let mut midpoints = Vec::with_capacity(grid.len() - 1);
    let mut values = Vec::with_capacity(grid.len() - 1);
    for k in 0..grid.len() - 1 {
        let (a, b) = (&tallies[k], &tallies[k + 1]);
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let mut overlap: Vec<f64> = small
            .iter()
            .filter_map(|(x, &ca)| large.get(x).map(|&cb| ((ca * cb) as f64).sqrt()))
            .collect();
        // hash-map order is arbitrary; sum in a fixed order
        overlap.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let fidelity = overlap.iter().sum::<f64>() / n as f64;
        midpoints.push(0.5 * (grid.axis_coordinate(0, k) + grid.axis_coordinate(0, k + 1)));
        values.push(8.0 / (delta * delta) * (1.0 - fidelity));
    }
    Ok(NaiveEstimate { midpoints, values, samples_per_point: n })
}
