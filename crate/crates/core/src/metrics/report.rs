use serde::{Deserialize, Serialize};

use super::distance::{all_pair_distances, dist_mse, dist_mseps, dist_naive, PairBudget};
use super::ranking::dist_re;
use super::stats::{format_mean_std, mean_std, paired_t_test};
use crate::error::{Error, Result};
use crate::manifold::FimField;

/// The distance-based error metrics of one prediction against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dist_mse: f64,
    pub dist_mseps: f64,
    pub dist_re: f64,
    pub dist_naive: f64,
    pub n_pairs: usize,
    pub pair_budget: PairBudget,
    pub seed: u64,
}

pub const METRIC_NAMES: [&str; 4] = ["dist_mse", "dist_mseps", "dist_re", "dist_naive"];

impl MetricReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "dist_mse" => Some(self.dist_mse),
            "dist_mseps" => Some(self.dist_mseps),
            "dist_re" => Some(self.dist_re),
            "dist_naive" => Some(self.dist_naive),
            _ => None,
        }
    }
}

/// All four metrics on a shared set of grid-point pairs.
pub fn evaluate(pred: &FimField, truth: &FimField, budget: PairBudget, seed: u64) -> Result<MetricReport> {
    if pred.grid() != truth.grid() {
        return Err(Error::Mismatch("prediction and truth live on different grids".into()));
    }
    let mut pd = all_pair_distances(pred, budget, seed)?;
    pd.source = "pred".into();
    let mut td = all_pair_distances(truth, budget, seed)?;
    td.source = "truth".into();
    Ok(MetricReport {
        dist_mse: dist_mse(&pd, &td)?,
        dist_mseps: dist_mseps(&pd, &td)?,
        dist_re: dist_re(&pd, &td)?,
        dist_naive: dist_naive(pred, truth)?,
        n_pairs: pd.len(),
        pair_budget: budget,
        seed,
    })
}

/// One row of a method comparison across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub mean_a: f64,
    pub std_a: f64,
    pub mean_b: f64,
    pub std_b: f64,
    pub formatted_a: String,
    pub formatted_b: String,
    pub t: f64,
    pub p: f64,
    pub n: usize,
}

/// Pairs reports of two methods by seed and runs a paired t-test per metric.
pub fn compare(a: &[MetricReport], b: &[MetricReport], decimals: Option<usize>) -> Result<Vec<MetricComparison>> {
    let (a, b) = (by_seed(a), by_seed(b));
    let seeds_a: Vec<u64> = a.iter().map(|r| r.seed).collect();
    let seeds_b: Vec<u64> = b.iter().map(|r| r.seed).collect();
    if seeds_a != seeds_b {
        return Err(Error::Mismatch(format!(
            "seed sets differ: {seeds_a:?} vs {seeds_b:?}"
        )));
    }
    if seeds_a.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("duplicate seed in report set".into()));
    }
    METRIC_NAMES
        .iter()
        .map(|&name| {
            let xa: Vec<f64> = a.iter().map(|r| r.metric(name).unwrap()).collect();
            let xb: Vec<f64> = b.iter().map(|r| r.metric(name).unwrap()).collect();
            let test = paired_t_test(&xa, &xb)?;
            let (mean_a, std_a) = mean_std(&xa);
            let (mean_b, std_b) = mean_std(&xb);
            Ok(MetricComparison {
                metric: name.to_string(),
                mean_a,
                std_a,
                mean_b,
                std_b,
                formatted_a: format_mean_std(mean_a, std_a, decimals),
                formatted_b: format_mean_std(mean_b, std_b, decimals),
                t: test.t,
                p: test.p,
                n: test.n,
            })
        })
        .collect()
}

fn by_seed(reports: &[MetricReport]) -> Vec<&MetricReport> {
    let mut v: Vec<&MetricReport> = reports.iter().collect();
    v.sort_by_key(|r| r.seed);
    v
}
