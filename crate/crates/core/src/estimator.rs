//! FIM estimates from a classifier, plus the exact "best" oracle.

use rayon::prelude::*;

use crate::classifier::LogOddsModel;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::manifold::{check_grid, triangle_index, triangle_len, FimField, GridSpec, StatisticalManifold};

/// `g(lambda) = mean over rows at lambda of l l^T` with `l = M(lambda, 0, x)`.
///
/// Grid points are processed in parallel; each point's rows are reduced in
/// dataset order, so the result does not depend on the thread count.
pub fn estimate_fim<M: LogOddsModel + Sync + ?Sized>(model: &M, ds: &Dataset) -> Result<FimField> {
    let n = model.param_dim();
    if n != ds.param_dim() {
        return Err(Error::Mismatch(format!(
            "model has {n} parameters, dataset grid has {}",
            ds.param_dim()
        )));
    }
    let grid = ds.grid().clone();
    let rows = ds.rows_by_point();
    let t = triangle_len(n);
    let per_point: Vec<Vec<f64>> = rows
        .par_iter()
        .enumerate()
        .map(|(point, rows)| {
            if rows.is_empty() {
                return Err(Error::EmptyGridPoint(point));
            }
            let lambda = grid.point(point);
            let mut acc = vec![0.0; t];
            for &r in rows {
                let l = model.output(&lambda, ds.sample(r))?;
                accumulate_outer(&mut acc, &l, 1.0);
            }
            let scale = 1.0 / rows.len() as f64;
            acc.iter_mut().for_each(|a| *a *= scale);
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    FimField::from_packed(grid, per_point.concat())
}

fn accumulate_outer(acc: &mut [f64], l: &[f64], weight: f64) {
    let n = l.len();
    for mu in 0..n {
        for nu in mu..n {
            acc[triangle_index(n, mu, nu)] += weight * l[mu] * l[nu];
        }
    }
}

/// The optimal classifier: `l = score(lambda0, x)` at `dlambda = 0` and the
/// exact log likelihood ratio between `lambda0 +- dlambda / 2` otherwise.
#[derive(Debug, Clone)]
pub struct BestModel {
    sm: StatisticalManifold,
}

pub fn best_model(sm: &StatisticalManifold) -> BestModel {
    BestModel { sm: sm.clone() }
}

impl BestModel {
    pub fn manifold(&self) -> &StatisticalManifold {
        &self.sm
    }
}

impl LogOddsModel for BestModel {
    fn param_dim(&self) -> usize {
        self.sm.param_dim()
    }

    fn output(&self, lambda0: &[f64], x: &[u64]) -> Result<Vec<f64>> {
        if self.sm.log_prob(lambda0, x) == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability);
        }
        Ok(self.sm.score(lambda0, x))
    }

    fn log_odds(&self, lambda0: &[f64], dlambda: &[f64], x: &[u64]) -> Result<f64> {
        if dlambda.iter().all(|d| *d == 0.0) {
            return self.output(lambda0, x).map(|_| 0.0);
        }
        let plus: Vec<f64> = lambda0.iter().zip(dlambda).map(|(l, d)| l + d / 2.0).collect();
        let minus: Vec<f64> = lambda0.iter().zip(dlambda).map(|(l, d)| l - d / 2.0).collect();
        let (lp, lm) = (self.sm.log_prob(&plus, x), self.sm.log_prob(&minus, x));
        if lp == f64::NEG_INFINITY && lm == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability);
        }
        Ok(lp - lm)
    }
}

/// `E_{x ~ P_lambda}[l* l*^T]` by enumerating the sample space, with `l*`
/// taken from [`BestModel`]. Outcomes of probability zero never occur and
/// are skipped.
pub fn exact_expectation_fim(sm: &StatisticalManifold, grid: &GridSpec) -> Result<FimField> {
    check_grid(sm, grid)?;
    let oracle = best_model(sm);
    let dist: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| sm.distribution(&grid.point(i)))
        .collect::<Result<_>>()?;
    let n = sm.param_dim();
    let per_point: Vec<Vec<f64>> = dist
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let lambda = grid.point(i);
            let mut acc = vec![0.0; triangle_len(n)];
            for (x, &px) in p.iter().enumerate() {
                if px > 0.0 {
                    accumulate_outer(&mut acc, &oracle.output(&lambda, &[x as u64])?, px);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    FimField::from_packed(grid.clone(), per_point.concat())
}

/// Expected cross-entropy of the Bayes classifier on the paired task, with
/// the pair of grid points drawn uniformly among distinct unordered pairs
/// and each label equally likely. For one pair this is
/// `ln 2 - JS(P_a, P_b)`.
pub fn best_expected_cross_entropy(sm: &StatisticalManifold, grid: &GridSpec) -> Result<f64> {
    check_grid(sm, grid)?;
    if grid.len() < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    let dist: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| sm.distribution(&grid.point(i)))
        .collect::<Result<_>>()?;
    let m = grid.len();
    let total: f64 = (0..m)
        .into_par_iter()
        .map(|a| {
            ((a + 1)..m)
                .map(|b| pair_bayes_cross_entropy(&dist[a], &dist[b]))
                .sum::<f64>()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total / (m * (m - 1) / 2) as f64)
}

/// `1/2 sum_x [p ln(1 + q/p) + q ln(1 + p/q)]`.
fn pair_bayes_cross_entropy(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let s = a + b;
        if a > 0.0 {
            acc += a * (s / a).ln();
        }
        if b > 0.0 {
            acc += b * (s / b).ln();
        }
    }
    0.5 * acc
}
