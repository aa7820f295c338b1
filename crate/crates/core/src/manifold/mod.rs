//! Synthetic statistical manifolds over bitstrings with exact oracles.
//!
//! Every family here has an enumerable sample space (up to
//! [`ENUMERATION_LIMIT`] bits), so probabilities, scores and the Fisher
//! information metric can be computed exactly and used as ground truth.

mod field;
mod grid;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use field::{format_f64, triangle_index, triangle_len, FimField};
pub use grid::GridSpec;

use crate::bits;
use crate::error::{Error, Result};

/// Largest number of bits for which the sample space is enumerated.
pub const ENUMERATION_LIMIT: usize = 20;

/// Default steepness of `sigmoid_step1d`.
pub const DEFAULT_SIGMOID_STEEPNESS: f64 = 20.0;

/// Default step for [`fim_from_fidelity`].
pub const DEFAULT_FIDELITY_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifoldKind {
    /// iid bits with success probability `0.1 + 0.8 * lambda`.
    Bernoulli1d,
    /// Two blocks of iid bits, each driven by one parameter.
    Bernoulli2d,
    /// iid bits with a logistic success probability centered at 1/2.
    SigmoidStep1d,
    /// Closed nearest-neighbour Ising chain at inverse temperature `2 lambda`.
    IsingChain1d,
}

impl ManifoldKind {
    pub const ALL: [ManifoldKind; 4] = [
        ManifoldKind::Bernoulli1d,
        ManifoldKind::Bernoulli2d,
        ManifoldKind::SigmoidStep1d,
        ManifoldKind::IsingChain1d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ManifoldKind::Bernoulli1d => "bernoulli1d",
            ManifoldKind::Bernoulli2d => "bernoulli2d",
            ManifoldKind::SigmoidStep1d => "sigmoid_step1d",
            ManifoldKind::IsingChain1d => "ising_chain1d",
        }
    }

    pub fn param_dim(self) -> usize {
        match self {
            ManifoldKind::Bernoulli2d => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ManifoldKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownManifold(s.to_string()))
    }
}

/// A family of distributions over `n_bits`-bit strings indexed by
/// `lambda` in `[0, 1]^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalManifold {
    kind: ManifoldKind,
    n_bits: usize,
    steepness: f64,
}

/// Builds a manifold of the given kind.
///
/// Recognised shape parameters: `k` (steepness of `sigmoid_step1d`).
pub fn make_manifold(
    kind: &str,
    n_bits: usize,
    shape_params: &BTreeMap<String, f64>,
) -> Result<StatisticalManifold> {
    let kind: ManifoldKind = kind.parse()?;
    StatisticalManifold::new(kind, n_bits, shape_params)
}

impl StatisticalManifold {
    pub fn new(
        kind: ManifoldKind,
        n_bits: usize,
        shape_params: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        if n_bits == 0 {
            return Err(Error::InvalidArgument("n_bits must be at least 1".into()));
        }
        if kind == ManifoldKind::Bernoulli2d && n_bits < 2 {
            return Err(Error::InvalidArgument(
                "bernoulli2d needs at least 2 bits".into(),
            ));
        }
        if kind == ManifoldKind::IsingChain1d && n_bits > ENUMERATION_LIMIT {
            return Err(Error::TooManyBits {
                n_bits,
                limit: ENUMERATION_LIMIT,
            });
        }
        for key in shape_params.keys() {
            if !(kind == ManifoldKind::SigmoidStep1d && key == "k") {
                return Err(Error::InvalidArgument(format!(
                    "unknown shape parameter `{key}` for {kind}"
                )));
            }
        }
        let steepness = shape_params
            .get("k")
            .copied()
            .unwrap_or(DEFAULT_SIGMOID_STEEPNESS);
        if !steepness.is_finite() {
            return Err(Error::InvalidArgument("k must be finite".into()));
        }
        Ok(Self {
            kind,
            n_bits,
            steepness,
        })
    }

    pub fn bernoulli1d(n_bits: usize) -> Self {
        Self::new(ManifoldKind::Bernoulli1d, n_bits, &BTreeMap::new()).expect("valid")
    }

    pub fn bernoulli2d(n_bits: usize) -> Self {
        Self::new(ManifoldKind::Bernoulli2d, n_bits, &BTreeMap::new()).expect("valid")
    }

    pub fn sigmoid_step1d(n_bits: usize, k: f64) -> Self {
        let params = BTreeMap::from([("k".to_string(), k)]);
        Self::new(ManifoldKind::SigmoidStep1d, n_bits, &params).expect("valid")
    }

    pub fn ising_chain1d(n_bits: usize) -> Result<Self> {
        Self::new(ManifoldKind::IsingChain1d, n_bits, &BTreeMap::new())
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn param_dim(&self) -> usize {
        self.kind.param_dim()
    }

    /// Shape parameters needed to rebuild this manifold with [`make_manifold`].
    pub fn shape_params(&self) -> BTreeMap<String, f64> {
        match self.kind {
            ManifoldKind::SigmoidStep1d => BTreeMap::from([("k".to_string(), self.steepness)]),
            _ => BTreeMap::new(),
        }
    }

    pub fn is_enumerable(&self) -> bool {
        self.n_bits <= ENUMERATION_LIMIT
    }

    fn require_enumerable(&self) -> Result<()> {
        if self.is_enumerable() {
            Ok(())
        } else {
            Err(Error::TooManyBits {
                n_bits: self.n_bits,
                limit: ENUMERATION_LIMIT,
            })
        }
    }

    fn check_point(&self, lambda: &[f64]) {
        assert_eq!(
            lambda.len(),
            self.param_dim(),
            "{} takes {} parameters",
            self.name(),
            self.param_dim()
        );
    }

    /// Bits `[0, split)` belong to the first block of `bernoulli2d`.
    fn block_split(&self) -> usize {
        self.n_bits / 2
    }

    /// Natural log of `P_lambda(x)`; `-inf` where the probability vanishes.
    pub fn log_prob(&self, lambda: &[f64], x: &[u64]) -> f64 {
        self.check_point(lambda);
        let n = self.n_bits;
        match self.kind {
            ManifoldKind::Bernoulli1d => {
                let ones = bits::popcount_prefix(x, n);
                iid_log_prob(bernoulli_phi(lambda[0]), ones, n)
            }
            ManifoldKind::Bernoulli2d => {
                let h = self.block_split();
                let ones0 = bits::popcount_prefix(x, h);
                let ones1 = bits::popcount_prefix(x, n) - ones0;
                iid_log_prob(bernoulli_phi(lambda[0]), ones0, h)
                    + iid_log_prob(bernoulli_phi(lambda[1]), ones1, n - h)
            }
            ManifoldKind::SigmoidStep1d => {
                let t = self.steepness * (lambda[0] - 0.5);
                let ones = bits::popcount_prefix(x, n) as f64;
                // ln(phi) = -softplus(-t), ln(1 - phi) = -softplus(t)
                -ones * softplus(-t) - (n as f64 - ones) * softplus(t)
            }
            ManifoldKind::IsingChain1d => {
                let beta = 2.0 * lambda[0];
                -beta * ising_energy(x, n) - ising_log_partition(beta, n)
            }
        }
    }

    pub fn prob(&self, lambda: &[f64], x: &[u64]) -> f64 {
        self.log_prob(lambda, x).exp()
    }

    /// Gradient of `ln P_lambda(x)` with respect to `lambda`.
    pub fn score(&self, lambda: &[f64], x: &[u64]) -> Vec<f64> {
        self.check_point(lambda);
        let n = self.n_bits;
        match self.kind {
            ManifoldKind::Bernoulli1d => {
                let ones = bits::popcount_prefix(x, n);
                vec![iid_bernoulli_score(lambda[0], ones, n)]
            }
            ManifoldKind::Bernoulli2d => {
                let h = self.block_split();
                let ones0 = bits::popcount_prefix(x, h);
                let ones1 = bits::popcount_prefix(x, n) - ones0;
                vec![
                    iid_bernoulli_score(lambda[0], ones0, h),
                    iid_bernoulli_score(lambda[1], ones1, n - h),
                ]
            }
            ManifoldKind::SigmoidStep1d => {
                let phi = sigmoid(self.steepness * (lambda[0] - 0.5));
                let ones = bits::popcount_prefix(x, n) as f64;
                vec![self.steepness * (ones - n as f64 * phi)]
            }
            ManifoldKind::IsingChain1d => {
                let beta = 2.0 * lambda[0];
                let mean_energy = ising_mean_energy(beta, n);
                vec![-2.0 * (ising_energy(x, n) - mean_energy)]
            }
        }
    }

    /// The full probability vector over `0..2^n_bits`.
    pub fn distribution(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        self.require_enumerable()?;
        Ok((0..1u64 << self.n_bits)
            .map(|x| self.prob(lambda, &[x]))
            .collect())
    }
}

fn bernoulli_phi(lambda: f64) -> f64 {
    0.1 + 0.8 * lambda
}

fn iid_log_prob(phi: f64, ones: usize, n: usize) -> f64 {
    let zeros = n - ones;
    let mut acc = 0.0;
    if ones > 0 {
        acc += ones as f64 * phi.ln();
    }
    if zeros > 0 {
        acc += zeros as f64 * (1.0 - phi).ln();
    }
    acc
}

fn iid_bernoulli_score(lambda: f64, ones: usize, n: usize) -> f64 {
    let phi = bernoulli_phi(lambda);
    0.8 * (ones as f64 / phi - (n - ones) as f64 / (1.0 - phi))
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `E(x) = sum_j s_j s_{j+1}` on a closed chain with `s_j = 2 x_j - 1`.
fn ising_energy(x: &[u64], n: usize) -> f64 {
    let mut disagreements = 0usize;
    for j in 0..n {
        if bits::bit(x, j) != bits::bit(x, (j + 1) % n) {
            disagreements += 1;
        }
    }
    n as f64 - 2.0 * disagreements as f64
}

/// `ln Z` from the transfer-matrix eigenvalues `2 cosh(beta)` and
/// `-2 sinh(beta)`: `Z = (2 cosh b)^n + (-2 sinh b)^n`.
fn ising_log_partition(beta: f64, n: usize) -> f64 {
    let ratio = -beta.tanh();
    n as f64 * (2.0 * beta.cosh()).ln() + ratio.powi(n as i32).ln_1p()
}

/// `<E> = -d ln Z / d beta`.
fn ising_mean_energy(beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    let ratio = -beta.tanh();
    let sech2 = 1.0 / (beta.cosh() * beta.cosh());
    let rn = ratio.powi(n as i32);
    let d_log_z = nf * beta.tanh() - nf * ratio.powi(n as i32 - 1) * sech2 / (1.0 + rn);
    -d_log_z
}

/// Exact FIM at every grid point from per-family closed forms:
/// `n phi'^2 / (phi (1 - phi))` for iid Bernoulli bits and `4 Var(E)` for
/// the Ising chain, whose energy levels are counted by domain walls.
pub fn exact_fim(sm: &StatisticalManifold, grid: &GridSpec) -> Result<FimField> {
    check_grid(sm, grid)?;
    let n = sm.n_bits();
    Ok(FimField::from_fn(grid.clone(), |_, lambda| match sm.kind() {
        ManifoldKind::Bernoulli1d => vec![iid_bernoulli_fim(bernoulli_phi(lambda[0]), 0.8, n)],
        ManifoldKind::Bernoulli2d => {
            let h = sm.block_split();
            vec![
                iid_bernoulli_fim(bernoulli_phi(lambda[0]), 0.8, h),
                0.0,
                iid_bernoulli_fim(bernoulli_phi(lambda[1]), 0.8, n - h),
            ]
        }
        ManifoldKind::SigmoidStep1d => {
            let k = sm.steepness;
            let phi = sigmoid(k * (lambda[0] - 0.5));
            vec![iid_bernoulli_fim(phi, k * phi * (1.0 - phi), n)]
        }
        ManifoldKind::IsingChain1d => vec![4.0 * ising_energy_variance(2.0 * lambda[0], n)],
    }))
}

/// FIM of `n` iid bits with success probability `phi` and `dphi/dlambda = dphi`.
fn iid_bernoulli_fim(phi: f64, dphi: f64, n: usize) -> f64 {
    if n == 0 || dphi == 0.0 {
        return 0.0;
    }
    n as f64 * dphi * dphi / (phi * (1.0 - phi))
}

/// `Var(E)` on a closed chain of `n` spins. A configuration with `k` domain
/// walls has `E = n - 2k`; `k` is even and each wall set is realized by two
/// spin configurations, so level `k` has degeneracy `2 C(n, k)`.
fn ising_energy_variance(beta: f64, n: usize) -> f64 {
    let levels: Vec<(f64, f64)> = (0..=n)
        .step_by(2)
        .map(|k| {
            let energy = n as f64 - 2.0 * k as f64;
            (energy, 2f64.ln() + ln_binomial(n, k) - beta * energy)
        })
        .collect();
    let top = levels.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut e1) = (0.0, 0.0);
    for &(e, lw) in &levels {
        let w = (lw - top).exp();
        z += w;
        e1 += w * e;
    }
    let mean = e1 / z;
    levels
        .iter()
        .map(|&(e, lw)| (lw - top).exp() * (e - mean).powi(2))
        .sum::<f64>()
        / z
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

pub(crate) fn check_grid(sm: &StatisticalManifold, grid: &GridSpec) -> Result<()> {
    if sm.param_dim() != grid.param_dim() {
        return Err(Error::Mismatch(format!(
            "{} has {} parameters but the grid has {} axes",
            sm.name(),
            sm.param_dim(),
            grid.param_dim()
        )));
    }
    Ok(())
}

/// Classical fidelity `F_c = sum_x sqrt(P(x) P'(x))`.
pub fn classical_fidelity(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum()
}

/// `1 - F_c` for normalized distributions, evaluated as the squared
/// Hellinger form `sum_x (sqrt(P) - sqrt(P'))^2 / 2` to avoid cancellation.
pub fn infidelity(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2))
        .sum::<f64>()
}

/// Finite-difference FIM along `v` from the fidelity expansion
/// `F_c = 1 - g(lambda; v) eps^2 / 8 + o(eps^2)`, using the symmetric pair
/// `lambda -+ eps v / 2`.
pub fn fim_from_fidelity(
    sm: &StatisticalManifold,
    lambda: &[f64],
    v: &[f64],
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    if lambda.len() != sm.param_dim() || v.len() != sm.param_dim() {
        return Err(Error::Mismatch("point and direction must match param_dim".into()));
    }
    let minus: Vec<f64> = lambda.iter().zip(v).map(|(l, d)| l - eps * d / 2.0).collect();
    let plus: Vec<f64> = lambda.iter().zip(v).map(|(l, d)| l + eps * d / 2.0).collect();
    for p in [&minus, &plus] {
        if p.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::OutsideDomain(p.clone()));
        }
    }
    Ok(8.0 * infidelity(&sm.distribution(&minus)?, &sm.distribution(&plus)?) / (eps * eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_test_manifolds() -> Vec<StatisticalManifold> {
        vec![
            StatisticalManifold::bernoulli1d(5),
            StatisticalManifold::bernoulli2d(6),
            StatisticalManifold::sigmoid_step1d(5, 20.0),
            StatisticalManifold::ising_chain1d(6).unwrap(),
        ]
    }

    fn sample_lambdas(sm: &StatisticalManifold, count: usize) -> Vec<Vec<f64>> {
        let mut rng = crate::rng::SeededRng::new(42);
        (0..count)
            .map(|_| (0..sm.param_dim()).map(|_| rng.next_f64()).collect())
            .collect()
    }

    #[test]
    fn bernoulli_half_is_fair_coin() {
        let sm = StatisticalManifold::bernoulli1d(1);
        assert_eq!(sm.prob(&[0.5], &[1]), 0.5);
        assert_eq!(sm.prob(&[0.5], &[0]), 0.5);
    }

    #[test]
    fn ising_at_zero_is_uniform() {
        let sm = StatisticalManifold::ising_chain1d(4).unwrap();
        for x in 0..16u64 {
            assert!((sm.prob(&[0.0], &[x]) - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn normalization_at_random_points() {
        for sm in all_test_manifolds() {
            for lambda in sample_lambdas(&sm, 100) {
                let total: f64 = sm.distribution(&lambda).unwrap().iter().sum();
                assert!((total - 1.0).abs() < 1e-12, "{} at {lambda:?}: {total}", sm.name());
            }
        }
    }

    #[test]
    fn score_matches_finite_differences() {
        let h = 1e-5;
        for sm in all_test_manifolds() {
            for lambda in sample_lambdas(&sm, 10) {
                for x in 0..1u64 << sm.n_bits() {
                    let s = sm.score(&lambda, &[x]);
                    for mu in 0..sm.param_dim() {
                        let mut up = lambda.clone();
                        let mut down = lambda.clone();
                        up[mu] += h;
                        down[mu] -= h;
                        let fd = (sm.log_prob(&up, &[x]) - sm.log_prob(&down, &[x])) / (2.0 * h);
                        assert!(
                            (fd - s[mu]).abs() < 1e-6 * (1.0 + s[mu].abs()),
                            "{} x={x} mu={mu}: {fd} vs {}",
                            sm.name(),
                            s[mu]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn score_has_zero_mean() {
        for sm in all_test_manifolds() {
            for lambda in sample_lambdas(&sm, 10) {
                let mut mean = vec![0.0; sm.param_dim()];
                for x in 0..1u64 << sm.n_bits() {
                    let p = sm.prob(&lambda, &[x]);
                    for (m, s) in mean.iter_mut().zip(sm.score(&lambda, &[x])) {
                        *m += p * s;
                    }
                }
                assert!(mean.iter().all(|m| m.abs() < 1e-9), "{}: {mean:?}", sm.name());
            }
        }
    }

    #[test]
    fn single_bit_bernoulli_fim() {
        let sm = StatisticalManifold::bernoulli1d(1);
        let g = exact_fim(&sm, &GridSpec::line(1)).unwrap();
        assert!((g.get(0, 0, 0) - 2.56).abs() < 1e-12);
        let fid = fim_from_fidelity(&sm, &[0.5], &[1.0], 1e-3).unwrap();
        assert!((fid - 2.56).abs() < 1e-4, "{fid}");
    }

    #[test]
    fn fim_is_additive_over_iid_bits() {
        let sm = StatisticalManifold::bernoulli1d(8);
        let g = exact_fim(&sm, &GridSpec::line(1)).unwrap();
        assert!((g.get(0, 0, 0) - 20.48).abs() < 1e-10);
    }

    #[test]
    fn ising_fim_is_four_times_energy_variance() {
        // Independent oracle: brute-force energy moments.
        let n = 6;
        let sm = StatisticalManifold::ising_chain1d(n).unwrap();
        let grid = GridSpec::line(8);
        let g = exact_fim(&sm, &grid).unwrap();
        for i in 0..grid.len() {
            let beta = 2.0 * grid.point(i)[0];
            let (mut z, mut e1, mut e2) = (0.0, 0.0, 0.0);
            for x in 0..1u32 << n {
                let spins: Vec<f64> = (0..n).map(|j| if x >> j & 1 == 1 { 1.0 } else { -1.0 }).collect();
                let e: f64 = (0..n).map(|j| spins[j] * spins[(j + 1) % n]).sum();
                let w = (-beta * e).exp();
                z += w;
                e1 += w * e;
                e2 += w * e * e;
            }
            let var = e2 / z - (e1 / z).powi(2);
            assert!((g.get(i, 0, 0) - 4.0 * var).abs() < 1e-9 * (1.0 + var));
        }
    }

    #[test]
    fn constant_family_has_zero_fidelity_fim() {
        let sm = StatisticalManifold::sigmoid_step1d(3, 0.0);
        for eps in [1e-3, 1e-2, 0.5] {
            assert_eq!(fim_from_fidelity(&sm, &[0.5], &[1.0], eps).unwrap(), 0.0);
        }
    }

    #[test]
    fn fidelity_matches_exact_for_ising() {
        let sm = StatisticalManifold::ising_chain1d(4).unwrap();
        let exact = exact_fim(&sm, &GridSpec::line(1)).unwrap().get(0, 0, 0);
        let fid = fim_from_fidelity(&sm, &[0.5], &[1.0], 1e-3).unwrap();
        assert!(((fid - exact) / exact).abs() < 1e-3);
    }

    #[test]
    fn fidelity_step_must_stay_in_domain() {
        let sm = StatisticalManifold::bernoulli1d(2);
        assert!(matches!(
            fim_from_fidelity(&sm, &[0.0], &[1.0], 1e-3),
            Err(Error::OutsideDomain(_))
        ));
        assert!(fim_from_fidelity(&sm, &[0.5], &[1.0], 0.0).is_err());
    }

    #[test]
    fn closed_form_matches_score_covariance_by_enumeration() {
        let grid = GridSpec::line(7);
        for sm in all_test_manifolds().into_iter().filter(|sm| sm.param_dim() == 1) {
            let g = exact_fim(&sm, &grid).unwrap();
            for (i, lambda) in grid.points().enumerate() {
                let direct: f64 = (0..1u64 << sm.n_bits())
                    .map(|x| sm.prob(&lambda, &[x]) * sm.score(&lambda, &[x])[0].powi(2))
                    .sum();
                assert!((g.get(i, 0, 0) - direct).abs() < 1e-9 * (1.0 + direct), "{}", sm.name());
            }
        }
    }

    #[test]
    fn exact_fim_is_symmetric_psd() {
        let sm = StatisticalManifold::bernoulli2d(6);
        let g = exact_fim(&sm, &GridSpec::square(4, 4)).unwrap();
        assert!(g.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(make_manifold("potts", 3, &BTreeMap::new()), Err(Error::UnknownManifold(_))));
        assert!(matches!(
            StatisticalManifold::ising_chain1d(21),
            Err(Error::TooManyBits { .. })
        ));
        let big = StatisticalManifold::bernoulli1d(40);
        assert!(matches!(big.distribution(&[0.5]), Err(Error::TooManyBits { .. })));
        assert!(exact_fim(&big, &GridSpec::line(2)).is_ok());
        assert!(make_manifold("bernoulli1d", 0, &BTreeMap::new()).is_err());
    }

    #[test]
    fn bit_relabeling_leaves_bernoulli_fim_unchanged() {
        // For iid bits every probability depends on the popcount only, so
        // reversing bit order is a bijection of the sample space that
        // preserves each term of the score-covariance sum.
        let sm = StatisticalManifold::bernoulli1d(6);
        let lambda = [0.3];
        let reverse = |x: u64| (0..6).fold(0u64, |acc, j| acc | ((x >> j & 1) << (5 - j)));
        let mut direct = 0.0;
        let mut relabeled = 0.0;
        for x in 0..64u64 {
            let s = sm.score(&lambda, &[x])[0];
            direct += sm.prob(&lambda, &[x]) * s * s;
            let y = reverse(x);
            let sy = sm.score(&lambda, &[y])[0];
            relabeled += sm.prob(&lambda, &[y]) * sy * sy;
        }
        assert_eq!(direct, relabeled);
    }
}
