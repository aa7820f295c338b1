use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{triangle_index, FimField, GridSpec};
use crate::rng::SeededRng;

/// How many grid-point pairs enter a distance-based metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairBudget {
    All(AllPairs),
    Count(usize),
}

/// Serializes as the string `"all"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllPairs {
    All,
}

pub const DEFAULT_PAIR_LIMIT: usize = 256;
pub const DEFAULT_SUBSAMPLED_PAIRS: usize = 100_000;

impl PairBudget {
    pub const ALL: PairBudget = PairBudget::All(AllPairs::All);

    /// All pairs on grids of at most 256 points, otherwise `1e5` pairs.
    pub fn default_for(grid_len: usize) -> Self {
        if grid_len <= DEFAULT_PAIR_LIMIT {
            Self::ALL
        } else {
            Self::Count(DEFAULT_SUBSAMPLED_PAIRS)
        }
    }
}

impl std::str::FromStr for PairBudget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Self::ALL);
        }
        s.parse()
            .map(Self::Count)
            .map_err(|_| Error::Parse(format!("pair budget must be 'all' or a count, got {s:?}")))
    }
}

impl std::fmt::Display for PairBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::All(_) => write!(f, "all"),
            Self::Count(k) => write!(f, "{k}"),
        }
    }
}

/// Straight-line distances for a list of unordered grid-point pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairDistances {
    /// `(i, j)` flat grid indices with `i < j`.
    pub pairs: Vec<(usize, usize)>,
    pub values: Vec<f64>,
    /// Which field the distances were measured on.
    pub source: String,
}

impl PairDistances {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_same_pairs(&self, other: &PairDistances) -> Result<()> {
        if self.pairs != other.pairs {
            return Err(Error::Mismatch(format!(
                "pair sets of {:?} and {:?} differ",
                self.source, other.source
            )));
        }
        Ok(())
    }
}

/// Length of the straight segment from `a` to `b` under `g`, treating `g` as
/// constant on the cell around each grid point.
///
/// The segment is cut at every cell face it crosses and each piece is
/// weighted by `sqrt(g(v))` of the cell containing it. A segment running
/// inside a shared face uses the average of the tensors on both sides.
/// Negative quadratic forms (possible in imported fields) count as zero.
pub fn dist_sl(g: &FimField, a: &[f64], b: &[f64]) -> Result<f64> {
    let grid = g.grid();
    let n = grid.param_dim();
    if a.len() != n || b.len() != n {
        return Err(Error::Mismatch("endpoints must match the grid dimension".into()));
    }
    for p in [a, b] {
        if p.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::OutsideDomain(p.to_vec()));
        }
    }
    // Traverse in a canonical direction so that d(a, b) == d(b, a) exactly.
    let (a, b) = if a.partial_cmp(b) == Some(std::cmp::Ordering::Greater) {
        (b, a)
    } else {
        (a, b)
    };
    let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    if v.iter().all(|d| *d == 0.0) {
        return Ok(0.0);
    }

    let mut cuts = vec![0.0, 1.0];
    for axis in 0..n {
        if v[axis] == 0.0 {
            continue;
        }
        let l = grid.sizes()[axis];
        let (lo, hi) = if v[axis] > 0.0 { (a[axis], b[axis]) } else { (b[axis], a[axis]) };
        for k in 1..l {
            let face = k as f64 / l as f64;
            if face > lo && face < hi {
                cuts.push((face - a[axis]) / v[axis]);
            }
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    cuts.dedup();

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let dt = w[1] - w[0];
        if dt <= 0.0 {
            continue;
        }
        let mid: Vec<f64> = (0..n).map(|mu| a[mu] + 0.5 * (w[0] + w[1]) * v[mu]).collect();
        total += dt * segment_speed(g, &mid, &v, a)?;
    }
    Ok(total)
}

/// `sqrt(g(v))` on the cell containing `mid`, averaging across a face when
/// the segment lies inside one.
fn segment_speed(g: &FimField, mid: &[f64], v: &[f64], a: &[f64]) -> Result<f64> {
    let grid = g.grid();
    let n = grid.param_dim();
    let mut choices: Vec<Vec<usize>> = Vec::with_capacity(n);
    for axis in 0..n {
        let l = grid.sizes()[axis];
        let scaled = a[axis] * l as f64;
        if v[axis] == 0.0 && scaled.fract() == 0.0 && scaled > 0.0 && scaled < l as f64 {
            let k = scaled as usize;
            choices.push(vec![k - 1, k]);
        } else {
            choices.push(vec![cell_index(grid, axis, mid[axis])?]);
        }
    }
    let combos: Vec<Vec<usize>> = choices.iter().fold(vec![vec![]], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |&k| {
                    let mut next = prefix.clone();
                    next.push(k);
                    next
                })
            })
            .collect()
    });
    let q = combos
        .iter()
        .map(|multi| g.quadratic_form(grid.flat_index(multi), v))
        .sum::<f64>()
        / combos.len() as f64;
    Ok(q.max(0.0).sqrt())
}

fn cell_index(grid: &GridSpec, axis: usize, c: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::OutsideDomain(vec![c]));
    }
    let l = grid.sizes()[axis];
    Ok(((c * l as f64).floor() as usize).min(l - 1))
}

/// Number of unordered pairs of distinct grid points.
pub fn total_pairs(grid_len: usize) -> usize {
    grid_len * grid_len.saturating_sub(1) / 2
}

/// The pairs selected by `budget`, in lexicographic order of `(i, j)`.
/// A budget below the total draws a seeded uniform subset without
/// replacement.
pub fn select_pairs(grid_len: usize, budget: PairBudget, seed: u64) -> Vec<(usize, usize)> {
    let total = total_pairs(grid_len);
    let wanted = match budget {
        PairBudget::Count(k) if k < total => k,
        _ => return (0..grid_len).flat_map(|i| ((i + 1)..grid_len).map(move |j| (i, j))).collect(),
    };
    // Floyd's algorithm: `wanted` distinct ranks out of `total`.
    let mut rng = SeededRng::new(seed);
    let mut chosen = std::collections::HashSet::with_capacity(wanted);
    for upper in (total - wanted)..total {
        let r = rng.below(upper + 1);
        if !chosen.insert(r) {
            chosen.insert(upper);
        }
    }
    let mut ranks: Vec<usize> = chosen.into_iter().collect();
    ranks.sort_unstable();
    ranks.into_iter().map(|r| pair_from_rank(grid_len, r)).collect()
}

/// Inverse of the lexicographic rank of `(i, j)`, `i < j`.
fn pair_from_rank(m: usize, rank: usize) -> (usize, usize) {
    // first rank of row i is i m - i (i + 1) / 2
    let start = |i: usize| i * m - i * (i + 1) / 2;
    let (mut lo, mut hi) = (0, m - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if start(mid) <= rank {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = if start(hi) <= rank { hi } else { lo };
    (i, i + 1 + rank - start(i))
}

/// Straight-line distances between grid-point pairs under `g`.
///
/// On a line each distance is half of cell `i`, the whole cells strictly
/// between, and half of cell `j`. The inner cells are accumulated left to
/// right from `i`, so runs of equal cells give bit-identical sums and a
/// constant field produces exact ties. In two dimensions each pair is
/// traversed separately (in parallel, output in pair order).
pub fn all_pair_distances(g: &FimField, budget: PairBudget, seed: u64) -> Result<PairDistances> {
    let grid = g.grid();
    let pairs = select_pairs(grid.len(), budget, seed);
    let values = if grid.param_dim() == 1 {
        line_distances(g, &pairs)
    } else {
        pairs
            .par_iter()
            .map(|&(i, j)| dist_sl(g, &grid.point(i), &grid.point(j)))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(PairDistances {
        pairs,
        values,
        source: String::new(),
    })
}

fn line_distances(g: &FimField, pairs: &[(usize, usize)]) -> Vec<f64> {
    let h = g.grid().spacing(0);
    let roots: Vec<f64> = (0..g.grid().len())
        .map(|i| g.get(i, 0, 0).max(0.0).sqrt())
        .collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let ends = |k: usize| {
        let (a, b) = pairs[k];
        (a.min(b), a.max(b))
    };
    order.sort_unstable_by_key(|&k| ends(k));
    let mut values = vec![0.0; pairs.len()];
    let mut current = usize::MAX;
    let (mut reached, mut inner) = (0, 0.0);
    for k in order {
        let (i, j) = ends(k);
        if i != current {
            current = i;
            reached = i + 1;
            inner = 0.0;
        }
        while reached < j {
            inner += roots[reached];
            reached += 1;
        }
        values[k] = if i == j { 0.0 } else { h * (inner + 0.5 * (roots[i] + roots[j])) };
    }
    values
}

/// Mean squared difference of predicted and true distances.
pub fn dist_mse(pred: &PairDistances, truth: &PairDistances) -> Result<f64> {
    pred.check_same_pairs(truth)?;
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no pairs to compare".into()));
    }
    Ok(mse(&pred.values, &truth.values, 1.0))
}

fn mse(pred: &[f64], truth: &[f64], s: f64) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (s * p - t).powi(2))
        .sum::<f64>()
        / pred.len() as f64
}

/// [`dist_mse`] after the best rescaling `g -> c g`, `c > 0`.
///
/// Distances scale by `s = sqrt(c)`, so the optimum is the least-squares
/// `s* = sum(p t) / sum(p^2)`. When no positive `s` helps (all predictions
/// zero, or `s* <= 0`), the infimum is approached as `c -> 0` and equals
/// `mean(t^2)`. The result never exceeds the unscaled MSE.
pub fn dist_mseps(pred: &PairDistances, truth: &PairDistances) -> Result<f64> {
    pred.check_same_pairs(truth)?;
    if pred.is_empty() {
        return Err(Error::InvalidArgument("no pairs to compare".into()));
    }
    let (p, t) = (&pred.values, &truth.values);
    let pp: f64 = p.iter().map(|x| x * x).sum();
    let pt: f64 = p.iter().zip(t).map(|(x, y)| x * y).sum();
    let unscaled = mse(p, t, 1.0);
    let best = if pp > 0.0 && pt > 0.0 {
        mse(p, t, pt / pp)
    } else {
        mse(p, t, 0.0)
    };
    Ok(best.min(unscaled))
}

/// Discretized `integral ||g - g_hat||_F^2 dlambda`.
pub fn dist_naive(pred: &FimField, truth: &FimField) -> Result<f64> {
    if pred.grid() != truth.grid() {
        return Err(Error::Mismatch("fields live on different grids".into()));
    }
    let grid = pred.grid();
    let n = grid.param_dim();
    let mut total = 0.0;
    for i in 0..grid.len() {
        for mu in 0..n {
            for nu in 0..n {
                let k = triangle_index(n, mu, nu);
                total += (pred.packed_at(i)[k] - truth.packed_at(i)[k]).powi(2);
            }
        }
    }
    Ok(total * grid.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_line_field_ties_equal_gaps_exactly() {
        for alpha in [1.0, 50.0, 0.37] {
            let g = FimField::from_fn(GridSpec::line(40), |_, _| vec![alpha]);
            let d = all_pair_distances(&g, PairBudget::ALL, 0).unwrap();
            let mut by_gap: std::collections::HashMap<usize, f64> = Default::default();
            for (&(i, j), &v) in d.pairs.iter().zip(&d.values) {
                let first = *by_gap.entry(j - i).or_insert(v);
                assert_eq!(first.to_bits(), v.to_bits(), "gap {} alpha {alpha}", j - i);
            }
        }
    }

    fn line_field(values: &[f64]) -> FimField {
        FimField::from_packed(GridSpec::line(values.len()), values.to_vec()).unwrap()
    }

    fn distances(values: Vec<f64>, pairs: Vec<(usize, usize)>) -> PairDistances {
        PairDistances { pairs, values, source: String::new() }
    }

    fn ladder(m: usize) -> Vec<(usize, usize)> {
        (0..m).map(|i| (i, i + 1)).collect()
    }

    #[test]
    fn zero_field_gives_zero() {
        let g = FimField::zeros(GridSpec::square(3, 3));
        assert_eq!(dist_sl(&g, &[0.1, 0.2], &[0.9, 0.7]).unwrap(), 0.0);
    }

    #[test]
    fn constant_line_field() {
        let g = line_field(&[4.0; 5]);
        assert!((dist_sl(&g, &[0.1], &[0.9]).unwrap() - 0.8 * 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_cell_hand_sum() {
        let g = line_field(&[1.0, 4.0]);
        assert_eq!(dist_sl(&g, &[0.25], &[0.75]).unwrap(), 0.75);
        assert_eq!(dist_sl(&g, &[0.75], &[0.25]).unwrap(), 0.75);
    }

    #[test]
    fn diagonal_through_corner() {
        // 2x2 grid, g = c_k I on cell k. The diagonal from (0.25, 0.25) to
        // (0.75, 0.75) spends half its length in cell 0 and half in cell 3.
        let mut g = FimField::zeros(GridSpec::square(2, 2));
        for (i, c) in [1.0, 100.0, 100.0, 9.0].into_iter().enumerate() {
            g.packed_at_mut(i).copy_from_slice(&[c, 0.0, c]);
        }
        let len = 0.5f64.hypot(0.5);
        let expected = 0.5 * len * 1.0 + 0.5 * len * 3.0;
        assert!((dist_sl(&g, &[0.25, 0.25], &[0.75, 0.75]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn segment_on_face_averages_neighbors() {
        let mut g = FimField::zeros(GridSpec::square(2, 2));
        for (i, c) in [1.0, 1.0, 9.0, 9.0].into_iter().enumerate() {
            g.packed_at_mut(i).copy_from_slice(&[c, 0.0, c]);
        }
        // runs along lambda_0 = 0.5, between cells with g = I and g = 9 I
        let d = dist_sl(&g, &[0.5, 0.1], &[0.5, 0.9]).unwrap();
        assert!((d - 0.8 * 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_points_outside_domain() {
        let g = line_field(&[1.0, 1.0]);
        assert!(matches!(dist_sl(&g, &[-0.1], &[0.5]), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn pair_counts_and_budget() {
        assert_eq!(select_pairs(4, PairBudget::ALL, 0).len(), 6);
        assert_eq!(select_pairs(4, PairBudget::Count(6), 3), select_pairs(4, PairBudget::ALL, 0));
        let sub = select_pairs(30, PairBudget::Count(50), 7);
        assert_eq!(sub.len(), 50);
        assert!(sub.windows(2).all(|w| w[0] < w[1]));
        assert!(sub.iter().all(|&(i, j)| i < j && j < 30));
        assert_eq!(sub, select_pairs(30, PairBudget::Count(50), 7));
    }

    #[test]
    fn rank_inverse_covers_all_pairs() {
        let all = select_pairs(9, PairBudget::ALL, 0);
        for (r, &p) in all.iter().enumerate() {
            assert_eq!(pair_from_rank(9, r), p);
        }
    }

    #[test]
    fn budget_parsing_and_json() {
        assert_eq!("all".parse::<PairBudget>().unwrap(), PairBudget::ALL);
        assert_eq!("12".parse::<PairBudget>().unwrap(), PairBudget::Count(12));
        assert!("x".parse::<PairBudget>().is_err());
        assert_eq!(serde_json::to_string(&PairBudget::ALL).unwrap(), "\"all\"");
        assert_eq!(serde_json::to_string(&PairBudget::Count(5)).unwrap(), "5");
        assert_eq!(PairBudget::default_for(300), PairBudget::Count(100_000));
    }

    #[test]
    fn line_dp_matches_traversal() {
        let mut rng = SeededRng::new(5);
        for l in [2, 3, 7, 16, 33] {
            let values: Vec<f64> = (0..l).map(|_| rng.uniform(0.0, 50.0)).collect();
            let g = line_field(&values);
            let fast = all_pair_distances(&g, PairBudget::ALL, 0).unwrap();
            for (&(i, j), &d) in fast.pairs.iter().zip(&fast.values) {
                let slow = dist_sl(&g, &g.grid().point(i), &g.grid().point(j)).unwrap();
                assert!((d - slow).abs() <= 1e-12 * (1.0 + slow), "L={l} ({i},{j})");
            }
        }
    }

    #[test]
    fn mse_fixtures() {
        let t = distances(vec![1.0, 2.0, 3.0], ladder(3));
        let p = distances(vec![2.0, 3.0, 4.0], ladder(3));
        assert_eq!(dist_mse(&t, &t).unwrap(), 0.0);
        assert_eq!(dist_mse(&p, &t).unwrap(), 1.0);
        let other = distances(vec![1.0, 2.0, 3.0], vec![(0, 1), (0, 2), (1, 3)]);
        assert!(matches!(dist_mse(&other, &t), Err(Error::Mismatch(_))));
    }

    #[test]
    fn mseps_fixtures() {
        let t = distances(vec![1.0, 2.0, 3.0], ladder(3));
        let doubled = distances(vec![2.0, 4.0, 6.0], ladder(3));
        assert_eq!(dist_mseps(&doubled, &t).unwrap(), 0.0);
        let zero = distances(vec![0.0; 3], ladder(3));
        assert_eq!(dist_mseps(&zero, &t).unwrap(), 14.0 / 3.0);
    }

    #[test]
    fn mseps_is_exactly_invariant_under_power_of_four_rescaling() {
        let truth = line_field(&[1.0, 3.0, 2.0, 8.0, 0.5]);
        let pred = line_field(&[2.0, 1.0, 2.5, 6.0, 1.5]);
        let td = all_pair_distances(&truth, PairBudget::ALL, 0).unwrap();
        let base = dist_mseps(&all_pair_distances(&pred, PairBudget::ALL, 0).unwrap(), &td).unwrap();
        for c in [0.25, 4.0, 16.0, 1024.0] {
            let scaled = all_pair_distances(&pred.scaled(c), PairBudget::ALL, 0).unwrap();
            assert_eq!(dist_mseps(&scaled, &td).unwrap(), base);
        }
    }

    #[test]
    fn naive_fixture() {
        let pred = line_field(&[1.0, 3.0]);
        let truth = line_field(&[0.0, 0.0]);
        assert_eq!(dist_naive(&pred, &truth).unwrap(), 5.0);
        assert_eq!(dist_naive(&truth, &pred).unwrap(), 5.0);
        assert_eq!(dist_naive(&pred, &pred).unwrap(), 0.0);
    }

    #[test]
    fn naive_counts_off_diagonal_twice() {
        let grid = GridSpec::square(1, 1);
        let pred = FimField::from_packed(grid.clone(), vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(dist_naive(&pred, &FimField::zeros(grid)).unwrap(), 2.0);
    }

    proptest! {
        #[test]
        fn dist_sl_is_symmetric(
            vals in proptest::collection::vec(0.0f64..10.0, 12),
            a in proptest::array::uniform2(0.0f64..=1.0),
            b in proptest::array::uniform2(0.0f64..=1.0),
        ) {
            let mut g = FimField::zeros(GridSpec::square(2, 2));
            for i in 0..4 {
                let (x, y, z) = (vals[3 * i], vals[3 * i + 1] - 5.0, vals[3 * i + 2]);
                // diagonally dominant, hence PSD
                g.packed_at_mut(i).copy_from_slice(&[x + y.abs(), y, z + y.abs()]);
            }
            let ab = dist_sl(&g, &a, &b).unwrap();
            let ba = dist_sl(&g, &b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        }

        #[test]
        fn mseps_never_exceeds_mse(
            p in proptest::collection::vec(0.0f64..5.0, 6),
            t in proptest::collection::vec(0.0f64..5.0, 6),
        ) {
            let pred = distances(p, ladder(6));
            let truth = distances(t, ladder(6));
            prop_assert!(dist_mseps(&pred, &truth).unwrap() <= dist_mse(&pred, &truth).unwrap());
        }
    }
}
