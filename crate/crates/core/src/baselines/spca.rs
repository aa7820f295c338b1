use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::bits;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::peaks::{fill_guesses, smooth, Slice};
use crate::rng::{derive_seed, SeededRng};

pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 1.0;

/// Symmetric kernel over grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub tau: f64,
    pub gamma: f64,
}

/// `exp(gamma m / n)` for every possible number `m` of matching bits.
fn match_weights(n_bits: usize, gamma: f64) -> Vec<f64> {
    (0..=n_bits)
        .map(|m| (gamma * m as f64 / n_bits as f64).exp())
        .collect()
}

/// `K(a, b) = exp(tau / (T_a T_b) sum_{t, t'} exp(gamma / n (n - |x_t xor x'_t'|)))`
/// over the samples `x` at grid point `a` and `x'` at `b`.
///
/// Matching bits are counted as `n - popcount(x xor x')` word by word.
pub fn spca_kernel(ds: &Dataset, tau: f64, gamma: f64) -> Result<KernelMatrix> {
    let n = ds.n_bits();
    build_kernel(ds, tau, gamma, |a, b| n - bits::hamming(a, b) as usize)
}

/// [`spca_kernel`] counting matches one bit at a time; kept to check the
/// popcount path.
pub fn spca_kernel_reference(ds: &Dataset, tau: f64, gamma: f64) -> Result<KernelMatrix> {
    let n = ds.n_bits();
    build_kernel(ds, tau, gamma, |a, b| {
        (0..n).filter(|&j| bits::bit(a, j) == bits::bit(b, j)).count()
    })
}

fn build_kernel(
    ds: &Dataset,
    tau: f64,
    gamma: f64,
    matches: impl Fn(&[u64], &[u64]) -> usize + Sync,
) -> Result<KernelMatrix> {
    let rows = ds.rows_by_point();
    if let Some(p) = rows.iter().position(Vec::is_empty) {
        return Err(Error::EmptyGridPoint(p));
    }
    let weights = match_weights(ds.n_bits(), gamma);
    let m = rows.len();
    let upper: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
    let entries: Vec<f64> = upper
        .par_iter()
        .map(|&(a, b)| {
            let mut sum = 0.0;
            for &i in &rows[a] {
                let x = ds.sample(i);
                for &j in &rows[b] {
                    sum += weights[matches(x, ds.sample(j))];
                }
            }
            (tau * sum / (rows[a].len() * rows[b].len()) as f64).exp()
        })
        .collect();
    let mut values = DMatrix::zeros(m, m);
    for (&(a, b), &k) in upper.iter().zip(&entries) {
        values[(a, b)] = k;
        values[(b, a)] = k;
    }
    Ok(KernelMatrix { values, tau, gamma })
}

/// Top kernel principal components at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpcaEmbedding {
    /// `M x q`, column `c` holding component `c` scaled by the square root
    /// of its eigenvalue.
    pub components: DMatrix<f64>,
    /// Eigenvalues of the centered kernel, descending.
    pub eigenvalues: Vec<f64>,
}

impl SpcaEmbedding {
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.components.column(c).iter().copied().collect()
    }
}

/// Kernel PCA: double-center `K`, diagonalize, keep the `q` leading
/// eigenvectors scaled by `sqrt(eigenvalue)`. Each component's entry of
/// largest magnitude is made positive.
pub fn kernel_pca(k: &KernelMatrix, q: usize) -> Result<SpcaEmbedding> {
    let m = k.values.nrows();
    if q > m {
        return Err(Error::InvalidArgument(format!("asked for {q} components of a {m}-point kernel")));
    }
    let row_means: Vec<f64> = (0..m).map(|i| k.values.row(i).mean()).collect();
    let total_mean = row_means.iter().sum::<f64>() / m as f64;
    let centered = DMatrix::from_fn(m, m, |i, j| {
        k.values[(i, j)] - row_means[i] - row_means[j] + total_mean
    });
    let eig = SymmetricEigen::new(centered);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).expect("finite"));
    let mut components = DMatrix::zeros(m, q);
    let mut eigenvalues = Vec::with_capacity(q);
    for (c, &idx) in order.iter().take(q).enumerate() {
        let lambda = eig.eigenvalues[idx];
        let scale = lambda.max(0.0).sqrt();
        let v = eig.eigenvectors.column(idx);
        let mut pivot = 0;
        for i in 1..m {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            components[(i, c)] = sign * scale * v[i];
        }
        eigenvalues.push(lambda);
    }
    Ok(SpcaEmbedding { components, eigenvalues })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

const KMEANS_MAX_ITER: usize = 300;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Lloyd's k-means with `restarts` farthest-point initializations (random
/// first center, then repeatedly the point farthest from all chosen
/// centers); the run with the lowest inertia wins.
pub fn kmeans(points: &[Vec<f64>], k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidArgument(format!("cannot form {k} clusters from {} points", points.len())));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = SeededRng::new(derive_seed(seed, r as u64));
        let mut centers = vec![points[rng.below(points.len())].clone()];
        while centers.len() < k {
            let far = (0..points.len())
                .map(|i| {
                    let d = centers.iter().map(|c| sq_dist(&points[i], c)).fold(f64::INFINITY, f64::min);
                    (i, d)
                })
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            centers.push(points[far.0].clone());
        }
        let run = lloyd(points, centers);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansResult {
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            // an emptied cluster keeps its old center
            if !members.is_empty() {
                for d in 0..dim {
                    center[d] = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    KMeansResult { labels, centers, inertia }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpcaPeaksConfig {
    /// Smoothing width in grid spacings.
    pub sigma: f64,
    /// Weight of the coordinate feature appended to the components.
    pub coordinate_weight: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SpcaPeaksConfig {
    fn default() -> Self {
        Self { sigma: 1.0, coordinate_weight: 1.0, restarts: 10, seed: 0 }
    }
}

/// Phase-boundary guesses along one slice of an embedding.
///
/// `components` holds the leading two components at the slice's points (in
/// coordinate order). Both are smoothed at doubled resolution, the scaled
/// coordinate is appended as a third feature, and k-means with `n_s + 1`
/// clusters runs on the result. The clusters are then made contiguous (see
/// [`contiguous_labels`]); boundaries between consecutive clusters (midway
/// between their facing members) are the guesses, topped up to `n_s` by gap
/// splitting.
pub fn spca_peaks(components: &[Slice], n_s: usize, cfg: &SpcaPeaksConfig) -> Result<Vec<f64>> {
    let first = components
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one component".into()))?;
    if n_s == 0 {
        return Ok(Vec::new());
    }
    let smoothed: Vec<Slice> = components.iter().map(|c| smooth(c, cfg.sigma)).collect::<Result<_>>()?;
    let coords = &smoothed[0].coordinates;
    let len = coords.len();
    let features: Vec<Vec<f64>> = (0..len)
        .map(|i| {
            let mut f: Vec<f64> = smoothed.iter().map(|s| s.values[i]).collect();
            f.push(cfg.coordinate_weight * coords[i]);
            f
        })
        .collect();
    let k = (n_s + 1).min(len);
    let clusters = kmeans(&features, k, cfg.restarts, cfg.seed)?;

    let contiguous = contiguous_labels(&clusters.labels, k);
    let boundaries: Vec<f64> = (1..len)
        .filter(|&i| contiguous[i] != contiguous[i - 1])
        .map(|i| 0.5 * (coords[i - 1] + coords[i]))
        .collect();
    Ok(fill_guesses(&boundaries, n_s, first.bounds))
}

/// Closest contiguous relabeling of a sequence of cluster labels.
///
/// Clusters are ordered by the median position of their members; the
/// positions are then cut into that many consecutive runs, one per cluster
/// in order, choosing the cuts that keep the most original labels. A
/// labeling that is already contiguous comes back unchanged (up to
/// renumbering by run).
pub fn contiguous_labels(labels: &[usize], k: usize) -> Vec<usize> {
    let len = labels.len();
    let mut order: Vec<(f64, usize)> = (0..k)
        .filter_map(|c| {
            let members: Vec<usize> = (0..len).filter(|&i| labels[i] == c).collect();
            (!members.is_empty()).then(|| {
                let mid = members.len() / 2;
                let median = if members.len() % 2 == 1 {
                    members[mid] as f64
                } else {
                    0.5 * (members[mid - 1] + members[mid]) as f64
                };
                (median, c)
            })
        })
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let runs = order.len();
    // prefix[r][i]: members of the r-th cluster among positions < i
    let prefix: Vec<Vec<usize>> = order
        .iter()
        .map(|&(_, c)| {
            let mut p = vec![0; len + 1];
            for i in 0..len {
                p[i + 1] = p[i] + usize::from(labels[i] == c);
            }
            p
        })
        .collect();
    // best[r][i]: most kept labels with runs 0..r covering positions < i,
    // every run non-empty
    let mut best = vec![vec![None::<(usize, usize)>; len + 1]; runs + 1];
    best[0][0] = Some((0, 0));
    for r in 1..=runs {
        for end in r..=len {
            for start in (r - 1)..end {
                if let Some((kept, _)) = best[r - 1][start] {
                    let total = kept + prefix[r - 1][end] - prefix[r - 1][start];
                    if best[r][end].is_none_or(|(b, _)| total > b) {
                        best[r][end] = Some((total, start));
                    }
                }
            }
        }
    }
    let mut out = vec![0; len];
    let mut end = len;
    for r in (1..=runs).rev() {
        let (_, start) = best[r][end].expect("every run is reachable");
        out[start..end].iter_mut().for_each(|l| *l = r - 1);
        end = start;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::GridSpec;

    fn dataset(samples: Vec<u64>, per_point: usize, n_bits: usize) -> Dataset {
        let m = samples.len() / per_point;
        let points = (0..samples.len()).map(|i| i / per_point).collect();
        Dataset::from_parts("t", GridSpec::line(m), n_bits, "", points, samples).unwrap()
    }

    #[test]
    fn identical_and_complementary_samples() {
        let ds = dataset(vec![0b1010, 0b1010, 0b0101], 1, 4);
        let k = spca_kernel(&ds, 1.0, 1.0).unwrap();
        assert!((k.values[(0, 1)] - std::f64::consts::E.exp()).abs() < 1e-12);
        assert!((k.values[(0, 1)] - 15.154262241479262).abs() < 1e-12);
        assert!((k.values[(0, 2)] - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn popcount_counts_matches() {
        let (x, y) = ([0b1010u64], [0b0110u64]);
        assert_eq!(bits::hamming(&x, &y), 2);
        assert_eq!(4 - bits::hamming(&x, &y) as usize, 2);
    }

    #[test]
    fn popcount_path_matches_bit_loop() {
        let mut rng = SeededRng::new(3);
        for n_bits in [1, 7, 64, 65, 128] {
            let words = bits::words_for(n_bits);
            let samples: Vec<u64> = (0..12 * words)
                .map(|i| {
                    let w = i % words;
                    let used = (n_bits - 64 * w).min(64);
                    let mask = if used == 64 { u64::MAX } else { (1u64 << used) - 1 };
                    rng.next_u64() & mask
                })
                .collect();
            let points: Vec<usize> = (0..12).map(|i| i / 3).collect();
            let ds = Dataset::from_parts("t", GridSpec::line(4), n_bits, "", points, samples).unwrap();
            let fast = spca_kernel(&ds, 1.0, 1.0).unwrap();
            let slow = spca_kernel_reference(&ds, 1.0, 1.0).unwrap();
            assert_eq!(fast, slow);
            assert!(fast.values.iter().all(|v| *v >= 1.0));
            assert_eq!(fast.values, fast.values.transpose());
        }
    }

    #[test]
    fn constant_kernel_has_zero_components() {
        let k = KernelMatrix { values: DMatrix::from_element(5, 5, 3.0), tau: 1.0, gamma: 1.0 };
        let e = kernel_pca(&k, 2).unwrap();
        assert!(e.components.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_blocks_separate_by_sign() {
        let values = DMatrix::from_fn(4, 4, |i, j| if (i < 2) == (j < 2) { 5.0 } else { 1.0 });
        let e = kernel_pca(&KernelMatrix { values, tau: 1.0, gamma: 1.0 }, 1).unwrap();
        let c = e.component(0);
        assert!(c[0] * c[2] < 0.0);
        assert!((c[0] - c[1]).abs() < 1e-12);
        // K = 1 + 4 B with B = (11^T + ss^T) / 2 for s = (1, 1, -1, -1);
        // centering leaves 2 ss^T: eigenvalue 8, unit vector s / 2
        assert!((e.eigenvalues[0] - 8.0).abs() < 1e-12);
        assert!((c[0].abs() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn embedding_columns_are_centered_and_permutation_equivariant() {
        let mut rng = SeededRng::new(8);
        let samples: Vec<u64> = (0..30).map(|_| rng.next_u64() & 0xff).collect();
        let ds = dataset(samples, 5, 8);
        let k = spca_kernel(&ds, 1.0, 1.0).unwrap();
        let e = kernel_pca(&k, 3).unwrap();
        for c in 0..3 {
            assert!(e.component(c).iter().sum::<f64>().abs() < 1e-10);
        }
        let perm = [3, 0, 5, 1, 4, 2];
        let permuted = KernelMatrix {
            values: DMatrix::from_fn(6, 6, |i, j| k.values[(perm[i], perm[j])]),
            ..k.clone()
        };
        let ep = kernel_pca(&permuted, 3).unwrap();
        for c in 0..3 {
            for i in 0..6 {
                assert!((ep.components[(i, c)] - e.components[(perm[i], c)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn kmeans_finds_obvious_clusters() {
        let pts: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 5.0, 5.1, 5.2].iter().map(|&x| vec![x]).collect();
        let r = kmeans(&pts, 2, 3, 0).unwrap();
        assert_eq!(r.labels[0], r.labels[2]);
        assert_ne!(r.labels[0], r.labels[3]);
        assert!((r.inertia - 0.04).abs() < 1e-12);
        assert!(kmeans(&pts, 7, 1, 0).is_err());
    }

    #[test]
    fn contiguity_repair() {
        assert_eq!(contiguous_labels(&[2, 2, 0, 0, 0, 1], 3), vec![0, 0, 1, 1, 1, 2]);
        // a stray member inside another run is absorbed
        assert_eq!(contiguous_labels(&[0, 0, 1, 0, 0, 1, 1], 2), vec![0, 0, 0, 0, 0, 1, 1]);
        assert_eq!(contiguous_labels(&[1, 1, 1], 2), vec![0, 0, 0]);
    }

    fn unit_slices(values: Vec<Vec<f64>>) -> Vec<Slice> {
        values.into_iter().map(|v| Slice::unit(v).unwrap()).collect()
    }

    #[test]
    fn ramp_splits_in_the_middle() {
        let comps = unit_slices(vec![vec![0.0; 16], vec![0.0; 16]]);
        let g = spca_peaks(&comps, 1, &SpcaPeaksConfig::default()).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] - 0.5).abs() <= 0.5 / 16.0, "{g:?}");
    }

    #[test]
    fn step_boundary_is_found() {
        let step: Vec<f64> = (0..20).map(|i| if i < 13 { -2.0 } else { 2.0 }).collect();
        let comps = unit_slices(vec![step, vec![0.0; 20]]);
        let g = spca_peaks(&comps, 1, &SpcaPeaksConfig::default()).unwrap();
        assert!((g[0] - 0.65).abs() <= 1.0 / 20.0, "{g:?}");
        assert!(spca_peaks(&comps, 0, &SpcaPeaksConfig::default()).unwrap().is_empty());
    }
}
