use std::cmp::Ordering;

use super::distance::PairDistances;
use crate::error::{Error, Result};

/// Probability that `pred` orders two pair distances against `truth`, with
/// ties scored as half a mistake.
///
/// Over all `C(m, 2)` pairs `{i, j}`: a pair with `d_i = d_j` scores 1/2;
/// a pair with `d_i != d_j` but `p_i = p_j` scores 1/2; a strictly
/// discordant pair scores 1. The count runs in `O(m log m)`: sort by
/// `(d, p)` and count strict inversions of `p` by merge sort.
pub fn dist_re(pred: &PairDistances, truth: &PairDistances) -> Result<f64> {
    pred.check_same_pairs(truth)?;
    rank_error(&pred.values, &truth.values)
}

/// [`dist_re`] on bare value lists.
pub fn rank_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    let m = pred.len();
    if m != truth.len() {
        return Err(Error::Mismatch("prediction and truth lengths differ".into()));
    }
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two distances".into()));
    }
    if pred.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("distances must be finite".into()));
    }
    let cmp = |a: &f64, b: &f64| a.partial_cmp(b).expect("finite");

    let mut items: Vec<(f64, f64)> = truth.iter().copied().zip(pred.iter().copied()).collect();
    items.sort_by(|a, b| cmp(&a.0, &b.0).then(cmp(&a.1, &b.1)));
    let tied_truth = tied_pairs(&items, |a, b| a.0 == b.0);
    let tied_both = tied_pairs(&items, |a, b| a == b);
    let mut by_pred: Vec<f64> = pred.to_vec();
    by_pred.sort_by(cmp);
    let tied_pred = tied_pairs(&by_pred, |a, b| a == b);

    let mut seq: Vec<f64> = items.iter().map(|x| x.1).collect();
    let mut scratch = vec![0.0; m];
    let discordant = count_inversions(&mut seq, &mut scratch);

    // Work in half units so that the result is one exact division.
    let halves = tied_truth + (tied_pred - tied_both) + 2 * discordant;
    let total = m as u64 * (m as u64 - 1);
    Ok(halves as f64 / total as f64)
}

/// `sum C(run, 2)` over maximal runs of equal neighbors in a sorted slice.
fn tied_pairs<T>(sorted: &[T], same: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Number of `i < j` with `v[i] > v[j]`; sorts `v` in place.
fn count_inversions(v: &mut [f64], scratch: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = v.split_at_mut(mid);
        let (sl, sr) = scratch.split_at_mut(mid);
        count_inversions(left, sl) + count_inversions(right, sr)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        // equal values are not inversions: take from the left first
        if v[i].partial_cmp(&v[j]) != Some(Ordering::Greater) {
            scratch[k] = v[i];
            i += 1;
        } else {
            scratch[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    scratch[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    scratch[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&scratch[..n]);
    count
}
