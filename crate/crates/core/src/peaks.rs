//! Peak extraction along one-dimensional slices of a field and the
//! PeakRMSE score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::FimField;

pub const DEFAULT_PROMINENCE_FRAC: f64 = 0.05;
pub const DEFAULT_SIGMA: f64 = 1.0;

/// Values along one axis of a grid with the other coordinate fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub axis: usize,
    pub fixed_index: usize,
    pub coordinates: Vec<f64>,
    pub values: Vec<f64>,
    /// Ends of the slice's domain; the scoring boundary points.
    pub bounds: (f64, f64),
}

impl Slice {
    pub fn new(axis: usize, fixed_index: usize, coordinates: Vec<f64>, values: Vec<f64>, bounds: (f64, f64)) -> Result<Self> {
        if coordinates.len() != values.len() {
            return Err(Error::Mismatch("slice coordinates and values differ in length".into()));
        }
        if coordinates.is_empty() {
            return Err(Error::InvalidArgument("a slice needs at least one point".into()));
        }
        if coordinates.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("slice coordinates must increase".into()));
        }
        Ok(Self { axis, fixed_index, coordinates, values, bounds })
    }

    /// Unit-interval slice with cell-centered coordinates.
    pub fn unit(values: Vec<f64>) -> Result<Self> {
        let l = values.len() as f64;
        let coords = (0..values.len()).map(|k| (k as f64 + 0.5) / l).collect();
        Self::new(0, 0, coords, values, (0.0, 1.0))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinate at a possibly fractional index, interpolating linearly.
    pub fn coordinate_at(&self, position: f64) -> f64 {
        let k = position.floor() as usize;
        let frac = position - k as f64;
        if frac == 0.0 || k + 1 >= self.coordinates.len() {
            self.coordinates[k.min(self.coordinates.len() - 1)]
        } else {
            self.coordinates[k] + frac * (self.coordinates[k + 1] - self.coordinates[k])
        }
    }
}

/// Slices of `g_{axis,axis}` along `axis`, one per index of the other axis.
pub fn field_slices(g: &FimField, axis: usize) -> Result<Vec<Slice>> {
    let grid = g.grid();
    let n = grid.param_dim();
    if axis >= n {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range for a {n}-D grid")));
    }
    let coords: Vec<f64> = (0..grid.sizes()[axis]).map(|k| grid.axis_coordinate(axis, k)).collect();
    (0..grid.num_lines(axis))
        .map(|fixed| {
            let values = grid
                .line_indices(axis, fixed)
                .into_iter()
                .map(|i| g.get(i, axis, axis))
                .collect();
            Slice::new(axis, fixed, coords.clone(), values, (0.0, 1.0))
        })
        .collect()
}

/// Gaussian smoothing evaluated at every point and every midpoint between
/// neighbors, giving `2L - 1` outputs.
///
/// `sigma` is in units of the grid spacing. Taps farther than
/// `max(4 sigma, 1/2)` are dropped and the remaining in-range weights are
/// normalized to unit sum, so constants are preserved and a vanishing
/// `sigma` reproduces the input at points and the neighbor mean between
/// them.
pub fn smooth(slice: &Slice, sigma: f64) -> Result<Slice> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument("sigma must be positive".into()));
    }
    let l = slice.len();
    let reach = (4.0 * sigma).max(0.5);
    let mut values = Vec::with_capacity(2 * l - 1);
    let mut coords = Vec::with_capacity(2 * l - 1);
    for m in 0..(2 * l - 1) {
        let t = m as f64 / 2.0;
        let lo = (t - reach).ceil().max(0.0) as usize;
        let hi = ((t + reach).floor() as usize).min(l - 1);
        // weights relative to the nearest tap so that tiny sigma cannot
        // underflow every weight to zero
        let nearest = (t - t.round()).abs();
        let (mut num, mut den) = (0.0, 0.0);
        for k in lo..=hi {
            let d = k as f64 - t;
            let w = (-(d * d - nearest * nearest) / (2.0 * sigma * sigma)).exp();
            num += w * slice.values[k];
            den += w;
        }
        values.push(num / den);
        coords.push(slice.coordinate_at(t));
    }
    Slice::new(slice.axis, slice.fixed_index, coords, values, slice.bounds)
}

/// A local maximum of a slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Index into the slice; a plateau reports its midpoint, which may be
    /// fractional.
    pub position: f64,
    pub coordinate: f64,
    pub height: f64,
    pub prominence: f64,
}

/// All strict local maxima with their prominences, highest prominence
/// first (ties by coordinate).
///
/// A maximum may be a plateau of equal values; it needs strictly lower
/// neighbors on both sides, so the slice ends never hold a peak. The
/// prominence is the height above the higher of the lowest points reached
/// walking left and right until a strictly higher value or the slice end.
pub fn all_peaks(slice: &Slice) -> Vec<Peak> {
    let v = &slice.values;
    let l = v.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < l {
        if v[i - 1] < v[i] {
            let mut r = i;
            while r + 1 < l && v[r + 1] == v[i] {
                r += 1;
            }
            if r + 1 < l && v[r + 1] < v[i] {
                let h = v[i];
                let left_min = v[..i].iter().rev().take_while(|&&x| x <= h).fold(h, |m, &x| m.min(x));
                let right_min = v[r + 1..].iter().take_while(|&&x| x <= h).fold(h, |m, &x| m.min(x));
                let position = (i + r) as f64 / 2.0;
                peaks.push(Peak {
                    position,
                    coordinate: slice.coordinate_at(position),
                    height: h,
                    prominence: h - left_min.max(right_min),
                });
            }
            i = r + 1;
        } else {
            i += 1;
        }
    }
    peaks.sort_by(|a, b| {
        b.prominence
            .partial_cmp(&a.prominence)
            .expect("finite")
            .then(a.coordinate.partial_cmp(&b.coordinate).expect("finite"))
    });
    peaks
}

/// Coordinates of the `max_count` most prominent peaks.
pub fn find_peaks(slice: &Slice, max_count: usize) -> Vec<f64> {
    all_peaks(slice).into_iter().take(max_count).map(|p| p.coordinate).collect()
}

/// Exactly `n_s` guesses: the first `n_s` of `found` (ordered by
/// prominence), topped up by repeatedly placing a guess at the midpoint of
/// the largest gap among `bounds` and the guesses so far. Equal gaps are
/// split leftmost first. Returned in increasing order.
pub fn fill_guesses(found: &[f64], n_s: usize, bounds: (f64, f64)) -> Vec<f64> {
    let mut guesses: Vec<f64> = found.iter().copied().take(n_s).collect();
    guesses.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    while guesses.len() < n_s {
        let mut points = Vec::with_capacity(guesses.len() + 2);
        points.push(bounds.0);
        points.extend_from_slice(&guesses);
        points.push(bounds.1);
        let (mut best, mut width) = (0, f64::NEG_INFINITY);
        for (k, w) in points.windows(2).enumerate() {
            if w[1] - w[0] > width {
                best = k;
                width = w[1] - w[0];
            }
        }
        guesses.insert(best, 0.5 * (points[best] + points[best + 1]));
    }
    guesses
}

/// Ground-truth peaks of one slice: how many guesses a method may make and
/// which peaks are scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceBudget {
    pub axis: usize,
    pub index: usize,
    pub n_s: usize,
    /// Scored ("inner") peak coordinates, increasing.
    pub inner: Vec<f64>,
    pub bounds: (f64, f64),
}

impl SliceBudget {
    pub fn n_prime_s(&self) -> usize {
        self.inner.len()
    }
}

/// Per-slice budgets for a whole field.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakBudget {
    pub slices: Vec<SliceBudget>,
}

/// A peak counts toward `n_s` always and is inner when its prominence is at
/// least `prominence_frac * (max - min)` of the slice and it lies at least
/// `border_margin` from both bounds.
pub fn classify_truth_peaks(truth: &Slice, prominence_frac: f64, border_margin: f64) -> SliceBudget {
    let peaks = all_peaks(truth);
    let (lo, hi) = truth
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let threshold = prominence_frac * (hi - lo);
    let mut inner: Vec<f64> = peaks
        .iter()
        .filter(|p| {
            p.prominence >= threshold
                && p.coordinate - truth.bounds.0 >= border_margin
                && truth.bounds.1 - p.coordinate >= border_margin
        })
        .map(|p| p.coordinate)
        .collect();
    inner.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    SliceBudget {
        axis: truth.axis,
        index: truth.fixed_index,
        n_s: peaks.len(),
        inner,
        bounds: truth.bounds,
    }
}

/// `sqrt(mean_{s,j} min_k (x_{s,k} - y_{s,j})^2)`, where `x_s` is the
/// slice's guesses plus its two bounds and `y_s` its inner peaks.
///
/// `None` when no slice has an inner peak.
pub fn peak_rmse(guesses: &[Vec<f64>], budget: &PeakBudget) -> Result<Option<f64>> {
    if guesses.len() != budget.slices.len() {
        return Err(Error::Mismatch(format!(
            "{} guess lists for {} slices",
            guesses.len(),
            budget.slices.len()
        )));
    }
    let (mut total, mut count) = (0.0, 0usize);
    for (s, (x, b)) in guesses.iter().zip(&budget.slices).enumerate() {
        if x.len() != b.n_s {
            return Err(Error::InvalidArgument(format!(
                "slice {s} has {} guesses, expected {}",
                x.len(),
                b.n_s
            )));
        }
        for &y in &b.inner {
            let nearest = x
                .iter()
                .chain([&b.bounds.0, &b.bounds.1])
                .map(|&xk| (xk - y) * (xk - y))
                .fold(f64::INFINITY, f64::min);
            total += nearest;
            count += 1;
        }
    }
    Ok((count > 0).then(|| (total / count as f64).sqrt()))
}

/// Raises each value to `max_j (a_j - |lambda_i - lambda_j|)` on an evenly
/// spaced list, by one forward and one backward relaxation sweep.
pub fn cap_slopes(values: &[f64], spacing: f64) -> Vec<f64> {
    let mut a = values.to_vec();
    for i in 1..a.len() {
        a[i] = a[i].max(a[i - 1] - spacing);
    }
    for i in (0..a.len().saturating_sub(1)).rev() {
        a[i] = a[i].max(a[i + 1] - spacing);
    }
    a
}

/// Post-processing of a confusion-scheme accuracy curve: pad with `1.0` on
/// both sides, cap slopes at one per unit of `lambda`, then lift each inner
/// point to the mean of its two neighbors when that is higher (one pass,
/// using the capped values). The returned slice includes the padding, whose
/// coordinates sit one `spacing` beyond each end.
pub fn slope_cap(acc: &Slice, spacing: f64) -> Result<Slice> {
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument("spacing must be positive".into()));
    }
    let mut padded = Vec::with_capacity(acc.len() + 2);
    padded.push(1.0);
    padded.extend_from_slice(&acc.values);
    padded.push(1.0);
    let capped = cap_slopes(&padded, spacing);
    let mut lifted = capped.clone();
    for i in 1..capped.len() - 1 {
        lifted[i] = capped[i].max(0.5 * (capped[i - 1] + capped[i + 1]));
    }
    let mut coords = Vec::with_capacity(acc.len() + 2);
    coords.push(acc.coordinates[0] - spacing);
    coords.extend_from_slice(&acc.coordinates);
    coords.push(acc.coordinates[acc.len() - 1] + spacing);
    Slice::new(acc.axis, acc.fixed_index, coords, lifted, acc.bounds)
}

/// Peak guesses from a predicted FIM slice: smooth, take the most prominent
/// peaks, fill the remaining budget by gap splitting.
pub fn predict_peaks(pred: &Slice, n_s: usize, sigma: f64) -> Result<Vec<f64>> {
    let smoothed = smooth(pred, sigma)?;
    Ok(fill_guesses(&find_peaks(&smoothed, n_s), n_s, pred.bounds))
}

/// Per-slice entry of a peaks report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub axis: usize,
    pub index: usize,
    pub n_s: usize,
    pub n_prime_s: usize,
    pub truth_peaks: Vec<f64>,
    pub guesses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeaksReport {
    pub slices: Vec<SliceReport>,
    pub peak_rmse: Option<f64>,
    pub prominence_frac: f64,
    pub border_margin: f64,
}

impl PeaksReport {
    pub fn new(budget: &PeakBudget, guesses: Vec<Vec<f64>>, prominence_frac: f64, border_margin: f64) -> Result<Self> {
        let peak_rmse = peak_rmse(&guesses, budget)?;
        let slices = budget
            .slices
            .iter()
            .zip(guesses)
            .map(|(b, g)| SliceReport {
                axis: b.axis,
                index: b.index,
                n_s: b.n_s,
                n_prime_s: b.n_prime_s(),
                truth_peaks: b.inner.clone(),
                guesses: g,
            })
            .collect();
        Ok(Self { slices, peak_rmse, prominence_frac, border_margin })
    }
}

/// Budgets for every slice of `truth` along `axis`.
pub fn truth_budget(truth: &FimField, axis: usize, prominence_frac: f64, border_margin: f64) -> Result<PeakBudget> {
    Ok(PeakBudget {
        slices: field_slices(truth, axis)?
            .iter()
            .map(|s| classify_truth_peaks(s, prominence_frac, border_margin))
            .collect(),
    })
}

/// The full pipeline on a predicted field: per slice along `axis`, guesses
/// from [`predict_peaks`] scored against the truth's budget.
pub fn evaluate_peaks(
    pred: &FimField,
    truth: &FimField,
    axis: usize,
    sigma: f64,
    prominence_frac: f64,
    border_margin: f64,
) -> Result<PeaksReport> {
    if pred.grid() != truth.grid() {
        return Err(Error::Mismatch("prediction and truth live on different grids".into()));
    }
    let budget = truth_budget(truth, axis, prominence_frac, border_margin)?;
    let guesses = field_slices(pred, axis)?
        .iter()
        .zip(&budget.slices)
        .map(|(s, b)| predict_peaks(s, b.n_s, sigma))
        .collect::<Result<Vec<_>>>()?;
    PeaksReport::new(&budget, guesses, prominence_frac, border_margin)
}
