use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular grid of cell centers in `[0, 1]^N`.
///
/// Axis `mu` has `sizes[mu]` points at `(k + 1/2) / sizes[mu]`. Points are
/// enumerated in row-major order: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    sizes: Vec<usize>,
}

impl GridSpec {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.len() > 2 {
            return Err(Error::InvalidArgument(format!(
                "grid must have 1 or 2 axes, got {}",
                sizes.len()
            )));
        }
        if sizes.iter().any(|&l| l == 0) {
            return Err(Error::InvalidArgument("grid axis of size 0".into()));
        }
        Ok(Self { sizes })
    }

    pub fn line(size: usize) -> Self {
        Self::new(vec![size]).expect("positive size")
    }

    pub fn square(size0: usize, size1: usize) -> Self {
        Self::new(vec![size0, size1]).expect("positive sizes")
    }

    pub fn param_dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.sizes[axis] as f64
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.sizes.iter().map(|&l| 1.0 / l as f64).product()
    }

    pub fn axis_coordinate(&self, axis: usize, k: usize) -> f64 {
        (k as f64 + 0.5) / self.sizes[axis] as f64
    }

    /// Multi-index of flat point `index`.
    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.sizes.len()];
        let mut rest = index;
        for (axis, &l) in self.sizes.iter().enumerate().rev() {
            out[axis] = rest % l;
            rest /= l;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.sizes)
            .fold(0, |acc, (&k, &l)| acc * l + k)
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .iter()
            .enumerate()
            .map(|(axis, &k)| self.axis_coordinate(axis, k))
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Number of lines running along `axis` (one per index of the other axis).
    pub fn num_lines(&self, axis: usize) -> usize {
        if self.sizes.len() == 1 {
            1
        } else {
            self.sizes[1 - axis]
        }
    }

    /// Flat indices of the points on the `fixed`-th line along `axis`, in
    /// increasing coordinate order.
    pub fn line_indices(&self, axis: usize, fixed: usize) -> Vec<usize> {
        (0..self.sizes[axis])
            .map(|k| {
                let mut multi = vec![fixed; self.sizes.len()];
                multi[axis] = k;
                self.flat_index(&multi)
            })
            .collect()
    }

    /// Flat index of the grid point at `coords`, if `coords` is one.
    ///
    /// Matching tolerates a relative error of `1e-9` of the spacing so that
    /// coordinates parsed from text still resolve.
    pub fn locate(&self, coords: &[f64]) -> Option<usize> {
        if coords.len() != self.sizes.len() {
            return None;
        }
        let mut multi = Vec::with_capacity(coords.len());
        for (axis, &c) in coords.iter().enumerate() {
            let l = self.sizes[axis] as f64;
            let k = (c * l - 0.5).round();
            if k < 0.0 || k >= l || ((k + 0.5) / l - c).abs() > 1e-9 / l {
                return None;
            }
            multi.push(k as usize);
        }
        Some(self.flat_index(&multi))
    }

    /// Flat index of the cell containing `coords`; the upper domain edge
    /// belongs to the last cell.
    pub fn cell_of(&self, coords: &[f64]) -> Result<usize> {
        if coords.len() != self.sizes.len() {
            return Err(Error::Mismatch(format!(
                "point has {} coordinates, grid has {} axes",
                coords.len(),
                self.sizes.len()
            )));
        }
        let mut multi = Vec::with_capacity(coords.len());
        for (axis, &c) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::OutsideDomain(coords.to_vec()));
            }
            let l = self.sizes[axis];
            multi.push(((c * l as f64).floor() as usize).min(l - 1));
        }
        Ok(self.flat_index(&multi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_indices_follow_axis() {
        let g = GridSpec::square(3, 4);
        assert_eq!(g.num_lines(0), 4);
        assert_eq!(g.line_indices(0, 1), vec![1, 5, 9]);
        assert_eq!(g.line_indices(1, 2), vec![8, 9, 10, 11]);
        assert_eq!(GridSpec::line(3).line_indices(0, 0), vec![0, 1, 2]);
    }

    #[test]
    fn points_are_cell_centers_inside_unit_box() {
        let g = GridSpec::square(3, 4);
        assert_eq!(g.len(), 12);
        for (i, p) in g.points().enumerate() {
            assert!(p.iter().all(|&c| c > 0.0 && c < 1.0));
            assert_eq!(g.locate(&p), Some(i));
            assert_eq!(g.cell_of(&p).unwrap(), i);
        }
        assert_eq!(g.point(1), vec![0.5 / 3.0, 1.5 / 4.0]);
    }

    #[test]
    fn points_are_distinct() {
        let g = GridSpec::square(5, 5);
        let pts: Vec<_> = g.points().collect();
        for i in 0..pts.len() {
            for j in 0..i {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    #[test]
    fn cell_of_edges() {
        let g = GridSpec::line(4);
        assert_eq!(g.cell_of(&[0.0]).unwrap(), 0);
        assert_eq!(g.cell_of(&[0.25]).unwrap(), 1);
        assert_eq!(g.cell_of(&[1.0]).unwrap(), 3);
        assert!(g.cell_of(&[1.5]).is_err());
        assert!(g.locate(&[0.3]).is_none());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridSpec::new(vec![]).is_err());
        assert!(GridSpec::new(vec![2, 2, 2]).is_err());
        assert!(GridSpec::new(vec![0]).is_err());
    }
}
