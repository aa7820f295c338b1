use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use super::GridSpec;
use crate::error::{Error, Result};

/// Number of stored upper-triangle entries for an `n x n` symmetric matrix.
pub fn triangle_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of `(mu, nu)` in the packed upper triangle (row-major).
pub fn triangle_index(n: usize, mu: usize, nu: usize) -> usize {
    let (a, b) = if mu <= nu { (mu, nu) } else { (nu, mu) };
    a * n - a * (a + 1) / 2 + b
}

/// A symmetric metric tensor at every grid point, stored as packed upper
/// triangles (`g_00, g_01, g_11` in two dimensions).
#[derive(Debug, Clone, PartialEq)]
pub struct FimField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl FimField {
    pub fn zeros(grid: GridSpec) -> Self {
        let len = grid.len() * triangle_len(grid.param_dim());
        Self {
            grid,
            values: vec![0.0; len],
        }
    }

    /// Builds a field from packed upper triangles, one per grid point.
    pub fn from_packed(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let expected = grid.len() * triangle_len(grid.param_dim());
        if values.len() != expected {
            return Err(Error::Mismatch(format!(
                "expected {expected} packed values, got {}",
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Self {
        let n = grid.param_dim();
        let mut values = Vec::with_capacity(grid.len() * triangle_len(n));
        for i in 0..grid.len() {
            let packed = f(i, &grid.point(i));
            assert_eq!(packed.len(), triangle_len(n));
            values.extend(packed);
        }
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn param_dim(&self) -> usize {
        self.grid.param_dim()
    }

    pub fn packed(&self) -> &[f64] {
        &self.values
    }

    pub fn packed_at(&self, point: usize) -> &[f64] {
        let t = triangle_len(self.param_dim());
        &self.values[point * t..(point + 1) * t]
    }

    pub fn packed_at_mut(&mut self, point: usize) -> &mut [f64] {
        let t = triangle_len(self.param_dim());
        &mut self.values[point * t..(point + 1) * t]
    }

    pub fn get(&self, point: usize, mu: usize, nu: usize) -> f64 {
        self.packed_at(point)[triangle_index(self.param_dim(), mu, nu)]
    }

    pub fn matrix_at(&self, point: usize) -> DMatrix<f64> {
        let n = self.param_dim();
        DMatrix::from_fn(n, n, |mu, nu| self.get(point, mu, nu))
    }

    /// Squared length `g(lambda; v)` of `v` at grid point `point`.
    pub fn quadratic_form(&self, point: usize, v: &[f64]) -> f64 {
        let n = self.param_dim();
        let g = self.packed_at(point);
        let mut acc = 0.0;
        for mu in 0..n {
            for nu in 0..n {
                acc += g[triangle_index(n, mu, nu)] * v[mu] * v[nu];
            }
        }
        acc
    }

    /// Same field with every tensor multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Smallest eigenvalue over all grid points.
    pub fn min_eigenvalue(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                self.matrix_at(i)
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &FimField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn csv_header(param_dim: usize) -> String {
        let mut cols: Vec<String> = (0..param_dim).map(|mu| format!("lambda_{mu}")).collect();
        for mu in 0..param_dim {
            for nu in mu..param_dim {
                cols.push(format!("g_{mu}{nu}"));
            }
        }
        cols.join(",")
    }

    /// Writes the CSV export: coordinates followed by the packed tensor, one
    /// row per grid point in row-major order, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", Self::csv_header(self.param_dim()))?;
        for i in 0..self.grid.len() {
            let row: Vec<String> = self
                .grid
                .point(i)
                .into_iter()
                .chain(self.packed_at(i).iter().copied())
                .map(format_f64)
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a CSV produced by [`FimField::write_csv`]. The grid is recovered
    /// from the distinct coordinates on each axis.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))??;
        let param_dim = header
            .split(',')
            .filter(|c| c.trim().starts_with("lambda_"))
            .count();
        if param_dim == 0 || param_dim > 2 || header.trim() != Self::csv_header(param_dim) {
            return Err(Error::Parse(format!("unexpected CSV header `{header}`")));
        }
        let width = param_dim + triangle_len(param_dim);
        let mut coords: Vec<Vec<f64>> = Vec::new();
        let mut packed: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            if fields.len() != width {
                return Err(Error::Parse(format!(
                    "line {}: expected {width} columns, got {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            coords.push(fields[..param_dim].to_vec());
            packed.push(fields[param_dim..].to_vec());
        }
        let mut sizes = Vec::with_capacity(param_dim);
        for axis in 0..param_dim {
            let mut axis_values: Vec<f64> = coords.iter().map(|c| c[axis]).collect();
            axis_values.sort_by(f64::total_cmp);
            axis_values.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            sizes.push(axis_values.len());
        }
        let grid = GridSpec::new(sizes)?;
        if grid.len() != coords.len() {
            return Err(Error::Parse(format!(
                "{} rows do not form a full grid of {} points",
                coords.len(),
                grid.len()
            )));
        }
        let mut values = vec![f64::NAN; grid.len() * triangle_len(param_dim)];
        for (c, p) in coords.iter().zip(&packed) {
            let idx = grid
                .locate(c)
                .ok_or_else(|| Error::Parse(format!("{c:?} is not a cell-center grid point")))?;
            values[idx * p.len()..(idx + 1) * p.len()].copy_from_slice(p);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Parse("duplicate grid points in CSV".into()));
        }
        Ok(Self { grid, values })
    }
}

/// Formats with 17 significant digits, the precision needed to round-trip
/// any `f64`.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    // Same layout as C's `%.17g`.
    let s = format!("{v:.16e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponent form");
    let exp: i32 = exponent.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
