//! Dense linear algebra and statistics used by the estimator.
//!
//! Everything here is a pure function of its inputs. Matrices are small
//! (a few hundred rows at most), so the routines favour robustness over
//! blocking tricks.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Largest negative (or above-one) excursion tolerated before a unit
/// spectrum is clamped.
pub const SPECTRUM_CLAMP_TOL: f64 = 1e-8;

const QL_MAX_ITERATIONS: usize = 64;

/// `N` samples by `d` dimensions, stored row-major. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    data: Array2<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "data matrix needs at least one row and column, got {rows}x{cols}"
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not fill a {rows}x{cols} matrix",
                values.len()
            )));
        }
        let data = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::from_array(data)
    }

    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "data matrix needs at least one row and column, got {rows}x{cols}"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let cols = self.cols();
        &self.as_slice()[i * cols..(i + 1) * cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        self.data
            .as_slice()
            .expect("data matrix is kept in standard layout")
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Rows selected by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let cols = self.cols();
        let mut values = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Self {
            data: Array2::from_shape_vec((indices.len(), cols), values)
                .expect("shape matches selected rows"),
        }
    }

    /// Every column multiplied by its own factor.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for {} columns",
                factors.len(),
                self.cols()
            )));
        }
        let mut data = self.data.clone();
        for mut row in data.rows_mut() {
            for (v, f) in row.iter_mut().zip(factors) {
                *v *= f;
            }
        }
        Self::from_array(data)
    }
}

/// Square symmetric matrix, stored densely in row-major order.
///
/// Constructors only ever write mirrored pairs, so `get(i, j) == get(j, i)`
/// holds bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    values: Vec<f64>,
}

impl SymMatrix {
    /// Builds the matrix from its upper triangle (`j >= i`).
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; order * order];
        for i in 0..order {
            for j in i..order {
                let v = f(i, j);
                values[i * order + j] = v;
                values[j * order + i] = v;
            }
        }
        Self { order, values }
    }

    /// Accepts only exactly symmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        for i in 0..order {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(order, |i, j| rows[i][j]))
    }

    pub fn identity(order: usize) -> Self {
        Self::from_fn(order, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn filled(order: usize, value: f64) -> Self {
        Self {
            order,
            values: vec![value; order * order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.order + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            order: self.order,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn set_diagonal(&mut self, value: f64) {
        for i in 0..self.order {
            self.values[i * self.order + i] = value;
        }
    }
}

/// Squared Euclidean distance between every pair of rows.
pub fn pairwise_sq_dists(x: &DataMatrix) -> Result<SymMatrix> {
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = x.rows();
    Ok(SymMatrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else {
            sq_distance(x.row(i), x.row(j))
        }
    }))
}

/// Squared distance after dividing dimension `k` by `widths[k]`. Dimensions
/// with zero width are constant across samples and contribute nothing.
pub(crate) fn pairwise_scaled_sq_dists(x: &DataMatrix, widths: &[f64]) -> SymMatrix {
    let inv: Vec<f64> = widths
        .iter()
        .map(|&w| if w > 0.0 { 1.0 / w } else { 0.0 })
        .collect();
    let scaled = x
        .scale_columns(&inv)
        .expect("width count matches column count");
    SymMatrix::from_fn(scaled.rows(), |i, j| {
        if i == j {
            0.0
        } else {
            sq_distance(scaled.row(i), scaled.row(j))
        }
    })
}

fn sq_distance(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the compiler vectorise the loop.
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            let diff = ca[k] - cb[k];
            acc[k] += diff * diff;
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(p, q)| p * q)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for k in 0..4 {
            acc[k] += ca[k] * cb[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// All eigenvalues of a symmetric matrix, sorted in descending order.
///
/// Householder reduction to tridiagonal form followed by the implicit QL
/// iteration with Wilkinson shifts. Eigenvectors are never formed.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    let n = a.order();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut work = a.as_slice().to_vec();
    let (mut diag, mut off) = tridiagonalize(&mut work, n);
    tridiagonal_ql(&mut diag, &mut off)?;
    diag.sort_by(|p, q| q.total_cmp(p));
    Ok(diag)
}

/// Clamps a spectrum into `[0, 1]`. Excursions beyond
/// [`SPECTRUM_CLAMP_TOL`] mean the matrix was not a valid density matrix.
pub fn clamp_unit_spectrum(mut eigenvalues: Vec<f64>) -> Result<Vec<f64>> {
    for v in &mut eigenvalues {
        if *v < -SPECTRUM_CLAMP_TOL || *v > 1.0 + SPECTRUM_CLAMP_TOL || v.is_nan() {
            return Err(Error::SpectrumOutOfRange { value: *v });
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(eigenvalues)
}

/// Reduces the symmetric matrix held in `a` (row-major, order `n`) to
/// tridiagonal form. Returns the diagonal and the sub-diagonal, where
/// `off[i]` couples rows `i` and `i + 1` and `off[n - 1] == 0`.
///
/// Only the lower triangle of `a` is read or updated.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut sub = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut p = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i - 1;
        let row_i = i * n;
        let scale: f64 = a[row_i..row_i + l + 1].iter().map(|v| v.abs()).sum();
        if l == 0 || scale == 0.0 {
            sub[i] = a[row_i + l];
            continue;
        }

        let mut h = 0.0;
        for k in 0..=l {
            u[k] = a[row_i + k] / scale;
            h += u[k] * u[k];
        }
        let f = u[l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        sub[i] = scale * g;
        h -= f * g;
        u[l] = f - g;

        // p = A u / h over the leading (l+1)x(l+1) block, lower triangle only.
        p[..=l].fill(0.0);
        for j in 0..=l {
            let row_j = &a[j * n..j * n + j];
            let uj = u[j];
            for (pk, &ajk) in p[..j].iter_mut().zip(row_j) {
                *pk += ajk * uj;
            }
            p[j] += dot(row_j, &u[..j]) + a[j * n + j] * uj;
        }
        let mut upu = 0.0;
        for k in 0..=l {
            p[k] /= h;
            upu += u[k] * p[k];
        }
        let half = upu / (2.0 * h);
        for k in 0..=l {
            p[k] -= half * u[k];
        }

        // A <- A - u p' - p u'
        for j in 0..=l {
            let (uj, pj) = (u[j], p[j]);
            let row_j = &mut a[j * n..j * n + j + 1];
            for k in 0..=j {
                row_j[k] -= uj * p[k] + pj * u[k];
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut off = vec![0.0; n];
    off[..n - 1].copy_from_slice(&sub[1..n]);
    (diag, off)
}

/// Implicit QL on a symmetric tridiagonal matrix; eigenvalues overwrite `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    // Absolute floor for deflation: pairs of (near) zero diagonal entries
    // would otherwise never satisfy the relative test.
    let norm = d
        .iter()
        .zip(e.iter())
        .map(|(x, y)| x.abs() + y.abs())
        .fold(0.0, f64::max);
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > QL_MAX_ITERATIONS {
                return Err(Error::NoConvergence { iterations });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Elementwise product.
pub fn hadamard(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix> {
    if a.order() != b.order() {
        return Err(Error::DimensionMismatch(format!(
            "hadamard of order {} and {}",
            a.order(),
            b.order()
        )));
    }
    Ok(SymMatrix {
        order: a.order(),
        values: a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(p, q)| p * q)
            .collect(),
    })
}

/// Per-column means and population (divide by `N`) standard deviations.
pub fn column_stats(x: &DataMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let d = x.cols();
    let mut means = vec![0.0; d];
    for i in 0..x.rows() {
        for (m, v) in means.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; d];
    for i in 0..x.rows() {
        for ((s, v), m) in vars.iter_mut().zip(x.row(i)).zip(&means) {
            let c = v - m;
            *s += c * c;
        }
    }
    let stds = vars.iter().map(|s| (s / n).sqrt()).collect();
    (means, stds)
}
