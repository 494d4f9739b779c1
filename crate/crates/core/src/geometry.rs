//! Distance-geometry kernels: squared distances, signed simplex volumes,
//! and Cayley-Menger determinants / bi-determinants.
//!
//! A Cayley-Menger bi-determinant relates the squared distances between two
//! ordered sets of `n + 1` points in `R^n` to the product of the signed
//! volumes of the simplices they span. Because it is defined purely in terms
//! of squared distances, it can be evaluated from range measurements alone,
//! which is what the localization pipeline relies on. All determinants here
//! are alternating forms: the order of the points matters and is preserved.

use thiserror::Error;

/// Relative tolerance used to decide that a Cayley-Menger determinant is
/// "numerically zero", i.e. that the underlying simplex is degenerate.
///
/// The absolute threshold is `DEGENERACY_EPS * scale` with
/// `scale = (max pairwise squared distance)^(point count)`, which keeps the
/// test invariant under uniform rescaling of the configuration.
pub const DEGENERACY_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("coordinate dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected {expected} points, got {got}")]
    WrongPointCount { expected: usize, got: usize },
    #[error("point sets have different sizes: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("squared-distance table shape {rows}x{cols} does not match expected {expected}x{expected}")]
    TableShape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("squared-distance entries must be non-negative, got {0}")]
    NegativeEntry(f64),
    #[error("entry count {got} does not match {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, got: usize },
}

/// An ordered list of Cartesian points, all with the same dimension.
///
/// Point order is significant: determinants computed from a `PointSet`
/// change sign when two points are swapped.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dimension: usize,
    points: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn new(dimension: usize, points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        for p in &points {
            if p.len() != dimension {
                return Err(GeometryError::DimensionMismatch {
                    expected: dimension,
                    got: p.len(),
                });
            }
        }
        Ok(Self { dimension, points })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Signed volume of the simplex spanned by the points, in point order.
    ///
    /// Computed as `det([1^T; X]) / n!` where the columns of `X` are the
    /// points and the leading row is all ones. Equivalent to the determinant
    /// of the edge vectors out of the first point, so the unit simplex with
    /// vertices at the origin and the canonical basis has volume `+1/n!`.
    /// Requires exactly `dimension + 1` points.
    pub fn signed_volume(&self) -> Result<f64, GeometryError> {
        let n = self.dimension;
        if self.points.len() != n + 1 {
            return Err(GeometryError::WrongPointCount {
                expected: n + 1,
                got: self.points.len(),
            });
        }
        let k = n + 1;
        let mut m = vec![0.0; k * k];
        for (col, p) in self.points.iter().enumerate() {
            m[col] = 1.0;
            for (row, &v) in p.iter().enumerate() {
                m[(row + 1) * k + col] = v;
            }
        }
        Ok(det_in_place(&mut m, k) / factorial(n))
    }
}

/// Table of squared Euclidean distances between two point sets
/// (`rows` points on one side, `cols` on the other).
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistanceTable {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl SquaredDistanceTable {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, GeometryError> {
        if entries.len() != rows * cols {
            return Err(GeometryError::EntryCount {
                rows,
                cols,
                got: entries.len(),
            });
        }
        if let Some(&bad) = entries.iter().find(|e| **e < 0.0) {
            return Err(GeometryError::NegativeEntry(bad));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    /// Build the table from coordinates: entry `(i, j)` is the squared
    /// distance between `xs[i]` and `ys[j]`.
    pub fn between(xs: &PointSet, ys: &PointSet) -> Result<Self, GeometryError> {
        if xs.dimension() != ys.dimension() {
            return Err(GeometryError::DimensionMismatch {
                expected: xs.dimension(),
                got: ys.dimension(),
            });
        }
        let mut entries = Vec::with_capacity(xs.len() * ys.len());
        for x in xs.points() {
            for y in ys.points() {
                entries.push(squared_distance(x, y)?);
            }
        }
        Ok(Self {
            rows: xs.len(),
            cols: ys.len(),
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(0.0, f64::max)
    }
}

/// Squared Euclidean distance between two coordinate vectors.
pub fn squared_distance(a: &[f64], b: &[f64]) -> Result<f64, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// Cayley-Menger bi-determinant of two point sets of `n + 1` points each.
///
/// Evaluates `2 (-1/2)^(n+1)` times the determinant of the squared-distance
/// matrix bordered by a row and column of ones. Equals
/// `(n!)^2 Vol(X) Vol(Y)` when both tables come from coordinates.
pub fn cayley_menger_bidet(xs: &PointSet, ys: &PointSet) -> Result<f64, GeometryError> {
    if xs.len() != ys.len() {
        return Err(GeometryError::SizeMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() != xs.dimension() + 1 {
        return Err(GeometryError::WrongPointCount {
            expected: xs.dimension() + 1,
            got: xs.len(),
        });
    }
    let table = SquaredDistanceTable::between(xs, ys)?;
    cayley_menger_bidet_from_table(&table)
}

/// Bi-determinant straight from a square squared-distance table. This is the
/// primary entry point in the localization pipeline, where only range
/// measurements are known.
pub fn cayley_menger_bidet_from_table(
    table: &SquaredDistanceTable,
) -> Result<f64, GeometryError> {
    if table.rows() != table.cols() {
        return Err(GeometryError::TableShape {
            rows: table.rows(),
            cols: table.cols(),
            expected: table.rows(),
        });
    }
    let s = table.rows();
    let mut buf = Vec::new();
    Ok(bordered_det_with(&mut buf, s, |i, j| table.get(i, j)))
}

/// Cayley-Menger determinant of one point set: the bi-determinant of the
/// set with itself. Non-negative for coordinate-built sets.
pub fn cayley_menger_det(xs: &PointSet) -> Result<f64, GeometryError> {
    cayley_menger_bidet(xs, xs)
}

pub fn cayley_menger_det_from_table(
    table: &SquaredDistanceTable,
) -> Result<f64, GeometryError> {
    cayley_menger_bidet_from_table(table)
}

/// Absolute degeneracy threshold for a determinant over `point_count` points
/// whose largest pairwise squared distance is `max_sq_dist`.
pub fn degeneracy_threshold(max_sq_dist: f64, point_count: usize) -> f64 {
    DEGENERACY_EPS * max_sq_dist.powi(point_count as i32)
}

/// Whether a Cayley-Menger determinant should be treated as zero.
pub fn is_degenerate(det: f64, max_sq_dist: f64, point_count: usize) -> bool {
    det.abs() <= degeneracy_threshold(max_sq_dist, point_count)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (2..=n).map(|k| k as f64).product()
}

/// Evaluate the bordered Cayley-Menger determinant for `s` points per side,
/// reading squared distances through `entry(i, j)`. `buf` is scratch space
/// reused across calls; this is the allocation-free path used by subset
/// enumeration and coordinate computation.
pub(crate) fn bordered_det_with<F>(buf: &mut Vec<f64>, s: usize, mut entry: F) -> f64
where
    F: FnMut(usize, usize) -> f64,
{
    let k = s + 1;
    buf.clear();
    buf.resize(k * k, 0.0);
    for j in 1..k {
        buf[j] = 1.0;
        buf[j * k] = 1.0;
    }
    for i in 0..s {
        for j in 0..s {
            buf[(i + 1) * k + (j + 1)] = entry(i, j);
        }
    }
    let det = det_in_place(buf, k);
    bidet_scale(s) * det
}

/// Factor turning the bordered-matrix determinant of an `s`-point set into
/// the Cayley-Menger value.
pub(crate) fn bidet_scale(s: usize) -> f64 {
    2.0 * (-0.5f64).powi(s as i32)
}

/// Gaussian elimination with partial pivoting on the augmented system
/// `[a | rhs]`, returning `det(a)`. On a nonzero return, `rhs` holds the
/// solution of `a x = rhs`; when the determinant is exactly zero the
/// elimination stops early and `rhs` is unspecified. `a` is row-major
/// `n x n` and is destroyed either way.
pub(crate) fn solve_with_det(a: &mut [f64], rhs: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in (col + 1)..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in col..n {
                a.swap(col * n + c, pivot * n + c);
            }
            rhs.swap(col, pivot);
            det = -det;
        }
        let diag = a[col * n + col];
        det *= diag;
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor != 0.0 {
                for c in (col + 1)..n {
                    a[row * n + c] -= factor * a[col * n + c];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut v = rhs[col];
        for c in (col + 1)..n {
            v -= a[col * n + c] * rhs[c];
        }
        rhs[col] = v / a[col * n + col];
    }
    det
}

/// In-place determinant by Gaussian elimination with partial pivoting.
/// `a` is row-major `n x n` and is destroyed.
pub(crate) fn det_in_place(a: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in (col + 1)..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            det = -det;
        }
        let diag = a[col * n + col];
        det *= diag;
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor != 0.0 {
                for c in (col + 1)..n {
                    a[row * n + c] -= factor * a[col * n + c];
                }
            }
        }
    }
    det
}
