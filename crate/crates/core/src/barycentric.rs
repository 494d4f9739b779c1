//! Barycentric coordinate rows computed from range measurements.
//!
//! Given a simplex set of a node (members mutually adjacent, all adjacent to
//! the owner), the owner's barycentric coordinates with respect to the
//! member simplex are ratios of Cayley-Menger bi-determinants: the
//! denominator is the determinant of the member set, and the numerator for
//! member `j` replaces the `j`-th member by the owner, preserving order.
//! Order preservation is what keeps the signs correct for owners outside the
//! member simplex.
//!
//! [`barycentric_from_coordinates`] is the classical coordinate-based route
//! (solve the augmented frame system); it needs positions, so the pipeline
//! never uses it, but it serves as an independent cross-check of the
//! distance-based route in tests.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::geometry::{self, PointSet};
use crate::network::{Neighborhood, SensorNetwork, SimplexIndexSet};

#[derive(Debug, Error, PartialEq)]
pub enum BarycentricError {
    #[error("subset must have at least one member")]
    EmptySubset,
    #[error("owner {0} appears among the subset members")]
    OwnerInSubset(u32),
    #[error("no measured distance between {0} and {1}")]
    MissingDistance(u32, u32),
    #[error("member simplex is degenerate (|det| = {det:e}, threshold {threshold:e})")]
    DegenerateFrame { det: f64, threshold: f64 },
    #[error("frame has {got} points, expected {expected}")]
    FrameSize { expected: usize, got: usize },
    #[error("point has dimension {got}, frame has dimension {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("frame matrix is singular")]
    SingularFrame,
    #[error("cannot combine an empty set of rows")]
    NoRows,
    #[error("rows have different owners: {0} and {1}")]
    MixedOwners(u32, u32),
}

/// Barycentric weights of one node with respect to some of its neighbors.
/// Neighbors not present have weight zero. Weights of a single simplex set
/// sum to one, and averaging rows preserves that.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateRow {
    owner: u32,
    weights: BTreeMap<u32, f64>,
}

impl CoordinateRow {
    pub fn new(owner: u32, weights: BTreeMap<u32, f64>) -> Self {
        debug_assert!(!weights.contains_key(&owner));
        Self { owner, weights }
    }

    pub fn owner(&self) -> u32 {
        self.owner
    }

    pub fn weights(&self) -> &BTreeMap<u32, f64> {
        &self.weights
    }

    /// Weight of `id`, zero when absent.
    pub fn weight(&self, id: u32) -> f64 {
        self.weights.get(&id).copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// Weights for `s` members from squared distances alone. `member_sq` reads
/// the member-member table, `owner_sq` the member-owner column. Returns the
/// degenerate determinant and its threshold as the error value.
///
/// Each weight is the ratio of the member-replacing bi-determinant to the
/// member-set determinant. Replacing one column of the bordered matrix by
/// the owner's column is exactly what Cramer's rule inverts, so the whole
/// weight vector comes out of a single elimination against the owner column
/// instead of `s + 1` independent determinants.
fn lambda_from_sq(
    s: usize,
    member_sq: &dyn Fn(usize, usize) -> f64,
    owner_sq: &dyn Fn(usize) -> f64,
    buf: &mut Vec<f64>,
) -> Result<Vec<f64>, (f64, f64)> {
    let mut max_sq = 0.0f64;
    for i in 0..s {
        for j in (i + 1)..s {
            max_sq = max_sq.max(member_sq(i, j));
        }
    }
    let threshold = geometry::degeneracy_threshold(max_sq, s);

    // An owner whose squared distances duplicate a member's column makes
    // every other numerator determinant cancel exactly, so the row is an
    // exact indicator. The elimination below would blur that to roundoff;
    // keep it exact.
    'members: for j in 0..s {
        if owner_sq(j) != 0.0 {
            continue;
        }
        for i in 0..s {
            if i != j && owner_sq(i) != member_sq(i, j) {
                continue 'members;
            }
        }
        let denom = geometry::bordered_det_with(buf, s, |a, b| member_sq(a, b));
        if denom.abs() <= threshold {
            return Err((denom, threshold));
        }
        let mut lambda = vec![0.0; s];
        lambda[j] = 1.0;
        return Ok(lambda);
    }

    let k = s + 1;
    buf.clear();
    buf.resize(k * k + k, 0.0);
    let (m, rhs) = buf.split_at_mut(k * k);
    for j in 1..k {
        m[j] = 1.0;
        m[j * k] = 1.0;
    }
    rhs[0] = 1.0;
    for i in 0..s {
        rhs[i + 1] = owner_sq(i);
        for j in 0..s {
            m[(i + 1) * k + (j + 1)] = member_sq(i, j);
        }
    }
    let det = geometry::solve_with_det(m, rhs, k);
    let denom = geometry::bidet_scale(s) * det;
    if denom.abs() <= threshold {
        return Err((denom, threshold));
    }
    Ok(rhs[1..].to_vec())
}

/// Barycentric coordinates of `owner` with respect to `members`, from
/// squared distances supplied by `squared`. The returned row keys weights by
/// member id, in member order; weights sum to one. Owners lying outside the
/// member simplex simply get weights of mixed sign.
pub fn barycentric_from_distances<F>(
    owner: u32,
    members: &[u32],
    mut squared: F,
) -> Result<CoordinateRow, BarycentricError>
where
    F: FnMut(u32, u32) -> Option<f64>,
{
    let s = members.len();
    if s == 0 {
        return Err(BarycentricError::EmptySubset);
    }
    if members.contains(&owner) {
        return Err(BarycentricError::OwnerInSubset(owner));
    }
    let mut table = vec![0.0; s * s];
    let mut owner_col = vec![0.0; s];
    for i in 0..s {
        owner_col[i] = squared(members[i], owner)
            .ok_or(BarycentricError::MissingDistance(members[i], owner))?;
        for j in (i + 1)..s {
            let d = squared(members[i], members[j])
                .ok_or(BarycentricError::MissingDistance(members[i], members[j]))?;
            table[i * s + j] = d;
            table[j * s + i] = d;
        }
    }
    let mut buf = Vec::new();
    let lambda = lambda_from_sq(s, &|i, j| table[i * s + j], &|i| owner_col[i], &mut buf)
        .map_err(|(det, threshold)| BarycentricError::DegenerateFrame { det, threshold })?;
    Ok(CoordinateRow::new(
        owner,
        members.iter().copied().zip(lambda).collect(),
    ))
}

/// Row for a simplex set, reading distances from the network.
pub fn row_for_subset(
    net: &SensorNetwork,
    subset: &SimplexIndexSet,
) -> Result<CoordinateRow, BarycentricError> {
    barycentric_from_distances(subset.owner, &subset.members, |a, b| net.squared(a, b))
}

/// Fast path over a prebuilt neighborhood: `idx` are local member indices.
/// Returns `None` for degenerate member simplices.
pub(crate) fn row_from_neighborhood(
    neigh: &Neighborhood,
    idx: &[usize],
    buf: &mut Vec<f64>,
) -> Option<CoordinateRow> {
    let lambda = lambda_from_sq(
        idx.len(),
        &|i, j| neigh.member_sq(idx[i], idx[j]),
        &|i| neigh.owner_sq[idx[i]],
        buf,
    )
    .ok()?;
    Some(CoordinateRow::new(
        neigh.owner,
        idx.iter().map(|&i| neigh.ids[i]).zip(lambda).collect(),
    ))
}

/// Coordinate-based route: solve the augmented frame system
/// `[1^T; X] lambda = [1; x]` for the weights of `x` with respect to the
/// frame points, in frame order. Requires `dimension + 1` frame points.
pub fn barycentric_from_coordinates(
    frame: &PointSet,
    x: &[f64],
) -> Result<Vec<f64>, BarycentricError> {
    let n = frame.dimension();
    if frame.len() != n + 1 {
        return Err(BarycentricError::FrameSize {
            expected: n + 1,
            got: frame.len(),
        });
    }
    if x.len() != n {
        return Err(BarycentricError::PointDimension {
            expected: n,
            got: x.len(),
        });
    }
    let k = n + 1;
    let mut m = DMatrix::zeros(k, k);
    for (col, p) in frame.points().iter().enumerate() {
        m[(0, col)] = 1.0;
        for (row, &v) in p.iter().enumerate() {
            m[(row + 1, col)] = v;
        }
    }
    let mut rhs = DVector::zeros(k);
    rhs[0] = 1.0;
    for (row, &v) in x.iter().enumerate() {
        rhs[row + 1] = v;
    }
    m.lu()
        .solve(&rhs)
        .map(|sol| sol.iter().copied().collect())
        .ok_or(BarycentricError::SingularFrame)
}

/// Streaming uniform average of coordinate rows for one owner. Lets callers
/// fold over subsets one row at a time instead of materializing them all.
#[derive(Debug, Clone)]
pub struct RowAccumulator {
    owner: u32,
    acc: BTreeMap<u32, f64>,
    count: usize,
}

impl RowAccumulator {
    pub fn new(owner: u32) -> Self {
        Self {
            owner,
            acc: BTreeMap::new(),
            count: 0,
        }
    }

    pub fn add(&mut self, row: &CoordinateRow) -> Result<(), BarycentricError> {
        if row.owner() != self.owner {
            return Err(BarycentricError::MixedOwners(self.owner, row.owner()));
        }
        for (&id, &w) in row.weights() {
            *self.acc.entry(id).or_insert(0.0) += w;
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(self) -> Result<CoordinateRow, BarycentricError> {
        if self.count == 0 {
            return Err(BarycentricError::NoRows);
        }
        let scale = 1.0 / self.count as f64;
        let mut acc = self.acc;
        for w in acc.values_mut() {
            *w *= scale;
        }
        Ok(CoordinateRow::new(self.owner, acc))
    }
}

/// Combine the rows of one owner over several simplex sets into a single
/// row by uniform averaging, treating absent weights as zero. The average
/// of rows that each sum to one still sums to one.
pub fn generalized_coordinates(rows: &[CoordinateRow]) -> Result<CoordinateRow, BarycentricError> {
    let first = rows.first().ok_or(BarycentricError::NoRows)?;
    let mut acc = RowAccumulator::new(first.owner());
    for row in rows {
        acc.add(row)?;
    }
    acc.finish()
}
