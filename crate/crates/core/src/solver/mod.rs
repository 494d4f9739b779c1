//! Assembly and solution of the localization system.
//!
//! With anchors ordered first, the barycentric rows of the unknowns form the
//! blocks `C` (weights on anchors) and `D` (weights on other unknowns) of
//! the network coordinate matrix `[[I, 0], [C, D]]`. Unknown positions then
//! satisfy `(I - D) X_u = C X_a`, one right-hand side per coordinate axis.
//! The system is solved directly (pivoted LU) or by fixed-point iteration
//! `X <- C X_a + D X`, and two diagnostics qualify the answer: an exact
//! 1-norm reciprocal condition number of `I - D`, and a count of disjoint
//! paths from the anchors to each unknown in the weight-structure graph.

mod flow;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::barycentric::CoordinateRow;
use crate::network::SensorNetwork;
use flow::FlowNetwork;

/// Below this reciprocal condition number the direct solve refuses to
/// report coordinates.
pub const RCOND_SINGULAR: f64 = 1e-12;

/// Weights with absolute value at most this are treated as structural zeros
/// when building the path-diagnostic graph.
pub const STRUCTURAL_EPS: f64 = 1e-12;

/// The fixed-point iteration is declared divergent when the update norm
/// grows past this multiple of the initial update norm.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

pub const DEFAULT_MAX_ITERS: usize = 10_000;
pub const DEFAULT_ITER_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("need at least {needed} anchors, network has {got}")]
    TooFewAnchors { needed: usize, got: usize },
    #[error("no coordinate row for unknown node {0}")]
    MissingRow(u32),
    #[error("two coordinate rows share the owner {0}")]
    DuplicateRow(u32),
    #[error("row owner {0} is not an unknown node of the network")]
    RowOwnerNotUnknown(u32),
    #[error("row of {owner} references {target}, which is not in the network")]
    WeightTargetMissing { owner: u32, target: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solved,
    Singular,
    Diverged,
}

/// How paths are counted by the connectivity diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMode {
    /// Paths share no intermediate nodes and start at distinct anchors.
    VertexDisjoint,
    /// Paths share no edges; anchors may be reused.
    EdgeDisjoint,
}

/// The assembled blocks of the localization system, with node ids attached
/// to the row/column order (anchors first, each group ascending by id).
#[derive(Debug, Clone)]
pub struct LocalizationSystem {
    dimension: usize,
    anchor_ids: Vec<u32>,
    unknown_ids: Vec<u32>,
    anchor_positions: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

/// Outcome of a solve. `positions` is populated only when `status` is
/// `Solved`; `residual` is the largest absolute entry of
/// `(I - D) X_u - C X_a` for direct solves and the final update norm for
/// iterative ones (infinite when the solve failed).
#[derive(Debug, Clone)]
pub struct LocalizationResult {
    pub status: SolveStatus,
    pub positions: BTreeMap<u32, Vec<f64>>,
    pub rcond: f64,
    pub residual: f64,
    pub iterations: Option<usize>,
}

impl LocalizationSystem {
    /// Partition the network and fill `C` and `D` from one generalized row
    /// per unknown node. Requires at least `dimension + 1` anchors and
    /// exactly one row per unknown; rows may reference anchors and unknowns
    /// only.
    pub fn assemble(
        net: &SensorNetwork,
        rows: &[CoordinateRow],
    ) -> Result<Self, SolverError> {
        let n = net.dimension();
        let anchor_ids = net.anchor_ids();
        let unknown_ids = net.unknown_ids();
        if anchor_ids.len() < n + 1 {
            return Err(SolverError::TooFewAnchors {
                needed: n + 1,
                got: anchor_ids.len(),
            });
        }
        let anchor_index: BTreeMap<u32, usize> =
            anchor_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let unknown_index: BTreeMap<u32, usize> =
            unknown_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut by_owner: BTreeMap<u32, &CoordinateRow> = BTreeMap::new();
        for row in rows {
            if !unknown_index.contains_key(&row.owner()) {
                return Err(SolverError::RowOwnerNotUnknown(row.owner()));
            }
            if by_owner.insert(row.owner(), row).is_some() {
                return Err(SolverError::DuplicateRow(row.owner()));
            }
        }

        let (p, q) = (anchor_ids.len(), unknown_ids.len());
        let mut c = DMatrix::zeros(q, p);
        let mut d = DMatrix::zeros(q, q);
        for (r, &uid) in unknown_ids.iter().enumerate() {
            let row = by_owner.get(&uid).ok_or(SolverError::MissingRow(uid))?;
            for (&target, &w) in row.weights() {
                if let Some(&a) = anchor_index.get(&target) {
                    c[(r, a)] = w;
                } else if let Some(&u) = unknown_index.get(&target) {
                    d[(r, u)] = w;
                } else {
                    return Err(SolverError::WeightTargetMissing {
                        owner: uid,
                        target,
                    });
                }
            }
        }

        let mut anchor_positions = DMatrix::zeros(p, n);
        for (r, &aid) in anchor_ids.iter().enumerate() {
            let coords = net
                .node(aid)
                .and_then(|node| node.coords.as_ref())
                .expect("anchors always carry coordinates");
            for (k, &v) in coords.iter().enumerate() {
                anchor_positions[(r, k)] = v;
            }
        }

        Ok(Self {
            dimension: n,
            anchor_ids,
            unknown_ids,
            anchor_positions,
            c,
            d,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Anchor count.
    pub fn p(&self) -> usize {
        self.anchor_ids.len()
    }

    /// Unknown count.
    pub fn q(&self) -> usize {
        self.unknown_ids.len()
    }

    pub fn anchor_ids(&self) -> &[u32] {
        &self.anchor_ids
    }

    pub fn unknown_ids(&self) -> &[u32] {
        &self.unknown_ids
    }

    /// Weights of unknowns on anchors, `q x p`.
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Weights of unknowns on unknowns, `q x q`, zero diagonal.
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn anchor_positions(&self) -> &DMatrix<f64> {
        &self.anchor_positions
    }

    fn result_from_matrix(&self, x: &DMatrix<f64>) -> BTreeMap<u32, Vec<f64>> {
        self.unknown_ids
            .iter()
            .enumerate()
            .map(|(r, &id)| (id, (0..self.dimension).map(|k| x[(r, k)]).collect()))
            .collect()
    }

    /// Exact reciprocal 1-norm condition number of `I - D`, in `[0, 1]`.
    /// Zero when the matrix is exactly singular; one for the empty system.
    pub fn rcond_estimate(&self) -> f64 {
        let q = self.q();
        if q == 0 {
            return 1.0;
        }
        let m = DMatrix::identity(q, q) - &self.d;
        let norm = one_norm(&m);
        match m.try_inverse() {
            Some(inv) => {
                let r = 1.0 / (norm * one_norm(&inv));
                r.clamp(0.0, 1.0)
            }
            None => 0.0,
        }
    }

    /// Solve `(I - D) X_u = C X_a` by pivoted LU. Reports `Singular` (and
    /// withholds coordinates) when the reciprocal condition number falls
    /// below [`RCOND_SINGULAR`].
    pub fn solve_direct(&self) -> LocalizationResult {
        let q = self.q();
        let rcond = self.rcond_estimate();
        if q == 0 {
            return LocalizationResult {
                status: SolveStatus::Solved,
                positions: BTreeMap::new(),
                rcond,
                residual: 0.0,
                iterations: None,
            };
        }
        let m = DMatrix::identity(q, q) - &self.d;
        let rhs = &self.c * &self.anchor_positions;
        let solution = if rcond < RCOND_SINGULAR {
            None
        } else {
            m.clone().lu().solve(&rhs)
        };
        match solution {
            Some(x) => {
                let residual = (&m * &x - &rhs).abs().max();
                LocalizationResult {
                    status: SolveStatus::Solved,
                    positions: self.result_from_matrix(&x),
                    rcond,
                    residual,
                    iterations: None,
                }
            }
            None => LocalizationResult {
                status: SolveStatus::Singular,
                positions: BTreeMap::new(),
                rcond,
                residual: f64::INFINITY,
                iterations: None,
            },
        }
    }

    /// Fixed-point iteration `X <- C X_a + D X` from `x0` (zeros when
    /// absent). Converges for spectral radius of `D` below one; declared
    /// `Diverged` when the update norm exceeds [`DIVERGENCE_FACTOR`] times
    /// the initial update norm or after `max_iters` without reaching `tol`.
    pub fn solve_iterative(
        &self,
        x0: Option<&DMatrix<f64>>,
        max_iters: usize,
        tol: f64,
    ) -> LocalizationResult {
        let q = self.q();
        let rcond = self.rcond_estimate();
        if q == 0 {
            return LocalizationResult {
                status: SolveStatus::Solved,
                positions: BTreeMap::new(),
                rcond,
                residual: 0.0,
                iterations: Some(0),
            };
        }
        let base = &self.c * &self.anchor_positions;
        let mut x = match x0 {
            Some(given) => given.clone(),
            None => DMatrix::zeros(q, self.dimension),
        };
        let mut initial_update = None;
        for iter in 1..=max_iters {
            let next = &base + &self.d * &x;
            let update = (&next - &x).abs().max();
            x = next;
            let first = *initial_update.get_or_insert(update);
            if update <= tol {
                return LocalizationResult {
                    status: SolveStatus::Solved,
                    positions: self.result_from_matrix(&x),
                    rcond,
                    residual: update,
                    iterations: Some(iter),
                };
            }
            if update > DIVERGENCE_FACTOR * first {
                return LocalizationResult {
                    status: SolveStatus::Diverged,
                    positions: BTreeMap::new(),
                    rcond,
                    residual: f64::INFINITY,
                    iterations: Some(iter),
                };
            }
        }
        LocalizationResult {
            status: SolveStatus::Diverged,
            positions: BTreeMap::new(),
            rcond,
            residual: f64::INFINITY,
            iterations: Some(max_iters),
        }
    }

    /// Undirected edges of the weight-structure graph `[[I, 0], [C, D]]`,
    /// indexed anchors-first: entries with `|w| > STRUCTURAL_EPS` connect an
    /// unknown row to the node it weights.
    fn structure_edges(&self) -> BTreeSet<(usize, usize)> {
        let p = self.p();
        let mut edges = BTreeSet::new();
        let mut add = |a: usize, b: usize| {
            edges.insert((a.min(b), a.max(b)));
        };
        for r in 0..self.q() {
            for a in 0..p {
                if self.c[(r, a)].abs() > STRUCTURAL_EPS {
                    add(p + r, a);
                }
            }
            for w in 0..self.q() {
                if self.d[(r, w)].abs() > STRUCTURAL_EPS {
                    add(p + r, p + w);
                }
            }
        }
        edges
    }

    /// For every unknown, whether at least `k` disjoint paths lead from the
    /// anchor set to it in the weight-structure graph. Counting is by
    /// max-flow with unit capacities; see [`PathMode`] for the two notions
    /// of disjointness.
    pub fn disjoint_paths_diagnostic(&self, k: usize, mode: PathMode) -> BTreeMap<u32, bool> {
        let (p, q) = (self.p(), self.q());
        let edges = self.structure_edges();
        let k32 = u32::try_from(k).unwrap_or(u32::MAX);
        let mut out = BTreeMap::new();
        for (target, &uid) in self.unknown_ids.iter().enumerate() {
            let reached = match mode {
                PathMode::VertexDisjoint => {
                    // s=0; anchor a -> 1+a; unknown v -> in 1+p+2v, out 2+p+2v
                    let mut f = FlowNetwork::new(1 + p + 2 * q);
                    for a in 0..p {
                        f.add_arc(0, 1 + a, 1);
                    }
                    for v in 0..q {
                        f.add_arc(1 + p + 2 * v, 2 + p + 2 * v, 1);
                    }
                    for &(x, y) in &edges {
                        // x < y and anchors precede unknowns
                        let (v_in, v_out) = (1 + p + 2 * (y - p), 2 + p + 2 * (y - p));
                        if x < p {
                            f.add_arc(1 + x, v_in, 1);
                        } else {
                            let (w_in, w_out) = (1 + p + 2 * (x - p), 2 + p + 2 * (x - p));
                            f.add_arc(w_out, v_in, 1);
                            f.add_arc(v_out, w_in, 1);
                        }
                    }
                    f.max_flow(0, 1 + p + 2 * target, k32)
                }
                PathMode::EdgeDisjoint => {
                    // s=0; anchor a -> 1+a; unknown v -> 1+p+v
                    let mut f = FlowNetwork::new(1 + p + q);
                    for a in 0..p {
                        f.add_arc(0, 1 + a, k32);
                    }
                    for &(x, y) in &edges {
                        let yn = 1 + y;
                        if x < p {
                            f.add_arc(1 + x, yn, 1);
                        } else {
                            f.add_arc(1 + x, yn, 1);
                            f.add_arc(yn, 1 + x, 1);
                        }
                    }
                    f.max_flow(0, 1 + p + target, k32)
                }
            };
            out.insert(uid, reached >= k32);
        }
        out
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum())
        .fold(0.0, f64::max)
}
