//! End-to-end localization of one network: prune, enumerate simplex sets,
//! build a generalized coordinate row per unknown, assemble, solve.
//!
//! Row computation streams over subsets (nothing is collected globally) and
//! runs in parallel across unknown nodes; results are reduced in node order,
//! so the output is identical regardless of thread count.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::barycentric::{self, BarycentricError, CoordinateRow, RowAccumulator};
use crate::network::{
    self, Neighborhood, NetworkError, SensorNetwork, SubsetCap,
};
use crate::solver::{
    LocalizationResult, LocalizationSystem, PathMode, SolverError, DEFAULT_ITER_TOL,
    DEFAULT_MAX_ITERS,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("node {0} survived pruning but yielded no usable subsets")]
    NoUsableSubsets(u32),
    #[error("row combination failed for node {0}: {1}")]
    RowCombination(u32, BarycentricError),
}

/// Which solver finishes the pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverChoice {
    Direct,
    Iterative { max_iters: usize, tol: f64 },
}

impl SolverChoice {
    pub fn default_iterative() -> Self {
        SolverChoice::Iterative {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_ITER_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalizeOptions {
    pub cap: SubsetCap,
    pub solver: SolverChoice,
    /// When set, run the disjoint-path diagnostic with this requirement.
    pub diagnostic_paths: Option<usize>,
    pub path_mode: PathMode,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        Self {
            cap: SubsetCap::Unlimited,
            solver: SolverChoice::Direct,
            diagnostic_paths: None,
            path_mode: PathMode::VertexDisjoint,
        }
    }
}

/// Wall-clock milliseconds per pipeline phase. "enumerate" covers subset
/// enumeration together with row computation; the two are fused.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    pub prune_ms: f64,
    pub enumerate_ms: f64,
    pub assemble_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug)]
pub struct PipelineOutput {
    /// Ids removed by pruning, ascending.
    pub pruned: Vec<u32>,
    /// Unknown ids that survived pruning, ascending.
    pub retained_unknowns: Vec<u32>,
    /// Usable (non-degenerate) subsets that entered each unknown's row.
    pub subset_counts: BTreeMap<u32, usize>,
    pub system: LocalizationSystem,
    pub result: LocalizationResult,
    pub diagnostics: Option<BTreeMap<u32, bool>>,
    pub timings: PhaseTimings,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Generalized row of one unknown, streaming over its simplex sets under
/// the configured cap. Returns the row and the number of subsets used.
fn node_row(
    net: &SensorNetwork,
    id: u32,
    cap: SubsetCap,
) -> Result<(CoordinateRow, usize), PipelineError> {
    let mut acc = RowAccumulator::new(id);
    match cap {
        SubsetCap::Unlimited => {
            let neigh = Neighborhood::build(net, id)?;
            let size = net.dimension() + 1;
            let mut buf = Vec::new();
            let mut failed: Option<BarycentricError> = None;
            let _ = network::for_each_clique(&neigh, size, &mut |idx| {
                if let Some(row) = barycentric::row_from_neighborhood(&neigh, idx, &mut buf) {
                    if let Err(e) = acc.add(&row) {
                        failed = Some(e);
                        return ControlFlow::Break(());
                    }
                }
                ControlFlow::Continue(())
            });
            if let Some(e) = failed {
                return Err(PipelineError::RowCombination(id, e));
            }
        }
        SubsetCap::PerBranch(k) => {
            for subset in network::enumerate_simplex_sets_capped(net, id, k)? {
                match barycentric::row_for_subset(net, &subset) {
                    Ok(row) => acc
                        .add(&row)
                        .map_err(|e| PipelineError::RowCombination(id, e))?,
                    // capped enumeration already filtered degenerate subsets;
                    // a disagreement here would be an arithmetic mismatch
                    Err(BarycentricError::DegenerateFrame { .. }) => continue,
                    Err(e) => return Err(PipelineError::RowCombination(id, e)),
                }
            }
        }
    }
    let used = acc.count();
    let row = acc
        .finish()
        .map_err(|_| PipelineError::NoUsableSubsets(id))?;
    Ok((row, used))
}

/// Run the whole pipeline on `net`. The input network is not modified;
/// pruning works on a copy. Networks whose unknowns are all pruned still
/// assemble and "solve" the empty system, so callers can distinguish
/// `retained_unknowns.is_empty()` from a failed solve.
pub fn localize(net: &SensorNetwork, opts: &LocalizeOptions) -> Result<PipelineOutput, PipelineError> {
    let t = Instant::now();
    let (pruned_net, pruned) = network::prune_unlocalizable(net)?;
    let prune_ms = ms_since(t);

    let retained_unknowns = pruned_net.unknown_ids();

    let t = Instant::now();
    let per_node: Result<Vec<(CoordinateRow, usize)>, PipelineError> = retained_unknowns
        .par_iter()
        .map(|&id| node_row(&pruned_net, id, opts.cap))
        .collect();
    let per_node = per_node?;
    let enumerate_ms = ms_since(t);

    let mut rows = Vec::with_capacity(per_node.len());
    let mut subset_counts = BTreeMap::new();
    for (row, used) in per_node {
        subset_counts.insert(row.owner(), used);
        rows.push(row);
    }

    let t = Instant::now();
    let system = LocalizationSystem::assemble(&pruned_net, &rows)?;
    let assemble_ms = ms_since(t);

    let t = Instant::now();
    let result = match opts.solver {
        SolverChoice::Direct => system.solve_direct(),
        SolverChoice::Iterative { max_iters, tol } => {
            system.solve_iterative(None, max_iters, tol)
        }
    };
    let solve_ms = ms_since(t);

    let diagnostics = opts
        .diagnostic_paths
        .map(|k| system.disjoint_paths_diagnostic(k, opts.path_mode));

    Ok(PipelineOutput {
        pruned,
        retained_unknowns,
        subset_counts,
        system,
        result,
        diagnostics,
        timings: PhaseTimings {
            prune_ms,
            enumerate_ms,
            assemble_ms,
            solve_ms,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;
    use crate::solver::SolveStatus;
    use approx::assert_relative_eq;

    fn localized_positions(out: &PipelineOutput) -> &BTreeMap<u32, Vec<f64>> {
        assert_eq!(out.result.status, SolveStatus::Solved);
        &out.result.positions
    }

    /// Noise-free measurements must reproduce the generating coordinates.
    #[test]
    fn recovers_perturbed_lattice_positions_exactly() {
        let net = generate::gen_perturbed_lattice(2, 4, 1.0, 0.2, 1.9, 42).unwrap();
        let net = generate::select_anchors(
            &net,
            4,
            generate::AnchorPolicy::UniformRandom,
            5,
        )
        .unwrap();
        let out = localize(&net, &LocalizeOptions::default()).unwrap();
        let positions = localized_positions(&out);
        for (&id, got) in positions {
            let truth = net.node(id).unwrap().coords.as_ref().unwrap();
            for (a, b) in got.iter().zip(truth) {
                assert_relative_eq!(a, b, epsilon = 1e-9);
            }
        }
        assert_eq!(
            positions.len() + out.pruned.len() + net.anchor_count(),
            net.node_count()
        );
    }

    /// On an exact unit grid the usable triangles of every interior node
    /// average to the stencil `+1/2` on axis neighbors, `-1/4` on diagonal
    /// ones, which any separable field `f(x) + g(y)` satisfies. The system
    /// therefore has a large null space and the solver must refuse rather
    /// than report arbitrary positions.
    #[test]
    fn exact_lattice_is_rank_deficient_and_detected() {
        let net = generate::gen_lattice(2, 4, 1.0, 1.9).unwrap();
        let net = generate::select_anchors(
            &net,
            4,
            generate::AnchorPolicy::UniformRandom,
            5,
        )
        .unwrap();
        let out = localize(&net, &LocalizeOptions::default()).unwrap();
        assert_eq!(out.result.status, SolveStatus::Singular);
        assert!(out.result.positions.is_empty());
        assert!(out.result.rcond < crate::solver::RCOND_SINGULAR);
    }

    #[test]
    fn capped_and_unlimited_agree_on_small_network() {
        let net = generate::gen_gaussian(2, 25, 3.0, 4.0, 3).unwrap();
        let net =
            generate::select_anchors(&net, 4, generate::AnchorPolicy::UniformRandom, 9).unwrap();
        let unlimited = localize(&net, &LocalizeOptions::default()).unwrap();
        let capped = localize(
            &net,
            &LocalizeOptions {
                cap: SubsetCap::PerBranch(2),
                ..Default::default()
            },
        )
        .unwrap();
        // both solve; the capped run uses at most as many subsets
        assert_eq!(unlimited.result.status, SolveStatus::Solved);
        assert_eq!(capped.result.status, SolveStatus::Solved);
        for (id, &n_capped) in &capped.subset_counts {
            assert!(n_capped <= unlimited.subset_counts[id]);
        }
    }

    #[test]
    fn iterative_choice_runs_through_pipeline() {
        let net = generate::gen_lattice(2, 3, 1.0, 1.5).unwrap();
        let net =
            generate::select_anchors(&net, 4, generate::AnchorPolicy::UniformRandom, 2).unwrap();
        let direct = localize(&net, &LocalizeOptions::default()).unwrap();
        let iterative = localize(
            &net,
            &LocalizeOptions {
                solver: SolverChoice::default_iterative(),
                ..Default::default()
            },
        )
        .unwrap();
        if direct.result.status == SolveStatus::Solved
            && iterative.result.status == SolveStatus::Solved
        {
            for (id, a) in &direct.result.positions {
                let b = &iterative.result.positions[id];
                for (x, y) in a.iter().zip(b) {
                    assert_relative_eq!(x, y, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn all_pruned_network_reports_empty_solution() {
        // anchors in a triangle, one unknown far away with no neighbors
        let net = SensorNetwork::from_coordinates(
            2,
            vec![
                crate::network::Node {
                    id: 1,
                    is_anchor: true,
                    range: 10.0,
                    coords: Some(vec![0.0, 0.0]),
                },
                crate::network::Node {
                    id: 2,
                    is_anchor: true,
                    range: 10.0,
                    coords: Some(vec![1.0, 0.0]),
                },
                crate::network::Node {
                    id: 3,
                    is_anchor: true,
                    range: 10.0,
                    coords: Some(vec![0.0, 1.0]),
                },
                crate::network::Node {
                    id: 4,
                    is_anchor: false,
                    range: 10.0,
                    coords: Some(vec![100.0, 100.0]),
                },
            ],
        )
        .unwrap();
        let out = localize(&net, &LocalizeOptions::default()).unwrap();
        assert_eq!(out.pruned, vec![4]);
        assert!(out.retained_unknowns.is_empty());
        assert_eq!(out.result.status, SolveStatus::Solved);
        assert!(out.result.positions.is_empty());
    }

    #[test]
    fn diagnostics_are_attached_when_requested() {
        let net = generate::gen_lattice(2, 3, 1.0, 1.5).unwrap();
        let net =
            generate::select_anchors(&net, 3, generate::AnchorPolicy::UniformRandom, 4).unwrap();
        let out = localize(
            &net,
            &LocalizeOptions {
                diagnostic_paths: Some(3),
                ..Default::default()
            },
        )
        .unwrap();
        let diag = out.diagnostics.expect("diagnostics requested");
        assert_eq!(
            diag.keys().copied().collect::<Vec<_>>(),
            out.retained_unknowns
        );
    }
}
