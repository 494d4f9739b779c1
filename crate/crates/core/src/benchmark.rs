//! Batched localization experiments over a grid of network sizes and
//! subset caps.
//!
//! Every trial draws its network from a seed derived from the master seed
//! and the trial tags, so caps share identical network instances and any
//! trial can be replayed in isolation. Trials run in parallel; the report
//! order is the deterministic grid order (sizes, then networks, then anchor
//! sets, then caps).

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::generate::{self, AnchorPolicy};
use crate::network::SubsetCap;
use crate::pipeline::{self, LocalizeOptions, SolverChoice};
use crate::solver::SolveStatus;

/// Relative per-coordinate tolerance for declaring a trial localized. The
/// absolute tolerance is this times `max(1, largest |true coordinate|)`.
pub const LOCALIZED_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum BenchmarkError {
    #[error("configuration error: {0}")]
    BadConfig(String),
    #[error("no ground truth for node {0}")]
    MissingTruth(u32),
}

/// Full description of an experiment grid over Gaussian random networks.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dimension: usize,
    /// Node counts to sweep.
    pub sizes: Vec<usize>,
    /// Independent networks drawn per size.
    pub networks_per_size: usize,
    /// Independent anchor selections per network.
    pub anchor_sets_per_network: usize,
    pub anchor_count: usize,
    pub anchor_policy: AnchorPolicy,
    /// Subset caps to sweep; all caps see identical network instances.
    pub caps: Vec<SubsetCap>,
    /// Per-axis standard deviation of node positions.
    pub scale_std: f64,
    /// Common sensing range.
    pub range: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), BenchmarkError> {
        let bad = |msg: String| Err(BenchmarkError::BadConfig(msg));
        if self.dimension == 0 {
            return bad("dimension must be at least 1".into());
        }
        if self.sizes.is_empty() {
            return bad("at least one size is required".into());
        }
        if self.caps.is_empty() {
            return bad("at least one subset cap is required".into());
        }
        if self.networks_per_size == 0 || self.anchor_sets_per_network == 0 {
            return bad("networks per size and anchor sets per network must be positive".into());
        }
        if !(self.scale_std > 0.0) || !(self.range > 0.0) {
            return bad("scale and range must be positive".into());
        }
        for &size in &self.sizes {
            if size < self.dimension + 2 {
                return bad(format!(
                    "size {size} cannot hold {} anchors plus an unknown",
                    self.dimension + 1
                ));
            }
            if self.anchor_count < self.dimension + 1 || self.anchor_count >= size {
                return bad(format!(
                    "anchor count {} is out of range for size {size}",
                    self.anchor_count
                ));
            }
        }
        Ok(())
    }
}

/// Outcome of one (network, anchor set, cap) combination.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub size: usize,
    pub network_index: usize,
    pub anchor_set_index: usize,
    pub cap: SubsetCap,
    pub network_seed: u64,
    pub anchor_seed: u64,
    pub pruned_count: usize,
    pub retained_unknowns: usize,
    pub status: Option<SolveStatus>,
    /// Solve succeeded and every retained unknown landed within
    /// [`LOCALIZED_TOL`] (per coordinate, relative to the coordinate scale).
    pub localized: bool,
    /// Largest / root-mean-square Euclidean error over retained unknowns.
    pub max_error: Option<f64>,
    pub rms_error: Option<f64>,
    pub rcond: Option<f64>,
    pub mean_subsets_per_unknown: Option<f64>,
    pub prune_ms: f64,
    pub enumerate_ms: f64,
    pub assemble_ms: f64,
    pub solve_ms: f64,
    /// Present when the trial could not be carried to a solve at all.
    pub failure: Option<String>,
}

/// Largest and root-mean-square Euclidean distance between estimated and
/// true positions, over the estimated nodes. Empty estimates give zeros.
pub fn localization_error(
    estimates: &BTreeMap<u32, Vec<f64>>,
    truth: &BTreeMap<u32, Vec<f64>>,
) -> Result<(f64, f64), BenchmarkError> {
    let mut max = 0.0f64;
    let mut sum_sq = 0.0f64;
    for (id, est) in estimates {
        let t = truth.get(id).ok_or(BenchmarkError::MissingTruth(*id))?;
        let dist_sq: f64 = est.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
        let dist = dist_sq.sqrt();
        max = max.max(dist);
        sum_sq += dist_sq;
    }
    let rms = if estimates.is_empty() {
        0.0
    } else {
        (sum_sq / estimates.len() as f64).sqrt()
    };
    Ok((max, rms))
}

fn run_trial(
    cfg: &ExperimentConfig,
    size: usize,
    network_index: usize,
    anchor_set_index: usize,
    cap: SubsetCap,
) -> TrialReport {
    let network_seed = derive_trial_seed(cfg.seed, 1, size, network_index, 0);
    let anchor_seed = derive_trial_seed(cfg.seed, 2, size, network_index, anchor_set_index);
    let mut report = TrialReport {
        size,
        network_index,
        anchor_set_index,
        cap,
        network_seed,
        anchor_seed,
        pruned_count: 0,
        retained_unknowns: 0,
        status: None,
        localized: false,
        max_error: None,
        rms_error: None,
        rcond: None,
        mean_subsets_per_unknown: None,
        prune_ms: 0.0,
        enumerate_ms: 0.0,
        assemble_ms: 0.0,
        solve_ms: 0.0,
        failure: None,
    };

    let net = match generate::gen_gaussian(cfg.dimension, size, cfg.scale_std, cfg.range, network_seed)
    {
        Ok(net) => net,
        Err(e) => {
            report.failure = Some(format!("generation failed: {e}"));
            return report;
        }
    };
    let marked = match generate::select_anchors(&net, cfg.anchor_count, cfg.anchor_policy, anchor_seed)
    {
        Ok(m) => m,
        Err(e) => {
            report.failure = Some(format!("anchor selection failed: {e}"));
            return report;
        }
    };

    let opts = LocalizeOptions {
        cap,
        solver: SolverChoice::Direct,
        ..Default::default()
    };
    let out = match pipeline::localize(&marked, &opts) {
        Ok(out) => out,
        Err(e) => {
            report.failure = Some(format!("pipeline failed: {e}"));
            return report;
        }
    };

    report.pruned_count = out.pruned.len();
    report.retained_unknowns = out.retained_unknowns.len();
    report.status = Some(out.result.status);
    report.rcond = Some(out.result.rcond);
    report.prune_ms = out.timings.prune_ms;
    report.enumerate_ms = out.timings.enumerate_ms;
    report.assemble_ms = out.timings.assemble_ms;
    report.solve_ms = out.timings.solve_ms;
    if !out.subset_counts.is_empty() {
        report.mean_subsets_per_unknown = Some(
            out.subset_counts.values().sum::<usize>() as f64 / out.subset_counts.len() as f64,
        );
    }

    if out.result.status == SolveStatus::Solved {
        let truth: BTreeMap<u32, Vec<f64>> = marked
            .nodes()
            .iter()
            .filter_map(|n| n.coords.clone().map(|c| (n.id, c)))
            .collect();
        match localization_error(&out.result.positions, &truth) {
            Ok((max, rms)) => {
                report.max_error = Some(max);
                report.rms_error = Some(rms);
                let scale = truth
                    .values()
                    .flat_map(|c| c.iter().map(|v| v.abs()))
                    .fold(1.0f64, f64::max);
                report.localized = out.result.positions.iter().all(|(id, est)| {
                    truth[id]
                        .iter()
                        .zip(est)
                        .all(|(t, e)| (t - e).abs() <= LOCALIZED_TOL * scale)
                });
            }
            Err(e) => report.failure = Some(format!("error evaluation failed: {e}")),
        }
    }
    report
}

fn derive_trial_seed(master: u64, kind: u64, size: usize, net: usize, set: usize) -> u64 {
    generate::derive_seed(master, &[kind, size as u64, net as u64, set as u64])
}

/// Run every trial of the grid. Trials execute in parallel; the returned
/// order is sizes, then networks, then anchor sets, then caps.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<Vec<TrialReport>, BenchmarkError> {
    cfg.validate()?;
    let mut grid = Vec::new();
    for &size in &cfg.sizes {
        for net in 0..cfg.networks_per_size {
            for set in 0..cfg.anchor_sets_per_network {
                for &cap in &cfg.caps {
                    grid.push((size, net, set, cap));
                }
            }
        }
    }
    Ok(grid
        .into_par_iter()
        .map(|(size, net, set, cap)| run_trial(cfg, size, net, set, cap))
        .collect())
}

/// Aggregates of one `(size, cap)` cell of the grid.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub size: usize,
    pub cap: SubsetCap,
    pub trials: usize,
    pub localized_trials: usize,
    pub localized_fraction: f64,
    pub mean_rcond: Option<f64>,
    pub mean_max_error: Option<f64>,
    pub mean_retained: f64,
    pub mean_subsets_per_unknown: Option<f64>,
    pub mean_prune_ms: f64,
    pub mean_enumerate_ms: f64,
    pub mean_assemble_ms: f64,
    pub mean_solve_ms: f64,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Group reports by `(size, cap)` and average, in ascending cell order.
pub fn summarize(reports: &[TrialReport]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<(usize, SubsetCap), Vec<&TrialReport>> = BTreeMap::new();
    for r in reports {
        cells.entry((r.size, r.cap)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((size, cap), rs)| {
            let trials = rs.len();
            let localized_trials = rs.iter().filter(|r| r.localized).count();
            CellSummary {
                size,
                cap,
                trials,
                localized_trials,
                localized_fraction: localized_trials as f64 / trials as f64,
                mean_rcond: mean_of(rs.iter().filter_map(|r| r.rcond)),
                mean_max_error: mean_of(rs.iter().filter_map(|r| r.max_error)),
                mean_retained: rs.iter().map(|r| r.retained_unknowns as f64).sum::<f64>()
                    / trials as f64,
                mean_subsets_per_unknown: mean_of(
                    rs.iter().filter_map(|r| r.mean_subsets_per_unknown),
                ),
                mean_prune_ms: rs.iter().map(|r| r.prune_ms).sum::<f64>() / trials as f64,
                mean_enumerate_ms: rs.iter().map(|r| r.enumerate_ms).sum::<f64>() / trials as f64,
                mean_assemble_ms: rs.iter().map(|r| r.assemble_ms).sum::<f64>() / trials as f64,
                mean_solve_ms: rs.iter().map(|r| r.solve_ms).sum::<f64>() / trials as f64,
            }
        })
        .collect()
}
