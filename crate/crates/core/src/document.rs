//! On-disk formats: the JSON network document, the JSON localization
//! result, and the CSV benchmark report. All writes go through a temp file
//! in the target directory followed by an atomic rename, so readers never
//! observe a half-written document.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::benchmark::CellSummary;
use crate::geometry;
use crate::network::{NetworkError, Node, SensorNetwork};
use crate::pipeline::PipelineOutput;
use crate::solver::SolveStatus;

/// Relative mismatch between a recorded edge length and the distance
/// recomputed from coordinates beyond which a document is rejected.
pub const EDGE_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(
        "edge ({i}, {j}) records distance {recorded} but the coordinates give {computed}"
    )]
    InconsistentEdge {
        i: u32,
        j: u32,
        recorded: f64,
        computed: f64,
    },
}

/// JSON record of one node. `coords` is optional for non-anchor nodes:
/// measurement-only documents omit it, generated ones keep it as ground
/// truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub anchor: bool,
    pub range: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

/// JSON record of one measured edge, `i < j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: u32,
    pub j: u32,
    pub distance: f64,
}

/// The interchange form of a sensor network.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub dimension: usize,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl NetworkDocument {
    pub fn from_network(net: &SensorNetwork) -> Self {
        Self {
            dimension: net.dimension(),
            nodes: net
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    anchor: n.is_anchor,
                    range: n.range,
                    coords: n.coords.clone(),
                })
                .collect(),
            edges: net
                .edges()
                .map(|(i, j, distance)| EdgeRecord { i, j, distance })
                .collect(),
        }
    }

    /// Validate and build the in-memory network. On top of the structural
    /// checks, any edge whose two endpoints both carry coordinates must
    /// record a distance consistent with them.
    pub fn to_network(&self) -> Result<SensorNetwork, DocumentError> {
        let net = SensorNetwork::from_parts(
            self.dimension,
            self.nodes
                .iter()
                .map(|r| Node {
                    id: r.id,
                    is_anchor: r.anchor,
                    range: r.range,
                    coords: r.coords.clone(),
                })
                .collect(),
            self.edges.iter().map(|e| (e.i, e.j, e.distance)),
        )?;
        for e in &self.edges {
            let (a, b) = (net.node(e.i), net.node(e.j));
            if let (Some(ca), Some(cb)) = (
                a.and_then(|n| n.coords.as_ref()),
                b.and_then(|n| n.coords.as_ref()),
            ) {
                let computed = geometry::squared_distance(ca, cb)
                    .map_err(|_| NetworkError::NodeDimension {
                        id: e.j,
                        expected: ca.len(),
                        got: cb.len(),
                    })?
                    .sqrt();
                if (computed - e.distance).abs() > EDGE_CONSISTENCY_TOL * (1.0 + computed) {
                    return Err(DocumentError::InconsistentEdge {
                        i: e.i,
                        j: e.j,
                        recorded: e.distance,
                        computed,
                    });
                }
            }
        }
        Ok(net)
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String, DocumentError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DocumentError> {
        write_atomic(path, self.to_json()?.as_bytes())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionRecord {
    pub id: u32,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub id: u32,
    pub passes: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRecord {
    pub prune_ms: f64,
    pub enumerate_ms: f64,
    pub assemble_ms: f64,
    pub solve_ms: f64,
}

/// JSON record of one localization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultDocument {
    pub dimension: usize,
    pub status: SolveStatus,
    pub rcond: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Ids removed by pruning, ascending.
    pub pruned: Vec<u32>,
    /// Positions of the localized unknowns; empty unless solved.
    pub positions: Vec<PositionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<DiagnosticRecord>>,
    pub timings: TimingRecord,
}

impl ResultDocument {
    pub fn from_output(dimension: usize, out: &PipelineOutput) -> Self {
        Self {
            dimension,
            status: out.result.status,
            rcond: out.result.rcond,
            iterations: out.result.iterations,
            pruned: out.pruned.clone(),
            positions: out
                .result
                .positions
                .iter()
                .map(|(&id, coords)| PositionRecord {
                    id,
                    coords: coords.clone(),
                })
                .collect(),
            diagnostics: out.diagnostics.as_ref().map(|d| {
                d.iter()
                    .map(|(&id, &passes)| DiagnosticRecord { id, passes })
                    .collect()
            }),
            timings: TimingRecord {
                prune_ms: out.timings.prune_ms,
                enumerate_ms: out.timings.enumerate_ms,
                assemble_ms: out.timings.assemble_ms,
                solve_ms: out.timings.solve_ms,
            },
        }
    }

    pub fn positions_by_id(&self) -> BTreeMap<u32, Vec<f64>> {
        self.positions
            .iter()
            .map(|p| (p.id, p.coords.clone()))
            .collect()
    }

    pub fn to_json(&self) -> Result<String, DocumentError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), DocumentError> {
        write_atomic(path, self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DocumentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn csv_float(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.8e}"),
        None => String::new(),
    }
}

/// Render benchmark cell summaries as CSV, one row per `(size, cap)` cell.
pub fn summaries_to_csv(cells: &[CellSummary]) -> String {
    let mut out = String::from(
        "size,cap,trials,localized_trials,localized_fraction,mean_rcond,\
         mean_max_error,mean_retained,mean_subsets_per_unknown,\
         mean_prune_ms,mean_enumerate_ms,mean_assemble_ms,mean_solve_ms\n",
    );
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.size,
            c.cap,
            c.trials,
            c.localized_trials,
            csv_float(Some(c.localized_fraction)),
            csv_float(c.mean_rcond),
            csv_float(c.mean_max_error),
            csv_float(Some(c.mean_retained)),
            csv_float(c.mean_subsets_per_unknown),
            csv_float(Some(c.mean_prune_ms)),
            csv_float(Some(c.mean_enumerate_ms)),
            csv_float(Some(c.mean_assemble_ms)),
            csv_float(Some(c.mean_solve_ms)),
        ));
    }
    out
}

pub fn save_summaries_csv(path: &Path, cells: &[CellSummary]) -> Result<(), DocumentError> {
    write_atomic(path, summaries_to_csv(cells).as_bytes())?;
    Ok(())
}

/// Write to a temp file in the destination directory, then rename over the
/// target.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
