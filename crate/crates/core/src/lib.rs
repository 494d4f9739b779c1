//! Range-only localization of sensor networks in arbitrary dimension.
//!
//! Nodes at unknown positions are located from noise-free pairwise range
//! measurements plus the coordinates of a set of anchor nodes. Each unknown
//! node expresses itself as a barycentric combination of neighbors using
//! Cayley-Menger determinant ratios, and the resulting linear system ties
//! every unknown node back to the anchors.
//!
//! Modules, roughly bottom-up:
//!
//! - [`geometry`]: squared distances, signed volumes, Cayley-Menger
//!   determinants and bi-determinants.
//! - [`network`]: range graph, neighbor simplex-set enumeration, pruning of
//!   nodes that cannot be localized.
//! - [`barycentric`]: coordinate rows computed from distances alone, plus a
//!   coordinate-based reference route.
//! - [`solver`]: assembly of the partitioned linear system, direct and
//!   iterative solves, conditioning and connectivity diagnostics.
//! - [`generate`]: lattice and random network generators, anchor selection.
//! - [`benchmark`]: batched experiment runner with per-phase timing.
//! - [`pipeline`]: end-to-end localization of one network.
//! - [`document`]: JSON network/result documents and CSV reports.

pub mod barycentric;
pub mod benchmark;
pub mod document;
pub mod generate;
pub mod geometry;
pub mod network;
pub mod pipeline;
pub mod solver;
