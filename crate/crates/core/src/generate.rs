//! Synthetic network generators and anchor selection.
//!
//! All randomness flows through a seeded ChaCha stream, and independent
//! streams for sub-experiments are derived with [`derive_seed`], so any
//! network a run produced can be regenerated from the master seed and the
//! trial tags alone.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::barycentric::{self, BarycentricError};
use crate::geometry::PointSet;
use crate::network::{NetworkError, Node, SensorNetwork};

/// Weight margin for the strict-inside / strict-outside hull tests.
pub const HULL_EPS: f64 = 1e-9;

/// Attempts before anchor selection under a placement policy gives up.
pub const ANCHOR_SEARCH_ATTEMPTS: usize = 500;

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("anchor count {got} must be between dimension + 1 = {min} and node count - 1 = {max}")]
    BadAnchorCount { got: usize, min: usize, max: usize },
    #[error("anchor id {0} is not in the network")]
    UnknownAnchorId(u32),
    #[error("no anchor placement satisfied the policy after {0} attempts")]
    AnchorSearchExhausted(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// How anchors are picked from the generated nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorPolicy {
    /// A uniformly random subset of the nodes.
    UniformRandom,
    /// Random subsets are retried until the unknowns straddle the anchor
    /// hull: at least one strictly inside and at least one strictly outside.
    HullMixed,
}

impl fmt::Display for AnchorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnchorPolicy::UniformRandom => "uniform-random",
            AnchorPolicy::HullMixed => "hull-mixed",
        })
    }
}

impl FromStr for AnchorPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform-random" | "uniform_random" | "uniform" => Ok(AnchorPolicy::UniformRandom),
            "hull-mixed" | "hull_mixed" => Ok(AnchorPolicy::HullMixed),
            other => Err(format!(
                "unknown anchor policy {other:?}, expected uniform-random or hull-mixed"
            )),
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed from a master seed and a tag path, so that
/// e.g. trial `(size, network, anchor set)` gets its own stream. Order and
/// length of the tags both matter.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix(master ^ 0x9E37_79B9_7F4A_7C15);
    for &t in tags {
        state = splitmix(state.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t));
    }
    state
}

fn nodes_from_points(points: Vec<Vec<f64>>, range: f64) -> Vec<Node> {
    points
        .into_iter()
        .enumerate()
        .map(|(i, coords)| Node {
            id: i as u32 + 1,
            is_anchor: false,
            range,
            coords: Some(coords),
        })
        .collect()
}

/// Points of a `side^dimension` grid with the given spacing, in odometer
/// order (last axis fastest), starting at the origin.
fn lattice_points(dimension: usize, side: usize, spacing: f64) -> Vec<Vec<f64>> {
    let count = side.pow(dimension as u32);
    let mut points = Vec::with_capacity(count);
    let mut idx = vec![0usize; dimension];
    for _ in 0..count {
        points.push(idx.iter().map(|&k| k as f64 * spacing).collect());
        for axis in (0..dimension).rev() {
            idx[axis] += 1;
            if idx[axis] < side {
                break;
            }
            idx[axis] = 0;
        }
    }
    points
}

/// Regular grid network: `side^dimension` nodes, all unknown, with edges
/// from the common sensing range.
pub fn gen_lattice(
    dimension: usize,
    side: usize,
    spacing: f64,
    range: f64,
) -> Result<SensorNetwork, NetworkError> {
    assert!(side >= 2, "lattice side must be at least 2");
    let nodes = nodes_from_points(lattice_points(dimension, side, spacing), range);
    SensorNetwork::from_coordinates(dimension, nodes)
}

/// Grid network with i.i.d. Gaussian perturbation of every coordinate.
pub fn gen_perturbed_lattice(
    dimension: usize,
    side: usize,
    spacing: f64,
    noise_std: f64,
    range: f64,
    seed: u64,
) -> Result<SensorNetwork, NetworkError> {
    assert!(side >= 2, "lattice side must be at least 2");
    assert!(noise_std >= 0.0, "noise level must be non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut points = lattice_points(dimension, side, spacing);
    if noise_std > 0.0 {
        for p in &mut points {
            for v in p.iter_mut() {
                *v += noise_std * normal.sample(&mut rng);
            }
        }
    }
    SensorNetwork::from_coordinates(dimension, nodes_from_points(points, range))
}

/// `count` nodes drawn i.i.d. from a centered isotropic Gaussian with the
/// given per-axis standard deviation.
pub fn gen_gaussian(
    dimension: usize,
    count: usize,
    scale_std: f64,
    range: f64,
    seed: u64,
) -> Result<SensorNetwork, NetworkError> {
    assert!(
        count >= dimension + 2,
        "need at least dimension + 2 nodes for anchors plus one unknown"
    );
    assert!(scale_std > 0.0, "scale must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, scale_std).expect("valid std");
    let points = (0..count)
        .map(|_| (0..dimension).map(|_| normal.sample(&mut rng)).collect())
        .collect();
    SensorNetwork::from_coordinates(dimension, nodes_from_points(points, range))
}

/// Copy of the network with exactly the listed ids marked as anchors.
/// Anchors must carry coordinates, so every listed node needs them.
pub fn mark_anchors(net: &SensorNetwork, ids: &[u32]) -> Result<SensorNetwork, GenerateError> {
    let chosen: BTreeSet<u32> = ids.iter().copied().collect();
    for &id in &chosen {
        if !net.contains(id) {
            return Err(GenerateError::UnknownAnchorId(id));
        }
    }
    let nodes = net
        .nodes()
        .iter()
        .map(|n| Node {
            is_anchor: chosen.contains(&n.id),
            ..n.clone()
        })
        .collect();
    Ok(SensorNetwork::from_parts(
        net.dimension(),
        nodes,
        net.edges(),
    )?)
}

/// Where a point sits relative to the convex hull of a point cloud,
/// decided by barycentric signs over `(dimension + 1)`-subsets: strictly
/// inside some non-degenerate simplex means inside the hull; strictly
/// outside every non-degenerate simplex means outside the hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum HullPosition {
    Inside,
    Outside,
    Boundary,
}

pub(crate) fn hull_position(cloud: &[Vec<f64>], x: &[f64], dimension: usize) -> HullPosition {
    let k = dimension + 1;
    if cloud.len() < k {
        return HullPosition::Outside;
    }
    let mut any_nondegenerate = false;
    let mut clearly_outside_all = true;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let frame = PointSet::new(
            dimension,
            pick.iter().map(|&i| cloud[i].clone()).collect(),
        )
        .expect("cloud points share the dimension");
        match barycentric::barycentric_from_coordinates(&frame, x) {
            Ok(weights) => {
                any_nondegenerate = true;
                let min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
                if min > HULL_EPS {
                    return HullPosition::Inside;
                }
                if min >= -HULL_EPS {
                    clearly_outside_all = false;
                }
            }
            Err(BarycentricError::SingularFrame) => {}
            Err(other) => unreachable!("frame construction is size-checked: {other}"),
        }
        // next k-combination of cloud indices in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                if !any_nondegenerate || !clearly_outside_all {
                    return HullPosition::Boundary;
                }
                return HullPosition::Outside;
            }
            i -= 1;
            if pick[i] != i + cloud.len() - k {
                break;
            }
        }
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// Whether the unknowns of `net` straddle the hull of the chosen anchors.
fn unknowns_straddle_hull(net: &SensorNetwork, chosen: &[u32]) -> bool {
    let anchor_coords: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&id| net.node(id).unwrap().coords.clone().unwrap())
        .collect();
    let mut saw_inside = false;
    let mut saw_outside = false;
    for node in net.nodes() {
        if chosen.contains(&node.id) {
            continue;
        }
        let Some(coords) = &node.coords else { continue };
        match hull_position(&anchor_coords, coords, net.dimension()) {
            HullPosition::Inside => saw_inside = true,
            HullPosition::Outside => saw_outside = true,
            HullPosition::Boundary => {}
        }
        if saw_inside && saw_outside {
            return true;
        }
    }
    false
}

/// Mark `count` nodes as anchors according to `policy`. Every node keeps
/// its coordinates; only the anchor flags change. Requires
/// `dimension + 1 <= count < node count` and coordinates on all nodes.
pub fn select_anchors(
    net: &SensorNetwork,
    count: usize,
    policy: AnchorPolicy,
    seed: u64,
) -> Result<SensorNetwork, GenerateError> {
    let n = net.dimension();
    if count < n + 1 || count >= net.node_count() {
        return Err(GenerateError::BadAnchorCount {
            got: count,
            min: n + 1,
            max: net.node_count().saturating_sub(1),
        });
    }
    let ids: Vec<u32> = net.nodes().iter().map(|n| n.id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<u32> {
        let mut chosen: Vec<u32> = sample(rng, ids.len(), count)
            .into_iter()
            .map(|i| ids[i])
            .collect();
        chosen.sort_unstable();
        chosen
    };
    match policy {
        AnchorPolicy::UniformRandom => mark_anchors(net, &draw(&mut rng)),
        AnchorPolicy::HullMixed => {
            for _ in 0..ANCHOR_SEARCH_ATTEMPTS {
                let chosen = draw(&mut rng);
                if unknowns_straddle_hull(net, &chosen) {
                    return mark_anchors(net, &chosen);
                }
            }
            Err(GenerateError::AnchorSearchExhausted(ANCHOR_SEARCH_ATTEMPTS))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_enumerates_the_grid_in_order() {
        let net = gen_lattice(2, 3, 2.0, 2.0).unwrap();
        assert_eq!(net.node_count(), 9);
        // odometer order: id 1 -> (0,0), id 2 -> (0,2), id 4 -> (2,0)
        assert_eq!(net.node(1).unwrap().coords.as_deref(), Some(&[0.0, 0.0][..]));
        assert_eq!(net.node(2).unwrap().coords.as_deref(), Some(&[0.0, 2.0][..]));
        assert_eq!(net.node(4).unwrap().coords.as_deref(), Some(&[2.0, 0.0][..]));
        // range = spacing connects only axis neighbors: counts 2x12 edges / grid
        assert_eq!(net.degree(1).unwrap(), 2); // corner
        assert_eq!(net.degree(5).unwrap(), 4); // center
    }

    #[test]
    fn lattice_range_reaches_diagonals() {
        let net = gen_lattice(2, 3, 1.0, 1.5).unwrap();
        assert_eq!(net.degree(5).unwrap(), 8); // center sees the full ring
    }

    #[test]
    fn perturbed_lattice_with_zero_noise_is_the_lattice() {
        let plain = gen_lattice(3, 2, 1.0, 1.2).unwrap();
        let perturbed = gen_perturbed_lattice(3, 2, 1.0, 0.0, 1.2, 99).unwrap();
        for (a, b) in plain.nodes().iter().zip(perturbed.nodes()) {
            assert_eq!(a.coords, b.coords);
        }
    }

    #[test]
    fn perturbed_lattice_is_seed_deterministic() {
        let a = gen_perturbed_lattice(3, 3, 1.0, 0.5, 2.0, 7).unwrap();
        let b = gen_perturbed_lattice(3, 3, 1.0, 0.5, 2.0, 7).unwrap();
        let c = gen_perturbed_lattice(3, 3, 1.0, 0.5, 2.0, 8).unwrap();
        for (x, y) in a.nodes().iter().zip(b.nodes()) {
            assert_eq!(x.coords, y.coords);
        }
        assert!(a.nodes().iter().zip(c.nodes()).any(|(x, y)| x.coords != y.coords));
    }

    #[test]
    fn gaussian_cloud_has_expected_shape() {
        let net = gen_gaussian(3, 100, 5.0, 5.0, 1).unwrap();
        assert_eq!(net.node_count(), 100);
        assert_eq!(net.dimension(), 3);
        let mean: f64 = net
            .nodes()
            .iter()
            .map(|n| n.coords.as_ref().unwrap()[0])
            .sum::<f64>()
            / 100.0;
        assert!(mean.abs() < 5.0, "sample mean {mean} implausible for std 5");
    }

    #[test]
    fn derived_seeds_distinguish_tag_paths() {
        let mut seen = BTreeSet::new();
        for master in 0..4u64 {
            for tags in [
                vec![],
                vec![0],
                vec![1],
                vec![0, 0],
                vec![0, 1],
                vec![1, 0],
                vec![1, 2, 3],
                vec![3, 2, 1],
            ] {
                assert!(
                    seen.insert(derive_seed(master, &tags)),
                    "collision at master {master} tags {tags:?}"
                );
            }
        }
        assert_eq!(derive_seed(5, &[1, 2]), derive_seed(5, &[1, 2]));
    }

    #[test]
    fn hull_position_on_unit_square() {
        let square = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ];
        assert_eq!(hull_position(&square, &[0.4, 0.3], 2), HullPosition::Inside);
        assert_eq!(hull_position(&square, &[0.9, 0.1], 2), HullPosition::Inside);
        assert_eq!(hull_position(&square, &[2.0, 0.5], 2), HullPosition::Outside);
        assert_eq!(hull_position(&square, &[-0.1, -0.1], 2), HullPosition::Outside);
        // on an edge: inside no simplex strictly, outside not all
        assert_eq!(hull_position(&square, &[0.5, 0.0], 2), HullPosition::Boundary);
        // the center sits on both diagonals, so no single sub-simplex
        // contains it strictly; the test is conservative there
        assert_eq!(hull_position(&square, &[0.5, 0.5], 2), HullPosition::Boundary);
    }

    #[test]
    fn hull_position_ignores_degenerate_subsets() {
        // three collinear points plus one apex: only subsets with the apex count
        let cloud = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![2.0, 0.0],
            vec![1.0, 2.0],
        ];
        assert_eq!(hull_position(&cloud, &[1.0, 0.5], 2), HullPosition::Inside);
        assert_eq!(hull_position(&cloud, &[1.0, -0.5], 2), HullPosition::Outside);
    }

    #[test]
    fn select_anchors_uniform_marks_exactly_count() {
        let net = gen_gaussian(2, 30, 3.0, 4.0, 11).unwrap();
        let with = select_anchors(&net, 5, AnchorPolicy::UniformRandom, 123).unwrap();
        assert_eq!(with.anchor_count(), 5);
        assert_eq!(with.node_count(), 30);
        assert_eq!(with.edge_count(), net.edge_count());
        // deterministic in the seed
        let again = select_anchors(&net, 5, AnchorPolicy::UniformRandom, 123).unwrap();
        assert_eq!(with.anchor_ids(), again.anchor_ids());
    }

    #[test]
    fn select_anchors_validates_count() {
        let net = gen_gaussian(2, 10, 3.0, 4.0, 11).unwrap();
        assert!(matches!(
            select_anchors(&net, 2, AnchorPolicy::UniformRandom, 1),
            Err(GenerateError::BadAnchorCount { got: 2, min: 3, .. })
        ));
        assert!(matches!(
            select_anchors(&net, 10, AnchorPolicy::UniformRandom, 1),
            Err(GenerateError::BadAnchorCount { got: 10, .. })
        ));
    }

    #[test]
    fn hull_mixed_selection_straddles_the_hull() {
        let net = gen_gaussian(2, 40, 5.0, 6.0, 21).unwrap();
        let with = select_anchors(&net, 4, AnchorPolicy::HullMixed, 77).unwrap();
        let anchors: Vec<Vec<f64>> = with
            .nodes()
            .iter()
            .filter(|n| n.is_anchor)
            .map(|n| n.coords.clone().unwrap())
            .collect();
        let mut inside = 0;
        let mut outside = 0;
        for node in with.nodes().iter().filter(|n| !n.is_anchor) {
            match hull_position(&anchors, node.coords.as_ref().unwrap(), 2) {
                HullPosition::Inside => inside += 1,
                HullPosition::Outside => outside += 1,
                HullPosition::Boundary => {}
            }
        }
        assert!(inside >= 1, "no unknown inside the anchor hull");
        assert!(outside >= 1, "no unknown outside the anchor hull");
    }

    #[test]
    fn anchor_policy_round_trips_through_strings() {
        for policy in [AnchorPolicy::UniformRandom, AnchorPolicy::HullMixed] {
            assert_eq!(policy.to_string().parse::<AnchorPolicy>().unwrap(), policy);
        }
        assert!("nonsense".parse::<AnchorPolicy>().is_err());
    }

    #[test]
    fn mark_anchors_rejects_unknown_ids() {
        let net = gen_lattice(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(
            mark_anchors(&net, &[99]).unwrap_err(),
            GenerateError::UnknownAnchorId(99)
        );
    }
}
