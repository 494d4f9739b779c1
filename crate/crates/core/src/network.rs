//! Sensor network graph: nodes, range-derived edges, neighbor simplex-set
//! enumeration, and pruning of nodes that cannot be localized.
//!
//! A node's "simplex sets" are the `(dimension + 1)`-element subsets of its
//! neighbors that are mutually adjacent, so that together with the owner
//! every pairwise distance inside the subset is measured. Those subsets are
//! the raw material for barycentric coordinate rows.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry;

#[derive(Debug, Error, PartialEq)]
pub enum NetworkError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("node ids must be positive")]
    ZeroNodeId,
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("node {0} is not in the network")]
    UnknownNode(u32),
    #[error("node {id}: coordinates have dimension {got}, network has dimension {expected}")]
    NodeDimension { id: u32, expected: usize, got: usize },
    #[error("node {0}: sensing range must be positive and finite, got {1}")]
    BadRange(u32, f64),
    #[error("anchor {0} has no coordinates")]
    AnchorWithoutCoords(u32),
    #[error("node {0} has no coordinates")]
    MissingCoords(u32),
    #[error("edge ({0}, {1}) references a missing node")]
    EdgeEndpointMissing(u32, u32),
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(u32, u32),
    #[error("edge ({0}, {1}) has non-positive or non-finite length {2}")]
    BadEdgeLength(u32, u32, f64),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),
    #[error("subset cap must be at least 1")]
    ZeroCap,
}

/// One sensor. Anchors know their position; for unknown nodes `coords` is
/// the ground truth when available (generated networks) and may be absent
/// in networks loaded from measurements alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: u32,
    pub is_anchor: bool,
    pub range: f64,
    pub coords: Option<Vec<f64>>,
}

/// Undirected range graph over a set of nodes, with a Euclidean distance
/// attached to every edge. Node and neighbor lists are kept sorted by id so
/// that every traversal order in the crate is deterministic.
#[derive(Debug, Clone)]
pub struct SensorNetwork {
    dimension: usize,
    nodes: Vec<Node>,
    position: BTreeMap<u32, usize>,
    adjacency: Vec<Vec<u32>>,
    edges: BTreeMap<(u32, u32), f64>,
}

impl SensorNetwork {
    /// Build a network from explicit nodes and measured edge lengths.
    pub fn from_parts(
        dimension: usize,
        nodes: Vec<Node>,
        edges: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self, NetworkError> {
        if dimension == 0 {
            return Err(NetworkError::ZeroDimension);
        }
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        let mut position = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if node.id == 0 {
                return Err(NetworkError::ZeroNodeId);
            }
            if position.insert(node.id, i).is_some() {
                return Err(NetworkError::DuplicateNode(node.id));
            }
            if !(node.range > 0.0 && node.range.is_finite()) {
                return Err(NetworkError::BadRange(node.id, node.range));
            }
            if let Some(c) = &node.coords {
                if c.len() != dimension {
                    return Err(NetworkError::NodeDimension {
                        id: node.id,
                        expected: dimension,
                        got: c.len(),
                    });
                }
            } else if node.is_anchor {
                return Err(NetworkError::AnchorWithoutCoords(node.id));
            }
        }
        let mut canonical = BTreeMap::new();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (a, b, len) in edges {
            if a == b {
                return Err(NetworkError::SelfLoop(a, b));
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(NetworkError::BadEdgeLength(a, b, len));
            }
            let key = (a.min(b), a.max(b));
            let (&pa, &pb) = match (position.get(&a), position.get(&b)) {
                (Some(pa), Some(pb)) => (pa, pb),
                _ => return Err(NetworkError::EdgeEndpointMissing(a, b)),
            };
            if canonical.insert(key, len).is_some() {
                return Err(NetworkError::DuplicateEdge(key.0, key.1));
            }
            adjacency[pa].push(b);
            adjacency[pb].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            dimension,
            nodes,
            position,
            adjacency,
            edges: canonical,
        })
    }

    /// Build a network from full coordinates, deriving the edges from the
    /// sensing ranges: nodes `i` and `j` are connected exactly when their
    /// distance is at most `min(range_i, range_j)`.
    pub fn from_coordinates(dimension: usize, nodes: Vec<Node>) -> Result<Self, NetworkError> {
        for node in &nodes {
            if node.coords.is_none() {
                return Err(NetworkError::MissingCoords(node.id));
            }
        }
        let mut sorted = nodes;
        sorted.sort_by_key(|n| n.id);
        let mut edges = Vec::new();
        for i in 0..sorted.len() {
            for j in (i + 1)..sorted.len() {
                let (a, b) = (&sorted[i], &sorted[j]);
                let sq = geometry::squared_distance(
                    a.coords.as_ref().unwrap(),
                    b.coords.as_ref().unwrap(),
                )
                .map_err(|_| NetworkError::NodeDimension {
                    id: b.id,
                    expected: a.coords.as_ref().unwrap().len(),
                    got: b.coords.as_ref().unwrap().len(),
                })?;
                let dist = sq.sqrt();
                if dist > 0.0 && dist <= a.range.min(b.range) {
                    edges.push((a.id, b.id, dist));
                }
            }
        }
        Self::from_parts(dimension, sorted, edges)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> Option<&Node> {
        self.position.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: u32) -> bool {
        self.position.contains_key(&id)
    }

    pub fn anchor_ids(&self) -> Vec<u32> {
        self.nodes
            .iter()
            .filter(|n| n.is_anchor)
            .map(|n| n.id)
            .collect()
    }

    pub fn unknown_ids(&self) -> Vec<u32> {
        self.nodes
            .iter()
            .filter(|n| !n.is_anchor)
            .map(|n| n.id)
            .collect()
    }

    pub fn anchor_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_anchor).count()
    }

    /// Neighbor ids of `id`, sorted ascending.
    pub fn neighbors(&self, id: u32) -> Result<&[u32], NetworkError> {
        self.position
            .get(&id)
            .map(|&i| self.adjacency[i].as_slice())
            .ok_or(NetworkError::UnknownNode(id))
    }

    pub fn degree(&self, id: u32) -> Result<usize, NetworkError> {
        self.neighbors(id).map(|n| n.len())
    }

    /// Measured distance between two adjacent nodes, `None` if no edge.
    pub fn distance(&self, a: u32, b: u32) -> Option<f64> {
        self.edges.get(&(a.min(b), a.max(b))).copied()
    }

    /// Squared measured distance between two adjacent nodes.
    pub fn squared(&self, a: u32, b: u32) -> Option<f64> {
        self.distance(a, b).map(|d| d * d)
    }

    /// Edges as `(low id, high id, length)`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &len)| (a, b, len))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Subnetwork induced by `keep`, with edges restricted to kept nodes.
    fn induced(&self, keep: &BTreeSet<u32>) -> Result<Self, NetworkError> {
        let nodes = self
            .nodes
            .iter()
            .filter(|n| keep.contains(&n.id))
            .cloned()
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|((a, b), _)| keep.contains(a) && keep.contains(b))
            .map(|(&(a, b), &len)| (a, b, len));
        Self::from_parts(self.dimension, nodes, edges)
    }
}

/// Bound on how many simplex sets are collected per neighbor branch during
/// enumeration. `PerBranch(k)` sorts before `Unlimited`, so grids ordered by
/// cap list the cheapest setting first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SubsetCap {
    PerBranch(usize),
    Unlimited,
}

impl SubsetCap {
    /// Enumerate the simplex sets of `l` under this cap. Under `Unlimited`
    /// this is the full enumeration (degenerate subsets included); under
    /// `PerBranch` only non-degenerate subsets are returned.
    pub fn enumerate(
        self,
        net: &SensorNetwork,
        l: u32,
    ) -> Result<Vec<SimplexIndexSet>, NetworkError> {
        match self {
            SubsetCap::Unlimited => enumerate_simplex_sets(net, l),
            SubsetCap::PerBranch(cap) => enumerate_simplex_sets_capped(net, l, cap),
        }
    }
}

impl fmt::Display for SubsetCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetCap::PerBranch(k) => write!(f, "{k}"),
            SubsetCap::Unlimited => f.write_str("unlimited"),
        }
    }
}

impl FromStr for SubsetCap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("unlimited") {
            return Ok(SubsetCap::Unlimited);
        }
        match s.parse::<usize>() {
            Ok(0) => Err("subset cap must be at least 1".to_string()),
            Ok(k) => Ok(SubsetCap::PerBranch(k)),
            Err(_) => Err(format!(
                "invalid subset cap {s:?}, expected a positive integer or \"unlimited\""
            )),
        }
    }
}

/// A subset of a node's neighbors that spans a measured simplex: the members
/// are mutually adjacent, each is adjacent to the owner, and there are
/// exactly `dimension + 1` of them. Members are sorted ascending by id and
/// never include the owner.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SimplexIndexSet {
    pub owner: u32,
    pub members: Vec<u32>,
}

/// Local view of one node's neighborhood: sorted neighbor ids, bitset
/// adjacency between neighbors, and squared distances (member-member and
/// member-owner). Built once per node and shared by enumeration, coordinate
/// computation, and pruning checks.
pub(crate) struct Neighborhood {
    pub owner: u32,
    pub ids: Vec<u32>,
    words: usize,
    adj: Vec<u64>,
    /// Row-major `deg x deg`; entries for non-adjacent member pairs are NaN
    /// and are never read, because subsets are cliques.
    pub sq: Vec<f64>,
    pub owner_sq: Vec<f64>,
}

impl Neighborhood {
    pub fn build(net: &SensorNetwork, owner: u32) -> Result<Self, NetworkError> {
        Self::build_filtered(net, owner, |_| true)
    }

    /// Like `build`, but keeps only neighbors accepted by `keep`. Used while
    /// pruning, where removed nodes must stop counting as neighbors.
    pub fn build_filtered(
        net: &SensorNetwork,
        owner: u32,
        keep: impl Fn(u32) -> bool,
    ) -> Result<Self, NetworkError> {
        let ids: Vec<u32> = net
            .neighbors(owner)?
            .iter()
            .copied()
            .filter(|&id| keep(id))
            .collect();
        let deg = ids.len();
        let words = deg.div_ceil(64);
        let mut adj = vec![0u64; deg * words];
        let mut sq = vec![f64::NAN; deg * deg];
        let mut owner_sq = vec![0.0; deg];
        for (i, &a) in ids.iter().enumerate() {
            owner_sq[i] = net
                .squared(owner, a)
                .expect("neighbor implies measured edge");
            for (j, &b) in ids.iter().enumerate().skip(i + 1) {
                if let Some(d) = net.squared(a, b) {
                    sq[i * deg + j] = d;
                    sq[j * deg + i] = d;
                    adj[i * words + j / 64] |= 1 << (j % 64);
                    adj[j * words + i / 64] |= 1 << (i % 64);
                }
            }
            sq[i * deg + i] = 0.0;
        }
        Ok(Self {
            owner,
            ids,
            words,
            adj,
            sq,
            owner_sq,
        })
    }

    pub fn degree(&self) -> usize {
        self.ids.len()
    }

    fn adj_row(&self, i: usize) -> &[u64] {
        &self.adj[i * self.words..(i + 1) * self.words]
    }

    /// Squared distance between local members `i` and `j`.
    pub fn member_sq(&self, i: usize, j: usize) -> f64 {
        self.sq[i * self.degree() + j]
    }

    /// Cayley-Menger determinant of the member subset given by local
    /// indices, plus the largest squared distance inside the subset.
    pub fn subset_det(&self, idx: &[usize], buf: &mut Vec<f64>) -> (f64, f64) {
        let mut max_sq = 0.0f64;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                max_sq = max_sq.max(self.member_sq(i, j));
            }
        }
        let det = geometry::bordered_det_with(buf, idx.len(), |a, b| {
            self.member_sq(idx[a], idx[b])
        });
        (det, max_sq)
    }

    /// Whether the subset spans a simplex of usable (non-degenerate) volume.
    pub fn subset_is_feasible(&self, idx: &[usize], buf: &mut Vec<f64>) -> bool {
        let (det, max_sq) = self.subset_det(idx, buf);
        !geometry::is_degenerate(det, max_sq, idx.len())
    }
}

/// Depth-first clique expansion. `masks` is scratch of `size * words` words;
/// the leading `words` hold the candidate set for the current depth
/// (local indices greater than the last chosen member and adjacent to all
/// chosen members). Visits cliques in lexicographic order of local indices.
fn clique_dfs<F>(
    neigh: &Neighborhood,
    current: &mut Vec<usize>,
    masks: &mut [u64],
    size: usize,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    if current.len() == size {
        return f(current);
    }
    let words = neigh.words;
    let (cand, rest) = masks.split_at_mut(words);
    for w in 0..words {
        let mut bits = cand[w];
        while bits != 0 {
            let c = w * 64 + bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if current.len() + 1 < size {
                let row = neigh.adj_row(c);
                let start = c + 1;
                let (sw, sb) = (start / 64, start % 64);
                for v in 0..words {
                    let mut x = cand[v] & row[v];
                    if v < sw {
                        x = 0;
                    } else if v == sw {
                        x &= !0u64 << sb;
                    }
                    rest[v] = x;
                }
            }
            current.push(c);
            clique_dfs(neigh, current, rest, size, f)?;
            current.pop();
        }
    }
    ControlFlow::Continue(())
}

/// Visit every clique of `size` mutually adjacent members in lexicographic
/// order of (sorted) local indices. Stops early if `f` breaks.
pub(crate) fn for_each_clique<F>(neigh: &Neighborhood, size: usize, f: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let deg = neigh.degree();
    if size == 0 || deg < size {
        return ControlFlow::Continue(());
    }
    let words = neigh.words;
    let mut masks = vec![0u64; size * words];
    for c in 0..deg {
        masks[c / 64] |= 1 << (c % 64);
    }
    let mut current = Vec::with_capacity(size);
    clique_dfs(neigh, &mut current, &mut masks, size, f)
}

/// Visit every clique of `size` members that contains local member `b`, in
/// lexicographic order of the members other than `b`.
fn for_each_clique_containing<F>(
    neigh: &Neighborhood,
    b: usize,
    size: usize,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    debug_assert!(size >= 1);
    let words = neigh.words;
    let mut masks = vec![0u64; size * words];
    masks[..words].copy_from_slice(neigh.adj_row(b));
    let mut current = Vec::with_capacity(size - 1);
    let mut sorted = Vec::with_capacity(size);
    clique_dfs(neigh, &mut current, &mut masks, size - 1, &mut |others| {
        sorted.clear();
        sorted.extend_from_slice(others);
        sorted.push(b);
        sorted.sort_unstable();
        f(&sorted)
    })
}

fn to_index_set(neigh: &Neighborhood, idx: &[usize]) -> SimplexIndexSet {
    SimplexIndexSet {
        owner: neigh.owner,
        members: idx.iter().map(|&i| neigh.ids[i]).collect(),
    }
}

/// All simplex sets of node `l`: every `(dimension + 1)`-subset of its
/// neighbors whose members are mutually adjacent, in lexicographic order of
/// member ids. Degenerate subsets are included; feasibility is the caller's
/// concern.
pub fn enumerate_simplex_sets(
    net: &SensorNetwork,
    l: u32,
) -> Result<Vec<SimplexIndexSet>, NetworkError> {
    let neigh = Neighborhood::build(net, l)?;
    let mut out = Vec::new();
    let _ = for_each_clique(&neigh, net.dimension() + 1, &mut |idx| {
        out.push(to_index_set(&neigh, idx));
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// Capped enumeration: one pass over the neighbors of `l` in ascending id
/// order, and for each such branch a depth-first search that stops after
/// `cap` non-degenerate subsets containing that neighbor. Degenerate subsets
/// do not count toward the cap and are never returned. The deduplicated,
/// sorted union over branches is returned; it is always a subset of the full
/// enumeration, and with `cap = 1` every neighbor that appears in at least
/// one non-degenerate subset is covered by some returned subset.
pub fn enumerate_simplex_sets_capped(
    net: &SensorNetwork,
    l: u32,
    cap: usize,
) -> Result<Vec<SimplexIndexSet>, NetworkError> {
    if cap == 0 {
        return Err(NetworkError::ZeroCap);
    }
    let neigh = Neighborhood::build(net, l)?;
    let size = net.dimension() + 1;
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut buf = Vec::new();
    for b in 0..neigh.degree() {
        let mut taken = 0usize;
        let _ = for_each_clique_containing(&neigh, b, size, &mut |idx| {
            if neigh.subset_is_feasible(idx, &mut buf) {
                found.insert(idx.to_vec());
                taken += 1;
                if taken >= cap {
                    return ControlFlow::Break(());
                }
            }
            ControlFlow::Continue(())
        });
    }
    Ok(found
        .into_iter()
        .map(|idx| to_index_set(&neigh, &idx))
        .collect())
}

fn has_feasible_subset(neigh: &Neighborhood, size: usize) -> bool {
    let mut buf = Vec::new();
    for_each_clique(neigh, size, &mut |idx| {
        if neigh.subset_is_feasible(idx, &mut buf) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .is_break()
}

/// Iteratively remove non-anchor nodes that cannot possibly be localized:
/// degree below `dimension + 1`, or no non-degenerate simplex set among the
/// surviving neighbors. Anchors are never removed. Runs to a fixed point;
/// returns the surviving subnetwork and the removed ids, sorted ascending.
pub fn prune_unlocalizable(
    net: &SensorNetwork,
) -> Result<(SensorNetwork, Vec<u32>), NetworkError> {
    let size = net.dimension() + 1;
    let mut alive: BTreeSet<u32> = net.nodes().iter().map(|n| n.id).collect();
    let mut removed = Vec::new();
    loop {
        let mut round = Vec::new();
        for node in net.nodes() {
            if node.is_anchor || !alive.contains(&node.id) {
                continue;
            }
            let deg_alive = net
                .neighbors(node.id)?
                .iter()
                .filter(|id| alive.contains(id))
                .count();
            if deg_alive < size {
                round.push(node.id);
                continue;
            }
            let neigh = Neighborhood::build_filtered(net, node.id, |id| alive.contains(&id))?;
            if !has_feasible_subset(&neigh, size) {
                round.push(node.id);
            }
        }
        if round.is_empty() {
            break;
        }
        for id in &round {
            alive.remove(id);
        }
        removed.extend(round);
    }
    removed.sort_unstable();
    Ok((net.induced(&alive)?, removed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u32, range: f64, coords: &[f64], anchor: bool) -> Node {
        Node {
            id,
            is_anchor: anchor,
            range,
            coords: Some(coords.to_vec()),
        }
    }

    /// Brute-force subset oracle: every combination checked for mutual
    /// adjacency directly against the edge list.
    fn oracle_simplex_sets(net: &SensorNetwork, l: u32) -> Vec<SimplexIndexSet> {
        let size = net.dimension() + 1;
        let nbrs = net.neighbors(l).unwrap().to_vec();
        let mut out = Vec::new();
        let mut pick = vec![0usize; size];
        fn rec(
            nbrs: &[u32],
            net: &SensorNetwork,
            l: u32,
            size: usize,
            start: usize,
            pick: &mut Vec<usize>,
            depth: usize,
            out: &mut Vec<SimplexIndexSet>,
        ) {
            if depth == size {
                let members: Vec<u32> = pick.iter().map(|&i| nbrs[i]).collect();
                let clique = members.iter().enumerate().all(|(a, &x)| {
                    members[a + 1..]
                        .iter()
                        .all(|&y| net.distance(x, y).is_some())
                });
                if clique {
                    out.push(SimplexIndexSet { owner: l, members });
                }
                return;
            }
            for i in start..nbrs.len() {
                pick[depth] = i;
                rec(nbrs, net, l, size, i + 1, pick, depth + 1, out);
            }
        }
        rec(&nbrs, net, l, size, 0, &mut pick, 0, &mut out);
        out
    }

    #[test]
    fn edge_rule_uses_smaller_range() {
        let net = SensorNetwork::from_coordinates(
            2,
            vec![
                node(1, 5.0, &[0.0, 0.0], true),
                node(2, 5.0, &[3.0, 4.0], false),
            ],
        )
        .unwrap();
        assert_eq!(net.distance(1, 2), Some(5.0));

        let net = SensorNetwork::from_coordinates(
            2,
            vec![
                node(1, 5.0, &[0.0, 0.0], true),
                node(2, 4.9, &[3.0, 4.0], false),
            ],
        )
        .unwrap();
        assert_eq!(net.distance(1, 2), None);
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn neighbors_sorted_and_symmetric() {
        let net = SensorNetwork::from_parts(
            2,
            vec![
                node(3, 1.0, &[0.0, 0.0], true),
                node(1, 1.0, &[0.0, 0.0], true),
                node(7, 1.0, &[0.0, 0.0], true),
            ],
            vec![(7, 1, 1.0), (3, 7, 2.0)],
        )
        .unwrap();
        assert_eq!(net.neighbors(7).unwrap(), &[1, 3]);
        assert_eq!(net.neighbors(1).unwrap(), &[7]);
        assert_eq!(net.distance(1, 7), net.distance(7, 1));
        assert!(matches!(
            net.neighbors(2),
            Err(NetworkError::UnknownNode(2))
        ));
    }

    #[test]
    fn from_parts_validation() {
        let dup = SensorNetwork::from_parts(
            2,
            vec![node(1, 1.0, &[0.0, 0.0], true), node(1, 1.0, &[1.0, 0.0], true)],
            vec![],
        );
        assert!(matches!(dup, Err(NetworkError::DuplicateNode(1))));

        let selfloop = SensorNetwork::from_parts(
            2,
            vec![node(1, 1.0, &[0.0, 0.0], true)],
            vec![(1, 1, 1.0)],
        );
        assert!(matches!(selfloop, Err(NetworkError::SelfLoop(1, 1))));

        let dup_edge = SensorNetwork::from_parts(
            2,
            vec![node(1, 1.0, &[0.0, 0.0], true), node(2, 1.0, &[1.0, 0.0], true)],
            vec![(1, 2, 1.0), (2, 1, 1.0)],
        );
        assert!(matches!(dup_edge, Err(NetworkError::DuplicateEdge(1, 2))));

        let missing = SensorNetwork::from_parts(
            2,
            vec![node(1, 1.0, &[0.0, 0.0], true)],
            vec![(1, 9, 1.0)],
        );
        assert!(matches!(
            missing,
            Err(NetworkError::EdgeEndpointMissing(1, 9))
        ));
    }

    /// Five nodes in convex position, full mutual visibility: owner 5 in the
    /// middle, every 3-subset of {1,2,3,4} is a simplex set.
    fn quad_net() -> SensorNetwork {
        SensorNetwork::from_coordinates(
            2,
            vec![
                node(1, 10.0, &[0.0, 0.0], true),
                node(2, 10.0, &[2.0, 0.0], true),
                node(3, 10.0, &[2.0, 2.0], true),
                node(4, 10.0, &[0.0, 2.0], true),
                node(5, 10.0, &[1.0, 1.0], false),
            ],
        )
        .unwrap()
    }

    #[test]
    fn enumeration_matches_bruteforce_oracle() {
        let net = quad_net();
        let got = enumerate_simplex_sets(&net, 5).unwrap();
        let want = oracle_simplex_sets(&net, 5);
        assert_eq!(got, want);
        assert_eq!(got.len(), 4); // C(4, 3)
        assert_eq!(got[0].members, vec![1, 2, 3]);
        assert_eq!(got[3].members, vec![2, 3, 4]);
    }

    #[test]
    fn enumeration_requires_mutual_adjacency() {
        // star: center 5 sees 1,2,3 but the outer nodes don't see each other
        let net = SensorNetwork::from_parts(
            2,
            vec![
                node(1, 1.0, &[0.0, 0.0], true),
                node(2, 1.0, &[2.0, 0.0], true),
                node(3, 1.0, &[0.0, 2.0], true),
                node(5, 1.0, &[1.0, 1.0], false),
            ],
            vec![(5, 1, 1.0), (5, 2, 1.0), (5, 3, 1.0)],
        )
        .unwrap();
        assert!(enumerate_simplex_sets(&net, 5).unwrap().is_empty());
    }

    #[test]
    fn enumeration_on_larger_random_graph_matches_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for case in 0..20 {
            let n = rng.random_range(6..18);
            let nodes: Vec<Node> = (1..=n)
                .map(|id| {
                    let c = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                    node(id, rng.random_range(1.5..4.0), &c, id <= 3)
                })
                .collect();
            let net = SensorNetwork::from_coordinates(2, nodes).unwrap();
            for id in 1..=n {
                assert_eq!(
                    enumerate_simplex_sets(&net, id).unwrap(),
                    oracle_simplex_sets(&net, id),
                    "case {case} node {id}"
                );
            }
        }
    }

    #[test]
    fn capped_enumeration_is_subset_and_monotone() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n = rng.random_range(8..16);
            let nodes: Vec<Node> = (1..=n)
                .map(|id| {
                    let c = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                    node(id, 3.0, &c, false)
                })
                .collect();
            let net = SensorNetwork::from_coordinates(2, nodes).unwrap();
            for id in 1..=n {
                let full: BTreeSet<_> =
                    enumerate_simplex_sets(&net, id).unwrap().into_iter().collect();
                let mut prev: BTreeSet<SimplexIndexSet> = BTreeSet::new();
                for cap in [1usize, 2, 5, usize::MAX] {
                    let capped = enumerate_simplex_sets_capped(&net, id, cap).unwrap();
                    // output is sorted and deduplicated
                    for pair in capped.windows(2) {
                        assert!(pair[0] < pair[1]);
                    }
                    let set: BTreeSet<_> = capped.into_iter().collect();
                    assert!(set.is_subset(&full));
                    assert!(prev.is_subset(&set), "cap growth must not lose subsets");
                    prev = set;
                }
            }
        }
    }

    #[test]
    fn capped_enumeration_covers_every_usable_neighbor_at_cap_one() {
        let net = quad_net();
        let capped = enumerate_simplex_sets_capped(&net, 5, 1).unwrap();
        let covered: BTreeSet<u32> =
            capped.iter().flat_map(|s| s.members.iter().copied()).collect();
        for &nb in net.neighbors(5).unwrap() {
            assert!(covered.contains(&nb), "neighbor {nb} uncovered");
        }
    }

    #[test]
    fn capped_enumeration_skips_degenerate_subsets() {
        // 1, 2, 3 are collinear; {1,2,3} is a clique but spans no area.
        let net = SensorNetwork::from_coordinates(
            2,
            vec![
                node(1, 10.0, &[0.0, 0.0], true),
                node(2, 10.0, &[1.0, 0.0], true),
                node(3, 10.0, &[2.0, 0.0], true),
                node(4, 10.0, &[1.0, 1.5], true),
                node(5, 10.0, &[1.0, 0.5], false),
            ],
        )
        .unwrap();
        let full = enumerate_simplex_sets(&net, 5).unwrap();
        assert_eq!(full.len(), 4);
        let capped = enumerate_simplex_sets_capped(&net, 5, usize::MAX).unwrap();
        assert_eq!(capped.len(), 3);
        assert!(capped.iter().all(|s| s.members != vec![1, 2, 3]));

        assert!(matches!(
            enumerate_simplex_sets_capped(&net, 5, 0),
            Err(NetworkError::ZeroCap)
        ));
    }

    #[test]
    fn subset_cap_parses_and_orders() {
        assert_eq!("unlimited".parse::<SubsetCap>(), Ok(SubsetCap::Unlimited));
        assert_eq!("50".parse::<SubsetCap>(), Ok(SubsetCap::PerBranch(50)));
        assert!("0".parse::<SubsetCap>().is_err());
        assert!("-1".parse::<SubsetCap>().is_err());
        assert!(SubsetCap::PerBranch(1000) < SubsetCap::Unlimited);
        assert_eq!(SubsetCap::PerBranch(7).to_string(), "7");
        assert_eq!(SubsetCap::Unlimited.to_string(), "unlimited");
    }

    #[test]
    fn prune_removes_low_degree_and_cascades() {
        // chain hanging off a solid quad: 6 only sees 5, 5 sees quad + 6.
        let mut nodes = vec![
            node(1, 10.0, &[0.0, 0.0], true),
            node(2, 10.0, &[2.0, 0.0], true),
            node(3, 10.0, &[2.0, 2.0], true),
            node(4, 10.0, &[0.0, 2.0], true),
            node(5, 10.0, &[1.0, 1.0], false),
        ];
        nodes.push(Node {
            id: 6,
            is_anchor: false,
            range: 10.0,
            coords: Some(vec![20.0, 20.0]),
        });
        let mut edges: Vec<(u32, u32, f64)> = Vec::new();
        for i in 1..=4u32 {
            for j in (i + 1)..=5u32 {
                edges.push((i, j, 1.0));
            }
        }
        edges.push((5, 6, 1.0));
        // distances here are placeholders; build from parts to control topology
        let net = SensorNetwork::from_parts(2, nodes, edges).unwrap();
        let (pruned, removed) = prune_unlocalizable(&net).unwrap();
        assert_eq!(removed, vec![6]);
        assert!(pruned.contains(5));
        assert_eq!(pruned.node_count(), 5);
    }

    #[test]
    fn prune_removes_nodes_with_only_degenerate_subsets() {
        // node 5's only simplex set {1,2,3} is collinear
        let net = SensorNetwork::from_parts(
            2,
            vec![
                node(1, 10.0, &[0.0, 0.0], true),
                node(2, 10.0, &[1.0, 0.0], true),
                node(3, 10.0, &[2.0, 0.0], true),
                node(5, 10.0, &[1.0, 0.5], false),
            ],
            vec![
                (1, 2, 1.0),
                (2, 3, 1.0),
                (1, 3, 2.0),
                (5, 1, 1.0),
                (5, 2, 0.5),
                (5, 3, 1.0),
            ],
        )
        .unwrap();
        let (pruned, removed) = prune_unlocalizable(&net).unwrap();
        assert_eq!(removed, vec![5]);
        assert_eq!(pruned.node_count(), 3);
    }

    #[test]
    fn prune_never_removes_anchors() {
        let net = SensorNetwork::from_parts(
            2,
            vec![node(1, 1.0, &[0.0, 0.0], true), node(2, 1.0, &[5.0, 5.0], true)],
            vec![],
        )
        .unwrap();
        let (pruned, removed) = prune_unlocalizable(&net).unwrap();
        assert!(removed.is_empty());
        assert_eq!(pruned.node_count(), 2);
    }

    #[test]
    fn prune_is_idempotent_on_random_networks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..15 {
            let n = rng.random_range(8..25);
            let nodes: Vec<Node> = (1..=n)
                .map(|id| {
                    let c = [rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
                    node(id, 2.5, &c, id <= 3)
                })
                .collect();
            let net = SensorNetwork::from_coordinates(2, nodes).unwrap();
            let (once, removed_once) = prune_unlocalizable(&net).unwrap();
            let (twice, removed_twice) = prune_unlocalizable(&once).unwrap();
            assert!(removed_twice.is_empty());
            assert_eq!(once.node_count(), twice.node_count());
            // every surviving unknown still has a feasible subset
            for id in once.unknown_ids() {
                let capped = enumerate_simplex_sets_capped(&once, id, 1).unwrap();
                assert!(!capped.is_empty(), "unknown {id} survived without subsets");
            }
            let _ = removed_once;
        }
    }
}
