//! Maximin edges and affinities via maximum-spanning-forest machinery.
//!
//! The maximin affinity of a pixel pair is the weight of the bottleneck edge
//! on the path between them that maximizes its minimal edge weight. Any path
//! in a maximum spanning tree is such a path, so a single descending-order
//! Kruskal run answers both the single-pair query (stop at the edge whose
//! union joins the pair) and, kept in full, all-pairs queries.
//!
//! Weight comparisons are exact: a tie means bit-identical weights, and tie
//! order within one weight class is drawn from the caller's rng so runs are
//! replayable per seed.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{MalisError, Result};
use crate::graph::{edge_list, DisjointSet, EdgeList};
use crate::imagery::AffinityGraph;

/// The bottleneck edge between a queried pixel pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximinResult {
    pub u: usize,
    pub v: usize,
    /// Weight of the (u, v) edge; equals the pair's maximin affinity.
    pub affinity: f32,
    /// Index into the graph's edge enumeration.
    pub edge_id: usize,
}

fn check_pair(node_count: usize, i: usize, j: usize) -> Result<()> {
    if i == j {
        return Err(MalisError::Argument(format!(
            "maximin pairs are unordered distinct, got ({i}, {i})"
        )));
    }
    if i >= node_count || j >= node_count {
        return Err(MalisError::Argument(format!(
            "pair ({i}, {j}) out of range for {node_count} nodes"
        )));
    }
    Ok(())
}

/// Edge indices ordered by descending weight; edges with bit-identical
/// weights are shuffled within their weight class.
fn processing_order(edges: &EdgeList, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..edges.edges.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        edges.edges[b]
            .weight
            .total_cmp(&edges.edges[a].weight)
            .then(a.cmp(&b))
    });
    let mut start = 0;
    while start < order.len() {
        let w = edges.edges[order[start]].weight;
        let mut end = start + 1;
        while end < order.len() && edges.edges[order[end]].weight == w {
            end += 1;
        }
        order[start..end].shuffle(rng);
        start = end;
    }
    order
}

/// Single-pair maximin query: descending Kruskal, stopping at the first edge
/// whose union merges the components of `i` and `j`. That edge is the maximin
/// edge and its weight the maximin affinity.
pub fn maximin_query(
    edges: &EdgeList,
    i: usize,
    j: usize,
    rng: &mut impl Rng,
) -> Result<MaximinResult> {
    check_pair(edges.node_count, i, j)?;
    let order = processing_order(edges, rng);
    let mut sets = DisjointSet::new(edges.node_count);
    for idx in order {
        let e = edges.edges[idx];
        if sets.union(e.u, e.v) && sets.same(i, j) {
            return Ok(MaximinResult {
                u: e.u,
                v: e.v,
                affinity: e.weight,
                edge_id: idx,
            });
        }
    }
    Err(MalisError::NoPath { a: i, b: j })
}

/// Grid-graph convenience wrapper; edge ids refer to the canonical grid edge
/// enumeration.
pub fn maximin_query_grid(
    g: &AffinityGraph,
    i: usize,
    j: usize,
    rng: &mut impl Rng,
) -> Result<MaximinResult> {
    maximin_query(&edge_list(g), i, j, rng)
}

/// A maximum spanning forest stored as parent links with per-link weights.
///
/// For any pair in the same tree, the minimum link weight on the unique
/// forest path equals the pair's maximin affinity.
#[derive(Debug, Clone)]
pub struct MaximinForest {
    node_count: usize,
    parent: Vec<usize>,
    depth: Vec<u32>,
    root: Vec<usize>,
    // link from node to its parent; unused at roots
    link_weight: Vec<f32>,
    link_edge_id: Vec<usize>,
    link_u: Vec<usize>,
    link_v: Vec<usize>,
    // accepted edges, for threshold sweeps
    links: Vec<(usize, usize, f32)>,
}

/// Full descending-order Kruskal over all edges; ties shuffled by `rng`.
pub fn build_maximin_forest(edges: &EdgeList, rng: &mut impl Rng) -> MaximinForest {
    let n = edges.node_count;
    let order = processing_order(edges, rng);
    let mut sets = DisjointSet::new(n);
    let mut adjacency: Vec<Vec<(usize, f32, usize)>> = vec![Vec::new(); n];
    let mut links = Vec::with_capacity(n.saturating_sub(1));
    let mut accepted_edge = Vec::with_capacity(n.saturating_sub(1));
    for idx in order {
        let e = edges.edges[idx];
        if sets.union(e.u, e.v) {
            adjacency[e.u].push((e.v, e.weight, idx));
            adjacency[e.v].push((e.u, e.weight, idx));
            links.push((e.u, e.v, e.weight));
            accepted_edge.push(idx);
        }
    }

    // orient each tree via BFS from its smallest-index node
    let mut parent = (0..n).collect::<Vec<_>>();
    let mut depth = vec![0u32; n];
    let mut root = vec![usize::MAX; n];
    let mut link_weight = vec![f32::NAN; n];
    let mut link_edge_id = vec![usize::MAX; n];
    let mut link_u = vec![usize::MAX; n];
    let mut link_v = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        if root[start] != usize::MAX {
            continue;
        }
        root[start] = start;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            for &(next, weight, edge_id) in &adjacency[node] {
                if root[next] != usize::MAX {
                    continue;
                }
                root[next] = start;
                parent[next] = node;
                depth[next] = depth[node] + 1;
                link_weight[next] = weight;
                link_edge_id[next] = edge_id;
                let e = edges.edges[edge_id];
                link_u[next] = e.u;
                link_v[next] = e.v;
                queue.push_back(next);
            }
        }
    }

    MaximinForest {
        node_count: n,
        parent,
        depth,
        root,
        link_weight,
        link_edge_id,
        link_u,
        link_v,
        links,
    }
}

pub fn build_maximin_forest_grid(g: &AffinityGraph, rng: &mut impl Rng) -> MaximinForest {
    build_maximin_forest(&edge_list(g), rng)
}

impl MaximinForest {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of links; equals nodes minus trees.
    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn tree_count(&self) -> usize {
        self.node_count - self.links.len()
    }

    /// Minimum-weight link on the unique forest path between `i` and `j`.
    pub fn maximin(&self, i: usize, j: usize) -> Result<MaximinResult> {
        check_pair(self.node_count, i, j)?;
        if self.root[i] != self.root[j] {
            return Err(MalisError::NoPath { a: i, b: j });
        }
        let mut best: Option<MaximinResult> = None;
        let consider = |forest: &Self, node: usize, best: &mut Option<MaximinResult>| {
            let w = forest.link_weight[node];
            if best.map_or(true, |b| w < b.affinity) {
                *best = Some(MaximinResult {
                    u: forest.link_u[node],
                    v: forest.link_v[node],
                    affinity: w,
                    edge_id: forest.link_edge_id[node],
                });
            }
        };
        let (mut a, mut b) = (i, j);
        while self.depth[a] > self.depth[b] {
            consider(self, a, &mut best);
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            consider(self, b, &mut best);
            b = self.parent[b];
        }
        while a != b {
            consider(self, a, &mut best);
            consider(self, b, &mut best);
            a = self.parent[a];
            b = self.parent[b];
        }
        Ok(best.expect("distinct nodes in one tree share at least one link"))
    }

    /// Pair-connectivity oracle at a threshold: a pair is connected iff its
    /// maximin affinity is >= theta (the step function with H(0) = 1).
    /// Computed in aggregate from component sizes, never per pair.
    pub fn connectivity_at(&self, theta: f32) -> Result<PairConnectivity> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(MalisError::Argument(format!(
                "threshold {theta} outside [0,1]"
            )));
        }
        let mut sets = DisjointSet::new(self.node_count);
        for &(u, v, w) in &self.links {
            if w >= theta {
                sets.union(u, v);
            }
        }
        let mut component = vec![usize::MAX; self.node_count];
        let mut next = 0usize;
        let mut root_component = vec![usize::MAX; self.node_count];
        for node in 0..self.node_count {
            let r = sets.find(node);
            if root_component[r] == usize::MAX {
                root_component[r] = next;
                next += 1;
            }
            component[node] = root_component[r];
        }
        Ok(PairConnectivity { component })
    }

    /// Dense |V| x |V| maximin affinity matrix (debug/testing aid; the sweep
    /// paths use aggregate counts instead). Unreachable pairs and the
    /// diagonal hold NaN.
    pub fn dense_affinities(&self) -> Vec<f32> {
        let n = self.node_count;
        let mut adjacency: Vec<Vec<(usize, f32)>> = vec![Vec::new(); n];
        for node in 0..n {
            if self.parent[node] != node {
                adjacency[node].push((self.parent[node], self.link_weight[node]));
                adjacency[self.parent[node]].push((node, self.link_weight[node]));
            }
        }
        let mut matrix = vec![f32::NAN; n * n];
        let mut stack = Vec::new();
        for source in 0..n {
            stack.push((source, f32::INFINITY));
            let mut seen = vec![false; n];
            seen[source] = true;
            while let Some((node, bottleneck)) = stack.pop() {
                for &(next, weight) in &adjacency[node] {
                    if !seen[next] {
                        seen[next] = true;
                        let b = bottleneck.min(weight);
                        matrix[source * n + next] = b;
                        stack.push((next, b));
                    }
                }
            }
        }
        matrix
    }
}

/// Component ids per node at one threshold; pairs are connected iff they
/// share a component.
#[derive(Debug, Clone)]
pub struct PairConnectivity {
    component: Vec<usize>,
}

impl PairConnectivity {
    pub fn node_count(&self) -> usize {
        self.component.len()
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.component[i] == self.component[j]
    }

    pub fn component_ids(&self) -> &[usize] {
        &self.component
    }

    pub fn component_count(&self) -> usize {
        self.component.iter().copied().max().map_or(0, |m| m + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn chain(weights: &[f32]) -> EdgeList {
        EdgeList::new(
            weights.len() + 1,
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| Edge { u: i, v: i + 1, weight: w })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn triangle_prefers_indirect_path() {
        let edges = EdgeList::new(
            3,
            vec![
                Edge { u: 0, v: 1, weight: 0.9 },
                Edge { u: 1, v: 2, weight: 0.8 },
                Edge { u: 0, v: 2, weight: 0.3 },
            ],
        )
        .unwrap();
        let res = maximin_query(&edges, 0, 2, &mut rng(1)).unwrap();
        assert_eq!(res.affinity, 0.8);
        assert_eq!((res.u, res.v), (1, 2));
    }

    #[test]
    fn chain_bottleneck() {
        let edges = chain(&[0.9, 0.2, 0.8]);
        let res = maximin_query(&edges, 0, 3, &mut rng(2)).unwrap();
        assert_eq!(res.affinity, 0.2);
        assert_eq!((res.u, res.v), (1, 2));
        assert_eq!(res.edge_id, 1);
    }

    #[test]
    fn global_maximum_direct_edge_wins() {
        let edges = EdgeList::new(
            4,
            vec![
                Edge { u: 0, v: 1, weight: 0.95 },
                Edge { u: 1, v: 2, weight: 0.9 },
                Edge { u: 2, v: 3, weight: 0.9 },
                Edge { u: 0, v: 3, weight: 0.5 },
            ],
        )
        .unwrap();
        let res = maximin_query(&edges, 0, 1, &mut rng(3)).unwrap();
        assert_eq!((res.u, res.v, res.affinity), (0, 1, 0.95));
    }

    #[test]
    fn query_rejects_equal_pair_and_reports_no_path() {
        let edges = chain(&[0.5]);
        assert!(matches!(
            maximin_query(&edges, 1, 1, &mut rng(0)),
            Err(MalisError::Argument(_))
        ));
        let disconnected = EdgeList::new(4, vec![Edge { u: 0, v: 1, weight: 0.5 }]).unwrap();
        assert!(matches!(
            maximin_query(&disconnected, 0, 3, &mut rng(0)),
            Err(MalisError::NoPath { a: 0, b: 3 })
        ));
    }

    #[test]
    fn forest_on_connected_grid_has_v_minus_one_links() {
        let g = AffinityGraph::uniform(vec![3, 4], 0.7).unwrap();
        let forest = build_maximin_forest_grid(&g, &mut rng(4));
        assert_eq!(forest.link_count(), 11);
        assert_eq!(forest.tree_count(), 1);
    }

    #[test]
    fn forest_counts_trees_of_disconnected_edge_list() {
        let edges = EdgeList::new(
            5,
            vec![
                Edge { u: 0, v: 1, weight: 0.5 },
                Edge { u: 3, v: 4, weight: 0.5 },
            ],
        )
        .unwrap();
        let forest = build_maximin_forest(&edges, &mut rng(5));
        assert_eq!(forest.tree_count(), 3); // {0,1}, {2}, {3,4}
    }

    #[test]
    fn forest_chain_path_minimum() {
        let edges = chain(&[0.9, 0.2, 0.8]);
        let forest = build_maximin_forest(&edges, &mut rng(6));
        let res = forest.maximin(0, 3).unwrap();
        assert_eq!(res.affinity, 0.2);
        assert_eq!((res.u, res.v), (1, 2));
    }

    #[test]
    fn forest_parent_link_is_the_answer_for_adjacent_nodes() {
        let edges = chain(&[0.9, 0.2, 0.8]);
        let forest = build_maximin_forest(&edges, &mut rng(7));
        let res = forest.maximin(1, 2).unwrap();
        assert_eq!((res.u, res.v, res.affinity), (1, 2, 0.2));
    }

    #[test]
    fn forest_rejects_identical_pair() {
        let edges = chain(&[0.9]);
        let forest = build_maximin_forest(&edges, &mut rng(8));
        assert!(matches!(
            forest.maximin(1, 1),
            Err(MalisError::Argument(_))
        ));
    }

    #[test]
    fn forest_no_path_across_trees() {
        let edges = EdgeList::new(4, vec![Edge { u: 0, v: 1, weight: 0.9 }]).unwrap();
        let forest = build_maximin_forest(&edges, &mut rng(9));
        assert!(matches!(
            forest.maximin(0, 3),
            Err(MalisError::NoPath { .. })
        ));
    }

    #[test]
    fn connectivity_extremes() {
        let edges = chain(&[0.9, 0.2, 0.8]);
        let forest = build_maximin_forest(&edges, &mut rng(10));
        let all = forest.connectivity_at(0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!(all.connected(i, j));
            }
        }
        // just above the global max weight: nothing connected
        let none = forest.connectivity_at(0.91).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(!none.connected(i, j));
            }
        }
    }

    #[test]
    fn connectivity_chain_at_half() {
        let edges = chain(&[0.9, 0.2, 0.8]);
        let forest = build_maximin_forest(&edges, &mut rng(11));
        let conn = forest.connectivity_at(0.5).unwrap();
        let mut connected_pairs = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                if conn.connected(i, j) {
                    connected_pairs.push((i, j));
                }
            }
        }
        assert_eq!(connected_pairs, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn threshold_equal_to_weight_counts_as_connected() {
        let edges = chain(&[0.5]);
        let forest = build_maximin_forest(&edges, &mut rng(12));
        assert!(forest.connectivity_at(0.5).unwrap().connected(0, 1));
    }

    #[test]
    fn dense_matrix_matches_pair_queries() {
        let edges = chain(&[0.9, 0.2, 0.8]);
        let forest = build_maximin_forest(&edges, &mut rng(13));
        let dense = forest.dense_affinities();
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    assert!(dense[i * 4 + j].is_nan());
                } else {
                    assert_eq!(dense[i * 4 + j], forest.maximin(i, j).unwrap().affinity);
                }
            }
        }
    }
}
