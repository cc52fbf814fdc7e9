//! Nearest-neighbor affinity graphs: ground-truth construction, thresholding,
//! and partitioning into segments via union-find connected components.

use crate::error::{MalisError, Result};
use crate::imagery::{strides, AffinityGraph, Segmentation};

/// A weighted undirected edge between two node indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f32,
}

/// Explicit edge list over `node_count` nodes. Grid graphs convert to this
/// form via [`edge_list`]; maximin queries accept arbitrary weighted graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeList {
    pub node_count: usize,
    pub edges: Vec<Edge>,
}

impl EdgeList {
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self> {
        for (i, e) in edges.iter().enumerate() {
            if e.u == e.v {
                return Err(MalisError::Argument(format!(
                    "edge {i} is a self-loop on node {}",
                    e.u
                )));
            }
            if e.u >= node_count || e.v >= node_count {
                return Err(MalisError::Argument(format!(
                    "edge {i} ({}, {}) references node >= {node_count}",
                    e.u, e.v
                )));
            }
            if !(0.0..=1.0).contains(&e.weight) {
                return Err(MalisError::Argument(format!(
                    "edge {i} weight {} outside [0,1]",
                    e.weight
                )));
            }
        }
        Ok(EdgeList { node_count, edges })
    }
}

/// Union-find with union by rank and path compression.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        // path halving
        let mut x = x;
        while self.parent[x] != x {
            let grandparent = self.parent[self.parent[x]];
            self.parent[x] = grandparent;
            x = grandparent;
        }
        x
    }

    /// Merge the sets containing `a` and `b`; returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Enumerate the valid edges of a grid graph in canonical order
/// (dimension-major, then owner pixel index). Edge ids used elsewhere index
/// into this enumeration.
pub fn edge_list(g: &AffinityGraph) -> EdgeList {
    let strd = strides(g.dims());
    let mut edges = Vec::with_capacity(g.edge_count());
    for d in 0..g.ndim() {
        for i in 0..g.volume() {
            if g.is_valid(d, i) {
                edges.push(Edge {
                    u: i,
                    v: i + strd[d],
                    weight: g.weight(d, i),
                });
            }
        }
    }
    EdgeList {
        node_count: g.volume(),
        edges,
    }
}

/// Ground-truth affinities: an edge gets weight 1 when both pixels carry the
/// same segment label >= 1, and 0 when the labels differ or either is the
/// boundary label 0.
pub fn groundtruth_affinities(seg: &Segmentation) -> AffinityGraph {
    let dims = seg.dims().to_vec();
    let labels = seg.labels();
    let strd = strides(&dims);
    let mut g = AffinityGraph::uniform(dims.clone(), 0.0).expect("dims validated by Segmentation");
    for d in 0..dims.len() {
        for i in 0..labels.len() {
            if g.is_valid(d, i) {
                let a = labels[i];
                let b = labels[i + strd[d]];
                if a == b && a >= 1 {
                    g.set_weight(d, i, 1.0);
                }
            }
        }
    }
    g
}

fn check_theta(theta: f32) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(MalisError::Argument(format!(
            "threshold {theta} outside [0,1]"
        )));
    }
    Ok(())
}

/// Keep exactly the valid edges with weight >= theta. Edges equal to the
/// threshold survive, so a pair is connected iff its maximin affinity
/// reaches the threshold.
pub fn threshold_graph(g: &AffinityGraph, theta: f32) -> Result<EdgeList> {
    check_theta(theta)?;
    let full = edge_list(g);
    let edges = full.edges.into_iter().filter(|e| e.weight >= theta).collect();
    Ok(EdgeList {
        node_count: full.node_count,
        edges,
    })
}

/// Connected-component labels, one per node, numbered from 1 in order of
/// first appearance by node index.
pub fn connected_components(node_count: usize, edges: &EdgeList) -> Result<Vec<u32>> {
    let mut sets = DisjointSet::new(node_count);
    for (i, e) in edges.edges.iter().enumerate() {
        if e.u >= node_count || e.v >= node_count {
            return Err(MalisError::Argument(format!(
                "edge {i} ({}, {}) references node >= {node_count}",
                e.u, e.v
            )));
        }
        sets.union(e.u, e.v);
    }
    let mut labels = vec![0u32; node_count];
    let mut root_label = vec![0u32; node_count];
    let mut next = 1u32;
    for node in 0..node_count {
        let root = sets.find(node);
        if root_label[root] == 0 {
            root_label[root] = next;
            next += 1;
        }
        labels[node] = root_label[root];
    }
    Ok(labels)
}

/// Threshold the graph and label its connected components on the grid.
///
/// Pixels with no incident valid edge at or above the threshold are given
/// the boundary label 0; remaining components are numbered from 1 in order
/// of first appearance by pixel index.
pub fn segment(g: &AffinityGraph, theta: f32) -> Result<Segmentation> {
    check_theta(theta)?;
    let vol = g.volume();
    let strd = strides(g.dims());
    let mut sets = DisjointSet::new(vol);
    let mut attached = vec![false; vol];
    for d in 0..g.ndim() {
        for i in 0..vol {
            if g.is_valid(d, i) && g.weight(d, i) >= theta {
                let j = i + strd[d];
                sets.union(i, j);
                attached[i] = true;
                attached[j] = true;
            }
        }
    }
    let mut labels = vec![0u32; vol];
    let mut root_label = vec![0u32; vol];
    let mut next = 1u32;
    for pixel in 0..vol {
        if !attached[pixel] {
            continue;
        }
        let root = sets.find(pixel);
        if root_label[root] == 0 {
            root_label[root] = next;
            next += 1;
        }
        labels[pixel] = root_label[root];
    }
    Segmentation::new(g.dims().to_vec(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagery::Image;

    fn chain_graph(weights: &[f32]) -> AffinityGraph {
        // 1 x (n+1) grid whose horizontal edges carry `weights`
        let n = weights.len() + 1;
        let mut g = AffinityGraph::uniform(vec![1, n], 0.0).unwrap();
        for (i, &w) in weights.iter().enumerate() {
            g.set_weight(1, i, w);
        }
        g
    }

    #[test]
    fn groundtruth_uniform_label_is_all_ones() {
        let seg = Segmentation::new(vec![3, 3], vec![1; 9]).unwrap();
        let g = groundtruth_affinities(&seg);
        for e in edge_list(&g).edges {
            assert_eq!(e.weight, 1.0);
        }
    }

    #[test]
    fn groundtruth_boundary_label_is_all_zeros() {
        let seg = Segmentation::new(vec![3, 3], vec![0; 9]).unwrap();
        let g = groundtruth_affinities(&seg);
        for e in edge_list(&g).edges {
            assert_eq!(e.weight, 0.0);
        }
    }

    #[test]
    fn groundtruth_chain_example() {
        let seg = Segmentation::new(vec![1, 4], vec![1, 1, 2, 2]).unwrap();
        let g = groundtruth_affinities(&seg);
        let weights: Vec<f32> = edge_list(&g).edges.iter().map(|e| e.weight).collect();
        assert_eq!(weights, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn threshold_zero_keeps_all_edges() {
        let g = chain_graph(&[0.9, 0.2, 0.8]);
        assert_eq!(threshold_graph(&g, 0.0).unwrap().edges.len(), 3);
    }

    #[test]
    fn threshold_one_keeps_only_full_weight_edges() {
        let g = chain_graph(&[1.0, 0.2, 1.0]);
        assert!(threshold_graph(&g, 1.0 + f32::EPSILON).is_err());
        let kept = threshold_graph(&g, 1.0).unwrap();
        assert_eq!(kept.edges.len(), 2);
        assert!(kept.edges.iter().all(|e| e.weight == 1.0));
    }

    #[test]
    fn threshold_keeps_edges_at_exactly_theta() {
        let g = chain_graph(&[0.5, 0.2]);
        let kept = threshold_graph(&g, 0.5).unwrap();
        assert_eq!(kept.edges.len(), 1);
        assert_eq!((kept.edges[0].u, kept.edges[0].v), (0, 1));
    }

    #[test]
    fn threshold_half_on_chain() {
        let g = chain_graph(&[0.9, 0.2, 0.8]);
        let kept = threshold_graph(&g, 0.5).unwrap();
        let pairs: Vec<(usize, usize)> = kept.edges.iter().map(|e| (e.u, e.v)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn components_no_edges_are_singletons() {
        let edges = EdgeList::new(4, vec![]).unwrap();
        assert_eq!(connected_components(4, &edges).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn components_path_is_one_component() {
        let edges = EdgeList::new(
            4,
            (0..3)
                .map(|i| Edge {
                    u: i,
                    v: i + 1,
                    weight: 1.0,
                })
                .collect(),
        )
        .unwrap();
        assert_eq!(connected_components(4, &edges).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn components_two_pairs() {
        let edges = EdgeList::new(
            4,
            vec![
                Edge { u: 0, v: 1, weight: 1.0 },
                Edge { u: 2, v: 3, weight: 1.0 },
            ],
        )
        .unwrap();
        assert_eq!(connected_components(4, &edges).unwrap(), vec![1, 1, 2, 2]);
    }

    #[test]
    fn components_reject_out_of_range_nodes() {
        let edges = EdgeList {
            node_count: 9,
            edges: vec![Edge { u: 0, v: 8, weight: 1.0 }],
        };
        assert!(matches!(
            connected_components(4, &edges),
            Err(MalisError::Argument(_))
        ));
    }

    #[test]
    fn segment_all_ones_is_single_segment() {
        let g = AffinityGraph::uniform(vec![4, 4], 1.0).unwrap();
        let seg = segment(&g, 0.5).unwrap();
        assert!(seg.labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn segment_all_zeros_is_all_boundary() {
        let g = AffinityGraph::uniform(vec![4, 4], 0.0).unwrap();
        let seg = segment(&g, 0.5).unwrap();
        assert!(seg.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn segment_chain_example() {
        let g = chain_graph(&[0.9, 0.2, 0.8]);
        let seg = segment(&g, 0.5).unwrap();
        assert_eq!(seg.labels(), &[1, 1, 2, 2]);
    }

    #[test]
    fn segment_isolates_get_label_zero() {
        let g = chain_graph(&[0.2, 0.9, 0.2]);
        let seg = segment(&g, 0.5).unwrap();
        assert_eq!(seg.labels(), &[0, 1, 1, 0]);
    }

    #[test]
    fn image_constructor_smoke() {
        // Image and AffinityGraph share dims conventions
        let img = Image::zeros(vec![2, 3]).unwrap();
        assert_eq!(img.ndim(), 2);
    }
}
