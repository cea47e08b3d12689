//! Undirected graphs with ordered incident-edge slots.
//!
//! Each node owns a list of slots, one per incident edge, sorted by neighbor
//! id (ties by edge id). A slot index at node `v` is a coin basis direction
//! for a walker sitting on `v`.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub edge: usize,
    pub neighbor: usize,
}

/// Both endpoints of an edge together with the slot the edge occupies at each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeEnds {
    pub u: usize,
    pub slot_u: usize,
    pub v: usize,
    pub slot_v: usize,
}

impl EdgeEnds {
    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }
}

/// Graph-level supervision target.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Class(usize),
    Target(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    slots: Vec<Vec<Slot>>,
    edges: Vec<EdgeEnds>,
    features: RMatrix,
    label: Option<Label>,
}

impl Graph {
    /// Build a graph from an undirected edge list.
    ///
    /// Edge ids follow input order. Self-loops occupy a single slot.
    pub fn build(edges: &[(usize, usize)], n: usize, features: RMatrix) -> Result<Graph> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        if features.rows() != n {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows for {n} nodes",
                features.rows()
            )));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        let mut slots: Vec<Vec<Slot>> = vec![Vec::new(); n];
        for (id, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has an endpoint outside 0..{n}"
                )));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            slots[a].push(Slot { edge: id, neighbor: b });
            if a != b {
                slots[b].push(Slot { edge: id, neighbor: a });
            }
        }
        for s in &mut slots {
            s.sort_by_key(|slot| (slot.neighbor, slot.edge));
        }

        let mut ends = vec![None::<EdgeEnds>; edges.len()];
        for (v, vslots) in slots.iter().enumerate() {
            for (i, slot) in vslots.iter().enumerate() {
                let entry = &mut ends[slot.edge];
                match entry {
                    None => {
                        *entry = Some(EdgeEnds {
                            u: v,
                            slot_u: i,
                            v,
                            slot_v: i,
                        })
                    }
                    Some(e) => {
                        e.v = v;
                        e.slot_v = i;
                    }
                }
            }
        }
        let edges = ends
            .into_iter()
            .map(|e| e.expect("every edge id lands in at least one slot"))
            .collect();

        Ok(Graph {
            slots,
            edges,
            features,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    /// Replace the feature matrix; row count must stay `n`.
    pub fn with_features(mut self, features: RMatrix) -> Result<Self> {
        if features.rows() != self.n() {
            return Err(Error::InvalidGraph(format!(
                "feature matrix has {} rows for {} nodes",
                features.rows(),
                self.n()
            )));
        }
        self.features = features;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn slots(&self, v: usize) -> &[Slot] {
        &self.slots[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.slots[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.slots.iter().map(Vec::len).collect()
    }

    /// Coin-space dimension needed to host every node's slots.
    pub fn max_degree(&self) -> usize {
        self.slots.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edges(&self) -> &[EdgeEnds] {
        &self.edges
    }

    /// Undirected edge list in edge-id order.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.u, e.v)).collect()
    }

    pub fn features(&self) -> &RMatrix {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    /// Dense adjacency built from the slot lists (loops counted once).
    pub fn adjacency(&self) -> RMatrix {
        let n = self.n();
        let mut a = RMatrix::zeros(n, n);
        for (v, vslots) in self.slots.iter().enumerate() {
            for s in vslots {
                a[(v, s.neighbor)] += 1.0;
            }
        }
        a
    }

    /// Relabel nodes so that old node `v` becomes `perm[v]`; features move with their node.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n();
        if perm.len() != n || {
            let mut seen = vec![false; n];
            perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        } {
            return Err(Error::InvalidArgument("not a permutation of the node set".into()));
        }
        let edges: Vec<(usize, usize)> = self
            .edge_list()
            .into_iter()
            .map(|(a, b)| (perm[a], perm[b]))
            .collect();
        let mut features = RMatrix::zeros(n, self.feature_dim());
        for v in 0..n {
            features.row_mut(perm[v]).copy_from_slice(self.features.row(v));
        }
        let mut g = Graph::build(&edges, n, features)?;
        g.label = self.label;
        Ok(g)
    }

    pub fn from_json_str(s: &str) -> Result<Graph> {
        let raw: GraphJson = serde_json::from_str(s)?;
        raw.into_graph()
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n(),
            edges: self.edge_list().into_iter().map(|(a, b)| [a, b]).collect(),
            features: self.features.to_rows(),
        }
    }
}

/// Ad-hoc JSON graph input: `{"n": int, "edges": [[u,v],...], "features": [[...],...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub features: Vec<Vec<f64>>,
}

impl GraphJson {
    pub fn into_graph(self) -> Result<Graph> {
        let features = RMatrix::from_rows(&self.features)?;
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::build(&edges, self.n, features)
    }
}

/// Path graph on `length` nodes (odd, at least 3) with a unit feature per node.
/// The center node is `(length - 1) / 2`.
pub fn line_graph(length: usize) -> Result<Graph> {
    if length < 3 || length % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "line length must be odd and at least 3, got {length}"
        )));
    }
    let edges: Vec<(usize, usize)> = (0..length - 1).map(|i| (i, i + 1)).collect();
    Graph::build(&edges, length, RMatrix::from_fn(length, 1, |_, _| 1.0))
}

pub fn line_center(length: usize) -> usize {
    (length - 1) / 2
}

/// G(n, p) graph with features drawn uniformly from `[0, 1)`.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64, feature_dim: usize) -> Result<Graph> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    let features = RMatrix::from_fn(n, feature_dim, |_, _| rng.gen::<f64>());
    Graph::build(&edges, n, features)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident(n: usize) -> RMatrix {
        RMatrix::identity(n)
    }

    #[test]
    fn single_edge_slots() {
        let g = Graph::build(&[(0, 1)], 2, ident(2)).unwrap();
        assert_eq!(g.slots(0), &[Slot { edge: 0, neighbor: 1 }]);
        assert_eq!(g.slots(1), &[Slot { edge: 0, neighbor: 0 }]);
        assert_eq!(g.features(), &ident(2));
    }

    #[test]
    fn isolated_node() {
        let g = Graph::build(&[], 1, RMatrix::from_rows(&[vec![1.0]]).unwrap()).unwrap();
        assert_eq!(g.n(), 1);
        assert!(g.slots(0).is_empty());
        assert_eq!(g.max_degree(), 0);
    }

    #[test]
    fn triangle_and_star_degrees() {
        let tri = Graph::build(&[(0, 1), (1, 2), (0, 2)], 3, ident(3)).unwrap();
        assert_eq!(tri.max_degree(), 2);
        assert!(tri.degrees().iter().all(|&d| d == 2));
        // Slots at node 0 sorted by neighbor: 1 (edge 0) then 2 (edge 2).
        assert_eq!(tri.slots(0)[0].neighbor, 1);
        assert_eq!(tri.slots(0)[1], Slot { edge: 2, neighbor: 2 });

        let star = Graph::build(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5, ident(5)).unwrap();
        assert_eq!(star.max_degree(), 4);
    }

    #[test]
    fn build_errors() {
        assert!(Graph::build(&[(0, 2)], 2, ident(2)).is_err());
        assert!(Graph::build(&[(0, 1), (1, 0)], 2, ident(2)).is_err());
        assert!(Graph::build(&[(0, 1)], 2, ident(3)).is_err());
    }

    #[test]
    fn self_loop_takes_one_slot() {
        let g = Graph::build(&[(0, 0), (0, 1)], 2, ident(2)).unwrap();
        assert_eq!(g.degree(0), 2);
        let e = g.edges()[0];
        assert!(e.is_loop());
        assert_eq!(e.slot_u, e.slot_v);
    }

    #[test]
    fn line_graph_shapes() {
        let g = line_graph(3).unwrap();
        assert_eq!(g.edge_list(), vec![(0, 1), (1, 2)]);
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        let g = line_graph(61).unwrap();
        assert_eq!((g.n(), g.num_edges(), line_center(61)), (61, 60, 30));
        assert_eq!(line_graph(5).unwrap().max_degree(), 2);
        assert!(line_graph(4).is_err());
        assert!(line_graph(1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = Graph::from_json_str(r#"{"n": 3, "edges": [[0,1],[1,2]], "features": [[1],[2],[3]]}"#)
            .unwrap();
        assert_eq!(g.max_degree(), 2);
        let back = serde_json::to_string(&g.to_json()).unwrap();
        assert_eq!(Graph::from_json_str(&back).unwrap(), g);
        assert!(Graph::from_json_str(r#"{"n": 1, "edges": [], "features": [[1]], "x": 1}"#).is_err());
    }

    #[test]
    fn permuted_moves_features() {
        let g = Graph::build(&[(0, 1)], 3, RMatrix::from_fn(3, 1, |i, _| i as f64)).unwrap();
        let p = g.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.edge_list(), vec![(0, 2)]);
        assert_eq!(p.features().as_slice(), &[1.0, 2.0, 0.0]);
        assert!(g.permuted(&[0, 0, 1]).is_err());
    }
}
