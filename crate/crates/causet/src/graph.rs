//! Directed graphs over named nodes, with cycles allowed.
//!
//! Provides reachability, path blocking / d-separation (applied verbatim to
//! cyclic graphs via simple paths), and the edge mutilations used by
//! interventions and the do-calculus rules.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on graph size; path enumeration is exhaustive over simple paths.
pub const MAX_NODES: usize = 16;

pub type NodeSet = BTreeSet<String>;

/// Builds a [`NodeSet`] from string-likes.
pub fn node_set<I, S>(ids: I) -> NodeSet
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    ids.into_iter().map(Into::into).collect()
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("quantum sort only allowed on latent nodes, `{0}` is observed")]
    QuantumObserved(String),
    #[error("graph has {0} nodes, limit is {MAX_NODES}")]
    TooManyNodes(usize),
    #[error("sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("set must be nonempty")]
    EmptySet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Observed,
    Latent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sort {
    Classical,
    Quantum,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub visibility: Visibility,
    pub sort: Sort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A directed graph over observed/latent nodes. Cycles are allowed,
/// self-loops are not. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    nodes: Vec<Node>,
    /// Edges as (from, to) index pairs, sorted.
    edges: Vec<(usize, usize)>,
}

impl CausalGraph {
    pub fn new(nodes: Vec<Node>, edges: &[(String, String)]) -> Result<Self, GraphError> {
        if nodes.len() > MAX_NODES {
            return Err(GraphError::TooManyNodes(nodes.len()));
        }
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.id.clone()) {
                return Err(GraphError::DuplicateNode(n.id.clone()));
            }
            if n.sort == Sort::Quantum && n.visibility == Visibility::Observed {
                return Err(GraphError::QuantumObserved(n.id.clone()));
            }
        }
        let mut g = CausalGraph {
            nodes,
            edges: Vec::new(),
        };
        let mut idx_edges = BTreeSet::new();
        for (a, b) in edges {
            let ia = g.index_of(a)?;
            let ib = g.index_of(b)?;
            if ia == ib {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            idx_edges.insert((ia, ib));
        }
        g.edges = idx_edges.into_iter().collect();
        Ok(g)
    }

    /// Convenience constructor: all nodes observed classical.
    pub fn observed(ids: &[&str], edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let nodes = ids
            .iter()
            .map(|id| Node {
                id: (*id).to_string(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            })
            .collect();
        let edges: Vec<(String, String)> = edges
            .iter()
            .map(|(a, b)| ((*a).to_string(), (*b).to_string()))
            .collect();
        Self::new(nodes, &edges)
    }

    fn index_of(&self, id: &str) -> Result<usize, GraphError> {
        self.nodes
            .iter()
            .position(|n| n.id == id)
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.iter().any(|n| n.id == id)
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn observed_ids(&self) -> Vec<String> {
        self.nodes
            .iter()
            .filter(|n| n.visibility == Visibility::Observed)
            .map(|n| n.id.clone())
            .collect()
    }

    pub fn edge_ids(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.nodes[a].id.clone(), self.nodes[b].id.clone()))
            .collect()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Ok(a), Ok(b)) => self.edges.binary_search(&(a, b)).is_ok(),
            _ => false,
        }
    }

    pub fn parents(&self, id: &str) -> Result<NodeSet, GraphError> {
        let i = self.index_of(id)?;
        Ok(self
            .edges
            .iter()
            .filter(|&&(_, b)| b == i)
            .map(|&(a, _)| self.nodes[a].id.clone())
            .collect())
    }

    pub fn children(&self, id: &str) -> Result<NodeSet, GraphError> {
        let i = self.index_of(id)?;
        Ok(self
            .edges
            .iter()
            .filter(|&&(a, _)| a == i)
            .map(|&(_, b)| self.nodes[b].id.clone())
            .collect())
    }

    /// Nodes with no incoming edges.
    pub fn exogenous_ids(&self) -> Vec<String> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.edges.iter().any(|&(_, b)| b == *i))
            .map(|(_, n)| n.id.clone())
            .collect()
    }

    fn check_subset(&self, s: &NodeSet) -> Result<Vec<usize>, GraphError> {
        s.iter().map(|id| self.index_of(id)).collect()
    }

    fn check_disjoint(sets: &[&NodeSet]) -> Result<(), GraphError> {
        for (i, a) in sets.iter().enumerate() {
            for b in sets.iter().skip(i + 1) {
                if let Some(x) = a.intersection(b).next() {
                    return Err(GraphError::OverlappingSets(x.clone()));
                }
            }
        }
        Ok(())
    }

    /// Strict reachability: all nodes reachable from `s` by a nonempty
    /// directed path. A node reaches itself only through a genuine cycle.
    pub fn reachable(&self, s: &NodeSet, dir: Direction) -> Result<NodeSet, GraphError> {
        let start = self.check_subset(s)?;
        let mut out = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = Vec::new();
        for &i in &start {
            for &(a, b) in &self.edges {
                let (from, to) = match dir {
                    Direction::Forward => (a, b),
                    Direction::Backward => (b, a),
                };
                if from == i && !out[to] {
                    out[to] = true;
                    stack.push(to);
                }
            }
        }
        while let Some(i) = stack.pop() {
            for &(a, b) in &self.edges {
                let (from, to) = match dir {
                    Direction::Forward => (a, b),
                    Direction::Backward => (b, a),
                };
                if from == i && !out[to] {
                    out[to] = true;
                    stack.push(to);
                }
            }
        }
        Ok(out
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| self.nodes[i].id.clone())
            .collect())
    }

    /// Whether there is a directed path (nonempty) from `from` to `to`.
    pub fn causes(&self, from: &str, to: &str) -> Result<bool, GraphError> {
        let r = self.reachable(&node_set([from]), Direction::Forward)?;
        let _ = self.index_of(to)?;
        Ok(r.contains(to))
    }

    pub fn has_directed_cycle(&self) -> bool {
        // A node on a cycle reaches itself.
        self.nodes.iter().any(|n| {
            self.reachable(&node_set([n.id.as_str()]), Direction::Forward)
                .map(|r| r.contains(&n.id))
                .unwrap_or(false)
        })
    }

    pub fn has_observed_cycle(&self) -> bool {
        self.nodes
            .iter()
            .filter(|n| n.visibility == Visibility::Observed)
            .any(|n| {
                self.reachable(&node_set([n.id.as_str()]), Direction::Forward)
                    .map(|r| r.contains(&n.id))
                    .unwrap_or(false)
            })
    }

    /// Topological order of node ids; `None` if the graph has a directed cycle.
    pub fn topological_order(&self) -> Option<Vec<String>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        for &(_, b) in &self.edges {
            indeg[b] += 1;
        }
        let mut order = Vec::with_capacity(n);
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        while let Some(i) = ready.pop() {
            order.push(self.nodes[i].id.clone());
            for &(a, b) in &self.edges {
                if a == i {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        ready.push(b);
                    }
                }
            }
        }
        if order.len() == n {
            Some(order)
        } else {
            None
        }
    }

    /// Removes all edges into `cut_incoming` and out of `cut_outgoing`.
    /// Realizes the mutilated graphs of the do-calculus rules.
    pub fn mutilate(
        &self,
        cut_incoming: &NodeSet,
        cut_outgoing: &NodeSet,
    ) -> Result<CausalGraph, GraphError> {
        let cin = self.check_subset(cut_incoming)?;
        let cout = self.check_subset(cut_outgoing)?;
        let mut g = self.clone();
        g.edges
            .retain(|&(a, b)| !cin.contains(&b) && !cout.contains(&a));
        Ok(g)
    }

    /// Drops an explicit list of edges (used by post-selection acyclification).
    pub fn remove_edges(&self, edges: &[(String, String)]) -> Result<CausalGraph, GraphError> {
        let mut g = self.clone();
        for (a, b) in edges {
            let ia = self.index_of(a)?;
            let ib = self.index_of(b)?;
            g.edges.retain(|&e| e != (ia, ib));
        }
        Ok(g)
    }

    /// The set `Z(W)`: members of `z` with no directed path to any member of `w`.
    pub fn z_not_ancestors_of_w(&self, z: &NodeSet, w: &NodeSet) -> Result<NodeSet, GraphError> {
        Self::check_disjoint(&[z, w])?;
        self.check_subset(z)?;
        let anc_w = self.reachable(w, Direction::Backward)?;
        Ok(z.iter().filter(|x| !anc_w.contains(*x)).cloned().collect())
    }

    /// d-separation of `x` from `y` given `z`, deciding path blocking over
    /// simple paths of the directed graph (cycles handled by the same rule).
    pub fn d_separated(&self, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Result<bool, GraphError> {
        if x.is_empty() || y.is_empty() {
            return Err(GraphError::EmptySet);
        }
        Self::check_disjoint(&[x, y, z])?;
        let xi = self.check_subset(x)?;
        let yi = self.check_subset(y)?;
        let zi: BTreeSet<usize> = self.check_subset(z)?.into_iter().collect();

        // Precompute, per node, whether it or one of its strict descendants is in z.
        let n = self.nodes.len();
        let mut desc_in_z = vec![false; n];
        for (i, flag) in desc_in_z.iter_mut().enumerate() {
            if zi.contains(&i) {
                *flag = true;
                continue;
            }
            let ns = node_set([self.nodes[i].id.as_str()]);
            let r = self.reachable(&ns, Direction::Forward)?;
            *flag = r.iter().any(|id| zi.contains(&self.index_of(id).unwrap()));
        }

        let ys: BTreeSet<usize> = yi.iter().copied().collect();
        for &sx in &xi {
            if self.connects(sx, &ys, &zi, &desc_in_z) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// DFS over simple undirected paths looking for one left open by `z`.
    fn connects(
        &self,
        start: usize,
        targets: &BTreeSet<usize>,
        z: &BTreeSet<usize>,
        desc_in_z: &[bool],
    ) -> bool {
        // Path state: sequence of (node, arrived_by_incoming_edge).
        // arrived_by_incoming_edge = true when the edge used points INTO node.
        let mut visited = vec![false; self.nodes.len()];
        visited[start] = true;
        self.dfs_open(start, None, targets, z, desc_in_z, &mut visited)
    }

    fn dfs_open(
        &self,
        at: usize,
        arrived_in: Option<bool>,
        targets: &BTreeSet<usize>,
        z: &BTreeSet<usize>,
        desc_in_z: &[bool],
        visited: &mut Vec<bool>,
    ) -> bool {
        for &(a, b) in &self.edges {
            let (next, leave_out) = if a == at {
                (b, true) // edge points out of `at`
            } else if b == at {
                (a, false) // edge points into `at`
            } else {
                continue;
            };
            if visited[next] {
                continue;
            }
            // `at` is interior when we arrived along some edge and now leave.
            if let Some(arr_in) = arrived_in {
                let collider = arr_in && !leave_out;
                let open = if collider {
                    desc_in_z[at]
                } else {
                    !z.contains(&at)
                };
                if !open {
                    continue;
                }
            }
            // Arriving at `next`: via incoming edge iff the edge points into next.
            let next_arr_in = leave_out;
            if targets.contains(&next) {
                return true;
            }
            visited[next] = true;
            if self.dfs_open(next, Some(next_arr_in), targets, z, desc_in_z, visited) {
                return true;
            }
            visited[next] = false;
        }
        false
    }
}

impl fmt::Display for CausalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self
            .edge_ids()
            .iter()
            .map(|(a, b)| format!("{a}->{b}"))
            .collect();
        write!(f, "{{{}}}", edges.join(", "))
    }
}

/// Formats a node set as `{A,B}` for reports.
pub fn fmt_set(s: &NodeSet) -> String {
    if s.is_empty() {
        "{}".to_string()
    } else {
        format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> CausalGraph {
        CausalGraph::observed(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap()
    }

    #[test]
    fn reachable_chain_forward() {
        let g = chain();
        let r = g.reachable(&node_set(["A"]), Direction::Forward).unwrap();
        assert_eq!(r, node_set(["B", "C"]));
    }

    #[test]
    fn reachable_two_cycle_returns_to_itself() {
        let g = CausalGraph::observed(&["B", "C"], &[("B", "C"), ("C", "B")]).unwrap();
        let r = g.reachable(&node_set(["B"]), Direction::Forward).unwrap();
        assert_eq!(r, node_set(["B", "C"]));
        assert!(g.has_directed_cycle());
    }

    #[test]
    fn reachable_strictness() {
        let g = chain();
        let r = g.reachable(&node_set(["C"]), Direction::Forward).unwrap();
        assert!(r.is_empty());
        let r = g.reachable(&node_set(["C"]), Direction::Backward).unwrap();
        assert_eq!(r, node_set(["A", "B"]));
    }

    #[test]
    fn reachable_unknown_node() {
        let g = chain();
        assert!(matches!(
            g.reachable(&node_set(["Q"]), Direction::Forward),
            Err(GraphError::UnknownNode(_))
        ));
    }

    fn jamming_graph() -> CausalGraph {
        let nodes = vec![
            Node {
                id: "A".into(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            },
            Node {
                id: "B".into(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            },
            Node {
                id: "C".into(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            },
            Node {
                id: "L".into(),
                visibility: Visibility::Latent,
                sort: Sort::Classical,
            },
        ];
        let edges = vec![
            ("B".to_string(), "A".to_string()),
            ("B".to_string(), "C".to_string()),
            ("L".to_string(), "A".to_string()),
            ("L".to_string(), "C".to_string()),
        ];
        CausalGraph::new(nodes, &edges).unwrap()
    }

    #[test]
    fn jamming_b_reaches_a_and_c() {
        let g = jamming_graph();
        let r = g.reachable(&node_set(["B"]), Direction::Forward).unwrap();
        assert_eq!(r, node_set(["A", "C"]));
    }

    #[test]
    fn bell_dsep() {
        // Bell graph: L -> X, L -> Y, A -> X, B -> Y.
        let nodes = vec![
            Node {
                id: "A".into(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            },
            Node {
                id: "B".into(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            },
            Node {
                id: "X".into(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            },
            Node {
                id: "Y".into(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            },
            Node {
                id: "L".into(),
                visibility: Visibility::Latent,
                sort: Sort::Classical,
            },
        ];
        let edges = vec![
            ("L".to_string(), "X".to_string()),
            ("L".to_string(), "Y".to_string()),
            ("A".to_string(), "X".to_string()),
            ("B".to_string(), "Y".to_string()),
        ];
        let g = CausalGraph::new(nodes, &edges).unwrap();
        // X d-separated from B given A.
        assert!(g
            .d_separated(&node_set(["X"]), &node_set(["B"]), &node_set(["A"]))
            .unwrap());
        // X and Y are d-connected (common cause).
        assert!(!g
            .d_separated(&node_set(["X"]), &node_set(["Y"]), &NodeSet::new())
            .unwrap());
    }

    #[test]
    fn conditioned_collider_unblocks() {
        let g = CausalGraph::observed(&["A", "W", "Y"], &[("A", "W"), ("Y", "W")]).unwrap();
        assert!(g
            .d_separated(&node_set(["A"]), &node_set(["Y"]), &NodeSet::new())
            .unwrap());
        assert!(!g
            .d_separated(&node_set(["A"]), &node_set(["Y"]), &node_set(["W"]))
            .unwrap());
    }

    #[test]
    fn collider_descendant_unblocks() {
        let g = CausalGraph::observed(&["A", "W", "Y", "D"], &[("A", "W"), ("Y", "W"), ("W", "D")])
            .unwrap();
        assert!(!g
            .d_separated(&node_set(["A"]), &node_set(["Y"]), &node_set(["D"]))
            .unwrap());
    }

    #[test]
    fn jamming_a_c_connected_given_b() {
        // With the latent common cause present the path A <- L -> C stays open.
        let g = jamming_graph();
        assert!(!g
            .d_separated(&node_set(["A"]), &node_set(["C"]), &node_set(["B"]))
            .unwrap());
    }

    #[test]
    fn dsep_rejects_overlap() {
        let g = chain();
        assert!(matches!(
            g.d_separated(&node_set(["A"]), &node_set(["A"]), &NodeSet::new()),
            Err(GraphError::OverlappingSets(_))
        ));
    }

    #[test]
    fn mutilate_identity_and_fork() {
        let g = jamming_graph();
        let same = g.mutilate(&NodeSet::new(), &NodeSet::new()).unwrap();
        assert_eq!(g, same);
        let fork = CausalGraph::observed(&["L", "A", "B"], &[("L", "A"), ("L", "B")]).unwrap();
        let cut = fork.mutilate(&NodeSet::new(), &node_set(["L"])).unwrap();
        assert!(cut.edge_ids().is_empty());
    }

    #[test]
    fn mutilate_eg4_do_x() {
        // eg4 graph: Z->X, X->W, Z->W, X->Y, W->Y; cutting into X removes Z->X.
        let g = CausalGraph::observed(
            &["X", "Y", "W", "Z"],
            &[("Z", "X"), ("X", "W"), ("Z", "W"), ("X", "Y"), ("W", "Y")],
        )
        .unwrap();
        let cut = g.mutilate(&node_set(["X"]), &NodeSet::new()).unwrap();
        assert!(!cut.has_edge("Z", "X"));
        assert_eq!(cut.edge_ids().len(), 4);
    }

    #[test]
    fn z_not_ancestors() {
        let g = chain(); // A -> B -> C
        let r = g
            .z_not_ancestors_of_w(&node_set(["A"]), &node_set(["C"]))
            .unwrap();
        assert!(r.is_empty());
        let g2 =
            CausalGraph::observed(&["Z1", "Z2", "W", "Y"], &[("Z1", "W"), ("Z2", "Y")]).unwrap();
        let r = g2
            .z_not_ancestors_of_w(&node_set(["Z1", "Z2"]), &node_set(["W"]))
            .unwrap();
        assert_eq!(r, node_set(["Z2"]));
    }

    #[test]
    fn node_cap_enforced() {
        let ids: Vec<String> = (0..17).map(|i| format!("N{i}")).collect();
        let nodes: Vec<Node> = ids
            .iter()
            .map(|id| Node {
                id: id.clone(),
                visibility: Visibility::Observed,
                sort: Sort::Classical,
            })
            .collect();
        assert!(matches!(
            CausalGraph::new(nodes, &[]),
            Err(GraphError::TooManyNodes(17))
        ));
    }

    #[test]
    fn self_loop_rejected() {
        let err = CausalGraph::observed(&["A"], &[("A", "A")]);
        assert!(matches!(err, Err(GraphError::SelfLoop(_))));
    }

    #[test]
    fn quantum_observed_rejected() {
        let nodes = vec![Node {
            id: "Q".into(),
            visibility: Visibility::Observed,
            sort: Sort::Quantum,
        }];
        assert!(matches!(
            CausalGraph::new(nodes, &[]),
            Err(GraphError::QuantumObserved(_))
        ));
    }

    #[test]
    fn dsep_symmetric_and_monotone_subgraph() {
        let g = jamming_graph();
        let x = node_set(["A"]);
        let y = node_set(["B"]);
        let z = node_set(["C"]);
        assert_eq!(
            g.d_separated(&x, &y, &z).unwrap(),
            g.d_separated(&y, &x, &z).unwrap()
        );
    }
}
