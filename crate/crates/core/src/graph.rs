/*!
Simple undirected graphs with dense node ids.

Nodes are `0..n`. Adjacency lists are kept sorted and deduplicated, with no
self-loops; every edge appears in both endpoint lists. All algorithms in this
crate lean on those invariants, so construction goes through the checked
entry points below.
*/

use std::fmt;

pub type NodeId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    SelfLoop { node: NodeId },
    NodeOutOfRange { node: NodeId, n: usize },
    /// Adjacency given directly where `u` lists `v` but not vice versa.
    NonSymmetricEdge { u: NodeId, v: NodeId },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            GraphError::NodeOutOfRange { node, n } => {
                write!(f, "node {node} out of range for n = {n}")
            }
            GraphError::NonSymmetricEdge { u, v } => {
                write!(f, "edge {u} -> {v} has no mirror {v} -> {u}")
            }
        }
    }
}

impl std::error::Error for GraphError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<NodeId>>,
    m: usize,
}

impl Graph {
    /// Empty graph on `n` nodes.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Build from an edge list. Duplicate edges collapse; self-loops are errors.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, GraphError> {
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop { node: u });
            }
            for w in [u, v] {
                if w as usize >= n {
                    return Err(GraphError::NodeOutOfRange { node: w, n });
                }
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        let mut m = 0;
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            m += list.len();
        }
        Ok(Graph { adj, m: m / 2 })
    }

    /// Adopt pre-built adjacency. Lists may be unsorted; symmetry is verified.
    pub fn from_adjacency(adj: Vec<Vec<NodeId>>) -> Result<Self, GraphError> {
        let n = adj.len();
        let mut sorted = adj;
        let mut m = 0;
        for (u, list) in sorted.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            if list.binary_search(&(u as NodeId)).is_ok() {
                return Err(GraphError::SelfLoop { node: u as NodeId });
            }
            if let Some(&big) = list.last() {
                if big as usize >= n {
                    return Err(GraphError::NodeOutOfRange { node: big, n });
                }
            }
            m += list.len();
        }
        for u in 0..n {
            for &v in &sorted[u] {
                if sorted[v as usize].binary_search(&(u as NodeId)).is_err() {
                    return Err(GraphError::NonSymmetricEdge {
                        u: u as NodeId,
                        v,
                    });
                }
            }
        }
        Ok(Graph { adj: sorted, m: m / 2 })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adj[v as usize]
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.n() as NodeId).into_iter()
    }

    /// Each edge once, as (min, max).
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |&&v| (u as NodeId) < v)
                .map(move |&v| (u as NodeId, v))
        })
    }

    /// Number of edges with both endpoints inside `set` (given as a sorted slice).
    pub fn edges_within(&self, set: &[NodeId]) -> usize {
        let mut count = 0;
        for &u in set {
            for &v in self.neighbors(u) {
                if v > u && set.binary_search(&v).is_ok() {
                    count += 1;
                }
            }
        }
        count
    }

    /// Induced subgraph on `keep` (sorted, deduplicated ids); nodes are
    /// relabeled densely in `keep` order. Returns the graph and the
    /// new-id -> old-id map.
    pub fn induced(&self, keep: &[NodeId]) -> (Graph, Vec<NodeId>) {
        let mut new_of = vec![u32::MAX; self.n()];
        for (i, &v) in keep.iter().enumerate() {
            new_of[v as usize] = i as u32;
        }
        let mut adj = Vec::with_capacity(keep.len());
        let mut m = 0;
        for &v in keep {
            let list: Vec<NodeId> = self
                .neighbors(v)
                .iter()
                .filter_map(|&u| {
                    let nu = new_of[u as usize];
                    (nu != u32::MAX).then_some(nu)
                })
                .collect();
            m += list.len();
            adj.push(list);
        }
        (
            Graph { adj, m: m / 2 },
            keep.to_vec(),
        )
    }

    /// Nodes at distance <= radius from `v`, sorted.
    pub fn ball(&self, v: NodeId, radius: u32) -> Vec<NodeId> {
        let mut seen = vec![false; self.n()];
        let mut frontier = vec![v];
        seen[v as usize] = true;
        let mut out = vec![v];
        for _ in 0..radius {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in self.neighbors(u) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        next.push(w);
                        out.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out.sort_unstable();
        out
    }
}

/// Parse an edge list: one `u v` pair per line, `#` starts a comment,
/// blank lines ignored. Node count is one past the largest id seen unless
/// `n_hint` or a `# nodes: N` header line asks for more (isolated tail
/// nodes would otherwise vanish).
pub fn parse_edge_list(text: &str, n_hint: usize) -> Result<Graph, String> {
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    let mut max_id: Option<NodeId> = None;
    let mut n_hint = n_hint;
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => {
                if let Some(decl) = raw[pos + 1..].trim().strip_prefix("nodes:") {
                    let n: usize = decl
                        .trim()
                        .parse()
                        .map_err(|_| format!("line {}: bad node count {decl:?}", idx + 1))?;
                    n_hint = n_hint.max(n);
                }
                &raw[..pos]
            }
            None => raw,
        };
        let mut it = line.split_whitespace();
        let (u, v) = match (it.next(), it.next()) {
            (None, _) => continue,
            (Some(a), Some(b)) => {
                let u: NodeId = a
                    .parse()
                    .map_err(|_| format!("line {}: bad node id {a:?}", idx + 1))?;
                let v: NodeId = b
                    .parse()
                    .map_err(|_| format!("line {}: bad node id {b:?}", idx + 1))?;
                (u, v)
            }
            (Some(a), None) => return Err(format!("line {}: lone token {a:?}", idx + 1)),
        };
        if it.next().is_some() {
            return Err(format!("line {}: more than two tokens", idx + 1));
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = max_id.map_or(0, |m| m as usize + 1).max(n_hint);
    Graph::from_edges(n, &edges).map_err(|e| e.to_string())
}

/// Inverse of `parse_edge_list` (modulo comments).
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_edges_dedups_and_sorts() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 0), (2, 1), (3, 0)]).unwrap();
        assert_eq!(g.m(), 3);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.neighbors(0), &[1, 3]);
    }

    #[test]
    fn self_loop_rejected() {
        assert_eq!(
            Graph::from_edges(2, &[(1, 1)]),
            Err(GraphError::SelfLoop { node: 1 })
        );
    }

    #[test]
    fn asymmetric_adjacency_rejected() {
        let err = Graph::from_adjacency(vec![vec![1], vec![]]).unwrap_err();
        assert_eq!(err, GraphError::NonSymmetricEdge { u: 0, v: 1 });
    }

    #[test]
    fn parse_round_trip() {
        let text = "# path\n0 1\n1 2\n\n2 3 # tail\n";
        let g = parse_edge_list(text, 0).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.m(), 3);
        let again = parse_edge_list(&write_edge_list(&g), 0).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn parse_empty_is_empty_graph() {
        let g = parse_edge_list("# nothing\n", 0).unwrap();
        assert_eq!(g.n(), 0);
        assert_eq!(g.m(), 0);
    }

    #[test]
    fn ball_truncates_bfs() {
        // 0-1-2-3-4 path
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(g.ball(0, 2), vec![0, 1, 2]);
        assert_eq!(g.ball(2, 1), vec![1, 2, 3]);
        assert_eq!(g.ball(2, 10), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn induced_relabels_densely() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let (h, map) = g.induced(&[1, 2, 4]);
        assert_eq!(h.n(), 3);
        assert_eq!(h.m(), 1); // only 1-2 survives
        assert_eq!(map, vec![1, 2, 4]);
        assert!(h.has_edge(0, 1));
    }
}
