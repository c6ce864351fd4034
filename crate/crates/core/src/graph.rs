//! Trees of transitive tournaments (ttt).
//!
//! A ttt is a connected DAG whose undirected skeleton is a block graph: every
//! maximal biconnected piece of the skeleton is a clique, and the directions
//! inside each clique form a transitive tournament. [`TttGraph::build`]
//! validates this and precomputes every structural query the model layer uses:
//! reachability, unique shortest directed paths, unique shortest trails and the
//! tournament decomposition.
//!
//! Node labels are kept exactly as supplied. Internally nodes are addressed by
//! a dense index `0..n` in increasing label order; the `*_idx` accessors expose
//! that view for the numerical modules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the number of paths [`TttGraph::all_paths`] may enumerate.
pub const DEFAULT_PATH_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for NodeId {
    fn from(v: u32) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub from: NodeId,
    pub to: NodeId,
}

impl DirectedEdge {
    pub fn new(from: impl Into<NodeId>, to: impl Into<NodeId>) -> Self {
        DirectedEdge {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("node {0} is listed more than once")]
    DuplicateNode(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge {0} duplicates or reverses another edge")]
    DuplicateOrReversedEdge(DirectedEdge),
    #[error("graph is not connected: node {unreachable} cannot be reached from node {from}")]
    NotConnected { from: NodeId, unreachable: NodeId },
    #[error("directed cycle through nodes {0:?}")]
    DirectedCycle(Vec<NodeId>),
    #[error(
        "biconnected block {block:?} is not complete: {missing_a} and {missing_b} are not adjacent"
    )]
    BlockNotComplete {
        block: Vec<NodeId>,
        missing_a: NodeId,
        missing_b: NodeId,
    },
    #[error("block {0:?} is complete but its edges contain a directed cycle")]
    BlockNotTransitive(Vec<NodeId>),
    #[error("more than {budget} paths from {from} to {to}")]
    PathBudgetExceeded {
        from: NodeId,
        to: NodeId,
        budget: usize,
    },
}

/// A maximal transitive tournament of the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tournament {
    /// Nodes ordered by out-degree within the tournament, source first.
    pub nodes: Vec<NodeId>,
    pub edges: Vec<DirectedEdge>,
}

impl Tournament {
    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.contains(&v)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// How a shortest trail is oriented relative to its traversal from the first
/// to the last node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrailShape {
    /// Every edge points along the traversal: the trail is `p(u, v)`.
    Forward,
    /// Every edge points against the traversal: the trail is `p(v, u)`.
    Backward,
    /// The trail is `p(w, u)` reversed followed by `p(w, v)`.
    Apex(NodeId),
    /// Any other orientation pattern (contains a collider); never produced
    /// when the graph has a unique source.
    Mixed,
}

/// A trail (undirected path) with the original edge directions retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trail {
    /// Node sequence in traversal order; a single node for the empty path.
    pub nodes: Vec<NodeId>,
    /// Edges as they appear in the graph.
    pub edges: Vec<DirectedEdge>,
    /// `forward[k]` is true when `edges[k]` points along the traversal.
    pub forward: Vec<bool>,
    pub shape: TrailShape,
}

impl Trail {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges re-oriented along the traversal direction.
    pub fn oriented_pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.nodes.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Family relations of a single node; capitalized sets include the node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relatives {
    pub pa: BTreeSet<NodeId>,
    pub ch: BTreeSet<NodeId>,
    pub an: BTreeSet<NodeId>,
    pub desc: BTreeSet<NodeId>,
    pub an_incl: BTreeSet<NodeId>,
    pub desc_incl: BTreeSet<NodeId>,
}

#[derive(Debug, Clone)]
pub struct TttGraph {
    labels: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    topo: Vec<usize>,
    tournaments: Vec<Tournament>,
    tour_nodes: Vec<Vec<usize>>,
    node_tours: Vec<Vec<usize>>,
    // reach[i][v]: there is a directed path from i to v (reflexive)
    reach: Vec<Vec<bool>>,
    dir_pred: Vec<Vec<Option<usize>>>,
    skel_dist: Vec<Vec<usize>>,
    skel_pred: Vec<Vec<usize>>,
}

impl TttGraph {
    /// Validates `nodes`/`edges` as a tree of transitive tournaments.
    pub fn build(
        nodes: impl IntoIterator<Item = NodeId>,
        edges: impl IntoIterator<Item = DirectedEdge>,
    ) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for v in nodes {
            if index.insert(v, 0).is_some() {
                return Err(GraphError::DuplicateNode(v));
            }
        }
        if index.is_empty() {
            return Err(GraphError::Empty);
        }
        let labels: Vec<NodeId> = index.keys().copied().collect();
        for (k, v) in labels.iter().enumerate() {
            index.insert(*v, k);
        }
        let n = labels.len();

        let mut seen = BTreeSet::new();
        let mut edge_list = Vec::new();
        for e in edges {
            let a = *index.get(&e.from).ok_or(GraphError::UnknownNode(e.from))?;
            let b = *index.get(&e.to).ok_or(GraphError::UnknownNode(e.to))?;
            if a == b {
                return Err(GraphError::SelfLoop(e.from));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(GraphError::DuplicateOrReversedEdge(e));
            }
            edge_list.push((a, b));
        }
        edge_list.sort_unstable();

        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &edge_list {
            children[a].push(b);
            parents[b].push(a);
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in parents
            .iter_mut()
            .chain(children.iter_mut())
            .chain(neighbors.iter_mut())
        {
            list.sort_unstable();
        }

        let (skel_dist, skel_pred) = all_pairs_bfs(&neighbors);
        if let Some(v) = (0..n).find(|&v| skel_dist[0][v] == usize::MAX) {
            return Err(GraphError::NotConnected {
                from: labels[0],
                unreachable: labels[v],
            });
        }

        let adjacent: BTreeSet<(usize, usize)> = edge_list.iter().copied().collect();
        let is_adj = |a: usize, b: usize| adjacent.contains(&(a, b)) || adjacent.contains(&(b, a));

        let mut tour_nodes = Vec::new();
        for block in biconnected_blocks(&neighbors) {
            for (x, &a) in block.iter().enumerate() {
                for &b in &block[x + 1..] {
                    if !is_adj(a, b) {
                        return Err(GraphError::BlockNotComplete {
                            block: block.iter().map(|&k| labels[k]).collect(),
                            missing_a: labels[a],
                            missing_b: labels[b],
                        });
                    }
                }
            }
            // an acyclic tournament on d nodes has out-degrees {d-1, ..., 0}
            let d = block.len();
            let mut by_out: Vec<(usize, usize)> = block
                .iter()
                .map(|&a| {
                    let out = block
                        .iter()
                        .filter(|&&b| adjacent.contains(&(a, b)))
                        .count();
                    (out, a)
                })
                .collect();
            by_out.sort_unstable_by(|x, y| y.cmp(x));
            if by_out
                .iter()
                .enumerate()
                .any(|(k, &(out, _))| out != d - 1 - k)
            {
                return Err(GraphError::BlockNotTransitive(
                    block.iter().map(|&k| labels[k]).collect(),
                ));
            }
            tour_nodes.push(by_out.into_iter().map(|(_, a)| a).collect::<Vec<_>>());
        }
        tour_nodes.sort();

        let topo = topological_order(&parents, &children).ok_or_else(|| {
            let cyc: Vec<NodeId> = (0..n)
                .filter(|&v| !parents[v].is_empty() && !children[v].is_empty())
                .map(|v| labels[v])
                .collect();
            GraphError::DirectedCycle(cyc)
        })?;

        let mut node_tours = vec![Vec::new(); n];
        let tournaments = tour_nodes
            .iter()
            .enumerate()
            .map(|(t, nodes)| {
                for &v in nodes {
                    node_tours[v].push(t);
                }
                let mut edges = Vec::new();
                for (x, &a) in nodes.iter().enumerate() {
                    for &b in &nodes[x + 1..] {
                        edges.push(DirectedEdge::new(labels[a], labels[b]));
                    }
                }
                edges.sort();
                Tournament {
                    nodes: nodes.iter().map(|&k| labels[k]).collect(),
                    edges,
                }
            })
            .collect();

        let (dir_dist, dir_pred) = all_pairs_bfs_directed(&children);
        let reach = dir_dist
            .iter()
            .map(|row| row.iter().map(|&d| d != usize::MAX).collect())
            .collect();

        Ok(TttGraph {
            labels,
            index,
            edges: edge_list,
            parents,
            children,
            neighbors,
            topo,
            tournaments,
            tour_nodes,
            node_tours,
            reach,
            dir_pred,
            skel_dist,
            skel_pred,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Node labels in increasing order; position `k` is dense index `k`.
    pub fn labels(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> NodeId {
        self.labels[idx]
    }

    pub fn index_of(&self, v: NodeId) -> Result<usize, GraphError> {
        self.index
            .get(&v)
            .copied()
            .ok_or(GraphError::UnknownNode(v))
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.index.contains_key(&v)
    }

    pub fn edges(&self) -> Vec<DirectedEdge> {
        self.edges
            .iter()
            .map(|&(a, b)| DirectedEdge::new(self.labels[a], self.labels[b]))
            .collect()
    }

    pub fn edges_idx(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge_idx(&self, a: usize, b: usize) -> bool {
        self.children[a].binary_search(&b).is_ok()
    }

    pub fn parents_idx(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn children_idx(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn neighbors_idx(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Dense indices in a topological order (parents before children).
    pub fn topological_order_idx(&self) -> &[usize] {
        &self.topo
    }

    pub fn tournaments(&self) -> &[Tournament] {
        &self.tournaments
    }

    /// Tournament `t` as dense indices, source first.
    pub fn tournament_idx(&self, t: usize) -> &[usize] {
        &self.tour_nodes[t]
    }

    /// Indices of the tournaments containing node `v`.
    pub fn tournaments_of_idx(&self, v: usize) -> &[usize] {
        &self.node_tours[v]
    }

    /// The unique tournament containing both endpoints of an adjacent pair.
    pub fn tournament_of_pair_idx(&self, a: usize, b: usize) -> Option<usize> {
        self.node_tours[a]
            .iter()
            .copied()
            .find(|t| self.node_tours[b].contains(t))
    }

    /// True when `i` is an ancestor of `v` or `i == v`.
    pub fn reaches_idx(&self, i: usize, v: usize) -> bool {
        self.reach[i][v]
    }

    pub fn sources(&self) -> BTreeSet<NodeId> {
        (0..self.node_count())
            .filter(|&v| self.parents[v].is_empty())
            .map(|v| self.labels[v])
            .collect()
    }

    pub fn sources_idx(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&v| self.parents[v].is_empty())
            .collect()
    }

    pub fn has_unique_source(&self) -> bool {
        self.parents.iter().filter(|p| p.is_empty()).count() == 1
    }

    /// Triples `(a, b, v)` with `a < b` non-adjacent parents of `v`, sorted by
    /// child and then by parents.
    pub fn v_structures(&self) -> Vec<(NodeId, NodeId, NodeId)> {
        let mut out = Vec::new();
        for v in 0..self.node_count() {
            let pa = &self.parents[v];
            for (x, &a) in pa.iter().enumerate() {
                for &b in &pa[x + 1..] {
                    if !self.has_edge_idx(a, b) && !self.has_edge_idx(b, a) {
                        out.push((self.labels[v], self.labels[a], self.labels[b]));
                    }
                }
            }
        }
        out.sort();
        out.into_iter().map(|(v, a, b)| (a, b, v)).collect()
    }

    pub fn relatives(&self, v: NodeId) -> Result<Relatives, GraphError> {
        let vi = self.index_of(v)?;
        let to_set = |it: &mut dyn Iterator<Item = usize>| -> BTreeSet<NodeId> {
            it.map(|k| self.labels[k]).collect()
        };
        let n = self.node_count();
        let an = to_set(&mut (0..n).filter(|&i| i != vi && self.reach[i][vi]));
        let desc = to_set(&mut (0..n).filter(|&i| i != vi && self.reach[vi][i]));
        let mut an_incl = an.clone();
        an_incl.insert(v);
        let mut desc_incl = desc.clone();
        desc_incl.insert(v);
        Ok(Relatives {
            pa: to_set(&mut self.parents[vi].iter().copied()),
            ch: to_set(&mut self.children[vi].iter().copied()),
            an,
            desc,
            an_incl,
            desc_incl,
        })
    }

    /// `Desc(i)` as a membership mask over dense indices.
    pub fn desc_mask_idx(&self, i: usize) -> &[bool] {
        &self.reach[i]
    }

    /// Node sequence of the unique shortest directed path `p(i, v)`, or `None`
    /// when `v` is not reachable from `i`. `p(i, i)` is `[i]`.
    pub fn shortest_path_idx(&self, i: usize, v: usize) -> Option<Vec<usize>> {
        if !self.reach[i][v] {
            return None;
        }
        let mut seq = vec![v];
        let mut cur = v;
        while cur != i {
            cur = self.dir_pred[i][cur].expect("reachable node has a predecessor");
            seq.push(cur);
        }
        seq.reverse();
        Some(seq)
    }

    pub fn shortest_path(&self, i: NodeId, v: NodeId) -> Result<Option<Trail>, GraphError> {
        let (a, b) = (self.index_of(i)?, self.index_of(v)?);
        Ok(self
            .shortest_path_idx(a, b)
            .map(|seq| self.trail_from_seq(&seq)))
    }

    /// Every directed path from `i` to `v` as a node sequence. `π(i, i)` is empty.
    pub fn all_paths_idx(
        &self,
        i: usize,
        v: usize,
        budget: usize,
    ) -> Result<Vec<Vec<usize>>, GraphError> {
        let mut out = Vec::new();
        if i == v || !self.reach[i][v] {
            return Ok(out);
        }
        let mut stack = vec![i];
        self.dfs_paths(i, v, budget, &mut stack, &mut out)?;
        Ok(out)
    }

    fn dfs_paths(
        &self,
        cur: usize,
        target: usize,
        budget: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), GraphError> {
        for &c in &self.children[cur] {
            if !self.reach[c][target] {
                continue;
            }
            stack.push(c);
            if c == target {
                if out.len() >= budget {
                    return Err(GraphError::PathBudgetExceeded {
                        from: self.labels[stack[0]],
                        to: self.labels[target],
                        budget,
                    });
                }
                out.push(stack.clone());
            } else {
                self.dfs_paths(c, target, budget, stack, out)?;
            }
            stack.pop();
        }
        Ok(())
    }

    pub fn all_paths(
        &self,
        i: NodeId,
        v: NodeId,
        budget: usize,
    ) -> Result<Vec<Vec<NodeId>>, GraphError> {
        let (a, b) = (self.index_of(i)?, self.index_of(v)?);
        Ok(self
            .all_paths_idx(a, b, budget)?
            .into_iter()
            .map(|p| p.into_iter().map(|k| self.labels[k]).collect())
            .collect())
    }

    /// Node sequence of the unique shortest trail from `u` to `v`.
    pub fn shortest_trail_idx(&self, u: usize, v: usize) -> Vec<usize> {
        let mut seq = vec![v];
        let mut cur = v;
        while cur != u {
            cur = self.skel_pred[u][cur];
            seq.push(cur);
        }
        seq.reverse();
        seq
    }

    pub fn trail_length_idx(&self, u: usize, v: usize) -> usize {
        self.skel_dist[u][v]
    }

    pub fn shortest_trail(&self, u: NodeId, v: NodeId) -> Result<Trail, GraphError> {
        let (a, b) = (self.index_of(u)?, self.index_of(v)?);
        Ok(self.trail_from_seq(&self.shortest_trail_idx(a, b)))
    }

    fn trail_from_seq(&self, seq: &[usize]) -> Trail {
        let mut edges = Vec::with_capacity(seq.len().saturating_sub(1));
        let mut forward = Vec::with_capacity(seq.len().saturating_sub(1));
        for w in seq.windows(2) {
            if self.has_edge_idx(w[0], w[1]) {
                edges.push(DirectedEdge::new(self.labels[w[0]], self.labels[w[1]]));
                forward.push(true);
            } else {
                edges.push(DirectedEdge::new(self.labels[w[1]], self.labels[w[0]]));
                forward.push(false);
            }
        }
        let first_fwd = forward.iter().position(|&f| f).unwrap_or(forward.len());
        let shape = if forward.iter().all(|&f| f) {
            TrailShape::Forward
        } else if forward.iter().all(|&f| !f) {
            TrailShape::Backward
        } else if forward[first_fwd..].iter().all(|&f| f) {
            TrailShape::Apex(self.labels[seq[first_fwd]])
        } else {
            TrailShape::Mixed
        };
        Trail {
            nodes: seq.iter().map(|&k| self.labels[k]).collect(),
            edges,
            forward,
            shape,
        }
    }

    /// `E_u`: edges of all shortest trails leaving `u`, oriented away from `u`.
    pub fn edges_away_from_idx(&self, u: usize) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for v in 0..self.node_count() {
            if v != u {
                out.insert((self.skel_pred[u][v], v));
            }
        }
        out
    }

    pub fn edges_away_from(&self, u: NodeId) -> Result<BTreeSet<(NodeId, NodeId)>, GraphError> {
        let ui = self.index_of(u)?;
        Ok(self
            .edges_away_from_idx(ui)
            .into_iter()
            .map(|(a, b)| (self.labels[a], self.labels[b]))
            .collect())
    }

    /// `w_{u,τ}`: the node of tournament `t` closest to `u` along trails.
    pub fn closest_tournament_node_idx(&self, u: usize, t: usize) -> usize {
        *self.tour_nodes[t]
            .iter()
            .min_by_key(|&&x| self.skel_dist[u][x])
            .expect("tournaments are nonempty")
    }

    pub fn closest_tournament_node(
        &self,
        u: NodeId,
        tau: &Tournament,
    ) -> Result<NodeId, GraphError> {
        let ui = self.index_of(u)?;
        let t = self
            .tournaments
            .iter()
            .position(|x| x == tau)
            .ok_or_else(|| GraphError::UnknownNode(tau.source()))?;
        Ok(self.labels[self.closest_tournament_node_idx(ui, t)])
    }
}

fn all_pairs_bfs(adj: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let n = adj.len();
    let mut dist = vec![vec![usize::MAX; n]; n];
    let mut pred = vec![vec![usize::MAX; n]; n];
    for s in 0..n {
        dist[s][s] = 0;
        pred[s][s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if dist[s][y] == usize::MAX {
                    dist[s][y] = dist[s][x] + 1;
                    pred[s][y] = x;
                    queue.push_back(y);
                }
            }
        }
    }
    (dist, pred)
}

fn all_pairs_bfs_directed(children: &[Vec<usize>]) -> (Vec<Vec<usize>>, Vec<Vec<Option<usize>>>) {
    let n = children.len();
    let mut dist = vec![vec![usize::MAX; n]; n];
    let mut pred = vec![vec![None; n]; n];
    for s in 0..n {
        dist[s][s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in &children[x] {
                if dist[s][y] == usize::MAX {
                    dist[s][y] = dist[s][x] + 1;
                    pred[s][y] = Some(x);
                    queue.push_back(y);
                }
            }
        }
    }
    (dist, pred)
}

fn topological_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Vertex sets of the biconnected components (blocks) of an undirected graph,
/// each sorted. Bridges are two-vertex blocks; isolated vertices yield nothing.
fn biconnected_blocks(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        disc: Vec<usize>,
        low: Vec<usize>,
        time: usize,
        edge_stack: Vec<(usize, usize)>,
        blocks: Vec<Vec<usize>>,
    }

    fn visit(st: &mut State<'_>, u: usize, parent: usize) {
        st.time += 1;
        st.disc[u] = st.time;
        st.low[u] = st.time;
        for k in 0..st.adj[u].len() {
            let w = st.adj[u][k];
            if st.disc[w] == 0 {
                st.edge_stack.push((u, w));
                visit(st, w, u);
                st.low[u] = st.low[u].min(st.low[w]);
                if st.low[w] >= st.disc[u] {
                    let mut block = BTreeSet::new();
                    while let Some((a, b)) = st.edge_stack.pop() {
                        block.insert(a);
                        block.insert(b);
                        if (a, b) == (u, w) {
                            break;
                        }
                    }
                    st.blocks.push(block.into_iter().collect());
                }
            } else if w != parent && st.disc[w] < st.disc[u] {
                st.edge_stack.push((u, w));
                st.low[u] = st.low[u].min(st.disc[w]);
            }
        }
    }

    let n = adj.len();
    let mut st = State {
        adj,
        disc: vec![0; n],
        low: vec![0; n],
        time: 0,
        edge_stack: Vec::new(),
        blocks: Vec::new(),
    };
    for s in 0..n {
        if st.disc[s] == 0 {
            visit(&mut st, s, usize::MAX);
        }
    }
    st.blocks
}
