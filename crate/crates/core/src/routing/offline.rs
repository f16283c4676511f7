//! Offline route evaluation on static graph snapshots.

use std::collections::BTreeMap;

use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};

use crate::NodeId;

use super::cost::{score_route, select_route, CostError, CostPolicy, RouteScore};
use super::request::{AnnotatedRoute, HopAnnotation};

/// Per-node state of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeProfile {
    pub residual: f64,
    pub initial: f64,
    pub rx_energy: f64,
    pub overhear_energy: f64,
    pub neighbors: u32,
    pub unstable: bool,
    pub buffered: u32,
}

/// Undirected graph whose links carry the energy needed to push one packet
/// across them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyGraph {
    nodes: Vec<NodeProfile>,
    adjacency: Vec<BTreeMap<NodeId, f64>>,
}

impl EnergyGraph {
    pub fn new(nodes: Vec<NodeProfile>) -> Self {
        let n = nodes.len();
        EnergyGraph { nodes, adjacency: vec![BTreeMap::new(); n] }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn profile(&self, id: NodeId) -> &NodeProfile {
        &self.nodes[id]
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId, tx_energy: f64) {
        assert!(a != b && a < self.nodes.len() && b < self.nodes.len());
        self.adjacency[a].insert(b, tx_energy);
        self.adjacency[b].insert(a, tx_energy);
    }

    pub fn link_energy(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.adjacency.get(a)?.get(&b).copied()
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[id].keys().copied()
    }

    /// Sets each node's neighbor count to its degree.
    pub fn with_degree_neighbor_counts(mut self) -> Self {
        for (id, profile) in self.nodes.iter_mut().enumerate() {
            profile.neighbors = self.adjacency[id].len() as u32;
        }
        self
    }

    /// Every simple path from `source` to `destination`, in depth-first order
    /// with neighbors visited by ascending id.
    pub fn simple_paths(&self, source: NodeId, destination: NodeId) -> Vec<Vec<NodeId>> {
        let mut out = Vec::new();
        if source == destination {
            return out;
        }
        let mut on_path = vec![false; self.nodes.len()];
        let mut path = vec![source];
        on_path[source] = true;
        self.extend_paths(destination, &mut path, &mut on_path, &mut out);
        out
    }

    fn extend_paths(
        &self,
        destination: NodeId,
        path: &mut Vec<NodeId>,
        on_path: &mut [bool],
        out: &mut Vec<Vec<NodeId>>,
    ) {
        let tail = *path.last().expect("path is never empty");
        for next in self.neighbors(tail) {
            if on_path[next] {
                continue;
            }
            path.push(next);
            if next == destination {
                out.push(path.clone());
            } else {
                on_path[next] = true;
                self.extend_paths(destination, path, on_path, out);
                on_path[next] = false;
            }
            path.pop();
        }
    }

    /// Annotates a node path (source first, destination last). Returns `None`
    /// if two consecutive nodes are not linked.
    pub fn annotate(&self, path: &[NodeId]) -> Option<AnnotatedRoute> {
        let (&destination, senders) = path.split_last()?;
        let mut hops = Vec::with_capacity(senders.len());
        for (i, &node) in senders.iter().enumerate() {
            let p = &self.nodes[node];
            hops.push(HopAnnotation {
                node,
                residual: p.residual,
                initial: p.initial,
                tx_energy: self.link_energy(node, path[i + 1])?,
                rx_energy: p.rx_energy,
                overhear_energy: p.overhear_energy,
                neighbors: p.neighbors,
                unstable: p.unstable,
                buffered: p.buffered,
            });
        }
        Some(AnnotatedRoute { hops, destination })
    }

    pub fn candidate_routes(&self, source: NodeId, destination: NodeId) -> Vec<AnnotatedRoute> {
        self.simple_paths(source, destination)
            .iter()
            .map(|p| self.annotate(p).expect("enumerated paths follow links"))
            .collect()
    }

    /// Best simple path under `policy`, ties going to the path enumerated
    /// first.
    pub fn best_route(
        &self,
        policy: &CostPolicy,
        source: NodeId,
        destination: NodeId,
    ) -> Result<Option<(Vec<NodeId>, RouteScore)>, CostError> {
        let candidates = self.candidate_routes(source, destination);
        let Some(i) = select_route(policy, &candidates)? else {
            return Ok(None);
        };
        let score = score_route(policy, &candidates[i])?;
        Ok(Some((candidates[i].path(), score)))
    }

    /// Minimum total transmission energy path by shortest-path search.
    pub fn min_energy_route(&self, source: NodeId, destination: NodeId) -> Option<(f64, Vec<NodeId>)> {
        let mut g: UnGraph<(), f64> = UnGraph::with_capacity(self.nodes.len(), 0);
        let idx: Vec<NodeIndex> = (0..self.nodes.len()).map(|_| g.add_node(())).collect();
        for (a, links) in self.adjacency.iter().enumerate() {
            for (&b, &e) in links.range(a + 1..) {
                g.add_edge(idx[a], idx[b], e);
            }
        }
        let (cost, path) = astar(
            &g,
            idx[source],
            |n| n == idx[destination],
            |e| *e.weight(),
            |_| 0.0,
        )?;
        Some((cost, path.into_iter().map(|n| n.index()).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(residual: f64) -> NodeProfile {
        NodeProfile {
            residual,
            initial: 10.0,
            rx_energy: 0.1,
            overhear_energy: 0.1,
            neighbors: 0,
            unstable: false,
            buffered: 0,
        }
    }

    /// 0 - 1 - 3 and 0 - 2 - 3 plus the shortcut 1 - 2.
    fn diamond() -> EnergyGraph {
        let mut g = EnergyGraph::new((0..4).map(|i| profile(1.0 + i as f64)).collect());
        g.add_link(0, 1, 0.2);
        g.add_link(0, 2, 0.5);
        g.add_link(1, 3, 0.2);
        g.add_link(2, 3, 0.1);
        g.add_link(1, 2, 0.05);
        g.with_degree_neighbor_counts()
    }

    #[test]
    fn enumerates_in_lexicographic_dfs_order() {
        let paths = diamond().simple_paths(0, 3);
        assert_eq!(
            paths,
            vec![vec![0, 1, 2, 3], vec![0, 1, 3], vec![0, 2, 1, 3], vec![0, 2, 3]]
        );
        assert!(diamond().simple_paths(2, 2).is_empty());
    }

    #[test]
    fn mtpr_matches_shortest_path() {
        let g = diamond();
        let (path, score) = g.best_route(&CostPolicy::Mtpr, 0, 3).unwrap().unwrap();
        let (cost, sp) = g.min_energy_route(0, 3).unwrap();
        assert_eq!(path, vec![0, 1, 2, 3]);
        assert_eq!(sp, path);
        assert!((cost - score.value).abs() < 1e-12);
    }

    #[test]
    fn mmbcr_avoids_weakest_relay() {
        let g = diamond();
        // Node 1 has residual 2, node 2 residual 3.
        let (path, _) = g.best_route(&CostPolicy::Mmbcr, 0, 3).unwrap().unwrap();
        assert_eq!(path, vec![0, 2, 3]);
    }

    #[test]
    fn disconnected_pair_has_no_route() {
        let g = EnergyGraph::new(vec![profile(1.0); 3]);
        assert!(g.best_route(&CostPolicy::Mtpr, 0, 2).unwrap().is_none());
        assert!(g.min_energy_route(0, 2).is_none());
    }
}
