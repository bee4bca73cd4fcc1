//! Bundled graphs.

use crate::io::{parse_edge_list, parse_labels, EdgeListGraph};
use crate::sbm::Partition;

const KARATE_EDGES: &str = include_str!("../data/karate.edges");
const KARATE_LABELS: &str = include_str!("../data/karate.labels");

/// Zachary's karate club (34 nodes, 78 edges) with the two-faction split.
pub fn karate() -> (EdgeListGraph, Partition) {
    let graph = parse_edge_list(KARATE_EDGES).expect("bundled edge list parses");
    let labels = parse_labels(KARATE_LABELS, &graph).expect("bundled labels parse");
    (graph, labels)
}

/// Raw edge-list text of the karate club graph.
pub fn karate_edge_list() -> &'static str {
    KARATE_EDGES
}

/// Raw label text of the karate club graph.
pub fn karate_labels() -> &'static str {
    KARATE_LABELS
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn karate_shape() {
        let (g, labels) = karate();
        assert_eq!(g.num_nodes(), 34);
        assert_eq!(g.num_edges(), 78);
        assert_eq!(labels.num_clusters(), 2);
        let a = g.adjacency().unwrap();
        assert!((a.mean_degree() - 156.0 / 34.0).abs() < 1e-12);
    }
}
