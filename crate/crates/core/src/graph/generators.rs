//! Small deterministic graph families used by the verification suites.

use super::Graph;

/// Directed path `0 -> 1 -> ... -> n-1`.
pub fn chain(n: u32) -> Graph {
    let edges = (1..n).map(|v| (v - 1, v));
    Graph::from_edges(n, edges, true).expect("chain ids in range")
}

/// Directed cycle over `n` vertices.
pub fn ring(n: u32) -> Graph {
    let edges = (0..n).map(|v| (v, (v + 1) % n));
    Graph::from_edges(n, edges, true).expect("ring ids in range")
}

/// Undirected star: vertex 0 connected to every other vertex.
pub fn star(n: u32) -> Graph {
    local_star(n, n.saturating_sub(1))
}

/// Undirected star whose `leaves` leaves are the ids right after the center
/// (`1..=leaves`), embedded in an id space of `n` vertices. The remaining
/// vertices are isolated, so all edges crowd into the low end of the id range.
pub fn local_star(n: u32, leaves: u32) -> Graph {
    assert!(leaves < n.max(1), "star needs room for its leaves");
    let edges = (1..=leaves).map(|leaf| (0, leaf));
    Graph::from_edges(n, edges, false).expect("star ids in range")
}

/// Undirected star with `hubs` centers `0..hubs`, each joined to every
/// other vertex. One hub is [`star`]; the hubs crowd into the low ids.
pub fn multi_star(n: u32, hubs: u32) -> Graph {
    assert!(hubs < n.max(1), "multi-star needs at least one leaf");
    let edges = (0..hubs).flat_map(move |h| (hubs..n).map(move |leaf| (h, leaf)));
    Graph::from_edges(n, edges, false).expect("star ids in range")
}

/// Two disjoint undirected chains: `0..a` and `a..a+b`.
pub fn two_components(a: u32, b: u32) -> Graph {
    let first = (1..a).map(|v| (v - 1, v));
    let second = (a + 1..a + b).map(|v| (v - 1, v));
    Graph::from_edges(a + b, first.chain(second), false).expect("component ids in range")
}
