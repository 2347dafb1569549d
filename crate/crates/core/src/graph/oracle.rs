//! Sequential reference results for BFS, WCC and PageRank.

use std::collections::VecDeque;

use super::{Graph, VertexId, INF};
use crate::error::{Error, Result};

/// Hop distance from `root` along directed edges; unreachable vertices get
/// [`INF`].
pub fn oracle_bfs(g: &Graph, root: VertexId) -> Result<Vec<u32>> {
    if root >= g.n {
        return Err(Error::VertexOutOfRange { vertex: root as u64, n: g.n });
    }
    let adj = adjacency(g.n, g.edges.iter().copied());
    let mut dist = vec![INF; g.n as usize];
    dist[root as usize] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let next = dist[u as usize] + 1;
        for &v in &adj[u as usize] {
            if dist[v as usize] == INF {
                dist[v as usize] = next;
                queue.push_back(v);
            }
        }
    }
    Ok(dist)
}

/// Smallest vertex id of each vertex's weakly-connected component.
pub fn oracle_wcc(g: &Graph) -> Vec<u32> {
    let both = g.edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]);
    let adj = adjacency(g.n, both);
    let mut label = vec![INF; g.n as usize];
    let mut stack = Vec::new();
    // Ascending scan: the first vertex reaching a component is its minimum.
    for start in 0..g.n {
        if label[start as usize] != INF {
            continue;
        }
        label[start as usize] = start;
        stack.push(start);
        while let Some(u) = stack.pop() {
            for &v in &adj[u as usize] {
                if label[v as usize] == INF {
                    label[v as usize] = start;
                    stack.push(v);
                }
            }
        }
    }
    label
}

/// Synchronous PageRank: `iters` rounds of
/// `p(i) = (1-d)/n + d * sum_{j -> i} p(j) / outdeg(j)` from `p = 1/n`.
pub fn oracle_pr(g: &Graph, damping: f64, iters: u32) -> Result<Vec<f64>> {
    if g.n == 0 {
        return Err(Error::EmptyGraph);
    }
    let n = g.n as usize;
    let out_degree = g.degrees().out_degree;
    let mut rank = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..iters {
        next.iter_mut().for_each(|x| *x = 0.0);
        for &(j, i) in &g.edges {
            next[i as usize] += rank[j as usize] / out_degree[j as usize] as f64;
        }
        for x in next.iter_mut() {
            *x = (1.0 - damping) / n as f64 + damping * *x;
        }
        std::mem::swap(&mut rank, &mut next);
    }
    Ok(rank)
}

fn adjacency(n: u32, edges: impl Iterator<Item = (VertexId, VertexId)>) -> Vec<Vec<VertexId>> {
    let mut adj = vec![Vec::new(); n as usize];
    for (u, v) in edges {
        adj[u as usize].push(v);
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{chain, ring, rmat_generate};
    use proptest::prelude::*;

    /// Bellman-Ford style relaxation: an implementation path independent of
    /// the queue-based BFS above.
    fn relaxation_bfs(g: &Graph, root: u32) -> Vec<u32> {
        let mut dist = vec![INF; g.n as usize];
        dist[root as usize] = 0;
        loop {
            let mut changed = false;
            for &(u, v) in &g.edges {
                let du = dist[u as usize];
                if du != INF && du + 1 < dist[v as usize] {
                    dist[v as usize] = du + 1;
                    changed = true;
                }
            }
            if !changed {
                return dist;
            }
        }
    }

    fn union_find_wcc(g: &Graph) -> Vec<u32> {
        fn find(p: &mut [u32], x: u32) -> u32 {
            let mut r = x;
            while p[r as usize] != r {
                r = p[r as usize];
            }
            let mut c = x;
            while p[c as usize] != r {
                let next = p[c as usize];
                p[c as usize] = r;
                c = next;
            }
            r
        }
        let mut parent: Vec<u32> = (0..g.n).collect();
        for &(u, v) in &g.edges {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            // Keep the smaller id as root so roots are component minima.
            if a < b {
                parent[b as usize] = a;
            } else if b < a {
                parent[a as usize] = b;
            }
        }
        (0..g.n).map(|v| find(&mut parent, v)).collect()
    }

    #[test]
    fn bfs_chain() {
        assert_eq!(oracle_bfs(&chain(4), 0).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn bfs_isolated_is_inf() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3)], true).unwrap();
        assert_eq!(oracle_bfs(&g, 0).unwrap()[4], INF);
    }

    #[test]
    fn bfs_root_out_of_range() {
        assert!(oracle_bfs(&chain(3), 3).is_err());
    }

    #[test]
    fn bfs_matches_relaxation_on_rmat() {
        let g = rmat_generate(8, 4, 1);
        assert_eq!(oracle_bfs(&g, 0).unwrap(), relaxation_bfs(&g, 0));
    }

    #[test]
    fn wcc_small_cases() {
        let g = Graph::from_edges(4, [(0, 1)], true).unwrap();
        assert_eq!(oracle_wcc(&g), vec![0, 0, 2, 3]);
        assert_eq!(oracle_wcc(&Graph::empty(3, true)), vec![0, 1, 2]);
    }

    #[test]
    fn wcc_matches_union_find_on_rmat() {
        let g = rmat_generate(8, 2, 3);
        assert_eq!(oracle_wcc(&g), union_find_wcc(&g));
    }

    #[test]
    fn pr_two_cycle_fixed_point() {
        let g = ring(2);
        for iters in [0, 1, 5, 16] {
            for r in oracle_pr(&g, 0.85, iters).unwrap() {
                assert!((r - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pr_single_vertex() {
        let r = oracle_pr(&Graph::empty(1, true), 0.85, 1).unwrap();
        assert!((r[0] - 0.15).abs() < 1e-15);
        assert!(matches!(oracle_pr(&Graph::empty(0, true), 0.85, 1), Err(Error::EmptyGraph)));
    }

    #[test]
    fn pr_star_two_iterations() {
        // 0 -> {1, 2, 3}, evaluated by hand round by round.
        let g = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)], true).unwrap();
        let d = 0.85;
        let base = (1.0 - d) / 4.0;
        let p0 = [0.25; 4];
        let p1 = [base, base + d * p0[0] / 3.0, base + d * p0[0] / 3.0, base + d * p0[0] / 3.0];
        let p2 = [base, base + d * p1[0] / 3.0, base + d * p1[0] / 3.0, base + d * p1[0] / 3.0];
        let got = oracle_pr(&g, d, 2).unwrap();
        for (a, b) in got.iter().zip(p2) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((p2[1] - 0.048125).abs() < 1e-12);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (2u32..60).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n), 0..150)
                .prop_map(move |e| Graph::from_edges(n, e, true).unwrap())
        })
    }

    proptest! {
        #[test]
        fn bfs_triangle_property(g in arb_graph()) {
            let d = oracle_bfs(&g, 0).unwrap();
            for &(u, v) in &g.edges {
                if d[u as usize] != INF {
                    prop_assert!(d[v as usize] <= d[u as usize] + 1);
                }
            }
        }

        #[test]
        fn wcc_labels_idempotent(g in arb_graph()) {
            let l = oracle_wcc(&g);
            for v in 0..g.n as usize {
                prop_assert_eq!(l[l[v] as usize], l[v]);
            }
        }

        #[test]
        fn pr_conserves_rank_without_sinks(n in 2u32..40, extra in proptest::collection::vec((0u32..40, 0u32..40), 0..80)) {
            // A ring guarantees every vertex has an out-edge.
            let edges = (0..n).map(|v| (v, (v + 1) % n))
                .chain(extra.into_iter().map(|(a, b)| (a % n, b % n)));
            let g = Graph::from_edges(n, edges, true).unwrap();
            let total: f64 = oracle_pr(&g, 0.85, 10).unwrap().iter().sum();
            prop_assert!(total <= 1.0 + 1e-9);
        }
    }
}
