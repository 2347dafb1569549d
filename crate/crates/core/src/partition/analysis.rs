use serde::{Deserialize, Serialize};

use super::{PartitionGeometry, PartitionedGraph};
use crate::error::{Error, Result};

const WORD_BYTES: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintReport {
    pub vertices: u32,
    pub edges: usize,
    pub subpartitions: u32,
    pub pointer_words: u64,
    pub neighbor_words: u64,
    pub csr_bytes_per_edge: f64,
    pub edge_list_bytes_per_edge: f64,
}

/// Bytes per edge of the partitioned inverse CSR (32-bit pointers and
/// neighbor indices, one pointer array per sub-partition) against a plain
/// 32-bit edge list.
pub fn footprint_report(num_edges: usize, geometry: &PartitionGeometry) -> Result<FootprintReport> {
    if num_edges == 0 {
        return Err(Error::NoEdges);
    }
    let (p, l) = (geometry.p as u64, geometry.l as u64);
    // Every core stores p*l pointer arrays of |I_i| + 1 entries.
    let pointer_words = p * l * (geometry.n as u64 + p);
    let neighbor_words = num_edges as u64;
    let csr = WORD_BYTES * (neighbor_words + pointer_words) as f64 / num_edges as f64;
    Ok(FootprintReport {
        vertices: geometry.n,
        edges: num_edges,
        subpartitions: (p * p * l) as u32,
        pointer_words,
        neighbor_words,
        csr_bytes_per_edge: csr,
        edge_list_bytes_per_edge: 2.0 * WORD_BYTES,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub edges_per_core: Vec<u64>,
    pub edges_per_meta_step: Vec<u64>,
    /// `max / max(min, 1)` over cores.
    pub imbalance: f64,
}

pub fn balance_report(pg: &PartitionedGraph) -> BalanceReport {
    let g = &pg.geometry;
    let mut edges_per_core = vec![0u64; g.p as usize];
    let mut edges_per_meta_step = vec![0u64; g.l as usize];
    for s in &pg.subs {
        edges_per_core[s.core as usize] += s.num_edges() as u64;
        edges_per_meta_step[(s.sub % g.l) as usize] += s.num_edges() as u64;
    }
    let max = edges_per_core.iter().copied().max().unwrap_or(0);
    let min = edges_per_core.iter().copied().min().unwrap_or(0).max(1);
    BalanceReport { edges_per_core, edges_per_meta_step, imbalance: max as f64 / min as f64 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{local_star, ring, Graph};
    use crate::partition::{build_partitions, DEFAULT_STRIDE};

    #[test]
    fn dense_graph_almost_halves() {
        // Average degree 643 on a single partition.
        let n = 1000u32;
        let geo = PartitionGeometry::compute(n, 1, 16, 1 << 21).unwrap();
        let r = footprint_report(643 * n as usize, &geo).unwrap();
        let expected = 4.0 + 4.0 * (n as f64 + 1.0) / (643.0 * n as f64);
        assert!((r.csr_bytes_per_edge - expected).abs() < 1e-12);
        assert!((r.csr_bytes_per_edge - 4.006).abs() < 1e-3);
        assert_eq!(r.edge_list_bytes_per_edge, 8.0);
    }

    #[test]
    fn degree_one_has_no_saving() {
        let n = 100_000u32;
        let geo = PartitionGeometry::compute(n, 1, 16, 1 << 21).unwrap();
        let r = footprint_report(n as usize, &geo).unwrap();
        assert!((r.csr_bytes_per_edge - 8.0).abs() < 1e-3);
    }

    #[test]
    fn monotone_in_average_degree() {
        let n = 4096;
        let geo = PartitionGeometry::compute(n, 4, 16, 1 << 10).unwrap();
        let mut last = f64::INFINITY;
        for deg in [1usize, 2, 4, 8, 16, 64, 256] {
            let b = footprint_report(deg * n as usize, &geo).unwrap().csr_bytes_per_edge;
            assert!(b <= last);
            last = b;
        }
    }

    #[test]
    fn zero_edges_rejected() {
        let geo = PartitionGeometry::compute(4, 1, 4, 4).unwrap();
        assert!(matches!(footprint_report(0, &geo), Err(Error::NoEdges)));
    }

    #[test]
    fn ring_is_balanced() {
        let g = ring(64);
        let geo = PartitionGeometry::compute(64, 2, 4, 64).unwrap();
        let r = balance_report(&build_partitions(&g, &geo, None).unwrap());
        assert_eq!(r.edges_per_core, vec![32, 32]);
        assert_eq!(r.imbalance, 1.0);
    }

    #[test]
    fn star_skew_and_stride_relief() {
        let g = local_star(1024, 255);
        let geo = PartitionGeometry::compute(g.n, 2, 16, 1024).unwrap();
        let plain = balance_report(&build_partitions(&g, &geo, None).unwrap());
        // All 2 * 255 edges have both endpoints in the first interval.
        assert_eq!(plain.edges_per_core, vec![510, 0]);
        assert_eq!(plain.imbalance, 510.0);
        let mapped = balance_report(&build_partitions(&g, &geo, Some(DEFAULT_STRIDE)).unwrap());
        assert_eq!(mapped.edges_per_core.iter().sum::<u64>(), 510);
        assert!(mapped.imbalance < plain.imbalance);
    }

    #[test]
    fn meta_step_counts_sum_to_edges() {
        let g = Graph::from_edges(8, (0..8).flat_map(|u| (0..8).map(move |v| (u, v))), true).unwrap();
        let geo = PartitionGeometry::compute(8, 2, 2, 2).unwrap();
        let r = balance_report(&build_partitions(&g, &geo, None).unwrap());
        assert_eq!(r.edges_per_meta_step.len(), 2);
        assert_eq!(r.edges_per_meta_step.iter().sum::<u64>(), 56);
    }
}
