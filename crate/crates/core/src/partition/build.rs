use std::borrow::Cow;

use super::{stride_map, EncodedNeighbor, PartitionGeometry, StrideMap};
use crate::error::Result;
use crate::graph::{Graph, VertexId};

/// Inverse-CSR slice `S_{core,sub}`: rows for every vertex of interval
/// `I_core`, neighbors restricted to sub-interval `J_sub`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubPartition {
    pub core: u32,
    pub sub: u32,
    /// `|I_core| + 1` offsets into `neighbors`.
    pub pointers: Vec<u32>,
    pub neighbors: Vec<EncodedNeighbor>,
}

impl SubPartition {
    pub fn rows(&self) -> usize {
        self.pointers.len().saturating_sub(1)
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.len()
    }

    pub fn row(&self, r: usize) -> &[EncodedNeighbor] {
        &self.neighbors[self.pointers[r] as usize..self.pointers[r + 1] as usize]
    }

    /// Inverse edges `(row vertex, in-neighbor)` in partitioned id space.
    pub fn decoded_edges<'a>(
        &'a self,
        geometry: &'a PartitionGeometry,
    ) -> impl Iterator<Item = (VertexId, VertexId)> + 'a {
        let base = geometry.interval(self.core).start;
        (0..self.rows()).flat_map(move |r| {
            self.row(r).iter().map(move |&enc| (base + r as u32, geometry.decode(enc, self.sub)))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedGraph {
    pub geometry: PartitionGeometry,
    pub stride: Option<StrideMap>,
    /// Indexed `core * (p * l) + sub`.
    pub subs: Vec<SubPartition>,
    pub num_edges: usize,
}

impl PartitionedGraph {
    pub fn sub(&self, core: u32, sub: u32) -> &SubPartition {
        &self.subs[(core * self.geometry.num_subintervals() + sub) as usize]
    }

    /// Sub-partitions of meta step `m`: `S_{i, q*l + m}` for all cores `i`, `q`.
    pub fn meta_partition(&self, m: u32) -> impl Iterator<Item = &SubPartition> + '_ {
        let g = &self.geometry;
        (0..g.p).flat_map(move |i| (0..g.p).map(move |q| self.sub(i, q * g.l + m)))
    }

    /// Maps a partitioned vertex id back to the input numbering.
    pub fn original_id(&self, v: VertexId) -> VertexId {
        self.stride.as_ref().map_or(v, |s| s.inverse[v as usize])
    }

    /// Maps an input vertex id to the partitioned numbering.
    pub fn partitioned_id(&self, v: VertexId) -> VertexId {
        self.stride.as_ref().map_or(v, |s| s.forward[v as usize])
    }

    /// All decoded inverse edges, translated back to input ids.
    pub fn decoded_inverse_edges(&self) -> Vec<(VertexId, VertexId)> {
        self.subs
            .iter()
            .flat_map(|s| s.decoded_edges(&self.geometry))
            .map(|(a, b)| (self.original_id(a), self.original_id(b)))
            .collect()
    }
}

/// Builds every sub-partition of `g` for `geometry`, optionally stride-mapping
/// the vertex ids first. Rows list their in-neighbors in ascending order.
pub fn build_partitions(
    g: &Graph,
    geometry: &PartitionGeometry,
    stride: Option<u32>,
) -> Result<PartitionedGraph> {
    assert_eq!(g.n, geometry.n, "geometry computed for a different vertex count");
    let stride = stride.map(|s| stride_map(g.n, s)).transpose()?;
    let graph: Cow<'_, Graph> = match &stride {
        Some(m) => Cow::Owned(g.permuted(&m.forward)),
        None => Cow::Borrowed(g),
    };

    let nsub = geometry.num_subintervals();
    let total = (geometry.p * nsub) as usize;
    let mut buckets: Vec<Vec<(u32, u32)>> = vec![Vec::new(); total];
    for &(u, v) in &graph.edges {
        // Original edge u -> v lands in the row of v, sourced from J(u).
        let i = geometry.owner(v);
        let j = geometry.subinterval_of(u);
        let row = v - geometry.interval(i).start;
        let local = u - geometry.subinterval(j).start;
        buckets[(i * nsub + j) as usize].push((row, local));
    }

    let mut subs = Vec::with_capacity(total);
    for (idx, mut bucket) in buckets.into_iter().enumerate() {
        let (core, sub) = (idx as u32 / nsub, idx as u32 % nsub);
        bucket.sort_unstable();
        let rows = geometry.interval_len(core) as usize;
        let mut pointers = vec![0u32; rows + 1];
        for &(row, _) in &bucket {
            pointers[row as usize + 1] += 1;
        }
        for r in 0..rows {
            pointers[r + 1] += pointers[r];
        }
        let owner = geometry.subinterval_owner(sub);
        let neighbors = bucket
            .iter()
            .map(|&(_, local)| EncodedNeighbor::new(owner, local, geometry.scratch_bits))
            .collect::<Result<Vec<_>>>()?;
        subs.push(SubPartition { core, sub, pointers, neighbors });
    }

    Ok(PartitionedGraph { geometry: geometry.clone(), stride, subs, num_edges: g.num_edges() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{rmat_generate, Graph};
    use proptest::prelude::*;

    /// Six vertices, two sub-intervals {v0..v2}, {v3..v5}; v5 pulls from v3
    /// and v4, preceded by two other rows sourced from the second interval.
    fn figure_graph() -> Graph {
        Graph::from_edges(6, [(0, 1), (3, 1), (4, 2), (3, 5), (4, 5), (1, 2)], true).unwrap()
    }

    #[test]
    fn figure_pointers_delimit_v5() {
        let g = figure_graph();
        let geo = PartitionGeometry::compute(6, 1, 2, 4).unwrap();
        assert_eq!(geo.subinterval_bounds, vec![0, 3, 6]);
        let pg = build_partitions(&g, &geo, None).unwrap();
        let s = pg.sub(0, 1);
        assert_eq!((s.pointers[5], s.pointers[6]), (2, 4));
        let v5: Vec<_> = s.row(5).iter().map(|&e| geo.decode(e, 1)).collect();
        assert_eq!(v5, vec![3, 4]);
    }

    #[test]
    fn empty_graph_partitions() {
        let g = Graph::empty(10, true);
        let geo = PartitionGeometry::compute(10, 2, 2, 4).unwrap();
        let pg = build_partitions(&g, &geo, None).unwrap();
        assert_eq!(pg.subs.len(), (geo.p * geo.num_subintervals()) as usize);
        for s in &pg.subs {
            assert!(s.pointers.iter().all(|&x| x == 0));
            assert!(s.neighbors.is_empty());
        }
    }

    #[test]
    fn meta_partition_membership() {
        let g = rmat_generate(6, 4, 2);
        let geo = PartitionGeometry::compute(g.n, 2, 4, 16).unwrap();
        assert_eq!(geo.l, 2);
        let pg = build_partitions(&g, &geo, None).unwrap();
        let m1: Vec<_> = pg.meta_partition(1).map(|s| (s.core, s.sub)).collect();
        assert_eq!(m1, vec![(0, 1), (0, 3), (1, 1), (1, 3)]);
    }

    fn sorted(mut v: Vec<(u32, u32)>) -> Vec<(u32, u32)> {
        v.sort_unstable();
        v
    }

    proptest! {
        #[test]
        fn decoded_edges_cover_inverse_exactly(
            n in 1u32..300,
            raw in proptest::collection::vec((0u32..300, 0u32..300), 0..600),
            p_log in 0u32..3,
            cap_log in 2u32..7,
            stride in proptest::option::of(1u32..120),
        ) {
            let g = Graph::from_edges(n, raw.into_iter().map(|(a, b)| (a % n, b % n)), true).unwrap();
            let geo = PartitionGeometry::compute(n, 1 << p_log, 4, 1 << cap_log).unwrap();
            let pg = build_partitions(&g, &geo, stride).unwrap();
            prop_assert_eq!(sorted(pg.decoded_inverse_edges()), sorted(g.invert_edges().edges));
            for s in &pg.subs {
                prop_assert_eq!(s.pointers[0], 0);
                prop_assert_eq!(*s.pointers.last().unwrap() as usize, s.neighbors.len());
                prop_assert!(s.pointers.windows(2).all(|w| w[0] <= w[1]));
                let j = geo.subinterval(s.sub);
                for (_, u) in s.decoded_edges(&geo) {
                    prop_assert!(j.contains(&u));
                }
            }
        }
    }
}
