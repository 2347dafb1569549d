//! Two-dimensional partitioning of the inverse edge set.
//!
//! The vertex range is cut into `p` intervals `I_q` (one per core / memory
//! channel), and every interval into `l` sub-intervals `J_j` that fit in one
//! core's label scratch pad. Sub-partition `S_{i,j}` holds the inverse-CSR
//! rows of the vertices in `I_i`, restricted to in-neighbors from `J_j`.
//! Neighbor indices are rewritten so that the top bits select the core owning
//! `J_j` and the low `scratch_bits` bits are the offset inside `J_j`.

mod analysis;
mod build;
mod io;
mod stride;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VertexId;

pub use analysis::{balance_report, footprint_report, BalanceReport, FootprintReport};
pub use build::{build_partitions, PartitionedGraph, SubPartition};
pub use io::{dump_partitions, load_partitions};
pub use stride::{stride_map, StrideMap};

/// Stride used by the stride mapping when none is given explicitly.
pub const DEFAULT_STRIDE: u32 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionGeometry {
    pub n: u32,
    /// Cores (= memory channels).
    pub p: u32,
    /// Sub-intervals per core.
    pub l: u32,
    /// Lanes / scratch pad banks per core.
    pub e: u32,
    pub scratch_bits: u32,
    /// `p + 1` fence posts.
    pub interval_bounds: Vec<VertexId>,
    /// `p * l + 1` fence posts.
    pub subinterval_bounds: Vec<VertexId>,
}

/// Packed neighbor index: core id above bit `scratch_bits`, local offset below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EncodedNeighbor(pub u32);

impl EncodedNeighbor {
    pub fn new(core: u32, local: u32, scratch_bits: u32) -> Result<Self> {
        if scratch_bits < 32 && local >> scratch_bits != 0 {
            return Err(Error::EncodingOverflow { local, bits: scratch_bits });
        }
        let core_part = core.checked_shl(scratch_bits).unwrap_or(0);
        Ok(Self(core_part | local))
    }

    #[inline]
    pub fn core(self, scratch_bits: u32) -> u32 {
        self.0.checked_shr(scratch_bits).unwrap_or(0)
    }

    #[inline]
    pub fn local(self, scratch_bits: u32) -> u32 {
        if scratch_bits >= 32 {
            self.0
        } else {
            self.0 & ((1u32 << scratch_bits) - 1)
        }
    }

    #[inline]
    pub fn bank(self, scratch_bits: u32, lanes: u32) -> u32 {
        self.local(scratch_bits) % lanes
    }
}

fn is_pow2(x: u32) -> bool {
    x != 0 && x & (x - 1) == 0
}

/// Splits `[start, start + len)` into `parts` contiguous ranges whose sizes
/// differ by at most one; the remainder goes to the lowest-indexed ranges.
fn split_range(start: u32, len: u32, parts: u32, out: &mut Vec<u32>) {
    let base = len / parts;
    let rem = len % parts;
    let mut at = start;
    for k in 0..parts {
        at += base + u32::from(k < rem);
        out.push(at);
    }
}

impl PartitionGeometry {
    /// Geometry for `n` vertices over `p` cores with `e` banks each, where a
    /// core's scratch pad holds `scratch_capacity` labels.
    pub fn compute(n: u32, p: u32, e: u32, scratch_capacity: u32) -> Result<Self> {
        if !is_pow2(p) {
            return Err(Error::Config(format!("core count {p} is not a power of two")));
        }
        if !is_pow2(e) || e > 64 {
            return Err(Error::Config(format!("lane count {e} must be a power of two <= 64")));
        }
        if !is_pow2(scratch_capacity) || scratch_capacity < e {
            return Err(Error::Config(format!(
                "scratch capacity {scratch_capacity} must be a power of two >= lanes ({e})"
            )));
        }
        let scratch_bits = scratch_capacity.trailing_zeros();
        if scratch_bits + p.trailing_zeros() > 32 {
            return Err(Error::Config("encoded neighbor index exceeds 32 bits".into()));
        }
        let per_core = n.div_ceil(p);
        let l = per_core.div_ceil(scratch_capacity).max(1);

        let mut interval_bounds = vec![0];
        split_range(0, n, p, &mut interval_bounds);
        let mut subinterval_bounds = vec![0];
        for q in 0..p as usize {
            let (lo, hi) = (interval_bounds[q], interval_bounds[q + 1]);
            split_range(lo, hi - lo, l, &mut subinterval_bounds);
        }
        Ok(Self { n, p, l, e, scratch_bits, interval_bounds, subinterval_bounds })
    }

    pub fn num_subintervals(&self) -> u32 {
        self.p * self.l
    }

    pub fn interval(&self, q: u32) -> std::ops::Range<u32> {
        self.interval_bounds[q as usize]..self.interval_bounds[q as usize + 1]
    }

    pub fn subinterval(&self, j: u32) -> std::ops::Range<u32> {
        self.subinterval_bounds[j as usize]..self.subinterval_bounds[j as usize + 1]
    }

    pub fn interval_len(&self, q: u32) -> u32 {
        let r = self.interval(q);
        r.end - r.start
    }

    pub fn subinterval_len(&self, j: u32) -> u32 {
        let r = self.subinterval(j);
        r.end - r.start
    }

    /// Core whose interval contains `v`.
    pub fn owner(&self, v: VertexId) -> u32 {
        (self.interval_bounds.partition_point(|&b| b <= v) - 1) as u32
    }

    /// Sub-interval containing `v`.
    pub fn subinterval_of(&self, v: VertexId) -> u32 {
        (self.subinterval_bounds.partition_point(|&b| b <= v) - 1) as u32
    }

    /// Core owning sub-interval `j`.
    pub fn subinterval_owner(&self, j: u32) -> u32 {
        j / self.l
    }

    /// Rewrites a global vertex id into its packed neighbor index.
    pub fn encode(&self, v: VertexId) -> Result<EncodedNeighbor> {
        if v >= self.n {
            return Err(Error::VertexOutOfRange { vertex: v as u64, n: self.n });
        }
        let j = self.subinterval_of(v);
        let local = v - self.subinterval_bounds[j as usize];
        EncodedNeighbor::new(self.subinterval_owner(j), local, self.scratch_bits)
    }

    /// Inverse of [`encode`](Self::encode) given the sub-interval the index
    /// was produced for.
    pub fn decode(&self, enc: EncodedNeighbor, j: u32) -> VertexId {
        self.subinterval_bounds[j as usize] + enc.local(self.scratch_bits)
    }
}
