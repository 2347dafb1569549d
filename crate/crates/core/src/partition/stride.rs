use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Vertex renumbering with a constant stride.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrideMap {
    pub stride: u32,
    /// Original id -> new id.
    pub forward: Vec<VertexId>,
    /// New id -> original id.
    pub inverse: Vec<VertexId>,
}

/// Enumerates `v_0, v_s, v_2s, ...`, then `v_1, v_{1+s}, ...`, and assigns
/// the k-th enumerated original id the new id `k`.
pub fn stride_map(n: u32, stride: u32) -> Result<StrideMap> {
    if stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    let mut inverse = Vec::with_capacity(n as usize);
    for offset in 0..stride.min(n) {
        inverse.extend((offset..n).step_by(stride as usize));
    }
    let mut forward = vec![0; n as usize];
    for (new, &old) in inverse.iter().enumerate() {
        forward[old as usize] = new as u32;
    }
    Ok(StrideMap { stride, forward, inverse })
}
