//! Graph ingestion and normalization.
//!
//! A [`Graph`] is always normalized: no self-loops, no duplicate `(src, dst)`
//! pairs, and every undirected input edge is present in both directions.

mod generators;
pub mod oracle;
mod rmat;

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generators::{chain, local_star, multi_star, ring, star, two_components};
pub use rmat::{rmat_generate, RmatParams};

/// Vertex identifier.
pub type VertexId = u32;

/// Sentinel for unreachable vertices; the largest 32-bit value so that a
/// min-reduce over labels is monotone.
pub const INF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: u32,
    pub edges: Vec<(VertexId, VertexId)>,
    pub directed: bool,
}

/// Out-degree per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeTable {
    pub out_degree: Vec<u32>,
}

/// Old-to-new vertex id mapping produced by [`Graph::vertex_range_compress`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexRemap {
    pub old_to_new: Vec<Option<VertexId>>,
    pub new_to_old: Vec<VertexId>,
}

impl VertexRemap {
    pub fn is_identity(&self) -> bool {
        self.new_to_old.len() == self.old_to_new.len()
            && self.new_to_old.iter().enumerate().all(|(i, &v)| i as u32 == v)
    }
}

impl Graph {
    pub fn empty(n: u32, directed: bool) -> Self {
        Self { n, edges: Vec::new(), directed }
    }

    /// Builds a normalized graph from raw pairs: self-loops dropped, duplicates
    /// removed (first occurrence wins), undirected input symmetrized.
    pub fn from_edges<I>(n: u32, edges: I, directed: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for (u, v) in edges {
            for &(a, b) in &[(u, v), (v, u)][..if directed { 1 } else { 2 }] {
                if a >= n || b >= n {
                    return Err(Error::VertexOutOfRange { vertex: a.max(b) as u64, n });
                }
                if a != b && seen.insert(pack(a, b)) {
                    out.push((a, b));
                }
            }
        }
        Ok(Self { n, edges: out, directed })
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> DegreeTable {
        let mut out_degree = vec![0u32; self.n as usize];
        for &(u, _) in &self.edges {
            out_degree[u as usize] += 1;
        }
        DegreeTable { out_degree }
    }

    /// Reverses every edge. The result keeps `n` and the edge order.
    pub fn invert_edges(&self) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| (v, u)).collect(),
            directed: self.directed,
        }
    }

    /// Undirected view of the graph: every edge present in both directions.
    pub fn symmetrized(&self) -> Graph {
        Graph::from_edges(self.n, self.edges.iter().copied(), false)
            .expect("edges of a valid graph stay in range")
    }

    /// Relabels vertex `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[VertexId]) -> Graph {
        debug_assert_eq!(perm.len(), self.n as usize);
        Graph {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| (perm[u as usize], perm[v as usize])).collect(),
            directed: self.directed,
        }
    }

    /// Drops every vertex without outgoing edges (and the edges pointing at
    /// them), renumbering the rest densely in their original order.
    ///
    /// This changes the semantics of traversal problems: dropped vertices
    /// never receive labels.
    pub fn vertex_range_compress(&self) -> (Graph, VertexRemap) {
        let degrees = self.degrees();
        let mut old_to_new = vec![None; self.n as usize];
        let mut new_to_old = Vec::new();
        for (v, &d) in degrees.out_degree.iter().enumerate() {
            if d > 0 {
                old_to_new[v] = Some(new_to_old.len() as u32);
                new_to_old.push(v as u32);
            }
        }
        let edges = self
            .edges
            .iter()
            .filter_map(|&(u, v)| Some((old_to_new[u as usize]?, old_to_new[v as usize]?)))
            .collect();
        let graph = Graph { n: new_to_old.len() as u32, edges, directed: self.directed };
        (graph, VertexRemap { old_to_new, new_to_old })
    }

    /// Text form accepted by [`parse_edge_list`]: a `% n m` header followed by
    /// one `src dst` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::with_capacity(self.edges.len() * 12 + 32);
        let _ = writeln!(s, "# directed={}", self.directed);
        let _ = writeln!(s, "% {} {}", self.n, self.edges.len());
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }
}

fn pack(u: u32, v: u32) -> u64 {
    (u as u64) << 32 | v as u64
}

/// Parses a whitespace-separated edge list.
///
/// Lines starting with `#` are comments. An optional `% n m` header fixes the
/// vertex count; otherwise `n` is one past the largest id seen.
pub fn parse_edge_list(text: &str, directed: bool) -> Result<Graph> {
    let mut header_n: Option<u32> = None;
    let mut raw = Vec::new();
    let mut max_id: Option<u32> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('%') {
            let n = rest
                .split_whitespace()
                .next()
                .ok_or_else(|| parse_err(lineno, "header needs a vertex count"))?;
            header_n = Some(n.parse().map_err(|_| parse_err(lineno, "bad vertex count in header"))?);
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b)) = (fields.next(), fields.next()) else {
            return Err(parse_err(lineno, "expected two vertex ids"));
        };
        if fields.next().is_some() {
            return Err(parse_err(lineno, "expected exactly two vertex ids"));
        }
        let u: u32 = a.parse().map_err(|_| parse_err(lineno, &format!("invalid vertex id {a:?}")))?;
        let v: u32 = b.parse().map_err(|_| parse_err(lineno, &format!("invalid vertex id {b:?}")))?;
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        raw.push((u, v));
    }
    let seen_n = max_id.map_or(0, |m| m + 1);
    let n = match header_n {
        Some(h) if h < seen_n => {
            return Err(Error::VertexOutOfRange { vertex: seen_n as u64 - 1, n: h });
        }
        Some(h) => h,
        None => seen_n,
    };
    Graph::from_edges(n, raw, directed)
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse { line, message: message.to_string() }
}
