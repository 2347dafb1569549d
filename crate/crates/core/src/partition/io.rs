//! Partition directory format.
//!
//! `manifest.json` describes the geometry; every sub-partition lives in its
//! own `s<core>_<sub>.bin` made of little-endian 32-bit words:
//! `rows, |N|, P[0..=rows], N[0..|N|]`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{stride_map, EncodedNeighbor, PartitionGeometry, PartitionedGraph, SubPartition};
use crate::error::{Error, Result};

const MANIFEST: &str = "manifest.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    geometry: PartitionGeometry,
    stride: Option<u32>,
    num_edges: usize,
    subpartitions: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    core: u32,
    sub: u32,
    file: String,
    edges: usize,
}

pub fn dump_partitions(pg: &PartitionedGraph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(pg.subs.len());
    for s in &pg.subs {
        let file = format!("s{}_{}.bin", s.core, s.sub);
        let mut bytes = Vec::with_capacity(4 * (2 + s.pointers.len() + s.neighbors.len()));
        let words = [s.rows() as u32, s.neighbors.len() as u32]
            .into_iter()
            .chain(s.pointers.iter().copied())
            .chain(s.neighbors.iter().map(|e| e.0));
        for w in words {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        fs::write(dir.join(&file), bytes)?;
        entries.push(ManifestEntry { core: s.core, sub: s.sub, file, edges: s.num_edges() });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        geometry: pg.geometry.clone(),
        stride: pg.stride.as_ref().map(|s| s.stride),
        num_edges: pg.num_edges,
        subpartitions: entries,
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn load_partitions(dir: &Path) -> Result<PartitionedGraph> {
    let bad = |message: String| Error::PartitionFormat { path: dir.to_path_buf(), message };
    let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(bad(format!("unsupported format version {}", manifest.format_version)));
    }
    let geometry = manifest.geometry;
    let stride = manifest.stride.map(|s| stride_map(geometry.n, s)).transpose()?;
    let mut subs = Vec::with_capacity(manifest.subpartitions.len());
    for entry in &manifest.subpartitions {
        let path: PathBuf = dir.join(&entry.file);
        let raw = fs::read(&path)?;
        if raw.len() % 4 != 0 || raw.len() < 8 {
            return Err(bad(format!("{} is not a whole number of words", entry.file)));
        }
        let words: Vec<u32> =
            raw.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let (rows, edges) = (words[0] as usize, words[1] as usize);
        if words.len() != 2 + rows + 1 + edges || rows != geometry.interval_len(entry.core) as usize {
            return Err(bad(format!("{} has inconsistent lengths", entry.file)));
        }
        let pointers = words[2..3 + rows].to_vec();
        let neighbors = words[3 + rows..].iter().map(|&w| EncodedNeighbor(w)).collect();
        subs.push(SubPartition { core: entry.core, sub: entry.sub, pointers, neighbors });
    }
    if subs.len() != (geometry.p * geometry.num_subintervals()) as usize {
        return Err(bad("missing sub-partitions".into()));
    }
    Ok(PartitionedGraph { geometry, stride, subs, num_edges: manifest.num_edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::rmat_generate;
    use crate::partition::build_partitions;

    #[test]
    fn dump_load_round_trip() {
        let g = rmat_generate(7, 8, 5);
        let geo = PartitionGeometry::compute(g.n, 2, 4, 32).unwrap();
        let pg = build_partitions(&g, &geo, Some(10)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        dump_partitions(&pg, dir.path()).unwrap();
        assert_eq!(load_partitions(dir.path()).unwrap(), pg);
    }

    #[test]
    fn words_are_little_endian() {
        let g = crate::graph::chain(3);
        let geo = PartitionGeometry::compute(3, 1, 2, 4).unwrap();
        let pg = build_partitions(&g, &geo, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        dump_partitions(&pg, dir.path()).unwrap();
        let raw = fs::read(dir.path().join("s0_0.bin")).unwrap();
        // rows=3, |N|=2, P=[0,0,1,2], N=[0,1]
        let expect: Vec<u8> = [3u32, 2, 0, 0, 1, 2, 0, 1].iter().flat_map(|w| w.to_le_bytes()).collect();
        assert_eq!(raw, expect);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let g = crate::graph::chain(3);
        let geo = PartitionGeometry::compute(3, 1, 2, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        dump_partitions(&build_partitions(&g, &geo, None).unwrap(), dir.path()).unwrap();
        fs::write(dir.path().join("s0_0.bin"), [1u8, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        assert!(matches!(load_partitions(dir.path()), Err(Error::PartitionFormat { .. })));
    }
}
