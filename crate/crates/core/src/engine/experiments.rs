use serde::{Deserialize, Serialize};

use super::{prepare_graph, run_problem, OptFlags, RunConfig};
use crate::error::Result;
use crate::graph::Graph;
use crate::udf::ProblemKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub flags: OptFlags,
    pub label: String,
    pub iterations: u32,
    pub converged: bool,
    pub total_cycles: u64,
    pub prefetch_cycles: u64,
    pub processing_cycles: u64,
    pub bytes_read: u64,
    /// Total cycles of the all-off row divided by this row's.
    pub speedup: f64,
}

/// Runs `kind` once per valid flag combination, all-off first.
pub fn ablation_run(g: &Graph, kind: ProblemKind, base: &RunConfig) -> Result<Vec<AblationRow>> {
    let g = prepare_graph(g, &kind);
    let mut rows = Vec::new();
    for flags in OptFlags::combinations() {
        let cfg = RunConfig { flags, ..base.clone() };
        let run = run_problem(&g, kind, &cfg)?;
        let o = &run.outcome;
        rows.push(AblationRow {
            flags,
            label: flags.label(),
            iterations: o.iteration_count(),
            converged: o.converged,
            total_cycles: o.total_cycles,
            prefetch_cycles: o.prefetch_cycles(),
            processing_cycles: o.processing_cycles(),
            bytes_read: o.cores.iter().map(|c| c.bytes_read()).sum(),
            speedup: 0.0,
        });
    }
    let baseline = rows[0].total_cycles.max(1) as f64;
    for r in &mut rows {
        r.speedup = baseline / r.total_cycles.max(1) as f64;
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsyncSyncResult {
    pub async_iterations: u32,
    pub sync_iterations: u32,
    pub async_cycles: u64,
    pub sync_cycles: u64,
    pub labels_match: bool,
}

/// Iterations with immediate updates against a run where neighbor labels
/// only become visible in the next iteration.
pub fn async_vs_sync(g: &Graph, kind: ProblemKind, base: &RunConfig) -> Result<AsyncSyncResult> {
    let g = prepare_graph(g, &kind);
    let fast = RunConfig { flags: OptFlags { immediate_updates: true, ..base.flags }, sync_reference: false, ..base.clone() };
    let slow = RunConfig { sync_reference: true, ..base.clone() };
    let a = run_problem(&g, kind, &fast)?;
    let s = run_problem(&g, kind, &slow)?;
    Ok(AsyncSyncResult {
        async_iterations: a.outcome.iteration_count(),
        sync_iterations: s.outcome.iteration_count(),
        async_cycles: a.outcome.total_cycles,
        sync_cycles: s.outcome.total_cycles,
        labels_match: a.labels == s.labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::chain;

    #[test]
    fn ablation_covers_valid_combinations() {
        let rows = ablation_run(&chain(32), ProblemKind::Bfs { root: 0 }, &RunConfig::default().with_cores(2)).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].label, "none");
        assert_eq!(rows[0].speedup, 1.0);
        assert!(rows.iter().all(|r| r.converged));
    }

    #[test]
    fn chain_async_beats_sync() {
        let cfg = RunConfig { cores: 1, ..RunConfig::default() };
        let r = async_vs_sync(&chain(16), ProblemKind::Bfs { root: 0 }, &cfg).unwrap();
        assert_eq!(r.sync_iterations, 16);
        assert_eq!(r.async_iterations, 2);
        assert!(r.labels_match);
    }
}
