//! Throughput figures and the serializable run report.
//!
//! Times are modeled: cycle counts divided by a nominal clock, not
//! measurements.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::core_sim::CoreCounters;
use crate::crossbar::CrossbarStats;
use crate::engine::{AblationRow, IterationResult, ProblemRun, RunConfig};
use crate::error::{Error, Result};
use crate::partition::{BalanceReport, PartitionGeometry};
use crate::udf::ProblemKind;
use crate::verify::Verdict;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_FREQUENCY_MHZ: f64 = 170.0;

/// Schema the JSON reports conform to.
pub const REPORT_SCHEMA: &str = include_str!("../schema/sim_report.schema.json");

/// Millions of traversed edges per second, `|E| / t`.
pub fn compute_mteps(edges: u64, seconds: f64) -> Result<f64> {
    if !(seconds > 0.0) {
        return Err(Error::NonPositiveTime(seconds));
    }
    Ok(edges as f64 / seconds / 1e6)
}

/// `|E| * i / t` in millions, computed as MTEPS times `i` so the two
/// figures relate exactly.
pub fn compute_mteps_star(edges: u64, iterations: u32, seconds: f64) -> Result<f64> {
    if iterations == 0 {
        return Err(Error::Config("MTEPS* needs at least one iteration".into()));
    }
    Ok(compute_mteps(edges, seconds)? * iterations as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub core: u32,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub counters: CoreCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallReport {
    pub dest_builder: u64,
    pub edge_builder: u64,
    pub writer: u64,
    pub barrier: u64,
    pub crossbar_reorder: u64,
    pub crossbar_queue: u64,
    pub crossbar_port: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub total: u64,
    pub prefetch: u64,
    pub processing: u64,
    pub finalize: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub graph: String,
    pub vertices: u32,
    pub edges: u64,
    pub problem: ProblemKind,
    pub config: RunConfig,
    /// Input transformations applied before the run; some alter results.
    pub preprocessing: Vec<String>,
    pub iterations: u32,
    pub converged: bool,
    pub cycles: CycleReport,
    pub frequency_mhz: f64,
    /// Modeled execution time; `None` when no cycle elapsed.
    pub modeled_seconds: Option<f64>,
    pub mteps: Option<f64>,
    pub mteps_star: Option<f64>,
    pub geometry: PartitionGeometry,
    pub balance: BalanceReport,
    pub channels: Vec<ChannelReport>,
    pub stalls: StallReport,
    pub crossbar: CrossbarStats,
    pub iteration_log: Vec<IterationResult>,
    pub verdict: Option<Verdict>,
}

impl SimReport {
    pub fn new(graph: &str, vertices: u32, run: &ProblemRun, cfg: &RunConfig, frequency_mhz: f64, verdict: Option<Verdict>) -> Result<Self> {
        if !(frequency_mhz > 0.0) {
            return Err(Error::Config(format!("frequency {frequency_mhz} MHz must be positive")));
        }
        let o = &run.outcome;
        let edges = o.num_edges as u64;
        let iterations = o.iteration_count();
        let seconds = (o.total_cycles > 0).then(|| o.total_cycles as f64 / (frequency_mhz * 1e6));
        let (mteps, mteps_star) = match seconds {
            Some(t) if iterations > 0 => (Some(compute_mteps(edges, t)?), Some(compute_mteps_star(edges, iterations, t)?)),
            Some(t) => (Some(compute_mteps(edges, t)?), None),
            None => (None, None),
        };
        let sum = |f: fn(&CoreCounters) -> u64| o.cores.iter().map(f).sum::<u64>();
        Ok(SimReport {
            schema_version: SCHEMA_VERSION,
            graph: graph.into(),
            vertices,
            edges,
            problem: run.kind,
            config: cfg.clone(),
            preprocessing: Vec::new(),
            iterations,
            converged: o.converged,
            cycles: CycleReport {
                total: o.total_cycles,
                prefetch: o.prefetch_cycles(),
                processing: o.processing_cycles(),
                finalize: o.iterations.iter().map(|i| i.finalize_cycles).sum(),
            },
            frequency_mhz,
            modeled_seconds: seconds,
            mteps,
            mteps_star,
            geometry: o.geometry.clone(),
            balance: o.balance.clone(),
            channels: o
                .cores
                .iter()
                .enumerate()
                .map(|(i, c)| ChannelReport { core: i as u32, bytes_read: c.bytes_read(), bytes_written: c.bytes_written, counters: c.clone() })
                .collect(),
            stalls: StallReport {
                dest_builder: sum(|c| c.dest_stall_cycles),
                edge_builder: sum(|c| c.edge_builder_stalls),
                writer: sum(|c| c.writer_stalls),
                barrier: sum(|c| c.barrier_cycles),
                crossbar_reorder: o.crossbar.reorder_stalls,
                crossbar_queue: o.crossbar.queue_stalls,
                crossbar_port: o.crossbar.port_stalls,
            },
            crossbar: o.crossbar.clone(),
            iteration_log: o.iterations.clone(),
            verdict,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per iteration.
    pub fn iterations_csv(&self) -> String {
        let mut out = String::from("iteration,updates,cycles,prefetch_cycles,processing_cycles,finalize_cycles\n");
        for i in &self.iteration_log {
            let _ = writeln!(out, "{},{},{},{},{},{}", i.iteration, i.updates, i.cycles, i.prefetch_cycles, i.processing_cycles, i.finalize_cycles);
        }
        out
    }

    /// One row per channel.
    pub fn channels_csv(&self) -> String {
        let mut out = String::from("core,bytes_read,bytes_written,processing_cycles,prefetch_cycles,dest_stall_cycles,edge_builder_stalls,writer_stalls,barrier_cycles\n");
        for c in &self.channels {
            let k = &c.counters;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.core, c.bytes_read, c.bytes_written, k.processing_cycles, k.prefetch_cycles, k.dest_stall_cycles, k.edge_builder_stalls, k.writer_stalls, k.barrier_cycles
            );
        }
        out
    }
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("flags,iterations,converged,total_cycles,prefetch_cycles,processing_cycles,bytes_read,normalized_cycles\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6}",
            r.label, r.iterations, r.converged, r.total_cycles, r.prefetch_cycles, r.processing_cycles, r.bytes_read, 1.0 / r.speedup
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_problem, prepare_graph};
    use crate::graph::{chain, rmat_generate};
    use crate::verify::check_labels;
    use proptest::prelude::*;

    #[test]
    fn mteps_examples() {
        assert_eq!(compute_mteps(1_000_000, 1.0).unwrap(), 1.0);
        assert_eq!(compute_mteps(0, 1.0).unwrap(), 0.0);
        assert_eq!(compute_mteps_star(1_000_000, 5, 1.0).unwrap(), 5.0);
        assert_eq!(compute_mteps_star(123, 1, 0.5).unwrap(), compute_mteps(123, 0.5).unwrap());
        assert!(matches!(compute_mteps(1, 0.0), Err(Error::NonPositiveTime(_))));
        assert!(matches!(compute_mteps(1, -1.0), Err(Error::NonPositiveTime(_))));
    }

    proptest! {
        #[test]
        fn star_is_mteps_times_iterations(e in 0u64..1 << 40, i in 1u32..10_000, t in 1e-9f64..1e3) {
            prop_assert_eq!(compute_mteps_star(e, i, t).unwrap(), compute_mteps(e, t).unwrap() * i as f64);
        }
    }

    fn report(kind: ProblemKind) -> SimReport {
        let g = prepare_graph(&rmat_generate(7, 8, 5), &kind);
        let cfg = RunConfig::default();
        let run = run_problem(&g, kind, &cfg).unwrap();
        let verdict = check_labels(&g, &kind, &run.labels).unwrap();
        SimReport::new("rmat-7-8", g.n, &run, &cfg, DEFAULT_FREQUENCY_MHZ, Some(verdict)).unwrap()
    }

    #[test]
    fn report_invariants() {
        for kind in [ProblemKind::Bfs { root: 0 }, ProblemKind::Wcc, ProblemKind::pagerank()] {
            let r = report(kind);
            assert!(r.verdict.as_ref().unwrap().passed);
            assert_eq!(r.mteps_star.unwrap(), r.mteps.unwrap() * r.iterations as f64);
            assert_eq!(r.cycles.total, r.cycles.prefetch + r.cycles.processing + r.cycles.finalize);
            let t = r.modeled_seconds.unwrap();
            assert_eq!(t, r.cycles.total as f64 / 170e6);
        }
    }

    #[test]
    fn graph_bytes_cover_partition_words() {
        let r = report(ProblemKind::Bfs { root: 0 });
        // Every iteration streams every neighbor word at least once.
        let graph_bytes: u64 = r.channels.iter().map(|c| c.counters.graph_bytes_read).sum();
        assert!(graph_bytes >= r.iterations as u64 * 4 * r.edges);
    }

    #[test]
    fn json_round_trip() {
        let r = report(ProblemKind::Wcc);
        let back = SimReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn zero_cycle_run_has_no_throughput() {
        let kind = ProblemKind::Pr { damping: 0.85, iterations: 0 };
        let g = chain(4);
        let cfg = RunConfig::default();
        let run = run_problem(&g, kind, &cfg).unwrap();
        let r = SimReport::new("chain-4", 4, &run, &cfg, DEFAULT_FREQUENCY_MHZ, None).unwrap();
        assert_eq!((r.mteps, r.mteps_star, r.modeled_seconds), (None, None, None));
    }

    #[test]
    fn csv_headers() {
        let r = report(ProblemKind::Bfs { root: 0 });
        assert_eq!(r.iterations_csv().lines().count(), r.iterations as usize + 1);
        assert_eq!(r.channels_csv().lines().count(), 5);
    }
}
