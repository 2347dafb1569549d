//! Processor-level control: partitions the graph, schedules meta steps in
//! lock-step across cores and iterates to convergence.
//!
//! Each meta step runs in two passes over the same sub-partitions. The
//! functional pass walks rows in program order and resolves every label
//! read against the scratch pads and channel memory, so in-iteration
//! visibility matches immediate updates. The timing pass then replays the
//! mapped edges of all cores through the shared crossbar, the pipelined
//! accumulators and the buffered writers. For min-reduce problems the
//! accumulator emissions must equal the functional updates; for summation
//! they are the updates.
//!
//! Within meta step `m`, core `i` walks its sub-partitions in the rotated
//! order `S_{i, ((i + k) mod p) * l + m}` for `k = 0..p`, so at any time
//! the cores read from different scratch pads.

mod experiments;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::core_sim::{
    line_count, prefetch_phase, simulate_meta_step, CoreCounters, CoreParams, GraphCore, Job, ResidentWindow,
};
use crate::crossbar::{Crossbar, CrossbarConfig, CrossbarStats, Scratchpad, TraceEvent, DEFAULT_QUEUE_DEPTH, DEFAULT_REORDER_SLOTS};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::partition::{balance_report, build_partitions, BalanceReport, PartitionGeometry, DEFAULT_STRIDE};
use crate::udf::{Bfs, GraphProblem, PageRank, ProblemKind, Termination, Wcc};
use crate::accumulator::IdLabelPair;

pub use experiments::{ablation_run, async_vs_sync, AblationRow, AsyncSyncResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptFlags {
    pub immediate_updates: bool,
    pub prefetch_skipping: bool,
    pub stride_mapping: bool,
}

impl OptFlags {
    pub const ALL_ON: OptFlags = OptFlags { immediate_updates: true, prefetch_skipping: true, stride_mapping: true };
    pub const ALL_OFF: OptFlags = OptFlags { immediate_updates: false, prefetch_skipping: false, stride_mapping: false };

    pub fn is_valid(&self) -> bool {
        self.immediate_updates || !self.prefetch_skipping
    }

    /// Every valid combination, all-off first.
    pub fn combinations() -> Vec<OptFlags> {
        let mut out = Vec::new();
        for bits in 0..8u8 {
            let f = OptFlags {
                immediate_updates: bits & 1 != 0,
                prefetch_skipping: bits & 2 != 0,
                stride_mapping: bits & 4 != 0,
            };
            if f.is_valid() {
                out.push(f);
            }
        }
        out
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.immediate_updates {
            parts.push("immediate");
        }
        if self.prefetch_skipping {
            parts.push("skip");
        }
        if self.stride_mapping {
            parts.push("stride");
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cores: u32,
    pub lanes: u32,
    pub pipelines: u32,
    /// Total scratch capacity over all cores is `2^scratch_bits` 32-bit labels.
    pub scratch_bits: u32,
    pub reorder_slots: u32,
    /// Bank queue depth in full lines.
    pub queue_depth: u32,
    pub stride: u32,
    pub flags: OptFlags,
    /// Iteration cap for problems that stop on no updates; `None` = `2n`.
    pub max_iterations: Option<u32>,
    /// Neighbor labels only become visible in the next iteration.
    pub sync_reference: bool,
    /// Record crossbar events and accumulator emissions.
    #[serde(default)]
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cores: 4,
            lanes: 16,
            pipelines: 8,
            scratch_bits: 21,
            reorder_slots: DEFAULT_REORDER_SLOTS as u32,
            queue_depth: DEFAULT_QUEUE_DEPTH as u32,
            stride: DEFAULT_STRIDE,
            flags: OptFlags::ALL_ON,
            max_iterations: None,
            sync_reference: false,
            trace: false,
        }
    }
}

impl RunConfig {
    /// Defaults for `cores` cores; stride mapping only pays off with more
    /// than one core.
    pub fn for_cores(cores: u32) -> Self {
        let flags = OptFlags { stride_mapping: cores > 1, ..OptFlags::ALL_ON };
        Self { cores, flags, ..Self::default() }
    }

    pub fn with_cores(mut self, cores: u32) -> Self {
        self.cores = cores;
        self
    }

    pub fn with_flags(mut self, flags: OptFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pow2 = |x: u32| x != 0 && x.is_power_of_two();
        if !pow2(self.cores) {
            return Err(Error::Config(format!("core count {} is not a power of two", self.cores)));
        }
        if !pow2(self.lanes) || self.lanes > 64 {
            return Err(Error::Config(format!("lane count {} must be a power of two <= 64", self.lanes)));
        }
        if self.pipelines == 0 || self.pipelines > self.lanes {
            return Err(Error::Config(format!("pipelines {} must be in 1..={}", self.pipelines, self.lanes)));
        }
        if self.scratch_bits > 31 {
            return Err(Error::Config("scratch capacity exceeds 2^31 labels".into()));
        }
        if self.reorder_slots == 0 || self.queue_depth == 0 {
            return Err(Error::Config("reorder slots and queue depth must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if !self.flags.is_valid() {
            return Err(Error::Config("prefetch skipping requires immediate updates".into()));
        }
        Ok(())
    }

    /// Labels a core's scratch pad holds for labels of `label_bits`.
    pub fn scratch_capacity(&self, label_bits: u32) -> u32 {
        let total = 1u64 << self.scratch_bits;
        (total / self.cores as u64 / (label_bits as u64 / 32)) as u32
    }

    pub fn labels_per_line(&self, label_bits: u32) -> u32 {
        self.lanes * 32 / label_bits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: u32,
    pub any_update: bool,
    pub updates: u64,
    pub cycles: u64,
    pub prefetch_cycles: u64,
    pub processing_cycles: u64,
    pub finalize_cycles: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<L> {
    /// Final labels in input numbering.
    pub labels: Vec<L>,
    pub iterations: Vec<IterationResult>,
    pub converged: bool,
    pub total_cycles: u64,
    pub cores: Vec<CoreCounters>,
    pub crossbar: CrossbarStats,
    pub geometry: PartitionGeometry,
    pub balance: BalanceReport,
    pub num_edges: usize,
    /// Filled when [`RunConfig::trace`] is set.
    pub trace: RunTrace,
}

/// One update leaving a core's accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmissionEvent {
    pub iteration: u32,
    pub meta_step: u32,
    pub core: u32,
    pub sub: u32,
    /// Vertex in input numbering.
    pub vertex: VertexId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub crossbar: Vec<TraceEvent>,
    pub emissions: Vec<EmissionEvent>,
}

impl RunTrace {
    pub fn emissions_csv(&self) -> String {
        let mut out = String::from("iteration,meta_step,core,sub,vertex\n");
        for e in &self.emissions {
            let _ = writeln!(out, "{},{},{},{},{}", e.iteration, e.meta_step, e.core, e.sub, e.vertex);
        }
        out
    }
}

impl<L> RunOutcome<L> {
    /// Splits off the labels, leaving a label-free outcome.
    pub fn split_labels(self) -> (RunOutcome<()>, Vec<L>) {
        let RunOutcome { labels, iterations, converged, total_cycles, cores, crossbar, geometry, balance, num_edges, trace } = self;
        (RunOutcome { labels: Vec::new(), iterations, converged, total_cycles, cores, crossbar, geometry, balance, num_edges, trace }, labels)
    }

    pub fn iteration_count(&self) -> u32 {
        self.iterations.len() as u32
    }

    pub fn prefetch_cycles(&self) -> u64 {
        self.iterations.iter().map(|i| i.prefetch_cycles).sum()
    }

    pub fn processing_cycles(&self) -> u64 {
        self.iterations.iter().map(|i| i.processing_cycles).sum()
    }
}

/// Runs `problem` on `g` until it terminates or the iteration cap is hit.
pub fn run_to_convergence<P>(g: &Graph, problem: &P, cfg: &RunConfig) -> Result<RunOutcome<P::Label>>
where
    P: GraphProblem + Clone,
{
    cfg.validate()?;
    let bits = problem.label_bits();
    let lpl = cfg.labels_per_line(bits);
    if lpl == 0 {
        return Err(Error::Config(format!("{} lanes cannot hold a {bits}-bit label", cfg.lanes)));
    }
    let geometry = PartitionGeometry::compute(g.n, cfg.cores, cfg.lanes, cfg.scratch_capacity(bits))?;
    let pg = build_partitions(g, &geometry, cfg.flags.stride_mapping.then_some(cfg.stride))?;
    let balance = balance_report(&pg);
    let geo = &pg.geometry;
    let (p, l) = (geo.p as usize, geo.l);
    let n = g.n;

    let degrees = g.degrees().out_degree;
    let mut mem: Vec<P::Label> = (0..n)
        .map(|v| {
            let orig = pg.original_id(v);
            problem.init(orig, n, degrees[orig as usize])
        })
        .collect();
    let capacity = geo.subinterval_bounds.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    let capacity = (capacity.div_ceil(cfg.lanes) * cfg.lanes).max(cfg.lanes) as usize;
    let mut scratch: Vec<Scratchpad<P::Label>> = (0..p).map(|_| Scratchpad::new(cfg.lanes as usize, capacity)).collect();
    let mut resident: Vec<Option<ResidentWindow>> = vec![None; p];
    let mut xb = Crossbar::<()>::new(CrossbarConfig {
        cores: p,
        lanes: cfg.lanes as usize,
        scratch_bits: geo.scratch_bits,
        reorder_slots: cfg.reorder_slots as usize,
        queue_depth: cfg.queue_depth as usize,
    });
    let params = CoreParams { lanes: cfg.lanes as usize, pipelines: cfg.pipelines as usize, labels_per_line: lpl };
    let mut core_totals = vec![CoreCounters::default(); p];
    let mut trace = RunTrace::default();
    if cfg.trace {
        xb.enable_trace();
    }

    let synchronous = problem.synchronous() || cfg.sync_reference;
    let coherent_sources = problem.synchronous() || (cfg.flags.immediate_updates && !cfg.sync_reference);
    let immediate_writes = cfg.flags.immediate_updates && !synchronous;
    let stream_labels = !(coherent_sources && l == 1);

    let (cap, fixed) = match problem.termination() {
        Termination::NoUpdates => (cfg.max_iterations.unwrap_or(n.saturating_mul(2)).max(1), false),
        Termination::FixedIterations(k) => (k, true),
    };

    let mut iterations = Vec::new();
    let mut converged = fixed && cap == 0;
    let mut snapshot: Vec<P::Label> = Vec::new();
    for t in 1..=cap {
        let epoch = if synchronous { t as u64 } else { 0 };
        if synchronous {
            snapshot.clone_from(&mem);
        }
        if problem.synchronous() {
            mem.iter_mut().for_each(|x| *x = problem.reset(*x));
        }
        let mut it = IterationResult { iteration: t, any_update: false, updates: 0, cycles: 0, prefetch_cycles: 0, processing_cycles: 0, finalize_cycles: 0 };

        for m in 0..l {
            let mut prefetch = 0;
            for q in 0..p {
                let j = q as u32 * l + m;
                let window = geo.subinterval(j);
                let source = if synchronous { &snapshot } else { &mem };
                let c = prefetch_phase(
                    &mut scratch[q],
                    &mut resident[q],
                    ResidentWindow { sub: j, epoch },
                    &source[window.start as usize..window.end as usize],
                    cfg.flags.prefetch_skipping,
                    lpl,
                )?;
                core_totals[q].prefetch_cycles += c;
                core_totals[q].prefetch_bytes_read += c * params.line_bytes();
                prefetch = prefetch.max(c);
            }

            let mut jobs: Vec<Vec<Job<'_, P::Value>>> = (0..p).map(|_| Vec::new()).collect();
            let mut expected: Vec<Vec<(u32, u32, P::Value)>> = vec![Vec::new(); p];
            for k in 0..p {
                for (i, core_jobs) in jobs.iter_mut().enumerate() {
                    let q = (i + k) % p;
                    let j = q as u32 * l + m;
                    let sub = pg.sub(i as u32, j);
                    if sub.num_edges() == 0 {
                        continue;
                    }
                    let base = geo.interval(i as u32).start;
                    let mut pairs = Vec::with_capacity(sub.num_edges());
                    for r in 0..sub.rows() {
                        let row = sub.row(r);
                        if row.is_empty() {
                            continue;
                        }
                        let v = (base + r as u32) as usize;
                        let src = mem[v];
                        let mut acc: Option<P::Value> = None;
                        let mut updated = false;
                        for enc in row {
                            let dst = scratch[q].read(enc.local(geo.scratch_bits));
                            let (c, f) = problem.map(src, dst);
                            pairs.push(IdLabelPair { id: r as u32, label: c, updated: f });
                            acc = Some(acc.map_or(c, |a| problem.reduce(a, c)));
                            updated |= f;
                        }
                        if updated && !problem.synchronous() {
                            let value = acc.expect("row has edges");
                            let new = problem.apply(src, value);
                            mem[v] = new;
                            expected[i].push((j, r as u32, value));
                            it.updates += 1;
                            if immediate_writes {
                                if let Some(w) = resident[i] {
                                    let win = geo.subinterval(w.sub);
                                    if win.contains(&(v as u32)) {
                                        scratch[i].write(v as u32 - win.start, new);
                                    }
                                }
                            }
                        }
                    }
                    core_jobs.push(Job { sub, pairs, stream_labels });
                }
            }

            let mut cores: Vec<GraphCore<'_, P>> = (0..p).map(|_| GraphCore::new(problem.clone(), params)).collect();
            for (core, core_jobs) in cores.iter_mut().zip(jobs) {
                for job in core_jobs {
                    core.push_job(job);
                }
            }
            let processing = simulate_meta_step(&mut cores, &mut xb);
            if cfg.trace {
                trace.crossbar.extend(xb.take_trace());
                for (i, core) in cores.iter().enumerate() {
                    let base = geo.interval(i as u32).start;
                    trace.emissions.extend(core.emissions.iter().map(|&(j, em)| EmissionEvent {
                        iteration: t,
                        meta_step: m,
                        core: i as u32,
                        sub: j,
                        vertex: pg.original_id(base + em.id),
                    }));
                }
            }

            for (i, core) in cores.iter_mut().enumerate() {
                if problem.synchronous() {
                    let base = geo.interval(i as u32).start;
                    for &(_, em) in &core.emissions {
                        let v = (base + em.id) as usize;
                        mem[v] = problem.apply(mem[v], em.value);
                    }
                    it.updates += core.emissions.len() as u64;
                } else {
                    let mut got: Vec<(u32, u32, P::Value)> = core.emissions.iter().map(|&(j, em)| (j, em.id, em.value)).collect();
                    got.sort_by_key(|&(j, id, _)| (j, id));
                    expected[i].sort_by_key(|&(j, id, _)| (j, id));
                    if got != expected[i] {
                        return Err(Error::Pipeline(format!(
                            "core {i} meta step {m}: accumulator emitted {} updates, functional pass produced {}",
                            got.len(),
                            expected[i].len()
                        )));
                    }
                }
                core_totals[i].add(&core.counters);
            }
            it.prefetch_cycles += prefetch;
            it.processing_cycles += processing;
        }

        if problem.synchronous() {
            mem.iter_mut().for_each(|x| *x = problem.writeback(*x, n));
            let mut finalize = 0;
            for (q, totals) in core_totals.iter_mut().enumerate() {
                let c = line_count(geo.interval_len(q as u32) as u64, lpl as u64);
                totals.finalize_cycles += c;
                totals.lines_written += c;
                totals.bytes_written += c * params.line_bytes();
                totals.writer_bytes_read += c * params.line_bytes();
                finalize = finalize.max(c);
            }
            it.finalize_cycles = finalize;
        }
        it.any_update = it.updates > 0;
        it.cycles = it.prefetch_cycles + it.processing_cycles + it.finalize_cycles;
        let stop = if fixed { t == cap } else { !it.any_update };
        iterations.push(it);
        if stop {
            converged = true;
            break;
        }
    }

    let labels = (0..n).map(|v| mem[pg.partitioned_id(v) as usize]).collect();
    let total_cycles = iterations.iter().map(|i: &IterationResult| i.cycles).sum();
    Ok(RunOutcome {
        labels,
        iterations,
        converged,
        total_cycles,
        cores: core_totals,
        crossbar: xb.stats().clone(),
        geometry: pg.geometry.clone(),
        balance,
        num_edges: g.num_edges(),
        trace,
    })
}

/// Labels of any problem, widened for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelVec {
    Words(Vec<u32>),
    Ranks(Vec<f32>),
}

impl LabelVec {
    pub fn len(&self) -> usize {
        match self {
            LabelVec::Words(v) => v.len(),
            LabelVec::Ranks(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_f64(&self) -> Vec<f64> {
        match self {
            LabelVec::Words(v) => v.iter().map(|&x| x as f64).collect(),
            LabelVec::Ranks(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }
}

/// Problem-erased result of [`run_problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRun {
    pub kind: ProblemKind,
    pub outcome: RunOutcome<()>,
    pub labels: LabelVec,
}


/// The graph a problem runs on: WCC needs both edge directions.
pub fn prepare_graph(g: &Graph, kind: &ProblemKind) -> Graph {
    if kind.needs_symmetric_graph() && g.directed {
        g.symmetrized()
    } else {
        g.clone()
    }
}

/// Dispatches on `kind`. The caller passes a graph already prepared with
/// [`prepare_graph`].
pub fn run_problem(g: &Graph, kind: ProblemKind, cfg: &RunConfig) -> Result<ProblemRun> {
    match kind {
        ProblemKind::Bfs { root } => {
            check_root(g, root)?;
            let (outcome, labels) = run_to_convergence(g, &Bfs { root }, cfg)?.split_labels();
            Ok(ProblemRun { kind, outcome, labels: LabelVec::Words(labels) })
        }
        ProblemKind::Wcc => {
            let (outcome, labels) = run_to_convergence(g, &Wcc, cfg)?.split_labels();
            Ok(ProblemRun { kind, outcome, labels: LabelVec::Words(labels) })
        }
        ProblemKind::Pr { damping, iterations } => {
            if g.n == 0 {
                return Err(Error::EmptyGraph);
            }
            let pr = PageRank::new(damping, iterations)?;
            let (outcome, labels) = run_to_convergence(g, &pr, cfg)?.split_labels();
            Ok(ProblemRun { kind, outcome, labels: LabelVec::Ranks(labels.iter().map(|l| l.rank).collect()) })
        }
    }
}

fn check_root(g: &Graph, root: VertexId) -> Result<()> {
    if root >= g.n {
        return Err(Error::VertexOutOfRange { vertex: root as u64, n: g.n });
    }
    Ok(())
}
