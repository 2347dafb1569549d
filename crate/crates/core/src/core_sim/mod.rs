//! Timing model of one graph core and the lock-step driver shared by all
//! cores of a meta step.
//!
//! A core owns one read port and one write port of its memory channel, each
//! moving one line of `e` 32-bit words per cycle. The read port serves the
//! pointer and source-label stream of the source builder and the neighbor
//! stream of the destination builder. Neighbor lines go through the
//! crossbar; the edge builder zips returned lines with built sources into
//! accumulator lines (lane = neighbor position mod `e`), and accumulator
//! emissions drain into the buffered writer.
//!
//! Label values are not carried here: the engine computes them in program
//! order and hands each job the mapped id/label pair of every edge.

mod writer;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::accumulator::{Accumulator, Emission, IdLabelPair, Lane};
use crate::crossbar::{Crossbar, CrossbarConfig, Scratchpad};
use crate::error::{Error, Result};
use crate::partition::{EncodedNeighbor, SubPartition};
use crate::udf::Reducer;

pub use writer::BufferedWriter;

/// Writer backlog beyond which the edge builder stalls.
const WRITER_BACKLOG: usize = 64;
/// Lines the edge builder can buffer from the crossbar.
const EDGE_BUILDER_LINES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreParams {
    pub lanes: usize,
    pub pipelines: usize,
    pub labels_per_line: u32,
}

impl CoreParams {
    pub fn line_bytes(&self) -> u64 {
        4 * self.lanes as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceVertex {
    pub index: u32,
    /// Inclusive start in the neighbors array.
    pub left: u32,
    /// Exclusive end in the neighbors array.
    pub right: u32,
}

/// Zips consecutive pointers into source vertices numbered from `base`.
pub fn source_vertices(pointers: &[u32], base: u32) -> impl Iterator<Item = SourceVertex> + '_ {
    pointers
        .windows(2)
        .enumerate()
        .map(move |(r, w)| SourceVertex { index: base + r as u32, left: w[0], right: w[1] })
}

/// Positions from `start` that fit into one accumulator line: at most
/// `lanes` edges, all of built rows, from at most `pipelines` rows that are
/// distinct modulo `pipelines`.
pub fn edge_group_len<V>(
    pairs: &[IdLabelPair<V>],
    start: usize,
    available: usize,
    rows_built: u32,
    lanes: usize,
    pipelines: usize,
) -> usize {
    let mut count = 0;
    let mut residues = 0u64;
    let mut last_row = None;
    while count < lanes && start + count < available {
        let row = pairs[start + count].id;
        if row >= rows_built {
            break;
        }
        if last_row != Some(row) {
            let bit = 1u64 << (row as usize % pipelines);
            if residues & bit != 0 {
                break;
            }
            residues |= bit;
            last_row = Some(row);
        }
        count += 1;
    }
    count
}

pub fn line_count(items: u64, per_line: u64) -> u64 {
    items.div_ceil(per_line)
}

/// Which sub-interval a scratch pad holds, and for which label epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidentWindow {
    pub sub: u32,
    pub epoch: u64,
}

/// Loads `labels` into the scratch pad unless `want` is already resident
/// and skipping is allowed. Returns the cycles spent.
pub fn prefetch_phase<L: Copy>(
    scratch: &mut Scratchpad<L>,
    resident: &mut Option<ResidentWindow>,
    want: ResidentWindow,
    labels: &[L],
    skip_allowed: bool,
    labels_per_line: u32,
) -> Result<u64> {
    if labels.len() > scratch.capacity() {
        return Err(Error::Config(format!(
            "sub-interval of {} labels exceeds scratch capacity {}",
            labels.len(),
            scratch.capacity()
        )));
    }
    if skip_allowed && *resident == Some(want) {
        return Ok(0);
    }
    scratch.load(labels);
    *resident = Some(want);
    Ok(line_count(labels.len() as u64, labels_per_line as u64))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreCounters {
    pub prefetch_cycles: u64,
    pub processing_cycles: u64,
    pub flush_cycles: u64,
    pub finalize_cycles: u64,
    /// Cycles spent waiting at a meta-step barrier.
    pub barrier_cycles: u64,
    pub dest_issue_cycles: u64,
    pub dest_stall_cycles: u64,
    pub source_lines: u64,
    pub edge_groups: u64,
    pub edge_builder_stalls: u64,
    pub writer_stalls: u64,
    pub lines_written: u64,
    pub edges: u64,
    pub updates: u64,
    pub graph_bytes_read: u64,
    pub source_label_bytes_read: u64,
    pub prefetch_bytes_read: u64,
    pub writer_bytes_read: u64,
    pub bytes_written: u64,
}

impl CoreCounters {
    pub fn add(&mut self, o: &CoreCounters) {
        self.prefetch_cycles += o.prefetch_cycles;
        self.processing_cycles += o.processing_cycles;
        self.flush_cycles += o.flush_cycles;
        self.finalize_cycles += o.finalize_cycles;
        self.barrier_cycles += o.barrier_cycles;
        self.dest_issue_cycles += o.dest_issue_cycles;
        self.dest_stall_cycles += o.dest_stall_cycles;
        self.source_lines += o.source_lines;
        self.edge_groups += o.edge_groups;
        self.edge_builder_stalls += o.edge_builder_stalls;
        self.writer_stalls += o.writer_stalls;
        self.lines_written += o.lines_written;
        self.edges += o.edges;
        self.updates += o.updates;
        self.graph_bytes_read += o.graph_bytes_read;
        self.source_label_bytes_read += o.source_label_bytes_read;
        self.prefetch_bytes_read += o.prefetch_bytes_read;
        self.writer_bytes_read += o.writer_bytes_read;
        self.bytes_written += o.bytes_written;
    }

    pub fn bytes_read(&self) -> u64 {
        self.graph_bytes_read + self.source_label_bytes_read + self.prefetch_bytes_read + self.writer_bytes_read
    }
}

/// One sub-partition queued on a core.
#[derive(Debug, Clone)]
pub struct Job<'a, V> {
    pub sub: &'a SubPartition,
    /// Mapped pair of every neighbor position, id = local row.
    pub pairs: Vec<IdLabelPair<V>>,
    /// Source labels come from memory rather than the scratch pad.
    pub stream_labels: bool,
}

#[derive(Debug, Clone, Default)]
struct Active {
    lines_total: usize,
    issued: usize,
    received: usize,
    pointer_lines: usize,
    label_lines: usize,
    rows_built: u32,
    pos: usize,
    draining: bool,
    seq_flushed: bool,
}

#[derive(Debug, Clone)]
pub struct GraphCore<'a, R: Reducer> {
    params: CoreParams,
    acc: Accumulator<R>,
    writer: BufferedWriter,
    /// Read-modify-write of pending lines (non-idempotent reduce).
    accumulate_in_memory: bool,
    jobs: VecDeque<Job<'a, R::Value>>,
    active: Option<Active>,
    offer: Vec<Option<EncodedNeighbor>>,
    offering: bool,
    lanes_buf: Vec<Lane<R::Value>>,
    emitted: Vec<Emission<R::Value>>,
    /// `(sub-partition index, emission)` in emission order.
    pub emissions: Vec<(u32, Emission<R::Value>)>,
    pub counters: CoreCounters,
}

impl<'a, R: Reducer + Clone> GraphCore<'a, R> {
    pub fn new(reducer: R, params: CoreParams) -> Self {
        let accumulate_in_memory = !reducer.idempotent();
        Self {
            params,
            acc: Accumulator::new(reducer, params.lanes, params.pipelines),
            writer: BufferedWriter::new(params.labels_per_line),
            accumulate_in_memory,
            jobs: VecDeque::new(),
            active: None,
            offer: vec![None; params.lanes],
            offering: false,
            lanes_buf: vec![None; params.lanes],
            emitted: Vec::new(),
            emissions: Vec::new(),
            counters: CoreCounters::default(),
        }
    }

    pub fn push_job(&mut self, job: Job<'a, R::Value>) {
        if !job.pairs.is_empty() {
            self.jobs.push_back(job);
        }
    }

    pub fn is_busy(&self) -> bool {
        !self.jobs.is_empty()
    }

    /// Line offered to the crossbar this cycle, if any.
    pub fn offer(&self) -> Option<&[Option<EncodedNeighbor>]> {
        self.offering.then_some(&self.offer[..])
    }

    fn rows_ready(job: &Job<'_, R::Value>, a: &Active, p: &CoreParams) -> u32 {
        let rows = job.sub.rows() as u64;
        let by_pointers = (a.pointer_lines as u64 * p.lanes as u64).saturating_sub(1).min(rows);
        let by_labels = if job.stream_labels { (a.label_lines as u64 * p.labels_per_line as u64).min(rows) } else { rows };
        by_pointers.min(by_labels) as u32
    }

    /// First half of a cycle: read-port arbitration and the crossbar offer.
    /// Returns whether the core can take a line from the crossbar.
    pub fn pre_tick(&mut self, crossbar_ready: bool) -> bool {
        self.offering = false;
        let Some(job) = self.jobs.front() else { return false };
        let p = self.params;
        let a = self.active.get_or_insert_with(|| Active {
            lines_total: job.pairs.len().div_ceil(p.lanes),
            ..Active::default()
        });
        if a.draining {
            return false;
        }
        let rows = job.sub.rows() as u32;
        let ready = Self::rows_ready(job, a, &p);
        let row_at_pos = job.pairs.get(a.pos).map_or(rows, |q| q.id);
        let lookahead = ready.saturating_sub(row_at_pos) as usize;
        let source_left = ready < rows;
        let dest_left = a.issued < a.lines_total;

        let read_source = source_left && (lookahead < p.lanes || !dest_left || !crossbar_ready) && lookahead < 4 * p.lanes;
        if read_source {
            let pointers_ahead = (a.pointer_lines * p.lanes).saturating_sub(1) as u64;
            let labels_ahead = a.label_lines as u64 * p.labels_per_line as u64;
            if job.stream_labels && labels_ahead < pointers_ahead.min(rows as u64) {
                a.label_lines += 1;
                self.counters.source_label_bytes_read += p.line_bytes();
            } else {
                a.pointer_lines += 1;
                self.counters.graph_bytes_read += p.line_bytes();
            }
            self.counters.source_lines += 1;
        } else if dest_left {
            if crossbar_ready {
                let start = a.issued * p.lanes;
                let n = &job.sub.neighbors;
                for (lane, slot) in self.offer.iter_mut().enumerate() {
                    *slot = n.get(start + lane).copied();
                }
                self.offering = true;
            } else {
                self.counters.dest_stall_cycles += 1;
            }
        }

        let consumed = if a.pos == job.pairs.len() { a.lines_total } else { a.pos / p.lanes };
        a.received - consumed < EDGE_BUILDER_LINES
    }

    /// Second half of a cycle, after the crossbar ticked.
    pub fn post_tick(&mut self, accepted: bool, received_line: bool) {
        let Some(job) = self.jobs.front() else {
            self.counters.barrier_cycles += 1;
            return;
        };
        let p = self.params;
        let a = self.active.as_mut().expect("pre_tick activates the front job");
        let was_draining = a.draining;
        if self.offering {
            if accepted {
                a.issued += 1;
                self.counters.dest_issue_cycles += 1;
                self.counters.graph_bytes_read += p.line_bytes();
            } else {
                self.counters.dest_stall_cycles += 1;
            }
        }
        if received_line {
            a.received += 1;
        }
        let rows = job.sub.rows() as u32;
        a.rows_built = (a.rows_built + p.pipelines as u32).min(Self::rows_ready(job, a, &p));

        self.emitted.clear();
        if !a.draining {
            let available = (a.received * p.lanes).min(job.pairs.len());
            let mut input = false;
            if a.pos < available {
                if self.writer.queued() > WRITER_BACKLOG {
                    self.counters.edge_builder_stalls += 1;
                } else {
                    let n = edge_group_len(&job.pairs, a.pos, available, a.rows_built, p.lanes, p.pipelines);
                    if n == 0 {
                        self.counters.edge_builder_stalls += 1;
                    } else {
                        self.lanes_buf.iter_mut().for_each(|l| *l = None);
                        for pos in a.pos..a.pos + n {
                            self.lanes_buf[pos % p.lanes] = Some(job.pairs[pos]);
                        }
                        a.pos += n;
                        input = true;
                        self.counters.edge_groups += 1;
                        self.counters.edges += n as u64;
                    }
                }
            }
            self.acc.step(input.then_some(&self.lanes_buf[..]), &mut self.emitted);
            if a.issued == a.lines_total && a.received == a.lines_total && a.pos == job.pairs.len() && a.rows_built == rows {
                a.draining = true;
            }
        } else if !self.acc.is_idle() {
            self.acc.step(None, &mut self.emitted);
        } else if !a.seq_flushed {
            self.acc.flush(&mut self.emitted);
            a.seq_flushed = true;
        }

        self.emitted.sort_by_key(|em| em.id);
        for em in &self.emitted {
            self.writer.push(em.id);
            self.emissions.push((job.sub.sub, *em));
        }
        self.counters.updates += self.emitted.len() as u64;
        let wrote_before = self.writer.lines_written();
        let mut port_used = self.writer.step();
        if self.writer.queued() > 0 {
            self.counters.writer_stalls += 1;
        }
        let mut done = false;
        if a.draining && a.seq_flushed && self.writer.queued() == 0 && !port_used {
            port_used = self.writer.flush();
            done = true;
        }
        let _ = port_used;
        let written = self.writer.lines_written() - wrote_before;
        self.counters.lines_written += written;
        self.counters.bytes_written += written * p.line_bytes();
        if self.accumulate_in_memory {
            self.counters.writer_bytes_read += written * p.line_bytes();
        }

        if was_draining {
            self.counters.flush_cycles += 1;
        } else {
            self.counters.processing_cycles += 1;
        }
        if done {
            self.active = None;
            self.jobs.pop_front();
        }
    }
}

/// Drives `cores` and the shared crossbar until every job is done. Returns
/// the cycles the meta step took.
pub fn simulate_meta_step<R: Reducer + Clone>(cores: &mut [GraphCore<'_, R>], xb: &mut Crossbar<()>) -> u64 {
    let p = cores.len();
    assert_eq!(xb.config().cores, p, "crossbar sized for a different core count");
    let mut cycles = 0u64;
    let mut sink_ready = vec![false; p];
    while cores.iter().any(GraphCore::is_busy) {
        for (c, core) in cores.iter_mut().enumerate() {
            sink_ready[c] = core.pre_tick(xb.ready(c));
        }
        let offers: Vec<_> = cores.iter().map(GraphCore::offer).collect();
        let tick = xb.tick(&offers, &sink_ready, |_, _| ());
        for (c, core) in cores.iter_mut().enumerate() {
            core.post_tick(tick.accepted[c], tick.emitted[c].is_some());
        }
        cycles += 1;
    }
    assert!(xb.is_idle(), "crossbar still holds lines at the meta-step barrier");
    cycles
}

/// Single-core run of one sub-partition through a private crossbar.
pub fn run_subpartition<R: Reducer + Clone>(
    reducer: R,
    params: CoreParams,
    scratch_bits: u32,
    job: Job<'_, R::Value>,
) -> (CoreCounters, Vec<Emission<R::Value>>) {
    let mut core = GraphCore::new(reducer, params);
    core.push_job(job);
    let mut xb = Crossbar::new(CrossbarConfig::new(1, params.lanes, scratch_bits));
    simulate_meta_step(std::slice::from_mut(&mut core), &mut xb);
    let emissions = core.emissions.iter().map(|(_, e)| *e).collect();
    (core.counters, emissions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::partition::{build_partitions, PartitionGeometry};
    use crate::udf::MinReduce;

    fn params(lanes: usize, pipelines: usize) -> CoreParams {
        CoreParams { lanes, pipelines, labels_per_line: lanes as u32 }
    }

    fn pair(id: u32, label: u32) -> IdLabelPair<u32> {
        IdLabelPair { id, label, updated: true }
    }

    #[test]
    fn sources_follow_pointers() {
        let s: Vec<_> = source_vertices(&[0, 2, 2, 5], 0).map(|s| (s.index, s.left, s.right)).collect();
        assert_eq!(s, vec![(0, 0, 2), (1, 2, 2), (2, 2, 5)]);
    }

    #[test]
    fn figure_row_five_bounds() {
        let g = Graph::from_edges(6, [(0, 1), (3, 1), (4, 2), (3, 5), (4, 5), (1, 2)], true).unwrap();
        let geo = PartitionGeometry::compute(6, 1, 2, 4).unwrap();
        let pg = build_partitions(&g, &geo, None).unwrap();
        let v5 = source_vertices(&pg.sub(0, 1).pointers, 0).nth(5).unwrap();
        assert_eq!((v5.left, v5.right), (2, 4));
    }

    #[test]
    fn group_spans_two_sources() {
        let pairs = [pair(0, 0), pair(0, 0), pair(1, 0), pair(1, 0)];
        assert_eq!(edge_group_len(&pairs, 0, 4, 2, 4, 2), 4);
        // Only one pipeline: the second source waits for the next line.
        assert_eq!(edge_group_len(&pairs, 0, 4, 2, 4, 1), 2);
        // Row 1 not built yet.
        assert_eq!(edge_group_len(&pairs, 0, 4, 1, 4, 2), 2);
    }

    #[test]
    fn group_splits_on_residue_collision() {
        let pairs = [pair(0, 0), pair(2, 0), pair(3, 0)];
        assert_eq!(edge_group_len(&pairs, 0, 3, 4, 4, 2), 1);
        assert_eq!(edge_group_len(&pairs, 1, 3, 4, 4, 2), 2);
    }

    #[test]
    fn prefetch_skip_rule() {
        let mut s = Scratchpad::new(16, 1024);
        let mut res = None;
        let w = ResidentWindow { sub: 0, epoch: 0 };
        let labels = vec![0u32; 1024];
        assert_eq!(prefetch_phase(&mut s, &mut res, w, &labels, true, 16).unwrap(), 64);
        assert_eq!(prefetch_phase(&mut s, &mut res, w, &labels, true, 16).unwrap(), 0);
        assert_eq!(prefetch_phase(&mut s, &mut res, w, &labels, false, 16).unwrap(), 64);
        let big = vec![0u32; 2048];
        assert!(prefetch_phase(&mut s, &mut res, w, &big, true, 16).is_err());
    }

    fn chain_job(g: &Graph, geo: &PartitionGeometry) -> (crate::partition::PartitionedGraph, Vec<IdLabelPair<u32>>) {
        let pg = build_partitions(g, geo, None).unwrap();
        let sub = pg.sub(0, 0);
        let pairs = source_vertices(&sub.pointers, 0)
            .flat_map(|s| (s.left..s.right).map(move |_| pair(s.index, s.index)))
            .collect();
        (pg, pairs)
    }

    #[test]
    fn subpartition_cycles_respect_issue_width() {
        let g = Graph::from_edges(64, (0..64).flat_map(|u| (0..64).filter(move |&v| v != u && (u * 7 + v) % 3 == 0).map(move |v| (u, v))), true).unwrap();
        let geo = PartitionGeometry::compute(64, 1, 16, 64).unwrap();
        let (pg, pairs) = chain_job(&g, &geo);
        let n = pairs.len();
        let job = Job { sub: pg.sub(0, 0), pairs, stream_labels: false };
        let (c, em) = run_subpartition(MinReduce, params(16, 8), geo.scratch_bits, job);
        assert!(c.processing_cycles as usize >= n / 16);
        assert_eq!(c.dest_issue_cycles as usize, n.div_ceil(16));
        assert_eq!(c.edges as usize, n);
        // Every row with in-edges emits exactly once.
        let rows_with_edges = pg.sub(0, 0).pointers.windows(2).filter(|w| w[1] > w[0]).count();
        assert_eq!(em.len(), rows_with_edges);
    }

    #[test]
    fn empty_subpartition_costs_nothing() {
        let g = Graph::empty(8, true);
        let geo = PartitionGeometry::compute(8, 1, 4, 8).unwrap();
        let pg = build_partitions(&g, &geo, None).unwrap();
        let job = Job { sub: pg.sub(0, 0), pairs: Vec::<IdLabelPair<u32>>::new(), stream_labels: false };
        let (c, em) = run_subpartition(MinReduce, params(4, 2), geo.scratch_bits, job);
        assert_eq!(c, CoreCounters::default());
        assert!(em.is_empty());
    }
}
