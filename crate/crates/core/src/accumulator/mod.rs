//! Vertex-update accumulator.
//!
//! Stages: update (per-edge map), a segmented parallel-prefix network with
//! a wrap-around suffix merge, MSO selection over `v` selectors and `v`
//! sequential reducers that hold one vertex each across cycles.
//!
//! Input lines are expected in edge-builder shape: every vertex id occupies
//! one cyclically contiguous run of valid lanes, and ids in a line are
//! distinct modulo `v`. Other inputs are reduced run by run.

mod network;

use std::collections::VecDeque;

use serde::Serialize;

use crate::udf::{GraphProblem, Reducer};

pub use network::{ladner_fischer, network_reduce, ConnectionTable};
use network::NetworkLine;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdLabelPair<V> {
    /// Source (row) vertex id local to the core.
    pub id: u32,
    pub label: V,
    pub updated: bool,
}

/// One lane; `None` is an invalid lane.
pub type Lane<V> = Option<IdLabelPair<V>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotatedEdge<L> {
    pub src: u32,
    pub src_label: L,
    pub dst_label: L,
}

/// Update emitted by the sequential stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Emission<V> {
    pub id: u32,
    pub value: V,
}

pub fn update_stage<P: GraphProblem>(problem: &P, edges: &[Option<AnnotatedEdge<P::Label>>]) -> Vec<Lane<P::Value>> {
    edges
        .iter()
        .map(|edge| {
            edge.map(|e| {
                let (label, updated) = problem.map(e.src_label, e.dst_label);
                IdLabelPair { id: e.src, label, updated }
            })
        })
        .collect()
}

/// Reference model of the prefix network: each lane holds the left-to-right
/// fold of its run up to that lane; when the first lane's id closes the line
/// in a separate run, the last lane also absorbs the first run.
pub fn prefix_suffix_reduce<R: Reducer>(r: &R, line: &[Lane<R::Value>]) -> Vec<Lane<R::Value>> {
    let e = line.len();
    assert!(e.is_power_of_two(), "lane count must be a power of two");
    let fold = |a: IdLabelPair<R::Value>, b: IdLabelPair<R::Value>| IdLabelPair {
        id: a.id,
        label: r.reduce(a.label, b.label),
        updated: a.updated | b.updated,
    };
    let mut out = line.to_vec();
    for i in 1..e {
        if let (Some(prev), Some(cur)) = (out[i - 1], line[i]) {
            if prev.id == cur.id {
                out[i] = Some(fold(prev, cur));
            }
        }
    }
    if let (Some(first), Some(last)) = (line[0], line[e - 1]) {
        let run_end = (1..e).find(|&i| line[i].is_none_or(|p| p.id != first.id)).map_or(e - 1, |i| i - 1);
        if first.id == last.id && run_end < e - 1 {
            out[e - 1] = Some(fold(out[e - 1].unwrap(), out[run_end].unwrap()));
        }
    }
    out
}

/// Routes the rightmost pair of each id to selector `id % v`. A selector
/// that sees several ids gets them in lane order; the last one is the MSO
/// slot, earlier ones are handed to the sequential stage first.
pub fn select_mso<V: Copy>(line: &[Lane<V>], v: usize) -> Vec<Vec<IdLabelPair<V>>> {
    let mut out: Vec<Vec<IdLabelPair<V>>> = vec![Vec::new(); v];
    for (i, lane) in line.iter().enumerate() {
        let Some(pair) = *lane else { continue };
        let rightmost = !line[i + 1..].iter().any(|l| l.is_some_and(|q| q.id == pair.id));
        if rightmost {
            out[pair.id as usize % v].push(pair);
        }
    }
    out
}

/// `v` reducers, each holding one vertex across cycles.
#[derive(Debug, Clone)]
pub struct SequentialStage<V> {
    held: Vec<Option<IdLabelPair<V>>>,
}

impl<V: Copy> SequentialStage<V> {
    pub fn new(v: usize) -> Self {
        assert!(v > 0, "at least one selector is required");
        Self { held: vec![None; v] }
    }

    pub fn step<R: Reducer<Value = V>>(&mut self, r: &R, selected: &[Vec<IdLabelPair<V>>], out: &mut Vec<Emission<V>>) {
        for (slot, pairs) in self.held.iter_mut().zip(selected) {
            for &p in pairs {
                *slot = match *slot {
                    Some(h) if h.id == p.id => Some(IdLabelPair {
                        id: h.id,
                        label: r.reduce(h.label, p.label),
                        updated: h.updated | p.updated,
                    }),
                    Some(h) => {
                        if h.updated {
                            out.push(Emission { id: h.id, value: h.label });
                        }
                        Some(p)
                    }
                    None => Some(p),
                };
            }
        }
    }

    pub fn flush(&mut self, out: &mut Vec<Emission<V>>) {
        for slot in &mut self.held {
            if let Some(h) = slot.take() {
                if h.updated {
                    out.push(Emission { id: h.id, value: h.label });
                }
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.held.iter().all(Option::is_none)
    }

    pub fn held(&self) -> &[Option<IdLabelPair<V>>] {
        &self.held
    }
}

/// Unpipelined reference: reduce, select and sequential fold line by line.
pub fn behavioral_accumulate<R: Reducer>(r: &R, lines: &[Vec<Lane<R::Value>>], v: usize) -> Vec<Emission<R::Value>> {
    let mut seq = SequentialStage::new(v);
    let mut out = Vec::new();
    for line in lines {
        let reduced = prefix_suffix_reduce(r, line);
        seq.step(r, &select_mso(&reduced, v), &mut out);
    }
    seq.flush(&mut out);
    out
}

/// Pipelined accumulator: one network level per register stage, then the
/// suffix merge stage; selection and the sequential stage sit at the exit.
#[derive(Debug, Clone)]
pub struct Accumulator<R: Reducer> {
    reducer: R,
    table: ConnectionTable,
    v: usize,
    regs: VecDeque<Option<NetworkLine<R::Value>>>,
    seq: SequentialStage<R::Value>,
    in_flight: usize,
}

impl<R: Reducer> Accumulator<R> {
    pub fn new(reducer: R, e: usize, v: usize) -> Self {
        let table = ladner_fischer(e);
        let depth = table.levels.len() + 1;
        Self {
            reducer,
            table,
            v,
            regs: (0..depth).map(|_| None).collect(),
            seq: SequentialStage::new(v),
            in_flight: 0,
        }
    }

    /// Register stages between a push and the line reaching selection.
    pub fn depth(&self) -> usize {
        self.regs.len()
    }

    pub fn lanes(&self) -> usize {
        self.table.lanes
    }

    /// Advances one clock; `input` enters the first level.
    pub fn step(&mut self, input: Option<&[Lane<R::Value>]>, out: &mut Vec<Emission<R::Value>>) {
        let levels = self.table.levels.len();
        if let Some(done) = self.regs.pop_back().flatten() {
            self.in_flight -= 1;
            self.seq.step(&self.reducer, &select_mso(&done.output(), self.v), out);
        }
        // Stage s holds the result of op s; op `levels` is the suffix merge.
        for (s, reg) in self.regs.iter_mut().enumerate() {
            if let Some(line) = reg.as_mut() {
                let op = s + 1;
                if op < levels {
                    line.apply_level(&self.reducer, &self.table, op);
                } else if op == levels {
                    line.merge_suffix(&self.reducer);
                }
            }
        }
        let entering = input.map(|line| {
            assert_eq!(line.len(), self.table.lanes, "line width differs from lane count");
            let mut net = NetworkLine::new(line);
            if levels > 0 {
                net.apply_level(&self.reducer, &self.table, 0);
            } else {
                net.merge_suffix(&self.reducer);
            }
            net
        });
        if entering.is_some() {
            self.in_flight += 1;
        }
        self.regs.push_front(entering);
    }

    pub fn is_idle(&self) -> bool {
        self.in_flight == 0
    }

    /// Drains the pipeline and the sequential reducers; returns the cycles spent.
    pub fn flush(&mut self, out: &mut Vec<Emission<R::Value>>) -> u64 {
        let mut cycles = 0;
        while !self.is_idle() {
            self.step(None, out);
            cycles += 1;
        }
        self.seq.flush(out);
        cycles + 1
    }

    pub fn sequential(&self) -> &SequentialStage<R::Value> {
        &self.seq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::udf::{Bfs, MinReduce, SumReduce};
    use proptest::prelude::*;

    fn p<V>(id: u32, label: V) -> Lane<V> {
        Some(IdLabelPair { id, label, updated: true })
    }

    fn labels<V: Copy>(line: &[Lane<V>]) -> Vec<Option<(u32, V)>> {
        line.iter().map(|l| l.map(|q| (q.id, q.label))).collect()
    }

    #[test]
    fn update_stage_applies_map() {
        let bfs = Bfs { root: 0 };
        let edges = [
            Some(AnnotatedEdge { src: 4, src_label: 9, dst_label: 1 }),
            Some(AnnotatedEdge { src: 4, src_label: 1, dst_label: 9 }),
            None,
        ];
        let out = update_stage(&bfs, &edges);
        assert_eq!(out[0], Some(IdLabelPair { id: 4, label: 2, updated: true }));
        assert_eq!(out[1], Some(IdLabelPair { id: 4, label: 1, updated: false }));
        assert_eq!(out[2], None);
        assert!(update_stage(&bfs, &[None, None]).iter().all(Option::is_none));
    }

    #[test]
    fn two_ids_fold_to_rightmost() {
        let line = [p(0, 5), p(0, 3), p(1, 7), p(1, 2)];
        let out = prefix_suffix_reduce(&MinReduce, &line);
        assert_eq!(out[1].unwrap().label, 3);
        assert_eq!(out[3].unwrap().label, 2);
    }

    #[test]
    fn repeated_id_sums_once() {
        let line: Vec<_> = (1..=8).map(|x| p(3, x as f64)).collect();
        let out = prefix_suffix_reduce(&SumReduce, &line);
        assert_eq!(out[7].unwrap().label, 36.0);
        let net = network_reduce(&SumReduce, &ladner_fischer(8), &line);
        assert_eq!(net[7].unwrap().label, 36.0);
    }

    #[test]
    fn distinct_ids_pass_through() {
        let line = [p(0, 4), p(1, 3), p(2, 2), p(3, 1)];
        assert_eq!(prefix_suffix_reduce(&MinReduce, &line), line.to_vec());
    }

    #[test]
    fn wrapped_run_lands_in_last_lane() {
        // Id 9 spans the end of one memory line and the start of the next.
        let line = [p(9, 1.0), p(9, 2.0), p(10, 5.0), p(9, 4.0)];
        let out = prefix_suffix_reduce(&SumReduce, &line);
        assert_eq!(out[3].unwrap().label, 7.0);
        let net = network_reduce(&SumReduce, &ladner_fischer(4), &line);
        assert_eq!(net[3].unwrap().label, 7.0);
        let sel = select_mso(&out, 2);
        assert_eq!(sel[1].iter().map(|q| (q.id, q.label)).collect::<Vec<_>>(), vec![(9, 7.0)]);
    }

    #[test]
    fn select_routes_by_modulo() {
        let line = [p(0, 1u32), p(1, 2)];
        let sel = select_mso(&line, 2);
        assert_eq!((sel[0][0].id, sel[1][0].id), (0, 1));
        let both = select_mso(&[p(0, 1u32), p(2, 2)], 2);
        assert_eq!(both[0].iter().map(|q| q.id).collect::<Vec<_>>(), vec![0, 2]);
        assert!(both[1].is_empty());
        assert!(select_mso::<u32>(&[None, None], 2).iter().all(Vec::is_empty));
    }

    #[test]
    fn colliding_selector_emits_lower_id_first() {
        let out = behavioral_accumulate(&MinReduce, &[vec![p(0, 1u32), p(2, 2)]], 2);
        assert_eq!(out, vec![Emission { id: 0, value: 1 }, Emission { id: 2, value: 2 }]);
    }

    #[test]
    fn sequential_stage_holds_and_emits() {
        let mut s = SequentialStage::new(1);
        let mut out = Vec::new();
        let pair = |id, label| IdLabelPair { id, label, updated: true };
        s.step(&MinReduce, &[vec![pair(3, 5)]], &mut out);
        s.step(&MinReduce, &[vec![pair(3, 4)]], &mut out);
        assert!(out.is_empty());
        assert_eq!(s.held()[0].unwrap().label, 4);
        s.step(&MinReduce, &[vec![pair(7, 9)]], &mut out);
        assert_eq!(out, vec![Emission { id: 3, value: 4 }]);
        s.flush(&mut out);
        assert_eq!(out.len(), 2);
        assert!(s.is_empty());
        s.flush(&mut out);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn non_updates_are_not_emitted() {
        let line = vec![Some(IdLabelPair { id: 1, label: 3u32, updated: false })];
        assert!(behavioral_accumulate(&MinReduce, &[line], 1).is_empty());
    }

    #[test]
    fn pipeline_latency_is_depth() {
        let mut acc = Accumulator::new(MinReduce, 8, 2);
        assert_eq!(acc.depth(), 4);
        let line: Vec<_> = (0..8).map(|i| p(i / 4, 10 - i)).collect();
        let mut out = Vec::new();
        acc.step(Some(&line), &mut out);
        for _ in 0..3 {
            acc.step(None, &mut out);
        }
        assert!(!acc.is_idle());
        acc.step(None, &mut out);
        assert!(acc.is_idle());
        // Id 0 was displaced by nothing yet; both still held.
        assert!(out.is_empty());
        acc.flush(&mut out);
        assert_eq!(out, vec![Emission { id: 0, value: 7 }, Emission { id: 1, value: 3 }]);
    }

    fn arbitrary_line(e: usize) -> impl Strategy<Value = Vec<Lane<u32>>> {
        proptest::collection::vec(proptest::option::weighted(0.8, (0u32..4, 0u32..50, any::<bool>())), e)
            .prop_map(|v| v.into_iter().map(|o| o.map(|(id, label, updated)| IdLabelPair { id, label, updated })).collect())
    }

    proptest! {
        #[test]
        fn network_matches_reference_on_any_line(line in arbitrary_line(16)) {
            let t = ladner_fischer(16);
            prop_assert_eq!(labels(&network_reduce(&MinReduce, &t, &line)), labels(&prefix_suffix_reduce(&MinReduce, &line)));
        }

        #[test]
        fn pipeline_matches_behavioral(lines in proptest::collection::vec(arbitrary_line(8), 0..40), gaps in proptest::collection::vec(0usize..3, 40)) {
            let expected = behavioral_accumulate(&MinReduce, &lines, 4);
            let mut acc = Accumulator::new(MinReduce, 8, 4);
            let mut out = Vec::new();
            for (line, &gap) in lines.iter().zip(&gaps) {
                acc.step(Some(line), &mut out);
                for _ in 0..gap {
                    acc.step(None, &mut out);
                }
            }
            acc.flush(&mut out);
            prop_assert_eq!(out, expected);
        }

        #[test]
        fn duplicating_pairs_is_harmless_for_min(line in arbitrary_line(8)) {
            // Duplicate every lane into a 16-lane line, keeping runs contiguous.
            let doubled: Vec<_> = line.iter().flat_map(|l| [*l, *l]).collect();
            let a = behavioral_accumulate(&MinReduce, &[line], 4);
            let b = behavioral_accumulate(&MinReduce, &[doubled], 4);
            prop_assert_eq!(a, b);
        }
    }
}
