//! Parallel-prefix wiring for the accumulator.
//!
//! The connection table is the minimum-depth Ladner-Fischer construction:
//! at level `k` every lane with bit `k` set combines with the last lane of
//! the lower half of its `2^(k+1)` block. The scan runs segmented, so a lane
//! only absorbs its left neighbor's span when no segment head (id change or
//! invalid lane) lies in between; that flag is the merged signal.

use super::IdLabelPair;
use crate::udf::Reducer;

/// Per level, `(target lane, source lane)`; the source is the left operand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionTable {
    pub lanes: usize,
    pub levels: Vec<Vec<(usize, usize)>>,
}

pub fn ladner_fischer(lanes: usize) -> ConnectionTable {
    assert!(lanes.is_power_of_two(), "lane count must be a power of two");
    let depth = lanes.trailing_zeros() as usize;
    let levels = (0..depth)
        .map(|k| {
            (0..lanes)
                .filter(|i| i & (1 << k) != 0)
                .map(|i| (i, ((i >> k) << k) - 1))
                .collect()
        })
        .collect();
    ConnectionTable { lanes, levels }
}

#[derive(Debug, Clone, Copy)]
struct Cell<V> {
    pair: Option<IdLabelPair<V>>,
    /// Span contains a segment head.
    head: bool,
    /// Lane of the last segment head in the span.
    head_lane: usize,
}

fn fold<R: Reducer>(r: &R, a: IdLabelPair<R::Value>, b: IdLabelPair<R::Value>) -> IdLabelPair<R::Value> {
    IdLabelPair { id: a.id, label: r.reduce(a.label, b.label), updated: a.updated | b.updated }
}

fn combine<R: Reducer>(r: &R, left: Cell<R::Value>, right: Cell<R::Value>) -> Cell<R::Value> {
    if right.head {
        return right;
    }
    match (left.pair, right.pair) {
        (Some(a), Some(b)) => Cell { pair: Some(fold(r, a, b)), head: left.head, head_lane: left.head_lane },
        _ => unreachable!("a lane without a segment head always follows a valid lane"),
    }
}

fn cells<V: Copy>(lanes: impl Iterator<Item = Option<IdLabelPair<V>>>) -> Vec<Cell<V>> {
    let mut out: Vec<Cell<V>> = Vec::new();
    let mut prev: Option<IdLabelPair<V>> = None;
    for (i, pair) in lanes.enumerate() {
        let head = i == 0
            || match (prev, pair) {
                (Some(a), Some(b)) => a.id != b.id,
                _ => true,
            };
        out.push(Cell { pair, head, head_lane: i });
        prev = pair;
    }
    out
}

/// One line in flight through the network: the forward prefix scan plus the
/// mirrored scan that reduces the run starting at lane 0 (suffix sub-adder).
#[derive(Debug, Clone)]
pub(crate) struct NetworkLine<V> {
    prefix: Vec<Cell<V>>,
    mirror: Vec<Cell<V>>,
}

impl<V: Copy> NetworkLine<V> {
    pub(crate) fn new(line: &[Option<IdLabelPair<V>>]) -> Self {
        Self { prefix: cells(line.iter().copied()), mirror: cells(line.iter().rev().copied()) }
    }

    pub(crate) fn apply_level<R: Reducer<Value = V>>(&mut self, r: &R, table: &ConnectionTable, k: usize) {
        for cells in [&mut self.prefix, &mut self.mirror] {
            let before = cells.clone();
            for &(dst, src) in &table.levels[k] {
                cells[dst] = combine(r, before[src], before[dst]);
            }
        }
    }

    /// Extra step: when the id of lane 0 reappears at the last lane in a
    /// separate run, the last lane absorbs the suffix result.
    pub(crate) fn merge_suffix<R: Reducer<Value = V>>(&mut self, r: &R) {
        let e = self.prefix.len();
        let last = self.prefix[e - 1];
        let suffix = self.mirror[e - 1];
        if let (Some(tail), Some(head)) = (last.pair, suffix.pair) {
            if tail.id == head.id && last.head_lane != 0 {
                self.prefix[e - 1].pair = Some(fold(r, tail, head));
            }
        }
    }

    pub(crate) fn output(&self) -> Vec<Option<IdLabelPair<V>>> {
        self.prefix.iter().map(|c| c.pair).collect()
    }
}

/// Runs every level and the suffix merge at once.
pub fn network_reduce<R: Reducer>(
    r: &R,
    table: &ConnectionTable,
    line: &[Option<IdLabelPair<R::Value>>],
) -> Vec<Option<IdLabelPair<R::Value>>> {
    assert_eq!(line.len(), table.lanes);
    let mut net = NetworkLine::new(line);
    for k in 0..table.levels.len() {
        net.apply_level(r, table, k);
    }
    net.merge_suffix(r);
    net.output()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_lane_table() {
        let t = ladner_fischer(8);
        assert_eq!(t.levels.len(), 3);
        assert_eq!(t.levels[0], vec![(1, 0), (3, 2), (5, 4), (7, 6)]);
        assert_eq!(t.levels[1], vec![(2, 1), (3, 1), (6, 5), (7, 5)]);
        assert_eq!(t.levels[2], vec![(4, 3), (5, 3), (6, 3), (7, 3)]);
    }

    #[test]
    fn single_lane_has_no_levels() {
        assert!(ladner_fischer(1).levels.is_empty());
    }

    #[test]
    fn table_computes_every_prefix() {
        // Under integer addition with no segments, lane i must end with 0+..+i.
        for e in [2usize, 4, 8, 16, 32, 64] {
            let t = ladner_fischer(e);
            let mut v: Vec<u64> = (0..e as u64).collect();
            for level in &t.levels {
                let before = v.clone();
                for &(dst, src) in level {
                    v[dst] = before[src] + before[dst];
                }
            }
            for (i, &x) in v.iter().enumerate() {
                assert_eq!(x, (i as u64 * (i as u64 + 1)) / 2);
            }
        }
    }
}
