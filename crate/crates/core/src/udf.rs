//! Graph problems as compile-time plug-ins: label init, per-edge map, reduce,
//! and the write-back / termination rules the engine needs.
//!
//! Naming follows the pipeline: the *source* is the row vertex being updated,
//! the *destination* is the in-neighbor whose label is pulled.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{VertexId, INF};

pub const DEFAULT_DAMPING: f64 = 0.85;
pub const DEFAULT_PR_ITERATIONS: u32 = 16;

/// Associative combine used by the accumulator network.
pub trait Reducer {
    type Value: Copy + Debug + PartialEq;

    fn reduce(&self, a: Self::Value, b: Self::Value) -> Self::Value;

    /// `reduce(a, a) == a`; lets duplicated pairs fold freely.
    fn idempotent(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    NoUpdates,
    FixedIterations(u32),
}

pub trait GraphProblem: Reducer {
    type Label: Copy + Debug + PartialEq;

    fn name(&self) -> &'static str;

    /// 32 or 64.
    fn label_bits(&self) -> u32;

    /// Initial label of the vertex with input id `v` and out-degree `degree`.
    fn init(&self, v: VertexId, n: u32, degree: u32) -> Self::Label;

    /// Candidate value for `src` pulled from `dst`, and whether it is an
    /// actual update.
    fn map(&self, src: Self::Label, dst: Self::Label) -> (Self::Value, bool);

    /// Folds an accumulator emission into the label stored for its vertex.
    fn apply(&self, stored: Self::Label, value: Self::Value) -> Self::Label;

    /// Double-buffered problems read only the previous iteration's labels.
    fn synchronous(&self) -> bool;

    /// Label stored into the write buffer at iteration start.
    fn reset(&self, stored: Self::Label) -> Self::Label {
        stored
    }

    /// Transform applied once every contribution of an iteration is in.
    fn writeback(&self, stored: Self::Label, _n: u32) -> Self::Label {
        stored
    }

    fn termination(&self) -> Termination;

    /// Label as an `f64` for reports and comparisons.
    fn scalar(&self, label: Self::Label) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinReduce;

impl Reducer for MinReduce {
    type Value = u32;

    fn reduce(&self, a: u32, b: u32) -> u32 {
        a.min(b)
    }

    fn idempotent(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SumReduce;

impl Reducer for SumReduce {
    type Value = f64;

    fn reduce(&self, a: f64, b: f64) -> f64 {
        a + b
    }

    fn idempotent(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bfs {
    pub root: VertexId,
}

impl Reducer for Bfs {
    type Value = u32;

    fn reduce(&self, a: u32, b: u32) -> u32 {
        a.min(b)
    }

    fn idempotent(&self) -> bool {
        true
    }
}

impl GraphProblem for Bfs {
    type Label = u32;

    fn name(&self) -> &'static str {
        "bfs"
    }

    fn label_bits(&self) -> u32 {
        32
    }

    fn init(&self, v: VertexId, _n: u32, _degree: u32) -> u32 {
        if v == self.root {
            0
        } else {
            INF
        }
    }

    fn map(&self, src: u32, dst: u32) -> (u32, bool) {
        let hop = dst.saturating_add(1);
        (src.min(hop), hop < src)
    }

    fn apply(&self, stored: u32, value: u32) -> u32 {
        stored.min(value)
    }

    fn synchronous(&self) -> bool {
        false
    }

    fn termination(&self) -> Termination {
        Termination::NoUpdates
    }

    fn scalar(&self, label: u32) -> f64 {
        label as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Wcc;

impl Reducer for Wcc {
    type Value = u32;

    fn reduce(&self, a: u32, b: u32) -> u32 {
        a.min(b)
    }

    fn idempotent(&self) -> bool {
        true
    }
}

impl GraphProblem for Wcc {
    type Label = u32;

    fn name(&self) -> &'static str {
        "wcc"
    }

    fn label_bits(&self) -> u32 {
        32
    }

    fn init(&self, v: VertexId, _n: u32, _degree: u32) -> u32 {
        v
    }

    fn map(&self, src: u32, dst: u32) -> (u32, bool) {
        (src.min(dst), dst < src)
    }

    fn apply(&self, stored: u32, value: u32) -> u32 {
        stored.min(value)
    }

    fn synchronous(&self) -> bool {
        false
    }

    fn termination(&self) -> Termination {
        Termination::NoUpdates
    }

    fn scalar(&self, label: u32) -> f64 {
        label as f64
    }
}

/// 64-bit PageRank label: out-degree in the input direction plus rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrLabel {
    pub degree: u32,
    pub rank: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRank {
    pub damping: f64,
    pub iterations: u32,
}

impl PageRank {
    pub fn new(damping: f64, iterations: u32) -> Result<Self> {
        if !(0.0..=1.0).contains(&damping) {
            return Err(Error::Config(format!("damping {damping} outside [0, 1]")));
        }
        Ok(Self { damping, iterations })
    }
}

impl Reducer for PageRank {
    type Value = f32;

    fn reduce(&self, a: f32, b: f32) -> f32 {
        a + b
    }

    fn idempotent(&self) -> bool {
        false
    }
}

impl GraphProblem for PageRank {
    type Label = PrLabel;

    fn name(&self) -> &'static str {
        "pr"
    }

    fn label_bits(&self) -> u32 {
        64
    }

    fn init(&self, _v: VertexId, n: u32, degree: u32) -> PrLabel {
        PrLabel { degree, rank: (1.0 / n as f64) as f32 }
    }

    fn map(&self, _src: PrLabel, dst: PrLabel) -> (f32, bool) {
        if dst.degree == 0 {
            (0.0, true)
        } else {
            (dst.rank / dst.degree as f32, true)
        }
    }

    fn apply(&self, stored: PrLabel, value: f32) -> PrLabel {
        PrLabel { degree: stored.degree, rank: stored.rank + value }
    }

    fn synchronous(&self) -> bool {
        true
    }

    fn reset(&self, stored: PrLabel) -> PrLabel {
        PrLabel { degree: stored.degree, rank: 0.0 }
    }

    fn writeback(&self, stored: PrLabel, n: u32) -> PrLabel {
        let d = self.damping as f32;
        PrLabel { degree: stored.degree, rank: (1.0 - d) / n as f32 + d * stored.rank }
    }

    fn termination(&self) -> Termination {
        Termination::FixedIterations(self.iterations)
    }

    fn scalar(&self, label: PrLabel) -> f64 {
        label.rank as f64
    }
}

/// Runtime problem selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum ProblemKind {
    Bfs { root: VertexId },
    Wcc,
    Pr { damping: f64, iterations: u32 },
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::Bfs { .. } => "bfs",
            ProblemKind::Wcc => "wcc",
            ProblemKind::Pr { .. } => "pr",
        }
    }

    pub fn pagerank() -> Self {
        ProblemKind::Pr { damping: DEFAULT_DAMPING, iterations: DEFAULT_PR_ITERATIONS }
    }

    /// WCC needs both edge directions to follow weak connectivity.
    pub fn needs_symmetric_graph(&self) -> bool {
        matches!(self, ProblemKind::Wcc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bfs_map() {
        let b = Bfs { root: 0 };
        assert_eq!(b.map(5, 2), (3, true));
        assert_eq!(b.map(3, INF), (3, false));
        assert_eq!(b.map(INF, INF), (INF, false));
        assert_eq!(b.map(2, 1), (2, false));
    }

    #[test]
    fn bfs_init_marks_root() {
        let b = Bfs { root: 2 };
        assert_eq!((b.init(2, 4, 0), b.init(1, 4, 3)), (0, INF));
    }

    #[test]
    fn wcc_map() {
        assert_eq!(Wcc.map(7, 3), (3, true));
        assert_eq!(Wcc.map(2, 2), (2, false));
        assert_eq!(Wcc.init(9, 10, 0), 9);
    }

    #[test]
    fn pr_map_and_writeback() {
        let pr = PageRank::new(0.85, 5).unwrap();
        let dst = PrLabel { degree: 2, rank: 0.5 };
        assert_eq!(pr.map(dst, dst), (0.25, true));
        assert_eq!(pr.map(dst, PrLabel { degree: 0, rank: 0.7 }).0, 0.0);
        let w = pr.writeback(PrLabel { degree: 3, rank: 0.0 }, 1);
        assert!((w.rank - 0.15).abs() < 1e-7);
        assert_eq!(w.degree, 3);
        assert_eq!(pr.reset(PrLabel { degree: 4, rank: 0.3 }), PrLabel { degree: 4, rank: 0.0 });
    }

    #[test]
    fn pr_rejects_bad_damping() {
        assert!(PageRank::new(1.5, 1).is_err());
        assert!(PageRank::new(-0.1, 1).is_err());
    }

    #[test]
    fn min_reduce_laws_on_bytes() {
        for a in 0u32..256 {
            assert_eq!(MinReduce.reduce(a, a), a);
            for b in 0u32..256 {
                assert_eq!(MinReduce.reduce(a, b), MinReduce.reduce(b, a));
                for c in (0u32..256).step_by(7) {
                    assert_eq!(
                        MinReduce.reduce(MinReduce.reduce(a, b), c),
                        MinReduce.reduce(a, MinReduce.reduce(b, c))
                    );
                }
            }
        }
    }

    #[test]
    fn problem_kind_json() {
        let k = ProblemKind::Bfs { root: 3 };
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"problem":"bfs","root":3}"#);
        assert_eq!(serde_json::from_str::<ProblemKind>(&s).unwrap(), k);
    }

    proptest! {
        #[test]
        fn sum_is_associative_on_small_batches(xs in proptest::collection::vec(0.0f64..1.0, 1..=16)) {
            let left = xs.iter().fold(0.0, |a, &b| SumReduce.reduce(a, b));
            let mut tree = xs.clone();
            while tree.len() > 1 {
                tree = tree.chunks(2).map(|c| c.iter().copied().fold(0.0, |a, b| SumReduce.reduce(a, b))).collect();
            }
            prop_assert!((left - tree[0]).abs() <= 1e-9);
        }

        #[test]
        fn wcc_map_never_raises(src in any::<u32>(), dst in any::<u32>()) {
            let (c, f) = Wcc.map(src, dst);
            prop_assert!(c <= src);
            prop_assert_eq!(f, c < src);
        }

        #[test]
        fn bfs_flag_matches_strict_decrease(src in any::<u32>(), dst in any::<u32>()) {
            let (c, f) = Bfs { root: 0 }.map(src, dst);
            prop_assert_eq!(f, c < src);
        }
    }
}
