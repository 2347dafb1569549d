//! Engine results against the sequential oracles, over a built-in graph
//! suite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{prepare_graph, run_problem, run_to_convergence, LabelVec, OptFlags, ProblemRun, RunConfig};
use crate::error::Result;
use crate::graph::oracle::{oracle_bfs, oracle_pr, oracle_wcc};
use crate::graph::{chain, local_star, multi_star, ring, rmat_generate, star, two_components, Graph, VertexId};
use crate::udf::{Bfs, GraphProblem, PageRank, ProblemKind, Reducer, Termination, Wcc, DEFAULT_DAMPING, DEFAULT_PR_ITERATIONS};

/// Relative per-vertex tolerance of PR ranks against the f64 oracle.
pub const PR_TOLERANCE: f64 = 1e-5;

/// Suite scratch size: small enough that the larger graphs need several
/// sub-intervals per core.
pub const SUITE_SCRATCH_BITS: u32 = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub mismatches: usize,
    /// Largest relative error (PR) or 0/1 (exact problems).
    pub max_error: f64,
}

/// Compares `labels` (input numbering) with the oracle of `kind` on the
/// prepared graph `g`.
pub fn check_labels(g: &Graph, kind: &ProblemKind, labels: &LabelVec) -> Result<Verdict> {
    let exact = |want: Vec<u32>, got: &[u32]| {
        let mismatches = want.iter().zip(got).filter(|(a, b)| a != b).count() + want.len().abs_diff(got.len());
        Verdict { passed: mismatches == 0, mismatches, max_error: if mismatches == 0 { 0.0 } else { 1.0 } }
    };
    match (kind, labels) {
        (ProblemKind::Bfs { root }, LabelVec::Words(got)) => Ok(exact(oracle_bfs(g, *root)?, got)),
        (ProblemKind::Wcc, LabelVec::Words(got)) => Ok(exact(oracle_wcc(g), got)),
        (ProblemKind::Pr { damping, iterations }, LabelVec::Ranks(got)) => {
            let want = oracle_pr(g, *damping, *iterations)?;
            let mut mismatches = want.len().abs_diff(got.len());
            let mut max_error = 0.0f64;
            for (&w, &r) in want.iter().zip(got) {
                let err = if w == 0.0 { (r as f64).abs() } else { ((r as f64 - w) / w).abs() };
                if !(err <= PR_TOLERANCE) {
                    mismatches += 1;
                }
                max_error = max_error.max(if err.is_nan() { f64::INFINITY } else { err });
            }
            Ok(Verdict { passed: mismatches == 0, mismatches, max_error })
        }
        _ => Ok(Verdict { passed: false, mismatches: labels.len(), max_error: f64::INFINITY }),
    }
}

/// Built-in graphs: chains, stars, rings, two-component graphs and R-MAT
/// scales 4 to 10 with average degrees 2, 16 and 86.
pub fn suite_graphs() -> Vec<(String, Graph)> {
    let mut out: Vec<(String, Graph)> = Vec::new();
    for n in [2, 17, 64, 256, 1024] {
        out.push((format!("chain-{n}"), chain(n)));
    }
    out.push(("star-64".into(), star(64)));
    out.push(("local-star-512-32".into(), local_star(512, 32)));
    out.push(("multi-star-256-100".into(), multi_star(256, 100)));
    for n in [8, 100] {
        out.push((format!("ring-{n}"), ring(n)));
    }
    out.push(("two-components-10-23".into(), two_components(10, 23)));
    for scale in 4..=10 {
        for deg in [2, 16, 86] {
            out.push((format!("rmat-{scale}-{deg}"), rmat_generate(scale, deg, 1)));
        }
    }
    out
}

/// The problems verified on every suite graph.
pub fn suite_problems() -> [ProblemKind; 3] {
    [
        ProblemKind::Bfs { root: 0 },
        ProblemKind::Wcc,
        ProblemKind::Pr { damping: DEFAULT_DAMPING, iterations: DEFAULT_PR_ITERATIONS },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub cores: Vec<u32>,
    pub flags: Vec<OptFlags>,
    pub scratch_bits: u32,
    /// Skip graphs with more vertices than this.
    pub max_vertices: Option<u32>,
    /// Swaps the reduce operator for a wrong one, to show the suite catches it.
    pub inject_fault: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            cores: vec![1, 2, 4],
            flags: OptFlags::combinations(),
            scratch_bits: SUITE_SCRATCH_BITS,
            max_vertices: None,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub graph: String,
    pub problem: String,
    pub cores: u32,
    pub flags: String,
    pub iterations: u32,
    pub converged: bool,
    pub total_cycles: u64,
    pub passed: bool,
    pub detail: String,
}

/// Runs every suite problem on every suite graph for every core count and
/// flag combination. Rows come back in a fixed order.
pub fn run_suite(opts: &SuiteOptions) -> Vec<SuiteRow> {
    let graphs: Vec<_> = suite_graphs()
        .into_iter()
        .filter(|(_, g)| opts.max_vertices.is_none_or(|m| g.n <= m))
        .collect();
    let mut cases = Vec::new();
    for (gi, _) in graphs.iter().enumerate() {
        for kind in suite_problems() {
            for &cores in &opts.cores {
                for &flags in &opts.flags {
                    cases.push((gi, kind, cores, flags));
                }
            }
        }
    }
    let prepared: Vec<(Graph, Graph)> = graphs.iter().map(|(_, g)| (g.clone(), g.symmetrized())).collect();
    cases
        .par_iter()
        .map(|&(gi, kind, cores, flags)| {
            let g = if kind.needs_symmetric_graph() { &prepared[gi].1 } else { &prepared[gi].0 };
            let cfg = RunConfig { cores, flags, scratch_bits: opts.scratch_bits, ..RunConfig::default() };
            let run = if opts.inject_fault { run_faulty(g, kind, &cfg) } else { run_problem(g, kind, &cfg) };
            let mut row = SuiteRow {
                graph: graphs[gi].0.clone(),
                problem: kind.name().into(),
                cores,
                flags: flags.label(),
                iterations: 0,
                converged: false,
                total_cycles: 0,
                passed: false,
                detail: String::new(),
            };
            match run.and_then(|r| check_labels(g, &kind, &r.labels).map(|v| (r, v))) {
                Ok((r, v)) => {
                    row.iterations = r.outcome.iteration_count();
                    row.converged = r.outcome.converged;
                    row.total_cycles = r.outcome.total_cycles;
                    row.passed = v.passed && r.outcome.converged;
                    if !v.passed {
                        row.detail = format!("{} mismatches, max error {:.3e}", v.mismatches, v.max_error);
                    } else if !r.outcome.converged {
                        row.detail = "did not converge".into();
                    }
                }
                Err(e) => row.detail = e.to_string(),
            }
            row
        })
        .collect()
}

/// Reduce that picks the wrong operand (min problems) or subtracts (sum).
trait Flip: Copy {
    fn flipped(a: Self, b: Self) -> Self;
}

impl Flip for u32 {
    fn flipped(a: u32, b: u32) -> u32 {
        a.max(b)
    }
}

impl Flip for f32 {
    fn flipped(a: f32, b: f32) -> f32 {
        a - b
    }
}

#[derive(Debug, Clone)]
struct Faulty<P>(P);

impl<P: GraphProblem> Reducer for Faulty<P>
where
    P::Value: Flip,
{
    type Value = P::Value;

    fn reduce(&self, a: Self::Value, b: Self::Value) -> Self::Value {
        Flip::flipped(a, b)
    }

    fn idempotent(&self) -> bool {
        self.0.idempotent()
    }
}

impl<P: GraphProblem> GraphProblem for Faulty<P>
where
    P::Value: Flip,
{
    type Label = P::Label;

    fn name(&self) -> &'static str {
        self.0.name()
    }

    fn label_bits(&self) -> u32 {
        self.0.label_bits()
    }

    fn init(&self, v: VertexId, n: u32, degree: u32) -> Self::Label {
        self.0.init(v, n, degree)
    }

    fn map(&self, src: Self::Label, dst: Self::Label) -> (Self::Value, bool) {
        self.0.map(src, dst)
    }

    fn apply(&self, stored: Self::Label, value: Self::Value) -> Self::Label {
        self.0.apply(stored, value)
    }

    fn synchronous(&self) -> bool {
        self.0.synchronous()
    }

    fn reset(&self, stored: Self::Label) -> Self::Label {
        self.0.reset(stored)
    }

    fn writeback(&self, stored: Self::Label, n: u32) -> Self::Label {
        self.0.writeback(stored, n)
    }

    fn termination(&self) -> Termination {
        self.0.termination()
    }

    fn scalar(&self, label: Self::Label) -> f64 {
        self.0.scalar(label)
    }
}


fn run_faulty(g: &Graph, kind: ProblemKind, cfg: &RunConfig) -> Result<ProblemRun> {
    // A wrong reduce may never settle; keep the cap small.
    let cfg = RunConfig { max_iterations: Some(cfg.max_iterations.unwrap_or(g.n + 2).min(g.n + 2)), ..cfg.clone() };
    match kind {
        ProblemKind::Bfs { root } => {
            let (outcome, labels) = run_to_convergence(g, &Faulty(Bfs { root }), &cfg)?.split_labels();
            Ok(ProblemRun { kind, outcome, labels: LabelVec::Words(labels) })
        }
        ProblemKind::Wcc => {
            let (outcome, labels) = run_to_convergence(g, &Faulty(Wcc), &cfg)?.split_labels();
            Ok(ProblemRun { kind, outcome, labels: LabelVec::Words(labels) })
        }
        ProblemKind::Pr { damping, iterations } => {
            let (outcome, labels) = run_to_convergence(g, &Faulty(PageRank::new(damping, iterations)?), &cfg)?.split_labels();
            Ok(ProblemRun { kind, outcome, labels: LabelVec::Ranks(labels.iter().map(|l| l.rank).collect()) })
        }
    }
}

/// Runs `kind` on `g` (input graph, not yet prepared) and checks it.
pub fn run_and_check(g: &Graph, kind: ProblemKind, cfg: &RunConfig) -> Result<(ProblemRun, Verdict)> {
    let g = prepare_graph(g, &kind);
    let run = run_problem(&g, kind, cfg)?;
    let verdict = check_labels(&g, &kind, &run.labels)?;
    Ok((run, verdict))
}
