use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use graphscale::engine::{OptFlags, RunConfig};
use graphscale::metrics::DEFAULT_FREQUENCY_MHZ;
use graphscale::udf::{ProblemKind, DEFAULT_DAMPING, DEFAULT_PR_ITERATIONS};

#[derive(Debug, Parser)]
#[command(name = "graphscale", version, about = "Cycle-approximate model of a multi-channel graph accelerator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition a graph and write the sub-partition directory.
    Partition {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate one problem and write its report.
    Run {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write final labels, one per line.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Write iterations.csv and channels.csv here.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        /// Nominal clock used to turn cycles into modeled time.
        #[arg(long, default_value_t = DEFAULT_FREQUENCY_MHZ)]
        frequency_mhz: f64,
    },
    /// Compare every problem against its oracle on the built-in suite.
    Verify {
        /// Core counts to cover.
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 4])]
        cores: Vec<u32>,
        /// Only graphs with at most this many vertices.
        #[arg(long)]
        max_vertices: Option<u32>,
        /// Write the pass/fail matrix as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the reduce operator with a wrong one.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Run every valid optimization combination and normalize to all-off.
    Ablate {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bytes per edge and async/sync iteration counts.
    Analyze {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// BFS root for the iteration comparison.
        #[arg(long, default_value_t = 0)]
        root: u32,
        /// JSON path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an R-MAT edge list.
    Generate {
        #[arg(long)]
        scale: u32,
        #[arg(long, default_value_t = 16)]
        degree: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct GraphSource {
    /// Edge-list file: `u v` per line, `#` comments, optional `% n m` header.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Built-in graph, e.g. chain-64, star-100, multi-star-1024-100,
    /// local-star-4096-64, ring-8, two-components-10-20, rmat-10-16.
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub source: GraphSource,
    /// Treat file edges as undirected.
    #[arg(long)]
    pub undirected: bool,
    /// Seed for built-in R-MAT graphs.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Drop vertices without out-edges first. Alters results.
    #[arg(long)]
    pub compress: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProblemName {
    Bfs,
    Wcc,
    Pr,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "bfs")]
    pub problem: ProblemName,
    #[arg(long, default_value_t = 0)]
    pub root: u32,
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,
    #[arg(long, default_value_t = DEFAULT_PR_ITERATIONS)]
    pub iters: u32,
}

impl ProblemArgs {
    pub fn kind(&self) -> ProblemKind {
        match self.problem {
            ProblemName::Bfs => ProblemKind::Bfs { root: self.root },
            ProblemName::Wcc => ProblemKind::Wcc,
            ProblemName::Pr => ProblemKind::Pr { damping: self.damping, iterations: self.iters },
        }
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = 4)]
    pub cores: u32,
    #[arg(long, default_value_t = 16)]
    pub lanes: u32,
    #[arg(long, default_value_t = 8)]
    pub pipelines: u32,
    /// Total scratch capacity over all cores is 2^bits labels.
    #[arg(long, default_value_t = 21)]
    pub scratch_bits: u32,
    #[arg(long, default_value_t = 32)]
    pub reorder_slots: u32,
    /// Per-bank queue depth in lines.
    #[arg(long, default_value_t = 4)]
    pub queue_depth: u32,
    #[arg(long, default_value_t = 100)]
    pub stride: u32,
    #[arg(long)]
    pub no_immediate: bool,
    #[arg(long)]
    pub no_skip: bool,
    /// Stride mapping is off by default on a single core.
    #[arg(long)]
    pub no_stride: bool,
    /// Keep stride mapping on a single core.
    #[arg(long, conflicts_with = "no_stride")]
    pub force_stride: bool,
    #[arg(long)]
    pub max_iterations: Option<u32>,
    /// Make neighbor updates visible only in the next iteration.
    #[arg(long)]
    pub sync: bool,
}

impl ConfigArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        if self.no_immediate && !self.no_skip {
            bail!("--no-immediate forbids prefetch skipping; add --no-skip");
        }
        let flags = OptFlags {
            immediate_updates: !self.no_immediate,
            prefetch_skipping: !self.no_skip,
            stride_mapping: !self.no_stride && (self.cores > 1 || self.force_stride),
        };
        let cfg = RunConfig {
            cores: self.cores,
            lanes: self.lanes,
            pipelines: self.pipelines,
            scratch_bits: self.scratch_bits,
            reorder_slots: self.reorder_slots,
            queue_depth: self.queue_depth,
            stride: self.stride,
            flags,
            max_iterations: self.max_iterations,
            sync_reference: self.sync,
            trace: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
