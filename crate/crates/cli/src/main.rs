mod args;
mod source;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::Parser;
use serde_json::json;

use graphscale::crossbar::trace_csv;
use graphscale::engine::{ablation_run, async_vs_sync, prepare_graph, run_problem, LabelVec, OptFlags, RunConfig};
use graphscale::graph::{rmat_generate, INF};
use graphscale::metrics::{ablation_csv, SimReport};
use graphscale::partition::{balance_report, build_partitions, dump_partitions, footprint_report, PartitionGeometry};
use graphscale::udf::ProblemKind;
use graphscale::verify::{check_labels, run_suite, SuiteOptions};

use args::{Cli, Command, ConfigArgs, GraphArgs, ProblemArgs};
use source::LoadedGraph;

/// Set to a directory to dump crossbar and emission traces from `run`.
const TRACE_DIR_ENV: &str = "GRAPHSCALE_TRACE_DIR";

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;

/// Word labels are 32 bits; used to size partitions outside a run.
const WORD_LABEL_BITS: u32 = 32;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Partition { graph, config, out } => partition(&graph, &config, &out),
        Command::Run { graph, problem, config, out, labels, csv_dir, frequency_mhz } => {
            run(&graph, &problem, &config, out.as_deref(), labels.as_deref(), csv_dir.as_deref(), frequency_mhz)
        }
        Command::Verify { cores, max_vertices, out, inject_fault } => verify(cores, max_vertices, out.as_deref(), inject_fault),
        Command::Ablate { graph, problem, config, out } => ablate(&graph, &problem, &config, out.as_deref()),
        Command::Analyze { graph, config, root, out } => analyze(&graph, &config, root, out.as_deref()),
        Command::Generate { scale, degree, seed, out } => generate(scale, degree, seed, &out),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Maps an input vertex id into the loaded graph's numbering.
fn map_vertex(loaded: &LoadedGraph, v: u32) -> Result<u32> {
    match &loaded.remap {
        None => Ok(v),
        Some(r) => r
            .old_to_new
            .get(v as usize)
            .copied()
            .flatten()
            .ok_or_else(|| anyhow!("vertex {v} was dropped by --compress (no out-edges)")),
    }
}

fn map_kind(loaded: &LoadedGraph, kind: ProblemKind) -> Result<ProblemKind> {
    Ok(match kind {
        ProblemKind::Bfs { root } => ProblemKind::Bfs { root: map_vertex(loaded, root)? },
        other => other,
    })
}

fn preprocessing_notes(loaded: &LoadedGraph, kind: &ProblemKind) -> Vec<String> {
    let mut notes = Vec::new();
    if let Some(r) = &loaded.remap {
        notes.push(format!(
            "vertex-range compression kept {} of {} vertices; dropped vertices carry no labels, so results differ from the uncompressed graph",
            r.new_to_old.len(),
            r.old_to_new.len()
        ));
    }
    if kind.needs_symmetric_graph() && loaded.graph.directed {
        notes.push("edges symmetrized for weak connectivity".into());
    }
    notes
}

fn partition(graph: &GraphArgs, config: &ConfigArgs, out: &Path) -> Result<u8> {
    let loaded = source::load(graph)?;
    let cfg = config.to_config()?;
    let g = &loaded.graph;
    let geometry = PartitionGeometry::compute(g.n, cfg.cores, cfg.lanes, cfg.scratch_capacity(WORD_LABEL_BITS))?;
    let pg = build_partitions(g, &geometry, cfg.flags.stride_mapping.then_some(cfg.stride))?;
    dump_partitions(&pg, out)?;
    let footprint = footprint_report(g.num_edges(), &geometry).ok();
    let summary = json!({
        "graph": loaded.name,
        "geometry": geometry,
        "balance": balance_report(&pg),
        "footprint": footprint,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(0)
}

fn labels_text(loaded: &LoadedGraph, labels: &LabelVec) -> String {
    let original = |v: usize| loaded.remap.as_ref().map_or(v as u32, |r| r.new_to_old[v]);
    let mut s = String::new();
    match labels {
        LabelVec::Words(w) => {
            for (v, &l) in w.iter().enumerate() {
                if l == INF {
                    let _ = writeln!(s, "{} inf", original(v));
                } else {
                    let _ = writeln!(s, "{} {}", original(v), l);
                }
            }
        }
        LabelVec::Ranks(r) => {
            for (v, &l) in r.iter().enumerate() {
                let _ = writeln!(s, "{} {}", original(v), l);
            }
        }
    }
    s
}

fn run(
    graph: &GraphArgs,
    problem: &ProblemArgs,
    config: &ConfigArgs,
    out: Option<&Path>,
    labels: Option<&Path>,
    csv_dir: Option<&Path>,
    frequency_mhz: f64,
) -> Result<u8> {
    let loaded = source::load(graph)?;
    let kind = map_kind(&loaded, problem.kind())?;
    let mut cfg = config.to_config()?;
    let trace_dir = std::env::var_os(TRACE_DIR_ENV).filter(|d| !d.is_empty());
    cfg.trace = trace_dir.is_some();

    let g = prepare_graph(&loaded.graph, &kind);
    let run = run_problem(&g, kind, &cfg)?;
    let verdict = check_labels(&g, &kind, &run.labels)?;
    let passed = verdict.passed;
    let mut report = SimReport::new(&loaded.name, g.n, &run, &cfg, frequency_mhz, Some(verdict))?;
    report.preprocessing = preprocessing_notes(&loaded, &kind);

    emit(&(report.to_json()? + "\n"), out)?;
    if let Some(path) = labels {
        emit(&labels_text(&loaded, &run.labels), Some(path))?;
    }
    if let Some(dir) = csv_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("iterations.csv"), report.iterations_csv())?;
        fs::write(dir.join("channels.csv"), report.channels_csv())?;
    }
    if let Some(dir) = trace_dir {
        let dir = Path::new(&dir);
        fs::create_dir_all(dir)?;
        fs::write(dir.join("crossbar_trace.csv"), trace_csv(&run.outcome.trace.crossbar))?;
        fs::write(dir.join("emissions.csv"), run.outcome.trace.emissions_csv())?;
    }

    // Labels of an unfinished run are not expected to match the reference.
    if !report.converged {
        eprintln!("warning: stopped after {} iterations without converging", report.iterations);
        return Ok(EXIT_NOT_CONVERGED);
    }
    if !passed {
        eprintln!("error: labels disagree with the reference result");
        return Ok(EXIT_VERIFY_FAILED);
    }
    Ok(0)
}

fn verify(cores: Vec<u32>, max_vertices: Option<u32>, out: Option<&Path>, inject_fault: bool) -> Result<u8> {
    let opts = SuiteOptions { cores, max_vertices, inject_fault, ..SuiteOptions::default() };
    for &c in &opts.cores {
        RunConfig::for_cores(c).validate()?;
    }
    let rows = run_suite(&opts);
    let failed = rows.iter().filter(|r| !r.passed).count();
    for r in &rows {
        println!(
            "{:<6} {:<28} {:<4} cores={} flags={:<22} iterations={:<5} cycles={:<10} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.graph,
            r.problem,
            r.cores,
            r.flags,
            r.iterations,
            r.total_cycles,
            r.detail
        );
    }
    println!("{} of {} cases passed", rows.len() - failed, rows.len());
    if let Some(path) = out {
        let mut csv = String::from("graph,problem,cores,flags,iterations,converged,total_cycles,passed\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{},{},{},{},{},{}", r.graph, r.problem, r.cores, r.flags, r.iterations, r.converged, r.total_cycles, r.passed);
        }
        emit(&csv, Some(path))?;
    }
    Ok(if failed == 0 && !rows.is_empty() { 0 } else { EXIT_VERIFY_FAILED })
}

fn ablate(graph: &GraphArgs, problem: &ProblemArgs, config: &ConfigArgs, out: Option<&Path>) -> Result<u8> {
    let loaded = source::load(graph)?;
    let kind = map_kind(&loaded, problem.kind())?;
    let cfg = config.to_config()?;
    let rows = ablation_run(&loaded.graph, kind, &cfg)?;
    emit(&ablation_csv(&rows), out)?;
    Ok(0)
}

fn analyze(graph: &GraphArgs, config: &ConfigArgs, root: u32, out: Option<&Path>) -> Result<u8> {
    let loaded = source::load(graph)?;
    let cfg = config.to_config()?;
    let g = &loaded.graph;
    let mut footprints = Vec::new();
    let mut p = 1;
    while p <= cfg.cores {
        let c = cfg.clone().with_cores(p);
        let geometry = PartitionGeometry::compute(g.n, p, c.lanes, c.scratch_capacity(WORD_LABEL_BITS))?;
        footprints.push(json!({ "cores": p, "report": footprint_report(g.num_edges(), &geometry)? }));
        p *= 2;
    }
    // The asynchronous side needs immediate updates even under --no-immediate.
    let base = RunConfig { flags: OptFlags { immediate_updates: true, ..cfg.flags }, ..cfg.clone() };
    let bfs = async_vs_sync(g, map_kind(&loaded, ProblemKind::Bfs { root })?, &base)?;
    let wcc = async_vs_sync(g, ProblemKind::Wcc, &base)?;
    let summary = json!({
        "graph": loaded.name,
        "vertices": g.n,
        "edges": g.num_edges(),
        "average_degree": g.num_edges() as f64 / g.n.max(1) as f64,
        "footprint": footprints,
        "async_vs_sync": { "bfs": bfs, "wcc": wcc },
    });
    emit(&(serde_json::to_string_pretty(&summary)? + "\n"), out)?;
    Ok(0)
}

fn generate(scale: u32, degree: u32, seed: u64, out: &Path) -> Result<u8> {
    if scale > 26 || degree == 0 {
        return Err(anyhow!("scale must be at most 26 and degree positive"));
    }
    emit(&rmat_generate(scale, degree, seed).to_edge_list(), Some(out))?;
    Ok(0)
}
