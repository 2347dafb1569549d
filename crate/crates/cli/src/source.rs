use anyhow::{anyhow, bail, Context, Result};

use graphscale::graph::{chain, local_star, multi_star, parse_edge_list, ring, rmat_generate, star, two_components, Graph, VertexRemap};

use crate::args::GraphArgs;

pub struct LoadedGraph {
    pub name: String,
    pub graph: Graph,
    /// Set when `--compress` renumbered the vertices.
    pub remap: Option<VertexRemap>,
}

fn numbers(rest: &str, count: usize, name: &str) -> Result<Vec<u32>> {
    let parts: Vec<u32> = rest
        .split('-')
        .map(|p| p.parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("built-in graph {name:?} has a non-numeric parameter"))?;
    if parts.len() != count {
        bail!("built-in graph {name:?} takes {count} parameter(s)");
    }
    Ok(parts)
}

pub fn builtin(name: &str, seed: u64) -> Result<Graph> {
    // Longest prefixes first: `multi-star-` before `star-`.
    let families: [(&str, usize); 7] =
        [("multi-star-", 2), ("local-star-", 2), ("two-components-", 2), ("chain-", 1), ("star-", 1), ("ring-", 1), ("rmat-", 2)];
    for (prefix, count) in families {
        if let Some(rest) = name.strip_prefix(prefix) {
            let a = numbers(rest, count, name)?;
            let check = |ok: bool| if ok { Ok(()) } else { Err(anyhow!("built-in graph {name:?} has out-of-range parameters")) };
            return Ok(match prefix {
                "multi-star-" => {
                    check(a[1] < a[0])?;
                    multi_star(a[0], a[1])
                }
                "local-star-" => {
                    check(a[1] < a[0])?;
                    local_star(a[0], a[1])
                }
                "two-components-" => two_components(a[0], a[1]),
                "chain-" => chain(a[0]),
                "star-" => star(a[0]),
                "ring-" => ring(a[0]),
                _ => {
                    check(a[0] <= 26 && a[1] > 0)?;
                    rmat_generate(a[0], a[1], seed)
                }
            });
        }
    }
    bail!("unknown built-in graph {name:?}")
}

pub fn load(args: &GraphArgs) -> Result<LoadedGraph> {
    let (name, graph) = match (&args.source.graph, &args.source.builtin) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read graph file {}", path.display()))?;
            let g = parse_edge_list(&text, !args.undirected).with_context(|| format!("cannot parse {}", path.display()))?;
            let name = path.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned());
            (name, g)
        }
        (None, Some(b)) => (b.clone(), builtin(b, args.seed)?),
        (None, None) => bail!("pass --graph or --builtin"),
    };
    if args.compress {
        let (g, remap) = graph.vertex_range_compress();
        return Ok(LoadedGraph { name, graph: g, remap: Some(remap) });
    }
    Ok(LoadedGraph { name, graph, remap: None })
}
