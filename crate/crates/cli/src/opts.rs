//! Shared option resolution: graph/torus sources, config-file merging, and
//! the subcritical-weights guard every computation needs.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use loopsoup_core::transfer::critical_margin;
use loopsoup_core::{Classification, TorusSpec, WeightedGraph};
use serde::de::DeserializeOwned;

/// Options every subcommand shares: where the graph comes from, an optional
/// homogeneous weight override, and an optional config file whose entries are
/// used for any flag not given on the command line.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Graph file: JSON {"vertices": n, "edges": [[u, v, x], ...]}
    #[arg(long)]
    pub graph: Option<PathBuf>,

    /// Torus shape DxN (e.g. 2x5 = the 5×5 two-dimensional torus)
    #[arg(long)]
    pub torus: Option<String>,

    /// Homogeneous edge weight; required with --torus, overrides file weights
    #[arg(long)]
    pub x: Option<f64>,

    /// JSON config file; command-line flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A resolved problem instance. `spec` is present when the graph came from a
/// torus shape, enabling the torus-only routes (Fourier log partition,
/// reflection maps).
pub struct Instance {
    pub graph: WeightedGraph,
    pub spec: Option<TorusSpec>,
    pub label: String,
}

/// Loads the config file as a JSON object (`Null` when absent).
pub fn load_config(path: &Option<PathBuf>) -> Result<serde_json::Value> {
    match path {
        None => Ok(serde_json::Value::Null),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            let v: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))?;
            if !v.is_object() {
                bail!("config {} must be a JSON object", p.display());
            }
            Ok(v)
        }
    }
}

/// Fills a missing flag from the config file entry of the same name.
pub fn fill<T: DeserializeOwned>(
    slot: &mut Option<T>,
    cfg: &serde_json::Value,
    key: &str,
) -> Result<()> {
    if slot.is_none() {
        if let Some(v) = cfg.get(key) {
            *slot = Some(
                serde_json::from_value(v.clone())
                    .with_context(|| format!("config entry \"{key}\""))?,
            );
        }
    }
    Ok(())
}

/// Applies the config file to the shared options.
pub fn merge_common(common: &mut Common, cfg: &serde_json::Value) -> Result<()> {
    fill(&mut common.graph, cfg, "graph")?;
    fill(&mut common.torus, cfg, "torus")?;
    fill(&mut common.x, cfg, "x")?;
    Ok(())
}

/// Parses a "DxN" shape such as "2x5".
pub fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let (d, n) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("shape \"{s}\" is not of the form DxN (e.g. 2x5)"))?;
    Ok((
        d.trim().parse().with_context(|| format!("dimension in \"{s}\""))?,
        n.trim().parse().with_context(|| format!("side length in \"{s}\""))?,
    ))
}

/// Builds the instance from the merged options and refuses weights that are
/// not strictly subcritical, reporting the margin classification.
pub fn resolve(common: &Common) -> Result<Instance> {
    let inst = match (&common.graph, &common.torus) {
        (Some(_), Some(_)) => bail!("give either --graph or --torus, not both"),
        (None, None) => bail!("a graph source is required: --graph FILE or --torus DxN"),
        (None, Some(shape)) => {
            let (d, n) = parse_shape(shape)?;
            let x = common.x.context("--torus needs --x (homogeneous edge weight)")?;
            let spec = TorusSpec::homogeneous(d, n, x)?;
            let graph = spec.build()?;
            Instance { graph, spec: Some(spec), label: format!("torus {d}x{n}, x={x}") }
        }
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading graph {}", path.display()))?;
            let mut graph = WeightedGraph::from_json(&text)?;
            let mut label = format!("graph {}", path.display());
            if let Some(x) = common.x {
                graph = graph.with_uniform_weight(x)?;
                label.push_str(&format!(", x={x}"));
            }
            Instance { graph, spec: None, label }
        }
    };
    let cm = critical_margin(&inst.graph);
    if cm.classification != Classification::Subcritical {
        let worst = cm.margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        bail!(
            "weights are not subcritical (classification: {}, max vertex margin {worst:.6}); \
             partition functions are finite only below criticality",
            cm.classification
        );
    }
    Ok(inst)
}

/// Checks the thread-count environment variable. Computation is serial; any
/// requested count is validated and capped at 1 with a note on stderr.
pub fn thread_env() -> Result<()> {
    if let Ok(v) = std::env::var("LOOPSOUP_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("LOOPSOUP_THREADS=\"{v}\" is not a thread count"))?;
        if n == 0 {
            bail!("LOOPSOUP_THREADS must be at least 1");
        }
        if n > 1 {
            eprintln!("note: this build computes serially; LOOPSOUP_THREADS={n} capped to 1");
        }
    }
    Ok(())
}
