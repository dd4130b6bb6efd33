//! `gibbs`: checks of the per-vertex pairing-weight law — the truncated
//! state-sum against the determinant partition value, or a frequency fit of
//! sampled fields against the exact cell probabilities.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use loopsoup_core::gibbs::{brute_force_partition, gibbs_fit_test, GibbsFit};
use loopsoup_core::sampler::OccupationField;
use loopsoup_core::TransferOperator;
use serde::{Deserialize, Serialize};

use crate::opts::{self, Common};
use crate::output::{self, Q};

#[derive(Args, Debug)]
pub struct GibbsCmd {
    #[command(flatten)]
    common: Common,

    /// Which check to run: partition | fit
    #[arg(long)]
    check: Option<String>,

    /// Per-edge count cap of the enumerated state space
    #[arg(long)]
    nmax: Option<u32>,

    /// JSON-lines occupation fields (from `sample`) for --check fit
    #[arg(long)]
    samples: Option<PathBuf>,

    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize)]
struct FieldLine {
    counts: Vec<u32>,
}

#[derive(Serialize)]
struct PartitionReport {
    instance: String,
    nmax: u32,
    /// State sum over fields with all counts ≤ nmax; undershoots the exact
    /// value by the omitted tail, measured by `gap`.
    truncated_sum: Q,
    exp_log_partition: Q,
    gap: f64,
}

/// Refuses state spaces too large to enumerate: the cell count is
/// (nmax + 2)^edges (one slot beyond the cap plus the overflow class).
fn guard_state_space(n_edges: usize, nmax: u32) -> Result<()> {
    let cells = ((nmax as f64) + 2.0).powi(n_edges as i32);
    if cells > 2e7 {
        bail!(
            "state space of {n_edges} edges at count cap {nmax} has ~{cells:.1e} cells; \
             this check is for small graphs (≲ 10 edges)"
        );
    }
    Ok(())
}

pub fn read_fields(path: &PathBuf, n_edges: usize) -> Result<Vec<OccupationField>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut fields = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: FieldLine = serde_json::from_str(line)
            .with_context(|| format!("{}:{}: bad field line", path.display(), i + 1))?;
        if f.counts.len() != n_edges {
            bail!(
                "{}:{}: field has {} counts but the graph has {n_edges} edges",
                path.display(),
                i + 1,
                f.counts.len()
            );
        }
        fields.push(OccupationField { counts: f.counts });
    }
    if fields.is_empty() {
        bail!("{} holds no fields", path.display());
    }
    Ok(fields)
}

impl GibbsCmd {
    pub fn run(mut self) -> Result<()> {
        let cfg = opts::load_config(&self.common.config)?;
        opts::merge_common(&mut self.common, &cfg)?;
        opts::fill(&mut self.check, &cfg, "check")?;
        opts::fill(&mut self.nmax, &cfg, "nmax")?;
        opts::fill(&mut self.samples, &cfg, "samples")?;
        opts::fill(&mut self.out, &cfg, "out")?;

        let inst = opts::resolve(&self.common)?;
        let check = self.check.as_deref().unwrap_or("partition").to_string();
        let nmax = self.nmax.unwrap_or(4);
        guard_state_space(inst.graph.n_edges(), nmax)?;

        match check.as_str() {
            "partition" => {
                let z_sum = brute_force_partition(&inst.graph, nmax)?;
                let z_det =
                    TransferOperator::new(&inst.graph)?.log_partition_det()?.exp();
                let gap = (z_sum - z_det).abs();
                let report = PartitionReport {
                    instance: inst.label,
                    nmax,
                    truncated_sum: Q { value: z_sum, error: gap },
                    exp_log_partition: Q::exact(z_det),
                    gap,
                };
                output::write_artifact(&self.out, &output::to_json(&report)?)?;
                output::summary(
                    &self.out,
                    &format!("gibbs partition: state sum vs determinant gap {gap:.3e} (cap {nmax})"),
                );
            }
            "fit" => {
                let path = self.samples.context("--check fit needs --samples FILE.jsonl")?;
                let fields = read_fields(&path, inst.graph.n_edges())?;
                let fit: GibbsFit = gibbs_fit_test(&fields, &inst.graph, nmax)?;
                let line = format!(
                    "gibbs fit: {} fields in {} cells: chi² = {:.2} (dof {}), p = {:.4}",
                    fit.n_samples, fit.cells_tested, fit.test.statistic, fit.test.dof,
                    fit.test.p_value
                );
                output::write_artifact(&self.out, &output::to_json(&fit)?)?;
                output::summary(&self.out, &line);
            }
            other => bail!("unknown check \"{other}\" (partition, fit)"),
        }
        Ok(())
    }
}
