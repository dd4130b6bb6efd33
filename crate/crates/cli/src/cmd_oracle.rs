//! `oracle`: truncated-enumeration cross-checks of the closed-form routes,
//! each reported with the enumeration's tail bound.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use loopsoup_core::loops::{truncated_first_return, truncated_log_partition, truncated_two_point};
use loopsoup_core::observables::{first_return, two_point_green};
use loopsoup_core::TransferOperator;
use serde::Serialize;

use crate::opts::{self, Common};
use crate::output::{self, Q};

#[derive(Args, Debug)]
pub struct OracleCmd {
    #[command(flatten)]
    common: Common,

    /// Which identity to cross-check: partition | two-point | first-return
    #[arg(long)]
    check: Option<String>,

    /// Enumeration length cap
    #[arg(long)]
    lmax: Option<usize>,

    /// Edge pair for --check two-point, e.g. "e17,e23" or "17,23"
    #[arg(long)]
    pair: Option<String>,

    /// Edge for --check first-return (default 0)
    #[arg(long)]
    edge: Option<usize>,

    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One oracle-vs-closed-form comparison.
#[derive(Serialize)]
struct Comparison {
    name: String,
    oracle: Q,
    closed_form: Q,
    gap: f64,
    within_tail: bool,
}

#[derive(Serialize)]
struct OracleReport {
    instance: String,
    check: String,
    lmax: usize,
    comparisons: Vec<Comparison>,
}

fn compare(name: impl Into<String>, value: f64, tail: f64, exact: f64) -> Comparison {
    let gap = (value - exact).abs();
    Comparison {
        name: name.into(),
        oracle: Q { value, error: tail },
        closed_form: Q::exact(exact),
        gap,
        within_tail: gap <= tail,
    }
}

pub fn parse_edge(s: &str) -> Result<usize> {
    s.trim()
        .trim_start_matches('e')
        .parse()
        .with_context(|| format!("edge id \"{s}\""))
}

pub fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(',').with_context(|| format!("pair \"{s}\" (want \"e17,e23\")"))?;
    Ok((parse_edge(a)?, parse_edge(b)?))
}

impl OracleCmd {
    pub fn run(mut self) -> Result<()> {
        let cfg = opts::load_config(&self.common.config)?;
        opts::merge_common(&mut self.common, &cfg)?;
        opts::fill(&mut self.check, &cfg, "check")?;
        opts::fill(&mut self.lmax, &cfg, "lmax")?;
        opts::fill(&mut self.pair, &cfg, "pair")?;
        opts::fill(&mut self.edge, &cfg, "edge")?;
        opts::fill(&mut self.out, &cfg, "out")?;

        let inst = opts::resolve(&self.common)?;
        let check = self.check.as_deref().unwrap_or("partition").to_string();
        let lmax = self.lmax.unwrap_or(12);
        let op = TransferOperator::new(&inst.graph)?;

        let comparisons = match check.as_str() {
            "partition" => {
                let t = truncated_log_partition(&op, lmax)?;
                vec![compare("log_partition", t.value, t.tail_bound, op.log_partition_det()?)]
            }
            "two-point" => {
                let (e, f) = parse_pair(
                    self.pair.as_deref().context("--check two-point needs --pair E,F")?,
                )?;
                if e == f {
                    bail!("two-point needs two distinct edges");
                }
                let t = truncated_two_point(&op, e, f, lmax)?;
                let exact = two_point_green(&op.green()?, e, f)?;
                vec![compare(format!("two_point e{e},e{f}"), t.value, t.tail_bound, exact)]
            }
            "first-return" => {
                let e = self.edge.unwrap_or(0);
                if e >= inst.graph.n_edges() {
                    bail!("edge {e} out of range (graph has {} edges)", inst.graph.n_edges());
                }
                let frv = first_return(&op, e)?;
                let (a, ar) = (2 * e, 2 * e + 1);
                [
                    ("return_fwd", frv.return_fwd, a, a),
                    ("return_rev", frv.return_rev, ar, ar),
                    ("passage_fwd", frv.passage_fwd, a, ar),
                    ("passage_rev", frv.passage_rev, ar, a),
                ]
                .into_iter()
                .map(|(name, exact, root, terminal)| {
                    let t = truncated_first_return(&op, root, terminal, lmax);
                    compare(format!("{name} e{e}"), t.value, t.tail_bound, exact)
                })
                .collect()
            }
            other => bail!("unknown check \"{other}\" (partition, two-point, first-return)"),
        };

        let all_within = comparisons.iter().all(|c| c.within_tail);
        let worst_gap = comparisons.iter().map(|c| c.gap).fold(0.0, f64::max);
        let report = OracleReport { instance: inst.label, check, lmax, comparisons };
        output::write_artifact(&self.out, &output::to_json(&report)?)?;
        output::summary(
            &self.out,
            &format!(
                "oracle: {} at length cap {lmax}: max gap {worst_gap:.3e}, within tail: {all_within}",
                report.check
            ),
        );
        if !all_within {
            bail!("oracle disagrees with the closed form beyond its tail bound");
        }
        Ok(())
    }
}
