//! `observables`: closed-form edge observables as CSV — mean occupations,
//! two-point covariance, and the occupation generating function on a z-grid.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use loopsoup_core::observables::{
    first_return, mean_occupation, one_point_green, pgf, two_point_green, void_probability,
};
use loopsoup_core::TransferOperator;
use num_complex::Complex;

use crate::cmd_oracle::parse_pair;
use crate::opts::{self, Common};
use crate::output;

#[derive(Args, Debug)]
pub struct ObservablesCmd {
    #[command(flatten)]
    common: Common,

    /// Edge pair, e.g. "e17,e23"; first edge anchors one-point/pgf rows
    #[arg(long)]
    pair: Option<String>,

    /// Comma-separated reports: one-point, two-point, pgf, void
    /// (default: all that apply)
    #[arg(long)]
    report: Option<String>,

    /// Real z-grid for pgf rows as "start:end:points" (default "0:1:11")
    #[arg(long)]
    z_grid: Option<String>,

    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, end, points] = parts[..] else {
        bail!("z-grid \"{s}\" is not of the form start:end:points");
    };
    let (a, b): (f64, f64) = (start.parse()?, end.parse()?);
    let k: usize = points.parse()?;
    if k < 2 {
        bail!("z-grid needs at least 2 points");
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}

impl ObservablesCmd {
    pub fn run(mut self) -> Result<()> {
        let cfg = opts::load_config(&self.common.config)?;
        opts::merge_common(&mut self.common, &cfg)?;
        opts::fill(&mut self.pair, &cfg, "pair")?;
        opts::fill(&mut self.report, &cfg, "report")?;
        opts::fill(&mut self.z_grid, &cfg, "z_grid")?;
        opts::fill(&mut self.out, &cfg, "out")?;

        let inst = opts::resolve(&self.common)?;
        let pair = self.pair.as_deref().map(parse_pair).transpose()?;
        for e in pair.iter().flat_map(|&(e, f)| [e, f]) {
            if e >= inst.graph.n_edges() {
                bail!("edge {e} out of range (graph has {} edges)", inst.graph.n_edges());
            }
        }
        let reports: Vec<String> = match &self.report {
            Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
            None => {
                let mut r = vec!["one-point".to_string()];
                if pair.is_some() {
                    r.push("two-point".into());
                }
                r.extend(["pgf".into(), "void".into()]);
                r
            }
        };
        let zs = parse_grid(self.z_grid.as_deref().unwrap_or("0:1:11"))?;

        let op = TransferOperator::new(&inst.graph)?;
        let green = op.green()?;
        let anchor_edges: Vec<usize> = match pair {
            Some((e, f)) if e != f => vec![e, f],
            Some((e, _)) => vec![e],
            None => vec![0],
        };

        let mut csv = String::from("report,edge_a,edge_b,z,value,error\n");
        let mut rows = 0usize;
        for rep in &reports {
            match rep.as_str() {
                "one-point" => {
                    for &e in &anchor_edges {
                        // Cross-check the two routes; their gap is the error field.
                        let v = one_point_green(&green, e);
                        let v2 = mean_occupation(&first_return(&op, e)?);
                        writeln!(csv, "one_point,{e},,,{v:.17e},{:.3e}", (v - v2).abs())?;
                        rows += 1;
                    }
                }
                "two-point" => {
                    let (e, f) = pair.context("--report two-point needs --pair E,F")?;
                    if e == f {
                        bail!("two-point needs two distinct edges");
                    }
                    let v = two_point_green(&green, e, f)?;
                    writeln!(csv, "two_point,{e},{f},,{v:.17e},0")?;
                    rows += 1;
                }
                "pgf" => {
                    let e = anchor_edges[0];
                    let frv = first_return(&op, e)?;
                    for &z in &zs {
                        let p = pgf(&frv, Complex::new(z, 0.0));
                        // Real z in the disk gives a real value; imaginary
                        // leakage is the numerical error.
                        writeln!(csv, "pgf,{e},,{z:.17e},{:.17e},{:.3e}", p.re, p.im.abs())?;
                        rows += 1;
                    }
                }
                "void" => {
                    for &e in &anchor_edges {
                        let v = void_probability(&first_return(&op, e)?);
                        writeln!(csv, "void,{e},,,{v:.17e},0")?;
                        rows += 1;
                    }
                }
                other => {
                    bail!("unknown report \"{other}\" (one-point, two-point, pgf, void)")
                }
            }
        }

        output::write_artifact(&self.out, &csv)?;
        let head = one_point_green(&green, anchor_edges[0]);
        output::summary(
            &self.out,
            &format!(
                "observables: {rows} rows for {}; mean occupation of edge {} = {head:.6} ± 0",
                inst.label, anchor_edges[0]
            ),
        );
        Ok(())
    }
}
