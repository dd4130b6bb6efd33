//! `spin`: empirical Gram matrix of winding-parity spin products across a
//! reflection (or, as a negative control, a translation) on a square patch.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use loopsoup_core::sampler::SoupSampler;
use loopsoup_core::spin::{reflection_gram, GramOptions, PartnerMap};
use loopsoup_core::TorusSpec;

use crate::opts::{self, fill, load_config, parse_shape};
use crate::output;

#[derive(Args, Debug)]
pub struct SpinCmd {
    /// Patch shape NxN (a square torus, e.g. 20x20)
    #[arg(long)]
    patch: Option<String>,

    /// Homogeneous edge weight
    #[arg(long)]
    x: Option<f64>,

    /// Number of sampled soup realizations
    #[arg(long)]
    reps: Option<u64>,

    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,

    /// Loop-length cap of the sampler
    #[arg(long)]
    lmax: Option<usize>,

    /// Reflection line as "x=10": dual row the first coordinate reflects through
    #[arg(long)]
    line: Option<String>,

    /// Replace the reflection by a translation "di,dj" (negative control)
    #[arg(long)]
    translate: Option<String>,

    /// Window of dual sites "i,j;i,j;..." (default: three sites hugging the line)
    #[arg(long)]
    window: Option<String>,

    /// Largest spin-product size over the window
    #[arg(long)]
    max_subset: Option<usize>,

    /// JSON config file; command-line flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write the JSON Gram report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_line(s: &str) -> Result<usize> {
    let v = s.split_once('=').map_or(s, |(_, v)| v);
    v.trim().parse().with_context(|| format!("reflection line \"{s}\""))
}

fn parse_window(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(';')
        .map(|site| {
            let (i, j) =
                site.split_once(',').with_context(|| format!("window site \"{site}\""))?;
            Ok((i.trim().parse()?, j.trim().parse()?))
        })
        .collect()
}

impl SpinCmd {
    pub fn run(mut self) -> Result<()> {
        let cfg = load_config(&self.config)?;
        fill(&mut self.patch, &cfg, "patch")?;
        fill(&mut self.x, &cfg, "x")?;
        fill(&mut self.reps, &cfg, "reps")?;
        fill(&mut self.seed, &cfg, "seed")?;
        fill(&mut self.lmax, &cfg, "lmax")?;
        fill(&mut self.line, &cfg, "line")?;
        fill(&mut self.translate, &cfg, "translate")?;
        fill(&mut self.window, &cfg, "window")?;
        fill(&mut self.max_subset, &cfg, "max_subset")?;
        fill(&mut self.out, &cfg, "out")?;
        opts::thread_env()?;

        let (a, b) = parse_shape(self.patch.as_deref().context("--patch NxN is required")?)?;
        if a != b {
            bail!("the patch must be square (got {a}x{b})");
        }
        let n = a;
        let x = self.x.context("--x is required")?;
        let reps = self.reps.context("--reps is required")?;
        let seed = self.seed.unwrap_or(42);
        let lmax = self.lmax.unwrap_or(20);
        let line = self.line.as_deref().map(parse_line).transpose()?;

        let partner = match (&self.translate, line) {
            (Some(t), _) => {
                let (di, dj) =
                    t.split_once(',').with_context(|| format!("translation \"{t}\""))?;
                PartnerMap::Translate { di: di.trim().parse()?, dj: dj.trim().parse()? }
            }
            (None, Some(line)) => PartnerMap::ReflectRows { line },
            (None, None) => bail!("give --line x=L (reflection) or --translate di,dj"),
        };
        let window = match &self.window {
            Some(w) => parse_window(w)?,
            None => {
                let row = line.context("a default window needs --line")? + 1;
                vec![(row, n / 2 - 1), (row, n / 2), (row, n / 2 + 1)]
            }
        };

        let spec = TorusSpec::homogeneous(2, n, x)?;
        let sampler = SoupSampler::new(&spec.build()?, lmax)?;
        let options = GramOptions { window, partner, max_subset: self.max_subset.unwrap_or(2) };
        let report = reflection_gram(&sampler, &spec, &options, reps, seed)?;

        output::write_artifact(&self.out, &output::to_json(&report)?)?;
        output::summary(
            &self.out,
            &format!(
                "spin: {n}x{n} patch, x={x}, {reps} samples: {} products, max asymmetry \
                 {:.2}σ, min symmetrized eigenvalue {:.3e} (-3σ floor {:.3e})",
                report.subsets.len(),
                report.max_asymmetry_sigmas,
                report.min_symmetrized_eigenvalue,
                -3.0 * report.max_se
            ),
        );
        Ok(())
    }
}
