//! `scan`: infinite-volume quantities along a weight grid, as CSV for
//! external plotting. Quantities: free-energy, one-point, free-energy-deriv
//! (the near-critical derivative scan with its regression summary).

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use loopsoup_core::torus::{
    critical_weight, free_energy_limit, min_scan_gap, one_point_limit, singular_scan, FitKind,
    SCAN_QUAD_TOL,
};

use crate::opts::{self, fill, load_config};
use crate::output;

#[derive(Args, Debug)]
pub struct ScanCmd {
    /// Lattice dimension
    #[arg(long)]
    d: Option<usize>,

    /// Quantity: free-energy | one-point | free-energy-deriv
    #[arg(long)]
    quantity: Option<String>,

    /// Grid start (default: a near-critical ladder for free-energy-deriv)
    #[arg(long)]
    x_from: Option<f64>,

    /// Grid end (exclusive of the critical weight)
    #[arg(long)]
    x_to: Option<f64>,

    /// Number of grid points
    #[arg(long)]
    points: Option<usize>,

    /// Expected derivative order (validated against the scan's own order)
    #[arg(long)]
    order: Option<usize>,

    /// Quadrature tolerance
    #[arg(long)]
    quad_tol: Option<f64>,

    /// JSON config file; command-line flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Near-critical gap ladder used when no explicit grid is given:
/// log-spaced over one decade up from the smallest supported gap, where the
/// singular term dominates the analytic background.
fn default_gaps(d: usize, points: usize) -> Vec<f64> {
    let lo = min_scan_gap(d);
    let hi = 10.0 * min_scan_gap(d);
    let (la, lb) = (hi.ln(), lo.ln());
    (0..points).map(|i| (la + (lb - la) * i as f64 / (points - 1) as f64).exp()).collect()
}

impl ScanCmd {
    pub fn run(mut self) -> Result<()> {
        let cfg = load_config(&self.config)?;
        fill(&mut self.d, &cfg, "d")?;
        fill(&mut self.quantity, &cfg, "quantity")?;
        fill(&mut self.x_from, &cfg, "x_from")?;
        fill(&mut self.x_to, &cfg, "x_to")?;
        fill(&mut self.points, &cfg, "points")?;
        fill(&mut self.order, &cfg, "order")?;
        fill(&mut self.quad_tol, &cfg, "quad_tol")?;
        fill(&mut self.out, &cfg, "out")?;
        opts::thread_env()?;

        let d = self.d.unwrap_or(2);
        let quantity = self.quantity.as_deref().unwrap_or("free-energy").to_string();
        let tol = self.quad_tol.unwrap_or(SCAN_QUAD_TOL);
        let xc = critical_weight(d);

        let xs: Vec<f64> = match (self.x_from, self.x_to) {
            (Some(a), Some(b)) => {
                let k = self.points.unwrap_or(20);
                if k < 2 {
                    bail!("--points must be at least 2");
                }
                (0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()
            }
            (None, None) => {
                default_gaps(d, self.points.unwrap_or(8)).iter().map(|g| xc - g).collect()
            }
            _ => bail!("give both --x-from and --x-to, or neither for the near-critical ladder"),
        };
        if let Some(&bad) = xs.iter().find(|&&x| x >= xc || x <= 0.0) {
            bail!("grid point x = {bad} is outside (0, critical weight {xc:.6})");
        }

        let mut csv = String::from("x,value,deriv_order,deriv_value,quad_error\n");
        let line = match quantity.as_str() {
            "free-energy" => {
                let mut worst = 0.0f64;
                for &x in &xs {
                    let q = free_energy_limit(&vec![x; d], tol)?;
                    writeln!(csv, "{x:.17e},{:.17e},,,{:.3e}", q.value, q.error_estimate)?;
                    worst = worst.max(q.error_estimate);
                }
                format!(
                    "scan: free energy density, d={d}, {} points, worst quadrature error {worst:.3e}",
                    xs.len()
                )
            }
            "one-point" => {
                let mut worst = 0.0f64;
                for &x in &xs {
                    let q = one_point_limit(d, x, tol)?;
                    writeln!(csv, "{x:.17e},{:.17e},,,{:.3e}", q.value, q.error_estimate)?;
                    worst = worst.max(q.error_estimate);
                }
                format!(
                    "scan: mean edge occupation, d={d}, {} points, worst quadrature error {worst:.3e}",
                    xs.len()
                )
            }
            "free-energy-deriv" => {
                let scan = singular_scan(d, &xs, tol)?;
                if let Some(o) = self.order {
                    if o != scan.derivative_order {
                        bail!(
                            "--order {o} does not match the d={d} scan, which measures the \
                             order-{} derivative",
                            scan.derivative_order
                        );
                    }
                }
                for p in &scan.points {
                    writeln!(
                        csv,
                        "{:.17e},{:.17e},{},{:.17e},{:.3e}",
                        p.x, p.free_energy, scan.derivative_order, p.derivative, p.quad_error
                    )?;
                }
                match scan.kind {
                    FitKind::DerivativeVsLogGap => format!(
                        "scan: d={d} order-{} derivative vs log(gap): slope {:.5}, R² = {:.5}",
                        scan.derivative_order, scan.fit.slope, scan.fit.r_squared
                    ),
                    FitKind::OffsetPowerVsGap => format!(
                        "scan: d={d} order-{} derivative ≈ {:.4} + {:.4}·gap^({:.4}), R² = {:.6}",
                        scan.derivative_order,
                        scan.offset.unwrap_or(f64::NAN),
                        scan.fit.intercept,
                        scan.fit.slope,
                        scan.fit.r_squared
                    ),
                }
            }
            other => {
                bail!("unknown quantity \"{other}\" (free-energy, one-point, free-energy-deriv)")
            }
        };

        output::write_artifact(&self.out, &csv)?;
        output::summary(&self.out, &line);
        Ok(())
    }
}
