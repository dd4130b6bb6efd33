//! `loopsoup`: exact computation, sampling, and cross-validation of
//! non-backtracking loop ensembles on weighted graphs and tori.

mod cmd_exact;
mod cmd_gibbs;
mod cmd_observables;
mod cmd_oracle;
mod cmd_sample;
mod cmd_scan;
mod cmd_spin;
mod cmd_verify;
mod opts;
mod output;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "loopsoup",
    version,
    about = "Exact computation, sampling, and cross-validation of non-backtracking \
             loop ensembles on weighted graphs and tori"
)]
enum Cli {
    /// Closed-form log partition function by every route, with identity residuals
    Exact(cmd_exact::ExactCmd),
    /// Truncated-enumeration cross-checks with tail bounds
    Oracle(cmd_oracle::OracleCmd),
    /// Sample soup realizations to JSON-lines occupation fields
    Sample(cmd_sample::SampleCmd),
    /// Vertex-weight-law checks: state sums and sampled-field frequency fits
    Gibbs(cmd_gibbs::GibbsCmd),
    /// Edge observables as CSV: means, covariances, generating function
    Observables(cmd_observables::ObservablesCmd),
    /// Weight-grid scans of infinite-volume quantities as CSV
    Scan(cmd_scan::ScanCmd),
    /// Winding-parity spin Gram matrix across a reflection
    Spin(cmd_spin::SpinCmd),
    /// Run every identity check that applies to an instance
    Verify(cmd_verify::VerifyCmd),
}

fn run() -> anyhow::Result<()> {
    opts::thread_env()?;
    match Cli::parse() {
        Cli::Exact(c) => c.run(),
        Cli::Oracle(c) => c.run(),
        Cli::Sample(c) => c.run(),
        Cli::Gibbs(c) => c.run(),
        Cli::Observables(c) => c.run(),
        Cli::Scan(c) => c.run(),
        Cli::Spin(c) => c.run(),
        Cli::Verify(c) => c.run(),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
