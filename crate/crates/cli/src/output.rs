//! Output plumbing: every command writes its artifact (JSON or CSV) either to
//! a file or to stdout, and prints a one-line summary. The summary goes to
//! stderr whenever the artifact occupies stdout, so piped output stays clean.

use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;

/// A scalar together with its error or tail bound (0 for exact identities).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Q {
    pub value: f64,
    pub error: f64,
}

impl Q {
    pub fn exact(value: f64) -> Self {
        Q { value, error: 0.0 }
    }
}

/// Serializes a report as pretty JSON with a trailing newline. Identical
/// inputs produce identical bytes.
pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(report).context("serializing report")? + "\n")
}

/// Writes the artifact to `out` or stdout.
pub fn write_artifact(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Prints the one-line summary: to stdout when the artifact went to a file,
/// to stderr when the artifact is on stdout.
pub fn summary(out: &Option<PathBuf>, line: &str) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}
