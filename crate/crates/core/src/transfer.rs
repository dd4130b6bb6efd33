//! The directed-edge transfer operator and the exact determinant routes.
//!
//! For a graph with weights x_e, the transfer operator Λ acts on directed
//! edges: Λ_{a,g} = x_a if head(a) = tail(g) and g ≠ reverse(a), else 0
//! (x_a is the weight of the undirected edge under the *row* index a). Powers
//! of Λ sum weighted non-backtracking walks, so the loop ensemble's log
//! partition function is −½·log det(Id − Λ), finite exactly when the spectral
//! radius ρ(Λ) is below 1.
//!
//! Three more routes to the same number live here and are cross-checked in
//! the tests: the Ihara-type reciprocal det(Id − Λ)^{-1}, a vertex-indexed
//! determinant of Id + D − A with D_{vv} = Σ_{e∋v} x_e²/(1−x_e²) and
//! A_{vu} = x_e/(1−x_e²), and a killed Gaussian free field whose partition
//! function matches after an explicit change of normalization.

use crate::error::{Classification, Error, Result};
use crate::graph::{DirectedEdge, WeightedGraph};
use crate::linalg::{
    cholesky_log_det, lu_log_det, power_iteration_nonneg, POWER_MAX_ITERS, POWER_TOL,
};
use nalgebra::DMatrix;

/// Dense-storage cap on the directed-edge count 2|E|.
pub const DENSE_CAP: usize = 20_000;

/// Tolerance for calling a per-vertex margin exactly 1.
pub const MARGIN_TOL: f64 = 1e-12;

/// Dense transfer operator on the directed edges of a weighted graph.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    graph: WeightedGraph,
    matrix: DMatrix<f64>,
}

fn build_matrix(g: &WeightedGraph, allow_backtracking: bool) -> Result<DMatrix<f64>> {
    let n = g.n_directed();
    if n > DENSE_CAP {
        return Err(Error::TooLarge { n, cap: DENSE_CAP });
    }
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        let x = g.directed_weight(a);
        let h = g.head(a);
        for &e in g.incident_edges(h) {
            let b = g.oriented_from(e, h);
            if allow_backtracking || b != a ^ 1 {
                m[(a, b)] = x;
            }
        }
    }
    Ok(m)
}

impl TransferOperator {
    /// Builds Λ for a graph with empty boundary (no degree-1 vertices).
    pub fn new(g: &WeightedGraph) -> Result<Self> {
        let pendants = g.boundary_vertices();
        if !pendants.is_empty() {
            return Err(Error::HasBoundary(pendants));
        }
        Ok(TransferOperator { graph: g.clone(), matrix: build_matrix(g, false)? })
    }

    /// Builds Λ without the boundary check; rows of directed edges pointing
    /// into a degree-1 vertex are simply zero. Used on cut graphs.
    pub(crate) fn new_allowing_boundary(g: &WeightedGraph) -> Result<Self> {
        Ok(TransferOperator { graph: g.clone(), matrix: build_matrix(g, false)? })
    }

    /// Deliberately wrong operator that also allows the backtracking step
    /// g = reverse(a); negative control for distribution-fit tests.
    pub(crate) fn new_allowing_backtracking(g: &WeightedGraph) -> Result<Self> {
        Ok(TransferOperator { graph: g.clone(), matrix: build_matrix(g, true)? })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Dimension 2|E| of the operator.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectral radius ρ(Λ) by power iteration (tolerance 1e-10).
    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self.spectral_radius_bracket()?.value())
    }

    /// Two-sided bracket on ρ(Λ); `upper` is a certified overestimate, which
    /// tail bounds prefer over the midpoint.
    pub fn spectral_radius_bracket(&self) -> Result<crate::linalg::SpectralBracket> {
        power_iteration_nonneg(&self.matrix, POWER_TOL, POWER_MAX_ITERS, None)
    }

    /// Decides ρ(Λ) < 1 without necessarily resolving ρ to full precision;
    /// unlike the full bracket this terminates fast on reducible matrices
    /// (e.g. cut graphs, where walks die at the pendant vertices).
    pub(crate) fn subcritical_guard(&self) -> Result<()> {
        let b = power_iteration_nonneg(&self.matrix, POWER_TOL, POWER_MAX_ITERS, Some(1.0))?;
        if b.lower >= 1.0 {
            return Err(Error::Supercritical { rho: b.lower });
        }
        if b.upper >= 1.0 {
            // The bracket straddles 1 at tolerance width: fall back to the
            // determinant's sign, checked by the caller.
        }
        Ok(())
    }

    /// Log partition function of the loop ensemble: −½·log det(Id − Λ).
    pub fn log_partition_det(&self) -> Result<f64> {
        self.subcritical_guard()?;
        let n = self.dim();
        let mut m = DMatrix::identity(n, n);
        m -= &self.matrix;
        let (sign, log_abs) = lu_log_det(&m);
        if sign <= 0.0 {
            return Err(Error::Supercritical { rho: 1.0 });
        }
        Ok(-0.5 * log_abs)
    }

    /// Reciprocal characteristic determinant det(Id − Λ)^{-1}; a rational
    /// function of the weights, infinite exactly at its poles.
    pub fn ihara_zeta(&self) -> f64 {
        let n = self.dim();
        let mut m = DMatrix::identity(n, n);
        m -= &self.matrix;
        let (sign, log_abs) = lu_log_det(&m);
        if sign == 0.0 {
            return f64::INFINITY;
        }
        sign * (-log_abs).exp()
    }

    /// Green function G = (Id − Λ)^{-1}; requires ρ(Λ) < 1.
    pub fn green(&self) -> Result<GreenFunction> {
        self.subcritical_guard()?;
        let n = self.dim();
        let mut m = DMatrix::identity(n, n);
        m -= &self.matrix;
        let inv = m.lu().try_inverse().ok_or(Error::Supercritical { rho: 1.0 })?;
        Ok(GreenFunction { matrix: inv })
    }
}

/// G = (Id − Λ)^{-1}, indexed by directed edges. The diagonal counts rooted
/// closed walks, so G_{a,a} ≥ 1 and G_{a,a} − 1 is the expected visit count
/// of the underlying undirected edge in the soup.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    matrix: DMatrix<f64>,
}

impl GreenFunction {
    pub fn entry(&self, a: DirectedEdge, b: DirectedEdge) -> f64 {
        self.matrix[(a, b)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Log partition function via the vertex-indexed determinant:
/// −½·log det(Id + D − A) − ½·Σ_e log(1 − x_e²).
///
/// Requires every x_e < 1; fails (naming the failing leading minor) when
/// Id + D − A is not positive definite.
pub fn log_partition_vertex(g: &WeightedGraph) -> Result<f64> {
    let nv = g.n_vertices();
    let mut m = DMatrix::identity(nv, nv);
    let mut weight_term = 0.0;
    for i in 0..g.n_edges() {
        let (u, v, x) = g.edge(i);
        if x >= 1.0 {
            return Err(Error::WeightOutOfRange {
                x,
                requirement: "vertex determinant route needs x_e < 1 on every edge",
            });
        }
        let denom = 1.0 - x * x;
        m[(u, u)] += x * x / denom;
        m[(v, v)] += x * x / denom;
        m[(u, v)] -= x / denom;
        m[(v, u)] -= x / denom;
        weight_term += denom.ln();
    }
    let log_det = cholesky_log_det(&m)?;
    Ok(-0.5 * log_det - 0.5 * weight_term)
}

/// Partition function of a killed Gaussian free field on the graph, with
/// edge conductances c_e ≥ 0 and vertex killing rates k_v ≥ 0:
/// log Z = Σ_v ½·log(2π/λ_v) − ½·log det(Id − P), where λ_v = Σ_{e∋v} c_e + k_v
/// and P_{v,u} = c_e/λ_v is the killed random-walk kernel.
pub fn gff_partition(g: &WeightedGraph, c: &[f64], k: &[f64]) -> Result<f64> {
    if c.len() != g.n_edges() || k.len() != g.n_vertices() {
        return Err(Error::InvalidGraph(format!(
            "expected {} conductances and {} killing rates, got {} and {}",
            g.n_edges(),
            g.n_vertices(),
            c.len(),
            k.len()
        )));
    }
    if let Some(&bad) = c.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidGraph(format!("negative conductance {bad}")));
    }
    if let Some(&bad) = k.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidGraph(format!("negative killing rate {bad}")));
    }
    let nv = g.n_vertices();
    let mut lambda = k.to_vec();
    for i in 0..g.n_edges() {
        let (u, v, _) = g.edge(i);
        lambda[u] += c[i];
        lambda[v] += c[i];
    }
    if let Some(v) = lambda.iter().position(|&l| l <= 0.0) {
        return Err(Error::InvalidGraph(format!(
            "vertex {v} has no incident conductance and no killing"
        )));
    }
    let mut p = DMatrix::zeros(nv, nv);
    for i in 0..g.n_edges() {
        let (u, v, _) = g.edge(i);
        p[(u, v)] = c[i] / lambda[u];
        p[(v, u)] = c[i] / lambda[v];
    }
    let bracket = power_iteration_nonneg(&p, POWER_TOL, POWER_MAX_ITERS, Some(1.0))?;
    if bracket.lower >= 1.0 {
        return Err(Error::ChainNotAbsorbed { rho: bracket.lower });
    }
    let mut m = DMatrix::identity(nv, nv);
    m -= &p;
    let (sign, log_abs) = lu_log_det(&m);
    if sign <= 0.0 {
        return Err(Error::ChainNotAbsorbed { rho: 1.0 });
    }
    let tau = std::f64::consts::TAU;
    let norm_term: f64 = lambda.iter().map(|&l| 0.5 * (tau / l).ln()).sum();
    Ok(norm_term - 0.5 * log_abs)
}

/// Per-vertex margins m_v = Σ_{e∋v} x_e/(1+x_e) and the regime they imply.
#[derive(Debug, Clone)]
pub struct CriticalMargin {
    pub margins: Vec<f64>,
    pub classification: Classification,
}

/// Computes the margins and classifies: subcritical (all m_v ≤ 1, some < 1),
/// critical (all m_v = 1 within 1e-12), supercritical (some m_v > 1).
pub fn critical_margin(g: &WeightedGraph) -> CriticalMargin {
    let margins: Vec<f64> = (0..g.n_vertices())
        .map(|v| {
            g.incident_edges(v)
                .iter()
                .map(|&e| {
                    let x = g.weight(e);
                    x / (1.0 + x)
                })
                .sum()
        })
        .collect();
    let any_above = margins.iter().any(|&m| m > 1.0 + MARGIN_TOL);
    let all_equal_one = margins.iter().all(|&m| (m - 1.0).abs() <= MARGIN_TOL);
    let classification = if any_above {
        Classification::Supercritical
    } else if all_equal_one {
        Classification::Critical
    } else {
        Classification::Subcritical
    };
    CriticalMargin { margins, classification }
}

/// The loop-ensemble ↔ Gaussian-field correspondence, evaluated concretely.
#[derive(Debug, Clone)]
pub struct GffLink {
    /// λ*_v = 1 + Σ_{e∋v} x_e²/(1−x_e²).
    pub lambda_star: Vec<f64>,
    /// P*_{v,u} = (x_e/(1−x_e²)) / λ*_v.
    pub p_star: DMatrix<f64>,
    /// Log partition function of the loop ensemble (determinant route).
    pub log_z_loop: f64,
    /// Log partition function of the matched Gaussian field.
    pub log_z_gff: f64,
    /// |log_z_loop − (−(|V|/2)·log 2π − ½ Σ_e log(1−x_e²) + log_z_gff)|.
    pub residual: f64,
}

/// Matches the loop ensemble with a killed Gaussian free field: conductances
/// c_e = x_e/(1−x_e²) and killing k_v = 1 − Σ_{e∋v} x_e/(1+x_e) reproduce
/// λ*_v and P*, and the two log partition functions then differ by the
/// explicit normalization −(|V|/2)·log 2π − ½ Σ_e log(1−x_e²).
///
/// Requires subcritical margins (so all k_v ≥ 0 with some slack) and x_e < 1.
pub fn gff_correspondence(g: &WeightedGraph) -> Result<GffLink> {
    let cm = critical_margin(g);
    if cm.classification != Classification::Subcritical {
        return Err(Error::NotSubcritical { classification: cm.classification });
    }
    if let Some(&x) = g.weights().iter().find(|&&x| x >= 1.0) {
        return Err(Error::WeightOutOfRange {
            x,
            requirement: "Gaussian correspondence needs x_e < 1 on every edge",
        });
    }
    let nv = g.n_vertices();
    let c: Vec<f64> = (0..g.n_edges())
        .map(|i| {
            let x = g.weight(i);
            x / (1.0 - x * x)
        })
        .collect();
    let k: Vec<f64> = cm.margins.iter().map(|&m| (1.0 - m).max(0.0)).collect();
    let lambda_star: Vec<f64> = (0..nv)
        .map(|v| {
            1.0 + g
                .incident_edges(v)
                .iter()
                .map(|&e| {
                    let x = g.weight(e);
                    x * x / (1.0 - x * x)
                })
                .sum::<f64>()
        })
        .collect();
    let mut p_star = DMatrix::zeros(nv, nv);
    for i in 0..g.n_edges() {
        let (u, v, x) = g.edge(i);
        let w = x / (1.0 - x * x);
        p_star[(u, v)] = w / lambda_star[u];
        p_star[(v, u)] = w / lambda_star[v];
    }
    let log_z_loop = TransferOperator::new(g)?.log_partition_det()?;
    let log_z_gff = gff_partition(g, &c, &k)?;
    let tau = std::f64::consts::TAU;
    let weight_term: f64 = g.weights().iter().map(|&x| (1.0 - x * x).ln()).sum();
    let predicted = -0.5 * nv as f64 * tau.ln() - 0.5 * weight_term + log_z_gff;
    let residual = (log_z_loop - predicted).abs();
    Ok(GffLink { lambda_star, p_star, log_z_loop, log_z_gff, residual })
}
