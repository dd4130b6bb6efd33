//! Exact sampling of the Poisson loop ensemble (length-truncated, with a
//! reported tail-mass bound) and of arc ensembles on cut graphs, plus
//! occupation fields and empirical statistics over replicas.
//!
//! Scheme: the number of drawn items is Poisson with mean equal to the total
//! truncated intensity mass; each item's length, root, and successive steps
//! are drawn from exact conditionals built out of precomputed dense powers of
//! the transfer operator, so the sampled multiset is distributed exactly as
//! the Poisson process restricted to lengths ≤ the cutoff.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CutGraph, DirectedEdge, WeightedGraph};
use crate::loops::UnrootedLoop;
use crate::stats::mean_and_se;
use crate::transfer::TransferOperator;

/// Cap on the expected number of items per draw; beyond it the Poisson draw
/// is refused rather than silently saturated.
pub const POISSON_MASS_CAP: f64 = 1e5;

/// Per-edge visit counts of a sample (loops and arcs), indexed like the
/// graph's edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccupationField {
    pub counts: Vec<u32>,
}

impl OccupationField {
    pub fn zeros(n_edges: usize) -> Self {
        OccupationField { counts: vec![0; n_edges] }
    }

    /// Sum of visit counts over the edges incident to each vertex.
    fn vertex_sums(&self, g: &WeightedGraph) -> Vec<u64> {
        let mut sums = vec![0u64; g.n_vertices()];
        for (e, &c) in self.counts.iter().enumerate() {
            let (u, v, _) = g.edge(e);
            sums[u] += c as u64;
            sums[v] += c as u64;
        }
        sums
    }

    /// Every vertex sees an even total of incident visits.
    pub fn parity_ok(&self, g: &WeightedGraph) -> bool {
        self.vertex_sums(g).iter().all(|s| s % 2 == 0)
    }

    /// At every vertex the incident total is at least twice the largest
    /// single incident count (visits must pair up across distinct edges).
    pub fn triangle_ok(&self, g: &WeightedGraph) -> bool {
        let sums = self.vertex_sums(g);
        (0..g.n_vertices()).all(|v| {
            let max = g
                .incident_edges(v)
                .iter()
                .map(|&e| self.counts[e] as u64)
                .max()
                .unwrap_or(0);
            sums[v] >= 2 * max
        })
    }

    /// Parity and pairing feasibility at every vertex; holds structurally for
    /// loop-only samples on graphs without boundary.
    pub fn is_spin_network(&self, g: &WeightedGraph) -> bool {
        self.parity_ok(g) && self.triangle_ok(g)
    }

    /// Restriction to the boundary: (edge id, count) for every edge with a
    /// degree-1 endpoint.
    pub fn boundary_restriction(&self, g: &WeightedGraph) -> Vec<(usize, u32)> {
        (0..g.n_edges())
            .filter(|&e| {
                let (u, v, _) = g.edge(e);
                g.degree(u) == 1 || g.degree(v) == 1
            })
            .map(|e| (e, self.counts[e]))
            .collect()
    }
}

/// An unoriented boundary-to-boundary walk on a cut graph: the full edge
/// sequence (both pendant half-edges included) in its canonical orientation,
/// and its intensity weight √x_first·(∏ interior x)·√x_last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arc {
    steps: Vec<DirectedEdge>,
    weight: f64,
}

impl Arc {
    fn from_oriented(g: &WeightedGraph, steps: Vec<DirectedEdge>) -> Self {
        let mut reversed: Vec<DirectedEdge> = steps.iter().rev().map(|&a| a ^ 1).collect();
        let canonical = if reversed < steps { std::mem::take(&mut reversed) } else { steps };
        // Weight in canonical order so both orientations yield bit-identical
        // values.
        let n = canonical.len();
        let mut weight =
            (g.directed_weight(canonical[0]) * g.directed_weight(canonical[n - 1])).sqrt();
        for &a in &canonical[1..n - 1] {
            weight *= g.directed_weight(a);
        }
        Arc { steps: canonical, weight }
    }

    pub fn steps(&self) -> &[DirectedEdge] {
        &self.steps
    }

    /// Number of steps (edges minus one).
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Visits per undirected edge.
    pub fn occupation(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for &a in &self.steps {
            *counts.entry(a >> 1).or_insert(0) += 1;
        }
        counts
    }
}

/// One draw of the Poisson ensemble: distinct items with multiplicities.
#[derive(Debug, Clone, Serialize)]
pub struct SoupSample {
    pub loops: Vec<(UnrootedLoop, u32)>,
    pub arcs: Vec<(Arc, u32)>,
    pub lmax: usize,
    pub seed: u64,
    pub stream: u64,
}

impl SoupSample {
    /// Total number of items counted with multiplicity.
    pub fn n_items(&self) -> u64 {
        self.loops.iter().map(|&(_, c)| c as u64).sum::<u64>()
            + self.arcs.iter().map(|&(_, c)| c as u64).sum::<u64>()
    }

    /// Per-edge visit counts of the whole sample.
    pub fn occupation(&self, g: &WeightedGraph) -> OccupationField {
        let mut field = OccupationField::zeros(g.n_edges());
        for (l, c) in &self.loops {
            for (e, visits) in l.occupation() {
                field.counts[e] += *c * visits as u32;
            }
        }
        for (a, c) in &self.arcs {
            for (e, visits) in a.occupation() {
                field.counts[e] += *c * visits as u32;
            }
        }
        field
    }
}

fn poisson_draw(rng: &mut ChaCha8Rng, mass: f64) -> Result<u64> {
    if !(mass >= 0.0) || mass > POISSON_MASS_CAP {
        return Err(Error::PoissonOverflow { mass, cap: POISSON_MASS_CAP });
    }
    if mass == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mass).map_err(|_| Error::PoissonOverflow {
        mass,
        cap: POISSON_MASS_CAP,
    })?;
    Ok(dist.sample(rng) as u64)
}

fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws whole loop ensembles: Poisson count with mean = truncated total
/// intensity, then per loop an exact length/root/bridge scheme.
pub struct SoupSampler {
    op: TransferOperator,
    lmax: usize,
    /// powers[m] = Λ^m, m = 0..=lmax.
    powers: Vec<DMatrix<f64>>,
    /// length_mass[m] = Tr Λ^m/(2m); total intensity of loops of length m.
    length_mass: Vec<f64>,
    total_mass: f64,
    tail_bound: f64,
    /// False for the deliberately wrong backtracking variant, whose walks are
    /// not valid loops and can only be observed through occupation fields.
    non_backtracking: bool,
}

fn precompute(op: &TransferOperator, lmax: usize) -> (Vec<DMatrix<f64>>, Vec<f64>, f64) {
    let k = op.dim();
    let mut powers = Vec::with_capacity(lmax + 1);
    powers.push(DMatrix::identity(k, k));
    let mut length_mass = vec![0.0; lmax + 1];
    let mut total = 0.0;
    for m in 1..=lmax {
        let next = powers.last().unwrap() * op.matrix();
        length_mass[m] = next.trace() / (2.0 * m as f64);
        total += length_mass[m];
        powers.push(next);
    }
    (powers, length_mass, total)
}

impl SoupSampler {
    pub fn new(g: &WeightedGraph, lmax: usize) -> Result<Self> {
        Self::build(TransferOperator::new(g)?, lmax, true)
    }

    /// Negative control: same scheme over closed walks that may immediately
    /// reverse. Its occupation fields violate the pairing feasibility that
    /// genuine samples satisfy.
    pub fn backtracking_mutant(g: &WeightedGraph, lmax: usize) -> Result<Self> {
        Self::build(TransferOperator::new_allowing_backtracking(g)?, lmax, false)
    }

    fn build(op: TransferOperator, lmax: usize, non_backtracking: bool) -> Result<Self> {
        let bracket = op.spectral_radius_bracket()?;
        if bracket.lower >= 1.0 {
            return Err(Error::Supercritical { rho: bracket.lower });
        }
        let (powers, length_mass, total_mass) = precompute(&op, lmax);
        if total_mass > POISSON_MASS_CAP {
            return Err(Error::PoissonOverflow { mass: total_mass, cap: POISSON_MASS_CAP });
        }
        let k = op.dim() as f64;
        let rho = bracket.upper;
        // Dropped intensity beyond the cutoff: Σ_{m>lmax} |Tr Λ^m|/(2m) with
        // |Tr Λ^m| ≤ dim·ρ^m; infinite when the certified bracket reaches 1.
        let tail_bound = if rho < 1.0 {
            let head: f64 = (1..=lmax).map(|m| rho.powi(m as i32) / m as f64).sum();
            0.5 * k * ((-(1.0 - rho).ln() - head).max(0.0))
        } else {
            f64::INFINITY
        };
        Ok(SoupSampler { op, lmax, powers, length_mass, total_mass, tail_bound, non_backtracking })
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.op.graph()
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Expected number of loops per draw (total truncated intensity).
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Intensity of loops of each length 0..=lmax.
    pub fn length_mass(&self) -> &[f64] {
        &self.length_mass
    }

    /// Bound on the intensity dropped by the length cutoff.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// One rooted oriented closed walk: length ∝ Tr Λ^m/(2m), root a ∝
    /// [Λ^m]_{a,a}, then step g with probability
    /// Λ_{cur,g}[Λ^{r−1}]_{g,a}/[Λ^r]_{cur,a} when r transitions remain.
    fn draw_rooted(&self, rng: &mut ChaCha8Rng) -> Vec<DirectedEdge> {
        let lam = self.op.matrix();
        let k = self.op.dim();
        let m = 1 + WeightedIndex::new(&self.length_mass[1..])
            .expect("positive total mass")
            .sample(rng);
        let diag: Vec<f64> = (0..k).map(|a| self.powers[m][(a, a)]).collect();
        let root = WeightedIndex::new(&diag).expect("positive trace").sample(rng);
        let mut steps = Vec::with_capacity(m);
        steps.push(root);
        let mut cur = root;
        for remaining in (2..=m).rev() {
            let weights: Vec<f64> =
                (0..k).map(|g| lam[(cur, g)] * self.powers[remaining - 1][(g, root)]).collect();
            cur = WeightedIndex::new(&weights).expect("positive bridge mass").sample(rng);
            steps.push(cur);
        }
        steps
    }

    /// One Poisson draw of the loop multiset. Each drawn rooted oriented walk
    /// is projected to its unrooted unoriented loop; the rooted intensity
    /// x(ω)/(2m) sums over the 2m/mult representatives to the loop intensity
    /// x(ℓ)/mult.
    pub fn sample(&self, seed: u64, stream: u64) -> Result<SoupSample> {
        if !self.non_backtracking {
            return Err(Error::Unsupported(
                "the backtracking variant draws occupation fields, not loop multisets",
            ));
        }
        let mut rng = seeded_rng(seed, stream);
        let count = poisson_draw(&mut rng, self.total_mass)?;
        let mut multiset: BTreeMap<Vec<DirectedEdge>, (UnrootedLoop, u32)> = BTreeMap::new();
        for _ in 0..count {
            let steps = self.draw_rooted(&mut rng);
            let l = UnrootedLoop::from_steps(self.op.graph(), &steps)?;
            multiset
                .entry(l.steps().to_vec())
                .and_modify(|(_, c)| *c += 1)
                .or_insert((l, 1));
        }
        Ok(SoupSample {
            loops: multiset.into_values().collect(),
            arcs: Vec::new(),
            lmax: self.lmax,
            seed,
            stream,
        })
    }

    /// One Poisson draw reduced to its occupation field; works for both the
    /// genuine sampler and the backtracking variant.
    pub fn sample_field(&self, seed: u64, stream: u64) -> Result<OccupationField> {
        let mut rng = seeded_rng(seed, stream);
        let count = poisson_draw(&mut rng, self.total_mass)?;
        let mut field = OccupationField::zeros(self.op.graph().n_edges());
        for _ in 0..count {
            for a in self.draw_rooted(&mut rng) {
                field.counts[a >> 1] += 1;
            }
        }
        Ok(field)
    }
}

/// Convenience single draw of a loop ensemble.
pub fn sample_soup(g: &WeightedGraph, lmax: usize, seed: u64) -> Result<SoupSample> {
    SoupSampler::new(g, lmax)?.sample(seed, 0)
}

/// Draws boundary-to-boundary arc ensembles on a cut graph. Oriented arcs
/// from inward pendant edge b to outward pendant edge c carry intensity
/// ½·√(x_c/x_b)·(chain product); summed over both orientations of an
/// unoriented arc this is √x_first·(∏ interior)·√x_last, and reversal-
/// symmetric arcs cannot occur (the middle would backtrack).
pub struct ArcSampler {
    op: TransferOperator,
    lmax: usize,
    powers: Vec<DMatrix<f64>>,
    /// Flattened (inward b, outward c, steps n) table with oriented masses.
    table: Vec<(DirectedEdge, DirectedEdge, usize, f64)>,
    total_mass: f64,
    tail_bound: f64,
}

impl ArcSampler {
    pub fn new(cg: &CutGraph, lmax: usize) -> Result<Self> {
        if cg.cut.is_empty() {
            return Err(Error::Unsupported("arc sampling needs a nonempty cut"));
        }
        let g = &cg.graph;
        let op = TransferOperator::new_allowing_boundary(g)?;
        op.subcritical_guard()?;
        let (powers, _, _) = precompute(&op, lmax);
        // Inward orientation of each pendant half-edge (tail at the leaf).
        let inward: Vec<DirectedEdge> = cg
            .half_edge_ids()
            .iter()
            .map(|&e| {
                let (u, v, _) = g.edge(e);
                if g.degree(u) == 1 { 2 * e } else { g.oriented_from(e, v) }
            })
            .collect();
        let mut table = Vec::new();
        let mut total_mass = 0.0;
        for &b in &inward {
            for &c_in in &inward {
                let c = c_in ^ 1; // outward orientation
                let ratio = (g.directed_weight(c) / g.directed_weight(b)).sqrt();
                for n in 1..=lmax {
                    let mass = 0.5 * ratio * powers[n][(b, c)];
                    if mass > 0.0 {
                        table.push((b, c, n, mass));
                        total_mass += mass;
                    }
                }
            }
        }
        if total_mass > POISSON_MASS_CAP {
            return Err(Error::PoissonOverflow { mass: total_mass, cap: POISSON_MASS_CAP });
        }
        // Entrywise [Λ^n]_{b,c} ≤ R^n with R the maximum row sum.
        let r = (0..op.dim())
            .map(|a| op.matrix().row(a).iter().sum::<f64>())
            .fold(0.0_f64, f64::max);
        let pairs = (inward.len() * inward.len()) as f64;
        let max_ratio = inward
            .iter()
            .flat_map(|&b| {
                inward.iter().map(move |&c| g.directed_weight(c) / g.directed_weight(b))
            })
            .fold(0.0_f64, f64::max)
            .sqrt();
        let tail_bound = if r < 1.0 {
            0.5 * pairs * max_ratio * r.powi(lmax as i32 + 1) / (1.0 - r)
        } else {
            f64::INFINITY
        };
        Ok(ArcSampler { op, lmax, powers, table, total_mass, tail_bound })
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Expected number of arcs per draw (total truncated intensity).
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Bound on the intensity dropped by the length cutoff.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// One Poisson draw of the arc multiset.
    pub fn sample(&self, seed: u64, stream: u64) -> Result<SoupSample> {
        let g = self.op.graph();
        let lam = self.op.matrix();
        let k = self.op.dim();
        let mut rng = seeded_rng(seed, stream);
        let count = poisson_draw(&mut rng, self.total_mass)?;
        let mut multiset: BTreeMap<Vec<DirectedEdge>, (Arc, u32)> = BTreeMap::new();
        if count > 0 {
            let index = WeightedIndex::new(self.table.iter().map(|&(_, _, _, w)| w))
                .expect("positive arc mass");
            for _ in 0..count {
                let (b, c, n, _) = self.table[index.sample(&mut rng)];
                let mut steps = Vec::with_capacity(n + 1);
                steps.push(b);
                let mut cur = b;
                for remaining in (1..=n).rev() {
                    let weights: Vec<f64> = (0..k)
                        .map(|h| lam[(cur, h)] * self.powers[remaining - 1][(h, c)])
                        .collect();
                    cur = WeightedIndex::new(&weights)
                        .expect("positive bridge mass")
                        .sample(&mut rng);
                    steps.push(cur);
                }
                debug_assert_eq!(cur, c);
                let arc = Arc::from_oriented(g, steps);
                multiset
                    .entry(arc.steps().to_vec())
                    .and_modify(|(_, cnt)| *cnt += 1)
                    .or_insert((arc, 1));
            }
        }
        Ok(SoupSample {
            loops: Vec::new(),
            arcs: multiset.into_values().collect(),
            lmax: self.lmax,
            seed,
            stream,
        })
    }
}

/// Convenience single draw of an arc ensemble.
pub fn sample_arcs(cg: &CutGraph, lmax: usize, seed: u64) -> Result<SoupSample> {
    ArcSampler::new(cg, lmax)?.sample(seed, 0)
}

/// Unbiased means and covariances (with standard errors) and per-target
/// histograms over a set of occupation fields.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalStats {
    pub n_samples: usize,
    pub targets: Vec<usize>,
    pub means: Vec<f64>,
    pub mean_ses: Vec<f64>,
    /// Unbiased sample covariance between target edges.
    pub covariances: Vec<Vec<f64>>,
    /// Approximate standard errors of the covariance entries (spread of the
    /// centered products over replicas).
    pub covariance_ses: Vec<Vec<f64>>,
    pub histograms: Vec<BTreeMap<u32, usize>>,
}

pub fn empirical_stats(samples: &[OccupationField], targets: &[usize]) -> Result<EmpiricalStats> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            detail: format!("need at least 2 occupation fields, got {n}"),
        });
    }
    let t = targets.len();
    let mut means = Vec::with_capacity(t);
    let mut mean_ses = Vec::with_capacity(t);
    let mut histograms = vec![BTreeMap::new(); t];
    let series: Vec<Vec<f64>> = targets
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            samples
                .iter()
                .map(|s| {
                    *histograms[i].entry(s.counts[e]).or_insert(0) += 1;
                    s.counts[e] as f64
                })
                .collect()
        })
        .collect();
    for values in &series {
        let (mean, se) = mean_and_se(values);
        means.push(mean);
        mean_ses.push(se);
    }
    let mut covariances = vec![vec![0.0; t]; t];
    let mut covariance_ses = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in 0..t {
            let products: Vec<f64> = (0..n)
                .map(|s| (series[i][s] - means[i]) * (series[j][s] - means[j]))
                .collect();
            let sum: f64 = products.iter().sum();
            covariances[i][j] = sum / (n - 1) as f64;
            let (_, se) = mean_and_se(&products);
            covariance_ses[i][j] = se;
        }
    }
    Ok(EmpiricalStats {
        n_samples: n,
        targets: targets.to_vec(),
        means,
        mean_ses,
        covariances,
        covariance_ses,
        histograms,
    })
}
