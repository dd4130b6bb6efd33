//! Vertex pairing combinatorics and the energy functional of occupation
//! fields: exact Boltzmann weights and partition sums on small graphs, a
//! goodness-of-fit test that sampled fields follow that distribution, and a
//! conditional-independence test across a separating edge cut.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::sampler::OccupationField;
use crate::stats::{
    chi_square_gof, contingency_test, fisher_exact_2x2, merge_low_expected, ChiSquare,
};
use crate::transfer::TransferOperator;

/// Cap on (nmax+1)^edges for exhaustive field enumeration.
pub const BRUTE_FORCE_STATE_CAP: u128 = 20_000_000;

/// Minimum expected cell count for the chi-square approximation inside a
/// contingency table; sparser tables get the exact hypergeometric test.
const CHI_SQUARE_MIN_EXPECTED: f64 = 5.0;

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Natural log of a positive big integer, accurate to f64 precision: the top
/// 53 bits give the mantissa, the remaining bit length contributes ln 2 each.
fn ln_biguint(b: &BigUint) -> f64 {
    debug_assert!(!b.is_zero());
    let bits = b.bits();
    if bits <= 53 {
        return (b.to_u64().expect("fits in 53 bits") as f64).ln();
    }
    let shift = bits - 53;
    let top = (b >> shift).to_u64().expect("exactly 53 bits") as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Memoized counter of perfect pairings of colored points in which no pair is
/// monochromatic. The table is keyed on the sorted positive color counts, so
/// entries are shared across vertices and fields.
#[derive(Debug, Default)]
pub struct PairingMemo {
    table: HashMap<Vec<u32>, BigUint>,
}

impl PairingMemo {
    pub fn new() -> Self {
        PairingMemo::default()
    }

    /// Number of ways to partition Σ counts[i] points, counts[i] of color i,
    /// into unordered pairs with the two members of every pair differently
    /// colored. Zero when the total is odd or one color holds more than half
    /// of the points; one for the empty input.
    pub fn count(&mut self, counts: &[u32]) -> BigUint {
        let mut key: Vec<u32> = counts.iter().copied().filter(|&c| c != 0).collect();
        key.sort_unstable_by(|a, b| b.cmp(a));
        if key.is_empty() {
            return BigUint::one();
        }
        let total: u64 = key.iter().map(|&c| c as u64).sum();
        if total % 2 == 1 || 2 * key[0] as u64 > total {
            return BigUint::zero();
        }
        if let Some(cached) = self.table.get(&key) {
            return cached.clone();
        }
        // Pair one point of the largest color with each choice of a partner
        // from another color; the remainder is a smaller instance.
        let mut acc = BigUint::zero();
        for j in 1..key.len() {
            let mut rest = key.clone();
            rest[0] -= 1;
            rest[j] -= 1;
            acc += BigUint::from(key[j]) * self.count(&rest);
        }
        self.table.insert(key, acc.clone());
        acc
    }
}

/// One-shot pairing count; use [`PairingMemo`] directly when evaluating many
/// related inputs.
pub fn pairing_count(counts: &[u32]) -> BigUint {
    PairingMemo::new().count(counts)
}

/// Closed form for the pairing count at a three-color input: the pair counts
/// between colors are forced (m12 = (n1+n2−n3)/2 and cyclically), giving
/// n1!·n2!·n3!/(m12!·m13!·m23!) when those are nonnegative integers and zero
/// otherwise.
pub fn trivalent_pairing(n1: u32, n2: u32, n3: u32) -> BigUint {
    let total = n1 as u64 + n2 as u64 + n3 as u64;
    if total % 2 == 1 {
        return BigUint::zero();
    }
    let (a, b, c) = (n1 as u64, n2 as u64, n3 as u64);
    if a + b < c || a + c < b || b + c < a {
        return BigUint::zero();
    }
    let m12 = (n1 + n2 - n3) / 2;
    let m13 = (n1 + n3 - n2) / 2;
    let m23 = (n2 + n3 - n1) / 2;
    (factorial(n1) * factorial(n2) * factorial(n3))
        / (factorial(m12) * factorial(m13) * factorial(m23))
}

/// Pairing data of a single vertex under an occupation field.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexPairing {
    pub vertex: usize,
    /// Occupations of the incident edges, in incident-edge order.
    pub counts: Vec<u32>,
    /// Number of admissible pairings of the incident visit endpoints.
    pub pairings: BigUint,
    /// Local energy; +∞ exactly when no pairing exists.
    pub energy: f64,
}

/// Per-vertex pairing counts and local energies of a field. The local energy
/// is −[ln C − ½Σ ln N_i! + ½Σ N_i ln x_i] over the incident edges, so that
/// exp(−Σ_v energy) = Π_v C_v · Π_e x_e^{N_e}/N_e!.
pub fn vertex_pairings(g: &WeightedGraph, field: &OccupationField) -> Vec<VertexPairing> {
    assert_eq!(field.counts.len(), g.n_edges(), "field does not match graph");
    let mut memo = PairingMemo::new();
    (0..g.n_vertices())
        .map(|v| {
            let incident = g.incident_edges(v);
            let counts: Vec<u32> = incident.iter().map(|&e| field.counts[e]).collect();
            let pairings = memo.count(&counts);
            let energy = if pairings.is_zero() {
                f64::INFINITY
            } else {
                let mut half_ln_fact = 0.0;
                let mut half_ln_x = 0.0;
                for (&e, &n) in incident.iter().zip(&counts) {
                    if n > 1 {
                        half_ln_fact += 0.5 * ln_gamma(n as f64 + 1.0);
                    }
                    if n > 0 {
                        half_ln_x += 0.5 * n as f64 * g.weight(e).ln();
                    }
                }
                -(ln_biguint(&pairings) - half_ln_fact + half_ln_x)
            };
            VertexPairing { vertex: v, counts, pairings, energy }
        })
        .collect()
}

/// Total energy of an occupation field: the sum of the per-vertex energies,
/// +∞ (an ordinary value, not an error) when any vertex admits no pairing.
pub fn hamiltonian(g: &WeightedGraph, field: &OccupationField) -> f64 {
    vertex_pairings(g, field).iter().map(|p| p.energy).sum()
}

/// Boltzmann weight of a single field: Π_v C_v · Π_e x_e^{N_e}/N_e!, exactly
/// exp(−hamiltonian) and zero for inadmissible fields.
fn field_weight(
    g: &WeightedGraph,
    counts: &[u32],
    per_edge: &[Vec<f64>],
    memo: &mut PairingMemo,
) -> f64 {
    let mut w = 1.0;
    for v in 0..g.n_vertices() {
        let local: Vec<u32> = g.incident_edges(v).iter().map(|&e| counts[e]).collect();
        let c = memo.count(&local);
        if c.is_zero() {
            return 0.0;
        }
        w *= c.to_f64().expect("pairing count representable");
    }
    for (e, &n) in counts.iter().enumerate() {
        w *= per_edge[e][n as usize];
    }
    w
}

/// Visits every field with all counts ≤ nmax in lexicographic order and hands
/// its Boltzmann weight (possibly zero) to the callback.
fn scan_states(
    g: &WeightedGraph,
    nmax: u32,
    mut visit: impl FnMut(&[u32], f64),
) -> Result<()> {
    let n_edges = g.n_edges();
    let states = (nmax as u128 + 1)
        .checked_pow(n_edges as u32)
        .unwrap_or(u128::MAX);
    if states > BRUTE_FORCE_STATE_CAP {
        return Err(Error::StateSpaceTooLarge { states, cap: BRUTE_FORCE_STATE_CAP });
    }
    // per_edge[e][n] = x_e^n / n!
    let per_edge: Vec<Vec<f64>> = (0..n_edges)
        .map(|e| {
            let x = g.weight(e);
            let mut v = vec![1.0];
            for n in 1..=nmax {
                let last = *v.last().expect("nonempty");
                v.push(last * x / n as f64);
            }
            v
        })
        .collect();
    let mut memo = PairingMemo::new();
    let mut counts = vec![0u32; n_edges];
    loop {
        visit(&counts, field_weight(g, &counts, &per_edge, &mut memo));
        let mut pos = 0;
        loop {
            if pos == n_edges {
                return Ok(());
            }
            if counts[pos] == nmax {
                counts[pos] = 0;
                pos += 1;
            } else {
                counts[pos] += 1;
                break;
            }
        }
    }
}

/// Partition sum over all fields with every count ≤ nmax: Σ_N Π_v C_v ·
/// Π_e x^{N_e}/N_e!. Nondecreasing in nmax and convergent, from below, to the
/// determinant-route partition value on boundaryless subcritical graphs.
pub fn brute_force_partition(g: &WeightedGraph, nmax: u32) -> Result<f64> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    scan_states(g, nmax, |_, w| {
        // Neumaier-compensated accumulation: terms are tiny and numerous.
        let t = sum + w;
        comp += if sum.abs() >= w.abs() { (sum - t) + w } else { (w - t) + sum };
        sum = t;
    })?;
    Ok(sum + comp)
}

/// Outcome of comparing sampled fields against their exact distribution.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsFit {
    pub n_samples: usize,
    /// Log of the exact partition value used to normalize cell probabilities.
    pub log_partition: f64,
    /// Admissible fields with all counts ≤ nmax, each its own cell.
    pub cells_enumerated: usize,
    /// Cells remaining after low-expectation merging.
    pub cells_tested: usize,
    /// Expected and observed mass of the catch-all cell for fields outside
    /// the enumeration.
    pub other_expected: f64,
    pub other_observed: u64,
    pub test: ChiSquare,
}

/// Chi-square goodness of fit of sampled occupation fields against the exact
/// Boltzmann distribution: every admissible field with counts ≤ nmax is a
/// cell with probability e^{−H}/Z, everything else pools into a catch-all
/// cell; low-expectation cells merge before testing.
pub fn gibbs_fit_test(
    samples: &[OccupationField],
    g: &WeightedGraph,
    nmax: u32,
) -> Result<GibbsFit> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            detail: format!("{} fields, need at least 2", samples.len()),
        });
    }
    let op = TransferOperator::new(g)?;
    let log_partition = op.log_partition_det()?;
    let z = log_partition.exp();

    let mut cells: Vec<(Vec<u32>, f64)> = Vec::new();
    scan_states(g, nmax, |counts, w| {
        if w > 0.0 {
            cells.push((counts.to_vec(), w / z));
        }
    })?;
    let index: HashMap<Vec<u32>, usize> =
        cells.iter().enumerate().map(|(i, (c, _))| (c.clone(), i)).collect();

    let n = samples.len() as f64;
    let mut observed = vec![0u64; cells.len() + 1];
    for s in samples {
        match index.get(&s.counts) {
            Some(&i) => observed[i] += 1,
            None => observed[cells.len()] += 1,
        }
    }
    let covered: f64 = cells.iter().map(|(_, p)| p).sum();
    let mut expected: Vec<f64> = cells.iter().map(|(_, p)| p * n).collect();
    let other_expected = ((1.0 - covered) * n).max(0.0);
    expected.push(other_expected);
    let other_observed = observed[cells.len()];

    let (obs_merged, exp_merged) = merge_low_expected(&observed, &expected, CHI_SQUARE_MIN_EXPECTED);
    let test = chi_square_gof(&obs_merged, &exp_merged, 0)?;
    Ok(GibbsFit {
        n_samples: samples.len(),
        log_partition,
        cells_enumerated: cells.len(),
        cells_tested: obs_merged.len(),
        other_expected,
        other_observed,
        test,
    })
}

/// The two sides of a separating edge cut: edge ids of the cut itself, of the
/// component containing vertex 0, and of the remaining components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CutSides {
    pub cut_edges: Vec<usize>,
    pub side_a: Vec<usize>,
    pub side_b: Vec<usize>,
    /// Number of connected components after removing the cut edges.
    pub components: usize,
}

/// Classifies the graph's edges relative to the cut `h`. Errors with
/// `Unsupported` when removing `h` leaves the graph connected.
pub fn cut_sides(g: &WeightedGraph, h: &[usize]) -> Result<CutSides> {
    let cg = g.cut_along(h)?;
    let labels = cg.graph.component_labels();
    let base = &labels[..cg.base_vertices];
    let mut distinct: Vec<usize> = base.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Unsupported("edge set does not separate the graph"));
    }
    let cut_edges: Vec<usize> = cg.cut.iter().map(|c| c.edge).collect();
    let in_cut: std::collections::HashSet<usize> = cut_edges.iter().copied().collect();
    let a_label = base[0];
    let mut side_a = Vec::new();
    let mut side_b = Vec::new();
    for e in 0..g.n_edges() {
        if in_cut.contains(&e) {
            continue;
        }
        let (u, v, _) = g.edge(e);
        debug_assert_eq!(base[u], base[v], "non-cut edge must stay within a component");
        if base[u] == a_label {
            side_a.push(e);
        } else {
            side_b.push(e);
        }
    }
    Ok(CutSides { cut_edges, side_a, side_b, components: distinct.len() })
}

/// Indicator of any positive occupation among the given edges.
pub fn presence_statistic(edges: Vec<usize>) -> impl Fn(&OccupationField) -> bool {
    move |field| edges.iter().any(|&e| field.counts[e] > 0)
}

/// Independence test inside one occupation class of the cut.
#[derive(Debug, Clone, Serialize)]
pub struct ClassTest {
    /// Occupations of the cut edges (in increasing edge-id order) shared by
    /// every sample of the class.
    pub cut_counts: Vec<u32>,
    pub n_samples: u64,
    /// 2×2 table: rows = first statistic false/true, columns = second.
    pub table: [[u64; 2]; 2],
    pub p_value: f64,
    /// True when the exact hypergeometric test was used (sparse or degenerate
    /// table), false for the chi-square approximation.
    pub exact: bool,
}

/// Report of the conditional-independence test across a separating cut.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovReport {
    pub n_samples: usize,
    /// Distinct values taken by the field restricted to the cut edges.
    pub classes_seen: usize,
    /// Classes large enough to test.
    pub classes_tested: usize,
    pub min_class_size: u64,
    pub classes: Vec<ClassTest>,
    pub min_p: f64,
    /// Bonferroni-corrected overall p-value: min(1, classes_tested · min_p).
    pub bonferroni_p: f64,
}

fn class_table_test(table: [[u64; 2]; 2]) -> (f64, bool) {
    let n: u64 = table.iter().flatten().sum();
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let min_expected = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| rows[i] as f64 * cols[j] as f64 / n as f64)
        .fold(f64::INFINITY, f64::min);
    if min_expected >= CHI_SQUARE_MIN_EXPECTED {
        let t = contingency_test(&[table[0].to_vec(), table[1].to_vec()])
            .expect("all expectations positive, table is full 2×2");
        (t.p_value, false)
    } else {
        (fisher_exact_2x2(table), true)
    }
}

/// Tests, within each sufficiently populated value class of the field
/// restricted to the cut edges `h`, the independence of two binary statistics
/// of the sample (one per side of the cut), combining the per-class p-values
/// with a Bonferroni correction. The cut must disconnect the graph; classes
/// below `min_class_size` are counted but not tested, and if none qualifies
/// the call fails asking for more samples.
pub fn markov_independence_test<A, B>(
    samples: &[OccupationField],
    g: &WeightedGraph,
    h: &[usize],
    stat_a: A,
    stat_b: B,
    min_class_size: u64,
) -> Result<MarkovReport>
where
    A: Fn(&OccupationField) -> bool,
    B: Fn(&OccupationField) -> bool,
{
    let sides = cut_sides(g, h)?;
    let mut by_class: BTreeMap<Vec<u32>, [[u64; 2]; 2]> = BTreeMap::new();
    for s in samples {
        let key: Vec<u32> = sides.cut_edges.iter().map(|&e| s.counts[e]).collect();
        let a = stat_a(s) as usize;
        let b = stat_b(s) as usize;
        by_class.entry(key).or_default()[a][b] += 1;
    }
    let classes_seen = by_class.len();
    let mut classes = Vec::new();
    for (cut_counts, table) in by_class {
        let n: u64 = table.iter().flatten().sum();
        if n < min_class_size {
            continue;
        }
        let (p_value, exact) = class_table_test(table);
        classes.push(ClassTest { cut_counts, n_samples: n, table, p_value, exact });
    }
    if classes.is_empty() {
        return Err(Error::InsufficientSamples {
            detail: format!(
                "no cut-occupation class reached {min_class_size} samples \
                 across {classes_seen} classes"
            ),
        });
    }
    let min_p = classes.iter().map(|c| c.p_value).fold(f64::INFINITY, f64::min);
    let bonferroni_p = (classes.len() as f64 * min_p).min(1.0);
    Ok(MarkovReport {
        n_samples: samples.len(),
        classes_seen,
        classes_tested: classes.len(),
        min_class_size,
        classes,
        min_p,
        bonferroni_p,
    })
}

/// Independence test of the two statistics over all samples with no
/// conditioning on the cut occupations — a deliberately wrong analysis whose
/// rejection (loops crossing the cut correlate the sides) certifies that the
/// conditional test has power.
pub fn unconditional_side_test<A, B>(
    samples: &[OccupationField],
    stat_a: A,
    stat_b: B,
) -> Result<ChiSquare>
where
    A: Fn(&OccupationField) -> bool,
    B: Fn(&OccupationField) -> bool,
{
    let mut table = [[0u64; 2]; 2];
    for s in samples {
        table[stat_a(s) as usize][stat_b(s) as usize] += 1;
    }
    contingency_test(&[table[0].to_vec(), table[1].to_vec()])
}
