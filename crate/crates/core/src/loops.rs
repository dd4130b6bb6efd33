//! Explicit non-backtracking loops and length-truncated walk sums.
//!
//! A loop here is an unrooted, unoriented closed walk that never reverses the
//! edge it just traversed. Each loop carries an intensity
//! weight/multiplicity, where the weight is the product of traversed edge
//! weights (with repetition) and the multiplicity is the number of rotations
//! fixing the walk. Exhaustive enumeration up to a length cap provides an
//! independent oracle for the determinant and Green-function routes; the
//! truncated sums in this module evaluate the same series through matrix
//! powers and come with explicit geometric tail bounds, so the two can be
//! compared at matching truncation depths.

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, WeightedGraph};
use crate::transfer::TransferOperator;
use nalgebra::{DMatrix, DVector};
use std::collections::{BTreeMap, HashSet};

/// An unrooted, unoriented non-backtracking loop in canonical form: the
/// lexicographically smallest directed-step sequence over all rotations of
/// both orientations.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct UnrootedLoop {
    steps: Vec<DirectedEdge>,
    multiplicity: usize,
    weight: f64,
}

fn canonical_form(steps: &[DirectedEdge]) -> Vec<DirectedEdge> {
    let n = steps.len();
    let reversed: Vec<DirectedEdge> = steps.iter().rev().map(|&s| s ^ 1).collect();
    let mut best: Option<Vec<DirectedEdge>> = None;
    for seq in [steps, &reversed[..]] {
        for r in 0..n {
            let cand: Vec<DirectedEdge> = (0..n).map(|i| seq[(r + i) % n]).collect();
            if best.as_ref().map_or(true, |b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best.expect("non-empty step sequence")
}

fn smallest_period(steps: &[DirectedEdge]) -> usize {
    let n = steps.len();
    'outer: for p in 1..=n {
        if n % p != 0 {
            continue;
        }
        for i in 0..n {
            if steps[i] != steps[(i + p) % n] {
                continue 'outer;
            }
        }
        return p;
    }
    n
}

impl UnrootedLoop {
    /// Builds a loop from any rooted, oriented step sequence, checking that
    /// consecutive steps chain head-to-tail without reversals (cyclically).
    pub fn from_steps(g: &WeightedGraph, steps: &[DirectedEdge]) -> Result<Self> {
        let n = steps.len();
        if n < 3 {
            return Err(Error::InvalidGraph(format!(
                "a non-backtracking loop needs at least 3 steps, got {n}"
            )));
        }
        for &s in steps {
            if s >= g.n_directed() {
                return Err(Error::InvalidGraph(format!("directed edge {s} out of range")));
            }
        }
        for (i, &s) in steps.iter().enumerate() {
            let next = steps[(i + 1) % n];
            if g.head(s) != g.tail(next) {
                return Err(Error::InvalidGraph(format!(
                    "steps {i} and {} do not chain: head {} vs tail {}",
                    (i + 1) % n,
                    g.head(s),
                    g.tail(next)
                )));
            }
            if next == s ^ 1 {
                return Err(Error::InvalidGraph(format!("steps {i}→{} backtrack", (i + 1) % n)));
            }
        }
        let canonical = canonical_form(steps);
        let multiplicity = n / smallest_period(&canonical);
        // Multiply in canonical order so equal loops carry bit-identical
        // weights regardless of the rooting they were built from.
        let weight = canonical.iter().map(|&s| g.directed_weight(s)).product();
        Ok(UnrootedLoop { steps: canonical, multiplicity, weight })
    }

    pub fn steps(&self) -> &[DirectedEdge] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Rotations fixing the canonical sequence; a loop that repeats a shorter
    /// loop k times has multiplicity k.
    pub fn multiplicity(&self) -> usize {
        self.multiplicity
    }

    /// Product of traversed edge weights, counted with repetition.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Intensity weight/multiplicity of the loop in the soup.
    pub fn intensity(&self) -> f64 {
        self.weight / self.multiplicity as f64
    }

    /// Visits per undirected edge, ignoring direction.
    pub fn occupation(&self) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for &s in &self.steps {
            *counts.entry(s >> 1).or_insert(0) += 1;
        }
        counts
    }

    /// Distinct rooted, oriented step sequences tracing this loop: 2n/mult
    /// (a non-backtracking loop is never fixed by orientation reversal).
    pub fn rooted_oriented_count(&self) -> usize {
        2 * self.len() / self.multiplicity
    }
}

/// All non-backtracking loops of length ≤ `lmax`, canonical and sorted by
/// (length, steps). Fails with `MemoryCapExceeded` past `max_loops` distinct
/// loops.
pub fn enumerate_loops(
    g: &WeightedGraph,
    lmax: usize,
    max_loops: usize,
) -> Result<Vec<UnrootedLoop>> {
    let mut found: HashSet<Vec<DirectedEdge>> = HashSet::new();
    let mut walk: Vec<DirectedEdge> = Vec::with_capacity(lmax);
    for a in 0..g.n_directed() {
        walk.push(a);
        extend(g, lmax, max_loops, &mut walk, &mut found)?;
        walk.pop();
    }
    let mut loops: Vec<UnrootedLoop> = found
        .into_iter()
        .map(|steps| {
            let multiplicity = steps.len() / smallest_period(&steps);
            let weight = steps.iter().map(|&s| g.directed_weight(s)).product();
            UnrootedLoop { steps, multiplicity, weight }
        })
        .collect();
    loops.sort_by(|a, b| (a.len(), &a.steps).cmp(&(b.len(), &b.steps)));
    Ok(loops)
}

/// Depth-first extension over walks whose every step id stays ≥ the root id,
/// so each loop is generated only from rotations starting at its smallest
/// step; the canonical-form set removes the remaining symmetry.
fn extend(
    g: &WeightedGraph,
    lmax: usize,
    max_loops: usize,
    walk: &mut Vec<DirectedEdge>,
    found: &mut HashSet<Vec<DirectedEdge>>,
) -> Result<()> {
    let first = walk[0];
    let last = *walk.last().unwrap();
    if walk.len() >= 3 && g.head(last) == g.tail(first) && first != last ^ 1 {
        if found.insert(canonical_form(walk)) && found.len() > max_loops {
            return Err(Error::MemoryCapExceeded { enumerated: found.len() });
        }
    }
    if walk.len() == lmax {
        return Ok(());
    }
    for cont in g.continuations(last) {
        if cont < first {
            continue;
        }
        walk.push(cont);
        extend(g, lmax, max_loops, walk, found)?;
        walk.pop();
    }
    Ok(())
}

/// Sum of loop intensities grouped by length.
pub fn intensity_by_length(loops: &[UnrootedLoop]) -> BTreeMap<usize, f64> {
    let mut by_len = BTreeMap::new();
    for l in loops {
        *by_len.entry(l.len()).or_insert(0.0) += l.intensity();
    }
    by_len
}

/// A truncated series value with an explicit bound on the discarded tail.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TruncatedValue {
    pub value: f64,
    /// Upper bound on the absolute value of the dropped terms; infinite when
    /// no geometric bound applies.
    pub tail_bound: f64,
    pub lmax: usize,
}

/// Σ_{m>l} ρ^m = ρ^{l+1}/(1−ρ), or ∞ for ρ ≥ 1.
fn geometric_tail(rho: f64, l: usize) -> f64 {
    if rho >= 1.0 {
        f64::INFINITY
    } else {
        rho.powi(l as i32 + 1) / (1.0 - rho)
    }
}

/// Σ_{m>l} m·ρ^m = ρ^{l+1}((l+1) − l·ρ)/(1−ρ)², or ∞ for ρ ≥ 1.
fn weighted_geometric_tail(rho: f64, l: usize) -> f64 {
    if rho >= 1.0 {
        f64::INFINITY
    } else {
        let lf = l as f64;
        rho.powi(l as i32 + 1) * ((lf + 1.0) - lf * rho) / ((1.0 - rho) * (1.0 - rho))
    }
}

/// Σ_{m>l} ρ^m/m = −log(1−ρ) − Σ_{m≤l} ρ^m/m, or ∞ for ρ ≥ 1.
fn log_series_tail(rho: f64, l: usize) -> f64 {
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    let mut partial = 0.0;
    for m in 1..=l {
        partial += rho.powi(m as i32) / m as f64;
    }
    // Clamp the difference of nearly equal numbers at zero.
    (-(1.0 - rho).ln() - partial).max(0.0)
}

fn max_row_sum(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().sum::<f64>())
        .fold(0.0, f64::max)
}

/// Σ_{loops, length ≤ lmax} intensity, evaluated as Σ_m Tr Λ^m/(2m).
/// The trace of Λ^m is the total weight of rooted oriented closed walks of
/// length m, and each loop of length m owns 2m/mult of them. The tail uses
/// |Tr Λ^m| ≤ (dim)·ρ^m with ρ the upper spectral-radius bracket.
pub fn truncated_log_partition(op: &TransferOperator, lmax: usize) -> Result<TruncatedValue> {
    let lam = op.matrix();
    let k = lam.nrows();
    let mut value = 0.0;
    let mut power = lam.clone();
    for m in 1..=lmax {
        if m > 1 {
            power = &power * lam;
        }
        value += power.trace() / (2.0 * m as f64);
    }
    let rho = op.spectral_radius_bracket()?.upper;
    Ok(TruncatedValue {
        value,
        tail_bound: 0.5 * k as f64 * log_series_tail(rho, lmax),
        lmax,
    })
}

/// Σ_{loops, length ≤ lmax} intensity · visits(e), via the diagonal of Λ^m
/// at the two orientations of `e`. The tail bound uses the maximum row sum R
/// of Λ, since every diagonal entry of Λ^m is at most R^m.
pub fn truncated_one_point(op: &TransferOperator, e: usize, lmax: usize) -> TruncatedValue {
    let lam = op.matrix();
    let (a, b) = (2 * e, 2 * e + 1);
    let mut value = 0.0;
    let mut power = lam.clone();
    for m in 1..=lmax {
        if m > 1 {
            power = &power * lam;
        }
        value += 0.5 * (power[(a, a)] + power[(b, b)]);
    }
    let r = max_row_sum(lam);
    TruncatedValue { value, tail_bound: geometric_tail(r, lmax), lmax }
}

/// Σ_{loops, length ≤ lmax} intensity · visits(e) · visits(f).
///
/// Splitting the product of visit counts over ordered pairs of marked
/// positions in each rooted walk gives, per length m,
/// (1/2)·Σ_{a∈±e, b∈±f} Σ_{k=1}^{m−1} [Λ^k]_{a,b}[Λ^{m−k}]_{b,a}, plus for
/// e = f the coincident-position part (1/2)·Σ_{a∈±e}[Λ^m]_{a,a}. The tail
/// bound uses visits(e)·visits(f) ≤ m² and |Tr Λ^m| ≤ (dim)·ρ^m.
pub fn truncated_two_point(
    op: &TransferOperator,
    e: usize,
    f: usize,
    lmax: usize,
) -> Result<TruncatedValue> {
    let lam = op.matrix();
    let k = lam.nrows();
    let dirs_e = [2 * e, 2 * e + 1];
    let dirs_f = [2 * f, 2 * f + 1];
    // forward[i][j][m] = [Λ^m]_{dirs_e[i], dirs_f[j]}, backward the reverse.
    let mut forward = [[vec![0.0; lmax + 1], vec![0.0; lmax + 1]], [vec![0.0; lmax + 1], vec![0.0; lmax + 1]]];
    let mut backward = forward.clone();
    let mut diag = [vec![0.0; lmax + 1], vec![0.0; lmax + 1]];
    let mut power = lam.clone();
    for m in 1..=lmax {
        if m > 1 {
            power = &power * lam;
        }
        for (i, &a) in dirs_e.iter().enumerate() {
            for (j, &b) in dirs_f.iter().enumerate() {
                forward[i][j][m] = power[(a, b)];
                backward[i][j][m] = power[(b, a)];
            }
            diag[i][m] = power[(a, a)];
        }
    }
    let mut value = 0.0;
    for m in 2..=lmax {
        for i in 0..2 {
            for j in 0..2 {
                for split in 1..m {
                    value += 0.5 * forward[i][j][split] * backward[i][j][m - split];
                }
            }
        }
    }
    if e == f {
        for m in 1..=lmax {
            value += 0.5 * (diag[0][m] + diag[1][m]);
        }
    }
    let rho = op.spectral_radius_bracket()?.upper;
    Ok(TruncatedValue {
        value,
        tail_bound: 0.5 * k as f64 * weighted_geometric_tail(rho, lmax),
        lmax,
    })
}

/// Total weight of non-backtracking walks that start with a continuation of
/// `root`, end with the step `terminal`, take at most `lmax` steps after the
/// root, and avoid both orientations of root and terminal edges in between.
/// The weight of a walk is the product of Λ entries along its chain, i.e.
/// the row weights of all steps except the terminal one.
pub fn truncated_first_return(
    op: &TransferOperator,
    root: DirectedEdge,
    terminal: DirectedEdge,
    lmax: usize,
) -> TruncatedValue {
    assert!(lmax >= 1, "need at least one step");
    let lam = op.matrix();
    let k = lam.nrows();
    let forbidden = |g: DirectedEdge| {
        g == root || g == root ^ 1 || g == terminal || g == terminal ^ 1
    };
    // chains[g] = total weight of restricted chains root → g of the current
    // length; the walk then closes with the Λ_{g,terminal} entry.
    let mut value = lam[(root, terminal)];
    let mut chains = DVector::from_fn(k, |g, _| if forbidden(g) { 0.0 } else { lam[(root, g)] });
    for _ in 2..=lmax {
        value += (0..k).map(|g| chains[g] * lam[(g, terminal)]).sum::<f64>();
        let prev = chains.clone();
        for h in 0..k {
            chains[h] = if forbidden(h) {
                0.0
            } else {
                (0..k).map(|g| prev[g] * lam[(g, h)]).sum()
            };
        }
    }
    let r = max_row_sum(lam);
    TruncatedValue { value, tail_bound: geometric_tail(r, lmax), lmax }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TorusSpec;

    fn triangle() -> WeightedGraph {
        WeightedGraph::new(3, vec![(0, 1, 0.1), (1, 2, 0.2), (2, 0, 0.3)]).unwrap()
    }

    fn k4(x: f64) -> WeightedGraph {
        WeightedGraph::new(
            4,
            vec![(0, 1, x), (0, 2, x), (0, 3, x), (1, 2, x), (1, 3, x), (2, 3, x)],
        )
        .unwrap()
    }

    #[test]
    fn triangle_loops_up_to_repetition() {
        let g = triangle();
        let loops = enumerate_loops(&g, 5, 1000).unwrap();
        assert_eq!(loops.len(), 1, "only the 3-cycle fits in 5 steps");
        let l = &loops[0];
        assert_eq!(l.len(), 3);
        assert_eq!(l.multiplicity(), 1);
        assert!((l.weight() - 0.006).abs() < 1e-15);
        assert_eq!(l.rooted_oriented_count(), 6);

        let loops = enumerate_loops(&g, 6, 1000).unwrap();
        assert_eq!(loops.len(), 2, "the doubled 3-cycle appears at length 6");
        let twice = &loops[1];
        assert_eq!(twice.len(), 6);
        assert_eq!(twice.multiplicity(), 2);
        assert!((twice.weight() - 0.006 * 0.006).abs() < 1e-18);
        assert_eq!(twice.rooted_oriented_count(), 6);
        // Intensity of the doubled loop is weight/2.
        assert!((twice.intensity() - 0.5 * twice.weight()).abs() < 1e-18);
    }

    #[test]
    fn canonical_form_is_rotation_and_reversal_invariant() {
        let g = triangle();
        // The 3-cycle as directed steps: 0→1 is edge0 dir 0, 1→2 is edge1
        // dir 2, 2→0 is edge2 dir 4.
        let base = [0usize, 2, 4];
        let l0 = UnrootedLoop::from_steps(&g, &base).unwrap();
        let rotated = [2usize, 4, 0];
        let reversed = [5usize, 3, 1];
        assert_eq!(l0, UnrootedLoop::from_steps(&g, &rotated).unwrap());
        assert_eq!(l0, UnrootedLoop::from_steps(&g, &reversed).unwrap());
        assert_eq!(l0.steps(), &base, "smallest rotation starts at step 0");
    }

    #[test]
    fn invalid_step_sequences_are_rejected()	{
        let g = triangle();
        assert!(UnrootedLoop::from_steps(&g, &[0, 2]).is_err(), "too short");
        assert!(UnrootedLoop::from_steps(&g, &[0, 1, 0]).is_err(), "backtrack");
        assert!(UnrootedLoop::from_steps(&g, &[0, 4, 2]).is_err(), "not chained");
        assert!(UnrootedLoop::from_steps(&g, &[0, 2, 9]).is_err(), "out of range");
    }

    #[test]
    fn occupation_counts_undirected_visits() {
        let g = triangle();
        let l = UnrootedLoop::from_steps(&g, &[0, 2, 4, 0, 2, 4]).unwrap();
        let occ = l.occupation();
        assert_eq!(occ.get(&0), Some(&2));
        assert_eq!(occ.get(&1), Some(&2));
        assert_eq!(occ.get(&2), Some(&2));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = k4(0.2);
        assert!(matches!(
            enumerate_loops(&g, 8, 3),
            Err(Error::MemoryCapExceeded { .. })
        ));
    }

    #[test]
    fn enumerated_intensities_match_traces_per_length() {
        // Independent check of the enumeration against the algebraic route:
        // for each length m, Σ_{|ℓ|=m} 2m·intensity(ℓ) must equal Tr Λ^m.
        let g = k4(0.2);
        let op = TransferOperator::new(&g).unwrap();
        let lmax = 8;
        let loops = enumerate_loops(&g, lmax, 100_000).unwrap();
        let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
        for l in &loops {
            *sums.entry(l.len()).or_insert(0.0) += l.intensity() * 2.0 * l.len() as f64;
        }
        let mut power = op.matrix().clone();
        for m in 1..=lmax {
            if m > 1 {
                power = &power * op.matrix();
            }
            let from_loops = sums.get(&m).copied().unwrap_or(0.0);
            assert!(
                (from_loops - power.trace()).abs() < 1e-12,
                "length {m}: loops give {from_loops}, trace gives {}",
                power.trace()
            );
        }
    }

    #[test]
    fn truncated_log_partition_matches_enumeration() {
        let g = k4(0.2);
        let op = TransferOperator::new(&g).unwrap();
        let lmax = 8;
        let loops = enumerate_loops(&g, lmax, 100_000).unwrap();
        let enumerated: f64 = loops.iter().map(|l| l.intensity()).sum();
        let truncated = truncated_log_partition(&op, lmax).unwrap();
        assert!((enumerated - truncated.value).abs() < 1e-12);
    }

    #[test]
    fn truncation_plus_tail_brackets_the_exact_value() {
        let g = k4(0.3);
        let op = TransferOperator::new(&g).unwrap();
        let exact = op.log_partition_det().unwrap();
        for lmax in [5, 10, 20, 40] {
            let t = truncated_log_partition(&op, lmax).unwrap();
            assert!(t.value <= exact + 1e-12, "series has positive terms");
            assert!(
                exact - t.value <= t.tail_bound + 1e-12,
                "lmax {lmax}: dropped mass {} exceeds bound {}",
                exact - t.value,
                t.tail_bound
            );
        }
        // The bound must actually shrink.
        let wide = truncated_log_partition(&op, 5).unwrap();
        let deep = truncated_log_partition(&op, 40).unwrap();
        assert!(deep.tail_bound < wide.tail_bound * 1e-6);
    }

    #[test]
    fn truncated_one_point_matches_enumeration() {
        let g = k4(0.2);
        let op = TransferOperator::new(&g).unwrap();
        let lmax = 8;
        let loops = enumerate_loops(&g, lmax, 100_000).unwrap();
        for e in [0usize, 3] {
            let enumerated: f64 = loops
                .iter()
                .map(|l| l.intensity() * l.occupation().get(&e).copied().unwrap_or(0) as f64)
                .sum();
            let t = truncated_one_point(&op, e, lmax);
            assert!(
                (enumerated - t.value).abs() < 1e-12,
                "edge {e}: {enumerated} vs {}",
                t.value
            );
        }
    }

    #[test]
    fn truncated_two_point_matches_enumeration() {
        let g = k4(0.2);
        let op = TransferOperator::new(&g).unwrap();
        let lmax = 8;
        let loops = enumerate_loops(&g, lmax, 100_000).unwrap();
        for (e, f) in [(0usize, 5usize), (0, 1), (2, 2)] {
            let enumerated: f64 = loops
                .iter()
                .map(|l| {
                    let occ = l.occupation();
                    let ne = occ.get(&e).copied().unwrap_or(0) as f64;
                    let nf = occ.get(&f).copied().unwrap_or(0) as f64;
                    l.intensity() * ne * nf
                })
                .sum();
            let t = truncated_two_point(&op, e, f, lmax).unwrap();
            assert!(
                (enumerated - t.value).abs() < 1e-12,
                "pair ({e},{f}): {enumerated} vs {}",
                t.value
            );
        }
    }

    #[test]
    fn truncated_two_point_on_a_small_torus() {
        // Same cross-check on a graph with nontrivial topology.
        let g = TorusSpec::homogeneous(2, 4, 0.15).unwrap().build().unwrap();
        let op = TransferOperator::new(&g).unwrap();
        let lmax = 7;
        let loops = enumerate_loops(&g, lmax, 1_000_000).unwrap();
        let (e, f) = (0usize, 9usize);
        let enumerated: f64 = loops
            .iter()
            .map(|l| {
                let occ = l.occupation();
                l.intensity()
                    * occ.get(&e).copied().unwrap_or(0) as f64
                    * occ.get(&f).copied().unwrap_or(0) as f64
            })
            .sum();
        let t = truncated_two_point(&op, e, f, lmax).unwrap();
        assert!((enumerated - t.value).abs() < 1e-12);
    }

    /// Brute-force restricted walk sum used to pin the first-return series.
    fn first_return_dfs(
        g: &WeightedGraph,
        root: DirectedEdge,
        terminal: DirectedEdge,
        lmax: usize,
    ) -> f64 {
        fn go(
            g: &WeightedGraph,
            cur: DirectedEdge,
            terminal: DirectedEdge,
            left: usize,
            weight: f64,
            root: DirectedEdge,
            total: &mut f64,
        ) {
            if left == 0 {
                return;
            }
            for cont in g.continuations(cur) {
                let w = weight * g.directed_weight(cur);
                if cont == terminal {
                    *total += w;
                }
                let banned = cont >> 1 == root >> 1 || cont >> 1 == terminal >> 1;
                if !banned {
                    go(g, cont, terminal, left - 1, w, root, total);
                }
            }
        }
        let mut total = 0.0;
        go(g, root, terminal, lmax, 1.0, root, &mut total);
        total
    }

    #[test]
    fn truncated_first_return_matches_brute_force() {
        let g = k4(0.25);
        let op = TransferOperator::new(&g).unwrap();
        for lmax in [1, 2, 3, 5, 8] {
            for (root, terminal) in [(0usize, 0usize), (0, 1), (4, 4), (4, 5)] {
                let fast = truncated_first_return(&op, root, terminal, lmax);
                let slow = first_return_dfs(&g, root, terminal, lmax);
                assert!(
                    (fast.value - slow).abs() < 1e-13,
                    "root {root} terminal {terminal} lmax {lmax}: {} vs {slow}",
                    fast.value
                );
            }
        }
    }

    #[test]
    fn first_return_tail_bound_holds_on_regular_graphs() {
        // On K4 with x = 0.3 the row sums are all 0.6 < 1, so extending the
        // horizon can add at most the geometric tail.
        let g = k4(0.3);
        let op = TransferOperator::new(&g).unwrap();
        let short = truncated_first_return(&op, 0, 0, 6);
        let long = truncated_first_return(&op, 0, 0, 40);
        assert!(long.value >= short.value - 1e-15, "series has positive terms");
        assert!(long.value - short.value <= short.tail_bound + 1e-15);
        assert!(long.tail_bound < 1e-8);
    }
}
