//! Exact occupation observables of the loop ensemble, computed from the
//! transfer operator: per-edge visit moments, first-return partition values,
//! the occupation-number generating function and distribution, covariance
//! decay bounds on tori, and a near-critical rescaled-characteristic-function
//! scan.

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::TorusSpec;
use crate::torus::critical_weight;
use crate::transfer::{GreenFunction, TransferOperator};

/// Expected number of visits to undirected edge `e`: the average of the two
/// diagonal Green entries for its orientations, minus the empty walk.
///
/// The two diagonal entries agree (a closed walk through one orientation
/// reverses into one through the other with the same weight); averaging
/// removes the residual floating-point asymmetry of the inverse.
pub fn one_point_green(green: &GreenFunction, e: usize) -> f64 {
    let m = green.matrix();
    0.5 * (m[(2 * e, 2 * e)] + m[(2 * e + 1, 2 * e + 1)]) - 1.0
}

/// Covariance of the visit counts of two distinct undirected edges:
/// (1/2)·Σ over orientation pairs (a, b) of G_{a,b}·G_{b,a}.
///
/// Coinciding edges would need an extra diagonal (coincident-visit) series on
/// top of this product form, so they are rejected;
/// [`crate::loops::truncated_two_point`] handles e = f.
pub fn two_point_green(green: &GreenFunction, e: usize, f: usize) -> Result<f64> {
    if e == f {
        return Err(Error::Unsupported(
            "two-point covariance requires distinct undirected edges",
        ));
    }
    let m = green.matrix();
    let mut sum = 0.0;
    for a in [2 * e, 2 * e + 1] {
        for b in [2 * f, 2 * f + 1] {
            sum += m[(a, b)] * m[(b, a)];
        }
    }
    Ok(0.5 * sum)
}

/// Variance of the visit count of a single edge:
/// (1/2)·Σ over orientation pairs (a, b) of (G − Id)_{a,b}(G − Id)_{b,a},
/// plus the mean (the coincident-visit diagonal part).
pub fn two_point_same_edge(green: &GreenFunction, e: usize) -> f64 {
    let m = green.matrix();
    let dirs = [2 * e, 2 * e + 1];
    let mut sum = 0.0;
    for a in dirs {
        for b in dirs {
            let fwd = m[(a, b)] - if a == b { 1.0 } else { 0.0 };
            let back = m[(b, a)] - if a == b { 1.0 } else { 0.0 };
            sum += fwd * back;
        }
    }
    0.5 * sum + one_point_green(green, e)
}

/// First-return partition values of one undirected edge: total weights of
/// non-backtracking walks that leave one orientation and next touch the edge
/// when they arrive at the given endpoint, with the interior avoiding both
/// orientations. Chain weights are products of transfer entries, which for
/// these walks equals the plain weight product (both endpoints carry the
/// same edge weight).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FirstReturnValues {
    /// Undirected edge the values refer to.
    pub edge: usize,
    /// Walks from the forward orientation back to the forward orientation.
    pub return_fwd: f64,
    /// Walks from the reverse orientation back to the reverse orientation.
    pub return_rev: f64,
    /// Walks from the forward orientation to the reverse orientation.
    pub passage_fwd: f64,
    /// Walks from the reverse orientation to the forward orientation.
    pub passage_rev: f64,
}

impl FirstReturnValues {
    /// (1 − z·return_fwd)(1 − z·return_rev) − z²·passage_fwd·passage_rev.
    ///
    /// This is det(Id − D_z Λ)/det(Id₀ − Λ₀) where D_z scales the two rows of
    /// the edge's orientations by z and Λ₀ drops them: the factor of the
    /// characteristic determinant that carries all z-dependence.
    pub fn numerator(&self, z: Complex<f64>) -> Complex<f64> {
        (1.0 - z * self.return_fwd) * (1.0 - z * self.return_rev)
            - z * z * self.passage_fwd * self.passage_rev
    }

    /// The numerator at z = 1; positive whenever the ensemble is subcritical.
    pub fn denominator(&self) -> f64 {
        (1.0 - self.return_fwd) * (1.0 - self.return_rev)
            - self.passage_fwd * self.passage_rev
    }
}

/// Computes the four first-return values of edge `e` with one factorization:
/// delete both orientations of `e` from the transfer operator, solve
/// (Id − Λ₀) y = Λ[·, orientation] for both orientations, and contract with
/// the outgoing rows. Requires a subcritical ensemble.
pub fn first_return(op: &TransferOperator, e: usize) -> Result<FirstReturnValues> {
    let bracket = op.spectral_radius_bracket()?;
    if bracket.lower >= 1.0 {
        return Err(Error::Supercritical { rho: bracket.lower });
    }
    let lam = op.matrix();
    let k = op.dim();
    let (a, ar) = (2 * e, 2 * e + 1);
    assert!(ar < k, "edge index out of range");
    let keep: Vec<usize> = (0..k).filter(|&i| i != a && i != ar).collect();
    let t = keep.len();
    let mut sys = DMatrix::<f64>::identity(t, t);
    for (i, &gi) in keep.iter().enumerate() {
        for (j, &gj) in keep.iter().enumerate() {
            sys[(i, j)] -= lam[(gi, gj)];
        }
    }
    let mut rhs = DMatrix::<f64>::zeros(t, 2);
    for (i, &gi) in keep.iter().enumerate() {
        rhs[(i, 0)] = lam[(gi, a)];
        rhs[(i, 1)] = lam[(gi, ar)];
    }
    let sol = sys
        .lu()
        .solve(&rhs)
        .ok_or(Error::Supercritical { rho: bracket.upper })?;
    // Contract the restricted resolvent with the one-step exits from each
    // orientation. Self-loops and parallel edges are excluded by the graph
    // type, so there are no direct one-step terms.
    let contract = |row: usize, col: usize| -> f64 {
        keep.iter().enumerate().map(|(i, &gi)| lam[(row, gi)] * sol[(i, col)]).sum()
    };
    let values = FirstReturnValues {
        edge: e,
        return_fwd: contract(a, 0),
        return_rev: contract(ar, 1),
        passage_fwd: contract(a, 1),
        passage_rev: contract(ar, 0),
    };
    if values.denominator() <= 0.0 {
        return Err(Error::Supercritical { rho: bracket.upper });
    }
    Ok(values)
}

/// Probability generating function E[z^{N(e)}] of the visit count of the
/// edge, for z in the closed unit disk:
///
///   p(z) = [numerator(z) / numerator(1)]^{−1/2}
///
/// with the principal square root. The numerator's roots are real and lie
/// outside the closed unit disk in the subcritical regime, and the normalized
/// ratio factors into two right-half-plane terms, so the principal branch is
/// continuous on the disk. Equivalent forms verified elsewhere: p(1) = 1,
/// p'(1) = one-point visit count, p(0) = ratio of the loop partition
/// functions without and with the edge.
pub fn pgf(frv: &FirstReturnValues, z: Complex<f64>) -> Complex<f64> {
    (frv.numerator(z) / frv.denominator()).sqrt().inv()
}

/// Closed-form mean of the visit count, −numerator'(1)/(2·numerator(1));
/// identically equal to [`one_point_green`] of the same edge.
pub fn mean_occupation(frv: &FirstReturnValues) -> f64 {
    let num = frv.return_fwd * (1.0 - frv.return_rev)
        + frv.return_rev * (1.0 - frv.return_fwd)
        + 2.0 * frv.passage_fwd * frv.passage_rev;
    num / (2.0 * frv.denominator())
}

/// P(N(e) = 0) = √numerator(1): the ratio of the loop partition function of
/// the graph without the edge to that of the full graph.
pub fn void_probability(frv: &FirstReturnValues) -> f64 {
    frv.denominator().sqrt()
}

/// Probabilities P(N(e) = k) for k = 0..=kmax, recovered from the generating
/// function by discrete Fourier inversion on the unit circle.
///
/// p is analytic on a disk of radius > 1, so its Taylor coefficients decay
/// geometrically and the aliasing error of an M-point rule falls with the
/// same rate to the power M; M is chosen as 8 oversamples of the requested
/// range (at least 256). Callers wanting deep tails near criticality should
/// request a correspondingly larger kmax.
pub fn occupation_distribution(frv: &FirstReturnValues, kmax: usize) -> Vec<f64> {
    let m = (8 * (kmax + 1)).next_power_of_two().max(256);
    let vals: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / m as f64;
            pgf(frv, Complex::from_polar(1.0, theta))
        })
        .collect();
    (0..=kmax)
        .map(|k| {
            let mut acc = Complex::new(0.0, 0.0);
            for (j, v) in vals.iter().enumerate() {
                let theta = std::f64::consts::TAU * ((j * k) % m) as f64 / m as f64;
                acc += v * Complex::from_polar(1.0, -theta);
            }
            acc.re / m as f64
        })
        .collect()
}

/// Uniform covariance bound for a homogeneous d-dimensional torus at weight
/// x: 2·(x(2d−1))^{2·dist} / (1 − x(2d−1))², where dist is the line-graph
/// distance between the two edges.
///
/// Every entry of Λ^m is at most the maximum row sum R = x(2d−1) to the m-th
/// power, and entries between edges at distance D vanish for m < D, so each
/// of the four orientation products in the covariance is at most
/// (R^D/(1−R))². Errors when R ≥ 1 (at or beyond the critical weight).
pub fn decay_bound(d: usize, x: f64, dist: usize) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::WeightOutOfRange { x, requirement: "positive finite weight" });
    }
    let r = x * (2.0 * d as f64 - 1.0);
    if r >= 1.0 {
        return Err(Error::Supercritical { rho: r });
    }
    Ok(2.0 * r.powi(2 * dist as i32) / ((1.0 - r) * (1.0 - r)))
}

/// One weight in a [`chi_square_limit_scan`]: the sup-distance over the time
/// grid between the rescaled occupation characteristic function and
/// (1 − 2it)^{−1/2}. Weights at or beyond the critical point are skipped.
#[derive(Debug, Clone, Serialize)]
pub struct LimitScanPoint {
    pub x: f64,
    pub skipped: bool,
    pub mean_occupation: Option<f64>,
    pub sup_deviation: Option<f64>,
}

/// For each weight in `xs`, build the homogeneous (d = 2, n) torus, compute
/// φ(t) = E[exp(it·N(e)/⟨N(e)⟩)] from the generating function, and record
/// sup over `ts` of |φ(t) − (1 − 2it)^{−1/2}|. The deviation shrinks as x
/// approaches the critical weight, where N/⟨N⟩ approaches a chi-square law
/// with one degree of freedom.
pub fn chi_square_limit_scan(
    n: usize,
    e: usize,
    xs: &[f64],
    ts: &[f64],
) -> Result<Vec<LimitScanPoint>> {
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        if x >= critical_weight(2) {
            out.push(LimitScanPoint {
                x,
                skipped: true,
                mean_occupation: None,
                sup_deviation: None,
            });
            continue;
        }
        let g = TorusSpec::homogeneous(2, n, x)?.build()?;
        let op = TransferOperator::new(&g)?;
        let frv = first_return(&op, e)?;
        let mean = mean_occupation(&frv);
        let mut sup = 0.0_f64;
        for &t in ts {
            let phi = pgf(&frv, Complex::from_polar(1.0, t / mean));
            let target = Complex::new(1.0, -2.0 * t).sqrt().inv();
            sup = sup.max((phi - target).norm());
        }
        out.push(LimitScanPoint {
            x,
            skipped: false,
            mean_occupation: Some(mean),
            sup_deviation: Some(sup),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::loops::{truncated_first_return, truncated_two_point};

    fn k4(x: f64) -> WeightedGraph {
        WeightedGraph::new(
            4,
            vec![(0, 1, x), (0, 2, x), (0, 3, x), (1, 2, x), (1, 3, x), (2, 3, x)],
        )
        .unwrap()
    }

    /// Two triangles sharing the edge (0, 1); not edge-transitive, mixed
    /// degrees and weights.
    fn diamond() -> WeightedGraph {
        WeightedGraph::new(
            4,
            vec![(0, 1, 0.2), (0, 2, 0.15), (1, 2, 0.1), (0, 3, 0.12), (1, 3, 0.18)],
        )
        .unwrap()
    }

    fn cycle3(x: f64) -> WeightedGraph {
        WeightedGraph::new(3, vec![(0, 1, x), (1, 2, x), (2, 0, x)]).unwrap()
    }

    fn torus_op(d: usize, n: usize, x: f64) -> TransferOperator {
        let g = TorusSpec::homogeneous(d, n, x).unwrap().build().unwrap();
        TransferOperator::new(&g).unwrap()
    }

    #[test]
    fn one_point_orientations_agree_and_average_to_trace() {
        let g = diamond();
        let op = TransferOperator::new(&g).unwrap();
        let green = op.green().unwrap();
        let m = green.matrix();
        let mut by_edge_sum = 0.0;
        for e in 0..g.n_edges() {
            let fwd = m[(2 * e, 2 * e)];
            let rev = m[(2 * e + 1, 2 * e + 1)];
            assert!((fwd - rev).abs() < 1e-12, "edge {e}: {fwd} vs {rev}");
            by_edge_sum += one_point_green(&green, e);
        }
        let from_trace = green.trace() / (2.0 * g.n_edges() as f64) - 1.0;
        let from_edges = by_edge_sum / g.n_edges() as f64;
        assert!((from_edges - from_trace).abs() < 1e-14);
    }

    #[test]
    fn first_return_values_on_cycle_are_cube_weights() {
        let op = TransferOperator::new(&cycle3(0.2)).unwrap();
        let frv = first_return(&op, 0).unwrap();
        // The only walk returning to an orientation is the full cycle; no walk
        // reaches the reversed orientation without backtracking.
        assert!((frv.return_fwd - 0.008).abs() < 1e-15);
        assert!((frv.return_rev - 0.008).abs() < 1e-15);
        assert!(frv.passage_fwd.abs() < 1e-15);
        assert!(frv.passage_rev.abs() < 1e-15);
    }

    #[test]
    fn first_return_matches_truncated_series() {
        for op in [TransferOperator::new(&k4(0.25)).unwrap(), torus_op(2, 3, 0.1)] {
            let e = 0;
            let frv = first_return(&op, e).unwrap();
            let (a, ar) = (2 * e, 2 * e + 1);
            for (exact, root, terminal) in [
                (frv.return_fwd, a, a),
                (frv.return_rev, ar, ar),
                (frv.passage_fwd, a, ar),
                (frv.passage_rev, ar, a),
            ] {
                let series = truncated_first_return(&op, root, terminal, 14);
                assert!(
                    (exact - series.value).abs() <= series.tail_bound + 1e-14,
                    "{root}->{terminal}: exact {exact} vs series {} (tail {})",
                    series.value,
                    series.tail_bound
                );
                // The series has nonnegative terms, so it can only undershoot.
                assert!(exact >= series.value - 1e-14);
            }
        }
        // K4 has nonzero passage weight (e.g. 0→1, 1→2, 2→3, 3→1, 1→0), which
        // the torus shares; the cycle covers the degenerate zero case.
        let frv = first_return(&TransferOperator::new(&k4(0.25)).unwrap(), 0).unwrap();
        assert!(frv.passage_fwd > 1e-4);
    }

    #[test]
    fn green_entries_factor_through_first_return() {
        for op in [
            TransferOperator::new(&k4(0.25)).unwrap(),
            TransferOperator::new(&diamond()).unwrap(),
            torus_op(2, 3, 0.1),
        ] {
            let green = op.green().unwrap();
            for e in [0, 1] {
                let frv = first_return(&op, e).unwrap();
                let den = frv.denominator();
                let (a, ar) = (2 * e, 2 * e + 1);
                // Block inverse of (Id − Λ) on the two orientations: the rest
                // of the matrix enters only through the first-return values.
                assert!((green.entry(a, a) - (1.0 - frv.return_rev) / den).abs() < 1e-12);
                assert!((green.entry(ar, ar) - (1.0 - frv.return_fwd) / den).abs() < 1e-12);
                assert!((green.entry(a, ar) - frv.passage_fwd / den).abs() < 1e-12);
                assert!((green.entry(ar, a) - frv.passage_rev / den).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pgf_is_normalized_and_matches_deleted_edge_void() {
        // Removing edge e^ from the graph leaves exactly the loops that avoid
        // e, so P(N(e) = 0) = Z(G − e)/Z(G); an independent route to p(0).
        let full = k4(0.25);
        let deleted = WeightedGraph::new(
            4,
            vec![(0, 2, 0.25), (0, 3, 0.25), (1, 2, 0.25), (1, 3, 0.25), (2, 3, 0.25)],
        )
        .unwrap();
        let op = TransferOperator::new(&full).unwrap();
        let frv = first_return(&op, 0).unwrap();
        let one = pgf(&frv, Complex::new(1.0, 0.0));
        assert!((one - Complex::new(1.0, 0.0)).norm() < 1e-15);
        let z_full = op.log_partition_det().unwrap();
        let z_del = TransferOperator::new(&deleted).unwrap().log_partition_det().unwrap();
        let void = pgf(&frv, Complex::new(0.0, 0.0)).re;
        assert!((void - (z_del - z_full).exp()).abs() < 1e-12);
        assert!((void_probability(&frv) - void).abs() < 1e-14);

        // Same identity on a torus with one edge removed.
        let spec = TorusSpec::homogeneous(2, 3, 0.1).unwrap();
        let g = spec.build().unwrap();
        let op = TransferOperator::new(&g).unwrap();
        let frv = first_return(&op, 0).unwrap();
        let survivors: Vec<(usize, usize, f64)> =
            (1..g.n_edges()).map(|e| g.edge(e)).collect();
        let del = WeightedGraph::new(g.n_vertices(), survivors).unwrap();
        let z_full = op.log_partition_det().unwrap();
        let z_del = TransferOperator::new(&del).unwrap().log_partition_det().unwrap();
        let void = pgf(&frv, Complex::new(0.0, 0.0)).re;
        assert!((void - (z_del - z_full).exp()).abs() < 1e-10);

        // On the cycle every loop crosses every edge, so the void probability
        // is 1/Z = 1 − x³ exactly.
        let op = TransferOperator::new(&cycle3(0.2)).unwrap();
        let frv = first_return(&op, 0).unwrap();
        let void = pgf(&frv, Complex::new(0.0, 0.0)).re;
        assert!((void - 0.992).abs() < 1e-14);
        assert!((void - (-op.log_partition_det().unwrap()).exp()).abs() < 1e-14);
    }

    #[test]
    fn pgf_on_cycle_is_geometric() {
        // Loop lengths on the 3-cycle are multiples of 3 with intensity
        // x^{3k}/k, and every loop crosses every edge k times, so N(e) is the
        // sum over an independent Poisson(x^{3k}/k) count of each k; its
        // generating function is (1 − x³)/(1 − z·x³).
        let x: f64 = 0.2;
        let q = x.powi(3);
        let op = TransferOperator::new(&cycle3(x)).unwrap();
        let frv = first_return(&op, 1).unwrap();
        for z in [
            Complex::new(0.3, 0.0),
            Complex::new(-0.7, 0.0),
            Complex::new(0.0, 0.9),
            Complex::from_polar(0.6, 2.1),
            Complex::new(1.0, 0.0),
        ] {
            let expected = (1.0 - q) / (1.0 - z * q);
            assert!(
                (pgf(&frv, z) - expected).norm() < 1e-13,
                "z = {z}: {} vs {expected}",
                pgf(&frv, z)
            );
        }
    }

    #[test]
    fn mean_from_pgf_matches_one_point() {
        for op in [
            TransferOperator::new(&k4(0.25)).unwrap(),
            TransferOperator::new(&diamond()).unwrap(),
            torus_op(2, 3, 0.1),
        ] {
            let green = op.green().unwrap();
            for e in [0, 1] {
                let frv = first_return(&op, e).unwrap();
                let mean = mean_occupation(&frv);
                assert!((mean - one_point_green(&green, e)).abs() < 1e-13);
                // Complex-step derivative of the generating function at 1.
                let h = 1e-100;
                let step = pgf(&frv, Complex::new(1.0, h)).im / h;
                assert!((step - mean).abs() < 1e-10, "{step} vs {mean}");
            }
        }
    }

    #[test]
    fn occupation_distribution_sums_to_one_with_matching_mean() {
        let op = TransferOperator::new(&k4(0.25)).unwrap();
        let frv = first_return(&op, 0).unwrap();
        let probs = occupation_distribution(&frv, 80);
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-10, "total {total}");
        let mean: f64 = probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert!((mean - mean_occupation(&frv)).abs() < 1e-8);
        assert!(probs.iter().all(|&p| p > -1e-12));

        let op = TransferOperator::new(&cycle3(0.2)).unwrap();
        let frv = first_return(&op, 0).unwrap();
        let probs = occupation_distribution(&frv, 10);
        let q = 0.2_f64.powi(3);
        for (k, &p) in probs.iter().enumerate() {
            let geometric = (1.0 - q) * q.powi(k as i32);
            assert!((p - geometric).abs() < 1e-12, "k = {k}: {p} vs {geometric}");
        }
    }

    #[test]
    fn two_point_matches_truncated_series() {
        let cases = [
            (TransferOperator::new(&k4(0.25)).unwrap(), vec![(0, 1), (0, 5)]),
            (torus_op(2, 4, 0.15), vec![(0, 1), (0, 5)]),
        ];
        for (op, pairs) in cases {
            let green = op.green().unwrap();
            for (e, f) in pairs {
                let exact = two_point_green(&green, e, f).unwrap();
                let series = truncated_two_point(&op, e, f, 20).unwrap();
                assert!(
                    (exact - series.value).abs() <= series.tail_bound + 1e-13,
                    "pair ({e}, {f}): {exact} vs {} (tail {})",
                    series.value,
                    series.tail_bound
                );
            }
        }
    }

    #[test]
    fn same_edge_variance_matches_truncated_series() {
        let op = torus_op(2, 4, 0.15);
        let green = op.green().unwrap();
        for e in [0, 3] {
            let exact = two_point_same_edge(&green, e);
            let series = truncated_two_point(&op, e, e, 22).unwrap();
            assert!(
                (exact - series.value).abs() <= series.tail_bound + 1e-13,
                "edge {e}: {exact} vs {} (tail {})",
                series.value,
                series.tail_bound
            );
        }
        // On the 3-cycle the count is geometric with ratio x³: variance
        // q/(1−q)² for q = x³.
        let op = TransferOperator::new(&cycle3(0.2)).unwrap();
        let green = op.green().unwrap();
        let q = 0.2_f64.powi(3);
        let expected = q / ((1.0 - q) * (1.0 - q));
        assert!((two_point_same_edge(&green, 0) - expected).abs() < 1e-13);
    }

    #[test]
    fn two_point_rejects_equal_edges() {
        let op = TransferOperator::new(&k4(0.2)).unwrap();
        let green = op.green().unwrap();
        assert!(matches!(two_point_green(&green, 3, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn decay_bound_frozen_value_and_domination() {
        // d = 2, x = 0.2, dist = 3: 2·(0.6)⁶/(0.4)² = 0.58320.
        assert!((decay_bound(2, 0.2, 3).unwrap() - 0.58320).abs() < 1e-12);
        assert!((decay_bound(2, 0.2, 0).unwrap() - 12.5).abs() < 1e-12);
        assert!(matches!(
            decay_bound(2, 1.0 / 3.0, 1),
            Err(Error::Supercritical { .. })
        ));

        let op = torus_op(2, 8, 0.2);
        let g = op.graph().clone();
        let green = op.green().unwrap();
        let dist = g.edge_distances_from(0);
        for f in 1..g.n_edges() {
            let tp = two_point_green(&green, 0, f).unwrap().abs();
            let bound = decay_bound(2, 0.2, dist[f]).unwrap();
            assert!(tp <= bound + 1e-15, "edge {f} at distance {}: {tp} > {bound}", dist[f]);
        }
    }

    #[test]
    fn chi_square_scan_deviation_decreases_and_flags_supercritical() {
        let ts: Vec<f64> = (-50..=50).map(|k| k as f64 * 0.1).collect();
        let points = chi_square_limit_scan(6, 0, &[0.30, 0.33, 0.34], &ts).unwrap();
        assert_eq!(points.len(), 3);
        assert!(!points[0].skipped && !points[1].skipped);
        assert!(points[2].skipped, "x = 0.34 exceeds the critical weight 1/3");
        assert!(points[2].sup_deviation.is_none());
        let d30 = points[0].sup_deviation.unwrap();
        let d33 = points[1].sup_deviation.unwrap();
        assert!(d33 < d30, "deviation should shrink toward criticality: {d33} vs {d30}");
        assert!(points[1].mean_occupation.unwrap() > points[0].mean_occupation.unwrap());
    }
}
