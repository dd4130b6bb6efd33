//! Small dense linear-algebra kernels used across the exact routes.
//!
//! These are deliberately hand-rolled where the library needs more than the
//! stock result: log-determinants with explicit sign (LU with partial
//! pivoting), positive-definiteness failures that name the failing leading
//! minor (Cholesky), and a spectral-radius bound for entrywise nonnegative
//! matrices (power iteration on Id + M with a Collatz–Wielandt bracket, which
//! converges even when M itself is periodic or reducible into orientation
//! classes of equal radius).

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Relative tolerance for power-iteration convergence.
pub const POWER_TOL: f64 = 1e-10;
/// Iteration cap for power iteration.
pub const POWER_MAX_ITERS: usize = 100_000;

/// Sign and natural log of |det M|, via LU with partial pivoting.
/// Returns `(sign, log_abs_det)`; `sign` is 0.0 for a singular matrix.
pub fn lu_log_det(m: &DMatrix<f64>) -> (f64, f64) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "determinant needs a square matrix");
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut a = m.clone();
    let mut sign = 1.0f64;
    let mut log_abs = 0.0f64;
    for k in 0..n {
        // Partial pivoting: largest |entry| in column k at or below the diagonal.
        let mut p = k;
        let mut best = a[(k, k)].abs();
        for i in k + 1..n {
            let v = a[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        if p != k {
            a.swap_rows(p, k);
            sign = -sign;
        }
        let pivot = a[(k, k)];
        sign *= pivot.signum();
        log_abs += pivot.abs().ln();
        for i in k + 1..n {
            let f = a[(i, k)] / pivot;
            a[(i, k)] = f;
            for j in k + 1..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    (sign, log_abs)
}

/// Log-determinant of a symmetric positive definite matrix via Cholesky.
/// Fails with the 1-based index of the first non-positive leading minor.
pub fn cholesky_log_det(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "Cholesky needs a square matrix");
    let mut l = vec![vec![0.0f64; n]; n];
    let mut log_det = 0.0;
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite { minor: j + 1 });
        }
        let root = d.sqrt();
        l[j][j] = root;
        log_det += 2.0 * root.ln();
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / root;
        }
    }
    Ok(log_det)
}

/// Outcome of the nonnegative-matrix power iteration.
#[derive(Debug, Clone, Copy)]
pub struct SpectralBracket {
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

impl SpectralBracket {
    pub fn value(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Power iteration for the spectral radius of an entrywise nonnegative matrix.
///
/// Iterates v ← (Id + M)v on a positive vector; the Collatz–Wielandt ratios of
/// consecutive iterates bracket 1 + ρ(M) from both sides. The Id shift makes
/// the iteration aperiodic, so the bracket closes for every matrix arising
/// from a connected graph with minimum degree 2. Stops early once the bracket
/// width falls below `tol` or, if `stop` is given, once the bracket decides
/// ρ(M) < stop or ρ(M) ≥ stop.
pub fn power_iteration_nonneg(
    m: &DMatrix<f64>,
    tol: f64,
    max_iters: usize,
    stop: Option<f64>,
) -> Result<SpectralBracket> {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return Ok(SpectralBracket { lower: 0.0, upper: 0.0, iterations: 0 });
    }
    let mut v = nalgebra::DVector::from_element(n, 1.0f64);
    let mut w = nalgebra::DVector::zeros(n);
    for it in 1..=max_iters {
        w.gemv(1.0, m, &v, 0.0);
        w += &v;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = w[i] / v[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let bracket = SpectralBracket { lower: lo - 1.0, upper: hi - 1.0, iterations: it };
        if bracket.width() <= tol * hi.max(1.0) {
            return Ok(bracket);
        }
        if let Some(s) = stop {
            if bracket.upper < s || bracket.lower >= s {
                return Ok(bracket);
            }
        }
        let norm = w.amax();
        v.copy_from(&w);
        v /= norm;
    }
    Err(Error::PowerIterationStalled { iterations: max_iters })
}

/// Sums values in fixed pairwise order, independent of how they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_log_det_matches_small_determinants() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 2.0, 4.0]);
        let (sign, log_abs) = lu_log_det(&m);
        assert_eq!(sign, 1.0);
        assert!((log_abs - 10.0f64.ln()).abs() < 1e-14);

        // Swapped rows: negative determinant.
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 4.0, 3.0, 1.0]);
        let (sign, log_abs) = lu_log_det(&m);
        assert_eq!(sign, -1.0);
        assert!((log_abs - 10.0f64.ln()).abs() < 1e-14);

        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(lu_log_det(&singular).0, 0.0);
    }

    #[test]
    fn lu_log_det_agrees_with_nalgebra_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
            let det = m.determinant();
            let (sign, log_abs) = lu_log_det(&m);
            assert!((sign * log_abs.exp() - det).abs() < 1e-12 * det.abs().max(1.0));
        }
    }

    #[test]
    fn cholesky_log_det_and_failing_minor() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let log_det = cholesky_log_det(&m).unwrap();
        assert!((log_det - 8.0f64.ln()).abs() < 1e-14);

        // Indefinite: the second leading minor 4·(-1) - 4 < 0 fails.
        let bad = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, -1.0]);
        match cholesky_log_det(&bad) {
            Err(Error::NotPositiveDefinite { minor }) => assert_eq!(minor, 2),
            other => panic!("expected failing minor, got {other:?}"),
        }
    }

    #[test]
    fn power_iteration_on_known_matrices() {
        // Bipartite swap scaled by x: period 2, radius x.
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 0.7, 0.0]);
        let b = power_iteration_nonneg(&m, 1e-12, 10_000, None).unwrap();
        assert!((b.value() - 0.7).abs() < 1e-10);

        // Periodic permutation matrix scaled by x: radius x despite period 4.
        let mut p = DMatrix::zeros(4, 4);
        for i in 0..4 {
            p[(i, (i + 1) % 4)] = 0.4;
        }
        let b = power_iteration_nonneg(&p, 1e-12, 10_000, None).unwrap();
        assert!((b.value() - 0.4).abs() < 1e-10);

        // Positive 2×2 with known Perron root (1+√6)/... : [[1,2],[3,1]] has
        // eigenvalues 1 ± √6; radius 1 + √6.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        let b = power_iteration_nonneg(&m, 1e-12, 10_000, None).unwrap();
        assert!((b.value() - (1.0 + 6.0f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_early_stop_brackets_threshold() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.2, 0.0]);
        let b = power_iteration_nonneg(&m, 1e-12, 10_000, Some(1.0)).unwrap();
        assert!(b.upper < 1.0);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-9);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
