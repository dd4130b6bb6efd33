//! Small statistics toolkit: sample summaries, ordinary least squares on one
//! regressor, and chi-square tests (goodness of fit and independence) with
//! deterministic low-count cell merging.

use crate::error::{Error, Result};
use crate::linalg::pairwise_sum;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

/// Sample mean and its standard error s/√n (population estimate with the
/// n−1 divisor). Returns (mean, 0) for a single sample.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    assert!(!samples.is_empty(), "mean of an empty sample");
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    if samples.len() == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = samples.iter().map(|&v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Ordinary least squares fit y ≈ slope·x + intercept.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, 1 − SS_res/SS_tot.
    pub r_squared: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> FitResult {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    assert!(sxx > 0.0, "regressor is constant");
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    FitResult { slope, intercept, r_squared }
}

/// Chi-square test outcome.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_pvalue(statistic: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive dof");
    dist.sf(statistic)
}

/// Repeatedly merges the two cells with the smallest expected counts until
/// every expected count reaches `min_expected` or only two cells remain.
/// Categories are unordered, so pairing the two smallest is canonical.
pub fn merge_low_expected(
    observed: &[u64],
    expected: &[f64],
    min_expected: f64,
) -> (Vec<u64>, Vec<f64>) {
    assert_eq!(observed.len(), expected.len());
    let mut obs: Vec<u64> = observed.to_vec();
    let mut exp: Vec<f64> = expected.to_vec();
    loop {
        if exp.len() <= 2 {
            break;
        }
        let (mut i_min, mut i_next) = (0usize, 1usize);
        if exp[i_next] < exp[i_min] {
            std::mem::swap(&mut i_min, &mut i_next);
        }
        for k in 2..exp.len() {
            if exp[k] < exp[i_min] {
                i_next = i_min;
                i_min = k;
            } else if exp[k] < exp[i_next] {
                i_next = k;
            }
        }
        if exp[i_min] >= min_expected {
            break;
        }
        let (lo, hi) = (i_min.min(i_next), i_min.max(i_next));
        obs[lo] += obs[hi];
        exp[lo] += exp[hi];
        obs.remove(hi);
        exp.remove(hi);
    }
    (obs, exp)
}

/// Goodness-of-fit chi-square against fully specified expected counts.
/// Degrees of freedom are cells − 1 − `fitted_params`.
pub fn chi_square_gof(observed: &[u64], expected: &[f64], fitted_params: usize) -> Result<ChiSquare> {
    assert_eq!(observed.len(), expected.len());
    if observed.len() < 2 {
        return Err(Error::InsufficientSamples {
            detail: format!("{} cells after merging", observed.len()),
        });
    }
    if observed.len() < fitted_params + 2 {
        return Err(Error::InsufficientSamples {
            detail: format!(
                "{} cells cannot support {} fitted parameters",
                observed.len(),
                fitted_params
            ),
        });
    }
    let mut statistic = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            return Err(Error::InsufficientSamples {
                detail: "zero expected count in a retained cell".into(),
            });
        }
        let d = o as f64 - e;
        statistic += d * d / e;
    }
    let dof = observed.len() - 1 - fitted_params;
    Ok(ChiSquare { statistic, dof, p_value: chi_square_pvalue(statistic, dof) })
}

/// Chi-square test of independence on a two-way contingency table.
/// All-zero rows and columns are dropped; remaining expected counts must be
/// positive. Degrees of freedom are (rows − 1)(cols − 1).
pub fn contingency_test(table: &[Vec<u64>]) -> Result<ChiSquare> {
    let rows: Vec<Vec<u64>> = table
        .iter()
        .filter(|r| r.iter().any(|&c| c > 0))
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::InsufficientSamples { detail: "empty contingency table".into() });
    }
    let n_cols = rows[0].len();
    assert!(rows.iter().all(|r| r.len() == n_cols), "ragged contingency table");
    let keep_cols: Vec<usize> = (0..n_cols)
        .filter(|&j| rows.iter().any(|r| r[j] > 0))
        .collect();
    if rows.len() < 2 || keep_cols.len() < 2 {
        return Err(Error::InsufficientSamples {
            detail: format!(
                "contingency table is {}×{} after dropping empty lines",
                rows.len(),
                keep_cols.len()
            ),
        });
    }
    let row_sums: Vec<f64> = rows
        .iter()
        .map(|r| keep_cols.iter().map(|&j| r[j] as f64).sum())
        .collect();
    let col_sums: Vec<f64> = keep_cols
        .iter()
        .map(|&j| rows.iter().map(|r| r[j] as f64).sum())
        .collect();
    let total: f64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    for (r, row) in rows.iter().enumerate() {
        for (c, &j) in keep_cols.iter().enumerate() {
            let e = row_sums[r] * col_sums[c] / total;
            let d = row[j] as f64 - e;
            statistic += d * d / e;
        }
    }
    let dof = (rows.len() - 1) * (keep_cols.len() - 1);
    Ok(ChiSquare { statistic, dof, p_value: chi_square_pvalue(statistic, dof) })
}

fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Two-sided Fisher exact test for a 2×2 table [[a, b], [c, d]]: the
/// probability, under independence with the observed margins fixed, of any
/// table no more likely than the observed one. Exact at any sparsity, unlike
/// the chi-square approximation. Degenerate margins return 1.
///
/// Hypergeometric probabilities are assembled in log space, so tables with
/// totals far beyond the range of floating-point binomial coefficients are
/// handled without overflow.
pub fn fisher_exact_2x2(table: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = table;
    let row1 = a + b;
    let col1 = a + c;
    let n = a + b + c + d;
    if n == 0 || row1 == 0 || row1 == n || col1 == 0 || col1 == n {
        return 1.0;
    }
    let ln_denom = ln_choose(n, row1);
    let ln_pmf =
        |k: u64| -> f64 { ln_choose(col1, k) + ln_choose(n - col1, row1 - k) - ln_denom };
    let observed = ln_pmf(a);
    let lo = row1.saturating_sub(n - col1);
    let hi = row1.min(col1);
    let mut p = 0.0;
    for k in lo..=hi {
        let lk = ln_pmf(k);
        if lk <= observed + 1e-7 {
            p += lk.exp();
        }
    }
    p.min(1.0)
}
