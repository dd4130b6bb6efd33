//! Exact loop-soup quantities on the d-dimensional discrete torus.
//!
//! Translation invariance block-diagonalizes the transfer operator in the
//! Fourier basis: one 2d × 2d block per lattice mode p ∈ {0,…,n−1}^d, with
//! entries x_j·e^(±2πi p_j/n). The determinant of Id − Λ factors over modes,
//! each block determinant has a closed form, and the log-partition function
//! becomes an n^d-term sum that scales to tori far beyond dense storage.
//! Sending n → ∞ turns the mode average into an integral over [0, 2π]^d,
//! which yields the free energy density per edge and its derivatives near
//! the critical weight.

use crate::error::{Error, Result};
use crate::graph::TorusSpec;
use crate::linalg::pairwise_sum;
use crate::quad::{grid_range, refine_periodic_mean, QuadratureResult};
use crate::stats::{linear_fit, FitResult};
use nalgebra::DMatrix;
use num_complex::Complex;
use std::f64::consts::TAU;

/// Homogeneous weights are subcritical iff Σ_i x_i/(1+x_i) stays below this.
pub const WEIGHT_CONDITION_BOUND: f64 = 0.5;

/// Modes summed exactly before the closed-form route refuses.
pub const MODE_CAP: u128 = 100_000_000;

/// Critical uniform weight 1/(2d−1) of the d-dimensional torus.
pub fn critical_weight(d: usize) -> f64 {
    assert!(d >= 1);
    1.0 / (2 * d - 1) as f64
}

/// Σ_i x_i/(1+x_i), the quantity the subcriticality condition bounds.
pub fn weight_condition_sum(weights: &[f64]) -> f64 {
    weights.iter().map(|x| x / (1.0 + x)).sum()
}

/// Checks 0 < x_i < 1 per axis and Σ_i x_i/(1+x_i) < 1/2 (strict).
pub fn check_weight_condition(weights: &[f64]) -> Result<()> {
    for &x in weights {
        if !(x > 0.0 && x < 1.0) || !x.is_finite() {
            return Err(Error::WeightOutOfRange {
                x,
                requirement: "each axis weight must lie in (0, 1)",
            });
        }
    }
    let sum = weight_condition_sum(weights);
    if sum >= WEIGHT_CONDITION_BOUND {
        return Err(Error::WeightCondition { sum });
    }
    Ok(())
}

/// The 2d × 2d Fourier block of the transfer operator at mode `p`.
///
/// Directions are indexed 2j (+axis j) and 2j+1 (−axis j); entry (t, u) is
/// x_{axis(t)}·e^(i·σ_t·2π p_{axis(t)}/n) unless u reverses t, mirroring the
/// no-backtracking rule of the full operator.
pub fn fourier_block(spec: &TorusSpec, p: &[usize]) -> DMatrix<Complex<f64>> {
    assert_eq!(p.len(), spec.d, "mode must have one index per axis");
    let m = 2 * spec.d;
    let mut out = DMatrix::zeros(m, m);
    for t in 0..m {
        let axis = t / 2;
        let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
        let theta = sign * TAU * (p[axis] % spec.n) as f64 / spec.n as f64;
        let w = Complex::from_polar(spec.weights[axis], theta);
        for u in 0..m {
            if u != (t ^ 1) {
                out[(t, u)] = w;
            }
        }
    }
    out
}

/// Closed form of det(Id − Λ̂(p)):
/// ∏_j (1−x_j²) · [1 + Σ_j 2x_j(x_j − cos(2π p_j/n))/(1−x_j²)].
pub fn block_det(spec: &TorusSpec, p: &[usize]) -> f64 {
    assert_eq!(p.len(), spec.d, "mode must have one index per axis");
    let mut bracket = 1.0;
    let mut prod = 1.0;
    for (j, &x) in spec.weights.iter().enumerate() {
        assert!(x != 1.0, "weight 1 makes the closed form singular");
        let c = (TAU * (p[j] % spec.n) as f64 / spec.n as f64).cos();
        bracket += 2.0 * x * (x - c) / (1.0 - x * x);
        prod *= 1.0 - x * x;
    }
    bracket * prod
}

/// Eigenvalues of the Fourier block for a homogeneous torus: ±x with
/// multiplicity d−1 each, plus the pair x(2d−1)/(a ± √(a²−2d+1)) where
/// a = Σ_j cos(2π p_j/n).
pub fn block_spectrum(spec: &TorusSpec, p: &[usize]) -> Result<Vec<Complex<f64>>> {
    assert_eq!(p.len(), spec.d, "mode must have one index per axis");
    let x = spec.weights[0];
    if spec.weights.iter().any(|&w| w != x) {
        return Err(Error::Unsupported(
            "closed-form block spectrum requires equal axis weights",
        ));
    }
    let d = spec.d;
    let a: f64 = p
        .iter()
        .map(|&pj| (TAU * (pj % spec.n) as f64 / spec.n as f64).cos())
        .sum();
    let mut eigs = Vec::with_capacity(2 * d);
    for _ in 0..d - 1 {
        eigs.push(Complex::new(x, 0.0));
        eigs.push(Complex::new(-x, 0.0));
    }
    let s = Complex::new(a * a - (2 * d - 1) as f64, 0.0).sqrt();
    let top = Complex::new(x * (2 * d - 1) as f64, 0.0);
    eigs.push(top / (Complex::new(a, 0.0) + s));
    eigs.push(top / (Complex::new(a, 0.0) - s));
    Ok(eigs)
}

fn mode_count(spec: &TorusSpec) -> Result<usize> {
    let total = (spec.n as u128)
        .checked_pow(spec.d as u32)
        .filter(|&t| t <= MODE_CAP)
        .ok_or(Error::TooLarge { n: usize::MAX, cap: MODE_CAP as usize })?;
    if total > MODE_CAP {
        return Err(Error::TooLarge { n: total as usize, cap: MODE_CAP as usize });
    }
    Ok(total as usize)
}

/// log Z on the torus via the mode-factorized determinant,
/// −½ Σ_p log det(Id − Λ̂(p)). Requires the strict weight condition.
pub fn torus_log_partition(spec: &TorusSpec) -> Result<f64> {
    spec.validate()?;
    check_weight_condition(&spec.weights)?;
    let total = mode_count(spec)?;
    let d = spec.d;
    let n = spec.n;
    let cos_table: Vec<f64> = (0..n).map(|k| (TAU * k as f64 / n as f64).cos()).collect();
    let b: Vec<f64> = spec.weights.iter().map(|&x| 2.0 * x / (1.0 - x * x)).collect();
    let c0: f64 = 1.0 + b.iter().zip(&spec.weights).map(|(bj, xj)| bj * xj).sum::<f64>();
    let log_prod: f64 = spec.weights.iter().map(|&x| (1.0 - x * x).ln()).sum();

    // Stream modes in lexicographic order, pairwise-summing fixed-size chunks
    // so huge tori do not materialize an n^d-length buffer.
    const CHUNK: usize = 1 << 14;
    let mut digits = vec![0usize; d];
    let mut chunk = Vec::with_capacity(CHUNK);
    let mut partials = Vec::new();
    for _ in 0..total {
        let bracket = c0
            - b.iter()
                .zip(&digits)
                .map(|(bj, &pj)| bj * cos_table[pj])
                .sum::<f64>();
        debug_assert!(bracket > 0.0, "subcritical block determinant must be positive");
        chunk.push(bracket.ln() + log_prod);
        if chunk.len() == CHUNK {
            partials.push(pairwise_sum(&chunk));
            chunk.clear();
        }
        for j in (0..d).rev() {
            digits[j] += 1;
            if digits[j] == n {
                digits[j] = 0;
            } else {
                break;
            }
        }
    }
    if !chunk.is_empty() {
        partials.push(pairwise_sum(&chunk));
    }
    Ok(-0.5 * pairwise_sum(&partials))
}

/// Free energy density per edge of the finite torus, −log Z/(d·n^d).
pub fn free_energy_finite(spec: &TorusSpec) -> Result<f64> {
    let log_z = torus_log_partition(spec)?;
    let total = mode_count(spec)? as f64;
    Ok(-log_z / (spec.d as f64 * total))
}

/// Infinite-volume free energy density per edge:
/// 2d·f = Σ_j log(1−x_j²) + (2π)^{−d} ∫ log[C − Σ_j b_j cos α_j] dα,
/// with b_j = 2x_j/(1−x_j²) and C = 1 + Σ_j b_j x_j. Refined by grid
/// doubling until consecutive levels agree within `tol`.
pub fn free_energy_limit(weights: &[f64], tol: f64) -> Result<QuadratureResult> {
    check_weight_condition(weights)?;
    let d = weights.len();
    let b: Vec<f64> = weights.iter().map(|&x| 2.0 * x / (1.0 - x * x)).collect();
    let c0: f64 = 1.0 + b.iter().zip(weights).map(|(bj, xj)| bj * xj).sum::<f64>();
    let log_prod: f64 = weights.iter().map(|&x| (1.0 - x * x).ln()).sum();
    let (m0, cap) = grid_range(d);
    let q = refine_periodic_mean(&b, &|s| (c0 - s).ln(), tol * 2.0 * d as f64, m0, cap);
    let scale = 1.0 / (2.0 * d as f64);
    Ok(QuadratureResult {
        value: (log_prod + q.value) * scale,
        error_estimate: q.error_estimate * scale,
        converged: q.converged,
        grid: q.grid,
    })
}

/// Expected occupation of a fixed edge on the finite homogeneous torus:
/// (1/(d n^d)) Σ_p (1 − x a_p)/(1 + (2d−1)x² − 2x a_p)
///   + (d−1)/(d(1−x²)) − 1,   a_p = Σ_j cos(2π p_j/n).
pub fn one_point_torus(d: usize, n: usize, x: f64) -> Result<f64> {
    let spec = TorusSpec::homogeneous(d, n, x)?;
    check_weight_condition(&spec.weights)?;
    let total = mode_count(&spec)?;
    let r = (2 * d - 1) as f64 * x * x;
    let cos_table: Vec<f64> = (0..n).map(|k| (TAU * k as f64 / n as f64).cos()).collect();
    const CHUNK: usize = 1 << 14;
    let mut digits = vec![0usize; d];
    let mut chunk = Vec::with_capacity(CHUNK);
    let mut partials = Vec::new();
    for _ in 0..total {
        let a: f64 = digits.iter().map(|&pj| cos_table[pj]).sum();
        chunk.push((1.0 - x * a) / (1.0 + r - 2.0 * x * a));
        if chunk.len() == CHUNK {
            partials.push(pairwise_sum(&chunk));
            chunk.clear();
        }
        for j in (0..d).rev() {
            digits[j] += 1;
            if digits[j] == n {
                digits[j] = 0;
            } else {
                break;
            }
        }
    }
    if !chunk.is_empty() {
        partials.push(pairwise_sum(&chunk));
    }
    let mode_mean = pairwise_sum(&partials) / total as f64;
    Ok(mode_mean / d as f64 + (d - 1) as f64 / (d as f64 * (1.0 - x * x)) - 1.0)
}

/// Infinite-volume limit of [`one_point_torus`]: the mode sum becomes an
/// integral over [0, 2π]^d, refined by grid doubling.
pub fn one_point_limit(d: usize, x: f64, tol: f64) -> Result<QuadratureResult> {
    check_weight_condition(&vec![x; d])?;
    let r = (2 * d - 1) as f64 * x * x;
    let b = vec![x; d];
    let (m0, cap) = grid_range(d);
    let q = refine_periodic_mean(
        &b,
        &|s| (1.0 - s) / (1.0 + r - 2.0 * s),
        tol * d as f64,
        m0,
        cap,
    );
    Ok(QuadratureResult {
        value: q.value / d as f64 + (d - 1) as f64 / (d as f64 * (1.0 - x * x)) - 1.0,
        error_estimate: q.error_estimate / d as f64,
        converged: q.converged,
        grid: q.grid,
    })
}

/// Smallest gap to the critical weight at which finite differences of the
/// quadrature-based free energy are still trustworthy in dimension `d`.
pub fn min_scan_gap(d: usize) -> f64 {
    match d {
        2 => 1e-3,
        3 => 3e-4,
        4 => 5e-3,
        _ => 1e-2,
    }
}

/// Quadrature tolerance used per evaluation inside [`singular_scan`].
pub const SCAN_QUAD_TOL: f64 = 1e-10;

/// Which regression a scan runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FitKind {
    /// Even d: the order-(d/2) derivative itself grows like a·log(gap) + b;
    /// the fit is linear in log(gap) (slope a, intercept b).
    DerivativeVsLogGap,
    /// Odd d: the order-((d+1)/2) derivative diverges as an inverse power of
    /// the gap on top of an analytic background,
    /// derivative ≈ offset + amplitude·gapᵉˣᵖ. The fit's `slope` carries the
    /// exponent and `intercept` the amplitude; the background is reported
    /// separately. A plain log-log slope would be biased toward steeper
    /// exponents at reachable gaps because the background never becomes
    /// negligible there.
    OffsetPowerVsGap,
}

/// One scan point: free energy, finite-difference derivative, and the worst
/// quadrature diagnostics among the evaluations that produced it.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanPoint {
    pub x: f64,
    /// Distance to the critical weight.
    pub gap: f64,
    /// Finite-difference step, gap/4.
    pub step: f64,
    pub free_energy: f64,
    pub derivative: f64,
    pub quad_error: f64,
    pub quad_converged: bool,
}

/// Finite-difference scan of the free energy toward the critical weight.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SingularScan {
    pub d: usize,
    pub critical_x: f64,
    pub derivative_order: usize,
    pub kind: FitKind,
    pub points: Vec<ScanPoint>,
    /// Fitted analytic background, present for [`FitKind::OffsetPowerVsGap`].
    pub offset: Option<f64>,
    pub fit: FitResult,
}

/// Least squares of y ≈ offset + amplitude·gapᵏ: the model is linear in
/// (offset, amplitude) at fixed k, so k is scanned on a fine grid and the
/// best inner fit wins. Returns the offset and a [`FitResult`] holding the
/// exponent in `slope`, the amplitude in `intercept`, and the R² of the full
/// three-parameter model.
fn offset_power_fit(gaps: &[f64], ys: &[f64]) -> (f64, FitResult) {
    let mut best: Option<(f64, FitResult)> = None;
    for i in 0..=1450u32 {
        let k = -1.5 + f64::from(i) * 1e-3;
        let basis: Vec<f64> = gaps.iter().map(|g| g.powf(k)).collect();
        let inner = linear_fit(&basis, ys);
        if best.as_ref().is_none_or(|(_, cur)| inner.r_squared > cur.r_squared) {
            best = Some((
                inner.intercept,
                FitResult { slope: k, intercept: inner.slope, r_squared: inner.r_squared },
            ));
        }
    }
    best.expect("non-empty exponent grid")
}

/// Probes how the free energy density degenerates as the uniform weight
/// approaches 1/(2d−1): central differences of order d/2 (even d) or
/// (d+1)/2 (odd d) at step gap/4, then a least-squares fit of the expected
/// singular shape. Scan points must keep at least [`min_scan_gap`] away
/// from the critical weight.
pub fn singular_scan(d: usize, xs: &[f64], quad_tol: f64) -> Result<SingularScan> {
    if d < 2 {
        return Err(Error::Unsupported("scan needs dimension ≥ 2"));
    }
    let order = if d % 2 == 0 { d / 2 } else { (d + 1) / 2 };
    if order > 2 {
        return Err(Error::Unsupported(
            "finite differences above order 2 are not implemented; use d ≤ 4",
        ));
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientSamples {
            detail: "scan needs at least two points".into(),
        });
    }
    let xc = critical_weight(d);
    let required = min_scan_gap(d);
    let mut points = Vec::with_capacity(xs.len());
    for &x in xs {
        if !(x > 0.0) {
            return Err(Error::WeightOutOfRange {
                x,
                requirement: "scan points must be positive",
            });
        }
        let gap = xc - x;
        // The tiny relative slack absorbs the rounding of xc − gap round trips.
        if gap < required * (1.0 - 1e-12) {
            return Err(Error::GridTooClose { min_gap: gap, required });
        }
        let h = gap / 4.0;
        let f = |y: f64| free_energy_limit(&vec![y; d], quad_tol);
        let mid = f(x)?;
        let lo = f(x - h)?;
        let hi = f(x + h)?;
        let derivative = match order {
            1 => (hi.value - lo.value) / (2.0 * h),
            2 => (hi.value - 2.0 * mid.value + lo.value) / (h * h),
            _ => unreachable!(),
        };
        points.push(ScanPoint {
            x,
            gap,
            step: h,
            free_energy: mid.value,
            derivative,
            quad_error: mid.error_estimate.max(lo.error_estimate).max(hi.error_estimate),
            quad_converged: mid.converged && lo.converged && hi.converged,
        });
    }
    let ys: Vec<f64> = points.iter().map(|p| p.derivative).collect();
    let (kind, offset, fit) = if d % 2 == 0 {
        let ln_gaps: Vec<f64> = points.iter().map(|p| p.gap.ln()).collect();
        (FitKind::DerivativeVsLogGap, None, linear_fit(&ln_gaps, &ys))
    } else {
        let gaps: Vec<f64> = points.iter().map(|p| p.gap).collect();
        let (a, fit) = offset_power_fit(&gaps, &ys);
        (FitKind::OffsetPowerVsGap, Some(a), fit)
    };
    Ok(SingularScan { d, critical_x: xc, derivative_order: order, kind, points, offset, fit })
}
