//! Dense complex eigenvalue solver used as an independent cross-check.
//!
//! Householder reduction to upper Hessenberg form followed by the shifted QR
//! iteration with Wilkinson shifts and deflation. Complex arithmetic keeps
//! every 1×1 block deflatable, so no real-Schur 2×2 handling is needed. The
//! matrices checked this way are small (torus Fourier blocks are 2d×2d), so
//! the explicit O(n²)-per-sweep QR step is plenty.

use nalgebra::DMatrix;
use num_complex::Complex;

type C = Complex<f64>;

const EIG_EPS: f64 = 1e-14;
const MAX_SWEEPS_PER_EIGENVALUE: usize = 64;

/// All eigenvalues of a square complex matrix, in no particular order.
pub fn complex_eigenvalues(a: &DMatrix<C>) -> Vec<C> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigenvalues need a square matrix");
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let mut h = a.clone();
    hessenberg_in_place(&mut h);
    qr_eigenvalues(h)
}

/// Householder reduction to upper Hessenberg form (in place, similarity).
fn hessenberg_in_place(h: &mut DMatrix<C>) {
    let n = h.nrows();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k below the subdiagonal.
        let mut norm2 = 0.0f64;
        for i in k + 1..n {
            norm2 += h[(i, k)].norm_sqr();
        }
        let norm = norm2.sqrt();
        if norm <= EIG_EPS {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C::new(1.0, 0.0) };
        let alpha = -phase * norm;
        // v = x - alpha e1, normalized.
        let mut v: Vec<C> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm <= EIG_EPS {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // H ← (I - 2vv*) H : rows k+1..n.
        for j in k..n {
            let mut dot = C::new(0.0, 0.0);
            for i in k + 1..n {
                dot += v[i - k - 1].conj() * h[(i, j)];
            }
            for i in k + 1..n {
                let upd = 2.0 * v[i - k - 1] * dot;
                h[(i, j)] -= upd;
            }
        }
        // H ← H (I - 2vv*) : columns k+1..n.
        for i in 0..n {
            let mut dot = C::new(0.0, 0.0);
            for j in k + 1..n {
                dot += h[(i, j)] * v[j - k - 1];
            }
            for j in k + 1..n {
                let upd = 2.0 * dot * v[j - k - 1].conj();
                h[(i, j)] -= upd;
            }
        }
        // Zero out the annihilated entries explicitly.
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = C::new(0.0, 0.0);
        }
    }
}

fn subdiag_negligible(h: &DMatrix<C>, i: usize) -> bool {
    let scale = h[(i - 1, i - 1)].norm() + h[(i, i)].norm();
    h[(i, i - 1)].norm() <= EIG_EPS * scale.max(1e-300)
}

/// Wilkinson shift: the eigenvalue of the trailing 2×2 closest to its
/// bottom-right entry.
fn wilkinson_shift(h: &DMatrix<C>, hi: usize) -> C {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let l1 = (tr + disc) / 2.0;
    let l2 = (tr - disc) / 2.0;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR step on the active window [lo, hi].
fn qr_step(h: &mut DMatrix<C>, lo: usize, hi: usize, sigma: C) {
    for i in lo..=hi {
        h[(i, i)] -= sigma;
    }
    // QR by Givens rotations on the Hessenberg band; store (c, s).
    let mut rotations = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let a = h[(k, k)];
        let b = h[(k + 1, k)];
        let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (c, s) = if r <= EIG_EPS { (C::new(1.0, 0.0), C::new(0.0, 0.0)) } else { (a / r, b / r) };
        rotations.push((c, s));
        // Apply G* from the left to rows k, k+1 (columns k..=hi).
        for j in k..=hi {
            let x = h[(k, j)];
            let y = h[(k + 1, j)];
            h[(k, j)] = c.conj() * x + s.conj() * y;
            h[(k + 1, j)] = -s * x + c * y;
        }
        h[(k + 1, k)] = C::new(0.0, 0.0);
    }
    // Multiply R by the accumulated rotations from the right: columns k, k+1.
    for (k, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + k;
        for i in lo..=(k + 1).min(hi) {
            let x = h[(i, k)];
            let y = h[(i, k + 1)];
            h[(i, k)] = x * c + y * s;
            h[(i, k + 1)] = -x * s.conj() + y * c.conj();
        }
    }
    for i in lo..=hi {
        h[(i, i)] += sigma;
    }
}

fn qr_eigenvalues(mut h: DMatrix<C>) -> Vec<C> {
    let n = h.nrows();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    loop {
        // Deflate converged 1×1 blocks at the bottom.
        while hi > 0 && subdiag_negligible(&h, hi) {
            eigs.push(h[(hi, hi)]);
            hi -= 1;
            sweeps = 0;
        }
        if hi == 0 {
            eigs.push(h[(0, 0)]);
            break;
        }
        // Active window: walk up until a negligible subdiagonal splits it.
        let mut lo = hi;
        while lo > 0 && !subdiag_negligible(&h, lo) {
            lo -= 1;
        }
        let sigma = if sweeps > 0 && sweeps % 16 == 0 {
            // Exceptional shift to break rare limit cycles.
            C::new(h[(hi, hi - 1)].norm() + h[(hi - 1, hi - 2.min(hi - 1))].norm(), 0.0)
                + h[(hi, hi)]
        } else {
            wilkinson_shift(&h, hi)
        };
        qr_step(&mut h, lo, hi, sigma);
        sweeps += 1;
        assert!(
            sweeps <= MAX_SWEEPS_PER_EIGENVALUE * n,
            "QR iteration failed to converge"
        );
    }
    eigs
}

/// Largest pairing distance between two equally sized multisets of complex
/// numbers under greedy nearest-neighbor matching (largest moduli first).
/// Zero (up to round-off) certifies the multisets agree.
pub fn multiset_distance(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len(), "multisets must have equal size");
    let mut a: Vec<C> = a.to_vec();
    a.sort_by(|p, q| q.norm().partial_cmp(&p.norm()).unwrap());
    let mut rest: Vec<C> = b.to_vec();
    let mut worst = 0.0f64;
    for z in a {
        let (j, d) = rest
            .iter()
            .enumerate()
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
            .expect("non-empty");
        worst = worst.max(d);
        rest.swap_remove(j);
    }
    worst
}
