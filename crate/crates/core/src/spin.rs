//! Spins on the dual vertices of a 2-dimensional torus patch: sampled loops
//! are unrolled into the plane, each dual site carries the parity of the
//! windings around it, and an empirical Gram-matrix harness checks that
//! reflections across a dual line keep the induced field positive
//! semidefinite while a plain translation does not.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, TorusSpec};
use crate::loops::UnrootedLoop;
use crate::sampler::{SoupSample, SoupSampler};

fn require_planar(spec: &TorusSpec) -> Result<()> {
    if spec.d != 2 {
        return Err(Error::Unsupported("spins need a 2-dimensional torus"));
    }
    Ok(())
}

/// Tail vertex of a directed edge, from the torus indexing alone.
fn tail_vertex(spec: &TorusSpec, a: DirectedEdge) -> usize {
    let e = a >> 1;
    let v = e / spec.d;
    if a & 1 == 0 {
        v
    } else {
        let axis = e % spec.d;
        let mut c = spec.vertex_coords(v);
        c[axis] = (c[axis] + 1) % spec.n;
        spec.vertex_id(&c)
    }
}

/// Unrolls a closed walk on the torus into the plane: the start is anchored
/// at the torus coordinates of its first vertex, every step moves one unit
/// along its axis, and wrap-arounds keep extending beyond the fundamental
/// domain. Walks with nonzero net displacement (those that wrap the torus)
/// have no closed planar image and are rejected.
pub fn planar_lift(spec: &TorusSpec, steps: &[DirectedEdge]) -> Result<Vec<(i64, i64)>> {
    require_planar(spec)?;
    assert!(!steps.is_empty(), "cannot lift an empty walk");
    let n_edges = spec.d * spec.n_vertices();
    let start = spec.vertex_coords(tail_vertex(spec, steps[0]));
    let mut pos = (start[0] as i64, start[1] as i64);
    let mut points = Vec::with_capacity(steps.len() + 1);
    points.push(pos);
    for &a in steps {
        let e = a >> 1;
        assert!(e < n_edges, "edge id outside this torus");
        let axis = e % spec.d;
        let delta = if a & 1 == 0 { 1 } else { -1 };
        if axis == 0 {
            pos.0 += delta;
        } else {
            pos.1 += delta;
        }
        points.push(pos);
    }
    if points[0] != pos {
        return Err(Error::WrappingLoop);
    }
    Ok(points)
}

/// Crossings of a lifted closed curve over the rightward ray from the dual
/// vertex (i+½, j+½): `signed` is the winding number of the curve around
/// that point, `total` counts crossings without orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RayCrossings {
    pub signed: i64,
    pub total: u64,
}

/// Counts the crossings of the (closed) lifted curve over the ray
/// {first = i+½, second ≥ j+½}. Only unit steps along the first axis can
/// cross; a step at level {i, i+1} with second coordinate ≥ j+1 does.
pub fn ray_crossings_of_lift(points: &[(i64, i64)], dual: (i64, i64)) -> RayCrossings {
    let (di, dj) = dual;
    let mut signed = 0i64;
    let mut total = 0u64;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.0 != b.0 && a.0.min(b.0) == di && a.1 >= dj + 1 {
            total += 1;
            signed += if b.0 > a.0 { 1 } else { -1 };
        }
    }
    debug_assert_eq!(
        signed.rem_euclid(2) as u64,
        total % 2,
        "every crossing contributes ±1"
    );
    RayCrossings { signed, total }
}

/// Winding number of a non-wrapping loop around the dual vertex (i+½, j+½)
/// of the unrolled fundamental domain.
pub fn winding_number(spec: &TorusSpec, lp: &UnrootedLoop, dual: (i64, i64)) -> Result<i64> {
    Ok(ray_crossings_of_lift(&planar_lift(spec, lp.steps())?, dual).signed)
}

/// Parity (0 or 1) of the loop's crossings of the rightward ray from the
/// dual vertex; equals the winding number mod 2 and does not depend on the
/// loop's orientation.
pub fn winding_parity(spec: &TorusSpec, lp: &UnrootedLoop, dual: (i64, i64)) -> Result<u8> {
    let c = ray_crossings_of_lift(&planar_lift(spec, lp.steps())?, dual);
    Ok((c.total % 2) as u8)
}

/// The ±1 field on the dual vertices of the fundamental domain induced by a
/// loop sample: each site holds (−1)^(number of odd-winding loop traversals
/// around it). Wrapping loops carry no planar winding; they are left out and
/// counted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpinField {
    /// Patch side length; dual sites are (i, j) with 0 ≤ i, j < n.
    pub n: usize,
    /// Row-major spins, +1 or −1.
    pub spins: Vec<i8>,
    /// Multiplicity of wrapping loops excluded from the field.
    pub excluded_items: u64,
    /// Total sampled multiplicity, excluded items included.
    pub total_items: u64,
}

impl SpinField {
    pub fn spin(&self, i: usize, j: usize) -> i8 {
        self.spins[i * self.n + j]
    }
}

/// Computes the dual spin field of a loop-only sample on the given torus.
pub fn spin_field(spec: &TorusSpec, sample: &SoupSample) -> Result<SpinField> {
    if !sample.arcs.is_empty() {
        return Err(Error::Unsupported("spin field needs a loop-only sample"));
    }
    require_planar(spec)?;
    let n = spec.n;
    let mut parities = vec![0u8; n * n];
    let mut excluded = 0u64;
    let mut total = 0u64;
    for (lp, count) in &sample.loops {
        total += *count as u64;
        let points = match planar_lift(spec, lp.steps()) {
            Ok(p) => p,
            Err(Error::WrappingLoop) => {
                excluded += *count as u64;
                continue;
            }
            Err(e) => return Err(e),
        };
        if count % 2 == 0 {
            continue; // an even number of identical traversals cancels
        }
        for i in 0..n {
            for j in 0..n {
                let c = ray_crossings_of_lift(&points, (i as i64, j as i64));
                parities[i * n + j] ^= (c.total % 2) as u8;
            }
        }
    }
    let spins = parities.iter().map(|&p| 1 - 2 * p as i8).collect();
    Ok(SpinField { n, spins, excluded_items: excluded, total_items: total })
}

/// How a window site is paired with its partner site on the other side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PartnerMap {
    /// Reflection of the first coordinate through the dual row `line` (and
    /// its antipodal row on the torus): (i, j) ↦ (2·line − i, j).
    ReflectRows { line: usize },
    /// Translation by the given dual offset. Not a reflection: the
    /// positivity guarantee does not apply, which the harness exploits as a
    /// negative control.
    Translate { di: i64, dj: i64 },
}

/// Window and pairing of a Gram run.
#[derive(Debug, Clone, Serialize)]
pub struct GramOptions {
    /// Dual sites (i, j) whose spin products generate the function family.
    pub window: Vec<(usize, usize)>,
    pub partner: PartnerMap,
    /// Largest product size; subsets of the window up to this size (the
    /// empty product included) index the Gram matrix.
    pub max_subset: usize,
}

/// Empirical Gram matrix M[A][B] = mean of σ_A · σ'_B over samples, where
/// σ_A is the spin product over the window subset A and σ'_B the product
/// over the partner images of B, with standard errors and the positivity
/// diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct GramReport {
    pub n_samples: u64,
    /// Index sets (into `GramOptions::window`) of the products, in order of
    /// size then lexicographic.
    pub subsets: Vec<Vec<usize>>,
    pub means: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    pub max_se: f64,
    /// max |M[A][B] − M[B][A]| and the same in units of its combined SE.
    pub max_asymmetry: f64,
    pub max_asymmetry_sigmas: f64,
    /// Smallest eigenvalue of (M + Mᵀ)/2.
    pub min_symmetrized_eigenvalue: f64,
    /// Wrapping-loop multiplicity excluded from the spins, and the total.
    pub excluded_items: u64,
    pub total_items: u64,
}

fn partner_site(map: PartnerMap, n: usize, site: (usize, usize)) -> (usize, usize) {
    match map {
        PartnerMap::ReflectRows { line } => (((2 * line + 2 * n) - site.0) % n, site.1),
        PartnerMap::Translate { di, dj } => (
            (site.0 as i64 + di).rem_euclid(n as i64) as usize,
            (site.1 as i64 + dj).rem_euclid(n as i64) as usize,
        ),
    }
}

fn validate_window(options: &GramOptions, n: usize) -> Result<()> {
    if options.window.is_empty() || options.max_subset == 0 {
        return Err(Error::Unsupported("empty window or zero product size"));
    }
    for &(i, j) in &options.window {
        if i >= n || j >= n {
            return Err(Error::Unsupported("window site outside the patch"));
        }
    }
    if let PartnerMap::ReflectRows { line } = options.partner {
        if line >= n {
            return Err(Error::Unsupported("reflection line outside the patch"));
        }
        // Sides of the reflection: rows strictly between the two fixed rows.
        // A window touching a fixed row or straddling both sides is invalid.
        let mut sides = Vec::new();
        for &(i, _) in &options.window {
            if partner_site(options.partner, n, (i, 0)).0 == i {
                return Err(Error::WindowCrossesLine);
            }
            // Distance from the line along increasing rows, in (0, n).
            let dist = (i + n - line) % n;
            sides.push(2 * dist < n);
        }
        if sides.iter().any(|&s| s != sides[0]) {
            return Err(Error::WindowCrossesLine);
        }
    }
    Ok(())
}

/// Streams `reps` soup samples and accumulates the Gram matrix of window
/// spin products against their partner images, reporting symmetry and
/// positive-semidefiniteness diagnostics. The sampler must be built on the
/// torus described by `spec`.
pub fn reflection_gram(
    sampler: &SoupSampler,
    spec: &TorusSpec,
    options: &GramOptions,
    reps: u64,
    seed: u64,
) -> Result<GramReport> {
    require_planar(spec)?;
    assert_eq!(
        sampler.graph().n_vertices(),
        spec.n_vertices(),
        "sampler and torus disagree"
    );
    validate_window(options, spec.n)?;
    if reps < 2 {
        return Err(Error::InsufficientSamples { detail: format!("{reps} reps") });
    }
    let w = options.window.len();
    assert!(w <= 16, "window too large for bitmask products");
    let partner_sites: Vec<(usize, usize)> = options
        .window
        .iter()
        .map(|&s| partner_site(options.partner, spec.n, s))
        .collect();
    let mut masks: Vec<u32> =
        (0u32..1 << w).filter(|m| m.count_ones() as usize <= options.max_subset).collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    let k = masks.len();

    let mut sums = vec![vec![0i64; k]; k];
    let mut excluded = 0u64;
    let mut total = 0u64;
    for stream in 0..reps {
        let sample = sampler.sample(seed, stream)?;
        // Parity bit per window / partner site, packed into masks.
        let mut pw = 0u32;
        let mut pp = 0u32;
        for (lp, count) in &sample.loops {
            total += *count as u64;
            let points = match planar_lift(spec, lp.steps()) {
                Ok(p) => p,
                Err(Error::WrappingLoop) => {
                    excluded += *count as u64;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if count % 2 == 0 {
                continue;
            }
            for (bit, &(i, j)) in options.window.iter().enumerate() {
                let c = ray_crossings_of_lift(&points, (i as i64, j as i64));
                pw ^= ((c.total % 2) as u32) << bit;
            }
            for (bit, &(i, j)) in partner_sites.iter().enumerate() {
                let c = ray_crossings_of_lift(&points, (i as i64, j as i64));
                pp ^= ((c.total % 2) as u32) << bit;
            }
        }
        for (ai, &a) in masks.iter().enumerate() {
            for (bi, &b) in masks.iter().enumerate() {
                let flips = ((pw & a).count_ones() + (pp & b).count_ones()) % 2;
                sums[ai][bi] += 1 - 2 * flips as i64;
            }
        }
    }

    let n_f = reps as f64;
    let means: Vec<Vec<f64>> =
        sums.iter().map(|row| row.iter().map(|&s| s as f64 / n_f).collect()).collect();
    // Products are ±1, so the sample variance is determined by the mean.
    let standard_errors: Vec<Vec<f64>> = means
        .iter()
        .map(|row| {
            row.iter()
                .map(|&m| ((1.0 - m * m).max(0.0) / (n_f - 1.0)).sqrt())
                .collect()
        })
        .collect();
    let max_se = standard_errors.iter().flatten().fold(0.0f64, |a, &b| a.max(b));

    let mut max_asymmetry = 0.0f64;
    let mut max_asymmetry_sigmas = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let gap = (means[i][j] - means[j][i]).abs();
            let se = (standard_errors[i][j].powi(2) + standard_errors[j][i].powi(2)).sqrt();
            max_asymmetry = max_asymmetry.max(gap);
            if gap > 0.0 {
                let sigmas = if se > 0.0 { gap / se } else { f64::INFINITY };
                max_asymmetry_sigmas = max_asymmetry_sigmas.max(sigmas);
            }
        }
    }

    let sym = DMatrix::from_fn(k, k, |i, j| 0.5 * (means[i][j] + means[j][i]));
    let min_symmetrized_eigenvalue = sym
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));

    Ok(GramReport {
        n_samples: reps,
        subsets: masks
            .iter()
            .map(|&m| (0..w).filter(|&b| m >> b & 1 == 1).collect())
            .collect(),
        means,
        standard_errors,
        max_se,
        max_asymmetry,
        max_asymmetry_sigmas,
        min_symmetrized_eigenvalue,
        excluded_items: excluded,
        total_items: total,
    })
}
