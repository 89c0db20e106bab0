//! Projective cones: invariant cone search, positivity after a change of
//! coordinates, Assumption A, dominated splitting and the well-ordered check.
//!
//! In the plane a cone is an arc of the projective line `[0, π)`; in higher
//! dimensions only simplicial cones given by `d` generators are supported.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::enumerate::visit_products;
use crate::linalg::{self, Matrix, NormKind};
use crate::math;
use crate::symbolic::Word;
use crate::zipper::Zipper;
use crate::{Error, Result};

/// Singular values this close (relatively) make a direction unreliable.
pub const CONFORMAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectiveCone {
    /// Directions with angle in `[lo, lo + width]`, taken mod `π`.
    Arc { lo: f64, width: f64 },
    /// Nonnegative combinations of `d` linearly independent generators.
    Simplicial { generators: Vec<Vec<f64>> },
}

impl ProjectiveCone {
    pub fn arc(lo: f64, hi: f64) -> Result<Self> {
        let width = hi - lo;
        if !(width > 0.0 && width < PI) {
            return Err(Error::Parameter(format!("arc [{lo}, {hi}] must have width in (0, π)")));
        }
        Ok(ProjectiveCone::Arc {
            lo: math::proj_angle(lo),
            width,
        })
    }

    /// The closed positive quadrant.
    pub fn positive_quadrant() -> Self {
        ProjectiveCone::Arc {
            lo: 0.0,
            width: FRAC_PI_2,
        }
    }

    pub fn simplicial(generators: Vec<Vec<f64>>) -> Result<Self> {
        let d = generators.len();
        if d < 2 || generators.iter().any(|g| g.len() != d) {
            return Err(Error::Shape("a simplicial cone needs d generators in dimension d".into()));
        }
        let m = generator_matrix(&generators);
        if m.inverse().is_none() {
            return Err(Error::Shape("cone generators are linearly dependent".into()));
        }
        Ok(ProjectiveCone::Simplicial { generators })
    }

    pub fn dim(&self) -> usize {
        match self {
            ProjectiveCone::Arc { .. } => 2,
            ProjectiveCone::Simplicial { generators } => generators.len(),
        }
    }

    /// Angular interval `(lo, hi)` with `hi = lo + width`.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            ProjectiveCone::Arc { lo, width } => Some((*lo, lo + width)),
            _ => None,
        }
    }

    /// Signed angular depth of direction `theta` inside the arc: positive
    /// inside, the distance to the nearer end; negative outside.
    pub fn depth_of(&self, theta: f64) -> f64 {
        match self {
            ProjectiveCone::Arc { lo, width } => {
                let c = lo + width / 2.0;
                let u = unwrap_near(theta, c) - c;
                width / 2.0 - math::abs(u)
            }
            ProjectiveCone::Simplicial { .. } => f64::NAN,
        }
    }

    /// Angular distance from `theta` to the arc; zero inside.
    pub fn distance_to(&self, theta: f64) -> f64 {
        (-self.depth_of(theta)).max(0.0)
    }

    fn sample_directions(&self, step: f64, extra: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        match self {
            ProjectiveCone::Arc { lo, width } => {
                let n = math::ceil(width / step).max(1.0) as usize;
                (0..=n)
                    .map(|k| {
                        let a = lo + width * k as f64 / n as f64;
                        vec![math::cos(a), math::sin(a)]
                    })
                    .collect()
            }
            ProjectiveCone::Simplicial { generators } => {
                let mut out: Vec<Vec<f64>> = generators.clone();
                let d = generators.len();
                for _ in 0..extra {
                    let c: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                    let mut v = vec![0.0; d];
                    for (g, ck) in generators.iter().zip(&c) {
                        for (a, b) in v.iter_mut().zip(g) {
                            *a += ck * b;
                        }
                    }
                    out.push(v);
                }
                out
            }
        }
    }
}

fn generator_matrix(generators: &[Vec<f64>]) -> Matrix {
    let d = generators.len();
    let mut data = vec![0.0; d * d];
    for (c, g) in generators.iter().enumerate() {
        for r in 0..d {
            data[r * d + c] = g[r];
        }
    }
    Matrix::new(d, data).expect("square")
}

/// Representative of `theta` (mod `π`) in `(center − π/2, center + π/2]`.
fn unwrap_near(theta: f64, center: f64) -> f64 {
    let off = math::proj_angle(theta - center + FRAC_PI_2) - FRAC_PI_2;
    center + off
}

fn direction(v: &[f64]) -> f64 {
    math::proj_angle(math::atan2(v[1], v[0]))
}

/// Image of the arc `[lo, lo + width]` under `a`, as `(lo, width)` with `lo`
/// unwrapped near `center`.
fn image_arc(a: &Matrix, lo: f64, width: f64, center: f64) -> (f64, f64) {
    let u = |t: f64| direction(&a.apply(&[math::cos(t), math::sin(t)]));
    let (p, q) = (u(lo), u(lo + width));
    let (start, end) = if a.det() > 0.0 { (p, q) } else { (q, p) };
    let w = if width == 0.0 { 0.0 } else { math::proj_angle(end - start) };
    (unwrap_near(start + w / 2.0, center) - w / 2.0, w)
}

/// Smallest angular clearance between `A_i C` and the ends of `C`; negative
/// when some image leaves the arc.
fn arc_clearance(matrices: &[Matrix], lo: f64, width: f64) -> f64 {
    let c = lo + width / 2.0;
    let mut clearance = f64::INFINITY;
    for a in matrices {
        let (il, iw) = image_arc(a, lo, width, c);
        if iw >= PI - 1e-12 {
            return f64::NEG_INFINITY;
        }
        clearance = clearance.min(il - lo).min(lo + width - (il + iw));
    }
    clearance
}

/// An invariant cone and the clearance by which images stay inside.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeCertificate {
    pub cone: ProjectiveCone,
    pub clearance: f64,
}

/// Searches an arc `C` with `A_i C̄ ⊂ C°` and angular clearance at least
/// `margin`. Starting from `trial` (or the leading eigendirection of `A_0`),
/// the arc is replaced by the hull of itself and its images until it stops
/// growing, then widened until the clearance is met.
pub fn invariant_cone_2d(
    matrices: &[Matrix],
    iterations: usize,
    margin: f64,
    trial: Option<(f64, f64)>,
) -> Result<ConeCertificate> {
    if matrices.iter().any(|m| m.dim() != 2) {
        return Err(Error::Unsupported("invariant cone search needs d = 2".into()));
    }
    if let Some((lo, hi)) = trial {
        let c = arc_clearance(matrices, lo, hi - lo);
        if c >= margin && c > 0.0 {
            return Ok(ConeCertificate {
                cone: ProjectiveCone::arc(lo, hi)?,
                clearance: c,
            });
        }
    }
    let (mut lo, mut width) = match trial {
        Some((a, b)) => (a, b - a),
        None => (leading_direction(&matrices[0]), 0.0),
    };
    let limit = PI - margin;
    let fail = |w: f64| {
        Error::NoInvariantCone(format!(
            "hull of images reached width {w:.6} (limit {limit:.6})"
        ))
    };
    for _ in 0..iterations {
        let c = lo + width / 2.0;
        let (mut nlo, mut nhi) = (lo, lo + width);
        for a in matrices {
            let (il, iw) = image_arc(a, lo, width, c);
            nlo = nlo.min(il);
            nhi = nhi.max(il + iw);
        }
        if nhi - nlo >= limit {
            return Err(fail(nhi - nlo));
        }
        let grown = (lo - nlo) + (nhi - (lo + width));
        lo = nlo;
        width = nhi - nlo;
        if grown <= 1e-14 {
            break;
        }
    }
    let mut pad = 2.0 * margin.max(1e-9);
    while width + 2.0 * pad < limit {
        let (l, w) = (lo - pad, width + 2.0 * pad);
        let c = arc_clearance(matrices, l, w);
        if c >= margin && c > 0.0 {
            return Ok(ConeCertificate {
                cone: ProjectiveCone::Arc {
                    lo: math::proj_angle(l),
                    width: w,
                },
                clearance: c,
            });
        }
        pad *= 2.0;
    }
    Err(fail(width))
}

fn leading_direction(a: &Matrix) -> f64 {
    let (p, q, r, s) = (a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1));
    let tr = p + s;
    let disc = tr * tr / 4.0 - (p * s - q * r);
    if disc < 0.0 {
        return 0.0;
    }
    let l1 = tr / 2.0 + math::sqrt(disc);
    let l2 = tr / 2.0 - math::sqrt(disc);
    let l = if math::abs(l1) >= math::abs(l2) { l1 } else { l2 };
    // eigenvector of [[p,q],[r,s]] for l
    let v = if math::abs(q) + math::abs(l - p) > math::abs(r) + math::abs(l - s) {
        [q, l - p]
    } else {
        [l - s, r]
    };
    if v[0] == 0.0 && v[1] == 0.0 {
        return 0.0;
    }
    direction(&v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityReport {
    pub positive: bool,
    pub min_entry: f64,
    /// `(map, row, column)` of the smallest entry.
    pub location: Option<(usize, usize, usize)>,
}

pub fn check_positivity(matrices: &[Matrix]) -> PositivityReport {
    let mut min_entry = f64::INFINITY;
    let mut location = None;
    for (i, m) in matrices.iter().enumerate() {
        let d = m.dim();
        for (k, &x) in m.as_slice().iter().enumerate() {
            if x < min_entry {
                min_entry = x;
                location = Some((i, k / d, k % d));
            }
        }
    }
    PositivityReport {
        positive: min_entry > 0.0,
        min_entry,
        location,
    }
}

/// Coordinate changes tried by [`conjugation_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transform {
    /// `[[1, ε], [ε, 1]]`.
    Tilde(f64),
    /// `[[1, −δ], [−δ, 1]]`.
    Hat(f64),
    /// Rotation by the given angle.
    Rotation(f64),
}

impl Transform {
    pub fn matrix(&self) -> Matrix {
        match *self {
            Transform::Tilde(e) => Matrix::from_rows([[1.0, e], [e, 1.0]]),
            Transform::Hat(d) => Matrix::from_rows([[1.0, -d], [-d, 1.0]]),
            Transform::Rotation(a) => Matrix::rotation(a),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Transform::Tilde(e) => format!("tilde(eps={e})"),
            Transform::Hat(d) => format!("hat(delta={d})"),
            Transform::Rotation(a) => format!("rotation(angle={a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conjugation {
    pub transform: Transform,
    pub matrix: Matrix,
    /// `D⁻¹ A_i D`.
    pub conjugated: Vec<Matrix>,
    pub min_entry: f64,
    /// Largest `|‖D⁻¹A_iD‖₁ − ‖A_i‖₁|` (entrywise 1-norm) for the two
    /// one-parameter families; `None` for rotations.
    pub norm1_deviation: Option<f64>,
}

/// Grid resolution of the `ε`, `δ` search.
pub const FAMILY_STEPS: usize = 200;

/// Looks for a change of coordinates making every matrix strictly positive:
/// first `D̂_δ`, then `D̃_ε` (both on the grid `k / 200`), then rotations in
/// steps of one degree.
pub fn conjugation_search(matrices: &[Matrix]) -> Result<Conjugation> {
    if matrices.iter().any(|m| m.dim() != 2) {
        return Err(Error::Unsupported("conjugation search needs d = 2".into()));
    }
    let mut best = f64::NEG_INFINITY;
    let mut candidates: Vec<Transform> = Vec::new();
    for k in 1..FAMILY_STEPS {
        candidates.push(Transform::Hat(k as f64 / FAMILY_STEPS as f64));
    }
    for k in 1..FAMILY_STEPS {
        candidates.push(Transform::Tilde(k as f64 / FAMILY_STEPS as f64));
    }
    for k in 1..180 {
        candidates.push(Transform::Rotation(k as f64 * PI / 180.0));
    }
    for tr in candidates {
        let d = tr.matrix();
        let conj = matrices
            .iter()
            .map(|m| m.conjugate(&d))
            .collect::<Result<Vec<_>>>()?;
        let p = check_positivity(&conj);
        best = best.max(p.min_entry);
        if p.positive {
            let norm1_deviation = match tr {
                Transform::Rotation(_) => None,
                _ => Some(
                    matrices
                        .iter()
                        .zip(&conj)
                        .map(|(a, b)| math::abs(a.norm(NormKind::Entrywise1) - b.norm(NormKind::Entrywise1)))
                        .fold(0.0, f64::max),
                ),
            };
            return Ok(Conjugation {
                transform: tr,
                matrix: d,
                conjugated: conj,
                min_entry: p.min_entry,
                norm1_deviation,
            });
        }
    }
    Err(Error::Failed(format!(
        "no transform makes all matrices positive; best minimum entry {best:e}"
    )))
}

/// Pass/fail line of a certificate, serialized as
/// `{condition, pass, margin, witness}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: String,
    pub pass: bool,
    pub margin: f64,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionAReport {
    pub conditions: Vec<ConditionReport>,
}

impl AssumptionAReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

/// Checks the three parts of Assumption A for `cone`: strict invariance
/// with clearance `margin`, `⟨A_i v, v⟩ > 0` on the cone, and the chord
/// `z_N − z_0` inside the cone. In the plane the inner-product condition is
/// sampled with step `margin / 8` and promoted to a certificate by a
/// Lipschitz bound; in higher dimension `samples` random directions are used.
pub fn check_assumption_a(zipper: &Zipper, cone: &ProjectiveCone, samples: usize, margin: f64, seed: u64) -> Result<AssumptionAReport> {
    let d = zipper.dim();
    if cone.dim() != d {
        return Err(Error::Shape(format!("cone of dimension {} for a {d}-dimensional zipper", cone.dim())));
    }
    if !(margin > 0.0) {
        return Err(Error::Parameter("margin must be positive".into()));
    }
    let ms = zipper.matrices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chord = linalg::sub(&zipper.vertices()[zipper.len()], &zipper.vertices()[0]);
    let mut out = Vec::new();
    match cone {
        ProjectiveCone::Arc { lo, width } => {
            let c = arc_clearance(&ms, *lo, *width);
            out.push(ConditionReport {
                condition: "invariance".into(),
                pass: c >= margin,
                margin: c,
                witness: if c >= margin { None } else { worst_map_arc(&ms, *lo, *width) },
            });
            let step = margin / 8.0;
            let dirs = cone.sample_directions(step, 0, &mut rng);
            let (min_ip, arg) = min_inner_product(&ms, &dirs);
            // θ ↦ ⟨A v(θ), v(θ)⟩ is 2‖A‖-Lipschitz; half a step away from a sample
            let lip = ms.iter().map(|m| m.norm(NormKind::Spectral)).fold(0.0, f64::max) * 2.0;
            let certified = min_ip - lip * step / 2.0;
            out.push(ConditionReport {
                condition: "inner-product".into(),
                pass: min_ip > 0.0 && certified > 0.0,
                margin: min_ip,
                witness: arg.map(|(i, v)| format!("map {i}, direction {:.9}", direction(&v))),
            });
            let depth = if chord.iter().all(|x| *x == 0.0) {
                f64::NEG_INFINITY
            } else {
                cone.depth_of(direction(&chord))
            };
            out.push(ConditionReport {
                condition: "chord".into(),
                pass: depth >= margin,
                margin: depth,
                witness: if depth >= margin {
                    None
                } else {
                    Some(format!("chord direction {:.9}", direction(&chord)))
                },
            });
        }
        ProjectiveCone::Simplicial { generators } => {
            let g = generator_matrix(generators);
            let mut worst = f64::INFINITY;
            let mut witness = None;
            for (i, a) in ms.iter().enumerate() {
                for (k, gen) in generators.iter().enumerate() {
                    let img = a.apply(gen);
                    let m = interior_margin(&g, &img);
                    if m < worst {
                        worst = m;
                        witness = Some(format!("map {i}, generator {k}"));
                    }
                }
            }
            out.push(ConditionReport {
                condition: "invariance".into(),
                pass: worst >= margin,
                margin: worst,
                witness: if worst >= margin { None } else { witness },
            });
            let dirs = cone.sample_directions(0.0, samples, &mut rng);
            let (min_ip, arg) = min_inner_product(&ms, &dirs);
            out.push(ConditionReport {
                condition: "inner-product".into(),
                pass: min_ip > 0.0,
                margin: min_ip,
                witness: arg.map(|(i, v)| format!("map {i}, direction {v:?}")),
            });
            let m = interior_margin(&g, &chord);
            out.push(ConditionReport {
                condition: "chord".into(),
                pass: m >= margin,
                margin: m,
                witness: None,
            });
        }
    }
    Ok(AssumptionAReport { conditions: out })
}

fn worst_map_arc(ms: &[Matrix], lo: f64, width: f64) -> Option<String> {
    let mut worst = f64::INFINITY;
    let mut arg = None;
    for (i, m) in ms.iter().enumerate() {
        let c = arc_clearance(core::slice::from_ref(m), lo, width);
        if c < worst {
            worst = c;
            arg = Some(format!("map {i}, clearance {c:e}"));
        }
    }
    arg
}

/// Smallest `⟨A_i v, v⟩ / ‖v‖²` over the directions, with its argument.
fn min_inner_product(ms: &[Matrix], dirs: &[Vec<f64>]) -> (f64, Option<(usize, Vec<f64>)>) {
    let mut best = f64::INFINITY;
    let mut arg = None;
    for (i, m) in ms.iter().enumerate() {
        for v in dirs {
            let ip = linalg::dot(&m.apply(v), v) / linalg::dot(v, v);
            if ip < best {
                best = ip;
                arg = Some((i, v.clone()));
            }
        }
    }
    (best, arg)
}

/// Coefficients of `v` in the generator basis, normalized to unit 1-norm;
/// returns the smallest one after fixing the sign (the cone is projective).
fn interior_margin(g: &Matrix, v: &[f64]) -> f64 {
    let Some(c) = g.solve(v) else {
        return f64::NEG_INFINITY;
    };
    let total: f64 = c.iter().map(|x| math::abs(*x)).sum();
    if total == 0.0 {
        return f64::NEG_INFINITY;
    }
    let pos = c.iter().copied().fold(f64::INFINITY, f64::min) / total;
    let neg = c.iter().map(|x| -x).fold(f64::INFINITY, f64::min) / total;
    pos.max(neg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplittingDiagnostic {
    pub depths: Vec<usize>,
    /// Largest `σ₂/σ₁` of `A_{i|n}` over the examined words, per depth.
    pub ratios: Vec<f64>,
    /// Whether each depth used all words rather than a random sample.
    pub exhaustive: Vec<bool>,
    /// `τ̂` from the fit `log r_n ≈ log Ĉ + n log τ̂`.
    pub decay_rate: f64,
    pub constant: f64,
    /// RMS residual of the fit in log scale.
    pub residual: f64,
    pub no_splitting: bool,
}

/// Fitted rates at or above this count as no splitting.
pub const NO_SPLITTING_RATE: f64 = 0.999;

/// Singular value ratios of products of length `min_depth..=max_depth`.
/// Depths with at most `sample_count` words are enumerated; deeper ones use
/// `sample_count` random words from a generator seeded with `seed`.
pub fn splitting_diagnostic(
    matrices: &[Matrix],
    min_depth: usize,
    max_depth: usize,
    sample_count: usize,
    seed: u64,
) -> Result<SplittingDiagnostic> {
    if matrices.is_empty() || matrices[0].dim() < 2 {
        return Err(Error::Unsupported("splitting needs d ≥ 2".into()));
    }
    if min_depth == 0 || max_depth < min_depth + 1 {
        return Err(Error::Parameter("need at least two depths starting at 1".into()));
    }
    let n = matrices.len();
    let d = matrices[0].dim();
    let mut exhaustive_to = 0;
    while exhaustive_to < max_depth
        && (n as u128).pow(exhaustive_to as u32 + 1) <= sample_count as u128
    {
        exhaustive_to += 1;
    }
    let mut full = vec![0.0f64; max_depth + 1];
    if exhaustive_to > 0 {
        visit_products(matrices, exhaustive_to, &mut |level, _, m| {
            full[level] = full[level].max(linalg::second_singular_ratio(d, m));
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut depths = Vec::new();
    let mut ratios = Vec::new();
    let mut exhaustive = Vec::new();
    for depth in min_depth..=max_depth {
        let r = if depth <= exhaustive_to {
            full[depth]
        } else {
            let mut worst: f64 = 0.0;
            for _ in 0..sample_count {
                let mut p = Matrix::identity(d);
                for _ in 0..depth {
                    p = p.mul(&matrices[rng.gen_range(0..n)]);
                    let s = p.as_slice().iter().fold(0.0f64, |a, x| a.max(math::abs(*x)));
                    if s > 0.0 {
                        p = p.scale(1.0 / s);
                    }
                }
                worst = worst.max(linalg::second_singular_ratio(d, p.as_slice()));
            }
            worst
        };
        depths.push(depth);
        ratios.push(r);
        exhaustive.push(depth <= exhaustive_to);
    }
    let xs: Vec<f64> = depths.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = ratios.iter().map(|r| math::ln(r.max(f64::MIN_POSITIVE))).collect();
    let (a, b, residual) = math::linear_fit(&xs, &ys);
    let decay_rate = math::exp(b);
    Ok(SplittingDiagnostic {
        depths,
        ratios,
        exhaustive,
        decay_rate,
        constant: math::exp(a),
        residual,
        no_splitting: decay_rate >= NO_SPLITTING_RATE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StableDirection {
    pub word: Word,
    /// Angle in `[0, π)` of the least-expanded right-singular direction.
    pub angle: f64,
    pub reliable: bool,
}

/// For every word of length `depth`, the right-singular direction of the
/// smallest singular value of `A_ī`.
pub fn stable_directions(matrices: &[Matrix], depth: usize) -> Result<Vec<StableDirection>> {
    if matrices.iter().any(|m| m.dim() != 2) {
        return Err(Error::Unsupported("stable directions need d = 2".into()));
    }
    if depth == 0 {
        return Err(Error::Parameter("depth must be at least 1".into()));
    }
    let count = (matrices.len() as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
    if count > crate::DEFAULT_LEAF_BUDGET as u128 {
        return Err(Error::Budget {
            needed: count,
            budget: crate::DEFAULT_LEAF_BUDGET,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    visit_products(matrices, depth, &mut |level, word, m| {
        if level == depth {
            let (s1, s2) = linalg::sv2(m);
            out.push(StableDirection {
                word: Word::new(word.to_vec()),
                angle: linalg::least_direction_2x2(m),
                reliable: s1 > 0.0 && (s1 - s2) / s1 > CONFORMAL_TOL,
            });
        }
    });
    Ok(out)
}

/// Result of the finite well-ordered test. It can refute the property, and
/// otherwise only reports evidence at the sampled resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct WellOrderedReport {
    pub pass: bool,
    pub directions_checked: usize,
    /// All directions were unreliable, so every line was tried.
    pub conformal: bool,
    /// Three points in curve order whose projections are not monotone.
    pub witness: Option<WellOrderedWitness>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WellOrderedWitness {
    /// Angle of the line `l`; points are projected on its normal.
    pub angle: f64,
    /// Parameters of the three points.
    pub parameters: [f64; 3],
    pub projections: [f64; 3],
}

/// Projects the level-`level` vertices onto the normals of lines within
/// `delta` of the stable directions at `direction_depth` (sampled with step
/// `delta/4`) and checks that the projections are monotone in curve order.
pub fn well_ordered_check(zipper: &Zipper, level: usize, delta: f64, direction_depth: usize) -> Result<WellOrderedReport> {
    if zipper.dim() != 2 {
        return Err(Error::Unsupported("well-ordered check needs d = 2".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Parameter("delta must be positive".into()));
    }
    let dirs = stable_directions(&zipper.matrices(), direction_depth)?;
    let reliable: Vec<f64> = dirs.iter().filter(|d| d.reliable).map(|d| d.angle).collect();
    let step = delta / 4.0;
    let conformal = reliable.is_empty();
    let mut angles: Vec<f64> = if conformal {
        let n = math::ceil(PI / step) as usize;
        (0..n).map(|k| k as f64 * PI / n as f64).collect()
    } else if reliable.len() < dirs.len() {
        return Err(Error::Unreliable(format!(
            "{} of {} products are near-conformal",
            dirs.len() - reliable.len(),
            dirs.len()
        )));
    } else {
        let mut a = Vec::with_capacity(reliable.len() * 9);
        for s in &reliable {
            for k in -4i32..=4 {
                a.push(math::proj_angle(s + k as f64 * step));
            }
        }
        a
    };
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| math::abs(*a - *b) < 1e-15);
    let pts = zipper.sample_curve(level, crate::DEFAULT_LEAF_BUDGET)?;
    for &theta in &angles {
        let normal = [-math::sin(theta), math::cos(theta)];
        let proj: Vec<f64> = pts.iter().map(|p| linalg::dot(&p.position, &normal)).collect();
        if let Some(k) = first_turn(&proj) {
            return Ok(WellOrderedReport {
                pass: false,
                directions_checked: angles.len(),
                conformal,
                witness: Some(WellOrderedWitness {
                    angle: theta,
                    parameters: [pts[k.0].parameter, pts[k.1].parameter, pts[k.2].parameter],
                    projections: [proj[k.0], proj[k.1], proj[k.2]],
                }),
            });
        }
    }
    Ok(WellOrderedReport {
        pass: true,
        directions_checked: angles.len(),
        conformal,
        witness: None,
    })
}

/// First triple `a < b < c` with `p_b` strictly outside `[p_a, p_c]`'s
/// monotone order, ignoring differences below rounding level.
fn first_turn(p: &[f64]) -> Option<(usize, usize, usize)> {
    let scale = p.iter().fold(0.0f64, |m, x| m.max(math::abs(*x))).max(1.0);
    let eps = 1e-12 * scale;
    let mut last: Option<(usize, usize, f64)> = None; // (from, to, sign)
    for k in 1..p.len() {
        let diff = p[k] - p[k - 1];
        if math::abs(diff) <= eps {
            continue;
        }
        let sign = diff.signum();
        match last {
            Some((from, _, s)) if s != sign => return Some((from, k - 1, k)),
            _ => last = Some((k - 1, k, sign)),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zipper::AffineMap;

    fn derham(w: f64) -> Vec<Matrix> {
        vec![
            Matrix::from_rows([[w, 0.0], [w, 1.0 - 2.0 * w]]),
            Matrix::from_rows([[1.0 - 2.0 * w, w], [0.0, w]]),
        ]
    }

    #[test]
    fn diagonal_cone_contains_axis() {
        let d = Matrix::diagonal(&[0.5, 0.25]);
        let c = invariant_cone_2d(&[d.clone(), d], 100, 1e-3, None).unwrap();
        assert!(c.cone.depth_of(0.0) > 0.0);
        assert!(c.clearance >= 1e-3);
    }

    #[test]
    fn rotation_has_no_cone() {
        let r = Matrix::rotation(PI / 6.0).scale(0.5);
        let e = invariant_cone_2d(&[r], 1000, 1e-3, None).unwrap_err();
        assert!(matches!(e, Error::NoInvariantCone(_)));
    }

    #[test]
    fn positive_matrices_keep_the_quadrant() {
        let conj: Vec<Matrix> = derham(0.2)
            .iter()
            .map(|m| m.conjugate(&Transform::Hat(0.2).matrix()).unwrap())
            .collect();
        assert!(check_positivity(&conj).positive);
        let c = invariant_cone_2d(&conj, 100, 1e-6, Some((0.0, FRAC_PI_2))).unwrap();
        assert!(c.clearance > 0.0);
        let (lo, hi) = c.cone.bounds().unwrap();
        assert!(lo >= 0.0 && hi <= FRAC_PI_2);
        // without a trial the search still lands strictly inside the quadrant
        let c = invariant_cone_2d(&conj, 1000, 1e-6, None).unwrap();
        let (lo, hi) = c.cone.bounds().unwrap();
        assert!(lo > 0.0 && hi < FRAC_PI_2, "{lo} {hi}");
    }

    #[test]
    fn positivity_examples() {
        assert!(!check_positivity(&derham(0.1)[..1]).positive);
        assert!(!check_positivity(&[Matrix::identity(2)]).positive);
    }

    #[test]
    fn conjugation_preserves_entrywise_norm() {
        for w in [0.05, 0.2, 0.4] {
            let c = conjugation_search(&derham(w)).unwrap();
            assert!(c.norm1_deviation.unwrap() < 1e-12, "{w}");
        }
        assert!(conjugation_search(&derham(1.0 / 3.0)).is_err());
    }

    #[test]
    fn splitting_examples() {
        let d = Matrix::diagonal(&[0.5, 0.25]);
        let s = splitting_diagnostic(&[d.clone(), d], 1, 10, 4096, 1).unwrap();
        assert!((s.decay_rate - 0.5).abs() < 1e-12);
        let r = Matrix::rotation(0.3).scale(0.5);
        let s = splitting_diagnostic(&[r.clone(), r.transpose()], 1, 10, 4096, 1).unwrap();
        assert!(s.no_splitting);
    }

    #[test]
    fn sampled_depths_are_seeded() {
        let ms = derham(0.1);
        let a = splitting_diagnostic(&ms, 1, 12, 100, 9).unwrap();
        let b = splitting_diagnostic(&ms, 1, 12, 100, 9).unwrap();
        assert_eq!(a, b);
        assert!(!a.exhaustive[11]);
    }

    #[test]
    fn stable_direction_of_diagonal() {
        let d = Matrix::diagonal(&[0.5, 0.25]);
        let s = stable_directions(&[d.clone(), d], 3).unwrap();
        assert!(s.iter().all(|x| (x.angle - FRAC_PI_2).abs() < 1e-12 && x.reliable));
    }

    #[test]
    fn turn_detection() {
        assert_eq!(first_turn(&[0.0, 1.0, 1.0, 2.0]), None);
        assert_eq!(first_turn(&[0.0, 0.3, 0.0]), Some((0, 1, 2)));
        assert_eq!(first_turn(&[3.0, 2.0, 2.0, 2.5]), Some((0, 2, 3)));
    }

    #[test]
    fn bent_zipper_is_not_well_ordered() {
        let a0 = Matrix::from_rows([[0.5, 0.0], [0.3, 0.9]]);
        let a1 = Matrix::from_rows([[0.5, 0.0], [-0.3, 0.9]]);
        let z = Zipper::new(
            vec![
                AffineMap::new(a0, vec![0.0, 0.0]).unwrap(),
                AffineMap::new(a1, vec![0.5, 0.3]).unwrap(),
            ],
            vec![vec![0.0, 0.0], vec![0.5, 0.3], vec![1.0, 0.0]],
            vec![false, false],
            vec![0.5, 0.5],
        )
        .unwrap();
        let r = well_ordered_check(&z, 1, 0.05, 6).unwrap();
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert_eq!(w.parameters, [0.0, 0.5, 1.0]);
    }
}
