//! Affine zippers, validation and evaluation of the linear parametrization.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Matrix, NormKind};
use crate::math;
use crate::pressure::MatrixSystem;
use crate::{Error, Result};

/// Iteration cap for a single curve evaluation.
const MAX_EVAL_STEPS: usize = 4096;
/// Largest word count used when a depth-`q` quantity is computed exhaustively.
const JOINT_WORD_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    matrix: Matrix,
    translation: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Matrix, translation: Vec<f64>) -> Result<Self> {
        if translation.len() != matrix.dim() {
            return Err(Error::Shape(format!(
                "translation has {} entries for a {}-dimensional matrix",
                translation.len(),
                matrix.dim()
            )));
        }
        Ok(AffineMap {
            matrix,
            translation,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.apply(x);
        for (a, b) in y.iter_mut().zip(&self.translation) {
            *a += b;
        }
        y
    }

    /// The unique `x` with `f(x) = x`.
    pub fn fixed_point(&self) -> Result<Vec<f64>> {
        let d = self.matrix.dim();
        let lhs = Matrix::identity(d).add(&self.matrix.scale(-1.0));
        let scale = lhs.norm(NormKind::Spectral);
        if scale == 0.0 || math::abs(lhs.det()) <= 1e-14 * math::powf(scale, d as f64) {
            return Err(Error::EigenvalueOne);
        }
        lhs.solve(&self.translation).ok_or(Error::EigenvalueOne)
    }

    /// `|det A| / ‖A‖^d`, compared against the invertibility threshold.
    pub fn invertibility_margin(&self) -> f64 {
        let n = self.matrix.norm(NormKind::Spectral);
        if n == 0.0 {
            return 0.0;
        }
        math::abs(self.matrix.det()) / math::powf(n, self.matrix.dim() as f64)
    }
}

/// A point of the curve `v(x)` together with a guaranteed error radius.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub parameter: f64,
    pub position: Vec<f64>,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zipper {
    maps: Vec<AffineMap>,
    vertices: Vec<Vec<f64>>,
    signature: Vec<bool>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub tol: f64,
    /// Depth `q` of the joint-contraction check.
    pub contraction_depth: usize,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            tol: 1e-9,
            contraction_depth: 8,
        }
    }
}

/// One failed invariant, pointing at the offending map when there is one.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationFailure {
    pub invariant: &'static str,
    pub index: Option<usize>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tol: f64,
    pub cross_residual: f64,
    /// Per-map cross-condition residuals.
    pub cross_residuals: Vec<f64>,
    pub invertibility_margins: Vec<f64>,
    pub weight_sum_residual: f64,
    pub min_weight: f64,
    pub contraction_depth: usize,
    /// Largest operator norm over all words of length `contraction_depth`.
    pub contraction_factor: f64,
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Invertibility threshold: `|det A| > 1e-12 · ‖A‖^d`.
pub const INVERTIBILITY_THRESHOLD: f64 = 1e-12;

impl Zipper {
    /// Builds a zipper after checking that all shapes agree. Numerical
    /// invariants are checked by [`Zipper::validate`].
    pub fn new(
        maps: Vec<AffineMap>,
        vertices: Vec<Vec<f64>>,
        signature: Vec<bool>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = maps.len();
        if n == 0 {
            return Err(Error::Shape("a zipper needs at least one map".into()));
        }
        let d = maps[0].matrix.dim();
        if let Some(k) = maps.iter().position(|m| m.matrix.dim() != d) {
            return Err(Error::Shape(format!("map {k} has a different dimension")));
        }
        if vertices.len() != n + 1 {
            return Err(Error::Shape(format!(
                "{n} maps need {} vertices, got {}",
                n + 1,
                vertices.len()
            )));
        }
        if let Some(k) = vertices.iter().position(|v| v.len() != d) {
            return Err(Error::Shape(format!("vertex {k} is not {d}-dimensional")));
        }
        if signature.len() != n {
            return Err(Error::Shape(format!(
                "{n} maps need {n} signature bits, got {}",
                signature.len()
            )));
        }
        if weights.len() != n {
            return Err(Error::Shape(format!(
                "{n} maps need {n} weights, got {}",
                weights.len()
            )));
        }
        Ok(Zipper {
            maps,
            vertices,
            signature,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.maps[0].matrix.dim()
    }

    /// Number of maps `N`.
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn signature(&self) -> &[bool] {
        &self.signature
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrices(&self) -> Vec<Matrix> {
        self.maps.iter().map(|m| m.matrix.clone()).collect()
    }

    pub fn matrix_system(&self) -> Result<MatrixSystem> {
        MatrixSystem::new(self.matrices(), self.weights.clone())
    }

    fn first(&self) -> &[f64] {
        &self.vertices[0]
    }

    fn last(&self) -> &[f64] {
        &self.vertices[self.len()]
    }

    /// Cross-condition residual of map `i`.
    fn cross_residual(&self, i: usize) -> f64 {
        let e = usize::from(self.signature[i]);
        let f = &self.maps[i];
        let a = linalg::norm2(&linalg::sub(&f.apply(self.first()), &self.vertices[i + e]));
        let b = linalg::norm2(&linalg::sub(&f.apply(self.last()), &self.vertices[i + 1 - e]));
        a.max(b)
    }

    pub fn validate(&self, opts: &ValidationOptions) -> ValidationReport {
        let mut failures = Vec::new();
        let cross: Vec<f64> = (0..self.len()).map(|i| self.cross_residual(i)).collect();
        for (i, r) in cross.iter().enumerate() {
            if !(*r <= opts.tol) {
                failures.push(ValidationFailure {
                    invariant: "cross-condition",
                    index: Some(i),
                    residual: *r,
                });
            }
        }
        let margins: Vec<f64> = self.maps.iter().map(|m| m.invertibility_margin()).collect();
        for (i, m) in margins.iter().enumerate() {
            if !(*m > INVERTIBILITY_THRESHOLD) {
                failures.push(ValidationFailure {
                    invariant: "invertibility",
                    index: Some(i),
                    residual: *m,
                });
            }
        }
        let sum: f64 = self.weights.iter().sum();
        let weight_sum_residual = math::abs(sum - 1.0);
        if !(weight_sum_residual <= opts.tol) {
            failures.push(ValidationFailure {
                invariant: "weight-sum",
                index: None,
                residual: weight_sum_residual,
            });
        }
        let min_weight = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        for (i, w) in self.weights.iter().enumerate() {
            if !(*w > 0.0) {
                failures.push(ValidationFailure {
                    invariant: "weight-positivity",
                    index: Some(i),
                    residual: *w,
                });
            }
        }
        let depth = effective_depth(self.len(), opts.contraction_depth);
        let factor = max_product_norm(&self.matrices(), depth);
        if !(factor < 1.0) {
            failures.push(ValidationFailure {
                invariant: "joint-contraction",
                index: None,
                residual: factor,
            });
        }
        ValidationReport {
            tol: opts.tol,
            cross_residual: cross.iter().copied().fold(0.0, f64::max),
            cross_residuals: cross,
            invertibility_margins: margins,
            weight_sum_residual,
            min_weight,
            contraction_depth: depth,
            contraction_factor: factor,
            failures,
        }
    }

    /// `D⁻¹ f_i(D x)`: the same zipper in the coordinates `x = D y`.
    pub fn conjugate(&self, transform: &Matrix) -> Result<Zipper> {
        let inv = transform
            .inverse()
            .ok_or_else(|| Error::Singular("coordinate transform".into()))?;
        let maps = self
            .maps
            .iter()
            .map(|m| AffineMap::new(inv.mul(&m.matrix).mul(transform), inv.apply(&m.translation)))
            .collect::<Result<Vec<_>>>()?;
        let vertices = self.vertices.iter().map(|v| inv.apply(v)).collect();
        Zipper::new(maps, vertices, self.signature.clone(), self.weights.clone())
    }

    /// Evaluator with precomputed attractor radius, at the default depth.
    pub fn evaluator(&self) -> Result<CurveEvaluator<'_>> {
        CurveEvaluator::new(self, 8)
    }

    pub fn evaluate_v(&self, x: f64, tol: f64) -> Result<CurvePoint> {
        self.evaluator()?.evaluate(x, tol)
    }

    /// The points `v` at the left end of every level-`depth` parameter cylinder,
    /// in parameter order, followed by `z_N` at parameter 1.
    pub fn sample_curve(&self, depth: usize, budget: usize) -> Result<Vec<CurvePoint>> {
        let count = (self.len() as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
        if count.saturating_add(1) > budget as u128 {
            return Err(Error::Budget {
                needed: count.saturating_add(1),
                budget,
            });
        }
        let mut out = Vec::with_capacity(count as usize + 1);
        self.walk_cylinders(depth, &mut |c| {
            out.push(CurvePoint {
                parameter: c.lo,
                position: c.start,
                error_bound: 0.0,
            });
        });
        out.push(CurvePoint {
            parameter: 1.0,
            position: self.last().to_vec(),
            error_bound: 0.0,
        });
        Ok(out)
    }

    /// Largest gap between the end of one level-`depth` sub-arc and the start
    /// of the next, computed from independent products.
    pub fn adjacency_residual(&self, depth: usize, budget: usize) -> Result<f64> {
        let count = (self.len() as u128).checked_pow(depth as u32).unwrap_or(u128::MAX);
        if count > budget as u128 {
            return Err(Error::Budget {
                needed: count,
                budget,
            });
        }
        let mut prev_end: Option<Vec<f64>> = None;
        let mut worst: f64 = 0.0;
        self.walk_cylinders(depth, &mut |c| {
            if let Some(e) = &prev_end {
                worst = worst.max(linalg::norm2(&linalg::sub(e, &c.start)));
            }
            prev_end = Some(c.end);
        });
        Ok(worst)
    }

    /// Visits the level-`depth` cylinders in increasing parameter order.
    fn walk_cylinders(&self, depth: usize, visit: &mut dyn FnMut(Cylinder)) {
        let d = self.dim();
        let root = Frame {
            m: Matrix::identity(d),
            b: vec![0.0; d],
            a: 1.0,
            c: 0.0,
        };
        self.walk_rec(&root, depth, visit);
    }

    fn walk_rec(&self, frame: &Frame, left: usize, visit: &mut dyn FnMut(Cylinder)) {
        let reversed = frame.a < 0.0;
        if left == 0 {
            let p = |v: &[f64]| {
                let mut y = frame.m.apply(v);
                for (a, b) in y.iter_mut().zip(&frame.b) {
                    *a += b;
                }
                y
            };
            let (s, e) = if reversed {
                (p(self.last()), p(self.first()))
            } else {
                (p(self.first()), p(self.last()))
            };
            let lo = if reversed { frame.a + frame.c } else { frame.c };
            visit(Cylinder {
                lo,
                start: s,
                end: e,
            });
            return;
        }
        let offsets = self.parameter_offsets();
        let order: Vec<usize> = if reversed {
            (0..self.len()).rev().collect()
        } else {
            (0..self.len()).collect()
        };
        for i in order {
            let child = frame.compose(&self.maps[i], self.param_map(i, &offsets));
            self.walk_rec(&child, left - 1, visit);
        }
    }

    /// Left ends `Σ_{j<i} λ_j` of the first-level parameter intervals.
    pub(crate) fn parameter_offsets(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.len() + 1);
        for w in &self.weights {
            out.push(acc);
            acc += w;
        }
        out.push(1.0);
        out
    }

    /// The parameter map `g_i(x) = a x + c`.
    pub(crate) fn param_map(&self, i: usize, offsets: &[f64]) -> (f64, f64) {
        let l = self.weights[i];
        if self.signature[i] {
            (-l, offsets[i] + l)
        } else {
            (l, offsets[i])
        }
    }

    /// Rigorous radius `R` of a ball around the vertex centroid containing the
    /// attractor, from the words of length `q`.
    pub fn attractor_radius(&self, q: usize) -> Result<(Vec<f64>, f64)> {
        let d = self.dim();
        let n = self.len() as f64;
        let mut c = vec![0.0; d];
        for v in &self.vertices {
            for (a, b) in c.iter_mut().zip(v) {
                *a += b / (n + 1.0);
            }
        }
        let q = effective_depth(self.len(), q).max(1);
        let mut worst_norm: f64 = 0.0;
        let mut worst_shift: f64 = 0.0;
        let root = Frame {
            m: Matrix::identity(d),
            b: vec![0.0; d],
            a: 1.0,
            c: 0.0,
        };
        let mut stack = vec![(root, 0usize)];
        while let Some((f, level)) = stack.pop() {
            if level == q {
                worst_norm = worst_norm.max(f.m.norm(NormKind::Spectral));
                let mut img = f.m.apply(&c);
                for (a, b) in img.iter_mut().zip(&f.b) {
                    *a += b;
                }
                worst_shift = worst_shift.max(linalg::norm2(&linalg::sub(&img, &c)));
                continue;
            }
            for (i, m) in self.maps.iter().enumerate() {
                stack.push((f.compose(m, (1.0, i as f64)), level + 1));
            }
        }
        if !(worst_norm < 1.0) {
            return Err(Error::NotContracting {
                factor: worst_norm,
                depth: q,
            });
        }
        Ok((c, worst_shift / (1.0 - worst_norm)))
    }
}

/// Composition `x ↦ m x + b` of zipper maps along a word, together with the
/// parameter map `x ↦ a x + c`.
struct Frame {
    m: Matrix,
    b: Vec<f64>,
    a: f64,
    c: f64,
}

impl Frame {
    fn compose(&self, f: &AffineMap, (ga, gc): (f64, f64)) -> Frame {
        let mut b = self.m.apply(&f.translation);
        for (x, y) in b.iter_mut().zip(&self.b) {
            *x += y;
        }
        Frame {
            m: self.m.mul(&f.matrix),
            b,
            a: self.a * ga,
            c: self.a * gc + self.c,
        }
    }
}

struct Cylinder {
    lo: f64,
    start: Vec<f64>,
    end: Vec<f64>,
}

pub(crate) fn effective_depth(n: usize, q: usize) -> usize {
    let mut q = q;
    while q > 1 && (n as u128).checked_pow(q as u32).map_or(true, |c| c > JOINT_WORD_CAP as u128) {
        q -= 1;
    }
    q
}

/// Largest operator norm of a product of length `depth`.
pub(crate) fn max_product_norm(matrices: &[Matrix], depth: usize) -> f64 {
    fn rec(ms: &[Matrix], p: &Matrix, left: usize, worst: &mut f64) {
        if left == 0 {
            *worst = worst.max(p.norm(NormKind::Spectral));
            return;
        }
        for m in ms {
            rec(ms, &p.mul(m), left - 1, worst);
        }
    }
    let mut worst = 0.0;
    rec(matrices, &Matrix::identity(matrices[0].dim()), depth, &mut worst);
    worst
}

/// Evaluates `v(x)` by following the signature-aware coding of `x`.
pub struct CurveEvaluator<'a> {
    zipper: &'a Zipper,
    center: Vec<f64>,
    radius: f64,
    offsets: Vec<f64>,
}

impl<'a> CurveEvaluator<'a> {
    pub fn new(zipper: &'a Zipper, q: usize) -> Result<Self> {
        let (center, radius) = zipper.attractor_radius(q)?;
        Ok(CurveEvaluator {
            zipper,
            center,
            radius,
            offsets: zipper.parameter_offsets(),
        })
    }

    /// The attractor-radius bound `R`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// First-level cylinder containing `x`, preferring the upper one at a
    /// shared boundary so that the remaining coordinate ends in zeros.
    fn branch(&self, x: f64) -> usize {
        let n = self.zipper.len();
        let mut i = 0;
        while i + 1 < n && self.offsets[i + 1] <= x {
            i += 1;
        }
        i
    }

    pub fn evaluate(&self, x: f64, tol: f64) -> Result<CurvePoint> {
        if !(tol > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain {
                value: x,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let z = self.zipper;
        let d = z.dim();
        let mut m = Matrix::identity(d);
        let mut b = vec![0.0; d];
        let mut y = x;
        for _ in 0..MAX_EVAL_STEPS {
            let (seed, err) = if y == 0.0 {
                (z.first(), 0.0)
            } else if y == 1.0 {
                (z.last(), 0.0)
            } else {
                (&self.center[..], m.norm(NormKind::Spectral) * self.radius)
            };
            if err == 0.0 || err <= tol {
                let mut p = m.apply(seed);
                for (a, c) in p.iter_mut().zip(&b) {
                    *a += c;
                }
                return Ok(CurvePoint {
                    parameter: x,
                    position: p,
                    error_bound: err,
                });
            }
            let i = self.branch(y);
            let l = z.weights[i];
            y = if z.signature[i] {
                (self.offsets[i + 1] - y) / l
            } else {
                (y - self.offsets[i]) / l
            };
            y = y.clamp(0.0, 1.0);
            let f = &z.maps[i];
            let shift = m.apply(&f.translation);
            for (a, c) in b.iter_mut().zip(&shift) {
                *a += c;
            }
            m = m.mul(&f.matrix);
        }
        Err(Error::Failed(format!(
            "evaluation at x = {x} did not reach tolerance {tol} in {MAX_EVAL_STEPS} steps"
        )))
    }
}

/// Human-readable summary of the failures in a report.
pub fn describe_failures(report: &ValidationReport) -> String {
    let mut s = String::new();
    for f in &report.failures {
        if !s.is_empty() {
            s.push_str("; ");
        }
        match f.index {
            Some(i) => s.push_str(&format!("{} fails at i={i} (residual {})", f.invariant, f.residual)),
            None => s.push_str(&format!("{} fails (value {})", f.invariant, f.residual)),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn straight_line() -> Zipper {
        let a = Matrix::diagonal(&[0.5, 0.5]);
        Zipper::new(
            vec![
                AffineMap::new(a.clone(), vec![0.0, 0.0]).unwrap(),
                AffineMap::new(a, vec![0.5, 0.0]).unwrap(),
            ],
            vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]],
            vec![false, false],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    fn derham(w: f64) -> Zipper {
        let a0 = Matrix::from_rows([[w, 0.0], [w, 1.0 - 2.0 * w]]);
        let a1 = Matrix::from_rows([[1.0 - 2.0 * w, w], [0.0, w]]);
        Zipper::new(
            vec![
                AffineMap::new(a0, vec![0.0, -2.0 * w]).unwrap(),
                AffineMap::new(a1, vec![2.0 * w, 0.0]).unwrap(),
            ],
            vec![vec![0.0, -1.0], vec![w, -w], vec![1.0, 0.0]],
            vec![false, false],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn derham_validates_and_perturbation_is_reported() {
        let z = derham(0.1);
        let r = z.validate(&ValidationOptions::default());
        assert!(r.passed(), "{r:?}");
        assert!(r.cross_residual < 1e-15);

        let mut bad = z.clone();
        bad.vertices[1] = vec![0.1, -0.2];
        let r = bad.validate(&ValidationOptions::default());
        assert!(!r.passed());
        assert_eq!(r.failures[0].index, Some(0));
        assert!((r.failures[0].residual - 0.1).abs() < 1e-12);
    }

    #[test]
    fn straight_line_passes() {
        assert!(straight_line().validate(&ValidationOptions::default()).passed());
    }

    #[test]
    fn fixed_points() {
        let z = derham(0.1);
        let p0 = z.maps[0].fixed_point().unwrap();
        let p1 = z.maps[1].fixed_point().unwrap();
        assert!((p0[0] - 0.0).abs() < 1e-15 && (p0[1] + 1.0).abs() < 1e-15);
        assert!((p1[0] - 1.0).abs() < 1e-15 && p1[1].abs() < 1e-15);
        let id = AffineMap::new(Matrix::identity(2), vec![1.0, 0.0]).unwrap();
        assert_eq!(id.fixed_point(), Err(Error::EigenvalueOne));
    }

    #[test]
    fn evaluation_examples() {
        let s = straight_line();
        let p = s.evaluate_v(0.3, 1e-12).unwrap();
        assert!((p.position[0] - 0.3).abs() <= 1e-12 + p.error_bound);
        assert!(p.position[1].abs() <= 1e-12);

        let z = derham(0.1);
        assert_eq!(z.evaluate_v(0.0, 1e-9).unwrap().position, vec![0.0, -1.0]);
        let mid = z.evaluate_v(0.5, 1e-9).unwrap();
        assert!((mid.position[0] - 0.1).abs() < 1e-15 && (mid.position[1] + 0.1).abs() < 1e-15);
        assert_eq!(mid.error_bound, 0.0);
        assert!(z.evaluate_v(0.5, 0.0).is_err());
    }

    #[test]
    fn samples_in_parameter_order() {
        let s = straight_line();
        let pts = s.sample_curve(2, 1 << 20).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.position[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let z = derham(0.1);
        let pts = z.sample_curve(1, 1 << 20).unwrap();
        assert_eq!(pts[1].position, vec![0.1, -0.1]);
        let pts = z.sample_curve(3, 1 << 20).unwrap();
        assert_eq!(pts[1].parameter, 0.125);
        assert!(z.sample_curve(30, 1 << 20).is_err());
    }

    #[test]
    fn radius_bound_contains_samples() {
        let z = derham(0.3);
        let (c, r) = z.attractor_radius(8).unwrap();
        for p in z.sample_curve(10, 1 << 20).unwrap() {
            assert!(linalg::norm2(&linalg::sub(&p.position, &c)) <= r);
        }
    }
}
