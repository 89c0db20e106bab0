//! The pressure function `P(t)`, its Legendre transform and related
//! quantities.
//!
//! `P_n(t)` is the root `s` of `Σ_{|ī|=n} ‖A_ī‖^t λ_ī^{-s} = 1`. A
//! [`PressureModel`] enumerates the products once per depth and then
//! evaluates `P_n` at any `t`; the limit is extrapolated from the model
//! `P_n = P + a/n` on the three deepest depths.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::enumerate::{collect_leaves, LeafRule, LeafTable};
use crate::linalg::{Matrix, NormKind};
use crate::math;
use crate::symbolic::Word;
use crate::zipper::INVERTIBILITY_THRESHOLD;
use crate::{Error, Result, DEFAULT_LEAF_BUDGET};

/// Matrices and weights entering the pressure. Need not come from a zipper.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSystem {
    matrices: Vec<Matrix>,
    weights: Vec<f64>,
}

impl MatrixSystem {
    pub fn new(matrices: Vec<Matrix>, weights: Vec<f64>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::Shape("a system needs at least one matrix".into()));
        }
        if matrices.len() != weights.len() {
            return Err(Error::Shape(format!(
                "{} matrices but {} weights",
                matrices.len(),
                weights.len()
            )));
        }
        let d = matrices[0].dim();
        if let Some(k) = matrices.iter().position(|m| m.dim() != d) {
            return Err(Error::Shape(format!("matrix {k} has a different dimension")));
        }
        if let Some(k) = weights.iter().position(|w| !(*w > 0.0)) {
            return Err(Error::Parameter(format!("weight {k} is not positive")));
        }
        let sum: f64 = weights.iter().sum();
        if math::abs(sum - 1.0) > 1e-9 {
            return Err(Error::Parameter(format!("weights sum to {sum}, not 1")));
        }
        for (k, m) in matrices.iter().enumerate() {
            let n = m.norm(NormKind::Spectral);
            if !(math::abs(m.det()) > INVERTIBILITY_THRESHOLD * math::powf(n, d as f64)) {
                return Err(Error::Singular(format!("matrix {k}")));
            }
        }
        Ok(MatrixSystem { matrices, weights })
    }

    /// Diagonal system `A_i = c_i I`.
    pub fn scalar(coefficients: &[f64], weights: &[f64], dim: usize) -> Result<Self> {
        let ms = coefficients.iter().map(|c| Matrix::scalar(dim, *c)).collect();
        MatrixSystem::new(ms, weights.to_vec())
    }

    pub fn matrices(&self) -> &[Matrix] {
        &self.matrices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// `D⁻¹ A_i D` for every matrix.
    pub fn conjugate(&self, transform: &Matrix) -> Result<MatrixSystem> {
        let ms = self
            .matrices
            .iter()
            .map(|m| m.conjugate(transform))
            .collect::<Result<Vec<_>>>()?;
        Ok(MatrixSystem {
            matrices: ms,
            weights: self.weights.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureOptions {
    pub norm: NormKind,
    /// Cap on leaves per enumeration.
    pub budget: usize,
    pub parallel: bool,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions {
            norm: NormKind::Spectral,
            budget: DEFAULT_LEAF_BUDGET,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

/// All products of one length, ready for evaluating `P_n(t)`.
#[derive(Debug, Clone)]
pub struct DepthTable {
    depth: usize,
    leaves: LeafTable,
}

impl DepthTable {
    pub fn new(system: &MatrixSystem, depth: usize, opts: &PressureOptions) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Parameter("depth must be at least 1".into()));
        }
        let leaves = collect_leaves(
            &system.matrices,
            &system.weights,
            opts.norm,
            LeafRule::Depth(depth),
            opts.budget,
            opts.parallel,
        )?;
        Ok(DepthTable { depth, leaves })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `P_n(t)`.
    pub fn pressure(&self, t: f64) -> f64 {
        let sums = self.leaves.group_sums(t);
        solve_root(&sums, &self.leaves.groups.iter().map(|g| g.log_weight).collect::<Vec<_>>())
    }

    /// `P_n(t)` and its derivative `P_n'(t)`, by implicit differentiation of
    /// `Σ ‖A_ī‖^t λ_ī^{-s} = 1`.
    pub fn pressure_and_slope(&self, t: f64) -> (f64, f64) {
        let moments = self.leaves.group_moments(t);
        let sums: Vec<f64> = moments.iter().map(|m| m.0).collect();
        let lw: Vec<f64> = self.leaves.groups.iter().map(|g| g.log_weight).collect();
        let p = solve_root(&sums, &lw);
        let terms: Vec<f64> = sums.iter().zip(&lw).map(|(l, w)| l - p * w).collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for ((e, w), mo) in terms.iter().zip(&lw).zip(&moments) {
            let e = math::exp(e - m);
            num += e * mo.1;
            den += e * w;
        }
        (p, num / den)
    }

    /// Smallest and largest `log‖A_ī‖ / log λ_ī` over the words.
    pub fn ratio_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for g in &self.leaves.groups {
            lo = lo.min(g.max / g.log_weight);
            hi = hi.max(g.min / g.log_weight);
        }
        (lo, hi)
    }

    /// `log Σ exp(t ℓ_ī − p log λ_ī)`, the log of the Gibbs normalizer.
    pub fn log_partition(&self, t: f64, p: f64) -> f64 {
        let sums = self.leaves.group_sums(t);
        math::log_sum_exp(
            sums.iter()
                .zip(&self.leaves.groups)
                .map(|(l, g)| l - p * g.log_weight),
        )
    }
}

/// Root `s` of `log Σ_g exp(L_g − s w_g) = 0` with all `w_g < 0`.
fn solve_root(sums: &[f64], log_weights: &[f64]) -> f64 {
    if sums.len() == 1 {
        return sums[0] / log_weights[0];
    }
    let h = |s: f64| math::log_sum_exp(sums.iter().zip(log_weights).map(|(l, w)| l - s * w));
    let mut hi = f64::INFINITY;
    let mut lo = f64::INFINITY;
    let log_g = math::ln(sums.len() as f64);
    for (l, w) in sums.iter().zip(log_weights) {
        hi = hi.min(l / w);
        lo = lo.min((l + log_g) / w);
    }
    // h(lo) ≤ 0 ≤ h(hi)
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = h(s);
        if v == 0.0 {
            return s;
        }
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        // Newton step, accepted only inside the bracket
        let terms: Vec<f64> = sums.iter().zip(log_weights).map(|(l, w)| l - s * w).collect();
        let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (t, w) in terms.iter().zip(log_weights) {
            let e = math::exp(t - m);
            num += -w * e;
            den += e;
        }
        let slope = num / den;
        let newton = s - v / slope;
        s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * (1.0 + math::abs(s)) {
            break;
        }
    }
    s
}

/// `P_n(t)` at a single depth.
pub fn pressure_at(system: &MatrixSystem, t: f64, n: usize, opts: &PressureOptions) -> Result<f64> {
    Ok(DepthTable::new(system, n, opts)?.pressure(t))
}

/// Per-depth tables plus the extrapolation to `n → ∞`.
#[derive(Debug, Clone)]
pub struct PressureModel {
    tables: Vec<DepthTable>,
    #[cfg_attr(not(feature = "parallel"), allow(dead_code))]
    parallel: bool,
}

impl PressureModel {
    pub fn new(system: &MatrixSystem, depths: &[usize], opts: &PressureOptions) -> Result<Self> {
        if depths.is_empty() {
            return Err(Error::Parameter("depth schedule is empty".into()));
        }
        if depths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parameter("depth schedule must be increasing".into()));
        }
        let tables = depths
            .iter()
            .map(|&n| DepthTable::new(system, n, opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(PressureModel {
            tables,
            parallel: opts.parallel,
        })
    }

    pub fn depths(&self) -> Vec<usize> {
        self.tables.iter().map(|t| t.depth).collect()
    }

    pub fn deepest(&self) -> &DepthTable {
        self.tables.last().expect("nonempty schedule")
    }

    pub fn per_depth(&self, t: f64) -> Vec<f64> {
        self.tables.iter().map(|d| d.pressure(t)).collect()
    }

    /// Extrapolated `P(t)` and the RMS residual of the fit.
    pub fn pressure_with_residual(&self, t: f64) -> (f64, f64) {
        self.extrapolate(&self.per_depth(t))
    }

    pub fn pressure(&self, t: f64) -> f64 {
        self.pressure_with_residual(t).0
    }

    fn extrapolate(&self, values: &[f64]) -> (f64, f64) {
        let k = values.len().min(3);
        if k == 1 {
            return (values[values.len() - 1], 0.0);
        }
        let start = values.len() - k;
        let xs: Vec<f64> = self.tables[start..].iter().map(|t| 1.0 / t.depth as f64).collect();
        let (a, _, res) = math::linear_fit(&xs, &values[start..]);
        (a, res)
    }

    /// `P'(t)`: the extrapolation of the exact derivatives `P_n'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let slopes: Vec<f64> = self.tables.iter().map(|d| d.pressure_and_slope(t).1).collect();
        self.extrapolate(&slopes).0
    }

    /// The root of the extrapolated `P`, bisected to a bracket of `1e-12`.
    pub fn d0(&self) -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.pressure(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1024.0 {
                return Err(Error::NoSignChange { lo: 0.0, hi });
            }
        }
        if self.pressure(lo) > 0.0 {
            return Err(Error::NoSignChange { lo, hi });
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            let p = self.pressure(mid);
            if p == 0.0 {
                return Ok(mid);
            }
            if p < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Tabulates the model on `grid`, which must be increasing and evenly spaced.
    pub fn curve(&self, grid: &[f64]) -> Result<PressureCurve> {
        if grid.len() < 3 {
            return Err(Error::Parameter("t-grid needs at least three points".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Parameter("t-grid must be increasing".into()));
        }
        let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
        let rows = self.rows(grid);
        let per_depth: Vec<Vec<f64>> = (0..self.tables.len())
            .map(|k| rows.iter().map(|r| r.0[k]).collect())
            .collect();
        let extrapolated: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let residual: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let derivative: Vec<f64> = rows.iter().map(|r| r.3).collect();
        let n = grid.len();
        let (alpha_min, alpha_max) = self.deepest().ratio_range();
        let d0 = self.d0()?;
        let summary = PressureSummary {
            d0,
            alpha_min,
            alpha_max,
            alpha_hat: self.derivative(0.0),
            slope_low: extrapolated[0] / grid[0],
            slope_high: extrapolated[n - 1] / grid[n - 1],
            derivative_at_d0: self.derivative(d0),
        };
        let mut warnings = Vec::new();
        let worst_concavity = (1..n - 1)
            .map(|k| 0.5 * (extrapolated[k - 1] + extrapolated[k + 1]) - extrapolated[k])
            .fold(0.0, f64::max);
        if worst_concavity > CONCAVITY_TOL {
            warnings.push(format!(
                "extrapolated P is not concave on the grid (excess {worst_concavity:e}); depth too small or no splitting"
            ));
        }
        let worst_drop = (1..n)
            .map(|k| extrapolated[k - 1] - extrapolated[k])
            .fold(0.0, f64::max);
        if worst_drop > CONCAVITY_TOL {
            warnings.push(format!("extrapolated P decreases on the grid (drop {worst_drop:e})"));
        }
        if summary.alpha_min > 0.0 && (summary.slope_high - summary.alpha_min) < -0.05 {
            warnings.push(String::from("alpha_min from words exceeds P(t)/t at the grid end"));
        }
        Ok(PressureCurve {
            t_grid: grid.to_vec(),
            step,
            depths: self.depths(),
            per_depth,
            extrapolated,
            residual,
            derivative,
            summary,
            warnings,
        })
    }

    #[cfg(feature = "parallel")]
    fn rows(&self, grid: &[f64]) -> Vec<(Vec<f64>, f64, f64, f64)> {
        use rayon::prelude::*;
        if self.parallel {
            grid.par_iter().map(|&t| self.row(t)).collect()
        } else {
            grid.iter().map(|&t| self.row(t)).collect()
        }
    }

    #[cfg(not(feature = "parallel"))]
    fn rows(&self, grid: &[f64]) -> Vec<(Vec<f64>, f64, f64, f64)> {
        grid.iter().map(|&t| self.row(t)).collect()
    }

    fn row(&self, t: f64) -> (Vec<f64>, f64, f64, f64) {
        let (v, d): (Vec<f64>, Vec<f64>) = self.tables.iter().map(|x| x.pressure_and_slope(t)).unzip();
        let (p, r) = self.extrapolate(&v);
        (v, p, r, self.extrapolate(&d).0)
    }
}

/// Midpoint-concavity and monotonicity slack used by the warnings.
pub const CONCAVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSummary {
    pub d0: f64,
    /// Smallest `log‖A_ī‖ / log λ_ī` at the deepest level. Finite-depth
    /// extremes approach the limit from inside the true range.
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// `P'(0)`.
    pub alpha_hat: f64,
    /// `P(t)/t` at the low grid end, a cross-check for `alpha_max`.
    pub slope_low: f64,
    /// `P(t)/t` at the high grid end, a cross-check for `alpha_min`.
    pub slope_high: f64,
    pub derivative_at_d0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureCurve {
    pub t_grid: Vec<f64>,
    pub step: f64,
    pub depths: Vec<usize>,
    /// `per_depth[k][j]` is `P_{depths[k]}(t_grid[j])`.
    pub per_depth: Vec<Vec<f64>>,
    pub extrapolated: Vec<f64>,
    pub residual: Vec<f64>,
    pub derivative: Vec<f64>,
    pub summary: PressureSummary,
    pub warnings: Vec<String>,
}

impl PressureCurve {
    /// Builds the model and tabulates it in one go.
    pub fn compute(
        system: &MatrixSystem,
        grid: &[f64],
        depths: &[usize],
        opts: &PressureOptions,
    ) -> Result<PressureCurve> {
        PressureModel::new(system, depths, opts)?.curve(grid)
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let g = &self.t_grid;
        let n = g.len();
        if t <= g[0] {
            return (0, 0.0);
        }
        if t >= g[n - 1] {
            return (n - 2, 1.0);
        }
        let k = g.partition_point(|x| *x <= t).saturating_sub(1).min(n - 2);
        (k, (t - g[k]) / (g[k + 1] - g[k]))
    }

    fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let (k, u) = self.locate(t);
        if u == 0.0 {
            return values[k];
        }
        if u == 1.0 {
            return values[k + 1];
        }
        values[k] + u * (values[k + 1] - values[k])
    }

    /// Cubic Hermite interpolant of `P` on cell `k` at local coordinate `u`.
    fn hermite(&self, k: usize, u: f64) -> f64 {
        let h = self.t_grid[k + 1] - self.t_grid[k];
        let (p0, p1) = (self.extrapolated[k], self.extrapolated[k + 1]);
        let (m0, m1) = (self.derivative[k], self.derivative[k + 1]);
        let (u2, u3) = (u * u, u * u * u);
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0
            + (u3 - 2.0 * u2 + u) * h * m0
            + (-2.0 * u3 + 3.0 * u2) * p1
            + (u3 - u2) * h * m1
    }

    /// Derivative in `t` of [`Self::hermite`].
    fn hermite_slope(&self, k: usize, u: f64) -> f64 {
        let h = self.t_grid[k + 1] - self.t_grid[k];
        let (p0, p1) = (self.extrapolated[k], self.extrapolated[k + 1]);
        let (m0, m1) = (self.derivative[k], self.derivative[k + 1]);
        let u2 = u * u;
        (6.0 * u2 - 6.0 * u) * (p0 - p1) / h + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (3.0 * u2 - 2.0 * u) * m1
    }

    /// `P(t)` by cubic Hermite interpolation on the grid, constant beyond
    /// its ends.
    pub fn value_at(&self, t: f64) -> f64 {
        let (k, u) = self.locate(t);
        if u == 0.0 {
            return self.extrapolated[k];
        }
        if u == 1.0 {
            return self.extrapolated[k + 1];
        }
        self.hermite(k, u)
    }

    pub fn derivative_at(&self, t: f64) -> f64 {
        self.interpolate(&self.derivative, t)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_grid[0] && t <= self.t_grid[self.t_grid.len() - 1]
    }

    /// Largest violation of `P((a+b)/2) ≥ (P(a)+P(b))/2` over consecutive triples.
    pub fn concavity_excess(&self) -> f64 {
        let p = &self.extrapolated;
        (1..p.len() - 1)
            .map(|k| 0.5 * (p[k - 1] + p[k + 1]) - p[k])
            .fold(0.0, f64::max)
    }

    /// Largest decrease between consecutive grid points.
    pub fn monotonicity_excess(&self) -> f64 {
        let p = &self.extrapolated;
        (1..p.len()).map(|k| p[k - 1] - p[k]).fold(0.0, f64::max)
    }

    /// The flat case `P' ≡ const` where the spectrum is a single point.
    pub fn is_degenerate(&self) -> bool {
        self.summary.alpha_max - self.summary.alpha_min <= 1e-9
    }
}

/// `D(β)` and the minimizing `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendrePoint {
    pub beta: f64,
    pub value: f64,
    pub t_star: f64,
    /// `β` lay outside the derivative range of the grid; the value is the
    /// infimum over the grid, attained at its end.
    pub clamped: bool,
}

/// `inf_t { tβ − P(t) }` on the tabulated curve.
pub fn legendre(curve: &PressureCurve, beta: f64, tol: f64) -> Result<LegendrePoint> {
    let s = &curve.summary;
    if beta < s.alpha_min - tol || beta > s.alpha_max + tol {
        return Err(Error::Domain {
            value: beta,
            lo: s.alpha_min,
            hi: s.alpha_max,
        });
    }
    if beta == s.alpha_hat && curve.contains(0.0) {
        return Ok(LegendrePoint {
            beta,
            value: -curve.value_at(0.0),
            t_star: 0.0,
            clamped: false,
        });
    }
    let g = &curve.t_grid;
    let p = &curve.extrapolated;
    let dp = &curve.derivative;
    let n = g.len();
    let end = |k: usize| LegendrePoint {
        beta,
        value: g[k] * beta - p[k],
        t_star: g[k],
        clamped: true,
    };
    if beta > dp[0] {
        return Ok(end(0));
    }
    if beta < dp[n - 1] {
        return Ok(end(n - 1));
    }
    for k in 0..n - 1 {
        if dp[k] >= beta && beta >= dp[k + 1] {
            let node = |j: usize| g[j] * beta - p[j];
            let (t, value) = if dp[k] == beta {
                (g[k], node(k))
            } else if dp[k + 1] == beta {
                (g[k + 1], node(k + 1))
            } else {
                // H' decreases from dp[k] to dp[k+1] on this cell for a
                // concave curve; bisect for H'(t) = β
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if curve.hermite_slope(k, mid) > beta {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let u = 0.5 * (lo + hi);
                let t = g[k] + u * (g[k + 1] - g[k]);
                // the infimum is never above its value at the nodes
                (t, (t * beta - curve.hermite(k, u)).min(node(k)).min(node(k + 1)))
            };
            return Ok(LegendrePoint {
                beta,
                value,
                t_star: t,
                clamped: false,
            });
        }
    }
    // derivative not monotone on the grid: take the grid minimum directly
    let (k, _) = (0..n)
        .map(|k| (k, g[k] * beta - p[k]))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    Ok(LegendrePoint {
        beta,
        value: g[k] * beta - p[k],
        t_star: g[k],
        clamped: false,
    })
}

/// Which result guarantees the spectrum value at a given `β`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowTag {
    /// `β = α̂`, the Lebesgue-typical exponent.
    Typical,
    /// Guaranteed only on an unquantified neighbourhood above `α̂`.
    Qualitative,
    /// Below `α̂`, covered for symmetric systems.
    SymmetricExtension,
    /// The whole range, under Assumption A.
    AssumptionA,
}

impl WindowTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            WindowTag::Typical => "typical",
            WindowTag::Qualitative => "qualitative",
            WindowTag::SymmetricExtension => "symmetric-extension",
            WindowTag::AssumptionA => "assumption-a",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpectrumFlags {
    pub symmetric: bool,
    pub assumption_a: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub beta: f64,
    pub value: f64,
    pub t_star: f64,
    pub tag: WindowTag,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    pub points: Vec<SpectrumPoint>,
    /// Under Assumption A the same values describe the regular exponent.
    pub regular_exponent: bool,
    pub degenerate: bool,
}

/// `count` evenly spaced values on `[α_min, α_max]`.
pub fn auto_betas(curve: &PressureCurve, count: usize) -> Vec<f64> {
    let s = &curve.summary;
    if count < 2 || curve.is_degenerate() {
        return alloc::vec![s.alpha_hat];
    }
    (0..count)
        .map(|k| s.alpha_min + (s.alpha_max - s.alpha_min) * k as f64 / (count - 1) as f64)
        .collect()
}

pub fn spectrum_curve(
    curve: &PressureCurve,
    betas: &[f64],
    flags: SpectrumFlags,
    tol: f64,
) -> Result<SpectrumCurve> {
    let s = &curve.summary;
    if curve.is_degenerate() {
        return Ok(SpectrumCurve {
            points: alloc::vec![SpectrumPoint {
                beta: s.alpha_hat,
                value: -curve.value_at(0.0),
                t_star: 0.0,
                tag: WindowTag::Typical,
                clamped: false,
            }],
            regular_exponent: flags.assumption_a,
            degenerate: true,
        });
    }
    let points = betas
        .iter()
        .map(|&b| {
            let l = legendre(curve, b, tol)?;
            let tag = if b == s.alpha_hat {
                WindowTag::Typical
            } else if flags.assumption_a {
                WindowTag::AssumptionA
            } else if b < s.alpha_hat && flags.symmetric {
                WindowTag::SymmetricExtension
            } else {
                WindowTag::Qualitative
            };
            Ok(SpectrumPoint {
                beta: b,
                value: l.value,
                t_star: l.t_star,
                tag,
                clamped: l.clamped,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumCurve {
        points,
        regular_exponent: flags.assumption_a,
        degenerate: false,
    })
}

/// `‖A_ī‖^t λ_ī^{-P(t)}` with `P(t)` read from the curve.
pub fn gibbs_weight(system: &MatrixSystem, curve: &PressureCurve, word: &Word, t: f64, norm: NormKind) -> f64 {
    let p = curve.value_at(t);
    let a = word.product(system.matrices()).norm(norm);
    let l = word.weight(system.weights());
    math::exp(t * math::ln(a) - p * math::ln(l))
}

/// Sum of the Gibbs weights over all words of length `n`.
pub fn gibbs_normalizer(
    system: &MatrixSystem,
    curve: &PressureCurve,
    n: usize,
    t: f64,
    opts: &PressureOptions,
) -> Result<f64> {
    let table = DepthTable::new(system, n, opts)?;
    Ok(math::exp(table.log_partition(t, curve.value_at(t))))
}

/// `t P'(t) − P(t)`, the dimension of the Gibbs measure.
pub fn gibbs_dimension(curve: &PressureCurve, t: f64) -> f64 {
    if t == 0.0 {
        return -curve.value_at(0.0);
    }
    t * curve.derivative_at(t) - curve.value_at(t)
}

/// Outcome of the symmetry test `λ_0 = λ_{N-1}`, `‖A_0^k‖ = ‖A_{N-1}^k‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub weights_equal: bool,
    /// Largest `|‖A_0^k‖ / ‖A_{N-1}^k‖ − 1|` over `k ≤ max_power`.
    pub max_deviation: f64,
    pub symmetric: bool,
}

pub fn symmetry_check(system: &MatrixSystem, max_power: usize, norm: NormKind) -> SymmetryReport {
    let n = system.len();
    let a = &system.matrices[0];
    let b = &system.matrices[n - 1];
    let mut pa = Matrix::identity(system.dim());
    let mut pb = pa.clone();
    let mut dev: f64 = 0.0;
    for _ in 0..max_power {
        pa = pa.mul(a);
        pb = pb.mul(b);
        dev = dev.max(math::abs(pa.norm(norm) / pb.norm(norm) - 1.0));
    }
    let weights_equal = system.weights[0] == system.weights[n - 1];
    SymmetryReport {
        weights_equal,
        max_deviation: dev,
        symmetric: weights_equal && dev <= 1e-12,
    }
}

/// One bin of the counting spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingPoint {
    pub beta: f64,
    /// `log #bin / (−log r)`; `-inf` for an empty bin.
    pub value: f64,
    pub count: usize,
}

/// Counts cylinders of `Ξ_r` with `log‖A_ī‖ / log λ_ī ∈ [β−δ, β+δ]`.
pub fn counting_spectrum(
    system: &MatrixSystem,
    r: f64,
    delta: f64,
    betas: &[f64],
    opts: &PressureOptions,
) -> Result<Vec<CountingPoint>> {
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("bin half-width must be positive, got {delta}")));
    }
    let leaves = collect_leaves(
        &system.matrices,
        &system.weights,
        opts.norm,
        LeafRule::Weight(r),
        opts.budget,
        opts.parallel,
    )?;
    let mut ratios: Vec<f64> = leaves
        .groups
        .iter()
        .flat_map(|g| g.log_norms.iter().map(move |l| l / g.log_weight))
        .collect();
    ratios.sort_by(f64::total_cmp);
    let scale = -math::ln(r);
    Ok(betas
        .iter()
        .map(|&b| {
            let lo = ratios.partition_point(|x| *x < b - delta - 1e-12);
            let hi = ratios.partition_point(|x| *x <= b + delta + 1e-12);
            let count = hi - lo;
            let value = if count == 0 {
                f64::NEG_INFINITY
            } else {
                math::ln(count as f64) / scale
            };
            CountingPoint { beta: b, value, count }
        })
        .collect())
}

/// `lo, lo+step, …` up to `hi` (inclusive within rounding). Values within
/// `1e-9 · step` of zero are snapped to zero so `t = 0` is hit exactly.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Parameter(format!("bad grid {lo}:{hi}:{step}")));
    }
    let n = math::floor((hi - lo) / step + 1e-9) as usize;
    if n > 10_000_000 {
        return Err(Error::Parameter(format!("grid {lo}:{hi}:{step} has too many points")));
    }
    Ok((0..=n)
        .map(|k| {
            let t = lo + k as f64 * step;
            if math::abs(t) < 1e-9 * step {
                0.0
            } else {
                t
            }
        })
        .collect())
}
