//! De Rham's curve as a two-map zipper, with the computations specific to it.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::cones::Transform;
use crate::linalg::Matrix;
use crate::math;
use crate::pressure::PressureCurve;
use crate::symbolic::Word;
use crate::zipper::{AffineMap, Zipper};
use crate::{Error, Result};

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain {
            value: omega,
            lo: 0.0,
            hi: 0.5,
        })
    }
}

pub fn matrices(omega: f64) -> Result<[Matrix; 2]> {
    check_omega(omega)?;
    let w = omega;
    Ok([
        Matrix::from_rows([[w, 0.0], [w, 1.0 - 2.0 * w]]),
        Matrix::from_rows([[1.0 - 2.0 * w, w], [0.0, w]]),
    ])
}

/// The zipper `f_0(x) = A_0 x + (0, −2ω)`, `f_1(x) = A_1 x + (2ω, 0)` with
/// equal weights and no reversal. The vertices are computed: `z_0` and `z_2`
/// are the fixed points of `f_0` and `f_1`, and `z_1 = f_0(z_2)`.
pub fn build(omega: f64) -> Result<Zipper> {
    let [a0, a1] = matrices(omega)?;
    let f0 = AffineMap::new(a0, vec![0.0, -2.0 * omega])?;
    let f1 = AffineMap::new(a1, vec![2.0 * omega, 0.0])?;
    let z0 = f0.fixed_point()?;
    let z2 = f1.fixed_point()?;
    let z1 = f0.apply(&z2);
    Zipper::new(vec![f0, f1], vec![z0, z1, z2], vec![false, false], vec![0.5, 0.5])
}

/// Known limitations for special parameters, `None` when the full set of
/// guarantees applies.
pub fn capability_note(omega: f64) -> Option<&'static str> {
    if omega == 0.25 {
        Some("smooth case: parabola arc")
    } else if math::abs(omega - 1.0 / 3.0) < 1e-15 {
        Some("no dominated splitting; spectrum guarantees do not apply")
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `D̃_ε = [[1, ε], [ε, 1]]`.
    Tilde,
    /// `D̂_δ = [[1, −δ], [−δ, 1]]`.
    Hat,
}

impl Family {
    pub fn transform(&self, param: f64) -> Transform {
        match self {
            Family::Tilde => Transform::Tilde(param),
            Family::Hat => Transform::Hat(param),
        }
    }
}

/// Open interval of `ω` for which conjugation by the given family member
/// makes both matrices strictly positive.
pub fn positivity_window(family: Family, param: f64) -> Result<(f64, f64)> {
    if !(param > 0.0 && param < 1.0) {
        return Err(Error::Domain {
            value: param,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(match family {
        Family::Tilde => (1.0 / (3.0 - param), 1.0 / (2.0 - param - param * param)),
        Family::Hat => (param / (1.0 + 3.0 * param), 1.0 / (3.0 + param)),
    })
}

/// A family member whose window contains `ω`: the midpoint of the admissible
/// parameter range. `None` for `ω = ⅓`, which no member covers.
pub fn admissible_transform(omega: f64) -> Result<Option<(Family, f64)>> {
    check_omega(omega)?;
    let third = 1.0 / 3.0;
    if omega < third {
        // δ/(1+3δ) < ω and ω < 1/(3+δ)
        let hi = (omega / (1.0 - 3.0 * omega)).min(1.0 / omega - 3.0).min(1.0);
        Ok(Some((Family::Hat, 0.5 * hi)))
    } else if omega > third {
        // 1/(3−ε) < ω; the upper bound exceeds ½ for every ε ∈ (0,1)
        let hi = (3.0 - 1.0 / omega).min(1.0);
        Ok(Some((Family::Tilde, 0.5 * hi)))
    } else {
        Ok(None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticReport {
    /// Row sums of `A_0 + A_1`.
    pub row_sums: [f64; 2],
    pub row_residual: f64,
    pub p: [f64; 2],
    pub e: [f64; 2],
    /// `‖pᵀM − pᵀ‖`.
    pub left_residual: f64,
    /// `‖Me − e‖`.
    pub right_residual: f64,
    pub stochastic: bool,
}

pub fn stochastic_check(omega: f64) -> Result<StochasticReport> {
    let [a0, a1] = matrices(omega)?;
    let m = a0.add(&a1);
    let row_sums = [m.get(0, 0) + m.get(0, 1), m.get(1, 0) + m.get(1, 1)];
    let p = [0.5, 0.5];
    let e = [1.0, 1.0];
    let pm = m.transpose().apply(&p);
    let me = m.apply(&e);
    let left_residual = math::abs(pm[0] - p[0]).max(math::abs(pm[1] - p[1]));
    let right_residual = math::abs(me[0] - 1.0).max(math::abs(me[1] - 1.0));
    let row_residual = math::abs(row_sums[0] - 1.0).max(math::abs(row_sums[1] - 1.0));
    Ok(StochasticReport {
        row_sums,
        row_residual,
        p,
        e,
        left_residual,
        right_residual,
        stochastic: row_residual == 0.0,
    })
}

/// `μ_1([ī]) = pᵀ A_ī e` with `p = (½, ½)`, `e = (1, 1)`.
pub fn mu1_weight(omega: f64, word: &Word) -> Result<f64> {
    let ms = matrices(omega)?;
    word.check_alphabet(2)?;
    let q = word.product(&ms);
    let v = q.apply(&[1.0, 1.0]);
    Ok(0.5 * (v[0] + v[1]))
}

/// `|μ_1([00]) − ¼| > 1e-9`: the measures `μ_0` and `μ_1` differ, so the
/// derivative of the pressure is strictly above 1 at 0 and below at 1.
pub fn mu1_gate(omega: f64) -> Result<bool> {
    Ok(math::abs(mu1_weight(omega, &Word::new(vec![0, 0]))? - 0.25) > 1e-9)
}

/// `τ` with `P'(τ) = 1` and `τ − P(τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NondiffDimension {
    pub t_star: f64,
    pub dim: f64,
    /// Extrapolation residual of `P` at `t_star`.
    pub residual: f64,
    /// `P' ≡ 1` on the grid; `dim` is then `−P(0)`.
    pub degenerate: bool,
}

/// Solves `P'(τ) = 1` on the tabulated (decreasing) derivative.
pub fn nondiff_dimension_of(curve: &PressureCurve) -> Result<NondiffDimension> {
    let d = &curve.derivative;
    let g = &curve.t_grid;
    if d.iter().all(|x| math::abs(x - 1.0) <= 1e-9) {
        return Ok(NondiffDimension {
            t_star: 0.0,
            dim: -curve.value_at(0.0),
            residual: interp(g, &curve.residual, 0.0),
            degenerate: true,
        });
    }
    let k = (0..d.len() - 1)
        .find(|&k| d[k] >= 1.0 && d[k + 1] < 1.0)
        .ok_or_else(|| {
            Error::NoCrossing(format!("P' stays on one side of 1 over [{}, {}]", g[0], g[g.len() - 1]))
        })?;
    let t_star = if d[k] == 1.0 {
        g[k]
    } else {
        g[k] + (g[k + 1] - g[k]) * (d[k] - 1.0) / (d[k] - d[k + 1])
    };
    Ok(NondiffDimension {
        t_star,
        dim: t_star - curve.value_at(t_star),
        residual: interp(g, &curve.residual, t_star),
        degenerate: false,
    })
}

fn interp(g: &[f64], v: &[f64], t: f64) -> f64 {
    let k = g.partition_point(|x| *x <= t).saturating_sub(1).min(g.len() - 2);
    let u = ((t - g[k]) / (g[k + 1] - g[k])).clamp(0.0, 1.0);
    v[k] + u * (v[k + 1] - v[k])
}

/// [`nondiff_dimension_of`] for de Rham's curve. Refuses the smooth case
/// `ω = ¼` and, when [`mu1_gate`] holds, requires `P'(1) < 1 < P'(0)`.
pub fn nondiff_dimension(omega: f64, curve: &PressureCurve) -> Result<NondiffDimension> {
    check_omega(omega)?;
    if omega == 0.25 {
        return Err(Error::SmoothCase("omega = 1/4 gives a parabola arc with P' = 1".into()));
    }
    if mu1_gate(omega)? && curve.contains(0.0) && curve.contains(1.0) {
        let (d0, d1) = (curve.derivative_at(0.0), curve.derivative_at(1.0));
        if !(d1 < 1.0 && 1.0 < d0) {
            return Err(Error::Failed(format!(
                "expected P'(1) < 1 < P'(0), got P'(1) = {d1}, P'(0) = {d0}"
            )));
        }
    }
    nondiff_dimension_of(curve)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedDimension {
    /// `1 / P'(0)`.
    pub value: f64,
    /// Smooth or straight case where the value is exactly 1.
    pub degenerate: bool,
}

pub fn projected_measure_dim(curve: &PressureCurve) -> ProjectedDimension {
    if curve.is_degenerate() {
        return ProjectedDimension {
            value: 1.0,
            degenerate: true,
        };
    }
    ProjectedDimension {
        value: 1.0 / curve.summary.alpha_hat,
        degenerate: false,
    }
}

/// Human-readable summary of the special-parameter status.
pub fn describe(omega: f64) -> String {
    match capability_note(omega) {
        Some(n) => format!("omega = {omega}: {n}"),
        None => format!("omega = {omega}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::check_positivity;
    use crate::linalg::NormKind;
    use alloc::vec::Vec;
    use crate::pressure::{grid, symmetry_check, PressureOptions};
    use crate::zipper::ValidationOptions;

    #[test]
    fn vertices_and_validation() {
        for w in [0.1, 0.25, 1.0 / 3.0, 0.4] {
            let z = build(w).unwrap();
            let v = z.vertices();
            assert!((v[0][0]).abs() < 1e-15 && (v[0][1] + 1.0).abs() < 1e-15);
            assert!((v[1][0] - w).abs() < 1e-15 && (v[1][1] + w).abs() < 1e-15);
            assert!((v[2][0] - 1.0).abs() < 1e-15 && v[2][1].abs() < 1e-15);
            let r = z.validate(&ValidationOptions::default());
            assert!(r.passed());
            assert!(r.cross_residual < 1e-12);
        }
        assert!(build(0.5).is_err());
        assert!(build(0.0).is_err());
        assert_eq!(capability_note(0.25), Some("smooth case: parabola arc"));
        assert!(capability_note(1.0 / 3.0).unwrap().contains("no dominated splitting"));
        assert_eq!(capability_note(0.1), None);
    }

    #[test]
    fn windows() {
        let (lo, hi) = positivity_window(Family::Hat, 0.4).unwrap();
        assert!((lo - 0.4 / 2.2).abs() < 1e-15 && (hi - 1.0 / 3.4).abs() < 1e-15);
        let (lo, hi) = positivity_window(Family::Tilde, 1e-9).unwrap();
        assert!((lo - 1.0 / 3.0).abs() < 1e-9 && (hi - 0.5).abs() < 1e-9);
        let (lo, hi) = positivity_window(Family::Hat, 1e-9).unwrap();
        assert!(lo < 1e-8 && (hi - 1.0 / 3.0).abs() < 1e-9);
        assert!(positivity_window(Family::Hat, 1.0).is_err());
    }

    #[test]
    fn admissible_transforms_make_matrices_positive() {
        for k in 1..50 {
            let w = k as f64 / 100.0;
            if (w - 1.0 / 3.0).abs() < 1e-12 {
                continue;
            }
            let (f, p) = admissible_transform(w).unwrap().unwrap();
            let (lo, hi) = positivity_window(f, p).unwrap();
            assert!(lo < w && w < hi, "{w}");
            let d = f.transform(p).matrix();
            let conj: Vec<Matrix> = matrices(w).unwrap().iter().map(|m| m.conjugate(&d).unwrap()).collect();
            assert!(check_positivity(&conj).positive, "{w}");
        }
        assert!(admissible_transform(1.0 / 3.0).unwrap().is_none());
    }

    #[test]
    fn stochastic_and_mu1() {
        for w in [0.1, 0.3] {
            let r = stochastic_check(w).unwrap();
            assert_eq!(r.row_sums, [1.0, 1.0]);
            assert!(r.stochastic);
        }
        let w = 0.1;
        let m = mu1_weight(w, &Word::new(vec![0, 0])).unwrap();
        let expected = w * w + (1.0 - 2.0 * w) * w / 2.0 + (1.0 - 2.0 * w).powi(2) / 2.0;
        assert!((m - expected).abs() < 1e-15);
        assert!((m - 0.37).abs() < 1e-12);
        assert_eq!(mu1_weight(w, &Word::empty()).unwrap(), 1.0);
        assert!(mu1_gate(0.1).unwrap());
        assert!(!mu1_gate(0.25).unwrap());
    }

    #[test]
    fn symmetry_of_the_pair() {
        let z = build(0.1).unwrap();
        let r = symmetry_check(&z.matrix_system().unwrap(), 30, NormKind::Spectral);
        assert!(r.symmetric, "{}", r.max_deviation);
    }

    #[test]
    fn dimensions_at_point_one() {
        let z = build(0.1).unwrap();
        let g = grid(-1.0, 3.0, 0.05).unwrap();
        let c = PressureCurve::compute(&z.matrix_system().unwrap(), &g, &[8, 10, 12], &PressureOptions::default()).unwrap();
        let n = nondiff_dimension(0.1, &c).unwrap();
        assert!(n.dim > 0.0 && n.dim < 1.0, "{n:?}");
        assert!(n.t_star > 0.0 && n.t_star < 1.0);
        let p = projected_measure_dim(&c);
        assert!(p.value > 0.0 && p.value < 1.0);
        assert!(matches!(nondiff_dimension(0.25, &c), Err(Error::SmoothCase(_))));
    }
}
