//! Worked examples checked through the public API.

use zipper_core::cones;
use zipper_core::derham;
use zipper_core::holder::{self, DirectOptions};
use zipper_core::pressure::{self, DepthTable, PressureCurve, PressureOptions};
use zipper_core::symbolic::{self, distance_bracket, wedge, xi_partition};
use zipper_core::zipper::ValidationOptions;
use zipper_core::{AffineMap, Matrix, MatrixSystem, NormKind, SymbolStream, Word, Zipper};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn st(s: &str) -> SymbolStream {
    SymbolStream::parse(s, 3).unwrap()
}

fn line() -> Zipper {
    let h = Matrix::scalar(2, 0.5);
    Zipper::new(
        vec![
            AffineMap::new(h.clone(), vec![0.0, 0.0]).unwrap(),
            AffineMap::new(h, vec![0.5, 0.0]).unwrap(),
        ],
        vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![1.0, 0.0]],
        vec![false, false],
        vec![0.5, 0.5],
    )
    .unwrap()
}

fn asym() -> MatrixSystem {
    MatrixSystem::scalar(&[0.25, 0.5], &[0.5, 0.5], 2).unwrap()
}

fn opts() -> PressureOptions {
    PressureOptions::default()
}

#[test]
fn derham_vertices_and_validation() {
    let z = derham::build(0.1).unwrap();
    let v = z.vertices();
    for (got, want) in v.iter().zip([[0.0, -1.0], [0.1, -0.1], [1.0, 0.0]]) {
        assert!(close(got[0], want[0], 1e-12) && close(got[1], want[1], 1e-12), "{got:?}");
    }
    let report = z.validate(&ValidationOptions::default());
    assert!(report.passed(), "{report:?}");
    assert!(report.cross_residual < 1e-12);
}

#[test]
fn perturbed_vertex_fails_at_first_map() {
    let z = derham::build(0.1).unwrap();
    let mut vs = z.vertices().to_vec();
    vs[1] = vec![0.1, -0.2];
    let bad = Zipper::new(z.maps().to_vec(), vs, z.signature().to_vec(), z.weights().to_vec()).unwrap();
    let report = bad.validate(&ValidationOptions::default());
    assert!(!report.passed());
    let f = report.failures.iter().find(|f| f.index == Some(0)).expect("map 0 flagged");
    assert!(close(f.residual, 0.1, 1e-12), "{f:?}");
}

#[test]
fn curve_points() {
    let z = derham::build(0.1).unwrap();
    let p0 = z.evaluate_v(0.0, 1e-12).unwrap();
    assert!(close(p0.position[0], 0.0, 1e-10) && close(p0.position[1], -1.0, 1e-10));
    let half = z.evaluate_v(0.5, 1e-12).unwrap();
    assert!(close(half.position[0], 0.1, 1e-10) && close(half.position[1], -0.1, 1e-10));
    let l = line().evaluate_v(0.3, 1e-12).unwrap();
    assert!(close(l.position[0], 0.3, 1e-10) && close(l.position[1], 0.0, 1e-10));

    let pts = line().sample_curve(2, 1 << 20).unwrap();
    let xs: Vec<f64> = pts.iter().map(|p| p.position[0]).collect();
    assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let pts = z.sample_curve(3, 1 << 20).unwrap();
    assert_eq!(pts.len(), 9);
    for w in pts.windows(2) {
        assert!(close(w[1].parameter - w[0].parameter, 0.125, 1e-15));
    }
}

#[test]
fn symbolic_examples() {
    assert_eq!(wedge(&st("010(0)"), &st("011(0)")).unwrap(), 2);
    assert_eq!(wedge(&st("(0)"), &st("1(0)")).unwrap(), 0);
    assert_eq!(wedge(&st("(012)"), &st("012012100(0)")).unwrap(), 6);

    let half = [0.5, 0.5];
    let two = SymbolStream::parse("0(1)", 2).unwrap();
    assert!(close(symbolic::pi_project_with(&half, &[false, false], &two), 0.5, 1e-15));
    let one = SymbolStream::parse("(1)", 2).unwrap();
    assert!(close(symbolic::pi_project_with(&half, &[false, false], &one), 1.0, 1e-15));
    let third = [1.0 / 3.0; 3];
    assert!(close(symbolic::pi_project_with(&third, &[false; 3], &st("(1)")), 0.5, 1e-15));

    let z = derham::build(0.1).unwrap();
    let (p, err) = symbolic::big_pi_project(&z, &SymbolStream::parse("1(0)", 2).unwrap(), 1e-12).unwrap();
    assert!(err <= 1e-12 && close(p[0], 0.1, 1e-11) && close(p[1], -0.1, 1e-11), "{p:?}");
}

#[test]
fn stopping_time_partitions() {
    let words = |ws: &[f64], r: f64| -> Vec<String> {
        xi_partition(ws, r, 1 << 20)
            .unwrap()
            .words
            .iter()
            .map(|w| w.format(ws.len()))
            .collect()
    };
    assert_eq!(words(&[0.5, 0.5], 0.3), ["00", "01", "10", "11"]);
    assert_eq!(words(&[0.5, 0.25, 0.25], 0.3), ["00", "01", "02", "1", "2"]);
    assert_eq!(words(&[0.5, 0.5], 0.5), ["0", "1"]);
}

#[test]
fn top_level_bracket_is_two() {
    let b = distance_bracket(&[0.5, 0.5], &st("(0)"), &st("(1)")).unwrap();
    assert_eq!(b.level, 0);
    assert!(close(b.s, 2.0, 1e-15));
}

#[test]
fn scalar_pressure_values() {
    let straight = MatrixSystem::scalar(&[0.5, 0.5], &[0.5, 0.5], 2).unwrap();
    for n in [1, 3, 6] {
        assert!(close(DepthTable::new(&straight, n, &opts()).unwrap().pressure(3.0), 2.0, 1e-12));
        let t = DepthTable::new(&asym(), n, &opts()).unwrap();
        assert!(close(t.pressure(0.0), -1.0, 1e-12));
        assert!(close(t.pressure(1.0), -(0.75f64).log2(), 1e-12));
    }
}

#[test]
fn asymmetric_scalar_summary() {
    let grid = pressure::grid(-4.0, 4.0, 0.05).unwrap();
    let c = PressureCurve::compute(&asym(), &grid, &[4, 8, 12], &opts()).unwrap();
    for (t, p) in c.t_grid.iter().zip(&c.extrapolated) {
        let want = -(4f64.powf(-t) + 2f64.powf(-t)).log2();
        assert!(close(*p, want, 1e-10), "t={t}: {p} vs {want}");
    }
    let s = &c.summary;
    assert!(close(s.alpha_min, 1.0, 1e-9) && close(s.alpha_max, 2.0, 1e-9));
    assert!(close(s.alpha_hat, 1.5, 1e-9));
    assert!(close(s.d0, 0.694242, 1e-6), "{}", s.d0);

    let at_hat = pressure::legendre(&c, 1.5, 1e-10).unwrap();
    assert!(close(at_hat.value, 1.0, 1e-9) && close(at_hat.t_star, 0.0, 1e-6));
    // the infimum at β = α_max sits at t = −∞; a grid reaching t = −10 gets
    // within log2(1 + 2^-10) of it
    let wide = PressureCurve::compute(&asym(), &pressure::grid(-10.0, 4.0, 0.05).unwrap(), &[4, 8, 12], &opts()).unwrap();
    let at_two = pressure::legendre(&wide, 2.0, 1e-10).unwrap();
    assert!(at_two.clamped && close(at_two.value, (1.0 + 2f64.powi(-10)).log2(), 1e-9), "{at_two:?}");
    assert!(close(pressure::gibbs_dimension(&c, 0.0), 1.0, 1e-12));
    assert!(close(pressure::gibbs_dimension(&c, 1.0), 4.0 / 3.0 - 0.415037, 1e-5));
}

#[test]
fn straight_line_spectrum_is_one_point() {
    let sys = line().matrix_system().unwrap();
    let grid = pressure::grid(-2.0, 2.0, 0.1).unwrap();
    let c = PressureCurve::compute(&sys, &grid, &[4, 8], &opts()).unwrap();
    assert!(c.is_degenerate());
    assert!(close(c.summary.d0, 1.0, 1e-9) && close(c.summary.alpha_hat, 1.0, 1e-9));
    let p = pressure::legendre(&c, 1.0, 1e-10).unwrap();
    assert!(close(p.value, 1.0, 1e-9));
    let w = pressure::gibbs_weight(&sys, &c, &Word::new(vec![0, 1]), 0.7, NormKind::Spectral);
    assert!(close(w, 0.25, 1e-9));
}

#[test]
fn derham_pressure_and_dimensions() {
    let sys = derham::build(0.1).unwrap().matrix_system().unwrap();
    let grid = pressure::grid(-1.0, 2.0, 0.05).unwrap();
    let c = PressureCurve::compute(&sys, &grid, &[8, 12, 16], &opts()).unwrap();
    assert!(c.value_at(1.0).abs() < 3e-3, "{}", c.value_at(1.0));
    assert!(c.summary.d0 >= 1.0 - 0.02);
    assert!(c.summary.d0 * c.summary.derivative_at_d0 <= 1.0 + 1e-6);
    let sym = pressure::symmetry_check(&sys, 30, NormKind::Spectral);
    assert!(sym.symmetric, "{sym:?}");
}

#[test]
fn derham_cases() {
    assert!(derham::capability_note(0.25).unwrap().contains("parabola"));
    assert!(derham::capability_note(1.0 / 3.0).unwrap().contains("no dominated splitting"));
    assert!(derham::admissible_transform(1.0 / 3.0).unwrap().is_none());
    assert!(derham::admissible_transform(0.4).unwrap().is_some());
    assert!(derham::stochastic_check(0.1).unwrap().stochastic);
    let (lo, hi) = derham::positivity_window(derham::Family::Hat, 0.4).unwrap();
    assert!(close(lo, 0.4 / 2.2, 1e-15) && close(hi, 1.0 / 3.4, 1e-15));
}

#[test]
fn splitting_of_diagonal_pair_is_exact() {
    let d = Matrix::from_rows([[0.5, 0.0], [0.0, 0.25]]);
    let s = cones::splitting_diagnostic(&[d.clone(), d], 1, 10, 1 << 12, 0).unwrap();
    assert!(close(s.decay_rate, 0.5, 1e-12) && s.residual < 1e-12);
    assert!(!s.no_splitting);
}

#[test]
fn derham_splitting_ratios_decay() {
    let ms = derham::matrices(0.1).unwrap();
    let s = cones::splitting_diagnostic(&ms, 1, 14, 1 << 14, 1).unwrap();
    assert!(s.exhaustive.iter().all(|e| *e));
    assert!(s.decay_rate < 0.95);
    assert!(s.ratios.iter().all(|r| *r > 0.0 && *r <= 1.0));
    // the (01) words dominate and alternate, so only every other depth decreases
    for w in s.ratios.windows(3) {
        assert!(w[2] < w[0]);
    }
}

#[test]
fn holder_examples() {
    let sys = derham::build(0.1).unwrap().matrix_system().unwrap();
    let zero = symbolic_final(&sys, "(0)", 60);
    assert!(close(zero, 0.8f64.ln() / 0.5f64.ln(), 5e-3), "{zero}");
    // the ratio converges like 1/n, so two depths pin down the limit
    // log ρ(A_0 A_1) / log(1/4)
    let a = symbolic_final(&sys, "(01)", 20);
    let b = symbolic_final(&sys, "(01)", 30);
    let c = symbolic_final(&sys, "(01)", 40);
    assert!((c - b).abs() < (b - a).abs());
    let (tr, det) = (0.17f64, 0.0064f64);
    let rho = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
    assert!(close(3.0 * b - 2.0 * a, rho.ln() / 0.25f64.ln(), 1e-3), "{a} {b}");
    assert!(close(symbolic_final(&asym(), "(0)", 10), 2.0, 1e-12));

    let e = holder::estimate(&line(), 1.0 / 3.0, 30, &DirectOptions::default()).unwrap();
    assert!(close(e.direct_min, 1.0, 1e-6) && close(e.direct_regression, 1.0, 1e-6));
}

fn symbolic_final(sys: &MatrixSystem, stream: &str, depth: usize) -> f64 {
    let s = SymbolStream::parse(stream, 2).unwrap();
    *holder::symbolic_exponent(sys, &s, depth, NormKind::Spectral).unwrap().last().unwrap()
}

#[test]
fn gibbs_sampler_tracks_the_derivative() {
    let grid = pressure::grid(-1.0, 2.0, 0.05).unwrap();
    let c = PressureCurve::compute(&asym(), &grid, &[4, 8, 12], &opts()).unwrap();
    let samples = holder::gibbs_sampler(&asym(), &c, 1.0, 64, 400, 3).unwrap();
    let mean = samples
        .iter()
        .map(|s| symbolic_final_stream(&asym(), s, 64))
        .sum::<f64>()
        / samples.len() as f64;
    assert!(close(mean, 4.0 / 3.0, 0.02), "{mean}");
}

fn symbolic_final_stream(sys: &MatrixSystem, s: &SymbolStream, depth: usize) -> f64 {
    *holder::symbolic_exponent(sys, s, depth, NormKind::Spectral).unwrap().last().unwrap()
}

#[test]
fn well_ordered_line() {
    assert!(cones::well_ordered_check(&line(), 3, 0.05, 4).unwrap().pass);
}
