use proptest::prelude::*;
use zipper_core::derham;
use zipper_core::pressure::{DepthTable, PressureOptions};
use zipper_core::symbolic::{coding, pi_project_with, xi_partition};
use zipper_core::{Matrix, MatrixSystem, NormKind, SymbolStream, Word};

fn positive_pair() -> impl Strategy<Value = (Vec<[f64; 4]>, f64)> {
    (prop::collection::vec(prop::array::uniform4(0.05f64..0.45), 2), 0.2f64..0.8)
}

fn system(ms: &[[f64; 4]], w0: f64) -> MatrixSystem {
    MatrixSystem::new(
        ms.iter().map(|m| Matrix::from_rows([[m[0], m[1]], [m[2], m[3]]])).collect(),
        vec![w0, 1.0 - w0],
    )
    .unwrap()
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..1.0, 2..5).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pressure_at_zero_is_minus_one((ms, w0) in positive_pair(), n in 1usize..8) {
        let t = DepthTable::new(&system(&ms, w0), n, &PressureOptions::default()).unwrap();
        prop_assert!((t.pressure(0.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn finite_depth_pressure_is_concave_and_increasing((ms, w0) in positive_pair(), n in 1usize..7) {
        let t = DepthTable::new(&system(&ms, w0), n, &PressureOptions::default()).unwrap();
        let ps: Vec<f64> = (-20..=20).map(|k| t.pressure(k as f64 * 0.2)).collect();
        for w in ps.windows(3) {
            prop_assert!(w[1] < w[2]);
            prop_assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-9);
        }
    }

    #[test]
    fn partition_weights_sum_to_one(ws in weights(), r in 0.001f64..0.9) {
        let p = xi_partition(&ws, r, 1 << 20).unwrap();
        let total: f64 = p.words.iter().map(|w| w.weight(&ws)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for w in &p.words {
            let lw = w.weight(&ws);
            prop_assert!(lw <= r && lw / ws[*w.symbols().last().unwrap()] > r);
        }
    }

    #[test]
    fn projection_preserves_order(ws in weights(), a in prop::collection::vec(0usize..4, 8), b in prop::collection::vec(0usize..4, 8)) {
        let n = ws.len();
        let a: Vec<usize> = a.into_iter().map(|s| s % n).collect();
        let b: Vec<usize> = b.into_iter().map(|s| s % n).collect();
        let sig = vec![false; n];
        let pa = pi_project_with(&ws, &sig, &SymbolStream::new(a.clone(), vec![0]).unwrap());
        let pb = pi_project_with(&ws, &sig, &SymbolStream::new(b.clone(), vec![0]).unwrap());
        if a < b {
            prop_assert!(pa <= pb);
        } else if b < a {
            prop_assert!(pb <= pa);
        }
    }

    #[test]
    fn coding_lands_in_its_cylinder(ws in weights(), flips in prop::collection::vec(any::<bool>(), 4), x in 0.0f64..=1.0) {
        let sig: Vec<bool> = flips[..ws.len()].to_vec();
        let w = coding(&ws, &sig, x, 12).unwrap();
        let lo = pi_project_with(&ws, &sig, &SymbolStream::new(w.symbols().to_vec(), vec![0]).unwrap());
        prop_assert!((lo - x).abs() <= w.weight(&ws) + 1e-12);
    }

    #[test]
    fn derham_curve_is_continuous(omega in 0.02f64..0.48, depth in 1usize..9) {
        let z = derham::build(omega).unwrap();
        prop_assert!(z.adjacency_residual(depth, 1 << 16).unwrap() < 1e-12);
    }

    #[test]
    fn mu1_is_a_probability(omega in 0.02f64..0.48, n in 1usize..9) {
        let mut total = 0.0;
        for idx in 0..(1usize << n) {
            let w = Word::new((0..n).rev().map(|k| (idx >> k) & 1).collect());
            let m = derham::mu1_weight(omega, &w).unwrap();
            prop_assert!(m >= -1e-15);
            total += m;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derham_maps_have_matching_powers(omega in 0.02f64..0.48, k in 1usize..25) {
        let [a0, a1] = derham::matrices(omega).unwrap();
        let p = |m: &Matrix| (0..k).fold(Matrix::identity(2), |acc, _| acc.mul(m)).norm(NormKind::Spectral);
        let (n0, n1) = (p(&a0), p(&a1));
        prop_assert!((n0 / n1 - 1.0).abs() < 1e-9);
    }
}
