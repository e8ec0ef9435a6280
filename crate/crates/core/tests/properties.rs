use madelung_core::eigenbasis::{expand, propagate_phases, HermiteBasis};
use madelung_core::grid::{gradient, inner_product, l2_norm, laplacian, ComplexField, Grid1D, RealField};
use madelung_core::madelung::{decompose, quantum_potential, reconstruct, DensityFloor, PhysicalConstants};
use madelung_core::states::InitialState;
use num_complex::Complex64;
use proptest::prelude::*;

fn smooth(grid: Grid1D, a: &[f64]) -> RealField {
    let l = grid.span();
    RealField::from_fn(grid, |x| {
        let t = 2.0 * std::f64::consts::PI * (x - grid.xmin()) / l;
        a.iter()
            .enumerate()
            .map(|(k, c)| c * ((k as f64 + 1.0) * t + k as f64).sin())
            .sum()
    })
    .unwrap()
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0_f64, 4)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operators_are_linear(fa in coeffs(), fb in coeffs(), a in -3.0..3.0_f64, b in -3.0..3.0_f64, periodic in any::<bool>()) {
        let g = if periodic { Grid1D::periodic(0.0, 5.0, 97).unwrap() } else { Grid1D::dirichlet(0.0, 5.0, 97).unwrap() };
        let (f, h) = (smooth(g, &fa), smooth(g, &fb));
        let combo = RealField::new(g, f.values().iter().zip(h.values()).map(|(x, y)| a * x + b * y).collect()).unwrap();
        for op in [gradient::<f64>, laplacian::<f64>] {
            let (lf, lh, lc) = (op(&f).unwrap(), op(&h).unwrap(), op(&combo).unwrap());
            let expect: Vec<f64> = lf.values().iter().zip(lh.values()).map(|(x, y)| a * x + b * y).collect();
            prop_assert!(max_diff(lc.values(), &expect) < 1e-9);
        }
    }

    #[test]
    fn quantum_potential_is_scale_invariant(fa in coeffs(), scale in 1e-3..1e3_f64) {
        let g = Grid1D::periodic(0.0, 5.0, 128).unwrap();
        let rho = smooth(g, &fa).map(|v| 9.0 + v).unwrap();
        let c = PhysicalConstants::default();
        let q1 = quantum_potential(&rho, &c, DensityFloor::default()).unwrap();
        let q2 = quantum_potential(&rho.scaled(scale), &c, DensityFloor::default()).unwrap();
        let size = q1.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        prop_assert!(max_diff(q1.values(), q2.values()) < 1e-10 * size);
    }

    #[test]
    fn decompose_reconstruct_round_trip(fa in coeffs(), fp in coeffs(), hbar in 0.2..3.0_f64) {
        let g = Grid1D::periodic(0.0, 5.0, 256).unwrap();
        let amp = smooth(g, &fa);
        let phase = smooth(g, &fp);
        let psi = ComplexField::new(
            g,
            amp.values().iter().zip(phase.values()).map(|(a, p)| Complex64::from_polar(9.0 + a, 2.0 * p)).collect(),
        ).unwrap();
        let c = PhysicalConstants::new(hbar, 1.0).unwrap();
        let back = reconstruct(&decompose(&psi, &c, DensityFloor::default()).unwrap(), &c);
        let d = back.values().iter().zip(psi.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(d < 1e-10);
    }

    #[test]
    fn inner_product_is_conjugate_symmetric(fa in coeffs(), fb in coeffs(), fc in coeffs()) {
        let g = Grid1D::dirichlet(-2.0, 3.0, 101).unwrap();
        let (a, b, c) = (smooth(g, &fa), smooth(g, &fb), smooth(g, &fc));
        let f = ComplexField::new(g, a.values().iter().zip(b.values()).map(|(x, y)| Complex64::new(*x, *y)).collect()).unwrap();
        let h = ComplexField::new(g, c.values().iter().zip(a.values()).map(|(x, y)| Complex64::new(*x, -y)).collect()).unwrap();
        let (fh, hf) = (inner_product(&f, &h).unwrap(), inner_product(&h, &f).unwrap());
        prop_assert!((fh - hf.conj()).norm() < 1e-12 * (1.0 + fh.norm()));
        let ff = inner_product(&f, &f).unwrap();
        prop_assert!(ff.im.abs() < 1e-12 && (ff.re - l2_norm(&f).powi(2)).abs() < 1e-12 * (1.0 + ff.re));
    }

    #[test]
    fn phase_rotation_keeps_weights(x0 in -2.0..2.0_f64, t in -50.0..50.0_f64) {
        let g = Grid1D::periodic(-15.0, 15.0, 512).unwrap();
        let c = PhysicalConstants::default();
        let basis = HermiteBasis::new(1.0, c, 24, &g).unwrap();
        let psi = InitialState::Coherent { x0, omega: 1.0 }.sample(&g, &c).unwrap();
        let c0 = expand(&psi, &basis).unwrap();
        let ct = propagate_phases(&c0, t, &basis);
        for (a, b) in c0.c.iter().zip(&ct.c) {
            prop_assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
        prop_assert!((c0.total_weight() - ct.total_weight()).abs() < 1e-14);
    }
}
