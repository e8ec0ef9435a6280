//! Harmonic-oscillator eigenbasis: expansion, per-mode phase rotation and
//! synthesis.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fmt_f64, inner_product, l2_norm, ComplexField, Grid1D, RealField};
use crate::madelung::PhysicalConstants;

pub const DEFAULT_K_MAX: usize = 24;
pub const DEFAULT_MAX_DEFICIT: f64 = 1e-6;
pub const TAIL_TOLERANCE: f64 = 1e-12;
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-8;

/// Physicists' Hermite polynomial `H_k` at each `x`, by the three-term
/// recurrence.
pub fn hermite(k: usize, xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let (mut h0, mut h1) = (1.0, 2.0 * x);
            if k == 0 {
                return h0;
            }
            for j in 1..k {
                let h2 = 2.0 * x * h1 - 2.0 * j as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        })
        .collect()
}

/// `H_k(ξ) e^{-ξ²/2} / √(2^k k! √π)` via the normalized recurrence, which
/// stays finite where `H_k` and `k!` separately overflow.
pub fn hermite_function(k: usize, xi: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    for j in 0..k {
        let j = j as f64;
        let next = (2.0 / (j + 1.0)).sqrt() * xi * cur - (j / (j + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Oscillator eigenfunctions `χ_0..χ_{k_max}` sampled on a grid.
#[derive(Clone, Debug)]
pub struct HermiteBasis {
    omega: f64,
    constants: PhysicalConstants,
    k_max: usize,
    max_deficit: f64,
    grid: Grid1D,
    modes: Vec<RealField>,
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")))
    }
}

fn sample_mode(k: usize, grid: &Grid1D, omega: f64, c: &PhysicalConstants) -> Result<RealField> {
    let s = (c.mass() * omega / c.hbar()).sqrt();
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| s.sqrt() * hermite_function(k, s * x))
        .collect();
    let edge = values[0].abs().max(values[values.len() - 1].abs());
    if edge > TAIL_TOLERANCE {
        return Err(Error::GridTooNarrow { k, edge });
    }
    RealField::new(*grid, values)
}

impl HermiteBasis {
    /// Samples every mode and checks the edge tails and orthonormality on
    /// `grid`.
    pub fn new(omega: f64, constants: PhysicalConstants, k_max: usize, grid: &Grid1D) -> Result<Self> {
        check_omega(omega)?;
        let modes = (0..=k_max)
            .map(|k| sample_mode(k, grid, omega, &constants))
            .collect::<Result<Vec<_>>>()?;
        let mut deviation = 0.0_f64;
        for j in 0..=k_max {
            for k in j..=k_max {
                let ip = inner_product(&modes[j], &modes[k])?.re;
                let want = if j == k { 1.0 } else { 0.0 };
                deviation = deviation.max((ip - want).abs());
            }
        }
        if deviation > ORTHONORMALITY_TOLERANCE {
            return Err(Error::BasisNotOrthonormal { deviation });
        }
        Ok(HermiteBasis {
            omega,
            constants,
            k_max,
            max_deficit: DEFAULT_MAX_DEFICIT,
            grid: *grid,
            modes,
        })
    }

    pub fn with_max_deficit(mut self, tolerance: f64) -> Self {
        self.max_deficit = tolerance;
        self
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// `E_k = ħω(k + ½)`.
    pub fn energy(&self, k: usize) -> f64 {
        self.constants.hbar() * self.omega * (k as f64 + 0.5)
    }

    pub fn mode(&self, k: usize) -> &RealField {
        &self.modes[k]
    }
}

/// `χ_k` on `grid` for the basis frequency and constants.
pub fn eigenfunction(k: usize, grid: &Grid1D, basis: &HermiteBasis) -> Result<RealField> {
    if grid == basis.grid() && k <= basis.k_max {
        return Ok(basis.modes[k].clone());
    }
    sample_mode(k, grid, basis.omega, &basis.constants)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub c: Vec<Complex64>,
    /// `1 - Σ|c_k|²` at expansion time.
    pub deficit: f64,
}

impl ModeCoefficients {
    pub fn total_weight(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,re,im,abs2")?;
        for (k, z) in self.c.iter().enumerate() {
            writeln!(w, "{k},{},{},{}", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(z.norm_sqr()))?;
        }
        Ok(())
    }
}

/// `c_k = ⟨χ_k, ψ0⟩` by grid quadrature.
pub fn expand(psi0: &ComplexField, basis: &HermiteBasis) -> Result<ModeCoefficients> {
    if psi0.grid().line()? != basis.grid() {
        return Err(Error::GridMismatch);
    }
    let norm = l2_norm(psi0);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { norm });
    }
    let weights = psi0.grid().weights();
    let c: Vec<Complex64> = basis
        .modes
        .iter()
        .map(|m| {
            m.values()
                .iter()
                .zip(psi0.values())
                .zip(&weights)
                .map(|((chi, z), w)| z * (chi * w))
                .sum()
        })
        .collect();
    let deficit = 1.0 - c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if deficit > basis.max_deficit {
        return Err(Error::TruncationDeficit {
            deficit,
            tolerance: basis.max_deficit,
        });
    }
    Ok(ModeCoefficients { c, deficit })
}

/// `c_k → c_k e^{-iE_k t/ħ}`.
pub fn propagate_phases(c: &ModeCoefficients, t: f64, basis: &HermiteBasis) -> ModeCoefficients {
    let hbar = basis.constants.hbar();
    ModeCoefficients {
        c: c.c
            .iter()
            .enumerate()
            .map(|(k, z)| z * Complex64::from_polar(1.0, -basis.energy(k) * t / hbar))
            .collect(),
        deficit: c.deficit,
    }
}

/// `ψ = Σ c_k χ_k` on `grid`.
pub fn synthesize(c: &ModeCoefficients, grid: &Grid1D, basis: &HermiteBasis) -> Result<ComplexField> {
    let mut values = vec![Complex64::new(0.0, 0.0); grid.n()];
    for (k, ck) in c.c.iter().enumerate() {
        let chi = eigenfunction(k, grid, basis)?;
        for (v, x) in values.iter_mut().zip(chi.values()) {
            *v += ck * x;
        }
    }
    ComplexField::new(*grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_distance;
    use crate::schrodinger::{propagate, stationary_states, Method, PotentialSpec, PropagatorConfig};
    use crate::states::InitialState;

    fn grid() -> Grid1D {
        Grid1D::periodic(-20.0, 20.0, 1024).unwrap()
    }

    fn basis(k_max: usize) -> HermiteBasis {
        HermiteBasis::new(1.0, PhysicalConstants::default(), k_max, &grid()).unwrap()
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, &[0.3, -2.0]), vec![1.0, 1.0]);
        assert_eq!(hermite(1, &[0.3, -2.0]), vec![0.6, -4.0]);
        assert_eq!(hermite(2, &[1.0]), vec![2.0]);
        assert_eq!(hermite(4, &[0.0]), vec![12.0]);
        // H_3 = 8x³ - 12x
        assert_eq!(hermite(3, &[2.0]), vec![40.0]);
    }

    #[test]
    fn normalized_recurrence_matches_polynomial() {
        let mut fact = 1.0;
        for k in 0..12 {
            if k > 0 {
                fact *= k as f64;
            }
            let n = (2f64.powi(k as i32) * fact * PI.sqrt()).sqrt();
            for x in [-1.5, 0.2, 2.7] {
                let want = hermite(k, &[x])[0] * (-0.5 * x * x).exp() / n;
                assert!((hermite_function(k, x) - want).abs() < 1e-12, "k = {k}");
            }
        }
    }

    #[test]
    fn ground_state_closed_form() {
        let c = PhysicalConstants::new(1.0, 2.0).unwrap();
        let b = HermiteBasis::new(1.5, c, 3, &grid()).unwrap();
        let chi = eigenfunction(0, &grid(), &b).unwrap();
        let a = 3.0_f64;
        for (i, v) in chi.values().iter().enumerate() {
            let x = grid().x(i);
            let want = (a / PI).powf(0.25) * (-a * x * x / 2.0).exp();
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_is_orthonormal() {
        let b = basis(10);
        for j in 0..=10 {
            for k in 0..=10 {
                let ip = inner_product(b.mode(j), b.mode(k)).unwrap().re;
                assert!((ip - if j == k { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = Grid1D::periodic(-4.0, 4.0, 256).unwrap();
        assert!(matches!(
            HermiteBasis::new(1.0, PhysicalConstants::default(), 6, &g),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn matches_grid_diagonalization() {
        let g = Grid1D::dirichlet(-10.0, 10.0, 8001).unwrap();
        let c = PhysicalConstants::default();
        let s = stationary_states(&PotentialSpec::Harmonic { omega: 1.0 }, &g, &c, 10).unwrap();
        let b = HermiteBasis::new(1.0, c, 10, &g).unwrap();
        for k in 0..=10 {
            let d = l2_distance(b.mode(k), &s.states[k]).unwrap();
            assert!(d < 1e-4, "k = {k}: {d}");
        }
    }

    #[test]
    fn expansion_of_modes_and_mixtures() {
        let b = basis(DEFAULT_K_MAX);
        let chi3 = b.mode(3).map(|v| Complex64::new(v, 0.0)).unwrap();
        let c = expand(&chi3, &b).unwrap();
        for (k, z) in c.c.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((z - want).norm() < 1e-8);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mix = ComplexField::new(
            grid(),
            b.mode(0)
                .values()
                .iter()
                .zip(b.mode(1).values())
                .map(|(a, b)| Complex64::new(s * (a + b), 0.0))
                .collect(),
        )
        .unwrap();
        let c = expand(&mix, &b).unwrap();
        assert!((c.c[0].re - s).abs() < 1e-8 && (c.c[1].re - s).abs() < 1e-8);
    }

    #[test]
    fn coherent_state_weights_are_poisson() {
        let b = basis(DEFAULT_K_MAX);
        let psi = InitialState::Coherent { x0: 2.0, omega: 1.0 }
            .sample(&grid(), &PhysicalConstants::default())
            .unwrap();
        let c = expand(&psi, &b).unwrap();
        let mut p = (-2.0_f64).exp();
        for k in 0..=12 {
            if k > 0 {
                p *= 2.0 / k as f64;
            }
            assert!((c.c[k].norm_sqr() - p).abs() < 1e-4, "k = {k}");
        }
        assert!(c.deficit.abs() < 1e-6);
    }

    #[test]
    fn phase_rotation() {
        let b = basis(DEFAULT_K_MAX);
        let psi = InitialState::Coherent { x0: 2.0, omega: 1.0 }
            .sample(&grid(), &PhysicalConstants::default())
            .unwrap();
        let c = expand(&psi, &b).unwrap();
        assert_eq!(propagate_phases(&c, 0.0, &b), c);
        let full = propagate_phases(&c, 2.0 * PI, &b);
        for (a, z) in full.c.iter().zip(&c.c) {
            assert!((a + z).norm() < 1e-12);
            assert!((a.norm() - z.norm()).abs() < 1e-15);
        }
        let back = synthesize(&c, &grid(), &b).unwrap();
        assert!(l2_distance(&back, &psi).unwrap() < 1e-6);
        let zero = ModeCoefficients {
            c: vec![Complex64::new(0.0, 0.0); 5],
            deficit: 1.0,
        };
        assert!(synthesize(&zero, &grid(), &b).unwrap().values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_mode_density_is_stationary() {
        let b = basis(4);
        let c = ModeCoefficients {
            c: vec![0.0, 0.0, 1.0, 0.0, 0.0]
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect(),
            deficit: 0.0,
        };
        let d0 = synthesize(&c, &grid(), &b).unwrap().density();
        let d1 = synthesize(&propagate_phases(&c, 1.234, &b), &grid(), &b).unwrap().density();
        assert!(d0.values().iter().zip(d1.values()).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn agrees_with_exact_propagation() {
        let g = grid();
        let c0 = PhysicalConstants::default();
        let b = basis(DEFAULT_K_MAX);
        let psi = InitialState::Coherent { x0: 2.0, omega: 1.0 }.sample(&g, &c0).unwrap();
        let cfg = PropagatorConfig::new(1e-3, 1000, Method::SplitOperator, c0);
        let exact = propagate(&psi, &PotentialSpec::Harmonic { omega: 1.0 }, &cfg).unwrap();
        let c = expand(&psi, &b).unwrap();
        let spectral = synthesize(&propagate_phases(&c, 1.0, &b), &g, &b).unwrap();
        assert!(l2_distance(exact.last(), &spectral).unwrap() < 1e-3);
    }

    #[test]
    fn coefficient_csv() {
        let c = ModeCoefficients {
            c: vec![Complex64::new(0.5, -0.5)],
            deficit: 0.5,
        };
        let mut out = Vec::new();
        c.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "k,re,im,abs2\n0,0.5,-0.5,0.5\n");
    }
}
