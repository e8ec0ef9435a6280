//! Plane-wave scattering from a rectangular barrier by transfer matrices.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::madelung::PhysicalConstants;
use crate::schrodinger::PotentialSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub transmission: f64,
    pub reflection: f64,
}

/// A constant-potential region `[start, end)` and the complex wavenumber
/// `k = √(2M(E - V))/ħ` there (purely imaginary when forbidden).
#[derive(Clone, Copy, Debug)]
struct Region {
    start: f64,
    k: Complex64,
}

impl Region {
    /// `[f1, f2]` and derivatives: `e^{±ikx}`, or `1, x` when `k = 0`.
    fn basis(&self, x: f64) -> [[Complex64; 2]; 2] {
        let i = Complex64::new(0.0, 1.0);
        if self.k == Complex64::new(0.0, 0.0) {
            return [
                [Complex64::new(1.0, 0.0), Complex64::new(x, 0.0)],
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            ];
        }
        let p = (i * self.k * x).exp();
        let m = (-i * self.k * x).exp();
        [[p, m], [i * self.k * p, -i * self.k * m]]
    }
}

/// Stationary scattering solution at energy `E` for a wave incident from
/// the left with unit amplitude.
#[derive(Clone, Debug)]
pub struct ScatteringState {
    regions: Vec<Region>,
    coeffs: Vec<[Complex64; 2]>,
}

fn mul(a: [[Complex64; 2]; 2], v: [Complex64; 2]) -> [Complex64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn inv(a: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

fn rectangular(barrier: &PotentialSpec) -> Result<(f64, f64, f64)> {
    barrier.validate()?;
    match *barrier {
        PotentialSpec::Barrier {
            height,
            width,
            center,
        } => Ok((height, width, center)),
        PotentialSpec::Free => Ok((0.0, 0.0, 0.0)),
        _ => Err(Error::UnsupportedPotential(format!(
            "{} (rectangular barrier expected)",
            barrier.name()
        ))),
    }
}

impl ScatteringState {
    pub fn new(energy: f64, barrier: &PotentialSpec, constants: &PhysicalConstants) -> Result<Self> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::InvalidParameter(format!("energy must be > 0, got {energy}")));
        }
        let (height, width, center) = rectangular(barrier)?;
        let wavenumber = |v: f64| {
            Complex64::new(2.0 * constants.mass() * (energy - v), 0.0).sqrt() / constants.hbar()
        };
        let mut regions = vec![Region {
            start: f64::NEG_INFINITY,
            k: wavenumber(0.0),
        }];
        if width > 0.0 && height != 0.0 {
            regions.push(Region {
                start: center - 0.5 * width,
                k: wavenumber(height),
            });
            regions.push(Region {
                start: center + 0.5 * width,
                k: wavenumber(0.0),
            });
        }
        // Fix the transmitted amplitude to 1 on the right and match ψ, ψ'
        // leftwards; rescale afterwards for unit incidence.
        let last = regions.len() - 1;
        let mut coeffs = vec![[Complex64::new(0.0, 0.0); 2]; regions.len()];
        coeffs[last] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        for j in (0..last).rev() {
            let x = regions[j + 1].start;
            let right = mul(regions[j + 1].basis(x), coeffs[j + 1]);
            coeffs[j] = mul(inv(regions[j].basis(x)), right);
        }
        let a = coeffs[0][0];
        for c in &mut coeffs {
            c[0] /= a;
            c[1] /= a;
        }
        Ok(ScatteringState { regions, coeffs })
    }

    fn region(&self, x: f64) -> usize {
        self.regions.iter().rposition(|r| x >= r.start).unwrap_or(0)
    }

    /// `ψ(x)`.
    pub fn value(&self, x: f64) -> Complex64 {
        let j = self.region(x);
        let b = self.regions[j].basis(x)[0];
        b[0] * self.coeffs[j][0] + b[1] * self.coeffs[j][1]
    }

    /// Incident branch `e^{ikx}` on the left.
    pub fn incident(&self, x: f64) -> Complex64 {
        self.regions[0].basis(x)[0][0]
    }

    /// Reflected branch `r·e^{-ikx}` on the left.
    pub fn reflected(&self, x: f64) -> Complex64 {
        self.regions[0].basis(x)[0][1] * self.coeffs[0][1]
    }

    /// Transmitted branch `t·e^{ikx}` on the right.
    pub fn transmitted(&self, x: f64) -> Complex64 {
        let last = self.regions.len() - 1;
        self.regions[last].basis(x)[0][0] * self.coeffs[last][0]
    }

    pub fn reflection_amplitude(&self) -> Complex64 {
        self.coeffs[0][1]
    }

    pub fn transmission_amplitude(&self) -> Complex64 {
        self.coeffs[self.regions.len() - 1][0]
    }

    pub fn coefficients(&self) -> Transmission {
        // both outer regions are field-free, so the flux ratio is |t|²
        Transmission {
            transmission: self.transmission_amplitude().norm_sqr(),
            reflection: self.reflection_amplitude().norm_sqr(),
        }
    }
}

/// Exact transmission and reflection probabilities of a rectangular
/// barrier (`Free` counts as no barrier).
pub fn barrier_transmission_exact(
    energy: f64,
    barrier: &PotentialSpec,
    constants: &PhysicalConstants,
) -> Result<Transmission> {
    Ok(ScatteringState::new(energy, barrier, constants)?.coefficients())
}
