use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigenbasis::hermite_function;
use crate::error::{Error, Result};
use crate::grid::{l2_norm, ComplexField, Grid1D};
use crate::madelung::PhysicalConstants;

/// Analytic initial wave functions. Every variant is normalized on the grid
/// it is sampled on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Gaussian packet whose density has standard deviation `sigma`,
    /// carrying mean momentum `momentum`.
    Gaussian {
        center: f64,
        sigma: f64,
        #[serde(default)]
        momentum: f64,
    },
    /// `e^{ikx}`.
    PlaneWave { k: f64 },
    /// Harmonic-oscillator eigenstate `k` for frequency `omega`.
    OscillatorEigenstate { k: usize, omega: f64 },
    /// Oscillator ground state displaced to `x0`, at rest.
    Coherent { x0: f64, omega: f64 },
    /// Standing wave `sin(nπ(x - xmin)/L)` of a hard-wall box spanning the
    /// grid.
    BoxMode { n: usize },
}

impl InitialState {
    pub fn name(&self) -> &'static str {
        match self {
            InitialState::Gaussian { .. } => "gaussian",
            InitialState::PlaneWave { .. } => "plane_wave",
            InitialState::OscillatorEigenstate { .. } => "oscillator_eigenstate",
            InitialState::Coherent { .. } => "coherent",
            InitialState::BoxMode { .. } => "box_mode",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            InitialState::Gaussian {
                center,
                sigma,
                momentum,
            } => {
                if !(sigma.is_finite() && sigma > 0.0 && center.is_finite() && momentum.is_finite()) {
                    return bad(format!("invalid gaussian: center {center}, sigma {sigma}"));
                }
            }
            InitialState::PlaneWave { k } if !k.is_finite() => return bad(format!("invalid k {k}")),
            InitialState::OscillatorEigenstate { omega, .. } | InitialState::Coherent { omega, .. }
                if !(omega.is_finite() && omega > 0.0) =>
            {
                return bad(format!("omega must be > 0, got {omega}"))
            }
            InitialState::Coherent { x0, .. } if !x0.is_finite() => {
                return bad(format!("invalid x0 {x0}"))
            }
            InitialState::BoxMode { n: 0 } => return bad("box mode index starts at 1".into()),
            _ => {}
        }
        Ok(())
    }

    /// Unnormalized analytic value at `x`.
    fn raw(&self, x: f64, grid: &Grid1D, c: &PhysicalConstants) -> Complex64 {
        let hbar = c.hbar();
        match *self {
            InitialState::Gaussian {
                center,
                sigma,
                momentum,
            } => {
                let d = x - center;
                Complex64::from_polar(
                    (2.0 * PI * sigma * sigma).powf(-0.25) * (-d * d / (4.0 * sigma * sigma)).exp(),
                    momentum * x / hbar,
                )
            }
            InitialState::PlaneWave { k } => Complex64::from_polar(1.0, k * x),
            InitialState::OscillatorEigenstate { k, omega } => {
                let s = (c.mass() * omega / hbar).sqrt();
                Complex64::new(s.sqrt() * hermite_function(k, s * x), 0.0)
            }
            InitialState::Coherent { x0, omega } => {
                let s = (c.mass() * omega / hbar).sqrt();
                Complex64::new(s.sqrt() * hermite_function(0, s * (x - x0)), 0.0)
            }
            InitialState::BoxMode { n } => {
                let l = grid.span();
                let arg = n as f64 * PI * (x - grid.xmin()) / l;
                Complex64::new((2.0 / l).sqrt() * arg.sin(), 0.0)
            }
        }
    }

    pub fn sample(&self, grid: &Grid1D, c: &PhysicalConstants) -> Result<ComplexField> {
        self.validate()?;
        if matches!(self, InitialState::BoxMode { .. }) && grid.is_periodic() {
            return Err(Error::IncompatibleBoundary {
                method: "box_mode",
                boundary: "dirichlet",
            });
        }
        let mut values: Vec<Complex64> = grid.nodes().iter().map(|&x| self.raw(x, grid, c)).collect();
        if let InitialState::BoxMode { .. } = self {
            values[0] = Complex64::new(0.0, 0.0);
            let n = values.len();
            values[n - 1] = Complex64::new(0.0, 0.0);
        }
        let f = ComplexField::new(*grid, values)?;
        let norm = l2_norm(&f);
        if norm == 0.0 {
            return Err(Error::InvalidField(format!("{} state vanishes on the grid", self.name())));
        }
        Ok(f.scaled(1.0 / norm))
    }
}
