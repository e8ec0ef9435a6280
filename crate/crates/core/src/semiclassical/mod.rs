//! Classical trajectory ensembles and the semiclassical wave function built
//! from their transported density and accumulated action.

mod assemble;
mod trajectory;
mod wkb;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::madelung::PhysicalConstants;

pub use assemble::{
    assemble_branch, assemble_wave, transport_density, Direction, SemiclassicalWave,
};
pub use trajectory::{
    integrate_trajectories, Trajectory, TrajectoryEnsemble, TrajectorySample, CAUSTIC_THRESHOLD,
};
pub use wkb::wkb_transmission;

pub const DEFAULT_ENSEMBLE_SIZE: usize = 4096;

/// Initial probability density `ρ₀`, normalized on the real line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDensity {
    Uniform { a: f64, b: f64 },
    Gaussian { center: f64, sigma: f64 },
}

impl InitialDensity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialDensity::Uniform { a, b } if !(a.is_finite() && b.is_finite() && b > a) => Err(
                Error::InvalidParameter(format!("uniform density needs a < b, got [{a}, {b}]")),
            ),
            InitialDensity::Gaussian { center, sigma }
                if !(center.is_finite() && sigma.is_finite() && sigma > 0.0) =>
            {
                Err(Error::InvalidParameter(format!(
                    "gaussian density needs sigma > 0, got {sigma}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            InitialDensity::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            InitialDensity::Gaussian { center, sigma } => {
                let z = (x - center) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// Inverse cumulative distribution.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            InitialDensity::Uniform { a, b } => a + u * (b - a),
            InitialDensity::Gaussian { center, sigma } => Normal::new(center, sigma)
                .expect("validated parameters")
                .inverse_cdf(u),
        }
    }

    /// `n` positions at equal probability mass, `F(x_i) = (i + ½)/n`.
    pub fn positions(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.quantile((i as f64 + 0.5) / n as f64))
            .collect()
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial phase `φ₀(x₀)` together with the momentum `p₀ = ∂φ₀/∂x₀` it
/// implies.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialPhase {
    Zero,
    /// `φ₀ = p x₀`.
    UniformMomentum { momentum: f64 },
    /// `φ₀ = s x₀²/2`, so `p₀ = s x₀`.
    LinearMomentum { slope: f64 },
    /// User-supplied pair, checked for consistency before integration.
    #[serde(skip)]
    Custom { phase: ScalarFn, momentum: ScalarFn },
}

impl fmt::Debug for InitialPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialPhase::Zero => write!(f, "Zero"),
            InitialPhase::UniformMomentum { momentum } => {
                write!(f, "UniformMomentum {{ momentum: {momentum} }}")
            }
            InitialPhase::LinearMomentum { slope } => write!(f, "LinearMomentum {{ slope: {slope} }}"),
            InitialPhase::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl InitialPhase {
    pub fn phase(&self, x0: f64) -> f64 {
        match self {
            InitialPhase::Zero => 0.0,
            InitialPhase::UniformMomentum { momentum } => momentum * x0,
            InitialPhase::LinearMomentum { slope } => 0.5 * slope * x0 * x0,
            InitialPhase::Custom { phase, .. } => phase(x0),
        }
    }

    pub fn momentum(&self, x0: f64) -> f64 {
        match self {
            InitialPhase::Zero => 0.0,
            InitialPhase::UniformMomentum { momentum } => *momentum,
            InitialPhase::LinearMomentum { slope } => slope * x0,
            InitialPhase::Custom { momentum, .. } => momentum(x0),
        }
    }

    /// Rejects pairs whose momentum is not the derivative of the phase at
    /// the given positions.
    pub fn validate(&self, positions: &[f64]) -> Result<()> {
        for &x in positions {
            let (phi, p) = (self.phase(x), self.momentum(x));
            if !(phi.is_finite() && p.is_finite()) {
                return Err(Error::InvalidParameter(format!("initial phase not finite at x0 = {x}")));
            }
        }
        if let InitialPhase::Custom { .. } = self {
            for &x in positions {
                let h = 1e-5 * x.abs().max(1.0);
                let d = (self.phase(x + h) - self.phase(x - h)) / (2.0 * h);
                let p = self.momentum(x);
                if (d - p).abs() > 1e-5 * p.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "initial momentum {p} at x0 = {x} is not the phase gradient {d}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Region the trajectories move in.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    /// Leaving `[xmin, xmax]` is an error.
    Open { xmin: f64, xmax: f64 },
    /// Positions wrap with period `xmax - xmin`.
    Periodic { xmin: f64, xmax: f64 },
    /// Hard walls with elastic reflection.
    Walls { xmin: f64, xmax: f64 },
}

impl Domain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Domain::Open { xmin, xmax } | Domain::Periodic { xmin, xmax } | Domain::Walls { xmin, xmax } => {
                (xmin, xmax)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.bounds();
        if a.is_finite() && b.is_finite() && b > a {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid domain [{a}, {b}]")))
        }
    }

    /// Physical position and momentum sign for an unfolded coordinate.
    pub fn fold(&self, u: f64) -> (f64, f64) {
        match *self {
            Domain::Open { .. } => (u, 1.0),
            Domain::Periodic { xmin, xmax } => {
                let l = xmax - xmin;
                let mut x = xmin + (u - xmin).rem_euclid(l);
                if x >= xmax {
                    x = xmin;
                }
                (x, 1.0)
            }
            Domain::Walls { xmin, xmax } => {
                let l = xmax - xmin;
                let y = (u - xmin).rem_euclid(2.0 * l);
                if y <= l {
                    (xmin + y, 1.0)
                } else {
                    (xmin + 2.0 * l - y, -1.0)
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub density: InitialDensity,
    pub phase: InitialPhase,
    pub domain: Domain,
    pub size: usize,
    pub constants: PhysicalConstants,
}

impl EnsembleConfig {
    pub fn new(density: InitialDensity, phase: InitialPhase, domain: Domain) -> Self {
        EnsembleConfig {
            density,
            phase,
            domain,
            size: DEFAULT_ENSEMBLE_SIZE,
            constants: PhysicalConstants::default(),
        }
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = size;
        self
    }

    pub fn with_constants(mut self, constants: PhysicalConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn positions(&self) -> Vec<f64> {
        self.density.positions(self.size)
    }

    pub fn validate(&self) -> Result<()> {
        self.density.validate()?;
        self.domain.validate()?;
        if self.size < 3 {
            return Err(Error::InvalidParameter(format!(
                "ensemble needs at least 3 trajectories, got {}",
                self.size
            )));
        }
        let xs = self.positions();
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("initial positions are not strictly increasing".into()));
        }
        let (a, b) = self.domain.bounds();
        if xs[0] < a || xs[xs.len() - 1] > b {
            return Err(Error::InvalidParameter(format!(
                "initial positions [{}, {}] exceed the domain [{a}, {b}]",
                xs[0],
                xs[xs.len() - 1]
            )));
        }
        self.phase.validate(&xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_positions() {
        let u = InitialDensity::Uniform { a: 0.0, b: 2.0 }.positions(4);
        assert_eq!(u, vec![0.25, 0.75, 1.25, 1.75]);
        let g = InitialDensity::Gaussian {
            center: 1.0,
            sigma: 2.0,
        }
        .positions(3);
        assert!((g[1] - 1.0).abs() < 1e-12);
        assert!((g[0] + g[2] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fold_walls_and_period() {
        let w = Domain::Walls { xmin: 0.0, xmax: 1.0 };
        assert_eq!(w.fold(0.25), (0.25, 1.0));
        assert_eq!(w.fold(1.25), (0.75, -1.0));
        assert_eq!(w.fold(-0.25), (0.25, -1.0));
        assert_eq!(w.fold(2.25), (0.25, 1.0));
        let p = Domain::Periodic { xmin: 0.0, xmax: 2.0 };
        assert_eq!(p.fold(2.5).0, 0.5);
        assert_eq!(p.fold(-0.5).0, 1.5);
    }

    #[test]
    fn inconsistent_custom_phase_is_rejected() {
        let good = InitialPhase::Custom {
            phase: Arc::new(|x| x.sin()),
            momentum: Arc::new(|x| x.cos()),
        };
        let bad = InitialPhase::Custom {
            phase: Arc::new(|x| x.sin()),
            momentum: Arc::new(|x| 2.0 * x.cos()),
        };
        let xs = [0.0, 0.5, 1.0];
        assert!(good.validate(&xs).is_ok());
        assert!(bad.validate(&xs).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: -1.0, b: 3.0 },
            InitialPhase::Zero,
            Domain::Open { xmin: 0.0, xmax: 2.0 },
        );
        assert!(cfg.validate().is_err());
        let phase: InitialPhase =
            serde_json::from_str(r#"{"kind":"uniform_momentum","params":{"momentum":2.0}}"#).unwrap();
        assert_eq!(phase.momentum(5.0), 2.0);
    }
}
