use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid1D, RealField};
use crate::madelung::PhysicalConstants;

/// Declarative description of `V(x)`.
///
/// `Box` has no interior potential: its hard walls are the end nodes of a
/// Dirichlet grid whose span must equal `width`. `Tabulated` holds one value
/// per node of the grid it is used with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Free,
    Harmonic {
        omega: f64,
    },
    Box {
        width: f64,
    },
    Barrier {
        height: f64,
        width: f64,
        center: f64,
    },
    Tabulated {
        values: Vec<f64>,
    },
}

impl PotentialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PotentialSpec::Free => "free",
            PotentialSpec::Harmonic { .. } => "harmonic",
            PotentialSpec::Box { .. } => "box",
            PotentialSpec::Barrier { .. } => "barrier",
            PotentialSpec::Tabulated { .. } => "tabulated",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            PotentialSpec::Free => Ok(()),
            PotentialSpec::Harmonic { omega } if !(omega.is_finite() && omega > 0.0) => {
                bad(format!("omega must be > 0, got {omega}"))
            }
            PotentialSpec::Box { width } if !(width.is_finite() && width > 0.0) => {
                bad(format!("box width must be > 0, got {width}"))
            }
            PotentialSpec::Barrier {
                height,
                width,
                center,
            } if !(height.is_finite() && width.is_finite() && width >= 0.0 && center.is_finite()) => {
                bad(format!("invalid barrier: height {height}, width {width}, center {center}"))
            }
            PotentialSpec::Tabulated { ref values } if values.iter().any(|v| !v.is_finite()) => {
                bad("tabulated potential has non-finite values".into())
            }
            _ => Ok(()),
        }
    }

    /// Check the potential against the grid it will be sampled on.
    pub fn validate_on(&self, grid: &Grid1D) -> Result<()> {
        self.validate()?;
        match self {
            PotentialSpec::Box { width } => {
                if grid.boundary() != Boundary::Dirichlet {
                    return Err(Error::IncompatibleBoundary {
                        method: "box potential",
                        boundary: "dirichlet",
                    });
                }
                if (grid.span() - width).abs() > 1e-9 * width {
                    return Err(Error::InvalidParameter(format!(
                        "box width {width} does not match grid span {}",
                        grid.span()
                    )));
                }
                Ok(())
            }
            PotentialSpec::Tabulated { values } if values.len() != grid.n() => {
                Err(Error::InvalidParameter(format!(
                    "tabulated potential has {} values for {} nodes",
                    values.len(),
                    grid.n()
                )))
            }
            _ => Ok(()),
        }
    }

    /// `V` at a point. `Tabulated` has no pointwise meaning off its grid.
    pub fn value_at(&self, x: f64, constants: &PhysicalConstants) -> Result<f64> {
        match *self {
            PotentialSpec::Free | PotentialSpec::Box { .. } => Ok(0.0),
            PotentialSpec::Harmonic { omega } => Ok(0.5 * constants.mass() * omega * omega * x * x),
            PotentialSpec::Barrier {
                height,
                width,
                center,
            } => Ok(if (x - center).abs() <= 0.5 * width {
                height
            } else {
                0.0
            }),
            PotentialSpec::Tabulated { .. } => {
                Err(Error::UnsupportedPotential("tabulated (pointwise)".into()))
            }
        }
    }

    /// `-dV/dx` for potentials smooth enough for trajectory integration.
    pub fn force_at(&self, x: f64, constants: &PhysicalConstants) -> Result<f64> {
        match *self {
            PotentialSpec::Free | PotentialSpec::Box { .. } => Ok(0.0),
            PotentialSpec::Harmonic { omega } => Ok(-constants.mass() * omega * omega * x),
            PotentialSpec::Barrier { .. } => {
                Err(Error::UnsupportedPotential("barrier (discontinuous force)".into()))
            }
            PotentialSpec::Tabulated { .. } => {
                Err(Error::UnsupportedPotential("tabulated (pointwise)".into()))
            }
        }
    }

    pub fn sample(&self, grid: &Grid1D, constants: &PhysicalConstants) -> Result<RealField> {
        self.validate_on(grid)?;
        match self {
            PotentialSpec::Tabulated { values } => RealField::new(*grid, values.clone()),
            _ => {
                let values = grid
                    .nodes()
                    .into_iter()
                    .map(|x| self.value_at(x, constants))
                    .collect::<Result<Vec<_>>>()?;
                RealField::new(*grid, values)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_shape() {
        let p: PotentialSpec =
            serde_json::from_str(r#"{"kind":"harmonic","params":{"omega":2.0}}"#).unwrap();
        assert_eq!(p, PotentialSpec::Harmonic { omega: 2.0 });
        let f: PotentialSpec = serde_json::from_str(r#"{"kind":"free"}"#).unwrap();
        assert_eq!(f, PotentialSpec::Free);
        assert!(serde_json::from_str::<PotentialSpec>(
            r#"{"kind":"harmonic","params":{"omega":2.0,"omgea":1}}"#
        )
        .is_err());
    }

    #[test]
    fn validation() {
        assert!(PotentialSpec::Harmonic { omega: 0.0 }.validate().is_err());
        let g = Grid1D::dirichlet(0.0, 1.0, 11).unwrap();
        assert!(PotentialSpec::Box { width: 1.0 }.validate_on(&g).is_ok());
        assert!(PotentialSpec::Box { width: 2.0 }.validate_on(&g).is_err());
        let p = Grid1D::periodic(0.0, 1.0, 10).unwrap();
        assert!(PotentialSpec::Box { width: 1.0 }.validate_on(&p).is_err());
        assert!(PotentialSpec::Tabulated { values: vec![0.0; 3] }.validate_on(&g).is_err());
    }

    #[test]
    fn sampling() {
        let c = PhysicalConstants::new(1.0, 2.0).unwrap();
        let g = Grid1D::dirichlet(-2.0, 2.0, 9).unwrap();
        let v = PotentialSpec::Harmonic { omega: 1.0 }.sample(&g, &c).unwrap();
        assert_eq!(v.values()[0], 4.0);
        let b = PotentialSpec::Barrier {
            height: 3.0,
            width: 1.0,
            center: 0.0,
        };
        let v = b.sample(&g, &c).unwrap();
        assert_eq!(v.values()[4], 3.0);
        assert_eq!(v.values()[0], 0.0);
        assert!(b.force_at(0.0, &c).is_err());
    }
}
