use crate::error::{Error, Result};
use crate::madelung::PhysicalConstants;
use crate::schrodinger::PotentialSpec;

/// `exp(-2∫κ dx)` with `κ = √(2M(V - E))/ħ` across the forbidden region of
/// a rectangular barrier, where the integral is `κa`.
pub fn wkb_transmission(energy: f64, barrier: &PotentialSpec, constants: &PhysicalConstants) -> Result<f64> {
    barrier.validate()?;
    let (height, width) = match *barrier {
        PotentialSpec::Barrier { height, width, .. } => (height, width),
        _ => {
            return Err(Error::UnsupportedPotential(format!(
                "{} (rectangular barrier expected)",
                barrier.name()
            )))
        }
    };
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InvalidParameter(format!("energy must be > 0, got {energy}")));
    }
    if energy >= height {
        return Err(Error::NoForbiddenRegion { energy, height });
    }
    let kappa = (2.0 * constants.mass() * (height - energy)).sqrt() / constants.hbar();
    Ok((-2.0 * kappa * width).exp())
}
