//! TOML run configuration for `propagate`.

use clap::ValueEnum;
use madelung_core::grid::{Boundary, Grid1D};
use madelung_core::madelung::PhysicalConstants;
use madelung_core::schrodinger::PotentialSpec;
use madelung_core::states::InitialState;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Exact,
    Semiclassical,
    Eigenbasis,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Exact => "exact",
            Route::Semiclassical => "semiclassical",
            Route::Eigenbasis => "eigenbasis",
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
    pub boundary: Boundary,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub steps: usize,
    pub snapshot_every: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    #[serde(default)]
    pub constants: PhysicalConstants,
    pub potential: PotentialSpec,
    pub initial: InitialState,
    pub time: TimeSection,
    pub method: Option<Route>,
    /// Trajectories for the semiclassical route.
    pub ensemble_size: Option<usize>,
    /// Highest mode for the eigenbasis route.
    pub k_max: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Failure::Usage(format!("config: {e}")))?;
        cfg.grid()?;
        cfg.potential.validate()?;
        cfg.initial.validate()?;
        if !(cfg.time.dt.is_finite() && cfg.time.dt != 0.0) || cfg.time.steps == 0 || cfg.time.snapshot_every == 0 {
            return Err(Failure::Usage(
                "config: time needs dt != 0, steps >= 1 and snapshot_every >= 1".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid1D, Failure> {
        let g = &self.grid;
        Ok(Grid1D::new(g.xmin, g.xmax, g.n, g.boundary)?)
    }

    /// Times at which snapshots are kept, matching the propagators.
    pub fn snapshot_times(&self) -> Vec<f64> {
        (0..=self.time.steps)
            .filter(|s| *s == 0 || s % self.time.snapshot_every == 0 || *s == self.time.steps)
            .map(|s| s as f64 * self.time.dt)
            .collect()
    }
}
