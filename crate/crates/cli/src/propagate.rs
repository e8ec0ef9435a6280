use std::fs;
use std::path::Path;

use madelung_core::eigenbasis::{expand, propagate_phases, synthesize, HermiteBasis, DEFAULT_K_MAX};
use madelung_core::grid::{inner_product, write_complex_csv, ComplexField, Grid1D};
use madelung_core::scenarios::{compare_series, write_compare_csv};
use madelung_core::schrodinger::{propagate, Method, PotentialSpec, PropagatorConfig};
use madelung_core::semiclassical::{
    assemble_wave, integrate_trajectories, Domain, EnsembleConfig, InitialDensity, InitialPhase,
};
use madelung_core::states::InitialState;
use num_complex::Complex64;
use serde_json::json;

use crate::run_config::{Route, RunConfig};
use crate::Failure;

fn exact(cfg: &RunConfig, grid: &Grid1D, psi0: &ComplexField) -> Result<Vec<ComplexField>, Failure> {
    let pc = PropagatorConfig::new(cfg.time.dt, cfg.time.steps, Method::for_grid(grid), cfg.constants)
        .with_snapshot_every(cfg.time.snapshot_every);
    Ok(propagate(psi0, &cfg.potential, &pc)?.states)
}

fn ensemble(cfg: &RunConfig, grid: &Grid1D) -> Result<EnsembleConfig, Failure> {
    let c = cfg.constants;
    let open = Domain::Open {
        xmin: grid.xmin(),
        xmax: grid.xmax(),
    };
    let (density, phase, domain) = match cfg.initial {
        InitialState::Gaussian {
            center,
            sigma,
            momentum,
        } => (
            InitialDensity::Gaussian { center, sigma },
            InitialPhase::UniformMomentum { momentum },
            open,
        ),
        InitialState::Coherent { x0, omega } => (
            InitialDensity::Gaussian {
                center: x0,
                sigma: (c.hbar() / (2.0 * c.mass() * omega)).sqrt(),
            },
            InitialPhase::Zero,
            open,
        ),
        InitialState::PlaneWave { k } if grid.is_periodic() => (
            InitialDensity::Uniform {
                a: grid.xmin(),
                b: grid.xmax(),
            },
            InitialPhase::UniformMomentum { momentum: c.hbar() * k },
            Domain::Periodic {
                xmin: grid.xmin(),
                xmax: grid.xmax(),
            },
        ),
        ref other => {
            return Err(Failure::Usage(format!(
                "semiclassical route has no single-branch ensemble for `{}` on a {} grid",
                other.name(),
                grid.boundary().name()
            )))
        }
    };
    let mut e = EnsembleConfig::new(density, phase, domain).with_constants(c);
    if let Some(n) = cfg.ensemble_size {
        e = e.with_size(n);
    }
    Ok(e)
}

fn semiclassical(cfg: &RunConfig, grid: &Grid1D) -> Result<Vec<ComplexField>, Failure> {
    let e = ensemble(cfg, grid)?;
    if cfg.time.dt < 0.0 {
        return Err(Failure::Usage("semiclassical route needs dt > 0".into()));
    }
    let ens = integrate_trajectories(&e, &cfg.potential, cfg.time.dt, cfg.time.steps, cfg.time.snapshot_every)?;
    Ok(assemble_wave(&ens, grid)?.into_iter().map(|w| w.psi).collect())
}

fn eigenbasis(cfg: &RunConfig, grid: &Grid1D, psi0: &ComplexField) -> Result<Vec<ComplexField>, Failure> {
    let omega = match cfg.potential {
        PotentialSpec::Harmonic { omega } => omega,
        ref v => {
            return Err(Failure::Usage(format!(
                "eigenbasis route needs a harmonic potential, got `{}`",
                v.name()
            )))
        }
    };
    let basis = HermiteBasis::new(omega, cfg.constants, cfg.k_max.unwrap_or(DEFAULT_K_MAX), grid)?;
    let c0 = expand(psi0, &basis)?;
    cfg.snapshot_times()
        .iter()
        .map(|&t| Ok(synthesize(&propagate_phases(&c0, t, &basis), grid, &basis)?))
        .collect()
}

pub fn run(path: &Path, method: Option<Route>, out: &Path, compare: bool) -> Result<(), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    let route = method
        .or(cfg.method)
        .ok_or_else(|| Failure::Usage("no method given in the config or on the command line".into()))?;
    cfg.method = Some(route);
    let grid = cfg.grid()?;
    let psi0 = cfg.initial.sample(&grid, &cfg.constants)?;
    let times = cfg.snapshot_times();

    let reference = if compare || route == Route::Exact {
        Some(exact(&cfg, &grid, &psi0)?)
    } else {
        None
    };
    let mut states = match route {
        Route::Exact => reference.clone().expect("computed above"),
        Route::Semiclassical => semiclassical(&cfg, &grid)?,
        Route::Eigenbasis => eigenbasis(&cfg, &grid, &psi0)?,
    };
    if states.len() != times.len() {
        return Err(Failure::Usage("snapshot count does not match the time grid".into()));
    }
    if let (Route::Semiclassical, Some(ex)) = (route, &reference) {
        // global phase is not fixed by the construction
        let ip = inner_product(&states[0], &ex[0])?;
        let z = if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) };
        states = states.iter().map(|s| s.map(|v| v * z)).collect::<madelung_core::Result<_>>()?;
    }

    fs::create_dir_all(out)?;
    let mut files = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        let name = format!("snapshot_{i:05}.csv");
        let mut buf = Vec::new();
        write_complex_csv(s, &mut buf)?;
        fs::write(out.join(&name), buf)?;
        files.push(name);
    }
    if let Some(ex) = &reference {
        if compare {
            let v = cfg.potential.sample(&grid, &cfg.constants)?;
            let rows = compare_series(&times, &states, ex, &v, &cfg.constants, None)?;
            let mut buf = Vec::new();
            write_compare_csv(&rows, &mut buf)?;
            fs::write(out.join("compare.csv"), buf)?;
        }
    }
    let manifest = json!({ "t": times, "files": files, "config": cfg });
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    println!("{}: {} snapshots written to {}", route.name(), files.len(), out.display());
    Ok(())
}
