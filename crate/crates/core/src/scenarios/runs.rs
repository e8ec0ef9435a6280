use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::eigenbasis::{expand, propagate_phases, synthesize, HermiteBasis, DEFAULT_K_MAX};
use crate::error::{Error, Result};
use crate::grid::{
    inner_product, l2_distance, l2_norm, write_complex_csv, write_real_csv, ComplexField, Grid1D,
    RealField,
};
use crate::madelung::{
    decompose, density_mask, erode, q_psi_norm, quantum_potential_masked, schrodinger_residual,
    DensityFloor, PhysicalConstants,
};
use crate::schrodinger::{
    barrier_transmission_exact, position_expectation, propagate, Method, PotentialSpec,
    PropagatorConfig, ScatteringState, Snapshots,
};
use crate::semiclassical::{
    assemble_branch, assemble_wave, integrate_trajectories, wkb_transmission, Direction, Domain,
    EnsembleConfig, InitialDensity, InitialPhase, DEFAULT_ENSEMBLE_SIZE,
};
use crate::states::InitialState;

use super::{Artifact, GridKind, GridSpec, Resolution, ScenarioConfig, Threshold, TimeSpec};

pub(super) const CATALOG: [(&str, &str, &str); 6] = [
    (
        "plane_wave",
        "uniform-density plane wave: semiclassical construction against exact propagation",
        "category 1: plane waves of constant momentum, Q = 0",
    ),
    (
        "box_branches",
        "two counter-propagating constant-density branches in a hard-wall box",
        "category 1: plane waves of constant momentum between the walls",
    ),
    (
        "barrier",
        "rectangular barrier: exact transfer-matrix against WKB transmission",
        "category 1: quantum tunnelling through a barrier",
    ),
    (
        "slit_radial",
        "density 1/r² in three dimensions: quantum potential of a harmonic amplitude",
        "category 1: the Laplacian of 1/r vanishes away from the origin",
    ),
    (
        "free_gaussian",
        "free Gaussian packet: semiclassical construction fails by the quantum potential",
        "counterexample: Gaussian wave packet with nonzero quantum potential",
    ),
    (
        "oscillator_eigen",
        "coherent state propagated by eigenmode phase rotation against exact propagation",
        "category 2: expansion in oscillator eigenfunctions with phase rotation",
    ),
];

pub(super) fn metric_names(name: &str) -> Result<&'static [&'static str]> {
    Ok(match name {
        "plane_wave" => &["q_max", "l2_error", "norm_drift", "residual_norm"],
        "box_branches" => &[
            "q_branch_max",
            "l2_error",
            "residual_norm",
            "exact_residual_norm",
            "residual_ratio",
            "wall_amplitude",
            "norm_drift",
        ],
        "barrier" => &[
            "t_exact",
            "r_exact",
            "t_wkb",
            "wkb_gap",
            "flux_error",
            "q_transmitted_max",
            "q_branch_max",
            "q_interference_max",
        ],
        "slit_radial" => &["q_max", "q_max_refined", "refinement_ratio", "q_max_constant"],
        "free_gaussian" => &[
            "q_center",
            "q_center_rel_error",
            "q_max",
            "l2_error",
            "l2_error_max",
            "discretization_bound",
            "error_to_bound",
            "residual_identity_error",
            "exact_residual_ratio",
            "boundary_density",
            "norm_drift",
        ],
        "oscillator_eigen" => &[
            "l2_error",
            "mode_magnitude_drift",
            "truncation_deficit",
            "centroid_error",
            "return_fidelity_error",
            "norm_drift",
        ],
        other => return Err(Error::UnknownScenario(other.to_string())),
    })
}

fn thresholds(items: &[(&str, Threshold)]) -> BTreeMap<String, Threshold> {
    items.iter().map(|(k, t)| (k.to_string(), *t)).collect()
}

pub(super) fn reference(name: &str) -> Result<ScenarioConfig> {
    metric_names(name)?;
    let c = PhysicalConstants::default();
    let base = |grid: GridSpec, potential: PotentialSpec| ScenarioConfig {
        name: name.to_string(),
        grid,
        constants: c,
        potential,
        initial: None,
        time: None,
        ensemble_size: None,
        params: BTreeMap::new(),
        thresholds: BTreeMap::new(),
    };
    let cfg = match name {
        "plane_wave" => ScenarioConfig {
            initial: Some(InitialState::PlaneWave { k: 2.0 }),
            time: Some(TimeSpec {
                dt: 1e-3,
                horizon: 1.0,
                snapshot_every: 100,
            }),
            ensemble_size: Some(DEFAULT_ENSEMBLE_SIZE),
            thresholds: thresholds(&[
                ("q_max", Threshold::lt(1e-6)),
                ("l2_error", Threshold::lt(1e-3)),
                ("norm_drift", Threshold::lt(1e-10)),
            ]),
            ..base(
                GridSpec {
                    xmin: 0.0,
                    xmax: 2.0 * PI,
                    n: 256,
                    boundary: GridKind::Periodic,
                },
                PotentialSpec::Free,
            )
        },
        "box_branches" => ScenarioConfig {
            initial: Some(InitialState::BoxMode { n: 2 }),
            time: Some(TimeSpec {
                dt: 2e-4,
                horizon: 1.0,
                snapshot_every: 25,
            }),
            ensemble_size: Some(2048),
            thresholds: thresholds(&[
                ("q_branch_max", Threshold::lt(1e-6)),
                ("l2_error", Threshold::lt(1e-3)),
                ("residual_ratio", Threshold::lt(2.0)),
                ("norm_drift", Threshold::lt(1e-8)),
            ]),
            ..base(
                GridSpec {
                    xmin: 0.0,
                    xmax: 1.0,
                    n: 1001,
                    boundary: GridKind::Dirichlet,
                },
                PotentialSpec::Box { width: 1.0 },
            )
        },
        "barrier" => ScenarioConfig {
            params: [("energy".to_string(), 1.0)].into_iter().collect(),
            thresholds: thresholds(&[
                ("wkb_gap", Threshold::gt(0.0)),
                ("flux_error", Threshold::lt(1e-12)),
                ("q_transmitted_max", Threshold::lt(1e-6)),
                ("q_branch_max", Threshold::lt(1e-6)),
            ]),
            ..base(
                GridSpec {
                    xmin: -10.0,
                    xmax: 10.0,
                    n: 2001,
                    boundary: GridKind::Dirichlet,
                },
                PotentialSpec::Barrier {
                    height: 2.0,
                    width: 1.0,
                    center: 0.0,
                },
            )
        },
        "slit_radial" => ScenarioConfig {
            thresholds: thresholds(&[
                ("q_max", Threshold::lt(1e-4)),
                ("q_max_constant", Threshold::lt(1e-4)),
            ]),
            ..base(
                GridSpec {
                    xmin: 0.5,
                    xmax: 20.0,
                    n: 2048,
                    boundary: GridKind::Radial,
                },
                PotentialSpec::Free,
            )
        },
        "free_gaussian" => ScenarioConfig {
            initial: Some(InitialState::Gaussian {
                center: 0.0,
                sigma: 1.0,
                momentum: 0.0,
            }),
            time: Some(TimeSpec {
                dt: 1e-3,
                horizon: 1.0,
                snapshot_every: 10,
            }),
            ensemble_size: Some(DEFAULT_ENSEMBLE_SIZE),
            thresholds: thresholds(&[
                ("q_center_rel_error", Threshold::lt(0.05)),
                ("q_max", Threshold::gt(0.1)),
                ("error_to_bound", Threshold::gt(10.0)),
                ("residual_identity_error", Threshold::lt(0.2)),
                ("exact_residual_ratio", Threshold::lt(0.1)),
                ("boundary_density", Threshold::lt(1e-10)),
            ]),
            ..base(
                GridSpec {
                    xmin: -20.0,
                    xmax: 20.0,
                    n: 2048,
                    boundary: GridKind::Periodic,
                },
                PotentialSpec::Free,
            )
        },
        "oscillator_eigen" => ScenarioConfig {
            initial: Some(InitialState::Coherent { x0: 2.0, omega: 1.0 }),
            time: Some(TimeSpec {
                dt: 1e-3,
                horizon: 2.0 * PI,
                snapshot_every: 100,
            }),
            params: [("k_max".to_string(), DEFAULT_K_MAX as f64)].into_iter().collect(),
            thresholds: thresholds(&[
                ("l2_error", Threshold::lt(1e-3)),
                ("mode_magnitude_drift", Threshold::lt(1e-14)),
                ("truncation_deficit", Threshold::lt(1e-6)),
                ("centroid_error", Threshold::lt(1e-3)),
            ]),
            ..base(
                GridSpec {
                    xmin: -20.0,
                    xmax: 20.0,
                    n: 1024,
                    boundary: GridKind::Periodic,
                },
                PotentialSpec::Harmonic { omega: 1.0 },
            )
        },
        _ => unreachable!(),
    };
    Ok(cfg)
}

pub(super) struct Outcome {
    pub metrics: BTreeMap<String, f64>,
    pub resolution: Resolution,
    pub artifacts: Vec<Artifact>,
}

struct Metrics(BTreeMap<String, f64>);

impl Metrics {
    fn new() -> Self {
        Metrics(BTreeMap::new())
    }

    fn set(&mut self, k: &str, v: f64) {
        // JSON has no infinities
        let v = if v.is_nan() {
            f64::MAX
        } else {
            v.clamp(-f64::MAX, f64::MAX)
        };
        self.0.insert(k.to_string(), v);
    }
}

fn missing(what: &str) -> Error {
    Error::InvalidParameter(format!("configuration lacks `{what}`"))
}

fn param(cfg: &ScenarioConfig, key: &str) -> Result<f64> {
    cfg.params.get(key).copied().ok_or_else(|| missing(&format!("params.{key}")))
}

fn artifact(name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Artifact> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(Artifact {
        name: name.to_string(),
        contents: String::from_utf8(buf).expect("CSV output is UTF-8"),
    })
}

/// Unit factor rotating `a` onto `b` in the sense of the inner product.
fn phase_alignment(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    let ip = inner_product(a, b)?;
    Ok(if ip.norm() > 0.0 { ip / ip.norm() } else { Complex64::new(1.0, 0.0) })
}

fn rotate(f: &ComplexField, z: Complex64) -> Result<ComplexField> {
    f.map(|v| v * z)
}

fn norm_drift(s: &Snapshots) -> f64 {
    s.states
        .iter()
        .map(|f| (l2_norm(f) - 1.0).abs())
        .fold(0.0, f64::max)
}

struct Timing {
    dt: f64,
    steps: usize,
    every: usize,
}

fn timing(cfg: &ScenarioConfig) -> Result<Timing> {
    let t = cfg.time.ok_or_else(|| missing("time"))?;
    let (dt, steps) = t.discretize()?;
    Ok(Timing {
        dt,
        steps,
        every: t.snapshot_every,
    })
}

fn exact_run(psi0: &ComplexField, cfg: &ScenarioConfig, grid: &Grid1D, t: &Timing) -> Result<Snapshots> {
    let pc = PropagatorConfig::new(t.dt, t.steps, Method::for_grid(grid), cfg.constants)
        .with_snapshot_every(t.every);
    propagate(psi0, &cfg.potential, &pc)
}

fn resolution(cfg: &ScenarioConfig, t: Option<&Timing>) -> Result<Resolution> {
    Ok(Resolution {
        n: cfg.grid.n,
        dx: cfg.grid.spacing()?,
        dt: t.map(|t| t.dt),
        steps: t.map(|t| t.steps),
        ensemble_size: cfg.ensemble_size,
    })
}

/// One row of an approximation-against-exact comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub l2_error: f64,
    pub residual_norm: f64,
    pub q_norm: f64,
}

/// L2 distance to the exact snapshots, the Schrödinger residual norm of the
/// approximation and `‖Q·ψ‖`, all restricted to `mask` when given.
/// Residuals need a uniformly spaced run of at least three snapshots; rows
/// outside it carry NaN.
pub fn compare_series(
    times: &[f64],
    approx: &[ComplexField],
    exact: &[ComplexField],
    v: &RealField,
    constants: &PhysicalConstants,
    mask: Option<&[bool]>,
) -> Result<Vec<CompareRow>> {
    if approx.len() != times.len() || exact.len() != times.len() {
        return Err(Error::InvalidParameter("series lengths differ".into()));
    }
    let mut uniform = times.len().min(2);
    if times.len() >= 2 {
        let step = times[1] - times[0];
        while uniform < times.len()
            && ((times[uniform] - times[uniform - 1]) - step).abs() <= 1e-9 * step.abs().max(1e-300)
        {
            uniform += 1;
        }
    }
    let residuals = if uniform >= 3 {
        schrodinger_residual(&approx[..uniform], v, constants, times[1] - times[0], mask)?
            .into_iter()
            .map(|r| r.l2)
            .collect()
    } else {
        Vec::new()
    };
    (0..times.len())
        .map(|s| {
            Ok(CompareRow {
                t: times[s],
                l2_error: masked_distance(&approx[s], &exact[s], mask)?,
                residual_norm: residuals.get(s).copied().unwrap_or(f64::NAN),
                q_norm: q_psi_norm(&approx[s], constants, DensityFloor::default(), mask)?,
            })
        })
        .collect()
}

fn masked_distance(a: &ComplexField, b: &ComplexField, mask: Option<&[bool]>) -> Result<f64> {
    match mask {
        None => l2_distance(a, b),
        Some(m) => {
            a.same_grid(b)?;
            let d: Vec<Complex64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
            Ok(crate::grid::masked_l2(a.grid(), &d, Some(m)))
        }
    }
}

/// CSV `t,l2_error,residual_norm,q_norm`.
pub fn write_compare_csv<W: std::io::Write>(rows: &[CompareRow], mut w: W) -> std::io::Result<()> {
    use crate::grid::fmt_f64;
    writeln!(w, "t,l2_error,residual_norm,q_norm")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.l2_error),
            fmt_f64(r.residual_norm),
            fmt_f64(r.q_norm)
        )?;
    }
    Ok(())
}

pub(super) fn execute(cfg: &ScenarioConfig) -> Result<Outcome> {
    match cfg.name.as_str() {
        "plane_wave" => plane_wave(cfg),
        "box_branches" => box_branches(cfg),
        "barrier" => barrier(cfg),
        "slit_radial" => slit_radial(cfg),
        "free_gaussian" => free_gaussian(cfg),
        "oscillator_eigen" => oscillator_eigen(cfg),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn ensemble_size(cfg: &ScenarioConfig) -> usize {
    cfg.ensemble_size.unwrap_or(DEFAULT_ENSEMBLE_SIZE)
}

fn plane_wave(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid.line()?;
    if !grid.is_periodic() {
        return Err(Error::WrongGrid { expected: "periodic" });
    }
    let c = cfg.constants;
    let t = timing(cfg)?;
    let init = cfg.initial.clone().ok_or_else(|| missing("initial"))?;
    let k = match init {
        InitialState::PlaneWave { k } => k,
        _ => return Err(Error::InvalidParameter("plane_wave needs a plane_wave initial state".into())),
    };
    let psi0 = init.sample(&grid, &c)?;
    let exact = exact_run(&psi0, cfg, &grid, &t)?;
    let ens_cfg = EnsembleConfig::new(
        InitialDensity::Uniform {
            a: grid.xmin(),
            b: grid.xmax(),
        },
        InitialPhase::UniformMomentum {
            momentum: c.hbar() * k,
        },
        Domain::Periodic {
            xmin: grid.xmin(),
            xmax: grid.xmax(),
        },
    )
    .with_size(ensemble_size(cfg))
    .with_constants(c);
    let ens = integrate_trajectories(&ens_cfg, &cfg.potential, t.dt, t.steps, t.every)?;
    let waves = assemble_wave(&ens, &grid)?;
    let align = phase_alignment(&waves[0].psi, &exact.states[0])?;
    let sc: Vec<ComplexField> = waves.iter().map(|w| rotate(&w.psi, align)).collect::<Result<_>>()?;
    let v = cfg.potential.sample(&grid, &c)?;
    let rows = compare_series(&exact.times, &sc, &exact.states, &v, &c, None)?;

    let mut m = Metrics::new();
    let mut q_max = 0.0_f64;
    for s in &exact.states {
        q_max = q_max.max(decompose(s, &c, DensityFloor::default())?.q_max());
    }
    m.set("q_max", q_max);
    m.set("l2_error", rows.iter().map(|r| r.l2_error).fold(0.0, f64::max));
    m.set("residual_norm", rows.iter().map(|r| r.residual_norm).fold(0.0, f64::max));
    m.set("norm_drift", norm_drift(&exact));
    Ok(Outcome {
        metrics: m.0,
        resolution: resolution(cfg, Some(&t))?,
        artifacts: vec![
            artifact("exact_final.csv", |w| write_complex_csv(exact.last(), w))?,
            artifact("semiclassical_final.csv", |w| write_complex_csv(sc.last().unwrap(), w))?,
            artifact("compare.csv", |w| write_compare_csv(&rows, w))?,
        ],
    })
}

fn box_branches(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid.line()?;
    let c = cfg.constants;
    let t = timing(cfg)?;
    let init = cfg.initial.clone().ok_or_else(|| missing("initial"))?;
    let mode = match init {
        InitialState::BoxMode { n } => n,
        _ => return Err(Error::InvalidParameter("box_branches needs a box_mode initial state".into())),
    };
    cfg.potential.validate_on(&grid)?;
    let psi0 = init.sample(&grid, &c)?;
    let exact = exact_run(&psi0, cfg, &grid, &t)?;

    let k = mode as f64 * PI / grid.span();
    let domain = Domain::Walls {
        xmin: grid.xmin(),
        xmax: grid.xmax(),
    };
    let ensemble = |p: f64| {
        let e = EnsembleConfig::new(
            InitialDensity::Uniform {
                a: grid.xmin(),
                b: grid.xmax(),
            },
            InitialPhase::UniformMomentum { momentum: p },
            domain,
        )
        .with_size(ensemble_size(cfg))
        .with_constants(c);
        integrate_trajectories(&e, &cfg.potential, t.dt, t.steps, t.every)
    };
    let right_mover = ensemble(c.hbar() * k)?;
    let left_mover = ensemble(-c.hbar() * k)?;
    let sources = [&right_mover, &left_mover];
    let right = assemble_branch(&sources, &grid, Direction::Right)?;
    let left = assemble_branch(&sources, &grid, Direction::Left)?;

    // weight fixed once by the wall condition at t = 0
    let (r0, l0) = (right[0].psi.values()[0], left[0].psi.values()[0]);
    if l0.norm() < 1e-12 {
        return Err(Error::InvalidField("left-moving branch vanishes at the wall".into()));
    }
    let weight = -r0 / l0;
    let mut sc = Vec::with_capacity(right.len());
    for (r, l) in right.iter().zip(&left) {
        let values = r
            .psi
            .values()
            .iter()
            .zip(l.psi.values())
            .map(|(a, b)| a + weight * b)
            .collect();
        let f = ComplexField::new(grid, values)?;
        let n = l2_norm(&f);
        sc.push(f.scaled(1.0 / n));
    }
    let align = phase_alignment(&sc[0], &exact.states[0])?;
    let sc: Vec<ComplexField> = sc.iter().map(|f| rotate(f, align)).collect::<Result<_>>()?;

    let v = cfg.potential.sample(&grid, &c)?;
    let rows = compare_series(&exact.times, &sc, &exact.states, &v, &c, None)?;
    let dt_snap = exact.times[1] - exact.times[0];
    let exact_res = schrodinger_residual(&exact.states, &v, &c, dt_snap, None)?;

    let mut q_branch = 0.0_f64;
    for w in right.iter().chain(&left) {
        q_branch = q_branch.max(decompose(&w.psi, &c, DensityFloor::default())?.q_max());
    }
    let residual = rows.iter().map(|r| r.residual_norm).fold(0.0, f64::max);
    let exact_residual = exact_res.iter().map(|r| r.l2).fold(0.0, f64::max);
    let wall = sc
        .iter()
        .map(|f| f.values()[0].norm().max(f.values()[f.len() - 1].norm()))
        .fold(0.0, f64::max);

    let mut m = Metrics::new();
    m.set("q_branch_max", q_branch);
    m.set("l2_error", rows.iter().map(|r| r.l2_error).fold(0.0, f64::max));
    m.set("residual_norm", residual);
    m.set("exact_residual_norm", exact_residual);
    m.set("residual_ratio", residual / exact_residual);
    m.set("wall_amplitude", wall);
    m.set("norm_drift", norm_drift(&exact));
    Ok(Outcome {
        metrics: m.0,
        resolution: resolution(cfg, Some(&t))?,
        artifacts: vec![
            artifact("exact_final.csv", |w| write_complex_csv(exact.last(), w))?,
            artifact("semiclassical_final.csv", |w| write_complex_csv(sc.last().unwrap(), w))?,
            artifact("right_branch_final.csv", |w| write_complex_csv(&right.last().unwrap().psi, w))?,
            artifact("left_branch_final.csv", |w| write_complex_csv(&left.last().unwrap().psi, w))?,
            artifact("compare.csv", |w| write_compare_csv(&rows, w))?,
        ],
    })
}

/// Dirichlet sub-grid with the spacing of `grid` covering `[a, b]`.
fn subgrid(grid: &Grid1D, a: f64, b: f64) -> Result<Grid1D> {
    let n = ((b - a) / grid.dx()).round() as usize + 1;
    Grid1D::dirichlet(a, b, n)
}

fn barrier(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid.line()?;
    let c = cfg.constants;
    let energy = param(cfg, "energy")?;
    let (width, center) = match cfg.potential {
        PotentialSpec::Barrier { width, center, .. } => (width, center),
        _ => return Err(Error::InvalidParameter("barrier needs a barrier potential".into())),
    };
    let exact = barrier_transmission_exact(energy, &cfg.potential, &c)?;
    let t_wkb = wkb_transmission(energy, &cfg.potential, &c)?;
    let state = ScatteringState::new(energy, &cfg.potential, &c)?;

    let left_grid = subgrid(&grid, grid.xmin(), center - 0.5 * width)?;
    let right_grid = subgrid(&grid, center + 0.5 * width, grid.xmax())?;
    let q_of = |g: &Grid1D, f: &dyn Fn(f64) -> Complex64| -> Result<(f64, RealField)> {
        let psi = ComplexField::from_fn(*g, f)?;
        let (q, mask) = quantum_potential_masked(&psi.density(), &c, DensityFloor::default())?;
        let max = q
            .values()
            .iter()
            .zip(&mask)
            .filter(|(_, m)| **m)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max);
        Ok((max, q))
    };
    let (q_t, q_field) = q_of(&right_grid, &|x| state.transmitted(x))?;
    let (q_i, _) = q_of(&left_grid, &|x| state.incident(x))?;
    let (q_r, _) = q_of(&left_grid, &|x| state.reflected(x))?;
    let (q_mix, _) = q_of(&left_grid, &|x| state.value(x))?;

    let mut m = Metrics::new();
    m.set("t_exact", exact.transmission);
    m.set("r_exact", exact.reflection);
    m.set("t_wkb", t_wkb);
    m.set("wkb_gap", exact.transmission - t_wkb);
    m.set("flux_error", (exact.transmission + exact.reflection - 1.0).abs());
    m.set("q_transmitted_max", q_t);
    m.set("q_branch_max", q_i.max(q_r));
    m.set("q_interference_max", q_mix);
    let full = ComplexField::from_fn(grid, |x| state.value(x))?;
    Ok(Outcome {
        metrics: m.0,
        resolution: resolution(cfg, None)?,
        artifacts: vec![
            artifact("scattering_state.csv", |w| write_complex_csv(&full, w))?,
            artifact("q_transmitted.csv", |w| write_real_csv(&q_field, w))?,
        ],
    })
}

fn radial_q_max(grid: crate::grid::RadialGrid, c: &PhysicalConstants) -> Result<(f64, RealField)> {
    let rho = RealField::from_fn(grid, |r| 1.0 / (r * r))?;
    let (q, mask) = quantum_potential_masked(&rho, c, DensityFloor::default())?;
    let max = q
        .values()
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);
    Ok((max, q))
}

fn slit_radial(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid.radial()?;
    let c = cfg.constants;
    let (q_max, q) = radial_q_max(grid, &c)?;
    let (q_fine, _) = radial_q_max(grid.refined(), &c)?;
    let line = Grid1D::dirichlet(grid.rmin(), grid.rmax(), grid.n())?;
    let constant = RealField::from_fn(line, |_| 1.0 / grid.rmax())?;
    let (qc, mask) = quantum_potential_masked(&constant, &c, DensityFloor::default())?;
    let qc_max = qc
        .values()
        .iter()
        .zip(&mask)
        .filter(|(_, m)| **m)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max);

    let mut m = Metrics::new();
    m.set("q_max", q_max);
    m.set("q_max_refined", q_fine);
    m.set("refinement_ratio", q_max / q_fine.max(f64::MIN_POSITIVE));
    m.set("q_max_constant", qc_max);
    Ok(Outcome {
        metrics: m.0,
        resolution: resolution(cfg, None)?,
        artifacts: vec![artifact("q.csv", |w| write_real_csv(&q, w))?],
    })
}

struct GaussianRun {
    exact: Snapshots,
    sc: Vec<ComplexField>,
    support: Vec<Vec<bool>>,
}

fn gaussian_run(cfg: &ScenarioConfig, grid: &Grid1D, t: &Timing) -> Result<GaussianRun> {
    let c = cfg.constants;
    let init = cfg.initial.clone().ok_or_else(|| missing("initial"))?;
    let (center, sigma, momentum) = match init {
        InitialState::Gaussian {
            center,
            sigma,
            momentum,
        } => (center, sigma, momentum),
        _ => return Err(Error::InvalidParameter("free_gaussian needs a gaussian initial state".into())),
    };
    let psi0 = init.sample(grid, &c)?;
    let exact = exact_run(&psi0, cfg, grid, t)?;
    let ens_cfg = EnsembleConfig::new(
        InitialDensity::Gaussian { center, sigma },
        InitialPhase::UniformMomentum { momentum },
        Domain::Open {
            xmin: grid.xmin(),
            xmax: grid.xmax(),
        },
    )
    .with_size(ensemble_size(cfg))
    .with_constants(c);
    let ens = integrate_trajectories(&ens_cfg, &cfg.potential, t.dt, t.steps, t.every)?;
    let waves = assemble_wave(&ens, grid)?;
    let align = phase_alignment(&waves[0].psi, &exact.states[0])?;
    let sc = waves.iter().map(|w| rotate(&w.psi, align)).collect::<Result<_>>()?;
    Ok(GaussianRun {
        exact,
        sc,
        support: waves.into_iter().map(|w| w.support).collect(),
    })
}

/// Restrict a field on `fine` (a refinement of `coarse`) to the coarse
/// nodes.
fn restrict(f: &ComplexField, coarse: &Grid1D) -> Result<ComplexField> {
    ComplexField::new(*coarse, f.values().iter().step_by(2).take(coarse.n()).copied().collect())
}

fn free_gaussian(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid.line()?;
    let c = cfg.constants;
    let t = timing(cfg)?;
    let run = gaussian_run(cfg, &grid, &t)?;

    let fine_grid = grid.refined();
    let fine_t = Timing {
        dt: 0.5 * t.dt,
        steps: 2 * t.steps,
        every: 2 * t.every,
    };
    let fine = gaussian_run(cfg, &fine_grid, &fine_t)?;
    if fine.exact.times.len() != run.exact.times.len() {
        return Err(Error::InvalidParameter("refinement pair has mismatched snapshots".into()));
    }
    let mut bound = 0.0_f64;
    for s in 0..run.exact.len() {
        let de = l2_distance(&run.exact.states[s], &restrict(&fine.exact.states[s], &grid)?)?;
        let ds = l2_distance(&run.sc[s], &restrict(&fine.sc[s], &grid)?)?;
        bound = bound.max(de + ds);
    }

    // residuals compared where the semiclassical wave is defined and smooth
    let n = grid.n();
    let mut mask = vec![true; n];
    for (sup, psi) in run.support.iter().zip(&run.sc) {
        let floor = DensityFloor::default().resolve(psi.density().values())?;
        let dm = density_mask(&psi.density(), floor);
        let e = erode(sup, 2, grid.is_periodic());
        for i in 0..n {
            mask[i] &= e[i] && dm[i];
        }
    }
    let v = cfg.potential.sample(&grid, &c)?;
    let rows = compare_series(&run.exact.times, &run.sc, &run.exact.states, &v, &c, Some(&mask))?;
    let dt_snap = run.exact.times[1] - run.exact.times[0];
    let exact_res = schrodinger_residual(&run.exact.states, &v, &c, dt_snap, Some(&mask))?;
    let identity = rows
        .iter()
        .map(|r| (r.residual_norm / r.q_norm - 1.0).abs())
        .fold(0.0, f64::max);
    let exact_ratio = rows
        .iter()
        .zip(&exact_res)
        .map(|(r, e)| e.l2 / r.residual_norm)
        .fold(0.0, f64::max);

    let fields0 = decompose(&run.exact.states[0], &c, DensityFloor::default())?;
    let q_center = fields0.q.values()[grid.nearest(0.0)];
    let boundary = run
        .exact
        .states
        .iter()
        .map(|f| f.values()[0].norm_sqr().max(f.values()[n - 1].norm_sqr()))
        .fold(0.0, f64::max);
    let full_rows = compare_series(&run.exact.times, &run.sc, &run.exact.states, &v, &c, None)?;
    let l2_final = full_rows.last().unwrap().l2_error;

    let mut m = Metrics::new();
    m.set("q_center", q_center);
    m.set("q_center_rel_error", (q_center - 0.25).abs() / 0.25);
    m.set("q_max", fields0.q_max());
    m.set("l2_error", l2_final);
    m.set("l2_error_max", full_rows.iter().map(|r| r.l2_error).fold(0.0, f64::max));
    m.set("discretization_bound", bound);
    m.set("error_to_bound", l2_final / bound);
    m.set("residual_identity_error", identity);
    m.set("exact_residual_ratio", exact_ratio);
    m.set("boundary_density", boundary);
    m.set("norm_drift", norm_drift(&run.exact));

    let final_fields = decompose(run.sc.last().unwrap(), &c, DensityFloor::default())?;
    Ok(Outcome {
        metrics: m.0,
        resolution: resolution(cfg, Some(&t))?,
        artifacts: vec![
            artifact("exact_final.csv", |w| write_complex_csv(run.exact.last(), w))?,
            artifact("semiclassical_final.csv", |w| write_complex_csv(run.sc.last().unwrap(), w))?,
            artifact("fields_t0.csv", |w| fields0.write_csv(w))?,
            artifact("semiclassical_fields_final.csv", |w| final_fields.write_csv(w))?,
            artifact("compare.csv", |w| write_compare_csv(&full_rows, w))?,
        ],
    })
}

fn oscillator_eigen(cfg: &ScenarioConfig) -> Result<Outcome> {
    let grid = cfg.grid.line()?;
    let c = cfg.constants;
    let t = timing(cfg)?;
    let omega = match cfg.potential {
        PotentialSpec::Harmonic { omega } => omega,
        _ => return Err(Error::InvalidParameter("oscillator_eigen needs a harmonic potential".into())),
    };
    let k_max = param(cfg, "k_max")?;
    if !(k_max >= 0.0 && k_max.fract() == 0.0) {
        return Err(Error::InvalidParameter(format!("k_max must be a whole number, got {k_max}")));
    }
    let init = cfg.initial.clone().ok_or_else(|| missing("initial"))?;
    let x0 = match init {
        InitialState::Coherent { x0, .. } => x0,
        _ => 0.0,
    };
    let psi0 = init.sample(&grid, &c)?;
    let exact = exact_run(&psi0, cfg, &grid, &t)?;
    let basis = HermiteBasis::new(omega, c, k_max as usize, &grid)?;
    let coeffs = expand(&psi0, &basis)?;

    let mut l2 = 0.0_f64;
    let mut drift = 0.0_f64;
    let mut centroid = 0.0_f64;
    let mut last = None;
    for (time, state) in exact.times.iter().zip(&exact.states) {
        let ct = propagate_phases(&coeffs, *time, &basis);
        for (a, b) in ct.c.iter().zip(&coeffs.c) {
            drift = drift.max((a.norm() - b.norm()).abs());
        }
        let psi = synthesize(&ct, &grid, &basis)?;
        l2 = l2.max(l2_distance(&psi, state)?);
        centroid = centroid.max((position_expectation(state) - x0 * (omega * time).cos()).abs());
        last = Some((psi, ct));
    }
    let (eig_final, c_final) = last.expect("at least one snapshot");
    let period = 2.0 * PI / omega;
    let return_error = if (exact.times.last().unwrap() - period).abs() < 1e-9 {
        (1.0 - inner_product(&psi0, exact.last())?.norm()).abs()
    } else {
        f64::NAN
    };

    let mut m = Metrics::new();
    m.set("l2_error", l2);
    m.set("mode_magnitude_drift", drift);
    m.set("truncation_deficit", coeffs.deficit.abs());
    m.set("centroid_error", centroid);
    m.set("return_fidelity_error", return_error);
    m.set("norm_drift", norm_drift(&exact));
    Ok(Outcome {
        metrics: m.0,
        resolution: resolution(cfg, Some(&t))?,
        artifacts: vec![
            artifact("coefficients.csv", |w| coeffs.write_csv(w))?,
            artifact("coefficients_final.csv", |w| c_final.write_csv(w))?,
            artifact("exact_final.csv", |w| write_complex_csv(exact.last(), w))?,
            artifact("eigenbasis_final.csv", |w| write_complex_csv(&eig_final, w))?,
        ],
    })
}
