use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{l2_norm, ComplexField, Grid1D, RealField};
use crate::madelung::PhysicalConstants;
use crate::schrodinger::PotentialSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Strang splitting with the kinetic factor applied in Fourier space.
    /// Periodic grids only.
    SplitOperator,
    /// Implicit midpoint (Cayley) step with hard walls at the grid ends.
    /// Dirichlet grids only.
    CrankNicolson,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::SplitOperator => "split_operator",
            Method::CrankNicolson => "crank_nicolson",
        }
    }

    /// The method that matches a grid's boundary.
    pub fn for_grid(grid: &Grid1D) -> Method {
        if grid.is_periodic() {
            Method::SplitOperator
        } else {
            Method::CrankNicolson
        }
    }
}

/// Time discretization of a propagation run. A negative `dt` runs the
/// evolution backwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagatorConfig {
    pub dt: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    pub method: Method,
    pub constants: PhysicalConstants,
}

impl PropagatorConfig {
    pub fn new(dt: f64, steps: usize, method: Method, constants: PhysicalConstants) -> Self {
        PropagatorConfig {
            dt,
            steps,
            snapshot_every: steps.max(1),
            method,
            constants,
        }
    }

    pub fn with_snapshot_every(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be non-zero, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParameter("snapshot_every must be >= 1".into()));
        }
        match (self.method, grid.is_periodic()) {
            (Method::SplitOperator, false) => Err(Error::IncompatibleBoundary {
                method: "split_operator",
                boundary: "periodic",
            }),
            (Method::CrankNicolson, true) => Err(Error::IncompatibleBoundary {
                method: "crank_nicolson",
                boundary: "dirichlet",
            }),
            _ => Ok(()),
        }
    }
}

/// Wave functions at increasing (or, for `dt < 0`, decreasing) times.
#[derive(Clone, Debug)]
pub struct Snapshots {
    pub times: Vec<f64>,
    pub states: Vec<ComplexField>,
}

impl Snapshots {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &ComplexField {
        self.states.last().expect("snapshots are never empty")
    }
}

/// One time step applied in place.
pub(crate) trait Stepper {
    fn step(&mut self, psi: &mut [Complex64]);
}

pub(crate) struct SplitOperator {
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    scale: f64,
}

/// Angular wavenumbers in FFT order.
pub(crate) fn wavenumbers(grid: &Grid1D) -> Vec<f64> {
    let n = grid.n();
    let dk = 2.0 * std::f64::consts::PI / grid.span();
    (0..n)
        .map(|j| {
            let j = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            j * dk
        })
        .collect()
}

impl SplitOperator {
    pub(crate) fn new(grid: &Grid1D, v: &RealField, dt: f64, c: &PhysicalConstants) -> Self {
        let hbar = c.hbar();
        let half_potential = v
            .values()
            .iter()
            .map(|&v| Complex64::from_polar(1.0, -0.5 * v * dt / hbar))
            .collect();
        let kinetic = wavenumbers(grid)
            .into_iter()
            .map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * c.mass())))
            .collect();
        let mut planner = FftPlanner::new();
        let n = grid.n();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        SplitOperator {
            half_potential,
            kinetic,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            scale: 1.0 / n as f64,
        }
    }
}

impl Stepper for SplitOperator {
    fn step(&mut self, psi: &mut [Complex64]) {
        for (z, h) in psi.iter_mut().zip(&self.half_potential) {
            *z *= h;
        }
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (z, k) in psi.iter_mut().zip(&self.kinetic) {
            *z *= k * self.scale;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
        for (z, h) in psi.iter_mut().zip(&self.half_potential) {
            *z *= h;
        }
    }
}

/// `(1 + iΔH) ψ' = (1 - iΔH) ψ` with `Δ = dt/2ħ` and `H` the three-point
/// Hamiltonian on the interior nodes. The tridiagonal factorization is
/// computed once.
pub(crate) struct CrankNicolson {
    diag_h: Vec<f64>,
    off_h: f64,
    delta: f64,
    // Thomas sweep coefficients for the left-hand matrix
    upper: Vec<Complex64>,
    pivot: Vec<Complex64>,
    rhs: Vec<Complex64>,
}

impl CrankNicolson {
    pub(crate) fn new(grid: &Grid1D, v: &RealField, dt: f64, c: &PhysicalConstants) -> Self {
        let e = c.kinetic_prefactor() / (grid.dx() * grid.dx());
        let m = grid.n() - 2;
        let diag_h: Vec<f64> = v.values()[1..=m].iter().map(|&v| 2.0 * e + v).collect();
        let off_h = -e;
        let delta = dt / (2.0 * c.hbar());
        let i = Complex64::new(0.0, 1.0);
        let off = i * delta * off_h;
        let mut upper = vec![Complex64::new(0.0, 0.0); m];
        let mut pivot = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..m {
            let d = 1.0 + i * delta * diag_h[j];
            pivot[j] = if j == 0 { d } else { d - off * upper[j - 1] };
            upper[j] = off / pivot[j];
        }
        CrankNicolson {
            diag_h,
            off_h,
            delta,
            upper,
            pivot,
            rhs: vec![Complex64::new(0.0, 0.0); m],
        }
    }
}

impl Stepper for CrankNicolson {
    fn step(&mut self, psi: &mut [Complex64]) {
        let m = self.diag_h.len();
        let i = Complex64::new(0.0, 1.0);
        let off = i * self.delta * self.off_h;
        let inner = &psi[1..=m];
        for j in 0..m {
            let mut h = inner[j] * self.diag_h[j];
            if j > 0 {
                h += inner[j - 1] * self.off_h;
            }
            if j + 1 < m {
                h += inner[j + 1] * self.off_h;
            }
            self.rhs[j] = inner[j] - i * self.delta * h;
        }
        // forward sweep
        for j in 0..m {
            let prev = if j == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.rhs[j - 1]
            };
            self.rhs[j] = (self.rhs[j] - off * prev) / self.pivot[j];
        }
        for j in (0..m.saturating_sub(1)).rev() {
            let next = self.rhs[j + 1];
            self.rhs[j] -= self.upper[j] * next;
        }
        psi[0] = Complex64::new(0.0, 0.0);
        psi[m + 1] = Complex64::new(0.0, 0.0);
        psi[1..=m].copy_from_slice(&self.rhs);
    }
}

pub(crate) fn make_stepper(
    grid: &Grid1D,
    v: &RealField,
    cfg: &PropagatorConfig,
) -> Box<dyn Stepper + Send> {
    match cfg.method {
        Method::SplitOperator => Box::new(SplitOperator::new(grid, v, cfg.dt, &cfg.constants)),
        Method::CrankNicolson => Box::new(CrankNicolson::new(grid, v, cfg.dt, &cfg.constants)),
    }
}

/// Evolve `psi0` under `V`, recording the initial state, every
/// `snapshot_every`-th step, and the final step.
pub fn propagate(psi0: &ComplexField, v: &PotentialSpec, cfg: &PropagatorConfig) -> Result<Snapshots> {
    let grid = *psi0.grid().line()?;
    cfg.validate(&grid)?;
    let norm = l2_norm(psi0);
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NotNormalized { norm });
    }
    let vf = v.sample(&grid, &cfg.constants)?;
    let mut stepper = make_stepper(&grid, &vf, cfg);
    let mut psi = psi0.values().to_vec();
    if cfg.method == Method::CrankNicolson {
        psi[0] = Complex64::new(0.0, 0.0);
        let n = psi.len();
        psi[n - 1] = Complex64::new(0.0, 0.0);
    }
    let mut times = vec![0.0];
    let mut states = vec![ComplexField::new(grid, psi.clone())?];
    for step in 1..=cfg.steps {
        stepper.step(&mut psi);
        if step % cfg.snapshot_every == 0 || step == cfg.steps {
            if psi.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::Instability { step });
            }
            times.push(step as f64 * cfg.dt);
            states.push(ComplexField::new(grid, psi.clone())?);
        }
    }
    Ok(Snapshots { times, states })
}

/// `<ψ|H|ψ>/<ψ|ψ>` with the kinetic term matching the propagator for the
/// grid: spectral on periodic grids, three-point with walls otherwise.
pub fn energy(psi: &ComplexField, v: &RealField, c: &PhysicalConstants) -> Result<f64> {
    psi.same_grid(v)?;
    let grid = *psi.grid().line()?;
    let norm2 = l2_norm(psi).powi(2);
    let pot: f64 = psi
        .values()
        .iter()
        .zip(v.values())
        .zip(psi.grid().weights())
        .map(|((z, v), w)| z.norm_sqr() * v * w)
        .sum();
    let kin = if grid.is_periodic() {
        let n = grid.n();
        let mut buf = psi.values().to_vec();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let ks = wavenumbers(&grid);
        // Parseval: ∫|ψ|² = dx/n Σ|ψ̂|²
        buf.iter()
            .zip(&ks)
            .map(|(z, k)| z.norm_sqr() * c.kinetic_prefactor() * k * k)
            .sum::<f64>()
            * grid.dx()
            / n as f64
    } else {
        let e = c.kinetic_prefactor() / (grid.dx() * grid.dx());
        let p = psi.values();
        (1..p.len() - 1)
            .map(|j| {
                let hp = p[j] * 2.0 - p[j - 1] - p[j + 1];
                (p[j].conj() * hp).re * e
            })
            .sum::<f64>()
            * grid.dx()
    };
    Ok((kin + pot) / norm2)
}

/// `∫ x|ψ|²`.
pub fn position_expectation(psi: &ComplexField) -> f64 {
    let g = psi.grid();
    psi.values()
        .iter()
        .zip(g.weights())
        .enumerate()
        .map(|(i, (z, w))| g.x(i) * z.norm_sqr() * w)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::l2_distance;
    use crate::states::InitialState;
    use std::f64::consts::PI;

    fn c1() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn plane_wave_is_an_exact_eigenflow() {
        let g = Grid1D::periodic(0.0, 2.0 * PI, 128).unwrap();
        let psi0 = InitialState::PlaneWave { k: 2.0 }.sample(&g, &c1()).unwrap();
        let cfg = PropagatorConfig::new(1e-3, 1000, Method::SplitOperator, c1());
        let out = propagate(&psi0, &PotentialSpec::Free, &cfg).unwrap();
        let t = *out.times.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let exact = ComplexField::from_fn(g, |x| {
            Complex64::from_polar((2.0 * PI).powf(-0.5), 2.0 * x - 2.0 * t)
        })
        .unwrap();
        assert!(l2_distance(out.last(), &exact).unwrap() < 1e-8);
    }

    #[test]
    fn boundary_method_compatibility() {
        let p = Grid1D::periodic(-5.0, 5.0, 64).unwrap();
        let psi0 = InitialState::Gaussian {
            center: 0.0,
            sigma: 1.0,
            momentum: 0.0,
        }
        .sample(&p, &c1())
        .unwrap();
        let cfg = PropagatorConfig::new(1e-3, 1, Method::CrankNicolson, c1());
        assert!(matches!(
            propagate(&psi0, &PotentialSpec::Free, &cfg),
            Err(Error::IncompatibleBoundary { .. })
        ));
        let unnormalized = psi0.scaled(2.0);
        let cfg = PropagatorConfig::new(1e-3, 1, Method::SplitOperator, c1());
        assert!(matches!(
            propagate(&unnormalized, &PotentialSpec::Free, &cfg),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn crank_nicolson_box_mode_keeps_its_shape() {
        let g = Grid1D::dirichlet(0.0, 1.0, 501).unwrap();
        let psi0 = InitialState::BoxMode { n: 1 }.sample(&g, &c1()).unwrap();
        let cfg = PropagatorConfig::new(1e-4, 1000, Method::CrankNicolson, c1());
        let out = propagate(&psi0, &PotentialSpec::Box { width: 1.0 }, &cfg).unwrap();
        let d: f64 = out
            .last()
            .values()
            .iter()
            .zip(psi0.values())
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-8);
        assert!((l2_norm(out.last()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unstable_input_is_reported() {
        let g = Grid1D::periodic(-5.0, 5.0, 64).unwrap();
        let psi0 = InitialState::Gaussian {
            center: 0.0,
            sigma: 1.0,
            momentum: 0.0,
        }
        .sample(&g, &c1())
        .unwrap();
        let v = PotentialSpec::Tabulated {
            values: vec![f64::MAX; 64],
        };
        let cfg = PropagatorConfig::new(1e300, 2, Method::SplitOperator, c1());
        assert!(matches!(propagate(&psi0, &v, &cfg), Err(Error::Instability { .. })));
    }
}
