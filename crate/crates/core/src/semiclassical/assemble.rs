use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{l2_norm, ComplexField, Grid1D, RealField};
use crate::interp::Pchip;
use crate::madelung::wrap;

use super::{Domain, TrajectoryEnsemble};

/// Semiclassical wave function at one time, with the nodes covered by the
/// ensemble.
#[derive(Clone, Debug)]
pub struct SemiclassicalWave {
    pub t: f64,
    pub psi: ComplexField,
    pub support: Vec<bool>,
}

/// Sign of the current momentum selecting one branch of a multi-branch
/// flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

/// Samples of one single-valued branch, ordered by coordinate.
struct Branch {
    coord: Vec<f64>,
    rho: Vec<f64>,
    action: Vec<f64>,
    /// Period when the coordinate is unwrapped on a periodic domain.
    period: Option<f64>,
}

struct Rendered {
    rho: Vec<f64>,
    phase: Vec<f64>,
    support: Vec<bool>,
}

fn check_grid(domain: &Domain, grid: &Grid1D) -> Result<()> {
    let (a, b) = domain.bounds();
    let same = (grid.xmin() - a).abs() <= 1e-12 * (1.0 + a.abs())
        && (grid.xmax() - b).abs() <= 1e-12 * (1.0 + b.abs());
    match domain {
        Domain::Periodic { .. } if !(grid.is_periodic() && same) => Err(Error::InvalidParameter(
            "a periodic ensemble needs a periodic grid over the same interval".into(),
        )),
        Domain::Walls { .. } if grid.is_periodic() || !same => Err(Error::InvalidParameter(
            "a walled ensemble needs a dirichlet grid spanning the walls".into(),
        )),
        _ => Ok(()),
    }
}

fn unwrap_along(values: &mut [f64], period: f64) {
    for i in 1..values.len() {
        values[i] = values[i - 1] + wrap(values[i] - values[i - 1], period);
    }
}

impl Branch {
    fn single(ens: &TrajectoryEnsemble, s: usize) -> Result<Branch> {
        let trs = &ens.trajectories;
        let t = trs[0].samples[s].t;
        let rho: Vec<f64> = trs
            .iter()
            .zip(&ens.rho0)
            .map(|(tr, r)| r / tr.samples[s].jacobian.abs())
            .collect();
        let action: Vec<f64> = trs.iter().map(|tr| tr.samples[s].action).collect();
        let (mut coord, period) = match ens.config.domain {
            Domain::Periodic { xmin, xmax } => (
                trs.iter().map(|tr| tr.samples[s].unfolded).collect::<Vec<_>>(),
                Some(xmax - xmin),
            ),
            _ => (trs.iter().map(|tr| tr.samples[s].x).collect(), None),
        };
        let (mut rho, mut action) = (rho, action);
        if matches!(ens.config.domain, Domain::Walls { .. }) && coord[coord.len() - 1] < coord[0] {
            coord.reverse();
            rho.reverse();
            action.reverse();
        }
        if let Some(w) = coord.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::BranchFolding { t, x: w[0] });
        }
        if let Some(p) = period {
            if coord[coord.len() - 1] - coord[0] >= p {
                return Err(Error::BranchFolding { t, x: coord[0] });
            }
        }
        Ok(Branch {
            coord,
            rho,
            action,
            period,
        })
    }

    fn render(mut self, grid: &Grid1D, hbar: f64) -> Result<Rendered> {
        unwrap_along(&mut self.action, 2.0 * PI * hbar);
        let n = self.coord.len();
        let spacing = |i: usize| self.coord[i + 1] - self.coord[i];
        let (first_h, last_h) = (spacing(0), spacing(n - 2));
        let base = self.coord[0];
        let mut closed = false;
        if let Some(p) = self.period {
            let gap = base + p - self.coord[n - 1];
            if gap <= 2.0 * first_h.max(last_h) {
                closed = true;
                let shift = self.action[n - 1] + wrap(self.action[0] - self.action[n - 1], 2.0 * PI * hbar)
                    - self.action[0];
                let (r0, a0) = (self.rho[0], self.action[0]);
                let (c1, r1, a1) = (self.coord[n - 1], self.rho[n - 1], self.action[n - 1]);
                self.coord.insert(0, c1 - p);
                self.rho.insert(0, r1);
                self.action.insert(0, a1 - shift);
                self.coord.push(base + p);
                self.rho.push(r0);
                self.action.push(a0 + shift);
            }
        }
        let lo = self.coord[0];
        let hi = self.coord[self.coord.len() - 1];
        let rho_i = Pchip::new(self.coord.clone(), self.rho)?;
        let act_i = Pchip::new(self.coord, self.action)?;
        let m = grid.n();
        let mut out = Rendered {
            rho: vec![0.0; m],
            phase: vec![0.0; m],
            support: vec![false; m],
        };
        for i in 0..m {
            let x = grid.x(i);
            let u = match self.period {
                Some(p) if closed => base + (x - base).rem_euclid(p),
                // representative closest to the covered interval
                Some(p) => x + p * ((0.5 * (lo + hi) - x) / p).round(),
                None => x,
            };
            let inside = closed || (u >= lo - first_h && u <= hi + last_h);
            if inside {
                out.rho[i] = rho_i.eval(u).max(0.0);
                out.phase[i] = act_i.eval(u);
                out.support[i] = true;
            }
        }
        Ok(out)
    }
}

fn to_wave(t: f64, r: Rendered, grid: &Grid1D, hbar: f64) -> Result<SemiclassicalWave> {
    let values: Vec<Complex64> = r
        .rho
        .iter()
        .zip(&r.phase)
        .map(|(rho, s)| Complex64::from_polar(rho.sqrt(), s / hbar))
        .collect();
    let psi = ComplexField::new(*grid, values)?;
    let norm = l2_norm(&psi);
    if norm == 0.0 {
        return Err(Error::InvalidField(format!("semiclassical wave vanishes on the grid at t = {t}")));
    }
    Ok(SemiclassicalWave {
        t,
        psi: psi.scaled(1.0 / norm),
        support: r.support,
    })
}

/// Classical density `ρ₀(x₀)/|J|` interpolated onto `grid` at every
/// sampled time. Zero outside the region the ensemble covers.
pub fn transport_density(ens: &TrajectoryEnsemble, grid: &Grid1D) -> Result<Vec<RealField>> {
    check_grid(&ens.config.domain, grid)?;
    (0..ens.snapshot_count())
        .map(|s| {
            let r = Branch::single(ens, s)?.render(grid, ens.config.constants.hbar())?;
            RealField::new(*grid, r.rho)
        })
        .collect()
}

/// `√ρ e^{iS/ħ}` from the transported density and accumulated action,
/// normalized on `grid`, at every sampled time.
pub fn assemble_wave(ens: &TrajectoryEnsemble, grid: &Grid1D) -> Result<Vec<SemiclassicalWave>> {
    check_grid(&ens.config.domain, grid)?;
    let hbar = ens.config.constants.hbar();
    (0..ens.snapshot_count())
        .map(|s| {
            let t = ens.trajectories[0].samples[s].t;
            let r = Branch::single(ens, s)?.render(grid, hbar)?;
            to_wave(t, r, grid, hbar)
        })
        .collect()
}

/// Like [`assemble_wave`], but built from the trajectories of all
/// `ensembles` currently moving in `direction`. Each source ensemble keeps
/// its own initial density.
pub fn assemble_branch(
    ensembles: &[&TrajectoryEnsemble],
    grid: &Grid1D,
    direction: Direction,
) -> Result<Vec<SemiclassicalWave>> {
    let first = ensembles
        .first()
        .ok_or_else(|| Error::InvalidParameter("no ensembles to assemble".into()))?;
    let times = first.times();
    for e in ensembles {
        check_grid(&e.config.domain, grid)?;
        if e.times() != times {
            return Err(Error::InvalidParameter("ensembles are sampled at different times".into()));
        }
    }
    let hbar = first.config.constants.hbar();
    let wanted = match direction {
        Direction::Right => 1.0,
        Direction::Left => -1.0,
    };
    (0..times.len())
        .map(|s| {
            let mut pts: Vec<(f64, f64, f64)> = ensembles
                .iter()
                .flat_map(|e| {
                    e.trajectories.iter().zip(&e.rho0).filter_map(move |(tr, r0)| {
                        let smp = &tr.samples[s];
                        (smp.p * wanted > 0.0).then(|| (smp.x, r0 / smp.jacobian.abs(), smp.action))
                    })
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pts.len() < 3 {
                return Err(Error::InvalidParameter(format!(
                    "branch has {} trajectories at t = {}",
                    pts.len(),
                    times[s]
                )));
            }
            if let Some(w) = pts.windows(2).find(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::BranchFolding { t: times[s], x: w[0].0 });
            }
            let branch = Branch {
                coord: pts.iter().map(|p| p.0).collect(),
                rho: pts.iter().map(|p| p.1).collect(),
                action: pts.iter().map(|p| p.2).collect(),
                period: None,
            };
            to_wave(times[s], branch.render(grid, hbar)?, grid, hbar)
        })
        .collect()
}
