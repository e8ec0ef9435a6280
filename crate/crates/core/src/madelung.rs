//! Density/phase decomposition of a wave function, the quantum potential,
//! and residuals of the continuity, quantum Hamilton–Jacobi and
//! Schrödinger equations evaluated on sampled time series.
//!
//! Sign conventions: `Q = -(ħ²/2M) ∇²√ρ / √ρ`, and the phase equation is
//! `∂φ/∂t + (∇φ)²/2M + V + Q = 0`. Dropping `Q` therefore leaves a residual
//! of exactly `-Q` for any exact quantum solution.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    first_derivative, fmt_f64, laplacian, radial_laplacian_3d, ComplexField, Field,
    Grid, RealField, Sample,
};

#[derive(Deserialize)]
struct ConstantsRaw {
    hbar: f64,
    mass: f64,
}

/// ħ and M. Both default to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConstantsRaw")]
pub struct PhysicalConstants {
    hbar: f64,
    mass: f64,
}

impl TryFrom<ConstantsRaw> for PhysicalConstants {
    type Error = Error;

    fn try_from(raw: ConstantsRaw) -> Result<Self> {
        PhysicalConstants::new(raw.hbar, raw.mass)
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        Ok(PhysicalConstants { hbar, mass })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `ħ²/2M`, the prefactor of the kinetic term.
    pub fn kinetic_prefactor(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }
}

/// Threshold below which density is treated as zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityFloor {
    /// Fraction of the field's maximum density.
    Relative(f64),
    Absolute(f64),
}

impl Default for DensityFloor {
    fn default() -> Self {
        DensityFloor::Relative(1e-12)
    }
}

impl DensityFloor {
    pub fn resolve(&self, rho: &[f64]) -> Result<f64> {
        match *self {
            DensityFloor::Relative(f) if f.is_finite() && f > 0.0 => {
                Ok(f * rho.iter().cloned().fold(0.0, f64::max))
            }
            DensityFloor::Absolute(f) if f.is_finite() && f > 0.0 => Ok(f),
            _ => Err(Error::InvalidParameter(format!("density floor must be > 0: {self:?}"))),
        }
    }
}

/// `(ρ, φ, Q)` with the mask of nodes on which `φ` and `Q` are meaningful.
#[derive(Clone, Debug)]
pub struct MadelungFields {
    pub rho: RealField,
    pub phi: RealField,
    pub q: RealField,
    pub mask: Vec<bool>,
}

impl MadelungFields {
    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    pub fn masked_fraction(&self) -> f64 {
        excluded_fraction(&self.mask)
    }

    /// Largest `|Q|` over the mask.
    pub fn q_max(&self) -> f64 {
        masked_max(self.q.values(), &self.mask)
    }

    /// CSV `x,rho,phi,q,mask`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,rho,phi,q,mask")?;
        let g = self.grid();
        for i in 0..g.n() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_f64(g.x(i)),
                fmt_f64(self.rho.values()[i]),
                fmt_f64(self.phi.values()[i]),
                fmt_f64(self.q.values()[i]),
                u8::from(self.mask[i])
            )?;
        }
        Ok(())
    }
}

/// Norms of a residual field over the nodes it was evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub l2: f64,
    pub masked_fraction: f64,
}

impl ResidualReport {
    pub fn from_samples<T: Sample>(grid: &Grid, values: &[T], mask: &[bool]) -> Self {
        let max_abs = values
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.abs2().sqrt())
            .fold(0.0, f64::max);
        ResidualReport {
            max_abs,
            l2: crate::grid::masked_l2(grid, values, Some(mask)),
            masked_fraction: excluded_fraction(mask),
        }
    }

    /// Componentwise maximum over a series.
    pub fn worst(reports: &[ResidualReport]) -> ResidualReport {
        reports.iter().fold(
            ResidualReport {
                max_abs: 0.0,
                l2: 0.0,
                masked_fraction: 0.0,
            },
            |a, b| ResidualReport {
                max_abs: a.max_abs.max(b.max_abs),
                l2: a.l2.max(b.l2),
                masked_fraction: a.masked_fraction.max(b.masked_fraction),
            },
        )
    }
}

fn excluded_fraction(mask: &[bool]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    mask.iter().filter(|m| !**m).count() as f64 / mask.len() as f64
}

fn masked_max(values: &[f64], mask: &[bool]) -> f64 {
    values
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max)
}

/// Map a difference into `(-period/2, period/2]`.
pub(crate) fn wrap(d: f64, period: f64) -> f64 {
    let w = d - period * (d / period).round();
    if w <= -0.5 * period {
        w + period
    } else {
        w
    }
}

/// Nodes above the floor. On non-periodic grids the two end nodes are
/// always excluded: they have no centered stencil and the truncated domain
/// carries no boundary condition for `√ρ`.
pub fn density_mask(rho: &RealField, floor: f64) -> Vec<bool> {
    let n = rho.len();
    let periodic = rho.grid().is_periodic();
    rho.values()
        .iter()
        .enumerate()
        .map(|(i, &r)| r > floor && (periodic || (i != 0 && i != n - 1)))
        .collect()
}

/// Shrink a mask so every kept node has `radius` kept neighbours on each
/// side.
pub fn erode(mask: &[bool], radius: usize, periodic: bool) -> Vec<bool> {
    let n = mask.len() as isize;
    let r = radius as isize;
    (0..n)
        .map(|i| {
            (-r..=r).all(|o| {
                let j = i + o;
                if periodic {
                    mask[j.rem_euclid(n) as usize]
                } else {
                    (0..n).contains(&j) && mask[j as usize]
                }
            })
        })
        .collect()
}

/// `Q = -(ħ²/2M) ∇²√ρ/√ρ` on the density mask, zero elsewhere. Uses the 1D
/// Laplacian on line grids and the spherically symmetric one on radial
/// grids.
pub fn quantum_potential(
    rho: &RealField,
    constants: &PhysicalConstants,
    floor: DensityFloor,
) -> Result<RealField> {
    Ok(quantum_potential_masked(rho, constants, floor)?.0)
}

/// [`quantum_potential`] together with the mask it is valid on.
pub fn quantum_potential_masked(
    rho: &RealField,
    constants: &PhysicalConstants,
    floor: DensityFloor,
) -> Result<(RealField, Vec<bool>)> {
    if let Some(i) = rho.values().iter().position(|&r| r < 0.0) {
        return Err(Error::InvalidField(format!("negative density at node {i}")));
    }
    let floor = floor.resolve(rho.values())?;
    let mask = density_mask(rho, floor);
    let amp = rho.map(f64::sqrt)?;
    let lap = match rho.grid() {
        Grid::Line(_) => laplacian(&amp)?,
        Grid::Radial(_) => radial_laplacian_3d(&amp)?,
    };
    let pre = constants.kinetic_prefactor();
    let q = amp
        .values()
        .iter()
        .zip(lap.values())
        .zip(&mask)
        .map(|((&a, &l), &m)| if m { -pre * l / a } else { 0.0 })
        .collect();
    Ok((Field::new(*rho.grid(), q)?, mask))
}

/// `ψ → (ρ, φ, Q)`. The phase is `ħ·arg ψ`, unwrapped left to right within
/// each run of consecutive masked nodes; every run is anchored
/// independently at its leftmost node with `arg ψ ∈ (-π, π]`.
pub fn decompose(
    psi: &ComplexField,
    constants: &PhysicalConstants,
    floor: DensityFloor,
) -> Result<MadelungFields> {
    let rho = psi.density();
    let floor_value = floor.resolve(rho.values())?;
    let (q, mask) = quantum_potential_masked(&rho, constants, floor)?;
    if !rho.values().iter().any(|&r| r > floor_value) {
        return Err(Error::BelowFloor { floor: floor_value });
    }
    let hbar = constants.hbar();
    let mut phi = vec![0.0; psi.len()];
    let mut prev: Option<f64> = None;
    for (i, z) in psi.values().iter().enumerate() {
        if !mask[i] {
            prev = None;
            continue;
        }
        let a = z.arg();
        let unwrapped = match prev {
            None => a,
            Some(p) => p + wrap(a - p, 2.0 * PI),
        };
        phi[i] = hbar * unwrapped;
        prev = Some(unwrapped);
    }
    Ok(MadelungFields {
        phi: Field::new(*psi.grid(), phi)?,
        rho,
        q,
        mask,
    })
}

/// `ψ = √ρ e^{iφ/ħ}` on the mask, zero elsewhere.
pub fn reconstruct(fields: &MadelungFields, constants: &PhysicalConstants) -> ComplexField {
    let hbar = constants.hbar();
    let values = fields
        .rho
        .values()
        .iter()
        .zip(fields.phi.values())
        .zip(&fields.mask)
        .map(|((&r, &p), &m)| {
            if m {
                Complex64::from_polar(r.sqrt(), p / hbar)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Field::from_parts_unchecked(*fields.grid(), values)
}

/// `∇φ` from centered differences of the phase, each taken modulo `2πħ`.
pub fn phase_gradient(phi: &RealField, constants: &PhysicalConstants) -> Result<RealField> {
    let g = phi.grid().line()?;
    let period = 2.0 * PI * constants.hbar();
    let v = phi.values();
    let n = v.len();
    let h = g.dx();
    let d = |a: f64, b: f64| wrap(a - b, period);
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        out[i] = (d(v[i + 1], v[i]) + d(v[i], v[i - 1])) / (2.0 * h);
    }
    if g.is_periodic() {
        out[0] = (d(v[1], v[0]) + d(v[0], v[n - 1])) / (2.0 * h);
        out[n - 1] = (d(v[0], v[n - 1]) + d(v[n - 1], v[n - 2])) / (2.0 * h);
    } else {
        let (a, b) = (d(v[1], v[0]), d(v[2], v[1]));
        out[0] = (3.0 * a - b) / (2.0 * h);
        let (a, b) = (d(v[n - 1], v[n - 2]), d(v[n - 2], v[n - 3]));
        out[n - 1] = (3.0 * a - b) / (2.0 * h);
    }
    Field::new(*phi.grid(), out)
}

/// Finite-difference weights in time for a snapshot series.
///
/// Two snapshots give a single evaluation at the midpoint. Three or more
/// give one evaluation per snapshot: centered differences inside, one-sided
/// second-order at both ends.
struct TimeStencil {
    deriv: Vec<(usize, f64)>,
    value: Vec<(usize, f64)>,
}

impl TimeStencil {
    fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.deriv.iter().chain(&self.value).map(|(i, _)| *i)
    }
}

fn time_stencils(count: usize, dt: f64, min: usize) -> Result<Vec<TimeStencil>> {
    if count < min.max(2) {
        return Err(Error::TooFewSnapshots {
            needed: min.max(2),
            got: count,
        });
    }
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be non-zero, got {dt}")));
    }
    if count == 2 {
        return Ok(vec![TimeStencil {
            deriv: vec![(0, -1.0 / dt), (1, 1.0 / dt)],
            value: vec![(0, 0.5), (1, 0.5)],
        }]);
    }
    let c = 0.5 / dt;
    Ok((0..count)
        .map(|s| {
            let deriv = if s == 0 {
                vec![(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
            } else if s == count - 1 {
                vec![(s - 2, c), (s - 1, -4.0 * c), (s, 3.0 * c)]
            } else {
                vec![(s - 1, -c), (s + 1, c)]
            };
            TimeStencil {
                deriv,
                value: vec![(s, 1.0)],
            }
        })
        .collect())
}

fn joint_mask<'a>(masks: impl Iterator<Item = &'a [bool]>, n: usize) -> Vec<bool> {
    let mut out = vec![true; n];
    for m in masks {
        for (o, &v) in out.iter_mut().zip(m) {
            *o &= v;
        }
    }
    out
}

fn check_series(series: &[MadelungFields]) -> Result<()> {
    let g = series[0].grid();
    if series.iter().any(|f| f.grid() != g) {
        return Err(Error::GridMismatch);
    }
    g.line()?;
    Ok(())
}

/// `∇·(ρ∇φ/M)`.
fn flux_divergence(f: &MadelungFields, constants: &PhysicalConstants) -> Result<Vec<f64>> {
    let v = phase_gradient(&f.phi, constants)?;
    let m = constants.mass();
    let flux: Vec<f64> = f
        .rho
        .values()
        .iter()
        .zip(v.values())
        .map(|(r, v)| r * v / m)
        .collect();
    let g = f.grid().line()?;
    Ok(first_derivative(&flux, g.dx(), g.is_periodic()))
}

/// Residual of `∂ρ/∂t + ∇·(ρ∇φ/M)` between two snapshots `dt` apart,
/// evaluated at the midpoint in time.
pub fn continuity_residual(
    fields_t0: &MadelungFields,
    fields_t1: &MadelungFields,
    dt: f64,
    constants: &PhysicalConstants,
) -> Result<ResidualReport> {
    let series = [fields_t0.clone(), fields_t1.clone()];
    Ok(continuity_residual_series(&series, dt, constants)?.remove(0))
}

/// Continuity residual for each evaluation point of a uniformly spaced
/// series.
pub fn continuity_residual_series(
    series: &[MadelungFields],
    dt: f64,
    constants: &PhysicalConstants,
) -> Result<Vec<ResidualReport>> {
    let stencils = time_stencils(series.len(), dt, 2)?;
    check_series(series)?;
    let grid = *series[0].grid();
    let n = grid.n();
    let periodic = grid.is_periodic();
    let div: Vec<Vec<f64>> = series
        .iter()
        .map(|f| flux_divergence(f, constants))
        .collect::<Result<_>>()?;
    Ok(stencils
        .iter()
        .map(|st| {
            let mut r = vec![0.0; n];
            for &(s, w) in &st.deriv {
                for (ri, rho) in r.iter_mut().zip(series[s].rho.values()) {
                    *ri += w * rho;
                }
            }
            for &(s, w) in &st.value {
                for (ri, d) in r.iter_mut().zip(&div[s]) {
                    *ri += w * d;
                }
            }
            let mask = erode(
                &joint_mask(st.indices().map(|s| series[s].mask.as_slice()), n),
                2,
                periodic,
            );
            ResidualReport::from_samples(&grid, &r, &mask)
        })
        .collect())
}

/// Residual of `∂φ/∂t + (∇φ)²/2M + V (+ Q)` for each evaluation point of a
/// uniformly spaced series. With `include_q = false` an exact quantum
/// solution leaves `-Q`.
pub fn qhj_residual(
    series: &[MadelungFields],
    dt: f64,
    v: &RealField,
    constants: &PhysicalConstants,
    include_q: bool,
) -> Result<Vec<ResidualReport>> {
    Ok(qhj_residual_fields(series, dt, v, constants, include_q)?
        .into_iter()
        .map(|(r, mask)| ResidualReport::from_samples(v.grid(), &r, &mask))
        .collect())
}

/// Pointwise residual fields behind [`qhj_residual`], each with the mask it
/// is valid on.
pub fn qhj_residual_fields(
    series: &[MadelungFields],
    dt: f64,
    v: &RealField,
    constants: &PhysicalConstants,
    include_q: bool,
) -> Result<Vec<(Vec<f64>, Vec<bool>)>> {
    let stencils = time_stencils(series.len(), dt, 2)?;
    check_series(series)?;
    let grid = *series[0].grid();
    if v.grid() != &grid {
        return Err(Error::GridMismatch);
    }
    let n = grid.n();
    let period = 2.0 * PI * constants.hbar();
    let m = constants.mass();
    let spatial: Vec<Vec<f64>> = series
        .iter()
        .map(|f| {
            let g = phase_gradient(&f.phi, constants)?;
            Ok(g.values()
                .iter()
                .zip(v.values())
                .zip(f.q.values())
                .map(|((gp, vv), q)| gp * gp / (2.0 * m) + vv + if include_q { *q } else { 0.0 })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(stencils
        .iter()
        .map(|st| {
            let lo = st.indices().min().unwrap();
            let hi = st.indices().max().unwrap();
            let mut r = vec![0.0; n];
            for (i, ri) in r.iter_mut().enumerate() {
                // phases relative to snapshot `lo`, unwrapped along time
                let mut acc = 0.0;
                let mut rel = vec![0.0; hi - lo + 1];
                for s in lo + 1..=hi {
                    acc += wrap(series[s].phi.values()[i] - series[s - 1].phi.values()[i], period);
                    rel[s - lo] = acc;
                }
                *ri = st.deriv.iter().map(|&(s, w)| w * rel[s - lo]).sum::<f64>()
                    + st.value.iter().map(|&(s, w)| w * spatial[s][i]).sum::<f64>();
            }
            let mask = erode(
                &joint_mask(st.indices().map(|s| series[s].mask.as_slice()), n),
                1,
                grid.is_periodic(),
            );
            (r, mask)
        })
        .collect())
}

/// Residual of `[iħ∂t + (ħ²/2M)∇² - V]ψ` at every snapshot of a uniformly
/// spaced series (at least three snapshots). Optionally restricted to
/// `mask`; end nodes of non-periodic grids are always excluded.
pub fn schrodinger_residual(
    series: &[ComplexField],
    v: &RealField,
    constants: &PhysicalConstants,
    dt: f64,
    mask: Option<&[bool]>,
) -> Result<Vec<ResidualReport>> {
    Ok(schrodinger_residual_fields(series, v, constants, dt, mask)?
        .iter()
        .map(|(r, m)| ResidualReport::from_samples(v.grid(), r, m))
        .collect())
}

/// Pointwise residuals behind [`schrodinger_residual`].
pub fn schrodinger_residual_fields(
    series: &[ComplexField],
    v: &RealField,
    constants: &PhysicalConstants,
    dt: f64,
    mask: Option<&[bool]>,
) -> Result<Vec<(Vec<Complex64>, Vec<bool>)>> {
    let stencils = time_stencils(series.len(), dt, 3)?;
    let grid = *v.grid();
    if series.iter().any(|f| f.grid() != &grid) {
        return Err(Error::GridMismatch);
    }
    let line = grid.line()?;
    let n = grid.n();
    let mut base: Vec<bool> = match mask {
        Some(m) if m.len() == n => m.to_vec(),
        Some(m) => {
            return Err(Error::InvalidParameter(format!(
                "mask has {} entries for {n} nodes",
                m.len()
            )))
        }
        None => vec![true; n],
    };
    if !line.is_periodic() {
        base[0] = false;
        base[n - 1] = false;
    }
    let ih = Complex64::new(0.0, constants.hbar());
    let pre = constants.kinetic_prefactor();
    let lap: Vec<ComplexField> = series.iter().map(laplacian).collect::<Result<_>>()?;
    Ok(stencils
        .iter()
        .map(|st| {
            let s = st.value[0].0;
            let r = (0..n)
                .map(|i| {
                    let dpsi: Complex64 =
                        st.deriv.iter().map(|&(k, w)| series[k].values()[i] * w).sum();
                    ih * dpsi + lap[s].values()[i] * pre - series[s].values()[i] * v.values()[i]
                })
                .collect();
            (r, base.clone())
        })
        .collect())
}

/// `‖Q·ψ‖` over the density mask of `ψ`, further restricted to `mask`.
pub fn q_psi_norm(
    psi: &ComplexField,
    constants: &PhysicalConstants,
    floor: DensityFloor,
    mask: Option<&[bool]>,
) -> Result<f64> {
    let (q, qmask) = quantum_potential_masked(&psi.density(), constants, floor)?;
    let combined: Vec<bool> = match mask {
        Some(m) => qmask.iter().zip(m).map(|(a, b)| *a && *b).collect(),
        None => qmask,
    };
    let prod: Vec<Complex64> = psi
        .values()
        .iter()
        .zip(q.values())
        .map(|(z, q)| z * q)
        .collect();
    Ok(crate::grid::masked_l2(psi.grid(), &prod, Some(&combined)))
}
