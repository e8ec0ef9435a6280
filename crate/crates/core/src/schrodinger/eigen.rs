//! Lowest eigenpairs of the three-point Hamiltonian with hard walls.
//!
//! The matrix is symmetric tridiagonal on the interior nodes. Eigenvalues
//! come from Sturm-sequence bisection and eigenvectors from inverse
//! iteration with a partially pivoted tridiagonal factorization.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, RealField};
use crate::madelung::PhysicalConstants;
use crate::schrodinger::PotentialSpec;

/// Relative shift of the highest requested energy under grid refinement
/// above which the states are reported as unresolved.
pub const REFINEMENT_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct StationaryStates {
    pub energies: Vec<f64>,
    /// Real eigenfunctions on the full grid (zero at the walls), normalized,
    /// signed so the rightmost significant lobe is positive.
    pub states: Vec<RealField>,
}

#[derive(Clone, Debug)]
pub(crate) struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Tridiagonal {
    pub(crate) fn hamiltonian(grid: &Grid1D, v: &RealField, c: &PhysicalConstants) -> Self {
        let e = c.kinetic_prefactor() / (grid.dx() * grid.dx());
        let m = grid.n() - 2;
        Tridiagonal {
            diag: v.values()[1..=m].iter().map(|&v| 2.0 * e + v).collect(),
            off: -e,
        }
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off * x[i - 1];
                }
                if i + 1 < m {
                    s += self.off * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `lambda`.
    fn count_below(&self, lambda: f64) -> usize {
        let off2 = self.off * self.off;
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - lambda } else { d - lambda - off2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + self.off.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().fold(f64::INFINITY, |a, &d| a.min(d - r));
        let hi = self.diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d + r));
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based).
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solve `(T - shift) x = b` by Gaussian elimination with partial
    /// pivoting.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let m = self.diag.len();
        let tiny = f64::EPSILON * (self.diag.iter().fold(0.0_f64, |a, d| a.max(d.abs())) + self.off.abs());
        // row i holds (a0, a1, a2) at columns i, i+1, i+2 after elimination
        let mut u0 = vec![0.0; m];
        let mut u1 = vec![0.0; m];
        let mut u2 = vec![0.0; m];
        let mut rhs = b.to_vec();
        let mut cur = [self.diag[0] - shift, if m > 1 { self.off } else { 0.0 }, 0.0];
        for i in 0..m {
            if i + 1 < m {
                let next = [
                    self.off,
                    self.diag[i + 1] - shift,
                    if i + 2 < m { self.off } else { 0.0 },
                ];
                // candidates for pivot row at column i: cur (cols i..i+2), next (cols i..i+2)
                let (mut p, mut q, mut rp, mut rq) = (cur, next, rhs[i], rhs[i + 1]);
                if q[0].abs() > p[0].abs() {
                    std::mem::swap(&mut p, &mut q);
                    std::mem::swap(&mut rp, &mut rq);
                }
                if p[0].abs() < tiny {
                    p[0] = tiny;
                }
                let f = q[0] / p[0];
                u0[i] = p[0];
                u1[i] = p[1];
                u2[i] = p[2];
                rhs[i] = rp;
                rhs[i + 1] = rq - f * rp;
                cur = [q[1] - f * p[1], q[2] - f * p[2], 0.0];
            } else {
                u0[i] = if cur[0].abs() < tiny { tiny } else { cur[0] };
            }
        }
        let mut x = vec![0.0; m];
        for i in (0..m).rev() {
            let mut s = rhs[i];
            if i + 1 < m {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < m {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        x
    }
}

fn normalize(x: &mut [f64], dx: f64) {
    let n = (x.iter().map(|v| v * v).sum::<f64>() * dx).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

fn eigenpairs(t: &Tridiagonal, count: usize, dx: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = t.diag.len();
    let mut energies = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let lambda = t.eigenvalue(k);
        // deterministic start vector with components along every mode
        let mut x: Vec<f64> = (0..m).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).sin()).collect();
        for _ in 0..3 {
            x = t.solve_shifted(lambda, &x);
            for prev in &vectors {
                let d: f64 = x.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() * dx;
                x.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
            }
            normalize(&mut x, dx);
        }
        let hx = t.apply(&x);
        let e = x.iter().zip(&hx).map(|(a, b)| a * b).sum::<f64>() * dx;
        let peak = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if let Some(last) = x.iter().rev().find(|v| v.abs() > 1e-3 * peak) {
            if *last < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
        }
        energies.push(e);
        vectors.push(x);
    }
    (energies, vectors)
}

/// The `k_max + 1` lowest eigenpairs of `H = -(ħ²/2M)∇² + V` on a Dirichlet
/// grid. The highest energy is recomputed on the refined grid and the call
/// fails if it moves by more than [`REFINEMENT_TOLERANCE`] (relative).
pub fn stationary_states(
    v: &PotentialSpec,
    grid: &Grid1D,
    constants: &PhysicalConstants,
    k_max: usize,
) -> Result<StationaryStates> {
    if grid.is_periodic() {
        return Err(Error::WrongGrid { expected: "dirichlet" });
    }
    let m = grid.n() - 2;
    if k_max + 1 > m {
        return Err(Error::UnresolvedStates {
            k_max,
            shift: f64::INFINITY,
        });
    }
    let vf = v.sample(grid, constants)?;
    let t = Tridiagonal::hamiltonian(grid, &vf, constants);
    let (energies, vectors) = eigenpairs(&t, k_max + 1, grid.dx());

    let fine = grid.refined();
    let fine_t = Tridiagonal::hamiltonian(&fine, &v.sample(&fine, constants)?, constants);
    let top = energies[k_max];
    let shift = ((fine_t.eigenvalue(k_max) - top) / top.abs().max(f64::MIN_POSITIVE)).abs();
    if shift > REFINEMENT_TOLERANCE {
        return Err(Error::UnresolvedStates { k_max, shift });
    }

    let states = vectors
        .into_iter()
        .map(|x| {
            let mut full = Vec::with_capacity(grid.n());
            full.push(0.0);
            full.extend(x);
            full.push(0.0);
            RealField::new(*grid, full)
        })
        .collect::<Result<_>>()?;
    Ok(StationaryStates { energies, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner_product;
    use std::f64::consts::PI;

    fn c1() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn sturm_count_matches_small_matrix() {
        // diag 2, off -1, m = 3: eigenvalues 2 - 2cos(jπ/4)
        let t = Tridiagonal {
            diag: vec![2.0; 3],
            off: -1.0,
        };
        for j in 1..=3 {
            let exact = 2.0 - 2.0 * (j as f64 * PI / 4.0).cos();
            assert!((t.eigenvalue(j - 1) - exact).abs() < 1e-13);
        }
        assert_eq!(t.count_below(0.0), 0);
        assert_eq!(t.count_below(10.0), 3);
    }

    #[test]
    fn harmonic_spectrum_and_residuals() {
        let g = Grid1D::dirichlet(-10.0, 10.0, 8001).unwrap();
        let v = PotentialSpec::Harmonic { omega: 1.0 };
        let s = stationary_states(&v, &g, &c1(), 10).unwrap();
        let t = Tridiagonal::hamiltonian(&g, &v.sample(&g, &c1()).unwrap(), &c1());
        for (k, (e, psi)) in s.energies.iter().zip(&s.states).enumerate() {
            assert!((e - (k as f64 + 0.5)).abs() < 1e-4, "E_{k} = {e}");
            let x = &psi.values()[1..g.n() - 1];
            let hx = t.apply(x);
            let r = hx
                .iter()
                .zip(x)
                .map(|(h, x)| (h - e * x).powi(2))
                .sum::<f64>()
                * g.dx();
            assert!(r.sqrt() < 1e-6, "residual {}", r.sqrt());
        }
        for j in 0..s.states.len() {
            for k in 0..s.states.len() {
                let ip = inner_product(&s.states[j], &s.states[k]).unwrap().re;
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn box_spectrum() {
        let g = Grid1D::dirichlet(0.0, 1.0, 1001).unwrap();
        let boxed = stationary_states(&PotentialSpec::Box { width: 1.0 }, &g, &c1(), 4).unwrap();
        let free = stationary_states(&PotentialSpec::Free, &g, &c1(), 4).unwrap();
        for n in 1..=5 {
            let exact = (n * n) as f64 * PI * PI / 2.0;
            assert!(((boxed.energies[n - 1] - exact) / exact).abs() < 1e-3);
            assert_eq!(boxed.energies[n - 1], free.energies[n - 1]);
        }
    }

    #[test]
    fn unresolved_states_are_flagged() {
        let g = Grid1D::dirichlet(0.0, 1.0, 21).unwrap();
        assert!(matches!(
            stationary_states(&PotentialSpec::Free, &g, &c1(), 15),
            Err(Error::UnresolvedStates { .. })
        ));
        let p = Grid1D::periodic(0.0, 1.0, 20).unwrap();
        assert!(stationary_states(&PotentialSpec::Free, &p, &c1(), 1).is_err());
    }
}
