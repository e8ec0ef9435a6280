use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::fmt_f64;
use crate::schrodinger::PotentialSpec;

use super::{Domain, EnsembleConfig};

/// `|∂x/∂x₀|` below this is treated as a caustic.
pub const CAUSTIC_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    /// Physical position inside the domain.
    pub x: f64,
    /// Physical momentum.
    pub p: f64,
    pub action: f64,
    /// `∂u/∂x₀` of the unfolded coordinate.
    pub jacobian: f64,
    /// Position before wrapping or reflection.
    pub unfolded: f64,
    /// `unfolded - x₀`, accumulated on its own so that neighbouring
    /// trajectories difference without cancellation.
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: f64,
    pub p0: f64,
    pub samples: Vec<TrajectorySample>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    pub config: EnsembleConfig,
    /// `ρ₀(x₀)` for each trajectory.
    pub rho0: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub potential: PotentialSpec,
}

impl TrajectoryEnsemble {
    pub fn times(&self) -> Vec<f64> {
        self.trajectories[0].samples.iter().map(|s| s.t).collect()
    }

    pub fn snapshot_count(&self) -> usize {
        self.trajectories[0].samples.len()
    }

    /// Largest relative drift of `p²/2M + V` over all samples.
    pub fn max_energy_drift(&self) -> Result<f64> {
        let c = &self.config.constants;
        let h = |s: &TrajectorySample| -> Result<f64> {
            Ok(s.p * s.p / (2.0 * c.mass()) + self.potential.value_at(s.x, c)?)
        };
        let mut worst = 0.0_f64;
        for tr in &self.trajectories {
            let e0 = h(&tr.samples[0])?;
            let scale = e0.abs().max(f64::MIN_POSITIVE);
            for s in &tr.samples[1..] {
                worst = worst.max((h(s)? - e0).abs() / scale);
            }
        }
        Ok(worst)
    }

    /// Long-format CSV `t,x0,p0,x,p,action,jacobian`, ordered by time then
    /// initial position.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x0,p0,x,p,action,jacobian")?;
        for s in 0..self.snapshot_count() {
            for tr in &self.trajectories {
                let p = &tr.samples[s];
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    fmt_f64(p.t),
                    fmt_f64(tr.x0),
                    fmt_f64(tr.p0),
                    fmt_f64(p.x),
                    fmt_f64(p.p),
                    fmt_f64(p.action),
                    fmt_f64(p.jacobian)
                )?;
            }
        }
        Ok(())
    }
}

/// Derivative of samples `u` with respect to `x0` at node `i` from the 3-point
/// Lagrange interpolant through neighbouring trajectories.
fn lagrange_derivative(x: &[f64], u: &[f64], i: usize) -> f64 {
    let n = x.len();
    let (a, b, c) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let t = x[i];
    let (xa, xb, xc) = (x[a], x[b], x[c]);
    // weights sum to zero, so differences from u[i] give the same result
    // without the round-off of large offsets
    let (ua, ub, uc) = (u[a] - u[i], u[b] - u[i], u[c] - u[i]);
    ua * ((t - xb) + (t - xc)) / ((xa - xb) * (xa - xc))
        + ub * ((t - xa) + (t - xc)) / ((xb - xa) * (xb - xc))
        + uc * ((t - xa) + (t - xb)) / ((xc - xa) * (xc - xb))
}

/// Compensated summation, keeps long position and action sums at round-off.
fn kahan_add(sum: &mut f64, comp: &mut f64, term: f64) {
    let y = term - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

struct Integrator<'a> {
    v: &'a PotentialSpec,
    cfg: &'a EnsembleConfig,
    dt: f64,
    steps: usize,
    sample_every: usize,
}

impl Integrator<'_> {
    fn force(&self, u: f64) -> f64 {
        let (x, sign) = self.cfg.domain.fold(u);
        sign * self.v.force_at(x, &self.cfg.constants).unwrap_or(0.0)
    }

    fn lagrangian(&self, u: f64, p: f64) -> f64 {
        let (x, _) = self.cfg.domain.fold(u);
        let c = &self.cfg.constants;
        p * p / (2.0 * c.mass()) - self.v.value_at(x, c).unwrap_or(0.0)
    }

    fn sample(&self, t: f64, x0: f64, d: f64, p: f64, action: f64) -> TrajectorySample {
        let u = x0 + d;
        let (x, sign) = self.cfg.domain.fold(u);
        TrajectorySample {
            t,
            x,
            p: sign * p,
            action,
            jacobian: 1.0,
            unfolded: u,
            displacement: d,
        }
    }

    fn run(&self, x0: f64) -> Result<Trajectory> {
        let m = self.cfg.constants.mass();
        let dt = self.dt;
        let p0 = self.cfg.phase.momentum(x0);
        let (mut d, mut p) = (0.0, p0);
        let mut action = self.cfg.phase.phase(x0);
        let (mut d_comp, mut action_comp) = (0.0, 0.0);
        let mut samples = vec![self.sample(0.0, x0, d, p, action)];
        let mut f = self.force(x0);
        let (xmin, xmax) = self.cfg.domain.bounds();
        for step in 1..=self.steps {
            let u = x0 + d;
            let l0 = self.lagrangian(u, p);
            let p_half = p + 0.5 * dt * f;
            let l_mid = self.lagrangian(u + 0.5 * dt * p_half / m, p_half);
            kahan_add(&mut d, &mut d_comp, dt * p_half / m);
            let u = x0 + d;
            f = self.force(u);
            p = p_half + 0.5 * dt * f;
            let dl = dt / 6.0 * (l0 + 4.0 * l_mid + self.lagrangian(u, p));
            kahan_add(&mut action, &mut action_comp, dl);
            let t = step as f64 * dt;
            if matches!(self.cfg.domain, Domain::Open { .. }) && !(xmin..=xmax).contains(&u) {
                return Err(Error::TrajectoryEscaped { x0, t });
            }
            if step % self.sample_every == 0 || step == self.steps {
                samples.push(self.sample(t, x0, d, p, action));
            }
        }
        Ok(Trajectory { x0, p0, samples })
    }
}

/// Integrate Hamilton's equations for every member of the ensemble with
/// velocity Verlet, accumulating the action by Simpson's rule over each
/// step. Samples are kept at `t = 0`, every `sample_every` steps, and the
/// final step.
pub fn integrate_trajectories(
    cfg: &EnsembleConfig,
    v: &PotentialSpec,
    dt: f64,
    steps: usize,
    sample_every: usize,
) -> Result<TrajectoryEnsemble> {
    cfg.validate()?;
    v.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    if steps == 0 || sample_every == 0 {
        return Err(Error::InvalidParameter("steps and sample_every must be >= 1".into()));
    }
    let positions = cfg.positions();
    match (cfg.domain, v) {
        (Domain::Walls { .. }, PotentialSpec::Free | PotentialSpec::Box { .. }) => {}
        (Domain::Walls { .. }, _) => {
            return Err(Error::UnsupportedPotential(format!(
                "{} between reflecting walls",
                v.name()
            )))
        }
        _ => {
            v.force_at(positions[0], &cfg.constants)?;
            v.value_at(positions[0], &cfg.constants)?;
        }
    }
    let integrator = Integrator {
        v,
        cfg,
        dt,
        steps,
        sample_every,
    };
    let mut trajectories = positions
        .par_iter()
        .map(|&x0| integrator.run(x0))
        .collect::<Vec<Result<Trajectory>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let count = trajectories[0].samples.len();
    for s in 0..count {
        let d: Vec<f64> = trajectories.iter().map(|tr| tr.samples[s].displacement).collect();
        for (i, tr) in trajectories.iter_mut().enumerate() {
            tr.samples[s].jacobian = 1.0 + lagrange_derivative(&positions, &d, i);
        }
        if let Some(tr) = trajectories
            .iter()
            .find(|tr| tr.samples[s].jacobian.abs() < CAUSTIC_THRESHOLD)
        {
            let smp = &tr.samples[s];
            return Err(Error::Caustic {
                t: smp.t,
                x0: tr.x0,
                jacobian: smp.jacobian,
            });
        }
    }
    let rho0 = positions.iter().map(|&x| cfg.density.value(x)).collect();
    Ok(TrajectoryEnsemble {
        config: cfg.clone(),
        rho0,
        trajectories,
        potential: v.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical::{InitialDensity, InitialPhase};
    use std::f64::consts::PI;

    fn open() -> Domain {
        Domain::Open {
            xmin: -50.0,
            xmax: 50.0,
        }
    }

    #[test]
    fn free_particle_action() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: -0.5, b: 0.5 },
            InitialPhase::UniformMomentum { momentum: 1.0 },
            open(),
        )
        .with_size(5);
        let ens = integrate_trajectories(&cfg, &PotentialSpec::Free, 1e-2, 200, 200).unwrap();
        let tr = &ens.trajectories[2];
        assert_eq!(tr.x0, 0.0);
        let last = tr.samples.last().unwrap();
        assert!((last.t - 2.0).abs() < 1e-12);
        assert!((last.x - 2.0).abs() < 1e-12);
        assert!((last.action - 1.0).abs() < 1e-12);
        assert!((last.jacobian - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_jacobian_closed_form() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: 0.5, b: 1.5 },
            InitialPhase::Zero,
            open(),
        )
        .with_size(101);
        let steps = 1000;
        let dt = PI / 4.0 / steps as f64;
        let ens =
            integrate_trajectories(&cfg, &PotentialSpec::Harmonic { omega: 1.0 }, dt, steps, steps).unwrap();
        let tr = &ens.trajectories[50];
        assert!((tr.x0 - 1.0).abs() < 1e-14);
        let s = tr.samples.last().unwrap();
        let c = (PI / 4.0).cos();
        assert!((s.x - c).abs() < 1e-4);
        assert!((s.jacobian - c).abs() < 1e-4);
    }

    #[test]
    fn harmonic_period_returns() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: -2.0, b: 2.0 },
            InitialPhase::LinearMomentum { slope: 0.3 },
            open(),
        )
        .with_size(9);
        let dt = 1e-4;
        let steps = (2.0 * PI / dt).round() as usize;
        let dt = 2.0 * PI / steps as f64;
        let v = PotentialSpec::Harmonic { omega: 1.0 };
        let ens = integrate_trajectories(&cfg, &v, dt, steps, steps).unwrap();
        for tr in &ens.trajectories {
            let s = tr.samples.last().unwrap();
            assert!((s.x - tr.x0).abs() < 1e-6);
            assert!((s.p - tr.p0).abs() < 1e-6);
        }
        assert!(ens.max_energy_drift().unwrap() < 1e-6);
    }

    #[test]
    fn caustic_is_reported() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: 0.5, b: 1.5 },
            InitialPhase::Zero,
            open(),
        )
        .with_size(11);
        let v = PotentialSpec::Harmonic { omega: 1.0 };
        let err = integrate_trajectories(&cfg, &v, 1e-3, 2000, 1).unwrap_err();
        match err {
            Error::Caustic { t, jacobian, .. } => {
                assert!((t - PI / 2.0).abs() < 2e-3);
                assert!(jacobian.abs() < CAUSTIC_THRESHOLD);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn escape_is_reported() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: -1.0, b: 1.0 },
            InitialPhase::UniformMomentum { momentum: 1.0 },
            Domain::Open { xmin: -2.0, xmax: 2.0 },
        )
        .with_size(5);
        assert!(matches!(
            integrate_trajectories(&cfg, &PotentialSpec::Free, 0.1, 30, 1),
            Err(Error::TrajectoryEscaped { .. })
        ));
    }

    #[test]
    fn walls_reflect_and_keep_jacobian() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: 0.0, b: 1.0 },
            InitialPhase::UniformMomentum { momentum: 1.0 },
            Domain::Walls { xmin: 0.0, xmax: 1.0 },
        )
        .with_size(8);
        let ens = integrate_trajectories(&cfg, &PotentialSpec::Box { width: 1.0 }, 0.01, 100, 100).unwrap();
        for tr in &ens.trajectories {
            let s = tr.samples.last().unwrap();
            assert!((0.0..=1.0).contains(&s.x));
            assert!((s.x - (2.0 - tr.x0 - 1.0)).abs() < 1e-12 || (s.x - (tr.x0 + 1.0)).abs() < 1e-12);
            assert!((s.jacobian - 1.0).abs() < 1e-10);
            assert!((s.action - (tr.x0 + 0.5)).abs() < 1e-12);
        }
        assert!(integrate_trajectories(&cfg, &PotentialSpec::Harmonic { omega: 1.0 }, 0.01, 1, 1).is_err());
    }

    #[test]
    fn unsupported_potentials() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: -1.0, b: 1.0 },
            InitialPhase::Zero,
            open(),
        );
        let b = PotentialSpec::Barrier {
            height: 1.0,
            width: 1.0,
            center: 0.0,
        };
        assert!(matches!(
            integrate_trajectories(&cfg, &b, 0.1, 1, 1),
            Err(Error::UnsupportedPotential(_))
        ));
    }

    #[test]
    fn ensemble_csv_layout() {
        let cfg = EnsembleConfig::new(
            InitialDensity::Uniform { a: 0.0, b: 1.0 },
            InitialPhase::Zero,
            open(),
        )
        .with_size(3);
        let ens = integrate_trajectories(&cfg, &PotentialSpec::Free, 0.5, 1, 1).unwrap();
        let mut out = Vec::new();
        ens.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x0,p0,x,p,action,jacobian");
        assert_eq!(lines.len(), 7);
        assert!(lines[4].starts_with("0.5,"));
    }
}
