//! Named, configured experiments with metrics checked against thresholds.

mod runs;

pub use runs::{compare_series, write_compare_csv, CompareRow};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{fmt_f64, Boundary, Grid1D, RadialGrid};
use crate::madelung::PhysicalConstants;
use crate::schrodinger::PotentialSpec;
use crate::states::InitialState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Periodic,
    Dirichlet,
    Radial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
    pub boundary: GridKind,
}

impl GridSpec {
    pub fn line(&self) -> Result<Grid1D> {
        match self.boundary {
            GridKind::Periodic => Grid1D::new(self.xmin, self.xmax, self.n, Boundary::Periodic),
            GridKind::Dirichlet => Grid1D::new(self.xmin, self.xmax, self.n, Boundary::Dirichlet),
            GridKind::Radial => Err(Error::WrongGrid { expected: "line" }),
        }
    }

    pub fn radial(&self) -> Result<RadialGrid> {
        match self.boundary {
            GridKind::Radial => RadialGrid::new(self.xmin, self.xmax, self.n),
            _ => Err(Error::WrongGrid { expected: "radial" }),
        }
    }

    pub fn spacing(&self) -> Result<f64> {
        Ok(match self.boundary {
            GridKind::Radial => self.radial()?.dr(),
            _ => self.line()?.dx(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    /// Requested step; the step actually used divides `horizon` exactly.
    pub dt: f64,
    pub horizon: f64,
    pub snapshot_every: usize,
}

impl TimeSpec {
    /// `(dt, steps)` with `steps·dt = horizon`.
    pub fn discretize(&self) -> Result<(f64, usize)> {
        if !(self.dt.is_finite() && self.dt > 0.0 && self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step {} and horizon {} must be > 0",
                self.dt, self.horizon
            )));
        }
        if self.snapshot_every == 0 {
            return Err(Error::InvalidParameter("snapshot_every must be >= 1".into()));
        }
        let steps = (self.horizon / self.dt).round().max(1.0) as usize;
        Ok((self.horizon / steps as f64, steps))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Lt,
    Gt,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    pub op: Comparison,
    pub value: f64,
}

impl Threshold {
    pub fn lt(value: f64) -> Self {
        Threshold {
            op: Comparison::Lt,
            value,
        }
    }

    pub fn gt(value: f64) -> Self {
        Threshold {
            op: Comparison::Gt,
            value,
        }
    }

    pub fn holds(&self, x: f64) -> bool {
        match self.op {
            Comparison::Lt => x < self.value,
            Comparison::Gt => x > self.value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridSpec,
    pub constants: PhysicalConstants,
    pub potential: PotentialSpec,
    pub initial: Option<InitialState>,
    pub time: Option<TimeSpec>,
    pub ensemble_size: Option<usize>,
    /// Scenario-specific scalars (energies, mode numbers).
    pub params: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, Threshold>,
}

impl ScenarioConfig {
    /// The reference configuration of a catalog scenario.
    pub fn reference(name: &str) -> Result<Self> {
        runs::reference(name)
    }

    pub fn validate(&self) -> Result<()> {
        let known = runs::metric_names(&self.name)?;
        if let Some(m) = self.thresholds.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::ThresholdMismatch(m.clone()));
        }
        for (k, t) in &self.thresholds {
            if !t.value.is_finite() {
                return Err(Error::InvalidOverride {
                    key: format!("thresholds.{k}"),
                    reason: "threshold must be finite".into(),
                });
            }
        }
        match self.grid.boundary {
            GridKind::Radial => {
                self.grid.radial()?;
            }
            _ => {
                self.grid.line()?;
            }
        }
        self.potential.validate()?;
        if let Some(s) = &self.initial {
            s.validate()?;
        }
        if let Some(t) = &self.time {
            t.discretize()?;
        }
        Ok(())
    }

    /// Apply `key=value` overrides addressed by dotted paths into the
    /// serialized configuration, e.g. `time.dt=2e-3`. Only existing keys can
    /// be overridden; the result is revalidated.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| Error::InvalidOverride {
                key: o.clone(),
                reason: "expected key=value".into(),
            })?;
            let key = key.trim();
            let new: serde_json::Value =
                serde_json::from_str(raw.trim()).unwrap_or_else(|_| serde_json::Value::String(raw.trim().into()));
            let pointer = format!("/{}", key.replace('.', "/"));
            let slot = value.pointer_mut(&pointer).ok_or_else(|| Error::InvalidOverride {
                key: key.into(),
                reason: "no such key".into(),
            })?;
            *slot = new;
        }
        let cfg: ScenarioConfig = serde_json::from_value(value).map_err(|e| Error::InvalidOverride {
            key: overrides.join(" "),
            reason: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        let digest = Sha256::digest(&bytes);
        let mut s = String::with_capacity(64);
        for b in digest {
            let _ = write!(s, "{b:02x}");
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub metric: String,
    pub op: Comparison,
    pub threshold: f64,
    pub value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub n: usize,
    pub dx: f64,
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub ensemble_size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub resolution: Resolution,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub provenance: Provenance,
}

impl ScenarioReport {
    pub fn failing(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// A named text file produced alongside a report.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub report: ScenarioReport,
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub anchor: String,
}

pub fn list_scenarios() -> Vec<CatalogEntry> {
    runs::CATALOG
        .iter()
        .map(|(name, description, anchor)| CatalogEntry {
            name: name.to_string(),
            description: description.to_string(),
            anchor: anchor.to_string(),
        })
        .collect()
}

/// Run a catalog scenario at its reference configuration with `overrides`
/// applied.
pub fn run_scenario(name: &str, overrides: &[String]) -> Result<ScenarioReport> {
    Ok(run_scenario_full(name, overrides)?.report)
}

/// [`run_scenario`] together with field dumps.
pub fn run_scenario_full(name: &str, overrides: &[String]) -> Result<ScenarioRun> {
    let cfg = ScenarioConfig::reference(name)?
        .with_overrides(overrides)
        .map_err(|e| e.in_scenario(name))?;
    run_config(&cfg)
}

/// Execute a configuration and evaluate its thresholds.
pub fn run_config(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let name = cfg.name.clone();
    cfg.validate().map_err(|e| e.in_scenario(&name))?;
    let out = runs::execute(cfg).map_err(|e| e.in_scenario(&name))?;
    let mut checks = Vec::new();
    for (metric, t) in &cfg.thresholds {
        let value = *out
            .metrics
            .get(metric)
            .ok_or_else(|| Error::ThresholdMismatch(metric.clone()).in_scenario(&name))?;
        checks.push(Check {
            metric: metric.clone(),
            op: t.op,
            threshold: t.value,
            value,
            pass: t.holds(value),
        });
    }
    let passed = checks.iter().all(|c| c.pass);
    let report = ScenarioReport {
        name: name.clone(),
        metrics: out.metrics,
        checks,
        passed,
        provenance: Provenance {
            config_hash: cfg.hash()?,
            resolution: out.resolution,
            config: cfg.clone(),
        },
    };
    Ok(ScenarioRun {
        report,
        artifacts: out.artifacts,
    })
}

/// Run several scenarios concurrently; results keep the input order.
pub fn run_many(names: &[String], overrides: &[String]) -> Vec<Result<ScenarioRun>> {
    names
        .par_iter()
        .map(|n| run_scenario_full(n, overrides))
        .collect()
}

/// CSV flattening `scenario,metric,value,threshold,pass`. Metrics without a
/// threshold have empty `threshold` and `pass` columns.
pub fn write_reports_csv<W: Write>(reports: &[ScenarioReport], mut w: W) -> std::io::Result<()> {
    writeln!(w, "scenario,metric,value,threshold,pass")?;
    for r in reports {
        for (metric, value) in &r.metrics {
            match r.checks.iter().find(|c| &c.metric == metric) {
                Some(c) => {
                    let op = match c.op {
                        Comparison::Lt => "<",
                        Comparison::Gt => ">",
                    };
                    writeln!(
                        w,
                        "{},{},{},{}{},{}",
                        r.name,
                        metric,
                        fmt_f64(*value),
                        op,
                        fmt_f64(c.threshold),
                        c.pass
                    )?
                }
                None => writeln!(w, "{},{},{},,", r.name, metric, fmt_f64(*value))?,
            }
        }
    }
    Ok(())
}
