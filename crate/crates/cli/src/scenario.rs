use std::fs;
use std::io::Write;
use std::path::Path;

use madelung_core::scenarios::{list_scenarios, run_many, write_reports_csv, ScenarioReport, ScenarioRun};

use crate::Failure;

pub fn list() -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    for entry in list_scenarios() {
        writeln!(out, "{}", serde_json::to_string(&entry)?)?;
    }
    Ok(())
}

fn write_run(run: &ScenarioRun, dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(&run.report)? + "\n")?;
    for a in &run.artifacts {
        fs::write(dir.join(&a.name), &a.contents)?;
    }
    Ok(())
}

pub fn run(name: &str, out: &Path, overrides: &[String]) -> Result<(), Failure> {
    let names: Vec<String> = if name == "all" {
        list_scenarios().into_iter().map(|e| e.name).collect()
    } else {
        vec![name.to_string()]
    };
    let runs = run_many(&names, overrides)
        .into_iter()
        .collect::<madelung_core::Result<Vec<_>>>()?;
    fs::create_dir_all(out)?;
    for run in &runs {
        write_run(run, &out.join(&run.report.name))?;
    }
    let reports: Vec<&ScenarioReport> = runs.iter().map(|r| &r.report).collect();
    fs::write(out.join("reports.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    let owned: Vec<ScenarioReport> = reports.iter().map(|r| (*r).clone()).collect();
    let mut csv = Vec::new();
    write_reports_csv(&owned, &mut csv)?;
    fs::write(out.join("reports.csv"), csv)?;

    let mut failed = Vec::new();
    for r in &reports {
        println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.name);
        for c in r.failing() {
            failed.push(format!("{}.{} = {} (needs {:?} {})", r.name, c.metric, c.value, c.op, c.threshold));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Scientific(format!("thresholds not met: {}", failed.join("; "))))
    }
}
