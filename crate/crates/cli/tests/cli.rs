use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn madelung(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_madelung")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn list_prints_the_catalog() {
    let o = madelung(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["anchor"].as_str().is_some_and(|a| !a.is_empty()));
    }
}

#[test]
fn scenario_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let o = madelung(&["scenario", "slit_radial", "--out", path(tmp.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("slit_radial/report.json")).unwrap()).unwrap();
    assert!(report["metrics"]["q_max"].as_f64().unwrap() < 1e-4);
    let csv = fs::read_to_string(tmp.path().join("reports.csv")).unwrap();
    assert!(csv.starts_with("scenario,metric,value,threshold,pass\n"));
    assert!(tmp.path().join("slit_radial/q.csv").exists());
}

#[test]
fn scenario_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = path(tmp.path());
    assert_eq!(code(&madelung(&["scenario", "nonexistent", "--out", out])), 2);
    assert_eq!(code(&madelung(&["scenario", "slit_radial", "--out", out, "--override", "grid.n=4"])), 2);
    assert_eq!(code(&madelung(&["scenario", "slit_radial", "--out", out, "--override", "nope.key=1"])), 2);
    let o = madelung(&[
        "scenario",
        "slit_radial",
        "--out",
        out,
        "--override",
        "thresholds.q_max.value=1e-300",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("slit_radial.q_max"));
    assert_eq!(code(&madelung(&["bogus"])), 2);
}

#[test]
fn free_gaussian_tolerates_a_coarser_step() {
    let tmp = tempfile::tempdir().unwrap();
    let o = madelung(&["scenario", "free_gaussian", "--out", path(tmp.path()), "--override", "time.dt=2e-3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

fn write_field(p: &Path, n: usize, f: impl Fn(f64) -> (f64, f64)) {
    let mut s = String::from("x,re,im\n");
    for i in 0..n {
        let x = -10.0 + 20.0 * i as f64 / (n - 1) as f64;
        let (re, im) = f(x);
        s += &format!("{x:?},{re:?},{im:?}\n");
    }
    fs::write(p, s).unwrap();
}

#[test]
fn decompose_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, out) = (tmp.path().join("psi.csv"), tmp.path().join("fields.csv"));
    let run = || {
        madelung(&["decompose", "--input", path(&input), "--out", path(&out), "--boundary", "dirichlet"])
    };

    write_field(&input, 2001, |x| ((2.0 * x).cos() / 20f64.sqrt(), (2.0 * x).sin() / 20f64.sqrt()));
    assert_eq!(code(&run()), 0);
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("x,rho,phi,q,mask\n"));
    assert!(column(&csv, "q").iter().all(|q| q.abs() < 1e-6));

    write_field(&input, 2001, |x| ((-x * x / 4.0).exp(), 0.0));
    assert_eq!(code(&run()), 0);
    let csv = fs::read_to_string(&out).unwrap();
    let (xs, qs) = (column(&csv, "x"), column(&csv, "q"));
    let i = xs.iter().position(|x| x.abs() < 1e-12).unwrap();
    assert!((qs[i] - 0.25).abs() < 1e-4);

    fs::write(&input, "x,re,im\n0.0,1.0,0.0\n0.1,oops,0.0\n").unwrap();
    let o = run();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    write_field(&input, 64, |_| (0.0, 0.0));
    assert_eq!(code(&run()), 1);
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const FREE_GAUSSIAN: &str = r#"
[grid]
xmin = -20.0
xmax = 20.0
n = 2048
boundary = "periodic"

[potential]
kind = "free"

[initial]
kind = "gaussian"
params = { center = 0.0, sigma = 1.0 }

[time]
dt = 0.001
steps = 1000
snapshot_every = 100
"#;

const COHERENT: &str = r#"
method = "eigenbasis"

[grid]
xmin = -20.0
xmax = 20.0
n = 1024
boundary = "periodic"

[constants]
hbar = 1.0
mass = 1.0

[potential]
kind = "harmonic"
params = { omega = 1.0 }

[initial]
kind = "coherent"
params = { x0 = 2.0, omega = 1.0 }

[time]
dt = 0.001
steps = 6283
snapshot_every = 500
"#;

#[test]
fn propagate_exact_keeps_the_norm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "g.toml", FREE_GAUSSIAN);
    let out = tmp.path().join("exact");
    let o = madelung(&["propagate", "--config", &cfg, "--method", "exact", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 11);
    assert_eq!(manifest["t"].as_array().unwrap().len(), 11);
    assert_eq!(manifest["config"]["method"], "exact");
    let dx = 40.0 / 2048.0;
    for f in files {
        let csv = fs::read_to_string(out.join(f.as_str().unwrap())).unwrap();
        let (re, im) = (column(&csv, "re"), column(&csv, "im"));
        let norm: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum::<f64>() * dx;
        assert!((norm.sqrt() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn propagate_semiclassical_error_grows() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "g.toml", FREE_GAUSSIAN);
    let out = tmp.path().join("sc");
    let o = madelung(&[
        "propagate", "--config", &cfg, "--method", "semiclassical", "--compare", "exact", "--out", path(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(csv.starts_with("t,l2_error,residual_norm,q_norm\n"));
    let err = column(&csv, "l2_error");
    assert!(err.windows(2).all(|w| w[1] > w[0]), "{err:?}");
}

#[test]
fn propagate_eigenbasis_matches_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", COHERENT);
    let out = tmp.path().join("eig");
    let o = madelung(&["propagate", "--config", &cfg, "--compare", "exact", "--out", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(column(&csv, "l2_error").iter().all(|e| *e < 1e-3));
}

#[test]
fn propagate_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let run = |cfg: &str, method: &str| {
        code(&madelung(&["propagate", "--config", cfg, "--method", method, "--out", path(&out)]))
    };
    let typo = config(tmp.path(), "typo.toml", &FREE_GAUSSIAN.replace("snapshot_every", "snapshot_evry"));
    assert_eq!(run(&typo, "exact"), 2);
    let free = config(tmp.path(), "g.toml", FREE_GAUSSIAN);
    assert_eq!(run(&free, "eigenbasis"), 2);
    let values = vec!["1e308"; 16].join(", ");
    let unstable = format!(
        "[grid]\nxmin = -5.0\nxmax = 5.0\nn = 16\nboundary = \"periodic\"\n\
         [potential]\nkind = \"tabulated\"\nparams = {{ values = [{values}] }}\n\
         [initial]\nkind = \"gaussian\"\nparams = {{ center = 0.0, sigma = 1.0 }}\n\
         [time]\ndt = 1e300\nsteps = 2\nsnapshot_every = 1\n"
    );
    let unstable = config(tmp.path(), "u.toml", &unstable);
    assert_eq!(run(&unstable, "exact"), 1);
}
