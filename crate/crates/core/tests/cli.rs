use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ppsync::sim::trace_header;

fn ppsync(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppsync")).args(args).current_dir(cwd).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn short_run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "example1.toml", "models = \"example1\"\n");
    let out = ppsync(&["run", "--config", &cfg, "--set", "sim.T=0.01", "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("PASS") && stdout.contains("settling time"), "{stdout}");
    let trace = fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 11);
    let summary: toml::Table = fs::read_to_string(dir.path().join("run/summary.toml")).unwrap().parse().unwrap();
    assert_eq!(summary["violation_count"].as_integer(), Some(0));
    assert!(summary.contains_key("gain"));
}

#[test]
fn golden_trace_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ex2.toml", "models = \"example2\"\n[sim]\nT = 0.002\n");
    let out = ppsync(&["run", "--config", &cfg, "--out", "."], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let header = trace.lines().next().unwrap();
    let mut golden = vec!["t".to_string()];
    for m in 1..=2 {
        for c in 1..=2 {
            golden.push(format!("x0_c{c}_o{m}"));
        }
    }
    for q in ["x", "e"] {
        for a in 1..=5 {
            for c in 1..=2 {
                for m in 1..=2 {
                    golden.push(format!("{q}_a{a}_c{c}_o{m}"));
                }
            }
        }
    }
    for a in 1..=5 {
        for c in 1..=2 {
            golden.push(format!("rho_a{a}_c{c}"));
        }
    }
    for a in 1..=5 {
        for c in 1..=2 {
            for m in 1..=2 {
                golden.push(format!("eps_a{a}_c{c}_o{m}"));
            }
        }
    }
    for q in ["r", "E", "u", "theta", "omega", "margin"] {
        for a in 1..=5 {
            for c in 1..=2 {
                golden.push(format!("{q}_a{a}_c{c}"));
            }
        }
    }
    golden.extend(["V", "disagreement", "disagreement_bound"].map(String::from));
    assert_eq!(header, golden.join(","));
    assert_eq!(trace_header(5, 2, 2), golden);
    for line in trace.lines().skip(1) {
        assert_eq!(line.split(',').count(), golden.len());
    }
}

#[test]
fn initial_violation_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // agent 1 has e(0) ≈ −0.542, outside the band ±2ρ₀ = ±0.4
    let body = "models = \"example1\"\n[ppf]\nrho0 = 0.2\ndelta_upper = 2\ndelta_lower = 2\n";
    let cfg = write_config(dir.path(), "bad.toml", body);
    let out = ppsync(&["run", "--config", &cfg, "--set", "sim.T=0.1"], dir.path());
    assert_eq!(out.status.code(), Some(6), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("error[funnel_violation]") && err.contains("t = 0"), "{err}");
}

#[test]
fn check_reports_gain_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "example1.toml", "models = \"example1\"\n");
    let a = ppsync(&["check", "--config", &cfg], dir.path());
    let b = ppsync(&["check", "--config", &cfg], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let report: toml::Table = String::from_utf8(a.stdout).unwrap().parse().unwrap();
    let gain = report["gain"].as_table().unwrap();
    for key in ["c_required", "sylvester_ok", "eta", "t0_estimate"] {
        assert!(gain.contains_key(key), "missing {key}");
    }
}

#[test]
fn check_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "example1.toml", "models = \"example1\"\n");
    let no_pin = ppsync(&["check", "--config", &cfg, "--set", "graph.pinning=[0,0,0,0,0]"], dir.path());
    assert_eq!(no_pin.status.code(), Some(4));
    assert!(stderr(&no_pin).contains("error[graph]"));
    let unstable = ppsync(&["check", "--config", &cfg, "--set", "controller.lambda=-1"], dir.path());
    assert_eq!(unstable.status.code(), Some(5));
    assert!(stderr(&unstable).contains("Hurwitz"));
}

#[test]
fn every_failure_category_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "ok.toml", "models = \"example1\"\n");
    let cases: Vec<(Vec<String>, i32, &str)> = vec![
        (vec!["run".into()], 2, "error"),
        (vec!["run".into(), "--config".into(), good.clone(), "--set".into(), "sim.bogus=1".into()], 3, "error[config]"),
        (vec!["run".into(), "--config".into(), good.clone(), "--set".into(), "graph.pinning=[0,0,0,0,0]".into()], 4, "error[graph]"),
        (vec!["run".into(), "--config".into(), good.clone(), "--set".into(), "controller.lambda=-1".into()], 5, "error[filter]"),
        (vec!["run".into(), "--config".into(), "missing.toml".into()], 9, "error[io]"),
        (vec!["example".into(), "example3".into()], 10, "error[unknown_example]"),
    ];
    for (args, code, tag) in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = ppsync(&args, dir.path());
        assert_eq!(out.status.code(), Some(code), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(tag), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn inline_model_runs() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[graph]
adjacency = [[0, 1], [1, 0]]
pinning = [1, 0]

[models]
order = 2
channels = 1

[[models.agents]]
f = ["-x1 + sin(t)"]
x0 = [0.1, 0.0]

[[models.agents]]
f = ["-x2"]
x0 = [-0.1, 0.0]

[models.leader]
trajectory = [["sin(t)"], ["cos(t)"], ["-sin(t)"]]

[ppf]
rho0 = 2
rho_inf = 0.05
ell = 1
delta_upper = 1
delta_lower = 1

[controller]
c = 5
k = 0.1
gamma1 = 10
gamma2 = 10

[sim]
h = 0.001
T = 3
"#;
    let cfg = write_config(dir.path(), "inline.toml", body);
    let out = ppsync(&["run", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let missing = write_config(dir.path(), "missing.toml", &body.replace("c = 5\n", ""));
    let out = ppsync(&["run", "--config", &missing], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("controller.c"), "{}", stderr(&out));
}

#[test]
fn example2_emits_figure_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppsync(&["example", "example2", "--out", "ex2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let base = dir.path().join("ex2");
    for f in ["example2.toml", "trace.csv", "summary.toml", "outputs.csv", "controls.csv", "errors_c1.csv", "errors_c2.csv"] {
        assert!(base.join(f).is_file(), "missing {f}");
    }
    let errors = fs::read_to_string(base.join("errors_c2.csv")).unwrap();
    assert!(errors.starts_with("t,e_a1,lower_a1,upper_a1,eps_a1,"));
    // each error lies between its funnel edges
    for line in errors.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        for a in 0..5 {
            let (e, lo, hi) = (v[1 + 4 * a], v[2 + 4 * a], v[3 + 4 * a]);
            assert!(lo < e && e < hi);
        }
    }
    let outputs = fs::read_to_string(base.join("outputs.csv")).unwrap();
    assert!(outputs.starts_with("t,y0_c1,y_a1_c1"));
    // the materialized config reproduces the run
    let again = ppsync(&["run", "--config", "ex2/example2.toml", "--out", "again"], dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        fs::read(base.join("trace.csv")).unwrap(),
        fs::read(dir.path().join("again/trace.csv")).unwrap()
    );
}

#[test]
fn batch_runs_both_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = ppsync(&["run", "--all-examples", "--set", "sim.T=0.5", "--out", "batch"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 2, "{stdout}");
    assert!(dir.path().join("batch/example1/trace.csv").is_file());
    assert!(dir.path().join("batch/example2/trace.csv").is_file());
}
