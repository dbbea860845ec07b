//! Command-line front end: `run`, `check` and `example`.
//!
//! Exit codes: 0 success, 1 a run finished but failed its verdict, 2 bad
//! arguments, 3..=10 one per [`ErrorCategory`].

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{parse_with_overrides, serialize_config, ScenarioConfig};
use crate::controller::GainReport;
use crate::error::{Error, Result};
use crate::ppf::SignBranch;
use crate::sim::{assemble_closed_loop, format_number, run_scenario, summary_toml, write_trace_csv, RunOutput, Trace};

pub const LOG_ENV: &str = "PPSYNC_LOG";
pub const EXAMPLES: [&str; 2] = ["example1", "example2"];

#[derive(Debug, Parser)]
#[command(name = "ppsync", version, about = "Prescribed-performance adaptive consensus simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write its trace and summary.
    Run {
        /// Scenario file (TOML)
        #[arg(long, required_unless_present = "all_examples")]
        config: Option<PathBuf>,
        /// Override a value, e.g. `--set sim.T=5`. Repeatable; last wins.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory; relative output paths in the config resolve against it
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run every built-in example concurrently.
        #[arg(long, conflicts_with = "config")]
        all_examples: bool,
    },
    /// Validate graph and filter and print the gain report.
    Check {
        /// Scenario file (TOML)
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Materialize, run and export a built-in example.
    Example {
        /// Built-in example: example1 or example2
        name: String,
        /// Output directory (default: ./<name>)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(parse_with_overrides(&text, overrides)?)
}

fn resolve(out: Option<&Path>, file: &str) -> PathBuf {
    match out {
        Some(dir) => dir.join(file),
        None => PathBuf::from(file),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_trace_csv(trace, BufWriter::new(file)).map_err(io_err(path))
}

/// Outcome of one executed scenario.
#[derive(Debug)]
pub struct RunReport {
    pub label: String,
    pub output: RunOutput,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

impl RunReport {
    pub fn verdict(&self) -> String {
        let s = &self.output.summary;
        let settle = match s.settling_time {
            Some(t) => format!("{t:.3} s"),
            None => "not reached".into(),
        };
        if s.passed() {
            format!(
                "PASS {}: 0 funnel violations, settling time {settle}, max |e|/rho {:.4}, max |u| {:.4}",
                self.label, s.max_occupancy, s.max_abs_u
            )
        } else if let Some(v) = &s.first_violation {
            format!(
                "FAIL {}: funnel violation at t={:.6} (agent {}, channel {}, ratio {:.4}), settling time {settle}",
                self.label, v.t, v.agent, v.channel, v.ratio
            )
        } else {
            let reason = s.abort_reason.as_deref().unwrap_or("non-finite terminal state");
            format!("FAIL {}: {reason}, settling time {settle}", self.label)
        }
    }

    pub fn exit_code(&self) -> i32 {
        match &self.output.aborted {
            Some(e) => e.category().exit_code(),
            None if self.output.summary.passed() => 0,
            None => 1,
        }
    }
}

/// Run a parsed configuration and write its trace and summary below `out`.
pub fn execute(label: &str, cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunReport> {
    let scenario = cfg.to_scenario()?;
    let output = run_scenario(&scenario)?;
    let trace_path = resolve(out, &cfg.output.trace_path);
    let summary_path = resolve(out, &cfg.output.summary_path);
    write_trace(&trace_path, &output.trace)?;
    write_file(&summary_path, &summary_toml(&output.summary))?;
    Ok(RunReport { label: label.to_string(), output, trace_path, summary_path })
}

pub fn cmd_run(config: &Path, overrides: &[String], out: Option<&Path>) -> Result<RunReport> {
    let cfg = load_config(config, overrides)?;
    execute(&config.display().to_string(), &cfg, out)
}

/// Run every built-in example concurrently, each in its own subdirectory.
pub fn cmd_run_all(overrides: &[String], out: Option<&Path>) -> Vec<(String, Result<RunReport>)> {
    let base = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    std::thread::scope(|scope| {
        let handles: Vec<_> = EXAMPLES
            .iter()
            .map(|name| {
                let dir = base.join(name);
                let handle = scope.spawn(move || -> Result<RunReport> {
                    let cfg = parse_with_overrides(&format!("models = \"{name}\"\n"), overrides)?;
                    execute(name, &cfg, Some(&dir))
                });
                (name.to_string(), handle)
            })
            .collect();
        handles
            .into_iter()
            .map(|(name, h)| (name, h.join().expect("scenario thread panicked")))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphCheck {
    pub agents: usize,
    pub strongly_connected: bool,
    pub q: Vec<f64>,
    pub sigma_min_pinned: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterCheck {
    pub lambda_bar: Vec<f64>,
    pub hurwitz: bool,
    pub lyapunov_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub graph: GraphCheck,
    pub filter: FilterCheck,
    pub gain: GainReport,
}

/// Graph, filter and gain checks without simulating. Gain infeasibility is
/// reported but not an error.
pub fn check_config(cfg: &ScenarioConfig) -> Result<CheckReport> {
    let scenario = cfg.to_scenario()?;
    let lp = assemble_closed_loop(&scenario)?;
    let gq = lp.graph_quantities();
    let filter = lp.filter();
    Ok(CheckReport {
        graph: GraphCheck {
            agents: gq.len(),
            strongly_connected: scenario.graph.is_strongly_connected(),
            q: gq.q.clone(),
            sigma_min_pinned: gq.sigma_min_pinned,
        },
        filter: FilterCheck {
            lambda_bar: filter.lambda_bar.clone(),
            hurwitz: true,
            lyapunov_residual: crate::controller::lyapunov_residual(&filter.companion, &filter.lyapunov, filter.beta),
        },
        gain: lp.gain_report(),
    })
}

pub fn cmd_check(config: &Path, overrides: &[String]) -> Result<String> {
    let cfg = load_config(config, overrides)?;
    let report = check_config(&cfg)?;
    Ok(toml::to_string(&report).expect("report is representable"))
}

/// Band edges of one channel: `(−δ̲ρ, δ̄ρ)` on a positive start, mirrored
/// otherwise.
fn band(trace: &Trace, agent: usize, channel: usize, rho: f64) -> (f64, f64) {
    let p = &trace.ppf[agent][channel];
    let e0 = trace.samples[0].e[agent][channel];
    let (lower, upper) = p.interval(SignBranch::from_initial_error(e0));
    (-lower * rho, upper * rho)
}

fn csv(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let line: Vec<String> = row.into_iter().map(format_number).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Plot-ready tables: outputs against the leader, control inputs, and for
/// every channel the error, its funnel and the transformed error.
pub fn figure_tables(trace: &Trace) -> Vec<(String, String)> {
    let (n, p) = (trace.agents, trace.channels);
    let mut files = Vec::new();

    let mut header = vec!["t".to_string()];
    for ch in 1..=p {
        header.push(format!("y0_c{ch}"));
        header.extend((1..=n).map(|a| format!("y_a{a}_c{ch}")));
    }
    let rows = trace.samples.iter().map(|s| {
        let mut row = vec![s.t];
        for ch in 0..p {
            row.push(s.leader[ch]);
            row.extend((0..n).map(|i| s.x[i][ch]));
        }
        row
    });
    files.push(("outputs.csv".to_string(), csv(&header, rows)));

    let mut header = vec!["t".to_string()];
    for ch in 1..=p {
        header.extend((1..=n).map(|a| format!("u_a{a}_c{ch}")));
    }
    let rows = trace.samples.iter().map(|s| {
        let mut row = vec![s.t];
        for ch in 0..p {
            row.extend((0..n).map(|i| s.u[i][ch]));
        }
        row
    });
    files.push(("controls.csv".to_string(), csv(&header, rows)));

    for ch in 0..p {
        let mut header = vec!["t".to_string()];
        for a in 1..=n {
            header.extend(["e", "lower", "upper", "eps"].map(|q| format!("{q}_a{a}")));
        }
        let rows = trace.samples.iter().map(|s| {
            let mut row = vec![s.t];
            for i in 0..n {
                let (lo, hi) = band(trace, i, ch, s.rho[i][ch]);
                row.extend([s.e[i][ch], lo, hi, s.eps[i][ch][0]]);
            }
            row
        });
        let name = if p == 1 { "errors.csv".to_string() } else { format!("errors_c{}.csv", ch + 1) };
        files.push((name, csv(&header, rows)));
    }
    files
}

pub fn cmd_example(name: &str, out: Option<&Path>) -> Result<RunReport> {
    if !EXAMPLES.contains(&name) {
        return Err(Error::UnknownExample(name.to_string()));
    }
    let cfg = ScenarioConfig::builtin(name)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(name));
    write_file(&dir.join(format!("{name}.toml")), &serialize_config(&cfg))?;
    let report = execute(name, &cfg, Some(&dir))?;
    if !report.output.trace.samples.is_empty() {
        for (file, contents) in figure_tables(&report.output.trace) {
            write_file(&dir.join(file), &contents)?;
        }
    }
    Ok(report)
}

fn report_error(e: &Error) -> i32 {
    let cat = e.category();
    eprintln!("error[{}]: {e}", cat.name());
    cat.exit_code()
}

fn finish(report: Result<RunReport>) -> i32 {
    match report {
        Ok(r) => {
            println!("{}", r.verdict());
            if let Some(e) = &r.output.aborted {
                eprintln!("error[{}]: {e}", e.category().name());
            }
            r.exit_code()
        }
        Err(e) => report_error(&e),
    }
}

/// Execute a parsed command line and return the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config, set, out, all_examples } => {
            if all_examples {
                let results = cmd_run_all(&set, out.as_deref());
                results.into_iter().map(|(_, r)| finish(r)).fold(0, |acc, code| if acc == 0 { code } else { acc })
            } else {
                let config = config.expect("clap enforces --config");
                finish(cmd_run(&config, &set, out.as_deref()))
            }
        }
        Command::Check { config, set } => match cmd_check(&config, &set) {
            Ok(text) => {
                print!("{text}");
                0
            }
            Err(e) => report_error(&e),
        },
        Command::Example { name, out } => finish(cmd_example(&name, out.as_deref())),
    }
}

/// Parse `args`, run, and return the exit code (2 on argument errors).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
