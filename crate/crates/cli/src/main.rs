//! `ddtopp`: plan, check and compare time-optimal speed profiles from the shell.
//!
//! Exit codes: 0 success, 1 bad input, 2 infeasible plan or failed check.

mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffdrive_topp::discretize::assemble;
use diffdrive_topp::format::{fmt_sig, read_path, read_waypoints, samples_to_csv};
use diffdrive_topp::lissajous::lissajous_samples;
use diffdrive_topp::pipeline::{fit_path, plan, prepare, Config};
use diffdrive_topp::solver::{dp_oracle, solve};
use diffdrive_topp::trajectory::{feasibility_check, indexes, TimedTrajectory};
use diffdrive_topp::Error;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ddtopp", version, about = "Time-optimal speed profiles for differential-drive robots")]
struct Cli {
    /// JSON config; omitted keys take the reference-robot defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path prefix; commands append `.csv`, `.json` or `.svg`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the Lissajous test curve with analytic heading and curvature.
    Lissajous {
        /// Time step in seconds (default: the config's resolution).
        #[arg(long)]
        resolution: Option<f64>,
    },
    /// Fit a spline through `x,y` waypoints and write its samples.
    Fit { waypoints: PathBuf },
    /// Plan a speed profile along waypoints or pre-sampled `x,y,theta,kappa` rows.
    Plan {
        input: PathBuf,
        /// Also write a plot of the path colored by speed.
        #[arg(long)]
        svg: bool,
    },
    /// Check a planned trajectory against the config's limits.
    Check {
        trajectory: PathBuf,
        /// The path the trajectory was planned along.
        #[arg(long)]
        input: PathBuf,
    },
    /// Compare the conic solution with a brute-force grid search.
    Oracle {
        input: PathBuf,
        /// Speed levels per node.
        #[arg(long, default_value_t = 400)]
        grid: usize,
    },
}

/// A failure tagged with the pipeline stage it came from.
struct Failure {
    stage: &'static str,
    err: Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure { stage, err: e.into() })
    }
}

enum Outcome {
    Done,
    /// Completed with a negative verdict (infeasible plan, violations found).
    Rejected,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(2),
        Err(f) => {
            eprintln!("ddtopp: {} failed: {}", f.stage, f.err);
            ExitCode::from(if f.err.is_infeasibility() { 2 } else { 1 })
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let cfg = match &cli.config {
        Some(p) => Config::from_json(&read(p)?).stage("config")?,
        None => Config::default(),
    };
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Lissajous { resolution } => {
            let traj = lissajous_samples(resolution.unwrap_or(cfg.resolution)).stage("lissajous")?;
            emit(out, "csv", &samples_to_csv(&traj))?;
        }
        Command::Fit { waypoints } => {
            let w = read_waypoints(&read(waypoints)?).stage("waypoint input")?;
            let traj = fit_path(&w, &cfg).stage("fit")?;
            emit(out, "csv", &samples_to_csv(&traj))?;
        }
        Command::Plan { input, svg } => return cmd_plan(&cfg, input, out, *svg),
        Command::Check { trajectory, input } => return cmd_check(&cfg, trajectory, input, out),
        Command::Oracle { input, grid } => {
            let path = read_path(&read(input)?).stage("path input")?;
            let (samples, _) = prepare(&path, &cfg).stage("fit")?;
            let p = assemble(&samples, &cfg.limits(), &cfg.boundary(), &cfg.options()).stage("assemble")?;
            let oracle = dp_oracle(&p, *grid).stage("oracle")?;
            let sol = solve(&p, &cfg.solver).stage("solve")?.into_result().stage("solve")?;
            let t_socp = sol.objective_value;
            let report = json!({
                "n": p.n,
                "grid": grid,
                "t_f_socp": round_sig(t_socp),
                "t_f_dp": round_sig(oracle.t_f),
                "gap": round_sig((oracle.t_f - t_socp) / t_socp),
            });
            emit(out, "json", &pretty(&report))?;
        }
    }
    Ok(Outcome::Done)
}

fn cmd_plan(cfg: &Config, input: &Path, out: Option<&Path>, svg: bool) -> Result<Outcome, Failure> {
    let path = read_path(&read(input)?).stage("path input")?;
    let result = plan(&path, cfg).stage("plan")?;
    let prefix = out.unwrap_or(Path::new("plan"));
    let summary = serde_json::to_value(result.summary()).stage("summary")?;
    write_atomic(&with_ext(prefix, "json"), &pretty(&round_json(summary)))?;
    let Some(tt) = &result.trajectory else {
        let why = match result.solution.infeasible_family {
            Some(f) => format!("{:?} ({f})", result.solution.status),
            None => format!("{:?}", result.solution.status),
        };
        eprintln!("ddtopp: solve failed: no trajectory, status {why}");
        return Ok(Outcome::Rejected);
    };
    write_atomic(&with_ext(prefix, "csv"), &tt.to_csv())?;
    if svg {
        let picture = svg::render(tt, &result.problem.vcap, cfg.v_max);
        write_atomic(&with_ext(prefix, "svg"), &picture)?;
    }
    Ok(Outcome::Done)
}

fn cmd_check(cfg: &Config, trajectory: &Path, input: &Path, out: Option<&Path>) -> Result<Outcome, Failure> {
    let tt = TimedTrajectory::from_csv(&read(trajectory)?).stage("trajectory input")?;
    let path = read_path(&read(input)?).stage("path input")?;
    let (samples, _) = prepare(&path, cfg).stage("fit")?;
    if samples.len() != tt.len() {
        return Err(Error::InvalidInput(format!(
            "trajectory has {} nodes but the path samples to {}",
            tt.len(),
            samples.len()
        )))
        .stage("check");
    }
    let p = assemble(&samples, &cfg.limits(), &cfg.boundary(), &cfg.options()).stage("assemble")?;
    let violations = feasibility_check(&tt, &p);
    let r = indexes(&tt, &samples, &cfg.limits(), 0.0, 0.0);
    for v in &violations {
        println!("violation {} at {}: exceeds bound by {}", v.family, v.index, fmt_sig(v.magnitude));
    }
    let list: Vec<Value> = violations
        .iter()
        .map(|v| json!({"index": v.index, "family": v.family, "magnitude": round_sig(v.magnitude)}))
        .collect();
    let report = json!({
        "n": tt.len(),
        "t_f": round_sig(tt.duration()),
        "zeta": round_sig(r.zeta),
        "rho": round_sig(r.rho),
        "chi": round_sig(r.chi),
        "violations": list,
    });
    emit(out, "json", &pretty(&report))?;
    Ok(if violations.is_empty() { Outcome::Done } else { Outcome::Rejected })
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        stage: "read",
        err: Error::InvalidInput(format!("{}: {e}", path.display())),
    })
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes to `<prefix>.<ext>` when a prefix is given, otherwise to stdout.
fn emit(out: Option<&Path>, ext: &str, text: &str) -> Result<(), Failure> {
    match out {
        Some(prefix) => write_atomic(&with_ext(prefix, ext), text),
        None => std::io::stdout().lock().write_all(text.as_bytes()).stage("write"),
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).stage("write")?;
    tmp.write_all(text.as_bytes()).stage("write")?;
    tmp.persist(path).map_err(|e| e.error).stage("write")?;
    Ok(())
}

fn round_sig(x: f64) -> Value {
    if x.is_finite() {
        json!(fmt_sig(x).parse::<f64>().unwrap_or(x))
    } else {
        Value::Null
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => round_sig(n.as_f64().unwrap_or(f64::NAN)),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}
