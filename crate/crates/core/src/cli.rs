//! The `carbonlab` command line.
//!
//! Configuration is layered: built-in defaults, then an optional flat
//! `key = value` file (`--config`), then flags (`--set key=value`, `--dt`,
//! `--t-end`, `--x0`). Exit codes: 0 success, 1 usage or configuration
//! error, 2 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{growth_report, load_series, GrowthMethod};
use crate::control::{constant_control_run, solve_fbs, OcpConfig};
use crate::equilibria::{all_equilibria, Equilibrium, RootFindOptions};
use crate::error::{Error, Result};
use crate::integrate::{integrate_rk4, scenario_sweep, DEFAULT_DT};
use crate::model::{compute_bounds, Parameters, State, PARAM_NAMES};
use crate::sensitivity::{run_gsa, GsaSettings, ParameterSpace};
use crate::stability::{classify_local, lyapunov_global_check};

/// Initial state used when none is configured.
pub const DEFAULT_X0: State = State::new(130.0, 0.121, 1003.0, 80.0);
pub const DEFAULT_T_END: f64 = 200.0;

#[derive(Debug, Parser)]
#[command(
    name = "carbonlab",
    version,
    about = "CO2 / GDP / forest / population model laboratory"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set eta=1e-6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Integration step in years.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Simulation horizon in years.
    #[arg(long = "t-end", global = true)]
    t_end: Option<f64>,
    /// Initial state as `C,G,F,N`.
    #[arg(long, value_name = "C,G,F,N", global = true)]
    x0: Option<String>,
    /// Worker threads for sweeps and sensitivity runs. Output does not depend on it.
    #[arg(long, default_value_t = 1, global = true)]
    jobs: usize,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the model and write `t,C,G,F,N`.
    Simulate,
    /// Report the four equilibria with conditions and residuals.
    Equilibria,
    /// Local and global stability of the existing equilibria.
    Stability,
    /// One trajectory per value of a parameter.
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Directory for the per-value trajectory files.
        #[arg(long = "out-dir", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Latin hypercube sampling and PRCC at a snapshot time.
    Gsa {
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long = "t-snap", default_value_t = 4000.0)]
        t_snap: f64,
    },
    /// Optimal abatement control by forward-backward sweep.
    Control {
        #[arg(long = "A", default_value_t = 0.0001)]
        weight_a: f64,
        #[arg(long = "B", default_value_t = 10.0)]
        weight_b: f64,
        #[arg(long, default_value_t = 0.008)]
        umax: f64,
        #[arg(long, default_value_t = 100.0)]
        tf: f64,
        /// Constant control of the comparison run; defaults to epsilon.
        #[arg(long = "baseline-u")]
        baseline_u: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        relax: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 200)]
        max_iter: usize,
        /// Directory for `control.csv` and `baseline.csv`.
        #[arg(long = "out-dir", default_value = ".")]
        out_dir: PathBuf,
    },
    /// Growth rates from a yearly data file.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        /// Compound annual rate instead of the mean of yearly increments.
        #[arg(long)]
        geometric: bool,
    },
}

/// Parameters, integrator settings and initial state after layering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: Parameters,
    pub dt: f64,
    pub t_end: f64,
    pub x0: State,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Parameters::default(),
            dt: DEFAULT_DT,
            t_end: DEFAULT_T_END,
            x0: DEFAULT_X0,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let v: f64 = value.trim().parse().map_err(|_| {
            Error::InvalidInput(format!("value for '{key}' is not a number: '{value}'"))
        })?;
        match key.trim() {
            "dt" => self.dt = v,
            "t_end" => self.t_end = v,
            "C0" => self.x0.c = v,
            "G0" => self.x0.g = v,
            "F0" => self.x0.f = v,
            "N0" => self.x0.n = v,
            other => self.params.set(other, v).map_err(|_| {
                Error::InvalidInput(format!(
                    "unknown config key '{other}'; valid keys: {}, dt, t_end, C0, G0, F0, N0",
                    PARAM_NAMES.join(", ")
                ))
            })?,
        }
        Ok(())
    }

    /// Applies a flat `key = value` document. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            self.apply(key, value)?;
        }
        Ok(())
    }

    pub fn validate(self) -> Result<Self> {
        self.params.validate()?;
        if !(self.dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt must be positive (got {})",
                self.dt
            )));
        }
        Ok(self)
    }
}

fn parse_x0(text: &str) -> Result<State> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| {
            Error::InvalidInput(format!("--x0 expects four numbers C,G,F,N, got '{text}'"))
        })?;
    let arr: [f64; 4] = parts.try_into().map_err(|_| {
        Error::InvalidInput(format!("--x0 expects four numbers C,G,F,N, got '{text}'"))
    })?;
    Ok(State::from_array(arr))
}

fn build_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        cfg.apply_text(&text)?;
    }
    for item in &common.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("--set expects KEY=VALUE, got '{item}'")))?;
        cfg.apply(k, v)?;
    }
    if let Some(dt) = common.dt {
        cfg.dt = dt;
    }
    if let Some(t) = common.t_end {
        cfg.t_end = t;
    }
    if let Some(x) = &common.x0 {
        cfg.x0 = parse_x0(x)?;
    }
    cfg.validate()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(out: &mut dyn Write, target: Option<&Path>, contents: &str) -> Result<()> {
    match target {
        Some(path) => write_file(path, contents),
        None => out
            .write_all(contents.as_bytes())
            .map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn equilibria_report(eqs: &[Equilibrium]) -> String {
    let mut s = String::new();
    for e in eqs {
        let _ = writeln!(s, "[{}]", e.kind);
        let _ = writeln!(s, "exists = {}", e.exists);
        let _ = writeln!(s, "C = {}", e.state.c);
        let _ = writeln!(s, "G = {}", e.state.g);
        let _ = writeln!(s, "F = {}", e.state.f);
        let _ = writeln!(s, "N = {}", e.state.n);
        let _ = writeln!(s, "residual = {}", e.residual_norm);
        for c in &e.conditions {
            let _ = writeln!(
                s,
                "condition = {} | value = {} | satisfied = {}",
                c.name, c.value, c.satisfied
            );
        }
        s.push('\n');
    }
    s
}

fn stability_report(params: &Parameters, eqs: &[Equilibrium]) -> Result<String> {
    let mut s = String::new();
    for e in eqs.iter().filter(|e| e.exists) {
        let r = classify_local(params, e);
        let _ = writeln!(s, "[{}]", e.kind);
        for z in &r.eigenvalues {
            let _ = writeln!(s, "eigenvalue = {} {:+}i", z.re, z.im);
        }
        let _ = writeln!(s, "locally_stable = {}", r.locally_stable);
        if let Some(rh) = r.routh {
            let _ = writeln!(
                s,
                "routh = A1 {} | A2 {} | A3 {} | A1*A2-A3 {}",
                rh.a1, rh.a2, rh.a3, rh.margin
            );
        }
        for c in &r.condition_checks {
            let _ = writeln!(
                s,
                "check = {} | lhs = {} | rhs = {} | satisfied = {}",
                c.name, c.lhs, c.rhs, c.satisfied
            );
        }
        s.push('\n');
    }
    if let Some(e4) = eqs
        .iter()
        .find(|e| e.kind == crate::equilibria::EquilibriumKind::E4)
    {
        let bounds = compute_bounds(params)?;
        let g = lyapunov_global_check(params, e4, &bounds);
        let _ = writeln!(s, "[global E4]");
        let _ = writeln!(
            s,
            "bounds = C_max {} | G_max {} | F_max {} | N_max {}",
            bounds.c_max, bounds.g_max, bounds.f_max, bounds.n_max
        );
        let _ = writeln!(s, "m1 = {}", g.m1);
        let _ = writeln!(s, "m2 = {}", g.m2);
        let _ = writeln!(s, "forest_term = {}", g.forest_term);
        let _ = writeln!(s, "gdp_term = {}", g.gdp_term);
        let _ = writeln!(s, "lhs = {}", g.lhs);
        let _ = writeln!(s, "rhs = {}", g.rhs);
        let _ = writeln!(s, "certified = {}", g.certified);
    }
    Ok(s)
}

enum Outcome {
    Done,
    NotConverged,
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<Outcome> {
    let cfg = build_config(&cli.common)?;
    let target = cli.common.out.as_deref();
    let jobs = cli.common.jobs.max(1);
    match cli.command {
        Command::Simulate => {
            let tr = integrate_rk4(&cfg.params, cfg.x0, cfg.t_end, cfg.dt)?;
            emit(out, target, &tr.to_csv())?;
        }
        Command::Equilibria => {
            let eqs = all_equilibria(&cfg.params, &RootFindOptions::default())?;
            emit(out, target, &equilibria_report(&eqs))?;
        }
        Command::Stability => {
            let eqs = all_equilibria(&cfg.params, &RootFindOptions::default())?;
            emit(out, target, &stability_report(&cfg.params, &eqs)?)?;
        }
        Command::Sweep {
            param,
            values,
            out_dir,
        } => {
            let runs = scenario_sweep(
                &cfg.params,
                &param,
                &values,
                cfg.x0,
                cfg.t_end,
                cfg.dt,
                jobs,
            )?;
            let mut summary = format!("{param},t,C,G,F,N,file\n");
            for (i, (tr, v)) in runs.iter().zip(&values).enumerate() {
                let name = format!("sweep_{param}_{i}.csv");
                write_file(&out_dir.join(&name), &tr.to_csv())?;
                let x = tr.last();
                let t = tr.t.last().copied().unwrap_or(0.0);
                let _ = writeln!(summary, "{v},{t},{},{},{},{},{name}", x.c, x.g, x.f, x.n);
            }
            emit(out, target, &summary)?;
        }
        Command::Gsa {
            samples,
            seed,
            t_snap,
        } => {
            let settings = GsaSettings {
                n: samples,
                t_snap,
                x0: cfg.x0,
                dt: cfg.dt,
                seed,
                jobs,
            };
            let report = run_gsa(&ParameterSpace::standard(), &settings)?;
            emit(out, target, &report.to_csv())?;
        }
        Command::Control {
            weight_a,
            weight_b,
            umax,
            tf,
            baseline_u,
            relax,
            tol,
            max_iter,
            out_dir,
        } => {
            let ocp = OcpConfig {
                weight_a,
                weight_b,
                u_max: umax,
                t_f: tf,
                dt: cfg.dt,
                relax,
                tol,
                max_iter,
            };
            let sol = solve_fbs(&cfg.params, cfg.x0, &ocp)?;
            let u_base = baseline_u.unwrap_or(cfg.params.epsilon);
            let (t, base_states, j_base) = constant_control_run(&cfg.params, cfg.x0, &ocp, u_base)?;
            write_file(&out_dir.join("control.csv"), &sol.to_csv())?;
            let mut base = String::from("t,u,C,G,F,N\n");
            for (t, x) in t.iter().zip(&base_states) {
                let _ = writeln!(base, "{t},{u_base},{},{},{},{}", x.c, x.g, x.f, x.n);
            }
            write_file(&out_dir.join("baseline.csv"), &base)?;
            let summary = format!(
                "{},baseline_u={},J_baseline={}\n",
                sol.summary(),
                u_base,
                j_base
            );
            emit(out, target, &summary)?;
            if !sol.converged {
                return Ok(Outcome::NotConverged);
            }
        }
        Command::Estimate { data, geometric } => {
            let series = load_series(&data)?;
            let method = if geometric {
                GrowthMethod::Geometric
            } else {
                GrowthMethod::Arithmetic
            };
            let report = growth_report(&series, method)?;
            let mut s = String::new();
            let _ = writeln!(s, "years = {}..{}", report.years.0, report.years.1);
            let _ = writeln!(s, "rows = {}", series.year.len());
            let _ = writeln!(
                s,
                "method = {}",
                match method {
                    GrowthMethod::Arithmetic => "arithmetic",
                    GrowthMethod::Geometric => "geometric",
                }
            );
            for (column, param, rate) in &report.rates {
                let _ = writeln!(s, "{column} growth ({param}) = {rate}");
            }
            if let Some(pc) = report.per_capita_emission {
                let _ = writeln!(s, "co2 per population (phi) = {pc}");
            }
            if !series.absent_columns().is_empty() {
                let _ = writeln!(s, "absent = {}", series.absent_columns().join(","));
            }
            emit(out, target, &s)?;
        }
    }
    Ok(Outcome::Done)
}

/// Runs the command line with explicit argument list and streams; returns
/// the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::NotConverged) => {
            let _ = writeln!(err, "error: optimal control sweep did not converge");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
