//! `propsim` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::dynamics::critical_capital;
use crate::error::Error;
use crate::io::{parse_trajectory_csv, render_capital_svg, serialize_trajectory_csv};
use crate::lyapunov::{lyapunov_estimate, DEFAULT_EPSILON};
use crate::model::{ImpactModel, ModelParams};
use crate::regime::{classify, Thresholds};
use crate::scenario::{parse_scenario, RealizedPath, Scenario};
use crate::service::{serve, ServiceConfig};
use crate::sweep::{sweep, Axis, Execution};
use crate::trajectory::simulate;

pub const THREADS_ENV: &str = "PROPSIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "propsim", version, about = "Simulate and classify propping-up dynamics of constant-exposure funds")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Run one scenario; write its trajectory CSV and print a summary line.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trajectory CSV output path.
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
        /// Also write an SVG capital plot here.
        #[arg(long)]
        plot: Option<PathBuf>,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 480)]
        height: u32,
        /// Also estimate the Lyapunov exponent.
        #[arg(long)]
        lyapunov: bool,
    },
    /// Classify a trajectory CSV; prints the regime report as one JSON line.
    Classify {
        path: PathBuf,
        #[arg(long)]
        gap_threshold: Option<f64>,
        #[arg(long)]
        peak_prominence: Option<f64>,
    },
    /// Classify a grid of scenarios; writes one CSV row per cell.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `name=v1,v2,...` or `name=lo:hi:count`; name is one of c0, kappa,
        /// lambda, sigma0, realized, dt. Give one or two.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Print the critical capital for an exposure and an impact coefficient.
    Critical {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        lambda: f64,
        /// Average maturity for the exact value.
        #[arg(long)]
        maturity: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Run the HTTP API (and UI, if installed) until interrupted.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

/// Scenario flags. Without `--scenario`, omitted flags take the reference
/// scenario's values; with it, flags override the file.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Standard maturity `T` of new contracts (years).
    #[arg(long)]
    maturity: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    /// Initial average maturity (defaults to the standard maturity).
    #[arg(long)]
    m0: Option<f64>,
    /// Constant realized mark.
    #[arg(long)]
    realized: Option<f64>,
    /// Horizon in steps.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_parser = parse_impact)]
    impact: Option<ImpactModel>,
    #[arg(long)]
    eps_deg: Option<f64>,
    #[arg(long)]
    overflow_cap: Option<f64>,
    #[arg(long)]
    gap_threshold: Option<f64>,
    #[arg(long)]
    peak_prominence: Option<f64>,
    #[arg(long)]
    bankruptcy_floor: Option<f64>,
}

fn parse_impact(s: &str) -> Result<ImpactModel, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ScenarioArgs {
    fn apply(&self, s: &mut Scenario) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        let maturity_given = self.maturity.is_some();
        set(&mut s.c0, self.c0);
        set(&mut s.kappa, self.kappa);
        set(&mut s.lambda, self.lambda);
        set(&mut s.maturity, self.maturity);
        set(&mut s.dt, self.dt);
        set(&mut s.sigma0, self.sigma0);
        match self.m0 {
            Some(m0) => s.m0 = m0,
            // a fresh book follows the standard maturity it was bought at
            None if maturity_given && self.scenario.is_none() => s.m0 = s.maturity,
            None => {}
        }
        if let Some(r) = self.realized {
            s.realized = RealizedPath::Constant(r);
        }
        if let Some(n) = self.steps {
            s.horizon = n;
        }
        if let Some(m) = self.impact {
            s.impact_model = m;
        }
        set(&mut s.guards.eps_deg, self.eps_deg);
        set(&mut s.guards.overflow_cap, self.overflow_cap);
        set(&mut s.guards.gap_threshold, self.gap_threshold);
        set(&mut s.guards.peak_prominence, self.peak_prominence);
        set(&mut s.guards.bankruptcy_floor, self.bankruptcy_floor);
    }

    /// Checks each given flag against its own invariant.
    fn check_flags(&self) -> Result<(), Error> {
        let positive = |v: Option<f64>, field: &str| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::range(field, "must be finite and > 0")),
            _ => Ok(()),
        };
        positive(self.c0, "c0")?;
        positive(self.kappa, "kappa")?;
        positive(self.maturity, "T")?;
        positive(self.dt, "dt")?;
        positive(self.m0, "m0")?;
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::range("lambda", "must be finite and >= 0"));
            }
        }
        if self.steps == Some(0) {
            return Err(Error::range("horizon", "must be >= 1"));
        }
        Ok(())
    }

    fn resolve(&self) -> Result<ScenarioSource, Error> {
        self.check_flags()?;
        match &self.scenario {
            Some(path) => Ok(ScenarioSource::File {
                path: path.clone(),
                overrides: Box::new(self.clone()),
            }),
            None => {
                let mut s = Scenario::reference();
                self.apply(&mut s);
                s.validate()?;
                Ok(ScenarioSource::Inline(s))
            }
        }
    }
}

/// Where a command's scenario comes from.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Inline(Scenario),
    File {
        path: PathBuf,
        overrides: Box<ScenarioArgs>,
    },
}

impl ScenarioSource {
    pub fn load(&self) -> Result<Scenario, String> {
        match self {
            ScenarioSource::Inline(s) => Ok(s.clone()),
            ScenarioSource::File { path, overrides } => {
                let text = read(path)?;
                let mut s = parse_scenario(&text).map_err(|e| format!("{}: {e}", path.display()))?;
                overrides.apply(&mut s);
                s.validate().map_err(|e| format!("{}: {e}", path.display()))?;
                Ok(s)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Command {
    Simulate {
        scenario: ScenarioSource,
        out: PathBuf,
        plot: Option<(PathBuf, u32, u32)>,
        lyapunov: bool,
    },
    Classify {
        input: PathBuf,
        gap_threshold: Option<f64>,
        peak_prominence: Option<f64>,
    },
    Sweep {
        scenario: ScenarioSource,
        axes: Vec<Axis>,
        out: PathBuf,
    },
    Critical {
        kappa: f64,
        lambda: f64,
        maturity: Option<f64>,
        dt: f64,
    },
    Serve {
        addr: SocketAddr,
        ui_dir: Option<PathBuf>,
    },
}

fn usage(err: Error) -> clap::Error {
    clap::Error::raw(ErrorKind::ValueValidation, format!("{err}\n"))
}

/// Parses and validates arguments. Help and version requests come back as
/// errors whose exit code is 0; call `.exit()` on any error.
pub fn parse_args<I, T>(argv: I) -> Result<Command, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(match cli.verb {
        Verb::Simulate {
            scenario,
            out,
            plot,
            width,
            height,
            lyapunov,
        } => Command::Simulate {
            scenario: scenario.resolve().map_err(usage)?,
            out,
            plot: plot.map(|p| (p, width, height)),
            lyapunov,
        },
        Verb::Classify {
            path,
            gap_threshold,
            peak_prominence,
        } => Command::Classify {
            input: path,
            gap_threshold,
            peak_prominence,
        },
        Verb::Sweep { scenario, axes, out } => {
            if axes.len() > 2 {
                return Err(usage(Error::InvalidAxis("at most two --axis flags".into())));
            }
            Command::Sweep {
                scenario: scenario.resolve().map_err(usage)?,
                axes: axes.iter().map(|a| Axis::parse(a)).collect::<Result<_, _>>().map_err(usage)?,
                out,
            }
        }
        Verb::Critical {
            kappa,
            lambda,
            maturity,
            dt,
        } => {
            if !(kappa.is_finite() && kappa > 0.0) {
                return Err(usage(Error::range("kappa", "must be finite and > 0")));
            }
            if !(lambda.is_finite() && lambda >= 0.0) {
                return Err(usage(Error::range("lambda", "must be finite and >= 0")));
            }
            Command::Critical {
                kappa,
                lambda,
                maturity,
                dt,
            }
        }
        Verb::Serve { port, host, ui_dir } => Command::Serve {
            addr: SocketAddr::new(host, port),
            ui_dir,
        },
    })
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn thread_pool() -> Result<Option<rayon::ThreadPool>, String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV}: `{raw}` is not a thread count"))?;
    if n == 0 {
        return Ok(None);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| e.to_string())
}

/// Runs a command, writing summaries to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match run(cmd, out) {
        Ok(()) => 0,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
    }
}

fn run(cmd: &Command, out: &mut dyn Write) -> Result<(), String> {
    let io = |e: std::io::Error| e.to_string();
    match cmd {
        Command::Simulate {
            scenario,
            out: csv_path,
            plot,
            lyapunov,
        } => {
            let scenario = scenario.load()?;
            let traj = simulate(&scenario);
            write(csv_path, &serialize_trajectory_csv(&traj))?;
            if let Some((path, w, h)) = plot {
                write(path, &render_capital_svg(&traj, *w, *h))?;
            }
            let report = classify(&traj, &Thresholds::from(&scenario.guards));
            let peak = report
                .peaks
                .iter()
                .max_by(|a, b| a.value.total_cmp(&b.value))
                .map_or_else(|| "none".to_string(), |p| format!("{:.3}@{}", p.value, p.step));
            writeln!(
                out,
                "termination={} steps={} regime={} final_capital={:.3} peak={} gaps={}",
                traj.termination,
                traj.steps(),
                report.regime,
                report.final_capital,
                peak,
                report.gaps.len()
            )
            .map_err(io)?;
            if let Some(step) = traj.first_negative_implied() {
                writeln!(out, "warning: implied mark negative from step {step}").map_err(io)?;
            }
            if *lyapunov {
                let est = lyapunov_estimate(&scenario, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
                writeln!(out, "lyapunov_exponent={} steps={}", est.exponent, est.steps).map_err(io)?;
            }
        }
        Command::Classify {
            input,
            gap_threshold,
            peak_prominence,
        } => {
            let traj = parse_trajectory_csv(&read(input)?).map_err(|e| format!("{}: {e}", input.display()))?;
            let mut th = Thresholds::from(&traj.scenario.guards);
            if let Some(g) = gap_threshold {
                th.gap_threshold = *g;
            }
            if let Some(p) = peak_prominence {
                th.peak_prominence = *p;
            }
            let report = classify(&traj, &th);
            writeln!(out, "{}", serde_json::to_string(&report).map_err(|e| e.to_string())?).map_err(io)?;
        }
        Command::Sweep {
            scenario,
            axes,
            out: csv_path,
        } => {
            let scenario = scenario.load()?;
            let map = match thread_pool()? {
                Some(pool) => pool.install(|| sweep(&scenario, axes, Execution::Parallel)),
                None => sweep(&scenario, axes, Execution::Parallel),
            }
            .map_err(|e| e.to_string())?;
            write(csv_path, &map.to_csv())?;
            let mut counts: Vec<(&str, usize)> = Vec::new();
            for c in &map.cells {
                match counts.iter_mut().find(|(n, _)| *n == c.regime.name()) {
                    Some((_, k)) => *k += 1,
                    None => counts.push((c.regime.name(), 1)),
                }
            }
            let summary: Vec<String> = counts.iter().map(|(n, k)| format!("{n}={k}")).collect();
            writeln!(out, "cells={} {} -> {}", map.cells.len(), summary.join(" "), csv_path.display()).map_err(io)?;
        }
        Command::Critical {
            kappa,
            lambda,
            maturity,
            dt,
        } => {
            let params = ModelParams {
                kappa: *kappa,
                lambda: *lambda,
                maturity: maturity.unwrap_or(f64::INFINITY),
                dt: *dt,
                impact: ImpactModel::Linear,
            };
            let cc = critical_capital(&params, *maturity).map_err(|e| e.to_string())?;
            writeln!(out, "approx {}", cc.approx).map_err(io)?;
            if let Some(exact) = cc.exact {
                writeln!(out, "exact {exact}").map_err(io)?;
            }
        }
        Command::Serve { addr, ui_dir } => {
            if let Some(pool) = thread_pool()? {
                drop(pool);
                let n: usize = std::env::var(THREADS_ENV).unwrap_or_default().trim().parse().unwrap_or(0);
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            let runtime = tokio::runtime::Runtime::new().map_err(io)?;
            let config = ServiceConfig {
                ui_dir: ui_dir.clone(),
                ..ServiceConfig::default()
            };
            runtime.block_on(serve(*addr, config)).map_err(io)?;
        }
    }
    Ok(())
}
