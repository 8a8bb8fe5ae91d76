use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use squeezelax::config::{
    check_positive, parse_list, parse_spins, parse_theta, squeezing, Limits, Scenario, SqueezingM,
};
use squeezelax::dataset::{write_dataset, FigureDataset, Format};
use squeezelax::figures::{Fig3a, Fig3b, Fig4a, Fig4b};
use squeezelax::runs::{Oscillator, SingleSpin, SteadyState};
use squeezelax::verify::{run_verification, Formulas};
use squeezelax::{AppError, AppResult};
use squeezelax_core::SqueezingParams;

#[derive(Parser)]
#[command(
    name = "squeezelax",
    version,
    about = "Collective spin decay in a broadband squeezed reservoir"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decay map of spin coherent states and the oscillator quadrature plane
    Fig3a(Common),
    /// Error ellipses before and after a short evolution
    Fig3b(Common),
    /// Transverse decay rates against the number of spins
    Fig4a(Common),
    /// Variance derivatives of coherent states against the number of spins
    Fig4b(Common),
    /// Single-spin master-equation trajectory next to Gardiner's solution
    SingleSpin(Common),
    /// Oscillator master-equation trajectory next to the closed moment solution
    Oscillator(OscillatorArgs),
    /// Stationary states of the collective master equation
    SteadyState(Common),
    /// Formula-versus-oracle checks, reported as JSON
    Verify(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Spin counts, e.g. `1,5,15` or `1..50`
    #[arg(long)]
    spins: Option<String>,
    /// Reservoir photon number N
    #[arg(long)]
    squeezing_n: Option<f64>,
    /// Squeezing correlation M, or `minimal` for sqrt(N(N+1))
    #[arg(long)]
    squeezing_m: Option<SqueezingM>,
    /// Polar angles in units of pi, comma separated
    #[arg(long)]
    theta: Option<String>,
    /// Azimuthal angles in radians, comma separated
    #[arg(long)]
    phi: Option<String>,
    /// Evolution time in units of 1/gamma_p
    #[arg(long)]
    t_final: Option<f64>,
    /// Recording interval in units of 1/gamma_p
    #[arg(long)]
    dt: Option<f64>,
    /// Relative tolerance of the adaptive integrator
    #[arg(long)]
    rtol: Option<f64>,
    /// Output file; a `.meta.json` sidecar is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads, 0 for one per core
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Seed for the random states used by `verify`
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Clone)]
struct OscillatorArgs {
    #[command(flatten)]
    common: Common,
    /// Fock cutoff; grows automatically when omitted
    #[arg(long)]
    cutoff: Option<usize>,
    /// Initial quadrature mean <X>
    #[arg(long, default_value_t = 1.0)]
    x0: f64,
    /// Initial quadrature mean <Y>
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
}

impl Common {
    fn params(&self, default: SqueezingParams) -> AppResult<SqueezingParams> {
        match (self.squeezing_n, self.squeezing_m) {
            (None, None) => Ok(default),
            (n, m) => squeezing(n.unwrap_or(default.n()), m.unwrap_or(SqueezingM::Minimal)),
        }
    }

    fn spins(&self, default: Vec<usize>, limits: &Limits) -> AppResult<Vec<usize>> {
        let spins = match &self.spins {
            Some(s) => parse_spins(s)?,
            None => default,
        };
        limits.check_spins(&spins)?;
        Ok(spins)
    }

    fn theta(&self, default: Vec<f64>) -> AppResult<Vec<f64>> {
        self.theta.as_deref().map_or(Ok(default), parse_theta)
    }

    fn phi(&self, default: Vec<f64>) -> AppResult<Vec<f64>> {
        self.phi.as_deref().map_or(Ok(default), parse_list)
    }

    fn positive(&self, name: &str, v: Option<f64>, default: f64) -> AppResult<f64> {
        check_positive(name, v.unwrap_or(default))
    }

    fn scenario(&self, command: &str, p: &SqueezingParams, limits: Limits) -> Scenario {
        let mut s = Scenario::new(command, p, limits);
        s.t_final = self.t_final;
        s.dt = self.dt;
        s.jobs = self.jobs;
        s.seed = self.seed;
        s
    }
}

fn single(values: Vec<f64>, what: &str) -> AppResult<f64> {
    match values.as_slice() {
        [v] => Ok(*v),
        _ => Err(AppError::config(format!(
            "--{what} takes a single value here"
        ))),
    }
}

fn emit(ds: &FigureDataset, c: &Common, scenario: &Scenario, started: Instant) -> AppResult<()> {
    write_dataset(
        ds,
        c.format,
        scenario,
        c.out.as_deref(),
        started.elapsed().as_secs_f64(),
    )
}

fn run(cli: Cli) -> AppResult<()> {
    let limits = Limits::from_env()?;
    let started = Instant::now();
    match cli.command {
        Command::Fig3a(c) => {
            let d = Fig3a::default();
            let cfg = Fig3a {
                spins: c.spins(d.spins.clone(), &limits)?,
                params: c.params(d.params)?,
                theta: c.theta(d.theta.clone())?,
                phi: c.phi(d.phi.clone())?,
                t_final: c.positive("t-final", c.t_final, d.t_final)?,
                dt: c.positive("dt", c.dt, d.dt)?,
                rtol: c.positive("rtol", c.rtol, d.rtol)?,
                jobs: c.jobs,
                ..d
            };
            let mut s = c.scenario("fig3a", &cfg.params, limits);
            (s.spins, s.theta_over_pi, s.phi, s.rtol) = (
                cfg.spins.clone(),
                cfg.theta.clone(),
                cfg.phi.clone(),
                cfg.rtol,
            );
            emit(&cfg.run()?, &c, &s, started)
        }
        Command::Fig3b(c) => {
            let d = Fig3b::default();
            let cfg = Fig3b {
                spins: c.spins(d.spins.clone(), &limits)?,
                params: c.params(d.params)?,
                theta: c.theta(d.theta.clone())?,
                phi: c.phi(d.phi.clone())?,
                t_final: c
                    .t_final
                    .map(|t| check_positive("t-final", t))
                    .transpose()?,
                rtol: c.positive("rtol", c.rtol, d.rtol)?,
                jobs: c.jobs,
                ..d
            };
            let mut s = c.scenario("fig3b", &cfg.params, limits);
            (s.spins, s.theta_over_pi, s.phi, s.rtol) = (
                cfg.spins.clone(),
                cfg.theta.clone(),
                cfg.phi.clone(),
                cfg.rtol,
            );
            emit(&cfg.run()?, &c, &s, started)
        }
        Command::Fig4a(c) => {
            let d = Fig4a::default();
            let cfg = Fig4a {
                spins: c.spins(d.spins.clone(), &limits)?,
                params: c.params(d.params)?,
                theta: c.theta(d.theta.clone())?,
            };
            let mut s = c.scenario("fig4a", &cfg.params, limits);
            (s.spins, s.theta_over_pi) = (cfg.spins.clone(), cfg.theta.clone());
            emit(&cfg.run()?, &c, &s, started)
        }
        Command::Fig4b(c) => {
            let d = Fig4b::default();
            let cfg = Fig4b {
                spins: c.spins(d.spins.clone(), &limits)?,
                params: c.params(d.params)?,
                theta: c.theta(d.theta.clone())?,
                phi: single(c.phi(vec![d.phi])?, "phi")?,
                jobs: c.jobs,
            };
            let mut s = c.scenario("fig4b", &cfg.params, limits);
            (s.spins, s.theta_over_pi, s.phi) =
                (cfg.spins.clone(), cfg.theta.clone(), vec![cfg.phi]);
            emit(&cfg.run()?, &c, &s, started)
        }
        Command::SingleSpin(c) => {
            let d = SingleSpin::default();
            let cfg = SingleSpin {
                params: c.params(d.params)?,
                theta: single(c.theta(vec![d.theta])?, "theta")?,
                phi: single(c.phi(vec![d.phi])?, "phi")?,
                t_final: c.positive("t-final", c.t_final, d.t_final)?,
                dt: c.positive("dt", c.dt, d.dt)?,
                rtol: c.positive("rtol", c.rtol, d.rtol)?,
            };
            let mut s = c.scenario("single-spin", &cfg.params, limits);
            (s.spins, s.theta_over_pi, s.phi, s.rtol) =
                (vec![1], vec![cfg.theta], vec![cfg.phi], cfg.rtol);
            emit(&cfg.run()?, &c, &s, started)
        }
        Command::Oscillator(a) => {
            let c = &a.common;
            let d = Oscillator::default();
            if let Some(cut) = a.cutoff {
                limits.check_cutoff(cut)?;
            }
            let cfg = Oscillator {
                params: c.params(d.params)?,
                cutoff: a.cutoff,
                x0: a.x0,
                y0: a.y0,
                t_final: c.positive("t-final", c.t_final, d.t_final)?,
                dt: c.positive("dt", c.dt, d.dt)?,
                rtol: c.positive("rtol", c.rtol, d.rtol)?,
            };
            let mut s = c.scenario("oscillator", &cfg.params, limits);
            s.rtol = cfg.rtol;
            emit(&cfg.run()?, c, &s, started)
        }
        Command::SteadyState(c) => {
            let d = SteadyState::default();
            let cfg = SteadyState {
                spins: c.spins(d.spins.clone(), &limits)?,
                params: c.params(d.params)?,
                jobs: c.jobs,
            };
            let mut s = c.scenario("steady-state", &cfg.params, limits);
            s.spins = cfg.spins.clone();
            emit(&cfg.run()?, &c, &s, started)
        }
        Command::Verify(c) => {
            let report = run_verification(c.seed, &Formulas::default())?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            match &c.out {
                Some(path) => std::fs::write(path, &text)?,
                None => print!("{text}"),
            }
            if report.passed {
                Ok(())
            } else {
                Err(AppError::Verification(report.failures().join(", ")))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("squeezelax: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
