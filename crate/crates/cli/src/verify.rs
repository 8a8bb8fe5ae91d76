//! Formula-versus-oracle checks and trajectory invariants.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use squeezelax_core::lindblad::{oscillator_oracle, steady_state, TrajectoryDiagnostics};
use squeezelax_core::moments::{
    collective_cov_rhs, collective_mean_rhs, decay_rates, gardiner_rhs, DecayRates, MeanDerivative,
};
use squeezelax_core::spin::trace_product;
use squeezelax_core::{
    evolve, spin_coherent_state, BlochAngles, CVector, CollectiveOps, DickeSpace, IntegratorConfig,
    Liouvillian, QuantumState, SpinMoments, SqueezingParams,
};

use crate::error::AppResult;

pub type RateFn = fn(usize, f64, &SqueezingParams) -> DecayRates;
pub type GardinerFn = fn(&SpinMoments, &SqueezingParams) -> MeanDerivative;

/// Closed-form expressions under test; swapped out to check that the
/// report notices a wrong formula.
#[derive(Clone, Copy)]
pub struct Formulas {
    pub rates: RateFn,
    pub gardiner: GardinerFn,
}

impl Default for Formulas {
    fn default() -> Self {
        Self {
            rates: decay_rates,
            gardiner: gardiner_rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// Passes when `residual <= tolerance`; a NaN residual fails.
    fn new(name: &'static str, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed: residual <= tolerance,
            residual,
            tolerance,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub passed: bool,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub max_positivity_violation: f64,
    pub max_trace_drift: f64,
    pub max_hermiticity_residue: f64,
}

impl Report {
    pub fn failures(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }
}

trait NanMax {
    fn nmax(self, other: f64) -> f64;
}

impl NanMax for f64 {
    // f64::max drops NaN, which would hide a broken residual
    fn nmax(self, other: f64) -> f64 {
        if self.is_nan() || other.is_nan() {
            f64::NAN
        } else {
            self.max(other)
        }
    }
}

#[derive(Default)]
struct Diagnostics {
    positivity: f64,
    trace: f64,
    herm: f64,
}

impl Diagnostics {
    fn absorb(&mut self, d: &TrajectoryDiagnostics) {
        self.positivity = self.positivity.nmax(-d.min_eigenvalue);
        self.trace = self.trace.nmax(d.max_trace_drift);
        self.herm = self.herm.nmax(d.max_hermiticity_residue);
    }
}

pub fn random_pure_state(rng: &mut ChaCha8Rng, dim: usize) -> QuantumState {
    let mut psi = CVector::from_fn(dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = psi.norm();
    psi.unscale_mut(norm);
    QuantumState::Pure(psi)
}

fn random_params(rng: &mut ChaCha8Rng) -> SqueezingParams {
    let n: f64 = rng.gen_range(0.0..3.0);
    let frac: f64 = rng.gen_range(0.0..=1.0);
    SqueezingParams::new(n, frac * (n * (n + 1.0)).sqrt(), 1.0).expect("admissible by construction")
}

fn ops(n: usize) -> CollectiveOps {
    CollectiveOps::new(DickeSpace::new(n).expect("n >= 1"))
}

fn check_gardiner(rng: &mut ChaCha8Rng, f: &Formulas) -> AppResult<Check> {
    let o = ops(1);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let p = random_params(rng);
        let state = random_pure_state(rng, 2);
        let m = SpinMoments::of_state(&state, &o)?;
        let oracle = Liouvillian::collective(&o, p).mean_derivative(&o, &state.density_matrix())?;
        let formula = (f.gardiner)(&m, &p);
        for (a, b) in [
            (oracle.x, formula.x),
            (oracle.y, formula.y),
            (oracle.z, formula.z),
        ] {
            worst = worst.nmax((a - b).abs());
        }
    }
    Ok(Check::new(
        "gardiner_vs_oracle",
        worst,
        1e-12,
        "single spin, 20 random states",
    ))
}

/// Instantaneous `-(d<S_i>/dt) / <S_i>` on coherent states against the rate formula.
pub fn rate_residual(
    rates: RateFn,
    spins: &[usize],
    theta: &[f64],
    p: &SqueezingParams,
) -> AppResult<f64> {
    let phi = 0.3;
    let mut worst = 0.0_f64;
    for &n in spins {
        let o = ops(n);
        let l = Liouvillian::collective(&o, *p);
        for &th in theta {
            let state = spin_coherent_state(o.space, BlochAngles::new(th * PI, phi)?);
            let rho = state.density_matrix();
            let d = l.mean_derivative(&o, &rho)?;
            let mx = trace_product(&o.sx, &rho).re;
            let my = trace_product(&o.sy, &rho).re;
            let r = rates(n, th * PI, p);
            worst = worst
                .nmax(((-d.x / mx) - r.x).abs() / r.x.abs())
                .nmax(((-d.y / my) - r.y).abs() / r.y.abs());
        }
    }
    Ok(worst)
}

fn check_rates(f: &Formulas) -> AppResult<Check> {
    let p = SqueezingParams::minimal(0.05, 1.0)?;
    let spins: Vec<usize> = (1..=20).collect();
    let worst = rate_residual(f.rates, &spins, &[0.55, 0.75, 0.87], &p)?;
    Ok(Check::new(
        "rates_vs_oracle",
        worst,
        1e-9,
        "n = 1..20, relative",
    ))
}

fn check_moment_rhs(rng: &mut ChaCha8Rng) -> AppResult<[Check; 2]> {
    let (mut mean, mut cov) = (0.0_f64, 0.0_f64);
    for n in 1..=10 {
        let o = ops(n);
        for _ in 0..20 {
            let p = random_params(rng);
            let state = random_pure_state(rng, n + 1);
            let rho = state.density_matrix();
            let l = Liouvillian::collective(&o, p);
            let a = l.mean_derivative(&o, &rho)?;
            let b = collective_mean_rhs(&state, &o, &p)?;
            mean = mean
                .nmax((a.x - b.x).abs())
                .nmax((a.y - b.y).abs())
                .nmax((a.z - b.z).abs());
            let a = l.covariance_derivative(&o, &rho)?;
            let b = collective_cov_rhs(&state, &o, &p)?;
            cov = cov
                .nmax((a.var_x - b.var_x).abs())
                .nmax((a.var_y - b.var_y).abs())
                .nmax((a.cov_xy - b.cov_xy).abs());
        }
    }
    Ok([
        Check::new(
            "mean_rhs_vs_oracle",
            mean,
            1e-10,
            "n = 1..10, 20 random states each",
        ),
        Check::new(
            "cov_rhs_vs_oracle",
            cov,
            1e-9,
            "n = 1..10, 20 random states each",
        ),
    ])
}

fn check_finite_difference(diag: &mut Diagnostics) -> AppResult<Check> {
    let dt = 1e-5;
    let p = SqueezingParams::minimal(0.5, 1.0)?;
    let mut worst = 0.0_f64;
    for n in [1, 5, 10] {
        let o = ops(n);
        let state = spin_coherent_state(o.space, BlochAngles::new(0.7 * PI, 0.3)?);
        let l = Liouvillian::collective(&o, p);
        let traj = evolve(
            &l,
            &state.density_matrix(),
            2.0 * dt,
            &IntegratorConfig::rk45(1e-13, 1e-15).with_record_every(dt),
        )?;
        diag.absorb(&traj.diagnostics);
        let m = traj.spin_moments(&o)?;
        let fd =
            |f: fn(&SpinMoments) -> f64| (-3.0 * f(&m[0]) + 4.0 * f(&m[1]) - f(&m[2])) / (2.0 * dt);
        let rhs = collective_cov_rhs(&state, &o, &p)?;
        worst = worst
            .nmax((fd(|s| s.var_x) - rhs.var_x).abs())
            .nmax((fd(|s| s.var_y) - rhs.var_y).abs())
            .nmax((fd(|s| s.cov_xy) - rhs.cov_xy).abs());
    }
    Ok(Check::new(
        "finite_difference_covariance",
        worst,
        1e-3,
        "dt = 1e-5, n in {1, 5, 10}",
    ))
}

fn check_single_spin_steady_state() -> AppResult<Check> {
    let o = ops(1);
    let mut worst = 0.0_f64;
    for n in [0.0, 0.5, 5.0] {
        let p = SqueezingParams::minimal(n, 1.0)?;
        let rho = steady_state(&Liouvillian::collective(&o, p))?;
        let m = SpinMoments::of_state(&QuantumState::Mixed(rho), &o)?;
        worst = worst
            .nmax((m.mean_z + 1.0 / (2.0 * n + 1.0)).abs())
            .nmax((m.var_x - 1.0).abs())
            .nmax((m.var_y - 1.0).abs());
    }
    Ok(Check::new(
        "single_spin_steady_state",
        worst,
        1e-9,
        "N in {0, 0.5, 5}",
    ))
}

fn check_pair_purity() -> AppResult<Check> {
    let o = ops(2);
    let mut worst = 0.0_f64;
    for n in [0.5, 2.0] {
        let l = Liouvillian::collective(&o, SqueezingParams::minimal(n, 1.0)?);
        let rho = steady_state(&l)?;
        worst = worst.nmax(1.0 - trace_product(&rho, &rho).re);
    }
    Ok(Check::new(
        "pair_steady_state_purity",
        worst,
        1e-6,
        "1 - Tr rho^2, N in {0.5, 2}",
    ))
}

fn check_oscillator(diag: &mut Diagnostics) -> AppResult<Check> {
    let p = SqueezingParams::minimal(1.0, 1.0)?;
    let cfg = IntegratorConfig::rk45(1e-10, 1e-13).with_record_every(20.0);
    let run = oscillator_oracle(None, &p, C64::new(0.0, 0.0), 20.0, &cfg)?;
    diag.absorb(&run.trajectory.diagnostics);
    let m = *run.moments().last().expect("final state");
    let (vx, vy) = p.input_field_variances();
    let worst = (m.var_x - vx)
        .abs()
        .nmax((m.var_y - vy).abs())
        .nmax((m.var_x * m.var_y - 1.0).abs());
    Ok(Check::new(
        "oscillator_equilibrium",
        worst,
        1e-6,
        format!("cutoff {}", run.cutoff),
    ))
}

fn check_invariants(rng: &mut ChaCha8Rng, diag: &mut Diagnostics) -> AppResult<Check> {
    let cfg = IntegratorConfig::rk45(1e-9, 1e-12).with_record_every(0.5);
    for n in [1, 4, 10] {
        let o = ops(n);
        let p = random_params(rng);
        let l = Liouvillian::collective(&o, p);
        let state = if n == 4 {
            random_pure_state(rng, n + 1)
        } else {
            spin_coherent_state(o.space, BlochAngles::new(0.6 * PI, 1.0)?)
        };
        let traj = evolve(&l, &state.density_matrix(), 3.0, &cfg)?;
        diag.absorb(&traj.diagnostics);
    }
    let worst = (diag.trace / 1e-8)
        .nmax(diag.herm / 1e-8)
        .nmax(diag.positivity / 1e-7);
    Ok(Check::new(
        "trajectory_invariants",
        worst,
        1.0,
        "max of trace drift / 1e-8, hermiticity / 1e-8, negativity / 1e-7",
    ))
}

pub fn run_verification(seed: u64, formulas: &Formulas) -> AppResult<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diag = Diagnostics::default();
    let mut checks = vec![check_gardiner(&mut rng, formulas)?, check_rates(formulas)?];
    checks.extend(check_moment_rhs(&mut rng)?);
    checks.push(check_finite_difference(&mut diag)?);
    checks.push(check_single_spin_steady_state()?);
    checks.push(check_pair_purity()?);
    checks.push(check_oscillator(&mut diag)?);
    checks.push(check_invariants(&mut rng, &mut diag)?);
    Ok(Report {
        passed: checks.iter().all(|c| c.passed),
        seed,
        checks,
        max_positivity_violation: diag.positivity.max(0.0),
        max_trace_drift: diag.trace,
        max_hermiticity_residue: diag.herm,
    })
}
