//! Optimality function, Armijo step and the descent drivers.
//!
//! Each iteration computes the state and costate of the current mixture,
//! takes the zero-order hold of the pointwise Hamiltonian minimizer as the
//! direction `ν`, and moves to `μ + β^ℓ (ν − μ)` for the smallest `ℓ` passing
//! the sufficient-descent test `J(candidate) − J(μ) ≤ α β^ℓ η θ(μ)`.
//!
//! In [`Mode::General`] the update is a convex combination of measures, so
//! the mixture gains at most one atom per iteration, unless it is collapsed
//! onto one atom per mode afterwards (see [`SolverConfig::collapse_modes`]). In
//! [`Mode::Convexified`], available when the dynamics are affine and the cost
//! convex in `u`, the update combines ordinary controls pointwise and the
//! iterate stays a single atom in `conv(U)`.

use std::time::Instant;

use crate::controls::{
    collapse_onto_modes, convex_combine_controls, convex_combine_measures, prune_and_merge, OrdinaryControl,
    RelaxedMixture, DEFAULT_WEIGHT_FLOOR,
};
use crate::error::{Error, Result};
use crate::integrate::{
    integrate_costate_backward, integrate_state_forward, simulate, CostateTrajectory,
    StateTrajectory,
};
use crate::problem::{atoms_at, hamiltonian, relaxed_hamiltonian, ControlHull, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Measure-valued updates; valid for any problem.
    General,
    /// Pointwise control updates; requires affine dynamics and convex cost.
    Convexified,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Mode::General),
            "convexified" => Ok(Mode::Convexified),
            other => Err(Error::InvalidConfig(format!(
                "mode must be `general` or `convexified`, got `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::General => "general",
            Mode::Convexified => "convexified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Sufficient-descent fraction, in `(0, 1)`.
    pub alpha: f64,
    /// Step contraction, in `(0, 1)`.
    pub beta: f64,
    /// Fraction of the Hamiltonian gap a direction must achieve, in `(0, 1)`.
    pub eta: f64,
    pub max_iters: usize,
    /// Largest Armijo exponent tried before giving up.
    pub l_max: u32,
    /// Stop once `|θ| ≤ theta_tol`.
    pub theta_tol: f64,
    pub weight_floor: f64,
    /// In general mode, collapse the mixture onto one atom per mode after
    /// every measure update when [`Problem::collapsible_onto_modes`] holds.
    pub collapse_modes: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.5,
            eta: 0.9,
            max_iters: 100,
            l_max: 40,
            theta_tol: 1e-8,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            collapse_modes: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        open("alpha", self.alpha)?;
        open("beta", self.beta)?;
        open("eta", self.eta)?;
        if !(self.theta_tol >= 0.0) {
            return Err(Error::InvalidConfig("theta_tol must be non-negative".into()));
        }
        if !(0.0..=0.01).contains(&self.weight_floor) {
            return Err(Error::InvalidConfig("weight_floor must lie in [0, 0.01]".into()));
        }
        Ok(())
    }
}

/// One accepted descent step.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Iteration index, starting at 1 for the initial control.
    pub k: usize,
    /// `J(μ_k)`.
    pub cost: f64,
    /// `θ(μ_k)`.
    pub theta: f64,
    /// Accepted step `β^ℓ`.
    pub lambda: f64,
    pub l: u32,
    pub n_cost_evals: usize,
    pub wall_ms: f64,
    /// `J(μ_{k+1})`.
    pub cost_next: f64,
}

/// θ and the pointwise minimizer it was computed from.
///
/// `u*_k = argmin_U H(x_k, ·, p_k)` on every cell and
/// `θ = Σ_k dt (H(x_k, u*_k, p_k) − H(x_k, μ_k, p_k))`, clamped to `≤ 0`.
pub fn optimality_theta<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    x: &StateTrajectory,
    p: &CostateTrajectory,
) -> Result<(f64, OrdinaryControl)> {
    if !x.grid.same_as(mu.grid()) || !p.grid.same_as(mu.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = *mu.grid();
    let mut theta = 0.0;
    let mut values = Vec::with_capacity(grid.n_steps());
    for k in 0..grid.n_steps() {
        let (xk, pk) = (&x.values[k], &p.values[k]);
        let u_star = problem.hamiltonian_minimizer(xk, pk);
        let gap = hamiltonian(problem, xk, &u_star, pk)
            - relaxed_hamiltonian(problem, xk, atoms_at(mu.atoms(), k), pk);
        theta += grid.dt() * gap;
        values.push(u_star);
    }
    Ok((theta.min(0.0), OrdinaryControl::new(grid, values)?))
}

/// `∫ (H(x, ν, p) − H(x, μ, p)) dt` on the grid, with `x`, `p` those of `μ`.
pub fn hamiltonian_gap<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    nu: &RelaxedMixture,
    x: &StateTrajectory,
    p: &CostateTrajectory,
) -> f64 {
    gap_with_costate_shift(problem, mu, nu, x, p, 0)
}

fn gap_with_costate_shift<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    nu: &RelaxedMixture,
    x: &StateTrajectory,
    p: &CostateTrajectory,
    shift: usize,
) -> f64 {
    let grid = x.grid;
    (0..grid.n_steps())
        .map(|k| {
            let (xk, pk) = (&x.values[k], &p.values[k + shift]);
            grid.dt()
                * (relaxed_hamiltonian(problem, xk, atoms_at(nu.atoms(), k), pk)
                    - relaxed_hamiltonian(problem, xk, atoms_at(mu.atoms(), k), pk))
        })
        .sum()
}

/// Compares the one-sided derivative of `λ ↦ J(μ + λ(ν − μ))` at zero, as
/// predicted by the Hamiltonian gap, with a forward difference at
/// `lambda_small`. Returns `(analytic, finite_difference)`.
///
/// The gap is summed with `H(x_k, ·, p_{k+1})`, the pairing under which it is
/// the derivative of the Euler-discretized cost when the costate sweep is the
/// discrete adjoint (as for the hybrid LQR). Pairing with `p_k` instead adds
/// an `O(dt)` error of about 1% at `dt = 0.01` there.
pub fn directional_derivative_check<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    nu: &RelaxedMixture,
    lambda_small: f64,
) -> Result<(f64, f64)> {
    if !(lambda_small > 0.0 && lambda_small <= 1e-3) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step {lambda_small} outside (0, 1e-3]"
        )));
    }
    let (x, j0) = simulate(problem, mu)?;
    let p = integrate_costate_backward(problem, mu, &x)?;
    let analytic = gap_with_costate_shift(problem, mu, nu, &x, &p, 1);
    let mixed = convex_combine_measures(mu, nu, lambda_small)?;
    let (_, j1) = simulate(problem, &mixed)?;
    Ok((analytic, (j1 - j0) / lambda_small))
}

/// Accepted Armijo step.
#[derive(Debug, Clone)]
pub struct ArmijoStep {
    pub l: u32,
    pub lambda: f64,
    pub cost_next: f64,
    pub mu_next: RelaxedMixture,
    pub n_cost_evals: usize,
}

/// `μ + λ (ν − μ)` for the given mode, with atoms lighter than the weight
/// floor pruned (and collapsed onto modes when enabled).
pub fn step_candidate<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    nu: &RelaxedMixture,
    lambda: f64,
    mode: Mode,
    config: &SolverConfig,
) -> Result<RelaxedMixture> {
    match mode {
        Mode::General => {
            let mixed = convex_combine_measures(mu, nu, lambda)?;
            let mixed = match problem.control_hull() {
                ControlHull::ModesTimesBox { modes, .. }
                    if config.collapse_modes && problem.collapsible_onto_modes() =>
                {
                    collapse_onto_modes(&mixed, *modes)
                }
                _ => mixed,
            };
            prune_and_merge(&mixed, config.weight_floor)
        }
        Mode::Convexified => {
            let (u, v) = match (mu.as_ordinary(), nu.as_ordinary()) {
                (Some(u), Some(v)) => (u, v),
                _ => {
                    return Err(Error::InvalidConfig(
                        "convexified steps need single-atom controls".into(),
                    ))
                }
            };
            Ok(RelaxedMixture::dirac(convex_combine_controls(u, v, lambda)?))
        }
    }
}

/// Sufficient-descent test of the Armijo rule.
pub fn armijo_accepts(cost_next: f64, cost: f64, lambda: f64, theta: f64, config: &SolverConfig) -> bool {
    cost_next - cost <= config.alpha * lambda * config.eta * theta
}

/// Smallest `ℓ ∈ 0..=l_max` whose candidate passes the sufficient-descent
/// test. `cost` is `J(μ)`; the returned cost is that of the returned
/// (pruned) mixture.
pub fn armijo_step<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    nu: &RelaxedMixture,
    theta: f64,
    cost: f64,
    config: &SolverConfig,
    mode: Mode,
) -> Result<ArmijoStep> {
    if !(theta < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "Armijo search needs θ < 0, got {theta}"
        )));
    }
    let mut lambda = 1.0;
    for l in 0..=config.l_max {
        let candidate = step_candidate(problem, mu, nu, lambda, mode, config)?;
        let (_, cost_next) = simulate(problem, &candidate)?;
        if armijo_accepts(cost_next, cost, lambda, theta, config) {
            return Ok(ArmijoStep {
                l,
                lambda,
                cost_next,
                mu_next: candidate,
                n_cost_evals: l as usize + 1,
            });
        }
        lambda *= config.beta;
    }
    Err(Error::ArmijoStall {
        l_max: config.l_max,
    })
}

/// Result of one call to [`iterate`].
#[derive(Debug, Clone)]
pub enum Iteration {
    /// `|θ(μ)| ≤ theta_tol`; `μ` is returned unchanged.
    Converged { theta: f64, cost: f64 },
    Step {
        mu_next: RelaxedMixture,
        record: IterationRecord,
    },
}

fn check_mode<P: Problem + ?Sized>(problem: &P, mu: &RelaxedMixture, mode: Mode) -> Result<()> {
    if mode == Mode::Convexified {
        if !(problem.affine_in_u() && problem.convex_cost_in_u()) {
            return Err(Error::InvalidConfig(format!(
                "{} is not affine in u with convex cost; use the general mode",
                problem.name()
            )));
        }
        if mu.as_ordinary().is_none() {
            return Err(Error::InvalidConfig(
                "convexified mode needs a single-atom starting control".into(),
            ));
        }
    }
    Ok(())
}

/// One descent step from `mu`; `k` labels the resulting record.
pub fn iterate<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    config: &SolverConfig,
    mode: Mode,
    k: usize,
) -> Result<Iteration> {
    config.validate()?;
    check_mode(problem, mu, mode)?;
    let started = Instant::now();

    let x = integrate_state_forward(problem, mu, &problem.initial_state())?;
    let cost = crate::integrate::evaluate_cost(problem, mu, &x);
    let p = integrate_costate_backward(problem, mu, &x)?;
    let (theta, u_star) = optimality_theta(problem, mu, &x, &p)?;
    if theta.abs() <= config.theta_tol {
        return Ok(Iteration::Converged { theta, cost });
    }

    let nu = RelaxedMixture::dirac(u_star);
    let step = armijo_step(problem, mu, &nu, theta, cost, config, mode)?;

    Ok(Iteration::Step {
        mu_next: step.mu_next,
        record: IterationRecord {
            k,
            cost,
            theta,
            lambda: step.lambda,
            l: step.l,
            n_cost_evals: step.n_cost_evals + 1,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            cost_next: step.cost_next,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    IterationBudget,
    Converged,
    ArmijoStall,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::IterationBudget => "iteration-budget",
            Termination::Converged => "converged",
            Termination::ArmijoStall => "armijo-stall",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub mu_final: RelaxedMixture,
    pub records: Vec<IterationRecord>,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub termination: Termination,
}

/// Repeats [`iterate`] until the budget is spent, θ vanishes or the Armijo
/// search stalls.
pub fn run<P: Problem + ?Sized>(
    problem: &P,
    mu0: RelaxedMixture,
    config: &SolverConfig,
    mode: Mode,
) -> Result<RunLog> {
    config.validate()?;
    check_mode(problem, &mu0, mode)?;
    mu0.check_feasible(problem.control_hull())?;

    let (_, initial_cost) = simulate(problem, &mu0)?;
    let mut mu = mu0;
    let mut final_cost = initial_cost;
    let mut records = Vec::new();
    let mut termination = Termination::IterationBudget;
    for k in 1..=config.max_iters {
        match iterate(problem, &mu, config, mode, k) {
            Ok(Iteration::Step { mu_next, record }) => {
                final_cost = record.cost_next;
                records.push(record);
                mu = mu_next;
            }
            Ok(Iteration::Converged { .. }) => {
                termination = Termination::Converged;
                break;
            }
            Err(Error::ArmijoStall { .. }) => {
                termination = Termination::ArmijoStall;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RunLog {
        mu_final: mu,
        records,
        initial_cost,
        final_cost,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{Benchmark, DoubleTank, HybridLqr};
    use crate::grid::TimeGrid;
    use nalgebra::DVector;

    fn tank_start(dt: f64) -> (DoubleTank, RelaxedMixture) {
        let tank = DoubleTank::new();
        let grid = TimeGrid::new(tank.horizon(), dt).unwrap();
        let mu = RelaxedMixture::dirac(tank.initial_control(grid).unwrap());
        (tank, mu)
    }

    #[test]
    fn mode_round_trips() {
        for m in [Mode::General, Mode::Convexified] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("fast".parse::<Mode>().is_err());
    }

    #[test]
    fn config_ranges() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { alpha: 1.0, ..Default::default() },
            SolverConfig { beta: 0.0, ..Default::default() },
            SolverConfig { eta: -0.1, ..Default::default() },
            SolverConfig { theta_tol: -1.0, ..Default::default() },
            SolverConfig { weight_floor: 0.5, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn zero_budget_returns_start() {
        let (tank, mu) = tank_start(0.1);
        let cfg = SolverConfig { max_iters: 0, ..Default::default() };
        let log = run(&tank, mu, &cfg, Mode::Convexified).unwrap();
        assert!(log.records.is_empty());
        assert_eq!(log.initial_cost, log.final_cost);
    }

    #[test]
    fn theta_vanishes_at_the_minimizer() {
        let (tank, mu) = tank_start(0.1);
        let (x, _) = simulate(&tank, &mu).unwrap();
        let p = integrate_costate_backward(&tank, &mu, &x).unwrap();
        let (theta, u_star) = optimality_theta(&tank, &mu, &x, &p).unwrap();
        assert!(theta < 0.0);
        let star = RelaxedMixture::dirac(u_star.clone());
        // same x and p, different μ: θ of the minimizer itself is zero
        let (theta_star, again) = optimality_theta(&tank, &star, &x, &p).unwrap();
        assert_eq!(theta_star, 0.0);
        assert_eq!(again, u_star);
    }

    #[test]
    fn first_step_is_minimal() {
        let (tank, mu) = tank_start(0.01);
        let cfg = SolverConfig::default();
        let Iteration::Step { record, .. } = iterate(&tank, &mu, &cfg, Mode::Convexified, 1).unwrap()
        else {
            panic!("first iteration converged");
        };
        assert!(record.cost_next - record.cost <= cfg.alpha * record.lambda * cfg.eta * record.theta);
        if record.l > 0 {
            let (x, _) = simulate(&tank, &mu).unwrap();
            let p = integrate_costate_backward(&tank, &mu, &x).unwrap();
            let (_, u_star) = optimality_theta(&tank, &mu, &x, &p).unwrap();
            let nu = RelaxedMixture::dirac(u_star);
            let lam = record.lambda / cfg.beta;
            let cand = step_candidate(&tank, &mu, &nu, lam, Mode::Convexified, &cfg).unwrap();
            let (_, j) = simulate(&tank, &cand).unwrap();
            assert!(!armijo_accepts(j, record.cost, lam, record.theta, &cfg));
        }
    }

    #[test]
    fn armijo_needs_negative_theta_and_stalls_without_descent() {
        let (tank, mu) = tank_start(0.1);
        let cfg = SolverConfig { l_max: 3, ..Default::default() };
        let (_, j) = simulate(&tank, &mu).unwrap();
        assert!(armijo_step(&tank, &mu, &mu, 0.0, j, &cfg, Mode::General).is_err());
        assert!(matches!(
            armijo_step(&tank, &mu, &mu, -1.0, j, &cfg, Mode::General),
            Err(Error::ArmijoStall { l_max: 3 })
        ));
    }

    #[test]
    fn convexified_mode_is_refused_for_the_hybrid_problem() {
        let lqr = HybridLqr::new();
        let grid = TimeGrid::new(lqr.horizon(), 0.1).unwrap();
        let mu = RelaxedMixture::dirac(lqr.initial_control(grid).unwrap());
        let r = run(&lqr, mu, &SolverConfig::default(), Mode::Convexified);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let tank = DoubleTank::new();
        let grid = TimeGrid::new(tank.horizon(), 0.1).unwrap();
        let u = OrdinaryControl::constant(grid, DVector::from_element(1, 3.0)).unwrap();
        let r = run(&tank, RelaxedMixture::dirac(u), &SolverConfig::default(), Mode::General);
        assert!(matches!(r, Err(Error::Infeasible { atom: 0, cell: 0 })));
    }

    #[test]
    fn hybrid_mixture_is_bounded_by_the_mode_count() {
        let lqr = HybridLqr::new();
        let grid = TimeGrid::new(lqr.horizon(), 0.05).unwrap();
        let mu = RelaxedMixture::dirac(lqr.initial_control(grid).unwrap());
        let cfg = SolverConfig { max_iters: 8, ..Default::default() };
        let log = run(&lqr, mu.clone(), &cfg, Mode::General).unwrap();
        assert!(log.mu_final.len() <= 3);
        assert!(log.mu_final.weight_sum_error() <= 1e-12);

        let plain = SolverConfig { collapse_modes: false, ..cfg };
        let mut mu = mu;
        for k in 1..=8 {
            match iterate(&lqr, &mu, &plain, Mode::General, k).unwrap() {
                Iteration::Step { mu_next, .. } => {
                    assert!(mu_next.len() <= mu.len() + 1);
                    mu = mu_next;
                }
                Iteration::Converged { .. } => break,
            }
        }
    }
}
