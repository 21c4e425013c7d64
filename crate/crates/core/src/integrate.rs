//! Fixed-step forward Euler integration of the relaxed state equation, the
//! backward costate sweep, and left-endpoint quadrature of the cost.

use nalgebra::DVector;

use crate::controls::{OrdinaryControl, RelaxedMixture};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problem::Problem;

/// State samples `x_0 .. x_n` at the grid instants.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub grid: TimeGrid,
    pub values: Vec<DVector<f64>>,
}

/// Costate samples `p_0 .. p_n` at the grid instants.
#[derive(Debug, Clone, PartialEq)]
pub struct CostateTrajectory {
    pub grid: TimeGrid,
    pub values: Vec<DVector<f64>>,
}

impl StateTrajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        &self.values[self.values.len() - 1]
    }
}

fn check_inputs<P: Problem + ?Sized>(
    problem: &P,
    control_dim: usize,
    x0: &DVector<f64>,
) -> Result<()> {
    if x0.len() != problem.state_dim() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: problem.state_dim(),
            found: x0.len(),
        });
    }
    if control_dim != problem.control_dim() {
        return Err(Error::DimensionMismatch {
            what: "control",
            expected: problem.control_dim(),
            found: control_dim,
        });
    }
    Ok(())
}

fn euler_forward<F>(grid: TimeGrid, x0: &DVector<f64>, mut rate: F) -> Result<StateTrajectory>
where
    F: FnMut(&DVector<f64>, usize) -> DVector<f64>,
{
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(x0.clone());
    for k in 0..grid.n_steps() {
        let xk = &values[k];
        let next = xk + rate(xk, k) * dt;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged {
                stage: "state",
                step: k + 1,
            });
        }
        values.push(next);
    }
    Ok(StateTrajectory { grid, values })
}

/// `x_{k+1} = x_k + dt Σ_i w_i f(x_k, u_i(t_k))`.
pub fn integrate_state_forward<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    x0: &DVector<f64>,
) -> Result<StateTrajectory> {
    check_inputs(problem, mu.control_dim(), x0)?;
    let n = problem.state_dim();
    euler_forward(*mu.grid(), x0, |x, k| {
        mu.atoms().iter().fold(DVector::zeros(n), |acc, a| {
            acc + problem.dynamics(x, a.control.value(k)) * a.weight_at(k)
        })
    })
}

/// Forward Euler for an ordinary control. Bitwise identical to
/// [`integrate_state_forward`] on the corresponding Dirac mixture.
pub fn integrate_state_ordinary<P: Problem + ?Sized>(
    problem: &P,
    u: &OrdinaryControl,
    x0: &DVector<f64>,
) -> Result<StateTrajectory> {
    check_inputs(problem, u.dim(), x0)?;
    euler_forward(*u.grid(), x0, |x, k| problem.dynamics(x, u.value(k)))
}

/// Backward sweep from `p_n = ∇φ(x_n)`:
/// `p_k = p_{k+1} + dt Σ_i w_i (∂f/∂xᵀ p_{k+1} + ∂L/∂xᵀ)` with the
/// derivatives taken at `(x_{k+1}, u_i(t_{k+1}))`. The control at `t_n` is the
/// last cell's value.
pub fn integrate_costate_backward<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    x: &StateTrajectory,
) -> Result<CostateTrajectory> {
    if !x.grid.same_as(mu.grid()) {
        return Err(Error::GridMismatch);
    }
    let grid = x.grid;
    let n_steps = grid.n_steps();
    let dt = grid.dt();
    let n = problem.state_dim();

    let mut values = vec![DVector::zeros(n); n_steps + 1];
    values[n_steps] = problem.terminal_cost_grad(x.final_state());
    for k in (0..n_steps).rev() {
        let cell = (k + 1).min(n_steps - 1);
        let xk1 = &x.values[k + 1];
        let pk1 = &values[k + 1];
        let minus_pdot = mu.atoms().iter().fold(DVector::zeros(n), |acc, a| {
            let u = a.control.value(cell);
            acc + (problem.dynamics_jac_x(xk1, u).tr_mul(pk1) + problem.running_cost_grad_x(xk1, u))
                * a.weight_at(cell)
        });
        let pk = pk1 + minus_pdot * dt;
        if pk.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged {
                stage: "costate",
                step: k,
            });
        }
        values[k] = pk;
    }
    Ok(CostateTrajectory { grid, values })
}

/// `Σ_{k<n} dt Σ_i w_i L(x_k, u_i(t_k)) + φ(x_n)`.
pub fn evaluate_cost<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    x: &StateTrajectory,
) -> f64 {
    let dt = x.grid.dt();
    let running: f64 = (0..x.grid.n_steps())
        .map(|k| {
            let xk = &x.values[k];
            dt * mu
                .atoms()
                .iter()
                .map(|a| a.weight_at(k) * problem.running_cost(xk, a.control.value(k)))
                .sum::<f64>()
        })
        .sum();
    running + problem.terminal_cost(x.final_state())
}

pub fn evaluate_cost_ordinary<P: Problem + ?Sized>(
    problem: &P,
    u: &OrdinaryControl,
    x: &StateTrajectory,
) -> f64 {
    let dt = x.grid.dt();
    let running: f64 = (0..x.grid.n_steps())
        .map(|k| dt * problem.running_cost(&x.values[k], u.value(k)))
        .sum();
    running + problem.terminal_cost(x.final_state())
}

/// Integrates from the problem's initial state and returns the trajectory
/// with its cost.
pub fn simulate<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
) -> Result<(StateTrajectory, f64)> {
    let x = integrate_state_forward(problem, mu, &problem.initial_state())?;
    let j = evaluate_cost(problem, mu, &x);
    Ok((x, j))
}
