use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use relaxed_control::benchmarks::{by_name, NAMES};
use relaxed_control::integrate::simulate;
use relaxed_control::{
    check_problem_consistency, project_pwm, pwm_fidelity_report, run, BlockOrder, Error, Mode, PwmConfig,
    RelaxedMixture, SolverConfig, TimeGrid,
};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidConfig(_) | Error::InvalidGrid(_) | Error::UnknownProblem(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(format!("{}: {e}", e.class())),
    }
}

/// Outcome of one descent run.
#[pyclass(frozen, get_all, skip_from_py_object)]
#[derive(Debug, Clone)]
pub struct Solution {
    pub problem: String,
    pub dt: f64,
    pub iters: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub projected_cost: Option<f64>,
    /// `J(μ_k)` before each accepted update.
    pub costs: Vec<f64>,
    pub thetas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub final_state: Vec<f64>,
    pub atoms: usize,
    pub termination: String,
}

#[pymethods]
impl Solution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(problem={:?}, dt={}, iters={}, initial_cost={}, final_cost={}, projected_cost={:?})",
            self.problem, self.dt, self.iters, self.initial_cost, self.final_cost, self.projected_cost
        )
    }
}

#[allow(clippy::too_many_arguments)]
pub fn solve_problem(
    problem: &str,
    dt: f64,
    iters: usize,
    alpha: f64,
    beta: f64,
    eta: f64,
    mode: Option<&str>,
    pwm_cycle_steps: Option<usize>,
    pwm_order: &str,
) -> Result<Solution, Error> {
    let b = by_name(problem)?;
    let grid = TimeGrid::new(b.horizon(), dt)?;
    let mode = match mode {
        Some(m) => m.parse::<Mode>()?,
        None => b.default_mode(),
    };
    let cfg = SolverConfig { alpha, beta, eta, max_iters: iters, ..Default::default() };
    let log = run(&*b, RelaxedMixture::dirac(b.initial_control(grid)?), &cfg, mode)?;
    let projected_cost = match pwm_cycle_steps {
        Some(n) => {
            let pwm = PwmConfig::new(n)?.with_order(pwm_order.parse::<BlockOrder>()?);
            let u = project_pwm(&*b, &log.mu_final, &pwm)?;
            Some(pwm_fidelity_report(&*b, &log.mu_final, &u, &pwm)?.cost_projected)
        }
        None => None,
    };
    let (x, _) = simulate(&*b, &log.mu_final)?;
    Ok(Solution {
        problem: problem.to_string(),
        dt,
        iters: log.records.len(),
        initial_cost: log.initial_cost,
        final_cost: log.final_cost,
        projected_cost,
        costs: log.records.iter().map(|r| r.cost).collect(),
        thetas: log.records.iter().map(|r| r.theta).collect(),
        lambdas: log.records.iter().map(|r| r.lambda).collect(),
        final_state: x.final_state().iter().copied().collect(),
        atoms: log.mu_final.len(),
        termination: log.termination.to_string(),
    })
}

/// Names accepted by `solve` and `initial_cost`.
#[pyfunction]
fn benchmarks() -> Vec<&'static str> {
    NAMES.to_vec()
}

/// Cost of the benchmark's reference starting control.
#[pyfunction]
#[pyo3(signature = (problem, dt = 0.01))]
fn initial_cost(problem: &str, dt: f64) -> PyResult<f64> {
    let b = by_name(problem).map_err(to_py)?;
    let grid = TimeGrid::new(b.horizon(), dt).map_err(to_py)?;
    let u = b.initial_control(grid).map_err(to_py)?;
    Ok(simulate(&*b, &RelaxedMixture::dirac(u)).map_err(to_py)?.1)
}

#[pyfunction]
#[pyo3(signature = (problem, dt = 0.01, iters = 100, alpha = 0.3, beta = 0.5, eta = 0.9, mode = None, pwm_cycle_steps = None, pwm_order = "alternating"))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    problem: &str,
    dt: f64,
    iters: usize,
    alpha: f64,
    beta: f64,
    eta: f64,
    mode: Option<&str>,
    pwm_cycle_steps: Option<usize>,
    pwm_order: &str,
) -> PyResult<Solution> {
    py.detach(|| solve_problem(problem, dt, iters, alpha, beta, eta, mode, pwm_cycle_steps, pwm_order))
        .map_err(to_py)
}

/// `(name, passed, measured, tolerance)` for each consistency check.
#[pyfunction]
#[pyo3(signature = (problem, trials = 100, seed = 1))]
fn check(problem: &str, trials: usize, seed: u64) -> PyResult<Vec<(String, bool, f64, f64)>> {
    let b = by_name(problem).map_err(to_py)?;
    Ok(check_problem_consistency(&*b, trials, seed)
        .checks
        .into_iter()
        .map(|c| (c.name, c.passed, c.measured, c.tolerance))
        .collect())
}

#[pymodule]
fn relaxed_control_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(benchmarks, m)?)?;
    m.add_function(wrap_pyfunction!(initial_cost, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hybrid_run_through_the_binding_layer() {
        let s = solve_problem("hybrid-lqr", 0.01, 20, 0.3, 0.5, 0.9, Some("general"), Some(12), "alternating").unwrap();
        assert_eq!(s.initial_cost, 3.0);
        assert_eq!(s.costs.len(), 20);
        assert!(s.final_cost <= 5e-3 && s.projected_cost.unwrap() <= 6e-3);
    }

    #[test]
    fn bad_arguments_are_config_errors() {
        let e = solve_problem("x", 0.01, 1, 0.3, 0.5, 0.9, None, None, "alternating").unwrap_err();
        assert!(matches!(e, Error::UnknownProblem(_)));
        let e = solve_problem("double-tank", 0.01, 1, 0.3, 0.5, 0.9, None, Some(5), "random").unwrap_err();
        assert!(matches!(e, Error::InvalidConfig(_)));
    }
}
