//! Descent in the space of relaxed controls driven by pointwise minimization
//! of the Hamiltonian.
//!
//! A control is a finite convex mixture of piecewise-constant ordinary
//! controls on a uniform grid. Each iteration integrates the state forward
//! and the costate backward, takes the pointwise Hamiltonian minimizer as the
//! search direction, and moves part of the way towards it with an Armijo
//! step. Results can be projected back onto ordinary, set-valued controls by
//! pulse-width modulation.

pub mod benchmarks;
pub mod controls;
pub mod error;
pub mod grid;
pub mod integrate;
pub mod io;
pub mod problem;
pub mod pwm;
pub mod solver;

pub use controls::{
    collapse_onto_modes, convex_combine_controls, convex_combine_measures, prune_and_merge, Atom,
    OrdinaryControl, RelaxedMixture, Weight, DEFAULT_WEIGHT_FLOOR,
};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use integrate::{
    evaluate_cost, evaluate_cost_ordinary, integrate_costate_backward, integrate_state_forward,
    integrate_state_ordinary, CostateTrajectory, StateTrajectory,
};
pub use problem::{
    check_problem_consistency, hamiltonian, relaxed_hamiltonian, ConsistencyReport, ControlHull,
    Problem,
};
pub use pwm::{project_pwm, pwm_fidelity_report, BlockOrder, PwmConfig, PwmReport};
pub use solver::{
    armijo_accepts, armijo_step, directional_derivative_check, hamiltonian_gap, iterate, optimality_theta, run,
    step_candidate, ArmijoStep, Iteration, IterationRecord, Mode, RunLog, SolverConfig, Termination,
};
