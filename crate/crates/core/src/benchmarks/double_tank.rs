use nalgebra::{DMatrix, DVector};

use super::Benchmark;
use crate::controls::OrdinaryControl;
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::problem::{ControlHull, Problem, SamplingRegion};

/// Two stacked tanks draining by Torricelli's law; the inflow to the upper
/// tank switches between 1 and 2 and the lower level should track 3.
///
/// Levels are clamped at zero under the square roots, with zero slope at the
/// clamp.
#[derive(Debug, Clone)]
pub struct DoubleTank {
    hull: ControlHull,
}

const TARGET: f64 = 3.0;

impl DoubleTank {
    pub fn new() -> Self {
        Self {
            hull: ControlHull::finite_set(vec![1.0, 2.0]),
        }
    }

    /// `u* = 1` if `p₁ ≥ 0`, else `2`.
    pub fn minimizer(p: &DVector<f64>) -> f64 {
        if p[0] >= 0.0 {
            1.0
        } else {
            2.0
        }
    }
}

impl Default for DoubleTank {
    fn default() -> Self {
        Self::new()
    }
}

fn root(v: f64) -> f64 {
    v.max(0.0).sqrt()
}

fn root_slope(v: f64) -> f64 {
    if v > 0.0 {
        0.5 / v.sqrt()
    } else {
        0.0
    }
}

impl Problem for DoubleTank {
    fn name(&self) -> &str {
        "double-tank"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn initial_state(&self) -> DVector<f64> {
        DVector::from_vec(vec![2.0, 2.0])
    }

    fn horizon(&self) -> f64 {
        10.0
    }

    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let (r1, r2) = (root(x[0]), root(x[1]));
        DVector::from_vec(vec![u[0] - r1, r1 - r2])
    }

    fn dynamics_jac_x(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        let (s1, s2) = (root_slope(x[0]), root_slope(x[1]));
        DMatrix::from_row_slice(2, 2, &[-s1, 0.0, s1, -s2])
    }

    fn running_cost(&self, x: &DVector<f64>, _u: &DVector<f64>) -> f64 {
        2.0 * (x[1] - TARGET).powi(2)
    }

    fn running_cost_grad_x(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![0.0, 4.0 * (x[1] - TARGET)])
    }

    fn hamiltonian_minimizer(&self, _x: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, Self::minimizer(p))
    }

    fn control_hull(&self) -> &ControlHull {
        &self.hull
    }

    fn affine_in_u(&self) -> bool {
        true
    }

    fn convex_cost_in_u(&self) -> bool {
        true
    }

    fn sampling_region(&self) -> SamplingRegion {
        SamplingRegion {
            state_lower: DVector::from_element(2, 0.5),
            state_upper: DVector::from_element(2, 4.0),
            costate_scale: 10.0,
        }
    }
}

impl Benchmark for DoubleTank {
    fn initial_control(&self, grid: TimeGrid) -> Result<OrdinaryControl> {
        OrdinaryControl::constant(grid, DVector::from_element(1, 1.0))
    }
}
