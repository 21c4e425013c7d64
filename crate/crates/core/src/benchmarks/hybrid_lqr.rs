use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::Benchmark;
use crate::controls::OrdinaryControl;
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::problem::{ControlHull, Problem, SamplingRegion};

/// Switched linear system `ẋ = A x + b v` with `b` drawn from three fixed
/// directions and `|v| ≤ 20`, penalizing input energy and the distance of the
/// final state from `(1, 1, 1)`.
///
/// Control values are `(mode, v)` with the mode number `1..=3` stored as a
/// float. Methods taking a `mode` argument use the zero-based slot.
#[derive(Debug, Clone)]
pub struct HybridLqr {
    a: Matrix3<f64>,
    b: [Vector3<f64>; 3],
    hull: ControlHull,
}

const V_MAX: f64 = 20.0;
const ENERGY_WEIGHT: f64 = 0.01;

impl HybridLqr {
    pub fn new() -> Self {
        #[rustfmt::skip]
        let a = Matrix3::new(
            1.0979, -0.0105, 0.0167,
            -0.0105, 1.0481, 0.0825,
            0.0167, 0.0825, 1.1540,
        );
        Self {
            a,
            b: [
                Vector3::new(0.9801, -0.1987, 0.0),
                Vector3::new(0.1743, 0.8601, -0.4794),
                Vector3::new(0.0952, 0.4699, 0.8776),
            ],
            hull: ControlHull::ModesTimesBox {
                modes: 3,
                lower: -V_MAX,
                upper: V_MAX,
            },
        }
    }

    pub fn a(&self) -> &Matrix3<f64> {
        &self.a
    }

    pub fn direction(&self, mode: usize) -> &Vector3<f64> {
        &self.b[mode]
    }

    pub fn target() -> DVector<f64> {
        DVector::from_element(3, 1.0)
    }

    fn mode(u: &DVector<f64>) -> usize {
        (u[0].round().max(1.0) as usize).min(3) - 1
    }

    /// Per-mode optimal amplitude: `-pᵀb/0.02` saturated at `±20`.
    pub fn mode_amplitude(&self, mode: usize, p: &DVector<f64>) -> f64 {
        let pb: f64 = (0..3).map(|i| p[i] * self.b[mode][i]).sum();
        let q = pb / (2.0 * ENERGY_WEIGHT);
        if q > V_MAX {
            -V_MAX
        } else if q < -V_MAX {
            V_MAX
        } else {
            -q
        }
    }

    /// The `u`-dependent part of the Hamiltonian, `pᵀ b v + 0.01 v²`.
    pub fn control_contribution(&self, mode: usize, v: f64, p: &DVector<f64>) -> f64 {
        let pb: f64 = (0..3).map(|i| p[i] * self.b[mode][i]).sum();
        pb * v + ENERGY_WEIGHT * v * v
    }
}

impl Default for HybridLqr {
    fn default() -> Self {
        Self::new()
    }
}

impl Problem for HybridLqr {
    fn name(&self) -> &str {
        "hybrid-lqr"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn initial_state(&self) -> DVector<f64> {
        DVector::zeros(3)
    }

    fn horizon(&self) -> f64 {
        2.0
    }

    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let x3 = Vector3::new(x[0], x[1], x[2]);
        let r = self.a * x3 + self.b[Self::mode(u)] * u[1];
        DVector::from_column_slice(r.as_slice())
    }

    fn dynamics_jac_x(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| self.a[(i, j)])
    }

    fn running_cost(&self, _x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        ENERGY_WEIGHT * u[1] * u[1]
    }

    fn running_cost_grad_x(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(3)
    }

    fn terminal_cost(&self, x: &DVector<f64>) -> f64 {
        (x - Self::target()).norm_squared()
    }

    fn terminal_cost_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - Self::target()) * 2.0
    }

    /// Best saturated amplitude per mode, then the mode with the smallest
    /// Hamiltonian; ties go to the lowest mode.
    fn hamiltonian_minimizer(&self, _x: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        let mut best = (0usize, 0.0f64, f64::INFINITY);
        for mode in 0..3 {
            let v = self.mode_amplitude(mode, p);
            let h = self.control_contribution(mode, v, p);
            if h < best.2 {
                best = (mode, v, h);
            }
        }
        DVector::from_vec(vec![(best.0 + 1) as f64, best.1])
    }

    fn control_hull(&self) -> &ControlHull {
        &self.hull
    }

    fn affine_in_u(&self) -> bool {
        false
    }

    fn convex_cost_in_u(&self) -> bool {
        true
    }

    fn collapsible_onto_modes(&self) -> bool {
        true
    }

    fn sampling_region(&self) -> SamplingRegion {
        SamplingRegion {
            state_lower: DVector::from_element(3, -2.0),
            state_upper: DVector::from_element(3, 2.0),
            costate_scale: 2.0,
        }
    }
}

impl Benchmark for HybridLqr {
    fn initial_control(&self, grid: TimeGrid) -> Result<OrdinaryControl> {
        OrdinaryControl::constant(grid, DVector::from_vec(vec![1.0, 0.0]))
    }
}
