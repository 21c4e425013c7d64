use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::Benchmark;
use crate::controls::OrdinaryControl;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrate::{CostateTrajectory, StateTrajectory};
use crate::problem::{ControlHull, Problem, SamplingRegion};

#[derive(Debug, Clone, PartialEq)]
pub struct MobileNetworkParams {
    /// Segment length; agents relay between anchors at `0` and `d`.
    pub d: f64,
    /// Motion-energy weight.
    pub c: f64,
    /// Speed bound.
    pub u_bar: f64,
    pub t_f: f64,
    pub x0: Vec<f64>,
}

impl Default for MobileNetworkParams {
    fn default() -> Self {
        Self {
            d: 20.0,
            c: 7.0,
            u_bar: 1.0,
            t_f: 20.0,
            x0: vec![1.0, 2.0, 7.0, 9.0, 12.0, 19.0],
        }
    }
}

/// `N` relay agents on a line with `ẋ = u`, trading transmission energy
/// (squared gaps, including the anchors) against fuel (`C |u_i|`).
///
/// Positions are not confined to `[0, d]` during integration.
#[derive(Debug, Clone)]
pub struct MobileNetwork {
    params: MobileNetworkParams,
    hull: ControlHull,
}

impl MobileNetwork {
    pub fn new(params: MobileNetworkParams) -> Result<Self> {
        let n = params.x0.len();
        if n == 0 {
            return Err(Error::InvalidConfig("mobile network needs at least one agent".into()));
        }
        for (name, v) in [("d", params.d), ("C", params.c), ("u_bar", params.u_bar), ("t_f", params.t_f)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("mobile network {name} must be positive")));
            }
        }
        let hull = ControlHull::Box {
            lower: DVector::from_element(n, -params.u_bar),
            upper: DVector::from_element(n, params.u_bar),
        };
        Ok(Self { params, hull })
    }

    pub fn params(&self) -> &MobileNetworkParams {
        &self.params
    }

    pub fn agents(&self) -> usize {
        self.params.x0.len()
    }

    /// Position of agent `i` in `0..=N+1`, with the anchors at both ends.
    fn position(&self, x: &DVector<f64>, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else if i == self.agents() + 1 {
            self.params.d
        } else {
            x[i - 1]
        }
    }

    /// `ṗ_i = 2 (x_{i-1} + x_{i+1} - 2 x_i)`.
    pub fn costate_rate(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.agents(), |r, _| {
            let i = r + 1;
            2.0 * (self.position(x, i - 1) + self.position(x, i + 1) - 2.0 * self.position(x, i))
        })
    }

    /// Costate from the hand-derived adjoint equation, on the same backward
    /// Euler scheme as the generic sweep.
    pub fn costate_closed_form(&self, x: &StateTrajectory) -> CostateTrajectory {
        let n = x.grid.n_steps();
        let dt = x.grid.dt();
        let mut values = vec![DVector::zeros(self.agents()); n + 1];
        for k in (0..n).rev() {
            values[k] = &values[k + 1] - self.costate_rate(&x.values[k + 1]) * dt;
        }
        CostateTrajectory {
            grid: x.grid,
            values,
        }
    }
}

impl Problem for MobileNetwork {
    fn name(&self) -> &str {
        "mobile-network"
    }

    fn state_dim(&self) -> usize {
        self.agents()
    }

    fn initial_state(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.params.x0)
    }

    fn horizon(&self) -> f64 {
        self.params.t_f
    }

    fn dynamics(&self, _x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        u.clone()
    }

    fn dynamics_jac_x(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.agents(), self.agents())
    }

    fn running_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let gaps: f64 = (1..=self.agents() + 1)
            .map(|i| (self.position(x, i) - self.position(x, i - 1)).powi(2))
            .sum();
        gaps + self.params.c * u.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn running_cost_grad_x(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        -self.costate_rate(x)
    }

    /// Coordinate-wise `-sgn(p_i) ū` when `|p_i| > C`, otherwise `0`.
    fn hamiltonian_minimizer(&self, _x: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        p.map(|pi| {
            if pi.abs() > self.params.c {
                -pi.signum() * self.params.u_bar
            } else {
                0.0
            }
        })
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
        let n = self.agents();
        SamplingRegion {
            state_lower: DVector::zeros(n),
            state_upper: DVector::from_element(n, self.params.d),
            costate_scale: 2.0 * self.params.c,
        }
    }
}

impl Benchmark for MobileNetwork {
    /// `u₁ = 1`, `u₂ = sin(πt/4)`, `u₃ = 3u₂`, `u₄ = 2u₃`, `u₅ = 2u₄`,
    /// `u₆ = u₅ − 4.3`. Violates the speed bound, so it is flagged
    /// `allow_infeasible`. Other agent counts fall back to a zero control.
    fn initial_control(&self, grid: TimeGrid) -> Result<OrdinaryControl> {
        let n = self.agents();
        let u = OrdinaryControl::from_fn(grid, |t| {
            if n != 6 {
                return DVector::zeros(n);
            }
            let u2 = (PI * t / 4.0).sin();
            let u3 = 3.0 * u2;
            let u4 = 2.0 * u3;
            let u5 = 2.0 * u4;
            DVector::from_vec(vec![1.0, u2, u3, u4, u5, u5 - 4.3])
        })?;
        Ok(u.allowing_infeasible(true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> MobileNetwork {
        MobileNetwork::new(MobileNetworkParams::default()).unwrap()
    }

    #[test]
    fn minimizer_branches() {
        let m = net();
        let x = DVector::zeros(6);
        let p = DVector::from_vec(vec![10.0, -3.0, 7.0, -7.0, -7.5, 0.0]);
        let u = m.hamiltonian_minimizer(&x, &p);
        assert_eq!(u.as_slice(), &[-1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn initial_control_samples() {
        let m = net();
        let grid = TimeGrid::new(20.0, 0.01).unwrap();
        let u = m.initial_control(grid).unwrap();
        assert!(u.allow_infeasible());
        assert_eq!(u.value(0).as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, -4.3]);
        let at2 = u.value(200);
        let expected = [1.0, 1.0, 3.0, 6.0, 12.0, 7.7];
        for (a, e) in at2.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = MobileNetworkParams::default();
        p.c = 0.0;
        assert!(MobileNetwork::new(p).is_err());
        let p = MobileNetworkParams {
            x0: vec![],
            ..Default::default()
        };
        assert!(MobileNetwork::new(p).is_err());
    }
}
