//! Benchmark problem instances with closed-form Hamiltonian minimizers.

mod double_tank;
mod hybrid_lqr;
mod mobile_network;

pub use double_tank::DoubleTank;
pub use hybrid_lqr::HybridLqr;
pub use mobile_network::{MobileNetwork, MobileNetworkParams};

use crate::controls::OrdinaryControl;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problem::Problem;
use crate::solver::Mode;

/// A problem shipped with a reference starting control.
pub trait Benchmark: Problem {
    fn initial_control(&self, grid: TimeGrid) -> Result<OrdinaryControl>;

    /// Convexified iterations when the problem allows them.
    fn default_mode(&self) -> Mode {
        if self.affine_in_u() && self.convex_cost_in_u() {
            Mode::Convexified
        } else {
            Mode::General
        }
    }
}

pub const NAMES: [&str; 3] = ["double-tank", "hybrid-lqr", "mobile-network"];

/// Looks a benchmark up by its command-line name, with default parameters.
pub fn by_name(name: &str) -> Result<Box<dyn Benchmark>> {
    match name {
        "double-tank" => Ok(Box::new(DoubleTank::new())),
        "hybrid-lqr" => Ok(Box::new(HybridLqr::new())),
        "mobile-network" => Ok(Box::new(MobileNetwork::new(MobileNetworkParams::default())?)),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}
