//! Pulse-width-modulation projection of relaxed mixtures onto ordinary
//! `U`-valued controls.
//!
//! The grid is cut into cycles of `cycle_steps` cells (the trailing cycle may
//! be shorter). Within a cycle the mixture's occupation of each point of `U`
//! is averaged over the cycle's cells and converted into a contiguous block
//! of cells, blocks ordered by the index of the point in `U` (by default the
//! order is reversed on every other cycle). Block lengths come from rounding
//! the cumulative duty fractions, so they always add up to the cycle length
//! and the last block absorbs the rounding remainder.

use nalgebra::DVector;

use crate::controls::{OrdinaryControl, RelaxedMixture};
use crate::error::{Error, Result};
use crate::integrate::{evaluate_cost_ordinary, integrate_state_ordinary, simulate};
use crate::problem::{mode_index, ControlHull, Problem};

const HULL_TOL: f64 = 1e-9;

/// Layout of the duty blocks inside a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlockOrder {
    /// Ascending index of the point of `U` in every cycle.
    Ascending,
    /// Ascending on even cycles, descending on odd ones. Every block then
    /// sits early and late in the cycle equally often, which removes the
    /// first-order timing bias a fixed order causes on fast or unstable
    /// dynamics, and neighbouring cycles share their boundary block.
    #[default]
    Alternating,
}

impl std::str::FromStr for BlockOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ascending" => Ok(Self::Ascending),
            "alternating" => Ok(Self::Alternating),
            other => Err(Error::InvalidConfig(format!(
                "unknown block order '{other}' (expected ascending or alternating)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PwmConfig {
    /// Cycle length in grid cells.
    pub cycle_steps: usize,
    pub order: BlockOrder,
}

impl PwmConfig {
    pub fn new(cycle_steps: usize) -> Result<Self> {
        if cycle_steps == 0 {
            return Err(Error::InvalidConfig("PWM cycle must span at least one cell".into()));
        }
        Ok(Self {
            cycle_steps,
            order: BlockOrder::default(),
        })
    }

    pub fn with_order(mut self, order: BlockOrder) -> Self {
        self.order = order;
        self
    }

    /// Cycle given in seconds; must be a positive multiple of `dt` within `1e-9`.
    pub fn from_seconds(cycle: f64, dt: f64) -> Result<Self> {
        let steps = (cycle / dt).round();
        if !(steps >= 1.0) || ((steps * dt - cycle) / cycle).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "PWM cycle {cycle} is not a positive multiple of dt = {dt}"
            )));
        }
        Self::new(steps as usize)
    }

    fn cycles(&self, n_steps: usize) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..n_steps)
            .step_by(self.cycle_steps)
            .map(move |s| s..(s + self.cycle_steps).min(n_steps))
    }

    /// `(index, count)` blocks for cycle number `cycle`.
    fn layout(&self, counts: Vec<usize>, cycle: usize) -> Vec<(usize, usize)> {
        let mut blocks: Vec<(usize, usize)> = counts.into_iter().enumerate().collect();
        if self.order == BlockOrder::Alternating && cycle % 2 == 1 {
            blocks.reverse();
        }
        blocks
    }
}

/// Block lengths from duty fractions by rounding cumulative sums.
fn duty_counts(fractions: &[f64], len: usize) -> Vec<usize> {
    let total: f64 = fractions.iter().sum();
    let mut counts = Vec::with_capacity(fractions.len());
    let mut acc = 0.0;
    let mut prev = 0usize;
    for (i, f) in fractions.iter().enumerate() {
        acc += f;
        let boundary = if i + 1 == fractions.len() {
            len
        } else {
            ((acc / total * len as f64).round() as usize).clamp(prev, len)
        };
        counts.push(boundary - prev);
        prev = boundary;
    }
    counts
}

/// Splits a hull value of a 1-D finite set between its two neighbouring
/// points. Returns `(index, fraction)` pairs.
fn split_between(points: &[f64], v: f64) -> [(usize, f64); 2] {
    if points.len() == 1 {
        return [(0, 1.0), (0, 0.0)];
    }
    let hi = points
        .iter()
        .position(|&p| p >= v)
        .unwrap_or(points.len() - 1)
        .max(1);
    let (a, b) = (points[hi - 1], points[hi]);
    let t = ((v - a) / (b - a)).clamp(0.0, 1.0);
    [(hi - 1, 1.0 - t), (hi, t)]
}

/// Projects `mu` onto `U`-valued controls.
///
/// Box-shaped `U` is convex, so the mean control is returned directly (an
/// ordinary control is left untouched). Finite sets get one block per point;
/// mode-times-box sets get one block per mode. For the latter, with `c_i`
/// the amplitude mode `i` carries over the cycle, block lengths follow
/// `|c_i|` and each block's amplitude is `c_i` spread over its cells, so the
/// mode-weighted input of every cycle is reproduced up to clamping.
pub fn project_pwm<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    cfg: &PwmConfig,
) -> Result<OrdinaryControl> {
    let hull = problem.control_hull();
    for (i, atom) in mu.atoms().iter().enumerate() {
        if let Some(cell) = atom
            .control
            .values()
            .iter()
            .position(|v| !hull.contains(v, HULL_TOL))
        {
            return Err(Error::Infeasible { atom: i, cell });
        }
    }
    let grid = *mu.grid();
    let n = grid.n_steps();

    let values = match hull {
        ControlHull::Box { lower, upper } => {
            let mean = mu.mean_control();
            mean.values()
                .iter()
                .map(|v| DVector::from_fn(v.len(), |i, _| v[i].clamp(lower[i], upper[i])))
                .collect()
        }
        ControlHull::FiniteSet { points } => {
            let mut out = Vec::with_capacity(n);
            for (ci, cycle) in cfg.cycles(n).enumerate() {
                let len = cycle.len();
                let mut mass = vec![0.0; points.len()];
                for atom in mu.atoms() {
                    for k in cycle.clone() {
                        for (idx, frac) in split_between(points, atom.control.value(k)[0]) {
                            mass[idx] += atom.weight_at(k) * frac;
                        }
                    }
                }
                for (idx, count) in cfg.layout(duty_counts(&mass, len), ci) {
                    out.extend(std::iter::repeat_n(DVector::from_element(1, points[idx]), count));
                }
            }
            out
        }
        ControlHull::ModesTimesBox { modes, upper, lower } => {
            let mut out = Vec::with_capacity(n);
            for (ci, cycle) in cfg.cycles(n).enumerate() {
                let len = cycle.len();
                let mut mass = vec![0.0; *modes];
                let mut carried = vec![0.0; *modes];
                for atom in mu.atoms() {
                    for k in cycle.clone() {
                        let u = atom.control.value(k);
                        let mode = mode_index(u[0], *modes, HULL_TOL)
                            .expect("hull membership checked above");
                        mass[mode] += atom.weight_at(k);
                        carried[mode] += atom.weight_at(k) * u[1];
                    }
                }
                let magnitude: Vec<f64> = carried.iter().map(|c| c.abs() / len as f64).collect();
                let amplitude: f64 = magnitude.iter().sum();
                let fractions = if amplitude > 0.0 {
                    magnitude
                } else {
                    // no net input in this cycle: hold the dominant mode at zero
                    let top = (0..*modes)
                        .max_by(|&a, &b| mass[a].total_cmp(&mass[b]))
                        .unwrap_or(0);
                    (0..*modes).map(|m| if m == top { 1.0 } else { 0.0 }).collect()
                };
                for (mode, count) in cfg.layout(duty_counts(&fractions, len), ci) {
                    let v = if amplitude > 0.0 && count > 0 {
                        carried[mode] / count as f64
                    } else {
                        0.0
                    }
                    .clamp(*lower, *upper);
                    out.extend(std::iter::repeat_n(
                        DVector::from_vec(vec![(mode + 1) as f64, v]),
                        count,
                    ));
                }
            }
            out
        }
    };
    OrdinaryControl::new(grid, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwmReport {
    /// Largest per-cycle, per-coordinate gap between the cycle averages of
    /// the projected control and of the mean control. Only reported for
    /// problems affine in `u`.
    pub max_cycle_deviation: Option<f64>,
    pub cost_relaxed: f64,
    pub cost_projected: f64,
    /// `J(u_proj) − J(μ)`.
    pub delta_cost: f64,
}

pub fn pwm_fidelity_report<P: Problem + ?Sized>(
    problem: &P,
    mu: &RelaxedMixture,
    u_proj: &OrdinaryControl,
    cfg: &PwmConfig,
) -> Result<PwmReport> {
    if !u_proj.grid().same_as(mu.grid()) {
        return Err(Error::GridMismatch);
    }
    let (_, cost_relaxed) = simulate(problem, mu)?;
    let x = integrate_state_ordinary(problem, u_proj, &problem.initial_state())?;
    let cost_projected = evaluate_cost_ordinary(problem, u_proj, &x);

    let max_cycle_deviation = problem.affine_in_u().then(|| {
        let mean = mu.mean_control();
        let n = mu.grid().n_steps();
        let m = mu.control_dim();
        cfg.cycles(n)
            .map(|cycle| {
                let len = cycle.len() as f64;
                let avg = |u: &OrdinaryControl| {
                    cycle
                        .clone()
                        .fold(DVector::zeros(m), |acc, k| acc + u.value(k))
                        / len
                };
                (avg(u_proj) - avg(&mean)).amax()
            })
            .fold(0.0, f64::max)
    });

    Ok(PwmReport {
        max_cycle_deviation,
        cost_relaxed,
        cost_projected,
        delta_cost: cost_projected - cost_relaxed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_sum_to_cycle() {
        assert_eq!(duty_counts(&[0.5, 0.5], 50), vec![25, 25]);
        assert_eq!(duty_counts(&[1.0, 0.0], 12), vec![12, 0]);
        assert_eq!(duty_counts(&[0.0, 0.0, 1.0], 12), vec![0, 0, 12]);
        let c = duty_counts(&[0.33, 0.33, 0.34], 7);
        assert_eq!(c.iter().sum::<usize>(), 7);
    }

    #[test]
    fn split_interpolates_neighbours() {
        let pts = [1.0, 2.0];
        assert_eq!(split_between(&pts, 1.5), [(0, 0.5), (1, 0.5)]);
        assert_eq!(split_between(&pts, 1.0), [(0, 1.0), (1, 0.0)]);
        assert_eq!(split_between(&pts, 2.0), [(0, 0.0), (1, 1.0)]);
        let pts = [0.0, 1.0, 3.0];
        assert_eq!(split_between(&pts, 2.0), [(1, 0.5), (2, 0.5)]);
    }

    #[test]
    fn cycle_config() {
        assert_eq!(PwmConfig::from_seconds(0.5, 0.01).unwrap().cycle_steps, 50);
        assert_eq!(PwmConfig::from_seconds(0.5, 0.1).unwrap().cycle_steps, 5);
        assert!(PwmConfig::from_seconds(0.025, 0.01).is_err());
        assert!(PwmConfig::new(0).is_err());
    }

    #[test]
    fn alternating_layout_reverses_odd_cycles() {
        let cfg = PwmConfig::new(4).unwrap();
        assert_eq!(cfg.layout(vec![1, 3], 0), vec![(0, 1), (1, 3)]);
        assert_eq!(cfg.layout(vec![1, 3], 1), vec![(1, 3), (0, 1)]);
        let fixed = cfg.with_order(BlockOrder::Ascending);
        assert_eq!(fixed.layout(vec![1, 3], 1), vec![(0, 1), (1, 3)]);
        assert_eq!("alternating".parse::<BlockOrder>().unwrap(), BlockOrder::Alternating);
        assert!("random".parse::<BlockOrder>().is_err());
    }
}
