//! The capabilities every optimal-control problem provides, and the
//! Hamiltonian built from them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controls::Atom;

/// Description of `conv(U)` together with the set `U` itself.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlHull {
    /// `U = [lower, upper]` componentwise; already convex.
    Box {
        lower: DVector<f64>,
        upper: DVector<f64>,
    },
    /// A finite set of scalar points, stored in ascending order. The hull is
    /// the interval between the smallest and largest point.
    FiniteSet { points: Vec<f64> },
    /// `U = {1, .., modes} x [lower, upper]`. A control value is the pair
    /// `(mode number, amplitude)` stored as a two-vector.
    ModesTimesBox {
        modes: usize,
        lower: f64,
        upper: f64,
    },
}

impl ControlHull {
    pub fn finite_set(mut points: Vec<f64>) -> Self {
        points.sort_by(|a, b| a.total_cmp(b));
        points.dedup();
        ControlHull::FiniteSet { points }
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlHull::Box { lower, .. } => lower.len(),
            ControlHull::FiniteSet { .. } => 1,
            ControlHull::ModesTimesBox { .. } => 2,
        }
    }

    /// Whether `u` lies in `conv(U)` to within `tol`.
    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        if u.len() != self.dim() || u.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ControlHull::Box { lower, upper } => (0..u.len())
                .all(|i| u[i] >= lower[i] - tol && u[i] <= upper[i] + tol),
            ControlHull::FiniteSet { points } => {
                u[0] >= points[0] - tol && u[0] <= points[points.len() - 1] + tol
            }
            ControlHull::ModesTimesBox {
                modes,
                lower,
                upper,
            } => {
                mode_index(u[0], *modes, tol).is_some() && u[1] >= lower - tol && u[1] <= upper + tol
            }
        }
    }

    /// Whether `u` is a point of `U` itself to within `tol`.
    pub fn is_member(&self, u: &DVector<f64>, tol: f64) -> bool {
        match self {
            ControlHull::FiniteSet { points } => {
                u.len() == 1 && points.iter().any(|p| (u[0] - p).abs() <= tol)
            }
            _ => self.contains(u, tol),
        }
    }

    /// Uniform random point of `U`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            ControlHull::Box { lower, upper } => {
                DVector::from_fn(lower.len(), |i, _| rng.random_range(lower[i]..=upper[i]))
            }
            ControlHull::FiniteSet { points } => {
                DVector::from_element(1, points[rng.random_range(0..points.len())])
            }
            ControlHull::ModesTimesBox {
                modes,
                lower,
                upper,
            } => DVector::from_vec(vec![
                rng.random_range(1..=*modes) as f64,
                rng.random_range(*lower..=*upper),
            ]),
        }
    }

    /// Candidate set for brute-force minimization over `U`: every point of a
    /// finite set, a 401-point amplitude grid per mode, or a per-coordinate
    /// odd grid (containing the box midpoint and vertices) for boxes.
    pub fn oracle_candidates(&self) -> Vec<DVector<f64>> {
        match self {
            ControlHull::FiniteSet { points } => points
                .iter()
                .map(|&p| DVector::from_element(1, p))
                .collect(),
            ControlHull::ModesTimesBox {
                modes,
                lower,
                upper,
            } => {
                let grid = linspace(*lower, *upper, 401);
                (0..*modes)
                    .flat_map(|m| {
                        grid.iter()
                            .map(move |&v| DVector::from_vec(vec![(m + 1) as f64, v]))
                    })
                    .collect()
            }
            ControlHull::Box { lower, upper } => {
                let d = lower.len() as i32;
                let mut per = 3usize;
                while per < 401 && ((per + 2) as f64).powi(d) <= 20_000.0 {
                    per += 2;
                }
                let axes: Vec<Vec<f64>> = (0..lower.len())
                    .map(|i| linspace(lower[i], upper[i], per))
                    .collect();
                let mut out = vec![DVector::zeros(lower.len())];
                for (i, axis) in axes.iter().enumerate() {
                    out = out
                        .into_iter()
                        .flat_map(|base| {
                            axis.iter().map(move |&v| {
                                let mut c = base.clone();
                                c[i] = v;
                                c
                            })
                        })
                        .collect();
                }
                out
            }
        }
    }
}

/// Zero-based slot of the mode number `1..=modes` held in the first control
/// coordinate.
pub(crate) fn mode_index(value: f64, modes: usize, tol: f64) -> Option<usize> {
    let r = value.round();
    if (value - r).abs() <= tol && r >= 1.0 && (r as usize) <= modes {
        Some(r as usize - 1)
    } else {
        None
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Region from which consistency checks draw random states and costates.
#[derive(Debug, Clone)]
pub struct SamplingRegion {
    pub state_lower: DVector<f64>,
    pub state_upper: DVector<f64>,
    pub costate_scale: f64,
}

/// An optimal-control problem
///
/// ```text
/// minimize  ∫ L(x, u) dt + φ(x(t_f))   subject to  ẋ = f(x, u),  x(0) = x0,  u ∈ U
/// ```
///
/// with a closed-form pointwise minimizer of the Hamiltonian
/// `H(x, u, p) = pᵀ f(x, u) + L(x, u)`. Implementations must be immutable and
/// reentrant.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn state_dim(&self) -> usize;

    fn control_dim(&self) -> usize {
        self.control_hull().dim()
    }

    fn initial_state(&self) -> DVector<f64>;

    fn horizon(&self) -> f64;

    fn dynamics(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    fn dynamics_jac_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;

    fn running_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64;

    fn running_cost_grad_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    fn terminal_cost(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }

    fn terminal_cost_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(x.len())
    }

    /// A point of `U` (not merely of the hull) minimizing `H(x, ·, p)`.
    fn hamiltonian_minimizer(&self, x: &DVector<f64>, p: &DVector<f64>) -> DVector<f64>;

    fn control_hull(&self) -> &ControlHull;

    /// `f` is affine in `u`, so a mixture may be replaced by its mean
    /// control when integrating the state.
    fn affine_in_u(&self) -> bool;

    /// `L` is convex in `u`.
    fn convex_cost_in_u(&self) -> bool;

    /// For mode-times-box control sets: `f(x, (i, v)) = f_0(x) + b_i(x) v`
    /// and `L(x, (i, v)) = L_0(x) + g(|v|)` with `g` convex, increasing and
    /// shared by all modes. Mixtures may then be collapsed onto one atom per
    /// mode without changing the state or raising the cost.
    fn collapsible_onto_modes(&self) -> bool {
        false
    }

    fn sampling_region(&self) -> SamplingRegion {
        let x0 = self.initial_state();
        SamplingRegion {
            state_lower: x0.add_scalar(-1.0),
            state_upper: x0.add_scalar(1.0),
            costate_scale: 10.0,
        }
    }
}

/// `pᵀ f(x, u) + L(x, u)`.
pub fn hamiltonian<P: Problem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    u: &DVector<f64>,
    p: &DVector<f64>,
) -> f64 {
    p.dot(&problem.dynamics(x, u)) + problem.running_cost(x, u)
}

/// Hamiltonian of a finite mixture: `Σ w_i H(x, u_i, p)`.
pub fn relaxed_hamiltonian<'a, P, I>(problem: &P, x: &DVector<f64>, mixture: I, p: &DVector<f64>) -> f64
where
    P: Problem + ?Sized,
    I: IntoIterator<Item = (f64, &'a DVector<f64>)>,
{
    mixture
        .into_iter()
        .map(|(w, u)| w * hamiltonian(problem, x, u, p))
        .sum()
}

/// Mixture-slice helper for one grid cell of a set of atoms.
pub(crate) fn atoms_at(atoms: &[Atom], cell: usize) -> impl Iterator<Item = (f64, &DVector<f64>)> {
    atoms.iter().map(move |a| (a.weight_at(cell), a.control.value(cell)))
}

/// Outcome of a single consistency check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed error for the check.
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ConsistencyReport {
    pub checks: Vec<CheckResult>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, measured: f64, tolerance: f64) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
        });
    }
}

const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-4;
const MINIMIZER_TOL: f64 = 1e-8;
const AFFINE_TOL: f64 = 1e-10;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn central_diff<F: Fn(&DVector<f64>) -> DVector<f64>>(
    g: F,
    x: &DVector<f64>,
    i: usize,
) -> DVector<f64> {
    let mut xp = x.clone();
    let mut xm = x.clone();
    xp[i] += FD_STEP;
    xm[i] -= FD_STEP;
    (g(&xp) - g(&xm)) / (2.0 * FD_STEP)
}

/// Validates a problem's analytic derivatives and Hamiltonian minimizer on
/// `trials` random `(x, u, p)` samples. Never aborts; every violated check is
/// listed in the report.
pub fn check_problem_consistency<P: Problem + ?Sized>(
    problem: &P,
    trials: usize,
    seed: u64,
) -> ConsistencyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region = problem.sampling_region();
    let hull = problem.control_hull();
    let candidates = hull.oracle_candidates();
    let n = problem.state_dim();

    let mut jac_err = 0.0f64;
    let mut grad_err = 0.0f64;
    let mut term_err = 0.0f64;
    let mut min_gap = f64::NEG_INFINITY;
    let mut off_set = 0.0f64;
    let mut affine_err = 0.0f64;

    for _ in 0..trials {
        let x = DVector::from_fn(n, |i, _| {
            rng.random_range(region.state_lower[i]..=region.state_upper[i])
        });
        let p = DVector::from_fn(n, |_, _| {
            rng.random_range(-region.costate_scale..=region.costate_scale)
        });
        let u = hull.sample(&mut rng);

        let jac = problem.dynamics_jac_x(&x, &u);
        let grad = problem.running_cost_grad_x(&x, &u);
        let tgrad = problem.terminal_cost_grad(&x);
        for i in 0..n {
            let col = central_diff(|y| problem.dynamics(y, &u), &x, i);
            for r in 0..n {
                jac_err = jac_err.max(rel_err(jac[(r, i)], col[r]));
            }
            let g = central_diff(|y| DVector::from_element(1, problem.running_cost(y, &u)), &x, i);
            grad_err = grad_err.max(rel_err(grad[i], g[0]));
            let g = central_diff(|y| DVector::from_element(1, problem.terminal_cost(y)), &x, i);
            term_err = term_err.max(rel_err(tgrad[i], g[0]));
        }

        let u_star = problem.hamiltonian_minimizer(&x, &p);
        if !hull.is_member(&u_star, 1e-12) {
            off_set = 1.0;
        }
        let h_star = hamiltonian(problem, &x, &u_star, &p);
        let h_brute = candidates
            .iter()
            .map(|c| hamiltonian(problem, &x, c, &p))
            .fold(f64::INFINITY, f64::min);
        min_gap = min_gap.max(h_star - h_brute);

        if problem.affine_in_u() {
            let atoms: Vec<(f64, DVector<f64>)> = {
                let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|w| (w / s, hull.sample(&mut rng))).collect()
            };
            let mean = atoms
                .iter()
                .fold(DVector::zeros(hull.dim()), |acc, (w, u)| acc + u * *w);
            let mixed = atoms
                .iter()
                .fold(DVector::zeros(n), |acc, (w, u)| acc + problem.dynamics(&x, u) * *w);
            let direct = problem.dynamics(&x, &mean);
            affine_err = affine_err.max((direct - mixed).amax());
        }
    }

    let mut report = ConsistencyReport::default();
    report.push("dynamics_jac_x vs central differences", jac_err, FD_TOL);
    report.push("running_cost_grad_x vs central differences", grad_err, FD_TOL);
    report.push("terminal_cost_grad vs central differences", term_err, FD_TOL);
    report.push("minimizer returns a point of U", off_set, 0.0);
    report.push(
        "minimizer vs brute-force minimum over U",
        min_gap.max(0.0),
        MINIMIZER_TOL,
    );
    if problem.affine_in_u() {
        report.push("dynamics affine in u", affine_err, AFFINE_TOL);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_membership() {
        let fs = ControlHull::finite_set(vec![2.0, 1.0]);
        let v = |x: f64| DVector::from_element(1, x);
        assert!(fs.contains(&v(1.5), 0.0));
        assert!(!fs.is_member(&v(1.5), 1e-12));
        assert!(fs.is_member(&v(2.0), 0.0));
        assert!(!fs.contains(&v(2.1), 1e-9));

        let mb = ControlHull::ModesTimesBox {
            modes: 3,
            lower: -20.0,
            upper: 20.0,
        };
        assert!(mb.contains(&DVector::from_vec(vec![3.0, -20.0]), 0.0));
        assert!(!mb.contains(&DVector::from_vec(vec![4.0, 0.0]), 1e-9));
        assert!(!mb.contains(&DVector::from_vec(vec![0.0, 0.0]), 1e-9));
        assert!(!mb.contains(&DVector::from_vec(vec![1.5, 0.0]), 1e-9));
    }

    #[test]
    fn oracle_grids() {
        let mb = ControlHull::ModesTimesBox {
            modes: 3,
            lower: -20.0,
            upper: 20.0,
        };
        assert_eq!(mb.oracle_candidates().len(), 3 * 401);

        let b = ControlHull::Box {
            lower: DVector::from_element(6, -1.0),
            upper: DVector::from_element(6, 1.0),
        };
        let c = b.oracle_candidates();
        // odd axis grids keep the vertices and the origin
        assert!(c.iter().any(|u| u.iter().all(|&v| v == 0.0)));
        assert!(c.iter().any(|u| u.iter().all(|&v| v == -1.0)));
        assert!(c.len() <= 20_000);
    }
}
