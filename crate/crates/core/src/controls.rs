//! Ordinary controls and finite relaxed mixtures of them.

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problem::ControlHull;

/// Weight below which mixture atoms are dropped after each update.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-9;

const WEIGHT_SUM_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-12;

/// Piecewise-constant control: `values[k]` is held on `[t_k, t_{k+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinaryControl {
    grid: TimeGrid,
    values: Vec<DVector<f64>>,
    allow_infeasible: bool,
}

impl OrdinaryControl {
    pub fn new(grid: TimeGrid, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != grid.n_steps() {
            return Err(Error::DimensionMismatch {
                what: "control samples",
                expected: grid.n_steps(),
                found: values.len(),
            });
        }
        let m = values[0].len();
        for v in &values {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "control vector",
                    expected: m,
                    found: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidMixture("non-finite control value".into()));
            }
        }
        Ok(Self {
            grid,
            values,
            allow_infeasible: false,
        })
    }

    pub fn constant(grid: TimeGrid, value: DVector<f64>) -> Result<Self> {
        Self::new(grid, vec![value; grid.n_steps()])
    }

    /// Zero-order hold of `f` sampled at the left end of each cell.
    pub fn from_fn<F: FnMut(f64) -> DVector<f64>>(grid: TimeGrid, mut f: F) -> Result<Self> {
        Self::new(grid, (0..grid.n_steps()).map(|k| f(grid.instant(k))).collect())
    }

    /// Marks the control as exempt from hull-membership checks.
    pub fn allowing_infeasible(mut self, allow: bool) -> Self {
        self.allow_infeasible = allow;
        self
    }

    pub fn allow_infeasible(&self) -> bool {
        self.allow_infeasible
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, cell: usize) -> &DVector<f64> {
        &self.values[cell]
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Errors on the first cell whose value leaves `conv(U)` by more than
    /// `1e-9`, unless the control is flagged `allow_infeasible`.
    pub fn check_feasible(&self, hull: &ControlHull) -> Result<()> {
        if self.allow_infeasible {
            return Ok(());
        }
        match self.values.iter().position(|v| !hull.contains(v, 1e-9)) {
            Some(cell) => Err(Error::Infeasible { atom: 0, cell }),
            None => Ok(()),
        }
    }

    fn pointwise_eq(&self, other: &OrdinaryControl, tol: f64) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| (a - b).amax() <= tol)
    }
}

/// Mixture weight of one atom: a scalar, or one value per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    Constant(f64),
    PerCell(Arc<[f64]>),
}

impl Weight {
    #[inline]
    pub fn at(&self, cell: usize) -> f64 {
        match self {
            Weight::Constant(w) => *w,
            Weight::PerCell(w) => w[cell],
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Weight::Constant(w) => *w,
            Weight::PerCell(w) => w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// The scalar weight, if the weight does not vary in time.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Weight::Constant(w) => Some(*w),
            Weight::PerCell(_) => None,
        }
    }

    fn scaled(&self, s: f64) -> Weight {
        match self {
            Weight::Constant(w) => Weight::Constant(w * s),
            Weight::PerCell(w) => Weight::PerCell(w.iter().map(|v| v * s).collect()),
        }
    }

    fn plus(&self, other: &Weight, n: usize) -> Weight {
        match (self, other) {
            (Weight::Constant(a), Weight::Constant(b)) => Weight::Constant(a + b),
            _ => Weight::PerCell((0..n).map(|k| self.at(k) + other.at(k)).collect()),
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            Weight::Constant(w) => w.is_finite() && *w >= 0.0,
            Weight::PerCell(w) => w.iter().all(|v| v.is_finite() && *v >= 0.0),
        }
    }
}

impl From<f64> for Weight {
    fn from(w: f64) -> Self {
        Weight::Constant(w)
    }
}

/// One weighted component of a mixture.
#[derive(Debug, Clone)]
pub struct Atom {
    pub weight: Weight,
    pub control: Arc<OrdinaryControl>,
}

impl Atom {
    pub fn new(weight: impl Into<Weight>, control: OrdinaryControl) -> Self {
        Self {
            weight: weight.into(),
            control: Arc::new(control),
        }
    }

    #[inline]
    pub fn weight_at(&self, cell: usize) -> f64 {
        self.weight.at(cell)
    }
}

/// Finite convex combination `Σ w_i(t) δ_{u_i(t)}`. Weights are usually
/// scalars; per-cell weights arise from collapsing onto modes.
#[derive(Debug, Clone)]
pub struct RelaxedMixture {
    atoms: Vec<Atom>,
}

impl RelaxedMixture {
    /// Weights must be non-negative and sum to one within `1e-12`.
    pub fn new(atoms: Vec<(f64, OrdinaryControl)>) -> Result<Self> {
        Self::from_atoms(atoms.into_iter().map(|(w, c)| Atom::new(w, c)).collect())
    }

    /// Same checks as [`RelaxedMixture::new`], cell by cell for per-cell weights.
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidMixture("mixture has no atoms".into()))?;
        let grid = *first.control.grid();
        let dim = first.control.dim();
        if atoms.iter().any(|a| !a.control.grid().same_as(&grid)) {
            return Err(Error::GridMismatch);
        }
        if atoms.iter().any(|a| a.control.dim() != dim) {
            return Err(Error::InvalidMixture("atoms differ in control dimension".into()));
        }
        for a in &atoms {
            if let Weight::PerCell(w) = &a.weight {
                if w.len() != grid.n_steps() {
                    return Err(Error::DimensionMismatch {
                        what: "per-cell weights",
                        expected: grid.n_steps(),
                        found: w.len(),
                    });
                }
            }
            if !a.weight.is_valid() {
                return Err(Error::InvalidMixture("weights must be finite and non-negative".into()));
            }
        }
        let m = Self { atoms };
        let err = m.weight_sum_error();
        if err > WEIGHT_SUM_TOL {
            return Err(Error::InvalidMixture(format!(
                "weights miss 1 by {err:e}"
            )));
        }
        Ok(m)
    }

    /// Dirac embedding of an ordinary control.
    pub fn dirac(u: OrdinaryControl) -> Self {
        Self {
            atoms: vec![Atom::new(1.0, u)],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn grid(&self) -> &TimeGrid {
        self.atoms[0].control.grid()
    }

    pub fn control_dim(&self) -> usize {
        self.atoms[0].control.dim()
    }

    pub fn has_constant_weights(&self) -> bool {
        self.atoms.iter().all(|a| a.weight.as_constant().is_some())
    }

    /// `Σ w_i` at one cell.
    pub fn weight_sum_at(&self, cell: usize) -> f64 {
        self.atoms.iter().map(|a| a.weight_at(cell)).sum()
    }

    /// Largest `|Σ w_i(t_k) - 1|` over the cells.
    pub fn weight_sum_error(&self) -> f64 {
        if self.has_constant_weights() {
            return (self.weight_sum_at(0) - 1.0).abs();
        }
        (0..self.grid().n_steps())
            .map(|k| (self.weight_sum_at(k) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// The control of a single-atom mixture.
    pub fn as_ordinary(&self) -> Option<&OrdinaryControl> {
        match self.atoms.as_slice() {
            [a] => Some(&a.control),
            _ => None,
        }
    }

    /// `ū(t) = Σ w_i u_i(t)`. Only meaningful as a control when the
    /// dynamics are affine in `u`.
    pub fn mean_control(&self) -> OrdinaryControl {
        if let Some(u) = self.as_ordinary() {
            return u.clone();
        }
        let grid = *self.grid();
        let values = (0..grid.n_steps())
            .map(|k| {
                self.atoms
                    .iter()
                    .fold(DVector::zeros(self.control_dim()), |acc, a| {
                        acc + a.control.value(k) * a.weight_at(k)
                    })
            })
            .collect();
        OrdinaryControl {
            grid,
            values,
            allow_infeasible: self.atoms.iter().any(|a| a.control.allow_infeasible),
        }
    }

    /// Hull feasibility of every atom, naming the first offending atom and cell.
    pub fn check_feasible(&self, hull: &ControlHull) -> Result<()> {
        for (i, a) in self.atoms.iter().enumerate() {
            a.control.check_feasible(hull).map_err(|e| match e {
                Error::Infeasible { cell, .. } => Error::Infeasible { atom: i, cell },
                other => other,
            })?;
        }
        Ok(())
    }
}

/// For controls valued in `modes x [lower, upper]` with dynamics affine in
/// the amplitude: rewrites the mixture cell by cell as one atom per mode.
/// With `e_i = Σ_{atoms in mode i} w u_amp` and `a = Σ_i |e_i|`, mode `i`
/// gets weight `|e_i| / a` and amplitude `sign(e_i) a`. The mode-weighted
/// input `Σ_i e_i` is unchanged, so is the state, and for a running cost
/// convex and even in the amplitude the cost cannot increase. Cells with
/// `a = 0` keep the original mode masses at amplitude zero.
pub fn collapse_onto_modes(mu: &RelaxedMixture, modes: usize) -> RelaxedMixture {
    let grid = *mu.grid();
    let n = grid.n_steps();
    let dim = mu.control_dim();
    let mut weights = vec![vec![0.0; n]; modes];
    let mut amps = vec![vec![0.0; n]; modes];
    let mut mass = vec![0.0; modes];
    let mut carried = vec![0.0; modes];
    for k in 0..n {
        mass.iter_mut().for_each(|m| *m = 0.0);
        carried.iter_mut().for_each(|c| *c = 0.0);
        for a in &mu.atoms {
            let u = a.control.value(k);
            let m = mode_slot(u[0], modes);
            let w = a.weight_at(k);
            mass[m] += w;
            carried[m] += w * u[1];
        }
        let total: f64 = carried.iter().map(|c| c.abs()).sum();
        let wsum: f64 = mass.iter().sum();
        for i in 0..modes {
            if total > 0.0 {
                weights[i][k] = carried[i].abs() / total;
                amps[i][k] = carried[i].signum() * total;
            } else {
                weights[i][k] = mass[i] / wsum;
            }
        }
    }
    let allow = mu.atoms.iter().any(|a| a.control.allow_infeasible);
    let atoms = weights
        .into_iter()
        .zip(amps)
        .enumerate()
        .filter(|(_, (w, _))| w.iter().any(|v| *v > 0.0))
        .map(|(i, (w, amp))| {
            let values = amp
                .iter()
                .map(|&a| {
                    let mut u = DVector::zeros(dim);
                    u[0] = (i + 1) as f64;
                    u[1] = a;
                    u
                })
                .collect();
            let weight = match w.first() {
                Some(&w0) if w.iter().all(|v| *v == w0) => Weight::Constant(w0),
                _ => Weight::PerCell(w.into()),
            };
            Atom {
                weight,
                control: Arc::new(OrdinaryControl {
                    grid,
                    values,
                    allow_infeasible: allow,
                }),
            }
        })
        .collect();
    prune_atoms(atoms, 0.0, n)
}

fn mode_slot(v: f64, modes: usize) -> usize {
    (v.round().max(1.0) as usize).min(modes) - 1
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("step {lambda} outside [0, 1]")))
    }
}

/// `(1 - λ) μ + λ ν` in the sense of measures. Atoms of `mu` come first,
/// zero-weight atoms are dropped and pointwise-equal atoms merged.
pub fn convex_combine_measures(
    mu: &RelaxedMixture,
    nu: &RelaxedMixture,
    lambda: f64,
) -> Result<RelaxedMixture> {
    check_lambda(lambda)?;
    if !mu.grid().same_as(nu.grid()) {
        return Err(Error::GridMismatch);
    }
    let atoms = mu
        .atoms
        .iter()
        .map(|a| Atom {
            weight: a.weight.scaled(1.0 - lambda),
            control: a.control.clone(),
        })
        .chain(nu.atoms.iter().map(|a| Atom {
            weight: a.weight.scaled(lambda),
            control: a.control.clone(),
        }))
        .collect();
    Ok(prune_atoms(atoms, 0.0, mu.grid().n_steps()))
}

/// Pointwise `u + λ (v - u)`.
pub fn convex_combine_controls(
    u: &OrdinaryControl,
    v: &OrdinaryControl,
    lambda: f64,
) -> Result<OrdinaryControl> {
    check_lambda(lambda)?;
    if !u.grid.same_as(&v.grid) {
        return Err(Error::GridMismatch);
    }
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            what: "control vector",
            expected: u.dim(),
            found: v.dim(),
        });
    }
    let values = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a + (b - a) * lambda)
        .collect();
    Ok(OrdinaryControl {
        grid: u.grid,
        values,
        allow_infeasible: u.allow_infeasible || v.allow_infeasible,
    })
}

/// Drops atoms lighter than `weight_floor` (in every cell), merges
/// pointwise-equal atoms and renormalizes. If every atom is below the floor
/// the heaviest one is kept.
pub fn prune_and_merge(mu: &RelaxedMixture, weight_floor: f64) -> Result<RelaxedMixture> {
    if !(0.0..=0.01).contains(&weight_floor) {
        return Err(Error::InvalidConfig(format!(
            "weight floor {weight_floor} outside [0, 0.01]"
        )));
    }
    Ok(prune_atoms(mu.atoms.clone(), weight_floor, mu.grid().n_steps()))
}

fn prune_atoms(atoms: Vec<Atom>, floor: f64, n: usize) -> RelaxedMixture {
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match merged.iter_mut().find(|m| {
            Arc::ptr_eq(&m.control, &atom.control) || m.control.pointwise_eq(&atom.control, MERGE_TOL)
        }) {
            Some(m) => m.weight = m.weight.plus(&atom.weight, n),
            None => merged.push(atom),
        }
    }
    let mut kept: Vec<Atom> = merged
        .iter()
        .filter(|a| {
            let w = a.weight.max();
            w > 0.0 && w >= floor
        })
        .cloned()
        .collect();
    if kept.is_empty() {
        let heaviest = merged
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.weight.max().total_cmp(&b.weight.max()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut a = merged.swap_remove(heaviest);
        a.weight = Weight::Constant(1.0);
        return RelaxedMixture { atoms: vec![a] };
    }
    if kept.iter().all(|a| a.weight.as_constant().is_some()) {
        let sum: f64 = kept.iter().map(|a| a.weight.at(0)).sum();
        for a in &mut kept {
            a.weight = a.weight.scaled(1.0 / sum);
        }
    } else {
        let sums: Vec<f64> = (0..n).map(|k| kept.iter().map(|a| a.weight.at(k)).sum()).collect();
        if sums.iter().any(|s| *s <= 0.0) {
            // the dropped atoms carried all the mass somewhere: keep everything
            kept = merged;
            let sums: Vec<f64> =
                (0..n).map(|k| kept.iter().map(|a| a.weight.at(k)).sum()).collect();
            return RelaxedMixture { atoms: renormalize(kept, &sums) };
        }
        kept = renormalize(kept, &sums);
    }
    RelaxedMixture { atoms: kept }
}

fn renormalize(atoms: Vec<Atom>, sums: &[f64]) -> Vec<Atom> {
    atoms
        .into_iter()
        .map(|a| {
            let weight = match &a.weight {
                Weight::Constant(w) => {
                    Weight::PerCell(sums.iter().map(|s| w / s).collect())
                }
                Weight::PerCell(w) => {
                    Weight::PerCell(w.iter().zip(sums).map(|(v, s)| v / s).collect())
                }
            };
            Atom { weight, control: a.control }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 0.1).unwrap()
    }

    fn constant(v: f64) -> OrdinaryControl {
        OrdinaryControl::constant(grid(), DVector::from_element(1, v)).unwrap()
    }

    fn weights(m: &RelaxedMixture) -> Vec<f64> {
        m.atoms().iter().map(|a| a.weight.at(0)).collect()
    }

    #[test]
    fn dirac_is_single_unit_atom() {
        let m = RelaxedMixture::dirac(constant(1.0));
        assert_eq!(weights(&m), vec![1.0]);
        assert_eq!(m.mean_control(), constant(1.0));
    }

    #[test]
    fn measure_combination_endpoints() {
        let mu = RelaxedMixture::dirac(constant(1.0));
        let nu = RelaxedMixture::dirac(constant(2.0));

        let at0 = convex_combine_measures(&mu, &nu, 0.0).unwrap();
        assert_eq!(at0.len(), 1);
        assert_eq!(*at0.atoms()[0].control, constant(1.0));

        let at1 = convex_combine_measures(&mu, &nu, 1.0).unwrap();
        assert_eq!(at1.len(), 1);
        assert_eq!(*at1.atoms()[0].control, constant(2.0));

        let quarter = convex_combine_measures(&mu, &nu, 0.25).unwrap();
        assert_eq!(weights(&quarter), vec![0.75, 0.25]);
        assert_eq!(*quarter.atoms()[1].control, constant(2.0));
    }

    #[test]
    fn control_combination() {
        let half = convex_combine_controls(&constant(1.0), &constant(2.0), 0.5).unwrap();
        assert_eq!(half, constant(1.5));
        let zero = convex_combine_controls(&constant(1.0), &constant(2.0), 0.0).unwrap();
        assert_eq!(zero, constant(1.0));
        assert!(convex_combine_controls(&constant(1.0), &constant(2.0), 1.5).is_err());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let other = OrdinaryControl::constant(
            TimeGrid::new(1.0, 0.05).unwrap(),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        assert!(matches!(
            convex_combine_controls(&constant(1.0), &other, 0.5),
            Err(Error::GridMismatch)
        ));
        assert!(matches!(
            convex_combine_measures(
                &RelaxedMixture::dirac(constant(1.0)),
                &RelaxedMixture::dirac(other),
                0.5
            ),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn prune_drops_zero_and_merges_equal() {
        let m = RelaxedMixture::new(vec![(1.0, constant(1.0)), (0.0, constant(2.0))]).unwrap();
        let p = prune_and_merge(&m, 1e-9).unwrap();
        assert_eq!(weights(&p), vec![1.0]);

        let m = RelaxedMixture::new(vec![(0.5, constant(1.0)), (0.5, constant(1.0))]).unwrap();
        let p = prune_and_merge(&m, 1e-9).unwrap();
        assert_eq!(weights(&p), vec![1.0]);
    }

    #[test]
    fn prune_keeps_heaviest_when_all_below_floor() {
        let atoms = vec![
            Atom::new(1e-4, constant(1.0)),
            Atom::new(3e-4, constant(2.0)),
        ];
        let p = prune_atoms(atoms, 1e-3, 10);
        assert_eq!(p.len(), 1);
        assert_eq!(p.atoms()[0].weight, Weight::Constant(1.0));
        assert_eq!(*p.atoms()[0].control, constant(2.0));
    }

    #[test]
    fn prune_renormalizes() {
        let m = RelaxedMixture::new(vec![
            (0.6, constant(1.0)),
            (0.4 - 1e-10, constant(2.0)),
            (1e-10, constant(3.0)),
        ])
        .unwrap();
        let p = prune_and_merge(&m, 1e-9).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.weight_sum_error() <= 1e-12);
        assert!(prune_and_merge(&m, 0.5).is_err());
    }

    #[test]
    fn mixture_validation() {
        assert!(RelaxedMixture::new(vec![]).is_err());
        assert!(RelaxedMixture::new(vec![(0.7, constant(1.0))]).is_err());
        assert!(RelaxedMixture::new(vec![(1.2, constant(1.0)), (-0.2, constant(2.0))]).is_err());
    }

    #[test]
    fn mean_control_of_two_atoms() {
        let m = RelaxedMixture::new(vec![(0.5, constant(1.0)), (0.5, constant(2.0))]).unwrap();
        assert_eq!(m.mean_control(), constant(1.5));
    }

    #[test]
    fn feasibility_respects_flag() {
        let hull = ControlHull::finite_set(vec![1.0, 2.0]);
        assert!(constant(1.5).check_feasible(&hull).is_ok());
        assert!(matches!(
            constant(3.0).check_feasible(&hull),
            Err(Error::Infeasible { cell: 0, .. })
        ));
        assert!(constant(3.0)
            .allowing_infeasible(true)
            .check_feasible(&hull)
            .is_ok());
    }

    fn mode_control(mode: f64, amp: f64) -> OrdinaryControl {
        OrdinaryControl::constant(grid(), DVector::from_vec(vec![mode, amp])).unwrap()
    }

    #[test]
    fn collapse_gives_one_atom_per_mode() {
        let m = RelaxedMixture::new(vec![
            (0.5, mode_control(1.0, 4.0)),
            (0.25, mode_control(1.0, -2.0)),
            (0.25, mode_control(2.0, -8.0)),
        ])
        .unwrap();
        let c = collapse_onto_modes(&m, 3);
        // e = (1.5, -2, 0), a = 3.5
        assert_eq!(c.len(), 2);
        let w: Vec<f64> = c.atoms().iter().map(|a| a.weight_at(0)).collect();
        assert!((w[0] - 1.5 / 3.5).abs() < 1e-15 && (w[1] - 2.0 / 3.5).abs() < 1e-15);
        assert_eq!(c.atoms()[0].control.value(3).as_slice(), &[1.0, 3.5]);
        assert_eq!(c.atoms()[1].control.value(3).as_slice(), &[2.0, -3.5]);
        assert!(c.weight_sum_error() <= 1e-12);
    }

    #[test]
    fn collapse_of_zero_input_keeps_mode_masses() {
        let m = RelaxedMixture::new(vec![(0.3, mode_control(2.0, 0.0)), (0.7, mode_control(3.0, 0.0))])
            .unwrap();
        let c = collapse_onto_modes(&m, 3);
        assert_eq!(weights(&c), vec![0.3, 0.7]);
        assert_eq!(c.atoms()[1].control.value(0).as_slice(), &[3.0, 0.0]);
    }

    #[test]
    fn per_cell_weights() {
        let w = Weight::PerCell(vec![0.25; 10].into());
        assert_eq!(w.at(3), 0.25);
        assert_eq!(w.max(), 0.25);
        assert!(w.as_constant().is_none());

        let ok = RelaxedMixture::from_atoms(vec![
            Atom::new(Weight::PerCell((0..10).map(|k| k as f64 / 10.0).collect()), constant(1.0)),
            Atom::new(Weight::PerCell((0..10).map(|k| 1.0 - k as f64 / 10.0).collect()), constant(2.0)),
        ])
        .unwrap();
        assert!(!ok.has_constant_weights());
        assert!((ok.mean_control().value(5)[0] - 1.5).abs() < 1e-15);

        let short = RelaxedMixture::from_atoms(vec![Atom::new(
            Weight::PerCell(vec![1.0; 3].into()),
            constant(1.0),
        )]);
        assert!(matches!(short, Err(Error::DimensionMismatch { .. })));
        let unbalanced = RelaxedMixture::from_atoms(vec![
            Atom::new(Weight::PerCell(vec![0.5; 10].into()), constant(1.0)),
            Atom::new(0.6, constant(2.0)),
        ]);
        assert!(unbalanced.is_err());
    }

    #[test]
    fn measure_combination_scales_per_cell_weights() {
        let mu = RelaxedMixture::from_atoms(vec![
            Atom::new(Weight::PerCell((0..10).map(|k| (k % 2) as f64).collect()), constant(1.0)),
            Atom::new(Weight::PerCell((0..10).map(|k| 1.0 - (k % 2) as f64).collect()), constant(2.0)),
        ])
        .unwrap();
        let nu = RelaxedMixture::dirac(constant(2.0));
        let c = convex_combine_measures(&mu, &nu, 0.5).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.atoms()[0].weight_at(1), 0.5);
        assert_eq!(c.atoms()[1].weight_at(0), 1.0);
        assert_eq!(c.atoms()[1].weight_at(1), 0.5);
        assert!(c.weight_sum_error() <= 1e-12);
    }
}
