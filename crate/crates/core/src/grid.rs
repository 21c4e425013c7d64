use crate::error::{Error, Result};

/// Uniform discretization of `[0, t_f]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_f: f64,
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Builds the grid with `round(t_f / dt)` steps. The horizon must be an
    /// integer multiple of `dt` to within `1e-9` relative.
    pub fn new(t_f: f64, dt: f64) -> Result<Self> {
        if !(t_f.is_finite() && t_f > 0.0) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {t_f}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidGrid(format!("time step must be positive, got {dt}")));
        }
        let n = (t_f / dt).round();
        if n < 1.0 {
            return Err(Error::InvalidGrid(format!(
                "time step {dt} exceeds horizon {t_f}"
            )));
        }
        if ((n * dt - t_f) / t_f).abs() > 1e-9 {
            return Err(Error::InvalidGrid(format!(
                "horizon {t_f} is not a multiple of time step {dt}"
            )));
        }
        Ok(Self {
            t_f,
            dt,
            n_steps: n as usize,
        })
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of cells; there are `n_steps + 1` instants.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Instant `t_k = k dt`, with the last instant pinned to `t_f`.
    pub fn instant(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_f
        } else {
            k as f64 * self.dt
        }
    }

    pub fn instants(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|k| self.instant(k))
    }

    /// Grids built from different `(t_f, dt)` pairs are only
    /// interchangeable when they describe the same cells.
    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t_f - other.t_f).abs() <= 1e-12 * self.t_f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_counts() {
        assert_eq!(TimeGrid::new(10.0, 0.01).unwrap().n_steps(), 1000);
        assert_eq!(TimeGrid::new(10.0, 0.05).unwrap().n_steps(), 200);
        assert_eq!(TimeGrid::new(2.0, 0.01).unwrap().n_steps(), 200);
        assert_eq!(TimeGrid::new(20.0, 0.1).unwrap().n_steps(), 200);
    }

    #[test]
    fn instants_increase_and_end_at_horizon() {
        let g = TimeGrid::new(10.0, 0.1).unwrap();
        let ts: Vec<f64> = g.instants().collect();
        assert_eq!(ts.len(), 101);
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 10.0);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 0.1).is_err());
        assert!(TimeGrid::new(1.0, -0.1).is_err());
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert!(TimeGrid::new(1.0, 2.0).is_err());
        assert!(TimeGrid::new(f64::NAN, 0.1).is_err());
    }
}
