//! CSV dumps of trajectories, controls and iteration logs.
//!
//! Floats are written with 17 significant digits, so reading a file back
//! reproduces every value exactly.

use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DVector;

use crate::controls::{Atom, OrdinaryControl, RelaxedMixture, Weight};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrate::{CostateTrajectory, StateTrajectory};
use crate::solver::IterationRecord;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not an index: `{s}`")))
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

/// `t,x1..xn[,p1..pn]`, one row per grid instant.
pub fn write_trajectory<W: Write>(
    out: W,
    x: &StateTrajectory,
    p: Option<&CostateTrajectory>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = x.values[0].len();
    let mut header = vec!["t".to_string()];
    header.extend(numbered("x", n));
    if p.is_some() {
        header.extend(numbered("p", n));
    }
    w.write_record(&header)?;
    for (k, t) in x.grid.instants().enumerate() {
        let mut row = vec![fmt_f64(t)];
        row.extend(x.values[k].iter().map(|&v| fmt_f64(v)));
        if let Some(p) = p {
            row.extend(p.values[k].iter().map(|&v| fmt_f64(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory file contents: instants, states and (when present) costates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub t: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub p: Option<Vec<DVector<f64>>>,
}

pub fn read_trajectory<R: Read>(input: R) -> Result<TrajectoryTable> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let n = header.iter().filter(|h| h.starts_with('x')).count();
    let with_p = header.iter().any(|h| h.starts_with('p'));
    let mut table = TrajectoryTable {
        t: Vec::new(),
        x: Vec::new(),
        p: with_p.then(Vec::new),
    };
    for rec in r.records() {
        let rec = rec?;
        let nums = rec.iter().map(parse_f64).collect::<Result<Vec<f64>>>()?;
        if nums.len() != 1 + n * if with_p { 2 } else { 1 } {
            return Err(Error::Parse("row width does not match header".into()));
        }
        table.t.push(nums[0]);
        table.x.push(DVector::from_column_slice(&nums[1..=n]));
        if let Some(p) = table.p.as_mut() {
            p.push(DVector::from_column_slice(&nums[n + 1..]));
        }
    }
    Ok(table)
}

/// `t,atom_index,weight,u1..um`, one row per (cell, atom).
pub fn write_mixture<W: Write>(out: W, mu: &RelaxedMixture) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "atom_index".into(), "weight".into()];
    header.extend(numbered("u", mu.control_dim()));
    w.write_record(&header)?;
    let grid = mu.grid();
    for k in 0..grid.n_steps() {
        let t = fmt_f64(grid.instant(k));
        for (i, atom) in mu.atoms().iter().enumerate() {
            let mut row = vec![t.clone(), i.to_string(), fmt_f64(atom.weight_at(k))];
            row.extend(atom.control.value(k).iter().map(|&v| fmt_f64(v)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_control<W: Write>(out: W, u: &OrdinaryControl) -> Result<()> {
    write_mixture(out, &RelaxedMixture::dirac(u.clone()))
}

/// Reads a control dump back. The grid is rebuilt from the cell instants and
/// the horizon `t_f`.
pub fn read_mixture<R: Read>(input: R, t_f: f64) -> Result<RelaxedMixture> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows: Vec<(f64, usize, f64, DVector<f64>)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 4 {
            return Err(Error::Parse("control rows need t, atom_index, weight and values".into()));
        }
        let values = rec
            .iter()
            .skip(3)
            .map(parse_f64)
            .collect::<Result<Vec<f64>>>()?;
        rows.push((
            parse_f64(&rec[0])?,
            parse_usize(&rec[1])?,
            parse_f64(&rec[2])?,
            DVector::from_vec(values),
        ));
    }
    let n_atoms = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
    if n_atoms == 0 || !rows.len().is_multiple_of(n_atoms) {
        return Err(Error::Parse("control dump is empty or has ragged atoms".into()));
    }
    let n_cells = rows.len() / n_atoms;
    let dt = t_f / n_cells as f64;
    if n_cells > 1 && ((rows[n_atoms].0 - rows[0].0) - dt).abs() > 1e-9 * dt.max(1.0) {
        return Err(Error::Parse(format!(
            "cell spacing does not match horizon {t_f} with {n_cells} cells"
        )));
    }
    let grid = TimeGrid::new(t_f, dt)?;
    let mut weights: Vec<Vec<f64>> = vec![Vec::with_capacity(n_cells); n_atoms];
    let mut values: Vec<Vec<DVector<f64>>> = vec![Vec::with_capacity(n_cells); n_atoms];
    for (_, atom, weight, u) in rows {
        weights[atom].push(weight);
        values[atom].push(u);
    }
    let atoms = weights
        .into_iter()
        .zip(values)
        .map(|(w, v)| {
            let weight = if w.iter().all(|x| *x == w[0]) {
                Weight::Constant(w[0])
            } else {
                Weight::PerCell(w.into())
            };
            Ok(Atom {
                weight,
                control: Arc::new(OrdinaryControl::new(grid, v)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RelaxedMixture::from_atoms(atoms)
}

pub const ITERATION_HEADER: [&str; 7] = ["k", "J", "theta", "lambda", "l", "n_cost_evals", "wall_ms"];

/// `k,J,theta,lambda,l,n_cost_evals,wall_ms`.
pub fn write_iterations<W: Write>(out: W, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ITERATION_HEADER)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            fmt_f64(r.cost),
            fmt_f64(r.theta),
            fmt_f64(r.lambda),
            r.l.to_string(),
            r.n_cost_evals.to_string(),
            format!("{:.3}", r.wall_ms),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an iteration log. `cost_next` is taken from the following row and
/// is NaN for the last one.
pub fn read_iterations<R: Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out: Vec<IterationRecord> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != ITERATION_HEADER.len() {
            return Err(Error::Parse("iteration rows need 7 columns".into()));
        }
        out.push(IterationRecord {
            k: parse_usize(&rec[0])?,
            cost: parse_f64(&rec[1])?,
            theta: parse_f64(&rec[2])?,
            lambda: parse_f64(&rec[3])?,
            l: parse_usize(&rec[4])? as u32,
            n_cost_evals: parse_usize(&rec[5])?,
            wall_ms: parse_f64(&rec[6])?,
            cost_next: f64::NAN,
        });
    }
    for i in 1..out.len() {
        out[i - 1].cost_next = out[i].cost;
    }
    Ok(out)
}
