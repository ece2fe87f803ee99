//! CSV serialization of grid functions, ensembles and trajectories.
//!
//! Floats are written with 17 significant digits so that values round-trip
//! exactly. The grid is not stored; it is recovered from the cell centers
//! plus a [`GridHint`].

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::ensemble::{Ensemble, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};

/// Information the centers alone cannot provide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHint {
    /// Explicit `[left, right]`; required for single-cell data.
    pub domain: Option<(f64, f64)>,
    pub periodic: bool,
}

impl Default for GridHint {
    fn default() -> Self {
        Self {
            domain: None,
            periodic: true,
        }
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn snap(x: f64) -> f64 {
    let snapped = (x * 1e12).round() / 1e12;
    if (snapped - x).abs() <= 1e-9 * x.abs().max(1.0) {
        snapped
    } else {
        x
    }
}

/// Rebuilds a uniform grid from its cell centers.
pub fn infer_grid(centers: &[f64], hint: GridHint) -> Result<Grid> {
    let n = centers.len();
    if n == 0 {
        return Err(Error::Format("no cells".into()));
    }
    let grid = match hint.domain {
        Some((left, right)) => Grid::new(left, right, n, hint.periodic)?,
        None => {
            if n < 2 {
                return Err(Error::Format(
                    "a single cell does not determine the domain; pass it explicitly".into(),
                ));
            }
            let dx = (centers[n - 1] - centers[0]) / (n - 1) as f64;
            Grid::new(
                snap(centers[0] - 0.5 * dx),
                snap(centers[n - 1] + 0.5 * dx),
                n,
                hint.periodic,
            )?
        }
    };
    let tol = 1e-9 * grid.length();
    for (j, &c) in centers.iter().enumerate() {
        if (c - grid.center(j)).abs() > tol {
            return Err(Error::Format(format!(
                "cell centers are not uniform on {grid}: row {j} has x = {c}, expected {}",
                grid.center(j)
            )));
        }
    }
    Ok(grid)
}

fn parse(field: Option<&str>, what: &str, row: usize) -> Result<f64> {
    let s = field.ok_or_else(|| Error::Format(format!("row {row}: missing column {what}")))?;
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Format(format!("row {row}: cannot parse {what} = {s:?}")))
}

fn parse_index(field: Option<&str>, what: &str, row: usize) -> Result<usize> {
    let s = field.ok_or_else(|| Error::Format(format!("row {row}: missing column {what}")))?;
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Format(format!("row {row}: cannot parse {what} = {s:?}")))
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path, e))
}

pub fn write_grid_function(u: &GridFunction, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_center", "value"])?;
    for (j, v) in u.values().iter().enumerate() {
        w.write_record([format_float(u.grid().center(j)), format_float(*v)])?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn read_grid_function(input: impl Read, hint: GridHint) -> Result<GridFunction> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["x_center", "value"])?;
    let mut centers = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        centers.push(parse(rec.get(0), "x_center", row)?);
        values.push(parse(rec.get(1), "value", row)?);
    }
    GridFunction::new(infer_grid(&centers, hint)?, values)
}

fn write_members(
    w: &mut csv::Writer<impl Write>,
    prefix: Option<String>,
    ensemble: &Ensemble,
) -> Result<()> {
    let grid = ensemble.grid();
    for (m, u) in ensemble.members().iter().enumerate() {
        for (j, v) in u.values().iter().enumerate() {
            let mut rec = Vec::with_capacity(4);
            if let Some(p) = &prefix {
                rec.push(p.clone());
            }
            rec.push(m.to_string());
            rec.push(format_float(grid.center(j)));
            rec.push(format_float(*v));
            w.write_record(&rec)?;
        }
    }
    Ok(())
}

pub fn write_ensemble(ensemble: &Ensemble, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["member", "x_center", "value"])?;
    write_members(&mut w, None, ensemble)?;
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Rows grouped into members, each member a list of `(x_center, value)`.
fn assemble(rows: Vec<(usize, f64, f64)>, hint: GridHint) -> Result<Ensemble> {
    let mut members: Vec<Vec<(f64, f64)>> = Vec::new();
    for (m, x, v) in rows {
        if m == members.len() {
            members.push(Vec::new());
        } else if m + 1 != members.len() {
            return Err(Error::Format(format!(
                "member indices must appear in order 0, 1, ...; found {m} after {}",
                members.len() as isize - 1
            )));
        }
        members[m].push((x, v));
    }
    if members.is_empty() {
        return Err(Error::Format("no members".into()));
    }
    let centers: Vec<f64> = members[0].iter().map(|p| p.0).collect();
    let grid = infer_grid(&centers, hint)?;
    let functions = members
        .into_iter()
        .enumerate()
        .map(|(m, cells)| {
            if cells.len() != centers.len() || cells.iter().zip(&centers).any(|(c, x)| c.0 != *x) {
                return Err(Error::Format(format!(
                    "member {m} does not share the cell centers of member 0"
                )));
            }
            GridFunction::new(grid, cells.into_iter().map(|c| c.1).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(functions, 0)
}

pub fn read_ensemble(input: impl Read, hint: GridHint) -> Result<Ensemble> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["member", "x_center", "value"])?;
    let mut rows = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        rows.push((
            parse_index(rec.get(0), "member", row)?,
            parse(rec.get(1), "x_center", row)?,
            parse(rec.get(2), "value", row)?,
        ));
    }
    assemble(rows, hint)
}

pub fn write_trajectory(traj: &Trajectory, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "member", "x_center", "value"])?;
    for (t, state) in traj.times().iter().zip(traj.states()) {
        write_members(&mut w, Some(format_float(*t)), state)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn read_trajectory(input: impl Read, hint: GridHint) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["time", "member", "x_center", "value"])?;
    let mut times: Vec<f64> = Vec::new();
    let mut blocks: Vec<Vec<(usize, f64, f64)>> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let t = parse(rec.get(0), "time", row)?;
        if times.last() != Some(&t) {
            times.push(t);
            blocks.push(Vec::new());
        }
        blocks.last_mut().unwrap().push((
            parse_index(rec.get(1), "member", row)?,
            parse(rec.get(2), "x_center", row)?,
            parse(rec.get(3), "value", row)?,
        ));
    }
    let states = blocks
        .into_iter()
        .map(|b| assemble(b, hint))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(times, states)
}

pub fn save_grid_function(u: &GridFunction, path: &Path) -> Result<()> {
    write_grid_function(u, create(path)?)
}

pub fn load_grid_function(path: &Path, hint: GridHint) -> Result<GridFunction> {
    read_grid_function(open(path)?, hint)
}

pub fn save_ensemble(e: &Ensemble, path: &Path) -> Result<()> {
    write_ensemble(e, create(path)?)
}

pub fn load_ensemble(path: &Path, hint: GridHint) -> Result<Ensemble> {
    read_ensemble(open(path)?, hint)
}

pub fn save_trajectory(t: &Trajectory, path: &Path) -> Result<()> {
    write_trajectory(t, create(path)?)
}

pub fn load_trajectory(path: &Path, hint: GridHint) -> Result<Trajectory> {
    read_trajectory(open(path)?, hint)
}

/// Integers print without exponent, everything else with 17 significant digits.
pub fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format_float(v)
    }
}

/// Writes a numeric table with the given header.
pub fn write_table(header: &[String], rows: &[Vec<f64>], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Format(format!(
                "row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|v| format_cell(*v)))?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

pub fn save_table(header: &[String], rows: &[Vec<f64>], path: &Path) -> Result<()> {
    write_table(header, rows, create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_function_round_trip_is_exact() {
        let g = Grid::unit_torus(7).unwrap();
        let u = GridFunction::from_centers(g, |x| (10.0 * x).sin() / 3.0).unwrap();
        let mut buf = Vec::new();
        write_grid_function(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_center,value\n"));
        let back = read_grid_function(buf.as_slice(), GridHint::default()).unwrap();
        assert_eq!(back.values(), u.values());
        assert!(back.grid().matches(&g));
        assert_eq!(back.grid().left(), 0.0);
        assert_eq!(back.grid().right(), 1.0);
    }

    #[test]
    fn single_cell_needs_domain() {
        let csv = "x_center,value\n0.5,2.0\n";
        assert!(read_grid_function(csv.as_bytes(), GridHint::default()).is_err());
        let hint = GridHint {
            domain: Some((0.0, 1.0)),
            periodic: false,
        };
        let u = read_grid_function(csv.as_bytes(), hint).unwrap();
        assert_eq!(u.values(), &[2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let hint = GridHint::default();
        assert!(read_grid_function("x,value\n0.25,1\n0.75,2\n".as_bytes(), hint).is_err());
        assert!(read_grid_function("x_center,value\n0.25,1\n0.75,abc\n".as_bytes(), hint).is_err());
        assert!(
            read_grid_function("x_center,value\n0.1,1\n0.2,1\n0.5,1\n".as_bytes(), hint).is_err()
        );
        let ragged = "member,x_center,value\n0,0.25,1\n0,0.75,1\n1,0.25,1\n";
        assert!(read_ensemble(ragged.as_bytes(), hint).is_err());
    }

    #[test]
    fn ensemble_and_trajectory_round_trip() {
        let g = Grid::new(-1.0, 2.0, 6, false).unwrap();
        let members: Vec<_> = (0..3)
            .map(|m| GridFunction::from_centers(g, |x| x * m as f64 + 0.1).unwrap())
            .collect();
        let e = Ensemble::new(members, 0).unwrap();
        let hint = GridHint {
            domain: None,
            periodic: false,
        };
        let mut buf = Vec::new();
        write_ensemble(&e, &mut buf).unwrap();
        let back = read_ensemble(buf.as_slice(), hint).unwrap();
        assert_eq!(back.members(), e.members());
        let traj = Trajectory::new(vec![0.0, 0.5], vec![e.clone(), e.clone()]).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&traj, &mut buf).unwrap();
        let back = read_trajectory(buf.as_slice(), hint).unwrap();
        assert_eq!(back.times(), traj.times());
        assert_eq!(back.states()[1].members(), e.members());
    }

    #[test]
    fn table_formatting() {
        let mut buf = Vec::new();
        let header = vec!["dx".to_string(), "k".to_string(), "residual".to_string()];
        write_table(&header, &[vec![0.125, 1.0, -3e-4]], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "dx,k,residual\n1.2500000000000000e-1,1,-2.9999999999999997e-4\n"
        );
    }
}
