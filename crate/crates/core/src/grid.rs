//! Uniform 1-D grids, piecewise-constant grid functions and partitions.
//!
//! Cells are half-open `[left, right)`; the last cell of a bounded domain
//! also owns the right endpoint. Values are cell averages, so `L^1` norms
//! are exact for the represented function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether two grids describe the same
/// cells (bounds may carry rounding from CSV round-trips).
const GRID_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    left: f64,
    right: f64,
    n_cells: usize,
    periodic: bool,
}

impl Grid {
    pub fn new(left: f64, right: f64, n_cells: usize, periodic: bool) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidGrid("n_cells must be at least 1".into()));
        }
        if !(left.is_finite() && right.is_finite()) || left >= right {
            return Err(Error::InvalidGrid(format!(
                "domain [{left}, {right}] must be a finite interval with left < right"
            )));
        }
        Ok(Self {
            left,
            right,
            n_cells,
            periodic,
        })
    }

    /// The periodic unit torus `[0, 1)` with `n_cells` cells.
    pub fn unit_torus(n_cells: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n_cells, true)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_cells as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.left + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    /// Left and right edge of cell `j`.
    pub fn cell_bounds(&self, j: usize) -> (f64, f64) {
        let dx = self.dx();
        (self.left + j as f64 * dx, self.left + (j + 1) as f64 * dx)
    }

    /// Maps `x` into `[left, right)` on periodic grids; identity otherwise.
    pub fn wrap(&self, x: f64) -> f64 {
        if !self.periodic {
            return x;
        }
        let len = self.length();
        let y = (x - self.left).rem_euclid(len);
        // rem_euclid may round up to `len` for tiny negative inputs
        if y >= len {
            self.left
        } else {
            self.left + y
        }
    }

    /// Index of the cell containing `x`.
    pub fn cell_index(&self, x: f64) -> Result<usize> {
        if !x.is_finite() {
            return Err(Error::arg("x", format!("non-finite coordinate {x}")));
        }
        let x = if self.periodic {
            self.wrap(x)
        } else {
            if x < self.left || x > self.right {
                return Err(Error::OutsideDomain {
                    x,
                    left: self.left,
                    right: self.right,
                });
            }
            x
        };
        let idx = ((x - self.left) / self.dx()).floor();
        Ok((idx.max(0.0) as usize).min(self.n_cells - 1))
    }

    /// Signed distance `x - y`, taken modulo the period on periodic grids.
    pub fn displacement(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        if self.periodic {
            let len = self.length();
            d - len * (d / len).round()
        } else {
            d
        }
    }

    /// Whether `other` describes the same cells (bounds compared with a
    /// small relative tolerance).
    pub fn matches(&self, other: &Grid) -> bool {
        let tol = GRID_MATCH_RTOL * self.length().max(other.length());
        self.n_cells == other.n_cells
            && self.periodic == other.periodic
            && (self.left - other.left).abs() <= tol
            && (self.right - other.right).abs() <= tol
    }

    pub(crate) fn ensure_matches(&self, other: &Grid) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self} vs {other}")))
        }
    }
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}, {}] x {} cells ({})",
            self.left,
            self.right,
            self.n_cells,
            if self.periodic { "periodic" } else { "bounded" }
        )
    }
}

/// A piecewise-constant function on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "value {v} in cell {j} is not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_cells()])
    }

    /// Samples `f` at the cell centers.
    pub fn from_centers(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.centers().into_iter().map(f).collect())
    }

    /// Cell averages of `f`, approximated with `samples` midpoint sub-samples
    /// per cell.
    pub fn from_cell_averages(grid: Grid, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = samples.max(1);
        let dx = grid.dx();
        let h = dx / samples as f64;
        let values = (0..grid.n_cells())
            .map(|j| {
                let (a, _) = grid.cell_bounds(j);
                (0..samples)
                    .map(|s| f(a + (s as f64 + 0.5) * h))
                    .sum::<f64>()
                    / samples as f64
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(Σ_j |u_j|^p Δx)^{1/p}` for `p ∈ {1, 2}`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        let dx = self.grid.dx();
        if p == 1.0 {
            Ok(self.values.iter().map(|v| v.abs()).sum::<f64>() * dx)
        } else if p == 2.0 {
            Ok((self.values.iter().map(|v| v * v).sum::<f64>() * dx).sqrt())
        } else {
            Err(Error::UnsupportedNorm(p))
        }
    }

    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(l1_distance_values(
            &self.values,
            &other.values,
            self.grid.dx(),
        ))
    }

    /// Value of the cell containing `x` (wrapped on periodic grids).
    pub fn eval_at(&self, x: f64) -> Result<f64> {
        Ok(self.values[self.grid.cell_index(x)?])
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.grid.ensure_matches(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `Σ_j u_j Δx`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Total variation, including the wrap-around jump on periodic grids.
    pub fn total_variation(&self) -> f64 {
        let inner: f64 = self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        if self.grid.is_periodic() {
            inner + (self.values[0] - self.values[self.values.len() - 1]).abs()
        } else {
            inner
        }
    }
}

pub(crate) fn l1_distance_values(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}

/// A finite family of consecutive intervals covering a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    breakpoints: Vec<f64>,
}

impl Partition {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPartition(
                "need at least two breakpoints".into(),
            ));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidPartition("breakpoints must be finite".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(format!(
                "breakpoints must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        Ok(Self { breakpoints })
    }

    /// `n` equal cells of width `(right - left) / n`.
    pub fn uniform(left: f64, right: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition(
                "number of cells must be >= 1".into(),
            ));
        }
        if left.is_nan() || right.is_nan() || left >= right {
            return Err(Error::InvalidPartition(format!(
                "empty domain [{left}, {right}]"
            )));
        }
        let h = (right - left) / n as f64;
        let mut breakpoints: Vec<f64> = (0..n).map(|i| left + i as f64 * h).collect();
        breakpoints.push(right);
        Self::new(breakpoints)
    }

    pub fn uniform_on(grid: &Grid, n: usize) -> Result<Self> {
        Self::uniform(grid.left(), grid.right(), n)
    }

    /// Splits every cell into `factor` equal subcells.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidPartition(
                "refinement factor must be >= 1".into(),
            ));
        }
        let mut breakpoints = Vec::with_capacity(self.n_cells() * factor + 1);
        for w in self.breakpoints.windows(2) {
            let h = (w[1] - w[0]) / factor as f64;
            breakpoints.extend((0..factor).map(|s| w[0] + s as f64 * h));
        }
        breakpoints.push(*self.breakpoints.last().unwrap());
        Self::new(breakpoints)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_cells(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn cell(&self, i: usize) -> (f64, f64) {
        (self.breakpoints[i], self.breakpoints[i + 1])
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn left(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn right(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        self.cells().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Whether every cell of `self` lies inside some cell of `coarse`.
    pub fn refines(&self, coarse: &Partition) -> bool {
        let tol = 1e-12 * (self.right() - self.left());
        if (self.left() - coarse.left()).abs() > tol || (self.right() - coarse.right()).abs() > tol
        {
            return false;
        }
        coarse
            .breakpoints
            .iter()
            .all(|b| self.breakpoints.iter().any(|c| (b - c).abs() <= tol))
    }
}
