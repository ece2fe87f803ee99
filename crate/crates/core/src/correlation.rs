//! Estimators for the correlation marginals of an empirical measure.
//!
//! For `μ = (1/M) Σ_m δ_{u_m}` the k-point marginal at `x = (x_1, …, x_k)` is
//! the atomic measure `(1/M) Σ_m δ_{(u_m(x_1), …, u_m(x_k))}`. Marginals are
//! kept as atom lists; every reduction over members runs in member order.

use rayon::prelude::*;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Partition};
use crate::rng::stream_rng;
use crate::solver::FluxModel;
use rand::Rng;

/// Largest supported number of points in a marginal.
pub const MAX_POINTS: usize = 6;

/// Atoms of the empirical k-point marginal `ν^k_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSample {
    pub points: Vec<f64>,
    pub atoms: Vec<Vec<f64>>,
}

impl MarginalSample {
    pub fn k(&self) -> usize {
        self.points.len()
    }

    /// `⟨ν^k_x, g⟩ = (1/M) Σ_m g(atom_m)`.
    pub fn expectation(&self, g: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| g(a)).sum::<f64>() / self.atoms.len() as f64
    }

    /// Atoms of coordinate `i` alone (the one-point marginal at `points[i]`).
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.atoms.iter().map(|a| a[i]).collect()
    }
}

fn cell_indices(grid: &Grid, points: &[f64]) -> Result<Vec<usize>> {
    if points.is_empty() || points.len() > MAX_POINTS {
        return Err(Error::arg(
            "points",
            format!("need 1..={MAX_POINTS} points, got {}", points.len()),
        ));
    }
    points.iter().map(|&x| grid.cell_index(x)).collect()
}

pub fn marginal_samples(ensemble: &Ensemble, points: &[f64]) -> Result<MarginalSample> {
    let idx = cell_indices(ensemble.grid(), points)?;
    let atoms = ensemble
        .members()
        .iter()
        .map(|u| idx.iter().map(|&j| u.values()[j]).collect())
        .collect();
    Ok(MarginalSample {
        points: points.to_vec(),
        atoms,
    })
}

/// `m^k(x) = (1/M) Σ_m Π_i u_m(x_i)`.
pub fn moment(ensemble: &Ensemble, points: &[f64]) -> Result<f64> {
    let idx = cell_indices(ensemble.grid(), points)?;
    let total: f64 = ensemble
        .members()
        .iter()
        .map(|u| idx.iter().map(|&j| u.values()[j]).product::<f64>())
        .sum();
    Ok(total / ensemble.len() as f64)
}

/// `(1/M) Σ_m u_m(x_1)⋯f(u_m(x_i))⋯u_m(x_k)`, with `i` zero-based.
pub fn flux_moment(
    ensemble: &Ensemble,
    points: &[f64],
    model: &FluxModel,
    i: usize,
) -> Result<f64> {
    let idx = cell_indices(ensemble.grid(), points)?;
    if i >= idx.len() {
        return Err(Error::arg(
            "i",
            format!("index {i} out of range for k = {}", idx.len()),
        ));
    }
    let total: f64 = ensemble
        .members()
        .iter()
        .map(|u| {
            idx.iter()
                .enumerate()
                .map(|(l, &j)| {
                    let v = u.values()[j];
                    if l == i {
                        model.flux(v)
                    } else {
                        v
                    }
                })
                .product::<f64>()
        })
        .sum();
    Ok(total / ensemble.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureValue {
    pub value: f64,
    /// `r < Δx`: the ball holds a single cell and the estimate is meaningless.
    pub under_resolved: bool,
}

/// Cell offsets `k` with `|k| Δx < r`, clipped to the domain on bounded grids.
fn ball_offsets(r: f64, dx: f64) -> i64 {
    // largest k with k·dx < r
    let mut k = (r / dx).floor() as i64;
    while k > 0 && (k as f64) * dx >= r {
        k -= 1;
    }
    k
}

/// Structure function `∫_D avg_{B_r(x)} ⟨ν²_{x,y}, |ξ_1 − ξ_2|^p⟩ dy dx` of the
/// empirical measure. The ball average is taken over the cells whose centers
/// lie within distance `< r` (wrapped on periodic grids), normalized by
/// their total length.
pub fn structure_function(ensemble: &Ensemble, r: f64, p: f64) -> Result<StructureValue> {
    let grid = *ensemble.grid();
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::arg("p", format!("must be >= 1, got {p}")));
    }
    let limit = if grid.is_periodic() {
        0.5 * grid.length()
    } else {
        grid.length()
    };
    if !(r > 0.0 && r < limit) {
        return Err(Error::arg(
            "r",
            format!("must lie in (0, {limit}) on {grid}, got {r}"),
        ));
    }
    let dx = grid.dx();
    let n = grid.n_cells() as i64;
    let reach = ball_offsets(r, dx);
    let pow = |d: f64| {
        if p == 1.0 {
            d
        } else if p == 2.0 {
            d * d
        } else {
            d.powf(p)
        }
    };
    let per_member: Vec<f64> = ensemble
        .members()
        .par_iter()
        .map(|u| {
            let v = u.values();
            let mut total = 0.0;
            for j in 0..n {
                let (lo, hi) = if grid.is_periodic() {
                    (j - reach, j + reach)
                } else {
                    ((j - reach).max(0), (j + reach).min(n - 1))
                };
                let mut inner = 0.0;
                for jj in lo..=hi {
                    let w = jj.rem_euclid(n) as usize;
                    inner += pow((v[j as usize] - v[w]).abs());
                }
                let count = (hi - lo + 1) as f64;
                total += inner / count;
            }
            total * dx
        })
        .collect();
    let value = per_member.iter().sum::<f64>() / ensemble.len() as f64;
    Ok(StructureValue {
        value,
        under_resolved: r < dx,
    })
}

/// Overlap weights of partition cells with grid cells: for grid cell `j`, the
/// list of `(partition cell, |A_i ∩ cell_j| / Δx)`.
fn overlap_weights(grid: &Grid, partition: &Partition) -> Vec<Vec<(usize, f64)>> {
    let dx = grid.dx();
    (0..grid.n_cells())
        .map(|j| {
            let (a, b) = grid.cell_bounds(j);
            partition
                .cells()
                .enumerate()
                .filter_map(|(i, (lo, hi))| {
                    let w = (b.min(hi) - a.max(lo)).max(0.0) / dx;
                    (w > 1e-14).then_some((i, w))
                })
                .collect()
        })
        .collect()
}

/// Monte Carlo realization of the partition projection `μ_A`: for every
/// member `u_m` and realization `ρ`, one point `X_i ~ Uniform(A_i)` is drawn
/// per partition cell from stream `(seed, m, ρ)`, and the piecewise constant
/// `Σ_i u_m(X_i) 1_{A_i}` is averaged back onto the grid. Output member
/// `m·R + ρ`.
pub fn project_ensemble(
    ensemble: &Ensemble,
    partition: &Partition,
    realizations: usize,
    seed: u64,
) -> Result<Ensemble> {
    let grid = *ensemble.grid();
    if realizations == 0 {
        return Err(Error::arg("realizations", "must be >= 1"));
    }
    let tol = 1e-9 * grid.length();
    if (partition.left() - grid.left()).abs() > tol
        || (partition.right() - grid.right()).abs() > tol
    {
        return Err(Error::InvalidPartition(format!(
            "partition [{}, {}] does not cover the grid domain [{}, {}]",
            partition.left(),
            partition.right(),
            grid.left(),
            grid.right()
        )));
    }
    let centers = grid.centers();
    for (i, (lo, hi)) in partition.cells().enumerate() {
        if !centers.iter().any(|&c| c >= lo && c < hi) {
            return Err(Error::InvalidPartition(format!(
                "partition cell {i} = [{lo}, {hi}) contains no grid cell center"
            )));
        }
    }
    let weights = overlap_weights(&grid, partition);
    let cells: Vec<(f64, f64)> = partition.cells().collect();
    let jobs: Vec<(usize, usize)> = (0..ensemble.len())
        .flat_map(|m| (0..realizations).map(move |rho| (m, rho)))
        .collect();
    let members = jobs
        .par_iter()
        .map(|&(m, rho)| {
            let u = ensemble.member(m);
            let mut rng = stream_rng(seed, &[m as u64, rho as u64]);
            let xi = cells
                .iter()
                .map(|&(lo, hi)| {
                    let mut x = lo + (hi - lo) * rng.gen::<f64>();
                    if x >= hi {
                        x = lo;
                    }
                    u.eval_at(x)
                })
                .collect::<Result<Vec<f64>>>()?;
            let values = weights
                .iter()
                .map(|w| w.iter().map(|&(i, a)| a * xi[i]).sum())
                .collect();
            GridFunction::new(grid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(members, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;
    use std::f64::consts::TAU;

    fn torus(n: usize) -> Grid {
        Grid::unit_torus(n).unwrap()
    }

    fn sample_ensemble() -> Ensemble {
        let g = torus(16);
        let members = (0..5)
            .map(|m| {
                GridFunction::from_centers(g, |x| (TAU * x + m as f64).sin() + 0.1 * m as f64)
                    .unwrap()
            })
            .collect();
        Ensemble::new(members, 0).unwrap()
    }

    #[test]
    fn singleton_marginals_are_atomic() {
        let g = torus(4);
        let u = GridFunction::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e = Ensemble::singleton(u);
        let s = marginal_samples(&e, &[0.3]).unwrap();
        assert_eq!(s.atoms, vec![vec![2.0]]);
        assert_eq!(moment(&e, &[0.1, 0.3, 0.8]).unwrap(), 1.0 * 2.0 * 4.0);
        assert_eq!(
            flux_moment(&e, &[0.3], &FluxModel::Burgers, 0).unwrap(),
            2.0
        );
    }

    #[test]
    fn diagonal_marginal_repeats_coordinates() {
        let e = sample_ensemble();
        let s = marginal_samples(&e, &[0.4, 0.4]).unwrap();
        assert!(s.atoms.iter().all(|a| a[0] == a[1]));
        let one = marginal_samples(&e, &[0.4]).unwrap();
        assert_eq!(s.coordinate(0), one.coordinate(0));
    }

    #[test]
    fn permuting_points_permutes_atoms() {
        let e = sample_ensemble();
        let a = marginal_samples(&e, &[0.1, 0.5, 0.9]).unwrap();
        let b = marginal_samples(&e, &[0.9, 0.1, 0.5]).unwrap();
        for (x, y) in a.atoms.iter().zip(&b.atoms) {
            assert_eq!(vec![x[2], x[0], x[1]], *y);
        }
    }

    #[test]
    fn point_count_and_domain_guards() {
        let e = sample_ensemble();
        assert!(moment(&e, &[]).is_err());
        assert!(moment(&e, &[0.1; 7]).is_err());
        assert!(flux_moment(&e, &[0.1, 0.2], &FluxModel::Burgers, 2).is_err());
        let b = Grid::new(0.0, 1.0, 4, false).unwrap();
        let e = Ensemble::singleton(GridFunction::constant(b, 1.0).unwrap());
        assert!(matches!(
            moment(&e, &[1.5]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn advection_flux_moment_equals_moment() {
        let e = sample_ensemble();
        let m = FluxModel::LinearAdvection { speed: 1.0 };
        let pts = [0.2, 0.7];
        for i in 0..2 {
            assert_eq!(
                flux_moment(&e, &pts, &m, i).unwrap(),
                moment(&e, &pts).unwrap()
            );
        }
    }

    #[test]
    fn flux_moment_of_constant_members() {
        // u_m ≡ c_m: (1/M) Σ (c_m²/2) c_m
        let g = torus(8);
        let cs = [0.5, -1.0, 2.0];
        let members = cs
            .iter()
            .map(|&c| GridFunction::constant(g, c).unwrap())
            .collect();
        let e = Ensemble::new(members, 0).unwrap();
        let expected = cs.iter().map(|c| 0.5 * c * c * c).sum::<f64>() / 3.0;
        let got = flux_moment(&e, &[0.1, 0.6], &FluxModel::Burgers, 0).unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn consistency_with_marginalized_estimator() {
        let e = sample_ensemble();
        let pts = [0.05, 0.35, 0.6, 0.95];
        for k in 2..=4 {
            let lower = moment(&e, &pts[..k - 1]).unwrap();
            let s = marginal_samples(&e, &pts[..k]).unwrap();
            let marginalized = s.expectation(|a| a[..k - 1].iter().product());
            assert!((lower - marginalized).abs() <= 1e-12);
        }
    }

    #[test]
    fn structure_function_of_constants_is_zero() {
        let g = torus(32);
        let members = (0..3)
            .map(|m| GridFunction::constant(g, m as f64).unwrap())
            .collect();
        let e = Ensemble::new(members, 0).unwrap();
        for r in [0.05, 0.1, 0.3] {
            assert_eq!(structure_function(&e, r, 1.0).unwrap().value, 0.0);
        }
    }

    #[test]
    fn structure_function_flags_sub_cell_radius() {
        let e = sample_ensemble();
        let s = structure_function(&e, 0.01, 1.0).unwrap();
        assert!(s.under_resolved);
        assert_eq!(s.value, 0.0);
        assert!(!structure_function(&e, 0.2, 1.0).unwrap().under_resolved);
        assert!(structure_function(&e, 0.6, 1.0).is_err());
        assert!(structure_function(&e, 0.1, 0.5).is_err());
    }

    #[test]
    fn structure_function_bounded_domain() {
        // u(x) = x on [0,1] with 4 cells, r = 0.3 → offsets |k| ≤ 1.
        let g = Grid::new(0.0, 1.0, 4, false).unwrap();
        let u = GridFunction::from_centers(g, |x| x).unwrap();
        let e = Ensemble::singleton(u);
        let s = structure_function(&e, 0.3, 1.0).unwrap().value;
        // edge cells average over 2 cells, interior over 3
        let expected = 0.25 * (0.25 / 2.0 + 0.5 / 3.0 + 0.5 / 3.0 + 0.25 / 2.0);
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn aligned_projection_is_identity() {
        let e = sample_ensemble();
        let a = Partition::uniform_on(e.grid(), e.grid().n_cells()).unwrap();
        let p = project_ensemble(&e, &a, 3, 11).unwrap();
        assert_eq!(p.len(), 15);
        for m in 0..5 {
            for rho in 0..3 {
                assert_eq!(p.member(3 * m + rho), e.member(m));
            }
        }
    }

    #[test]
    fn projection_of_constant_is_constant() {
        let g = torus(20);
        let e = Ensemble::singleton(GridFunction::constant(g, 2.5).unwrap());
        let a = Partition::new(vec![0.0, 0.13, 0.5, 0.77, 1.0]).unwrap();
        let p = project_ensemble(&e, &a, 4, 1).unwrap();
        for u in p.members() {
            assert!(u.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
        }
    }

    #[test]
    fn projection_rejects_bad_partitions() {
        let e = sample_ensemble();
        let empty_cell = Partition::new(vec![0.0, 0.01, 1.0]).unwrap();
        assert!(project_ensemble(&e, &empty_cell, 1, 0).is_err());
        let short = Partition::uniform(0.0, 0.5, 2).unwrap();
        assert!(project_ensemble(&e, &short, 1, 0).is_err());
        let ok = Partition::uniform(0.0, 1.0, 4).unwrap();
        assert!(project_ensemble(&e, &ok, 0, 0).is_err());
    }

    #[test]
    fn whole_domain_projection_mean_is_domain_average() {
        let g = torus(64);
        let u = GridFunction::from_centers(g, |x| x * x).unwrap();
        let avg = u.integral();
        let e = Ensemble::singleton(u);
        let a = Partition::uniform(0.0, 1.0, 1).unwrap();
        let r = 20_000;
        let p = project_ensemble(&e, &a, r, 5).unwrap();
        let mean = p.members().iter().map(|v| v.values()[0]).sum::<f64>() / r as f64;
        // std of u(X) for X ~ U(0,1) is ~0.30
        assert!(
            (mean - avg).abs() < 5.0 * 0.3 / (r as f64).sqrt(),
            "{mean} vs {avg}"
        );
    }
}
