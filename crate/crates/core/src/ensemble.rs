//! Equal-weight ensembles as empirical probability measures on `L^p`.
//!
//! An [`Ensemble`] `{u_1, …, u_M}` stands for `μ = (1/M) Σ_m δ_{u_m}`.
//! Rational mixture weights are realized by member multiplicity, and the
//! part boundaries of a mixture are kept so that a decomposition
//! `Σ_i α_i μ_i = μ` can be recovered later.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::rng::{fill_standard_normal, stream_rng};
use crate::solver::{evolve_shared, FluxModel};

/// Largest ensemble `mixture` will build when searching for a common
/// multiplicity.
pub const MAX_MIXTURE_MEMBERS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<GridFunction>,
    seed_tag: u64,
    /// Part boundaries `0 = b_0 < b_1 < … < b_P = M`.
    part_bounds: Vec<usize>,
}

impl Ensemble {
    pub fn new(members: Vec<GridFunction>, seed_tag: u64) -> Result<Self> {
        let Some(first) = members.first() else {
            return Err(Error::InvalidEnsemble(
                "an ensemble needs at least one member".into(),
            ));
        };
        let grid = *first.grid();
        for (m, u) in members.iter().enumerate() {
            if !grid.matches(u.grid()) {
                return Err(Error::GridMismatch(format!(
                    "member {m} lives on {} but member 0 on {grid}",
                    u.grid()
                )));
            }
        }
        let len = members.len();
        Ok(Self {
            members,
            seed_tag,
            part_bounds: vec![0, len],
        })
    }

    pub fn singleton(u: GridFunction) -> Self {
        Self::new(vec![u], 0).expect("one member")
    }

    pub fn grid(&self) -> &Grid {
        self.members[0].grid()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    pub fn member(&self, m: usize) -> &GridFunction {
        &self.members[m]
    }

    pub fn seed_tag(&self) -> u64 {
        self.seed_tag
    }

    pub fn with_seed_tag(mut self, seed_tag: u64) -> Self {
        self.seed_tag = seed_tag;
        self
    }

    pub fn part_bounds(&self) -> &[usize] {
        &self.part_bounds
    }

    /// Recorded decomposition as `(α_i, member range)`.
    pub fn parts(&self) -> Vec<(f64, Range<usize>)> {
        let m = self.len() as f64;
        self.part_bounds
            .windows(2)
            .map(|w| ((w[1] - w[0]) as f64 / m, w[0]..w[1]))
            .collect()
    }

    pub fn with_part_bounds(mut self, bounds: Vec<usize>) -> Result<Self> {
        let ok = bounds.len() >= 2
            && bounds[0] == 0
            && *bounds.last().unwrap() == self.len()
            && bounds.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidEnsemble(format!(
                "part bounds {bounds:?} must increase strictly from 0 to {}",
                self.len()
            )));
        }
        self.part_bounds = bounds;
        Ok(self)
    }

    /// Sub-ensemble of the given members (single part).
    pub fn select(&self, indices: &[usize]) -> Result<Ensemble> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidEnsemble(format!(
                "member index {bad} out of range (M = {})",
                self.len()
            )));
        }
        Ensemble::new(
            indices.iter().map(|&i| self.members[i].clone()).collect(),
            self.seed_tag,
        )
    }

    /// Repeats every member `times` times in place; the empirical measure
    /// is unchanged.
    pub fn repeat_each(&self, times: usize) -> Result<Ensemble> {
        if times == 0 {
            return Err(Error::arg("times", "must be >= 1"));
        }
        let members = self
            .members
            .iter()
            .flat_map(|u| std::iter::repeat_n(u.clone(), times))
            .collect();
        let bounds = self.part_bounds.iter().map(|b| b * times).collect();
        Ensemble::new(members, self.seed_tag)?.with_part_bounds(bounds)
    }

    /// Same measure realized with exactly `len` members.
    pub fn resized(&self, len: usize) -> Result<Ensemble> {
        if len == 0 || !len.is_multiple_of(self.len()) {
            return Err(Error::arg(
                "len",
                format!("{len} is not a positive multiple of {}", self.len()),
            ));
        }
        self.repeat_each(len / self.len())
    }

    /// Pointwise ensemble mean, summed in member order.
    pub fn mean_field(&self) -> GridFunction {
        let n = self.grid().n_cells();
        let mut acc = vec![0.0; n];
        for u in &self.members {
            for (a, v) in acc.iter_mut().zip(u.values()) {
                *a += v;
            }
        }
        let m = self.len() as f64;
        GridFunction::new(*self.grid(), acc.into_iter().map(|a| a / m).collect())
            .expect("mean of finite values")
    }

    /// `(1/M) Σ_m ‖u_m‖_p^p`, the `L^p` bound of the one-point marginal.
    pub fn mean_lp_power(&self, p: f64) -> Result<f64> {
        let mut total = 0.0;
        for u in &self.members {
            total += u.lp_norm(p)?.powf(p);
        }
        Ok(total / self.len() as f64)
    }
}

/// States of an evolving ensemble at increasing times, with member identity
/// preserved along time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<Ensemble>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Ensemble>) -> Result<Self> {
        validate_times(&times).map_err(|e| Error::InvalidTrajectory(e.to_string()))?;
        if times.len() != states.len() {
            return Err(Error::InvalidTrajectory(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        let first = &states[0];
        for (k, s) in states.iter().enumerate().skip(1) {
            if s.len() != first.len() {
                return Err(Error::InvalidTrajectory(format!(
                    "state {k} has {} members, state 0 has {}",
                    s.len(),
                    first.len()
                )));
            }
            if !s.grid().matches(first.grid()) {
                return Err(Error::InvalidTrajectory(format!(
                    "state {k} is on a different grid"
                )));
            }
        }
        Ok(Self { times, states })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Ensemble] {
        &self.states
    }

    pub fn initial(&self) -> &Ensemble {
        &self.states[0]
    }

    pub fn grid(&self) -> &Grid {
        self.states[0].grid()
    }

    pub fn n_members(&self) -> usize {
        self.states[0].len()
    }

    /// Restriction to the given member indices, at every time.
    pub fn select(&self, indices: &[usize]) -> Result<Trajectory> {
        let states = self
            .states
            .iter()
            .map(|s| s.select(indices))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(self.times.clone(), states)
    }

    /// The decomposition recorded on the initial ensemble (mixture
    /// provenance) as weighted sub-trajectories.
    pub fn decompose(&self) -> Result<Vec<(f64, Trajectory)>> {
        self.initial()
            .parts()
            .into_iter()
            .map(|(alpha, range)| {
                let idx: Vec<usize> = range.collect();
                Ok((alpha, self.select(&idx)?))
            })
            .collect()
    }

    /// An arbitrary decomposition: `groups` must partition `0..M`; group `i`
    /// gets weight `|group_i| / M`.
    pub fn regroup(&self, groups: &[Vec<usize>]) -> Result<Vec<(f64, Trajectory)>> {
        let m = self.n_members();
        let mut seen = vec![false; m];
        for g in groups {
            if g.is_empty() {
                return Err(Error::arg("groups", "empty group"));
            }
            for &i in g {
                if i >= m || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::arg(
                        "groups",
                        format!("index {i} out of range or repeated"),
                    ));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::arg("groups", "groups do not cover every member"));
        }
        groups
            .iter()
            .map(|g| Ok((g.len() as f64 / m as f64, self.select(g)?)))
            .collect()
    }
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::arg("times", "must start at 0"));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::arg("times", "must be finite"));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::arg(
            "times",
            format!("must be strictly increasing ({} then {})", w[0], w[1]),
        ));
    }
    Ok(())
}

/// Canonical statistical solution `μ_t = S_t # μ̄`: every member is evolved by
/// the entropy solver and recorded at `times`.
pub fn canonical_solution(
    initial: &Ensemble,
    model: &FluxModel,
    times: &[f64],
    cfl: f64,
) -> Result<Trajectory> {
    let mut out = canonical_solutions(std::slice::from_ref(initial), model, times, cfl)?;
    Ok(out.pop().expect("one trajectory"))
}

/// Canonical solutions of several initial ensembles advanced together, with
/// one global time step per update shared by every member of every
/// ensemble.
pub fn canonical_solutions(
    initials: &[Ensemble],
    model: &FluxModel,
    times: &[f64],
    cfl: f64,
) -> Result<Vec<Trajectory>> {
    validate_times(times)?;
    let Some(first) = initials.first() else {
        return Ok(Vec::new());
    };
    for e in initials {
        first.grid().ensure_matches(e.grid())?;
    }
    let sizes: Vec<usize> = initials.iter().map(Ensemble::len).collect();
    let mut current: Vec<GridFunction> = initials
        .iter()
        .flat_map(|e| e.members().iter().cloned())
        .collect();
    let split = |flat: &[GridFunction]| -> Result<Vec<Ensemble>> {
        let mut offset = 0;
        initials
            .iter()
            .zip(&sizes)
            .map(|(e, &len)| {
                let members = flat[offset..offset + len].to_vec();
                offset += len;
                Ensemble::new(members, e.seed_tag())?.with_part_bounds(e.part_bounds().to_vec())
            })
            .collect()
    };
    let mut per_time: Vec<Vec<Ensemble>> = vec![initials.to_vec()];
    for w in times.windows(2) {
        current = evolve_shared(&current, model, w[1] - w[0], cfl)?;
        per_time.push(split(&current)?);
    }
    (0..initials.len())
        .map(|i| {
            let states = per_time.iter().map(|row| row[i].clone()).collect();
            Trajectory::new(times.to_vec(), states)
        })
        .collect()
}

type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Covariance function `m²(x, y)` of a centered Gaussian measure.
#[derive(Clone)]
pub enum CovarianceKernel {
    /// `min(x, y)`: Brownian motion on `x, y ≥ 0`.
    Brownian,
    /// `exp(-|x - y| / ℓ)`.
    Exponential {
        length_scale: f64,
    },
    Custom {
        name: String,
        kernel: KernelFn,
    },
}

impl fmt::Debug for CovarianceKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CovarianceKernel({})", self.name())
    }
}

impl CovarianceKernel {
    pub fn from_name(name: &str, length_scale: f64) -> Result<Self> {
        match name {
            "brownian" => Ok(CovarianceKernel::Brownian),
            "exponential" => {
                if !(length_scale > 0.0 && length_scale.is_finite()) {
                    return Err(Error::arg("length_scale", "must be positive"));
                }
                Ok(CovarianceKernel::Exponential { length_scale })
            }
            other => Err(Error::Unknown {
                kind: "kernel",
                name: other.to_string(),
            }),
        }
    }

    pub fn custom(
        name: impl Into<String>,
        kernel: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CovarianceKernel::Custom {
            name: name.into(),
            kernel: Arc::new(kernel),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            CovarianceKernel::Brownian => "brownian",
            CovarianceKernel::Exponential { .. } => "exponential",
            CovarianceKernel::Custom { name, .. } => name,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            CovarianceKernel::Brownian => x.min(y),
            CovarianceKernel::Exponential { length_scale } => (-(x - y).abs() / length_scale).exp(),
            CovarianceKernel::Custom { kernel, .. } => kernel(x, y),
        }
    }

    /// Gram matrix `C_ij = m²(x_i, x_j)` at cell centers.
    pub fn gram(&self, grid: &Grid) -> DMatrix<f64> {
        let xs = grid.centers();
        let n = xs.len();
        DMatrix::from_fn(n, n, |i, j| self.eval(xs[i], xs[j]))
    }

    /// Smallest eigenvalue of the (unregularized) Gram matrix relative to its
    /// largest diagonal entry.
    pub fn relative_min_eigenvalue(&self, grid: &Grid) -> f64 {
        let c = self.gram(grid);
        let max_diag = c.diagonal().iter().copied().fold(0.0, f64::max);
        let min_eig = c
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if max_diag > 0.0 {
            min_eig / max_diag
        } else {
            min_eig
        }
    }
}

/// Nugget added to the Gram diagonal before factorization.
pub fn nugget(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows() as f64;
    1e-10 * (gram.trace() / n + 1.0)
}

/// Draws `members` samples of the centered Gaussian measure with covariance
/// `kernel`, evaluated at cell centers of `grid`. Member `m` draws its
/// normals from stream `(seed, m)` via Box–Muller and is `L z_m` with `L` the
/// Cholesky factor of the nugget-regularized Gram matrix.
pub fn sample_gaussian(
    kernel: &CovarianceKernel,
    grid: &Grid,
    members: usize,
    seed: u64,
) -> Result<Ensemble> {
    if members == 0 {
        return Err(Error::arg("members", "must be >= 1"));
    }
    let n = grid.n_cells();
    let mut gram = kernel.gram(grid);
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveSemidefinite(
            "non-finite kernel values".into(),
        ));
    }
    if gram.iter().all(|&v| v == 0.0) {
        // Degenerate measure δ_0.
        let zero = GridFunction::constant(*grid, 0.0)?;
        return Ensemble::new(vec![zero; members], seed);
    }
    let eps = nugget(&gram);
    for i in 0..n {
        gram[(i, i)] += eps;
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::NotPositiveSemidefinite(format!(
            "Cholesky factorization failed after adding nugget {eps:e} ({} kernel on {grid})",
            kernel.name()
        ))
    })?;
    let l = chol.l();
    // Packed row-major lower triangle.
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..=i).map(|j| l[(i, j)]).collect())
        .collect();
    let out = (0..members)
        .into_par_iter()
        .map(|m| {
            let mut rng = stream_rng(seed, &[m as u64]);
            let mut z = vec![0.0; n];
            fill_standard_normal(&mut rng, &mut z);
            let values = rows
                .iter()
                .map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum())
                .collect();
            GridFunction::new(*grid, values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ensemble::new(out, seed)
}

/// Mixture `Σ_i α_i μ_i`, realized by repeating members: the smallest total
/// count `N` is chosen such that part `i` fills `α_i N` slots with each of its
/// members repeated equally often. Part boundaries are recorded.
pub fn mixture(parts: &[(f64, Ensemble)]) -> Result<Ensemble> {
    if parts.is_empty() {
        return Err(Error::arg("parts", "need at least one part"));
    }
    let grid = *parts[0].1.grid();
    let mut total = 0.0;
    for (i, (alpha, e)) in parts.iter().enumerate() {
        if !(*alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::arg(
                "weights",
                format!("α_{i} = {alpha} must be positive"),
            ));
        }
        grid.ensure_matches(e.grid())?;
        total += alpha;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::arg(
            "weights",
            format!("must sum to 1, sum is {total}"),
        ));
    }
    let is_whole = |x: f64| (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0);
    let count = (1..=MAX_MIXTURE_MEMBERS).find(|&n| {
        parts.iter().all(|(alpha, e)| {
            is_whole(alpha * n as f64 / e.len() as f64) && (alpha * n as f64).round() >= 1.0
        })
    });
    let Some(count) = count else {
        let sizes: Vec<usize> = parts.iter().map(|(_, e)| e.len()).collect();
        return Err(Error::NonRealizableWeights(format!(
            "no member count N <= {MAX_MIXTURE_MEMBERS} makes every α_i·N a whole multiple of the \
             part sizes {sizes:?}; weights must share a common denominator N of that form"
        )));
    };
    let mut members = Vec::with_capacity(count);
    let mut bounds = vec![0];
    for (alpha, e) in parts {
        let reps = (alpha * count as f64 / e.len() as f64).round() as usize;
        for u in e.members() {
            members.extend(std::iter::repeat_n(u.clone(), reps));
        }
        bounds.push(members.len());
    }
    Ensemble::new(members, parts[0].1.seed_tag())?.with_part_bounds(bounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize) -> Grid {
        Grid::unit_torus(n).unwrap()
    }

    fn c(n: usize, v: f64) -> GridFunction {
        GridFunction::constant(g(n), v).unwrap()
    }

    #[test]
    fn ensembles_require_shared_grid() {
        assert!(Ensemble::new(vec![], 0).is_err());
        assert!(Ensemble::new(vec![c(4, 1.0), c(5, 1.0)], 0).is_err());
        let e = Ensemble::new(vec![c(4, 1.0), c(4, 3.0)], 9).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.seed_tag(), 9);
        assert_eq!(e.mean_field().values(), &[2.0; 4]);
    }

    #[test]
    fn mixture_examples() {
        let u = c(4, 1.0);
        let v = c(4, 2.0);
        let e = Ensemble::new(vec![u.clone(), v.clone()], 0).unwrap();
        let single = mixture(&[(1.0, e.clone())]).unwrap();
        assert_eq!(single.members(), e.members());

        let two = mixture(&[
            (0.5, Ensemble::singleton(u.clone())),
            (0.5, Ensemble::singleton(v.clone())),
        ])
        .unwrap();
        assert_eq!(two.members(), &[u.clone(), v.clone()]);

        let quarter = mixture(&[
            (0.25, Ensemble::singleton(u.clone())),
            (0.75, Ensemble::singleton(v.clone())),
        ])
        .unwrap();
        assert_eq!(
            quarter.members(),
            &[u.clone(), v.clone(), v.clone(), v.clone()]
        );
        assert_eq!(quarter.part_bounds(), &[0, 1, 4]);
        let parts = quarter.parts();
        assert_eq!(parts[0], (0.25, 0..1));
        assert_eq!(parts[1], (0.75, 1..4));
    }

    #[test]
    fn mixture_of_multi_member_parts() {
        // 1/3 of a 2-member ensemble + 2/3 of a singleton -> N = 6? smallest N
        // with N/3 a multiple of 2 and 2N/3 whole is N = 6.
        let a = Ensemble::new(vec![c(2, 0.0), c(2, 1.0)], 0).unwrap();
        let b = Ensemble::singleton(c(2, 5.0));
        let m = mixture(&[(1.0 / 3.0, a), (2.0 / 3.0, b)]).unwrap();
        assert_eq!(m.len(), 6);
        let vals: Vec<f64> = m.members().iter().map(|u| u.values()[0]).collect();
        assert_eq!(vals, vec![0.0, 1.0, 5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn mixture_rejects_bad_weights() {
        let u = Ensemble::singleton(c(2, 0.0));
        let v = Ensemble::singleton(c(2, 1.0));
        assert!(mixture(&[(0.5, u.clone()), (0.4, v.clone())]).is_err());
        assert!(mixture(&[(0.0, u.clone()), (1.0, v.clone())]).is_err());
        let irrational = 1.0 / std::f64::consts::PI;
        assert!(matches!(
            mixture(&[(irrational, u), (1.0 - irrational, v)]),
            Err(Error::NonRealizableWeights(_))
        ));
    }

    #[test]
    fn zero_kernel_gives_zero_members() {
        let k = CovarianceKernel::custom("zero", |_, _| 0.0);
        let e = sample_gaussian(&k, &g(16), 5, 1).unwrap();
        assert!(e
            .members()
            .iter()
            .all(|u| u.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn indefinite_kernel_is_rejected() {
        let k =
            CovarianceKernel::custom("bad", |x, y| if (x - y).abs() < 1e-12 { 1.0 } else { -1.0 });
        assert!(matches!(
            sample_gaussian(&k, &g(8), 2, 0),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn brownian_gram_is_psd_and_symmetric() {
        let grid = Grid::new(0.0, 1.0, 32, false).unwrap();
        let k = CovarianceKernel::Brownian;
        assert!(k.relative_min_eigenvalue(&grid) > -1e-8);
        let e = CovarianceKernel::Exponential { length_scale: 0.2 };
        assert!(e.relative_min_eigenvalue(&grid) > -1e-8);
        for &(x, y) in &[(0.1, 0.7), (0.33, 0.02), (0.5, 0.5)] {
            assert!((k.eval(x, y) - k.eval(y, x)).abs() <= 1e-14);
            assert!((e.eval(x, y) - e.eval(y, x)).abs() <= 1e-14);
        }
    }

    #[test]
    fn gaussian_sampling_is_reproducible() {
        let grid = Grid::new(0.0, 1.0, 16, false).unwrap();
        let k = CovarianceKernel::Brownian;
        let a = sample_gaussian(&k, &grid, 50, 42).unwrap();
        let b = sample_gaussian(&k, &grid, 50, 42).unwrap();
        let c = sample_gaussian(&k, &grid, 50, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Member streams are keyed by index: a longer ensemble extends a shorter one.
        let longer = sample_gaussian(&k, &grid, 60, 42).unwrap();
        assert_eq!(&longer.members()[..50], a.members());
    }

    #[test]
    fn trajectory_validation() {
        let e = Ensemble::singleton(c(4, 1.0));
        assert!(Trajectory::new(vec![0.1], vec![e.clone()]).is_err());
        assert!(Trajectory::new(vec![0.0, 0.0], vec![e.clone(), e.clone()]).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![e.clone()]).is_err());
        let two = Ensemble::new(vec![c(4, 1.0), c(4, 2.0)], 0).unwrap();
        assert!(Trajectory::new(vec![0.0, 1.0], vec![e.clone(), two]).is_err());
        assert!(Trajectory::new(vec![0.0, 1.0], vec![e.clone(), e]).is_ok());
    }

    #[test]
    fn canonical_solution_of_time_zero_is_initial() {
        let e = Ensemble::new(vec![c(8, 0.5), c(8, -0.5)], 3).unwrap();
        let t = canonical_solution(&e, &FluxModel::Burgers, &[0.0], 0.9).unwrap();
        assert_eq!(t.states().len(), 1);
        assert_eq!(t.initial(), &e);
    }

    #[test]
    fn canonical_solution_keeps_mixture_parts() {
        let u = GridFunction::from_centers(g(32), |x| (std::f64::consts::TAU * x).sin()).unwrap();
        let v = c(32, 0.2);
        let m = mixture(&[
            (0.25, Ensemble::singleton(u)),
            (0.75, Ensemble::singleton(v)),
        ])
        .unwrap();
        let traj = canonical_solution(&m, &FluxModel::Burgers, &[0.0, 0.1, 0.2], 0.9).unwrap();
        let parts = traj.decompose().unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, 0.25);
        assert_eq!(parts[1].1.n_members(), 3);
        let regrouped = traj.regroup(&[vec![0, 2], vec![1, 3]]).unwrap();
        assert_eq!(regrouped[0].0, 0.5);
        assert!(traj.regroup(&[vec![0, 1]]).is_err());
        assert!(traj.regroup(&[vec![0, 1, 2], vec![2, 3]]).is_err());
    }
}
