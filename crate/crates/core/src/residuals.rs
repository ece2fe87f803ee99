//! Weak-form residuals of the moment hierarchy and of the Kruzkov entropy
//! inequalities, evaluated on a [`Trajectory`].
//!
//! Quadrature: midpoint rule at cell centers in space, left-endpoint rule on
//! the trajectory's time nodes. Test-function derivatives are analytic.

use rayon::prelude::*;

use crate::correlation::{flux_moment, moment};
use crate::ensemble::Trajectory;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::solver::FluxModel;

/// Relative tolerance of the one-sided entropy checks.
pub const ENTROPY_RTOL: f64 = 1e-6;

/// One tensor-product bump `θ(t) Π_i ψ(x_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
    pub t1: f64,
    pub t2: f64,
}

fn q(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

fn dq(s: f64) -> f64 {
    if s > 0.0 {
        q(s) / (s * s)
    } else {
        0.0
    }
}

impl Bump {
    fn offset(&self, grid: &Grid, x: f64) -> f64 {
        grid.displacement(x, self.center) / self.half_width
    }

    /// `ψ(x) = exp(1 − 1/(1 − s²))`, `s = (x − x₀)/w`.
    pub fn psi(&self, grid: &Grid, x: f64) -> f64 {
        let s = self.offset(grid, x);
        if s.abs() < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    }

    pub fn psi_prime(&self, grid: &Grid, x: f64) -> f64 {
        let s = self.offset(grid, x);
        if s.abs() < 1.0 {
            let d = 1.0 - s * s;
            let psi = (1.0 - 1.0 / d).exp();
            psi * (-2.0 * s / (d * d)) / self.half_width
        } else {
            0.0
        }
    }

    /// Smooth cutoff: 1 up to `t1`, 0 from `t2` on.
    pub fn theta(&self, t: f64) -> f64 {
        if t <= self.t1 {
            return 1.0;
        }
        if t >= self.t2 {
            return 0.0;
        }
        let s = (t - self.t1) / (self.t2 - self.t1);
        let (a, b) = (q(s), q(1.0 - s));
        b / (a + b)
    }

    pub fn theta_prime(&self, t: f64) -> f64 {
        if t <= self.t1 || t >= self.t2 {
            return 0.0;
        }
        let len = self.t2 - self.t1;
        let s = (t - self.t1) / len;
        let (a, b) = (q(s), q(1.0 - s));
        -(a * dq(1.0 - s) + b * dq(s)) / ((a + b) * (a + b)) / len
    }
}

/// A finite linear combination of tensor-product bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    terms: Vec<(f64, Bump)>,
}

impl TestFunction {
    pub fn new(center: f64, half_width: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite() && center.is_finite()) {
            return Err(Error::InvalidTestFunction(format!(
                "need finite center and positive half-width, got x0 = {center}, w = {half_width}"
            )));
        }
        if !(t1 >= 0.0 && t1 < t2 && t2.is_finite()) {
            return Err(Error::InvalidTestFunction(format!(
                "time window must satisfy 0 <= t1 < t2, got ({t1}, {t2})"
            )));
        }
        Ok(Self {
            terms: vec![(
                1.0,
                Bump {
                    center,
                    half_width,
                    t1,
                    t2,
                },
            )],
        })
    }

    /// `a φ₁ + b φ₂`.
    pub fn combine(a: f64, phi1: &TestFunction, b: f64, phi2: &TestFunction) -> TestFunction {
        let terms = phi1
            .terms
            .iter()
            .map(|&(w, t)| (a * w, t))
            .chain(phi2.terms.iter().map(|&(w, t)| (b * w, t)))
            .collect();
        TestFunction { terms }
    }

    pub fn terms(&self) -> &[(f64, Bump)] {
        &self.terms
    }

    /// Latest time at which the test function is nonzero.
    pub fn t_end(&self) -> f64 {
        self.terms.iter().map(|(_, b)| b.t2).fold(0.0, f64::max)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.terms.iter().all(|(w, _)| *w >= 0.0)
    }

    pub fn validate_on(&self, grid: &Grid) -> Result<()> {
        for (_, b) in &self.terms {
            if grid.is_periodic() {
                if b.half_width > 0.5 * grid.length() {
                    return Err(Error::InvalidTestFunction(format!(
                        "half-width {} exceeds half the period {}",
                        b.half_width,
                        0.5 * grid.length()
                    )));
                }
            } else if b.center - b.half_width < grid.left()
                || b.center + b.half_width > grid.right()
            {
                return Err(Error::InvalidTestFunction(format!(
                    "support [{}, {}] leaves the domain [{}, {}]",
                    b.center - b.half_width,
                    b.center + b.half_width,
                    grid.left(),
                    grid.right()
                )));
            }
        }
        Ok(())
    }

    /// `φ(x, t)` for a k-point argument.
    pub fn value(&self, grid: &Grid, x: &[f64], t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(w, b)| w * b.theta(t) * x.iter().map(|&xi| b.psi(grid, xi)).product::<f64>())
            .sum()
    }

    pub fn time_derivative(&self, grid: &Grid, x: &[f64], t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(w, b)| {
                w * b.theta_prime(t) * x.iter().map(|&xi| b.psi(grid, xi)).product::<f64>()
            })
            .sum()
    }

    /// `∂φ/∂x_i`.
    pub fn space_derivative(&self, grid: &Grid, x: &[f64], t: f64, i: usize) -> f64 {
        self.terms
            .iter()
            .map(|(w, b)| {
                let spatial: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(l, &xl)| {
                        if l == i {
                            b.psi_prime(grid, xl)
                        } else {
                            b.psi(grid, xl)
                        }
                    })
                    .product();
                w * b.theta(t) * spatial
            })
            .sum()
    }
}

fn check_time_coverage(traj: &Trajectory, phi: &TestFunction) -> Result<()> {
    let last = *traj.times().last().unwrap();
    if last < phi.t_end() {
        return Err(Error::InvalidTrajectory(format!(
            "trajectory ends at t = {last}, before the test function's cutoff t2 = {}",
            phi.t_end()
        )));
    }
    Ok(())
}

fn check_order(k: usize) -> Result<()> {
    if (1..=3).contains(&k) {
        Ok(())
    } else {
        Err(Error::arg(
            "k",
            format!("residual order must be 1, 2 or 3, got {k}"),
        ))
    }
}

/// Per-member spatial integrals `(Σ_j Δx g(u_j) ψ(x_j), Σ_j Δx h(u_j) ψ'(x_j))`.
fn member_integrals(
    values: &[f64],
    psi: &[f64],
    dpsi: &[f64],
    dx: f64,
    g: impl Fn(f64) -> f64,
    h: impl Fn(f64) -> f64,
) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for ((&u, &p), &dp) in values.iter().zip(psi).zip(dpsi) {
        a += g(u) * p;
        b += h(u) * dp;
    }
    (a * dx, b * dx)
}

/// Weak residual of the k-th moment equation,
/// `∫∫ m^k ∂_tφ + Σ_i ⟨ν^k, ξ_1⋯f(ξ_i)⋯ξ_k⟩ ∂_{x_i}φ dx dt + ∫ m̄^k φ(·, 0) dx`.
///
/// Uses the tensor structure of `φ`: for each member the k-fold cell sum
/// factorizes into products of one-dimensional integrals.
pub fn moment_residual(
    traj: &Trajectory,
    k: usize,
    model: &FluxModel,
    phi: &TestFunction,
) -> Result<f64> {
    check_order(k)?;
    let grid = *traj.grid();
    phi.validate_on(&grid)?;
    check_time_coverage(traj, phi)?;
    let dx = grid.dx();
    let centers = grid.centers();
    let times = traj.times();
    let m = traj.n_members() as f64;
    let kf = k as f64;
    let mut total = 0.0;
    for &(weight, bump) in phi.terms() {
        let psi: Vec<f64> = centers.iter().map(|&x| bump.psi(&grid, x)).collect();
        let dpsi: Vec<f64> = centers.iter().map(|&x| bump.psi_prime(&grid, x)).collect();
        let per_time = |n: usize, th: f64, dth: f64| -> f64 {
            traj.states()[n]
                .members()
                .iter()
                .map(|u| {
                    let (a, b) =
                        member_integrals(u.values(), &psi, &dpsi, dx, |v| v, |v| model.flux(v));
                    dth * a.powi(k as i32) + th * kf * a.powi(k as i32 - 1) * b
                })
                .sum::<f64>()
                / m
        };
        let mut term = 0.0;
        for n in 0..times.len() - 1 {
            let t = times[n];
            let (th, dth) = (bump.theta(t), bump.theta_prime(t));
            if th == 0.0 && dth == 0.0 {
                continue;
            }
            term += (times[n + 1] - t) * per_time(n, th, dth);
        }
        let initial: f64 = traj
            .initial()
            .members()
            .iter()
            .map(|u| {
                let (a, _) = member_integrals(u.values(), &psi, &dpsi, dx, |v| v, |_| 0.0);
                a.powi(k as i32)
            })
            .sum::<f64>()
            / m;
        term += bump.theta(0.0) * initial;
        total += weight * term;
    }
    Ok(total)
}

fn tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let count = n.pow(k as u32);
    (0..count)
        .map(|mut c| {
            let mut idx = vec![0; k];
            for slot in idx.iter_mut().rev() {
                *slot = c % n;
                c /= n;
            }
            idx
        })
        .collect()
}

/// [`moment_residual`] evaluated literally: a sum over every k-tuple of cell
/// centers of the moment estimators times pointwise test-function
/// derivatives. `O(n^k)` per time node.
pub fn moment_residual_direct(
    traj: &Trajectory,
    k: usize,
    model: &FluxModel,
    phi: &TestFunction,
) -> Result<f64> {
    check_order(k)?;
    let grid = *traj.grid();
    phi.validate_on(&grid)?;
    check_time_coverage(traj, phi)?;
    let dx = grid.dx();
    let vol = dx.powi(k as i32);
    let points: Vec<Vec<f64>> = tuples(grid.n_cells(), k)
        .into_iter()
        .map(|idx| idx.into_iter().map(|j| grid.center(j)).collect())
        .collect();
    let times = traj.times();
    let integrand = |n: usize, t: f64| -> Result<f64> {
        let state = &traj.states()[n];
        let parts = points
            .par_iter()
            .map(|x| {
                let mut acc = moment(state, x)? * phi.time_derivative(&grid, x, t);
                for i in 0..k {
                    acc += flux_moment(state, x, model, i)? * phi.space_derivative(&grid, x, t, i);
                }
                Ok(acc)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(parts.iter().sum::<f64>() * vol)
    };
    let mut total = 0.0;
    for n in 0..times.len() - 1 {
        total += (times[n + 1] - times[n]) * integrand(n, times[n])?;
    }
    let initial = points
        .par_iter()
        .map(|x| Ok(moment(traj.initial(), x)? * phi.value(&grid, x, 0.0)))
        .collect::<Result<Vec<f64>>>()?;
    total += initial.iter().sum::<f64>() * vol;
    Ok(total)
}

/// Signed entropy residual together with the magnitude it is judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyResidual {
    pub value: f64,
    /// Quadrature sum of the absolute values of every integrand term.
    pub scale: f64,
}

impl EntropyResidual {
    pub fn tolerance(&self) -> f64 {
        ENTROPY_RTOL * self.scale
    }

    /// The entropy inequality demands `value ≥ −tolerance`.
    pub fn is_admissible(&self) -> bool {
        self.value >= -self.tolerance()
    }
}

/// Weak form of `∂_t⟨ν¹, |ξ − c|⟩ + ∂_x⟨ν¹, q(ξ, c)⟩ ≤ 0` for `φ ≥ 0`:
/// `R_c = ∫∫ ⟨ν¹,|ξ−c|⟩ ∂_tφ + ⟨ν¹,q(ξ,c)⟩ ∂_xφ + ∫ ⟨ν̄¹,|ξ−c|⟩ φ(·,0)`,
/// admissible when `R_c ≥ −tol`.
pub fn kruzkov_residual(
    traj: &Trajectory,
    model: &FluxModel,
    c: f64,
    phi: &TestFunction,
) -> Result<EntropyResidual> {
    if !phi.is_nonnegative() {
        return Err(Error::InvalidTestFunction(
            "entropy residuals need a nonnegative test function".into(),
        ));
    }
    if !c.is_finite() {
        return Err(Error::arg("c", "must be finite"));
    }
    let grid = *traj.grid();
    phi.validate_on(&grid)?;
    check_time_coverage(traj, phi)?;
    let dx = grid.dx();
    let centers = grid.centers();
    let times = traj.times();
    let m = traj.n_members() as f64;
    let eta = |v: f64| (v - c).abs();
    let q = |v: f64| model.kruzkov_flux(v, c);
    let mut value = 0.0;
    let mut scale = 0.0;
    for &(weight, bump) in phi.terms() {
        let psi: Vec<f64> = centers.iter().map(|&x| bump.psi(&grid, x)).collect();
        let dpsi: Vec<f64> = centers.iter().map(|&x| bump.psi_prime(&grid, x)).collect();
        let abs_dpsi: Vec<f64> = dpsi.iter().map(|d| d.abs()).collect();
        let mut v_term = 0.0;
        let mut s_term = 0.0;
        for n in 0..times.len() - 1 {
            let t = times[n];
            let (th, dth) = (bump.theta(t), bump.theta_prime(t));
            if th == 0.0 && dth == 0.0 {
                continue;
            }
            let dt = times[n + 1] - t;
            for u in traj.states()[n].members() {
                let (a, b) = member_integrals(u.values(), &psi, &dpsi, dx, eta, q);
                let (_, b_abs) =
                    member_integrals(u.values(), &psi, &abs_dpsi, dx, eta, |v| q(v).abs());
                v_term += dt * (dth * a + th * b) / m;
                s_term += dt * (dth.abs() * a + th * b_abs) / m;
            }
        }
        for u in traj.initial().members() {
            let (a, _) = member_integrals(u.values(), &psi, &dpsi, dx, eta, |_| 0.0);
            v_term += bump.theta(0.0) * a / m;
            s_term += bump.theta(0.0) * a / m;
        }
        value += weight * v_term;
        scale += weight.abs() * s_term;
    }
    Ok(EntropyResidual { value, scale })
}

/// `Σ_i α_i R_{c_i}(part_i)` for a decomposition `Σ_i α_i μ_i = μ`.
pub fn mixture_entropy_residual(
    parts: &[(f64, Trajectory)],
    model: &FluxModel,
    cs: &[f64],
    phi: &TestFunction,
) -> Result<EntropyResidual> {
    if parts.is_empty() || parts.len() != cs.len() {
        return Err(Error::arg(
            "parts",
            format!("{} parts but {} constants", parts.len(), cs.len()),
        ));
    }
    let total: f64 = parts.iter().map(|(a, _)| a).sum();
    if parts.iter().any(|(a, _)| a.is_nan() || *a <= 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::arg(
            "weights",
            format!("weights must be positive and sum to 1 (sum = {total})"),
        ));
    }
    let grid = *parts[0].1.grid();
    let mut out = EntropyResidual {
        value: 0.0,
        scale: 0.0,
    };
    for ((alpha, traj), &c) in parts.iter().zip(cs) {
        grid.ensure_matches(traj.grid())?;
        let r = kruzkov_residual(traj, model, c, phi)?;
        out.value += alpha * r.value;
        out.scale += alpha * r.scale;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> Bump {
        Bump {
            center: 0.5,
            half_width: 0.3,
            t1: 0.2,
            t2: 0.4,
        }
    }

    #[test]
    fn bump_shape() {
        let g = Grid::unit_torus(10).unwrap();
        let b = bump();
        assert_eq!(b.psi(&g, 0.5), 1.0);
        assert_eq!(b.psi(&g, 0.85), 0.0);
        assert_eq!(b.psi(&g, 0.1), 0.0);
        assert_eq!(b.psi_prime(&g, 0.5), 0.0);
        assert!((b.psi(&g, 0.4) - b.psi(&g, 0.6)).abs() < 1e-15);
        assert_eq!(b.theta(0.0), 1.0);
        assert_eq!(b.theta(0.2), 1.0);
        assert!((b.theta(0.3) - 0.5).abs() < 1e-15);
        assert_eq!(b.theta(0.4), 0.0);
    }

    #[test]
    fn periodic_bump_wraps() {
        let g = Grid::unit_torus(10).unwrap();
        let b = Bump {
            center: 0.95,
            ..bump()
        };
        assert!((b.psi(&g, 0.05) - b.psi(&g, 0.85)).abs() < 1e-14);
        assert!(b.psi(&g, 0.05) > 0.0);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let g = Grid::unit_torus(10).unwrap();
        let b = bump();
        let h = 1e-6;
        for &x in &[0.3, 0.45, 0.62, 0.75] {
            let fd = (b.psi(&g, x + h) - b.psi(&g, x - h)) / (2.0 * h);
            assert!((fd - b.psi_prime(&g, x)).abs() < 1e-6, "x={x}");
        }
        for &t in &[0.22, 0.3, 0.37] {
            let fd = (b.theta(t + h) - b.theta(t - h)) / (2.0 * h);
            assert!((fd - b.theta_prime(t)).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn test_function_validation() {
        assert!(TestFunction::new(0.5, 0.0, 0.0, 1.0).is_err());
        assert!(TestFunction::new(0.5, 0.1, 0.5, 0.5).is_err());
        assert!(TestFunction::new(0.5, 0.1, -0.1, 0.5).is_err());
        let phi = TestFunction::new(0.2, 0.3, 0.1, 0.2).unwrap();
        let bounded = Grid::new(0.0, 1.0, 10, false).unwrap();
        assert!(phi.validate_on(&bounded).is_err());
        assert!(phi.validate_on(&Grid::unit_torus(10).unwrap()).is_ok());
        let wide = TestFunction::new(0.5, 0.6, 0.1, 0.2).unwrap();
        assert!(wide.validate_on(&Grid::unit_torus(10).unwrap()).is_err());
    }

    #[test]
    fn tensor_derivatives() {
        let g = Grid::unit_torus(10).unwrap();
        let phi = TestFunction::new(0.5, 0.3, 0.2, 0.4).unwrap();
        let b = bump();
        let x = [0.45, 0.6];
        let t = 0.3;
        let v = phi.value(&g, &x, t);
        assert!((v - b.theta(t) * b.psi(&g, 0.45) * b.psi(&g, 0.6)).abs() < 1e-15);
        let d1 = phi.space_derivative(&g, &x, t, 1);
        assert!((d1 - b.theta(t) * b.psi(&g, 0.45) * b.psi_prime(&g, 0.6)).abs() < 1e-15);
    }
}
