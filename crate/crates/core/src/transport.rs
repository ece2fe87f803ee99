//! 1-Wasserstein distances between equal-weight empirical measures.
//!
//! With `M` atoms on each side every optimal transport plan can be taken to
//! be a permutation, so `W_1` is a linear assignment problem. On the real
//! line the sorted (quantile) coupling is optimal.

use itertools::Itertools;
use rayon::prelude::*;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::grid::{l1_distance_values, GridFunction};

/// Largest size accepted by [`assignment_bruteforce`].
pub const BRUTEFORCE_MAX: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Row-major `n × n` entries.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCostMatrix("size must be >= 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidCostMatrix(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(v) = entries.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidCostMatrix(format!(
                "entries must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCostMatrix("matrix must be square".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        Self::new(n, (0..n * n).map(|k| f(k / n, k % n)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// `Σ_i C[i, σ(i)]`, summed in row order.
    pub fn cost_of(&self, permutation: &[usize]) -> f64 {
        permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| self.get(i, j))
            .sum()
    }
}

/// A permutation `σ` (row `i` ↦ column `σ(i)`) and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub permutation: Vec<usize>,
    pub cost: f64,
}

/// Exact minimum-cost assignment by successive shortest augmenting paths with
/// dual potentials (Hungarian method), `O(n³)`.
pub fn hungarian(cost: &CostMatrix) -> Assignment {
    let n = cost.n();
    // 1-based arrays; index 0 is the virtual source column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut permutation = vec![0usize; n];
    for j in 1..=n {
        permutation[row_of[j] - 1] = j - 1;
    }
    let total = cost.cost_of(&permutation);
    Assignment {
        permutation,
        cost: total,
    }
}

/// Exhaustive minimum over all `n!` permutations, `n ≤ 8`. Permutations are
/// visited in lexicographic order and only a strictly smaller cost replaces
/// the incumbent, so ties resolve to the lexicographically smallest.
pub fn assignment_bruteforce(cost: &CostMatrix) -> Result<Assignment> {
    let n = cost.n();
    if n > BRUTEFORCE_MAX {
        return Err(Error::InvalidCostMatrix(format!(
            "brute force limited to n <= {BRUTEFORCE_MAX}, got {n}"
        )));
    }
    let mut best = Assignment {
        permutation: (0..n).collect(),
        cost: f64::INFINITY,
    };
    for perm in (0..n).permutations(n) {
        let c = cost.cost_of(&perm);
        if c < best.cost {
            best = Assignment {
                permutation: perm,
                cost: c,
            };
        }
    }
    Ok(best)
}

/// `W_1` between two equal-size samples on ℝ: mean absolute difference of
/// the order statistics.
pub fn w1_real(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::arg(
            "samples",
            format!("unequal lengths {} and {}", a.len(), b.len()),
        ));
    }
    if a.is_empty() {
        return Err(Error::arg("samples", "need at least one atom"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::arg("samples", "atoms must be finite"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

fn check_pair(a: &Ensemble, b: &Ensemble) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidEnsemble(format!(
            "member counts differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    a.grid().ensure_matches(b.grid())
}

/// `C[i, j] = ‖a_i − b_j‖_{L^1}`.
pub fn l1_cost_matrix(a: &Ensemble, b: &Ensemble) -> Result<CostMatrix> {
    check_pair(a, b)?;
    let n = a.len();
    let dx = a.grid().dx();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let ai = a.member(i).values();
            (0..n).map(move |j| l1_distance_values(ai, b.member(j).values(), dx))
        })
        .collect();
    CostMatrix::new(n, rows)
}

/// Exact `W_1` between two ensembles over `L^1`, with an optimal plan
/// (`a_i` is paired with `b_{plan[i]}`).
pub fn w1_ensembles_with_plan(a: &Ensemble, b: &Ensemble) -> Result<(f64, Vec<usize>)> {
    let cost = l1_cost_matrix(a, b)?;
    let assignment = hungarian(&cost);
    Ok((assignment.cost / a.len() as f64, assignment.permutation))
}

pub fn w1_ensembles(a: &Ensemble, b: &Ensemble) -> Result<f64> {
    Ok(w1_ensembles_with_plan(a, b)?.0)
}

/// Kantorovich–Rubinstein lower bound `max_w |E_a Ψ_w − E_b Ψ_w|` over the
/// 1-Lipschitz witnesses `Ψ_w(u) = ‖u − w‖_{L^1}`.
pub fn kr_lower_bound(a: &Ensemble, b: &Ensemble, anchors: &[GridFunction]) -> Result<f64> {
    a.grid().ensure_matches(b.grid())?;
    let mean_distance = |e: &Ensemble, w: &GridFunction| -> Result<f64> {
        let mut total = 0.0;
        for u in e.members() {
            total += u.l1_distance(w)?;
        }
        Ok(total / e.len() as f64)
    };
    let mut best = 0.0f64;
    for w in anchors {
        let gap = (mean_distance(a, w)? - mean_distance(b, w)?).abs();
        best = best.max(gap);
    }
    Ok(best)
}
