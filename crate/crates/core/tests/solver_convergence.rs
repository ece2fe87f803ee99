use std::f64::consts::PI;

use statsol::*;

/// Pre-shock Burgers solution `u = u0(x − u t)` for `u0 = a sin 2πx`, by Newton
/// iteration on the characteristic equation.
fn characteristic_solution(a: f64, x: f64, t: f64) -> f64 {
    let mut u = a * (2.0 * PI * x).sin();
    for _ in 0..60 {
        let xi = x - u * t;
        let g = u - a * (2.0 * PI * xi).sin();
        let dg = 1.0 + a * 2.0 * PI * t * (2.0 * PI * xi).cos();
        let step = g / dg;
        u -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    u
}

fn error_at(cells: usize, t: f64) -> f64 {
    let a = 0.5;
    let grid = Grid::unit_torus(cells).unwrap();
    let u0 = GridFunction::from_cell_averages(grid, 16, |x| a * (2.0 * PI * x).sin()).unwrap();
    let u = evolve(&u0, &FluxModel::Burgers, t, 0.45).unwrap();
    let exact =
        GridFunction::from_cell_averages(grid, 16, |x| characteristic_solution(a, x, t)).unwrap();
    u.l1_distance(&exact).unwrap()
}

#[test]
fn smooth_burgers_converges_at_least_at_half_order() {
    let t = 0.2;
    let errors: Vec<f64> = [100, 200, 400, 800]
        .iter()
        .map(|&n| error_at(n, t))
        .collect();
    for pair in errors.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order >= 0.5, "errors {errors:?}");
    }
    assert!(errors[3] < 5e-3);
}

#[test]
fn riemann_problems_within_five_cells() {
    let grid = Grid::new(-1.0, 1.0, 400, false).unwrap();
    for (l, r) in [
        (1.0, 0.0),
        (0.0, 1.0),
        (-0.5, 1.0),
        (1.0, -1.0),
        (-1.0, 0.5),
    ] {
        let u0 = GridFunction::from_centers(grid, |x| if x < 0.0 { l } else { r }).unwrap();
        let u = evolve(&u0, &FluxModel::Burgers, 0.25, 0.45).unwrap();
        let exact =
            GridFunction::from_cell_averages(grid, 16, |x| exact_riemann_burgers(l, r, x, 0.25))
                .unwrap();
        let err = u.l1_distance(&exact).unwrap();
        assert!(err <= 5.0 * grid.dx(), "({l},{r}): {err}");
    }
}
