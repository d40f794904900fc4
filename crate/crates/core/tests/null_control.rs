use std::f64::consts::PI;

use magsteer_core::grid_pde::{ChartField, ControlDensity, Grid, LinearState, Stepper};
use magsteer_core::null_control::{
    coefficient_matrix, hum_null_control, picard_null_control, simulate_chart, HumConfig, HumProblem, LinearizedCoeff,
    PicardConfig,
};
use magsteer_core::presets::{chart_bump, seeded_uniform};
use magsteer_core::{Error, Mat2, Vec2};
use nalgebra::{DMatrix, DVector};

fn random_coeff(grid: &Grid, steps: usize, seed: u64) -> LinearizedCoeff {
    let u = seeded_uniform(seed, 4 * grid.node_count() * steps);
    LinearizedCoeff::from_slabs(
        u.chunks_exact(4 * grid.node_count())
            .map(|s| s.chunks_exact(4).map(|c| Mat2::new(c[0], c[1], c[2], c[3]) * 2.0).collect())
            .collect(),
    )
}

fn cosine_state(grid: &Grid) -> LinearState {
    LinearState::from_fn(grid, |i| Vec2::new((PI * grid.coordinate(i, 0)).cos(), 0.3))
}

/// Oracle: assemble the control-to-state map column by column and solve the
/// penalized normal equations densely.
#[test]
fn cg_matches_dense_normal_equations() {
    let grid = Grid::line(13, 1.0).unwrap();
    let steps = 6;
    let dt = 5e-3;
    let penalty = 1e-2;
    let st = Stepper::new(&grid, dt).unwrap();
    let a = random_coeff(&grid, steps, 11);
    let y0 = cosine_state(&grid);
    let problem = HumProblem::new(&st, &a, &y0, penalty).unwrap();

    let omega: Vec<usize> = (0..grid.node_count()).filter(|&i| grid.in_omega(i)).collect();
    let unknowns: Vec<(usize, usize, usize)> = (0..steps)
        .flat_map(|n| omega.iter().flat_map(move |&i| [(n, i, 0), (n, i, 1)]))
        .collect();
    let m = unknowns.len();
    let rows = 2 * grid.node_count();
    let mut l = DMatrix::zeros(rows, m);
    for (col, &(n, i, c)) in unknowns.iter().enumerate() {
        let mut u = vec![ControlDensity::zeros(&grid); steps];
        let mut values = vec![Vec2::zeros(); grid.node_count()];
        values[i][c] = 1.0;
        u[n] = ControlDensity::masked(&grid, values);
        let y = problem.control_to_state(&u).unwrap();
        for (k, v) in y.iter().enumerate() {
            l[(2 * k, col)] = v.x;
            l[(2 * k + 1, col)] = v.y;
        }
    }
    let w = DMatrix::from_diagonal(&DVector::from_iterator(rows, (0..rows).map(|r| grid.weights()[r / 2])));
    let q = DMatrix::from_diagonal(&DVector::from_iterator(m, unknowns.iter().map(|&(_, i, _)| dt * grid.weights()[i])));
    let free = problem.terminal_state(&vec![ControlDensity::zeros(&grid); steps]).unwrap();
    let yf = DVector::from_iterator(rows, free.iter().flat_map(|v| [v.x, v.y]));
    let lhs = &q + l.transpose() * &w * &l / penalty;
    let rhs = -(l.transpose() * &w * yf) / penalty;
    let want = lhs.lu().solve(&rhs).unwrap();

    let res = problem.solve(1e-13, 500).unwrap();
    assert!(res.converged);
    let scale = want.amax();
    for (k, &(n, i, c)) in unknowns.iter().enumerate() {
        assert!((res.control[n][i][c] - want[k]).abs() <= 1e-8 * scale);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let grid = Grid::line(21, 1.0).unwrap();
    let steps = 10;
    let st = Stepper::new(&grid, 2e-3).unwrap();
    let a = random_coeff(&grid, steps, 3);
    let y0 = cosine_state(&grid);
    let problem = HumProblem::new(&st, &a, &y0, 1e-2).unwrap();
    let ctrl = |seed: u64| -> Vec<ControlDensity> {
        (0..steps)
            .map(|n| {
                let u = seeded_uniform(seed + n as u64, 2 * grid.node_count());
                ControlDensity::masked(&grid, u.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
            })
            .collect()
    };
    let (u, w) = (ctrl(100), ctrl(200));
    let h = 1e-4;
    let shifted = |s: f64| -> Vec<ControlDensity> {
        u.iter()
            .zip(&w)
            .map(|(a, b)| ControlDensity::masked(&grid, a.iter().zip(b.iter()).map(|(x, y)| x + y * s).collect()))
            .collect()
    };
    let fd = (problem.objective(&shifted(h)).unwrap() - problem.objective(&shifted(-h)).unwrap()) / (2.0 * h);
    let exact = problem.directional_derivative(&u, &w).unwrap();
    assert!((fd - exact).abs() <= 1e-6 * exact.abs());
}

#[test]
fn penalty_sweep_trades_cost_for_precision() {
    let grid = Grid::line(101, 1.0).unwrap();
    let steps = 100;
    let st = Stepper::new(&grid, 1e-3).unwrap();
    let a = LinearizedCoeff::zeros(&grid, steps);
    let y0 = LinearState::from_fn(&grid, |i| Vec2::new((PI * grid.coordinate(i, 0)).cos(), 0.0));
    let mut last: Option<(f64, f64)> = None;
    for penalty in [1e-3, 1e-4, 1e-5, 1e-6] {
        let cfg = HumConfig {
            penalty,
            tol: 1e-11,
            maxit: 2000,
        };
        let r = hum_null_control(&st, &a, &y0, 0.1, &cfg).unwrap();
        assert!(r.converged);
        if let Some((terminal, cost)) = last {
            assert!(r.terminal_norm <= terminal);
            assert!(r.cost >= cost);
        }
        last = Some((r.terminal_norm, r.cost));
    }
    let (terminal, _) = last.unwrap();
    let ratio = terminal / y0.l2_norm(&grid);
    assert!(ratio <= 1e-2 && ratio < (-PI * PI * 0.1).exp());
}

#[test]
fn horizon_mismatch_and_zero_data() {
    let grid = Grid::line(21, 1.0).unwrap();
    let st = Stepper::new(&grid, 1e-2).unwrap();
    let a = LinearizedCoeff::zeros(&grid, 10);
    assert!(matches!(
        hum_null_control(&st, &a, &LinearState::zeros(&grid), 0.2, &HumConfig::default()),
        Err(Error::Domain(_))
    ));
    let r = hum_null_control(&st, &a, &LinearState::zeros(&grid), 0.1, &HumConfig::default()).unwrap();
    assert!(r.control.iter().all(|c| c.field().sup_norm() == 0.0));
}

/// The chart step is the linear step with a frozen at the current state.
#[test]
fn coefficient_reproduces_chart_step() {
    let grid = Grid::square(11, 1.0).unwrap();
    let v = chart_bump(&grid, 0.7);
    let f = ControlDensity::from_fn(&grid, |_| Vec2::new(0.2, -0.1));
    let st = Stepper::new(&grid, 1e-3).unwrap();
    let chart = st.chart(&v, &f).unwrap();
    let linear = st
        .linear_forward(&LinearState::new(v.to_vec()), &coefficient_matrix(&grid, &v), Some(&f))
        .unwrap();
    assert!(chart.sup_distance(&linear) <= 1e-15);
}

#[test]
fn picard_drives_small_data_to_rest() {
    let grid = Grid::line(101, 1.0).unwrap();
    let st = Stepper::new(&grid, 5e-4).unwrap();
    let v0 = chart_bump(&grid, 1e-3);
    let r = picard_null_control(&st, &v0, 0.05, &PicardConfig::default()).unwrap();
    assert!(r.iterations <= 10);
    assert!(r.initial_norm / r.terminal_norm >= 1e2);
    let sim = simulate_chart(&st, &v0, &r.control).unwrap();
    let gap = sim.iter().zip(&r.trajectory).map(|(a, b)| a.sup_distance(b)).fold(0.0, f64::max);
    assert!(gap <= 1e-6);
    let zero = picard_null_control(&st, &ChartField::zeros(&grid), 0.05, &PicardConfig::default()).unwrap();
    assert_eq!(zero.iterations, 0);
}

#[test]
fn picard_reports_large_data_failure() {
    let grid = Grid::line(51, 1.0).unwrap();
    let st = Stepper::new(&grid, 1e-3).unwrap();
    let v0 = chart_bump(&grid, 10.0);
    assert!(matches!(
        picard_null_control(&st, &v0, 0.05, &PicardConfig::default()),
        Err(Error::NoConvergence { .. })
    ));
}
