//! `hum`: discrete adjoint checks, the a = 0 benchmark, the penalty
//! trade-off and the Picard loop on small chart data.

use std::f64::consts::PI;

use magsteer_core::grid_pde::{ControlDensity, Grid, LinearState, Stepper};
use magsteer_core::monitors::MonitorCheck;
use magsteer_core::null_control::{
    hum_null_control, picard_null_control, simulate_chart, HumConfig, HumProblem, HumResult, LinearizedCoeff,
};
use magsteer_core::presets::{chart_bump, chart_w1inf, seeded_uniform};
use magsteer_core::snapshot::Snapshot;
use magsteer_core::{Mat2, Vec2};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Artifacts, Table};

/// Step count and step for `horizon` with steps not above `dt_max`.
pub fn tiled_dt(horizon: f64, dt_max: f64) -> (f64, usize) {
    let steps = (horizon / dt_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (horizon / steps as f64, steps)
}

fn random_coeff(grid: &Grid, steps: usize, seed: u64, size: f64) -> LinearizedCoeff {
    let u = seeded_uniform(seed, 4 * grid.node_count() * steps);
    LinearizedCoeff::from_slabs(
        u.chunks_exact(4 * grid.node_count())
            .map(|slab| {
                slab.chunks_exact(4)
                    .map(|c| Mat2::new(c[0], c[1], c[2], c[3]) * size)
                    .collect()
            })
            .collect(),
    )
}

fn random_state(grid: &Grid, seed: u64) -> LinearState {
    let u = seeded_uniform(seed, 2 * grid.node_count());
    LinearState::new(u.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect())
}

fn random_control(grid: &Grid, steps: usize, seed: u64) -> Vec<ControlDensity> {
    (0..steps)
        .map(|n| ControlDensity::masked(grid, random_state(grid, seed.wrapping_add(n as u64)).into_vec()))
        .collect()
}

/// Adjoint consistency on random data: (one-step transpose residual,
/// control-map transpose residual, gradient vs central differences), all relative.
pub fn adjoint_checks(grid: &Grid, dt: f64, steps: usize, seed: u64) -> Result<(f64, f64, f64), CliError> {
    let err = CliError::solver;
    let stepper = Stepper::new(grid, dt).map_err(err("stepper"))?;
    let a = random_coeff(grid, steps, seed, 3.0);
    let y = random_state(grid, seed + 1);
    let p = random_state(grid, seed + 2);

    let fy = stepper.linear_forward(&y, a.slab(0), None).map_err(err("forward step"))?;
    let ap = stepper.linear_adjoint(&p, a.slab(0)).map_err(err("adjoint step"))?;
    let lhs = fy.inner(&p, grid);
    let rhs = y.inner(&ap, grid);
    let step = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());

    let y0 = random_state(grid, seed + 3);
    let problem = HumProblem::new(&stepper, &a, &y0, 1e-2).map_err(err("HUM problem"))?;
    let w = random_control(grid, steps, seed + 100);
    let lw = problem.control_to_state(&w).map_err(err("control map"))?;
    let lstar = problem.state_to_control(&p).map_err(err("control adjoint"))?;
    let lhs = lw.inner(&p, grid);
    let rhs = problem.control_inner(&w, &lstar).map_err(err("control inner"))?;
    let map = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());

    let u = random_control(grid, steps, seed + 200);
    let analytic = problem.directional_derivative(&u, &w).map_err(err("gradient"))?;
    let h = 1e-4;
    let shift = |s: f64| -> Vec<ControlDensity> {
        u.iter()
            .zip(&w)
            .map(|(a, b)| ControlDensity::masked(grid, a.iter().zip(b.iter()).map(|(x, y)| x + y * s).collect()))
            .collect()
    };
    let jp = problem.objective(&shift(h)).map_err(err("objective"))?;
    let jm = problem.objective(&shift(-h)).map_err(err("objective"))?;
    let fd = (jp - jm) / (2.0 * h);
    let grad = (fd - analytic).abs() / analytic.abs();
    Ok((step, map, grad))
}

/// y₀ = Πₖ cos(πxₖ/Lₖ)·(1, 0): slowest non-constant Neumann mode.
pub fn benchmark_state(grid: &Grid) -> LinearState {
    LinearState::from_fn(grid, |i| {
        let c: f64 = (0..grid.dimension())
            .map(|k| (PI * grid.coordinate(i, k) / grid.axes()[k].extent).cos())
            .product();
        Vec2::new(c, 0.0)
    })
}

/// a = 0 benchmark over the penalty sweep.
pub fn penalty_sweep(config: &RunConfig, grid: &Grid) -> Result<Vec<(f64, HumResult)>, CliError> {
    let horizon = config.hum.horizon;
    let (dt, steps) = tiled_dt(horizon, config.solver.dt_max);
    let stepper = Stepper::new(grid, dt).map_err(CliError::solver("stepper"))?;
    let a = LinearizedCoeff::zeros(grid, steps);
    let y0 = benchmark_state(grid);
    let mut out = Vec::new();
    for &penalty in &config.hum.penalties {
        let cfg = HumConfig {
            penalty,
            tol: config.solver.hum_tol,
            maxit: config.solver.hum_maxit,
        };
        let r = hum_null_control(&stepper, &a, &y0, horizon, &cfg).map_err(CliError::solver("HUM benchmark"))?;
        out.push((penalty, r));
    }
    Ok(out)
}

/// Outcome of one Picard run on chart data of W^{1,∞} size `size`.
#[derive(Debug, Clone)]
pub struct PicardRun {
    pub size: f64,
    pub converged: bool,
    pub iterations: usize,
    pub reduction: f64,
    pub resimulation: f64,
    pub control_sup: f64,
    pub control: Vec<ControlDensity>,
    pub detail: String,
}

pub fn picard_run(config: &RunConfig, grid: &Grid, size: f64) -> Result<PicardRun, CliError> {
    let horizon = config.hum.picard_horizon;
    let (dt, _) = tiled_dt(horizon, config.solver.dt_max);
    let stepper = Stepper::new(grid, dt).map_err(CliError::solver("stepper"))?;
    let v0 = chart_bump(grid, size);
    debug_assert!((chart_w1inf(grid, &v0) - size).abs() <= 1e-12 * size);
    match picard_null_control(&stepper, &v0, horizon, &config.solver.picard()) {
        Ok(r) => {
            let sim = simulate_chart(&stepper, &v0, &r.control).map_err(CliError::solver("re-simulation"))?;
            let resimulation = sim
                .iter()
                .zip(&r.trajectory)
                .map(|(a, b)| a.sup_distance(b))
                .fold(0.0, f64::max);
            let control_sup = r.control.iter().map(|c| c.field().sup_norm()).fold(0.0, f64::max);
            Ok(PicardRun {
                size,
                converged: true,
                iterations: r.iterations,
                reduction: r.initial_norm / r.terminal_norm,
                resimulation,
                control_sup,
                control: r.control,
                detail: String::new(),
            })
        }
        Err(magsteer_core::Error::NoConvergence {
            iterations,
            achieved,
            detail,
        }) => Ok(PicardRun {
            size,
            converged: false,
            iterations,
            reduction: v0.l2_norm(grid) / achieved,
            resimulation: f64::NAN,
            control_sup: f64::NAN,
            control: Vec::new(),
            detail,
        }),
        Err(e) => Err(CliError::Solver {
            context: format!("Picard run at size {size:e}"),
            source: e,
        }),
    }
}

pub fn run(config: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    let grid = config.build_grid()?;
    let mut art = Artifacts::default();

    let (step, map, grad) = adjoint_checks(&grid, 1e-3, 20, seed)?;
    art.checks.push(MonitorCheck::at_most("transpose_step", step, 1e-12));
    art.checks.push(MonitorCheck::at_most("transpose_control_map", map, 1e-12));
    art.checks.push(MonitorCheck::at_most("gradient_fd", grad, 1e-6));

    let sweep = penalty_sweep(config, &grid)?;
    let mut t = Table::new(
        "penalty_sweep",
        &["penalty", "terminal_ratio", "free_ratio", "cost", "control_sup", "iterations", "converged"],
    );
    for (p, r) in &sweep {
        t.push(vec![
            *p,
            r.terminal_norm / r.initial_norm,
            r.free_terminal_norm / r.initial_norm,
            r.cost,
            r.control_sup,
            r.iterations as f64,
            f64::from(u8::from(r.converged)),
        ]);
    }
    art.tables.push(t);
    if let Some((_, last)) = sweep.last() {
        let ratio = last.terminal_norm / last.initial_norm;
        let uncontrolled = (-PI * PI * config.hum.horizon).exp();
        art.checks.push(MonitorCheck::at_most("benchmark_ratio", ratio, 1e-2));
        art.checks.push(MonitorCheck::at_most("benchmark_below_uncontrolled", ratio, uncontrolled));
        art.checks.push(MonitorCheck::at_least("benchmark_converged", f64::from(u8::from(last.converged)), 1.0));
        art.notes.push(("uncontrolled_factor".into(), uncontrolled));
        art.notes.push(("measured_free_factor".into(), last.free_terminal_norm / last.initial_norm));
    }
    let mono_terminal = sweep
        .windows(2)
        .map(|w| w[1].1.terminal_norm - w[0].1.terminal_norm)
        .fold(f64::NEG_INFINITY, f64::max);
    let mono_cost = sweep
        .windows(2)
        .map(|w| w[0].1.cost - w[1].1.cost)
        .fold(f64::NEG_INFINITY, f64::max);
    if sweep.len() > 1 {
        let scale = sweep[0].1.initial_norm;
        art.checks.push(MonitorCheck::at_most("sweep_terminal_nonincreasing", mono_terminal, 1e-12 * scale));
        art.checks.push(MonitorCheck::at_most("sweep_cost_nondecreasing", mono_cost, 1e-12 * scale));
    }

    let mut t = Table::new(
        "picard",
        &["size", "converged", "iterations", "reduction", "resimulation", "control_sup"],
    );
    for &size in &config.hum.picard_sizes {
        let r = picard_run(config, &grid, size)?;
        t.push(vec![
            size,
            f64::from(u8::from(r.converged)),
            r.iterations as f64,
            r.reduction,
            r.resimulation,
            r.control_sup,
        ]);
        let tag = format!("{size:e}");
        art.checks.push(MonitorCheck::at_least(format!("picard_converged[{tag}]"), f64::from(u8::from(r.converged)), 1.0));
        if r.converged {
            art.checks.push(MonitorCheck::at_most(format!("picard_iterations[{tag}]"), r.iterations as f64, config.solver.picard_maxit as f64));
            art.checks.push(MonitorCheck::at_least(format!("picard_reduction[{tag}]"), r.reduction, 1e2));
            art.checks.push(MonitorCheck::at_most(format!("picard_resimulation[{tag}]"), r.resimulation, 1e-6));
            if config.output.snapshots {
                let (dt, _) = tiled_dt(config.hum.picard_horizon, config.solver.dt_max);
                let times: Vec<f64> = (0..r.control.len()).map(|n| n as f64 * dt).collect();
                art.snapshots.push((
                    format!("control_{tag}"),
                    Snapshot::of_controls(&grid, &times, &r.control, seed, ""),
                ));
            }
        } else {
            log::warn!("Picard at size {tag}: {}", r.detail);
        }
    }
    for &size in &config.hum.basin_sizes {
        let r = picard_run(config, &grid, size)?;
        t.push(vec![
            size,
            f64::from(u8::from(r.converged)),
            r.iterations as f64,
            r.reduction,
            r.resimulation,
            r.control_sup,
        ]);
        art.notes.push((format!("basin_converged[{size:e}]"), f64::from(u8::from(r.converged))));
    }
    art.tables.push(t);
    Ok(art)
}
