//! `steer`: full four-leg steering from the initial data to the target state.

use magsteer_core::grid_pde::{DirectorField, Grid};
use magsteer_core::monitors::{hemisphere_margin, MonitorCheck, TrajectoryReport};
use magsteer_core::presets::initial_data;
use magsteer_core::snapshot::Snapshot;
use magsteer_core::stage_control::SteeringPlan;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Artifacts, Table};
use crate::runner::run_leg;

/// Per-leg summary.
#[derive(Debug, Clone, PartialEq)]
pub struct LegSummary {
    pub leg: usize,
    pub eps0: f64,
    pub lambda: f64,
    pub dt: f64,
    pub picard_iterations: usize,
    pub terminal_distance: f64,
    pub passed: bool,
}

/// Runs the legs in order and stops after the first leg whose monitors fail.
pub fn steer(
    config: &RunConfig,
    grid: &Grid,
    seed: u64,
) -> Result<(DirectorField, TrajectoryReport, Vec<MonitorCheck>, Vec<LegSummary>), CliError> {
    let e = config.axis()?;
    let p = config.target()?;
    let plan = SteeringPlan::new(&e, &p, config.schedule.horizon, config.schedule.eps4)
        .map_err(CliError::solver("steering plan"))?;
    let mut d = initial_data(&config.initial.preset()?, grid, &e, seed).map_err(CliError::solver("initial data"))?;
    let picard = config.solver.picard();
    let mut report = TrajectoryReport {
        axis: p,
        rows: Vec::new(),
    };
    let mut checks = Vec::new();
    let mut legs = Vec::new();
    for k in 0..4 {
        let (_, target) = plan.leg_endpoints(k);
        let eps0 = hemisphere_margin(&d, &target);
        let ctx = format!("leg {k}");
        let schedule = plan.leg(k, eps0).map_err(CliError::solver(ctx.clone()))?;
        let offset = plan.leg_start_time(k);
        let out = run_leg(
            grid,
            &d,
            &schedule,
            config.solver.dt_max,
            offset,
            config.solver.slack,
            Some(&picard),
        )
        .map_err(CliError::solver(ctx))?;
        report.extend(&out.report);
        let passed = out.checks.iter().all(|c| c.passed);
        checks.extend(out.checks.into_iter().map(|c| MonitorCheck {
            name: format!("leg{k}.{}", c.name),
            ..c
        }));
        legs.push(LegSummary {
            leg: k,
            eps0,
            lambda: schedule.lambda,
            dt: out.dt,
            picard_iterations: out.picard.as_ref().map_or(0, |r| r.iterations),
            terminal_distance: out.state.sup_distance_to(&target),
            passed,
        });
        d = out.state;
        if !passed {
            log::error!("leg {k} monitors failed; aborting the remaining legs");
            break;
        }
    }
    Ok((d, report, checks, legs))
}

pub fn run(config: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    let grid = config.build_grid()?;
    let (d, report, checks, legs) = steer(config, &grid, seed)?;
    let p = config.target()?;
    let mut art = Artifacts {
        checks,
        ..Default::default()
    };
    art.checks.push(MonitorCheck::at_least("legs_completed", legs.len() as f64, 4.0));
    art.checks.push(MonitorCheck::at_most("final_distance", d.sup_distance_to(&p), config.solver.final_tol));
    art.checks.push(MonitorCheck::at_most("final_unit_norm", report.max_norm_deviation(), 1e-9));

    let mut t = Table::new(
        "legs",
        &["leg", "eps0", "lambda", "dt", "picard_iterations", "terminal_distance", "passed"],
    );
    for l in &legs {
        t.push(vec![
            l.leg as f64,
            l.eps0,
            l.lambda,
            l.dt,
            l.picard_iterations as f64,
            l.terminal_distance,
            f64::from(u8::from(l.passed)),
        ]);
    }
    art.tables.push(t);
    if config.output.snapshots {
        let time = report.last().map_or(0.0, |r| r.time);
        art.snapshots.push(("final".into(), Snapshot::of_director(&grid, time, &d, seed, "")));
    }
    art.report = Some(report);
    Ok(art)
}
