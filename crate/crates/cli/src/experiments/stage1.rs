//! `stage1`: uniform-field decay towards the hemisphere axis with an
//! amplitude sweep.

use magsteer_core::monitors::{gradient_bound_ratio, hemisphere_margin, MonitorCheck};
use magsteer_core::presets::initial_data;
use magsteer_core::snapshot::Snapshot;
use magsteer_core::stage_control::{build_leg_schedule, required_lambda};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Artifacts, Table};
use crate::runner::{run_leg, LegOutcome};

/// One amplitude of the sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub factor: f64,
    pub lambda: f64,
    pub outcome: LegOutcome,
    pub gradient_ratio: f64,
    pub margin_2t0: f64,
}

pub fn sweep(config: &RunConfig, seed: u64) -> Result<(f64, Vec<SweepPoint>), CliError> {
    let grid = config.build_grid()?;
    let e = config.axis()?;
    let preset = config.initial.preset()?;
    let d0 = initial_data(&preset, &grid, &e, seed).map_err(CliError::solver("initial data"))?;
    let measured = hemisphere_margin(&d0, &e);
    let s = &config.schedule;
    let eps0 = s.eps0.unwrap_or(measured);
    let base = match s.lambda {
        Some(l) => l,
        None => required_lambda(eps0, s.t0, s.eps4).map_err(CliError::solver("amplitude"))?,
    };
    let mut points = Vec::new();
    for &factor in &s.lambda_factors {
        let mut schedule =
            build_leg_schedule(&e, &e, 6.0 * s.t0, eps0, s.eps4).map_err(CliError::solver("schedule"))?;
        schedule.lambda = base * factor;
        let ctx = format!("stage1 run with Λ = {:.6}", schedule.lambda);
        let outcome = run_leg(&grid, &d0, &schedule, config.solver.dt_max, 0.0, config.solver.slack, None)
            .map_err(CliError::solver(ctx.clone()))?;
        let gradient_ratio =
            gradient_bound_ratio(&outcome.report, &grid, &d0, measured).map_err(CliError::solver(ctx))?;
        let margin_2t0 = outcome
            .report
            .row_at(2.0 * s.t0)
            .map_or(f64::NAN, |r| r.margin);
        points.push(SweepPoint {
            factor,
            lambda: schedule.lambda,
            outcome,
            gradient_ratio,
            margin_2t0,
        });
    }
    Ok((measured, points))
}

pub fn run(config: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    let (eps0, points) = sweep(config, seed)?;
    let grid = config.build_grid()?;
    let mut art = Artifacts::default();
    let reference = &points[0];
    let (m0, b0) = reference.outcome.decay;
    art.checks.push(MonitorCheck::at_most("decay_measured_over_bound", m0 / b0, 2.0));
    art.checks.extend(reference.outcome.checks.iter().cloned());
    for p in &points[1..] {
        let (m, b) = p.outcome.decay;
        art.checks.push(MonitorCheck::at_most(
            format!("decay_ratio_x{}", p.factor),
            m / m0,
            b / b0,
        ));
        art.checks.push(MonitorCheck::at_most(
            format!("decay_measured_over_bound_x{}", p.factor),
            m / b,
            2.0,
        ));
    }
    art.notes.push(("eps0".into(), eps0));
    art.notes.push(("lambda".into(), reference.lambda));
    art.notes.push(("decay_measured".into(), m0));
    art.notes.push(("decay_bound".into(), b0));
    art.notes
        .push(("bernstein_max".into(), reference.outcome.report.series(|r| r.bernstein).into_iter().fold(0.0, f64::max)));

    let mut t = Table::new(
        "sweep",
        &["factor", "lambda", "dt", "measured", "bound", "margin_2t0", "gradient_ratio"],
    );
    for p in &points {
        t.push(vec![
            p.factor,
            p.lambda,
            p.outcome.dt,
            p.outcome.decay.0,
            p.outcome.decay.1,
            p.margin_2t0,
            p.gradient_ratio,
        ]);
    }
    art.tables.push(t);
    if config.output.snapshots {
        art.snapshots.push((
            "final".into(),
            Snapshot::of_director(&grid, 5.0 * config.schedule.t0, &reference.outcome.state, seed, ""),
        ));
    }
    art.report = Some(reference.outcome.report.clone());
    Ok(art)
}
