//! `equivalence`: director flow under the synthesized field against the
//! chart system, with an optional refinement study.

use magsteer_core::grid_pde::{Axis, Grid};
use magsteer_core::monitors::MonitorCheck;
use magsteer_core::presets::{initial_data, InitialPreset};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Artifacts, Table};
use crate::runner::{control_bump, equivalence_run};

/// Desk-resolution tolerance on the final discrepancy.
pub const AGREEMENT_TOL: f64 = 5e-3;

/// Final discrepancy for a grid with `counts` nodes per axis and step `dt`.
pub fn discrepancy(config: &RunConfig, counts: &[usize], dt: f64, seed: u64) -> Result<f64, CliError> {
    let base = config.build_grid()?;
    let axes = base
        .axes()
        .iter()
        .zip(counts)
        .map(|(a, &n)| Axis::new(a.extent, n))
        .collect();
    let grid = Grid::new(axes, base.region().clone()).map_err(|e| CliError::Config(e.to_string()))?;
    let series = series(config, &grid, dt, seed)?;
    Ok(*series.last().unwrap_or(&0.0))
}

fn series(config: &RunConfig, grid: &Grid, dt: f64, seed: u64) -> Result<Vec<f64>, CliError> {
    let eq = &config.equivalence;
    let e = config.axis()?;
    let d0 = initial_data(&InitialPreset::TiltedCone { cone_deg: eq.cone_deg }, grid, &e, seed)
        .map_err(CliError::solver("initial data"))?;
    let f = control_bump(grid, eq.amplitude);
    let steps = (eq.horizon / dt).round().max(1.0) as usize;
    let dt = eq.horizon / steps as f64;
    equivalence_run(grid, &d0, &e, &f, dt, steps).map_err(CliError::solver("equivalence run"))
}

/// Step size of the desk run: `dt_max`, capped by the stability bound for
/// the largest synthesized field.
pub fn desk_dt(config: &RunConfig) -> f64 {
    let amp = config.equivalence.amplitude;
    let h_max = (1.0 + 4.0 * 1.25 * amp * amp).sqrt();
    config.solver.dt_max.min(magsteer_core::grid_pde::max_stable_dt(h_max))
}

/// Orders from three nested errors `e(k)`, refinement factor 2.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// (step, final discrepancy) pairs of one refinement study.
pub type Study = Vec<(f64, f64)>;

/// (Δx study at dt ∝ Δx², dt study at the desk grid).
pub fn refinement(config: &RunConfig, seed: u64) -> Result<(Study, Study), CliError> {
    let counts = &config.grid.counts;
    let dt0 = desk_dt(config);
    let mut dx_study = Vec::new();
    for level in [2u32, 1, 0] {
        let c: Vec<usize> = counts.iter().map(|&n| (n - 1) / (1 << level) + 1).collect();
        let dt = dt0 / 4f64.powi(2 - level as i32);
        let dx = config.grid.extents[0] / (c[0] - 1) as f64;
        dx_study.push((dx, discrepancy(config, &c, dt, seed)?));
    }
    let mut dt_study = Vec::new();
    for k in 0..3 {
        let dt = dt0 / 2f64.powi(k);
        dt_study.push((dt, discrepancy(config, counts, dt, seed)?));
    }
    Ok((dx_study, dt_study))
}

pub fn run(config: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    let grid = config.build_grid()?;
    let dt = desk_dt(config);
    let s = series(config, &grid, dt, seed)?;
    let mut art = Artifacts::default();
    let mut t = Table::new("discrepancy", &["time", "sup_discrepancy"]);
    let steps = s.len();
    let dt_eff = config.equivalence.horizon / steps as f64;
    for (n, x) in s.iter().enumerate() {
        t.push(vec![(n + 1) as f64 * dt_eff, *x]);
    }
    art.tables.push(t);
    let worst = s.iter().copied().fold(0.0, f64::max);
    art.checks.push(MonitorCheck::at_most("sup_discrepancy", worst, AGREEMENT_TOL));
    art.notes.push(("dt".into(), dt_eff));

    if config.equivalence.refine {
        let (dx, dts) = refinement(config, seed)?;
        let mut t = Table::new("refinement", &["study", "step", "discrepancy"]);
        for (h, e) in &dx {
            t.push(vec![0.0, *h, *e]);
        }
        for (h, e) in &dts {
            t.push(vec![1.0, *h, *e]);
        }
        art.tables.push(t);
        let dx_order = orders(&dx.iter().map(|p| p.1).collect::<Vec<_>>())
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let dt_order = orders(&dts.iter().map(|p| p.1).collect::<Vec<_>>())
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        art.checks.push(MonitorCheck::at_least("order_dx", dx_order, 1.8));
        art.checks.push(MonitorCheck::at_least("order_dt", dt_order, 0.8));
    }
    Ok(art)
}
