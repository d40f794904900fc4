//! Simulation drivers shared by the experiments.

use std::ops::Range;

use magsteer_core::field_synthesis::{synthesize_field, uniform_field};
use magsteer_core::geometry::{stereo_invert, stereo_project, ChartPoint, RotationMatrix, UnitVector3};
use magsteer_core::grid_pde::{ChartField, ControlDensity, DirectorField, Grid, MagneticField, Stepper};
use magsteer_core::monitors::{
    decay_check, hemisphere_margin, leg_checks, sup_gradient, LegStart, MonitorCheck, TrajectoryRecorder,
    TrajectoryReport,
};
use magsteer_core::null_control::{picard_null_control, PicardConfig, PicardResult};
use magsteer_core::stage_control::Schedule;
use magsteer_core::{Error, Result, Vec2};

/// Chart coordinates of `d` in the frame where `rotation` maps e₃ to the chart pole.
pub fn to_chart(d: &DirectorField, rotation: &RotationMatrix) -> Result<ChartField> {
    let inv = rotation.inverse();
    let mut out = Vec::with_capacity(d.len());
    for x in d.iter() {
        let u = UnitVector3::normalize(inv.apply(x))?;
        out.push(stereo_invert(&u)?.0);
    }
    Ok(ChartField::new(out))
}

/// Ψ(v) mapped back through `rotation`.
pub fn from_chart(v: &ChartField, rotation: &RotationMatrix) -> DirectorField {
    DirectorField::new(v.iter().map(|x| rotation.apply(&stereo_project(ChartPoint(*x)).as_vec())).collect())
}

/// Steps the uniform-field stages `stages` (indices 0..5) of a leg starting
/// at report time `offset`, recording every accepted step.
#[allow(clippy::too_many_arguments)]
pub fn run_uniform_stages(
    grid: &Grid,
    mut d: DirectorField,
    schedule: &Schedule,
    dt: f64,
    steps_per_stage: usize,
    stages: Range<usize>,
    offset: f64,
    recorder: &mut TrajectoryRecorder,
) -> Result<DirectorField> {
    let stepper = Stepper::new(grid, dt)?;
    let field = |t: f64| -> Result<(f64, MagneticField)> {
        let lam = schedule.lambda_at(t);
        Ok((lam, uniform_field(grid, lam, &schedule.target)?))
    };
    for stage in stages {
        for j in 0..steps_per_stage {
            let n = stage * steps_per_stage + j;
            let (_, h) = field(n as f64 * dt)?;
            let step = stepper.director(&d, &h)?;
            d = step.field;
            let t1 = (n + 1) as f64 * dt;
            let (lam1, h1) = field(t1)?;
            recorder.record(grid, offset + t1, &d, &h1, lam1, step.pre_drift);
        }
    }
    Ok(d)
}

/// Null-control stage: Picard control of the chart system around the leg
/// target, then director steps under the synthesized field.
#[allow(clippy::too_many_arguments)]
pub fn run_null_stage(
    grid: &Grid,
    mut d: DirectorField,
    schedule: &Schedule,
    dt: f64,
    steps: usize,
    offset: f64,
    config: &PicardConfig,
    recorder: &mut TrajectoryRecorder,
) -> Result<(DirectorField, PicardResult)> {
    let rotation = schedule.chart_rotation();
    let stepper = Stepper::new(grid, dt)?;
    let v0 = to_chart(&d, &rotation)?;
    let picard = picard_null_control(&stepper, &v0, steps as f64 * dt, config)?;
    for (n, f) in picard.control.iter().enumerate() {
        let v = to_chart(&d, &rotation)?;
        let h = synthesize_field(grid, &v, f)?.rotated(&rotation);
        let step = stepper.director(&d, &h)?;
        d = step.field;
        recorder.record(grid, offset + (n + 1) as f64 * dt, &d, &h, f64::NAN, step.pre_drift);
    }
    Ok((d, picard))
}

/// Result of one full leg.
#[derive(Debug, Clone)]
pub struct LegOutcome {
    pub state: DirectorField,
    pub report: TrajectoryReport,
    pub checks: Vec<MonitorCheck>,
    /// (measured, bound) at 3T₀.
    pub decay: (f64, f64),
    pub eps0: f64,
    pub dt: f64,
    pub picard: Option<PicardResult>,
}

/// Runs stages 0..5 (and the null-control stage when `null_control` is
/// given) of `schedule` from `d0`, then evaluates the leg monitors.
pub fn run_leg(
    grid: &Grid,
    d0: &DirectorField,
    schedule: &Schedule,
    dt_max: f64,
    offset: f64,
    slack: f64,
    null_control: Option<&PicardConfig>,
) -> Result<LegOutcome> {
    let (dt, steps) = schedule.time_step(dt_max)?;
    let eps0 = hemisphere_margin(d0, &schedule.target);
    if !(eps0 > 0.0) {
        return Err(Error::Domain(format!(
            "leg start violates the hemisphere condition: min d·target = {eps0:.3e}"
        )));
    }
    let start = LegStart {
        eps0,
        grad_sup: sup_gradient(grid, d0),
        offset,
    };
    let mut recorder = TrajectoryRecorder::new(schedule.target).with_bernstein(eps0);
    recorder.record(grid, offset, d0, &MagneticField::zeros(grid), 0.0, 0.0);
    let mut d = run_uniform_stages(grid, d0.clone(), schedule, dt, steps, 0..5, offset, &mut recorder)?;
    let mut picard = None;
    if let Some(cfg) = null_control {
        let (next, res) = run_null_stage(
            grid,
            d,
            schedule,
            dt,
            steps,
            offset + 5.0 * schedule.t0,
            cfg,
            &mut recorder,
        )?;
        d = next;
        picard = Some(res);
    }
    let report = recorder.finish();
    let checks = leg_checks(&report, schedule, start, slack);
    let decay = decay_check(&report, schedule, offset)?;
    Ok(LegOutcome {
        state: d,
        report,
        checks,
        decay,
        eps0,
        dt,
        picard,
    })
}

/// Smooth control bump supported in ω: `amplitude·Πₖ sin²(π sₖ)·(1, −½)`,
/// sₖ the position across the box.
pub fn control_bump(grid: &Grid, amplitude: f64) -> ControlDensity {
    let region = grid.region().clone();
    ControlDensity::from_fn(grid, |i| {
        let mut s = 1.0;
        for k in 0..grid.dimension() {
            let ext = grid.axes()[k].extent;
            let (lo, hi) = (region.lo[k] * ext, region.hi[k] * ext);
            let x = grid.coordinate(i, k);
            s *= (std::f64::consts::PI * (x - lo) / (hi - lo)).sin().powi(2);
        }
        Vec2::new(amplitude, -0.5 * amplitude) * s
    })
}

/// Two-solver comparison: director under the synthesized field against
/// the chart system, both driven by the same control `f`. Returns the
/// sup-norm discrepancy |Ψ(v) − d| after every step.
pub fn equivalence_run(
    grid: &Grid,
    d0: &DirectorField,
    axis: &UnitVector3,
    f: &ControlDensity,
    dt: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let rotation = magsteer_core::stage_control::rotation_to_pole(axis);
    let stepper = Stepper::new(grid, dt)?;
    let mut d = d0.clone();
    let mut v = to_chart(d0, &rotation)?;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let h = synthesize_field(grid, &to_chart(&d, &rotation)?, f)?.rotated(&rotation);
        d = stepper.director(&d, &h)?.field;
        v = stepper.chart(&v, f)?;
        out.push(from_chart(&v, &rotation).sup_distance(&d));
    }
    Ok(out)
}
