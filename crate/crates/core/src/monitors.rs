//! Runtime monitors for the maximum-principle estimates of the flow.
//!
//! All functions here take immutable references; recording a trajectory
//! never feeds back into the simulation.

use std::io::Write;

use crate::error::{domain, Result};
use crate::geometry::UnitVector3;
use crate::grid_pde::{gradient, DirectorField, Grid, MagneticField};
use crate::stage_control::{decay_bound, Schedule};

/// Relative slack for sup-norm bounds on the discrete flow.
pub const GRID_SLACK: f64 = 0.05;

/// min over nodes of d·e.
pub fn hemisphere_margin(d: &DirectorField, e: &UnitVector3) -> f64 {
    let e = e.as_vec();
    d.iter().map(|x| x.dot(&e)).fold(f64::INFINITY, f64::min)
}

/// max over nodes of 1 − d·e, evaluated as ½|d − e|² (equal for unit d,
/// without cancellation near d = e).
pub fn axis_deviation(d: &DirectorField, e: &UnitVector3) -> f64 {
    let e = e.as_vec();
    d.iter().map(|x| 0.5 * (x - e).norm_squared()).fold(0.0, f64::max)
}

/// |∇d|² per node, centred differences.
fn gradient_sq(grid: &Grid, d: &DirectorField) -> Vec<f64> {
    gradient(grid, d)
        .iter()
        .map(|g| g[0].norm_squared() + g[1].norm_squared())
        .collect()
}

/// sup over nodes of |∇d|.
pub fn sup_gradient(grid: &Grid, d: &DirectorField) -> f64 {
    gradient_sq(grid, d).into_iter().fold(0.0, f64::max).sqrt()
}

/// ½∫(|∇d|² − (H·d)²): edge differences for the Dirichlet part, trapezoid
/// weights for the potential.
pub fn energy(grid: &Grid, d: &DirectorField, h: &MagneticField) -> f64 {
    let mut dirichlet = 0.0;
    for axis in 0..grid.dimension() {
        let stride = grid.stride(axis);
        let dx = grid.spacing(axis);
        let n = grid.axes()[axis].count;
        for start in grid.line_starts(axis) {
            // transverse trapezoid weight of this line
            let w = grid.weights()[start] / half_weight(grid, axis, 0);
            for i in 0..n - 1 {
                let a = start + i * stride;
                dirichlet += w * (d[a + stride] - d[a]).norm_squared() / dx;
            }
        }
    }
    let potential: f64 = d
        .iter()
        .zip(h.iter())
        .zip(grid.weights())
        .map(|((di, hi), w)| w * hi.dot(di).powi(2))
        .sum();
    0.5 * (dirichlet - potential)
}

/// 1D trapezoid weight of index `i` along `axis`.
fn half_weight(grid: &Grid, axis: usize, i: usize) -> f64 {
    let ax = &grid.axes()[axis];
    if i == 0 || i + 1 == ax.count {
        0.5 * ax.spacing()
    } else {
        ax.spacing()
    }
}

/// max over nodes of ½|∇d|² / (d·e − δ₀)².
pub fn bernstein_quotient(grid: &Grid, d: &DirectorField, e: &UnitVector3, delta0: f64) -> f64 {
    let ev = e.as_vec();
    gradient_sq(grid, d)
        .iter()
        .zip(d.iter())
        .map(|(g2, di)| 0.5 * g2 / (di.dot(&ev) - delta0).powi(2))
        .fold(0.0, f64::max)
}

/// sup over nodes of |d − d_prev| / dt.
pub fn sup_time_derivative(prev: &DirectorField, next: &DirectorField, dt: f64) -> f64 {
    next.sup_distance(prev) / dt
}

/// Chart radius |v| around `e` for unit d: |v|² = (1 − μ)/(1 + μ), μ = d·e.
fn chart_radius(d: &DirectorField, e: &UnitVector3) -> f64 {
    let ev = e.as_vec();
    d.iter()
        .map(|x| {
            let one_minus = 0.5 * (x - ev).norm_squared();
            let one_plus = 2.0 - one_minus;
            if one_plus <= 0.0 {
                f64::INFINITY
            } else {
                (one_minus / one_plus).sqrt()
            }
        })
        .fold(0.0, f64::max)
}

/// One accepted time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub step: usize,
    pub time: f64,
    /// Uniform-field amplitude at this time, or NaN on null-control steps.
    pub lambda: f64,
    pub norm_dev: f64,
    pub pre_drift: f64,
    pub margin: f64,
    pub axis_dev: f64,
    pub grad_sup: f64,
    /// Backward difference; 0 on the first row.
    pub dtd_sup: f64,
    pub energy: f64,
    pub chart_sup: f64,
    /// NaN when the diagnostic is disabled.
    pub bernstein: f64,
}

/// Frozen column order of [`TrajectoryReport::write_csv`].
pub const CSV_COLUMNS: [&str; 12] = [
    "step",
    "time",
    "lambda",
    "norm_dev",
    "pre_drift",
    "margin",
    "axis_dev",
    "grad_sup",
    "dtd_sup",
    "energy",
    "chart_sup",
    "bernstein",
];

/// Time series of the monitored quantities along one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryReport {
    pub axis: UnitVector3,
    pub rows: Vec<ReportRow>,
}

impl TrajectoryReport {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&ReportRow> {
        self.rows.last()
    }

    /// Row whose time is closest to `t`.
    pub fn row_at(&self, t: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }

    pub fn series(&self, f: impl Fn(&ReportRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.norm_dev).fold(0.0, f64::max)
    }

    pub fn min_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }

    /// Appends another report, shifting its step index.
    pub fn extend(&mut self, other: &TrajectoryReport) {
        let offset = self.rows.last().map_or(0, |r| r.step + 1);
        let skip = usize::from(
            matches!((self.rows.last(), other.rows.first()), (Some(a), Some(b)) if a.time == b.time),
        );
        for r in other.rows.iter().skip(skip) {
            self.rows.push(ReportRow {
                step: r.step + offset - skip,
                ..*r
            });
        }
    }

    /// CSV with a header row of [`CSV_COLUMNS`]; floats in `{:.17e}`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", CSV_COLUMNS.join(","))?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.step,
                r.time,
                r.lambda,
                r.norm_dev,
                r.pre_drift,
                r.margin,
                r.axis_dev,
                r.grad_sup,
                r.dtd_sup,
                r.energy,
                r.chart_sup,
                r.bernstein
            )?;
        }
        Ok(())
    }
}

/// Builds a [`TrajectoryReport`] step by step.
#[derive(Debug, Clone)]
pub struct TrajectoryRecorder {
    axis: UnitVector3,
    bernstein_delta: Option<f64>,
    prev: Option<(f64, DirectorField)>,
    rows: Vec<ReportRow>,
}

impl TrajectoryRecorder {
    /// Records margins against `axis`.
    pub fn new(axis: UnitVector3) -> Self {
        Self {
            axis,
            bernstein_delta: None,
            prev: None,
            rows: Vec::new(),
        }
    }

    /// Enables the Bernstein quotient series with δ₀ = ε₀/2.
    pub fn with_bernstein(mut self, eps0: f64) -> Self {
        self.bernstein_delta = Some(0.5 * eps0);
        self
    }

    pub fn axis(&self) -> &UnitVector3 {
        &self.axis
    }

    pub fn record(
        &mut self,
        grid: &Grid,
        time: f64,
        d: &DirectorField,
        h: &MagneticField,
        lambda: f64,
        pre_drift: f64,
    ) {
        let dtd_sup = match &self.prev {
            Some((t, p)) if time > *t => sup_time_derivative(p, d, time - t),
            _ => 0.0,
        };
        let row = ReportRow {
            step: self.rows.len(),
            time,
            lambda,
            norm_dev: d.max_norm_deviation(),
            pre_drift,
            margin: hemisphere_margin(d, &self.axis),
            axis_dev: axis_deviation(d, &self.axis),
            grad_sup: sup_gradient(grid, d),
            dtd_sup,
            energy: energy(grid, d, h),
            chart_sup: chart_radius(d, &self.axis),
            bernstein: self
                .bernstein_delta
                .map_or(f64::NAN, |delta| bernstein_quotient(grid, d, &self.axis, delta)),
        };
        self.rows.push(row);
        self.prev = Some((time, d.clone()));
    }

    pub fn finish(self) -> TrajectoryReport {
        TrajectoryReport {
            axis: self.axis,
            rows: self.rows,
        }
    }

    pub fn report(&self) -> TrajectoryReport {
        TrajectoryReport {
            axis: self.axis,
            rows: self.rows.clone(),
        }
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// max over the report of sup|∇d| divided by `(2/ε₀)·sup|∇d₀|`.
pub fn gradient_bound_ratio(report: &TrajectoryReport, grid: &Grid, d0: &DirectorField, eps0: f64) -> Result<f64> {
    if !(eps0 > 0.0) {
        return Err(domain(format!("hemisphere margin must be positive, got {eps0}")));
    }
    let bound = 2.0 / eps0 * sup_gradient(grid, d0);
    let worst = report.rows.iter().map(|r| r.grad_sup).fold(0.0, f64::max);
    Ok(ratio(worst, bound))
}

/// Round-off floor of a difference-quotient time derivative, in units of ε/dt.
pub const DERIVATIVE_NOISE_ULPS: f64 = 16.0;

/// On the window `(t1, t2]`: max of sup|∂t d| divided by ε₁⁻¹ times its
/// first value in the window, ε₁ the margin at `t1`. The denominator is
/// floored at [`DERIVATIVE_NOISE_ULPS`]·ε/dt so a settled state does not
/// compare rounding noise with rounding noise.
pub fn time_derivative_monotone(report: &TrajectoryReport, t1: f64, t2: f64) -> Result<f64> {
    let tol = 1e-9 * t1.abs().max(t2.abs()).max(1.0);
    let start = report
        .row_at(t1)
        .filter(|r| (r.time - t1).abs() <= tol)
        .ok_or_else(|| domain(format!("time {t1} not on the trajectory")))?;
    let eps1 = start.margin;
    if !(eps1 > 0.0) {
        return Err(domain(format!("margin {eps1} at t = {t1} is not positive")));
    }
    let window: Vec<&ReportRow> = report
        .rows
        .iter()
        .filter(|r| r.time > t1 + tol && r.time <= t2 + tol)
        .collect();
    let Some(first) = window.first() else {
        return Err(domain(format!("empty window ({t1}, {t2}]")));
    };
    let floor = DERIVATIVE_NOISE_ULPS * f64::EPSILON / (first.time - start.time);
    let worst = window.iter().map(|r| r.dtd_sup).fold(0.0, f64::max);
    Ok(ratio(worst, (first.dtd_sup / eps1).max(floor)))
}

/// (measured 1 − min d·e at 3T₀, comparison bound with ε₀ measured at 2T₀).
///
/// `offset` is the report time of the leg start.
pub fn decay_check(report: &TrajectoryReport, schedule: &Schedule, offset: f64) -> Result<(f64, f64)> {
    let t0 = schedule.t0;
    let tol = 1e-9 * (offset + 6.0 * t0);
    let at = |t: f64| {
        report
            .row_at(offset + t)
            .filter(|r| (r.time - offset - t).abs() <= tol)
            .ok_or_else(|| domain(format!("trajectory does not reach t = {}", offset + t)))
    };
    let measured = at(3.0 * t0)?.axis_dev;
    let eps0 = at(2.0 * t0)?.margin;
    Ok((measured, decay_bound(schedule.lambda, eps0, t0)))
}

/// Largest energy increase between consecutive rows of `(t1, t2]`.
pub fn max_energy_increase(report: &TrajectoryReport, t1: f64, t2: f64) -> f64 {
    let tol = 1e-9 * t2.abs().max(1.0);
    let window: Vec<&ReportRow> = report
        .rows
        .iter()
        .filter(|r| r.time >= t1 - tol && r.time <= t2 + tol)
        .collect();
    window
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Outcome of one monitored bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorCheck {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl MonitorCheck {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }
}

/// Inputs for [`leg_checks`] measured at the leg start.
#[derive(Debug, Clone, Copy)]
pub struct LegStart {
    /// min d₀·e against the leg's field axis.
    pub eps0: f64,
    /// sup|∇d₀|.
    pub grad_sup: f64,
    /// Report time of the leg start.
    pub offset: f64,
}

/// Bound checks for one leg of the schedule, at relative slack `slack`:
///
/// - unit norm within [`crate::grid_pde::NORM_TOL`]
/// - hemisphere margin ≥ ε₀ − slack on the uniform-field stages
/// - sup|∇d| ≤ (1 + slack)(2/ε₀) sup|∇d₀| on the uniform-field stages
/// - sup|∂t d| bound on the two constant-amplitude windows
/// - energy non-increasing on the constant-field windows
pub fn leg_checks(report: &TrajectoryReport, schedule: &Schedule, start: LegStart, slack: f64) -> Vec<MonitorCheck> {
    let t0 = schedule.t0;
    let off = start.offset;
    let tol = 1e-9 * (off + 6.0 * t0);
    let uniform: Vec<&ReportRow> = report
        .rows
        .iter()
        .filter(|r| r.time >= off - tol && r.time <= off + 5.0 * t0 + tol)
        .collect();
    let mut out = Vec::new();

    let norm = report
        .rows
        .iter()
        .filter(|r| r.time >= off - tol && r.time <= off + 6.0 * t0 + tol)
        .map(|r| r.norm_dev)
        .fold(0.0, f64::max);
    out.push(MonitorCheck::at_most("unit_norm", norm, crate::grid_pde::NORM_TOL));

    let margin = uniform.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    out.push(MonitorCheck::at_least("hemisphere_margin", margin, start.eps0 - slack));

    let grad = uniform.iter().map(|r| r.grad_sup).fold(0.0, f64::max);
    let bound = 2.0 / start.eps0 * start.grad_sup;
    out.push(MonitorCheck::at_most("gradient_bound_ratio", ratio(grad, bound), 1.0 + slack));

    for (a, b) in [(2.0, 3.0), (4.0, 5.0)] {
        let name = format!("time_derivative[{a}T0,{b}T0]");
        let value = time_derivative_monotone(report, off + a * t0, off + b * t0).unwrap_or(f64::INFINITY);
        out.push(MonitorCheck::at_most(name, value, 1.0 + slack));
    }

    for (a, b, lam) in [(0.0, 1.0, 0.0), (2.0, 3.0, schedule.lambda), (4.0, 5.0, 0.0)] {
        let name = format!("energy_increase[{a}T0,{b}T0]");
        let value = max_energy_increase(report, off + a * t0, off + b * t0);
        out.push(MonitorCheck::at_most(name, value, 1e-10 * (1.0 + lam * lam)));
    }
    out
}
