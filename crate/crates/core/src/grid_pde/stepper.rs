//! Semi-implicit time steppers: implicit factorized diffusion, explicit
//! nonlinear and field terms.

use crate::error::{domain, Error, Result};
use crate::geometry::CHART_CAP;
use crate::grid_pde::stencil::{gradient, neumann_laplacian, ImplicitDiffusion};
use crate::grid_pde::{ChartField, ControlDensity, DirectorField, Grid, LinearState, MagneticField};
use crate::{Mat2, Vec2};

/// Pre-renormalization norm drift above which a step is declared unstable.
pub const BLOWUP_DRIFT: f64 = 0.1;
/// Accepted | |d|² − 1 | on director input.
pub const NORM_TOL: f64 = 1e-9;

/// Largest admissible step for field amplitude Λ: `0.25·min(1, 1/(1 + Λ²))`.
pub fn max_stable_dt(lambda: f64) -> f64 {
    0.25 * (1.0f64).min(1.0 / (1.0 + lambda * lambda))
}

/// Direction of a linearized step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Adjoint,
}

/// Result of one director step.
#[derive(Debug, Clone)]
pub struct DirectorStep {
    pub field: DirectorField,
    /// max | |d*|² − 1 | before renormalization.
    pub pre_drift: f64,
}

/// γ(v, ∇v) = (−4 ∇vᵢ·∇vⱼ + 2|∇v|² δᵢⱼ) / (1 + |v|²).
///
/// γ(v, ∇v)·v equals the chart nonlinearity `−2∇v·∇log h + 2|∇v|² v / h`
/// identically, which is what makes the frozen-coefficient iteration's
/// fixed point a solution of the nonlinear chart system.
pub fn chart_gamma(v: &Vec2, grad: &[Vec2; 2]) -> Mat2 {
    let h = 1.0 + v.norm_squared();
    let mut outer = Mat2::zeros();
    let mut sq = 0.0;
    for g in grad {
        outer += g * g.transpose();
        sq += g.norm_squared();
    }
    (outer * -4.0 + Mat2::identity() * (2.0 * sq)) / h
}

/// Time stepper bound to one grid and step size.
#[derive(Debug, Clone)]
pub struct Stepper<'g> {
    grid: &'g Grid,
    diffusion: ImplicitDiffusion,
}

impl<'g> Stepper<'g> {
    pub fn new(grid: &'g Grid, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(domain(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            grid,
            diffusion: ImplicitDiffusion::new(grid, dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.diffusion.dt()
    }

    pub fn grid(&self) -> &'g Grid {
        self.grid
    }

    pub fn diffusion(&self) -> &ImplicitDiffusion {
        &self.diffusion
    }

    /// One step of `∂t d − Δd = |∇d|² d + (H·d) H − (H·d)² d`, followed by
    /// node-wise projection onto S².
    ///
    /// The tension term uses the discrete |∇d|² := −d·Δ_h d, so that the
    /// normal part of the explicit right side cancels Δ_h d exactly and the
    /// pre-projection drift is O(dt²).
    pub fn director(&self, d: &DirectorField, h: &MagneticField) -> Result<DirectorStep> {
        let grid = self.grid;
        d.check_len(grid)?;
        h.check_len(grid)?;
        let dev = d.max_norm_deviation();
        if dev > NORM_TOL {
            return Err(domain(format!("director input off the sphere by {dev:.3e}")));
        }
        let dt = self.dt();
        let lap = neumann_laplacian(grid, d);
        let mut next: Vec<_> = d
            .iter()
            .zip(&lap)
            .zip(h.iter())
            .map(|((di, li), hi)| {
                let tension = -di.dot(li);
                let hd = hi.dot(di);
                di + (di * tension + hi * hd - di * (hd * hd)) * dt
            })
            .collect();
        self.diffusion.apply(&mut next);

        let pre_drift = next
            .iter()
            .map(|x| (x.norm_squared() - 1.0).abs())
            .fold(0.0, f64::max);
        if !(pre_drift <= BLOWUP_DRIFT) {
            return Err(Error::Stability {
                drift: pre_drift,
                limit: BLOWUP_DRIFT,
            });
        }
        for x in &mut next {
            *x /= x.norm();
        }
        Ok(DirectorStep {
            field: DirectorField::new(next),
            pre_drift,
        })
    }

    /// One step of the chart system
    /// `∂t v − Δv = −2∇v·∇log(1+|v|²) + 2|∇v|² v/(1+|v|²) + χ_ω f`.
    pub fn chart(&self, v: &ChartField, f: &ControlDensity) -> Result<ChartField> {
        let grid = self.grid;
        v.check_len(grid)?;
        f.field().check_len(grid)?;
        let dt = self.dt();
        let grads = gradient(grid, v);
        let mut next: Vec<Vec2> = v
            .iter()
            .zip(&grads)
            .zip(f.iter())
            .map(|((vi, gi), fi)| vi + (chart_gamma(vi, gi) * vi + fi) * dt)
            .collect();
        self.diffusion.apply(&mut next);
        let field = ChartField::new(next);
        let magnitude = field.sup_norm();
        if !(magnitude <= CHART_CAP) {
            return Err(Error::ChartBlowup {
                magnitude,
                cap: CHART_CAP,
            });
        }
        Ok(field)
    }

    /// Forward: `y ← S (y + dt (a y + χ_ω u))`, one step of
    /// `∂t y − Δy = a y + χ_ω u`.
    pub fn linear_forward(&self, y: &LinearState, a: &[Mat2], u: Option<&ControlDensity>) -> Result<LinearState> {
        let grid = self.grid;
        y.check_len(grid)?;
        if a.len() != grid.node_count() {
            return Err(domain("coefficient slab does not match the grid"));
        }
        let dt = self.dt();
        let mut next: Vec<Vec2> = y
            .iter()
            .zip(a)
            .enumerate()
            .map(|(i, (yi, ai))| {
                let src = u.map_or(Vec2::zeros(), |u| u[i]);
                yi + (ai * yi + src) * dt
            })
            .collect();
        self.diffusion.apply(&mut next);
        finite_or_unstable(LinearState::new(next))
    }

    /// Adjoint of [`Self::linear_forward`] (with u = 0) in the weighted inner
    /// product: `p ← (I + dt aᵀ) S* p`. Marches backward in time.
    pub fn linear_adjoint(&self, p: &LinearState, a: &[Mat2]) -> Result<LinearState> {
        let grid = self.grid;
        p.check_len(grid)?;
        if a.len() != grid.node_count() {
            return Err(domain("coefficient slab does not match the grid"));
        }
        let dt = self.dt();
        let mut sp = p.to_vec();
        self.diffusion.apply_adjoint(&mut sp);
        let next = sp
            .iter()
            .zip(a)
            .map(|(pi, ai)| pi + ai.transpose() * pi * dt)
            .collect();
        finite_or_unstable(LinearState::new(next))
    }

    pub fn linearized(
        &self,
        y: &LinearState,
        a: &[Mat2],
        u: Option<&ControlDensity>,
        direction: Direction,
    ) -> Result<LinearState> {
        match direction {
            Direction::Forward => self.linear_forward(y, a, u),
            Direction::Adjoint => self.linear_adjoint(y, a),
        }
    }
}

fn finite_or_unstable(y: LinearState) -> Result<LinearState> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Stability {
            drift: f64::INFINITY,
            limit: BLOWUP_DRIFT,
        })
    }
}

/// One director step; see [`Stepper::director`].
pub fn step_director(grid: &Grid, d: &DirectorField, h: &MagneticField, dt: f64) -> Result<DirectorStep> {
    Stepper::new(grid, dt)?.director(d, h)
}

/// One chart step; see [`Stepper::chart`].
pub fn step_chart(grid: &Grid, v: &ChartField, f: &ControlDensity, dt: f64) -> Result<ChartField> {
    Stepper::new(grid, dt)?.chart(v, f)
}

/// One step of the linearized system or its adjoint; `u` is ignored in adjoint mode.
pub fn step_linearized(
    grid: &Grid,
    y: &LinearState,
    a: &[Mat2],
    u: Option<&ControlDensity>,
    dt: f64,
    direction: Direction,
) -> Result<LinearState> {
    Stepper::new(grid, dt)?.linearized(y, a, u, direction)
}
