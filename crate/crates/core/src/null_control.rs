//! Local null control of the chart system.
//!
//! The linear problem `∂t y − Δy = a(x,t) y + χ_ω u` is controlled by
//! penalized HUM: minimize
//!
//! ```text
//! J(u) = ½‖u‖²_{L²(ω×(0,T))} + (1/(2ε))‖y(T)‖²_{L²(Ω)}
//! ```
//!
//! with linear conjugate gradients, the gradient coming from the discrete
//! adjoint of the forward scheme. The nonlinear chart system is handled by a
//! Picard loop: freeze the trajectory z, assemble a = γ(z, ∇z), solve the
//! linear control problem, re-simulate, repeat.

use crate::error::{domain, Error, Result};
use crate::grid_pde::{chart_gamma, gradient, ChartField, ControlDensity, Grid, LinearState, Stepper};
use crate::{Mat2, Vec2};

/// a(x, tₙ) per node, one slab per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedCoeff {
    slabs: Vec<Vec<Mat2>>,
}

impl LinearizedCoeff {
    pub fn zeros(grid: &Grid, steps: usize) -> Self {
        Self {
            slabs: vec![vec![Mat2::zeros(); grid.node_count()]; steps],
        }
    }

    pub fn from_slabs(slabs: Vec<Vec<Mat2>>) -> Self {
        Self { slabs }
    }

    pub fn steps(&self) -> usize {
        self.slabs.len()
    }

    pub fn slab(&self, n: usize) -> &[Mat2] {
        &self.slabs[n]
    }

    /// max over nodes and slabs of the largest absolute entry.
    pub fn sup_norm(&self) -> f64 {
        self.slabs
            .iter()
            .flatten()
            .map(|m| m.abs().max())
            .fold(0.0, f64::max)
    }
}

/// γ(v, ∇v) on one time slab, with centred-difference gradients.
pub fn coefficient_matrix(grid: &Grid, v: &ChartField) -> Vec<Mat2> {
    let grads = gradient(grid, v);
    v.iter().zip(&grads).map(|(vi, gi)| chart_gamma(vi, gi)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumConfig {
    /// ε > 0 in the terminal penalty 1/(2ε).
    pub penalty: f64,
    /// Relative gradient-norm tolerance for CG.
    pub tol: f64,
    pub maxit: usize,
}

impl Default for HumConfig {
    fn default() -> Self {
        Self {
            penalty: 1e-8,
            tol: 1e-11,
            maxit: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HumResult {
    /// u(tₙ) for n = 0..N−1, zero off ω.
    pub control: Vec<ControlDensity>,
    pub initial_norm: f64,
    /// ‖y(T)‖ without control.
    pub free_terminal_norm: f64,
    pub terminal_norm: f64,
    /// ‖u‖_{L²(Q)}.
    pub cost: f64,
    /// max |u| over Q (observed, not bounded).
    pub control_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final relative gradient norm.
    pub relative_gradient: f64,
}

impl HumResult {
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence {
                iterations: self.iterations,
                achieved: self.terminal_norm,
                detail: format!(
                    "HUM CG stopped at relative gradient {:.3e}, terminal norm {:.3e}",
                    self.relative_gradient, self.terminal_norm
                ),
            })
        }
    }
}

type Path = Vec<Vec<Vec2>>;

/// Discrete penalized HUM problem for a fixed coefficient and initial state.
pub struct HumProblem<'s, 'g> {
    stepper: &'s Stepper<'g>,
    coeff: &'s LinearizedCoeff,
    y0: &'s LinearState,
    penalty: f64,
}

impl<'s, 'g> HumProblem<'s, 'g> {
    pub fn new(stepper: &'s Stepper<'g>, coeff: &'s LinearizedCoeff, y0: &'s LinearState, penalty: f64) -> Result<Self> {
        let grid = stepper.grid();
        y0.check_len(grid)?;
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(domain(format!("penalty must be positive, got {penalty}")));
        }
        if coeff.slabs.iter().any(|s| s.len() != grid.node_count()) {
            return Err(domain("coefficient slabs do not match the grid"));
        }
        Ok(Self {
            stepper,
            coeff,
            y0,
            penalty,
        })
    }

    pub fn steps(&self) -> usize {
        self.coeff.steps()
    }

    fn grid(&self) -> &'g Grid {
        self.stepper.grid()
    }

    fn zero_path(&self) -> Path {
        vec![vec![Vec2::zeros(); self.grid().node_count()]; self.steps()]
    }

    /// ⟨u, w⟩ on L²(Q): dt Σₙ Σᵢ wᵢ uᵢⁿ·wᵢⁿ.
    fn path_dot(&self, u: &Path, w: &Path) -> f64 {
        let weights = self.grid().weights();
        let mut sum = 0.0;
        for (us, ws) in u.iter().zip(w) {
            for ((a, b), wt) in us.iter().zip(ws).zip(weights) {
                sum += wt * a.dot(b);
            }
        }
        sum * self.stepper.dt()
    }

    fn forward(&self, y0: &[Vec2], u: Option<&Path>, mut keep: Option<&mut Vec<LinearState>>) -> Result<LinearState> {
        let grid = self.grid();
        let mut y = LinearState::new(y0.to_vec());
        if let Some(k) = keep.as_deref_mut() {
            k.push(y.clone());
        }
        for n in 0..self.steps() {
            let src = u.map(|u| ControlDensity::masked(grid, u[n].clone()));
            y = self.stepper.linear_forward(&y, self.coeff.slab(n), src.as_ref())?;
            if let Some(k) = keep.as_deref_mut() {
                k.push(y.clone());
            }
        }
        Ok(y)
    }

    /// L*φ: the control-space representative of u ↦ ⟨y(T; y₀=0, u), φ⟩.
    fn adjoint(&self, phi: &[Vec2]) -> Path {
        let grid = self.grid();
        let dt = self.stepper.dt();
        let mut out = self.zero_path();
        let mut p = phi.to_vec();
        for n in (0..self.steps()).rev() {
            self.stepper.diffusion().apply_adjoint(&mut p);
            for (i, (o, q)) in out[n].iter_mut().zip(&p).enumerate() {
                if grid.in_omega(i) {
                    *o = *q;
                }
            }
            for (q, a) in p.iter_mut().zip(self.coeff.slab(n)) {
                *q += a.transpose() * *q * dt;
            }
        }
        out
    }

    fn to_path(&self, u: &[ControlDensity]) -> Result<Path> {
        if u.len() != self.steps() {
            return Err(domain(format!("control has {} slabs, expected {}", u.len(), self.steps())));
        }
        Ok(u.iter().map(|c| c.to_vec()).collect())
    }

    /// L w: terminal state from y₀ = 0 under control w.
    pub fn control_to_state(&self, w: &[ControlDensity]) -> Result<LinearState> {
        let path = self.to_path(w)?;
        self.forward(&vec![Vec2::zeros(); self.grid().node_count()], Some(&path), None)
    }

    /// L*φ in the L²(Q) inner product.
    pub fn state_to_control(&self, phi: &LinearState) -> Result<Vec<ControlDensity>> {
        phi.check_len(self.grid())?;
        let grid = self.grid();
        Ok(self
            .adjoint(phi)
            .into_iter()
            .map(|s| ControlDensity::masked(grid, s))
            .collect())
    }

    /// ⟨u, w⟩ in L²(ω × (0, T)).
    pub fn control_inner(&self, u: &[ControlDensity], w: &[ControlDensity]) -> Result<f64> {
        Ok(self.path_dot(&self.to_path(u)?, &self.to_path(w)?))
    }

    /// y(T) for control u.
    pub fn terminal_state(&self, u: &[ControlDensity]) -> Result<LinearState> {
        let path = self.to_path(u)?;
        self.forward(self.y0, Some(&path), None)
    }

    /// y(t₀), …, y(t_N) for control u.
    pub fn trajectory(&self, u: &[ControlDensity]) -> Result<Vec<LinearState>> {
        let path = self.to_path(u)?;
        let mut traj = Vec::with_capacity(self.steps() + 1);
        self.forward(self.y0, Some(&path), Some(&mut traj))?;
        Ok(traj)
    }

    pub fn objective(&self, u: &[ControlDensity]) -> Result<f64> {
        let path = self.to_path(u)?;
        let yt = self.forward(self.y0, Some(&path), None)?;
        Ok(0.5 * self.path_dot(&path, &path) + 0.5 / self.penalty * yt.inner(&yt, self.grid()))
    }

    /// ∇J(u) = u + (1/ε) L* y(T; u), in the L²(Q) inner product.
    pub fn gradient(&self, u: &[ControlDensity]) -> Result<Vec<ControlDensity>> {
        let path = self.to_path(u)?;
        let yt = self.forward(self.y0, Some(&path), None)?;
        let adj = self.adjoint(&yt);
        let grid = self.grid();
        Ok(path
            .iter()
            .zip(&adj)
            .map(|(us, gs)| {
                let g = us.iter().zip(gs).map(|(a, b)| a + b / self.penalty).collect();
                ControlDensity::masked(grid, g)
            })
            .collect())
    }

    /// Directional derivative ⟨∇J(u), w⟩ in L²(Q).
    pub fn directional_derivative(&self, u: &[ControlDensity], w: &[ControlDensity]) -> Result<f64> {
        let g = self.to_path(&self.gradient(u)?)?;
        Ok(self.path_dot(&g, &self.to_path(w)?))
    }

    /// Linear CG on the normal equations `(I + ε⁻¹ L*L) u = −ε⁻¹ L* y_free(T)`.
    pub fn solve(&self, tol: f64, maxit: usize) -> Result<HumResult> {
        let grid = self.grid();
        let inv_eps = 1.0 / self.penalty;
        let initial_norm = self.y0.l2_norm(grid);
        let y_free = self.forward(self.y0, None, None)?;
        let free_terminal_norm = y_free.l2_norm(grid);

        let mut x = self.zero_path();
        let mut r = self.adjoint(&y_free);
        scale(&mut r, -inv_eps);
        let rr0 = self.path_dot(&r, &r);
        let mut rr = rr0;
        let mut iterations = 0;
        let mut relative = if rr0 > 0.0 { 1.0 } else { 0.0 };
        let mut converged = rr0 == 0.0;
        let mut p = r.clone();

        while !converged && iterations < maxit {
            iterations += 1;
            let lp = self.forward(&vec![Vec2::zeros(); grid.node_count()], Some(&p), None)?;
            let mut ap = self.adjoint(&lp);
            scale(&mut ap, inv_eps);
            axpy(&mut ap, 1.0, &p);
            let pap = self.path_dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rr / pap;
            axpy(&mut x, alpha, &p);
            axpy(&mut r, -alpha, &ap);
            let rr_new = self.path_dot(&r, &r);
            relative = (rr_new / rr0).sqrt();
            if relative <= tol {
                converged = true;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for (ps, rs) in p.iter_mut().zip(&r) {
                for (pi, ri) in ps.iter_mut().zip(rs) {
                    *pi = ri + *pi * beta;
                }
            }
        }

        let yt = self.forward(self.y0, Some(&x), None)?;
        let control_sup = x.iter().flatten().map(|u| u.norm()).fold(0.0, f64::max);
        let cost = self.path_dot(&x, &x).sqrt();
        Ok(HumResult {
            control: x.into_iter().map(|s| ControlDensity::masked(grid, s)).collect(),
            initial_norm,
            free_terminal_norm,
            terminal_norm: yt.l2_norm(grid),
            cost,
            control_sup,
            iterations,
            converged,
            relative_gradient: relative,
        })
    }
}

fn scale(u: &mut Path, s: f64) {
    for v in u.iter_mut().flatten() {
        *v *= s;
    }
}

fn axpy(y: &mut Path, a: f64, x: &Path) {
    for (ys, xs) in y.iter_mut().zip(x) {
        for (yi, xi) in ys.iter_mut().zip(xs) {
            *yi += xi * a;
        }
    }
}

fn step_count(dt: f64, horizon: f64) -> Result<usize> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(domain(format!("control horizon must be positive, got {horizon}")));
    }
    let steps = (horizon / dt).round();
    if steps < 1.0 || (steps * dt - horizon).abs() > 1e-9 * horizon {
        return Err(domain(format!("horizon {horizon} is not a multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Penalized HUM control of the linearized system on `[0, horizon]`.
///
/// Returns the result even when CG hits `maxit`; use
/// [`HumResult::ensure_converged`] to turn that into an error.
pub fn hum_null_control(
    stepper: &Stepper<'_>,
    a: &LinearizedCoeff,
    y0: &LinearState,
    horizon: f64,
    config: &HumConfig,
) -> Result<HumResult> {
    let steps = step_count(stepper.dt(), horizon)?;
    if a.steps() != steps {
        return Err(domain(format!("coefficient has {} slabs, horizon needs {steps}", a.steps())));
    }
    HumProblem::new(stepper, a, y0, config.penalty)?.solve(config.tol, config.maxit)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    /// Tolerance on successive trajectory changes, sup norm relative to
    /// sup|v₀|.
    pub outer_tol: f64,
    pub outer_maxit: usize,
    /// Required ‖v(T)‖ / ‖v₀‖ (L²) at convergence.
    pub terminal_ratio: f64,
    /// ‖v(T)‖ at or below this is accepted regardless of the ratio, so data
    /// already at round-off size is not rejected.
    pub terminal_floor: f64,
    pub hum: HumConfig,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-8,
            outer_maxit: 10,
            terminal_ratio: 1e-2,
            terminal_floor: 1e-10,
            hum: HumConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardResult {
    /// f(tₙ), n = 0..N−1.
    pub control: Vec<ControlDensity>,
    /// v(tₙ), n = 0..N, of the fixed point.
    pub trajectory: Vec<ChartField>,
    pub iterations: usize,
    /// Sup-norm trajectory change per outer iteration.
    pub changes: Vec<f64>,
    pub initial_norm: f64,
    pub terminal_norm: f64,
    pub coeff_sup: f64,
    pub hum_iterations: Vec<usize>,
}

/// Picard iteration for null control of the nonlinear chart system.
pub fn picard_null_control(
    stepper: &Stepper<'_>,
    v0: &ChartField,
    horizon: f64,
    config: &PicardConfig,
) -> Result<PicardResult> {
    let grid = stepper.grid();
    v0.check_len(grid)?;
    let steps = step_count(stepper.dt(), horizon)?;
    let initial_norm = v0.l2_norm(grid);
    let v_scale = v0.sup_norm();

    if v0.iter().all(|v| *v == Vec2::zeros()) {
        return Ok(PicardResult {
            control: vec![ControlDensity::zeros(grid); steps],
            trajectory: vec![v0.clone(); steps + 1],
            iterations: 0,
            changes: Vec::new(),
            initial_norm: 0.0,
            terminal_norm: 0.0,
            coeff_sup: 0.0,
            hum_iterations: Vec::new(),
        });
    }

    let mut z: Vec<ChartField> = vec![v0.clone(); steps + 1];
    let mut changes = Vec::new();
    let mut hum_iterations = Vec::new();
    let mut last_terminal = f64::NAN;

    for k in 1..=config.outer_maxit {
        let coeff = LinearizedCoeff::from_slabs(z[..steps].iter().map(|zn| coefficient_matrix(grid, zn)).collect());
        let hum = HumProblem::new(stepper, &coeff, v0, config.hum.penalty)?.solve(config.hum.tol, config.hum.maxit)?;
        hum_iterations.push(hum.iterations);
        let problem = HumProblem::new(stepper, &coeff, v0, config.hum.penalty)?;
        let traj = problem.trajectory(&hum.control)?;

        let change = traj
            .iter()
            .zip(&z)
            .map(|(a, b)| a.sup_distance(b))
            .fold(0.0, f64::max);
        changes.push(change);
        if !change.is_finite() || traj.iter().any(|v| v.sup_norm() > crate::geometry::CHART_CAP) {
            return Err(Error::NoConvergence {
                iterations: k,
                achieved: f64::INFINITY,
                detail: "Picard trajectory blew up; initial chart data outside the local regime".into(),
            });
        }
        last_terminal = traj[steps].l2_norm(grid);
        z = traj.into_iter().map(|y| ChartField::new(y.into_vec())).collect();

        if change <= config.outer_tol * v_scale {
            if hum.converged && last_terminal <= (config.terminal_ratio * initial_norm).max(config.terminal_floor) {
                return Ok(PicardResult {
                    control: hum.control,
                    trajectory: z,
                    iterations: k,
                    changes,
                    initial_norm,
                    terminal_norm: last_terminal,
                    coeff_sup: coeff.sup_norm(),
                    hum_iterations,
                });
            }
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: changes.len(),
        achieved: last_terminal,
        detail: format!(
            "Picard loop: last change {:.3e}, terminal chart norm {:.3e} (initial {:.3e})",
            changes.last().copied().unwrap_or(f64::NAN),
            last_terminal,
            initial_norm
        ),
    })
}

/// Simulates the nonlinear chart system from v₀ with the given control path.
pub fn simulate_chart(stepper: &Stepper<'_>, v0: &ChartField, control: &[ControlDensity]) -> Result<Vec<ChartField>> {
    let mut out = Vec::with_capacity(control.len() + 1);
    out.push(v0.clone());
    let mut v = v0.clone();
    for f in control {
        v = stepper.chart(&v, f)?;
        out.push(v.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_reference_values() {
        let g = Grid::line(5, 1.0).unwrap();
        let v = ChartField::constant(&g, Vec2::new(0.3, -0.2));
        assert!(coefficient_matrix(&g, &v).iter().all(|m| *m == Mat2::zeros()));

        let m = chart_gamma(&Vec2::zeros(), &[Vec2::new(1.0, 0.0), Vec2::zeros()]);
        assert_eq!(m, Mat2::new(-2.0, 0.0, 0.0, 2.0));
        let c = 3.0;
        let mc = chart_gamma(&Vec2::zeros(), &[Vec2::new(c, 0.0), Vec2::zeros()]);
        assert_eq!(mc, m * (c * c));
    }

    #[test]
    fn zero_initial_state_needs_no_control() {
        let g = Grid::line(21, 1.0).unwrap();
        let st = Stepper::new(&g, 0.01).unwrap();
        let a = LinearizedCoeff::zeros(&g, 10);
        let res = hum_null_control(&st, &a, &LinearState::zeros(&g), 0.1, &HumConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 0);
        assert_eq!(res.cost, 0.0);
        assert!(res.control.iter().all(|c| c.iter().all(|u| *u == Vec2::zeros())));
    }

    #[test]
    fn horizon_must_match_steps() {
        let g = Grid::line(21, 1.0).unwrap();
        let st = Stepper::new(&g, 0.01).unwrap();
        let a = LinearizedCoeff::zeros(&g, 10);
        let y0 = LinearState::zeros(&g);
        assert!(hum_null_control(&st, &a, &y0, 0.2, &HumConfig::default()).is_err());
        assert!(hum_null_control(&st, &a, &y0, 0.105, &HumConfig::default()).is_err());
        let cfg = HumConfig { penalty: 0.0, ..Default::default() };
        assert!(hum_null_control(&st, &a, &y0, 0.1, &cfg).is_err());
    }

    #[test]
    fn picard_zero_data() {
        let g = Grid::line(21, 1.0).unwrap();
        let st = Stepper::new(&g, 0.005).unwrap();
        let res = picard_null_control(&st, &ChartField::zeros(&g), 0.05, &PicardConfig::default()).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.control.len(), 10);
        assert!(res.trajectory.iter().all(|v| v.sup_norm() == 0.0));
    }
}
