//! Staged steering schedule.
//!
//! A leg lasts `6·T₀`. On `[0, 5T₀]` a uniform field `λ(t)·target` is applied,
//! with λ = 0 on `[0, T₀]` and `[4T₀, 5T₀]`, λ = Λ on `[2T₀, 3T₀]` and cubic
//! smoothstep ramps in between. On `[5T₀, 6T₀]` the chart null control runs.
//! A full route from `e` to `p` is four legs tiling `[0, T]`, through
//! waypoints that trisect the angle between `e` and `p`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{rotation_between, RotationMatrix, UnitVector3, ANTIPODAL_TOL};
use crate::grid_pde::max_stable_dt;

/// Ramp used between the zero and the plateau stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ramp {
    /// s(x) = 3x² − 2x³.
    #[default]
    Smoothstep,
}

impl Ramp {
    pub fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Ramp::Smoothstep => x * x * (3.0 - 2.0 * x),
        }
    }

    pub fn slope(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        match self {
            Ramp::Smoothstep => 6.0 * x * (1.0 - x),
        }
    }
}

/// Schedule of one steering leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Stage length T₀.
    pub t0: f64,
    /// Plateau amplitude Λ.
    pub lambda: f64,
    pub ramp: Ramp,
    /// Hemisphere margin the amplitude was sized for.
    pub eps0: f64,
    /// Target of the comparison bound at 3T₀.
    pub eps4: f64,
    pub start: UnitVector3,
    /// Field axis of the uniform stages and null-control target of the leg.
    pub target: UnitVector3,
    /// Trisection of the start → target arc: (start, p₁, p₂, target).
    pub waypoints: [UnitVector3; 4],
}

impl Schedule {
    pub fn horizon(&self) -> f64 {
        6.0 * self.t0
    }

    /// {0, T₀, …, 6T₀}.
    pub fn boundaries(&self) -> [f64; 7] {
        std::array::from_fn(|k| k as f64 * self.t0)
    }

    pub fn lambda_at(&self, t: f64) -> f64 {
        lambda_profile(t, self)
    }

    /// dλ/dt of the closed form.
    pub fn lambda_slope(&self, t: f64) -> f64 {
        let x = t / self.t0;
        let scale = self.lambda / self.t0;
        if (1.0..=2.0).contains(&x) {
            scale * self.ramp.slope(x - 1.0)
        } else if (3.0..=4.0).contains(&x) {
            -scale * self.ramp.slope(x - 3.0)
        } else {
            0.0
        }
    }

    /// Rotation taking the chart's working axis e₃ to the leg target.
    pub fn chart_rotation(&self) -> RotationMatrix {
        rotation_to_pole(&self.target)
    }

    /// Same leg for rotated endpoints.
    pub fn rotated(&self, r: &RotationMatrix) -> Self {
        Self {
            start: r.apply_unit(&self.start),
            target: r.apply_unit(&self.target),
            waypoints: self.waypoints.map(|w| r.apply_unit(&w)),
            ..self.clone()
        }
    }

    /// Uniform step size not above `dt_max` and the stability bound for Λ
    /// that tiles every stage exactly; returns (dt, steps per stage).
    pub fn time_step(&self, dt_max: f64) -> Result<(f64, usize)> {
        if !(dt_max.is_finite() && dt_max > 0.0) {
            return Err(domain("maximum time step must be positive"));
        }
        let bound = dt_max.min(max_stable_dt(self.lambda));
        let steps = (self.t0 / bound * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok((self.t0 / steps as f64, steps))
    }
}

/// Rotation R with R·e₃ = `axis`; minimal angle unless `axis` is −e₃.
pub fn rotation_to_pole(axis: &UnitVector3) -> RotationMatrix {
    rotation_between(&UnitVector3::E3, axis)
        .unwrap_or_else(|_| RotationMatrix::about_axis(&UnitVector3::E1, std::f64::consts::PI))
}

/// λ(t) on one leg (local time); zero outside `[T₀, 4T₀]`.
pub fn lambda_profile(t: f64, s: &Schedule) -> f64 {
    let x = t / s.t0;
    if x <= 1.0 || x >= 4.0 {
        0.0
    } else if x < 2.0 {
        s.lambda * s.ramp.value(x - 1.0)
    } else if x <= 3.0 {
        s.lambda
    } else {
        s.lambda * s.ramp.value(4.0 - x)
    }
}

/// Λ = sqrt(ln(1/ε₄) / (ε₀ T₀)), so that `exp(−Λ² ε₀ T₀) = ε₄`.
pub fn required_lambda(eps0: f64, t0: f64, eps4: f64) -> Result<f64> {
    if !(eps0 > 0.0 && eps0 <= 1.0) {
        return Err(domain(format!("eps0 must lie in (0, 1], got {eps0}")));
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(domain(format!("T0 must be positive, got {t0}")));
    }
    if !(eps4 > 0.0 && eps4 < 1.0) {
        return Err(domain(format!("eps4 must lie in (0, 1), got {eps4}")));
    }
    Ok(((1.0 / eps4).ln() / (eps0 * t0)).sqrt())
}

/// Comparison-principle bound `exp(−Λ² ε₀ T₀)`.
pub fn decay_bound(lambda: f64, eps0: f64, t0: f64) -> f64 {
    (-lambda * lambda * eps0 * t0).exp()
}

/// Points at angles θ/3 and 2θ/3 along the geodesic from `e` to `p`.
pub fn waypoints(e: &UnitVector3, p: &UnitVector3) -> Result<(UnitVector3, UnitVector3)> {
    let c = e.dot(p);
    if c <= -1.0 + ANTIPODAL_TOL {
        return Err(Error::Antipodal { dot: c });
    }
    let cross = e.cross(p);
    let s = cross.norm();
    if s == 0.0 {
        return Ok((*e, *e));
    }
    let theta = s.atan2(c);
    let axis = UnitVector3::new_unchecked(cross / s);
    let r = RotationMatrix::about_axis(&axis, theta / 3.0);
    let p1 = UnitVector3::normalize(r.apply(e))?;
    let p2 = UnitVector3::normalize(r.apply(&p1))?;
    Ok((p1, p2))
}

/// Schedule for one leg of length `leg_t` (T₀ = leg_t/6).
pub fn build_leg_schedule(
    start: &UnitVector3,
    target: &UnitVector3,
    leg_t: f64,
    eps0: f64,
    eps4: f64,
) -> Result<Schedule> {
    if !(leg_t > 0.0 && leg_t.is_finite()) {
        return Err(domain(format!("leg length must be positive, got {leg_t}")));
    }
    let t0 = leg_t / 6.0;
    let lambda = required_lambda(eps0, t0, eps4)?;
    let (p1, p2) = waypoints(start, target)?;
    Ok(Schedule {
        t0,
        lambda,
        ramp: Ramp::Smoothstep,
        eps0,
        eps4,
        start: *start,
        target: *target,
        waypoints: [*start, p1, p2, *target],
    })
}

/// Four-leg route from the hemisphere axis `e` to the final state `p` on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringPlan {
    pub horizon: f64,
    pub eps4: f64,
    /// (e, p₁, p₂, p).
    pub waypoints: [UnitVector3; 4],
}

impl SteeringPlan {
    pub fn new(e: &UnitVector3, p: &UnitVector3, horizon: f64, eps4: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(domain("steering horizon must be positive"));
        }
        if !(eps4 > 0.0 && eps4 < 1.0) {
            return Err(domain(format!("eps4 must lie in (0, 1), got {eps4}")));
        }
        let (p1, p2) = waypoints(e, p)?;
        Ok(Self {
            horizon,
            eps4,
            waypoints: [*e, p1, p2, *p],
        })
    }

    /// T₀ = T/24.
    pub fn t0(&self) -> f64 {
        self.horizon / 24.0
    }

    pub fn leg_length(&self) -> f64 {
        self.horizon / 4.0
    }

    /// (start, target) of leg k: (e, e), (e, p₁), (p₁, p₂), (p₂, p).
    pub fn leg_endpoints(&self, k: usize) -> (UnitVector3, UnitVector3) {
        let w = &self.waypoints;
        match k {
            0 => (w[0], w[0]),
            _ => (w[k - 1], w[k]),
        }
    }

    /// Leg k schedule, sized for the hemisphere margin `eps0` measured at its start.
    pub fn leg(&self, k: usize, eps0: f64) -> Result<Schedule> {
        if k >= 4 {
            return Err(domain(format!("leg index {k} out of range")));
        }
        let (s, t) = self.leg_endpoints(k);
        build_leg_schedule(&s, &t, self.leg_length(), eps0, self.eps4)
    }

    pub fn leg_start_time(&self, k: usize) -> f64 {
        k as f64 * self.leg_length()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn leg() -> Schedule {
        build_leg_schedule(&UnitVector3::E3, &UnitVector3::E1, 0.3, 0.5, 1e-3).unwrap()
    }

    #[test]
    fn profile_reference_values() {
        let s = leg();
        let t0 = s.t0;
        assert_eq!(lambda_profile(2.5 * t0, &s), s.lambda);
        assert_eq!(lambda_profile(0.5 * t0, &s), 0.0);
        assert_abs_diff_eq!(lambda_profile(1.5 * t0, &s), s.lambda / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda_profile(3.5 * t0, &s), s.lambda / 2.0, epsilon = 1e-12);
        assert_eq!(lambda_profile(4.5 * t0, &s), 0.0);
    }

    #[test]
    fn required_lambda_reference() {
        let l = required_lambda(0.5, 0.05, 1e-3).unwrap();
        assert_abs_diff_eq!(l * l, 1000f64.ln() / 0.025, epsilon = 1e-10);
        assert_abs_diff_eq!(l, 16.62258, epsilon = 1e-5);
        assert_abs_diff_eq!(decay_bound(l, 0.5, 0.05), 1e-3, epsilon = 1e-15);
        assert!(required_lambda(0.5, 0.05, 1.0 - 1e-15).unwrap() < 1e-6);
    }

    #[test]
    fn required_lambda_domain() {
        assert!(required_lambda(0.0, 0.05, 1e-3).is_err());
        assert!(required_lambda(1.5, 0.05, 1e-3).is_err());
        assert!(required_lambda(0.5, 0.0, 1e-3).is_err());
        assert!(required_lambda(0.5, 0.05, 1.0).is_err());
        assert!(required_lambda(0.5, 0.05, 0.0).is_err());
    }

    #[test]
    fn waypoints_quarter_turn() {
        let (p1, p2) = waypoints(&UnitVector3::E3, &UnitVector3::E1).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert_abs_diff_eq!(p1.as_vec(), crate::Vec3::new(0.5, 0.0, r3), epsilon = 1e-15);
        assert_abs_diff_eq!(p2.as_vec(), crate::Vec3::new(r3, 0.0, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn waypoints_degenerate_and_antipodal() {
        let (p1, p2) = waypoints(&UnitVector3::E3, &UnitVector3::E3).unwrap();
        assert_eq!((p1, p2), (UnitVector3::E3, UnitVector3::E3));
        let south = UnitVector3::new(0.0, 0.0, -1.0).unwrap();
        assert!(matches!(waypoints(&UnitVector3::E3, &south), Err(Error::Antipodal { .. })));
    }

    #[test]
    fn leg_layout() {
        let s = leg();
        let b = s.boundaries();
        for (k, t) in b.iter().enumerate() {
            assert_abs_diff_eq!(*t, 0.05 * k as f64, epsilon = 1e-15);
        }
        let same = build_leg_schedule(&UnitVector3::E2, &UnitVector3::E2, 0.3, 1.0, 1e-3).unwrap();
        assert_eq!(same.waypoints, [UnitVector3::E2; 4]);
        assert_abs_diff_eq!(same.chart_rotation().apply(&UnitVector3::E3), *UnitVector3::E2, epsilon = 1e-15);
    }

    #[test]
    fn time_step_tiles_stages() {
        let s = leg();
        let (dt, n) = s.time_step(1.0).unwrap();
        assert!(dt <= max_stable_dt(s.lambda));
        assert_abs_diff_eq!(dt * n as f64, s.t0, epsilon = 1e-15);
        let (dt, n) = s.time_step(1e-3).unwrap();
        assert!(dt <= 1e-3 && n >= 56);
    }

    #[test]
    fn chart_rotation_handles_south_pole() {
        let south = UnitVector3::new(0.0, 0.0, -1.0).unwrap();
        let r = rotation_to_pole(&south);
        assert_abs_diff_eq!(r.apply(&UnitVector3::E3), *south, epsilon = 1e-15);
    }

    #[test]
    fn plan_legs_tile_horizon() {
        let plan = SteeringPlan::new(&UnitVector3::E3, &UnitVector3::E1, 1.2, 1e-3).unwrap();
        assert_abs_diff_eq!(plan.t0(), 0.05, epsilon = 1e-15);
        for k in 0..4 {
            let s = plan.leg(k, 0.5).unwrap();
            assert_abs_diff_eq!(s.horizon(), 0.3, epsilon = 1e-15);
            assert_abs_diff_eq!(plan.leg_start_time(k), 0.3 * k as f64, epsilon = 1e-15);
        }
        assert_eq!(plan.leg_endpoints(0), (UnitVector3::E3, UnitVector3::E3));
        assert_eq!(plan.leg_endpoints(3).1, UnitVector3::E1);
        assert!(plan.leg(4, 0.5).is_err());
    }
}
