//! Conversion of a chart-space control density f (supported in ω) into a
//! physical magnetic field H.
//!
//! The field enters the chart equation through
//!
//! ```text
//! (h²/4) (H·d) Hᵢ ∇_v Ψᵢ(v) = χ_ω f
//! ```
//!
//! which is underdetermined in H. Fixing the first factor to
//! `2v·(H₁,H₂) + (1−|v|²)H₃ = h χ_ω` turns it into the linear system
//! `A(v) H = χ_ω (f₁, f₂, −h/2)` with the symmetric matrix `A` below, whose
//! spectrum is {−h/2, h/2, h/2}. The solution is analytic in (v, f) and
//! vanishes identically off ω. Note that it is *not* zero where f = 0
//! inside ω: there H ≠ 0 but the induced chart forcing is zero.

use crate::error::{domain, Result};
use crate::geometry::{ChartPoint, UnitVector3};
use crate::grid_pde::{ChartField, ControlDensity, Grid, MagneticField};
use crate::{Mat3, Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisMatrix {
    matrix: Mat3,
    h: f64,
}

impl SynthesisMatrix {
    pub fn matrix(&self) -> &Mat3 {
        &self.matrix
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Closed-form inverse, adjugate over determinant.
    pub fn inverse(&self) -> Mat3 {
        let m = &self.matrix;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
        // adj(A)ᵢⱼ = cofactor(A)ⱼᵢ
        let adj = Mat3::new(
            cof(1, 2, 1, 2),
            -cof(0, 2, 1, 2),
            cof(0, 1, 1, 2),
            -cof(1, 2, 0, 2),
            cof(0, 2, 0, 2),
            -cof(0, 1, 0, 2),
            cof(1, 2, 0, 1),
            -cof(0, 2, 0, 1),
            cof(0, 1, 0, 1),
        );
        let det = m[(0, 0)] * adj[(0, 0)] + m[(0, 1)] * adj[(1, 0)] + m[(0, 2)] * adj[(2, 0)];
        adj / det
    }

    /// Applies A to H: the first two rows are the chart forcing, the third row
    /// is −½ of the normalization factor.
    pub fn apply(&self, h_field: &Vec3) -> Vec3 {
        self.matrix * h_field
    }
}

/// A(v) for the explicit field branch.
pub fn build_synthesis_matrix(v: ChartPoint) -> SynthesisMatrix {
    let (v1, v2) = (v.0.x, v.0.y);
    let matrix = Mat3::new(
        0.5 * (1.0 + v2 * v2 - v1 * v1),
        -v1 * v2,
        -v1,
        -v1 * v2,
        0.5 * (1.0 + v1 * v1 - v2 * v2),
        -v2,
        -v1,
        -v2,
        0.5 * (-1.0 + v1 * v1 + v2 * v2),
    );
    SynthesisMatrix { matrix, h: v.h() }
}

/// H at one node: `A(v)⁻¹ (f₁, f₂, −h/2)` inside ω, zero outside.
pub fn synthesize_node(v: ChartPoint, f: Vec2, inside: bool) -> Vec3 {
    if !inside {
        return Vec3::zeros();
    }
    let a = build_synthesis_matrix(v);
    a.inverse() * Vec3::new(f.x, f.y, -0.5 * a.h())
}

/// Magnetic field realizing the chart control f at chart state v.
pub fn synthesize_field(grid: &Grid, v: &ChartField, f: &ControlDensity) -> Result<MagneticField> {
    v.check_len(grid)?;
    f.field().check_len(grid)?;
    Ok(MagneticField::from_fn(grid, |i| {
        synthesize_node(ChartPoint(v[i]), f[i], grid.in_omega(i))
    }))
}

/// Chart forcing produced by H at chart point v:
/// `(H·Ψ(v)) · (rows 1–2 of A(v) H)`.
pub fn chart_forcing(v: ChartPoint, h_field: &Vec3) -> Vec2 {
    let (v1, v2) = (v.0.x, v.0.y);
    let h = v.h();
    let factor = (2.0 * v1 * h_field.x + 2.0 * v2 * h_field.y + (1.0 - v1 * v1 - v2 * v2) * h_field.z) / h;
    let ah = build_synthesis_matrix(v).apply(h_field);
    Vec2::new(ah.x, ah.y) * factor
}

/// max over nodes of |chart_forcing(v, H) − χ_ω f|.
pub fn synthesis_residual(grid: &Grid, v: &ChartField, f: &ControlDensity, h: &MagneticField) -> Result<f64> {
    v.check_len(grid)?;
    f.field().check_len(grid)?;
    h.check_len(grid)?;
    Ok((0..grid.node_count())
        .map(|i| {
            let target = if grid.in_omega(i) { f[i] } else { Vec2::zeros() };
            (chart_forcing(ChartPoint(v[i]), &h[i]) - target).norm()
        })
        .fold(0.0, f64::max))
}

/// `H(x) = λ·axis` everywhere.
pub fn uniform_field(grid: &Grid, lambda: f64, axis: &UnitVector3) -> Result<MagneticField> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(domain(format!("field amplitude must be nonnegative, got {lambda}")));
    }
    Ok(MagneticField::constant(grid, axis.as_vec() * lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matrix_at_origin() {
        let a = build_synthesis_matrix(ChartPoint::default());
        assert_eq!(*a.matrix(), Mat3::from_diagonal(&Vec3::new(0.5, 0.5, -0.5)));
        assert_eq!(a.inverse(), Mat3::from_diagonal(&Vec3::new(2.0, 2.0, -2.0)));
    }

    #[test]
    fn node_solution_at_origin() {
        let h = synthesize_node(ChartPoint::default(), Vec2::new(0.3, -0.7), true);
        assert_abs_diff_eq!(h, Vec3::new(0.6, -1.4, 1.0), epsilon = 1e-15);
        // f = 0 inside ω still gives the normalization branch
        let h = synthesize_node(ChartPoint::default(), Vec2::zeros(), true);
        assert_eq!(h, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(synthesize_node(ChartPoint::new(0.4, 2.0), Vec2::new(1.0, 1.0), false), Vec3::zeros());
    }

    #[test]
    fn inverse_is_scaled_matrix() {
        // A is h/2 times a Householder reflection, so A⁻¹ = (4/h²) A.
        let v = ChartPoint::new(1.3, -0.4);
        let a = build_synthesis_matrix(v);
        let h = v.h();
        assert_abs_diff_eq!(a.inverse(), a.matrix() * (4.0 / (h * h)), epsilon = 1e-14);
    }

    #[test]
    fn residual_cases() {
        let g = Grid::line(21, 1.0).unwrap();
        let v = ChartField::from_fn(&g, |i| Vec2::new(0.1 * i as f64, -0.05 * i as f64));
        let f = ControlDensity::from_fn(&g, |i| Vec2::new(1.0, (i as f64).sin()));
        let zero = MagneticField::zeros(&g);
        assert!(synthesis_residual(&g, &v, &f, &zero).unwrap() > 0.0);
        let h = synthesize_field(&g, &v, &f).unwrap();
        assert!(synthesis_residual(&g, &v, &f, &h).unwrap() <= 1e-10);
        let f0 = ControlDensity::zeros(&g);
        assert_eq!(synthesis_residual(&g, &v, &f0, &zero).unwrap(), 0.0);
    }

    #[test]
    fn uniform_field_values() {
        let g = Grid::line(5, 1.0).unwrap();
        let z = uniform_field(&g, 0.0, &UnitVector3::E1).unwrap();
        assert!(z.iter().all(|h| *h == Vec3::zeros()));
        let h = uniform_field(&g, 16.5, &UnitVector3::E3).unwrap();
        assert!(h.iter().all(|h| *h == Vec3::new(0.0, 0.0, 16.5)));
        assert!(uniform_field(&g, -1.0, &UnitVector3::E3).is_err());
    }
}
