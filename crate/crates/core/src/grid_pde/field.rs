use std::ops::{Add, AddAssign, Deref, DerefMut, Mul, Sub};

use crate::error::{domain, Result};
use crate::geometry::{RotationMatrix, UnitVector3};
use crate::grid_pde::Grid;
use crate::{Vec2, Vec3};

/// Value stored at a grid node.
pub trait NodeValue:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
{
    const COMPONENTS: usize;

    fn zero() -> Self;
    fn dot(&self, other: &Self) -> f64;
    fn component(&self, k: usize) -> f64;
    fn from_components(c: &[f64]) -> Self;

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl NodeValue for f64 {
    const COMPONENTS: usize = 1;

    fn zero() -> Self {
        0.0
    }
    fn dot(&self, other: &Self) -> f64 {
        self * other
    }
    fn component(&self, _k: usize) -> f64 {
        *self
    }
    fn from_components(c: &[f64]) -> Self {
        c[0]
    }
}

impl NodeValue for Vec2 {
    const COMPONENTS: usize = 2;

    fn zero() -> Self {
        Vec2::zeros()
    }
    fn dot(&self, other: &Self) -> f64 {
        nalgebra::Matrix::dot(self, other)
    }
    fn component(&self, k: usize) -> f64 {
        self[k]
    }
    fn from_components(c: &[f64]) -> Self {
        Vec2::new(c[0], c[1])
    }
}

impl NodeValue for Vec3 {
    const COMPONENTS: usize = 3;

    fn zero() -> Self {
        Vec3::zeros()
    }
    fn dot(&self, other: &Self) -> f64 {
        nalgebra::Matrix::dot(self, other)
    }
    fn component(&self, k: usize) -> f64 {
        self[k]
    }
    fn from_components(c: &[f64]) -> Self {
        Vec3::new(c[0], c[1], c[2])
    }
}

/// Node-wise field in the grid's row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<V> {
    values: Vec<V>,
}

/// Director d: unit 3-vectors.
pub type DirectorField = Field<Vec3>;
/// Stereographic coordinates v.
pub type ChartField = Field<Vec2>;
/// State y of the linearized chart system.
pub type LinearState = Field<Vec2>;
/// Magnetic field H.
pub type MagneticField = Field<Vec3>;

impl<V: NodeValue> Field<V> {
    pub fn new(values: Vec<V>) -> Self {
        Self { values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, V::zero())
    }

    pub fn constant(grid: &Grid, value: V) -> Self {
        Self {
            values: vec![value; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(usize) -> V) -> Self {
        Self {
            values: (0..grid.node_count()).map(&mut f).collect(),
        }
    }

    pub fn into_vec(self) -> Vec<V> {
        self.values
    }

    pub fn check_len(&self, grid: &Grid) -> Result<()> {
        if self.values.len() != grid.node_count() {
            return Err(domain(format!(
                "field has {} nodes, grid has {}",
                self.values.len(),
                grid.node_count()
            )));
        }
        Ok(())
    }

    /// max over nodes of the Euclidean node norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete L² norm with the grid's quadrature weights.
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.inner(&self.values, grid).sqrt()
    }

    /// Weighted inner product ⟨self, other⟩ on the grid.
    pub fn inner(&self, other: &[V], grid: &Grid) -> f64 {
        self.values
            .iter()
            .zip(other)
            .zip(grid.weights())
            .map(|((a, b), w)| w * a.dot(b))
            .sum()
    }

    /// max over nodes of |self − other|.
    pub fn sup_distance(&self, other: &[V]) -> f64 {
        self.values
            .iter()
            .zip(other)
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| (0..V::COMPONENTS).all(|k| v.component(k).is_finite()))
    }
}

impl Field<Vec3> {
    /// max over nodes of | |d|² − 1 |.
    pub fn max_norm_deviation(&self) -> f64 {
        self.values
            .iter()
            .map(|d| (d.norm_squared() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// max over nodes of |d − p|.
    pub fn sup_distance_to(&self, p: &UnitVector3) -> f64 {
        self.values
            .iter()
            .map(|d| (d - p.as_vec()).norm())
            .fold(0.0, f64::max)
    }

    /// Applies a constant rotation node-wise.
    pub fn rotated(&self, r: &RotationMatrix) -> Self {
        Self {
            values: self.values.iter().map(|d| r.apply(d)).collect(),
        }
    }
}

impl<V> Deref for Field<V> {
    type Target = [V];

    fn deref(&self) -> &[V] {
        &self.values
    }
}

impl<V> DerefMut for Field<V> {
    fn deref_mut(&mut self) -> &mut [V] {
        &mut self.values
    }
}

/// Chart-space control density f, identically zero off ω.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlDensity {
    field: Field<Vec2>,
}

impl ControlDensity {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            field: Field::zeros(grid),
        }
    }

    /// Checked constructor: every node outside ω must be exactly zero.
    pub fn new(grid: &Grid, values: Vec<Vec2>) -> Result<Self> {
        let field = Field::new(values);
        field.check_len(grid)?;
        if let Some(i) = (0..grid.node_count()).find(|&i| !grid.in_omega(i) && field[i] != Vec2::zeros()) {
            return Err(domain(format!("control density nonzero at node {i} outside omega")));
        }
        Ok(Self { field })
    }

    /// Multiplies by χ_ω, discarding whatever lies outside the control region.
    pub fn masked(grid: &Grid, mut values: Vec<Vec2>) -> Self {
        for (v, &m) in values.iter_mut().zip(grid.mask()) {
            if !m {
                *v = Vec2::zeros();
            }
        }
        Self {
            field: Field::new(values),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl FnMut(usize) -> Vec2) -> Self {
        Self::masked(grid, Field::from_fn(grid, f).into_vec())
    }

    pub fn field(&self) -> &Field<Vec2> {
        &self.field
    }

    pub fn into_field(self) -> Field<Vec2> {
        self.field
    }
}

impl Deref for ControlDensity {
    type Target = [Vec2];

    fn deref(&self) -> &[Vec2] {
        &self.field
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_density_respects_mask() {
        let g = Grid::line(11, 1.0).unwrap();
        let ones = vec![Vec2::new(1.0, 2.0); 11];
        assert!(ControlDensity::new(&g, ones.clone()).is_err());
        let f = ControlDensity::masked(&g, ones);
        for i in 0..11 {
            assert_eq!(f[i] == Vec2::zeros(), !g.in_omega(i));
        }
        assert!(ControlDensity::new(&g, f.field().to_vec()).is_ok());
    }

    #[test]
    fn weighted_norm_of_constant() {
        let g = Grid::square(9, 2.0).unwrap();
        let f = Field::constant(&g, Vec3::new(0.0, 3.0, 4.0));
        assert!((f.l2_norm(&g) - (25.0f64 * 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(f.sup_norm(), 5.0);
    }
}
