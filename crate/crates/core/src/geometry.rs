//! Stereographic chart from the south pole −e₃ and rotations of the sphere.
//!
//! The chart is
//!
//! ```text
//! Ψ(v) = (2v₁, 2v₂, 1 − |v|²) / h,   h = 1 + |v|²
//! ```
//!
//! mapping ℝ² onto S² \ {−e₃}. Everything here is a pure function on small
//! value types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Mat3, Mat3x2, Vec2, Vec3};

/// Tolerance on |d|² − 1 accepted by [`UnitVector3::new`].
pub const UNIT_TOL: f64 = 1e-12;
/// Default distance to −e₃ (in the third component) below which the inverse chart refuses.
pub const DEFAULT_POLE_MARGIN: f64 = 1e-6;
/// Chart magnitude above which the state is considered to have drifted to the pole.
pub const CHART_CAP: f64 = 1e6;
/// Inner products at or below `-1 + ANTIPODAL_TOL` are treated as antipodal.
pub const ANTIPODAL_TOL: f64 = 1e-9;

/// A point of S² ⊂ ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitVector3(Vec3);

impl UnitVector3 {
    pub const E1: UnitVector3 = UnitVector3(Vec3::new(1.0, 0.0, 0.0));
    pub const E2: UnitVector3 = UnitVector3(Vec3::new(0.0, 1.0, 0.0));
    pub const E3: UnitVector3 = UnitVector3(Vec3::new(0.0, 0.0, 1.0));

    /// Checked constructor: |d|² must equal one within [`UNIT_TOL`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vec(Vec3::new(x, y, z))
    }

    pub fn from_vec(v: Vec3) -> Result<Self> {
        let dev = (v.norm_squared() - 1.0).abs();
        if !dev.is_finite() || dev > UNIT_TOL {
            return Err(Error::Domain(format!(
                "not a unit vector: | |d|^2 - 1 | = {dev:.3e}"
            )));
        }
        Ok(Self(v))
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalize(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(Self(v / n))
    }

    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        Self(v)
    }

    pub fn as_vec(&self) -> Vec3 {
        self.0
    }

    pub fn dot(&self, other: &UnitVector3) -> f64 {
        self.0.dot(&other.0)
    }
}

impl From<UnitVector3> for [f64; 3] {
    fn from(u: UnitVector3) -> Self {
        [u.0.x, u.0.y, u.0.z]
    }
}

impl TryFrom<[f64; 3]> for UnitVector3 {
    type Error = Error;

    /// Accepts any nonzero triple and normalizes it, so configs can say `[1, 1, 0]`.
    fn try_from(a: [f64; 3]) -> Result<Self> {
        UnitVector3::normalize(Vec3::new(a[0], a[1], a[2]))
    }
}

impl std::ops::Deref for UnitVector3 {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

/// Stereographic coordinates v = (v₁, v₂).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChartPoint(pub Vec2);

impl ChartPoint {
    pub fn new(v1: f64, v2: f64) -> Self {
        Self(Vec2::new(v1, v2))
    }

    /// h = 1 + |v|² ≥ 1.
    pub fn h(&self) -> f64 {
        1.0 + self.0.norm_squared()
    }
}

/// Proper orthogonal 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub const TOL: f64 = 1e-12;

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Checked constructor: RᵀR = I and det R = +1 within [`Self::TOL`].
    pub fn new(m: Mat3) -> Result<Self> {
        let orth = (m.transpose() * m - Mat3::identity()).abs().max();
        let det = m.determinant();
        if orth > Self::TOL || (det - 1.0).abs() > Self::TOL {
            return Err(Error::Domain(format!(
                "not a rotation: |R^T R - I| = {orth:.3e}, det = {det:.15}"
            )));
        }
        Ok(Self(m))
    }

    /// Rotation by `angle` (radians) about `axis`, via the Rodrigues formula.
    pub fn about_axis(axis: &UnitVector3, angle: f64) -> Self {
        let k = skew(&axis.as_vec());
        Self(Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos()))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn apply_unit(&self, u: &UnitVector3) -> UnitVector3 {
        UnitVector3(self.0 * u.0)
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, inner: &RotationMatrix) -> Self {
        Self(self.0 * inner.0)
    }
}

fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Ψ(v). The third component is strictly greater than −1.
pub fn stereo_project(v: ChartPoint) -> UnitVector3 {
    let r2 = v.0.norm_squared();
    let h = 1.0 + r2;
    UnitVector3(Vec3::new(2.0 * v.0.x / h, 2.0 * v.0.y / h, (1.0 - r2) / h))
}

/// Ψ⁻¹(d) with the default pole margin.
pub fn stereo_invert(d: &UnitVector3) -> Result<ChartPoint> {
    stereo_invert_with_margin(d, DEFAULT_POLE_MARGIN)
}

/// Ψ⁻¹(d), refusing points with d₃ ≤ −1 + `margin`.
pub fn stereo_invert_with_margin(d: &UnitVector3, margin: f64) -> Result<ChartPoint> {
    invert_raw(&d.0, margin)
}

/// Inverse chart on a raw vector assumed to be unit length.
///
/// In the southern hemisphere `1 + d₃` is recovered as `(d₁² + d₂²)/(1 − d₃)`,
/// which keeps full relative accuracy close to the pole.
pub(crate) fn invert_raw(d: &Vec3, margin: f64) -> Result<ChartPoint> {
    if !(d.z > -1.0 + margin) {
        return Err(Error::Pole {
            third: d.z,
            margin,
        });
    }
    let planar = Vec2::new(d.x, d.y);
    let v = if d.z >= 0.0 {
        planar / (1.0 + d.z)
    } else {
        planar * ((1.0 - d.z) / planar.norm_squared())
    };
    let n = v.norm();
    if n > CHART_CAP {
        log::warn!("chart magnitude {n:.3e} above cap {CHART_CAP:e}: state is drifting to the pole");
    }
    Ok(ChartPoint(v))
}

/// ∂Ψ/∂v as a 3×2 matrix; column j is ∂Ψ/∂v_j.
pub fn stereo_jacobian(v: ChartPoint) -> Mat3x2 {
    let (v1, v2) = (v.0.x, v.0.y);
    let h = v.h();
    let h2 = h * h;
    Mat3x2::new(
        2.0 / h - 4.0 * v1 * v1 / h2,
        -4.0 * v1 * v2 / h2,
        -4.0 * v1 * v2 / h2,
        2.0 / h - 4.0 * v2 * v2 / h2,
        -4.0 * v1 / h2,
        -4.0 * v2 / h2,
    )
}

/// Frame matrix E with rows Ψ(v), ∂Ψ/∂v₁, ∂Ψ/∂v₂ and its determinant.
///
/// The rows are mutually orthogonal with lengths 1, 2/h, 2/h, so
/// det(E Eᵀ) = 16/h⁴ and |det E| = 4/h².
pub fn frame_matrix(v: ChartPoint) -> (Mat3, f64) {
    let d = stereo_project(v).0;
    let j = stereo_jacobian(v);
    let c1 = j.column(0).into_owned();
    let c2 = j.column(1).into_owned();
    let e = Mat3::from_rows(&[d.transpose(), c1.transpose(), c2.transpose()]);
    let det = d.dot(&c1.cross(&c2));
    (e, det)
}

/// Minimal-angle rotation taking `a` to `b` (rotation in the plane span{a, b}).
pub fn rotation_between(a: &UnitVector3, b: &UnitVector3) -> Result<RotationMatrix> {
    let c = a.dot(b);
    if c <= -1.0 + ANTIPODAL_TOL {
        return Err(Error::Antipodal { dot: c });
    }
    let k = skew(&a.0.cross(&b.0));
    Ok(RotationMatrix(Mat3::identity() + k + k * k / (1.0 + c)))
}
