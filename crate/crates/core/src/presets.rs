//! Initial director fields inside an open hemisphere, and chart test data.

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::UnitVector3;
use crate::grid_pde::{gradient, ChartField, DirectorField, Grid};
use crate::snapshot::Snapshot;
use crate::stage_control::rotation_to_pole;
use crate::{Vec2, Vec3};

/// Named initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialPreset {
    /// d₀ ≡ e.
    Constant,
    /// Polar angle `cone·(1 + Πₖ cos(πxₖ/Lₖ))/2` from e, reaching `cone` at
    /// the origin corner.
    TiltedCone {
        #[serde(default = "default_cone")]
        cone_deg: f64,
    },
    /// Random Neumann cosine modes for the polar and azimuthal angles, polar
    /// angle in `[0, cone]` and reaching it somewhere.
    RandomSmooth {
        #[serde(default = "default_cone")]
        cone_deg: f64,
        #[serde(default = "default_modes")]
        modes: usize,
    },
    /// Director snapshot written by [`crate::snapshot`].
    File { path: PathBuf },
}

fn default_cone() -> f64 {
    60.0
}

fn default_modes() -> usize {
    3
}

fn check_cone(cone_deg: f64) -> Result<f64> {
    if !(0.0..90.0).contains(&cone_deg) {
        return Err(domain(format!(
            "cone angle {cone_deg}° must lie in [0°, 90°) for the hemisphere condition"
        )));
    }
    Ok(cone_deg.to_radians())
}

/// d₀ for `preset` around axis `e`. Deterministic in `seed`.
pub fn initial_data(preset: &InitialPreset, grid: &Grid, e: &UnitVector3, seed: u64) -> Result<DirectorField> {
    let frame = rotation_to_pole(e);
    let from_angles = |theta: &dyn Fn(usize) -> f64, phi: &dyn Fn(usize) -> f64| {
        DirectorField::from_fn(grid, |i| {
            let (t, p) = (theta(i), phi(i));
            frame.apply(&Vec3::new(t.sin() * p.cos(), t.sin() * p.sin(), t.cos()))
        })
    };
    let cosine = |i: usize, axis: usize, m: f64| {
        let ax = &grid.axes()[axis];
        (m * PI * grid.coordinate(i, axis) / ax.extent).cos()
    };
    match preset {
        InitialPreset::Constant => Ok(DirectorField::constant(grid, e.as_vec())),
        InitialPreset::TiltedCone { cone_deg } => {
            let cone = check_cone(*cone_deg)?;
            let theta = |i: usize| {
                let prod: f64 = (0..grid.dimension()).map(|k| cosine(i, k, 1.0)).product();
                cone * 0.5 * (1.0 + prod)
            };
            let phi = |i: usize| 0.7 * cosine(i, 0, 1.0);
            Ok(from_angles(&theta, &phi))
        }
        InitialPreset::RandomSmooth { cone_deg, modes } => {
            let cone = check_cone(*cone_deg)?;
            if *modes == 0 {
                return Err(domain("random-smooth needs at least one mode"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = grid.dimension();
            let draw = |rng: &mut ChaCha8Rng| -> Vec<(f64, [usize; 2])> {
                let mut terms = Vec::new();
                for m0 in 0..=*modes {
                    for m1 in 0..=if dim == 2 { *modes } else { 0 } {
                        if m0 + m1 > 0 {
                            terms.push((rng.random_range(-1.0..1.0) / (m0 + m1) as f64, [m0, m1]));
                        }
                    }
                }
                terms
            };
            let polar = draw(&mut rng);
            let azimuth = draw(&mut rng);
            let eval = |terms: &[(f64, [usize; 2])], i: usize| -> f64 {
                terms
                    .iter()
                    .map(|(c, m)| (0..dim).map(|k| cosine(i, k, m[k] as f64)).product::<f64>() * c)
                    .sum()
            };
            let raw: Vec<f64> = (0..grid.node_count()).map(|i| eval(&polar, i)).collect();
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            let theta = |i: usize| cone * (raw[i] - lo) / span;
            let phi = |i: usize| PI * eval(&azimuth, i);
            Ok(from_angles(&theta, &phi))
        }
        InitialPreset::File { path } => {
            let snap = Snapshot::read_binary_file(path)?;
            snap.director(grid, 0)
        }
    }
}

/// Smooth chart data with `max(sup|v|, sup|∇v|) = size` (discrete gradient).
pub fn chart_bump(grid: &Grid, size: f64) -> ChartField {
    let raw = ChartField::from_fn(grid, |i| {
        let mut c1 = 1.0;
        let mut c2 = 1.0;
        for k in 0..grid.dimension() {
            let x = grid.coordinate(i, k) / grid.axes()[k].extent;
            c1 *= (PI * x).cos();
            c2 *= (2.0 * PI * x).cos();
        }
        Vec2::new(0.6 + 0.4 * c1, 0.5 * c2)
    });
    let grad = gradient(grid, &raw)
        .iter()
        .map(|g| (g[0].norm_squared() + g[1].norm_squared()).sqrt())
        .fold(0.0, f64::max);
    let scale = size / raw.sup_norm().max(grad);
    ChartField::new(raw.iter().map(|v| v * scale).collect())
}

/// max(sup|v|, sup|∇v|) on the grid.
pub fn chart_w1inf(grid: &Grid, v: &ChartField) -> f64 {
    let grad = gradient(grid, v)
        .iter()
        .map(|g| (g[0].norm_squared() + g[1].norm_squared()).sqrt())
        .fold(0.0, f64::max);
    v.sup_norm().max(grad)
}

/// Uniform samples in `[-1, 1]` for seeded property sweeps.
pub fn seeded_uniform(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitors::hemisphere_margin;

    #[test]
    fn tilted_cone_margin_is_exact() {
        for g in [Grid::line(201, 1.0).unwrap(), Grid::square(17, 1.0).unwrap()] {
            let e = UnitVector3::normalize(Vec3::new(0.3, -0.2, 0.9)).unwrap();
            let d = initial_data(&InitialPreset::TiltedCone { cone_deg: 60.0 }, &g, &e, 0).unwrap();
            assert!((hemisphere_margin(&d, &e) - 0.5).abs() < 1e-12);
            assert!(d.max_norm_deviation() < 1e-14);
        }
    }

    #[test]
    fn cone_limits() {
        let g = Grid::line(11, 1.0).unwrap();
        let e = UnitVector3::E3;
        assert!(initial_data(&InitialPreset::TiltedCone { cone_deg: 95.0 }, &g, &e, 0).is_err());
        assert!(initial_data(&InitialPreset::TiltedCone { cone_deg: 90.0 }, &g, &e, 0).is_err());
        let d = initial_data(&InitialPreset::Constant, &g, &e, 0).unwrap();
        assert_eq!(hemisphere_margin(&d, &e), 1.0);
    }

    #[test]
    fn random_smooth_is_seeded() {
        let g = Grid::square(9, 1.0).unwrap();
        let e = UnitVector3::E2;
        let p = InitialPreset::RandomSmooth { cone_deg: 40.0, modes: 3 };
        let a = initial_data(&p, &g, &e, 7).unwrap();
        let b = initial_data(&p, &g, &e, 7).unwrap();
        let c = initial_data(&p, &g, &e, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((hemisphere_margin(&a, &e) - 40f64.to_radians().cos()).abs() < 1e-12);
    }

    #[test]
    fn chart_bump_size() {
        let g = Grid::line(201, 1.0).unwrap();
        let v = chart_bump(&g, 1e-3);
        assert!((chart_w1inf(&g, &v) - 1e-3).abs() < 1e-15);
    }
}
