use magsteer_core::field_synthesis::synthesize_field;
use magsteer_core::geometry::{stereo_invert, stereo_project, ChartPoint, RotationMatrix};
use magsteer_core::grid_pde::{neumann_laplacian, ChartField, ControlDensity, DirectorField, Grid, ImplicitDiffusion, MagneticField, Stepper};
use magsteer_core::monitors::energy;
use magsteer_core::presets::{initial_data, seeded_uniform, InitialPreset};
use magsteer_core::{Error, UnitVector3, Vec2, Vec3};
use nalgebra::{DMatrix, DVector};

/// Dense Neumann Laplacian of one axis, assembled column by column.
fn dense_laplacian(n: usize) -> DMatrix<f64> {
    let grid = Grid::line(n, 1.0).unwrap();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = neumann_laplacian(&grid, &e);
        m.set_column(j, &DVector::from_vec(col));
    }
    m
}

#[test]
fn implicit_diffusion_matches_dense_solve() {
    let n = 33;
    let dt = 3e-3;
    let grid = Grid::line(n, 1.0).unwrap();
    let u = seeded_uniform(4, n);
    let a = DMatrix::identity(n, n) - dense_laplacian(n) * dt;
    let want = a.lu().solve(&DVector::from_column_slice(&u)).unwrap();
    let mut got = u.clone();
    ImplicitDiffusion::new(&grid, dt).apply(&mut got);
    let err = (DVector::from_vec(got) - want).amax();
    assert!(err <= 1e-13, "dense oracle deviation {err:e}");
}

#[test]
fn implicit_diffusion_2d_inverts_factor_product() {
    let n = 13;
    let dt = 2e-3;
    let grid = Grid::square(n, 1.0).unwrap();
    let u = seeded_uniform(5, n * n);
    let mut s = u.clone();
    ImplicitDiffusion::new(&grid, dt).apply(&mut s);
    let a1 = DMatrix::identity(n, n) - dense_laplacian(n) * dt;
    let kron = a1.kronecker(&a1);
    let back = kron * DVector::from_vec(s);
    let err = (back - DVector::from_vec(u)).amax();
    assert!(err <= 1e-12, "factorized inverse residual {err:e}");
}

#[test]
fn implicit_diffusion_is_weighted_self_adjoint() {
    let grid = Grid::square(21, 1.0).unwrap();
    let s = ImplicitDiffusion::new(&grid, 1e-3);
    let u = seeded_uniform(6, grid.node_count());
    let w = seeded_uniform(7, grid.node_count());
    let (mut su, mut sw) = (u.clone(), w.clone());
    s.apply(&mut su);
    s.apply_adjoint(&mut sw);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).zip(grid.weights()).map(|((x, y), q)| x * y * q).sum::<f64>();
    let (l, r) = (dot(&su, &w), dot(&u, &sw));
    assert!((l - r).abs() <= 1e-13 * l.abs());
}

#[test]
fn laplacian_exact_on_quadratics_inside() {
    let grid = Grid::line(41, 2.0).unwrap();
    let u: Vec<f64> = (0..41).map(|i| grid.coordinate(i, 0).powi(2)).collect();
    let lap = neumann_laplacian(&grid, &u);
    for x in &lap[1..40] {
        assert!((x - 2.0).abs() <= 1e-10);
    }
}

fn sample_director(grid: &Grid, cone: f64) -> DirectorField {
    initial_data(&InitialPreset::TiltedCone { cone_deg: cone }, grid, &UnitVector3::E3, 3).unwrap()
}

/// Explicit oracle: forward Euler plus projection. Both are consistent
/// one-step schemes, so their one-step gap is O(dt²).
#[test]
fn director_step_consistent_with_explicit_euler() {
    let grid = Grid::line(21, 1.0).unwrap();
    let d = sample_director(&grid, 50.0);
    let h = MagneticField::constant(&grid, Vec3::new(0.5, 0.0, 1.0));
    let explicit = |dt: f64| -> DirectorField {
        let lap = neumann_laplacian(&grid, &d);
        DirectorField::new(
            d.iter()
                .zip(&lap)
                .zip(h.iter())
                .map(|((di, li), hi)| {
                    let hd = hi.dot(di);
                    let x = di + (li - di * di.dot(li) + hi * hd - di * (hd * hd)) * dt;
                    x / x.norm()
                })
                .collect(),
        )
    };
    let gap = |dt: f64| Stepper::new(&grid, dt).unwrap().director(&d, &h).unwrap().field.sup_distance(&explicit(dt));
    let (g1, g2) = (gap(1e-5), gap(5e-6));
    let order = (g1 / g2).log2();
    assert!((order - 2.0).abs() < 0.2, "one-step gap order {order}");
}

#[test]
fn director_step_is_rotation_equivariant() {
    let grid = Grid::square(15, 1.0).unwrap();
    let d = sample_director(&grid, 70.0);
    let h = MagneticField::from_fn(&grid, |i| Vec3::new(1.0, grid.coordinate(i, 1), -0.5));
    let r = RotationMatrix::about_axis(&UnitVector3::normalize(Vec3::new(1.0, 2.0, -0.5)).unwrap(), 1.1);
    let st = Stepper::new(&grid, 1e-3).unwrap();
    let a = st.director(&d, &h).unwrap().field.rotated(&r);
    let b = st.director(&d.rotated(&r), &h.rotated(&r)).unwrap().field;
    assert!(a.sup_distance(&b) <= 1e-13);
}

#[test]
fn norm_preserved_and_drift_second_order() {
    let grid = Grid::line(51, 1.0).unwrap();
    let d = sample_director(&grid, 60.0);
    let h = MagneticField::constant(&grid, Vec3::new(3.0, 0.0, 0.0));
    let drift = |dt: f64| Stepper::new(&grid, dt).unwrap().director(&d, &h).unwrap().pre_drift;
    let out = Stepper::new(&grid, 1e-4).unwrap().director(&d, &h).unwrap().field;
    assert!(out.max_norm_deviation() <= 1e-14);
    let order = (drift(2e-4) / drift(1e-4)).log2();
    assert!(order > 1.8, "drift order {order}");
}

#[test]
fn energy_decreases_under_constant_field() {
    let grid = Grid::square(17, 1.0).unwrap();
    let mut d = sample_director(&grid, 70.0);
    for h in [MagneticField::zeros(&grid), MagneticField::constant(&grid, Vec3::new(0.0, 2.0, 1.0))] {
        let st = Stepper::new(&grid, 1e-3).unwrap();
        let mut last = energy(&grid, &d, &h);
        for _ in 0..50 {
            d = st.director(&d, &h).unwrap().field;
            let e = energy(&grid, &d, &h);
            assert!(e <= last + 1e-13, "energy rose from {last} to {e}");
            last = e;
        }
    }
}

#[test]
fn constant_state_is_stationary_without_field() {
    let grid = Grid::line(11, 1.0).unwrap();
    let p = UnitVector3::normalize(Vec3::new(1.0, 1.0, 1.0)).unwrap();
    let d = DirectorField::constant(&grid, p.as_vec());
    let out = Stepper::new(&grid, 1e-2).unwrap().director(&d, &MagneticField::zeros(&grid)).unwrap().field;
    assert!(out.sup_distance_to(&p) <= 1e-15);
}

#[test]
fn oversized_step_is_a_stability_error() {
    let grid = Grid::line(11, 1.0).unwrap();
    let d = sample_director(&grid, 60.0);
    let h = MagneticField::constant(&grid, Vec3::new(100.0, 0.0, 0.0));
    let res = Stepper::new(&grid, 0.1).unwrap().director(&d, &h);
    assert!(matches!(res, Err(Error::Stability { .. })));
}

#[test]
fn off_sphere_input_is_rejected() {
    let grid = Grid::line(11, 1.0).unwrap();
    let d = DirectorField::constant(&grid, Vec3::new(0.0, 0.0, 1.1));
    assert!(Stepper::new(&grid, 1e-3).unwrap().director(&d, &MagneticField::zeros(&grid)).is_err());
}

/// Director flow under the synthesized field tracks the chart system.
#[test]
fn chart_and_director_agree() {
    let grid = Grid::line(101, 1.0).unwrap();
    let d0 = sample_director(&grid, 25.0);
    let f = ControlDensity::from_fn(&grid, |_| Vec2::new(1.0, -0.5));
    let st = Stepper::new(&grid, 1e-4).unwrap();
    let chart = |d: &DirectorField| {
        ChartField::new(d.iter().map(|x| stereo_invert(&UnitVector3::normalize(*x).unwrap()).unwrap().0).collect())
    };
    let mut d = d0.clone();
    let mut v = chart(&d0);
    for _ in 0..200 {
        let h = synthesize_field(&grid, &chart(&d), &f).unwrap();
        d = st.director(&d, &h).unwrap().field;
        v = st.chart(&v, &f).unwrap();
    }
    let gap = d
        .iter()
        .zip(v.iter())
        .map(|(x, y)| (stereo_project(ChartPoint(*y)).as_vec() - x).norm())
        .fold(0.0, f64::max);
    assert!(gap <= 5e-3, "chart/director gap {gap:e}");
}
