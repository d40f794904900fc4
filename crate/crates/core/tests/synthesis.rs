use magsteer_core::field_synthesis::{build_synthesis_matrix, chart_forcing, synthesis_residual, synthesize_field, synthesize_node, uniform_field};
use magsteer_core::geometry::{stereo_jacobian, stereo_project, ChartPoint};
use magsteer_core::grid_pde::{ChartField, ControlDensity, Grid};
use magsteer_core::{UnitVector3, Vec2};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;

proptest! {
    #[test]
    fn spectrum_and_inverse(a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let v = ChartPoint::new(a, b);
        let m = build_synthesis_matrix(v);
        let h = v.h();
        let mut eig: Vec<f64> = SymmetricEigen::new(*m.matrix()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        for (x, want) in eig.iter().zip([-0.5 * h, 0.5 * h, 0.5 * h]) {
            prop_assert!((x - want).abs() <= 1e-10 * h);
        }
        let inv = m.matrix().try_inverse().unwrap();
        prop_assert!((inv - m.inverse()).abs().max() <= 1e-10 * inv.abs().max());
    }

    // Oracle: the forcing is the tangential projection pulled back through the
    // chart, recomputed here from Jacobian and normal.
    #[test]
    fn forcing_is_reproduced(a in -3.0..3.0f64, b in -3.0..3.0f64, f1 in -2.0..2.0f64, f2 in -2.0..2.0f64) {
        let v = ChartPoint::new(a, b);
        let f = Vec2::new(f1, f2);
        let hf = synthesize_node(v, f, true);
        prop_assert!((chart_forcing(v, &hf) - f).norm() <= 1e-10);
        let d = stereo_project(v).as_vec();
        let j = stereo_jacobian(v);
        let h = v.h();
        let tangential = hf - d * d.dot(&hf);
        let pulled = j.transpose() * (tangential * hf.dot(&d)) * (h * h / 4.0);
        prop_assert!((pulled - f).norm() <= 1e-9 * (1.0 + f.norm()));
        prop_assert!(synthesize_node(v, f, false).norm() == 0.0);
    }
}

#[test]
fn field_closure_on_grid() {
    let grid = Grid::square(17, 1.0).unwrap();
    let v = ChartField::from_fn(&grid, |i| {
        let [x, y] = grid.coordinates(i);
        Vec2::new(x - 0.5, 0.3 * y)
    });
    let f = ControlDensity::from_fn(&grid, |i| Vec2::new(1.0, grid.coordinate(i, 0)));
    let h = synthesize_field(&grid, &v, &f).unwrap();
    assert!(synthesis_residual(&grid, &v, &f, &h).unwrap() <= 1e-12);
    for i in 0..grid.node_count() {
        if !grid.in_omega(i) {
            assert_eq!(h[i].norm(), 0.0);
            assert_eq!(f[i].norm(), 0.0);
        }
    }
}

#[test]
fn uniform_field_is_constant() {
    let grid = Grid::line(11, 1.0).unwrap();
    let h = uniform_field(&grid, 2.5, &UnitVector3::E1).unwrap();
    assert!(h.iter().all(|x| *x == UnitVector3::E1.as_vec() * 2.5));
}
