//! Shared fixtures for the solver benchmarks.

use magsteer_core::grid_pde::{ChartField, ControlDensity, DirectorField, Grid, MagneticField};
use magsteer_core::presets::{chart_bump, initial_data, InitialPreset};
use magsteer_core::{UnitVector3, Vec2, Vec3};

/// Director, field and chart data on a `dimension`-D grid with `count` nodes per axis.
pub struct Fixture {
    pub grid: Grid,
    pub director: DirectorField,
    pub field: MagneticField,
    pub chart: ChartField,
    pub control: ControlDensity,
}

pub fn fixture(dimension: usize, count: usize) -> Fixture {
    let grid = match dimension {
        1 => Grid::line(count, 1.0),
        _ => Grid::square(count, 1.0),
    }
    .expect("valid benchmark grid");
    let director = initial_data(&InitialPreset::TiltedCone { cone_deg: 60.0 }, &grid, &UnitVector3::E3, 1)
        .expect("hemisphere data");
    let field = MagneticField::constant(&grid, Vec3::new(2.0, 0.0, 1.0));
    let chart = chart_bump(&grid, 0.1);
    let control = ControlDensity::from_fn(&grid, |_| Vec2::new(1.0, -0.5));
    Fixture {
        grid,
        director,
        field,
        chart,
        control,
    }
}
