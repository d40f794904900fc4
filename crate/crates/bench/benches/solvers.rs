use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use magsteer_bench::fixture;
use magsteer_core::field_synthesis::synthesize_field;
use magsteer_core::grid_pde::{LinearState, Stepper};
use magsteer_core::null_control::{hum_null_control, HumConfig, LinearizedCoeff};
use magsteer_core::Vec2;

fn director_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("director_step");
    for (dim, n) in [(1, 201), (1, 801), (2, 65), (2, 129)] {
        let f = fixture(dim, n);
        let st = Stepper::new(&f.grid, 1e-4).unwrap();
        g.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &f, |b, f| {
            b.iter(|| st.director(&f.director, &f.field).unwrap())
        });
    }
    g.finish();
}

fn chart_step(c: &mut Criterion) {
    let f = fixture(2, 65);
    let st = Stepper::new(&f.grid, 1e-4).unwrap();
    c.bench_function("chart_step/2d/65", |b| b.iter(|| st.chart(&f.chart, &f.control).unwrap()));
}

fn synthesis(c: &mut Criterion) {
    let f = fixture(2, 129);
    c.bench_function("synthesize_field/2d/129", |b| {
        b.iter(|| synthesize_field(&f.grid, &f.chart, &f.control).unwrap())
    });
}

fn hum(c: &mut Criterion) {
    let f = fixture(1, 201);
    let horizon = 0.05;
    let steps = 100;
    let st = Stepper::new(&f.grid, horizon / steps as f64).unwrap();
    let a = LinearizedCoeff::zeros(&f.grid, steps);
    let y0 = LinearState::from_fn(&f.grid, |i| Vec2::new((std::f64::consts::PI * f.grid.coordinate(i, 0)).cos(), 0.0));
    let cfg = HumConfig::default();
    let mut g = c.benchmark_group("hum");
    g.sample_size(10);
    g.bench_function("1d/201/100_steps", |b| {
        b.iter(|| hum_null_control(&st, &a, &y0, horizon, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, director_step, chart_step, synthesis, hum);
criterion_main!(benches);
