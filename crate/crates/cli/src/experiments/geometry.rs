//! `verify-geometry`: chart and synthesis identities on seeded random samples.

use magsteer_core::field_synthesis::{build_synthesis_matrix, synthesis_residual, synthesize_field, synthesize_node};
use magsteer_core::geometry::{frame_matrix, stereo_invert, stereo_jacobian, stereo_project, ChartPoint, UnitVector3};
use magsteer_core::grid_pde::{ChartField, ControlDensity};
use magsteer_core::monitors::MonitorCheck;
use magsteer_core::presets::seeded_uniform;
use magsteer_core::{Mat2, Vec2, Vec3};
use nalgebra::SymmetricEigen;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Artifacts, Table};

/// Worst residuals over the sample set.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeometryResiduals {
    pub metric: f64,
    pub chart_round_trip: f64,
    pub sphere_round_trip: f64,
    pub frame_det_rel: f64,
    pub frame_det_min: f64,
    pub synthesis: f64,
    pub spectrum: f64,
    pub off_omega: f64,
}

pub fn residuals(config: &RunConfig, seed: u64) -> Result<GeometryResiduals, CliError> {
    let n = config.geometry.samples;
    let radius = config.geometry.radius;
    let u = seeded_uniform(seed, 7 * n);
    let mut r = GeometryResiduals {
        frame_det_min: f64::INFINITY,
        ..Default::default()
    };
    for s in u.chunks_exact(7) {
        let v = ChartPoint::new(radius * s[0], radius * s[1]);
        let h = v.h();

        let j = stereo_jacobian(v);
        let metric = j.transpose() * j - Mat2::identity() * (4.0 / (h * h));
        r.metric = r.metric.max(metric.abs().max());

        let back = stereo_invert(&stereo_project(v)).map_err(CliError::solver("chart round trip"))?;
        r.chart_round_trip = r.chart_round_trip.max((back.0 - v.0).norm());

        let d = UnitVector3::normalize(Vec3::new(s[2], s[3], s[4])).map_err(CliError::solver("sphere sample"))?;
        if d.z > -0.99 {
            let p = stereo_project(stereo_invert(&d).map_err(CliError::solver("sphere round trip"))?);
            r.sphere_round_trip = r.sphere_round_trip.max((p.as_vec() - d.as_vec()).norm());
        }

        let (e, det) = frame_matrix(v);
        let gram = (e * e.transpose()).determinant();
        r.frame_det_rel = r.frame_det_rel.max((gram * h.powi(4) / 16.0 - 1.0).abs());
        r.frame_det_min = r.frame_det_min.min(det.abs());

        let f = Vec2::new(2.0 * s[5], 2.0 * s[6]);
        let a = build_synthesis_matrix(v);
        let mut eig: Vec<f64> = SymmetricEigen::new(*a.matrix()).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let want = [-0.5 * h, 0.5 * h, 0.5 * h];
        let spec = eig.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        r.spectrum = r.spectrum.max(spec);

        let field = synthesize_node(v, f, true);
        let forcing = magsteer_core::field_synthesis::chart_forcing(v, &field);
        r.synthesis = r.synthesis.max((forcing - f).norm());
        r.off_omega = r.off_omega.max(synthesize_node(v, f, false).norm());
    }

    // field-level closure on the run grid
    let grid = config.build_grid()?;
    let g = seeded_uniform(seed ^ 0x5eed, 4 * grid.node_count());
    let v = ChartField::from_fn(&grid, |i| Vec2::new(radius * g[4 * i], radius * g[4 * i + 1]));
    let f = ControlDensity::from_fn(&grid, |i| Vec2::new(2.0 * g[4 * i + 2], 2.0 * g[4 * i + 3]));
    let h = synthesize_field(&grid, &v, &f).map_err(CliError::solver("field synthesis"))?;
    let res = synthesis_residual(&grid, &v, &f, &h).map_err(CliError::solver("synthesis residual"))?;
    r.synthesis = r.synthesis.max(res);
    for i in 0..grid.node_count() {
        if !grid.in_omega(i) {
            r.off_omega = r.off_omega.max(h[i].norm());
        }
    }
    Ok(r)
}

pub fn run(config: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    let r = residuals(config, seed)?;
    let mut art = Artifacts {
        checks: vec![
        MonitorCheck::at_most("metric_identity", r.metric, 1e-12),
        MonitorCheck::at_most("chart_round_trip", r.chart_round_trip, 1e-10),
        MonitorCheck::at_most("sphere_round_trip", r.sphere_round_trip, 1e-10),
        MonitorCheck::at_most("frame_det_h4_over_16", r.frame_det_rel, 1e-10),
        MonitorCheck::at_least("frame_det_nonzero", r.frame_det_min, f64::MIN_POSITIVE),
        MonitorCheck::at_most("synthesis_residual", r.synthesis, 1e-10),
        MonitorCheck::at_most("synthesis_spectrum", r.spectrum, 1e-10),
        MonitorCheck::at_most("field_off_omega", r.off_omega, 0.0),
        ],
        ..Default::default()
    };
    art.notes.push(("samples".into(), config.geometry.samples as f64));
    art.notes.push(("radius".into(), config.geometry.radius));

    let mut t = Table::new("frame_exponent", &["h", "det_gram", "det_gram_h4", "det_gram_h8"]);
    for v in [0.0, 0.5, 1.0, 2.0] {
        let p = ChartPoint::new(v, 0.0);
        let (e, _) = frame_matrix(p);
        let gram = (e * e.transpose()).determinant();
        let h = p.h();
        t.push(vec![h, gram, gram * h.powi(4), gram * h.powi(8)]);
    }
    art.tables.push(t);
    Ok(art)
}
