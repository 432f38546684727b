//! Built-in validation suites.

use std::fmt;

use super::parse_scene;
use super::scenes::{CrownSplashScene, MovingDomainScene, RestScene};
use crate::bem::mesh::icosphere;
use crate::bem::Label;
use crate::coupling::guided::planar_snapshot;
use crate::coupling::{boundary_integral_velocity, guided_vertex_velocity};
use crate::harness::scenes::{DispersionScene, StokesInterpScene};
use crate::harness::measure_standing_wave_period;
use crate::{Error, Result, Vec3};

pub const SUITES: &[&str] = &["dispersion", "stokes-interp", "domain-extension", "rest", "units"];

/// Largest particle speed accepted after the rest suite, as a fraction of
/// `sqrt(g dx)`, the speed scale of the shortest gravity waves on the grid.
pub const REST_SPEED_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub expected: String,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, measured: impl fmt::Display, expected: impl fmt::Display, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            measured: measured.to_string(),
            expected: expected.to_string(),
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "suite {}", self.suite)?;
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            writeln!(f, "  [{tag}] {}: measured {}, expected {}", c.name, c.measured, c.expected)?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Runs a named suite. Numerical failures inside a suite are errors, not
/// failed checks.
pub fn validate(suite: &str) -> Result<SuiteReport> {
    let checks = match suite {
        "dispersion" => dispersion()?,
        "stokes-interp" => stokes_interp()?,
        "domain-extension" => domain_extension()?,
        "rest" => rest()?,
        "units" => unit_checks(),
        other => return Err(Error::UnknownSuite(other.to_string())),
    };
    Ok(SuiteReport {
        suite: suite.to_string(),
        checks,
    })
}

fn dispersion() -> Result<Vec<Check>> {
    let scene = DispersionScene {
        duration: 2.5,
        ..DispersionScene::default()
    };
    let r = scene.run(|f, e| log::info!("dispersion frame {f}: elevation {e:.5}"))?;
    let err = r.relative_error();
    Ok(vec![Check::new(
        "standing-wave period (s)",
        format!("{:.4} (theory {:.4}, error {:.2}%)", r.measured, r.theory, 100.0 * err),
        "error <= 5%",
        err <= 0.05,
    )])
}

fn stokes_interp() -> Result<Vec<Check>> {
    let r = StokesInterpScene::default().run()?;
    Ok(vec![
        Check::new(
            "boundary-integral RMS error",
            format!("{:.2}% over {} points", 100.0 * r.rms_boundary_integral, r.samples),
            "<= 5%",
            r.rms_boundary_integral <= 0.05,
        ),
        Check::new(
            "nearest-vertex RMS error",
            format!("{:.1}%", 100.0 * r.rms_nearest_vertex),
            "> 20%",
            r.rms_nearest_vertex > 0.2,
        ),
    ])
}

fn domain_extension() -> Result<Vec<Check>> {
    let m = MovingDomainScene::default().run(|f, _| log::info!("moving domain frame {f}"))?;
    let drift = m.max_volume_drift();
    let s = CrownSplashScene::default();
    let c = s.run(|run, f| log::info!("crown splash {run} frame {f}"))?;
    let arrival = c.arrival_error();
    let track_tol = 2.0 * s.dx_flip;
    Ok(vec![
        Check::new(
            "fill voxels outside 8..16 particles",
            format!("{} over {} substeps", m.fill_violations, m.substeps),
            "0",
            m.fill_violations == 0,
        ),
        Check::new("liquid volume drift", format!("{:.3}%", 100.0 * drift), "<= 2%", drift <= 0.02),
        Check::new(
            "first-wave arrival vs full-grid reference",
            format!(
                "{:?} s vs {:?} s ({})",
                c.hybrid_arrival,
                c.reference_arrival,
                arrival.map_or("undefined".to_string(), |e| format!("{:.1}%", 100.0 * e))
            ),
            "within 15%",
            arrival.is_some_and(|e| e <= 0.15),
        ),
        Check::new(
            "mesh vs particle surface RMS (m)",
            format!("{:.4}", c.tracking_rms),
            format!("<= {track_tol}"),
            c.tracking_rms <= track_tol,
        ),
        Check::new(
            "max relative divergence",
            format!("{:e}", m.max_rel_div.max(c.max_rel_div)),
            "<= 1e-7",
            m.max_rel_div.max(c.max_rel_div) <= 1e-7,
        ),
    ])
}

fn rest() -> Result<Vec<Check>> {
    let scene = RestScene::default();
    let cfg = scene.config();
    let limit = REST_SPEED_FRACTION * (cfg.gravity.norm() * cfg.dx_flip).sqrt();
    let r = scene.run(|f| log::info!("rest frame {f}"))?;
    Ok(vec![
        Check::new(
            &format!("max particle speed after {} frames (m/s)", scene.frames),
            format!("{:.4}", r.max_speed),
            format!("<= {limit:.4}"),
            r.max_speed <= limit,
        ),
        Check::new(
            "max relative divergence",
            format!("{:e}", r.max_rel_div),
            "<= 1e-7",
            r.max_rel_div <= 1e-7,
        ),
    ])
}

fn unit(name: &str, r: std::result::Result<(), String>) -> Check {
    match r {
        Ok(()) => Check::new(name, "ok", "ok", true),
        Err(m) => Check::new(name, m, "ok", false),
    }
}

/// Quick worked examples of the individual modules.
pub fn unit_checks() -> Vec<Check> {
    let mut out = Vec::new();

    let v = Vec3::new(0.3, -0.2, 0.1);
    let x0 = Vec3::new(0.4, 0.53, 0.5);
    let got = guided_vertex_velocity(&x0, &v, &planar_snapshot(0.53, v), 0.04, 0.04, 3.0);
    out.push(unit(
        "guidance keeps a consistent velocity",
        if (got - v).norm() <= 1e-12 * v.norm() { Ok(()) } else { Err(format!("{got:?}")) },
    ));

    let v = Vec3::new(0.123, 0.456, -0.789);
    let got = guided_vertex_velocity(
        &x0,
        &v,
        &planar_snapshot(2.0, Vec3::x()),
        0.01,
        0.04,
        3.0,
    );
    out.push(unit(
        "guidance passes through without a surface crossing",
        if got == v { Ok(()) } else { Err(format!("{got:?}")) },
    ));

    let w = Vec3::new(0.2, 0.1, -0.4);
    let got = guided_vertex_velocity(&x0, &Vec3::zeros(), &planar_snapshot(0.53, w), 0.04, 0.04, 3.0);
    out.push(unit(
        "guidance moves a static vertex at half the grid speed",
        if (got - w / 2.0).norm() <= 1e-12 * w.norm() { Ok(()) } else { Err(format!("{got:?}")) },
    ));

    let mut sphere = icosphere(Vec3::zeros(), 1.0, 3, Label::Free);
    let u0 = Vec3::new(0.4, -1.0, 0.25);
    sphere.velocities = vec![u0; sphere.num_vertices()];
    out.push(unit(
        "boundary integral reproduces uniform flow",
        match boundary_integral_velocity(&sphere, &Vec3::zeros()) {
            Ok(u) if (u - u0).norm() <= 0.01 * u0.norm() => Ok(()),
            Ok(u) => Err(format!("{u:?}")),
            Err(e) => Err(e.to_string()),
        },
    ));

    let period = 1.7;
    let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.02).collect();
    let values: Vec<f64> = times.iter().map(|t| (2.0 * std::f64::consts::PI * t / period + 0.3).cos()).collect();
    out.push(unit(
        "period measurement of a sampled cosine",
        match measure_standing_wave_period(&times, &values) {
            Ok(p) if (p - period).abs() <= 1e-3 * period => Ok(()),
            Ok(p) => Err(format!("{p}")),
            Err(e) => Err(e.to_string()),
        },
    ));

    out.push(unit(
        "scene file accepts a 2:1 surface-to-grid ratio",
        parse_scene("dx_flip = 0.01\ndx_bem = 0.02\n").map(|_| ()).map_err(|e| e.to_string()),
    ));
    out.push(unit(
        "scene file rejects a surface finer than the grid",
        match parse_scene("dx_bem = 0.005\ndx_flip = 0.01\n") {
            Err(Error::Config { .. }) => Ok(()),
            other => Err(format!("{other:?}")),
        },
    ));
    out
}
