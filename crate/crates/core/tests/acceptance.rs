//! Acceptance checks: one pass/fail line per criterion.
//!
//! Runs every reduced-scale scene (tens of minutes on one core). Expected
//! values are computed here from closed forms, independently of the
//! library's own harness formulas.

use std::f64::consts::PI;
use std::time::Instant;

use hybrid_liquid::bem::mesh::icosphere;
use hybrid_liquid::bem::Label;
use hybrid_liquid::cli::scenes::{CrownSplashScene, DamBreakScene, MovingDomainScene};
use hybrid_liquid::coupling::guided::planar_snapshot;
use hybrid_liquid::coupling::{boundary_integral_velocity, guided_vertex_velocity};
use hybrid_liquid::harness::scenes::{DispersionScene, SplashBemScene, StokesInterpScene};
use hybrid_liquid::Vec3;

const G: f64 = 9.81;

struct Line {
    id: &'static str,
    name: &'static str,
    pass: Option<bool>,
    detail: String,
    secs: f64,
}

impl Line {
    fn print(&self) {
        let tag = match self.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "DECLARED",
        };
        println!("criterion {} [{tag}] {}: {} ({:.0} s)", self.id, self.name, self.detail, self.secs);
    }
}

fn timed(id: &'static str, name: &'static str, f: impl FnOnce() -> (Option<bool>, String)) -> Line {
    let t = Instant::now();
    let (pass, detail) = f();
    let line = Line {
        id,
        name,
        pass,
        detail,
        secs: t.elapsed().as_secs_f64(),
    };
    line.print();
    line
}

/// Linear wave period for wavelength `l` on depth `h`.
fn dispersion_period(l: f64, h: f64) -> f64 {
    let k = 2.0 * PI / l;
    2.0 * PI / (G * k * (k * h).tanh()).sqrt()
}

/// Airy wave velocity from central differences of its potential
/// `phi = (a g / w) cosh(k (y + h)) / cosh(k h) sin(k x - w t)`, surface at
/// `y = 0`.
fn airy_velocity_oracle(a: f64, l: f64, h: f64, x: &Vec3) -> Vec3 {
    let k = 2.0 * PI / l;
    let w = (G * k * (k * h).tanh()).sqrt();
    let phi = |x: f64, y: f64| a * G / w * (k * (y + h)).cosh() / (k * h).cosh() * (k * x).sin();
    let e = 1e-6;
    Vec3::new(
        (phi(x.x + e, x.y) - phi(x.x - e, x.y)) / (2.0 * e),
        (phi(x.x, x.y + e) - phi(x.x, x.y - e)) / (2.0 * e),
        0.0,
    )
}

fn rel_rms(got: &[Vec3], want: &[Vec3]) -> f64 {
    let e: f64 = got.iter().zip(want).map(|(g, w)| (g - w).norm_squared()).sum();
    let r: f64 = want.iter().map(|w| w.norm_squared()).sum();
    (e / r).sqrt()
}

fn main() {
    let mut lines = Vec::new();
    let mut divergences: Vec<(&str, f64)> = Vec::new();

    lines.push(timed("2", "deep-water dispersion", || {
        let scene = DispersionScene {
            duration: 2.5,
            ..DispersionScene::default()
        };
        match scene.run(|_, _| {}) {
            Ok(r) => {
                let want = dispersion_period(scene.wave.wavelength, scene.wave.depth);
                let err = (r.measured - want).abs() / want;
                (
                    Some(err <= 0.05),
                    format!("period {:.4} s vs {:.4} s, error {:.2}% (tol 5%)", r.measured, want, 100.0 * err),
                )
            }
            Err(e) => (Some(false), format!("run failed: {e}")),
        }
    }));

    lines.push(timed("3", "boundary-integral reconstruction", || {
        let mut sphere = icosphere(Vec3::zeros(), 1.0, 3, Label::Free);
        let u0 = Vec3::new(0.4, -1.0, 0.25);
        sphere.velocities = vec![u0; sphere.num_vertices()];
        let uniform = match boundary_integral_velocity(&sphere, &Vec3::zeros()) {
            Ok(u) => (u - u0).norm() / u0.norm(),
            Err(_) => f64::INFINITY,
        };
        let scene = StokesInterpScene::default();
        let (a, l, h) = (scene.wave.amplitude, scene.wave.wavelength, scene.wave.depth);
        let mut mesh = scene.mesh();
        mesh.velocities = mesh.vertices.iter().map(|x| airy_velocity_oracle(a, l, h, x)).collect();
        let pts = scene.sample_points();
        let want: Vec<Vec3> = pts.iter().map(|x| airy_velocity_oracle(a, l, h, x)).collect();
        let got: Result<Vec<Vec3>, _> = pts.iter().map(|x| boundary_integral_velocity(&mesh, x)).collect();
        let nearest: Vec<Vec3> = pts
            .iter()
            .map(|x| {
                let i = (0..mesh.num_vertices())
                    .min_by(|&i, &j| (mesh.vertices[i] - x).norm().total_cmp(&(mesh.vertices[j] - x).norm()))
                    .unwrap();
                mesh.velocities[i]
            })
            .collect();
        let Ok(got) = got else {
            return (Some(false), "boundary integral failed".into());
        };
        let (bi, nn) = (rel_rms(&got, &want), rel_rms(&nearest, &want));
        (
            Some(uniform <= 0.01 && bi <= 0.05 && nn > 0.2),
            format!(
                "(a) uniform flow error {:.3}% (tol 1%); (b) {} points: boundary integral RMS {:.2}% (tol 5%), nearest vertex RMS {:.1}% (must exceed 20%)",
                100.0 * uniform,
                pts.len(),
                100.0 * bi,
                100.0 * nn
            ),
        )
    }));

    lines.push(timed("4", "guided-advection examples", || {
        let x0 = Vec3::new(0.4, 0.53, 0.5);
        let v = Vec3::new(0.3, -0.2, 0.1);
        let a = guided_vertex_velocity(&x0, &v, &planar_snapshot(0.53, v), 0.04, 0.04, 3.0);
        let e1 = (a - v).norm() / v.norm();
        let vb = Vec3::new(0.123, 0.456, -0.789);
        let b = guided_vertex_velocity(&x0, &vb, &planar_snapshot(2.0, Vec3::x()), 0.01, 0.04, 3.0);
        let w = Vec3::new(0.2, 0.1, -0.4);
        let c = guided_vertex_velocity(&x0, &Vec3::zeros(), &planar_snapshot(0.53, w), 0.04, 0.04, 3.0);
        let e3 = (c - 0.5 * w).norm() / w.norm();
        (
            Some(e1 <= 1e-12 && b == vb && e3 <= 1e-12),
            format!(
                "fixed point error {e1:.1e}, pass-through exact {}, half-speed error {e3:.1e}",
                b == vb
            ),
        )
    }));

    lines.push(timed("5", "fill/sink invariant on a moving domain", || {
        match MovingDomainScene::default().run(|_, _| {}) {
            Ok(r) => {
                divergences.push(("moving domain", r.max_rel_div));
                let drift = r.max_volume_drift();
                (
                    Some(r.fill_violations == 0 && drift <= 0.02),
                    format!(
                        "{} fill voxels outside 8..16 over {} substeps; max volume drift {:.3}% (tol 2%)",
                        r.fill_violations,
                        r.substeps,
                        100.0 * drift
                    ),
                )
            }
            Err(e) => (Some(false), format!("run failed: {e}")),
        }
    }));

    lines.push(timed("6", "domain extension vs full-grid reference", || {
        let s = CrownSplashScene::default();
        match s.run(|_, _| {}) {
            Ok(r) => {
                divergences.push(("crown splash", r.max_rel_div));
                let err = r.arrival_error();
                let tol = 2.0 * s.dx_flip;
                (
                    Some(err.is_some_and(|e| e <= 0.15) && r.tracking_rms <= tol),
                    format!(
                        "arrival at {} m: hybrid {:?} s, reference {:?} s, error {} (tol 15%); mesh vs particle surface RMS {:.4} m (tol {tol} m); dx_flip {} m",
                        s.probe_distance,
                        r.hybrid_arrival,
                        r.reference_arrival,
                        err.map_or("undefined".into(), |e| format!("{:.1}%", 100.0 * e)),
                        r.tracking_rms,
                        s.dx_flip
                    ),
                )
            }
            Err(e) => (Some(false), format!("run failed: {e}")),
        }
    }));

    lines.push(timed("7", "partial vs full Helmholtz decomposition", || {
        let s = SplashBemScene::default();
        match s.run(|_, _| {}) {
            Ok(r) => {
                let (p, f) = (r.partial.last().unwrap(), r.full.last().unwrap());
                let n = p.len() as f64;
                let diff = (p.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt();
                let disp = (p.iter().map(|a| (a - s.depth).powi(2)).sum::<f64>() / n).sqrt();
                let rel = diff / disp;
                (
                    Some(rel > 0.05),
                    format!(
                        "frame {} height RMS difference {:.2e} m over displacement {:.2e} m = {:.1}% (must exceed 5%)",
                        s.frames,
                        diff,
                        disp,
                        100.0 * rel
                    ),
                )
            }
            Err(e) => (Some(false), format!("run failed: {e}")),
        }
    }));

    lines.push(timed("1", "pressure divergence tolerance", || {
        match DamBreakScene::default().run(|_| {}) {
            Ok(r) => {
                divergences.push(("48^3 dam break", r.max_rel_div));
                let worst = divergences.iter().map(|d| d.1).fold(0.0, f64::max);
                let parts: Vec<String> = divergences.iter().map(|(n, d)| format!("{n} {d:.2e}")).collect();
                (
                    Some(worst <= 1e-7),
                    format!("max relative divergence {worst:.2e} (tol 1e-7): {}", parts.join(", ")),
                )
            }
            Err(e) => (Some(false), format!("run failed: {e}")),
        }
    }));

    lines.push(timed("8", "full-scale scenes", || {
        (
            None,
            "billion-particle wakes, wake angle vs Froude number, runtime tables and external-tool comparisons are not reproducible at desk scale".into(),
        )
    }));

    let failed: Vec<&str> = lines.iter().filter(|l| l.pass == Some(false)).map(|l| l.id).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        lines.iter().filter(|l| l.pass == Some(true)).count(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
