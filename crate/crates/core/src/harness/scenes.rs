//! Reduced-scale validation scenes shared by the command-line suites and the
//! acceptance checks.

use rayon::prelude::*;

use crate::bem::mesh::{box_tank, cylinder_tank};
use crate::bem::{HdMode, SurfaceMesh, VertexKind};
use crate::coupling::{boundary_integral_velocity, step_frame, FrameState};
use crate::{Result, Vec3};

use super::{
    airy_velocity, measure_standing_wave_period, nearest_vertex_velocity, relative_rms, surface_elevation, AiryWaveSpec,
    ElevationSource,
};

/// Standing wave in a closed rectangular tank, surface solver only.
#[derive(Clone, Debug)]
pub struct DispersionScene {
    pub length: f64,
    pub width: f64,
    pub wave: AiryWaveSpec,
    pub dx_bem: f64,
    pub fps: f64,
    pub duration: f64,
    pub probe_x: f64,
}

impl Default for DispersionScene {
    fn default() -> Self {
        Self {
            length: 4.0,
            width: 1.0,
            wave: AiryWaveSpec::new(0.02, 2.0, 2.0, 9.81).unwrap(),
            dx_bem: 0.1,
            fps: 24.0,
            duration: 3.0,
            probe_x: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DispersionResult {
    pub times: Vec<f64>,
    pub elevation: Vec<f64>,
    /// Enclosed volume per sample.
    pub volume: Vec<f64>,
    pub measured: f64,
    pub theory: f64,
}

impl DispersionResult {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.theory).abs() / self.theory
    }
}

impl DispersionScene {
    pub fn initial_state(&self) -> FrameState {
        let k = self.wave.wavenumber();
        let a = self.wave.amplitude;
        let mesh = box_tank(
            Vec3::zeros(),
            (self.length, self.width),
            self.wave.depth,
            self.dx_bem,
            move |x, _| a * (k * x).cos(),
        );
        FrameState {
            frame: 0,
            time: 0.0,
            dt_frame: 1.0 / self.fps,
            gravity: Vec3::new(0.0, -self.wave.gravity, 0.0),
            rho: 1000.0,
            hd_mode: HdMode::Partial,
            mesh: Some(mesh),
            flip: None,
        }
    }

    /// Runs the scene, calling `progress(frame, elevation)` after each frame.
    pub fn run(&self, mut progress: impl FnMut(usize, f64)) -> Result<DispersionResult> {
        let mut state = self.initial_state();
        let frames = (self.duration * self.fps).round() as usize;
        let probe = (self.probe_x + 1.7e-7, 0.5 * self.width + 2.3e-7);
        let depth = self.wave.depth;
        let mut times = Vec::with_capacity(frames + 1);
        let mut elevation = Vec::with_capacity(frames + 1);
        let mut volume = Vec::with_capacity(frames + 1);
        let mut record = |s: &FrameState| -> Result<f64> {
            let m = s.mesh.as_ref().unwrap();
            let e = surface_elevation(ElevationSource::Mesh(m), probe)? - depth;
            times.push(s.time);
            elevation.push(e);
            volume.push(m.signed_volume());
            Ok(e)
        };
        record(&state)?;
        for f in 0..frames {
            step_frame(&mut state)?;
            let e = record(&state)?;
            progress(f, e);
        }
        let measured = measure_standing_wave_period(&times, &elevation)?;
        Ok(DispersionResult {
            times,
            elevation,
            volume,
            measured,
            theory: self.wave.period(),
        })
    }
}

/// Airy wave traced onto a closed tank mesh; the interior field is rebuilt
/// from the boundary integral and compared with the closed form.
#[derive(Clone, Debug)]
pub struct StokesInterpScene {
    pub length: f64,
    pub width: f64,
    pub wave: AiryWaveSpec,
    pub dx_bem: f64,
    /// Minimum distance of the sample points from the surface and the walls,
    /// in triangle sizes.
    pub clearance: f64,
    /// Sample spacing, in triangle sizes.
    pub spacing: f64,
}

impl Default for StokesInterpScene {
    fn default() -> Self {
        Self {
            length: 2.0,
            width: 0.6,
            wave: AiryWaveSpec::new(0.02, 1.0, 0.6, 9.81).unwrap(),
            dx_bem: 0.05,
            clearance: 2.0,
            spacing: 1.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StokesInterpResult {
    pub samples: usize,
    pub rms_boundary_integral: f64,
    pub rms_nearest_vertex: f64,
}

impl StokesInterpScene {
    /// Tank with the floor at `y = -depth`, the wave at `t = 0` on top, and
    /// every vertex carrying the analytic velocity.
    pub fn mesh(&self) -> SurfaceMesh {
        let w = self.wave;
        let mut m = box_tank(
            Vec3::new(0.0, -w.depth, 0.0),
            (self.length, self.width),
            w.depth,
            self.dx_bem,
            move |x, _| w.elevation(x, 0.0),
        );
        m.velocities = m.vertices.iter().map(|x| airy_velocity(&w, x, 0.0)).collect();
        m
    }

    pub fn sample_points(&self) -> Vec<Vec3> {
        let c = self.clearance * self.dx_bem;
        let h = self.spacing * self.dx_bem;
        let w = self.wave;
        let top = -w.amplitude - c;
        let mut pts = Vec::new();
        let count = |lo: f64, hi: f64| ((hi - lo) / h).floor() as usize + 1;
        for i in 0..count(c, self.length - c) {
            for k in 0..count(c, self.width - c) {
                for j in 0..count(-w.depth + c, top) {
                    pts.push(Vec3::new(c + i as f64 * h, top - j as f64 * h, c + k as f64 * h));
                }
            }
        }
        pts
    }

    pub fn run(&self) -> Result<StokesInterpResult> {
        let m = self.mesh();
        let pts = self.sample_points();
        let want: Vec<Vec3> = pts.iter().map(|x| airy_velocity(&self.wave, x, 0.0)).collect();
        let got: Vec<Vec3> = pts
            .par_iter()
            .map(|x| boundary_integral_velocity(&m, x))
            .collect::<Result<_>>()?;
        let nn: Vec<Vec3> = pts.iter().map(|x| nearest_vertex_velocity(&m, x)).collect();
        Ok(StokesInterpResult {
            samples: pts.len(),
            rms_boundary_integral: relative_rms(&got, &want),
            rms_nearest_vertex: relative_rms(&nn, &want),
        })
    }
}

/// Surface-only splash: a downward velocity bump on the pool surface of a
/// cylindrical tank, run with both Helmholtz modes.
#[derive(Clone, Debug)]
pub struct SplashBemScene {
    pub radius: f64,
    pub depth: f64,
    pub dx_bem: f64,
    pub impulse_radius: f64,
    pub impulse_speed: f64,
    pub fps: f64,
    pub frames: usize,
    /// Probes on a square grid of this spacing inside `probe_radius`.
    pub probe_spacing: f64,
    pub probe_radius: f64,
}

impl Default for SplashBemScene {
    fn default() -> Self {
        Self {
            radius: 0.5,
            depth: 0.3,
            dx_bem: 0.05,
            impulse_radius: 0.12,
            impulse_speed: 0.5,
            fps: 24.0,
            frames: 30,
            probe_spacing: 0.05,
            probe_radius: 0.4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SplashBemResult {
    /// Surface heights per frame (rows) and probe (columns), one table per
    /// mode: partial first.
    pub partial: Vec<Vec<f64>>,
    pub full: Vec<Vec<f64>>,
    /// RMS of the height difference between the modes at the last frame.
    pub rms_difference: f64,
    /// RMS displacement of the partial run from the rest level.
    pub rms_displacement: f64,
}

impl SplashBemResult {
    pub fn relative_difference(&self) -> f64 {
        self.rms_difference / self.rms_displacement
    }
}

impl SplashBemScene {
    pub fn initial_state(&self, mode: HdMode) -> FrameState {
        let mut mesh = cylinder_tank((0.0, 0.0), self.radius, 0.0, self.depth, self.dx_bem, |_, _| 0.0);
        let kinds = mesh.vertex_kinds();
        for (i, x) in mesh.vertices.iter().enumerate() {
            let r = x.x.hypot(x.z) / self.impulse_radius;
            if kinds[i] == VertexKind::Free && r < 1.0 {
                mesh.velocities[i] = Vec3::new(0.0, -self.impulse_speed * (1.0 - r * r).powi(2), 0.0);
            }
        }
        FrameState {
            frame: 0,
            time: 0.0,
            dt_frame: 1.0 / self.fps,
            gravity: Vec3::new(0.0, -9.81, 0.0),
            rho: 1000.0,
            hd_mode: mode,
            mesh: Some(mesh),
            flip: None,
        }
    }

    pub fn probes(&self) -> Vec<(f64, f64)> {
        let n = (self.probe_radius / self.probe_spacing).floor() as i32;
        let mut out = Vec::new();
        for i in -n..=n {
            for k in -n..=n {
                let (x, z) = (i as f64 * self.probe_spacing + 1.1e-7, k as f64 * self.probe_spacing + 2.3e-7);
                if x.hypot(z) <= self.probe_radius {
                    out.push((x, z));
                }
            }
        }
        out
    }

    pub fn run_mode(&self, mode: HdMode, mut progress: impl FnMut(usize)) -> Result<Vec<Vec<f64>>> {
        let mut state = self.initial_state(mode);
        let probes = self.probes();
        let mut table = Vec::with_capacity(self.frames);
        for f in 0..self.frames {
            step_frame(&mut state)?;
            let m = state.mesh.as_ref().unwrap();
            table.push(
                probes
                    .iter()
                    .map(|&p| surface_elevation(ElevationSource::Mesh(m), p))
                    .collect::<Result<Vec<f64>>>()?,
            );
            progress(f);
        }
        Ok(table)
    }

    pub fn run(&self, mut progress: impl FnMut(HdMode, usize)) -> Result<SplashBemResult> {
        let partial = self.run_mode(HdMode::Partial, |f| progress(HdMode::Partial, f))?;
        let full = self.run_mode(HdMode::Full, |f| progress(HdMode::Full, f))?;
        let (p, q) = (partial.last().unwrap(), full.last().unwrap());
        let n = p.len() as f64;
        let rms_difference = (p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt();
        let rms_displacement = (p.iter().map(|a| (a - self.depth).powi(2)).sum::<f64>() / n).sqrt();
        Ok(SplashBemResult {
            partial,
            full,
            rms_difference,
            rms_displacement,
        })
    }
}
