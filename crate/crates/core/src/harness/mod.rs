//! Analytic oracles and measurement tools: linear wave fields, oscillation
//! periods, divergence, surface elevation probes and volume bookkeeping.

pub mod metrics;
pub mod scenes;

pub use metrics::{read_metrics, MetricsRow, MetricsWriter};

use std::f64::consts::PI;

use crate::bem::SurfaceMesh;
use crate::flip::ParticleSet;
use crate::geom::ray_triangle;
use crate::grids::{gaussian_smooth, rebuild_levelset_from_particles, Lattice, MacVelocityGrid, VoxelBox};
use crate::{Error, Result, Vec3};

/// Linear (first-order Stokes) finite-depth wave. The still surface is at
/// `y = 0` and the floor at `y = -depth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AiryWaveSpec {
    pub amplitude: f64,
    pub wavelength: f64,
    pub depth: f64,
    pub gravity: f64,
}

impl AiryWaveSpec {
    pub fn new(amplitude: f64, wavelength: f64, depth: f64, gravity: f64) -> std::result::Result<Self, String> {
        if !(wavelength > 0.0 && depth > 0.0 && gravity > 0.0) {
            return Err("wavelength, depth and gravity must be positive".into());
        }
        if !(amplitude >= 0.0 && amplitude <= wavelength / 50.0) {
            return Err(format!("amplitude {amplitude} outside [0, wavelength/50]"));
        }
        Ok(Self {
            amplitude,
            wavelength,
            depth,
            gravity,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// `omega = sqrt(g k tanh(k h))`.
    pub fn omega(&self) -> f64 {
        let k = self.wavenumber();
        (self.gravity * k * (k * self.depth).tanh()).sqrt()
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    /// Progressive-wave elevation `a cos(kx - wt)`.
    pub fn elevation(&self, x: f64, t: f64) -> f64 {
        self.amplitude * (self.wavenumber() * x - self.omega() * t).cos()
    }
}

/// Velocity of the progressive Airy wave at `x` (propagating along +x).
pub fn airy_velocity(spec: &AiryWaveSpec, x: &Vec3, t: f64) -> Vec3 {
    let k = spec.wavenumber();
    let w = spec.omega();
    let s = (k * spec.depth).sinh();
    let phase = k * x.x - w * t;
    let z = k * (x.y + spec.depth);
    let aw = spec.amplitude * w;
    Vec3::new(aw * z.cosh() / s * phase.cos(), aw * z.sinh() / s * phase.sin(), 0.0)
}

/// Period from the mean spacing of same-direction zero crossings, located
/// by linear interpolation between samples. Needs at least three crossings.
pub fn measure_standing_wave_period(times: &[f64], values: &[f64]) -> Result<f64> {
    assert_eq!(times.len(), values.len());
    let mut up = Vec::new();
    let mut down = Vec::new();
    for i in 1..values.len() {
        let (a, b) = (values[i - 1], values[i]);
        let root = || times[i - 1] + (times[i] - times[i - 1]) * a / (a - b);
        if a < 0.0 && b >= 0.0 {
            up.push(root());
        } else if a > 0.0 && b <= 0.0 {
            down.push(root());
        }
    }
    let crossings = up.len() + down.len();
    if crossings < 3 {
        return Err(Error::InsufficientOscillation { crossings });
    }
    let (mut span, mut periods) = (0.0, 0usize);
    for c in [&up, &down] {
        if c.len() >= 2 {
            span += c[c.len() - 1] - c[0];
            periods += c.len() - 1;
        }
    }
    Ok(span / periods as f64)
}

/// Largest `|div u| dx / max(U, 1e-9)` over LIQUID voxels, `U` the largest
/// face speed bordering liquid.
pub fn measure_divergence(grid: &MacVelocityGrid) -> f64 {
    crate::flip::max_relative_divergence(grid)
}

/// What a probe reads its elevation from.
#[derive(Clone, Copy, Debug)]
pub enum ElevationSource<'a> {
    /// Particles on a lattice; the surface is the smoothed union of balls of
    /// radius half a voxel.
    Particles(&'a ParticleSet, &'a Lattice),
    Mesh(&'a SurfaceMesh),
}

/// Smoothing passes of the particle surface used by probes.
pub const PROBE_SMOOTH_PASSES: usize = 3;

/// Height of the highest surface crossing on the vertical line through
/// `probe_xz`.
pub fn surface_elevation(source: ElevationSource<'_>, probe_xz: (f64, f64)) -> Result<f64> {
    let dry = Error::DryProbe {
        x: probe_xz.0,
        z: probe_xz.1,
    };
    match source {
        ElevationSource::Mesh(mesh) => column_hits(mesh, probe_xz).last().copied().ok_or(dry),
        ElevationSource::Particles(ps, lat) => {
            if ps.is_empty() {
                return Err(dry);
            }
            let dx = lat.dx;
            let phi = gaussian_smooth(&rebuild_levelset_from_particles(&ps.positions, lat, 0.5 * dx, 3.0 * dx), PROBE_SMOOTH_PASSES);
            let (lo, hi) = ps.positions.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.y), hi.max(p.y)));
            let h = 0.25 * dx;
            let top = hi + 2.0 * dx;
            let n = ((top - (lo - 2.0 * dx)) / h).ceil() as usize;
            let at = |y: f64| phi.sample(&Vec3::new(probe_xz.0, y, probe_xz.1));
            let mut prev = (top, at(top));
            for i in 1..=n {
                let y = top - i as f64 * h;
                let p = at(y);
                if prev.1 >= 0.0 && p < 0.0 {
                    return Ok(y + (prev.0 - y) * (-p) / (prev.1 - p));
                }
                prev = (y, p);
            }
            Err(dry)
        }
    }
}

/// Sorted heights where the vertical line through `xz` crosses the mesh.
/// Hits closer than `1e-12` (shared edges) are merged.
pub fn column_hits(mesh: &SurfaceMesh, xz: (f64, f64)) -> Vec<f64> {
    let (lo, hi) = mesh.bounds();
    let o = Vec3::new(xz.0, hi.y + 1.0, xz.1);
    let d = Vec3::new(0.0, -1.0, 0.0);
    let mut ys: Vec<f64> = (0..mesh.num_triangles())
        .filter_map(|t| {
            let [a, b, c] = mesh.corners(t);
            ray_triangle(&o, &d, a, b, c).map(|s| o.y - s)
        })
        .filter(|y| *y >= lo.y - 1e-9)
        .collect();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ys
}

/// Volume enclosed by the mesh within the world box `[min, max]`, by
/// midpoint integration of inside intervals over an `n x n` grid of
/// vertical columns.
pub fn mesh_volume_in_box(mesh: &SurfaceMesh, min: &Vec3, max: &Vec3, n: usize) -> f64 {
    let hx = (max.x - min.x) / n as f64;
    let hz = (max.z - min.z) / n as f64;
    let mut vol = 0.0;
    for i in 0..n {
        for k in 0..n {
            // slightly off-center so columns avoid mesh edges
            let x = min.x + (i as f64 + 0.5 + 1.3e-7) * hx;
            let z = min.z + (k as f64 + 0.5 + 2.9e-7) * hz;
            let ys = column_hits(mesh, (x, z));
            for pair in ys.chunks_exact(2) {
                let (y0, y1) = (pair[0].max(min.y), pair[1].min(max.y));
                if y1 > y0 {
                    vol += (y1 - y0) * hx * hz;
                }
            }
        }
    }
    vol
}

/// Enclosed mesh volume outside the voxel box `bx`.
pub fn mesh_volume_outside(mesh: &SurfaceMesh, lattice: &Lattice, bx: &VoxelBox, n: usize) -> f64 {
    mesh.signed_volume() - mesh_volume_in_box(mesh, &bx.world_min(lattice), &bx.world_max(lattice), n)
}

/// Nominal liquid volume of a particle set at `per_voxel` particles per
/// voxel.
pub fn particle_volume(ps: &ParticleSet, dx: f64, per_voxel: usize) -> f64 {
    ps.len() as f64 * dx.powi(3) / per_voxel as f64
}

/// Velocity of the nearest mesh vertex: the baseline the boundary integral
/// is compared against.
pub fn nearest_vertex_velocity(mesh: &SurfaceMesh, x: &Vec3) -> Vec3 {
    let i = mesh
        .vertices
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).norm_squared().partial_cmp(&(b.1 - x).norm_squared()).unwrap())
        .map(|(i, _)| i)
        .expect("empty mesh");
    mesh.velocities[i]
}

/// Relative RMS error `sqrt(sum |u - v|^2 / sum |v|^2)`.
pub fn relative_rms(got: &[Vec3], want: &[Vec3]) -> f64 {
    let e: f64 = got.iter().zip(want).map(|(g, w)| (g - w).norm_squared()).sum();
    let r: f64 = want.iter().map(|w| w.norm_squared()).sum();
    (e / r).sqrt()
}

pub fn froude_number(speed: f64, gravity: f64, length: f64) -> f64 {
    speed / (gravity * length).sqrt()
}

/// Per-frame measurements of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalysisReport {
    pub times: Vec<f64>,
    pub max_rel_div: Vec<f64>,
    /// One series per probe.
    pub elevations: Vec<Vec<f64>>,
    pub volumes: Vec<f64>,
    pub period: Option<f64>,
    pub froude: Option<f64>,
}

impl AnalysisReport {
    pub fn push(&mut self, t: f64, max_rel_div: f64, volume: f64, probes: &[f64]) -> std::result::Result<(), String> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(format!("time {t} does not follow {last}"));
            }
        }
        if self.elevations.is_empty() {
            self.elevations = vec![Vec::new(); probes.len()];
        }
        if probes.len() != self.elevations.len() {
            return Err("probe count changed".into());
        }
        self.times.push(t);
        self.max_rel_div.push(max_rel_div);
        self.volumes.push(volume);
        for (s, &p) in self.elevations.iter_mut().zip(probes) {
            s.push(p);
        }
        Ok(())
    }
}
