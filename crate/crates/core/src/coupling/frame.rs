//! Frame stepping: a surface loop guided by the frame-start particle
//! surface, followed by a particle-grid loop fed by boundary integrals.

use super::{
    build_narrowband_velocity, guided_vertex_velocity, update_fill_sink, CouplingParams, FillReport, FlipSnapshot,
    ZoneMasks,
};
use crate::bem::{advect_and_remesh, project_surface, HdMode, Label, SurfaceMesh};
use crate::flip::{
    advect_particles, apply_body_force, classify_cells, extrapolate_velocity, grid_to_particle, particle_to_grid,
    pressure_project, BoxContainer, CylinderContainer, FlipParams, ParticleSet, Solid,
};
use crate::grids::{gaussian_smooth, mesh_to_levelset_in_box, Lattice, LevelSet, MacVelocityGrid, VoxelBox};
use crate::{Result, Vec3};

/// Smoothing passes applied to the particle surface before guidance.
pub const SMOOTH_PASSES: usize = 3;
/// Layers of velocity extrapolation into air.
pub const EXTRAPOLATION_LAYERS: usize = 2;

/// Tank walls seen by the particles.
#[derive(Clone, Copy, Debug)]
pub enum Container {
    Open,
    Box(BoxContainer),
    Cylinder(CylinderContainer),
}

impl Solid for Container {
    fn phi(&self, x: &Vec3) -> f64 {
        match self {
            Container::Open => 1e30,
            Container::Box(b) => b.phi(x),
            Container::Cylinder(c) => c.phi(x),
        }
    }
}

/// Scripted domain centers, linear between `(frame, center)` keyframes and
/// constant outside them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DomainMotion {
    pub keyframes: Vec<(f64, Vec3)>,
}

impl DomainMotion {
    pub fn center_at(&self, frame: f64) -> Option<Vec3> {
        let k = &self.keyframes;
        let first = k.first()?;
        if frame <= first.0 {
            return Some(first.1);
        }
        for w in k.windows(2) {
            let ((f0, c0), (f1, c1)) = (w[0], w[1]);
            if frame <= f1 {
                let s = if f1 > f0 { (frame - f0) / (f1 - f0) } else { 1.0 };
                return Some(c0 + (c1 - c0) * s);
            }
        }
        Some(k.last().unwrap().1)
    }
}

/// Particle-grid part of the state.
#[derive(Clone, Debug)]
pub struct FlipDomain {
    pub particles: ParticleSet,
    pub lattice: Lattice,
    pub params: FlipParams,
    pub coupling: CouplingParams,
    pub container: Container,
    pub domain: VoxelBox,
    pub motion: DomainMotion,
    pub radius: f64,
    pub seed: u64,
    /// Whether the domain exchanges data with the surface mesh.
    pub coupled: bool,
}

impl FlipDomain {
    /// Domain box placed at the scripted center for `frame` (same size,
    /// snapped to whole voxels).
    pub fn domain_at(&self, frame: f64) -> VoxelBox {
        let Some(center) = self.motion.center_at(frame) else {
            return self.domain;
        };
        let d = self.domain.dims();
        let s = (center - self.lattice.origin) / self.lattice.dx;
        let lo = [
            (s.x - 0.5 * d[0] as f64).round() as i32,
            (s.y - 0.5 * d[1] as f64).round() as i32,
            (s.z - 0.5 * d[2] as f64).round() as i32,
        ];
        VoxelBox::new(lo, [lo[0] + d[0] as i32, lo[1] + d[1] as i32, lo[2] + d[2] as i32])
    }

    pub fn zones(&self) -> ZoneMasks {
        ZoneMasks::new(self.lattice, self.domain, &self.coupling)
    }

    fn liquid_band(&self) -> f64 {
        4.0 * self.lattice.dx
    }

    /// Frame-start guidance data: smoothed particle surface and the
    /// transferred (extrapolated) velocity grid.
    pub fn snapshot(&self) -> FlipSnapshot {
        let (mut grid, phi) = particle_to_grid(&self.particles, &self.lattice, self.radius, self.liquid_band());
        classify_cells(&mut grid, &phi, &self.domain, &self.container, &|_| Vec3::zeros());
        extrapolate_velocity(&mut grid, EXTRAPOLATION_LAYERS);
        let (lo, hi) = (self.domain.world_min(&self.lattice), self.domain.world_max(&self.lattice));
        FlipSnapshot {
            phi: gaussian_smooth(&phi, SMOOTH_PASSES),
            grid,
            y_range: (lo.y, hi.y),
            offset: (1.0 - self.coupling.seed_depth_fraction) * self.radius,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrameState {
    pub frame: usize,
    pub time: f64,
    pub dt_frame: f64,
    pub gravity: Vec3,
    pub rho: f64,
    pub hd_mode: HdMode,
    pub mesh: Option<SurfaceMesh>,
    pub flip: Option<FlipDomain>,
}

#[derive(Clone, Debug, Default)]
pub struct FrameReport {
    pub bem_substeps: Vec<f64>,
    pub flip_substeps: Vec<f64>,
    /// Largest relative divergence after any projection of the frame.
    pub max_rel_div: f64,
    /// Number of guidance snapshots taken.
    pub snapshots: usize,
    pub fill: FillReport,
    /// Fill voxels below the seeding threshold whose particle count left
    /// the allowed range after some substep.
    pub fill_violations: usize,
}

/// Substep sizes of the surface loop for a fixed vertex speed.
pub fn bem_substep_sizes(dx_bem: f64, vmax: f64, dt_frame: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = 0.0;
    while dt_frame - t > 1e-12 * dt_frame {
        let remaining = dt_frame - t;
        let dt = if vmax > 0.0 { (dx_bem / vmax).min(remaining) } else { remaining };
        out.push(dt);
        t += dt;
    }
    out
}

/// One surface substep: move and remesh, add gravity, project.
pub fn bem_substep(mesh: &SurfaceMesh, dt: f64, gravity: &Vec3, rho: f64, mode: HdMode) -> Result<SurfaceMesh> {
    let mut moved = advect_and_remesh(mesh, dt)?;
    for v in moved.velocities.iter_mut() {
        *v += gravity * dt;
    }
    Ok(project_surface(&moved, mode, rho, dt)?.0)
}

fn free_vertices(mesh: &SurfaceMesh) -> Vec<bool> {
    let mut free = vec![false; mesh.num_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.labels[t] == Label::Free {
            for &v in tri {
                free[v] = true;
            }
        }
    }
    free
}

fn guided_velocities(
    mesh: &SurfaceMesh,
    snap: &FlipSnapshot,
    zones: &ZoneMasks,
    free: &[bool],
    dt: f64,
    dt_frame: f64,
    alpha: f64,
) -> Vec<Vec3> {
    mesh.vertices
        .iter()
        .zip(&mesh.velocities)
        .enumerate()
        .map(|(i, (x, v))| {
            let w = zones.guidance_weight(x);
            if free[i] && w > 0.0 {
                v + (guided_vertex_velocity(x, v, snap, dt, dt_frame, alpha) - v) * w
            } else {
                *v
            }
        })
        .collect()
}

fn surface_phase(state: &mut FrameState, report: &mut FrameReport) -> Result<()> {
    let Some(mesh) = state.mesh.as_ref() else {
        return Ok(());
    };
    let mut mesh = mesh.clone();
    let guide = match &state.flip {
        Some(f) if f.coupled => {
            report.snapshots += 1;
            Some((f.snapshot(), f.zones(), f.coupling.alpha))
        }
        _ => None,
    };
    let dt_frame = state.dt_frame;
    let mut t = 0.0;
    while dt_frame - t > 1e-12 * dt_frame {
        let remaining = dt_frame - t;
        let dx_bem = mesh.min_edge;
        let vmax = mesh.max_speed();
        let mut dt = if vmax > 0.0 { (dx_bem / vmax).min(remaining) } else { remaining };
        if let Some((snap, zones, alpha)) = &guide {
            let free = free_vertices(&mesh);
            // the guided speed depends on the step; shrink until it fits
            let mut vel = guided_velocities(&mesh, snap, zones, &free, dt, dt_frame, *alpha);
            for _ in 0..8 {
                let vg = vel.iter().map(|v| v.norm()).fold(0.0, f64::max);
                if vg * dt <= dx_bem {
                    break;
                }
                dt = 0.95 * dx_bem / vg;
                vel = guided_velocities(&mesh, snap, zones, &free, dt, dt_frame, *alpha);
            }
            mesh.velocities = vel;
        }
        mesh = bem_substep(&mesh, dt, &state.gravity, state.rho, state.hd_mode)?;
        report.bem_substeps.push(dt);
        t += dt;
    }
    state.mesh = Some(mesh);
    Ok(())
}

fn fill_violations(particles: &ParticleSet, bem_phi: &LevelSet, zones: &ZoneMasks, params: &CouplingParams, radius: f64) -> usize {
    let mut counts = std::collections::HashMap::new();
    for x in &particles.positions {
        let c = zones.lattice.voxel_of(x);
        if zones.is_fill(c) {
            *counts.entry(c).or_insert(0usize) += 1;
        }
    }
    let threshold = -params.seed_depth_fraction * radius;
    zones
        .fill_voxels()
        .filter(|&c| bem_phi.sample(&zones.lattice.voxel_center(c)) < threshold)
        .filter(|c| {
            let n = counts.get(c).copied().unwrap_or(0);
            n < params.min_particles_per_voxel || n > params.max_particles_per_voxel
        })
        .count()
}

fn flip_phase(state: &mut FrameState, report: &mut FrameReport) -> Result<()> {
    let Some(f) = state.flip.as_mut() else {
        return Ok(());
    };
    let lat = f.lattice;
    let dx = lat.dx;
    let frame = state.frame as f64;
    let coupling = match (&state.mesh, f.coupled) {
        (Some(mesh), true) => {
            let d0 = f.domain_at(frame);
            let d1 = f.domain_at(frame + 1.0);
            let shift = (0..3).map(|a| (d1.lo[a] - d0.lo[a]).abs()).max().unwrap_or(0);
            let zones0 = ZoneMasks::new(lat, d0, &f.coupling);
            let band = build_narrowband_velocity(mesh, &zones0, &f.coupling, shift as f64 * dx)?;
            let reach = f.coupling.sink_zone_width.max(f.coupling.fill_zone_width) as i32 + 2 + shift;
            let bx = VoxelBox::new(
                [0, 1, 2].map(|a| d0.lo[a].min(d1.lo[a])),
                [0, 1, 2].map(|a| d0.hi[a].max(d1.hi[a])),
            )
            .expanded(reach);
            let phi = mesh_to_levelset_in_box(mesh, &lat, 4.0 * dx, &bx)?;
            Some((band, phi))
        }
        _ => None,
    };
    let g = state.gravity;
    let dt_frame = state.dt_frame;
    let mut t = 0.0;
    let mut sub = 0u64;
    while dt_frame - t > 1e-12 * dt_frame {
        let remaining = dt_frame - t;
        let speed = f.particles.max_speed() + (g.norm() * dx).sqrt();
        let dt = (f.params.cfl_max * dx / speed).min(remaining);
        f.domain = f.domain_at(frame + (t + dt) / dt_frame);
        let zones = f.zones();
        // Density control right after the domain moved, so the slab it
        // entered holds liquid before the pressure solve.
        if let Some((band, bem_phi)) = &coupling {
            let seed = f.seed ^ ((state.frame as u64) << 24 | sub);
            let r = update_fill_sink(&mut f.particles, bem_phi, &zones, band, &f.coupling, f.radius, seed)?;
            report.fill.sunk += r.sunk;
            report.fill.added += r.added;
            report.fill.trimmed += r.trimmed;
            report.fill_violations += fill_violations(&f.particles, bem_phi, &zones, &f.coupling, f.radius);
        }
        let (mut grid, phi) = particle_to_grid(&f.particles, &lat, f.radius, f.liquid_band());
        {
            let band = coupling.as_ref().map(|c| &c.0);
            let boundary = |x: &Vec3| band.and_then(|b| b.sample(x)).unwrap_or_else(Vec3::zeros);
            classify_cells(&mut grid, &phi, &f.domain, &f.container, &boundary);
        }
        let mut old: MacVelocityGrid = grid.clone();
        apply_body_force(&mut grid, &g, dt);
        let rep = pressure_project(&mut grid, &phi, &f.params, dt)?;
        report.max_rel_div = report.max_rel_div.max(rep.max_rel_div);
        extrapolate_velocity(&mut grid, EXTRAPOLATION_LAYERS);
        extrapolate_velocity(&mut old, EXTRAPOLATION_LAYERS);
        grid_to_particle(&mut f.particles, &grid, &old, f.params.flip_blend);
        advect_particles(&mut f.particles, &grid, dt, &f.container);
        report.flip_substeps.push(dt);
        t += dt;
        sub += 1;
    }
    Ok(())
}

/// Advances the state by one frame: the surface loop first, then the
/// particle-grid loop. On error the state is left at the frame start.
pub fn step_frame(state: &mut FrameState) -> Result<FrameReport> {
    let mut next = state.clone();
    let mut report = FrameReport::default();
    surface_phase(&mut next, &mut report)?;
    flip_phase(&mut next, &mut report)?;
    next.frame += 1;
    next.time += next.dt_frame;
    *state = next;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::mesh::box_tank;
    use crate::flip::{default_particle_radius, seed_particles};

    #[test]
    fn substep_schedule() {
        let dt_frame = 1.0 / 24.0;
        let dx = 0.05;
        let vmax = dx / (0.3 * dt_frame);
        let s = bem_substep_sizes(dx, vmax, dt_frame);
        assert_eq!(s.len(), 4);
        for (got, want) in s.iter().zip([0.3, 0.3, 0.3, 0.1]) {
            assert!((got / dt_frame - want).abs() < 1e-12, "{s:?}");
        }
        assert_eq!(bem_substep_sizes(dx, 0.0, dt_frame), vec![dt_frame]);
    }

    #[test]
    fn domain_motion_interpolates_and_snaps() {
        let m = DomainMotion {
            keyframes: vec![(0.0, Vec3::new(0.5, 0.5, 0.5)), (10.0, Vec3::new(1.5, 0.5, 0.5))],
        };
        assert_eq!(m.center_at(5.0).unwrap(), Vec3::new(1.0, 0.5, 0.5));
        assert_eq!(m.center_at(20.0).unwrap(), Vec3::new(1.5, 0.5, 0.5));
        assert_eq!(m.center_at(-1.0).unwrap(), Vec3::new(0.5, 0.5, 0.5));
        let f = FlipDomain {
            particles: ParticleSet::new(),
            lattice: Lattice::new(0.1, Vec3::zeros()),
            params: FlipParams::default(),
            coupling: CouplingParams::default(),
            container: Container::Open,
            domain: VoxelBox::new([0, 0, 0], [4, 4, 4]),
            motion: m,
            radius: 0.1,
            seed: 0,
            coupled: false,
        };
        assert_eq!(f.domain_at(0.0), VoxelBox::new([3, 3, 3], [7, 7, 7]));
        assert_eq!(f.domain_at(10.0), VoxelBox::new([13, 3, 3], [17, 7, 7]));
    }

    fn rest_state(gravity: Vec3) -> FrameState {
        let mesh = box_tank(Vec3::zeros(), (0.8, 0.4), 0.3, 0.1, |_, _| 0.0);
        let lat = Lattice::new(0.05, Vec3::zeros());
        let domain = VoxelBox::new([0, 0, 0], [8, 8, 8]);
        let params = FlipParams {
            gravity,
            ..FlipParams::default()
        };
        let particles = seed_particles(&lat, &domain, 2, 5, |x| x.y < 0.2, |_| Vec3::zeros());
        FrameState {
            frame: 0,
            time: 0.0,
            dt_frame: 1.0 / 24.0,
            gravity,
            rho: 1000.0,
            hd_mode: HdMode::Partial,
            mesh: Some(mesh),
            flip: Some(FlipDomain {
                particles,
                lattice: lat,
                params,
                coupling: CouplingParams::default(),
                container: Container::Box(BoxContainer {
                    min: Vec3::zeros(),
                    max: Vec3::new(0.4, 1.0, 0.4),
                }),
                domain,
                motion: DomainMotion::default(),
                radius: default_particle_radius(0.05),
                seed: 5,
                coupled: false,
            }),
        }
    }

    #[test]
    fn zero_velocity_zero_gravity_is_fixed_point() {
        let mut s = rest_state(Vec3::zeros());
        let before = s.clone();
        let rep = step_frame(&mut s).unwrap();
        assert_eq!(rep.bem_substeps, vec![s.dt_frame]);
        assert_eq!(s.mesh, before.mesh);
        assert_eq!(s.flip.as_ref().unwrap().particles, before.flip.as_ref().unwrap().particles);
        assert_eq!(s.frame, 1);
    }

    #[test]
    fn snapshot_taken_once_per_frame() {
        let mut s = rest_state(Vec3::zeros());
        s.flip.as_mut().unwrap().coupled = true;
        // tank surface at the particle surface; a fast rising surface forces
        // a short first substep
        let mut m = box_tank(Vec3::zeros(), (0.4, 0.4), 0.2, 0.1, |_, _| 0.0);
        let free = free_vertices(&m);
        let v = 2.5 * m.min_edge / s.dt_frame;
        for (i, vel) in m.velocities.iter_mut().enumerate() {
            if free[i] {
                *vel = Vec3::new(0.0, v, 0.0);
            }
        }
        s.mesh = Some(m);
        let rep = step_frame(&mut s).unwrap();
        assert!(rep.bem_substeps.len() >= 2, "{:?}", rep.bem_substeps);
        assert_eq!(rep.snapshots, 1);
    }
}
