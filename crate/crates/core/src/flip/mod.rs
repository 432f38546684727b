//! Particle-grid liquid solver: transfers, advection, body forces and a
//! pressure projection with cut-cell walls and ghost-fluid free surfaces.

pub mod boundary;
pub mod extrapolate;
pub mod mg;
pub mod ply;
pub mod pressure;
pub mod transfer;

pub use boundary::{classify_cells, BoxContainer, CylinderContainer, NoSolid, Solid};
pub use extrapolate::extrapolate_velocity;
pub use pressure::{build_pressure_system, max_relative_divergence, pressure_project, project_velocity, solve_pressure, PressureSystem, ProjectionReport};
pub use transfer::{advect_particles, apply_body_force, grid_to_particle, particle_to_grid};

use crate::Vec3;

/// Default particle ball radius: 1.01 times half the voxel diagonal.
pub fn default_particle_radius(dx: f64) -> f64 {
    1.01 * 0.5 * 3f64.sqrt() * dx
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParticleSet {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

impl ParticleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn push(&mut self, x: Vec3, v: Vec3) {
        self.positions.push(x);
        self.velocities.push(v);
    }

    /// Keeps the particles for which `keep(index)` holds, preserving order.
    pub fn retain_indices(&mut self, mut keep: impl FnMut(usize) -> bool) {
        let mut w = 0;
        for r in 0..self.len() {
            if keep(r) {
                self.positions[w] = self.positions[r];
                self.velocities[w] = self.velocities[r];
                w += 1;
            }
        }
        self.positions.truncate(w);
        self.velocities.truncate(w);
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlipParams {
    pub flip_blend: f64,
    pub cfl_max: f64,
    pub particles_per_voxel_target: usize,
    pub gravity: Vec3,
    pub rho: f64,
    pub friction_mu: f64,
    pub pressure_tol: f64,
    pub max_cg_iters: usize,
}

impl Default for FlipParams {
    fn default() -> Self {
        Self {
            flip_blend: 0.95,
            cfl_max: 1.0,
            particles_per_voxel_target: 8,
            gravity: Vec3::new(0.0, -9.81, 0.0),
            rho: 1000.0,
            friction_mu: 0.8,
            pressure_tol: 1e-7,
            max_cg_iters: 400,
        }
    }
}

impl FlipParams {
    pub fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.flip_blend) {
            return Err(format!("flip_blend {} outside [0,1]", self.flip_blend));
        }
        if !(self.cfl_max > 0.0) {
            return Err("cfl_max must be positive".into());
        }
        if !(self.pressure_tol > 0.0) {
            return Err("pressure_tol must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.friction_mu) {
            return Err("friction_mu outside [0,1]".into());
        }
        if !(self.rho > 0.0) {
            return Err("rho must be positive".into());
        }
        Ok(())
    }
}

/// Seeds a jittered `per_axis^3` particle grid in every voxel of `bx`,
/// keeping the particles that satisfy `inside`.
pub fn seed_particles(
    lattice: &crate::grids::Lattice,
    bx: &crate::grids::VoxelBox,
    per_axis: usize,
    seed: u64,
    inside: impl Fn(&Vec3) -> bool,
    velocity: impl Fn(&Vec3) -> Vec3,
) -> ParticleSet {
    use rand::{Rng, SeedableRng};
    let mut ps = ParticleSet::new();
    let dx = lattice.dx;
    let h = dx / per_axis as f64;
    for c in bx.iter() {
        let base = lattice.node(c);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(voxel_seed(seed, c));
        for k in 0..per_axis {
            for j in 0..per_axis {
                for i in 0..per_axis {
                    let jit = Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
                    let p = base + Vec3::new(
                        (i as f64 + 0.25 + 0.5 * jit.x) * h,
                        (j as f64 + 0.25 + 0.5 * jit.y) * h,
                        (k as f64 + 0.25 + 0.5 * jit.z) * h,
                    );
                    if inside(&p) {
                        ps.push(p, velocity(&p));
                    }
                }
            }
        }
    }
    ps
}

/// Per-voxel RNG stream seed (splitmix64 over the seed and voxel index).
pub fn voxel_seed(seed: u64, c: crate::grids::Coord) -> u64 {
    let mut z = seed
        ^ (c[0] as u32 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (c[1] as u32 as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (c[2] as u32 as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_at_one_centimetre() {
        assert!((default_particle_radius(0.01) - 0.008747).abs() < 5e-7);
    }

    #[test]
    fn retain_keeps_order() {
        let mut ps = ParticleSet::new();
        for i in 0..6 {
            ps.push(Vec3::repeat(i as f64), Vec3::zeros());
        }
        ps.retain_indices(|i| i % 2 == 1);
        assert_eq!(ps.positions, vec![Vec3::repeat(1.0), Vec3::repeat(3.0), Vec3::repeat(5.0)]);
    }

    #[test]
    fn params_defaults_valid() {
        let p = FlipParams::default();
        p.check().unwrap();
        assert_eq!(p.flip_blend, 0.95);
        assert_eq!(p.friction_mu, 0.8);
    }
}
