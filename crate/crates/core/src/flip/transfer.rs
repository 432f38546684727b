use rayon::prelude::*;

use super::boundary::{project_out_of_solid, Solid};
use super::ParticleSet;
use crate::grids::mac::snap;
use crate::grids::{rebuild_levelset_from_particles, BlockGrid, Lattice, LevelSet, MacVelocityGrid};
use crate::Vec3;

/// Trilinear weights of `x` on the face lattice of `axis`: base face index
/// and the eight `(offset, weight)` pairs.
#[inline]
pub(crate) fn face_weights(lattice: &Lattice, axis: usize, x: &Vec3) -> ([i32; 3], [f64; 3]) {
    let mut s = (x - lattice.origin) / lattice.dx - Vec3::repeat(0.5);
    s[axis] += 0.5;
    snap(&mut s);
    let i0 = [s.x.floor(), s.y.floor(), s.z.floor()];
    (
        [i0[0] as i32, i0[1] as i32, i0[2] as i32],
        [s.x - i0[0], s.y - i0[1], s.z - i0[2]],
    )
}

/// Scatters particle velocities to the staggered faces with trilinear
/// weights, normalized by the accumulated weight, and builds the particle
/// union level set. Faces that receive no weight are not stored.
pub fn particle_to_grid(
    particles: &ParticleSet,
    lattice: &Lattice,
    radius: f64,
    bandwidth: f64,
) -> (MacVelocityGrid, LevelSet) {
    let mut grid = MacVelocityGrid::new(*lattice);
    for a in 0..3 {
        let mut num: BlockGrid<f64> = BlockGrid::new(0.0);
        let mut den: BlockGrid<f64> = BlockGrid::new(0.0);
        for (x, v) in particles.positions.iter().zip(&particles.velocities) {
            let (b, f) = face_weights(lattice, a, x);
            for dk in 0..2 {
                let wz = if dk == 0 { 1.0 - f[2] } else { f[2] };
                for dj in 0..2 {
                    let wy = if dj == 0 { 1.0 - f[1] } else { f[1] };
                    for di in 0..2 {
                        let wx = if di == 0 { 1.0 - f[0] } else { f[0] };
                        let w = wx * wy * wz;
                        if w == 0.0 {
                            continue;
                        }
                        let c = [b[0] + di, b[1] + dj, b[2] + dk];
                        match den.get_mut(c) {
                            Some(d) => {
                                *d += w;
                                *num.get_mut(c).unwrap() += w * v[a];
                            }
                            None => {
                                den.set(c, w);
                                num.set(c, w * v[a]);
                            }
                        }
                    }
                }
            }
        }
        for (c, d) in den.iter() {
            if d > 0.0 {
                grid.u[a].set(c, num.value(c) / d);
            }
        }
    }
    let phi = rebuild_levelset_from_particles(&particles.positions, lattice, radius, bandwidth);
    (grid, phi)
}

/// FLIP/PIC blend: `v <- b (v + u_new - u_old) + (1 - b) u_new`, with both
/// grids sampled trilinearly at the particle.
pub fn grid_to_particle(particles: &mut ParticleSet, grid_new: &MacVelocityGrid, grid_old: &MacVelocityGrid, flip_blend: f64) {
    particles
        .positions
        .par_iter()
        .zip(particles.velocities.par_iter_mut())
        .for_each(|(x, v)| {
            let un = grid_new.sample_trilinear(x);
            let uo = grid_old.sample_trilinear(x);
            *v = flip_blend * (*v + (un - uo)) + (1.0 - flip_blend) * un;
        });
}

/// Midpoint (RK2) advection through the grid velocity; particles that end
/// inside the solid are moved back to its surface.
pub fn advect_particles(particles: &mut ParticleSet, grid: &MacVelocityGrid, dt: f64, solid: &dyn Solid) {
    let margin = 1e-3 * grid.dx();
    particles.positions.par_iter_mut().for_each(|x| {
        let k1 = grid.sample_trilinear(x);
        let mid = *x + 0.5 * dt * k1;
        let k2 = grid.sample_trilinear(&mid);
        *x += dt * k2;
        project_out_of_solid(x, solid, margin);
    });
}

/// Adds `g dt` to every stored face component.
pub fn apply_body_force(grid: &mut MacVelocityGrid, g: &Vec3, dt: f64) {
    for a in 0..3 {
        let inc = g[a] * dt;
        if inc == 0.0 {
            continue;
        }
        for c in grid.u[a].coords() {
            *grid.u[a].get_mut(c).unwrap() += inc;
        }
    }
}
