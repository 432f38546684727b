//! Particle removal outside the domain and density control in the fill ring.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CouplingParams, NarrowBandVelocity, ZoneMasks};
use crate::flip::{voxel_seed, ParticleSet};
use crate::grids::{Coord, LevelSet};
use crate::{Error, Result, Vec3};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FillReport {
    pub sunk: usize,
    pub added: usize,
    pub trimmed: usize,
}

/// Applies the sink and fill rules for one substep.
///
/// Particles in the sink ring above the seeding threshold
/// (`phi_bem > -seed_depth_fraction * radius`) are removed; so is every
/// other particle that has left the domain box, since the grid cannot carry
/// it. Fill-ring voxels reaching below the threshold are topped up to the
/// minimum count with uniformly random in-voxel positions that lie below it,
/// taking velocities from the band; fill voxels above the maximum lose their
/// highest-index particles.
pub fn update_fill_sink(
    particles: &mut ParticleSet,
    bem_phi: &LevelSet,
    zones: &ZoneMasks,
    band: &NarrowBandVelocity,
    params: &CouplingParams,
    radius: f64,
    seed: u64,
) -> Result<FillReport> {
    let lat = zones.lattice;
    let threshold = -params.seed_depth_fraction * radius;
    let mut report = FillReport::default();

    let before = particles.len();
    let positions = particles.positions.clone();
    particles.retain_indices(|i| zones.domain.contains(lat.voxel_of(&positions[i])));
    report.sunk = before - particles.len();

    let mut per_voxel: BTreeMap<Coord, Vec<usize>> = BTreeMap::new();
    for (i, x) in particles.positions.iter().enumerate() {
        let c = lat.voxel_of(x);
        if zones.is_fill(c) {
            per_voxel.entry(c).or_default().push(i);
        }
    }

    let mut drop = vec![false; particles.len()];
    let mut new_particles = ParticleSet::new();
    for c in zones.fill_voxels() {
        let members = per_voxel.get(&c).map(Vec::as_slice).unwrap_or(&[]);
        let count = members.len();
        if count > params.max_particles_per_voxel {
            for &i in &members[params.max_particles_per_voxel..] {
                drop[i] = true;
            }
            report.trimmed += count - params.max_particles_per_voxel;
            continue;
        }
        // No point of the voxel can lie below the threshold.
        let half_diagonal = 0.5 * 3f64.sqrt() * lat.dx;
        if count >= params.min_particles_per_voxel || bem_phi.sample(&lat.voxel_center(c)) - half_diagonal >= threshold {
            continue;
        }
        let need = params.min_particles_per_voxel - count;
        let mut rng = ChaCha8Rng::seed_from_u64(voxel_seed(seed, c));
        let base = lat.node(c);
        let mut made = 0;
        for _ in 0..64 * need {
            if made == need {
                break;
            }
            let p = base + Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()) * lat.dx;
            if bem_phi.sample(&p) >= threshold {
                continue;
            }
            let v = band.sample(&p).ok_or(Error::CoverageGap(c))?;
            new_particles.push(p, v);
            made += 1;
        }
        report.added += made;
    }
    particles.retain_indices(|i| !drop[i]);
    particles.positions.extend(new_particles.positions);
    particles.velocities.extend(new_particles.velocities);
    Ok(report)
}
