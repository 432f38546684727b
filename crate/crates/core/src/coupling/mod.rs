//! Two-way coupling between the particle-grid domain and the surrounding
//! boundary-element surface: guided advection of surface vertices, boundary
//! integral velocities for the grid boundary, particle fill/sink zones and
//! the per-frame orchestration.

pub mod fill;
pub mod frame;
pub mod guided;
pub mod interp;

pub use fill::{update_fill_sink, FillReport};
pub use frame::{bem_substep, bem_substep_sizes, step_frame, Container, DomainMotion, FlipDomain, FrameReport, FrameState};
pub use guided::{guided_vertex_velocity, surface_crossing, FlipSnapshot};
pub use interp::{boundary_integral_velocity, build_narrowband_velocity, BandSample, NarrowBandVelocity};

use crate::grids::{Coord, Lattice, VoxelBox};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingParams {
    /// Sampling depth below the located surface, in voxels.
    pub alpha: f64,
    pub fill_zone_width: usize,
    pub sink_zone_width: usize,
    /// Band lattice spacing; `None` means four grid voxels.
    pub narrowband_dx: Option<f64>,
    /// New particles are seeded only this fraction of a particle radius
    /// below the surface.
    pub seed_depth_fraction: f64,
    pub min_particles_per_voxel: usize,
    pub max_particles_per_voxel: usize,
    pub dt_frame: f64,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            alpha: 3.0,
            fill_zone_width: 4,
            sink_zone_width: 4,
            narrowband_dx: None,
            seed_depth_fraction: 0.7,
            min_particles_per_voxel: 8,
            max_particles_per_voxel: 16,
            dt_frame: 1.0 / 24.0,
        }
    }
}

impl CouplingParams {
    pub fn band_dx(&self, dx_flip: f64) -> f64 {
        self.narrowband_dx.unwrap_or(4.0 * dx_flip)
    }

    pub fn check(&self, cfl_max: f64) -> Result<(), String> {
        if !(self.alpha >= 0.0) {
            return Err("alpha must be non-negative".into());
        }
        if (self.fill_zone_width as f64) < cfl_max || (self.sink_zone_width as f64) < cfl_max {
            return Err(format!("zone widths must be at least cfl_max = {cfl_max}"));
        }
        if !(self.seed_depth_fraction > 0.0 && self.seed_depth_fraction < 1.0) {
            return Err("seed_depth_fraction must lie in (0,1)".into());
        }
        if self.min_particles_per_voxel >= self.max_particles_per_voxel {
            return Err("min_particles_per_voxel must be below max_particles_per_voxel".into());
        }
        if !(self.dt_frame > 0.0) {
            return Err("dt_frame must be positive".into());
        }
        if let Some(h) = self.narrowband_dx {
            if !(h > 0.0) {
                return Err("narrowband_dx must be positive".into());
            }
        }
        Ok(())
    }
}

/// Fill ring (inside the domain box) and sink ring (outside it), in voxels
/// of the grid lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZoneMasks {
    pub lattice: Lattice,
    pub domain: VoxelBox,
    pub fill_width: i32,
    pub sink_width: i32,
}

impl ZoneMasks {
    pub fn new(lattice: Lattice, domain: VoxelBox, params: &CouplingParams) -> Self {
        Self {
            lattice,
            domain,
            fill_width: params.fill_zone_width as i32,
            sink_width: params.sink_zone_width as i32,
        }
    }

    pub fn is_fill(&self, c: Coord) -> bool {
        self.domain.contains(c) && !self.domain.expanded(-self.fill_width).contains(c)
    }

    pub fn is_sink(&self, c: Coord) -> bool {
        !self.domain.contains(c) && self.domain.expanded(self.sink_width).contains(c)
    }

    pub fn fill_voxels(&self) -> impl Iterator<Item = Coord> + '_ {
        self.domain.iter().filter(move |&c| self.is_fill(c))
    }

    pub fn sink_voxels(&self) -> Vec<Coord> {
        self.domain.expanded(self.sink_width).iter().filter(|&c| self.is_sink(c)).collect()
    }

    pub fn world_min(&self) -> Vec3 {
        self.domain.world_min(&self.lattice)
    }

    pub fn world_max(&self) -> Vec3 {
        self.domain.world_max(&self.lattice)
    }

    /// Weight of the grid guidance at `x`: 0 outside the domain footprint,
    /// rising linearly across the fill ring to 1 over the interior.
    pub fn guidance_weight(&self, x: &Vec3) -> f64 {
        let (lo, hi) = (self.world_min(), self.world_max());
        let d = (x.x - lo.x).min(hi.x - x.x).min(x.z - lo.z).min(hi.z - x.z);
        let w = self.fill_width.max(1) as f64 * self.lattice.dx;
        (d / w).clamp(0.0, 1.0)
    }

    /// True if `x` lies over the domain footprint in the horizontal plane.
    pub fn covers_xz(&self, x: &Vec3) -> bool {
        let (lo, hi) = (self.world_min(), self.world_max());
        x.x >= lo.x && x.x <= hi.x && x.z >= lo.z && x.z <= hi.z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zones_are_disjoint_rings() {
        let lat = Lattice::new(0.1, Vec3::zeros());
        let z = ZoneMasks::new(lat, VoxelBox::new([0, 0, 0], [12, 10, 12]), &CouplingParams::default());
        let fill: Vec<Coord> = z.fill_voxels().collect();
        let sink = z.sink_voxels();
        assert_eq!(fill.len(), 12 * 10 * 12 - 4 * 2 * 4);
        assert_eq!(sink.len(), 20 * 18 * 20 - 12 * 10 * 12);
        assert!(fill.iter().all(|&c| !z.is_sink(c)));
        assert!(z.is_fill([0, 5, 5]) && !z.is_fill([5, 5, 5]));
        assert!(z.is_sink([-4, 5, 5]) && !z.is_sink([-5, 5, 5]));
    }

    #[test]
    fn params_invariants() {
        let p = CouplingParams::default();
        p.check(4.0).unwrap();
        assert!(p.check(5.0).is_err());
        let mut q = p.clone();
        q.min_particles_per_voxel = 16;
        assert!(q.check(1.0).is_err());
        assert_eq!(p.band_dx(0.01), 0.04);
    }
}
