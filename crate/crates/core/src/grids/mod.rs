//! Uniform-lattice fields: sparse level sets, staggered velocity grids,
//! sampling, smoothing and conversions from particles and meshes.

pub mod block;
pub mod io;
pub mod levelset;
pub mod mac;
pub mod mesh_sdf;

pub use block::{BlockGrid, Coord};
pub use levelset::{gaussian_smooth, rebuild_levelset_from_particles, LevelSet};
pub use mac::{CellFlag, MacVelocityGrid};
pub use mesh_sdf::{mesh_to_levelset, mesh_to_levelset_in_box};

use crate::Vec3;

/// Placement of the voxel lattice in world space. Voxel `(i,j,k)` spans
/// `origin + dx*[i,i+1) x [j,j+1) x [k,k+1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub dx: f64,
    pub origin: Vec3,
}

impl Lattice {
    pub fn new(dx: f64, origin: Vec3) -> Self {
        assert!(dx > 0.0, "voxel size must be positive");
        Self { dx, origin }
    }

    #[inline]
    pub fn voxel_center(&self, c: Coord) -> Vec3 {
        self.origin
            + Vec3::new(
                (c[0] as f64 + 0.5) * self.dx,
                (c[1] as f64 + 0.5) * self.dx,
                (c[2] as f64 + 0.5) * self.dx,
            )
    }

    #[inline]
    pub fn voxel_of(&self, x: &Vec3) -> Coord {
        let s = (x - self.origin) / self.dx;
        [s.x.floor() as i32, s.y.floor() as i32, s.z.floor() as i32]
    }

    /// Center of the low face of voxel `c` normal to `axis`.
    #[inline]
    pub fn face_center(&self, axis: usize, c: Coord) -> Vec3 {
        let mut p = self.voxel_center(c);
        p[axis] -= 0.5 * self.dx;
        p
    }

    /// Lattice node (voxel corner) `c`.
    #[inline]
    pub fn node(&self, c: Coord) -> Vec3 {
        self.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * self.dx
    }
}

/// Half-open voxel box `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VoxelBox {
    pub lo: Coord,
    pub hi: Coord,
}

impl VoxelBox {
    pub fn new(lo: Coord, hi: Coord) -> Self {
        Self { lo, hi }
    }

    #[inline]
    pub fn contains(&self, c: Coord) -> bool {
        (0..3).all(|a| c[a] >= self.lo[a] && c[a] < self.hi[a])
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            (self.hi[0] - self.lo[0]).max(0) as usize,
            (self.hi[1] - self.lo[1]).max(0) as usize,
            (self.hi[2] - self.lo[2]).max(0) as usize,
        ]
    }

    pub fn volume(&self) -> usize {
        let d = self.dims();
        d[0] * d[1] * d[2]
    }

    pub fn expanded(&self, n: i32) -> Self {
        Self {
            lo: [self.lo[0] - n, self.lo[1] - n, self.lo[2] - n],
            hi: [self.hi[0] + n, self.hi[1] + n, self.hi[2] + n],
        }
    }

    pub fn translated(&self, d: Coord) -> Self {
        Self {
            lo: [self.lo[0] + d[0], self.lo[1] + d[1], self.lo[2] + d[2]],
            hi: [self.hi[0] + d[0], self.hi[1] + d[1], self.hi[2] + d[2]],
        }
    }

    /// Linear index inside the box, x fastest.
    #[inline]
    pub fn index(&self, c: Coord) -> usize {
        let d = self.dims();
        (((c[2] - self.lo[2]) as usize * d[1]) + (c[1] - self.lo[1]) as usize) * d[0]
            + (c[0] - self.lo[0]) as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = Coord> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (lo[2]..hi[2]).flat_map(move |k| {
            (lo[1]..hi[1]).flat_map(move |j| (lo[0]..hi[0]).map(move |i| [i, j, k]))
        })
    }

    /// Smallest box holding the voxels overlapped by a world-space AABB.
    pub fn covering(lattice: &Lattice, min: &Vec3, max: &Vec3) -> Self {
        let lo = lattice.voxel_of(min);
        let s = (max - lattice.origin) / lattice.dx;
        let hi = [
            s.x.ceil() as i32,
            s.y.ceil() as i32,
            s.z.ceil() as i32,
        ];
        Self { lo, hi }
    }

    pub fn world_min(&self, lattice: &Lattice) -> Vec3 {
        lattice.node(self.lo)
    }

    pub fn world_max(&self, lattice: &Lattice) -> Vec3 {
        lattice.node(self.hi)
    }
}

#[inline]
pub(crate) fn offset(c: Coord, axis: usize, d: i32) -> Coord {
    let mut o = c;
    o[axis] += d;
    o
}
