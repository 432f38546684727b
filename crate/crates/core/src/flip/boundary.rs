use crate::grids::{offset, CellFlag, Coord, Lattice, LevelSet, MacVelocityGrid, VoxelBox};
use crate::Vec3;

/// Static or moving solid geometry described by a signed distance that is
/// positive where liquid may flow.
pub trait Solid: Sync {
    fn phi(&self, x: &Vec3) -> f64;

    fn velocity(&self, _x: &Vec3) -> Vec3 {
        Vec3::zeros()
    }

    fn gradient(&self, x: &Vec3) -> Vec3 {
        let h = 1e-6;
        let mut g = Vec3::zeros();
        for a in 0..3 {
            let mut e = Vec3::zeros();
            e[a] = h;
            g[a] = (self.phi(&(x + e)) - self.phi(&(x - e))) / (2.0 * h);
        }
        g
    }
}

/// No solid anywhere.
pub struct NoSolid;

impl Solid for NoSolid {
    fn phi(&self, _x: &Vec3) -> f64 {
        1e30
    }

    fn gradient(&self, _x: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// Open-top rectangular tank; liquid lives inside `[min, max]` in x and z
/// and above `min.y`.
#[derive(Clone, Copy, Debug)]
pub struct BoxContainer {
    pub min: Vec3,
    pub max: Vec3,
}

impl Solid for BoxContainer {
    fn phi(&self, x: &Vec3) -> f64 {
        let inner = (x.x - self.min.x)
            .min(self.max.x - x.x)
            .min(x.y - self.min.y)
            .min(x.z - self.min.z)
            .min(self.max.z - x.z);
        if inner >= 0.0 {
            return inner;
        }
        // exact outside distance to the open box
        let dxv = (self.min.x - x.x).max(x.x - self.max.x).max(0.0);
        let dy = (self.min.y - x.y).max(0.0);
        let dz = (self.min.z - x.z).max(0.0);
        -(dxv * dxv + dy * dy + dz * dz).sqrt()
    }
}

/// Open-top vertical cylinder.
#[derive(Clone, Copy, Debug)]
pub struct CylinderContainer {
    pub center_xz: (f64, f64),
    pub radius: f64,
    pub floor_y: f64,
}

impl Solid for CylinderContainer {
    fn phi(&self, x: &Vec3) -> f64 {
        let r = ((x.x - self.center_xz.0).powi(2) + (x.z - self.center_xz.1).powi(2)).sqrt();
        let side = self.radius - r;
        let floor = x.y - self.floor_y;
        if side >= 0.0 || floor >= 0.0 {
            return side.min(floor);
        }
        -(side * side + floor * floor).sqrt()
    }
}

/// Area fraction of a triangle where a linear field with corner values
/// `a, b, c` is negative.
fn triangle_fraction_negative(v: [f64; 3]) -> f64 {
    let neg = v.iter().filter(|&&x| x < 0.0).count();
    match neg {
        0 => 0.0,
        3 => 1.0,
        1 => {
            let i = (0..3).find(|&i| v[i] < 0.0).unwrap();
            let (a, b, c) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
            a * a / ((a - b) * (a - c))
        }
        _ => {
            let i = (0..3).find(|&i| v[i] >= 0.0).unwrap();
            let (a, b, c) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
            1.0 - a * a / ((a - b) * (a - c))
        }
    }
}

/// Fraction of a square face whose corner values are given counter-clockwise
/// that lies where the field is negative. The square is split into four
/// triangles around the averaged center value.
pub fn face_fraction_negative(corners: [f64; 4]) -> f64 {
    let mid = 0.25 * corners.iter().sum::<f64>();
    (0..4)
        .map(|i| triangle_fraction_negative([corners[i], corners[(i + 1) % 4], mid]))
        .sum::<f64>()
        / 4.0
}

fn face_corners(lattice: &Lattice, axis: usize, c: Coord) -> [Vec3; 4] {
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let n0 = lattice.node(c);
    let mut eu = Vec3::zeros();
    let mut ev = Vec3::zeros();
    eu[u] = lattice.dx;
    ev[v] = lattice.dx;
    [n0, n0 + eu, n0 + eu + ev, n0 + ev]
}

/// Sets voxel flags and face solid data for the voxels of `domain`.
///
/// Voxels outside `domain` (one-voxel ring) and voxels whose center is inside
/// the solid are SOLID; the rest are LIQUID where `liquid` is negative and
/// AIR otherwise. Faces touching a SOLID voxel are fully closed with the
/// prescribed velocity: `boundary_velocity` on the domain boundary, the
/// solid's own velocity elsewhere. Other faces get the cut-cell solid
/// fraction from the solid distance at their corners.
pub fn classify_cells(
    grid: &mut MacVelocityGrid,
    liquid: &LevelSet,
    domain: &VoxelBox,
    solid: &dyn Solid,
    boundary_velocity: &dyn Fn(&Vec3) -> Vec3,
) {
    let lat = grid.lattice;
    grid.flags = crate::grids::BlockGrid::new(CellFlag::Air);
    for a in 0..3 {
        grid.solid_frac[a] = crate::grids::BlockGrid::new(0.0);
        grid.solid_vel[a] = crate::grids::BlockGrid::new(0.0);
    }
    for c in domain.expanded(1).iter() {
        let f = if !domain.contains(c) || solid.phi(&lat.voxel_center(c)) < 0.0 {
            CellFlag::Solid
        } else if liquid.value(c) < 0.0 {
            CellFlag::Liquid
        } else {
            CellFlag::Air
        };
        grid.flags.set(c, f);
    }
    for a in 0..3 {
        let mut hi = domain.hi;
        hi[a] += 1;
        for c in VoxelBox::new(domain.lo, hi).iter() {
            let lo_n = offset(c, a, -1);
            let x = lat.face_center(a, c);
            if !domain.contains(c) || !domain.contains(lo_n) {
                grid.set_solid(a, c, 1.0, boundary_velocity(&x)[a]);
                continue;
            }
            if grid.flag(c) == CellFlag::Solid || grid.flag(lo_n) == CellFlag::Solid {
                grid.set_solid(a, c, 1.0, solid.velocity(&x)[a]);
                continue;
            }
            let corners = face_corners(&lat, a, c).map(|p| solid.phi(&p));
            let f = face_fraction_negative(corners);
            if f > 0.0 {
                grid.set_solid(a, c, f, solid.velocity(&x)[a]);
            }
        }
    }
}

/// Moves particles that ended inside the solid back to its surface along
/// the distance gradient, with a small margin.
pub fn project_out_of_solid(x: &mut Vec3, solid: &dyn Solid, margin: f64) {
    for _ in 0..3 {
        let p = solid.phi(x);
        if p >= margin {
            return;
        }
        let g = solid.gradient(x);
        let gn = g.norm();
        if gn < 1e-12 {
            return;
        }
        *x += g / gn * (margin - p);
    }
}
