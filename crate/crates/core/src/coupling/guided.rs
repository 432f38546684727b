//! Guided advection: surface vertices over the grid domain move toward the
//! smoothed particle surface with the particle-grid velocity.

use crate::grids::{Lattice, LevelSet, MacVelocityGrid, VoxelBox};
use crate::Vec3;

/// Frame-start data of the grid solver used to guide the surface.
#[derive(Clone, Debug)]
pub struct FlipSnapshot {
    /// Smoothed liquid signed distance.
    pub phi: LevelSet,
    pub grid: MacVelocityGrid,
    /// Vertical extent of the grid domain (world y).
    pub y_range: (f64, f64),
    /// Added to `phi` before locating the surface. Particles are seeded a
    /// fraction of their radius below the surface, so the union of their
    /// balls overshoots it by the rest of the radius.
    pub offset: f64,
}

/// First upward crossing from liquid to air along the vertical line through
/// `x0`, marching in half-voxel steps from the domain floor. If the march
/// starts in air it first scans for liquid further up the column.
pub fn surface_crossing(x0: &Vec3, snap: &FlipSnapshot) -> Option<Vec3> {
    let h = 0.5 * snap.phi.dx();
    let (y0, y1) = snap.y_range;
    let n = ((y1 - y0) / h).ceil() as usize;
    let at = |y: f64| Vec3::new(x0.x, y, x0.z);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let y = (y0 + i as f64 * h).min(y1);
        let p = snap.phi.sample(&at(y)) + snap.offset;
        if let Some((ya, pa)) = prev {
            if pa < 0.0 && p >= 0.0 {
                let t = pa / (pa - p);
                return Some(at(ya + t * (y - ya)));
            }
        }
        prev = Some((y, p));
    }
    None
}

/// Guided vertex velocity.
///
/// `x1` is the surface point above or below `x0`; the grid velocity is read
/// `alpha` voxels beneath it. The displacement toward `x2 = x1 + dt_frame v`
/// is clamped to the length of the vertex's own step, averaged with the
/// step taken at the grid velocity, and converted back to a velocity. When
/// no surface crossing exists the vertex velocity is returned unchanged.
pub fn guided_vertex_velocity(
    x0: &Vec3,
    v_bem: &Vec3,
    snap: &FlipSnapshot,
    dt_bem: f64,
    dt_frame: f64,
    alpha: f64,
) -> Vec3 {
    let Some(x1) = surface_crossing(x0, snap) else {
        return *v_bem;
    };
    let xs = x1 - Vec3::new(0.0, alpha * snap.phi.dx(), 0.0);
    let v_flip = snap.grid.sample_trilinear(&xs);
    let x2 = x1 + v_flip * dt_frame;
    let x3 = x0 + v_bem * dt_bem;
    let d2 = x2 - x0;
    let l2 = d2.norm();
    let x4 = if l2 > 0.0 {
        x0 + d2 * (l2.min((x3 - x0).norm()) / l2)
    } else {
        *x0
    };
    let x5 = x0 + v_flip * dt_bem;
    let xf = (x4 + x5) * 0.5;
    (xf - x0) / dt_bem
}

/// Still plane `y = h` over a unit column of 0.1 m voxels, with a uniform
/// grid velocity `u`. Used by the self-checks of the guidance step.
pub fn planar_snapshot(h: f64, u: Vec3) -> FlipSnapshot {
    let lat = Lattice::new(0.1, Vec3::zeros());
    let mut phi = LevelSet::new(lat, 0.5);
    let bx = VoxelBox::new([-2, -2, -2], [12, 12, 12]);
    for c in bx.iter() {
        phi.set(c, lat.voxel_center(c).y - h);
    }
    let mut grid = MacVelocityGrid::new(lat);
    for a in 0..3 {
        for c in bx.expanded(1).iter() {
            grid.set_face(a, c, u[a]);
        }
    }
    FlipSnapshot {
        phi,
        grid,
        y_range: (0.0, 1.0),
        offset: 0.0,
    }
}
