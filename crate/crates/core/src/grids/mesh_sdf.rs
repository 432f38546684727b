use super::{Lattice, LevelSet, VoxelBox};
use crate::bem::SurfaceMesh;
use crate::geom::point_triangle_distance;
use crate::{Result, Vec3};

/// Signed distance to a closed mesh over the voxels of its bounding box
/// (padded by the band). See [`mesh_to_levelset_in_box`].
pub fn mesh_to_levelset(mesh: &SurfaceMesh, lattice: &Lattice, bandwidth: f64) -> Result<LevelSet> {
    let (lo, hi) = mesh.bounds();
    let pad = Vec3::repeat(bandwidth + lattice.dx);
    let bx = VoxelBox::covering(lattice, &(lo - pad), &(hi + pad));
    mesh_to_levelset_in_box(mesh, lattice, bandwidth, &bx)
}

/// Signed distance to a closed mesh restricted to the voxels of `bx`.
///
/// Distances are exact point-to-triangle values within `bandwidth`. The sign
/// is the winding number of the surface, accumulated along vertical voxel
/// columns from signed ray crossings. Inside voxels beyond the band are
/// stored as `-bandwidth`; outside voxels beyond the band are left empty.
pub fn mesh_to_levelset_in_box(
    mesh: &SurfaceMesh,
    lattice: &Lattice,
    bandwidth: f64,
    bx: &VoxelBox,
) -> Result<LevelSet> {
    mesh.validate()?;
    let mut ls = LevelSet::new(*lattice, bandwidth);
    if bx.volume() == 0 {
        return Ok(ls);
    }
    let dims = bx.dims();
    let mut dist = vec![f64::INFINITY; bx.volume()];
    let pad = Vec3::repeat(bandwidth);
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.corners(t);
        let tlo = a.inf(b).inf(c) - pad;
        let thi = a.sup(b).sup(c) + pad;
        let cov = VoxelBox::covering(lattice, &tlo, &thi);
        let lo = [0, 1, 2].map(|k| cov.lo[k].max(bx.lo[k]));
        let hi = [0, 1, 2].map(|k| (cov.hi[k] + 1).min(bx.hi[k]));
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    let v = [i, j, k];
                    let d = point_triangle_distance(&lattice.voxel_center(v), a, b, c);
                    let idx = bx.index(v);
                    if d < dist[idx] {
                        dist[idx] = d;
                    }
                }
            }
        }
    }

    let winding = column_winding(mesh, lattice, bx);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let idx = i + dims[0] * (j + dims[1] * k);
                let c = [bx.lo[0] + i as i32, bx.lo[1] + j as i32, bx.lo[2] + k as i32];
                let d = dist[idx].min(bandwidth);
                if winding[idx] {
                    ls.set(c, -d);
                } else if d < bandwidth {
                    ls.set(c, d);
                }
            }
        }
    }
    Ok(ls)
}

/// Inside/outside flag for every voxel of `bx`, from upward ray crossings
/// along each voxel column. Columns are nudged by a tiny irrational offset so
/// they miss mesh edges and vertices that sit on lattice lines.
fn column_winding(mesh: &SurfaceMesh, lattice: &Lattice, bx: &VoxelBox) -> Vec<bool> {
    let dims = bx.dims();
    let dx = lattice.dx;
    let nudge = (dx * 1.0e-7 * std::f64::consts::SQRT_2, dx * 1.0e-7 * std::f64::consts::E);
    let ncol = dims[0] * dims[2];
    // bucket triangles by the columns their xz footprint covers
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); ncol];
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.corners(t);
        let lo = a.inf(b).inf(c);
        let hi = a.sup(b).sup(c);
        let i0 = (((lo.x - lattice.origin.x) / dx - 0.5).floor() as i32).max(bx.lo[0]);
        let i1 = (((hi.x - lattice.origin.x) / dx - 0.5).ceil() as i32).min(bx.hi[0] - 1);
        let k0 = (((lo.z - lattice.origin.z) / dx - 0.5).floor() as i32).max(bx.lo[2]);
        let k1 = (((hi.z - lattice.origin.z) / dx - 0.5).ceil() as i32).min(bx.hi[2] - 1);
        for k in k0..=k1 {
            for i in i0..=i1 {
                buckets[(k - bx.lo[2]) as usize * dims[0] + (i - bx.lo[0]) as usize].push(t);
            }
        }
    }
    let mut out = vec![false; bx.volume()];
    let mut hits: Vec<(f64, i32)> = Vec::new();
    for kk in 0..dims[2] {
        for ii in 0..dims[0] {
            let col = kk * dims[0] + ii;
            if buckets[col].is_empty() {
                continue;
            }
            let c = lattice.voxel_center([bx.lo[0] + ii as i32, 0, bx.lo[2] + kk as i32]);
            let (px, pz) = (c.x + nudge.0, c.z + nudge.1);
            hits.clear();
            for &t in &buckets[col] {
                if let Some(h) = vertical_crossing(mesh, t, px, pz) {
                    hits.push(h);
                }
            }
            if hits.is_empty() {
                continue;
            }
            hits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            // winding at y = sum of crossing signs above y
            let mut above: i32 = hits.iter().map(|h| h.1).sum();
            let mut h = 0;
            for jj in 0..dims[1] {
                let y = lattice.voxel_center([0, bx.lo[1] + jj as i32, 0]).y;
                while h < hits.len() && hits[h].0 <= y {
                    above -= hits[h].1;
                    h += 1;
                }
                if above > 0 {
                    out[ii + dims[0] * (jj + dims[1] * kk)] = true;
                }
            }
        }
    }
    out
}

/// Height and orientation sign where the vertical line through `(px, pz)`
/// crosses triangle `t`.
fn vertical_crossing(mesh: &SurfaceMesh, t: usize, px: f64, pz: f64) -> Option<(f64, i32)> {
    let [a, b, c] = mesh.corners(t);
    // 2D barycentrics in the xz plane
    let d = (b.z - a.z) * (c.x - a.x) - (b.x - a.x) * (c.z - a.z);
    if d == 0.0 {
        return None;
    }
    let l1 = ((pz - a.z) * (c.x - a.x) - (px - a.x) * (c.z - a.z)) / d;
    let l2 = ((b.z - a.z) * (px - a.x) - (b.x - a.x) * (pz - a.z)) / d;
    let l0 = 1.0 - l1 - l2;
    if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
        return None;
    }
    let y = l0 * a.y + l1 * b.y + l2 * c.y;
    let ny = mesh.area_vector(t).y;
    Some((y, if ny > 0.0 { 1 } else { -1 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::mesh::{box_tank, icosphere, Label};
    use rand::{Rng, SeedableRng};

    fn unit_cube() -> SurfaceMesh {
        box_tank(Vec3::zeros(), (1.0, 1.0), 1.0, 0.25, |_, _| 0.0)
    }

    #[test]
    fn cube_center_and_face_offset() {
        let m = unit_cube();
        // voxel centers land on 0.5 and on 1.3 along x
        let lat = Lattice::new(0.1, Vec3::repeat(-0.05));
        let ls = mesh_to_levelset(&m, &lat, 0.6).unwrap();
        let c = lat.voxel_of(&Vec3::new(0.5, 0.5, 0.5));
        assert!((lat.voxel_center(c) - Vec3::repeat(0.5)).norm() < 1e-12);
        assert!((ls.value(c) + 0.5).abs() < 1e-6);
        let o = lat.voxel_of(&Vec3::new(1.3, 0.5, 0.5));
        assert!((ls.value(o) - 0.3).abs() < 1e-6, "{}", ls.value(o));
    }

    #[test]
    fn open_mesh_rejected() {
        let mut m = unit_cube();
        m.triangles.truncate(m.triangles.len() - 1);
        m.labels.truncate(m.triangles.len());
        m.solid_velocity.truncate(m.triangles.len());
        let lat = Lattice::new(0.1, Vec3::zeros());
        assert!(matches!(mesh_to_levelset(&m, &lat, 0.3), Err(crate::Error::OpenSurface(_))));
    }

    #[test]
    fn icosphere_center_within_sagitta() {
        let m = icosphere(Vec3::zeros(), 1.0, 3, Label::Free);
        let lat = Lattice::new(0.05, Vec3::repeat(-0.025));
        let ls = mesh_to_levelset(&m, &lat, 1.2).unwrap();
        // distance from the center to the nearest face plane is the inradius
        // of the tessellation; the gap to 1 is bounded by the largest sagitta
        let max_edge = m
            .edges()
            .iter()
            .map(|&(a, b)| (m.vertices[a] - m.vertices[b]).norm())
            .fold(0.0, f64::max);
        let circum = max_edge / 3f64.sqrt();
        let sagitta = 1.0 - (1.0 - circum * circum).sqrt();
        let v = ls.value([0, 0, 0]);
        assert!(v <= -1.0 + sagitta + 1e-12 && v >= -1.0 - 1e-12, "{v}");
    }

    #[test]
    fn icosphere_sign_agreement() {
        let m = icosphere(Vec3::new(0.013, -0.007, 0.021), 1.0, 2, Label::Free);
        let lat = Lattice::new(0.04, Vec3::new(-1.37, -1.41, -1.33));
        let ls = mesh_to_levelset(&m, &lat, 0.2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut n = 0;
        while n < 1000 {
            let c = [
                rng.random_range(-2..66),
                rng.random_range(-2..66),
                rng.random_range(-2..66),
            ];
            let p = lat.voxel_center(c);
            let w = m.winding_number(&p);
            if (w - 0.5).abs() < 0.4 {
                continue;
            }
            let inside = w > 0.5;
            assert_eq!(ls.value(c) < 0.0, inside, "{c:?} w={w}");
            n += 1;
        }
    }
}
