//! Boundary-integral velocity reconstruction and the partial/full Helmholtz
//! corrections of surface velocities.
//!
//! With `c = n . u` and `j = n x u` on the boundary, the divergence- and
//! curl-free field determined by the boundary velocity is
//! `u_HD(x) = int [ c grad G + j x grad G ] ds`. Densities are linear per
//! triangle (hat interpolation of the vertex velocities) with the flat
//! triangle normal, so a uniform field is reproduced exactly inside the
//! polyhedron.

use rayon::prelude::*;

use super::integrals::hat_integrals;
use super::SurfaceMesh;
use crate::{Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HdMode {
    /// Keep the tangential velocity, replace only the normal component.
    #[default]
    Partial,
    /// Replace the whole vertex velocity.
    Full,
}

impl HdMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "partial" => Some(HdMode::Partial),
            "full" => Some(HdMode::Full),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HdMode::Partial => "partial",
            HdMode::Full => "full",
        }
    }
}

/// Depth below a vertex, in units of its mean incident edge length, of the
/// nearer of the two interior samples used to extrapolate `u_HD` to the
/// surface.
pub const HD_OFFSET: f64 = 0.05;

/// `u_HD(x)` from the mesh's vertex velocities. The value is only meaningful
/// for `x` off the surface; on a triangle edge the kernel gradient diverges.
pub fn boundary_velocity_integral(mesh: &SurfaceMesh, x: &Vec3) -> Result<Vec3> {
    let mut u = Vec3::zeros();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let h = hat_integrals(x, mesh.corners(t))?;
        let n = mesh.normal(t);
        for k in 0..3 {
            let v = mesh.velocities[tri[k]];
            let g = h.grad[k];
            u += g * n.dot(&v) + n.cross(&v).cross(&g);
        }
    }
    Ok(u)
}

/// Mean length of the edges incident to each vertex.
pub fn vertex_edge_lengths(mesh: &SurfaceMesh) -> Vec<f64> {
    let mut sum = vec![0.0; mesh.num_vertices()];
    let mut cnt = vec![0usize; mesh.num_vertices()];
    for (a, b) in mesh.edges() {
        let l = (mesh.vertices[a] - mesh.vertices[b]).norm();
        sum[a] += l;
        sum[b] += l;
        cnt[a] += 1;
        cnt[b] += 1;
    }
    sum.iter().zip(&cnt).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect()
}

/// Interior limit of `u_HD` at every vertex: samples at depths `d` and `2d`
/// below the vertex, linearly extrapolated to depth 0.
pub fn helmholtz_vertex_velocities(mesh: &SurfaceMesh) -> Result<Vec<Vec3>> {
    let near = vertex_velocities_at(mesh, HD_OFFSET)?;
    let far = vertex_velocities_at(mesh, 2.0 * HD_OFFSET)?;
    Ok(near.iter().zip(&far).map(|(a, b)| a * 2.0 - b).collect())
}

fn vertex_velocities_at(mesh: &SurfaceMesh, offset: f64) -> Result<Vec<Vec3>> {
    let normals = mesh.vertex_normals();
    let len = vertex_edge_lengths(mesh);
    (0..mesh.num_vertices())
        .into_par_iter()
        .map(|i| {
            let x = mesh.vertices[i] - normals[i] * (offset * len[i]);
            boundary_velocity_integral(mesh, &x)
        })
        .collect()
}

/// Applies the Helmholtz correction in the given mode.
pub fn helmholtz(mesh: &SurfaceMesh, mode: HdMode) -> Result<SurfaceMesh> {
    let hd = helmholtz_vertex_velocities(mesh)?;
    let mut out = mesh.clone();
    match mode {
        HdMode::Full => out.velocities = hd,
        HdMode::Partial => {
            let normals = mesh.vertex_normals();
            for i in 0..mesh.num_vertices() {
                let n = normals[i];
                let v = mesh.velocities[i];
                let vt = v - n * n.dot(&v);
                out.velocities[i] = vt + n * n.dot(&hd[i]);
            }
        }
    }
    Ok(out)
}

pub fn partial_helmholtz(mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    helmholtz(mesh, HdMode::Partial)
}

pub fn full_helmholtz(mesh: &SurfaceMesh) -> Result<SurfaceMesh> {
    helmholtz(mesh, HdMode::Full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::mesh::icosphere;
    use crate::bem::Label;
    use std::f64::consts::PI;

    fn sphere(sub: usize) -> SurfaceMesh {
        icosphere(Vec3::zeros(), 1.0, sub, Label::Free)
    }

    fn source_field(x: &Vec3) -> Vec3 {
        let s = Vec3::new(0.3, 0.2, 2.0);
        let d = x - s;
        d / (4.0 * PI * d.norm().powi(3))
    }

    #[test]
    fn uniform_field_is_fixed_point() {
        let mut m = sphere(2);
        let u0 = Vec3::new(0.3, -1.0, 0.5);
        m.velocities = vec![u0; m.num_vertices()];
        for mode in [HdMode::Partial, HdMode::Full] {
            let out = helmholtz(&m, mode).unwrap();
            for v in &out.velocities {
                assert!((v - u0).norm() <= 0.02 * u0.norm(), "{mode:?} {v}");
            }
        }
    }

    #[test]
    fn partial_keeps_tangential_part_exactly() {
        let mut m = sphere(2);
        m.velocities = m.vertices.iter().map(|x| Vec3::new(x.y, -x.x + 0.3, x.z * x.x)).collect();
        let out = partial_helmholtz(&m).unwrap();
        let normals = m.vertex_normals();
        for i in 0..m.num_vertices() {
            let n = normals[i];
            let t0 = m.velocities[i] - n * n.dot(&m.velocities[i]);
            let t1 = out.velocities[i] - n * n.dot(&out.velocities[i]);
            // the update only touches the normal part; re-splitting the
            // result costs a few rounding errors
            assert!((t0 - t1).norm() <= 4.0 * f64::EPSILON * m.velocities[i].norm().max(1.0));
        }
    }

    #[test]
    fn partial_and_full_share_normal_part() {
        let mut m = sphere(2);
        m.velocities = m.vertices.iter().map(|x| Vec3::new(x.y, x.z, 0.2)).collect();
        let p = partial_helmholtz(&m).unwrap();
        let f = full_helmholtz(&m).unwrap();
        let normals = m.vertex_normals();
        for i in 0..m.num_vertices() {
            let a = normals[i].dot(&p.velocities[i]);
            let b = normals[i].dot(&f.velocities[i]);
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    fn source_rms(sub: usize) -> f64 {
        let mut m = sphere(sub);
        m.velocities = m.vertices.iter().map(source_field).collect();
        let out = partial_helmholtz(&m).unwrap();
        let normals = m.vertex_normals();
        let (mut e2, mut r2) = (0.0, 0.0);
        for i in 0..m.num_vertices() {
            let want = normals[i].dot(&source_field(&m.vertices[i]));
            let got = normals[i].dot(&out.velocities[i]);
            e2 += (got - want).powi(2);
            r2 += want * want;
        }
        (e2 / r2).sqrt()
    }

    #[test]
    fn point_source_normal_components_reconstructed() {
        let e2 = source_rms(2);
        assert!(e2 <= 0.03, "rms {e2}");
        let e3 = source_rms(3);
        assert!(e3 < e2, "{e3} vs {e2}");
    }
}
