//! Mixed-boundary-condition Laplace solve for the second pressure component.
//!
//! Collocation at the vertices of the direct boundary integral equation
//! `c_i P_i + int P dG/dn_y ds = int G q ds` with hat-linear `P` and `q`.
//! A vertex touching any FREE triangle carries a known pressure and an
//! unknown normal derivative, used on its FREE triangles. A vertex with only
//! SOLID triangles carries an unknown pressure. On SOLID triangles `q` is
//! known per triangle corner, so contact lines need no special unknowns.
//! `c_i` is the rigid-mode row sum `-sum_j D_ij`, which is the geometric
//! interior solid angle fraction of the discrete surface at vertex `i`.

use faer::linalg::solvers::Solve;
use rayon::prelude::*;

use super::helmholtz::{helmholtz, HdMode};
use super::integrals::{hat_gradients, hat_integrals};
use super::remesh::constrained_velocities;
use super::{Label, SurfaceMesh, VertexKind};
use crate::{Error, Result, Vec3};

/// Relative residual accepted from the dense solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Dense collocation system over all vertices.
pub struct LaplaceSystem {
    pub matrix: faer::Mat<f64>,
    pub rhs: Vec<f64>,
    /// True where the unknown is the normal derivative (pressure known).
    pub flux_unknown: Vec<bool>,
    pub p_bc: Vec<f64>,
    /// Known normal derivative per SOLID triangle corner.
    pub q_solid: Vec<[f64; 3]>,
    /// Interior solid angle fraction per vertex.
    pub c: Vec<f64>,
    vertex_solid_area: Vec<f64>,
    vertex_solid_q: Vec<f64>,
}

impl LaplaceSystem {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }
}

/// Second pressure component and its normal derivative at every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct BemSolveResult {
    pub p2: Vec<f64>,
    pub dp2_dn: Vec<f64>,
    /// Relative residual of the dense solve.
    pub residual: f64,
}

/// Neumann data `(rho/dt)(u - u_solid) . n` at the corners of SOLID
/// triangles; zero on FREE triangles.
pub fn neumann_data(mesh: &SurfaceMesh, rho: f64, dt: f64) -> Vec<[f64; 3]> {
    (0..mesh.num_triangles())
        .map(|t| {
            if mesh.labels[t] != Label::Solid {
                return [0.0; 3];
            }
            let n = mesh.normal(t);
            let us = mesh.solid_velocity[t];
            mesh.triangles[t].map(|v| rho / dt * (mesh.velocities[v] - us).dot(&n))
        })
        .collect()
}

/// Vertices touching a FREE triangle (known pressure).
pub fn dirichlet_vertices(mesh: &SurfaceMesh) -> Vec<bool> {
    let mut d = vec![false; mesh.num_vertices()];
    for (tri, &l) in mesh.triangles.iter().zip(&mesh.labels) {
        if l == Label::Free {
            for &v in tri {
                d[v] = true;
            }
        }
    }
    d
}

/// Assembles the collocation system with pressure `p_bc` (per vertex, read
/// on vertices touching FREE triangles) and SOLID corner data `q_solid`.
pub fn assemble_laplace_system(mesh: &SurfaceMesh, p_bc: &[f64], q_solid: &[[f64; 3]]) -> Result<LaplaceSystem> {
    mesh.validate()?;
    let n = mesh.num_vertices();
    assert_eq!(p_bc.len(), n);
    assert_eq!(q_solid.len(), mesh.num_triangles());
    let flux_unknown = dirichlet_vertices(mesh);
    let rows: Vec<(Vec<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, f64, f64)> {
            let x = mesh.vertices[i];
            let mut row = vec![0.0; n];
            let mut rhs = 0.0;
            let mut dsum = 0.0;
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let h = hat_integrals(&x, mesh.corners(t))?;
                let free = mesh.labels[t] == Label::Free;
                for k in 0..3 {
                    let v = tri[k];
                    let d = h.double[k];
                    dsum += d;
                    if flux_unknown[v] {
                        rhs -= d * p_bc[v];
                    } else {
                        row[v] += d;
                    }
                    if free {
                        row[v] -= h.single[k];
                    } else {
                        rhs += h.single[k] * q_solid[t][k];
                    }
                }
            }
            let c = -dsum;
            if flux_unknown[i] {
                rhs -= c * p_bc[i];
            } else {
                row[i] += c;
            }
            Ok((row, rhs, c))
        })
        .collect::<Result<_>>()?;
    let mut matrix = faer::Mat::<f64>::zeros(n, n);
    let mut rhs = vec![0.0; n];
    let mut c = vec![0.0; n];
    for (i, (row, b, ci)) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
        rhs[i] = b;
        c[i] = ci;
    }
    let mut vertex_solid_area = vec![0.0; n];
    let mut vertex_solid_q = vec![0.0; n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.labels[t] == Label::Solid {
            let a = mesh.area(t);
            for k in 0..3 {
                vertex_solid_area[tri[k]] += a;
                vertex_solid_q[tri[k]] += a * q_solid[t][k];
            }
        }
    }
    Ok(LaplaceSystem {
        matrix,
        rhs,
        flux_unknown,
        p_bc: p_bc.to_vec(),
        q_solid: q_solid.to_vec(),
        c,
        vertex_solid_area,
        vertex_solid_q,
    })
}

/// Dense LU solve with partial pivoting.
pub fn solve_boundary_pressure(sys: &LaplaceSystem) -> Result<BemSolveResult> {
    let n = sys.len();
    let lu = sys.matrix.partial_piv_lu();
    let u = lu.U();
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = u[(i, i)].abs();
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    if !(dmin > 1e-14 * dmax) {
        return Err(Error::SingularSystem { condition: dmax / dmin });
    }
    let b = faer::Mat::<f64>::from_fn(n, 1, |i, _| sys.rhs[i]);
    let x = lu.solve(&b);
    let xs: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let mut res: f64 = 0.0;
    let mut anorm: f64 = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        let mut a = 0.0;
        for j in 0..n {
            s += sys.matrix[(i, j)] * xs[j];
            a += sys.matrix[(i, j)].abs();
        }
        res = res.max((s - sys.rhs[i]).abs());
        anorm = anorm.max(a);
    }
    let scale = anorm * inf(&xs) + inf(&sys.rhs);
    let residual = if scale > 0.0 { res / scale } else { 0.0 };
    if !(residual <= SOLVE_TOL) {
        return Err(Error::InaccurateSolve { residual });
    }
    let mut p2 = vec![0.0; n];
    let mut dp2_dn = vec![0.0; n];
    for i in 0..n {
        if sys.flux_unknown[i] {
            p2[i] = sys.p_bc[i];
            dp2_dn[i] = xs[i];
        } else {
            p2[i] = xs[i];
            let a = sys.vertex_solid_area[i];
            dp2_dn[i] = if a > 0.0 { sys.vertex_solid_q[i] / a } else { 0.0 };
        }
    }
    Ok(BemSolveResult { p2, dp2_dn, residual })
}

/// Per-vertex surface gradient of the hat-linear field `p`: area-weighted
/// mean of the triangle gradients accepted by `keep(vertex, triangle)`,
/// projected onto the vertex tangent plane.
pub fn surface_gradient(
    mesh: &SurfaceMesh,
    p: &[f64],
    normals: &[Vec3],
    keep: impl Fn(usize, usize) -> bool,
) -> Vec<Vec3> {
    let nv = mesh.num_vertices();
    let mut acc = vec![Vec3::zeros(); nv];
    let mut area = vec![0.0; nv];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.area(t);
        let b = hat_gradients(mesh.corners(t), &mesh.normal(t), a);
        let g = b[0] * p[tri[0]] + b[1] * p[tri[1]] + b[2] * p[tri[2]];
        for &v in tri {
            if keep(v, t) {
                acc[v] += g * a;
                area[v] += a;
            }
        }
    }
    (0..nv)
        .map(|v| {
            if area[v] == 0.0 {
                return Vec3::zeros();
            }
            let g = acc[v] / area[v];
            g - normals[v] * normals[v].dot(&g)
        })
        .collect()
}

/// `v <- v - (dt/rho)(grad_s P2 + (dP2/dn) n)` at every vertex.
///
/// On the contact line the unknown flux belongs to the FREE triangles, so
/// those vertices use the normal and gradient of their FREE triangles only.
pub fn update_surface_velocity(mesh: &SurfaceMesh, res: &BemSolveResult, dt: f64, rho: f64) -> SurfaceMesh {
    let kinds = mesh.vertex_kinds();
    let all = mesh.vertex_normals();
    let free = mesh.vertex_normals_where(|t| mesh.labels[t] == Label::Free);
    let normals: Vec<Vec3> = (0..mesh.num_vertices())
        .map(|v| if kinds[v] == VertexKind::Contact { free[v] } else { all[v] })
        .collect();
    let gs = surface_gradient(mesh, &res.p2, &normals, |v, t| {
        kinds[v] != VertexKind::Contact || mesh.labels[t] == Label::Free
    });
    let mut out = mesh.clone();
    let s = dt / rho;
    for i in 0..mesh.num_vertices() {
        out.velocities[i] -= (gs[i] + normals[i] * res.dp2_dn[i]) * s;
    }
    out
}

/// Full surface projection: Helmholtz correction, then the Laplace solve with
/// zero free-surface pressure, then the velocity update.
pub fn project_surface(mesh: &SurfaceMesh, mode: HdMode, rho: f64, dt: f64) -> Result<(SurfaceMesh, BemSolveResult)> {
    let corrected = helmholtz(mesh, mode)?;
    let q = neumann_data(&corrected, rho, dt);
    let p_bc = vec![0.0; mesh.num_vertices()];
    let sys = assemble_laplace_system(&corrected, &p_bc, &q)?;
    let res = solve_boundary_pressure(&sys)?;
    let mut out = update_surface_velocity(&corrected, &res, dt, rho);
    out.velocities = constrained_velocities(&out);
    Ok((out, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::mesh::icosphere;

    fn sphere(sub: usize, r: f64) -> SurfaceMesh {
        icosphere(Vec3::zeros(), r, sub, Label::Free)
    }

    #[test]
    fn constant_dirichlet_gives_zero_flux() {
        let r = 0.7;
        let m = sphere(2, r);
        let c = 3.5;
        let sys = assemble_laplace_system(&m, &vec![c; m.num_vertices()], &vec![[0.0; 3]; m.num_triangles()]).unwrap();
        assert_eq!(sys.len(), m.num_vertices());
        let res = solve_boundary_pressure(&sys).unwrap();
        for q in &res.dp2_dn {
            assert!(q.abs() <= 1e-3 * c / r, "{q}");
        }
        assert!(res.p2.iter().all(|&p| p == c));
    }

    #[test]
    fn linear_field_mixed_conditions() {
        let r = 1.0;
        let mut m = sphere(2, r);
        for t in 0..m.num_triangles() {
            m.labels[t] = if m.centroid(t).z > 0.0 { Label::Free } else { Label::Solid };
        }
        let p_bc: Vec<f64> = m.vertices.iter().map(|x| x.z).collect();
        let q: Vec<[f64; 3]> = (0..m.num_triangles()).map(|t| [m.normal(t).z; 3]).collect();
        let sys = assemble_laplace_system(&m, &p_bc, &q).unwrap();
        let n_solid = sys.flux_unknown.iter().filter(|&&f| !f).count();
        assert!(n_solid > 10);
        assert_eq!(sys.len(), m.num_vertices());
        let res = solve_boundary_pressure(&sys).unwrap();
        for i in 0..m.num_vertices() {
            if !sys.flux_unknown[i] {
                let want = m.vertices[i].z;
                assert!((res.p2[i] - want).abs() <= 0.02 * r, "{} vs {want}", res.p2[i]);
            }
        }
    }

    #[test]
    fn quadratic_harmonic_normal_derivative() {
        let m = sphere(2, 1.0);
        let p = |x: &Vec3| x.x * x.x - x.y * x.y;
        let p_bc: Vec<f64> = m.vertices.iter().map(p).collect();
        let sys = assemble_laplace_system(&m, &p_bc, &vec![[0.0; 3]; m.num_triangles()]).unwrap();
        let res = solve_boundary_pressure(&sys).unwrap();
        let (mut e2, mut r2) = (0.0, 0.0);
        for (i, x) in m.vertices.iter().enumerate() {
            let n = x.normalize();
            let want = 2.0 * (x.x * n.x - x.y * n.y);
            e2 += (res.dp2_dn[i] - want).powi(2);
            r2 += want * want;
        }
        let rms = (e2 / r2).sqrt();
        assert!(rms <= 0.03, "rms {rms}");
    }

    fn mixed_sphere() -> SurfaceMesh {
        let mut m = sphere(1, 1.0);
        for t in 0..m.num_triangles() {
            if m.centroid(t).y < -0.2 {
                m.labels[t] = Label::Solid;
            }
        }
        m
    }

    #[test]
    fn zero_data_zero_solution() {
        let m = mixed_sphere();
        let sys = assemble_laplace_system(&m, &vec![0.0; m.num_vertices()], &vec![[0.0; 3]; m.num_triangles()]).unwrap();
        let res = solve_boundary_pressure(&sys).unwrap();
        assert!(res.p2.iter().chain(&res.dp2_dn).all(|&v| v == 0.0));
    }

    #[test]
    fn solution_linear_in_data() {
        let m = mixed_sphere();
        let p1: Vec<f64> = m.vertices.iter().map(|x| x.x + 0.3 * x.y * x.z).collect();
        let q1: Vec<[f64; 3]> = (0..m.num_triangles()).map(|t| [0.1 * t as f64, -0.2, 0.05]).collect();
        let p2: Vec<f64> = p1.iter().map(|v| 2.0 * v).collect();
        let q2: Vec<[f64; 3]> = q1.iter().map(|q| q.map(|v| 2.0 * v)).collect();
        let a = solve_boundary_pressure(&assemble_laplace_system(&m, &p1, &q1).unwrap()).unwrap();
        let b = solve_boundary_pressure(&assemble_laplace_system(&m, &p2, &q2).unwrap()).unwrap();
        for i in 0..m.num_vertices() {
            assert!((b.p2[i] - 2.0 * a.p2[i]).abs() <= 1e-12 * (1.0 + a.p2[i].abs()));
            assert!((b.dp2_dn[i] - 2.0 * a.dp2_dn[i]).abs() <= 1e-12 * (1.0 + a.dp2_dn[i].abs()));
        }
    }

    #[test]
    fn too_small_mesh_rejected() {
        let m = SurfaceMesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y()],
            vec![[0, 1, 2]],
            vec![Label::Free],
            0.1,
        );
        assert!(assemble_laplace_system(&m, &[0.0; 3], &[[0.0; 3]]).is_err());
    }

    #[test]
    fn null_update_is_bitwise_identity() {
        let mut m = sphere(1, 1.0);
        m.velocities = m.vertices.iter().map(|x| Vec3::new(x.z, 0.1, -x.x)).collect();
        let res = BemSolveResult {
            p2: vec![0.0; m.num_vertices()],
            dp2_dn: vec![0.0; m.num_vertices()],
            residual: 0.0,
        };
        let out = update_surface_velocity(&m, &res, 0.01, 1000.0);
        assert_eq!(out.velocities, m.velocities);
    }

    #[test]
    fn constant_pressure_moves_only_along_normal() {
        let m = sphere(2, 1.0);
        let nv = m.num_vertices();
        let res = BemSolveResult {
            p2: vec![4.0; nv],
            dp2_dn: (0..nv).map(|i| i as f64 * 0.1).collect(),
            residual: 0.0,
        };
        let (dt, rho) = (0.01, 1000.0);
        let out = update_surface_velocity(&m, &res, dt, rho);
        let normals = m.vertex_normals();
        for i in 0..nv {
            let want = -normals[i] * (res.dp2_dn[i] * dt / rho);
            assert!((out.velocities[i] - want).norm() <= 1e-15);
        }
    }

    #[test]
    fn linear_pressure_tangential_update() {
        let m = sphere(2, 1.0);
        let nv = m.num_vertices();
        let res = BemSolveResult {
            p2: m.vertices.iter().map(|x| x.z).collect(),
            dp2_dn: vec![0.0; nv],
            residual: 0.0,
        };
        let (dt, rho) = (0.01, 1000.0);
        let out = update_surface_velocity(&m, &res, dt, rho);
        let normals = m.vertex_normals();
        let z = Vec3::z();
        for i in 0..nv {
            let n = normals[i];
            let want = -(z - n * n.dot(&z)) * (dt / rho);
            let got = out.velocities[i];
            assert!((got - want).norm() <= 0.02 * dt / rho, "{got} vs {want}");
        }
    }

    fn harmonic_change(sub: usize) -> f64 {
        let mut m = sphere(sub, 1.0);
        let f = |x: &Vec3| Vec3::new(2.0 * x.x, -2.0 * x.y, 0.0);
        m.velocities = m.vertices.iter().map(f).collect();
        let (out, _) = project_surface(&m, HdMode::Partial, 1000.0, 0.01).unwrap();
        let (mut e2, mut r2) = (0.0, 0.0);
        for i in 0..m.num_vertices() {
            e2 += (out.velocities[i] - m.velocities[i]).norm_squared();
            r2 += m.velocities[i].norm_squared();
        }
        (e2 / r2).sqrt()
    }

    #[test]
    fn harmonic_field_is_discrete_fixed_point() {
        let e2 = harmonic_change(2);
        let e3 = harmonic_change(3);
        assert!(e2 <= 0.05, "{e2}");
        assert!(e3 <= 0.05 && e3 < e2, "{e3} vs {e2}");
    }
}
