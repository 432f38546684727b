//! Integrals of the Laplace kernel `G(x, y) = 1 / (4 pi |x - y|)` over flat
//! triangles, for constant and piecewise-linear (hat) densities.
//!
//! The analytic forms reduce every area integral to three per-edge line
//! integrals (`int 1/r`, `int s/r`, `int r`) plus the plane integral of `1/r`
//! and the solid angle. They hold for `x` on, near or far from the triangle.
//! Only the gradient is singular when `x` lies on the triangle's boundary.

use std::f64::consts::PI;

use crate::geom::solid_angle;
use crate::{Error, Result, Vec3};

pub const MIN_AREA: f64 = 1e-12;
const FOUR_PI: f64 = 4.0 * PI;

/// Barycentric coordinates of the symmetric 3-point rule; weight area/3 each.
pub const QUAD_BARY: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

pub fn green(x: &Vec3, y: &Vec3) -> f64 {
    1.0 / (FOUR_PI * (x - y).norm())
}

/// `grad_x G(x, y)`.
pub fn grad_green(x: &Vec3, y: &Vec3) -> Vec3 {
    let d = y - x;
    let r = d.norm();
    d / (FOUR_PI * r * r * r)
}

/// Whether `x` is close enough to a triangle that quadrature is replaced by
/// the analytic integral: `|x - centroid| < 2 sqrt(area)`.
pub fn is_near(x: &Vec3, centroid: &Vec3, area: f64) -> bool {
    (x - centroid).norm() < 2.0 * area.sqrt()
}

#[derive(Clone, Copy, Debug)]
struct Edge {
    /// In-plane outward edge normal.
    m: Vec3,
    t: Vec3,
    /// Signed distance from the projected point to the edge line.
    p0: f64,
    /// `int 1/r`, `int s/r`, `int r` along the edge.
    e0: f64,
    e1: f64,
    er: f64,
}

/// Per-triangle quantities shared by all analytic integrals at one point.
#[derive(Clone, Debug)]
struct Moments {
    n: Vec3,
    area: f64,
    /// `(x - y) . n`, constant over the plane.
    h: f64,
    /// Projection of `x` onto the plane.
    rho: Vec3,
    /// `int 1/r`.
    i1: f64,
    /// `int h / r^3`, the signed solid angle seen from the front side.
    w: f64,
    edges: [Edge; 3],
}

fn moments(x: &Vec3, tri: [&Vec3; 3]) -> Result<Moments> {
    let [a, b, c] = tri;
    let nv = (b - a).cross(&(c - a));
    let area = 0.5 * nv.norm();
    if !(area > MIN_AREA) {
        return Err(Error::DegenerateElement { area });
    }
    let n = nv / (2.0 * area);
    let scale = (b - a).norm().max((c - a).norm());
    let mut h = (x - a).dot(&n);
    if h.abs() <= 1e-14 * scale {
        h = 0.0;
    }
    let rho = x - n * h;
    let verts = [a, b, c];
    let mut i1 = 0.0;
    let mut edges = [Edge {
        m: Vec3::zeros(),
        t: Vec3::zeros(),
        p0: 0.0,
        e0: 0.0,
        e1: 0.0,
        er: 0.0,
    }; 3];
    for e in 0..3 {
        let ym = verts[e];
        let yp = verts[(e + 1) % 3];
        let len = (yp - ym).norm();
        let t = (yp - ym) / len;
        let m = t.cross(&n);
        let sm = (ym - rho).dot(&t);
        let sp = (yp - rho).dot(&t);
        let p0 = (ym - rho).dot(&m);
        let rm = (ym - x).norm();
        let rp = (yp - x).norm();
        let r0sq = p0 * p0 + h * h;
        let r0 = r0sq.sqrt();
        let e0 = if r0 > 1e-13 * len {
            (sp / r0).asinh() - (sm / r0).asinh()
        } else if sm > 0.0 {
            (sp / sm).ln()
        } else if sp < 0.0 {
            (sm / sp).ln()
        } else {
            // x on the closed edge segment: the line integral diverges; every
            // use except the gradient multiplies it by zero
            0.0
        };
        let e1 = rp - rm;
        let er = 0.5 * (sp * rp - sm * rm + r0sq * e0);
        if h != 0.0 {
            let bp = (p0 * sp).atan2(r0sq + h.abs() * rp);
            let bm = (p0 * sm).atan2(r0sq + h.abs() * rm);
            i1 -= h.abs() * (bp - bm);
        }
        i1 += p0 * e0;
        edges[e] = Edge { m, t, p0, e0, e1, er };
    }
    let w = if h == 0.0 { 0.0 } else { -solid_angle(x, a, b, c) };
    Ok(Moments {
        n,
        area,
        h,
        rho,
        i1,
        w,
        edges,
    })
}

/// Exact `int_T G(x, y) ds_y` and its gradient in `x`.
///
/// The gradient is finite everywhere except on the triangle's edges and
/// vertices; for `x` inside the triangle's plane it is the principal value.
pub fn singular_triangle_integral(x: &Vec3, tri: [&Vec3; 3]) -> Result<(f64, Vec3)> {
    let m = moments(x, tri)?;
    let v = grad_moment(&m);
    Ok((m.i1 / FOUR_PI, v / FOUR_PI))
}

/// `int (y - x) / r^3`.
fn grad_moment(m: &Moments) -> Vec3 {
    let mut v = -m.n * m.w;
    for e in &m.edges {
        v -= e.m * e.e0;
    }
    v
}

/// Integrals of the three hat functions of a triangle against the kernels.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HatIntegrals {
    /// `int phi_k G ds`.
    pub single: [f64; 3],
    /// `int phi_k dG/dn_y ds` with the triangle's outward normal.
    pub double: [f64; 3],
    /// `grad_x int phi_k G ds`.
    pub grad: [Vec3; 3],
}

pub(crate) fn hat_gradients(tri: [&Vec3; 3], n: &Vec3, area: f64) -> [Vec3; 3] {
    let [a, b, c] = tri;
    let s = 1.0 / (2.0 * area);
    [n.cross(&(c - b)) * s, n.cross(&(a - c)) * s, n.cross(&(b - a)) * s]
}

/// Exact hat-function integrals at `x`.
pub fn hat_integrals_exact(x: &Vec3, tri: [&Vec3; 3]) -> Result<HatIntegrals> {
    let m = moments(x, tri)?;
    let b = hat_gradients(tri, &m.n, m.area);
    let v = grad_moment(&m);
    let mut out = HatIntegrals::default();
    for k in 0..3 {
        let ak = 1.0 + b[k].dot(&(m.rho - tri[k]));
        let mut s = ak * m.i1;
        let mut d = ak * m.w;
        // M b = b I1 - sum (p0 e0 m + e1 t)(m.b) + h n sum e0 (m.b)
        let mut mb = b[k] * m.i1;
        let mut hn = 0.0;
        for e in &m.edges {
            let mbk = e.m.dot(&b[k]);
            s += mbk * e.er;
            d -= m.h * mbk * e.e0;
            mb -= (e.m * (e.p0 * e.e0) + e.t * e.e1) * mbk;
            hn += e.e0 * mbk;
        }
        mb += m.n * (m.h * hn);
        out.single[k] = s / FOUR_PI;
        out.double[k] = d / FOUR_PI;
        out.grad[k] = (v * ak + mb) / FOUR_PI;
    }
    Ok(out)
}

/// Quadrature points `(position, barycentric, weight)` of a triangle.
pub fn quadrature_points(tri: [&Vec3; 3]) -> [(Vec3, [f64; 3], f64); 3] {
    let area = 0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
    QUAD_BARY.map(|l| (tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2], l, area / 3.0))
}

/// Hat-function integrals by the 3-point rule.
pub fn hat_integrals_quadrature(x: &Vec3, tri: [&Vec3; 3]) -> HatIntegrals {
    let nv = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let n = nv.normalize();
    let mut out = HatIntegrals::default();
    for (y, l, w) in quadrature_points(tri) {
        let g = green(x, &y);
        let gg = grad_green(x, &y);
        // dG/dn_y = -grad_x G . n
        let dn = -gg.dot(&n);
        for k in 0..3 {
            out.single[k] += w * l[k] * g;
            out.double[k] += w * l[k] * dn;
            out.grad[k] += gg * (w * l[k]);
        }
    }
    out
}

/// Analytic near the triangle, 3-point quadrature elsewhere.
pub fn hat_integrals(x: &Vec3, tri: [&Vec3; 3]) -> Result<HatIntegrals> {
    let nv = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let area = 0.5 * nv.norm();
    if !(area > MIN_AREA) {
        return Err(Error::DegenerateElement { area });
    }
    let c = (tri[0] + tri[1] + tri[2]) / 3.0;
    if is_near(x, &c, area) {
        hat_integrals_exact(x, tri)
    } else {
        Ok(hat_integrals_quadrature(x, tri))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauss-Legendre nodes and weights on [0, 1].
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            out.push((0.5 * (1.0 - z), 1.0 / ((1.0 - z * z) * dp * dp)));
        }
        out
    }

    /// `int_T f(y) ds` with `T` split at the projection of `x` into three
    /// signed sub-triangles, each mapped by a Duffy transform that removes
    /// the singularity at its apex.
    fn duffy(x: &Vec3, tri: [&Vec3; 3], n: usize, f: &dyn Fn(&Vec3) -> f64) -> f64 {
        let nrm = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
        duffy_at(&(x - nrm * (x - tri[0]).dot(&nrm)), tri, n, f)
    }

    fn duffy_at(o: &Vec3, tri: [&Vec3; 3], n: usize, f: &dyn Fn(&Vec3) -> f64) -> f64 {
        let gl = gauss_legendre(n);
        let nrm = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
        let mut total = 0.0;
        for e in 0..3 {
            let (p, q) = (tri[e], tri[(e + 1) % 3]);
            let jac = (p - o).cross(&(q - o)).dot(&nrm);
            if jac.abs() < 1e-300 {
                continue;
            }
            for &(u, wu) in &gl {
                for &(v, wv) in &gl {
                    // y = o + u ((1 - v)(p - o) + v (q - o)), ds = u J du dv
                    let y = o + ((p - o) * (1.0 - v) + (q - o) * v) * u;
                    total += wu * wv * u * jac * f(&y);
                }
            }
        }
        total
    }

    fn equilateral(a: f64) -> [Vec3; 3] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(a, 0.0, 0.0),
            Vec3::new(0.5 * a, 0.5 * 3f64.sqrt() * a, 0.0),
        ]
    }

    fn refs(t: &[Vec3; 3]) -> [&Vec3; 3] {
        [&t[0], &t[1], &t[2]]
    }

    #[test]
    fn centroid_value_matches_duffy_quadrature() {
        let t = equilateral(0.7);
        let x = (t[0] + t[1] + t[2]) / 3.0;
        let (v, g) = singular_triangle_integral(&x, refs(&t)).unwrap();
        let want = duffy(&x, refs(&t), 130, &|y| green(&x, y));
        assert!((v - want).abs() <= 1e-8 * want, "{v} vs {want}");
        // symmetric point in the plane: principal-value gradient vanishes
        assert!(g.norm() < 1e-12 * want);
    }

    #[test]
    fn off_plane_values_and_gradients_match_quadrature() {
        let t = [Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.0, 0.1, 0.2), Vec3::new(0.3, 0.8, -0.1)];
        for x in [Vec3::new(0.4, 0.2, 0.5), Vec3::new(-0.3, 0.1, 0.05), Vec3::new(2.0, 1.0, 0.4)] {
            let (v, g) = singular_triangle_integral(&x, refs(&t)).unwrap();
            let want = duffy(&x, refs(&t), 120, &|y| green(&x, y));
            assert!((v - want).abs() <= 1e-9 * want, "{v} vs {want}");
            let mut gw = Vec3::zeros();
            for a in 0..3 {
                gw[a] = duffy(&x, refs(&t), 120, &|y| grad_green(&x, y)[a]);
            }
            assert!((g - gw).norm() <= 1e-8 * gw.norm(), "{g} vs {gw}");
        }
    }

    #[test]
    fn hat_integrals_match_quadrature() {
        let t = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.9, 0.2, 0.1), Vec3::new(0.2, 0.7, 0.3)];
        let bary = |y: &Vec3, k: usize| {
            let n = (t[1] - t[0]).cross(&(t[2] - t[0]));
            let (p, q) = (t[(k + 1) % 3], t[(k + 2) % 3]);
            (p - y).cross(&(q - y)).dot(&n) / n.norm_squared()
        };
        let n = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
        let outside = t[0] + (t[1] - t[0]) * 1.3 + (t[2] - t[0]) * 0.4;
        let above = (t[0] + t[1] + t[2]) / 3.0 + n * 0.2;
        // on a vertex, in the plane outside, and off the plane
        for x in [t[1], outside, above] {
            let h = hat_integrals_exact(&x, refs(&t)).unwrap();
            for k in 0..3 {
                let s = duffy(&x, refs(&t), 120, &|y| bary(y, k) * green(&x, y));
                assert!((h.single[k] - s).abs() <= 1e-9 * s.abs().max(1e-3), "single {k}: {} vs {s}", h.single[k]);
                let d = duffy(&x, refs(&t), 120, &|y| -bary(y, k) * grad_green(&x, y).dot(&n));
                assert!((h.double[k] - d).abs() <= 1e-9 * d.abs().max(1e-3), "double {k}: {} vs {d}", h.double[k]);
                if x != t[1] {
                    let mut g = Vec3::zeros();
                    for a in 0..3 {
                        // apex at a vertex keeps the integrand smooth for x off the triangle
                        g[a] = duffy_at(&t[0], refs(&t), 120, &|y| bary(y, k) * grad_green(&x, y)[a]);
                    }
                    assert!((h.grad[k] - g).norm() <= 1e-8 * g.norm().max(1e-3), "grad {k}: {} vs {g}", h.grad[k]);
                }
            }
        }
    }

    #[test]
    fn far_field_monopole() {
        let t = equilateral(0.1);
        let c = (t[0] + t[1] + t[2]) / 3.0;
        let diam = 0.1;
        let x = c + Vec3::new(0.3, -0.5, 1.0).normalize() * 20.0 * diam;
        let (v, _) = singular_triangle_integral(&x, refs(&t)).unwrap();
        let area = 0.25 * 3f64.sqrt() * 0.01;
        let mono = area / (FOUR_PI * (x - c).norm());
        assert!((v - mono).abs() <= 0.01 * mono);
    }

    #[test]
    fn translation_invariance() {
        let t = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.3, 0.05, 0.0), Vec3::new(0.1, 0.25, 0.02)];
        let x = Vec3::new(0.12, 0.07, 0.04);
        let s = Vec3::new(0.5, -0.25, 0.125);
        let t2 = [t[0] + s, t[1] + s, t[2] + s];
        let (a, _) = singular_triangle_integral(&x, refs(&t)).unwrap();
        let (b, _) = singular_triangle_integral(&(x + s), refs(&t2)).unwrap();
        assert!((a - b).abs() <= 1e-14 * a.abs());
    }

    #[test]
    fn degenerate_rejected() {
        let t = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        assert!(matches!(
            singular_triangle_integral(&Vec3::new(0.0, 1.0, 0.0), refs(&t)),
            Err(Error::DegenerateElement { .. })
        ));
    }

    #[test]
    fn quadrature_weights_sum_to_area() {
        let t = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.3, 0.05, 0.0), Vec3::new(0.1, 0.25, 0.02)];
        let area = 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm();
        let s: f64 = quadrature_points(refs(&t)).iter().map(|q| q.2).sum();
        assert!((s - area).abs() <= 1e-14 * area);
    }
}
