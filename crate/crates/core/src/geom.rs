//! Small triangle geometry kernels shared by the mesh and grid code.

use crate::Vec3;

/// Closest point to `p` on triangle `(a, b, c)`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_triangle_distance(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm()
}

/// Signed solid angle subtended by triangle `(a, b, c)` at `x`, positive
/// when `x` lies behind the triangle (opposite its right-hand normal).
pub fn solid_angle(x: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let ra = a - x;
    let rb = b - x;
    let rc = c - x;
    let la = ra.norm();
    let lb = rb.norm();
    let lc = rc.norm();
    let num = ra.dot(&rb.cross(&rc));
    let den = la * lb * lc + ra.dot(&rb) * lc + ra.dot(&rc) * lb + rb.dot(&rc) * la;
    2.0 * num.atan2(den)
}

/// Parameter `t` of the intersection of ray `o + t d` with the triangle, if
/// any (Moller-Trumbore; hits parallel to the plane are ignored).
pub fn ray_triangle(o: &Vec3, d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    let scale = e1.norm() * e2.norm() * d.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let tv = o - a;
    let u = tv.dot(&pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = tv.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&qv) * inv)
}

/// Segment `p -> q` crosses the interior of triangle `(a, b, c)`.
pub fn segment_hits_triangle(p: &Vec3, q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let d = q - p;
    match ray_triangle(p, &d, a, b, c) {
        Some(t) => t > 1e-9 && t < 1.0 - 1e-9,
        None => false,
    }
}

/// Triangle pair intersection by edge/face tests (coplanar contact is not
/// reported).
pub fn triangles_intersect(t0: [&Vec3; 3], t1: [&Vec3; 3]) -> bool {
    for i in 0..3 {
        let (p, q) = (t0[i], t0[(i + 1) % 3]);
        if segment_hits_triangle(p, q, t1[0], t1[1], t1[2]) {
            return true;
        }
        let (p, q) = (t1[i], t1[(i + 1) % 3]);
        if segment_hits_triangle(p, q, t0[0], t0[1], t0[2]) {
            return true;
        }
    }
    false
}

/// Interior angles of a triangle.
pub fn triangle_angles(a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let ang = |p: &Vec3, q: &Vec3, r: &Vec3| {
        let u = q - p;
        let v = r - p;
        u.cross(&v).norm().atan2(u.dot(&v))
    };
    [ang(a, b, c), ang(b, c, a), ang(c, a, b)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closest_point_regions() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let p = Vec3::new(0.25, 0.25, 0.7);
        assert!((point_triangle_distance(&p, &a, &b, &c) - 0.7).abs() < 1e-15);
        let p = Vec3::new(-1.0, -1.0, 0.0);
        assert_eq!(closest_point_on_triangle(&p, &a, &b, &c), a);
        let p = Vec3::new(1.0, 1.0, 0.0);
        let q = closest_point_on_triangle(&p, &a, &b, &c);
        assert!((q - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn octant_solid_angle() {
        // the triangle through the three unit axis points covers one octant
        let a = Vec3::x();
        let b = Vec3::y();
        let c = Vec3::z();
        let w = solid_angle(&Vec3::zeros(), &a, &b, &c);
        assert!((w - 4.0 * PI / 8.0).abs() < 1e-12);
        assert!((solid_angle(&Vec3::zeros(), &a, &c, &b) + 4.0 * PI / 8.0).abs() < 1e-12);
    }

    #[test]
    fn ray_hits() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 0.0, 1.0);
        let t = ray_triangle(&Vec3::new(0.2, -1.0, 0.2), &Vec3::y(), &a, &b, &c).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        assert!(ray_triangle(&Vec3::new(0.8, -1.0, 0.8), &Vec3::y(), &a, &b, &c).is_none());
    }

    #[test]
    fn crossing_triangles() {
        let t0 = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        let t1 = [
            Vec3::new(0.2, 0.2, -0.5),
            Vec3::new(0.2, 0.2, 0.5),
            Vec3::new(0.9, 0.9, 0.0),
        ];
        let t2 = [
            Vec3::new(0.2, 0.2, 0.1),
            Vec3::new(0.3, 0.2, 0.5),
            Vec3::new(0.2, 0.3, 0.5),
        ];
        assert!(triangles_intersect([&t0[0], &t0[1], &t0[2]], [&t1[0], &t1[1], &t1[2]]));
        assert!(!triangles_intersect([&t0[0], &t0[1], &t0[2]], [&t2[0], &t2[1], &t2[2]]));
    }
}
