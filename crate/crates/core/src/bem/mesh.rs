use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::{Error, Result, Vec3};

/// Boundary condition carried by a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    /// Free surface: Dirichlet pressure.
    Free,
    /// Wall: Neumann data from the solid velocity.
    Solid,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Free => "FREE",
            Label::Solid => "SOLID",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "FREE" => Some(Label::Free),
            "SOLID" => Some(Label::Solid),
            _ => None,
        }
    }
}

/// How a vertex relates to the labels of its incident triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Free,
    Solid,
    /// On the contact line between free surface and wall.
    Contact,
}

/// Closed, outward-oriented triangle mesh with per-vertex velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    pub labels: Vec<Label>,
    pub solid_velocity: Vec<Vec3>,
    pub min_edge: f64,
    pub max_edge: f64,
}

pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, labels: Vec<Label>, target_edge: f64) -> Self {
        assert_eq!(triangles.len(), labels.len());
        let nv = vertices.len();
        let nt = triangles.len();
        Self {
            vertices,
            velocities: vec![Vec3::zeros(); nv],
            triangles,
            labels,
            solid_velocity: vec![Vec3::zeros(); nt],
            min_edge: 0.5 * target_edge,
            max_edge: 1.5 * target_edge,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [&Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [&self.vertices[a], &self.vertices[b], &self.vertices[c]]
    }

    /// Twice-area normal vector (cross product of two edges).
    #[inline]
    pub fn area_vector(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    #[inline]
    pub fn area(&self, t: usize) -> f64 {
        0.5 * self.area_vector(t).norm()
    }

    #[inline]
    pub fn normal(&self, t: usize) -> Vec3 {
        self.area_vector(t).normalize()
    }

    #[inline]
    pub fn centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (a + b + c) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Enclosed volume by the divergence theorem; positive for outward
    /// orientation.
    pub fn signed_volume(&self) -> f64 {
        let mut v = 0.0;
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.corners(t);
            v += a.dot(&b.cross(c));
        }
        v / 6.0
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    /// Checks the closed-manifold and orientation invariants.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.len() < 4 || self.triangles.len() < 4 {
            return Err(Error::InvalidMesh(format!(
                "{} vertices / {} triangles, need at least 4",
                self.vertices.len(),
                self.triangles.len()
            )));
        }
        let nv = self.vertices.len();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!("triangle {t} has bad indices {tri:?}")));
            }
            let area = self.area(t);
            if !(area > MIN_TRIANGLE_AREA) {
                return Err(Error::DegenerateElement { area });
            }
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge {e:?} used twice in the same direction"
                    )));
                }
            }
        }
        let mut open: Vec<(usize, usize)> = directed
            .keys()
            .filter(|&&(a, b)| !directed.contains_key(&(b, a)))
            .copied()
            .collect();
        if !open.is_empty() {
            open.sort_unstable();
            return Err(Error::OpenSurface(format!(
                "{} boundary edges, first {:?}",
                open.len(),
                open[0]
            )));
        }
        let vol = self.signed_volume();
        if !(vol > 0.0) {
            return Err(Error::InvalidMesh(format!("signed volume {vol:e} is not positive")));
        }
        Ok(())
    }

    /// Incident triangles per vertex, in increasing triangle order.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                out[v].push(t);
            }
        }
        out
    }

    pub fn vertex_kinds(&self) -> Vec<VertexKind> {
        let mut free = vec![false; self.vertices.len()];
        let mut solid = vec![false; self.vertices.len()];
        for (tri, &l) in self.triangles.iter().zip(&self.labels) {
            for &v in tri {
                match l {
                    Label::Free => free[v] = true,
                    Label::Solid => solid[v] = true,
                }
            }
        }
        free.iter()
            .zip(&solid)
            .map(|(&f, &s)| match (f, s) {
                (true, true) => VertexKind::Contact,
                (true, false) => VertexKind::Free,
                _ => VertexKind::Solid,
            })
            .collect()
    }

    /// Area-weighted vertex normals; falls back to angle weighting where the
    /// area-weighted sum vanishes.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        self.vertex_normals_where(|_| true)
    }

    /// Vertex normals built only from triangles accepted by `keep`. Vertices
    /// with no accepted triangle get the normal from all incident triangles.
    pub fn vertex_normals_where(&self, keep: impl Fn(usize) -> bool) -> Vec<Vec3> {
        let nv = self.vertices.len();
        let mut acc = vec![Vec3::zeros(); nv];
        let mut any = vec![false; nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            if !keep(t) {
                continue;
            }
            let n = self.area_vector(t);
            for &v in tri {
                acc[v] += n;
                any[v] = true;
            }
        }
        let mut out = vec![Vec3::zeros(); nv];
        let mut fallback = Vec::new();
        for v in 0..nv {
            let nn = acc[v].norm();
            if any[v] && nn > 1e-300 {
                out[v] = acc[v] / nn;
            } else {
                fallback.push(v);
            }
        }
        if !fallback.is_empty() {
            let mut ang = vec![Vec3::zeros(); nv];
            for (t, tri) in self.triangles.iter().enumerate() {
                let n = self.area_vector(t);
                let nn = n.norm();
                if nn == 0.0 {
                    continue;
                }
                let [a, b, c] = self.corners(t);
                let w = crate::geom::triangle_angles(a, b, c);
                for k in 0..3 {
                    if any[tri[k]] && !keep(t) {
                        continue;
                    }
                    ang[tri[k]] += n / nn * w[k];
                }
            }
            for v in fallback {
                let nn = ang[v].norm();
                out[v] = if nn > 0.0 { ang[v] / nn } else { Vec3::y() };
            }
        }
        out
    }

    /// Unique undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn translate(&mut self, d: &Vec3) {
        for p in &mut self.vertices {
            *p += d;
        }
    }

    /// Winding number of the closed surface around `x` (1 inside, 0 outside).
    pub fn winding_number(&self, x: &Vec3) -> f64 {
        let mut w = 0.0;
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.corners(t);
            w += crate::geom::solid_angle(x, a, b, c);
        }
        w / (4.0 * PI)
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.winding_number(x) > 0.5
    }
}

fn orient(tris: &mut Vec<[usize; 3]>, verts: &[Vec3], tri: [usize; 3], outward: Vec3) {
    let [a, b, c] = tri;
    let n = (verts[b] - verts[a]).cross(&(verts[c] - verts[a]));
    if n.dot(&outward) >= 0.0 {
        tris.push(tri);
    } else {
        tris.push([a, c, b]);
    }
}

/// Icosahedron refined `subdivisions` times and projected to a sphere.
/// Every triangle is labelled `label`.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize, label: Label) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(tris.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let verts: Vec<Vec3> = verts.iter().map(|v| center + v * radius).collect();
    let edge = (verts[tris[0][0]] - verts[tris[0][1]]).norm();
    let n = tris.len();
    SurfaceMesh::new(verts, tris, vec![label; n], edge)
}

/// Rectangular tank `[min.x, max.x] x [min.y, surface] x [min.z, max.z]`.
/// The top is a FREE surface at height `min.y + depth + eta(x, z)`; walls
/// and floor are SOLID. Side-wall vertices are stretched vertically so the
/// walls meet the displaced surface.
pub fn box_tank(
    min: Vec3,
    size_xz: (f64, f64),
    depth: f64,
    target_edge: f64,
    eta: impl Fn(f64, f64) -> f64,
) -> SurfaceMesh {
    let nx = ((size_xz.0 / target_edge).round() as usize).max(1);
    let nz = ((size_xz.1 / target_edge).round() as usize).max(1);
    let ny = ((depth / target_edge).round() as usize).max(1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut verts = Vec::new();
    let pos = |i: usize, j: usize, k: usize| {
        let x = min.x + size_xz.0 * i as f64 / nx as f64;
        let z = min.z + size_xz.1 * k as f64 / nz as f64;
        let top = depth + eta(x, z);
        Vec3::new(x, min.y + top * j as f64 / ny as f64, z)
    };
    let mut vid = |key: [usize; 3], verts: &mut Vec<Vec3>| -> usize {
        *index.entry(key).or_insert_with(|| {
            verts.push(pos(key[0], key[1], key[2]));
            verts.len() - 1
        })
    };
    let mut tris = Vec::new();
    let mut labels = Vec::new();
    let dims = [nx, ny, nz];
    // each face: fixed axis, side (0 or max), and the two in-plane axes
    for axis in 0..3 {
        for side in 0..2 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let mut outward = Vec3::zeros();
            outward[axis] = if side == 0 { -1.0 } else { 1.0 };
            let label = if axis == 1 && side == 1 { Label::Free } else { Label::Solid };
            for a in 0..dims[u] {
                for b in 0..dims[v] {
                    let mut keys = [[0usize; 3]; 4];
                    for (q, (da, db)) in [(0, 0), (1, 0), (1, 1), (0, 1)].iter().enumerate() {
                        let mut key = [0usize; 3];
                        key[axis] = side * dims[axis];
                        key[u] = a + da;
                        key[v] = b + db;
                        keys[q] = key;
                    }
                    let ids: Vec<usize> = keys.iter().map(|k| vid(*k, &mut verts)).collect();
                    // alternate the diagonal for a more isotropic mesh
                    let (t0, t1) = if (a + b) % 2 == 0 {
                        ([ids[0], ids[1], ids[2]], [ids[0], ids[2], ids[3]])
                    } else {
                        ([ids[0], ids[1], ids[3]], [ids[1], ids[2], ids[3]])
                    };
                    orient(&mut tris, &verts, t0, outward);
                    orient(&mut tris, &verts, t1, outward);
                    labels.push(label);
                    labels.push(label);
                }
            }
        }
    }
    SurfaceMesh::new(verts, tris, labels, target_edge)
}

/// Cylindrical tank of radius `radius` around the vertical axis through
/// `center_xz`, floor at `floor_y`, FREE top disc at `floor_y + depth + eta`.
pub fn cylinder_tank(
    center_xz: (f64, f64),
    radius: f64,
    floor_y: f64,
    depth: f64,
    target_edge: f64,
    eta: impl Fn(f64, f64) -> f64,
) -> SurfaceMesh {
    let rings = ((radius / target_edge).round() as usize).max(1);
    let rows = ((depth / target_edge).round() as usize).max(1);
    let ring_count = |m: usize| if m == 0 { 1 } else { 6 * m };
    let outer = ring_count(rings);
    let mut verts: Vec<Vec3> = Vec::new();
    let mut tris = Vec::new();
    let mut labels = Vec::new();
    let at = |r: f64, th: f64, y: f64| Vec3::new(center_xz.0 + r * th.cos(), y, center_xz.1 + r * th.sin());
    let top_y = |x: f64, z: f64| floor_y + depth + eta(x, z);

    // wall rings from floor (row 0) to top (row `rows`), shared with discs
    let mut wall: Vec<Vec<usize>> = Vec::new();
    for row in 0..=rows {
        let mut ids = Vec::with_capacity(outer);
        for s in 0..outer {
            let th = 2.0 * PI * s as f64 / outer as f64;
            let p = at(radius, th, 0.0);
            let y = floor_y + (top_y(p.x, p.z) - floor_y) * row as f64 / rows as f64;
            verts.push(Vec3::new(p.x, y, p.z));
            ids.push(verts.len() - 1);
        }
        wall.push(ids);
    }
    for row in 0..rows {
        let (lo, hi) = (&wall[row], &wall[row + 1]);
        for s in 0..outer {
            let s1 = (s + 1) % outer;
            let c = verts[lo[s]];
            let outward = Vec3::new(c.x - center_xz.0, 0.0, c.z - center_xz.1);
            orient(&mut tris, &verts, [lo[s], lo[s1], hi[s1]], outward);
            orient(&mut tris, &verts, [lo[s], hi[s1], hi[s]], outward);
            labels.push(Label::Solid);
            labels.push(Label::Solid);
        }
    }

    for (top, ring_outer) in [(false, wall[0].clone()), (true, wall[rows].clone())] {
        let label = if top { Label::Free } else { Label::Solid };
        let outward = if top { Vec3::y() } else { -Vec3::y() };
        let mut prev: Vec<usize> = Vec::new();
        for m in 0..=rings {
            let ids: Vec<usize> = if m == rings {
                ring_outer.clone()
            } else {
                let n = ring_count(m);
                let r = radius * m as f64 / rings as f64;
                (0..n)
                    .map(|s| {
                        // stagger alternate rings for better angles
                        let th = 2.0 * PI * (s as f64 + 0.5 * (m % 2) as f64) / n as f64;
                        let p = at(r, th, 0.0);
                        let y = if top { top_y(p.x, p.z) } else { floor_y };
                        verts.push(Vec3::new(p.x, y, p.z));
                        verts.len() - 1
                    })
                    .collect()
            };
            if m > 0 {
                stitch_rings(&verts, &prev, &ids, center_xz, &mut |t| {
                    orient(&mut tris, &verts, t, outward);
                    labels.push(label);
                });
            }
            prev = ids;
        }
    }
    SurfaceMesh::new(verts, tris, labels, target_edge)
}

/// Triangulates the annulus between two closed vertex rings by advancing
/// along whichever ring has the smaller next polar angle.
fn stitch_rings(
    verts: &[Vec3],
    inner: &[usize],
    outer: &[usize],
    c: (f64, f64),
    emit: &mut impl FnMut([usize; 3]),
) {
    let angle = |i: usize| {
        let p = verts[i];
        let a = (p.z - c.1).atan2(p.x - c.0);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    };
    if inner.len() == 1 {
        let n = outer.len();
        for s in 0..n {
            emit([inner[0], outer[s], outer[(s + 1) % n]]);
        }
        return;
    }
    let start = |ring: &[usize]| {
        (0..ring.len())
            .min_by(|&a, &b| angle(ring[a]).partial_cmp(&angle(ring[b])).unwrap())
            .unwrap()
    };
    let (ni, no) = (inner.len(), outer.len());
    let (si, so) = (start(inner), start(outer));
    let unwrap = |ring: &[usize], s: usize, k: usize| {
        let a = angle(ring[(s + k) % ring.len()]);
        let a0 = angle(ring[s]);
        if k > 0 && a <= a0 {
            a + 2.0 * PI
        } else {
            a
        }
    };
    let (mut i, mut o) = (0usize, 0usize);
    while i < ni || o < no {
        let ai = if i < ni { unwrap(inner, si, i + 1) } else { f64::INFINITY };
        let ao = if o < no { unwrap(outer, so, o + 1) } else { f64::INFINITY };
        let a = inner[(si + i) % ni];
        let b = outer[(so + o) % no];
        if ai <= ao && i < ni {
            emit([a, b, inner[(si + i + 1) % ni]]);
            i += 1;
        } else {
            emit([a, b, outer[(so + o + 1) % no]]);
            o += 1;
        }
    }
}

/// Writes the mesh as OBJ. Each `v` line is followed by `# v vx vy vz`
/// carrying the vertex velocity and each `f` line by `# label FREE|SOLID`
/// (SOLID labels append the wall velocity).
pub fn write_obj<W: Write>(mut w: W, mesh: &SurfaceMesh) -> Result<()> {
    writeln!(w, "# edge bounds {} {}", mesh.min_edge, mesh.max_edge)?;
    for (p, v) in mesh.vertices.iter().zip(&mesh.velocities) {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
        writeln!(w, "# v {} {} {}", v.x, v.y, v.z)?;
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        writeln!(w, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1)?;
        match mesh.labels[t] {
            Label::Free => writeln!(w, "# label FREE")?,
            Label::Solid => {
                let u = mesh.solid_velocity[t];
                writeln!(w, "# label SOLID {} {} {}", u.x, u.y, u.z)?
            }
        }
    }
    Ok(())
}

/// Reads the OBJ dialect of [`write_obj`]. Missing velocity comments give
/// zero velocity, missing labels default to SOLID. The result is validated.
pub fn read_obj<R: BufRead>(r: R) -> Result<SurfaceMesh> {
    let mut verts = Vec::new();
    let mut vels: Vec<Vec3> = Vec::new();
    let mut tris = Vec::new();
    let mut labels: Vec<Label> = Vec::new();
    let mut svel: Vec<Vec3> = Vec::new();
    let mut bounds = None;
    let bad = |n: usize, msg: &str| Error::Format(format!("obj line {}: {msg}", n + 1));
    let nums = |it: &mut dyn Iterator<Item = &str>, k: usize, n: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = it.take(k).map(|s| s.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad(n, "bad number"))?;
        if v.len() != k {
            return Err(bad(n, "too few values"));
        }
        Ok(v)
    };
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c = nums(&mut it, 3, n)?;
                verts.push(Vec3::new(c[0], c[1], c[2]));
                vels.push(Vec3::zeros());
            }
            Some("f") => {
                let mut idx = [0usize; 3];
                for slot in idx.iter_mut() {
                    let tok = it.next().ok_or_else(|| bad(n, "face needs 3 indices"))?;
                    let first = tok.split('/').next().unwrap();
                    let i: usize = first.parse().map_err(|_| bad(n, "bad index"))?;
                    if i == 0 {
                        return Err(bad(n, "indices are 1-based"));
                    }
                    *slot = i - 1;
                }
                if it.next().is_some() {
                    return Err(bad(n, "only triangles are supported"));
                }
                tris.push(idx);
                labels.push(Label::Solid);
                svel.push(Vec3::zeros());
            }
            Some("#") => match it.next() {
                Some("v") => {
                    let c = nums(&mut it, 3, n)?;
                    let last = vels.last_mut().ok_or_else(|| bad(n, "velocity before any vertex"))?;
                    *last = Vec3::new(c[0], c[1], c[2]);
                }
                Some("label") => {
                    let l = it.next().and_then(Label::parse).ok_or_else(|| bad(n, "label must be FREE or SOLID"))?;
                    let t = labels.len().checked_sub(1).ok_or_else(|| bad(n, "label before any face"))?;
                    labels[t] = l;
                    if l == Label::Solid {
                        let rest: Vec<&str> = it.collect();
                        if rest.len() == 3 {
                            let c = nums(&mut rest.into_iter(), 3, n)?;
                            svel[t] = Vec3::new(c[0], c[1], c[2]);
                        }
                    }
                }
                Some("edge") => {
                    if it.next() == Some("bounds") {
                        let c = nums(&mut it, 2, n)?;
                        bounds = Some((c[0], c[1]));
                    }
                }
                _ => {}
            },
            _ => {}
        }
    }
    let nt = tris.len();
    let mut mesh = SurfaceMesh::new(verts, tris, labels, 1.0);
    mesh.velocities = vels;
    mesh.solid_velocity = svel;
    debug_assert_eq!(mesh.solid_velocity.len(), nt);
    match bounds {
        Some((lo, hi)) => {
            mesh.min_edge = lo;
            mesh.max_edge = hi;
        }
        None => {
            let e = mesh.edges();
            let mean = e.iter().map(|&(a, b)| (mesh.vertices[a] - mesh.vertices[b]).norm()).sum::<f64>() / e.len().max(1) as f64;
            mesh.min_edge = 0.5 * mean;
            mesh.max_edge = 1.5 * mean;
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Applies a sidecar label file: one `FREE` or `SOLID` token per triangle,
/// blank lines and `#` comments ignored.
pub fn apply_label_sidecar<R: BufRead>(mesh: &mut SurfaceMesh, r: R) -> Result<()> {
    let mut labels = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.split('#').next().unwrap().trim();
        if s.is_empty() {
            continue;
        }
        labels.push(Label::parse(s).ok_or_else(|| Error::Format(format!("labels line {}: `{s}`", n + 1)))?);
    }
    if labels.len() != mesh.num_triangles() {
        return Err(Error::Format(format!(
            "label file has {} entries for {} triangles",
            labels.len(),
            mesh.num_triangles()
        )));
    }
    mesh.labels = labels;
    Ok(())
}
