//! Vertex advection and fixed-topology remeshing (split, collapse, flip).

use std::collections::{HashMap, HashSet};

use super::{Label, SurfaceMesh};
use crate::geom::{triangle_angles, triangles_intersect};
use crate::{Error, Result, Vec3};

/// Flips and collapses only act where neighboring triangle normals agree to
/// within this cosine (about 10 degrees), so sharp features are kept.
const FLAT_COS: f64 = 0.985;
/// Minimum-angle gain (radians) required for a flip.
const FLIP_GAIN: f64 = 1e-3;

/// Moves every vertex by `dt v` (constrained to slide along the solid
/// triangles it touches), then remeshes and checks for self-intersection.
pub fn advect_and_remesh(mesh: &SurfaceMesh, dt: f64) -> Result<SurfaceMesh> {
    let vmax = mesh.max_speed();
    if vmax > 0.0 {
        let limit = mesh.min_edge / vmax;
        if dt > limit * (1.0 + 1e-9) {
            return Err(Error::StepTooLarge { dt, limit });
        }
    }
    let mut out = mesh.clone();
    let disp = constrained_velocities(mesh);
    for (x, v) in out.vertices.iter_mut().zip(&disp) {
        *x += v * dt;
    }
    remesh(&mut out);
    out.validate()?;
    let pairs = intersecting_pairs(&out);
    if pairs > 0 {
        return Err(Error::SurfaceCollision { pairs });
    }
    Ok(out)
}

/// Vertex velocities with the components normal to incident SOLID triangles
/// (relative to their wall velocity) removed.
pub fn constrained_velocities(mesh: &SurfaceMesh) -> Vec<Vec3> {
    let vt = mesh.vertex_triangles();
    (0..mesh.num_vertices())
        .map(|i| {
            let mut basis: Vec<Vec3> = Vec::new();
            let mut us = Vec3::zeros();
            let mut ns = 0;
            for &t in &vt[i] {
                if mesh.labels[t] != Label::Solid {
                    continue;
                }
                us += mesh.solid_velocity[t];
                ns += 1;
                let mut n = mesh.normal(t);
                for b in &basis {
                    n -= b * b.dot(&n);
                }
                let l = n.norm();
                if l > 0.05 && basis.len() < 3 {
                    basis.push(n / l);
                }
            }
            if ns == 0 {
                return mesh.velocities[i];
            }
            let us = us / ns as f64;
            let mut rel = mesh.velocities[i] - us;
            for b in &basis {
                rel -= b * b.dot(&rel);
            }
            us + rel
        })
        .collect()
}

/// One pass each of splitting, collapsing and flipping.
pub fn remesh(mesh: &mut SurfaceMesh) {
    split_long_edges(mesh);
    collapse_short_edges(mesh);
    flip_edges(mesh);
}

fn edge_map(mesh: &SurfaceMesh) -> HashMap<(usize, usize), usize> {
    let mut m = HashMap::with_capacity(3 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            m.insert((tri[k], tri[(k + 1) % 3]), t);
        }
    }
    m
}

fn opposite(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|&&v| v != a && v != b).unwrap()
}

fn len(mesh: &SurfaceMesh, a: usize, b: usize) -> f64 {
    (mesh.vertices[a] - mesh.vertices[b]).norm()
}

fn push_triangle(mesh: &mut SurfaceMesh, tri: [usize; 3], like: usize) {
    mesh.triangles.push(tri);
    mesh.labels.push(mesh.labels[like]);
    mesh.solid_velocity.push(mesh.solid_velocity[like]);
}

/// Splits edges longer than `max_edge` at their midpoints, longest first.
/// A triangle takes part in at most one split per pass.
pub fn split_long_edges(mesh: &mut SurfaceMesh) -> usize {
    let em = edge_map(mesh);
    let mut cand: Vec<(f64, usize, usize)> = mesh
        .edges()
        .into_iter()
        .map(|(a, b)| (len(mesh, a, b), a, b))
        .filter(|e| e.0 > mesh.max_edge)
        .collect();
    cand.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut used = vec![false; mesh.triangles.len()];
    let mut count = 0;
    for (_, a, b) in cand {
        let (Some(&t1), Some(&t2)) = (em.get(&(a, b)), em.get(&(b, a))) else {
            continue;
        };
        if used[t1] || used[t2] {
            continue;
        }
        used[t1] = true;
        used[t2] = true;
        let c = opposite(&mesh.triangles[t1], a, b);
        let d = opposite(&mesh.triangles[t2], a, b);
        let m = mesh.vertices.len();
        mesh.vertices.push((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
        mesh.velocities.push((mesh.velocities[a] + mesh.velocities[b]) * 0.5);
        // t1 = (a, b, c) and t2 = (b, a, d) up to rotation
        mesh.triangles[t1] = [a, m, c];
        push_triangle(mesh, [m, b, c], t1);
        mesh.triangles[t2] = [b, m, d];
        push_triangle(mesh, [m, a, d], t2);
        count += 1;
    }
    count
}

fn flat_vertex(mesh: &SurfaceMesh, vt: &[Vec<usize>], alive: &[bool], v: usize) -> bool {
    let tris: Vec<usize> = vt[v].iter().copied().filter(|&t| alive[t]).collect();
    if tris.is_empty() {
        return false;
    }
    let label = mesh.labels[tris[0]];
    let n0 = mesh.normal(tris[0]);
    tris.iter().all(|&t| mesh.labels[t] == label && mesh.normal(t).dot(&n0) > FLAT_COS)
}

/// Collapses edges shorter than `min_edge`, shortest first. A vertex moves
/// only if its neighborhood is flat and carries a single label; the merged
/// vertex sits at the midpoint when both ends may move, else on the fixed
/// end. Each collapse locks its one-ring for the rest of the pass.
pub fn collapse_short_edges(mesh: &mut SurfaceMesh) -> usize {
    let mut cand: Vec<(f64, usize, usize)> = mesh
        .edges()
        .into_iter()
        .map(|(a, b)| (len(mesh, a, b), a, b))
        .filter(|e| e.0 < mesh.min_edge)
        .collect();
    if cand.is_empty() {
        return 0;
    }
    cand.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut vt = mesh.vertex_triangles();
    let mut alive_t = vec![true; mesh.triangles.len()];
    let mut alive_v = vec![true; mesh.vertices.len()];
    let mut locked = vec![false; mesh.vertices.len()];
    let mut count = 0;
    let mut live_vertices = mesh.vertices.len();
    for (_, a, b) in cand {
        if live_vertices <= 4 || locked[a] || locked[b] || !alive_v[a] || !alive_v[b] {
            continue;
        }
        let ring = |v: usize, vt: &Vec<Vec<usize>>, alive_t: &Vec<bool>| -> HashSet<usize> {
            vt[v].iter()
                .filter(|&&t| alive_t[t])
                .flat_map(|&t| mesh.triangles[t])
                .filter(|&w| w != v)
                .collect()
        };
        let ra = ring(a, &vt, &alive_t);
        let rb = ring(b, &vt, &alive_t);
        let shared: Vec<usize> = ra.intersection(&rb).copied().collect();
        let edge_tris: Vec<usize> = vt[a]
            .iter()
            .copied()
            .filter(|&t| alive_t[t] && mesh.triangles[t].contains(&b))
            .collect();
        // link condition keeps the surface a manifold
        if shared.len() != 2 || edge_tris.len() != 2 {
            continue;
        }
        let ma = flat_vertex(mesh, &vt, &alive_t, a);
        let mb = flat_vertex(mesh, &vt, &alive_t, b);
        let (keep, gone, pos, vel) = match (ma, mb) {
            (true, true) => {
                let la = mesh.labels[vt[a].iter().copied().find(|&t| alive_t[t]).unwrap()];
                let lb = mesh.labels[vt[b].iter().copied().find(|&t| alive_t[t]).unwrap()];
                if la != lb {
                    continue;
                }
                (
                    b,
                    a,
                    (mesh.vertices[a] + mesh.vertices[b]) * 0.5,
                    (mesh.velocities[a] + mesh.velocities[b]) * 0.5,
                )
            }
            (true, false) => (b, a, mesh.vertices[b], mesh.velocities[b]),
            (false, true) => (a, b, mesh.vertices[a], mesh.velocities[a]),
            (false, false) => continue,
        };
        // reject collapses that flip or degenerate a surviving triangle
        let mut ok = true;
        for &v in &[a, b] {
            for &t in &vt[v] {
                if !alive_t[t] || edge_tris.contains(&t) {
                    continue;
                }
                let tri = mesh.triangles[t];
                let p = tri.map(|w| if w == a || w == b { pos } else { mesh.vertices[w] });
                let n_new = (p[1] - p[0]).cross(&(p[2] - p[0]));
                let n_old = mesh.area_vector(t);
                if n_new.norm() < 1e-12 || n_new.dot(&n_old) <= 0.5 * n_new.norm() * n_old.norm() {
                    ok = false;
                }
            }
        }
        if !ok {
            continue;
        }
        for &t in &edge_tris {
            alive_t[t] = false;
        }
        let moved: Vec<usize> = vt[gone].iter().copied().filter(|&t| alive_t[t]).collect();
        for &t in &moved {
            for w in mesh.triangles[t].iter_mut() {
                if *w == gone {
                    *w = keep;
                }
            }
            vt[keep].push(t);
        }
        vt[gone].clear();
        alive_v[gone] = false;
        live_vertices -= 1;
        mesh.vertices[keep] = pos;
        mesh.velocities[keep] = vel;
        for w in ra.iter().chain(&rb) {
            locked[*w] = true;
        }
        locked[keep] = true;
        count += 1;
    }
    if count > 0 {
        compact(mesh, &alive_v, &alive_t);
    }
    count
}

fn compact(mesh: &mut SurfaceMesh, alive_v: &[bool], alive_t: &[bool]) {
    let mut map = vec![usize::MAX; alive_v.len()];
    let mut verts = Vec::new();
    let mut vels = Vec::new();
    for (i, &a) in alive_v.iter().enumerate() {
        if a {
            map[i] = verts.len();
            verts.push(mesh.vertices[i]);
            vels.push(mesh.velocities[i]);
        }
    }
    let mut tris = Vec::new();
    let mut labels = Vec::new();
    let mut us = Vec::new();
    for (t, &a) in alive_t.iter().enumerate() {
        if a {
            tris.push(mesh.triangles[t].map(|v| map[v]));
            labels.push(mesh.labels[t]);
            us.push(mesh.solid_velocity[t]);
        }
    }
    mesh.vertices = verts;
    mesh.velocities = vels;
    mesh.triangles = tris;
    mesh.labels = labels;
    mesh.solid_velocity = us;
}

fn min_angle(mesh: &SurfaceMesh, tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| &mesh.vertices[v]);
    triangle_angles(a, b, c).into_iter().fold(f64::INFINITY, f64::min)
}

/// Flips edges between near-coplanar triangles of equal label when the
/// smallest angle of the pair improves. Each triangle flips at most once.
pub fn flip_edges(mesh: &mut SurfaceMesh) -> usize {
    let em = edge_map(mesh);
    let mut used = vec![false; mesh.triangles.len()];
    let mut count = 0;
    let mut present: HashSet<(usize, usize)> = mesh.edges().into_iter().collect();
    for (a, b) in mesh.edges() {
        let (Some(&t1), Some(&t2)) = (em.get(&(a, b)), em.get(&(b, a))) else {
            continue;
        };
        if used[t1] || used[t2] {
            continue;
        }
        if mesh.labels[t1] != mesh.labels[t2] || mesh.solid_velocity[t1] != mesh.solid_velocity[t2] {
            continue;
        }
        let n1 = mesh.normal(t1);
        let n2 = mesh.normal(t2);
        if n1.dot(&n2) < FLAT_COS {
            continue;
        }
        let c = opposite(&mesh.triangles[t1], a, b);
        let d = opposite(&mesh.triangles[t2], a, b);
        if present.contains(&(c.min(d), c.max(d))) {
            continue;
        }
        let old = min_angle(mesh, mesh.triangles[t1]).min(min_angle(mesh, mesh.triangles[t2]));
        let new1 = [c, a, d];
        let new2 = [d, b, c];
        let new = min_angle(mesh, new1).min(min_angle(mesh, new2));
        if new <= old + FLIP_GAIN {
            continue;
        }
        let p = |t: [usize; 3]| {
            let [x, y, z] = t.map(|v| mesh.vertices[v]);
            (y - x).cross(&(z - x))
        };
        let (q1, q2) = (p(new1), p(new2));
        if q1.dot(&n1) <= 0.0 || q2.dot(&n1) <= 0.0 {
            continue;
        }
        mesh.triangles[t1] = new1;
        mesh.triangles[t2] = new2;
        used[t1] = true;
        used[t2] = true;
        present.remove(&(a, b));
        present.insert((c.min(d), c.max(d)));
        count += 1;
    }
    count
}

/// Number of intersecting triangle pairs that do not share an edge.
pub fn intersecting_pairs(mesh: &SurfaceMesh) -> usize {
    let nt = mesh.num_triangles();
    if nt == 0 {
        return 0;
    }
    let cell = mesh.max_edge.max(1e-9);
    let key = |x: f64| (x / cell).floor() as i64;
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut boxes = Vec::with_capacity(nt);
    for t in 0..nt {
        let [a, b, c] = mesh.corners(t);
        let lo = a.inf(b).inf(c);
        let hi = a.sup(b).sup(c);
        boxes.push((lo, hi));
        for i in key(lo.x)..=key(hi.x) {
            for j in key(lo.y)..=key(hi.y) {
                for k in key(lo.z)..=key(hi.z) {
                    grid.entry((i, j, k)).or_default().push(t);
                }
            }
        }
    }
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut keys: Vec<_> = grid.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let list = &grid[&k];
        for (ii, &t0) in list.iter().enumerate() {
            for &t1 in &list[ii + 1..] {
                let (lo0, hi0) = boxes[t0];
                let (lo1, hi1) = boxes[t1];
                if (0..3).any(|a| lo0[a] > hi1[a] || lo1[a] > hi0[a]) {
                    continue;
                }
                let (p, q) = (t0.min(t1), t0.max(t1));
                if seen.contains(&(p, q)) {
                    continue;
                }
                let shared = mesh.triangles[p].iter().filter(|v| mesh.triangles[q].contains(v)).count();
                if shared >= 2 {
                    continue;
                }
                if triangles_intersect(mesh.corners(p), mesh.corners(q)) {
                    seen.insert((p, q));
                }
            }
        }
    }
    seen.len()
}
