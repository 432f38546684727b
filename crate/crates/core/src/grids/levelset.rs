use super::block::{BlockGrid, Coord};
use super::{Lattice, VoxelBox};
use crate::Vec3;

/// Narrow-band signed distance field sampled at voxel centers, negative
/// inside the liquid. Voxels outside the stored band read as `+bandwidth`.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub lattice: Lattice,
    pub bandwidth: f64,
    pub values: BlockGrid<f64>,
}

impl LevelSet {
    pub fn new(lattice: Lattice, bandwidth: f64) -> Self {
        assert!(bandwidth > 0.0);
        Self {
            lattice,
            bandwidth,
            values: BlockGrid::new(bandwidth),
        }
    }

    pub fn dx(&self) -> f64 {
        self.lattice.dx
    }

    #[inline]
    pub fn value(&self, c: Coord) -> f64 {
        self.values.value(c)
    }

    /// Stores a value clamped to the band.
    #[inline]
    pub fn set(&mut self, c: Coord, v: f64) {
        self.values
            .set(c, v.clamp(-self.bandwidth, self.bandwidth));
    }

    /// Trilinear interpolation between voxel centers.
    pub fn sample(&self, x: &Vec3) -> f64 {
        let mut s = (x - self.lattice.origin) / self.lattice.dx - Vec3::repeat(0.5);
        super::mac::snap(&mut s);
        let i0 = [s.x.floor(), s.y.floor(), s.z.floor()];
        let f = [s.x - i0[0], s.y - i0[1], s.z - i0[2]];
        let b = [i0[0] as i32, i0[1] as i32, i0[2] as i32];
        let mut acc = 0.0;
        for dk in 0..2 {
            let wz = if dk == 0 { 1.0 - f[2] } else { f[2] };
            for dj in 0..2 {
                let wy = if dj == 0 { 1.0 - f[1] } else { f[1] };
                for di in 0..2 {
                    let wx = if di == 0 { 1.0 - f[0] } else { f[0] };
                    acc += wx * wy * wz * self.value([b[0] + di, b[1] + dj, b[2] + dk]);
                }
            }
        }
        acc
    }

    /// Central-difference gradient of the interpolated field.
    pub fn gradient(&self, x: &Vec3) -> Vec3 {
        let h = 0.5 * self.lattice.dx;
        let mut g = Vec3::zeros();
        for a in 0..3 {
            let mut e = Vec3::zeros();
            e[a] = h;
            g[a] = (self.sample(&(x + e)) - self.sample(&(x - e))) / (2.0 * h);
        }
        g
    }

    /// Recomputes distances inside a band of `bandwidth` by fast sweeping.
    ///
    /// Voxels next to a sign change are seeded with `phi / |grad phi|` and
    /// held fixed during the sweep. The band is dilated as needed; every
    /// inside voxel stays stored so the sign of deep interior points survives
    /// clamping.
    pub fn reinitialize(&mut self, bandwidth: f64) {
        let dx = self.lattice.dx;
        let Some((lo, hi)) = self.values.bounds() else {
            self.bandwidth = bandwidth;
            self.values = BlockGrid::new(bandwidth);
            return;
        };
        let margin = (bandwidth / dx).ceil() as i32 + 1;
        let bx = VoxelBox::new(lo, hi).expanded(margin);
        let dims = bx.dims();
        let n = bx.volume();

        let mut orig = vec![self.bandwidth; n];
        for (c, v) in self.values.iter() {
            orig[bx.index(c)] = v;
        }
        let sign_neg: Vec<bool> = orig.iter().map(|&v| v < 0.0).collect();
        let mut dist = vec![f64::INFINITY; n];
        let mut fixed = vec![false; n];
        let strides = [1usize, dims[0], dims[0] * dims[1]];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let idx = i + dims[0] * (j + dims[1] * k);
                    let ijk = [i, j, k];
                    let mut interface = false;
                    for a in 0..3 {
                        if ijk[a] > 0 && sign_neg[idx - strides[a]] != sign_neg[idx] {
                            interface = true;
                        }
                        if ijk[a] + 1 < dims[a] && sign_neg[idx + strides[a]] != sign_neg[idx] {
                            interface = true;
                        }
                    }
                    if interface {
                        // first-order distance estimate phi/|grad phi|, which
                        // leaves an exact distance field (nearly) untouched
                        let mut g2 = 0.0;
                        for a in 0..3 {
                            let lo = if ijk[a] > 0 { idx - strides[a] } else { idx };
                            let hi = if ijk[a] + 1 < dims[a] { idx + strides[a] } else { idx };
                            let span = (hi - lo) / strides[a];
                            if span > 0 {
                                let d = (orig[hi] - orig[lo]) / (span as f64 * dx);
                                g2 += d * d;
                            }
                        }
                        let g = g2.sqrt().clamp(0.1, 10.0);
                        dist[idx] = (orig[idx].abs() / g).min(dx);
                        fixed[idx] = true;
                    }
                }
            }
        }

        fast_sweep(&mut dist, &fixed, dims, dx);

        let mut values = BlockGrid::new(bandwidth);
        for c in bx.iter() {
            let idx = bx.index(c);
            let d = dist[idx].min(bandwidth);
            if sign_neg[idx] {
                values.set(c, -d);
            } else if d < bandwidth {
                values.set(c, d);
            }
        }
        self.values = values;
        self.bandwidth = bandwidth;
    }

    /// Dense copy of the field over `bx` (background outside the band).
    pub(crate) fn dense(&self, bx: &VoxelBox) -> Vec<f64> {
        let mut out = vec![self.bandwidth; bx.volume()];
        for (c, v) in self.values.iter() {
            if bx.contains(c) {
                out[bx.index(c)] = v;
            }
        }
        out
    }
}

/// Godunov fast sweeping for `|grad d| = 1` over a dense box; eight sweeps,
/// one per axis-direction ordering.
fn fast_sweep(dist: &mut [f64], fixed: &[bool], dims: [usize; 3], h: f64) {
    let (nx, ny, nz) = (dims[0], dims[1], dims[2]);
    let strides = [1usize, nx, nx * ny];
    for sweep in 0..8 {
        let rev = [sweep & 1 != 0, sweep & 2 != 0, sweep & 4 != 0];
        for kk in 0..nz {
            let k = if rev[2] { nz - 1 - kk } else { kk };
            for jj in 0..ny {
                let j = if rev[1] { ny - 1 - jj } else { jj };
                for ii in 0..nx {
                    let i = if rev[0] { nx - 1 - ii } else { ii };
                    let idx = i + nx * (j + ny * k);
                    if fixed[idx] {
                        continue;
                    }
                    let ijk = [i, j, k];
                    let mut m = [f64::INFINITY; 3];
                    for a in 0..3 {
                        if ijk[a] > 0 {
                            m[a] = m[a].min(dist[idx - strides[a]]);
                        }
                        if ijk[a] + 1 < dims[a] {
                            m[a] = m[a].min(dist[idx + strides[a]]);
                        }
                    }
                    let cand = eikonal_update(m, h);
                    if cand < dist[idx] {
                        dist[idx] = cand;
                    }
                }
            }
        }
    }
}

fn eikonal_update(mut m: [f64; 3], h: f64) -> f64 {
    m.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let [a, b, c] = m;
    if !a.is_finite() {
        return f64::INFINITY;
    }
    let mut x = a + h;
    if x > b {
        x = 0.5 * (a + b + (2.0 * h * h - (a - b) * (a - b)).max(0.0).sqrt());
        if x > c {
            let s = a + b + c;
            let q = a * a + b * b + c * c - h * h;
            x = (s + (s * s - 3.0 * q).max(0.0).sqrt()) / 3.0;
        }
    }
    x
}

/// Union-of-balls level set: `phi(x) = min_p |x - p| - radius`, then
/// reinitialized to `bandwidth`.
///
/// The minimum is evaluated per voxel, so the result does not depend on the
/// order of `positions`. An empty input yields an empty (all outside) field.
pub fn rebuild_levelset_from_particles(
    positions: &[Vec3],
    lattice: &Lattice,
    radius: f64,
    bandwidth: f64,
) -> LevelSet {
    assert!(radius > 0.0);
    let dx = lattice.dx;
    let mut ls = LevelSet::new(*lattice, bandwidth);
    if positions.is_empty() {
        return ls;
    }
    let reach = ((radius + dx) / dx).ceil() as i32;
    let mut lo = [i32::MAX; 3];
    let mut hi = [i32::MIN; 3];
    for p in positions {
        let c = lattice.voxel_of(p);
        for a in 0..3 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a] + 1);
        }
    }
    let bx = VoxelBox::new(lo, hi).expanded(reach);
    let mut phi = vec![f64::INFINITY; bx.volume()];
    let cutoff = radius + dx;
    for p in positions {
        let c = lattice.voxel_of(p);
        for k in c[2] - reach..=c[2] + reach {
            for j in c[1] - reach..=c[1] + reach {
                for i in c[0] - reach..=c[0] + reach {
                    let v = [i, j, k];
                    let d = (lattice.voxel_center(v) - p).norm() - radius;
                    if d < cutoff {
                        let idx = bx.index(v);
                        if d < phi[idx] {
                            phi[idx] = d;
                        }
                    }
                }
            }
        }
    }
    let initial_band = bandwidth.max(cutoff);
    ls.bandwidth = initial_band;
    ls.values = BlockGrid::new(initial_band);
    for c in bx.iter() {
        let v = phi[bx.index(c)];
        if v.is_finite() {
            ls.set(c, v);
        }
    }
    ls.reinitialize(bandwidth);
    // keep the exact union-of-balls values wherever they were evaluated
    for c in bx.iter() {
        let v = phi[bx.index(c)];
        if v.is_finite() && v.abs() < bandwidth {
            ls.set(c, v);
        }
    }
    ls
}

/// Smooths a level set with `passes` applications of the separable 3-tap
/// binomial kernel (1/4, 1/2, 1/4) per axis, then restores the distance
/// property.
///
/// The band is first widened to at least `passes + 2` voxels so the kernel
/// never reads clamped values near the interface.
pub fn gaussian_smooth(phi: &LevelSet, passes: usize) -> LevelSet {
    if passes == 0 {
        return phi.clone();
    }
    let dx = phi.dx();
    let band = phi.bandwidth.max((passes + 2) as f64 * dx);
    let mut wide = phi.clone();
    wide.reinitialize(band);
    let Some((lo, hi)) = wide.values.bounds() else {
        return wide;
    };
    let bx = VoxelBox::new(lo, hi).expanded(passes as i32);
    let dims = bx.dims();
    let mut data = wide.dense(&bx);
    let mut tmp = vec![0.0; data.len()];
    let strides = [1usize, dims[0], dims[0] * dims[1]];
    for _ in 0..passes {
        for a in 0..3 {
            for k in 0..dims[2] {
                for j in 0..dims[1] {
                    for i in 0..dims[0] {
                        let ijk = [i, j, k];
                        let idx = i + dims[0] * (j + dims[1] * k);
                        let lo_v = if ijk[a] > 0 { data[idx - strides[a]] } else { band };
                        let hi_v = if ijk[a] + 1 < dims[a] {
                            data[idx + strides[a]]
                        } else {
                            band
                        };
                        tmp[idx] = 0.25 * lo_v + 0.5 * data[idx] + 0.25 * hi_v;
                    }
                }
            }
            std::mem::swap(&mut data, &mut tmp);
        }
    }
    let mut out = LevelSet::new(phi.lattice, band);
    for c in bx.iter() {
        let v = data[bx.index(c)];
        if v < band {
            out.set(c, v);
        }
    }
    out.reinitialize(band);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(dx: f64) -> Lattice {
        // voxel (0,0,0) is centered on the world origin
        Lattice::new(dx, Vec3::repeat(-0.5 * dx))
    }

    #[test]
    fn default_radius_value() {
        let dx = 0.01;
        let r = crate::flip::default_particle_radius(dx);
        assert!((r - 0.008747).abs() < 5e-7, "{r}");
    }

    #[test]
    fn single_ball() {
        let lat = lattice(0.1);
        let r = 0.15;
        let ls = rebuild_levelset_from_particles(&[Vec3::zeros()], &lat, r, 0.3);
        assert!((ls.value([0, 0, 0]) + r).abs() < 1e-12);
        assert!((ls.sample(&Vec3::zeros()) + r).abs() < 1e-12);
    }

    #[test]
    fn two_balls_pointwise_min() {
        let dx = 0.1;
        let lat = lattice(dx);
        let r = crate::flip::default_particle_radius(dx);
        let p = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(dx, 0.0, 0.0)];
        let ls = rebuild_levelset_from_particles(&p, &lat, r, 3.0 * dx);
        // voxel centers along the segment and next to it; values next to the
        // interface are the brute-force union distance
        for c in [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [-1, 0, 0], [2, 0, 0]] {
            let x = lat.voxel_center(c);
            let brute = p
                .iter()
                .map(|q| (x - q).norm() - r)
                .fold(f64::INFINITY, f64::min);
            assert!((ls.value(c) - brute).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn empty_particles_all_outside() {
        let ls = rebuild_levelset_from_particles(&[], &lattice(0.1), 0.08, 0.3);
        assert!(ls.values.is_empty());
        assert_eq!(ls.sample(&Vec3::new(1.0, 2.0, 3.0)), 0.3);
    }

    #[test]
    fn permutation_invariant_bitwise() {
        let dx = 0.05;
        let lat = lattice(dx);
        let mut pts: Vec<Vec3> = (0..60)
            .map(|i| {
                let t = i as f64;
                Vec3::new((t * 0.37).sin() * 0.2, (t * 0.11).cos() * 0.1, (t * 0.73).sin() * 0.15)
            })
            .collect();
        let r = crate::flip::default_particle_radius(dx);
        let a = rebuild_levelset_from_particles(&pts, &lat, r, 3.0 * dx);
        pts.reverse();
        pts.swap(3, 17);
        let b = rebuild_levelset_from_particles(&pts, &lat, r, 3.0 * dx);
        let va: Vec<_> = a.values.iter().collect();
        let vb: Vec<_> = b.values.iter().collect();
        assert_eq!(va.len(), vb.len());
        for (x, y) in va.iter().zip(&vb) {
            assert_eq!(x.0, y.0);
            assert_eq!(x.1.to_bits(), y.1.to_bits());
        }
    }

    fn sphere_levelset(lat: &Lattice, center: Vec3, radius: f64, band: f64) -> LevelSet {
        let mut ls = LevelSet::new(*lat, band);
        let n = ((radius + band) / lat.dx).ceil() as i32 + 1;
        let cc = lat.voxel_of(&center);
        for k in -n..=n {
            for j in -n..=n {
                for i in -n..=n {
                    let c = [cc[0] + i, cc[1] + j, cc[2] + k];
                    let d = (lat.voxel_center(c) - center).norm() - radius;
                    if d < band {
                        ls.set(c, d);
                    }
                }
            }
        }
        ls
    }

    #[test]
    fn reinit_gradient_magnitude_near_one() {
        let dx = 0.05;
        let lat = lattice(dx);
        // bumpy, non-distance input: scaled sphere field
        let mut ls = sphere_levelset(&lat, Vec3::zeros(), 0.5, 0.2);
        for (c, v) in ls.values.coords().into_iter().zip(ls.values.iter().map(|x| x.1).collect::<Vec<_>>()) {
            ls.set(c, v * 0.6);
        }
        ls.reinitialize(0.2);
        let mut checked = 0;
        for (c, v) in ls.values.iter() {
            if v.abs() > 0.2 - 1.5 * dx {
                continue;
            }
            let mut g = Vec3::zeros();
            for a in 0..3 {
                let mut p = c;
                let mut m = c;
                p[a] += 1;
                m[a] -= 1;
                g[a] = (ls.value(p) - ls.value(m)) / (2.0 * dx);
            }
            let gn = g.norm();
            assert!((0.8..=1.2).contains(&gn), "|grad| {gn} at {c:?} (phi {v})");
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn smoothing_zero_passes_identity() {
        let lat = lattice(0.05);
        let ls = sphere_levelset(&lat, Vec3::zeros(), 0.3, 0.15);
        let s = gaussian_smooth(&ls, 0);
        for (c, v) in ls.values.iter() {
            assert_eq!(s.value(c).to_bits(), v.to_bits());
        }
    }

    #[test]
    fn smoothing_preserves_plane() {
        let dx = 0.05;
        let lat = lattice(dx);
        let mut ls = LevelSet::new(lat, 0.15);
        let h = 0.0123;
        for k in -6..6 {
            for j in -12..12 {
                for i in -6..6 {
                    let c = [i, j, k];
                    let y = lat.voxel_center(c).y;
                    let d = y - h;
                    if d < 0.15 {
                        ls.set(c, d);
                    }
                }
            }
        }
        let s = gaussian_smooth(&ls, 3);
        // interface along the column through the middle of the patch
        let col = |ls: &LevelSet| {
            let mut prev = ls.value([0, -12, 0]);
            for j in -11..12 {
                let v = ls.value([0, j, 0]);
                if prev < 0.0 && v >= 0.0 {
                    let y0 = lat.voxel_center([0, j - 1, 0]).y;
                    return y0 + dx * prev / (prev - v);
                }
                prev = v;
            }
            f64::NAN
        };
        let shift = (col(&s) - h).abs();
        assert!(shift < 0.05 * dx, "shift {shift}");
    }

    #[test]
    fn smoothing_commutes_with_voxel_translation() {
        let dx = 0.05;
        let lat = lattice(dx);
        let a = sphere_levelset(&lat, Vec3::new(0.01, -0.02, 0.013), 0.3, 0.15);
        let shift = [3, -2, 5];
        let mut b = LevelSet::new(lat, 0.15);
        for (c, v) in a.values.iter() {
            b.set([c[0] + shift[0], c[1] + shift[1], c[2] + shift[2]], v);
        }
        let sa = gaussian_smooth(&a, 3);
        let sb = gaussian_smooth(&b, 3);
        assert_eq!(sa.values.active_count(), sb.values.active_count());
        for (c, v) in sa.values.iter() {
            let cb = [c[0] + shift[0], c[1] + shift[1], c[2] + shift[2]];
            assert_eq!(sb.value(cb).to_bits(), v.to_bits(), "{c:?}");
        }
    }

    /// Zero crossing along +x from the center voxel, by linear interpolation.
    fn crossing_x(f: impl Fn(i32) -> f64, dx: f64) -> f64 {
        let mut prev = f(0);
        for i in 1..40 {
            let v = f(i);
            if prev < 0.0 && v >= 0.0 {
                return dx * ((i - 1) as f64 + prev / (prev - v));
            }
            prev = v;
        }
        f64::NAN
    }

    #[test]
    fn smoothing_sphere_matches_dense_convolution() {
        let dx = 0.05;
        let r = 10.0 * dx;
        let lat = lattice(dx);
        let band = 5.0 * dx;
        let ls = sphere_levelset(&lat, Vec3::zeros(), r, band);
        let s = gaussian_smooth(&ls, 3);
        // dense oracle on the exact signed distance
        let n = 18i32;
        let w = (2 * n + 1) as usize;
        let id = |i: i32, j: i32, k: i32| ((i + n) as usize) + w * (((j + n) as usize) + w * ((k + n) as usize));
        let mut d = vec![0.0; w * w * w];
        for k in -n..=n {
            for j in -n..=n {
                for i in -n..=n {
                    let x = Vec3::new(i as f64, j as f64, k as f64) * dx;
                    d[id(i, j, k)] = x.norm() - r;
                }
            }
        }
        for _ in 0..3 {
            for a in 0..3 {
                let mut t = d.clone();
                for k in -n + 1..n {
                    for j in -n + 1..n {
                        for i in -n + 1..n {
                            let mut lo = [i, j, k];
                            let mut hi = [i, j, k];
                            lo[a] -= 1;
                            hi[a] += 1;
                            t[id(i, j, k)] = 0.25 * d[id(lo[0], lo[1], lo[2])]
                                + 0.5 * d[id(i, j, k)]
                                + 0.25 * d[id(hi[0], hi[1], hi[2])];
                        }
                    }
                }
                d = t;
            }
        }
        let want = crossing_x(|i| d[id(i, 0, 0)], dx);
        let got = crossing_x(|i| s.value([i, 0, 0]), dx);
        assert!(want < r, "oracle should shrink: {want}");
        assert!((got - want).abs() < 0.1 * dx, "{got} vs {want}");
    }
}
