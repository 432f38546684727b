use super::block::{BlockGrid, Coord};
use super::{offset, Lattice};
use crate::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellFlag {
    Liquid,
    Air,
    Solid,
}

/// Staggered velocity grid. Component `a` of voxel `c` lives on the low
/// face of `c` normal to axis `a`, i.e. between voxels `c - e_a` and `c`.
#[derive(Clone, Debug)]
pub struct MacVelocityGrid {
    pub lattice: Lattice,
    pub u: [BlockGrid<f64>; 3],
    /// Fraction of each face covered by solid, 0 where absent.
    pub solid_frac: [BlockGrid<f64>; 3],
    /// Solid velocity component on faces with nonzero solid fraction.
    pub solid_vel: [BlockGrid<f64>; 3],
    pub flags: BlockGrid<CellFlag>,
}

impl MacVelocityGrid {
    pub fn new(lattice: Lattice) -> Self {
        Self {
            lattice,
            u: [BlockGrid::new(0.0), BlockGrid::new(0.0), BlockGrid::new(0.0)],
            solid_frac: [BlockGrid::new(0.0), BlockGrid::new(0.0), BlockGrid::new(0.0)],
            solid_vel: [BlockGrid::new(0.0), BlockGrid::new(0.0), BlockGrid::new(0.0)],
            flags: BlockGrid::new(CellFlag::Air),
        }
    }

    pub fn dx(&self) -> f64 {
        self.lattice.dx
    }

    #[inline]
    pub fn flag(&self, c: Coord) -> CellFlag {
        self.flags.value(c)
    }

    #[inline]
    pub fn face(&self, axis: usize, c: Coord) -> Option<f64> {
        self.u[axis].get(c)
    }

    #[inline]
    pub fn set_face(&mut self, axis: usize, c: Coord, v: f64) {
        self.u[axis].set(c, v);
    }

    #[inline]
    pub fn fsolid(&self, axis: usize, c: Coord) -> f64 {
        self.solid_frac[axis].value(c)
    }

    /// Sets the solid fraction (clamped to [0,1]) and the solid velocity
    /// component of a face.
    pub fn set_solid(&mut self, axis: usize, c: Coord, frac: f64, vel: f64) {
        self.solid_frac[axis].set(c, frac.clamp(0.0, 1.0));
        self.solid_vel[axis].set(c, vel);
    }

    /// True if either voxel adjacent to the face is liquid.
    #[inline]
    pub fn face_borders_liquid(&self, axis: usize, c: Coord) -> bool {
        self.flag(c) == CellFlag::Liquid || self.flag(offset(c, axis, -1)) == CellFlag::Liquid
    }

    /// Velocity at `x`, each component interpolated on its own face lattice.
    /// Faces that are not stored contribute zero (no renormalization).
    pub fn sample_trilinear(&self, x: &Vec3) -> Vec3 {
        Vec3::new(
            self.sample_component(0, x),
            self.sample_component(1, x),
            self.sample_component(2, x),
        )
    }

    pub fn sample_component(&self, axis: usize, x: &Vec3) -> f64 {
        sample_staggered(&self.u[axis], &self.lattice, axis, x)
    }

    pub fn max_speed(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..3 {
            for (_, v) in self.u[a].iter() {
                m = m.max(v.abs());
            }
        }
        m
    }
}

/// Trilinear interpolation of a face-centered scalar with zero fill.
pub(crate) fn sample_staggered(field: &BlockGrid<f64>, lat: &Lattice, axis: usize, x: &Vec3) -> f64 {
    let mut s = (x - lat.origin) / lat.dx - Vec3::repeat(0.5);
    s[axis] += 0.5;
    snap(&mut s);
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
                let w = wx * wy * wz;
                if w != 0.0 {
                    if let Some(v) = field.get([b[0] + di, b[1] + dj, b[2] + dk]) {
                        acc += w * v;
                    }
                }
            }
        }
    }
    acc
}

/// Rounds lattice coordinates within 1e-10 of an integer so that samples
/// at stored nodes return the node value exactly.
#[inline]
pub(crate) fn snap(s: &mut Vec3) {
    for a in 0..3 {
        let r = s[a].round();
        if (s[a] - r).abs() < 1e-10 {
            s[a] = r;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn filled(n: i32, f: impl Fn(usize, Vec3) -> f64) -> MacVelocityGrid {
        let lat = Lattice::new(0.1, Vec3::new(-0.3, 0.2, 0.05));
        let mut g = MacVelocityGrid::new(lat);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for a in 0..3 {
                        let c = [i, j, k];
                        let p = lat.face_center(a, c);
                        g.set_face(a, c, f(a, p));
                    }
                }
            }
        }
        g
    }

    #[test]
    fn constant_field() {
        let g = filled(6, |a, _| if a == 0 { 1.0 } else { 0.0 });
        let x = Vec3::new(-0.05, 0.41, 0.27);
        assert_eq!(g.sample_trilinear(&x), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn face_center_is_nodal() {
        let g = filled(5, |a, p| (a as f64 + 1.0) * p.x + p.y * p.z);
        let c = [2, 3, 1];
        let p = g.lattice.face_center(0, c);
        assert_eq!(g.sample_trilinear(&p)[0], g.face(0, c).unwrap());
    }

    #[test]
    fn zero_fill_outside() {
        let g = filled(3, |_, _| 1.0);
        assert_eq!(g.sample_trilinear(&Vec3::new(10.0, 10.0, 10.0)), Vec3::zeros());
    }

    proptest! {
        #[test]
        fn affine_fields_reproduced(
            a in prop::array::uniform3(-2.0f64..2.0),
            b in prop::array::uniform3(-2.0f64..2.0),
            t in prop::array::uniform3(0.0f64..1.0),
        ) {
            let g = filled(8, |ax, p| a[ax] * p[ax] + b[ax] * p[(ax + 1) % 3] + 0.5);
            // at least one voxel inside the stored block [0,8)^3
            let lo = g.lattice.node([1, 1, 1]);
            let x = lo + Vec3::new(t[0], t[1], t[2]) * 0.5;
            let v = g.sample_trilinear(&x);
            for ax in 0..3 {
                let exact = a[ax] * x[ax] + b[ax] * x[(ax + 1) % 3] + 0.5;
                prop_assert!((v[ax] - exact).abs() <= 1e-12 * exact.abs().max(1.0));
            }
        }
    }
}
