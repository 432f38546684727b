//! Velocities inside the surface mesh from boundary integrals, and the
//! coarse cached band of such velocities around the grid domain.

use rayon::prelude::*;

use super::{CouplingParams, ZoneMasks};
use crate::bem::{self, SurfaceMesh};
use crate::grids::{Coord, Lattice, VoxelBox};
use crate::{Result, Vec3};

/// `u(x) = sum_T int [ c grad G + j x grad G ] ds` with `c = n.u` and
/// `j = n x u`; exactly zero when `x` is outside the mesh.
pub fn boundary_integral_velocity(mesh: &SurfaceMesh, x: &Vec3) -> Result<Vec3> {
    if !mesh.contains(x) {
        return Ok(Vec3::zeros());
    }
    bem::boundary_velocity_integral(mesh, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandSample {
    Invalid,
    Sampled,
    Extrapolated,
}

/// Velocity samples on a coarse node lattice. Only valid samples are read.
#[derive(Clone, Debug)]
pub struct NarrowBandVelocity {
    pub lattice: Lattice,
    pub nodes: VoxelBox,
    pub values: Vec<Vec3>,
    pub state: Vec<BandSample>,
}

impl NarrowBandVelocity {
    /// Evaluates the boundary integral at every selected node inside the
    /// mesh, then fills one layer of selected outside nodes with the mean of
    /// their sampled face neighbors.
    pub fn build(
        mesh: &SurfaceMesh,
        lattice: Lattice,
        nodes: VoxelBox,
        select: impl Fn(&Vec3) -> bool + Sync,
    ) -> Result<Self> {
        let coords: Vec<Coord> = nodes.iter().collect();
        let sampled: Vec<Option<Vec3>> = coords
            .par_iter()
            .map(|&c| {
                let x = lattice.node(c);
                if !select(&x) || !mesh.contains(&x) {
                    return Ok(None);
                }
                bem::boundary_velocity_integral(mesh, &x).map(Some)
            })
            .collect::<Result<_>>()?;
        let mut values = vec![Vec3::zeros(); coords.len()];
        let mut state = vec![BandSample::Invalid; coords.len()];
        for (i, s) in sampled.iter().enumerate() {
            if let Some(v) = s {
                values[i] = *v;
                state[i] = BandSample::Sampled;
            }
        }
        for (i, &c) in coords.iter().enumerate() {
            if sampled[i].is_some() || !select(&lattice.node(c)) {
                continue;
            }
            let mut sum = Vec3::zeros();
            let mut n = 0;
            for a in 0..3 {
                for d in [-1, 1] {
                    let mut nb = c;
                    nb[a] += d;
                    if nodes.contains(nb) {
                        if let Some(v) = sampled[nodes.index(nb)] {
                            sum += v;
                            n += 1;
                        }
                    }
                }
            }
            if n > 0 {
                values[i] = sum / n as f64;
                state[i] = BandSample::Extrapolated;
            }
        }
        Ok(Self {
            lattice,
            nodes,
            values,
            state,
        })
    }

    pub fn node_value(&self, c: Coord) -> Option<Vec3> {
        if !self.nodes.contains(c) {
            return None;
        }
        let i = self.nodes.index(c);
        (self.state[i] != BandSample::Invalid).then(|| self.values[i])
    }

    /// Trilinear interpolation over the valid corner samples with
    /// renormalized weights; `None` if no corner is valid.
    pub fn sample(&self, x: &Vec3) -> Option<Vec3> {
        let s = (x - self.lattice.origin) / self.lattice.dx;
        let i0 = [s.x.floor(), s.y.floor(), s.z.floor()];
        let f = [s.x - i0[0], s.y - i0[1], s.z - i0[2]];
        let b = [i0[0] as i32, i0[1] as i32, i0[2] as i32];
        let mut acc = Vec3::zeros();
        let mut wsum = 0.0;
        for dk in 0..2 {
            let wz = if dk == 0 { 1.0 - f[2] } else { f[2] };
            for dj in 0..2 {
                let wy = if dj == 0 { 1.0 - f[1] } else { f[1] };
                for di in 0..2 {
                    let wx = if di == 0 { 1.0 - f[0] } else { f[0] };
                    let w = wx * wy * wz;
                    if w == 0.0 {
                        continue;
                    }
                    if let Some(v) = self.node_value([b[0] + di, b[1] + dj, b[2] + dk]) {
                        acc += v * w;
                        wsum += w;
                    }
                }
            }
        }
        (wsum > 0.0).then(|| acc / wsum)
    }

    pub fn count(&self, kind: BandSample) -> usize {
        self.state.iter().filter(|&&s| s == kind).count()
    }
}

/// Band around the domain boundary: nodes within the fill ring, the sink
/// ring and one band cell beyond either side. `margin` widens the shell
/// (world units) to cover domain motion during a frame.
pub fn build_narrowband_velocity(
    mesh: &SurfaceMesh,
    zones: &ZoneMasks,
    params: &CouplingParams,
    margin: f64,
) -> Result<NarrowBandVelocity> {
    let dx = zones.lattice.dx;
    let h = params.band_dx(dx);
    let lat = Lattice::new(h, zones.lattice.origin);
    let (lo, hi) = (zones.world_min(), zones.world_max());
    let outer = zones.sink_width as f64 * dx + h + margin;
    let inner = zones.fill_width as f64 * dx + h + margin;
    let olo = lo - Vec3::repeat(outer);
    let ohi = hi + Vec3::repeat(outer);
    let ilo = lo + Vec3::repeat(inner);
    let ihi = hi - Vec3::repeat(inner);
    let nodes = VoxelBox::covering(&lat, &olo, &ohi).expanded(1);
    let nodes = VoxelBox::new(nodes.lo, [nodes.hi[0] + 1, nodes.hi[1] + 1, nodes.hi[2] + 1]);
    let select = move |x: &Vec3| {
        let in_outer = (0..3).all(|a| x[a] >= olo[a] && x[a] <= ohi[a]);
        let in_inner = (0..3).all(|a| x[a] > ilo[a] && x[a] < ihi[a]);
        in_outer && !in_inner
    };
    NarrowBandVelocity::build(mesh, lat, nodes, select)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bem::mesh::{box_tank, icosphere};
    use crate::bem::Label;
    use std::f64::consts::PI;

    #[test]
    fn uniform_flow_at_center() {
        let mut m = icosphere(Vec3::zeros(), 1.0, 3, Label::Free);
        let u0 = Vec3::new(0.4, -1.0, 0.25);
        m.velocities = vec![u0; m.num_vertices()];
        let u = boundary_integral_velocity(&m, &Vec3::zeros()).unwrap();
        assert!((u - u0).norm() <= 0.01 * u0.norm(), "{u}");
    }

    #[test]
    fn outside_is_exactly_zero() {
        let mut m = icosphere(Vec3::zeros(), 1.0, 2, Label::Free);
        m.velocities = vec![Vec3::x(); m.num_vertices()];
        let u = boundary_integral_velocity(&m, &Vec3::new(1.5, 0.2, 0.0)).unwrap();
        assert_eq!(u, Vec3::zeros());
    }

    fn source(x: &Vec3) -> Vec3 {
        let d = x - Vec3::new(0.2, 0.3, 1.8);
        d / (4.0 * PI * d.norm().powi(3))
    }

    fn source_error(sub: usize) -> f64 {
        let mut m = icosphere(Vec3::zeros(), 1.0, sub, Label::Free);
        m.velocities = m.vertices.iter().map(source).collect();
        let pts = [
            Vec3::zeros(),
            Vec3::new(0.3, 0.1, -0.2),
            Vec3::new(-0.4, 0.2, 0.3),
            Vec3::new(0.1, -0.5, 0.1),
            Vec3::new(0.2, 0.3, 0.4),
        ];
        let (mut e2, mut r2) = (0.0, 0.0);
        for p in &pts {
            let u = boundary_integral_velocity(&m, p).unwrap();
            e2 += (u - source(p)).norm_squared();
            r2 += source(p).norm_squared();
        }
        (e2 / r2).sqrt()
    }

    #[test]
    fn point_source_error_shrinks_with_refinement() {
        let e2 = source_error(2);
        let e3 = source_error(3);
        assert!(e2 < 0.05, "{e2}");
        assert!(e3 <= 0.65 * e2, "{e2} -> {e3}");
    }

    #[test]
    fn band_extrapolates_mean_of_sampled_neighbors() {
        let mut m = icosphere(Vec3::zeros(), 1.0, 2, Label::Free);
        m.velocities = m.vertices.iter().map(|x| Vec3::new(0.1 + x.y, 0.0, x.x)).collect();
        let lat = Lattice::new(0.5, Vec3::zeros());
        let nodes = VoxelBox::new([-3, -3, -3], [4, 4, 4]);
        let band = NarrowBandVelocity::build(&m, lat, nodes, |_| true).unwrap();
        assert!(band.count(BandSample::Extrapolated) > 0);
        for c in nodes.iter() {
            let i = nodes.index(c);
            match band.state[i] {
                BandSample::Sampled => {
                    let direct = boundary_integral_velocity(&m, &lat.node(c)).unwrap();
                    assert_eq!(band.values[i], direct);
                }
                BandSample::Extrapolated => {
                    assert!(!m.contains(&lat.node(c)));
                    let mut sum = Vec3::zeros();
                    let mut n = 0;
                    for a in 0..3 {
                        for d in [-1, 1] {
                            let mut nb = c;
                            nb[a] += d;
                            if nodes.contains(nb) && band.state[nodes.index(nb)] == BandSample::Sampled {
                                sum += band.values[nodes.index(nb)];
                                n += 1;
                            }
                        }
                    }
                    assert!(n > 0);
                    assert_eq!(band.values[i], sum / n as f64);
                }
                BandSample::Invalid => {}
            }
        }
    }

    #[test]
    fn band_interior_passthrough_and_uniform_query() {
        let mut m = icosphere(Vec3::zeros(), 1.0, 3, Label::Free);
        let u0 = Vec3::new(0.0, 0.5, -0.2);
        m.velocities = vec![u0; m.num_vertices()];
        let lat = Lattice::new(0.2, Vec3::zeros());
        let nodes = VoxelBox::new([-1, -1, -1], [2, 2, 2]);
        let band = NarrowBandVelocity::build(&m, lat, nodes, |_| true).unwrap();
        assert_eq!(band.count(BandSample::Extrapolated), 0);
        assert_eq!(band.count(BandSample::Sampled), 27);
        for c in nodes.iter() {
            let direct = boundary_integral_velocity(&m, &lat.node(c)).unwrap();
            assert_eq!(band.node_value(c).unwrap(), direct);
        }
        let q = band.sample(&Vec3::new(0.07, -0.13, 0.05)).unwrap();
        assert!((q - u0).norm() <= 0.01 * u0.norm());
    }

    #[test]
    fn band_around_domain_covers_ring() {
        let mut tank = box_tank(Vec3::zeros(), (1.6, 1.6), 1.4, 0.2, |_, _| 0.0);
        tank.velocities = vec![Vec3::new(0.1, 0.0, 0.0); tank.num_vertices()];
        let lat = Lattice::new(0.05, Vec3::zeros());
        let zones = ZoneMasks::new(lat, VoxelBox::new([2, 2, 2], [30, 26, 30]), &CouplingParams::default());
        let band = build_narrowband_velocity(&tank, &zones, &CouplingParams::default(), 0.0).unwrap();
        // every fill voxel center below the surface is covered
        for c in zones.fill_voxels() {
            let x = lat.voxel_center(c);
            if x.y < 1.35 {
                assert!(band.sample(&x).is_some(), "{c:?}");
            }
        }
        // the deep interior of the domain is not sampled
        assert!(band.sample(&Vec3::new(0.7, 0.7, 0.7)).is_none());
    }
}
