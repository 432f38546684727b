//! Aggregation multigrid W-cycle used as the CG preconditioner.
//!
//! Levels are built by merging aligned 2x2x2 voxel groups. With piecewise
//! constant prolongation `P`, the coarse operator is `0.5 P^T A P`, which
//! keeps the 7-point structure. Each level is smoothed by red-black
//! Gauss-Seidel (3 sweeps down, 3 sweeps up in the opposite color order so
//! the cycle is a symmetric operator).

use super::pressure::{PressureSystem, NONE};
use crate::grids::{BlockGrid, Coord};

const SWEEPS: usize = 3;
const COARSEST: usize = 64;
const COARSE_SCALE: f64 = 0.5;
/// Above this size the bottom level is smoothed instead of solved densely.
const DENSE_LIMIT: usize = 1500;

#[derive(Clone, Debug)]
struct Level {
    coords: Vec<Coord>,
    diag: Vec<f64>,
    nbr: Vec<[u32; 6]>,
    off: Vec<[f64; 6]>,
    /// Unknowns of each color, in increasing order.
    colors: [Vec<u32>; 2],
    /// Coarse index of every unknown on this level (empty on the last one).
    parent: Vec<u32>,
}

impl Level {
    fn len(&self) -> usize {
        self.diag.len()
    }

    fn from_parts(coords: Vec<Coord>, diag: Vec<f64>, nbr: Vec<[u32; 6]>, off: Vec<[f64; 6]>) -> Self {
        let mut colors = [Vec::new(), Vec::new()];
        for (i, c) in coords.iter().enumerate() {
            colors[((c[0] + c[1] + c[2]) & 1) as usize].push(i as u32);
        }
        Self {
            coords,
            diag,
            nbr,
            off,
            colors,
            parent: Vec::new(),
        }
    }

    fn residual(&self, x: &[f64], b: &[f64], r: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for d in 0..6 {
                let j = self.nbr[i][d];
                if j != NONE {
                    s += self.off[i][d] * x[j as usize];
                }
            }
            r[i] = b[i] - s;
        }
    }

    fn relax_color(&self, color: usize, x: &mut [f64], b: &[f64]) {
        for &i in &self.colors[color] {
            let i = i as usize;
            let dg = self.diag[i];
            if dg == 0.0 {
                continue;
            }
            let mut s = b[i];
            for d in 0..6 {
                let j = self.nbr[i][d];
                if j != NONE {
                    s -= self.off[i][d] * x[j as usize];
                }
            }
            x[i] = s / dg;
        }
    }

    fn coarsen(&mut self) -> Level {
        let mut index: BlockGrid<u32> = BlockGrid::new(NONE);
        let mut coords = Vec::new();
        let mut parent = vec![0u32; self.len()];
        for (i, c) in self.coords.iter().enumerate() {
            let cc = [c[0] >> 1, c[1] >> 1, c[2] >> 1];
            let k = match index.get(cc) {
                Some(k) => k,
                None => {
                    index.set(cc, coords.len() as u32);
                    coords.push(cc);
                    (coords.len() - 1) as u32
                }
            };
            parent[i] = k;
        }
        let n = coords.len();
        let mut diag = vec![0.0; n];
        let mut nbr = vec![[NONE; 6]; n];
        let mut off = vec![[0.0; 6]; n];
        for i in 0..self.len() {
            let ci = parent[i] as usize;
            diag[ci] += self.diag[i];
            for d in 0..6 {
                let j = self.nbr[i][d];
                if j == NONE {
                    continue;
                }
                let cj = parent[j as usize];
                if cj as usize == ci {
                    diag[ci] += self.off[i][d];
                } else {
                    nbr[ci][d] = cj;
                    off[ci][d] += self.off[i][d];
                }
            }
        }
        for k in 0..n {
            diag[k] *= COARSE_SCALE;
            for d in 0..6 {
                off[k][d] *= COARSE_SCALE;
            }
        }
        self.parent = parent;
        Level::from_parts(coords, diag, nbr, off)
    }
}

enum Bottom {
    /// Dense pseudo-inverse, row-major.
    Dense(Vec<f64>),
    Smooth,
}

pub struct Hierarchy {
    levels: Vec<Level>,
    bottom: Bottom,
}

impl Hierarchy {
    pub fn new(sys: &PressureSystem) -> Self {
        let mut levels = vec![Level::from_parts(sys.cells.clone(), sys.diag.clone(), sys.nbr.clone(), sys.off.clone())];
        loop {
            let last = levels.last_mut().unwrap();
            if last.len() <= COARSEST {
                break;
            }
            let coarse = last.coarsen();
            // stop when aggregation no longer shrinks the problem
            if coarse.len() * 10 > last.len() * 9 {
                last.parent.clear();
                break;
            }
            levels.push(coarse);
        }
        let last = levels.last().unwrap();
        let bottom = if last.len() <= DENSE_LIMIT {
            Bottom::Dense(pseudo_inverse(last))
        } else {
            Bottom::Smooth
        };
        Self { levels, bottom }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// `z = M^{-1} r` with one W-cycle.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        self.cycle(0, r, z);
    }

    fn solve_bottom(&self, b: &[f64], x: &mut [f64]) {
        let lv = self.levels.last().unwrap();
        let n = lv.len();
        match &self.bottom {
            Bottom::Dense(pinv) => {
                for i in 0..n {
                    let row = &pinv[i * n..(i + 1) * n];
                    x[i] = row.iter().zip(b).map(|(a, v)| a * v).sum();
                }
            }
            Bottom::Smooth => {
                for _ in 0..20 {
                    lv.relax_color(0, x, b);
                    lv.relax_color(1, x, b);
                }
                for _ in 0..20 {
                    lv.relax_color(1, x, b);
                    lv.relax_color(0, x, b);
                }
            }
        }
    }

    fn cycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        if l + 1 == self.levels.len() {
            self.solve_bottom(b, x);
            return;
        }
        let lv = &self.levels[l];
        for _ in 0..SWEEPS {
            lv.relax_color(0, x, b);
            lv.relax_color(1, x, b);
        }
        let coarse = &self.levels[l + 1];
        let mut r = vec![0.0; lv.len()];
        let mut rc = vec![0.0; coarse.len()];
        let mut xc = vec![0.0; coarse.len()];
        lv.residual(x, b, &mut r);
        restrict(lv, &r, &mut rc);
        // two coarse visits make the W shape; the bottom is exact, so a
        // second visit there would be redundant
        let visits = if l + 2 == self.levels.len() { 1 } else { 2 };
        self.cycle(l + 1, &rc, &mut xc);
        if visits == 2 {
            let mut r2 = vec![0.0; coarse.len()];
            coarse.residual(&xc, &rc, &mut r2);
            let mut e = vec![0.0; coarse.len()];
            self.cycle(l + 1, &r2, &mut e);
            for (a, b) in xc.iter_mut().zip(&e) {
                *a += b;
            }
        }
        for i in 0..lv.len() {
            x[i] += xc[lv.parent[i] as usize];
        }
        for _ in 0..SWEEPS {
            lv.relax_color(1, x, b);
            lv.relax_color(0, x, b);
        }
    }
}

fn restrict(lv: &Level, r: &[f64], rc: &mut [f64]) {
    for (i, &p) in lv.parent.iter().enumerate() {
        rc[p as usize] += r[i];
    }
}

/// Moore-Penrose inverse of a small symmetric level matrix via eigen
/// decomposition; near-zero modes (Neumann null spaces) are dropped.
fn pseudo_inverse(lv: &Level) -> Vec<f64> {
    let n = lv.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = lv.diag[i];
        for d in 0..6 {
            let j = lv.nbr[i][d];
            if j != NONE {
                a[(i, j as usize)] += lv.off[i][d];
            }
        }
    }
    let eig = a.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = lmax * 1e-11;
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        let l = eig.eigenvalues[k];
        if l.abs() <= cut {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        for i in 0..n {
            let vi = v[i] / l;
            for j in 0..n {
                out[i * n + j] += vi * v[j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flip::pressure::build_pressure_system;
    use crate::flip::{classify_cells, FlipParams, NoSolid};
    use crate::grids::{Lattice, LevelSet, MacVelocityGrid, VoxelBox};
    use crate::Vec3;

    fn system(n: i32) -> PressureSystem {
        let lat = Lattice::new(0.1, Vec3::zeros());
        let bx = VoxelBox::new([0, 0, 0], [n, n + 2, n]);
        let mut ls = LevelSet::new(lat, 0.3);
        for c in bx.expanded(1).iter() {
            ls.set(c, if c[1] < n { -0.05 } else { 0.05 });
        }
        let mut g = MacVelocityGrid::new(lat);
        classify_cells(&mut g, &ls, &bx, &NoSolid, &|_| Vec3::zeros());
        build_pressure_system(&mut g, &ls, &FlipParams::default(), 0.01)
    }

    #[test]
    fn preconditioner_is_symmetric() {
        let sys = system(10);
        let h = Hierarchy::new(&sys);
        assert!(h.num_levels() >= 2);
        let n = sys.len();
        let e = |k: usize| {
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            v
        };
        let (mut zi, mut zj) = (vec![0.0; n], vec![0.0; n]);
        for &(i, j) in &[(0usize, 7usize), (13, 400), (999, 5)] {
            h.apply(&e(i), &mut zi);
            h.apply(&e(j), &mut zj);
            let (a, b) = (zi[j], zj[i]);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()), "{a} {b}");
        }
    }

    #[test]
    fn coarse_operator_scaled_by_half() {
        let sys = system(4);
        let mut l0 = Level::from_parts(sys.cells.clone(), sys.diag.clone(), sys.nbr.clone(), sys.off.clone());
        let l1 = l0.coarsen();
        // P^T A P row sums equal the sum of fine row sums per aggregate
        let mut fine_rows = vec![0.0; l1.len()];
        for i in 0..l0.len() {
            let s = l0.diag[i] + l0.off[i].iter().sum::<f64>();
            fine_rows[l0.parent[i] as usize] += s;
        }
        for k in 0..l1.len() {
            let s = l1.diag[k] + l1.off[k].iter().sum::<f64>();
            assert!((s - 0.5 * fine_rows[k]).abs() < 1e-9 * fine_rows[k].abs().max(1.0));
        }
    }
}
