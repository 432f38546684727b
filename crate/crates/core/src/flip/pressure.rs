//! Pressure Poisson system over LIQUID voxels: cut-cell solid faces,
//! ghost-fluid free surface, friction blend, and the projection itself.

use super::mg::Hierarchy;
use super::FlipParams;
use crate::grids::{offset, BlockGrid, CellFlag, Coord, LevelSet, MacVelocityGrid};
use crate::{Error, Result};

pub const NONE: u32 = u32::MAX;
const THETA_MIN: f64 = 0.01;
/// Velocity floor of the relative divergence metric (m/s).
pub const DIV_EPS: f64 = 1e-9;

/// Symmetric 7-point system `A p = b` over the liquid voxels.
///
/// Neighbor slot `d` is face direction `d / 2` (axis) towards `-` for even
/// `d` and `+` for odd `d`. `b` is the negated cut-cell divergence, so after
/// projection the divergence equals the negated residual `-(b - A p)`.
#[derive(Clone, Debug)]
pub struct PressureSystem {
    pub cells: Vec<Coord>,
    pub index: BlockGrid<u32>,
    pub diag: Vec<f64>,
    pub nbr: Vec<[u32; 6]>,
    pub off: Vec<[f64; 6]>,
    pub rhs: Vec<f64>,
    /// Open face fraction per slot (0 for closed faces).
    pub weight: Vec<[f64; 6]>,
    /// Ghost-fluid fraction per slot toward AIR, 1 elsewhere.
    pub theta: Vec<[f64; 6]>,
    pub dt: f64,
    pub rho: f64,
    pub dx: f64,
    /// Largest |mean| removed from the right-hand side of a component with
    /// no free surface (zero when every component touches air).
    pub removed_mean: f64,
}

impl PressureSystem {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * x[i];
            for d in 0..6 {
                let j = self.nbr[i][d];
                if j != NONE {
                    s += self.off[i][d] * x[j as usize];
                }
            }
            y[i] = s;
        }
    }

    pub fn residual_inf(&self, p: &[f64]) -> f64 {
        let mut ap = vec![0.0; self.len()];
        self.apply(p, &mut ap);
        self.rhs
            .iter()
            .zip(&ap)
            .map(|(b, a)| (b - a).abs())
            .fold(0.0, f64::max)
    }
}

#[inline]
fn face_of(c: Coord, d: usize) -> (usize, Coord) {
    let a = d / 2;
    if d % 2 == 0 {
        (a, c)
    } else {
        (a, offset(c, a, 1))
    }
}

#[inline]
fn neighbor(c: Coord, d: usize) -> Coord {
    offset(c, d / 2, if d % 2 == 0 { -1 } else { 1 })
}

/// Face flux velocity `(1 - f) u + f u_solid`.
#[inline]
pub fn face_flux(grid: &MacVelocityGrid, a: usize, c: Coord) -> f64 {
    let f = grid.fsolid(a, c);
    let u = grid.u[a].value(c);
    if f > 0.0 {
        (1.0 - f) * u + f * grid.solid_vel[a].value(c)
    } else {
        u
    }
}

/// Cut-cell divergence of voxel `c` (1/s).
pub fn cell_divergence(grid: &MacVelocityGrid, c: Coord) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        s += face_flux(grid, a, offset(c, a, 1)) - face_flux(grid, a, c);
    }
    s / grid.dx()
}

/// Largest speed over the faces bordering liquid.
pub fn liquid_speed(grid: &MacVelocityGrid) -> f64 {
    let mut m: f64 = 0.0;
    for a in 0..3 {
        for (c, v) in grid.u[a].iter() {
            if grid.face_borders_liquid(a, c) {
                m = m.max(v.abs());
            }
        }
    }
    m
}

/// `max |div u| dx / max(U, 1e-9)` over LIQUID voxels, `U` the largest face
/// speed bordering liquid.
pub fn max_relative_divergence(grid: &MacVelocityGrid) -> f64 {
    max_divergence(grid) * grid.dx() / liquid_speed(grid).max(DIV_EPS)
}

/// Largest |cut-cell divergence| over LIQUID voxels (1/s).
pub fn max_divergence(grid: &MacVelocityGrid) -> f64 {
    let mut m: f64 = 0.0;
    for (c, f) in grid.flags.iter() {
        if f == CellFlag::Liquid {
            m = m.max(cell_divergence(grid, c).abs());
        }
    }
    m
}

/// Assembles the pressure system. Applies the friction blend
/// `u <- (1 - f mu) u + f mu u_solid` to partially solid faces and inserts
/// zero velocities on liquid-bordering faces that carry no sample.
pub fn build_pressure_system(grid: &mut MacVelocityGrid, liquid: &LevelSet, params: &FlipParams, dt: f64) -> PressureSystem {
    let dx = grid.dx();
    let mut cells = Vec::new();
    let mut index = BlockGrid::new(NONE);
    for (c, f) in grid.flags.iter() {
        if f == CellFlag::Liquid {
            index.set(c, cells.len() as u32);
            cells.push(c);
        }
    }
    for &c in &cells {
        for d in 0..6 {
            let (a, fc) = face_of(c, d);
            if grid.u[a].get(fc).is_none() {
                grid.u[a].set(fc, 0.0);
            }
        }
    }
    let mu = params.friction_mu;
    if mu > 0.0 {
        for a in 0..3 {
            let faces: Vec<(Coord, f64)> = grid.solid_frac[a].iter().filter(|&(_, f)| f > 0.0 && f < 1.0).collect();
            for (c, f) in faces {
                if let Some(u) = grid.u[a].get_mut(c) {
                    let us = grid.solid_vel[a].value(c);
                    *u = (1.0 - f * mu) * *u + f * mu * us;
                }
            }
        }
    }

    let scale = dt / (params.rho * dx * dx);
    let n = cells.len();
    let mut diag = vec![0.0; n];
    let mut nbr = vec![[NONE; 6]; n];
    let mut off = vec![[0.0; 6]; n];
    let mut weight = vec![[0.0; 6]; n];
    let mut theta = vec![[1.0; 6]; n];
    let mut rhs = vec![0.0; n];
    for (i, &c) in cells.iter().enumerate() {
        rhs[i] = -cell_divergence(grid, c);
        let phi_l = liquid.value(c);
        for d in 0..6 {
            let (a, fc) = face_of(c, d);
            let nc = neighbor(c, d);
            let nf = grid.flag(nc);
            let w = if nf == CellFlag::Solid { 0.0 } else { 1.0 - grid.fsolid(a, fc) };
            weight[i][d] = w;
            if w == 0.0 {
                continue;
            }
            match nf {
                CellFlag::Liquid => {
                    nbr[i][d] = index.value(nc);
                    off[i][d] = -scale * w;
                    diag[i] += scale * w;
                }
                CellFlag::Air => {
                    let phi_a = liquid.value(nc);
                    let th = if phi_l < 0.0 && phi_a >= 0.0 && phi_l - phi_a != 0.0 {
                        (phi_l / (phi_l - phi_a)).clamp(THETA_MIN, 1.0)
                    } else {
                        1.0
                    };
                    theta[i][d] = th;
                    diag[i] += scale * w / th;
                }
                CellFlag::Solid => unreachable!(),
            }
        }
    }
    let mut sys = PressureSystem {
        cells,
        index,
        diag,
        nbr,
        off,
        rhs,
        weight,
        theta,
        dt,
        rho: params.rho,
        dx,
        removed_mean: 0.0,
    };
    remove_neumann_means(&mut sys);
    sys
}

/// Makes the right-hand side consistent on components without a Dirichlet
/// (air) face by subtracting its mean there.
fn remove_neumann_means(sys: &mut PressureSystem) {
    let n = sys.len();
    let mut comp = vec![u32::MAX; n];
    let mut stack = Vec::new();
    for seed in 0..n {
        if comp[seed] != u32::MAX {
            continue;
        }
        comp[seed] = seed as u32;
        stack.push(seed);
        let mut members = Vec::new();
        let mut dirichlet = false;
        while let Some(i) = stack.pop() {
            members.push(i);
            for d in 0..6 {
                let j = sys.nbr[i][d];
                if j != NONE {
                    if comp[j as usize] == u32::MAX {
                        comp[j as usize] = seed as u32;
                        stack.push(j as usize);
                    }
                } else if sys.weight[i][d] > 0.0 {
                    dirichlet = true;
                }
            }
        }
        if !dirichlet {
            members.sort_unstable();
            let mean = members.iter().map(|&i| sys.rhs[i]).sum::<f64>() / members.len() as f64;
            for &i in &members {
                sys.rhs[i] -= mean;
            }
            sys.removed_mean = sys.removed_mean.max(mean.abs());
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual_inf: f64,
    pub history: Vec<f64>,
}

/// Multigrid-preconditioned conjugate gradients until `||b - A p||_inf <=
/// abs_tol`, starting from `p` (warm start).
pub fn solve_pressure_from(
    sys: &PressureSystem,
    mg: &Hierarchy,
    p: &mut [f64],
    abs_tol: f64,
    max_iters: usize,
) -> Result<SolveStats> {
    let n = sys.len();
    let mut r = vec![0.0; n];
    sys.apply(p, &mut r);
    for i in 0..n {
        r[i] = sys.rhs[i] - r[i];
    }
    let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut res = inf(&r);
    let mut history = vec![res];
    if res <= abs_tol {
        return Ok(SolveStats { iterations: 0, residual_inf: res, history });
    }
    let mut z = vec![0.0; n];
    mg.apply(&r, &mut z);
    let mut s = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut as_ = vec![0.0; n];
    for it in 1..=max_iters {
        sys.apply(&s, &mut as_);
        let sas: f64 = s.iter().zip(&as_).map(|(a, b)| a * b).sum();
        if !(sas > 0.0) {
            break;
        }
        let alpha = rz / sas;
        for i in 0..n {
            p[i] += alpha * s[i];
            r[i] -= alpha * as_[i];
        }
        res = inf(&r);
        history.push(res);
        if res <= abs_tol {
            // confirm with the true residual
            let true_res = sys.residual_inf(p);
            if true_res <= abs_tol {
                return Ok(SolveStats { iterations: it, residual_inf: true_res, history });
            }
            sys.apply(p, &mut r);
            for i in 0..n {
                r[i] = sys.rhs[i] - r[i];
            }
        }
        mg.apply(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            s[i] = z[i] + beta * s[i];
        }
    }
    Err(Error::NonConvergence {
        iterations: history.len() - 1,
        last: res,
        residual_history: history,
    })
}

/// Solves from a zero initial guess; see [`solve_pressure_from`].
pub fn solve_pressure(sys: &PressureSystem, abs_tol: f64, max_iters: usize) -> Result<(Vec<f64>, SolveStats)> {
    let mg = Hierarchy::new(sys);
    let mut p = vec![0.0; sys.len()];
    let st = solve_pressure_from(sys, &mg, &mut p, abs_tol, max_iters)?;
    Ok((p, st))
}

/// `u <- u - dt/rho grad p` on every face with an open fraction next to a
/// liquid voxel, using the assembly's ghost-fluid fractions. Fully closed
/// faces next to liquid take the solid velocity.
pub fn project_velocity(grid: &mut MacVelocityGrid, sys: &PressureSystem, p: &[f64]) {
    let k = sys.dt / (sys.rho * sys.dx);
    for (i, &c) in sys.cells.iter().enumerate() {
        for d in 0..6 {
            let (a, fc) = face_of(c, d);
            let w = sys.weight[i][d];
            let j = sys.nbr[i][d];
            if w == 0.0 {
                let us = grid.solid_vel[a].value(fc);
                grid.u[a].set(fc, us);
                continue;
            }
            // each liquid-liquid face is visited twice; update it from the
            // low side only
            if j != NONE && d % 2 == 0 {
                continue;
            }
            let (p_lo, p_hi) = if j != NONE {
                (p[i], p[j as usize])
            } else {
                let ghost = -p[i] * (1.0 - sys.theta[i][d]) / sys.theta[i][d];
                if d % 2 == 0 {
                    (ghost, p[i])
                } else {
                    (p[i], ghost)
                }
            };
            let u = grid.u[a].get_mut(fc).expect("liquid faces are populated at assembly");
            *u -= k * (p_hi - p_lo);
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub iterations: usize,
    pub max_rel_div: f64,
    pub removed_mean: f64,
    pub pressure: Vec<f64>,
    pub cells: Vec<Coord>,
}

/// Assembles, solves and projects, tightening the solve until the projected
/// field meets `max_rel_div <= params.pressure_tol`.
pub fn pressure_project(grid: &mut MacVelocityGrid, liquid: &LevelSet, params: &FlipParams, dt: f64) -> Result<ProjectionReport> {
    let sys = build_pressure_system(grid, liquid, params, dt);
    let mut pressure = vec![0.0; sys.len()];
    if sys.is_empty() {
        return Ok(ProjectionReport {
            iterations: 0,
            max_rel_div: 0.0,
            removed_mean: 0.0,
            pressure,
            cells: Vec::new(),
        });
    }
    let mg = Hierarchy::new(&sys);
    let dx = grid.dx();
    // speed scale: the larger of the pre- and post-projection speeds, so a
    // liquid brought to rest is not judged against its own roundoff
    let u_pre = liquid_speed(grid);
    let b_inf = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 64.0 * f64::EPSILON * b_inf;
    let mut tol = 0.5 * params.pressure_tol * u_pre.max(DIV_EPS) / dx;
    let mut total = 0;
    // a few tightening rounds; each one continues from the last iterate
    for _round in 0..6 {
        let st = solve_pressure_from(&sys, &mg, &mut pressure, tol.max(floor), params.max_cg_iters.saturating_sub(total))?;
        total += st.iterations;
        let mut trial = grid.clone();
        project_velocity(&mut trial, &sys, &pressure);
        let u = u_pre.max(liquid_speed(&trial)).max(DIV_EPS);
        let rel = max_divergence(&trial) * dx / u;
        if rel <= params.pressure_tol {
            *grid = trial;
            return Ok(ProjectionReport {
                iterations: total,
                max_rel_div: rel,
                removed_mean: sys.removed_mean,
                pressure,
                cells: sys.cells,
            });
        }
        if tol <= floor {
            break;
        }
        tol *= 0.25;
    }
    let res = sys.residual_inf(&pressure);
    Err(Error::NonConvergence {
        iterations: total,
        last: res,
        residual_history: vec![res],
    })
}
