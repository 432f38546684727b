//! Validation scenes that involve the particle-grid solver. Each one is a
//! scene file plus the measurement taken over the run.

use super::{parse_scene, SceneConfig};
use crate::coupling::{step_frame, FrameState};
use crate::harness::{surface_elevation, ElevationSource};
use crate::Result;

use super::run::total_volume;

/// Still pool in a box tank with the grid domain standing on the floor in
/// the middle.
#[derive(Clone, Debug)]
pub struct RestScene {
    pub frames: usize,
}

impl Default for RestScene {
    fn default() -> Self {
        Self { frames: 100 }
    }
}

#[derive(Clone, Debug)]
pub struct RestResult {
    pub max_speed: f64,
    pub max_rel_div: f64,
}

impl RestScene {
    pub const SCENE: &'static str = "
        tank_size = 0.8, 0.5, 0.8
        rest_depth = 0.25
        dx_bem = 0.1
        dx_flip = 0.025
        flip = true
        domain_min = 0.2, 0, 0.2
        domain_size = 0.4, 0.4, 0.4
        probes = 0.4, 0.4; 0.1, 0.1
    ";

    pub fn config(&self) -> SceneConfig {
        let mut c = parse_scene(Self::SCENE).expect("built-in scene");
        c.frames = self.frames;
        c
    }

    pub fn run(&self, mut progress: impl FnMut(usize)) -> Result<RestResult> {
        let mut state = self.config().initial_state();
        let mut max_rel_div: f64 = 0.0;
        for f in 0..self.frames {
            max_rel_div = max_rel_div.max(step_frame(&mut state)?.max_rel_div);
            progress(f);
        }
        Ok(RestResult {
            max_speed: state.flip.as_ref().unwrap().particles.max_speed(),
            max_rel_div,
        })
    }
}

/// Grid domain translating one voxel per frame along a still box tank.
#[derive(Clone, Debug)]
pub struct MovingDomainScene {
    pub frames: usize,
}

impl Default for MovingDomainScene {
    fn default() -> Self {
        Self { frames: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct MovingDomainResult {
    /// Fill voxels below the surface with a particle count outside the
    /// allowed range, summed over every substep.
    pub fill_violations: usize,
    pub substeps: usize,
    pub volumes: Vec<f64>,
    pub max_rel_div: f64,
}

impl MovingDomainResult {
    /// Largest relative departure of the liquid volume from frame 0.
    pub fn max_volume_drift(&self) -> f64 {
        let v0 = self.volumes[0];
        self.volumes.iter().map(|v| (v - v0).abs() / v0).fold(0.0, f64::max)
    }
}

impl MovingDomainScene {
    pub const DX_FLIP: f64 = 0.02;

    pub fn config(&self) -> SceneConfig {
        let dx = Self::DX_FLIP;
        let (x0, x1) = (0.4, 0.4 + self.frames as f64 * dx);
        let text = format!(
            "
            tank_size = 1.8, 0.6, 0.6
            rest_depth = 0.3
            dx_bem = 0.1
            dx_flip = {dx}
            flip = true
            domain_min = 0.2, 0, 0.1
            domain_size = 0.4, 0.4, 0.4
            domain_keyframes = 0: {x0}, 0.2, 0.3; {f}: {x1}, 0.2, 0.3
            ",
            f = self.frames
        );
        let mut c = parse_scene(&text).expect("built-in scene");
        c.frames = self.frames;
        c
    }

    pub fn run(&self, mut progress: impl FnMut(usize, &MovingDomainResult)) -> Result<MovingDomainResult> {
        let mut state = self.config().initial_state();
        let mut out = MovingDomainResult {
            fill_violations: 0,
            substeps: 0,
            volumes: vec![total_volume(&state)],
            max_rel_div: 0.0,
        };
        for f in 0..self.frames {
            let r = step_frame(&mut state)?;
            out.fill_violations += r.fill_violations;
            out.substeps += r.flip_substeps.len();
            out.max_rel_div = out.max_rel_div.max(r.max_rel_div);
            out.volumes.push(total_volume(&state));
            progress(f, &out);
        }
        Ok(out)
    }
}

/// Collapsing liquid column in a closed box resolved by a 48³ grid,
/// particle-grid solver only.
#[derive(Clone, Debug)]
pub struct DamBreakScene {
    pub cells: usize,
    pub frames: usize,
}

impl Default for DamBreakScene {
    fn default() -> Self {
        Self { cells: 48, frames: 12 }
    }
}

#[derive(Clone, Debug)]
pub struct DamBreakResult {
    pub projections: usize,
    pub max_rel_div: f64,
}

impl DamBreakScene {
    pub fn initial_state(&self) -> FrameState {
        let dx = 0.02;
        let l = self.cells as f64 * dx;
        let text = format!(
            "
            tank_size = {l}, {l}, {l}
            rest_depth = {d}
            dx_bem = 0.1
            dx_flip = {dx}
            flip = true
            coupled = false
            ",
            d = 0.6 * l
        );
        let c = parse_scene(&text).expect("built-in scene");
        let mut state = c.initial_state();
        state.mesh = None;
        // Keep only the column against the x = 0 wall.
        let f = state.flip.as_mut().unwrap();
        let keep: Vec<bool> = f.particles.positions.iter().map(|x| x.x < 0.4 * l).collect();
        f.particles.retain_indices(|i| keep[i]);
        state
    }

    pub fn run(&self, mut progress: impl FnMut(usize)) -> Result<DamBreakResult> {
        let mut state = self.initial_state();
        let mut out = DamBreakResult {
            projections: 0,
            max_rel_div: 0.0,
        };
        for f in 0..self.frames {
            let r = step_frame(&mut state)?;
            out.projections += r.flip_substeps.len();
            out.max_rel_div = out.max_rel_div.max(r.max_rel_div);
            progress(f);
        }
        Ok(out)
    }
}

/// Ball of liquid hitting a cylindrical pool, run twice: with a small grid
/// domain inside the surface-tracked tank, and with the grid covering the
/// whole tank.
#[derive(Clone, Debug)]
pub struct CrownSplashScene {
    pub dx_flip: f64,
    pub dx_bem: f64,
    pub tank_radius: f64,
    pub depth: f64,
    pub drop_radius: f64,
    pub drop_speed: f64,
    /// Horizontal and vertical extent of the hybrid grid domain.
    pub domain_width: f64,
    pub domain_height: f64,
    pub probe_distance: f64,
    pub frames: usize,
    /// Arrival is the first time the probe height departs from its initial
    /// value by this fraction of the largest departure of the run.
    pub arrival_fraction: f64,
}

impl Default for CrownSplashScene {
    fn default() -> Self {
        Self {
            dx_flip: 0.02,
            dx_bem: 0.05,
            tank_radius: 1.0,
            depth: 0.3,
            drop_radius: 0.05,
            drop_speed: 1.0,
            domain_width: 0.6,
            domain_height: 0.2,
            probe_distance: 0.4,
            frames: 16,
            arrival_fraction: 0.3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CrownSplashResult {
    /// Probe heights, initial state first, then one per frame.
    pub hybrid_probe: Vec<f64>,
    pub reference_probe: Vec<f64>,
    pub hybrid_arrival: Option<f64>,
    pub reference_arrival: Option<f64>,
    /// RMS of mesh height minus particle surface height over the grid
    /// domain interior, over all frames.
    pub tracking_rms: f64,
    pub max_rel_div: f64,
}

impl CrownSplashResult {
    pub fn arrival_error(&self) -> Option<f64> {
        let (h, r) = (self.hybrid_arrival?, self.reference_arrival?);
        Some((h - r).abs() / r)
    }
}

/// Time at which `series` (one value per frame, frame `i` at `i dt`, frame 0
/// undisturbed) first departs from `series[0]` by `fraction` of its largest
/// departure, interpolated linearly between frames.
pub fn arrival_time(series: &[f64], fraction: f64, dt: f64) -> Option<f64> {
    let rest = *series.first()?;
    let dev: Vec<f64> = series.iter().map(|h| (h - rest).abs()).collect();
    let peak = dev.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return None;
    }
    let level = fraction * peak;
    let i = dev.iter().position(|&d| d >= level)?;
    let s = (level - dev[i - 1]) / (dev[i] - dev[i - 1]);
    Some((i as f64 - 1.0 + s) * dt)
}

impl CrownSplashScene {
    fn base_text(&self) -> String {
        let top = self.depth + 2.0 * self.drop_radius + 0.1;
        format!(
            "
            tank = cylinder
            tank_center = 0, 0, 0
            tank_radius = {r}
            tank_height = {top}
            rest_depth = {d}
            dx_bem = {db}
            dx_flip = {df}
            flip = true
            drop_center = 0, {dc}, 0
            drop_radius = {dr}
            drop_velocity = 0, {dv}, 0
            ",
            r = self.tank_radius,
            d = self.depth,
            db = self.dx_bem,
            df = self.dx_flip,
            dc = self.depth + self.drop_radius,
            dr = self.drop_radius,
            dv = -self.drop_speed,
        )
    }

    pub fn hybrid_config(&self) -> SceneConfig {
        let w = self.domain_width;
        let h = self.domain_height;
        let text = format!(
            "{}domain_min = {}, {}, {}\ndomain_size = {w}, {h}, {w}\n",
            self.base_text(),
            -0.5 * w,
            self.depth - 0.5 * h,
            -0.5 * w
        );
        let mut c = parse_scene(&text).expect("built-in scene");
        c.frames = self.frames;
        c
    }

    pub fn reference_config(&self) -> SceneConfig {
        let mut c = parse_scene(&format!("{}coupled = false\n", self.base_text())).expect("built-in scene");
        c.frames = self.frames;
        c
    }

    fn probe(&self) -> (f64, f64) {
        (self.probe_distance + 1.3e-7, 2.1e-7)
    }

    /// Probe points on the grid domain interior, clear of the fill ring.
    pub fn tracking_points(&self, state: &FrameState) -> Vec<(f64, f64)> {
        let f = state.flip.as_ref().unwrap();
        let z = f.zones();
        let margin = (f.coupling.fill_zone_width as f64 + 0.5) * f.lattice.dx;
        let (lo, hi) = (z.world_min(), z.world_max());
        let step = 2.0 * f.lattice.dx;
        let mut pts = Vec::new();
        let mut x = lo.x + margin;
        while x <= hi.x - margin {
            let mut zz = lo.z + margin;
            while zz <= hi.z - margin {
                pts.push((x + 1.1e-7, zz + 1.9e-7));
                zz += step;
            }
            x += step;
        }
        pts
    }

    fn run_reference(&self, progress: &mut impl FnMut(&str, usize)) -> Result<(Vec<f64>, f64)> {
        let mut state = self.reference_config().initial_state();
        state.mesh = None;
        let read = |s: &FrameState| {
            let d = s.flip.as_ref().unwrap();
            surface_elevation(ElevationSource::Particles(&d.particles, &d.lattice), self.probe())
        };
        let mut probe = vec![read(&state)?];
        let mut div: f64 = 0.0;
        for f in 0..self.frames {
            div = div.max(step_frame(&mut state)?.max_rel_div);
            probe.push(read(&state)?);
            progress("reference", f);
        }
        Ok((probe, div))
    }

    fn run_hybrid(&self, progress: &mut impl FnMut(&str, usize)) -> Result<(Vec<f64>, f64, f64)> {
        let mut state = self.hybrid_config().initial_state();
        let pts = self.tracking_points(&state);
        let mut probe = vec![surface_elevation(ElevationSource::Mesh(state.mesh.as_ref().unwrap()), self.probe())?];
        let (mut sq, mut n) = (0.0, 0usize);
        let mut div: f64 = 0.0;
        for f in 0..self.frames {
            div = div.max(step_frame(&mut state)?.max_rel_div);
            let m = state.mesh.as_ref().unwrap();
            let d = state.flip.as_ref().unwrap();
            probe.push(surface_elevation(ElevationSource::Mesh(m), self.probe())?);
            for &p in &pts {
                let hm = surface_elevation(ElevationSource::Mesh(m), p);
                let hp = surface_elevation(ElevationSource::Particles(&d.particles, &d.lattice), p);
                if let (Ok(a), Ok(b)) = (hm, hp) {
                    sq += (a - b).powi(2);
                    n += 1;
                }
            }
            progress("hybrid", f);
        }
        Ok((probe, (sq / n.max(1) as f64).sqrt(), div))
    }

    pub fn run(&self, mut progress: impl FnMut(&str, usize)) -> Result<CrownSplashResult> {
        let (hybrid_probe, tracking_rms, d1) = self.run_hybrid(&mut progress)?;
        let (reference_probe, d2) = self.run_reference(&mut progress)?;
        let dt = 1.0 / self.hybrid_config().fps;
        Ok(CrownSplashResult {
            hybrid_arrival: arrival_time(&hybrid_probe, self.arrival_fraction, dt),
            reference_arrival: arrival_time(&reference_probe, self.arrival_fraction, dt),
            hybrid_probe,
            reference_probe,
            tracking_rms,
            max_rel_div: d1.max(d2),
        })
    }
}
