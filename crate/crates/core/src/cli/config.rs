//! Flat `key = value` scene files.
//!
//! One setting per line, `#` starts a comment, vectors are comma-separated
//! triples. Lists (`probes`, `domain_keyframes`) separate entries with `;`.

use std::collections::HashMap;

use crate::bem::mesh::{box_tank, cylinder_tank};
use crate::bem::{HdMode, Label, SurfaceMesh, VertexKind};
use crate::coupling::{Container, CouplingParams, DomainMotion, FlipDomain, FrameState};
use crate::flip::{default_particle_radius, seed_particles, BoxContainer, CylinderContainer, FlipParams};
use crate::grids::{Lattice, VoxelBox};
use crate::{Error, Result, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TankShape {
    None,
    /// Axis-aligned box from `min` with extents `size`.
    Box { min: Vec3, size: Vec3 },
    /// Vertical cylinder; `center.y` is the floor height.
    Cylinder { center: Vec3, radius: f64, height: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Impulse {
    pub center_xz: (f64, f64),
    pub radius: f64,
    pub speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drop {
    pub center: Vec3,
    pub radius: f64,
    pub velocity: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub frames: usize,
    pub fps: f64,
    pub seed: u64,
    pub gravity: Vec3,
    pub rho: f64,
    pub hd_mode: HdMode,
    pub dx_bem: f64,
    pub dx_flip: f64,
    pub tank: TankShape,
    pub rest_depth: f64,
    pub wave_amplitude: f64,
    pub wave_length: f64,
    pub impulse: Option<Impulse>,
    pub drop: Option<Drop>,
    pub flip_enabled: bool,
    pub coupled: bool,
    /// World box of the grid domain at frame 0; `None` covers the tank.
    pub domain: Option<(Vec3, Vec3)>,
    pub keyframes: Vec<(f64, Vec3)>,
    pub flip: FlipParams,
    pub coupling: CouplingParams,
    pub probes: Vec<(f64, f64)>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            frames: 24,
            fps: 24.0,
            seed: 0,
            gravity: Vec3::new(0.0, -9.81, 0.0),
            rho: 1000.0,
            hd_mode: HdMode::Partial,
            dx_bem: 0.1,
            dx_flip: 0.05,
            tank: TankShape::Box {
                min: Vec3::zeros(),
                size: Vec3::new(1.0, 1.0, 1.0),
            },
            rest_depth: 0.5,
            wave_amplitude: 0.0,
            wave_length: 1.0,
            impulse: None,
            drop: None,
            flip_enabled: false,
            coupled: true,
            domain: None,
            keyframes: Vec::new(),
            flip: FlipParams::default(),
            coupling: CouplingParams::default(),
            probes: Vec::new(),
        }
    }
}

/// Every accepted key, in the order `to_text` writes them.
pub const KEYS: &[&str] = &[
    "frames",
    "fps",
    "seed",
    "gravity",
    "rho",
    "hd_mode",
    "dx_bem",
    "dx_flip",
    "tank",
    "tank_min",
    "tank_size",
    "tank_center",
    "tank_radius",
    "tank_height",
    "rest_depth",
    "wave_amplitude",
    "wave_length",
    "impulse_center",
    "impulse_radius",
    "impulse_speed",
    "drop_center",
    "drop_radius",
    "drop_velocity",
    "flip",
    "coupled",
    "domain_min",
    "domain_size",
    "domain_keyframes",
    "flip_blend",
    "cfl_max",
    "particles_per_voxel_target",
    "friction_mu",
    "pressure_tol",
    "max_cg_iters",
    "alpha",
    "fill_zone_width",
    "sink_zone_width",
    "narrowband_dx",
    "seed_depth_fraction",
    "min_particles_per_voxel",
    "max_particles_per_voxel",
    "probes",
];

fn err(line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        msg: msg.into(),
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("value must be finite".into())
    }
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{}`", s.trim()));
    }
    Ok(Vec3::new(parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?))
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{}`", s.trim()));
    }
    Ok((parse_f64(parts[0])?, parse_f64(parts[1])?))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

fn parse_usize(s: &str) -> std::result::Result<usize, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a non-negative integer", s.trim()))
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(';').map(str::trim).filter(|e| !e.is_empty())
}

fn fmt_vec(v: &Vec3) -> String {
    format!("{:?}, {:?}, {:?}", v.x, v.y, v.z)
}

/// Parses a scene file. Every key is optional; unknown or repeated keys,
/// unparsable values and violated invariants are errors naming the line.
pub fn parse_scene(text: &str) -> Result<SceneConfig> {
    let mut raw: HashMap<String, (usize, String)> = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = line.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(err(line_no, content, "expected `key = value`"));
        };
        let key = k.trim();
        if !KEYS.contains(&key) {
            return Err(err(line_no, key, "unknown key"));
        }
        if let Some((first, _)) = raw.get(key) {
            return Err(err(line_no, key, format!("already set on line {first}")));
        }
        raw.insert(key.to_string(), (line_no, v.trim().to_string()));
    }
    let line_of = |key: &str| raw.get(key).map(|r| r.0).unwrap_or(0);
    fn field<T>(
        raw: &HashMap<String, (usize, String)>,
        key: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<Option<T>> {
        match raw.get(key) {
            None => Ok(None),
            Some((l, v)) => parse(v).map(Some).map_err(|m| err(*l, key, m)),
        }
    }
    let get = &raw;

    let mut c = SceneConfig::default();
    if let Some(v) = field(get, "frames", parse_usize)? {
        c.frames = v;
    }
    if let Some(v) = field(get, "fps", parse_f64)? {
        c.fps = v;
    }
    if let Some(v) = field(get, "seed", |s| s.trim().parse::<u64>().map_err(|_| format!("`{s}` is not a seed")))? {
        c.seed = v;
    }
    if let Some(v) = field(get, "gravity", parse_vec3)? {
        c.gravity = v;
    }
    if let Some(v) = field(get, "rho", parse_f64)? {
        c.rho = v;
    }
    if let Some(v) = field(get, "hd_mode", |s| HdMode::parse(s.trim()).ok_or(format!("`{s}` is not partial or full")))? {
        c.hd_mode = v;
    }
    if let Some(v) = field(get, "dx_bem", parse_f64)? {
        c.dx_bem = v;
    }
    if let Some(v) = field(get, "dx_flip", parse_f64)? {
        c.dx_flip = v;
    }
    let shape = field(get, "tank", |s| match s.trim() {
        "box" | "cylinder" | "none" => Ok(s.trim().to_string()),
        other => Err(format!("`{other}` is not box, cylinder or none")),
    })?
    .unwrap_or_else(|| "box".to_string());
    let tank_min = field(get, "tank_min", parse_vec3)?;
    let tank_size = field(get, "tank_size", parse_vec3)?;
    let tank_center = field(get, "tank_center", parse_vec3)?;
    let tank_radius = field(get, "tank_radius", parse_f64)?;
    let tank_height = field(get, "tank_height", parse_f64)?;
    let unused = |keys: &[&str], shape: &str| -> Result<()> {
        for k in keys {
            if raw.contains_key(*k) {
                return Err(err(line_of(k), k, format!("not used by a {shape} tank")));
            }
        }
        Ok(())
    };
    c.tank = match shape.as_str() {
        "box" => {
            unused(&["tank_center", "tank_radius", "tank_height"], "box")?;
            TankShape::Box {
                min: tank_min.unwrap_or_else(Vec3::zeros),
                size: tank_size.unwrap_or(Vec3::new(1.0, 1.0, 1.0)),
            }
        }
        "cylinder" => {
            unused(&["tank_min", "tank_size"], "cylinder")?;
            TankShape::Cylinder {
                center: tank_center.unwrap_or_else(Vec3::zeros),
                radius: tank_radius.unwrap_or(0.5),
                height: tank_height.unwrap_or(1.0),
            }
        }
        _ => {
            unused(&["tank_min", "tank_size", "tank_center", "tank_radius", "tank_height"], "missing")?;
            TankShape::None
        }
    };
    if let Some(v) = field(get, "rest_depth", parse_f64)? {
        c.rest_depth = v;
    }
    if let Some(v) = field(get, "wave_amplitude", parse_f64)? {
        c.wave_amplitude = v;
    }
    if let Some(v) = field(get, "wave_length", parse_f64)? {
        c.wave_length = v;
    }
    let ic = field(get, "impulse_center", parse_pair)?;
    let ir = field(get, "impulse_radius", parse_f64)?;
    let is = field(get, "impulse_speed", parse_f64)?;
    c.impulse = match (ic, ir, is) {
        (None, None, None) => None,
        (Some(center_xz), Some(radius), Some(speed)) => Some(Impulse { center_xz, radius, speed }),
        _ => {
            let k = ["impulse_center", "impulse_radius", "impulse_speed"]
                .into_iter()
                .find(|k| raw.contains_key(*k))
                .unwrap();
            return Err(err(line_of(k), k, "impulse_center, impulse_radius and impulse_speed go together"));
        }
    };
    let dc = field(get, "drop_center", parse_vec3)?;
    let dr = field(get, "drop_radius", parse_f64)?;
    let dv = field(get, "drop_velocity", parse_vec3)?;
    c.drop = match (dc, dr) {
        (None, None) => {
            if dv.is_some() {
                return Err(err(line_of("drop_velocity"), "drop_velocity", "needs drop_center and drop_radius"));
            }
            None
        }
        (Some(center), Some(radius)) => Some(Drop {
            center,
            radius,
            velocity: dv.unwrap_or_else(Vec3::zeros),
        }),
        _ => {
            let k = if dc.is_some() { "drop_center" } else { "drop_radius" };
            return Err(err(line_of(k), k, "drop_center and drop_radius go together"));
        }
    };
    if let Some(v) = field(get, "flip", parse_bool)? {
        c.flip_enabled = v;
    }
    if let Some(v) = field(get, "coupled", parse_bool)? {
        c.coupled = v;
    }
    let dmin = field(get, "domain_min", parse_vec3)?;
    let dsize = field(get, "domain_size", parse_vec3)?;
    c.domain = match (dmin, dsize) {
        (None, None) => None,
        (Some(a), Some(s)) => Some((a, s)),
        _ => {
            let k = if dmin.is_some() { "domain_min" } else { "domain_size" };
            return Err(err(line_of(k), k, "domain_min and domain_size go together"));
        }
    };
    if let Some(v) = field(get, "domain_keyframes", |s| {
        list(s)
            .map(|e| {
                let (f, p) = e.split_once(':').ok_or(format!("keyframe `{e}` is not `frame: x, y, z`"))?;
                Ok((parse_f64(f)?, parse_vec3(p)?))
            })
            .collect::<std::result::Result<Vec<_>, String>>()
    })? {
        c.keyframes = v;
    }
    let fp = &mut c.flip;
    if let Some(v) = field(get, "flip_blend", parse_f64)? {
        fp.flip_blend = v;
    }
    if let Some(v) = field(get, "cfl_max", parse_f64)? {
        fp.cfl_max = v;
    }
    if let Some(v) = field(get, "particles_per_voxel_target", parse_usize)? {
        fp.particles_per_voxel_target = v;
    }
    if let Some(v) = field(get, "friction_mu", parse_f64)? {
        fp.friction_mu = v;
    }
    if let Some(v) = field(get, "pressure_tol", parse_f64)? {
        fp.pressure_tol = v;
    }
    if let Some(v) = field(get, "max_cg_iters", parse_usize)? {
        fp.max_cg_iters = v;
    }
    fp.gravity = c.gravity;
    fp.rho = c.rho;
    let cp = &mut c.coupling;
    if let Some(v) = field(get, "alpha", parse_f64)? {
        cp.alpha = v;
    }
    if let Some(v) = field(get, "fill_zone_width", parse_usize)? {
        cp.fill_zone_width = v;
    }
    if let Some(v) = field(get, "sink_zone_width", parse_usize)? {
        cp.sink_zone_width = v;
    }
    if let Some(v) = field(get, "narrowband_dx", parse_f64)? {
        cp.narrowband_dx = Some(v);
    }
    if let Some(v) = field(get, "seed_depth_fraction", parse_f64)? {
        cp.seed_depth_fraction = v;
    }
    if let Some(v) = field(get, "min_particles_per_voxel", parse_usize)? {
        cp.min_particles_per_voxel = v;
    }
    if let Some(v) = field(get, "max_particles_per_voxel", parse_usize)? {
        cp.max_particles_per_voxel = v;
    }
    cp.dt_frame = 1.0 / c.fps;
    if let Some(v) = field(get, "probes", |s| list(s).map(parse_pair).collect())? {
        c.probes = v;
    }
    c.check(&line_of)?;
    Ok(c)
}

impl SceneConfig {
    /// Checks the invariants; `line_of` maps a key to its source line.
    fn check(&self, line_of: &dyn Fn(&str) -> usize) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(err(line_of(key), key, format!("must be positive, got {v}")))
            }
        };
        positive("fps", self.fps)?;
        positive("rho", self.rho)?;
        positive("dx_bem", self.dx_bem)?;
        positive("dx_flip", self.dx_flip)?;
        positive("rest_depth", self.rest_depth)?;
        positive("wave_length", self.wave_length)?;
        if self.dx_bem < self.dx_flip {
            let key = if line_of("dx_bem") >= line_of("dx_flip") { "dx_bem" } else { "dx_flip" };
            return Err(err(
                line_of(key),
                key,
                format!("dx_bem ({}) must not be smaller than dx_flip ({})", self.dx_bem, self.dx_flip),
            ));
        }
        match self.tank {
            TankShape::Box { size, .. } => {
                if !(size.x > 0.0 && size.y > 0.0 && size.z > 0.0) {
                    return Err(err(line_of("tank_size"), "tank_size", "all extents must be positive"));
                }
                if self.rest_depth >= size.y {
                    return Err(err(line_of("rest_depth"), "rest_depth", "must be below the tank height"));
                }
            }
            TankShape::Cylinder { radius, height, .. } => {
                positive("tank_radius", radius)?;
                positive("tank_height", height)?;
                if self.rest_depth >= height {
                    return Err(err(line_of("rest_depth"), "rest_depth", "must be below the tank height"));
                }
            }
            TankShape::None => {
                if !self.flip_enabled {
                    return Err(err(line_of("tank"), "tank", "a scene without a tank needs flip = true"));
                }
            }
        }
        if self.wave_amplitude.abs() >= self.rest_depth {
            return Err(err(line_of("wave_amplitude"), "wave_amplitude", "must be smaller than rest_depth"));
        }
        if let Some(i) = self.impulse {
            positive("impulse_radius", i.radius)?;
        }
        if let Some(d) = self.drop {
            positive("drop_radius", d.radius)?;
            if !self.flip_enabled {
                return Err(err(line_of("drop_center"), "drop_center", "drops are carried by particles; set flip = true"));
            }
        }
        if let Some((_, s)) = self.domain {
            if !(s.x > 0.0 && s.y > 0.0 && s.z > 0.0) {
                return Err(err(line_of("domain_size"), "domain_size", "all extents must be positive"));
            }
        }
        if self.domain.is_none() && matches!(self.tank, TankShape::None) && self.flip_enabled {
            return Err(err(line_of("flip"), "flip", "a scene without a tank needs domain_min and domain_size"));
        }
        for w in self.keyframes.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(err(line_of("domain_keyframes"), "domain_keyframes", "frames must increase"));
            }
        }
        self.flip.check().map_err(|m| {
            let key = ["flip_blend", "cfl_max", "pressure_tol", "friction_mu", "rho"]
                .into_iter()
                .find(|k| m.contains(k))
                .unwrap_or("flip");
            err(line_of(key), key, m)
        })?;
        if self.flip.particles_per_voxel_target == 0 {
            return Err(err(
                line_of("particles_per_voxel_target"),
                "particles_per_voxel_target",
                "must be positive",
            ));
        }
        self.coupling.check(self.flip.cfl_max).map_err(|m| {
            let key = KEYS[34..41].iter().copied().find(|k| m.contains(k)).unwrap_or("fill_zone_width");
            err(line_of(key), key, m)
        })?;
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        put("frames", self.frames.to_string());
        put("fps", format!("{:?}", self.fps));
        put("seed", self.seed.to_string());
        put("gravity", fmt_vec(&self.gravity));
        put("rho", format!("{:?}", self.rho));
        put("hd_mode", self.hd_mode.as_str().to_string());
        put("dx_bem", format!("{:?}", self.dx_bem));
        put("dx_flip", format!("{:?}", self.dx_flip));
        match self.tank {
            TankShape::None => put("tank", "none".into()),
            TankShape::Box { min, size } => {
                put("tank", "box".into());
                put("tank_min", fmt_vec(&min));
                put("tank_size", fmt_vec(&size));
            }
            TankShape::Cylinder { center, radius, height } => {
                put("tank", "cylinder".into());
                put("tank_center", fmt_vec(&center));
                put("tank_radius", format!("{radius:?}"));
                put("tank_height", format!("{height:?}"));
            }
        }
        put("rest_depth", format!("{:?}", self.rest_depth));
        put("wave_amplitude", format!("{:?}", self.wave_amplitude));
        put("wave_length", format!("{:?}", self.wave_length));
        if let Some(i) = self.impulse {
            put("impulse_center", format!("{:?}, {:?}", i.center_xz.0, i.center_xz.1));
            put("impulse_radius", format!("{:?}", i.radius));
            put("impulse_speed", format!("{:?}", i.speed));
        }
        if let Some(d) = self.drop {
            put("drop_center", fmt_vec(&d.center));
            put("drop_radius", format!("{:?}", d.radius));
            put("drop_velocity", fmt_vec(&d.velocity));
        }
        put("flip", self.flip_enabled.to_string());
        put("coupled", self.coupled.to_string());
        if let Some((a, b)) = self.domain {
            put("domain_min", fmt_vec(&a));
            put("domain_size", fmt_vec(&b));
        }
        if !self.keyframes.is_empty() {
            let k: Vec<String> = self.keyframes.iter().map(|(f, p)| format!("{f:?}: {}", fmt_vec(p))).collect();
            put("domain_keyframes", k.join("; "));
        }
        let f = &self.flip;
        put("flip_blend", format!("{:?}", f.flip_blend));
        put("cfl_max", format!("{:?}", f.cfl_max));
        put("particles_per_voxel_target", f.particles_per_voxel_target.to_string());
        put("friction_mu", format!("{:?}", f.friction_mu));
        put("pressure_tol", format!("{:?}", f.pressure_tol));
        put("max_cg_iters", f.max_cg_iters.to_string());
        let cp = &self.coupling;
        put("alpha", format!("{:?}", cp.alpha));
        put("fill_zone_width", cp.fill_zone_width.to_string());
        put("sink_zone_width", cp.sink_zone_width.to_string());
        if let Some(h) = cp.narrowband_dx {
            put("narrowband_dx", format!("{h:?}"));
        }
        put("seed_depth_fraction", format!("{:?}", cp.seed_depth_fraction));
        put("min_particles_per_voxel", cp.min_particles_per_voxel.to_string());
        put("max_particles_per_voxel", cp.max_particles_per_voxel.to_string());
        if !self.probes.is_empty() {
            let p: Vec<String> = self.probes.iter().map(|(x, z)| format!("{x:?}, {z:?}")).collect();
            put("probes", p.join("; "));
        }
        s
    }

    /// Height of the still surface.
    pub fn surface_level(&self) -> f64 {
        match self.tank {
            TankShape::Box { min, .. } => min.y + self.rest_depth,
            TankShape::Cylinder { center, .. } => center.y + self.rest_depth,
            TankShape::None => self.rest_depth,
        }
    }

    fn surface_height(&self, x: f64) -> f64 {
        let x0 = match self.tank {
            TankShape::Box { min, .. } => min.x,
            _ => 0.0,
        };
        self.surface_level() + self.wave_amplitude * (2.0 * std::f64::consts::PI * (x - x0) / self.wave_length).cos()
    }

    pub fn container(&self) -> Container {
        match self.tank {
            TankShape::None => Container::Open,
            TankShape::Box { min, size } => Container::Box(BoxContainer { min, max: min + size }),
            TankShape::Cylinder { center, radius, .. } => Container::Cylinder(CylinderContainer {
                center_xz: (center.x, center.z),
                radius,
                floor_y: center.y,
            }),
        }
    }

    /// Surface mesh of the tank liquid, with the initial impulse applied.
    pub fn tank_mesh(&self) -> Option<SurfaceMesh> {
        let eta = |x: f64, _z: f64| self.surface_height(x) - self.surface_level();
        let mut mesh = match self.tank {
            TankShape::None => return None,
            TankShape::Box { min, size } => box_tank(min, (size.x, size.z), self.rest_depth, self.dx_bem, eta),
            TankShape::Cylinder { center, radius, .. } => {
                cylinder_tank((center.x, center.z), radius, center.y, self.rest_depth, self.dx_bem, eta)
            }
        };
        if let Some(imp) = self.impulse {
            let kinds = mesh.vertex_kinds();
            for (i, x) in mesh.vertices.iter().enumerate() {
                let r = (x.x - imp.center_xz.0).hypot(x.z - imp.center_xz.1) / imp.radius;
                if kinds[i] == VertexKind::Free && r < 1.0 {
                    mesh.velocities[i] = Vec3::new(0.0, -imp.speed * (1.0 - r * r).powi(2), 0.0);
                }
            }
        }
        debug_assert!(mesh.labels.contains(&Label::Free));
        Some(mesh)
    }

    /// Frame-0 grid domain box.
    pub fn domain_box(&self, lattice: &Lattice) -> Option<VoxelBox> {
        if !self.flip_enabled {
            return None;
        }
        let (lo, hi) = match (self.domain, self.tank) {
            (Some((a, s)), _) => (a, a + s),
            (None, TankShape::Box { min, size }) => (min, min + size),
            (None, TankShape::Cylinder { center, radius, height }) => (
                Vec3::new(center.x - radius, center.y, center.z - radius),
                Vec3::new(center.x + radius, center.y + height, center.z + radius),
            ),
            (None, TankShape::None) => unreachable!("checked by the parser"),
        };
        let s = |v: f64| (v / lattice.dx).round() as i32;
        Some(VoxelBox::new([s(lo.x), s(lo.y), s(lo.z)], [s(hi.x), s(hi.y), s(hi.z)]))
    }

    /// Builds the frame-0 state.
    pub fn initial_state(&self) -> FrameState {
        let mesh = self.tank_mesh();
        let flip = self.flip_enabled.then(|| {
            let lattice = Lattice::new(self.dx_flip, Vec3::zeros());
            let domain = self.domain_box(&lattice).unwrap();
            let container = self.container();
            // Same depth below the surface as the fill rule seeds at.
            let seed_depth = self.coupling.seed_depth_fraction * default_particle_radius(self.dx_flip);
            let per_axis = ((self.flip.particles_per_voxel_target as f64).cbrt().round() as usize).max(1);
            let drop = self.drop;
            let in_drop = move |x: &Vec3| drop.is_some_and(|d| (x - d.center).norm() < d.radius);
            use crate::flip::Solid;
            let particles = seed_particles(
                &lattice,
                &domain,
                per_axis,
                self.seed,
                |x| {
                    let pool = !matches!(self.tank, TankShape::None) && x.y < self.surface_height(x.x) - seed_depth;
                    container.phi(x) > 0.0 && (pool || in_drop(x))
                },
                |x| if in_drop(x) { drop.unwrap().velocity } else { Vec3::zeros() },
            );
            FlipDomain {
                particles,
                lattice,
                params: self.flip.clone(),
                coupling: self.coupling.clone(),
                container,
                domain,
                motion: DomainMotion {
                    keyframes: self.keyframes.clone(),
                },
                radius: default_particle_radius(self.dx_flip),
                seed: self.seed,
                coupled: self.coupled && mesh.is_some(),
            }
        });
        FrameState {
            frame: 0,
            time: 0.0,
            dt_frame: 1.0 / self.fps,
            gravity: self.gravity,
            rho: self.rho,
            hd_mode: self.hd_mode,
            mesh,
            flip,
        }
    }
}
