//! Batch runs: frame stepping with per-frame dumps and metrics.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::SceneConfig;
use crate::bem::mesh::write_obj;
use crate::coupling::{step_frame, FrameState};
use crate::flip::ply::write_ply;
use crate::harness::{mesh_volume_outside, particle_volume, surface_elevation, ElevationSource, MetricsRow, MetricsWriter};
use crate::{Error, Result};

/// Columns per axis of the footprint integration of the mesh volume inside
/// the grid domain.
const VOLUME_COLUMNS: usize = 40;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    pub max_rel_div: f64,
}

/// Liquid volume: particles at their nominal volume plus the mesh volume
/// outside the grid domain (the whole mesh volume without a coupled domain).
pub fn total_volume(state: &FrameState) -> f64 {
    match (&state.flip, &state.mesh) {
        (Some(f), mesh) => {
            let particles = particle_volume(&f.particles, f.lattice.dx, f.params.particles_per_voxel_target);
            let outside = match mesh {
                Some(m) if f.coupled => mesh_volume_outside(m, &f.lattice, &f.domain, VOLUME_COLUMNS),
                _ => 0.0,
            };
            particles + outside
        }
        (None, Some(m)) => m.signed_volume(),
        (None, None) => 0.0,
    }
}

/// Probe heights: from the particles over the grid domain, from the mesh
/// elsewhere. Dry probes read as NaN.
pub fn probe_heights(state: &FrameState, probes: &[(f64, f64)]) -> Vec<f64> {
    probes
        .iter()
        .map(|&p| {
            let over_domain = state.flip.as_ref().filter(|f| f.zones().covers_xz(&crate::Vec3::new(p.0, 0.0, p.1)));
            let src = match (over_domain, &state.mesh) {
                (Some(f), _) => ElevationSource::Particles(&f.particles, &f.lattice),
                (None, Some(m)) => ElevationSource::Mesh(m),
                (None, None) => return f64::NAN,
            };
            surface_elevation(src, p).unwrap_or(f64::NAN)
        })
        .collect()
}

fn write_manifest(cfg: &SceneConfig, out: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(out.join("manifest.txt"))?);
    writeln!(f, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "# seed {}", cfg.seed)?;
    write!(f, "{}", cfg.to_text())?;
    f.flush()?;
    Ok(())
}

fn dump_frame(state: &FrameState, out: &Path, frame: usize) -> Result<()> {
    if let Some(m) = &state.mesh {
        let mut f = BufWriter::new(File::create(out.join(format!("bem_{frame:04}.obj")))?);
        write_obj(&mut f, m)?;
        f.flush()?;
    }
    if let Some(d) = &state.flip {
        let mut f = BufWriter::new(File::create(out.join(format!("particles_{frame:04}.ply")))?);
        write_ply(&mut f, &d.particles)?;
        f.flush()?;
    }
    Ok(())
}

/// Writes the state the failing frame started from, and the error.
fn dump_failure(state: &FrameState, out: &Path, e: &Error) -> Result<()> {
    let mut f = BufWriter::new(File::create(out.join("failure.txt"))?);
    writeln!(f, "frame {}", state.frame)?;
    writeln!(f, "error: {e}")?;
    if let Error::NonConvergence { residual_history, .. } = e {
        writeln!(f, "residual history:")?;
        for r in residual_history {
            writeln!(f, "{r:?}")?;
        }
    }
    f.flush()?;
    if let Some(m) = &state.mesh {
        write_obj(BufWriter::new(File::create(out.join("failure_bem.obj"))?), m)?;
    }
    if let Some(d) = &state.flip {
        write_ply(BufWriter::new(File::create(out.join("failure_particles.ply"))?), &d.particles)?;
    }
    Ok(())
}

/// Runs `cfg.frames` frames into `out`: a manifest, then per frame
/// `bem_%04d.obj`, `particles_%04d.ply` and a `metrics.csv` row. On error the
/// frame-start state is dumped next to a `failure.txt`.
pub fn run_simulation(cfg: &SceneConfig, out: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out)?;
    write_manifest(cfg, out)?;
    let mut summary = RunSummary::default();
    if cfg.frames == 0 {
        return Ok(summary);
    }
    let mut state = cfg.initial_state();
    let mut metrics = MetricsWriter::new(BufWriter::new(File::create(out.join("metrics.csv"))?), cfg.probes.len())?;
    for _ in 0..cfg.frames {
        let report = match step_frame(&mut state) {
            Ok(r) => r,
            Err(e) => {
                dump_failure(&state, out, &e)?;
                return Err(e);
            }
        };
        dump_frame(&state, out, state.frame)?;
        metrics.write(&MetricsRow {
            frame: state.frame,
            t: state.time,
            max_rel_div: report.max_rel_div,
            volume: total_volume(&state),
            probes: probe_heights(&state, &cfg.probes),
        })?;
        log::info!("frame {} done (max rel div {:e})", state.frame, report.max_rel_div);
        summary.frames += 1;
        summary.max_rel_div = summary.max_rel_div.max(report.max_rel_div);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::parse_scene;
    use crate::cli::scenes::RestScene;
    use crate::harness::metrics::read_metrics;

    const REST: &str = RestScene::SCENE;

    #[test]
    fn zero_frames_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = parse_scene(REST).unwrap();
        cfg.frames = 0;
        run_simulation(&cfg, dir.path()).unwrap();
        let names: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["manifest.txt".to_string()]);
        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        let body: String = manifest.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_scene(&body).unwrap(), cfg);
    }

    #[test]
    fn rest_pool_ten_frames() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = parse_scene(REST).unwrap();
        cfg.frames = 10;
        run_simulation(&cfg, dir.path()).unwrap();
        let rows = read_metrics(&fs::read_to_string(dir.path().join("metrics.csv")).unwrap()).unwrap();
        assert_eq!(rows.len(), 10);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.frame, i + 1);
            assert!(r.max_rel_div <= 1e-7, "{r:?}");
            assert!((r.probes[0] - 0.25).abs() < 0.025, "{r:?}");
            assert!((r.probes[1] - 0.25).abs() < 0.025, "{r:?}");
        }
        assert!(dir.path().join("bem_0010.obj").exists());
        assert!(dir.path().join("particles_0010.ply").exists());
    }

    #[test]
    fn same_seed_same_dumps() {
        let mut cfg = parse_scene(REST).unwrap();
        cfg.frames = 3;
        cfg.seed = 9;
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_simulation(&cfg, a.path()).unwrap();
        run_simulation(&cfg, b.path()).unwrap();
        for name in ["particles_0003.ply", "bem_0003.obj", "metrics.csv"] {
            assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
        }
    }
}
