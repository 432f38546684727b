use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hybrid_liquid::cli::{parse_scene, run_simulation, validate};
use hybrid_liquid::Error;

#[derive(Parser)]
#[command(version, about = "Hybrid particle-grid / boundary-element liquid simulator")]
struct Args {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scene file and write per-frame dumps.
    Run {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `frames` from the scene file.
        #[arg(long)]
        frames: Option<usize>,
        /// Overrides `seed` from the scene file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; affects wall time only.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a built-in validation suite.
    Validate {
        /// dispersion, stokes-interp, domain-extension, rest or units.
        #[arg(long)]
        suite: String,
    },
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, _: &log::Metadata) -> bool {
        true
    }

    fn log(&self, record: &log::Record) {
        eprintln!("[{}] {}", record.level(), record.args());
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn exec(args: Args) -> Result<bool, Error> {
    match args.command {
        Command::Run {
            scene,
            out,
            frames,
            seed,
            threads,
        } => {
            if let Some(n) = threads {
                // Fails only if the pool was already built, which cannot happen here.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
            }
            let text = std::fs::read_to_string(&scene)?;
            let mut cfg = parse_scene(&text)?;
            if let Some(n) = frames {
                cfg.frames = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let summary = run_simulation(&cfg, &out)?;
            println!(
                "{} frames written to {}, max relative divergence {:e}",
                summary.frames,
                out.display(),
                summary.max_rel_div
            );
            Ok(true)
        }
        Command::Validate { suite } => {
            let report = validate(&suite)?;
            println!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.verbose {
        let _ = log::set_logger(&LOGGER).map(|()| log::set_max_level(log::LevelFilter::Info));
    }
    match exec(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
