//! Command line front-end: odometry, SLAM, simulation and evaluation.

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use radar_slam::config::PipelineConfig;
use radar_slam::eval::{
    absolute_trajectory_error, associate, completion_percentage, read_trajectory, relative_error,
    relative_error_per_length,
};
use radar_slam::pipeline::{run_odometry, run_slam, write_outputs, Mode, PipelineResult};
use radar_slam::se2::Pose2;
use radar_slam::sim::{generate_sequence, square_loop_trajectory, ReflectorWorld, SimConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "radar-slam", version, about = "FMCW radar odometry and SLAM toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Deterministic: loop closure runs synchronously at keyframe creation.
    Test,
    /// Loop closure runs on its own thread.
    Threaded,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Constant-speed straight line.
    Straight,
    /// Closed square loop revisiting its start.
    Square,
}

#[derive(Subcommand)]
enum Command {
    /// Run radar odometry over a scan sequence directory
    Odometry {
        /// Sequence directory containing manifest.txt and scan files
        #[arg(long)]
        sequence: PathBuf,
        /// key=value pipeline configuration file; defaults apply when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for trajectory, map and logs
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full SLAM pipeline (odometry + loop closure)
    Slam {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Loop-closure scheduling
        #[arg(long, value_enum, default_value_t = ModeArg::Threaded)]
        mode: ModeArg,
    },
    /// Generate a synthetic radar sequence with ground truth
    Simulate {
        /// Output sequence directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Preset::Straight)]
        preset: Preset,
        /// Seed for reflector layout and speckle noise
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of scans (straight preset)
        #[arg(long, default_value_t = 50)]
        frames: usize,
        /// Vehicle speed, m/s
        #[arg(long, default_value_t = 10.0)]
        speed: f64,
        /// Square side length, meters (square preset)
        #[arg(long, default_value_t = 50.0)]
        side: f64,
        /// Number of point reflectors
        #[arg(long, default_value_t = 120)]
        reflectors: usize,
        /// Speckle noise standard deviation, power units
        #[arg(long, default_value_t = 2.0)]
        speckle: f64,
    },
    /// Compare a trajectory against ground truth (RE / ATE / completion)
    Evaluate {
        /// Estimated trajectory file ("stamp x y yaw")
        #[arg(long)]
        estimate: PathBuf,
        /// Ground-truth trajectory file
        #[arg(long)]
        ground_truth: PathBuf,
        /// Stamp association tolerance, seconds
        #[arg(long, default_value_t = 0.125)]
        tolerance: f64,
        /// Directory for the per-length error CSV and gnuplot XY path files
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Odometry { sequence, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let result = run_odometry(&sequence, &cfg)?;
            report_run(&result, &out)
        }
        Command::Slam { sequence, config, out, mode } => {
            let cfg = load_config(config.as_deref())?;
            let mode = match mode {
                ModeArg::Test => Mode::Test,
                ModeArg::Threaded => Mode::Threaded,
            };
            let result = run_slam(&sequence, &cfg, mode)?;
            report_run(&result, &out)
        }
        Command::Simulate { out, preset, seed, frames, speed, side, reflectors, speckle } => {
            simulate(&out, preset, seed, frames, speed, side, reflectors, speckle)
        }
        Command::Evaluate { estimate, ground_truth, tolerance, out } => {
            evaluate(&estimate, &ground_truth, tolerance, out.as_deref())
        }
    }
}

fn load_config(path: Option<&Path>) -> anyhow::Result<PipelineConfig> {
    match path {
        Some(p) => Ok(PipelineConfig::from_file(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn report_run(result: &PipelineResult, out: &Path) -> anyhow::Result<()> {
    write_outputs(result, out)?;
    println!(
        "frames {}/{} processed, {} keyframes, {} loop closures accepted",
        result.frames_completed,
        result.frames_total,
        result.map.keyframes().len(),
        result.loop_log.iter().filter(|e| e.accepted).count()
    );
    if !result.coasted_frames.is_empty() {
        println!(
            "coasted {} frames on the constant-velocity model: {:?}",
            result.coasted_frames.len(),
            result.coasted_frames
        );
    }
    println!("outputs written to {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    out: &Path,
    preset: Preset,
    seed: u64,
    frames: usize,
    speed: f64,
    side: f64,
    reflectors: usize,
    speckle: f64,
) -> anyhow::Result<()> {
    if speed <= 0.0 {
        bail!("--speed must be positive");
    }
    let frame_dt = 0.25;
    let mut rng = StdRng::seed_from_u64(seed);
    let (trajectory, x_range, y_range) = match preset {
        Preset::Straight => {
            let traj: Vec<(f64, Pose2)> = (0..frames)
                .map(|i| {
                    (
                        i as f64 * frame_dt,
                        Pose2::from_xy_theta(speed * frame_dt * i as f64, 0.0, 0.0),
                    )
                })
                .collect();
            let length = speed * frame_dt * frames as f64;
            (traj, (-20.0, length + 30.0), (-30.0, 30.0))
        }
        Preset::Square => {
            if side <= 0.0 {
                bail!("--side must be positive");
            }
            let traj = square_loop_trajectory(side, 0.4 * side, 0.3 * side, speed, frame_dt);
            (traj, (-25.0, side + 25.0), (-25.0, side + 25.0))
        }
    };
    let world = ReflectorWorld::new(
        (0..reflectors.max(1))
            .map(|_| {
                (
                    nalgebra::Vector2::new(
                        rng.gen_range(x_range.0..x_range.1),
                        rng.gen_range(y_range.0..y_range.1),
                    ),
                    rng.gen_range(150.0..250.0),
                )
            })
            .collect(),
        x_range.1.max(y_range.1),
    )?;
    let cfg = SimConfig {
        speckle_std: speckle,
        seed,
        ..Default::default()
    };
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    generate_sequence(&trajectory, &world, &cfg, out)?;
    println!(
        "wrote {} scans and ground truth to {}",
        trajectory.len(),
        out.display()
    );
    Ok(())
}

fn evaluate(
    estimate: &Path,
    ground_truth: &Path,
    tolerance: f64,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let est = read_trajectory(estimate)?;
    let gt = read_trajectory(ground_truth)?;
    let pairs = associate(&est, &gt, tolerance);
    if pairs.len() < 2 {
        bail!(
            "associated only {} pose pairs within {tolerance} s \
             (estimate has {} poses, ground truth has {}); check the time bases",
            pairs.len(),
            est.len(),
            gt.len()
        );
    }
    let ate = absolute_trajectory_error(&pairs)?;
    let completion = completion_percentage(pairs.len(), gt.len())?;
    match relative_error(&pairs) {
        Ok((t, r)) => {
            println!("translation RE   {t:8.3} %");
            println!("rotation RE      {r:8.3} deg/100m");
        }
        Err(_) => {
            println!("translation RE        n/a (path shorter than 100 m)");
            println!("rotation RE           n/a (path shorter than 100 m)");
        }
    }
    println!("ATE              {ate:8.3} m");
    println!("completion       {completion:8.1} %  ({} of {} ground-truth poses)", pairs.len(), gt.len());

    if let Some(dir) = out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut csv = String::from("length_m,translation_pct,rotation_deg_per_100m\n");
        if let Ok(rows) = relative_error_per_length(&pairs) {
            for (length, t, r) in rows {
                csv.push_str(&format!("{length:.0},{t:.6},{r:.6}\n"));
            }
        }
        std::fs::write(dir.join("re_by_length.csv"), csv)?;
        let xy = |poses: &[(Pose2, Pose2)], pick_est: bool| -> String {
            poses
                .iter()
                .map(|(e, g)| {
                    let p = if pick_est { e } else { g };
                    format!("{:.6} {:.6}\n", p.x(), p.y())
                })
                .collect()
        };
        std::fs::write(dir.join("est_xy.txt"), xy(&pairs, true))?;
        std::fs::write(dir.join("gt_xy.txt"), xy(&pairs, false))?;
        println!("error table and XY paths written to {}", dir.display());
    }
    Ok(())
}
