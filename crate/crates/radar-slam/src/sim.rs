//! Synthetic FMCW radar sequences with per-beam motion distortion and a
//! simple noise taxonomy (speckle, saturation, multipath).
//!
//! Each azimuth row of a scan is rendered from the sensor pose at that
//! row's own capture time, so a moving sensor produces the characteristic
//! distortion seam between the first and last rows.

use crate::eval::write_trajectory;
use crate::geometry::{io, PolarScan};
use crate::se2::{exp_twist, log_pose, Pose2, Twist2};
use crate::{Error, Result};
use nalgebra::Vector2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::path::Path;

/// Name of the ground-truth trajectory file inside a sequence directory.
pub const GROUND_TRUTH_NAME: &str = "ground_truth.txt";

/// Point reflectors in the world frame.
#[derive(Debug, Clone)]
pub struct ReflectorWorld {
    reflectors: Vec<(Vector2<f64>, f64)>,
    pub bounds: f64,
}

impl ReflectorWorld {
    /// `reflectors`: (position meters, reflectivity 0-255).
    pub fn new(reflectors: Vec<(Vector2<f64>, f64)>, bounds: f64) -> Result<Self> {
        if reflectors.is_empty() {
            return Err(Error::invalid("world needs at least one reflector"));
        }
        if reflectors
            .iter()
            .any(|(p, q)| !p.x.is_finite() || !p.y.is_finite() || !(0.0..=255.0).contains(q))
        {
            return Err(Error::invalid("reflectivity must be finite and within 0-255"));
        }
        Ok(ReflectorWorld { reflectors, bounds })
    }

    pub fn reflectors(&self) -> &[(Vector2<f64>, f64)] {
        &self.reflectors
    }
}

/// Sensor model and noise settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_azimuths: usize,
    pub n_range_bins: usize,
    /// Range bin size, meters.
    pub range_resolution: f64,
    /// Scan period, seconds.
    pub scan_period: f64,
    /// Zero-mean additive noise, power units; 0 disables.
    pub speckle_std: f64,
    pub saturation_level: f64,
    /// 0-1; deposits a ghost at twice the range when positive.
    pub multipath_gain: f64,
    /// Antenna beam spread across azimuth rows, in rows; 0 confines each
    /// return to its nearest row. A finite spread lets downstream code
    /// recover sub-row azimuth from the blob centroid, as with a real
    /// antenna whose beamwidth exceeds the azimuth step.
    pub azimuth_beam_sigma: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_azimuths: 400,
            n_range_bins: 1200,
            range_resolution: 0.0438,
            scan_period: 0.25,
            speckle_std: 0.0,
            saturation_level: 255.0,
            multipath_gain: 0.0,
            azimuth_beam_sigma: 0.6,
            seed: 0,
        }
    }
}

/// Range-response standard deviation, bins.
const DEPOSIT_SIGMA: f64 = 1.5;

/// Non-physical attenuation keeping far reflectors detectable.
fn attenuation(range: f64) -> f64 {
    1.0 / (1.0 + range / 100.0)
}

/// Deposits an energy-normalized Gaussian range response into one row.
/// The deposited total equals `energy` (before clipping) whenever the
/// kernel support fits inside the row.
fn deposit(row: &mut [f64], center_bin: f64, energy: f64) {
    let half = (6.0 * DEPOSIT_SIGMA).ceil() as i64;
    let c = center_bin.round() as i64;
    let mut weights = Vec::with_capacity((2 * half + 1) as usize);
    let mut total = 0.0;
    for k in c - half..=c + half {
        let d = k as f64 - center_bin;
        let w = (-d * d / (2.0 * DEPOSIT_SIGMA * DEPOSIT_SIGMA)).exp();
        weights.push((k, w));
        total += w;
    }
    if total <= 0.0 {
        return;
    }
    for (k, w) in weights {
        if k >= 0 && (k as usize) < row.len() {
            row[k as usize] += energy * w / total;
        }
    }
}

/// Renders one scan; `pose_at_time` maps beam time (relative to the scan
/// center, seconds) to the sensor pose. `scan_index` selects the noise
/// substream so sequences are reproducible scan-by-scan.
pub fn render_scan_indexed<F: Fn(f64) -> Pose2>(
    world: &ReflectorWorld,
    pose_at_time: F,
    cfg: &SimConfig,
    scan_index: u64,
    stamp: f64,
) -> Result<PolarScan> {
    let n = cfg.n_azimuths;
    let mut power = vec![0.0f64; n * cfg.n_range_bins];
    let max_range = cfg.n_range_bins as f64 * cfg.range_resolution;
    for a in 0..n {
        let t_a = (a as f64 - n as f64 / 2.0) / n as f64 * cfg.scan_period;
        let pose = pose_at_time(t_a);
        let inv = pose.inverse();
        let row = &mut power[a * cfg.n_range_bins..(a + 1) * cfg.n_range_bins];
        for (p, reflectivity) in &world.reflectors {
            let local = inv.act_on_point(p);
            let r = local.norm();
            if r < cfg.range_resolution || r >= max_range {
                continue;
            }
            let theta = local.y.atan2(local.x);
            // Row convention: theta = -a * 2pi / n.
            let row_f = -theta * n as f64 / std::f64::consts::TAU;
            // Signed row offset between the return and this row, wrapped.
            let mut d = (row_f - a as f64).rem_euclid(n as f64);
            if d > n as f64 / 2.0 {
                d -= n as f64;
            }
            let sigma = cfg.azimuth_beam_sigma;
            let weight = if sigma > 0.0 {
                if d.abs() > 4.0 * sigma {
                    continue;
                }
                // Normalize against the full comb of rows so the energy
                // summed across rows stays close to the reflected energy.
                let k0 = d.round() as i64;
                let mut comb = 0.0;
                for k in k0 - 6..=k0 + 6 {
                    let dd = d - k as f64;
                    comb += (-dd * dd / (2.0 * sigma * sigma)).exp();
                }
                (-d * d / (2.0 * sigma * sigma)).exp() / comb
            } else {
                if d.round() != 0.0 {
                    continue;
                }
                1.0
            };
            let energy = reflectivity * attenuation(r) * weight;
            deposit(row, r / cfg.range_resolution, energy);
            if cfg.multipath_gain > 0.0 && 2.0 * r < max_range {
                deposit(row, 2.0 * r / cfg.range_resolution, energy * cfg.multipath_gain);
            }
        }
    }
    if cfg.speckle_std > 0.0 {
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        rng.set_stream(scan_index);
        for p in power.iter_mut() {
            // Box-Muller from two uniforms keeps the dependency surface small.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            *p = (*p + cfg.speckle_std * z).max(0.0);
        }
    }
    for p in power.iter_mut() {
        *p = p.min(cfg.saturation_level);
    }
    PolarScan::new(
        power,
        n,
        cfg.n_range_bins,
        cfg.range_resolution,
        cfg.scan_period,
        stamp,
        None,
    )
}

/// [`render_scan_indexed`] with scan index 0 and stamp 0.
pub fn render_scan<F: Fn(f64) -> Pose2>(world: &ReflectorWorld, pose_at_time: F, cfg: &SimConfig) -> Result<PolarScan> {
    render_scan_indexed(world, pose_at_time, cfg, 0, 0.0)
}

/// Renders the trajectory into a sequence directory: numbered scan files,
/// manifest, and a "stamp x y yaw" ground-truth file. Within each scan
/// period the motion is interpolated at constant twist.
pub fn generate_sequence(
    trajectory: &[(f64, Pose2)],
    world: &ReflectorWorld,
    cfg: &SimConfig,
    dir: &Path,
) -> Result<()> {
    if trajectory.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid("trajectory stamps must be strictly increasing"));
    }
    let mut scans = Vec::with_capacity(trajectory.len());
    for (i, &(stamp, pose)) in trajectory.iter().enumerate() {
        let twist = if i + 1 < trajectory.len() {
            let (next_stamp, next_pose) = trajectory[i + 1];
            let rel = pose.inverse().compose(&next_pose);
            Twist2::from_vector(&(log_pose(&rel) / (next_stamp - stamp)))
        } else if i > 0 {
            let (prev_stamp, prev_pose) = trajectory[i - 1];
            let rel = prev_pose.inverse().compose(&pose);
            Twist2::from_vector(&(log_pose(&rel) / (stamp - prev_stamp)))
        } else {
            Twist2::zero()
        };
        let scan = render_scan_indexed(
            world,
            |t| pose.compose(&exp_twist(&twist, t)),
            cfg,
            i as u64,
            stamp,
        )?;
        scans.push(scan);
    }
    io::write_sequence(dir, &scans)?;
    write_trajectory(&dir.join(GROUND_TRUTH_NAME), trajectory)
}

/// Closed square path with rounded corners and a revisit along the first
/// side: four straights of `side - 2 * turn_radius` meters joined by
/// quarter-circle left turns of `turn_radius`, plus `extra` meters back
/// along the first side, sampled every `frame_dt` seconds at `speed` m/s.
/// The turn radius keeps per-frame rotation small enough to track.
pub fn square_loop_trajectory(
    side: f64,
    extra: f64,
    turn_radius: f64,
    speed: f64,
    frame_dt: f64,
) -> Vec<(f64, Pose2)> {
    let r = turn_radius.min(side / 2.0);
    let straight = side - 2.0 * r;
    let quarter = std::f64::consts::FRAC_PI_2 * r;
    let total = 4.0 * (straight + quarter) + extra;
    let step = speed * frame_dt;
    let n = (total / step).floor() as usize + 1;

    let pose_at = |mut s: f64| -> Pose2 {
        let mut pos = Vector2::new(0.0, 0.0);
        let mut yaw = 0.0f64;
        for _ in 0..4 {
            if s <= straight {
                let dir = Vector2::new(yaw.cos(), yaw.sin());
                return Pose2::from_xy_theta(
                    pos.x + dir.x * s,
                    pos.y + dir.y * s,
                    crate::se2::wrap_angle(yaw),
                );
            }
            s -= straight;
            let dir = Vector2::new(yaw.cos(), yaw.sin());
            pos += dir * straight;
            if s <= quarter {
                let phi = s / r;
                let center = pos + Vector2::new(-dir.y, dir.x) * r;
                let radial = pos - center;
                let rotated = Vector2::new(
                    phi.cos() * radial.x - phi.sin() * radial.y,
                    phi.sin() * radial.x + phi.cos() * radial.y,
                );
                let p = center + rotated;
                return Pose2::from_xy_theta(p.x, p.y, crate::se2::wrap_angle(yaw + phi));
            }
            s -= quarter;
            let center = pos + Vector2::new(-dir.y, dir.x) * r;
            pos = center + Vector2::new(dir.x, dir.y) * r;
            yaw += std::f64::consts::FRAC_PI_2;
        }
        // Revisit leg along the first side.
        let dir = Vector2::new(yaw.cos(), yaw.sin());
        Pose2::from_xy_theta(
            pos.x + dir.x * s,
            pos.y + dir.y * s,
            crate::se2::wrap_angle(yaw),
        )
    };

    (0..n)
        .map(|i| (i as f64 * frame_dt, pose_at(i as f64 * step)))
        .collect()
}
