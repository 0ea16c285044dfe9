//! Trajectory metrics: segment-based relative error, rigidly aligned
//! absolute trajectory error, and completion percentage, plus the plain
//! "stamp x y yaw" trajectory file format shared across the toolkit.

use crate::outliers::rigid_fit_svd;
use crate::se2::Pose2;
use crate::{Error, Result};
use nalgebra::Vector2;
use std::path::Path;

/// Writes one "stamp x y yaw" line per pose.
pub fn write_trajectory(path: &Path, trajectory: &[(f64, Pose2)]) -> Result<()> {
    let mut body = String::new();
    for (stamp, pose) in trajectory {
        body.push_str(&format!(
            "{:.6} {:.6} {:.6} {:.6}\n",
            stamp,
            pose.x(),
            pose.y(),
            pose.rotation()
        ));
    }
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_trajectory(path: &Path) -> Result<Vec<(f64, Pose2)>> {
    let name = path.display().to_string();
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(&name, e))?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(&name, format!("line {}: expected numbers", i + 1)))?;
        if fields.len() != 4 {
            return Err(Error::format(
                &name,
                format!("line {}: expected 'stamp x y yaw'", i + 1),
            ));
        }
        out.push((fields[0], Pose2::from_xy_theta(fields[1], fields[2], fields[3])));
    }
    Ok(out)
}

/// Pairs each ground-truth pose with the nearest-stamp estimate within
/// `tolerance` seconds.
pub fn associate(
    estimate: &[(f64, Pose2)],
    ground_truth: &[(f64, Pose2)],
    tolerance: f64,
) -> Vec<(Pose2, Pose2)> {
    let mut out = Vec::new();
    for &(stamp, gt_pose) in ground_truth {
        let nearest = estimate
            .iter()
            .min_by(|a, b| (a.0 - stamp).abs().total_cmp(&(b.0 - stamp).abs()));
        if let Some(&(est_stamp, est_pose)) = nearest {
            if (est_stamp - stamp).abs() <= tolerance {
                out.push((est_pose, gt_pose));
            }
        }
    }
    out
}

/// Segment lengths of the relative-error protocol, meters.
pub const SEGMENT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

/// Segment-based relative error over associated pose pairs: mean
/// translation error as a percentage of segment length and mean rotation
/// error in degrees per 100 m, averaged over all start poses and all
/// segment lengths from 100 to 800 m of ground-truth path.
pub fn relative_error(pairs: &[(Pose2, Pose2)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::invalid("relative_error: need at least two associated poses"));
    }
    // Cumulative ground-truth path length.
    let mut cumulative = vec![0.0f64];
    for w in pairs.windows(2) {
        let step = (w[1].1.translation() - w[0].1.translation()).norm();
        cumulative.push(cumulative.last().unwrap() + step);
    }
    let total = *cumulative.last().unwrap();
    if total < SEGMENT_LENGTHS[0] {
        return Err(Error::invalid(format!(
            "relative_error: trajectory covers {total:.1} m, need at least {} m",
            SEGMENT_LENGTHS[0]
        )));
    }
    let mut trans_sum = 0.0;
    let mut rot_sum = 0.0;
    let mut count = 0usize;
    for (_, t_sum, r_sum, n) in segment_sums(pairs, &cumulative, total) {
        trans_sum += t_sum;
        rot_sum += r_sum;
        count += n;
    }
    if count == 0 {
        return Err(Error::invalid("relative_error: no complete segments"));
    }
    Ok((trans_sum / count as f64, rot_sum / count as f64))
}

/// Relative error broken down by segment length: one
/// `(length, % translation, deg/100 m)` row per length with at least one
/// complete segment.
pub fn relative_error_per_length(pairs: &[(Pose2, Pose2)]) -> Result<Vec<(f64, f64, f64)>> {
    if pairs.len() < 2 {
        return Err(Error::invalid("relative_error: need at least two associated poses"));
    }
    let mut cumulative = vec![0.0f64];
    for w in pairs.windows(2) {
        let step = (w[1].1.translation() - w[0].1.translation()).norm();
        cumulative.push(cumulative.last().unwrap() + step);
    }
    let total = *cumulative.last().unwrap();
    Ok(segment_sums(pairs, &cumulative, total)
        .into_iter()
        .filter(|&(_, _, _, n)| n > 0)
        .map(|(length, t_sum, r_sum, n)| (length, t_sum / n as f64, r_sum / n as f64))
        .collect())
}

/// Error sums and segment counts per segment length.
fn segment_sums(
    pairs: &[(Pose2, Pose2)],
    cumulative: &[f64],
    total: f64,
) -> Vec<(f64, f64, f64, usize)> {
    let mut out = Vec::with_capacity(SEGMENT_LENGTHS.len());
    for &length in &SEGMENT_LENGTHS {
        let mut trans_sum = 0.0;
        let mut rot_sum = 0.0;
        let mut count = 0usize;
        for start in 0..pairs.len() {
            let target = cumulative[start] + length;
            if target > total {
                break;
            }
            let end = match cumulative[start..].iter().position(|&c| c >= target) {
                Some(offset) => start + offset,
                None => break,
            };
            let (est_a, gt_a) = pairs[start];
            let (est_b, gt_b) = pairs[end];
            let gt_rel = gt_a.inverse().compose(&gt_b);
            let est_rel = est_a.inverse().compose(&est_b);
            let error = gt_rel.inverse().compose(&est_rel);
            trans_sum += error.translation().norm() / length * 100.0;
            rot_sum += error.rotation().abs().to_degrees() / (length / 100.0);
            count += 1;
        }
        out.push((length, trans_sum, rot_sum, count));
    }
    out
}

/// Root-mean-square position error after closed-form rigid alignment of
/// the estimate onto the ground truth (no scale).
pub fn absolute_trajectory_error(pairs: &[(Pose2, Pose2)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::invalid("absolute_trajectory_error: need at least two poses"));
    }
    let est: Vec<Vector2<f64>> = pairs.iter().map(|(e, _)| e.translation()).collect();
    let gt: Vec<Vector2<f64>> = pairs.iter().map(|(_, g)| g.translation()).collect();
    let alignment = rigid_fit_svd(&est, &gt)?;
    let sum_sq: f64 = est
        .iter()
        .zip(gt.iter())
        .map(|(e, g)| (alignment.act_on_point(e) - g).norm_squared())
        .sum();
    Ok((sum_sq / pairs.len() as f64).sqrt())
}

/// Fraction of frames processed before failure, as a percentage.
pub fn completion_percentage(frames_completed: usize, frames_total: usize) -> Result<f64> {
    if frames_total == 0 {
        return Err(Error::invalid("completion_percentage: total must be positive"));
    }
    Ok(frames_completed as f64 / frames_total as f64 * 100.0)
}
