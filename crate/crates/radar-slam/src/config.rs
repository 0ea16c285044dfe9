//! Plain-text `key=value` pipeline configuration.
//!
//! Keys are named after the parameter-table rows; any key omitted from a
//! file keeps its default. Lines starting with `#` are comments.

use crate::{Error, Result};
use std::path::Path;

/// All tunables of the odometry/SLAM pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Maximum selected radar range, meters.
    pub max_polar_distance: f64,
    /// Keypoint detector threshold (determinant of Hessian).
    pub min_hessian: f64,
    /// Pairwise-consistency gate for the clique filter, pixels.
    pub delta_c: f64,
    /// Feature pool size.
    pub max_tracked_points: usize,
    /// Keyframe translation threshold, meters.
    pub keyframe_distance: f64,
    /// Keyframe rotation threshold, radians.
    pub keyframe_rotation: f64,
    /// PCA eigenvalue-ratio threshold for loop candidates.
    pub r_pca: f64,
    /// Cartesian image resolution, meters per pixel.
    pub cartesian_resolution: f64,
    /// Keyframe trigger when the live track count drops below this.
    pub min_tracked_points: usize,
    /// Point-cloud peak prominence, power units.
    pub prominence: f64,
    /// Point-cloud peak separation, range bins.
    pub min_separation_bins: usize,
    /// Descriptor match threshold (L2).
    pub match_threshold: f64,
    /// Minimum keyframe-id gap for loop candidates.
    pub temporal_gap: u64,
    /// Forces all beam times to zero (distortion-compensation ablation).
    pub disable_motion_compensation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_polar_distance: 87.5,
            min_hessian: 700.0,
            delta_c: 3.0,
            max_tracked_points: 60,
            keyframe_distance: 2.0,
            keyframe_rotation: 0.2,
            r_pca: 3.0,
            cartesian_resolution: 0.25,
            min_tracked_points: 30,
            prominence: 8.0,
            min_separation_bins: 5,
            match_threshold: 0.15,
            temporal_gap: 50,
            disable_motion_compensation: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_str_content(content: &str, name: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format(name, format!("line {}: expected key=value", i + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| Error::format(name, format!("line {}: bad {what} value '{value}'", i + 1));
            match key {
                "max_polar_distance" => cfg.max_polar_distance = value.parse().map_err(|_| bad(key))?,
                "min_hessian" => cfg.min_hessian = value.parse().map_err(|_| bad(key))?,
                "delta_c" => cfg.delta_c = value.parse().map_err(|_| bad(key))?,
                "max_tracked_points" => cfg.max_tracked_points = value.parse().map_err(|_| bad(key))?,
                "keyframe_distance" => cfg.keyframe_distance = value.parse().map_err(|_| bad(key))?,
                "keyframe_rotation" => cfg.keyframe_rotation = value.parse().map_err(|_| bad(key))?,
                "r_pca" => cfg.r_pca = value.parse().map_err(|_| bad(key))?,
                "cartesian_resolution" => cfg.cartesian_resolution = value.parse().map_err(|_| bad(key))?,
                "min_tracked_points" => cfg.min_tracked_points = value.parse().map_err(|_| bad(key))?,
                "prominence" => cfg.prominence = value.parse().map_err(|_| bad(key))?,
                "min_separation_bins" => cfg.min_separation_bins = value.parse().map_err(|_| bad(key))?,
                "match_threshold" => cfg.match_threshold = value.parse().map_err(|_| bad(key))?,
                "temporal_gap" => cfg.temporal_gap = value.parse().map_err(|_| bad(key))?,
                "disable_motion_compensation" => {
                    cfg.disable_motion_compensation = value.parse().map_err(|_| bad(key))?
                }
                other => {
                    return Err(Error::format(
                        name,
                        format!("line {}: unknown key '{other}'", i + 1),
                    ))
                }
            }
        }
        cfg.validate(name)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(&name, e))?;
        Self::from_str_content(&content, &name)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let positive = [
            ("max_polar_distance", self.max_polar_distance),
            ("min_hessian", self.min_hessian),
            ("delta_c", self.delta_c),
            ("keyframe_distance", self.keyframe_distance),
            ("keyframe_rotation", self.keyframe_rotation),
            ("r_pca", self.r_pca),
            ("cartesian_resolution", self.cartesian_resolution),
            ("prominence", self.prominence),
            ("match_threshold", self.match_threshold),
        ];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::format(name, format!("{key} must be positive")));
            }
        }
        if self.max_tracked_points == 0 {
            return Err(Error::format(name, "max_tracked_points must be positive"));
        }
        Ok(())
    }

    pub fn loop_closure(&self) -> crate::loop_closure::LoopClosureConfig {
        crate::loop_closure::LoopClosureConfig {
            prominence: self.prominence,
            min_separation_bins: self.min_separation_bins,
            pca_ratio_threshold: self.r_pca,
            match_threshold: self.match_threshold,
            temporal_gap: self.temporal_gap,
            min_hessian: self.min_hessian,
            ..Default::default()
        }
    }

    pub fn keyframe_policy(&self) -> crate::map::KeyframePolicy {
        crate::map::KeyframePolicy {
            distance_m: self.keyframe_distance,
            rotation_rad: self.keyframe_rotation,
            min_tracked: self.min_tracked_points,
        }
    }
}
