//! End-to-end odometry and SLAM over a scan sequence directory.
//!
//! The tracking loop converts each polar scan, tracks features with KLT,
//! filters correspondences with the maximum-clique test, initializes the
//! frame pose with an SVD fit and refines pose and twist jointly with the
//! motion-compensated estimator. Keyframes carry place descriptors; loop
//! closures trigger pose-graph optimization and map re-anchoring.
//!
//! Loop closure runs either synchronously at keyframe creation (test mode,
//! deterministic) or on a separate thread sharing the map under a mutex
//! (threaded mode).

use crate::config::PipelineConfig;
use crate::estimator::{self, EstimatorConfig, EstimatorState, FeatureObservation};
use crate::eval::write_trajectory;
use crate::features::{
    anms, klt_track, spawn_new_points, KltParams, TrackStatus, TrackedFeature,
};
use crate::geometry::{
    default_image_side, io, pixel_beam_time, pixel_to_metric, polar_to_cartesian, CartesianImage,
};
use crate::graph_opt::{optimize, GraphOptConfig};
use crate::loop_closure::{
    compute_descriptor, extract_point_cloud, find_loop_candidate, pca_gate, verify_and_estimate,
    PointCloud2D,
};
use crate::map::{default_edge_information, should_create_keyframe, Keyframe, KeyframeMap};
use crate::outliers::{build_consistency_graph, maximum_clique, rigid_fit_svd};
use crate::se2::{exp_twist, log_pose, Pose2, Twist2};
use crate::{Error, Result};
use nalgebra::{Matrix2, Vector2};
use std::collections::HashMap;
use std::path::Path;
use std::sync::{mpsc, Arc, Mutex};
use std::time::Instant;

/// Loop-closure scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Loop closure runs synchronously at keyframe creation.
    Test,
    /// Loop closure runs on its own thread.
    Threaded,
}

/// One loop-candidate evaluation.
#[derive(Debug, Clone)]
pub struct LoopLogEntry {
    pub query: u64,
    pub matched: u64,
    pub distance: f64,
    pub accepted: bool,
    pub residual: f64,
}

/// Per-frame stage durations, milliseconds.
#[derive(Debug, Clone)]
pub struct StageTiming {
    pub frame: usize,
    pub convert_ms: f64,
    pub track_ms: f64,
    pub estimate_ms: f64,
    pub keyframe_ms: f64,
}

/// Output of an odometry or SLAM run.
#[derive(Debug)]
pub struct PipelineResult {
    /// Final trajectory with all corrections applied, "stamp, pose".
    pub trajectory: Vec<(f64, Pose2)>,
    pub map: KeyframeMap,
    pub loop_log: Vec<LoopLogEntry>,
    pub timing: Vec<StageTiming>,
    pub frames_total: usize,
    pub frames_completed: usize,
    /// Estimated twist per frame.
    pub twists: Vec<(f64, Twist2)>,
    /// Frames where the estimator was degenerate and the pose coasted.
    pub coasted_frames: Vec<usize>,
}

/// Map plus keyframe images, shared with the loop-closure worker.
struct SharedMap {
    map: KeyframeMap,
    images: HashMap<u64, CartesianImage>,
    loop_log: Vec<LoopLogEntry>,
}

struct FrameRecord {
    stamp: f64,
    ref_keyframe: u64,
    rel_to_keyframe: Pose2,
}

/// Runs odometry only: no loop detection, no graph optimization.
pub fn run_odometry(sequence: &Path, cfg: &PipelineConfig) -> Result<PipelineResult> {
    run(sequence, cfg, None)
}

/// Runs the full SLAM pipeline in the requested mode.
pub fn run_slam(sequence: &Path, cfg: &PipelineConfig, mode: Mode) -> Result<PipelineResult> {
    run(sequence, cfg, Some(mode))
}

fn observation_information(resolution: f64) -> Matrix2<f64> {
    Matrix2::identity() / (resolution * resolution)
}

/// Features within this many azimuth rows of the scan seam (sweep start /
/// end) are rejected. Capture time is discontinuous across the seam, so a
/// blob straddling it mixes returns from half a scan apart and its centroid
/// fits neither time.
const SEAM_MARGIN_ROWS: f64 = 8.0;

fn run(sequence: &Path, cfg: &PipelineConfig, slam: Option<Mode>) -> Result<PipelineResult> {
    let scan_paths = io::read_manifest(sequence)?;
    let shared = Arc::new(Mutex::new(SharedMap {
        map: KeyframeMap::new(),
        images: HashMap::new(),
        loop_log: Vec::new(),
    }));
    // Loop worker for threaded mode.
    let (loop_tx, worker) = if slam == Some(Mode::Threaded) {
        let (tx, rx) = mpsc::channel::<u64>();
        let shared2 = Arc::clone(&shared);
        let cfg2 = cfg.clone();
        let handle = std::thread::spawn(move || {
            while let Ok(query_id) = rx.recv() {
                let mut guard = shared2.lock().unwrap();
                process_loop(&mut guard, query_id, &cfg2);
            }
        });
        (Some(tx), Some(handle))
    } else {
        (None, None)
    };

    let mut frames: Vec<FrameRecord> = Vec::new();
    let mut timing = Vec::new();
    let mut twists = Vec::new();
    let mut coasted = Vec::new();

    let mut prev_img: Option<CartesianImage> = None;
    let mut features: Vec<TrackedFeature> = Vec::new();
    let mut world: HashMap<u64, Vector2<f64>> = HashMap::new();
    // Feature id -> map point id, and the first frame's raw observations
    // (local point, beam time) kept for the bootstrap correction below.
    let mut point_ids: HashMap<u64, u64> = HashMap::new();
    let mut bootstrap: HashMap<u64, (Vector2<f64>, f64)> = HashMap::new();
    let mut pending_point_updates: Vec<(u64, Vector2<f64>)> = Vec::new();
    let mut next_feature_id: u64 = 0;
    let mut next_keyframe_id: u64 = 0;
    let mut pose = Pose2::identity();
    let mut twist = Twist2::zero();
    let mut prev_stamp = 0.0f64;
    let mut last_kf_id: u64 = 0;

    // Per-frame yaw rate is far better observed through the inter-frame pose
    // change than through intra-scan beam-time differentials, so weight the
    // yaw component of the velocity prior up accordingly.
    let estimator_cfg = EstimatorConfig {
        velocity_information: nalgebra::Matrix3::from_diagonal(&nalgebra::Vector3::new(
            400.0, 400.0, 2500.0,
        )),
        ..EstimatorConfig::default()
    };
    let klt_params = KltParams::default();
    let policy = cfg.keyframe_policy();
    let loop_cfg = cfg.loop_closure();
    let obs_info = observation_information(cfg.cartesian_resolution);

    for (frame_idx, scan_path) in scan_paths.iter().enumerate() {
        let t0 = Instant::now();
        let scan = io::read_scan(scan_path)
            .map_err(|e| Error::invalid(format!("frame {frame_idx}: {e}")))?;
        let max_range = cfg.max_polar_distance.min(scan.max_range());
        let side = default_image_side(max_range, cfg.cartesian_resolution);
        let img = polar_to_cartesian(&scan, side, side, cfg.cartesian_resolution, max_range)?;
        let convert_ms = t0.elapsed().as_secs_f64() * 1e3;

        let beam_time_at = |u: f64, v: f64| -> f64 {
            if cfg.disable_motion_compensation {
                0.0
            } else {
                pixel_beam_time(u, v, &img, &scan).unwrap_or(0.0)
            }
        };

        let t1 = Instant::now();
        if let Some(prev) = &prev_img {
            let dt = scan.stamp - prev_stamp;
            if dt <= 0.0 {
                return Err(Error::invalid(format!(
                    "frame {frame_idx}: non-increasing scan stamps"
                )));
            }
            let tracked = klt_track(prev, &img, &features, &klt_params)?;
            let mut prev_px = Vec::new();
            let mut curr_px = Vec::new();
            let mut survivors = Vec::new();
            for (old, new) in features.iter().zip(tracked.iter()) {
                if new.is_alive() && world.contains_key(&new.id) {
                    prev_px.push(old.pixel);
                    curr_px.push(new.pixel);
                    survivors.push(*new);
                }
            }
            let inliers: Vec<usize> = if survivors.len() >= 2 {
                let graph = build_consistency_graph(&prev_px, &curr_px, cfg.delta_c)?;
                maximum_clique(&graph)
            } else {
                Vec::new()
            };
            let track_ms = t1.elapsed().as_secs_f64() * 1e3;

            let t2 = Instant::now();
            let mut observations = Vec::with_capacity(inliers.len());
            let mut local_pts = Vec::with_capacity(inliers.len());
            let mut world_pts = Vec::with_capacity(inliers.len());
            for &i in &inliers {
                let f = &survivors[i];
                let local = pixel_to_metric(f.pixel.0, f.pixel.1, &img);
                let w = world[&f.id];
                local_pts.push(local);
                world_pts.push(w);
                observations.push(FeatureObservation {
                    world_point: w,
                    observed_local: local,
                    beam_time: beam_time_at(f.pixel.0, f.pixel.1),
                    information: obs_info,
                });
            }
            let prev_pose = pose;
            let mut degenerate = observations.len() < 3;
            if !degenerate {
                let init_pose = rigid_fit_svd(&local_pts, &world_pts).unwrap_or_else(|_| {
                    prev_pose.compose(&exp_twist(&twist, dt))
                });
                let init = EstimatorState {
                    pose: init_pose,
                    twist: Twist2::from_vector(
                        &(log_pose(&prev_pose.inverse().compose(&init_pose)) / dt),
                    ),
                };
                match estimator::solve(&observations, &init, &prev_pose, dt, &estimator_cfg) {
                    Ok(report) => {
                        pose = report.state.pose;
                        twist = report.state.twist;
                    }
                    Err(_) => degenerate = true,
                }
                if frame_idx == 1 && !degenerate && !bootstrap.is_empty() {
                    // The first scan was captured while moving, but its
                    // features were placed with zero twist. Alternate between
                    // re-placing them with the recovered twist and re-solving
                    // until the twist settles.
                    for _ in 0..5 {
                        let first = EstimatorState {
                            pose: Pose2::identity(),
                            twist,
                        };
                        for (id, (local, t)) in &bootstrap {
                            if let Some(w) = world.get_mut(id) {
                                *w = estimator::place_new_point(local, *t, &first);
                            }
                        }
                        for (obs, &i) in observations.iter_mut().zip(inliers.iter()) {
                            let id = survivors[i].id;
                            obs.world_point = world[&id];
                        }
                        let world_pts2: Vec<Vector2<f64>> =
                            observations.iter().map(|o| o.world_point).collect();
                        let init_pose = rigid_fit_svd(&local_pts, &world_pts2)
                            .unwrap_or_else(|_| prev_pose.compose(&exp_twist(&twist, dt)));
                        let init = EstimatorState {
                            pose: init_pose,
                            twist,
                        };
                        let before = twist.as_vector();
                        if let Ok(report) =
                            estimator::solve(&observations, &init, &prev_pose, dt, &estimator_cfg)
                        {
                            pose = report.state.pose;
                            twist = report.state.twist;
                        } else {
                            break;
                        }
                        if (twist.as_vector() - before).norm() < 1e-4 {
                            break;
                        }
                    }
                    for (id, _) in bootstrap.drain() {
                        if let (Some(w), Some(&pid)) = (world.get(&id), point_ids.get(&id)) {
                            pending_point_updates.push((pid, *w));
                        }
                    }
                }
            }
            if degenerate {
                // Constant-velocity coast.
                pose = prev_pose.compose(&exp_twist(&twist, dt));
                coasted.push(frame_idx);
            }
            let estimate_ms = t2.elapsed().as_secs_f64() * 1e3;

            // Keep clique inliers only; refresh their beam times and drop
            // features drifting into the scan seam.
            let seam_limit =
                scan.scan_period * (0.5 - SEAM_MARGIN_ROWS / scan.n_azimuths() as f64);
            let inlier_set: std::collections::HashSet<usize> = inliers.iter().cloned().collect();
            features = survivors
                .iter()
                .enumerate()
                .filter(|(i, _)| inlier_set.contains(i))
                .map(|(_, f)| {
                    let mut f = *f;
                    f.beam_time = beam_time_at(f.pixel.0, f.pixel.1);
                    f
                })
                .filter(|f| f.beam_time.abs() <= seam_limit)
                .collect();
            world.retain(|id, _| features.iter().any(|f| f.id == *id));
            timing.push(StageTiming {
                frame: frame_idx,
                convert_ms,
                track_ms,
                estimate_ms,
                keyframe_ms: 0.0,
            });
        } else {
            timing.push(StageTiming {
                frame: frame_idx,
                convert_ms,
                track_ms: 0.0,
                estimate_ms: 0.0,
                keyframe_ms: 0.0,
            });
        }

        // Keyframe decision on the post-tracking (pre-spawn) pool.
        let t3 = Instant::now();
        let mut shared_guard = shared.lock().unwrap();
        let create = match shared_guard.map.last_keyframe() {
            None => true,
            Some(last) => should_create_keyframe(&pose, features.len(), last, &policy),
        };
        if create {
            let cloud = extract_point_cloud(&scan, cfg.prominence, cfg.min_separation_bins);
            let descriptor = compute_descriptor(&cloud);
            let (_, pca_ratio) = pca_gate(&cloud, cfg.r_pca);
            let id = next_keyframe_id;
            next_keyframe_id += 1;
            let kf = Keyframe {
                id,
                pose,
                twist,
                stamp: scan.stamp,
                point_cloud: cloud.points.clone(),
                descriptor: if descriptor.degenerate { Vec::new() } else { descriptor.vector },
                pca_ratio,
            };
            shared_guard.map.insert_keyframe(kf)?;
            if id > 0 {
                let from_pose = shared_guard.map.keyframes()[&(last_kf_id)].pose;
                let measurement = from_pose.inverse().compose(&pose);
                shared_guard
                    .map
                    .graph_mut()
                    .add_odometry_edge(last_kf_id, id, measurement, default_edge_information())?;
            }
            if slam.is_some() {
                shared_guard.images.insert(id, img.clone());
            }
            last_kf_id = id;
            match (slam, &loop_tx) {
                (Some(Mode::Test), _) => process_loop(&mut shared_guard, id, cfg),
                (Some(Mode::Threaded), Some(tx)) => {
                    let _ = tx.send(id);
                }
                _ => {}
            }
        }
        let _ = loop_cfg.temporal_gap;

        // Spawn replacement points and register them in the map.
        let state = EstimatorState { pose, twist };
        let spawned = spawn_new_points(&img, &features, cfg.max_tracked_points, (6, 6), cfg.min_hessian);
        let spawned = anms(&spawned, cfg.max_tracked_points.saturating_sub(features.len()));
        let seam_limit = scan.scan_period * (0.5 - SEAM_MARGIN_ROWS / scan.n_azimuths() as f64);
        for k in spawned {
            let local = pixel_to_metric(k.pixel.0, k.pixel.1, &img);
            let t = beam_time_at(k.pixel.0, k.pixel.1);
            if t.abs() > seam_limit {
                continue;
            }
            let w = estimator::place_new_point(&local, t, &state);
            let f = TrackedFeature {
                id: next_feature_id,
                pixel: k.pixel,
                beam_time: t,
                status: TrackStatus::Alive,
                age: 0,
            };
            next_feature_id += 1;
            world.insert(f.id, w);
            if let Ok(pid) = shared_guard.map.add_point(w, last_kf_id) {
                point_ids.insert(f.id, pid);
            }
            if frame_idx == 0 {
                bootstrap.insert(f.id, (local, t));
            }
            features.push(f);
        }
        for (pid, w) in pending_point_updates.drain(..) {
            let _ = shared_guard.map.update_point(pid, w);
        }
        // Record the frame relative to its reference keyframe.
        let kf_pose = shared_guard.map.keyframes()[&last_kf_id].pose;
        frames.push(FrameRecord {
            stamp: scan.stamp,
            ref_keyframe: last_kf_id,
            rel_to_keyframe: kf_pose.inverse().compose(&pose),
        });
        drop(shared_guard);
        if let Some(t) = timing.last_mut() {
            t.keyframe_ms = t3.elapsed().as_secs_f64() * 1e3;
        }

        twists.push((scan.stamp, twist));
        prev_img = Some(img);
        prev_stamp = scan.stamp;
    }

    drop(loop_tx);
    if let Some(handle) = worker {
        handle
            .join()
            .map_err(|_| Error::NumericalFailure("loop-closure thread panicked".into()))?;
    }

    let guard = Arc::try_unwrap(shared)
        .map_err(|_| Error::NumericalFailure("shared map still referenced".into()))?
        .into_inner()
        .unwrap();
    let trajectory: Vec<(f64, Pose2)> = frames
        .iter()
        .map(|f| {
            let kf_pose = guard.map.keyframes()[&f.ref_keyframe].pose;
            (f.stamp, kf_pose.compose(&f.rel_to_keyframe))
        })
        .collect();
    let total = scan_paths.len();
    Ok(PipelineResult {
        trajectory,
        map: guard.map,
        loop_log: guard.loop_log,
        timing,
        frames_total: total,
        frames_completed: total,
        twists,
        coasted_frames: coasted,
    })
}

/// Detects, verifies and applies a loop closure for one query keyframe.
fn process_loop(shared: &mut SharedMap, query_id: u64, cfg: &PipelineConfig) {
    let loop_cfg = cfg.loop_closure();
    let Some(query) = shared.map.keyframes().get(&query_id).cloned() else {
        return;
    };
    let Some(candidate) = find_loop_candidate(&query, shared.map.keyframes(), &loop_cfg) else {
        return;
    };
    let matched = shared.map.keyframes()[&candidate.match_id].clone();
    let (Some(query_img), Some(match_img)) = (
        shared.images.get(&query_id),
        shared.images.get(&candidate.match_id),
    ) else {
        return;
    };
    let query_cloud = PointCloud2D { points: query.point_cloud.clone() };
    let match_cloud = PointCloud2D { points: matched.point_cloud.clone() };
    let verdict = verify_and_estimate(&query_cloud, &match_cloud, query_img, match_img, &loop_cfg);
    let (accepted, residual) = match &verdict {
        Some(v) => (true, v.mean_residual),
        None => (false, f64::NAN),
    };
    shared.loop_log.push(LoopLogEntry {
        query: query_id,
        matched: candidate.match_id,
        distance: candidate.descriptor_distance,
        accepted,
        residual,
    });
    let Some(verified) = verdict else { return };
    // T_query = T_match * T_{l,j}: the verified transform is the edge
    // measurement from match to query.
    if shared
        .map
        .graph_mut()
        .add_loop_edge(candidate.match_id, query_id, verified.relative, verified.information)
        .is_err()
    {
        return;
    }
    let anchor = *shared.map.keyframes().keys().next().unwrap();
    if let Ok(report) = optimize(shared.map.graph(), anchor, &GraphOptConfig::default()) {
        let _ = shared.map.apply_optimized_poses(&report.poses);
    }
}

/// CSV loop log: `query,match,distance,accepted,residual`.
pub fn loop_log_csv(entries: &[LoopLogEntry]) -> String {
    let mut out = String::from("query,match,distance,accepted,residual\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{:.6},{},{:.6}\n",
            e.query, e.matched, e.distance, e.accepted, e.residual
        ));
    }
    out
}

/// CSV timing log: per-frame stage durations in milliseconds.
pub fn timing_csv(timings: &[StageTiming]) -> String {
    let mut out = String::from("frame,convert_ms,track_ms,estimate_ms,keyframe_ms\n");
    for t in timings {
        out.push_str(&format!(
            "{},{:.3},{:.3},{:.3},{:.3}\n",
            t.frame, t.convert_ms, t.track_ms, t.estimate_ms, t.keyframe_ms
        ));
    }
    out
}

/// Writes trajectory, map points, loop log and timing files to `out_dir`.
pub fn write_outputs(result: &PipelineResult, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    write_trajectory(&out_dir.join("trajectory.txt"), &result.trajectory)?;
    let write = |name: &str, body: String| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))
    };
    write("map_points.txt", result.map.export_points())?;
    write("loop_log.csv", loop_log_csv(&result.loop_log))?;
    write("timing.csv", timing_csv(&result.timing))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{absolute_trajectory_error, associate, read_trajectory};
    use crate::sim::{generate_sequence, ReflectorWorld, SimConfig, GROUND_TRUTH_NAME};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn dense_world(rng: &mut StdRng, n: usize, x: (f64, f64), y: (f64, f64)) -> ReflectorWorld {
        let reflectors = (0..n)
            .map(|_| {
                (
                    Vector2::new(rng.gen_range(x.0..x.1), rng.gen_range(y.0..y.1)),
                    rng.gen_range(150.0..250.0),
                )
            })
            .collect();
        ReflectorWorld::new(reflectors, 100.0).unwrap()
    }

    fn sim_cfg() -> SimConfig {
        SimConfig {
            n_azimuths: 400,
            n_range_bins: 500,
            range_resolution: 0.1,
            scan_period: 0.25,
            ..Default::default()
        }
    }

    fn test_cfg() -> PipelineConfig {
        PipelineConfig {
            min_hessian: 1.0,
            max_polar_distance: 50.0,
            cartesian_resolution: 0.2,
            ..Default::default()
        }
    }

    fn straight_trajectory(n: usize, speed: f64) -> Vec<(f64, Pose2)> {
        (0..n)
            .map(|i| {
                (
                    i as f64 * 0.25,
                    Pose2::from_xy_theta(speed * 0.25 * i as f64, 0.0, 0.0),
                )
            })
            .collect()
    }

    #[test]
    fn empty_sequence_empty_trajectory() {
        let dir = tempfile::tempdir().unwrap();
        io::write_sequence(dir.path(), &[]).unwrap();
        let result = run_odometry(dir.path(), &test_cfg()).unwrap();
        assert!(result.trajectory.is_empty());
        assert_eq!(result.frames_total, 0);
    }

    #[test]
    fn corrupted_scan_aborts_with_frame_index() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("scan_000000.rps"), b"garbage").unwrap();
        io::write_manifest(dir.path(), &["scan_000000.rps".into()]).unwrap();
        let err = run_odometry(dir.path(), &test_cfg()).unwrap_err();
        assert!(err.to_string().contains("frame 0"), "{err}");
    }

    #[test]
    fn straight_line_odometry_tracks_ground_truth() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = StdRng::seed_from_u64(100);
        let world = dense_world(&mut rng, 90, (-15.0, 60.0), (-25.0, 25.0));
        let gt = straight_trajectory(13, 4.0);
        generate_sequence(&gt, &world, &sim_cfg(), dir.path()).unwrap();
        let result = run_odometry(dir.path(), &test_cfg()).unwrap();
        assert_eq!(result.trajectory.len(), 13);
        let end_err = (result.trajectory.last().unwrap().1.translation()
            - gt.last().unwrap().1.translation())
        .norm();
        // 12 m path; stay within 10 cm of the endpoint.
        assert!(end_err < 0.1, "endpoint error {end_err}");
        // Twist settles near 4 m/s forward.
        let (_, v) = result.twists[6];
        assert!((v.vx - 4.0).abs() < 0.15, "vx {}", v.vx);
        assert!(v.vtheta.abs() < 0.01, "vtheta {}", v.vtheta);
    }

    #[test]
    fn odometry_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = StdRng::seed_from_u64(101);
        let world = dense_world(&mut rng, 70, (-15.0, 40.0), (-20.0, 20.0));
        let gt = straight_trajectory(8, 4.0);
        generate_sequence(&gt, &world, &sim_cfg(), dir.path()).unwrap();
        let a = run_odometry(dir.path(), &test_cfg()).unwrap();
        let b = run_odometry(dir.path(), &test_cfg()).unwrap();
        for ((_, pa), (_, pb)) in a.trajectory.iter().zip(b.trajectory.iter()) {
            assert_eq!(pa.x().to_bits(), pb.x().to_bits());
            assert_eq!(pa.y().to_bits(), pb.y().to_bits());
            assert_eq!(pa.rotation().to_bits(), pb.rotation().to_bits());
        }
    }

    #[test]
    fn slam_without_revisit_equals_odometry() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = StdRng::seed_from_u64(102);
        let world = dense_world(&mut rng, 70, (-15.0, 40.0), (-20.0, 20.0));
        let gt = straight_trajectory(8, 4.0);
        generate_sequence(&gt, &world, &sim_cfg(), dir.path()).unwrap();
        let odo = run_odometry(dir.path(), &test_cfg()).unwrap();
        let slam = run_slam(dir.path(), &test_cfg(), Mode::Test).unwrap();
        assert!(slam.loop_log.iter().all(|e| !e.accepted));
        assert!(slam.map.graph().edges().iter().all(|e| e.kind == crate::map::EdgeKind::Odometry));
        for ((_, pa), (_, pb)) in odo.trajectory.iter().zip(slam.trajectory.iter()) {
            assert!((pa.translation() - pb.translation()).norm() < 1e-9);
        }
    }

    #[test]
    fn corridor_world_yields_no_loop_candidates() {
        // Collinear reflectors: every keyframe cloud fails the PCA gate.
        let dir = tempfile::tempdir().unwrap();
        let mut rng = StdRng::seed_from_u64(103);
        let reflectors: Vec<(Vector2<f64>, f64)> = (0..60)
            .map(|_| {
                (
                    Vector2::new(rng.gen_range(-10.0..40.0), 0.0),
                    rng.gen_range(150.0..250.0),
                )
            })
            .collect();
        let world = ReflectorWorld::new(reflectors, 100.0).unwrap();
        let gt = straight_trajectory(6, 4.0);
        generate_sequence(&gt, &world, &sim_cfg(), dir.path()).unwrap();
        let result = run_slam(dir.path(), &test_cfg(), Mode::Test).unwrap();
        assert!(result.loop_log.is_empty());
        for kf in result.map.keyframes().values() {
            assert!(kf.pca_ratio >= 3.0 || kf.descriptor.is_empty() || kf.point_cloud.len() < 3);
        }
    }

    #[test]
    fn outputs_written_and_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let mut rng = StdRng::seed_from_u64(104);
        let world = dense_world(&mut rng, 70, (-15.0, 40.0), (-20.0, 20.0));
        let gt = straight_trajectory(6, 4.0);
        generate_sequence(&gt, &world, &sim_cfg(), dir.path()).unwrap();
        let result = run_slam(dir.path(), &test_cfg(), Mode::Test).unwrap();
        write_outputs(&result, out.path()).unwrap();
        let traj = read_trajectory(&out.path().join("trajectory.txt")).unwrap();
        assert_eq!(traj.len(), 6);
        let loop_log = std::fs::read_to_string(out.path().join("loop_log.csv")).unwrap();
        assert!(loop_log.starts_with("query,match,distance,accepted,residual"));
        let timing = std::fs::read_to_string(out.path().join("timing.csv")).unwrap();
        assert_eq!(timing.lines().count(), 7);
        // Map points exist and parse as pairs.
        let pts = std::fs::read_to_string(out.path().join("map_points.txt")).unwrap();
        assert!(pts.lines().count() > 0);
        for line in pts.lines() {
            assert_eq!(line.split_whitespace().count(), 2);
        }
    }

    #[test]
    fn threaded_mode_matches_test_mode_without_loops() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = StdRng::seed_from_u64(105);
        let world = dense_world(&mut rng, 70, (-15.0, 40.0), (-20.0, 20.0));
        let gt = straight_trajectory(8, 4.0);
        generate_sequence(&gt, &world, &sim_cfg(), dir.path()).unwrap();
        let a = run_slam(dir.path(), &test_cfg(), Mode::Test).unwrap();
        let b = run_slam(dir.path(), &test_cfg(), Mode::Threaded).unwrap();
        // No loop edges exist on a straight run, so scheduling cannot
        // change the result.
        let ate = absolute_trajectory_error(&associate(&a.trajectory, &b.trajectory, 0.125)).unwrap();
        assert!(ate < 1e-9);
    }

    #[test]
    fn ground_truth_name_stable() {
        assert_eq!(GROUND_TRUTH_NAME, "ground_truth.txt");
    }
}
