//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N (...): PASS` / `FAIL` / `SKIP` line.
//!
//! Criterion 10 needs real radar data and is skipped unless the
//! `RADAR_SLAM_OXFORD_SEQ` and `RADAR_SLAM_OXFORD_GT` environment variables
//! point at a converted sequence directory and its ground-truth trajectory.

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use radar_slam::config::PipelineConfig;
use radar_slam::estimator::{
    feature_jacobian, feature_residual_raw, velocity_prior_jacobian,
    velocity_residual, EstimatorState, FeatureObservation,
};
use radar_slam::eval::{
    absolute_trajectory_error, associate, completion_percentage, read_trajectory, relative_error,
};
use radar_slam::geometry::{default_image_side, io, polar_to_cartesian, CartesianImage, PolarScan};
use radar_slam::graph_opt::{edge_jacobians, edge_residual, optimize, GraphOptConfig};
use radar_slam::loop_closure::{
    compute_descriptor, extract_point_cloud, find_loop_candidate, pca_gate, verify_and_estimate,
    PointCloud2D,
};
use radar_slam::map::{default_edge_information, PoseGraph};
use radar_slam::outliers::{maximum_clique, ConsistencyGraph};
use radar_slam::pipeline::{run_odometry, PipelineResult};
use radar_slam::se2::{exp_twist, log_pose, perturb, wrap_angle, Pose2, Twist2};
use radar_slam::sim::{
    generate_sequence, square_loop_trajectory, ReflectorWorld, SimConfig, GROUND_TRUTH_NAME,
};

fn criterion(number: u32, name: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("criterion {number} ({name}): PASS"),
        Err(msg) => {
            println!("criterion {number} ({name}): FAIL: {msg}");
            panic!("criterion {number} ({name}) failed: {msg}");
        }
    }
}

fn random_pose(rng: &mut StdRng) -> Pose2 {
    Pose2::from_xy_theta(
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-50.0..50.0),
        rng.gen_range(-3.0..3.0),
    )
}

// ---------------------------------------------------------------------------
// Shared simulator scaffolding for the pipeline-level criteria.

fn pipeline_config() -> PipelineConfig {
    PipelineConfig {
        // Simulated blobs are far dimmer than real radar returns.
        min_hessian: 1.0,
        max_polar_distance: 50.0,
        cartesian_resolution: 0.2,
        ..Default::default()
    }
}

fn sim_config(speckle: f64, seed: u64) -> SimConfig {
    SimConfig {
        n_azimuths: 400,
        n_range_bins: 500,
        range_resolution: 0.1,
        scan_period: 0.25,
        speckle_std: speckle,
        seed,
        ..Default::default()
    }
}

/// Reflectors scattered in a band around the given trajectory.
fn corridor_world(rng: &mut StdRng, trajectory: &[(f64, Pose2)], count: usize) -> ReflectorWorld {
    let reflectors = (0..count)
        .map(|_| {
            let (_, anchor) = trajectory[rng.gen_range(0..trajectory.len())];
            let offset = Vector2::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0));
            (anchor.act_on_point(&offset), rng.gen_range(150.0..250.0))
        })
        .collect();
    ReflectorWorld::new(reflectors, 1000.0).unwrap()
}

/// Constant-twist arc sampled at the scan rate.
fn arc_trajectory(twist: &Twist2, frames: usize, frame_dt: f64) -> Vec<(f64, Pose2)> {
    (0..frames)
        .map(|i| (i as f64 * frame_dt, exp_twist(twist, i as f64 * frame_dt)))
        .collect()
}

fn path_length(trajectory: &[(f64, Pose2)]) -> f64 {
    trajectory
        .windows(2)
        .map(|w| (w[1].1.translation() - w[0].1.translation()).norm())
        .sum()
}

fn endpoint_error(result: &PipelineResult, gt: &[(f64, Pose2)]) -> f64 {
    (result.trajectory.last().unwrap().1.translation() - gt.last().unwrap().1.translation()).norm()
}

// ---------------------------------------------------------------------------

#[test]
fn c01_se2_kinematics() {
    criterion(1, "SE(2) kinematics", (|| {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let v = Twist2::new(
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-3.0..3.0),
            );
            let t = rng.gen_range(0.05..1.0);
            // Keep the rotation within (-pi, pi] so log is single-valued.
            if (v.vtheta * t).abs() >= std::f64::consts::PI {
                continue;
            }
            let pose = exp_twist(&v, t);
            let back = log_pose(&pose) / t;
            if (back - v.as_vector()).norm() > 1e-10 {
                return Err(format!("round-trip error {}", (back - v.as_vector()).norm()));
            }
            // Closed form against a scalar trig oracle.
            let m = pose.matrix();
            let theta = v.vtheta * t;
            let oracle = [
                theta.cos(),
                -theta.sin(),
                v.vx * t,
                theta.sin(),
                theta.cos(),
                v.vy * t,
            ];
            let got = [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)]];
            for (g, o) in got.iter().zip(oracle.iter()) {
                if (g - o).abs() > 1e-15 {
                    return Err(format!("closed form {g} vs oracle {o}"));
                }
            }
        }
        // Group axioms.
        for _ in 0..200 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            let c = random_pose(&mut rng);
            let assoc = a.compose(&b).compose(&c).matrix() - a.compose(&b.compose(&c)).matrix();
            if assoc.norm() > 1e-12 {
                return Err(format!("associativity violation {}", assoc.norm()));
            }
            let inv = a.compose(&a.inverse()).matrix() - Pose2::identity().matrix();
            if inv.norm() > 1e-12 {
                return Err(format!("inverse violation {}", inv.norm()));
            }
            let ident = a.compose(&Pose2::identity()).matrix() - a.matrix();
            if ident.norm() > 1e-13 {
                return Err(format!("identity violation {}", ident.norm()));
            }
        }
        Ok(())
    })());
}

#[test]
fn c02_jacobians_vs_finite_differences() {
    criterion(2, "analytic Jacobians", (|| {
        let mut rng = StdRng::seed_from_u64(22);
        let h = 1e-6;
        let tol = 1e-5;
        let close = |analytic: f64, fd: f64| (analytic - fd).abs() <= tol * fd.abs().max(1.0);

        for i in 0..500 {
            // Motion-estimator feature + velocity-prior Jacobians.
            let state = EstimatorState {
                pose: random_pose(&mut rng),
                twist: Twist2::new(
                    rng.gen_range(-15.0..15.0),
                    rng.gen_range(-15.0..15.0),
                    rng.gen_range(-2.0..2.0),
                ),
            };
            let prev_pose = random_pose(&mut rng);
            let dt = rng.gen_range(0.1..0.5);
            let obs = FeatureObservation {
                world_point: Vector2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)),
                observed_local: Vector2::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)),
                beam_time: rng.gen_range(-0.125..0.125),
                information: Matrix2::identity(),
            };
            let (j_v, j_p) = feature_jacobian(&obs, &state);
            let (p_v, p_p) = velocity_prior_jacobian(&state, &prev_pose, dt);
            for k in 0..3 {
                let mut delta = Vector3::zeros();
                delta[k] = h;
                let tw_plus = EstimatorState {
                    pose: state.pose,
                    twist: Twist2::from_vector(&(state.twist.as_vector() + delta)),
                };
                let tw_minus = EstimatorState {
                    pose: state.pose,
                    twist: Twist2::from_vector(&(state.twist.as_vector() - delta)),
                };
                let po_plus = EstimatorState {
                    pose: perturb(&delta, &state.pose),
                    twist: state.twist,
                };
                let po_minus = EstimatorState {
                    pose: perturb(&(-delta), &state.pose),
                    twist: state.twist,
                };
                let fd_v = (feature_residual_raw(&obs, &tw_plus)
                    - feature_residual_raw(&obs, &tw_minus))
                    / (2.0 * h);
                let fd_p = (feature_residual_raw(&obs, &po_plus)
                    - feature_residual_raw(&obs, &po_minus))
                    / (2.0 * h);
                for r in 0..2 {
                    if !close(j_v[(r, k)], fd_v[r]) || !close(j_p[(r, k)], fd_p[r]) {
                        return Err(format!("feature Jacobian mismatch at instance {i}"));
                    }
                }
                let mut fd_pv = (velocity_residual(&tw_plus, &prev_pose, dt)
                    - velocity_residual(&tw_minus, &prev_pose, dt))
                    / (2.0 * h);
                let mut fd_pp = (velocity_residual(&po_plus, &prev_pose, dt)
                    - velocity_residual(&po_minus, &prev_pose, dt))
                    / (2.0 * h);
                fd_pv[2] = wrap_angle(fd_pv[2] * 2.0 * h) / (2.0 * h);
                fd_pp[2] = wrap_angle(fd_pp[2] * 2.0 * h) / (2.0 * h);
                for r in 0..3 {
                    if !close(p_v[(r, k)], fd_pv[r]) || !close(p_p[(r, k)], fd_pp[r]) {
                        return Err(format!("velocity-prior Jacobian mismatch at instance {i}"));
                    }
                }
            }
        }

        for i in 0..500 {
            // Pose-graph edge Jacobians.
            let z = random_pose(&mut rng);
            let t_i = random_pose(&mut rng);
            let t_j = random_pose(&mut rng);
            let (j_i, j_j) = edge_jacobians(&z, &t_i, &t_j);
            for k in 0..3 {
                let mut delta = Vector3::zeros();
                delta[k] = h;
                let fd_of = |e_plus: Vector3<f64>, e_minus: Vector3<f64>| {
                    let mut fd = (e_plus - e_minus) / (2.0 * h);
                    fd[2] = wrap_angle(fd[2] * 2.0 * h) / (2.0 * h);
                    fd
                };
                let fd_i = fd_of(
                    edge_residual(&z, &perturb(&delta, &t_i), &t_j),
                    edge_residual(&z, &perturb(&(-delta), &t_i), &t_j),
                );
                let fd_j = fd_of(
                    edge_residual(&z, &t_i, &perturb(&delta, &t_j)),
                    edge_residual(&z, &t_i, &perturb(&(-delta), &t_j)),
                );
                for r in 0..3 {
                    if !close(j_i[(r, k)], fd_i[r]) || !close(j_j[(r, k)], fd_j[r]) {
                        return Err(format!("edge Jacobian mismatch at instance {i}"));
                    }
                }
            }
        }
        Ok(())
    })());
}

#[test]
fn c03_maximum_clique_vs_brute_force() {
    criterion(3, "maximum clique", (|| {
        let mut rng = StdRng::seed_from_u64(33);
        let probabilities = [0.2, 0.5, 0.8];
        for trial in 0..200 {
            let n = rng.gen_range(4..=18usize);
            let p = probabilities[trial % probabilities.len()];
            let mut edges = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen_bool(p) {
                        edges.push((a, b));
                    }
                }
            }
            let graph = ConsistencyGraph::from_edges(n, &edges);
            let got = maximum_clique(&graph);

            // Brute force: adjacency bitmasks; a subset is a clique iff
            // every member is adjacent to the whole subset.
            let mut adj = vec![0u32; n];
            for i in 0..n {
                adj[i] |= 1 << i;
            }
            for &(a, b) in &edges {
                adj[a] |= 1 << b;
                adj[b] |= 1 << a;
            }
            let mut best: Vec<usize> = Vec::new();
            for mask in 1u32..(1 << n) {
                let mut ok = true;
                let mut m = mask;
                while m != 0 {
                    let i = m.trailing_zeros() as usize;
                    if adj[i] & mask != mask {
                        ok = false;
                        break;
                    }
                    m &= m - 1;
                }
                if !ok {
                    continue;
                }
                let members: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
                if members.len() > best.len() || (members.len() == best.len() && members < best) {
                    best = members;
                }
            }
            if got != best {
                return Err(format!("trial {trial}: solver {got:?} vs brute force {best:?}"));
            }
        }
        Ok(())
    })());
}

#[test]
fn c04_motion_compensated_estimation() {
    criterion(4, "motion-compensated estimation", (|| {
        let dir = tempfile::tempdir().unwrap();
        let gt_twist = Twist2::new(10.0, 0.0, 0.2);
        let gt = arc_trajectory(&gt_twist, 50, 0.25);
        let mut rng = StdRng::seed_from_u64(44);
        let world = corridor_world(&mut rng, &gt, 350);
        generate_sequence(&gt, &world, &sim_config(1.0, 44), dir.path()).unwrap();
        let result = run_odometry(dir.path(), &pipeline_config()).map_err(|e| e.to_string())?;
        if !result.coasted_frames.is_empty() {
            return Err(format!("coasted frames {:?}", result.coasted_frames));
        }
        let speed = gt_twist.vx.hypot(gt_twist.vy);
        for (i, (_, twist)) in result.twists.iter().enumerate().skip(1) {
            // Per-frame ground truth: the twist whose step connects the two
            // surrounding ground-truth poses.
            let step = gt[i - 1].1.inverse().compose(&gt[i].1);
            let frame_gt = Twist2::from_vector(&(log_pose(&step) / (gt[i].0 - gt[i - 1].0)));
            let trans_err = (twist.vx - frame_gt.vx).hypot(twist.vy - frame_gt.vy);
            let yaw_err = (twist.vtheta - frame_gt.vtheta).abs();
            if trans_err > 0.02 * speed {
                return Err(format!(
                    "frame {i}: translational twist error {trans_err:.3} m/s (> 2%)"
                ));
            }
            if yaw_err > 0.01 {
                return Err(format!("frame {i}: yaw-rate error {yaw_err:.4} rad/s"));
            }
        }
        let drift = endpoint_error(&result, &gt);
        let path = path_length(&gt);
        if drift > 0.005 * path {
            return Err(format!(
                "endpoint drift {drift:.3} m over {path:.0} m path (> 0.5%)"
            ));
        }
        Ok(())
    })());
}

#[test]
fn c05_distortion_ablation() {
    criterion(5, "distortion ablation", (|| {
        let dir = tempfile::tempdir().unwrap();
        let gt_twist = Twist2::new(10.0, 0.0, 0.2);
        let gt = arc_trajectory(&gt_twist, 50, 0.25);
        let mut rng = StdRng::seed_from_u64(44);
        let world = corridor_world(&mut rng, &gt, 350);
        generate_sequence(&gt, &world, &sim_config(1.0, 44), dir.path()).unwrap();
        let compensated =
            run_odometry(dir.path(), &pipeline_config()).map_err(|e| e.to_string())?;
        let mut ablated_cfg = pipeline_config();
        ablated_cfg.disable_motion_compensation = true;
        let ablated = run_odometry(dir.path(), &ablated_cfg).map_err(|e| e.to_string())?;
        let drift_on = endpoint_error(&compensated, &gt);
        let drift_off = endpoint_error(&ablated, &gt);
        if drift_off < 2.0 * drift_on {
            return Err(format!(
                "ablation drift {drift_off:.3} m vs compensated {drift_on:.3} m (< 2x)"
            ));
        }
        Ok(())
    })());
}

#[test]
fn c06_point_extraction_properties() {
    criterion(6, "point extraction", (|| {
        // Noisy scan with planted peaks.
        let mut rng = StdRng::seed_from_u64(66);
        let n_az = 64;
        let n_bins = 400;
        let mut power = vec![0.0f64; n_az * n_bins];
        for p in power.iter_mut() {
            *p = rng.gen_range(0.0..20.0);
        }
        for a in 0..n_az {
            for _ in 0..3 {
                let bin = rng.gen_range(20..n_bins - 20);
                power[a * n_bins + bin] += rng.gen_range(60.0..180.0);
            }
        }
        let scan = |scale: f64| {
            PolarScan::new(
                power.iter().map(|&p| p * scale).collect(),
                n_az,
                n_bins,
                0.1,
                0.25,
                0.0,
                None,
            )
            .unwrap()
        };
        let base = scan(1.0);
        let cloud = extract_point_cloud(&base, 8.0, 5);
        if cloud.points.is_empty() {
            return Err("no points extracted".into());
        }
        // Every emitted point clears the per-azimuth mean + std gate.
        for p in &cloud.points {
            let r = p.norm();
            let theta = p.y.atan2(p.x);
            let a = ((-theta * n_az as f64 / std::f64::consts::TAU).round()
                .rem_euclid(n_az as f64)) as usize;
            let bin = (r / 0.1).round() as usize;
            let row = base.row(a);
            let mean = row.iter().sum::<f64>() / n_bins as f64;
            let var = row.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / n_bins as f64;
            let q = row[bin.min(n_bins - 1)];
            if q < mean + var.sqrt() - 1e-9 {
                return Err(format!("point below mean+std gate: {q} < {}", mean + var.sqrt()));
            }
        }
        // Selection is invariant under power scaling.
        let scaled_cloud = extract_point_cloud(&scan(3.7), 8.0, 5);
        if scaled_cloud.points.len() != cloud.points.len() {
            return Err(format!(
                "scaling changed the selection: {} vs {}",
                scaled_cloud.points.len(),
                cloud.points.len()
            ));
        }
        for (a, b) in cloud.points.iter().zip(scaled_cloud.points.iter()) {
            if (a - b).norm() > 1e-12 {
                return Err("scaling moved a point".into());
            }
        }
        // Single reflector localizes within one range bin.
        let cfg = SimConfig {
            range_resolution: 0.0438,
            n_range_bins: 1000,
            ..Default::default()
        };
        let truth = Vector2::new(17.3, 4.1);
        let world = ReflectorWorld::new(vec![(truth, 200.0)], 100.0).unwrap();
        let single =
            radar_slam::sim::render_scan(&world, |_| Pose2::identity(), &cfg).unwrap();
        let single_cloud = extract_point_cloud(&single, 8.0, 5);
        if single_cloud.points.is_empty() {
            return Err("single reflector not extracted".into());
        }
        for p in &single_cloud.points {
            if (p.norm() - truth.norm()).abs() > cfg.range_resolution {
                return Err(format!(
                    "range error {} exceeds resolution",
                    (p.norm() - truth.norm()).abs()
                ));
            }
        }
        Ok(())
    })());
}

#[test]
fn c07_loop_closure_end_to_end() {
    criterion(7, "loop closure end-to-end", (|| {
        let dir = tempfile::tempdir().unwrap();
        let gt = square_loop_trajectory(50.0, 20.0, 15.0, 10.0, 0.25);
        let mut rng = StdRng::seed_from_u64(77);
        let world = corridor_world(&mut rng, &gt, 260);
        // No speckle on this sequence: place recognition on the synthetic
        // scans needs clouds dominated by structure, and the scale-invariant
        // per-azimuth gate passes the top noise peaks at any noise amplitude.
        let sim_cfg = sim_config(0.0, 77);
        generate_sequence(&gt, &world, &sim_cfg, dir.path()).unwrap();
        let mut cfg = pipeline_config();
        // Descriptors over the sparse synthetic clouds spread more than real
        // ones; widen the candidate gate and let geometric verification
        // provide the precision.
        cfg.match_threshold = 0.45;
        let result = run_odometry(dir.path(), &cfg).map_err(|e| e.to_string())?;
        let keyframes = result.map.keyframes();
        if keyframes.len() < 10 {
            return Err(format!("only {} keyframes", keyframes.len()));
        }

        // Inject a constant yaw bias into every keyframe-to-keyframe motion,
        // the drift mode loop closure exists to correct.
        let yaw_bias = 0.02;
        let ids: Vec<u64> = keyframes.keys().cloned().collect();
        let mut biased: BTreeMap<u64, Pose2> = BTreeMap::new();
        let mut rels: Vec<(u64, u64, Pose2)> = Vec::new();
        biased.insert(ids[0], keyframes[&ids[0]].pose);
        for w in ids.windows(2) {
            let rel = keyframes[&w[0]].pose.inverse().compose(&keyframes[&w[1]].pose);
            let rel_biased =
                Pose2::from_xy_theta(rel.x(), rel.y(), wrap_angle(rel.rotation() + yaw_bias));
            let prev = biased[&w[0]];
            biased.insert(w[1], prev.compose(&rel_biased));
            rels.push((w[0], w[1], rel_biased));
        }

        let mut graph = PoseGraph::new();
        for (&id, pose) in &biased {
            graph.add_node(id, *pose);
        }
        for (from, to, rel) in &rels {
            graph
                .add_odometry_edge(*from, *to, *rel, default_edge_information())
                .map_err(|e| e.to_string())?;
        }

        // Loop detection over the keyframe history using the real scans.
        let loop_cfg = cfg.loop_closure();
        let scan_paths = io::read_manifest(dir.path()).map_err(|e| e.to_string())?;
        let mut image_cache: HashMap<u64, CartesianImage> = HashMap::new();
        let mut image_of = |id: u64, stamp: f64| -> CartesianImage {
            if let Some(img) = image_cache.get(&id) {
                return img.clone();
            }
            let frame = (stamp / 0.25).round() as usize;
            let scan = io::read_scan(&scan_paths[frame]).unwrap();
            let max_range = cfg.max_polar_distance.min(scan.max_range());
            let side = default_image_side(max_range, cfg.cartesian_resolution);
            let img =
                polar_to_cartesian(&scan, side, side, cfg.cartesian_resolution, max_range).unwrap();
            image_cache.insert(id, img.clone());
            img
        };
        let gt_pose_at = |stamp: f64| -> Pose2 {
            let frame = ((stamp / 0.25).round() as usize).min(gt.len() - 1);
            gt[frame].1
        };
        let mut true_accepts = 0usize;
        let mut false_accepts = 0usize;
        for &query_id in &ids {
            let query = &keyframes[&query_id];
            let candidate = match find_loop_candidate(query, keyframes, &loop_cfg) {
                Some(c) => c,
                None => continue,
            };
            let matched = &keyframes[&candidate.match_id];
            let query_cloud = PointCloud2D { points: query.point_cloud.clone() };
            let match_cloud = PointCloud2D { points: matched.point_cloud.clone() };
            let query_img = image_of(query.id, query.stamp);
            let match_img = image_of(matched.id, matched.stamp);
            let verified = match verify_and_estimate(
                &query_cloud,
                &match_cloud,
                &query_img,
                &match_img,
                &loop_cfg,
            ) {
                Some(v) => v,
                None => continue,
            };
            let gt_gap = (gt_pose_at(query.stamp).translation()
                - gt_pose_at(matched.stamp).translation())
            .norm();
            if gt_gap < 10.0 {
                true_accepts += 1;
            } else {
                false_accepts += 1;
            }
            graph
                .add_loop_edge(matched.id, query.id, verified.relative, verified.information)
                .map_err(|e| e.to_string())?;
        }
        if false_accepts != 0 {
            return Err(format!("{false_accepts} false loop accepts"));
        }
        if true_accepts == 0 {
            return Err("no true loop accepted".into());
        }

        let report =
            optimize(&graph, ids[0], &GraphOptConfig::default()).map_err(|e| e.to_string())?;
        let pairs_of = |poses: &BTreeMap<u64, Pose2>| -> Vec<(Pose2, Pose2)> {
            ids.iter()
                .map(|id| (poses[id], gt_pose_at(keyframes[id].stamp)))
                .collect()
        };
        let ate_before = absolute_trajectory_error(&pairs_of(&biased)).unwrap();
        let ate_after = absolute_trajectory_error(&pairs_of(&report.poses)).unwrap();
        if ate_after > 0.3 * ate_before {
            return Err(format!(
                "ATE {ate_after:.2} m after optimization vs {ate_before:.2} m biased \
                 ({true_accepts} loops): reduction below 70%"
            ));
        }
        Ok(())
    })());
}

#[test]
fn c08_descriptor_invariance_and_pca_gate() {
    criterion(8, "descriptor invariance", (|| {
        let mut rng = StdRng::seed_from_u64(88);
        for trial in 0..100 {
            let n = rng.gen_range(20..60);
            let points: Vec<Vector2<f64>> = (0..n)
                .map(|_| Vector2::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)))
                .collect();
            let cloud = PointCloud2D { points: points.clone() };
            let base = compute_descriptor(&cloud);
            if base.degenerate {
                continue;
            }
            let angle: f64 = rng.gen_range(-3.0..3.0);
            let (s, c) = angle.sin_cos();
            let rotated = PointCloud2D {
                points: points
                    .iter()
                    .map(|p| Vector2::new(c * p.x - s * p.y, s * p.x + c * p.y))
                    .collect(),
            };
            let rot_desc = compute_descriptor(&rotated);
            if base.distance(&rot_desc) > 1e-6 {
                return Err(format!(
                    "trial {trial}: rotation changed descriptor by {}",
                    base.distance(&rot_desc)
                ));
            }
            let shift = Vector2::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0));
            let translated = PointCloud2D {
                points: points.iter().map(|p| p + shift).collect(),
            };
            let tr_desc = compute_descriptor(&translated);
            if base.distance(&tr_desc) > 1e-9 {
                return Err(format!(
                    "trial {trial}: translation changed descriptor by {}",
                    base.distance(&tr_desc)
                ));
            }
        }
        // PCA gate: collinear rejected, isotropic accepted.
        let mut rng2 = StdRng::seed_from_u64(89);
        let corridor = PointCloud2D {
            points: (0..50)
                .map(|i| Vector2::new(i as f64, rng2.gen_range(-0.2..0.2)))
                .collect(),
        };
        let (ok, ratio) = pca_gate(&corridor, 3.0);
        if ok {
            return Err(format!("collinear cloud passed the gate (ratio {ratio:.1})"));
        }
        let isotropic = PointCloud2D {
            points: (0..50)
                .map(|_| Vector2::new(rng2.gen_range(-20.0..20.0), rng2.gen_range(-20.0..20.0)))
                .collect(),
        };
        let (ok, ratio) = pca_gate(&isotropic, 3.0);
        if !ok {
            return Err(format!("isotropic cloud rejected (ratio {ratio:.1})"));
        }
        Ok(())
    })());
}

#[test]
fn c09_evaluation_metrics() {
    criterion(9, "evaluation metrics", (|| {
        let gt: Vec<(f64, Pose2)> = (0..1001)
            .map(|i| (i as f64, Pose2::from_xy_theta(i as f64, 0.0, 0.0)))
            .collect();
        let scaled: Vec<(f64, Pose2)> = gt
            .iter()
            .map(|&(s, p)| (s, Pose2::from_xy_theta(p.x() * 1.01, p.y() * 1.01, p.rotation())))
            .collect();
        let (t, _) = relative_error(&associate(&scaled, &gt, 0.25)).map_err(|e| e.to_string())?;
        if (t - 1.0).abs() > 0.05 {
            return Err(format!("1% scale error measured as {t:.3}%"));
        }
        let offset = Pose2::from_xy_theta(250.0, -80.0, 1.2);
        let moved: Vec<(f64, Pose2)> = gt.iter().map(|&(s, p)| (s, offset.compose(&p))).collect();
        let ate = absolute_trajectory_error(&associate(&moved, &gt, 0.25)).map_err(|e| e.to_string())?;
        if ate > 1e-9 {
            return Err(format!("rigid offset left ATE {ate}"));
        }
        let completion = completion_percentage(72, 100).map_err(|e| e.to_string())?;
        if completion != 72.0 {
            return Err(format!("completion 72/100 gave {completion}"));
        }
        Ok(())
    })());
}

#[test]
fn c10_oxford_external() {
    let (seq, gt) = match (
        std::env::var("RADAR_SLAM_OXFORD_SEQ"),
        std::env::var("RADAR_SLAM_OXFORD_GT"),
    ) {
        (Ok(s), Ok(g)) => (s, g),
        _ => {
            println!(
                "criterion 10 (Oxford external): SKIP \
                 (set RADAR_SLAM_OXFORD_SEQ and RADAR_SLAM_OXFORD_GT to run)"
            );
            return;
        }
    };
    criterion(10, "Oxford external", (|| {
        let result =
            run_odometry(Path::new(&seq), &PipelineConfig::default()).map_err(|e| e.to_string())?;
        let gt_traj = read_trajectory(Path::new(&gt)).map_err(|e| e.to_string())?;
        let pairs = associate(&result.trajectory, &gt_traj, 0.125);
        let (t, r) = relative_error(&pairs).map_err(|e| e.to_string())?;
        if (t - 2.32).abs() > 0.5 {
            return Err(format!("translation RE {t:.2}% outside 2.32 +/- 0.5"));
        }
        if (r - 0.7).abs() > 0.3 {
            return Err(format!("rotation RE {r:.2} deg/100m outside 0.7 +/- 0.3"));
        }
        Ok(())
    })());
}

// The simulator writes its ground truth beside the scans; keep the name in
// sync with what the criteria above read back.
#[test]
fn ground_truth_artifact_name() {
    assert_eq!(GROUND_TRUTH_NAME, "ground_truth.txt");
}
