//! Place recognition and loop verification.
//!
//! Polar scans are reduced to structural point clouds (per-azimuth peak
//! extraction with a mean-plus-standard-deviation power gate), described by
//! a rotation-invariant density signature, gated by the PCA eigenvalue
//! ratio and verified geometrically: PCA-aligned KLT correspondences seed a
//! point-to-point ICP between the clouds.

use crate::features::{detect_keypoints, klt_track, KltParams, TrackStatus, TrackedFeature};
use crate::geometry::{metric_to_pixel, pixel_to_metric, CartesianImage, PolarDetection, PolarScan};
use crate::map::{default_edge_information, Keyframe};
use crate::outliers::{build_consistency_graph, maximum_clique, rigid_fit_svd};
use crate::se2::Pose2;
use nalgebra::{Matrix2, Matrix3, Rotation2, Vector2};
use std::collections::BTreeMap;

/// A planar structural point cloud in a scan's local metric frame.
#[derive(Debug, Clone, Default)]
pub struct PointCloud2D {
    pub points: Vec<Vector2<f64>>,
}

impl PointCloud2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

const RING_BINS: usize = 8;
const SECTOR_BINS: usize = 16;

/// Fixed-length place signature; `degenerate` descriptors never match.
#[derive(Debug, Clone)]
pub struct PlaceDescriptor {
    pub vector: Vec<f64>,
    pub degenerate: bool,
}

impl PlaceDescriptor {
    pub fn distance(&self, other: &PlaceDescriptor) -> f64 {
        if self.degenerate || other.degenerate {
            return f64::INFINITY;
        }
        self.vector
            .iter()
            .zip(other.vector.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Descriptor-level loop hypothesis awaiting geometric verification.
#[derive(Debug, Clone, Copy)]
pub struct LoopCandidate {
    pub query_id: u64,
    pub match_id: u64,
    pub descriptor_distance: f64,
}

/// Geometrically verified loop constraint.
#[derive(Debug, Clone)]
pub struct VerifiedLoop {
    /// `T_{l,j}`: maps query-frame points into the match frame.
    pub relative: Pose2,
    pub information: Matrix3<f64>,
    pub mean_residual: f64,
    pub inlier_fraction: f64,
}

/// Parameters of the loop-closure stage.
#[derive(Debug, Clone)]
pub struct LoopClosureConfig {
    /// Peak prominence, power units on the 0-255 scale.
    pub prominence: f64,
    /// Minimum peak separation, range bins.
    pub min_separation_bins: usize,
    pub pca_ratio_threshold: f64,
    pub match_threshold: f64,
    /// Minimum keyframe-id gap between query and match.
    pub temporal_gap: u64,
    pub icp_max_iterations: usize,
    pub icp_tolerance: f64,
    pub max_mean_residual: f64,
    pub min_inlier_fraction: f64,
    /// Detector threshold for verification keypoints.
    pub min_hessian: f64,
}

impl Default for LoopClosureConfig {
    fn default() -> Self {
        LoopClosureConfig {
            prominence: 8.0,
            min_separation_bins: 5,
            pca_ratio_threshold: 3.0,
            match_threshold: 0.15,
            temporal_gap: 50,
            icp_max_iterations: 50,
            icp_tolerance: 1e-4,
            max_mean_residual: 1.0,
            min_inlier_fraction: 0.5,
            min_hessian: 700.0,
        }
    }
}

/// Peaks of one power row: local maxima with the given prominence, thinned
/// to the separation distance strongest-first. Prominence scales with the
/// row maximum so selection is invariant to positive power scaling.
pub fn find_row_peaks(row: &[f64], prominence: f64, min_separation: usize) -> Vec<(usize, f64)> {
    let n = row.len();
    if n < 3 {
        return Vec::new();
    }
    let row_max = row.iter().cloned().fold(0.0, f64::max);
    if row_max <= 0.0 {
        return Vec::new();
    }
    let effective_prominence = prominence * row_max / 255.0;
    let mut candidates: Vec<(usize, f64)> = Vec::new();
    for i in 1..n - 1 {
        if !(row[i] > row[i - 1] && row[i] >= row[i + 1]) {
            continue;
        }
        // Walk outward until higher ground or the edge; the reference level
        // on each side is the lowest sample crossed.
        let mut left_base = row[i];
        let mut j = i;
        while j > 0 {
            j -= 1;
            if row[j] > row[i] {
                break;
            }
            left_base = left_base.min(row[j]);
        }
        let mut right_base = row[i];
        let mut j = i;
        while j + 1 < n {
            j += 1;
            if row[j] > row[i] {
                break;
            }
            right_base = right_base.min(row[j]);
        }
        let prom = row[i] - left_base.max(right_base);
        if prom >= effective_prominence {
            candidates.push((i, row[i]));
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for (bin, power) in candidates {
        if kept
            .iter()
            .all(|&(k, _)| bin.abs_diff(k) >= min_separation.max(1))
        {
            kept.push((bin, power));
        }
    }
    kept.sort_by_key(|&(bin, _)| bin);
    kept
}

/// Converts a polar scan to a structural point cloud: per-azimuth peaks
/// kept when their power reaches the row's peak mean plus one standard
/// deviation.
pub fn extract_point_cloud(scan: &PolarScan, prominence: f64, min_separation_bins: usize) -> PointCloud2D {
    let mut points = Vec::new();
    for a in 0..scan.n_azimuths() {
        let peaks = find_row_peaks(scan.row(a), prominence, min_separation_bins);
        if peaks.is_empty() {
            continue;
        }
        let powers: Vec<f64> = peaks.iter().map(|&(_, q)| q).collect();
        let mean = powers.iter().sum::<f64>() / powers.len() as f64;
        let var = powers.iter().map(|q| (q - mean) * (q - mean)).sum::<f64>() / powers.len() as f64;
        let threshold = mean + var.sqrt();
        for &(bin, q) in &peaks {
            if q >= threshold - 1e-9 * threshold.abs().max(1.0) {
                if let Ok(p) = crate::geometry::polar_point_to_metric(&PolarDetection::new(a, bin as f64), scan) {
                    points.push(p);
                }
            }
        }
    }
    PointCloud2D { points }
}

fn covariance(points: &[Vector2<f64>]) -> (Vector2<f64>, Matrix2<f64>) {
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Vector2<f64>>() / n;
    let mut cov = Matrix2::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    (centroid, cov / n)
}

/// Eigen pairs of a symmetric 2x2 matrix, largest first.
fn symmetric_eigen(cov: &Matrix2<f64>) -> ((f64, Vector2<f64>), (f64, Vector2<f64>)) {
    let eig = nalgebra::SymmetricEigen::new(*cov);
    let (i, j) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    (
        (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()),
        (eig.eigenvalues[j], eig.eigenvectors.column(j).into_owned()),
    )
}

/// Angle of the cloud's principal eigenvector, in (-pi, pi].
pub fn principal_direction(points: &[Vector2<f64>]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let (_, cov) = covariance(points);
    let ((_, e1), _) = symmetric_eigen(&cov);
    Some(e1.y.atan2(e1.x))
}

fn density_signature(points: &[Vector2<f64>]) -> Vec<f64> {
    // Points are already centered and PCA-aligned.
    let r_max = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-12);
    let mut grid = vec![vec![0.0f64; SECTOR_BINS]; RING_BINS];
    for p in points {
        // Equal-area rings: ring k covers radius r_max*sqrt(k/R)..sqrt((k+1)/R).
        let ring = (((p.norm() / r_max).powi(2) * RING_BINS as f64) as usize).min(RING_BINS - 1);
        let mut angle = p.y.atan2(p.x);
        if angle < 0.0 {
            angle += std::f64::consts::TAU;
        }
        let sector = ((angle / std::f64::consts::TAU * SECTOR_BINS as f64) as usize).min(SECTOR_BINS - 1);
        grid[ring][sector] += 1.0;
    }
    let mut flat = Vec::with_capacity(RING_BINS * SECTOR_BINS);
    for ring in &mut grid {
        let total: f64 = ring.iter().sum();
        if total > 0.0 {
            for c in ring.iter_mut() {
                *c /= total;
            }
        }
        flat.extend_from_slice(ring);
    }
    flat
}

fn signature_for_signs(aligned: &[Vector2<f64>], sx: f64, sy: f64) -> Vec<f64> {
    let flipped: Vec<Vector2<f64>> = aligned.iter().map(|p| Vector2::new(sx * p.x, sy * p.y)).collect();
    density_signature(&flipped)
}

/// Density-signature place descriptor: centroid removal, PCA alignment
/// with skewness sign disambiguation, equal-area ring x sector histogram,
/// concatenated first singular vectors.
pub fn compute_descriptor(cloud: &PointCloud2D) -> PlaceDescriptor {
    let degenerate = PlaceDescriptor {
        vector: vec![0.0; RING_BINS + SECTOR_BINS],
        degenerate: true,
    };
    if cloud.points.len() < 3 {
        return degenerate;
    }
    let (centroid, cov) = covariance(&cloud.points);
    let ((g1, e1), (g2, e2)) = symmetric_eigen(&cov);
    if !(g1 > 0.0) || g2 < 1e-12 * g1 {
        return degenerate;
    }
    let aligned: Vec<Vector2<f64>> = cloud
        .points
        .iter()
        .map(|p| {
            let d = p - centroid;
            Vector2::new(e1.dot(&d), e2.dot(&d))
        })
        .collect();
    // Axis signs fixed by positive third moment; ambiguous axes resolved
    // toward the lexicographically larger signature.
    let spread = aligned.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-12);
    let skew = |axis: usize| aligned.iter().map(|p| (p[axis] / spread).powi(3)).sum::<f64>();
    let sign_options = |s: f64| -> Vec<f64> {
        if s > 1e-9 {
            vec![1.0]
        } else if s < -1e-9 {
            vec![-1.0]
        } else {
            vec![1.0, -1.0]
        }
    };
    let mut best: Option<Vec<f64>> = None;
    for &sx in &sign_options(skew(0)) {
        for &sy in &sign_options(skew(1)) {
            let sig = signature_for_signs(&aligned, sx, sy);
            if best.as_ref().map_or(true, |b| sig > *b) {
                best = Some(sig);
            }
        }
    }
    let flat = best.unwrap();
    let a = nalgebra::DMatrix::from_row_slice(RING_BINS, SECTOR_BINS, &flat);
    let svd = a.svd(true, true);
    let u = svd.u.as_ref().unwrap().column(0).into_owned();
    let vt = svd.v_t.as_ref().unwrap().row(0).transpose();
    let mut vector: Vec<f64> = u.iter().chain(vt.iter()).cloned().collect();
    if let Some(first) = vector.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            for x in vector.iter_mut() {
                *x = -*x;
            }
        }
    }
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in vector.iter_mut() {
            *x /= norm;
        }
    }
    PlaceDescriptor {
        vector,
        degenerate: false,
    }
}

/// PCA eigenvalue-ratio gate: elongated (degenerate-geometry) clouds are
/// rejected. Returns `(accepted, r_pca)`.
pub fn pca_gate(cloud: &PointCloud2D, ratio_threshold: f64) -> (bool, f64) {
    if cloud.points.len() < 2 {
        return (false, f64::INFINITY);
    }
    let (_, cov) = covariance(&cloud.points);
    let ((g1, _), (g2, _)) = symmetric_eigen(&cov);
    if g2 <= 0.0 || !g2.is_finite() {
        return (false, f64::INFINITY);
    }
    let r = g1 / g2;
    (r < ratio_threshold, r)
}

/// Minimum-distance descriptor match among gated keyframes older than the
/// temporal gap; `None` when nothing beats the match threshold.
pub fn find_loop_candidate(
    query: &Keyframe,
    history: &BTreeMap<u64, Keyframe>,
    cfg: &LoopClosureConfig,
) -> Option<LoopCandidate> {
    if query.descriptor.is_empty() || !(query.pca_ratio < cfg.pca_ratio_threshold) {
        return None;
    }
    let qd = PlaceDescriptor {
        vector: query.descriptor.clone(),
        degenerate: false,
    };
    let mut best: Option<LoopCandidate> = None;
    for (&id, kf) in history {
        if id + cfg.temporal_gap >= query.id {
            continue;
        }
        if kf.descriptor.is_empty() || !(kf.pca_ratio < cfg.pca_ratio_threshold) {
            continue;
        }
        let d = qd.distance(&PlaceDescriptor {
            vector: kf.descriptor.clone(),
            degenerate: false,
        });
        if best.as_ref().map_or(true, |b| d < b.descriptor_distance) {
            best = Some(LoopCandidate {
                query_id: query.id,
                match_id: id,
                descriptor_distance: d,
            });
        }
    }
    best.filter(|c| c.descriptor_distance < cfg.match_threshold)
}

/// Resamples `img` as seen by a sensor frame rotated by `angle` radians:
/// output at metric point `p` samples the input at `R(angle) * p`.
pub fn rotate_image(img: &CartesianImage, angle: f64) -> CartesianImage {
    let rot = Rotation2::new(angle);
    let mut out = vec![0.0; img.width() * img.height()];
    for v in 0..img.height() {
        for u in 0..img.width() {
            let p = pixel_to_metric(u as f64, v as f64, img);
            let src = rot * p;
            let (su, sv) = metric_to_pixel(&src, img);
            if su >= 0.0 && su <= (img.width() - 1) as f64 && sv >= 0.0 && sv <= (img.height() - 1) as f64 {
                out[v * img.width() + u] = img.sample(su, sv);
            }
        }
    }
    CartesianImage::new(out, img.width(), img.height(), img.resolution, img.stamp)
        .expect("dimensions preserved")
}

/// Point-to-point ICP from `src` onto `dst`, seeded with `init`. Returns
/// the refined transform, per-iteration mean pair residuals, final mean
/// inlier residual and inlier fraction (1 m inlier radius).
pub fn icp(
    src: &[Vector2<f64>],
    dst: &[Vector2<f64>],
    init: &Pose2,
    max_iterations: usize,
    tolerance: f64,
) -> Option<(Pose2, Vec<f64>, f64, f64)> {
    if src.len() < 2 || dst.len() < 2 {
        return None;
    }
    // Trimmed update: the overlap between two partially co-visible clouds
    // is incomplete, and fitting on every nearest-neighbor pair lets the
    // non-overlapping points drag the alignment off. Fit on the closest
    // fraction of pairs instead.
    const TRIM_FRACTION: f64 = 0.7;
    let mut t = *init;
    let mut history = Vec::new();
    let mut last_mean = f64::INFINITY;
    for _ in 0..max_iterations {
        let mut pairs: Vec<(f64, Vector2<f64>, Vector2<f64>)> = src
            .iter()
            .map(|s| {
                let moved = t.act_on_point(s);
                let nn = dst
                    .iter()
                    .min_by(|a, b| {
                        (*a - moved).norm_squared().total_cmp(&(*b - moved).norm_squared())
                    })
                    .unwrap();
                ((nn - moved).norm(), *s, *nn)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let keep = ((pairs.len() as f64 * TRIM_FRACTION).ceil() as usize)
            .clamp(2.min(pairs.len()), pairs.len());
        pairs.truncate(keep);
        let mean = pairs.iter().map(|(d, _, _)| d).sum::<f64>() / keep as f64;
        history.push(mean);
        let pairs_src: Vec<Vector2<f64>> = pairs.iter().map(|&(_, s, _)| s).collect();
        let pairs_dst: Vec<Vector2<f64>> = pairs.iter().map(|&(_, _, d)| d).collect();
        let refined = rigid_fit_svd(&pairs_src, &pairs_dst).ok()?;
        let shift = (refined.translation() - t.translation()).norm()
            + (crate::se2::wrap_angle(refined.rotation() - t.rotation())).abs();
        t = refined;
        if (last_mean - mean).abs() < tolerance && shift < tolerance {
            break;
        }
        last_mean = mean;
    }
    let mut inliers = 0usize;
    let mut inlier_total = 0.0;
    for s in src {
        let moved = t.act_on_point(s);
        let d = dst
            .iter()
            .map(|p| (p - moved).norm())
            .fold(f64::INFINITY, f64::min);
        if d < 1.0 {
            inliers += 1;
            inlier_total += d;
        }
    }
    let fraction = inliers as f64 / src.len() as f64;
    let mean_inlier = if inliers > 0 { inlier_total / inliers as f64 } else { f64::INFINITY };
    Some((t, history, mean_inlier, fraction))
}

fn klt_seed(
    query_img: &CartesianImage,
    match_img: &CartesianImage,
    rotation: f64,
    cfg: &LoopClosureConfig,
) -> Option<Pose2> {
    // Rotate the query so both images share an orientation, then track
    // match-image keypoints into the rotated query.
    let rotated = rotate_image(query_img, rotation);
    let kps = detect_keypoints(match_img, cfg.min_hessian);
    if kps.len() < 2 {
        return None;
    }
    let features: Vec<TrackedFeature> = kps
        .iter()
        .take(120)
        .enumerate()
        .map(|(i, k)| TrackedFeature {
            id: i as u64,
            pixel: k.pixel,
            beam_time: 0.0,
            status: TrackStatus::Alive,
            age: 0,
        })
        .collect();
    let tracked = klt_track(match_img, &rotated, &features, &KltParams::default()).ok()?;
    let mut match_px = Vec::new();
    let mut query_px = Vec::new();
    for (f, t) in features.iter().zip(tracked.iter()) {
        if t.is_alive() {
            match_px.push(f.pixel);
            query_px.push(t.pixel);
        }
    }
    if match_px.len() < 2 {
        return None;
    }
    let graph = build_consistency_graph(&match_px, &query_px, 3.0).ok()?;
    let clique = maximum_clique(&graph);
    if clique.len() < 2 {
        return None;
    }
    let rot = Rotation2::new(rotation);
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for &i in &clique {
        // Tracked pixel lives in the rotated query frame; map back to the
        // original query frame before fitting.
        let p_rot = pixel_to_metric(query_px[i].0, query_px[i].1, query_img);
        src.push(rot * p_rot);
        dst.push(pixel_to_metric(match_px[i].0, match_px[i].1, match_img));
    }
    rigid_fit_svd(&src, &dst).ok()
}

/// Greedy agglomeration: each point joins the nearest cluster whose running
/// centroid lies within `radius`, otherwise starts a new one. Returns each
/// cluster's centroid and member count.
pub fn cluster_points(points: &[Vector2<f64>], radius: f64) -> Vec<(Vector2<f64>, usize)> {
    let mut centroids: Vec<Vector2<f64>> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for p in points {
        match centroids
            .iter()
            .enumerate()
            .filter(|(_, c)| (*c - p).norm() <= radius)
            .min_by(|(_, a), (_, b)| (*a - p).norm().total_cmp(&(*b - p).norm()))
        {
            Some((i, _)) => {
                let n = counts[i] as f64;
                centroids[i] = (centroids[i] * n + p) / (n + 1.0);
                counts[i] += 1;
            }
            None => {
                centroids.push(*p);
                counts.push(1);
            }
        }
    }
    centroids.into_iter().zip(counts).collect()
}

/// Distills a structural cloud to salient landmarks: a real reflector is
/// re-detected across several adjacent azimuth rows and forms a cluster,
/// while isolated noise peaks do not. Keeps cluster centroids with at least
/// `min_count` members.
pub fn salient_landmarks(points: &[Vector2<f64>], radius: f64, min_count: usize) -> Vec<Vector2<f64>> {
    cluster_points(points, radius)
        .into_iter()
        .filter(|&(_, n)| n >= min_count)
        .map(|(c, _)| c)
        .collect()
}

fn centroid_seed(query: &[Vector2<f64>], matched: &[Vector2<f64>], rotation: f64) -> Pose2 {
    let rot = Rotation2::new(-rotation);
    let cq = query.iter().sum::<Vector2<f64>>() / query.len() as f64;
    let cm = matched.iter().sum::<Vector2<f64>>() / matched.len() as f64;
    let t = cm - rot * cq;
    Pose2::from_xy_theta(t.x, t.y, -rotation)
}

/// Verifies a loop candidate and estimates `T_{l,j}` (query to match).
///
/// Both PCA sign hypotheses are tried; each seeds the transform from
/// clique-filtered KLT correspondences (falling back to centroid alignment)
/// and is refined with ICP over the structural clouds. The better-verified
/// hypothesis is accepted when it passes the residual and inlier gates.
pub fn verify_and_estimate(
    query_cloud: &PointCloud2D,
    match_cloud: &PointCloud2D,
    query_img: &CartesianImage,
    match_img: &CartesianImage,
    cfg: &LoopClosureConfig,
) -> Option<VerifiedLoop> {
    // Register salient landmarks rather than raw per-azimuth peaks: the
    // raw clouds repeat every reflector across adjacent rows and carry
    // isolated noise peaks, both of which distort the inlier fraction.
    let query_pts = salient_landmarks(&query_cloud.points, 1.0, 3);
    let match_pts = salient_landmarks(&match_cloud.points, 1.0, 3);
    if query_pts.len() < 3 || match_pts.len() < 3 {
        return None;
    }
    let phi_q = principal_direction(&query_pts)?;
    let phi_m = principal_direction(&match_pts)?;
    let base = phi_q - phi_m;

    // Rotation hypotheses: the two PCA alignments plus a coarse sweep, each
    // seeded at several translation offsets around the centroid alignment;
    // KLT correspondences add one further seed when trackable.
    let mut rotations = vec![base, base + std::f64::consts::PI];
    for k in 0..8 {
        rotations.push(k as f64 * std::f64::consts::FRAC_PI_4);
    }
    let offsets = [
        Vector2::new(0.0, 0.0),
        Vector2::new(6.0, 0.0),
        Vector2::new(-6.0, 0.0),
        Vector2::new(0.0, 6.0),
        Vector2::new(0.0, -6.0),
        Vector2::new(12.0, 0.0),
        Vector2::new(-12.0, 0.0),
        Vector2::new(0.0, 12.0),
        Vector2::new(0.0, -12.0),
    ];
    let mut seeds: Vec<Pose2> = Vec::new();
    for &rot in &rotations {
        let center = centroid_seed(&query_pts, &match_pts, rot);
        for off in &offsets {
            seeds.push(Pose2::from_xy_theta(
                center.x() + off.x,
                center.y() + off.y,
                center.rotation(),
            ));
        }
    }
    for hypothesis in [base, base + std::f64::consts::PI] {
        if let Some(seed) = klt_seed(query_img, match_img, hypothesis, cfg) {
            seeds.push(seed);
        }
    }

    // Screen every seed with a few iterations, then refine the most
    // promising alignments to convergence.
    let mut screened: Vec<(f64, Pose2)> = seeds
        .iter()
        .filter_map(|init| {
            let (t, _, _, fraction) = icp(&query_pts, &match_pts, init, 5, cfg.icp_tolerance)?;
            Some((fraction, t))
        })
        .collect();
    screened.sort_by(|a, b| b.0.total_cmp(&a.0));
    screened.truncate(5);

    let mut best: Option<VerifiedLoop> = None;
    for (_, init) in &screened {
        let Some((t, _history, mean_residual, inlier_fraction)) = icp(
            &query_pts,
            &match_pts,
            init,
            cfg.icp_max_iterations,
            cfg.icp_tolerance,
        ) else {
            continue;
        };
        if mean_residual < cfg.max_mean_residual && inlier_fraction > cfg.min_inlier_fraction {
            let better = best.as_ref().map_or(true, |b| {
                inlier_fraction > b.inlier_fraction
                    || (inlier_fraction == b.inlier_fraction && mean_residual < b.mean_residual)
            });
            if better {
                best = Some(VerifiedLoop {
                    relative: t,
                    information: default_edge_information() * inlier_fraction,
                    mean_residual,
                    inlier_fraction,
                });
            }
        }
    }
    best
}
