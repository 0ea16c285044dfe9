//! Blob keypoint detection, adaptive non-maximal suppression and pyramidal
//! Lucas-Kanade tracking on Cartesian radar images, plus grid-based
//! spawning of new track points.

use crate::geometry::CartesianImage;
use crate::{Error, Result};

/// Detector scale: Gaussian smoothing applied before the Hessian.
pub const DETECT_SIGMA: f64 = 2.0;

/// A detected blob keypoint with sub-pixel position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    /// (u, v) pixel coordinates.
    pub pixel: (f64, f64),
    /// Determinant-of-Hessian score.
    pub response: f64,
}

/// Tracking status of a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Alive,
    Lost,
}

/// A feature tracked across frames.
#[derive(Debug, Clone, Copy)]
pub struct TrackedFeature {
    pub id: u64,
    pub pixel: (f64, f64),
    /// Capture time of the beam behind the current pixel, seconds relative
    /// to the scan center.
    pub beam_time: f64,
    pub status: TrackStatus,
    /// Number of frames this feature has been tracked.
    pub age: u32,
}

impl TrackedFeature {
    pub fn is_alive(&self) -> bool {
        self.status == TrackStatus::Alive
    }
}

/// Lucas-Kanade settings. Defaults: 3 levels, 21x21 window, 30 iterations,
/// 0.01 px convergence, 1 px forward-backward gate.
#[derive(Debug, Clone, Copy)]
pub struct KltParams {
    pub levels: usize,
    pub half_window: usize,
    pub max_iterations: usize,
    pub epsilon: f64,
    pub fb_threshold: f64,
}

impl Default for KltParams {
    fn default() -> Self {
        KltParams {
            levels: 3,
            half_window: 10,
            max_iterations: 30,
            epsilon: 0.01,
            fb_threshold: 1.0,
        }
    }
}

/// Simple owned grayscale buffer used for pyramids and filtering.
#[derive(Debug, Clone)]
struct Buffer {
    data: Vec<f64>,
    width: usize,
    height: usize,
}

impl Buffer {
    fn from_image(img: &CartesianImage) -> Self {
        Buffer {
            data: img.intensity().to_vec(),
            width: img.width(),
            height: img.height(),
        }
    }

    fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    fn sample(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, (self.width - 1) as f64);
        let v = v.clamp(0.0, (self.height - 1) as f64);
        let u0 = u.floor() as usize;
        let v0 = v.floor() as usize;
        let u1 = (u0 + 1).min(self.width - 1);
        let v1 = (v0 + 1).min(self.height - 1);
        let fu = u - u0 as f64;
        let fv = v - v0 as f64;
        let top = self.at(u0, v0) * (1.0 - fu) + self.at(u1, v0) * fu;
        let bot = self.at(u0, v1) * (1.0 - fu) + self.at(u1, v1) * fu;
        top * (1.0 - fv) + bot * fv
    }

    /// Separable Gaussian blur; the kernel is renormalized at the borders so
    /// constant images stay constant.
    fn gaussian_blur(&self, sigma: f64) -> Buffer {
        let radius = (3.0 * sigma).ceil() as i64;
        let kernel: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i as f64).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        let mut horiz = vec![0.0; self.data.len()];
        for v in 0..self.height {
            for u in 0..self.width {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let x = u as i64 + (k as i64 - radius);
                    if x >= 0 && (x as usize) < self.width {
                        acc += w * self.at(x as usize, v);
                        wsum += w;
                    }
                }
                horiz[v * self.width + u] = acc / wsum;
            }
        }
        let mut out = vec![0.0; self.data.len()];
        for v in 0..self.height {
            for u in 0..self.width {
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for (k, w) in kernel.iter().enumerate() {
                    let y = v as i64 + (k as i64 - radius);
                    if y >= 0 && (y as usize) < self.height {
                        acc += w * horiz[y as usize * self.width + u];
                        wsum += w;
                    }
                }
                out[v * self.width + u] = acc / wsum;
            }
        }
        Buffer {
            data: out,
            width: self.width,
            height: self.height,
        }
    }

    /// Half-resolution level for the pyramid (blur then 2x subsample).
    fn downsample(&self) -> Buffer {
        let blurred = self.gaussian_blur(1.0);
        let width = (self.width / 2).max(1);
        let height = (self.height / 2).max(1);
        let mut data = vec![0.0; width * height];
        for v in 0..height {
            for u in 0..width {
                data[v * width + u] = blurred.at(u * 2, v * 2);
            }
        }
        Buffer { data, width, height }
    }
}

/// Detects blob keypoints as local maxima of the determinant of the Hessian
/// of the Gaussian-smoothed image, sub-pixel refined, sorted by response
/// descending.
pub fn detect_keypoints(img: &CartesianImage, min_hessian: f64) -> Vec<Keypoint> {
    let smoothed = Buffer::from_image(img).gaussian_blur(DETECT_SIGMA);
    let w = smoothed.width;
    let h = smoothed.height;
    if w < 3 || h < 3 {
        return Vec::new();
    }
    let mut response = vec![0.0; w * h];
    for v in 1..h - 1 {
        for u in 1..w - 1 {
            let ixx = smoothed.at(u + 1, v) - 2.0 * smoothed.at(u, v) + smoothed.at(u - 1, v);
            let iyy = smoothed.at(u, v + 1) - 2.0 * smoothed.at(u, v) + smoothed.at(u, v - 1);
            let ixy = (smoothed.at(u + 1, v + 1) - smoothed.at(u + 1, v - 1)
                - smoothed.at(u - 1, v + 1)
                + smoothed.at(u - 1, v - 1))
                / 4.0;
            response[v * w + u] = ixx * iyy - ixy * ixy;
        }
    }
    let mut keypoints = Vec::new();
    for v in 2..h - 2 {
        for u in 2..w - 2 {
            let r = response[v * w + u];
            if r <= min_hessian {
                continue;
            }
            let mut is_max = true;
            'outer: for dv in -1i64..=1 {
                for du in -1i64..=1 {
                    if du == 0 && dv == 0 {
                        continue;
                    }
                    if response[(v as i64 + dv) as usize * w + (u as i64 + du) as usize] > r {
                        is_max = false;
                        break 'outer;
                    }
                }
            }
            if !is_max {
                continue;
            }
            // Quadratic sub-pixel refinement on the response surface.
            let dx = (response[v * w + u + 1] - response[v * w + u - 1]) / 2.0;
            let dy = (response[(v + 1) * w + u] - response[(v - 1) * w + u]) / 2.0;
            let dxx = response[v * w + u + 1] - 2.0 * r + response[v * w + u - 1];
            let dyy = response[(v + 1) * w + u] - 2.0 * r + response[(v - 1) * w + u];
            let dxy = (response[(v + 1) * w + u + 1] - response[(v + 1) * w + u - 1]
                - response[(v - 1) * w + u + 1]
                + response[(v - 1) * w + u - 1])
                / 4.0;
            let det = dxx * dyy - dxy * dxy;
            let (mut ou, mut ov) = (0.0, 0.0);
            if det.abs() > 1e-12 {
                ou = -(dyy * dx - dxy * dy) / det;
                ov = -(dxx * dy - dxy * dx) / det;
                if ou.abs() > 0.5 || ov.abs() > 0.5 {
                    ou = ou.clamp(-0.5, 0.5);
                    ov = ov.clamp(-0.5, 0.5);
                }
            }
            keypoints.push(Keypoint {
                pixel: (u as f64 + ou, v as f64 + ov),
                response: r,
            });
        }
    }
    keypoints.sort_by(|a, b| {
        b.response
            .partial_cmp(&a.response)
            .unwrap()
            .then(a.pixel.1.partial_cmp(&b.pixel.1).unwrap())
            .then(a.pixel.0.partial_cmp(&b.pixel.0).unwrap())
    });
    keypoints
}

/// Adaptive non-maximal suppression: keeps up to `target` keypoints whose
/// suppression radii (distance to the nearest stronger point) are largest,
/// giving a spatially homogeneous subset.
///
/// `candidates` must be sorted by response descending; ties between equal
/// radii break deterministically toward the lower pixel index.
pub fn anms(candidates: &[Keypoint], target: usize) -> Vec<Keypoint> {
    if candidates.len() <= target {
        return candidates.to_vec();
    }
    let mut radii = vec![f64::INFINITY; candidates.len()];
    for i in 1..candidates.len() {
        let mut best = f64::INFINITY;
        for j in 0..i {
            if candidates[j].response > candidates[i].response {
                let du = candidates[i].pixel.0 - candidates[j].pixel.0;
                let dv = candidates[i].pixel.1 - candidates[j].pixel.1;
                best = best.min(du * du + dv * dv);
            }
        }
        radii[i] = best;
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        radii[b]
            .partial_cmp(&radii[a])
            .unwrap()
            .then(candidates[a].pixel.1.partial_cmp(&candidates[b].pixel.1).unwrap())
            .then(candidates[a].pixel.0.partial_cmp(&candidates[b].pixel.0).unwrap())
    });
    let mut kept: Vec<Keypoint> = order.iter().take(target).map(|&i| candidates[i]).collect();
    kept.sort_by(|a, b| b.response.partial_cmp(&a.response).unwrap());
    kept
}

/// Pyramidal Lucas-Kanade tracking of `features` from `prev` into `next`.
///
/// Features that leave the image, sit on textureless patches, fail to
/// converge or fail the forward-backward round-trip check are marked lost.
/// Survivors get updated sub-pixel positions and incremented age; beam
/// times are refreshed separately by the pipeline since they need the
/// polar scan.
pub fn klt_track(
    prev: &CartesianImage,
    next: &CartesianImage,
    features: &[TrackedFeature],
    params: &KltParams,
) -> Result<Vec<TrackedFeature>> {
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(Error::invalid("klt_track: image dimensions differ"));
    }
    if (prev.resolution - next.resolution).abs() > 1e-12 {
        return Err(Error::invalid("klt_track: image resolutions differ"));
    }
    let prev_pyr = build_pyramid(prev, params.levels);
    let next_pyr = build_pyramid(next, params.levels);
    let mut out = Vec::with_capacity(features.len());
    for f in features {
        if !f.is_alive() {
            out.push(*f);
            continue;
        }
        let mut updated = *f;
        match track_point(&prev_pyr, &next_pyr, f.pixel, params) {
            Some(tracked) => match track_point(&next_pyr, &prev_pyr, tracked, params) {
                Some(back) => {
                    let du = back.0 - f.pixel.0;
                    let dv = back.1 - f.pixel.1;
                    if (du * du + dv * dv).sqrt() <= params.fb_threshold {
                        updated.pixel = tracked;
                        updated.age += 1;
                    } else {
                        updated.status = TrackStatus::Lost;
                    }
                }
                None => updated.status = TrackStatus::Lost,
            },
            None => updated.status = TrackStatus::Lost,
        }
        out.push(updated);
    }
    Ok(out)
}

fn build_pyramid(img: &CartesianImage, levels: usize) -> Vec<Buffer> {
    let mut pyr = vec![Buffer::from_image(img)];
    for _ in 1..levels {
        let down = pyr.last().unwrap().downsample();
        if down.width < 8 || down.height < 8 {
            break;
        }
        pyr.push(down);
    }
    pyr
}

/// Translation-only iterative LK for one point across pyramid levels.
fn track_point(
    prev_pyr: &[Buffer],
    next_pyr: &[Buffer],
    start: (f64, f64),
    params: &KltParams,
) -> Option<(f64, f64)> {
    let top = prev_pyr.len() - 1;
    let scale = (1 << top) as f64;
    let mut guess = (start.0 / scale, start.1 / scale);
    for level in (0..prev_pyr.len()).rev() {
        let s = (1 << level) as f64;
        let origin = (start.0 / s, start.1 / s);
        guess = lk_at_level(&prev_pyr[level], &next_pyr[level], origin, guess, params)?;
        if level > 0 {
            guess = (guess.0 * 2.0, guess.1 * 2.0);
        }
    }
    let (w, h) = (prev_pyr[0].width as f64, prev_pyr[0].height as f64);
    if guess.0 < 1.0 || guess.1 < 1.0 || guess.0 > w - 2.0 || guess.1 > h - 2.0 {
        return None;
    }
    Some(guess)
}

fn lk_at_level(
    prev: &Buffer,
    next: &Buffer,
    origin: (f64, f64),
    init: (f64, f64),
    params: &KltParams,
) -> Option<(f64, f64)> {
    let hw = params.half_window as i64;
    let n = (2 * hw + 1) * (2 * hw + 1);
    let mut template = Vec::with_capacity(n as usize);
    let mut grad = Vec::with_capacity(n as usize);
    let mut gxx = 0.0;
    let mut gxy = 0.0;
    let mut gyy = 0.0;
    for dv in -hw..=hw {
        for du in -hw..=hw {
            let u = origin.0 + du as f64;
            let v = origin.1 + dv as f64;
            let gx = (prev.sample(u + 1.0, v) - prev.sample(u - 1.0, v)) / 2.0;
            let gy = (prev.sample(u, v + 1.0) - prev.sample(u, v - 1.0)) / 2.0;
            template.push(prev.sample(u, v));
            grad.push((gx, gy));
            gxx += gx * gx;
            gxy += gx * gy;
            gyy += gy * gy;
        }
    }
    let det = gxx * gyy - gxy * gxy;
    // Textureless patch: singular structure tensor.
    if det < 1e-6 || gxx + gyy < 1e-6 {
        return None;
    }
    let mut pos = init;
    for _ in 0..params.max_iterations {
        let mut bx = 0.0;
        let mut by = 0.0;
        let mut idx = 0usize;
        for dv in -hw..=hw {
            for du in -hw..=hw {
                let diff = template[idx] - next.sample(pos.0 + du as f64, pos.1 + dv as f64);
                let (gx, gy) = grad[idx];
                bx += diff * gx;
                by += diff * gy;
                idx += 1;
            }
        }
        let du = (gyy * bx - gxy * by) / det;
        let dv = (gxx * by - gxy * bx) / det;
        pos.0 += du;
        pos.1 += dv;
        if du.hypot(dv) < params.epsilon {
            return Some(pos);
        }
        if !pos.0.is_finite() || !pos.1.is_finite() {
            return None;
        }
    }
    // No convergence within the iteration budget.
    None
}

/// Detects and ANMS-filters replacement keypoints in under-occupied grid
/// cells when the live pool has dropped below `target`.
///
/// "Low" occupancy is below the average `target / (rows*cols)`. Candidates
/// closer than 3 px to a live feature are skipped.
pub fn spawn_new_points(
    img: &CartesianImage,
    alive: &[TrackedFeature],
    target: usize,
    grid: (usize, usize),
    min_hessian: f64,
) -> Vec<Keypoint> {
    let alive: Vec<&TrackedFeature> = alive.iter().filter(|f| f.is_alive()).collect();
    if alive.len() >= target {
        return Vec::new();
    }
    let (rows, cols) = grid;
    let cell_w = img.width() as f64 / cols as f64;
    let cell_h = img.height() as f64 / rows as f64;
    let cell_of = |pixel: (f64, f64)| -> usize {
        let c = (pixel.0 / cell_w).floor().clamp(0.0, cols as f64 - 1.0) as usize;
        let r = (pixel.1 / cell_h).floor().clamp(0.0, rows as f64 - 1.0) as usize;
        r * cols + c
    };
    let mut occupancy = vec![0usize; rows * cols];
    for f in &alive {
        occupancy[cell_of(f.pixel)] += 1;
    }
    let threshold = target as f64 / (rows * cols) as f64;
    let candidates = detect_keypoints(img, min_hessian);
    let eligible: Vec<Keypoint> = candidates
        .into_iter()
        .filter(|k| (occupancy[cell_of(k.pixel)] as f64) < threshold)
        .filter(|k| {
            alive.iter().all(|f| {
                let du = f.pixel.0 - k.pixel.0;
                let dv = f.pixel.1 - k.pixel.1;
                du * du + dv * dv > 9.0
            })
        })
        .collect();
    anms(&eligible, target - alive.len())
}
