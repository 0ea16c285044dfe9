//! Polar and Cartesian radar representations and the metric mappings
//! between them, including per-beam timing for motion compensation.
//!
//! Conventions: azimuth index `a` maps to the ranging angle
//! `theta = -a * 2*pi / n_azimuths` (clockwise scan), azimuth 0 is captured
//! at `t = -scan_period/2` and the central beam `a = n_azimuths/2` defines
//! `t = 0`, which is also the scan stamp.

use crate::{Error, Result};
use nalgebra::Vector2;

pub mod io;

/// Raw radar return grid: rows are azimuths, columns are range bins.
#[derive(Debug, Clone)]
pub struct PolarScan {
    power: Vec<f64>,
    n_azimuths: usize,
    n_range_bins: usize,
    /// Meters per range bin.
    pub range_resolution: f64,
    /// Seconds for a full 360-degree sweep.
    pub scan_period: f64,
    /// Time of the central azimuth beam.
    pub stamp: f64,
    /// Optional per-row capture times, strictly increasing.
    pub azimuth_stamps: Option<Vec<f64>>,
}

impl PolarScan {
    pub fn new(
        power: Vec<f64>,
        n_azimuths: usize,
        n_range_bins: usize,
        range_resolution: f64,
        scan_period: f64,
        stamp: f64,
        azimuth_stamps: Option<Vec<f64>>,
    ) -> Result<Self> {
        if n_azimuths < 4 || n_range_bins < 1 {
            return Err(Error::invalid(format!(
                "scan must have >= 4 azimuths and >= 1 range bin, got {n_azimuths}x{n_range_bins}"
            )));
        }
        if power.len() != n_azimuths * n_range_bins {
            return Err(Error::invalid(format!(
                "power grid length {} does not match {n_azimuths}x{n_range_bins}",
                power.len()
            )));
        }
        if power.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("power values must be finite and non-negative"));
        }
        if range_resolution <= 0.0 || scan_period <= 0.0 {
            return Err(Error::invalid("range_resolution and scan_period must be positive"));
        }
        if let Some(stamps) = &azimuth_stamps {
            if stamps.len() != n_azimuths {
                return Err(Error::invalid("azimuth_stamps length must equal n_azimuths"));
            }
            if stamps.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid("azimuth_stamps must be strictly increasing"));
            }
            if stamps[n_azimuths - 1] - stamps[0] > scan_period {
                return Err(Error::invalid("azimuth_stamps span exceeds scan_period"));
            }
        }
        Ok(PolarScan {
            power,
            n_azimuths,
            n_range_bins,
            range_resolution,
            scan_period,
            stamp,
            azimuth_stamps,
        })
    }

    pub fn n_azimuths(&self) -> usize {
        self.n_azimuths
    }

    pub fn n_range_bins(&self) -> usize {
        self.n_range_bins
    }

    pub fn power_at(&self, azimuth: usize, range_bin: usize) -> f64 {
        self.power[azimuth * self.n_range_bins + range_bin]
    }

    pub fn row(&self, azimuth: usize) -> &[f64] {
        &self.power[azimuth * self.n_range_bins..(azimuth + 1) * self.n_range_bins]
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn max_power(&self) -> f64 {
        self.power.iter().cloned().fold(0.0, f64::max)
    }

    /// Maximum representable range in meters.
    pub fn max_range(&self) -> f64 {
        self.n_range_bins as f64 * self.range_resolution
    }

    /// Capture time of row `a` relative to the central beam, supporting a
    /// fractional azimuth index.
    pub fn beam_time_of_azimuth(&self, a: f64) -> f64 {
        let n = self.n_azimuths as f64;
        match &self.azimuth_stamps {
            None => (a - n / 2.0) / n * self.scan_period,
            Some(stamps) => {
                let center = stamps[self.n_azimuths / 2];
                let lo = a.floor().clamp(0.0, n - 1.0) as usize;
                let hi = (lo + 1).min(self.n_azimuths - 1);
                let frac = a - lo as f64;
                let t = if hi == lo {
                    stamps[lo]
                } else {
                    stamps[lo] * (1.0 - frac) + stamps[hi] * frac
                };
                t - center
            }
        }
    }
}

/// Interpolated grey-scale metric image.
#[derive(Debug, Clone)]
pub struct CartesianImage {
    intensity: Vec<f64>,
    width: usize,
    height: usize,
    /// Meters per pixel.
    pub resolution: f64,
    pub stamp: f64,
}

impl CartesianImage {
    pub fn new(intensity: Vec<f64>, width: usize, height: usize, resolution: f64, stamp: f64) -> Result<Self> {
        if width < 2 || height < 2 || width % 2 != 0 || height % 2 != 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be even and >= 2, got {width}x{height}"
            )));
        }
        if intensity.len() != width * height {
            return Err(Error::invalid("intensity length does not match dimensions"));
        }
        if resolution <= 0.0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        Ok(CartesianImage {
            intensity,
            width,
            height,
            resolution,
            stamp,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.intensity[v * self.width + u]
    }

    /// Bilinear sample at sub-pixel coordinates; clamps to the border.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
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
}

/// A detection on the polar grid; the range bin may be fractional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDetection {
    pub azimuth_index: usize,
    pub range_bin: f64,
}

impl PolarDetection {
    pub fn new(azimuth_index: usize, range_bin: f64) -> Self {
        PolarDetection {
            azimuth_index,
            range_bin,
        }
    }
}

/// Converts a polar detection to a metric point in the scan frame.
///
/// `theta = -a * 2*pi / n_azimuths`, so azimuth 0 points along +x and the
/// scan proceeds clockwise.
pub fn polar_point_to_metric(det: &PolarDetection, scan: &PolarScan) -> Result<Vector2<f64>> {
    if det.azimuth_index >= scan.n_azimuths
        || det.range_bin < 0.0
        || det.range_bin >= scan.n_range_bins as f64
    {
        return Err(Error::OutOfBounds {
            azimuth: det.azimuth_index,
            range_bin: det.range_bin,
            n_azimuths: scan.n_azimuths,
            n_range_bins: scan.n_range_bins,
        });
    }
    let theta = -(det.azimuth_index as f64) * 2.0 * std::f64::consts::PI / scan.n_azimuths as f64;
    let r = scan.range_resolution * det.range_bin;
    Ok(Vector2::new(r * theta.cos(), r * theta.sin()))
}

/// Maps a metric point in the scan frame to Cartesian pixel coordinates.
///
/// Range 0 lands exactly at the image center `(w/2, h/2)`:
/// `u = w/2 - y/mu_c`, `v = h/2 - x/mu_c`.
pub fn metric_to_pixel(p: &Vector2<f64>, img: &CartesianImage) -> (f64, f64) {
    let u = img.width as f64 / 2.0 - p.y / img.resolution;
    let v = img.height as f64 / 2.0 - p.x / img.resolution;
    (u, v)
}

/// Inverse of [`metric_to_pixel`].
pub fn pixel_to_metric(u: f64, v: f64, img: &CartesianImage) -> Vector2<f64> {
    Vector2::new(
        (img.height as f64 / 2.0 - v) * img.resolution,
        (img.width as f64 / 2.0 - u) * img.resolution,
    )
}

/// Interpolates a polar scan into a metric Cartesian image.
///
/// Each output pixel samples the polar grid bilinearly at its
/// back-projected `(azimuth, range)` coordinates. Azimuth interpolation
/// wraps modulo `n_azimuths`. Pixels beyond `max_range_m` (or the scan's
/// own range extent) and inside range bin 0 are zero.
pub fn polar_to_cartesian(
    scan: &PolarScan,
    width: usize,
    height: usize,
    resolution: f64,
    max_range_m: f64,
) -> Result<CartesianImage> {
    let mut img = CartesianImage::new(vec![0.0; width * height], width, height, resolution, scan.stamp)?;
    let n_az = scan.n_azimuths as f64;
    let max_r = max_range_m.min(scan.max_range());
    for v in 0..height {
        for u in 0..width {
            let p = pixel_to_metric(u as f64, v as f64, &img);
            let r_m = p.norm();
            let r_bin = r_m / scan.range_resolution;
            if r_m > max_r || r_bin < 1.0 || r_bin > (scan.n_range_bins - 1) as f64 {
                continue;
            }
            let theta = p.y.atan2(p.x);
            let a = (-theta * n_az / (2.0 * std::f64::consts::PI)).rem_euclid(n_az);
            let a0 = a.floor() as usize % scan.n_azimuths;
            let a1 = (a0 + 1) % scan.n_azimuths;
            let fa = a - a.floor();
            let r0 = r_bin.floor() as usize;
            let r1 = (r0 + 1).min(scan.n_range_bins - 1);
            let fr = r_bin - r0 as f64;
            let low = scan.power_at(a0, r0) * (1.0 - fr) + scan.power_at(a0, r1) * fr;
            let high = scan.power_at(a1, r0) * (1.0 - fr) + scan.power_at(a1, r1) * fr;
            img.intensity[v * width + u] = low * (1.0 - fa) + high * fa;
        }
    }
    Ok(img)
}

/// Recovers the capture time of the beam that produced a Cartesian pixel,
/// relative to the central beam at `t = 0`.
pub fn pixel_beam_time(u: f64, v: f64, img: &CartesianImage, scan: &PolarScan) -> Result<f64> {
    let p = pixel_to_metric(u, v, img);
    if p.norm() < 1e-12 {
        return Err(Error::DegenerateAzimuth);
    }
    let theta = p.y.atan2(p.x);
    let n_az = scan.n_azimuths as f64;
    let a = (-theta * n_az / (2.0 * std::f64::consts::PI)).rem_euclid(n_az);
    Ok(scan.beam_time_of_azimuth(a))
}

/// Default even image side length covering `max_range` at `resolution`.
pub fn default_image_side(max_range: f64, resolution: f64) -> usize {
    let side = 2 * (max_range / resolution).ceil() as usize;
    if side % 2 == 0 {
        side
    } else {
        side + 1
    }
}

/// Simulator/pipeline helper: pose of the sensor within a scan, not used by
/// the geometry ops themselves but shared between the simulator and tests.
pub fn beam_time_linear(a: usize, n_azimuths: usize, scan_period: f64) -> f64 {
    (a as f64 - n_azimuths as f64 / 2.0) / n_azimuths as f64 * scan_period
}
