//! Binary polar-scan files and sequence manifests.
//!
//! One scan per file, little-endian: magic `RPS1`, `u32` n_azimuths,
//! `u32` n_range_bins, `f64` range_resolution_m, `f64` scan_period_s,
//! `f64` stamp_s, `u8` has_azimuth_stamps, optional `f64` azimuth stamps,
//! then the row-major `u8` power grid. A sequence is a directory of such
//! files plus a plain-text `manifest.txt` listing filenames in time order.

use super::PolarScan;
use crate::{Error, Result};
use std::io::Read;
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 4] = b"RPS1";

/// Name of the per-directory manifest file.
pub const MANIFEST_NAME: &str = "manifest.txt";

pub fn write_scan(scan: &PolarScan, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(4 + 8 + 24 + 1 + scan.power().len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(scan.n_azimuths() as u32).to_le_bytes());
    buf.extend_from_slice(&(scan.n_range_bins() as u32).to_le_bytes());
    buf.extend_from_slice(&scan.range_resolution.to_le_bytes());
    buf.extend_from_slice(&scan.scan_period.to_le_bytes());
    buf.extend_from_slice(&scan.stamp.to_le_bytes());
    match &scan.azimuth_stamps {
        Some(stamps) => {
            buf.push(1);
            for s in stamps {
                buf.extend_from_slice(&s.to_le_bytes());
            }
        }
        None => buf.push(0),
    }
    for p in scan.power() {
        buf.push(p.round().clamp(0.0, 255.0) as u8);
    }
    std::fs::write(path, &buf).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_scan(path: &Path) -> Result<PolarScan> {
    let name = path.display().to_string();
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(&name, e))?;
    let mut data = Vec::new();
    file.read_to_end(&mut data).map_err(|e| Error::io(&name, e))?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8]> {
        if *cursor + n > data.len() {
            return Err(Error::format(&name, "truncated scan file"));
        }
        let slice = &data[*cursor..*cursor + n];
        *cursor += n;
        Ok(slice)
    };
    if take(&mut cursor, 4)? != MAGIC {
        return Err(Error::format(&name, "bad magic, expected RPS1"));
    }
    let n_azimuths = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let n_range_bins = u32::from_le_bytes(take(&mut cursor, 4)?.try_into().unwrap()) as usize;
    let range_resolution = f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    let scan_period = f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    let stamp = f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    let has_stamps = take(&mut cursor, 1)?[0];
    let azimuth_stamps = if has_stamps != 0 {
        let mut stamps = Vec::with_capacity(n_azimuths);
        for _ in 0..n_azimuths {
            stamps.push(f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()));
        }
        Some(stamps)
    } else {
        None
    };
    let grid = take(&mut cursor, n_azimuths * n_range_bins)?;
    let power: Vec<f64> = grid.iter().map(|&b| b as f64).collect();
    if cursor != data.len() {
        return Err(Error::format(&name, "trailing bytes after power grid"));
    }
    PolarScan::new(
        power,
        n_azimuths,
        n_range_bins,
        range_resolution,
        scan_period,
        stamp,
        azimuth_stamps,
    )
    .map_err(|e| Error::format(&name, e.to_string()))
}

pub fn write_manifest(dir: &Path, filenames: &[String]) -> Result<()> {
    let path = dir.join(MANIFEST_NAME);
    let body = filenames.join("\n") + if filenames.is_empty() { "" } else { "\n" };
    std::fs::write(&path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads the manifest and returns scan file paths in time order.
pub fn read_manifest(dir: &Path) -> Result<Vec<PathBuf>> {
    let path = dir.join(MANIFEST_NAME);
    let body = std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| dir.join(l))
        .collect())
}

/// Writes a sequence directory: numbered scan files plus the manifest.
pub fn write_sequence(dir: &Path, scans: &[PolarScan]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut names = Vec::with_capacity(scans.len());
    for (i, scan) in scans.iter().enumerate() {
        let name = format!("scan_{i:06}.rps");
        write_scan(scan, &dir.join(&name))?;
        names.push(name);
    }
    write_manifest(dir, &names)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_scan(with_stamps: bool) -> PolarScan {
        let n_az = 8;
        let n_bins = 16;
        let power: Vec<f64> = (0..n_az * n_bins).map(|i| (i % 256) as f64).collect();
        let stamps = with_stamps.then(|| (0..n_az).map(|i| 5.0 + 0.03 * i as f64).collect());
        PolarScan::new(power, n_az, n_bins, 0.0438, 0.25, 5.12, stamps).unwrap()
    }

    #[test]
    fn scan_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for with_stamps in [false, true] {
            let scan = sample_scan(with_stamps);
            let path = dir.path().join("s.rps");
            write_scan(&scan, &path).unwrap();
            let back = read_scan(&path).unwrap();
            assert_eq!(back.n_azimuths(), scan.n_azimuths());
            assert_eq!(back.n_range_bins(), scan.n_range_bins());
            assert_eq!(back.power(), scan.power());
            assert_eq!(back.range_resolution, scan.range_resolution);
            assert_eq!(back.scan_period, scan.scan_period);
            assert_eq!(back.stamp, scan.stamp);
            assert_eq!(back.azimuth_stamps, scan.azimuth_stamps);
        }
    }

    #[test]
    fn corrupted_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.rps");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(read_scan(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let scan = sample_scan(false);
        let path = dir.path().join("t.rps");
        write_scan(&scan, &path).unwrap();
        let data = std::fs::read(&path).unwrap();
        std::fs::write(&path, &data[..data.len() - 10]).unwrap();
        assert!(matches!(read_scan(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn sequence_and_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let scans = vec![sample_scan(false), sample_scan(true)];
        write_sequence(dir.path(), &scans).unwrap();
        let paths = read_manifest(dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        for p in &paths {
            read_scan(p).unwrap();
        }
    }
}
