//! Fur hit analysis on grayscale frame sequences.
//!
//! Camera frames are rectified into the generator's view with a homography,
//! the ring's footprint is found by background subtraction, and the fur
//! sheet by an intensity band. The gap between the two centroids, scaled to
//! millimetres, is the aiming error of one shot.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities.
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width * height != pixels.len() {
            return Err(Error::invalid(format!(
                "{width}x{height} frame needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Bilinear sample; `None` outside the frame.
    fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.width as f64, self.height as f64);
        if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
            return None;
        }
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let p = |xx, yy| f64::from(self.get(xx, yy));
        let top = p(x0, y0) + fx * (p(x1, y0) - p(x0, y0));
        let bottom = p(x0, y1) + fx * (p(x1, y1) - p(x0, y1));
        Some(top + fy * (bottom - top))
    }
}

/// Binary P5 PGM with 8-bit samples.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    decode_pgm(&bytes).map_err(|e| match e {
        Error::InvalidParameter(msg) => Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: msg,
        },
        other => other,
    })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::invalid("truncated PGM header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::invalid("not a binary PGM (P5) file"));
    }
    let mut number = |what: &str| -> Result<usize> {
        let t = token()?;
        t.parse()
            .map_err(|_| Error::invalid(format!("bad PGM {what}: {t:?}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::invalid(format!("unsupported PGM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let data_start = pos + 1;
    let needed = width * height;
    if bytes.len() < data_start + needed {
        return Err(Error::invalid("truncated PGM raster"));
    }
    Frame::new(
        width,
        height,
        bytes[data_start..data_start + needed].to_vec(),
    )
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn write_pgm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(frame)).map_err(|e| Error::file(path, e))
}

/// Projective map of the plane, scaled so the bottom-right entry is 1
/// whenever it is non-zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    pub matrix: Matrix3<f64>,
}

impl Homography {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::DegenerateGeometry("non-finite homography".into()));
        }
        if matrix.norm() == 0.0 {
            return Err(Error::DegenerateGeometry("homography is zero".into()));
        }
        let scale = if matrix[(2, 2)].abs() > 1e-15 {
            matrix[(2, 2)]
        } else {
            matrix.norm()
        };
        let matrix = matrix / scale;
        if matrix.determinant().abs() <= 1e-12 {
            return Err(Error::DegenerateGeometry("homography is singular".into()));
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            matrix: Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .matrix
            .try_inverse()
            .ok_or_else(|| Error::DegenerateGeometry("homography is not invertible".into()))?;
        Self::new(inv)
    }

    pub fn apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let v = self.matrix * Vector3::new(p[0], p[1], 1.0);
        if v.z.abs() < 1e-15 {
            return None;
        }
        Some([v.x / v.z, v.y / v.z])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub src: [f64; 2],
    pub dst: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographyFit {
    pub homography: Homography,
    pub rms_px: f64,
}

/// Translate to the centroid and scale to mean distance √2.
fn normalizer(points: &[[f64; 2]]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean = points
        .iter()
        .map(|p| (p[0] - cx).hypot(p[1] - cy))
        .sum::<f64>()
        / n;
    if mean.is_nan() || mean <= 1e-12 {
        return Err(Error::DegenerateGeometry("all points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Ok(Matrix3::new(
        s,
        0.0,
        -s * cx,
        0.0,
        s,
        -s * cy,
        0.0,
        0.0,
        1.0,
    ))
}

fn has_collinear_triple(points: &[[f64; 2]]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cross = u[0] * v[1] - u[1] * v[0];
                let scale = u[0].hypot(u[1]) * v[0].hypot(v[1]);
                if cross.abs() <= 1e-9 * scale || scale == 0.0 {
                    return true;
                }
            }
        }
    }
    false
}

/// Normalised direct linear transform from point pairs, `dst ~ H · src`.
pub fn estimate_homography(pairs: &[Correspondence]) -> Result<HomographyFit> {
    if pairs.len() < 4 {
        return Err(Error::invalid(format!(
            "need at least 4 correspondences, got {}",
            pairs.len()
        )));
    }
    let src: Vec<[f64; 2]> = pairs.iter().map(|c| c.src).collect();
    let dst: Vec<[f64; 2]> = pairs.iter().map(|c| c.dst).collect();
    if !src.iter().chain(&dst).flatten().all(|v| v.is_finite()) {
        return Err(Error::invalid("non-finite correspondence"));
    }
    if pairs.len() == 4 && (has_collinear_triple(&src) || has_collinear_triple(&dst)) {
        return Err(Error::DegenerateGeometry(
            "three of the four points are collinear".into(),
        ));
    }
    let t_src = normalizer(&src)?;
    let t_dst = normalizer(&dst)?;

    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, c) in pairs.iter().enumerate() {
        let p = t_src * Vector3::new(c.src[0], c.src[1], 1.0);
        let q = t_dst * Vector3::new(c.dst[0], c.dst[1], 1.0);
        let (x, y, u, v) = (p.x, p.y, q.x, q.y);
        let r = 2 * i;
        a.row_mut(r)
            .copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }

    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::DegenerateGeometry("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let (smallest, second) = (order[0], order[1]);
    let largest = svd.singular_values[order[order.len() - 1]];
    if svd.singular_values[second] <= 1e-10 * largest {
        return Err(Error::DegenerateGeometry(
            "correspondences do not determine a unique homography".into(),
        ));
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| Error::DegenerateGeometry("normalisation failed".into()))?;
    let homography = Homography::new(t_dst_inv * hn * t_src)?;

    let mut sq = 0.0;
    for c in pairs {
        let p = homography
            .apply(c.src)
            .ok_or_else(|| Error::DegenerateGeometry("point maps to infinity".into()))?;
        sq += (p[0] - c.dst[0]).powi(2) + (p[1] - c.dst[1]).powi(2);
    }
    Ok(HomographyFit {
        homography,
        rms_px: (sq / pairs.len() as f64).sqrt(),
    })
}

/// Resamples `frame` through `h` onto a frame of the same size.
pub fn warp(frame: &Frame, h: &Homography) -> Result<Frame> {
    warp_to(frame, h, frame.width, frame.height)
}

/// Inverse-maps every output pixel through `h⁻¹` with bilinear
/// interpolation. Pixels that land outside the source are 0.
pub fn warp_to(frame: &Frame, h: &Homography, width: usize, height: usize) -> Result<Frame> {
    let inv = h.inverse()?;
    let mut out = Frame::filled(width, height, 0);
    for y in 0..height {
        for x in 0..width {
            if let Some(v) = inv
                .apply([x as f64, y as f64])
                .and_then(|[sx, sy]| frame.sample(sx, sy))
            {
                out.set(x, y, v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Pixels whose intensity differs from the background by more than
/// `threshold`.
pub fn background_subtract(frame: &Frame, background: &Frame, threshold: u8) -> Result<Mask> {
    if frame.width != background.width || frame.height != background.height {
        return Err(Error::invalid(format!(
            "frame is {}x{} but background is {}x{}",
            frame.width, frame.height, background.width, background.height
        )));
    }
    let bits = frame
        .pixels
        .iter()
        .zip(&background.pixels)
        .map(|(&f, &b)| f.abs_diff(b) > threshold)
        .collect();
    Ok(Mask {
        width: frame.width,
        height: frame.height,
        bits,
    })
}

/// Pixels with intensity in `[lo, hi]`.
pub fn intensity_band(frame: &Frame, lo: u8, hi: u8) -> Mask {
    Mask {
        width: frame.width,
        height: frame.height,
        bits: frame
            .pixels
            .iter()
            .map(|&p| (lo..=hi).contains(&p))
            .collect(),
    }
}

/// Mean of the set pixel coordinates; `None` for an empty mask.
pub fn centroid(mask: &Mask) -> Option<[f64; 2]> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (i, _) in mask.bits.iter().enumerate().filter(|(_, &b)| b) {
        sx += (i % mask.width) as f64;
        sy += (i / mask.width) as f64;
        n += 1;
    }
    (n > 0).then(|| [sx / n as f64, sy / n as f64])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCalibration {
    pub mm_per_pixel: f64,
}

impl ScaleCalibration {
    pub fn new(mm_per_pixel: f64) -> Result<Self> {
        require_positive("mm per pixel", mm_per_pixel)?;
        Ok(Self { mm_per_pixel })
    }

    /// Scale from a known physical extent spanning `pixels`.
    pub fn from_extent(extent_mm: f64, pixels: f64) -> Result<Self> {
        require_positive("extent", extent_mm)?;
        require_positive("pixel span", pixels)?;
        Self::new(extent_mm / pixels)
    }
}

/// Distance between the two centroids in millimetres, or `None` when
/// either is absent.
pub fn measure_gap(
    hit: Option<[f64; 2]>,
    target: Option<[f64; 2]>,
    cal: &ScaleCalibration,
) -> Option<f64> {
    let (h, t) = (hit?, target?);
    Some((h[0] - t[0]).hypot(h[1] - t[1]) * cal.mm_per_pixel)
}

/// Run description for a directory of frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurScanManifest {
    pub background: String,
    /// Defaults to every other `.pgm` in the directory, sorted by name.
    #[serde(default)]
    pub frames: Option<Vec<String>>,
    /// Camera pixel → rectified pixel.
    pub correspondences: Vec<Correspondence>,
    pub threshold: u8,
    pub mm_per_pixel: f64,
    /// Intensity band of the fur sheet in the rectified background.
    pub fur_band: [u8; 2],
    /// Rectified frame size; defaults to the camera frame size.
    #[serde(default)]
    pub output_size: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub frame: String,
    pub hit_px: Option<[f64; 2]>,
    pub gap_mm: Option<f64>,
}

impl FrameReport {
    /// `frame,hit_x_px,hit_y_px,gap_mm`, with `NA` for missing values.
    pub fn line(&self) -> String {
        let (x, y) = match self.hit_px {
            Some([x, y]) => (format!("{x:.3}"), format!("{y:.3}")),
            None => ("NA".into(), "NA".into()),
        };
        let gap = self
            .gap_mm
            .map_or_else(|| "NA".to_string(), |g| format!("{g:.3}"));
        format!("{},{x},{y},{gap}", self.frame)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FurScanReport {
    pub homography_rms_px: f64,
    pub target_px: Option<[f64; 2]>,
    pub frames: Vec<FrameReport>,
}

/// Rectifies the background and every frame, then measures each frame's
/// hit against the fur centre. Reports keep the input frame order.
pub fn analyze_sequence(
    manifest: &FurScanManifest,
    background: &Frame,
    frames: &[(String, Frame)],
) -> Result<FurScanReport> {
    let cal = ScaleCalibration::new(manifest.mm_per_pixel)?;
    let fit = estimate_homography(&manifest.correspondences)?;
    let [w, h] = manifest
        .output_size
        .unwrap_or([background.width, background.height]);
    let rect_bg = warp_to(background, &fit.homography, w, h)?;
    let target = centroid(&intensity_band(
        &rect_bg,
        manifest.fur_band[0],
        manifest.fur_band[1],
    ));

    let reports = frames
        .iter()
        .map(|(name, frame)| {
            let rect = warp_to(frame, &fit.homography, w, h)?;
            let hit = centroid(&background_subtract(&rect, &rect_bg, manifest.threshold)?);
            Ok(FrameReport {
                frame: name.clone(),
                hit_px: hit,
                gap_mm: measure_gap(hit, target, &cal),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FurScanReport {
        homography_rms_px: fit.rms_px,
        target_px: target,
        frames: reports,
    })
}

/// Loads a manifest and its frames from disk and analyses them.
pub fn run_furscan(manifest_path: impl AsRef<Path>) -> Result<FurScanReport> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::file(manifest_path, e))?;
    let manifest: FurScanManifest = serde_json::from_str(&text)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let background = read_pgm(dir.join(&manifest.background))?;

    let names = match &manifest.frames {
        Some(list) => list.clone(),
        None => {
            let mut names: Vec<String> = std::fs::read_dir(dir)
                .map_err(|e| Error::file(dir, e))?
                .filter_map(|entry| entry.ok())
                .map(|entry| entry.path())
                .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .filter(|n| *n != manifest.background)
                .collect();
            names.sort();
            names
        }
    };
    let frames = names
        .into_iter()
        .map(|n| {
            let path: PathBuf = dir.join(&n);
            read_pgm(&path).map(|f| (n, f))
        })
        .collect::<Result<Vec<_>>>()?;
    analyze_sequence(&manifest, &background, &frames)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn square_pairs(h: &Matrix3<f64>) -> Vec<Correspondence> {
        [[0.0, 0.0], [100.0, 0.0], [100.0, 100.0], [0.0, 100.0]]
            .into_iter()
            .map(|p| {
                let v = h * Vector3::new(p[0], p[1], 1.0);
                Correspondence {
                    src: p,
                    dst: [v.x / v.z, v.y / v.z],
                }
            })
            .collect()
    }

    fn gradient_frame(w: usize, h: usize) -> Frame {
        let mut f = Frame::filled(w, h, 0);
        for y in 0..h {
            for x in 0..w {
                f.set(x, y, ((x * 7 + y * 3) % 256) as u8);
            }
        }
        f
    }

    #[test]
    fn square_to_itself_is_identity() {
        let fit = estimate_homography(&square_pairs(&Matrix3::identity())).unwrap();
        assert!((fit.homography.matrix - Matrix3::identity()).abs().max() < 1e-9);
        assert!(fit.rms_px < 1e-9);
    }

    #[test]
    fn recovers_projective_warp() {
        let truth = Matrix3::new(1.1, 0.05, 12.0, -0.03, 0.95, 7.0, 1e-4, -2e-4, 1.0);
        let fit = estimate_homography(&square_pairs(&truth)).unwrap();
        assert!((fit.homography.matrix - truth).abs().max() < 1e-9);
        assert!(fit.rms_px < 1e-6);
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let pairs: Vec<Correspondence> = [[0.0, 0.0], [50.0, 0.0], [100.0, 0.0], [0.0, 100.0]]
            .into_iter()
            .map(|p| Correspondence { src: p, dst: p })
            .collect();
        assert!(matches!(
            estimate_homography(&pairs),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(estimate_homography(&pairs[..3]).is_err());
    }

    #[test]
    fn identity_warp_is_exact() {
        let f = gradient_frame(31, 17);
        assert_eq!(warp(&f, &Homography::identity()).unwrap(), f);
    }

    #[test]
    fn integer_translation_shifts_pixels() {
        let f = gradient_frame(40, 30);
        let out = warp(&f, &Homography::translation(5.0, -3.0)).unwrap();
        for y in 0..27 {
            for x in 5..40 {
                assert_eq!(out.get(x, y), f.get(x - 5, y + 3));
            }
        }
        assert_eq!(out.get(0, 0), 0);
    }

    #[test]
    fn singular_homography_is_rejected() {
        assert!(Homography::new(Matrix3::zeros()).is_err());
        let m = Matrix3::new(1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0);
        assert!(Homography::new(m).is_err());
    }

    #[test]
    fn subtraction_cases() {
        let bg = Frame::filled(64, 64, 100);
        assert_eq!(background_subtract(&bg, &bg, 0).unwrap().count(), 0);

        let mut f = bg.clone();
        for y in 10..30 {
            for x in 20..40 {
                f.set(x, y, 150);
            }
        }
        let m = background_subtract(&f, &bg, 25).unwrap();
        assert_eq!(m.count(), 400);
        for y in 0..64 {
            for x in 0..64 {
                let inside = (20..40).contains(&x) && (10..30).contains(&y);
                assert_eq!(m.bits[y * 64 + x], inside);
            }
        }
        assert_eq!(centroid(&m), Some([29.5, 19.5]));
        assert_eq!(background_subtract(&f, &bg, 255).unwrap().count(), 0);
        assert!(background_subtract(&f, &Frame::filled(63, 64, 0), 1).is_err());
    }

    #[test]
    fn centroid_cases() {
        let mut m = Mask {
            width: 30,
            height: 30,
            bits: vec![false; 900],
        };
        assert_eq!(centroid(&m), None);
        m.bits[20 * 30 + 10] = true;
        assert_eq!(centroid(&m), Some([10.0, 20.0]));
    }

    #[test]
    fn gap_cases() {
        let cal = ScaleCalibration::new(1.0).unwrap();
        assert_eq!(
            measure_gap(Some([3.0, 4.0]), Some([3.0, 4.0]), &cal),
            Some(0.0)
        );
        assert_eq!(
            measure_gap(Some([0.0, 0.0]), Some([100.0, 0.0]), &cal),
            Some(100.0)
        );
        assert_eq!(measure_gap(None, Some([1.0, 1.0]), &cal), None);
        let fur = ScaleCalibration::from_extent(800.0, 200.0).unwrap();
        assert_eq!(fur.mm_per_pixel, 4.0);
    }

    #[test]
    fn pgm_round_trip_and_errors() {
        let f = gradient_frame(9, 4);
        assert_eq!(decode_pgm(&encode_pgm(&f)).unwrap(), f);
        let with_comment = b"P5\n# made by hand\n2 1\n255\n\x01\x02";
        assert_eq!(decode_pgm(with_comment).unwrap().pixels, vec![1, 2]);
        assert!(decode_pgm(b"P2\n1 1\n255\n1").is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }

    #[test]
    fn report_line_format() {
        let r = FrameReport {
            frame: "f01.pgm".into(),
            hit_px: Some([10.0, 20.5]),
            gap_mm: Some(42.0),
        };
        assert_eq!(r.line(), "f01.pgm,10.000,20.500,42.000");
        let na = FrameReport {
            frame: "f02.pgm".into(),
            hit_px: None,
            gap_mm: None,
        };
        assert_eq!(na.line(), "f02.pgm,NA,NA,NA");
    }

    proptest! {
        #[test]
        fn centroid_translation_equivariant(
            pts in proptest::collection::vec((0usize..20, 0usize..20), 1..40),
            dx in 0usize..10,
            dy in 0usize..10,
        ) {
            let mut a = Mask { width: 30, height: 30, bits: vec![false; 900] };
            let mut b = a.clone();
            for (x, y) in pts {
                a.bits[y * 30 + x] = true;
                b.bits[(y + dy) * 30 + x + dx] = true;
            }
            let ca = centroid(&a).unwrap();
            let cb = centroid(&b).unwrap();
            prop_assert!((cb[0] - ca[0] - dx as f64).abs() < 1e-9);
            prop_assert!((cb[1] - ca[1] - dy as f64).abs() < 1e-9);
        }
    }
}
