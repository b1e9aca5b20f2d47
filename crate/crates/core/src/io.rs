//! File formats: KITTI velodyne scans and calibration, Stixel CSV, the SXHM
//! heat-map blob and PPM overlays.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::scalar::{lit, to_f64, Real};
use crate::types::{
    orthonormality_error, Calibration, CameraIntrinsics, Extrinsics, Frame, Grid, GridSpec, HeatmapPair,
    InvariantError, Point3, PointCloud, Stixel, StixelType, StixelWorld,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("truncated file: {0} bytes")]
    TruncatedFile(usize),
    #[error("missing key {0}")]
    MissingKey(String),
    #[error("malformed matrix {key}: {reason}")]
    MalformedMatrix { key: String, reason: String },
    #[error("parse error on line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("bad magic number")]
    BadMagic,
    #[error("unsupported version {0}")]
    VersionUnsupported(u32),
    #[error("{0} unexpected trailing bytes")]
    TrailingData(usize),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("image is {got:?}, expected {expected:?}")]
    DimensionMismatch { expected: (u32, u32), got: (u32, u32) },
    #[error("invalid frame id {0:?}")]
    InvalidFrameId(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

// ---------------------------------------------------------------- velodyne

/// Parses `x y z intensity` little-endian `f32` quadruples; intensity is
/// dropped.
pub fn read_kitti_velodyne<T: Real>(bytes: &[u8]) -> Result<PointCloud<T>, IoError> {
    if !bytes.len().is_multiple_of(16) {
        return Err(IoError::TruncatedFile(bytes.len()));
    }
    let f = |b: &[u8]| T::from_f32(f32::from_le_bytes([b[0], b[1], b[2], b[3]])).unwrap_or_else(T::nan);
    let points = bytes
        .chunks_exact(16)
        .map(|c| Point3::new(f(&c[0..4]), f(&c[4..8]), f(&c[8..12])))
        .collect();
    Ok(PointCloud::new(points, Frame::Sensor)?)
}

/// Writes a scan with zero intensity. Coordinates are stored as `f32`.
pub fn write_kitti_velodyne<T: Real>(pc: &PointCloud<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(pc.len() * 16);
    for p in pc.points() {
        for v in [p.x, p.y, p.z] {
            out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
        out.extend_from_slice(&0f32.to_le_bytes());
    }
    out
}

// ---------------------------------------------------------------- calibration

fn calib_values<T: Real>(map: &HashMap<String, String>, key: &str, count: usize) -> Result<Vec<T>, IoError> {
    let raw = map.get(key).ok_or_else(|| IoError::MissingKey(key.to_string()))?;
    let malformed = |reason: String| IoError::MalformedMatrix {
        key: key.to_string(),
        reason,
    };
    let vals = raw
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| malformed(format!("bad number {t:?}"))))
        .collect::<Result<Vec<T>, _>>()?;
    if vals.len() != count {
        return Err(malformed(format!("expected {count} numbers, found {}", vals.len())));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(malformed("non-finite entry".into()));
    }
    Ok(vals)
}

fn mat3_mul<T: Real>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn is_identity<T: Real>(m: &[[T; 3]; 3]) -> bool {
    (0..3).all(|i| (0..3).all(|j| m[i][j] == if i == j { T::one() } else { T::zero() }))
}

/// Nearest rotation by Newton iteration on the polar decomposition.
fn orthonormalize<T: Real>(mut r: [[T; 3]; 3]) -> Option<[[T; 3]; 3]> {
    let half: T = lit(0.5);
    for _ in 0..8 {
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if det.abs() <= lit(1e-12) {
            return None;
        }
        // Cofactor matrix / det is the inverse transpose.
        let cof = |a: usize, b: usize, c: usize, d: usize| r[a][b] * r[c][d] - r[a][d] * r[c][b];
        let inv_t = [
            [cof(1, 1, 2, 2), -cof(1, 0, 2, 2), cof(1, 0, 2, 1)],
            [-cof(0, 1, 2, 2), cof(0, 0, 2, 2), -cof(0, 0, 2, 1)],
            [cof(0, 1, 1, 2), -cof(0, 0, 1, 2), cof(0, 0, 1, 1)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = half * (r[i][j] + inv_t[i][j] / det);
            }
        }
    }
    Some(r)
}

/// Reads a KITTI calibration file (`P2`, `R0_rect`, `Tr_velo_to_cam`).
///
/// The image size comes from an optional `S_rect_02: W H` entry, else from
/// `fallback_size`. Rotations printed with few digits are snapped to the
/// nearest rotation when they are off by at most 1e-4. A nonzero fourth
/// column of `P2` (the offset of camera 2 from the reference camera) is
/// folded into the translation.
pub fn read_kitti_calib<T: Real>(text: &str, fallback_size: Option<(u32, u32)>) -> Result<Calibration<T>, IoError> {
    let mut map = HashMap::new();
    for line in text.lines() {
        if let Some((k, v)) = line.split_once(':') {
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let p2 = calib_values::<T>(&map, "P2", 12)?;
    let r0 = calib_values::<T>(&map, "R0_rect", 9)?;
    let tr = calib_values::<T>(&map, "Tr_velo_to_cam", 12)?;
    let (width, height) = match map.get("S_rect_02") {
        Some(_) => {
            let s = calib_values::<f64>(&map, "S_rect_02", 2)?;
            let dim = |v: f64| {
                (v >= 1.0 && v <= f64::from(u32::MAX) && v.fract() == 0.0)
                    .then_some(v as u32)
                    .ok_or_else(|| IoError::MalformedMatrix {
                        key: "S_rect_02".into(),
                        reason: format!("bad image size {v}"),
                    })
            };
            (dim(s[0])?, dim(s[1])?)
        }
        None => fallback_size.ok_or_else(|| IoError::MissingKey("S_rect_02".into()))?,
    };
    let (fx, cx, fy, cy) = (p2[0], p2[2], p2[5], p2[6]);
    let intr = CameraIntrinsics::new(fx, fy, cx, cy, width, height)?;

    let r0m = [[r0[0], r0[1], r0[2]], [r0[3], r0[4], r0[5]], [r0[6], r0[7], r0[8]]];
    let trm = [[tr[0], tr[1], tr[2]], [tr[4], tr[5], tr[6]], [tr[8], tr[9], tr[10]]];
    let trt = Point3::new(tr[3], tr[7], tr[11]);
    let (mut rot, mut t) = if is_identity(&r0m) {
        (trm, trt)
    } else {
        let rot = mat3_mul(&r0m, &trm);
        let rt = |i: usize| r0m[i][0] * trt.x + r0m[i][1] * trt.y + r0m[i][2] * trt.z;
        (rot, Point3::new(rt(0), rt(1), rt(2)))
    };
    let (tx, ty, tz) = (p2[3], p2[7], p2[11]);
    if tx != T::zero() || ty != T::zero() || tz != T::zero() {
        let bx = (tx - cx * tz) / fx;
        let by = (ty - cy * tz) / fy;
        t = t + Point3::new(bx, by, tz);
    }
    let err = to_f64(orthonormality_error(&rot));
    let tol = (16.0 * to_f64(T::epsilon())).max(1e-9);
    if err > tol {
        if err > 1e-4 {
            return Err(IoError::MalformedMatrix {
                key: "Tr_velo_to_cam".into(),
                reason: format!("rotation is not orthonormal (error {err:e})"),
            });
        }
        rot = orthonormalize(rot).ok_or_else(|| IoError::MalformedMatrix {
            key: "Tr_velo_to_cam".into(),
            reason: "singular rotation".into(),
        })?;
    }
    Ok(Calibration {
        intrinsics: intr,
        extrinsics: Extrinsics::new(rot, t)?,
    })
}

/// Writes a calibration that [`read_kitti_calib`] reads back exactly.
pub fn write_kitti_calib<T: Real>(calib: &Calibration<T>) -> String {
    let i = &calib.intrinsics;
    let r = calib.extrinsics.rotation();
    let t = calib.extrinsics.translation();
    let z = T::zero();
    let o = T::one();
    let join = |v: &[T]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    let _ = writeln!(s, "P2: {}", join(&[i.fx, z, i.cx, z, z, i.fy, i.cy, z, z, z, o, z]));
    let _ = writeln!(s, "R0_rect: {}", join(&[o, z, z, z, o, z, z, z, o]));
    let _ = writeln!(
        s,
        "Tr_velo_to_cam: {}",
        join(&[r[0][0], r[0][1], r[0][2], t.x, r[1][0], r[1][1], r[1][2], t.y, r[2][0], r[2][1], r[2][2], t.z])
    );
    let _ = writeln!(s, "S_rect_02: {} {}", i.width, i.height);
    s
}

// ---------------------------------------------------------------- stixel csv

pub const STIXEL_CSV_HEADER: &str = "frame,column,vT,vB,type,distance";

/// One line per Stixel; absent distances are written as `-1`.
pub fn write_stixel_csv<T: Real>(frame_id: &str, world: &StixelWorld<T>) -> Result<String, IoError> {
    if frame_id.contains([',', '\n', '\r']) {
        return Err(IoError::InvalidFrameId(frame_id.to_string()));
    }
    let mut s = String::with_capacity(32 * (world.len() + 1));
    s.push_str(STIXEL_CSV_HEADER);
    s.push('\n');
    for st in world.stixels() {
        let d = st.distance().map_or_else(|| "-1".to_string(), |d| d.to_string());
        let _ = writeln!(
            s,
            "{frame_id},{},{},{},{},{d}",
            st.column(),
            st.v_top(),
            st.v_bottom(),
            st.kind().code()
        );
    }
    Ok(s)
}

/// Parsed Stixel CSV: the frame id of its records (empty when there are none)
/// and the world on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct StixelCsv<T> {
    pub frame_id: String,
    pub world: StixelWorld<T>,
}

pub fn read_stixel_csv<T: Real>(text: &str, grid: &GridSpec) -> Result<StixelCsv<T>, IoError> {
    let mut lines = text.lines().enumerate();
    let perr = |line: usize, message: String| IoError::ParseError {
        line: line + 1,
        message,
    };
    match lines.next() {
        Some((_, h)) if h.trim_end() == STIXEL_CSV_HEADER => {}
        Some((n, h)) => return Err(perr(n, format!("expected header, found {h:?}"))),
        None => return Err(perr(0, "empty file".into())),
    }
    let mut frame_id: Option<String> = None;
    let mut stixels = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(perr(n, format!("expected 6 fields, found {}", f.len())));
        }
        match &frame_id {
            None => frame_id = Some(f[0].to_string()),
            Some(id) if id != f[0] => return Err(perr(n, format!("frame {:?} differs from {id:?}", f[0]))),
            _ => {}
        }
        let int = |k: usize, name: &str| {
            f[k].parse::<u32>()
                .map_err(|_| perr(n, format!("bad {name} {:?}", f[k])))
        };
        let column = int(1, "column")?;
        let v_top = int(2, "vT")?;
        let v_bottom = int(3, "vB")?;
        let kind = StixelType::from_code(f[4]).ok_or_else(|| perr(n, format!("bad type {:?}", f[4])))?;
        let distance = if f[5] == "-1" {
            None
        } else {
            let d = f[5]
                .parse::<T>()
                .map_err(|_| perr(n, format!("bad distance {:?}", f[5])))?;
            if !d.is_finite() || d < T::zero() {
                return Err(perr(n, format!("bad distance {:?}", f[5])));
            }
            Some(d)
        };
        let st = Stixel::new(column, v_top, v_bottom, kind, distance).map_err(|e| perr(n, e.to_string()))?;
        stixels.push(st);
    }
    Ok(StixelCsv {
        frame_id: frame_id.unwrap_or_default(),
        world: StixelWorld::new(stixels, *grid)?,
    })
}

// ---------------------------------------------------------------- heat maps

pub const SXHM_MAGIC: &[u8; 4] = b"SXHM";
pub const SXHM_VERSION: u32 = 1;
const SXHM_HEADER: usize = 20;

/// `SXHM`, version, rows, cols, stride, then occ and cut as row-major
/// little-endian `f32`.
pub fn write_heatmap_blob<T: Real>(hm: &HeatmapPair<T>) -> Vec<u8> {
    let g = hm.grid();
    let mut out = Vec::with_capacity(SXHM_HEADER + 8 * g.rows() * g.cols());
    out.extend_from_slice(SXHM_MAGIC);
    for v in [SXHM_VERSION, g.rows() as u32, g.cols() as u32, g.stride()] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in hm.occ().as_slice().iter().chain(hm.cut().as_slice()) {
        out.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
    }
    out
}

pub fn read_heatmap_blob<T: Real>(bytes: &[u8]) -> Result<HeatmapPair<T>, IoError> {
    if bytes.len() < 4 {
        return Err(IoError::TruncatedFile(bytes.len()));
    }
    if &bytes[..4] != SXHM_MAGIC {
        return Err(IoError::BadMagic);
    }
    if bytes.len() < SXHM_HEADER {
        return Err(IoError::TruncatedFile(bytes.len()));
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    let version = word(4);
    if version != SXHM_VERSION {
        return Err(IoError::VersionUnsupported(version));
    }
    let (m, n, s) = (word(8), word(12), word(16));
    let cells = (m as usize)
        .checked_mul(n as usize)
        .ok_or_else(|| IoError::InvalidHeader(format!("{m}x{n} grid overflows")))?;
    let expected = cells
        .checked_mul(8)
        .and_then(|b| b.checked_add(SXHM_HEADER))
        .ok_or_else(|| IoError::InvalidHeader(format!("{m}x{n} grid overflows")))?;
    if bytes.len() < expected {
        return Err(IoError::TruncatedFile(bytes.len()));
    }
    if bytes.len() > expected {
        return Err(IoError::TrailingData(bytes.len() - expected));
    }
    let grid = GridSpec::from_cells(m, n, s).map_err(|e| IoError::InvalidHeader(e.to_string()))?;
    let read = |k: usize| {
        let i = SXHM_HEADER + 4 * k;
        T::from_f32(f32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]])).unwrap_or_else(T::nan)
    };
    let (rows, cols) = (m as usize, n as usize);
    let occ = Grid::from_vec(rows, cols, (0..cells).map(read).collect())?;
    let cut = Grid::from_vec(rows, cols, (cells..2 * cells).map(read).collect())?;
    Ok(HeatmapPair::new(occ, cut, grid)?)
}

// ---------------------------------------------------------------- ppm

/// 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    /// Row-major RGB triples.
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn black(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; width as usize * height as usize * 3],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, x: u32, y: u32, c: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }
}

/// Parses a binary `P6` PPM with maxval 255.
pub fn read_ppm(bytes: &[u8]) -> Result<RgbImage, IoError> {
    let mut pos = 0;
    let mut token = || -> Result<&[u8], IoError> {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(IoError::TruncatedFile(bytes.len())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            pos += 1;
        }
        Ok(&bytes[start..pos])
    };
    if token()? != b"P6" {
        return Err(IoError::BadMagic);
    }
    let mut num = |what: &str| -> Result<u32, IoError> {
        let t = token()?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| IoError::InvalidHeader(format!("bad {what}")))
    };
    let width = num("width")?;
    let height = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(IoError::InvalidHeader(format!("maxval {maxval} unsupported")));
    }
    if width == 0 || height == 0 {
        return Err(IoError::InvalidHeader("empty image".into()));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let data_start = pos + 1;
    let len = (width as usize)
        .checked_mul(height as usize)
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(|| IoError::InvalidHeader("image too large".into()))?;
    if bytes.len() < data_start || bytes.len() - data_start < len {
        return Err(IoError::TruncatedFile(bytes.len()));
    }
    if bytes.len() - data_start > len {
        return Err(IoError::TrailingData(bytes.len() - data_start - len));
    }
    Ok(RgbImage {
        width,
        height,
        data: bytes[data_start..].to_vec(),
    })
}

pub fn write_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

/// Distances at or beyond this many meters are drawn pure green.
pub const RAMP_MAX_DISTANCE: f64 = 50.0;
pub const NO_DISTANCE_COLOR: [u8; 3] = [128, 128, 128];

/// Linear red-to-green ramp over `[0, RAMP_MAX_DISTANCE]` meters.
pub fn distance_color(distance: Option<f64>) -> [u8; 3] {
    let Some(d) = distance else {
        return NO_DISTANCE_COLOR;
    };
    let f = (d / RAMP_MAX_DISTANCE).clamp(0.0, 1.0);
    [(255.0 * (1.0 - f)).round() as u8, (255.0 * f).round() as u8, 0]
}

/// Draws object Stixels over `background` (black when absent).
///
/// Each Stixel is a column rectangle with a one-pixel outline in its distance
/// color and an interior blended half-and-half with the background.
pub fn render_overlay<T: Real>(world: &StixelWorld<T>, background: Option<&RgbImage>) -> Result<RgbImage, IoError> {
    let (w, h) = (world.image_width(), world.image_height());
    let mut img = match background {
        Some(bg) if (bg.width, bg.height) != (w, h) => {
            return Err(IoError::DimensionMismatch {
                expected: (w, h),
                got: (bg.width, bg.height),
            })
        }
        Some(bg) => bg.clone(),
        None => RgbImage::black(w, h),
    };
    let s = world.stixel_width();
    for st in world.objects() {
        let color = distance_color(st.distance().map(to_f64));
        let (x0, x1) = (st.column() * s, st.column() * s + s);
        let (y0, y1) = st.pixel_interval();
        for y in y0..y1 {
            for x in x0..x1 {
                let edge = x == x0 || x + 1 == x1 || y == y0 || y + 1 == y1;
                let c = if edge {
                    color
                } else {
                    let b = img.pixel(x, y);
                    std::array::from_fn(|k| (u16::from(b[k]) + u16::from(color[k])).div_ceil(2) as u8)
                };
                img.put(x, y, c);
            }
        }
    }
    Ok(img)
}

/// [`render_overlay`] encoded as PPM; `background` is a PPM file.
pub fn render_overlay_ppm<T: Real>(world: &StixelWorld<T>, background: Option<&[u8]>) -> Result<Vec<u8>, IoError> {
    let bg = background.map(read_ppm).transpose()?;
    Ok(write_ppm(&render_overlay(world, bg.as_ref())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velodyne_examples() {
        let mut bytes = Vec::new();
        for v in [1.0f32, 2.0, 3.0, 0.5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let pc: PointCloud<f64> = read_kitti_velodyne(&bytes).unwrap();
        assert_eq!(pc.points(), &[Point3::new(1.0, 2.0, 3.0)]);
        assert_eq!(pc.frame(), Frame::Sensor);
        assert!(read_kitti_velodyne::<f64>(&[]).unwrap().is_empty());
        assert_eq!(read_kitti_velodyne::<f64>(&[0; 17]), Err(IoError::TruncatedFile(17)));
        bytes[0..4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(read_kitti_velodyne::<f64>(&bytes), Err(IoError::Invariant(_))));
    }

    const CALIB: &str = "P0: 7.215377e+02 0 6.095593e+02 0 0 7.215377e+02 1.728540e+02 0 0 0 1 0
P2: 721.5377 0.0 609.5593 0.0 0.0 721.5377 172.854 0.0 0.0 0.0 1.0 0.0
R0_rect: 1 0 0 0 1 0 0 0 1
Tr_velo_to_cam: 0 -1 0 0.1 0 0 -1 -0.2 1 0 0 -0.3
";

    #[test]
    fn calib_fixture_fields() {
        let c: Calibration<f64> = read_kitti_calib(CALIB, Some((1242, 375))).unwrap();
        let i = c.intrinsics;
        assert_eq!(
            (i.fx, i.fy, i.cx, i.cy, i.width, i.height),
            (721.5377, 721.5377, 609.5593, 172.854, 1242, 375)
        );
        assert_eq!(
            c.extrinsics.rotation(),
            &[[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]]
        );
        assert_eq!(c.extrinsics.translation(), Point3::new(0.1, -0.2, -0.3));
    }

    #[test]
    fn calib_errors() {
        let no_tr: String = CALIB
            .lines()
            .filter(|l| !l.starts_with("Tr_"))
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(
            read_kitti_calib::<f64>(&no_tr, Some((1242, 375))),
            Err(IoError::MissingKey("Tr_velo_to_cam".into()))
        );
        let short = CALIB.replace("172.854 0.0 0.0 0.0 1.0 0.0", "172.854 0.0 0.0 0.0 1.0");
        assert!(matches!(
            read_kitti_calib::<f64>(&short, Some((1242, 375))),
            Err(IoError::MalformedMatrix { .. })
        ));
        assert_eq!(
            read_kitti_calib::<f64>(CALIB, None),
            Err(IoError::MissingKey("S_rect_02".into()))
        );
        let skew = CALIB.replace("Tr_velo_to_cam: 0 -1 0", "Tr_velo_to_cam: 0.5 -1 0");
        assert!(matches!(
            read_kitti_calib::<f64>(&skew, Some((1242, 375))),
            Err(IoError::MalformedMatrix { .. })
        ));
    }

    #[test]
    fn calib_snaps_rounded_rotation_and_folds_p2_offset() {
        let text = "P2: 700 0 600 44.8 0 700 180 0.2 0 0 1 0.004
R0_rect: 0.9999239 0.00983776 -0.007445048 -0.009869795 0.9999421 -0.004278459 0.007402527 0.004351614 0.9999631
Tr_velo_to_cam: 0.007533745 -0.9999714 -0.000616602 -0.004069766 0.01480249 0.0007280733 -0.9998902 -0.07631618 0.9998621 0.007523790 0.01480755 -0.2717806
S_rect_02: 1242 375
";
        let c: Calibration<f64> = read_kitti_calib(text, None).unwrap();
        assert!(orthonormality_error(c.extrinsics.rotation()) < 1e-12);
        assert_eq!((c.intrinsics.width, c.intrinsics.height), (1242, 375));
        // Without the P2 offset the translation would differ by
        // ((44.8 - 600 * 0.004) / 700, (0.2 - 180 * 0.004) / 700, 0.004).
        let plain = text.replace("600 44.8 0 700 180 0.2 0 0 1 0.004", "600 0 0 700 180 0 0 0 1 0");
        let c0: Calibration<f64> = read_kitti_calib(&plain, None).unwrap();
        let d = c.extrinsics.translation() - c0.extrinsics.translation();
        assert!((d.x - 0.06057142857142857).abs() < 1e-12);
        assert!((d.y + 0.000742857142857143).abs() < 1e-12);
        assert!((d.z - 0.004).abs() < 1e-15);
    }

    #[test]
    fn calib_round_trip() {
        let c: Calibration<f64> = read_kitti_calib(CALIB, Some((1242, 375))).unwrap();
        let back: Calibration<f64> = read_kitti_calib(&write_kitti_calib(&c), None).unwrap();
        assert_eq!(back, c);
    }

    fn grid() -> GridSpec {
        GridSpec::new(32, 64, 8).unwrap()
    }

    #[test]
    fn csv_examples() {
        let empty = StixelWorld::<f64>::empty(grid());
        let text = write_stixel_csv("f0", &empty).unwrap();
        assert_eq!(text, format!("{STIXEL_CSV_HEADER}\n"));
        assert_eq!(read_stixel_csv::<f64>(&text, &grid()).unwrap().world, empty);

        let w = StixelWorld::new(
            vec![
                Stixel::new(1, 10, 30, StixelType::GroundObject, Some(12.25)).unwrap(),
                Stixel::new(1, 30, 64, StixelType::Ground, Some(0.1 + 0.2)).unwrap(),
                Stixel::new(3, 0, 4, StixelType::SwibObject, None).unwrap(),
            ],
            grid(),
        )
        .unwrap();
        let text = write_stixel_csv("000042", &w).unwrap();
        assert!(text.contains("000042,3,0,4,SO,-1\n"));
        let back = read_stixel_csv::<f64>(&text, &grid()).unwrap();
        assert_eq!(back.frame_id, "000042");
        assert_eq!(back.world, w);

        let bad = text.replace(",SO,", ",XX,");
        assert!(matches!(
            read_stixel_csv::<f64>(&bad, &grid()),
            Err(IoError::ParseError { line: 4, .. })
        ));
        assert!(matches!(write_stixel_csv("a,b", &w), Err(IoError::InvalidFrameId(_))));
    }

    #[test]
    fn blob_examples() {
        let g = GridSpec::from_cells(2, 3, 4).unwrap();
        let occ = Grid::from_vec(2, 3, vec![0.0, 0.25, 0.5, 0.75, 1.0, 0.125]).unwrap();
        let cut = Grid::from_vec(2, 3, vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let hm = HeatmapPair::new(occ, cut, g).unwrap();
        let bytes = write_heatmap_blob(&hm);
        assert_eq!(&bytes[..4], b"SXHM");
        assert_eq!(&bytes[4..20], &[1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0]);
        assert_eq!(bytes.len(), 20 + 48);
        assert_eq!(read_heatmap_blob::<f64>(&bytes).unwrap(), hm);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(read_heatmap_blob::<f64>(&bad), Err(IoError::BadMagic));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(read_heatmap_blob::<f64>(&bad), Err(IoError::VersionUnsupported(2)));
        assert_eq!(read_heatmap_blob::<f64>(&bytes[..30]), Err(IoError::TruncatedFile(30)));
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(read_heatmap_blob::<f64>(&long), Err(IoError::TrailingData(1)));
        let mut huge = bytes[..20].to_vec();
        huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        huge[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(read_heatmap_blob::<f64>(&huge).is_err());
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(distance_color(Some(0.0)), [255, 0, 0]);
        assert_eq!(distance_color(Some(50.0)), [0, 255, 0]);
        assert_eq!(distance_color(Some(80.0)), [0, 255, 0]);
        assert_eq!(distance_color(Some(25.0)), [128, 128, 0]);
        assert_eq!(distance_color(None), [128, 128, 128]);
    }

    #[test]
    fn overlay_golden() {
        // 4x4 image, stride 2: one red Stixel in column 0 spanning rows 0..3
        // and one distance-less Stixel in column 1 spanning row 3 only.
        let g = GridSpec::new(4, 4, 2).unwrap();
        let w = StixelWorld::new(
            vec![
                Stixel::new(0, 0, 3, StixelType::GroundObject, Some(0.0)).unwrap(),
                Stixel::new(1, 3, 4, StixelType::SwibObject, None).unwrap(),
            ],
            g,
        )
        .unwrap();
        let bg = RgbImage {
            width: 4,
            height: 4,
            data: vec![100; 48],
        };
        let ppm = render_overlay_ppm(&w, Some(&write_ppm(&bg))).unwrap();
        let mut expected = b"P6\n4 4\n255\n".to_vec();
        let (r, gr, bgp) = ([255u8, 0, 0], [128u8, 128, 128], [100u8, 100, 100]);
        #[rustfmt::skip]
        let rows = [
            [r, r, bgp, bgp],
            [r, r, bgp, bgp],
            [r, r, bgp, bgp],
            [bgp, bgp, gr, gr],
        ];
        for row in rows {
            for px in row {
                expected.extend_from_slice(&px);
            }
        }
        assert_eq!(ppm, expected);
    }

    #[test]
    fn overlay_interior_is_blended() {
        let g = GridSpec::new(4, 4, 4).unwrap();
        let w = StixelWorld::new(
            vec![Stixel::new(0, 0, 4, StixelType::GroundObject, Some(50.0)).unwrap()],
            g,
        )
        .unwrap();
        let img = render_overlay(&w, None).unwrap();
        assert_eq!(img.pixel(0, 0), [0, 255, 0]);
        assert_eq!(img.pixel(1, 1), [0, 128, 0]);
        let empty = StixelWorld::<f64>::empty(g);
        let bg = RgbImage {
            width: 4,
            height: 4,
            data: (0..48).collect(),
        };
        assert_eq!(render_overlay(&empty, Some(&bg)).unwrap(), bg);
        assert!(matches!(
            render_overlay(&empty, Some(&RgbImage::black(2, 2))),
            Err(IoError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ppm_header_errors() {
        assert_eq!(read_ppm(b"P5\n1 1\n255\n\0"), Err(IoError::BadMagic));
        assert!(matches!(
            read_ppm(b"P6\n1 1\n65535\n\0\0\0"),
            Err(IoError::InvalidHeader(_))
        ));
        assert!(matches!(
            read_ppm(b"P6\n2 1\n255\n\0\0\0"),
            Err(IoError::TruncatedFile(_))
        ));
        assert_eq!(read_ppm(b"P6 # c\n1 1\n255\n\x01\x02\x03").unwrap().data, vec![1, 2, 3]);
    }
}
