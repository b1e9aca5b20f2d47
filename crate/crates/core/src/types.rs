//! Domain types shared by every stage: points, clouds, calibration, planes,
//! Stixels, Stixel-Worlds and the grid representations used by the codec.
//!
//! Every type validates its invariants at construction and is immutable
//! afterwards. Image rows grow downward from the top-left origin, and Stixel
//! rows are closed-open pixel intervals `[v_top, v_bottom)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::scalar::{lit, Real};

/// Invariant violation raised by a constructor.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("rotation is not orthonormal with determinant +1 (error {0:e})")]
    NonOrthonormal(f64),
    #[error("plane normal is not unit length (|n| = {0})")]
    NonUnitNormal(f64),
    #[error("invalid stixel: {0}")]
    InvalidStixel(String),
    #[error("object stixels overlap in column {column}: [{a_top}, {a_bottom}) and [{b_top}, {b_bottom})")]
    OverlappingStixels {
        column: u32,
        a_top: u32,
        a_bottom: u32,
        b_top: u32,
        b_bottom: u32,
    },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("matrix dimensions {got:?} do not match grid {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("target grid invariant violated: {0}")]
    InvalidTarget(String),
}

/// A 3D point or vector in meters. The frame is implied by the owning cloud.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    /// Builds a point, rejecting NaN and infinite coordinates.
    pub fn finite(x: T, y: T, z: T) -> Result<Self, InvariantError> {
        let p = Self::new(x, y, z);
        if p.is_finite() {
            Ok(p)
        } else {
            Err(InvariantError::NonFinite("point coordinates"))
        }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn distance(&self, o: &Self) -> T {
        (*self - *o).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self.scale(T::one() / n))
        } else {
            None
        }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl<T: Real> Add for Point3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Point3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Point3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Neg for Point3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Coordinate frame a cloud is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    /// LiDAR frame: x forward, y left, z up.
    Sensor,
    /// Camera frame: x right, y down, z forward.
    Camera,
}

/// Ordered LiDAR returns. Indices are stable identities.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<T> {
    points: Vec<Point3<T>>,
    frame: Frame,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Point3<T>>, frame: Frame) -> Result<Self, InvariantError> {
        if points.iter().all(Point3::is_finite) {
            Ok(Self { points, frame })
        } else {
            Err(InvariantError::NonFinite("point cloud"))
        }
    }

    pub fn empty(frame: Frame) -> Self {
        Self {
            points: Vec::new(),
            frame,
        }
    }

    pub fn points(&self) -> &[Point3<T>] {
        &self.points
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3<T>> {
        self.points
    }
}

/// Pinhole intrinsics in pixels plus the image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self, InvariantError> {
        if !(fx.is_finite() && fy.is_finite() && cx.is_finite() && cy.is_finite()) {
            return Err(InvariantError::NonFinite("intrinsics"));
        }
        if fx <= T::zero() || fy <= T::zero() {
            return Err(InvariantError::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={fx}, fy={fy})"
            )));
        }
        let w = T::from_u32(width).unwrap_or_else(T::zero);
        let h = T::from_u32(height).unwrap_or_else(T::zero);
        if !(cx > T::zero() && cx < w && cy > T::zero() && cy < h) {
            return Err(InvariantError::InvalidIntrinsics(format!(
                "principal point ({cx}, {cy}) outside image {width}x{height}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }
}

/// Rigid sensor-to-camera transform `p_cam = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics<T> {
    rotation: [[T; 3]; 3],
    translation: Point3<T>,
}

fn orthonormal_tol<T: Real>() -> T {
    let e = lit::<T>(16.0) * T::epsilon();
    e.max(lit(1e-9))
}

impl<T: Real> Extrinsics<T> {
    pub fn new(rotation: [[T; 3]; 3], translation: Point3<T>) -> Result<Self, InvariantError> {
        if rotation.iter().flatten().any(|v| !v.is_finite()) || !translation.is_finite() {
            return Err(InvariantError::NonFinite("extrinsics"));
        }
        let err = orthonormality_error(&rotation);
        if err > orthonormal_tol::<T>() {
            return Err(InvariantError::NonOrthonormal(crate::scalar::to_f64(err)));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[o, z, z], [z, o, z], [z, z, o]],
            translation: Point3::zero(),
        }
    }

    pub fn rotation(&self) -> &[[T; 3]; 3] {
        &self.rotation
    }

    pub fn translation(&self) -> Point3<T> {
        self.translation
    }

    #[inline]
    pub fn rotate(&self, p: &Point3<T>) -> Point3<T> {
        let r = &self.rotation;
        Point3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z,
        )
    }

    #[inline]
    pub fn apply(&self, p: &Point3<T>) -> Point3<T> {
        self.rotate(p) + self.translation
    }

    /// Position of the sensor origin expressed in the camera frame.
    pub fn sensor_origin(&self) -> Point3<T> {
        self.translation
    }
}

/// Camera intrinsics together with the LiDAR-to-camera transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration<T> {
    pub intrinsics: CameraIntrinsics<T>,
    pub extrinsics: Extrinsics<T>,
}

/// Largest deviation of `R^T R` from identity, with `|det R - 1|` folded in.
pub(crate) fn orthonormality_error<T: Real>(r: &[[T; 3]; 3]) -> T {
    let mut worst = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = T::zero();
            for k in 0..3 {
                s += r[k][i] * r[k][j];
            }
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((s - target).abs());
        }
    }
    let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
    worst.max((det - T::one()).abs())
}

/// Plane `{p : normal . p + offset = 0}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane<T> {
    normal: Point3<T>,
    offset: T,
}

impl<T: Real> Plane<T> {
    pub fn new(normal: Point3<T>, offset: T) -> Result<Self, InvariantError> {
        if !normal.is_finite() || !offset.is_finite() {
            return Err(InvariantError::NonFinite("plane"));
        }
        let tol = (lit::<T>(64.0) * T::epsilon()).max(lit(1e-12));
        let n = normal.norm();
        if (n - T::one()).abs() > tol {
            return Err(InvariantError::NonUnitNormal(crate::scalar::to_f64(n)));
        }
        Ok(Self { normal, offset })
    }

    /// Normalizes `normal` and rescales `offset` accordingly.
    pub fn from_unnormalized(normal: Point3<T>, offset: T) -> Result<Self, InvariantError> {
        let len = normal.norm();
        if !(len > T::zero()) || !len.is_finite() {
            return Err(InvariantError::NonUnitNormal(crate::scalar::to_f64(len)));
        }
        Self::new(normal.scale(T::one() / len), offset / len)
    }

    pub fn normal(&self) -> Point3<T> {
        self.normal
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    #[inline]
    pub fn signed_distance(&self, p: &Point3<T>) -> T {
        self.normal.dot(p) + self.offset
    }

    /// Flips the plane so that `viewpoint` lies on the positive ("above") side.
    pub fn oriented_towards(self, viewpoint: &Point3<T>) -> Self {
        if self.signed_distance(viewpoint) < T::zero() {
            Self {
                normal: -self.normal,
                offset: -self.offset,
            }
        } else {
            self
        }
    }

    /// Orthogonal projection of `p` onto the plane.
    pub fn project(&self, p: &Point3<T>) -> Point3<T> {
        *p - self.normal.scale(self.signed_distance(p))
    }
}

/// Stixel taxonomy: lying ground, upright ground-standing and elevated objects,
/// and sky (represented implicitly, never stored in a world).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StixelType {
    Ground,
    GroundObject,
    SwibObject,
    Sky,
}

impl StixelType {
    /// Ground objects and swib objects are the "object" classes.
    pub fn is_object(self) -> bool {
        matches!(self, StixelType::GroundObject | StixelType::SwibObject)
    }

    pub fn code(self) -> &'static str {
        match self {
            StixelType::Ground => "G",
            StixelType::GroundObject => "GO",
            StixelType::SwibObject => "SO",
            StixelType::Sky => "S",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "G" => Some(StixelType::Ground),
            "GO" => Some(StixelType::GroundObject),
            "SO" => Some(StixelType::SwibObject),
            _ => None,
        }
    }
}

impl fmt::Display for StixelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One vertical image segment in grid column `column`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stixel<T> {
    column: u32,
    v_top: u32,
    v_bottom: u32,
    kind: StixelType,
    distance: Option<T>,
}

impl<T: Real> Stixel<T> {
    /// `distance` is `None` for predictions that carry no range.
    pub fn new(
        column: u32,
        v_top: u32,
        v_bottom: u32,
        kind: StixelType,
        distance: Option<T>,
    ) -> Result<Self, InvariantError> {
        if v_top >= v_bottom {
            return Err(InvariantError::InvalidStixel(format!(
                "v_top {v_top} must be above v_bottom {v_bottom}"
            )));
        }
        if kind == StixelType::Sky {
            return Err(InvariantError::InvalidStixel("sky is implicit and never stored".into()));
        }
        if let Some(d) = distance {
            if !d.is_finite() || d < T::zero() {
                return Err(InvariantError::InvalidStixel(format!(
                    "distance {d} must be finite and non-negative"
                )));
            }
        }
        Ok(Self {
            column,
            v_top,
            v_bottom,
            kind,
            distance,
        })
    }

    pub fn column(&self) -> u32 {
        self.column
    }
    pub fn v_top(&self) -> u32 {
        self.v_top
    }
    pub fn v_bottom(&self) -> u32 {
        self.v_bottom
    }
    pub fn kind(&self) -> StixelType {
        self.kind
    }
    pub fn distance(&self) -> Option<T> {
        self.distance
    }
    pub fn height(&self) -> u32 {
        self.v_bottom - self.v_top
    }

    /// Closed-open pixel interval `[v_top, v_bottom)`.
    pub fn pixel_interval(&self) -> (u32, u32) {
        (self.v_top, self.v_bottom)
    }

    pub fn with_kind(self, kind: StixelType) -> Self {
        Self { kind, ..self }
    }
}

/// Grid geometry: image size and the square cell stride in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    image_width: u32,
    image_height: u32,
    stride: u32,
}

impl GridSpec {
    pub fn new(image_width: u32, image_height: u32, stride: u32) -> Result<Self, InvariantError> {
        if stride == 0 {
            return Err(InvariantError::InvalidGrid("stride must be >= 1".into()));
        }
        if image_width == 0 || image_height == 0 {
            return Err(InvariantError::InvalidGrid("image must be non-empty".into()));
        }
        if !image_width.is_multiple_of(stride) || !image_height.is_multiple_of(stride) {
            return Err(InvariantError::InvalidGrid(format!(
                "stride {stride} does not divide image {image_width}x{image_height}"
            )));
        }
        Ok(Self {
            image_width,
            image_height,
            stride,
        })
    }

    /// Grid from cell counts, as stored in heat-map blobs.
    pub fn from_cells(rows: u32, cols: u32, stride: u32) -> Result<Self, InvariantError> {
        let h = rows.checked_mul(stride);
        let w = cols.checked_mul(stride);
        match (w, h) {
            (Some(w), Some(h)) => Self::new(w, h, stride),
            _ => Err(InvariantError::InvalidGrid("grid size overflows u32".into())),
        }
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }
    pub fn image_width(&self) -> u32 {
        self.image_width
    }
    pub fn image_height(&self) -> u32 {
        self.image_height
    }
    /// Number of cell rows `m`.
    pub fn rows(&self) -> usize {
        (self.image_height / self.stride) as usize
    }
    /// Number of cell columns `n`.
    pub fn cols(&self) -> usize {
        (self.image_width / self.stride) as usize
    }
    /// Output tensor shape `(channels, m, n)` with occupancy and cut channels.
    pub fn tensor_shape(&self) -> (usize, usize, usize) {
        (2, self.rows(), self.cols())
    }
}

/// Multi-layer Stixel-World of one frame.
///
/// Stixels are kept sorted by `(column, v_top, v_bottom, kind)`, so equality
/// does not depend on insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct StixelWorld<T> {
    stixels: Vec<Stixel<T>>,
    grid: GridSpec,
}

impl<T: Real> StixelWorld<T> {
    pub fn new(mut stixels: Vec<Stixel<T>>, grid: GridSpec) -> Result<Self, InvariantError> {
        let cols = grid.cols() as u32;
        for s in &stixels {
            if s.column >= cols {
                return Err(InvariantError::InvalidStixel(format!(
                    "column {} outside grid with {cols} columns",
                    s.column
                )));
            }
            if s.v_bottom > grid.image_height {
                return Err(InvariantError::InvalidStixel(format!(
                    "v_bottom {} below image height {}",
                    s.v_bottom, grid.image_height
                )));
            }
        }
        stixels.sort_by(|a, b| (a.column, a.v_top, a.v_bottom, a.kind).cmp(&(b.column, b.v_top, b.v_bottom, b.kind)));
        check_column_overlap(&stixels)?;
        Ok(Self { stixels, grid })
    }

    pub fn empty(grid: GridSpec) -> Self {
        Self {
            stixels: Vec::new(),
            grid,
        }
    }

    pub fn stixels(&self) -> &[Stixel<T>] {
        &self.stixels
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn image_width(&self) -> u32 {
        self.grid.image_width
    }
    pub fn image_height(&self) -> u32 {
        self.grid.image_height
    }
    pub fn stixel_width(&self) -> u32 {
        self.grid.stride
    }

    pub fn objects(&self) -> impl Iterator<Item = &Stixel<T>> {
        self.stixels.iter().filter(|s| s.kind.is_object())
    }

    pub fn in_column(&self, column: u32) -> impl Iterator<Item = &Stixel<T>> {
        self.stixels.iter().filter(move |s| s.column == column)
    }

    pub fn len(&self) -> usize {
        self.stixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stixels.is_empty()
    }
}

/// Pairwise interval intersection over object Stixels sharing a column.
fn check_column_overlap<T: Real>(sorted: &[Stixel<T>]) -> Result<(), InvariantError> {
    let mut start = 0;
    while start < sorted.len() {
        let col = sorted[start].column;
        let mut end = start;
        while end < sorted.len() && sorted[end].column == col {
            end += 1;
        }
        let objs: Vec<&Stixel<T>> = sorted[start..end].iter().filter(|s| s.kind.is_object()).collect();
        for (i, a) in objs.iter().enumerate() {
            for b in &objs[i + 1..] {
                let lo = a.v_top.max(b.v_top);
                let hi = a.v_bottom.min(b.v_bottom);
                if hi > lo {
                    return Err(InvariantError::OverlappingStixels {
                        column: col,
                        a_top: a.v_top,
                        a_bottom: a.v_bottom,
                        b_top: b.v_top,
                        b_bottom: b.v_bottom,
                    });
                }
            }
        }
        start = end;
    }
    Ok(())
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<V> {
    rows: usize,
    cols: usize,
    data: Vec<V>,
}

impl<V: Copy> Grid<V> {
    pub fn filled(rows: usize, cols: usize, value: V) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<V>) -> Result<Self, InvariantError> {
        if data.len() != rows * cols {
            return Err(InvariantError::DimensionMismatch {
                expected: (rows, cols),
                got: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> V {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: V) {
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn map<W: Copy>(&self, f: impl Fn(V) -> W) -> Grid<W> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Column `col` as a top-to-bottom vector.
    pub fn column(&self, col: usize) -> Vec<V> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }
}

/// Occupancy and cut heat maps on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapPair<T> {
    occ: Grid<T>,
    cut: Grid<T>,
    grid: GridSpec,
}

impl<T: Real> HeatmapPair<T> {
    pub fn new(occ: Grid<T>, cut: Grid<T>, grid: GridSpec) -> Result<Self, InvariantError> {
        let expected = (grid.rows(), grid.cols());
        for m in [&occ, &cut] {
            if m.dims() != expected {
                return Err(InvariantError::DimensionMismatch {
                    expected,
                    got: m.dims(),
                });
            }
            if m.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(InvariantError::NonFinite("heat map"));
            }
        }
        Ok(Self { occ, cut, grid })
    }

    pub fn occ(&self) -> &Grid<T> {
        &self.occ
    }
    pub fn cut(&self) -> &Grid<T> {
        &self.cut
    }
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// True when every element lies in `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.occ
            .as_slice()
            .iter()
            .chain(self.cut.as_slice())
            .all(|&v| v >= T::zero() && v <= T::one())
    }

    /// Both maps multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            occ: self.occ.map(|v| v * factor),
            cut: self.cut.map(|v| v * factor),
            grid: self.grid,
        }
    }
}

/// Binary training targets on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetGrid {
    occ: Grid<u8>,
    cut: Grid<u8>,
    grid: GridSpec,
}

impl TargetGrid {
    pub fn new(occ: Grid<u8>, cut: Grid<u8>, grid: GridSpec) -> Result<Self, InvariantError> {
        let expected = (grid.rows(), grid.cols());
        for m in [&occ, &cut] {
            if m.dims() != expected {
                return Err(InvariantError::DimensionMismatch {
                    expected,
                    got: m.dims(),
                });
            }
            if m.as_slice().iter().any(|&v| v > 1) {
                return Err(InvariantError::InvalidTarget("elements must be 0 or 1".into()));
            }
        }
        for c in 0..grid.cols() {
            let has_cut = (0..grid.rows()).any(|r| cut.get(r, c) == 1);
            let has_occ = (0..grid.rows()).any(|r| occ.get(r, c) == 1);
            if has_cut && !has_occ {
                return Err(InvariantError::InvalidTarget(format!(
                    "column {c} has cut cells but no occupancy"
                )));
            }
        }
        Ok(Self { occ, cut, grid })
    }

    pub fn occ(&self) -> &Grid<u8> {
        &self.occ
    }
    pub fn cut(&self) -> &Grid<u8> {
        &self.cut
    }
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Targets as real-valued heat maps (exactly 0 or 1).
    pub fn to_heatmaps<T: Real>(&self) -> HeatmapPair<T> {
        let to_real = |v: u8| if v == 1 { T::one() } else { T::zero() };
        HeatmapPair {
            occ: self.occ.map(to_real),
            cut: self.cut.map(to_real),
            grid: self.grid,
        }
    }
}
