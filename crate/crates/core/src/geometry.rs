//! Vector and rotation math, ray casting onto surface grids, and the 2D grid
//! helpers (convex hull, polygon fill) used by the importance maps.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{AnchoringSurface, Orientation, CELL_SIZE};

/// Below this a direction is treated as zero-length.
pub const MIN_NORM: f64 = 1e-12;
/// Below this a ray is treated as parallel to a plane.
pub const PARALLEL_EPS: f64 = 1e-9;
/// Slack allowed when deciding whether a hit lies on the surface rectangle.
const EDGE_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3::new(v[0], v[1], v[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };
    pub const X: Vec3 = Vec3 {
        x: 1.0,
        y: 0.0,
        z: 0.0,
    };
    pub const Y: Vec3 = Vec3 {
        x: 0.0,
        y: 1.0,
        z: 0.0,
    };
    pub const Z: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 1.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n >= MIN_NORM && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A unit quaternion. Serialized as `[w, x, y, z]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitRotation {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for UnitRotation {
    fn from(q: [f64; 4]) -> Self {
        UnitRotation {
            w: q[0],
            x: q[1],
            y: q[2],
            z: q[3],
        }
    }
}

impl From<UnitRotation> for [f64; 4] {
    fn from(q: UnitRotation) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

impl Default for UnitRotation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitRotation {
    pub const IDENTITY: UnitRotation = UnitRotation {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        UnitRotation {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn from_axis_angle(axis: Vec3, radians: f64) -> Self {
        let axis = axis.normalized().unwrap_or(Vec3::Z);
        let (s, c) = (radians * 0.5).sin_cos();
        UnitRotation {
            w: c,
            x: axis.x * s,
            y: axis.y * s,
            z: axis.z * s,
        }
    }

    /// Intrinsic X-Y-Z rotation, angles in degrees, in the order
    /// (about X, about Y, about Z).
    pub fn from_euler_deg(x: f64, y: f64, z: f64) -> Self {
        let qx = Self::from_axis_angle(Vec3::X, x.to_radians());
        let qy = Self::from_axis_angle(Vec3::Y, y.to_radians());
        let qz = Self::from_axis_angle(Vec3::Z, z.to_radians());
        qx * qy * qz
    }

    /// Rotation whose columns are the given right-handed orthonormal frame,
    /// i.e. it maps X, Y, Z onto `right`, `up`, `forward`.
    pub fn from_frame(right: Vec3, up: Vec3, forward: Vec3) -> Self {
        let (m00, m01, m02) = (right.x, up.x, forward.x);
        let (m10, m11, m12) = (right.y, up.y, forward.y);
        let (m20, m21, m22) = (right.z, up.z, forward.z);
        let trace = m00 + m11 + m22;
        let q = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            UnitRotation {
                w: 0.25 * s,
                x: (m21 - m12) / s,
                y: (m02 - m20) / s,
                z: (m10 - m01) / s,
            }
        } else if m00 > m11 && m00 > m22 {
            let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0;
            UnitRotation {
                w: (m21 - m12) / s,
                x: 0.25 * s,
                y: (m01 + m10) / s,
                z: (m02 + m20) / s,
            }
        } else if m11 > m22 {
            let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0;
            UnitRotation {
                w: (m02 - m20) / s,
                x: (m01 + m10) / s,
                y: 0.25 * s,
                z: (m12 + m21) / s,
            }
        } else {
            let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0;
            UnitRotation {
                w: (m10 - m01) / s,
                x: (m02 + m20) / s,
                y: (m12 + m21) / s,
                z: 0.25 * s,
            }
        };
        let q = q.normalized();
        // Canonical sign so serialized profiles are stable.
        if q.w < 0.0 {
            UnitRotation {
                w: -q.w,
                x: -q.x,
                y: -q.y,
                z: -q.z,
            }
        } else {
            q
        }
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Angle of the relative rotation between `self` and `other`, in degrees.
    pub fn angle_to(&self, other: &UnitRotation) -> f64 {
        let d = (self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z).abs();
        2.0 * d.min(1.0).acos().to_degrees()
    }
}

impl Mul for UnitRotation {
    type Output = UnitRotation;
    fn mul(self, o: UnitRotation) -> UnitRotation {
        UnitRotation {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    origin: Vec3,
    direction: Vec3,
}

impl Ray {
    /// Builds a ray, normalizing `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Result<Self> {
        let direction = direction.normalized().ok_or(Error::InvalidDirection)?;
        Ok(Ray { origin, direction })
    }

    /// Ray starting at `from` and passing through `through`.
    pub fn through(from: Vec3, through: Vec3) -> Result<Self> {
        Self::new(from, through - from)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// A cell index on a surface grid: `r` along the width, `c` along the height.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub r: usize,
    pub c: usize,
}

impl Cell {
    pub const fn new(r: usize, c: usize) -> Self {
        Cell { r, c }
    }
}

/// Binary grid of `width` x `height` cells, indexed by `(r, c)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl GridMask {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "grid must have at least one cell"
        );
        GridMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        let mut m = Self::new(width, height);
        m.bits.fill(true);
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn idx(&self, r: usize, c: usize) -> usize {
        debug_assert!(r < self.width && c < self.height);
        c * self.width + r
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[self.idx(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let i = self.idx(r, c);
        self.bits[i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|b| *b)
    }

    /// Occupied cells in `(c, r)` scan order.
    pub fn occupied(&self) -> impl Iterator<Item = Cell> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| Cell::new(i % self.width, i / self.width))
    }

    pub fn transposed(&self) -> GridMask {
        let mut t = GridMask::new(self.height, self.width);
        for cell in self.occupied() {
            t.set(cell.c, cell.r, true);
        }
        t
    }
}

/// Intersects `ray` with the surface rectangle and returns the grid cell hit.
///
/// Cell `(r, c)` covers `[r, r+1] x [c, c+1]` cell widths measured from the
/// top-left corner along the right and down directions. The last row and
/// column absorb the sliver left over when the extent is not a multiple of
/// the cell size. Hits on a shared cell edge go to the smaller index; hits on
/// the far right or bottom edge of the rectangle miss.
pub fn ray_cast_surface(ray: &Ray, surface: &AnchoringSurface) -> Option<Cell> {
    let normal = surface.normal();
    let denom = ray.direction().dot(normal);
    if denom.abs() < PARALLEL_EPS {
        return None;
    }
    let t = (surface.top_left() - ray.origin()).dot(normal) / denom;
    if !(t >= 0.0) {
        return None;
    }
    let local = ray.at(t) - surface.top_left();
    let u = local.dot(surface.right_axis());
    let v = -local.dot(surface.up_axis());
    // Near edges are inclusive, far edges exclusive.
    if u < -EDGE_EPS
        || v < -EDGE_EPS
        || u >= surface.width() - EDGE_EPS
        || v >= surface.height() - EDGE_EPS
    {
        return None;
    }
    Some(Cell::new(
        coordinate_to_index(u, surface.grid_width()),
        coordinate_to_index(v, surface.grid_height()),
    ))
}

fn coordinate_to_index(u: f64, cells: usize) -> usize {
    let k = (u / CELL_SIZE).ceil() - 1.0;
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(cells - 1)
    }
}

/// 2D orientation test: positive when `o -> a -> b` turns counterclockwise.
pub fn orient(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull in counterclockwise order, collinear points dropped.
/// Two or fewer distinct points are returned as-is (sorted).
pub fn convex_hull(points: &[Cell]) -> Vec<Cell> {
    let mut pts: Vec<(i64, i64)> = points.iter().map(|p| (p.r as i64, p.c as i64)).collect();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts
            .into_iter()
            .map(|(r, c)| Cell::new(r as usize, c as usize))
            .collect();
    }
    // Andrew's monotone chain.
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(pts.len() * 2);
    for &p in &pts {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull.into_iter()
        .map(|(r, c)| Cell::new(r as usize, c as usize))
        .collect()
}

/// Sets every cell whose center (the integer point `(r, c)`) lies inside or
/// on the convex polygon `hull`. Degenerate hulls mark just their vertices.
pub fn flood_fill(mask: &GridMask, hull: &[Cell]) -> GridMask {
    let mut out = mask.clone();
    match hull.len() {
        0 => {}
        1 | 2 => {
            for p in hull {
                if p.r < out.width() && p.c < out.height() {
                    out.set(p.r, p.c, true);
                }
            }
        }
        _ => {
            let poly: Vec<(i64, i64)> = hull.iter().map(|p| (p.r as i64, p.c as i64)).collect();
            let r_max = hull
                .iter()
                .map(|p| p.r)
                .max()
                .unwrap_or(0)
                .min(out.width() - 1);
            let c_max = hull
                .iter()
                .map(|p| p.c)
                .max()
                .unwrap_or(0)
                .min(out.height() - 1);
            let r_min = hull.iter().map(|p| p.r).min().unwrap_or(0);
            let c_min = hull.iter().map(|p| p.c).min().unwrap_or(0);
            for c in c_min..=c_max {
                for r in r_min..=r_max {
                    let q = (r as i64, c as i64);
                    let inside = (0..poly.len())
                        .all(|i| orient(poly[i], poly[(i + 1) % poly.len()], q) >= 0);
                    if inside {
                        out.set(r, c, true);
                    }
                }
            }
        }
    }
    out
}

/// Angle between two vectors in degrees, in `[0, 180]`.
pub fn angle_between(a: Vec3, b: Vec3) -> Result<f64> {
    let a = a.normalized().ok_or(Error::InvalidDirection)?;
    let b = b.normalized().ok_or(Error::InvalidDirection)?;
    // atan2 form: same angle as the clamped arccos of the dot product, but
    // exact for parallel and perpendicular inputs.
    Ok(a.cross(b)
        .norm()
        .atan2(a.dot(b).clamp(-1.0, 1.0))
        .to_degrees())
}

/// Orientation of an instruction label placed at `p_a` so that it reads
/// toward `p_eye`: the surface rotation followed by a local Euler offset
/// derived from the viewing direction's angles to the surface axes.
pub fn label_rotation(surface: &AnchoringSurface, p_a: Vec3, p_eye: Vec3) -> Result<UnitRotation> {
    let dir = p_a - p_eye;
    if dir.normalized().is_none() {
        return Err(Error::CoincidentPoints);
    }
    let alpha_up = angle_between(surface.up_axis(), dir)?;
    let alpha_right = angle_between(surface.right_axis(), dir)?;
    let offset = match surface.orientation() {
        Orientation::Horizontal => {
            UnitRotation::from_euler_deg(90.0 - alpha_up, 0.0, 90.0 - alpha_right)
        }
        Orientation::Vertical => {
            UnitRotation::from_euler_deg(90.0 - alpha_up, alpha_right - 90.0, 0.0)
        }
    };
    Ok(surface.rotation() * offset)
}
