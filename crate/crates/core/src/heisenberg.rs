//! Arithmetic of the first Heisenberg group.
//!
//! Points are plain `f64` triples `(x, y, z)` with the product
//! `(x, y, z)·(x', y', z') = (x + x', y + y', z + z' + (x y' − x' y)/2)`.
//! The identity is the origin and the inverse is the coordinate negation.

use core::ops::Mul;

use serde::{Deserialize, Serialize};

/// A group element of ℍ in exponential coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point { x, y, z }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Euclidean norm of the coordinate triple.
    #[inline]
    pub fn euclidean_norm(&self) -> f64 {
        libm::sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
    }

    /// Reflection through the z-axis, `(x, y, z) ↦ (−x, −y, z)`.
    #[inline]
    pub fn reflect_z_axis(&self) -> Point {
        Point::new(-self.x, -self.y, self.z)
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Euclidean (coordinate-wise) affine combination helper: `self + s·other`.
    #[inline]
    pub fn add_scaled(&self, s: f64, other: &Point) -> Point {
        Point::new(self.x + s * other.x, self.y + s * other.y, self.z + s * other.z)
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point::new(c[0], c[1], c[2])
    }
}

impl Mul for Point {
    type Output = Point;

    #[inline]
    fn mul(self, rhs: Point) -> Point {
        group_mul(self, rhs)
    }
}

/// Coordinates `(a, b)` of the horizontal element `(a, b, 0) ∈ ℍ₀`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlaneCoord {
    pub a: f64,
    pub b: f64,
}

impl PlaneCoord {
    #[inline]
    pub const fn new(a: f64, b: f64) -> Self {
        PlaneCoord { a, b }
    }

    #[inline]
    pub fn as_point(&self) -> Point {
        Point::new(self.a, self.b, 0.0)
    }

    #[inline]
    pub fn inverse(&self) -> PlaneCoord {
        PlaneCoord::new(-self.a, -self.b)
    }

    /// Sup-norm of the coordinates; the window boundary test uses it.
    #[inline]
    pub fn max_abs(&self) -> f64 {
        libm::fmax(libm::fabs(self.a), libm::fabs(self.b))
    }
}

/// Coefficients of the left-invariant fields `X`, `Y` at a point, as rows
/// of a 2×3 matrix acting on Euclidean gradients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizontalFrame {
    pub rows: [[f64; 3]; 2],
}

impl HorizontalFrame {
    /// `M ∇u`: the horizontal gradient from a Euclidean gradient.
    pub fn apply(&self, v: [f64; 3]) -> [f64; 2] {
        let r = &self.rows;
        [
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        ]
    }

    /// `M H Mᵀ` for a symmetric Euclidean Hessian `H`, returned as
    /// `(m11, m12, m22)`.
    pub fn congruence(&self, h: &[[f64; 3]; 3]) -> (f64, f64, f64) {
        let r = &self.rows;
        let mut hm = [[0.0; 2]; 3];
        for i in 0..3 {
            for k in 0..2 {
                hm[i][k] = h[i][0] * r[k][0] + h[i][1] * r[k][1] + h[i][2] * r[k][2];
            }
        }
        let entry = |a: usize, b: usize| r[a][0] * hm[0][b] + r[a][1] * hm[1][b] + r[a][2] * hm[2][b];
        (entry(0, 0), 0.5 * (entry(0, 1) + entry(1, 0)), entry(1, 1))
    }
}

#[inline]
pub fn group_mul(p: Point, q: Point) -> Point {
    Point::new(p.x + q.x, p.y + q.y, p.z + q.z + 0.5 * (p.x * q.y - q.x * p.y))
}

#[inline]
pub fn group_inverse(p: Point) -> Point {
    Point::new(-p.x, -p.y, -p.z)
}

/// Korányi gauge `((x² + y²)² + 16 z²)^{1/4}`.
#[inline]
pub fn gauge_norm(p: Point) -> f64 {
    let r2 = p.x * p.x + p.y * p.y;
    libm::sqrt(libm::sqrt(r2 * r2 + 16.0 * p.z * p.z))
}

/// `p·(a, b, 0)`, a point of the left-invariant horizontal plane through `p`.
#[inline]
pub fn left_plane_point(p: Point, h: PlaneCoord) -> Point {
    group_mul(p, h.as_point())
}

/// `(a, b, 0)·p`, a point of the right-invariant horizontal plane through `p`.
#[inline]
pub fn right_plane_point(p: Point, h: PlaneCoord) -> Point {
    group_mul(h.as_point(), p)
}

/// `y_p x_q − x_p y_q + 2 z_q − 2 z_p`; zero iff `q ∈ ℍ_p`.
#[inline]
pub fn plane_residual_left(p: Point, q: Point) -> f64 {
    p.y * q.x - p.x * q.y + 2.0 * q.z - 2.0 * p.z
}

/// `y_p x_q − x_p y_q − 2 z_q + 2 z_p`; zero iff `q` lies on the
/// right-invariant plane through `p`.
#[inline]
pub fn plane_residual_right(p: Point, q: Point) -> f64 {
    p.y * q.x - p.x * q.y - 2.0 * q.z + 2.0 * p.z
}

pub fn horizontal_frame(p: Point) -> HorizontalFrame {
    HorizontalFrame {
        rows: [[1.0, 0.0, -0.5 * p.y], [0.0, 1.0, 0.5 * p.x]],
    }
}

/// Frame of the right-invariant fields `X̃ = ∂x + (y/2)∂z`, `Ỹ = ∂y − (x/2)∂z`.
pub fn right_horizontal_frame(p: Point) -> HorizontalFrame {
    HorizontalFrame {
        rows: [[1.0, 0.0, 0.5 * p.y], [0.0, 1.0, -0.5 * p.x]],
    }
}

/// Which family of horizontal planes an operator works with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Left,
    Right,
}

impl Side {
    #[inline]
    pub fn plane_point(self, p: Point, h: PlaneCoord) -> Point {
        match self {
            Side::Left => left_plane_point(p, h),
            Side::Right => right_plane_point(p, h),
        }
    }

    #[inline]
    pub fn plane_residual(self, p: Point, q: Point) -> f64 {
        match self {
            Side::Left => plane_residual_left(p, q),
            Side::Right => plane_residual_right(p, q),
        }
    }

    pub fn frame(self, p: Point) -> HorizontalFrame {
        match self {
            Side::Left => horizontal_frame(p),
            Side::Right => right_horizontal_frame(p),
        }
    }
}
