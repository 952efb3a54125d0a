//! Small planar geometry kit used by the support check.
//!
//! Support regions live in the horizontal plane. Points are `(x, z)` pairs
//! taken from world coordinates (Y is up).

use nalgebra::{UnitQuaternion, Vector2, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Rotation = UnitQuaternion<f64>;
pub type Point2 = Vector2<f64>;

/// World up.
pub fn up() -> Vec3 {
    Vec3::y()
}

/// Angle in radians between two (not necessarily unit) vectors.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0).acos()
}

/// Axis-aligned bounding box in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    /// Bounding box of a box with full `extents`, rotated by `rotation` and
    /// centered at `center`.
    pub fn of_box(center: &Vec3, extents: &Vec3, rotation: &Rotation) -> Self {
        let half = extents * 0.5;
        let m = rotation.to_rotation_matrix();
        let m = m.matrix();
        let mut reach = Vec3::zeros();
        for row in 0..3 {
            reach[row] = (0..3).map(|col| m[(row, col)].abs() * half[col]).sum();
        }
        Aabb {
            min: center - reach,
            max: center + reach,
        }
    }

    /// Penetration depth along each axis; negative components mean a gap.
    pub fn overlap(&self, other: &Aabb) -> Vec3 {
        Vec3::new(
            self.max.x.min(other.max.x) - self.min.x.max(other.min.x),
            self.max.y.min(other.max.y) - self.min.y.max(other.min.y),
            self.max.z.min(other.max.z) - self.min.z.max(other.min.z),
        )
    }

    /// True when the boxes interpenetrate by more than `tolerance` on every axis.
    pub fn penetrates(&self, other: &Aabb, tolerance: f64) -> bool {
        let o = self.overlap(other);
        o.x > tolerance && o.y > tolerance && o.z > tolerance
    }

    /// True when the horizontal projections overlap by more than `tolerance`.
    pub fn overlaps_horizontally(&self, other: &Aabb, tolerance: f64) -> bool {
        let o = self.overlap(other);
        o.x > tolerance && o.z > tolerance
    }

    /// Shortest horizontal gap between the two projections (0 when touching
    /// or overlapping).
    pub fn horizontal_gap(&self, other: &Aabb) -> f64 {
        let o = self.overlap(other);
        let gx = (-o.x).max(0.0);
        let gz = (-o.z).max(0.0);
        (gx * gx + gz * gz).sqrt()
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn horizontal_polygon(&self) -> Polygon {
        Polygon::new(vec![
            Point2::new(self.min.x, self.min.z),
            Point2::new(self.max.x, self.min.z),
            Point2::new(self.max.x, self.max.z),
            Point2::new(self.min.x, self.max.z),
        ])
    }
}

/// Convex polygon with counter-clockwise vertices in the `(x, z)` plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

fn cross(o: &Point2, a: &Point2, b: &Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl Polygon {
    /// Builds a polygon, reordering the vertices counter-clockwise.
    pub fn new(vertices: Vec<Point2>) -> Self {
        let mut p = Polygon { vertices };
        if p.signed_area() < 0.0 {
            p.vertices.reverse();
        }
        p
    }

    /// Rectangle centered at `center` with the given half-extents, spun by
    /// `yaw` radians about the vertical axis.
    pub fn rect(center: Point2, half: Point2, yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        Polygon::new(
            corners
                .iter()
                .map(|&(sx, sz)| {
                    let lx = sx * half.x;
                    let lz = sz * half.y;
                    Point2::new(center.x + c * lx - s * lz, center.y + s * lx + c * lz)
                })
                .collect(),
        )
    }

    /// Regular `segments`-gon inscribed in the circle of `radius`.
    pub fn disk(center: Point2, radius: f64, segments: usize) -> Self {
        let segments = segments.max(3);
        Polygon::new(
            (0..segments)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / segments as f64;
                    Point2::new(center.x + radius * t.cos(), center.y + radius * t.sin())
                })
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() < 3 || self.area() <= 1e-12
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        acc * 0.5
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Point-in-convex-polygon test. Points within `eps` of an edge count as
    /// inside.
    pub fn contains(&self, p: &Point2, eps: f64) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            let edge = b - a;
            let len = edge.norm();
            if len == 0.0 {
                continue;
            }
            // signed distance, positive on the inner (left) side
            let d = cross(a, b, p) / len;
            if d < -eps {
                return false;
            }
        }
        true
    }

    /// Intersection with another convex polygon (Sutherland-Hodgman).
    pub fn clip(&self, clipper: &Polygon) -> Polygon {
        let mut output = self.vertices.clone();
        let n = clipper.vertices.len();
        for i in 0..n {
            if output.is_empty() {
                break;
            }
            let a = clipper.vertices[i];
            let b = clipper.vertices[(i + 1) % n];
            let input = std::mem::take(&mut output);
            let m = input.len();
            for j in 0..m {
                let cur = input[j];
                let prev = input[(j + m - 1) % m];
                let cur_in = cross(&a, &b, &cur) >= 0.0;
                let prev_in = cross(&a, &b, &prev) >= 0.0;
                if cur_in {
                    if !prev_in {
                        output.push(line_intersection(&prev, &cur, &a, &b));
                    }
                    output.push(cur);
                } else if prev_in {
                    output.push(line_intersection(&prev, &cur, &a, &b));
                }
            }
        }
        Polygon { vertices: output }
    }
}

fn line_intersection(p: &Point2, q: &Point2, a: &Point2, b: &Point2) -> Point2 {
    let r = q - p;
    let s = b - a;
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-15 {
        return *q;
    }
    let t = ((a.x - p.x) * s.y - (a.y - p.y) * s.x) / denom;
    p + r * t
}

/// Convex hull of a point cloud (Andrew's monotone chain), counter-clockwise.
pub fn convex_hull(points: &[Point2]) -> Polygon {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12);
    if pts.len() < 3 {
        return Polygon { vertices: pts };
    }
    let mut lower: Vec<Point2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    Polygon { vertices: lower }
}
