//! Spheres, horizontal planes and circles in 3D, their intersections and
//! closest-point queries.

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::{Error, Point3, Result};

/// Surfaces closer than this (meters) are treated as touching.
pub const TOUCH_TOL: f64 = 1e-9;

/// Up to two intersection points.
pub type Points2 = ArrayVec<Point3, 2>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Point3, radius: f64) -> Self {
        Sphere { center, radius }
    }

    pub fn is_bounded(&self) -> bool {
        self.radius.is_finite()
    }

    /// Membership in the closed ball, with a tolerance scaled to the radius.
    pub fn contains(&self, p: &Point3) -> bool {
        (p - self.center).norm() <= self.radius + tolerance(self.radius)
    }

    /// Signed distance from `p` to the ball boundary, positive inside.
    pub fn slack(&self, p: &Point3) -> f64 {
        self.radius - (p - self.center).norm()
    }

    /// True when `other` lies entirely within this ball.
    pub fn contains_ball(&self, other: &Sphere) -> bool {
        (other.center - self.center).norm() + other.radius <= self.radius + TOUCH_TOL
    }

    fn same_as(&self, other: &Sphere) -> bool {
        (self.center - other.center).norm() <= TOUCH_TOL
            && (self.radius - other.radius).abs() <= TOUCH_TOL
    }
}

/// Absolute touching tolerance for a surface of the given scale.
pub(crate) fn tolerance(scale: f64) -> f64 {
    TOUCH_TOL + 1e-12 * scale.abs()
}

/// Removes spheres that are identical to an earlier one.
pub fn dedup_spheres(spheres: &[Sphere]) -> Vec<Sphere> {
    let mut out: Vec<Sphere> = Vec::with_capacity(spheres.len());
    for s in spheres {
        if !out.iter().any(|o| o.same_as(s)) {
            out.push(*s);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle3D {
    pub center: Point3,
    pub radius: f64,
    pub unit_normal: Point3,
}

impl Circle3D {
    pub fn horizontal(center: Point3, radius: f64) -> Self {
        Circle3D {
            center,
            radius,
            unit_normal: Point3::z(),
        }
    }

    pub fn is_horizontal(&self) -> bool {
        (self.unit_normal.z.abs() - 1.0).abs() <= 1e-12
    }

    /// Membership in the closed disc bounded by a horizontal circle, ignoring height.
    pub fn disc_contains_xy(&self, p: &Point3) -> bool {
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        (dx * dx + dy * dy).sqrt() <= self.radius + tolerance(self.radius)
    }

    /// First in-plane basis vector, used for deterministic tie-breaks.
    pub fn first_basis(&self) -> Point3 {
        let n = self.unit_normal;
        let e = if n.x.abs() > 0.9 {
            Point3::y()
        } else {
            Point3::x()
        };
        (e - n * e.dot(&n)).normalize()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereRelation {
    /// The balls share no point.
    Disjoint,
    /// Ball `a` lies strictly inside ball `b`.
    AInsideB,
    BInsideA,
    /// The spheres meet on a circle; a tangency gives a zero-radius circle.
    Intersect(Circle3D),
}

pub fn sphere_sphere_relation(a: &Sphere, b: &Sphere) -> SphereRelation {
    let delta = b.center - a.center;
    let d = delta.norm();
    let tol = tolerance(a.radius.max(b.radius));
    if d > a.radius + b.radius + tol {
        return SphereRelation::Disjoint;
    }
    if d + a.radius < b.radius - tol {
        return SphereRelation::AInsideB;
    }
    if d + b.radius < a.radius - tol {
        return SphereRelation::BInsideA;
    }
    if d <= tol {
        // identical spheres; callers deduplicate before asking
        return SphereRelation::AInsideB;
    }
    let n = delta / d;
    let along = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
    let tangent =
        (d - (a.radius + b.radius)).abs() <= tol || (d - (a.radius - b.radius).abs()).abs() <= tol;
    let radius = if tangent {
        0.0
    } else {
        ((a.radius - along) * (a.radius + along)).max(0.0).sqrt()
    };
    SphereRelation::Intersect(Circle3D {
        center: a.center + n * along,
        radius,
        unit_normal: n,
    })
}

/// Intersection of a sphere with the horizontal plane `z = z0`.
pub fn sphere_plane_intersection(s: &Sphere, z0: f64) -> Option<Circle3D> {
    let dz = (z0 - s.center.z).abs();
    if dz > s.radius + tolerance(s.radius) {
        return None;
    }
    let radius = ((s.radius - dz) * (s.radius + dz)).max(0.0).sqrt();
    Some(Circle3D::horizontal(
        Point3::new(s.center.x, s.center.y, z0),
        radius,
    ))
}

/// Intersection points of two circles lying in the same horizontal plane.
pub fn circle_circle_points(a: &Circle3D, b: &Circle3D) -> Result<Points2> {
    let scale = 1.0 + a.center.z.abs().max(b.center.z.abs());
    if !a.is_horizontal() || !b.is_horizontal() || (a.center.z - b.center.z).abs() > 1e-12 * scale {
        return Err(Error::Contract(
            "circle_circle_points needs circles in one horizontal plane".into(),
        ));
    }
    Ok(coplanar_circle_points(
        &a.center,
        a.radius,
        &b.center,
        b.radius,
        &Point3::z(),
    ))
}

/// Intersection points of two circles sharing the plane with normal `n`.
fn coplanar_circle_points(c1: &Point3, r1: f64, c2: &Point3, r2: f64, n: &Point3) -> Points2 {
    let mut out = Points2::new();
    let raw = c2 - c1;
    let delta = raw - n * raw.dot(n);
    let d = delta.norm();
    let tol = tolerance(r1.max(r2));
    if d <= tol {
        if r1 <= tol && r2 <= tol {
            out.push(*c1);
        }
        return out;
    }
    if d > r1 + r2 + tol || d < (r1 - r2).abs() - tol {
        return out;
    }
    let e = delta / d;
    let along = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let foot = c1 + e * along;
    if (d - (r1 + r2)).abs() <= tol || (d - (r1 - r2).abs()).abs() <= tol {
        out.push(foot);
        return out;
    }
    let h = ((r1 - along) * (r1 + along)).max(0.0).sqrt();
    let f = n.cross(&e);
    out.push(foot + f * h);
    out.push(foot - f * h);
    out
}

/// Points common to three spheres.
pub fn triple_sphere_points(a: &Sphere, b: &Sphere, c: &Sphere) -> Points2 {
    let SphereRelation::Intersect(circle) = sphere_sphere_relation(a, b) else {
        return Points2::new();
    };
    let n = circle.unit_normal;
    let t = (c.center - circle.center).dot(&n);
    if t.abs() > c.radius + tolerance(c.radius) {
        return Points2::new();
    }
    let r2 = ((c.radius - t.abs()) * (c.radius + t.abs()))
        .max(0.0)
        .sqrt();
    let m2 = c.center - n * t;
    coplanar_circle_points(&circle.center, circle.radius, &m2, r2, &n)
}

pub fn closest_point_on_sphere(s: &Sphere, x: &Point3) -> Point3 {
    let v = x - s.center;
    let len = v.norm();
    if len == 0.0 {
        return s.center + Point3::x() * s.radius;
    }
    s.center + v * (s.radius / len)
}

pub fn closest_point_on_circle(c: &Circle3D, x: &Point3) -> Point3 {
    let n = c.unit_normal;
    let w = x - c.center;
    let in_plane = w - n * w.dot(&n);
    let len = in_plane.norm();
    if len <= 1e-12 * (1.0 + w.norm()) {
        return c.center + c.first_basis() * c.radius;
    }
    c.center + in_plane * (c.radius / len)
}

/// Point of the circle with the smallest altitude.
pub fn lowest_point_on_circle(c: &Circle3D) -> Point3 {
    closest_point_on_circle(c, &(c.center - Point3::z() * (c.radius + 1.0)))
}

/// Euclidean projection of `x` onto `ball ∩ {h_min <= z <= h_max}`; `None` when empty.
pub fn project_onto_ball_slab(ball: &Sphere, h_min: f64, h_max: f64, x: &Point3) -> Option<Point3> {
    let in_slab = |p: &Point3| p.z >= h_min - TOUCH_TOL && p.z <= h_max + TOUCH_TOL;
    let mut candidates: ArrayVec<Point3, 5> = ArrayVec::new();
    candidates.push(*x);
    candidates.push(Point3::new(x.x, x.y, x.z.clamp(h_min, h_max)));
    if ball.is_bounded() {
        candidates.push(closest_point_on_sphere(ball, x));
        for z0 in [h_min, h_max] {
            if let Some(c) = sphere_plane_intersection(ball, z0) {
                candidates.push(closest_point_on_circle(&c, x));
            }
        }
    }
    candidates
        .into_iter()
        .filter(|p| in_slab(p) && ball.contains(p))
        .min_by(|a, b| (a - x).norm().total_cmp(&(b - x).norm()))
}
