//! Small 2D geometry toolkit: vectors, oriented boxes, convex-polygon
//! overlap tests and distances.
//!
//! The simulator works at road scale (hundreds of meters) with vehicle-sized
//! footprints, so everything here is plain `f64` math with no spatial
//! indexing; scans over a handful of polygons per step are cheap.

use serde::{Deserialize, Serialize};

/// 2D vector / point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is to the left.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        self.sub(o).norm()
    }

    /// Left-hand normal of a unit direction (rotate +90°).
    pub fn left_normal(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

/// Oriented rectangle given by center, heading of the long axis, and extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obb {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl Obb {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Self { center, heading, length, width }
    }

    /// Corner points in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let t = Vec2::new(self.heading.cos(), self.heading.sin());
        let n = t.left_normal();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        [
            self.center.add(t.scale(hl)).add(n.scale(hw)),
            self.center.sub(t.scale(hl)).add(n.scale(hw)),
            self.center.sub(t.scale(hl)).sub(n.scale(hw)),
            self.center.add(t.scale(hl)).sub(n.scale(hw)),
        ]
    }
}

/// Projection interval of a point set onto an axis.
fn project_onto(axis: Vec2, pts: &[Vec2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in pts {
        let v = axis.dot(*p);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Edge normals of a convex polygon, used as candidate separating axes.
fn edge_normals(pts: &[Vec2]) -> Vec<Vec2> {
    let mut axes = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        let e = b.sub(a);
        let n = e.norm();
        if n > 1e-12 {
            axes.push(e.scale(1.0 / n).left_normal());
        }
    }
    axes
}

/// Separating-axis overlap test for two convex polygons (inclusive: touching
/// counts as overlap).
pub fn convex_overlap(a: &[Vec2], b: &[Vec2]) -> bool {
    if a.is_empty() || b.is_empty() {
        return false;
    }
    for axis in edge_normals(a).into_iter().chain(edge_normals(b)) {
        let (alo, ahi) = project_onto(axis, a);
        let (blo, bhi) = project_onto(axis, b);
        if ahi < blo || bhi < alo {
            return false;
        }
    }
    true
}

/// Distance between a point and a segment.
pub fn point_segment_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 <= 1e-18 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

fn segment_segment_dist(a1: Vec2, a2: Vec2, b1: Vec2, b2: Vec2) -> f64 {
    // Proper intersection means zero distance.
    let d1 = a2.sub(a1);
    let d2 = b2.sub(b1);
    let denom = d1.cross(d2);
    if denom.abs() > 1e-12 {
        let t = b1.sub(a1).cross(d2) / denom;
        let u = b1.sub(a1).cross(d1) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return 0.0;
        }
    }
    point_segment_dist(a1, b1, b2)
        .min(point_segment_dist(a2, b1, b2))
        .min(point_segment_dist(b1, a1, a2))
        .min(point_segment_dist(b2, a1, a2))
}

/// Boundary-to-boundary distance between two convex polygons; zero when they
/// overlap or touch.
pub fn convex_dist(a: &[Vec2], b: &[Vec2]) -> f64 {
    if convex_overlap(a, b) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..a.len() {
        let a1 = a[i];
        let a2 = a[(i + 1) % a.len()];
        for j in 0..b.len() {
            let b1 = b[j];
            let b2 = b[(j + 1) % b.len()];
            best = best.min(segment_segment_dist(a1, a2, b1, b2));
        }
    }
    best
}

/// Ray-casting point-in-polygon test (inclusive of the boundary up to
/// floating-point tolerance; works for any simple polygon).
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    if poly.len() < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (pi, pj) = (poly[i], poly[j]);
        if point_segment_dist(p, pi, pj) < 1e-9 {
            return true;
        }
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_cross = pi.x + (p.y - pi.y) / (pj.y - pi.y) * (pj.x - pi.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn obb_corners_axis_aligned() {
        let b = Obb::new(Vec2::new(1.0, 2.0), 0.0, 4.0, 2.0);
        let c = b.corners();
        assert_relative_eq!(c[0].x, 3.0, epsilon = 1e-12);
        assert_relative_eq!(c[0].y, 3.0, epsilon = 1e-12);
        assert_relative_eq!(c[2].x, -1.0, epsilon = 1e-12);
        assert_relative_eq!(c[2].y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_detects_separation_and_contact() {
        let a = Obb::new(Vec2::new(0.0, 0.0), 0.0, 4.0, 2.0).corners();
        let b = Obb::new(Vec2::new(10.0, 0.0), 0.0, 4.0, 2.0).corners();
        assert!(!convex_overlap(&a, &b));
        let c = Obb::new(Vec2::new(3.0, 0.0), 0.0, 4.0, 2.0).corners();
        assert!(convex_overlap(&a, &c));
        // Rotated box clipping the corner.
        let d = Obb::new(Vec2::new(2.5, 1.2), 0.7, 4.0, 2.0).corners();
        assert!(convex_overlap(&a, &d));
    }

    #[test]
    fn distance_between_separated_boxes() {
        let a = Obb::new(Vec2::new(0.0, 0.0), 0.0, 4.0, 2.0).corners();
        let b = Obb::new(Vec2::new(10.0, 0.0), 0.0, 4.0, 2.0).corners();
        // Facing edges are at x=2 and x=8.
        assert_relative_eq!(convex_dist(&a, &b), 6.0, epsilon = 1e-9);
        let c = Obb::new(Vec2::new(0.0, 5.0), 0.0, 4.0, 2.0).corners();
        assert_relative_eq!(convex_dist(&a, &c), 3.0, epsilon = 1e-9);
        assert_relative_eq!(convex_dist(&a, &a), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn point_in_polygon_square() {
        let sq = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(4.0, 0.0),
            Vec2::new(4.0, 4.0),
            Vec2::new(0.0, 4.0),
        ];
        assert!(point_in_polygon(Vec2::new(2.0, 2.0), &sq));
        assert!(point_in_polygon(Vec2::new(0.0, 2.0), &sq));
        assert!(!point_in_polygon(Vec2::new(5.0, 2.0), &sq));
        assert!(!point_in_polygon(Vec2::new(-0.1, 2.0), &sq));
    }
}
