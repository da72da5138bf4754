//! Path-relative kinematics: projection of world-frame motion onto a
//! reference path (arc length `s`, signed lateral offset `d`, left positive)
//! and polynomial segment planning between path-relative states.
//!
//! Longitudinal segments are velocity-keeping quartics: they pin start
//! position/velocity/acceleration and end velocity/acceleration, leaving the
//! end displacement free. Lateral segments are quintics pinning all six
//! boundary conditions. This pairing is what both the trajectory abstraction
//! and the maneuver leaves plan with.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

/// Default lateral capture range of a path: points farther out are rejected.
pub const DEFAULT_MAX_LATERAL: f64 = 50.0;

#[derive(Debug, Error)]
pub enum FrenetError {
    #[error("degenerate reference path: {0}")]
    DegeneratePath(String),
    #[error("point is {lateral:.2} m from the path, beyond the {max:.2} m capture range")]
    PointOffPath { lateral: f64, max: f64 },
    #[error("arc length {s:.3} outside path range [0, {len:.3}]")]
    OutOfRange { s: f64, len: f64 },
    #[error("segment duration must be positive, got {duration}")]
    NonpositiveDuration { duration: f64 },
}

/// One logged sample: time plus a world-frame position. `z` is carried
/// through I/O but the planar pipeline ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// Full path-relative kinematic state at a time instant. Fields that are
/// zero in most recorded states are omitted from the serialized form so
/// that stored abstractions stay small.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrenetState {
    pub t: f64,
    pub s: f64,
    pub s_dot: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub s_ddot: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub d: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub d_dot: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub d_ddot: f64,
}

// ---------------------------------------------------------------------------
// Reference path
// ---------------------------------------------------------------------------

/// Polyline reference path with arc-length parameterization.
///
/// Positions interpolate linearly between samples while the tangent angle
/// interpolates linearly between per-vertex tangents. Projection and
/// unprojection share that one model, so the two compose to the identity to
/// floating-point accuracy for offsets well inside the curvature radius.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    points: Vec<Vec2>,
    /// Cumulative arc length at each vertex; `cum[0] == 0`.
    cum: Vec<f64>,
    /// Unwrapped tangent angle at each vertex (continuous across ±pi).
    angles: Vec<f64>,
    max_lateral: f64,
}

impl ReferencePath {
    /// Builds a path from world-frame samples. Consecutive duplicates are
    /// dropped; at least two distinct samples must remain.
    pub fn new(samples: Vec<Vec2>) -> Result<Self, FrenetError> {
        let mut points: Vec<Vec2> = Vec::with_capacity(samples.len());
        for p in samples {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(FrenetError::DegeneratePath("non-finite sample".into()));
            }
            if points.last().map_or(true, |q: &Vec2| q.dist(p) > 1e-9) {
                points.push(p);
            }
        }
        if points.len() < 2 {
            return Err(FrenetError::DegeneratePath(
                "need at least two distinct samples".into(),
            ));
        }

        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for i in 1..points.len() {
            cum.push(cum[i - 1] + points[i].dist(points[i - 1]));
        }

        // Per-vertex tangents: central direction inside, one-sided at ends,
        // unwrapped so interpolation never crosses a ±pi seam.
        let mut angles = Vec::with_capacity(points.len());
        for i in 0..points.len() {
            let dir = if i == 0 {
                points[1].sub(points[0])
            } else if i == points.len() - 1 {
                points[i].sub(points[i - 1])
            } else {
                points[i + 1].sub(points[i - 1])
            };
            let raw = dir.y.atan2(dir.x);
            let unwrapped = match angles.last() {
                None => raw,
                Some(prev) => {
                    let mut delta = raw - prev;
                    while delta > std::f64::consts::PI {
                        delta -= 2.0 * std::f64::consts::PI;
                    }
                    while delta < -std::f64::consts::PI {
                        delta += 2.0 * std::f64::consts::PI;
                    }
                    prev + delta
                }
            };
            angles.push(unwrapped);
        }

        Ok(Self { points, cum, angles, max_lateral: DEFAULT_MAX_LATERAL })
    }

    /// Overrides the lateral capture range used by [`project`].
    pub fn with_max_lateral(mut self, max_lateral: f64) -> Self {
        self.max_lateral = max_lateral;
        self
    }

    pub fn len(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn max_lateral(&self) -> f64 {
        self.max_lateral
    }

    /// Index of the segment containing arc length `s` (clamped to the ends).
    fn segment_index(&self, s: f64) -> usize {
        match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.points.len() - 2),
        }
    }

    /// Centerline position at arc length `s` (linear between samples).
    pub fn position_at(&self, s: f64) -> Vec2 {
        let i = self.segment_index(s);
        let seg_len = self.cum[i + 1] - self.cum[i];
        let u = if seg_len > 0.0 { (s - self.cum[i]) / seg_len } else { 0.0 };
        self.points[i].add(self.points[i + 1].sub(self.points[i]).scale(u))
    }

    /// Tangent angle at arc length `s` (linear between vertex tangents).
    pub fn tangent_angle(&self, s: f64) -> f64 {
        let i = self.segment_index(s);
        let seg_len = self.cum[i + 1] - self.cum[i];
        let u = if seg_len > 0.0 {
            ((s - self.cum[i]) / seg_len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        self.angles[i] + u * (self.angles[i + 1] - self.angles[i])
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent_at(&self, s: f64) -> Vec2 {
        let a = self.tangent_angle(s);
        Vec2::new(a.cos(), a.sin())
    }

    /// Longitudinal/lateral coordinates of a world point.
    ///
    /// Finds the arc length where the point sits on the local normal, i.e.
    /// the root of `(p - q(s)) . t(s) = 0`, then signs the offset by which
    /// side of the tangent the point falls on.
    pub fn locate(&self, p: Vec2) -> (f64, f64) {
        // Seed with the closest naive per-segment foot.
        let mut best = f64::INFINITY;
        let mut s0 = 0.0;
        for i in 0..self.points.len() - 1 {
            let a = self.points[i];
            let b = self.points[i + 1];
            let ab = b.sub(a);
            let len2 = ab.dot(ab);
            let t = if len2 > 0.0 { (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let foot = a.add(ab.scale(t));
            let dist = p.dist(foot);
            if dist < best {
                best = dist;
                s0 = self.cum[i] + t * len2.sqrt();
            }
        }

        let f = |s: f64| p.sub(self.position_at(s)).dot(self.tangent_at(s));
        let total = self.len();

        // Expand a bracket around the seed until the alignment function
        // changes sign, then bisect. `f` is strictly decreasing for offsets
        // inside the curvature radius, so the root is unique.
        let step = (best.abs() + 1.0).max(total / (self.points.len() as f64));
        let mut lo = (s0 - step).max(0.0);
        let mut hi = (s0 + step).min(total);
        let mut grow = step;
        while f(lo) < 0.0 && lo > 0.0 {
            grow *= 2.0;
            lo = (lo - grow).max(0.0);
        }
        while f(hi) > 0.0 && hi < total {
            grow *= 2.0;
            hi = (hi + grow).min(total);
        }

        let s = if f(lo) <= 0.0 {
            lo // clamped before the path start
        } else if f(hi) >= 0.0 {
            hi // clamped past the path end
        } else {
            let (mut lo, mut hi) = (lo, hi);
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };

        let d = self.tangent_at(s).cross(p.sub(self.position_at(s)));
        (s, d)
    }
}

// ---------------------------------------------------------------------------
// Projection / unprojection
// ---------------------------------------------------------------------------

/// Projects a logged sample with world-frame velocity and acceleration onto
/// the path. Derivatives are the tangential/normal components of the input
/// vectors; curvature coupling is deliberately ignored at road scale.
pub fn project(
    p: &TrajectoryPoint,
    velocity: Vec2,
    acceleration: Vec2,
    path: &ReferencePath,
) -> Result<FrenetState, FrenetError> {
    let (s, d) = path.locate(Vec2::new(p.x, p.y));
    if d.abs() > path.max_lateral {
        return Err(FrenetError::PointOffPath { lateral: d.abs(), max: path.max_lateral });
    }
    let t = path.tangent_at(s);
    let n = t.left_normal();
    Ok(FrenetState {
        t: p.t,
        s,
        s_dot: velocity.dot(t),
        s_ddot: acceleration.dot(t),
        d,
        d_dot: velocity.dot(n),
        d_ddot: acceleration.dot(n),
    })
}

/// World-frame position for path coordinates `(s, d)`.
pub fn unproject(s: f64, d: f64, path: &ReferencePath) -> Result<Vec2, FrenetError> {
    let len = path.len();
    if !(-1e-9..=len + 1e-9).contains(&s) {
        return Err(FrenetError::OutOfRange { s, len });
    }
    let s = s.clamp(0.0, len);
    let q = path.position_at(s);
    let n = path.tangent_at(s).left_normal();
    Ok(q.add(n.scale(d)))
}

// ---------------------------------------------------------------------------
// Polynomial segments
// ---------------------------------------------------------------------------

/// Velocity-keeping quartic: start position/velocity/acceleration plus end
/// velocity/acceleration; the end displacement falls out of the solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticSegment {
    a: [f64; 5],
    pub duration: f64,
}

impl QuarticSegment {
    pub fn velocity_keeping(
        xs: f64,
        vxs: f64,
        axs: f64,
        vxe: f64,
        axe: f64,
        duration: f64,
    ) -> Result<Self, FrenetError> {
        if duration <= 0.0 {
            return Err(FrenetError::NonpositiveDuration { duration });
        }
        let t = duration;
        let a0 = xs;
        let a1 = vxs;
        let a2 = axs / 2.0;
        // [ 3t^2  4t^3 ] [a3]   [ vxe - a1 - 2 a2 t ]
        // [ 6t   12t^2 ] [a4] = [ axe - 2 a2        ]
        let b0 = vxe - a1 - 2.0 * a2 * t;
        let b1 = axe - 2.0 * a2;
        let det = 3.0 * t * t * 12.0 * t * t - 4.0 * t * t * t * 6.0 * t; // 12 t^4
        let a3 = (12.0 * t * t * b0 - 4.0 * t * t * t * b1) / det;
        let a4 = (-6.0 * t * b0 + 3.0 * t * t * b1) / det;
        Ok(Self { a: [a0, a1, a2, a3, a4], duration })
    }

    pub fn value(&self, t: f64) -> f64 {
        let a = &self.a;
        a[0] + a[1] * t + a[2] * t.powi(2) + a[3] * t.powi(3) + a[4] * t.powi(4)
    }

    pub fn first(&self, t: f64) -> f64 {
        let a = &self.a;
        a[1] + 2.0 * a[2] * t + 3.0 * a[3] * t.powi(2) + 4.0 * a[4] * t.powi(3)
    }

    pub fn second(&self, t: f64) -> f64 {
        let a = &self.a;
        2.0 * a[2] + 6.0 * a[3] * t + 12.0 * a[4] * t.powi(2)
    }

    pub fn coefficients(&self) -> [f64; 5] {
        self.a
    }
}

/// Quintic with all six boundary conditions pinned; used for the lateral
/// axis where the end offset matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuinticSegment {
    a: [f64; 6],
    pub duration: f64,
}

impl QuinticSegment {
    #[allow(clippy::too_many_arguments)]
    pub fn boundary(
        xs: f64,
        vxs: f64,
        axs: f64,
        xe: f64,
        vxe: f64,
        axe: f64,
        duration: f64,
    ) -> Result<Self, FrenetError> {
        if duration <= 0.0 {
            return Err(FrenetError::NonpositiveDuration { duration });
        }
        let t = duration;
        let a0 = xs;
        let a1 = vxs;
        let a2 = axs / 2.0;
        let m = Matrix3::new(
            t.powi(3),
            t.powi(4),
            t.powi(5),
            3.0 * t.powi(2),
            4.0 * t.powi(3),
            5.0 * t.powi(4),
            6.0 * t,
            12.0 * t.powi(2),
            20.0 * t.powi(3),
        );
        let b = Vector3::new(
            xe - a0 - a1 * t - a2 * t.powi(2),
            vxe - a1 - 2.0 * a2 * t,
            axe - 2.0 * a2,
        );
        let inv = m
            .try_inverse()
            .ok_or(FrenetError::NonpositiveDuration { duration })?;
        let x = inv * b;
        Ok(Self { a: [a0, a1, a2, x[0], x[1], x[2]], duration })
    }

    pub fn value(&self, t: f64) -> f64 {
        let a = &self.a;
        a[0] + a[1] * t
            + a[2] * t.powi(2)
            + a[3] * t.powi(3)
            + a[4] * t.powi(4)
            + a[5] * t.powi(5)
    }

    pub fn first(&self, t: f64) -> f64 {
        let a = &self.a;
        a[1] + 2.0 * a[2] * t
            + 3.0 * a[3] * t.powi(2)
            + 4.0 * a[4] * t.powi(3)
            + 5.0 * a[5] * t.powi(4)
    }

    pub fn second(&self, t: f64) -> f64 {
        let a = &self.a;
        2.0 * a[2] + 6.0 * a[3] * t + 12.0 * a[4] * t.powi(2) + 20.0 * a[5] * t.powi(3)
    }

    pub fn coefficients(&self) -> [f64; 6] {
        self.a
    }
}

/// Planned motion between two path-relative states: quartic longitudinal,
/// quintic lateral, both over the same duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedSegment {
    pub lon: QuarticSegment,
    pub lat: QuinticSegment,
    pub duration: f64,
}

impl PlannedSegment {
    /// State along the plan at `tau` seconds after the segment start;
    /// `t_abs` is the absolute timestamp to stamp on the result.
    pub fn state_at(&self, t_abs: f64, tau: f64) -> FrenetState {
        FrenetState {
            t: t_abs,
            s: self.lon.value(tau),
            s_dot: self.lon.first(tau),
            s_ddot: self.lon.second(tau),
            d: self.lat.value(tau),
            d_dot: self.lat.first(tau),
            d_ddot: self.lat.second(tau),
        }
    }
}

/// Plans the quartic/quintic pair joining two states; the end longitudinal
/// displacement is free by construction.
pub fn plan_segment(a: &FrenetState, b: &FrenetState) -> Result<PlannedSegment, FrenetError> {
    let duration = b.t - a.t;
    if duration <= 0.0 {
        return Err(FrenetError::NonpositiveDuration { duration });
    }
    let lon = QuarticSegment::velocity_keeping(a.s, a.s_dot, a.s_ddot, b.s_dot, b.s_ddot, duration)?;
    let lat = QuinticSegment::boundary(a.d, a.d_dot, a.d_ddot, b.d, b.d_dot, b.d_ddot, duration)?;
    Ok(PlannedSegment { lon, lat, duration })
}

// ---------------------------------------------------------------------------
// Partition cost
// ---------------------------------------------------------------------------

/// Component weights for the segment-fit cost. Defaults to all ones: every
/// kinematic component counts equally, with no unit normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub s: f64,
    pub s_dot: f64,
    pub s_ddot: f64,
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { s: 1.0, s_dot: 1.0, s_ddot: 1.0, d: 1.0, d_dot: 1.0, d_ddot: 1.0 }
    }
}

/// Sum over the sampled states of the squared weighted mismatch between each
/// state and the plan evaluated at the same relative time. Time itself is
/// not a compared component. The plan is taken to start at `states[0].t`.
pub fn partition_cost(states: &[FrenetState], seg: &PlannedSegment, w: &CostWeights) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    let t0 = states[0].t;
    let mut cost = 0.0;
    for st in states {
        let p = seg.state_at(st.t, st.t - t0);
        cost += w.s * (st.s - p.s).powi(2)
            + w.s_dot * (st.s_dot - p.s_dot).powi(2)
            + w.s_ddot * (st.s_ddot - p.s_ddot).powi(2)
            + w.d * (st.d - p.d).powi(2)
            + w.d_dot * (st.d_dot - p.d_dot).powi(2)
            + w.d_ddot * (st.d_ddot - p.d_ddot).powi(2);
    }
    cost
}
