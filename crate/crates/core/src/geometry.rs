//! Uncertainty ellipses.
//!
//! An [`Ellipse`] is the confidence region `{p : (p-c)^T S^-1 (p-c) <= k^2}`
//! of a Gaussian position estimate with mean `c`, covariance `S` and
//! confidence scale `k`. Overlap areas are computed by approximating both
//! boundaries with inscribed 64-gons and clipping one convex polygon against
//! the other.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;

/// Number of vertices of the inscribed polygon used for overlap areas.
pub const POLYGON_VERTICES: usize = 64;

/// Shapes with a larger eigenvalue ratio are rejected.
pub const MAX_CONDITION_NUMBER: f64 = 1e12;

/// Default confidence scale (the 2-sigma ellipse).
pub const DEFAULT_SCALE: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("shape matrix is not positive definite (eigenvalues {0:e}, {1:e})")]
    NotPositiveDefinite(f64, f64),
    #[error("shape matrix is near-singular (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

fn positive(name: &'static str, value: f64) -> Result<f64, GeometryError> {
    if !value.is_finite() {
        return Err(GeometryError::NonFinite(name));
    }
    if value <= 0.0 {
        return Err(GeometryError::NonPositive { name, value });
    }
    Ok(value)
}

/// Measurement precision of a radar in its own polar frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarNoise {
    /// Range standard deviation, metres.
    pub sigma_r: f64,
    /// Azimuth standard deviation, radians.
    pub sigma_theta: f64,
}

impl PolarNoise {
    pub fn new(sigma_r: f64, sigma_theta: f64) -> Result<Self, GeometryError> {
        positive("sigma_r", sigma_r)?;
        positive("sigma_theta", sigma_theta)?;
        Ok(Self { sigma_r, sigma_theta })
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        Self::new(self.sigma_r, self.sigma_theta).map(|_| ())
    }

    /// Both deviations multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            sigma_r: self.sigma_r * factor,
            sigma_theta: self.sigma_theta * factor,
        }
    }
}

/// Rotation used by [`measurement_covariance`]. Its first column is the
/// line-of-sight direction `(cos b, -sin b)`, i.e. the bearing `b` is
/// measured clockwise from the +x axis.
fn bearing_rotation(bearing: f64) -> Matrix2<f64> {
    let (s, c) = bearing.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Bearing of `to` as seen from `from`, in the convention of
/// [`measurement_covariance`].
pub fn bearing(from: &Vector2<f64>, to: &Vector2<f64>) -> f64 {
    let d = to - from;
    (-d.y).atan2(d.x)
}

/// Cartesian covariance of a polar measurement at range `r` and bearing
/// `bearing`: `R diag(sigma_r^2, (r sigma_theta)^2) R^T`. The azimuth
/// deviation enters as arc length.
pub fn measurement_covariance(
    r: f64,
    bearing: f64,
    noise: &PolarNoise,
) -> Result<Matrix2<f64>, GeometryError> {
    positive("range", r)?;
    noise.validate()?;
    if !bearing.is_finite() {
        return Err(GeometryError::NonFinite("bearing"));
    }
    let rot = bearing_rotation(bearing);
    let cross = r * noise.sigma_theta;
    let diag = Matrix2::new(noise.sigma_r * noise.sigma_r, 0.0, 0.0, cross * cross);
    let k = rot * diag * rot.transpose();
    // exact symmetry
    let off = 0.5 * (k[(0, 1)] + k[(1, 0)]);
    Ok(Matrix2::new(k[(0, 0)], off, off, k[(1, 1)]))
}

/// Eigenvalues `(major, minor)` of the symmetric matrix `[[a, b], [b, c]]`.
fn sym_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean + radius, mean - radius)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    center: Vector2<f64>,
    // Symmetric shape stored once: [[xx, xy], [xy, yy]].
    xx: f64,
    xy: f64,
    yy: f64,
    scale: f64,
}

impl Ellipse {
    /// Builds an ellipse. The off-diagonal of `shape` is averaged so the
    /// stored matrix is exactly symmetric.
    pub fn new(center: Vector2<f64>, shape: Matrix2<f64>, scale: f64) -> Result<Self, GeometryError> {
        if !center.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("center"));
        }
        if !shape.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite("shape"));
        }
        positive("scale", scale)?;
        let xx = shape[(0, 0)];
        let yy = shape[(1, 1)];
        let xy = 0.5 * (shape[(0, 1)] + shape[(1, 0)]);
        let (major, minor) = sym_eigenvalues(xx, xy, yy);
        if !(minor > 0.0) {
            return Err(GeometryError::NotPositiveDefinite(major, minor));
        }
        let cond = major / minor;
        if cond > MAX_CONDITION_NUMBER {
            return Err(GeometryError::IllConditioned(cond));
        }
        Ok(Self {
            center,
            xx,
            xy,
            yy,
            scale,
        })
    }

    pub fn circle(center: Vector2<f64>, radius: f64) -> Result<Self, GeometryError> {
        Self::new(center, Matrix2::identity(), radius)
    }

    pub fn center(&self) -> Vector2<f64> {
        self.center
    }

    pub fn shape(&self) -> Matrix2<f64> {
        Matrix2::new(self.xx, self.xy, self.xy, self.yy)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `(major, minor)` eigenvalues of the shape matrix.
    pub fn eigenvalues(&self) -> (f64, f64) {
        sym_eigenvalues(self.xx, self.xy, self.yy)
    }

    /// Angle of the major axis from +x, in `(-pi/2, pi/2]`.
    pub fn orientation(&self) -> f64 {
        0.5 * (2.0 * self.xy).atan2(self.xx - self.yy)
    }

    /// Semi-axis lengths `(major, minor)` in metres, including the scale.
    pub fn semi_axes(&self) -> (f64, f64) {
        let (l1, l2) = self.eigenvalues();
        (self.scale * l1.sqrt(), self.scale * l2.sqrt())
    }

    /// Half-widths of the axis-aligned bounding box.
    pub fn half_extents(&self) -> Vector2<f64> {
        Vector2::new(self.scale * self.xx.sqrt(), self.scale * self.yy.sqrt())
    }

    pub fn area(&self) -> f64 {
        ellipse_area(self)
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        ellipse_contains(self, p)
    }

    /// Vertices of the inscribed polygon, counter-clockwise. Vertex `k` sits
    /// at parameter `2 pi k / n` along the principal axes, so the polygon
    /// rotates rigidly with the ellipse.
    pub fn polygon(&self, n: usize) -> Vec<Vector2<f64>> {
        let (l1, l2) = self.eigenvalues();
        let (a, b) = (self.scale * l1.sqrt(), self.scale * l2.sqrt());
        let (s, c) = self.orientation().sin_cos();
        let u1 = Vector2::new(c, s);
        let u2 = Vector2::new(-s, c);
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                self.center + u1 * (a * t.cos()) + u2 * (b * t.sin())
            })
            .collect()
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        let lhs = [self.center.x, self.center.y, self.xx, self.xy, self.yy, self.scale];
        let rhs = [other.center.x, other.center.y, other.xx, other.xy, other.yy, other.scale];
        lhs.iter()
            .zip(rhs.iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// `pi k^2 sqrt(det S)`.
pub fn ellipse_area(e: &Ellipse) -> f64 {
    let det = e.xx * e.yy - e.xy * e.xy;
    PI * e.scale * e.scale * det.sqrt()
}

/// Boundary-inclusive membership test.
pub fn ellipse_contains(e: &Ellipse, p: &Vector2<f64>) -> bool {
    let d = p - e.center;
    let det = e.xx * e.yy - e.xy * e.xy;
    let q = (e.yy * d.x * d.x - 2.0 * e.xy * d.x * d.y + e.xx * d.y * d.y) / det;
    q <= e.scale * e.scale
}

/// Area of `a ∩ b`, via inscribed-polygon clipping. Exactly symmetric in its
/// arguments: the pair is put into a canonical order before clipping.
pub fn intersection_area(a: &Ellipse, b: &Ellipse) -> f64 {
    let (first, second) = match a.canonical_cmp(b) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    let reach = first.semi_axes().0 + second.semi_axes().0;
    if (first.center - second.center).norm() > reach {
        return 0.0;
    }
    let subject = first.polygon(POLYGON_VERTICES);
    let clip = second.polygon(POLYGON_VERTICES);
    polygon_area(&clip_convex(&subject, &clip))
}

/// Sutherland-Hodgman clipping of `subject` against the convex,
/// counter-clockwise polygon `clip`.
pub fn clip_convex(subject: &[Vector2<f64>], clip: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut output = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.len() < 3 {
            return Vec::new();
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let edge = b - a;
        let side = |p: &Vector2<f64>| edge.x * (p.y - a.y) - edge.y * (p.x - a.x);
        let input = std::mem::take(&mut output);
        let n = input.len();
        for k in 0..n {
            let cur = input[k];
            let next = input[(k + 1) % n];
            let sc = side(&cur);
            let sn = side(&next);
            if sc >= 0.0 {
                output.push(cur);
            }
            if (sc >= 0.0) != (sn >= 0.0) {
                let t = sc / (sc - sn);
                output.push(cur + (next - cur) * t);
            }
        }
    }
    output
}

/// Shoelace area (absolute value).
pub fn polygon_area(poly: &[Vector2<f64>]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let p = poly[i];
            let q = poly[(i + 1) % n];
            p.x * q.y - q.x * p.y
        })
        .sum();
    0.5 * twice.abs()
}

/// Rejection-sampling estimate of `area(a ∩ b)` over the intersection of the
/// two bounding boxes. Uses only [`ellipse_contains`], so it is independent
/// of the polygon path. Deterministic for a given `seed` regardless of
/// `exec`: samples are drawn in fixed-size chunks, each with its own stream.
pub fn monte_carlo_intersection_area(
    a: &Ellipse,
    b: &Ellipse,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> f64 {
    const CHUNK: usize = 1 << 16;
    let (ea, eb) = (a.half_extents(), b.half_extents());
    let lo = Vector2::new(
        (a.center.x - ea.x).max(b.center.x - eb.x),
        (a.center.y - ea.y).max(b.center.y - eb.y),
    );
    let hi = Vector2::new(
        (a.center.x + ea.x).min(b.center.x + eb.x),
        (a.center.y + ea.y).min(b.center.y + eb.y),
    );
    if samples == 0 || hi.x <= lo.x || hi.y <= lo.y {
        return 0.0;
    }
    let chunks = samples.div_ceil(CHUNK);
    let hits: usize = exec
        .map_range(0..chunks, |c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            (0..n)
                .filter(|_| {
                    let p = Vector2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
                    ellipse_contains(a, &p) && ellipse_contains(b, &p)
                })
                .count()
        })
        .into_iter()
        .sum();
    (hi.x - lo.x) * (hi.y - lo.y) * hits as f64 / samples as f64
}
