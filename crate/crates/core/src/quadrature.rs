//! Gauss quadrature on segments and triangles, with optional splitting of the
//! integration domain along straight discontinuity lines.
//!
//! `degree` arguments are polynomial exactness degrees. Segment rules are
//! Gauss-Legendre with `degree / 2 + 1` points; triangle rules are the
//! centroid, edge-midpoint or 12-point degree-6 symmetric rule up to degree 6
//! and a collapsed (Duffy) Gauss product rule above.

use std::ops::{Add, Mul};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geom::{signed_area, Point, Vec2};

/// 5 Gauss points per segment.
pub const DEFAULT_SEGMENT_DEGREE: usize = 9;
pub const DEFAULT_TRIANGLE_DEGREE: usize = 6;

/// Relative position along a segment below which a crossing counts as an
/// endpoint touch rather than a split.
const ENDPOINT_TOL: f64 = 1e-12;

/// Anything that can be integrated: scalars and 2-vectors.
pub trait Integrand: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {}
impl Integrand for f64 {}
impl Integrand for Vec2 {}

/// The straight line `base + R tangent`, with unit normal `normal` obtained
/// by rotating the tangent clockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpLine {
    base: Point,
    tangent: Vec2,
    normal: Vec2,
}

impl JumpLine {
    pub fn new(base: Point, tangent: Vec2) -> Result<Self> {
        let len = tangent.norm();
        if !(len > 0.0) || !len.is_finite() {
            return Err(Error::InvalidParameter("jump line tangent must be non-zero".into()));
        }
        let tangent = tangent / len;
        Ok(JumpLine { base, tangent, normal: tangent.perp_cw() })
    }

    pub fn base(&self) -> Point {
        self.base
    }

    pub fn tangent(&self) -> Vec2 {
        self.tangent
    }

    pub fn normal(&self) -> Vec2 {
        self.normal
    }

    /// Same line with both tangent and normal reversed.
    pub fn flipped(&self) -> Self {
        JumpLine { base: self.base, tangent: -self.tangent, normal: -self.normal }
    }

    #[inline]
    pub fn signed_distance(&self, x: Point) -> f64 {
        (x - self.base).dot(self.normal)
    }

    /// Parameter in (0, 1) where the open segment `a`-`b` crosses the line,
    /// ignoring touches within [`ENDPOINT_TOL`] of an endpoint.
    pub fn crossing(&self, a: Point, b: Point) -> Option<f64> {
        let da = self.signed_distance(a);
        let db = self.signed_distance(b);
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            if t > ENDPOINT_TOL && t < 1.0 - ENDPOINT_TOL {
                return Some(t);
            }
        }
        None
    }
}

fn legendre_table() -> &'static Vec<Vec<(f64, f64)>> {
    static TABLE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..=64).map(compute_gauss_legendre).collect())
}

/// Nodes and weights on [-1, 1] by Newton iteration on P_n.
fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // recompute derivative at the converged node
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        if n >= 1 {
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p1 - pm1) / (x * x - 1.0);
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Gauss-Legendre rule with `n` points on [0, 1], weights summing to 1.
pub fn gauss_legendre_unit(n: usize) -> impl Iterator<Item = (f64, f64)> {
    let n = n.clamp(1, 64);
    legendre_table()[n].iter().map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
}

fn segment_points(degree: usize) -> usize {
    degree / 2 + 1
}

/// Integral over the straight segment a-b without splitting.
fn segment_integral<T: Integrand>(f: &impl Fn(Point) -> T, a: Point, b: Point, degree: usize) -> T {
    let len = a.dist(b);
    let mut acc = T::default();
    for (t, w) in gauss_legendre_unit(segment_points(degree)) {
        acc = acc + f(a.lerp(b, t)) * (w * len);
    }
    acc
}

/// Mean value of `f` over the segment a-b, split at every interior crossing
/// with one of `lines`.
pub fn segment_average<T: Integrand>(f: impl Fn(Point) -> T, a: Point, b: Point, lines: &[JumpLine], degree: usize) -> T {
    let cuts: Vec<f64> = lines.iter().filter_map(|l| l.crossing(a, b)).collect();
    segment_average_split(f, a, b, &cuts, degree)
}

/// Mean value of `f` over the segment a-b, split at the given parameters in
/// `(0, 1)`; parameters outside are ignored.
pub fn segment_average_split<T: Integrand>(f: impl Fn(Point) -> T, a: Point, b: Point, breaks: &[f64], degree: usize) -> T {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|t| *t > 0.0 && *t < 1.0).collect();
    if cuts.is_empty() {
        let mut acc = T::default();
        for (t, w) in gauss_legendre_unit(segment_points(degree)) {
            acc = acc + f(a.lerp(b, t)) * w;
        }
        return acc;
    }
    cuts.sort_by(f64::total_cmp);
    let mut acc = T::default();
    let mut prev = 0.0;
    for t in cuts.into_iter().chain(std::iter::once(1.0)) {
        if t > prev {
            acc = acc + segment_integral(&f, a.lerp(b, prev), a.lerp(b, t), degree);
        }
        prev = t;
    }
    acc * (1.0 / a.dist(b))
}

/// Fraction of the segment a-b lying in the half-plane where the line's
/// signed distance is negative. A segment on the line counts half.
pub fn clip_side_fraction(a: Point, b: Point, line: &JumpLine) -> f64 {
    let da = line.signed_distance(a);
    let db = line.signed_distance(b);
    if da == 0.0 && db == 0.0 {
        return 0.5;
    }
    if da <= 0.0 && db <= 0.0 {
        return 1.0;
    }
    if da >= 0.0 && db >= 0.0 {
        return 0.0;
    }
    let t = da / (da - db);
    let rho = if da < 0.0 { t } else { 1.0 - t };
    rho.clamp(0.0, 1.0)
}

/// Quadrature rule on a triangle in barycentric coordinates; weights sum to 1.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<([f64; 3], f64)>,
}

impl TriangleRule {
    pub fn of_degree(degree: usize) -> TriangleRule {
        match degree {
            0 | 1 => TriangleRule { points: vec![([1.0 / 3.0; 3], 1.0)] },
            2 => TriangleRule {
                points: vec![
                    ([0.0, 0.5, 0.5], 1.0 / 3.0),
                    ([0.5, 0.0, 0.5], 1.0 / 3.0),
                    ([0.5, 0.5, 0.0], 1.0 / 3.0),
                ],
            },
            3..=6 => symmetric_degree6(),
            _ => collapsed(degree),
        }
    }
}

fn symmetric_degree6() -> TriangleRule {
    let mut points = Vec::with_capacity(12);
    for &(w, a, b) in &[
        (0.116_786_275_726_379, 0.501_426_509_658_179, 0.249_286_745_170_910),
        (0.050_844_906_370_207, 0.873_821_971_016_996, 0.063_089_014_491_502),
    ] {
        points.push(([a, b, b], w));
        points.push(([b, a, b], w));
        points.push(([b, b, a], w));
    }
    let (w, a, b, c) = (0.082_851_075_618_374, 0.053_145_049_844_817, 0.310_352_451_033_784, 0.636_502_499_121_399);
    for l in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        points.push((l, w));
    }
    // the tabulated weights carry 15 digits; renormalize so constants are exact
    let total: f64 = points.iter().map(|p| p.1).sum();
    for p in &mut points {
        p.1 /= total;
    }
    TriangleRule { points }
}

/// Conical product rule: exact for degree `degree`, any size.
fn collapsed(degree: usize) -> TriangleRule {
    let n = (degree + 3) / 2;
    let mut points = Vec::with_capacity(n * n);
    for (u, wu) in gauss_legendre_unit(n) {
        for (v, wv) in gauss_legendre_unit(n) {
            let l0 = u;
            let l1 = (1.0 - u) * v;
            points.push(([l0, l1, 1.0 - l0 - l1], 2.0 * wu * wv * (1.0 - u)));
        }
    }
    TriangleRule { points }
}

fn rule_cache(degree: usize) -> &'static TriangleRule {
    static CACHE: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=40).map(TriangleRule::of_degree).collect());
    &cache[degree.min(40)]
}

fn triangle_integral_unsplit<T: Integrand>(f: &impl Fn(Point) -> T, tri: &[Point; 3], degree: usize) -> T {
    let area = signed_area(tri[0], tri[1], tri[2]).abs();
    let mut acc = T::default();
    for &(l, w) in &rule_cache(degree).points {
        let x = tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2];
        acc = acc + f(x) * (w * area);
    }
    acc
}

/// Splits a convex polygon by a line into its non-negative and non-positive parts.
fn split_polygon(poly: &[Point], line: &JumpLine) -> (Vec<Point>, Vec<Point>) {
    let mut pos = Vec::with_capacity(poly.len() + 1);
    let mut neg = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let da = line.signed_distance(a);
        let db = line.signed_distance(b);
        if da >= 0.0 {
            pos.push(a);
        }
        if da <= 0.0 {
            neg.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let x = a.lerp(b, da / (da - db));
            pos.push(x);
            neg.push(x);
        }
    }
    (pos, neg)
}

fn polygon_area(poly: &[Point]) -> f64 {
    (1..poly.len().saturating_sub(1)).map(|i| signed_area(poly[0], poly[i], poly[i + 1])).sum()
}

/// Integral of `f` over the triangle, integrating separately on each piece
/// cut out by `lines`.
pub fn triangle_integral<T: Integrand>(f: impl Fn(Point) -> T, tri: &[Point; 3], lines: &[JumpLine], degree: usize) -> T {
    let cut = lines.iter().any(|l| {
        let d = tri.map(|p| l.signed_distance(p));
        d.iter().any(|&v| v > 0.0) && d.iter().any(|&v| v < 0.0)
    });
    if !cut {
        return triangle_integral_unsplit(&f, tri, degree);
    }
    let area = signed_area(tri[0], tri[1], tri[2]).abs();
    let mut pieces = vec![tri.to_vec()];
    for line in lines {
        let mut next = Vec::with_capacity(pieces.len() * 2);
        for p in pieces {
            let (a, b) = split_polygon(&p, line);
            for q in [a, b] {
                if q.len() >= 3 && polygon_area(&q).abs() > 1e-14 * area {
                    next.push(q);
                }
            }
        }
        pieces = next;
    }
    let mut acc = T::default();
    for p in &pieces {
        for i in 1..p.len() - 1 {
            acc = acc + triangle_integral_unsplit(&f, &[p[0], p[i], p[i + 1]], degree);
        }
    }
    acc
}

/// Mean value of `f` over the triangle.
pub fn triangle_average<T: Integrand>(f: impl Fn(Point) -> T, tri: &[Point; 3], lines: &[JumpLine], degree: usize) -> T {
    let area = signed_area(tri[0], tri[1], tri[2]).abs();
    triangle_integral(f, tri, lines, degree) * (1.0 / area)
}
