//! Error quantities, convergence orders and measurements of the RT0
//! interpolant of singular dual fields: the sup-norm excess over the unit
//! ball, the closed-form interpolant on an element cut by one line and a
//! classifier for sufficient conditions that bound it.

use crate::benchmarks::{exact_dual, exact_dual_on, jump_lines, singular_crossings, BenchmarkSpec, Branch};
use crate::error::{Error, Result};
use crate::exec;
use crate::fespace::{rt0_local_on, rt_interpolate, rt_interpolate_fn, CrFunction, Rt0Field, Rt0Local};
use crate::geom::{solve2, Point, Vec2};
use crate::mesh::Mesh;
use crate::quadrature::{clip_side_fraction, segment_average_split, JumpLine};

/// Gauss degree for side means of the dual fields.
pub const DUAL_SIDE_DEGREE: usize = 19;

/// `sum_T |T| (u(x_T) - u_h(x_T))^2`
pub fn midpoint_error_sq(mesh: &Mesh, exact: impl Fn(Point) -> f64 + Sync + Send, u: &CrFunction) -> f64 {
    let (area, xt) = (mesh.areas(), mesh.barycenters());
    exec::sum(mesh.num_triangles(), |t| {
        let d = exact(xt[t]) - u.barycenter_value(mesh, t);
        area[t] * d * d
    })
}

/// `log(e_{k-1}/e_k) / log(h_{k-1}/h_k)`; the first entry and entries next to
/// a non-positive or non-finite error are `None`.
pub fn eoc(errors: &[f64], h: &[f64]) -> Vec<Option<f64>> {
    let ok = |v: f64| v > 0.0 && v.is_finite();
    (0..errors.len())
        .map(|k| {
            if k == 0 || k >= h.len() || !ok(errors[k]) || !ok(errors[k - 1]) || !ok(h[k]) || !ok(h[k - 1]) || h[k] == h[k - 1] {
                return None;
            }
            Some((errors[k - 1] / errors[k]).ln() / (h[k - 1] / h[k]).ln())
        })
        .collect()
}

/// Least-squares slope of `log(value)` against `log(h)` over entries with
/// `value > 1e-12`; `None` with fewer than two such entries.
pub fn fit_exponent(h: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h.iter().zip(values).filter(|(_, &v)| v > 1e-12).map(|(&h, &v)| (h.ln(), v.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Barycenter values of an RT0 interpolant measured against the unit ball.
#[derive(Clone, Debug)]
pub struct InterpCheck {
    /// `max_T |(I_RT z)(x_T)|`
    pub sup_norm: f64,
    /// Per element `max(0, |(I_RT z)(x_T)| - 1)`.
    pub excess: Vec<f64>,
}

impl InterpCheck {
    pub fn of_field(mesh: &Mesh, z: &Rt0Field) -> Self {
        let moduli = exec::map_indices(mesh.num_triangles(), |t| z.local(mesh, t).at_center.norm());
        let sup_norm = moduli.iter().fold(0.0, |m: f64, v| m.max(*v));
        InterpCheck { sup_norm, excess: moduli.into_iter().map(|v| (v - 1.0).max(0.0)).collect() }
    }

    /// `max(0, sup_norm - 1)`
    pub fn kappa(&self) -> f64 {
        (self.sup_norm - 1.0).max(0.0)
    }
}

/// RT0 interpolant of the benchmark dual with side means split at its jump
/// lines and disk boundaries.
pub fn interpolate_dual(mesh: &Mesh, spec: &BenchmarkSpec) -> Rt0Field {
    rt_interpolate(mesh, |s| {
        let [a, b] = mesh.side_endpoints(s);
        let breaks = singular_crossings(spec, a, b);
        segment_average_split(|x| exact_dual(spec, x), a, b, &breaks, DUAL_SIDE_DEGREE).dot(mesh.side_normals()[s])
    })
}

/// `||Pi_h I_RT z~||_inf` for the benchmark dual, with the per-element excess.
pub fn interp_sup_norm(mesh: &Mesh, spec: &BenchmarkSpec) -> InterpCheck {
    InterpCheck::of_field(mesh, &interpolate_dual(mesh, spec))
}

/// `kappa(h) = max(0, ||Pi_h I_RT z||_inf - 1)` for a field whose
/// discontinuities lie on `lines`.
pub fn hoelder_kappa(mesh: &Mesh, z: impl Fn(Point) -> Vec2 + Sync + Send, lines: &[JumpLine]) -> f64 {
    InterpCheck::of_field(mesh, &rt_interpolate_fn(mesh, z, lines, DUAL_SIDE_DEGREE)).kappa()
}

/// Point of the triangle minimizing `|field(x)|` for an affine field
/// `a + c (x - x_T)`: the zero of the field if it lies inside, otherwise the
/// point of the triangle nearest to it.
pub fn min_modulus_point(field: &Rt0Local, corners: &[Point; 3]) -> Point {
    let c = 0.5 * field.div;
    if c == 0.0 {
        return field.center;
    }
    let zero = field.center - field.at_center / c;
    closest_point_on_triangle(corners, zero)
}

fn closest_point_on_triangle(p: &[Point; 3], x: Point) -> Point {
    let inside = (0..3).all(|i| (p[(i + 1) % 3] - p[i]).cross(x - p[i]) >= 0.0);
    if inside {
        return x;
    }
    let mut best = p[0];
    for i in 0..3 {
        let (a, b) = (p[i], p[(i + 1) % 3]);
        let d = b - a;
        let s = ((x - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
        let q = a + d * s;
        if q.dist(x) < best.dist(x) {
            best = q;
        }
    }
    best
}

/// The element-wise bound `|Pi_h I z| <= |I z(x~_T)| + 1/2 |div I z| h_T`
/// evaluated for one element; returns `(lhs, rhs)`.
pub fn elementwise_bound(mesh: &Mesh, z: &Rt0Field, t: usize) -> (f64, f64) {
    let local = z.local(mesh, t);
    let corners = mesh.corners(t);
    let x = min_modulus_point(&local, &corners);
    (local.at_center.norm(), local.eval(x).norm() + 0.5 * local.div.abs() * mesh.diameters()[t])
}

/// Two-valued field on a triangle cut by one line: `z_plus` where the line's
/// signed distance is positive, `z_minus` where it is negative.
#[derive(Clone, Copy, Debug)]
pub struct CutElement {
    pub corners: [Point; 3],
    pub line: JumpLine,
    pub z_plus: Vec2,
    pub z_minus: Vec2,
}

/// The quantities entering the closed-form interpolant for one choice of
/// crossed side `S1` and uncut side `S2`.
#[derive(Clone, Copy, Debug)]
pub struct CutFrame {
    /// Unit normals of `S1` and `S2` (outward).
    pub n1: Vec2,
    pub n2: Vec2,
    /// Line tangent.
    pub t: Vec2,
    /// Value on the side of the line containing `S2`.
    pub z_b: Vec2,
    /// Value on the other side.
    pub z_a: Vec2,
    /// Fraction of `S1` on the `S2` side.
    pub rho: f64,
    /// `M^{-T} e1` for `M = (n1, n2)`.
    pub m_inv_t_e1: Vec2,
    /// `M^{-T} e2`.
    pub m_inv_t_e2: Vec2,
}

impl CutFrame {
    /// `z_b + (1 - rho)((z_a - z_b) . t)(t . n1) M^{-T} e1`
    pub fn interpolant(&self) -> Vec2 {
        self.z_b + self.m_inv_t_e1 * ((1.0 - self.rho) * (self.z_a - self.z_b).dot(self.t) * self.t.dot(self.n1))
    }

    /// Frobenius norm of `M^{-T} - M`.
    pub fn orthogonality_defect(&self) -> f64 {
        let c0 = self.m_inv_t_e1 - self.n1;
        let c1 = self.m_inv_t_e2 - self.n2;
        (c0.norm_sq() + c1.norm_sq()).sqrt()
    }
}

fn side_points(corners: &[Point; 3], i: usize) -> (Point, Point) {
    (corners[(i + 1) % 3], corners[(i + 2) % 3])
}

impl CutElement {
    /// Relative normal-continuity tolerance of `z_plus` and `z_minus`.
    const CONTINUITY_TOL: f64 = 1e-10;

    /// Sides whose interior the line crosses.
    pub fn crossed_sides(&self) -> Vec<usize> {
        (0..3)
            .filter(|&i| {
                let (a, b) = side_points(&self.corners, i);
                self.line.crossing(a, b).is_some()
            })
            .collect()
    }

    /// Every admissible `(S1, S2)` choice.
    pub fn frames(&self) -> Result<Vec<CutFrame>> {
        let (zp, zm) = (self.z_plus, self.z_minus);
        let n = self.line.normal();
        if (zp - zm).dot(n).abs() > Self::CONTINUITY_TOL * (1.0 + zp.norm().max(zm.norm())) {
            return Err(Error::InvalidParameter("normal components of the two values differ".into()));
        }
        if signed_area_of(&self.corners) <= 0.0 {
            return Err(Error::DegenerateElement);
        }
        let crossed = self.crossed_sides();
        if crossed.is_empty() {
            return Err(Error::UnsupportedCut("the line does not cut the element"));
        }
        let uncut: Vec<usize> = (0..3).filter(|i| !crossed.contains(i)).collect();
        let outward = |i: usize| {
            let (a, b) = side_points(&self.corners, i);
            (b - a).perp_cw().normalized()
        };
        let mut frames = Vec::new();
        for &s2 in &uncut {
            let (a, b) = side_points(&self.corners, s2);
            let side2 = self.line.signed_distance(a) + self.line.signed_distance(b);
            // orient the line so that S2 lies on its negative side
            let (line, z_b, z_a) = if side2 > 0.0 { (self.line.flipped(), zp, zm) } else { (self.line, zm, zp) };
            for &s1 in &crossed {
                let (n1, n2) = (outward(s1), outward(s2));
                let solve = |rhs: Vec2| solve2(Vec2::new(n1.x, n2.x), Vec2::new(n1.y, n2.y), rhs).ok_or(Error::DegenerateElement);
                let (p, q) = side_points(&self.corners, s1);
                frames.push(CutFrame {
                    n1,
                    n2,
                    t: line.tangent(),
                    z_b,
                    z_a,
                    rho: clip_side_fraction(p, q, &line),
                    m_inv_t_e1: solve(Vec2::new(1.0, 0.0))?,
                    m_inv_t_e2: solve(Vec2::new(0.0, 1.0))?,
                });
            }
        }
        Ok(frames)
    }

    /// Constant RT0 interpolant of the two-valued field by the closed formula.
    pub fn interpolant(&self) -> Result<Vec2> {
        Ok(self.frames()?[0].interpolant())
    }

    /// Same interpolant from side means of the two-valued field, the sides
    /// split at the line.
    pub fn interpolant_by_quadrature(&self) -> Rt0Local {
        let line = self.line;
        let f = |x: Point| if line.signed_distance(x) > 0.0 { self.z_plus } else { self.z_minus };
        let flux = [0, 1, 2].map(|i| {
            let (a, b) = side_points(&self.corners, i);
            let n = (b - a).perp_cw().normalized();
            crate::quadrature::segment_average(f, a, b, &[line], 1).dot(n)
        });
        rt0_local_on(&self.corners, flux)
    }
}

fn signed_area_of(p: &[Point; 3]) -> f64 {
    crate::geom::signed_area(p[0], p[1], p[2])
}

/// Which sufficient condition certifies `|I_RT z_T| <= 1 + O(h)` on an element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CutCase {
    /// The line misses the element interior.
    Uncut,
    /// The line runs along a side.
    Resolved,
    /// `|t . n1| <= C h`
    NearlyParallel,
    /// `1 - rho <= C h`
    NearlyUncut,
    /// `|z_b| < 1` and the correction term fits under `1 - |z_b| + C h`.
    SmallJump,
    /// `M` nearly orthogonal and `t` nearly `+-n1`.
    NearlyRightAngled,
    /// No certificate (not a proof of violation).
    Uncertified,
}

/// Thresholds for [`classify_cut`]; each test is `quantity <= constant * h_T`.
#[derive(Clone, Copy, Debug)]
pub struct ClassifierThresholds {
    pub constant: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        ClassifierThresholds { constant: 2.0 }
    }
}

/// Classifies one element, trying every admissible `(S1, S2)` choice and
/// the conditions in the order parallel, uncut, small jump, right angle.
pub fn classify_cut(cut: &CutElement, h: f64, th: ClassifierThresholds) -> Result<CutCase> {
    let line = cut.line;
    let on_line = (0..3).any(|i| {
        let (a, b) = side_points(&cut.corners, i);
        line.signed_distance(a) == 0.0 && line.signed_distance(b) == 0.0
    });
    if cut.crossed_sides().is_empty() {
        return Ok(if on_line { CutCase::Resolved } else { CutCase::Uncut });
    }
    let tol = th.constant * h;
    let frames = cut.frames()?;
    let certifies = |case: CutCase, f: &CutFrame| match case {
        CutCase::NearlyParallel => f.t.dot(f.n1).abs() <= tol,
        CutCase::NearlyUncut => 1.0 - f.rho <= tol,
        CutCase::SmallJump => {
            let zb = f.z_b.norm();
            zb < 1.0 && (f.interpolant() - f.z_b).norm() <= 1.0 - zb + tol
        }
        CutCase::NearlyRightAngled => {
            f.orthogonality_defect() <= tol && (f.t - f.n1).norm().min((f.t + f.n1).norm()) <= tol
        }
        _ => false,
    };
    for case in [CutCase::NearlyParallel, CutCase::NearlyUncut, CutCase::SmallJump, CutCase::NearlyRightAngled] {
        if frames.iter().any(|f| certifies(case, f)) {
            return Ok(case);
        }
    }
    Ok(CutCase::Uncertified)
}

/// Classifies every element of the mesh for a benchmark dual. The two
/// values on a cut element are the one-sided limits at the midpoint of the
/// chord cut out by the line. Elements cut by more than one line give
/// [`Error::UnsupportedCut`].
pub fn classify_mesh(mesh: &Mesh, spec: &BenchmarkSpec, th: ClassifierThresholds) -> Result<Vec<CutCase>> {
    let lines = jump_lines(spec);
    let cases = exec::map_indices(mesh.num_triangles(), |t| -> Result<CutCase> {
        let corners = mesh.corners(t);
        let mut result = CutCase::Uncut;
        let mut cutting = 0;
        for (li, line) in lines.iter().enumerate() {
            let probe = CutElement { corners, line: *line, z_plus: Vec2::ZERO, z_minus: Vec2::ZERO };
            if probe.crossed_sides().is_empty() {
                let c = classify_cut(&probe, mesh.diameters()[t], th)?;
                if c == CutCase::Resolved && result == CutCase::Uncut {
                    result = c;
                }
                continue;
            }
            cutting += 1;
            if cutting > 1 {
                return Err(Error::UnsupportedCut("element cut by more than one jump line"));
            }
            let x = chord_midpoint(&corners, line);
            let side = |positive: bool| {
                let b = if li == 0 { Branch { first: Some(positive), second: None } } else { Branch { first: None, second: Some(positive) } };
                exact_dual_on(spec, x, b)
            };
            let cut = CutElement { corners, line: *line, z_plus: side(true), z_minus: side(false) };
            result = classify_cut(&cut, mesh.diameters()[t], th)?;
        }
        Ok(result)
    });
    cases.into_iter().collect()
}

fn chord_midpoint(corners: &[Point; 3], line: &JumpLine) -> Point {
    let mut pts = Vec::with_capacity(3);
    for i in 0..3 {
        let (a, b) = side_points(corners, i);
        let (da, db) = (line.signed_distance(a), line.signed_distance(b));
        if da == 0.0 {
            pts.push(a);
        } else if (da < 0.0) != (db < 0.0) && db != 0.0 {
            pts.push(a.lerp(b, da / (da - db)));
        }
    }
    let n = pts.len().max(1) as f64;
    pts.into_iter().fold(Vec2::ZERO, |s, p| s + p) / n
}
