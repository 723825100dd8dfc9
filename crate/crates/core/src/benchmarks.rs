//! Closed-form ROF benchmarks with piecewise-constant data on disks.
//!
//! Both examples are defined in reference coordinates `y` and pulled back
//! to the world by the rigid motion `y = R (x - b)`, `R` the rotation by
//! `-phi`. Data and primal solution transform as scalars, the dual field by
//! the contravariant Piola map `z~(x) = R^T z(R (x - b))`.
//!
//! Reference dual of the two-disk example, with `d = y -+ r e1` on the
//! half-plane `+-y1 >= 0`:
//! `z = -+ d / r` for `|d| < r` and `-+ r d / |d|^2` otherwise.
//! The four-disk dual is `+-z(y -+ r e2)` on `+-y2 >= 0` (the upper branch
//! on `y2 = 0`).

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{Point, Vec2};
use crate::quadrature::JumpLine;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Example {
    TwoDisk,
    FourDisk,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub example: Example,
    pub r: f64,
    pub alpha: f64,
    pub phi: f64,
    pub shift: Vec2,
}

/// Which side of a jump line to evaluate on; `None` picks by position.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Branch {
    /// Side of the first jump line (`y1 >= 0` is positive).
    pub first: Option<bool>,
    /// Side of the second jump line of the four-disk example (`y2 >= 0` is positive).
    pub second: Option<bool>,
}

/// Row-major 2x2 matrix.
pub type Mat2 = [[f64; 2]; 2];

impl BenchmarkSpec {
    pub fn new(example: Example, r: f64, alpha: f64, phi: f64, shift: Vec2) -> Result<Self> {
        let spec = BenchmarkSpec { example, r, alpha, phi, shift };
        spec.validate()?;
        Ok(spec)
    }

    /// `r = 0.4`, `alpha = 10`, no rotation or shift.
    pub fn standard(example: Example) -> Self {
        BenchmarkSpec { example, r: 0.4, alpha: 10.0, phi: 0.0, shift: Vec2::ZERO }
    }

    pub fn rotated(self, phi: f64, shift: Vec2) -> Result<Self> {
        Self::new(self.example, self.r, self.alpha, phi, shift)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r, self.alpha, self.phi, self.shift.x, self.shift.y].iter().all(|v| v.is_finite());
        if !finite || !(self.r > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter("r and alpha must be positive and all parameters finite".into()));
        }
        if !(self.alpha * self.r > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha * r must exceed 2, got {} * {} = {}",
                self.alpha,
                self.r,
                self.alpha * self.r
            )));
        }
        for (c, _) in self.disks() {
            if c.x.abs() + self.r >= 1.0 || c.y.abs() + self.r >= 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "disk of radius {} at ({:.6}, {:.6}) does not lie inside the domain",
                    self.r, c.x, c.y
                )));
            }
        }
        Ok(())
    }

    /// Disk centers in world coordinates with the sign of the data there.
    pub fn disks(&self) -> Vec<(Point, f64)> {
        let r = self.r;
        let reference: &[(Point, f64)] = match self.example {
            Example::TwoDisk => &[(Vec2::new(r, 0.0), 1.0), (Vec2::new(-r, 0.0), -1.0)],
            Example::FourDisk => &[
                (Vec2::new(r, r), 1.0),
                (Vec2::new(-r, -r), 1.0),
                (Vec2::new(r, -r), -1.0),
                (Vec2::new(-r, r), -1.0),
            ],
        };
        reference.iter().map(|&(c, s)| (self.to_world(c), s)).collect()
    }

    fn cos_sin(&self) -> (f64, f64) {
        (self.phi.cos(), self.phi.sin())
    }

    /// `y = R (x - b)`
    pub fn to_reference(&self, x: Point) -> Point {
        let (c, s) = self.cos_sin();
        let d = x - self.shift;
        Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    /// `x = b + R^T y`
    pub fn to_world(&self, y: Point) -> Point {
        self.shift + self.rotate_back(y)
    }

    /// `R^T v`
    fn rotate_back(&self, v: Vec2) -> Vec2 {
        let (c, s) = self.cos_sin();
        Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// `t = (-sin phi, cos phi)`
    pub fn tangent(&self) -> Vec2 {
        let (c, s) = self.cos_sin();
        Vec2::new(-s, c)
    }

    /// `n = (cos phi, sin phi)`; `(x - b) . n > 0` is the positive side.
    pub fn normal(&self) -> Vec2 {
        let (c, s) = self.cos_sin();
        Vec2::new(c, s)
    }

    /// Coefficient `max(0, 1 - 2 / (alpha r))` of the primal solution.
    pub fn primal_coefficient(&self) -> f64 {
        (1.0 - 2.0 / (self.alpha * self.r)).max(0.0)
    }
}

fn two_disk_data(y: Point, r: f64) -> f64 {
    if (y - Vec2::new(r, 0.0)).norm() < r {
        1.0
    } else if (y + Vec2::new(r, 0.0)).norm() < r {
        -1.0
    } else {
        0.0
    }
}

fn reference_data(spec: &BenchmarkSpec, y: Point) -> f64 {
    let r = spec.r;
    match spec.example {
        Example::TwoDisk => two_disk_data(y, r),
        Example::FourDisk => two_disk_data(y - Vec2::new(0.0, r), r) - two_disk_data(y + Vec2::new(0.0, r), r),
    }
}

/// Two-disk dual value and Jacobian at `y` on the chosen side of `y1 = 0`.
fn two_disk_dual(y: Point, r: f64, right: bool) -> (Vec2, Mat2) {
    let (center, sign) = if right { (Vec2::new(r, 0.0), -1.0) } else { (Vec2::new(-r, 0.0), 1.0) };
    let d = y - center;
    let q = d.norm_sq();
    if q < r * r {
        (d * (sign / r), [[sign / r, 0.0], [0.0, sign / r]])
    } else {
        let k = sign * r / q;
        let j = |a: f64, b: f64, diag: f64| k * (diag - 2.0 * a * b / q);
        (d * k, [[j(d.x, d.x, 1.0), j(d.x, d.y, 0.0)], [j(d.y, d.x, 0.0), j(d.y, d.y, 1.0)]])
    }
}

fn reference_dual(spec: &BenchmarkSpec, y: Point, branch: Branch) -> (Vec2, Mat2) {
    let r = spec.r;
    match spec.example {
        Example::TwoDisk => two_disk_dual(y, r, branch.first.unwrap_or(y.x >= 0.0)),
        Example::FourDisk => {
            let upper = branch.second.unwrap_or(y.y >= 0.0);
            let right = branch.first.unwrap_or(y.x >= 0.0);
            if upper {
                two_disk_dual(y - Vec2::new(0.0, r), r, right)
            } else {
                let (z, j) = two_disk_dual(y + Vec2::new(0.0, r), r, right);
                (-z, j.map(|row| row.map(|v| -v)))
            }
        }
    }
}

/// Transformed data `g(R (x - b))`.
pub fn data_g(spec: &BenchmarkSpec, x: Point) -> f64 {
    reference_data(spec, spec.to_reference(x))
}

/// Exact primal solution, `max(0, 1 - 2/(alpha r)) g`.
pub fn exact_primal(spec: &BenchmarkSpec, x: Point) -> f64 {
    spec.primal_coefficient() * data_g(spec, x)
}

/// Exact dual solution.
pub fn exact_dual(spec: &BenchmarkSpec, x: Point) -> Vec2 {
    exact_dual_on(spec, x, Branch::default())
}

/// Exact dual solution evaluated with the analytic formula of the given
/// branch; used for one-sided limits on a jump line.
pub fn exact_dual_on(spec: &BenchmarkSpec, x: Point, branch: Branch) -> Vec2 {
    let (z, _) = reference_dual(spec, spec.to_reference(x), branch);
    spec.rotate_back(z)
}

/// Jacobian of the transformed dual, `R^T Dz(R (x - b)) R`.
pub fn exact_dual_jacobian(spec: &BenchmarkSpec, x: Point) -> Mat2 {
    let (_, j) = reference_dual(spec, spec.to_reference(x), Branch::default());
    let (c, s) = spec.cos_sin();
    let rot = [[c, s], [-s, c]];
    let mut out = [[0.0; 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = (0..2).flat_map(|i| (0..2).map(move |k| (i, k))).map(|(i, k)| rot[i][a] * j[i][k] * rot[k][b]).sum();
        }
    }
    out
}

/// Divergence of the transformed dual from its analytic Jacobian.
pub fn dual_divergence(spec: &BenchmarkSpec, x: Point) -> f64 {
    let j = exact_dual_jacobian(spec, x);
    j[0][0] + j[1][1]
}

/// `max |div z~(x) - alpha (u~(x) - g~(x))|` over the sample points.
pub fn optimality_residual(spec: &BenchmarkSpec, points: &[Point]) -> f64 {
    points
        .iter()
        .map(|&x| (dual_divergence(spec, x) - spec.alpha * (exact_primal(spec, x) - data_g(spec, x))).abs())
        .fold(0.0, f64::max)
}

/// Lines across which the dual jumps: `b + R t` and, for four disks, also `b + R n`.
/// The first line's normal is `n`, the second one's is `t`.
pub fn jump_lines(spec: &BenchmarkSpec) -> Vec<JumpLine> {
    let first = JumpLine::new(spec.shift, spec.tangent()).expect("unit tangent");
    match spec.example {
        Example::TwoDisk => vec![first],
        Example::FourDisk => vec![first, JumpLine::new(spec.shift, -spec.normal()).expect("unit normal")],
    }
}

/// Parameters in `(0, 1)` where the segment a-b meets a jump line or a disk
/// boundary, i.e. where the dual is not smooth.
pub fn singular_crossings(spec: &BenchmarkSpec, a: Point, b: Point) -> Vec<f64> {
    let mut out: Vec<f64> = jump_lines(spec).iter().filter_map(|l| l.crossing(a, b)).collect();
    let d = b - a;
    for (c, _) in spec.disks() {
        // |a + t d - c|^2 = r^2
        let e = a - c;
        let (qa, qb, qc) = (d.norm_sq(), 2.0 * d.dot(e), e.norm_sq() - spec.r * spec.r);
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 || qa == 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        out.extend([(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)].into_iter().filter(|t| *t > 0.0 && *t < 1.0));
    }
    out
}

/// Total variation of the exact primal solution: jump height times perimeter.
pub fn total_variation(spec: &BenchmarkSpec) -> f64 {
    spec.primal_coefficient() * spec.disks().len() as f64 * 2.0 * std::f64::consts::PI * spec.r
}

/// Distance of `x` to the jump lines and disk boundaries.
pub fn distance_to_singular_set(spec: &BenchmarkSpec, x: Point) -> f64 {
    let lines = jump_lines(spec).into_iter().map(|l| l.signed_distance(x).abs());
    let circles = spec.disks().into_iter().map(|(c, _)| ((x - c).norm() - spec.r).abs());
    lines.chain(circles).fold(f64::INFINITY, f64::min)
}

/// Uniform samples in the domain at least `margin` away from the singular
/// set; rejected samples are redrawn.
pub fn random_regular_points<R: Rng>(spec: &BenchmarkSpec, n: usize, margin: f64, rng: &mut R) -> Vec<Point> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if distance_to_singular_set(spec, x) > margin {
            out.push(x);
        }
    }
    out
}
