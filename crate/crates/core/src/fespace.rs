//! Piecewise constants, Crouzeix-Raviart and lowest-order Raviart-Thomas
//! functions on a [`Mesh`], their interpolation operators and the matrices
//! used by the gradient flow.
//!
//! CR basis: `phi_S = 1 - 2 lambda_opp`, so the DoF is the value at the side
//! midpoint and every basis function equals 1/3 at the barycenter.
//! RT0 basis: `psi_S = sign |S| / (2|T|) (x - P_opp)` where `sign` is the
//! mesh orientation of the side in `T`; its normal flux through `S` along the
//! global normal is 1.

use crate::error::{Error, Result};
use crate::exec;
use crate::geom::{barycentric, signed_area, Point, Vec2};
use crate::linalg::{MatrixBuilder, SparseMatrix};
use crate::mesh::Mesh;
use crate::quadrature::{segment_average, triangle_average, Integrand, JumpLine};

/// Barycentric coordinates may undershoot 0 by this much for points on the boundary of a triangle.
const INSIDE_TOL: f64 = 1e-12;

/// One value per triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct P0Function<T = f64> {
    pub values: Vec<T>,
}

impl<T: Integrand + Send + Sync> P0Function<T> {
    pub fn from_values(mesh: &Mesh, values: Vec<T>) -> Result<Self> {
        if values.len() != mesh.num_triangles() {
            return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), got: values.len() });
        }
        Ok(P0Function { values })
    }

    pub fn constant(mesh: &Mesh, c: T) -> Self {
        P0Function { values: vec![c; mesh.num_triangles()] }
    }

    /// Element values from a per-element provider, e.g. exact means.
    pub fn from_element_means(mesh: &Mesh, mean: impl Fn(usize) -> T + Sync + Send) -> Self {
        P0Function { values: exec::map_indices(mesh.num_triangles(), mean) }
    }

    /// L2 projection of a point function by quadrature, splitting at `lines`.
    pub fn project(mesh: &Mesh, f: impl Fn(Point) -> T + Sync + Send, lines: &[JumpLine], degree: usize) -> Self {
        Self::from_element_means(mesh, |t| triangle_average(&f, &mesh.corners(t), lines, degree))
    }

    /// Point values at the barycenters.
    pub fn sample_barycenters(mesh: &Mesh, f: impl Fn(Point) -> T + Sync + Send) -> Self {
        let xt = mesh.barycenters();
        Self::from_element_means(mesh, |t| f(xt[t]))
    }
}

impl P0Function<f64> {
    pub fn l2_norm_sq(&self, mesh: &Mesh) -> f64 {
        let a = mesh.areas();
        exec::sum(self.values.len(), |t| a[t] * self.values[t] * self.values[t])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl P0Function<Vec2> {
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Crouzeix-Raviart function: one value per side, taken at its midpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CrFunction {
    pub values: Vec<f64>,
}

impl CrFunction {
    pub fn zero(mesh: &Mesh) -> Self {
        CrFunction { values: vec![0.0; mesh.num_sides()] }
    }

    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_sides() {
            return Err(Error::DimensionMismatch { expected: mesh.num_sides(), got: values.len() });
        }
        Ok(CrFunction { values })
    }

    /// Sets all boundary DoFs to 0.
    pub fn apply_dirichlet(&mut self, mesh: &Mesh) {
        for (s, v) in self.values.iter_mut().enumerate() {
            if mesh.is_boundary(s) {
                *v = 0.0;
            }
        }
    }

    pub fn satisfies_dirichlet(&self, mesh: &Mesh) -> bool {
        (0..mesh.num_sides()).all(|s| !mesh.is_boundary(s) || self.values[s] == 0.0)
    }

    #[inline]
    fn local(&self, mesh: &Mesh, t: usize) -> [f64; 3] {
        mesh.side_of_triangle()[t].map(|s| self.values[s])
    }

    /// Value at the barycenter, the mean of the three DoFs.
    #[inline]
    pub fn barycenter_value(&self, mesh: &Mesh, t: usize) -> f64 {
        let u = self.local(mesh, t);
        (u[0] + u[1] + u[2]) / 3.0
    }

    #[inline]
    pub fn gradient_on(&self, mesh: &Mesh, t: usize) -> Vec2 {
        let u = self.local(mesh, t);
        let g = cr_basis_gradients(mesh, t);
        g[0] * u[0] + g[1] * u[1] + g[2] * u[2]
    }

    /// Value of the affine restriction to `t` at `x`, which must lie in `t`.
    pub fn value_at(&self, mesh: &Mesh, t: usize, x: Point) -> Result<f64> {
        let l = inside_barycentric(mesh, t, x)?;
        let u = self.local(mesh, t);
        Ok((0..3).map(|i| u[i] * (1.0 - 2.0 * l[i])).sum())
    }

    /// `sum_S M_SS v_S^2`, the exact squared L2 norm.
    pub fn l2_norm_sq(&self, mass: &[f64]) -> f64 {
        exec::sum(self.values.len(), |s| mass[s] * self.values[s] * self.values[s])
    }
}

/// Lowest-order Raviart-Thomas field: one normal flux per side, measured
/// along the global side normal.
#[derive(Clone, Debug, PartialEq)]
pub struct Rt0Field {
    pub fluxes: Vec<f64>,
}

/// An RT0 field restricted to one element: `value(x) = center + div / 2 (x - x_T)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rt0Local {
    pub center: Point,
    pub at_center: Vec2,
    pub div: f64,
}

impl Rt0Local {
    #[inline]
    pub fn eval(&self, x: Point) -> Vec2 {
        self.at_center + (x - self.center) * (0.5 * self.div)
    }
}

impl Rt0Field {
    pub fn zero(mesh: &Mesh) -> Self {
        Rt0Field { fluxes: vec![0.0; mesh.num_sides()] }
    }

    pub fn from_fluxes(mesh: &Mesh, fluxes: Vec<f64>) -> Result<Self> {
        if fluxes.len() != mesh.num_sides() {
            return Err(Error::DimensionMismatch { expected: mesh.num_sides(), got: fluxes.len() });
        }
        Ok(Rt0Field { fluxes })
    }

    /// The affine representation on triangle `t`.
    pub fn local(&self, mesh: &Mesh, t: usize) -> Rt0Local {
        let sides = mesh.side_of_triangle()[t];
        let flux = [0, 1, 2].map(|i| mesh.orientation(t, i) * self.fluxes[sides[i]]);
        rt0_local_from_outward_fluxes(mesh, t, flux)
    }

    pub fn divergence(&self, mesh: &Mesh) -> P0Function {
        P0Function::from_element_means(mesh, |t| self.local(mesh, t).div)
    }

    /// Element means, i.e. barycenter values.
    pub fn pi_h(&self, mesh: &Mesh) -> P0Function<Vec2> {
        P0Function::from_element_means(mesh, |t| self.local(mesh, t).at_center)
    }

    /// Value of the field on `t` at `x`, which must lie in `t`.
    pub fn evaluate(&self, mesh: &Mesh, t: usize, x: Point) -> Result<Vec2> {
        inside_barycentric(mesh, t, x)?;
        Ok(self.local(mesh, t).eval(x))
    }
}

/// Local RT0 field on `t` with the given outward fluxes `int_S z . n_out ds / |S|`.
pub fn rt0_local_from_outward_fluxes(mesh: &Mesh, t: usize, flux: [f64; 3]) -> Rt0Local {
    rt0_local_on(&mesh.corners(t), flux)
}

/// Local RT0 field on a counter-clockwise triangle from the mean outward
/// fluxes through its sides (side `i` opposite corner `i`).
pub fn rt0_local_on(corners: &[Point; 3], flux: [f64; 3]) -> Rt0Local {
    let p = corners;
    let area = signed_area(p[0], p[1], p[2]);
    let xt = (p[0] + p[1] + p[2]) / 3.0;
    let mut at_center = Vec2::ZERO;
    let mut div = 0.0;
    for i in 0..3 {
        let len = p[(i + 1) % 3].dist(p[(i + 2) % 3]);
        let c = flux[i] * len / area;
        at_center += (xt - p[i]) * (0.5 * c);
        div += c;
    }
    Rt0Local { center: xt, at_center, div }
}

fn inside_barycentric(mesh: &Mesh, t: usize, x: Point) -> Result<[f64; 3]> {
    if t >= mesh.num_triangles() {
        return Err(Error::IndexOutOfRange { kind: "triangle", index: t, len: mesh.num_triangles() });
    }
    let l = barycentric(&mesh.corners(t), x);
    if l.iter().any(|&v| v < -INSIDE_TOL) {
        return Err(Error::PointOutsideTriangle { triangle: t, x: x.x, y: x.y });
    }
    Ok(l)
}

/// Gradients of the three local CR basis functions: `|S_i| / |T| n_i`.
#[inline]
pub fn cr_basis_gradients(mesh: &Mesh, t: usize) -> [Vec2; 3] {
    let n = mesh.outward_normals(t);
    let sides = mesh.side_of_triangle()[t];
    let area = mesh.areas()[t];
    [0, 1, 2].map(|i| n[i] * (mesh.side_lengths()[sides[i]] / area))
}

/// Element values `u(x_T)`.
pub fn cr_pi_h(mesh: &Mesh, u: &CrFunction) -> P0Function {
    P0Function::from_element_means(mesh, |t| u.barycenter_value(mesh, t))
}

/// Piecewise gradient.
pub fn cr_gradient(mesh: &Mesh, u: &CrFunction) -> P0Function<Vec2> {
    P0Function::from_element_means(mesh, |t| u.gradient_on(mesh, t))
}

/// CR interpolant from side means supplied per side index.
pub fn cr_interpolate(mesh: &Mesh, side_mean: impl Fn(usize) -> f64 + Sync + Send) -> CrFunction {
    CrFunction { values: exec::map_indices(mesh.num_sides(), side_mean) }
}

/// CR interpolant of a point function, side means by quadrature.
pub fn cr_interpolate_fn(mesh: &Mesh, f: impl Fn(Point) -> f64 + Sync + Send, lines: &[JumpLine], degree: usize) -> CrFunction {
    cr_interpolate(mesh, |s| {
        let [a, b] = mesh.side_endpoints(s);
        segment_average(&f, a, b, lines, degree)
    })
}

/// RT0 interpolant from mean normal fluxes (global normal) per side index.
pub fn rt_interpolate(mesh: &Mesh, side_flux: impl Fn(usize) -> f64 + Sync + Send) -> Rt0Field {
    Rt0Field { fluxes: exec::map_indices(mesh.num_sides(), side_flux) }
}

/// RT0 interpolant of a vector field, side means by quadrature.
pub fn rt_interpolate_fn(mesh: &Mesh, z: impl Fn(Point) -> Vec2 + Sync + Send, lines: &[JumpLine], degree: usize) -> Rt0Field {
    rt_interpolate(mesh, |s| {
        let [a, b] = mesh.side_endpoints(s);
        segment_average(&z, a, b, lines, degree).dot(mesh.side_normals()[s])
    })
}

/// Diagonal of the exact CR mass matrix, `sum_{T > S} |T| / 3`.
pub fn cr_mass_diagonal(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_sides()];
    for (t, sides) in mesh.side_of_triangle().iter().enumerate() {
        for &s in sides {
            m[s] += mesh.areas()[t] / 3.0;
        }
    }
    m
}

/// CR sparsity pattern (sides sharing a triangle) with the storage position
/// of every local 3x3 entry, so element matrices can be scattered in place.
#[derive(Clone, Debug)]
pub struct CrPattern {
    zero: SparseMatrix,
    positions: Vec<[usize; 9]>,
}

impl CrPattern {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.num_sides();
        let mut b = MatrixBuilder::with_capacity(n, 9 * mesh.num_triangles());
        for sides in mesh.side_of_triangle() {
            for &i in sides {
                for &j in sides {
                    b.add(i, j, 0.0).expect("side index in range");
                }
            }
        }
        let zero = b.finalize();
        let positions = mesh
            .side_of_triangle()
            .iter()
            .map(|s| {
                let mut p = [0usize; 9];
                for a in 0..3 {
                    for c in 0..3 {
                        p[3 * a + c] = zero.position(s[a], s[c]).expect("entry in pattern");
                    }
                }
                p
            })
            .collect();
        CrPattern { zero, positions }
    }

    /// Sums element matrices into a matrix on this pattern. Element
    /// matrices are computed in parallel; the scatter runs in element order.
    pub fn assemble(&self, element: impl Fn(usize) -> [f64; 9] + Sync + Send) -> SparseMatrix {
        let local = exec::map_indices(self.positions.len(), element);
        let mut m = self.zero.clone();
        let vals = m.values_mut();
        for (pos, k) in self.positions.iter().zip(&local) {
            for e in 0..9 {
                vals[pos[e]] += k[e];
            }
        }
        m
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.zero
    }
}

/// Local stiffness `|T| grad phi_i . grad phi_j`.
#[inline]
pub fn local_stiffness(mesh: &Mesh, t: usize) -> [f64; 9] {
    let g = cr_basis_gradients(mesh, t);
    let area = mesh.areas()[t];
    let mut k = [0.0; 9];
    for a in 0..3 {
        for c in 0..3 {
            k[3 * a + c] = area * g[a].dot(g[c]);
        }
    }
    k
}

/// Weighted stiffness `sum_T w_T |T| grad phi_S . grad phi_S'`.
pub fn cr_stiffness(mesh: &Mesh, pattern: &CrPattern, weights: &P0Function) -> Result<SparseMatrix> {
    if weights.values.len() != mesh.num_triangles() {
        return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), got: weights.values.len() });
    }
    if let Some(w) = weights.values.iter().find(|w| !(**w > 0.0)) {
        return Err(Error::InvalidParameter(format!("stiffness weight must be positive, got {w}")));
    }
    Ok(pattern.assemble(|t| local_stiffness(mesh, t).map(|k| k * weights.values[t])))
}

/// Matrix of `(Pi_h u, Pi_h v)`: block `|T| / 9` on the three sides of every element.
pub fn fidelity_matrix(mesh: &Mesh, pattern: &CrPattern) -> SparseMatrix {
    pattern.assemble(|t| [mesh.areas()[t] / 9.0; 9])
}

/// Load vector of `(g_h, Pi_h v)`.
pub fn fidelity_load(mesh: &Mesh, g: &P0Function) -> Vec<f64> {
    let mut load = vec![0.0; mesh.num_sides()];
    for (t, sides) in mesh.side_of_triangle().iter().enumerate() {
        for &s in sides {
            load[s] += mesh.areas()[t] * g.values[t] / 3.0;
        }
    }
    load
}

/// Dirichlet mask: true on boundary sides.
pub fn boundary_mask(mesh: &Mesh) -> Vec<bool> {
    (0..mesh.num_sides()).map(|s| mesh.is_boundary(s)).collect()
}
