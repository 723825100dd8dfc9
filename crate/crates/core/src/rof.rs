//! Discrete primal and dual ROF functionals, the duality gap and the dual
//! field reconstructed from a primal CR solution.
//!
//! Primal: `I(u) = sum_T |T| |grad u|_eps + alpha/2 sum_T |T| (u(x_T) - g_T)^2`.
//! Dual:   `D(y) = -1/(2 alpha) ||div y + alpha g||^2 + alpha/2 ||g||^2`,
//! `-inf` unless `|y(x_T)| <= 1` on every element.

use crate::error::{Error, Result};
use crate::exec;
use crate::fespace::{CrFunction, P0Function, Rt0Field, Rt0Local};
use crate::geom::Vec2;
use crate::mesh::Mesh;

/// Tolerance of the dual constraint `|y(x_T)| <= 1`.
pub const FEAS_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct RofProblem<'m> {
    pub mesh: &'m Mesh,
    pub alpha: f64,
    pub g: P0Function,
    pub eps: f64,
}

impl<'m> RofProblem<'m> {
    pub fn new(mesh: &'m Mesh, alpha: f64, g: P0Function, eps: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be non-negative, got {eps}")));
        }
        if g.values.len() != mesh.num_triangles() {
            return Err(Error::DimensionMismatch { expected: mesh.num_triangles(), got: g.values.len() });
        }
        Ok(RofProblem { mesh, alpha, g, eps })
    }

    /// Same problem with a different regularization.
    pub fn with_eps(&self, eps: f64) -> Self {
        RofProblem { eps, ..self.clone() }
    }
}

/// `(|a|^2 + eps^2)^(1/2)`
#[inline]
pub fn reg_modulus(a: Vec2, eps: f64) -> f64 {
    a.x.hypot(a.y).hypot(eps)
}

/// Regularized primal energy; `eps = 0` gives the plain discrete functional.
pub fn primal_energy(p: &RofProblem, u: &CrFunction) -> f64 {
    let m = p.mesh;
    let area = m.areas();
    exec::sum(m.num_triangles(), |t| {
        let d = u.barycenter_value(m, t) - p.g.values[t];
        area[t] * (reg_modulus(u.gradient_on(m, t), p.eps) + 0.5 * p.alpha * d * d)
    })
}

fn dual_energy_parts(p: &RofProblem, local: impl Fn(usize) -> Rt0Local + Sync + Send) -> f64 {
    let m = p.mesh;
    let area = m.areas();
    let excess = exec::max(m.num_triangles(), |t| local(t).at_center.norm());
    if excess > 1.0 + FEAS_TOL {
        return f64::NEG_INFINITY;
    }
    exec::sum(m.num_triangles(), |t| {
        // expanded so that a zero divergence gives exactly zero
        let div = local(t).div;
        -area[t] * div * (div / (2.0 * p.alpha) + p.g.values[t])
    })
}

/// Dual energy; `f64::NEG_INFINITY` for infeasible `y`.
pub fn dual_energy(p: &RofProblem, y: &Rt0Field) -> f64 {
    dual_energy_parts(p, |t| y.local(p.mesh, t))
}

/// Unregularized primal energy minus dual energy.
pub fn duality_gap(p: &RofProblem, u: &CrFunction, y: &Rt0Field) -> f64 {
    primal_energy(&p.with_eps(0.0), u) - dual_energy(p, y)
}

/// The dual field built element by element from a primal iterate.
#[derive(Clone, Debug)]
pub struct DualReconstruction {
    /// Per element: `grad u / |grad u|_eps + alpha/2 (u(x_T) - g_T)(x - x_T)`.
    pub local: Vec<Rt0Local>,
    /// RT0 field whose flux on each side is the mean of the one-sided fluxes.
    pub field: Rt0Field,
    /// Largest difference of the two one-sided fluxes over interior sides.
    pub conformity_defect: f64,
}

impl DualReconstruction {
    pub fn max_local_modulus(&self) -> f64 {
        self.local.iter().fold(0.0, |m, l| m.max(l.at_center.norm()))
    }

    /// The averaged field scaled into the unit ball at barycenters if needed.
    pub fn feasible_field(&self, mesh: &Mesh) -> Rt0Field {
        let peak = self.field.pi_h(mesh).max_norm();
        if peak <= 1.0 {
            return self.field.clone();
        }
        Rt0Field { fluxes: self.field.fluxes.iter().map(|f| f / peak).collect() }
    }

    /// `I(u) - D(z_h)` with `I` unregularized and `D` evaluated on the
    /// element-wise fields.
    pub fn gap(&self, p: &RofProblem, u: &CrFunction) -> f64 {
        primal_energy(&p.with_eps(0.0), u) - self.local_dual_energy(p)
    }

    /// Gap of `u` against the feasible averaged field, a certified upper
    /// bound in the discrete duality.
    pub fn certified_gap(&self, p: &RofProblem, u: &CrFunction) -> f64 {
        duality_gap(p, u, &self.feasible_field(p.mesh))
    }

    /// Dual energy of the element-wise fields (not in general normally continuous).
    pub fn local_dual_energy(&self, p: &RofProblem) -> f64 {
        dual_energy_parts(p, |t| self.local[t])
    }
}

pub fn dual_reconstruction(p: &RofProblem, u: &CrFunction) -> Result<DualReconstruction> {
    if !(p.eps > 0.0) {
        return Err(Error::InvalidParameter("dual reconstruction needs eps > 0".into()));
    }
    let m = p.mesh;
    let local = exec::map_indices(m.num_triangles(), |t| {
        let grad = u.gradient_on(m, t);
        let d = u.barycenter_value(m, t) - p.g.values[t];
        Rt0Local { center: m.barycenters()[t], at_center: grad / reg_modulus(grad, p.eps), div: p.alpha * d }
    });
    // one-sided mean fluxes along the global normal; the field is affine so
    // the side mean is the midpoint value
    let one_sided = |t: usize, s: usize| local[t].eval(m.side_midpoints()[s]).dot(m.side_normals()[s]);
    let both: Vec<(f64, Option<f64>)> = exec::map_indices(m.num_sides(), |s| {
        let nb = m.neighbors()[s];
        (one_sided(nb.minus, s), nb.plus.map(|t| one_sided(t, s)))
    });
    let fluxes = both.iter().map(|&(a, b)| b.map_or(a, |b| 0.5 * (a + b))).collect();
    let conformity_defect = both.iter().filter_map(|&(a, b)| b.map(|b| (a - b).abs())).fold(0.0, f64::max);
    Ok(DualReconstruction { local, field: Rt0Field { fluxes }, conformity_defect })
}

/// `(alpha/2) ||Pi_h (v - u_min)||^2 <= I(v) - I(u_min) + eps |Omega| + allowance`,
/// with `I` the unregularized functional.
pub fn coercivity_check(p: &RofProblem, u_min: &CrFunction, v: &CrFunction, allowance: f64) -> bool {
    let m = p.mesh;
    let lhs = 0.5
        * p.alpha
        * exec::sum(m.num_triangles(), |t| {
            let d = v.barycenter_value(m, t) - u_min.barycenter_value(m, t);
            m.areas()[t] * d * d
        });
    let plain = p.with_eps(0.0);
    let omega: f64 = m.areas().iter().sum();
    lhs <= primal_energy(&plain, v) - primal_energy(&plain, u_min) + p.eps * omega + allowance
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::{cr_interpolate_fn, rt0_local_from_outward_fluxes};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(mesh: &Mesh, eps: f64) -> RofProblem<'_> {
        let g = P0Function::sample_barycenters(mesh, |x| if x.x > 0.0 { 1.0 } else { -0.5 });
        RofProblem::new(mesh, 10.0, g, eps).unwrap()
    }

    #[test]
    fn reg_modulus_examples() {
        assert_eq!(reg_modulus(Vec2::ZERO, 0.1), 0.1);
        assert_eq!(reg_modulus(Vec2::new(3.0, 4.0), 0.0), 5.0);
    }

    #[test]
    fn primal_energy_of_zero() {
        let m = Mesh::square(3);
        let p = problem(&m, 0.0);
        let u = CrFunction::zero(&m);
        let expect = 0.5 * p.alpha * p.g.l2_norm_sq(&m);
        assert!((primal_energy(&p, &u) - expect).abs() < 1e-12);
        let p = problem(&m, 0.05);
        assert!((primal_energy(&p, &u) - expect - 4.0 * 0.05).abs() < 1e-12);
    }

    #[test]
    fn primal_energy_of_constant_with_zero_data() {
        let m = Mesh::square(2);
        let p = RofProblem::new(&m, 3.0, P0Function::constant(&m, 0.0), 0.0).unwrap();
        let u = CrFunction { values: vec![0.7; m.num_sides()] };
        assert!((primal_energy(&p, &u) - 0.5 * 3.0 * 4.0 * 0.49).abs() < 1e-12);
    }

    #[test]
    fn dual_energy_of_zero_is_exactly_zero() {
        for level in 0..4 {
            let m = Mesh::square(level);
            let mut rng = ChaCha8Rng::seed_from_u64(level as u64);
            let g = P0Function { values: (0..m.num_triangles()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            let p = RofProblem::new(&m, rng.gen_range(0.1..20.0), g, 0.0).unwrap();
            assert_eq!(dual_energy(&p, &Rt0Field::zero(&m)), 0.0);
        }
    }

    #[test]
    fn infeasible_dual_is_minus_infinity() {
        let m = Mesh::square(2);
        let p = problem(&m, 0.0);
        let y = crate::fespace::rt_interpolate_fn(&m, |_| Vec2::new(2.0, 0.0), &[], 1);
        assert_eq!(dual_energy(&p, &y), f64::NEG_INFINITY);
        assert_eq!(duality_gap(&p, &CrFunction::zero(&m), &y), f64::INFINITY);
    }

    #[test]
    fn reconstruction_identities() {
        let m = Mesh::square(3);
        let p = problem(&m, m.h_max());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut u = CrFunction { values: (0..m.num_sides()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        u.apply_dirichlet(&m);
        let rec = dual_reconstruction(&p, &u).unwrap();
        for t in 0..m.num_triangles() {
            let l = rec.local[t];
            let d = u.barycenter_value(&m, t) - p.g.values[t];
            assert!((l.div - p.alpha * d).abs() < 1e-12);
            assert!(l.at_center.norm() < 1.0);
            // the element field is RT0 with its own one-sided fluxes
            let n = m.outward_normals(t);
            let flux = [0, 1, 2].map(|i| l.eval(m.side_midpoints()[m.side_of_triangle()[t][i]]).dot(n[i]));
            let back = rt0_local_from_outward_fluxes(&m, t, flux);
            assert!((back.at_center - l.at_center).norm() < 1e-12);
            assert!((back.div - l.div).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_reconstructs_zero() {
        let m = Mesh::square(2);
        let p = RofProblem::new(&m, 10.0, P0Function::constant(&m, 0.0), 0.1).unwrap();
        let rec = dual_reconstruction(&p, &CrFunction::zero(&m)).unwrap();
        assert!(rec.field.fluxes.iter().all(|&f| f == 0.0));
        assert_eq!(dual_energy(&p, &rec.field), 0.0);
        assert!(dual_reconstruction(&p.with_eps(0.0), &CrFunction::zero(&m)).is_err());
    }

    #[test]
    fn weak_duality_for_random_pairs() {
        let m = Mesh::square(2);
        let p = problem(&m, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let mut u = CrFunction { values: (0..m.num_sides()).map(|_| rng.gen_range(-1.0..1.0)).collect() };
            u.apply_dirichlet(&m);
            let y = Rt0Field { fluxes: (0..m.num_sides()).map(|_| rng.gen_range(-0.3..0.3)).collect() };
            if dual_energy(&p, &y).is_finite() {
                assert!(duality_gap(&p, &u, &y) >= -1e-12);
            }
        }
    }

    #[test]
    fn coercivity_with_self_is_trivial() {
        let m = Mesh::square(2);
        let p = problem(&m, 0.0);
        let u = cr_interpolate_fn(&m, |x| 0.5 * x.x, &[], 2);
        assert!(coercivity_check(&p, &u, &u, 0.0));
    }

    #[test]
    fn problem_validation() {
        let m = Mesh::square(1);
        let g = P0Function::constant(&m, 0.0);
        assert!(RofProblem::new(&m, 0.0, g.clone(), 0.0).is_err());
        assert!(RofProblem::new(&m, 1.0, g.clone(), -1.0).is_err());
        assert!(RofProblem::new(&m, 1.0, P0Function { values: vec![0.0] }, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reg_modulus_bounds(x in -10.0..10.0f64, y in -10.0..10.0f64, eps in 0.0..1.0f64) {
                let a = Vec2::new(x, y);
                let d = reg_modulus(a, eps) - a.norm();
                prop_assert!(d >= -1e-15 && d <= eps + 1e-15);
            }
        }
    }
}
