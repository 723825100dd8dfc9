//! Semi-implicit L2 gradient flow for the regularized discrete ROF energy.
//!
//! One step solves
//! `(1/tau) M u + K_w u + alpha F u = (1/tau) M u_prev + alpha G`
//! with weights `w_T = 1 / |grad u_prev|_eps` and homogeneous boundary values.

use crate::error::{Error, Result};
use crate::fespace::{boundary_mask, cr_mass_diagonal, fidelity_load, fidelity_matrix, local_stiffness, CrFunction, CrPattern};
use crate::linalg::{cg_solve_with, CgOptions, SparseMatrix, SparseSystem};
use crate::mesh::Mesh;
use crate::rof::{primal_energy, reg_modulus, RofProblem};

#[derive(Clone, Copy, Debug)]
pub struct FlowConfig {
    pub tau: f64,
    /// Stop once `||u^k - u^{k-1}||_{L2} / tau <= stop_tol`.
    pub stop_tol: f64,
    pub max_steps: usize,
    pub cg: CgOptions,
}

impl FlowConfig {
    /// `tau = 1`, `stop_tol = h / 20`.
    pub fn for_mesh(mesh: &Mesh) -> Self {
        Self::with_stop_factor(mesh, 1.0 / 20.0)
    }

    pub fn with_stop_factor(mesh: &Mesh, factor: f64) -> Self {
        FlowConfig { tau: 1.0, stop_tol: factor * mesh.h_max(), max_steps: 10_000, cg: CgOptions::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !(self.stop_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau and stop_tol must be positive, got {} and {}",
                self.tau, self.stop_tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub energy: f64,
    /// `||u^k - u^{k-1}||_{L2} / tau`
    pub increment: f64,
    pub cg_iterations: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowTrace {
    /// Energy of the initial iterate.
    pub initial_energy: f64,
    pub steps: Vec<StepRecord>,
}

impl FlowTrace {
    /// Largest energy increase between consecutive iterates (<= 0 for a
    /// monotone trace).
    pub fn max_energy_increase(&self) -> f64 {
        let mut prev = self.initial_energy;
        let mut worst = f64::NEG_INFINITY;
        for s in &self.steps {
            worst = worst.max(s.energy - prev);
            prev = s.energy;
        }
        worst
    }

    pub fn final_energy(&self) -> f64 {
        self.steps.last().map_or(self.initial_energy, |s| s.energy)
    }
}

/// The level-dependent parts of the step system, assembled once.
pub struct FlowOperator<'p, 'm> {
    problem: &'p RofProblem<'m>,
    pattern: CrPattern,
    mass: Vec<f64>,
    /// `(1/tau) M + alpha F` on the CR pattern
    fixed: SparseMatrix,
    /// unit-weight element stiffness blocks
    stiffness: Vec<[f64; 9]>,
    load: Vec<f64>,
    mask: Vec<bool>,
    tau: f64,
}

impl<'p, 'm> FlowOperator<'p, 'm> {
    pub fn new(problem: &'p RofProblem<'m>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if !(problem.eps > 0.0) {
            return Err(Error::InvalidParameter("the gradient flow needs eps > 0".into()));
        }
        let mesh = problem.mesh;
        let pattern = CrPattern::new(mesh);
        let mass = cr_mass_diagonal(mesh);
        let mut fixed = fidelity_matrix(mesh, &pattern);
        for v in fixed.values_mut() {
            *v *= problem.alpha;
        }
        for (s, m) in mass.iter().enumerate() {
            let p = fixed.position(s, s).expect("diagonal in pattern");
            fixed.values_mut()[p] += m / tau;
        }
        let stiffness = (0..mesh.num_triangles()).map(|t| local_stiffness(mesh, t)).collect();
        let load = fidelity_load(mesh, &problem.g).into_iter().map(|l| problem.alpha * l).collect();
        Ok(FlowOperator { problem, pattern, mass, fixed, stiffness, load, mask: boundary_mask(mesh), tau })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Step matrix and right-hand side for the previous iterate.
    pub fn system(&self, u_prev: &CrFunction) -> Result<SparseSystem> {
        let mesh = self.problem.mesh;
        let eps = self.problem.eps;
        let mut matrix = self.pattern.assemble(|t| {
            let w = 1.0 / reg_modulus(u_prev.gradient_on(mesh, t), eps);
            self.stiffness[t].map(|k| w * k)
        });
        matrix.add_scaled_same_pattern(1.0, &self.fixed)?;
        let rhs = (0..mesh.num_sides()).map(|s| self.mass[s] / self.tau * u_prev.values[s] + self.load[s]).collect();
        SparseSystem::new(matrix, rhs, self.mask.clone())
    }

    /// One flow step; returns the new iterate and the CG iteration count.
    pub fn step(&self, u_prev: &CrFunction, cg: &CgOptions) -> Result<(CrFunction, usize)> {
        let sys = self.system(u_prev)?;
        let sol = cg_solve_with(&sys, &u_prev.values, cg)?;
        let mut u = CrFunction { values: sol.x };
        // elimination already yields exact zeros; enforce bitwise anyway
        u.apply_dirichlet(self.problem.mesh);
        Ok((u, sol.iterations))
    }
}

/// A single step from `u_prev`.
pub fn flow_step(p: &RofProblem, u_prev: &CrFunction, cfg: &FlowConfig) -> Result<CrFunction> {
    cfg.validate()?;
    let op = FlowOperator::new(p, cfg.tau)?;
    op.step(u_prev, &cfg.cg).map(|(u, _)| u).map_err(|e| Error::StepFailed { step: 1, source: Box::new(e) })
}

/// Iterates until the increment drops below `cfg.stop_tol`.
pub fn flow_run(p: &RofProblem, u0: &CrFunction, cfg: &FlowConfig) -> Result<(CrFunction, FlowTrace)> {
    cfg.validate()?;
    let op = FlowOperator::new(p, cfg.tau)?;
    let mut u = u0.clone();
    u.apply_dirichlet(p.mesh);
    let mut trace = FlowTrace { initial_energy: primal_energy(p, &u), steps: Vec::new() };
    for k in 1..=cfg.max_steps {
        let (next, cg_iterations) = op.step(&u, &cfg.cg).map_err(|e| Error::StepFailed { step: k, source: Box::new(e) })?;
        let diff = CrFunction { values: next.values.iter().zip(&u.values).map(|(a, b)| a - b).collect() };
        let increment = diff.l2_norm_sq(op.mass()).sqrt() / cfg.tau;
        u = next;
        trace.steps.push(StepRecord { step: k, energy: primal_energy(p, &u), increment, cg_iterations });
        if increment <= cfg.stop_tol {
            return Ok((u, trace));
        }
    }
    Err(Error::FlowNotConverged { trace: Box::new(trace) })
}
