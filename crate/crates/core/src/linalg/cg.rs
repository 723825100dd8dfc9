use super::SparseSystem;
use crate::error::{Error, Result};
use crate::exec;

#[derive(Clone, Copy, Debug)]
pub struct CgOptions {
    pub rel_tol: f64,
    /// `None` means `10 * n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { rel_tol: 1e-10, max_iter: None }
    }
}

#[derive(Clone, Debug)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||`.
    pub relative_residual: f64,
    /// Euclidean residual norm before the first and after every iteration.
    pub residual_history: Vec<f64>,
}

/// Jacobi-preconditioned CG. Stops once `||A x - b|| <= rel_tol * ||b||`.
pub fn cg_solve(sys: &SparseSystem, x0: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgSolution> {
    cg_solve_with(sys, x0, &CgOptions { rel_tol, max_iter: Some(max_iter) })
}

pub fn cg_solve_with(sys: &SparseSystem, x0: &[f64], opts: &CgOptions) -> Result<CgSolution> {
    let n = sys.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !(opts.rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("rel_tol must be positive, got {}", opts.rel_tol)));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let a = &sys.matrix;
    let b = &sys.rhs;

    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let b_norm = exec::dot(b, b).sqrt();
    let mut x = x0.to_vec();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgSolution { x, iterations: 0, relative_residual: 0.0, residual_history: vec![0.0] });
    }

    let mut r = vec![0.0; n];
    a.mul_vec_into(&x, &mut r);
    exec::for_each_mut(&mut r, |i, ri| *ri = b[i] - *ri);
    let mut z: Vec<f64> = exec::map_indices(n, |i| inv_diag[i] * r[i]);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = exec::dot(&r, &z);
    let mut r_norm = exec::dot(&r, &r).sqrt();
    let mut history = vec![r_norm];
    let target = opts.rel_tol * b_norm;

    let mut it = 0;
    while r_norm > target {
        if it == max_iter {
            return Err(Error::NoConvergence { iterations: it, residual: r_norm / b_norm });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = exec::dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::InvalidParameter("matrix is not positive definite".into()));
        }
        let step = rz / pap;
        exec::for_each_mut(&mut x, |i, xi| *xi += step * p[i]);
        exec::for_each_mut(&mut r, |i, ri| *ri -= step * ap[i]);
        exec::for_each_mut(&mut z, |i, zi| *zi = inv_diag[i] * r[i]);
        let rz_next = exec::dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        exec::for_each_mut(&mut p, |i, pi| *pi = z[i] + beta * *pi);
        r_norm = exec::dot(&r, &r).sqrt();
        history.push(r_norm);
        it += 1;
    }

    Ok(CgSolution { x, iterations: it, relative_residual: r_norm / b_norm, residual_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{MatrixBuilder, SparseMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn free(n: usize) -> Vec<bool> {
        vec![false; n]
    }

    /// Dense Gaussian elimination with partial pivoting.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                let pivot_row = a[k].clone();
                for (x, p) in a[i][k..].iter_mut().zip(&pivot_row[k..]) {
                    *x -= f * p;
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn identity_returns_rhs() {
        let b = vec![3.0, -1.0, 0.5, 7.0];
        let sys = SparseSystem::new(SparseMatrix::identity(4), b.clone(), free(4)).unwrap();
        let sol = cg_solve(&sys, &[0.0; 4], 1e-12, 10).unwrap();
        for (x, y) in sol.x.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_two_by_two() {
        let sys = SparseSystem::new(SparseMatrix::from_diagonal(&[2.0, 3.0]), vec![2.0, 3.0], free(2)).unwrap();
        let sol = cg_solve(&sys, &[0.0, 0.0], 1e-12, 10).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn residual_monotone_on_diagonal_matrices() {
        let d: Vec<f64> = (1..=30).map(|i| i as f64 * 0.7).collect();
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let sys = SparseSystem::new(SparseMatrix::from_diagonal(&d), b, free(30)).unwrap();
        let sol = cg_solve(&sys, &[0.0; 30], 1e-12, 100).unwrap();
        assert!(sol.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn random_spd_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [5usize, 50, 200] {
            let bm: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let mut dense = vec![vec![0.0; n]; n];
            let mut builder = MatrixBuilder::new(n);
            for i in 0..n {
                for j in 0..n {
                    let mut v: f64 = (0..n).map(|k| bm[k][i] * bm[k][j]).sum();
                    if i == j {
                        v += 1.0;
                    }
                    dense[i][j] = v;
                    builder.add(i, j, v).unwrap();
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let expect = dense_solve(dense, b.clone());
            let sys = SparseSystem::new(builder.finalize(), b, free(n)).unwrap();
            let sol = cg_solve(&sys, &vec![0.0; n], 1e-13, 10 * n).unwrap();
            let scale = expect.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in sol.x.iter().zip(&expect) {
                assert!((x - y).abs() <= 1e-8 * scale, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn non_convergence_reports_residual() {
        let mut b = MatrixBuilder::new(3);
        for (r, c, v) in [(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 2.0)] {
            b.add(r, c, v).unwrap();
        }
        let sys = SparseSystem::new(b.finalize(), vec![1.0, 2.0, 3.0], free(3)).unwrap();
        match cg_solve(&sys, &[0.0; 3], 1e-14, 1) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        let sys = SparseSystem::new(SparseMatrix::identity(2), vec![1.0, 1.0], free(2)).unwrap();
        assert!(matches!(cg_solve(&sys, &[0.0], 1e-10, 5), Err(Error::DimensionMismatch { .. })));
    }
}
