//! Shift-invert Lanczos for the eigenpairs closest to zero.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use faer::linalg::solvers::Solve;
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenpairs of the Hermitian `h` with the `k` smallest `|λ|`, sorted by `λ`.
///
/// Lanczos with full reorthogonalization runs on `(H − σ)⁻¹` for a small
/// shift `σ` that keeps the factorization regular even when `H` has an exact
/// kernel. The Krylov dimension doubles until every returned pair meets
/// `‖Hv − λv‖ ≤ tol`.
pub fn lowest_k(h: &CMat, k: usize, norm: f64, tol: f64) -> Result<(Vec<f64>, CMat)> {
    let n = h.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={n}")));
    }
    let sigma = 7.31e-4 * norm.max(1e-3) * std::f64::consts::FRAC_1_SQRT_2;
    let shifted = Mat::from_fn(n, n, |i, j| if i == j { h[(i, j)] - sigma } else { h[(i, j)] });
    let lu = shifted.partial_piv_lu();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let start: Vec<C64> = (0..n).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();

    let mut steps = (3 * k).max(k + 30).min(n);
    loop {
        let (q, t) = lanczos(&lu, &start, steps, n);
        let m = q.ncols();
        let tm = Mat::from_fn(m, m, |i, j| t[(i, j)]);
        let e = tm.self_adjoint_eigen(Side::Lower).map_err(|e| Error::SolverFailure(format!("{e:?}")))?;
        let theta = e.S().column_vector();
        let y = e.U();
        let mut cand: Vec<(f64, usize)> = (0..m)
            .filter(|&i| theta[i].abs() > 0.0)
            .map(|i| (sigma + 1.0 / theta[i], i))
            .collect();
        cand.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
        cand.truncate(k);
        if cand.len() == k {
            let mut vecs: CMat = Mat::zeros(n, k);
            let mut ok = true;
            for (col, &(lam, i)) in cand.iter().enumerate() {
                let mut x = vec![ZERO; n];
                for (j, yj) in (0..m).map(|j| (j, y[(j, i)])) {
                    for r in 0..n {
                        x[r] += q[(r, j)] * yj;
                    }
                }
                let nx = linalg::vec_norm(&x);
                x.iter_mut().for_each(|z| *z /= nx);
                let hx = linalg::mat_vec(h.as_ref(), &x);
                let res = hx.iter().zip(&x).map(|(a, b)| (a - b * lam).norm_sqr()).sum::<f64>().sqrt();
                ok &= res <= tol;
                for r in 0..n {
                    vecs[(r, col)] = x[r];
                }
            }
            if ok || m == n || m < steps {
                if !ok {
                    return Err(Error::SolverFailure(format!("Lanczos residual above {tol:e} with a full Krylov space")));
                }
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by(|&a, &b| cand[a].0.total_cmp(&cand[b].0));
                let vals = order.iter().map(|&i| cand[i].0).collect();
                let sorted = Mat::from_fn(n, k, |r, c| vecs[(r, order[c])]);
                return Ok((vals, sorted));
            }
        }
        if steps == n {
            return Err(Error::SolverFailure("Lanczos did not converge".into()));
        }
        steps = (2 * steps).min(n);
    }
}

/// Runs `steps` Lanczos iterations; returns the orthonormal basis and the
/// projected (real symmetric) tridiagonal matrix. Stops early on breakdown.
fn lanczos(lu: &faer::linalg::solvers::PartialPivLu<C64>, start: &[C64], steps: usize, n: usize) -> (CMat, Mat<f64>) {
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    let nrm = linalg::vec_norm(start);
    basis.push(start.iter().map(|z| z / nrm).collect());
    for j in 0..steps {
        let rhs = Mat::from_fn(n, 1, |i, _| basis[j][i]);
        let sol = lu.solve(&rhs);
        let mut w: Vec<C64> = (0..n).map(|i| sol[(i, 0)]).collect();
        let a = linalg::dot(&basis[j], &w).re;
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = linalg::dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = linalg::vec_norm(&w);
        if j + 1 == steps || b < 1e-13 * a.abs().max(1e-300) {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let q = Mat::from_fn(n, m, |i, j| basis[j][i]);
    (q, t)
}
