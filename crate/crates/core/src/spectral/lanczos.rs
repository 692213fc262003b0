//! Shift-invert Lanczos with full reorthogonalization and locking.
//!
//! The Krylov space is built for `(H − σ)^{-1}` with `σ` below the spectrum,
//! so the wanted lowest eigenvalues of `H` become the dominant ones. Inner
//! solves use conjugate gradients. Converged Ritz vectors are polished by
//! subspace iteration with a Rayleigh-Ritz step on `H` itself, and every
//! reported pair is checked against `H` directly.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hamiltonian::HamiltonianOperator;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub max_krylov: usize,
    pub max_passes: usize,
    pub max_refinements: usize,
    pub cg_tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_krylov: 400,
            max_passes: 12,
            max_refinements: 30,
            cg_tol: 1e-14,
            seed: 0x5eed,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two rounds of classical Gram-Schmidt
    for _ in 0..2 {
        for u in basis {
            let p = dot(v, u);
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= p * b);
        }
    }
}

/// `(H − σ) x = b` by conjugate gradients; `H − σ ≥ 1` is positive definite.
struct ShiftedSolver<'a> {
    op: &'a HamiltonianOperator,
    sigma: f64,
    tol: f64,
    max_iter: usize,
    r: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
}

impl<'a> ShiftedSolver<'a> {
    fn new(op: &'a HamiltonianOperator, sigma: f64, tol: f64) -> Self {
        let n = op.grid().len();
        ShiftedSolver {
            op,
            sigma,
            tol,
            max_iter: 20 * n + 100,
            r: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
        }
    }

    fn apply_shifted(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply_raw(x, y);
        y.iter_mut().zip(x).for_each(|(a, b)| *a -= self.sigma * b);
    }

    fn solve(&mut self, b: &[f64], x: &mut [f64]) -> Result<()> {
        x.iter_mut().for_each(|v| *v = 0.0);
        self.r.copy_from_slice(b);
        self.p.copy_from_slice(b);
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(());
        }
        let mut rr = dot(&self.r, &self.r);
        for _ in 0..self.max_iter {
            if rr.sqrt() <= self.tol * bnorm {
                return Ok(());
            }
            let mut ap = std::mem::take(&mut self.ap);
            self.apply_shifted(&self.p, &mut ap);
            let alpha = rr / dot(&self.p, &ap);
            for i in 0..x.len() {
                x[i] += alpha * self.p[i];
                self.r[i] -= alpha * ap[i];
            }
            self.ap = ap;
            let rr_new = dot(&self.r, &self.r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..x.len() {
                self.p[i] = self.r[i] + beta * self.p[i];
            }
        }
        // limited by rounding: accept what was reached if it is still small
        if rr.sqrt() <= 1e3 * self.tol * bnorm {
            Ok(())
        } else {
            Err(Error::NoConvergence {
                iterations: self.max_iter,
                achieved: rr.sqrt() / bnorm,
            })
        }
    }
}

/// One Lanczos pass on the complement of `locked`; returns Euclidean Ritz vectors
/// for the `want` dominant Ritz values of the inverse.
fn lanczos_pass(
    solver: &mut ShiftedSolver<'_>,
    locked: &[Vec<f64>],
    want: usize,
    opts: &LanczosOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>> {
    let n = solver.op.grid().len();
    let room = n.saturating_sub(locked.len());
    if room == 0 || want == 0 {
        return Ok(Vec::new());
    }
    let max_m = opts.max_krylov.min(room).max(1);
    let want = want.min(max_m);

    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    orthogonalize(&mut q, locked);
    let qn = norm(&q);
    if qn == 0.0 {
        return Ok(Vec::new());
    }
    q.iter_mut().for_each(|v| *v /= qn);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];

    loop {
        let j = basis.len() - 1;
        solver.solve(&basis[j], &mut w)?;
        let alpha = dot(&w, &basis[j]);
        alphas.push(alpha);
        orthogonalize(&mut w, locked);
        orthogonalize(&mut w, &basis);
        let beta = norm(&w);
        let m = alphas.len();

        let check = m >= want && (m.is_multiple_of(5) || m == max_m || beta <= 1e-13 * alpha.abs());
        if check || m == max_m {
            let t = tridiag_matrix(&alphas, &betas);
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let top = &order[..want.min(m)];
            let converged = top.iter().all(|&i| {
                let theta = eig.eigenvalues[i];
                (beta * eig.eigenvectors[(m - 1, i)]).abs() <= 1e-10 * theta.abs()
            });
            if converged || m == max_m || beta <= 1e-13 * alpha.abs() {
                let ritz = top
                    .iter()
                    .map(|&i| {
                        let mut v = vec![0.0; n];
                        for (c, b) in basis.iter().enumerate() {
                            let s = eig.eigenvectors[(c, i)];
                            v.iter_mut().zip(b).for_each(|(a, x)| *a += s * x);
                        }
                        v
                    })
                    .collect();
                return Ok(ritz);
            }
        }
        betas.push(beta);
        let next: Vec<f64> = w.iter().map(|v| v / beta).collect();
        basis.push(next);
    }
}

fn tridiag_matrix(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

/// Rayleigh-Ritz of `H` on span(vs); returns ascending (values, orthonormal vectors).
fn rayleigh_ritz(op: &HamiltonianOperator, vs: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = op.grid().len();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut u = v.clone();
        orthogonalize(&mut u, &q);
        let un = norm(&u);
        if un > 1e-10 * norm(v).max(f64::MIN_POSITIVE) {
            u.iter_mut().for_each(|x| *x /= un);
            q.push(u);
        }
    }
    let k = q.len();
    let hq: Vec<Vec<f64>> = q
        .iter()
        .map(|u| {
            let mut y = vec![0.0; n];
            op.apply_raw(u, &mut y);
            y
        })
        .collect();
    let mut small = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            small[(i, j)] = 0.5 * (dot(&q[i], &hq[j]) + dot(&q[j], &hq[i]));
        }
    }
    let eig = SymmetricEigen::new(small);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v = vec![0.0; n];
            for (c, u) in q.iter().enumerate() {
                let s = eig.eigenvectors[(c, i)];
                v.iter_mut().zip(u).for_each(|(a, x)| *a += s * x);
            }
            let vn = norm(&v);
            v.iter_mut().for_each(|x| *x /= vn);
            v
        })
        .collect();
    (values, vectors)
}

fn residual(op: &HamiltonianOperator, e: f64, v: &[f64]) -> f64 {
    let mut y = vec![0.0; v.len()];
    op.apply_raw(v, &mut y);
    y.iter()
        .zip(v)
        .map(|(a, b)| (a - e * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Subspace iteration with `(H − σ)^{-1}` until each of the lowest `keep`
/// pairs meets `‖Hv − Ev‖ ≤ tol·max(1, |E|)` (Euclidean, unit vectors).
fn refine(
    solver: &mut ShiftedSolver<'_>,
    locked: &[Vec<f64>],
    start: Vec<Vec<f64>>,
    keep: usize,
    tol: f64,
    max_refinements: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let op = solver.op;
    let n = op.grid().len();
    let mut current = start;
    let mut worst = f64::INFINITY;
    for it in 0..=max_refinements {
        for v in current.iter_mut() {
            orthogonalize(v, locked);
        }
        let (vals, vecs) = rayleigh_ritz(op, &current);
        let k = keep.min(vals.len());
        worst = 0.0;
        let mut ok = true;
        for i in 0..k {
            let r = residual(op, vals[i], &vecs[i]);
            worst = f64::max(worst, r / vals[i].abs().max(1.0));
            if r > tol * vals[i].abs().max(1.0) {
                ok = false;
            }
        }
        if ok {
            return Ok((vals[..k].to_vec(), vecs[..k].to_vec(), worst));
        }
        if it == max_refinements {
            break;
        }
        current = vecs
            .iter()
            .map(|v| {
                let mut y = vec![0.0; n];
                solver.solve(v, &mut y)?;
                Ok(y)
            })
            .collect::<Result<_>>()?;
    }
    Err(Error::NoConvergence {
        iterations: max_refinements,
        achieved: worst,
    })
}

/// Lowest `how_many` eigenpairs of `op` (ascending, Euclidean-orthonormal vectors).
pub fn lowest_eigenpairs(
    op: &HamiltonianOperator,
    how_many: usize,
    tol: f64,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = op.grid().len();
    let how_many = how_many.min(n);
    if how_many == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let sigma = op.potential().min_value() - 1.0;
    let mut solver = ShiftedSolver::new(op, sigma, opts.cg_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // a few guard vectors beyond the wanted count speed up subspace refinement
    let guard = (how_many / 2).max(4);
    let mut values: Vec<f64> = Vec::new();
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    for _pass in 0..opts.max_passes {
        let want = (how_many + guard).min(n - vectors.len());
        if want == 0 {
            break;
        }
        let ritz = lanczos_pass(&mut solver, &vectors, want, opts, &mut rng)?;
        if ritz.is_empty() {
            break;
        }
        let keep = how_many.min(ritz.len());
        let (new_vals, new_vecs, _) =
            refine(&mut solver, &vectors, ritz, keep, tol, opts.max_refinements)?;

        let kth = if values.len() >= how_many {
            values[how_many - 1]
        } else {
            f64::INFINITY
        };
        let lowest_new = new_vals.first().copied().unwrap_or(f64::INFINITY);
        let slack = tol * lowest_new.abs().max(1.0);
        if values.len() >= how_many && lowest_new >= kth - slack {
            break;
        }
        let mut merged: Vec<(f64, Vec<f64>)> = values
            .drain(..)
            .zip(vectors.drain(..))
            .chain(new_vals.into_iter().zip(new_vecs))
            .collect();
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        merged.truncate(how_many);
        let (v, w): (Vec<f64>, Vec<Vec<f64>>) = merged.into_iter().unzip();
        values = v;
        vectors = w;
        if vectors.len() >= n {
            break;
        }
    }
    if values.len() < how_many {
        return Err(Error::NoConvergence {
            iterations: opts.max_passes,
            achieved: f64::NAN,
        });
    }
    Ok((values, vectors))
}
