//! Thick-restart Lanczos for the lowest eigenpairs of a symmetric site
//! operator.
//!
//! The basis is kept fully orthogonal (two passes of classical Gram-Schmidt)
//! and the projected matrix `V^T A V` is accumulated column by column. On
//! restart the lowest Ritz vectors are retained; extending the basis with the
//! image of the last retained vector re-enters the Krylov space through the
//! common residual direction.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::operators::SiteOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Absolute residual target `||A x - θ x||_2`.
    pub tol: f64,
    /// Basis size before a restart; `None` picks `max(2k + 30, 60)`.
    pub basis: Option<usize>,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-8, basis: None, max_restarts: 4000, seed: 0x5eed_1a4c }
    }
}

/// A converged Ritz pair.
#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

struct Basis<'a, A: SiteOperator> {
    op: &'a A,
    exec: Exec,
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    // upper triangle of V^T A V: row i holds columns i.., so entry (i, j) is t[i][j - i]
    t: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
}

impl<'a, A: SiteOperator> Basis<'a, A> {
    fn orthogonalize(&self, w: &mut [f64]) {
        for _ in 0..2 {
            let coeffs: Vec<f64> = self.v.iter().map(|q| self.exec.dot(q, w)).collect();
            for (q, c) in self.v.iter().zip(coeffs) {
                self.exec.axpy(-c, q, w);
            }
        }
    }

    fn random_vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.rng.random::<f64>() - 0.5).collect()
    }

    /// Orthonormalizes `w` against the basis and appends it. Returns false
    /// once the basis spans the whole space.
    fn push(&mut self, mut w: Vec<f64>) -> bool {
        let n = w.len();
        if self.v.len() >= n {
            return false;
        }
        let before = self.exec.norm2(&w);
        self.orthogonalize(&mut w);
        let mut norm = self.exec.norm2(&w);
        if !(norm > 1e-10 * before) {
            // invariant subspace reached: continue with a fresh direction
            for _ in 0..8 {
                w = self.random_vector(n);
                let b = self.exec.norm2(&w);
                self.orthogonalize(&mut w);
                norm = self.exec.norm2(&w);
                if norm > 1e-8 * b {
                    break;
                }
            }
            if !(norm > 0.0) {
                return false;
            }
        }
        let inv = 1.0 / norm;
        w.iter_mut().for_each(|x| *x *= inv);
        let mut aw = vec![0.0; n];
        self.op.apply_into(&w, &mut aw);
        let j = self.v.len();
        self.v.push(w);
        self.av.push(aw);
        self.t.push(Vec::new());
        for i in 0..=j {
            let val = self.exec.dot(&self.v[i], &self.av[j]);
            self.t[i].push(val);
        }
        true
    }

    fn projected(&self) -> DMatrix<f64> {
        let m = self.v.len();
        DMatrix::from_fn(m, m, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            self.t[a][b - a]
        })
    }

    fn combine(&self, from: &[Vec<f64>], y: &DMatrix<f64>, col: usize) -> Vec<f64> {
        let n = from[0].len();
        let mut out = vec![0.0; n];
        for (i, q) in from.iter().enumerate() {
            let c = y[(i, col)];
            if c != 0.0 {
                self.exec.axpy(c, q, &mut out);
            }
        }
        out
    }
}

/// Lowest `k` eigenpairs of `op`, ascending.
pub fn lowest_pairs<A: SiteOperator>(op: &A, k: usize, opts: &LanczosOptions, exec: Exec) -> Result<Vec<RitzPair>> {
    let n = op.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > n {
        return Err(Error::IndexOutOfRange { index: k, len: n });
    }
    let m = opts.basis.unwrap_or((2 * k + 30).max(60)).max(k + 10).min(n);
    let keep = (k + 10 + k / 2).min(m.saturating_sub(5)).max(k).min(m);

    let mut basis = Basis {
        op,
        exec,
        v: Vec::with_capacity(m),
        av: Vec::with_capacity(m),
        t: Vec::with_capacity(m),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    let start = basis.random_vector(n);
    if !basis.push(start) {
        return Err(Error::EigenSolverFailed("could not build a starting vector".into()));
    }

    let mut last_res = f64::INFINITY;
    for _restart in 0..=opts.max_restarts {
        while basis.v.len() < m {
            let next = basis.av.last().unwrap().clone();
            if !basis.push(next) {
                break;
            }
        }
        let t = basis.projected();
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let ms = basis.v.len();
        let y = DMatrix::from_fn(ms, ms, |i, j| eig.eigenvectors[(i, order[j])]);
        let theta: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();

        let complete = ms == n;
        let mut pairs = Vec::with_capacity(k);
        let mut worst: f64 = 0.0;
        for j in 0..k {
            let x = basis.combine(&basis.v, &y, j);
            let ax = basis.combine(&basis.av, &y, j);
            let r = exec.sum(n, |i| {
                let d = ax[i] - theta[j] * x[i];
                d * d
            });
            let r = r.sqrt();
            worst = worst.max(r);
            pairs.push(RitzPair { value: theta[j], vector: x, residual: r });
        }
        last_res = worst;
        if worst <= 0.5 * opts.tol || complete {
            return Ok(pairs);
        }

        // thick restart on the lowest `keep` Ritz vectors
        let keep_now = keep.min(ms - 1).max(k);
        let xs: Vec<Vec<f64>> = (0..keep_now).map(|j| basis.combine(&basis.v, &y, j)).collect();
        let axs: Vec<Vec<f64>> = (0..keep_now).map(|j| basis.combine(&basis.av, &y, j)).collect();
        basis.v = xs;
        basis.av = axs;
        basis.t = (0..keep_now)
            .map(|i| {
                let mut row = Vec::with_capacity(m - i);
                row.push(theta[i]);
                row.extend(std::iter::repeat_n(0.0, keep_now - i - 1));
                row
            })
            .collect();
        let next = basis.av.last().unwrap().clone();
        basis.push(next);
    }
    Err(Error::EigenSolverFailed(format!(
        "Lanczos did not converge in {} restarts (worst residual {last_res:e})",
        opts.max_restarts
    )))
}

/// `shift * I - A`, used to reach the top of the spectrum.
pub struct Reflected<'a, A: SiteOperator> {
    pub op: &'a A,
    pub shift: f64,
}

impl<'a, A: SiteOperator> SiteOperator for Reflected<'a, A> {
    fn len(&self) -> usize {
        self.op.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply_into(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi - *yi;
        }
    }
}
