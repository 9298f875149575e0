//! The landscape equation `H u = 1` and its dual `H̃ ũ = 1`.
//!
//! `H` is symmetric positive definite whenever `V >= 0` (and `V ≢ 0` on the
//! torus), so the solve is a Jacobi-preconditioned conjugate gradient
//! iteration with iterative refinement, stopping on the max-norm of the
//! residual `1 - H u`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::exec::{norm_inf, Exec};
use crate::lattice::BoundaryCondition;
use crate::operators::{HamiltonianOperator, OperatorForm, SiteOperator};

pub const DEFAULT_LANDSCAPE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for `||b - A x||_inf`.
    pub tol: f64,
    /// Iteration cap; `None` means `ceil(50 sqrt(N))`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_LANDSCAPE_TOL, max_iter: None }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| (50.0 * (n as f64).sqrt()).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_inf: f64,
}

/// Relative residual reduction asked of each inner solve.
const INNER_REDUCTION: f64 = 1e-6;
/// Plain residuals are recomputed from scratch this often inside a solve.
const REPLACE_EVERY: usize = 50;

/// Preconditioned conjugate gradients for a symmetric positive definite
/// site operator, wrapped in iterative refinement.
///
/// Each round computes the residual `b - A x` through
/// [`SiteOperator::residual_into`] (compensated for [`HamiltonianOperator`]),
/// solves for a correction to a fixed relative accuracy and adds it. This
/// reaches residuals below the rounding floor of a plain evaluation, which
/// matters when `u` is large. Convergence is judged on that residual only.
pub fn conjugate_gradient<A: SiteOperator>(
    op: &A,
    rhs: &[f64],
    x0: Option<&[f64]>,
    opts: &SolverOptions,
    exec: Exec,
) -> Result<CgOutcome> {
    let n = op.len();
    check_len(n, rhs.len())?;
    let mut x = match x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let inv_diag: Vec<f64> = match op.diagonal() {
        Some(d) => d.iter().map(|&v| if v > 0.0 { 1.0 / v } else { 1.0 }).collect(),
        None => vec![1.0; n],
    };
    let cap = opts.cap(n);
    let mut r = vec![0.0; n];
    op.residual_into(&x, rhs, &mut r);
    let mut res = norm_inf(&r);
    let mut total = 0;
    let mut d = vec![0.0; n];
    while res > opts.tol {
        if total >= cap {
            return Err(Error::SolverDiverged { iterations: total, residual: res });
        }
        d.fill(0.0);
        let target = (res * INNER_REDUCTION).max(0.5 * opts.tol);
        total += pcg(op, &r, &mut d, &inv_diag, target, cap - total, exec)?;
        exec.axpy(1.0, &d, &mut x);
        op.residual_into(&x, rhs, &mut r);
        let next = norm_inf(&r);
        if !(next < 0.5 * res) && next > opts.tol {
            return Err(Error::SolverDiverged { iterations: total, residual: next });
        }
        res = next;
    }
    Ok(CgOutcome { x, iterations: total, residual_inf: res })
}

/// Plain Jacobi-preconditioned CG for `A d = b` from `d = 0`, stopping when
/// `||b - A d||_inf <= target` or after `budget` iterations. Returns the
/// number of iterations taken.
fn pcg<A: SiteOperator>(
    op: &A,
    b: &[f64],
    d: &mut [f64],
    inv_diag: &[f64],
    target: f64,
    budget: usize,
    exec: Exec,
) -> Result<usize> {
    let n = b.len();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, m)| a * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = exec.dot(&r, &z);
    for it in 1..=budget {
        op.apply_into(&p, &mut ap);
        let pap = exec.dot(&p, &ap);
        if !(pap > 0.0) {
            if it == 1 {
                return Err(Error::SolverDiverged { iterations: it, residual: norm_inf(&r) });
            }
            return Ok(it);
        }
        let alpha = rz / pap;
        exec.axpy(alpha, &p, d);
        exec.axpy(-alpha, &ap, &mut r);
        if it % REPLACE_EVERY == 0 {
            op.apply_into(d, &mut ap);
            exec.fill(&mut r, |i| b[i] - ap[i]);
        }
        if norm_inf(&r) <= target {
            return Ok(it);
        }
        exec.fill(&mut z, |i| r[i] * inv_diag[i]);
        let rz_new = exec.dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        exec.fill(&mut ap, |i| z[i] + beta * p[i]);
        std::mem::swap(&mut p, &mut ap);
    }
    Ok(budget)
}

/// Landscape `u`, effective potential `W = 1/u` and solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeField {
    pub u: Vec<f64>,
    /// `W_n = 1 / u_n`, computed once and shared with the Agmon layer.
    pub w_eff: Vec<f64>,
    pub residual_inf: f64,
    /// `1/V_max` (periodic) or `1/(V_max + d)` (Dirichlet).
    pub lower_bound: f64,
    pub is_dual: bool,
    pub iterations: usize,
}

impl LandscapeField {
    pub fn min_u(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_u(&self) -> f64 {
        self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `min u - lower_bound`; negative values signal a violated bound.
    pub fn positivity_margin(&self) -> f64 {
        self.min_u() - self.lower_bound
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Theoretical lower bound on the landscape for the operator's boundary condition.
pub fn landscape_lower_bound(h: &HamiltonianOperator) -> f64 {
    match h.geom().bc() {
        BoundaryCondition::Periodic => 1.0 / h.v_max(),
        BoundaryCondition::Dirichlet => 1.0 / (h.v_max() + h.geom().dim() as f64),
    }
}

/// Solves `H u = 1` to `||H u - 1||_inf <= tol`.
pub fn solve_landscape(h: &HamiltonianOperator, tol: f64) -> Result<LandscapeField> {
    solve_landscape_with(h, &SolverOptions::with_tol(tol), None)
}

pub fn solve_landscape_with(
    h: &HamiltonianOperator,
    opts: &SolverOptions,
    x0: Option<&[f64]>,
) -> Result<LandscapeField> {
    if h.geom().is_periodic() && h.effective_potential().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidPotential(
            "periodic landscape needs a potential that is not identically zero".into(),
        ));
    }
    let ones = vec![1.0; h.geom().len()];
    let out = conjugate_gradient(h, &ones, x0, opts, h.exec())?;
    let w_eff = out.x.iter().map(|&u| 1.0 / u).collect();
    Ok(LandscapeField {
        u: out.x,
        w_eff,
        residual_inf: out.residual_inf,
        lower_bound: landscape_lower_bound(h),
        is_dual: h.form() == OperatorForm::Dual,
        iterations: out.iterations,
    })
}

/// Solves the dual landscape equation `(-Δ + V_max - V) ũ = 1`.
pub fn dual_landscape(h: &HamiltonianOperator, tol: f64) -> Result<LandscapeField> {
    solve_landscape(&h.dual()?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeGeometry;
    use crate::operators::PotentialField;
    use crate::random_media::{generate, PotentialSpec};
    use nalgebra::DVector;

    fn ham(geom: LatticeGeometry, v: Vec<f64>, v_max: f64) -> HamiltonianOperator {
        HamiltonianOperator::new(PotentialField::new(geom, v, v_max).unwrap())
    }

    #[test]
    fn constant_potential_gives_constant_landscape() {
        for d in [1, 2] {
            let g = LatticeGeometry::periodic(d, 8).unwrap();
            let h = ham(g, vec![3.0; g.len()], 3.0);
            let l = solve_landscape(&h, 1e-12).unwrap();
            assert!(l.u.iter().all(|&u| (u - 1.0 / 3.0).abs() < 1e-12));
            assert!(l.u.iter().zip(&l.w_eff).all(|(u, w)| u * w == 1.0 || (u * w - 1.0).abs() < 1e-15));
        }
    }

    #[test]
    fn dirichlet_free_landscape_matches_dense_and_closed_form() {
        let k = 40;
        let g = LatticeGeometry::dirichlet(1, k).unwrap();
        let h = ham(g, vec![0.0; k], 0.0);
        let l = solve_landscape(&h, 1e-11).unwrap();
        let dense = h.to_dense().lu().solve(&DVector::from_element(k, 1.0)).unwrap();
        for n in 1..=k {
            let exact = (n * (k + 1 - n)) as f64 / 2.0;
            assert!((l.u[n - 1] - exact).abs() < 1e-8);
            assert!((dense[n - 1] - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn bernoulli_lower_bounds() {
        for (seed, bc) in [(1u64, BoundaryCondition::Periodic), (2, BoundaryCondition::Dirichlet)] {
            let g = LatticeGeometry::new(1, 300, bc).unwrap();
            let v = generate(&PotentialSpec::bernoulli(0.0, 5.0, 0.7, seed), &g).unwrap();
            let l = solve_landscape(&HamiltonianOperator::new(v), 1e-10).unwrap();
            assert!(l.residual_inf <= 1e-10);
            assert!(l.positivity_margin() >= -1e-9, "{bc}: {}", l.positivity_margin());
        }
    }

    #[test]
    fn dual_landscape_examples() {
        let g = LatticeGeometry::periodic(1, 4).unwrap();
        let h = ham(g, vec![0., 5., 0., 5.], 5.0);
        let dual = dual_landscape(&h, 1e-12).unwrap();
        assert!(dual.is_dual);
        let swapped = solve_landscape(&ham(g, vec![5., 0., 5., 0.], 5.0), 1e-12).unwrap();
        for (a, b) in dual.u.iter().zip(&swapped.u) {
            assert!((a - b).abs() < 1e-12);
        }

        let half = ham(g, vec![2.5; 4], 5.0);
        let u = solve_landscape(&half, 1e-12).unwrap();
        let ud = dual_landscape(&half, 1e-12).unwrap();
        for (a, b) in u.u.iter().zip(&ud.u) {
            assert!((a - b).abs() < 1e-12);
        }

        let odd = ham(LatticeGeometry::periodic(1, 5).unwrap(), vec![1.0; 5], 1.0);
        assert_eq!(dual_landscape(&odd, 1e-10).unwrap_err(), Error::OddPeriodicDual { side: 5 });
    }

    #[test]
    fn hypothesis_and_divergence_errors() {
        let g = LatticeGeometry::periodic(1, 6).unwrap();
        let zero = ham(g, vec![0.0; 6], 0.0);
        assert!(matches!(solve_landscape(&zero, 1e-10), Err(Error::InvalidPotential(_))));
        // constant potential: dual potential vanishes identically
        let c = ham(g, vec![3.0; 6], 3.0);
        assert!(matches!(dual_landscape(&c, 1e-10), Err(Error::InvalidPotential(_))));

        let gd = LatticeGeometry::dirichlet(1, 200).unwrap();
        let h = ham(gd, vec![0.0; 200], 0.0);
        let opts = SolverOptions { tol: 1e-12, max_iter: Some(3) };
        assert!(matches!(solve_landscape_with(&h, &opts, None), Err(Error::SolverDiverged { iterations: 3, .. })));
    }

    #[test]
    fn different_starting_points_agree() {
        let g = LatticeGeometry::dirichlet(2, 20).unwrap();
        let v = generate(&PotentialSpec::uniform(5.0, 9), &g).unwrap();
        let h = HamiltonianOperator::new(v);
        let tol = 1e-10;
        let a = solve_landscape_with(&h, &SolverOptions::with_tol(tol), None).unwrap();
        let start: Vec<f64> = (0..g.len()).map(|i| (i % 7) as f64).collect();
        let b = solve_landscape_with(&h, &SolverOptions::with_tol(tol), Some(&start)).unwrap();
        // |u_a - u_b| <= (|r_a| + |r_b|) * u componentwise (H^{-1} is entrywise non-negative)
        let scale = a.max_u();
        let diff = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff <= 10.0 * tol * scale, "{diff}");
    }
}
