//! Numerical checks of the identities, inequalities and decay bounds.
//!
//! Every check returns a [`CheckResult`] holding both sides as computed by
//! independent routes. Identities pass when `|lhs - rhs| <= tol * scale` and
//! inequalities when `lhs <= rhs + tol * scale`, with
//! `scale = max(|lhs|, |rhs|, 1)`. Checks that involve a numerically solved
//! landscape or eigenpair widen the tolerance by the bound their residual
//! puts on the discrepancy; the widening is recorded in the result.

use serde::{Deserialize, Serialize};

use crate::agmon::{edge_cost, AgmonField};
use crate::error::{check_len, Error, Result};
use crate::lattice::{BoundaryCondition, LatticeGeometry};
use crate::operators::{gradient, neg_laplacian, HamiltonianOperator, SiteOperator};
use crate::spectral::Eigenpair;

pub const DEFAULT_CHECK_TOL: f64 = 1e-9;
/// Tolerance for the Lipschitz bound on computed distance fields.
pub const LIPSCHITZ_TOL: f64 = 1e-12;
/// Safety factor in the calibrated `α = 0.9 / sqrt(C d)`.
pub const ALPHA_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Identity,
    Inequality,
}

/// A site (or edge) singled out by a failed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub site: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub neighbor: Option<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for inequalities, `|lhs - rhs|` for identities.
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    pub fn identity(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let slack = (lhs - rhs).abs();
        Self {
            name: name.into(),
            kind: CheckKind::Identity,
            lhs,
            rhs,
            slack,
            tolerance,
            passed: slack <= tolerance * scale,
            ordinal: None,
            witness: None,
            note: None,
        }
    }

    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        Self {
            name: name.into(),
            kind: CheckKind::Inequality,
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance,
            passed: lhs <= rhs + tolerance * scale,
            ordinal: None,
            witness: None,
            note: None,
        }
    }

    pub fn with_ordinal(mut self, ordinal: usize) -> Self {
        self.ordinal = Some(ordinal);
        self
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// `|lhs - rhs| / max(|lhs|, |rhs|, 1)`.
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(1.0)
    }
}

/// Sorts results by name, then ordinal.
pub fn sort_results(results: &mut [CheckResult]) {
    results.sort_by(|a, b| a.name.cmp(&b.name).then(a.ordinal.cmp(&b.ordinal)));
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<g, -Δ f>` against the summed products of forward differences. On the
/// Dirichlet cube the zero extension also contributes the bonds leaving
/// through the lower faces, `Σ g_n f_n` per axis with `c_i = 1`.
pub fn check_green(geom: &LatticeGeometry, f: &[f64], g: &[f64]) -> Result<CheckResult> {
    check_len(geom.len(), f.len())?;
    check_len(geom.len(), g.len())?;
    let lhs = dot(g, &neg_laplacian(geom, f)?);
    let gf = gradient(geom, f)?;
    let gg = gradient(geom, g)?;
    let mut rhs: f64 = (0..geom.len()).map(|n| gg.dot_at(&gf, n)).sum();
    if geom.bc() == BoundaryCondition::Dirichlet {
        for n in 0..geom.len() {
            let faces = (0..geom.dim()).filter(|&i| geom.coord0(n, i) == 0).count();
            rhs += faces as f64 * g[n] * f[n];
        }
    }
    Ok(CheckResult::identity("green", lhs, rhs, 1e-12))
}


fn argmin(x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in x.iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// If `(A f)_n >= -tol` everywhere, asserts `f_n >= -tol` everywhere. On
/// failure the witness is the most negative entry of `f` (first on ties).
pub fn check_max_principle<A: SiteOperator>(op: &A, f: &[f64], tol: f64) -> Result<CheckResult> {
    let af = op.apply_vec(f)?;
    let (hyp_site, hyp_min) = argmin(&af);
    if hyp_min < -tol {
        return Ok(CheckResult::inequality("max_principle", 0.0, 0.0, tol)
            .with_witness(Witness { site: hyp_site, neighbor: None, value: hyp_min })
            .with_note("hypothesis Af >= 0 not met; check is vacuous"));
    }
    let (site, min_f) = argmin(f);
    let r = CheckResult::inequality("max_principle", -min_f, 0.0, tol);
    Ok(if r.passed { r } else { r.with_witness(Witness { site, neighbor: None, value: min_f }) })
}

/// `H u - 1`.
pub fn landscape_residual(h: &HamiltonianOperator, u: &[f64]) -> Result<Vec<f64>> {
    Ok(h.apply(u)?.into_iter().map(|x| x - 1.0).collect())
}

fn widened(tol: f64, bound: f64, lhs: f64, rhs: f64) -> f64 {
    tol + bound / lhs.abs().max(rhs.abs()).max(1.0)
}

/// Ground-state conjugation identity
/// `<g, H f> = Σ_edges u_a u_b (g_a/u_a - g_b/u_b)(f_a/u_a - f_b/u_b) + Σ g f / u`
/// (in-cube edges on the Dirichlet cube), and its consequence
/// `Σ f² / u <= <f, H f>`.
pub fn check_uncertainty(h: &HamiltonianOperator, u: &[f64], f: &[f64], g: &[f64], tol: f64) -> Result<Vec<CheckResult>> {
    let geom = h.geom();
    check_len(geom.len(), u.len())?;
    check_len(geom.len(), f.len())?;
    check_len(geom.len(), g.len())?;
    let r = landscape_residual(h, u)?;
    let form = |a: &[f64], b: &[f64]| -> (f64, f64, f64) {
        let mut grad = 0.0;
        for (p, q) in geom.edges() {
            grad += u[p] * u[q] * (a[q] / u[q] - a[p] / u[p]) * (b[q] / u[q] - b[p] / u[p]);
        }
        let pot: f64 = (0..geom.len()).map(|n| a[n] * b[n] / u[n]).sum();
        let err: f64 = (0..geom.len()).map(|n| (a[n] * b[n] * r[n] / u[n]).abs()).sum();
        (grad, pot, err)
    };

    let lhs = dot(g, &h.apply(f)?);
    let (grad, pot, err) = form(g, f);
    let rhs = grad + pot;
    let id = CheckResult::identity("uncertainty_identity", lhs, rhs, widened(tol, err, lhs, rhs));

    let quad = dot(f, &h.apply(f)?);
    let (_, pot_ff, err_ff) = form(f, f);
    let ineq = CheckResult::inequality("uncertainty_inequality", pot_ff, quad, widened(tol, err_ff, pot_ff, quad));
    Ok(vec![id, ineq])
}

/// For an eigenpair `(μ, φ)` and any `g`:
/// `Σ (1/u - μ) φ² g² + Σ_edges u_a u_b (g_b φ_b / u_b - g_a φ_a / u_a)² = Σ_edges φ_a φ_b (g_b - g_a)²`,
/// and the bound `Σ (1/u - μ) φ² g² <= ½ Σ_n φ_n² Σ_{m ~ n} (g_m - g_n)²`.
/// The tolerance is widened by `||g² φ|| · residual(φ) + Σ g² φ² |Hu - 1| / u`.
pub fn check_eigen_identity(h: &HamiltonianOperator, u: &[f64], pair: &Eigenpair, g: &[f64], tol: f64) -> Result<Vec<CheckResult>> {
    let geom = h.geom();
    let phi = &pair.phi;
    check_len(geom.len(), u.len())?;
    check_len(geom.len(), phi.len())?;
    check_len(geom.len(), g.len())?;
    let r = landscape_residual(h, u)?;
    let mu = pair.mu;

    let onsite: f64 = (0..geom.len()).map(|n| (1.0 / u[n] - mu) * phi[n] * phi[n] * g[n] * g[n]).sum();
    let mut conj = 0.0;
    let mut cross = 0.0;
    for (a, b) in geom.edges() {
        let t = g[b] * phi[b] / u[b] - g[a] * phi[a] / u[a];
        conj += u[a] * u[b] * t * t;
        cross += phi[a] * phi[b] * (g[b] - g[a]).powi(2);
    }
    let g2phi = (0..geom.len()).map(|n| (g[n] * g[n] * phi[n]).powi(2)).sum::<f64>().sqrt();
    let err = g2phi * pair.residual + (0..geom.len()).map(|n| (g[n] * g[n] * phi[n] * phi[n] * r[n] / u[n]).abs()).sum::<f64>();

    let lhs = onsite + conj;
    let id = CheckResult::identity("eigen_identity", lhs, cross, widened(tol, err, lhs, cross)).with_ordinal(pair.ordinal);

    let mut spread = 0.0;
    for n in 0..geom.len() {
        let mut s = 0.0;
        geom.for_each_neighbor(n, |m| s += (g[m] - g[n]).powi(2));
        spread += phi[n] * phi[n] * s;
    }
    let half = 0.5 * spread;
    let ineq = CheckResult::inequality("eigen_inequality", onsite, half, widened(tol, err, onsite, half)).with_ordinal(pair.ordinal);
    Ok(vec![id, ineq])
}

/// `|h_m - h_n| <= ln(1 + sqrt(min(w_n, w_m)))` on every edge. The result
/// holds the worst excess over the bound as `lhs` against `rhs = 0`.
pub fn check_lipschitz(agmon: &AgmonField, geom: &LatticeGeometry) -> Result<CheckResult> {
    check_len(geom.len(), agmon.h.len())?;
    check_len(geom.len(), agmon.w.len())?;
    let mut worst = f64::NEG_INFINITY;
    let mut at = (0, 0);
    for (a, b) in geom.edges() {
        let excess = (agmon.h[a] - agmon.h[b]).abs() - edge_cost(&agmon.w, a, b);
        if excess > worst {
            worst = excess;
            at = (a, b);
        }
    }
    if worst == f64::NEG_INFINITY {
        worst = 0.0;
    }
    let name = if agmon.is_dual { "lipschitz_dual" } else { "lipschitz" };
    let r = CheckResult::inequality(name, worst, 0.0, LIPSCHITZ_TOL);
    Ok(if r.passed { r } else { r.with_witness(Witness { site: at.0, neighbor: Some(at.1), value: worst }) })
}

/// Per-instance constant in `(e^{±α(h_m - h_n)} - 1)² <= C α² w_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CAbsEstimate {
    pub alpha: f64,
    pub c_abs: f64,
    /// Directed edges with `w_n > 0` that entered the maximum.
    pub edges_used: usize,
    /// Directed edges with `w_n = 0` but a nonzero left side.
    pub violations: usize,
}

/// Smallest `C` satisfying the exponential gradient bound on every directed
/// edge with `w_n > 0`.
pub fn estimate_c_abs_detailed(agmon: &AgmonField, alpha: f64, geom: &LatticeGeometry) -> Result<CAbsEstimate> {
    check_len(geom.len(), agmon.h.len())?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidAlpha { alpha, upper: f64::INFINITY });
    }
    let mut c: f64 = 0.0;
    let mut used = 0;
    let mut violations = 0;
    for (a, b) in geom.edges() {
        let lhs = (alpha * (agmon.h[b] - agmon.h[a]).abs()).exp_m1().powi(2);
        for n in [a, b] {
            let w = agmon.w[n];
            if w > 0.0 {
                used += 1;
                c = c.max(lhs / (alpha * alpha * w));
            } else if lhs > 0.0 {
                violations += 1;
            }
        }
    }
    Ok(CAbsEstimate { alpha, c_abs: c, edges_used: used, violations })
}

pub fn estimate_c_abs(agmon: &AgmonField, alpha: f64, geom: &LatticeGeometry) -> Result<f64> {
    Ok(estimate_c_abs_detailed(agmon, alpha, geom)?.c_abs)
}

/// `α` and `C(α)` with `α = 0.9 / sqrt(C(α) d)`.
///
/// `α² C(α)` is nondecreasing in `α`, so the fixed point is bracketed and
/// bisected; the returned `α` is the lower end, where `C d α² <= 0.81`. When
/// `C` vanishes identically the bound has no content and `α = 0.9 / sqrt(d)`.
pub fn calibrate_alpha(agmon: &AgmonField, geom: &LatticeGeometry) -> Result<CAbsEstimate> {
    let d = geom.dim() as f64;
    let target = ALPHA_FACTOR * ALPHA_FACTOR;
    let g = |alpha: f64| -> Result<(f64, CAbsEstimate)> {
        let est = estimate_c_abs_detailed(agmon, alpha, geom)?;
        Ok((alpha * alpha * est.c_abs * d, est))
    };
    let probe = g(1.0)?;
    if probe.1.c_abs == 0.0 {
        return estimate_c_abs_detailed(agmon, ALPHA_FACTOR / d.sqrt(), geom);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut lo_est = None;
    while g(hi)?.0 <= target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (val, est) = g(mid)?;
        if val <= target {
            lo = mid;
            lo_est = Some(est);
        } else {
            hi = mid;
        }
    }
    match lo_est {
        Some(est) => Ok(est),
        None => estimate_c_abs_detailed(agmon, lo.max(f64::MIN_POSITIVE), geom),
    }
}

/// Constants of the exponential decay bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBoundParams {
    pub alpha: f64,
    pub delta: f64,
    pub c_abs: f64,
    pub dim: usize,
    pub v_max: f64,
    pub bc: BoundaryCondition,
    /// `C0` (periodic) or `C2` (Dirichlet, `V_max` replaced by `V_max + d`).
    pub c0: f64,
}

impl DecayBoundParams {
    pub fn new(alpha: f64, delta: f64, c_abs: f64, geom: &LatticeGeometry, v_max: f64) -> Result<Self> {
        let d = geom.dim() as f64;
        let upper = if c_abs > 0.0 { 1.0 / (c_abs * d).sqrt() } else { f64::INFINITY };
        if !(alpha > 0.0 && alpha < upper) {
            return Err(Error::InvalidAlpha { alpha, upper });
        }
        if !(delta > 0.0) {
            return Err(Error::HypothesisNotMet(format!("delta must be positive, got {delta}")));
        }
        let top = match geom.bc() {
            BoundaryCondition::Periodic => v_max,
            BoundaryCondition::Dirichlet => v_max + d,
        };
        let e = (2.0 * alpha).exp();
        let c0 = (4.0 * e * d + (2.0 + 6.0 * c_abs * alpha * alpha) * e * d * top) / (1.0 - c_abs * d * alpha * alpha);
        Ok(Self { alpha, delta, c_abs, dim: geom.dim(), v_max, bc: geom.bc(), c0 })
    }

    /// Calibrates `α` and `C` on `agmon` and builds the constants.
    pub fn calibrated(agmon: &AgmonField, geom: &LatticeGeometry, v_max: f64) -> Result<Self> {
        let est = calibrate_alpha(agmon, geom)?;
        Self::new(est.alpha, agmon.delta, est.c_abs, geom, v_max)
    }
}

/// Test function `h e^{αh}` below `h = 1` and `e^{αh}` above.
pub fn decay_test_function(h: &[f64], alpha: f64) -> Vec<f64> {
    h.iter().map(|&x| if x < 1.0 { x * (alpha * x).exp() } else { (alpha * x).exp() }).collect()
}

/// `Σ_{h_n >= 1} e^{2α h_n} φ_n² <= (C0/δ) Σ φ_n²` with the primal field
/// (gate `0 < μ <= V_max - δ`) or the dual field (gate `μ >= 4d + δ`, where
/// `μ` is the eigenvalue of the primal operator).
pub fn check_decay_bound(pair: &Eigenpair, agmon: &AgmonField, params: &DecayBoundParams) -> Result<CheckResult> {
    check_len(agmon.h.len(), pair.phi.len())?;
    let d = params.dim as f64;
    let delta = params.delta;
    let mu = pair.mu;
    if agmon.is_dual {
        if mu < 4.0 * d + delta {
            return Err(Error::HypothesisNotMet(format!("dual bound needs mu >= 4d + delta = {}, got {mu}", 4.0 * d + delta)));
        }
    } else if !(mu > 0.0 && mu <= params.v_max - delta) {
        return Err(Error::HypothesisNotMet(format!(
            "primal bound needs 0 < mu <= V_max - delta = {}, got {mu}",
            params.v_max - delta
        )));
    }
    let upper = if params.c_abs > 0.0 { 1.0 / (params.c_abs * d).sqrt() } else { f64::INFINITY };
    if !(params.alpha > 0.0 && params.alpha < upper) {
        return Err(Error::InvalidAlpha { alpha: params.alpha, upper });
    }
    let norm2: f64 = pair.phi.iter().map(|x| x * x).sum();
    let lhs: f64 = agmon
        .h
        .iter()
        .zip(&pair.phi)
        .filter(|(&h, _)| h >= 1.0)
        .map(|(&h, &p)| (2.0 * params.alpha * h).exp() * p * p)
        .sum();
    let rhs = params.c0 / delta * norm2;
    let name = if agmon.is_dual { "decay_bound_dual" } else { "decay_bound" };
    Ok(CheckResult::inequality(name, lhs, rhs, DEFAULT_CHECK_TOL)
        .with_ordinal(pair.ordinal)
        .with_note(format!("ratio lhs*delta/|phi|^2 = {:.6e}", lhs * delta / norm2)))
}

/// Recomputes the eigenvector so that `e^{α h_n} φ_n` is accurate on every
/// site, which the decay bound's left side requires in the far tails.
pub fn refine_for_decay(h: &HamiltonianOperator, pair: &Eigenpair, agmon: &AgmonField, alpha: f64) -> Result<Eigenpair> {
    let weight: Vec<f64> = agmon.h.iter().map(|&x| alpha * x).collect();
    crate::spectral::refine_weighted(h, pair, &weight)
}

/// Whether the decay bound's hypothesis gate admits `mu`.
pub fn decay_gate(mu: f64, delta: f64, dim: usize, v_max: f64, dual: bool) -> bool {
    if dual {
        mu >= 4.0 * dim as f64 + delta
    } else {
        mu > 0.0 && mu <= v_max - delta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    /// `(h_n, log10 |φ_n|)` for `|φ_n| > 1e-30`.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope; `None` when all `h_n` coincide.
    pub slope: Option<f64>,
}

pub fn decay_profile(pair: &Eigenpair, agmon: &AgmonField) -> DecayProfile {
    let points: Vec<(f64, f64)> = agmon
        .h
        .iter()
        .zip(&pair.phi)
        .filter(|(_, p)| p.abs() > 1e-30)
        .map(|(&h, &p)| (h, p.abs().log10()))
        .collect();
    let k = points.len() as f64;
    let slope = if points.len() < 2 {
        None
    } else {
        let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
        let my = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 1e-300 { Some(sxy / sxx) } else { None }
    };
    DecayProfile { points, slope }
}

/// Fraction of `Σ φ²` on wells or within Agmon distance 1 of them.
pub fn well_containment(pair: &Eigenpair, agmon: &AgmonField) -> f64 {
    let total: f64 = pair.phi.iter().map(|x| x * x).sum();
    let inside: f64 = (0..pair.phi.len())
        .filter(|&n| agmon.in_well(n) || agmon.h[n] < 1.0)
        .map(|n| pair.phi[n] * pair.phi[n])
        .sum();
    inside / total
}
