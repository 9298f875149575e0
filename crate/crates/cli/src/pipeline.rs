//! One experiment: potential, landscape, eigenpairs, Agmon fields and checks.

use std::time::Instant;

use anyhow::Result;
use lattice_landscape::spectral::{eigenpairs_with, EigenOptions};
use lattice_landscape::verify::{
    calibrate_alpha, check_decay_bound, check_eigen_identity, check_green, check_lipschitz, check_max_principle,
    check_uncertainty, decay_gate, decay_profile, decay_test_function, estimate_c_abs_detailed, refine_for_decay,
    well_containment, ALPHA_FACTOR, DEFAULT_CHECK_TOL,
};
use lattice_landscape::{
    check_duality, dual_landscape, dual_transform, generate, solve_landscape, AgmonField, CheckResult,
    DecayBoundParams, Eigenpair, Error, HamiltonianOperator, LandscapeField, LatticeGeometry,
};
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Tolerance of the landscape bound checks.
const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordinal: Option<usize>,
    pub reason: String,
}

/// Per-eigenpair quantities that are reported but not asserted.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub ordinal: usize,
    pub dual: bool,
    pub mu: f64,
    /// Energy at which the field was built (`μ̃` for the dual field).
    pub mu_field: f64,
    pub well_sites: usize,
    pub components: usize,
    pub max_h: f64,
    pub alpha: f64,
    pub c_abs: f64,
    pub c0: f64,
    pub c_abs_edges: usize,
    pub c_abs_violations: usize,
    pub containment: f64,
    pub decay_slope: Option<f64>,
    /// `lhs δ / |φ|²` of the decay bound when it was checked.
    pub decay_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LandscapeSummary {
    pub min_u: f64,
    pub max_u: f64,
    pub lower_bound: f64,
    pub residual_inf: f64,
    pub iterations: usize,
}

impl From<&LandscapeField> for LandscapeSummary {
    fn from(l: &LandscapeField) -> Self {
        Self {
            min_u: l.min_u(),
            max_u: l.max_u(),
            lower_bound: l.lower_bound,
            residual_inf: l.residual_inf,
            iterations: l.iterations,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub potential_ms: f64,
    pub landscape_ms: f64,
    pub eigen_ms: f64,
    pub agmon_ms: f64,
    pub dual_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub name: String,
    pub message: String,
}

impl ErrorInfo {
    pub fn from_anyhow(e: &anyhow::Error) -> Self {
        let name = e.chain().find_map(|c| c.downcast_ref::<Error>()).map_or("Error", Error::name);
        Self { name: name.to_string(), message: format!("{e:#}") }
    }
}

/// Everything computed so far; fields stay empty past a failing stage.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub geom: Option<LatticeGeometry>,
    pub v_max: f64,
    pub potential: Vec<f64>,
    pub landscape: Option<LandscapeField>,
    pub pairs: Vec<Eigenpair>,
    pub fields: Vec<AgmonField>,
    pub dual_landscape: Option<LandscapeField>,
    pub dual_fields: Vec<AgmonField>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub artifacts: Artifacts,
    pub checks: Vec<CheckResult>,
    pub skipped: Vec<Skipped>,
    pub diagnostics: Vec<Diagnostic>,
    pub timings: Timings,
    pub error: Option<ErrorInfo>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// 0 when every check passed, 1 when some check failed, 2 on an error.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            2
        } else if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            0 => "passed",
            1 => "checks_failed",
            _ => "failed",
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Runs `cfg`; module errors are captured in the outcome, not returned.
pub fn run(cfg: &ExperimentConfig) -> RunOutcome {
    let start = Instant::now();
    let mut out = RunOutcome::default();
    if let Err(e) = stages(cfg, &mut out) {
        out.error = Some(ErrorInfo::from_anyhow(&e));
    }
    lattice_landscape::verify::sort_results(&mut out.checks);
    out.timings.total_ms = ms(start);
    out
}

fn stages(cfg: &ExperimentConfig, out: &mut RunOutcome) -> Result<()> {
    cfg.validate()?;
    let geom = cfg.geometry()?;
    out.artifacts.geom = Some(geom);

    let t = Instant::now();
    let potential = generate(&cfg.potential_spec(), &geom)?;
    out.timings.potential_ms = ms(t);
    let v_max = potential.v_max();
    out.artifacts.v_max = v_max;
    out.artifacts.potential = potential.values().to_vec();
    let h = HamiltonianOperator::new(potential);

    let t = Instant::now();
    let landscape = solve_landscape(&h, cfg.tol)?;
    out.timings.landscape_ms = ms(t);
    landscape_checks(&h, &landscape, "", &mut out.checks)?;
    out.checks.push(check_green(&geom, &landscape.u, &out.artifacts.potential)?);
    out.artifacts.landscape = Some(landscape.clone());

    let t = Instant::now();
    let pairs = eigenpairs_with(&h, &cfg.eigs, &EigenOptions::with_tol(cfg.eig_tol))?;
    out.timings.eigen_ms = ms(t);
    out.artifacts.pairs = pairs.clone();

    let t = Instant::now();
    for pair in &pairs {
        let field = AgmonField::new(&geom, &landscape, pair.mu, cfg.delta)?;
        out.checks.push(check_lipschitz(&field, &geom)?.with_ordinal(pair.ordinal));
        for c in check_uncertainty(&h, &landscape.u, &pair.phi, &pair.phi, DEFAULT_CHECK_TOL)? {
            out.checks.push(c.with_ordinal(pair.ordinal));
        }
        let params = decay_params(cfg, &field, &geom, v_max)?;
        let g = decay_test_function(&field.h, params.0.alpha);
        for c in check_eigen_identity(&h, &landscape.u, pair, &g, DEFAULT_CHECK_TOL)? {
            out.checks.push(c.with_ordinal(pair.ordinal));
        }
        let decay = if decay_gate(pair.mu, cfg.delta, cfg.dim, v_max, false) {
            let refined = refine_for_decay(&h, pair, &field, params.0.alpha)?;
            let c = check_decay_bound(&refined, &field, &params.0)?;
            let ratio = c.lhs * cfg.delta / refined.phi.iter().map(|x| x * x).sum::<f64>();
            out.checks.push(c);
            Some((refined, ratio))
        } else {
            out.skipped.push(Skipped {
                name: "decay_bound".into(),
                ordinal: Some(pair.ordinal),
                reason: format!("mu = {} outside (0, V_max - delta]", pair.mu),
            });
            None
        };
        let shown = decay.as_ref().map_or(pair, |d| &d.0);
        out.diagnostics.push(diagnostic(pair, &field, shown, &params, decay.as_ref().map(|d| d.1)));
        out.artifacts.fields.push(field);
    }
    out.timings.agmon_ms = ms(t);

    if cfg.dual {
        let t = Instant::now();
        dual_stages(cfg, &h, &geom, v_max, &pairs, out)?;
        out.timings.dual_ms = ms(t);
    }
    Ok(())
}

fn dual_stages(
    cfg: &ExperimentConfig,
    h: &HamiltonianOperator,
    geom: &LatticeGeometry,
    v_max: f64,
    pairs: &[Eigenpair],
    out: &mut RunOutcome,
) -> Result<()> {
    let dual_h = h.dual()?;
    let dl = dual_landscape(h, cfg.tol)?;
    landscape_checks(&dual_h, &dl, "_dual", &mut out.checks)?;
    out.artifacts.dual_landscape = Some(dl.clone());

    let report = check_duality(h, pairs, 10.0 * cfg.eig_tol.max(pairs.iter().map(|p| p.residual).fold(0.0, f64::max)))?;
    for e in &report.entries {
        out.checks.push(
            CheckResult::inequality("duality_residual", e.residual, report.tol, 0.0)
                .with_ordinal(e.ordinal)
                .with_note(format!("mu_dual = {:.12e}", e.mu_dual)),
        );
    }

    for pair in pairs {
        let field = AgmonField::dual(geom, &dl, v_max, pair.mu, cfg.delta)?;
        out.checks.push(check_lipschitz(&field, geom)?.with_ordinal(pair.ordinal));
        let params = decay_params(cfg, &field, geom, v_max)?;
        let dual_pair = Eigenpair {
            mu: field.mu,
            phi: dual_transform(geom, &pair.phi)?,
            residual: pair.residual,
            ordinal: pair.ordinal,
        };
        let decay = if decay_gate(pair.mu, cfg.delta, cfg.dim, v_max, true) {
            let refined = refine_for_decay(&dual_h, &dual_pair, &field, params.0.alpha)?;
            // the bound is stated for the primal eigenvalue
            let as_primal = Eigenpair { mu: pair.mu, ..refined };
            let c = check_decay_bound(&as_primal, &field, &params.0)?;
            let ratio = c.lhs * cfg.delta / as_primal.phi.iter().map(|x| x * x).sum::<f64>();
            out.checks.push(c);
            Some((as_primal, ratio))
        } else {
            out.skipped.push(Skipped {
                name: "decay_bound_dual".into(),
                ordinal: Some(pair.ordinal),
                reason: format!("mu = {} below 4d + delta", pair.mu),
            });
            None
        };
        let shown = decay.as_ref().map_or(&dual_pair, |d| &d.0);
        out.diagnostics.push(diagnostic(pair, &field, shown, &params, decay.as_ref().map(|d| d.1)));
        out.artifacts.dual_fields.push(field);
    }
    Ok(())
}

/// Maximum principle on `u` and on `u - lower_bound`, plus the bound itself.
fn landscape_checks(h: &HamiltonianOperator, l: &LandscapeField, suffix: &str, checks: &mut Vec<CheckResult>) -> Result<()> {
    let mut mp = check_max_principle(h, &l.u, BOUND_TOL)?;
    mp.name = format!("max_principle{suffix}");
    checks.push(mp);
    let shifted: Vec<f64> = l.u.iter().map(|u| u - l.lower_bound).collect();
    let mut mp = check_max_principle(h, &shifted, BOUND_TOL)?;
    mp.name = format!("max_principle_shifted{suffix}");
    checks.push(mp);
    checks.push(CheckResult::inequality(format!("landscape_lower_bound{suffix}"), l.lower_bound, l.min_u(), BOUND_TOL));
    Ok(())
}

/// `(params, edges used, violations)`, honouring user-supplied `α` and `C`.
fn decay_params(
    cfg: &ExperimentConfig,
    field: &AgmonField,
    geom: &LatticeGeometry,
    v_max: f64,
) -> Result<(DecayBoundParams, usize, usize)> {
    let d = geom.dim() as f64;
    let est = match (cfg.alpha, cfg.c_abs) {
        (Some(a), _) => estimate_c_abs_detailed(field, a, geom)?,
        (None, Some(c)) => {
            let a = if c > 0.0 { ALPHA_FACTOR / (c * d).sqrt() } else { ALPHA_FACTOR / d.sqrt() };
            estimate_c_abs_detailed(field, a, geom)?
        }
        (None, None) => calibrate_alpha(field, geom)?,
    };
    let c_abs = cfg.c_abs.unwrap_or(est.c_abs);
    let params = DecayBoundParams::new(est.alpha, cfg.delta, c_abs, geom, v_max)?;
    Ok((params, est.edges_used, est.violations))
}

fn diagnostic(
    pair: &Eigenpair,
    field: &AgmonField,
    shown: &Eigenpair,
    params: &(DecayBoundParams, usize, usize),
    decay_ratio: Option<f64>,
) -> Diagnostic {
    Diagnostic {
        ordinal: pair.ordinal,
        dual: field.is_dual,
        mu: pair.mu,
        mu_field: field.mu,
        well_sites: field.wells.len(),
        components: field.component_count(),
        max_h: field.h.iter().cloned().fold(0.0, f64::max),
        alpha: params.0.alpha,
        c_abs: params.0.c_abs,
        c0: params.0.c0,
        c_abs_edges: params.1,
        c_abs_violations: params.2,
        containment: well_containment(shown, field),
        decay_slope: decay_profile(shown, field).slope,
        decay_ratio,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lattice_landscape::{BoundaryCondition, PotentialKind, Selection};

    fn small(bc: BoundaryCondition, dual: bool) -> ExperimentConfig {
        ExperimentConfig {
            size: 40,
            bc,
            dual,
            eigs: Selection::List { ordinals: vec![1, 2, 38] },
            ..Default::default()
        }
    }

    #[test]
    fn small_runs_pass_every_check() {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Periodic] {
            let out = run(&small(bc, true));
            assert!(out.error.is_none(), "{:?}", out.error);
            for c in &out.checks {
                assert!(c.passed, "{c:?}");
            }
            assert_eq!(out.exit_code(), 0);
            assert_eq!(out.artifacts.fields.len(), 3);
            assert_eq!(out.artifacts.dual_fields.len(), 3);
            assert!(out.checks.iter().any(|c| c.name == "decay_bound"));
            assert!(out.checks.iter().any(|c| c.name == "decay_bound_dual"));
            assert!(out.checks.iter().any(|c| c.name == "duality_residual"));
        }
    }

    #[test]
    fn module_errors_are_captured() {
        let cfg = ExperimentConfig {
            bc: BoundaryCondition::Periodic,
            potential: PotentialKind::Constant { c: 0.0 },
            size: 10,
            ..Default::default()
        };
        let out = run(&cfg);
        assert_eq!(out.exit_code(), 2);
        assert_eq!(out.error.as_ref().unwrap().name, "InvalidPotential");
        assert_eq!(out.status(), "failed");
    }

    #[test]
    fn user_alpha_is_used() {
        let cfg = ExperimentConfig { size: 60, alpha: Some(0.1), ..Default::default() };
        let out = run(&cfg);
        assert!(out.error.is_none());
        assert_eq!(out.diagnostics[0].alpha, 0.1);
    }
}
