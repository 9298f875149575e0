//! Standalone checks on small fixed instances.

use anyhow::Result;
use lattice_landscape::agmon::{agmon_metric_matrix, brute_force_metric};
use lattice_landscape::spectral::spectrum_mirror_deviation;
use lattice_landscape::verify::{check_green, check_max_principle};
use lattice_landscape::{
    eigenpairs, generate, solve_landscape, AntiPeriodicOperator, CheckResult, HamiltonianOperator, LatticeGeometry,
    PotentialField, PotentialSpec, Selection,
};

/// Seeded values in `[-1, 1)` drawn through the potential generator.
fn sample(len: usize, seed: u64) -> Result<Vec<f64>> {
    let g = LatticeGeometry::periodic(1, len)?;
    let v = generate(&PotentialSpec::uniform(2.0, seed), &g)?;
    Ok(v.values().iter().map(|x| x - 1.0).collect())
}

/// The anti-periodic ring admits `f = (-1, 1, 3)` with `H f = (0, 0, 4)`,
/// so the maximum principle must fail there with witness `f_1 = -1`.
/// The check passes when that failure is reproduced exactly.
pub fn antiperiodic_counterexample() -> Result<CheckResult> {
    let g = LatticeGeometry::periodic(1, 3)?;
    let op = AntiPeriodicOperator::new(&g, vec![0.0; 3])?;
    let f = [-1.0, 1.0, 3.0];
    let hf = lattice_landscape::operators::antiperiodic_apply_1d(&[0.0; 3], &f)?;
    let r = check_max_principle(&op, &f, 1e-12)?;
    let reproduced = hf == [0.0, 0.0, 4.0]
        && !r.passed
        && r.witness.as_ref().is_some_and(|w| w.site == 0 && w.value == -1.0);
    let mut c = CheckResult::identity("antiperiodic_counterexample", if reproduced { 1.0 } else { 0.0 }, 1.0, 0.0);
    c.note = Some(format!("max principle on the anti-periodic ring: passed = {}, witness = {:?}", r.passed, r.witness));
    Ok(c)
}

pub fn run_suite() -> Result<Vec<CheckResult>> {
    let mut checks = Vec::new();
    checks.push(antiperiodic_counterexample()?);

    for geom in [LatticeGeometry::periodic(2, 8)?, LatticeGeometry::dirichlet(2, 8)?] {
        for seed in 0..5 {
            let f = sample(geom.len(), 2 * seed)?;
            let g = sample(geom.len(), 2 * seed + 1)?;
            let mut c = check_green(&geom, &f, &g)?;
            c.name = format!("green_{}", geom.bc());
            checks.push(c);
        }
    }

    for dim in [1, 2] {
        let geom = LatticeGeometry::periodic(dim, 8)?;
        let h = HamiltonianOperator::new(PotentialField::constant(geom, 3.0)?);
        let l = solve_landscape(&h, 1e-12)?;
        let err = l.u.iter().map(|u| (u - 1.0 / 3.0).abs()).fold(0.0, f64::max);
        checks.push(CheckResult::inequality(format!("constant_landscape_d{dim}"), err, 1e-10, 0.0));
        let p = eigenpairs(&h, &Selection::Lowest { count: 1 }, 1e-10)?.remove(0);
        checks.push(CheckResult::identity(format!("constant_ground_energy_d{dim}"), p.mu, 3.0, 1e-10));
        let c = 1.0 / (geom.len() as f64).sqrt();
        let spread = p.phi.iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
        checks.push(CheckResult::inequality(format!("constant_ground_state_d{dim}"), spread, 1e-8, 0.0));
    }

    for geom in [LatticeGeometry::periodic(1, 10)?, LatticeGeometry::dirichlet(1, 9)?] {
        for seed in 0..3 {
            let v = generate(&PotentialSpec::bernoulli(0.0, 5.0, 0.7, seed), &geom)?;
            let h = HamiltonianOperator::new(v);
            let dev = spectrum_mirror_deviation(&h)?;
            checks.push(CheckResult::inequality(format!("spectrum_mirror_{}", geom.bc()), dev, 1e-8, 0.0));
        }
    }

    for geom in [LatticeGeometry::dirichlet(1, 8)?, LatticeGeometry::periodic(2, 4)?] {
        for seed in 0..3 {
            let w: Vec<f64> = sample(geom.len(), 100 + seed)?.iter().map(|x| 2.0 * (x + 1.0)).collect();
            let fast = agmon_metric_matrix(&w, &geom)?;
            let mut worst = 0.0f64;
            for (n, row) in fast.iter().enumerate() {
                for (m, &d) in row.iter().enumerate().skip(n + 1) {
                    worst = worst.max((d - brute_force_metric(&w, n, m, &geom)?).abs());
                }
            }
            checks.push(CheckResult::inequality(format!("agmon_oracle_d{}", geom.dim()), worst, 1e-12, 0.0));
        }
    }
    lattice_landscape::verify::sort_results(&mut checks);
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counterexample_is_reproduced() {
        assert!(antiperiodic_counterexample().unwrap().passed);
    }

    #[test]
    fn suite_passes() {
        for c in run_suite().unwrap() {
            assert!(c.passed, "{c:?}");
        }
    }
}
