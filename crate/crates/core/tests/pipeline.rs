use lattice_landscape::agmon::AgmonField;
use lattice_landscape::spectral::{certify_ordinal, dense_spectrum};
use lattice_landscape::verify::{check_lipschitz, check_max_principle};
use lattice_landscape::{
    dual_landscape, eigenpairs, generate, generate_with, solve_landscape, BoundaryCondition, Exec, HamiltonianOperator,
    LatticeGeometry, PotentialSpec, Selection,
};
use proptest::prelude::*;

fn bernoulli(geom: LatticeGeometry, seed: u64) -> HamiltonianOperator {
    HamiltonianOperator::new(generate(&PotentialSpec::bernoulli(0.0, 5.0, 0.7, seed), &geom).unwrap())
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let geom = LatticeGeometry::dirichlet(2, 70).unwrap();
    let spec = PotentialSpec::uniform(5.0, 3);
    let vs = generate_with(&spec, &geom, Exec::Sequential).unwrap();
    let vp = generate_with(&spec, &geom, Exec::Parallel).unwrap();
    assert_eq!(vs.values(), vp.values());
    let hs = HamiltonianOperator::new(vs).with_exec(Exec::Sequential);
    let hp = HamiltonianOperator::new(vp).with_exec(Exec::Parallel);
    let us = solve_landscape(&hs, 1e-10).unwrap();
    let up = solve_landscape(&hp, 1e-10).unwrap();
    assert_eq!(us.u, up.u);
    assert_eq!(us.iterations, up.iterations);
}

#[test]
fn dual_landscape_is_the_landscape_of_the_complement() {
    for bc in [BoundaryCondition::Periodic, BoundaryCondition::Dirichlet] {
        let geom = LatticeGeometry::new(1, 50, bc).unwrap();
        let h = bernoulli(geom, 8);
        let a = dual_landscape(&h, 1e-12).unwrap();
        let b = solve_landscape(&HamiltonianOperator::new(h.potential().complement()), 1e-12).unwrap();
        for (x, y) in a.u.iter().zip(&b.u) {
            assert!((x - y).abs() <= 1e-10 * y.abs().max(1.0));
        }
        assert!(a.is_dual);
        assert!(check_max_principle(&h.dual().unwrap(), &a.u, 1e-9).unwrap().passed);
    }
}

#[test]
fn eigenvalues_lie_above_the_lowest_effective_potential() {
    for bc in [BoundaryCondition::Periodic, BoundaryCondition::Dirichlet] {
        let geom = LatticeGeometry::new(1, 80, bc).unwrap();
        let h = bernoulli(geom, 2);
        let l = solve_landscape(&h, 1e-12).unwrap();
        let w_min = l.w_eff.iter().cloned().fold(f64::INFINITY, f64::min);
        let mu1 = dense_spectrum(&h)[0];
        assert!(mu1 >= w_min - 1e-10, "{mu1} < {w_min}");
    }
}

#[test]
fn iterative_pairs_are_certified() {
    let geom = LatticeGeometry::dirichlet(2, 50).unwrap();
    let h = bernoulli(geom, 4);
    let pairs = eigenpairs(&h, &Selection::Lowest { count: 3 }, 1e-8).unwrap();
    for p in &pairs {
        assert!(p.residual <= 1e-8);
        certify_ordinal(&h, p, 1e-8).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dual_fields_satisfy_the_primal_invariants(seed in 0u64..1000, periodic in any::<bool>(), delta in 0.005f64..0.5) {
        let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Dirichlet };
        let geom = LatticeGeometry::new(1, 40, bc).unwrap();
        let h = bernoulli(geom, seed);
        let dl = dual_landscape(&h, 1e-12).unwrap();
        let spectrum = dense_spectrum(&h);
        for &mu in spectrum.iter().rev().take(4) {
            let f = AgmonField::dual(&geom, &dl, h.v_max(), mu, delta).unwrap();
            prop_assert!(f.is_dual);
            prop_assert!(check_lipschitz(&f, &geom).unwrap().passed);
            for &n in &f.wells {
                prop_assert_eq!(f.h[n], 0.0);
            }
            let wider = AgmonField::dual(&geom, &dl, h.v_max(), mu, 2.0 * delta).unwrap();
            prop_assert!(f.wells.iter().all(|n| wider.wells.contains(n)));
            prop_assert!(f.h.iter().zip(&wider.h).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn landscape_dominates_its_lower_bound(seed in 0u64..1000, dim in 1usize..3, periodic in any::<bool>()) {
        let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Dirichlet };
        let geom = LatticeGeometry::new(dim, if dim == 1 { 60 } else { 10 }, bc).unwrap();
        let l = solve_landscape(&bernoulli(geom, seed), 1e-11).unwrap();
        prop_assert!(l.positivity_margin() >= -1e-9);
    }
}
