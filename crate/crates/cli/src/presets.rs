//! Named experiment setups.
//!
//! The eigenvalues quoted for the reference figures come from unrecorded
//! realizations, so a preset reproduces a setup, not a number; only the
//! order of magnitude of `μ` is comparable.

use std::path::Path;

use lattice_landscape::{BoundaryCondition, PotentialKind, Selection};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub runs: Vec<ExperimentConfig>,
    /// Also runs the standalone check suite.
    pub suite: bool,
}

const BERNOULLI: PotentialKind = PotentialKind::Bernoulli { low: 0.0, high: 5.0, p_low: 0.7 };

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        dim: 1,
        size: 300,
        bc: BoundaryCondition::Dirichlet,
        potential: BERNOULLI,
        seed: 1,
        delta: 0.01,
        ..Default::default()
    }
}

fn list(ordinals: &[usize]) -> Selection {
    Selection::List { ordinals: ordinals.to_vec() }
}

pub fn presets() -> Vec<Preset> {
    let separation = |v_max: f64| ExperimentConfig {
        potential: PotentialKind::Bernoulli { low: 0.0, high: v_max, p_low: 0.7 },
        eigs: list(&[50]),
        ..base(&format!("fig-separation-vmax{v_max}"))
    };
    vec![
        Preset {
            name: "fig-periodic-1d",
            description: "1-d torus, K = 300, Bernoulli{0,5,0.7}: landscape, wells and eigenvectors 1 and 4",
            runs: vec![ExperimentConfig { bc: BoundaryCondition::Periodic, eigs: list(&[1, 4]), ..base("fig-periodic-1d") }],
            suite: false,
        },
        Preset {
            name: "fig-bernoulli-1d",
            description: "1-d Dirichlet cube, K = 300, Bernoulli{0,5,0.7}, delta = 0.01: eigenvectors 1, 4, 12 and their Agmon decay",
            runs: vec![ExperimentConfig { eigs: list(&[1, 4, 12]), ..base("fig-bernoulli-1d") }],
            suite: false,
        },
        Preset {
            name: "fig-dual-1d",
            description: "Same potential, eigenvector 290 through the dual landscape",
            runs: vec![ExperimentConfig { eigs: list(&[290]), dual: true, ..base("fig-dual-1d") }],
            suite: false,
        },
        Preset {
            name: "fig-uniform-1d",
            description: "1-d Dirichlet cube, K = 300, uniform potential on [0,5]: eigenvector 4",
            runs: vec![ExperimentConfig {
                potential: PotentialKind::Uniform { v_max: 5.0 },
                eigs: list(&[4]),
                ..base("fig-uniform-1d")
            }],
            suite: false,
        },
        Preset {
            name: "fig-separation",
            description: "Eigenvector 50 for Bernoulli potentials with V_max = 5 and V_max = 64, otherwise identical",
            runs: vec![separation(5.0), separation(64.0)],
            suite: false,
        },
        Preset {
            name: "fig-2d-uniform",
            description: "2-d Dirichlet cube, K = 100, uniform potential on [0,5], delta = 0.05: ground state",
            runs: vec![ExperimentConfig {
                dim: 2,
                size: 100,
                potential: PotentialKind::Uniform { v_max: 5.0 },
                delta: 0.05,
                eigs: list(&[1]),
                ..base("fig-2d-uniform")
            }],
            suite: false,
        },
        Preset {
            name: "verify-suite",
            description: "Every check on small instances of both boundary conditions, plus the standalone identity suite",
            runs: [BoundaryCondition::Dirichlet, BoundaryCondition::Periodic]
                .into_iter()
                .map(|bc| ExperimentConfig {
                    size: 40,
                    bc,
                    dual: true,
                    eigs: list(&[1, 2, 3, 38, 39, 40]),
                    ..base(&format!("verify-suite-{bc}"))
                })
                .collect(),
            suite: true,
        },
    ]
}

pub fn find(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}

/// Places each run of `preset` in its own subdirectory of `root` when there
/// are several.
pub fn with_output(mut preset: Preset, root: &Path) -> Preset {
    let many = preset.runs.len() > 1;
    for run in &mut preset.runs {
        run.out = if many { root.join(&run.name) } else { root.to_path_buf() };
    }
    preset
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        let all = presets();
        assert!(all.len() >= 6);
        for p in &all {
            assert!(!p.runs.is_empty());
            for r in &p.runs {
                r.validate().unwrap();
            }
        }
        let mut names: Vec<_> = all.iter().map(|p| p.name).collect();
        names.dedup();
        assert_eq!(names.len(), all.len());
    }

    #[test]
    fn separation_differs_only_in_vmax() {
        let p = find("fig-separation").unwrap();
        let (a, b) = (&p.runs[0], &p.runs[1]);
        let strip = |c: &ExperimentConfig| ExperimentConfig { name: String::new(), potential: BERNOULLI, ..c.clone() };
        assert_eq!(strip(a), strip(b));
        assert_eq!(a.potential, PotentialKind::Bernoulli { low: 0.0, high: 5.0, p_low: 0.7 });
        assert_eq!(b.potential, PotentialKind::Bernoulli { low: 0.0, high: 64.0, p_low: 0.7 });
        let p = with_output(p, Path::new("o"));
        assert_ne!(p.runs[0].out, p.runs[1].out);
    }
}
