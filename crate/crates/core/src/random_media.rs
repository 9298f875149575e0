//! Seeded disorder potentials.
//!
//! Every site draws from a ChaCha8 keystream positioned at a word offset
//! derived from its linear index, so a field is a pure function of
//! `(seed, geometry, kind)` regardless of traversal order or thread count.

use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::LatticeGeometry;
use crate::operators::PotentialField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialKind {
    /// `low` with probability `p_low`, otherwise `high`.
    Bernoulli { low: f64, high: f64, p_low: f64 },
    /// Uniform on `[0, v_max]`.
    Uniform { v_max: f64 },
    Constant { c: f64 },
    /// Values read from disk; `v_max` defaults to the largest value.
    FromFile { path: PathBuf, v_max: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub seed: u64,
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    pub fn bernoulli(low: f64, high: f64, p_low: f64, seed: u64) -> Self {
        Self::new(PotentialKind::Bernoulli { low, high, p_low }, seed)
    }

    pub fn uniform(v_max: f64, seed: u64) -> Self {
        Self::new(PotentialKind::Uniform { v_max }, seed)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(PotentialKind::Constant { c }, 0)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            PotentialKind::Bernoulli { low, high, p_low } => {
                if !(*low >= 0.0 && low < high && high.is_finite()) {
                    return Err(Error::InvalidPotential(format!("Bernoulli needs 0 <= low < high, got {low}, {high}")));
                }
                if !(0.0..=1.0).contains(p_low) {
                    return Err(Error::InvalidPotential(format!("p_low must lie in [0, 1], got {p_low}")));
                }
            }
            PotentialKind::Uniform { v_max } => {
                if !(v_max.is_finite() && *v_max > 0.0) {
                    return Err(Error::InvalidPotential(format!("uniform V_max must be positive, got {v_max}")));
                }
            }
            PotentialKind::Constant { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::InvalidPotential(format!("constant must be non-negative, got {c}")));
                }
            }
            PotentialKind::FromFile { v_max, .. } => {
                if let Some(v) = v_max {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(Error::InvalidPotential(format!("V_max must be non-negative, got {v}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Uniform `[0, 1)` sample for `site` on keystream `stream`.
fn site_uniform(seed: u64, stream: u64, site: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(2 * site as u128);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Builds the potential described by `spec` on `geom`.
pub fn generate(spec: &PotentialSpec, geom: &LatticeGeometry) -> Result<PotentialField> {
    generate_with(spec, geom, Exec::default())
}

pub fn generate_with(spec: &PotentialSpec, geom: &LatticeGeometry, exec: Exec) -> Result<PotentialField> {
    spec.validate()?;
    let n = geom.len();
    let seed = spec.seed;
    let (mut values, v_max) = match &spec.kind {
        PotentialKind::Bernoulli { low, high, p_low } => {
            let mut v = vec![0.0; n];
            exec.fill(&mut v, |i| if site_uniform(seed, 0, i) < *p_low { *low } else { *high });
            (v, *high)
        }
        PotentialKind::Uniform { v_max } => {
            let mut v = vec![0.0; n];
            exec.fill(&mut v, |i| site_uniform(seed, 0, i) * v_max);
            (v, *v_max)
        }
        PotentialKind::Constant { c } => {
            if *c == 0.0 && geom.is_periodic() {
                return Err(Error::InvalidPotential(
                    "a zero constant potential makes the periodic operator singular".into(),
                ));
            }
            (vec![*c; n], *c)
        }
        PotentialKind::FromFile { path, v_max } => {
            let v = read_potential_file(path)?;
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
            let vm = v_max.unwrap_or_else(|| v.iter().cloned().fold(0.0, f64::max));
            (v, vm)
        }
    };
    if geom.is_periodic() && values.iter().all(|&v| v == 0.0) {
        if v_max <= 0.0 {
            return Err(Error::InvalidPotential("potential is identically zero on a periodic lattice".into()));
        }
        let site = ((site_uniform(seed, 1, 0) * n as f64) as usize).min(n - 1);
        values[site] = v_max;
    }
    PotentialField::new(*geom, values, v_max)
}

/// Reads a potential: plain text with one value per line in linear-index
/// order, or a field CSV whose header contains a `v` column.
pub fn read_potential_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_potential_text(&text)
}

pub fn parse_potential_text(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).peekable();
    let header = lines.peek().copied().unwrap_or("");
    let column = if header.contains(',') && header.split(',').any(|c| c.trim() == "v") {
        let col = header.split(',').position(|c| c.trim() == "v").unwrap();
        lines.next();
        Some(col)
    } else {
        None
    };
    lines
        .enumerate()
        .map(|(i, line)| {
            let field = match column {
                Some(c) => line
                    .split(',')
                    .nth(c)
                    .ok_or_else(|| Error::Parse(format!("row {} has no column {c}", i + 1)))?,
                None => line,
            };
            field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: '{field}': {e}", i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_fraction_concentrates() {
        let g = LatticeGeometry::dirichlet(1, 300).unwrap();
        let f = generate(&PotentialSpec::bernoulli(0.0, 5.0, 0.7, 11), &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0 || v == 5.0));
        let zeros = f.values().iter().filter(|&&v| v == 0.0).count() as f64 / 300.0;
        assert!((0.6..=0.8).contains(&zeros), "zero fraction {zeros}");
        assert_eq!(f.v_max(), 5.0);
    }

    #[test]
    fn bernoulli_within_four_sigma_across_seeds() {
        let g = LatticeGeometry::periodic(1, 400).unwrap();
        let sigma = (0.7f64 * 0.3 / 400.0).sqrt();
        for seed in 0..50 {
            let f = generate(&PotentialSpec::bernoulli(0.0, 5.0, 0.7, seed), &g).unwrap();
            let p = f.values().iter().filter(|&&v| v == 0.0).count() as f64 / 400.0;
            assert!((p - 0.7).abs() <= 4.0 * sigma, "seed {seed}: {p}");
        }
    }

    #[test]
    fn constant_and_errors() {
        let g = LatticeGeometry::periodic(2, 4).unwrap();
        let f = generate(&PotentialSpec::constant(3.0), &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 3.0));
        assert!(matches!(generate(&PotentialSpec::constant(0.0), &g), Err(Error::InvalidPotential(_))));
        let gd = LatticeGeometry::dirichlet(2, 4).unwrap();
        assert!(generate(&PotentialSpec::constant(0.0), &gd).is_ok());
        assert!(generate(&PotentialSpec::bernoulli(5.0, 1.0, 0.5, 0), &g).is_err());
        assert!(generate(&PotentialSpec::bernoulli(0.0, 1.0, 1.5, 0), &g).is_err());
    }

    #[test]
    fn determinism_and_exec_independence() {
        let g = LatticeGeometry::dirichlet(2, 70).unwrap();
        let spec = PotentialSpec::uniform(5.0, 42);
        let a = generate_with(&spec, &g, Exec::Sequential).unwrap();
        let b = generate_with(&spec, &g, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let c = generate(&PotentialSpec::uniform(5.0, 43), &g).unwrap();
        assert_ne!(a, c);
        assert!(a.values().iter().all(|&v| (0.0..=5.0).contains(&v)));
    }

    #[test]
    fn periodic_zero_draw_is_rescued() {
        let g = LatticeGeometry::periodic(1, 10).unwrap();
        let f = generate(&PotentialSpec::bernoulli(0.0, 5.0, 1.0, 3), &g).unwrap();
        assert_eq!(f.values().iter().filter(|&&v| v == 5.0).count(), 1);
        let gd = LatticeGeometry::dirichlet(1, 10).unwrap();
        let f = generate(&PotentialSpec::bernoulli(0.0, 5.0, 1.0, 3), &gd).unwrap();
        assert!(f.is_identically_zero());
    }

    #[test]
    fn file_formats() {
        assert_eq!(parse_potential_text("1\n2.5\n\n0\n").unwrap(), vec![1.0, 2.5, 0.0]);
        let csv = "linear_index,coord_1,v,u\n0,1,3.0,0.1\n1,2,4.0,0.2\n";
        assert_eq!(parse_potential_text(csv).unwrap(), vec![3.0, 4.0]);
        assert!(parse_potential_text("1\nx\n").is_err());

        let dir = std::env::temp_dir().join(format!("ll-pot-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("v.txt");
        std::fs::write(&path, "1\n2\n3\n").unwrap();
        let g = LatticeGeometry::dirichlet(1, 3).unwrap();
        let spec = PotentialSpec::new(PotentialKind::FromFile { path: path.clone(), v_max: None }, 0);
        let f = generate(&spec, &g).unwrap();
        assert_eq!(f.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(f.v_max(), 3.0);
        let g4 = LatticeGeometry::dirichlet(1, 4).unwrap();
        assert!(matches!(generate(&spec, &g4), Err(Error::DimensionMismatch { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }
}
