//! Experiment configuration, its textual forms and validation.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use lattice_landscape::{BoundaryCondition, Error, LatticeGeometry, PotentialKind, PotentialSpec, Selection};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dim: usize,
    pub size: usize,
    pub bc: BoundaryCondition,
    pub potential: PotentialKind,
    pub seed: u64,
    pub delta: f64,
    /// Decay rate; calibrated to `0.9 / sqrt(C d)` when absent.
    pub alpha: Option<f64>,
    /// Constant of the exponential gradient bound; measured per field when absent.
    pub c_abs: Option<f64>,
    pub eigs: Selection,
    pub dual: bool,
    /// Landscape residual tolerance.
    pub tol: f64,
    /// Eigenpair residual tolerance.
    pub eig_tol: f64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "run".into(),
            dim: 1,
            size: 300,
            bc: BoundaryCondition::Dirichlet,
            potential: PotentialKind::Bernoulli { low: 0.0, high: 5.0, p_low: 0.7 },
            seed: 1,
            delta: 0.01,
            alpha: None,
            c_abs: None,
            eigs: Selection::List { ordinals: vec![1] },
            dual: false,
            tol: 1e-10,
            eig_tol: 1e-8,
            out: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn geometry(&self) -> Result<LatticeGeometry> {
        Ok(LatticeGeometry::new(self.dim, self.size, self.bc)?)
    }

    pub fn potential_spec(&self) -> PotentialSpec {
        PotentialSpec::new(self.potential.clone(), self.seed)
    }

    /// Rejects every statically detectable precondition violation.
    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry()?;
        self.potential_spec().validate()?;
        if self.dual && geom.is_periodic() && self.size % 2 == 1 {
            return Err(Error::OddPeriodicDual { side: self.size }.into());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            bail!("delta must be positive, got {}", self.delta);
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidAlpha { alpha: a, upper: f64::INFINITY }.into());
            }
        }
        if let Some(c) = self.c_abs {
            if !(c >= 0.0 && c.is_finite()) {
                bail!("c_abs must be non-negative, got {c}");
            }
        }
        for (name, t) in [("tol", self.tol), ("eig_tol", self.eig_tol)] {
            if !(t > 0.0 && t.is_finite()) {
                bail!("{name} must be positive, got {t}");
            }
        }
        let ordinals = self.eigs.ordinals(geom.len())?;
        if ordinals.is_empty() {
            bail!("eigenpair selection is empty");
        }
        Ok(())
    }
}

/// Parses `bernoulli[:low,high,p_low]`, `uniform[:vmax]`, `constant:c` or
/// `file:PATH`.
pub fn parse_potential(text: &str) -> Result<PotentialKind> {
    let text = text.trim();
    let (kind, args) = text.split_once(':').map_or((text, ""), |(k, a)| (k.trim(), a.trim()));
    let nums = || -> Result<Vec<f64>> {
        if args.is_empty() {
            return Ok(Vec::new());
        }
        args.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("bad number '{t}' in potential '{text}': {e}")))
            .collect()
    };
    Ok(match kind.to_ascii_lowercase().as_str() {
        "bernoulli" => match nums()?.as_slice() {
            [] => PotentialKind::Bernoulli { low: 0.0, high: 5.0, p_low: 0.7 },
            [low, high, p_low] => PotentialKind::Bernoulli { low: *low, high: *high, p_low: *p_low },
            _ => bail!("bernoulli takes low,high,p_low"),
        },
        "uniform" => match nums()?.as_slice() {
            [] => PotentialKind::Uniform { v_max: 5.0 },
            [v] => PotentialKind::Uniform { v_max: *v },
            _ => bail!("uniform takes a single V_max"),
        },
        "constant" => match nums()?.as_slice() {
            [c] => PotentialKind::Constant { c: *c },
            _ => bail!("constant takes a single value"),
        },
        "file" => {
            if args.is_empty() {
                bail!("file potential needs a path");
            }
            PotentialKind::FromFile { path: PathBuf::from(args), v_max: None }
        }
        other => bail!("unknown potential kind '{other}' (expected bernoulli, uniform, constant or file)"),
    })
}

/// Replaces the upper bound of `kind` by `v_max`.
pub fn set_vmax(kind: &mut PotentialKind, v_max: f64) -> Result<()> {
    match kind {
        PotentialKind::Bernoulli { high, .. } => *high = v_max,
        PotentialKind::Uniform { v_max: v } => *v = v_max,
        PotentialKind::FromFile { v_max: v, .. } => *v = Some(v_max),
        PotentialKind::Constant { .. } => bail!("--vmax does not apply to a constant potential"),
    }
    Ok(())
}

/// Optional settings from flags or a config file, applied over a base
/// configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dim: Option<usize>,
    pub size: Option<usize>,
    pub bc: Option<BoundaryCondition>,
    pub potential: Option<PotentialKind>,
    pub seed: Option<u64>,
    pub vmax: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub c_abs: Option<f64>,
    pub eigs: Option<Selection>,
    pub dual: Option<bool>,
    pub tol: Option<f64>,
    pub eig_tol: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Fields set in `other` win.
    pub fn merged_with(mut self, other: &Overrides) -> Overrides {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f.clone(); } )* };
        }
        take!(dim, size, bc, potential, seed, vmax, delta, alpha, c_abs, eigs, dual, tol, eig_tol, out);
        self
    }

    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &self.$f { cfg.$f = v.clone(); } )* };
        }
        set!(dim, size, bc, potential, seed, delta, eigs, dual, tol, eig_tol, out);
        if self.alpha.is_some() {
            cfg.alpha = self.alpha;
        }
        if self.c_abs.is_some() {
            cfg.c_abs = self.c_abs;
        }
        if let Some(v) = self.vmax {
            set_vmax(&mut cfg.potential, v)?;
        }
        Ok(())
    }

    /// Sets one field from its textual key (flag name without dashes).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let num = |what: &str| -> Result<f64> { v.parse::<f64>().with_context(|| format!("{what}: expected a number, got '{v}'")) };
        let int = |what: &str| -> Result<u64> { v.parse::<u64>().with_context(|| format!("{what}: expected an integer, got '{v}'")) };
        match key.trim().replace('-', "_").as_str() {
            "dim" => self.dim = Some(int("dim")? as usize),
            "size" => self.size = Some(int("size")? as usize),
            "bc" => self.bc = Some(v.parse()?),
            "potential" => self.potential = Some(parse_potential(v)?),
            "seed" => self.seed = Some(int("seed")?),
            "vmax" => self.vmax = Some(num("vmax")?),
            "delta" => self.delta = Some(num("delta")?),
            "alpha" => self.alpha = Some(num("alpha")?),
            "c_abs" => self.c_abs = Some(num("c_abs")?),
            "eigs" => self.eigs = Some(v.parse()?),
            "dual" => self.dual = Some(parse_bool(v)?),
            "tol" => self.tol = Some(num("tol")?),
            "eig_tol" => self.eig_tol = Some(num("eig_tol")?),
            "out" => self.out = Some(PathBuf::from(v)),
            other => bail!("unknown configuration key '{other}'"),
        }
        Ok(())
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("expected a boolean, got '{v}'"),
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse_config_text(text: &str) -> Result<Overrides> {
    let mut o = Overrides::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected 'key = value'", i + 1))?;
        o.set(k, v).with_context(|| format!("line {}", i + 1))?;
    }
    Ok(o)
}

pub fn read_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_text(&text)
}
