//! CSV and JSON artifacts, written atomically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use lattice_landscape::{AgmonField, CheckResult, LandscapeField};
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::pipeline::{Artifacts, RunOutcome};

pub const REPORT_SCHEMA: &str = "landscape-report/1";

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn num(s: &mut String, x: f64) {
    let _ = write!(s, ",{x:e}");
}

/// One row per site: position, landscape, per-ordinal Agmon data and
/// eigenvectors. The first requested ordinal fills `w_mu`, `h` and
/// `component_label`; later ones get suffixed columns.
pub fn field_csv(a: &Artifacts, landscape: Option<&LandscapeField>, fields: &[AgmonField], phis: &[(usize, &[f64])]) -> Option<String> {
    let geom = a.geom?;
    let n = geom.len();
    if a.potential.len() != n {
        return None;
    }
    let mut s = String::from("linear_index");
    for i in 1..=geom.dim() {
        let _ = write!(s, ",coord_{i}");
    }
    s.push_str(",v,u,w_eff,w_mu,h,component_label");
    for (ord, _) in phis {
        let _ = write!(s, ",phi_{ord}");
    }
    for (ord, _) in phis.iter().skip(1) {
        let _ = write!(s, ",w_mu_{ord},h_{ord},component_label_{ord}");
    }
    s.push('\n');
    for site in 0..n {
        let _ = write!(s, "{site}");
        for axis in 0..geom.dim() {
            let _ = write!(s, ",{}", geom.coord0(site, axis) + 1);
        }
        num(&mut s, a.potential[site]);
        match landscape {
            Some(l) => {
                num(&mut s, l.u[site]);
                num(&mut s, l.w_eff[site]);
            }
            None => s.push_str(",NaN,NaN"),
        }
        match fields.first() {
            Some(f) => {
                num(&mut s, f.w[site]);
                num(&mut s, f.h[site]);
                let _ = write!(s, ",{}", f.component_label[site]);
            }
            None => s.push_str(",NaN,NaN,-1"),
        }
        for (_, phi) in phis {
            num(&mut s, phi[site]);
        }
        for k in 1..phis.len() {
            match fields.get(k) {
                Some(f) => {
                    num(&mut s, f.w[site]);
                    num(&mut s, f.h[site]);
                    let _ = write!(s, ",{}", f.component_label[site]);
                }
                None => s.push_str(",NaN,NaN,-1"),
            }
        }
        s.push('\n');
    }
    Some(s)
}

pub fn eigenpairs_csv(a: &Artifacts) -> String {
    let mut s = String::from("ordinal,mu,residual\n");
    for p in &a.pairs {
        let _ = writeln!(s, "{},{:e},{:e}", p.ordinal, p.mu, p.residual);
    }
    s
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema: &'static str,
    name: &'a str,
    config: &'a ExperimentConfig,
    library_version: &'static str,
    cli_version: &'static str,
    seed: u64,
    sites: usize,
    v_max: f64,
    parallel: bool,
    timings: &'a crate::pipeline::Timings,
}

pub fn report_json(cfg: &ExperimentConfig, out: &RunOutcome) -> Result<String> {
    let a = &out.artifacts;
    let meta = Metadata {
        schema: REPORT_SCHEMA,
        name: &cfg.name,
        config: cfg,
        library_version: lattice_landscape::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        sites: a.geom.map_or(0, |g| g.len()),
        v_max: a.v_max,
        parallel: cfg!(feature = "parallel"),
        timings: &out.timings,
    };
    let pairs: Vec<_> = a
        .pairs
        .iter()
        .map(|p| {
            let mut v = json!({"ordinal": p.ordinal, "mu": p.mu, "residual": p.residual});
            if cfg.dual {
                if let Some(g) = a.geom {
                    v["mu_dual"] = json!(g.spectral_top(a.v_max) - p.mu);
                }
            }
            v
        })
        .collect();
    let value = json!({
        "status": out.status(),
        "failed": out.error.is_some(),
        "metadata": meta,
        "landscape": a.landscape.as_ref().map(crate::pipeline::LandscapeSummary::from),
        "dual_landscape": a.dual_landscape.as_ref().map(crate::pipeline::LandscapeSummary::from),
        "eigenpairs": pairs,
        "checks": out.checks,
        "skipped": out.skipped,
        "diagnostics": out.diagnostics,
        "error": out.error,
    });
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

/// Writes every artifact that the outcome holds into `cfg.out`.
pub fn write_run(cfg: &ExperimentConfig, out: &RunOutcome) -> Result<()> {
    let dir = &cfg.out;
    let a = &out.artifacts;
    let phis: Vec<(usize, &[f64])> = a.pairs.iter().map(|p| (p.ordinal, p.phi.as_slice())).collect();
    if let Some(csv) = field_csv(a, a.landscape.as_ref(), &a.fields, &phis) {
        write_atomic(&dir.join("field.csv"), &csv)?;
    }
    if cfg.dual && a.dual_landscape.is_some() {
        let geom = a.geom.expect("geometry precedes the dual landscape");
        let dual_phis: Vec<Vec<f64>> = a
            .pairs
            .iter()
            .map(|p| lattice_landscape::dual_transform(&geom, &p.phi))
            .collect::<Result<_, _>>()?;
        let dual_refs: Vec<(usize, &[f64])> = a.pairs.iter().zip(&dual_phis).map(|(p, v)| (p.ordinal, v.as_slice())).collect();
        let dual_artifacts = Artifacts {
            potential: a.potential.iter().map(|v| a.v_max - v).collect(),
            ..a.clone()
        };
        if let Some(csv) = field_csv(&dual_artifacts, a.dual_landscape.as_ref(), &a.dual_fields, &dual_refs) {
            write_atomic(&dir.join("field_dual.csv"), &csv)?;
        }
    }
    if !a.pairs.is_empty() {
        write_atomic(&dir.join("eigenpairs.csv"), &eigenpairs_csv(a))?;
    }
    write_atomic(&dir.join("report.json"), &report_json(cfg, out)?)?;
    Ok(())
}

/// Report for a list of standalone checks.
pub fn suite_json(checks: &[CheckResult], error: Option<&crate::pipeline::ErrorInfo>) -> Result<String> {
    let passed = checks.iter().all(|c| c.passed);
    let status = if error.is_some() {
        "failed"
    } else if passed {
        "passed"
    } else {
        "checks_failed"
    };
    let value = json!({
        "status": status,
        "failed": error.is_some(),
        "metadata": {
            "schema": REPORT_SCHEMA,
            "name": "verify-suite",
            "library_version": lattice_landscape::VERSION,
            "cli_version": env!("CARGO_PKG_VERSION"),
        },
        "checks": checks,
        "error": error,
    });
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}
