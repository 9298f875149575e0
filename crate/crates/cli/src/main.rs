use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lattice_landscape::{BoundaryCondition, Selection};

use landscape_cli::config::{parse_potential, read_config_file, ExperimentConfig, Overrides};
use landscape_cli::output::{suite_json, write_atomic, write_run};
use landscape_cli::pipeline::ErrorInfo;
use landscape_cli::{presets, run, suite};

#[derive(Parser)]
#[command(name = "landscape", version, about = "Landscape functions, Agmon distances and localization checks on lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by flags and an optional config file.
    Run(RunArgs),
    /// Run a named preset.
    Preset {
        name: String,
        /// Output directory (default: out/<preset>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the standalone check suite.
    Verify {
        #[arg(long, default_value = "out/verify")]
        out: PathBuf,
    },
    /// List the presets.
    ListPresets,
}

#[derive(Args, Default)]
struct RunArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    /// periodic or dirichlet
    #[arg(long)]
    bc: Option<BoundaryCondition>,
    /// bernoulli[:low,high,p_low] | uniform[:vmax] | constant:c | file:PATH
    #[arg(long, value_parser = parse_potential)]
    potential: Option<lattice_landscape::PotentialKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces the upper bound of the potential.
    #[arg(long)]
    vmax: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Decay rate; calibrated per field when absent.
    #[arg(long)]
    alpha: Option<f64>,
    /// Gradient-bound constant; measured per field when absent.
    #[arg(long)]
    c_abs: Option<f64>,
    /// lowest:K | highest:K | I..J | comma-separated ordinals
    #[arg(long)]
    eigs: Option<Selection>,
    /// Also run the dual pipeline.
    #[arg(long)]
    dual: bool,
    /// Landscape residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Eigenpair residual tolerance.
    #[arg(long)]
    eig_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            dim: self.dim,
            size: self.size,
            bc: self.bc,
            potential: self.potential.clone(),
            seed: self.seed,
            vmax: self.vmax,
            delta: self.delta,
            alpha: self.alpha,
            c_abs: self.c_abs,
            eigs: self.eigs.clone(),
            dual: self.dual.then_some(true),
            tol: self.tol,
            eig_tol: self.eig_tol,
            out: self.out.clone(),
        }
    }

    fn config(&self) -> Result<ExperimentConfig> {
        let base = match &self.config {
            Some(p) => read_config_file(p)?,
            None => Overrides::default(),
        };
        let mut cfg = ExperimentConfig::default();
        base.merged_with(&self.overrides()).apply(&mut cfg)?;
        Ok(cfg)
    }
}

fn run_one(cfg: &ExperimentConfig) -> Result<i32> {
    let out = run(cfg);
    write_run(cfg, &out)?;
    for c in out.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {} (ordinal {:?}): lhs {:e}, rhs {:e}", c.name, c.ordinal, c.lhs, c.rhs);
    }
    if let Some(e) = &out.error {
        eprintln!("error [{}]: {}", e.name, e.message);
    }
    let passed = out.checks.iter().filter(|c| c.passed).count();
    println!(
        "{}: {} ({}/{} checks passed, {} skipped) -> {}",
        cfg.name,
        out.status(),
        passed,
        out.checks.len(),
        out.skipped.len(),
        cfg.out.display()
    );
    Ok(out.exit_code())
}

fn run_suite(dir: &std::path::Path) -> Result<i32> {
    let (checks, error) = match suite::run_suite() {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(ErrorInfo::from_anyhow(&e))),
    };
    write_atomic(&dir.join("report.json"), &suite_json(&checks, error.as_ref())?)?;
    for c in checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {}: lhs {:e}, rhs {:e}", c.name, c.lhs, c.rhs);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("verify-suite: {passed}/{} checks passed -> {}", checks.len(), dir.display());
    Ok(if error.is_some() {
        2
    } else if passed == checks.len() {
        0
    } else {
        1
    })
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config()?;
            cfg.validate()?;
            run_one(&cfg)
        }
        Command::Preset { name, out } => {
            let preset = presets::find(&name).with_context(|| format!("unknown preset '{name}'; see list-presets"))?;
            let root = out.unwrap_or_else(|| PathBuf::from("out").join(preset.name));
            let preset = presets::with_output(preset, &root);
            let mut code = 0;
            for cfg in &preset.runs {
                code = code.max(run_one(cfg)?);
            }
            if preset.suite {
                code = code.max(run_suite(&root.join("suite"))?);
            }
            Ok(code)
        }
        Command::Verify { out } => run_suite(&out),
        Command::ListPresets => {
            for p in presets::presets() {
                println!("{:<18} {}", p.name, p.description);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let name = e.chain().find_map(|c| c.downcast_ref::<lattice_landscape::Error>()).map_or("Error", |e| e.name());
            eprintln!("error [{name}]: {e:#}");
            ExitCode::from(2)
        }
    }
}
