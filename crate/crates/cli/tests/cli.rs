use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn landscape(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landscape")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_all_artifacts_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = landscape(&["run", "--size", "60", "--eigs", "1,2,59", "--dual", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["field.csv", "field_dual.csv", "eigenpairs.csv", "report.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let r = report(&out);
    assert_eq!(r["status"], "passed");
    assert_eq!(r["failed"], false);
    assert_eq!(r["metadata"]["config"]["size"], 60);
    assert_eq!(r["eigenpairs"].as_array().unwrap().len(), 3);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    let header = fs::read_to_string(out.join("field.csv")).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("linear_index,coord_1,v,u,w_eff,w_mu,h,component_label,phi_1,phi_2,phi_59"));
}

#[test]
fn identical_configs_give_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for d in [&a, &b] {
        let o = landscape(&["run", "--dim", "2", "--size", "12", "--seed", "9", "--eigs", "lowest:3", "--out", d.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["field.csv", "eigenpairs.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = tmp.path().join("c");
    landscape(&["run", "--dim", "2", "--size", "12", "--seed", "10", "--eigs", "lowest:3", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(a.join("field.csv")).unwrap(), fs::read(c.join("field.csv")).unwrap());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.conf");
    let out = tmp.path().join("o");
    fs::write(&cfg, format!("# experiment\nsize = 30\nbc = periodic\nseed = 4\nout = {}\n", out.display())).unwrap();
    let o = landscape(&["run", "--config", cfg.to_str().unwrap(), "--size", "24", "--vmax", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let c = &r["metadata"]["config"];
    assert_eq!(c["size"], 24);
    assert_eq!(c["bc"], "periodic");
    assert_eq!(c["seed"], 4);
    assert_eq!(c["potential"]["high"], 7.0);
}

#[test]
fn odd_periodic_dual_is_rejected_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = landscape(&["run", "--bc", "periodic", "--size", "301", "--dual", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("OddPeriodicDual"));
    assert!(!out.exists());
}

#[test]
fn module_errors_write_a_failed_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = landscape(&["run", "--bc", "periodic", "--size", "10", "--potential", "constant:0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let r = report(&out);
    assert_eq!(r["status"], "failed");
    assert_eq!(r["failed"], true);
    assert_eq!(r["error"]["name"], "InvalidPotential");
}

#[test]
fn potential_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let vfile = tmp.path().join("v.txt");
    let values: Vec<String> = (0..20).map(|i| if i % 3 == 0 { "4".into() } else { "0".into() }).collect();
    fs::write(&vfile, values.join("\n")).unwrap();
    let out = tmp.path().join("o");
    let spec = format!("file:{}", vfile.display());
    let o = landscape(&["run", "--size", "20", "--potential", &spec, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("field.csv")).unwrap();
    let v0: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(v0, 4.0);
}

#[test]
fn presets_are_listed_and_unknown_ones_fail() {
    let o = landscape(&["list-presets"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for p in ["fig-periodic-1d", "fig-bernoulli-1d", "fig-dual-1d", "fig-uniform-1d", "fig-separation", "fig-2d-uniform", "verify-suite"] {
        assert!(text.contains(p), "{p}");
    }
    assert_eq!(landscape(&["preset", "no-such-preset"]).status.code(), Some(2));
}

#[test]
fn dual_preset_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("dual");
    let o = landscape(&["preset", "fig-dual-1d", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let mu = r["eigenpairs"][0]["mu"].as_f64().unwrap();
    let mu_dual = r["eigenpairs"][0]["mu_dual"].as_f64().unwrap();
    assert!(mu > 7.5 && mu < 9.0);
    assert!((mu + mu_dual - 9.0).abs() < 1e-12);
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["name"] == "decay_bound_dual"));
    assert!(r["skipped"].as_array().unwrap().iter().any(|c| c["name"] == "decay_bound"));
}

#[test]
fn separation_preset_writes_two_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sep");
    let o = landscape(&["preset", "fig-separation", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let a = report(&out.join("fig-separation-vmax5"));
    let b = report(&out.join("fig-separation-vmax64"));
    assert_eq!(a["metadata"]["v_max"], 5.0);
    assert_eq!(b["metadata"]["v_max"], 64.0);
}

#[test]
fn verify_subcommand_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = landscape(&["verify", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = report(tmp.path());
    assert_eq!(r["status"], "passed");
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["name"] == "antiperiodic_counterexample"));
}

#[test]
fn failing_checks_exit_with_one() {
    // with C forced to zero any alpha is admissible, and a rate this steep
    // outgrows the true decay of the eigenvector
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = landscape(&["run", "--size", "80", "--c-abs", "0", "--alpha", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["status"], "checks_failed");
    let decay = r["checks"].as_array().unwrap().iter().find(|c| c["name"] == "decay_bound").unwrap().clone();
    assert_eq!(decay["passed"], false);
}

#[test]
fn inadmissible_alpha_is_a_module_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = landscape(&["run", "--size", "80", "--alpha", "50", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(report(&out)["error"]["name"], "InvalidAlpha");
}
