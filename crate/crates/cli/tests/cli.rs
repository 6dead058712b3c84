use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lightcone-rdm"));
    c.env_remove("LIGHTCONE_RDM_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn single_mode_g_at_quarter_period() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "k.toml",
        "roles = [\"g\"]\ntimes = [1.5707963267948966]\nidentities = [\"gg\"]\n\
         [lattice]\nn_sites = 1\nmass = 1.0\n[profile]\nenabled = false\n",
    );
    let out = run(&["kernels", "--config", &cfg, "--format", "csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "role,t,x,value\ng,1.5707963267948966,0.0,1.0\n");
}

#[test]
fn caustic_time_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "k.toml", "times = [3.141592653589793]\n[lattice]\nn_sites = 1\nmass = 1.0\n");
    let out = run(&["kernels", "--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("caustic"));
}

#[test]
fn inverse_identity_benchmark_writes_dumps() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "k.toml", "identities = [\"gG1\"]\n[profile]\nenabled = false\n");
    let out_dir = dir.path().join("out");
    let out = run(&["kernels", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    for r in report["identities"].as_array().unwrap() {
        assert_eq!(r["identity"], "gG1");
        assert_eq!(r["n"], 64);
        assert!(r["residual"].as_f64().unwrap() <= 1e-6);
    }
    let dump = std::fs::read_to_string(out_dir.join("kernel_gInv_t0.csv")).unwrap();
    assert!(dump.starts_with("x,value\n"));
    assert_eq!(dump.lines().count(), 65);
    let manifest: Value = serde_json::from_slice(&std::fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "kernels");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["outputs"].as_array().unwrap().iter().any(|o| o == "kernel_G_t2.csv"));
}

#[test]
fn default_kernel_run_reports_the_tight_early_time() {
    // the quadratic identity at t = 0.3 sits just above 1e-6 from the
    // finite-difference step alone
    let out = run(&["kernels"]);
    assert_eq!(code(&out), 2);
    let report = json(&out);
    let failing: Vec<&Value> = report["identities"].as_array().unwrap().iter().filter(|r| r["pass"] == false).collect();
    assert_eq!(failing.len(), 1);
    assert_eq!(failing[0]["identity"], "GG_appendix");
    assert_eq!(failing[0]["t"], 0.3);
    assert_eq!(report["profile"]["pass"], true);
}

#[test]
fn causality_benchmark_passes() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&["causality", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert!(report["causality"]["cone_edge_deviation"].as_f64().unwrap() >= 1e-2);
    for m in report["causality"]["margins"].as_array().unwrap() {
        assert!(m["max_deviation"].as_f64().unwrap() <= 1e-8);
    }
    for f in ["report.json", "manifest.json", "profile.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn symplectic_kick_with_reconstruction() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.toml",
        "time = 6.0\nmargins = [20]\ncheck_kick = true\n[lattice]\nn_sites = 96\nmass = 0.5\n\
         [region_a]\nstart = 44\nlen = 4\n[perturbation]\nkind = \"random\"\n",
    );
    let a = run(&["causality", "--config", &cfg, "--seed", "5"]);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&["causality", "--config", &cfg, "--seed", "5"]);
    let c = run(&["causality", "--config", &cfg, "--seed", "6"]);
    let edge = |o: &Output| json(o)["causality"]["cone_edge_deviation"].as_f64().unwrap();
    assert_eq!(edge(&a), edge(&b));
    assert_ne!(edge(&a), edge(&c));
    assert_eq!(json(&a)["kick"]["pass"], true);
}

#[test]
fn zero_perturbation_passes_trivially() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "[perturbation]\nkind = \"none\"\n");
    let out = run(&["causality", "--config", &cfg]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["causality"]["cone_edge_deviation"], 0.0);
}

#[test]
fn wrapped_light_cone_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "time = 20.0\n[lattice]\nn_sites = 32\nmass = 1.0\n[region_a]\nstart = 10\nlen = 4\n");
    let out = run(&["causality", "--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("wraps"));
}

#[test]
fn unknown_keys_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.toml", "time = 2.0\ntolerence = 1e-8\n");
    assert_eq!(code(&run(&["causality", "--config", &cfg])), 3);
    assert_eq!(code(&run(&["causality", "--config", "/nonexistent/c.toml"])), 3);
    assert_eq!(code(&run(&["causality", "--format", "xml"])), 3);
}

#[test]
fn sweep_is_canonical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.toml", "times = [8.0, 0.0, 4.0, 2.0, 6.0]\nmargins = [10, 0, 5]\n");
    let sweep = |threads: &str| {
        let out = bin().args(["sweep", "--config", &cfg, "--format", "csv"]).env("LIGHTCONE_RDM_THREADS", threads).output().unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let one = sweep("1");
    assert_eq!(one, sweep("4"));
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines[0], "t,margin,max_B_deviation,cone_edge_deviation");
    assert_eq!(lines.len(), 1 + 5 * 3);
    assert!(lines[1..4].iter().all(|l| l.starts_with("0.0,") && l.split(',').nth(2) == Some("0.0")));
    let order: Vec<(f64, usize)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = bin().args(["sweep"]).env("LIGHTCONE_RDM_THREADS", "lots").output().unwrap();
    assert_eq!(code(&out), 3);
}

fn factor(dir: &TempDir, body: &str) -> Output {
    let p = write(dir, "pair.json", body);
    run(&["factor-unitary", &p])
}

#[test]
fn factor_identity_pair() {
    let dir = TempDir::new().unwrap();
    let out = factor(&dir, r#"{"f1": [[[0.6, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.8]]],
                               "f2": [[[0.6, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.8]]]}"#);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["rank"], 2);
    assert_eq!(r["path_taken"], "full_rank_square");
    assert!(r["residual_unitarity"].as_f64().unwrap() <= 1e-10);
    assert!(r["residual_equation"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn factor_swap_example() {
    let dir = TempDir::new().unwrap();
    let out = factor(&dir, r#"{"f1": [[[1.0, 0.0]], [[0.0, 0.0]]], "f2": [[[0.0, 0.0]], [[1.0, 0.0]]]}"#);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["rank"], 1);
    assert_eq!(r["path_taken"], "rank_deficient");
    // the first column of U carries |0⟩ to |1⟩
    let u = &r["unitary"];
    assert!((u[1][0][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(u[0][0][0].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn factor_mismatched_pair_fails_scientifically() {
    let dir = TempDir::new().unwrap();
    let out = factor(&dir, r#"{"f1": [[[1.0, 0.0]], [[0.0, 0.0]]], "f2": [[[0.5, 0.0]], [[0.0, 0.0]]]}"#);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("reduced states differ"));
}

#[test]
fn factor_shape_mismatch_is_input_error() {
    let dir = TempDir::new().unwrap();
    let out = factor(&dir, r#"{"f1": [[[1.0, 0.0]]], "f2": [[[1.0, 0.0], [0.0, 0.0]]]}"#);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&run(&["factor-unitary"])), 3);
}

#[test]
fn cat_witness_benchmark() {
    let out = run(&["cat-witness"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert!(r["cat"]["superposition_witness"].as_f64().unwrap() >= 1e-3);
    assert!(r["cat"]["branch_witnesses"].as_array().unwrap().iter().all(|w| w.as_f64().unwrap() <= 1e-10));
    assert!(r["oracle"]["residual"].as_f64().unwrap() <= 0.1);
}

#[test]
fn cat_witness_below_threshold_fails() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cat.toml", "witness_threshold = 0.5\n[oracle]\nenabled = false\n");
    let out = run(&["cat-witness", "--config", &cfg]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn oracle_from_json_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "o.json", r#"{"moments": {"cutoffs": [6, 8], "times": [0.0, 1.0]}, "normalization": {"enabled": false}}"#);
    let out = run(&["oracle", "--config", &cfg]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let cmp = r["moments"]["comparisons"].as_array().unwrap();
    assert_eq!(cmp.len(), 2);
    assert!(r["normalization"].is_null());
}

#[test]
fn oracle_rejects_oversized_space() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "o.toml", "[moments]\ncutoffs = [40]\n[normalization]\nenabled = false\n");
    assert_eq!(code(&run(&["oracle", "--config", &cfg])), 3);
}

#[test]
fn outputs_are_replaced_whole() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("o");
    for _ in 0..2 {
        assert_eq!(code(&run(&["cat-witness", "--out", out_dir.to_str().unwrap()])), 0);
    }
    let names: Vec<String> =
        std::fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert!(names.iter().all(|n| !n.starts_with('.')), "{names:?}");
    assert!(Path::new(&out_dir.join("report.json")).exists());
}
