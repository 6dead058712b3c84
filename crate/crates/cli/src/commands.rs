use anyhow::Result;
use lightcone_core::harness::{
    cat_scenario, kick_equivalence_check, lightcone_sweep, run_causality_check, sweep_csv, Perturbation, ScenarioConfig,
    SweepRow,
};
use lightcone_core::kernels::{build_kernel, lightcone_profile, verify_identity};
use lightcone_core::local_unitary::find_local_unitary;
use lightcone_core::oracle::{compare_cat_witness, compare_moments, normalization_check, FockLattice};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{CatConfig, CausalityConfig, FactorInput, KernelsConfig, OracleConfig, SweepConfig};
use crate::output::{Outcome, Table};

#[derive(Serialize)]
struct KernelDump {
    role: &'static str,
    t: f64,
    x: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct IdentityRecord {
    identity: &'static str,
    n: usize,
    m: f64,
    t: f64,
    dt: f64,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    coarse_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dt_order: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct ProfileSummary {
    t: f64,
    inside_value: f64,
    outside_value: f64,
    ratio: f64,
    tail_slope: Option<f64>,
    front_velocity: f64,
    pass: bool,
}

fn csv_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn kernels(cfg: &KernelsConfig) -> Result<Outcome> {
    let spec = cfg.lattice.spec()?;
    let mut dumps = Vec::new();
    let mut tables = Vec::new();
    let mut combined = String::from("role,t,x,value\n");
    for (i, &t) in cfg.times.iter().enumerate() {
        for &role in &cfg.roles {
            let k = build_kernel(&spec, role, t)?;
            let x: Vec<f64> = (0..spec.n_sites).map(|d| d as f64 * spec.spacing).collect();
            let values: Vec<f64> = (0..spec.n_sites).map(|d| k.get(0, d)).collect();
            let mut csv = String::from("x,value\n");
            for (x, v) in x.iter().zip(&values) {
                csv.push_str(&format!("{},{}\n", csv_float(*x), csv_float(*v)));
                combined.push_str(&format!("{},{},{},{}\n", role.name(), csv_float(t), csv_float(*x), csv_float(*v)));
            }
            let records: Vec<Value> = x.iter().zip(&values).map(|(x, v)| json!({ "x": x, "value": v })).collect();
            tables.push(Table { stem: format!("kernel_{}_t{i}", role.name()), csv, json: Value::Array(records) });
            dumps.push(KernelDump { role: role.name(), t, x, values });
        }
    }

    let mut identities = Vec::new();
    for &t in &cfg.times {
        for &which in &cfg.identities {
            let residual = verify_identity(&spec, which, t, cfg.dt)?;
            let (coarse_residual, dt_order) = if which.uses_time_derivative() {
                let coarse = verify_identity(&spec, which, t, cfg.coarse_dt)?;
                (Some(coarse), Some((coarse / residual).log10() / (cfg.coarse_dt / cfg.dt).log10()))
            } else {
                (None, None)
            };
            let order_ok = dt_order.is_none_or(|o| o >= cfg.min_dt_order);
            identities.push(IdentityRecord {
                identity: which.name(),
                n: spec.n_sites,
                m: spec.mass,
                t,
                dt: cfg.dt,
                residual,
                coarse_residual,
                dt_order,
                pass: residual <= cfg.identity_tolerance && order_ok,
            });
        }
    }

    let profile = if cfg.profile.enabled {
        let p = &cfg.profile;
        let prof = lightcone_profile(&p.lattice.spec()?, p.t, p.margin)?;
        let inside_value = prof.magnitude_at(p.inside * p.t);
        let outside_value = prof.magnitude_at(p.outside * p.t);
        let ratio = outside_value / inside_value;
        Some(ProfileSummary {
            t: p.t,
            inside_value,
            outside_value,
            ratio,
            tail_slope: prof.tail_slope,
            front_velocity: prof.front_velocity,
            pass: ratio <= p.ratio_tolerance && prof.tail_slope.is_some_and(|s| s < 0.0),
        })
    } else {
        None
    };

    let pass = identities.iter().all(|r| r.pass) && profile.as_ref().is_none_or(|p| p.pass);
    let report = json!({
        "kernels": dumps,
        "identities": identities,
        "identity_tolerance": cfg.identity_tolerance,
        "profile": profile,
        "pass": pass,
    });
    let stdout_table = Table { stem: "kernels".into(), csv: combined, json: serde_json::to_value(&dumps)? };
    Ok(Outcome { pass, report, tables, stdout_table: Some(stdout_table) })
}

pub fn causality(cfg: &CausalityConfig, seed: Option<u64>) -> Result<Outcome> {
    let sc = cfg.scenario(seed)?;
    let report = run_causality_check(&sc)?;
    let perturbed = !matches!(sc.perturbation, Perturbation::None);
    let cone_edge_ok = !perturbed || report.cone_edge_deviation >= cfg.min_cone_edge;
    let kick = if cfg.check_kick && perturbed { Some(kick_equivalence_check(&sc)?) } else { None };
    let pass = report.pass && cone_edge_ok && kick.as_ref().is_none_or(|k| k.pass);
    let profile_csv = report.profile.iter().fold(String::from("site,distance,deviation\n"), |mut s, p| {
        s.push_str(&format!("{},{},{}\n", p.site, p.distance, csv_float(p.deviation)));
        s
    });
    let profile = Table { stem: "profile".into(), csv: profile_csv, json: serde_json::to_value(&report.profile)? };
    let out = json!({
        "causality": report,
        "min_cone_edge": cfg.min_cone_edge,
        "cone_edge_ok": cone_edge_ok,
        "kick": kick,
        "pass": pass,
    });
    Ok(Outcome { pass, report: out, tables: vec![profile], stdout_table: None })
}

/// Non-increasing in margin at each `t`, up to `slack`; exact zeros at `t = 0`.
fn sweep_checks(rows: &[SweepRow], slack: f64) -> (bool, bool) {
    let monotone = rows
        .windows(2)
        .filter(|w| w[0].t == w[1].t)
        .all(|w| w[1].max_b_deviation <= w[0].max_b_deviation * (1.0 + slack) + f64::MIN_POSITIVE);
    let t0_zero = rows.iter().filter(|r| r.t == 0.0).all(|r| r.max_b_deviation == 0.0);
    (monotone, t0_zero)
}

pub fn sweep(cfg: &SweepConfig, seed: Option<u64>) -> Result<Outcome> {
    let sc = cfg.sweep(seed)?;
    let rows = lightcone_sweep(&sc)?;
    let (monotone, t0_zero) = sweep_checks(&rows, cfg.monotone_slack);
    let pass = monotone && t0_zero;
    let table = Table { stem: "sweep".into(), csv: sweep_csv(&rows), json: serde_json::to_value(&rows)? };
    let report = json!({
        "rows": rows,
        "monotone_in_margin": monotone,
        "zero_at_t0": t0_zero,
        "pass": pass,
    });
    Ok(Outcome { pass, report, tables: Vec::new(), stdout_table: Some(table) })
}

pub fn factor_unitary(input: &FactorInput) -> Result<Outcome> {
    let u = find_local_unitary(&input.f1, &input.f2, input.tolerance)?;
    let pass = u.residual_unitarity <= input.residual_tolerance && u.residual_equation <= input.residual_tolerance;
    let report = json!({
        "residual_unitarity": u.residual_unitarity,
        "residual_equation": u.residual_equation,
        "rank": u.rank,
        "path_taken": u.path,
        "unitary": lightcone_core::io::complex_matrix_to_rows(&u.unitary),
        "pass": pass,
    });
    Ok(Outcome { pass, report, tables: Vec::new(), stdout_table: None })
}

pub fn cat_witness(cfg: &CatConfig) -> Result<Outcome> {
    let spec = cfg.lattice.spec()?;
    let mut sc = ScenarioConfig::new(
        spec,
        cfg.region_a,
        0.0,
        Perturbation::CatPair { dphi: cfg.dphi.clone(), dpi: cfg.dpi.clone() },
    );
    sc.witness_threshold = cfg.witness_threshold;
    let cat = cat_scenario(&sc)?;

    let oracle = if cfg.oracle.enabled {
        let o = &cfg.oracle;
        let small = o.lattice.spec()?;
        let region_a = o.region_a.region(small.n_sites)?;
        let phi = o.dphi.expand(&region_a)?;
        let pi = o.dpi.expand(&region_a)?;
        let fl = FockLattice::new(small, o.cutoff)?;
        Some(compare_cat_witness(&fl, &phi, &pi, &region_a.complement())?)
    } else {
        None
    };
    let oracle_ok = oracle.as_ref().is_none_or(|r| r.residual <= cfg.oracle.relative_tolerance);
    let pass = cat.pass && oracle_ok;
    let report = json!({
        "cat": cat,
        "oracle": oracle,
        "oracle_relative_tolerance": cfg.oracle.relative_tolerance,
        "pass": pass,
    });
    Ok(Outcome { pass, report, tables: Vec::new(), stdout_table: None })
}

pub fn oracle(cfg: &OracleConfig) -> Result<Outcome> {
    let mut pass = true;
    let moments = if cfg.moments.enabled {
        let m = &cfg.moments;
        let spec = m.lattice.spec()?;
        let mut cuts = m.cutoffs.clone();
        cuts.sort_unstable();
        cuts.dedup();
        let comparisons = cuts
            .iter()
            .map(|&d| compare_moments(&FockLattice::new(spec, d)?, &m.phi, &m.pi, &m.times))
            .collect::<lightcone_core::Result<Vec<_>>>()?;
        let monotone = comparisons.windows(2).all(|w| w[1].residual() <= w[0].residual() * (1.0 + m.monotone_slack));
        let within = comparisons.iter().filter(|c| c.cutoff >= m.tolerance_from_cutoff).all(|c| c.residual() <= m.tolerance);
        pass &= monotone && within;
        Some(json!({
            "comparisons": comparisons,
            "monotone_in_cutoff": monotone,
            "within_tolerance": within,
            "tolerance": m.tolerance,
        }))
    } else {
        None
    };
    let normalization = if cfg.normalization.enabled {
        let n = &cfg.normalization;
        let r = normalization_check(&n.lattice.spec()?, &n.grid)?;
        let ok = r.modulus_deviation <= n.modulus_tolerance;
        pass &= ok;
        Some(json!({ "report": r, "modulus_tolerance": n.modulus_tolerance, "pass": ok }))
    } else {
        None
    };
    let report = json!({ "moments": moments, "normalization": normalization, "pass": pass });
    Ok(Outcome { pass, report, tables: Vec::new(), stdout_table: None })
}
