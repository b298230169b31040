//! The `verify` subcommand: exact identity suites over seeded random
//! systems, with a JSON report of worst-case residuals.

use crate::config::write_report;
use mvinfo::error::{Error, Result};
use mvinfo::info::{
    info_report, minimal_sufficient_partition, verify_dpi, verify_lemma1, verify_minimality,
    verify_theorem1, verify_theorem2, verify_theorem3, Encoding, GaussianScenario, JointTable,
    NoiseFamily,
};
use mvinfo::rng::SplitMix64;
use mvinfo::synth::{make_discrete_system, DiscreteSystemSpec};
use serde_json::{json, Value};
use std::path::Path;

/// Identity residuals must vanish to this tolerance.
const RESIDUAL_TOL: f64 = 1e-10;
/// Ordering slacks may go this far negative from rounding.
const SLACK_TOL: f64 = -1e-12;
/// Monte-Carlo estimates must land within this relative error.
const MC_REL_TOL: f64 = 0.03;

/// Seeded random shared-latent system spec with small alphabets.
fn random_spec(rng: &mut SplitMix64) -> DiscreteSystemSpec {
    // per-view alphabets n_shared * n_private stay within the exact-table cap
    let n_shared = 2 + rng.usize_below(2);
    let private = |rng: &mut SplitMix64| if n_shared == 2 { 2 + rng.usize_below(3) } else { 2 };
    DiscreteSystemSpec {
        n_shared,
        n_private1: private(rng),
        n_private2: private(rng),
        t_card: 2 + rng.usize_below(3),
        coupling: rng.uniform(),
        seed: rng.next_u64(),
    }
}

/// Shared-latent table plus its likelihood partition and a random
/// sufficient refinement of it.
fn random_system(rng: &mut SplitMix64) -> Result<(JointTable, Encoding, Encoding)> {
    let table = make_discrete_system(&random_spec(rng))?;
    let z_min = minimal_sufficient_partition(&table, 1)?;
    let z_suf = z_min.random_refinement(rng);
    Ok((table, z_min, z_suf))
}

fn suite_lemmas(trials: usize, seed: u64) -> Result<(Value, bool)> {
    let mut rng = SplitMix64::new(seed);
    let mut max_chain: f64 = 0.0;
    let mut max_identity: f64 = 0.0;
    for _ in 0..trials {
        // chain rule on a generic table with an arbitrary encoding
        let sizes = [
            2 + rng.usize_below(3),
            2 + rng.usize_below(3),
            2 + rng.usize_below(3),
        ];
        let table = JointTable::random(&mut rng, sizes);
        let enc = Encoding::random(&mut rng, 1, sizes[0]);
        let r = info_report(&table, &enc)?;
        max_chain = max_chain.max(r.chain_rule_residual().abs());

        // interaction-information identities on a shared-latent system
        let (table, _, z_suf) = random_system(&mut rng)?;
        let l = verify_lemma1(&table, Some(&z_suf))?;
        for v in [
            l.min_interaction_residual,
            l.suf_interaction_residual,
            l.min_cond_info,
            l.assumption_slack,
        ] {
            max_identity = max_identity.max(v.abs());
        }
    }
    let pass = max_chain <= RESIDUAL_TOL && max_identity <= RESIDUAL_TOL;
    Ok((
        json!({
            "max_chain_rule_residual": max_chain,
            "max_identity_residual": max_identity,
            "tolerance": RESIDUAL_TOL,
        }),
        pass,
    ))
}

fn suite_thm1(trials: usize, seed: u64) -> Result<(Value, bool)> {
    let mut rng = SplitMix64::new(seed);
    let mut max_residual: f64 = 0.0;
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let (table, _, z_suf) = random_system(&mut rng)?;
        let r = verify_theorem1(&table, &z_suf)?;
        max_residual = max_residual
            .max(r.decomposition_residual)
            .max(r.suf_decomposition_residual);
        min_slack = min_slack.min(r.ordering_slack_top).min(r.ordering_slack_bottom);
    }
    let pass = max_residual <= RESIDUAL_TOL && min_slack >= SLACK_TOL;
    Ok((
        json!({
            "max_decomposition_residual": max_residual,
            "min_ordering_slack": min_slack,
            "residual_tolerance": RESIDUAL_TOL,
            "slack_tolerance": SLACK_TOL,
        }),
        pass,
    ))
}

fn suite_thm2(trials: usize, seed: u64) -> Result<(Value, bool)> {
    let mut rng = SplitMix64::new(seed);
    let mut min_slack = f64::INFINITY;
    let mut min_bound_gap = f64::INFINITY;
    for _ in 0..trials {
        let (table, z_min, z_suf) = random_system(&mut rng)?;
        let r_min = verify_theorem2(&table, &z_min)?;
        let r_suf = verify_theorem2(&table, &z_suf)?;
        min_slack = min_slack.min(r_min.slack).min(r_suf.slack);
        // the minimal partition keeps the least information, so its bound
        // dominates the bound of any sufficient refinement
        min_bound_gap = min_bound_gap.min(r_min.bound - r_suf.bound);
    }
    let pass = min_slack >= SLACK_TOL && min_bound_gap >= SLACK_TOL;
    Ok((
        json!({
            "min_bound_slack": min_slack,
            "min_minimal_vs_refinement_bound_gap": min_bound_gap,
            "slack_tolerance": SLACK_TOL,
        }),
        pass,
    ))
}

fn suite_thm3(trials: usize, seed: u64) -> Result<(Value, bool)> {
    let mut rng = SplitMix64::new(seed);
    let mut max_analytic_rel: f64 = 0.0;
    let mut max_mc_rel: f64 = 0.0;
    let mut alphas = Vec::new();
    for family in [NoiseFamily::Uniform, NoiseFamily::Laplace, NoiseFamily::Gaussian] {
        alphas.push(family.alpha());
        for _ in 0..trials {
            let var_eps = rng.uniform_range(0.2, 1.0);
            let scn = GaussianScenario {
                var_t: var_eps + rng.uniform_range(0.5, 2.0),
                var_eps,
                noise_family: family,
            };
            let r = verify_theorem3(&scn, 100_000, rng.next_u64())?;
            max_analytic_rel = max_analytic_rel.max((r.r_e_analytic - var_eps).abs() / var_eps);
            max_mc_rel = max_mc_rel.max((r.r_e_mc - var_eps).abs() / var_eps);
        }
    }
    let pass = max_analytic_rel <= 1e-12 && max_mc_rel <= MC_REL_TOL;
    Ok((
        json!({
            "alphas": alphas,
            "max_analytic_rel_error": max_analytic_rel,
            "max_mc_rel_error": max_mc_rel,
            "mc_rel_tolerance": MC_REL_TOL,
        }),
        pass,
    ))
}

fn suite_dpi(trials: usize, seed: u64) -> Result<(Value, bool)> {
    let mut rng = SplitMix64::new(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let sizes = [
            2 + rng.usize_below(3),
            2 + rng.usize_below(3),
            2 + rng.usize_below(2),
        ];
        let table = JointTable::random(&mut rng, sizes);
        let enc1 = Encoding::random(&mut rng, 1, sizes[0]);
        let enc2 = Encoding::random(&mut rng, 2, sizes[1]);
        let (s1, s2) = verify_dpi(&table, &enc1, &enc2)?;
        min_slack = min_slack.min(s1).min(s2);
    }
    let pass = min_slack >= SLACK_TOL;
    Ok((
        json!({ "min_dpi_slack": min_slack, "slack_tolerance": SLACK_TOL }),
        pass,
    ))
}

fn suite_minimality(trials: usize, seed: u64) -> Result<(Value, bool)> {
    let mut rng = SplitMix64::new(seed);
    let mut max_gap: f64 = 0.0;
    let mut all_minimal = true;
    // keep |V1| = n_shared * n_private1 <= 5 so partition enumeration stays small
    const SHAPES: [(usize, usize); 4] = [(1, 2), (1, 3), (1, 4), (2, 2)];
    for _ in 0..trials {
        let (ns, np1) = SHAPES[rng.usize_below(SHAPES.len())];
        let spec = DiscreteSystemSpec {
            n_shared: ns,
            n_private1: np1,
            n_private2: 2 + rng.usize_below(2),
            t_card: 2 + rng.usize_below(2),
            coupling: rng.uniform(),
            seed: rng.next_u64(),
        };
        let table = make_discrete_system(&spec)?;
        let r = verify_minimality(&table)?;
        max_gap = max_gap.max(r.minimality_gap.abs());
        all_minimal &= r.minimal;
    }
    let pass = all_minimal && max_gap <= RESIDUAL_TOL;
    Ok((
        json!({
            "max_minimality_gap": max_gap,
            "all_minimal": all_minimal,
            "tolerance": RESIDUAL_TOL,
        }),
        pass,
    ))
}

const SUITES: [&str; 6] = ["lemmas", "thm1", "thm2", "thm3", "dpi", "minimality"];

fn run_suite(name: &str, trials: usize, seed: u64) -> Result<(Value, bool)> {
    match name {
        "lemmas" => suite_lemmas(trials, seed),
        "thm1" => suite_thm1(trials, seed),
        "thm2" => suite_thm2(trials, seed),
        // Theorem 3 draws 10^5 samples per scenario; cap the per-family count
        "thm3" => suite_thm3(trials.min(200), seed),
        "dpi" => suite_dpi(trials, seed),
        "minimality" => suite_minimality(trials, seed),
        other => Err(Error::Config(format!(
            "unknown suite '{other}' (expected one of lemmas, thm1, thm2, thm3, dpi, minimality, all)"
        ))),
    }
}

/// Runs one suite (or all) and writes the report. Exit 0 iff everything
/// passed, 1 on an assertion failure.
pub fn cmd_verify(suite: &str, trials: usize, seed: u64, out: Option<&Path>) -> Result<i32> {
    if trials < 1 {
        return Err(Error::Precondition("trials must be >= 1".into()));
    }
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        // validate before doing any work so no report is written
        run_suite(suite, trials, seed)?;
        unreachable!("run_suite rejects unknown names");
    };

    let mut all_pass = true;
    let mut details = serde_json::Map::new();
    for name in &names {
        let (mut value, pass) = run_suite(name, trials, seed)?;
        value
            .as_object_mut()
            .expect("suite results are objects")
            .insert("passed".into(), json!(pass));
        println!("suite {name}: {}", if pass { "PASS" } else { "FAIL" });
        all_pass &= pass;
        details.insert(name.to_string(), value);
    }

    if let Some(path) = out {
        write_report(
            path,
            json!({
                "suite": suite,
                "trials": trials,
                "seed": seed,
                "passed": all_pass,
                "results": Value::Object(details),
            }),
        )?;
    }
    Ok(if all_pass { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_briefly() {
        for name in SUITES {
            let trials = if name == "thm3" { 2 } else { 10 };
            let (_, pass) = run_suite(name, trials, 11).unwrap();
            assert!(pass, "suite {name} failed");
        }
    }

    #[test]
    fn unknown_suite_is_config_error() {
        let err = cmd_verify("bogus", 1, 1, None).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn all_runs_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let code = cmd_verify("all", 3, 5, Some(&path)).unwrap();
        assert_eq!(code, 0);
        let body: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(body["passed"], json!(true));
        assert!(body["results"]["thm3"]["alphas"].as_array().unwrap().len() == 3);
    }
}
