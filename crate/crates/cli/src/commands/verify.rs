use clap::Args;
use serde_json::json;
use tempo_core::fw::fixtures::Fixture;
use tempo_core::fw::{verify_central_identity, VerifyOptions};
use tempo_core::opcore::selfcheck::property_suite;
use tempo_core::opcore::{RuleSet, Truncation};

use crate::config::layered;
use crate::report::{Check, Provenance, RunReport};
use crate::Globals;

const DEFAULT_CASES: usize = 64;
const DEFAULT_SEED: u64 = 0x7e3150;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Compare only these stages (H, UHU, H_FW, beta, tempo, T2, xdot1..3,
    /// commutator). Repeatable. Skips the central identity and property suite.
    #[arg(long = "fixture", value_parser = parse_fixture)]
    pub fixtures: Vec<Fixture>,
    /// Disable the field-equation and gauge rewrite rules (negative control).
    #[arg(long)]
    pub no_rewrites: bool,
    /// Lowest power of m kept.
    #[arg(long, allow_hyphen_values = true)]
    pub min_mpow: Option<i32>,
    /// Most field factors kept per term.
    #[arg(long)]
    pub max_hdeg: Option<usize>,
    /// Foldy-Wouthuysen iterations.
    #[arg(long)]
    pub fw_iterations: Option<usize>,
    /// Random cases per algebra property.
    #[arg(long)]
    pub property_cases: Option<usize>,
    #[arg(long)]
    pub property_seed: Option<u64>,
}

fn parse_fixture(s: &str) -> Result<Fixture, String> {
    Fixture::from_name(s).ok_or_else(|| {
        let names: Vec<String> = Fixture::all().iter().map(Fixture::name).collect();
        format!("unknown fixture `{s}`; expected one of {}", names.join(", "))
    })
}

pub fn run(a: &VerifyArgs, g: &Globals) -> RunReport {
    let fc = &g.file.verify;
    let default_t = Truncation::default();
    let truncation = Truncation {
        min_mpow: a.min_mpow.unwrap_or(default_t.min_mpow),
        max_hdeg: a.max_hdeg.unwrap_or(default_t.max_hdeg),
    };
    let (fw_iterations, _) = layered(a.fw_iterations, fc.fw_iterations, 4);
    let (cases, _) = layered(a.property_cases, fc.property_cases, DEFAULT_CASES);
    let (seed, _) = layered(a.property_seed, fc.property_seed, DEFAULT_SEED);
    let seed = if g.deterministic { DEFAULT_SEED } else { seed };
    let rules = if a.no_rewrites { RuleSet::none() } else { RuleSet::all() };
    let fixtures = (!a.fixtures.is_empty()).then(|| a.fixtures.clone());
    let run_properties = fixtures.is_none();

    let mut config = g.echo();
    config["truncation"] = json!(truncation);
    config["rules"] = json!(rules.names());
    config["fw_iterations"] = json!(fw_iterations);
    config["fixtures"] = json!(fixtures.as_ref().map(|f| f.iter().map(Fixture::name).collect::<Vec<_>>()));
    config["property_suite"] = json!(run_properties.then(|| json!({ "cases": cases, "seed": seed })));
    let mut report = RunReport::new("verify", config);

    let opts = VerifyOptions { truncation, rules, fw_iterations, fixtures };
    let outcome = report.timed("pipeline", || verify_central_identity(&opts));
    let (verification, _) = match outcome {
        Ok(v) => v,
        Err(e) => return report.fail_with(e.to_string(), 1),
    };
    for c in &verification.checks {
        report.results.push(Check::exact(&c.name, c.residual_terms, &c.difference));
    }
    let mut details = json!({
        "fw_iterations": verification.fw_iterations,
        "fw_converged_at": verification.fw_converged_at,
    });

    if run_properties {
        let props = report.timed("properties", || property_suite(seed, cases));
        for p in &props {
            let mut c = Check::at_most(format!("property:{}", p.name), p.failures as f64, 0.0, Provenance::Default);
            if let Some(f) = &p.first_failure {
                c = c.detail(f.clone());
            }
            report.results.push(c);
        }
        details["properties"] = json!(props);
    }
    report.details = details;
    report
}
