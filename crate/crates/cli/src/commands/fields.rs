use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use tempo_core::geometry::{check_gauge, potential_residuals, sample_domain, FieldFile, GeometryError, DEFAULT_CAP};

use crate::config::layered;
use crate::report::{Check, Provenance, RunReport};
use crate::Globals;

const DEFAULT_SAMPLES: usize = 100;
const DEFAULT_SEED: u64 = 1;

#[derive(Args, Debug)]
pub struct FieldsArgs {
    /// Field definition (TOML).
    pub file: PathBuf,
    /// Random admissible points to test.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Construction failures that still leave a field worth measuring.
fn diagnosable(e: &GeometryError) -> bool {
    matches!(
        e,
        GeometryError::NotHarmonic { .. } | GeometryError::GaugeViolation { .. } | GeometryError::WeakFieldCapExceeded { .. }
    )
}

pub fn run(a: &FieldsArgs, g: &Globals) -> RunReport {
    let fc = &g.file.fields;
    let (samples, _) = layered(a.samples, fc.samples, DEFAULT_SAMPLES);
    let (seed, _) = layered(a.seed, fc.seed, DEFAULT_SEED);
    let (tol, tol_source) = layered(a.tol, fc.tol, tempo_core::geometry::RESIDUAL_TOL);
    let mut config = g.echo();
    config["file"] = json!(a.file);
    config["samples"] = json!(samples);
    config["seed"] = json!(seed);
    config["tol"] = json!(tol);
    let mut report = RunReport::new("fields", config);
    if !(tol.is_finite() && tol >= 0.0) || samples == 0 {
        return report.fail_with("--tol must be ≥ 0 and --samples ≥ 1".into(), 2);
    }

    let text = match std::fs::read_to_string(&a.file) {
        Ok(t) => t,
        Err(e) => return report.fail_with(format!("cannot read {}: {e}", a.file.display()), 2),
    };
    let file = match FieldFile::from_toml_str(&text) {
        Ok(f) => f,
        Err(e) => return report.fail_with(e.to_string(), 2),
    };
    let (model, rejection) = match file.build() {
        Ok(m) => (m, None),
        Err(e) if diagnosable(&e) => match file.build_unchecked() {
            Ok(m) => (m, Some(e)),
            Err(e2) => return report.fail_with(e2.to_string(), 2),
        },
        Err(e) => return report.fail_with(e.to_string(), 2),
    };
    report.results.push(match &rejection {
        None => Check::at_most("construction", 0.0, 0.0, Provenance::Default),
        Some(e) => Check::at_most("construction", 1.0, 0.0, Provenance::Default).detail(e.to_string()),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sample_domain(&model, samples, &mut rng);
    if points.len() < samples {
        return report.fail_with(format!("only {} of {samples} admissible points found in the domain", points.len()), 2);
    }
    let measured = report.timed("residuals", || {
        let pots = potential_residuals(&model, &points)?;
        let gauge = check_gauge(&model, &points)?;
        Ok::<_, GeometryError>((pots, gauge))
    });
    let (pots, gauge) = match measured {
        Ok(m) => m,
        Err(e) => return report.fail_with(e.to_string(), 1),
    };
    for (name, r) in &pots {
        report.results.push(
            Check::at_most(format!("laplacian:{name}"), r.max_rel, tol, tol_source)
                .detail(format!("max |Δ{name}| = {:e}", r.max_abs)),
        );
    }
    for (name, r) in [("gauge:divergence", &gauge.divergence), ("gauge:trace", &gauge.trace)] {
        report.results.push(Check::at_most(name, r.max_rel, tol, tol_source).detail(format!("max abs {:e}", r.max_abs)));
    }
    let (max_h, at) = model.max_abs_h_on_domain();
    let cap_source = if model.cap() == DEFAULT_CAP { Provenance::Default } else { Provenance::Scenario };
    report.results.push(Check::at_most("weak-field", max_h, model.cap(), cap_source).detail(format!("max |h| at {at:?}")));

    report.details = json!({
        "family": model.family().name(),
        "rejected": rejection.map(|e| e.to_string()),
        "samples": points.len(),
        "potentials": pots.iter().map(|(n, r)| json!({ "name": n, "residual": r })).collect::<Vec<_>>(),
        "gauge": gauge,
        "max_abs_h": max_h,
    });
    report
}
