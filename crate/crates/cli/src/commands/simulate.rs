use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;
use tempo_core::dynamics::scenario::{default_pipeline, run_scenario, write_csv, LoadedScenario, ScenarioError};
use tempo_core::dynamics::DynamicsError;

use crate::report::{Check, Provenance, RunReport};
use crate::Globals;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    pub scenario: PathBuf,
    /// Add the classical geodesic proper time as a `tau_cl` column.
    #[arg(long)]
    pub compare_classical: bool,
}

/// Errors in the inputs exit with 2; failures during the run with 1.
fn exit_code(e: &ScenarioError) -> i32 {
    match e {
        ScenarioError::Dynamics { source, .. } => match source {
            DynamicsError::Config(_)
            | DynamicsError::Resolution { .. }
            | DynamicsError::Unsupported(_)
            | DynamicsError::DerivativeOrder { .. }
            | DynamicsError::Stability { .. }
            | DynamicsError::Support(_)
            | DynamicsError::Geometry(_) => 2,
            _ => 1,
        },
        _ => 2,
    }
}

pub fn run(a: &SimulateArgs, g: &Globals) -> RunReport {
    let mut config = g.echo();
    config["scenario"] = json!(a.scenario);
    config["compare_classical"] = json!(a.compare_classical);
    let mut report = RunReport::new("simulate", config);

    let ls = match report.timed("load", || LoadedScenario::from_path(&a.scenario)) {
        Ok(ls) => ls,
        Err(e) => return report.fail_with(e.to_string(), exit_code(&e)),
    };
    report.config["scenario_source"] = json!(ls.source);
    let pipeline = match report.timed("symbolic", default_pipeline) {
        Ok(p) => p,
        Err(e) => return report.fail_with(e.to_string(), 1),
    };
    let outcome = match report.timed("evolve", || run_scenario(&ls, &pipeline, a.compare_classical)) {
        Ok(o) => o,
        Err(e) => return report.fail_with(e.to_string(), exit_code(&e)),
    };

    for c in &outcome.checks {
        let mut check = Check::at_most(&c.name, c.error, c.tolerance, Provenance::Scenario).predicted(c.predicted);
        check.detail = Some(format!("measured {:e}", c.measured));
        report.results.push(check);
    }
    if let Some(cr) = &outcome.contrast {
        let snr = if cr.noise_floor > 0.0 { cr.delta_tau.abs() / cr.noise_floor } else { f64::INFINITY };
        report.results.push(
            Check::at_least("spin-contrast-signal", snr, cr.spec.noise_factor, Provenance::Scenario)
                .detail(format!("|Δτ| = {:e}, noise floor {:e}", cr.delta_tau.abs(), cr.noise_floor)),
        );
        report.results.push(
            Check::at_most("spin-contrast-agreement", cr.relative_error, cr.spec.agreement, Provenance::Scenario)
                .predicted(cr.delta_pred)
                .detail(format!("Δτ = {:e}", cr.delta_tau)),
        );
    }

    let name = &ls.scenario.name;
    if let Err(e) = std::fs::create_dir_all(&g.out_dir) {
        return report.fail_with(format!("cannot create {}: {e}", g.out_dir.display()), 2);
    }
    let csv_path = g.out_dir.join(format!("{name}.csv"));
    let meta_path = g.out_dir.join(format!("{name}.metadata.json"));
    let written = (|| -> Result<(), String> {
        let f = File::create(&csv_path).map_err(|e| format!("{}: {e}", csv_path.display()))?;
        write_csv(&outcome.trajectory, outcome.classical.as_ref(), BufWriter::new(f))
            .map_err(|e| format!("{}: {e}", csv_path.display()))?;
        let meta = json!({
            "metadata": outcome.metadata,
            "checks": outcome.checks,
            "spin_contrast": outcome.contrast,
        });
        let text = serde_json::to_string_pretty(&meta).map_err(|e| e.to_string())?;
        std::fs::write(&meta_path, text + "\n").map_err(|e| format!("{}: {e}", meta_path.display()))
    })();
    if let Err(e) = written {
        return report.fail_with(e, 1);
    }
    report.artifacts = vec![csv_path.display().to_string(), meta_path.display().to_string()];
    report.details = json!({
        "metadata": outcome.metadata,
        "spin_contrast": outcome.contrast,
        "samples": outcome.trajectory.samples.len(),
        "final": outcome.trajectory.last(),
    });
    report
}
