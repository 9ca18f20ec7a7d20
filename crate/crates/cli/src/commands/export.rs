use clap::ValueEnum;
use serde_json::json;
use tempo_core::fw::Pipeline;
use tempo_core::opcore::{parse_operator_with, OperatorExpr, RuleSet, Truncation};

use crate::report::{Check, RunReport};
use crate::Globals;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExportTarget {
    /// Dirac Hamiltonian in the weak field
    #[value(name = "H")]
    Hamiltonian,
    /// Two-component reduced Hamiltonian
    #[value(name = "H_FW", alias = "HFW")]
    HamiltonianFw,
    /// Tempo operator
    #[value(name = "T")]
    Tempo,
    /// Its square, after rewrites
    #[value(name = "T2", alias = "T²")]
    TempoSquared,
    #[value(name = "xdot1")]
    Velocity1,
    #[value(name = "xdot2")]
    Velocity2,
    #[value(name = "xdot3")]
    Velocity3,
    /// `ẋᵘ g_{μν} ẋᵛ`, after rewrites
    #[value(name = "quadform")]
    QuadraticForm,
}

impl ExportTarget {
    fn pick(self, p: &Pipeline) -> OperatorExpr {
        match self {
            ExportTarget::Hamiltonian => p.hamiltonian.clone(),
            ExportTarget::HamiltonianFw => p.h_fw.clone(),
            ExportTarget::Tempo => p.tempo.clone(),
            ExportTarget::TempoSquared => p.tempo_squared.clone(),
            ExportTarget::Velocity1 => p.velocities[0].clone(),
            ExportTarget::Velocity2 => p.velocities[1].clone(),
            ExportTarget::Velocity3 => p.velocities[2].clone(),
            ExportTarget::QuadraticForm => p.quadratic_form.clone(),
        }
    }

    fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Returns the report and, on success, the expression text.
pub fn run(target: ExportTarget, flat: bool, g: &Globals) -> (RunReport, Option<String>) {
    let t = Truncation::default();
    let mut config = g.echo();
    config["target"] = json!(target.name());
    config["flat"] = json!(flat);
    config["truncation"] = json!(t);
    let mut report = RunReport::new("export", config);
    let pipeline = match report.timed("symbolic", || Pipeline::run(t, &RuleSet::all(), 4)) {
        Ok(p) => p,
        Err(e) => return (report.fail_with(e.to_string(), 1), None),
    };
    let mut expr = target.pick(&pipeline);
    if flat {
        expr = expr.filter(|m, _| m.fields.is_empty());
    }
    let text = expr.to_string();

    // the printed form must parse back to the same canonical expression
    let (terms, reprinted) = match parse_operator_with(&text, t, &[]) {
        Ok(back) => ((&back - &expr).len(), back.to_string()),
        Err(e) => return (report.fail_with(format!("exported text does not parse: {e}"), 1), None),
    };
    report.results.push(Check::exact("round-trip", terms, ""));
    report.results.push(Check::exact("reprint-identical", usize::from(reprinted != text), ""));
    report.details = json!({ "text": text, "terms": expr.len() });
    (report, Some(text))
}
