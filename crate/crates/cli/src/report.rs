//! The machine-readable run report printed on stdout.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

/// Where a tolerance came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Built into the tool.
    Default,
    /// The `--config` file.
    Config,
    /// A command-line flag.
    Flag,
    /// The scenario or field file being run.
    Scenario,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    /// `measured ≤ tolerance`
    #[serde(rename = "<=")]
    AtMost,
    /// `measured ≥ tolerance`
    #[serde(rename = ">=")]
    AtLeast,
}

/// One number judged against a tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    pub tolerance_source: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64, source: Provenance) -> Check {
        Check {
            name: name.into(),
            passed: measured <= tolerance,
            measured,
            comparison: Comparison::AtMost,
            tolerance,
            tolerance_source: source,
            predicted: None,
            detail: None,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, tolerance: f64, source: Provenance) -> Check {
        Check { passed: measured >= tolerance, comparison: Comparison::AtLeast, ..Check::at_most(name, measured, tolerance, source) }
    }

    /// An exact identity: `measured` counts residual terms and must be 0.
    pub fn exact(name: impl Into<String>, residual_terms: usize, difference: &str) -> Check {
        let mut c = Check::at_most(name, residual_terms as f64, 0.0, Provenance::Default);
        if !difference.is_empty() {
            c.detail = Some(difference.to_string());
        }
        c
    }

    pub fn predicted(mut self, p: f64) -> Check {
        self.predicted = Some(p);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Check {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    /// Effective configuration after defaults, config file and flags.
    pub config: serde_json::Value,
    pub results: Vec<Check>,
    /// Command-specific structured output.
    pub details: serde_json::Value,
    pub artifacts: Vec<String>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub status: Status,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("check `{0}` has a non-finite or negative tolerance")]
    Tolerance(String),
    #[error("check `{0}` records passed = {1} but its numbers say otherwise")]
    Inconsistent(String, bool),
    #[error("status {status:?} does not follow from the checks")]
    Status { status: Status },
    #[error("exit code {code} does not match status {status:?}")]
    ExitCode { code: i32, status: Status },
}

impl RunReport {
    pub fn new(command: &str, config: serde_json::Value) -> RunReport {
        RunReport {
            command: command.into(),
            config,
            results: Vec::new(),
            details: serde_json::Value::Null,
            artifacts: Vec::new(),
            timings: BTreeMap::new(),
            status: Status::Pass,
            exit_code: 0,
            error: None,
        }
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }

    /// Sets status and exit code from the checks.
    pub fn finish(mut self) -> RunReport {
        if self.status != Status::Error {
            let ok = self.results.iter().all(|c| c.passed);
            self.status = if ok { Status::Pass } else { Status::Fail };
            self.exit_code = if ok { 0 } else { 1 };
        }
        self
    }

    pub fn fail_with(mut self, error: String, exit_code: i32) -> RunReport {
        self.status = Status::Error;
        self.exit_code = exit_code;
        self.error = Some(error);
        self
    }

    /// Structural checks every emitted report satisfies.
    pub fn validate(&self) -> Result<(), SchemaError> {
        for c in &self.results {
            if !(c.tolerance.is_finite() && c.tolerance >= 0.0) {
                return Err(SchemaError::Tolerance(c.name.clone()));
            }
            let holds = match c.comparison {
                Comparison::AtMost => c.measured <= c.tolerance,
                Comparison::AtLeast => c.measured >= c.tolerance,
            };
            if holds != c.passed {
                return Err(SchemaError::Inconsistent(c.name.clone(), c.passed));
            }
        }
        let ok = self.results.iter().all(|c| c.passed);
        let expected_code = match self.status {
            Status::Pass if ok => 0,
            Status::Fail if !ok => 1,
            Status::Error => self.exit_code.max(1),
            status => return Err(SchemaError::Status { status }),
        };
        if self.exit_code != expected_code {
            return Err(SchemaError::ExitCode { code: self.exit_code, status: self.status });
        }
        Ok(())
    }

    /// One line per check on `out`, for people.
    pub fn summarize(&self, mut out: impl Write) -> std::io::Result<()> {
        for c in &self.results {
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
            };
            writeln!(
                out,
                "{} {:<40} {:>12.4e} {op} {:.1e} ({:?})",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.tolerance,
                c.tolerance_source
            )?;
        }
        if let Some(e) = &self.error {
            writeln!(out, "error: {e}")?;
        }
        writeln!(out, "{}: {:?}", self.command, self.status)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_checks() {
        let mut r = RunReport::new("t", serde_json::Value::Null);
        r.results.push(Check::at_most("a", 1.0, 2.0, Provenance::Default));
        let r = r.finish();
        assert_eq!((r.status, r.exit_code), (Status::Pass, 0));
        assert!(r.validate().is_ok());

        let mut r = RunReport::new("t", serde_json::Value::Null);
        r.results.push(Check::at_least("b", 1.0, 2.0, Provenance::Scenario));
        let r = r.finish();
        assert_eq!((r.status, r.exit_code), (Status::Fail, 1));
        assert!(r.validate().is_ok());
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("n", f64::NAN, 1.0, Provenance::Default).passed);
        assert!(!Check::at_least("n", f64::NAN, 1.0, Provenance::Default).passed);
    }

    #[test]
    fn tampered_reports_are_rejected() {
        let mut r = RunReport::new("t", serde_json::Value::Null);
        r.results.push(Check::at_most("a", 3.0, 2.0, Provenance::Default));
        let mut r = r.finish();
        r.results[0].passed = true;
        assert_eq!(r.validate(), Err(SchemaError::Inconsistent("a".into(), true)));
        r.results[0].passed = false;
        r.exit_code = 0;
        assert!(matches!(r.validate(), Err(SchemaError::ExitCode { .. })));
    }
}
