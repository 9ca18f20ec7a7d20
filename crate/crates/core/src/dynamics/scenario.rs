//! Scenario files: a field, a grid, a packet, an integrator and the
//! tolerances every reported number is judged against.
//!
//! ```toml
//! name = "flat-dilation"
//! mass = 10.0
//! field_file = "../fields/zero.toml"   # or an inline [metric] table
//! compare_classical = false            # optional
//!
//! [grid]
//! origin = [0, 0, 0]
//! axes = [{ axis = 1, n = 640, lo = -80, hi = 80 }]
//!
//! [packet]
//! center = [0, 0, 0]
//! width = [5, 1, 1]
//! momentum = [1, 0, 0]
//! spin = [0, 0, 1]
//!
//! [integrator]
//! scheme = "crank-nicolson"            # or "rk4"
//! dt = 0.5
//! steps = 1000
//! sample_every = 10
//!
//! [tolerances]
//! norm_drift_per_step = 1e-8
//! tempo_imaginary = 1e-10
//!
//! [[expect]]
//! kind = "dilation"                    # dilation | redshift | ehrenfest | classical
//! tolerance = 1e-4
//!
//! [spin_contrast]                      # optional
//! agreement = 0.05
//! noise_factor = 10
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::classical::{classical_proper_time_constrained, ClassicalTrack};
use super::contrast::{spin_contrast_experiment, ContrastReport, ContrastSpec};
use super::evolve::{evolve, IntegratorSpec, Observables, Propagator};
use super::grid::{Grid, GridSpec};
use super::operator::NumericContext;
use super::state::{init_wavepacket, PacketSpec, SpinorGridState};
use super::{DynamicsError, Trajectory};
use crate::fw::Pipeline;
use crate::geometry::{FieldFile, GeometryError, MetricModel};
use crate::opcore::{FieldBase, FieldSymbol, RuleSet, Truncation};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("scenario {path}{}: {message}", line.map(|l| format!(", line {l}")).unwrap_or_default())]
    Invalid { path: PathBuf, line: Option<usize>, message: String },
    #[error("scenario {path}{}, [{section}]: {source}", line.map(|l| format!(", line {l}")).unwrap_or_default())]
    Dynamics { path: PathBuf, section: &'static str, line: Option<usize>, source: DynamicsError },
    #[error("field {path}: {source}")]
    Field { path: PathBuf, source: GeometryError },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest relative norm change per step.
    pub norm_drift_per_step: f64,
    /// Largest `|Im⟨𝒯⟩|` at any sample.
    pub tempo_imaginary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expectation {
    /// `τ/t` against `1 − ⟨p²⟩/2m²` of the free Gaussian (relative).
    Dilation { tolerance: f64 },
    /// `τ/t` against `1 + ⟨φ⟩ − ⟨p²⟩/2m²` on the initial packet (relative).
    Redshift { tolerance: f64 },
    /// `|Δ⟨xⁱ⟩/Δt − ⟨ẋⁱ⟩|` by central differences of the samples (absolute).
    Ehrenfest { tolerance: f64 },
    /// `|τ − τ_cl + Σ1/(8wⱼ²m²)·t| / t` at the final sample.
    Classical { tolerance: f64 },
}

impl Expectation {
    pub fn name(&self) -> &'static str {
        match self {
            Expectation::Dilation { .. } => "dilation",
            Expectation::Redshift { .. } => "redshift",
            Expectation::Ehrenfest { .. } => "ehrenfest",
            Expectation::Classical { .. } => "classical",
        }
    }

    pub fn tolerance(&self) -> f64 {
        match *self {
            Expectation::Dilation { tolerance }
            | Expectation::Redshift { tolerance }
            | Expectation::Ehrenfest { tolerance }
            | Expectation::Classical { tolerance } => tolerance,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mass: f64,
    #[serde(default)]
    pub field_file: Option<PathBuf>,
    #[serde(default)]
    pub metric: Option<FieldFile>,
    pub grid: GridSpec,
    pub packet: PacketSpec,
    pub integrator: IntegratorSpec,
    pub tolerances: Tolerances,
    #[serde(default)]
    pub expect: Vec<Expectation>,
    #[serde(default)]
    pub spin_contrast: Option<ContrastSpec>,
    #[serde(default)]
    pub compare_classical: bool,
}

/// A parsed scenario with its source text and resolved field.
pub struct LoadedScenario {
    pub path: PathBuf,
    pub source: String,
    pub scenario: Scenario,
    pub field_source: String,
    pub model: MetricModel,
}

fn line_of(source: &str, section: &str) -> Option<usize> {
    let header = format!("[{section}]");
    let key = format!("{section} =");
    source
        .lines()
        .position(|l| {
            let l = l.trim_start();
            l.starts_with(&header) || l.starts_with(&key)
        })
        .map(|i| i + 1)
}

impl LoadedScenario {
    pub fn from_path(path: &Path) -> Result<LoadedScenario, ScenarioError> {
        let source = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io { path: path.into(), source: e })?;
        LoadedScenario::from_str(&source, path)
    }

    /// `path` names the document in errors and anchors a relative
    /// `field_file`.
    pub fn from_str(source: &str, path: &Path) -> Result<LoadedScenario, ScenarioError> {
        let scenario: Scenario =
            toml::from_str(source).map_err(|e| ScenarioError::Parse { path: path.into(), source: e })?;
        let invalid = |section: &str, message: String| ScenarioError::Invalid {
            path: path.into(),
            line: line_of(source, section),
            message,
        };
        let (field_file, field_source, field_path) = match (&scenario.field_file, &scenario.metric) {
            (Some(f), None) => {
                let fp = path.parent().unwrap_or(Path::new(".")).join(f);
                let text = std::fs::read_to_string(&fp).map_err(|e| ScenarioError::Io { path: fp.clone(), source: e })?;
                let ff = FieldFile::from_toml_str(&text).map_err(|e| ScenarioError::Field { path: fp.clone(), source: e })?;
                (ff, text, fp)
            }
            (None, Some(m)) => (m.clone(), String::new(), path.to_path_buf()),
            _ => return Err(invalid("field_file", "give exactly one of `field_file` or `[metric]`".into())),
        };
        let model = field_file.build().map_err(|e| ScenarioError::Field { path: field_path, source: e })?;
        let active: Vec<usize> = scenario.grid.axes.iter().map(|a| a.axis.wrapping_sub(1)).collect();
        for k in 0..3 {
            if !active.contains(&k) {
                if scenario.packet.momentum[k] != 0.0 {
                    return Err(invalid("packet", format!("momentum along absent axis x{} must be 0", k + 1)));
                }
                if scenario.packet.center[k] != scenario.grid.origin[k] {
                    return Err(invalid("packet", format!("center along absent axis x{} must equal the grid origin", k + 1)));
                }
            }
        }
        for e in &scenario.expect {
            if !(e.tolerance() > 0.0) {
                return Err(invalid("expect", format!("{} tolerance must be > 0", e.name())));
            }
        }
        if scenario.expect.iter().any(|e| matches!(e, Expectation::Classical { .. }))
            && !scenario.compare_classical
        {
            return Err(invalid("expect", "a `classical` expectation needs compare_classical = true".into()));
        }
        Ok(LoadedScenario { path: path.into(), source: source.into(), scenario, field_source, model })
    }

    fn at(&self, section: &'static str) -> impl Fn(DynamicsError) -> ScenarioError + '_ {
        move |e| ScenarioError::Dynamics {
            path: self.path.clone(),
            section,
            line: line_of(&self.source, section),
            source: e,
        }
    }

    pub fn context(&self) -> Result<NumericContext, ScenarioError> {
        let grid = Grid::new(self.scenario.grid.clone()).map_err(self.at("grid"))?;
        NumericContext::new(grid, self.model.clone(), self.scenario.mass).map_err(self.at("grid"))
    }
}

/// A number judged against a tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub measured: f64,
    pub predicted: f64,
    pub error: f64,
    pub tolerance: f64,
    /// Where the tolerance came from.
    pub tolerance_source: &'static str,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, measured: f64, predicted: f64, error: f64, tolerance: f64) -> CheckOutcome {
        CheckOutcome {
            name: name.into(),
            measured,
            predicted,
            error,
            tolerance,
            tolerance_source: "scenario",
            passed: error <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub scenario: String,
    pub mass: f64,
    pub field_family: &'static str,
    pub grid: GridSpec,
    pub packet: PacketSpec,
    pub integrator: IntegratorSpec,
    pub tolerances: Tolerances,
    pub symbolic_truncation: Truncation,
    pub fw_converged_at: Option<usize>,
    /// Global phase rate removed from the stepped Hamiltonian.
    pub removed_phase_rate: f64,
    pub max_norm_drift: f64,
    pub max_solver_iterations: usize,
    pub reductions: &'static str,
    pub version: &'static str,
}

pub struct ScenarioOutcome {
    pub trajectory: Trajectory,
    pub classical: Option<ClassicalTrack>,
    pub checks: Vec<CheckOutcome>,
    pub contrast: Option<ContrastReport>,
    pub metadata: RunMetadata,
}

impl ScenarioOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.contrast.as_ref().is_none_or(|c| c.passed())
    }
}

/// `Σⱼ (kⱼ² + 1/4wⱼ²)` over the active axes.
pub fn gaussian_p_squared(grid: &GridSpec, p: &PacketSpec) -> f64 {
    grid.axes
        .iter()
        .map(|a| {
            let k = a.axis - 1;
            p.momentum[k].powi(2) + 1.0 / (4.0 * p.width[k].powi(2))
        })
        .sum()
}

/// Symbolic pipeline used by every simulation.
pub fn default_pipeline() -> Result<Pipeline, DynamicsError> {
    Ok(Pipeline::run(Truncation::default(), &RuleSet::all(), 4)?)
}

pub fn run_scenario(
    ls: &LoadedScenario,
    pipeline: &Pipeline,
    compare_classical: bool,
) -> Result<ScenarioOutcome, ScenarioError> {
    let sc = &ls.scenario;
    let ctx = ls.context()?;
    let prop = Propagator::new(&pipeline.h_fw, &ctx).map_err(ls.at("integrator"))?;
    let obs = Observables::from_pipeline(pipeline, &ctx).map_err(ls.at("integrator"))?;
    let init = init_wavepacket(&ctx, &sc.packet).map_err(ls.at("packet"))?;
    let traj = evolve(&ctx, &init, &prop, &obs, &sc.integrator).map_err(ls.at("integrator"))?;

    let want_classical = compare_classical || sc.compare_classical;
    let classical = if want_classical {
        let free = std::array::from_fn(|k| ctx.grid.is_active(k));
        let v0 = sc.packet.momentum.map(|k| k / sc.mass);
        let duration = traj.last().t - traj.samples[0].t;
        Some(
            classical_proper_time_constrained(
                &ls.model,
                sc.packet.center,
                v0,
                duration,
                sc.integrator.dt * sc.integrator.sample_every as f64,
                free,
            )
            .map_err(ls.at("packet"))?,
        )
    } else {
        None
    };

    let mut checks = vec![
        CheckOutcome::new("norm-drift-per-step", traj.max_norm_drift, 0.0, traj.max_norm_drift, sc.tolerances.norm_drift_per_step),
    ];
    let max_im = traj.samples.iter().map(|s| s.tempo.im.abs()).fold(0.0, f64::max);
    checks.push(CheckOutcome::new("tempo-imaginary", max_im, 0.0, max_im, sc.tolerances.tempo_imaginary));
    for e in &sc.expect {
        checks.extend(evaluate(e, ls, &ctx, &init, &traj, classical.as_ref()));
    }

    let contrast = match &sc.spin_contrast {
        Some(spec) => Some(
            spin_contrast_experiment(&ctx, pipeline, &sc.packet, &sc.integrator, spec).map_err(ls.at("spin_contrast"))?,
        ),
        None => None,
    };

    let metadata = RunMetadata {
        scenario: sc.name.clone(),
        mass: sc.mass,
        field_family: ls.model.family().name(),
        grid: sc.grid.clone(),
        packet: sc.packet.clone(),
        integrator: sc.integrator.clone(),
        tolerances: sc.tolerances.clone(),
        symbolic_truncation: pipeline.fw.truncation,
        fw_converged_at: pipeline.fw.converged_at,
        removed_phase_rate: traj.removed_phase_rate,
        max_norm_drift: traj.max_norm_drift,
        max_solver_iterations: traj.max_solver_iterations,
        reductions: "fixed-order blocked sums",
        version: env!("CARGO_PKG_VERSION"),
    };
    Ok(ScenarioOutcome { trajectory: traj, classical, checks, contrast, metadata })
}

fn evaluate(
    e: &Expectation,
    ls: &LoadedScenario,
    ctx: &NumericContext,
    init: &SpinorGridState,
    traj: &Trajectory,
    classical: Option<&ClassicalTrack>,
) -> Vec<CheckOutcome> {
    let sc = &ls.scenario;
    let m = sc.mass;
    let p2 = gaussian_p_squared(&sc.grid, &sc.packet);
    let last = traj.last();
    let duration = last.t - traj.samples[0].t;
    let rate = last.tau / duration;
    let tol = e.tolerance();
    match e {
        Expectation::Dilation { .. } => {
            let pred = 1.0 - p2 / (2.0 * m * m);
            vec![CheckOutcome::new("dilation", rate, pred, ((rate - pred) / pred).abs(), tol)]
        }
        Expectation::Redshift { .. } => {
            let phi = ctx.field_values(&FieldSymbol::new(FieldBase::Phi));
            let mean_phi = ctx.density_moment(init, |i| phi[i]) / ctx.norm(init);
            let pred = 1.0 + mean_phi - p2 / (2.0 * m * m);
            vec![CheckOutcome::new("redshift", rate, pred, ((rate - pred) / pred).abs(), tol)]
        }
        Expectation::Ehrenfest { .. } => {
            let s = &traj.samples;
            let mut out = Vec::new();
            for k in ctx.grid.active_axes() {
                let mut worst: (f64, f64, f64) = (0.0, 0.0, 0.0);
                for i in 1..s.len().saturating_sub(1) {
                    let fd = (s[i + 1].x[*k] - s[i - 1].x[*k]) / (s[i + 1].t - s[i - 1].t);
                    let d = (fd - s[i].v[*k]).abs();
                    if d >= worst.0 {
                        worst = (d, fd, s[i].v[*k]);
                    }
                }
                out.push(CheckOutcome::new(format!("ehrenfest-x{}", k + 1), worst.1, worst.2, worst.0, tol));
            }
            out
        }
        Expectation::Classical { .. } => {
            let Some(c) = classical else { return Vec::new() };
            let width: f64 = sc.grid.axes.iter().map(|a| 1.0 / (8.0 * (sc.packet.width[a.axis - 1] * m).powi(2))).sum();
            let tau_cl = c.tau_at(last.t - traj.samples[0].t);
            let pred = tau_cl - width * duration;
            vec![CheckOutcome::new("classical", last.tau, pred, (last.tau - pred).abs() / duration, tol)]
        }
    }
}

pub const CSV_HEADER: [&str; 11] = ["t", "tau", "tempo_re", "tempo_im", "norm", "x1", "x2", "x3", "v1", "v2", "v3"];

/// One row per sample; numbers in shortest round-trip form so identical
/// runs give identical bytes.
pub fn write_csv(traj: &Trajectory, classical: Option<&ClassicalTrack>, out: impl Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if classical.is_some() {
        header.push("tau_cl");
    }
    w.write_record(&header)?;
    let t0 = traj.samples[0].t;
    for s in &traj.samples {
        let mut row = vec![s.t, s.tau, s.tempo.re, s.tempo.im, s.norm, s.x[0], s.x[1], s.x[2], s.v[0], s.v[1], s.v[2]];
        if let Some(c) = classical {
            row.push(c.tau_at(s.t - t0));
        }
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
