//! Spinor wavepackets on a periodic grid evolved under the reduced
//! Hamiltonian, with proper time accumulated from the tempo operator and a
//! classical geodesic clock for comparison.

pub mod classical;
pub mod contrast;
pub mod evolve;
pub mod grid;
pub mod operator;
pub mod scenario;
pub mod state;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::fw::FwError;
use crate::geometry::GeometryError;

pub use classical::{classical_proper_time, classical_proper_time_constrained, ClassicalTrack};
pub use contrast::{spin_contrast_experiment, ContrastReport, ContrastSpec};
pub use evolve::{evolve, evolve_observed, IntegratorSpec, Observables, Propagator, Scheme};
pub use grid::{AxisSpec, Grid, GridSpec};
pub use operator::{CompiledOperator, NumericContext};
pub use state::{init_wavepacket, spinor_along, PacketSpec, Spinor, SpinorGridState};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("packet support: {0}")]
    Support(String),
    #[error("grid too coarse along x{axis}: |k|·dx = {k_dx:.3} > π/4")]
    Resolution { axis: usize, k_dx: f64 },
    #[error("unsupported operator: {0}")]
    Unsupported(String),
    #[error("derivative order {order} exceeds the supported maximum of 2")]
    DerivativeOrder { order: u32 },
    #[error("implicit solver did not converge at step {step}: residual {residual:e} after {iterations} iterations")]
    SolverNonConvergence { step: usize, residual: f64, iterations: usize },
    #[error("dt·ρ = {product:.3} exceeds the {scheme} stability bound {bound}")]
    Stability { scheme: &'static str, product: f64, bound: f64 },
    #[error("probability {mass:e} within {cells} cells of the boundary at t = {t} (limit {limit:e})")]
    BoundaryBreach { t: f64, mass: f64, cells: usize, limit: f64 },
    #[error("classical track left the admissible region at t = {t}: {source}")]
    TrackInadmissible { t: f64, source: GeometryError },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fw(#[from] FwError),
}

/// One recorded instant of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Sample {
    pub t: f64,
    /// `⟨𝒯⟩`; the real part drives τ, the imaginary part is a diagnostic.
    pub tempo: Complex64,
    pub norm: f64,
    pub x: [f64; 3],
    /// `Re⟨ẋⁱ⟩`
    pub v: [f64; 3],
    /// `τ(t)`; filled by [`proper_time`].
    pub tau: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Rate of the global phase `e^{−iωt}` removed from the stepped operator.
    pub removed_phase_rate: f64,
    pub scheme: Scheme,
    pub dt: f64,
    /// Largest per-step relative norm change.
    pub max_norm_drift: f64,
    /// Largest number of solver iterations in any step (implicit scheme).
    pub max_solver_iterations: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    /// `∫ |Im⟨𝒯⟩| dt` over the run.
    pub fn tempo_imag_integral(&self) -> f64 {
        self.samples.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].tempo.im.abs() + w[1].tempo.im.abs())).sum()
    }
}

/// `τ(t) = ∫ Re⟨𝒯⟩ dt` by the trapezoid rule over the samples, starting
/// from zero. The local error per interval is `Δt³|τ'''|/12`, i.e. O(Δt²)
/// globally.
pub fn proper_time(traj: &mut Trajectory) {
    let mut tau = 0.0;
    if let Some(s) = traj.samples.first_mut() {
        s.tau = 0.0;
    }
    for i in 1..traj.samples.len() {
        let (a, b) = (&traj.samples[i - 1], &traj.samples[i]);
        tau += 0.5 * (b.t - a.t) * (a.tempo.re + b.tempo.re);
        traj.samples[i].tau = tau;
    }
}
