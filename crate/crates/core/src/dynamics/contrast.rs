//! Proper-time difference between opposite spin orientations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::evolve::{evolve, evolve_observed, IntegratorSpec, Observables, Propagator};
use super::operator::{CompiledOperator, NumericContext};
use super::state::{init_wavepacket, spinor_along, PacketSpec, SpinorGridState};
use super::{DynamicsError, Trajectory};
use crate::fw::Pipeline;
use crate::opcore::Gamma;

fn default_agreement() -> f64 {
    0.05
}
fn default_noise_factor() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContrastSpec {
    /// Largest accepted `|Δτ − Δτ_pred| / |Δτ_pred|`.
    #[serde(default = "default_agreement")]
    pub agreement: f64,
    /// `|Δτ|` must exceed the noise floor by this factor to be conclusive.
    #[serde(default = "default_noise_factor")]
    pub noise_factor: f64,
}

impl Default for ContrastSpec {
    fn default() -> Self {
        ContrastSpec { agreement: default_agreement(), noise_factor: default_noise_factor() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContrastPoint {
    pub t: f64,
    pub delta_tau: f64,
    pub delta_pred: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContrastVerdict {
    Agrees,
    Disagrees,
    /// `|Δτ|` does not clear the noise floor; not a failure.
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContrastReport {
    pub spin: [f64; 3],
    pub series: Vec<ContrastPoint>,
    pub delta_tau: f64,
    pub delta_pred: f64,
    pub relative_error: f64,
    pub noise_floor: f64,
    pub verdict: ContrastVerdict,
    pub spec: ContrastSpec,
    #[serde(skip)]
    pub plus: Trajectory,
    #[serde(skip)]
    pub minus: Trajectory,
}

impl ContrastReport {
    pub fn passed(&self) -> bool {
        !matches!(self.verdict, ContrastVerdict::Disagrees)
    }
}

fn trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; t.len()];
    for i in 1..t.len() {
        acc[i] = acc[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    }
    acc
}

/// Runs the packet with spin `+n` and `−n` under the full reduced
/// Hamiltonian and compares `Δτ = τ₊ − τ₋` with the first-order prediction:
/// the σ-terms of the tempo operator averaged, for both orientations, over a
/// packet evolved without any spin coupling.
pub fn spin_contrast_experiment(
    ctx: &NumericContext,
    pipeline: &Pipeline,
    packet: &PacketSpec,
    integrator: &IntegratorSpec,
    spec: &ContrastSpec,
) -> Result<ContrastReport, DynamicsError> {
    let n = packet.spin;
    let flipped = PacketSpec { spin: [-n[0], -n[1], -n[2]], ..packet.clone() };
    let prop = Propagator::new(&pipeline.h_fw, ctx)?;
    let obs = Observables::from_pipeline(pipeline, ctx)?;
    let plus = evolve(ctx, &init_wavepacket(ctx, packet)?, &prop, &obs, integrator)?;
    let minus = evolve(ctx, &init_wavepacket(ctx, &flipped)?, &prop, &obs, integrator)?;

    // spin-free reference: a product state stays one, so the orbital factor
    // can be recombined with either spinor at every sample
    let spin_free = Propagator::new(&pipeline.h_fw.filter(|m, _| m.matrix == Gamma::ONE), ctx)?;
    let tempo_sigma = CompiledOperator::compile(&pipeline.tempo.filter(|m, _| m.matrix != Gamma::ONE), ctx)?;
    let (chi_p, chi_m) = (spinor_along(&n)?, spinor_along(&flipped.spin)?);
    let mut pred_rate = Vec::new();
    evolve_observed(ctx, &init_wavepacket(ctx, packet)?, &spin_free, &obs, integrator, |s, _| {
        let orbital: Vec<Complex64> =
            s.psi[0].iter().zip(&s.psi[1]).map(|(a, b)| chi_p[0].conj() * a + chi_p[1].conj() * b).collect();
        let with = |chi: [Complex64; 2]| SpinorGridState {
            t: s.t,
            psi: [orbital.iter().map(|f| f * chi[0]).collect(), orbital.iter().map(|f| f * chi[1]).collect()],
        };
        let (sp, sm) = (with(chi_p), with(chi_m));
        let rate = tempo_sigma.expectation(ctx, &sp).re / ctx.norm(&sp) - tempo_sigma.expectation(ctx, &sm).re / ctx.norm(&sm);
        pred_rate.push(rate);
    })?;

    let t: Vec<f64> = plus.samples.iter().map(|s| s.t).collect();
    let pred = trapezoid(&t, &pred_rate);
    let series: Vec<ContrastPoint> = plus
        .samples
        .iter()
        .zip(&minus.samples)
        .zip(&pred)
        .map(|((a, b), p)| ContrastPoint { t: a.t, delta_tau: a.tau - b.tau, delta_pred: *p })
        .collect();
    let last = series.last().expect("at least the initial sample");

    // Im⟨𝒯⟩ differences, norm drift accumulated over the run and
    // roundoff in the two τ integrals
    let im_diff: Vec<f64> = plus.samples.iter().zip(&minus.samples).map(|(a, b)| (a.tempo.im - b.tempo.im).abs()).collect();
    let duration = last.t - t[0];
    let steps = integrator.steps as f64;
    let noise_floor = trapezoid(&t, &im_diff).last().copied().unwrap_or(0.0)
        + (plus.max_norm_drift + minus.max_norm_drift) * steps * duration
        + 1e-13 * duration;

    let relative_error = if last.delta_pred != 0.0 {
        (last.delta_tau - last.delta_pred).abs() / last.delta_pred.abs()
    } else {
        f64::INFINITY
    };
    let verdict = if last.delta_tau.abs() <= spec.noise_factor * noise_floor {
        ContrastVerdict::Inconclusive
    } else if relative_error <= spec.agreement {
        ContrastVerdict::Agrees
    } else {
        ContrastVerdict::Disagrees
    };
    Ok(ContrastReport {
        spin: n,
        delta_tau: last.delta_tau,
        delta_pred: last.delta_pred,
        series,
        relative_error,
        noise_floor,
        verdict,
        spec: spec.clone(),
        plus,
        minus,
    })
}
