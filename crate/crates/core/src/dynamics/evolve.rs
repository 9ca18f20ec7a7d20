//! Time stepping of `i∂ₜΨ = H_FW Ψ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operator::{CompiledOperator, NumericContext};
use super::state::{Spinor, SpinorGridState};
use super::{proper_time, DynamicsError, Sample, Trajectory};
use crate::fw::Pipeline;
use crate::opcore::{Gamma, OperatorExpr};

/// Cells from the edge inspected by the support check.
pub const SUPPORT_CELLS: usize = 2;
/// Largest probability tolerated in the boundary band.
pub const SUPPORT_LIMIT: f64 = 1e-8;
/// `dt·ρ` bound used for RK4; its imaginary-axis stability limit is 2√2.
pub const RK4_BOUND: f64 = 2.5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Implicit midpoint; unconditionally stable, norm-preserving.
    #[default]
    CrankNicolson,
    Rk4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::CrankNicolson => "crank-nicolson",
            Scheme::Rk4 => "rk4",
        }
    }
}

fn default_sample_every() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-13
}
fn default_max_iter() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    #[serde(default)]
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Relative residual at which the implicit solve stops.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl IntegratorSpec {
    pub fn new(dt: f64, steps: usize) -> IntegratorSpec {
        IntegratorSpec {
            scheme: Scheme::CrankNicolson,
            dt,
            steps,
            sample_every: 1,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(DynamicsError::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.sample_every == 0 {
            return Err(DynamicsError::Config("sample_every must be ≥ 1".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(DynamicsError::Config("solver tol and max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// The stepped Hamiltonian: `H_FW` minus its constant `m` term, which is
/// carried as the global phase `e^{−imt}`.
pub struct Propagator {
    pub h: CompiledOperator,
    pub removed_phase_rate: f64,
    /// Step with `½(H + W⁻¹H†W)` so the discrete generator is exactly
    /// self-adjoint under the weighted inner product.
    pub symmetrize: bool,
}

impl Propagator {
    pub fn new(h_fw: &OperatorExpr, ctx: &NumericContext) -> Result<Propagator, DynamicsError> {
        let is_rest = |m: &crate::opcore::Monomial| {
            m.mpow == 1 && m.fields.is_empty() && m.matrix == Gamma::ONE && m.derivs == [0; 3] && m.coords == [0; 3]
        };
        let rate: f64 = h_fw.terms().filter(|(m, _)| is_rest(m)).map(|(_, c)| c.to_complex().re * ctx.mass).sum();
        let stepped = h_fw.filter(|m, _| !is_rest(m));
        Ok(Propagator { h: CompiledOperator::compile(&stepped, ctx)?, removed_phase_rate: rate, symmetrize: true })
    }

    pub fn apply(&self, ctx: &NumericContext, psi: &Spinor) -> Spinor {
        if self.symmetrize {
            self.h.apply_symmetrized(ctx, psi)
        } else {
            self.h.apply(ctx, psi)
        }
    }
}

/// Operators recorded at every sample.
pub struct Observables {
    pub tempo: CompiledOperator,
    pub velocities: [CompiledOperator; 3],
}

impl Observables {
    pub fn new(tempo: &OperatorExpr, velocities: &[OperatorExpr; 3], ctx: &NumericContext) -> Result<Observables, DynamicsError> {
        let v = [
            CompiledOperator::compile(&velocities[0], ctx)?,
            CompiledOperator::compile(&velocities[1], ctx)?,
            CompiledOperator::compile(&velocities[2], ctx)?,
        ];
        Ok(Observables { tempo: CompiledOperator::compile(tempo, ctx)?, velocities: v })
    }

    pub fn from_pipeline(p: &Pipeline, ctx: &NumericContext) -> Result<Observables, DynamicsError> {
        Observables::new(&p.tempo, &p.velocities, ctx)
    }

    pub fn sample(&self, ctx: &NumericContext, s: &SpinorGridState) -> Sample {
        let norm = ctx.norm(s);
        let x = std::array::from_fn(|k| {
            if ctx.grid.is_active(k) {
                ctx.density_moment(s, |i| ctx.grid.point(i)[k]) / norm
            } else {
                ctx.grid.spec().origin[k]
            }
        });
        let v = std::array::from_fn(|k| self.velocities[k].expectation(ctx, s).re / norm);
        Sample { t: s.t, tempo: self.tempo.expectation(ctx, s) / norm, norm, x, v, tau: 0.0 }
    }
}

fn axpy(y: &mut Spinor, a: Complex64, x: &Spinor) {
    for c in 0..2 {
        y[c].par_iter_mut().zip(x[c].par_iter()).for_each(|(u, v)| *u += a * v);
    }
}

fn l2(x: &Spinor) -> f64 {
    // fixed-order sum for reproducibility
    x.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `Σ |ψ|² W dV` over cells within `cells` of an edge of an active axis.
pub fn boundary_probability(ctx: &NumericContext, s: &SpinorGridState, cells: usize) -> f64 {
    let dv = ctx.grid.cell_volume();
    (0..ctx.grid.len())
        .filter(|&i| ctx.grid.near_boundary(i, cells))
        .map(|i| (s.psi[0][i].norm_sqr() + s.psi[1][i].norm_sqr()) * ctx.weight[i] * dv)
        .sum()
}

fn check_support(ctx: &NumericContext, s: &SpinorGridState) -> Result<(), DynamicsError> {
    let mass = boundary_probability(ctx, s, SUPPORT_CELLS);
    if mass > SUPPORT_LIMIT {
        return Err(DynamicsError::BoundaryBreach { t: s.t, mass, cells: SUPPORT_CELLS, limit: SUPPORT_LIMIT });
    }
    Ok(())
}

struct Stepper<'a> {
    ctx: &'a NumericContext,
    prop: &'a Propagator,
    spec: &'a IntegratorSpec,
    /// `1 / (1 + i(dt/2)k²/2m)` on the Fourier grid.
    precond: Vec<Complex64>,
    max_iterations: usize,
}

impl<'a> Stepper<'a> {
    fn new(ctx: &'a NumericContext, prop: &'a Propagator, spec: &'a IntegratorSpec) -> Result<Stepper<'a>, DynamicsError> {
        if spec.scheme == Scheme::Rk4 {
            let rho = prop.h.spectral_bound(&ctx.grid);
            let product = spec.dt * rho;
            if product > RK4_BOUND {
                return Err(DynamicsError::Stability { scheme: "rk4", product, bound: RK4_BOUND });
            }
        }
        let half = 0.5 * spec.dt;
        let precond = (0..ctx.grid.len())
            .map(|i| Complex64::new(1.0, half * ctx.grid.k_squared(i) / (2.0 * ctx.mass)).inv())
            .collect();
        Ok(Stepper { ctx, prop, spec, precond, max_iterations: 0 })
    }

    fn precondition(&self, r: &mut Spinor) {
        for c in r.iter_mut() {
            self.ctx.grid.forward(c);
            c.par_iter_mut().zip(self.precond.par_iter()).for_each(|(z, p)| *z *= p);
            self.ctx.grid.inverse(c);
        }
    }

    fn step(&mut self, psi: &Spinor, step: usize) -> Result<Spinor, DynamicsError> {
        match self.spec.scheme {
            Scheme::CrankNicolson => self.crank_nicolson(psi, step),
            Scheme::Rk4 => Ok(self.rk4(psi)),
        }
    }

    /// Solves `(1 + iδH)ψ' = (1 − iδH)ψ`, `δ = dt/2`, by preconditioned
    /// Richardson iteration around the free kinetic term.
    fn crank_nicolson(&mut self, psi: &Spinor, step: usize) -> Result<Spinor, DynamicsError> {
        let d = Complex64::new(0.0, 0.5 * self.spec.dt);
        let mut b = psi.clone();
        axpy(&mut b, -d, &self.prop.apply(self.ctx, psi));
        let bn = l2(&b);
        let mut x = b.clone();
        self.precondition(&mut x);
        let mut residual = f64::INFINITY;
        for it in 1..=self.spec.max_iter {
            let hx = self.prop.apply(self.ctx, &x);
            let mut r = b.clone();
            axpy(&mut r, Complex64::new(-1.0, 0.0), &x);
            axpy(&mut r, -d, &hx);
            residual = l2(&r) / bn;
            if residual < self.spec.tol {
                self.max_iterations = self.max_iterations.max(it);
                return Ok(x);
            }
            self.precondition(&mut r);
            axpy(&mut x, Complex64::new(1.0, 0.0), &r);
        }
        Err(DynamicsError::SolverNonConvergence { step, residual, iterations: self.spec.max_iter })
    }

    fn rk4(&self, psi: &Spinor) -> Spinor {
        let dt = self.spec.dt;
        let mi = Complex64::new(0.0, -1.0);
        let f = |y: &Spinor| -> Spinor {
            let mut h = self.prop.apply(self.ctx, y);
            h.iter_mut().for_each(|c| c.par_iter_mut().for_each(|z| *z *= mi));
            h
        };
        let k1 = f(psi);
        let mut y = psi.clone();
        axpy(&mut y, (0.5 * dt).into(), &k1);
        let k2 = f(&y);
        let mut y = psi.clone();
        axpy(&mut y, (0.5 * dt).into(), &k2);
        let k3 = f(&y);
        let mut y = psi.clone();
        axpy(&mut y, dt.into(), &k3);
        let k4 = f(&y);
        let mut out = psi.clone();
        axpy(&mut out, (dt / 6.0).into(), &k1);
        axpy(&mut out, (dt / 3.0).into(), &k2);
        axpy(&mut out, (dt / 3.0).into(), &k3);
        axpy(&mut out, (dt / 6.0).into(), &k4);
        out
    }
}

/// Evolves `init` for `spec.steps` steps, sampling every
/// `spec.sample_every` steps (and at the final step). `hook` sees every
/// sampled state.
pub fn evolve_observed(
    ctx: &NumericContext,
    init: &SpinorGridState,
    prop: &Propagator,
    obs: &Observables,
    spec: &IntegratorSpec,
    mut hook: impl FnMut(&SpinorGridState, &Sample),
) -> Result<Trajectory, DynamicsError> {
    spec.validate()?;
    let mut stepper = Stepper::new(ctx, prop, spec)?;
    let mut s = init.clone();
    check_support(ctx, &s)?;
    let first = obs.sample(ctx, &s);
    hook(&s, &first);
    let mut samples = vec![first];
    let mut norm = ctx.norm(&s);
    let mut max_drift: f64 = 0.0;
    for n in 1..=spec.steps {
        s.psi = stepper.step(&s.psi, n)?;
        s.t = init.t + n as f64 * spec.dt;
        let nn = ctx.norm(&s);
        max_drift = max_drift.max(((nn - norm) / norm).abs());
        norm = nn;
        if n % spec.sample_every == 0 || n == spec.steps {
            check_support(ctx, &s)?;
            let smp = obs.sample(ctx, &s);
            hook(&s, &smp);
            samples.push(smp);
        }
    }
    let mut traj = Trajectory {
        samples,
        removed_phase_rate: prop.removed_phase_rate,
        scheme: spec.scheme,
        dt: spec.dt,
        max_norm_drift: max_drift,
        max_solver_iterations: stepper.max_iterations,
    };
    proper_time(&mut traj);
    Ok(traj)
}

pub fn evolve(
    ctx: &NumericContext,
    init: &SpinorGridState,
    prop: &Propagator,
    obs: &Observables,
    spec: &IntegratorSpec,
) -> Result<Trajectory, DynamicsError> {
    evolve_observed(ctx, init, prop, obs, spec, |_, _| {})
}
