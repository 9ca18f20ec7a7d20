//! Numeric realization of two-component symbolic operators on a grid:
//! pointwise field factors × Pauli action × spectral derivatives.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::Grid;
use super::state::{Spinor, SpinorGridState};
use super::DynamicsError;
use crate::geometry::MetricModel;
use crate::opcore::dirac::pauli;
use crate::opcore::{FieldBase, FieldSymbol, MultiIndex, OperatorExpr};

/// Highest derivative order accepted by [`CompiledOperator::compile`].
pub const MAX_DERIV_ORDER: u32 = 2;
/// Block size of the fixed-order reductions, independent of thread count.
const CHUNK: usize = 4096;

/// Grid, field model and mass shared by every numeric operator, with a
/// cache of field values on the grid.
pub struct NumericContext {
    pub grid: Grid,
    pub model: MetricModel,
    pub mass: f64,
    /// `√(−³g) ≈ 1 − ½Σhᵢᵢ` on the grid.
    pub weight: Vec<f64>,
    cache: Mutex<HashMap<FieldSymbol, Arc<Vec<f64>>>>,
}

impl NumericContext {
    /// Every grid point must be admissible for the model.
    pub fn new(grid: Grid, model: MetricModel, mass: f64) -> Result<NumericContext, DynamicsError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(DynamicsError::Config(format!("mass must be > 0, got {mass}")));
        }
        let pts = grid.points();
        if let Some(bad) = pts.iter().find(|x| !model.is_admissible(x)) {
            return Err(model.admissibility(bad).unwrap_err().into());
        }
        let mut ctx = NumericContext { grid, model, mass, weight: Vec::new(), cache: Mutex::new(HashMap::new()) };
        let trace: Vec<f64> = (0..3)
            .map(|i| ctx.field_values(&FieldSymbol::new(FieldBase::h(i, i))))
            .fold(vec![0.0; pts.len()], |acc, f| acc.iter().zip(f.iter()).map(|(a, b)| a + b).collect());
        ctx.weight = trace.iter().map(|t| 1.0 - 0.5 * t).collect();
        Ok(ctx)
    }

    pub fn field_values(&self, sym: &FieldSymbol) -> Arc<Vec<f64>> {
        if let Some(v) = self.cache.lock().unwrap().get(sym) {
            return v.clone();
        }
        let f = self.model.symbol_field(sym);
        let vals: Vec<f64> = (0..self.grid.len()).into_par_iter().map(|i| f.eval(&self.grid.point(i))).collect();
        let vals = Arc::new(vals);
        self.cache.lock().unwrap().insert(sym.clone(), vals.clone());
        vals
    }

    /// Weighted inner product `⟨a|b⟩ = Σ √(−³g) a†b dV`, summed in fixed
    /// blocks so the result does not depend on the thread count.
    pub fn inner(&self, a: &Spinor, b: &Spinor) -> Complex64 {
        let n = self.grid.len();
        let partial: Vec<Complex64> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut s = Complex64::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    s += (a[0][i].conj() * b[0][i] + a[1][i].conj() * b[1][i]) * self.weight[i];
                }
                s
            })
            .collect();
        partial.iter().sum::<Complex64>() * self.grid.cell_volume()
    }

    pub fn norm(&self, s: &SpinorGridState) -> f64 {
        self.inner(&s.psi, &s.psi).re
    }

    /// Weighted sum of a real pointwise function against `|ψ|²`.
    pub fn density_moment(&self, s: &SpinorGridState, f: impl Fn(usize) -> f64 + Sync) -> f64 {
        let n = self.grid.len();
        let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                (c * CHUNK..((c + 1) * CHUNK).min(n))
                    .map(|i| (s.psi[0][i].norm_sqr() + s.psi[1][i].norm_sqr()) * self.weight[i] * f(i))
                    .sum::<f64>()
            })
            .collect();
        partial.iter().sum::<f64>() * self.grid.cell_volume()
    }
}

/// `Σ_α M_α(x) ∂^α` with `M_α` a 2×2 matrix field (row-major entries).
#[derive(Clone, Debug)]
pub struct CompiledOperator {
    groups: Vec<(MultiIndex, [Vec<Complex64>; 4])>,
    /// Fourier multiplier of each group's `∂^α` (empty for `α = 0`)
    symbols: Vec<Vec<Complex64>>,
    /// terms dropped because they differentiate along an absent axis
    pub dropped_terms: usize,
}

impl CompiledOperator {
    pub fn compile(e: &OperatorExpr, ctx: &NumericContext) -> Result<CompiledOperator, DynamicsError> {
        let n = ctx.grid.len();
        let mut groups: BTreeMap<MultiIndex, [Vec<Complex64>; 4]> = BTreeMap::new();
        let mut dropped = 0;
        for (mono, c) in e.terms() {
            if mono.coords != [0; 3] {
                return Err(DynamicsError::Unsupported(format!("coordinate factor in `{e}`")));
            }
            if !mono.matrix.is_pauli() {
                return Err(DynamicsError::Unsupported(format!(
                    "4×4-only matrix element {} in a two-component operator",
                    mono.matrix.word().1
                )));
            }
            let order: u32 = mono.derivs.iter().map(|&k| k as u32).sum();
            if order > MAX_DERIV_ORDER {
                return Err(DynamicsError::DerivativeOrder { order });
            }
            if (0..3).any(|p| mono.derivs[p] > 0 && !ctx.grid.is_active(p)) {
                dropped += 1;
                continue;
            }
            let scalar = c.to_complex() * ctx.mass.powi(mono.mpow);
            let p = pauli(mono.matrix.spin());
            let fields: Vec<Arc<Vec<f64>>> = mono.fields.iter().map(|f| ctx.field_values(f)).collect();
            let entry = groups.entry(mono.derivs).or_insert_with(|| std::array::from_fn(|_| vec![Complex64::default(); n]));
            for (k, m) in entry.iter_mut().enumerate() {
                let pk = p[k / 2][k % 2] * scalar;
                if pk == Complex64::default() {
                    continue;
                }
                m.par_iter_mut().enumerate().for_each(|(i, z)| {
                    let f: f64 = fields.iter().map(|v| v[i]).product();
                    *z += pk * f;
                });
            }
        }
        let groups: Vec<_> = groups.into_iter().collect();
        let symbols = groups
            .iter()
            .map(|(a, _)| {
                if *a == [0; 3] {
                    Vec::new()
                } else {
                    (0..n).into_par_iter().map(|i| ctx.grid.derivative_symbol(a, i)).collect()
                }
            })
            .collect();
        Ok(CompiledOperator { groups, symbols, dropped_terms: dropped })
    }

    pub fn derivative_orders(&self) -> impl Iterator<Item = &MultiIndex> {
        self.groups.iter().map(|(a, _)| a)
    }

    /// Largest `‖M_α(x)‖` (entrywise max) of the zero-order group.
    pub fn max_potential(&self) -> f64 {
        self.groups
            .iter()
            .filter(|(a, _)| *a == [0; 3])
            .flat_map(|(_, m)| m.iter().flat_map(|v| v.iter().map(|z| z.norm())))
            .fold(0.0, f64::max)
    }

    /// Spectral-radius estimate `max_x Σ_α ‖M_α(x)‖·k_max^{|α|}`.
    pub fn spectral_bound(&self, grid: &Grid) -> f64 {
        let km = grid.k_max();
        let mut worst: f64 = 0.0;
        for i in 0..grid.len() {
            let mut s = 0.0;
            for (a, m) in &self.groups {
                let order: u32 = a.iter().map(|&k| k as u32).sum();
                let mag = m.iter().map(|v| v[i].norm()).fold(0.0, f64::max);
                s += 2.0 * mag * km.powi(order as i32);
            }
            worst = worst.max(s);
        }
        worst
    }

    pub fn apply(&self, ctx: &NumericContext, psi: &Spinor) -> Spinor {
        let n = ctx.grid.len();
        let mut hat = psi.clone();
        let needs_fft = self.groups.iter().any(|(a, _)| *a != [0; 3]);
        if needs_fft {
            hat.iter_mut().for_each(|c| ctx.grid.forward(c));
        }
        let mut out: Spinor = [vec![Complex64::default(); n], vec![Complex64::default(); n]];
        for ((alpha, m), sym) in self.groups.iter().zip(&self.symbols) {
            let d: std::borrow::Cow<Spinor> = if *alpha == [0; 3] {
                std::borrow::Cow::Borrowed(psi)
            } else {
                let mut d = hat.clone();
                for c in d.iter_mut() {
                    c.par_iter_mut().zip(sym.par_iter()).for_each(|(z, s)| *z *= s);
                    ctx.grid.inverse(c);
                }
                std::borrow::Cow::Owned(d)
            };
            let (o0, o1) = out.split_at_mut(1);
            o0[0].par_iter_mut().zip(o1[0].par_iter_mut()).enumerate().for_each(|(i, (u, v))| {
                *u += m[0][i] * d[0][i] + m[1][i] * d[1][i];
                *v += m[2][i] * d[0][i] + m[3][i] * d[1][i];
            });
        }
        out
    }

    /// Plain (unweighted) matrix adjoint `A†ψ = Σ_α (∂^α)†(M_α†ψ)`.
    pub fn apply_adjoint(&self, ctx: &NumericContext, psi: &Spinor) -> Spinor {
        let n = ctx.grid.len();
        let zero = || [vec![Complex64::default(); n], vec![Complex64::default(); n]];
        let mut direct: Spinor = zero();
        let mut acc: Spinor = zero();
        let mut any_hat = false;
        for ((alpha, m), sym) in self.groups.iter().zip(&self.symbols) {
            let mut u: Spinor = zero();
            let (u0, u1) = u.split_at_mut(1);
            u0[0].par_iter_mut().zip(u1[0].par_iter_mut()).enumerate().for_each(|(i, (a, b))| {
                *a = m[0][i].conj() * psi[0][i] + m[2][i].conj() * psi[1][i];
                *b = m[1][i].conj() * psi[0][i] + m[3][i].conj() * psi[1][i];
            });
            if *alpha == [0; 3] {
                for c in 0..2 {
                    direct[c].iter_mut().zip(&u[c]).for_each(|(d, v)| *d += v);
                }
            } else {
                any_hat = true;
                for c in 0..2 {
                    ctx.grid.forward(&mut u[c]);
                    acc[c].par_iter_mut().zip(u[c].par_iter()).zip(sym.par_iter()).for_each(|((a, v), s)| {
                        *a += s.conj() * v;
                    });
                }
            }
        }
        if any_hat {
            for c in 0..2 {
                ctx.grid.inverse(&mut acc[c]);
                direct[c].iter_mut().zip(&acc[c]).for_each(|(d, v)| *d += v);
            }
        }
        direct
    }

    /// `½(A + W⁻¹A†W)`: the part of `A` that is self-adjoint under the
    /// weighted inner product. Differs from `A` only at second order in the
    /// fields when `A` is symbolically self-adjoint.
    pub fn apply_symmetrized(&self, ctx: &NumericContext, psi: &Spinor) -> Spinor {
        let mut a = self.apply(ctx, psi);
        let wpsi: Spinor = std::array::from_fn(|c| psi[c].iter().zip(&ctx.weight).map(|(z, w)| z * w).collect());
        let b = self.apply_adjoint(ctx, &wpsi);
        for c in 0..2 {
            a[c].par_iter_mut().zip(b[c].par_iter()).zip(ctx.weight.par_iter()).for_each(|((x, y), w)| {
                *x = 0.5 * (*x + y / w);
            });
        }
        a
    }

    /// `⟨s| A s⟩` under the weighted inner product.
    pub fn expectation(&self, ctx: &NumericContext, s: &SpinorGridState) -> Complex64 {
        ctx.inner(&s.psi, &self.apply(ctx, &s.psi))
    }
}
