//! Foldy–Wouthuysen reduction of the weak-field Dirac Hamiltonian and the
//! proper-time identities built on it.
//!
//! The pipeline: assemble `H = mβ + 𝒪 + ℰ`, remove odd operators with
//! generators `S = −iβ𝒪/(2m)` until the odd part lies beyond the working
//! order, conjugate `(1+φ)β` with the same generators to get the tempo
//! operator, compute the velocity operators `i[H_FW, xⁱ]`, and check that the
//! quadratic form `ẋᵘ g_{μν} ẋᵛ` equals `𝒯²` once the field equations and
//! gauge conditions are imposed.

pub mod fixtures;
pub mod lorentz;

use serde::Serialize;
use thiserror::Error;

use crate::opcore::{
    apply_rewrites, momentum, Coeff, FieldBase, FieldSymbol, Gamma, OpError, OperatorExpr, RuleSet,
    Truncation,
};
use fixtures::Fixture;

pub use lorentz::{beta_invariance_space, InvarianceSpace, LorentzElement};

#[derive(Debug, Clone, Error)]
pub enum FwError {
    #[error("odd part did not shrink at iteration {iteration}: {terms}")]
    GradingViolation { iteration: usize, terms: String },
    #[error("odd part of the input does not anticommute with beta")]
    NotGraded,
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("fixture `{name}` failed to parse: {source}")]
    Fixture { name: String, source: crate::opcore::ParseError },
    #[error("stage `{stage}` does not match its fixture; difference: {difference}")]
    Mismatch { stage: String, difference: String },
}

/// Output of [`fw_reduce`].
#[derive(Clone, Debug)]
pub struct FwResult {
    /// Even part of `UHU†` (4×4 form).
    pub even_hamiltonian: OperatorExpr,
    /// Generators `S₁, S₂, …` of the transformations `e^{iS}`, in order.
    pub generators: Vec<OperatorExpr>,
    /// Odd terms left at the end; all at `m^{min_mpow}`.
    pub residual_odd: OperatorExpr,
    pub iterations: usize,
    /// First iteration count after which no odd term above the bottom of
    /// the window remains.
    pub converged_at: Option<usize>,
    pub truncation: Truncation,
}

impl FwResult {
    /// Two-component Hamiltonian: upper-left block of the even part.
    pub fn two_component(&self) -> OperatorExpr {
        self.even_hamiltonian.upper_block()
    }
}

fn field(b: FieldBase, t: Truncation) -> OperatorExpr {
    OperatorExpr::base_field(b, t)
}

fn dfield(b: FieldBase, axis: usize, t: Truncation) -> OperatorExpr {
    let mut d = [0; 3];
    d[axis] = 1;
    OperatorExpr::field(FieldSymbol::with_deriv(b, d), t)
}

/// `H = mβ + (1+φ)α·p + mβφ − ¼(∇×g)·Σ − g·p`.
pub fn build_hamiltonian(t: Truncation) -> OperatorExpr {
    let beta = OperatorExpr::matrix(Gamma::BETA, t);
    let m = OperatorExpr::mass(1, t);
    let one_phi = &OperatorExpr::one(t) + &field(FieldBase::Phi, t);

    let mut alpha_p = OperatorExpr::zero(t);
    let mut g_p = OperatorExpr::zero(t);
    for j in 0..3 {
        let pj = momentum(j, t);
        alpha_p = &alpha_p + &OperatorExpr::matrix(Gamma::alpha(j), t).multiply(&pj);
        g_p = &g_p + &field(FieldBase::g(j), t).multiply(&pj);
    }
    let odd = one_phi.multiply(&alpha_p);

    // (∇×g)_k = ∂_i g_j − ∂_j g_i for cyclic (i, j, k)
    let mut curl = OperatorExpr::zero(t);
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let c = &dfield(FieldBase::g(j), i, t) - &dfield(FieldBase::g(i), j, t);
        curl = &curl + &c.multiply(&OperatorExpr::matrix(Gamma::sigma(k), t));
    }
    let mut even = m.multiply(&beta).multiply(&field(FieldBase::Phi, t));
    even = &even - &curl.scale(&Coeff::ratio(1, 4));
    even = &even - &g_p;

    &(&m.multiply(&beta) + &odd) + &even
}

/// Leading grade of the odd terms that still produce a generator inside the
/// window: `h-degree − mpow`, minimized.
fn odd_grade(odd: &OperatorExpr, t: Truncation) -> Option<i32> {
    odd.terms()
        .filter(|(m, _)| m.mpow > t.min_mpow)
        .map(|(m, _)| m.hdeg() as i32 - m.mpow)
        .min()
}

/// `S = −iβ𝒪/(2m)`.
pub fn fw_generator(odd: &OperatorExpr) -> OperatorExpr {
    let t = odd.truncation();
    OperatorExpr::matrix(Gamma::BETA, t)
        .multiply(odd)
        .multiply(&OperatorExpr::mass(-1, t))
        .scale(&Coeff::new(0.into(), crate::opcore::Rational::new(-1, 2)))
}

/// Iterated Foldy–Wouthuysen transformation.
pub fn fw_reduce(h: &OperatorExpr, max_iters: usize) -> Result<FwResult, FwError> {
    let t = h.truncation();
    let beta = OperatorExpr::matrix(Gamma::BETA, t);
    let odd = h.odd_part();
    if !(&beta.multiply(&odd) + &odd.multiply(&beta)).is_zero() {
        return Err(FwError::NotGraded);
    }
    let mut current = h.clone();
    let mut generators = Vec::new();
    let mut converged_at = None;
    let mut grade = odd_grade(&odd, t);
    if grade.is_none() {
        converged_at = Some(0);
    }
    for it in 0..max_iters {
        let odd = current.odd_part();
        let s = fw_generator(&odd);
        if s.is_zero() {
            break;
        }
        current = OperatorExpr::exp_conjugate(&s, &current)?;
        generators.push(s);
        let next = odd_grade(&current.odd_part(), t);
        match (grade, next) {
            (_, None) => {
                converged_at.get_or_insert(it + 1);
            }
            (Some(g0), Some(g1)) if g1 <= g0 => {
                let offending = current.odd_part().filter(|m, _| {
                    m.mpow > t.min_mpow && m.hdeg() as i32 - m.mpow == g1
                });
                return Err(FwError::GradingViolation { iteration: it + 1, terms: offending.to_string() });
            }
            _ => {}
        }
        grade = next;
    }
    Ok(FwResult {
        even_hamiltonian: current.even_part(),
        residual_odd: current.odd_part(),
        iterations: generators.len(),
        generators,
        converged_at,
        truncation: t,
    })
}

/// `U A U†` with `U = ⋯ e^{iS₂} e^{iS₁}`.
pub fn transform_observable(fw: &FwResult, a: &OperatorExpr) -> Result<OperatorExpr, FwError> {
    let mut x = a.clone();
    for s in &fw.generators {
        x = OperatorExpr::exp_conjugate(s, &x)?;
    }
    Ok(x)
}

/// `(1 + φ)β`
pub fn lapse_beta(t: Truncation) -> OperatorExpr {
    (&OperatorExpr::one(t) + &field(FieldBase::Phi, t)).multiply(&OperatorExpr::matrix(Gamma::BETA, t))
}

/// Tempo operator: two-component restriction of the even part of
/// `U(1+φ)βU†`.
pub fn tempo_operator(fw: &FwResult) -> Result<OperatorExpr, FwError> {
    let t = fw.truncation;
    Ok(transform_observable(fw, &lapse_beta(t))?.even_part().upper_block())
}

pub fn tempo_squared(tempo: &OperatorExpr, rules: &RuleSet) -> OperatorExpr {
    apply_rewrites(&tempo.multiply(tempo), rules)
}

/// `ẋⁱ = i[H_FW, xⁱ]` (zero-based axis).
pub fn velocity_operator(h_fw: &OperatorExpr, axis: usize) -> OperatorExpr {
    h_fw.commutator_with_coordinate(axis).scale(&Coeff::i())
}

/// `1 + 2φ − Σⱼ(gⱼẋʲ + ẋʲgⱼ) − Σᵢẋⁱẋⁱ + Σᵢⱼ ẋⁱhᵢⱼẋʲ` with `ẋ⁰ = 1`.
pub fn quadratic_form(velocities: &[OperatorExpr; 3], rules: &RuleSet) -> OperatorExpr {
    let t = velocities[0].truncation();
    let mut q = &OperatorExpr::one(t) + &field(FieldBase::Phi, t).scale(&Coeff::int(2));
    for j in 0..3 {
        let g = field(FieldBase::g(j), t);
        q = &q - &(&g.multiply(&velocities[j]) + &velocities[j].multiply(&g));
        q = &q - &velocities[j].multiply(&velocities[j]);
        for k in 0..3 {
            let hjk = field(FieldBase::h(j, k), t);
            q = &q + &velocities[j].multiply(&hjk).multiply(&velocities[k]);
        }
    }
    apply_rewrites(&q, rules)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    ExactZero,
    Mismatch,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub status: CheckStatus,
    /// Number of terms in the canonical difference.
    pub residual_terms: usize,
    /// Pretty-printed difference, empty when it vanishes.
    pub difference: String,
}

impl IdentityCheck {
    fn new(name: impl Into<String>, diff: &OperatorExpr) -> Self {
        IdentityCheck {
            name: name.into(),
            status: if diff.is_zero() { CheckStatus::ExactZero } else { CheckStatus::Mismatch },
            residual_terms: diff.len(),
            difference: if diff.is_zero() { String::new() } else { diff.to_string() },
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::ExactZero
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub truncation: Truncation,
    pub rules: RuleSet,
    pub fw_iterations: usize,
    /// Restrict the fixture comparisons; `None` runs all of them.
    pub fixtures: Option<Vec<Fixture>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { truncation: Truncation::default(), rules: RuleSet::all(), fw_iterations: 4, fixtures: None }
    }
}

/// Every stage of the pipeline, kept for export and numeric use.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub hamiltonian: OperatorExpr,
    pub fw: FwResult,
    pub h_fw: OperatorExpr,
    pub transformed_beta: OperatorExpr,
    pub tempo: OperatorExpr,
    pub tempo_squared: OperatorExpr,
    pub velocities: [OperatorExpr; 3],
    pub quadratic_form: OperatorExpr,
}

impl Pipeline {
    pub fn run(t: Truncation, rules: &RuleSet, fw_iterations: usize) -> Result<Pipeline, FwError> {
        let hamiltonian = build_hamiltonian(t);
        let fw = fw_reduce(&hamiltonian, fw_iterations)?;
        let h_fw = fw.two_component();
        let transformed_beta = transform_observable(&fw, &lapse_beta(t))?;
        let tempo = transformed_beta.even_part().upper_block();
        let tempo_squared = tempo_squared(&tempo, rules);
        let velocities = [0, 1, 2].map(|i| velocity_operator(&h_fw, i));
        let quadratic_form = quadratic_form(&velocities, rules);
        Ok(Pipeline { hamiltonian, fw, h_fw, transformed_beta, tempo, tempo_squared, velocities, quadratic_form })
    }

    fn stage(&self, f: Fixture) -> OperatorExpr {
        match f {
            Fixture::Hamiltonian => self.hamiltonian.clone(),
            Fixture::TransformedHamiltonian => self.fw.even_hamiltonian.clone(),
            Fixture::HamiltonianFw => self.h_fw.clone(),
            Fixture::TransformedBeta => self.transformed_beta.even_part(),
            Fixture::Tempo => self.tempo.clone(),
            Fixture::TempoSquared => self.tempo_squared.clone(),
            Fixture::Velocity(i) => self.velocities[i].clone(),
            Fixture::MomentumCommutator => momentum(0, self.hamiltonian.truncation())
                .commutator(&momentum(1, self.hamiltonian.truncation())),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<IdentityCheck>,
    pub fw_iterations: usize,
    pub fw_converged_at: Option<usize>,
    pub rules: Vec<&'static str>,
    pub passed: bool,
}

/// Compares a computed stage against its fixture modulo the rules.
pub fn compare_with_fixture(computed: &OperatorExpr, f: Fixture, rules: &RuleSet) -> Result<IdentityCheck, FwError> {
    let fx = f
        .parse(computed.truncation())
        .map_err(|source| FwError::Fixture { name: f.name(), source })?;
    let diff = apply_rewrites(&(computed - &fx), rules);
    Ok(IdentityCheck::new(format!("fixture:{}", f.name()), &diff))
}

/// Runs the whole pipeline and checks every stage and the central identity
/// `ẋᵘ g_{μν} ẋᵛ = 𝒯²`.
pub fn verify_central_identity(opts: &VerifyOptions) -> Result<(VerificationReport, Pipeline), FwError> {
    let p = Pipeline::run(opts.truncation, &opts.rules, opts.fw_iterations)?;
    let selected = opts.fixtures.clone().unwrap_or_else(Fixture::all);
    let mut checks = Vec::new();
    for f in selected {
        checks.push(compare_with_fixture(&p.stage(f), f, &opts.rules)?);
    }
    if opts.fixtures.is_none() {
        let beta = OperatorExpr::matrix(Gamma::BETA, opts.truncation);
        let commutes = apply_rewrites(&beta.commutator(&p.fw.even_hamiltonian), &opts.rules);
        checks.push(IdentityCheck::new("even-hamiltonian-commutes-with-beta", &commutes));
        let central = apply_rewrites(&(&p.quadratic_form - &p.tempo_squared), &opts.rules);
        checks.push(IdentityCheck::new("central-identity", &central));
    }
    let passed = checks.iter().all(IdentityCheck::passed);
    let report = VerificationReport {
        checks,
        fw_iterations: p.fw.iterations,
        fw_converged_at: p.fw.converged_at,
        rules: opts.rules.names(),
        passed,
    };
    Ok((report, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::parse_operator;

    #[test]
    fn flat_hamiltonian() {
        let t = Truncation::default();
        let h = build_hamiltonian(t).filter(|m, _| m.fields.is_empty());
        assert_eq!(h, parse_operator("m*beta + sum(j: alpha[j]*(-i)*d[j])").unwrap());
    }

    #[test]
    fn mass_times_phi_term_present() {
        let h = build_hamiltonian(Truncation::default());
        let hit = h
            .terms()
            .find(|(m, _)| m.mpow == 1 && m.hdeg() == 1 && m.matrix == Gamma::BETA)
            .expect("m beta phi term");
        assert_eq!(hit.0.fields[0], FieldSymbol::new(FieldBase::Phi));
        assert_eq!(*hit.1, Coeff::one());
    }

    #[test]
    fn zero_iterations_leave_hamiltonian_untouched() {
        let h = build_hamiltonian(Truncation::default());
        let r = fw_reduce(&h, 0).unwrap();
        assert!(r.generators.is_empty());
        assert_eq!(r.even_hamiltonian, h.even_part());
        assert_eq!(r.residual_odd, h.odd_part());
    }

    #[test]
    fn flat_space_reduction() {
        let h = parse_operator("m*beta + sum(j: alpha[j]*p[j])").unwrap();
        let flat = |e: &OperatorExpr| e.filter(|m, _| m.fields.is_empty());
        let r = fw_reduce(&flat(&h), 4).unwrap();
        let expected = flat(&parse_operator("m*beta + 1/(2*m)*beta*p^2").unwrap());
        assert_eq!(r.even_hamiltonian, expected);
        assert_eq!(r.two_component(), flat(&parse_operator("m + 1/(2*m)*p^2").unwrap()));
        let tempo = flat(&tempo_operator(&r).unwrap());
        assert_eq!(tempo, flat(&parse_operator("1 - 1/(2*m^2)*p^2").unwrap()));
        assert_eq!(tempo_squared(&tempo, &RuleSet::all()), flat(&parse_operator("1 - 1/m^2*p^2").unwrap()));
        let v = velocity_operator(&r.two_component(), 0);
        assert_eq!(v, flat(&parse_operator("1/m*p1").unwrap()));
    }

    #[test]
    fn scalars_survive_conjugation() {
        let t = Truncation::default();
        let h = build_hamiltonian(t);
        let r = fw_reduce(&h, 4).unwrap();
        let one = OperatorExpr::one(t);
        assert_eq!(transform_observable(&r, &one).unwrap(), one);
    }

    #[test]
    fn generator_mpow_is_checked() {
        let t = Truncation::default();
        let s = OperatorExpr::matrix(Gamma::BETA, t);
        assert!(matches!(
            OperatorExpr::exp_conjugate(&s, &s),
            Err(OpError::GeneratorNotSmall { mpow: 0 })
        ));
    }
}
