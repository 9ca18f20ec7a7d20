use std::sync::LazyLock;

use tempo_core::fw::fixtures::Fixture;
use tempo_core::fw::*;
use tempo_core::opcore::*;

static FULL: LazyLock<Pipeline> =
    LazyLock::new(|| Pipeline::run(Truncation::default(), &RuleSet::all(), 4).expect("pipeline"));

fn t() -> Truncation {
    Truncation::default()
}

fn self_adjoint_residue(e: &OperatorExpr, m: Measure) -> OperatorExpr {
    apply_rewrites(&(&e.adjoint(m) - e), &RuleSet::all())
}

/// Isotropic potential only: h_ij = 2φδ_ij, g = 0, so h = −4φ.
fn phi_only(f: &FieldSymbol) -> OperatorExpr {
    let phi = |c: i128| OperatorExpr::field(FieldSymbol::with_deriv(FieldBase::Phi, f.deriv), t()).scale(&Coeff::int(c));
    match f.base {
        FieldBase::Phi => phi(1),
        FieldBase::H(i, j) if i == j => phi(2),
        FieldBase::Trace => phi(-4),
        _ => OperatorExpr::zero(t()),
    }
}

fn g_only(f: &FieldSymbol) -> OperatorExpr {
    match f.base {
        FieldBase::G(_) => OperatorExpr::field(f.clone(), t()),
        _ => OperatorExpr::zero(t()),
    }
}

fn reduced(e: &OperatorExpr) -> OperatorExpr {
    apply_rewrites(e, &RuleSet::all())
}

#[test]
fn full_pipeline_verifies() {
    let (report, _) = verify_central_identity(&VerifyOptions::default()).unwrap();
    for c in &report.checks {
        assert!(c.passed(), "{}: {}", c.name, c.difference);
    }
    assert!(report.passed);
    assert_eq!(report.fw_converged_at, Some(2));
    assert_eq!(report.checks.len(), Fixture::all().len() + 2);
}

#[test]
fn rewrites_disabled_leave_laplacian_residue() {
    let opts = VerifyOptions { rules: RuleSet::none(), ..Default::default() };
    let (report, _) = verify_central_identity(&opts).unwrap();
    let central = report.checks.iter().find(|c| c.name == "central-identity").unwrap();
    assert!(!central.passed());
    // the residue is removed by the Laplacian rule alone
    let p = &FULL;
    let diff = &p.quadratic_form - &p.tempo.multiply(&p.tempo);
    let lap_only = RuleSet { laplacian: true, ..RuleSet::none() };
    let has_laplacian = diff.terms().any(|(m, _)| {
        m.fields.iter().any(|f| f.deriv.iter().any(|&d| d >= 2))
    });
    assert!(has_laplacian, "{diff}");
    assert!(apply_rewrites(&diff, &RuleSet::all()).is_zero());
    assert!(apply_rewrites(&diff, &lap_only).len() < diff.len());
}

#[test]
fn flat_pipeline_is_trivially_consistent() {
    let flat = |e: &OperatorExpr| e.filter(|m, _| m.fields.is_empty());
    let p = &FULL;
    assert!(flat(&(&p.quadratic_form - &p.tempo_squared)).is_zero());
    assert_eq!(flat(&p.tempo_squared), flat(&parse_operator("1 - 1/m^2*p^2").unwrap()));
}

#[test]
fn hamiltonian_matches_fixture() {
    let c = compare_with_fixture(&FULL.hamiltonian, Fixture::Hamiltonian, &RuleSet::none()).unwrap();
    assert!(c.passed(), "{}", c.difference);
}

#[test]
fn momentum_commutator() {
    let c = momentum(0, t()).commutator(&momentum(1, t()));
    let fx = Fixture::MomentumCommutator.parse(t()).unwrap();
    assert!((&c - &fx).is_zero(), "{}", &c - &fx);
}

#[test]
fn adjoint_properties_under_each_measure() {
    for j in 0..3 {
        assert!(self_adjoint_residue(&momentum(j, t()), Measure::SqrtG).is_zero());
        assert!(!self_adjoint_residue(&momentum(j, t()), Measure::Flat).is_zero());
    }
    let p = &FULL;
    for e in [&p.hamiltonian, &p.h_fw, &p.tempo, &p.tempo_squared] {
        assert!(self_adjoint_residue(e, Measure::SqrtSpatialG).is_zero());
        assert!(!self_adjoint_residue(e, Measure::SqrtG).is_zero());
        assert!(!self_adjoint_residue(e, Measure::Flat).is_zero());
    }
}

#[test]
fn odd_parts_graded_during_reduction() {
    let h = &FULL.hamiltonian;
    let beta = OperatorExpr::matrix(Gamma::BETA, t());
    let mut cur = h.clone();
    for s in &FULL.fw.generators {
        let (even, odd) = (cur.even_part(), cur.odd_part());
        assert_eq!(beta.multiply(&even).multiply(&beta), even);
        assert_eq!(beta.multiply(&odd).multiply(&beta), odd.scale(&Coeff::int(-1)));
        cur = OperatorExpr::exp_conjugate(s, &cur).unwrap();
    }
    assert!(FULL.fw.residual_odd.terms().all(|(m, _)| m.mpow <= -2));
    assert_eq!(
        beta.multiply(&FULL.fw.residual_odd),
        FULL.fw.residual_odd.multiply(&beta).scale(&Coeff::int(-1))
    );
}

#[test]
fn more_iterations_change_nothing() {
    let two = fw_reduce(&FULL.hamiltonian, 2).unwrap();
    assert_eq!(two.even_hamiltonian, FULL.fw.even_hamiltonian);
    let six = fw_reduce(&FULL.hamiltonian, 6).unwrap();
    assert_eq!(six.even_hamiltonian, FULL.fw.even_hamiltonian);
    assert_eq!(six.iterations, FULL.fw.iterations);
}

#[test]
fn transformed_lapse_flat_limit() {
    let flat = |e: &OperatorExpr| e.filter(|m, _| m.fields.is_empty());
    assert_eq!(
        flat(&FULL.transformed_beta.even_part()),
        flat(&parse_operator("beta - 1/(2*m^2)*beta*p^2").unwrap())
    );
}

#[test]
fn tempo_squared_keeps_imaginary_term() {
    let term = parse_operator("i/m^2*sum(j: D(j,phi)*p[j])").unwrap();
    let without = &Fixture::TempoSquared.parse(t()).unwrap() - &term;
    assert!(!reduced(&(&FULL.tempo_squared - &without)).is_zero());
    assert_eq!(reduced(&(&FULL.tempo_squared - &without)), reduced(&term));
}

#[test]
fn point_mass_spin_terms_survive() {
    let tempo = reduced(&FULL.tempo.substitute_fields(phi_only));
    let oracle = parse_operator(
        "1 + phi - 1/(2*m^2)*(1+phi)*p^2 + 3/(4*m^2)*sum(i,j,k: eps(i,j,k)*D(j,phi)*sigma[k]*p[i])",
    )
    .unwrap();
    let oracle = reduced(&oracle.substitute_fields(phi_only));
    assert_eq!(tempo, oracle);
    assert!(tempo.terms().any(|(m, _)| m.matrix.is_pauli() && m.matrix != Gamma::ONE));
}

#[test]
fn phi_only_quadratic_form_matches_tempo_squared() {
    let q = reduced(&FULL.quadratic_form.substitute_fields(phi_only));
    let t2 = reduced(&FULL.tempo_squared.substitute_fields(phi_only));
    assert_eq!(q, t2);
    assert!(q.terms().all(|(m, _)| m.fields.iter().all(|f| f.base == FieldBase::Phi)));
}

#[test]
fn g_only_velocity_leads_with_minus_g() {
    for i in 0..3 {
        let v = FULL.velocities[i].substitute_fields(g_only);
        let lead = v.filter(|m, _| m.mpow == 0);
        assert_eq!(lead, OperatorExpr::base_field(FieldBase::g(i), t()).scale(&Coeff::int(-1)));
    }
}

#[test]
fn fixtures_are_independent() {
    let parsed: Vec<_> = Fixture::all().into_iter().map(|f| (f, f.parse(t()).unwrap())).collect();
    for (i, (fa, a)) in parsed.iter().enumerate() {
        assert!(!a.is_zero(), "{}", fa.name());
        for (fb, b) in &parsed[i + 1..] {
            assert_ne!(reduced(a), reduced(b), "{} vs {}", fa.name(), fb.name());
        }
    }
}

#[test]
fn report_serializes() {
    let opts = VerifyOptions { fixtures: Some(vec![Fixture::Tempo]), ..Default::default() };
    let (report, _) = verify_central_identity(&opts).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"exact-zero\""));
    assert_eq!(report.checks.len(), 1);
}
