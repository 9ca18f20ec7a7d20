//! Static weak-field metrics `g_{μν} = η_{μν} + h_{μν}` with closed-form
//! components, their field-equation and gauge checks, and the frame data
//! (vierbein, Christoffel symbols, spin connection) entering the curved-space
//! Dirac equation.

pub mod config;
pub mod frame;
pub mod scalar;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::opcore::{FieldBase, FieldSymbol};
pub use config::{FieldFile, FieldParams};
pub use frame::{assemble_dirac_hamiltonian, frame_at, printed_hamiltonian, DiracCoefficientTable, FrameData};
pub use scalar::{Point, PolyParseError, ScalarField};

/// Default weak-field cap on `max |h_{μν}|`.
pub const DEFAULT_CAP: f64 = 0.05;
/// Relative tolerance separating exact zeros from roundoff in residuals.
pub const RESIDUAL_TOL: f64 = 1e-12;
/// Highest polynomial degree accepted for harmonic-polynomial components.
pub const MAX_POLY_DEGREE: u32 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("component {component} is not harmonic: max |Δ| coefficient {residual:e}")]
    NotHarmonic { component: String, residual: f64 },
    #[error("gauge condition `{condition}` violated: residual {residual:e}")]
    GaugeViolation { condition: String, residual: f64 },
    #[error("component {component} has degree {degree}; at most {MAX_POLY_DEGREE} is supported")]
    DegreeTooHigh { component: String, degree: u32 },
    #[error("weak-field cap exceeded: max |h| = {max:e} > {cap:e} at {at:?}")]
    WeakFieldCapExceeded { max: f64, cap: f64, at: Point },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("family `{0}` is singular at its center and needs r_min > 0")]
    MissingExclusionRadius(&'static str),
    #[error("point {point:?} is not admissible: {reason}")]
    Inadmissible { point: Point, reason: String },
    #[error("field file: {0}")]
    Config(String),
    #[error(transparent)]
    Poly(#[from] PolyParseError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    HarmonicPolynomial,
    PointMass,
    GravitomagneticDipole,
    Superposition,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::HarmonicPolynomial => "harmonic-polynomial",
            Family::PointMass => "point-mass",
            Family::GravitomagneticDipole => "gravitomagnetic-dipole",
            Family::Superposition => "superposition",
        }
    }
}

/// Axis-aligned working box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub lo: Point,
    pub hi: Point,
}

impl Domain {
    pub fn cube(half: f64) -> Self {
        Domain { lo: [-half; 3], hi: [half; 3] }
    }

    pub fn contains(&self, x: &Point) -> bool {
        (0..3).all(|k| {
            let slack = 1e-9 * (self.hi[k] - self.lo[k]).abs().max(1.0);
            x[k] >= self.lo[k] - slack && x[k] <= self.hi[k] + slack
        })
    }

    fn validate(&self) -> Result<(), GeometryError> {
        if (0..3).all(|k| self.lo[k] <= self.hi[k] && self.lo[k].is_finite() && self.hi[k].is_finite()) {
            Ok(())
        } else {
            Err(GeometryError::InvalidParameter(format!("domain lo {:?} must not exceed hi {:?}", self.lo, self.hi)))
        }
    }
}

pub type Components = [[ScalarField; 4]; 4];

fn zero_components() -> Components {
    std::array::from_fn(|_| std::array::from_fn(|_| ScalarField::zero()))
}

/// A static metric perturbation. Immutable after construction.
#[derive(Clone, Debug)]
pub struct MetricModel {
    family: Family,
    h: Components,
    r_min: f64,
    domain: Domain,
    cap: f64,
}

/// Parameters of [`make_field`].
#[derive(Clone, Debug)]
pub enum FamilyParams {
    /// `h₀₀ = 2φ`, `h₀ⱼ = −gⱼ`, `hᵢⱼ` given or `2φδᵢⱼ` by default.
    HarmonicPolynomial { phi: ScalarField, g: Option<[ScalarField; 3]>, h: Option<Box<[[ScalarField; 3]; 3]>> },
    /// `φ = −μ/|x − c|`, `hᵢⱼ = 2φδᵢⱼ`, `g = 0`.
    PointMass { mass: f64, center: Point },
    /// `g = κ S × (x − c) / |x − c|³`, all other components zero.
    GravitomagneticDipole { spin: Point, kappa: f64, center: Point },
    Superposition(Vec<FamilyParams>),
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::HarmonicPolynomial { .. } => Family::HarmonicPolynomial,
            FamilyParams::PointMass { .. } => Family::PointMass,
            FamilyParams::GravitomagneticDipole { .. } => Family::GravitomagneticDipole,
            FamilyParams::Superposition(_) => Family::Superposition,
        }
    }

    fn components(&self, r_min: f64) -> Result<Components, GeometryError> {
        self.build(r_min, true)
    }

    /// Raw components without the harmonic and gauge checks, for diagnosing a
    /// field that `make_field` rejects. Structural errors are still reported.
    pub fn raw_components(&self, r_min: f64) -> Result<Components, GeometryError> {
        self.build(r_min, false)
    }

    fn build(&self, r_min: f64, checked: bool) -> Result<Components, GeometryError> {
        let mut h = zero_components();
        match self {
            FamilyParams::HarmonicPolynomial { phi, g, h: spatial } => {
                let zero = || std::array::from_fn(|_| ScalarField::zero());
                let g = g.clone().unwrap_or_else(zero);
                check_polynomial("phi", phi, checked)?;
                for (j, gj) in g.iter().enumerate() {
                    check_polynomial(&format!("g{}", j + 1), gj, checked)?;
                }
                h[0][0] = phi.scale(2.0);
                for j in 0..3 {
                    h[0][j + 1] = g[j].scale(-1.0);
                    h[j + 1][0] = g[j].scale(-1.0);
                }
                match spatial {
                    Some(s) => {
                        for i in 0..3 {
                            for j in 0..3 {
                                if s[i][j] != s[j][i] {
                                    return Err(GeometryError::InvalidParameter(format!(
                                        "h{}{} and h{}{} differ",
                                        i + 1,
                                        j + 1,
                                        j + 1,
                                        i + 1
                                    )));
                                }
                                check_polynomial(&format!("h{}{}", i + 1, j + 1), &s[i][j], checked)?;
                                h[i + 1][j + 1] = s[i][j].clone();
                            }
                        }
                    }
                    None => {
                        for i in 1..4 {
                            h[i][i] = phi.scale(2.0);
                        }
                    }
                }
                if checked {
                    check_polynomial_gauge(&h)?;
                }
            }
            FamilyParams::PointMass { mass, center } => {
                if !(*mass > 0.0 && mass.is_finite()) {
                    return Err(GeometryError::InvalidParameter(format!("point-mass mass must be > 0, got {mass}")));
                }
                if r_min <= 0.0 {
                    return Err(GeometryError::MissingExclusionRadius("point-mass"));
                }
                let phi = ScalarField::inverse_r(-mass, *center);
                for i in 0..4 {
                    h[i][i] = phi.scale(2.0);
                }
            }
            FamilyParams::GravitomagneticDipole { spin, kappa, center } => {
                if !kappa.is_finite() || spin.iter().any(|s| !s.is_finite()) {
                    return Err(GeometryError::InvalidParameter("dipole spin and kappa must be finite".into()));
                }
                if r_min <= 0.0 {
                    return Err(GeometryError::MissingExclusionRadius("gravitomagnetic-dipole"));
                }
                for i in 0..3 {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    // gᵢ = κ (Sⱼ dₖ − Sₖ dⱼ) / r³
                    let mut ek = [0; 3];
                    ek[k] = 1;
                    let mut ej = [0; 3];
                    ej[j] = 1;
                    let gi = ScalarField::radial(kappa * spin[j], *center, ek, 1)
                        .add(&ScalarField::radial(-kappa * spin[k], *center, ej, 1));
                    h[0][i + 1] = gi.scale(-1.0);
                    h[i + 1][0] = gi.scale(-1.0);
                }
            }
            FamilyParams::Superposition(parts) => {
                if parts.is_empty() {
                    return Err(GeometryError::InvalidParameter("superposition needs at least one component".into()));
                }
                for p in parts {
                    let c = p.build(r_min, checked)?;
                    for mu in 0..4 {
                        for nu in 0..4 {
                            h[mu][nu] = h[mu][nu].add(&c[mu][nu]);
                        }
                    }
                }
            }
        }
        Ok(h)
    }
}

fn coefficient_scale(f: &ScalarField) -> f64 {
    // value-independent scale: evaluate at a unit point
    f.eval_with_scale(&[1.0, 1.0, 1.0]).1.max(f64::MIN_POSITIVE)
}

fn check_polynomial(name: &str, f: &ScalarField, harmonic: bool) -> Result<(), GeometryError> {
    if !f.singular_centers().is_empty() {
        return Err(GeometryError::InvalidParameter(format!("{name} must be a polynomial")));
    }
    if let Some(d) = f.polynomial_degree() {
        if d > MAX_POLY_DEGREE {
            return Err(GeometryError::DegreeTooHigh { component: name.into(), degree: d });
        }
    }
    if !harmonic {
        return Ok(());
    }
    let lap = f.laplacian();
    let residual = lap.eval_with_scale(&[1.0, 1.0, 1.0]).1;
    if residual > RESIDUAL_TOL * coefficient_scale(f) {
        return Err(GeometryError::NotHarmonic { component: name.into(), residual });
    }
    Ok(())
}

fn gauge_fields(h: &Components) -> (ScalarField, [ScalarField; 3]) {
    let div_g = (0..3).fold(ScalarField::zero(), |acc, j| acc.add(&h[0][j + 1].partial(j)));
    let trace = (0..3).fold(h[0][0].clone(), |acc, i| acc.add(&h[i + 1][i + 1].scale(-1.0)));
    let spatial = std::array::from_fn(|i| {
        (0..3).fold(trace.partial(i).scale(0.5), |acc, j| acc.add(&h[i + 1][j + 1].partial(j)))
    });
    (div_g, spatial)
}

fn check_polynomial_gauge(h: &Components) -> Result<(), GeometryError> {
    let scale = h.iter().flatten().map(coefficient_scale).fold(0.0, f64::max);
    let (div_g, spatial) = gauge_fields(h);
    let r = div_g.eval_with_scale(&[1.0, 1.0, 1.0]).1;
    if r > RESIDUAL_TOL * scale {
        return Err(GeometryError::GaugeViolation { condition: "sum_j d_j h_0j = 0".into(), residual: r });
    }
    for (i, s) in spatial.iter().enumerate() {
        let r = s.eval_with_scale(&[1.0, 1.0, 1.0]).1;
        if r > RESIDUAL_TOL * scale {
            return Err(GeometryError::GaugeViolation {
                condition: format!("sum_j d_j h_{}j + d_{} h / 2 = 0", i + 1, i + 1),
                residual: r,
            });
        }
    }
    Ok(())
}

/// Builds and validates a model: family parameters, exclusion radius and the
/// weak-field cap over the domain.
pub fn make_field(params: &FamilyParams, r_min: f64, domain: Domain, cap: f64) -> Result<MetricModel, GeometryError> {
    domain.validate()?;
    if !(r_min >= 0.0 && r_min.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!("r_min must be ≥ 0, got {r_min}")));
    }
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!("weak-field cap must be > 0, got {cap}")));
    }
    let h = params.components(r_min)?;
    let model = MetricModel { family: params.family(), h, r_min, domain, cap };
    let (max, at) = model.max_abs_h_on_domain();
    if max > cap {
        return Err(GeometryError::WeakFieldCapExceeded { max, cap, at });
    }
    Ok(model)
}

impl MetricModel {
    /// Flat space over `domain`.
    pub fn flat(domain: Domain) -> Self {
        MetricModel { family: Family::HarmonicPolynomial, h: zero_components(), r_min: 0.0, domain, cap: DEFAULT_CAP }
    }

    /// A model from raw components without harmonicity, gauge or cap checks;
    /// used to exercise the residual checks on deliberately bad input.
    pub fn unchecked(family: Family, h: Components, r_min: f64, domain: Domain, cap: f64) -> Self {
        MetricModel { family, h, r_min, domain, cap }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn component(&self, mu: usize, nu: usize) -> &ScalarField {
        &self.h[mu][nu]
    }

    pub fn components(&self) -> &Components {
        &self.h
    }

    /// Componentwise sum with the cap re-checked on `self`'s domain.
    pub fn superpose(&self, other: &MetricModel) -> Result<MetricModel, GeometryError> {
        let h = std::array::from_fn(|mu| std::array::from_fn(|nu| self.h[mu][nu].add(&other.h[mu][nu])));
        let cap = self.cap.min(other.cap);
        let m = MetricModel {
            family: Family::Superposition,
            h,
            r_min: self.r_min.max(other.r_min),
            domain: self.domain,
            cap,
        };
        let (max, at) = m.max_abs_h_on_domain();
        if max > cap {
            return Err(GeometryError::WeakFieldCapExceeded { max, cap, at });
        }
        Ok(m)
    }

    /// The scalar field behind a base symbol: `φ = h₀₀/2`, `gⱼ = −h₀ⱼ`,
    /// `hᵢⱼ`, `h = h₀₀ − Σhᵢᵢ`.
    pub fn field(&self, base: FieldBase) -> ScalarField {
        match base {
            FieldBase::Phi => self.h[0][0].scale(0.5),
            FieldBase::G(j) => self.h[0][j as usize + 1].scale(-1.0),
            FieldBase::H(i, j) => self.h[i as usize + 1][j as usize + 1].clone(),
            FieldBase::Trace => (1..4).fold(self.h[0][0].clone(), |acc, i| acc.add(&self.h[i][i].scale(-1.0))),
        }
    }

    pub fn symbol_field(&self, sym: &FieldSymbol) -> ScalarField {
        self.field(sym.base).derivative(&sym.deriv)
    }

    pub fn centers(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for c in self.h.iter().flatten().flat_map(ScalarField::singular_centers) {
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    pub fn admissibility(&self, x: &Point) -> Result<(), GeometryError> {
        if !self.domain.contains(x) {
            return Err(GeometryError::Inadmissible { point: *x, reason: "outside the domain box".into() });
        }
        for c in self.centers() {
            let r = dist(x, &c);
            if r <= self.r_min {
                return Err(GeometryError::Inadmissible {
                    point: *x,
                    reason: format!("distance {r} to singular center {c:?} ≤ r_min {}", self.r_min),
                });
            }
        }
        Ok(())
    }

    pub fn is_admissible(&self, x: &Point) -> bool {
        self.admissibility(x).is_ok()
    }

    pub fn h_at(&self, x: &Point) -> [[f64; 4]; 4] {
        std::array::from_fn(|mu| std::array::from_fn(|nu| self.h[mu][nu].eval(x)))
    }

    /// `∂ₖ h_{μν}` indexed `[k][μ][ν]`.
    pub fn dh_at(&self, x: &Point) -> [[[f64; 4]; 4]; 3] {
        std::array::from_fn(|k| std::array::from_fn(|mu| std::array::from_fn(|nu| self.h[mu][nu].partial(k).eval(x))))
    }

    /// Sampled maximum of `|h_{μν}|` over the admissible part of the domain:
    /// a 17³ lattice (corners included) plus 400 points on each exclusion
    /// sphere.
    pub fn max_abs_h_on_domain(&self) -> (f64, Point) {
        const N: usize = 17;
        let mut pts = Vec::with_capacity(N * N * N);
        let d = self.domain;
        for a in 0..N {
            for b in 0..N {
                for c in 0..N {
                    let f = |i: usize, k: usize| d.lo[k] + (d.hi[k] - d.lo[k]) * i as f64 / (N - 1) as f64;
                    pts.push([f(a, 0), f(b, 1), f(c, 2)]);
                }
            }
        }
        for c in self.centers() {
            let r = self.r_min * (1.0 + 1e-9);
            for p in fibonacci_sphere(400) {
                pts.push([c[0] + r * p[0], c[1] + r * p[1], c[2] + r * p[2]]);
            }
        }
        let mut best = (0.0, [0.0; 3]);
        for x in pts.iter().filter(|x| self.is_admissible(x)) {
            for mu in 0..4 {
                for nu in mu..4 {
                    let v = self.h[mu][nu].eval(x).abs();
                    if v > best.0 {
                        best = (v, *x);
                    }
                }
            }
        }
        best
    }
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn fibonacci_sphere(n: usize) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            [r * t.cos(), r * t.sin(), z]
        })
        .collect()
}

/// Uniform random admissible points in the domain (rejection sampling).
pub fn sample_domain(model: &MetricModel, n: usize, rng: &mut impl Rng) -> Vec<Point> {
    let d = model.domain();
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n && tries < 1000 * n.max(1) {
        tries += 1;
        let x: Point = std::array::from_fn(|k| rng.random_range(d.lo[k]..=d.hi[k]));
        if model.is_admissible(&x) {
            out.push(x);
        }
    }
    out
}

/// Random points with `|x − center| ∈ [r_lo, r_hi]`, directions uniform.
pub fn sample_shell(center: Point, r_lo: f64, r_hi: f64, n: usize, rng: &mut impl Rng) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..=1.0);
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            let r = rng.random_range(r_lo..=r_hi);
            [center[0] + r * s * t.cos(), center[1] + r * s * t.sin(), center[2] + r * z]
        })
        .collect()
}

/// Maximum residual over samples, absolute and relative to the summed
/// magnitude of the parts that cancel.
#[derive(Clone, Copy, Debug, Default, Serialize, PartialEq)]
pub struct Residual {
    pub max_abs: f64,
    pub max_rel: f64,
    pub worst_point: Option<Point>,
}

impl Residual {
    fn record(&mut self, x: &Point, (v, scale): (f64, f64)) {
        let rel = if v == 0.0 { 0.0 } else { v.abs() / scale.max(f64::MIN_POSITIVE) };
        if v.abs() > self.max_abs {
            self.max_abs = v.abs();
            self.worst_point = Some(*x);
        }
        self.max_rel = self.max_rel.max(rel);
    }

    pub fn within(&self, rel_tol: f64) -> bool {
        self.max_rel <= rel_tol
    }
}

fn check_samples(model: &MetricModel, samples: &[Point]) -> Result<(), GeometryError> {
    samples.iter().try_for_each(|x| model.admissibility(x))
}

/// `max |Δh_{μν}|` over samples and components.
pub fn check_field_equations(model: &MetricModel, samples: &[Point]) -> Result<Residual, GeometryError> {
    check_samples(model, samples)?;
    let laps: Vec<ScalarField> = (0..4)
        .flat_map(|mu| (mu..4).map(move |nu| (mu, nu)))
        .map(|(mu, nu)| model.h[mu][nu].laplacian())
        .collect();
    let mut r = Residual::default();
    for x in samples {
        for l in &laps {
            r.record(x, l.eval_with_scale(x));
        }
    }
    Ok(r)
}

/// `max |Δf|` per potential: `phi = h₀₀/2`, `gⱼ = −h₀ⱼ` and `hᵢⱼ` for `i ≤ j`.
pub fn potential_residuals(model: &MetricModel, samples: &[Point]) -> Result<Vec<(String, Residual)>, GeometryError> {
    check_samples(model, samples)?;
    let mut named = vec![("phi".to_string(), model.h[0][0].scale(0.5))];
    for j in 1..4 {
        named.push((format!("g{j}"), model.h[0][j].scale(-1.0)));
    }
    for i in 1..4 {
        for j in i..4 {
            named.push((format!("h{i}{j}"), model.h[i][j].clone()));
        }
    }
    Ok(named
        .into_iter()
        .map(|(name, f)| {
            let lap = f.laplacian();
            let mut r = Residual::default();
            for x in samples {
                r.record(x, lap.eval_with_scale(x));
            }
            (name, r)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct GaugeReport {
    /// `Σⱼ∂ⱼh₀ⱼ`
    pub divergence: Residual,
    /// `maxᵢ |Σⱼ∂ⱼhᵢⱼ + ½∂ᵢh|`
    pub trace: Residual,
}

pub fn check_gauge(model: &MetricModel, samples: &[Point]) -> Result<GaugeReport, GeometryError> {
    check_samples(model, samples)?;
    let (div_g, spatial) = gauge_fields(&model.h);
    let mut rep = GaugeReport::default();
    for x in samples {
        rep.divergence.record(x, div_g.eval_with_scale(x));
        for s in &spatial {
            rep.trace.record(x, s.eval_with_scale(x));
        }
    }
    Ok(rep)
}
