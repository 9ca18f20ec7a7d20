//! Normal-ordered operator expressions.
//!
//! A term is `c · m^k · F · X · M · ∂^α`: an exact coefficient, a power of the
//! mass, a sorted product of field symbols, coordinate factors, one Dirac
//! basis element and a right-acting derivative monomial. Expressions are sums
//! of terms keyed by their monomial, so the canonical form is the map itself.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use super::coeff::{Coeff, Rational};
use super::dirac::Gamma;
use super::field::{order, FieldBase, FieldSymbol, MultiIndex};
use super::OpError;

/// Grading window: terms with `mpow < min_mpow` or more than `max_hdeg`
/// field factors are dropped.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug, serde::Serialize)]
pub struct Truncation {
    pub min_mpow: i32,
    pub max_hdeg: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { min_mpow: -2, max_hdeg: 1 }
    }
}

impl Truncation {
    pub const MAX_MPOW: i32 = 1;

    pub fn intersect(self, o: Truncation) -> Truncation {
        Truncation {
            min_mpow: self.min_mpow.max(o.min_mpow),
            max_hdeg: self.max_hdeg.min(o.max_hdeg),
        }
    }

    pub fn admits(&self, mpow: i32, hdeg: usize) -> bool {
        mpow >= self.min_mpow && hdeg <= self.max_hdeg
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial {
    pub mpow: i32,
    pub fields: Vec<FieldSymbol>,
    pub coords: MultiIndex,
    pub matrix: Gamma,
    pub derivs: MultiIndex,
}

impl Monomial {
    pub fn identity() -> Self {
        Monomial { mpow: 0, fields: Vec::new(), coords: [0; 3], matrix: Gamma::ONE, derivs: [0; 3] }
    }

    pub fn hdeg(&self) -> usize {
        self.fields.len()
    }

    /// A pure multiplication operator by a constant (no fields, matrix,
    /// derivatives or coordinates); powers of `m` allowed.
    pub fn is_scalar(&self) -> bool {
        self.fields.is_empty()
            && self.coords == [0; 3]
            && self.matrix == Gamma::ONE
            && self.derivs == [0; 3]
    }
}

// Descending powers of m, then lower h-degree, then matrix, derivatives,
// fields, coordinates. Printing follows this order.
impl Ord for Monomial {
    fn cmp(&self, o: &Self) -> Ordering {
        o.mpow
            .cmp(&self.mpow)
            .then(self.fields.len().cmp(&o.fields.len()))
            .then(self.matrix.cmp(&o.matrix))
            .then(order(&self.derivs).cmp(&order(&o.derivs)))
            .then(o.derivs.cmp(&self.derivs))
            .then(self.fields.cmp(&o.fields))
            .then(self.coords.cmp(&o.coords))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OperatorExpr {
    terms: BTreeMap<Monomial, Coeff>,
    trunc: Truncation,
}

impl Default for OperatorExpr {
    fn default() -> Self {
        OperatorExpr::zero(Truncation::default())
    }
}

fn binom(n: u8, k: u8) -> i128 {
    let (n, k) = (n as i128, k as i128);
    (0..k).fold(1, |acc, j| acc * (n - j) / (j + 1))
}

fn falling(n: u8, k: u8) -> i128 {
    (0..k as i128).fold(1, |acc, j| acc * (n as i128 - j))
}

/// All multi-indices `γ ≤ α`.
fn sub_indices(a: MultiIndex) -> impl Iterator<Item = MultiIndex> {
    (0..=a[0]).flat_map(move |i| (0..=a[1]).flat_map(move |j| (0..=a[2]).map(move |k| [i, j, k])))
}

fn sub(a: MultiIndex, b: MultiIndex) -> MultiIndex {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn multi_binom(a: MultiIndex, b: MultiIndex) -> i128 {
    (0..3).map(|k| binom(a[k], b[k])).product()
}

/// Distributes `∂^γ` over a product of field factors by the general Leibniz
/// rule, appending `(multinomial, factors)` pairs to `out`.
fn leibniz_fields(gamma: MultiIndex, factors: &[FieldSymbol], out: &mut Vec<(i128, Vec<FieldSymbol>)>) {
    match factors {
        [] => {
            if gamma == [0; 3] {
                out.push((1, Vec::new()));
            }
        }
        [only] => out.push((1, vec![only.differentiate(&gamma)])),
        [first, rest @ ..] => {
            for d in sub_indices(gamma) {
                let w = multi_binom(gamma, d);
                let mut tail = Vec::new();
                leibniz_fields(sub(gamma, d), rest, &mut tail);
                for (c, mut fs) in tail {
                    fs.push(first.differentiate(&d));
                    out.push((w * c, fs));
                }
            }
        }
    }
}

impl OperatorExpr {
    pub fn zero(trunc: Truncation) -> Self {
        OperatorExpr { terms: BTreeMap::new(), trunc }
    }

    pub fn from_term(c: Coeff, mono: Monomial, trunc: Truncation) -> Self {
        let mut e = OperatorExpr::zero(trunc);
        e.add_term(mono, c);
        e
    }

    pub fn scalar(c: Coeff, trunc: Truncation) -> Self {
        OperatorExpr::from_term(c, Monomial::identity(), trunc)
    }

    pub fn one(trunc: Truncation) -> Self {
        OperatorExpr::scalar(Coeff::one(), trunc)
    }

    pub fn int(n: i128, trunc: Truncation) -> Self {
        OperatorExpr::scalar(Coeff::int(n), trunc)
    }

    pub fn mass(power: i32, trunc: Truncation) -> Self {
        let mono = Monomial { mpow: power, ..Monomial::identity() };
        OperatorExpr::from_term(Coeff::one(), mono, trunc)
    }

    pub fn field(f: FieldSymbol, trunc: Truncation) -> Self {
        let mono = Monomial { fields: vec![f], ..Monomial::identity() };
        OperatorExpr::from_term(Coeff::one(), mono, trunc)
    }

    pub fn base_field(b: FieldBase, trunc: Truncation) -> Self {
        OperatorExpr::field(FieldSymbol::new(b), trunc)
    }

    pub fn matrix(g: Gamma, trunc: Truncation) -> Self {
        let mono = Monomial { matrix: g, ..Monomial::identity() };
        OperatorExpr::from_term(Coeff::one(), mono, trunc)
    }

    /// `∂_axis` (zero-based axis).
    pub fn deriv(axis: usize, trunc: Truncation) -> Self {
        let mut d = [0; 3];
        d[axis] = 1;
        OperatorExpr::deriv_monomial(d, trunc)
    }

    pub fn deriv_monomial(d: MultiIndex, trunc: Truncation) -> Self {
        let mono = Monomial { derivs: d, ..Monomial::identity() };
        OperatorExpr::from_term(Coeff::one(), mono, trunc)
    }

    pub fn coordinate(axis: usize, trunc: Truncation) -> Self {
        let mut c = [0; 3];
        c[axis] = 1;
        let mono = Monomial { coords: c, ..Monomial::identity() };
        OperatorExpr::from_term(Coeff::one(), mono, trunc)
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    /// Re-truncates into a (possibly different) window.
    pub fn with_truncation(&self, trunc: Truncation) -> Self {
        let mut e = OperatorExpr::zero(trunc);
        for (m, c) in &self.terms {
            e.add_term(m.clone(), c.clone());
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    /// Adds `c · mono`, dropping it if outside the window.
    pub fn add_term(&mut self, mut mono: Monomial, c: Coeff) {
        if c.is_zero() || !self.trunc.admits(mono.mpow, mono.hdeg()) {
            return;
        }
        mono.fields.sort();
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        let mut e = OperatorExpr::zero(self.trunc);
        for (m, v) in &self.terms {
            e.add_term(m.clone(), v * c);
        }
        e
    }

    pub fn filter(&self, keep: impl Fn(&Monomial, &Coeff) -> bool) -> Self {
        let mut e = OperatorExpr::zero(self.trunc);
        for (m, c) in &self.terms {
            if keep(m, c) {
                e.add_term(m.clone(), c.clone());
            }
        }
        e
    }

    pub fn map_monomials(&self, f: impl Fn(&Monomial, &Coeff) -> Option<(Monomial, Coeff)>) -> Self {
        let mut e = OperatorExpr::zero(self.trunc);
        for (m, c) in &self.terms {
            if let Some((m2, c2)) = f(m, c) {
                e.add_term(m2, c2);
            }
        }
        e
    }

    /// Product of two single terms, expanded into normal order.
    fn mul_terms(&self, out: &mut OperatorExpr, a: &Monomial, ca: &Coeff, b: &Monomial, cb: &Coeff) {
        let trunc = out.trunc;
        let mpow = a.mpow + b.mpow;
        if !trunc.admits(mpow, a.hdeg() + b.hdeg()) {
            return;
        }
        let (phase, matrix) = a.matrix.mul(b.matrix);
        let base = (ca * cb).times_i_pow(phase);
        // ∂^α ∘ (F_b X_b) = Σ_γ C(α,γ) ∂^γ(F_b X_b) ∂^{α−γ}
        for gamma in sub_indices(a.derivs) {
            let w_outer = multi_binom(a.derivs, gamma);
            let rest_d = sub(a.derivs, gamma);
            for gx in sub_indices(gamma) {
                if (0..3).any(|k| gx[k] > b.coords[k]) {
                    continue;
                }
                let gf = sub(gamma, gx);
                if b.fields.is_empty() && gf != [0; 3] {
                    continue;
                }
                let w_split = multi_binom(gamma, gx);
                let w_coord: i128 = (0..3).map(|k| falling(b.coords[k], gx[k])).product();
                let coords = sub(b.coords, gx);
                let mut dist = Vec::new();
                leibniz_fields(gf, &b.fields, &mut dist);
                for (w_f, fs) in dist {
                    let w = w_outer * w_split * w_coord * w_f;
                    let mut fields = a.fields.clone();
                    fields.extend(fs);
                    let mono = Monomial {
                        mpow,
                        fields,
                        coords: [a.coords[0] + coords[0], a.coords[1] + coords[1], a.coords[2] + coords[2]],
                        matrix,
                        derivs: [rest_d[0] + b.derivs[0], rest_d[1] + b.derivs[1], rest_d[2] + b.derivs[2]],
                    };
                    out.add_term(mono, base.scale(Rational::from_integer(w)));
                }
            }
        }
    }

    /// Operator composition `self ∘ other` in normal order.
    pub fn multiply(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut out = OperatorExpr::zero(self.trunc.intersect(other.trunc));
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                self.mul_terms(&mut out, a, ca, b, cb);
            }
        }
        out
    }

    pub fn commutator(&self, other: &OperatorExpr) -> OperatorExpr {
        &self.multiply(other) - &other.multiply(self)
    }

    pub fn anticommutator(&self, other: &OperatorExpr) -> OperatorExpr {
        &self.multiply(other) + &other.multiply(self)
    }

    /// `[self, x^axis]` using `[∂^α, xⁱ] = αᵢ ∂^{α−eᵢ}`; fields, matrices and
    /// coordinates commute with `xⁱ`.
    pub fn commutator_with_coordinate(&self, axis: usize) -> OperatorExpr {
        self.map_monomials(|m, c| {
            let n = m.derivs[axis];
            if n == 0 {
                return None;
            }
            let mut m2 = m.clone();
            m2.derivs[axis] -= 1;
            Some((m2, c.scale(Rational::from_integer(n as i128))))
        })
    }

    /// `[∂_axis, self]`: differentiates every field/coordinate factor.
    pub fn derivative_of(&self, axis: usize) -> OperatorExpr {
        OperatorExpr::deriv(axis, self.trunc).commutator(self)
    }

    /// Formal adjoint for the flat measure `d³x`.
    pub fn adjoint_flat(&self) -> OperatorExpr {
        let mut out = OperatorExpr::zero(self.trunc);
        for (m, c) in &self.terms {
            let (phase, mdag) = m.matrix.adjoint();
            let sign = if order(&m.derivs) % 2 == 0 { 1 } else { -1 };
            // (F X M ∂^α)† = (−1)^{|α|} ∂^α ∘ (F X M†)
            let body = Monomial {
                mpow: m.mpow,
                fields: m.fields.clone(),
                coords: m.coords,
                matrix: mdag,
                derivs: [0; 3],
            };
            let coeff = c.conj().times_i_pow(phase).scale(Rational::from_integer(sign));
            let d = OperatorExpr::deriv_monomial(m.derivs, self.trunc);
            let t = OperatorExpr::from_term(coeff, body, self.trunc);
            out = &out + &d.multiply(&t);
        }
        out
    }

    /// Adjoint for the weighted inner product `∫ μ ψ₁† ψ₂`, i.e.
    /// `μ⁻¹ · A†_flat · μ` with `μ⁻¹` expanded to the working h-degree.
    pub fn adjoint(&self, measure: Measure) -> OperatorExpr {
        let flat = self.adjoint_flat();
        if measure == Measure::Flat {
            return flat;
        }
        let mu = measure.density(self.trunc);
        let mu_inv = measure.inverse_density(self.trunc);
        mu_inv.multiply(&flat).multiply(&mu)
    }

    /// `e^{iS} X e^{−iS}` by the nested-commutator series. Every term of `S`
    /// must carry `mpow ≤ −1` so the series terminates inside the window.
    pub fn exp_conjugate(s: &OperatorExpr, x: &OperatorExpr) -> Result<OperatorExpr, OpError> {
        if let Some((m, _)) = s.terms.iter().find(|(m, _)| m.mpow > -1) {
            return Err(OpError::GeneratorNotSmall { mpow: m.mpow });
        }
        let is = s.scale(&Coeff::i());
        let mut result = x.clone();
        let mut nested = x.clone();
        let window = (Truncation::MAX_MPOW - x.trunc.min_mpow).max(0) as i128 + 2;
        for n in 1..=window {
            nested = is.commutator(&nested).scale(&Coeff::ratio(1, n));
            if nested.is_zero() {
                return Ok(result);
            }
            result = &result + &nested;
        }
        // mpow strictly decreases by ≥ 1 per nesting, so this is unreachable
        // for any expression whose terms satisfy mpow ≤ MAX_MPOW.
        Err(OpError::SeriesDidNotTerminate)
    }

    pub fn even_part(&self) -> OperatorExpr {
        self.filter(|m, _| m.matrix.is_even())
    }

    pub fn odd_part(&self) -> OperatorExpr {
        self.filter(|m, _| !m.matrix.is_even())
    }

    /// Upper-left 2×2 block of the even part (β → 1).
    pub fn upper_block(&self) -> OperatorExpr {
        self.map_monomials(|m, c| {
            let g = m.matrix.upper_block()?;
            Some((Monomial { matrix: g, ..m.clone() }, c.clone()))
        })
    }

    pub fn has_coordinates(&self) -> bool {
        self.terms.keys().any(|m| m.coords != [0; 3])
    }

    /// Returns an error if coordinate factors survive; results handed out of
    /// the algebra must be free of them.
    pub fn ensure_no_coordinates(&self) -> Result<(), OpError> {
        if self.has_coordinates() {
            Err(OpError::DanglingCoordinate(self.to_string()))
        } else {
            Ok(())
        }
    }

    pub fn is_two_component(&self) -> bool {
        self.terms.keys().all(|m| m.matrix.is_pauli())
    }

    pub fn min_mpow(&self) -> Option<i32> {
        self.terms.keys().map(|m| m.mpow).min()
    }

    pub fn max_mpow(&self) -> Option<i32> {
        self.terms.keys().map(|m| m.mpow).max()
    }

    pub fn max_field_deriv_order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.fields.iter().map(|f| f.deriv_order()))
            .max()
            .unwrap_or(0)
    }

    pub fn max_deriv_order(&self) -> u32 {
        self.terms.keys().map(|m| order(&m.derivs)).max().unwrap_or(0)
    }

    /// Substitutes every field symbol by an expression (used to specialize
    /// the general fixtures to a field family).
    pub fn substitute_fields(&self, f: impl Fn(&FieldSymbol) -> OperatorExpr) -> OperatorExpr {
        let mut out = OperatorExpr::zero(self.trunc);
        for (m, c) in &self.terms {
            let mut prod = OperatorExpr::scalar(c.clone(), self.trunc);
            for fs in &m.fields {
                prod = prod.multiply(&f(fs));
            }
            let rest = Monomial { fields: Vec::new(), ..m.clone() };
            prod = prod.multiply(&OperatorExpr::from_term(Coeff::one(), rest, self.trunc));
            out = &out + &prod;
        }
        out
    }
}

/// Integration measures for adjoints and inner products.
#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum Measure {
    /// d³x
    Flat,
    /// √(−g) d³x = (1 + φ − ½Σhᵢᵢ) d³x
    SqrtG,
    /// √(−³g) d³x = (1 − ½Σhᵢᵢ) d³x
    SqrtSpatialG,
}

impl Measure {
    pub fn all() -> [Measure; 3] {
        [Measure::Flat, Measure::SqrtG, Measure::SqrtSpatialG]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Flat => "flat",
            Measure::SqrtG => "sqrt(-g)",
            Measure::SqrtSpatialG => "sqrt(-3g)",
        }
    }

    /// The density minus one, at linear order.
    fn perturbation(&self, trunc: Truncation) -> OperatorExpr {
        let mut e = OperatorExpr::zero(trunc);
        if *self == Measure::Flat {
            return e;
        }
        if *self == Measure::SqrtG {
            e.add_term(
                Monomial { fields: vec![FieldSymbol::new(FieldBase::Phi)], ..Monomial::identity() },
                Coeff::one(),
            );
        }
        for k in 0..3 {
            e.add_term(
                Monomial { fields: vec![FieldSymbol::new(FieldBase::h(k, k))], ..Monomial::identity() },
                Coeff::ratio(-1, 2),
            );
        }
        e
    }

    pub fn density(&self, trunc: Truncation) -> OperatorExpr {
        &OperatorExpr::one(trunc) + &self.perturbation(trunc)
    }

    pub fn inverse_density(&self, trunc: Truncation) -> OperatorExpr {
        // Neumann series; exact inside the window since each power raises
        // the h-degree by one.
        let delta = self.perturbation(trunc);
        let mut out = OperatorExpr::one(trunc);
        let mut power = OperatorExpr::one(trunc);
        for k in 1..=trunc.max_hdeg {
            power = power.multiply(&delta);
            let sign = if k % 2 == 1 { -1 } else { 1 };
            out = &out + &power.scale(&Coeff::int(sign));
        }
        out
    }
}

impl<'a> Add<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, o: &OperatorExpr) -> OperatorExpr {
        let mut e = self.with_truncation(self.trunc.intersect(o.trunc));
        for (m, c) in &o.terms {
            e.add_term(m.clone(), c.clone());
        }
        e
    }
}

impl<'a> Sub<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, o: &OperatorExpr) -> OperatorExpr {
        let mut e = self.with_truncation(self.trunc.intersect(o.trunc));
        for (m, c) in &o.terms {
            e.add_term(m.clone(), -c.clone());
        }
        e
    }
}

impl<'a> Mul<&'a OperatorExpr> for &'a OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, o: &OperatorExpr) -> OperatorExpr {
        self.multiply(o)
    }
}

impl Neg for &OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        self.scale(&Coeff::int(-1))
    }
}

impl Add for OperatorExpr {
    type Output = OperatorExpr;
    fn add(self, o: OperatorExpr) -> OperatorExpr {
        &self + &o
    }
}

impl Sub for OperatorExpr {
    type Output = OperatorExpr;
    fn sub(self, o: OperatorExpr) -> OperatorExpr {
        &self - &o
    }
}

impl Mul for OperatorExpr {
    type Output = OperatorExpr;
    fn mul(self, o: OperatorExpr) -> OperatorExpr {
        self.multiply(&o)
    }
}

impl Neg for OperatorExpr {
    type Output = OperatorExpr;
    fn neg(self) -> OperatorExpr {
        -&self
    }
}

fn write_power(f: &mut fmt::Formatter<'_>, sym: &str, n: i64, first: &mut bool) -> fmt::Result {
    if n == 0 {
        return Ok(());
    }
    if !*first {
        write!(f, "*")?;
    }
    *first = false;
    if n == 1 {
        write!(f, "{sym}")
    } else {
        write!(f, "{sym}^{n}")
    }
}

/// Prints the canonical form in the operator DSL; the output re-parses to
/// the identical expression.
impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let (phase, word) = m.matrix.word();
            // element = i^phase · word, so the printed coefficient absorbs it
            let mut coeff = c.times_i_pow(phase);
            if coeff.leading_negative() {
                coeff = -coeff;
                write!(f, "{}", if idx == 0 { "-" } else { " - " })?;
            } else if idx > 0 {
                write!(f, " + ")?;
            }
            let mut first = true;
            let unit = coeff == Coeff::one();
            if !unit || m.is_scalar() && m.mpow == 0 {
                write!(f, "{coeff}")?;
                first = false;
            }
            write_power(f, "m", m.mpow as i64, &mut first)?;
            for fs in &m.fields {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{fs}")?;
            }
            for k in 0..3 {
                write_power(f, &format!("x{}", k + 1), m.coords[k] as i64, &mut first)?;
            }
            if !word.is_empty() {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{word}")?;
            }
            for k in 0..3 {
                write_power(f, &format!("d{}", k + 1), m.derivs[k] as i64, &mut first)?;
            }
        }
        Ok(())
    }
}
