//! Field-equation and gauge identities as a reduction system.
//!
//! Every rule is a linear relation among jet variables (a field symbol with
//! its derivative multi-index), closed under further differentiation:
//!
//! * Laplacian: `Σₗ ∂ₗ∂ₗ F = 0` for every base field (vacuum equations),
//! * divergence: `Σⱼ ∂ⱼ gⱼ = 0`,
//! * trace gauge: `Σⱼ ∂ⱼ hᵢⱼ + ½ ∂ᵢ h = 0`,
//! * trace definition: `h = 2φ − h₁₁ − h₂₂ − h₃₃`.
//!
//! Because terms are at most linear in each field factor, reduction modulo
//! these relations is linear algebra per derivative order: the relations are
//! brought to reduced row-echelon form with a fixed variable ranking and each
//! pivot variable is replaced by its combination of free variables. The
//! result is a canonical representative, so reduction is confluent and
//! idempotent.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_traits::{One, Zero};

use super::coeff::{Coeff, Rational};
use super::expr::{Monomial, OperatorExpr};
use super::field::{FieldBase, FieldSymbol, MultiIndex};

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub struct RuleSet {
    pub laplacian: bool,
    pub divergence: bool,
    pub trace_gauge: bool,
    pub trace_definition: bool,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::all()
    }
}

impl RuleSet {
    pub fn all() -> Self {
        RuleSet { laplacian: true, divergence: true, trace_gauge: true, trace_definition: true }
    }

    pub fn none() -> Self {
        RuleSet { laplacian: false, divergence: false, trace_gauge: false, trace_definition: false }
    }

    pub fn is_empty(&self) -> bool {
        *self == RuleSet::none()
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.laplacian {
            v.push("laplacian");
        }
        if self.divergence {
            v.push("divergence");
        }
        if self.trace_gauge {
            v.push("trace-gauge");
        }
        if self.trace_definition {
            v.push("trace-definition");
        }
        v
    }

    /// Linear relations among jet variables of total derivative order `n`.
    fn relations(&self, n: u32) -> Vec<HashMap<FieldSymbol, Rational>> {
        let mut rows = Vec::new();
        let one = Rational::one();
        if self.laplacian && n >= 2 {
            for base in FieldBase::all() {
                for beta in multi_indices(n - 2) {
                    let mut r = HashMap::new();
                    for l in 0..3 {
                        let mut d = beta;
                        d[l] += 2;
                        r.insert(FieldSymbol::with_deriv(base, d), one);
                    }
                    rows.push(r);
                }
            }
        }
        if self.divergence && n >= 1 {
            for beta in multi_indices(n - 1) {
                let mut r = HashMap::new();
                for j in 0..3 {
                    let mut d = beta;
                    d[j] += 1;
                    r.insert(FieldSymbol::with_deriv(FieldBase::g(j), d), one);
                }
                rows.push(r);
            }
        }
        if self.trace_gauge && n >= 1 {
            for i in 0..3 {
                for beta in multi_indices(n - 1) {
                    let mut r: HashMap<FieldSymbol, Rational> = HashMap::new();
                    for j in 0..3 {
                        let mut d = beta;
                        d[j] += 1;
                        *r.entry(FieldSymbol::with_deriv(FieldBase::h(i, j), d)).or_default() += one;
                    }
                    let mut d = beta;
                    d[i] += 1;
                    *r.entry(FieldSymbol::with_deriv(FieldBase::Trace, d)).or_default() += Rational::new(1, 2);
                    rows.push(r);
                }
            }
        }
        if self.trace_definition {
            for beta in multi_indices(n) {
                let mut r = HashMap::new();
                r.insert(FieldSymbol::with_deriv(FieldBase::Trace, beta), one);
                r.insert(FieldSymbol::with_deriv(FieldBase::Phi, beta), Rational::from_integer(-2));
                for k in 0..3 {
                    r.insert(FieldSymbol::with_deriv(FieldBase::h(k, k), beta), one);
                }
                rows.push(r);
            }
        }
        rows
    }

    fn reduction(&self, n: u32) -> Arc<Reduction> {
        static CACHE: LazyLock<Mutex<HashMap<(RuleSet, u32), Arc<Reduction>>>> =
            LazyLock::new(|| Mutex::new(HashMap::new()));
        let mut cache = CACHE.lock().expect("reduction cache poisoned");
        cache
            .entry((*self, n))
            .or_insert_with(|| Arc::new(Reduction::build(self.relations(n), n)))
            .clone()
    }

    /// Is this jet variable eliminated (non-canonical) under the rules?
    pub fn is_reducible(&self, f: &FieldSymbol) -> bool {
        self.reduction(f.deriv_order()).map.contains_key(f)
    }

    fn reduce_symbol(&self, f: &FieldSymbol) -> Option<Vec<(Rational, FieldSymbol)>> {
        self.reduction(f.deriv_order()).map.get(f).cloned()
    }
}

pub fn multi_indices(n: u32) -> Vec<MultiIndex> {
    let n = n as u8;
    let mut v = Vec::new();
    for a in 0..=n {
        for b in 0..=(n - a) {
            v.push([a, b, n - a - b]);
        }
    }
    v
}

/// Pivot ranking: higher base first, then more ∂₃, ∂₂, ∂₁.
fn rank_key(f: &FieldSymbol) -> (FieldBase, u8, u8, u8) {
    (f.base, f.deriv[2], f.deriv[1], f.deriv[0])
}

struct Reduction {
    map: HashMap<FieldSymbol, Vec<(Rational, FieldSymbol)>>,
}

impl Reduction {
    fn build(rows: Vec<HashMap<FieldSymbol, Rational>>, n: u32) -> Reduction {
        let mut vars: Vec<FieldSymbol> = FieldBase::all()
            .into_iter()
            .flat_map(|b| multi_indices(n).into_iter().map(move |d| FieldSymbol::with_deriv(b, d)))
            .collect();
        vars.sort_by_key(|f| std::cmp::Reverse(rank_key(f)));
        let col: HashMap<FieldSymbol, usize> = vars.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let mut mat: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| {
                let mut row = vec![Rational::zero(); vars.len()];
                for (f, c) in r {
                    row[col[f]] += *c;
                }
                row
            })
            .collect();

        // reduced row echelon form, pivots taken in rank order
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..vars.len() {
            let Some(p) = (next..mat.len()).find(|&r| !mat[r][c].is_zero()) else {
                continue;
            };
            mat.swap(next, p);
            let inv = Rational::one() / mat[next][c];
            for x in mat[next].iter_mut() {
                *x *= inv;
            }
            for r in 0..mat.len() {
                if r != next && !mat[r][c].is_zero() {
                    let factor = mat[r][c];
                    for k in 0..vars.len() {
                        let delta = factor * mat[next][k];
                        mat[r][k] -= delta;
                    }
                }
            }
            pivots.push((next, c));
            next += 1;
            if next == mat.len() {
                break;
            }
        }
        let mut map = HashMap::new();
        for (r, c) in pivots {
            let combo = (0..vars.len())
                .filter(|&k| k != c && !mat[r][k].is_zero())
                .map(|k| (-mat[r][k], vars[k]))
                .collect();
            map.insert(vars[c], combo);
        }
        Reduction { map }
    }
}

/// Reduces `e` to its canonical representative modulo the enabled rules.
pub fn apply_rewrites(e: &OperatorExpr, rules: &RuleSet) -> OperatorExpr {
    if rules.is_empty() {
        return e.clone();
    }
    let trunc = e.truncation();
    let mut out = OperatorExpr::zero(trunc);
    for (m, c) in e.terms() {
        // expand the product of reduced factors
        let mut partial: Vec<(Coeff, Vec<FieldSymbol>)> = vec![(c.clone(), Vec::new())];
        for f in &m.fields {
            let options: Vec<(Rational, FieldSymbol)> = match rules.reduce_symbol(f) {
                Some(combo) => combo,
                None => vec![(Rational::one(), *f)],
            };
            partial = partial
                .into_iter()
                .flat_map(|(pc, pf)| {
                    options.iter().map(move |(r, f2)| {
                        let mut fs = pf.clone();
                        fs.push(*f2);
                        (pc.scale(*r), fs)
                    })
                })
                .collect();
        }
        for (pc, fs) in partial {
            out.add_term(Monomial { fields: fs, ..m.clone() }, pc);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::expr::Truncation;

    fn field(b: FieldBase, d: MultiIndex) -> OperatorExpr {
        OperatorExpr::field(FieldSymbol::with_deriv(b, d), Truncation::default())
    }

    #[test]
    fn laplacian_of_phi_vanishes() {
        let e = &(&field(FieldBase::Phi, [2, 0, 0]) + &field(FieldBase::Phi, [0, 2, 0])) + &field(FieldBase::Phi, [0, 0, 2]);
        assert!(apply_rewrites(&e, &RuleSet::all()).is_zero());
        assert!(!apply_rewrites(&e, &RuleSet::none()).is_zero());
    }

    #[test]
    fn derivative_of_laplacian_vanishes() {
        let mut e = OperatorExpr::zero(Truncation::default());
        for l in 0..3 {
            let mut d = [1, 0, 0];
            d[l] += 2;
            e = &e + &field(FieldBase::h(0, 1), d);
        }
        assert!(apply_rewrites(&e, &RuleSet::all()).is_zero());
    }

    #[test]
    fn divergence_of_g_vanishes() {
        let t = Truncation::default();
        let mut e = OperatorExpr::zero(t);
        for j in 0..3 {
            let mut d = [0; 3];
            d[j] = 1;
            e = &e + &field(FieldBase::g(j), d);
        }
        let e = e.multiply(&OperatorExpr::matrix(crate::opcore::dirac::Gamma::BETA, t));
        assert!(apply_rewrites(&e, &RuleSet::all()).is_zero());
    }

    #[test]
    fn trace_gauge_example() {
        let t = Truncation::default();
        let d1 = OperatorExpr::deriv(0, t);
        let mut lhs = OperatorExpr::zero(t);
        for j in 0..3 {
            let mut d = [0; 3];
            d[j] = 1;
            lhs = &lhs + &field(FieldBase::h(0, j), d);
        }
        let lhs = lhs.multiply(&d1);
        let rhs = field(FieldBase::Trace, [1, 0, 0]).multiply(&d1).scale(&Coeff::ratio(-1, 2));
        let rules = RuleSet::all();
        assert_eq!(apply_rewrites(&lhs, &rules), apply_rewrites(&rhs, &rules));
        // h stays a free variable, so the right-hand side is already canonical
        assert_eq!(apply_rewrites(&rhs, &rules), rhs);
    }

    #[test]
    fn idempotent_on_all_jets() {
        let rules = RuleSet::all();
        for n in 0..4 {
            for b in FieldBase::all() {
                for d in multi_indices(n) {
                    let e = field(b, d);
                    let once = apply_rewrites(&e, &rules);
                    assert_eq!(apply_rewrites(&once, &rules), once);
                }
            }
        }
    }
}
