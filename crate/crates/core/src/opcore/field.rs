//! Field symbols: the metric perturbation components and their derivatives.

use std::fmt;

/// Spatial axis 1..=3 stored zero-based.
pub type MultiIndex = [u8; 3];

pub fn order(a: &MultiIndex) -> u32 {
    a.iter().map(|&x| x as u32).sum()
}

/// Base field. Variant order is the canonical order; `Trace` sorts first so
/// the gauge reduction keeps it as a free variable.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FieldBase {
    /// h = η^{μν} h_{μν}
    Trace,
    /// φ = h₀₀/2
    Phi,
    /// g_i = −h₀ᵢ
    G(u8),
    /// h_ij with i ≤ j (zero-based)
    H(u8, u8),
}

impl FieldBase {
    pub fn g(axis: usize) -> Self {
        assert!(axis < 3);
        FieldBase::G(axis as u8)
    }

    /// Symmetric spatial component; `h(1,0)` canonicalizes to `h(0,1)`.
    pub fn h(i: usize, j: usize) -> Self {
        assert!(i < 3 && j < 3);
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        FieldBase::H(a as u8, b as u8)
    }

    pub fn all() -> Vec<FieldBase> {
        let mut v = vec![FieldBase::Trace, FieldBase::Phi];
        v.extend((0..3).map(FieldBase::g));
        for i in 0..3 {
            for j in i..3 {
                v.push(FieldBase::h(i, j));
            }
        }
        v
    }

    pub fn name(&self) -> String {
        match self {
            FieldBase::Trace => "h".into(),
            FieldBase::Phi => "phi".into(),
            FieldBase::G(i) => format!("g{}", i + 1),
            FieldBase::H(i, j) => format!("h{}{}", i + 1, j + 1),
        }
    }

    pub fn from_name(s: &str) -> Option<FieldBase> {
        match s {
            "h" => Some(FieldBase::Trace),
            "phi" => Some(FieldBase::Phi),
            _ => {
                let b = s.as_bytes();
                let digit = |c: u8| (b'1'..=b'3').contains(&c).then(|| (c - b'1') as usize);
                match (b.first(), b.len()) {
                    (Some(b'g'), 2) => digit(b[1]).map(FieldBase::g),
                    (Some(b'h'), 3) => Some(FieldBase::h(digit(b[1])?, digit(b[2])?)),
                    _ => None,
                }
            }
        }
    }
}

/// A base field with a sorted multiset of spatial partial derivatives.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FieldSymbol {
    pub base: FieldBase,
    pub deriv: MultiIndex,
}

impl FieldSymbol {
    pub fn new(base: FieldBase) -> Self {
        FieldSymbol { base, deriv: [0; 3] }
    }

    pub fn with_deriv(base: FieldBase, deriv: MultiIndex) -> Self {
        FieldSymbol { base, deriv }
    }

    pub fn differentiate(&self, by: &MultiIndex) -> Self {
        let mut d = self.deriv;
        for k in 0..3 {
            d[k] += by[k];
        }
        FieldSymbol { base: self.base, deriv: d }
    }

    pub fn deriv_order(&self) -> u32 {
        order(&self.deriv)
    }
}

/// DSL form, e.g. `D(1,D(2,phi))` for ∂₁∂₂φ.
impl fmt::Display for FieldSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut axes = Vec::new();
        for (k, &n) in self.deriv.iter().enumerate() {
            for _ in 0..n {
                axes.push(k + 1);
            }
        }
        for a in &axes {
            write!(f, "D({a},")?;
        }
        write!(f, "{}", self.base.name())?;
        for _ in &axes {
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_h_canonicalizes() {
        assert_eq!(FieldBase::h(1, 0), FieldBase::h(0, 1));
        assert_eq!(FieldBase::from_name("h21"), Some(FieldBase::h(0, 1)));
        assert_eq!(FieldBase::from_name("h44"), None);
        assert_eq!(FieldBase::all().len(), 11);
    }

    #[test]
    fn derivatives_commute() {
        let phi = FieldSymbol::new(FieldBase::Phi);
        let a = phi.differentiate(&[1, 0, 0]).differentiate(&[0, 1, 0]);
        let b = phi.differentiate(&[0, 1, 0]).differentiate(&[1, 0, 0]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "D(1,D(2,phi))");
    }
}
