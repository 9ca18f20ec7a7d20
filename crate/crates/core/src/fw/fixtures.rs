//! Operator displays transcribed as DSL text. These are test oracles: they
//! are parsed, never produced by the pipeline they check.

use crate::opcore::{parse_operator_with, OperatorExpr, ParseError, Truncation};

/// `(∇φ × σ)·p`
const PHI_CROSS_SIGMA_DOT_P: &str = "sum(i,j,k: eps(i,j,k)*D(i,phi)*sigma[j]*p[k])";
/// `Σ ε_{jkl} (∂ⱼ h_{il}) σₖ pᵢ`
const DH_SIGMA_P: &str = "sum(i,j,k,l: eps(j,k,l)*D(j,h[i,l])*sigma[k]*p[i])";
/// `Σ ε_{ijk} (∂ᵢ h_{jl}) p_l σₖ`
const DH_P_SIGMA: &str = "sum(i,j,k,l: eps(i,j,k)*D(i,h[j,l])*p[l]*sigma[k])";
/// `(∇ × g)·σ`
const CURL_G_SIGMA: &str = "sum(i,j,k: eps(i,j,k)*D(i,g[j])*sigma[k])";
/// `Σ ε_{ijk} {(∂ⱼg_l + ∂_l gⱼ) p_l pᵢ + p_l pᵢ (∂ⱼg_l + ∂_l gⱼ)} σₖ`
const DG_PP_SIGMA: &str =
    "sum(i,j,k,l: eps(i,j,k)*((D(j,g[l]) + D(l,g[j]))*p[l]*p[i] + p[l]*p[i]*(D(j,g[l]) + D(l,g[j])))*sigma[k])";

#[derive(Copy, Clone, PartialEq, Eq, Hash, Debug)]
pub enum Fixture {
    Hamiltonian,
    TransformedHamiltonian,
    HamiltonianFw,
    TransformedBeta,
    Tempo,
    TempoSquared,
    Velocity(usize),
    MomentumCommutator,
}

impl Fixture {
    pub fn all() -> Vec<Fixture> {
        let mut v = vec![
            Fixture::Hamiltonian,
            Fixture::TransformedHamiltonian,
            Fixture::HamiltonianFw,
            Fixture::TransformedBeta,
            Fixture::Tempo,
            Fixture::TempoSquared,
        ];
        v.extend((0..3).map(Fixture::Velocity));
        v.push(Fixture::MomentumCommutator);
        v
    }

    pub fn name(&self) -> String {
        match self {
            Fixture::Hamiltonian => "H".into(),
            Fixture::TransformedHamiltonian => "UHU".into(),
            Fixture::HamiltonianFw => "H_FW".into(),
            Fixture::TransformedBeta => "U(1+phi)betaU".into(),
            Fixture::Tempo => "T".into(),
            Fixture::TempoSquared => "T2".into(),
            Fixture::Velocity(i) => format!("xdot{}", i + 1),
            Fixture::MomentumCommutator => "[p1,p2]".into(),
        }
    }

    /// Looks a fixture up by its name, case-insensitively, or by one of the
    /// long aliases (`tempo`, `tempo-squared`, `hamiltonian`, ...).
    pub fn from_name(name: &str) -> Option<Fixture> {
        let key = name.trim().to_ascii_lowercase();
        let alias = match key.as_str() {
            "hamiltonian" => "h",
            "transformed-hamiltonian" => "uhu",
            "hfw" | "fw" | "fw-hamiltonian" => "h_fw",
            "beta" | "transformed-beta" => "u(1+phi)betau",
            "tempo" => "t",
            "tempo-squared" | "tempo2" | "t²" => "t2",
            "velocity1" => "xdot1",
            "velocity2" => "xdot2",
            "velocity3" => "xdot3",
            "comm" | "commutator" => "[p1,p2]",
            k => k,
        };
        Fixture::all().into_iter().find(|f| f.name().to_ascii_lowercase() == alias)
    }

    pub fn text(&self) -> String {
        match self {
            Fixture::Hamiltonian => format!(
                "m*beta + (1 + phi)*sum(j: alpha[j]*p[j]) + m*beta*phi - 1/4*{CURL_G_SIGMA} - sum(j: g[j]*p[j])"
            ),
            Fixture::TransformedHamiltonian => format!(
                "m*beta + m*beta*phi - 1/4*{CURL_G_SIGMA} - sum(j: g[j]*p[j]) + 1/(2*m)*beta*(1 + phi)*p^2 \
                 - 1/(4*m)*beta*{PHI_CROSS_SIGMA_DOT_P} + 1/(4*m)*beta*{DH_P_SIGMA} + 1/(16*m^2)*{DG_PP_SIGMA}"
            ),
            Fixture::HamiltonianFw => format!(
                "m + m*phi - 1/4*{CURL_G_SIGMA} - sum(j: g[j]*p[j]) + 1/(2*m)*(1 + phi)*p^2 \
                 - 1/(4*m)*{PHI_CROSS_SIGMA_DOT_P} + 1/(4*m)*{DH_P_SIGMA} + 1/(16*m^2)*{DG_PP_SIGMA}"
            ),
            Fixture::TransformedBeta => format!(
                "(1 + phi)*beta - 1/(2*m^2)*beta*(1 + phi)*p^2 + 1/(4*m^2)*beta*{PHI_CROSS_SIGMA_DOT_P} \
                 + 1/(4*m^2)*beta*{DH_SIGMA_P}"
            ),
            Fixture::Tempo => format!(
                "1 + phi - 1/(2*m^2)*(1 + phi)*p^2 + 1/(4*m^2)*{PHI_CROSS_SIGMA_DOT_P} + 1/(4*m^2)*{DH_SIGMA_P}"
            ),
            Fixture::TempoSquared => format!(
                "1 + 2*phi - 1/m^2*(1 + 2*phi)*p^2 + i/m^2*sum(j: D(j,phi)*p[j]) \
                 + 1/(2*m^2)*{PHI_CROSS_SIGMA_DOT_P} + 1/(2*m^2)*{DH_SIGMA_P}"
            ),
            Fixture::Velocity(_) => "-g[i] + 1/m*(1 + phi)*p[i] + 1/(4*m)*sum(j: p[j]*h[i,j] + h[i,j]*p[j]) \
                 - 1/(4*m)*sum(j,k: eps(i,j,k)*D(j,phi)*sigma[k]) \
                 - 1/(4*m)*sum(j,k,l: eps(j,k,l)*D(j,h[i,l])*sigma[k]) \
                 + 1/(16*m^2)*sum(j,k,l: eps(i,j,k)*((D(j,g[l]) + D(l,g[j]))*p[l] + p[l]*(D(j,g[l]) + D(l,g[j])))*sigma[k]) \
                 + 1/(16*m^2)*sum(j,k,l: eps(j,k,l)*((D(j,g[i]) + D(i,g[j]))*p[l] + p[l]*(D(j,g[i]) + D(i,g[j])))*sigma[k])"
                .into(),
            Fixture::MomentumCommutator => "1/2*sum(l: (-D(1,h[2,l]) + D(2,h[1,l]))*d[l])".into(),
        }
    }

    pub fn parse(&self, trunc: Truncation) -> Result<OperatorExpr, ParseError> {
        match self {
            Fixture::Velocity(i) => parse_operator_with(&self.text(), trunc, &[("i", *i)]),
            _ => parse_operator_with(&self.text(), trunc, &[]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for f in Fixture::all() {
            assert_eq!(Fixture::from_name(&f.name()), Some(f));
        }
        assert_eq!(Fixture::from_name("hfw"), Some(Fixture::HamiltonianFw));
        assert_eq!(Fixture::from_name("tempo"), Some(Fixture::Tempo));
        assert_eq!(Fixture::from_name("nope"), None);
    }
}
