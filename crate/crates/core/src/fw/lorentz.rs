//! Spinor representation of Lorentz transformations and the space of 4×4
//! matrices `D` whose bilinear `ψ†Dψ` is invariant, i.e. `S†DS = D`.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use crate::opcore::dirac::{gamma_matrix, Mat4};
use crate::opcore::Gamma;

pub type CMat4 = Matrix4<Complex64>;

/// Singular values at or below this are counted as zero.
pub const NULLSPACE_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LorentzElement {
    Boost { axis: usize, rapidity: f64 },
    Rotation { axis: usize, angle: f64 },
    Parity,
}

pub fn to_nalgebra(m: &Mat4) -> CMat4 {
    CMat4::from_fn(|r, c| m[r][c])
}

impl LorentzElement {
    /// Spinor matrix `S` with `ψ'(x') = Sψ(x)`.
    pub fn spinor(&self) -> CMat4 {
        match *self {
            LorentzElement::Boost { axis, rapidity } => {
                (to_nalgebra(&Gamma::alpha(axis).matrix()) * Complex64::new(0.5 * rapidity, 0.0)).exp()
            }
            LorentzElement::Rotation { axis, angle } => {
                (to_nalgebra(&Gamma::sigma(axis).matrix()) * Complex64::new(0.0, -0.5 * angle)).exp()
            }
            LorentzElement::Parity => to_nalgebra(&Gamma::BETA.matrix()),
        }
    }

    /// Vector representation `Λ^μ_ν` on `(t, x, y, z)`.
    pub fn vector(&self) -> nalgebra::Matrix4<f64> {
        let mut l = nalgebra::Matrix4::<f64>::identity();
        match *self {
            LorentzElement::Boost { axis, rapidity } => {
                let k = axis + 1;
                let (c, s) = (rapidity.cosh(), rapidity.sinh());
                l[(0, 0)] = c;
                l[(k, k)] = c;
                l[(0, k)] = s;
                l[(k, 0)] = s;
            }
            LorentzElement::Rotation { axis, angle } => {
                let (a, b) = ((axis + 1) % 3 + 1, (axis + 2) % 3 + 1);
                let (c, s) = (angle.cos(), angle.sin());
                l[(a, a)] = c;
                l[(b, b)] = c;
                l[(a, b)] = -s;
                l[(b, a)] = s;
            }
            LorentzElement::Parity => {
                for k in 1..4 {
                    l[(k, k)] = -1.0;
                }
            }
        }
        l
    }

    /// Largest entry of `S⁻¹γᵘS − Λᵘ_ν γᵛ` over μ.
    pub fn covariance_defect(&self) -> f64 {
        let s = self.spinor();
        let s_inv = s.try_inverse().expect("spinor matrices are invertible");
        let lam = self.vector();
        let gammas: Vec<CMat4> = (0..4).map(|mu| to_nalgebra(&gamma_matrix(mu))).collect();
        let mut worst: f64 = 0.0;
        for mu in 0..4 {
            let lhs = s_inv * gammas[mu] * s;
            let mut rhs = CMat4::zeros();
            for nu in 0..4 {
                rhs += gammas[nu] * Complex64::new(lam[(mu, nu)], 0.0);
            }
            worst = worst.max((lhs - rhs).camax());
        }
        worst
    }

    /// Rotations about each axis at generic angles.
    pub fn rotations() -> Vec<LorentzElement> {
        [0.7, 1.3, 2.1].iter().enumerate().map(|(axis, &angle)| LorentzElement::Rotation { axis, angle }).collect()
    }

    /// Boosts along each axis at generic rapidities.
    pub fn boosts() -> Vec<LorentzElement> {
        [0.4, 0.9, 0.25].iter().enumerate().map(|(axis, &rapidity)| LorentzElement::Boost { axis, rapidity }).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceSpace {
    pub dimension: usize,
    /// Orthonormal basis (Frobenius) of the solution space, row-major.
    #[serde(skip)]
    pub basis: Vec<CMat4>,
    pub singular_values: Vec<f64>,
    pub threshold: f64,
    /// For a one-dimensional space: distance of the normalized basis matrix
    /// from `β` after removing the overall phase.
    pub distance_from_beta: Option<f64>,
    /// A solution space wider than one dimension means the sample did not
    /// pin the bilinear down.
    pub conclusive: bool,
    /// Hermitian members of a one-dimensional complex span are its real
    /// multiples; recorded separately from the complex solve.
    pub hermiticity_note: &'static str,
}

/// Solves `S†DS = D` for all sampled elements simultaneously via the SVD of
/// the stacked linear map `vec(D) ↦ vec(S†DS − D)`.
pub fn beta_invariance_space(elements: &[LorentzElement]) -> InvarianceSpace {
    let rows = 16 * elements.len().max(1);
    let mut a = DMatrix::<Complex64>::zeros(rows, 16);
    for (n, el) in elements.iter().enumerate() {
        let s = el.spinor();
        let sd = s.adjoint();
        for col in 0..16 {
            let mut d = CMat4::zeros();
            d[(col / 4, col % 4)] = Complex64::new(1.0, 0.0);
            let img = sd * d * s - d;
            for r in 0..16 {
                a[(16 * n + r, col)] = img[(r / 4, r % 4)];
            }
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut basis = Vec::new();
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv <= NULLSPACE_THRESHOLD {
            // null vectors are conjugated rows of Vᴴ
            basis.push(CMat4::from_fn(|r, c| v_t[(i, 4 * r + c)].conj()));
        }
    }
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let distance_from_beta = (basis.len() == 1).then(|| {
        let d = basis[0];
        let beta = to_nalgebra(&Gamma::BETA.matrix());
        // overlap with β fixes the phase; ‖β‖_F = 2
        let overlap: Complex64 = (beta.adjoint() * d).trace() / Complex64::new(4.0, 0.0);
        let aligned = d / overlap;
        (aligned - beta).camax()
    });
    InvarianceSpace {
        dimension: basis.len(),
        singular_values,
        threshold: NULLSPACE_THRESHOLD,
        conclusive: basis.len() == 1,
        basis,
        distance_from_beta,
        hermiticity_note: "complex solution space; requiring D = D† restricts span{beta} to real multiples",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spinor_matrices_are_covariant() {
        let mut all = LorentzElement::rotations();
        all.extend(LorentzElement::boosts());
        all.push(LorentzElement::Parity);
        for el in all {
            assert!(el.covariance_defect() < 1e-12, "{el:?}: {}", el.covariance_defect());
        }
    }

    #[test]
    fn identity_only_leaves_everything_invariant() {
        let s = beta_invariance_space(&[LorentzElement::Rotation { axis: 0, angle: 0.0 }]);
        assert_eq!(s.dimension, 16);
    }

    #[test]
    fn rotations_leave_four_block_matrices() {
        let s = beta_invariance_space(&LorentzElement::rotations());
        assert_eq!(s.dimension, 4);
        // every solution commutes with all Σ_k
        for d in &s.basis {
            for k in 0..3 {
                let sig = to_nalgebra(&Gamma::sigma(k).matrix());
                assert!((sig * d - d * sig).camax() < 1e-9);
            }
        }
    }

    #[test]
    fn boosts_and_parity_single_out_beta() {
        let mut els = LorentzElement::rotations();
        els.extend(LorentzElement::boosts());
        assert_eq!(beta_invariance_space(&els).dimension, 2);
        els.push(LorentzElement::Parity);
        let s = beta_invariance_space(&els);
        assert_eq!(s.dimension, 1);
        assert!(s.distance_from_beta.unwrap() < 1e-10);
    }
}
