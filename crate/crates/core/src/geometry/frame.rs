//! Pointwise frame data and the coefficient form of the curved-space Dirac
//! equation `iγʲvⱼᵘD_μψ − mψ = 0`.

use nalgebra::{Matrix3, Matrix4};
use num_complex::Complex64;
use serde::Serialize;

use super::{GeometryError, MetricModel, Point};
use crate::fw::lorentz::{to_nalgebra, CMat4};
use crate::opcore::dirac::gamma_matrix;
use crate::opcore::Gamma;

pub type Real4 = [[f64; 4]; 4];

const ETA: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

/// Frame quantities at one point, all to linear order in `h` except the two
/// determinants, which are exact.
#[derive(Clone, Debug, Serialize)]
pub struct FrameData {
    pub point: Point,
    /// `g_{μν}`
    pub metric: Real4,
    /// `vᵢᵘ`, row `i` (frame), column `μ` (coordinate).
    pub vierbein: Real4,
    /// `{^λ_{νμ}}` indexed `[λ][ν][μ]`.
    pub christoffel: [Real4; 4],
    /// `ω_{ij,μ}` indexed `[i][j][μ]`.
    pub spin_connection: [Real4; 4],
    /// `√(−det g_{μν})`
    pub sqrt_g: f64,
    /// `√(−det g_{ij})` over the spatial block.
    pub sqrt_spatial_g: f64,
}

/// Linear-order vierbein: identity plus the `h`-dependent layout.
fn vierbein_linear(h: &Real4) -> Real4 {
    let mut v = [[0.0; 4]; 4];
    v[0][0] = -h[0][0] / 2.0;
    for k in 1..4 {
        v[0][k] = h[0][k];
        for j in 1..4 {
            v[k][j] = h[k][j] / 2.0;
        }
    }
    v
}

fn with_identity(mut v: Real4) -> Real4 {
    for (i, row) in v.iter_mut().enumerate() {
        row[i] += 1.0;
    }
    v
}

pub fn frame_at(model: &MetricModel, x: &Point) -> Result<FrameData, GeometryError> {
    model.admissibility(x)?;
    let h = model.h_at(x);
    let dh3 = model.dh_at(x);
    // static: ∂₀ = 0
    let dh = |mu: usize, a: usize, b: usize| if mu == 0 { 0.0 } else { dh3[mu - 1][a][b] };

    let metric: Real4 = std::array::from_fn(|m| std::array::from_fn(|n| if m == n { ETA[m] } else { 0.0 } + h[m][n]));
    let vierbein = with_identity(vierbein_linear(&h));

    let mut christoffel = [[[0.0; 4]; 4]; 4];
    for (l, gl) in christoffel.iter_mut().enumerate() {
        for nu in 0..4 {
            for mu in 0..4 {
                gl[nu][mu] = 0.5 * ETA[l] * (dh(nu, l, mu) + dh(mu, l, nu) - dh(l, nu, mu));
            }
        }
    }

    // ω_{ij,μ} = vᵢᵛ(∂_μ v_{jν} − Γ^λ_{νμ} v_{jλ}), with v_{jν} = g_{νρ}vⱼᵖ and
    // every product of two O(h) factors dropped
    let mut omega = [[[0.0; 4]; 4]; 4];
    for mu in 0..4 {
        let dv = if mu == 0 { [[0.0; 4]; 4] } else { vierbein_linear(&dh3[mu - 1]) };
        for i in 0..4 {
            for j in 0..4 {
                // ∂_μ v_{ji} = η_{iρ}∂_μ vⱼᵖ + ∂_μ h_{ij}
                let d_lower = ETA[i] * dv[j][i] + dh(mu, i, j);
                let gamma_lower = ETA[j] * christoffel[j][i][mu];
                omega[i][j][mu] = d_lower - gamma_lower;
            }
        }
    }

    let g4 = Matrix4::from_fn(|r, c| metric[r][c]);
    let g3 = Matrix3::from_fn(|r, c| metric[r + 1][c + 1]);
    Ok(FrameData {
        point: *x,
        metric,
        vierbein,
        christoffel,
        spin_connection: omega,
        sqrt_g: (-g4.determinant()).sqrt(),
        sqrt_spatial_g: (-g3.determinant()).sqrt(),
    })
}

impl FrameData {
    /// `max |vᵢᵘvⱼᵛg_{μν} − η_{ij}|`
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for mu in 0..4 {
                    for nu in 0..4 {
                        s += self.vierbein[i][mu] * self.vierbein[j][nu] * self.metric[mu][nu];
                    }
                }
                let eta = if i == j { ETA[i] } else { 0.0 };
                worst = worst.max((s - eta).abs());
            }
        }
        worst
    }

    /// `max |ω_{ij,μ} + ω_{ji,μ}|`
    pub fn spin_connection_symmetric_part(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                for mu in 0..4 {
                    worst = worst.max((self.spin_connection[i][j][mu] + self.spin_connection[j][i][mu]).abs());
                }
            }
        }
        worst
    }
}

/// `H = Σₖ Cᵏ(−i∂ₖ) + C₀` at a point, from `i A^μ ∂_μ ψ + B ψ − mψ = 0`.
#[derive(Clone, Debug)]
pub struct DiracCoefficientTable {
    pub point: Point,
    /// `A^μ = γʲvⱼᵘ`
    pub a: [CMat4; 4],
    /// `B = (i/2)γʲvⱼᵘω_{kl,μ}S^{kl}`
    pub b: CMat4,
    /// `Cᵏ = (A⁰)⁻¹Aᵏ`
    pub momentum: [CMat4; 3],
    /// `C₀ = (A⁰)⁻¹(m − B)`
    pub constant: CMat4,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `S^{ij} = ¼[γⁱ, γʲ]`
fn lorentz_generator(i: usize, j: usize) -> CMat4 {
    let gi = to_nalgebra(&gamma_matrix(i));
    let gj = to_nalgebra(&gamma_matrix(j));
    (gi * gj - gj * gi) * c(0.25)
}

pub fn assemble_dirac_hamiltonian(model: &MetricModel, x: &Point, mass: f64) -> Result<DiracCoefficientTable, GeometryError> {
    let f = frame_at(model, x)?;
    let gammas: Vec<CMat4> = (0..4).map(|mu| to_nalgebra(&gamma_matrix(mu))).collect();
    let a: [CMat4; 4] = std::array::from_fn(|mu| {
        (0..4).fold(CMat4::zeros(), |acc, j| acc + gammas[j] * c(f.vierbein[j][mu]))
    });
    let mut b = CMat4::zeros();
    for mu in 0..4 {
        let mut conn = CMat4::zeros();
        for k in 0..4 {
            for l in 0..4 {
                conn += lorentz_generator(k, l) * c(f.spin_connection[k][l][mu]);
            }
        }
        b += a[mu] * conn;
    }
    b *= Complex64::new(0.0, 0.5);
    let a0_inv = a[0].try_inverse().ok_or_else(|| GeometryError::Inadmissible {
        point: *x,
        reason: "A⁰ is singular".into(),
    })?;
    let momentum = std::array::from_fn(|k| a0_inv * a[k + 1]);
    let constant = a0_inv * (CMat4::identity() * c(mass) - b);
    Ok(DiracCoefficientTable { point: *x, a, b, momentum, constant })
}

/// Coefficients of `mβ + (1+φ)α·p + mβφ − ¼(∇×g)·Σ − g·p` with
/// `pⱼ = −i(δⱼₖ + hⱼₖ/2)∂ₖ − (i/8)∂ⱼh`, in the same `(Cᵏ, C₀)` layout.
pub fn printed_hamiltonian(model: &MetricModel, x: &Point, mass: f64) -> ([CMat4; 3], CMat4) {
    use crate::opcore::FieldBase;
    let val = |b: FieldBase| model.field(b).eval(x);
    let dval = |b: FieldBase, k: usize| model.field(b).partial(k).eval(x);
    let phi = val(FieldBase::Phi);
    let g: [f64; 3] = std::array::from_fn(|j| val(FieldBase::g(j)));
    let alpha: [CMat4; 3] = std::array::from_fn(|j| to_nalgebra(&Gamma::alpha(j).matrix()));
    let sigma: [CMat4; 3] = std::array::from_fn(|j| to_nalgebra(&Gamma::sigma(j).matrix()));
    let beta = to_nalgebra(&Gamma::BETA.matrix());
    let one = CMat4::identity();

    // multiplier of pⱼ: (1+φ)αⱼ − gⱼ
    let p_coef: [CMat4; 3] = std::array::from_fn(|j| alpha[j] * c(1.0 + phi) - one * c(g[j]));
    let momentum = std::array::from_fn(|k| {
        (0..3).fold(CMat4::zeros(), |acc, j| {
            let d = if j == k { 1.0 } else { 0.0 };
            acc + p_coef[j] * c(d + val(FieldBase::h(j, k)) / 2.0)
        })
    });
    let mut constant = beta * c(mass * (1.0 + phi));
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let curl = dval(FieldBase::g(j), i) - dval(FieldBase::g(i), j);
        constant -= sigma[k] * c(0.25 * curl);
        constant += p_coef[k] * Complex64::new(0.0, -dval(FieldBase::Trace, k) / 8.0);
    }
    (momentum, constant)
}

impl DiracCoefficientTable {
    /// Largest matrix-element difference from the printed Hamiltonian.
    pub fn printed_difference(&self, model: &MetricModel, mass: f64) -> f64 {
        let (mom, cst) = printed_hamiltonian(model, &self.point, mass);
        let mut worst = (self.constant - cst).camax();
        for k in 0..3 {
            worst = worst.max((self.momentum[k] - mom[k]).camax());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn models() -> Vec<MetricModel> {
        let d = Domain::cube(10.0);
        vec![
            make_field(&FamilyParams::PointMass { mass: 0.02, center: [0.0; 3] }, 1.0, d, DEFAULT_CAP).unwrap(),
            make_field(
                &FamilyParams::GravitomagneticDipole { spin: [0.3, -0.2, 1.0], kappa: 0.02, center: [0.0; 3] },
                1.0,
                d,
                DEFAULT_CAP,
            )
            .unwrap(),
            make_field(
                &FamilyParams::HarmonicPolynomial {
                    phi: ScalarField::parse_polynomial("0.001*x3 + 1e-4*x1*x2").unwrap(),
                    g: Some([
                        ScalarField::parse_polynomial("0.001*x2").unwrap(),
                        ScalarField::parse_polynomial("-0.001*x1").unwrap(),
                        ScalarField::zero(),
                    ]),
                    h: None,
                },
                0.0,
                d,
                DEFAULT_CAP,
            )
            .unwrap_or_else(|e| panic!("{e}")),
        ]
    }

    #[test]
    fn flat_frame() {
        let m = MetricModel::flat(Domain::cube(1.0));
        let f = frame_at(&m, &[0.1, 0.2, 0.3]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(f.vierbein[i][j], if i == j { 1.0 } else { 0.0 });
                for mu in 0..4 {
                    assert_eq!(f.spin_connection[i][j][mu], 0.0);
                    assert_eq!(f.christoffel[i][j][mu], 0.0);
                }
            }
        }
        let t = assemble_dirac_hamiltonian(&m, &[0.0; 3], 2.0).unwrap();
        let beta = to_nalgebra(&Gamma::BETA.matrix());
        assert!((t.constant - beta * c(2.0)).camax() < 1e-15);
        for k in 0..3 {
            assert!((t.momentum[k] - to_nalgebra(&Gamma::alpha(k).matrix())).camax() < 1e-15);
        }
    }

    #[test]
    fn point_mass_vierbein_entries() {
        let m = &models()[0];
        let x = [3.0, 0.0, 0.0];
        let f = frame_at(m, &x).unwrap();
        let phi = -0.02 / 3.0;
        assert!((f.vierbein[0][0] - (1.0 - phi)).abs() < 1e-16);
        assert!((f.vierbein[1][1] - (1.0 + phi)).abs() < 1e-16);
    }

    #[test]
    fn frame_invariants_hold_to_linear_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in models() {
            let cap = m.cap();
            for x in sample_domain(&m, 100, &mut rng) {
                let f = frame_at(&m, &x).unwrap();
                assert!(f.orthonormality_defect() <= 10.0 * cap * cap);
                assert!(f.spin_connection_symmetric_part() < 1e-15);
                let phi = m.field(crate::opcore::FieldBase::Phi).eval(&x);
                assert!((f.sqrt_g - (1.0 + phi) * f.sqrt_spatial_g).abs() <= 10.0 * cap * cap);
            }
        }
    }

    #[test]
    fn assembled_hamiltonian_matches_printed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in models() {
            let cap = m.cap();
            for x in sample_domain(&m, 20, &mut rng) {
                let t = assemble_dirac_hamiltonian(&m, &x, 1.0).unwrap();
                let d = t.printed_difference(&m, 1.0);
                assert!(d <= 10.0 * cap * cap, "{:?} at {x:?}: {d:e}", m.family());
            }
        }
    }

    /// The printed form agrees at linear order: scaling every field by ε
    /// shrinks the difference like ε².
    #[test]
    fn printed_difference_is_second_order() {
        let d = Domain::cube(10.0);
        let x = [1.7, -2.2, 1.1];
        let diff = |eps: f64| {
            let pm = make_field(&FamilyParams::PointMass { mass: 0.02 * eps, center: [0.0; 3] }, 1.0, d, DEFAULT_CAP).unwrap();
            let dp = make_field(
                &FamilyParams::GravitomagneticDipole { spin: [0.3, -0.2, 1.0], kappa: 0.02 * eps, center: [0.0; 3] },
                1.0,
                d,
                DEFAULT_CAP,
            )
            .unwrap();
            let m = pm.superpose(&dp).unwrap();
            assemble_dirac_hamiltonian(&m, &x, 1.0).unwrap().printed_difference(&m, 1.0)
        };
        let (d1, d2) = (diff(1.0), diff(0.1));
        assert!(d1 > 0.0);
        let ratio = d2 / d1;
        assert!((ratio - 0.01).abs() < 0.002, "ratio {ratio}, d1 {d1:e}");
    }

    #[test]
    fn superposed_vierbein_is_affine() {
        let ms = models();
        let s = ms[0].superpose(&ms[1]).unwrap();
        let x = [2.0, -3.0, 1.5];
        let (fa, fb, fs) = (frame_at(&ms[0], &x).unwrap(), frame_at(&ms[1], &x).unwrap(), frame_at(&s, &x).unwrap());
        for i in 0..4 {
            for mu in 0..4 {
                let flat = if i == mu { 1.0 } else { 0.0 };
                assert!((fs.vierbein[i][mu] - (fa.vierbein[i][mu] + fb.vierbein[i][mu] - flat)).abs() < 1e-15);
                for j in 0..4 {
                    let w = fa.spin_connection[i][j][mu] + fb.spin_connection[i][j][mu];
                    assert!((fs.spin_connection[i][j][mu] - w).abs() < 1e-16);
                }
            }
        }
    }
}
