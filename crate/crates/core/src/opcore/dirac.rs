//! The 16-element basis of 4×4 Dirac matrices in the Dirac representation.
//!
//! Element `4a + b` is `ρ_a ⊗ σ_b`, where `ρ` acts on the large/small block
//! index and `σ` on spin (both Pauli sets with `ρ₀ = σ₀ = 1`). Then
//! `β = ρ₃⊗1`, `αₖ = ρ₁⊗σₖ`, `Σₖ = 1⊗σₖ`, `γ⁵ = ρ₁⊗1`. Every element is
//! Hermitian and unitary, and the product of two elements is a phase in
//! `{±1, ±i}` times an element. The table is built once from the explicit
//! matrices.

use std::sync::LazyLock;

use num_complex::Complex64;

pub type Mat4 = [[Complex64; 4]; 4];
pub type Mat2 = [[Complex64; 2]; 2];

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Gamma(pub u8);

impl Gamma {
    pub const ONE: Gamma = Gamma(0);
    pub const BETA: Gamma = Gamma(12);
    pub const GAMMA5: Gamma = Gamma(4);

    pub fn new(block: u8, spin: u8) -> Self {
        assert!(block < 4 && spin < 4);
        Gamma(block * 4 + spin)
    }

    pub fn alpha(k: usize) -> Self {
        Gamma::new(1, k as u8 + 1)
    }

    pub fn sigma(k: usize) -> Self {
        Gamma::new(0, k as u8 + 1)
    }

    pub fn block(self) -> u8 {
        self.0 / 4
    }

    pub fn spin(self) -> u8 {
        self.0 % 4
    }

    /// Commutes with β.
    pub fn is_even(self) -> bool {
        matches!(self.block(), 0 | 3)
    }

    /// Acts only on spin (a two-component operator).
    pub fn is_pauli(self) -> bool {
        self.block() == 0
    }

    /// Upper-left 2×2 block of an even element: β's upper block is +1.
    pub fn upper_block(self) -> Option<Gamma> {
        self.is_even().then(|| Gamma::new(0, self.spin()))
    }

    /// `self · other = i^phase · result`.
    pub fn mul(self, other: Gamma) -> (u8, Gamma) {
        TABLE.product[self.0 as usize][other.0 as usize]
    }

    /// `self† = i^phase · result`.
    pub fn adjoint(self) -> (u8, Gamma) {
        TABLE.adjoint[self.0 as usize]
    }

    pub fn matrix(self) -> Mat4 {
        kron(&pauli(self.block()), &pauli(self.spin()))
    }

    /// DSL word for this element and the phase `p` with `element = i^p · word`.
    pub fn word(self) -> (u8, String) {
        let k = self.spin();
        match (self.block(), k) {
            (0, 0) => (0, String::new()),
            (0, k) => (0, format!("sigma{k}")),
            (1, 0) => (0, "gamma5".into()),
            (1, k) => (0, format!("alpha{k}")),
            // ρ₂ = −i ρ₃ρ₁
            (2, 0) => (3, "beta*gamma5".into()),
            (2, k) => (3, format!("beta*alpha{k}")),
            (3, 0) => (0, "beta".into()),
            (_, k) => (0, format!("beta*sigma{k}")),
        }
    }

    pub fn all() -> impl Iterator<Item = Gamma> {
        (0..16).map(Gamma)
    }
}

struct Table {
    product: [[(u8, Gamma); 16]; 16],
    adjoint: [(u8, Gamma); 16],
}

static TABLE: LazyLock<Table> = LazyLock::new(build_table);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrix `σ_k`, with `σ₀ = 1`.
pub fn pauli(k: u8) -> Mat2 {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
        3 => [[o, z], [z, -o]],
        _ => panic!("pauli index {k} out of range"),
    }
}

fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = [[c(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    m
}

pub fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn dagger(a: &Mat4) -> Mat4 {
    let mut m = [[c(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a[j][i].conj();
        }
    }
    m
}

/// Decomposes a matrix known to be `phase × basis element`.
fn identify(m: &Mat4) -> (u8, Gamma) {
    for g in Gamma::all() {
        let e = g.matrix();
        // tr(E† M) / 4
        let mut t = c(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                t += e[i][j].conj() * m[i][j];
            }
        }
        t /= 4.0;
        if t.norm() > 0.5 {
            let phase = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
                .iter()
                .position(|p| (p - t).norm() < 1e-12)
                .expect("basis product is not a unit phase");
            return (phase as u8, g);
        }
    }
    panic!("matrix is not proportional to a basis element")
}

fn build_table() -> Table {
    let mut product = [[(0u8, Gamma::ONE); 16]; 16];
    let mut adjoint = [(0u8, Gamma::ONE); 16];
    for a in Gamma::all() {
        let ma = a.matrix();
        adjoint[a.0 as usize] = identify(&dagger(&ma));
        for b in Gamma::all() {
            product[a.0 as usize][b.0 as usize] = identify(&matmul(&ma, &b.matrix()));
        }
    }
    Table { product, adjoint }
}

/// Dirac gamma matrices `γ⁰ = β`, `γᵏ = βαₖ`.
pub fn gamma_matrix(mu: usize) -> Mat4 {
    let beta = Gamma::BETA.matrix();
    if mu == 0 {
        beta
    } else {
        matmul(&beta, &Gamma::alpha(mu - 1).matrix())
    }
}
