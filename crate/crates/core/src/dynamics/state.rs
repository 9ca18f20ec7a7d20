//! Two-component spinor wavefunctions on a grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::evolve::{boundary_probability, SUPPORT_CELLS, SUPPORT_LIMIT};
use super::operator::NumericContext;
use super::DynamicsError;
use crate::geometry::Point;

pub type Spinor = [Vec<Complex64>; 2];

#[derive(Clone, Debug)]
pub struct SpinorGridState {
    pub t: f64,
    pub psi: Spinor,
}

/// Gaussian packet: `|ψ|² ∝ Π exp(−(xₐ−cₐ)²/2wₐ²)` along the active axes,
/// carrier `e^{ik·x}`, spin along `spin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: Point,
    /// Position standard deviation per physical axis.
    pub width: [f64; 3],
    pub momentum: [f64; 3],
    pub spin: [f64; 3],
}

/// `(cos θ/2, e^{iφ} sin θ/2)` for the direction `n = (θ, φ)`.
pub fn spinor_along(n: &[f64; 3]) -> Result<[Complex64; 2], DynamicsError> {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(len > 0.0 && len.is_finite()) {
        return Err(DynamicsError::Config(format!("spin direction {n:?} must be a nonzero vector")));
    }
    let theta = (n[2] / len).clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    Ok([Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)])
}

/// Distance from the packet center to a box edge, in widths, below which
/// initialization is refused.
pub const SUPPORT_WIDTHS: f64 = 6.0;
/// `(|k| + 1/w)·dx` above which the packet is considered unresolved.
pub const MAX_K_DX: f64 = std::f64::consts::FRAC_PI_4;

pub fn init_wavepacket(ctx: &NumericContext, p: &PacketSpec) -> Result<SpinorGridState, DynamicsError> {
    let grid = &ctx.grid;
    for a in grid.spec().axes.iter() {
        let k = a.axis - 1;
        let w = p.width[k];
        if !(w > 0.0 && w.is_finite()) {
            return Err(DynamicsError::Config(format!("packet width along x{} must be > 0", a.axis)));
        }
        if p.center[k] - SUPPORT_WIDTHS * w < a.lo || p.center[k] + SUPPORT_WIDTHS * w > a.hi {
            return Err(DynamicsError::Support(format!(
                "packet ±{SUPPORT_WIDTHS} widths along x{} ([{}, {}]) leaves the grid [{}, {}]",
                a.axis,
                p.center[k] - SUPPORT_WIDTHS * w,
                p.center[k] + SUPPORT_WIDTHS * w,
                a.lo,
                a.hi
            )));
        }
        // carrier plus two standard deviations of the momentum spread 1/2w
        let kdx = (p.momentum[k].abs() + 1.0 / w) * a.spacing();
        if kdx > MAX_K_DX {
            return Err(DynamicsError::Resolution { axis: a.axis, k_dx: kdx });
        }
    }
    let chi = spinor_along(&p.spin)?;
    let active = grid.active_axes().to_vec();
    let env: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let mut e = 0.0;
            let mut phase = 0.0;
            for &k in &active {
                let dx = x[k] - p.center[k];
                e -= dx * dx / (4.0 * p.width[k] * p.width[k]);
                phase += p.momentum[k] * dx;
            }
            Complex64::from_polar(e.exp(), phase)
        })
        .collect();
    let mut s = SpinorGridState { t: 0.0, psi: [env.iter().map(|z| z * chi[0]).collect(), env.iter().map(|z| z * chi[1]).collect()] };
    let norm = ctx.norm(&s).sqrt();
    for c in s.psi.iter_mut() {
        c.iter_mut().for_each(|z| *z /= norm);
    }
    let edge = boundary_probability(ctx, &s, SUPPORT_CELLS);
    if edge > SUPPORT_LIMIT {
        return Err(DynamicsError::Support(format!(
            "initial probability {edge:e} within {SUPPORT_CELLS} cells of the boundary exceeds {SUPPORT_LIMIT:e}"
        )));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spinor_directions() {
        let up = spinor_along(&[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(up[1], Complex64::default());
        let y = spinor_along(&[0.0, 1.0, 0.0]).unwrap();
        // σ_y eigenvector with eigenvalue +1: (1, i)/√2
        assert!((y[1] - Complex64::new(0.0, 1.0) * y[0]).norm() < 1e-15);
        assert!(spinor_along(&[0.0; 3]).is_err());
    }
}
