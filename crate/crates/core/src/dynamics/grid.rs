//! Uniform periodic grids over 1–3 of the spatial axes, with FFT-based
//! derivatives. Absent axes sit at a fixed coordinate and the state is
//! taken to be constant along them.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::DynamicsError;
use crate::geometry::Point;
use crate::opcore::MultiIndex;

/// Points per parallel FFT work item.
const LINE_BATCH: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    /// Physical axis, 1-based (1, 2 or 3).
    pub axis: usize,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl AxisSpec {
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn coordinate(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.spacing()
    }

    /// Angular wavenumber of FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n as i64;
        let j = j as i64;
        let m = if j <= (n - 1) / 2 { j } else { j - n };
        std::f64::consts::TAU * m as f64 / (self.hi - self.lo)
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        self.n % 2 == 0 && j == self.n / 2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
    /// Coordinates of the absent axes (entries of active axes are ignored).
    #[serde(default)]
    pub origin: Point,
}

/// A validated grid with cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    /// physical axis index (0-based) of each grid dimension
    phys: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
    len: usize,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Grid, DynamicsError> {
        if spec.axes.is_empty() || spec.axes.len() > 3 {
            return Err(DynamicsError::Config(format!("grid needs 1 to 3 axes, got {}", spec.axes.len())));
        }
        let mut phys = Vec::new();
        for a in &spec.axes {
            if !(1..=3).contains(&a.axis) {
                return Err(DynamicsError::Config(format!("grid axis must be 1, 2 or 3, got {}", a.axis)));
            }
            if phys.contains(&(a.axis - 1)) {
                return Err(DynamicsError::Config(format!("grid axis {} listed twice", a.axis)));
            }
            if a.n < 8 || !(a.hi > a.lo) {
                return Err(DynamicsError::Config(format!(
                    "axis {}: need n ≥ 8 and hi > lo (n = {}, lo = {}, hi = {})",
                    a.axis, a.n, a.lo, a.hi
                )));
            }
            phys.push(a.axis - 1);
        }
        let mut planner = FftPlanner::new();
        let fwd = spec.axes.iter().map(|a| planner.plan_fft_forward(a.n)).collect();
        let inv = spec.axes.iter().map(|a| planner.plan_fft_inverse(a.n)).collect();
        let len = spec.axes.iter().map(|a| a.n).product();
        Ok(Grid { spec, phys, fwd, inv, len })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> usize {
        self.spec.axes.len()
    }

    /// 0-based physical axes that are resolved by the grid.
    pub fn active_axes(&self) -> &[usize] {
        &self.phys
    }

    pub fn is_active(&self, phys_axis: usize) -> bool {
        self.phys.contains(&phys_axis)
    }

    pub fn axis_of(&self, phys_axis: usize) -> Option<&AxisSpec> {
        self.phys.iter().position(|&p| p == phys_axis).map(|d| &self.spec.axes[d])
    }

    pub fn cell_volume(&self) -> f64 {
        self.spec.axes.iter().map(AxisSpec::spacing).product()
    }

    /// Per-dimension indices of flat index `idx` (row-major, last axis fastest).
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for d in (0..self.dims()).rev() {
            let n = self.spec.axes[d].n;
            out[d] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Point {
        let ix = self.unravel(idx);
        let mut x = self.spec.origin;
        for (d, a) in self.spec.axes.iter().enumerate() {
            x[a.axis - 1] = a.coordinate(ix[d]);
        }
        x
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len).map(|i| self.point(i)).collect()
    }

    /// Whether flat index `idx` lies within `cells` cells of a box edge.
    pub fn near_boundary(&self, idx: usize, cells: usize) -> bool {
        let ix = self.unravel(idx);
        self.spec.axes.iter().enumerate().any(|(d, a)| ix[d] < cells || ix[d] + cells >= a.n)
    }

    fn stride(&self, d: usize) -> usize {
        self.spec.axes[d + 1..].iter().map(|a| a.n).product()
    }

    fn transform_axis(&self, data: &mut [Complex64], d: usize, inverse: bool) {
        let n = self.spec.axes[d].n;
        let stride = self.stride(d);
        let plan = if inverse { &self.inv[d] } else { &self.fwd[d] };
        // batches of contiguous lines, processed in parallel
        let lines_per_batch = (LINE_BATCH / n).max(1);
        let run = |buf: &mut [Complex64]| {
            buf.par_chunks_mut(n * lines_per_batch).for_each(|c| plan.process(c));
        };
        if stride == 1 {
            run(data);
            return;
        }
        // gather each block's columns into contiguous lines, transform, scatter
        let block = n * stride;
        let mut t = vec![Complex64::default(); data.len()];
        t.par_chunks_mut(block).zip(data.par_chunks(block)).for_each(|(tb, db)| {
            for j in 0..n {
                for off in 0..stride {
                    tb[off * n + j] = db[j * stride + off];
                }
            }
        });
        run(&mut t);
        data.par_chunks_mut(block).zip(t.par_chunks(block)).for_each(|(db, tb)| {
            for j in 0..n {
                for off in 0..stride {
                    db[j * stride + off] = tb[off * n + j];
                }
            }
        });
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        for d in 0..self.dims() {
            self.transform_axis(data, d, false);
        }
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        for d in 0..self.dims() {
            self.transform_axis(data, d, true);
        }
        let s = 1.0 / self.len as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// Fourier multiplier of `∂^α` (physical multi-index) at flat bin `idx`;
    /// zero if `α` involves an absent axis. Odd orders vanish at Nyquist so
    /// that real data keep real derivatives.
    pub fn derivative_symbol(&self, alpha: &MultiIndex, idx: usize) -> Complex64 {
        let ix = self.unravel(idx);
        let mut s = Complex64::new(1.0, 0.0);
        for (p, &order) in alpha.iter().enumerate() {
            if order == 0 {
                continue;
            }
            let Some(d) = self.phys.iter().position(|&q| q == p) else {
                return Complex64::default();
            };
            let a = &self.spec.axes[d];
            if order % 2 == 1 && a.is_nyquist(ix[d]) {
                return Complex64::default();
            }
            s *= Complex64::new(0.0, a.wavenumber(ix[d])).powu(order as u32);
        }
        s
    }

    /// `|k|²` at flat bin `idx` over the active axes.
    pub fn k_squared(&self, idx: usize) -> f64 {
        let ix = self.unravel(idx);
        self.spec.axes.iter().enumerate().map(|(d, a)| a.wavenumber(ix[d]).powi(2)).sum()
    }

    /// Largest representable `|k|` along any axis.
    pub fn k_max(&self) -> f64 {
        self.spec.axes.iter().map(|a| std::f64::consts::PI / a.spacing()).fold(0.0, f64::max)
    }

    /// `∂^α f` for data given on the grid.
    pub fn derivative(&self, f: &[Complex64], alpha: &MultiIndex) -> Vec<Complex64> {
        let mut g = f.to_vec();
        self.forward(&mut g);
        for (i, z) in g.iter_mut().enumerate() {
            *z *= self.derivative_symbol(alpha, i);
        }
        self.inverse(&mut g);
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> Grid {
        Grid::new(GridSpec {
            axes: vec![
                AxisSpec { axis: 1, n: 32, lo: -4.0, hi: 4.0 },
                AxisSpec { axis: 3, n: 16, lo: 0.0, hi: 2.0 },
            ],
            origin: [0.0, 7.0, 0.0],
        })
        .unwrap()
    }

    #[test]
    fn points_and_layout() {
        let g = grid2();
        assert_eq!(g.len(), 512);
        assert_eq!(g.point(0), [-4.0, 7.0, 0.0]);
        assert_eq!(g.point(1), [-4.0, 7.0, 0.125]);
        assert_eq!(g.point(16), [-3.75, 7.0, 0.0]);
        assert!(g.near_boundary(0, 2) && !g.near_boundary(16 * 10 + 8, 2));
    }

    #[test]
    fn fourier_modes_are_exact() {
        let g = grid2();
        let (k1, k3) = (std::f64::consts::TAU * 3.0 / 8.0, std::f64::consts::TAU * 2.0 / 2.0);
        let f: Vec<Complex64> = g.points().iter().map(|x| Complex64::new(0.0, k1 * x[0] + k3 * x[2]).exp()).collect();
        let d1 = g.derivative(&f, &[1, 0, 0]);
        let d33 = g.derivative(&f, &[0, 0, 2]);
        let d13 = g.derivative(&f, &[1, 0, 1]);
        for i in 0..g.len() {
            assert!((d1[i] - Complex64::new(0.0, k1) * f[i]).norm() < 1e-12);
            assert!((d33[i] + k3 * k3 * f[i]).norm() < 1e-11);
            assert!((d13[i] + k1 * k3 * f[i]).norm() < 1e-11);
        }
        // absent axis: state constant along x2
        assert!(g.derivative(&f, &[0, 1, 0]).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Grid::new(GridSpec { axes: vec![], origin: [0.0; 3] }).is_err());
        let a = AxisSpec { axis: 2, n: 16, lo: 0.0, hi: 1.0 };
        assert!(Grid::new(GridSpec { axes: vec![a, a], origin: [0.0; 3] }).is_err());
        assert!(Grid::new(GridSpec { axes: vec![AxisSpec { axis: 4, ..a }], origin: [0.0; 3] }).is_err());
    }
}
