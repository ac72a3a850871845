//! Uniform periodic grids and the shared Fourier convention.
//!
//! Every axis uses `<x|p> = e^{ixp} / sqrt(2 pi)`. The forward transform to
//! momentum therefore carries the kernel `e^{-ipx}` and the scaling
//! `h / sqrt(2 pi)`, which makes it unitary for the spacing-weighted norms
//! used throughout the crate. Momenta are stored in DFT order but take values
//! in the symmetric range `m in {-n/2, ..., n/2 - 1}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the sample points sit inside each cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `x_j = x_min + j h`
    #[default]
    Node,
    /// `x_j = x_min + (j + 1/2) h`; on a symmetric box no sample lands on zero.
    Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    x_min: f64,
    x_max: f64,
    spacing: f64,
    #[serde(default)]
    centering: Centering,
}

/// Builds a node-centred periodic grid on `[x_min, x_max)`.
pub fn make_grid(n: usize, x_min: f64, x_max: f64) -> Result<Grid1D> {
    Grid1D::new(n, x_min, x_max, Centering::Node)
}

impl Grid1D {
    pub fn new(n: usize, x_min: f64, x_max: f64, centering: Centering) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {n}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "empty domain [{x_min}, {x_max})"
            )));
        }
        Ok(Self {
            n,
            x_min,
            x_max,
            spacing: (x_max - x_min) / n as f64,
            centering,
        })
    }

    /// Symmetric box `[-half_width, half_width)`.
    pub fn symmetric(n: usize, half_width: f64, centering: Centering) -> Result<Self> {
        Self::new(n, -half_width, half_width, centering)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Spacing of the conjugate (momentum) grid, `2 pi / L`.
    pub fn momentum_spacing(&self) -> f64 {
        2.0 * PI / self.length()
    }

    fn offset(&self) -> f64 {
        match self.centering {
            Centering::Node => 0.0,
            Centering::Cell => 0.5,
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + self.offset()) * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed integer wavenumber stored at DFT index `i`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn momentum(&self, i: usize) -> f64 {
        self.wavenumber(i) as f64 * self.momentum_spacing()
    }

    /// Momentum values in DFT order.
    pub fn momentum_values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.momentum(i)).collect()
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.spacing - self.offset()).round();
        j.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    ToMomentum,
    ToPosition,
}

/// Cached FFT plus phase tables for one grid.
pub(crate) struct LineTransform {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    // e^{-i p_m x_0} * h / sqrt(2 pi)
    fwd_phase: Vec<C64>,
    // e^{+i p_m x_0} * dp / sqrt(2 pi)
    inv_phase: Vec<C64>,
}

impl LineTransform {
    pub(crate) fn new(grid: &Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.n();
        let x0 = grid.point(0);
        let norm_f = grid.spacing() / (2.0 * PI).sqrt();
        let norm_i = grid.momentum_spacing() / (2.0 * PI).sqrt();
        let fwd_phase = (0..n)
            .map(|m| C64::from_polar(norm_f, -grid.momentum(m) * x0))
            .collect();
        let inv_phase = (0..n)
            .map(|m| C64::from_polar(norm_i, grid.momentum(m) * x0))
            .collect();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            fwd_phase,
            inv_phase,
        }
    }

    /// Transforms one contiguous line in place.
    pub(crate) fn apply(&self, line: &mut [C64], dir: Direction) {
        match dir {
            Direction::ToMomentum => {
                self.fwd.process(line);
                for (a, ph) in line.iter_mut().zip(&self.fwd_phase) {
                    *a *= ph;
                }
            }
            Direction::ToPosition => {
                for (a, ph) in line.iter_mut().zip(&self.inv_phase) {
                    *a *= ph;
                }
                self.inv.process(line);
            }
        }
    }
}

/// Applies the transform along one axis of a row-major tensor.
pub(crate) fn transform_axis(
    data: &mut [C64],
    shape: &[usize],
    axis: usize,
    grid: &Grid1D,
    dir: Direction,
) {
    let n = shape[axis];
    debug_assert_eq!(n, grid.n());
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let lt = LineTransform::new(grid);
    let mut line = vec![C64::new(0.0, 0.0); n];
    for o in 0..outer {
        let base = o * n * inner;
        for i in 0..inner {
            for (j, l) in line.iter_mut().enumerate() {
                *l = data[base + j * inner + i];
            }
            lt.apply(&mut line, dir);
            for (j, l) in line.iter().enumerate() {
                data[base + j * inner + i] = *l;
            }
        }
    }
}

/// Multiplies every amplitude along `axis` by `factor[index along axis]`.
pub(crate) fn scale_axis(data: &mut [C64], shape: &[usize], axis: usize, factor: &[f64]) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    for (idx, a) in data.iter_mut().enumerate() {
        let j = (idx / inner) % n;
        *a *= factor[j];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_spacing() {
        assert_eq!(make_grid(8, -4.0, 4.0).unwrap().spacing(), 1.0);
        assert_eq!(make_grid(2, 0.0, 1.0).unwrap().spacing(), 0.5);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(make_grid(1, 0.0, 1.0).is_err());
        assert!(make_grid(4, 1.0, 1.0).is_err());
        assert!(make_grid(4, 2.0, 1.0).is_err());
    }

    #[test]
    fn momentum_values_symmetric_range() {
        let g = make_grid(8, -4.0, 4.0).unwrap();
        let dp = 2.0 * PI / 8.0;
        let m: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(m, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.momentum(3) - 3.0 * dp).abs() < 1e-15);
        assert!((g.momentum(4) + 4.0 * dp).abs() < 1e-15);
    }

    #[test]
    fn cell_centred_points_avoid_zero() {
        let g = Grid1D::symmetric(6, 3.0, Centering::Cell).unwrap();
        let pts = g.points();
        assert_eq!(pts, vec![-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]);
        assert_eq!(g.nearest_index(-0.4), 2);
    }

    #[test]
    fn line_transform_round_trip() {
        for centering in [Centering::Node, Centering::Cell] {
            let g = Grid1D::new(16, -3.0, 5.0, centering).unwrap();
            let lt = LineTransform::new(&g);
            let orig: Vec<C64> = (0..16)
                .map(|j| C64::new((j as f64).sin(), (j as f64 * 0.3).cos()))
                .collect();
            let mut line = orig.clone();
            lt.apply(&mut line, Direction::ToMomentum);
            lt.apply(&mut line, Direction::ToPosition);
            for (a, b) in line.iter().zip(&orig) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
