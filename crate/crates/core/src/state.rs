//! Hybrid qudit / qumode registers and the amplitude tensor that lives on them.
//!
//! Amplitudes are stored row-major with shape `(K, n_1, ..., n_d[, n_anc])`:
//! the qudit level is the slowest index and the ancilla, when present, the
//! fastest. Norms weight each amplitude by the product of the grid spacings of
//! the current basis, so discrete norms approximate L^2 integrals.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{scale_axis, transform_axis, Direction, Grid1D};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegisterLayout {
    qudit_levels: usize,
    spatial_grids: Vec<Grid1D>,
    ancilla_grid: Option<Grid1D>,
}

impl RegisterLayout {
    pub fn new(
        qudit_levels: usize,
        spatial_grids: Vec<Grid1D>,
        ancilla_grid: Option<Grid1D>,
    ) -> Result<Self> {
        if qudit_levels == 0 {
            return Err(crate::error::invalid(
                "qudit_levels",
                "need at least one level",
            ));
        }
        Ok(Self {
            qudit_levels,
            spatial_grids,
            ancilla_grid,
        })
    }

    /// Layout for a d-dimensional relaxation system: one u level plus d fluxes.
    pub fn for_relaxation(spatial_grids: Vec<Grid1D>, ancilla_grid: Option<Grid1D>) -> Self {
        Self {
            qudit_levels: spatial_grids.len() + 1,
            spatial_grids,
            ancilla_grid,
        }
    }

    pub fn qudit_levels(&self) -> usize {
        self.qudit_levels
    }

    pub fn dimension(&self) -> usize {
        self.spatial_grids.len()
    }

    pub fn spatial_grids(&self) -> &[Grid1D] {
        &self.spatial_grids
    }

    pub fn ancilla_grid(&self) -> Option<&Grid1D> {
        self.ancilla_grid.as_ref()
    }

    pub fn has_ancilla(&self) -> bool {
        self.ancilla_grid.is_some()
    }

    pub fn with_levels(&self, levels: usize) -> Self {
        Self {
            qudit_levels: levels,
            ..self.clone()
        }
    }

    pub fn with_ancilla(&self, grid: Option<Grid1D>) -> Self {
        Self {
            ancilla_grid: grid,
            ..self.clone()
        }
    }

    /// Tensor shape `(K, n_1, ..., n_d[, n_anc])`.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.spatial_grids.len() + 2);
        s.push(self.qudit_levels);
        s.extend(self.spatial_grids.iter().map(Grid1D::n));
        if let Some(a) = &self.ancilla_grid {
            s.push(a.n());
        }
        s
    }

    /// Number of points per qudit level (all qumodes together).
    pub fn mode_points(&self) -> usize {
        self.shape()[1..].iter().product()
    }

    pub fn amplitude_count(&self) -> usize {
        self.qudit_levels * self.mode_points()
    }

    fn grid_for(&self, axis: Axis) -> Result<&Grid1D> {
        match axis {
            Axis::Spatial(j) => self.spatial_grids.get(j).ok_or(Error::DimensionMismatch {
                what: "spatial axis",
                expected: self.spatial_grids.len(),
                found: j,
            }),
            Axis::Ancilla => self.ancilla_grid.as_ref().ok_or(Error::NoAncilla),
        }
    }

    /// Position of `axis` inside the tensor shape.
    fn tensor_axis(&self, axis: Axis) -> usize {
        match axis {
            Axis::Spatial(j) => 1 + j,
            Axis::Ancilla => 1 + self.spatial_grids.len(),
        }
    }

    pub(crate) fn axes(&self) -> Vec<Axis> {
        let mut v: Vec<Axis> = (0..self.dimension()).map(Axis::Spatial).collect();
        if self.has_ancilla() {
            v.push(Axis::Ancilla);
        }
        v
    }
}

/// A continuous register of the layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    Spatial(usize),
    Ancilla,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Spatial(j) => write!(f, "x{}", j + 1),
            Axis::Ancilla => write!(f, "ancilla"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Position,
    Momentum,
}

impl Basis {
    fn name(self) -> &'static str {
        match self {
            Basis::Position => "position",
            Basis::Momentum => "momentum",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    layout: RegisterLayout,
    amplitudes: Vec<C64>,
    // one tag per continuous axis, spatial first then ancilla
    basis: Vec<Basis>,
}

impl HybridState {
    pub fn zeros(layout: RegisterLayout) -> Self {
        let n = layout.amplitude_count();
        let axes = layout.axes().len();
        Self {
            layout,
            amplitudes: vec![C64::new(0.0, 0.0); n],
            basis: vec![Basis::Position; axes],
        }
    }

    /// Position-basis state with raw amplitudes in tensor order.
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != layout.amplitude_count() {
            return Err(Error::DimensionMismatch {
                what: "amplitude count",
                expected: layout.amplitude_count(),
                found: amplitudes.len(),
            });
        }
        let axes = layout.axes().len();
        Ok(Self {
            layout,
            amplitudes,
            basis: vec![Basis::Position; axes],
        })
    }

    /// Samples `f(level, coords)` in the position basis; `coords` lists the
    /// spatial coordinates followed by the ancilla coordinate, if any.
    pub fn from_fn(layout: RegisterLayout, f: impl Fn(usize, &[f64]) -> C64) -> Self {
        let mut s = Self::zeros(layout);
        let grids: Vec<Grid1D> = s
            .layout
            .spatial_grids
            .iter()
            .chain(s.layout.ancilla_grid.iter())
            .cloned()
            .collect();
        let pts: Vec<Vec<f64>> = grids.iter().map(Grid1D::points).collect();
        let per_level = s.layout.mode_points();
        let mut coords = vec![0.0; grids.len()];
        for (idx, a) in s.amplitudes.iter_mut().enumerate() {
            let level = idx / per_level;
            let mut rem = idx % per_level;
            for ax in (0..grids.len()).rev() {
                let n = grids[ax].n();
                coords[ax] = pts[ax][rem % n];
                rem /= n;
            }
            *a = f(level, &coords);
        }
        s
    }

    /// Level-`level` product state `|level> (x) f(x)`.
    pub fn basis_level(
        layout: RegisterLayout,
        level: usize,
        f: impl Fn(&[f64]) -> C64,
    ) -> Result<Self> {
        if level >= layout.qudit_levels() {
            return Err(Error::LevelOutOfRange {
                level,
                levels: layout.qudit_levels(),
            });
        }
        Ok(Self::from_fn(layout, |k, x| {
            if k == level {
                f(x)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn basis(&self, axis: Axis) -> Basis {
        self.basis[self.axis_slot(axis)]
    }

    pub fn bases(&self) -> &[Basis] {
        &self.basis
    }

    fn axis_slot(&self, axis: Axis) -> usize {
        self.layout.tensor_axis(axis) - 1
    }

    fn weight(&self) -> f64 {
        self.layout
            .axes()
            .iter()
            .map(|&ax| {
                let g = self.layout.grid_for(ax).expect("axis from layout");
                match self.basis(ax) {
                    Basis::Position => g.spacing(),
                    Basis::Momentum => g.momentum_spacing(),
                }
            })
            .product()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.weight() * self.amplitudes.iter().map(C64::norm_sqr).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Weighted squared norm of one qudit level.
    pub fn level_norm_sqr(&self, level: usize) -> f64 {
        let per = self.layout.mode_points();
        self.weight()
            * self.amplitudes[level * per..(level + 1) * per]
                .iter()
                .map(C64::norm_sqr)
                .sum::<f64>()
    }

    /// `<self|other>` in the weighted inner product. Both states must share
    /// layout and basis tags.
    pub fn inner(&self, other: &HybridState) -> Result<C64> {
        self.check_compatible(other)?;
        let s: C64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.weight())
    }

    pub(crate) fn check_compatible(&self, other: &HybridState) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(
                "states live on different layouts".into(),
            ));
        }
        if self.basis != other.basis {
            return Err(Error::LayoutMismatch(
                "states use different basis tags".into(),
            ));
        }
        Ok(())
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut s = self.clone();
        s.amplitudes.iter_mut().for_each(|a| *a *= c);
        s
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: C64, other: &HybridState) -> Result<Self> {
        self.check_compatible(other)?;
        let mut s = self.clone();
        for (a, b) in s.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
        Ok(s)
    }

    /// `||self - other||`, after bringing `other` into this state's bases.
    pub fn distance(&self, other: &HybridState) -> Result<f64> {
        let other = other.in_bases(&self.basis)?;
        Ok(self.add_scaled(C64::new(-1.0, 0.0), &other)?.norm())
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(C64::new(1.0 / n, 0.0))
        }
    }

    pub fn to_momentum(&self, axis: Axis) -> Result<Self> {
        self.transformed(axis, Basis::Momentum)
    }

    pub fn to_position(&self, axis: Axis) -> Result<Self> {
        self.transformed(axis, Basis::Position)
    }

    fn transformed(&self, axis: Axis, target: Basis) -> Result<Self> {
        let grid = self.layout.grid_for(axis)?.clone();
        if self.basis(axis) == target {
            return Err(Error::WrongBasis {
                axis: axis.to_string(),
                basis: target.name(),
            });
        }
        let mut s = self.clone();
        let shape = s.layout.shape();
        let dir = match target {
            Basis::Momentum => Direction::ToMomentum,
            Basis::Position => Direction::ToPosition,
        };
        transform_axis(
            &mut s.amplitudes,
            &shape,
            self.layout.tensor_axis(axis),
            &grid,
            dir,
        );
        let slot = s.axis_slot(axis);
        s.basis[slot] = target;
        Ok(s)
    }

    /// Returns this state with `axis` in `target`, transforming only if needed.
    pub fn in_basis(&self, axis: Axis, target: Basis) -> Result<Self> {
        if self.basis(axis) == target {
            Ok(self.clone())
        } else {
            self.transformed(axis, target)
        }
    }

    /// Brings every axis into the given tags (spatial first, then ancilla).
    pub fn in_bases(&self, tags: &[Basis]) -> Result<Self> {
        if tags.len() != self.basis.len() {
            return Err(Error::DimensionMismatch {
                what: "basis tags",
                expected: self.basis.len(),
                found: tags.len(),
            });
        }
        let mut s = self.clone();
        for (ax, &t) in self.layout.axes().into_iter().zip(tags) {
            s = s.in_basis(ax, t)?;
        }
        Ok(s)
    }

    pub fn all_position(&self) -> Self {
        let tags = vec![Basis::Position; self.basis.len()];
        self.in_bases(&tags).expect("tag count matches")
    }

    pub fn all_momentum(&self) -> Self {
        let tags = vec![Basis::Momentum; self.basis.len()];
        self.in_bases(&tags).expect("tag count matches")
    }

    /// Multiplies amplitudes along `axis` by the diagonal values `f(coord)`,
    /// where `coord` is the grid point or momentum of the current basis.
    pub(crate) fn scale_along(&mut self, axis: Axis, values: &[f64]) {
        let shape = self.layout.shape();
        scale_axis(
            &mut self.amplitudes,
            &shape,
            self.layout.tensor_axis(axis),
            values,
        );
    }

    /// Spectral partial derivative along `axis`, returned in this state's bases.
    pub fn derivative(&self, axis: Axis) -> Result<Self> {
        let original = self.basis(axis);
        let p = self.layout.grid_for(axis)?.momentum_values();
        let mut s = self.in_basis(axis, Basis::Momentum)?;
        s.scale_along(axis, &p);
        s.scaled(C64::new(0.0, 1.0)).in_basis(axis, original)
    }

    /// Tensor product `self (x) ancilla`, in the position basis of the ancilla.
    pub fn with_ancilla(&self, ancilla_grid: &Grid1D, ancilla: &[C64]) -> Result<Self> {
        if self.layout.has_ancilla() {
            return Err(Error::AncillaPresent);
        }
        if ancilla.len() != ancilla_grid.n() {
            return Err(Error::DimensionMismatch {
                what: "ancilla amplitudes",
                expected: ancilla_grid.n(),
                found: ancilla.len(),
            });
        }
        let layout = self.layout.with_ancilla(Some(ancilla_grid.clone()));
        let mut amplitudes = Vec::with_capacity(self.amplitudes.len() * ancilla.len());
        for a in &self.amplitudes {
            amplitudes.extend(ancilla.iter().map(|b| a * b));
        }
        let mut basis = self.basis.clone();
        basis.push(Basis::Position);
        Ok(Self {
            layout,
            amplitudes,
            basis,
        })
    }

    /// Extracts one qudit level as a K = 1 state on the same qumodes.
    pub fn level(&self, level: usize) -> Result<Self> {
        let levels = self.layout.qudit_levels();
        if level >= levels {
            return Err(Error::LevelOutOfRange { level, levels });
        }
        let per = self.layout.mode_points();
        Ok(Self {
            layout: self.layout.with_levels(1),
            amplitudes: self.amplitudes[level * per..(level + 1) * per].to_vec(),
            basis: self.basis.clone(),
        })
    }

    /// Places a K = 1 state on `level` of a `levels`-level register.
    pub fn embed_level(&self, levels: usize, level: usize) -> Result<Self> {
        if self.layout.qudit_levels() != 1 {
            return Err(Error::LayoutMismatch(
                "embed_level needs a single-level state".into(),
            ));
        }
        if level >= levels {
            return Err(Error::LevelOutOfRange { level, levels });
        }
        let per = self.layout.mode_points();
        let mut amplitudes = vec![C64::new(0.0, 0.0); per * levels];
        amplitudes[level * per..(level + 1) * per].copy_from_slice(&self.amplitudes);
        Ok(Self {
            layout: self.layout.with_levels(levels),
            amplitudes,
            basis: self.basis.clone(),
        })
    }

    pub(crate) fn from_parts(
        layout: RegisterLayout,
        amplitudes: Vec<C64>,
        basis: Vec<Basis>,
    ) -> Self {
        debug_assert_eq!(amplitudes.len(), layout.amplitude_count());
        debug_assert_eq!(basis.len(), layout.axes().len());
        Self {
            layout,
            amplitudes,
            basis,
        }
    }

    pub(crate) fn layout_axis_grid(&self, axis: Axis) -> Result<&Grid1D> {
        self.layout.grid_for(axis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn layout_1d(n: usize, k: usize) -> RegisterLayout {
        RegisterLayout::new(k, vec![make_grid(n, -4.0, 4.0).unwrap()], None).unwrap()
    }

    fn gaussian(x: &[f64]) -> C64 {
        C64::new((-x[0] * x[0]).exp(), 0.0)
    }

    #[test]
    fn amplitude_count_matches_layout() {
        let g = make_grid(8, 0.0, 1.0).unwrap();
        let l = RegisterLayout::new(
            3,
            vec![g.clone(), g.clone()],
            Some(make_grid(4, -1.0, 1.0).unwrap()),
        )
        .unwrap();
        assert_eq!(l.amplitude_count(), 3 * 8 * 8 * 4);
        assert_eq!(
            RegisterLayout::for_relaxation(vec![g.clone(), g], None).qudit_levels(),
            3
        );
    }

    #[test]
    fn round_trip_is_identity() {
        let s = HybridState::basis_level(layout_1d(32, 2), 0, gaussian).unwrap();
        let back = s
            .to_momentum(Axis::Spatial(0))
            .unwrap()
            .to_position(Axis::Spatial(0))
            .unwrap();
        let scale = s.amplitudes().iter().map(|a| a.norm()).fold(0.0, f64::max);
        for (a, b) in s.amplitudes().iter().zip(back.amplitudes()) {
            assert!((a - b).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn transform_preserves_norm() {
        let s = HybridState::basis_level(layout_1d(64, 2), 1, gaussian).unwrap();
        let p = s.to_momentum(Axis::Spatial(0)).unwrap();
        assert!((p.norm() - s.norm()).abs() <= 1e-10 * s.norm());
    }

    #[test]
    fn double_transform_is_an_error() {
        let s = HybridState::zeros(layout_1d(8, 1));
        let p = s.to_momentum(Axis::Spatial(0)).unwrap();
        assert!(matches!(
            p.to_momentum(Axis::Spatial(0)),
            Err(Error::WrongBasis { .. })
        ));
        assert!(matches!(
            s.to_position(Axis::Spatial(0)),
            Err(Error::WrongBasis { .. })
        ));
        assert!(matches!(
            s.to_momentum(Axis::Ancilla),
            Err(Error::NoAncilla)
        ));
    }

    #[test]
    fn constant_lands_on_zero_momentum() {
        let s = HybridState::basis_level(layout_1d(16, 1), 0, |_| C64::new(1.0, 0.0)).unwrap();
        let p = s.to_momentum(Axis::Spatial(0)).unwrap();
        let a = p.amplitudes();
        assert!(a[0].norm() > 1.0);
        assert!(a[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_is_a_single_mode() {
        // direct DFT: psi~(p_m) = h/sqrt(2 pi) sum_n e^{-i p_m x_n} e^{i p0 x_n}
        // = h/sqrt(2 pi) * n * delta_{m, m0}
        let layout = layout_1d(16, 1);
        let g = layout.spatial_grids()[0].clone();
        let m0 = 3;
        let p0 = g.momentum(m0);
        let s = HybridState::basis_level(layout, 0, |x| C64::from_polar(1.0, p0 * x[0])).unwrap();
        let p = s.to_momentum(Axis::Spatial(0)).unwrap();
        let expected = g.spacing() * 16.0 / (2.0 * std::f64::consts::PI).sqrt();
        for (i, a) in p.amplitudes().iter().enumerate() {
            if i == m0 {
                assert!((a - C64::new(expected, 0.0)).norm() < 1e-12);
            } else {
                assert!(a.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_of_sine() {
        let layout = RegisterLayout::new(
            1,
            vec![make_grid(32, 0.0, 2.0 * std::f64::consts::PI).unwrap()],
            None,
        )
        .unwrap();
        let s = HybridState::from_fn(layout.clone(), |_, x| C64::new((3.0 * x[0]).sin(), 0.0));
        let ds = s.derivative(Axis::Spatial(0)).unwrap();
        let expected = HybridState::from_fn(layout, |_, x| C64::new(3.0 * (3.0 * x[0]).cos(), 0.0));
        assert!(ds.distance(&expected).unwrap() < 1e-11);
    }

    #[test]
    fn with_ancilla_and_level_extraction() {
        let s = HybridState::basis_level(layout_1d(8, 2), 1, gaussian).unwrap();
        let ag = make_grid(4, -2.0, 2.0).unwrap();
        let anc = vec![C64::new(0.5, 0.0); 4];
        let t = s.with_ancilla(&ag, &anc).unwrap();
        assert_eq!(t.layout().amplitude_count(), 2 * 8 * 4);
        assert!((t.norm_sqr() - s.norm_sqr() * 4.0 * 0.25 * 1.0).abs() < 1e-12);
        assert!(t.level(0).unwrap().norm() == 0.0);
        assert!(matches!(t.level(2), Err(Error::LevelOutOfRange { .. })));
        assert!(matches!(
            t.with_ancilla(&ag, &anc),
            Err(Error::AncillaPresent)
        ));
    }
}
