//! Structured operators: sums of `coefficient * Q (x) f_1 (x) ... (x) f_d (x) g`
//! with `Q` a dense qudit matrix, each `f_j` one of `1, p_j, x_j` and `g`
//! either `1` or the ancilla quadrature `eta`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{Axis, Basis, HybridState};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense K x K complex matrix acting on the qudit level index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuditMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl QuditMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                what: "qudit matrix entries",
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let mut q = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                q.entries[i * dim + j] = C64::new(m[(i, j)], 0.0);
            }
        }
        q
    }

    /// `|a><b|`
    pub fn outer(dim: usize, a: usize, b: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.entries[a * dim + b] = ONE;
        m
    }

    /// `|a><a|`
    pub fn projector(dim: usize, a: usize) -> Self {
        Self::outer(dim, a, a)
    }

    /// `|a><b| + |b><a|`, the qudit analogue of sigma_x on levels a, b.
    pub fn flip(dim: usize, a: usize, b: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.entries[a * dim + b] += ONE;
        m.entries[b * dim + a] += ONE;
        m
    }

    /// `i|a><b| - i|b><a|`, the qudit analogue of sigma_y on levels a, b.
    pub fn flip_y(dim: usize, a: usize, b: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.entries[a * dim + b] = C64::new(0.0, 1.0);
        m.entries[b * dim + a] = C64::new(0.0, -1.0);
        m
    }

    pub fn pauli_x() -> Self {
        Self::flip(2, 0, 1)
    }

    pub fn pauli_y() -> Self {
        // sigma_y = -i|0><1| + i|1><0|
        Self::flip_y(2, 1, 0)
    }

    pub fn pauli_z() -> Self {
        Self::from_entries(2, vec![ONE, ZERO, ZERO, -ONE]).expect("2x2")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.entries[j * self.dim + i] = self.get(i, j).conj();
            }
        }
        m
    }

    /// `max |M - M^dagger|`
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == ZERO)
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add_assign_scaled(&mut self, c: C64, other: &QuditMatrix) {
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, C64)> {
        let mut v = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self.get(i, j);
                if z != ZERO {
                    v.push((i, j, z));
                }
            }
        }
        v
    }

    /// Coefficients in `{1, sigma_x, sigma_y, sigma_z}` for a 2x2 matrix.
    pub fn pauli_coefficients(&self) -> Option<[C64; 4]> {
        if self.dim != 2 {
            return None;
        }
        let trace_with = |p: &QuditMatrix| -> C64 {
            let mut t = ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    t += p.get(i, j) * self.get(j, i);
                }
            }
            t * 0.5
        };
        Some([
            trace_with(&Self::identity(2)),
            trace_with(&Self::pauli_x()),
            trace_with(&Self::pauli_y()),
            trace_with(&Self::pauli_z()),
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeFactor {
    Identity,
    Momentum,
    Position,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaFactor {
    Identity,
    Eta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    coefficient: f64,
    qudit: QuditMatrix,
    modes: Vec<ModeFactor>,
    ancilla: AncillaFactor,
}

impl Term {
    pub fn new(
        coefficient: f64,
        qudit: QuditMatrix,
        modes: Vec<ModeFactor>,
        ancilla: AncillaFactor,
    ) -> Result<Self> {
        let active = modes.iter().filter(|m| **m != ModeFactor::Identity).count();
        if active > 1 {
            return Err(Error::MultiModeTerm(active));
        }
        Ok(Self {
            coefficient,
            qudit,
            modes,
            ancilla,
        })
    }

    /// Term acting on spatial mode `j` only (`factor` may be the identity).
    pub fn on_mode(
        coefficient: f64,
        qudit: QuditMatrix,
        d: usize,
        j: usize,
        factor: ModeFactor,
        ancilla: AncillaFactor,
    ) -> Self {
        let mut modes = vec![ModeFactor::Identity; d];
        modes[j] = factor;
        Self {
            coefficient,
            qudit,
            modes,
            ancilla,
        }
    }

    /// Term with identity on every spatial mode.
    pub fn local(coefficient: f64, qudit: QuditMatrix, d: usize, ancilla: AncillaFactor) -> Self {
        Self {
            coefficient,
            qudit,
            modes: vec![ModeFactor::Identity; d],
            ancilla,
        }
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn qudit(&self) -> &QuditMatrix {
        &self.qudit
    }

    pub fn modes(&self) -> &[ModeFactor] {
        &self.modes
    }

    pub fn ancilla(&self) -> AncillaFactor {
        self.ancilla
    }

    /// The spatial mode this term acts on, with its factor.
    pub fn active_mode(&self) -> Option<(usize, ModeFactor)> {
        self.modes
            .iter()
            .enumerate()
            .find(|(_, m)| **m != ModeFactor::Identity)
            .map(|(j, m)| (j, *m))
    }

    pub fn with_ancilla(&self, ancilla: AncillaFactor) -> Self {
        Self {
            ancilla,
            ..self.clone()
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            coefficient: self.coefficient * c,
            ..self.clone()
        }
    }

    fn signature(&self) -> (Vec<ModeFactor>, AncillaFactor) {
        (self.modes.clone(), self.ancilla)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+.6e} [", self.coefficient)?;
        for (i, (r, c, z)) in self.qudit.nonzero_entries().into_iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "({r},{c}):{}{:+}i", z.re, z.im)?;
        }
        write!(f, "]")?;
        match self.active_mode() {
            Some((j, ModeFactor::Momentum)) => write!(f, " p{}", j + 1)?,
            Some((j, ModeFactor::Position)) => write!(f, " x{}", j + 1)?,
            _ => write!(f, " 1_x")?,
        }
        match self.ancilla {
            AncillaFactor::Eta => write!(f, " eta"),
            AncillaFactor::Identity => write!(f, " 1_eta"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorTermList {
    levels: usize,
    modes: usize,
    terms: Vec<Term>,
    hermitian: bool,
}

impl OperatorTermList {
    pub fn new(levels: usize, modes: usize) -> Self {
        Self {
            levels,
            modes,
            terms: Vec::new(),
            hermitian: false,
        }
    }

    pub fn push(&mut self, term: Term) -> Result<()> {
        if term.qudit.dim() != self.levels {
            return Err(Error::DimensionMismatch {
                what: "qudit factor",
                expected: self.levels,
                found: term.qudit.dim(),
            });
        }
        if term.modes.len() != self.modes {
            return Err(Error::DimensionMismatch {
                what: "mode factors",
                expected: self.modes,
                found: term.modes.len(),
            });
        }
        self.hermitian = false;
        self.terms.push(term);
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_tagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn uses_ancilla(&self) -> bool {
        self.terms.iter().any(|t| t.ancilla == AncillaFactor::Eta)
    }

    /// Sums qudit matrices of terms that share the same quadrature factors.
    /// Distinct factor products are linearly independent operators, so the
    /// list is Hermitian exactly when every group sum is.
    pub fn grouped(&self) -> BTreeMap<(Vec<ModeFactor>, AncillaFactor), QuditMatrix> {
        let mut groups: BTreeMap<_, QuditMatrix> = BTreeMap::new();
        for t in &self.terms {
            groups
                .entry(t.signature())
                .or_insert_with(|| QuditMatrix::zeros(self.levels))
                .add_assign_scaled(C64::new(t.coefficient, 0.0), &t.qudit);
        }
        groups
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.grouped()
            .values()
            .map(QuditMatrix::hermitian_deviation)
            .fold(0.0, f64::max)
    }

    /// Verifies Hermiticity and tags the list.
    pub fn into_hermitian(mut self, tol: f64) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|t| t.scaled(c)).collect(),
            ..self.clone()
        }
    }

    /// Concatenation; the result keeps the tag only if both inputs carry it.
    pub fn extended(&self, other: &OperatorTermList) -> Result<Self> {
        if self.levels != other.levels || self.modes != other.modes {
            return Err(Error::LayoutMismatch(
                "term lists act on different registers".into(),
            ));
        }
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    fn check_layout(&self, state: &HybridState) -> Result<()> {
        let l = state.layout();
        if l.qudit_levels() != self.levels {
            return Err(Error::LayoutMismatch(format!(
                "operator has {} levels, state has {}",
                self.levels,
                l.qudit_levels()
            )));
        }
        if l.dimension() != self.modes {
            return Err(Error::LayoutMismatch(format!(
                "operator has {} modes, state has {}",
                self.modes,
                l.dimension()
            )));
        }
        if self.uses_ancilla() && !l.has_ancilla() {
            return Err(Error::NoAncilla);
        }
        Ok(())
    }

    /// Splits into the per-momentum block symbol, failing on position factors.
    pub fn momentum_symbol(&self) -> Result<MomentumSymbol> {
        let k = self.levels;
        let mut sym = MomentumSymbol {
            levels: k,
            constant: QuditMatrix::zeros(k),
            linear: vec![QuditMatrix::zeros(k); self.modes],
            eta_constant: QuditMatrix::zeros(k),
            eta_linear: vec![QuditMatrix::zeros(k); self.modes],
        };
        for t in &self.terms {
            let c = C64::new(t.coefficient, 0.0);
            let target = match (t.active_mode(), t.ancilla) {
                (None, AncillaFactor::Identity) => &mut sym.constant,
                (None, AncillaFactor::Eta) => &mut sym.eta_constant,
                (Some((j, ModeFactor::Momentum)), AncillaFactor::Identity) => &mut sym.linear[j],
                (Some((j, ModeFactor::Momentum)), AncillaFactor::Eta) => &mut sym.eta_linear[j],
                (Some((_, ModeFactor::Position)), _) => return Err(Error::NotMomentumDiagonal),
                (Some((_, ModeFactor::Identity)), _) => {
                    unreachable!("active mode is never identity")
                }
            };
            target.add_assign_scaled(c, &t.qudit);
        }
        Ok(sym)
    }
}

/// Momentum-space symbol of a momentum-diagonal operator:
/// `B(p, eta) = C + sum_j p_j L_j + eta (E + sum_j p_j F_j)`.
#[derive(Clone, Debug)]
pub struct MomentumSymbol {
    levels: usize,
    constant: QuditMatrix,
    linear: Vec<QuditMatrix>,
    eta_constant: QuditMatrix,
    eta_linear: Vec<QuditMatrix>,
}

impl MomentumSymbol {
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn has_eta(&self) -> bool {
        !self.eta_constant.is_zero() || self.eta_linear.iter().any(|m| !m.is_zero())
    }

    pub fn eta_depends_on_momentum(&self) -> bool {
        self.eta_linear.iter().any(|m| !m.is_zero())
    }

    pub fn block(&self, momenta: &[f64], eta: f64) -> DMatrix<C64> {
        let k = self.levels;
        let mut m = self.constant.clone();
        for (j, &p) in momenta.iter().enumerate() {
            m.add_assign_scaled(C64::new(p, 0.0), &self.linear[j]);
        }
        if eta != 0.0 {
            m.add_assign_scaled(C64::new(eta, 0.0), &self.eta_constant);
            for (j, &p) in momenta.iter().enumerate() {
                m.add_assign_scaled(C64::new(eta * p, 0.0), &self.eta_linear[j]);
            }
        }
        DMatrix::from_fn(k, k, |i, j| m.get(i, j))
    }
}

/// Applies `ops` to `state`. Momentum and eta factors act spectrally;
/// position factors multiply pointwise. The result has the input's basis tags.
pub fn apply_terms(ops: &OperatorTermList, state: &HybridState) -> Result<HybridState> {
    ops.check_layout(state)?;
    let layout = state.layout().clone();
    let k = layout.qudit_levels();
    let per = layout.mode_points();
    let mut out = vec![ZERO; layout.amplitude_count()];

    for t in ops.terms() {
        let mut s = state.clone();
        if let Some((j, factor)) = t.active_mode() {
            s = apply_quadrature(&s, Axis::Spatial(j), factor)?;
        }
        if t.ancilla == AncillaFactor::Eta {
            s = apply_quadrature(&s, Axis::Ancilla, ModeFactor::Momentum)?;
        }
        let amps = s.amplitudes();
        for a in 0..k {
            for b in 0..k {
                let q = t.qudit.get(a, b) * t.coefficient;
                if q == ZERO {
                    continue;
                }
                let (dst, src) = (a * per, b * per);
                for i in 0..per {
                    out[dst + i] += q * amps[src + i];
                }
            }
        }
    }
    Ok(HybridState::from_parts(layout, out, state.bases().to_vec()))
}

fn apply_quadrature(state: &HybridState, axis: Axis, factor: ModeFactor) -> Result<HybridState> {
    let original = state.basis(axis);
    let (needed, values) = {
        let g = state.layout_axis_grid(axis)?;
        match factor {
            ModeFactor::Momentum => (Basis::Momentum, g.momentum_values()),
            ModeFactor::Position => (Basis::Position, g.points()),
            ModeFactor::Identity => return Ok(state.clone()),
        }
    };
    let mut s = state.in_basis(axis, needed)?;
    s.scale_along(axis, &values);
    s.in_basis(axis, original)
}

/// Dense matrix of `ops` in raw amplitude coordinates of `layout` (position
/// basis on every axis). Intended for small layouts only.
pub fn assemble_dense(
    ops: &OperatorTermList,
    layout: &crate::state::RegisterLayout,
) -> Result<DMatrix<C64>> {
    let n = layout.amplitude_count();
    let mut m = DMatrix::from_element(n, n, ZERO);
    for col in 0..n {
        let mut e = vec![ZERO; n];
        e[col] = ONE;
        let s = HybridState::from_amplitudes(layout.clone(), e)?;
        let out = apply_terms(ops, &s)?;
        for (row, z) in out.amplitudes().iter().enumerate() {
            m[(row, col)] = *z;
        }
    }
    Ok(m)
}

/// `max |M - M^dagger|` of a dense matrix.
pub fn dense_hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Centering, Grid1D};
    use crate::state::RegisterLayout;

    fn layout(k: usize, n: usize) -> RegisterLayout {
        RegisterLayout::new(k, vec![make_grid(n, -4.0, 4.0).unwrap()], None).unwrap()
    }

    #[test]
    fn identity_terms_leave_state_unchanged() {
        let mut ops = OperatorTermList::new(2, 1);
        ops.push(Term::local(
            1.0,
            QuditMatrix::identity(2),
            1,
            AncillaFactor::Identity,
        ))
        .unwrap();
        let s = HybridState::from_fn(layout(2, 16), |k, x| C64::new(x[0] + k as f64, 0.5));
        let out = apply_terms(&ops, &s).unwrap();
        assert!(out.distance(&s).unwrap() < 1e-14);
    }

    #[test]
    fn sigma_x_swaps_levels() {
        let mut ops = OperatorTermList::new(2, 1);
        ops.push(Term::local(
            1.0,
            QuditMatrix::pauli_x(),
            1,
            AncillaFactor::Identity,
        ))
        .unwrap();
        let s = HybridState::from_fn(layout(2, 8), |k, x| {
            C64::new(if k == 0 { x[0] } else { 2.0 }, 0.0)
        });
        let out = apply_terms(&ops, &s).unwrap();
        assert!(
            out.level(0)
                .unwrap()
                .distance(&s.level(1).unwrap())
                .unwrap()
                < 1e-14
        );
        assert!(
            out.level(1)
                .unwrap()
                .distance(&s.level(0).unwrap())
                .unwrap()
                < 1e-14
        );
    }

    #[test]
    fn momentum_term_scales_plane_wave() {
        let l = layout(1, 32);
        let g = l.spatial_grids()[0].clone();
        let p0 = g.momentum(5);
        let mut ops = OperatorTermList::new(1, 1);
        ops.push(Term::on_mode(
            1.0,
            QuditMatrix::identity(1),
            1,
            0,
            ModeFactor::Momentum,
            AncillaFactor::Identity,
        ))
        .unwrap();
        let s = HybridState::from_fn(l, |_, x| C64::from_polar(1.0, p0 * x[0]));
        let out = apply_terms(&ops, &s).unwrap();
        let expected = s.scaled(C64::new(p0, 0.0));
        assert!(out.distance(&expected).unwrap() < 1e-12 * expected.norm());
    }

    #[test]
    fn multi_mode_term_rejected() {
        let r = Term::new(
            1.0,
            QuditMatrix::identity(1),
            vec![ModeFactor::Momentum, ModeFactor::Position],
            AncillaFactor::Identity,
        );
        assert!(matches!(r, Err(Error::MultiModeTerm(2))));
    }

    #[test]
    fn hermitian_tag_checks_group_sums() {
        // i|0><1| p - i|1><0| p is Hermitian only as a pair
        let mut ops = OperatorTermList::new(2, 1);
        let mut a = QuditMatrix::zeros(2);
        a.set(0, 1, C64::new(0.0, 1.0));
        ops.push(Term::on_mode(
            1.0,
            a,
            1,
            0,
            ModeFactor::Momentum,
            AncillaFactor::Identity,
        ))
        .unwrap();
        assert!(ops.clone().into_hermitian(1e-12).is_err());
        let mut b = QuditMatrix::zeros(2);
        b.set(1, 0, C64::new(0.0, -1.0));
        ops.push(Term::on_mode(
            1.0,
            b,
            1,
            0,
            ModeFactor::Momentum,
            AncillaFactor::Identity,
        ))
        .unwrap();
        let h = ops.into_hermitian(1e-12).unwrap();
        let l = layout(2, 8);
        let m = assemble_dense(&h, &l).unwrap();
        assert!(dense_hermitian_deviation(&m) < 1e-12);
    }

    #[test]
    fn eta_needs_ancilla() {
        let mut ops = OperatorTermList::new(1, 1);
        ops.push(Term::local(
            1.0,
            QuditMatrix::identity(1),
            1,
            AncillaFactor::Eta,
        ))
        .unwrap();
        let s = HybridState::zeros(layout(1, 8));
        assert!(matches!(apply_terms(&ops, &s), Err(Error::NoAncilla)));
        let ag = Grid1D::symmetric(8, 4.0, Centering::Cell).unwrap();
        let s = s.with_ancilla(&ag, &[C64::new(1.0, 0.0); 8]).unwrap();
        assert!(apply_terms(&ops, &s).is_ok());
    }

    #[test]
    fn pauli_decomposition() {
        let c = QuditMatrix::projector(2, 1).pauli_coefficients().unwrap();
        assert!((c[0] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((c[3] - C64::new(-0.5, 0.0)).norm() < 1e-15);
        let c = QuditMatrix::pauli_y().pauli_coefficients().unwrap();
        assert!((c[2] - ONE).norm() < 1e-15);
    }

    #[test]
    fn position_terms_have_no_momentum_symbol() {
        let mut ops = OperatorTermList::new(1, 1);
        ops.push(Term::on_mode(
            1.0,
            QuditMatrix::identity(1),
            1,
            0,
            ModeFactor::Position,
            AncillaFactor::Identity,
        ))
        .unwrap();
        assert!(matches!(
            ops.momentum_symbol(),
            Err(Error::NotMomentumDiagonal)
        ));
    }
}
