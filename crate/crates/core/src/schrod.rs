//! Schrodingerisation: the Hermitian split `A = A1 - i A2` of a relaxation
//! generator, the dilated Hamiltonian `H = A2 (x) eta + A1 (x) 1`, and the
//! ancilla states it acts on.

use std::f64::consts::{PI, SQRT_2};

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Centering, Grid1D};
use crate::operator::{
    assemble_dense, dense_hermitian_deviation, AncillaFactor, ModeFactor, OperatorTermList,
    QuditMatrix, Term,
};
use crate::relaxation::{Flavor, RelaxationSystem};
use crate::state::{HybridState, RegisterLayout};

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSplit {
    pub a1: OperatorTermList,
    pub a2: OperatorTermList,
}

fn nonzero(x: f64) -> bool {
    x != 0.0
}

/// Splits `A = i (sum_j M_j d_j + S)` under `d_j -> i p_j`:
/// `A1 = -sum_j M_j p_j + i (S - S^T) / 2`, `A2 = -(S + S^T) / 2`.
pub fn assemble_generators(sys: &RelaxationSystem) -> Result<GeneratorSplit> {
    let k = sys.levels();
    let d = sys.dimension();
    let mut a1 = OperatorTermList::new(k, d);
    let mut a2 = OperatorTermList::new(k, d);

    for j in 0..d {
        let m = sys.coupling_matrix(j);
        let asym = (&m - m.transpose()).amax();
        if asym > 0.0 {
            return Err(Error::NotHermitian(asym));
        }
        for a in 0..k {
            for b in a..k {
                let c = m[(a, b)];
                if !nonzero(c) {
                    continue;
                }
                let q = if a == b {
                    QuditMatrix::projector(k, a)
                } else {
                    QuditMatrix::flip(k, a, b)
                };
                a1.push(Term::on_mode(
                    -c,
                    q,
                    d,
                    j,
                    ModeFactor::Momentum,
                    AncillaFactor::Identity,
                ))?;
            }
        }
    }

    let s = sys.source_matrix();
    for a in 0..k {
        if nonzero(s[(a, a)]) {
            a2.push(Term::local(
                -s[(a, a)],
                QuditMatrix::projector(k, a),
                d,
                AncillaFactor::Identity,
            ))?;
        }
        for b in a + 1..k {
            let anti = 0.5 * (s[(a, b)] - s[(b, a)]);
            if nonzero(anti) {
                a1.push(Term::local(
                    anti,
                    QuditMatrix::flip_y(k, a, b),
                    d,
                    AncillaFactor::Identity,
                ))?;
            }
            let sym = -0.5 * (s[(a, b)] + s[(b, a)]);
            if nonzero(sym) {
                a2.push(Term::local(
                    sym,
                    QuditMatrix::flip(k, a, b),
                    d,
                    AncillaFactor::Identity,
                ))?;
            }
        }
    }

    Ok(GeneratorSplit {
        a1: a1.into_hermitian(HERMITIAN_TOL)?,
        a2: a2.into_hermitian(HERMITIAN_TOL)?,
    })
}

/// `H = A2 (x) eta + A1 (x) 1_eta`.
pub fn schrodingerise(gs: &GeneratorSplit) -> Result<OperatorTermList> {
    let mut h = OperatorTermList::new(gs.a1.levels(), gs.a1.modes());
    for t in gs.a2.terms() {
        h.push(t.with_ancilla(AncillaFactor::Eta))?;
    }
    for t in gs.a1.terms() {
        h.push(t.with_ancilla(AncillaFactor::Identity))?;
    }
    let h = h.into_hermitian(HERMITIAN_TOL)?;
    let dev = dense_deviation_small(&h)?;
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(h)
}

/// Hermiticity defect of `ops` assembled densely on a minimal layout.
pub fn dense_deviation_small(ops: &OperatorTermList) -> Result<f64> {
    let g = Grid1D::symmetric(2, 1.0, Centering::Node)?;
    let anc = ops
        .uses_ancilla()
        .then(|| Grid1D::symmetric(4, 2.0, Centering::Cell))
        .transpose()?;
    let layout = RegisterLayout::new(ops.levels(), vec![g; ops.modes()], anc)?;
    if layout.amplitude_count() > 1024 {
        return Ok(ops.hermitian_deviation());
    }
    Ok(dense_hermitian_deviation(&assemble_dense(ops, &layout)?))
}

/// `H / factor` together with the factor by which evolution time stretches.
#[derive(Clone, Debug)]
pub struct Rescaled {
    pub hamiltonian: OperatorTermList,
    pub time_factor: f64,
}

pub fn rescale(h: &OperatorTermList, factor: f64) -> Result<Rescaled> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(invalid("factor", format!("must be positive, got {factor}")));
    }
    Ok(Rescaled {
        hamiltonian: h.scaled(1.0 / factor),
        time_factor: factor,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaKind {
    XiExact,
    Gaussian { s: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AncillaState {
    pub grid: Grid1D,
    pub amplitudes: Vec<C64>,
    pub kind: AncillaKind,
}

/// Cell-centred `[-16, 16)` with 256 points.
pub fn default_ancilla_grid() -> Grid1D {
    Grid1D::symmetric(256, 16.0, Centering::Cell).expect("valid default grid")
}

fn normalized(grid: &Grid1D, raw: Vec<f64>) -> Vec<C64> {
    let norm = (grid.spacing() * raw.iter().map(|a| a * a).sum::<f64>()).sqrt();
    raw.into_iter().map(|a| C64::new(a / norm, 0.0)).collect()
}

/// `|Xi> ~ e^{-|xi|}` sampled on the grid and normalised.
pub fn ancilla_xi(grid: &Grid1D) -> AncillaState {
    let reach = grid.x_min().abs().min(grid.x_max().abs());
    if (-reach).exp() > 1e-6 {
        warn!(
            "ancilla domain reaches only |xi| = {reach}; the e^-|xi| tail is truncated at {:e}",
            (-reach).exp()
        );
    }
    let raw = grid.points().iter().map(|x| (-x.abs()).exp()).collect();
    AncillaState {
        grid: grid.clone(),
        amplitudes: normalized(grid, raw),
        kind: AncillaKind::XiExact,
    }
}

/// Squeezed vacuum `~ exp(-xi^2 / (2 s^2))`.
pub fn ancilla_gaussian(grid: &Grid1D, s: f64) -> Result<AncillaState> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    let raw = grid
        .points()
        .iter()
        .map(|x| (-x * x / (2.0 * s * s)).exp())
        .collect();
    Ok(AncillaState {
        grid: grid.clone(),
        amplitudes: normalized(grid, raw),
        kind: AncillaKind::Gaussian { s },
    })
}

impl AncillaState {
    pub fn norm(&self) -> f64 {
        (self.grid.spacing() * self.amplitudes.iter().map(C64::norm_sqr).sum::<f64>()).sqrt()
    }

    /// `<self|other>` on a shared grid.
    pub fn overlap(&self, other: &AncillaState) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::LayoutMismatch(
                "ancilla states live on different grids".into(),
            ));
        }
        let s: C64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.spacing())
    }

    /// `w (x) ancilla`.
    pub fn attach(&self, w: &HybridState) -> Result<HybridState> {
        w.with_ancilla(&self.grid, &self.amplitudes)
    }
}

/// `e^{z^2} erfc(z)` for `z >= 0`.
fn erfcx(z: f64) -> f64 {
    if z < 25.0 {
        (z * z).exp() * libm::erfc(z)
    } else {
        // asymptotic series; terms shrink fast for z >= 25
        let inv2 = 1.0 / (2.0 * z * z);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..12 {
            term *= -((2 * n - 1) as f64) * inv2;
            sum += term;
        }
        sum / (z * PI.sqrt())
    }
}

/// `|<Xi|G>| = sqrt(2 s) e^{s^2/2} pi^{1/4} erfc(s / sqrt 2)`.
pub fn gaussian_fidelity(s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("must be positive, got {s}")));
    }
    Ok((2.0 * s).sqrt() * PI.powf(0.25) * erfcx(s / SQRT_2))
}

/// `|<Xi|G>|` by midpoint quadrature on `n` cells over `[-half_width, half_width)`.
pub fn quadrature_fidelity(s: f64, n: usize, half_width: f64) -> Result<f64> {
    let grid = Grid1D::symmetric(n, half_width, Centering::Cell)?;
    let g = ancilla_gaussian(&grid, s)?;
    Ok(ancilla_xi(&grid).overlap(&g)?.norm())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuditEntry {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coefficient: f64,
    pub qudit: Vec<QuditEntry>,
    /// 1-based spatial mode the term acts on, if any.
    pub mode: Option<usize>,
    pub quadrature: ModeFactor,
    pub ancilla: AncillaFactor,
    pub source: String,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliFamily {
    pub pauli: String,
    pub mode: Option<usize>,
    pub quadrature: ModeFactor,
    pub ancilla: AncillaFactor,
    pub coefficient: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianReport {
    pub flavor: Flavor,
    pub dimension: usize,
    pub qudit_levels: usize,
    pub qumodes: usize,
    pub system_size: String,
    pub term_count: usize,
    pub terms: Vec<TermRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pauli_families: Option<Vec<PauliFamily>>,
    pub hermitian_deviation: f64,
    pub system: RelaxationSystem,
}

fn level_name(k: usize) -> &'static str {
    match k {
        2 => ", qubit",
        3 => ", qutrit",
        _ => "",
    }
}

pub fn system_size_line(levels: usize, qumodes: usize) -> String {
    format!(
        "1 qudit ({levels} levels{}) and {qumodes} qumodes",
        level_name(levels)
    )
}

fn qudit_label(q: &QuditMatrix) -> String {
    let k = q.dim();
    let mut parts = Vec::new();
    for a in 0..k {
        for b in a..k {
            let (x, y) = (q.get(a, b), q.get(b, a));
            if a == b {
                if x.norm() > 0.0 {
                    parts.push(format!("{}|{a}><{a}|", coefficient_prefix(x)));
                }
            } else if x.norm() > 0.0 || y.norm() > 0.0 {
                if x == y {
                    parts.push(format!("{}(|{a}><{b}|+|{b}><{a}|)", coefficient_prefix(x)));
                } else if x == -y.conj() && x.re == 0.0 {
                    parts.push(format!(
                        "{}(i|{a}><{b}|-i|{b}><{a}|)",
                        coefficient_prefix(C64::new(x.im, 0.0))
                    ));
                } else {
                    parts.push(format!(
                        "{}|{a}><{b}|+{}|{b}><{a}|",
                        coefficient_prefix(x),
                        coefficient_prefix(y)
                    ));
                }
            }
        }
    }
    parts.join("+")
}

fn coefficient_prefix(z: C64) -> String {
    if z == C64::new(1.0, 0.0) {
        String::new()
    } else if z.im == 0.0 {
        format!("{}*", z.re)
    } else {
        format!("({}{:+}i)*", z.re, z.im)
    }
}

fn factor_label(mode: Option<(usize, ModeFactor)>, anc: AncillaFactor) -> String {
    let m = match mode {
        Some((j, ModeFactor::Momentum)) => format!("p_{}", j + 1),
        Some((j, ModeFactor::Position)) => format!("x_{}", j + 1),
        _ => "1_x".to_string(),
    };
    let a = match anc {
        AncillaFactor::Eta => "eta",
        AncillaFactor::Identity => "1_eta",
    };
    format!("{m} (x) {a}")
}

fn pauli_families(h: &OperatorTermList) -> Vec<PauliFamily> {
    const NAMES: [&str; 4] = ["1", "sigma_x", "sigma_y", "sigma_z"];
    let mut out = Vec::new();
    for ((modes, anc), q) in h.grouped() {
        let Some(coef) = q.pauli_coefficients() else {
            continue;
        };
        let active = modes
            .iter()
            .enumerate()
            .find(|(_, m)| **m != ModeFactor::Identity)
            .map(|(j, m)| (j, *m));
        for (name, c) in NAMES.iter().zip(coef) {
            if c.norm() < 1e-14 {
                continue;
            }
            out.push(PauliFamily {
                pauli: name.to_string(),
                mode: active.map(|(j, _)| j + 1),
                quadrature: active.map_or(ModeFactor::Identity, |(_, f)| f),
                ancilla: anc,
                coefficient: c.re,
                label: format!("{name} (x) {}", factor_label(active, anc)),
            });
        }
    }
    out
}

pub fn hamiltonian_report(sys: &RelaxationSystem) -> Result<HamiltonianReport> {
    let gs = assemble_generators(sys)?;
    let h = schrodingerise(&gs)?;
    let terms = h
        .terms()
        .iter()
        .map(|t| {
            let active = t.active_mode();
            TermRecord {
                coefficient: t.coefficient(),
                qudit: t
                    .qudit()
                    .nonzero_entries()
                    .into_iter()
                    .map(|(row, col, z)| QuditEntry {
                        row,
                        col,
                        re: z.re,
                        im: z.im,
                    })
                    .collect(),
                mode: active.map(|(j, _)| j + 1),
                quadrature: active.map_or(ModeFactor::Identity, |(_, f)| f),
                ancilla: t.ancilla(),
                source: match t.ancilla() {
                    AncillaFactor::Eta => "A2".into(),
                    AncillaFactor::Identity => "A1".into(),
                },
                label: format!(
                    "{} * {} (x) {}",
                    t.coefficient(),
                    qudit_label(t.qudit()),
                    factor_label(active, t.ancilla())
                ),
            }
        })
        .collect::<Vec<_>>();
    let k = sys.levels();
    Ok(HamiltonianReport {
        flavor: sys.flavor(),
        dimension: sys.dimension(),
        qudit_levels: k,
        qumodes: sys.dimension() + 1,
        system_size: system_size_line(k, sys.dimension() + 1),
        term_count: terms.len(),
        terms,
        pauli_families: (k == 2).then(|| pauli_families(&h)),
        hermitian_deviation: dense_deviation_small(&h)?,
        system: sys.clone(),
    })
}

/// Dense `A1 - i A2` symbol at spatial momentum `p` (for small checks).
pub fn generator_block(gs: &GeneratorSplit, p: &[f64]) -> Result<DMatrix<C64>> {
    let b1 = gs.a1.momentum_symbol()?.block(p, 0.0);
    let b2 = gs.a2.momentum_symbol()?.block(p, 0.0);
    Ok(b1 - b2 * C64::new(0.0, 1.0))
}
