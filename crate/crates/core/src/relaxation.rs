//! First-order hyperbolic relaxation systems and their parabolic limits.
//!
//! Every system has the form (u on level 0, fluxes v_i on levels 1..=d)
//!
//! ```text
//! u_t   = -sum_ij (alpha_ij / eps_j) d_j v_i + sum_j c_j d_j u + sum_i (delta_i / eps_i) v_i - r u
//! v_i,t = -sum_k (alpha_ik / eps_k) d_k u - v_i / (kappa_i eps_i^2)
//! ```
//!
//! where `kappa` is a per-flux relaxation scale (the conductivity for heat,
//! `sigma^2 / 2` for Black-Scholes) and `c` a direct convection velocity.
//! The small-eps limit is `u_t = sum_jk D_jk d_j d_k u + gamma . grad u - r u`.

use std::fmt;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::state::{Axis, HybridState};

const SYM_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Log-price change of variables `S_j = S_j(0) e^{x_j}` (optionally rescaled
/// by `sigma_j`) together with the time reversal `t -> T - t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlackScholesLog {
    pub rate: f64,
    pub sigmas: Vec<f64>,
    /// Nearest-neighbour correlations `kappa_{j,j+1}`.
    #[serde(default)]
    pub correlations: Vec<f64>,
    /// Asset drifts `mu_j`; equal to the rate under the risk-neutral measure.
    pub drifts: Vec<f64>,
    #[serde(default)]
    pub maturity: Option<f64>,
    /// Whether `x_j` was divided by `sigma_j`.
    #[serde(default)]
    pub rescaled: bool,
}

impl BlackScholesLog {
    pub fn log_coordinates(&self, prices: &[f64], spot: &[f64]) -> Vec<f64> {
        prices
            .iter()
            .zip(spot)
            .zip(&self.sigmas)
            .map(|((s, s0), sig)| {
                let x = (s / s0).ln();
                if self.rescaled {
                    x / sig
                } else {
                    x
                }
            })
            .collect()
    }

    pub fn prices(&self, x: &[f64], spot: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(spot)
            .zip(&self.sigmas)
            .map(|((x, s0), sig)| {
                let y = if self.rescaled { x * sig } else { *x };
                s0 * y.exp()
            })
            .collect()
    }

    /// Calendar time corresponding to forward time `tau`.
    pub fn calendar_time(&self, tau: f64) -> Option<f64> {
        self.maturity.map(|t| t - tau)
    }

    /// Initial datum of the forward problem for a terminal payoff.
    pub fn initial_condition<'a>(
        &'a self,
        payoff: impl Fn(&[f64]) -> f64 + 'a,
        spot: &'a [f64],
    ) -> impl Fn(&[f64]) -> f64 + 'a {
        move |x| payoff(&self.prices(x, spot))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdeTransform {
    BlackScholesLog(BlackScholesLog),
}

/// `u_t = sum_jk D_jk d_j d_k u + gamma . grad u - r u`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PdeRepr", into = "PdeRepr")]
pub struct ParabolicPDE {
    diffusion: DMatrix<f64>,
    drift: Vec<f64>,
    decay: f64,
    transform: Option<PdeTransform>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PdeRepr {
    d: usize,
    diffusion: Vec<Vec<f64>>,
    drift: Vec<f64>,
    decay: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transform: Option<PdeTransform>,
}

impl TryFrom<PdeRepr> for ParabolicPDE {
    type Error = Error;

    fn try_from(r: PdeRepr) -> Result<Self> {
        let m = matrix_from_rows(&r.diffusion, r.d, "diffusion")?;
        let mut pde = ParabolicPDE::new(m, r.drift, r.decay)?;
        pde.transform = r.transform;
        Ok(pde)
    }
}

impl From<ParabolicPDE> for PdeRepr {
    fn from(p: ParabolicPDE) -> Self {
        PdeRepr {
            d: p.dimension(),
            diffusion: matrix_rows(&p.diffusion),
            drift: p.drift,
            decay: p.decay,
            transform: p.transform,
        }
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn matrix_from_rows(
    rows: &[Vec<f64>],
    d: usize,
    what: &'static str,
) -> Result<DMatrix<f64>> {
    if rows.len() != d {
        return Err(Error::DimensionMismatch {
            what,
            expected: d,
            found: rows.len(),
        });
    }
    for r in rows {
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                what,
                expected: d,
                found: r.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut a: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            a = a.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    a
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn check_psd(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            what: "diffusion columns",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(invalid("diffusion", "entries must be finite"));
    }
    let asym = max_asymmetry(m);
    let scale = m.amax().max(1.0);
    if asym > SYM_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let lmin = min_eigenvalue(m);
    if lmin < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite(lmin));
    }
    Ok(())
}

impl ParabolicPDE {
    pub fn new(diffusion: DMatrix<f64>, drift: Vec<f64>, decay: f64) -> Result<Self> {
        check_psd(&diffusion)?;
        if drift.len() != diffusion.nrows() {
            return Err(Error::DimensionMismatch {
                what: "drift",
                expected: diffusion.nrows(),
                found: drift.len(),
            });
        }
        if drift.iter().any(|g| !g.is_finite()) || !decay.is_finite() {
            return Err(invalid("drift", "coefficients must be finite"));
        }
        Ok(Self {
            diffusion,
            drift,
            decay,
            transform: None,
        })
    }

    /// Heat equation with diagonal diffusivities.
    pub fn heat(ks: &[f64]) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(ks)),
            vec![0.0; ks.len()],
            0.0,
        )
    }

    pub fn with_transform(mut self, transform: PdeTransform) -> Self {
        self.transform = Some(transform);
        self
    }

    pub fn dimension(&self) -> usize {
        self.diffusion.nrows()
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn transform(&self) -> Option<&PdeTransform> {
        self.transform.as_ref()
    }

    /// Largest coefficient-wise difference in D, gamma and r.
    pub fn max_coefficient_difference(&self, other: &ParabolicPDE) -> f64 {
        if self.dimension() != other.dimension() {
            return f64::INFINITY;
        }
        let dd = (&self.diffusion - &other.diffusion).amax();
        let dg = self
            .drift
            .iter()
            .zip(&other.drift)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        dd.max(dg).max((self.decay - other.decay).abs())
    }

    /// Fourier symbol `-p^T D p + i gamma . p - r`.
    pub fn symbol(&self, p: &[f64]) -> C64 {
        let d = self.dimension();
        let mut quad = 0.0;
        for j in 0..d {
            for k in 0..d {
                quad += p[j] * self.diffusion[(j, k)] * p[k];
            }
        }
        let lin: f64 = self.drift.iter().zip(p).map(|(g, p)| g * p).sum();
        C64::new(-quad - self.decay, lin)
    }
}

/// Forward log-price PDE of the 1D Black-Scholes equation.
pub fn black_scholes_log_transform(r: f64, sigma: f64) -> Result<ParabolicPDE> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if !r.is_finite() {
        return Err(invalid("r", "must be finite"));
    }
    let half_var = 0.5 * sigma * sigma;
    let pde = ParabolicPDE::new(DMatrix::from_element(1, 1, half_var), vec![r - half_var], r)?;
    Ok(
        pde.with_transform(PdeTransform::BlackScholesLog(BlackScholesLog {
            rate: r,
            sigmas: vec![sigma],
            correlations: Vec::new(),
            drifts: vec![r],
            maturity: None,
            rescaled: false,
        })),
    )
}

/// Multi-asset Black-Scholes in the coordinates `x_j = ln(S_j / S_j(0)) / sigma_j`:
/// `D_jj = 1/2`, `D_{j,j+1} = D_{j+1,j} = kappa_{j,j+1} / 2`,
/// `gamma_j = mu_j / sigma_j - sigma_j / 2`, decay `r`.
pub fn black_scholes_rescaled_pde(
    r: f64,
    sigmas: &[f64],
    correlations: &[f64],
    mus: &[f64],
) -> Result<ParabolicPDE> {
    let d = sigmas.len();
    if d == 0 {
        return Err(invalid("sigmas", "need at least one asset"));
    }
    if mus.len() != d {
        return Err(Error::DimensionMismatch {
            what: "drifts",
            expected: d,
            found: mus.len(),
        });
    }
    if correlations.len() != d - 1 {
        return Err(Error::DimensionMismatch {
            what: "correlations",
            expected: d - 1,
            found: correlations.len(),
        });
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(invalid("sigmas", format!("must be positive, got {s}")));
    }
    let mut m = DMatrix::from_diagonal_element(d, d, 0.5);
    for (j, kap) in correlations.iter().enumerate() {
        m[(j, j + 1)] = 0.5 * kap;
        m[(j + 1, j)] = 0.5 * kap;
    }
    let gamma = sigmas
        .iter()
        .zip(mus)
        .map(|(s, mu)| mu / s - s / 2.0)
        .collect();
    let pde = ParabolicPDE::new(m, gamma, r)?;
    Ok(
        pde.with_transform(PdeTransform::BlackScholesLog(BlackScholesLog {
            rate: r,
            sigmas: sigmas.to_vec(),
            correlations: correlations.to_vec(),
            drifts: mus.to_vec(),
            maturity: None,
            rescaled: true,
        })),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    #[serde(rename = "heat1d")]
    Heat1D,
    #[serde(rename = "heat_dd")]
    HeatDD,
    #[serde(rename = "black_scholes_1d")]
    BlackScholes1D,
    #[serde(rename = "black_scholes_dd")]
    BlackScholesDD,
    FokkerPlanck,
    General,
}

impl Flavor {
    pub const ALL: [Flavor; 6] = [
        Flavor::Heat1D,
        Flavor::HeatDD,
        Flavor::BlackScholes1D,
        Flavor::BlackScholesDD,
        Flavor::FokkerPlanck,
        Flavor::General,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Flavor::Heat1D => "heat1d",
            Flavor::HeatDD => "heat_dd",
            Flavor::BlackScholes1D => "black_scholes_1d",
            Flavor::BlackScholesDD => "black_scholes_dd",
            Flavor::FokkerPlanck => "fokker_planck",
            Flavor::General => "general",
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRepr", into = "SystemRepr")]
pub struct RelaxationSystem {
    flavor: Flavor,
    epsilons: Vec<f64>,
    alpha: DMatrix<f64>,
    flux_scale: Vec<f64>,
    convection: Vec<f64>,
    delta: Vec<f64>,
    decay: f64,
    target: ParabolicPDE,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemRepr {
    flavor: Flavor,
    d: usize,
    epsilons: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    flux_scale: Vec<f64>,
    convection: Vec<f64>,
    delta: Vec<f64>,
    r: f64,
    target: ParabolicPDE,
}

impl TryFrom<SystemRepr> for RelaxationSystem {
    type Error = Error;

    fn try_from(r: SystemRepr) -> Result<Self> {
        let alpha = matrix_from_rows(&r.alpha, r.d, "alpha")?;
        RelaxationSystem::from_parts(
            r.flavor,
            r.epsilons,
            alpha,
            r.flux_scale,
            r.convection,
            r.delta,
            r.r,
            r.target,
        )
    }
}

impl From<RelaxationSystem> for SystemRepr {
    fn from(s: RelaxationSystem) -> Self {
        SystemRepr {
            flavor: s.flavor,
            d: s.dimension(),
            alpha: matrix_rows(&s.alpha),
            epsilons: s.epsilons,
            flux_scale: s.flux_scale,
            convection: s.convection,
            delta: s.delta,
            r: s.decay,
            target: s.target,
        }
    }
}

fn check_epsilons(eps: &[f64]) -> Result<()> {
    for &e in eps {
        if !(e > 0.0 && e < 1.0) {
            return Err(invalid("eps", format!("must lie in (0, 1), got {e}")));
        }
        if e >= 0.5 {
            warn!("eps = {e} is not small; the relaxation limit will be inaccurate");
        }
    }
    Ok(())
}

fn check_len(what: &'static str, v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            what,
            expected: d,
            found: v.len(),
        });
    }
    Ok(())
}

fn check_positive(name: &'static str, v: &[f64]) -> Result<()> {
    match v.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        Some(x) => Err(invalid(name, format!("must be positive, got {x}"))),
        None => Ok(()),
    }
}

impl RelaxationSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        flavor: Flavor,
        epsilons: Vec<f64>,
        alpha: DMatrix<f64>,
        flux_scale: Vec<f64>,
        convection: Vec<f64>,
        delta: Vec<f64>,
        decay: f64,
        target: ParabolicPDE,
    ) -> Result<Self> {
        let d = epsilons.len();
        if d == 0 {
            return Err(invalid("eps", "need at least one direction"));
        }
        check_epsilons(&epsilons)?;
        if alpha.nrows() != d || alpha.ncols() != d {
            return Err(Error::DimensionMismatch {
                what: "alpha",
                expected: d,
                found: alpha.nrows(),
            });
        }
        check_len("flux_scale", &flux_scale, d)?;
        check_positive("flux_scale", &flux_scale)?;
        check_len("convection", &convection, d)?;
        check_len("delta", &delta, d)?;
        if target.dimension() != d {
            return Err(Error::DimensionMismatch {
                what: "target dimension",
                expected: d,
                found: target.dimension(),
            });
        }
        let finite = alpha
            .iter()
            .chain(&convection)
            .chain(&delta)
            .all(|x| x.is_finite());
        if !finite || !decay.is_finite() {
            return Err(invalid("coefficients", "must be finite"));
        }
        Ok(Self {
            flavor,
            epsilons,
            alpha,
            flux_scale,
            convection,
            delta,
            decay,
            target,
        })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn dimension(&self) -> usize {
        self.epsilons.len()
    }

    /// Qudit levels needed: u plus one flux per direction.
    pub fn levels(&self) -> usize {
        self.dimension() + 1
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn flux_scale(&self) -> &[f64] {
        &self.flux_scale
    }

    pub fn convection(&self) -> &[f64] {
        &self.convection
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn target(&self) -> &ParabolicPDE {
        &self.target
    }

    /// `1 / (kappa_i eps_i^2)` for each flux.
    pub fn relaxation_rates(&self) -> Vec<f64> {
        self.flux_scale
            .iter()
            .zip(&self.epsilons)
            .map(|(k, e)| 1.0 / (k * e * e))
            .collect()
    }

    /// `M_j` in `w_t = sum_j M_j d_j w + S w`.
    pub fn coupling_matrix(&self, j: usize) -> DMatrix<f64> {
        let k = self.levels();
        let mut m = DMatrix::zeros(k, k);
        m[(0, 0)] = self.convection[j];
        for i in 0..self.dimension() {
            let a = -self.alpha[(i, j)] / self.epsilons[j];
            m[(0, i + 1)] = a;
            m[(i + 1, 0)] = a;
        }
        m
    }

    /// `S` in `w_t = sum_j M_j d_j w + S w`.
    pub fn source_matrix(&self) -> DMatrix<f64> {
        let k = self.levels();
        let mut s = DMatrix::zeros(k, k);
        s[(0, 0)] = -self.decay;
        let rates = self.relaxation_rates();
        for i in 0..self.dimension() {
            s[(0, i + 1)] = self.delta[i] / self.epsilons[i];
            s[(i + 1, i + 1)] = -rates[i];
        }
        s
    }

    /// Flux Jacobian `J_j = -M_j` for the conservation form `w_t + J_j d_j w = ...`.
    pub fn flux_jacobian(&self, j: usize) -> DMatrix<f64> {
        -self.coupling_matrix(j)
    }

    /// Ascending eigenvalues of the direction-`j` flux Jacobian.
    pub fn jacobian_eigenvalues(&self, j: usize) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.flux_jacobian(j))
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Largest characteristic speed over all directions.
    pub fn max_speed(&self) -> f64 {
        (0..self.dimension())
            .flat_map(|j| self.jacobian_eigenvalues(j))
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn max_coupling_asymmetry(&self) -> f64 {
        (0..self.dimension())
            .map(|j| max_asymmetry(&self.coupling_matrix(j)))
            .fold(0.0, f64::max)
    }

    /// Formal small-eps limit obtained by substituting the flux closure
    /// `v_i = -kappa_i eps_i^2 sum_k (alpha_ik / eps_k) d_k u` into the u equation.
    pub fn effective_pde(&self) -> ParabolicPDE {
        let d = self.dimension();
        let eps = &self.epsilons;
        let mut dm = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                dm[(j, k)] = (0..d)
                    .map(|i| {
                        self.flux_scale[i]
                            * self.alpha[(i, j)]
                            * self.alpha[(i, k)]
                            * eps[i]
                            * eps[i]
                            / (eps[j] * eps[k])
                    })
                    .sum();
            }
        }
        let gamma = (0..d)
            .map(|k| {
                self.convection[k]
                    - (0..d)
                        .map(|i| {
                            self.delta[i] * self.flux_scale[i] * eps[i] * self.alpha[(i, k)]
                                / eps[k]
                        })
                        .sum::<f64>()
            })
            .collect();
        // symmetrise away rounding so the result passes validation
        let dm = (&dm + dm.transpose()) * 0.5;
        ParabolicPDE {
            diffusion: dm,
            drift: gamma,
            decay: self.decay,
            transform: self.target.transform.clone(),
        }
    }

    /// `max |D_target - D_effective|` over all entries.
    pub fn constraint_residual(&self) -> f64 {
        (self.target.diffusion() - self.effective_pde().diffusion()).amax()
    }

    /// Compares every coefficient (ignoring the flavor tag).
    pub fn same_coefficients(&self, other: &RelaxationSystem, tol: f64) -> bool {
        if self.dimension() != other.dimension() {
            return false;
        }
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
        close(&self.epsilons, &other.epsilons)
            && (&self.alpha - &other.alpha).amax() <= tol
            && close(&self.flux_scale, &other.flux_scale)
            && close(&self.convection, &other.convection)
            && close(&self.delta, &other.delta)
            && (self.decay - other.decay).abs() <= tol
    }

    /// Spectral right-hand side `sum_j M_j d_j w + S w` on a position-basis state.
    pub fn rhs(&self, w: &HybridState) -> Result<HybridState> {
        let layout = w.layout();
        if layout.qudit_levels() != self.levels() || layout.dimension() != self.dimension() {
            return Err(Error::LayoutMismatch(format!(
                "system needs {} levels on {} modes",
                self.levels(),
                self.dimension()
            )));
        }
        let w = w.all_position();
        let per = layout.mode_points();
        let k = self.levels();
        let mut out = vec![C64::new(0.0, 0.0); layout.amplitude_count()];
        let mut mix = |m: &DMatrix<f64>, src: &[C64]| {
            for a in 0..k {
                for b in 0..k {
                    let c = m[(a, b)];
                    if c == 0.0 {
                        continue;
                    }
                    for i in 0..per {
                        out[a * per + i] += c * src[b * per + i];
                    }
                }
            }
        };
        for j in 0..self.dimension() {
            let dj = w.derivative(Axis::Spatial(j))?;
            mix(&self.coupling_matrix(j), dj.amplitudes());
        }
        mix(&self.source_matrix(), w.amplitudes());
        HybridState::from_amplitudes(layout.clone(), out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn unit_alpha(d: usize) -> DMatrix<f64> {
    DMatrix::identity(d, d)
}

pub fn build_heat_1d(k: f64, eps: f64) -> Result<RelaxationSystem> {
    let mut s = build_heat_dd(&[k], &[eps])?;
    s.flavor = Flavor::Heat1D;
    Ok(s)
}

pub fn build_heat_dd(ks: &[f64], eps: &[f64]) -> Result<RelaxationSystem> {
    let d = ks.len();
    check_len("eps", eps, d)?;
    check_positive("k", ks)?;
    RelaxationSystem::from_parts(
        Flavor::HeatDD,
        eps.to_vec(),
        unit_alpha(d),
        ks.to_vec(),
        vec![0.0; d],
        vec![0.0; d],
        0.0,
        ParabolicPDE::heat(ks)?,
    )
}

pub fn build_black_scholes_1d(r: f64, sigma: f64, eps: f64) -> Result<RelaxationSystem> {
    let target = black_scholes_log_transform(r, sigma)?;
    let half_var = 0.5 * sigma * sigma;
    RelaxationSystem::from_parts(
        Flavor::BlackScholes1D,
        vec![eps],
        unit_alpha(1),
        vec![half_var],
        vec![r - half_var],
        vec![0.0],
        r,
        target,
    )
}

/// Multi-asset Black-Scholes on the rescaled log-price PDE. Diffusion is
/// carried by `solve_alpha`, drift by direct convection of u.
pub fn build_black_scholes_dd(
    r: f64,
    sigmas: &[f64],
    correlations: &[f64],
    mus: &[f64],
    eps: &[f64],
) -> Result<RelaxationSystem> {
    let target = black_scholes_rescaled_pde(r, sigmas, correlations, mus)?;
    check_len("eps", eps, sigmas.len())?;
    let alpha = solve_alpha(target.diffusion(), eps)?;
    let d = sigmas.len();
    RelaxationSystem::from_parts(
        Flavor::BlackScholesDD,
        eps.to_vec(),
        alpha,
        vec![1.0; d],
        target.drift().to_vec(),
        vec![0.0; d],
        r,
        target,
    )
}

pub fn build_fokker_planck(mu: &[f64], ds: &[f64], eps: &[f64]) -> Result<RelaxationSystem> {
    let d = ds.len();
    check_len("mu", mu, d)?;
    check_len("eps", eps, d)?;
    check_positive("Ds", ds)?;
    let gamma: Vec<f64> = mu.iter().map(|m| -m).collect();
    let target = ParabolicPDE::new(
        DMatrix::from_diagonal(&DVector::from_column_slice(ds)),
        gamma.clone(),
        0.0,
    )?;
    RelaxationSystem::from_parts(
        Flavor::FokkerPlanck,
        eps.to_vec(),
        unit_alpha(d),
        ds.to_vec(),
        gamma,
        vec![0.0; d],
        0.0,
        target,
    )
}

/// Coupling matrix `alpha` with `D_jk = sum_i alpha_ij alpha_ik eps_i^2 / (eps_j eps_k)`.
///
/// With `beta_ij = alpha_ij eps_i / eps_j` the constraint is `beta^T beta = D`;
/// `beta` is the transposed Cholesky factor of D, or the symmetric square root
/// when D is singular.
pub fn solve_alpha(d_mat: &DMatrix<f64>, eps: &[f64]) -> Result<DMatrix<f64>> {
    let d = d_mat.nrows();
    check_psd(d_mat)?;
    check_len("eps", eps, d)?;
    check_epsilons(eps)?;
    let beta = match d_mat.clone().cholesky() {
        Some(ch) => ch.l().transpose(),
        None => {
            let eig = SymmetricEigen::new(d_mat.clone());
            let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
            &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
        }
    };
    Ok(DMatrix::from_fn(d, d, |i, j| {
        beta[(i, j)] * eps[j] / eps[i]
    }))
}

fn is_positive_diagonal(m: &DMatrix<f64>) -> bool {
    let d = m.nrows();
    (0..d).all(|i| m[(i, i)] > 0.0 && (0..d).all(|j| i == j || m[(i, j)] == 0.0))
}

/// Relaxation system for an arbitrary constant-coefficient parabolic PDE.
/// Drift is carried through the flux source coefficients `delta`.
pub fn build_general_parabolic(pde: &ParabolicPDE, eps: &[f64]) -> Result<RelaxationSystem> {
    let d = pde.dimension();
    check_len("eps", eps, d)?;
    check_epsilons(eps)?;
    let (alpha, kappa) = if is_positive_diagonal(pde.diffusion()) {
        (
            unit_alpha(d),
            pde.diffusion().diagonal().iter().cloned().collect(),
        )
    } else {
        (solve_alpha(pde.diffusion(), eps)?, vec![1.0; d])
    };
    let delta = solve_delta(&alpha, &kappa, eps, pde.drift())?;
    RelaxationSystem::from_parts(
        Flavor::General,
        eps.to_vec(),
        alpha,
        kappa,
        vec![0.0; d],
        delta,
        pde.decay(),
        pde.clone(),
    )
}

/// Solves `gamma_k = -sum_i delta_i kappa_i eps_i alpha_ik / eps_k` for delta.
fn solve_delta(
    alpha: &DMatrix<f64>,
    kappa: &[f64],
    eps: &[f64],
    gamma: &[f64],
) -> Result<Vec<f64>> {
    let d = gamma.len();
    if gamma.iter().all(|g| *g == 0.0) {
        return Ok(vec![0.0; d]);
    }
    let b = DMatrix::from_fn(d, d, |k, i| -kappa[i] * eps[i] * alpha[(i, k)] / eps[k]);
    let g = DVector::from_column_slice(gamma);
    let svd = b.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max().max(1e-300);
    let delta = svd
        .solve(&g, tol)
        .map_err(|e| invalid("drift", e.to_string()))?;
    let resid = &b * &delta - &g;
    let (worst, r) = resid
        .iter()
        .enumerate()
        .map(|(k, r)| (k, r.abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if r > 1e-10 * g.amax().max(1.0) {
        return Err(Error::UnsolvableDrift {
            direction: worst,
            residual: r,
        });
    }
    Ok(delta.iter().cloned().collect())
}
