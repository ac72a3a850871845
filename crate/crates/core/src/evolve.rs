//! Time propagation: split-step unitary evolution under H, the exact
//! non-unitary reference under A, and the exact spectral parabolic solver.
//!
//! Every operator here is momentum-diagonal, so after transforming all
//! continuous axes the dynamics decouple into independent K x K blocks, one
//! per momentum multi-index (and per eta value for H).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fit::linear_fit;
use crate::operator::{AncillaFactor, MomentumSymbol, OperatorTermList};
use crate::relaxation::{Flavor, ParabolicPDE, RelaxationSystem};
use crate::schrod::GeneratorSplit;
use crate::state::{Axis, HybridState, RegisterLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Strang,
    Lie,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_final: f64, scheme: Scheme) -> Result<Self> {
        let cfg = Self {
            dt,
            t_final,
            scheme,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `dt = min(0.1 eps^2, 1e-3)` for the smallest eps.
    pub fn default_dt(eps: f64) -> f64 {
        (0.1 * eps * eps).min(1e-3)
    }

    pub fn for_system(sys: &RelaxationSystem, t_final: f64) -> Result<Self> {
        let eps = sys.epsilons().iter().cloned().fold(f64::INFINITY, f64::min);
        Self::new(Self::default_dt(eps), t_final, Scheme::Strang)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(invalid(
                "t_final",
                format!("must be non-negative, got {}", self.t_final),
            ));
        }
        Ok(())
    }

    /// Step count landing exactly on `t_final`.
    pub fn steps(&self) -> usize {
        if self.t_final == 0.0 {
            0
        } else {
            ((self.t_final / self.dt - 1e-12).ceil() as usize).max(1)
        }
    }

    /// Step actually taken, never larger than `dt`.
    pub fn effective_dt(&self) -> f64 {
        match self.steps() {
            0 => 0.0,
            n => self.t_final / n as f64,
        }
    }
}

/// Hermitian block with cached eigendecomposition.
struct EigenBlock {
    vectors: DMatrix<C64>,
    values: Vec<f64>,
}

impl EigenBlock {
    fn new(h: DMatrix<C64>) -> Self {
        let e = SymmetricEigen::new(h);
        Self {
            vectors: e.eigenvectors,
            values: e.eigenvalues.iter().cloned().collect(),
        }
    }

    /// `exp(-i tau H)`.
    fn exp(&self, tau: f64) -> DMatrix<C64> {
        let phases = DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|l| C64::from_polar(1.0, -l * tau)),
        );
        &self.vectors * DMatrix::from_diagonal(&phases) * self.vectors.adjoint()
    }
}

fn mat_pow(m: &DMatrix<C64>, mut n: usize) -> DMatrix<C64> {
    let k = m.nrows();
    let mut result = DMatrix::<C64>::identity(k, k);
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Momenta of every spatial multi-index, in tensor order.
fn spatial_momenta(layout: &RegisterLayout) -> Vec<Vec<f64>> {
    let grids = layout.spatial_grids();
    let total: usize = grids.iter().map(|g| g.n()).product();
    let tables: Vec<Vec<f64>> = grids.iter().map(|g| g.momentum_values()).collect();
    (0..total)
        .map(|mut s| {
            let mut p = vec![0.0; grids.len()];
            for j in (0..grids.len()).rev() {
                let n = grids[j].n();
                p[j] = tables[j][s % n];
                s /= n;
            }
            p
        })
        .collect()
}

fn check_register(ops_levels: usize, ops_modes: usize, layout: &RegisterLayout) -> Result<()> {
    if layout.qudit_levels() != ops_levels || layout.dimension() != ops_modes {
        return Err(Error::LayoutMismatch(format!(
            "operator acts on {ops_levels} levels x {ops_modes} modes, state has {} x {}",
            layout.qudit_levels(),
            layout.dimension()
        )));
    }
    Ok(())
}

fn split_by_ancilla(h: &OperatorTermList) -> Result<(OperatorTermList, OperatorTermList)> {
    let mut a = OperatorTermList::new(h.levels(), h.modes());
    let mut b = OperatorTermList::new(h.levels(), h.modes());
    for t in h.terms() {
        match t.ancilla() {
            AncillaFactor::Identity => a.push(t.clone())?,
            AncillaFactor::Eta => b.push(t.clone())?,
        }
    }
    Ok((a, b))
}

/// Per-spatial-point eigendata of `H_A` and of the eta coefficient of `H_B`.
struct UnitaryPlan {
    scheme: Scheme,
    dt: f64,
    a_blocks: Vec<EigenBlock>,
    b_blocks: Vec<EigenBlock>,
    b_shared: bool,
    etas: Vec<f64>,
    levels: usize,
}

impl UnitaryPlan {
    fn new(h: &OperatorTermList, layout: &RegisterLayout, cfg: &EvolutionConfig) -> Result<Self> {
        let (ha, hb) = split_by_ancilla(h)?;
        let sym_a: MomentumSymbol = ha.momentum_symbol()?;
        let sym_b: MomentumSymbol = hb.momentum_symbol()?;
        let momenta = spatial_momenta(layout);
        let a_blocks = momenta
            .iter()
            .map(|p| EigenBlock::new(sym_a.block(p, 0.0)))
            .collect();
        let b_shared = !sym_b.eta_depends_on_momentum();
        let b_blocks = if b_shared {
            vec![EigenBlock::new(sym_b.block(&momenta[0], 1.0))]
        } else {
            momenta
                .iter()
                .map(|p| EigenBlock::new(sym_b.block(p, 1.0)))
                .collect()
        };
        let etas = layout
            .ancilla_grid()
            .map(|g| g.momentum_values())
            .unwrap_or_else(|| vec![0.0]);
        Ok(Self {
            scheme: cfg.scheme,
            dt: cfg.effective_dt(),
            a_blocks,
            b_blocks,
            b_shared,
            etas,
            levels: layout.qudit_levels(),
        })
    }

    fn step_matrix(&self, s: usize, ua: &DMatrix<C64>, eta: f64) -> DMatrix<C64> {
        let b = &self.b_blocks[if self.b_shared { 0 } else { s }];
        match self.scheme {
            Scheme::Strang => {
                let half = b.exp(0.5 * self.dt * eta);
                &half * ua * &half
            }
            Scheme::Lie => ua * b.exp(self.dt * eta),
        }
    }

    /// Advances momentum-basis amplitudes by `steps` steps.
    fn advance(&self, data: &mut [C64], steps: usize) {
        if steps == 0 {
            return;
        }
        let k = self.levels;
        let n_eta = self.etas.len();
        let per = data.len() / k;
        let mut v = DVector::<C64>::zeros(k);
        for (s, a) in self.a_blocks.iter().enumerate() {
            let ua = a.exp(self.dt);
            for (e, &eta) in self.etas.iter().enumerate() {
                let u = mat_pow(&self.step_matrix(s, &ua, eta), steps);
                let idx = s * n_eta + e;
                for l in 0..k {
                    v[l] = data[l * per + idx];
                }
                let out = &u * &v;
                for l in 0..k {
                    data[l * per + idx] = out[l];
                }
            }
        }
    }
}

fn check_unitary_inputs(h: &OperatorTermList, psi0: &HybridState) -> Result<()> {
    if !h.is_tagged_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_deviation()));
    }
    check_register(h.levels(), h.modes(), psi0.layout())?;
    if h.uses_ancilla() && !psi0.layout().has_ancilla() {
        return Err(Error::NoAncilla);
    }
    Ok(())
}

/// `exp(-i H t) psi0` by Strang (or Lie) splitting between the `1_eta` and
/// `eta` parts of `H`, each sub-step exact in the joint momentum basis.
pub fn propagate_unitary(
    h: &OperatorTermList,
    psi0: &HybridState,
    cfg: &EvolutionConfig,
) -> Result<HybridState> {
    cfg.validate()?;
    check_unitary_inputs(h, psi0)?;
    if cfg.steps() == 0 {
        return Ok(psi0.clone());
    }
    let plan = UnitaryPlan::new(h, psi0.layout(), cfg)?;
    let mut m = psi0.all_momentum();
    plan.advance(m.amplitudes_mut(), cfg.steps());
    m.in_bases(psi0.bases())
}

/// As [`propagate_unitary`], calling `observe(t, state)` at `t = 0` and after
/// every `stride` steps (and at the final time).
pub fn propagate_unitary_observed(
    h: &OperatorTermList,
    psi0: &HybridState,
    cfg: &EvolutionConfig,
    stride: usize,
    mut observe: impl FnMut(f64, &HybridState),
) -> Result<HybridState> {
    cfg.validate()?;
    check_unitary_inputs(h, psi0)?;
    observe(0.0, psi0);
    let total = cfg.steps();
    if total == 0 {
        return Ok(psi0.clone());
    }
    let stride = stride.max(1);
    let plan = UnitaryPlan::new(h, psi0.layout(), cfg)?;
    let mut m = psi0.all_momentum();
    let mut done = 0;
    while done < total {
        let chunk = stride.min(total - done);
        plan.advance(m.amplitudes_mut(), chunk);
        done += chunk;
        observe(done as f64 * plan.dt, &m.in_bases(psi0.bases())?);
    }
    m.in_bases(psi0.bases())
}

/// `exp(-i (A1 - i A2) t) w0` by one dense exponential per momentum point.
pub fn propagate_nonunitary(
    gs: &GeneratorSplit,
    w0: &HybridState,
    cfg: &EvolutionConfig,
) -> Result<HybridState> {
    cfg.validate()?;
    evolve_generator(gs, w0, cfg.t_final)
}

/// [`propagate_nonunitary`] for a bare final time.
pub fn evolve_generator(gs: &GeneratorSplit, w0: &HybridState, t: f64) -> Result<HybridState> {
    let layout = w0.layout();
    if layout.has_ancilla() {
        return Err(Error::AncillaPresent);
    }
    check_register(gs.a1.levels(), gs.a1.modes(), layout)?;
    if t == 0.0 {
        return Ok(w0.clone());
    }
    let s1 = gs.a1.momentum_symbol()?;
    let s2 = gs.a2.momentum_symbol()?;
    let k = layout.qudit_levels();
    let mut m = w0.all_momentum();
    let per = layout.mode_points();
    let data = m.amplitudes_mut();
    let mut v = DVector::<C64>::zeros(k);
    let minus_it = C64::new(0.0, -t);
    for (s, p) in spatial_momenta(layout).iter().enumerate() {
        let a = s1.block(p, 0.0) - s2.block(p, 0.0) * C64::new(0.0, 1.0);
        let u = (a * minus_it).exp();
        for l in 0..k {
            v[l] = data[l * per + s];
        }
        let out = &u * &v;
        for l in 0..k {
            data[l * per + s] = out[l];
        }
    }
    m.in_bases(w0.bases())
}

/// Exact semi-discrete solution `u^(t, p) = exp(t sigma(p)) u^(0, p)`.
pub fn solve_parabolic_spectral(
    pde: &ParabolicPDE,
    u0: &HybridState,
    t: f64,
) -> Result<HybridState> {
    let layout = u0.layout();
    if layout.qudit_levels() != 1 {
        return Err(Error::LayoutMismatch(
            "spectral solver needs a single-level state".into(),
        ));
    }
    if layout.has_ancilla() {
        return Err(Error::AncillaPresent);
    }
    if layout.dimension() != pde.dimension() {
        return Err(Error::DimensionMismatch {
            what: "PDE dimension",
            expected: pde.dimension(),
            found: layout.dimension(),
        });
    }
    let mut m = u0.all_momentum();
    for (a, p) in m.amplitudes_mut().iter_mut().zip(spatial_momenta(layout)) {
        *a *= (pde.symbol(&p) * t).exp();
    }
    m.in_bases(u0.bases())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxInit {
    /// `v(0) = 0`
    #[default]
    Zero,
    /// `v(0) = -k eps d_x u(0)`
    Equilibrium,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSample {
    pub t: f64,
    /// `||v(t) + k eps d_x u(t)||`
    pub residual: f64,
    pub u_norm: f64,
}

/// Flux-closure residual of a 1D heat relaxation run at each requested time.
pub fn initial_layer_profile(
    sys: &RelaxationSystem,
    u0: &HybridState,
    times: &[f64],
    init: FluxInit,
) -> Result<Vec<LayerSample>> {
    let heat = matches!(sys.flavor(), Flavor::Heat1D)
        || (sys.flavor() == Flavor::HeatDD && sys.dimension() == 1);
    if !heat {
        return Err(Error::WrongFlavor {
            expected: "heat1d",
            found: sys.flavor().to_string(),
        });
    }
    if u0.layout().qudit_levels() != 1 || u0.layout().dimension() != 1 {
        return Err(Error::LayoutMismatch(
            "initial layer needs a 1D single-level datum".into(),
        ));
    }
    let k = sys.flux_scale()[0];
    let eps = sys.epsilons()[0];
    let u0 = u0.all_position();
    let closure = |u: &HybridState| -> Result<HybridState> {
        Ok(u.derivative(Axis::Spatial(0))?
            .scaled(C64::new(-k * eps, 0.0)))
    };
    let mut w0 = u0.embed_level(2, 0)?;
    if init == FluxInit::Equilibrium {
        w0 = w0.add_scaled(C64::new(1.0, 0.0), &closure(&u0)?.embed_level(2, 1)?)?;
    }
    let gs = crate::schrod::assemble_generators(sys)?;
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("times", format!("must be non-negative, got {t}")));
            }
            let w = evolve_generator(&gs, &w0, t)?;
            let u = w.level(0)?;
            let v = w.level(1)?;
            let r = v.add_scaled(C64::new(-1.0, 0.0), &closure(&u)?)?;
            Ok(LayerSample {
                t,
                residual: r.norm(),
                u_norm: u.norm(),
            })
        })
        .collect()
}

/// Slope of `ln residual` against `t`.
pub fn fitted_decay_rate(samples: &[LayerSample]) -> Option<f64> {
    let (t, y): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.residual > 0.0)
        .map(|s| (s.t, s.residual.ln()))
        .unzip();
    linear_fit(&t, &y).map(|(s, _)| s)
}
