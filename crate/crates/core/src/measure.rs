//! Ancilla post-selection and qudit projections.
//!
//! Under `H = A2 (x) eta + A1 (x) 1` with `eta = -i d/dxi`, the ancilla
//! amplitudes obey `d_t v = -A2 d_xi v - i A1 v`. On the half-line `xi < 0`
//! the profile `e^{xi} w(t)` is an exact solution, so that half-line carries
//! the embedded non-unitary state: every accepted slice is parallel to
//! `w(t)` with weight `e^{xi}`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::state::{Axis, Basis, HybridState};

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementOutcome {
    pub state: HybridState,
    pub probability: f64,
    /// Whether `state` was rescaled to unit norm.
    pub renormalized: bool,
    /// Norm of `state` before renormalisation.
    pub scale: f64,
}

fn outcome(state: HybridState, probability: f64) -> MeasurementOutcome {
    let scale = state.norm();
    if scale > 0.0 {
        MeasurementOutcome {
            state: state.scaled(C64::new(1.0 / scale, 0.0)),
            probability,
            renormalized: true,
            scale,
        }
    } else {
        MeasurementOutcome {
            state,
            probability,
            renormalized: false,
            scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostSelection {
    /// Least-squares estimate of `w(t)` on the remaining registers.
    pub outcome: MeasurementOutcome,
    /// Projected state, ancilla kept, not renormalised.
    pub projected: HybridState,
}

/// Normalisation constant `N` of the discrete `N e^{-|xi|}` ancilla.
pub fn xi_normalization(grid: &Grid1D) -> f64 {
    let s: f64 = grid.points().iter().map(|x| (-2.0 * x.abs()).exp()).sum();
    1.0 / (grid.spacing() * s).sqrt()
}

/// Projects the ancilla onto `xi < 0` with optional weight `g(xi)` and
/// recovers the embedded state from the accepted slices by weighted least
/// squares: `w = sum g^2 e^{xi} v(xi) / (N sum g^2 e^{2 xi})`.
#[doc(alias = "postselect_eta_positive")]
pub fn postselect(psi: &HybridState, weight: Option<&dyn Fn(f64) -> f64>) -> Result<PostSelection> {
    let layout = psi.layout();
    let grid = layout.ancilla_grid().ok_or(Error::NoAncilla)?.clone();
    let total = psi.norm_sqr();
    let psi = psi.all_position();
    let n_anc = grid.n();
    let xs = grid.points();
    let g: Vec<f64> = xs
        .iter()
        .map(|&x| {
            if x < 0.0 {
                weight.map_or(1.0, |f| f(x))
            } else {
                0.0
            }
        })
        .collect();

    let mut projected = psi.clone();
    for (i, a) in projected.amplitudes_mut().iter_mut().enumerate() {
        *a *= g[i % n_anc];
    }
    let kept = projected.norm_sqr();
    if kept == 0.0 || total == 0.0 {
        return Err(Error::EmptyPostselection);
    }

    let norm = xi_normalization(&grid);
    let denom: f64 = xs
        .iter()
        .zip(&g)
        .map(|(x, g)| g * g * (2.0 * x).exp())
        .sum::<f64>()
        * norm;
    let reduced_len = psi.amplitudes().len() / n_anc;
    let mut w = vec![C64::new(0.0, 0.0); reduced_len];
    for (r, out) in w.iter_mut().enumerate() {
        let slice = &projected.amplitudes()[r * n_anc..(r + 1) * n_anc];
        let num: C64 = slice
            .iter()
            .zip(xs.iter().zip(&g))
            .map(|(a, (x, g))| a * (g * x.exp()))
            .sum();
        *out = num / denom;
    }
    let reduced = HybridState::from_amplitudes(layout.with_ancilla(None), w)?;
    Ok(PostSelection {
        outcome: outcome(reduced, kept / total),
        projected,
    })
}

/// Keeps qudit level `level`; the result is a single-level state on the same
/// continuous registers.
pub fn project_qudit(psi: &HybridState, level: usize) -> Result<MeasurementOutcome> {
    let total = psi.norm_sqr();
    let part = psi.level(level)?;
    let p = if total > 0.0 {
        part.norm_sqr() / total
    } else {
        0.0
    };
    Ok(outcome(part, p))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    /// Unit-norm recovered u.
    pub u: HybridState,
    /// Estimate of `u(t)` at the scale of `u(0)`.
    pub u_scaled: HybridState,
    pub total_probability: f64,
    pub postselection_probability: f64,
    pub level_probability: f64,
}

/// Post-selection followed by projection onto level 0.
pub fn recover_u(psi: &HybridState) -> Result<Recovery> {
    recover_u_weighted(psi, None)
}

pub fn recover_u_weighted(
    psi: &HybridState,
    weight: Option<&dyn Fn(f64) -> f64>,
) -> Result<Recovery> {
    let ps = postselect(psi, weight)?;
    let w = &ps.outcome;
    let u = project_qudit(&w.state, 0)?;
    Ok(Recovery {
        u_scaled: u.state.scaled(C64::new(u.scale * w.scale, 0.0)),
        u: u.state,
        total_probability: w.probability * u.probability,
        postselection_probability: w.probability,
        level_probability: u.probability,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceRatio {
    pub xi1: f64,
    pub xi2: f64,
    /// `||v(xi1)|| / ||v(xi2)||`
    pub ratio: f64,
    /// `e^{xi1 - xi2}`
    pub expected: f64,
    /// `1 - |<v1, v2>| / (||v1|| ||v2||)`
    pub parallel_defect: f64,
}

/// Compares two ancilla slices of `psi` at grid indices `i1`, `i2`.
pub fn slice_ratio(psi: &HybridState, i1: usize, i2: usize) -> Result<SliceRatio> {
    let grid = psi.layout().ancilla_grid().ok_or(Error::NoAncilla)?.clone();
    let psi = psi.in_basis(Axis::Ancilla, Basis::Position)?;
    let n = grid.n();
    let slice = |i: usize| -> Vec<C64> {
        psi.amplitudes()
            .iter()
            .skip(i)
            .step_by(n)
            .cloned()
            .collect()
    };
    let (a, b) = (slice(i1), slice(i2));
    let na = a.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    let nb = b.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    let ip: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
    let (xi1, xi2) = (grid.point(i1), grid.point(i2));
    Ok(SliceRatio {
        xi1,
        xi2,
        ratio: na / nb,
        expected: (xi1 - xi2).exp(),
        parallel_defect: 1.0 - ip.norm() / (na * nb),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Centering};
    use crate::schrod::ancilla_xi;
    use crate::state::RegisterLayout;

    fn product_state(n_anc: usize) -> HybridState {
        let layout = RegisterLayout::new(2, vec![make_grid(16, -4.0, 4.0).unwrap()], None).unwrap();
        let w = HybridState::from_fn(layout, |k, x| {
            C64::new((-x[0] * x[0]).exp() * (1.0 + k as f64), 0.0)
        });
        let anc = ancilla_xi(&Grid1D::symmetric(n_anc, 16.0, Centering::Cell).unwrap());
        anc.attach(&w).unwrap()
    }

    #[test]
    fn even_ancilla_gives_half() {
        let psi = product_state(64);
        let ps = postselect(&psi, None).unwrap();
        assert!((ps.outcome.probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn projector_is_idempotent() {
        let psi = product_state(64);
        let first = postselect(&psi, None).unwrap();
        let again = postselect(&first.projected, None).unwrap();
        assert!((again.outcome.probability - 1.0).abs() < 1e-12);
        assert!(again.projected.distance(&first.projected).unwrap() < 1e-14);
    }

    #[test]
    fn product_state_recovers_w() {
        let layout = RegisterLayout::new(2, vec![make_grid(16, -4.0, 4.0).unwrap()], None).unwrap();
        let w = HybridState::from_fn(layout, |k, x| {
            C64::new((-x[0] * x[0]).exp() * (1.0 + k as f64), 0.0)
        });
        let psi = product_state(64);
        let ps = postselect(&psi, None).unwrap();
        let est = ps.outcome.state.scaled(C64::new(ps.outcome.scale, 0.0));
        assert!(est.distance(&w).unwrap() < 1e-12 * w.norm());
    }

    #[test]
    fn qudit_probabilities_sum_to_one() {
        let psi = product_state(16);
        let total: f64 = (0..2)
            .map(|l| project_qudit(&psi, l).unwrap().probability)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(project_qudit(&psi, 2).is_err());
    }

    #[test]
    fn needs_ancilla() {
        let layout = RegisterLayout::new(1, vec![make_grid(8, -4.0, 4.0).unwrap()], None).unwrap();
        let s = HybridState::from_fn(layout, |_, _| C64::new(1.0, 0.0));
        assert!(matches!(postselect(&s, None), Err(Error::NoAncilla)));
    }

    #[test]
    fn zero_state_is_empty() {
        let psi = product_state(16).scaled(C64::new(0.0, 0.0));
        assert!(matches!(
            postselect(&psi, None),
            Err(Error::EmptyPostselection)
        ));
    }
}
