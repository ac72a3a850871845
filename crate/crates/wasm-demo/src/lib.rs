//! Browser bindings: three small interactive computations.

use paraqsim::evolve::{evolve_generator, solve_parabolic_spectral};
use paraqsim::experiments::{gaussian_datum, run_initial_layer, GridConfig, InitialLayerConfig};
use paraqsim::relaxation::{build_heat_1d, ParabolicPDE};
use paraqsim::schrod::{assemble_generators, gaussian_fidelity};
use wasm_bindgen::prelude::*;

/// Sampled curves sharing one abscissa, plus a headline number.
#[wasm_bindgen]
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    x: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    value: f64,
}

#[wasm_bindgen]
impl Series {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn a(&self) -> Vec<f64> {
        self.a.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn b(&self) -> Vec<f64> {
        self.b.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn value(&self) -> f64 {
        self.value
    }
}

fn js(e: paraqsim::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// `a`: Gaussian-ancilla fidelity over `s`; `value`: the maximising `s`.
pub fn fidelity_series(s_min: f64, s_max: f64, points: usize) -> paraqsim::Result<Series> {
    let points = points.max(2);
    let x: Vec<f64> = (0..points)
        .map(|i| s_min + (s_max - s_min) * i as f64 / (points - 1) as f64)
        .collect();
    let a = x
        .iter()
        .map(|&s| gaussian_fidelity(s))
        .collect::<paraqsim::Result<Vec<_>>>()?;
    let best = a
        .iter()
        .enumerate()
        .max_by(|p, q| p.1.total_cmp(q.1))
        .map_or(f64::NAN, |(i, _)| x[i]);
    Ok(Series {
        b: Vec::new(),
        value: best,
        x,
        a,
    })
}

/// `a`: relaxed u at time `t`; `b`: exact heat solution; `value`: normalised L2 gap.
pub fn relaxation_series(eps: f64, k: f64, t: f64, n: usize) -> paraqsim::Result<Series> {
    let grid = GridConfig::with_n(n).build()?;
    let x = grid.points();
    let u0 = gaussian_datum(vec![grid], 0.5)?;
    let gs = assemble_generators(&build_heat_1d(k, eps)?)?;
    let relaxed = evolve_generator(&gs, &u0.embed_level(2, 0)?, t)?.level(0)?;
    let heat = solve_parabolic_spectral(&ParabolicPDE::heat(&[k])?, &u0, t)?;
    let gap = relaxed.normalized().distance(&heat.normalized())?;
    Ok(Series {
        x,
        a: relaxed.amplitudes().iter().map(|z| z.re).collect(),
        b: heat.amplitudes().iter().map(|z| z.re).collect(),
        value: gap,
    })
}

/// `a`, `b`: constraint residual for zero and equilibrium initial flux;
/// `value`: fitted decay rate of the zero-flux residual.
pub fn layer_series(eps: f64, k: f64, samples: usize) -> paraqsim::Result<Series> {
    let cfg = InitialLayerConfig {
        epsilon: eps,
        k,
        samples,
        grid: GridConfig::with_n(128),
        ..Default::default()
    };
    let r = run_initial_layer(&cfg)?;
    Ok(Series {
        x: r.rows.iter().map(|row| row.t).collect(),
        a: r.rows.iter().map(|row| row.residual_zero_flux).collect(),
        b: r.rows.iter().map(|row| row.residual_equilibrium).collect(),
        value: r.summary.fitted_rate.unwrap_or(f64::NAN),
    })
}

#[wasm_bindgen]
pub fn fidelity_curve(s_min: f64, s_max: f64, points: usize) -> Result<Series, JsValue> {
    fidelity_series(s_min, s_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn relaxation_profile(eps: f64, k: f64, t: f64, n: usize) -> Result<Series, JsValue> {
    relaxation_series(eps, k, t, n).map_err(js)
}

#[wasm_bindgen]
pub fn initial_layer_curve(eps: f64, k: f64, samples: usize) -> Result<Series, JsValue> {
    layer_series(eps, k, samples).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_peak() {
        let s = fidelity_series(0.5, 1.5, 201).unwrap();
        assert!((s.value - 0.925).abs() < 0.01);
        assert_eq!(s.a.len(), 201);
    }

    #[test]
    fn relaxation_close_to_heat() {
        let s = relaxation_series(0.05, 1.0, 0.5, 64).unwrap();
        assert_eq!(s.x.len(), 64);
        assert!(s.value < 5e-3);
    }

    #[test]
    fn layer_rate() {
        let s = layer_series(0.05, 1.0, 21).unwrap();
        assert!((s.value / -400.0 - 1.0).abs() < 0.15);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(relaxation_series(1.5, 1.0, 0.5, 64).is_err());
    }
}
