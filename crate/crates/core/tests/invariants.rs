use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use paraqsim::evolve::{propagate_unitary, EvolutionConfig, Scheme};
use paraqsim::grid::{make_grid, Centering, Grid1D};
use paraqsim::operator::apply_terms;
use paraqsim::relaxation::{build_fokker_planck, build_heat_1d, solve_alpha};
use paraqsim::schrod::{assemble_generators, schrodingerise};
use paraqsim::state::{Axis, HybridState, RegisterLayout};

fn layout(levels: usize, n: usize, n_anc: Option<usize>) -> RegisterLayout {
    RegisterLayout::new(
        levels,
        vec![make_grid(n, -6.0, 6.0).unwrap()],
        n_anc.map(|m| Grid1D::symmetric(m, 8.0, Centering::Cell).unwrap()),
    )
    .unwrap()
}

fn state_from(layout: RegisterLayout, re: &[f64], im: &[f64]) -> HybridState {
    let amps = re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect();
    HybridState::from_amplitudes(layout, amps).unwrap()
}

fn amplitudes(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1.0f64..1.0, len),
        prop::collection::vec(-1.0f64..1.0, len),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dft_is_unitary_and_invertible((re, im) in amplitudes(2 * 16 * 8)) {
        let psi = state_from(layout(2, 16, Some(8)), &re, &im);
        let m = psi.all_momentum();
        prop_assert!((m.norm() - psi.norm()).abs() < 1e-12 * (1.0 + psi.norm()));
        let back = m.all_position();
        prop_assert!(back.distance(&psi).unwrap() < 1e-12 * (1.0 + psi.norm()));
        let one = psi.to_momentum(Axis::Ancilla).unwrap();
        prop_assert!((one.norm() - psi.norm()).abs() < 1e-12 * (1.0 + psi.norm()));
    }

    #[test]
    fn hamiltonian_is_symmetric_in_inner_product(
        (re1, im1) in amplitudes(2 * 16 * 8),
        (re2, im2) in amplitudes(2 * 16 * 8),
        eps in 0.05f64..0.5,
        mu in -1.0f64..1.0,
    ) {
        let sys = build_fokker_planck(&[mu], &[0.7], &[eps]).unwrap();
        let h = schrodingerise(&assemble_generators(&sys).unwrap()).unwrap();
        let a = state_from(layout(2, 16, Some(8)), &re1, &im1);
        let b = state_from(layout(2, 16, Some(8)), &re2, &im2);
        let lhs = a.inner(&apply_terms(&h, &b).unwrap()).unwrap();
        let rhs = apply_terms(&h, &a).unwrap().inner(&b).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn unitary_propagation_is_linear(
        (re1, im1) in amplitudes(2 * 16 * 8),
        (re2, im2) in amplitudes(2 * 16 * 8),
        c in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let h = schrodingerise(&assemble_generators(&build_heat_1d(1.0, 0.3).unwrap()).unwrap()).unwrap();
        let cfg = EvolutionConfig::new(0.01, 0.05, Scheme::Strang).unwrap();
        let a = state_from(layout(2, 16, Some(8)), &re1, &im1);
        let b = state_from(layout(2, 16, Some(8)), &re2, &im2);
        let c = C64::new(c.0, c.1);
        let combined = propagate_unitary(&h, &a.add_scaled(c, &b).unwrap(), &cfg).unwrap();
        let separate = propagate_unitary(&h, &a, &cfg)
            .unwrap()
            .add_scaled(c, &propagate_unitary(&h, &b, &cfg).unwrap())
            .unwrap();
        prop_assert!(combined.distance(&separate).unwrap() < 1e-10 * (1.0 + combined.norm()));
        prop_assert!((combined.norm() - a.add_scaled(c, &b).unwrap().norm()).abs() < 1e-10 * (1.0 + combined.norm()));
    }

    #[test]
    fn solve_alpha_reproduces_diffusion(
        d in 1usize..=4,
        seed in prop::collection::vec(-1.0f64..1.0, 16),
        eps in prop::collection::vec(0.02f64..0.6, 4),
    ) {
        let g = DMatrix::from_fn(d, d, |i, j| seed[i * 4 + j]);
        let dm = g.transpose() * &g;
        let eps = &eps[..d];
        let a = solve_alpha(&dm, eps).unwrap();
        for j in 0..d {
            for k in 0..d {
                let s: f64 = (0..d).map(|i| a[(i, j)] * a[(i, k)] * eps[i] * eps[i] / (eps[j] * eps[k])).sum();
                prop_assert!((s - dm[(j, k)]).abs() < 1e-10);
            }
        }
    }
}
