use proptest::prelude::*;

use wigkernel::battery::{random_generator_product, random_matrix, rng};
use wigkernel::io::{read_wkt, write_wkt, Tensor};
use wigkernel::kernel::{intertwining_defect, wigner_kernel, OperatorKernel};
use wigkernel::metaplectic::{Token, Word};
use wigkernel::modnorm::concentration_profile;
use wigkernel::propagator::{split_step, Perturbation, PerturbedHamiltonian, QuadraticHamiltonian};
use wigkernel::signal::{inner, Grid, Signal, C64};
use wigkernel::symplectic::{is_symplectic, RMat};
use wigkernel::transforms::{moyal_pairing, wigner};

fn signal(n: usize, parts: &[(f64, f64)]) -> Signal {
    let g = Grid::new(1, n).unwrap();
    Signal::new(g, parts.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn token() -> impl Strategy<Value = Token> {
    let m = |x: i32| RMat::from_element(1, 1, x as f64);
    prop_oneof![
        Just(Token::Ft),
        Just(Token::FtInv),
        (-2i32..=2).prop_map(move |c| Token::ChirpMul(m(c))),
        (-2i32..=2).prop_map(move |b| Token::ChirpConv(m(b))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wkt_round_trip_is_bit_exact(v in complex_vec(16)) {
        let f = signal(16, &v);
        let mut buf = Vec::new();
        write_wkt(&mut buf, &Tensor::from_signal(&f)).unwrap();
        let back = read_wkt(&mut buf.as_slice()).unwrap().to_signal().unwrap();
        prop_assert_eq!(back.grid, f.grid);
        for (a, b) in back.values.iter().zip(&f.values) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn generator_products_are_symplectic(seed in any::<u64>(), d in 1usize..=3, count in 1usize..8) {
        let s = random_generator_product(d, count, &mut rng(seed));
        prop_assert!(is_symplectic(s.matrix(), 1e-9).unwrap());
    }

    #[test]
    fn words_are_unitary(tokens in prop::collection::vec(token(), 1..6), v in complex_vec(32)) {
        let f = signal(32, &v);
        let w = Word::from_tokens(1, tokens).unwrap();
        let u = w.apply(&f).unwrap();
        prop_assert!((u.norm() - f.norm()).abs() <= 1e-10 * f.norm());
        let back = w.inverse().apply(&u).unwrap();
        prop_assert!(back.sub(&f).unwrap().norm() <= 1e-10 * f.norm());
    }

    #[test]
    fn moyal_holds_for_random_signals(a in complex_vec(16), b in complex_vec(16), c in complex_vec(16), d in complex_vec(16)) {
        let (f, g, u, v) = (signal(16, &a), signal(16, &b), signal(16, &c), signal(16, &d));
        let lhs = moyal_pairing(&wigner(&f, &g).unwrap(), &wigner(&u, &v).unwrap()).unwrap();
        let rhs = inner(&f, &u).unwrap() * inner(&g, &v).unwrap().conj();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * f.norm() * g.norm() * u.norm() * v.norm());
    }

    #[test]
    fn kernels_intertwine_and_respect_adjoints(seed in any::<u64>(), a in complex_vec(8), b in complex_vec(8)) {
        let g = Grid::new(1, 8).unwrap();
        let mut r = rng(seed);
        let t = OperatorKernel::new(g, random_matrix(8, &mut r)).unwrap();
        let u = OperatorKernel::new(g, random_matrix(8, &mut r)).unwrap();
        let (kt, ku) = (wigner_kernel(&t).unwrap(), wigner_kernel(&u).unwrap());
        let (f, h) = (signal(8, &a), signal(8, &b));
        prop_assert!(intertwining_defect(&t, &kt, &f, &h).unwrap() <= 1e-10);
        prop_assert!(kt.compose(&ku).unwrap().rel_diff(&wigner_kernel(&t.compose(&u).unwrap()).unwrap()).unwrap() <= 1e-10);
        prop_assert!(kt.adjoint().rel_diff(&wigner_kernel(&t.adjoint()).unwrap()).unwrap() <= 1e-10);
        prop_assert!((kt.adjoint().l2_norm() - kt.l2_norm()).abs() <= 1e-12 * kt.l2_norm());
        prop_assert!((kt.l2_norm() / t.l2_norm().powi(2) - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn concentration_profiles_decrease(seed in any::<u64>(), count in 0usize..4) {
        let g = Grid::new(1, 8).unwrap();
        let t = OperatorKernel::new(g, random_matrix(8, &mut rng(seed))).unwrap();
        let s = random_generator_product(1, count, &mut rng(seed ^ 1));
        let radii: Vec<f64> = (0..12).map(|r| r as f64).collect();
        let prof = concentration_profile(&wigner_kernel(&t).unwrap(), &s, &radii);
        for w in prof.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-15);
        }
    }

    #[test]
    fn split_step_preserves_norm(v in prop::collection::vec(-1.0..1.0f64, 32), a in complex_vec(32), t in 0.1..3.0f64) {
        let h = PerturbedHamiltonian::new(QuadraticHamiltonian::harmonic_oscillator(), Perturbation::Multiplier(v));
        let f = signal(32, &a);
        let u = split_step(&h, t, 16, &f).unwrap();
        prop_assert!((u.norm() - f.norm()).abs() <= 1e-10 * f.norm());
    }
}
