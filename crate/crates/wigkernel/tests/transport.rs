//! W(mu(S) f, mu(S) g)(z) = W(f, g)(S^{-1} z) on the half-step lattice for
//! words whose projections keep the midpoint lattice. The residual is
//! Gaussian-tail aliasing and shrinks with n.

const TOL: f64 = 1e-8;

use wigkernel::metaplectic::{Token, Word};
use wigkernel::signal::{coherent_state, Grid};
use wigkernel::symplectic::RMat;
use wigkernel::transforms::wigner_at;

fn m1(x: f64) -> RMat {
    RMat::from_element(1, 1, x)
}

fn transport_defect(word: &Word) -> f64 {
    let g = Grid::new(1, 128).unwrap();
    let (h, n) = (g.h, g.n as i64);
    let f = coherent_state(g, 0.2, -0.1);
    let u = coherent_state(g, -0.2, 0.3);
    let (wf, wu) = (word.apply(&f).unwrap(), word.apply(&u).unwrap());
    let inv = word.target.inverse();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for a in -6i64..=6 {
        for b in -6i64..=6 {
            // z = (a h, b h): an even midpoint and a dual-lattice frequency
            let z = [a as f64 * h, b as f64 * h];
            let w = inv.apply(&z);
            let s2 = w[0] / (h / 2.0);
            assert!((s2 - s2.round()).abs() < 1e-9, "S^-1 z leaves the midpoint lattice");
            let lhs = wigner_at(&wf, &wu, (2 * a + n) as usize, z[1]).unwrap();
            let rhs = wigner_at(&f, &u, (s2.round() as i64 + n) as usize, w[1]).unwrap();
            worst = worst.max((lhs - rhs).norm());
            scale = scale.max(rhs.norm());
        }
    }
    worst / scale
}

#[test]
fn fourier_transform_rotates() {
    let d = transport_defect(&Word::from_tokens(1, vec![Token::Ft]).unwrap());
    assert!(d < TOL, "{d}");
}

#[test]
fn integer_chirp_multiplication_shears() {
    for c in [1.0, -2.0] {
        let d = transport_defect(&Word::from_tokens(1, vec![Token::ChirpMul(m1(c))]).unwrap());
        assert!(d < TOL, "c = {c}: {d}");
    }
}

#[test]
fn integer_chirp_convolution_shears() {
    for b in [1.0, -1.0] {
        let d = transport_defect(&Word::from_tokens(1, vec![Token::ChirpConv(m1(b))]).unwrap());
        assert!(d < TOL, "b = {b}: {d}");
    }
}

#[test]
fn composite_word_transports() {
    let w = Word::from_tokens(1, vec![Token::ChirpMul(m1(1.0)), Token::Ft, Token::ChirpConv(m1(-1.0))]).unwrap();
    let d = transport_defect(&w);
    assert!(d < TOL, "{d}");
}
