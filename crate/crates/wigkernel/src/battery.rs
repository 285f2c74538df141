//! Seeded test batteries: Hermite functions, random coherent-state
//! superpositions, random matrices and random symplectic generator products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::signal::{coherent_state, hermite, Grid, Signal, C64};
use crate::symplectic::{make_dl, make_j, make_vc, RMat, SymplecticMat};

pub type BatteryRng = ChaCha8Rng;

pub fn rng(seed: u64) -> BatteryRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal(rng: &mut BatteryRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) / 2f64.sqrt()
}

/// `h_0, .., h_kmax`.
pub fn hermite_battery(grid: Grid, kmax: usize) -> Result<Vec<Signal>> {
    (0..=kmax).map(|k| hermite(grid, k)).collect()
}

/// Normalized sum of `terms` coherent states with centers inside
/// `|x|, |xi| <= radius` and random complex weights.
pub fn random_gaussian(grid: Grid, rng: &mut BatteryRng, terms: usize, radius: f64) -> Signal {
    let mut acc = Signal::zeros(grid);
    for _ in 0..terms {
        let x = rng.random_range(-radius..=radius);
        let xi = rng.random_range(-radius..=radius);
        let c = complex_normal(rng);
        acc = acc.add(&coherent_state(grid, x, xi).scaled(c)).expect("same grid");
    }
    acc.normalized()
}

/// Dense complex matrix with i.i.d. standard complex normal entries.
pub fn random_matrix(n: usize, rng: &mut BatteryRng) -> Vec<C64> {
    (0..n * n).map(|_| complex_normal(rng)).collect()
}

pub fn random_symmetric(d: usize, rng: &mut BatteryRng, scale: f64) -> RMat {
    let m = RMat::from_fn(d, d, |_, _| rng.random_range(-scale..=scale));
    (&m + m.transpose()) * 0.5
}

/// Random invertible matrix with singular values in a moderate range.
pub fn random_invertible(d: usize, rng: &mut BatteryRng) -> RMat {
    loop {
        let m = RMat::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.5..=0.5));
        let sv = m.clone().svd(false, false).singular_values;
        if sv.min() > 0.5 && sv.max() < 2.0 {
            return m;
        }
    }
}

/// Product of `count` random generators `V_C`, `D_L`, `J`.
pub fn random_generator_product(d: usize, count: usize, rng: &mut BatteryRng) -> SymplecticMat {
    let mut s = SymplecticMat::identity(d);
    for _ in 0..count {
        let g = match rng.random_range(0..3) {
            0 => make_vc(&random_symmetric(d, rng, 1.0)).expect("symmetric"),
            1 => make_dl(&random_invertible(d, rng)).expect("invertible"),
            _ => make_j(d),
        };
        s = s.mul(&g);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::is_symplectic;

    #[test]
    fn seeded_and_reproducible() {
        let g = Grid::new(1, 64).unwrap();
        let a = random_gaussian(g, &mut rng(7), 3, 0.5);
        let b = random_gaussian(g, &mut rng(7), 3, 0.5);
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        assert!(a.mass_outside_central_half() < 1e-5);
    }

    #[test]
    fn generator_products_are_symplectic() {
        let mut r = rng(1);
        for d in [1, 2] {
            for _ in 0..20 {
                let s = random_generator_product(d, 6, &mut r);
                assert!(is_symplectic(s.matrix(), 1e-10).unwrap());
            }
        }
    }
}
