//! Factor a symplectic matrix into a word, apply it, and check covariance.

use wigkernel::battery::{random_generator_product, rng};
use wigkernel::metaplectic::{covariance_defect, factor_symplectic_stable};
use wigkernel::signal::{hermite, Grid};
use wigkernel::symplectic::is_symplectic;

fn main() -> wigkernel::Result<()> {
    let s = random_generator_product(1, 4, &mut rng(3));
    println!("S = {:?}, symplectic: {}", s.matrix().as_slice(), is_symplectic(s.matrix(), 1e-12)?);

    let word = factor_symplectic_stable(&s)?;
    print!("{word}");

    let g = Grid::new(1, 64)?;
    let f = hermite(g, 2)?;
    let u = word.apply(&f)?;
    println!("norm before {:.12}, after {:.12}", f.norm(), u.norm());
    println!("covariance defect at z = 0: {:.2e}", covariance_defect(&word, g, &[0.0], &[0.0])?);
    Ok(())
}
