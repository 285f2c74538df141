//! Wigner kernel of a random operator: intertwining and the exact norm identity.

use wigkernel::battery::{random_gaussian, random_matrix, rng};
use wigkernel::kernel::{intertwining_defect, norm_equivalence_experiment, wigner_kernel, OperatorKernel};
use wigkernel::signal::Grid;

fn main() -> wigkernel::Result<()> {
    let g = Grid::new(1, 16)?;
    let mut r = rng(11);
    let t = OperatorKernel::new(g, random_matrix(16, &mut r))?;
    let k = wigner_kernel(&t)?;
    let (f, u) = (random_gaussian(g, &mut r, 3, 0.8), random_gaussian(g, &mut r, 3, 0.8));

    println!("kernel side {} ({} entries)", k.side(), k.side() * k.side());
    println!("intertwining defect {:.2e}", intertwining_defect(&t, &k, &f, &u)?);
    let rep = norm_equivalence_experiment(&t, 1.0)?;
    println!("||k|| / ||k_T||^2 = {:.12} (v_1: {:.4}, 1 x v_1: {:.4})", rep.ratio_one, rep.ratio_vs, rep.ratio_one_vs);
    Ok(())
}
