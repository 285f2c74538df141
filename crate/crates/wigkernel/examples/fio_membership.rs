//! Type-I FIO with a quadratic phase: the two-path kernel identity and the
//! membership diagnostic, together with a dense control.

use wigkernel::battery::{random_matrix, rng};
use wigkernel::fio::{fio_membership, two_path_discrepancy, type1_fio, MembershipOptions, QuadraticPhase, Symbol};
use wigkernel::kernel::OperatorKernel;
use wigkernel::signal::Grid;

fn main() -> wigkernel::Result<()> {
    let g = Grid::new(1, 32)?;
    let sigma = Symbol::bump(g, 0.5, 1.5, 1.0)?;
    let phase = QuadraticPhase::scalar(1.0, 1.0, 1.0)?;
    let s = phase.symplectic()?;

    let rep = two_path_discrepancy(&sigma, &phase)?;
    println!("two-path discrepancy {:.2e}", rep.raw);

    let opts = MembershipOptions::default();
    let t = type1_fio(&sigma, &phase)?;
    let m = fio_membership(&t, &s, f64::INFINITY, 0.0, &opts)?;
    println!("FIO vs S: pass {} (tube {} cells, off-tube {:.1e}, exponent {:.2})", m.pass, m.tube_radius, m.tube_mass, m.exponent);

    let dense = OperatorKernel::new(g, random_matrix(32, &mut rng(1)))?;
    let c = fio_membership(&dense, &s, f64::INFINITY, 0.0, &opts)?;
    println!("dense vs S: pass {} (off-tube {:.1e})", c.pass, c.tube_mass);
    Ok(())
}
