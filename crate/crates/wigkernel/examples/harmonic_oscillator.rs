//! Harmonic oscillator: a quarter period is the Fourier transform, and the
//! Strang splitting with a bounded potential converges at second order.

use std::f64::consts::PI;

use wigkernel::metaplectic::phase_fit_residual;
use wigkernel::propagator::{quad_propagate, richardson, Perturbation, PerturbedHamiltonian, QuadraticHamiltonian};
use wigkernel::signal::{coherent_state, Grid};
use wigkernel::transforms::dft;

fn main() -> wigkernel::Result<()> {
    let g = Grid::new(1, 32)?;
    let ho = QuadraticHamiltonian::harmonic_oscillator();
    let u0 = coherent_state(g, 0.5, -0.25);
    let quarter = ho.omega * PI / 2.0;
    let u = quad_propagate(&ho, quarter, &u0)?;
    println!("quarter period vs dft: {:.2e}", phase_fit_residual(&u, &dft(&u0))? / u0.norm());

    let v = (0..g.n).map(|i| 0.5 * (-PI * g.x(i).powi(2)).exp()).collect();
    let h = PerturbedHamiltonian::new(ho, Perturbation::Multiplier(v));
    let rich = richardson(&h, 1.0, 8, 2048, &u0)?;
    println!("errors {:?}", rich.errors);
    println!("ratios {:?}", rich.ratios);
    Ok(())
}
