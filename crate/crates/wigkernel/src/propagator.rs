//! Schrodinger evolution for `H = a(x, D) + sigma(x, D)` with a quadratic
//! symbol `a(x, xi) = xi.B xi/2 + xi.A x - x.C x/2`.
//!
//! The evolution is `u(t) = exp(-i (2 pi / omega) t H) u0`, normalized so that
//! the quadratic part projects onto the classical flow `exp(t S / omega)`
//! under the metaplectic convention of [`crate::metaplectic`]. With the
//! default `omega = 2 pi` the harmonic oscillator reaches the Fourier
//! transform at `t = pi^2`.
//!
//! [`quad_propagate`] applies the metaplectic word of the flow. The
//! split-step solver instead exponentiates the Weyl quantization of `a` on
//! the grid exactly, so its quadratic substeps compose without phase
//! ambiguity and the solver's only error is the splitting itself.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fio::{fio_membership_kernel, kn_op, type1_fio, MembershipOptions, MembershipReport, QuadraticPhase, Symbol, FIO_KERNEL_CAP};
use crate::kernel::{wigner_kernel_capped, CMat, OperatorKernel, WignerKernel};
use crate::metaplectic::{factor_symplectic_stable, phase_fit_residual};
use crate::signal::{hermite, Grid, Signal, C64};
use crate::symplectic::{caustic_window, hamiltonian_flow_with, max_abs, CausticOptions, HamiltonianMat, RMat, SymplecticMat, OMEGA};
use crate::transforms::{dft, idft};

/// `a(x, xi) = xi.B xi/2 + xi.A x - x.C x/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticHamiltonian {
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    /// Flow normalization: `S_t = exp(t S / omega)`.
    pub omega: f64,
}

impl QuadraticHamiltonian {
    pub fn new(a: RMat, b: RMat, c: RMat) -> Result<QuadraticHamiltonian> {
        HamiltonianMat::from_blocks(&a, &b, &c)?;
        let sym = |m: &RMat| (m + m.transpose()) * 0.5;
        Ok(QuadraticHamiltonian { b: sym(&b), c: sym(&c), a, omega: OMEGA })
    }

    pub fn scalar(a: f64, b: f64, c: f64) -> QuadraticHamiltonian {
        let m = |v| RMat::from_element(1, 1, v);
        QuadraticHamiltonian { a: m(a), b: m(b), c: m(c), omega: OMEGA }
    }

    /// `(xi^2 + x^2) / 2`.
    pub fn harmonic_oscillator() -> QuadraticHamiltonian {
        QuadraticHamiltonian::scalar(0.0, 1.0, -1.0)
    }

    /// `xi^2 / 2`.
    pub fn free_particle() -> QuadraticHamiltonian {
        QuadraticHamiltonian::scalar(0.0, 1.0, 0.0)
    }

    pub fn with_omega(self, omega: f64) -> QuadraticHamiltonian {
        QuadraticHamiltonian { omega, ..self }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn hamiltonian(&self) -> HamiltonianMat {
        HamiltonianMat::from_blocks(&self.a, &self.b, &self.c).expect("validated on construction")
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += 0.5 * xi[i] * self.b[(i, j)] * xi[j] + xi[i] * self.a[(i, j)] * x[j] - 0.5 * x[i] * self.c[(i, j)] * x[j];
            }
        }
        acc
    }

    /// Largest `T*` with `det A_t != 0` on `(-T*, T*)`, capped at `t_max`.
    pub fn caustic_window(&self, t_max: f64) -> f64 {
        let opts = CausticOptions { t_max, omega: self.omega, ..CausticOptions::default() };
        caustic_window(&self.hamiltonian(), &opts)
    }
}

/// Bounded perturbation `sigma(x, D)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Perturbation {
    None,
    /// Real potential sampled at the grid points `x_j`.
    Multiplier(Vec<f64>),
    /// Real Fourier multiplier sampled at the dual points `xi_k`.
    FourierMultiplier(Vec<f64>),
    /// General Kohn-Nirenberg symbol.
    KnSymbol(Symbol),
}

impl Perturbation {
    pub fn kind(&self) -> &'static str {
        match self {
            Perturbation::None => "none",
            Perturbation::Multiplier(_) => "multiplier",
            Perturbation::FourierMultiplier(_) => "fourier_multiplier",
            Perturbation::KnSymbol(_) => "kn_symbol",
        }
    }

    pub fn max_abs(&self) -> f64 {
        match self {
            Perturbation::None => 0.0,
            Perturbation::Multiplier(v) | Perturbation::FourierMultiplier(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Perturbation::KnSymbol(s) => s.max_abs(),
        }
    }

    fn check(&self, grid: Grid) -> Result<()> {
        let len = match self {
            Perturbation::None => return Ok(()),
            Perturbation::Multiplier(v) | Perturbation::FourierMultiplier(v) => v.len(),
            Perturbation::KnSymbol(s) => {
                grid.ensure_same(&s.grid())?;
                return Ok(());
            }
        };
        if len != grid.n {
            return Err(Error::DimMismatch(format!("perturbation has {len} samples, grid has n = {}", grid.n)));
        }
        if !self.max_abs().is_finite() {
            return Err(Error::Format("unbounded perturbation".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbedHamiltonian {
    pub quad: QuadraticHamiltonian,
    pub pert: Perturbation,
}

impl PerturbedHamiltonian {
    pub fn new(quad: QuadraticHamiltonian, pert: Perturbation) -> PerturbedHamiltonian {
        PerturbedHamiltonian { quad, pert }
    }

    pub fn unperturbed(quad: QuadraticHamiltonian) -> PerturbedHamiltonian {
        PerturbedHamiltonian { quad, pert: Perturbation::None }
    }

    pub fn omega(&self) -> f64 {
        self.quad.omega
    }
}

/// `S_t = exp(t S / omega)`.
pub fn classical_flow(h: &QuadraticHamiltonian, t: f64) -> SymplecticMat {
    hamiltonian_flow_with(&h.hamiltonian(), t, h.omega)
}

/// Applies the metaplectic word of `classical_flow(h, t)`. Defined up to a
/// unimodular constant, like every metaplectic operator.
pub fn quad_propagate(h: &QuadraticHamiltonian, t: f64, u0: &Signal) -> Result<Signal> {
    let word = factor_symplectic_stable(&classical_flow(h, t))?;
    word.apply(u0)
}

fn require_1d(h: &QuadraticHamiltonian, grid: Grid) -> Result<()> {
    if h.dim() != 1 || grid.d != 1 {
        return Err(Error::DimMismatch("grid propagation is implemented for d = 1".into()));
    }
    Ok(())
}

/// Matrix of a linear map on grid samples.
fn matrix_of(n: usize, map: impl Fn(&mut [C64])) -> CMat {
    let mut m = CMat::zeros(n, n);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        col.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        col[j] = C64::new(1.0, 0.0);
        map(&mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// Fourier multiplier `F^{-1} diag(m(xi)) F` as a matrix.
fn fourier_multiplier(grid: Grid, m: impl Fn(usize) -> C64) -> CMat {
    matrix_of(grid.n, |col| {
        let f = Signal { grid, values: col.to_vec() };
        let mut fh = dft(&f);
        for (k, v) in fh.values.iter_mut().enumerate() {
            *v *= m(k);
        }
        col.copy_from_slice(&idft(&fh).values);
    })
}

/// Weyl quantization of `a` on the grid:
/// `B D^2/2 + A (X D + D X)/2 - C X^2/2` with `D = F^{-1} xi F`.
pub fn grid_hamiltonian(h: &QuadraticHamiltonian, grid: Grid) -> Result<CMat> {
    require_1d(h, grid)?;
    let n = grid.n;
    let (a, b, c) = (h.a[(0, 0)], h.b[(0, 0)], h.c[(0, 0)]);
    let d = fourier_multiplier(grid, |k| C64::new(grid.xi(k), 0.0));
    let x = CMat::from_diagonal(&DVector::from_fn(n, |i, _| C64::new(grid.x(i), 0.0)));
    let mut m = &d * &d * C64::new(0.5 * b, 0.0);
    m += (&x * &d + &d * &x) * C64::new(0.5 * a, 0.0);
    m -= &x * &x * C64::new(0.5 * c, 0.0);
    // exact hermiticity for the eigensolver
    Ok((&m + m.adjoint()) * C64::new(0.5, 0.0))
}

/// `exp(-i theta M)` for Hermitian `M`.
fn hermitian_exp(m: &CMat, theta: f64) -> CMat {
    let eig = m.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DVector::from_iterator(m.nrows(), eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -theta * l)));
    let mut vd = v.clone();
    for (j, p) in phases.iter().enumerate() {
        for i in 0..m.nrows() {
            vd[(i, j)] *= p;
        }
    }
    vd * v.adjoint()
}

fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(X)` by a fourth-order Taylor polynomial on `X / 2^j`, followed by
/// `j` squarings; `j` is the smallest halving count whose truncation bound
/// `||X/2^j||^5 / 120` falls below `tol`.
pub fn taylor4_exp(x: &CMat, tol: f64) -> CMat {
    let n = x.nrows();
    let norm = one_norm(x);
    let mut j = 0;
    while (norm / 2f64.powi(j)).powi(5) / 120.0 > tol && j < 60 {
        j += 1;
    }
    let y = x / C64::new(2f64.powi(j), 0.0);
    let id = CMat::identity(n, n);
    // Horner: I + Y (I + Y/2 (I + Y/3 (I + Y/4)))
    let mut p = &id + &y * C64::new(0.25, 0.0);
    p = &id + &y * &p * C64::new(1.0 / 3.0, 0.0);
    p = &id + &y * &p * C64::new(0.5, 0.0);
    p = &id + &y * &p;
    for _ in 0..j {
        p = &p * &p;
    }
    p
}

/// Tolerance of the Kohn-Nirenberg substep exponential.
pub const KN_STEP_TOL: f64 = 1e-9;
/// Relative norm drift that aborts a propagation.
pub const MAX_NORM_DRIFT: f64 = 1e-3;

/// One Strang step `U_a(dt/2) U_sigma(dt) U_a(dt/2)` as a matrix.
pub fn step_matrix(h: &PerturbedHamiltonian, grid: Grid, dt: f64) -> Result<CMat> {
    h.pert.check(grid)?;
    let scale = 2.0 * std::f64::consts::PI / h.omega();
    let ham = grid_hamiltonian(&h.quad, grid)?;
    let half = hermitian_exp(&ham, scale * dt / 2.0);
    let n = grid.n;
    let pert = match &h.pert {
        Perturbation::None => return Ok(&half * &half),
        Perturbation::Multiplier(v) => CMat::from_diagonal(&DVector::from_fn(n, |i, _| C64::from_polar(1.0, -scale * dt * v[i]))),
        Perturbation::FourierMultiplier(v) => fourier_multiplier(grid, |k| C64::from_polar(1.0, -scale * dt * v[k])),
        Perturbation::KnSymbol(s) => {
            let b = kn_op(s)?.action_matrix();
            taylor4_exp(&(b * C64::new(0.0, -scale * dt)), KN_STEP_TOL)
        }
    };
    Ok(&half * pert * &half)
}

fn propagate_with(step: &CMat, steps: usize, u0: &Signal) -> Result<Signal> {
    let mut u = DVector::from_column_slice(&u0.values);
    let n0 = u.norm();
    for _ in 0..steps {
        u = step * u;
        let drift = (u.norm() - n0).abs() / n0.max(1e-300);
        if !(drift <= MAX_NORM_DRIFT) {
            return Err(Error::UnstableStep(drift));
        }
    }
    Ok(Signal { grid: u0.grid, values: u.iter().copied().collect() })
}

/// Strang split-step solution at time `t` with `steps` equal steps.
pub fn split_step(h: &PerturbedHamiltonian, t: f64, steps: usize, u0: &Signal) -> Result<Signal> {
    if steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let step = step_matrix(h, u0.grid, t / steps as f64)?;
    propagate_with(&step, steps, u0)
}

fn kernel_from_step(grid: Grid, step: &CMat, steps: usize) -> Result<OperatorKernel> {
    OperatorKernel::from_linear_map(grid, |f| propagate_with(step, steps, f))
}

/// Matrix of the split-step propagator, assembled column by column.
pub fn propagator_matrix(h: &PerturbedHamiltonian, grid: Grid, t: f64, steps: usize) -> Result<OperatorKernel> {
    if steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let step = step_matrix(h, grid, t / steps as f64)?;
    kernel_from_step(grid, &step, steps)
}

/// Propagator matrix, its Wigner kernel and the flow `S_t`.
pub fn propagator_kernel(h: &PerturbedHamiltonian, grid: Grid, t: f64, steps: usize) -> Result<(OperatorKernel, WignerKernel, SymplecticMat)> {
    if grid.n > FIO_KERNEL_CAP {
        return Err(Error::KernelTooLarge { n: grid.n, cap: FIO_KERNEL_CAP });
    }
    let u = propagator_matrix(h, grid, t, steps)?;
    let k = wigner_kernel_capped(&u, FIO_KERNEL_CAP)?;
    Ok((u, k, classical_flow(&h.quad, t)))
}

/// Operator distance `min_{|c| = 1} ||U - c V||_F / ||V||_F`.
pub fn phase_fitted_distance(u: &OperatorKernel, v: &OperatorKernel) -> Result<f64> {
    u.grid.ensure_same(&v.grid)?;
    let ip: C64 = v.matrix.iter().zip(&u.matrix).map(|(b, a)| b.conj() * a).sum();
    let c = if ip.norm() > 0.0 { ip / ip.norm() } else { C64::new(1.0, 0.0) };
    let num: f64 = u.matrix.iter().zip(&v.matrix).map(|(a, b)| (a - b * c).norm_sqr()).sum();
    let den: f64 = v.matrix.iter().map(|b| b.norm_sqr()).sum();
    Ok((num / den.max(1e-300)).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupReport {
    pub t: f64,
    pub caustic_window: f64,
    pub t1: f64,
    pub t2: f64,
    /// Number of `t2` tiles.
    pub tiles: usize,
    pub steps: usize,
    /// `||U(t1) U(t2)^tiles - U(t)||_F / ||U(t)||_F`.
    pub matrix_diff: f64,
    /// `max |S_t1 S_t2^tiles - S_t|`.
    pub s_defect: f64,
    pub membership: MembershipReport,
    pub pass: bool,
}

/// Tiles `t = t1 + tiles * t2` with `t2` at most half the caustic window,
/// composes the tile propagators and compares with direct propagation and
/// with the flow. All pieces share the step `t / steps`.
pub fn semigroup_extension_check(h: &PerturbedHamiltonian, grid: Grid, t: f64, steps: usize, opts: &MembershipOptions) -> Result<SemigroupReport> {
    if steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    let window = h.quad.caustic_window(t.abs().max(1.0) * 4.0);
    let dt = t / steps as f64;
    let per_tile = (((window / 2.0) / dt.abs()).floor() as usize).clamp(1, steps);
    let tiles = if t.abs() < window { 0 } else { steps / per_tile };
    let n1 = steps - tiles * per_tile;
    let (t1, t2) = (n1 as f64 * dt, per_tile as f64 * dt);

    let step = step_matrix(h, grid, dt)?;
    let direct = kernel_from_step(grid, &step, steps)?;
    let u2 = kernel_from_step(grid, &step, per_tile)?;
    let mut product = kernel_from_step(grid, &step, n1)?;
    for _ in 0..tiles {
        product = product.compose(&u2)?;
    }
    let matrix_diff = phase_fitted_distance(&product, &direct)?;

    let st = classical_flow(&h.quad, t);
    let mut s_prod = classical_flow(&h.quad, t1);
    let s2 = classical_flow(&h.quad, t2);
    for _ in 0..tiles {
        s_prod = s_prod.mul(&s2);
    }
    let s_defect = max_abs(&(s_prod.matrix() - st.matrix()));
    let k = wigner_kernel_capped(&product, opts.kernel_cap)?;
    let membership = fio_membership_kernel(&k, &st, f64::INFINITY, 0.0, opts)?;
    let pass = matrix_diff <= 1e-5 && s_defect <= 1e-9 && membership.pass;
    Ok(SemigroupReport { t, caustic_window: window, t1, t2, tiles, steps, matrix_diff, s_defect, membership, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseSignReport {
    pub t: f64,
    /// Distance of the `e^{+2 pi i Phi_t}` FIO from the split-step propagator.
    pub plus: f64,
    /// Same for `e^{-2 pi i Phi_t}`.
    pub minus: f64,
    pub adopted: &'static str,
}

/// Compares the type-I FIOs `|det A_t|^{-1/2} e^{+-2 pi i Phi_t}` with the
/// split-step propagator on Hermite functions `k <= 4`, up to one common
/// unimodular constant. Requires `t` inside the caustic window.
pub fn phase_sign_check(h: &QuadraticHamiltonian, grid: Grid, t: f64) -> Result<PhaseSignReport> {
    let st = classical_flow(h, t);
    let phase = QuadraticPhase::from_symplectic(&st)?;
    let amp = st.a()[(0, 0)].abs().powf(-0.5);
    let sigma = Symbol::constant(grid, C64::new(amp, 0.0))?;
    let plus = type1_fio(&sigma, &phase)?;
    let neg = QuadraticPhase { p: -&phase.p, q: -&phase.q, r: -&phase.r, ..phase.clone() };
    let minus = type1_fio(&sigma, &neg)?;
    let u = propagator_matrix(&PerturbedHamiltonian::unperturbed(h.clone()), grid, t, 1)?;
    let probes: Vec<Signal> = (0..=4).map(|k| hermite(grid, k)).collect::<Result<_>>()?;
    let stacked = |op: &OperatorKernel| -> Result<Signal> {
        let mut values = Vec::new();
        for f in &probes {
            values.extend(op.apply(f)?.values);
        }
        Ok(Signal { grid: Grid { n: values.len(), ..grid }, values })
    };
    let reference = stacked(&u)?;
    let scale = reference.norm();
    let dp = phase_fit_residual(&stacked(&plus)?, &reference)? / scale;
    let dm = phase_fit_residual(&stacked(&minus)?, &reference)? / scale;
    Ok(PhaseSignReport { t, plus: dp, minus: dm, adopted: if dp <= dm { "+" } else { "-" } })
}

#[derive(Clone, Debug, Serialize)]
pub struct RichardsonReport {
    pub steps: Vec<usize>,
    /// Error of each run against the reference run.
    pub errors: Vec<f64>,
    /// `errors[i] / errors[i + 1]`.
    pub ratios: Vec<f64>,
    pub reference_steps: usize,
}

/// Convergence study of the splitting: errors at `steps`, `2 steps`, `4 steps`
/// against a run with `reference_steps`.
pub fn richardson(h: &PerturbedHamiltonian, t: f64, steps: usize, reference_steps: usize, u0: &Signal) -> Result<RichardsonReport> {
    let reference = split_step(h, t, reference_steps, u0)?;
    let ns = vec![steps, 2 * steps, 4 * steps];
    let errors: Vec<f64> = ns
        .par_iter()
        .map(|&s| Ok(split_step(h, t, s, u0)?.sub(&reference)?.norm()))
        .collect::<Result<_>>()?;
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(RichardsonReport { steps: ns, errors, ratios, reference_steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{coherent_state, gaussian};
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(1, 32).unwrap()
    }

    #[test]
    fn flows_in_closed_form() {
        assert!(max_abs(&(classical_flow(&QuadraticHamiltonian::scalar(0.0, 0.0, 0.0), 3.0).matrix() - RMat::identity(2, 2))) < 1e-15);
        let t = 1.3;
        let th = t / (2.0 * PI);
        let s = classical_flow(&QuadraticHamiltonian::harmonic_oscillator(), t);
        let rot = RMat::from_row_slice(2, 2, &[th.cos(), th.sin(), -th.sin(), th.cos()]);
        assert!(max_abs(&(s.matrix() - rot)) < 1e-13);
        let s = classical_flow(&QuadraticHamiltonian::free_particle(), t);
        assert!(max_abs(&(s.matrix() - RMat::from_row_slice(2, 2, &[1.0, th, 0.0, 1.0]))) < 1e-14);
        let w = QuadraticHamiltonian::harmonic_oscillator().caustic_window(100.0);
        assert!((w - PI * PI).abs() < 1e-8, "{w}");
    }

    #[test]
    fn quarter_period_is_fourier() {
        let g = grid();
        let u0 = coherent_state(g, 0.4, -0.3);
        let u = quad_propagate(&QuadraticHamiltonian::harmonic_oscillator(), PI * PI, &u0).unwrap();
        assert!(phase_fit_residual(&u, &dft(&u0)).unwrap() < 1e-7);
        assert!((u.norm() - u0.norm()).abs() < 1e-8);
    }

    #[test]
    fn free_gaussian_spreads() {
        let g = Grid::new(1, 64).unwrap();
        let t = 2.0;
        let b = t / (2.0 * PI);
        let u = quad_propagate(&QuadraticHamiltonian::free_particle(), t, &gaussian(g)).unwrap();
        for (i, v) in u.values.iter().enumerate() {
            let x = g.x(i);
            let expect = (1.0 + b * b).powf(-0.25) * (-PI * x * x / (1.0 + b * b)).exp();
            assert!((v.norm() - expect).abs() < 1e-7);
        }
    }

    #[test]
    fn unperturbed_split_step_matches_word() {
        let g = grid();
        let u0 = coherent_state(g, 0.3, 0.5);
        for (h, t) in [
            (QuadraticHamiltonian::harmonic_oscillator(), 2.0),
            (QuadraticHamiltonian::free_particle(), 1.5),
            (QuadraticHamiltonian::scalar(0.3, 0.8, -0.5), 1.0),
        ] {
            let a = split_step(&PerturbedHamiltonian::unperturbed(h.clone()), t, 7, &u0).unwrap();
            let b = quad_propagate(&h, t, &u0).unwrap();
            assert!(phase_fit_residual(&a, &b).unwrap() < 1e-7, "{h:?}");
        }
    }

    #[test]
    fn constant_perturbation_is_a_phase() {
        let g = grid();
        let u0 = hermite(g, 2).unwrap();
        let (c, t) = (0.7, 1.1);
        let quad = QuadraticHamiltonian::harmonic_oscillator();
        let a = split_step(&PerturbedHamiltonian::new(quad.clone(), Perturbation::Multiplier(vec![c; 32])), t, 5, &u0).unwrap();
        let b = split_step(&PerturbedHamiltonian::unperturbed(quad), t, 5, &u0).unwrap();
        let expect = b.scaled(C64::from_polar(1.0, -c * t));
        assert!(a.sub(&expect).unwrap().norm() < 1e-12);
    }

    #[test]
    fn splitting_is_second_order() {
        let g = grid();
        let v: Vec<f64> = (0..32).map(|i| (-PI * g.x(i).powi(2)).exp()).collect();
        let h = PerturbedHamiltonian::new(QuadraticHamiltonian::harmonic_oscillator(), Perturbation::Multiplier(v));
        let r = richardson(&h, 1.0, 8, 2048, &coherent_state(g, 0.5, 0.0)).unwrap();
        for q in &r.ratios {
            assert!((3.6..=4.4).contains(q), "{r:?}");
        }
    }

    #[test]
    fn kn_symbol_perturbation() {
        let g = Grid::new(1, 16).unwrap();
        // sigma(x, eta) = V(x) reduces to a multiplier
        let v: Vec<f64> = (0..16).map(|i| 0.5 * (-PI * g.x(i).powi(2)).exp()).collect();
        let sym = Symbol::from_fn(g, |x, _| C64::new(0.5 * (-PI * x * x).exp(), 0.0)).unwrap();
        let quad = QuadraticHamiltonian::harmonic_oscillator();
        let u0 = coherent_state(g, 0.2, 0.1);
        let a = split_step(&PerturbedHamiltonian::new(quad.clone(), Perturbation::KnSymbol(sym)), 1.0, 10, &u0).unwrap();
        let b = split_step(&PerturbedHamiltonian::new(quad, Perturbation::Multiplier(v)), 1.0, 10, &u0).unwrap();
        assert!(a.sub(&b).unwrap().norm() < 1e-8);
    }

    #[test]
    fn taylor_exp_matches_hermitian_exp() {
        let g = Grid::new(1, 8).unwrap();
        let m = grid_hamiltonian(&QuadraticHamiltonian::harmonic_oscillator(), g).unwrap();
        let a = hermitian_exp(&m, 0.7);
        let b = taylor4_exp(&(&m * C64::new(0.0, -0.7)), 1e-12);
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn unstable_step_detected() {
        let g = Grid::new(1, 16).unwrap();
        let sym = Symbol::constant(g, C64::new(0.0, 1.0)).unwrap();
        let h = PerturbedHamiltonian::new(QuadraticHamiltonian::harmonic_oscillator(), Perturbation::KnSymbol(sym));
        assert!(matches!(split_step(&h, 1.0, 4, &gaussian(g)), Err(Error::UnstableStep(_))));
    }

    #[test]
    fn plus_sign_matches_the_oracle() {
        let r = phase_sign_check(&QuadraticHamiltonian::harmonic_oscillator(), grid(), 2.0).unwrap();
        assert_eq!(r.adopted, "+", "{r:?}");
        assert!(r.plus < 1e-6 && r.minus > 0.5, "{r:?}");
    }
}
