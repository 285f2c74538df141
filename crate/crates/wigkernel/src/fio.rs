//! Kohn-Nirenberg operators, type-I Fourier integral operators with
//! quadratic phase, their closed-form Wigner kernels, and the
//! membership diagnostic for the class `FIO(S, M^{inf,q}_{1 (x) v_s})`.
//!
//! A type-I FIO is `T f(x) = int e^{2 pi i Phi(x, eta)} sigma(x, eta) f^(eta) d eta`
//! with `Phi(x, eta) = x.Px/2 + eta.Qx - eta.R eta/2`. For a free symplectic
//! `S` (det `A != 0`) the phase is `P = C A^{-1}`, `Q = A^{-1}`, `R = A^{-1} B`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::centered_raw;
use crate::kernel::{gemm, wigner_kernel_capped, CMat, OperatorKernel, WignerKernel};
use crate::metaplectic::factor_symplectic_stable;
use crate::modnorm::v_s;
use crate::signal::{coherent_state, hermite, time_freq_shift, Axis, Grid, PhaseField, Signal, C64};
use crate::symplectic::{max_abs, RMat, SymplecticMat};
use crate::transforms::{moyal_pairing, wigner, HalfLattice};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Largest `n` accepted by the `O(n^4)`..`O(n^5)` routines of this module.
pub const FIO_KERNEL_CAP: usize = 48;

/// `Phi(x, eta) = x.Px/2 + eta.Qx - eta.R eta/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticPhase {
    pub d: usize,
    pub p: RMat,
    pub q: RMat,
    pub r: RMat,
}

impl QuadraticPhase {
    pub fn new(p: RMat, q: RMat, r: RMat) -> Result<QuadraticPhase> {
        let d = q.nrows();
        for m in [&p, &q, &r] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimMismatch("phase blocks must be d x d".into()));
            }
        }
        for m in [&p, &r] {
            let asym = max_abs(&(m - m.transpose()));
            if asym > 1e-12 * max_abs(m).max(1.0) {
                return Err(Error::NonSymmetric(asym));
            }
        }
        if q.determinant().abs() < 1e-12 {
            return Err(Error::IllConditionedS("Q is singular".into()));
        }
        let phase = QuadraticPhase { d, p, q, r };
        phase.symplectic()?;
        Ok(phase)
    }

    /// `Phi = x eta`: the Kohn-Nirenberg phase.
    pub fn standard(d: usize) -> QuadraticPhase {
        let i = RMat::identity(d, d);
        QuadraticPhase { d, p: RMat::zeros(d, d), q: i, r: RMat::zeros(d, d) }
    }

    /// d = 1 shorthand.
    pub fn scalar(p: f64, q: f64, r: f64) -> Result<QuadraticPhase> {
        let m = |v| RMat::from_element(1, 1, v);
        QuadraticPhase::new(m(p), m(q), m(r))
    }

    /// Phase of a free symplectic matrix.
    pub fn from_symplectic(s: &SymplecticMat) -> Result<QuadraticPhase> {
        let a = s.a();
        let ai = a
            .clone()
            .try_inverse()
            .filter(|_| a.determinant().abs() > 1e-12)
            .ok_or_else(|| Error::IllConditionedS("upper-left block is singular".into()))?;
        let p = s.c() * &ai;
        let r = &ai * s.b();
        let sym = |m: RMat| (&m + m.transpose()) * 0.5;
        Ok(QuadraticPhase { d: s.dim(), p: sym(p), q: ai, r: sym(r) })
    }

    /// The canonical transformation generated by the phase:
    /// `A = Q^{-1}`, `B = Q^{-1} R`, `C = P Q^{-1}`, `D = A^{-T} + C A^{-1} B`.
    pub fn symplectic(&self) -> Result<SymplecticMat> {
        let a = self.q.clone().try_inverse().ok_or_else(|| Error::IllConditionedS("Q is singular".into()))?;
        let b = &a * &self.r;
        let c = &self.p * &a;
        let dd = self.q.transpose() + &c * &self.q * &b;
        SymplecticMat::from_blocks(&a, &b, &c, &dd)
    }

    pub fn eval(&self, x: &[f64], eta: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += 0.5 * x[i] * self.p[(i, j)] * x[j] + eta[i] * self.q[(i, j)] * x[j]
                    - 0.5 * eta[i] * self.r[(i, j)] * eta[j];
            }
        }
        acc
    }

    /// Lattice-compatible phases (d = 1): integer `P`, `Q`, `R`. Their chirps
    /// are periodic on the grid, so no interpolation is ever needed.
    pub fn lattice_compatible(&self) -> bool {
        let int = |v: f64| (v - v.round()).abs() < 1e-12;
        self.d == 1 && int(self.p[(0, 0)]) && int(self.q[(0, 0)]) && int(self.r[(0, 0)])
    }
}

/// A symbol `sigma(x, eta)` on the `(x, dual eta)` lattice of a d = 1 grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    pub field: PhaseField,
}

impl Symbol {
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> C64) -> Result<Symbol> {
        if grid.d != 1 {
            return Err(Error::DimMismatch("symbols are built for d = 1".into()));
        }
        let mut field = PhaseField::stft_lattice(grid);
        for (i, v) in field.values.iter_mut().enumerate() {
            let (x, eta) = (grid.x(i / grid.n), grid.xi(i % grid.n));
            *v = f(x, eta);
        }
        if field.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Format("non-finite symbol value".into()));
        }
        Ok(Symbol { field })
    }

    pub fn constant(grid: Grid, c: C64) -> Result<Symbol> {
        Symbol::from_fn(grid, |_, _| c)
    }

    /// Gaussian bump `amp * exp(-pi ((x - x0)^2 + (eta - e0)^2) / width^2)` plus `floor`.
    pub fn bump(grid: Grid, amp: f64, width: f64, floor: f64) -> Result<Symbol> {
        Symbol::from_fn(grid, |x, e| C64::new(floor + amp * (-PI * (x * x + e * e) / (width * width)).exp(), 0.0))
    }

    pub fn from_field(field: PhaseField) -> Result<Symbol> {
        if !field.same_lattice(&PhaseField::stft_lattice(field.grid)) {
            return Err(Error::LatticeMismatch("symbols live on the (x, dual eta) lattice".into()));
        }
        Ok(Symbol { field })
    }

    pub fn grid(&self) -> Grid {
        self.field.grid
    }

    /// `sigma(x_i, eta_k)`.
    pub fn at(&self, i: usize, k: usize) -> C64 {
        self.field.values[i * self.field.grid.n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.field.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Kohn-Nirenberg operator `sigma(x, D)`. The kernel is
/// `k_T(x, y) = rho(x, x - y)` with `rho = F_2^{-1} sigma`, assembled by an
/// inverse transform of each row of the symbol and a shear of the index.
pub fn kn_op(sigma: &Symbol) -> Result<OperatorKernel> {
    let grid = sigma.grid();
    let n = grid.n;
    let de = grid.dual_step();
    let mut matrix = vec![ZERO; n * n];
    matrix.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        // rho[l'] = sum_k sigma(x_i, eta_k) e^{2 pi i eta_k (l' - n/2) h} d eta
        let mut rho: Vec<C64> = (0..n).map(|k| sigma.at(i, k)).collect();
        centered_raw(&mut rho, true);
        for (j, v) in row.iter_mut().enumerate() {
            let lag = (i as i64 - j as i64).rem_euclid(n as i64) as usize;
            *v = rho[(lag + n / 2) % n] * de;
        }
    });
    OperatorKernel::new(grid, matrix)
}

/// Type-I FIO kernel
/// `k_T(x, y) = sum_eta e^{2 pi i Phi(x, eta)} sigma(x, eta) e^{-2 pi i y eta} d eta`.
pub fn type1_fio(sigma: &Symbol, phase: &QuadraticPhase) -> Result<OperatorKernel> {
    let grid = sigma.grid();
    if phase.d != 1 {
        return Err(Error::DimMismatch("type-I FIO kernels are built for d = 1".into()));
    }
    let n = grid.n;
    let de = grid.dual_step();
    let mut matrix = vec![ZERO; n * n];
    matrix.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let x = grid.x(i);
        let amp: Vec<C64> =
            (0..n).map(|k| sigma.at(i, k) * C64::from_polar(de, 2.0 * PI * phase.eval(&[x], &[grid.xi(k)]))).collect();
        for (j, v) in row.iter_mut().enumerate() {
            let y = grid.x(j);
            *v = amp.iter().enumerate().map(|(k, a)| a * C64::from_polar(1.0, -2.0 * PI * y * grid.xi(k))).sum();
        }
    });
    OperatorKernel::new(grid, matrix)
}

/// Type-II FIO as the adjoint of a type-I kernel.
pub fn type2_adjoint(t: &OperatorKernel) -> OperatorKernel {
    t.adjoint()
}

/// `sigma_I(x, eta, t, r) = sigma(x + t/2, eta + r/2) conj(sigma(x - t/2, eta - r/2))`
/// on the half-step lattice of both variables.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaI {
    pub grid: Grid,
    /// Row-major `(s_x, s_eta, m_t, m_r)` with shape `(2n, 2n, n/2, n/2)`.
    /// Midpoint `s` sits at `(s - n) h / 2`; slot `m` at midpoint `s` carries
    /// the lag `(2 (m - n/4) + s mod 2) h`.
    pub values: Vec<C64>,
}

impl SigmaI {
    pub fn shape(&self) -> [usize; 4] {
        let n = self.grid.n;
        [2 * n, 2 * n, n / 2, n / 2]
    }

    pub fn at(&self, sx: usize, se: usize, mt: usize, mr: usize) -> C64 {
        let [_, b, c, d] = self.shape();
        self.values[((sx * b + se) * c + mt) * d + mr]
    }

    /// Axes `(x, eta, t, r)`; the lag axes are shown for even midpoints.
    pub fn axes(&self) -> Vec<Axis> {
        let n = self.grid.n;
        let mid = Axis::centered(2 * n, self.grid.h / 2.0);
        let lag = Axis::centered(n / 2, 2.0 * self.grid.h);
        vec![mid, mid, lag, lag]
    }
}

pub fn sigma_i(sigma: &Symbol) -> Result<SigmaI> {
    sigma_i_capped(sigma, crate::kernel::DEFAULT_KERNEL_CAP)
}

pub fn sigma_i_capped(sigma: &Symbol, cap: usize) -> Result<SigmaI> {
    let grid = sigma.grid();
    let n = grid.n;
    if n > cap {
        return Err(Error::KernelTooLarge { n, cap });
    }
    let hl = HalfLattice::new(n)?;
    let half = n / 2;
    let mut values = vec![ZERO; 4 * n * n * half * half];
    values.par_chunks_mut(2 * n * half * half).enumerate().for_each(|(sx, chunk)| {
        for se in 0..2 * n {
            for mt in 0..half {
                let (a1, b1, _) = hl.at(sx, mt);
                for mr in 0..half {
                    let (a2, b2, _) = hl.at(se, mr);
                    chunk[(se * half + mt) * half + mr] = sigma.at(a1, a2) * sigma.at(b1, b2).conj();
                }
            }
        }
    });
    Ok(SigmaI { grid, values })
}

/// Wigner kernel of a type-I FIO from the closed form
/// `k(x, xi, y, eta) = F_2 sigma_I(x, eta, xi - Px - Q eta, y - Qx + R eta)`.
///
/// On the grid the `eta` of the kernel lives on the frequency lattice while
/// the symbol pairs are centered on all half-step midpoints `eta'`; the
/// discrete identity sums over `eta'` with the Dirichlet weight
/// `D(eta' - eta)` of the lag sum in the `y` variable. For integer `P, Q, R`
/// every wrap of the periodic grid leaves the phase unchanged and the two
/// routes agree to roundoff; other phases are rejected.
pub fn wigner_kernel_type1(sigma: &Symbol, phase: &QuadraticPhase) -> Result<WignerKernel> {
    if !phase.lattice_compatible() {
        return Err(Error::NotLatticeCompatible(format!(
            "need integer P, Q, R, got P = {}, Q = {}, R = {}",
            phase.p[(0, 0)],
            phase.q[(0, 0)],
            phase.r[(0, 0)]
        )));
    }
    wigner_kernel_type1_unchecked(sigma, phase, FIO_KERNEL_CAP)
}

/// [`wigner_kernel_type1`] without the lattice-compatibility guard. For other
/// phases the discrete closed form is still well defined but differs from
/// the Wigner kernel of the sampled operator by the wrap-around phases.
pub fn wigner_kernel_type1_unchecked(sigma: &Symbol, phase: &QuadraticPhase, cap: usize) -> Result<WignerKernel> {
    let grid = sigma.grid();
    let n = grid.n;
    if n > cap {
        return Err(Error::KernelTooLarge { n, cap });
    }
    if phase.d != 1 {
        return Err(Error::DimMismatch("closed-form kernels are built for d = 1".into()));
    }
    if !grid.is_self_dual() {
        return Err(Error::BadGrid("closed-form kernels need the self-dual step".into()));
    }
    let hl = HalfLattice::new(n)?;
    let (p, q, r) = (phase.p[(0, 0)], phase.q[(0, 0)], phase.r[(0, 0)]);
    let h = grid.h;
    let half = n / 2;
    let mut out = WignerKernel::zeros(grid);
    let side = out.side();
    let mid = |s: usize| (s as f64 - n as f64) * h / 2.0;
    let freq = |k: usize| (k as f64 - (n / 4) as f64) * grid.dual_step();
    // (2h)^2 from the lags, h^2 from the two eta quadratures
    let scale = 4.0 * h.powi(4);
    // Dirichlet weight of the y-lag sum, by offset j = (eta' - eta) / (h/2)
    // (mod 2n) and parity of the y midpoint
    let dirichlet: Vec<[C64; 2]> = (0..2 * n)
        .map(|j| {
            [0i64, 1].map(|par| {
                (0..half as i64)
                    .map(|m| {
                        let lag = 2 * (m - (n / 4) as i64) + par;
                        C64::from_polar(1.0, -PI * (lag * j as i64) as f64 / n as f64)
                    })
                    .sum()
            })
        })
        .collect();
    out.values.par_chunks_mut(half * side).enumerate().for_each(|(s1, chunk)| {
        let x = mid(s1);
        let mut prod = vec![ZERO; half * half];
        let mut e2 = vec![ZERO; half * 2 * n];
        let mut g = vec![ZERO; half * 2 * n];
        let mut e1 = vec![ZERO; half * half];
        let mut f = vec![ZERO; half * 2 * n];
        for se in 0..2 * n {
            let eta = mid(se);
            for m1 in 0..half {
                let (a1, b1, _) = hl.at(s1, m1);
                for m2 in 0..half {
                    let (a2, b2, _) = hl.at(se, m2);
                    prod[m1 * half + m2] = sigma.at(a1, a2) * sigma.at(b1, b2).conj();
                }
            }
            // e2[m2, s2] = e^{-2 pi i rho beta(s2)}
            for m2 in 0..half {
                let rho = hl.lag(se, m2) as f64 * h;
                for s2 in 0..2 * n {
                    let beta = mid(s2) - q * x + r * eta;
                    e2[m2 * 2 * n + s2] = C64::from_polar(1.0, -2.0 * PI * rho * beta);
                }
            }
            // e1[k1, m1] = e^{-2 pi i t alpha(k1)}
            for k1 in 0..half {
                let alpha = freq(k1) - p * x - q * eta;
                for m1 in 0..half {
                    let t = hl.lag(s1, m1) as f64 * h;
                    e1[k1 * half + m1] = C64::from_polar(scale, -2.0 * PI * t * alpha);
                }
            }
            g.fill(ZERO);
            gemm(half, half, 2 * n, 1.0, &prod, &e2, &mut g);
            f.fill(ZERO);
            gemm(half, half, 2 * n, 1.0, &e1, &g, &mut f);
            for k2 in 0..half {
                let j = (se as i64 - 2 * k2 as i64 - (n / 2) as i64).rem_euclid(2 * n as i64) as usize;
                if j % 2 == 0 && j != 0 && j != n {
                    continue;
                }
                let d = dirichlet[j];
                for k1 in 0..half {
                    let row = &mut chunk[k1 * side..(k1 + 1) * side];
                    let src = &f[k1 * 2 * n..(k1 + 1) * 2 * n];
                    for s2 in 0..2 * n {
                        row[s2 * half + k2] += d[s2 % 2] * src[s2];
                    }
                }
            }
        }
    });
    Ok(out)
}

/// Orthonormal Hermite-Wigner basis `W(h_j, h_l)`, `j, l < order`.
pub fn hermite_wigner_basis(grid: Grid, order: usize) -> Result<Vec<PhaseField>> {
    let hs: Vec<Signal> = (0..order).map(|k| hermite(grid, k)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(order * order);
    for a in &hs {
        for b in &hs {
            out.push(wigner(a, b)?);
        }
    }
    Ok(out)
}

/// Galerkin matrix `<B_a, K B_b>` of a Wigner kernel on a basis.
pub fn galerkin(k: &WignerKernel, basis: &[PhaseField]) -> Result<CMat> {
    let images: Vec<PhaseField> = basis.iter().map(|b| k.apply(b)).collect::<Result<_>>()?;
    let m = basis.len();
    let mut out = CMat::zeros(m, m);
    for (a, ba) in basis.iter().enumerate() {
        for (b, img) in images.iter().enumerate() {
            out[(a, b)] = moyal_pairing(ba, img)?;
        }
    }
    Ok(out)
}

/// Discrepancies between two Wigner kernels of the same operator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoPathReport {
    /// Relative Frobenius distance of the Galerkin matrices on the
    /// Hermite-Wigner basis.
    pub galerkin: f64,
    /// `sqrt(sum_b ||(K1 - K2) B_b||^2 / sum_b ||K1 B_b||^2)` on the same basis.
    pub action: f64,
    /// Entrywise relative distance of the full tensors.
    pub raw: f64,
}

pub fn two_path_report(direct: &WignerKernel, closed: &WignerKernel, order: usize) -> Result<TwoPathReport> {
    let basis = hermite_wigner_basis(direct.grid, order)?;
    let g1 = galerkin(direct, &basis)?;
    let g2 = galerkin(closed, &basis)?;
    let galerkin = (&g1 - &g2).norm() / g1.norm().max(1e-300);
    let (mut num, mut den) = (0.0, 0.0);
    for b in &basis {
        let a1 = direct.apply(b)?;
        let a2 = closed.apply(b)?;
        num += a1.sub(&a2)?.norm().powi(2);
        den += a1.norm().powi(2);
    }
    Ok(TwoPathReport { galerkin, action: (num / den.max(1e-300)).sqrt(), raw: closed.rel_diff(direct)? })
}

/// Both routes to the Wigner kernel of a type-I FIO, compared.
pub fn two_path_discrepancy(sigma: &Symbol, phase: &QuadraticPhase) -> Result<TwoPathReport> {
    let direct = wigner_kernel_capped(&type1_fio(sigma, phase)?, FIO_KERNEL_CAP)?;
    let closed = wigner_kernel_type1(sigma, phase)?;
    two_path_report(&direct, &closed, 5)
}

/// Knobs of the membership diagnostic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MembershipOptions {
    /// Probe centers `w` satisfy `|w|, |S w| <= r_probe`; default `L / 8`.
    pub r_probe: Option<f64>,
    /// The reference radius is the first radius at which the exact
    /// metaplectic image of the probes leaves at most this mass fraction.
    pub ref_mass: f64,
    /// Cells added to the reference radius to form the tube.
    pub margin_cells: f64,
    /// Pass threshold for the mass fraction outside the tube.
    pub pass_mass: f64,
    /// Envelope values below `floor * H(0)` are ignored by the exponent fit.
    pub floor: f64,
    pub kernel_cap: usize,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            r_probe: None,
            ref_mass: 1e-4,
            margin_cells: 4.0,
            pass_mass: 1e-3,
            floor: 1e-6,
            kernel_cap: FIO_KERNEL_CAP,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipReport {
    /// `(R, mass fraction beyond R cells)`, worst probe.
    pub decay_profile: Vec<(f64, f64)>,
    /// Same curve for the exact metaplectic images of the probes.
    pub reference_profile: Vec<(f64, f64)>,
    pub reference_radius: f64,
    pub tube_radius: f64,
    pub tube_mass: f64,
    /// Mass fraction beyond a fixed radius of 4 cells.
    pub mass_beyond_4: f64,
    /// Weighted `l^q` norm of the radial Gabor envelope.
    pub symbol_norm: f64,
    /// Fitted decay exponent of the envelope in `log(1 + r)`.
    pub exponent: f64,
    pub probes: usize,
    pub q: f64,
    pub s: f64,
    pub pass: bool,
}

/// Membership of `T` in `FIO(S, M^{inf,q}_{1 (x) v_s})`, diagnosed through its
/// Wigner kernel.
pub fn fio_membership(t: &OperatorKernel, s: &SymplecticMat, q: f64, sw: f64, opts: &MembershipOptions) -> Result<MembershipReport> {
    let k = wigner_kernel_capped(t, opts.kernel_cap)?;
    fio_membership_kernel(&k, s, q, sw, opts)
}

fn check_s(s: &SymplecticMat) -> Result<()> {
    if s.dim() != 1 {
        return Err(Error::DimMismatch("membership is diagnosed for d = 1".into()));
    }
    let cond = s.matrix().norm() * s.inverse().matrix().norm() / 2.0;
    if !cond.is_finite() || cond > 1e4 {
        return Err(Error::IllConditionedS(format!("condition number {cond:e}")));
    }
    Ok(())
}

fn mass_beyond(field: &PhaseField, center: (f64, f64), radii: &[f64]) -> Vec<f64> {
    let grid = field.grid;
    let mut acc = vec![0.0; radii.len()];
    let mut total = 0.0;
    for (i, v) in field.values.iter().enumerate() {
        let m = v.norm_sqr();
        total += m;
        let dist = crate::modnorm::lattice_distance(grid, field.point(i), center);
        for (a, &r) in acc.iter_mut().zip(radii) {
            if dist > r {
                *a += m;
            }
        }
    }
    acc.iter().map(|a| a / total.max(1e-300)).collect()
}

/// Coherent state on the lattice point `(x, xi)`, periodized by a circular shift.
fn lattice_coherent(grid: Grid, x: f64, xi: f64) -> Result<Signal> {
    time_freq_shift(&coherent_state(grid, 0.0, 0.0), &[x], &[xi])
}

/// Membership diagnostic from a precomputed Wigner kernel.
///
/// For coherent probes `phi_w` the field `K W(phi_w) = W(T phi_w)` must stay
/// within a tube around `S w`; the tube is the radius that holds the exact
/// metaplectic image of the probes plus a margin. The envelope
/// `H(r) = max |<phi_z, T phi_w>|` over `|z - S w| ~ r` (read off the kernel
/// through the Moyal pairing) supplies the weighted norm and the fitted decay
/// exponent, which must reach `s + 1`.
pub fn fio_membership_kernel(k: &WignerKernel, s: &SymplecticMat, q: f64, sw: f64, opts: &MembershipOptions) -> Result<MembershipReport> {
    check_s(s)?;
    if q.is_nan() || q <= 0.0 {
        return Err(Error::BadExponent(format!("{q}")));
    }
    let grid = k.grid;
    let n = grid.n;
    let h = grid.h;
    let big_l = grid.box_len();
    let r_probe = opts.r_probe.unwrap_or(big_l / 8.0);
    let word = factor_symplectic_stable(s)?;
    let radii: Vec<f64> = (0..=n / 2).map(|r| r as f64).collect();

    let reach = (r_probe / h).floor() as i64;
    let mut centers = Vec::new();
    for i in -reach..=reach {
        for j in -reach..=reach {
            let w = [i as f64 * h, j as f64 * h];
            let swv = s.apply(&w);
            if w[0].hypot(w[1]) <= r_probe + 1e-12 && swv[0].hypot(swv[1]) <= r_probe + 1e-12 {
                centers.push((w, (swv[0], swv[1])));
            }
        }
    }

    struct Probe {
        profile: Vec<f64>,
        reference: Vec<f64>,
        field: PhaseField,
        image: (f64, f64),
    }
    let probes: Vec<Probe> = centers
        .par_iter()
        .map(|&(w, image)| {
            let phi = lattice_coherent(grid, w[0], w[1])?;
            let field = k.apply(&wigner(&phi, &phi)?)?;
            let psi = word.apply(&phi)?;
            let reference = mass_beyond(&wigner(&psi, &psi)?, image, &radii);
            Ok(Probe { profile: mass_beyond(&field, image, &radii), reference, field, image })
        })
        .collect::<Result<_>>()?;

    let worst = |pick: &dyn Fn(&Probe) -> &Vec<f64>| -> Vec<f64> {
        (0..radii.len()).map(|r| probes.iter().map(|p| pick(p)[r]).fold(0.0, f64::max)).collect()
    };
    let profile = worst(&|p| &p.profile);
    let reference = worst(&|p| &p.reference);
    let at = |curve: &[f64], r: f64| curve[(r.ceil() as usize).min(curve.len() - 1)];
    let r_ref = radii.iter().zip(&reference).find(|(_, &m)| m <= opts.ref_mass).map(|(&r, _)| r).unwrap_or(radii[radii.len() - 1]);
    let tube = r_ref + opts.margin_cells;
    let tube_mass = at(&profile, tube);

    // Gabor envelope: |<phi_z, T phi_w>|^2 = <W phi_z, K W phi_w>.
    let gabor: Vec<((f64, f64), PhaseField)> = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let (x, xi) = (grid.x(i / n), grid.xi(i % n));
            let phi = lattice_coherent(grid, x, xi)?;
            Ok(((x, xi), wigner(&phi, &phi)?))
        })
        .collect::<Result<_>>()?;
    let bins = n;
    let wrap = |d: f64| d - big_l * (d / big_l).round();
    let per_probe: Vec<Vec<f64>> = probes
        .par_iter()
        .map(|p| {
            let mut env = vec![0.0_f64; bins];
            for (z, wz) in &gabor {
                let r = wrap(z.0 - p.image.0).hypot(wrap(z.1 - p.image.1));
                let b = ((r / h).round() as usize).min(bins - 1);
                let m2 = moyal_pairing(wz, &p.field).map(|c| c.re.max(0.0)).unwrap_or(0.0);
                env[b] = env[b].max(m2.sqrt());
            }
            env
        })
        .collect();
    let env: Vec<f64> = (0..bins).map(|b| per_probe.iter().map(|e| e[b]).fold(0.0, f64::max)).collect();
    let rad = |b: usize| b as f64 * h;
    let symbol_norm = if q.is_infinite() {
        env.iter().enumerate().map(|(b, &v)| v * v_s(&[rad(b)], sw)).fold(0.0, f64::max)
    } else {
        env.iter()
            .enumerate()
            .map(|(b, &v)| {
                let (r0, r1) = ((rad(b) - h / 2.0).max(0.0), rad(b) + h / 2.0);
                (v * v_s(&[rad(b)], sw)).powf(q) * PI * (r1 * r1 - r0 * r0)
            })
            .sum::<f64>()
            .powf(1.0 / q)
    };
    let h0 = env.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let pts: Vec<(f64, f64)> = env
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v > opts.floor * h0)
        .map(|(b, &v)| ((1.0 + rad(b)).ln(), -(v / h0).ln()))
        .collect();
    let exponent = slope(&pts);

    let decay_profile: Vec<(f64, f64)> = radii.iter().cloned().zip(profile.iter().cloned()).collect();
    let reference_profile: Vec<(f64, f64)> = radii.iter().cloned().zip(reference).collect();
    let pass = !probes.is_empty() && tube_mass < opts.pass_mass && exponent >= sw + 1.0;
    Ok(MembershipReport {
        mass_beyond_4: at(&profile, 4.0),
        decay_profile,
        reference_profile,
        reference_radius: r_ref,
        tube_radius: tube,
        tube_mass,
        symbol_norm,
        exponent,
        probes: probes.len(),
        q,
        s: sw,
        pass,
    })
}

/// Least-squares slope; 0 when fewer than two distinct abscissae.
fn slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, y) in pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}
