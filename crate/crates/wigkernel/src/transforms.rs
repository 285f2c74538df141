//! Time-frequency transforms: centered DFT, partial Fourier transform, STFT,
//! cross-Wigner and Rihaczek distributions, and the phase-space flips.
//!
//! The discrete Wigner lives on a half-step lattice: `2n` midpoints
//! `x_s = (s - n) h / 2` and `n/2` frequencies `xi_k = (k - n/4) / (n h)`.
//! Lags `t = delta h` run over one parity class per midpoint, so every pair
//! `(f[a], g[b])` with `a + b = s (mod n)` is used exactly once and the
//! Moyal identity holds to roundoff. The field is antiperiodic in frequency:
//! `W[s, k + n/2] = (-1)^s W[s, k]`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{dft_axis, idft_axis, raw_fft, raw_fft_nd};
use crate::metaplectic::{Token, Word};
use crate::signal::{tensor, Axis, Grid, PhaseField, Signal, C64};
use crate::symplectic::RMat;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn i_pow(e: i64) -> C64 {
    match e.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Centered DFT with quadrature: `f^(xi_k) = h^d sum_j f(x_j) e^{-2 pi i xi_k x_j}`.
/// The result sits on the dual grid (step `1/(n h)`).
pub fn dft(f: &Signal) -> Signal {
    let g = f.grid;
    let mut values = f.values.clone();
    let shape = g.shape();
    for axis in 0..g.d {
        dft_axis(&mut values, &shape, axis, g.h);
    }
    Signal { grid: dual_grid(g), values }
}

/// Grid of the transform; a self-dual grid maps to itself exactly.
fn dual_grid(g: Grid) -> Grid {
    if g.is_self_dual() {
        g
    } else {
        Grid { h: g.dual_step(), ..g }
    }
}

/// Inverse of [`dft`].
pub fn idft(f: &Signal) -> Signal {
    let g = f.grid;
    let mut values = f.values.clone();
    let shape = g.shape();
    let h = g.dual_step();
    for axis in 0..g.d {
        idft_axis(&mut values, &shape, axis, h);
    }
    Signal { grid: dual_grid(g), values }
}

fn require_self_dual(g: &Grid) -> Result<()> {
    if !g.is_self_dual() {
        return Err(Error::BadGrid("this transform needs the self-dual step h = 1/sqrt(n)".into()));
    }
    Ok(())
}

/// Fourier transform in the second variable of a function on the doubled grid.
pub fn partial_ft2(f: &Signal) -> Result<Signal> {
    if f.grid.d != 2 {
        return Err(Error::DimMismatch("partial transform needs a d = 2 signal".into()));
    }
    require_self_dual(&f.grid)?;
    let mut values = f.values.clone();
    dft_axis(&mut values, &f.grid.shape(), 1, f.grid.h);
    Ok(Signal { grid: f.grid, values })
}

/// Inverse of [`partial_ft2`].
pub fn partial_ift2(f: &Signal) -> Result<Signal> {
    if f.grid.d != 2 {
        return Err(Error::DimMismatch("partial transform needs a d = 2 signal".into()));
    }
    require_self_dual(&f.grid)?;
    let mut values = f.values.clone();
    idft_axis(&mut values, &f.grid.shape(), 1, f.grid.h);
    Ok(Signal { grid: f.grid, values })
}

fn unravel(mut i: usize, n: usize, d: usize) -> [usize; 2] {
    let mut out = [0usize; 2];
    for a in (0..d).rev() {
        out[a] = i % n;
        i /= n;
    }
    out
}

/// `V_g f(x, xi) = h^d sum_t f(t) conj(g(t - x)) e^{-2 pi i xi t}` on the
/// `n^d x n^d` lattice (circular translation).
pub fn stft(f: &Signal, g: &Signal) -> Result<PhaseField> {
    f.grid.ensure_same(&g.grid)?;
    if g.values.iter().all(|v| *v == ZERO) {
        return Err(Error::ZeroWindow);
    }
    let grid = f.grid;
    let (n, d) = (grid.n, grid.d);
    let m = grid.len();
    let mut out = PhaseField::stft_lattice(grid);
    let shape = grid.shape();
    out.values.par_chunks_mut(m).enumerate().for_each(|(j, row)| {
        let jj = unravel(j, n, d);
        for (l, v) in row.iter_mut().enumerate() {
            let ll = unravel(l, n, d);
            let mut src = 0;
            for a in 0..d {
                src = src * n + (ll[a] + n + n / 2 - jj[a]) % n;
            }
            *v = f.values[l] * g.values[src].conj();
        }
        for axis in 0..d {
            dft_axis(row, &shape, axis, grid.h);
        }
    });
    Ok(out)
}

/// Index tables of the half-lattice pairing along one axis.
pub(crate) struct HalfLattice {
    n: usize,
    /// `a[s * n/2 + m']`, `b[...]`: sample indices with `a + b = s (mod n)`.
    a: Vec<usize>,
    b: Vec<usize>,
    /// `i^delta` pre-twiddle.
    pre: Vec<C64>,
    /// `(-1)^k e^{-2 pi i k p / n}` post-twiddle, for parity p = 0, 1.
    post: [Vec<C64>; 2],
}

impl HalfLattice {
    pub(crate) fn new(n: usize) -> Result<HalfLattice> {
        if n % 4 != 0 {
            return Err(Error::BadGrid(format!("the Wigner lattice needs n divisible by 4, got {n}")));
        }
        let half = n / 2;
        let (mut a, mut b, mut pre) = (Vec::with_capacity(2 * n * half), Vec::new(), Vec::new());
        for s in 0..2 * n as i64 {
            let p = s % 2;
            for mp in 0..half as i64 {
                let delta = 2 * (mp - (n / 4) as i64) + p;
                let bi = ((s - delta) / 2).rem_euclid(n as i64);
                a.push((bi + delta).rem_euclid(n as i64) as usize);
                b.push(bi as usize);
                pre.push(i_pow(delta));
            }
        }
        let post = [0usize, 1].map(|p| {
            (0..half)
                .map(|k| {
                    let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                    C64::from_polar(sign, -2.0 * PI * (k * p) as f64 / n as f64)
                })
                .collect()
        });
        Ok(HalfLattice { n, a, b, pre, post })
    }

    pub(crate) fn at(&self, s: usize, mp: usize) -> (usize, usize, C64) {
        let i = s * self.n / 2 + mp;
        (self.a[i], self.b[i], self.pre[i])
    }

    /// Lag `delta` (in samples) used at midpoint `s`, slot `mp`.
    pub(crate) fn lag(&self, s: usize, mp: usize) -> i64 {
        2 * (mp as i64 - (self.n / 4) as i64) + (s % 2) as i64
    }
}

/// Cross-Wigner distribution `W(f, g)` on the half-step lattice (d = 1 or 2).
pub fn wigner(f: &Signal, g: &Signal) -> Result<PhaseField> {
    f.grid.ensure_same(&g.grid)?;
    let grid = f.grid;
    let hl = HalfLattice::new(grid.n)?;
    match grid.d {
        1 => Ok(wigner1(f, g, &hl)),
        _ => {
            let mut out = wigner_lattice(grid);
            let n = grid.n;
            let block = (n / 2) * (n / 2);
            out.values.par_chunks_mut(2 * n * block).enumerate().for_each(|(s1, rows)| {
                let mut buf = vec![ZERO; block];
                for s2 in 0..2 * n {
                    wigner2_block(&f.values, &g.values, grid.h, &hl, s1, s2, &mut buf);
                    // field layout: (s1, s2, k1, k2)
                    rows[s2 * block..(s2 + 1) * block].copy_from_slice(&buf);
                }
            });
            Ok(out)
        }
    }
}

fn wigner1(f: &Signal, g: &Signal, hl: &HalfLattice) -> PhaseField {
    let grid = f.grid;
    let half = grid.n / 2;
    let mut out = wigner_lattice(grid);
    let scale = 2.0 * grid.h;
    out.values.par_chunks_mut(half).enumerate().for_each(|(s, row)| {
        for (mp, v) in row.iter_mut().enumerate() {
            let (a, b, pre) = hl.at(s, mp);
            *v = f.values[a] * g.values[b].conj() * pre;
        }
        raw_fft(row, false);
        let post = &hl.post[s % 2];
        for (k, v) in row.iter_mut().enumerate() {
            *v *= post[k] * scale;
        }
    });
    out
}

/// The `(n/2)^2` frequency block of the 2-D Wigner at midpoint `(s1, s2)`,
/// written into `buf` in `(k1, k2)` order.
fn wigner2_block(f: &[C64], g: &[C64], h: f64, hl: &HalfLattice, s1: usize, s2: usize, buf: &mut [C64]) {
    let n = hl.n;
    let half = n / 2;
    for m1 in 0..half {
        let (a1, b1, p1) = hl.at(s1, m1);
        for m2 in 0..half {
            let (a2, b2, p2) = hl.at(s2, m2);
            buf[m1 * half + m2] = f[a1 * n + a2] * g[b1 * n + b2].conj() * p1 * p2;
        }
    }
    raw_fft_nd(buf, &[half, half], false);
    let scale = 4.0 * h * h;
    let (t1, t2) = (&hl.post[s1 % 2], &hl.post[s2 % 2]);
    for k1 in 0..half {
        let c = t1[k1] * scale;
        for k2 in 0..half {
            buf[k1 * half + k2] *= c * t2[k2];
        }
    }
}

/// Block-wise access to the 2-D Wigner of doubled-grid signals, used to
/// stream kernel builds without materializing the full field.
pub(crate) struct Wigner2 {
    hl: HalfLattice,
    h: f64,
}

impl Wigner2 {
    pub(crate) fn new(grid: Grid) -> Result<Wigner2> {
        Ok(Wigner2 { hl: HalfLattice::new(grid.n)?, h: grid.h })
    }

    /// `(k1, k2)` block of `W(f, g)` at midpoints `(s1, s2)`.
    pub(crate) fn block(&self, f: &[C64], g: &[C64], s1: usize, s2: usize, buf: &mut [C64]) {
        wigner2_block(f, g, self.h, &self.hl, s1, s2, buf);
    }
}

/// Empty field on the half-step Wigner lattice of `grid` (d = 1 or 2).
pub fn wigner_lattice(grid: Grid) -> PhaseField {
    let x = Axis::centered(2 * grid.n, grid.h / 2.0);
    let xi = Axis::centered(grid.n / 2, grid.dual_step());
    PhaseField::zeros(grid, vec![x; grid.d], vec![xi; grid.d], true)
}

/// Exact value of the discrete cross-Wigner at midpoint `s` and an arbitrary
/// frequency `xi` (d = 1).
pub fn wigner_at(f: &Signal, g: &Signal, s: usize, xi: f64) -> Result<C64> {
    f.grid.ensure_same(&g.grid)?;
    let grid = f.grid;
    if grid.d != 1 || s >= 2 * grid.n {
        return Err(Error::DimMismatch("wigner_at needs d = 1 and s < 2n".into()));
    }
    let hl = HalfLattice::new(grid.n)?;
    let p = (s % 2) as i64;
    let mut acc = ZERO;
    for mp in 0..grid.n / 2 {
        let (a, b, _) = hl.at(s, mp);
        let delta = 2 * (mp as i64 - (grid.n / 4) as i64) + p;
        acc += f.values[a] * g.values[b].conj() * C64::from_polar(1.0, -2.0 * PI * xi * delta as f64 * grid.h);
    }
    Ok(acc * 2.0 * grid.h)
}

/// Phase-space inner product `cell * sum conj(W1) W2`. For Wigner inputs it
/// equals `<f, u> conj(<g, v>)`.
pub fn moyal_pairing(w1: &PhaseField, w2: &PhaseField) -> Result<C64> {
    w1.ensure_same_lattice(w2)?;
    let s: C64 = w1.values.iter().zip(&w2.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * w1.cell())
}

/// Rihaczek distribution `f(x) conj(g^(xi)) e^{-2 pi i x xi}` on the STFT lattice.
pub fn rihaczek(f: &Signal, g: &Signal) -> Result<PhaseField> {
    f.grid.ensure_same(&g.grid)?;
    require_self_dual(&f.grid)?;
    let grid = f.grid;
    let gh = dft(g);
    let m = grid.len();
    let mut out = PhaseField::stft_lattice(grid);
    let (n, d) = (grid.n, grid.d);
    out.values.par_chunks_mut(m).enumerate().for_each(|(j, row)| {
        let jj = unravel(j, n, d);
        for (k, v) in row.iter_mut().enumerate() {
            let kk = unravel(k, n, d);
            let mut ph = 0.0;
            for a in 0..d {
                ph += grid.x(jj[a]) * grid.xi(kk[a]);
            }
            *v = f.values[j] * gh.values[k].conj() * C64::from_polar(1.0, -2.0 * PI * ph);
        }
    });
    Ok(out)
}

/// Index of `-xi` along a frequency axis and the accompanying sign.
fn flip_index(k: usize, len: usize, antiperiodic: bool, s: usize) -> (usize, f64) {
    if antiperiodic {
        if k == 0 {
            (0, if s % 2 == 1 { -1.0 } else { 1.0 })
        } else {
            (len - k, 1.0)
        }
    } else {
        ((len - k) % len, 1.0)
    }
}

/// `F(x, xi) -> F(x, -xi)` on every frequency axis.
pub fn flip2(f: &PhaseField) -> PhaseField {
    let shape = f.shape();
    let dx = f.x_axes.len();
    let rank = shape.len();
    let mut out = f.clone();
    let mut idx = vec![0usize; rank];
    for (flat, v) in out.values.iter_mut().enumerate() {
        let mut r = flat;
        for a in (0..rank).rev() {
            idx[a] = r % shape[a];
            r /= shape[a];
        }
        let mut sign = 1.0;
        let mut src = 0;
        for a in 0..rank {
            let i = if a < dx {
                idx[a]
            } else {
                let (j, sg) = flip_index(idx[a], shape[a], f.antiperiodic, idx[a - dx]);
                sign *= sg;
                j
            };
            src = src * shape[a] + i;
        }
        *v = f.values[src] * sign;
    }
    out
}

/// `T_p F(x, xi, y, eta) = F(x, y, xi, -eta)` for a field with axes
/// `(x, y, xi, eta)`. The result is laid out `(x, xi, y, eta)`.
pub fn perm_tp(f: &PhaseField) -> Result<Vec<C64>> {
    if f.x_axes.len() != 2 || f.xi_axes.len() != 2 {
        return Err(Error::RankMismatch { expected: 4, got: f.x_axes.len() + f.xi_axes.len() });
    }
    let (nx, ny) = (f.x_axes[0].len, f.x_axes[1].len);
    let (nk, ne) = (f.xi_axes[0].len, f.xi_axes[1].len);
    let mut out = vec![ZERO; f.values.len()];
    for x in 0..nx {
        for y in 0..ny {
            for k in 0..nk {
                for e in 0..ne {
                    let (fe, sign) = flip_index(e, ne, f.antiperiodic, y);
                    let src = ((x * ny + y) * nk + k) * ne + fe;
                    out[((x * nk + k) * ny + y) * ne + e] = f.values[src] * sign;
                }
            }
        }
    }
    Ok(out)
}

/// The word `F2 T_w` whose projection is the Wigner matrix `A_{1/2}`:
/// `T_w F(x, t) = F(x + t/2, x - t/2)`.
pub fn wigner_word() -> Word {
    let l = RMat::from_row_slice(2, 2, &[1.0, 0.5, 1.0, -0.5]);
    Word::from_tokens(2, vec![Token::Ft2, Token::Dilate(l)]).expect("valid word")
}

/// The word `F2 T_{L0}` whose projection is the Rihaczek matrix `A_0`.
pub fn rihaczek_word() -> Word {
    let l = RMat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, -1.0]);
    Word::from_tokens(2, vec![Token::Ft2, Token::Dilate(l)]).expect("valid word")
}

/// `W_A(f, g) = A^(f (x) conj g)` as a function on the doubled grid.
pub fn metaplectic_wigner(word: &Word, f: &Signal, g: &Signal) -> Result<Signal> {
    if word.d != 2 * f.grid.d {
        return Err(Error::DimMismatch(format!("word acts in dimension {}, need {}", word.d, 2 * f.grid.d)));
    }
    let ff = tensor(f, &g.conj())?;
    word.apply(&ff)
}

/// Samples a doubled-grid function at the points of the Wigner lattice that
/// it shares (even midpoints, central frequencies) and returns pairs
/// `(wigner-lattice index, value)`.
pub fn on_shared_points(w: &Signal) -> Vec<(usize, C64)> {
    let n = w.grid.n;
    let half = n / 2;
    let mut out = Vec::with_capacity(n * half);
    for j in 0..n {
        for k in 0..half {
            let s = 2 * j;
            out.push((s * half + k, w.values[j * n + k + n / 4]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{coherent_state, gaussian, hermite, inner};

    fn g1(n: usize) -> Grid {
        Grid::new(1, n).unwrap()
    }

    #[test]
    fn dft_of_gaussian_and_parity() {
        let g = g1(64);
        let phi = gaussian(g);
        assert!(dft(&phi).sub(&phi).unwrap().norm() < 1e-10);
        let f = coherent_state(g, 0.7, -0.3);
        let ff = dft(&dft(&f));
        // parity: f(-x) at index n - j
        for j in 1..64 {
            assert!((ff.values[j] - f.values[64 - j]).norm() < 1e-10);
        }
        let delta = dft(&Signal::one_hot(g, 32));
        for v in &delta.values {
            assert!((v - C64::new(g.h, 0.0)).norm() < 1e-15);
        }
        assert!((idft(&dft(&f)).sub(&f).unwrap().norm()) < 1e-12);
    }

    #[test]
    fn hermite_eigenfunctions() {
        let g = g1(64);
        for k in 0..=8 {
            let hk = hermite(g, k).unwrap();
            let lhs = dft(&hk);
            let rhs = hk.scaled(i_pow(-(k as i64)));
            assert!(lhs.sub(&rhs).unwrap().norm() < 1e-9, "k = {k}");
        }
    }

    #[test]
    fn gaussian_wigner_closed_form() {
        let g = g1(64);
        let phi = gaussian(g);
        let w = wigner(&phi, &phi).unwrap();
        for (i, v) in w.values.iter().enumerate() {
            let (x, xi) = w.point(i);
            let expect = 2f64.sqrt() * (-2.0 * PI * (x * x + xi * xi)).exp();
            assert!((v - C64::new(expect, 0.0)).norm() < 1e-9, "{x} {xi} {v}");
        }
    }

    #[test]
    fn moyal_on_hermite_pairs() {
        let g = g1(64);
        let hs: Vec<Signal> = (0..4).map(|k| hermite(g, k).unwrap()).collect();
        let w01 = wigner(&hs[0], &hs[1]).unwrap();
        assert!((moyal_pairing(&w01, &w01).unwrap() - 1.0).norm() < 1e-12);
        let w0 = wigner(&hs[0], &hs[0]).unwrap();
        let w1 = wigner(&hs[1], &hs[1]).unwrap();
        assert!(moyal_pairing(&w0, &w1).unwrap().norm() < 1e-12);
        let a = wigner(&hs[2], &hs[3]).unwrap();
        let b = wigner(&hs[2].add(&hs[1]).unwrap(), &hs[3]).unwrap();
        let lhs = moyal_pairing(&a, &b).unwrap();
        let rhs = inner(&hs[2], &hs[2].add(&hs[1]).unwrap()).unwrap() * inner(&hs[3], &hs[3]).unwrap().conj();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn wigner_at_matches_lattice() {
        let g = g1(32);
        let f = coherent_state(g, 0.4, 0.9);
        let u = hermite(g, 2).unwrap();
        let w = wigner(&f, &u).unwrap();
        for s in [0, 5, 31, 40, 63] {
            for k in 0..16 {
                let xi = w.xi_axes[0].coord(k);
                let v = wigner_at(&f, &u, s, xi).unwrap();
                assert!((v - w.values[s * 16 + k]).norm() < 1e-12);
            }
        }
        // antiperiodic continuation
        let xi = w.xi_axes[0].coord(3) + w.xi_axes[0].period();
        let v = wigner_at(&f, &u, 7, xi).unwrap();
        assert!((v + w.values[7 * 16 + 3]).norm() < 1e-12);
    }

    #[test]
    fn wigner_word_matches_direct_wigner() {
        // the word interpolates off-grid in its dilation step, so this needs n = 64
        let g = g1(64);
        let f = coherent_state(g, 0.3, -0.4);
        let u = hermite(g, 1).unwrap();
        let w = wigner(&f, &u).unwrap();
        let mw = metaplectic_wigner(&wigner_word(), &f, &u).unwrap();
        let worst = on_shared_points(&mw).into_iter().map(|(i, v)| (v - w.values[i]).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn stft_of_gaussian() {
        let g = g1(64);
        let phi = gaussian(g);
        let v = stft(&phi, &phi).unwrap();
        for (i, val) in v.values.iter().enumerate() {
            let (x, xi) = (g.x(i / 64), g.xi(i % 64));
            if x.abs() > 2.0 || xi.abs() > 2.0 {
                continue;
            }
            let expect = (0.5f64).sqrt() * (-PI * (x * x + xi * xi) / 2.0).exp();
            assert!((val.norm() - expect).abs() < 1e-9, "{x} {xi}");
        }
        assert!(matches!(stft(&phi, &Signal::zeros(g)), Err(Error::ZeroWindow)));
    }

    #[test]
    fn rihaczek_of_gaussian() {
        let g = g1(64);
        let phi = gaussian(g);
        let r = rihaczek(&phi, &phi).unwrap();
        for (i, v) in r.values.iter().enumerate() {
            let (x, xi) = (g.x(i / 64), g.xi(i % 64));
            let expect = C64::from_polar((-PI * (x * x + xi * xi)).exp(), -2.0 * PI * x * xi);
            assert!((v - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn flips_are_involutions() {
        let g = g1(32);
        let f = coherent_state(g, 0.3, 1.1);
        for w in [wigner(&f, &f).unwrap(), stft(&f, &gaussian(g)).unwrap()] {
            let ff = flip2(&flip2(&w));
            assert!(ff.sub(&w).unwrap().norm() < 1e-15);
        }
        // W(conj f, conj u)(x, xi) = conj W(f, u)(x, -xi)
        let u = hermite(g, 3).unwrap();
        let a = flip2(&wigner(&f, &u).unwrap());
        let a = PhaseField { values: a.values.iter().map(|v| v.conj()).collect(), ..a };
        let b = wigner(&f.conj(), &u.conj()).unwrap();
        assert!(a.sub(&b).unwrap().norm() < 1e-12);
    }
}
