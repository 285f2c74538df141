//! Discrete modulation norms `||F||_{M^{p,q}_m} = ||V_Phi F||_{L^{p,q}_m}`
//! with a normalized product-Gaussian window, for signals, phase-space
//! fields, operator kernels and Wigner kernels alike.
//!
//! For `p = q = 2` and weights `1`, `v_1`, `1 (x) v_s` the norm is computed
//! from the two marginals of `|V F|^2`, each a circular convolution:
//! `sum_Omega |V F|^2 = |F|^2 * |Phi|^2` and
//! `sum_X |V F|^2 = |F^|^2 * |Phi^|^2`. Everything else goes through an
//! explicit STFT, optionally decimated in position.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{centered_raw, dft_axis, raw_fft_nd};
use crate::kernel::{OperatorKernel, WignerKernel};
use crate::signal::{Axis, PhaseField, Signal, C64};
use crate::symplectic::SymplecticMat;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Anything sampled on a product lattice.
pub trait Sampled {
    fn axes(&self) -> Vec<Axis>;
    fn samples(&self) -> &[C64];
}

impl Sampled for Signal {
    fn axes(&self) -> Vec<Axis> {
        vec![self.grid.axis(); self.grid.d]
    }
    fn samples(&self) -> &[C64] {
        &self.values
    }
}

impl Sampled for PhaseField {
    fn axes(&self) -> Vec<Axis> {
        self.x_axes.iter().chain(&self.xi_axes).copied().collect()
    }
    fn samples(&self) -> &[C64] {
        &self.values
    }
}

impl Sampled for OperatorKernel {
    fn axes(&self) -> Vec<Axis> {
        OperatorKernel::axes(self)
    }
    fn samples(&self) -> &[C64] {
        &self.matrix
    }
}

impl Sampled for WignerKernel {
    fn axes(&self) -> Vec<Axis> {
        WignerKernel::axes(self)
    }
    fn samples(&self) -> &[C64] {
        &self.values
    }
}

/// Weight on the STFT lattice `(X, Omega)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    One,
    /// `(1 + |X|^2 + |Omega|^2)^{s/2}`.
    Vs(f64),
    /// `(1 + |Omega|^2)^{s/2}`: weights only the frequency block.
    OneTensorVs(f64),
}

impl Weight {
    pub fn eval(&self, x: &[f64], omega: &[f64]) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
        match *self {
            Weight::One => 1.0,
            Weight::Vs(s) => (1.0 + sq(x) + sq(omega)).powf(s / 2.0),
            Weight::OneTensorVs(s) => (1.0 + sq(omega)).powf(s / 2.0),
        }
    }
}

/// `v_s(z) = (1 + |z|^2)^{s/2}`.
pub fn v_s(z: &[f64], s: f64) -> f64 {
    (1.0 + z.iter().map(|t| t * t).sum::<f64>()).powf(s / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormMethod {
    /// Exact marginal convolutions (p = q = 2).
    Spectral,
    /// Explicit STFT with the given position stride.
    Explicit { stride: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub method: NormMethod,
}

#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    /// Position stride of the explicit STFT.
    pub stride: usize,
    /// Largest `positions x samples` product the explicit route accepts.
    pub work_cap: usize,
    /// Use the explicit route even when the spectral one applies.
    pub force_explicit: bool,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions { stride: 1, work_cap: 1 << 31, force_explicit: false }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::BadExponent(format!("{p}")));
    }
    Ok(())
}

/// Frequency axis dual to `a` (same length, centered).
pub fn dual_axis(a: &Axis) -> Axis {
    Axis::centered(a.len, 1.0 / (a.len as f64 * a.step))
}

/// Samples of `e^{-pi t^2}` on one axis, with circular minimum-image
/// distance to the axis center.
fn window_line(a: &Axis) -> Vec<f64> {
    let c = a.len / 2;
    (0..a.len)
        .map(|i| {
            let mut j = i as i64 - c as i64;
            let l = a.len as i64;
            if j >= l / 2 {
                j -= l;
            }
            let t = j as f64 * a.step;
            (-PI * t * t).exp()
        })
        .collect()
}

/// Normalized product Gaussian window on the lattice of `axes`, returned per
/// axis (the full window is the outer product).
fn window_factors(axes: &[Axis]) -> Vec<Vec<f64>> {
    axes.iter()
        .map(|a| {
            let w = window_line(a);
            let norm = (a.step * w.iter().map(|v| v * v).sum::<f64>()).sqrt();
            w.iter().map(|v| v / norm).collect()
        })
        .collect()
}

/// `||F||_{M^{p,q}_m}`.
pub fn mod_norm(f: &impl Sampled, p: f64, q: f64, m: Weight, opts: &NormOptions) -> Result<NormReport> {
    check_exponent(p)?;
    check_exponent(q)?;
    let m = if m == Weight::Vs(0.0) { Weight::One } else { m };
    let spectral_ok = p == 2.0 && q == 2.0 && !matches!(m, Weight::Vs(s) if s != 0.0 && s != 1.0);
    if spectral_ok && !opts.force_explicit {
        return Ok(NormReport { value: spectral_norm(&f.axes(), f.samples(), m), method: NormMethod::Spectral });
    }
    let v = stft_field(&f.axes(), f.samples(), opts)?;
    Ok(NormReport { value: mixed_norm(&v, p, q, m)?, method: NormMethod::Explicit { stride: opts.stride } })
}

/// Circular cross-correlation `out[i] = sum_l a[l] w[(l - i) mod L]` over
/// every axis (all real, `w` a product of per-axis factors centered at 0).
fn correlate(shape: &[usize], a: &[f64], w: &[Vec<f64>]) -> Vec<f64> {
    let mut av: Vec<C64> = a.iter().map(|&v| C64::new(v, 0.0)).collect();
    let mut wv: Vec<C64> = vec![C64::new(1.0, 0.0); av.len()];
    let rank = shape.len();
    let mut idx = vec![0usize; rank];
    for (flat, v) in wv.iter_mut().enumerate() {
        let mut r = flat;
        for ax in (0..rank).rev() {
            idx[ax] = r % shape[ax];
            r /= shape[ax];
        }
        let mut prod = 1.0;
        for ax in 0..rank {
            prod *= w[ax][idx[ax]];
        }
        *v = C64::new(prod, 0.0);
    }
    raw_fft_nd(&mut av, shape, false);
    raw_fft_nd(&mut wv, shape, false);
    for (x, y) in av.iter_mut().zip(&wv) {
        *x *= y.conj();
    }
    raw_fft_nd(&mut av, shape, true);
    let total = av.len() as f64;
    av.iter().map(|v| v.re / total).collect()
}

/// Squared window factors rotated so that index 0 is the axis center.
fn centered_at_zero(w: &[f64]) -> Vec<f64> {
    let l = w.len();
    (0..l).map(|j| w[(j + l / 2) % l]).collect()
}

fn spectral_norm(axes: &[Axis], values: &[C64], m: Weight) -> f64 {
    let shape: Vec<usize> = axes.iter().map(|a| a.len).collect();
    let cell: f64 = axes.iter().map(|a| a.step).product();
    let duals: Vec<Axis> = axes.iter().map(dual_axis).collect();
    let dcell: f64 = duals.iter().map(|a| a.step).product();
    let win = window_factors(axes);
    let mut total = 0.0;

    let need_pos = !matches!(m, Weight::OneTensorVs(_));
    let need_freq = !matches!(m, Weight::One);
    if need_pos {
        // A(X) = sum_t |F(t)|^2 |Phi(t - X)|^2 cell
        let sq: Vec<f64> = values.iter().map(|v| v.norm_sqr()).collect();
        let w2: Vec<Vec<f64>> = win.iter().map(|w| centered_at_zero(&w.iter().map(|v| v * v).collect::<Vec<_>>())).collect();
        let a = correlate(&shape, &sq, &w2);
        let s = if let Weight::Vs(s) = m { s } else { 0.0 };
        total += for_points(axes, &a, |x| if s == 0.0 { 1.0 } else { 1.0 + x.iter().map(|t| t * t).sum::<f64>() }) * cell * cell;
    }
    if need_freq {
        // B(Omega) = sum_nu |F^(nu)|^2 |Phi^(nu - Omega)|^2 dcell
        let mut fh = values.to_vec();
        for (ax, a) in axes.iter().enumerate() {
            dft_axis(&mut fh, &shape, ax, a.step);
        }
        let sq: Vec<f64> = fh.iter().map(|v| v.norm_sqr()).collect();
        let wh: Vec<Vec<f64>> = win
            .iter()
            .zip(axes)
            .map(|(w, a)| {
                let mut line: Vec<C64> = w.iter().map(|&v| C64::new(v, 0.0)).collect();
                centered_raw(&mut line, false);
                centered_at_zero(&line.iter().map(|v| (v * a.step).norm_sqr()).collect::<Vec<_>>())
            })
            .collect();
        let b = correlate(&shape, &sq, &wh);
        let weight: Box<dyn Fn(&[f64]) -> f64> = match m {
            Weight::OneTensorVs(s) => Box::new(move |o: &[f64]| (1.0 + o.iter().map(|t| t * t).sum::<f64>()).powf(s)),
            _ => Box::new(|o: &[f64]| o.iter().map(|t| t * t).sum::<f64>()),
        };
        total += for_points(&duals, &b, weight) * dcell * dcell;
    }
    total.max(0.0).sqrt()
}

/// `sum_i values[i] * weight(coords(i))`.
fn for_points(axes: &[Axis], values: &[f64], weight: impl Fn(&[f64]) -> f64) -> f64 {
    let rank = axes.len();
    let mut idx = vec![0.0; rank];
    let mut acc = 0.0;
    for (flat, v) in values.iter().enumerate() {
        let mut r = flat;
        for ax in (0..rank).rev() {
            idx[ax] = axes[ax].coord(r % axes[ax].len);
            r /= axes[ax].len;
        }
        acc += v * weight(&idx);
    }
    acc
}

/// Explicit STFT `V F(X, Omega)` with window `Phi`, positions decimated by
/// `opts.stride`. Output layout: position axes, then frequency axes.
pub fn stft_field(axes: &[Axis], values: &[C64], opts: &NormOptions) -> Result<PhaseField> {
    let rank = axes.len();
    let shape: Vec<usize> = axes.iter().map(|a| a.len).collect();
    let total: usize = shape.iter().product();
    let stride = opts.stride.max(1);
    let pos_axes: Vec<Axis> = axes
        .iter()
        .map(|a| Axis { len: a.len.div_ceil(stride), step: a.step * stride as f64, origin: a.origin })
        .collect();
    let npos: usize = pos_axes.iter().map(|a| a.len).product();
    if npos.saturating_mul(total) > opts.work_cap {
        return Err(Error::TooLarge(format!("explicit STFT needs {npos} x {total} samples")));
    }
    let win = window_factors(axes);
    let duals: Vec<Axis> = axes.iter().map(dual_axis).collect();
    let mut out = vec![ZERO; npos * total];
    out.par_chunks_mut(total).enumerate().for_each(|(pi, row)| {
        let mut r = pi;
        let mut centre = vec![0usize; rank];
        for ax in (0..rank).rev() {
            centre[ax] = (r % pos_axes[ax].len) * stride;
            r /= pos_axes[ax].len;
        }
        let mut idx = vec![0usize; rank];
        for (flat, v) in row.iter_mut().enumerate() {
            let mut rr = flat;
            for ax in (0..rank).rev() {
                idx[ax] = rr % shape[ax];
                rr /= shape[ax];
            }
            let mut w = 1.0;
            for ax in 0..rank {
                let l = shape[ax];
                w *= win[ax][(idx[ax] + l + l / 2 - centre[ax]) % l];
            }
            *v = values[flat] * w;
        }
        for ax in 0..rank {
            dft_axis(row, &shape, ax, axes[ax].step);
        }
    });
    let grid = crate::signal::Grid { d: 1, n: 2, h: 1.0 };
    Ok(PhaseField { grid, x_axes: pos_axes, xi_axes: duals, antiperiodic: false, values: out })
}

/// Weighted mixed norm: `l^p` over the position block (with its cell), then
/// `l^q` over the frequency block. `f64::INFINITY` means a supremum.
pub fn mixed_norm(f: &PhaseField, p: f64, q: f64, m: Weight) -> Result<f64> {
    check_exponent(p)?;
    check_exponent(q)?;
    let nx: usize = f.x_axes.iter().map(|a| a.len).product();
    let nk: usize = f.xi_axes.iter().map(|a| a.len).product();
    let cx: f64 = f.x_axes.iter().map(|a| a.step).product();
    let ck: f64 = f.xi_axes.iter().map(|a| a.step).product();
    let coords = |axes: &[Axis], mut i: usize| -> Vec<f64> {
        let mut c = vec![0.0; axes.len()];
        for ax in (0..axes.len()).rev() {
            c[ax] = axes[ax].coord(i % axes[ax].len);
            i /= axes[ax].len;
        }
        c
    };
    let xs: Vec<Vec<f64>> = (0..nx).map(|i| coords(&f.x_axes, i)).collect();
    let inner: Vec<f64> = (0..nk)
        .into_par_iter()
        .map(|k| {
            let om = coords(&f.xi_axes, k);
            let mut acc = 0.0f64;
            for (i, x) in xs.iter().enumerate() {
                let v = f.values[i * nk + k].norm() * m.eval(x, &om);
                if p.is_infinite() {
                    acc = acc.max(v);
                } else {
                    acc += v.powf(p);
                }
            }
            if p.is_infinite() {
                acc
            } else {
                (acc * cx).powf(1.0 / p)
            }
        })
        .collect();
    if q.is_infinite() {
        return Ok(inner.iter().cloned().fold(0.0, f64::max));
    }
    let s: f64 = inner.iter().map(|v| v.powf(q)).sum();
    Ok((s * ck).powf(1.0 / q))
}

/// STFT norm of a 1-D signal with an arbitrary window (normalized here).
pub fn mod_norm_with_window(f: &Signal, window: &Signal, p: f64, q: f64, m: Weight) -> Result<f64> {
    f.grid.ensure_same(&window.grid)?;
    if window.norm() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let v = crate::transforms::stft(f, &window.normalized())?;
    mixed_norm(&v, p, q, m)
}

/// `(||f (x) conj f||_{M^{p,q}}, ||f||^2_{M^{p,q}})` with product windows.
pub fn tensor_norm_check(f: &Signal, p: f64, q: f64, m: Weight) -> Result<(f64, f64)> {
    let ff = crate::signal::tensor(f, &f.conj())?;
    let opts = NormOptions::default();
    let a = mod_norm(&ff, p, q, m, &opts)?.value;
    let b = mod_norm(f, p, q, m, &opts)?.value;
    Ok((a, b * b))
}

/// `(Q_s, H^s)` norms: weights `v_s` and `1 (x) v_s` at `p = q = 2`.
pub fn shubin_sobolev(f: &impl Sampled, s: f64) -> Result<(f64, f64)> {
    let opts = NormOptions::default();
    Ok((mod_norm(f, 2.0, 2.0, Weight::Vs(s), &opts)?.value, mod_norm(f, 2.0, 2.0, Weight::OneTensorVs(s), &opts)?.value))
}

/// Wigner-lattice distance in units of the base step `h`, periodic in
/// position (period `n h`) and in frequency (period `n h / 2`).
pub fn lattice_distance(grid: crate::signal::Grid, z: (f64, f64), w: (f64, f64)) -> f64 {
    let lx = grid.box_len();
    let lk = (grid.n / 2) as f64 * grid.dual_step();
    let wrap = |d: f64, l: f64| d - l * (d / l).round();
    let dx = wrap(z.0 - w.0, lx) / grid.h;
    let dk = wrap(z.1 - w.1, lk) / grid.dual_step();
    (dx * dx + dk * dk).sqrt()
}

/// Fraction of `sum |k|^2` on pairs with `|z - S w| > R` (distance in cells).
pub fn concentration_profile(k: &WignerKernel, s: &SymplecticMat, radii: &[f64]) -> Vec<(f64, f64)> {
    let side = k.side();
    let pts: Vec<(f64, f64)> = (0..side).map(|z| k.point(z)).collect();
    let sw: Vec<(f64, f64)> = pts
        .iter()
        .map(|&(y, eta)| {
            let v = s.apply(&[y, eta]);
            (v[0], v[1])
        })
        .collect();
    let per_row: Vec<Vec<f64>> = (0..side)
        .into_par_iter()
        .map(|z| {
            let mut acc = vec![0.0; radii.len() + 1];
            for w in 0..side {
                let m = k.values[z * side + w].norm_sqr();
                if m == 0.0 {
                    continue;
                }
                let dist = lattice_distance(k.grid, pts[z], sw[w]);
                acc[radii.len()] += m;
                for (r, &rad) in radii.iter().enumerate() {
                    if dist > rad {
                        acc[r] += m;
                    }
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![0.0; radii.len() + 1];
    for row in per_row {
        for (a, b) in sums.iter_mut().zip(row) {
            *a += b;
        }
    }
    let total = sums[radii.len()].max(1e-300);
    radii.iter().enumerate().map(|(i, &r)| (r, sums[i] / total)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::battery::{random_gaussian, rng};
    use crate::signal::{gaussian, hermite, Grid};

    #[test]
    fn spectral_matches_explicit() {
        let g = Grid::new(1, 32).unwrap();
        let f = random_gaussian(g, &mut rng(2), 3, 1.0);
        let explicit = NormOptions { force_explicit: true, ..Default::default() };
        for m in [Weight::One, Weight::Vs(1.0), Weight::OneTensorVs(1.0), Weight::OneTensorVs(2.5)] {
            let a = mod_norm(&f, 2.0, 2.0, m, &NormOptions::default()).unwrap();
            let b = mod_norm(&f, 2.0, 2.0, m, &explicit).unwrap();
            assert_eq!(a.method, NormMethod::Spectral);
            assert!((a.value - b.value).abs() < 1e-10 * b.value, "{m:?} {} {}", a.value, b.value);
        }
        // 2-D as well
        let g2 = Grid::new(2, 16).unwrap();
        let f2 = Signal::from_fn(g2, |t| C64::from_polar((-PI * (t[0] * t[0] + 2.0 * t[1] * t[1])).exp(), t[0]));
        let a = mod_norm(&f2, 2.0, 2.0, Weight::Vs(1.0), &NormOptions::default()).unwrap();
        let b = mod_norm(&f2, 2.0, 2.0, Weight::Vs(1.0), &explicit).unwrap();
        assert!((a.value - b.value).abs() < 1e-10 * b.value);
    }

    #[test]
    fn m2_is_l2() {
        let g = Grid::new(1, 64).unwrap();
        for k in 0..4 {
            let f = hermite(g, k).unwrap();
            let v = mod_norm(&f, 2.0, 2.0, Weight::One, &NormOptions::default()).unwrap().value;
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_norm_basics() {
        let g = Grid::new(1, 8).unwrap();
        let mut f = PhaseField::stft_lattice(g);
        for v in f.values.iter_mut() {
            *v = C64::new(1.0, 0.0);
        }
        assert_eq!(mixed_norm(&f, f64::INFINITY, f64::INFINITY, Weight::One).unwrap(), 1.0);
        let l2 = mixed_norm(&f, 2.0, 2.0, Weight::One).unwrap();
        assert!((l2 - f.norm()).abs() < 1e-12);
        assert!(matches!(mixed_norm(&f, 0.0, 1.0, Weight::One), Err(Error::BadExponent(_))));
        let scaled = f.scaled(C64::new(0.0, -3.0));
        assert!((mixed_norm(&scaled, 0.5, 1.5, Weight::Vs(1.0)).unwrap() - 3.0 * mixed_norm(&f, 0.5, 1.5, Weight::Vs(1.0)).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn tensor_identity() {
        let g = Grid::new(1, 32).unwrap();
        for f in [gaussian(g).normalized(), hermite(g, 1).unwrap()] {
            for (p, q) in [(2.0, 2.0), (1.0, 1.0), (1.0, f64::INFINITY)] {
                let (a, b) = tensor_norm_check(&f, p, q, Weight::One).unwrap();
                assert!((a - b).abs() < 1e-6 * b, "{p} {q}: {a} {b}");
            }
        }
    }
}
