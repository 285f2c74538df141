//! Centered grids, sampled signals, phase-space fields and the basic
//! test-signal constructors.

use std::f64::consts::PI;

use crate::error::{Error, Result};
pub use crate::fft::C64;

/// Centered lattice `x_j = (j - n/2) h` per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    /// Self-dual grid, `h = 1/sqrt(n)`.
    pub fn new(d: usize, n: usize) -> Result<Grid> {
        Grid::with_step(d, n, 1.0 / (n as f64).sqrt())
    }

    pub fn with_step(d: usize, n: usize, h: f64) -> Result<Grid> {
        if d == 0 || d > 2 {
            return Err(Error::BadGrid(format!("dimension {d} not in 1..=2")));
        }
        if n < 2 || n % 2 != 0 {
            return Err(Error::BadGrid(format!("n = {n} must be even and >= 2")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::BadGrid(format!("step {h} must be positive")));
        }
        Ok(Grid { d, n, h })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.h
    }

    pub fn dual_step(&self) -> f64 {
        1.0 / (self.n as f64 * self.h)
    }

    pub fn xi(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dual_step()
    }

    /// Side length `n h` of the periodic box.
    pub fn box_len(&self) -> f64 {
        self.n as f64 * self.h
    }

    pub fn cell(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn is_self_dual(&self) -> bool {
        ((self.h * self.h * self.n as f64) - 1.0).abs() < 1e-12
    }

    pub fn with_dim(&self, d: usize) -> Result<Grid> {
        Grid::with_step(d, self.n, self.h)
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }

    pub fn axis(&self) -> Axis {
        Axis::centered(self.n, self.h)
    }

    pub fn dual_axis(&self) -> Axis {
        Axis::centered(self.n, self.dual_step())
    }
}

/// Samples of a function on a [`Grid`], row-major over the axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    pub grid: Grid,
    pub values: Vec<C64>,
}

impl Signal {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Signal> {
        if values.len() != grid.len() {
            return Err(Error::DimMismatch(format!("{} samples for a grid of {}", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Format("non-finite sample".into()));
        }
        Ok(Signal { grid, values })
    }

    pub fn zeros(grid: Grid) -> Signal {
        Signal { grid, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f` at every lattice point (coordinates passed per axis).
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> C64) -> Signal {
        let mut values = Vec::with_capacity(grid.len());
        match grid.d {
            1 => {
                for j in 0..grid.n {
                    values.push(f(&[grid.x(j)]));
                }
            }
            _ => {
                for j in 0..grid.n {
                    for k in 0..grid.n {
                        values.push(f(&[grid.x(j), grid.x(k)]));
                    }
                }
            }
        }
        Signal { grid, values }
    }

    pub fn one_hot(grid: Grid, index: usize) -> Signal {
        let mut s = Signal::zeros(grid);
        s.values[index] = C64::new(1.0, 0.0);
        s
    }

    pub fn norm(&self) -> f64 {
        (self.grid.cell() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn normalized(&self) -> Signal {
        self.scaled(C64::new(1.0 / self.norm(), 0.0))
    }

    pub fn scaled(&self, c: C64) -> Signal {
        Signal { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn conj(&self) -> Signal {
        Signal { grid: self.grid, values: self.values.iter().map(|v| v.conj()).collect() }
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Signal { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Signal { grid: self.grid, values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    /// Fraction of the squared norm outside the central half of the box.
    pub fn mass_outside_central_half(&self) -> f64 {
        let quarter = self.grid.box_len() / 4.0;
        let n = self.grid.n;
        let mut out = 0.0;
        let mut total = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let idx: Vec<usize> = if self.grid.d == 1 { vec![i] } else { vec![i / n, i % n] };
            let inside = idx.iter().all(|&j| self.grid.x(j).abs() < quarter);
            total += v.norm_sqr();
            if !inside {
                out += v.norm_sqr();
            }
        }
        if total == 0.0 {
            0.0
        } else {
            out / total
        }
    }
}

/// `exp(-pi |t|^2)`, not normalized.
pub fn gaussian(grid: Grid) -> Signal {
    Signal::from_fn(grid, |t| C64::new((-PI * t.iter().map(|x| x * x).sum::<f64>()).exp(), 0.0))
}

/// `k`-th Hermite function (eigenfunction of the Fourier transform with
/// eigenvalue `(-i)^k`), normalized by quadrature.
pub fn hermite(grid: Grid, k: usize) -> Result<Signal> {
    if grid.d != 1 {
        return Err(Error::DimMismatch("hermite needs d = 1".into()));
    }
    if k > grid.n / 4 {
        return Err(Error::OrderTooHigh { k, n: grid.n });
    }
    let s = Signal::from_fn(grid, |t| C64::new(hermite_value(k, t[0]), 0.0));
    Ok(s.normalized())
}

/// Analytic L2-normalized Hermite function `h_k(x)` for the `exp(-pi x^2)` scaling.
pub fn hermite_value(k: usize, x: f64) -> f64 {
    let y = (2.0 * PI).sqrt() * x;
    let scale = (2.0 * PI).powf(0.25);
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * y * y).exp();
    for j in 0..k {
        let next = (2.0 / (j as f64 + 1.0)).sqrt() * y * cur - (j as f64 / (j as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    scale * cur
}

/// `pi(x0, xi0) phi` for the Gaussian `phi`, evaluated analytically and
/// normalized by quadrature. Centers need not lie on the lattice.
pub fn coherent_state(grid: Grid, x0: f64, xi0: f64) -> Signal {
    let s = Signal::from_fn(grid, |t| {
        let u = t[0] - x0;
        C64::from_polar((-PI * u * u).exp(), 2.0 * PI * xi0 * t[0])
    });
    s.normalized()
}

/// `<f, g> = h^d sum conj(f) g`.
pub fn inner(f: &Signal, g: &Signal) -> Result<C64> {
    f.grid.ensure_same(&g.grid)?;
    let s: C64 = f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * f.grid.cell())
}

/// `(f (x) g)(x, y) = f(x) g(y)` on the doubled grid.
pub fn tensor(f: &Signal, g: &Signal) -> Result<Signal> {
    f.grid.ensure_same(&g.grid)?;
    if f.grid.d != 1 {
        return Err(Error::DimMismatch("tensor of d = 1 signals only".into()));
    }
    let grid = f.grid.with_dim(2)?;
    let mut values = Vec::with_capacity(grid.len());
    for a in &f.values {
        for b in &g.values {
            values.push(a * b);
        }
    }
    Ok(Signal { grid, values })
}

fn lattice_index(value: f64, step: f64, what: &str) -> Result<i64> {
    let q = value / step;
    let r = q.round();
    if (q - r).abs() > 1e-9 {
        return Err(Error::OffLattice(format!("{what} = {value} is not a multiple of {step}")));
    }
    Ok(r as i64)
}

/// `pi(x0, xi0) f = M_xi0 T_x0 f` with circular translation. Both shifts must
/// lie on their lattices.
pub fn time_freq_shift(f: &Signal, x0: &[f64], xi0: &[f64]) -> Result<Signal> {
    let g = f.grid;
    if x0.len() != g.d || xi0.len() != g.d {
        return Err(Error::DimMismatch("shift dimension".into()));
    }
    let n = g.n as i64;
    let shifts: Vec<i64> = x0.iter().map(|&x| lattice_index(x, g.h, "x0")).collect::<Result<_>>()?;
    for &xi in xi0 {
        lattice_index(xi, g.dual_step(), "xi0")?;
    }
    let wrap = |j: i64| (((j % n) + n) % n) as usize;
    let mut values = vec![C64::new(0.0, 0.0); g.len()];
    match g.d {
        1 => {
            for j in 0..g.n {
                let src = wrap(j as i64 - shifts[0]);
                values[j] = f.values[src] * C64::from_polar(1.0, 2.0 * PI * xi0[0] * g.x(j));
            }
        }
        _ => {
            for j in 0..g.n {
                for k in 0..g.n {
                    let src = wrap(j as i64 - shifts[0]) * g.n + wrap(k as i64 - shifts[1]);
                    let ph = 2.0 * PI * (xi0[0] * g.x(j) + xi0[1] * g.x(k));
                    values[j * g.n + k] = f.values[src] * C64::from_polar(1.0, ph);
                }
            }
        }
    }
    Ok(Signal { grid: g, values })
}

/// One lattice axis: coordinate `origin + i * step`, `i < len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub len: usize,
    pub step: f64,
    pub origin: f64,
}

impl Axis {
    pub fn centered(len: usize, step: f64) -> Axis {
        Axis { len, step, origin: -((len / 2) as f64) * step }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    /// Period of the axis when treated as circular.
    pub fn period(&self) -> f64 {
        self.len as f64 * self.step
    }

    fn close(&self, other: &Axis) -> bool {
        self.len == other.len
            && (self.step - other.step).abs() <= 1e-12 * self.step.abs()
            && (self.origin - other.origin).abs() <= 1e-12 * self.step.abs().max(self.origin.abs())
    }
}

/// Complex values on a phase-space lattice: position axes first, then
/// frequency axes, row-major.
///
/// The Wigner lattice has `2n` midpoints of step `h/2` and `n/2` frequencies
/// of step `1/(n h)`; it is antiperiodic in frequency (`antiperiodic` flag).
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseField {
    pub grid: Grid,
    pub x_axes: Vec<Axis>,
    pub xi_axes: Vec<Axis>,
    pub antiperiodic: bool,
    pub values: Vec<C64>,
}

impl PhaseField {
    pub fn zeros(grid: Grid, x_axes: Vec<Axis>, xi_axes: Vec<Axis>, antiperiodic: bool) -> PhaseField {
        let len: usize = x_axes.iter().chain(&xi_axes).map(|a| a.len).product();
        PhaseField { grid, x_axes, xi_axes, antiperiodic, values: vec![C64::new(0.0, 0.0); len] }
    }

    /// The lattice carrying STFTs, Rihaczek distributions and symbols.
    pub fn stft_lattice(grid: Grid) -> PhaseField {
        let xs = vec![grid.axis(); grid.d];
        let xis = vec![grid.dual_axis(); grid.d];
        PhaseField::zeros(grid, xs, xis, false)
    }

    /// The half-step Wigner lattice (d = 1).
    pub fn wigner_lattice(grid: Grid) -> PhaseField {
        let x = Axis::centered(2 * grid.n, grid.h / 2.0);
        let xi = Axis::centered(grid.n / 2, grid.dual_step());
        PhaseField::zeros(grid, vec![x], vec![xi], true)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.x_axes.iter().chain(&self.xi_axes).map(|a| a.len).collect()
    }

    pub fn freq_step(&self) -> f64 {
        self.xi_axes[0].step
    }

    pub fn x_step(&self) -> f64 {
        self.x_axes[0].step
    }

    /// Phase-space cell measure (product of all axis steps).
    pub fn cell(&self) -> f64 {
        self.x_axes.iter().chain(&self.xi_axes).map(|a| a.step).product()
    }

    pub fn same_lattice(&self, other: &PhaseField) -> bool {
        self.x_axes.len() == other.x_axes.len()
            && self.xi_axes.len() == other.xi_axes.len()
            && self.x_axes.iter().zip(&other.x_axes).all(|(a, b)| a.close(b))
            && self.xi_axes.iter().zip(&other.xi_axes).all(|(a, b)| a.close(b))
            && self.antiperiodic == other.antiperiodic
    }

    pub fn ensure_same_lattice(&self, other: &PhaseField) -> Result<()> {
        if !self.same_lattice(other) {
            return Err(Error::LatticeMismatch("phase-space lattices differ".into()));
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        (self.cell() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn sub(&self, other: &PhaseField) -> Result<PhaseField> {
        self.ensure_same_lattice(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        Ok(out)
    }

    pub fn scaled(&self, c: C64) -> PhaseField {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= c;
        }
        out
    }

    /// Coordinates of the (x, xi) point at flat index `i` (d = 1 fields).
    pub fn point(&self, i: usize) -> (f64, f64) {
        let m = self.xi_axes[0].len;
        (self.x_axes[0].coord(i / m), self.xi_axes[0].coord(i % m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_norm_and_peak() {
        for d in [1, 2] {
            let g = Grid::new(d, 64).unwrap();
            let phi = gaussian(g);
            let center = if d == 1 { 32 } else { 32 * 64 + 32 };
            assert_eq!(phi.values[center], C64::new(1.0, 0.0));
            let expect = 2f64.powf(-(d as f64) / 2.0);
            assert!((phi.norm().powi(2) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_orthonormal() {
        let g = Grid::new(1, 64).unwrap();
        let hs: Vec<Signal> = (0..=6).map(|k| hermite(g, k).unwrap()).collect();
        for (j, a) in hs.iter().enumerate() {
            for (k, b) in hs.iter().enumerate() {
                let ip = inner(a, b).unwrap();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((ip - C64::new(expect, 0.0)).norm() < 1e-10, "{j} {k} {ip}");
            }
        }
        assert!(matches!(hermite(g, 17), Err(Error::OrderTooHigh { .. })));
        // h_0 is the normalized Gaussian
        let phi = gaussian(g).normalized();
        assert!(phi.sub(&hs[0]).unwrap().norm() < 1e-12);
    }

    #[test]
    fn tensor_norm_factorizes() {
        let g = Grid::new(1, 32).unwrap();
        let f = hermite(g, 2).unwrap().scaled(C64::new(0.5, 0.2));
        let h = coherent_state(g, 0.3, -0.4);
        let t = tensor(&f, &h.conj()).unwrap();
        assert!((t.norm() - f.norm() * h.norm()).abs() < 1e-12);
        assert_eq!(t.grid.d, 2);
    }

    #[test]
    fn shifts() {
        let g = Grid::new(1, 32).unwrap();
        let f = hermite(g, 1).unwrap();
        assert_eq!(time_freq_shift(&f, &[0.0], &[0.0]).unwrap(), f);
        let s = time_freq_shift(&f, &[3.0 * g.h], &[2.0 * g.dual_step()]).unwrap();
        assert!((s.norm() - f.norm()).abs() < 1e-12);
        assert!(matches!(time_freq_shift(&f, &[0.5 * g.h], &[0.0]), Err(Error::OffLattice(_))));
        // shifts compose additively
        let a = time_freq_shift(&time_freq_shift(&f, &[2.0 * g.h], &[0.0]).unwrap(), &[3.0 * g.h], &[0.0]).unwrap();
        let b = time_freq_shift(&f, &[5.0 * g.h], &[0.0]).unwrap();
        assert!(a.sub(&b).unwrap().norm() < 1e-14);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(1, 7).is_err());
        assert!(Grid::new(3, 8).is_err());
        assert!(Grid::with_step(1, 8, -1.0).is_err());
        assert!(Grid::new(1, 64).unwrap().is_self_dual());
    }
}
