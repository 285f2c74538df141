//! Metaplectic operators as words in the generators: Fourier transforms,
//! dilations, chirp multiplications and chirp convolutions.
//!
//! Convention: `S^ pi(z) S^{-1} = c pi(S z)` with `pi(x, xi) = M_xi T_x`.
//! Under it the token projections are `FT -> J`, `CHM C -> V_C`,
//! `CHC C -> V_C^T`, `DIL L -> diag(L^{-1}, L^T)` with
//! `DIL L f(t) = |det L|^{1/2} f(L t)`. A word `[T1, T2, .., Tk]` is the
//! operator `T1 T2 .. Tk` (rightmost acts first) and projects to the product
//! of the token projections in written order.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::fft::{centered_raw, dft_axis, for_each_line, idft_axis};
use crate::signal::{hermite, inner, tensor, time_freq_shift, Grid, Signal, C64};
use crate::symplectic::{
    lift_tensor, make_dl, make_j, make_vc, make_vc_t, max_abs, BigSymplecticMat, RMat, SymplecticMat,
};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    Ft,
    FtInv,
    /// Fourier transform in the second half of the variables.
    Ft2,
    Ft2Inv,
    Dilate(RMat),
    ChirpMul(RMat),
    ChirpConv(RMat),
    /// Any symplectic matrix, applied through its factorization.
    FreeBlock(SymplecticMat),
}

impl Token {
    fn check(&self, d: usize) -> Result<()> {
        let square = |m: &RMat| {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimMismatch(format!("token matrix is {}x{}, word has d = {d}", m.nrows(), m.ncols())));
            }
            Ok(())
        };
        match self {
            Token::Ft | Token::FtInv => Ok(()),
            Token::Ft2 | Token::Ft2Inv => {
                if d % 2 != 0 {
                    return Err(Error::DimMismatch("partial Fourier transform needs even d".into()));
                }
                Ok(())
            }
            Token::Dilate(l) => {
                square(l)?;
                if l.determinant().abs() < 1e-14 {
                    return Err(Error::SingularL);
                }
                Ok(())
            }
            Token::ChirpMul(c) | Token::ChirpConv(c) => {
                square(c)?;
                let asym = max_abs(&(c - c.transpose()));
                if asym > 1e-12 * max_abs(c).max(1.0) {
                    return Err(Error::NonSymmetric(asym));
                }
                Ok(())
            }
            Token::FreeBlock(s) => {
                if s.dim() != d {
                    return Err(Error::DimMismatch("free block dimension".into()));
                }
                Ok(())
            }
        }
    }

    /// Symplectic projection of the token.
    pub fn projection(&self, d: usize) -> SymplecticMat {
        match self {
            Token::Ft => make_j(d),
            Token::FtInv => make_j(d).inverse(),
            Token::Ft2 => ft2_projection(d),
            Token::Ft2Inv => ft2_projection(d).inverse(),
            Token::Dilate(l) => make_dl(l).expect("checked"),
            Token::ChirpMul(c) => make_vc(&symmetrize(c)).expect("checked"),
            Token::ChirpConv(c) => make_vc_t(&symmetrize(c)).expect("checked"),
            Token::FreeBlock(s) => s.clone(),
        }
    }

    pub fn inverse(&self) -> Token {
        match self {
            Token::Ft => Token::FtInv,
            Token::FtInv => Token::Ft,
            Token::Ft2 => Token::Ft2Inv,
            Token::Ft2Inv => Token::Ft2,
            Token::Dilate(l) => Token::Dilate(l.clone().try_inverse().expect("checked")),
            Token::ChirpMul(c) => Token::ChirpMul(-c),
            Token::ChirpConv(c) => Token::ChirpConv(-c),
            Token::FreeBlock(s) => Token::FreeBlock(s.inverse()),
        }
    }
}

fn symmetrize(c: &RMat) -> RMat {
    (c + c.transpose()) * 0.5
}

/// Projection of the Fourier transform in the last `d/2` variables.
fn ft2_projection(d: usize) -> SymplecticMat {
    let e = d / 2;
    let mut m = RMat::zeros(2 * d, 2 * d);
    for k in 0..e {
        // first block untouched
        m[(k, k)] = 1.0;
        m[(d + k, d + k)] = 1.0;
        // second block: (y, eta) -> (eta, -y)
        m[(e + k, d + e + k)] = 1.0;
        m[(d + e + k, e + k)] = -1.0;
    }
    SymplecticMat::with_tol(m, 1e-14).expect("partial Fourier projection is symplectic")
}

/// A metaplectic operator as a product of generator tokens, with the
/// product of their projections.
#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    pub d: usize,
    pub tokens: Vec<Token>,
    pub target: SymplecticMat,
}

impl Word {
    pub fn identity(d: usize) -> Word {
        Word { d, tokens: Vec::new(), target: SymplecticMat::identity(d) }
    }

    pub fn from_tokens(d: usize, tokens: Vec<Token>) -> Result<Word> {
        let mut target = SymplecticMat::identity(d);
        for t in &tokens {
            t.check(d)?;
            target = target.mul(&t.projection(d));
        }
        Ok(Word { d, tokens, target })
    }

    /// The operator `self o other`.
    pub fn then_apply(&self, other: &Word) -> Result<Word> {
        if self.d != other.d {
            return Err(Error::DimMismatch("word dimensions differ".into()));
        }
        let mut tokens = self.tokens.clone();
        tokens.extend(other.tokens.iter().cloned());
        Ok(Word { d: self.d, tokens, target: self.target.mul(&other.target) })
    }

    pub fn inverse(&self) -> Word {
        let tokens = self.tokens.iter().rev().map(Token::inverse).collect();
        Word { d: self.d, tokens, target: self.target.inverse() }
    }

    /// Projection recomputed from the tokens.
    pub fn projection(&self) -> SymplecticMat {
        self.tokens.iter().fold(SymplecticMat::identity(self.d), |acc, t| acc.mul(&t.projection(self.d)))
    }

    /// Applies the word to `f`, rightmost token first.
    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        if f.grid.d != self.d {
            return Err(Error::DimMismatch(format!("word has d = {}, signal d = {}", self.d, f.grid.d)));
        }
        if !f.grid.is_self_dual() {
            return Err(Error::BadGrid("metaplectic words need the self-dual step".into()));
        }
        let mut g = f.clone();
        for t in self.tokens.iter().rev() {
            g = apply_token(t, &g)?;
        }
        Ok(g)
    }

    /// Parses the line format (`FT`, `IFT`, `FT2`, `IFT2`, `DIL m`, `CHM m`,
    /// `CHC m`, `FREE m`, with `m` a row-major comma-separated matrix).
    /// Blank lines and `#` comments are ignored; `DIM d` fixes the dimension
    /// when no matrix token determines it.
    pub fn parse(text: &str) -> Result<Word> {
        let mut d: Option<usize> = None;
        let mut pending = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (head, rest) = match line.split_once(char::is_whitespace) {
                Some((h, r)) => (h, r.trim()),
                None => (line, ""),
            };
            let bad = |msg: &str| Error::Format(format!("word line {}: {msg}", no + 1));
            let matrix = |rest: &str, blocks: usize| -> Result<(usize, RMat)> {
                let vals: Vec<f64> = rest
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| bad(&e.to_string()))?;
                let side = (vals.len() as f64).sqrt().round() as usize;
                if side * side != vals.len() || side == 0 || side % blocks != 0 {
                    return Err(bad("matrix entry count is not a square"));
                }
                Ok((side / blocks, RMat::from_row_slice(side, side, &vals)))
            };
            let mut fix = |k: usize| -> Result<()> {
                match d {
                    Some(old) if old != k => Err(bad("inconsistent dimensions")),
                    _ => {
                        d = Some(k);
                        Ok(())
                    }
                }
            };
            let tok = match head {
                "DIM" => {
                    let k = rest.parse::<usize>().map_err(|e| bad(&e.to_string()))?;
                    fix(k)?;
                    continue;
                }
                "FT" => Token::Ft,
                "IFT" => Token::FtInv,
                "FT2" => Token::Ft2,
                "IFT2" => Token::Ft2Inv,
                "DIL" | "CHM" | "CHC" => {
                    let (k, m) = matrix(rest, 1)?;
                    fix(k)?;
                    match head {
                        "DIL" => Token::Dilate(m),
                        "CHM" => Token::ChirpMul(m),
                        _ => Token::ChirpConv(m),
                    }
                }
                "FREE" => {
                    let (k, m) = matrix(rest, 2)?;
                    fix(k)?;
                    Token::FreeBlock(SymplecticMat::new(m)?)
                }
                other => return Err(bad(&format!("unknown token '{other}'"))),
            };
            pending.push(tok);
        }
        Word::from_tokens(d.unwrap_or(1), pending)
    }
}

fn csv(m: &RMat) -> String {
    let mut parts = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            parts.push(format!("{:e}", m[(i, j)]));
        }
    }
    parts.join(",")
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DIM {}", self.d)?;
        for t in &self.tokens {
            match t {
                Token::Ft => writeln!(f, "FT")?,
                Token::FtInv => writeln!(f, "IFT")?,
                Token::Ft2 => writeln!(f, "FT2")?,
                Token::Ft2Inv => writeln!(f, "IFT2")?,
                Token::Dilate(m) => writeln!(f, "DIL {}", csv(m))?,
                Token::ChirpMul(m) => writeln!(f, "CHM {}", csv(m))?,
                Token::ChirpConv(m) => writeln!(f, "CHC {}", csv(m))?,
                Token::FreeBlock(s) => writeln!(f, "FREE {}", csv(s.matrix()))?,
            }
        }
        Ok(())
    }
}

fn apply_token(t: &Token, f: &Signal) -> Result<Signal> {
    let g = f.grid;
    let shape = g.shape();
    let mut v = f.values.clone();
    match t {
        Token::Ft => {
            for axis in 0..g.d {
                dft_axis(&mut v, &shape, axis, g.h);
            }
        }
        Token::FtInv => {
            for axis in 0..g.d {
                idft_axis(&mut v, &shape, axis, g.h);
            }
        }
        Token::Ft2 | Token::Ft2Inv => {
            for axis in g.d / 2..g.d {
                if *t == Token::Ft2 {
                    dft_axis(&mut v, &shape, axis, g.h);
                } else {
                    idft_axis(&mut v, &shape, axis, g.h);
                }
            }
        }
        Token::ChirpMul(c) => chirp(&mut v, g, c, 1.0),
        Token::ChirpConv(c) => {
            for axis in 0..g.d {
                dft_axis(&mut v, &shape, axis, g.h);
            }
            chirp(&mut v, g, c, -1.0);
            for axis in 0..g.d {
                idft_axis(&mut v, &shape, axis, g.h);
            }
        }
        Token::Dilate(l) => return dilate(f, l),
        Token::FreeBlock(s) => return factor_symplectic(s)?.apply(f),
    }
    Ok(Signal { grid: g, values: v })
}

/// Multiplies by `exp(sign i pi t.C t)`.
fn chirp(v: &mut [C64], g: Grid, c: &RMat, sign: f64) {
    for (i, val) in v.iter_mut().enumerate() {
        let t = coords(g, i);
        let mut q = 0.0;
        for a in 0..g.d {
            for b in 0..g.d {
                q += t[a] * c[(a, b)] * t[b];
            }
        }
        *val *= C64::from_polar(1.0, sign * PI * q);
    }
}

fn coords(g: Grid, i: usize) -> [f64; 2] {
    match g.d {
        1 => [g.x(i), 0.0],
        _ => [g.x(i / g.n), g.x(i % g.n)],
    }
}

/// Smallest `m <= 4` with `2^m L` integral.
fn dyadic_order(l: &RMat) -> Option<u32> {
    (0..=4).find(|&m| {
        let s = (1u32 << m) as f64;
        l.iter().all(|v| ((v * s) - (v * s).round()).abs() < 1e-12)
    })
}

/// Trigonometric (band-limited) upsampling by `r` along every axis; the
/// Nyquist bin is split evenly between the two band edges.
pub fn upsample(f: &Signal, r: usize) -> Signal {
    let g = f.grid;
    if r == 1 {
        return f.clone();
    }
    let n = g.n;
    let nf = n * r;
    let mut data = f.values.clone();
    let mut shape = g.shape();
    for axis in 0..g.d {
        // centered spectrum along this axis
        for_each_line(&mut data, &shape, axis, |line| centered_raw(line, false));
        let mut new_shape = shape.clone();
        new_shape[axis] = nf;
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let mut out = vec![ZERO; new_shape.iter().product()];
        let off = (nf - n) / 2;
        for o in 0..outer {
            for i in 0..inner {
                for k in 0..n {
                    let v = data[(o * n + k) * inner + i];
                    if k == 0 {
                        out[(o * nf + off) * inner + i] = v * 0.5;
                        out[(o * nf + off + n) * inner + i] = v * 0.5;
                    } else {
                        out[(o * nf + off + k) * inner + i] = v;
                    }
                }
            }
        }
        for_each_line(&mut out, &new_shape, axis, |line| centered_raw(line, true));
        let scale = 1.0 / n as f64;
        for v in out.iter_mut() {
            *v *= scale;
        }
        data = out;
        shape = new_shape;
    }
    Signal { grid: Grid { d: g.d, n: nf, h: g.h / r as f64 }, values: data }
}

/// Band-limited evaluation of `f` at an arbitrary point (grid units of `h`
/// relative to the center); zero outside the periodic box.
pub struct Interpolator {
    grid: Grid,
    spec: Vec<C64>,
}

impl Interpolator {
    pub fn new(f: &Signal) -> Interpolator {
        let g = f.grid;
        let mut spec = f.values.clone();
        let shape = g.shape();
        for axis in 0..g.d {
            for_each_line(&mut spec, &shape, axis, |line| centered_raw(line, false));
        }
        let scale = 1.0 / (g.n as f64).powi(g.d as i32);
        for v in spec.iter_mut() {
            *v *= scale;
        }
        Interpolator { grid: g, spec }
    }

    fn basis(&self, u: f64) -> Vec<C64> {
        let n = self.grid.n;
        (0..n)
            .map(|k| {
                let nu = (k as f64 - (n / 2) as f64) / n as f64;
                if k == 0 {
                    C64::new((2.0 * PI * nu * u).cos(), 0.0)
                } else {
                    C64::from_polar(1.0, 2.0 * PI * nu * u)
                }
            })
            .collect()
    }

    /// Value at `u` given in units of `h` (so lattice points are `j - n/2`).
    pub fn eval(&self, u: &[f64]) -> C64 {
        let n = self.grid.n;
        if u.iter().any(|&x| x.abs() >= (n / 2) as f64) {
            return ZERO;
        }
        match self.grid.d {
            1 => self.basis(u[0]).iter().zip(&self.spec).map(|(b, s)| b * s).sum(),
            _ => {
                let b0 = self.basis(u[0]);
                let b1 = self.basis(u[1]);
                let mut acc = ZERO;
                for k0 in 0..n {
                    let row: C64 = b1.iter().zip(&self.spec[k0 * n..(k0 + 1) * n]).map(|(b, s)| b * s).sum();
                    acc += b0[k0] * row;
                }
                acc
            }
        }
    }
}

/// `f(t) -> |det L|^{1/2} f(L t)`, zero where `L t` leaves the box.
fn dilate(f: &Signal, l: &RMat) -> Result<Signal> {
    let g = f.grid;
    let d = g.d;
    let det = l.determinant().abs();
    if det < 1e-14 {
        return Err(Error::SingularL);
    }
    let amp = det.sqrt();
    let n = g.n as i64;
    let mut out = vec![ZERO; g.len()];
    if let Some(m) = dyadic_order(l) {
        let r = 1usize << m;
        let fine = upsample(f, r);
        let nf = n * r as i64;
        let lr: Vec<i64> = l.iter().map(|v| (v * r as f64).round() as i64).collect();
        // nalgebra storage is column-major: lr[a + b*d] = L[(a, b)]
        for (i, o) in out.iter_mut().enumerate() {
            let j: Vec<i64> = match d {
                1 => vec![i as i64 - n / 2],
                _ => vec![(i / g.n) as i64 - n / 2, (i % g.n) as i64 - n / 2],
            };
            let mut idx = 0usize;
            let mut inside = true;
            for a in 0..d {
                let u: i64 = (0..d).map(|b| lr[a + b * d] * j[b]).sum::<i64>() + nf / 2;
                if u < 0 || u >= nf {
                    inside = false;
                    break;
                }
                idx = idx * nf as usize + u as usize;
            }
            if inside {
                *o = fine.values[idx] * amp;
            }
        }
    } else {
        let interp = Interpolator::new(f);
        for (i, o) in out.iter_mut().enumerate() {
            let j: Vec<f64> = match d {
                1 => vec![i as f64 - (g.n / 2) as f64],
                _ => vec![(i / g.n) as f64 - (g.n / 2) as f64, (i % g.n) as f64 - (g.n / 2) as f64],
            };
            let u: Vec<f64> = (0..d).map(|a| (0..d).map(|b| l[(a, b)] * j[b]).sum()).collect();
            *o = interp.eval(&u) * amp;
        }
    }
    Ok(Signal { grid: g, values: out })
}

fn clean(tokens: Vec<Token>) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| match t {
            Token::ChirpMul(c) | Token::ChirpConv(c) => max_abs(c) > 1e-15,
            Token::Dilate(l) => max_abs(&(l - RMat::identity(l.nrows(), l.ncols()))) > 1e-15,
            _ => true,
        })
        .collect()
}

/// Word realizing the free integral
/// `S^ f(x) = int e^{2 pi i Phi(x, eta)} f^(eta) d eta` (up to a constant),
/// `Phi = x.CA^{-1}x/2 + eta.A^{-1}x - eta.A^{-1}B eta/2`; needs `det A != 0`.
fn free_word(s: &SymplecticMat) -> Option<Vec<Token>> {
    let a = s.a();
    if a.determinant().abs() < 1e-10 {
        return None;
    }
    let ai = a.try_inverse()?;
    let p = symmetrize(&(s.c() * &ai));
    let r = symmetrize(&(&ai * s.b()));
    Some(clean(vec![Token::ChirpMul(p), Token::Dilate(ai), Token::ChirpConv(r)]))
}

/// Factors `S` into chirps, a dilation and (when the upper-left block is
/// singular) a trailing chirp from the scan `tau = 0, 1, .., d`.
pub fn factor_symplectic(s: &SymplecticMat) -> Result<Word> {
    let d = s.dim();
    for tau in 0..=d {
        let vt = make_vc(&(RMat::identity(d, d) * tau as f64))?;
        let shifted = s.mul(&vt);
        if let Some(mut tokens) = free_word(&shifted) {
            if tau > 0 {
                tokens.push(Token::ChirpMul(RMat::identity(d, d) * -(tau as f64)));
            }
            return Word::from_tokens(d, tokens).map(|w| Word { target: s.clone(), ..w });
        }
    }
    Err(Error::FactorizationFailed(d))
}

/// Chirp-only factorization for d = 1: a power of `J` followed by
/// `CHM p, CHC B, CHM q` (or a chirp and a dilation when `B = 0`). The power
/// of `J` is chosen to keep the chirp rates small, which keeps the sampled
/// chirps far from aliasing. Falls back to [`factor_symplectic`] for d > 1.
pub fn factor_symplectic_stable(s: &SymplecticMat) -> Result<Word> {
    if s.dim() != 1 {
        return factor_symplectic(s);
    }
    let m1 = |x: f64| RMat::from_element(1, 1, x);
    let mut best: Option<(f64, Vec<Token>)> = None;
    let mut jk = SymplecticMat::identity(1);
    let jinv = make_j(1).inverse();
    for k in 0..4 {
        // s = J^k r
        let r = jk.mul(s);
        let (a, b, c, dd) = (r.a()[(0, 0)], r.b()[(0, 0)], r.c()[(0, 0)], r.d_block()[(0, 0)]);
        let (cost, tail) = if b.abs() > 1e-12 {
            let p = (dd - 1.0) / b;
            let q = (a - 1.0) / b;
            (p.abs().max(q.abs()).max(b.abs()), vec![Token::ChirpMul(m1(p)), Token::ChirpConv(m1(b)), Token::ChirpMul(m1(q))])
        } else {
            let cost = (c / a).abs().max(a.abs().log2().abs());
            (cost, vec![Token::ChirpMul(m1(c / a)), Token::Dilate(m1(1.0 / a))])
        };
        let mut tokens = match k {
            0 => vec![],
            1 => vec![Token::Ft],
            2 => vec![Token::Ft, Token::Ft],
            _ => vec![Token::FtInv],
        };
        tokens.extend(clean(tail));
        if best.as_ref().is_none_or(|(c0, _)| cost < *c0 - 1e-12) {
            best = Some((cost, tokens));
        }
        jk = jk.mul(&jinv);
    }
    let tokens = best.expect("four candidates").1;
    Word::from_tokens(1, tokens).map(|w| Word { target: s.clone(), ..w })
}

/// Signals used to probe covariance: Hermite functions `k <= 4` (tensor
/// products for d = 2).
fn probe_battery(grid: Grid) -> Result<Vec<Signal>> {
    let g1 = grid.with_dim(1)?;
    let hs: Vec<Signal> = (0..=4).map(|k| hermite(g1, k)).collect::<Result<_>>()?;
    if grid.d == 1 {
        return Ok(hs);
    }
    let mut out = Vec::new();
    for j in 0..=2 {
        for k in 0..=2 {
            out.push(tensor(&hs[j], &hs[k])?);
        }
    }
    Ok(out)
}

/// `min_c || S^ pi(z) f - c pi(S z) S^ f || / ||f||`, maximized over the
/// Hermite battery. Both `z` and `S z` must lie on the lattice.
pub fn covariance_defect(word: &Word, grid: Grid, x0: &[f64], xi0: &[f64]) -> Result<f64> {
    let d = word.d;
    let mut z = x0.to_vec();
    z.extend_from_slice(xi0);
    let sz = word.target.apply(&z);
    let mut worst: f64 = 0.0;
    for f in probe_battery(grid.with_dim(d)?)? {
        let lhs = word.apply(&time_freq_shift(&f, x0, xi0)?)?;
        let rhs = time_freq_shift(&word.apply(&f)?, &sz[..d], &sz[d..])?;
        worst = worst.max(phase_fit_residual(&lhs, &rhs)? / f.norm());
    }
    Ok(worst)
}

/// `min_{|c| = 1} || a - c b ||`.
pub fn phase_fit_residual(a: &Signal, b: &Signal) -> Result<f64> {
    let c = phase_fit(a, b)?;
    Ok(a.sub(&b.scaled(c))?.norm())
}

/// Optimal unimodular `c` with `a ~ c b`.
pub fn phase_fit(a: &Signal, b: &Signal) -> Result<C64> {
    let ip = inner(b, a)?;
    if ip.norm() == 0.0 {
        return Ok(C64::new(1.0, 0.0));
    }
    Ok(ip / ip.norm())
}

/// Applies `w1` in the first variable and `w2` in the second of a
/// doubled-grid signal.
pub fn apply_tensor(w1: &Word, w2: &Word, f: &Signal) -> Result<Signal> {
    if w1.d != 1 || w2.d != 1 || f.grid.d != 2 {
        return Err(Error::DimMismatch("tensor application needs d = 1 words on a d = 2 signal".into()));
    }
    let g1 = f.grid.with_dim(1)?;
    let n = g1.n;
    let mut v = f.values.clone();
    let mut err = None;
    for (axis, w) in [(0usize, w1), (1, w2)] {
        for_each_line(&mut v, &[n, n], axis, |line| {
            match w.apply(&Signal { grid: g1, values: line.to_vec() }) {
                Ok(s) => line.copy_from_slice(&s.values),
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err.take() {
            return Err(e);
        }
    }
    Ok(Signal { grid: f.grid, values: v })
}

/// Projection of the tensor application.
pub fn tensor_projection(w1: &Word, w2: &Word) -> Result<BigSymplecticMat> {
    lift_tensor(&w1.target, &w2.target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{coherent_state, gaussian};
    use crate::transforms::dft;

    fn m1(x: f64) -> RMat {
        RMat::from_element(1, 1, x)
    }

    #[test]
    fn single_tokens() {
        let g = Grid::new(1, 64).unwrap();
        let phi = gaussian(g);
        let ft = Word::from_tokens(1, vec![Token::Ft]).unwrap();
        assert!(ft.apply(&phi).unwrap().sub(&phi).unwrap().norm() < 1e-10);
        let zero = Word::from_tokens(1, vec![Token::ChirpMul(m1(0.0))]).unwrap();
        assert_eq!(zero.apply(&phi).unwrap(), phi);
        let dil = Word::from_tokens(1, vec![Token::Dilate(m1(2.0))]).unwrap();
        let out = dil.apply(&phi).unwrap();
        for j in 0..64 {
            let t = g.x(j);
            assert!((out.values[j].re - 2f64.sqrt() * (-4.0 * PI * t * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn dilations_by_off_lattice_factors() {
        let g = Grid::new(1, 128).unwrap();
        let phi = gaussian(g);
        for l in [0.5, 0.75, 1.5, 1.0 / 3.0] {
            let w = Word::from_tokens(1, vec![Token::Dilate(m1(l))]).unwrap();
            let out = w.apply(&phi).unwrap();
            let want = Signal::from_fn(g, |t| C64::new(l.sqrt() * (-PI * (l * t[0]).powi(2)).exp(), 0.0));
            assert!(out.sub(&want).unwrap().norm() < 1e-9, "L = {l}");
        }
    }

    #[test]
    fn chirp_conv_is_conjugated_chirp() {
        let g = Grid::new(1, 64).unwrap();
        let f = coherent_state(g, 0.5, -0.25);
        let w = Word::from_tokens(1, vec![Token::ChirpConv(m1(0.3))]).unwrap();
        let v = Word::from_tokens(1, vec![Token::FtInv, Token::ChirpMul(m1(-0.3)), Token::Ft]).unwrap();
        assert!(w.apply(&f).unwrap().sub(&v.apply(&f).unwrap()).unwrap().norm() < 1e-12);
        assert!((w.target.matrix() - v.target.matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn factorization_of_j_is_the_fourier_transform() {
        let g = Grid::new(1, 64).unwrap();
        let w = factor_symplectic(&make_j(1)).unwrap();
        assert!(w.tokens.iter().all(|t| matches!(t, Token::ChirpMul(_) | Token::ChirpConv(_))));
        assert!((w.projection().matrix() - make_j(1).matrix()).abs().max() < 1e-12);
        let f = coherent_state(g, 0.5, 0.75);
        let a = w.apply(&f).unwrap();
        let b = dft(&f);
        assert!(phase_fit_residual(&a, &b).unwrap() < 1e-8);
        let phi = gaussian(g);
        assert!(phase_fit_residual(&w.apply(&phi).unwrap(), &phi).unwrap() < 1e-8);
    }

    #[test]
    fn identity_and_dilation_factor_trivially() {
        assert!(factor_symplectic(&SymplecticMat::identity(1)).unwrap().tokens.is_empty());
        let dl = make_dl(&m1(2.0)).unwrap();
        let w = factor_symplectic(&dl).unwrap();
        assert_eq!(w.tokens.len(), 1);
        assert!(matches!(w.tokens[0], Token::Dilate(_)));
    }

    #[test]
    fn covariance_of_generators() {
        let g = Grid::new(1, 64).unwrap();
        let (h, eta) = (g.h, g.dual_step());
        for w in [
            Word::identity(1),
            Word::from_tokens(1, vec![Token::Ft]).unwrap(),
            Word::from_tokens(1, vec![Token::ChirpMul(m1(1.0))]).unwrap(),
            Word::from_tokens(1, vec![Token::ChirpConv(m1(-1.0))]).unwrap(),
        ] {
            for (a, b) in [(0, 0), (2, 0), (0, 3), (-2, 1)] {
                let defect = covariance_defect(&w, g, &[a as f64 * h], &[b as f64 * eta]).unwrap();
                assert!(defect < 1e-8, "{w} ({a},{b}) {defect}");
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let w = Word::from_tokens(
            2,
            vec![Token::Ft2, Token::Dilate(RMat::from_row_slice(2, 2, &[1.0, 0.5, 1.0, -0.5])), Token::Ft],
        )
        .unwrap();
        let back = Word::parse(&w.to_string()).unwrap();
        assert_eq!(back, w);
        assert!(Word::parse("FT\nBOGUS\n").is_err());
        assert!(matches!(Word::parse("CHM 1,2,3,4"), Err(Error::NonSymmetric(_))));
    }

    #[test]
    fn stable_factorization_of_rotations() {
        let g = Grid::new(1, 48).unwrap();
        let f = coherent_state(g, 0.5, -0.5);
        for theta in [0.0, 0.3, PI / 4.0, PI / 3.0, PI / 2.0, 2.0, -2.5] {
            let (c, s) = (f64::cos(theta), f64::sin(theta));
            let rot = SymplecticMat::new(RMat::from_row_slice(2, 2, &[c, s, -s, c])).unwrap();
            let w = factor_symplectic_stable(&rot).unwrap();
            assert!((w.projection().matrix() - rot.matrix()).abs().max() < 1e-12);
            // unitary on a well-sampled state
            assert!((w.apply(&f).unwrap().norm() - 1.0).abs() < 1e-10, "theta {theta}");
        }
    }
}
