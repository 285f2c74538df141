//! Symplectic and Hamiltonian matrices, generators, flows and the 4d x 4d
//! projections behind metaplectic Wigner distributions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;

/// Flow normalization constant: the classical flow is `exp(t S / OMEGA)`.
pub const OMEGA: f64 = 2.0 * std::f64::consts::PI;

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `J` as a plain matrix.
pub fn j_matrix(d: usize) -> RMat {
    let mut j = RMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

fn symplectic_defect(m: &RMat) -> f64 {
    let d = m.nrows() / 2;
    let j = j_matrix(d);
    max_abs(&(m.transpose() * &j * m - j))
}

fn default_tol(m: &RMat) -> f64 {
    let s = max_abs(m);
    1e-12 * s.max(1.0).powi(2)
}

/// `true` iff `|M^T J M - J|_max <= tol`.
pub fn is_symplectic(m: &RMat, tol: f64) -> Result<bool> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() % 2 != 0 {
        return Err(Error::OddDimension(m.nrows()));
    }
    Ok(symplectic_defect(m) <= tol)
}

/// A verified element of Sp(d).
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMat {
    d: usize,
    m: RMat,
}

impl SymplecticMat {
    /// Validates `S^T J S = J` to `1e-12 * max(1, |S|_max^2)`.
    pub fn new(m: RMat) -> Result<Self> {
        let tol = default_tol(&m);
        Self::with_tol(m, tol)
    }

    pub fn with_tol(m: RMat, tol: f64) -> Result<Self> {
        if !is_symplectic(&m, tol)? {
            return Err(Error::NotSymplectic(symplectic_defect(&m)));
        }
        let d = m.nrows() / 2;
        let s = SymplecticMat { d, m };
        // the block relations are implied by S^T J S = J but are cheap to confirm
        let (a, b, c, dd) = (s.a(), s.b(), s.c(), s.d_block());
        let r1 = max_abs(&(a.transpose() * &c - c.transpose() * &a));
        let r2 = max_abs(&(b.transpose() * &dd - dd.transpose() * &b));
        let r3 = max_abs(&(a.transpose() * &dd - c.transpose() * &b - RMat::identity(d, d)));
        let worst = r1.max(r2).max(r3);
        if worst > tol {
            return Err(Error::NotSymplectic(worst));
        }
        Ok(s)
    }

    /// Wraps a matrix known to be symplectic up to roundoff (products, inverses).
    pub(crate) fn trusted(m: RMat) -> Self {
        let d = m.nrows() / 2;
        SymplecticMat { d, m }
    }

    pub fn from_blocks(a: &RMat, b: &RMat, c: &RMat, d: &RMat) -> Result<Self> {
        let n = a.nrows();
        let mut m = RMat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        m.view_mut((0, n), (n, n)).copy_from(b);
        m.view_mut((n, 0), (n, n)).copy_from(c);
        m.view_mut((n, n), (n, n)).copy_from(d);
        Self::new(m)
    }

    pub fn identity(d: usize) -> Self {
        SymplecticMat { d, m: RMat::identity(2 * d, 2 * d) }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &RMat {
        &self.m
    }

    fn block(&self, r: usize, c: usize) -> RMat {
        self.m.view((r * self.d, c * self.d), (self.d, self.d)).into_owned()
    }

    pub fn a(&self) -> RMat {
        self.block(0, 0)
    }
    pub fn b(&self) -> RMat {
        self.block(0, 1)
    }
    pub fn c(&self) -> RMat {
        self.block(1, 0)
    }
    pub fn d_block(&self) -> RMat {
        self.block(1, 1)
    }

    pub fn mul(&self, other: &SymplecticMat) -> SymplecticMat {
        SymplecticMat::trusted(&self.m * &other.m)
    }

    /// `S^{-1} = [[D^T, -B^T], [-C^T, A^T]]`, exact.
    pub fn inverse(&self) -> SymplecticMat {
        let (a, b, c, d) = (self.a(), self.b(), self.c(), self.d_block());
        let n = self.d;
        let mut m = RMat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(&d.transpose());
        m.view_mut((0, n), (n, n)).copy_from(&(-b.transpose()));
        m.view_mut((n, 0), (n, n)).copy_from(&(-c.transpose()));
        m.view_mut((n, n), (n, n)).copy_from(&a.transpose());
        SymplecticMat::trusted(m)
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(z);
        (&self.m * v).iter().copied().collect()
    }

    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.m)
    }

    pub fn det(&self) -> f64 {
        self.m.determinant()
    }
}

pub fn make_j(d: usize) -> SymplecticMat {
    SymplecticMat::trusted(j_matrix(d))
}

fn check_symmetric(c: &RMat) -> Result<()> {
    if c.nrows() != c.ncols() {
        return Err(Error::DimMismatch("chirp matrix must be square".into()));
    }
    let defect = max_abs(&(c - c.transpose()));
    if defect > 1e-12 * max_abs(c).max(1.0) {
        return Err(Error::NonSymmetric(defect));
    }
    Ok(())
}

/// `V_C = [[I, 0], [C, I]]`.
pub fn make_vc(c: &RMat) -> Result<SymplecticMat> {
    check_symmetric(c)?;
    let d = c.nrows();
    let mut m = RMat::identity(2 * d, 2 * d);
    m.view_mut((d, 0), (d, d)).copy_from(c);
    Ok(SymplecticMat::trusted(m))
}

/// `V_C^T = [[I, C], [0, I]]`.
pub fn make_vc_t(c: &RMat) -> Result<SymplecticMat> {
    Ok(SymplecticMat::trusted(make_vc(c)?.m.transpose()))
}

/// `D_L = [[L^{-1}, 0], [0, L^T]]`.
pub fn make_dl(l: &RMat) -> Result<SymplecticMat> {
    if l.nrows() != l.ncols() {
        return Err(Error::DimMismatch("dilation matrix must be square".into()));
    }
    let d = l.nrows();
    let inv = l.clone().try_inverse().ok_or(Error::SingularL)?;
    if l.determinant().abs() < 1e-14 {
        return Err(Error::SingularL);
    }
    let mut m = RMat::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&inv);
    m.view_mut((d, d), (d, d)).copy_from(&l.transpose());
    Ok(SymplecticMat::trusted(m))
}

/// An element of sp(d): `X J + J X^T = 0`, with block form `[[A, B], [C, -A^T]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMat {
    d: usize,
    m: RMat,
}

impl HamiltonianMat {
    pub fn new(m: RMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimMismatch("Hamiltonian matrix must be square".into()));
        }
        if m.nrows() % 2 != 0 {
            return Err(Error::OddDimension(m.nrows()));
        }
        let d = m.nrows() / 2;
        let j = j_matrix(d);
        let defect = max_abs(&(&m * &j + &j * m.transpose()));
        if defect > 1e-12 * max_abs(&m).max(1.0) {
            return Err(Error::NotHamiltonian(defect));
        }
        let mut h = HamiltonianMat { d, m };
        // store B and C exactly symmetric
        let b = h.b();
        let c = h.c();
        let bs = (&b + b.transpose()) * 0.5;
        let cs = (&c + c.transpose()) * 0.5;
        h.m.view_mut((0, d), (d, d)).copy_from(&bs);
        h.m.view_mut((d, 0), (d, d)).copy_from(&cs);
        Ok(h)
    }

    /// Builds `[[A, B], [C, -A^T]]`.
    pub fn from_blocks(a: &RMat, b: &RMat, c: &RMat) -> Result<Self> {
        check_symmetric(b)?;
        check_symmetric(c)?;
        let d = a.nrows();
        let mut m = RMat::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(a);
        m.view_mut((0, d), (d, d)).copy_from(b);
        m.view_mut((d, 0), (d, d)).copy_from(c);
        m.view_mut((d, d), (d, d)).copy_from(&(-a.transpose()));
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    pub fn matrix(&self) -> &RMat {
        &self.m
    }
    pub fn a(&self) -> RMat {
        self.m.view((0, 0), (self.d, self.d)).into_owned()
    }
    pub fn b(&self) -> RMat {
        self.m.view((0, self.d), (self.d, self.d)).into_owned()
    }
    pub fn c(&self) -> RMat {
        self.m.view((self.d, 0), (self.d, self.d)).into_owned()
    }
}

/// `exp(t S / OMEGA)`.
pub fn hamiltonian_flow(h: &HamiltonianMat, t: f64) -> SymplecticMat {
    hamiltonian_flow_with(h, t, OMEGA)
}

/// Flow with an explicit normalization constant. Uses the Pade
/// scaling-and-squaring exponential.
pub fn hamiltonian_flow_with(h: &HamiltonianMat, t: f64, omega: f64) -> SymplecticMat {
    let x = h.matrix() * (t / omega);
    SymplecticMat::trusted(x.exp())
}

/// Tolerance that `hamiltonian_flow` output is guaranteed to meet.
pub fn flow_tolerance(h: &HamiltonianMat, t: f64, omega: f64) -> f64 {
    1e-10 * (t.abs() * max_abs(h.matrix()) / omega).exp()
}

#[derive(Clone, Copy, Debug)]
pub struct CausticOptions {
    pub t_max: f64,
    pub dt: f64,
    pub refine: f64,
    pub omega: f64,
}

impl Default for CausticOptions {
    fn default() -> Self {
        CausticOptions { t_max: 100.0, dt: 1e-3, refine: 1e-10, omega: OMEGA }
    }
}

fn det_a(s: &RMat, d: usize) -> f64 {
    s.view((0, 0), (d, d)).into_owned().determinant()
}

/// Largest `T* <= t_max` with `det A_t != 0` on `(-T*, T*)`.
pub fn caustic_window(h: &HamiltonianMat, opts: &CausticOptions) -> f64 {
    let d = h.dim();
    let mut best = opts.t_max;
    for dir in [1.0, -1.0] {
        let step = (h.matrix() * (dir * opts.dt / opts.omega)).exp();
        let mut s = RMat::identity(2 * d, 2 * d);
        let mut t = 0.0;
        let mut prev = det_a(&s, d);
        while t < best {
            let t_next = t + opts.dt;
            // recompute exactly every so often to stop drift in the product
            s = if (t_next / opts.dt).round() as u64 % 1024 == 0 {
                (h.matrix() * (dir * t_next / opts.omega)).exp()
            } else {
                &s * &step
            };
            let cur = det_a(&s, d);
            if cur == 0.0 || cur.signum() != prev.signum() {
                let (mut lo, mut hi) = (t, t_next);
                let f = |tt: f64| det_a(&(h.matrix() * (dir * tt / opts.omega)).exp(), d);
                let flo = f(lo);
                while hi - lo > opts.refine {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm.signum() == flo.signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                best = best.min(0.5 * (lo + hi));
                break;
            }
            prev = cur;
            t = t_next;
        }
    }
    best
}

/// A symplectic matrix of dimension 2d (size 4d x 4d) with the 16-block view.
#[derive(Clone, Debug, PartialEq)]
pub struct BigSymplecticMat {
    pub s: SymplecticMat,
}

impl BigSymplecticMat {
    pub fn new(s: SymplecticMat) -> Result<Self> {
        if s.dim() % 2 != 0 {
            return Err(Error::DimMismatch(format!("dimension {} is not even", s.dim())));
        }
        Ok(BigSymplecticMat { s })
    }

    /// Base dimension d (the matrix is 4d x 4d).
    pub fn base_dim(&self) -> usize {
        self.s.dim() / 2
    }

    /// Block `A_{ij}` (1-based indices as in the usual 4 x 4 block layout).
    pub fn block(&self, i: usize, j: usize) -> RMat {
        let d = self.base_dim();
        self.s.matrix().view(((i - 1) * d, (j - 1) * d), (d, d)).into_owned()
    }

    /// `E = [[A11, A13], [A21, A23]]`.
    pub fn e_block(&self) -> RMat {
        let d = self.base_dim();
        let mut e = RMat::zeros(2 * d, 2 * d);
        e.view_mut((0, 0), (d, d)).copy_from(&self.block(1, 1));
        e.view_mut((0, d), (d, d)).copy_from(&self.block(1, 3));
        e.view_mut((d, 0), (d, d)).copy_from(&self.block(2, 1));
        e.view_mut((d, d), (d, d)).copy_from(&self.block(2, 3));
        e
    }
}

/// Tensor lift: the projection of `S1 (x) S2` acting on `f (x) g`.
pub fn lift_tensor(s1: &SymplecticMat, s2: &SymplecticMat) -> Result<BigSymplecticMat> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimMismatch(format!("{} vs {}", s1.dim(), s2.dim())));
    }
    let d = s1.dim();
    let mut m = RMat::zeros(4 * d, 4 * d);
    let place = |m: &mut RMat, bi: usize, bj: usize, blk: &RMat| {
        m.view_mut((bi * d, bj * d), (d, d)).copy_from(blk);
    };
    place(&mut m, 0, 0, &s1.a());
    place(&mut m, 0, 2, &s1.b());
    place(&mut m, 2, 0, &s1.c());
    place(&mut m, 2, 2, &s1.d_block());
    place(&mut m, 1, 1, &s2.a());
    place(&mut m, 1, 3, &s2.b());
    place(&mut m, 3, 1, &s2.c());
    place(&mut m, 3, 3, &s2.d_block());
    BigSymplecticMat::new(SymplecticMat::trusted(m))
}

fn from_block_grid(d: usize, grid: &[[f64; 4]; 4]) -> BigSymplecticMat {
    let mut m = RMat::zeros(4 * d, 4 * d);
    for (bi, row) in grid.iter().enumerate() {
        for (bj, &v) in row.iter().enumerate() {
            for k in 0..d {
                m[(bi * d + k, bj * d + k)] = v;
            }
        }
    }
    BigSymplecticMat { s: SymplecticMat::trusted(m) }
}

/// Projections of the partial Fourier transform, the Rihaczek and the Wigner
/// distribution.
#[derive(Clone, Debug)]
pub struct SpecialProjections {
    pub a_ft2: BigSymplecticMat,
    pub a_0: BigSymplecticMat,
    pub a_half: BigSymplecticMat,
}

pub fn special_projections(d: usize) -> SpecialProjections {
    SpecialProjections {
        a_ft2: from_block_grid(
            d,
            &[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, 1.0, 0.0], [0.0, -1.0, 0.0, 0.0]],
        ),
        a_0: from_block_grid(
            d,
            &[[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 1.0], [-1.0, 1.0, 0.0, 0.0]],
        ),
        a_half: from_block_grid(
            d,
            &[[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.5, -0.5], [0.0, 0.0, 1.0, 1.0], [-1.0, 1.0, 0.0, 0.0]],
        ),
    }
}

/// The 8d x 8d projection relating the Wigner kernel's own Wigner transform
/// to `k_T (x) conj(k_T) (x) Phi`. Its E-block is `A_{1/2} / 2`.
pub fn kernel_projection(d: usize) -> BigSymplecticMat {
    const H: f64 = 0.5;
    const Q: f64 = 0.25;
    let grid: [[f64; 8]; 8] = [
        [Q, Q, H, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, H, Q, -Q, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, H, H, -H, 0.0],
        [-H, H, 0.0, 0.0, 0.0, 0.0, 0.0, -H],
        [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        [-H, -H, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, -H, H, 0.0, 0.0],
    ];
    let mut m = RMat::zeros(8 * d, 8 * d);
    for (bi, row) in grid.iter().enumerate() {
        for (bj, &v) in row.iter().enumerate() {
            for k in 0..d {
                m[(bi * d + k, bj * d + k)] = v;
            }
        }
    }
    BigSymplecticMat { s: SymplecticMat::trusted(m) }
}

pub fn shift_invertible(a: &BigSymplecticMat) -> bool {
    a.e_block().determinant().abs() > 1e-10
}

/// Block conditions making `A A_0^{-1}` upper block triangular.
pub fn admissible_quantization(a: &BigSymplecticMat) -> bool {
    let tol = 1e-12;
    let close = |x: RMat, y: RMat| max_abs(&(x - y)) <= tol;
    close(a.block(3, 2), -a.block(3, 1))
        && close(a.block(4, 2), -a.block(4, 1))
        && close(a.block(3, 4), a.block(3, 3))
        && close(a.block(4, 4), a.block(4, 3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> RMat {
        RMat::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn j_squares_to_minus_identity() {
        for d in 1..4 {
            let j = make_j(d);
            let jj = j.matrix() * j.matrix();
            assert!(max_abs(&(jj + RMat::identity(2 * d, 2 * d))) == 0.0);
            assert!(is_symplectic(j.matrix(), 0.0).unwrap());
        }
        assert_eq!(make_j(1).matrix(), &m2(0.0, 1.0, -1.0, 0.0));
    }

    #[test]
    fn generators() {
        let vc = make_vc(&RMat::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(vc.matrix(), &m2(1.0, 0.0, 2.0, 1.0));
        assert!(is_symplectic(vc.matrix(), 1e-14).unwrap());
        assert_eq!(make_vc(&RMat::zeros(2, 2)).unwrap().matrix(), &RMat::identity(4, 4));
        assert_eq!(make_dl(&RMat::identity(2, 2)).unwrap().matrix(), &RMat::identity(4, 4));
        assert!(matches!(make_vc(&m2(0.0, 1.0, 0.0, 0.0)), Err(Error::NonSymmetric(_))));
        assert!(matches!(make_dl(&m2(1.0, 1.0, 1.0, 1.0)), Err(Error::SingularL)));
    }

    #[test]
    fn rejects_non_symplectic() {
        assert!(!is_symplectic(&m2(1.0, 1.0, 1.0, 1.0), 1e-12).unwrap());
        assert!(matches!(is_symplectic(&RMat::zeros(3, 3), 1e-12), Err(Error::OddDimension(3))));
        assert!(SymplecticMat::new(m2(2.0, 0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn inverse_is_exact() {
        let s = make_vc(&RMat::from_element(1, 1, 3.0))
            .unwrap()
            .mul(&make_dl(&RMat::from_element(1, 1, 0.5)).unwrap())
            .mul(&make_j(1));
        let prod = s.mul(&s.inverse());
        assert!(max_abs(&(prod.matrix() - RMat::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn free_particle_flow() {
        let h = HamiltonianMat::from_blocks(&RMat::zeros(1, 1), &RMat::identity(1, 1), &RMat::zeros(1, 1)).unwrap();
        for t in [0.3, 1.0, 7.5] {
            let s = hamiltonian_flow(&h, t);
            let expect = m2(1.0, t / (2.0 * PI), 0.0, 1.0);
            assert!(max_abs(&(s.matrix() - expect)) < 1e-14);
        }
    }

    #[test]
    fn oscillator_flow_is_rotation() {
        let h = HamiltonianMat::from_blocks(&RMat::zeros(1, 1), &RMat::identity(1, 1), &(-RMat::identity(1, 1))).unwrap();
        for t in [0.5, 3.0, PI * PI, 20.0] {
            let s = hamiltonian_flow(&h, t);
            let th = t / (2.0 * PI);
            let expect = m2(th.cos(), th.sin(), -th.sin(), th.cos());
            assert!(max_abs(&(s.matrix() - expect)) < 1e-12, "t={t}");
            assert!(is_symplectic(s.matrix(), flow_tolerance(&h, t, OMEGA)).unwrap());
        }
    }

    #[test]
    fn caustics() {
        let z = RMat::zeros(1, 1);
        let one = RMat::identity(1, 1);
        let free = HamiltonianMat::from_blocks(&z, &one, &z).unwrap();
        assert_eq!(caustic_window(&free, &CausticOptions::default()), 100.0);
        let ho = HamiltonianMat::from_blocks(&z, &one, &(-&one)).unwrap();
        let t = caustic_window(&ho, &CausticOptions::default());
        assert!((t - PI * PI).abs() < 1e-8, "{t}");
        let rot = HamiltonianMat::from_blocks(&z, &(&one * (2.0 * PI)), &(&one * (-2.0 * PI))).unwrap();
        let t = caustic_window(&rot, &CausticOptions::default());
        assert!((t - PI / 2.0).abs() < 1e-8, "{t}");
    }

    #[test]
    fn projections() {
        let p = special_projections(1);
        for a in [&p.a_ft2, &p.a_0, &p.a_half] {
            assert!(is_symplectic(a.s.matrix(), 1e-14).unwrap());
        }
        assert!(shift_invertible(&p.a_half));
        // E of the Rihaczek projection is [[1, 0], [0, 0]]
        assert!(!shift_invertible(&p.a_0));
        assert_eq!(p.a_0.e_block().determinant(), 0.0);
        assert!(!shift_invertible(&BigSymplecticMat::new(SymplecticMat::identity(2)).unwrap()));
        assert!(admissible_quantization(&p.a_half));
        assert!(admissible_quantization(&p.a_0));
        let jj = lift_tensor(&make_j(1), &make_j(1)).unwrap();
        assert!(!admissible_quantization(&jj));
        let k = kernel_projection(1);
        assert!(is_symplectic(k.s.matrix(), 1e-14).unwrap());
        assert!(max_abs(&(k.e_block() - p.a_half.s.matrix() * 0.5)) == 0.0);
    }

    #[test]
    fn lift_of_j_has_interleaved_blocks() {
        let l = lift_tensor(&make_j(1), &make_j(1)).unwrap();
        let expect = RMat::from_row_slice(
            4,
            4,
            &[0., 0., 1., 0., 0., 0., 0., 1., -1., 0., 0., 0., 0., -1., 0., 0.],
        );
        assert_eq!(l.s.matrix(), &expect);
        let e = l.e_block();
        // E of lift(S, S) interleaves the A and B blocks
        assert_eq!(e, RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    }
}
