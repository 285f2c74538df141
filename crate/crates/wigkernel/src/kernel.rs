//! Operator kernels `k_T` and their Wigner kernels `k`, with
//! `K W(f, g) = W(T f, T g)`.
//!
//! An [`OperatorKernel`] stores the matrix `M` with `T f = h M f`. The
//! [`WignerKernel`] is an `N x N` matrix over the Wigner lattice
//! (`N = 2n * n/2 = n^2`): row `z = (x, xi)`, column `w = (y, eta)`, and
//! `(K F)(z) = cell * sum_w k(z, w) F(w)` with `cell = 1/(2n)`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metaplectic::Word;
use crate::signal::{Axis, Grid, PhaseField, Signal, C64};
use crate::transforms::{wigner, wigner_lattice, Wigner2};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Default largest `n` for which Wigner kernels are built.
pub const DEFAULT_KERNEL_CAP: usize = 64;

pub type CMat = DMatrix<C64>;

/// Discrete Schwartz kernel: `(T f)_i = h sum_j M_ij f_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorKernel {
    pub grid: Grid,
    /// Row-major `n x n`.
    pub matrix: Vec<C64>,
}

impl OperatorKernel {
    pub fn new(grid: Grid, matrix: Vec<C64>) -> Result<OperatorKernel> {
        if grid.d != 1 {
            return Err(Error::DimMismatch("operator kernels are built for d = 1".into()));
        }
        if matrix.len() != grid.n * grid.n {
            return Err(Error::DimMismatch(format!("{} entries for n = {}", matrix.len(), grid.n)));
        }
        if matrix.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Format("non-finite kernel entry".into()));
        }
        Ok(OperatorKernel { grid, matrix })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// The identity operator (`M = I / h`).
    pub fn identity(grid: Grid) -> OperatorKernel {
        let n = grid.n;
        let mut m = vec![ZERO; n * n];
        for i in 0..n {
            m[i * n + i] = C64::new(1.0 / grid.h, 0.0);
        }
        OperatorKernel { grid, matrix: m }
    }

    /// Kernel from samples `k_T(x_i, y_j)`.
    pub fn from_fn(grid: Grid, k: impl Fn(f64, f64) -> C64) -> OperatorKernel {
        let n = grid.n;
        let matrix = (0..n * n).map(|i| k(grid.x(i / n), grid.x(i % n))).collect();
        OperatorKernel { grid, matrix }
    }

    /// Kernel of a linear map, assembled column by column from one-hot inputs.
    pub fn from_linear_map<F>(grid: Grid, map: F) -> Result<OperatorKernel>
    where
        F: Fn(&Signal) -> Result<Signal> + Sync,
    {
        let n = grid.n;
        let cols: Vec<Signal> = (0..n).into_par_iter().map(|j| map(&Signal::one_hot(grid, j))).collect::<Result<_>>()?;
        let mut matrix = vec![ZERO; n * n];
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                matrix[i * n + j] = c.values[i] / grid.h;
            }
        }
        OperatorKernel::new(grid, matrix)
    }

    pub fn from_word(grid: Grid, word: &Word) -> Result<OperatorKernel> {
        OperatorKernel::from_linear_map(grid, |f| word.apply(f))
    }

    /// The matrix of `T` acting on sample vectors (`h M`).
    pub fn action_matrix(&self) -> CMat {
        let n = self.n();
        CMat::from_row_slice(n, n, &self.matrix) * C64::new(self.grid.h, 0.0)
    }

    fn from_action(grid: Grid, a: &CMat) -> OperatorKernel {
        let n = grid.n;
        let mut matrix = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                matrix.push(a[(i, j)] / grid.h);
            }
        }
        OperatorKernel { grid, matrix }
    }

    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        self.grid.ensure_same(&f.grid)?;
        let n = self.n();
        let h = self.grid.h;
        let values = (0..n)
            .map(|i| self.matrix[i * n..(i + 1) * n].iter().zip(&f.values).map(|(m, v)| m * v).sum::<C64>() * h)
            .collect();
        Ok(Signal { grid: self.grid, values })
    }

    /// Kernel of `self o other`.
    pub fn compose(&self, other: &OperatorKernel) -> Result<OperatorKernel> {
        self.grid.ensure_same(&other.grid)?;
        Ok(OperatorKernel::from_action(self.grid, &(self.action_matrix() * other.action_matrix())))
    }

    /// Kernel of `T^*`: `conj(k_T(y, x))`.
    pub fn adjoint(&self) -> OperatorKernel {
        let n = self.n();
        let mut matrix = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                matrix[i * n + j] = self.matrix[j * n + i].conj();
            }
        }
        OperatorKernel { grid: self.grid, matrix }
    }

    /// 2-norm condition number of the action matrix.
    pub fn condition_number(&self) -> f64 {
        let sv = self.action_matrix().singular_values();
        sv.max() / sv.min()
    }

    /// Kernel of `T^{-1}`; rejects condition numbers above `1e8`.
    pub fn inverse(&self) -> Result<OperatorKernel> {
        let cond = self.condition_number();
        if !(cond <= 1e8) {
            return Err(Error::IllConditioned(cond));
        }
        let inv = self.action_matrix().try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))?;
        Ok(OperatorKernel::from_action(self.grid, &inv))
    }

    /// Operator norm on `L^2` of the grid.
    pub fn op_norm(&self) -> f64 {
        self.action_matrix().singular_values().max()
    }

    /// `||k_T||_2 = h ||M||_F`.
    pub fn l2_norm(&self) -> f64 {
        self.grid.h * self.matrix.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `k_T` as a function on the doubled grid.
    pub fn as_signal(&self) -> Signal {
        Signal { grid: Grid { d: 2, ..self.grid }, values: self.matrix.clone() }
    }

    pub fn axes(&self) -> Vec<Axis> {
        vec![self.grid.axis(); 2]
    }
}

/// Discrete Wigner kernel on the Wigner lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerKernel {
    pub grid: Grid,
    /// Row-major `N x N`, `N = n^2`; as a rank-4 array the axes are
    /// `(x, xi, y, eta)`.
    pub values: Vec<C64>,
    pub cell: f64,
}

impl WignerKernel {
    /// Side `N` of the kernel matrix.
    pub fn side(&self) -> usize {
        self.grid.n * self.grid.n
    }

    pub fn zeros(grid: Grid) -> WignerKernel {
        let side = grid.n * grid.n;
        WignerKernel { grid, values: vec![ZERO; side * side], cell: 1.0 / (2 * grid.n) as f64 }
    }

    /// Axes `(x, xi, y, eta)`.
    pub fn axes(&self) -> Vec<Axis> {
        let x = Axis::centered(2 * self.grid.n, self.grid.h / 2.0);
        let xi = Axis::centered(self.grid.n / 2, self.grid.dual_step());
        vec![x, xi, x, xi]
    }

    /// `||k||_{L^2}` with the phase-space measure on both variables.
    pub fn l2_norm(&self) -> f64 {
        self.cell * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    fn ensure_same(&self, other: &WignerKernel) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::LatticeMismatch(format!("kernels on n = {} and n = {}", self.grid.n, other.grid.n)));
        }
        Ok(())
    }

    /// `(K F)(z) = cell sum_w k(z, w) F(w)`.
    pub fn apply(&self, f: &PhaseField) -> Result<PhaseField> {
        let lattice = wigner_lattice(self.grid);
        f.ensure_same_lattice(&lattice)?;
        let side = self.side();
        let mut out = lattice;
        let cell = self.cell;
        out.values.par_iter_mut().enumerate().for_each(|(z, o)| {
            let row = &self.values[z * side..(z + 1) * side];
            *o = row.iter().zip(&f.values).map(|(k, v)| k * v).sum::<C64>() * cell;
        });
        Ok(out)
    }

    /// `k(z, w) = cell sum_u k1(z, u) k2(u, w)`.
    pub fn compose(&self, other: &WignerKernel) -> Result<WignerKernel> {
        self.ensure_same(other)?;
        let side = self.side();
        let mut out = WignerKernel::zeros(self.grid);
        let rows_per = 64.max(side / (4 * rayon::current_num_threads().max(1)));
        let cell = self.cell;
        out.values.par_chunks_mut(rows_per * side).enumerate().for_each(|(blk, chunk)| {
            let r0 = blk * rows_per;
            let rows = chunk.len() / side;
            let a = &self.values[r0 * side..(r0 + rows) * side];
            gemm(rows, side, side, cell, a, &other.values, chunk);
        });
        Ok(out)
    }

    /// Kernel of `T^*`: `conj(k(w, z))`.
    pub fn adjoint(&self) -> WignerKernel {
        let side = self.side();
        let mut values = vec![ZERO; side * side];
        values.par_chunks_mut(side).enumerate().for_each(|(z, row)| {
            for (w, v) in row.iter_mut().enumerate() {
                *v = self.values[w * side + z].conj();
            }
        });
        WignerKernel { grid: self.grid, values, cell: self.cell }
    }

    /// Axis-pair transpose `k(w, z)` without conjugation.
    pub fn transpose(&self) -> WignerKernel {
        let side = self.side();
        let mut values = vec![ZERO; side * side];
        values.par_chunks_mut(side).enumerate().for_each(|(z, row)| {
            for (w, v) in row.iter_mut().enumerate() {
                *v = self.values[w * side + z];
            }
        });
        WignerKernel { grid: self.grid, values, cell: self.cell }
    }

    /// Relative Frobenius distance.
    pub fn rel_diff(&self, other: &WignerKernel) -> Result<f64> {
        self.ensure_same(other)?;
        let num: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = other.values.iter().map(|v| v.norm_sqr()).sum();
        Ok((num / den.max(1e-300)).sqrt())
    }

    /// Wigner-lattice coordinates `(x, xi)` of row/column index `z`.
    pub fn point(&self, z: usize) -> (f64, f64) {
        let half = self.grid.n / 2;
        let (s, k) = (z / half, z % half);
        (
            (s as f64 - self.grid.n as f64) * self.grid.h / 2.0,
            (k as f64 - (self.grid.n / 4) as f64) * self.grid.dual_step(),
        )
    }
}

/// `c += alpha * a * b` for row-major complex matrices (`a: m x k`, `b: k x n`).
pub(crate) fn gemm(m: usize, k: usize, n: usize, alpha: f64, a: &[C64], b: &[C64], c: &mut [C64]) {
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; the slices cover
    // the stated row-major extents.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [alpha, 0.0],
            a.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
}

/// Wigner kernel with the default size cap.
pub fn wigner_kernel(t: &OperatorKernel) -> Result<WignerKernel> {
    wigner_kernel_capped(t, DEFAULT_KERNEL_CAP)
}

/// `k = T_p W k_T`: the 2-D Wigner of `k_T`, streamed one midpoint row at a
/// time, with the frequency of the second variable reflected. Peak memory is
/// the output itself.
pub fn wigner_kernel_capped(t: &OperatorKernel, cap: usize) -> Result<WignerKernel> {
    let n = t.n();
    if n > cap {
        return Err(Error::KernelTooLarge { n, cap });
    }
    let kt = t.as_signal();
    let w2 = Wigner2::new(kt.grid)?;
    let mut out = WignerKernel::zeros(t.grid);
    let half = n / 2;
    let side = out.side();
    // rows z = (s1, k1) for fixed s1 form one contiguous chunk
    out.values.par_chunks_mut(half * side).enumerate().for_each(|(s1, chunk)| {
        let mut buf = vec![ZERO; half * half];
        for s2 in 0..2 * n {
            w2.block(&kt.values, &kt.values, s1, s2, &mut buf);
            let sign = if s2 % 2 == 1 { -1.0 } else { 1.0 };
            for k1 in 0..half {
                let row = &mut chunk[k1 * side..(k1 + 1) * side];
                let src = &buf[k1 * half..(k1 + 1) * half];
                // eta -> -eta: k2 = 0 maps to itself with the antiperiodic sign
                row[s2 * half] = src[0] * sign;
                for k2 in 1..half {
                    row[s2 * half + half - k2] = src[k2];
                }
            }
        }
    });
    Ok(out)
}

/// `||K W(f, g) - W(T f, T g)|| / (||T f|| ||T g||)`.
pub fn intertwining_defect(t: &OperatorKernel, k: &WignerKernel, f: &Signal, g: &Signal) -> Result<f64> {
    let (tf, tg) = (t.apply(f)?, t.apply(g)?);
    let lhs = k.apply(&wigner(f, g)?)?;
    let rhs = wigner(&tf, &tg)?;
    Ok(lhs.sub(&rhs)?.norm() / (tf.norm() * tg.norm() + 1e-300))
}

/// Wigner kernel of `T^{-1}`.
pub fn inverse_kernel(t: &OperatorKernel) -> Result<WignerKernel> {
    wigner_kernel(&t.inverse()?)
}

/// Ratios `||k||_{M^2_m} / ||k_T||^2_{M^2_m}` for `m = 1`, `v_s`, `1 (x) v_s`.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct NormEquivalenceReport {
    pub s: f64,
    /// Exactly 1 by the Moyal identity.
    pub ratio_one: f64,
    pub ratio_vs: f64,
    pub ratio_one_vs: f64,
}

/// Compares modulation norms of the Wigner kernel with squared norms of the
/// Schwartz kernel.
pub fn norm_equivalence_experiment(t: &OperatorKernel, s: f64) -> Result<NormEquivalenceReport> {
    use crate::modnorm::{mod_norm, NormOptions, Weight};
    let k = wigner_kernel_capped(t, crate::fio::FIO_KERNEL_CAP)?;
    let opts = NormOptions::default();
    let ratio = |m: Weight| -> Result<f64> {
        let num = mod_norm(&k, 2.0, 2.0, m, &opts)?.value;
        let den = mod_norm(t, 2.0, 2.0, m, &opts)?.value;
        Ok(num / (den * den))
    };
    Ok(NormEquivalenceReport {
        s,
        ratio_one: ratio(Weight::One)?,
        ratio_vs: ratio(Weight::Vs(s))?,
        ratio_one_vs: ratio(Weight::OneTensorVs(s))?,
    })
}
