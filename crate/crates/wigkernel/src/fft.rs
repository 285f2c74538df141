//! Centered discrete Fourier transforms along one axis of a row-major array.
//!
//! The raw centered transform is `X_k = sum_j x_j exp(-+2 pi i (k - N/2)(j - N/2) / N)`,
//! realized with one FFT and sign twiddles (N even).

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub type C64 = Complex<f64>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place raw centered transform of a single line.
pub fn centered_raw(buf: &mut [C64], inverse: bool) {
    let n = buf.len();
    assert!(n % 2 == 0, "centered transform needs an even length, got {n}");
    for (j, v) in buf.iter_mut().enumerate() {
        if j % 2 == 1 {
            *v = -*v;
        }
    }
    plan(n, inverse).process(buf);
    let global = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    for (k, v) in buf.iter_mut().enumerate() {
        let s = if k % 2 == 1 { -global } else { global };
        *v *= s;
    }
}

/// Plain (uncentered, unscaled) FFT of one line.
pub fn raw_fft(buf: &mut [C64], inverse: bool) {
    plan(buf.len(), inverse).process(buf);
}

/// Plain forward/inverse FFT over every axis of a row-major array.
pub fn raw_fft_nd(data: &mut [C64], shape: &[usize], inverse: bool) {
    for axis in 0..shape.len() {
        for_each_line(data, shape, axis, |line| raw_fft(line, inverse));
    }
}

/// Applies `op` to every line of `data` (row-major, `shape`) along `axis`.
pub fn for_each_line(data: &mut [C64], shape: &[usize], axis: usize, mut op: impl FnMut(&mut [C64])) {
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![C64::new(0.0, 0.0); len];
    for o in 0..outer {
        let base = o * len * inner;
        for i in 0..inner {
            for (j, v) in line.iter_mut().enumerate() {
                *v = data[base + j * inner + i];
            }
            op(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[base + j * inner + i] = *v;
            }
        }
    }
}

/// Centered DFT along `axis` with quadrature `step`: `X = step * raw`.
pub fn dft_axis(data: &mut [C64], shape: &[usize], axis: usize, step: f64) {
    for_each_line(data, shape, axis, |line| {
        centered_raw(line, false);
        for v in line.iter_mut() {
            *v *= step;
        }
    });
}

/// Inverse of [`dft_axis`]: `x = raw_inv / (N * step)`.
pub fn idft_axis(data: &mut [C64], shape: &[usize], axis: usize, step: f64) {
    let scale = 1.0 / (shape[axis] as f64 * step);
    for_each_line(data, shape, axis, |line| {
        centered_raw(line, true);
        for v in line.iter_mut() {
            *v *= scale;
        }
    });
}
