//! Thin wrappers over rustfft: cached plans, 1-D and 2-D transforms.
//!
//! Inverse transforms are normalized by 1/N so that `ifft(fft(x)) == x`.

use std::cell::RefCell;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// In-place forward DFT.
pub fn fft_in_place(buf: &mut [Complex64]) {
    plan_forward(buf.len()).process(buf);
}

/// In-place inverse DFT, scaled by 1/N.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plan_inverse(n).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Forward 2-D DFT (rows then columns).
pub fn fft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    transform2(a, true)
}

/// Inverse 2-D DFT, scaled by 1/(rows*cols).
pub fn ifft2(a: &Array2<Complex64>) -> Array2<Complex64> {
    transform2(a, false)
}

fn transform2(a: &Array2<Complex64>, forward: bool) -> Array2<Complex64> {
    let (rows, cols) = a.dim();
    let mut out = a.clone();
    let row_plan = if forward {
        plan_forward(cols)
    } else {
        plan_inverse(cols)
    };
    for mut row in out.rows_mut() {
        let slice = row.as_slice_mut().expect("row-major layout");
        row_plan.process(slice);
    }
    let col_plan = if forward {
        plan_forward(rows)
    } else {
        plan_inverse(rows)
    };
    let mut col_buf = vec![Complex64::default(); rows];
    for j in 0..cols {
        for i in 0..rows {
            col_buf[i] = out[[i, j]];
        }
        col_plan.process(&mut col_buf);
        for i in 0..rows {
            out[[i, j]] = col_buf[i];
        }
    }
    if !forward {
        let scale = 1.0 / (rows * cols) as f64;
        out.mapv_inplace(|v| v * scale);
    }
    out
}

/// Smallest power of two >= n.
pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}
