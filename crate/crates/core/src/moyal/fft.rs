use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

/// Per-thread plan cache.
pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((len, inverse))
            .or_insert_with(|| if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) })
            .clone()
    })
}

/// Unnormalized FFT along one axis of a row-major array with equal sides.
pub(crate) fn fft_axis(data: &mut [Complex64], side: usize, dim: usize, axis: usize, inverse: bool) {
    let f = plan(side, inverse);
    let stride = side.pow((dim - 1 - axis) as u32);
    if stride == 1 {
        f.process(data);
        return;
    }
    let block = stride * side;
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    for start in (0..data.len()).step_by(block) {
        for off in 0..stride {
            for j in 0..side {
                line[j] = data[start + off + j * stride];
            }
            f.process(&mut line);
            for j in 0..side {
                data[start + off + j * stride] = line[j];
            }
        }
    }
}

pub(crate) fn fft_all(data: &mut [Complex64], side: usize, dim: usize, inverse: bool) {
    for axis in 0..dim {
        fft_axis(data, side, dim, axis, inverse);
    }
}

/// Applies an (rows × side) matrix along one axis; returns the new array whose
/// extent on that axis is `rows`. `shape` is updated in place.
pub(crate) fn apply_axis_matrix(
    data: &[Complex64],
    shape: &mut [usize],
    axis: usize,
    matrix: &[Complex64],
    rows: usize,
) -> Vec<Complex64> {
    let side = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows * inner];
    for o in 0..outer {
        let src = &data[o * side * inner..(o + 1) * side * inner];
        let dst = &mut out[o * rows * inner..(o + 1) * rows * inner];
        for r in 0..rows {
            let row = &matrix[r * side..(r + 1) * side];
            let d = &mut dst[r * inner..(r + 1) * inner];
            for (j, &w) in row.iter().enumerate() {
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let s = &src[j * inner..(j + 1) * inner];
                for i in 0..inner {
                    d[i] += w * s[i];
                }
            }
        }
    }
    shape[axis] = rows;
    out
}
